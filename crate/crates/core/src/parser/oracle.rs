//! Dynamic oracle for the arc-hybrid system.
//!
//! For a projective gold tree, the cost of a transition is the number of
//! gold arcs it newly makes unreachable, plus one if it assigns a wrong
//! head outright. Summing costs along any derivation gives exactly the
//! terminal unlabeled attachment loss, so per-state cost differences equal
//! differences of best-completion losses. Each cost is computable by
//! counting arcs that cross the popped or buried word, in time linear in
//! the remaining sentence.
//!
//! Two cheap short circuits identify states where one action is uniquely
//! optimal (the buffer front is the gold head of the stack top, or vice
//! versa); projectivity plus acyclicity make both strict, which the
//! brute-force verifier below re-checks from first principles.

use std::collections::{HashMap, HashSet, VecDeque};

use rand::Rng;

use super::state::{Configuration, GoldTree, ParseAction, ALL_ACTIONS};
use crate::error::{Error, Result};

/// Sentinel cost reported for transitions that are invalid in a state.
pub const INVALID_COST: u32 = 100;

/// Per-transition oracle costs, indexed in tag order by `as_array`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ActionCosts {
    pub shift: u32,
    pub right: u32,
    pub left: u32,
}

impl ActionCosts {
    pub fn as_array(&self) -> [u32; 3] {
        [self.shift, self.right, self.left]
    }

    pub fn get(&self, action: ParseAction) -> u32 {
        self.as_array()[action.id() as usize]
    }
}

/// Argmin over valid actions; ties go to the latest tag, so reduce-left
/// beats reduce-right beats shift.
fn argmin_later(costs: [u32; 3], valid: [bool; 3]) -> ParseAction {
    let mut best: Option<(u32, ParseAction)> = None;
    for &action in &ALL_ACTIONS {
        if !valid[action.id() as usize] {
            continue;
        }
        let c = costs[action.id() as usize];
        if best.is_none_or(|(bc, _)| c <= bc) {
            best = Some((c, action));
        }
    }
    best.expect("non-terminal states always have a valid action").1
}

fn validity(cfg: &Configuration) -> [bool; 3] {
    [
        cfg.is_valid(ParseAction::Shift),
        cfg.is_valid(ParseAction::ReduceRight),
        cfg.is_valid(ParseAction::ReduceLeft),
    ]
}

/// True when shifting is uniquely optimal: the front's gold head is the
/// stack top, so the front must get on the stack to be attached later.
fn shift_short_circuit(cfg: &Configuration, gold: &GoldTree) -> bool {
    cfg.is_valid(ParseAction::Shift)
        && cfg.stack_depth() >= 2
        && gold.head(cfg.buffer_front()) == cfg.stack_at(0).expect("depth >= 2")
}

/// True when reduce-left is uniquely optimal: the stack top's gold head is
/// the buffer front, and projectivity rules out any competing arc.
fn left_short_circuit(cfg: &Configuration, gold: &GoldTree) -> bool {
    cfg.is_valid(ParseAction::ReduceLeft)
        && gold.head(cfg.stack_at(0).expect("reduce-left implies depth >= 2")) == cfg.buffer_front()
}

/// Oracle costs with the short circuits applied: when one fires, the
/// chosen action reports 0 and everything else the invalid sentinel.
pub fn oracle_costs(cfg: &Configuration, gold: &GoldTree) -> ActionCosts {
    assert_eq!(gold.len(), cfg.n(), "gold tree and state sentence lengths");
    if shift_short_circuit(cfg, gold) {
        return ActionCosts {
            shift: 0,
            right: INVALID_COST,
            left: INVALID_COST,
        };
    }
    if left_short_circuit(cfg, gold) {
        return ActionCosts {
            shift: INVALID_COST,
            right: INVALID_COST,
            left: 0,
        };
    }
    oracle_costs_full(cfg, gold)
}

/// Full counted costs for every valid transition; invalid ones get the
/// sentinel. Exact for projective gold trees.
pub fn oracle_costs_full(cfg: &Configuration, gold: &GoldTree) -> ActionCosts {
    assert_eq!(gold.len(), cfg.n(), "gold tree and state sentence lengths");
    let n = cfg.n();
    let front = cfg.buffer_front();
    let mut costs = ActionCosts {
        shift: INVALID_COST,
        right: INVALID_COST,
        left: INVALID_COST,
    };

    if cfg.is_valid(ParseAction::Shift) {
        // Burying the front under the top severs gold arcs between the
        // front and anything below the top, and the top-headed arc to the
        // front (the front can never attach leftward to the top once a
        // newer word separates them).
        let top = cfg.stack_at(0).expect("stack holds at least the root");
        let mut c = 0;
        for &u in &cfg.stack()[..cfg.stack_depth() - 1] {
            if gold.head(u) == front || gold.head(front) == u {
                c += 1;
            }
        }
        if cfg.stack_depth() >= 2 && gold.head(top) == front {
            c += 1;
        }
        costs.shift = c;
    }

    if cfg.is_valid(ParseAction::ReduceRight) {
        // Popping the top toward the stack loses its gold head if that
        // head is at or past the front, and every gold dependent of the
        // top still in the buffer.
        let top = cfg.stack_at(0).expect("validity implies depth >= 2");
        let mut c = 0;
        let h = gold.head(top);
        if h >= front && h <= n {
            c += 1;
        }
        for i in front..=n {
            if gold.head(i) == top {
                c += 1;
            }
        }
        costs.right = c;
    }

    if cfg.is_valid(ParseAction::ReduceLeft) {
        // Popping the top toward the front loses arcs between the top and
        // words strictly past the front, the arc from the top down to the
        // front, and the arc from the item below if that item is the top's
        // gold head.
        let top = cfg.stack_at(0).expect("validity implies depth >= 2");
        let below = cfg.stack_at(1).expect("validity implies depth >= 2");
        let mut c = 0;
        for i in front + 1..=n {
            if gold.head(i) == top || gold.head(top) == i {
                c += 1;
            }
        }
        if gold.head(front) == top {
            c += 1;
        }
        if gold.head(top) == below {
            c += 1;
        }
        costs.left = c;
    }

    costs
}

/// The reference action: short-circuit if possible, otherwise the argmin
/// of the counted costs with ties resolved toward the latest tag.
pub fn oracle_action(cfg: &Configuration, gold: &GoldTree) -> ParseAction {
    if shift_short_circuit(cfg, gold) {
        return ParseAction::Shift;
    }
    if left_short_circuit(cfg, gold) {
        return ParseAction::ReduceLeft;
    }
    let costs = oracle_costs_full(cfg, gold);
    argmin_later(costs.as_array(), validity(cfg))
}

/// Immediate wrong-head increment of a transition: 1 if it attaches a word
/// to a non-gold head, 0 otherwise (shift attaches nothing).
fn immediate_loss(stack: &[usize], front: usize, gold: &GoldTree, action: ParseAction) -> u32 {
    match action {
        ParseAction::Shift => 0,
        ParseAction::ReduceRight => {
            let top = stack[stack.len() - 1];
            let below = stack[stack.len() - 2];
            u32::from(gold.head(top) != below)
        }
        ParseAction::ReduceLeft => {
            let top = stack[stack.len() - 1];
            u32::from(gold.head(top) != front)
        }
    }
}

type Memo = HashMap<(Vec<usize>, usize), u32>;

/// Minimum total future wrong-head count from a (stack, front) state,
/// over all completions. Exponential without the memo; intended for short
/// sentences, where the memoized state space is tiny.
fn completion_loss(stack: &[usize], front: usize, n: usize, gold: &GoldTree, memo: &mut Memo) -> u32 {
    if front > n && stack.len() == 1 {
        return 0;
    }
    let key = (stack.to_vec(), front);
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let mut best = u32::MAX;
    if front <= n {
        let mut next = stack.to_vec();
        next.push(front);
        best = best.min(completion_loss(&next, front + 1, n, gold, memo));
    }
    if stack.len() >= 2 {
        let inc = immediate_loss(stack, front, gold, ParseAction::ReduceRight);
        let next = &stack[..stack.len() - 1];
        best = best.min(inc + completion_loss(next, front, n, gold, memo));
        if front <= n {
            let inc = immediate_loss(stack, front, gold, ParseAction::ReduceLeft);
            best = best.min(inc + completion_loss(next, front, n, gold, memo));
        }
    }
    memo.insert(key, best);
    best
}

/// Brute-force minimum completion loss of a state, for cross-checking the
/// counted costs.
pub fn min_completion_loss(cfg: &Configuration, gold: &GoldTree) -> u32 {
    assert_eq!(gold.len(), cfg.n(), "gold tree and state sentence lengths");
    let mut memo = Memo::new();
    completion_loss(cfg.stack(), cfg.buffer_front(), cfg.n(), gold, &mut memo)
}

/// Statistics from an oracle verification sweep.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OracleCheckReport {
    pub trees: usize,
    pub configs: usize,
}

/// Checks the counted oracle against brute force at every state reachable
/// from the initial one: min-subtracted valid costs must match the
/// brute-force completion-loss differences exactly, invalid entries must
/// carry the sentinel, and both the short-circuit vector and the counted
/// vector must pick the brute-force argmin under the tie-break. The gold
/// tree must be projective.
pub fn verify_tree(gold: &GoldTree) -> Result<usize> {
    if !gold.is_projective() {
        return Err(Error::Contract(
            "oracle verification requires a projective gold tree".into(),
        ));
    }
    let n = gold.len();
    let mut memo = Memo::new();
    let mut visited: HashSet<(Vec<usize>, usize)> = HashSet::new();
    let mut queue: VecDeque<Configuration> = VecDeque::new();
    let initial = Configuration::new(n);
    visited.insert((initial.stack().to_vec(), initial.buffer_front()));
    queue.push_back(initial);
    let mut checked = 0;

    while let Some(cfg) = queue.pop_front() {
        if cfg.is_terminal() {
            continue;
        }
        checked += 1;
        let valid = validity(&cfg);
        let full = oracle_costs_full(&cfg, gold);
        let sc = oracle_costs(&cfg, gold);

        // Brute-force cost of each valid action: immediate wrong head plus
        // the best completion afterwards.
        let mut brute = [u32::MAX; 3];
        for &action in &ALL_ACTIONS {
            if !valid[action.id() as usize] {
                if full.get(action) != INVALID_COST {
                    return Err(Error::Contract(format!(
                        "invalid {} must cost the sentinel, got {}",
                        action.name(),
                        full.get(action)
                    )));
                }
                continue;
            }
            let mut child = cfg.clone();
            child.apply(action, 0)?;
            let inc = immediate_loss(cfg.stack(), cfg.buffer_front(), gold, action);
            brute[action.id() as usize] = inc
                + completion_loss(child.stack(), child.buffer_front(), n, gold, &mut memo);
            if !visited.contains(&(child.stack().to_vec(), child.buffer_front())) {
                visited.insert((child.stack().to_vec(), child.buffer_front()));
                queue.push_back(child);
            }
        }

        let fmin = full
            .as_array()
            .iter()
            .zip(valid.iter())
            .filter(|&(_, &v)| v)
            .map(|(&c, _)| c)
            .min()
            .expect("non-terminal state has a valid action");
        let bmin = *brute.iter().min().expect("three entries");
        for &action in &ALL_ACTIONS {
            let i = action.id() as usize;
            if !valid[i] {
                continue;
            }
            if full.as_array()[i] - fmin != brute[i] - bmin {
                return Err(Error::Contract(format!(
                    "counted cost of {} disagrees with brute force at stack {:?}, front {}: \
                     counted {:?} (min {}), brute {:?} (min {})",
                    action.name(),
                    cfg.stack(),
                    cfg.buffer_front(),
                    full.as_array(),
                    fmin,
                    brute,
                    bmin
                )));
            }
        }

        let want = argmin_later(brute, valid);
        let counted_pick = argmin_later(full.as_array(), valid);
        let sc_pick = argmin_later(sc.as_array(), valid);
        let action_pick = oracle_action(&cfg, gold);
        for (name, got) in [
            ("counted argmin", counted_pick),
            ("short-circuit argmin", sc_pick),
            ("oracle action", action_pick),
        ] {
            if got != want {
                return Err(Error::Contract(format!(
                    "{} picks {} but brute force wants {} at stack {:?}, front {}",
                    name,
                    got.name(),
                    want.name(),
                    cfg.stack(),
                    cfg.buffer_front()
                )));
            }
        }
    }
    Ok(checked)
}

/// Samples a projective gold tree by running a uniformly random derivation;
/// every projective tree over n words, multi-rooted ones included, is
/// reachable this way. Labels are uniform over `0..label_count`.
pub fn random_projective_tree<R: Rng>(n: usize, label_count: u32, rng: &mut R) -> GoldTree {
    assert!(n >= 1, "a tree needs at least one word");
    assert!(label_count >= 1, "need at least one label");
    let mut cfg = Configuration::new(n);
    while !cfg.is_terminal() {
        let valid = cfg.valid_actions();
        let action = valid[rng.gen_range(0..valid.len())];
        cfg.apply(action, rng.gen_range(0..label_count))
            .expect("sampled from valid actions");
    }
    GoldTree::new(cfg.heads().to_vec(), cfg.labels().to_vec())
        .expect("derivations produce well-formed trees")
}

/// Runs `verify_tree` over randomly sampled projective trees of length 1
/// up to `max_len`.
pub fn check_random_trees(trees: usize, max_len: usize, seed: u64) -> Result<OracleCheckReport> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut report = OracleCheckReport::default();
    for _ in 0..trees {
        let n = rng.gen_range(1..=max_len);
        let gold = random_projective_tree(n, 4, &mut rng);
        report.configs += verify_tree(&gold)?;
        report.trees += 1;
    }
    Ok(report)
}
