//! Parse configurations and the three arc-hybrid transitions.
//!
//! Words are 1-based positions; position 0 is the artificial root, which
//! sits at the bottom of the stack for the whole derivation. A derivation
//! on an n-word sentence takes exactly 2n transitions: every word is pushed
//! once and popped once, and each pop assigns its head.

use crate::error::{Error, Result};

/// Head slot value before any arc targets the word.
const NO_HEAD: usize = usize::MAX;

/// The three transitions, tagged with their prediction ids.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParseAction {
    /// Push the buffer front onto the stack.
    Shift = 0,
    /// Pop the stack top; its head is the new stack top.
    ReduceRight = 1,
    /// Pop the stack top; its head is the buffer front.
    ReduceLeft = 2,
}

/// Enumeration order matches tag order.
pub const ALL_ACTIONS: [ParseAction; 3] = [
    ParseAction::Shift,
    ParseAction::ReduceRight,
    ParseAction::ReduceLeft,
];

impl ParseAction {
    pub fn id(self) -> u32 {
        self as u32
    }

    pub fn from_id(id: u32) -> Result<Self> {
        match id {
            0 => Ok(ParseAction::Shift),
            1 => Ok(ParseAction::ReduceRight),
            2 => Ok(ParseAction::ReduceLeft),
            other => Err(Error::Contract(format!("unknown parse action id {other}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ParseAction::Shift => "shift",
            ParseAction::ReduceRight => "reduce-right",
            ParseAction::ReduceLeft => "reduce-left",
        }
    }
}

/// A gold dependency tree over positions 1..=n. Index 0 carries a
/// self-loop sentinel so `head(0)` is well defined in oracle arithmetic
/// (it never matches a buffer position, which are all >= 1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GoldTree {
    heads: Vec<usize>,
    labels: Vec<u32>,
}

impl GoldTree {
    /// `heads[i]` is the head of word i for i in 1..=n; `heads[0]` must be 0.
    pub fn new(heads: Vec<usize>, labels: Vec<u32>) -> Result<Self> {
        if heads.is_empty() || heads[0] != 0 {
            return Err(Error::Contract(
                "gold heads must start with the root sentinel 0".into(),
            ));
        }
        if labels.len() != heads.len() {
            return Err(Error::Contract(format!(
                "gold labels length {} does not match heads length {}",
                labels.len(),
                heads.len()
            )));
        }
        let n = heads.len() - 1;
        for (i, &h) in heads.iter().enumerate().skip(1) {
            if h > n {
                return Err(Error::Contract(format!(
                    "gold head {h} of word {i} is outside the sentence"
                )));
            }
            if h == i {
                return Err(Error::Contract(format!("word {i} is its own gold head")));
            }
        }
        Ok(GoldTree { heads, labels })
    }

    pub fn unlabeled(heads: Vec<usize>) -> Result<Self> {
        let labels = vec![0; heads.len()];
        GoldTree::new(heads, labels)
    }

    /// Word count, excluding the root.
    pub fn len(&self) -> usize {
        self.heads.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn head(&self, i: usize) -> usize {
        self.heads[i]
    }

    pub fn label(&self, i: usize) -> u32 {
        self.labels[i]
    }

    pub fn heads(&self) -> &[usize] {
        &self.heads
    }

    pub fn is_projective(&self) -> bool {
        crate::conll::heads_projective(&self.heads)
    }
}

/// An arc-hybrid parse state.
///
/// The buffer is the contiguous range `front..=n`, so only its front index
/// is stored. Leftmost/rightmost child slots use 0 for "none": the root is
/// never anyone's child, so 0 is free as a sentinel there.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Configuration {
    n: usize,
    stack: Vec<usize>,
    front: usize,
    heads: Vec<usize>,
    labels: Vec<u32>,
    nleft: Vec<u32>,
    nright: Vec<u32>,
    left1: Vec<usize>,
    left2: Vec<usize>,
    right1: Vec<usize>,
    right2: Vec<usize>,
}

impl Configuration {
    pub fn new(n: usize) -> Self {
        let mut heads = vec![NO_HEAD; n + 1];
        heads[0] = 0;
        Configuration {
            n,
            stack: vec![0],
            front: 1,
            heads,
            labels: vec![0; n + 1],
            nleft: vec![0; n + 1],
            nright: vec![0; n + 1],
            left1: vec![0; n + 1],
            left2: vec![0; n + 1],
            right1: vec![0; n + 1],
            right2: vec![0; n + 1],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stack entry k items below the top; 0 is the top itself.
    pub fn stack_at(&self, k: usize) -> Option<usize> {
        let depth = self.stack.len();
        if k < depth {
            Some(self.stack[depth - 1 - k])
        } else {
            None
        }
    }

    pub fn stack_depth(&self) -> usize {
        self.stack.len()
    }

    pub fn stack(&self) -> &[usize] {
        &self.stack
    }

    /// Buffer entry k positions past the front; 0 is the front itself.
    pub fn buffer_at(&self, k: usize) -> Option<usize> {
        let pos = self.front + k;
        if pos <= self.n {
            Some(pos)
        } else {
            None
        }
    }

    pub fn buffer_front(&self) -> usize {
        self.front
    }

    pub fn buffer_len(&self) -> usize {
        (self.n + 1).saturating_sub(self.front)
    }

    pub fn is_valid(&self, action: ParseAction) -> bool {
        match action {
            ParseAction::Shift => self.front <= self.n,
            ParseAction::ReduceRight => self.stack.len() >= 2,
            ParseAction::ReduceLeft => self.stack.len() >= 2 && self.front <= self.n,
        }
    }

    /// Valid transitions in tag order. Non-empty until the state is terminal.
    pub fn valid_actions(&self) -> Vec<ParseAction> {
        ALL_ACTIONS
            .iter()
            .copied()
            .filter(|&a| self.is_valid(a))
            .collect()
    }

    pub fn is_terminal(&self) -> bool {
        self.front > self.n && self.stack.len() == 1
    }

    /// 2 * buffer length + stack depth. Every transition lowers it by one,
    /// so a derivation from the initial state takes exactly 2n steps.
    pub fn measure(&self) -> usize {
        2 * self.buffer_len() + self.stack.len()
    }

    /// Applies a transition; the label is recorded for the popped word on
    /// the two reduce actions and ignored for shift.
    pub fn apply(&mut self, action: ParseAction, label: u32) -> Result<()> {
        if !self.is_valid(action) {
            return Err(Error::Contract(format!(
                "{} is not valid here (stack depth {}, buffer front {} of {})",
                action.name(),
                self.stack.len(),
                self.front,
                self.n
            )));
        }
        match action {
            ParseAction::Shift => {
                self.stack.push(self.front);
                self.front += 1;
            }
            ParseAction::ReduceRight => {
                let child = self.stack.pop().expect("validity implies depth >= 2");
                let head = *self.stack.last().expect("validity implies depth >= 2");
                self.attach(child, head, label);
                self.right2[head] = self.right1[head];
                self.right1[head] = child;
                self.nright[head] += 1;
            }
            ParseAction::ReduceLeft => {
                let child = self.stack.pop().expect("validity implies depth >= 2");
                let head = self.front;
                self.attach(child, head, label);
                self.left2[head] = self.left1[head];
                self.left1[head] = child;
                self.nleft[head] += 1;
            }
        }
        Ok(())
    }

    fn attach(&mut self, child: usize, head: usize, label: u32) {
        debug_assert_eq!(self.heads[child], NO_HEAD, "a word is popped only once");
        self.heads[child] = head;
        self.labels[child] = label;
    }

    pub fn head_of(&self, i: usize) -> Option<usize> {
        match self.heads[i] {
            NO_HEAD => None,
            h => Some(h),
        }
    }

    pub fn label_of(&self, i: usize) -> u32 {
        self.labels[i]
    }

    /// Assigned heads, `usize::MAX` where no arc exists yet. At a terminal
    /// state every word 1..=n has a head.
    pub fn heads(&self) -> &[usize] {
        &self.heads
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn left_valency(&self, i: usize) -> u32 {
        self.nleft[i]
    }

    pub fn right_valency(&self, i: usize) -> u32 {
        self.nright[i]
    }

    pub fn leftmost_child(&self, i: usize) -> Option<usize> {
        if self.left1[i] == 0 {
            None
        } else {
            Some(self.left1[i])
        }
    }

    pub fn second_leftmost_child(&self, i: usize) -> Option<usize> {
        if self.left2[i] == 0 {
            None
        } else {
            Some(self.left2[i])
        }
    }

    pub fn rightmost_child(&self, i: usize) -> Option<usize> {
        if self.right1[i] == 0 {
            None
        } else {
            Some(self.right1[i])
        }
    }

    pub fn second_rightmost_child(&self, i: usize) -> Option<usize> {
        if self.right2[i] == 0 {
            None
        } else {
            Some(self.right2[i])
        }
    }
}

/// Attachment loss of a predicted tree against the gold tree, summed over
/// words 1..=n. Labeled: 2 per wrong head, 1 per right head with a wrong
/// label. Unlabeled: 1 per wrong head.
pub fn sentence_loss(
    pred_heads: &[usize],
    pred_labels: &[u32],
    gold: &GoldTree,
    labeled: bool,
) -> u64 {
    assert_eq!(pred_heads.len(), gold.len() + 1, "head vector length");
    assert_eq!(pred_labels.len(), gold.len() + 1, "label vector length");
    let mut loss = 0;
    for i in 1..=gold.len() {
        if pred_heads[i] != gold.head(i) {
            loss += if labeled { 2 } else { 1 };
        } else if labeled && pred_labels[i] != gold.label(i) {
            loss += 1;
        }
    }
    loss
}
