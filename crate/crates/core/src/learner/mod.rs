//! Cost-sensitive learners behind one prediction/update interface.
//!
//! A policy model holds one learner per prediction role (parse actions and
//! the two label decisions are separate roles with separate tables). Four
//! of the five variants regress per-class costs and predict the argmin;
//! the one-against-all classifier scores goodness and predicts the argmax.
//! Ties always resolve to the smallest tag.

mod linear;
mod nn;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
pub(crate) use linear::{AdaptiveTable, LinearTable};
pub(crate) use nn::{FtrlParams, FtrlTable, Net, NetFtrl};

/// Which update rule drives the policy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LearnerKind {
    Sgd,
    SgdPlus,
    Nn,
    NnFtrl,
    Multiclass,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 5] = [
        LearnerKind::Sgd,
        LearnerKind::SgdPlus,
        LearnerKind::Nn,
        LearnerKind::NnFtrl,
        LearnerKind::Multiclass,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::Sgd => "sgd",
            LearnerKind::SgdPlus => "sgd+",
            LearnerKind::Nn => "nn",
            LearnerKind::NnFtrl => "nn+ftrl",
            LearnerKind::Multiclass => "multiclass",
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LearnerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown learner '{s}'; expected one of sgd, sgd+, nn, nn+ftrl, multiclass"
                ))
            })
    }
}

/// Everything needed to build a policy model. Table sizes come from
/// `bits`, which must match the feature space the caller hashes with.
#[derive(Clone, Debug, PartialEq)]
pub struct LearnerConfig {
    pub kind: LearnerKind,
    pub bits: u8,
    pub hidden: usize,
    pub learning_rate: f32,
    pub ftrl_alpha: f32,
    pub ftrl_beta: f32,
    pub ftrl_l1: f32,
    pub ftrl_l2: f32,
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            kind: LearnerKind::NnFtrl,
            bits: 18,
            hidden: 5,
            learning_rate: 0.5,
            ftrl_alpha: 0.1,
            ftrl_beta: 1.0,
            ftrl_l1: 0.0,
            ftrl_l2: 0.0,
            seed: 1,
        }
    }
}

impl LearnerConfig {
    pub(crate) fn ftrl_params(&self) -> FtrlParams {
        FtrlParams {
            alpha: f64::from(self.ftrl_alpha),
            beta: f64::from(self.ftrl_beta),
            l1: f64::from(self.ftrl_l1),
            l2: f64::from(self.ftrl_l2),
        }
    }
}

/// One role's learner state. A model holds at most a handful of these,
/// so the size spread between variants is not worth an indirection.
#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug)]
pub(crate) enum Learner {
    Sgd(LinearTable),
    SgdPlus(AdaptiveTable),
    Nn(Net),
    NnFtrl(NetFtrl),
    Multiclass(FtrlTable),
}

impl Learner {
    fn new(config: &LearnerConfig, classes: usize, role: usize) -> Self {
        // Per-role generator so role layouts are independent of each other
        // but fully determined by the seed.
        let mut rng = ChaCha8Rng::seed_from_u64(
            config.seed.wrapping_add((role as u64).wrapping_mul(0x9e3779b97f4a7c15)),
        );
        match config.kind {
            LearnerKind::Sgd => Learner::Sgd(LinearTable::new(config.bits, classes)),
            LearnerKind::SgdPlus => Learner::SgdPlus(AdaptiveTable::new(config.bits, classes)),
            LearnerKind::Nn => Learner::Nn(Net::new(config.bits, config.hidden, classes, &mut rng)),
            LearnerKind::NnFtrl => Learner::NnFtrl(NetFtrl::new(
                config.bits,
                config.hidden,
                classes,
                config.ftrl_params(),
                &mut rng,
            )),
            LearnerKind::Multiclass => {
                Learner::Multiclass(FtrlTable::new(config.bits, classes, config.ftrl_params()))
            }
        }
    }

    fn classes(&self) -> usize {
        match self {
            Learner::Sgd(t) => t.classes,
            Learner::SgdPlus(t) => t.classes,
            Learner::Nn(n) => n.classes,
            Learner::NnFtrl(n) => n.net.classes,
            Learner::Multiclass(t) => t.classes,
        }
    }

    fn score(&self, feats: &[(u32, f32)], class: usize) -> f64 {
        match self {
            Learner::Sgd(t) => t.score(feats, class),
            Learner::SgdPlus(t) => t.score(feats, class),
            // One forward pass computes every class; single-class scoring
            // exists for the uniform interface and for tests.
            Learner::Nn(n) => n.forward(feats).1[class],
            Learner::NnFtrl(n) => n.net.forward(feats).1[class],
            Learner::Multiclass(t) => t.score(feats, class),
        }
    }

    /// True when larger scores are better (classification); false for the
    /// cost regressors.
    fn prefers_max(&self) -> bool {
        matches!(self, Learner::Multiclass(_))
    }
}

/// Per-role learners plus the configuration that shaped them.
#[derive(Clone, Debug)]
pub struct PolicyModel {
    pub(crate) config: LearnerConfig,
    pub(crate) roles: Vec<Learner>,
}

impl PolicyModel {
    /// `role_classes[r]` is the number of distinct tags role r can emit.
    pub fn new(config: LearnerConfig, role_classes: &[usize]) -> Self {
        let roles = role_classes
            .iter()
            .enumerate()
            .map(|(role, &classes)| Learner::new(&config, classes, role))
            .collect();
        PolicyModel { config, roles }
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn role_count(&self) -> usize {
        self.roles.len()
    }

    pub fn classes_of(&self, role: usize) -> usize {
        self.roles[role].classes()
    }

    /// Scores of the given classes, in their listed order.
    pub fn scores(&self, role: usize, feats: &[(u32, f32)], classes: &[u32]) -> Vec<f64> {
        let learner = &self.roles[role];
        match learner {
            // Dense scorers: one forward pass, then select.
            Learner::Nn(n) => {
                let all = n.forward(feats).1;
                classes.iter().map(|&c| all[c as usize]).collect()
            }
            Learner::NnFtrl(n) => {
                let all = n.net.forward(feats).1;
                classes.iter().map(|&c| all[c as usize]).collect()
            }
            _ => classes
                .iter()
                .map(|&c| learner.score(feats, c as usize))
                .collect(),
        }
    }

    /// Best allowed tag under the role's score direction; ties go to the
    /// smallest tag (`allowed` is in increasing tag order).
    pub fn predict(&self, role: usize, feats: &[(u32, f32)], allowed: &[u32]) -> u32 {
        debug_assert!(!allowed.is_empty(), "prediction over an empty tag set");
        debug_assert!(allowed.windows(2).all(|w| w[0] < w[1]), "tags must increase");
        let scores = self.scores(role, feats, allowed);
        let prefers_max = self.roles[role].prefers_max();
        let mut best = 0;
        for (k, &s) in scores.iter().enumerate().skip(1) {
            let improves = if prefers_max {
                s > scores[best]
            } else {
                s < scores[best]
            };
            if improves {
                best = k;
            }
        }
        allowed[best]
    }

    /// One cost-sensitive example: each listed class paired with its cost
    /// (regressed directly, or reduced to one-against-all for the
    /// classifier).
    pub fn update(&mut self, role: usize, feats: &[(u32, f32)], costs: &[(u32, f64)]) -> Result<()> {
        let lr = self.config.learning_rate;
        match &mut self.roles[role] {
            Learner::Sgd(t) => t.update(feats, costs, lr, role),
            Learner::SgdPlus(t) => t.update(feats, costs, lr, role),
            Learner::Nn(n) => n.sgd_update(feats, costs, lr, role),
            Learner::NnFtrl(n) => n.update(feats, costs, role),
            Learner::Multiclass(t) => t.update(feats, costs, role),
        }
    }
}

/// Stress-tests backprop against central finite differences on randomly
/// built nets: random shapes, weights, sparse inputs (duplicate indices
/// included), and target subsets. Returns the worst relative error over
/// every touched coordinate of every case.
pub fn nn_gradient_check(cases: usize, seed: u64) -> f64 {
    use rand::Rng;
    use std::collections::HashMap;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;

    for _ in 0..cases {
        let bits = rng.gen_range(3..=5u8);
        let hidden = rng.gen_range(1..=6);
        let classes = rng.gen_range(1..=5);
        let mut net = Net::new(bits, hidden, classes, &mut rng);
        for w in net
            .b1
            .iter_mut()
            .chain(net.w2.iter_mut())
            .chain(net.b2.iter_mut())
        {
            *w = rng.gen_range(-1.0..1.0);
        }

        let indices = 1usize << bits;
        let active = rng.gen_range(1..=8);
        let mut feats: Vec<(u32, f32)> = Vec::with_capacity(active);
        for _ in 0..active {
            feats.push((
                rng.gen_range(0..indices) as u32,
                rng.gen_range(-2.0f32..2.0),
            ));
        }
        let mut targets: Vec<(u32, f64)> = Vec::new();
        for c in 0..classes as u32 {
            if rng.gen_bool(0.7) {
                targets.push((c, rng.gen_range(-2.0..2.0)));
            }
        }
        if targets.is_empty() {
            targets.push((0, rng.gen_range(-2.0..2.0)));
        }

        let grads = net
            .gradients(&feats, &targets, 0)
            .expect("finite inputs cannot fault");
        // Input-layer entries repeat per duplicate feature index; the true
        // derivative of a coordinate is their sum.
        let mut w1: HashMap<usize, f64> = HashMap::new();
        for &(i, g) in &grads.w1 {
            *w1.entry(i).or_insert(0.0) += g;
        }

        fn coord(net: &mut Net, which: usize, at: usize) -> &mut f64 {
            match which {
                0 => &mut net.w1[at],
                1 => &mut net.b1[at],
                2 => &mut net.w2[at],
                _ => &mut net.b2[at],
            }
        }

        let eps = 1e-5;
        let mut probe = |net: &mut Net, which: usize, at: usize, analytic: f64| {
            let saved = *coord(net, which, at);
            *coord(net, which, at) = saved + eps;
            let up = net.loss(&feats, &targets);
            *coord(net, which, at) = saved - eps;
            let down = net.loss(&feats, &targets);
            *coord(net, which, at) = saved;
            let numeric = (up - down) / (2.0 * eps);
            let denom = analytic.abs().max(numeric.abs());
            if denom > 1e-10 {
                worst = worst.max((analytic - numeric).abs() / denom);
            }
        };

        for (&i, &g) in &w1 {
            probe(&mut net, 0, i, g);
        }
        for h in 0..hidden {
            probe(&mut net, 1, h, grads.b1[h]);
        }
        for i in 0..hidden * classes {
            probe(&mut net, 2, i, grads.w2[i]);
        }
        for c in 0..classes {
            probe(&mut net, 3, c, grads.b2[c]);
        }
    }
    worst
}
