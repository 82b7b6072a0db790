//! The learning-to-search engine.
//!
//! A task exposes its decision process as a single `run` function that asks
//! a session for every prediction. Training replays that function under
//! different drivers: a recorded rollin pass, then for each recorded step a
//! one-step deviation per allowed action, each completed to termination to
//! get its loss. The min-subtracted losses form one cost-sensitive example
//! per step, credited to the features captured at that step.
//!
//! Rollouts re-execute the task by default. A task that can compute the
//! completed reference-rollout loss in closed form may implement
//! `deviation_losses` and skip the re-execution; the engine only consults
//! it when rolling out with the reference policy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::{FeatureSpace, FeatureVector, NamespaceId};
use crate::learner::PolicyModel;

/// Who chooses actions during rollin or rollout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RollMode {
    Reference,
    Learned,
    /// Reference with probability `(1 - alpha)^t`, learned otherwise;
    /// drawn per instance for rollin and per rollout for rollouts.
    Mixture,
}

impl RollMode {
    pub fn name(self) -> &'static str {
        match self {
            RollMode::Reference => "reference",
            RollMode::Learned => "learned",
            RollMode::Mixture => "mixture",
        }
    }
}

impl std::str::FromStr for RollMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reference" => Ok(RollMode::Reference),
            "learned" => Ok(RollMode::Learned),
            "mixture" => Ok(RollMode::Mixture),
            other => Err(Error::Config(format!(
                "unknown roll mode '{other}'; expected reference, learned, or mixture"
            ))),
        }
    }
}

/// Probability of following the reference policy after `t` training
/// instances: `(1 - alpha)^t`, so it starts at 1 and decays toward the
/// learned policy. The flipped form starts at 0 and grows instead.
#[derive(Clone, Copy, Debug)]
pub struct MixtureSchedule {
    pub alpha: f64,
    pub flipped: bool,
}

impl MixtureSchedule {
    pub fn reference_probability(&self, t: u64) -> f64 {
        let decayed = (1.0 - self.alpha).powf(t as f64);
        if self.flipped {
            1.0 - decayed
        } else {
            decayed
        }
    }
}

/// One recorded rollin decision.
#[derive(Clone, Debug)]
pub struct StepRecord {
    /// Features at the decision point, history included.
    pub features: FeatureVector,
    pub role: usize,
    pub reference: u32,
    pub allowed: Vec<u32>,
    pub chosen: u32,
}

/// How a session resolves each prediction.
enum Mode<'s> {
    /// Follow the learned policy; no recording.
    Decode,
    /// Follow reference or learned policy and record every step.
    Rollin { use_reference: bool },
    /// Replay a fixed prefix, force one action, then hand control to the
    /// reference or the learned policy.
    Deviate {
        prefix: &'s [u32],
        forced: u32,
        after_reference: bool,
    },
}

/// The task-facing handle: every decision in `SearchTask::run` goes
/// through `predict`, which enforces the calling contract, appends
/// history features, and resolves the action for the current driver.
pub struct Session<'s> {
    mode: Mode<'s>,
    policy: &'s PolicyModel,
    space: &'s FeatureSpace,
    history: usize,
    history_ns: Option<NamespaceId>,
    chosen: Vec<u32>,
    records: Option<Vec<StepRecord>>,
    expanded: Vec<(u32, f32)>,
}

impl<'s> Session<'s> {
    fn new(
        mode: Mode<'s>,
        policy: &'s PolicyModel,
        space: &'s FeatureSpace,
        history: usize,
        ns: Option<NamespaceId>,
    ) -> Self {
        let records = match mode {
            Mode::Rollin { .. } => Some(Vec::new()),
            _ => None,
        };
        Session {
            mode,
            policy,
            space,
            history,
            history_ns: ns,
            chosen: Vec::new(),
            records,
            expanded: Vec::new(),
        }
    }

    /// Steps taken so far in this run.
    pub fn step(&self) -> usize {
        self.chosen.len()
    }

    /// Asks for the next action. `allowed` must be non-empty and strictly
    /// increasing, and must contain `reference`. The features are the
    /// task's view of the state; the engine appends its own action-history
    /// features before consulting the policy, so the caller gets them back
    /// augmented.
    pub fn predict(
        &mut self,
        features: &mut FeatureVector,
        role: usize,
        reference: u32,
        allowed: &[u32],
    ) -> Result<u32> {
        if allowed.is_empty() {
            return Err(Error::Contract(format!(
                "empty allowed set at step {} (role {role})",
                self.step()
            )));
        }
        if !allowed.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Contract(format!(
                "allowed tags must strictly increase, got {allowed:?} at step {}",
                self.step()
            )));
        }
        if !allowed.contains(&reference) {
            return Err(Error::Contract(format!(
                "reference tag {reference} is not among the allowed {allowed:?} at step {}",
                self.step()
            )));
        }
        if role >= self.policy.role_count() {
            return Err(Error::Contract(format!(
                "role {role} out of range (model has {})",
                self.policy.role_count()
            )));
        }
        let classes = self.policy.classes_of(role) as u32;
        if *allowed.last().expect("non-empty") >= classes {
            return Err(Error::Contract(format!(
                "allowed tag {} exceeds role {role}'s {classes} classes",
                allowed.last().expect("non-empty")
            )));
        }

        // Recent actions as features: raw id packs how far back with which
        // tag was taken there.
        if let (Some(ns), true) = (self.history_ns, self.history > 0) {
            let step = self.step();
            for back in 1..=self.history.min(step) {
                let tag = self.chosen[step - back];
                features.add_id(self.space, ns, ((back as u64) << 32) | u64::from(tag));
            }
        }

        let chosen = match self.mode {
            Mode::Decode => self.predict_learned(features, role, allowed),
            Mode::Rollin { use_reference } => {
                if use_reference {
                    reference
                } else {
                    self.predict_learned(features, role, allowed)
                }
            }
            Mode::Deviate {
                prefix,
                forced,
                after_reference,
            } => {
                let step = self.step();
                if step < prefix.len() {
                    let replay = prefix[step];
                    debug_assert!(
                        allowed.contains(&replay),
                        "replayed prefix action must stay allowed on a deterministic task"
                    );
                    replay
                } else if step == prefix.len() {
                    forced
                } else if after_reference {
                    reference
                } else {
                    self.predict_learned(features, role, allowed)
                }
            }
        };

        if let Some(records) = &mut self.records {
            records.push(StepRecord {
                features: features.clone(),
                role,
                reference,
                allowed: allowed.to_vec(),
                chosen,
            });
        }
        self.chosen.push(chosen);
        Ok(chosen)
    }

    fn predict_learned(&mut self, features: &FeatureVector, role: usize, allowed: &[u32]) -> u32 {
        features.expand_into(self.space, &mut self.expanded);
        self.policy.predict(role, &self.expanded, allowed)
    }
}

/// A decision process the engine can train and decode. Implementations
/// must be deterministic: re-running the same instance with the same
/// choices must visit the same states.
pub trait SearchTask {
    type Instance;

    /// One episode: make every decision through the session and return the
    /// terminal loss against the instance's gold annotation (0 when the
    /// instance carries none).
    fn run(&self, instance: &mut Self::Instance, session: &mut Session) -> Result<f64>;

    /// The space every feature vector passed to `Session::predict` is
    /// built over; the engine hashes its history features into it.
    fn feature_space(&self) -> &FeatureSpace;

    /// Namespace of the engine's action-history features, if the task's
    /// feature space reserves one.
    fn history_namespace(&self) -> Option<NamespaceId> {
        None
    }

    /// Closed-form completed losses for every allowed action at
    /// `steps[step]`, assuming the prefix before it was followed and the
    /// reference policy completes after the deviation; aligned with that
    /// step's allowed list. `Ok(None)` falls back to re-execution. Only
    /// consulted for reference rollouts.
    fn deviation_losses(
        &self,
        instance: &mut Self::Instance,
        steps: &[StepRecord],
        step: usize,
    ) -> Result<Option<Vec<f64>>> {
        let _ = (instance, steps, step);
        Ok(None)
    }
}

/// Knobs for a training run.
#[derive(Clone, Debug)]
pub struct TrainSettings {
    pub passes: usize,
    pub rollin: RollMode,
    pub rollout: RollMode,
    /// Decay rate of the rollin mixture.
    pub alpha: f64,
    pub flip_schedule: bool,
    /// Deviate at every k-th recorded step.
    pub deviation_stride: usize,
    /// Force re-execution even when the task offers closed-form losses.
    pub exact_rollouts: bool,
    /// How many past actions feed back as features.
    pub history: usize,
    pub seed: u64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings {
            passes: 5,
            rollin: RollMode::Mixture,
            rollout: RollMode::Reference,
            alpha: 1e-5,
            flip_schedule: false,
            deviation_stride: 1,
            exact_rollouts: false,
            history: 1,
            seed: 1,
        }
    }
}

/// One pass over the data, summarized.
#[derive(Clone, Copy, Debug)]
pub struct PassReport {
    pub pass: usize,
    pub mean_rollin_loss: f64,
    /// Schedule value after the pass finished.
    pub reference_probability: f64,
    pub instances: usize,
    pub updates: usize,
}

/// Whole-run summary: one report per pass.
#[derive(Clone, Debug, Default)]
pub struct TrainReport {
    pub passes: Vec<PassReport>,
}

/// Trains the policy in place. Each instance contributes one recorded
/// rollin trajectory per pass and one cost-sensitive example per strided
/// step. `on_pass` fires as each pass completes.
pub fn train<T: SearchTask>(
    task: &T,
    instances: &mut [T::Instance],
    policy: &mut PolicyModel,
    settings: &TrainSettings,
    mut on_pass: impl FnMut(&PassReport),
) -> Result<TrainReport> {
    if instances.is_empty() {
        return Err(Error::Config("no training instances".into()));
    }
    if settings.deviation_stride == 0 {
        return Err(Error::Config("deviation stride must be at least 1".into()));
    }
    if !(settings.alpha > 0.0 && settings.alpha < 1.0) {
        return Err(Error::Config(format!(
            "mixture decay must lie in (0, 1), got {}",
            settings.alpha
        )));
    }
    if task.feature_space().bits() != policy.config().bits {
        return Err(Error::Config(format!(
            "feature space hashes into {} bits but the learner tables were sized for {}",
            task.feature_space().bits(),
            policy.config().bits
        )));
    }
    let schedule = MixtureSchedule {
        alpha: settings.alpha,
        flipped: settings.flip_schedule,
    };
    let history_ns = task.history_namespace();
    let space = task.feature_space();
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut report = TrainReport::default();
    let mut t: u64 = 0;
    let mut expanded: Vec<(u32, f32)> = Vec::new();

    for pass in 0..settings.passes {
        let mut loss_sum = 0.0;
        let mut updates = 0;
        for instance in instances.iter_mut() {
            let rollin_reference = match settings.rollin {
                RollMode::Reference => true,
                RollMode::Learned => false,
                RollMode::Mixture => rng.gen::<f64>() < schedule.reference_probability(t),
            };
            let mut session = Session::new(
                Mode::Rollin {
                    use_reference: rollin_reference,
                },
                policy,
                space,
                settings.history,
                history_ns,
            );
            let loss = task.run(instance, &mut session)?;
            check_loss(loss)?;
            loss_sum += loss;
            let records = session.records.take().expect("rollin records");
            let prefix: Vec<u32> = records.iter().map(|r| r.chosen).collect();

            let reference_probability = schedule.reference_probability(t);
            for step in (0..records.len()).step_by(settings.deviation_stride) {
                let costs = deviation_costs(
                    task,
                    instance,
                    policy,
                    settings,
                    &records,
                    &prefix,
                    step,
                    reference_probability,
                    &mut rng,
                )?;
                let record = &records[step];
                record.features.expand_into(space, &mut expanded);
                policy.update(record.role, &expanded, &costs)?;
                updates += 1;
            }
            t += 1;
        }
        let pass_report = PassReport {
            pass,
            mean_rollin_loss: loss_sum / instances.len() as f64,
            reference_probability: schedule.reference_probability(t),
            instances: instances.len(),
            updates,
        };
        on_pass(&pass_report);
        report.passes.push(pass_report);
    }
    Ok(report)
}

/// Cost vector for one recorded step: completed loss per allowed action,
/// min-subtracted so the best allowed action costs 0. Singleton steps
/// never roll out.
#[allow(clippy::too_many_arguments)]
fn deviation_costs<T: SearchTask>(
    task: &T,
    instance: &mut T::Instance,
    policy: &PolicyModel,
    settings: &TrainSettings,
    records: &[StepRecord],
    prefix: &[u32],
    step: usize,
    reference_probability: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(u32, f64)>> {
    let allowed = &records[step].allowed;
    if allowed.len() == 1 {
        return Ok(vec![(allowed[0], 0.0)]);
    }

    let losses = if settings.rollout == RollMode::Reference && !settings.exact_rollouts {
        task.deviation_losses(instance, records, step)?
    } else {
        None
    };
    let losses = match losses {
        Some(losses) => {
            if losses.len() != allowed.len() {
                return Err(Error::Contract(format!(
                    "closed-form losses cover {} actions but {} are allowed",
                    losses.len(),
                    allowed.len()
                )));
            }
            losses
        }
        None => {
            let mut out = Vec::with_capacity(allowed.len());
            for &action in allowed {
                let after_reference = match settings.rollout {
                    RollMode::Reference => true,
                    RollMode::Learned => false,
                    RollMode::Mixture => rng.gen::<f64>() < reference_probability,
                };
                let mut session = Session::new(
                    Mode::Deviate {
                        prefix: &prefix[..step],
                        forced: action,
                        after_reference,
                    },
                    policy,
                    task.feature_space(),
                    settings.history,
                    task.history_namespace(),
                );
                let loss = task.run(instance, &mut session)?;
                check_loss(loss)?;
                if session.step() <= step {
                    return Err(Error::Contract(format!(
                        "instance terminated after {} steps, before its {}-step prefix finished",
                        session.step(),
                        step
                    )));
                }
                out.push(loss);
            }
            out
        }
    };

    let min = losses.iter().copied().fold(f64::INFINITY, f64::min);
    for &l in &losses {
        check_loss(l)?;
    }
    Ok(allowed
        .iter()
        .zip(&losses)
        .map(|(&a, &l)| (a, l - min))
        .collect())
}

fn check_loss(loss: f64) -> Result<()> {
    if !loss.is_finite() || loss < 0.0 {
        return Err(Error::Contract(format!(
            "task reported loss {loss}; losses must be finite and non-negative"
        )));
    }
    Ok(())
}

/// Runs one instance under the learned policy and returns its loss.
pub fn decode<T: SearchTask>(
    task: &T,
    instance: &mut T::Instance,
    policy: &PolicyModel,
    history: usize,
) -> Result<f64> {
    let mut session = Session::new(
        Mode::Decode,
        policy,
        task.feature_space(),
        history,
        task.history_namespace(),
    );
    let loss = task.run(instance, &mut session)?;
    check_loss(loss)?;
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureSpace;
    use crate::learner::{LearnerConfig, LearnerKind};
    use std::cell::Cell;

    /// Copy task: read a symbol sequence and emit it tag for tag. Loss is
    /// Hamming distance. Features: the position, the current input symbol,
    /// and the engine's action history.
    struct CopyTask {
        space: FeatureSpace,
        pos_ns: NamespaceId,
        sym_ns: NamespaceId,
        hist_ns: NamespaceId,
        tags: u32,
    }

    struct CopyInstance {
        target: Vec<u32>,
        output: Vec<u32>,
        runs: Cell<usize>,
    }

    impl CopyTask {
        fn new(tags: u32) -> Self {
            let mut space = FeatureSpace::new(10);
            let pos_ns = space.namespace("pos");
            let sym_ns = space.namespace("sym");
            let hist_ns = space.namespace("hist");
            CopyTask {
                space,
                pos_ns,
                sym_ns,
                hist_ns,
                tags,
            }
        }

        fn instance(&self, target: &[u32]) -> CopyInstance {
            CopyInstance {
                target: target.to_vec(),
                output: Vec::new(),
                runs: Cell::new(0),
            }
        }
    }

    impl SearchTask for CopyTask {
        type Instance = CopyInstance;

        fn run(&self, instance: &mut CopyInstance, session: &mut Session) -> Result<f64> {
            instance.runs.set(instance.runs.get() + 1);
            instance.output.clear();
            let allowed: Vec<u32> = (0..self.tags).collect();
            let mut loss = 0.0;
            for (i, &gold) in instance.target.iter().enumerate() {
                let mut fv = self.space.vector();
                fv.add_id(&self.space, self.pos_ns, i as u64);
                fv.add_id(&self.space, self.sym_ns, u64::from(gold));
                let chosen = session.predict(&mut fv, 0, gold, &allowed)?;
                instance.output.push(chosen);
                if chosen != gold {
                    loss += 1.0;
                }
            }
            Ok(loss)
        }

        fn feature_space(&self) -> &FeatureSpace {
            &self.space
        }

        fn history_namespace(&self) -> Option<NamespaceId> {
            Some(self.hist_ns)
        }
    }

    fn sgd_policy(task: &CopyTask, lr: f32) -> PolicyModel {
        let config = LearnerConfig {
            kind: LearnerKind::Sgd,
            bits: 10,
            learning_rate: lr,
            seed: 7,
            ..LearnerConfig::default()
        };
        PolicyModel::new(config, &[task.tags as usize])
    }

    #[test]
    fn schedule_decays_from_one_toward_zero() {
        let schedule = MixtureSchedule {
            alpha: 1e-5,
            flipped: false,
        };
        assert_eq!(schedule.reference_probability(0), 1.0);
        let halfway = schedule.reference_probability(69315);
        assert!(
            (0.49..=0.51).contains(&halfway),
            "expected about one half, got {halfway}"
        );
        let flipped = MixtureSchedule {
            alpha: 1e-5,
            flipped: true,
        };
        assert_eq!(flipped.reference_probability(0), 0.0);
        assert!((flipped.reference_probability(69315) + halfway - 1.0).abs() < 1e-12);
    }

    #[test]
    fn training_learns_to_copy() {
        let task = CopyTask::new(3);
        let mut instances = vec![
            task.instance(&[0, 1, 2, 1]),
            task.instance(&[2, 2, 0, 1]),
            task.instance(&[1, 0, 0, 2]),
        ];
        let mut policy = sgd_policy(&task, 0.5);
        let settings = TrainSettings {
            passes: 8,
            ..TrainSettings::default()
        };
        let report = train(&task, &mut instances, &mut policy, &settings, |_| {}).unwrap();
        assert_eq!(report.passes.len(), 8);
        for instance in &mut instances {
            let loss = decode(&task, instance, &policy, settings.history).unwrap();
            assert_eq!(loss, 0.0, "decode should reproduce {:?}", instance.target);
            assert_eq!(instance.output, instance.target);
        }
    }

    #[test]
    fn rollout_counts_follow_allowed_sets_and_stride() {
        let task = CopyTask::new(3);
        // 4 steps, 3 allowed actions each: one rollin run plus 4 * 3
        // rollout runs per pass.
        let mut instances = vec![task.instance(&[0, 1, 2, 0])];
        let mut policy = sgd_policy(&task, 0.1);
        let settings = TrainSettings {
            passes: 1,
            ..TrainSettings::default()
        };
        train(&task, &mut instances, &mut policy, &settings, |_| {}).unwrap();
        assert_eq!(instances[0].runs.get(), 1 + 4 * 3);

        // Stride 2 halves the deviated steps: runs at steps 0 and 2 only.
        instances[0].runs.set(0);
        let settings = TrainSettings {
            passes: 1,
            deviation_stride: 2,
            ..TrainSettings::default()
        };
        train(&task, &mut instances, &mut policy, &settings, |_| {}).unwrap();
        assert_eq!(instances[0].runs.get(), 1 + 2 * 3);
    }

    #[test]
    fn singleton_allowed_steps_do_not_roll_out() {
        /// One decision only at the first step; the rest are forced.
        struct Forced(CopyTask);
        impl SearchTask for Forced {
            type Instance = CopyInstance;
            fn run(&self, instance: &mut CopyInstance, session: &mut Session) -> Result<f64> {
                instance.runs.set(instance.runs.get() + 1);
                let mut loss = 0.0;
                for (i, &gold) in instance.target.iter().enumerate() {
                    let mut fv = self.0.space.vector();
                    fv.add_id(&self.0.space, self.0.pos_ns, i as u64);
                    let allowed: Vec<u32> =
                        if i == 0 { (0..self.0.tags).collect() } else { vec![gold] };
                    let chosen = session.predict(&mut fv, 0, gold, &allowed)?;
                    if chosen != gold {
                        loss += 1.0;
                    }
                }
                Ok(loss)
            }
            fn feature_space(&self) -> &FeatureSpace {
                &self.0.space
            }
        }
        let task = Forced(CopyTask::new(3));
        let mut instances = vec![task.0.instance(&[1, 2, 0, 1])];
        let mut policy = sgd_policy(&task.0, 0.1);
        let settings = TrainSettings {
            passes: 1,
            ..TrainSettings::default()
        };
        train(&task, &mut instances, &mut policy, &settings, |_| {}).unwrap();
        // Only step 0 deviates: 3 rollouts. Steps 1..3 are singletons.
        assert_eq!(instances[0].runs.get(), 1 + 3);
    }

    #[test]
    fn closed_form_losses_replace_rollouts() {
        /// Copy task that knows its reference-rollout losses exactly: the
        /// prefix mistakes stand, the deviation adds one unless it matches
        /// gold, the reference suffix is perfect.
        struct Analytic(CopyTask);
        impl SearchTask for Analytic {
            type Instance = CopyInstance;
            fn run(&self, instance: &mut CopyInstance, session: &mut Session) -> Result<f64> {
                self.0.run(instance, session)
            }
            fn feature_space(&self) -> &FeatureSpace {
                self.0.feature_space()
            }
            fn history_namespace(&self) -> Option<NamespaceId> {
                self.0.history_namespace()
            }
            fn deviation_losses(
                &self,
                instance: &mut CopyInstance,
                steps: &[StepRecord],
                step: usize,
            ) -> Result<Option<Vec<f64>>> {
                let prefix_loss: f64 = steps[..step]
                    .iter()
                    .enumerate()
                    .map(|(i, r)| f64::from(r.chosen != instance.target[i]))
                    .sum();
                Ok(Some(
                    steps[step]
                        .allowed
                        .iter()
                        .map(|&a| prefix_loss + f64::from(a != instance.target[step]))
                        .collect(),
                ))
            }
        }

        let task = Analytic(CopyTask::new(3));
        let mut instances = vec![task.0.instance(&[0, 2, 1, 0])];
        let mut policy = sgd_policy(&task.0, 0.5);
        let settings = TrainSettings {
            passes: 6,
            ..TrainSettings::default()
        };
        train(&task, &mut instances, &mut policy, &settings, |_| {}).unwrap();
        // One run per pass: the rollin. No rollout re-executions at all.
        assert_eq!(instances[0].runs.get(), 6);
        let loss = decode(&task, &mut instances[0], &policy, settings.history).unwrap();
        assert_eq!(loss, 0.0);

        // The escape hatch forces re-execution despite the closed form.
        instances[0].runs.set(0);
        let mut policy = sgd_policy(&task.0, 0.5);
        let settings = TrainSettings {
            passes: 1,
            exact_rollouts: true,
            ..TrainSettings::default()
        };
        train(&task, &mut instances, &mut policy, &settings, |_| {}).unwrap();
        assert_eq!(instances[0].runs.get(), 1 + 4 * 3);
    }

    #[test]
    fn contract_violations_are_reported() {
        struct Bad(FeatureSpace, NamespaceId, u8);
        impl SearchTask for Bad {
            type Instance = ();
            fn feature_space(&self) -> &FeatureSpace {
                &self.0
            }
            fn run(&self, _: &mut (), session: &mut Session) -> Result<f64> {
                let mut fv = self.0.vector();
                fv.add_id(&self.0, self.1, 1);
                match self.2 {
                    0 => {
                        session.predict(&mut fv, 0, 0, &[])?;
                    }
                    1 => {
                        session.predict(&mut fv, 0, 5, &[0, 1])?;
                    }
                    2 => {
                        session.predict(&mut fv, 0, 1, &[1, 0])?;
                    }
                    3 => {
                        session.predict(&mut fv, 0, 1, &[0, 1])?;
                        return Ok(-1.0);
                    }
                    _ => {
                        session.predict(&mut fv, 9, 1, &[0, 1])?;
                    }
                }
                Ok(0.0)
            }
        }
        for case in 0..5u8 {
            let mut space = FeatureSpace::new(8);
            let ns = space.namespace("x");
            let task = Bad(space, ns, case);
            let config = LearnerConfig {
                kind: LearnerKind::Sgd,
                bits: 8,
                ..LearnerConfig::default()
            };
            let mut policy = PolicyModel::new(config, &[2]);
            let err = train(
                &task,
                &mut [()],
                &mut policy,
                &TrainSettings::default(),
                |_| {},
            )
            .unwrap_err();
            assert!(matches!(err, Error::Contract(_)), "case {case}: {err}");
        }
    }

    #[test]
    fn empty_data_is_a_config_error() {
        let task = CopyTask::new(2);
        let mut policy = sgd_policy(&task, 0.5);
        let err = train(
            &task,
            &mut Vec::<CopyInstance>::new(),
            &mut policy,
            &TrainSettings::default(),
            |_| {},
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn history_features_record_recent_actions() {
        let task = CopyTask::new(3);
        let config = LearnerConfig {
            kind: LearnerKind::Sgd,
            bits: 10,
            ..LearnerConfig::default()
        };
        let policy = PolicyModel::new(config, &[3]);
        let mut session = Session::new(
            Mode::Rollin {
                use_reference: true,
            },
            &policy,
            &task.space,
            2,
            Some(task.hist_ns),
        );
        let mut instance = task.instance(&[2, 0, 1]);
        task.run(&mut instance, &mut session).unwrap();
        let records = session.records.take().unwrap();
        // Step 0 has two features (position and symbol), step 1 adds one
        // history entry, step 2 adds two (history length is 2).
        assert_eq!(records[0].features.expanded_count(&task.space), 2);
        assert_eq!(records[1].features.expanded_count(&task.space), 3);
        assert_eq!(records[2].features.expanded_count(&task.space), 4);
    }

    #[test]
    fn training_is_seed_deterministic() {
        let run = |seed: u64| {
            let task = CopyTask::new(3);
            let mut instances = vec![
                task.instance(&[0, 1, 2, 1, 0]),
                task.instance(&[2, 0, 1, 1, 2]),
            ];
            let config = LearnerConfig {
                kind: LearnerKind::NnFtrl,
                bits: 10,
                seed,
                ..LearnerConfig::default()
            };
            let mut policy = PolicyModel::new(config, &[3]);
            let settings = TrainSettings {
                passes: 3,
                rollin: RollMode::Mixture,
                alpha: 0.2,
                seed,
                ..TrainSettings::default()
            };
            train(&task, &mut instances, &mut policy, &settings, |_| {}).unwrap();
            let fv = {
                let mut fv = task.space.vector();
                fv.add_id(&task.space, task.pos_ns, 1);
                fv
            };
            let mut expanded = Vec::new();
            fv.expand_into(&task.space, &mut expanded);
            policy.scores(0, &expanded, &[0, 1, 2])
        };
        assert_eq!(run(11), run(11));
        assert_ne!(run(11), run(12));
    }

    #[test]
    fn learned_rollouts_also_train() {
        let task = CopyTask::new(2);
        let mut instances = vec![task.instance(&[0, 1, 1, 0])];
        let mut policy = sgd_policy(&task, 0.5);
        let settings = TrainSettings {
            passes: 6,
            rollin: RollMode::Learned,
            rollout: RollMode::Learned,
            ..TrainSettings::default()
        };
        train(&task, &mut instances, &mut policy, &settings, |_| {}).unwrap();
        let loss = decode(&task, &mut instances[0], &policy, settings.history).unwrap();
        assert_eq!(loss, 0.0);
    }
}
