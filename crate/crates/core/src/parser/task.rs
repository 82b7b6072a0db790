//! The parser as a search task: one action decision per transition, plus a
//! label decision after each reduce, with a closed-form rollout shortcut
//! that prices deviations straight from the dynamic oracle.

use crate::conll::{PosColumn, Sentence};
use crate::engine::{decode, SearchTask, Session, StepRecord};
use crate::error::{Error, Result};
use crate::features::{FeatureSpace, NamespaceId};
use crate::learner::PolicyModel;
use crate::parser::extract::{build, FeatureSet, Layout, TokenKeys};
use crate::parser::oracle::{oracle_action, oracle_costs_full};
use crate::parser::state::{Configuration, GoldTree, ParseAction};
use crate::vocab::LabelVocab;

/// Decision roles. Actions and the two reduce directions get separate
/// weight tables; the label tables share the label id space.
pub(crate) const ROLE_ACTION: usize = 0;
pub(crate) const ROLE_RIGHT_LABEL: usize = 1;
pub(crate) const ROLE_LEFT_LABEL: usize = 2;

/// Structural knobs fixed at model-building time. `bits` must match the
/// learner's table width, since hashed indices address its weights.
#[derive(Debug, Clone)]
pub struct ParserSettings {
    pub bits: u8,
    pub feature_set: FeatureSet,
    pub labeled: bool,
    pub pos_column: PosColumn,
    /// Overrides root-label detection; must name a known label.
    pub root_label: Option<String>,
}

impl Default for ParserSettings {
    fn default() -> Self {
        ParserSettings {
            bits: 18,
            feature_set: FeatureSet::Full,
            labeled: true,
            pos_column: PosColumn::Fine,
            root_label: None,
        }
    }
}

/// The task handed to the engine: owns the feature space, the label
/// inventory, and the transition-level reference policy.
#[derive(Debug)]
pub struct DepParser {
    space: FeatureSpace,
    layout: Layout,
    labels: LabelVocab,
    root_label: u32,
    settings: ParserSettings,
}

/// One sentence prepared for parsing. Outputs of the latest episode stay
/// on the instance until the next run overwrites them.
pub struct ParseInstance {
    n: usize,
    keys: TokenKeys,
    gold: Option<GoldTree>,
    projective: bool,
    heads: Vec<usize>,
    labels: Vec<u32>,
}

impl ParseInstance {
    pub fn heads(&self) -> &[usize] {
        &self.heads
    }

    pub fn label_ids(&self) -> &[u32] {
        &self.labels
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_projective(&self) -> bool {
        self.projective
    }
}

impl DepParser {
    /// Build a parser whose label inventory comes from `sentences`.
    pub fn from_corpus(settings: ParserSettings, sentences: &[Sentence]) -> Result<Self> {
        if sentences.is_empty() {
            return Err(Error::Config("cannot build a parser from zero sentences".into()));
        }
        let labels = if settings.labeled {
            LabelVocab::from_sentences(sentences)
        } else {
            LabelVocab::from_names(["_".to_string()])
        };
        let root_label = match &settings.root_label {
            Some(name) => labels.id(name).ok_or_else(|| {
                Error::Config(format!("root label {name:?} does not occur in the data"))
            })?,
            None => labels.most_frequent_root(sentences).unwrap_or(0),
        };
        Ok(Self::with_vocab(settings, labels, root_label))
    }

    /// Build from an already-fixed inventory (model loading).
    pub fn with_vocab(settings: ParserSettings, labels: LabelVocab, root_label: u32) -> Self {
        let (space, layout) = build(settings.bits, settings.feature_set);
        DepParser {
            space,
            layout,
            labels,
            root_label,
            settings,
        }
    }

    pub fn settings(&self) -> &ParserSettings {
        &self.settings
    }

    pub fn labels(&self) -> &LabelVocab {
        &self.labels
    }

    pub fn root_label(&self) -> u32 {
        self.root_label
    }

    /// Class counts per role, in role order. Unlabeled parsers have only
    /// the action role.
    pub fn role_classes(&self) -> Vec<usize> {
        if self.settings.labeled {
            let l = self.labels.len() as usize;
            vec![3, l, l]
        } else {
            vec![3]
        }
    }

    fn label_count(&self) -> u32 {
        self.labels.len()
    }

    fn gold_tree(&self, sentence: &Sentence) -> Result<GoldTree> {
        let mut heads = vec![0usize];
        let mut labels = vec![0u32];
        for t in &sentence.tokens {
            heads.push(t.head);
            labels.push(if self.settings.labeled {
                self.labels.id(&t.deprel).ok_or_else(|| {
                    Error::Config(format!("label {:?} is not in the model's inventory", t.deprel))
                })?
            } else {
                0
            });
        }
        GoldTree::new(heads, labels)
    }

    /// Prepare a sentence. With `with_gold` the instance carries reference
    /// annotation and reports attachment loss; without, episodes report
    /// zero loss and the reference policy degenerates to the first allowed
    /// tag.
    pub fn instance(&self, sentence: &Sentence, with_gold: bool) -> Result<ParseInstance> {
        let keys = TokenKeys::new(
            sentence
                .tokens
                .iter()
                .map(|t| (t.form.as_str(), self.settings.pos_column.of(t))),
        );
        let gold = if with_gold {
            Some(self.gold_tree(sentence)?)
        } else {
            None
        };
        let projective = gold.as_ref().is_some_and(|g| g.is_projective());
        Ok(ParseInstance {
            n: sentence.len(),
            keys,
            gold,
            projective,
            heads: Vec::new(),
            labels: Vec::new(),
        })
    }

    /// Labels assignable to an arc. The root label is reserved for arcs
    /// out of the root, where every label stays open so the model can
    /// learn the reservation rather than have half of it forced.
    fn allowed_labels(&self, head: usize) -> Vec<u32> {
        let count = self.label_count();
        if head == 0 {
            return (0..count).collect();
        }
        let v: Vec<u32> = (0..count).filter(|&l| l != self.root_label).collect();
        if v.is_empty() {
            (0..count).collect()
        } else {
            v
        }
    }

    /// Head position an action would assign to the popped word.
    fn head_for(cfg: &Configuration, action: ParseAction) -> usize {
        match action {
            ParseAction::ReduceRight => cfg.stack_at(1).expect("reduce needs depth 2"),
            ParseAction::ReduceLeft => cfg.buffer_front(),
            ParseAction::Shift => unreachable!("shift assigns no head"),
        }
    }

    /// Decode with a trained policy, writing heads and labels over a copy
    /// of the input sentence.
    pub fn parse(
        &self,
        policy: &PolicyModel,
        sentence: &Sentence,
        history: usize,
    ) -> Result<Sentence> {
        let mut inst = self.instance(sentence, false)?;
        decode(self, &mut inst, policy, history)?;
        Ok(self.emit(sentence, &inst.heads, &inst.labels))
    }

    /// Decode by the reference policy alone. On projective input this
    /// reproduces the gold tree exactly.
    pub fn reference_parse(&self, sentence: &Sentence) -> Result<Sentence> {
        let gold = self.gold_tree(sentence)?;
        let mut cfg = Configuration::new(gold.len());
        while !cfg.is_terminal() {
            let action = oracle_action(&cfg, &gold);
            let label = match action {
                ParseAction::Shift => 0,
                _ => gold.label(cfg.stack_at(0).expect("stack is never empty")),
            };
            cfg.apply(action, label)?;
        }
        Ok(self.emit(sentence, cfg.heads(), cfg.labels()))
    }

    fn emit(&self, src: &Sentence, heads: &[usize], labels: &[u32]) -> Sentence {
        let mut out = src.clone();
        for (i, tok) in out.tokens.iter_mut().enumerate() {
            let p = i + 1;
            debug_assert!(heads[p] <= src.len(), "terminal states head every word");
            tok.head = heads[p];
            tok.deprel = if self.settings.labeled {
                self.labels.name(labels[p]).to_string()
            } else {
                "_".to_string()
            };
        }
        out
    }
}

impl SearchTask for DepParser {
    type Instance = ParseInstance;

    fn run(&self, inst: &mut ParseInstance, session: &mut Session) -> Result<f64> {
        let mut cfg = Configuration::new(inst.n);
        let mut loss = 0u64;
        while !cfg.is_terminal() {
            let allowed: Vec<u32> = cfg.valid_actions().iter().map(|a| a.id()).collect();
            let reference = match &inst.gold {
                Some(gold) => oracle_action(&cfg, gold).id(),
                None => allowed[0],
            };
            let mut fv = self.space.vector();
            self.layout.extract(
                &self.space,
                &cfg,
                &inst.keys,
                self.settings.labeled,
                self.label_count(),
                &mut fv,
            );
            let chosen = session.predict(&mut fv, ROLE_ACTION, reference, &allowed)?;
            let action = ParseAction::from_id(chosen)?;

            let mut label = 0u32;
            if action != ParseAction::Shift {
                let popped = cfg.stack_at(0).expect("reduce needs a stack top");
                let head = Self::head_for(&cfg, action);
                if self.settings.labeled {
                    let role = if action == ParseAction::ReduceRight {
                        ROLE_RIGHT_LABEL
                    } else {
                        ROLE_LEFT_LABEL
                    };
                    let allowed_labels = self.allowed_labels(head);
                    let reference_label = match &inst.gold {
                        Some(gold) => {
                            let g = gold.label(popped);
                            if allowed_labels.binary_search(&g).is_ok() {
                                g
                            } else {
                                allowed_labels[0]
                            }
                        }
                        None => allowed_labels[0],
                    };
                    let mut fv = self.space.vector();
                    self.layout.extract(
                        &self.space,
                        &cfg,
                        &inst.keys,
                        true,
                        self.label_count(),
                        &mut fv,
                    );
                    label = session.predict(&mut fv, role, reference_label, &allowed_labels)?;
                }
                // Attachment loss accrues exactly at the reduce that fixes
                // the arc, so the episode total equals the terminal
                // sentence loss.
                if let Some(gold) = &inst.gold {
                    loss += if head != gold.head(popped) {
                        if self.settings.labeled {
                            2
                        } else {
                            1
                        }
                    } else if self.settings.labeled && label != gold.label(popped) {
                        1
                    } else {
                        0
                    };
                }
            }
            cfg.apply(action, label)?;
        }
        inst.heads = cfg.heads().to_vec();
        inst.labels = cfg.labels().to_vec();
        Ok(loss as f64)
    }

    fn feature_space(&self) -> &FeatureSpace {
        &self.space
    }

    fn history_namespace(&self) -> Option<NamespaceId> {
        Some(self.layout.hist)
    }

    /// Deviation losses without re-execution. With a reference rollout the
    /// suffix is the dynamic oracle, so an action's completed loss differs
    /// from the oracle's counted cost only by terms constant across the
    /// allowed set, which the trainer's min-shift removes. Label steps
    /// price the gold label at zero when the already-chosen head is right
    /// and are flat when it is wrong.
    fn deviation_losses(
        &self,
        inst: &mut ParseInstance,
        steps: &[StepRecord],
        step: usize,
    ) -> Result<Option<Vec<f64>>> {
        let gold = match (&inst.gold, inst.projective) {
            (Some(g), true) => g,
            _ => return Ok(None),
        };
        let mut cfg = Configuration::new(inst.n);
        let mut i = 0;
        while i < step {
            let rec = &steps[i];
            debug_assert_eq!(rec.role, ROLE_ACTION, "groups start at action steps");
            let action = ParseAction::from_id(rec.chosen)?;
            let mut label = 0;
            let mut next = i + 1;
            if action != ParseAction::Shift && self.settings.labeled {
                if next == step {
                    // The deviation is this reduce's label step; stop with
                    // the reduce unapplied.
                    break;
                }
                label = steps[next].chosen;
                next += 1;
            }
            cfg.apply(action, label)?;
            i = next;
        }

        let rec = &steps[step];
        if rec.role == ROLE_ACTION {
            let costs = oracle_costs_full(&cfg, gold);
            let scale = if self.settings.labeled { 2.0 } else { 1.0 };
            let mut losses = Vec::with_capacity(rec.allowed.len());
            for &a in &rec.allowed {
                losses.push(f64::from(costs.get(ParseAction::from_id(a)?)) * scale);
            }
            Ok(Some(losses))
        } else {
            let action = ParseAction::from_id(steps[step - 1].chosen)?;
            let popped = cfg.stack_at(0).ok_or_else(|| {
                Error::Contract("label step replay lost the stack top".into())
            })?;
            let head = Self::head_for(&cfg, action);
            let losses = if head == gold.head(popped) {
                rec.allowed
                    .iter()
                    .map(|&l| if l == gold.label(popped) { 0.0 } else { 1.0 })
                    .collect()
            } else {
                vec![0.0; rec.allowed.len()]
            };
            Ok(Some(losses))
        }
    }
}
