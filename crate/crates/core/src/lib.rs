//! A task-generic learning-to-search engine with two built-in tasks: a
//! labeled arc-hybrid dependency parser and a left-to-right sequence tagger.
//!
//! Structured prediction is framed as a sequence of cost-sensitive
//! multiclass decisions. A task describes how to decode one instance as a
//! series of `predict` calls plus one terminal loss declaration; the engine
//! turns that description into training signal by rolling in to each step,
//! deviating to every allowed action, rolling out to completion, and
//! handing the resulting cost vectors to an online learner.
//!
//! ```text
//!   task.run ── predict ──▶ Session ──▶ policy (reference | learned)
//!      │                      │
//!      └── terminal loss ─────┴──▶ trajectories ──▶ deviations ──▶ updates
//! ```

pub mod conll;
pub mod datagen;
pub mod engine;
pub mod error;
pub mod eval;
pub mod features;
pub mod hash;
pub mod learner;
pub mod model;
pub mod parser;
pub mod tagger;
pub mod vocab;

pub use conll::{read_file, read_sentences, write_file, write_sentences, PosColumn, Sentence, Token};
pub use engine::{
    decode, train, MixtureSchedule, PassReport, RollMode, SearchTask, Session, StepRecord,
    TrainReport, TrainSettings,
};
pub use error::{Error, Result};
pub use eval::{score, ScoreReport};
pub use features::{FeatureSpace, FeatureVector, NamespaceId};
pub use learner::{nn_gradient_check, LearnerConfig, LearnerKind, PolicyModel};
pub use model::{
    deserialize_parser, deserialize_tagger, load_parser, load_tagger, save_parser, save_tagger,
    serialize_parser, serialize_tagger, ParserModel, TaggerModel,
};
pub use tagger::{read_tagged, write_tagged, SeqTagger, TaggedSentence};
pub use vocab::LabelVocab;
pub use parser::{
    check_random_trees, sentence_loss, Configuration, DepParser, FeatureSet, GoldTree,
    ParseAction, ParserSettings,
};
