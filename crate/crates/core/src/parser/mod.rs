//! Arc-hybrid transition-based dependency parsing: parse state, dynamic
//! oracle, feature extraction, and the search-task wiring that lets the
//! engine train and decode it.

mod extract;
mod oracle;
mod state;
mod task;

pub use extract::{feature_space, FeatureSet, SLOT_NAMES};
pub use crate::vocab::LabelVocab;
pub use task::{DepParser, ParseInstance, ParserSettings};

pub use oracle::{
    check_random_trees, min_completion_loss, oracle_action, oracle_costs, oracle_costs_full,
    random_projective_tree, verify_tree, ActionCosts, OracleCheckReport, INVALID_COST,
};
pub use state::{sentence_loss, Configuration, GoldTree, ParseAction};
