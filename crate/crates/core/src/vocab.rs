//! Closed string inventories (dependency labels, tag sets) with stable
//! integer ids.

use std::collections::HashMap;

use crate::conll::Sentence;

/// Ids are assigned in name order so the mapping is independent of corpus
/// order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVocab {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl LabelVocab {
    pub fn from_names<I: IntoIterator<Item = String>>(names: I) -> Self {
        let mut names: Vec<String> = names.into_iter().collect();
        names.sort();
        names.dedup();
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as u32))
            .collect();
        LabelVocab { names, index }
    }

    pub fn from_sentences(sentences: &[Sentence]) -> Self {
        Self::from_names(
            sentences
                .iter()
                .flat_map(|s| s.tokens.iter().map(|t| t.deprel.clone())),
        )
    }

    pub fn id(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> u32 {
        self.names.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// The most frequent label on arcs out of the root; ties break toward
    /// the smaller id.
    pub fn most_frequent_root(&self, sentences: &[Sentence]) -> Option<u32> {
        let mut counts = vec![0usize; self.names.len()];
        for s in sentences {
            for t in &s.tokens {
                if t.head == 0 {
                    if let Some(id) = self.id(&t.deprel) {
                        counts[id as usize] += 1;
                    }
                }
            }
        }
        let best = counts.iter().enumerate().max_by_key(|&(i, c)| (*c, std::cmp::Reverse(i)));
        best.and_then(|(i, &c)| (c > 0).then_some(i as u32))
    }
}
