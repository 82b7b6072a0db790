//! A left-to-right sequence tagger as a search task.
//!
//! One prediction per token, conditioned on the token's identity and the
//! engine's action-history features; the terminal loss is the Hamming
//! distance to the gold tags. Deliberately minimal: the module exists to
//! show the engine is not parser-shaped, not to compete on tagging.

use std::io::{BufRead, BufReader, Read, Write as IoWrite};

use crate::engine::{decode, SearchTask, Session, StepRecord};
use crate::error::{Error, Result};
use crate::features::{FeatureSpace, NamespaceId};
use crate::learner::PolicyModel;
use crate::vocab::LabelVocab;

/// Tagging sentences travel as (form, tag) rows; `UNTAGGED` marks rows
/// whose tag is yet to be predicted.
pub type TaggedSentence = Vec<(String, String)>;

pub const UNTAGGED: &str = "_";

/// The task: token-identity features over a closed tag inventory.
#[derive(Debug)]
pub struct SeqTagger {
    space: FeatureSpace,
    token_ns: NamespaceId,
    hist_ns: NamespaceId,
    tags: LabelVocab,
    bits: u8,
}

/// One sentence prepared for tagging. Predictions of the latest episode
/// stay on the instance until the next run overwrites them.
pub struct TagInstance {
    forms: Vec<String>,
    gold: Option<Vec<u32>>,
    predicted: Vec<u32>,
}

impl TagInstance {
    pub fn predicted(&self) -> &[u32] {
        &self.predicted
    }
}

impl SeqTagger {
    /// Collects the tag inventory from a training corpus.
    pub fn from_corpus(bits: u8, corpus: &[TaggedSentence]) -> Result<Self> {
        let tags = LabelVocab::from_names(
            corpus
                .iter()
                .flat_map(|s| s.iter().map(|(_, tag)| tag.clone())),
        );
        if tags.is_empty() {
            return Err(Error::Config("no tags in the training corpus".into()));
        }
        Ok(Self::with_vocab(bits, tags))
    }

    pub fn with_vocab(bits: u8, tags: LabelVocab) -> Self {
        let mut space = FeatureSpace::new(bits);
        let token_ns = space.namespace("tok");
        let hist_ns = space.namespace("hist");
        SeqTagger {
            space,
            token_ns,
            hist_ns,
            tags,
            bits,
        }
    }

    pub fn tags(&self) -> &LabelVocab {
        &self.tags
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    pub fn role_classes(&self) -> Vec<usize> {
        vec![self.tags.len() as usize]
    }

    /// `with_gold` requires every tag to be in the inventory; without it
    /// the tags are ignored and the instance only decodes.
    pub fn instance(&self, sentence: &TaggedSentence, with_gold: bool) -> Result<TagInstance> {
        if sentence.is_empty() {
            return Err(Error::Config("cannot tag an empty sentence".into()));
        }
        let forms = sentence.iter().map(|(form, _)| form.clone()).collect();
        let gold = if with_gold {
            let mut ids = Vec::with_capacity(sentence.len());
            for (form, tag) in sentence {
                let id = self.tags.id(tag).ok_or_else(|| {
                    Error::Config(format!("tag '{tag}' on '{form}' is not in the inventory"))
                })?;
                ids.push(id);
            }
            Some(ids)
        } else {
            None
        };
        Ok(TagInstance {
            forms,
            gold,
            predicted: Vec::new(),
        })
    }

    /// Decodes one sentence and returns it with tags filled in.
    pub fn tag(
        &self,
        policy: &PolicyModel,
        sentence: &TaggedSentence,
        history: usize,
    ) -> Result<TaggedSentence> {
        let mut instance = self.instance(sentence, false)?;
        decode(self, &mut instance, policy, history)?;
        Ok(sentence
            .iter()
            .zip(&instance.predicted)
            .map(|((form, _), &tag)| (form.clone(), self.tags.name(tag).to_string()))
            .collect())
    }
}

impl SearchTask for SeqTagger {
    type Instance = TagInstance;

    fn run(&self, instance: &mut TagInstance, session: &mut Session) -> Result<f64> {
        let all: Vec<u32> = (0..self.tags.len()).collect();
        instance.predicted.clear();
        let mut loss = 0.0;
        for (i, form) in instance.forms.iter().enumerate() {
            let gold = instance.gold.as_ref().map_or(0, |g| g[i]);
            let mut features = self.space.vector();
            features.add_bytes(&self.space, self.token_ns, form.as_bytes());
            let chosen = session.predict(&mut features, 0, gold, &all)?;
            instance.predicted.push(chosen);
            if instance.gold.is_some() && chosen != gold {
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

    /// Deviating to tag `a` at step `k` under a reference completion
    /// leaves every other position at its rollin/reference value, so the
    /// completed loss is the prefix's errors plus the deviation's own
    /// mismatch. The engine min-subtracts, making the vector 0/1.
    fn deviation_losses(
        &self,
        instance: &mut TagInstance,
        steps: &[StepRecord],
        step: usize,
    ) -> Result<Option<Vec<f64>>> {
        let Some(gold) = instance.gold.as_ref() else {
            return Ok(None);
        };
        let prefix: f64 = steps[..step]
            .iter()
            .enumerate()
            .map(|(i, s)| f64::from(s.chosen != gold[i]))
            .sum();
        Ok(Some(
            steps[step]
                .allowed
                .iter()
                .map(|&a| prefix + f64::from(a != gold[step]))
                .collect(),
        ))
    }
}

/// Reads two-column (form TAB tag) sentences separated by blank lines.
pub fn read_tagged<R: Read>(reader: R) -> Result<Vec<TaggedSentence>> {
    let mut sentences = Vec::new();
    let mut current: TaggedSentence = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.is_empty() {
            if !current.is_empty() {
                sentences.push(std::mem::take(&mut current));
            }
            continue;
        }
        let mut cols = line.split('\t');
        let form = cols.next().unwrap_or_default();
        let tag = cols.next().ok_or_else(|| Error::Corpus {
            line: i + 1,
            message: "expected two tab-separated columns (form, tag)".into(),
        })?;
        if form.is_empty() || tag.is_empty() || cols.next().is_some() {
            return Err(Error::Corpus {
                line: i + 1,
                message: "expected two tab-separated columns (form, tag)".into(),
            });
        }
        current.push((form.to_string(), tag.to_string()));
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    Ok(sentences)
}

pub fn write_tagged<W: IoWrite>(mut writer: W, sentences: &[TaggedSentence]) -> Result<()> {
    for sentence in sentences {
        for (form, tag) in sentence {
            writeln!(writer, "{form}\t{tag}")?;
        }
        writeln!(writer)?;
    }
    Ok(())
}
