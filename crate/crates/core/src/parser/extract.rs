//! Feature extraction for parser configurations.
//!
//! Thirteen word slots around the stack/buffer boundary, a block of small
//! integer-valued state features, a constant, and a namespace reserved for
//! the engine's action history. Higher tiers add quadratic and cubic
//! conjunctions over whole namespaces.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::features::{FeatureSpace, FeatureVector, NamespaceId};
use crate::parser::state::Configuration;

/// Slot order is load-bearing: it fixes namespace ids and therefore every
/// hashed index. `s*` walk down the stack, `b*` along the buffer; `sl/sr`
/// are the extreme children of the stack top, `bl` of the buffer front,
/// `s2l1` the leftmost child of the second stack item.
pub const SLOT_NAMES: [&str; 13] = [
    "s1", "s2", "s3", "b1", "b2", "b3", "sl1", "sl2", "sr1", "sr2", "bl1", "bl2", "s2l1",
];

/// Slots from this index on describe children of other slots.
const FIRST_CHILD_SLOT: usize = 6;

const PAIRS: [(&str, &str); 19] = [
    ("s1", "s2"),
    ("s1", "b1"),
    ("s1", "s1"),
    ("s2", "s2"),
    ("s3", "s3"),
    ("b1", "b1"),
    ("b2", "b2"),
    ("b3", "b3"),
    ("b1", "b2"),
    ("s1", "sl1"),
    ("s1", "sr1"),
    ("b1", "bl1"),
    ("val", "s1"),
    ("val", "s2"),
    ("val", "s3"),
    ("val", "b1"),
    ("val", "b2"),
    ("val", "b3"),
    ("val", "val"),
];

const TRIPLES: [(&str, &str, &str); 14] = [
    ("b1", "b2", "b3"),
    ("s1", "b1", "b2"),
    ("s1", "s2", "b1"),
    ("s1", "s2", "s3"),
    ("s1", "b1", "bl1"),
    ("b1", "bl1", "bl2"),
    ("s1", "sl1", "sl2"),
    ("s1", "s2", "s2"),
    ("s1", "sr1", "b1"),
    ("s1", "sl1", "b1"),
    ("s1", "sr1", "sr2"),
    ("s1", "b1", "sl1"),
    ("s1", "b1", "s2l1"),
    ("s1", "b1", "sr1"),
];

/// How much template structure to register on top of the unigram slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureSet {
    /// Slot unigrams only.
    Uni,
    /// Unigrams plus pairwise conjunctions.
    UniBi,
    /// Unigrams, pairs, and triple conjunctions.
    Full,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 3] = [FeatureSet::Uni, FeatureSet::UniBi, FeatureSet::Full];

    pub fn name(self) -> &'static str {
        match self {
            FeatureSet::Uni => "uni",
            FeatureSet::UniBi => "uni+bi",
            FeatureSet::Full => "full",
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "uni" => Ok(FeatureSet::Uni),
            "uni+bi" => Ok(FeatureSet::UniBi),
            "full" => Ok(FeatureSet::Full),
            other => Err(Error::Config(format!(
                "unknown feature set {other:?}; expected one of uni, uni+bi, full"
            ))),
        }
    }
}

/// Namespace handles resolved at registration time.
#[derive(Debug)]
pub(crate) struct Layout {
    slots: [NamespaceId; 13],
    val: NamespaceId,
    cnst: NamespaceId,
    pub(crate) hist: NamespaceId,
}

/// Register the parser's namespaces and the templates for `set`.
pub(crate) fn build(bits: u8, set: FeatureSet) -> (FeatureSpace, Layout) {
    let mut space = FeatureSpace::new(bits);
    let slots = SLOT_NAMES.map(|name| space.namespace(name));
    let val = space.namespace("val");
    let cnst = space.namespace("const");
    let hist = space.namespace("hist");
    if matches!(set, FeatureSet::UniBi | FeatureSet::Full) {
        for (a, b) in PAIRS {
            space.pair(a, b);
        }
    }
    if matches!(set, FeatureSet::Full) {
        for (a, b, c) in TRIPLES {
            space.triple(a, b, c);
        }
    }
    (space, Layout { slots, val, cnst, hist })
}

/// The feature space a parser model uses for a given width and tier.
pub fn feature_space(bits: u8, set: FeatureSet) -> FeatureSpace {
    build(bits, set).0
}

/// Per-token hash keys, computed once per sentence so slot extraction does
/// not rebuild strings on every step. Index 0 is an unused placeholder for
/// the root.
pub(crate) struct TokenKeys {
    word: Vec<Vec<u8>>,
    pos: Vec<Vec<u8>>,
}

impl TokenKeys {
    pub(crate) fn new<'a>(tokens: impl Iterator<Item = (&'a str, &'a str)>) -> Self {
        let mut word = vec![Vec::new()];
        let mut pos = vec![Vec::new()];
        for (w, p) in tokens {
            word.push(key(b"w=", w));
            pos.push(key(b"p=", p));
        }
        TokenKeys { word, pos }
    }

}

fn key(prefix: &[u8], s: &str) -> Vec<u8> {
    let mut k = Vec::with_capacity(prefix.len() + s.len());
    k.extend_from_slice(prefix);
    k.extend_from_slice(s.as_bytes());
    k
}

impl Layout {
    /// Emit the features of `cfg` into `out`. `label_count` sizes the
    /// missing-child sentinel; `labeled` additionally keys child slots by
    /// their arc label.
    pub(crate) fn extract(
        &self,
        space: &FeatureSpace,
        cfg: &Configuration,
        keys: &TokenKeys,
        labeled: bool,
        label_count: u32,
        out: &mut FeatureVector,
    ) {
        let n = cfg.n();
        let front = cfg.buffer_front();
        let s1 = cfg.stack_at(0);
        let s2 = cfg.stack_at(1);
        let s3 = cfg.stack_at(2);
        let b1 = (front <= n).then_some(front);
        let b2 = (front < n).then_some(front + 1);
        let b3 = (front + 1 < n).then_some(front + 2);

        // Children are only inspected through real-word parents; the root's
        // dependents are deliberately not a slot.
        let child = |parent: Option<usize>,
                     pick: fn(&Configuration, usize) -> Option<usize>|
         -> Option<usize> {
            match parent {
                Some(p) if p != 0 => pick(cfg, p),
                _ => None,
            }
        };
        let sl1 = child(s1, Configuration::leftmost_child);
        let sl2 = child(s1, Configuration::second_leftmost_child);
        let sr1 = child(s1, Configuration::rightmost_child);
        let sr2 = child(s1, Configuration::second_rightmost_child);
        let bl1 = child(b1, Configuration::leftmost_child);
        let bl2 = child(b1, Configuration::second_leftmost_child);
        let s2l1 = child(s2, Configuration::leftmost_child);

        let slots = [s1, s2, s3, b1, b2, b3, sl1, sl2, sr1, sr2, bl1, bl2, s2l1];
        for (k, slot) in slots.iter().enumerate() {
            let ns = self.slots[k];
            match slot {
                Some(p) if *p != 0 => {
                    out.add_bytes(space, ns, &keys.word[*p]);
                    out.add_bytes(space, ns, &keys.pos[*p]);
                    if labeled && k >= FIRST_CHILD_SLOT {
                        let mut lk = [0u8; 6];
                        lk[..2].copy_from_slice(b"l=");
                        lk[2..].copy_from_slice(&cfg.label_of(*p).to_le_bytes());
                        out.add_bytes(space, ns, &lk);
                    }
                }
                // The root and an absent word share one key per slot; the
                // slots live in distinct namespaces, so no cross-talk.
                _ => out.add_bytes(space, ns, b"e="),
            }
        }

        // Small-integer state block, one raw id per (feature, value) pair.
        let s1p = s1.unwrap_or(0);
        let dist = if front > n { 6 } else { (front - s1p).min(5) as u64 };
        let child_label = |c: Option<usize>| -> u64 {
            match c {
                Some(p) => u64::from(cfg.label_of(p)),
                None => u64::from(label_count),
            }
        };
        let vals = [
            dist,
            u64::from(cfg.left_valency(s1p).min(5)),
            u64::from(cfg.right_valency(s1p).min(5)),
            match b1 {
                Some(p) => u64::from(cfg.left_valency(p).min(5)),
                None => 6,
            },
            child_label(sl1),
            child_label(sl2),
            child_label(sr1),
            child_label(sr2),
            child_label(bl1),
            child_label(bl2),
        ];
        for (j, v) in vals.iter().enumerate() {
            out.add_id(space, self.val, ((j as u64) << 32) | v);
        }

        out.add_id(space, self.cnst, 0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::state::ParseAction;

    fn toy_keys() -> TokenKeys {
        let forms = ["a", "b", "c", "d", "e"];
        let tags = ["A", "B", "C", "D", "E"];
        TokenKeys::new(forms.iter().copied().zip(tags.iter().copied()))
    }

    #[test]
    fn feature_set_names_round_trip() {
        for set in FeatureSet::ALL {
            assert_eq!(set.name().parse::<FeatureSet>().unwrap(), set);
        }
        assert!("quad".parse::<FeatureSet>().is_err());
    }

    #[test]
    fn template_registration_follows_the_tier() {
        let uni = feature_space(18, FeatureSet::Uni);
        assert_eq!(uni.namespace_count(), 16);
        assert!(uni.pairs().is_empty());
        assert!(uni.triples().is_empty());

        let bi = feature_space(18, FeatureSet::UniBi);
        assert_eq!(bi.pairs().len(), 19);
        assert!(bi.triples().is_empty());

        let full = feature_space(18, FeatureSet::Full);
        assert_eq!(full.pairs().len(), 19);
        assert_eq!(full.triples().len(), 14);
    }

    /// Initial state of a 3-word sentence. Slot sizes: the three buffer
    /// slots hold two keys each, every other slot one, val ten, const one.
    /// The pair/triple sums below follow from those sizes.
    #[test]
    fn expansion_counts_at_the_initial_state() {
        let keys = TokenKeys::new([("x", "X"), ("y", "Y"), ("z", "Z")].into_iter());
        let cfg = Configuration::new(3);
        for (set, want) in [
            (FeatureSet::Uni, 27),
            (FeatureSet::UniBi, 27 + 216),
            (FeatureSet::Full, 27 + 216 + 32),
        ] {
            let (space, layout) = build(18, set);
            let mut fv = space.vector();
            layout.extract(&space, &cfg, &keys, false, 8, &mut fv);
            assert_eq!(fv.expanded_count(&space), want, "set {set}");
        }
    }

    #[test]
    fn child_slots_appear_once_arcs_exist() {
        let (space, layout) = build(18, FeatureSet::Uni);
        let keys = toy_keys();
        let mut cfg = Configuration::new(5);
        cfg.apply(ParseAction::Shift, 0).unwrap();
        cfg.apply(ParseAction::ReduceLeft, 7).unwrap();
        // Stack [0], front 2, word 1 is the leftmost child of word 2.
        let bl1 = space.lookup("bl1").unwrap();
        let s1 = space.lookup("s1").unwrap();

        let mut fv = space.vector();
        layout.extract(&space, &cfg, &keys, true, 10, &mut fv);
        assert_eq!(fv.namespace_features(bl1).len(), 3, "word, tag, label");
        assert_eq!(fv.namespace_features(s1).len(), 1, "root is empty-keyed");

        let mut fv = space.vector();
        layout.extract(&space, &cfg, &keys, false, 10, &mut fv);
        assert_eq!(fv.namespace_features(bl1).len(), 2, "word and tag only");
    }

    #[test]
    fn state_values_encode_distance_valency_and_labels() {
        let (space, layout) = build(18, FeatureSet::Uni);
        let keys = toy_keys();
        let mut cfg = Configuration::new(5);
        cfg.apply(ParseAction::Shift, 0).unwrap();
        cfg.apply(ParseAction::ReduceLeft, 7).unwrap();

        let mut fv = space.vector_with_audit();
        layout.extract(&space, &cfg, &keys, true, 10, &mut fv);
        let raws: Vec<String> = fv
            .audit_lines()
            .unwrap()
            .iter()
            .filter(|line| line.namespace == "val")
            .map(|line| line.raw.clone())
            .collect();
        let id = |j: u64, v: u64| ((j << 32) | v).to_string();
        // Stack top is the root, front is word 2: distance 2, left valency
        // of the front is 1, bl1 carries label 7, bl2 the sentinel 10.
        assert!(raws.contains(&id(0, 2)));
        assert!(raws.contains(&id(3, 1)));
        assert!(raws.contains(&id(8, 7)));
        assert!(raws.contains(&id(9, 10)));
        assert_eq!(raws.len(), 10);
    }

    #[test]
    fn buffer_exhaustion_uses_sentinel_values() {
        let (space, layout) = build(18, FeatureSet::Uni);
        let keys = TokenKeys::new([("x", "X")].into_iter());
        let mut cfg = Configuration::new(1);
        cfg.apply(ParseAction::Shift, 0).unwrap();
        // Stack [0, 1], buffer empty.
        let mut fv = space.vector_with_audit();
        layout.extract(&space, &cfg, &keys, false, 4, &mut fv);
        let raws: Vec<String> = fv
            .audit_lines()
            .unwrap()
            .iter()
            .filter(|line| line.namespace == "val")
            .map(|line| line.raw.clone())
            .collect();
        assert!(raws.contains(&(6u64).to_string()), "distance sentinel");
        assert!(raws.contains(&(((3u64) << 32) | 6).to_string()), "valency sentinel");
        let b1 = space.lookup("b1").unwrap();
        assert_eq!(fv.namespace_features(b1).len(), 1, "empty-keyed buffer slot");
    }
}
