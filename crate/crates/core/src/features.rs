//! Sparse feature vectors over named namespaces, with hashed indices and
//! configurable pairwise/triple interactions.
//!
//! A [`FeatureSpace`] fixes the hash width, the namespace registry, and the
//! interaction templates. A [`FeatureVector`] holds the extracted unigram
//! features per namespace; interactions are expanded on the fly during
//! prediction and updates so they never need to be materialized.

use crate::hash::{combine, hash_bytes, hash_id};

pub type NamespaceId = usize;

/// Hash width, namespace registry, and interaction templates.
///
/// Two models are feature-compatible exactly when their spaces are equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSpace {
    bits: u8,
    names: Vec<String>,
    salts: Vec<u32>,
    pairs: Vec<(NamespaceId, NamespaceId)>,
    triples: Vec<(NamespaceId, NamespaceId, NamespaceId)>,
}

impl FeatureSpace {
    pub fn new(bits: u8) -> Self {
        assert!(bits > 0 && bits <= 31, "hash width must be in 1..=31 bits");
        FeatureSpace { bits, names: Vec::new(), salts: Vec::new(), pairs: Vec::new(), triples: Vec::new() }
    }

    /// Register (or look up) a namespace. The salt is derived from the name,
    /// so equal names hash identically in every process.
    pub fn namespace(&mut self, name: &str) -> NamespaceId {
        if let Some(id) = self.lookup(name) {
            return id;
        }
        self.names.push(name.to_string());
        self.salts.push(hash_bytes(name.as_bytes(), 0));
        self.names.len() - 1
    }

    pub fn lookup(&self, name: &str) -> Option<NamespaceId> {
        self.names.iter().position(|n| n == name)
    }

    pub fn pair(&mut self, a: &str, b: &str) {
        let (a, b) = (self.namespace(a), self.namespace(b));
        self.pairs.push((a, b));
    }

    pub fn triple(&mut self, a: &str, b: &str, c: &str) {
        let (a, b, c) = (self.namespace(a), self.namespace(b), self.namespace(c));
        self.triples.push((a, b, c));
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    /// Number of addressable hashed indices, `2^bits`.
    pub fn table_size(&self) -> usize {
        1usize << self.bits
    }

    pub fn mask(&self) -> u32 {
        (1u32 << self.bits) - 1
    }

    pub fn namespace_count(&self) -> usize {
        self.names.len()
    }

    pub fn namespace_name(&self, id: NamespaceId) -> &str {
        &self.names[id]
    }

    pub fn pairs(&self) -> &[(NamespaceId, NamespaceId)] {
        &self.pairs
    }

    pub fn triples(&self) -> &[(NamespaceId, NamespaceId, NamespaceId)] {
        &self.triples
    }

    pub fn vector(&self) -> FeatureVector {
        FeatureVector {
            ns: vec![Vec::new(); self.names.len()],
            raw_count: 0,
            sum_sq: 0.0,
            audit: None,
        }
    }

    pub fn vector_with_audit(&self) -> FeatureVector {
        let mut v = self.vector();
        v.audit = Some(Vec::new());
        v
    }
}

/// One `(namespace, raw id, hashed index, value)` record, kept only when the
/// vector was created with auditing enabled.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditLine {
    pub namespace: String,
    pub raw: String,
    pub index: u32,
    pub value: f32,
}

/// Sparse unigram features grouped by namespace.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    ns: Vec<Vec<(u32, f32)>>,
    raw_count: usize,
    sum_sq: f32,
    audit: Option<Vec<AuditLine>>,
}

impl FeatureVector {
    /// Append a feature identified by raw bytes. The index is salted by the
    /// namespace and masked to the space's width; collisions are accepted.
    pub fn add_bytes(&mut self, space: &FeatureSpace, ns: NamespaceId, raw: &[u8]) {
        let index = hash_bytes(raw, space.salts[ns]) & space.mask();
        self.push(space, ns, index, 1.0, || String::from_utf8_lossy(raw).into_owned());
    }

    /// Append a feature identified by a numeric raw id.
    pub fn add_id(&mut self, space: &FeatureSpace, ns: NamespaceId, raw: u64) {
        let index = hash_id(raw, space.salts[ns]) & space.mask();
        self.push(space, ns, index, 1.0, || raw.to_string());
    }

    /// Append a feature with an explicit value.
    pub fn add_weighted(&mut self, space: &FeatureSpace, ns: NamespaceId, raw: &[u8], value: f32) {
        let index = hash_bytes(raw, space.salts[ns]) & space.mask();
        self.push(space, ns, index, value, || String::from_utf8_lossy(raw).into_owned());
    }

    fn push(
        &mut self,
        space: &FeatureSpace,
        ns: NamespaceId,
        index: u32,
        value: f32,
        raw_repr: impl FnOnce() -> String,
    ) {
        debug_assert!((index as usize) < space.table_size());
        if let Some(audit) = &mut self.audit {
            audit.push(AuditLine {
                namespace: space.names[ns].clone(),
                raw: raw_repr(),
                index,
                value,
            });
        }
        self.ns[ns].push((index, value));
        self.raw_count += 1;
        self.sum_sq += value * value;
    }

    pub fn namespace_features(&self, ns: NamespaceId) -> &[(u32, f32)] {
        &self.ns[ns]
    }

    /// Unigram feature count (interactions not included).
    pub fn raw_count(&self) -> usize {
        self.raw_count
    }

    /// Sum of squared unigram values, maintained incrementally.
    pub fn sum_sq(&self) -> f32 {
        debug_assert!({
            let recomputed: f32 = self.ns.iter().flatten().map(|&(_, v)| v * v).sum();
            (recomputed - self.sum_sq).abs() <= 1e-4 * (1.0 + recomputed.abs())
        });
        self.sum_sq
    }

    /// Total feature count after interaction expansion:
    /// `sum |ns| + sum |X|*|Y| + sum |X|*|Y|*|Z|`.
    pub fn expanded_count(&self, space: &FeatureSpace) -> usize {
        let mut n = self.raw_count;
        for &(a, b) in &space.pairs {
            n += self.ns[a].len() * self.ns[b].len();
        }
        for &(a, b, c) in &space.triples {
            n += self.ns[a].len() * self.ns[b].len() * self.ns[c].len();
        }
        n
    }

    /// Visit every expanded feature: unigrams first, then pairs, then
    /// triples, in template order. Interaction values multiply; combined
    /// indices are re-masked.
    pub fn for_each_expanded(&self, space: &FeatureSpace, mut f: impl FnMut(u32, f32)) {
        let mask = space.mask();
        for features in &self.ns {
            for &(i, v) in features {
                f(i, v);
            }
        }
        for &(a, b) in &space.pairs {
            for &(ia, va) in &self.ns[a] {
                for &(ib, vb) in &self.ns[b] {
                    f(combine(ia, ib) & mask, va * vb);
                }
            }
        }
        for &(a, b, c) in &space.triples {
            for &(ia, va) in &self.ns[a] {
                for &(ib, vb) in &self.ns[b] {
                    let ab = combine(ia, ib);
                    for &(ic, vc) in &self.ns[c] {
                        f(combine(ab, ic) & mask, va * vb * vc);
                    }
                }
            }
        }
    }

    /// Expansion materialized into a buffer (prediction/update hot path).
    pub fn expand_into(&self, space: &FeatureSpace, out: &mut Vec<(u32, f32)>) {
        out.clear();
        out.reserve(self.expanded_count(space));
        self.for_each_expanded(space, |i, v| out.push((i, v)));
    }

    pub fn audit_lines(&self) -> Option<&[AuditLine]> {
        self.audit.as_deref()
    }
}
