//! Versioned binary model files.
//!
//! A file freezes everything decoding needs: the task's structural
//! settings and label inventory, the learner configuration, and the raw
//! weight tables of every role. Optimizer state (gradient accumulators,
//! feature scales) is deliberately not stored; a loaded model predicts
//! bit-identically to the one saved, and further training starts its
//! step-size bookkeeping fresh.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! "L2SM"  magic
//! u32     format version (1)
//! u8      task kind (0 = dependency parser, 1 = sequence tagger)
//! ...     task section
//! ...     learner section: config, then per-role weight payloads
//! ```
//!
//! Strings are u32-length-prefixed UTF-8; weight slices are u64-length-
//! prefixed raw element bytes. Any header mismatch, truncation, or
//! trailing garbage fails the load; no partial model escapes.

use std::fs;
use std::path::Path;

use crate::conll::PosColumn;
use crate::error::{Error, Result};
use crate::learner::{
    AdaptiveTable, FtrlTable, Learner, LearnerConfig, LearnerKind, LinearTable, Net, NetFtrl,
    PolicyModel,
};
use crate::parser::{DepParser, FeatureSet, ParserSettings};
use crate::tagger::SeqTagger;
use crate::vocab::LabelVocab;

const MAGIC: [u8; 4] = *b"L2SM";
const VERSION: u32 = 1;
const TASK_PARSER: u8 = 0;
pub(crate) const TASK_TAGGER: u8 = 1;

/// A parser model reassembled from a file: the task, the policy, and the
/// history window the policy's features were trained with.
#[derive(Debug)]
pub struct ParserModel {
    pub parser: DepParser,
    pub policy: PolicyModel,
    pub history: usize,
}

/// Serializes a trained parser. `history` is the action-history window
/// used during training; decoding must replay the same window.
pub fn serialize_parser(
    parser: &DepParser,
    policy: &PolicyModel,
    history: usize,
) -> Result<Vec<u8>> {
    let settings = parser.settings();
    if settings.bits != policy.config().bits {
        return Err(Error::Config(format!(
            "feature space hashes into {} bits but the learner tables were sized for {}",
            settings.bits,
            policy.config().bits
        )));
    }
    let expected = parser.role_classes();
    if expected.len() != policy.role_count()
        || expected
            .iter()
            .enumerate()
            .any(|(r, &c)| policy.classes_of(r) != c)
    {
        return Err(Error::Config(
            "policy roles do not match the parser's decision roles".into(),
        ));
    }

    let mut w = Writer::default();
    w.bytes(&MAGIC);
    w.u32(VERSION);
    w.u8(TASK_PARSER);

    w.u8(settings.bits);
    w.u8(feature_set_tag(settings.feature_set));
    w.u8(u8::from(settings.labeled));
    w.u8(match settings.pos_column {
        PosColumn::Fine => 0,
        PosColumn::Coarse => 1,
    });
    w.u32(history as u32);
    w.u32(parser.root_label());
    w.u32(parser.labels().len());
    for name in parser.labels().names() {
        w.str(name);
    }

    write_policy(&mut w, policy);
    Ok(w.out)
}

/// Rebuilds a parser and its policy from `serialize_parser` output.
pub fn deserialize_parser(bytes: &[u8]) -> Result<ParserModel> {
    let mut r = Reader::new(bytes);
    read_header(&mut r, TASK_PARSER)?;

    let bits = r.u8()?;
    let feature_set = feature_set_from_tag(r.u8()?)?;
    let labeled = match r.u8()? {
        0 => false,
        1 => true,
        other => return Err(Error::Model(format!("labeled flag byte {other}"))),
    };
    let pos_column = match r.u8()? {
        0 => PosColumn::Fine,
        1 => PosColumn::Coarse,
        other => return Err(Error::Model(format!("pos column byte {other}"))),
    };
    let history = r.u32()? as usize;
    let root_label = r.u32()?;
    let count = r.u32()?;
    let mut names = Vec::with_capacity(count as usize);
    for _ in 0..count {
        names.push(r.str()?);
    }
    let labels = LabelVocab::from_names(names);
    if labels.len() != count {
        return Err(Error::Model("label inventory holds duplicates".into()));
    }
    if root_label >= labels.len() {
        return Err(Error::Model(format!(
            "root label id {root_label} outside the {} stored labels",
            labels.len()
        )));
    }

    let settings = ParserSettings {
        bits,
        feature_set,
        labeled,
        pos_column,
        root_label: Some(labels.name(root_label).to_string()),
    };
    let parser = DepParser::with_vocab(settings, labels, root_label);

    let policy = read_policy(&mut r, bits, &parser.role_classes())?;
    r.finish()?;
    Ok(ParserModel {
        parser,
        policy,
        history,
    })
}

pub fn save_parser(
    path: &Path,
    parser: &DepParser,
    policy: &PolicyModel,
    history: usize,
) -> Result<()> {
    let bytes = serialize_parser(parser, policy, history)?;
    fs::write(path, bytes)?;
    Ok(())
}

pub fn load_parser(path: &Path) -> Result<ParserModel> {
    deserialize_parser(&fs::read(path)?)
}

/// A tagger model reassembled from a file.
#[derive(Debug)]
pub struct TaggerModel {
    pub tagger: SeqTagger,
    pub policy: PolicyModel,
    pub history: usize,
}

pub fn serialize_tagger(
    tagger: &SeqTagger,
    policy: &PolicyModel,
    history: usize,
) -> Result<Vec<u8>> {
    if tagger.bits() != policy.config().bits {
        return Err(Error::Config(format!(
            "feature space hashes into {} bits but the learner tables were sized for {}",
            tagger.bits(),
            policy.config().bits
        )));
    }
    if policy.role_count() != 1 || policy.classes_of(0) != tagger.tags().len() as usize {
        return Err(Error::Config(
            "policy roles do not match the tagger's single decision role".into(),
        ));
    }

    let mut w = Writer::default();
    w.bytes(&MAGIC);
    w.u32(VERSION);
    w.u8(TASK_TAGGER);

    w.u8(tagger.bits());
    w.u32(history as u32);
    w.u32(tagger.tags().len());
    for name in tagger.tags().names() {
        w.str(name);
    }

    write_policy(&mut w, policy);
    Ok(w.out)
}

pub fn deserialize_tagger(bytes: &[u8]) -> Result<TaggerModel> {
    let mut r = Reader::new(bytes);
    read_header(&mut r, TASK_TAGGER)?;

    let bits = r.u8()?;
    let history = r.u32()? as usize;
    let count = r.u32()?;
    let mut names = Vec::with_capacity(count as usize);
    for _ in 0..count {
        names.push(r.str()?);
    }
    let tags = LabelVocab::from_names(names);
    if tags.len() != count {
        return Err(Error::Model("tag inventory holds duplicates".into()));
    }
    let tagger = SeqTagger::with_vocab(bits, tags);

    let policy = read_policy(&mut r, bits, &tagger.role_classes())?;
    r.finish()?;
    Ok(TaggerModel {
        tagger,
        policy,
        history,
    })
}

pub fn save_tagger(
    path: &Path,
    tagger: &SeqTagger,
    policy: &PolicyModel,
    history: usize,
) -> Result<()> {
    let bytes = serialize_tagger(tagger, policy, history)?;
    fs::write(path, bytes)?;
    Ok(())
}

pub fn load_tagger(path: &Path) -> Result<TaggerModel> {
    deserialize_tagger(&fs::read(path)?)
}

fn feature_set_tag(set: FeatureSet) -> u8 {
    FeatureSet::ALL.iter().position(|&s| s == set).unwrap() as u8
}

fn feature_set_from_tag(tag: u8) -> Result<FeatureSet> {
    FeatureSet::ALL
        .get(tag as usize)
        .copied()
        .ok_or_else(|| Error::Model(format!("feature set byte {tag}")))
}

fn read_header(r: &mut Reader<'_>, want_task: u8) -> Result<()> {
    let magic = r.array::<4>()?;
    if magic != MAGIC {
        return Err(Error::Model("not a model file (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Model(format!(
            "format version {version}, this build reads {VERSION}"
        )));
    }
    let task = r.u8()?;
    if task != want_task {
        let held = match task {
            TASK_PARSER => "a dependency parser".into(),
            TASK_TAGGER => "a sequence tagger".into(),
            other => format!("unknown task kind {other}"),
        };
        return Err(Error::Model(format!("file holds {held}")));
    }
    Ok(())
}

// --- learner section -----------------------------------------------------

pub(crate) fn write_policy(w: &mut Writer, policy: &PolicyModel) {
    let c = policy.config();
    w.u8(learner_kind_tag(c.kind));
    w.u8(c.bits);
    w.u64(c.hidden as u64);
    w.f32(c.learning_rate);
    w.f32(c.ftrl_alpha);
    w.f32(c.ftrl_beta);
    w.f32(c.ftrl_l1);
    w.f32(c.ftrl_l2);
    w.u64(c.seed);

    w.u32(policy.role_count() as u32);
    for role in &policy.roles {
        w.u32(role_classes_of(role) as u32);
        match role {
            Learner::Sgd(t) => w.f32_slice(&t.weights),
            Learner::SgdPlus(t) => w.f32_slice(&t.weights),
            Learner::Nn(n) => write_net(w, n),
            Learner::NnFtrl(n) => write_net(w, &n.net),
            Learner::Multiclass(t) => w.f32_slice(&t.weights),
        }
    }
}

/// `bits` is the feature-space width the surrounding task declared; the
/// stored learner config must agree, and the stored roles must match the
/// task's decision roles exactly.
pub(crate) fn read_policy(
    r: &mut Reader<'_>,
    bits: u8,
    expected_roles: &[usize],
) -> Result<PolicyModel> {
    let kind = learner_kind_from_tag(r.u8()?)?;
    let config = LearnerConfig {
        kind,
        bits: r.u8()?,
        hidden: r.u64()? as usize,
        learning_rate: r.f32()?,
        ftrl_alpha: r.f32()?,
        ftrl_beta: r.f32()?,
        ftrl_l1: r.f32()?,
        ftrl_l2: r.f32()?,
        seed: r.u64()?,
    };
    if config.bits != bits {
        return Err(Error::Model(format!(
            "learner tables sized for {} bits inside a {bits}-bit task",
            config.bits
        )));
    }

    let roles = r.u32()? as usize;
    if roles != expected_roles.len() {
        return Err(Error::Model(format!(
            "{roles} stored roles, task declares {}",
            expected_roles.len()
        )));
    }
    let table = 1usize << config.bits;
    let mut loaded = Vec::with_capacity(roles);
    for (role, &expected_classes) in expected_roles.iter().enumerate() {
        let classes = r.u32()? as usize;
        if classes != expected_classes {
            return Err(Error::Model(format!(
                "role {role} stores {classes} classes, task declares {expected_classes}"
            )));
        }
        let learner = match kind {
            LearnerKind::Sgd => Learner::Sgd(LinearTable {
                classes,
                weights: r.f32_slice(table * classes)?,
            }),
            // Scales restart at 1 (every live feature value is rescaled in
            // on first sight) and squared-gradient history restarts empty.
            LearnerKind::SgdPlus => Learner::SgdPlus(AdaptiveTable {
                classes,
                weights: r.f32_slice(table * classes)?,
                grad_squares: vec![0.0; table * classes],
                scales: vec![1.0; table],
            }),
            LearnerKind::Nn => Learner::Nn(read_net(r, table, config.hidden, classes)?),
            LearnerKind::NnFtrl => {
                let net = read_net(r, table, config.hidden, classes)?;
                Learner::NnFtrl(NetFtrl::warm_start(net, config.ftrl_params()))
            }
            LearnerKind::Multiclass => {
                let weights = r.f32_slice(table * classes)?;
                Learner::Multiclass(FtrlTable::warm_start(
                    classes,
                    config.ftrl_params(),
                    weights,
                ))
            }
        };
        loaded.push(learner);
    }
    Ok(PolicyModel {
        config,
        roles: loaded,
    })
}

fn learner_kind_tag(kind: LearnerKind) -> u8 {
    LearnerKind::ALL.iter().position(|&k| k == kind).unwrap() as u8
}

fn learner_kind_from_tag(tag: u8) -> Result<LearnerKind> {
    LearnerKind::ALL
        .get(tag as usize)
        .copied()
        .ok_or_else(|| Error::Model(format!("learner kind byte {tag}")))
}

fn role_classes_of(role: &Learner) -> usize {
    match role {
        Learner::Sgd(t) => t.classes,
        Learner::SgdPlus(t) => t.classes,
        Learner::Nn(n) => n.classes,
        Learner::NnFtrl(n) => n.net.classes,
        Learner::Multiclass(t) => t.classes,
    }
}

fn write_net(w: &mut Writer, net: &Net) {
    w.f64_slice(&net.w1);
    w.f64_slice(&net.b1);
    w.f64_slice(&net.w2);
    w.f64_slice(&net.b2);
}

fn read_net(r: &mut Reader<'_>, table: usize, hidden: usize, classes: usize) -> Result<Net> {
    Ok(Net {
        hidden,
        classes,
        w1: r.f64_slice(table * hidden)?,
        b1: r.f64_slice(hidden)?,
        w2: r.f64_slice(hidden * classes)?,
        b2: r.f64_slice(classes)?,
    })
}

// --- byte plumbing --------------------------------------------------------

#[derive(Default)]
pub(crate) struct Writer {
    out: Vec<u8>,
}

impl Writer {
    pub(crate) fn bytes(&mut self, b: &[u8]) {
        self.out.extend_from_slice(b);
    }

    pub(crate) fn u8(&mut self, v: u8) {
        self.out.push(v);
    }

    pub(crate) fn u32(&mut self, v: u32) {
        self.out.extend_from_slice(&v.to_le_bytes());
    }

    pub(crate) fn u64(&mut self, v: u64) {
        self.out.extend_from_slice(&v.to_le_bytes());
    }

    pub(crate) fn f32(&mut self, v: f32) {
        self.out.extend_from_slice(&v.to_le_bytes());
    }

    pub(crate) fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.bytes(s.as_bytes());
    }

    pub(crate) fn f32_slice(&mut self, xs: &[f32]) {
        self.u64(xs.len() as u64);
        self.out.reserve(xs.len() * 4);
        for x in xs {
            self.out.extend_from_slice(&x.to_le_bytes());
        }
    }

    pub(crate) fn f64_slice(&mut self, xs: &[f64]) {
        self.u64(xs.len() as u64);
        self.out.reserve(xs.len() * 8);
        for x in xs {
            self.out.extend_from_slice(&x.to_le_bytes());
        }
    }
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| {
                Error::Model(format!(
                    "truncated: wanted {len} bytes at offset {}, file ends at {}",
                    self.pos,
                    self.buf.len()
                ))
            })?;
        let slice = &self.buf[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    pub(crate) fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().unwrap())
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.array::<1>()?[0])
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    pub(crate) fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.array()?))
    }

    pub(crate) fn str(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| Error::Model("string field is not UTF-8".into()))
    }

    fn slice_header(&mut self, expected: usize, width: usize) -> Result<usize> {
        let stored = self.u64()?;
        if stored != expected as u64 {
            return Err(Error::Model(format!(
                "weight slice holds {stored} entries, layout needs {expected}"
            )));
        }
        // The length is re-checked against the remaining bytes before any
        // allocation, so a forged header cannot balloon memory.
        if expected
            .checked_mul(width)
            .is_none_or(|total| self.pos + total > self.buf.len())
        {
            return Err(Error::Model("weight slice runs past the file end".into()));
        }
        Ok(expected)
    }

    pub(crate) fn f32_slice(&mut self, expected: usize) -> Result<Vec<f32>> {
        let len = self.slice_header(expected, 4)?;
        let raw = self.take(len * 4)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub(crate) fn f64_slice(&mut self, expected: usize) -> Result<Vec<f64>> {
        let len = self.slice_header(expected, 8)?;
        let raw = self.take(len * 8)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    /// The whole buffer must be consumed; leftovers mean a layout drift.
    pub(crate) fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Model(format!(
                "{} trailing bytes after the model payload",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}
