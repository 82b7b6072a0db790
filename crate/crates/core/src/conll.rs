//! CoNLL-X tabular I/O, projectivity testing, and punctuation detection.
//!
//! Sentences are blocks of tab-separated 10-column token lines
//! (ID FORM LEMMA CPOSTAG POSTAG FEATS HEAD DEPREL PHEAD PDEPREL)
//! separated by blank lines. Columns we do not interpret are preserved
//! verbatim so that reading and re-writing a file is the identity apart
//! from any columns deliberately overwritten with predictions.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub form: String,
    pub lemma: String,
    pub cpostag: String,
    pub postag: String,
    pub feats: String,
    /// 0 means the artificial root.
    pub head: usize,
    pub deprel: String,
    pub phead: String,
    pub pdeprel: String,
}

impl Token {
    pub fn new(form: &str, postag: &str, head: usize, deprel: &str) -> Self {
        Token {
            form: form.to_string(),
            lemma: "_".to_string(),
            cpostag: postag.to_string(),
            postag: postag.to_string(),
            feats: "_".to_string(),
            head,
            deprel: deprel.to_string(),
            phead: "_".to_string(),
            pdeprel: "_".to_string(),
        }
    }
}

/// Which part-of-speech column feeds the feature extractor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PosColumn {
    /// POSTAG, column 5.
    Fine,
    /// CPOSTAG, column 4.
    Coarse,
}

impl PosColumn {
    pub fn of<'a>(&self, t: &'a Token) -> &'a str {
        match self {
            PosColumn::Fine => &t.postag,
            PosColumn::Coarse => &t.cpostag,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Sentence {
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Head positions indexed by word position 1..=n; entry 0 is unused.
    pub fn heads(&self) -> Vec<usize> {
        let mut h = vec![0; self.tokens.len() + 1];
        for (i, t) in self.tokens.iter().enumerate() {
            h[i + 1] = t.head;
        }
        h
    }

    pub fn is_projective(&self) -> bool {
        heads_projective(&self.heads())
    }
}

/// Parse a whole CoNLL-X file. Errors carry the 1-based line number.
pub fn read_sentences<R: BufRead>(reader: R) -> Result<Vec<Sentence>> {
    let mut sentences = Vec::new();
    let mut tokens: Vec<Token> = Vec::new();
    let mut token_lines: Vec<usize> = Vec::new();

    let mut flush = |tokens: &mut Vec<Token>, token_lines: &mut Vec<usize>| -> Result<()> {
        if tokens.is_empty() {
            return Ok(());
        }
        for (i, t) in tokens.iter().enumerate() {
            if t.head > tokens.len() {
                return Err(Error::Corpus {
                    line: token_lines[i],
                    message: format!(
                        "head index {} out of range for a {}-token sentence",
                        t.head,
                        tokens.len()
                    ),
                });
            }
            if t.head == i + 1 {
                return Err(Error::Corpus {
                    line: token_lines[i],
                    message: format!("token {} is its own head", i + 1),
                });
            }
        }
        sentences.push(Sentence { tokens: std::mem::take(tokens) });
        token_lines.clear();
        Ok(())
    };

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        if line.trim().is_empty() {
            flush(&mut tokens, &mut token_lines)?;
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::Corpus {
                line: lineno,
                message: format!("expected 10 tab-separated columns, found {}", cols.len()),
            });
        }
        let id: usize = cols[0].parse().map_err(|_| Error::Corpus {
            line: lineno,
            message: format!("token id is not an integer: {:?}", cols[0]),
        })?;
        if id != tokens.len() + 1 {
            return Err(Error::Corpus {
                line: lineno,
                message: format!("token id {} out of sequence, expected {}", id, tokens.len() + 1),
            });
        }
        let head: usize = cols[6].parse().map_err(|_| Error::Corpus {
            line: lineno,
            message: format!("head is not an integer: {:?}", cols[6]),
        })?;
        tokens.push(Token {
            form: cols[1].to_string(),
            lemma: cols[2].to_string(),
            cpostag: cols[3].to_string(),
            postag: cols[4].to_string(),
            feats: cols[5].to_string(),
            head,
            deprel: cols[7].to_string(),
            phead: cols[8].to_string(),
            pdeprel: cols[9].to_string(),
        });
        token_lines.push(lineno);
    }
    flush(&mut tokens, &mut token_lines)?;
    Ok(sentences)
}

pub fn read_file(path: &std::path::Path) -> Result<Vec<Sentence>> {
    let file = std::fs::File::open(path)?;
    read_sentences(std::io::BufReader::new(file))
}

pub fn write_sentences<W: Write>(writer: &mut W, sentences: &[Sentence]) -> Result<()> {
    for s in sentences {
        for (i, t) in s.tokens.iter().enumerate() {
            writeln!(
                writer,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                i + 1,
                t.form,
                t.lemma,
                t.cpostag,
                t.postag,
                t.feats,
                t.head,
                t.deprel,
                t.phead,
                t.pdeprel
            )?;
        }
        writeln!(writer)?;
    }
    Ok(())
}

pub fn write_file(path: &std::path::Path, sentences: &[Sentence]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_sentences(&mut w, sentences)
}

/// Projectivity over head arrays (`heads[m]` = head of word m, 0 = root).
///
/// Every arc, the root arc included, spans an interval; the tree is
/// projective exactly when no two intervals partially overlap. Intervals
/// sorted by (left asc, right desc) nest properly iff no such overlap
/// exists, which a single stack pass checks in O(n log n).
pub fn heads_projective(heads: &[usize]) -> bool {
    let mut intervals: Vec<(usize, usize)> = (1..heads.len())
        .map(|m| {
            let h = heads[m];
            (h.min(m), h.max(m))
        })
        .collect();
    intervals.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
    let mut stack: Vec<usize> = Vec::new();
    for (left, right) in intervals {
        while stack.last().is_some_and(|&r| r <= left) {
            stack.pop();
        }
        if stack.last().is_some_and(|&r| r < right) {
            return false;
        }
        stack.push(right);
    }
    true
}

/// True when the form consists entirely of Unicode punctuation
/// (general categories Pc, Pd, Ps, Pe, Pi, Pf, Po).
pub fn is_punctuation(form: &str) -> bool {
    !form.is_empty() && form.chars().all(is_punct_char)
}

fn is_punct_char(c: char) -> bool {
    let cp = c as u32;
    PUNCT_RANGES
        .binary_search_by(|&(lo, hi)| {
            if hi < cp {
                std::cmp::Ordering::Less
            } else if lo > cp {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Equal
            }
        })
        .is_ok()
}

// Inclusive codepoint ranges of Unicode general category P (Unicode 13).
const PUNCT_RANGES: &[(u32, u32)] = &[
    (0x21, 0x23), (0x25, 0x2a), (0x2c, 0x2f), (0x3a, 0x3b), (0x3f, 0x40), (0x5b, 0x5d),
    (0x5f, 0x5f), (0x7b, 0x7b), (0x7d, 0x7d), (0xa1, 0xa1), (0xa7, 0xa7), (0xab, 0xab),
    (0xb6, 0xb7), (0xbb, 0xbb), (0xbf, 0xbf), (0x37e, 0x37e), (0x387, 0x387), (0x55a, 0x55f),
    (0x589, 0x58a), (0x5be, 0x5be), (0x5c0, 0x5c0), (0x5c3, 0x5c3), (0x5c6, 0x5c6), (0x5f3, 0x5f4),
    (0x609, 0x60a), (0x60c, 0x60d), (0x61b, 0x61b), (0x61e, 0x61f), (0x66a, 0x66d), (0x6d4, 0x6d4),
    (0x700, 0x70d), (0x7f7, 0x7f9), (0x830, 0x83e), (0x85e, 0x85e), (0x964, 0x965), (0x970, 0x970),
    (0x9fd, 0x9fd), (0xa76, 0xa76), (0xaf0, 0xaf0), (0xc77, 0xc77), (0xc84, 0xc84), (0xdf4, 0xdf4),
    (0xe4f, 0xe4f), (0xe5a, 0xe5b), (0xf04, 0xf12), (0xf14, 0xf14), (0xf3a, 0xf3d), (0xf85, 0xf85),
    (0xfd0, 0xfd4), (0xfd9, 0xfda), (0x104a, 0x104f), (0x10fb, 0x10fb), (0x1360, 0x1368), (0x1400, 0x1400),
    (0x166e, 0x166e), (0x169b, 0x169c), (0x16eb, 0x16ed), (0x1735, 0x1736), (0x17d4, 0x17d6), (0x17d8, 0x17da),
    (0x1800, 0x180a), (0x1944, 0x1945), (0x1a1e, 0x1a1f), (0x1aa0, 0x1aa6), (0x1aa8, 0x1aad), (0x1b5a, 0x1b60),
    (0x1bfc, 0x1bff), (0x1c3b, 0x1c3f), (0x1c7e, 0x1c7f), (0x1cc0, 0x1cc7), (0x1cd3, 0x1cd3), (0x2010, 0x2027),
    (0x2030, 0x2043), (0x2045, 0x2051), (0x2053, 0x205e), (0x207d, 0x207e), (0x208d, 0x208e), (0x2308, 0x230b),
    (0x2329, 0x232a), (0x2768, 0x2775), (0x27c5, 0x27c6), (0x27e6, 0x27ef), (0x2983, 0x2998), (0x29d8, 0x29db),
    (0x29fc, 0x29fd), (0x2cf9, 0x2cfc), (0x2cfe, 0x2cff), (0x2d70, 0x2d70), (0x2e00, 0x2e2e), (0x2e30, 0x2e4f),
    (0x2e52, 0x2e52), (0x3001, 0x3003), (0x3008, 0x3011), (0x3014, 0x301f), (0x3030, 0x3030), (0x303d, 0x303d),
    (0x30a0, 0x30a0), (0x30fb, 0x30fb), (0xa4fe, 0xa4ff), (0xa60d, 0xa60f), (0xa673, 0xa673), (0xa67e, 0xa67e),
    (0xa6f2, 0xa6f7), (0xa874, 0xa877), (0xa8ce, 0xa8cf), (0xa8f8, 0xa8fa), (0xa8fc, 0xa8fc), (0xa92e, 0xa92f),
    (0xa95f, 0xa95f), (0xa9c1, 0xa9cd), (0xa9de, 0xa9df), (0xaa5c, 0xaa5f), (0xaade, 0xaadf), (0xaaf0, 0xaaf1),
    (0xabeb, 0xabeb), (0xfd3e, 0xfd3f), (0xfe10, 0xfe19), (0xfe30, 0xfe52), (0xfe54, 0xfe61), (0xfe63, 0xfe63),
    (0xfe68, 0xfe68), (0xfe6a, 0xfe6b), (0xff01, 0xff03), (0xff05, 0xff0a), (0xff0c, 0xff0f), (0xff1a, 0xff1b),
    (0xff1f, 0xff20), (0xff3b, 0xff3d), (0xff3f, 0xff3f), (0xff5b, 0xff5b), (0xff5d, 0xff5d), (0xff5f, 0xff65),
    (0x10100, 0x10102), (0x1039f, 0x1039f), (0x103d0, 0x103d0), (0x1056f, 0x1056f), (0x10857, 0x10857), (0x1091f, 0x1091f),
    (0x1093f, 0x1093f), (0x10a50, 0x10a58), (0x10a7f, 0x10a7f), (0x10af0, 0x10af6), (0x10b39, 0x10b3f), (0x10b99, 0x10b9c),
    (0x10ead, 0x10ead), (0x10f55, 0x10f59), (0x11047, 0x1104d), (0x110bb, 0x110bc), (0x110be, 0x110c1), (0x11140, 0x11143),
    (0x11174, 0x11175), (0x111c5, 0x111c8), (0x111cd, 0x111cd), (0x111db, 0x111db), (0x111dd, 0x111df), (0x11238, 0x1123d),
    (0x112a9, 0x112a9), (0x1144b, 0x1144f), (0x1145a, 0x1145b), (0x1145d, 0x1145d), (0x114c6, 0x114c6), (0x115c1, 0x115d7),
    (0x11641, 0x11643), (0x11660, 0x1166c), (0x1173c, 0x1173e), (0x1183b, 0x1183b), (0x11944, 0x11946), (0x119e2, 0x119e2),
    (0x11a3f, 0x11a46), (0x11a9a, 0x11a9c), (0x11a9e, 0x11aa2), (0x11c41, 0x11c45), (0x11c70, 0x11c71), (0x11ef7, 0x11ef8),
    (0x11fff, 0x11fff), (0x12470, 0x12474), (0x16a6e, 0x16a6f), (0x16af5, 0x16af5), (0x16b37, 0x16b3b), (0x16b44, 0x16b44),
    (0x16e97, 0x16e9a), (0x16fe2, 0x16fe2), (0x1bc9f, 0x1bc9f), (0x1da87, 0x1da8b), (0x1e95e, 0x1e95f),
];

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_TOKEN: &str = "1\tHe\t_\tPRP\tPRP\t_\t2\tnsubj\t_\t_\n\
                             2\truns\t_\tVB\tVBZ\t_\t0\troot\t_\t_\n\n";

    #[test]
    fn parses_two_token_sentence() {
        let s = read_sentences(TWO_TOKEN.as_bytes()).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].len(), 2);
        assert_eq!(s[0].tokens[0].form, "He");
        assert_eq!(s[0].tokens[0].head, 2);
        assert_eq!(s[0].tokens[1].head, 0);
        assert_eq!(s[0].tokens[1].deprel, "root");
        assert_eq!(s[0].tokens[1].postag, "VBZ");
        assert_eq!(s[0].tokens[1].cpostag, "VB");
    }

    #[test]
    fn missing_trailing_blank_line_is_fine() {
        let s = read_sentences(TWO_TOKEN.trim_end().as_bytes()).unwrap();
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn empty_input_is_empty() {
        assert!(read_sentences("".as_bytes()).unwrap().is_empty());
        assert!(read_sentences("\n\n\n".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn head_out_of_range_errors_with_line() {
        let text = "1\ta\t_\tX\tX\t_\t3\tdep\t_\t_\n2\tb\t_\tX\tX\t_\t0\troot\t_\t_\n\n";
        let err = read_sentences(text.as_bytes()).unwrap_err();
        match err {
            Error::Corpus { line, message } => {
                assert_eq!(line, 1);
                assert!(message.contains("head index 3"), "{message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn own_head_errors() {
        let text = "1\ta\t_\tX\tX\t_\t1\tdep\t_\t_\n\n";
        let err = read_sentences(text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Corpus { line: 1, .. }));
    }

    #[test]
    fn wrong_column_count_errors_with_line() {
        let text = "1\ta\t_\tX\tX\t_\t0\troot\t_\n\n";
        let err = read_sentences(text.as_bytes()).unwrap_err();
        match err {
            Error::Corpus { line, message } => {
                assert_eq!(line, 1);
                assert!(message.contains("10"), "{message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn duplicate_or_gapped_ids_error() {
        let dup = "1\ta\t_\tX\tX\t_\t0\troot\t_\t_\n1\tb\t_\tX\tX\t_\t1\tdep\t_\t_\n\n";
        assert!(matches!(read_sentences(dup.as_bytes()), Err(Error::Corpus { line: 2, .. })));
        let gap = "1\ta\t_\tX\tX\t_\t0\troot\t_\t_\n3\tb\t_\tX\tX\t_\t1\tdep\t_\t_\n\n";
        assert!(matches!(read_sentences(gap.as_bytes()), Err(Error::Corpus { line: 2, .. })));
    }

    #[test]
    fn non_integer_head_errors() {
        let text = "1\ta\t_\tX\tX\t_\t_\tdep\t_\t_\n\n";
        let err = read_sentences(text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Corpus { line: 1, .. }));
    }

    #[test]
    fn round_trip_is_identity() {
        let text = "1\tFlying\t_\tVBG\tVBG\tfeat=1\t3\tnsubj\t2\tdep\n\
                    2\tplanes\tplane\tNNS\tNNS\t_\t1\tdobj\t_\t_\n\
                    3\tcan\t_\tMD\tMD\t_\t0\troot\t_\t_\n\n\
                    1\tok\t_\tX\tXX\t_\t0\troot\t_\t_\n\n";
        let parsed = read_sentences(text.as_bytes()).unwrap();
        let mut out = Vec::new();
        write_sentences(&mut out, &parsed).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
        let reparsed = read_sentences(text.as_bytes()).unwrap();
        assert_eq!(parsed, reparsed);
    }

    #[test]
    fn projectivity_cases() {
        // chain: every word heads the next
        assert!(heads_projective(&[0, 0, 1, 2, 3]));
        // crossing arcs 1->3 and 2->4
        assert!(!heads_projective(&[0, 3, 4, 0, 0][..]));
        // nested
        assert!(heads_projective(&[0, 3, 3, 0, 3]));
        // single word
        assert!(heads_projective(&[0, 0]));
        // crossing with a root arc: 2 heads 4, root arc to 3 crosses (2,4)
        assert!(!heads_projective(&[0, 2, 0, 0, 2][..]));
    }

    #[test]
    fn projectivity_matches_pairwise_scan() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let n = rng.gen_range(1..=8);
            // random single-rooted tree over positions 1..=n
            let mut heads = vec![0usize; n + 1];
            let root = rng.gen_range(1..=n);
            for (m, head) in heads.iter_mut().enumerate().skip(1) {
                if m == root {
                    *head = 0;
                } else {
                    loop {
                        let h = rng.gen_range(0..=n);
                        if h != m {
                            *head = h;
                            break;
                        }
                    }
                }
            }
            let brute = {
                let arcs: Vec<(usize, usize)> =
                    (1..=n).map(|m| (heads[m].min(m), heads[m].max(m))).collect();
                let mut ok = true;
                for i in 0..arcs.len() {
                    for j in 0..arcs.len() {
                        let (a1, b1) = arcs[i];
                        let (a2, b2) = arcs[j];
                        if a1 < a2 && a2 < b1 && b1 < b2 {
                            ok = false;
                        }
                    }
                }
                ok
            };
            assert_eq!(heads_projective(&heads), brute, "heads={heads:?}");
        }
    }

    #[test]
    fn punctuation_detection() {
        assert!(is_punctuation(","));
        assert!(is_punctuation("--"));
        assert!(is_punctuation("..."));
        assert!(is_punctuation("\u{201c}\u{201d}"));
        assert!(is_punctuation("\u{3001}"));
        assert!(!is_punctuation("can"));
        assert!(!is_punctuation("U.S."));
        assert!(!is_punctuation("$"));
        assert!(!is_punctuation(""));
        assert!(!is_punctuation("+"));
    }

    #[test]
    fn pos_column_selection() {
        let t = Token {
            cpostag: "V".into(),
            postag: "VBZ".into(),
            ..Token::new("runs", "x", 0, "root")
        };
        assert_eq!(PosColumn::Fine.of(&t), "VBZ");
        assert_eq!(PosColumn::Coarse.of(&t), "V");
    }
}
