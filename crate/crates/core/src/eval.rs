//! Attachment scoring for predicted dependency trees.

use crate::conll::{is_punctuation, Sentence};
use crate::error::{Error, Result};

/// Aggregate counts from scoring a prediction against gold trees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ScoreReport {
    pub total_tokens: usize,
    pub scored_tokens: usize,
    pub excluded_tokens: usize,
    pub correct_heads: usize,
    pub correct_labeled: usize,
    pub sentences: usize,
    pub exact_sentences: usize,
}

impl ScoreReport {
    /// Unlabeled attachment score over scored tokens, in [0, 1].
    pub fn uas(&self) -> f64 {
        ratio(self.correct_heads, self.scored_tokens)
    }

    /// Labeled attachment score (head and label both correct).
    pub fn las(&self) -> f64 {
        ratio(self.correct_labeled, self.scored_tokens)
    }

    /// Fraction of sentences whose scored tokens are all fully correct.
    pub fn exact_match(&self) -> f64 {
        ratio(self.exact_sentences, self.sentences)
    }

    /// One `key=value` pair per line, for scripts.
    pub fn machine_readable(&self) -> String {
        format!(
            "uas={:.6}\nlas={:.6}\nexact={:.6}\ntotal_tokens={}\nscored_tokens={}\n\
             excluded_tokens={}\ncorrect_heads={}\ncorrect_labeled={}\nsentences={}\n\
             exact_sentences={}\n",
            self.uas(),
            self.las(),
            self.exact_match(),
            self.total_tokens,
            self.scored_tokens,
            self.excluded_tokens,
            self.correct_heads,
            self.correct_labeled,
            self.sentences,
            self.exact_sentences,
        )
    }

    pub fn human_readable(&self) -> String {
        format!(
            "  UAS          {:6.2}%  ({}/{})\n\
             \x20 LAS          {:6.2}%  ({}/{})\n\
             \x20 exact match  {:6.2}%  ({}/{})\n\
             \x20 tokens       {} scored, {} excluded, {} total\n",
            100.0 * self.uas(),
            self.correct_heads,
            self.scored_tokens,
            100.0 * self.las(),
            self.correct_labeled,
            self.scored_tokens,
            100.0 * self.exact_match(),
            self.exact_sentences,
            self.sentences,
            self.scored_tokens,
            self.excluded_tokens,
            self.total_tokens,
        )
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Score predictions against gold. With `exclude_punct`, tokens whose form
/// is entirely Unicode punctuation are left out of every ratio.
pub fn score(gold: &[Sentence], pred: &[Sentence], exclude_punct: bool) -> Result<ScoreReport> {
    if gold.len() != pred.len() {
        return Err(Error::Config(format!(
            "cannot score: {} gold sentences vs {} predicted",
            gold.len(),
            pred.len()
        )));
    }
    let mut report = ScoreReport::default();
    for (idx, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.len() != p.len() {
            return Err(Error::Config(format!(
                "cannot score sentence {}: {} gold tokens vs {} predicted",
                idx + 1,
                g.len(),
                p.len()
            )));
        }
        report.sentences += 1;
        let mut exact = true;
        for (gt, pt) in g.tokens.iter().zip(&p.tokens) {
            report.total_tokens += 1;
            if exclude_punct && is_punctuation(&gt.form) {
                report.excluded_tokens += 1;
                continue;
            }
            report.scored_tokens += 1;
            let head_ok = gt.head == pt.head;
            let label_ok = head_ok && gt.deprel == pt.deprel;
            report.correct_heads += head_ok as usize;
            report.correct_labeled += label_ok as usize;
            exact &= label_ok;
        }
        report.exact_sentences += exact as usize;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conll::Token;

    fn sent(tokens: &[(&str, usize, &str)]) -> Sentence {
        Sentence {
            tokens: tokens.iter().map(|(f, h, d)| Token::new(f, "X", *h, d)).collect(),
        }
    }

    #[test]
    fn identical_trees_score_one() {
        let g = vec![sent(&[("a", 2, "x"), ("b", 0, "root")])];
        let r = score(&g, &g, false).unwrap();
        assert_eq!(r.uas(), 1.0);
        assert_eq!(r.las(), 1.0);
        assert_eq!(r.exact_match(), 1.0);
        assert_eq!(r.scored_tokens + r.excluded_tokens, r.total_tokens);
    }

    #[test]
    fn three_of_five_heads() {
        let g = vec![sent(&[("a", 3, "m"), ("b", 1, "m"), ("c", 0, "root"), ("d", 3, "m"), ("e", 4, "m")])];
        let p = vec![sent(&[("a", 2, "m"), ("b", 3, "m"), ("c", 0, "root"), ("d", 3, "m"), ("e", 4, "m")])];
        let r = score(&g, &p, false).unwrap();
        assert!((r.uas() - 0.6).abs() < 1e-12);
        assert_eq!(r.exact_sentences, 0);
    }

    #[test]
    fn label_errors_hit_las_only() {
        let g = vec![sent(&[("a", 2, "nsubj"), ("b", 0, "root")])];
        let p = vec![sent(&[("a", 2, "dobj"), ("b", 0, "root")])];
        let r = score(&g, &p, false).unwrap();
        assert_eq!(r.uas(), 1.0);
        assert_eq!(r.las(), 0.5);
        assert!(r.las() <= r.uas());
    }

    #[test]
    fn punctuation_exclusion() {
        let g = vec![sent(&[("a", 2, "m"), ("b", 0, "root"), (",", 2, "punct")])];
        let mut p = g.clone();
        p[0].tokens[2].head = 1; // wrong head on the comma
        let with = score(&g, &p, false).unwrap();
        let without = score(&g, &p, true).unwrap();
        assert_eq!(with.scored_tokens, 3);
        assert_eq!(without.scored_tokens, 2);
        assert_eq!(without.excluded_tokens, 1);
        assert!(without.uas() > with.uas());
        assert_eq!(without.uas(), 1.0);
        // punctuation-free tokens score identically either way
        assert_eq!(with.correct_heads - 2, 0);
    }

    #[test]
    fn sentence_order_does_not_matter() {
        let a = sent(&[("a", 2, "m"), ("b", 0, "root")]);
        let b = sent(&[("x", 0, "root")]);
        let p_a = sent(&[("a", 1, "m"), ("b", 0, "root")]);
        let r1 = score(&[a.clone(), b.clone()], &[p_a.clone(), b.clone()], false).unwrap();
        let r2 = score(&[b.clone(), a.clone()], &[b.clone(), p_a.clone()], false).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn mismatched_lengths_error() {
        let g = vec![sent(&[("a", 0, "root")])];
        let p = vec![sent(&[("a", 2, "m"), ("b", 0, "root")])];
        assert!(score(&g, &p, false).is_err());
        assert!(score(&g, &[], false).is_err());
    }

    #[test]
    fn report_formats() {
        let g = vec![sent(&[("a", 2, "m"), ("b", 0, "root")])];
        let r = score(&g, &g, false).unwrap();
        let m = r.machine_readable();
        assert!(m.contains("uas=1.000000"));
        assert!(m.contains("scored_tokens=2"));
        let h = r.human_readable();
        assert!(h.contains("UAS"));
        assert!(h.contains("100.00%"));
    }
}
