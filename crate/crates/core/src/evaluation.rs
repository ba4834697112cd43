//! Span-level precision/recall/F1 and token-level Cohen's kappa.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::{self, Write as _};

use crate::corpus_io::{EntitySpan, EntityType, LabeledSentence, Tag};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub true_positive: usize,
    pub false_positive: usize,
    pub false_negative: usize,
}

impl Counts {
    pub fn precision(&self) -> f64 {
        ratio(self.true_positive, self.true_positive + self.false_positive)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.true_positive, self.true_positive + self.false_negative)
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        }
    }

    /// Number of gold spans.
    pub fn support(&self) -> usize {
        self.true_positive + self.false_negative
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl std::ops::AddAssign for Counts {
    fn add_assign(&mut self, rhs: Counts) {
        self.true_positive += rhs.true_positive;
        self.false_positive += rhs.false_positive;
        self.false_negative += rhs.false_negative;
    }
}

/// Per-type and micro-averaged span scores.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalReport {
    pub per_type: BTreeMap<EntityType, Counts>,
    pub overall: Counts,
}

impl EvalReport {
    pub fn counts(&self, etype: EntityType) -> Counts {
        self.per_type.get(&etype).copied().unwrap_or_default()
    }

    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let rows = EntityType::ALL
            .iter()
            .map(|t| (t.as_str(), self.counts(*t)))
            .chain([("overall", self.overall)]);
        for (name, c) in rows {
            let _ = writeln!(out, "{name}.precision={}", c.precision());
            let _ = writeln!(out, "{name}.recall={}", c.recall());
            let _ = writeln!(out, "{name}.f1={}", c.f1());
            let _ = writeln!(out, "{name}.support={}", c.support());
            let _ = writeln!(out, "{name}.tp={}", c.true_positive);
            let _ = writeln!(out, "{name}.fp={}", c.false_positive);
            let _ = writeln!(out, "{name}.fn={}", c.false_negative);
        }
        out
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<8} {:>9} {:>9} {:>9} {:>8}",
            "type", "precision", "recall", "f1", "support"
        )?;
        let rows = EntityType::ALL
            .iter()
            .map(|t| (t.as_str(), self.counts(*t)))
            .chain([("overall", self.overall)]);
        for (name, c) in rows {
            writeln!(
                f,
                "{:<8} {:>9.2} {:>9.2} {:>9.2} {:>8}",
                name,
                100.0 * c.precision(),
                100.0 * c.recall(),
                100.0 * c.f1(),
                c.support()
            )?;
        }
        Ok(())
    }
}

fn index_by_id(corpus: &[LabeledSentence], which: &str) -> Result<HashMap<String, usize>> {
    let mut index = HashMap::with_capacity(corpus.len());
    for (k, s) in corpus.iter().enumerate() {
        if index.insert(s.id().to_string(), k).is_some() {
            return Err(Error::mismatch(s.id(), format!("duplicate id in {which}")));
        }
    }
    Ok(index)
}

/// Pairs up sentences of two corpora by id and checks tokenization.
fn paired<'a>(
    a: &'a [LabeledSentence],
    b: &'a [LabeledSentence],
    names: (&str, &str),
) -> Result<Vec<(&'a LabeledSentence, &'a LabeledSentence)>> {
    if a.len() != b.len() {
        let id = a.first().or(b.first()).map_or("-", |s| s.id());
        return Err(Error::mismatch(
            id,
            format!(
                "{} has {} sentences, {} has {}",
                names.0,
                a.len(),
                names.1,
                b.len()
            ),
        ));
    }
    let index = index_by_id(b, names.1)?;
    let mut seen = HashSet::with_capacity(a.len());
    a.iter()
        .map(|s| {
            if !seen.insert(s.id()) {
                return Err(Error::mismatch(
                    s.id(),
                    format!("duplicate id in {}", names.0),
                ));
            }
            let other = index
                .get(s.id())
                .map(|&k| &b[k])
                .ok_or_else(|| Error::mismatch(s.id(), format!("missing from {}", names.1)))?;
            if s.len() != other.len() {
                return Err(Error::mismatch(
                    s.id(),
                    format!(
                        "{} tokens in {}, {} in {}",
                        s.len(),
                        names.0,
                        other.len(),
                        names.1
                    ),
                ));
            }
            Ok((s, other))
        })
        .collect()
}

/// Exact-match span scoring: a predicted span counts only if a gold span in
/// the same sentence has the same type, start and end. Sentences are matched
/// by id; counts are micro-averaged over the corpus.
pub fn span_f1(gold: &[LabeledSentence], pred: &[LabeledSentence]) -> Result<EvalReport> {
    let mut per_type: BTreeMap<EntityType, Counts> = EntityType::ALL
        .iter()
        .map(|&t| (t, Counts::default()))
        .collect();
    for (g, p) in paired(gold, pred, ("gold", "prediction"))? {
        let gold_spans: HashSet<EntitySpan> = g.spans().into_iter().collect();
        let pred_spans: HashSet<EntitySpan> = p.spans().into_iter().collect();
        for s in &pred_spans {
            let c = per_type.get_mut(&s.etype).expect("all types present");
            if gold_spans.contains(s) {
                c.true_positive += 1;
            } else {
                c.false_positive += 1;
            }
        }
        for s in gold_spans.difference(&pred_spans) {
            per_type
                .get_mut(&s.etype)
                .expect("all types present")
                .false_negative += 1;
        }
    }
    let mut overall = Counts::default();
    for c in per_type.values() {
        overall += *c;
    }
    Ok(EvalReport { per_type, overall })
}

/// Token-level agreement between two annotators over the IOB tag inventory.
#[derive(Debug, Clone, PartialEq)]
pub struct AgreementReport {
    pub kappa: f64,
    pub observed_agreement: f64,
    pub expected_agreement: f64,
    /// Counts indexed by (annotator 1 tag, annotator 2 tag).
    pub contingency: BTreeMap<(Tag, Tag), usize>,
    pub tokens: usize,
    /// Set when expected agreement is 1, where kappa is not defined by the
    /// formula. Kappa is then 1 for identical annotations and 0 otherwise.
    pub degenerate: bool,
}

impl AgreementReport {
    pub fn to_key_values(&self) -> String {
        format!(
            "level=token\nkappa={}\nobserved_agreement={}\nexpected_agreement={}\ntokens={}\ndegenerate={}\n",
            self.kappa, self.observed_agreement, self.expected_agreement, self.tokens, self.degenerate
        )
    }
}

impl fmt::Display for AgreementReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "token-level Cohen's kappa over {} tokens", self.tokens)?;
        writeln!(
            f,
            "kappa     {:.4}{}",
            self.kappa,
            if self.degenerate { " (degenerate)" } else { "" }
        )?;
        writeln!(f, "observed  {:.4}", self.observed_agreement)?;
        writeln!(f, "expected  {:.4}", self.expected_agreement)
    }
}

/// Cohen's kappa over every token of two annotations of the same sentences.
pub fn cohens_kappa(ann1: &[LabeledSentence], ann2: &[LabeledSentence]) -> Result<AgreementReport> {
    let pairs = paired(ann1, ann2, ("first annotation", "second annotation"))?;
    let mut contingency: BTreeMap<(Tag, Tag), usize> = BTreeMap::new();
    let mut first: BTreeMap<Tag, usize> = BTreeMap::new();
    let mut second: BTreeMap<Tag, usize> = BTreeMap::new();
    let mut agree = 0usize;
    let mut n = 0usize;
    for (a, b) in pairs {
        if a.tokens() != b.tokens() {
            return Err(Error::mismatch(a.id(), "annotators saw different tokens"));
        }
        for (&x, &y) in a.tags().iter().zip(b.tags()) {
            *contingency.entry((x, y)).or_default() += 1;
            *first.entry(x).or_default() += 1;
            *second.entry(y).or_default() += 1;
            agree += usize::from(x == y);
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::Review("no tokens to compare".into()));
    }
    let nf = n as f64;
    let p_o = agree as f64 / nf;
    let p_e: f64 = first
        .iter()
        .map(|(t, &c)| (c as f64 / nf) * (second.get(t).copied().unwrap_or(0) as f64 / nf))
        .sum();
    let degenerate = p_e >= 1.0;
    let kappa = if degenerate {
        if agree == n {
            1.0
        } else {
            0.0
        }
    } else {
        (p_o - p_e) / (1.0 - p_e)
    };
    Ok(AgreementReport {
        kappa,
        observed_agreement: p_o,
        expected_agreement: p_e,
        contingency,
        tokens: n,
        degenerate,
    })
}
