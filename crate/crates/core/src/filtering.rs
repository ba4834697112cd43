//! Corpus filters applied after projection, plus dataset statistics.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus_io::{EntityType, LabeledSentence};
use crate::error::{Error, Result};

// Products like 0.1 * 1000 land a hair above the integer; ceil/floor must not
// see that noise.
const COUNT_EPS: f64 = 1e-9;

/// A projected sentence with its alignment quality score.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSentence {
    pub sentence: LabeledSentence,
    pub score: f64,
    pub has_entity: bool,
}

impl ScoredSentence {
    pub fn new(sentence: LabeledSentence, score: f64) -> Self {
        let has_entity = sentence.has_entity();
        Self {
            sentence,
            score,
            has_entity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    /// Fraction of sentences kept by [`filter_top_fraction`], in `(0, 1]`.
    pub keep_fraction: f64,
    /// Probability of keeping each entity-free sentence, in `[0, 1]`.
    pub no_entity_rate: f64,
    pub seed: u64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            keep_fraction: 0.35,
            no_entity_rate: 0.01,
            seed: 0,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.keep_fraction > 0.0 && self.keep_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "keep_fraction {} outside (0, 1]",
                self.keep_fraction
            )));
        }
        if !(0.0..=1.0).contains(&self.no_entity_rate) {
            return Err(Error::Config(format!(
                "no_entity_rate {} outside [0, 1]",
                self.no_entity_rate
            )));
        }
        Ok(())
    }
}

/// Keeps every entity-bearing sentence and each entity-free sentence
/// independently with probability `rate`, drawing from a generator seeded
/// with `seed`. One draw is made per entity-free sentence in input order.
pub fn downsample_no_entity(
    corpus: Vec<ScoredSentence>,
    rate: f64,
    seed: u64,
) -> Vec<ScoredSentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    corpus
        .into_iter()
        .filter(|s| s.has_entity || rng.gen::<f64>() < rate)
        .collect()
}

/// Number of items kept when keeping `fraction` of `n`, rounded up.
pub fn kept_count(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64 - COUNT_EPS).ceil().max(0.0) as usize).min(n)
}

/// Keeps the `ceil(keep_fraction * N)` highest-scoring sentences. Equal
/// scores are ranked by input position, earlier first. The survivors keep
/// their input order.
pub fn filter_top_fraction(corpus: Vec<ScoredSentence>, keep_fraction: f64) -> Vec<ScoredSentence> {
    let keep = kept_count(keep_fraction, corpus.len());
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.sort_by(|&a, &b| corpus[b].score.total_cmp(&corpus[a].score).then(a.cmp(&b)));
    let mut kept = vec![false; corpus.len()];
    for &k in &order[..keep] {
        kept[k] = true;
    }
    corpus
        .into_iter()
        .zip(kept)
        .filter_map(|(s, k)| k.then_some(s))
        .collect()
}

/// Dataset statistics.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusStats {
    pub sentences: usize,
    pub tokens: usize,
    pub entities: BTreeMap<EntityType, usize>,
    pub entity_free_sentences: usize,
}

impl CorpusStats {
    pub fn count(&self, etype: EntityType) -> usize {
        self.entities.get(&etype).copied().unwrap_or(0)
    }

    pub fn total_entities(&self) -> usize {
        self.entities.values().sum()
    }

    /// `key=value` lines, keys prefixed with `prefix`.
    pub fn to_key_values(&self, prefix: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{prefix}sentences={}", self.sentences);
        let _ = writeln!(out, "{prefix}tokens={}", self.tokens);
        for t in EntityType::ALL {
            let _ = writeln!(out, "{prefix}{}={}", t, self.count(t));
        }
        let _ = writeln!(
            out,
            "{prefix}entity_free_sentences={}",
            self.entity_free_sentences
        );
        out
    }
}

impl std::ops::AddAssign<&CorpusStats> for CorpusStats {
    fn add_assign(&mut self, rhs: &CorpusStats) {
        self.sentences += rhs.sentences;
        self.tokens += rhs.tokens;
        self.entity_free_sentences += rhs.entity_free_sentences;
        for (&t, &n) in &rhs.entities {
            *self.entities.entry(t).or_default() += n;
        }
    }
}

pub fn corpus_stats<'a, I>(corpus: I) -> CorpusStats
where
    I: IntoIterator<Item = &'a LabeledSentence>,
{
    let mut stats = CorpusStats::default();
    for t in EntityType::ALL {
        stats.entities.insert(t, 0);
    }
    for s in corpus {
        stats.sentences += 1;
        stats.tokens += s.len();
        let spans = s.spans();
        if spans.is_empty() {
            stats.entity_free_sentences += 1;
        }
        for span in spans {
            *stats.entities.entry(span.etype).or_default() += 1;
        }
    }
    stats
}

/// Train/dev/test fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.98,
            dev: 0.01,
            test: 0.01,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.dev, self.test];
        if parts.iter().any(|r| !(0.0..=1.0).contains(r))
            || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::Config(format!(
                "split ratios {}/{}/{} must lie in [0, 1] and sum to 1",
                self.train, self.dev, self.test
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Splits {
    pub train: Vec<LabeledSentence>,
    pub dev: Vec<LabeledSentence>,
    pub test: Vec<LabeledSentence>,
}

impl Splits {
    pub fn named(&self) -> [(&'static str, &[LabeledSentence]); 3] {
        [
            ("train", &self.train),
            ("dev", &self.dev),
            ("test", &self.test),
        ]
    }
}

/// Shuffles with a seeded generator and cuts into train/dev/test. Dev and
/// test sizes are `floor(ratio * N)`; train takes the remainder.
pub fn split_corpus(
    mut corpus: Vec<LabeledSentence>,
    ratios: SplitRatios,
    seed: u64,
) -> Result<Splits> {
    ratios.validate()?;
    let n = corpus.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    corpus.shuffle(&mut rng);
    let size = |r: f64| ((r * n as f64 + COUNT_EPS).floor() as usize).min(n);
    let n_test = size(ratios.test);
    let n_dev = size(ratios.dev).min(n - n_test);
    let test = corpus.split_off(n - n_test);
    let dev = corpus.split_off(corpus.len() - n_dev);
    Ok(Splits {
        train: corpus,
        dev,
        test,
    })
}

/// Per-split entity counts laid out as a table.
pub struct StatsTable<'a>(pub &'a [(&'a str, CorpusStats)]);

impl fmt::Display for StatsTable<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<8} {:>10} {:>10} {:>10} {:>10} {:>12}",
            "split", "sentences", "ORG", "LOC", "PER", "no-entity"
        )?;
        for (name, s) in self.0 {
            writeln!(
                f,
                "{:<8} {:>10} {:>10} {:>10} {:>10} {:>12}",
                name,
                s.sentences,
                s.count(EntityType::Org),
                s.count(EntityType::Loc),
                s.count(EntityType::Per),
                s.entity_free_sentences
            )?;
        }
        Ok(())
    }
}
