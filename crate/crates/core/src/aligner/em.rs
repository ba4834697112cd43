use rayon::prelude::*;

use super::table::{Direction, TranslationTable, Vocab, NULL_WORD};
use crate::corpus_io::SentencePair;
use crate::error::{Error, Result};

/// Settings for IBM Model 1 training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmConfig {
    pub iterations: usize,
    /// Lower bound applied to every probability after each M-step.
    pub prob_floor: f64,
    pub use_null: bool,
    /// Largest vocabulary accepted on either side.
    pub max_vocab: usize,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            iterations: 5,
            prob_floor: 1e-12,
            use_null: true,
            max_vocab: 1 << 24,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("EM iterations must be at least 1".into()));
        }
        if !(self.prob_floor > 0.0 && self.prob_floor < 1e-3) {
            return Err(Error::Config(format!(
                "probability floor {} outside (0, 1e-3)",
                self.prob_floor
            )));
        }
        Ok(())
    }
}

/// Sentence pairs as (conditioning ids, emitted ids). The conditioning side
/// starts with the NULL id when NULL is enabled.
struct Encoded {
    cond: Vec<Vec<u32>>,
    emit: Vec<Vec<u32>>,
}

fn sides(pair: &SentencePair, direction: Direction) -> (&[String], &[String]) {
    match direction {
        Direction::SourceToTarget => (&pair.src_tokens, &pair.tgt_tokens),
        Direction::TargetToSource => (&pair.tgt_tokens, &pair.src_tokens),
    }
}

fn build_vocab<'a>(
    words: impl Iterator<Item = &'a String>,
    null: bool,
    cap: usize,
) -> Result<Vocab> {
    let mut all: Vec<String> = words.filter(|w| *w != NULL_WORD).cloned().collect();
    all.sort_unstable();
    all.dedup();
    if null {
        all.insert(0, NULL_WORD.to_string());
    }
    if all.len() > cap {
        return Err(Error::VocabularyOverflow {
            size: all.len(),
            cap,
        });
    }
    Ok(Vocab::from_words(all))
}

/// Pairs per E-step work unit. Depends on the corpus size only, so the
/// reduction order is the same for any number of worker threads.
fn chunk_len(pairs: usize) -> usize {
    pairs.div_ceil(64).max(64)
}

/// Trains an IBM Model 1 lexical table on `corpus` in the given direction.
///
/// The table starts uniform over the emitted vocabulary. Each iteration
/// computes expected link counts in parallel over fixed-size chunks of the
/// corpus, merges the chunk counts in corpus order, and renormalizes every
/// row. Results are bit-identical regardless of the rayon pool size.
pub fn train_ibm1(
    corpus: &[SentencePair],
    direction: Direction,
    config: &EmConfig,
) -> Result<TranslationTable> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let cond_vocab = build_vocab(
        corpus.iter().flat_map(|p| sides(p, direction).0),
        config.use_null,
        config.max_vocab,
    )?;
    let emit_vocab = build_vocab(
        corpus.iter().flat_map(|p| sides(p, direction).1),
        false,
        config.max_vocab,
    )?;

    let mut data = Encoded {
        cond: Vec::with_capacity(corpus.len()),
        emit: Vec::with_capacity(corpus.len()),
    };
    for pair in corpus {
        let (c, e) = sides(pair, direction);
        let mut cond: Vec<u32> = Vec::with_capacity(c.len() + 1);
        if config.use_null {
            cond.push(0);
        }
        cond.extend(c.iter().map(|w| cond_vocab.get(w).expect("in vocab")));
        data.cond.push(cond);
        data.emit.push(
            e.iter()
                .map(|w| emit_vocab.get(w).expect("in vocab"))
                .collect(),
        );
    }

    // Co-occurrence structure.
    let mut rows: Vec<Vec<u32>> = vec![Vec::new(); cond_vocab.len()];
    for (cond, emit) in data.cond.iter().zip(&data.emit) {
        for &f in cond {
            rows[f as usize].extend_from_slice(emit);
        }
    }
    let mut row_ptr = Vec::with_capacity(rows.len() + 1);
    let mut cols = Vec::new();
    row_ptr.push(0);
    for mut row in rows {
        row.sort_unstable();
        row.dedup();
        cols.extend(row);
        row_ptr.push(cols.len());
    }

    let uniform = 1.0 / emit_vocab.len() as f64;
    let mut table = TranslationTable {
        direction,
        use_null: config.use_null,
        cond_vocab,
        emit_vocab,
        row_ptr,
        probs: vec![uniform; cols.len()],
        cols,
        log_likelihoods: Vec::with_capacity(config.iterations + 1),
    };

    let chunk = chunk_len(corpus.len());
    for _ in 0..config.iterations {
        let (counts, ll) = expected_counts(&table, &data, chunk);
        table.log_likelihoods.push(ll);
        maximize(&mut table, &counts, config.prob_floor);
    }
    let final_ll = log_likelihood(&table, &data, chunk);
    table.log_likelihoods.push(final_ll);
    Ok(table)
}

fn expected_counts(table: &TranslationTable, data: &Encoded, chunk: usize) -> (Vec<f64>, f64) {
    let idx: Vec<usize> = (0..data.cond.len()).collect();
    let partials: Vec<(Vec<f64>, f64)> = idx
        .par_chunks(chunk)
        .map(|ids| {
            let mut counts = vec![0.0; table.probs.len()];
            let mut ll = 0.0;
            let mut pos = Vec::new();
            for &k in ids {
                let (cond, emit) = (&data.cond[k], &data.emit[k]);
                let norm = (cond.len() as f64).ln();
                for &e in emit {
                    pos.clear();
                    pos.extend(
                        cond.iter()
                            .map(|&f| table.position(f, e).expect("co-occurring")),
                    );
                    let denom: f64 = pos.iter().map(|&p| table.probs[p]).sum();
                    ll += denom.ln() - norm;
                    for &p in &pos {
                        counts[p] += table.probs[p] / denom;
                    }
                }
            }
            (counts, ll)
        })
        .collect();

    let mut total = vec![0.0; table.probs.len()];
    let mut ll = 0.0;
    for (counts, part) in partials {
        for (t, c) in total.iter_mut().zip(counts) {
            *t += c;
        }
        ll += part;
    }
    (total, ll)
}

fn log_likelihood(table: &TranslationTable, data: &Encoded, chunk: usize) -> f64 {
    let idx: Vec<usize> = (0..data.cond.len()).collect();
    let parts: Vec<f64> = idx
        .par_chunks(chunk)
        .map(|ids| {
            let mut ll = 0.0;
            for &k in ids {
                let (cond, emit) = (&data.cond[k], &data.emit[k]);
                let norm = (cond.len() as f64).ln();
                for &e in emit {
                    let denom: f64 = cond.iter().map(|&f| table.prob_ids(f, e)).sum();
                    ll += denom.ln() - norm;
                }
            }
            ll
        })
        .collect();
    parts.into_iter().sum()
}

fn maximize(table: &mut TranslationTable, counts: &[f64], floor: f64) {
    for w in table.row_ptr.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let total: f64 = counts[lo..hi].iter().sum();
        if total <= 0.0 {
            continue;
        }
        let row = &mut table.probs[lo..hi];
        let mut floored = false;
        for (p, &c) in row.iter_mut().zip(&counts[lo..hi]) {
            *p = c / total;
            if *p < floor {
                *p = floor;
                floored = true;
            }
        }
        if floored {
            let sum: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= sum);
        }
    }
}
