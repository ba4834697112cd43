use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Reserved conditioning-side token standing for "aligned to nothing".
pub const NULL_WORD: &str = "<NULL>";

/// Which side of a [`SentencePair`](crate::corpus_io::SentencePair) the
/// model conditions on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// t(target word | source word); every target word picks one source word.
    SourceToTarget,
    /// t(source word | target word); every source word picks one target word.
    TargetToSource,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::SourceToTarget => "src-tgt",
            Direction::TargetToSource => "tgt-src",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "src-tgt" => Ok(Direction::SourceToTarget),
            "tgt-src" => Ok(Direction::TargetToSource),
            _ => Err(Error::Config(format!("unknown direction {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct Vocab {
    pub(crate) words: Vec<String>,
    pub(crate) index: HashMap<String, u32>,
}

impl Vocab {
    pub(crate) fn from_words(words: Vec<String>) -> Self {
        let index = words
            .iter()
            .enumerate()
            .map(|(k, w)| (w.clone(), k as u32))
            .collect();
        Self { words, index }
    }

    pub(crate) fn get(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub(crate) fn len(&self) -> usize {
        self.words.len()
    }
}

/// Lexical translation probabilities t(emitted | conditioning) learned by EM.
///
/// Only pairs of words that co-occur in some training pair are stored, in a
/// compressed sparse row layout: row `f` holds the emitted-word ids in
/// `cols[row_ptr[f]..row_ptr[f + 1]]` (ascending) with matching `probs`.
/// Every row sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslationTable {
    pub(crate) direction: Direction,
    pub(crate) use_null: bool,
    pub(crate) cond_vocab: Vocab,
    pub(crate) emit_vocab: Vocab,
    pub(crate) row_ptr: Vec<usize>,
    pub(crate) cols: Vec<u32>,
    pub(crate) probs: Vec<f64>,
    pub(crate) log_likelihoods: Vec<f64>,
}

impl TranslationTable {
    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn uses_null(&self) -> bool {
        self.use_null
    }

    /// Conditioning vocabulary size, NULL included.
    pub fn cond_vocab_size(&self) -> usize {
        self.cond_vocab.len()
    }

    pub fn emit_vocab_size(&self) -> usize {
        self.emit_vocab.len()
    }

    /// Number of stored probabilities.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Corpus log-likelihood before each EM iteration, followed by the value
    /// under the final table. Empty for tables loaded from disk.
    pub fn log_likelihoods(&self) -> &[f64] {
        &self.log_likelihoods
    }

    pub(crate) fn position(&self, cond: u32, emit: u32) -> Option<usize> {
        let (lo, hi) = (self.row_ptr[cond as usize], self.row_ptr[cond as usize + 1]);
        self.cols[lo..hi].binary_search(&emit).ok().map(|k| lo + k)
    }

    pub(crate) fn prob_ids(&self, cond: u32, emit: u32) -> f64 {
        self.position(cond, emit).map_or(0.0, |k| self.probs[k])
    }

    /// t(emit | cond); zero for unseen words or pairs that never co-occurred.
    /// Use [`NULL_WORD`] as `cond` for the NULL row.
    pub fn prob(&self, cond: &str, emit: &str) -> f64 {
        match (self.cond_vocab.get(cond), self.emit_vocab.get(emit)) {
            (Some(c), Some(e)) => self.prob_ids(c, e),
            _ => 0.0,
        }
    }

    /// The stored entries of one conditioning word's row.
    pub fn row(&self, cond: &str) -> Vec<(&str, f64)> {
        let Some(c) = self.cond_vocab.get(cond) else {
            return Vec::new();
        };
        let (lo, hi) = (self.row_ptr[c as usize], self.row_ptr[c as usize + 1]);
        (lo..hi)
            .map(|k| {
                (
                    self.emit_vocab.words[self.cols[k] as usize].as_str(),
                    self.probs[k],
                )
            })
            .collect()
    }

    /// Sum of each row, in conditioning-vocabulary order.
    pub fn row_sums(&self) -> Vec<f64> {
        self.row_ptr
            .windows(2)
            .map(|w| self.probs[w[0]..w[1]].iter().sum())
            .collect()
    }

    pub fn cond_words(&self) -> impl Iterator<Item = &str> {
        self.cond_vocab.words.iter().map(String::as_str)
    }

    /// Serializes as a header line followed by `cond<TAB>emit<TAB>prob` lines.
    ///
    /// Rows follow conditioning-vocabulary order, entries within a row are
    /// sorted by emitted word, and probabilities carry 17 significant digits
    /// so that [`TranslationTable::from_text`] restores them exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "#ibm1\tdirection={}\tnull={}\tcond_vocab={}\temit_vocab={}",
            self.direction,
            self.use_null,
            self.cond_vocab.len(),
            self.emit_vocab.len()
        );
        for (c, w) in self.row_ptr.windows(2).enumerate() {
            let cond = &self.cond_vocab.words[c];
            let mut entries: Vec<(&str, f64)> = (w[0]..w[1])
                .map(|k| {
                    (
                        self.emit_vocab.words[self.cols[k] as usize].as_str(),
                        self.probs[k],
                    )
                })
                .collect();
            entries.sort_by(|a, b| a.0.cmp(b.0));
            for (emit, p) in entries {
                let _ = writeln!(out, "{cond}\t{emit}\t{p:.16e}");
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty translation table"))?;
        let mut fields = header.split('\t');
        if fields.next() != Some("#ibm1") {
            return Err(Error::parse(1, "missing #ibm1 header"));
        }
        let mut meta: HashMap<&str, &str> = HashMap::new();
        for f in fields {
            let (k, v) = f
                .split_once('=')
                .ok_or_else(|| Error::parse(1, format!("malformed header field {f:?}")))?;
            meta.insert(k, v);
        }
        let get = |k: &str| {
            meta.get(k)
                .copied()
                .ok_or_else(|| Error::parse(1, format!("header lacks {k}")))
        };
        let direction: Direction = get("direction")?
            .parse()
            .map_err(|e: Error| Error::parse(1, e.to_string()))?;
        let use_null = get("null")? == "true";
        let size = |k: &str| -> Result<usize> {
            get(k)?
                .parse()
                .map_err(|_| Error::parse(1, format!("bad {k}")))
        };
        let (cond_size, emit_size) = (size("cond_vocab")?, size("emit_vocab")?);

        let mut rows: Vec<(String, Vec<(String, f64)>)> = Vec::new();
        for (idx, line) in lines {
            let lineno = idx + 1;
            let parts: Vec<&str> = line.split('\t').collect();
            let [cond, emit, p] = parts.as_slice() else {
                return Err(Error::parse(lineno, "expected cond<TAB>emit<TAB>prob"));
            };
            let p: f64 = p
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad probability {p:?}")))?;
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::parse(
                    lineno,
                    format!("probability {p} outside (0, 1]"),
                ));
            }
            match rows.last_mut() {
                Some((c, entries)) if c == cond => entries.push((emit.to_string(), p)),
                _ => {
                    if rows.iter().any(|(c, _)| c == cond) {
                        return Err(Error::parse(
                            lineno,
                            format!("row {cond:?} is not contiguous"),
                        ));
                    }
                    rows.push((cond.to_string(), vec![(emit.to_string(), p)]));
                }
            }
        }

        let mut emit_words: Vec<String> = rows
            .iter()
            .flat_map(|(_, e)| e.iter().map(|(w, _)| w.clone()))
            .collect();
        emit_words.sort();
        emit_words.dedup();
        if rows.len() != cond_size || emit_words.len() != emit_size {
            return Err(Error::parse(
                1,
                format!(
                    "header declares {cond_size}x{emit_size} vocabulary, body has {}x{}",
                    rows.len(),
                    emit_words.len()
                ),
            ));
        }
        let emit_vocab = Vocab::from_words(emit_words);
        let cond_vocab = Vocab::from_words(rows.iter().map(|(c, _)| c.clone()).collect());
        if use_null && cond_vocab.words.first().map(String::as_str) != Some(NULL_WORD) {
            return Err(Error::parse(2, "NULL row must come first"));
        }

        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut probs = Vec::new();
        for (_, entries) in rows {
            let mut ids: Vec<(u32, f64)> = entries
                .into_iter()
                .map(|(w, p)| (emit_vocab.get(&w).expect("collected above"), p))
                .collect();
            ids.sort_by_key(|e| e.0);
            if ids.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::parse(0, "duplicate entry in translation table"));
            }
            for (e, p) in ids {
                cols.push(e);
                probs.push(p);
            }
            row_ptr.push(cols.len());
        }
        Ok(Self {
            direction,
            use_null,
            cond_vocab,
            emit_vocab,
            row_ptr,
            cols,
            probs,
            log_likelihoods: Vec::new(),
        })
    }
}
