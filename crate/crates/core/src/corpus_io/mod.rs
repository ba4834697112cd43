//! Core data types and the text formats the pipeline reads and writes.
//!
//! Three formats are handled here:
//!
//! * CoNLL-style tagged text: one `token<TAB>tag` line per token, a blank
//!   line after each sentence. A sentence may be preceded by a `# id = X`
//!   line; the writer only emits one when the id differs from the 1-based
//!   ordinal of the sentence.
//! * Parallel plain text: two line-aligned files, or a single TSV file with
//!   `src<TAB>tgt` or `id<TAB>src<TAB>tgt` rows.
//! * Pharaoh alignments: one line per pair of space-separated `i-j` links
//!   (0-based, source first), optionally `i-j-p` with a link probability.

mod bitext;
mod conll;
mod pharaoh;
mod tags;

pub use bitext::{parse_bitext_tsv, read_parallel, write_bitext_tsv};
pub use conll::{parse_conll, write_conll, ParsedCorpus};
pub use pharaoh::{parse_pharaoh, parse_pharaoh_file, write_pharaoh, write_pharaoh_file};
pub use tags::{iob_from_spans, repair_iob, spans_from_iob, EntitySpan, EntityType, Tag};

use std::collections::BTreeMap;

use crate::error::{Error, Result};

fn check_token(token: &str) -> std::result::Result<(), String> {
    if token.is_empty() {
        Err("empty token".to_string())
    } else if token.chars().any(char::is_whitespace) {
        Err(format!("token {token:?} contains whitespace"))
    } else {
        Ok(())
    }
}

fn check_id(id: &str) -> std::result::Result<(), String> {
    if id.is_empty() || id.chars().any(char::is_whitespace) {
        Err(format!(
            "sentence id {id:?} must be non-empty and whitespace-free"
        ))
    } else {
        Ok(())
    }
}

/// A tokenized sentence with one IOB tag per token.
///
/// Construction validates every invariant, so a value of this type is always
/// IOB-valid and free of MISC tags.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabeledSentence {
    id: String,
    tokens: Vec<String>,
    tags: Vec<Tag>,
}

impl LabeledSentence {
    pub fn new(id: impl Into<String>, tokens: Vec<String>, tags: Vec<Tag>) -> Result<Self> {
        let id = id.into();
        check_id(&id).map_err(Error::InvalidTags)?;
        if tokens.is_empty() {
            return Err(Error::InvalidTags(format!("sentence {id} has no tokens")));
        }
        if tokens.len() != tags.len() {
            return Err(Error::InvalidTags(format!(
                "sentence {id} has {} tokens but {} tags",
                tokens.len(),
                tags.len()
            )));
        }
        for token in &tokens {
            check_token(token).map_err(|e| Error::InvalidTags(format!("sentence {id}: {e}")))?;
        }
        tags::check_iob(&tags).map_err(|e| Error::InvalidTags(format!("sentence {id}: {e}")))?;
        Ok(Self { id, tokens, tags })
    }

    /// Builds a sentence from entity spans instead of tags.
    pub fn from_spans(
        id: impl Into<String>,
        tokens: Vec<String>,
        spans: &[EntitySpan],
    ) -> Result<Self> {
        let tags = iob_from_spans(spans, tokens.len())?;
        Self::new(id, tokens, tags)
    }

    /// All-`O` sentence.
    pub fn unlabeled(id: impl Into<String>, tokens: Vec<String>) -> Result<Self> {
        let tags = vec![Tag::O; tokens.len()];
        Self::new(id, tokens, tags)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn tags(&self) -> &[Tag] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn spans(&self) -> Vec<EntitySpan> {
        spans_from_iob(&self.tags).expect("LabeledSentence tags are IOB-valid")
    }

    pub fn has_entity(&self) -> bool {
        self.tags.iter().any(|t| *t != Tag::O)
    }

    /// Same tokens and id, new tags.
    pub fn with_tags(&self, tags: Vec<Tag>) -> Result<Self> {
        Self::new(self.id.clone(), self.tokens.clone(), tags)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        check_id(&id).map_err(Error::InvalidTags)?;
        self.id = id;
        Ok(self)
    }
}

/// A source (English) and target sentence that translate each other.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentencePair {
    pub id: String,
    pub src_tokens: Vec<String>,
    pub tgt_tokens: Vec<String>,
}

impl SentencePair {
    pub fn new(
        id: impl Into<String>,
        src_tokens: Vec<String>,
        tgt_tokens: Vec<String>,
    ) -> Result<Self> {
        let id = id.into();
        check_id(&id).map_err(|m| Error::mismatch(&id, m))?;
        if src_tokens.is_empty() || tgt_tokens.is_empty() {
            return Err(Error::mismatch(
                &id,
                "both sides of a pair must be non-empty",
            ));
        }
        for token in src_tokens.iter().chain(&tgt_tokens) {
            check_token(token).map_err(|m| Error::mismatch(&id, m))?;
        }
        Ok(Self {
            id,
            src_tokens,
            tgt_tokens,
        })
    }

    /// Splits both sides on whitespace.
    pub fn from_text(id: impl Into<String>, src: &str, tgt: &str) -> Result<Self> {
        Self::new(id, tokenize(src), tokenize(tgt))
    }

    pub fn src_len(&self) -> usize {
        self.src_tokens.len()
    }

    pub fn tgt_len(&self) -> usize {
        self.tgt_tokens.len()
    }
}

/// Whitespace tokenization; input is assumed to be pre-tokenized.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_owned).collect()
}

/// A set of `(source index, target index)` links, each optionally carrying a
/// probability in `(0, 1]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AlignmentLinks {
    links: BTreeMap<(usize, usize), Option<f64>>,
}

impl AlignmentLinks {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a link, replacing the probability if the link already exists.
    ///
    /// Panics if `prob` is outside `(0, 1]`.
    pub fn insert(&mut self, i: usize, j: usize, prob: Option<f64>) {
        if let Some(p) = prob {
            assert!(p > 0.0 && p <= 1.0, "link probability {p} outside (0, 1]");
        }
        self.links.insert((i, j), prob);
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.links.contains_key(&(i, j))
    }

    pub fn probability(&self, i: usize, j: usize) -> Option<f64> {
        self.links.get(&(i, j)).copied().flatten()
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// Links in ascending `(i, j)` order.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), Option<f64>)> + '_ {
        self.links.iter().map(|(&k, &p)| (k, p))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.links.keys().copied()
    }

    /// Swaps the two sides of every link.
    pub fn reversed(&self) -> Self {
        Self {
            links: self.links.iter().map(|(&(i, j), &p)| ((j, i), p)).collect(),
        }
    }

    /// Links present in both sets; probabilities are taken from `self`.
    pub fn intersection(&self, other: &Self) -> Self {
        Self {
            links: self
                .links
                .iter()
                .filter(|(k, _)| other.links.contains_key(k))
                .map(|(&k, &p)| (k, p))
                .collect(),
        }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.links.keys().all(|k| other.links.contains_key(k))
    }

    pub fn check_bounds(&self, pair: &SentencePair) -> Result<()> {
        match self
            .links
            .keys()
            .find(|&&(i, j)| i >= pair.src_len() || j >= pair.tgt_len())
        {
            Some(&link) => Err(Error::LinkOutOfBounds {
                pair_id: pair.id.clone(),
                link,
                src_len: pair.src_len(),
                tgt_len: pair.tgt_len(),
            }),
            None => Ok(()),
        }
    }
}

impl FromIterator<(usize, usize)> for AlignmentLinks {
    fn from_iter<I: IntoIterator<Item = (usize, usize)>>(iter: I) -> Self {
        Self {
            links: iter.into_iter().map(|k| (k, None)).collect(),
        }
    }
}
