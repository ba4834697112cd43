//! Synthetic parallel corpora with known answers, for trying the pipeline
//! and for tests.
//!
//! Each source word has one fixed translation. The target side keeps the
//! source order except for occasional swaps of adjacent non-entity words,
//! and gains target-only function words that have no source counterpart.
//! Those extra words are what pull forward-only projections astray.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus_io::{AlignmentLinks, EntitySpan, EntityType, LabeledSentence, SentencePair};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub pairs: usize,
    pub seed: u64,
    /// Distinct common words.
    pub vocab: usize,
    /// Distinct name words per entity type.
    pub names: usize,
    /// Chance of inserting a target-only word after each target word.
    pub insertion_rate: f64,
    /// Chance of swapping each eligible adjacent pair of common words.
    pub swap_rate: f64,
    /// Entities per sentence are drawn uniformly from `0..=max_entities`.
    pub max_entities: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            pairs: 2000,
            seed: 0,
            vocab: 150,
            names: 40,
            insertion_rate: 0.15,
            swap_rate: 0.1,
            max_entities: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub pairs: Vec<SentencePair>,
    /// Source-side annotations.
    pub english: Vec<LabeledSentence>,
    /// The correct target-side annotations.
    pub target_gold: Vec<LabeledSentence>,
    /// The true word correspondences, `(source, target)`.
    pub gold_links: Vec<AlignmentLinks>,
}

const FUNCTION_WORDS: [&str; 6] = ["ka", "ke", "ki", "ne", "ko", "hai"];

fn name_prefix(t: EntityType) -> &'static str {
    match t {
        EntityType::Per => "per",
        EntityType::Loc => "loc",
        EntityType::Org => "org",
    }
}

/// Target word for a source word.
pub fn translate(word: &str) -> String {
    format!("{word}_t")
}

pub fn generate(config: &SyntheticConfig) -> Result<SyntheticCorpus> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut corpus = SyntheticCorpus {
        pairs: Vec::with_capacity(config.pairs),
        english: Vec::with_capacity(config.pairs),
        target_gold: Vec::with_capacity(config.pairs),
        gold_links: Vec::with_capacity(config.pairs),
    };
    for k in 0..config.pairs {
        let id = (k + 1).to_string();
        // source as a list of chunks; entity chunks stay contiguous
        let mut chunks: Vec<(Option<EntityType>, Vec<String>)> = (0..rng.gen_range(4..12))
            .map(|_| (None, vec![format!("w{}", rng.gen_range(0..config.vocab))]))
            .collect();
        for _ in 0..rng.gen_range(0..=config.max_entities) {
            let etype = *EntityType::ALL.choose(&mut rng).expect("non-empty");
            let words = (0..rng.gen_range(1..=3))
                .map(|_| format!("{}{}", name_prefix(etype), rng.gen_range(0..config.names)))
                .collect();
            let at = rng.gen_range(0..=chunks.len());
            // keep entities apart so that spans never touch
            chunks.insert(at, (Some(etype), words));
            chunks.insert(
                at + 1,
                (None, vec![format!("w{}", rng.gen_range(0..config.vocab))]),
            );
            chunks.insert(
                at,
                (None, vec![format!("w{}", rng.gen_range(0..config.vocab))]),
            );
        }

        let mut src = Vec::new();
        let mut src_spans = Vec::new();
        for (etype, words) in &chunks {
            if let Some(t) = etype {
                src_spans.push(EntitySpan::new(*t, src.len(), src.len() + words.len() - 1));
            }
            src.extend(words.iter().cloned());
        }

        // target order over source positions, then insertions
        let mut is_entity = vec![false; src.len()];
        for s in &src_spans {
            for i in s.indices() {
                is_entity[i] = true;
            }
        }
        let mut order: Vec<usize> = (0..src.len()).collect();
        let mut i = 0;
        while i + 1 < order.len() {
            if !is_entity[order[i]] && !is_entity[order[i + 1]] && rng.gen_bool(config.swap_rate) {
                order.swap(i, i + 1);
                i += 2;
            } else {
                i += 1;
            }
        }
        let mut tgt = Vec::new();
        let mut origin = Vec::new();
        for (pos, &s) in order.iter().enumerate() {
            tgt.push(translate(&src[s]));
            origin.push(Some(s));
            let inside_entity = pos + 1 < order.len() && is_entity[s] && is_entity[order[pos + 1]];
            if !inside_entity && rng.gen_bool(config.insertion_rate) {
                tgt.push(
                    FUNCTION_WORDS
                        .choose(&mut rng)
                        .expect("non-empty")
                        .to_string(),
                );
                origin.push(None);
            }
        }

        let mut links = AlignmentLinks::new();
        let mut tgt_pos = vec![0; src.len()];
        for (j, o) in origin.iter().enumerate() {
            if let Some(i) = *o {
                links.insert(i, j, None);
                tgt_pos[i] = j;
            }
        }
        let tgt_spans: Vec<EntitySpan> = src_spans
            .iter()
            .map(|s| EntitySpan::new(s.etype, tgt_pos[s.start], tgt_pos[s.end]))
            .collect();

        corpus.english.push(LabeledSentence::from_spans(
            id.clone(),
            src.clone(),
            &src_spans,
        )?);
        corpus.target_gold.push(LabeledSentence::from_spans(
            id.clone(),
            tgt.clone(),
            &tgt_spans,
        )?);
        corpus.pairs.push(SentencePair::new(id, src, tgt)?);
        corpus.gold_links.push(links);
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gold_is_consistent() {
        let c = generate(&SyntheticConfig {
            pairs: 300,
            seed: 9,
            ..SyntheticConfig::default()
        })
        .unwrap();
        assert_eq!(
            c,
            generate(&SyntheticConfig {
                pairs: 300,
                seed: 9,
                ..SyntheticConfig::default()
            })
            .unwrap()
        );
        for k in 0..c.pairs.len() {
            let (pair, en, gold) = (&c.pairs[k], &c.english[k], &c.target_gold[k]);
            assert_eq!(en.tokens(), pair.src_tokens.as_slice());
            assert_eq!(gold.tokens(), pair.tgt_tokens.as_slice());
            assert_eq!(en.spans().len(), gold.spans().len());
            for ((i, j), _) in c.gold_links[k].iter() {
                assert_eq!(pair.tgt_tokens[j], translate(&pair.src_tokens[i]));
            }
            for (s, t) in en.spans().iter().zip(gold.spans()) {
                assert_eq!(s.etype, t.etype);
                assert_eq!(s.len(), t.len());
            }
        }
    }
}
