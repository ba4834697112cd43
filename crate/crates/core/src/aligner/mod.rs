//! Statistical word alignment.
//!
//! IBM Model 1 is trained in both directions, each direction yields one
//! Viterbi link set per pair, and the two are symmetrized by intersection.
//! Links that come out of the forward model carry their lexical probability,
//! which feeds the per-pair [`quality_score`].

mod em;
mod mapping;
mod table;

pub use em::{train_ibm1, EmConfig};
pub use mapping::DirectionalMapping;
pub use table::{Direction, TranslationTable, NULL_WORD};

use crate::corpus_io::{AlignmentLinks, SentencePair};
use crate::error::{Error, Result};

/// Links every emitted-side word to its most probable conditioning-side word.
///
/// Links are returned in (conditioning index, emitted index) orientation, so
/// a [`Direction::TargetToSource`] table produces `(tgt, src)` links. Words
/// unknown to the table, and words whose best candidate is NULL, stay
/// unaligned. Ties go to the lowest conditioning index; a real word beats
/// NULL on a tie.
pub fn align_viterbi(table: &TranslationTable, pair: &SentencePair) -> AlignmentLinks {
    let (cond, emit) = match table.direction() {
        Direction::SourceToTarget => (&pair.src_tokens, &pair.tgt_tokens),
        Direction::TargetToSource => (&pair.tgt_tokens, &pair.src_tokens),
    };
    let cond_ids: Vec<Option<u32>> = cond
        .iter()
        .map(|w| {
            if w == NULL_WORD {
                None
            } else {
                table.cond_vocab.get(w)
            }
        })
        .collect();

    let mut links = AlignmentLinks::new();
    for (j, word) in emit.iter().enumerate() {
        let Some(e) = table.emit_vocab.get(word) else {
            continue;
        };
        let mut best: Option<(usize, f64)> = None;
        for (i, f) in cond_ids.iter().enumerate() {
            let Some(f) = *f else { continue };
            let p = table.prob_ids(f, e);
            if p > 0.0 && best.is_none_or(|(_, bp)| p > bp) {
                best = Some((i, p));
            }
        }
        let null_p = if table.uses_null() {
            table.prob_ids(0, e)
        } else {
            0.0
        };
        if let Some((i, p)) = best {
            if p >= null_p {
                links.insert(i, j, Some(p.min(1.0)));
            }
        }
    }
    links
}

/// `forward ∩ reversed(backward)`, where `backward` holds `(tgt, src)` links
/// as produced by a [`Direction::TargetToSource`] table. Probabilities are
/// kept from `forward`.
pub fn symmetrize_intersection(
    forward: &AlignmentLinks,
    backward: &AlignmentLinks,
) -> AlignmentLinks {
    forward.intersection(&backward.reversed())
}

/// Geometric mean of the link probabilities over the target length:
/// `exp(sum(ln p) / n)` with `n` the number of target tokens.
///
/// Pairs without links score 0.
pub fn quality_score(pair: &SentencePair, links: &AlignmentLinks) -> Result<f64> {
    if links.is_empty() {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    for (link, p) in links.iter() {
        log_sum += p.ok_or(Error::MissingProbability(link))?.ln();
    }
    Ok((log_sum / pair.tgt_len() as f64).exp())
}
