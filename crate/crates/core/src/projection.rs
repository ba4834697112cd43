//! Entity projection from English onto the target side of a sentence pair.
//!
//! Each English entity is projected as a whole: the target indices aligned to
//! any of its words are collected and the entity is placed on the smallest
//! contiguous target range covering them. In intersected mode the forward
//! mapping is first restricted to links that the backward alignment also
//! proposes, which removes spurious one-to-many forward links.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;

use crate::aligner::DirectionalMapping;
use crate::corpus_io::{AlignmentLinks, EntitySpan, LabeledSentence, SentencePair};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ProjectionMode {
    ForwardOnly,
    #[default]
    Intersected,
}

impl ProjectionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ProjectionMode::ForwardOnly => "forward_only",
            ProjectionMode::Intersected => "intersected",
        }
    }
}

impl fmt::Display for ProjectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProjectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward_only" => Ok(ProjectionMode::ForwardOnly),
            "intersected" => Ok(ProjectionMode::Intersected),
            _ => Err(Error::Config(format!(
                "unknown projection mode {s:?} (expected forward_only or intersected)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DropReason {
    /// None of the entity's words has an aligned target index.
    Unaligned,
    /// The projected range collides with an entity projected earlier.
    Overlap,
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DropReason::Unaligned => "unaligned",
            DropReason::Overlap => "overlap",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ProjectionInput<'a> {
    pub pair: &'a SentencePair,
    pub english_spans: &'a [EntitySpan],
    /// Source index to target indices, from the forward alignment.
    pub english2indic: &'a DirectionalMapping,
    /// Target index to source indices, from the backward alignment.
    pub indic2english: &'a DirectionalMapping,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub labeled: LabeledSentence,
    /// Source spans that produced no target span, with the reason.
    pub dropped_spans: Vec<(EntitySpan, DropReason)>,
    pub mapping_used: DirectionalMapping,
}

impl ProjectionResult {
    pub fn projected_spans(&self) -> Vec<EntitySpan> {
        self.labeled.spans()
    }
}

/// Transposes a mapping: `i -> j` is in the result iff `j -> i` is in the input.
pub fn reverse_mapping(mapping: &DirectionalMapping) -> DirectionalMapping {
    let mut out = DirectionalMapping::new(mapping.codomain(), mapping.domain());
    for (k, values) in mapping.iter() {
        for &v in values {
            out.insert(v, k);
        }
    }
    out
}

/// Per-key set intersection. Keys whose intersection is empty stay present
/// with an empty set. Both mappings must share the same index spaces.
pub fn intersect_mappings(a: &DirectionalMapping, b: &DirectionalMapping) -> DirectionalMapping {
    assert_eq!(
        (a.domain(), a.codomain()),
        (b.domain(), b.codomain()),
        "mappings over different index spaces"
    );
    let mut out = DirectionalMapping::new(a.domain(), a.codomain());
    for ((k, sa), (_, sb)) in a.iter().zip(b.iter()) {
        for &v in sa.intersection(sb) {
            out.insert(k, v);
        }
    }
    out
}

fn check_input(input: &ProjectionInput<'_>) -> Result<()> {
    let (src, tgt) = (input.pair.src_len(), input.pair.tgt_len());
    let id = &input.pair.id;
    if (input.english2indic.domain(), input.english2indic.codomain()) != (src, tgt) {
        return Err(Error::mismatch(
            id,
            "forward mapping does not match pair lengths",
        ));
    }
    if (input.indic2english.domain(), input.indic2english.codomain()) != (tgt, src) {
        return Err(Error::mismatch(
            id,
            "backward mapping does not match pair lengths",
        ));
    }
    if let Some(s) = input
        .english_spans
        .iter()
        .find(|s| s.start > s.end || s.end >= src)
    {
        return Err(Error::mismatch(
            id,
            format!("English span {s} out of bounds"),
        ));
    }
    Ok(())
}

/// Projects every English span onto the target sentence.
///
/// Spans are processed in source order. A span whose words have no aligned
/// target index is dropped as unaligned; a span whose target range overlaps
/// one already emitted is dropped whole as overlap.
pub fn project_spans(
    input: &ProjectionInput<'_>,
    mode: ProjectionMode,
) -> Result<ProjectionResult> {
    check_input(input)?;
    let mapping = match mode {
        ProjectionMode::ForwardOnly => input.english2indic.clone(),
        ProjectionMode::Intersected => {
            intersect_mappings(&reverse_mapping(input.indic2english), input.english2indic)
        }
    };

    let mut ordered = input.english_spans.to_vec();
    ordered.sort_by_key(|s| s.start);

    let mut emitted: Vec<EntitySpan> = Vec::new();
    let mut dropped = Vec::new();
    for span in ordered {
        let targets: BTreeSet<usize> = span
            .indices()
            .flat_map(|w| mapping.get(w).iter().copied())
            .collect();
        let (Some(&l), Some(&r)) = (targets.first(), targets.last()) else {
            dropped.push((span, DropReason::Unaligned));
            continue;
        };
        let projected = EntitySpan::new(span.etype, l, r);
        if emitted.iter().any(|e| e.overlaps(&projected)) {
            dropped.push((span, DropReason::Overlap));
        } else {
            emitted.push(projected);
        }
    }

    let labeled = LabeledSentence::from_spans(
        input.pair.id.clone(),
        input.pair.tgt_tokens.clone(),
        &emitted,
    )?;
    Ok(ProjectionResult {
        labeled,
        dropped_spans: dropped,
        mapping_used: mapping,
    })
}

/// Aggregate drop counts over a corpus.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DropStats {
    pub source_spans: usize,
    pub projected_spans: usize,
    pub unaligned: usize,
    pub overlap: usize,
}

impl DropStats {
    pub fn of(results: &[ProjectionResult], english: &[LabeledSentence]) -> Self {
        let mut stats = DropStats {
            source_spans: english.iter().map(|s| s.spans().len()).sum(),
            ..Default::default()
        };
        for r in results {
            stats.projected_spans += r.projected_spans().len();
            for (_, reason) in &r.dropped_spans {
                match reason {
                    DropReason::Unaligned => stats.unaligned += 1,
                    DropReason::Overlap => stats.overlap += 1,
                }
            }
        }
        stats
    }
}

/// Projects a whole corpus.
///
/// `forward` and `backward` hold one link set per pair, both in
/// `(source, target)` orientation. The English sentences must match the pairs
/// by id and source length.
pub fn project_corpus(
    pairs: &[SentencePair],
    english: &[LabeledSentence],
    forward: &[AlignmentLinks],
    backward: &[AlignmentLinks],
    mode: ProjectionMode,
) -> Result<Vec<ProjectionResult>> {
    if english.len() != pairs.len() || forward.len() != pairs.len() || backward.len() != pairs.len()
    {
        let first = pairs.first().map_or("-", |p| p.id.as_str());
        return Err(Error::mismatch(
            first,
            format!(
                "stream lengths differ: {} pairs, {} English sentences, {} forward and {} backward alignments",
                pairs.len(),
                english.len(),
                forward.len(),
                backward.len()
            ),
        ));
    }
    if let Some((pair, sent)) = pairs.iter().zip(english).find(|(p, s)| p.id != s.id()) {
        return Err(Error::mismatch(
            &pair.id,
            format!("English sentence has id {}", sent.id()),
        ));
    }

    (0..pairs.len())
        .into_par_iter()
        .map(|k| {
            let pair = &pairs[k];
            if english[k].tokens() != pair.src_tokens.as_slice() {
                return Err(Error::mismatch(
                    &pair.id,
                    "English CoNLL tokens differ from the bitext source side",
                ));
            }
            let (src, tgt) = (pair.src_len(), pair.tgt_len());
            let e2i = DirectionalMapping::source_to_target(&forward[k], src, tgt)
                .map_err(|e| Error::mismatch(&pair.id, e.to_string()))?;
            let i2e = DirectionalMapping::target_to_source(&backward[k], src, tgt)
                .map_err(|e| Error::mismatch(&pair.id, e.to_string()))?;
            let spans = english[k].spans();
            project_spans(
                &ProjectionInput {
                    pair,
                    english_spans: &spans,
                    english2indic: &e2i,
                    indic2english: &i2e,
                },
                mode,
            )
        })
        .collect()
}

/// Drop log with one `pair_id<TAB>etype<TAB>src_start<TAB>src_end<TAB>reason`
/// line per dropped span.
pub fn write_drop_log(results: &[ProjectionResult]) -> String {
    let mut out = String::new();
    for r in results {
        for (span, reason) in &r.dropped_spans {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                r.labeled.id(),
                span.etype,
                span.start,
                span.end,
                reason
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus_io::EntityType::*;
    use proptest::prelude::*;

    fn mapping(sets: &[&[usize]], codomain: usize) -> DirectionalMapping {
        DirectionalMapping::from_sets(
            sets.iter().map(|s| s.iter().copied().collect()).collect(),
            codomain,
        )
        .unwrap()
    }

    fn caption_pair() -> SentencePair {
        SentencePair::from_text(
            "soren",
            "Jharkhand chief minister Hemant Soren",
            "झारखंड के मुख्यमंत्री हेमंत सोरेन फोटो: पीटीआई",
        )
        .unwrap()
    }

    fn caption_mappings() -> (DirectionalMapping, DirectionalMapping) {
        let fwd = mapping(&[&[0], &[1], &[2], &[3], &[4, 5, 6]], 7);
        let bwd = mapping(&[&[0], &[], &[1, 2], &[3], &[4], &[], &[]], 5);
        (fwd, bwd)
    }

    #[test]
    fn reverse_caption_backward_mapping() {
        let indic2english = mapping(&[&[0], &[], &[1, 2], &[3], &[4]], 5);
        assert_eq!(
            reverse_mapping(&indic2english),
            mapping(&[&[0], &[2], &[2], &[3], &[4]], 5)
        );
        let empty = DirectionalMapping::new(0, 0);
        assert_eq!(reverse_mapping(&empty), empty);
    }

    #[test]
    fn intersect_keeps_only_shared_targets() {
        let a = mapping(&[&[], &[], &[], &[], &[4, 5, 6]], 7);
        let b = mapping(&[&[], &[], &[], &[], &[4]], 7);
        assert_eq!(intersect_mappings(&a, &b), b);
        assert_eq!(intersect_mappings(&a, &a), a);
        let c = mapping(&[&[0], &[1]], 3);
        let d = mapping(&[&[1], &[2]], 3);
        assert_eq!(intersect_mappings(&c, &d), DirectionalMapping::new(2, 3));
    }

    #[test]
    fn caption_forward_only_overextends_person() {
        let pair = caption_pair();
        let (fwd, bwd) = caption_mappings();
        let spans = [EntitySpan::new(Loc, 0, 0), EntitySpan::new(Per, 3, 4)];
        let input = ProjectionInput {
            pair: &pair,
            english_spans: &spans,
            english2indic: &fwd,
            indic2english: &bwd,
        };
        let forward = project_spans(&input, ProjectionMode::ForwardOnly).unwrap();
        assert_eq!(
            forward.projected_spans(),
            vec![EntitySpan::new(Loc, 0, 0), EntitySpan::new(Per, 3, 6)]
        );
        let inter = project_spans(&input, ProjectionMode::Intersected).unwrap();
        assert_eq!(
            inter.projected_spans(),
            vec![EntitySpan::new(Loc, 0, 0), EntitySpan::new(Per, 3, 4)]
        );
        assert!(inter.dropped_spans.is_empty());
        assert!(inter.mapping_used.is_subset(&fwd));
    }

    #[test]
    fn unaligned_entity_is_dropped_alone() {
        let pair = SentencePair::from_text("u", "a b c", "x y z").unwrap();
        let fwd = mapping(&[&[0], &[], &[2]], 3);
        let bwd = reverse_mapping(&fwd);
        let spans = [
            EntitySpan::new(Per, 0, 0),
            EntitySpan::new(Org, 1, 1),
            EntitySpan::new(Loc, 2, 2),
        ];
        let input = ProjectionInput {
            pair: &pair,
            english_spans: &spans,
            english2indic: &fwd,
            indic2english: &bwd,
        };
        let r = project_spans(&input, ProjectionMode::Intersected).unwrap();
        assert_eq!(
            r.projected_spans(),
            vec![EntitySpan::new(Per, 0, 0), EntitySpan::new(Loc, 2, 2)]
        );
        assert_eq!(
            r.dropped_spans,
            vec![(EntitySpan::new(Org, 1, 1), DropReason::Unaligned)]
        );
    }

    #[test]
    fn partially_aligned_entity_covers_gap() {
        let pair = SentencePair::from_text(
            "p",
            "Shri Ravi Shankar Prasad said",
            "t0 t1 t2 t3 t4 ravi t6 prasad t8",
        )
        .unwrap();
        let fwd = mapping(&[&[], &[5], &[], &[7], &[8]], 9);
        let bwd = reverse_mapping(&fwd);
        let spans = [EntitySpan::new(Per, 1, 3)];
        let input = ProjectionInput {
            pair: &pair,
            english_spans: &spans,
            english2indic: &fwd,
            indic2english: &bwd,
        };
        let r = project_spans(&input, ProjectionMode::ForwardOnly).unwrap();
        assert_eq!(r.projected_spans(), vec![EntitySpan::new(Per, 5, 7)]);
    }

    #[test]
    fn later_overlapping_span_is_dropped_whole() {
        let pair = SentencePair::from_text("o", "a b", "x y z").unwrap();
        let fwd = mapping(&[&[0, 1], &[1, 2]], 3);
        let bwd = reverse_mapping(&fwd);
        let spans = [EntitySpan::new(Per, 1, 1), EntitySpan::new(Loc, 0, 0)];
        let input = ProjectionInput {
            pair: &pair,
            english_spans: &spans,
            english2indic: &fwd,
            indic2english: &bwd,
        };
        let r = project_spans(&input, ProjectionMode::ForwardOnly).unwrap();
        assert_eq!(r.projected_spans(), vec![EntitySpan::new(Loc, 0, 1)]);
        assert_eq!(
            r.dropped_spans,
            vec![(EntitySpan::new(Per, 1, 1), DropReason::Overlap)]
        );
        assert_eq!(write_drop_log(&[r]), "o\tPER\t1\t1\toverlap\n");
    }

    #[test]
    fn adjacent_same_type_entities_are_not_merged() {
        let pair = SentencePair::from_text("adj", "A B", "x y").unwrap();
        let fwd = mapping(&[&[1], &[0]], 2);
        let bwd = reverse_mapping(&fwd);
        let spans = [EntitySpan::new(Loc, 0, 0), EntitySpan::new(Loc, 1, 1)];
        let input = ProjectionInput {
            pair: &pair,
            english_spans: &spans,
            english2indic: &fwd,
            indic2english: &bwd,
        };
        let r = project_spans(&input, ProjectionMode::Intersected).unwrap();
        assert_eq!(
            r.projected_spans(),
            vec![EntitySpan::new(Loc, 0, 0), EntitySpan::new(Loc, 1, 1)]
        );
    }

    #[test]
    fn bad_mapping_shape_is_rejected() {
        let pair = caption_pair();
        let (fwd, _) = caption_mappings();
        let input = ProjectionInput {
            pair: &pair,
            english_spans: &[],
            english2indic: &fwd,
            indic2english: &fwd,
        };
        assert!(project_spans(&input, ProjectionMode::ForwardOnly).is_err());
    }

    #[test]
    fn corpus_checks_ids() {
        let pair = caption_pair();
        let english = LabeledSentence::unlabeled("other", pair.src_tokens.clone()).unwrap();
        let links = AlignmentLinks::new();
        let err = project_corpus(
            &[pair],
            &[english],
            std::slice::from_ref(&links),
            std::slice::from_ref(&links),
            ProjectionMode::Intersected,
        )
        .unwrap_err();
        assert!(err.to_string().contains("soren"), "{err}");
        assert!(
            project_corpus(&[], &[], &[], &[], ProjectionMode::Intersected)
                .unwrap()
                .is_empty()
        );
    }

    fn arb_mapping() -> impl Strategy<Value = DirectionalMapping> {
        (1usize..8, 1usize..8).prop_flat_map(|(d, c)| {
            prop::collection::vec(prop::collection::btree_set(0..c, 0..c.min(4)), d)
                .prop_map(move |sets| DirectionalMapping::from_sets(sets, c).unwrap())
        })
    }

    proptest! {
        #[test]
        fn reverse_is_an_involution(m in arb_mapping()) {
            prop_assert_eq!(reverse_mapping(&reverse_mapping(&m)), m);
        }

        #[test]
        fn intersection_is_pointwise_subset(a in arb_mapping()) {
            let b = reverse_mapping(&reverse_mapping(&a));
            let i = intersect_mappings(&a, &b);
            prop_assert!(i.is_subset(&a) && i.is_subset(&b));
        }
    }
}
