use std::collections::BTreeMap;

use proptest::prelude::*;

use nermine::aligner::{
    quality_score, symmetrize_intersection, train_ibm1, Direction, DirectionalMapping, EmConfig,
};
use nermine::corpus_io::{
    iob_from_spans, parse_conll, spans_from_iob, write_conll, AlignmentLinks, EntitySpan,
    EntityType, LabeledSentence, SentencePair, Tag,
};
use nermine::evaluation::{cohens_kappa, span_f1};
use nermine::filtering::{
    corpus_stats, downsample_no_entity, filter_top_fraction, kept_count, ScoredSentence,
};
use nermine::projection::{project_spans, ProjectionInput, ProjectionMode};
use nermine::review::{AssignmentPolicy, ReviewConfig, ReviewService, Submission, Verdict};

fn etype() -> impl Strategy<Value = EntityType> {
    prop::sample::select(EntityType::ALL.to_vec())
}

/// Non-overlapping spans over `n` tokens.
fn spans(n: usize) -> impl Strategy<Value = Vec<EntitySpan>> {
    prop::collection::vec((etype(), 0..n, 0..3usize), 0..4).prop_map(move |raw| {
        let mut out: Vec<EntitySpan> = Vec::new();
        let mut raw = raw;
        raw.sort_by_key(|r| r.1);
        for (t, start, extra) in raw {
            let end = (start + extra).min(n - 1);
            if out.last().is_none_or(|s| s.end < start) {
                out.push(EntitySpan::new(t, start, end));
            }
        }
        out
    })
}

fn sentence(id: String) -> impl Strategy<Value = LabeledSentence> {
    (1..10usize)
        .prop_flat_map(|n| (prop::collection::vec("[a-z]{1,4}", n), spans(n)))
        .prop_map(move |(tokens, spans)| {
            LabeledSentence::from_spans(id.clone(), tokens, &spans).unwrap()
        })
}

fn corpus(max: usize) -> impl Strategy<Value = Vec<LabeledSentence>> {
    (1..max).prop_flat_map(|n| {
        (0..n)
            .map(|k| sentence((k + 1).to_string()))
            .collect::<Vec<_>>()
    })
}

fn bitext() -> impl Strategy<Value = Vec<SentencePair>> {
    let words = prop::sample::select(vec!["a", "b", "c", "d", "e", "f"]);
    let side = prop::collection::vec(words, 1..5)
        .prop_map(|w| w.into_iter().map(String::from).collect::<Vec<_>>());
    prop::collection::vec((side.clone(), side), 1..12).prop_map(|pairs| {
        pairs
            .into_iter()
            .enumerate()
            .map(|(k, (s, t))| SentencePair::new(k.to_string(), s, t).unwrap())
            .collect()
    })
}

fn links(src: usize, tgt: usize) -> impl Strategy<Value = AlignmentLinks> {
    prop::collection::vec((0..src, 0..tgt), 0..(src * tgt + 1))
        .prop_map(|v| v.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn em_rows_stochastic_and_likelihood_monotone(corpus in bitext(), iterations in 1..8usize, use_null in any::<bool>()) {
        let config = EmConfig { iterations, use_null, ..EmConfig::default() };
        for direction in [Direction::SourceToTarget, Direction::TargetToSource] {
            let table = train_ibm1(&corpus, direction, &config).unwrap();
            for s in table.row_sums() {
                prop_assert!((s - 1.0).abs() <= 1e-9, "row sum {}", s);
            }
            for w in table.log_likelihoods().windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-9, "{:?}", w);
            }
        }
    }

    #[test]
    fn intersection_algebra(
        (a, b) in (1..6usize, 1..6usize).prop_flat_map(|(src, tgt)| (links(src, tgt), links(tgt, src)))
    ) {
        let ab = symmetrize_intersection(&a, &b);
        prop_assert!(ab.is_subset(&a));
        prop_assert!(ab.is_subset(&b.reversed()));
        prop_assert_eq!(symmetrize_intersection(&b, &a), ab.reversed());
        prop_assert_eq!(symmetrize_intersection(&ab, &ab.reversed()), ab.clone());
    }

    #[test]
    fn raising_a_probability_never_lowers_the_score(
        probs in prop::collection::vec(0.01f64..1.0, 1..6),
        which in any::<prop::sample::Index>(),
        boost in 0.0f64..1.0,
    ) {
        let n = probs.len();
        let pair = SentencePair::new("p", vec!["s".into(); n], vec!["t".into(); n]).unwrap();
        let mut base = AlignmentLinks::new();
        for (i, &p) in probs.iter().enumerate() {
            base.insert(i, i, Some(p));
        }
        let k = which.index(n);
        let mut raised = AlignmentLinks::new();
        for (i, &p) in probs.iter().enumerate() {
            raised.insert(i, i, Some(if i == k { p + (1.0 - p) * boost } else { p }));
        }
        prop_assert!(quality_score(&pair, &raised).unwrap() >= quality_score(&pair, &base).unwrap());
    }

    #[test]
    fn projection_invariants(
        (src, tgt, spans, fwd, bwd) in (1..8usize, 1..8usize).prop_flat_map(|(s, t)| {
            (Just(s), Just(t), spans(s), links(s, t), links(s, t))
        })
    ) {
        let pair = SentencePair::new(
            "p",
            (0..src).map(|i| format!("s{i}")).collect(),
            (0..tgt).map(|j| format!("t{j}")).collect(),
        ).unwrap();
        let e2i = DirectionalMapping::source_to_target(&fwd, src, tgt).unwrap();
        let i2e = DirectionalMapping::target_to_source(&bwd, src, tgt).unwrap();
        let input = ProjectionInput { pair: &pair, english_spans: &spans, english2indic: &e2i, indic2english: &i2e };
        let forward = project_spans(&input, ProjectionMode::ForwardOnly).unwrap();
        let both = project_spans(&input, ProjectionMode::Intersected).unwrap();
        prop_assert!(both.mapping_used.is_subset(&forward.mapping_used));

        for r in [&forward, &both] {
            let projected = r.projected_spans();
            prop_assert_eq!(projected.len() + r.dropped_spans.len(), spans.len());
            prop_assert_eq!(spans_from_iob(r.labeled.tags()).unwrap(), projected.clone());
            prop_assert_eq!(r.labeled.len(), tgt);
            for w in projected.windows(2) {
                prop_assert!(w[0].end < w[1].start);
            }
            let mut by_type: BTreeMap<EntityType, usize> = BTreeMap::new();
            for s in &projected {
                *by_type.entry(s.etype).or_default() += 1;
            }
            let mut kept_src: BTreeMap<EntityType, usize> = BTreeMap::new();
            for s in &spans {
                if !r.dropped_spans.iter().any(|(d, _)| d == s) {
                    *kept_src.entry(s.etype).or_default() += 1;
                }
            }
            prop_assert_eq!(by_type, kept_src);
        }
        // a span's intersected range lies inside its forward range, when
        // neither run dropped it
        for s in &spans {
            let find = |r: &nermine::projection::ProjectionResult| {
                if r.dropped_spans.iter().any(|(d, _)| d == s) {
                    return None;
                }
                let targets: Vec<usize> = s.indices().flat_map(|i| r.mapping_used.get(i).iter().copied().collect::<Vec<_>>()).collect();
                Some((*targets.iter().min()?, *targets.iter().max()?))
            };
            if let (Some(f), Some(b)) = (find(&forward), find(&both)) {
                prop_assert!(f.0 <= b.0 && b.1 <= f.1);
            }
        }
    }

    #[test]
    fn increasing_bijection_substitutes_indices(n in 1..10usize, extra in prop::collection::vec(0..3usize, 10), seed in 0..5usize) {
        // strictly increasing map i -> pos[i] into a longer target
        let mut pos = Vec::new();
        let mut at = 0;
        for e in extra.iter().take(n) {
            at += e;
            pos.push(at);
            at += 1;
        }
        let tgt = at;
        let spans: Vec<EntitySpan> = (0..n)
            .step_by(2)
            .map(|i| EntitySpan::new(EntityType::ALL[(i + seed) % 3], i, i))
            .collect();
        let pair = SentencePair::new("p", (0..n).map(|i| format!("s{i}")).collect(), (0..tgt).map(|j| format!("t{j}")).collect()).unwrap();
        let l: AlignmentLinks = (0..n).map(|i| (i, pos[i])).collect();
        let e2i = DirectionalMapping::source_to_target(&l, n, tgt).unwrap();
        let i2e = DirectionalMapping::target_to_source(&l, n, tgt).unwrap();
        let input = ProjectionInput { pair: &pair, english_spans: &spans, english2indic: &e2i, indic2english: &i2e };
        let want: Vec<EntitySpan> = spans.iter().map(|s| EntitySpan::new(s.etype, pos[s.start], pos[s.end])).collect();
        for mode in [ProjectionMode::ForwardOnly, ProjectionMode::Intersected] {
            prop_assert_eq!(project_spans(&input, mode).unwrap().projected_spans(), want.clone());
        }
    }

    #[test]
    fn filters(corpus in corpus(40), scores in prop::collection::vec(0u8..5, 40), fraction in 0.01f64..=1.0, seed in any::<u64>()) {
        let scored: Vec<ScoredSentence> = corpus
            .iter()
            .zip(&scores)
            .map(|(s, &x)| ScoredSentence::new(s.clone(), x as f64))
            .collect();
        let kept = filter_top_fraction(scored.clone(), fraction);
        prop_assert_eq!(kept.len(), kept_count(fraction, scored.len()));
        prop_assert_eq!(kept.len(), (fraction * scored.len() as f64 - 1e-9).ceil() as usize);
        let kept_ids: Vec<&str> = kept.iter().map(|s| s.sentence.id()).collect();
        let min_kept = kept.iter().map(|s| s.score).fold(f64::INFINITY, f64::min);
        for s in &scored {
            if !kept_ids.contains(&s.sentence.id()) {
                prop_assert!(s.score <= min_kept);
            }
        }
        let sampled = downsample_no_entity(scored.clone(), 0.3, seed);
        prop_assert_eq!(&sampled, &downsample_no_entity(scored.clone(), 0.3, seed));
        let entity = |v: &[ScoredSentence]| v.iter().filter(|s| s.has_entity).cloned().collect::<Vec<_>>();
        prop_assert_eq!(entity(&sampled), entity(&scored));
        let before = corpus_stats(scored.iter().map(|s| &s.sentence));
        let after = corpus_stats(sampled.iter().map(|s| &s.sentence));
        for t in EntityType::ALL {
            prop_assert!(after.count(t) <= before.count(t));
        }
    }

    #[test]
    fn evaluation_symmetries(gold in corpus(8), seed in any::<u64>()) {
        use rand::{seq::SliceRandom, Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let pred: Vec<LabeledSentence> = gold
            .iter()
            .map(|s| {
                let kept: Vec<EntitySpan> = s.spans().into_iter().filter(|_| rng.gen_bool(0.6)).collect();
                LabeledSentence::from_spans(s.id(), s.tokens().to_vec(), &kept).unwrap()
            })
            .collect();
        let report = span_f1(&gold, &pred).unwrap();
        let swapped = span_f1(&pred, &gold).unwrap();
        prop_assert_eq!(report.overall.precision(), swapped.overall.recall());
        prop_assert_eq!(report.overall.recall(), swapped.overall.precision());

        let mut order: Vec<usize> = (0..gold.len()).collect();
        order.shuffle(&mut rng);
        let g2: Vec<LabeledSentence> = order.iter().map(|&k| gold[k].clone()).collect();
        let p2: Vec<LabeledSentence> = order.iter().rev().map(|&k| pred[k].clone()).collect();
        prop_assert_eq!(span_f1(&g2, &p2).unwrap(), report.clone());

        for t in EntityType::ALL {
            let support: usize = gold.iter().map(|s| spans_from_iob(s.tags()).unwrap().iter().filter(|x| x.etype == t).count()).sum();
            prop_assert_eq!(report.counts(t).support(), support);
        }

        // consistent renaming of entity types leaves kappa unchanged
        let rename = |s: &LabeledSentence| {
            let spans: Vec<EntitySpan> = s.spans().into_iter().map(|x| {
                let t = match x.etype { EntityType::Per => EntityType::Org, EntityType::Org => EntityType::Loc, EntityType::Loc => EntityType::Per };
                EntitySpan::new(t, x.start, x.end)
            }).collect();
            s.with_tags(iob_from_spans(&spans, s.len()).unwrap()).unwrap()
        };
        let k1 = cohens_kappa(&gold, &pred).unwrap();
        let k2 = cohens_kappa(&gold.iter().map(rename).collect::<Vec<_>>(), &pred.iter().map(rename).collect::<Vec<_>>()).unwrap();
        prop_assert!((k1.kappa - k2.kappa).abs() <= 1e-12);
        let self_kappa = cohens_kappa(&gold, &gold).unwrap();
        prop_assert_eq!(self_kappa.kappa, 1.0);
    }

    #[test]
    fn conll_round_trip(corpus in corpus(20)) {
        let text = write_conll(&corpus);
        let parsed = parse_conll(&text).unwrap();
        prop_assert_eq!((parsed.repairs, parsed.misc_removed), (0, 0));
        prop_assert_eq!(&parsed.sentences, &corpus);
        prop_assert_eq!(write_conll(&parsed.sentences), text);
    }

    #[test]
    fn export_always_parses_cleanly(corpus in corpus(10), edits in prop::collection::vec((any::<prop::sample::Index>(), 0..3usize, any::<bool>()), 0..30)) {
        let dir = tempfile::tempdir().unwrap();
        let service = ReviewService::open(corpus.clone(), ReviewConfig {
            annotators: vec!["a".into(), "b".into(), "c".into()],
            adjudicator: Some("c".into()),
            log_path: dir.path().join("log.jsonl"),
            assignment: AssignmentPolicy::Full,
        }).unwrap();
        for (which, annotator, accept) in edits {
            let s = &corpus[which.index(corpus.len())];
            let (verdict, tags) = if accept {
                (Verdict::Accepted, s.tags().to_vec())
            } else {
                (Verdict::Edited, vec![Tag::O; s.len()])
            };
            service.submit_verdict(Submission {
                sentence_id: s.id().into(),
                annotator_id: ["a", "b", "c"][annotator].into(),
                verdict,
                final_tags: tags,
                timestamp: None,
            }).unwrap();
        }
        let gold = service.export_gold().unwrap();
        let parsed = parse_conll(&gold.conll).unwrap();
        prop_assert_eq!((parsed.repairs, parsed.misc_removed), (0, 0));
        prop_assert_eq!(parsed.sentences.len(), gold.sentences);
    }
}

#[test]
fn training_is_identical_for_any_thread_count() {
    let corpus = nermine::synthetic::generate(&nermine::synthetic::SyntheticConfig {
        pairs: 3000,
        seed: 4,
        ..Default::default()
    })
    .unwrap()
    .pairs;
    let train = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                train_ibm1(&corpus, Direction::SourceToTarget, &EmConfig::default()).unwrap()
            })
    };
    let one = train(1);
    for threads in [2, 3, 8] {
        let other = train(threads);
        assert_eq!(other.to_text(), one.to_text());
        assert_eq!(
            other
                .log_likelihoods()
                .iter()
                .map(|x| x.to_bits())
                .collect::<Vec<_>>(),
            one.log_likelihoods()
                .iter()
                .map(|x| x.to_bits())
                .collect::<Vec<_>>()
        );
    }
}
