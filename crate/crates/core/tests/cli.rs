mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nermine::corpus_io::{
    parse_conll, write_bitext_tsv, write_conll, EntitySpan, EntityType, LabeledSentence,
};
use nermine::evaluation::span_f1;
use nermine::filtering::corpus_stats;
use nermine::synthetic::{generate, SyntheticConfig};

use common::run;

const CAPTION_BITEXT: &str =
    "Jharkhand chief minister Hemant Soren\tझारखंड के मुख्यमंत्री हेमंत सोरेन फोटो: पीटीआई\n";
const CAPTION_ENGLISH: &str =
    "Jharkhand\tB-LOC\nchief\tO\nminister\tO\nHemant\tB-PER\nSoren\tI-PER\n";

fn caption_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("bitext.tsv"), CAPTION_BITEXT).unwrap();
    fs::write(p.join("en.conll"), CAPTION_ENGLISH).unwrap();
    fs::write(p.join("fwd.align"), "0-0 1-1 2-2 3-3 4-4 4-5 4-6\n").unwrap();
    fs::write(p.join("bwd.align"), "0-0 1-2 2-2 3-3 4-4\n").unwrap();
    dir
}

fn project_caption_example(dir: &Path, mode: &str) -> Vec<EntitySpan> {
    let work = format!("work-{mode}");
    let common = ["--bitext", "bitext.tsv", "--workdir", &work];
    let (code, _, err) = run(
        &[
            &["align"][..],
            &common,
            &[
                "--forward-alignment",
                "fwd.align",
                "--backward-alignment",
                "bwd.align",
            ],
        ]
        .concat(),
        dir,
    );
    assert_eq!(code, 0, "{err}");
    let (code, _, err) = run(
        &[
            &["project"][..],
            &common,
            &["--english-conll", "en.conll", "--mode", mode],
        ]
        .concat(),
        dir,
    );
    assert_eq!(code, 0, "{err}");
    let text = fs::read_to_string(dir.join(&work).join("projected.conll")).unwrap();
    parse_conll(&text).unwrap().sentences[0].spans()
}

#[test]
fn caption_example_through_the_cli() {
    let dir = caption_dir();
    let loc = EntitySpan::new(EntityType::Loc, 0, 0);
    assert_eq!(
        project_caption_example(dir.path(), "forward_only"),
        vec![loc, EntitySpan::new(EntityType::Per, 3, 6)]
    );
    assert_eq!(
        project_caption_example(dir.path(), "intersected"),
        vec![loc, EntitySpan::new(EntityType::Per, 3, 4)]
    );
    let drops = fs::read_to_string(dir.path().join("work-intersected/drops.tsv")).unwrap();
    assert_eq!(drops, "");
}

#[test]
fn toy_align_outputs() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bitext.tsv"),
        "the house\tdas haus\nthe book\tdas buch\n",
    )
    .unwrap();
    let args = [
        "align",
        "--bitext",
        "bitext.tsv",
        "--workdir",
        "w",
        "--em-iterations",
        "10",
    ];
    assert_eq!(run(&args, dir.path()).0, 0);
    let w = dir.path().join("w");
    let read = |name: &str| fs::read_to_string(w.join(name)).unwrap();
    let (fwd, bwd, both, scores) = (
        read("forward.align"),
        read("backward.align"),
        read("intersected.align"),
        read("scores.tsv"),
    );
    assert_eq!(fwd.lines().count(), 2);
    assert_eq!(bwd.lines().count(), 2);
    for (f, i) in fwd.lines().zip(both.lines()) {
        let links = |l: &str| {
            l.split(' ')
                .filter(|s| !s.is_empty())
                .map(|s| s.splitn(3, '-').take(2).collect::<Vec<_>>().join("-"))
                .collect::<Vec<_>>()
        };
        let f = links(f);
        assert!(
            links(i).iter().all(|x| f.contains(x)),
            "{i} not within {f:?}"
        );
    }
    assert!(fwd.lines().next().unwrap().starts_with("0-0-"));
    assert_eq!(
        scores
            .lines()
            .map(|l| l.split('\t').next().unwrap())
            .collect::<Vec<_>>(),
        ["1", "2"]
    );

    // tables exist now, so a rerun reads them back and must not change a byte
    let before: Vec<String> = [
        "forward.align",
        "backward.align",
        "intersected.align",
        "scores.tsv",
    ]
    .map(read)
    .to_vec();
    fs::remove_file(w.join("forward.align")).unwrap();
    assert_eq!(run(&args, dir.path()).0, 0);
    assert_eq!(
        [
            "forward.align",
            "backward.align",
            "intersected.align",
            "scores.tsv"
        ]
        .map(read)
        .to_vec(),
        before
    );
}

#[test]
fn empty_or_missing_bitext_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("empty.tsv"), "").unwrap();
    let (code, _, err) = run(
        &["align", "--bitext", "empty.tsv", "--workdir", "w"],
        dir.path(),
    );
    assert_eq!(code, 2, "{err}");
    let (code, _, err) = run(
        &["align", "--bitext", "nowhere.tsv", "--workdir", "w"],
        dir.path(),
    );
    assert_eq!(code, 2);
    assert!(err.contains("nowhere.tsv"), "{err}");
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["align", "--no-such-flag"][..],
        &["project", "--mode", "union"],
        &["filter-split", "--keep-fraction", "1.5"],
        &["align"],
        &["stats"],
        &[],
    ] {
        let (code, _, err) = run(args, dir.path());
        assert_eq!(code, 1, "{args:?}: {err}");
    }
    assert_eq!(run(&["--help"], dir.path()).0, 0);
}

#[test]
fn english_count_mismatch_names_both_counts() {
    let dir = caption_dir();
    let p = dir.path();
    fs::write(
        p.join("en2.conll"),
        format!("{CAPTION_ENGLISH}\n{CAPTION_ENGLISH}"),
    )
    .unwrap();
    let base = ["--bitext", "bitext.tsv", "--workdir", "w"];
    run(
        &[
            &["align"][..],
            &base,
            &[
                "--forward-alignment",
                "fwd.align",
                "--backward-alignment",
                "bwd.align",
            ],
        ]
        .concat(),
        p,
    );
    let (code, _, err) = run(
        &[&["project"][..], &base, &["--english-conll", "en2.conll"]].concat(),
        p,
    );
    assert_eq!(code, 2);
    assert!(err.contains('2') && err.contains('1'), "{err}");
    assert!(
        err.contains("English CoNLL") && err.contains("bitext"),
        "{err}"
    );
}

#[test]
fn all_o_english_from_a_tagger_hook() {
    let dir = caption_dir();
    let p = dir.path();
    let tagger = r#"awk '{for(i=1;i<=NF;i++) print $i "\tO"; print ""}'"#;
    let base = ["--bitext", "bitext.tsv", "--workdir", "w"];
    run(
        &[
            &["align"][..],
            &base,
            &[
                "--forward-alignment",
                "fwd.align",
                "--backward-alignment",
                "bwd.align",
            ],
        ]
        .concat(),
        p,
    );
    let (code, out, err) = run(
        &[
            &["project"][..],
            &base,
            &["--tagger-command", tagger, "--tagger-batch", "1"],
        ]
        .concat(),
        p,
    );
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("source_spans=0"));
    let projected = parse_conll(&fs::read_to_string(p.join("w/projected.conll")).unwrap()).unwrap();
    assert!(projected.sentences[0]
        .tags()
        .iter()
        .all(|t| t.to_string() == "O"));
    assert!(p.join("w/english.conll").exists());

    let (code, _, err) = run(
        &[&["project"][..], &base, &["--tagger-command", "exit 3"]].concat(),
        p,
    );
    assert_eq!(code, 2, "{err}");
}

#[test]
fn workdir_lock_blocks_a_second_run() {
    let dir = caption_dir();
    fs::create_dir(dir.path().join("w")).unwrap();
    fs::write(dir.path().join("w/.nermine.lock"), "1\n").unwrap();
    let (code, _, err) = run(
        &["align", "--bitext", "bitext.tsv", "--workdir", "w"],
        dir.path(),
    );
    assert_eq!(code, 2);
    assert!(err.contains("locked"), "{err}");
}

fn write_scored_corpus(dir: &Path, n: usize) -> Vec<LabeledSentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sentences: Vec<LabeledSentence> = (0..n)
        .map(|k| {
            let spans = if k % 2 == 0 {
                vec![EntitySpan::new(EntityType::ALL[k % 3], 0, 0)]
            } else {
                vec![]
            };
            LabeledSentence::from_spans((k + 1).to_string(), vec!["a".into(), "b".into()], &spans)
                .unwrap()
        })
        .collect();
    fs::create_dir_all(dir.join("w")).unwrap();
    fs::write(dir.join("w/projected.conll"), write_conll(&sentences)).unwrap();
    let scores: String = (0..n)
        .map(|k| format!("{}\t{}\n", k + 1, rng.gen::<f64>()))
        .collect();
    fs::write(dir.join("w/scores.tsv"), scores).unwrap();
    sentences
}

#[test]
fn filter_split_sizes_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let sentences = write_scored_corpus(p, 1000);
    fs::write(
        p.join("run.conf"),
        "workdir = w\nkeep_fraction = 1\nno_entity_rate = 1\nsplit = 0.8,0.1,0.1\nseed = 4\n",
    )
    .unwrap();
    let (code, out, err) = run(&["filter-split", "--config", "run.conf"], p);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("train=800\ndev=100\ntest=100"), "{out}");

    let read = |name: &str| fs::read_to_string(p.join("w").join(name)).unwrap();
    let splits: Vec<Vec<LabeledSentence>> = ["train.conll", "dev.conll", "test.conll"]
        .iter()
        .map(|n| parse_conll(&read(n)).unwrap().sentences)
        .collect();
    let mut ids: Vec<String> = splits
        .iter()
        .flatten()
        .map(|s| s.id().to_string())
        .collect();
    ids.sort();
    let mut all: Vec<String> = sentences.iter().map(|s| s.id().to_string()).collect();
    all.sort();
    assert_eq!(ids, all);

    let kv: BTreeMap<String, String> = read("stats.kv")
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    let total = corpus_stats(splits.iter().flatten());
    assert_eq!(kv["total.sentences"], total.sentences.to_string());
    for t in EntityType::ALL {
        assert_eq!(kv[&format!("total.{t}")], total.count(t).to_string());
    }
    assert_eq!(
        kv["total.entity_free_sentences"],
        total.entity_free_sentences.to_string()
    );
    assert!(read("stats.txt").starts_with("split"));

    let first = read("train.conll");
    assert_eq!(run(&["filter-split", "--config", "run.conf"], p).0, 0);
    assert_eq!(read("train.conll"), first);
    assert_eq!(
        run(&["filter-split", "--config", "run.conf", "--seed", "5"], p).0,
        0
    );
    assert_ne!(read("train.conll"), first);
}

#[test]
fn filter_split_needs_every_score() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    write_scored_corpus(p, 10);
    let scores = fs::read_to_string(p.join("w/scores.tsv")).unwrap();
    let without_7: String = scores
        .lines()
        .filter(|l| !l.starts_with("7\t"))
        .map(|l| format!("{l}\n"))
        .collect();
    fs::write(p.join("w/scores.tsv"), without_7).unwrap();
    let (code, _, err) = run(&["filter-split", "--workdir", "w"], p);
    assert_eq!(code, 2);
    assert!(err.contains("sentence 7"), "{err}");
}

#[test]
fn eval_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let corpus = generate(&SyntheticConfig {
        pairs: 60,
        seed: 3,
        ..SyntheticConfig::default()
    })
    .unwrap();
    let gold = corpus.target_gold;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let pred: Vec<LabeledSentence> = gold
        .iter()
        .map(|s| {
            let spans: Vec<EntitySpan> = s
                .spans()
                .into_iter()
                .filter(|_| rng.gen_bool(0.7))
                .collect();
            LabeledSentence::from_spans(s.id(), s.tokens().to_vec(), &spans).unwrap()
        })
        .collect();
    fs::write(p.join("gold.conll"), write_conll(&gold)).unwrap();
    fs::write(p.join("pred.conll"), write_conll(&pred)).unwrap();
    let (code, out, _) = run(
        &[
            "eval",
            "--gold",
            "gold.conll",
            "--pred",
            "pred.conll",
            "--kv",
        ],
        p,
    );
    assert_eq!(code, 0);
    assert_eq!(out, span_f1(&gold, &pred).unwrap().to_key_values());

    let (code, out, _) = run(
        &[
            "eval",
            "--gold",
            "gold.conll",
            "--pred",
            "gold.conll",
            "--kv",
        ],
        p,
    );
    assert_eq!(code, 0);
    assert!(out.contains("overall.f1=1\n"), "{out}");
    let (code, table, _) = run(&["eval", "--gold", "gold.conll", "--pred", "pred.conll"], p);
    assert_eq!(code, 0);
    assert!(table.contains("overall"));
}

#[test]
fn eval_on_the_caption_example() {
    let dir = caption_dir();
    let p = dir.path();
    let gold = "झारखंड\tB-LOC\nके\tO\nमुख्यमंत्री\tO\nहेमंत\tB-PER\nसोरेन\tI-PER\nफोटो:\tO\nपीटीआई\tO\n";
    fs::write(p.join("gold.conll"), gold).unwrap();
    project_caption_example(p, "forward_only");
    let (code, out, _) = run(
        &[
            "eval",
            "--gold",
            "gold.conll",
            "--pred",
            "work-forward_only/projected.conll",
            "--kv",
        ],
        p,
    );
    assert_eq!(code, 0);
    assert!(
        out.contains("PER.f1=0\n") && out.contains("LOC.f1=1\n"),
        "{out}"
    );

    fs::write(p.join("short.conll"), "a\tO\n").unwrap();
    assert_eq!(
        run(
            &["eval", "--gold", "gold.conll", "--pred", "short.conll"],
            p
        )
        .0,
        2
    );
}

#[test]
fn stats_table() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("a.conll"), "x\tB-PER\ny\tO\n\nz\tO\n").unwrap();
    let (code, out, _) = run(&["stats", "a.conll"], p);
    assert_eq!(code, 0);
    let row = out.lines().find(|l| l.starts_with("a ")).unwrap();
    let cols: Vec<&str> = row.split_whitespace().collect();
    assert_eq!(cols, ["a", "2", "0", "0", "1", "1"]);
}

fn run_pipeline(dir: &Path, work: &str, jobs: &str) -> BTreeMap<String, Vec<u8>> {
    let base = ["--config", "run.conf", "--workdir", work, "--jobs", jobs];
    for cmd in ["align-train", "align", "project", "filter-split"] {
        let (code, _, err) = run(&[&[cmd][..], &base].concat(), dir);
        assert_eq!(code, 0, "{cmd}: {err}");
    }
    fs::read_dir(dir.join(work))
        .unwrap()
        .map(|e| e.unwrap())
        .map(|e| {
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

#[test]
fn pipeline_is_identical_across_thread_counts_and_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let corpus = generate(&SyntheticConfig {
        pairs: 400,
        seed: 8,
        ..SyntheticConfig::default()
    })
    .unwrap();
    fs::write(p.join("bitext.tsv"), write_bitext_tsv(&corpus.pairs)).unwrap();
    fs::write(p.join("en.conll"), write_conll(&corpus.english)).unwrap();
    fs::write(
        p.join("run.conf"),
        "bitext = bitext.tsv\nenglish_conll = en.conll\nkeep_fraction = 0.5\nno_entity_rate = 0.2\nsplit = 0.8,0.1,0.1\nseed = 9\n",
    )
    .unwrap();
    let one = run_pipeline(p, "w1", "1");
    let four = run_pipeline(p, "w4", "4");
    assert!(one.contains_key("train.conll") && one.contains_key("table.fwd.tsv"));
    assert!(!one.contains_key(".nermine.lock"));
    assert_eq!(one, four);
    assert_eq!(run_pipeline(p, "w1", "3"), one);
}
