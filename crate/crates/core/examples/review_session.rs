// Two annotators and an adjudicator review a projected corpus through the
// in-process service. Verdicts go to an append-only log, so reopening the
// service restores them.
//
// The same service is exposed over HTTP by `nermine serve-review`.
//
// ```text
// cargo run --example review_session
// ```

use nermine::corpus_io::{parse_conll, Tag};
use nermine::review::{AssignmentPolicy, ReviewConfig, ReviewService, Submission, Verdict};

const PROJECTED: &str = "\
झारखंड\tB-LOC
के\tO
मुख्यमंत्री\tO
हेमंत\tB-PER
सोरेन\tI-PER
फोटो:\tI-PER
पीटीआई\tI-PER

रांची\tB-LOC
में\tO
बारिश\tO
";

pub fn run() -> nermine::Result<()> {
    let dir = std::env::temp_dir().join(format!("nermine-review-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| nermine::Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let config = ReviewConfig {
        annotators: vec!["asha".into(), "ravi".into(), "meera".into()],
        adjudicator: Some("meera".into()),
        log_path: dir.join("reviews.jsonl"),
        assignment: AssignmentPolicy::Full,
    };
    let corpus = parse_conll(PROJECTED)?.sentences;
    let service = ReviewService::open(corpus.clone(), config.clone())?;

    let fixed: Vec<Tag> = "B-LOC O O B-PER I-PER O O"
        .split(' ')
        .map(str::parse)
        .collect::<Result<_, _>>()?;
    while let Some(task) = service.next_task("asha")? {
        let (verdict, tags) = if task.sentence_id == "1" {
            (Verdict::Edited, fixed.clone())
        } else {
            (Verdict::Accepted, task.projected_tags.clone())
        };
        service.submit_verdict(Submission {
            sentence_id: task.sentence_id,
            annotator_id: "asha".into(),
            verdict,
            final_tags: tags,
            timestamp: None,
        })?;
    }
    // ravi accepts everything, including the over-long PER span
    while let Some(task) = service.next_task("ravi")? {
        service.submit_verdict(Submission {
            sentence_id: task.sentence_id,
            annotator_id: "ravi".into(),
            verdict: Verdict::Accepted,
            final_tags: task.projected_tags,
            timestamp: None,
        })?;
    }
    service.submit_verdict(Submission {
        sentence_id: "1".into(),
        annotator_id: "meera".into(),
        verdict: Verdict::Edited,
        final_tags: fixed,
        timestamp: None,
    })?;

    for p in service.progress() {
        println!("{}: {}/{}", p.annotator_id, p.reviewed, p.total);
    }
    println!("{}", service.iaa_report("asha", "ravi")?);

    drop(service);
    let reopened = ReviewService::open(corpus, config)?;
    let gold = reopened.export_gold()?;
    println!(
        "after reopening: {} records, {} conflicts",
        reopened.records().len(),
        gold.conflicts
    );
    print!("{}", gold.conll);
    let _ = std::fs::remove_dir_all(&dir);
    Ok(())
}

#[allow(dead_code)]
fn main() -> nermine::Result<()> {
    run()
}
