// Span-level scores of a prediction against gold, and token-level
// agreement between two annotators.
//
// ```text
// cargo run --example evaluate_spans
// ```

use nermine::corpus_io::parse_conll;
use nermine::evaluation::{cohens_kappa, span_f1};

const GOLD: &str = "\
Hemant\tB-PER
Soren\tI-PER
visited\tO
Ranchi\tB-LOC

Tata\tB-ORG
Steel\tI-ORG
reported\tO
profits\tO
";

// Gets the person right, misses the city, cuts the company short.
const PRED: &str = "\
Hemant\tB-PER
Soren\tI-PER
visited\tO
Ranchi\tO

Tata\tB-ORG
Steel\tO
reported\tO
profits\tO
";

pub fn run() -> nermine::Result<()> {
    let gold = parse_conll(GOLD)?.sentences;
    let pred = parse_conll(PRED)?.sentences;

    let report = span_f1(&gold, &pred)?;
    println!("{report}");

    let agreement = cohens_kappa(&gold, &pred)?;
    println!("{agreement}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> nermine::Result<()> {
    run()
}
