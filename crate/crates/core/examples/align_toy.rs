// Trains IBM Model 1 in both directions on a four-sentence toy bitext,
// prints a few translation probabilities and the symmetrized alignment.
//
// ```text
// cargo run --example align_toy
// ```

use nermine::aligner::{align_viterbi, symmetrize_intersection, train_ibm1, Direction, EmConfig};
use nermine::corpus_io::{write_pharaoh, SentencePair};

pub fn run() -> nermine::Result<()> {
    let corpus = vec![
        SentencePair::from_text("1", "the house", "das haus")?,
        SentencePair::from_text("2", "the book", "das buch")?,
        SentencePair::from_text("3", "a book", "ein buch")?,
        SentencePair::from_text("4", "a house", "ein haus")?,
    ];
    let config = EmConfig {
        iterations: 10,
        ..EmConfig::default()
    };
    let forward = train_ibm1(&corpus, Direction::SourceToTarget, &config)?;
    let backward = train_ibm1(&corpus, Direction::TargetToSource, &config)?;

    println!("log-likelihood per iteration:");
    for (k, ll) in forward.log_likelihoods().iter().enumerate() {
        println!("  {k:>2}  {ll:.6}");
    }
    for (e, f) in [
        ("the", "das"),
        ("house", "haus"),
        ("book", "buch"),
        ("a", "ein"),
    ] {
        println!("t({f} | {e}) = {:.4}", forward.prob(e, f));
    }

    for pair in &corpus {
        let fwd = align_viterbi(&forward, pair);
        let bwd = align_viterbi(&backward, pair);
        let both = symmetrize_intersection(&fwd, &bwd);
        println!(
            "{}  forward: {}  intersected: {}",
            pair.id,
            write_pharaoh(&fwd),
            write_pharaoh(&both)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> nermine::Result<()> {
    run()
}
