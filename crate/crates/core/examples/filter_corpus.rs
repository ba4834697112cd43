// Filters a synthetic scored corpus and splits it three ways: entity-free
// sentences are downsampled, the best-aligned fraction is kept, and the
// survivors are shuffled into train/dev/test.
//
// ```text
// cargo run --example filter_corpus
// ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nermine::corpus_io::{EntitySpan, EntityType, LabeledSentence};
use nermine::filtering::{
    corpus_stats, downsample_no_entity, filter_top_fraction, split_corpus, FilterConfig,
    ScoredSentence, SplitRatios, StatsTable,
};

fn synthetic(n: usize, seed: u64) -> nermine::Result<Vec<ScoredSentence>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|k| {
            let len = rng.gen_range(4..12);
            let tokens: Vec<String> = (0..len).map(|i| format!("w{}", (k + i) % 97)).collect();
            let mut spans = Vec::new();
            if rng.gen_bool(0.4) {
                let etype = EntityType::ALL[rng.gen_range(0..3)];
                let start = rng.gen_range(0..len - 1);
                spans.push(EntitySpan::new(etype, start, start + rng.gen_range(0..2)));
            }
            let sentence = LabeledSentence::from_spans((k + 1).to_string(), tokens, &spans)?;
            Ok(ScoredSentence::new(sentence, rng.gen::<f64>()))
        })
        .collect()
}

pub fn run() -> nermine::Result<()> {
    let config = FilterConfig {
        keep_fraction: 0.35,
        no_entity_rate: 0.01,
        seed: 7,
    };
    let corpus = synthetic(5000, 1)?;
    let before = corpus_stats(corpus.iter().map(|s| &s.sentence));

    let sampled = downsample_no_entity(corpus, config.no_entity_rate, config.seed);
    let kept = filter_top_fraction(sampled, config.keep_fraction);
    let lowest = kept.iter().map(|s| s.score).fold(f64::INFINITY, f64::min);
    println!("kept {} sentences, lowest score {lowest:.4}\n", kept.len());

    let ratios = SplitRatios {
        train: 0.8,
        dev: 0.1,
        test: 0.1,
    };
    let splits = split_corpus(
        kept.into_iter().map(|s| s.sentence).collect(),
        ratios,
        config.seed,
    )?;
    let mut rows = vec![("input", before)];
    for (name, part) in splits.named() {
        rows.push((name, corpus_stats(part)));
    }
    print!("{}", StatsTable(&rows));
    Ok(())
}

#[allow(dead_code)]
fn main() -> nermine::Result<()> {
    run()
}
