// Runs the file-level pipeline on a generated corpus: align, project under
// both modes, score the projections against the known target labels, then
// filter and split the intersected output.
//
// ```text
// cargo run --release --example end_to_end
// ```

use std::path::Path;

use nermine::corpus_io::{write_bitext_tsv, write_conll};
use nermine::evaluation::span_f1;
use nermine::pipeline::{self, PipelineConfig};
use nermine::synthetic::{generate, SyntheticConfig};

fn write(path: &Path, text: &str) -> nermine::Result<()> {
    std::fs::write(path, text).map_err(|e| nermine::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn run() -> nermine::Result<()> {
    let dir = std::env::temp_dir().join(format!("nermine-e2e-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| nermine::Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let corpus = generate(&SyntheticConfig {
        pairs: 1500,
        seed: 42,
        ..SyntheticConfig::default()
    })?;
    write(&dir.join("bitext.tsv"), &write_bitext_tsv(&corpus.pairs))?;
    write(&dir.join("english.conll"), &write_conll(&corpus.english))?;

    let overrides = |mode: &str| {
        [
            ("workdir", dir.join("work").display().to_string()),
            ("bitext", dir.join("bitext.tsv").display().to_string()),
            (
                "english_conll",
                dir.join("english.conll").display().to_string(),
            ),
            ("em_iterations", "5".into()),
            ("mode", mode.into()),
            ("keep_fraction", "0.5".into()),
            ("no_entity_rate", "0.1".into()),
            ("split", "0.8,0.1,0.1".into()),
            ("seed", "1".into()),
        ]
        .map(|(k, v)| (k.to_string(), v))
    };

    let config = PipelineConfig::load(None, &overrides("intersected"))?;
    let aligned = pipeline::align(&config)?;
    println!(
        "aligned {} pairs: {} forward links, {} intersected",
        aligned.pairs, aligned.forward_links, aligned.intersected_links
    );

    for mode in ["forward_only", "intersected"] {
        let config = PipelineConfig::load(None, &overrides(mode))?;
        let drops = pipeline::project(&config)?;
        let projected = pipeline::read_conll_file(&config.workdir.join(pipeline::PROJECTED))?;
        let report = span_f1(&corpus.target_gold, &projected)?;
        println!(
            "{mode:>12}: F1 {:.4}  ({} of {} spans projected)",
            report.overall.f1(),
            drops.projected_spans,
            drops.source_spans
        );
    }

    // the intersected projection is the one on disk now
    let summary = pipeline::filter_split(&config)?;
    println!(
        "\nfiltered {} -> {} -> {} sentences\n",
        summary.input, summary.after_downsample, summary.after_top_fraction
    );
    print!(
        "{}",
        std::fs::read_to_string(config.workdir.join(pipeline::STATS_TABLE)).unwrap_or_default()
    );
    let _ = std::fs::remove_dir_all(&dir);
    Ok(())
}

#[allow(dead_code)]
fn main() -> nermine::Result<()> {
    run()
}
