// Projects "Jharkhand chief minister Hemant Soren" onto its Hindi
// translation. The forward alignment links "Soren" to the caption words
// that follow it, so forward-only projection stretches the PER span; the
// intersection with the backward alignment trims it.
//
// ```text
// cargo run --example project_caption
// ```

use nermine::aligner::DirectionalMapping;
use nermine::corpus_io::{AlignmentLinks, EntitySpan, EntityType, SentencePair};
use nermine::projection::{project_spans, ProjectionInput, ProjectionMode};

pub fn run() -> nermine::Result<()> {
    let pair = SentencePair::from_text(
        "soren",
        "Jharkhand chief minister Hemant Soren",
        "झारखंड के मुख्यमंत्री हेमंत सोरेन फोटो: पीटीआई",
    )?;
    let spans = [
        EntitySpan::new(EntityType::Loc, 0, 0),
        EntitySpan::new(EntityType::Per, 3, 4),
    ];
    let forward: AlignmentLinks = [(0, 0), (1, 1), (2, 2), (3, 3), (4, 4), (4, 5), (4, 6)]
        .into_iter()
        .collect();
    // (source, target) pairs read off the target-to-source run
    let backward: AlignmentLinks = [(0, 0), (1, 2), (2, 2), (3, 3), (4, 4)]
        .into_iter()
        .collect();

    let (src, tgt) = (pair.src_len(), pair.tgt_len());
    let english2indic = DirectionalMapping::source_to_target(&forward, src, tgt)?;
    let indic2english = DirectionalMapping::target_to_source(&backward, src, tgt)?;
    let input = ProjectionInput {
        pair: &pair,
        english_spans: &spans,
        english2indic: &english2indic,
        indic2english: &indic2english,
    };

    for mode in [ProjectionMode::ForwardOnly, ProjectionMode::Intersected] {
        let result = project_spans(&input, mode)?;
        println!("{}:", mode.as_str());
        for span in result.projected_spans() {
            let words = pair.tgt_tokens[span.start..=span.end].join(" ");
            println!("  {span}  {words}");
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> nermine::Result<()> {
    run()
}
