//! Pipeline commands: align, project, filter and split, plus stats and
//! evaluation over CoNLL files.
//!
//! Each command reads its inputs from the configuration and from files in
//! the working directory written by earlier commands, and writes its own
//! outputs there. A lock file keeps two runs out of the same directory.
//!
//! | command | reads | writes |
//! |---|---|---|
//! | [`align_train`] | bitext | `table.fwd.tsv`, `table.bwd.tsv` |
//! | [`align`] | bitext, tables or external Pharaoh files | `forward.align`, `backward.align`, `intersected.align`, `scores.tsv` |
//! | [`project`] | bitext, English CoNLL, `forward.align`, `backward.align` | `projected.conll`, `drops.tsv` |
//! | [`filter_split`] | `projected.conll`, `scores.tsv` | `train.conll`, `dev.conll`, `test.conll`, `stats.txt`, `stats.kv` |
//!
//! All alignment files are in `(source, target)` orientation. External
//! forward links without probabilities are scored with the builtin
//! source-to-target table.

mod config;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use rayon::prelude::*;

pub use config::{AlignmentSource, PipelineConfig};

use crate::aligner::{
    align_viterbi, quality_score, symmetrize_intersection, train_ibm1, Direction, TranslationTable,
};
use crate::corpus_io::{
    parse_bitext_tsv, parse_conll, parse_pharaoh_file, read_parallel, write_conll,
    write_pharaoh_file, AlignmentLinks, LabeledSentence, SentencePair,
};
use crate::error::{Error, Result};
use crate::evaluation::{span_f1, EvalReport};
use crate::filtering::{
    corpus_stats, downsample_no_entity, filter_top_fraction, split_corpus, CorpusStats,
    ScoredSentence, StatsTable,
};
use crate::projection::{project_corpus, write_drop_log, DropStats};

pub const FORWARD_TABLE: &str = "table.fwd.tsv";
pub const BACKWARD_TABLE: &str = "table.bwd.tsv";
pub const FORWARD_ALIGN: &str = "forward.align";
pub const BACKWARD_ALIGN: &str = "backward.align";
pub const INTERSECTED_ALIGN: &str = "intersected.align";
pub const SCORES: &str = "scores.tsv";
pub const TAGGED_ENGLISH: &str = "english.conll";
pub const PROJECTED: &str = "projected.conll";
pub const DROPS: &str = "drops.tsv";
pub const STATS_TABLE: &str = "stats.txt";
pub const STATS_KV: &str = "stats.kv";
pub const LOCK_FILE: &str = ".nermine.lock";

/// Held for the duration of a command; removes the lock file on drop.
#[derive(Debug)]
pub struct WorkdirLock {
    path: PathBuf,
}

impl WorkdirLock {
    pub fn acquire(workdir: &Path) -> Result<Self> {
        fs::create_dir_all(workdir).map_err(|e| Error::io(workdir, e))?;
        let path = workdir.join(LOCK_FILE);
        match fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Self { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Locked(path)),
            Err(e) => Err(Error::io(&path, e)),
        }
    }
}

impl Drop for WorkdirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

pub(crate) fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes through a temporary file so readers never see half a file.
pub(crate) fn write(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match jobs {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("jobs: {e}")))?
            .install(f),
    }
}

/// Reads the configured bitext.
pub fn load_pairs(config: &PipelineConfig) -> Result<Vec<SentencePair>> {
    let pairs = match (&config.bitext, &config.src, &config.tgt) {
        (Some(path), _, _) => parse_bitext_tsv(&read(path)?),
        (None, Some(src), Some(tgt)) => read_parallel(&read(src)?, &read(tgt)?),
        _ => {
            return Err(Error::Config(
                "no bitext configured: set bitext, or src and tgt".into(),
            ))
        }
    }?;
    if pairs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(pairs)
}

pub fn read_conll_file(path: &Path) -> Result<Vec<LabeledSentence>> {
    Ok(parse_conll(&read(path)?)?.sentences)
}

fn check_count(left: &str, left_count: usize, right: &str, right_count: usize) -> Result<()> {
    if left_count != right_count {
        return Err(Error::CountMismatch {
            left: left.into(),
            left_count,
            right: right.into(),
            right_count,
        });
    }
    Ok(())
}

/// Trains both directional tables.
pub fn train_tables(
    pairs: &[SentencePair],
    config: &PipelineConfig,
) -> Result<(TranslationTable, TranslationTable)> {
    let forward = train_ibm1(pairs, Direction::SourceToTarget, &config.em)?;
    let backward = train_ibm1(pairs, Direction::TargetToSource, &config.em)?;
    Ok((forward, backward))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub pairs: usize,
    pub forward_log_likelihood: f64,
    pub backward_log_likelihood: f64,
}

/// Trains both directions and writes the tables.
pub fn align_train(config: &PipelineConfig) -> Result<TrainSummary> {
    let _lock = WorkdirLock::acquire(&config.workdir)?;
    with_jobs(config.jobs, || {
        let pairs = load_pairs(config)?;
        let (forward, backward) = train_tables(&pairs, config)?;
        write(&config.workdir.join(FORWARD_TABLE), &forward.to_text())?;
        write(&config.workdir.join(BACKWARD_TABLE), &backward.to_text())?;
        Ok(TrainSummary {
            pairs: pairs.len(),
            forward_log_likelihood: *forward.log_likelihoods().last().unwrap_or(&f64::NAN),
            backward_log_likelihood: *backward.log_likelihoods().last().unwrap_or(&f64::NAN),
        })
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignSummary {
    pub pairs: usize,
    pub forward_links: usize,
    pub backward_links: usize,
    pub intersected_links: usize,
}

/// Per-pair forward, backward (both `(source, target)`) and intersected links.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignments {
    pub forward: Vec<AlignmentLinks>,
    pub backward: Vec<AlignmentLinks>,
    pub intersected: Vec<AlignmentLinks>,
}

fn load_or_train(
    config: &PipelineConfig,
    pairs: &[SentencePair],
    name: &str,
    direction: Direction,
) -> Result<TranslationTable> {
    let path = config.workdir.join(name);
    if path.exists() {
        let table = TranslationTable::from_text(&read(&path)?)?;
        if table.direction() != direction {
            return Err(Error::Config(format!(
                "{} holds a {} table, expected {}",
                path.display(),
                table.direction().as_str(),
                direction.as_str()
            )));
        }
        return Ok(table);
    }
    let table = train_ibm1(pairs, direction, &config.em)?;
    write(&path, &table.to_text())?;
    Ok(table)
}

/// Viterbi links for every pair under both tables.
pub fn align_with_tables(
    pairs: &[SentencePair],
    forward: &TranslationTable,
    backward: &TranslationTable,
) -> Alignments {
    let (fwd, bwd): (Vec<_>, Vec<_>) = pairs
        .par_iter()
        .map(|pair| (align_viterbi(forward, pair), align_viterbi(backward, pair)))
        .unzip();
    let intersected = fwd
        .iter()
        .zip(&bwd)
        .map(|(f, b)| symmetrize_intersection(f, b))
        .collect();
    Alignments {
        forward: fwd,
        backward: bwd.iter().map(AlignmentLinks::reversed).collect(),
        intersected,
    }
}

fn compute_alignments(config: &PipelineConfig, pairs: &[SentencePair]) -> Result<Alignments> {
    let external = |path: &Path| parse_pharaoh_file(&read(path)?, pairs);
    match (&config.forward_alignment, &config.backward_alignment) {
        (AlignmentSource::Builtin, AlignmentSource::Builtin) => {
            let forward = load_or_train(config, pairs, FORWARD_TABLE, Direction::SourceToTarget)?;
            let backward = load_or_train(config, pairs, BACKWARD_TABLE, Direction::TargetToSource)?;
            Ok(align_with_tables(pairs, &forward, &backward))
        }
        (fwd_src, bwd_src) => {
            let forward = match fwd_src {
                AlignmentSource::File(p) => {
                    let links = external(p)?;
                    if links.iter().all(|l| l.iter().all(|(_, p)| p.is_some())) {
                        links
                    } else {
                        let t =
                            load_or_train(config, pairs, FORWARD_TABLE, Direction::SourceToTarget)?;
                        pairs
                            .iter()
                            .zip(&links)
                            .map(|(pair, l)| with_table_probs(&t, pair, l))
                            .collect()
                    }
                }
                AlignmentSource::Builtin => {
                    let t = load_or_train(config, pairs, FORWARD_TABLE, Direction::SourceToTarget)?;
                    pairs.par_iter().map(|p| align_viterbi(&t, p)).collect()
                }
            };
            let backward = match bwd_src {
                AlignmentSource::File(p) => external(p)?,
                AlignmentSource::Builtin => {
                    let t =
                        load_or_train(config, pairs, BACKWARD_TABLE, Direction::TargetToSource)?;
                    pairs
                        .par_iter()
                        .map(|p| align_viterbi(&t, p).reversed())
                        .collect()
                }
            };
            let intersected = forward
                .iter()
                .zip(&backward)
                .map(|(f, b)| f.intersection(b))
                .collect();
            Ok(Alignments {
                forward,
                backward,
                intersected,
            })
        }
    }
}

/// Fills missing link probabilities from a source-to-target table.
fn with_table_probs(
    table: &TranslationTable,
    pair: &SentencePair,
    links: &AlignmentLinks,
) -> AlignmentLinks {
    let mut out = AlignmentLinks::new();
    for ((i, j), p) in links.iter() {
        let p = p.unwrap_or_else(|| {
            table
                .prob(&pair.src_tokens[i], &pair.tgt_tokens[j])
                .clamp(f64::MIN_POSITIVE, 1.0)
        });
        out.insert(i, j, Some(p));
    }
    out
}

/// `pair_id<TAB>score` lines, scoring each pair by its forward links.
pub fn write_scores(pairs: &[SentencePair], forward: &[AlignmentLinks]) -> Result<String> {
    let scores: Vec<f64> = pairs
        .par_iter()
        .zip(forward)
        .map(|(pair, links)| {
            quality_score(pair, links).map_err(|e| Error::mismatch(&pair.id, e.to_string()))
        })
        .collect::<Result<_>>()?;
    let mut out = String::new();
    for (pair, score) in pairs.iter().zip(scores) {
        let _ = writeln!(out, "{}\t{score}", pair.id);
    }
    Ok(out)
}

pub fn parse_scores(text: &str) -> Result<HashMap<String, f64>> {
    let mut scores = HashMap::new();
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, score) = line.split_once('\t').ok_or_else(|| Error::Parse {
            line: k + 1,
            message: "expected pair_id<TAB>score".into(),
        })?;
        let score: f64 = score.trim().parse().map_err(|_| Error::Parse {
            line: k + 1,
            message: format!("bad score {score:?}"),
        })?;
        if scores.insert(id.to_string(), score).is_some() {
            return Err(Error::Parse {
                line: k + 1,
                message: format!("duplicate pair id {id}"),
            });
        }
    }
    Ok(scores)
}

/// Aligns every pair and writes the three alignment files and the scores.
/// Builtin tables are trained first unless already present in the workdir.
pub fn align(config: &PipelineConfig) -> Result<AlignSummary> {
    let _lock = WorkdirLock::acquire(&config.workdir)?;
    with_jobs(config.jobs, || {
        let pairs = load_pairs(config)?;
        let a = compute_alignments(config, &pairs)?;
        let scores = write_scores(&pairs, &a.forward)?;
        let dir = &config.workdir;
        write(&dir.join(FORWARD_ALIGN), &write_pharaoh_file(&a.forward))?;
        write(&dir.join(BACKWARD_ALIGN), &write_pharaoh_file(&a.backward))?;
        write(
            &dir.join(INTERSECTED_ALIGN),
            &write_pharaoh_file(&a.intersected),
        )?;
        write(&dir.join(SCORES), &scores)?;
        let count = |v: &[AlignmentLinks]| v.iter().map(AlignmentLinks::len).sum();
        Ok(AlignSummary {
            pairs: pairs.len(),
            forward_links: count(&a.forward),
            backward_links: count(&a.backward),
            intersected_links: count(&a.intersected),
        })
    })
}

/// Runs `command` through the shell once per batch, feeding the source
/// sentences one per line and reading CoNLL back.
pub fn run_tagger(
    command: &str,
    pairs: &[SentencePair],
    batch: usize,
) -> Result<Vec<LabeledSentence>> {
    let mut tagged = Vec::with_capacity(pairs.len());
    for chunk in pairs.chunks(batch.max(1)) {
        let mut input = String::new();
        for pair in chunk {
            input.push_str(&pair.src_tokens.join(" "));
            input.push('\n');
        }
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::External(format!("{command}: {e}")))?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let writer = std::thread::spawn(move || stdin.write_all(input.as_bytes()));
        let output = child
            .wait_with_output()
            .map_err(|e| Error::External(format!("{command}: {e}")))?;
        let _ = writer.join();
        if !output.status.success() {
            return Err(Error::External(format!(
                "{command}: exited with {}",
                output.status
            )));
        }
        let text = String::from_utf8(output.stdout)
            .map_err(|_| Error::External(format!("{command}: output is not UTF-8")))?;
        let sentences = parse_conll(&text)?.sentences;
        check_count("tagger output", sentences.len(), "the batch", chunk.len())?;
        for (pair, s) in chunk.iter().zip(sentences) {
            tagged.push(s.with_id(pair.id.clone())?);
        }
    }
    Ok(tagged)
}

fn load_english(config: &PipelineConfig, pairs: &[SentencePair]) -> Result<Vec<LabeledSentence>> {
    if let Some(path) = &config.english_conll {
        return read_conll_file(path);
    }
    if let Some(command) = &config.tagger_command {
        let tagged = run_tagger(command, pairs, config.tagger_batch)?;
        write(&config.workdir.join(TAGGED_ENGLISH), &write_conll(&tagged))?;
        return Ok(tagged);
    }
    Err(Error::Config(
        "no English annotations: set english_conll or tagger_command".into(),
    ))
}

/// Projects every English sentence onto its target side.
pub fn project(config: &PipelineConfig) -> Result<DropStats> {
    let _lock = WorkdirLock::acquire(&config.workdir)?;
    with_jobs(config.jobs, || {
        let pairs = load_pairs(config)?;
        let english = load_english(config, &pairs)?;
        check_count(
            "the English CoNLL",
            english.len(),
            "the bitext",
            pairs.len(),
        )?;
        let dir = &config.workdir;
        let forward = parse_pharaoh_file(&read(&dir.join(FORWARD_ALIGN))?, &pairs)?;
        let backward = parse_pharaoh_file(&read(&dir.join(BACKWARD_ALIGN))?, &pairs)?;
        let results = project_corpus(&pairs, &english, &forward, &backward, config.mode)?;
        write(
            &dir.join(PROJECTED),
            &write_conll(results.iter().map(|r| &r.labeled)),
        )?;
        write(&dir.join(DROPS), &write_drop_log(&results))?;
        Ok(DropStats::of(&results, &english))
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterSummary {
    pub input: usize,
    pub after_downsample: usize,
    pub after_top_fraction: usize,
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

/// Split statistics as a table and as `key=value` lines, with a total row.
pub fn split_stats(named: &[(&str, &[LabeledSentence])]) -> (String, String) {
    let mut rows: Vec<(&str, CorpusStats)> =
        named.iter().map(|(n, s)| (*n, corpus_stats(*s))).collect();
    let mut total = CorpusStats::default();
    for (_, s) in &rows {
        total += s;
    }
    let mut kv = String::new();
    for (name, s) in &rows {
        kv.push_str(&s.to_key_values(&format!("{name}.")));
    }
    kv.push_str(&total.to_key_values("total."));
    rows.push(("total", total));
    (StatsTable(&rows).to_string(), kv)
}

/// Filters the projected corpus and cuts it into train, dev and test.
pub fn filter_split(config: &PipelineConfig) -> Result<FilterSummary> {
    let _lock = WorkdirLock::acquire(&config.workdir)?;
    let dir = &config.workdir;
    let projected = read_conll_file(&dir.join(PROJECTED))?;
    let scores = parse_scores(&read(&dir.join(SCORES))?)?;
    let scored: Vec<ScoredSentence> = projected
        .into_iter()
        .map(|s| match scores.get(s.id()) {
            Some(&score) => Ok(ScoredSentence::new(s, score)),
            None => Err(Error::mismatch(s.id(), format!("no score in {SCORES}"))),
        })
        .collect::<Result<_>>()?;
    let input = scored.len();
    let sampled = downsample_no_entity(scored, config.filter.no_entity_rate, config.filter.seed);
    let after_downsample = sampled.len();
    let kept = filter_top_fraction(sampled, config.filter.keep_fraction);
    let after_top_fraction = kept.len();
    let splits = split_corpus(
        kept.into_iter().map(|s| s.sentence).collect(),
        config.split,
        config.seed,
    )?;
    for (name, part) in splits.named() {
        write(&dir.join(format!("{name}.conll")), &write_conll(part))?;
    }
    let (table, kv) = split_stats(&splits.named());
    write(&dir.join(STATS_TABLE), &table)?;
    write(&dir.join(STATS_KV), &kv)?;
    Ok(FilterSummary {
        input,
        after_downsample,
        after_top_fraction,
        train: splits.train.len(),
        dev: splits.dev.len(),
        test: splits.test.len(),
    })
}

/// Statistics table for CoNLL files, one row per file named by its stem.
pub fn stats(paths: &[PathBuf]) -> Result<String> {
    let corpora: Vec<(String, Vec<LabeledSentence>)> = paths
        .iter()
        .map(|p| {
            let name = p.file_stem().map_or_else(
                || p.display().to_string(),
                |s| s.to_string_lossy().into_owned(),
            );
            Ok((name, read_conll_file(p)?))
        })
        .collect::<Result<_>>()?;
    let named: Vec<(&str, &[LabeledSentence])> = corpora
        .iter()
        .map(|(n, c)| (n.as_str(), c.as_slice()))
        .collect();
    Ok(split_stats(&named).0)
}

/// Span scores of `pred_path` against `gold_path`.
pub fn eval(gold_path: &Path, pred_path: &Path) -> Result<EvalReport> {
    span_f1(&read_conll_file(gold_path)?, &read_conll_file(pred_path)?)
}
