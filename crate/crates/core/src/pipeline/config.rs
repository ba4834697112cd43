use std::path::{Path, PathBuf};

use crate::aligner::EmConfig;
use crate::error::{Error, Result};
use crate::filtering::{FilterConfig, SplitRatios};
use crate::projection::ProjectionMode;

/// Where a directional alignment comes from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum AlignmentSource {
    /// Trained with the built-in IBM Model 1 aligner.
    #[default]
    Builtin,
    /// A Pharaoh file in `(source, target)` orientation from an external aligner.
    File(PathBuf),
}

/// Everything the pipeline commands need.
///
/// Read from a flat `key = value` file (`#` starts a comment) whose keys are
/// the names listed in [`PipelineConfig::KEYS`]; the command-line flag of the
/// same name overrides a file value.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub workdir: PathBuf,
    /// Tab-separated bitext, as an alternative to `src` + `tgt`.
    pub bitext: Option<PathBuf>,
    pub src: Option<PathBuf>,
    pub tgt: Option<PathBuf>,
    /// Pre-tagged English side, one CoNLL sentence per pair.
    pub english_conll: Option<PathBuf>,
    /// Shell command that reads English sentences (one per line) on stdin
    /// and writes CoNLL on stdout. Used when `english_conll` is absent.
    pub tagger_command: Option<String>,
    pub tagger_batch: usize,
    pub forward_alignment: AlignmentSource,
    pub backward_alignment: AlignmentSource,
    pub em: EmConfig,
    pub filter: FilterConfig,
    pub mode: ProjectionMode,
    pub split: SplitRatios,
    pub seed: u64,
    /// Worker threads; `None` lets rayon decide.
    pub jobs: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            workdir: PathBuf::from("."),
            bitext: None,
            src: None,
            tgt: None,
            english_conll: None,
            tagger_command: None,
            tagger_batch: 1000,
            forward_alignment: AlignmentSource::Builtin,
            backward_alignment: AlignmentSource::Builtin,
            em: EmConfig::default(),
            filter: FilterConfig::default(),
            mode: ProjectionMode::default(),
            split: SplitRatios::default(),
            seed: 0,
            jobs: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!(
            "{key}: expected true or false, got {value:?}"
        ))),
    }
}

impl PipelineConfig {
    pub const KEYS: &'static [&'static str] = &[
        "workdir",
        "bitext",
        "src",
        "tgt",
        "english_conll",
        "tagger_command",
        "tagger_batch",
        "forward_alignment",
        "backward_alignment",
        "em_iterations",
        "prob_floor",
        "use_null",
        "keep_fraction",
        "no_entity_rate",
        "mode",
        "split",
        "seed",
        "jobs",
    ];

    /// Parses `key = value` lines. Relative paths resolve against `base`.
    pub fn parse_file_text(text: &str, base: &Path) -> Result<Vec<(String, String, PathBuf)>> {
        let mut out = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("config line {}: expected key = value", k + 1))
            })?;
            out.push((
                key.trim().to_string(),
                value.trim().to_string(),
                base.to_path_buf(),
            ));
        }
        Ok(out)
    }

    /// Builds a config from an optional file plus overrides. Each override
    /// is `(key, value)` with paths relative to the current directory; flag
    /// spellings with `-` are accepted for `_`.
    pub fn load(file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut entries = Vec::new();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            entries.extend(Self::parse_file_text(&text, &base)?);
        }
        entries.extend(
            overrides
                .iter()
                .map(|(k, v)| (k.clone(), v.clone(), PathBuf::new())),
        );
        let mut config = Self::default();
        for (key, value, base) in entries {
            config.set(&key.replace('-', "_"), &value, &base)?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> Result<()> {
        let path = || base.join(value);
        match key {
            "workdir" => self.workdir = path(),
            "bitext" => self.bitext = Some(path()),
            "src" => self.src = Some(path()),
            "tgt" => self.tgt = Some(path()),
            "english_conll" => self.english_conll = Some(path()),
            "tagger_command" => self.tagger_command = Some(value.to_string()),
            "tagger_batch" => self.tagger_batch = parse_num(key, value)?,
            "forward_alignment" | "backward_alignment" => {
                let source = if value == "builtin" {
                    AlignmentSource::Builtin
                } else {
                    AlignmentSource::File(path())
                };
                if key == "forward_alignment" {
                    self.forward_alignment = source;
                } else {
                    self.backward_alignment = source;
                }
            }
            "em_iterations" => self.em.iterations = parse_num(key, value)?,
            "prob_floor" => self.em.prob_floor = parse_num(key, value)?,
            "use_null" => self.em.use_null = parse_bool(key, value)?,
            "keep_fraction" => self.filter.keep_fraction = parse_num(key, value)?,
            "no_entity_rate" => self.filter.no_entity_rate = parse_num(key, value)?,
            "mode" => self.mode = value.parse()?,
            "split" => {
                let parts: Vec<f64> = value
                    .split(['/', ','])
                    .map(|p| parse_num(key, p.trim()))
                    .collect::<Result<_>>()?;
                let [train, dev, test] = parts[..] else {
                    return Err(Error::Config(format!(
                        "split: expected train,dev,test, got {value:?}"
                    )));
                };
                self.split = SplitRatios { train, dev, test };
            }
            "seed" => {
                self.seed = parse_num(key, value)?;
                self.filter.seed = self.seed;
            }
            "jobs" => {
                let jobs: usize = parse_num(key, value)?;
                self.jobs = (jobs > 0).then_some(jobs);
            }
            other => return Err(Error::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.em.validate()?;
        self.filter.validate()?;
        self.split.validate()?;
        if self.tagger_batch == 0 {
            return Err(Error::Config("tagger_batch must be positive".into()));
        }
        if self.bitext.is_some() && (self.src.is_some() || self.tgt.is_some()) {
            return Err(Error::Config(
                "give either bitext or src + tgt, not both".into(),
            ));
        }
        Ok(())
    }
}
