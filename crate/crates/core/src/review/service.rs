use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::corpus_io::{write_conll, LabeledSentence, Tag};
use crate::error::{Error, Result};
use crate::evaluation::{cohens_kappa, AgreementReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// The projected tags are correct as shown.
    Accepted,
    /// The annotator changed the tags.
    Edited,
}

/// One annotator's final word on one sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewRecord {
    pub sentence_id: String,
    pub annotator_id: String,
    pub verdict: Verdict,
    pub final_tags: Vec<Tag>,
    pub timestamp: DateTime<Utc>,
}

/// A verdict as submitted by a client; the service stamps the time when the
/// client does not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub sentence_id: String,
    pub annotator_id: String,
    pub verdict: Verdict,
    pub final_tags: Vec<Tag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub sentence_id: String,
    pub tokens: Vec<String>,
    pub projected_tags: Vec<Tag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewBatch {
    pub annotator_id: String,
    pub sentences: Vec<Task>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub annotator_id: String,
    pub reviewed: usize,
    pub total: usize,
}

/// Which sentences each annotator is asked to review.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AssignmentPolicy {
    /// Every annotator reviews every sentence.
    #[default]
    Full,
    /// Sentences are dealt round-robin; every `shared_every`-th sentence (in
    /// id order) goes to all annotators so that agreement can be measured.
    Partial { shared_every: usize },
}

#[derive(Debug, Clone)]
pub struct ReviewConfig {
    /// Registered annotators, in priority order for adjudication.
    pub annotators: Vec<String>,
    pub adjudicator: Option<String>,
    pub log_path: PathBuf,
    pub assignment: AssignmentPolicy,
}

/// Gold export plus how conflicts were settled.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldExport {
    pub conll: String,
    pub sentences: usize,
    /// Sentences whose annotators disagreed.
    pub conflicts: usize,
    /// True when some conflict was settled by annotator order rather than
    /// by the adjudicator.
    pub fallback_used: bool,
}

/// Orders ids with embedded numbers numerically, so "2" < "10".
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    fn runs(s: &str) -> Vec<(bool, &str)> {
        let mut out = Vec::new();
        let mut start = 0;
        let bytes = s.as_bytes();
        for k in 1..=bytes.len() {
            if k == bytes.len() || bytes[k].is_ascii_digit() != bytes[start].is_ascii_digit() {
                out.push((bytes[start].is_ascii_digit(), &s[start..k]));
                start = k;
            }
        }
        out
    }
    let (ra, rb) = (runs(a), runs(b));
    for (x, y) in ra.iter().zip(&rb) {
        let ord = match (x.0, y.0) {
            (true, true) => {
                let (tx, ty) = (x.1.trim_start_matches('0'), y.1.trim_start_matches('0'));
                tx.len().cmp(&ty.len()).then_with(|| tx.cmp(ty))
            }
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            (false, false) => x.1.cmp(y.1),
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    ra.len().cmp(&rb.len()).then_with(|| a.cmp(b))
}

type RecordKey = (String, String);

#[derive(Debug, Clone, Default, PartialEq)]
struct Snapshot {
    records: HashMap<RecordKey, ReviewRecord>,
}

/// Human review of projected sentences.
///
/// Records are appended to a newline-delimited JSON log and synced before a
/// submission is acknowledged. Opening a service replays the log, so a
/// restarted service resumes exactly where the previous one stopped. Writes
/// are serialized; reads work on an immutable snapshot swapped in after each
/// write.
#[derive(Debug)]
pub struct ReviewService {
    sentences: Vec<LabeledSentence>,
    index: HashMap<String, usize>,
    annotators: Vec<String>,
    adjudicator: Option<String>,
    assignment: AssignmentPolicy,
    log: Mutex<File>,
    log_path: PathBuf,
    snapshot: RwLock<Arc<Snapshot>>,
}

impl ReviewService {
    pub fn open(mut corpus: Vec<LabeledSentence>, config: ReviewConfig) -> Result<Self> {
        if config.annotators.is_empty() {
            return Err(Error::Config("at least one annotator is required".into()));
        }
        for (k, a) in config.annotators.iter().enumerate() {
            if a.is_empty() || config.annotators[..k].contains(a) {
                return Err(Error::Config(format!(
                    "invalid or duplicate annotator {a:?}"
                )));
            }
        }
        if let Some(adj) = &config.adjudicator {
            if !config.annotators.contains(adj) {
                return Err(Error::Config(format!(
                    "adjudicator {adj:?} is not a registered annotator"
                )));
            }
        }
        if let AssignmentPolicy::Partial { shared_every: 0 } = config.assignment {
            return Err(Error::Config("shared_every must be positive".into()));
        }
        corpus.sort_by(|a, b| natural_cmp(a.id(), b.id()));
        let mut index = HashMap::with_capacity(corpus.len());
        for (k, s) in corpus.iter().enumerate() {
            if index.insert(s.id().to_string(), k).is_some() {
                return Err(Error::Review(format!("duplicate sentence id {}", s.id())));
            }
        }

        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&config.log_path)
            .map_err(|e| Error::io(&config.log_path, e))?;
        let mut service = Self {
            sentences: corpus,
            index,
            annotators: config.annotators,
            adjudicator: config.adjudicator,
            assignment: config.assignment,
            log: Mutex::new(
                file.try_clone()
                    .map_err(|e| Error::io(&config.log_path, e))?,
            ),
            log_path: config.log_path,
            snapshot: RwLock::new(Arc::new(Snapshot::default())),
        };
        let snapshot = service.replay(&mut file)?;
        service.snapshot = RwLock::new(Arc::new(snapshot));
        Ok(service)
    }

    fn replay(&self, file: &mut File) -> Result<Snapshot> {
        let io = |e| Error::io(&self.log_path, e);
        let mut text = String::new();
        file.seek(SeekFrom::Start(0)).map_err(io)?;
        file.read_to_string(&mut text).map_err(io)?;
        // A crash during an append can leave a partial last line; it was never
        // acknowledged, so drop it.
        let complete = text.rfind('\n').map_or(0, |k| k + 1);
        if complete < text.len() {
            file.set_len(complete as u64).map_err(io)?;
        }
        let mut snapshot = Snapshot::default();
        for (k, line) in text[..complete].lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: ReviewRecord = serde_json::from_str(line)
                .map_err(|e| Error::parse(k + 1, format!("review log: {e}")))?;
            self.validate(
                &record.sentence_id,
                &record.annotator_id,
                record.verdict,
                &record.final_tags,
            )
            .map_err(|e| Error::parse(k + 1, format!("review log: {e}")))?;
            snapshot.records.insert(
                (record.sentence_id.clone(), record.annotator_id.clone()),
                record,
            );
        }
        Ok(snapshot)
    }

    fn snapshot(&self) -> Arc<Snapshot> {
        self.snapshot.read().expect("snapshot lock").clone()
    }

    fn check_annotator(&self, annotator: &str) -> Result<()> {
        if self.annotators.iter().any(|a| a == annotator) {
            Ok(())
        } else {
            Err(Error::Review(format!("unknown annotator {annotator:?}")))
        }
    }

    fn is_assigned(&self, position: usize, annotator: &str) -> bool {
        match self.assignment {
            AssignmentPolicy::Full => true,
            AssignmentPolicy::Partial { shared_every } => {
                position.is_multiple_of(shared_every)
                    || self.annotators[position % self.annotators.len()] == annotator
            }
        }
    }

    fn validate(
        &self,
        sentence_id: &str,
        annotator: &str,
        verdict: Verdict,
        tags: &[Tag],
    ) -> Result<()> {
        self.check_annotator(annotator)?;
        let sentence = self
            .index
            .get(sentence_id)
            .map(|&k| &self.sentences[k])
            .ok_or_else(|| Error::Review(format!("unknown sentence {sentence_id:?}")))?;
        sentence
            .with_tags(tags.to_vec())
            .map_err(|e| Error::Review(e.to_string()))?;
        if verdict == Verdict::Accepted && tags != sentence.tags() {
            return Err(Error::Review(format!(
                "accepted verdict for {sentence_id} must repeat the projected tags"
            )));
        }
        Ok(())
    }

    pub fn annotators(&self) -> &[String] {
        &self.annotators
    }

    pub fn sentences(&self) -> &[LabeledSentence] {
        &self.sentences
    }

    /// The lowest-id assigned sentence this annotator has not reviewed yet.
    pub fn next_task(&self, annotator: &str) -> Result<Option<Task>> {
        Ok(self.pending(annotator, 1)?.into_iter().next())
    }

    /// Up to `size` pending tasks for one annotator.
    pub fn batch(&self, annotator: &str, size: usize) -> Result<ReviewBatch> {
        Ok(ReviewBatch {
            annotator_id: annotator.to_string(),
            sentences: self.pending(annotator, size)?,
        })
    }

    fn pending(&self, annotator: &str, limit: usize) -> Result<Vec<Task>> {
        self.check_annotator(annotator)?;
        let snap = self.snapshot();
        Ok(self
            .sentences
            .iter()
            .enumerate()
            .filter(|(k, s)| {
                self.is_assigned(*k, annotator)
                    && !snap
                        .records
                        .contains_key(&(s.id().to_string(), annotator.to_string()))
            })
            .take(limit)
            .map(|(_, s)| Task {
                sentence_id: s.id().to_string(),
                tokens: s.tokens().to_vec(),
                projected_tags: s.tags().to_vec(),
            })
            .collect())
    }

    /// Validates and durably appends a verdict. A later submission for the
    /// same sentence and annotator replaces the earlier one.
    pub fn submit_verdict(&self, submission: Submission) -> Result<ReviewRecord> {
        self.validate(
            &submission.sentence_id,
            &submission.annotator_id,
            submission.verdict,
            &submission.final_tags,
        )?;
        let record = ReviewRecord {
            sentence_id: submission.sentence_id,
            annotator_id: submission.annotator_id,
            verdict: submission.verdict,
            final_tags: submission.final_tags,
            timestamp: submission.timestamp.unwrap_or_else(Utc::now),
        };
        let mut line = serde_json::to_string(&record)?;
        line.push('\n');

        let mut log = self.log.lock().expect("log lock");
        log.write_all(line.as_bytes())
            .and_then(|_| log.sync_data())
            .map_err(|e| Error::io(&self.log_path, e))?;
        let mut next = (*self.snapshot()).clone();
        next.records.insert(
            (record.sentence_id.clone(), record.annotator_id.clone()),
            record.clone(),
        );
        *self.snapshot.write().expect("snapshot lock") = Arc::new(next);
        drop(log);
        Ok(record)
    }

    /// The current record of one annotator for one sentence.
    pub fn record(&self, sentence_id: &str, annotator: &str) -> Option<ReviewRecord> {
        self.snapshot()
            .records
            .get(&(sentence_id.to_string(), annotator.to_string()))
            .cloned()
    }

    /// All current records ordered by sentence id, then annotator order.
    pub fn records(&self) -> Vec<ReviewRecord> {
        let snap = self.snapshot();
        let mut out = Vec::new();
        for s in &self.sentences {
            for a in &self.annotators {
                if let Some(r) = snap.records.get(&(s.id().to_string(), a.clone())) {
                    out.push(r.clone());
                }
            }
        }
        out
    }

    /// Sentences as corrected by one annotator, in id order.
    pub fn annotator_corpus(&self, annotator: &str) -> Result<Vec<LabeledSentence>> {
        self.check_annotator(annotator)?;
        let snap = self.snapshot();
        self.sentences
            .iter()
            .filter_map(|s| {
                snap.records
                    .get(&(s.id().to_string(), annotator.to_string()))
                    .map(|r| s.with_tags(r.final_tags.clone()))
            })
            .collect()
    }

    pub fn progress(&self) -> Vec<Progress> {
        let snap = self.snapshot();
        self.annotators
            .iter()
            .map(|a| {
                let assigned: Vec<&LabeledSentence> = self
                    .sentences
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| self.is_assigned(*k, a))
                    .map(|(_, s)| s)
                    .collect();
                let reviewed = assigned
                    .iter()
                    .filter(|s| snap.records.contains_key(&(s.id().to_string(), a.clone())))
                    .count();
                Progress {
                    annotator_id: a.clone(),
                    reviewed,
                    total: assigned.len(),
                }
            })
            .collect()
    }

    /// Cohen's kappa between two annotators on the sentences both reviewed.
    pub fn iaa_report(&self, a: &str, b: &str) -> Result<AgreementReport> {
        self.check_annotator(a)?;
        self.check_annotator(b)?;
        let snap = self.snapshot();
        let (mut first, mut second) = (Vec::new(), Vec::new());
        for s in &self.sentences {
            let id = s.id().to_string();
            if let (Some(ra), Some(rb)) = (
                snap.records.get(&(id.clone(), a.to_string())),
                snap.records.get(&(id, b.to_string())),
            ) {
                first.push(s.with_tags(ra.final_tags.clone())?);
                second.push(s.with_tags(rb.final_tags.clone())?);
            }
        }
        if first.is_empty() {
            return Err(Error::Review("no co-annotated sentences".into()));
        }
        cohens_kappa(&first, &second)
    }

    /// Every reviewed sentence with its settled tags, in id order.
    ///
    /// The adjudicator's record wins when present; otherwise the first
    /// annotator in configuration order that reviewed the sentence.
    pub fn export_gold(&self) -> Result<GoldExport> {
        let snap = self.snapshot();
        let mut out = Vec::new();
        let (mut conflicts, mut fallback_used) = (0, false);
        for s in &self.sentences {
            let id = s.id().to_string();
            let records: Vec<&ReviewRecord> = self
                .annotators
                .iter()
                .filter_map(|a| snap.records.get(&(id.clone(), a.clone())))
                .collect();
            let Some(first) = records.first() else {
                continue;
            };
            let conflict = records.iter().any(|r| r.final_tags != first.final_tags);
            let chosen = self
                .adjudicator
                .as_ref()
                .and_then(|adj| records.iter().find(|r| &r.annotator_id == adj))
                .unwrap_or(first);
            if conflict {
                conflicts += 1;
                fallback_used |= Some(&chosen.annotator_id) != self.adjudicator.as_ref();
            }
            out.push(s.with_tags(chosen.final_tags.clone())?);
        }
        Ok(GoldExport {
            conll: write_conll(&out),
            sentences: out.len(),
            conflicts,
            fallback_used,
        })
    }

    pub fn log_path(&self) -> &Path {
        &self.log_path
    }
}

/// Loads a corpus and opens a service on it, for callers holding file paths.
pub fn open_from_files(corpus_path: &Path, config: ReviewConfig) -> Result<ReviewService> {
    let text = std::fs::read_to_string(corpus_path).map_err(|e| Error::io(corpus_path, e))?;
    let corpus = crate::corpus_io::parse_conll(&text)?.sentences;
    ReviewService::open(corpus, config)
}

/// Tag-level disagreement counts between two annotators, by sentence.
pub fn disagreements(service: &ReviewService, a: &str, b: &str) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for s in service.sentences() {
        if let (Some(ra), Some(rb)) = (service.record(s.id(), a), service.record(s.id(), b)) {
            let n = ra
                .final_tags
                .iter()
                .zip(&rb.final_tags)
                .filter(|(x, y)| x != y)
                .count();
            if n > 0 {
                out.insert(s.id().to_string(), n);
            }
        }
    }
    out
}
