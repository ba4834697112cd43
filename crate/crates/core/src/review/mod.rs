//! Human verification of projected sentences.
//!
//! [`ReviewService`] hands out sentences, records verdicts in an append-only
//! log, computes inter-annotator agreement and exports the settled gold
//! corpus. [`http`] exposes it over HTTP:
//!
//! | method | path | response |
//! |---|---|---|
//! | GET | `/api/tasks/next?annotator=ID` | task JSON, or 204 when done |
//! | POST | `/api/verdicts` | submission JSON in; 201 + record, or 422 |
//! | GET | `/api/iaa?a=ID1&b=ID2` | agreement JSON |
//! | GET | `/api/export` | CoNLL text |
//! | GET | `/api/progress` | per-annotator reviewed/total |
//!
//! JSON field names follow [`Task`], [`Submission`], [`ReviewRecord`] and
//! [`Progress`]; tags are IOB strings such as `"B-PER"`.

pub mod http;
mod service;

pub use service::{
    disagreements, natural_cmp, open_from_files, AssignmentPolicy, GoldExport, Progress,
    ReviewBatch, ReviewConfig, ReviewRecord, ReviewService, Submission, Task, Verdict,
};
