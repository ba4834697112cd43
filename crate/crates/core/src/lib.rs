//! Mining named-entity training data for low-resource languages.
//!
//! English entity annotations are projected onto the target side of a
//! parallel corpus through statistical word alignments. The crate covers the
//! whole path from parallel text to train/dev/test files:
//!
//! * [`corpus_io`]: CoNLL, parallel text and Pharaoh alignment formats.
//! * [`aligner`]: IBM Model 1 EM training, Viterbi links, intersection and
//!   alignment quality scores.
//! * [`projection`]: whole-entity span projection over forward or
//!   intersected mappings.
//! * [`filtering`]: entity-free downsampling, top-fraction selection by
//!   quality score, corpus statistics and splitting.
//! * [`evaluation`]: exact-match span F1 and Cohen's kappa.
//! * [`pipeline`]: file-level commands behind the `nermine` binary.
//! * [`review`]: an annotation review service with an append-only log and
//!   an HTTP API.
//! * [`synthetic`]: generated parallel corpora with known answers.

pub mod aligner;
pub mod corpus_io;
mod error;
pub mod evaluation;
pub mod filtering;
pub mod pipeline;
pub mod projection;
pub mod review;
pub mod synthetic;

pub use error::{Error, Result};
