//! Core library for annotating translation shifts in sentence-aligned
//! parallel corpora.
//!
//! The crate is organised bottom-up:
//!
//! * [`corpus`] parses bilingual corpora and sentence alignments.
//! * [`extraction`] selects direction-verified sentence pairs.
//! * [`pas`] holds the monolingual predicate-argument layer.
//! * [`shift`] holds the shift-tag taxonomy and the alignment rule engine.
//! * [`project`] ties everything into a revisioned, canonical project file.
//! * [`report`] counts shifts per group and exports CSV.
//!
//! Batch operations (extraction, whole-project validation, shift counting)
//! take an [`Execution`] strategy. With the default `parallel` feature the
//! parallel strategy runs on rayon; without it every strategy runs
//! sequentially.

pub mod corpus;
pub mod extraction;
pub mod fixtures;
pub mod par;
pub mod pas;
pub mod project;
pub mod report;
pub mod shift;
#[cfg(feature = "testkit")]
pub mod testkit;

pub use par::Execution;
