//! Subword segmentation toolkit.
//!
//! The crate bundles four subword segmentation schemes used for low-resource
//! machine translation experiments, the metrics used to score them, and the
//! statistics used to compare scores across runs:
//!
//! - [`bpe`]: byte-pair encoding at the token level (`@@` continuation
//!   markers) and at the sentence level (`▁` word-boundary markers),
//! - [`morph`]: an MDL lexicon segmenter with corpusweight tuning against
//!   gold segmentations and an optional vocabulary budget,
//! - [`hybrid`]: stem+suffix analyses combined with a stem-side BPE under a
//!   total vocabulary budget (`al@@ ge@@ br@@ a +ic`),
//! - [`metrics`]: corpus-level lowercased BLEU and CHRF3,
//! - [`stats`]: Kruskal-Wallis with Dunn's post-hoc test, and a Bayesian
//!   linear model (task effect + method effect + task noise) fitted by
//!   Metropolis-within-Gibbs.
//!
//! [`corpus`] holds the shared input formats (tokenized text, frequency
//! tables, gold segmentations, stem+suffix analysis tables) and [`cli`] the
//! command-line driver.

pub mod bpe;
#[cfg(feature = "cli")]
pub mod cli;
pub mod corpus;
mod error;
pub mod hybrid;
pub mod metrics;
pub mod morph;
pub mod stats;

pub use error::{Error, Result};
