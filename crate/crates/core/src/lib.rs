//! Serial-independence and Markov-order testing for finite-alphabet time
//! series, built on universal sequential measures and data-compression
//! evidence.
//!
//! The test at memory m compares the empirical compressibility of a sample,
//! `(t - m) h*_m`, against the bits an independently chosen sequential
//! measure or uniquely decodable code spends on the exact sample. Evidence
//! far below the empirical bound is only possible when the source carries
//! more structure than any memory-m law, so rejection at the `log2(1/alpha)`
//! threshold keeps the false-rejection rate at most alpha for every null
//! source, while universal measures drive the miss rate to zero on
//! alternatives.
//!
//! Crate layout:
//! - [`sequence`], [`counts`]: alphabets, sequences, overlapping word counts
//! - [`entropy`]: empirical and exact conditional entropies
//! - [`measures`]: sequential measures and prediction-error metrics
//! - [`codecs`]: Kraft checks, code-induced measures, external compressors
//! - [`sources`]: exact generative models and their spec files
//! - [`hypothesis`]: the test statistic, decision and p-value bound
//! - [`mc`]: Monte Carlo error-rate estimation (rayon-parallel trials with a
//!   sequential fallback behind the `parallel` feature)
//! - [`verify`]: cross-module invariant suite

pub mod codecs;
pub mod counts;
pub mod entropy;
pub mod error;
pub mod hypothesis;
pub mod mc;
pub mod measures;
pub mod rng;
pub mod sequence;
pub mod sources;
pub mod verify;

pub use error::{Error, Result};
pub use hypothesis::{Decision, TestOutcome};
pub use sequence::{parse_sequence, Alphabet, Sequence};
