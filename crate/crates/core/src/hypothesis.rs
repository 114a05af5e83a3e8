//! The memory-m acceptance test.
//!
//! The statistic compares the sample's empirical compressibility at memory m
//! against the evidence bits an independent measure or code assigns to the
//! exact sample: `(t - m) h*_m - evidence`. Small statistics are consistent
//! with memory at most m; the test rejects above `log2(1/alpha)`, which caps
//! the Type I error at `alpha` for every memory-m source regardless of the
//! measure supplied.

use serde::{Deserialize, Serialize};

use crate::codecs::{external_code_length, CodeLengthTable, ExternalCodec};
use crate::entropy::{empirical_entropy, max_markov_log_prob};
use crate::error::{Error, Result};
use crate::measures::{log_measure, Predictor};
use crate::sequence::Sequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Reject,
}

/// Full outcome of one test run; serializes to the report JSON schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub t: usize,
    pub m: usize,
    pub alpha: f64,
    pub h_star_m_bits: f64,
    pub evidence_bits: f64,
    pub statistic_bits: f64,
    pub threshold_bits: f64,
    pub decision: Decision,
    pub p_value_bound: f64,
}

/// The raw statistic in bits: `(t - m) h*_m - evidence_bits`.
pub fn test_statistic(seq: &Sequence, m: usize, evidence_bits: f64) -> Result<f64> {
    if !evidence_bits.is_finite() || evidence_bits < 0.0 {
        return Err(Error::Argument(format!(
            "evidence must be nonnegative and finite, got {evidence_bits}"
        )));
    }
    Ok(-max_markov_log_prob(seq, m)? - evidence_bits)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Argument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// Accept iff the statistic is at most `log2(1/alpha)`; the boundary
/// accepts.
pub fn decide(statistic: f64, alpha: f64) -> Result<Decision> {
    check_alpha(alpha)?;
    if statistic <= threshold(alpha) {
        Ok(Decision::Accept)
    } else {
        Ok(Decision::Reject)
    }
}

pub fn threshold(alpha: f64) -> f64 {
    (1.0 / alpha).log2()
}

/// Smallest level at which the observed statistic rejects: `min(1, 2^-s)`.
/// Rejecting whenever this bound is below alpha reproduces [`decide`].
pub fn p_value_bound(statistic: f64) -> f64 {
    (-statistic).exp2().min(1.0)
}

fn outcome(seq: &Sequence, m: usize, evidence_bits: f64, alpha: f64) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    let h_star = empirical_entropy(seq, m)?.bits_per_symbol();
    let statistic = test_statistic(seq, m, evidence_bits)?;
    Ok(TestOutcome {
        t: seq.len(),
        m,
        alpha,
        h_star_m_bits: h_star,
        evidence_bits,
        statistic_bits: statistic,
        threshold_bits: threshold(alpha),
        decision: decide(statistic, alpha)?,
        p_value_bound: p_value_bound(statistic),
    })
}

/// Run the test with a sequential measure as the evidence source: evidence
/// is the measure's exact log-loss on the sample.
pub fn run_predictor_test(
    seq: &Sequence,
    m: usize,
    measure: &dyn Predictor,
    alpha: f64,
) -> Result<TestOutcome> {
    let evidence_bits = -log_measure(measure, seq)?;
    outcome(seq, m, evidence_bits, alpha)
}

/// Evidence taken from code lengths instead of a measure.
#[derive(Debug, Clone, Copy)]
pub enum CodeEvidence<'a> {
    External(&'a ExternalCodec),
    Table(&'a CodeLengthTable),
}

/// Run the test with a uniquely decodable code as the evidence source:
/// evidence is the code length of the sample in bits.
pub fn run_code_test(
    seq: &Sequence,
    m: usize,
    code: CodeEvidence<'_>,
    alpha: f64,
) -> Result<TestOutcome> {
    let evidence_bits = match code {
        CodeEvidence::External(codec) => external_code_length(codec, seq)? as f64,
        CodeEvidence::Table(table) => {
            if table.block_len() != seq.len() {
                return Err(Error::Argument(format!(
                    "code table block length {} does not match sequence length {}",
                    table.block_len(),
                    seq.len()
                )));
            }
            table.length_of(seq.indices()).ok_or_else(|| {
                Error::Argument("sequence is not covered by the code table".into())
            })? as f64
        }
    };
    outcome(seq, m, evidence_bits, alpha)
}
