//! Monte Carlo estimation of test error rates.
//!
//! Experiments are described by a TOML spec naming a hypothesis side, a
//! source, the test configuration and a grid of sample lengths. Trials are
//! keyed by `(base seed, trial index)` so the same trial always sees the
//! same sample path regardless of worker count or grid position, making
//! reports byte-identical across runs and thread counts.
//!
//! Trials are embarrassingly parallel; with the `parallel` feature they run
//! on a rayon pool (capped by `ENTROPYTEST_THREADS`), otherwise a sequential
//! fallback with identical semantics is used.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, Binomial, ContinuousCDF, DiscreteCDF};

use crate::codecs::ExternalCodec;
use crate::error::{Error, Result};
use crate::hypothesis::{run_code_test, run_predictor_test, CodeEvidence, Decision};
use crate::measures::{MeasureSpec, Predictor};
use crate::rng::SeededRng;
use crate::sources::{SourceModel, SourceSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hypothesis {
    H0,
    H1,
}

/// One Monte Carlo experiment: source, test configuration, length grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub hypothesis: Hypothesis,
    /// tested memory m
    pub order: usize,
    pub alpha: f64,
    /// measure grammar (`laplace`, `kt:<k>`, `mixture[:K]`, `uniform`) or
    /// `code:<command template>`
    pub measure: String,
    /// sample length grid, strictly increasing
    pub lengths: Vec<usize>,
    /// trials per grid point
    pub trials: usize,
    pub seed: u64,
    pub source: SourceSpec,
}

impl ExperimentSpec {
    pub fn parse_toml(text: &str) -> Result<Self> {
        let spec: ExperimentSpec =
            toml::from_str(text).map_err(|e| Error::Spec(format!("experiment spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::Spec("trials must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Spec(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if self.lengths.is_empty() {
            return Err(Error::Spec("length grid is empty".into()));
        }
        if self.lengths.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Spec("length grid must be strictly increasing".into()));
        }
        if let Some(&t) = self.lengths.iter().find(|&&t| t <= self.order) {
            return Err(Error::Spec(format!(
                "length {t} does not exceed the tested order {}",
                self.order
            )));
        }
        Ok(())
    }
}

/// Rejection tally for one grid point, with exact binomial 95% bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub t: usize,
    pub trials: usize,
    pub rejections: u64,
    pub rejection_rate: f64,
    pub lo95: f64,
    pub hi95: f64,
}

/// Aggregated experiment report. Wall time deliberately stays out of the
/// serialized form so identical (spec, seed) runs serialize byte-identical.
#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloReport {
    pub spec: ExperimentSpec,
    pub cells: Vec<CellReport>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl MonteCarloReport {
    /// Plot-ready CSV, one row per grid point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,trials,rejections,rate,lo95,hi95\n");
        for c in &self.cells {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                c.t, c.trials, c.rejections, c.rejection_rate, c.lo95, c.hi95
            )
            .expect("writing to string");
        }
        out
    }
}

/// Exact (Clopper-Pearson) two-sided 95% interval for a binomial proportion.
pub fn clopper_pearson_95(successes: u64, trials: u64) -> (f64, f64) {
    let x = successes as f64;
    let n = trials as f64;
    let lo = if successes == 0 {
        0.0
    } else {
        Beta::new(x, n - x + 1.0).expect("valid beta").inverse_cdf(0.025)
    };
    let hi = if successes == trials {
        1.0
    } else {
        Beta::new(x + 1.0, n - x).expect("valid beta").inverse_cdf(0.975)
    };
    (lo, hi)
}

/// Upper `q`-quantile of Binomial(trials, p); the rejection-count ceiling
/// used when auditing a nominal level.
pub fn binomial_upper_quantile(trials: u64, p: f64, q: f64) -> u64 {
    Binomial::new(p, trials).expect("valid binomial").inverse_cdf(q)
}

/// Evidence prototype shared by every trial of an experiment.
enum Evidence {
    Measure(Box<dyn Predictor>),
    Codec(ExternalCodec),
}

fn build_evidence(measure: &str, n: usize, m: usize) -> Result<Evidence> {
    if measure.starts_with("code:") {
        Ok(Evidence::Codec(ExternalCodec::parse_spec(measure)?))
    } else {
        Ok(Evidence::Measure(MeasureSpec::parse(measure)?.build_for_test(n, m)))
    }
}

fn run_trial(
    model: &SourceModel,
    t: usize,
    m: usize,
    alpha: f64,
    evidence: &Evidence,
    rng: SeededRng,
) -> Result<bool> {
    let sample = model.sample(t, rng)?;
    let outcome = match evidence {
        Evidence::Measure(proto) => run_predictor_test(&sample, m, proto.as_ref(), alpha)?,
        Evidence::Codec(codec) => run_code_test(&sample, m, CodeEvidence::External(codec), alpha)?,
    };
    Ok(outcome.decision == Decision::Reject)
}

/// Run all trials of one grid point sequentially. Trial `i` draws from
/// stream `i` of the base seed.
pub fn run_cell_sequential(
    model: &SourceModel,
    spec: &ExperimentSpec,
    t: usize,
) -> Result<CellReport> {
    let evidence = build_evidence(&spec.measure, model.alphabet().size(), spec.order)?;
    let decisions: Result<Vec<bool>> = (0..spec.trials)
        .map(|i| run_trial(model, t, spec.order, spec.alpha, &evidence, SeededRng::new(spec.seed, i as u64)))
        .collect();
    tally(spec, t, decisions?)
}

/// Parallel twin of [`run_cell_sequential`]; identical output by
/// construction (per-trial streams, order-independent tally).
#[cfg(feature = "parallel")]
pub fn run_cell_parallel(
    model: &SourceModel,
    spec: &ExperimentSpec,
    t: usize,
) -> Result<CellReport> {
    use rayon::prelude::*;
    let evidence = build_evidence(&spec.measure, model.alphabet().size(), spec.order)?;
    let decisions: Result<Vec<bool>> = (0..spec.trials)
        .into_par_iter()
        .map(|i| run_trial(model, t, spec.order, spec.alpha, &evidence, SeededRng::new(spec.seed, i as u64)))
        .collect();
    tally(spec, t, decisions?)
}

fn run_cell(model: &SourceModel, spec: &ExperimentSpec, t: usize) -> Result<CellReport> {
    #[cfg(feature = "parallel")]
    {
        run_cell_parallel(model, spec, t)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_cell_sequential(model, spec, t)
    }
}

fn tally(spec: &ExperimentSpec, t: usize, decisions: Vec<bool>) -> Result<CellReport> {
    let rejections = decisions.iter().filter(|&&d| d).count() as u64;
    let (lo95, hi95) = clopper_pearson_95(rejections, spec.trials as u64);
    Ok(CellReport {
        t,
        trials: spec.trials,
        rejections,
        rejection_rate: rejections as f64 / spec.trials as f64,
        lo95,
        hi95,
    })
}

/// Run a closure under the `ENTROPYTEST_THREADS` parallelism cap.
pub fn with_thread_cap<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        let cap = std::env::var("ENTROPYTEST_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&n| n >= 1);
        match cap {
            Some(threads) => rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .expect("thread pool")
                .install(f),
            None => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        f()
    }
}

fn run_grid(spec: &ExperimentSpec, model: &SourceModel) -> Result<MonteCarloReport> {
    let start = Instant::now();
    let cells: Result<Vec<CellReport>> = with_thread_cap(|| {
        spec.lengths.iter().map(|&t| run_cell(model, spec, t)).collect()
    });
    Ok(MonteCarloReport { spec: spec.clone(), cells: cells?, wall_time: start.elapsed() })
}

/// Estimate the false-rejection rate under a memory-m null source. The
/// source's declared memory must not exceed the tested order.
pub fn estimate_type1(spec: &ExperimentSpec) -> Result<MonteCarloReport> {
    spec.validate()?;
    if spec.hypothesis != Hypothesis::H0 {
        return Err(Error::Spec("type I estimation needs hypothesis = \"h0\"".into()));
    }
    let model = spec.source.build()?;
    match model.declared_order() {
        Some(k) if k <= spec.order => {}
        Some(k) => {
            return Err(Error::Spec(format!(
                "null source has memory {k} > tested order {}",
                spec.order
            )))
        }
        None => {
            return Err(Error::Spec(
                "hidden-markov sources have no finite declared memory; not a null source".into(),
            ))
        }
    }
    run_grid(spec, &model)
}

/// Estimate the rejection rate under an alternative source: memory strictly
/// above the tested order, or hidden-Markov.
pub fn estimate_power(spec: &ExperimentSpec) -> Result<MonteCarloReport> {
    spec.validate()?;
    if spec.hypothesis != Hypothesis::H1 {
        return Err(Error::Spec("power estimation needs hypothesis = \"h1\"".into()));
    }
    let model = spec.source.build()?;
    match model.declared_order() {
        None => {}
        Some(k) if k > spec.order => {}
        Some(k) if k == spec.order => {
            return Err(Error::Spec(format!(
                "alternative source has memory exactly {k}; it satisfies the null"
            )))
        }
        Some(k) => {
            return Err(Error::Spec(format!(
                "alternative source has memory {k} <= tested order {}; it satisfies the null",
                spec.order
            )))
        }
    }
    run_grid(spec, &model)
}

/// Dispatch on the spec's hypothesis side.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<MonteCarloReport> {
    match spec.hypothesis {
        Hypothesis::H0 => estimate_type1(spec),
        Hypothesis::H1 => estimate_power(spec),
    }
}
