//! Cross-module invariant suite.
//!
//! Each group exercises one oracle-backed guarantee at a pinned tolerance
//! and reports a machine-readable pass/fail summary. Groups are
//! deterministic given a seed; randomized inputs are drawn from dedicated
//! streams so reruns audit identical cases.

use rand::Rng;
use serde::Serialize;

use crate::codecs::{code_to_measure, kraft_sum, CodeLengthTable};
use crate::entropy::max_markov_log_prob;
use crate::error::{Error, Result};
use crate::measures::{
    expected_step_error, log_measure, KtPredictor, LaplacePredictor, MeasureSpec, Predictor,
};
use crate::rng::SeededRng;
use crate::sequence::{Alphabet, Sequence};
use crate::sources::{random_bernoulli, random_markov, SourceModel};
use std::sync::Arc;

#[cfg(feature = "parallel")]
fn map_collect<T: Send, R: Send>(items: Vec<T>, f: impl Fn(T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_collect<T, R>(items: Vec<T>, f: impl Fn(T) -> R) -> Vec<R> {
    items.into_iter().map(f).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyGroup {
    Kraft,
    Claim1,
    LaplaceBound,
    AppendixDomination,
    Normalization,
}

impl VerifyGroup {
    pub fn all() -> Vec<VerifyGroup> {
        vec![
            VerifyGroup::Kraft,
            VerifyGroup::Claim1,
            VerifyGroup::LaplaceBound,
            VerifyGroup::AppendixDomination,
            VerifyGroup::Normalization,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            VerifyGroup::Kraft => "kraft",
            VerifyGroup::Claim1 => "claim1",
            VerifyGroup::LaplaceBound => "laplace-bound",
            VerifyGroup::AppendixDomination => "appendix-domination",
            VerifyGroup::Normalization => "normalization",
        }
    }
}

impl std::str::FromStr for VerifyGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kraft" => Ok(VerifyGroup::Kraft),
            "claim1" => Ok(VerifyGroup::Claim1),
            "laplace-bound" => Ok(VerifyGroup::LaplaceBound),
            "appendix-domination" => Ok(VerifyGroup::AppendixDomination),
            "normalization" => Ok(VerifyGroup::Normalization),
            other => Err(Error::Argument(format!(
                "unknown verify group {other:?} (expected one of: kraft, claim1, \
                 laplace-bound, appendix-domination, normalization)"
            ))),
        }
    }
}

/// Outcome of one invariant group.
#[derive(Debug, Clone, Serialize)]
pub struct GroupReport {
    pub group: &'static str,
    pub passed: bool,
    pub checks: u64,
    pub detail: String,
}

/// Run one group with randomized inputs derived from `seed`.
pub fn run_group(group: VerifyGroup, seed: u64) -> GroupReport {
    match group {
        VerifyGroup::Kraft => kraft_group(seed),
        VerifyGroup::Claim1 => claim1_group(seed),
        VerifyGroup::LaplaceBound => laplace_bound_group(seed),
        VerifyGroup::AppendixDomination => appendix_domination_group(seed),
        VerifyGroup::Normalization => normalization_group(),
    }
}

/// Run the selected groups (all of them when empty).
pub fn verify_suite(groups: &[VerifyGroup], seed: u64) -> Vec<GroupReport> {
    let groups = if groups.is_empty() { VerifyGroup::all() } else { groups.to_vec() };
    groups.into_iter().map(|g| run_group(g, seed)).collect()
}

fn word_list(n: usize, len: usize) -> Vec<Vec<u8>> {
    (0..n.pow(len as u32))
        .map(|mut code| {
            let mut w = vec![0u8; len];
            for slot in w.iter_mut().rev() {
                *slot = (code % n) as u8;
                code /= n;
            }
            w
        })
        .collect()
}

/// Shannon-length table for a random distribution: Kraft-feasible by
/// construction since 2^(-ceil(-log2 q)) <= q.
fn random_shannon_table(n: usize, block: usize, rng: &mut impl Rng) -> CodeLengthTable {
    let words = word_list(n, block);
    let weights: Vec<f64> = (0..words.len()).map(|_| rng.gen::<f64>().max(1e-12)).collect();
    let total: f64 = weights.iter().sum();
    let entries = words
        .into_iter()
        .zip(weights)
        .map(|(w, wt)| {
            let q = wt / total;
            (w, (-q.log2()).ceil().max(1.0) as u32)
        })
        .collect::<Vec<_>>();
    CodeLengthTable::new(n, block, entries).expect("generated table is well-formed")
}

fn kraft_group(seed: u64) -> GroupReport {
    let mut checks = 0u64;
    let mut max_kraft = f64::NEG_INFINITY;
    let mut failures = Vec::new();

    // Worked tables with known sums: a complete prefix code, a fixed-width
    // code, and the two-word table whose code is famously not uniquely
    // decodable despite passing the necessary condition.
    let fixed: [(CodeLengthTable, f64); 3] = [
        (
            CodeLengthTable::new(3, 1, vec![(vec![0], 1u32), (vec![1], 2), (vec![2], 2)]).unwrap(),
            1.0,
        ),
        (
            CodeLengthTable::new(3, 1, vec![(vec![0], 2u32), (vec![1], 2), (vec![2], 2)]).unwrap(),
            0.75,
        ),
        (
            CodeLengthTable::new(2, 1, vec![(vec![0], 1u32), (vec![1], 2)]).unwrap(),
            0.75,
        ),
    ];
    for (table, expected) in &fixed {
        checks += 1;
        let s = kraft_sum(table);
        max_kraft = max_kraft.max(s);
        if (s - expected).abs() > 1e-12 {
            failures.push(format!("worked table: kraft {s} != {expected}"));
        }
    }

    let mut rng = SeededRng::new(seed, 100).rng();
    for _ in 0..200 {
        let n = rng.gen_range(2usize..=3);
        let block = rng.gen_range(1usize..=3);
        let table = random_shannon_table(n, block, &mut rng);
        checks += 1;
        let s = kraft_sum(&table);
        max_kraft = max_kraft.max(s);
        if s > 1.0 + 1e-12 {
            failures.push(format!("random table n={n} block={block}: kraft {s} > 1"));
        }
    }

    GroupReport {
        group: VerifyGroup::Kraft.name(),
        passed: failures.is_empty(),
        checks,
        detail: if failures.is_empty() {
            format!("tables={checks} max_kraft={max_kraft:.12}")
        } else {
            failures.join("; ")
        },
    }
}

fn claim1_group(seed: u64) -> GroupReport {
    let mut rng = SeededRng::new(seed, 101).rng();
    let mut checks = 0u64;
    let mut max_excess = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    for _ in 0..50 {
        let n = rng.gen_range(2usize..=3);
        let block = rng.gen_range(1usize..=3);
        let table = random_shannon_table(n, block, &mut rng);
        let measure = match code_to_measure(&table) {
            Ok(m) => m,
            Err(e) => {
                failures.push(format!("table rejected: {e}"));
                continue;
            }
        };
        for (word, len) in table.words() {
            checks += 1;
            let excess = -measure.log2_prob(word) - len as f64;
            max_excess = max_excess.max(excess);
            if excess > 1e-12 {
                failures.push(format!("word {word:?}: -log2 mu exceeds length by {excess}"));
            }
        }
    }
    GroupReport {
        group: VerifyGroup::Claim1.name(),
        passed: failures.is_empty(),
        checks,
        detail: if failures.is_empty() {
            format!("words={checks} max_excess={max_excess:.3e}")
        } else {
            failures.join("; ")
        },
    }
}

fn laplace_bound_group(seed: u64) -> GroupReport {
    // 100 randomized i.i.d. sources, half binary and half ternary, each
    // checked at every history length up to 10. The (n-1)/(t+1) ceiling is a
    // natural-log statement (in bits it already fails on degenerate sources
    // at t = 0, where the step error is exactly 1 bit = 0.693 nats), so the
    // comparison converts the step error to nats.
    let mut rng = SeededRng::new(seed, 102).rng();
    let mut sources = Vec::new();
    for n in [2usize, 3] {
        let alphabet = Arc::new(Alphabet::new(b"abc"[..n].to_vec()).unwrap());
        for _ in 0..50 {
            sources.push(SourceModel::Bernoulli(random_bernoulli(Arc::clone(&alphabet), &mut rng)));
        }
    }
    let results = map_collect(sources, |src| {
        let n = src.alphabet().size();
        let laplace = LaplacePredictor::new(n);
        let mut max_ratio = f64::NEG_INFINITY;
        let mut checks = 0u64;
        for t in 0..=10usize {
            let err_bits = expected_step_error(&src, &laplace, t).expect("within guard");
            let bound = (n - 1) as f64 / (t + 1) as f64;
            max_ratio = max_ratio.max(err_bits * std::f64::consts::LN_2 / bound);
            checks += 1;
        }
        (checks, max_ratio)
    });
    let checks: u64 = results.iter().map(|(c, _)| c).sum();
    let max_ratio = results.iter().map(|&(_, r)| r).fold(f64::NEG_INFINITY, f64::max);
    GroupReport {
        group: VerifyGroup::LaplaceBound.name(),
        passed: max_ratio < 1.0,
        checks,
        detail: format!("source_t_pairs={checks} max_nats_ratio_to_bound={max_ratio:.6}"),
    }
}

fn appendix_domination_group(seed: u64) -> GroupReport {
    // For each tested memory m: randomized Markov sources of every order up
    // to m, checked against every binary sample of length up to 10.
    let binary = Arc::new(Alphabet::binary());
    let mut rng = SeededRng::new(seed, 103).rng();
    let mut jobs = Vec::new();
    for m in 0..=2usize {
        let mut sources = Vec::new();
        for i in 0..100 {
            let order = i % (m + 1);
            let src = random_markov(Arc::clone(&binary), order, 0.02, &mut rng)
                .expect("floored chains are ergodic");
            sources.push(SourceModel::Markov(src));
        }
        jobs.push((m, sources));
    }
    let results = map_collect(jobs, |(m, sources)| {
        let mut checks = 0u64;
        let mut max_excess = f64::NEG_INFINITY;
        for t in (m + 1)..=10usize {
            for word in word_list(2, t) {
                let seq = Sequence::from_indices(Arc::clone(&binary), word).unwrap();
                let bound = max_markov_log_prob(&seq, m).expect("m < t");
                for src in &sources {
                    checks += 1;
                    let lp = src.log_probability_indices(seq.indices());
                    if lp == f64::NEG_INFINITY {
                        continue;
                    }
                    max_excess = max_excess.max(lp - bound);
                }
            }
        }
        (checks, max_excess)
    });
    let checks: u64 = results.iter().map(|(c, _)| c).sum();
    let max_excess = results.iter().map(|&(_, e)| e).fold(f64::NEG_INFINITY, f64::max);
    GroupReport {
        group: VerifyGroup::AppendixDomination.name(),
        passed: max_excess <= 1e-12,
        checks,
        detail: format!("source_sample_pairs={checks} max_log2_excess={max_excess:.3e}"),
    }
}

fn normalization_group() -> GroupReport {
    let mut checks = 0u64;
    let mut max_dev = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    for n in [2usize, 3] {
        let measures: Vec<(String, Box<dyn Predictor>)> = vec![
            ("laplace".into(), Box::new(LaplacePredictor::new(n))),
            ("kt:0".into(), Box::new(KtPredictor::new(n, 0))),
            ("kt:1".into(), Box::new(KtPredictor::new(n, 1))),
            ("kt:2".into(), Box::new(KtPredictor::new(n, 2))),
            ("mixture".into(), MeasureSpec::parse("mixture").unwrap().build(n)),
        ];
        let alphabet = Arc::new(Alphabet::new(b"abc"[..n].to_vec()).unwrap());
        for (name, measure) in &measures {
            for t in 1..=8usize {
                let mass: f64 = word_list(n, t)
                    .into_iter()
                    .map(|w| {
                        let seq = Sequence::from_indices(Arc::clone(&alphabet), w).unwrap();
                        log_measure(measure.as_ref(), &seq).expect("positive measure").exp2()
                    })
                    .sum();
                checks += 1;
                let dev = (mass - 1.0).abs();
                max_dev = max_dev.max(dev);
                if dev > 1e-9 {
                    failures.push(format!("{name} n={n} t={t}: mass {mass}"));
                }
            }
        }
    }
    GroupReport {
        group: VerifyGroup::Normalization.name(),
        passed: failures.is_empty(),
        checks,
        detail: if failures.is_empty() {
            format!("cells={checks} max_deviation={max_dev:.3e}")
        } else {
            failures.join("; ")
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_names_roundtrip() {
        for g in VerifyGroup::all() {
            assert_eq!(g.name().parse::<VerifyGroup>().unwrap(), g);
        }
        assert!("frobnicate".parse::<VerifyGroup>().is_err());
    }

    #[test]
    fn kraft_and_claim1_pass() {
        assert!(run_group(VerifyGroup::Kraft, 1).passed);
        let r = run_group(VerifyGroup::Claim1, 1);
        assert!(r.passed, "{}", r.detail);
        assert!(r.checks > 0);
    }

    #[test]
    fn normalization_passes() {
        let r = run_group(VerifyGroup::Normalization, 0);
        assert!(r.passed, "{}", r.detail);
    }

    #[test]
    fn suite_defaults_to_all_groups() {
        // Smoke-test the dispatcher with the two cheapest groups.
        let reports = verify_suite(&[VerifyGroup::Kraft, VerifyGroup::Claim1], 3);
        assert_eq!(reports.len(), 2);
        assert!(reports.iter().all(|r| r.passed));
    }
}
