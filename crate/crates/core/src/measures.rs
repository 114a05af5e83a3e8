//! Sequential probability measures and prediction-error metrics.
//!
//! A predictor assigns a strictly positive next-symbol distribution to every
//! finite history, which induces a measure on length-t words by the chain
//! rule. Provided measures: uniform, the add-one letter estimator, add-half
//! per-context estimators of a fixed order, and a weighted order mixture that
//! is universal over every finite Markov memory.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::sequence::Sequence;
use crate::sources::{SourceModel, SourceState};

/// Dense context tables are used while they fit comfortably in memory.
const DENSE_LIMIT: u128 = 1 << 24;
/// Guard on exact sequence enumeration.
const ENUM_LIMIT: usize = 1 << 20;

/// A sequential measure in its incremental form: predictions refer to the
/// history consumed so far via [`update`](Predictor::update).
///
/// Implementations guarantee a strictly positive next-symbol distribution
/// summing to one, so induced log-probabilities are always finite.
pub trait Predictor: Send + Sync {
    fn alphabet_size(&self) -> usize;

    /// Next-symbol distribution given the consumed history.
    fn predict(&self) -> Vec<f64>;

    /// Probability of one symbol under [`predict`](Predictor::predict).
    fn prob_next(&self, sym: u8) -> f64 {
        self.predict()[sym as usize]
    }

    /// Append one symbol to the history.
    fn update(&mut self, sym: u8);

    fn boxed_clone(&self) -> Box<dyn Predictor>;
}

impl Clone for Box<dyn Predictor> {
    fn clone(&self) -> Self {
        self.boxed_clone()
    }
}

/// Memoryless uniform measure.
#[derive(Debug, Clone)]
pub struct UniformPredictor {
    n: usize,
}

impl UniformPredictor {
    pub fn new(n: usize) -> Self {
        UniformPredictor { n }
    }
}

impl Predictor for UniformPredictor {
    fn alphabet_size(&self) -> usize {
        self.n
    }

    fn predict(&self) -> Vec<f64> {
        vec![1.0 / self.n as f64; self.n]
    }

    fn prob_next(&self, _sym: u8) -> f64 {
        1.0 / self.n as f64
    }

    fn update(&mut self, _sym: u8) {}

    fn boxed_clone(&self) -> Box<dyn Predictor> {
        Box::new(self.clone())
    }
}

/// Add-one letter-frequency estimator: (count + 1) / (t + n).
#[derive(Debug, Clone)]
pub struct LaplacePredictor {
    counts: Vec<u64>,
    t: u64,
}

impl LaplacePredictor {
    pub fn new(n: usize) -> Self {
        LaplacePredictor { counts: vec![0; n], t: 0 }
    }
}

impl Predictor for LaplacePredictor {
    fn alphabet_size(&self) -> usize {
        self.counts.len()
    }

    fn predict(&self) -> Vec<f64> {
        let denom = (self.t + self.counts.len() as u64) as f64;
        self.counts.iter().map(|&c| (c + 1) as f64 / denom).collect()
    }

    fn prob_next(&self, sym: u8) -> f64 {
        let denom = (self.t + self.counts.len() as u64) as f64;
        (self.counts[sym as usize] + 1) as f64 / denom
    }

    fn update(&mut self, sym: u8) {
        self.counts[sym as usize] += 1;
        self.t += 1;
    }

    fn boxed_clone(&self) -> Box<dyn Predictor> {
        Box::new(self.clone())
    }
}

#[derive(Debug, Clone)]
enum ContextCounts {
    /// counts[ctx * n + sym]; totals[ctx]
    Dense { counts: Vec<u64>, totals: Vec<u64> },
    /// context word -> per-symbol counts
    Sparse(HashMap<Box<[u8]>, Vec<u64>>),
}

/// Add-half estimator over contexts of a fixed order:
/// (count(context·a) + 1/2) / (total(context) + n/2), counting over the
/// consumed history. Histories shorter than the order predict uniformly
/// (their context has no completed occurrence yet).
#[derive(Debug, Clone)]
pub struct KtPredictor {
    n: usize,
    order: usize,
    /// last `order` symbols once available
    recent: Vec<u8>,
    /// base-n code of `recent` (dense storage only)
    ctx_code: usize,
    counts: ContextCounts,
}

impl KtPredictor {
    pub fn new(n: usize, order: usize) -> Self {
        let dense = (n as u128)
            .checked_pow(order as u32 + 1)
            .is_some_and(|sz| sz <= DENSE_LIMIT);
        let counts = if dense {
            let n_ctx = n.pow(order as u32);
            ContextCounts::Dense { counts: vec![0; n_ctx * n], totals: vec![0; n_ctx] }
        } else {
            ContextCounts::Sparse(HashMap::new())
        };
        KtPredictor { n, order, recent: Vec::with_capacity(order), ctx_code: 0, counts }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn context_ready(&self) -> bool {
        self.recent.len() == self.order
    }

    fn pair(&self, sym: u8) -> (u64, u64) {
        match &self.counts {
            ContextCounts::Dense { counts, totals } => {
                (counts[self.ctx_code * self.n + sym as usize], totals[self.ctx_code])
            }
            ContextCounts::Sparse(map) => match map.get(self.recent.as_slice()) {
                Some(row) => (row[sym as usize], row.iter().sum()),
                None => (0, 0),
            },
        }
    }
}

impl Predictor for KtPredictor {
    fn alphabet_size(&self) -> usize {
        self.n
    }

    fn predict(&self) -> Vec<f64> {
        if !self.context_ready() {
            return vec![1.0 / self.n as f64; self.n];
        }
        let half_n = self.n as f64 / 2.0;
        match &self.counts {
            ContextCounts::Dense { counts, totals } => {
                let denom = totals[self.ctx_code] as f64 + half_n;
                counts[self.ctx_code * self.n..(self.ctx_code + 1) * self.n]
                    .iter()
                    .map(|&c| (c as f64 + 0.5) / denom)
                    .collect()
            }
            ContextCounts::Sparse(map) => match map.get(self.recent.as_slice()) {
                Some(row) => {
                    let denom = row.iter().sum::<u64>() as f64 + half_n;
                    row.iter().map(|&c| (c as f64 + 0.5) / denom).collect()
                }
                None => vec![1.0 / self.n as f64; self.n],
            },
        }
    }

    fn prob_next(&self, sym: u8) -> f64 {
        if !self.context_ready() {
            return 1.0 / self.n as f64;
        }
        let (c, total) = self.pair(sym);
        (c as f64 + 0.5) / (total as f64 + self.n as f64 / 2.0)
    }

    fn update(&mut self, sym: u8) {
        if self.context_ready() {
            match &mut self.counts {
                ContextCounts::Dense { counts, totals } => {
                    counts[self.ctx_code * self.n + sym as usize] += 1;
                    totals[self.ctx_code] += 1;
                }
                ContextCounts::Sparse(map) => {
                    let row = map
                        .entry(self.recent.as_slice().into())
                        .or_insert_with(|| vec![0; self.n]);
                    row[sym as usize] += 1;
                }
            }
        }
        if self.order > 0 {
            if self.context_ready() {
                self.recent.rotate_left(1);
                *self.recent.last_mut().unwrap() = sym;
                let modulus = self.n.pow(self.order as u32 - 1);
                self.ctx_code = (self.ctx_code % modulus) * self.n + sym as usize;
            } else {
                self.recent.push(sym);
                if self.context_ready() {
                    self.ctx_code =
                        self.recent.iter().fold(0usize, |acc, &s| acc * self.n + s as usize);
                }
            }
        }
    }

    fn boxed_clone(&self) -> Box<dyn Predictor> {
        Box::new(self.clone())
    }
}

/// Convex mixture of component measures, tracked sequentially in the log
/// domain: the induced measure is the weighted sum of the component
/// measures, and predictions are the posterior-weighted component
/// predictions.
pub struct MixturePredictor {
    n: usize,
    components: Vec<Box<dyn Predictor>>,
    /// log2(w_j) + log2 of the component's measure of the history
    log_weights: Vec<f64>,
}

impl MixturePredictor {
    pub fn new(components: Vec<Box<dyn Predictor>>, weights: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Argument("mixture needs at least one component".into()));
        }
        if components.len() != weights.len() {
            return Err(Error::Argument(format!(
                "{} components but {} weights",
                components.len(),
                weights.len()
            )));
        }
        let n = components[0].alphabet_size();
        if components.iter().any(|c| c.alphabet_size() != n) {
            return Err(Error::Argument("mixture components disagree on alphabet size".into()));
        }
        let mut sum = 0.0;
        for &w in &weights {
            if !(w > 0.0) {
                return Err(Error::Argument(format!("mixture weight {w} is not positive")));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Argument(format!("mixture weights sum to {sum}, not 1")));
        }
        let log_weights = weights.iter().map(|w| w.log2()).collect();
        Ok(MixturePredictor { n, components, log_weights })
    }

    /// The universal order mixture: add-half estimators of orders 0..=K with
    /// weights 1/((k+1)(k+2)) and the tail mass 1/(K+1) on order K.
    pub fn order_mixture(n: usize, max_order: usize) -> Self {
        let mut components: Vec<Box<dyn Predictor>> = Vec::with_capacity(max_order + 1);
        let mut weights = Vec::with_capacity(max_order + 1);
        for k in 0..=max_order {
            components.push(Box::new(KtPredictor::new(n, k)));
            weights.push(if k < max_order {
                1.0 / ((k + 1) as f64 * (k + 2) as f64)
            } else {
                1.0 / (max_order + 1) as f64
            });
        }
        MixturePredictor::new(components, weights).expect("order mixture weights are valid")
    }

    /// Posterior component weights given the consumed history.
    fn posterior(&self) -> Vec<f64> {
        let max = self.log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = self.log_weights.iter().map(|lw| (lw - max).exp2()).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / total).collect()
    }
}

impl Clone for MixturePredictor {
    fn clone(&self) -> Self {
        MixturePredictor {
            n: self.n,
            components: self.components.clone(),
            log_weights: self.log_weights.clone(),
        }
    }
}

impl Predictor for MixturePredictor {
    fn alphabet_size(&self) -> usize {
        self.n
    }

    fn predict(&self) -> Vec<f64> {
        let post = self.posterior();
        let mut out = vec![0.0; self.n];
        for (j, comp) in self.components.iter().enumerate() {
            let dist = comp.predict();
            for (slot, p) in out.iter_mut().zip(dist) {
                *slot += post[j] * p;
            }
        }
        out
    }

    fn prob_next(&self, sym: u8) -> f64 {
        let post = self.posterior();
        self.components
            .iter()
            .zip(post)
            .map(|(comp, w)| w * comp.prob_next(sym))
            .sum()
    }

    fn update(&mut self, sym: u8) {
        for (comp, lw) in self.components.iter_mut().zip(self.log_weights.iter_mut()) {
            *lw += comp.prob_next(sym).log2();
            comp.update(sym);
        }
    }

    fn boxed_clone(&self) -> Box<dyn Predictor> {
        Box::new(self.clone())
    }
}

/// Parsed measure identifier: `uniform`, `laplace`, `kt:<k>`, `mixture[:K]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MeasureSpec {
    Uniform,
    Laplace,
    Kt { order: usize },
    /// `max_order: None` picks a default that scales with the alphabet and
    /// the tested memory (see [`MeasureSpec::build_for_test`]).
    Mixture { max_order: Option<usize> },
}

impl MeasureSpec {
    pub fn parse(spec: &str) -> Result<Self> {
        if spec == "uniform" {
            return Ok(MeasureSpec::Uniform);
        }
        if spec == "laplace" {
            return Ok(MeasureSpec::Laplace);
        }
        if spec == "mixture" {
            return Ok(MeasureSpec::Mixture { max_order: None });
        }
        if let Some(k) = spec.strip_prefix("kt:") {
            let order = k
                .parse()
                .map_err(|_| Error::Argument(format!("bad order in measure spec {spec:?}")))?;
            return Ok(MeasureSpec::Kt { order });
        }
        if let Some(k) = spec.strip_prefix("mixture:") {
            let max_order = k
                .parse()
                .map_err(|_| Error::Argument(format!("bad order in measure spec {spec:?}")))?;
            return Ok(MeasureSpec::Mixture { max_order: Some(max_order) });
        }
        Err(Error::Argument(format!(
            "unknown measure spec {spec:?} (expected uniform, laplace, kt:<k>, or mixture[:K])"
        )))
    }

    /// Default mixture span: deep for small alphabets, shallow for large.
    pub fn default_max_order(n: usize) -> usize {
        if n == 2 {
            8
        } else {
            3
        }
    }

    /// Fresh predictor over an alphabet of size `n`.
    pub fn build(&self, n: usize) -> Box<dyn Predictor> {
        match self {
            MeasureSpec::Uniform => Box::new(UniformPredictor::new(n)),
            MeasureSpec::Laplace => Box::new(LaplacePredictor::new(n)),
            MeasureSpec::Kt { order } => Box::new(KtPredictor::new(n, *order)),
            MeasureSpec::Mixture { max_order } => {
                let k = max_order.unwrap_or_else(|| Self::default_max_order(n));
                Box::new(MixturePredictor::order_mixture(n, k))
            }
        }
    }

    /// Fresh predictor for testing memory `m`: a defaulted mixture spans at
    /// least order m + 2 so the alternative side always has headroom.
    pub fn build_for_test(&self, n: usize, m: usize) -> Box<dyn Predictor> {
        match self {
            MeasureSpec::Mixture { max_order: None } => {
                let k = Self::default_max_order(n).max(m + 2);
                Box::new(MixturePredictor::order_mixture(n, k))
            }
            other => other.build(n),
        }
    }
}

impl std::fmt::Display for MeasureSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MeasureSpec::Uniform => write!(f, "uniform"),
            MeasureSpec::Laplace => write!(f, "laplace"),
            MeasureSpec::Kt { order } => write!(f, "kt:{order}"),
            MeasureSpec::Mixture { max_order: None } => write!(f, "mixture"),
            MeasureSpec::Mixture { max_order: Some(k) } => write!(f, "mixture:{k}"),
        }
    }
}

/// log2 of the measure a predictor induces on a whole sequence. The
/// predictor argument is taken fresh (no history consumed) and is not
/// mutated.
pub fn log_measure(measure: &dyn Predictor, seq: &Sequence) -> Result<f64> {
    if measure.alphabet_size() != seq.alphabet().size() {
        return Err(Error::Argument(format!(
            "measure over {} symbols applied to alphabet of size {}",
            measure.alphabet_size(),
            seq.alphabet().size()
        )));
    }
    if seq.is_empty() {
        return Err(Error::Argument("log_measure needs a nonempty sequence".into()));
    }
    let mut state = measure.boxed_clone();
    let mut lp = 0.0;
    for &x in seq.indices() {
        let p = state.prob_next(x);
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::Internal(format!(
                "measure produced non-positive next-symbol probability {p}"
            )));
        }
        lp += p.log2();
        state.update(x);
    }
    Ok(lp)
}

/// Kullback-Leibler divergence in bits between distributions over the same
/// alphabet. Zero p-entries contribute nothing; q must be positive wherever
/// p is.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Argument("distributions of different lengths".into()));
    }
    for (dist, name) in [(p, "p"), (q, "q")] {
        let sum: f64 = dist.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Argument(format!("{name} sums to {sum}, not 1")));
        }
    }
    let mut d = 0.0;
    for (&pa, &qa) in p.iter().zip(q) {
        if pa > 0.0 {
            if qa <= 0.0 {
                return Err(Error::Domain(
                    "KL divergence undefined: q vanishes inside the support of p".into(),
                ));
            }
            d += pa * (pa / qa).log2();
        }
    }
    Ok(d.max(0.0))
}

fn check_enum_guard(n: usize, t: usize) -> Result<()> {
    let mut acc: usize = 1;
    for _ in 0..t {
        acc = acc
            .checked_mul(n)
            .filter(|&v| v <= ENUM_LIMIT)
            .ok_or_else(|| Error::Capacity(format!("{n}^{t} histories exceed {ENUM_LIMIT}")))?;
    }
    Ok(())
}

fn walk_errors(
    src: &SourceState<'_>,
    measure: &dyn Predictor,
    prob: f64,
    log_p: f64,
    log_sigma: f64,
    depth_left: usize,
    leaf: &mut dyn FnMut(f64, f64, f64, &SourceState<'_>, &dyn Predictor),
) {
    if depth_left == 0 {
        leaf(prob, log_p, log_sigma, src, measure);
        return;
    }
    let dist = src.next_distribution();
    for (a, &pa) in dist.iter().enumerate() {
        if pa > 0.0 {
            let qa = measure.prob_next(a as u8);
            let mut src_child = src.clone();
            src_child.advance(a as u8);
            let mut measure_child = measure.boxed_clone();
            measure_child.update(a as u8);
            walk_errors(
                &src_child,
                measure_child.as_ref(),
                prob * pa,
                log_p + pa.log2(),
                log_sigma + qa.log2(),
                depth_left - 1,
                leaf,
            );
        }
    }
}

/// Expected single-step prediction error after `t` observed symbols: the
/// source-averaged KL divergence between the true and predicted next-symbol
/// distributions. Exact, by enumerating every length-`t` history.
pub fn expected_step_error(
    source: &SourceModel,
    measure: &dyn Predictor,
    t: usize,
) -> Result<f64> {
    let n = source.alphabet().size();
    if measure.alphabet_size() != n {
        return Err(Error::Argument("measure and source alphabet sizes differ".into()));
    }
    check_enum_guard(n, t)?;
    let mut total = 0.0;
    walk_errors(
        &source.start_state(),
        measure,
        1.0,
        0.0,
        0.0,
        t,
        &mut |prob, _lp, _ls, src, m| {
            let p = src.next_distribution();
            let q = m.predict();
            let mut d = 0.0;
            for (&pa, &qa) in p.iter().zip(&q) {
                if pa > 0.0 {
                    d += pa * (pa / qa).log2();
                }
            }
            total += prob * d.max(0.0);
        },
    );
    Ok(total)
}

/// Per-symbol cumulative error at horizon `t`: the KL divergence between the
/// source law and the induced measure on length-`t` words, divided by `t`.
/// Exact, by enumeration; equals the average of the step errors below `t` by
/// the chain rule.
pub fn cumulative_error(source: &SourceModel, measure: &dyn Predictor, t: usize) -> Result<f64> {
    if t == 0 {
        return Err(Error::Argument("cumulative error needs t >= 1".into()));
    }
    let n = source.alphabet().size();
    if measure.alphabet_size() != n {
        return Err(Error::Argument("measure and source alphabet sizes differ".into()));
    }
    check_enum_guard(n, t)?;
    let mut total = 0.0;
    walk_errors(
        &source.start_state(),
        measure,
        1.0,
        0.0,
        0.0,
        t,
        &mut |prob, log_p, log_sigma, _, _| {
            total += prob * (log_p - log_sigma);
        },
    );
    Ok(total.max(0.0) / t as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::{parse_str, Alphabet, Sequence};
    use crate::sources::{random_bernoulli, BernoulliSource};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use std::sync::Arc;

    fn binary() -> Arc<Alphabet> {
        Arc::new(Alphabet::binary())
    }

    fn bin(text: &str) -> Sequence {
        parse_str(text, &binary()).unwrap()
    }

    fn consume(measure: &dyn Predictor, seq: &Sequence) -> Box<dyn Predictor> {
        let mut m = measure.boxed_clone();
        for &x in seq.indices() {
            m.update(x);
        }
        m
    }

    fn enumerate_seqs(t: usize) -> impl Iterator<Item = Sequence> {
        (0..1usize << t).map(move |code| {
            let word: Vec<u8> = (0..t).rev().map(|b| ((code >> b) & 1) as u8).collect();
            Sequence::from_indices(binary(), word).unwrap()
        })
    }

    #[test]
    fn laplace_worked_prediction() {
        let l = LaplacePredictor::new(2);
        let after = consume(&l, &bin("01010"));
        let dist = after.predict();
        assert_abs_diff_eq!(dist[0], 4.0 / 7.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dist[1], 3.0 / 7.0, epsilon = 1e-15);
    }

    #[test]
    fn laplace_uniform_on_empty_history() {
        for n in [2usize, 5, 256] {
            let l = LaplacePredictor::new(n);
            for p in l.predict() {
                assert_abs_diff_eq!(p, 1.0 / n as f64, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn laplace_measure_of_0101() {
        let l = LaplacePredictor::new(2);
        let lp = log_measure(&l, &bin("0101")).unwrap();
        assert_abs_diff_eq!(lp, (1.0f64 / 30.0).log2(), epsilon = 1e-12);
        assert_abs_diff_eq!(lp, -4.906891, epsilon = 1e-6);
    }

    #[test]
    fn kt_order0_examples() {
        let kt = KtPredictor::new(2, 0);
        assert_abs_diff_eq!(kt.predict()[0], 0.5, epsilon = 1e-15);
        let lp = log_measure(&kt, &bin("00")).unwrap();
        assert_abs_diff_eq!(lp, (3.0f64 / 8.0).log2(), epsilon = 1e-12);
        assert_abs_diff_eq!(lp, -1.415037, epsilon = 1e-6);
        let after = consume(&kt, &bin("000"));
        assert_abs_diff_eq!(after.prob_next(0), 0.875, epsilon = 1e-15);
    }

    #[test]
    fn kt_short_history_is_uniform() {
        let kt = KtPredictor::new(2, 3);
        let mut m: Box<dyn Predictor> = kt.boxed_clone();
        for &x in bin("01").indices() {
            assert_abs_diff_eq!(m.prob_next(x), 0.5, epsilon = 1e-15);
            m.update(x);
        }
        // Context filled but unseen: still uniform.
        assert_abs_diff_eq!(m.prob_next(0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn kt_sparse_storage_matches_dense() {
        // Order forced sparse by a byte alphabet.
        let dense = KtPredictor::new(2, 2);
        let mut sparse = KtPredictor::new(2, 2);
        sparse.counts = ContextCounts::Sparse(HashMap::new());
        let seq = bin("0110100110010110");
        let a = log_measure(&dense, &seq).unwrap();
        let b = log_measure(&sparse, &seq).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }

    #[test]
    fn single_component_mixture_is_identity() {
        let kt = KtPredictor::new(2, 1);
        let mix = MixturePredictor::new(vec![kt.boxed_clone()], vec![1.0]).unwrap();
        for seq in enumerate_seqs(6) {
            let a = log_measure(&mix, &seq).unwrap();
            let b = log_measure(&kt, &seq).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn equal_components_mixture_is_identity() {
        let kt = KtPredictor::new(2, 1);
        let mix =
            MixturePredictor::new(vec![kt.boxed_clone(), kt.boxed_clone()], vec![0.5, 0.5])
                .unwrap();
        for seq in enumerate_seqs(6) {
            let a = log_measure(&mix, &seq).unwrap();
            let b = log_measure(&kt, &seq).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn mixture_validation_errors() {
        assert!(MixturePredictor::new(vec![], vec![]).is_err());
        let c = || -> Box<dyn Predictor> { Box::new(KtPredictor::new(2, 0)) };
        assert!(MixturePredictor::new(vec![c()], vec![0.0]).is_err());
        assert!(MixturePredictor::new(vec![c(), c()], vec![0.4, 0.4]).is_err());
    }

    /// The mixture never loses more than the log of a component weight
    /// against that component, on every sequence.
    #[test]
    fn mixture_dominates_components_up_to_weight() {
        let mix = MixturePredictor::order_mixture(2, 3);
        let weights: Vec<f64> = {
            let mut w: Vec<f64> = (0..3).map(|k| 1.0 / ((k + 1) as f64 * (k + 2) as f64)).collect();
            w.push(1.0 / 4.0);
            w
        };
        for t in 1..=8usize {
            for seq in enumerate_seqs(t) {
                let mix_lp = log_measure(&mix, &seq).unwrap();
                for (k, w) in weights.iter().enumerate() {
                    let comp = KtPredictor::new(2, k);
                    let comp_lp = log_measure(&comp, &seq).unwrap();
                    assert!(
                        -mix_lp <= -comp_lp + (1.0 / w).log2() + 1e-9,
                        "t={t} seq={seq} k={k}"
                    );
                }
            }
        }
    }

    #[test]
    fn measure_spec_grammar() {
        assert_eq!(MeasureSpec::parse("laplace").unwrap(), MeasureSpec::Laplace);
        assert_eq!(MeasureSpec::parse("uniform").unwrap(), MeasureSpec::Uniform);
        assert_eq!(MeasureSpec::parse("kt:3").unwrap(), MeasureSpec::Kt { order: 3 });
        assert_eq!(
            MeasureSpec::parse("mixture").unwrap(),
            MeasureSpec::Mixture { max_order: None }
        );
        assert_eq!(
            MeasureSpec::parse("mixture:5").unwrap(),
            MeasureSpec::Mixture { max_order: Some(5) }
        );
        assert!(MeasureSpec::parse("kt:x").is_err());
        assert!(MeasureSpec::parse("ppm").is_err());
        assert_eq!(MeasureSpec::parse("mixture:5").unwrap().to_string(), "mixture:5");
    }

    #[test]
    fn uniform_measure_log_is_linear() {
        let u = UniformPredictor::new(2);
        for t in [1usize, 5, 9] {
            let seq = Sequence::from_indices(binary(), vec![0; t]).unwrap();
            assert_abs_diff_eq!(log_measure(&u, &seq).unwrap(), -(t as f64), epsilon = 1e-12);
        }
    }

    #[test]
    fn kl_divergence_examples() {
        assert_eq!(kl_divergence(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        let d = kl_divergence(&[0.5, 0.5], &[0.25, 0.75]).unwrap();
        assert_abs_diff_eq!(d, 0.207519, epsilon = 1e-6);
        let d = kl_divergence(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(d, 1.0, epsilon = 1e-12);
        assert!(kl_divergence(&[0.5, 0.5], &[1.0, 0.0]).is_err());
        assert!(kl_divergence(&[0.5, 0.4], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn step_error_zero_before_any_data() {
        let src = SourceModel::Bernoulli(BernoulliSource::new(binary(), vec![0.5, 0.5]).unwrap());
        let l = LaplacePredictor::new(2);
        assert_abs_diff_eq!(expected_step_error(&src, &l, 0).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn step_error_degenerate_source_hand_value() {
        // Source always emits 0; after one symbol Laplace predicts (2/3, 1/3),
        // so the step error is log2(3/2).
        let src = SourceModel::Bernoulli(BernoulliSource::new(binary(), vec![1.0, 0.0]).unwrap());
        let l = LaplacePredictor::new(2);
        let e = expected_step_error(&src, &l, 1).unwrap();
        assert_abs_diff_eq!(e, (1.5f64).log2(), epsilon = 1e-12);
    }

    #[test]
    fn laplace_step_error_within_bound() {
        // The (n-1)/(t+1) ceiling holds for the step error measured in nats,
        // including degenerate sources (the bits version fails at p = (1,0),
        // t = 0, where the error is exactly 1 bit against a ceiling of 1).
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(31);
        for n in [2usize, 3] {
            let symbols = b"abc"[..n].to_vec();
            let a = Arc::new(Alphabet::new(symbols).unwrap());
            let mut sources: Vec<SourceModel> = (0..5)
                .map(|_| SourceModel::Bernoulli(random_bernoulli(Arc::clone(&a), &mut rng)))
                .collect();
            let mut degenerate = vec![0.0; n];
            degenerate[0] = 1.0;
            sources.push(SourceModel::Bernoulli(
                BernoulliSource::new(Arc::clone(&a), degenerate).unwrap(),
            ));
            for src in &sources {
                let l = LaplacePredictor::new(n);
                for t in 0..=7usize {
                    let e_nats = expected_step_error(src, &l, t).unwrap() * std::f64::consts::LN_2;
                    let bound = (n - 1) as f64 / (t + 1) as f64;
                    assert!(e_nats < bound, "n={n} t={t}: {e_nats} >= {bound}");
                }
            }
        }
    }

    #[test]
    fn cumulative_error_zero_for_matching_law() {
        let src = SourceModel::Bernoulli(BernoulliSource::new(binary(), vec![0.5, 0.5]).unwrap());
        let u = UniformPredictor::new(2);
        for t in 1..=6usize {
            assert_abs_diff_eq!(cumulative_error(&src, &u, t).unwrap(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn cumulative_error_chain_rule_identity() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(8);
        let src = SourceModel::Bernoulli(random_bernoulli(binary(), &mut rng));
        let l = LaplacePredictor::new(2);
        for t in 1..=6usize {
            let lhs = cumulative_error(&src, &l, t).unwrap();
            let steps: f64 =
                (0..t).map(|i| expected_step_error(&src, &l, i).unwrap()).sum();
            assert_abs_diff_eq!(lhs, steps / t as f64, epsilon = 1e-10);
        }
    }

    #[test]
    fn cumulative_error_logarithmic_shape() {
        // Against Bernoulli sources the add-one estimator accrues error like
        // ((n-1) log2 t + c)/t for a fitted constant: t * err - (n-1) log2 t
        // stays bounded above over a dyadic range of t (linear growth would
        // blow through any constant).
        let src = SourceModel::Bernoulli(BernoulliSource::new(binary(), vec![0.3, 0.7]).unwrap());
        let l = LaplacePredictor::new(2);
        let mut cs = Vec::new();
        for t in [2usize, 4, 8, 16] {
            let err = cumulative_error(&src, &l, t).unwrap();
            cs.push(t as f64 * err - (t as f64).log2());
        }
        for c in &cs {
            assert!(*c <= 1.0, "fitted constant {c} grew too large: {cs:?}");
        }
    }

    #[test]
    fn enumeration_guard_enforced() {
        let src = SourceModel::Bernoulli(BernoulliSource::new(binary(), vec![0.5, 0.5]).unwrap());
        let l = LaplacePredictor::new(2);
        assert!(matches!(
            expected_step_error(&src, &l, 25),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn exhaustive_normalization_small() {
        let measures: Vec<(&str, Box<dyn Predictor>)> = vec![
            ("laplace", Box::new(LaplacePredictor::new(2))),
            ("kt0", Box::new(KtPredictor::new(2, 0))),
            ("kt2", Box::new(KtPredictor::new(2, 2))),
            ("mixture", Box::new(MixturePredictor::order_mixture(2, 4))),
        ];
        for (name, m) in &measures {
            for t in [1usize, 3, 6] {
                let total: f64 = enumerate_seqs(t)
                    .map(|seq| log_measure(m.as_ref(), &seq).unwrap().exp2())
                    .sum();
                assert!((total - 1.0).abs() < 1e-9, "{name} t={t}: mass {total}");
            }
        }
    }

    proptest! {
        #[test]
        fn kl_nonnegative_zero_iff_equal(
            wp in proptest::collection::vec(0.01f64..1.0, 3),
            wq in proptest::collection::vec(0.01f64..1.0, 3),
        ) {
            let norm = |v: &[f64]| -> Vec<f64> {
                let s: f64 = v.iter().sum();
                v.iter().map(|x| x / s).collect()
            };
            let p = norm(&wp);
            let q = norm(&wq);
            let d = kl_divergence(&p, &q).unwrap();
            prop_assert!(d >= 0.0);
            let same = kl_divergence(&p, &p).unwrap();
            prop_assert!(same.abs() < 1e-12);
            let close = p.iter().zip(&q).all(|(a, b)| (a - b).abs() < 1e-12);
            if d == 0.0 {
                prop_assert!(close);
            }
        }

        #[test]
        fn predictions_are_distributions(
            data in proptest::collection::vec(0u8..2, 0..40),
            which in 0usize..4,
        ) {
            let m: Box<dyn Predictor> = match which {
                0 => Box::new(LaplacePredictor::new(2)),
                1 => Box::new(KtPredictor::new(2, 1)),
                2 => Box::new(KtPredictor::new(2, 3)),
                _ => Box::new(MixturePredictor::order_mixture(2, 4)),
            };
            let mut m = m;
            for &x in &data {
                let dist = m.predict();
                let sum: f64 = dist.iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
                prop_assert!(dist.iter().all(|&p| p > 0.0));
                prop_assert!((m.prob_next(x) - dist[x as usize]).abs() < 1e-12);
                m.update(x);
            }
        }
    }
}
