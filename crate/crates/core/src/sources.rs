//! Exact generative source models.
//!
//! Three variants cover the null and alternative families used by the tests:
//! i.i.d. (Bernoulli) sources, Markov chains of a given memory over context
//! words, and hidden-Markov sources. Every model supports reproducible
//! sampling, exact log2-probability of a sample, and stationary analysis.
//!
//! Markov contexts are encoded base-n with the oldest symbol most
//! significant, matching the word encoding used by the count tables.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::sequence::{Alphabet, Sequence};

/// Row sums may deviate by this much in input files before being rejected;
/// accepted rows are renormalized to machine precision.
const ROW_SUM_TOLERANCE: f64 = 1e-9;
/// Stationary fixed-point stopping rule (total variation) and iteration cap.
const STATIONARY_TOLERANCE: f64 = 1e-12;
const STATIONARY_MAX_ITERS: usize = 1_000_000;
/// Guard on the number of enumerated states for stationary analysis.
const STATE_LIMIT: usize = 1 << 20;

fn validate_row(row: &[f64], what: &str) -> Result<Vec<f64>> {
    if row.is_empty() {
        return Err(Error::Model(format!("{what}: empty probability row")));
    }
    let mut sum = 0.0;
    for &p in row {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::Model(format!("{what}: entry {p} is not a probability")));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(Error::Model(format!("{what}: row sums to {sum}, not 1")));
    }
    Ok(row.iter().map(|&p| p / sum).collect())
}

fn sample_categorical(probs: &[f64], rng: &mut impl Rng) -> u8 {
    let r: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0u8;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i as u8;
            if r < acc {
                return last;
            }
        }
    }
    last
}

/// Exact power of n with a capacity guard.
fn checked_states(n: usize, k: usize, what: &str) -> Result<usize> {
    let mut acc: usize = 1;
    for _ in 0..k {
        acc = acc.checked_mul(n).filter(|&v| v <= STATE_LIMIT).ok_or_else(|| {
            Error::Capacity(format!("{what}: {n}^{k} states exceed limit {STATE_LIMIT}"))
        })?;
    }
    Ok(acc)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Check that the chain described by the implicit edge functions is
/// irreducible and aperiodic, then power-iterate to its stationary law.
///
/// `out` calls the visitor with every positive-probability successor of a
/// state; `inc` with every possible predecessor (superset is fine, it is only
/// used for reverse reachability pruned by `out`-consistency of weights in
/// `step`). `step` applies one transition to a distribution.
fn stationary_fixed_point(
    n_states: usize,
    out: &dyn Fn(usize, &mut dyn FnMut(usize)),
    inc: &dyn Fn(usize, &mut dyn FnMut(usize)),
    step: &dyn Fn(&[f64], &mut [f64]),
) -> Result<Vec<f64>> {
    if n_states == 1 {
        return Ok(vec![1.0]);
    }
    // Forward reachability from state 0.
    let mut fwd = vec![false; n_states];
    let mut level = vec![usize::MAX; n_states];
    let mut queue = std::collections::VecDeque::new();
    fwd[0] = true;
    level[0] = 0;
    queue.push_back(0usize);
    while let Some(u) = queue.pop_front() {
        out(u, &mut |v| {
            if !fwd[v] {
                fwd[v] = true;
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        });
    }
    if let Some(missing) = fwd.iter().position(|&r| !r) {
        return Err(Error::Model(format!(
            "chain is reducible: state {missing} unreachable from state 0"
        )));
    }
    // Backward reachability (on reversed edges).
    let mut bwd = vec![false; n_states];
    bwd[0] = true;
    queue.push_back(0usize);
    while let Some(u) = queue.pop_front() {
        inc(u, &mut |v| {
            if !bwd[v] {
                bwd[v] = true;
                queue.push_back(v);
            }
        });
    }
    if let Some(missing) = bwd.iter().position(|&r| !r) {
        return Err(Error::Model(format!(
            "chain is reducible: state 0 unreachable from state {missing}"
        )));
    }
    // Period = gcd of level[u] + 1 - level[v] over all edges u -> v.
    let mut period: usize = 0;
    for u in 0..n_states {
        out(u, &mut |v| {
            let diff = (level[u] + 1).abs_diff(level[v]);
            period = gcd(period, diff);
        });
    }
    if period != 1 {
        return Err(Error::Model(format!("chain is periodic with period {period}")));
    }

    let mut cur = vec![1.0 / n_states as f64; n_states];
    let mut next = vec![0.0; n_states];
    for _ in 0..STATIONARY_MAX_ITERS {
        next.fill(0.0);
        step(&cur, &mut next);
        let tv: f64 = cur.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
        std::mem::swap(&mut cur, &mut next);
        if tv <= STATIONARY_TOLERANCE {
            let total: f64 = cur.iter().sum();
            for p in cur.iter_mut() {
                *p /= total;
            }
            return Ok(cur);
        }
    }
    Err(Error::Model(format!(
        "stationary distribution did not converge within {STATIONARY_MAX_ITERS} iterations"
    )))
}

/// i.i.d. source over the alphabet.
#[derive(Debug, Clone)]
pub struct BernoulliSource {
    alphabet: Arc<Alphabet>,
    probs: Vec<f64>,
}

impl BernoulliSource {
    pub fn new(alphabet: Arc<Alphabet>, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != alphabet.size() {
            return Err(Error::Model(format!(
                "bernoulli needs {} probabilities, got {}",
                alphabet.size(),
                probs.len()
            )));
        }
        let probs = validate_row(&probs, "bernoulli")?;
        Ok(BernoulliSource { alphabet, probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Markov chain of a fixed memory over the alphabet. Transition rows are
/// indexed by the base-n code of the context word; the initial distribution
/// over contexts defaults to the stationary one.
#[derive(Debug, Clone)]
pub struct MarkovSource {
    alphabet: Arc<Alphabet>,
    order: usize,
    /// transitions[context_code][symbol]
    transitions: Vec<Vec<f64>>,
    /// distribution over context codes for the first `order` symbols
    initial: Vec<f64>,
    custom_initial: bool,
}

impl MarkovSource {
    pub fn new(
        alphabet: Arc<Alphabet>,
        order: usize,
        transitions: Vec<Vec<f64>>,
        initial: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = alphabet.size();
        let n_ctx = checked_states(n, order, "markov contexts")?;
        if transitions.len() != n_ctx {
            return Err(Error::Model(format!(
                "markov of order {order} needs {n_ctx} transition rows, got {}",
                transitions.len()
            )));
        }
        let mut rows = Vec::with_capacity(n_ctx);
        for (c, row) in transitions.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Model(format!(
                    "transition row {c} has {} entries, expected {n}",
                    row.len()
                )));
            }
            rows.push(validate_row(row, &format!("transition row {c}"))?);
        }
        let (initial, custom_initial) = match initial {
            Some(init) => {
                if init.len() != n_ctx {
                    return Err(Error::Model(format!(
                        "initial distribution needs {n_ctx} entries, got {}",
                        init.len()
                    )));
                }
                (validate_row(&init, "initial distribution")?, true)
            }
            None => {
                let st = stationary_contexts(n, order, &rows)?;
                (st, false)
            }
        };
        Ok(MarkovSource { alphabet, order, transitions: rows, initial, custom_initial })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn transition_row(&self, context_code: usize) -> &[f64] {
        &self.transitions[context_code]
    }

    /// True when the caller supplied an explicit (possibly non-stationary)
    /// initial distribution.
    pub fn has_custom_initial(&self) -> bool {
        self.custom_initial
    }

    /// Probability of an initial prefix of up to `order` symbols, obtained by
    /// marginalizing the initial context distribution.
    fn prefix_probability(&self, prefix: &[u8]) -> f64 {
        let n = self.alphabet.size();
        debug_assert!(prefix.len() <= self.order);
        let rest = self.order - prefix.len();
        let block: usize = n.pow(rest as u32);
        let start = prefix.iter().fold(0usize, |acc, &s| acc * n + s as usize) * block;
        self.initial[start..start + block].iter().sum()
    }
}

fn roll_context(code: usize, sym: u8, n: usize, order: usize) -> usize {
    if order == 0 {
        0
    } else {
        let modulus = n.pow(order as u32 - 1);
        (code % modulus) * n + sym as usize
    }
}

fn stationary_contexts(n: usize, order: usize, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n_states = rows.len();
    let out = |c: usize, visit: &mut dyn FnMut(usize)| {
        for (a, &p) in rows[c].iter().enumerate() {
            if p > 0.0 {
                visit(roll_context(c, a as u8, n, order));
            }
        }
    };
    // Predecessors of c' share its high digits shifted: c = j*n^(order-1) + (c' div n).
    let inc = |c2: usize, visit: &mut dyn FnMut(usize)| {
        let a = c2 % n;
        let prefix = c2 / n;
        let hi = n.pow(order.saturating_sub(1) as u32);
        for j in 0..n {
            let c = j * hi + prefix;
            if rows[c][a] > 0.0 {
                visit(c);
            }
        }
    };
    let step = |cur: &[f64], next: &mut [f64]| {
        for (c, &mass) in cur.iter().enumerate() {
            if mass > 0.0 {
                for (a, &p) in rows[c].iter().enumerate() {
                    if p > 0.0 {
                        next[roll_context(c, a as u8, n, order)] += mass * p;
                    }
                }
            }
        }
    };
    stationary_fixed_point(n_states, &out, &inc, &step)
}

fn stationary_matrix(rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n_states = rows.len();
    let out = |s: usize, visit: &mut dyn FnMut(usize)| {
        for (s2, &p) in rows[s].iter().enumerate() {
            if p > 0.0 {
                visit(s2);
            }
        }
    };
    let inc = |s2: usize, visit: &mut dyn FnMut(usize)| {
        for (s, row) in rows.iter().enumerate() {
            if row[s2] > 0.0 {
                visit(s);
            }
        }
    };
    let step = |cur: &[f64], next: &mut [f64]| {
        for (s, &mass) in cur.iter().enumerate() {
            if mass > 0.0 {
                for (s2, &p) in rows[s].iter().enumerate() {
                    next[s2] += mass * p;
                }
            }
        }
    };
    stationary_fixed_point(n_states, &out, &inc, &step)
}

/// Hidden-Markov source: a hidden chain over `states` with per-state emission
/// distributions over the alphabet.
#[derive(Debug, Clone)]
pub struct HiddenMarkovSource {
    alphabet: Arc<Alphabet>,
    /// transition[state][next_state]
    transition: Vec<Vec<f64>>,
    /// emission[state][symbol]
    emission: Vec<Vec<f64>>,
    /// distribution of the state emitting the first symbol
    initial: Vec<f64>,
    custom_initial: bool,
}

impl HiddenMarkovSource {
    pub fn new(
        alphabet: Arc<Alphabet>,
        transition: Vec<Vec<f64>>,
        emission: Vec<Vec<f64>>,
        initial: Option<Vec<f64>>,
    ) -> Result<Self> {
        let s = transition.len();
        if s == 0 {
            return Err(Error::Model("hidden-markov needs at least one state".into()));
        }
        if emission.len() != s {
            return Err(Error::Model(format!(
                "{s} states but {} emission rows",
                emission.len()
            )));
        }
        let mut trows = Vec::with_capacity(s);
        for (i, row) in transition.iter().enumerate() {
            if row.len() != s {
                return Err(Error::Model(format!("transition row {i} is not {s} wide")));
            }
            trows.push(validate_row(row, &format!("state transition row {i}"))?);
        }
        let mut erows = Vec::with_capacity(s);
        for (i, row) in emission.iter().enumerate() {
            if row.len() != alphabet.size() {
                return Err(Error::Model(format!(
                    "emission row {i} has {} entries, expected {}",
                    row.len(),
                    alphabet.size()
                )));
            }
            erows.push(validate_row(row, &format!("emission row {i}"))?);
        }
        let (initial, custom_initial) = match initial {
            Some(init) => {
                if init.len() != s {
                    return Err(Error::Model(format!(
                        "initial state distribution needs {s} entries, got {}",
                        init.len()
                    )));
                }
                (validate_row(&init, "initial state distribution")?, true)
            }
            None => (stationary_matrix(&trows)?, false),
        };
        Ok(HiddenMarkovSource {
            alphabet,
            transition: trows,
            emission: erows,
            initial,
            custom_initial,
        })
    }

    pub fn state_count(&self) -> usize {
        self.transition.len()
    }

    pub fn has_custom_initial(&self) -> bool {
        self.custom_initial
    }
}

/// An exact source model: the generative law behind simulations and the
/// reference likelihood in oracle checks.
#[derive(Debug, Clone)]
pub enum SourceModel {
    Bernoulli(BernoulliSource),
    Markov(MarkovSource),
    HiddenMarkov(HiddenMarkovSource),
}

impl SourceModel {
    pub fn alphabet(&self) -> &Arc<Alphabet> {
        match self {
            SourceModel::Bernoulli(s) => &s.alphabet,
            SourceModel::Markov(s) => &s.alphabet,
            SourceModel::HiddenMarkov(s) => &s.alphabet,
        }
    }

    /// Declared Markov memory: 0 for Bernoulli, the order for Markov chains,
    /// `None` for hidden-Markov sources (no finite memory in general).
    pub fn declared_order(&self) -> Option<usize> {
        match self {
            SourceModel::Bernoulli(_) => Some(0),
            SourceModel::Markov(s) => Some(s.order),
            SourceModel::HiddenMarkov(_) => None,
        }
    }

    /// Draw a length-`t` sample; identical `(seed, stream)` addresses give
    /// identical samples.
    pub fn sample(&self, t: usize, rng_spec: SeededRng) -> Result<Sequence> {
        if t < 1 {
            return Err(Error::Argument("sample length must be at least 1".into()));
        }
        let mut rng = rng_spec.rng();
        let n = self.alphabet().size();
        let mut data = Vec::with_capacity(t);
        match self {
            SourceModel::Bernoulli(s) => {
                for _ in 0..t {
                    data.push(sample_categorical(&s.probs, &mut rng));
                }
            }
            SourceModel::Markov(s) => {
                let mut ctx = sample_categorical_usize(&s.initial, &mut rng);
                let head = decode_word(ctx, s.order, n);
                data.extend_from_slice(&head[..s.order.min(t)]);
                while data.len() < t {
                    let sym = sample_categorical(&s.transitions[ctx], &mut rng);
                    data.push(sym);
                    ctx = roll_context(ctx, sym, n, s.order);
                }
            }
            SourceModel::HiddenMarkov(s) => {
                let mut state = sample_categorical_usize(&s.initial, &mut rng);
                for _ in 0..t {
                    data.push(sample_categorical(&s.emission[state], &mut rng));
                    state = sample_categorical_usize(&s.transition[state], &mut rng);
                }
            }
        }
        Sequence::from_indices(Arc::clone(self.alphabet()), data)
    }

    /// Exact log2-probability of a sample under this model. Zero-probability
    /// paths return `f64::NEG_INFINITY`.
    pub fn log_probability(&self, seq: &Sequence) -> Result<f64> {
        if seq.alphabet() != self.alphabet().as_ref() {
            return Err(Error::Argument("sequence alphabet differs from model alphabet".into()));
        }
        Ok(self.log_probability_indices(seq.indices()))
    }

    /// Same as [`log_probability`](Self::log_probability) over raw indices.
    pub fn log_probability_indices(&self, data: &[u8]) -> f64 {
        match self {
            SourceModel::Bernoulli(s) => {
                let mut lp = 0.0;
                for &x in data {
                    let p = s.probs[x as usize];
                    if p == 0.0 {
                        return f64::NEG_INFINITY;
                    }
                    lp += p.log2();
                }
                lp
            }
            SourceModel::Markov(s) => {
                let n = s.alphabet.size();
                if data.len() <= s.order {
                    let p = s.prefix_probability(data);
                    return if p == 0.0 { f64::NEG_INFINITY } else { p.log2() };
                }
                let head = &data[..s.order];
                let p0 = s.prefix_probability(head);
                if p0 == 0.0 {
                    return f64::NEG_INFINITY;
                }
                let mut lp = p0.log2();
                let mut ctx = head.iter().fold(0usize, |acc, &x| acc * n + x as usize);
                for &x in &data[s.order..] {
                    let p = s.transitions[ctx][x as usize];
                    if p == 0.0 {
                        return f64::NEG_INFINITY;
                    }
                    lp += p.log2();
                    ctx = roll_context(ctx, x, n, s.order);
                }
                lp
            }
            SourceModel::HiddenMarkov(s) => {
                // Scaled forward pass.
                let mut prior = s.initial.clone();
                let ns = s.state_count();
                let mut lp = 0.0;
                let mut post = vec![0.0; ns];
                for &x in data {
                    let mut c = 0.0;
                    for st in 0..ns {
                        post[st] = prior[st] * s.emission[st][x as usize];
                        c += post[st];
                    }
                    if c == 0.0 {
                        return f64::NEG_INFINITY;
                    }
                    lp += c.log2();
                    for p in post.iter_mut() {
                        *p /= c;
                    }
                    for st2 in 0..ns {
                        prior[st2] = (0..ns).map(|st| post[st] * s.transition[st][st2]).sum();
                    }
                }
                lp
            }
        }
    }

    /// Stationary marginal probability of a word under this model's law.
    pub fn block_probability(&self, word: &[u8]) -> f64 {
        let lp = self.log_probability_indices(word);
        if lp == f64::NEG_INFINITY {
            0.0
        } else {
            lp.exp2()
        }
    }

    /// Exact next-symbol distribution given a history. Errors when the
    /// history itself has probability zero under the model.
    pub fn conditional_next(&self, history: &[u8]) -> Result<Vec<f64>> {
        let mut state = self.start_state();
        for &x in history {
            let dist = state.next_distribution();
            if dist[x as usize] == 0.0 {
                return Err(Error::Domain(
                    "conditional distribution undefined: history has probability zero".into(),
                ));
            }
            state.advance(x);
        }
        Ok(state.next_distribution())
    }

    /// Streaming view of the model's conditional law, for path enumeration.
    pub fn start_state(&self) -> SourceState<'_> {
        match self {
            SourceModel::Bernoulli(s) => SourceState::Bernoulli { src: s },
            SourceModel::Markov(s) => {
                SourceState::Markov { src: s, history: Vec::new(), ctx: 0 }
            }
            SourceModel::HiddenMarkov(s) => {
                SourceState::Hmm { src: s, prior: s.initial.clone() }
            }
        }
    }

    /// Stationary distribution over Markov contexts.
    ///
    /// Only defined for the Markov variant; the fixed point is recomputed
    /// from the transition rows, independent of the stored initial.
    pub fn stationary_distribution(&self) -> Result<Vec<f64>> {
        match self {
            SourceModel::Markov(s) => {
                stationary_contexts(s.alphabet.size(), s.order, &s.transitions)
            }
            _ => Err(Error::Argument(
                "stationary context distribution is defined for Markov sources".into(),
            )),
        }
    }

    /// Embed a Bernoulli source as a Markov chain of the given order; the
    /// law of every sample is unchanged.
    pub fn to_markov(&self, order: usize) -> Result<SourceModel> {
        match self {
            SourceModel::Bernoulli(s) => {
                let n = s.alphabet.size();
                let n_ctx = checked_states(n, order, "markov contexts")?;
                let rows = vec![s.probs.clone(); n_ctx];
                let mut initial = vec![1.0; n_ctx];
                for (code, slot) in initial.iter_mut().enumerate() {
                    for sym in decode_word(code, order, n) {
                        *slot *= s.probs[sym as usize];
                    }
                }
                let m = MarkovSource::new(Arc::clone(&s.alphabet), order, rows, Some(initial))?;
                Ok(SourceModel::Markov(m))
            }
            _ => Err(Error::Unsupported(
                "lossless order embedding is implemented for Bernoulli sources".into(),
            )),
        }
    }
}

fn sample_categorical_usize(probs: &[f64], rng: &mut impl Rng) -> usize {
    if probs.len() == 1 {
        return 0;
    }
    let r: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0usize;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if r < acc {
                return last;
            }
        }
    }
    last
}

fn decode_word(mut code: usize, len: usize, n: usize) -> Vec<u8> {
    let mut out = vec![0u8; len];
    for slot in out.iter_mut().rev() {
        *slot = (code % n) as u8;
        code /= n;
    }
    out
}

/// Incremental conditional law of a source along a growing history.
#[derive(Debug, Clone)]
pub enum SourceState<'a> {
    Bernoulli {
        src: &'a BernoulliSource,
    },
    Markov {
        src: &'a MarkovSource,
        /// kept only until the context fills
        history: Vec<u8>,
        ctx: usize,
    },
    Hmm {
        src: &'a HiddenMarkovSource,
        /// law of the state emitting the next symbol, given the history
        prior: Vec<f64>,
    },
}

impl SourceState<'_> {
    /// Next-symbol distribution given the history consumed so far. All zeros
    /// when the history itself is impossible.
    pub fn next_distribution(&self) -> Vec<f64> {
        match self {
            SourceState::Bernoulli { src } => src.probs.clone(),
            SourceState::Markov { src, history, .. } if history.len() < src.order => {
                let ph = src.prefix_probability(history);
                let mut out = vec![0.0; src.alphabet.size()];
                if ph > 0.0 {
                    let mut ext = history.clone();
                    ext.push(0);
                    for (a, slot) in out.iter_mut().enumerate() {
                        *ext.last_mut().unwrap() = a as u8;
                        *slot = src.prefix_probability(&ext) / ph;
                    }
                }
                out
            }
            SourceState::Markov { src, ctx, .. } => src.transitions[*ctx].clone(),
            SourceState::Hmm { src, prior } => {
                let n = src.alphabet.size();
                let mut out = vec![0.0; n];
                for (st, &w) in prior.iter().enumerate() {
                    if w > 0.0 {
                        for (a, slot) in out.iter_mut().enumerate() {
                            *slot += w * src.emission[st][a];
                        }
                    }
                }
                out
            }
        }
    }

    /// Push one observed symbol.
    pub fn advance(&mut self, sym: u8) {
        match self {
            SourceState::Bernoulli { .. } => {}
            SourceState::Markov { src, history, ctx } => {
                let n = src.alphabet.size();
                if history.len() < src.order {
                    history.push(sym);
                    *ctx = history.iter().fold(0usize, |acc, &x| acc * n + x as usize);
                } else {
                    *ctx = roll_context(*ctx, sym, n, src.order);
                }
            }
            SourceState::Hmm { src, prior } => {
                let ns = src.state_count();
                let mut post = vec![0.0; ns];
                let mut c = 0.0;
                for st in 0..ns {
                    post[st] = prior[st] * src.emission[st][sym as usize];
                    c += post[st];
                }
                if c == 0.0 {
                    prior.fill(0.0);
                    return;
                }
                for st2 in 0..ns {
                    prior[st2] = (0..ns).map(|st| post[st] / c * src.transition[st][st2]).sum();
                }
            }
        }
    }
}

/// Random fully-supported Bernoulli source (exponential weights, normalized).
pub fn random_bernoulli(alphabet: Arc<Alphabet>, rng: &mut impl Rng) -> BernoulliSource {
    let n = alphabet.size();
    let weights: Vec<f64> = (0..n).map(|_| -(rng.gen::<f64>().max(1e-16)).ln()).collect();
    let sum: f64 = weights.iter().sum();
    BernoulliSource::new(alphabet, weights.into_iter().map(|w| w / sum).collect()).unwrap()
}

/// Random ergodic Markov source: every transition probability is at least
/// `floor`, which keeps the chain irreducible and aperiodic.
pub fn random_markov(
    alphabet: Arc<Alphabet>,
    order: usize,
    floor: f64,
    rng: &mut impl Rng,
) -> Result<MarkovSource> {
    let n = alphabet.size();
    if floor <= 0.0 || floor * n as f64 >= 1.0 {
        return Err(Error::Argument(format!("floor {floor} infeasible for {n} symbols")));
    }
    let n_ctx = checked_states(n, order, "markov contexts")?;
    let mut rows = Vec::with_capacity(n_ctx);
    for _ in 0..n_ctx {
        let weights: Vec<f64> = (0..n).map(|_| -(rng.gen::<f64>().max(1e-16)).ln()).collect();
        let sum: f64 = weights.iter().sum();
        let slack = 1.0 - floor * n as f64;
        rows.push(weights.into_iter().map(|w| floor + slack * w / sum).collect());
    }
    MarkovSource::new(alphabet, order, rows, None)
}

/// On-disk source description (TOML).
///
/// ```toml
/// kind = "markov"
/// alphabet = "binary"
/// order = 1
///
/// [transitions]
/// "0" = [0.9, 0.1]
/// "1" = [0.1, 0.9]
/// ```
///
/// Markov transition keys are context words rendered in alphabet symbols
/// (comma-separated byte values for byte alphabets); the optional `initial`
/// vector is over context words in lexicographic index order. Hidden-Markov
/// sources use `states`, `transition` (state-by-state rows), `emission`
/// (per-state rows over the alphabet) and an optional `initial` over states.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourceSpec {
    pub kind: String,
    pub alphabet: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transitions: Option<BTreeMap<String, Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emission: Option<Vec<Vec<f64>>>,
}

impl SourceSpec {
    pub fn parse_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Spec(format!("source spec: {e}")))
    }

    /// Instantiate the model this spec describes.
    pub fn build(&self) -> Result<SourceModel> {
        let alphabet = Arc::new(Alphabet::parse_spec(&self.alphabet)?);
        match self.kind.as_str() {
            "bernoulli" => {
                let probs = self
                    .probs
                    .clone()
                    .ok_or_else(|| Error::Spec("bernoulli source needs `probs`".into()))?;
                Ok(SourceModel::Bernoulli(BernoulliSource::new(alphabet, probs)?))
            }
            "markov" => {
                let order = self
                    .order
                    .ok_or_else(|| Error::Spec("markov source needs `order`".into()))?;
                let table = self
                    .transitions
                    .as_ref()
                    .ok_or_else(|| Error::Spec("markov source needs `transitions`".into()))?;
                let n = alphabet.size();
                let n_ctx = checked_states(n, order, "markov contexts")?;
                let mut rows = vec![Vec::new(); n_ctx];
                let mut seen = 0usize;
                for (word, row) in table {
                    let ctx = alphabet.parse_word(word)?;
                    if ctx.len() != order {
                        return Err(Error::Spec(format!(
                            "context {word:?} has length {}, expected {order}",
                            ctx.len()
                        )));
                    }
                    let code = ctx.iter().fold(0usize, |acc, &s| acc * n + s as usize);
                    if !rows[code].is_empty() {
                        return Err(Error::Spec(format!("duplicate context {word:?}")));
                    }
                    rows[code] = row.clone();
                    seen += 1;
                }
                if seen != n_ctx {
                    return Err(Error::Spec(format!(
                        "markov transitions cover {seen} of {n_ctx} contexts"
                    )));
                }
                let m = MarkovSource::new(alphabet, order, rows, self.initial.clone())?;
                Ok(SourceModel::Markov(m))
            }
            "hidden_markov" => {
                let transition = self
                    .transition
                    .clone()
                    .ok_or_else(|| Error::Spec("hidden_markov source needs `transition`".into()))?;
                let emission = self
                    .emission
                    .clone()
                    .ok_or_else(|| Error::Spec("hidden_markov source needs `emission`".into()))?;
                if let Some(states) = self.states {
                    if transition.len() != states {
                        return Err(Error::Spec(format!(
                            "declared {states} states but transition has {} rows",
                            transition.len()
                        )));
                    }
                }
                let h = HiddenMarkovSource::new(alphabet, transition, emission, self.initial.clone())?;
                Ok(SourceModel::HiddenMarkov(h))
            }
            other => Err(Error::Spec(format!(
                "unknown source kind {other:?} (expected bernoulli, markov, or hidden_markov)"
            ))),
        }
    }
}

/// Two-state binary chain with the given stay probability in both states.
/// The workhorse alternative-hypothesis source in examples and benchmarks.
pub fn binary_stay_chain(stay: f64) -> Result<MarkovSource> {
    let a = Arc::new(Alphabet::binary());
    MarkovSource::new(
        a,
        1,
        vec![vec![stay, 1.0 - stay], vec![1.0 - stay, stay]],
        None,
    )
}
