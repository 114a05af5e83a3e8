//! Empirical and exact conditional entropies.
//!
//! `empirical_entropy` is the plug-in conditional entropy of one sample,
//! computed from overlapping (k+1)-gram counts with successor-sum context
//! totals. `conditional_entropy` and `limit_entropy` are the corresponding
//! exact quantities of a known source, evaluated from its stationary law.
//! All values are base-2, in bits per symbol.

use std::collections::HashMap;

use crate::counts::word_counts;
use crate::error::{Error, Result};
use crate::sequence::Sequence;
use crate::sources::{SourceModel, SourceState};

/// Guard on exact context enumeration.
const ENUM_LIMIT: usize = 1 << 20;

/// An entropy in bits per symbol; always within `[0, log2 n]` for an
/// alphabet of size n.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct EntropyValue(f64);

impl EntropyValue {
    pub fn bits_per_symbol(self) -> f64 {
        self.0
    }
}

impl From<EntropyValue> for f64 {
    fn from(v: EntropyValue) -> f64 {
        v.0
    }
}

fn entropy_of(dist: &[f64]) -> f64 {
    let mut h = 0.0;
    for &p in dist {
        if p > 0.0 {
            h -= p * p.log2();
        }
    }
    h
}

/// Plug-in conditional entropy of order `k` of a sample.
///
/// Sums `-c(va) log2(c(va)/cbar(v))` over all (k+1)-gram counts, divided by
/// `t - k`; `cbar` is the successor-sum of the context. Zero counts are
/// skipped (0·log 0 = 0), as are contexts without successors.
pub fn empirical_entropy(seq: &Sequence, k: usize) -> Result<EntropyValue> {
    let t = seq.len();
    if k >= t {
        return Err(Error::Argument(format!("order {k} must be less than length {t}")));
    }
    if k == 0 {
        let counts = word_counts(seq, 1)?;
        let total = t as f64;
        let mut h = 0.0;
        for (_, c) in counts.iter() {
            let c = c as f64;
            h -= c * (c / total).log2();
        }
        return Ok(EntropyValue(h / total));
    }
    let counts = word_counts(seq, k + 1)?;
    let mut succ_totals: HashMap<Vec<u8>, u64> = HashMap::new();
    let mut words = Vec::new();
    for (word, c) in counts.iter() {
        *succ_totals.entry(word[..k].to_vec()).or_insert(0) += c;
        words.push((word, c));
    }
    let mut h = 0.0;
    for (word, c) in words {
        let total = succ_totals[&word[..k]] as f64;
        let c = c as f64;
        h -= c * (c / total).log2();
    }
    Ok(EntropyValue(h / (t - k) as f64))
}

/// Upper bound, in log2, on the probability any Markov source of memory at
/// most `m` assigns to this exact sample: `-(t - m) * h*_m`.
pub fn max_markov_log_prob(seq: &Sequence, m: usize) -> Result<f64> {
    let h = empirical_entropy(seq, m)?;
    Ok(-((seq.len() - m) as f64) * h.bits_per_symbol())
}

/// Depth-first walk over all histories of a fixed length, calling `leaf`
/// with the history probability and the next-symbol distribution there.
/// Zero-probability branches are pruned.
fn walk_contexts(
    state: &SourceState<'_>,
    prob: f64,
    depth_left: usize,
    leaf: &mut dyn FnMut(f64, &[f64]),
) {
    let dist = state.next_distribution();
    if depth_left == 0 {
        leaf(prob, &dist);
        return;
    }
    for (a, &pa) in dist.iter().enumerate() {
        if pa > 0.0 {
            let mut child = state.clone();
            child.advance(a as u8);
            walk_contexts(&child, prob * pa, depth_left - 1, leaf);
        }
    }
}

fn check_enum_guard(n: usize, k: usize) -> Result<()> {
    let mut acc: usize = 1;
    for _ in 0..k {
        acc = acc
            .checked_mul(n)
            .filter(|&v| v <= ENUM_LIMIT)
            .ok_or_else(|| Error::Capacity(format!("{n}^{k} contexts exceed {ENUM_LIMIT}")))?;
    }
    Ok(())
}

/// A stationary-started twin of the model, so conditional entropies refer to
/// the stationary law regardless of any custom initial distribution.
fn stationary_twin(source: &SourceModel) -> Result<SourceModel> {
    match source {
        SourceModel::Bernoulli(_) => Ok(source.clone()),
        SourceModel::Markov(m) => {
            if !m.has_custom_initial() {
                return Ok(source.clone());
            }
            let spec_free = source.stationary_distribution()?;
            let rows: Vec<Vec<f64>> =
                (0..spec_free.len()).map(|c| m.transition_row(c).to_vec()).collect();
            Ok(SourceModel::Markov(crate::sources::MarkovSource::new(
                source.alphabet().clone(),
                m.order(),
                rows,
                Some(spec_free),
            )?))
        }
        SourceModel::HiddenMarkov(_) => Ok(source.clone()),
    }
}

/// Exact conditional Shannon entropy of order `k` under the source's
/// stationary law: the expected next-symbol entropy given a length-`k` past.
pub fn conditional_entropy(source: &SourceModel, k: usize) -> Result<EntropyValue> {
    if let SourceModel::Bernoulli(b) = source {
        return Ok(EntropyValue(entropy_of(b.probs())));
    }
    check_enum_guard(source.alphabet().size(), k)?;
    let twin = stationary_twin(source)?;
    let mut h = 0.0;
    walk_contexts(&twin.start_state(), 1.0, k, &mut |p, dist| {
        h += p * entropy_of(dist);
    });
    Ok(EntropyValue(h))
}

/// Entropy rate of a source with finite memory: `h_m` for a Markov source of
/// order `m`, the marginal entropy for Bernoulli. Hidden-Markov rates have
/// no closed form; use [`limit_entropy_bracket`].
pub fn limit_entropy(source: &SourceModel) -> Result<EntropyValue> {
    match source.declared_order() {
        Some(m) => conditional_entropy(source, m),
        None => Err(Error::Unsupported(
            "hidden-markov entropy rate has no exact value; use limit_entropy_bracket".into(),
        )),
    }
}

/// Bracket `[lower, upper]` around the entropy rate, tightening as `k`
/// grows. For finite-memory sources both ends equal the exact rate. For
/// hidden-Markov sources the upper end is `h_k` and the lower end
/// additionally conditions on the hidden state at the window start.
pub fn limit_entropy_bracket(
    source: &SourceModel,
    k: usize,
) -> Result<(EntropyValue, EntropyValue)> {
    match source {
        SourceModel::HiddenMarkov(h) => {
            check_enum_guard(source.alphabet().size(), k)?;
            let upper = conditional_entropy(source, k)?;
            // Lower: condition on the state before the first window symbol.
            let ns = h.state_count();
            let twin = stationary_twin(source)?;
            let stationary = match &twin {
                SourceModel::HiddenMarkov(hm) => hm,
                _ => unreachable!(),
            };
            let base = stationary.clone();
            let mut lower = 0.0;
            let start = SourceModel::HiddenMarkov(base);
            // Weight of each starting state under the model's own initial law.
            let weights = {
                let mut state = start.start_state();
                match &mut state {
                    SourceState::Hmm { prior, .. } => prior.clone(),
                    _ => unreachable!(),
                }
            };
            for s in 0..ns {
                if weights[s] == 0.0 {
                    continue;
                }
                let mut state = start.start_state();
                if let SourceState::Hmm { prior, .. } = &mut state {
                    prior.fill(0.0);
                    prior[s] = 1.0;
                }
                walk_contexts(&state, 1.0, k, &mut |p, dist| {
                    lower += weights[s] * p * entropy_of(dist);
                });
            }
            Ok((EntropyValue(lower), upper))
        }
        _ => {
            let exact = limit_entropy(source)?;
            Ok((exact, exact))
        }
    }
}
