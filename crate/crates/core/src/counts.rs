//! Overlapping-window word counts.
//!
//! `word_counts(seq, l)` counts every length-`l` window `x_i..x_{i+l-1}` of
//! the sequence, so the counts sum to `t - l + 1`. Entropy estimators consume
//! the successor-sum `context_total`, which can differ from the count of the
//! context itself by one at the right boundary.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::sequence::Sequence;

/// Dense storage is used while the full table fits comfortably in memory.
const DENSE_LIMIT: u128 = 1 << 24;

#[derive(Debug, Clone)]
enum Storage {
    /// Indexed by the base-n encoding of the word.
    Dense(Vec<u64>),
    Sparse(HashMap<Box<[u8]>, u64>),
}

/// Counts of one word length over all overlapping windows of a sequence.
#[derive(Debug, Clone)]
pub struct NGramCounts {
    word_len: usize,
    seq_len: usize,
    alphabet_size: usize,
    storage: Storage,
}

impl NGramCounts {
    pub fn word_len(&self) -> usize {
        self.word_len
    }

    pub fn seq_len(&self) -> usize {
        self.seq_len
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    /// Number of windows counted, `t - l + 1`.
    pub fn total(&self) -> u64 {
        (self.seq_len - self.word_len + 1) as u64
    }

    /// Count of one word; zero if it never occurs.
    pub fn count(&self, word: &[u8]) -> u64 {
        assert_eq!(word.len(), self.word_len, "word length mismatch");
        match &self.storage {
            Storage::Dense(v) => v[encode(word, self.alphabet_size)],
            Storage::Sparse(m) => m.get(word).copied().unwrap_or(0),
        }
    }

    /// Iterate over the words with nonzero count.
    pub fn iter(&self) -> Box<dyn Iterator<Item = (Vec<u8>, u64)> + '_> {
        match &self.storage {
            Storage::Dense(v) => Box::new(v.iter().enumerate().filter(|(_, &c)| c > 0).map(
                move |(code, &c)| (decode(code, self.word_len, self.alphabet_size), c),
            )),
            Storage::Sparse(m) => Box::new(m.iter().map(|(w, &c)| (w.to_vec(), c))),
        }
    }
}

fn encode(word: &[u8], n: usize) -> usize {
    word.iter().fold(0usize, |acc, &s| acc * n + s as usize)
}

fn decode(mut code: usize, len: usize, n: usize) -> Vec<u8> {
    let mut out = vec![0u8; len];
    for slot in out.iter_mut().rev() {
        *slot = (code % n) as u8;
        code /= n;
    }
    out
}

/// Count all overlapping length-`word_len` windows of `seq`.
pub fn word_counts(seq: &Sequence, word_len: usize) -> Result<NGramCounts> {
    let t = seq.len();
    if word_len < 1 || word_len > t {
        return Err(Error::Argument(format!(
            "word length {word_len} out of range 1..={t}"
        )));
    }
    let n = seq.alphabet().size();
    let dense = (n as u128).checked_pow(word_len as u32).is_some_and(|sz| sz <= DENSE_LIMIT);
    let data = seq.indices();
    let storage = if dense {
        let mut v = vec![0u64; n.pow(word_len as u32)];
        // Rolling base-n code over the window.
        let modulus = n.pow(word_len as u32 - 1);
        let mut code = encode(&data[..word_len - 1], n);
        for i in word_len - 1..t {
            code = (code % modulus) * n + data[i] as usize;
            v[code] += 1;
        }
        Storage::Dense(v)
    } else {
        let mut m: HashMap<Box<[u8]>, u64> = HashMap::new();
        for w in data.windows(word_len) {
            *m.entry(w.into()).or_insert(0) += 1;
        }
        Storage::Sparse(m)
    };
    Ok(NGramCounts { word_len, seq_len: t, alphabet_size: n, storage })
}

/// Successor sum of a context: sum over every symbol `a` of the count of
/// `context·a` in a table of word length `|context|+1`. Counts only the
/// occurrences of the context that have a successor, which undercounts the
/// plain window count of the context by at most one (right boundary).
pub fn context_total(counts: &NGramCounts, context: &[u8]) -> Result<u64> {
    if context.len() + 1 != counts.word_len() {
        return Err(Error::Argument(format!(
            "context of length {} needs a table of word length {}, got {}",
            context.len(),
            context.len() + 1,
            counts.word_len()
        )));
    }
    let n = counts.alphabet_size();
    let mut word = Vec::with_capacity(context.len() + 1);
    word.extend_from_slice(context);
    word.push(0);
    let mut total = 0;
    for a in 0..n {
        *word.last_mut().unwrap() = a as u8;
        total += counts.count(&word);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::{parse_str, Alphabet};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn bin(text: &str) -> Sequence {
        parse_str(text, &Arc::new(Alphabet::binary())).unwrap()
    }

    #[test]
    fn counts_000100_pairs() {
        // Worked count: "000100" has windows 00,00,01,10,00.
        let seq = bin("000100");
        let c = word_counts(&seq, 2).unwrap();
        assert_eq!(c.count(&[0, 0]), 3);
        assert_eq!(c.count(&[0, 1]), 1);
        assert_eq!(c.count(&[1, 0]), 1);
        assert_eq!(c.count(&[1, 1]), 0);
        assert_eq!(c.total(), 5);
    }

    #[test]
    fn counts_000100_letters() {
        let seq = bin("000100");
        let c = word_counts(&seq, 1).unwrap();
        assert_eq!(c.count(&[0]), 5);
        assert_eq!(c.count(&[1]), 1);
    }

    #[test]
    fn full_length_word_single_window() {
        let seq = bin("0101");
        let c = word_counts(&seq, 4).unwrap();
        assert_eq!(c.count(&[0, 1, 0, 1]), 1);
        assert_eq!(c.total(), 1);
    }

    #[test]
    fn word_len_bounds_checked() {
        let seq = bin("0101");
        assert!(word_counts(&seq, 0).is_err());
        assert!(word_counts(&seq, 5).is_err());
    }

    #[test]
    fn context_totals_on_000100() {
        let seq = bin("000100");
        let c2 = word_counts(&seq, 2).unwrap();
        assert_eq!(context_total(&c2, &[0]).unwrap(), 4); // 00:3 + 01:1
        assert_eq!(context_total(&c2, &[1]).unwrap(), 1); // 10:1 + 11:0
    }

    #[test]
    fn absent_context_total_is_zero() {
        let seq = bin("0000");
        let c2 = word_counts(&seq, 2).unwrap();
        assert_eq!(context_total(&c2, &[1]).unwrap(), 0);
    }

    #[test]
    fn context_length_mismatch_rejected() {
        let seq = bin("000100");
        let c2 = word_counts(&seq, 2).unwrap();
        assert!(context_total(&c2, &[0, 0]).is_err());
    }

    #[test]
    fn sparse_path_matches_dense() {
        // Byte alphabet with word length 4 exceeds the dense limit.
        let a = Arc::new(Alphabet::byte());
        let raw: Vec<u8> = (0..500u32).map(|i| (i * 37 % 251) as u8).collect();
        let seq = crate::sequence::parse_sequence(&raw, a).unwrap();
        let c = word_counts(&seq, 4).unwrap();
        assert_eq!(c.iter().map(|(_, c)| c).sum::<u64>(), c.total());
        let w = &raw[10..14];
        assert!(c.count(w) >= 1);
    }

    /// Exhaustive boundary property on small sequences: the plain window
    /// count of a context exceeds its successor sum by 0 or 1.
    #[test]
    fn successor_sum_boundary_exhaustive() {
        for n in 2usize..=3 {
            let symbols: Vec<u8> = b"abc"[..n].to_vec();
            let a = Arc::new(Alphabet::new(symbols).unwrap());
            for t in 2usize..=7 {
                for code in 0..n.pow(t as u32) {
                    let data = decode(code, t, n);
                    let seq = Sequence::from_indices(Arc::clone(&a), data).unwrap();
                    for l in 1..t {
                        let cl = word_counts(&seq, l).unwrap();
                        let cl1 = word_counts(&seq, l + 1).unwrap();
                        for ctx_code in 0..n.pow(l as u32) {
                            let ctx = decode(ctx_code, l, n);
                            let succ = context_total(&cl1, &ctx).unwrap();
                            let plain = cl.count(&ctx);
                            assert!(succ <= plain);
                            assert!(plain - succ <= 1);
                        }
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn window_counts_sum_to_window_count(
            data in proptest::collection::vec(0u8..2, 1..300),
            l in 1usize..8,
        ) {
            prop_assume!(l <= data.len());
            let a = Arc::new(Alphabet::binary());
            let seq = Sequence::from_indices(a, data).unwrap();
            let c = word_counts(&seq, l).unwrap();
            let total: u64 = c.iter().map(|(_, cnt)| cnt).sum();
            prop_assert_eq!(total, (seq.len() - l + 1) as u64);
            prop_assert_eq!(total, c.total());
        }
    }
}
