//! Alphabets and symbol sequences.
//!
//! A sequence stores symbol *indices* into its alphabet; all statistics
//! downstream operate on indices only. Two on-disk representations are
//! supported: text mode (one ASCII symbol per character, line feeds ignored)
//! and byte mode (raw bytes, alphabet fixed to all 256 values).

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Ordered finite alphabet with at least two symbols.
///
/// Symbols are single byte values (ASCII characters in text mode, arbitrary
/// bytes in byte mode). Index `i` maps to `symbols()[i]` and back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<u8>,
    /// Byte-mode alphabets serialize sequences as raw bytes instead of text.
    byte_mode: bool,
    index_of: [Option<u8>; 256],
}

impl Alphabet {
    /// Alphabet from an explicit ordered symbol list.
    pub fn new(symbols: Vec<u8>) -> Result<Self> {
        if symbols.len() < 2 {
            return Err(Error::Argument(format!(
                "alphabet needs at least 2 symbols, got {}",
                symbols.len()
            )));
        }
        if symbols.len() > 256 {
            return Err(Error::Argument("alphabet larger than 256 symbols".into()));
        }
        let mut index_of = [None; 256];
        for (i, &s) in symbols.iter().enumerate() {
            if index_of[s as usize].is_some() {
                return Err(Error::Argument(format!(
                    "duplicate symbol {:?} in alphabet",
                    s as char
                )));
            }
            index_of[s as usize] = Some(i as u8);
        }
        Ok(Alphabet { symbols, byte_mode: false, index_of })
    }

    /// The two-character alphabet `{'0', '1'}`.
    pub fn binary() -> Self {
        Alphabet::new(vec![b'0', b'1']).unwrap()
    }

    /// All 256 byte values, identity-indexed.
    pub fn byte() -> Self {
        let mut a = Alphabet::new((0u16..256).map(|b| b as u8).collect()).unwrap();
        a.byte_mode = true;
        a
    }

    /// Parse the CLI alphabet grammar: `binary`, `byte`, or `chars:<symbols>`.
    pub fn parse_spec(spec: &str) -> Result<Self> {
        match spec {
            "binary" => Ok(Alphabet::binary()),
            "byte" => Ok(Alphabet::byte()),
            _ => {
                if let Some(chars) = spec.strip_prefix("chars:") {
                    if !chars.is_ascii() {
                        return Err(Error::Argument(
                            "chars alphabet must be ASCII (symbols are single code units)".into(),
                        ));
                    }
                    Alphabet::new(chars.bytes().collect())
                } else {
                    Err(Error::Argument(format!(
                        "unknown alphabet spec {spec:?} (expected binary, byte, or chars:<symbols>)"
                    )))
                }
            }
        }
    }

    pub fn size(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn is_byte_mode(&self) -> bool {
        self.byte_mode
    }

    /// Index of an external symbol, if it belongs to the alphabet.
    pub fn index_of(&self, symbol: u8) -> Option<u8> {
        self.index_of[symbol as usize]
    }

    /// log2 of the alphabet size, the entropy ceiling in bits per symbol.
    pub fn log2_size(&self) -> f64 {
        (self.size() as f64).log2()
    }

    /// Parse a word given in external-symbol form into indices. Byte-mode
    /// words are written as comma-separated decimal byte values.
    pub fn parse_word(&self, word: &str) -> Result<Vec<u8>> {
        if self.byte_mode {
            word.split(',')
                .map(|tok| {
                    let v: u8 = tok.trim().parse().map_err(|_| {
                        Error::Argument(format!("bad byte value {tok:?} in word {word:?}"))
                    })?;
                    Ok(v)
                })
                .collect()
        } else {
            word.bytes()
                .enumerate()
                .map(|(i, b)| {
                    self.index_of(b).ok_or_else(|| {
                        Error::Argument(format!(
                            "symbol {:?} at position {} of word {word:?} not in alphabet",
                            b as char,
                            i + 1
                        ))
                    })
                })
                .collect()
        }
    }
}

/// A finite sequence of alphabet indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sequence {
    alphabet: Arc<Alphabet>,
    data: Vec<u8>,
}

impl Sequence {
    /// Build from already-validated indices.
    pub fn from_indices(alphabet: Arc<Alphabet>, data: Vec<u8>) -> Result<Self> {
        let n = alphabet.size() as usize;
        if let Some(pos) = data.iter().position(|&i| (i as usize) >= n) {
            return Err(Error::Argument(format!(
                "index {} at position {} out of range for alphabet of size {n}",
                data[pos],
                pos + 1
            )));
        }
        Ok(Sequence { alphabet, data })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn alphabet_arc(&self) -> Arc<Alphabet> {
        Arc::clone(&self.alphabet)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn indices(&self) -> &[u8] {
        &self.data
    }

    /// Serialize back to the on-disk form: raw bytes in byte mode, one ASCII
    /// character per symbol otherwise. Exact inverse of [`parse_sequence`].
    pub fn render(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|&i| self.alphabet.symbols()[i as usize])
            .collect()
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &i in &self.data {
            let s = self.alphabet.symbols()[i as usize];
            if self.alphabet.is_byte_mode() {
                write!(f, "{s:02x}")?;
            } else {
                write!(f, "{}", s as char)?;
            }
        }
        Ok(())
    }
}

/// Parse a raw payload into a sequence over the given alphabet.
///
/// Text mode ignores line feeds and carriage returns; byte mode takes the
/// payload verbatim. Fails on the first symbol outside the alphabet (1-based
/// byte position reported) and on an empty payload.
pub fn parse_sequence(raw: &[u8], alphabet: Arc<Alphabet>) -> Result<Sequence> {
    let mut data = Vec::with_capacity(raw.len());
    if alphabet.is_byte_mode() {
        data.extend_from_slice(raw);
    } else {
        for (pos, &b) in raw.iter().enumerate() {
            if b == b'\n' || b == b'\r' {
                continue;
            }
            match alphabet.index_of(b) {
                Some(i) => data.push(i),
                None => {
                    return Err(Error::Parse {
                        position: pos + 1,
                        message: format!("symbol {:?} not in alphabet", b as char),
                    })
                }
            }
        }
    }
    if data.is_empty() {
        return Err(Error::Parse { position: 0, message: "empty payload".into() });
    }
    Ok(Sequence { alphabet, data })
}

/// Convenience: parse a text-mode string over a shared alphabet.
pub fn parse_str(text: &str, alphabet: &Arc<Alphabet>) -> Result<Sequence> {
    parse_sequence(text.as_bytes(), Arc::clone(alphabet))
}
