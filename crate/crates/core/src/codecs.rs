//! Uniquely decodable codes as evidence sources.
//!
//! A code-length table assigns bit lengths to words of one block length;
//! its Kraft sum certifies consistency with unique decodability, and any
//! table with Kraft sum at most one induces a measure whose log-loss never
//! exceeds the code length (the basis of the code-based test). External
//! compressor executables are adapted through a stdin/stdout contract.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::sequence::Sequence;

/// Bit lengths for words of one block length over an indexed alphabet.
#[derive(Debug, Clone)]
pub struct CodeLengthTable {
    alphabet_size: usize,
    block_len: usize,
    lengths: HashMap<Box<[u8]>, u32>,
}

impl CodeLengthTable {
    pub fn new(
        alphabet_size: usize,
        block_len: usize,
        lengths: impl IntoIterator<Item = (Vec<u8>, u32)>,
    ) -> Result<Self> {
        if alphabet_size < 2 {
            return Err(Error::Argument("alphabet size must be at least 2".into()));
        }
        if block_len < 1 {
            return Err(Error::Argument("block length must be at least 1".into()));
        }
        let mut map = HashMap::new();
        for (word, len) in lengths {
            if word.len() != block_len {
                return Err(Error::Argument(format!(
                    "word {word:?} has length {}, expected {block_len}",
                    word.len()
                )));
            }
            if word.iter().any(|&s| s as usize >= alphabet_size) {
                return Err(Error::Argument(format!(
                    "word {word:?} has symbols outside the alphabet"
                )));
            }
            if len == 0 {
                return Err(Error::Argument(format!("word {word:?} has zero code length")));
            }
            if map.insert(word.into_boxed_slice(), len).is_some() {
                return Err(Error::Argument("duplicate word in code table".into()));
            }
        }
        if map.is_empty() {
            return Err(Error::Argument("empty code table".into()));
        }
        Ok(CodeLengthTable { alphabet_size, block_len, lengths: map })
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn length_of(&self, word: &[u8]) -> Option<u32> {
        self.lengths.get(word).copied()
    }

    pub fn words(&self) -> impl Iterator<Item = (&[u8], u32)> {
        self.lengths.iter().map(|(w, &l)| (w.as_ref(), l))
    }

    fn covers_all_words(&self) -> bool {
        let expected = (self.alphabet_size as u128).pow(self.block_len as u32);
        self.lengths.len() as u128 == expected
    }
}

/// Kraft sum of a table: sum of 2^(-length) over its words. At most one is
/// a necessary condition for the lengths to come from a uniquely decodable
/// code.
pub fn kraft_sum(table: &CodeLengthTable) -> f64 {
    table.lengths.values().map(|&l| (-(l as f64)).exp2()).sum()
}

/// Measure induced by a full-coverage code table with Kraft sum at most one:
/// each word gets mass 2^(-length) renormalized, which guarantees the
/// log-loss never exceeds the code length.
#[derive(Debug, Clone)]
pub struct CodeMeasure {
    probs: HashMap<Box<[u8]>, f64>,
}

impl CodeMeasure {
    pub fn prob(&self, word: &[u8]) -> f64 {
        self.probs.get(word).copied().unwrap_or(0.0)
    }

    pub fn log2_prob(&self, word: &[u8]) -> f64 {
        let p = self.prob(word);
        if p == 0.0 {
            f64::NEG_INFINITY
        } else {
            p.log2()
        }
    }
}

/// Convert a code table to its induced measure. The table must cover every
/// word of its block length and be Kraft-feasible.
pub fn code_to_measure(table: &CodeLengthTable) -> Result<CodeMeasure> {
    if !table.covers_all_words() {
        return Err(Error::Argument(format!(
            "code table covers {} of {} words",
            table.lengths.len(),
            (table.alphabet_size as u128).pow(table.block_len as u32)
        )));
    }
    let total = kraft_sum(table);
    if total > 1.0 + 1e-12 {
        return Err(Error::Argument(format!(
            "Kraft sum {total} exceeds 1; lengths are not uniquely decodable"
        )));
    }
    let probs = table
        .lengths
        .iter()
        .map(|(w, &l)| (w.clone(), (-(l as f64)).exp2() / total))
        .collect();
    Ok(CodeMeasure { probs })
}

/// External compressor run as `sh -c <command>` with the payload on stdin
/// and the compressed stream captured from stdout. Only PATH and LC_ALL are
/// passed through to the child environment.
#[derive(Debug, Clone)]
pub struct ExternalCodec {
    command: String,
    timeout: Duration,
    /// output larger than this multiple of the input aborts the run
    max_output_factor: u64,
}

pub const DEFAULT_CODEC_TIMEOUT: Duration = Duration::from_secs(60);

impl ExternalCodec {
    pub fn new(command: impl Into<String>) -> Self {
        ExternalCodec {
            command: command.into(),
            timeout: DEFAULT_CODEC_TIMEOUT,
            max_output_factor: 16,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    /// Parse the CLI evidence grammar `code:<command template>`.
    pub fn parse_spec(spec: &str) -> Result<Self> {
        match spec.strip_prefix("code:") {
            Some(cmd) if !cmd.trim().is_empty() => Ok(ExternalCodec::new(cmd.trim())),
            _ => Err(Error::Argument(format!(
                "codec spec {spec:?} must be code:<command template>"
            ))),
        }
    }

    /// Compressed size of a raw payload, in bytes.
    fn compress_len(&self, payload: &[u8]) -> Result<u64> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .env_clear()
            .env("PATH", std::env::var("PATH").unwrap_or_else(|_| "/usr/bin:/bin".into()))
            .env("LC_ALL", "C")
            .spawn()
            .map_err(|e| Error::Codec(format!("failed to spawn {:?}: {e}", self.command)))?;

        let mut stdin = child.stdin.take().expect("stdin piped");
        let input = payload.to_vec();
        let writer = std::thread::spawn(move || {
            let _ = stdin.write_all(&input);
            // dropping stdin closes the pipe
        });

        let mut stdout = child.stdout.take().expect("stdout piped");
        let reader = std::thread::spawn(move || -> std::io::Result<u64> {
            let mut buf = [0u8; 64 * 1024];
            let mut total = 0u64;
            loop {
                let got = stdout.read(&mut buf)?;
                if got == 0 {
                    return Ok(total);
                }
                total += got as u64;
            }
        });

        let mut stderr = child.stderr.take().expect("stderr piped");
        let err_reader = std::thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = (&mut stderr).take(4096).read_to_end(&mut buf);
            String::from_utf8_lossy(&buf).into_owned()
        });

        let deadline = Instant::now() + self.timeout;
        let status = loop {
            match child.try_wait() {
                Ok(Some(status)) => break status,
                Ok(None) => {
                    if Instant::now() > deadline {
                        let _ = child.kill();
                        let _ = child.wait();
                        return Err(Error::Codec(format!(
                            "{:?} timed out after {:?}",
                            self.command, self.timeout
                        )));
                    }
                    std::thread::sleep(Duration::from_millis(5));
                }
                Err(e) => return Err(Error::Codec(format!("wait failed: {e}"))),
            }
        };

        let _ = writer.join();
        let out_len = reader
            .join()
            .map_err(|_| Error::Codec("stdout reader panicked".into()))?
            .map_err(|e| Error::Codec(format!("reading codec output: {e}")))?;
        let diagnostics = err_reader.join().unwrap_or_default();

        if !status.success() {
            return Err(Error::Codec(format!(
                "{:?} exited with {status}: {}",
                self.command,
                diagnostics.trim()
            )));
        }
        if out_len == 0 {
            return Err(Error::Codec(format!(
                "{:?} produced no output: {}",
                self.command,
                diagnostics.trim()
            )));
        }
        let cap = (payload.len() as u64).saturating_mul(self.max_output_factor).max(1024);
        if out_len > cap {
            return Err(Error::Codec(format!(
                "{:?} produced {out_len} bytes for a {}-byte input (cap {cap})",
                self.command,
                payload.len()
            )));
        }
        Ok(out_len)
    }
}

/// Serialize a sequence to bytes for compression. Byte alphabets pass
/// through verbatim; other alphabets are packed fixed-width with
/// ceil(log2 n) bits per symbol, big-endian within each byte, and a
/// zero-padded tail. The packing is injective for a fixed length, so a
/// uniquely decodable code over bytes stays uniquely decodable over
/// sequences of one length.
pub fn pack_fixed_width(seq: &Sequence) -> Vec<u8> {
    if seq.alphabet().is_byte_mode() {
        return seq.render();
    }
    let n = seq.alphabet().size();
    let bits = usize::max(1, (n as f64).log2().ceil() as usize);
    let mut out = Vec::with_capacity((seq.len() * bits).div_ceil(8));
    let mut acc: u32 = 0;
    let mut filled = 0usize;
    for &sym in seq.indices() {
        acc = (acc << bits) | sym as u32;
        filled += bits;
        while filled >= 8 {
            out.push((acc >> (filled - 8)) as u8);
            filled -= 8;
            acc &= (1 << filled) - 1;
        }
    }
    if filled > 0 {
        out.push((acc << (8 - filled)) as u8);
    }
    out
}

/// Code length, in bits, an external compressor assigns to a sequence:
/// eight times the compressed byte count, container headers included.
pub fn external_code_length(codec: &ExternalCodec, seq: &Sequence) -> Result<u64> {
    if seq.is_empty() {
        return Err(Error::Argument("cannot compress an empty sequence".into()));
    }
    let payload = pack_fixed_width(seq);
    Ok(codec.compress_len(&payload)? * 8)
}
