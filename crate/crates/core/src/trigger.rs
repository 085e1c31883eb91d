//! Feature-vector binarization and match-counter activation logic.
//!
//! A model's penultimate-layer output is binarized through a sign threshold
//! into a hex string; equality with a target string is one match
//! observation, and a counter over consecutive observations decides when
//! extraction is activated.

use crate::error::{Error, Result};

/// Target feature vector plus the activation policy.
#[derive(Debug, Clone, PartialEq)]
pub struct TriggerSpec {
    /// Lowercase hex, 4 bits per char; `width / 4` chars for a `width`-wide
    /// penultimate layer (32 chars at the default width of 128).
    pub target_hex: String,
    /// Binarization threshold; components strictly above it map to 1.
    pub threshold: f64,
    /// The counter must exceed this bound to activate.
    pub activation_bound: u64,
}

impl TriggerSpec {
    pub fn new(target_hex: &str, threshold: f64, activation_bound: u64) -> Result<Self> {
        let hex = target_hex.to_ascii_lowercase();
        if hex.is_empty()
            || !hex.len().is_multiple_of(2)
            || !hex.bytes().all(|b| b.is_ascii_hexdigit())
        {
            return Err(Error::InvalidTargetHex(target_hex.to_string()));
        }
        if activation_bound == 0 {
            return Err(Error::InvalidArgument(
                "activation bound must be at least 1".into(),
            ));
        }
        Ok(TriggerSpec {
            target_hex: hex,
            threshold,
            activation_bound,
        })
    }

    /// Vector length this target expects.
    pub fn expected_width(&self) -> usize {
        self.target_hex.len() * 4
    }
}

impl Default for TriggerSpec {
    fn default() -> Self {
        TriggerSpec {
            target_hex: String::new(),
            threshold: 0.0,
            activation_bound: 5,
        }
    }
}

/// Match counter: one step up per match, one step down (floored at zero) per
/// miss.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MatchCounter {
    pub count: u64,
}

impl MatchCounter {
    /// Record one observation; returns whether extraction is activated, i.e.
    /// the updated counter exceeds the activation bound.
    pub fn observe(&mut self, matched: bool, spec: &TriggerSpec) -> bool {
        self.count = if matched {
            self.count + 1
        } else {
            self.count.saturating_sub(1)
        };
        self.count > spec.activation_bound
    }
}

/// Binarize a feature vector: bit i is 1 iff `t[i] > threshold`, bits packed
/// MSB-first into lowercase hex (4 bits per char). The vector length must be
/// a multiple of 4.
pub fn binarize(t: &[f64], threshold: f64) -> Result<String> {
    if t.is_empty() || !t.len().is_multiple_of(4) {
        return Err(Error::VectorLengthMismatch {
            expected: 4 * t.len().div_ceil(4).max(1),
            got: t.len(),
        });
    }
    let mut hex = String::with_capacity(t.len() / 4);
    for nibble in t.chunks_exact(4) {
        let mut value = 0u8;
        for (bit, &x) in nibble.iter().enumerate() {
            if x > threshold {
                value |= 1 << (3 - bit);
            }
        }
        hex.push(char::from_digit(value as u32, 16).unwrap());
    }
    Ok(hex)
}

/// The trigger condition: the binarized model output equals the target.
pub fn trigger_condition(output: &[f64], spec: &TriggerSpec) -> Result<bool> {
    if output.len() != spec.expected_width() {
        return Err(Error::VectorLengthMismatch {
            expected: spec.expected_width(),
            got: output.len(),
        });
    }
    Ok(binarize(output, spec.threshold)? == spec.target_hex)
}

/// Parse one CSV line of vector components.
pub fn parse_vector_line(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split(',')
        .map(str::trim)
        .filter(|f| !f.is_empty())
        .map(|f| {
            f.parse::<f64>().map_err(|_| Error::CsvParse {
                line: lineno,
                msg: format!("bad component {f:?}"),
            })
        })
        .collect()
}
