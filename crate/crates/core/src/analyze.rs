//! Byte-entropy measurement with baseline normalization, and embedding-rate
//! arithmetic.

use crate::error::{Error, Result};

/// One row of a normalized entropy report.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyReport {
    pub label: String,
    /// Shannon entropy of the byte histogram, bits per byte in [0, 8].
    pub raw_entropy: f64,
    pub baseline: f64,
    /// (entropy − baseline) / (max − min) over the report set.
    pub normalized: f64,
    /// logistic(gain × normalized) − 0.5, in (−0.5, 0.5).
    pub scaled: f64,
}

/// Shannon entropy of the byte-value histogram, −Σ pᵢ log₂ pᵢ.
pub fn byte_entropy(data: &[u8]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut counts = [0u64; 256];
    for &b in data {
        counts[b as usize] += 1;
    }
    let n = data.len() as f64;
    let entropy = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    Ok(entropy)
}

/// Normalize measured entropies against a named baseline entry and scale the
/// result through a logistic curve.
pub fn entropy_delta_report(
    entries: &[(String, f64)],
    baseline_label: &str,
    logistic_gain: f64,
) -> Result<Vec<EntropyReport>> {
    if entries.len() < 2 {
        return Err(Error::InvalidArgument(
            "entropy report needs at least two entries".into(),
        ));
    }
    let baseline = entries
        .iter()
        .find(|(label, _)| label == baseline_label)
        .map(|&(_, e)| e)
        .ok_or_else(|| {
            Error::InvalidArgument(format!("baseline label {baseline_label:?} not found"))
        })?;
    let max = entries.iter().map(|&(_, e)| e).fold(f64::MIN, f64::max);
    let min = entries.iter().map(|&(_, e)| e).fold(f64::MAX, f64::min);
    if max == min {
        return Err(Error::DegenerateNormalization);
    }
    Ok(entries
        .iter()
        .map(|(label, entropy)| {
            let normalized = (entropy - baseline) / (max - min);
            let scaled = logistic(logistic_gain * normalized) - 0.5;
            EntropyReport {
                label: label.clone(),
                raw_entropy: *entropy,
                baseline,
                normalized,
                scaled,
            }
        })
        .collect())
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Embedding rate E: payload size over model file size.
pub fn embedding_rate(payload_len: usize, model_file_len: usize) -> Result<f64> {
    if model_file_len == 0 {
        return Err(Error::InvalidArgument("model file size is zero".into()));
    }
    Ok(payload_len as f64 / model_file_len as f64)
}
