//! Countermeasures: white-box overlap detection of a known payload, and
//! low-byte sanitization that destroys embedded payloads with bounded
//! parameter perturbation.

use std::collections::HashSet;

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::container::ModelContainer;
use crate::embed::Payload;
use crate::error::{Error, Result};
use crate::floatcodec::{recover_from_param, EmbedMethod};

pub const DEFAULT_QGRAM: usize = 16;

/// Per-tensor overlap between a known payload and the tensor's candidate
/// byte stream.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorOverlap {
    pub tensor: String,
    pub candidate_stream_len: usize,
    pub matched_qgrams: usize,
    pub total_qgrams: usize,
    pub overlap_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapReport {
    pub q: usize,
    pub per_tensor: Vec<TensorOverlap>,
}

impl OverlapReport {
    /// Tensor with the highest overlap rate (first declared wins ties).
    pub fn argmax(&self) -> Option<&TensorOverlap> {
        self.per_tensor
            .iter()
            .reduce(|best, t| if t.overlap_rate > best.overlap_rate { t } else { best })
    }
}

/// For each tensor, rebuild the candidate byte stream the method would have
/// produced and count how many of the payload's non-overlapping q-grams occur
/// in it as contiguous substrings.
pub fn detect_overlap(
    container: &ModelContainer,
    payload: &Payload,
    method: EmbedMethod,
    q: usize,
) -> Result<OverlapReport> {
    if q == 0 || q > payload.len() {
        return Err(Error::InvalidArgument(format!(
            "q-gram size {q} must be in 1..={}",
            payload.len()
        )));
    }
    let qgrams: Vec<&[u8]> = payload.bytes().chunks_exact(q).collect();
    let per_tensor: Vec<TensorOverlap> = container
        .tensors()
        .par_iter()
        .map(|meta| {
            let stream = candidate_stream(container, &meta.name, method);
            let windows: HashSet<&[u8]> = if stream.len() >= q {
                stream.windows(q).collect()
            } else {
                HashSet::new()
            };
            let matched = qgrams.iter().filter(|g| windows.contains(**g)).count();
            TensorOverlap {
                tensor: meta.name.clone(),
                candidate_stream_len: stream.len(),
                matched_qgrams: matched,
                total_qgrams: qgrams.len(),
                overlap_rate: matched as f64 / qgrams.len() as f64,
            }
        })
        .collect();
    Ok(OverlapReport { q, per_tensor })
}

/// The bytes `method` would recover from every parameter of a tensor, in
/// order.
fn candidate_stream(container: &ModelContainer, tensor: &str, method: EmbedMethod) -> Vec<u8> {
    let meta = container.tensor(tensor).expect("tensor from iteration");
    let per = method.bytes_per_param();
    let mut stream = Vec::with_capacity(meta.element_count() * per);
    for chunk in container.data()[meta.begin..meta.end].chunks_exact(4) {
        let pattern = u32::from_le_bytes(chunk.try_into().unwrap());
        stream.extend_from_slice(&recover_from_param(pattern, method));
    }
    stream
}

/// Sanitization mode for the two low bytes of each parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SanitizeMode {
    /// Replace the low two bytes with seeded pseudo-random bytes.
    Randomize,
    /// Zero the low two bytes (precision reduction).
    Truncate,
}

impl std::str::FromStr for SanitizeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "randomize" => Ok(SanitizeMode::Randomize),
            "truncate" => Ok(SanitizeMode::Truncate),
            other => Err(Error::InvalidArgument(format!(
                "unknown sanitize mode {other:?} (expected randomize or truncate)"
            ))),
        }
    }
}

/// Overwrite the low two bytes of every parameter in the listed tensors,
/// leaving the high two bytes untouched. This is the same byte region half
/// substitution writes, so it also destroys LSB, MSB-reservation, and fast
/// payloads.
pub fn sanitize(
    container: &ModelContainer,
    tensors: &[String],
    mode: SanitizeMode,
    seed: u64,
) -> Result<ModelContainer> {
    let mut data = container.data().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for name in tensors {
        let meta = container.tensor(name)?;
        for at in (meta.begin..meta.end).step_by(4) {
            // little-endian: the low two value bytes come first on disk
            match mode {
                SanitizeMode::Randomize => {
                    let mut low = [0u8; 2];
                    rng.fill_bytes(&mut low);
                    data[at..at + 2].copy_from_slice(&low);
                }
                SanitizeMode::Truncate => {
                    data[at] = 0;
                    data[at + 1] = 0;
                }
            }
        }
    }
    Ok(container.with_data(data))
}
