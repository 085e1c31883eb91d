//! Plan and execute payload embedding across container tensors.
//!
//! A plan names which parameters carry payload bytes and in what order; the
//! sidecar [`Manifest`] records the plan together with the payload length and
//! SHA-256 digest, and is the only channel extraction needs.

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::container::ModelContainer;
use crate::error::{Error, Result};
use crate::floatcodec::{embed_into_param, EmbedMethod};

pub const MANIFEST_VERSION: u32 = 1;

/// An opaque byte payload with its length and SHA-256 digest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Payload {
    bytes: Vec<u8>,
    sha256: [u8; 32],
}

impl Payload {
    pub fn new(bytes: Vec<u8>) -> Result<Self> {
        if bytes.is_empty() {
            return Err(Error::EmptyPayload);
        }
        let sha256 = Sha256::digest(&bytes).into();
        Ok(Payload { bytes, sha256 })
    }

    /// Seeded pseudo-random payload of `len` bytes.
    pub fn seeded(seed: u64, len: usize) -> Result<Self> {
        let mut bytes = vec![0u8; len];
        ChaCha8Rng::seed_from_u64(seed).fill_bytes(&mut bytes);
        Payload::new(bytes)
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    pub fn sha256(&self) -> &[u8; 32] {
        &self.sha256
    }

    pub fn sha256_hex(&self) -> String {
        hex::encode(self.sha256)
    }
}

/// A run of consecutive parameters inside one tensor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanSegment {
    pub tensor: String,
    pub start_param: usize,
    pub param_count: usize,
}

/// Which parameters carry the payload, in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbedPlan {
    pub method: EmbedMethod,
    pub segments: Vec<PlanSegment>,
}

impl EmbedPlan {
    /// Payload bytes the plan can hold.
    pub fn capacity(&self) -> usize {
        let per = self.method.bytes_per_param();
        self.segments.iter().map(|s| s.param_count * per).sum()
    }

    /// Check segments against a container: tensors exist, ranges in bounds,
    /// no two segments overlap.
    pub fn validate(&self, container: &ModelContainer) -> Result<()> {
        let mut seen: Vec<(usize, usize, usize)> = Vec::new(); // (tensor idx-ish via begin, start, end)
        for seg in &self.segments {
            let meta = container.tensor(&seg.tensor)?;
            let len = meta.element_count();
            if seg.param_count == 0 {
                return Err(Error::InvalidPlan(format!(
                    "segment in {:?} has zero parameters",
                    seg.tensor
                )));
            }
            let end = seg
                .start_param
                .checked_add(seg.param_count)
                .filter(|&e| e <= len)
                .ok_or_else(|| Error::IndexOutOfRange {
                    tensor: seg.tensor.clone(),
                    index: seg.start_param + seg.param_count - 1,
                    len,
                })?;
            for &(b, s, e) in &seen {
                if b == meta.begin && seg.start_param < e && s < end {
                    return Err(Error::InvalidPlan(format!(
                        "segments overlap in tensor {:?}",
                        seg.tensor
                    )));
                }
            }
            seen.push((meta.begin, seg.start_param, end));
        }
        Ok(())
    }
}

/// Sidecar record sufficient on its own to drive extraction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub method: EmbedMethod,
    pub segments: Vec<PlanSegment>,
    pub payload_length: usize,
    pub payload_sha256: String,
    pub model_file_size: usize,
}

impl Manifest {
    /// Deterministic JSON form (fixed field order, no whitespace).
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("manifest serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidPlan(format!("manifest: {e}")))
    }

    pub fn plan(&self) -> EmbedPlan {
        EmbedPlan {
            method: self.method,
            segments: self.segments.clone(),
        }
    }
}

/// Payload bytes the given tensors can hold under `method`.
pub fn capacity(
    container: &ModelContainer,
    method: EmbedMethod,
    tensors: &[String],
) -> Result<usize> {
    let mut total = 0usize;
    for name in tensors {
        total += container.tensor(name)?.element_count() * method.bytes_per_param();
    }
    Ok(total)
}

/// Default fill order: declaration order reversed, so the tensors closest to
/// the output come first.
pub fn default_tensor_order(container: &ModelContainer) -> Vec<String> {
    let mut names: Vec<String> = container.tensor_names().map(String::from).collect();
    names.reverse();
    names
}

/// Greedily fill the given tensors in order with `payload_len` bytes,
/// consuming consecutive parameters from index 0. The final segment is sized
/// to the ceiling of the remaining bytes over the method width.
pub fn build_plan(
    container: &ModelContainer,
    method: EmbedMethod,
    payload_len: usize,
    tensors: &[String],
) -> Result<EmbedPlan> {
    if payload_len == 0 {
        return Err(Error::EmptyPayload);
    }
    let available = capacity(container, method, tensors)?;
    if payload_len > available {
        return Err(Error::CapacityExceeded {
            available,
            required: payload_len,
        });
    }
    let per = method.bytes_per_param();
    let mut remaining_params = payload_len.div_ceil(per);
    let mut segments = Vec::new();
    for name in tensors {
        if remaining_params == 0 {
            break;
        }
        let count = container.tensor(name)?.element_count().min(remaining_params);
        if count == 0 {
            continue;
        }
        segments.push(PlanSegment {
            tensor: name.clone(),
            start_param: 0,
            param_count: count,
        });
        remaining_params -= count;
    }
    debug_assert_eq!(remaining_params, 0);
    Ok(EmbedPlan { method, segments })
}

/// Execute a plan: returns a new container with the payload in place and the
/// manifest describing it. Parameters outside the plan are bit-identical to
/// the input; the final short chunk is zero-padded.
pub fn embed_payload(
    container: &ModelContainer,
    payload: &Payload,
    plan: &EmbedPlan,
) -> Result<(ModelContainer, Manifest)> {
    plan.validate(container)?;
    if payload.len() > plan.capacity() {
        return Err(Error::CapacityExceeded {
            available: plan.capacity(),
            required: payload.len(),
        });
    }
    let per = plan.method.bytes_per_param();
    let mut data = container.data().to_vec();
    let mut chunks = payload.bytes().chunks(per);
    'outer: for seg in &plan.segments {
        let meta = container.tensor(&seg.tensor)?;
        for i in 0..seg.param_count {
            let Some(chunk) = chunks.next() else {
                break 'outer;
            };
            let mut padded = [0u8; 3];
            padded[..chunk.len()].copy_from_slice(chunk);
            let at = meta.begin + 4 * (seg.start_param + i);
            let pattern = u32::from_le_bytes(data[at..at + 4].try_into().unwrap());
            let new = embed_into_param(pattern, &padded[..per], plan.method)?;
            data[at..at + 4].copy_from_slice(&new.to_le_bytes());
        }
    }
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        method: plan.method,
        segments: plan.segments.clone(),
        payload_length: payload.len(),
        payload_sha256: payload.sha256_hex(),
        model_file_size: container.file_size(),
    };
    Ok((container.with_data(data), manifest))
}
