//! Recover payload bytes from a container using a manifest, and verify
//! integrity.
//!
//! Integrity failure is a reported condition, not an error: extraction
//! returns the recovered bytes either way and callers decide whether the
//! digest mismatch aborts their workflow.

use sha2::{Digest, Sha256};

use crate::container::ModelContainer;
use crate::embed::Manifest;
use crate::error::Result;
use crate::floatcodec::recover_from_param;

/// Bytes recovered from a container, with the digest comparison already made.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub bytes: Vec<u8>,
    pub sha256_hex: String,
    /// Digest recorded in the manifest.
    pub expected_sha256_hex: String,
}

impl Extraction {
    pub fn sha_matches(&self) -> bool {
        self.sha256_hex == self.expected_sha256_hex
    }
}

/// Concatenate the payload bytes of every planned parameter in order and
/// truncate to the manifest's payload length.
pub fn extract_payload(container: &ModelContainer, manifest: &Manifest) -> Result<Extraction> {
    manifest.plan().validate(container)?;
    let per = manifest.method.bytes_per_param();
    let mut bytes = Vec::with_capacity(manifest.payload_length + per);
    'outer: for seg in &manifest.segments {
        for i in 0..seg.param_count {
            let pattern = container.param_bits(&seg.tensor, seg.start_param + i)?;
            bytes.extend_from_slice(&recover_from_param(pattern, manifest.method));
            if bytes.len() >= manifest.payload_length {
                break 'outer;
            }
        }
    }
    bytes.truncate(manifest.payload_length);
    Ok(Extraction {
        sha256_hex: hex::encode(Sha256::digest(&bytes)),
        expected_sha256_hex: manifest.payload_sha256.clone(),
        bytes,
    })
}

/// True iff the SHA-256 digest of `bytes` equals `expected_sha256`.
pub fn verify(bytes: &[u8], expected_sha256: &[u8; 32]) -> bool {
    let digest: [u8; 32] = Sha256::digest(bytes).into();
    digest == *expected_sha256
}
