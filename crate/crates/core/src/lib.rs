//! Steganographic embedding of binary payloads in the float32 parameters of
//! neural-network model files, plus the defensive counterparts.
//!
//! The toolkit is organized around a simple self-describing container format
//! for named float32 tensors ([`container`]). Payload bytes are placed inside
//! individual parameters by one of four byte-substitution codecs
//! ([`floatcodec`]), planned and executed across tensors ([`embed`]), and
//! recovered with SHA-256 integrity verification ([`extract`]). The remaining
//! modules quantify and defend: entropy and embedding-rate reporting
//! ([`analyze`]), a composite quality score for embedding methods
//! ([`evaluate`]), white-box overlap detection and low-byte sanitization
//! ([`defend`]), a deterministic MLP for desk-scale accuracy-impact
//! experiments ([`mininet`]), and feature-vector trigger logic ([`trigger`]).

pub mod analyze;
pub mod container;
pub mod defend;
pub mod embed;
pub mod error;
pub mod evaluate;
pub mod extract;
pub mod floatcodec;
pub mod mininet;
pub mod trigger;

pub use container::{ModelContainer, TensorMeta};
pub use embed::{EmbedPlan, Manifest, Payload, PlanSegment};
pub use error::{Error, Result};
pub use floatcodec::EmbedMethod;
