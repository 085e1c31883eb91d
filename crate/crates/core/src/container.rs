//! The model-container file format: named float32 tensors behind a JSON
//! header.
//!
//! Layout: an 8-byte little-endian unsigned header length, a UTF-8 JSON
//! header mapping tensor names to `{"dtype", "shape", "data_offsets"}`, then
//! the raw data section. Offsets are relative to the start of the data
//! section, and the tensor ranges must tile it exactly. Only dtype `F32` is
//! accepted.
//!
//! Containers are immutable after parse; embedding and sanitization build new
//! containers rather than mutating in place.

use std::collections::HashMap;

use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};

pub const HEADER_LEN_BYTES: usize = 8;

/// Shape and placement of one tensor in the data section.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorMeta {
    pub name: String,
    pub shape: Vec<usize>,
    /// Byte offset of the first element, relative to the data section.
    pub begin: usize,
    /// One past the last byte, relative to the data section.
    pub end: usize,
}

impl TensorMeta {
    pub fn element_count(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn byte_len(&self) -> usize {
        self.end - self.begin
    }
}

/// Raw per-tensor header entry. Field names are the wire format.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTensorInfo {
    dtype: String,
    shape: Vec<u64>,
    data_offsets: [u64; 2],
}

/// A parsed model file: ordered tensor metadata plus the data section.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelContainer {
    tensors: Vec<TensorMeta>,
    index: HashMap<String, usize>,
    data: Vec<u8>,
    file_size: usize,
}

impl ModelContainer {
    /// Parse a container from raw file bytes.
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN_BYTES {
            return Err(Error::MalformedHeaderLength(format!(
                "file is {} bytes, need at least {HEADER_LEN_BYTES}",
                bytes.len()
            )));
        }
        let header_len = u64::from_le_bytes(bytes[..HEADER_LEN_BYTES].try_into().unwrap());
        let header_len = usize::try_from(header_len)
            .ok()
            .filter(|&l| l <= bytes.len() - HEADER_LEN_BYTES)
            .ok_or_else(|| {
                Error::MalformedHeaderLength(format!(
                    "declared header of {header_len} bytes does not fit in a {}-byte file",
                    bytes.len()
                ))
            })?;
        let header = &bytes[HEADER_LEN_BYTES..HEADER_LEN_BYTES + header_len];
        let data = &bytes[HEADER_LEN_BYTES + header_len..];

        // preserve_order keeps the header's declaration order.
        let entries: Map<String, Value> = serde_json::from_slice(header)
            .map_err(|e| Error::InvalidHeaderJson(e.to_string()))?;

        let mut tensors = Vec::with_capacity(entries.len());
        for (name, value) in entries {
            let raw: RawTensorInfo = serde_json::from_value(value)
                .map_err(|e| Error::InvalidHeaderJson(format!("tensor {name:?}: {e}")))?;
            if raw.dtype != "F32" {
                return Err(Error::UnsupportedDtype {
                    tensor: name,
                    dtype: raw.dtype,
                });
            }
            let meta = validate_meta(name, &raw.shape, raw.data_offsets, data.len())?;
            tensors.push(meta);
        }
        check_tiling(&tensors, data.len())?;

        let index = build_index(&tensors)?;
        Ok(ModelContainer {
            tensors,
            index,
            data: data.to_vec(),
            file_size: bytes.len(),
        })
    }

    /// Build a container from `(name, shape, values)` triples, laying tensors
    /// out contiguously in the given order.
    pub fn from_tensors<I, S>(tensors: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<usize>, Vec<f32>)>,
        S: Into<String>,
    {
        let mut metas = Vec::new();
        let mut data = Vec::new();
        for (name, shape, values) in tensors {
            let name = name.into();
            if shape.is_empty() || shape.contains(&0) {
                return Err(Error::InvalidOffsets {
                    tensor: name,
                    reason: "shape must be non-empty with all dims >= 1".into(),
                });
            }
            let count: usize = shape.iter().product();
            if count != values.len() {
                return Err(Error::InvalidOffsets {
                    tensor: name,
                    reason: format!("shape holds {count} elements, got {}", values.len()),
                });
            }
            let begin = data.len();
            for v in &values {
                data.extend_from_slice(&v.to_le_bytes());
            }
            metas.push(TensorMeta {
                name,
                shape,
                begin,
                end: data.len(),
            });
        }
        let index = build_index(&metas)?;
        let mut c = ModelContainer {
            tensors: metas,
            index,
            data,
            file_size: 0,
        };
        c.file_size = HEADER_LEN_BYTES + c.header_bytes().len() + c.data.len();
        Ok(c)
    }

    /// Serialize to the canonical byte form: fixed key order (declaration
    /// order), no whitespace. Two writes of the same container are identical.
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = self.header_bytes();
        let mut out = Vec::with_capacity(HEADER_LEN_BYTES + header.len() + self.data.len());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        out.extend_from_slice(&self.data);
        out
    }

    fn header_bytes(&self) -> Vec<u8> {
        let mut entries = Map::new();
        for t in &self.tensors {
            entries.insert(
                t.name.clone(),
                json!({
                    "dtype": "F32",
                    "shape": t.shape,
                    "data_offsets": [t.begin, t.end],
                }),
            );
        }
        serde_json::to_vec(&entries).expect("header serialization cannot fail")
    }

    /// Tensors in header declaration order.
    pub fn tensors(&self) -> &[TensorMeta] {
        &self.tensors
    }

    pub fn tensor_names(&self) -> impl Iterator<Item = &str> {
        self.tensors.iter().map(|t| t.name.as_str())
    }

    pub fn tensor(&self, name: &str) -> Result<&TensorMeta> {
        self.index
            .get(name)
            .map(|&i| &self.tensors[i])
            .ok_or_else(|| Error::UnknownTensor(name.to_string()))
    }

    /// Raw little-endian pattern and decoded value of one parameter.
    pub fn param_at(&self, tensor: &str, index: usize) -> Result<(u32, f32)> {
        let bits = self.param_bits(tensor, index)?;
        Ok((bits, f32::from_bits(bits)))
    }

    pub fn param_bits(&self, tensor: &str, index: usize) -> Result<u32> {
        let meta = self.tensor(tensor)?;
        if index >= meta.element_count() {
            return Err(Error::IndexOutOfRange {
                tensor: tensor.to_string(),
                index,
                len: meta.element_count(),
            });
        }
        let at = meta.begin + 4 * index;
        Ok(u32::from_le_bytes(self.data[at..at + 4].try_into().unwrap()))
    }

    /// All values of a tensor, decoded.
    pub fn tensor_values(&self, name: &str) -> Result<Vec<f32>> {
        let meta = self.tensor(name)?;
        Ok(self.data[meta.begin..meta.end]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    /// The raw data section.
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    /// Size in bytes of the container's file form.
    pub fn file_size(&self) -> usize {
        self.file_size
    }

    pub fn total_params(&self) -> usize {
        self.tensors.iter().map(TensorMeta::element_count).sum()
    }

    /// A copy with the data section replaced. Layout is unchanged, so the
    /// replacement must have the same length.
    pub(crate) fn with_data(&self, data: Vec<u8>) -> Self {
        assert_eq!(data.len(), self.data.len(), "data section length is fixed");
        ModelContainer {
            tensors: self.tensors.clone(),
            index: self.index.clone(),
            data,
            file_size: self.file_size,
        }
    }
}

fn validate_meta(
    name: String,
    shape: &[u64],
    [begin, end]: [u64; 2],
    data_len: usize,
) -> Result<TensorMeta> {
    let fail = |reason: String| Error::InvalidOffsets {
        tensor: name.clone(),
        reason,
    };
    if shape.is_empty() {
        return Err(fail("shape must be non-empty".into()));
    }
    if shape.contains(&0) {
        return Err(fail("all shape dims must be >= 1".into()));
    }
    let count = shape
        .iter()
        .try_fold(1u64, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| fail("element count overflows".into()))?;
    let byte_len = count
        .checked_mul(4)
        .ok_or_else(|| fail("byte length overflows".into()))?;
    if begin > end {
        return Err(fail(format!("begin {begin} > end {end}")));
    }
    if end > data_len as u64 {
        return Err(fail(format!(
            "end {end} past the {data_len}-byte data section"
        )));
    }
    if end - begin != byte_len {
        return Err(fail(format!(
            "range holds {} bytes but shape needs {byte_len}",
            end - begin
        )));
    }
    Ok(TensorMeta {
        name,
        shape: shape.iter().map(|&d| d as usize).collect(),
        begin: begin as usize,
        end: end as usize,
    })
}

/// Ranges must be disjoint and sum to the data length, i.e. tile the section
/// with no gaps and no trailing bytes.
fn check_tiling(tensors: &[TensorMeta], data_len: usize) -> Result<()> {
    let mut spans: Vec<(usize, usize, &str)> = tensors
        .iter()
        .map(|t| (t.begin, t.end, t.name.as_str()))
        .collect();
    spans.sort_unstable();
    for pair in spans.windows(2) {
        if pair[1].0 < pair[0].1 {
            return Err(Error::OverlappingTensors {
                first: pair[0].2.to_string(),
                second: pair[1].2.to_string(),
            });
        }
    }
    let declared: usize = tensors.iter().map(TensorMeta::byte_len).sum();
    if declared != data_len {
        return Err(Error::DataSizeMismatch {
            declared,
            actual: data_len,
        });
    }
    Ok(())
}

fn build_index(tensors: &[TensorMeta]) -> Result<HashMap<String, usize>> {
    let mut index = HashMap::with_capacity(tensors.len());
    for (i, t) in tensors.iter().enumerate() {
        if index.insert(t.name.clone(), i).is_some() {
            return Err(Error::InvalidHeaderJson(format!(
                "duplicate tensor name {:?}",
                t.name
            )));
        }
    }
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn minimal_file() -> Vec<u8> {
        let header = br#"{"w":{"dtype":"F32","shape":[1],"data_offsets":[0,4]}}"#;
        let mut bytes = (header.len() as u64).to_le_bytes().to_vec();
        bytes.extend_from_slice(header);
        bytes.extend_from_slice(&[0, 0, 0, 0]);
        bytes
    }

    #[test]
    fn parses_minimal_zero_tensor() {
        let c = ModelContainer::parse(&minimal_file()).unwrap();
        assert_eq!(c.tensors().len(), 1);
        assert_eq!(c.param_at("w", 0).unwrap(), (0, 0.0));
        assert_eq!(c.to_bytes(), minimal_file());
    }

    #[test]
    fn param_at_decodes_known_patterns() {
        let c = ModelContainer::from_tensors([(
            "w",
            vec![3],
            vec![f32::from_bits(0xBC40_B763), 0.0, 1.0],
        )])
        .unwrap();
        let (bits, value) = c.param_at("w", 0).unwrap();
        assert_eq!(bits, 0xBC40_B763);
        assert_eq!(value as f64, -0.011762472800910473);
        assert_eq!(c.param_at("w", 1).unwrap(), (0x0000_0000, 0.0));
        assert_eq!(c.param_at("w", 2).unwrap(), (0x3F80_0000, 1.0));
        // stored little-endian
        assert_eq!(&c.data()[..4], &[0x63, 0xB7, 0x40, 0xBC]);
    }

    #[test]
    fn rejects_offsets_past_end_of_file() {
        let header = br#"{"w":{"dtype":"F32","shape":[4],"data_offsets":[0,16]}}"#;
        let mut bytes = (header.len() as u64).to_le_bytes().to_vec();
        bytes.extend_from_slice(header);
        bytes.extend_from_slice(&[0; 4]); // data section too short
        assert!(matches!(
            ModelContainer::parse(&bytes),
            Err(Error::InvalidOffsets { .. })
        ));
    }

    #[test]
    fn rejects_non_f32_dtype_distinctly() {
        let header = br#"{"w":{"dtype":"F16","shape":[2],"data_offsets":[0,4]}}"#;
        let mut bytes = (header.len() as u64).to_le_bytes().to_vec();
        bytes.extend_from_slice(header);
        bytes.extend_from_slice(&[0; 4]);
        assert!(matches!(
            ModelContainer::parse(&bytes),
            Err(Error::UnsupportedDtype { .. })
        ));
    }

    #[test]
    fn rejects_trailing_bytes_and_gaps() {
        let mut bytes = minimal_file();
        bytes.extend_from_slice(&[1, 2, 3, 4]);
        assert!(matches!(
            ModelContainer::parse(&bytes),
            Err(Error::DataSizeMismatch { declared: 4, actual: 8 })
        ));

        let header = br#"{"w":{"dtype":"F32","shape":[1],"data_offsets":[4,8]}}"#;
        let mut gapped = (header.len() as u64).to_le_bytes().to_vec();
        gapped.extend_from_slice(header);
        gapped.extend_from_slice(&[0; 8]);
        assert!(matches!(
            ModelContainer::parse(&gapped),
            Err(Error::DataSizeMismatch { .. })
        ));
    }

    #[test]
    fn rejects_overlapping_tensors() {
        let header = br#"{"a":{"dtype":"F32","shape":[2],"data_offsets":[0,8]},"b":{"dtype":"F32","shape":[1],"data_offsets":[4,8]}}"#;
        let mut bytes = (header.len() as u64).to_le_bytes().to_vec();
        bytes.extend_from_slice(header);
        bytes.extend_from_slice(&[0; 12]);
        assert!(matches!(
            ModelContainer::parse(&bytes),
            Err(Error::OverlappingTensors { .. })
        ));
    }

    #[test]
    fn rejects_truncated_and_garbage_headers() {
        assert!(matches!(
            ModelContainer::parse(&[1, 2, 3]),
            Err(Error::MalformedHeaderLength(_))
        ));
        let mut bytes = (1000u64).to_le_bytes().to_vec();
        bytes.extend_from_slice(b"{}");
        assert!(matches!(
            ModelContainer::parse(&bytes),
            Err(Error::MalformedHeaderLength(_))
        ));
        // u64::MAX header length must not overflow the bounds check
        let mut bytes = u64::MAX.to_le_bytes().to_vec();
        bytes.extend_from_slice(b"\n\n\n");
        assert!(matches!(
            ModelContainer::parse(&bytes),
            Err(Error::MalformedHeaderLength(_))
        ));
        let mut bytes = (4u64).to_le_bytes().to_vec();
        bytes.extend_from_slice(b"not{");
        assert!(matches!(
            ModelContainer::parse(&bytes),
            Err(Error::InvalidHeaderJson(_))
        ));
    }

    #[test]
    fn unknown_tensor_and_index_errors() {
        let c = ModelContainer::parse(&minimal_file()).unwrap();
        assert!(matches!(c.param_at("nope", 0), Err(Error::UnknownTensor(_))));
        assert!(matches!(
            c.param_at("w", 1),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn file_size_is_header_arithmetic() {
        let c = ModelContainer::parse(&minimal_file()).unwrap();
        let bytes = c.to_bytes();
        assert_eq!(c.file_size(), bytes.len());
        let header_len = u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize;
        assert_eq!(bytes.len(), 8 + header_len + c.data().len());
    }

    #[test]
    fn writes_are_deterministic() {
        let c = ModelContainer::from_tensors([
            ("b", vec![2], vec![1.5, -2.5]),
            ("a", vec![1, 2], vec![0.25, 4.0]),
        ])
        .unwrap();
        assert_eq!(c.to_bytes(), c.to_bytes());
        // declaration order survives the round trip
        let reparsed = ModelContainer::parse(&c.to_bytes()).unwrap();
        let names: Vec<_> = reparsed.tensor_names().collect();
        assert_eq!(names, ["b", "a"]);
    }

    prop_compose! {
        fn arb_container()(specs in proptest::collection::vec((1usize..5, 1usize..5), 1..5)) -> ModelContainer {
            let tensors = specs.into_iter().enumerate().map(|(i, (r, c))| {
                let values = (0..r * c).map(|j| (i as f32 + 1.0) * 0.125 - j as f32).collect();
                (format!("t{i}"), vec![r, c], values)
            });
            ModelContainer::from_tensors(tensors).unwrap()
        }
    }

    proptest! {
        #[test]
        fn write_parse_round_trip(c in arb_container()) {
            let bytes = c.to_bytes();
            let reparsed = ModelContainer::parse(&bytes).unwrap();
            prop_assert_eq!(&reparsed, &c);
            prop_assert_eq!(reparsed.to_bytes(), bytes);
        }

        #[test]
        fn data_section_length_matches_element_count(c in arb_container()) {
            prop_assert_eq!(4 * c.total_params(), c.data().len());
        }
    }
}
