//! Bit-exact IEEE-754 binary32 decomposition and per-parameter payload byte
//! placement for the four substitution methods.
//!
//! A parameter is viewed as a 32-bit big-endian pattern `b3 b2 b1 b0` with
//! `b3` most significant. `b3` holds the sign bit and the top seven exponent
//! bits, so the methods differ in how much of the magnitude they preserve:
//!
//! * `Lsb` replaces `b0` only (one payload byte per parameter).
//! * `Half` replaces `b1 b0` (two bytes), leaving the sign, exponent, and the
//!   top seven mantissa bits untouched.
//! * `MsbReservation` replaces `b2 b1 b0` (three bytes), keeping `b3`.
//! * `Fast` replaces the whole pattern with a sign-matched prefix byte
//!   (`0x3C` or `0xBC`) followed by three payload bytes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sign, biased exponent, and mantissa of a binary32 pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Float32Parts {
    /// Sign bit (0 positive, 1 negative).
    pub sign: u8,
    /// 8-bit biased exponent (bias 127).
    pub exponent: u8,
    /// 23-bit mantissa.
    pub mantissa: u32,
}

impl Float32Parts {
    /// Reassemble the original 32-bit pattern.
    pub fn assemble(self) -> u32 {
        ((self.sign as u32) << 31) | ((self.exponent as u32) << 23) | (self.mantissa & 0x7F_FFFF)
    }
}

/// Split a binary32 pattern into sign, exponent, and mantissa.
///
/// Total over all patterns, including NaN, infinities, and denormals.
pub fn decompose(pattern: u32) -> Float32Parts {
    Float32Parts {
        sign: (pattern >> 31) as u8,
        exponent: ((pattern >> 23) & 0xFF) as u8,
        mantissa: pattern & 0x7F_FFFF,
    }
}

/// Payload placement rule applied to each carrier parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedMethod {
    /// Replace the least significant byte only.
    Lsb,
    /// Keep the most significant byte, replace the other three.
    MsbReservation,
    /// Replace the whole parameter with a sign-matched `0x3C`/`0xBC` prefix
    /// plus three payload bytes.
    Fast,
    /// Keep the two most significant bytes, replace the two least significant.
    Half,
}

impl EmbedMethod {
    pub const ALL: [EmbedMethod; 4] = [
        EmbedMethod::Lsb,
        EmbedMethod::MsbReservation,
        EmbedMethod::Fast,
        EmbedMethod::Half,
    ];

    /// Payload bytes carried by each parameter.
    pub fn bytes_per_param(self) -> usize {
        match self {
            EmbedMethod::Lsb => 1,
            EmbedMethod::MsbReservation => 3,
            EmbedMethod::Fast => 3,
            EmbedMethod::Half => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EmbedMethod::Lsb => "lsb",
            EmbedMethod::MsbReservation => "msb_reservation",
            EmbedMethod::Fast => "fast",
            EmbedMethod::Half => "half",
        }
    }
}

impl std::fmt::Display for EmbedMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EmbedMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lsb" => Ok(EmbedMethod::Lsb),
            "msb" | "msb_reservation" => Ok(EmbedMethod::MsbReservation),
            "fast" => Ok(EmbedMethod::Fast),
            "half" => Ok(EmbedMethod::Half),
            other => Err(Error::InvalidArgument(format!(
                "unknown embed method {other:?} (expected lsb, msb, fast, or half)"
            ))),
        }
    }
}

/// Place `chunk` into `pattern` according to `method`.
///
/// `chunk` must be exactly `method.bytes_per_param()` long; callers zero-pad
/// a short final chunk before calling.
pub fn embed_into_param(pattern: u32, chunk: &[u8], method: EmbedMethod) -> Result<u32> {
    let want = method.bytes_per_param();
    if chunk.len() != want {
        return Err(Error::ChunkLengthMismatch {
            expected: want,
            got: chunk.len(),
        });
    }
    Ok(match method {
        EmbedMethod::Lsb => (pattern & 0xFFFF_FF00) | chunk[0] as u32,
        EmbedMethod::Half => {
            (pattern & 0xFFFF_0000) | ((chunk[0] as u32) << 8) | chunk[1] as u32
        }
        EmbedMethod::MsbReservation => {
            (pattern & 0xFF00_0000)
                | ((chunk[0] as u32) << 16)
                | ((chunk[1] as u32) << 8)
                | chunk[2] as u32
        }
        EmbedMethod::Fast => {
            // Sign is taken from the raw sign bit, so the rule is total even
            // for ±0 and NaN carriers.
            let prefix: u32 = if pattern >> 31 == 1 { 0xBC } else { 0x3C };
            (prefix << 24)
                | ((chunk[0] as u32) << 16)
                | ((chunk[1] as u32) << 8)
                | chunk[2] as u32
        }
    })
}

/// Read back the payload bytes a parameter carries under `method`.
///
/// Exact inverse of [`embed_into_param`] on the payload chunk: for every
/// carrier pattern and chunk, `recover(embed(p, c, m), m) == c`.
pub fn recover_from_param(pattern: u32, method: EmbedMethod) -> Vec<u8> {
    let [_, b2, b1, b0] = pattern.to_be_bytes();
    match method {
        EmbedMethod::Lsb => vec![b0],
        EmbedMethod::Half => vec![b1, b0],
        EmbedMethod::MsbReservation | EmbedMethod::Fast => vec![b2, b1, b0],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const ORIGINAL: u32 = 0xBC40_B763;

    #[test]
    fn decompose_splits_the_example_parameter() {
        let parts = decompose(ORIGINAL);
        assert_eq!(parts.sign, 1);
        assert_eq!(parts.exponent, 120);
        assert_eq!(parts.mantissa, 0x40_B763);
        assert_eq!(parts.assemble(), ORIGINAL);
        assert_eq!(f32::from_bits(ORIGINAL) as f64, -0.011762472800910473);
    }

    #[test]
    fn decompose_one_and_zero() {
        let one = decompose(0x3F80_0000);
        assert_eq!((one.sign, one.exponent, one.mantissa), (0, 127, 0));
        let zero = decompose(0x0000_0000);
        assert_eq!((zero.sign, zero.exponent, zero.mantissa), (0, 0, 0));
    }

    #[test]
    fn half_substitution_extremes() {
        let max = embed_into_param(ORIGINAL, &[0xFF, 0xFF], EmbedMethod::Half).unwrap();
        assert_eq!(max, 0xBC40_FFFF);
        assert_eq!(f32::from_bits(max) as f64, -0.011779784224927425);

        let min = embed_into_param(ORIGINAL, &[0x00, 0x00], EmbedMethod::Half).unwrap();
        assert_eq!(min, 0xBC40_0000);
        assert_eq!(f32::from_bits(min) as f64, -0.01171875);
    }

    #[test]
    fn msb_reservation_extremes() {
        let lo = embed_into_param(ORIGINAL, &[0xFF, 0xFF, 0xFF], EmbedMethod::MsbReservation)
            .unwrap();
        assert_eq!(lo, 0xBCFF_FFFF);
        assert_eq!(f32::from_bits(lo) as f64, -0.03124999813735485);

        let hi = embed_into_param(ORIGINAL, &[0x00, 0x00, 0x00], EmbedMethod::MsbReservation)
            .unwrap();
        assert_eq!(hi, 0xBC00_0000);
        assert_eq!(f32::from_bits(hi) as f64, -0.0078125);
    }

    #[test]
    fn fast_substitution_extremes() {
        let neg = embed_into_param(ORIGINAL, &[0x00, 0x00, 0x00], EmbedMethod::Fast).unwrap();
        assert_eq!(neg, 0xBC00_0000);
        assert_eq!(f32::from_bits(neg) as f64, -0.0078125);

        let pos_carrier = 0x3DCC_CCCD; // 0.1
        let pos = embed_into_param(pos_carrier, &[0xFF, 0xFF, 0xFF], EmbedMethod::Fast).unwrap();
        assert_eq!(pos, 0x3CFF_FFFF);
        assert_eq!(f32::from_bits(pos) as f64, 0.03124999813735485);
    }

    #[test]
    fn fast_on_zero_carriers_uses_raw_sign_bit() {
        let pos = embed_into_param(0x0000_0000, &[1, 2, 3], EmbedMethod::Fast).unwrap();
        assert_eq!(pos >> 24, 0x3C);
        let neg = embed_into_param(0x8000_0000, &[1, 2, 3], EmbedMethod::Fast).unwrap();
        assert_eq!(neg >> 24, 0xBC);
    }

    #[test]
    fn recover_examples() {
        assert_eq!(recover_from_param(0xBC40_FFFF, EmbedMethod::Half), [0xFF, 0xFF]);
        assert_eq!(recover_from_param(0x3C00_0000, EmbedMethod::Fast), [0, 0, 0]);
        assert_eq!(recover_from_param(ORIGINAL, EmbedMethod::Lsb), [0x63]);
    }

    #[test]
    fn chunk_length_is_checked() {
        let err = embed_into_param(0, &[1, 2], EmbedMethod::Fast).unwrap_err();
        assert!(matches!(
            err,
            Error::ChunkLengthMismatch { expected: 3, got: 2 }
        ));
    }

    #[test]
    fn method_names_round_trip() {
        for m in EmbedMethod::ALL {
            assert_eq!(m.name().parse::<EmbedMethod>().unwrap(), m);
        }
        assert_eq!("msb".parse::<EmbedMethod>().unwrap(), EmbedMethod::MsbReservation);
        assert!("rot13".parse::<EmbedMethod>().is_err());
    }

    fn arb_method() -> impl Strategy<Value = EmbedMethod> {
        prop_oneof![
            Just(EmbedMethod::Lsb),
            Just(EmbedMethod::MsbReservation),
            Just(EmbedMethod::Fast),
            Just(EmbedMethod::Half),
        ]
    }

    proptest! {
        #[test]
        fn decompose_assemble_is_identity(pattern: u32) {
            prop_assert_eq!(decompose(pattern).assemble(), pattern);
        }

        #[test]
        fn recover_inverts_embed(pattern: u32, chunk in proptest::collection::vec(any::<u8>(), 3), m in arb_method()) {
            let chunk = &chunk[..m.bytes_per_param()];
            let embedded = embed_into_param(pattern, chunk, m).unwrap();
            prop_assert_eq!(recover_from_param(embedded, m), chunk);
        }

        #[test]
        fn high_bytes_are_preserved(pattern: u32, chunk in proptest::collection::vec(any::<u8>(), 3), m in arb_method()) {
            let chunk = &chunk[..m.bytes_per_param()];
            let embedded = embed_into_param(pattern, chunk, m).unwrap();
            match m {
                EmbedMethod::Half => prop_assert_eq!(embedded >> 16, pattern >> 16),
                EmbedMethod::MsbReservation => prop_assert_eq!(embedded >> 24, pattern >> 24),
                EmbedMethod::Lsb => prop_assert_eq!(embedded >> 8, pattern >> 8),
                EmbedMethod::Fast => prop_assert_eq!(embedded >> 31, pattern >> 31),
            }
        }

        #[test]
        fn half_relative_perturbation_is_bounded(exponent in 1u32..255, mantissa in 0u32..0x80_0000, sign in 0u32..2, lo: u16) {
            // Normal carriers only; the bound is not claimed for denormals.
            let pattern = (sign << 31) | (exponent << 23) | mantissa;
            let chunk = lo.to_be_bytes();
            let embedded = embed_into_param(pattern, &chunk, EmbedMethod::Half).unwrap();
            let x = f32::from_bits(pattern) as f64;
            let y = f32::from_bits(embedded) as f64;
            if x.is_finite() && y.is_finite() {
                prop_assert!((y - x).abs() / x.abs() <= (2.0f64).powi(-7));
            }
        }

        #[test]
        fn fast_output_range_and_sign(pattern: u32, chunk in proptest::collection::vec(any::<u8>(), 3)) {
            let embedded = embed_into_param(pattern, &chunk, EmbedMethod::Fast).unwrap();
            let v = f32::from_bits(embedded);
            prop_assert!((0.0078125..0.03125).contains(&v.abs()));
            prop_assert_eq!(embedded >> 31, pattern >> 31);
        }
    }
}
