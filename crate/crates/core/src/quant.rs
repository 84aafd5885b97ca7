//! Min–max uniform quantization with stochastic rounding.
//!
//! An update is mapped onto `2^b` evenly spaced levels spanning its own
//! dynamic range `[lo, hi]`. Each value rounds to one of its two neighbouring
//! levels with probabilities that make the quantizer unbiased. Codes are
//! packed LSB-first, little-endian bit order, into `ceil(P·b/8)` bytes.
//! `b = 32` is the floating point baseline and carries values verbatim.

use rand::Rng;
use thiserror::Error;

use crate::learner::ParamVector;
use crate::rng::{stream_rng, Stream};
use crate::scalar::Real;

/// Bits spent on the (lo, hi) header of every quantized update.
pub const RANGE_METADATA_BITS: u64 = 64;

/// Bit-width that selects the lossless floating point baseline.
pub const BASELINE_BITS: u8 = 32;

#[derive(Debug, Error, PartialEq)]
pub enum QuantError {
    #[error("bit-width {0} outside [1, 32]")]
    BadBits(u8),
    #[error("payload holds {found} bytes, expected {expected}")]
    PayloadLength { expected: usize, found: usize },
    #[error("code {code} does not fit in {bits} bits")]
    CodeOverflow { code: u32, bits: u8 },
    #[error("range lo {lo} exceeds hi {hi}")]
    BadRange { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload<S> {
    Packed(Vec<u8>),
    Float(Vec<S>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedUpdate<S> {
    pub bits: u8,
    pub lo: S,
    pub hi: S,
    pub len: usize,
    pub payload: Payload<S>,
    pub num_samples: usize,
}

impl<S: Real> QuantizedUpdate<S> {
    /// Uplink bits for the payload plus range header (none for the baseline).
    pub fn wire_bits(&self) -> u64 {
        uplink_bits(self.bits, self.len)
    }

    pub fn codes(&self) -> Result<Vec<u32>, QuantError> {
        match &self.payload {
            Payload::Packed(bytes) => unpack_codes(bytes, self.bits, self.len),
            Payload::Float(_) => Ok(Vec::new()),
        }
    }
}

pub fn compute_range<S: Real>(v: &[S]) -> (S, S) {
    v.iter()
        .fold((S::infinity(), S::neg_infinity()), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

pub fn bandwidth_cost(bits: u8, num_params: usize) -> u64 {
    bits as u64 * num_params as u64
}

/// Total uplink bits for one update at `bits`, including the range header.
pub fn uplink_bits(bits: u8, num_params: usize) -> u64 {
    let header = if bits >= BASELINE_BITS {
        0
    } else {
        RANGE_METADATA_BITS
    };
    bandwidth_cost(bits, num_params) + header
}

pub fn packed_len(bits: u8, count: usize) -> usize {
    (count * bits as usize).div_ceil(8)
}

fn check_bits(bits: u8) -> Result<(), QuantError> {
    if (1..=32).contains(&bits) {
        Ok(())
    } else {
        Err(QuantError::BadBits(bits))
    }
}

/// Packs `bits`-wide codes LSB-first.
pub fn pack_codes(codes: &[u32], bits: u8) -> Result<Vec<u8>, QuantError> {
    check_bits(bits)?;
    let mut out = vec![0u8; packed_len(bits, codes.len())];
    let mut pos = 0usize;
    for &code in codes {
        if bits < 32 && code >> bits != 0 {
            return Err(QuantError::CodeOverflow { code, bits });
        }
        for i in 0..bits as usize {
            if (code >> i) & 1 == 1 {
                out[pos >> 3] |= 1 << (pos & 7);
            }
            pos += 1;
        }
    }
    Ok(out)
}

pub fn unpack_codes(bytes: &[u8], bits: u8, count: usize) -> Result<Vec<u32>, QuantError> {
    check_bits(bits)?;
    let expected = packed_len(bits, count);
    if bytes.len() != expected {
        return Err(QuantError::PayloadLength {
            expected,
            found: bytes.len(),
        });
    }
    let mut pos = 0usize;
    Ok((0..count)
        .map(|_| {
            let mut code = 0u32;
            for i in 0..bits as usize {
                code |= u32::from((bytes[pos >> 3] >> (pos & 7)) & 1) << i;
                pos += 1;
            }
            code
        })
        .collect())
}

fn max_code(bits: u8) -> u32 {
    ((1u64 << bits) - 1) as u32
}

/// Stochastic-rounding quantizer over the vector's own range.
pub fn quantize_stochastic<S: Real>(
    v: &ParamVector<S>,
    bits: u8,
    seed: u64,
) -> Result<QuantizedUpdate<S>, QuantError> {
    check_bits(bits)?;
    let (lo, hi) = if v.is_empty() {
        (S::zero(), S::zero())
    } else {
        compute_range(&v.values)
    };
    if bits >= BASELINE_BITS {
        return Ok(QuantizedUpdate {
            bits,
            lo,
            hi,
            len: v.len(),
            payload: Payload::Float(v.values.clone()),
            num_samples: 0,
        });
    }
    let top = max_code(bits);
    let levels = S::of(top as f64);
    let span = hi - lo;
    let mut rng = stream_rng(seed, Stream::Quantize, &[bits as u64]);
    let codes: Vec<u32> = v
        .values
        .iter()
        .map(|&x| {
            if span <= S::zero() {
                return 0;
            }
            let u = ((x - lo) / span * levels).max(S::zero()).min(levels);
            let floor = u.floor();
            let frac = (u - floor).as_f64();
            let draw: f64 = rng.random();
            let code = floor.as_f64() as u32 + u32::from(draw < frac);
            code.min(top)
        })
        .collect();
    Ok(QuantizedUpdate {
        bits,
        lo,
        hi,
        len: v.len(),
        payload: Payload::Packed(pack_codes(&codes, bits)?),
        num_samples: 0,
    })
}

/// Maps codes back to `lo + code·step`; the top code decodes to `hi` exactly.
pub fn dequantize<S: Real>(q: &QuantizedUpdate<S>) -> Result<ParamVector<S>, QuantError> {
    check_bits(q.bits)?;
    if q.lo > q.hi {
        return Err(QuantError::BadRange {
            lo: q.lo.as_f64(),
            hi: q.hi.as_f64(),
        });
    }
    match &q.payload {
        Payload::Float(values) => {
            if values.len() != q.len {
                return Err(QuantError::PayloadLength {
                    expected: q.len,
                    found: values.len(),
                });
            }
            Ok(ParamVector::new(values.clone()))
        }
        Payload::Packed(bytes) => {
            let top = max_code(q.bits);
            let levels = S::of(top as f64);
            let span = q.hi - q.lo;
            let codes = unpack_codes(bytes, q.bits, q.len)?;
            Ok(ParamVector::new(
                codes
                    .into_iter()
                    .map(|c| {
                        if c >= top {
                            q.hi
                        } else {
                            q.lo + span * (S::of(c as f64) / levels)
                        }
                    })
                    .collect(),
            ))
        }
    }
}

/// Quantization step `(hi − lo)/(2^b − 1)`; zero for the baseline.
pub fn step<S: Real>(q: &QuantizedUpdate<S>) -> S {
    if q.bits >= BASELINE_BITS {
        S::zero()
    } else {
        (q.hi - q.lo) / S::of(max_code(q.bits) as f64)
    }
}
