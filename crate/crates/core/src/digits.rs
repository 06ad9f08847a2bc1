//! Finite base-`b` digit strings.
//!
//! Positions are 1-based in every public accessor that takes an index
//! ([`DigitSeq::at`]); the backing slice is 0-based as usual.

use crate::error::{Error, Result};
use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

pub const MIN_BASE: u32 = 2;
pub const MAX_BASE: u32 = 255;

/// A finite digit string over the alphabet `{0, …, base-1}`, one digit per byte.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DigitSeq {
    base: u8,
    digits: Vec<u8>,
}

pub(crate) fn check_base(base: u32) -> Result<u8> {
    if (MIN_BASE..=MAX_BASE).contains(&base) {
        Ok(base as u8)
    } else {
        Err(Error::Argument(format!(
            "base {base} outside [{MIN_BASE}, {MAX_BASE}]"
        )))
    }
}

impl DigitSeq {
    pub fn new(base: u32, digits: Vec<u8>) -> Result<Self> {
        let b = check_base(base)?;
        if let Some((i, &d)) = digits.iter().enumerate().find(|(_, &d)| d >= b) {
            return Err(Error::Argument(format!(
                "digit {d} at position {} is not below base {base}",
                i + 1
            )));
        }
        Ok(Self { base: b, digits })
    }

    /// Builds a sequence without re-validating digits. Callers guarantee `d < base`.
    pub(crate) fn from_trusted(base: u8, digits: Vec<u8>) -> Self {
        debug_assert!(digits.iter().all(|&d| d < base));
        Self { base, digits }
    }

    pub fn zeros(base: u32, len: usize) -> Result<Self> {
        Ok(Self {
            base: check_base(base)?,
            digits: vec![0; len],
        })
    }

    pub fn base(&self) -> u32 {
        u32::from(self.base)
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    pub fn into_digits(self) -> Vec<u8> {
        self.digits
    }

    /// Digit at 1-based position `n`.
    pub fn at(&self, n: usize) -> Option<u8> {
        n.checked_sub(1).and_then(|i| self.digits.get(i).copied())
    }

    /// First `len` digits (or all of them when shorter).
    pub fn prefix(&self, len: usize) -> DigitSeq {
        Self {
            base: self.base,
            digits: self.digits[..len.min(self.digits.len())].to_vec(),
        }
    }

    /// The exact value `V / b^ℓ` of `0.v_1 v_2 … v_ℓ` in base `b`.
    pub fn value(&self) -> ExactValue {
        value_of(self)
    }
}

/// Exact rational `numerator / base^precision` with `0 ≤ numerator < base^precision`.
///
/// The fraction is deliberately kept unreduced: its denominator is always a
/// power of the base.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactValue {
    pub numerator: BigUint,
    pub base: u32,
    pub precision: usize,
}

impl ExactValue {
    pub fn denominator(&self) -> BigUint {
        BigUint::from(self.base).pow(self.precision as u32)
    }
}

/// `V = Σ v_j b^{ℓ-j}` computed exactly.
pub fn value_of(v: &DigitSeq) -> ExactValue {
    let b = BigUint::from(v.base());
    let numerator = horner(&v.digits, v.base());
    debug_assert!(numerator < b.pow(v.len() as u32) || (v.is_empty() && numerator.is_zero()));
    ExactValue {
        numerator,
        base: v.base(),
        precision: v.len(),
    }
}

/// Base-`b` Horner evaluation in machine-word chunks.
pub(crate) fn horner(digits: &[u8], base: u32) -> BigUint {
    // largest chunk with b^chunk < 2^64
    let b = u64::from(base);
    let mut chunk = 1usize;
    let mut scale = b;
    while let Some(next) = scale.checked_mul(b) {
        scale = next;
        chunk += 1;
    }
    let mut acc = BigUint::zero();
    for part in digits.chunks(chunk) {
        let mut word = 0u64;
        let mut mult = 1u64;
        for &d in part {
            word = word * b + u64::from(d);
            mult *= b;
        }
        acc = acc * mult + word;
    }
    acc
}
