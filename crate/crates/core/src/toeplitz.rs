//! The Toeplitz transform `τ_P` on finite prefixes.
//!
//! `τ_P` spreads a free digit stream `a_1 a_2 …` over the positions of a
//! Toeplitz sequence: `t_n = a_{δ(n)}`. The image satisfies `t_n = t_{n·p}`
//! for every `p ∈ P`, and every sequence with that property arises this way,
//! its free digits sitting at the positions coprime to `P`.

use crate::digits::{check_base, DigitSeq};
use crate::error::{Error, Result};
use crate::index::PrimeSet;
use crate::rng::rng_from_seed;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Default cap on the number of sequences an exhaustive enumeration may yield.
pub const DEFAULT_BUDGET: u64 = 1 << 24;

/// Number of free positions `#(L ∩ [1, len])`.
pub fn free_count(p: &PrimeSet, len: usize) -> usize {
    p.count_free(len as u64) as usize
}

/// The earlier (1-based) position that position `n` copies, or `None` when `n` is free.
fn source_of(p: &PrimeSet, n: usize) -> Option<usize> {
    p.primes()
        .iter()
        .find(|&&q| (n as u64).is_multiple_of(q))
        .map(|&q| n / q as usize)
}

/// `t_n = a_{δ(n)}` for `n = 1..=len`.
pub fn toeplitz_transform(p: &PrimeSet, a: &DigitSeq, len: usize) -> Result<DigitSeq> {
    let needed = free_count(p, len);
    if a.len() < needed {
        return Err(Error::Precondition(format!(
            "free digit a_{} is missing: producing {len} positions needs {needed} free digits, input has {}",
            a.len() + 1,
            a.len()
        )));
    }
    Ok(DigitSeq::from_trusted(
        a.base() as u8,
        spread(p, a.digits(), len),
    ))
}

fn spread(p: &PrimeSet, free: &[u8], len: usize) -> Vec<u8> {
    let mut t = Vec::with_capacity(len);
    let mut next = 0;
    for n in 1..=len {
        let d = match source_of(p, n) {
            Some(src) => t[src - 1],
            None => {
                next += 1;
                free[next - 1]
            }
        };
        t.push(d);
    }
    t
}

/// Reads the digits at the free positions `j_1 < j_2 < …` of `t`.
pub fn extract_free(p: &PrimeSet, t: &DigitSeq) -> DigitSeq {
    let digits = t
        .digits()
        .iter()
        .enumerate()
        .filter(|(i, _)| p.is_free(*i as u64 + 1))
        .map(|(_, &d)| d)
        .collect();
    DigitSeq::from_trusted(t.base() as u8, digits)
}

/// A position `n` whose digit differs from the digit at `n · p_i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub n: usize,
    /// 1-based index of the prime in the (sorted) prime set.
    pub i: usize,
}

/// Every `(n, i)` with `n·p_i ≤ len(t)` and `t_n ≠ t_{n·p_i}`, ordered by `n` then `i`.
pub fn is_toeplitz(p: &PrimeSet, t: &DigitSeq) -> Vec<Violation> {
    let d = t.digits();
    let len = d.len();
    let mut out = Vec::new();
    for n in 1..=len {
        for (i, &q) in p.primes().iter().enumerate() {
            let Some(m) = (n as u64).checked_mul(q) else { continue };
            if m > len as u64 {
                continue;
            }
            if d[n - 1] != d[m as usize - 1] {
                out.push(Violation { n, i: i + 1 });
            }
        }
    }
    out
}

/// True iff [`is_toeplitz`] would report nothing; stops at the first violation.
pub fn is_toeplitz_member(p: &PrimeSet, t: &DigitSeq) -> bool {
    let d = t.digits();
    (1..=d.len()).all(|m| match source_of(p, m) {
        // t_m = t_{m/p} for a single p ∈ P chains every position to its free part
        Some(src) => d[m - 1] == d[src - 1],
        None => true,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub primes: PrimeSet,
    pub base: u32,
    pub len: usize,
    pub seed: u64,
}

/// Draws the free digits i.i.d. uniform from ChaCha8 seeded with `spec.seed`
/// and pushes them through `τ_P`. This is a length-`len` draw from `μ`.
pub fn sample_mu(spec: &SampleSpec) -> Result<DigitSeq> {
    let b = check_base(spec.base)?;
    if spec.len == 0 {
        return Err(Error::Argument("sample length must be at least 1".into()));
    }
    let m = free_count(&spec.primes, spec.len);
    let mut rng = rng_from_seed(spec.seed);
    let free: Vec<u8> = (0..m).map(|_| rng.gen_range(0..b)).collect();
    Ok(DigitSeq::from_trusted(b, spread(&spec.primes, &free, spec.len)))
}

/// i.i.d. uniform digits, the baseline `μ` is compared against.
pub fn sample_iid(base: u32, len: usize, seed: u64) -> Result<DigitSeq> {
    let b = check_base(base)?;
    let mut rng = rng_from_seed(seed);
    Ok(DigitSeq::from_trusted(
        b,
        (0..len).map(|_| rng.gen_range(0..b)).collect(),
    ))
}

/// All length-`len` prefixes of members of `T_P`, ordered lexicographically
/// by their free digits.
pub fn enumerate_tp(p: &PrimeSet, base: u32, len: usize, budget: u64) -> Result<TpEnumerator> {
    let b = check_base(base)?;
    let free = free_count(p, len);
    let total = u64::from(b)
        .checked_pow(free as u32)
        .filter(|&c| c <= budget)
        .ok_or_else(|| {
            Error::Capacity(format!(
                "{base}^{free} prefixes of length {len} exceed the enumeration budget {budget}"
            ))
        })?;
    Ok(TpEnumerator {
        primes: p.clone(),
        base: b,
        len,
        free: vec![0; free],
        remaining: total,
    })
}

pub struct TpEnumerator {
    primes: PrimeSet,
    base: u8,
    len: usize,
    free: Vec<u8>,
    remaining: u64,
}

impl TpEnumerator {
    pub fn total(&self) -> u64 {
        self.remaining
    }
}

impl Iterator for TpEnumerator {
    type Item = DigitSeq;

    fn next(&mut self) -> Option<DigitSeq> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let out = DigitSeq::from_trusted(self.base, spread(&self.primes, &self.free, self.len));
        // odometer, last free digit fastest
        for d in self.free.iter_mut().rev() {
            *d += 1;
            if *d < self.base {
                break;
            }
            *d = 0;
        }
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.remaining as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for TpEnumerator {}
