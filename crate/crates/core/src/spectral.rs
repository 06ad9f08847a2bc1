//! Exponential sums over the uniform measure on `T_{2}`.
//!
//! - [`m_q`]: the weight `M_q = Σ_k b^{-q·2^k}` that a free digit at odd
//!   position `q` carries in `x_v`, exactly.
//! - [`riesz_product_sum`]: `Σ_{n<N} ∏_{q odd > J} (1/b + (b-1)/b·|cos(π r^n L b^{-q})|)`.
//! - [`l2_exponential_sum_mu`]: `∫ |Σ_{j=m+1}^{m+k} e(r^j h x)|² dμ(x)` on
//!   the truncation of `x` to `ℓ` digits, exactly by enumeration or by sampling.
//! - [`exponent_fit`]: log-log least squares for the growth exponents.
//!
//! Phases are always reduced exactly before any floating point is involved.

use crate::digits::{check_base, DigitSeq, ExactValue};
use crate::error::{Error, Result};
use crate::index::PrimeSet;
use crate::metrics::fraction;
use crate::rng::derive_seed;
use crate::toeplitz::{enumerate_tp, free_count, sample_mu, SampleSpec};
use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

/// `M_q = Σ_{k=0}^{⌊log₂(ℓ/q)⌋} b^{-q·2^k}` as `numerator / b^{q·2^K}`.
pub fn m_q(base: u32, ell: u64, q: u64) -> Result<ExactValue> {
    check_base(base)?;
    if q == 0 || q > ell {
        return Err(Error::Argument(format!("need 1 ≤ q ≤ ℓ, got q={q}, ℓ={ell}")));
    }
    // largest K with q·2^K ≤ ℓ
    let mut top = 0u32;
    while q << (top + 1) <= ell {
        top += 1;
    }
    let precision = q << top;
    let b = BigUint::from(base);
    let numerator = (0..=top).fold(BigUint::zero(), |acc, k| {
        acc + b.pow((precision - (q << k)) as u32)
    });
    Ok(ExactValue {
        numerator,
        base,
        precision: precision as usize,
    })
}

/// Exact prime factorization by trial division.
fn factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// `r` and `b` are dependent iff one is a rational power of the other, i.e.
/// they share prime support with proportional exponents.
pub fn multiplicatively_independent(b: u64, r: u64) -> bool {
    if b < 2 || r < 2 {
        return false;
    }
    let fb = factor(b);
    let fr = factor(r);
    if fb.len() != fr.len() || fb.iter().zip(&fr).any(|(x, y)| x.0 != y.0) {
        return true;
    }
    let (e0b, e0r) = (fb[0].1 as u64, fr[0].1 as u64);
    !fb.iter()
        .zip(&fr)
        .all(|(x, y)| x.1 as u64 * e0r == y.1 as u64 * e0b)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RieszQuery {
    pub base: u32,
    pub r: u64,
    pub l: BigUint,
    /// Products run over odd `q > cutoff`.
    pub cutoff: u64,
    pub n: u64,
    pub tail_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RieszReport {
    pub n: u64,
    pub sum: f64,
    /// Every neglected tail multiplies its product by a factor in
    /// `[1 - tail_rel_bound, 1]`, so the untruncated sum lies in
    /// `[sum·(1 - tail_rel_bound), sum]`.
    pub tail_rel_bound: f64,
    /// Largest number of factors evaluated for a single `n`.
    pub max_factors: u64,
}

/// Upper bound on the number of factors evaluated for one `n`.
pub const MAX_FACTORS_PER_TERM: u64 = 1 << 22;

/// Little-endian base-`b` digits of a non-negative integer.
struct Digits {
    base: u64,
    d: Vec<u64>,
}

impl Digits {
    fn from_big(x: &BigUint, base: u32) -> Self {
        let d = if x.is_zero() {
            Vec::new()
        } else {
            x.to_radix_le(base).into_iter().map(u64::from).collect()
        };
        Self { base: u64::from(base), d }
    }

    fn mul_small(&mut self, r: u64) {
        let mut carry: u128 = 0;
        for digit in self.d.iter_mut() {
            let v = *digit as u128 * r as u128 + carry;
            *digit = (v % self.base as u128) as u64;
            carry = v / self.base as u128;
        }
        while carry > 0 {
            self.d.push((carry % self.base as u128) as u64);
            carry /= self.base as u128;
        }
    }

    fn get(&self, i: i64) -> u64 {
        if i < 0 {
            0
        } else {
            self.d.get(i as usize).copied().unwrap_or(0)
        }
    }
}

/// Digits per fractional window: the largest `t` with `b^t < 2^63`.
fn window_digits(base: u64) -> (u32, u128) {
    let mut t = 0u32;
    let mut pow: u128 = 1;
    while pow * (base as u128) < 1u128 << 63 {
        pow *= base as u128;
        t += 1;
    }
    (t, pow)
}

/// `log Π (1/b + (b-1)/b·|cos(π X b^{-q})|)` over odd `q > cutoff`, stopping
/// at the first `q` with `π X b^{-q} < tail_tol`. Returns `(log product, factors)`.
fn log_riesz_product(x: &Digits, cutoff: u64, tail_tol: f64) -> Result<(f64, u64)> {
    let b = x.base;
    let bf = b as f64;
    let (t, bt) = window_digits(b);
    let len = x.d.len() as i64;
    // X / b^len ∈ [1/b, 1) from the leading digits
    let lead = (1..=t as i64).fold(0.0, |acc, i| acc + x.get(len - i) as f64 * bf.powi(-(i as i32)));
    let w_const = 1.0 / bf;
    let w_cos = (bf - 1.0) / bf;

    let mut q = cutoff + 1;
    if q.is_multiple_of(2) {
        q += 1;
    }
    // W = Σ_{i=1}^{t} d_{q-i} b^{t-i}, the t digits just below position q
    let mut w: u128 = (1..=t as i64).fold(0u128, |acc, i| acc * b as u128 + x.get(q as i64 - i) as u128);
    let mut log_prod = 0.0;
    let mut count = 0u64;
    loop {
        let q_i = q as i64;
        let phase = if q_i >= len {
            // X b^{-q} < 1: small enough to be handled in floating point
            let mag = lead * bf.powi(-((q_i - len) as i32));
            if PI * mag < tail_tol {
                break;
            }
            mag
        } else {
            w as f64 / bt as f64
        };
        log_prod += (w_const + w_cos * (PI * phase).cos().abs()).ln();
        count += 1;
        if count > MAX_FACTORS_PER_TERM {
            return Err(Error::Capacity(format!(
                "more than {MAX_FACTORS_PER_TERM} factors before the phase drops below {tail_tol}"
            )));
        }
        // slide the window up by two digits
        w = w / (b as u128 * b as u128) + (x.get(q_i) as u128 + x.get(q_i + 1) as u128 * b as u128) * (bt / (b as u128 * b as u128));
        q += 2;
    }
    Ok((log_prod, count))
}

/// `Σ_{n=0}^{N-1} ∏_{q odd, q > J} (1/b + (b-1)/b·|cos(π r^n L b^{-q})|)`.
///
/// `r^n L` is carried as exact base-`b` digits, so every phase `r^n L b^{-q}
/// mod 1` is read off digit by digit (`|cos(π·)|` has period 1).
pub fn riesz_product_sum(query: &RieszQuery) -> Result<RieszReport> {
    check_base(query.base)?;
    if !(query.tail_tol > 0.0 && query.tail_tol < 1.0) {
        return Err(Error::Argument(format!("tail_tol must lie in (0, 1), got {}", query.tail_tol)));
    }
    if !multiplicatively_independent(u64::from(query.base), query.r) {
        return Err(Error::Argument(format!(
            "r = {} is a rational power of b = {}",
            query.r, query.base
        )));
    }
    if query.l.is_zero() || query.n == 0 {
        return Err(Error::Argument("L and N must be positive".into()));
    }
    let mut x = Digits::from_big(&query.l, query.base);
    let mut logs = Vec::with_capacity(query.n as usize);
    let mut max_factors = 0;
    for n in 0..query.n {
        if n > 0 {
            x.mul_small(query.r);
        }
        let (lp, count) = log_riesz_product(&x, query.cutoff, query.tail_tol)?;
        logs.push(lp);
        max_factors = max_factors.max(count);
    }
    let terms: Vec<f64> = logs.iter().map(|l| l.exp()).collect();
    let bf = query.base as f64;
    // 1/b + (b-1)/b·|cos θ| ≥ 1 - (b-1)/(2b)·θ², and successive neglected
    // phases shrink by b² each
    let tail_rel_bound =
        ((bf - 1.0) / (2.0 * bf) * query.tail_tol * query.tail_tol / (1.0 - bf.powi(-4))).min(1.0);
    Ok(RieszReport {
        n: query.n,
        sum: pairwise_sum_f64(&terms),
        tail_rel_bound,
        max_factors,
    })
}

fn pairwise_sum_f64(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => pairwise_sum_f64(&v[..n / 2]) + pairwise_sum_f64(&v[n / 2..]),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum L2Mode {
    Exact,
    MonteCarlo { samples: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct L2Query {
    pub base: u32,
    pub r: u64,
    pub h: u64,
    pub m: u64,
    pub k: u64,
    pub ell: usize,
    pub mode: L2Mode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct L2Report {
    pub query: L2Query,
    pub value: f64,
    /// Zero in exact mode.
    pub stderr: f64,
    /// Sequences enumerated or sampled.
    pub terms: u64,
}

/// Smallest even `ℓ` with `b^ℓ > r^{m+k+1}·h`, i.e. the smallest even integer
/// larger than `(m+k+1)·log_b r + log_b h`.
pub fn minimal_truncation(base: u32, r: u64, h: u64, m: u64, k: u64) -> usize {
    let target = BigUint::from(r).pow((m + k + 1) as u32) * h;
    let b2 = BigUint::from(base).pow(2);
    let mut ell = 0usize;
    let mut pow = BigUint::one();
    while pow <= target {
        pow *= &b2;
        ell += 2;
    }
    ell
}

impl L2Query {
    pub fn validate(&self) -> Result<()> {
        check_base(self.base)?;
        if self.r < 2 || self.h == 0 || self.k == 0 {
            return Err(Error::Argument("need r ≥ 2, h ≥ 1, k ≥ 1".into()));
        }
        if !multiplicatively_independent(u64::from(self.base), self.r) {
            return Err(Error::Argument(format!(
                "r = {} is a rational power of b = {}",
                self.r, self.base
            )));
        }
        // m ≥ k + 1 + 2 log_r b  ⇔  r^{m-k-1} ≥ b²
        let ok = self.m > self.k
            && BigUint::from(self.r).pow((self.m - self.k - 1) as u32) >= BigUint::from(self.base).pow(2);
        if !ok {
            return Err(Error::Argument(format!(
                "violated m ≥ k + 1 + 2·log_r b with m={}, k={}, r={}, b={}",
                self.m, self.k, self.r, self.base
            )));
        }
        let min_ell = minimal_truncation(self.base, self.r, self.h, self.m, self.k);
        if !self.ell.is_multiple_of(2) || self.ell < min_ell {
            return Err(Error::Argument(format!(
                "violated ℓ even and ℓ ≥ {min_ell} (smallest even integer above (m+k+1)·log_b r + log_b h), got ℓ={}",
                self.ell
            )));
        }
        if let L2Mode::MonteCarlo { samples, .. } = self.mode {
            if samples < 2 {
                return Err(Error::Argument("need at least 2 samples".into()));
            }
        }
        Ok(())
    }
}

/// Multipliers `r^j h mod b^ℓ` for `j = m+1..=m+k`.
fn multipliers(q: &L2Query, modulus: &BigUint) -> Vec<BigUint> {
    let r = BigUint::from(q.r);
    (q.m + 1..=q.m + q.k)
        .map(|j| (r.modpow(&BigUint::from(j), modulus) * q.h) % modulus)
        .collect()
}

/// `|Σ_j e(c_j V / b^ℓ)|²` for the digit string `v` of length `ℓ`.
fn block_energy(v: &DigitSeq, mults: &[BigUint], modulus: &BigUint) -> f64 {
    let val = v.value().numerator;
    let s: Complex64 = mults
        .iter()
        .map(|c| Complex64::from_polar(1.0, TAU * fraction(&((c * &val) % modulus), modulus)))
        .sum();
    s.norm_sqr()
}

/// `∫ |Σ_{j=m+1}^{m+k} e(r^j h x)|² dμ(x)` with `x` truncated to `ℓ` digits.
///
/// Exact mode averages over all `b^{ℓ/2}` prefixes in `T_{2}(ℓ)` (each of
/// `μ`-mass `b^{-ℓ/2}`); Monte Carlo mode averages over independent draws from
/// `μ` seeded by `derive_seed(seed, i)` and reports the standard error.
pub fn l2_exponential_sum_mu(q: &L2Query, budget: u64) -> Result<L2Report> {
    q.validate()?;
    let two = PrimeSet::new(&[2])?;
    let modulus = BigUint::from(q.base).pow(q.ell as u32);
    let mults = multipliers(q, &modulus);
    let (value, stderr, terms) = match q.mode {
        L2Mode::Exact => {
            let members: Vec<DigitSeq> = enumerate_tp(&two, q.base, q.ell, budget)?.collect();
            let energies: Vec<f64> = members
                .par_iter()
                .map(|v| block_energy(v, &mults, &modulus))
                .collect();
            let count = energies.len();
            debug_assert_eq!(count as u64, u64::from(q.base).pow(free_count(&two, q.ell) as u32));
            (pairwise_sum_f64(&energies) / count as f64, 0.0, count as u64)
        }
        L2Mode::MonteCarlo { samples, seed } => {
            let energies: Vec<f64> = (0..samples)
                .into_par_iter()
                .map(|i| {
                    let spec = SampleSpec {
                        primes: two.clone(),
                        base: q.base,
                        len: q.ell,
                        seed: derive_seed(seed, i),
                    };
                    sample_mu(&spec).map(|v| block_energy(&v, &mults, &modulus))
                })
                .collect::<Result<_>>()?;
            let nf = samples as f64;
            let mean = pairwise_sum_f64(&energies) / nf;
            let var = energies.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (nf - 1.0);
            (mean, (var / nf).sqrt(), samples)
        }
    };
    Ok(L2Report { query: q.clone(), value, stderr, terms })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub slope: f64,
    pub intercept: f64,
    /// Euclidean norm of the log-space residuals.
    pub residual_norm: f64,
}

/// Least-squares line through `(ln scale, ln value)`.
pub fn exponent_fit(pairs: &[(f64, f64)]) -> Result<PowerFit> {
    if pairs.len() < 3 {
        return Err(Error::Argument(format!("need at least 3 points, got {}", pairs.len())));
    }
    if pairs.iter().any(|&(s, v)| !(s > 0.0 && v > 0.0 && s.is_finite() && v.is_finite())) {
        return Err(Error::Argument("scales and values must be positive and finite".into()));
    }
    let pts: Vec<(f64, f64)> = pairs.iter().map(|&(s, v)| (s.ln(), v.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Argument("scales must not all be equal".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual_norm = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(PowerFit { slope, intercept, residual_norm })
}

/// One point of a parameter sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scale: f64,
    pub value: f64,
    pub stderr: Option<f64>,
}

/// `scale,value,stderr` with an empty `stderr` cell when absent.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("scale,value,stderr\n");
    for row in rows {
        let _ = write!(out, "{},{},", row.scale, row.value);
        if let Some(e) = row.stderr {
            let _ = write!(out, "{e}");
        }
        out.push('\n');
    }
    out
}

/// Fractional part of `w·M_q`, reduced exactly.
pub fn scaled_weight_phase(w: &BigUint, mq: &ExactValue) -> f64 {
    let modulus = mq.denominator();
    fraction(&((w * &mq.numerator) % &modulus), &modulus)
}
