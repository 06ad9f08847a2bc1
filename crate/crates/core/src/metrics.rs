//! Finite-N normality statistics.
//!
//! Block frequencies are reported as the largest deviation of any length-`k`
//! word's empirical frequency from `b^{-k}`. Aligned counting reads the
//! sequence as base-`b^k` digits (blocks at positions `1, k+1, 2k+1, …`);
//! sliding counting uses every starting position.
//!
//! Weyl sums `S_N = Σ_{n=1}^{N} e(r^n h x)` are evaluated with exact modular
//! phases: `r^n h V mod b^ℓ` is carried as a big integer and only the final
//! fraction, truncated to 64 bits, is handed to floating point.

use crate::digits::DigitSeq;
use crate::error::{Error, Result};
use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::f64::consts::TAU;

/// Dense tables are used while `b^k` stays below this many cells.
const DENSE_LIMIT: u64 = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockMode {
    Aligned,
    Sliding,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreqReport {
    pub base: u32,
    pub block_len: usize,
    pub mode: BlockMode,
    /// Number of blocks counted.
    pub n: u64,
    /// Occurring words only; see [`word_key`] for the key format.
    pub counts: BTreeMap<String, u64>,
    pub max_dev: f64,
}

/// Digits written out directly for bases up to 10, dot-separated above.
pub fn word_key(word: &[u8], base: u32) -> String {
    if base <= 10 {
        word.iter().map(|&d| char::from(b'0' + d)).collect()
    } else {
        word.iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(".")
    }
}

fn block_counts(
    x: &DigitSeq,
    k: usize,
    mode: BlockMode,
) -> Result<(u64, BTreeMap<String, u64>, f64)> {
    if k == 0 {
        return Err(Error::Argument("block length must be at least 1".into()));
    }
    if x.len() < k {
        return Err(Error::Precondition(format!(
            "sequence of length {} is shorter than block length {k}",
            x.len()
        )));
    }
    let base = x.base();
    let d = x.digits();
    let starts: Box<dyn Iterator<Item = usize>> = match mode {
        BlockMode::Aligned => Box::new((0..d.len() / k).map(move |i| i * k)),
        BlockMode::Sliding => Box::new(0..=d.len() - k),
    };
    let words = u64::from(base).checked_pow(k as u32);
    let mut counts = BTreeMap::new();
    let mut n = 0u64;
    let mut distinct = 0u64;
    let mut max_count = 0u64;
    let mut min_seen = u64::MAX;

    match words.filter(|&w| w <= DENSE_LIMIT) {
        Some(w) => {
            let mut table = vec![0u64; w as usize];
            for s in starts {
                let code = d[s..s + k]
                    .iter()
                    .fold(0usize, |acc, &c| acc * base as usize + c as usize);
                table[code] += 1;
                n += 1;
            }
            let mut word = vec![0u8; k];
            for (code, &c) in table.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let mut rest = code;
                for slot in word.iter_mut().rev() {
                    *slot = (rest % base as usize) as u8;
                    rest /= base as usize;
                }
                counts.insert(word_key(&word, base), c);
            }
        }
        None => {
            let mut table: HashMap<&[u8], u64> = HashMap::new();
            for s in starts {
                *table.entry(&d[s..s + k]).or_default() += 1;
                n += 1;
            }
            for (w, c) in table {
                counts.insert(word_key(w, base), c);
            }
        }
    }
    for &c in counts.values() {
        distinct += 1;
        max_count = max_count.max(c);
        min_seen = min_seen.min(c);
    }

    let target = match words {
        Some(w) => 1.0 / w as f64,
        None => (base as f64).powi(-(k as i32)),
    };
    let nf = n as f64;
    let mut max_dev = (max_count as f64 / nf - target).abs();
    max_dev = max_dev.max((min_seen as f64 / nf - target).abs());
    if words.is_none_or(|w| distinct < w) {
        // some word never occurs
        max_dev = max_dev.max(target);
    }
    Ok((n, counts, max_dev.clamp(0.0, 1.0)))
}

/// Counts the words at positions `1, k+1, 2k+1, …`.
pub fn aligned_block_freq(x: &DigitSeq, k: usize) -> Result<FreqReport> {
    let (n, counts, max_dev) = block_counts(x, k, BlockMode::Aligned)?;
    Ok(FreqReport {
        base: x.base(),
        block_len: k,
        mode: BlockMode::Aligned,
        n,
        counts,
        max_dev,
    })
}

/// Counts the words at every position `1, …, len-k+1`.
pub fn sliding_block_freq(x: &DigitSeq, k: usize) -> Result<FreqReport> {
    let (n, counts, max_dev) = block_counts(x, k, BlockMode::Sliding)?;
    Ok(FreqReport {
        base: x.base(),
        block_len: k,
        mode: BlockMode::Sliding,
        n,
        counts,
        max_dev,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub block_len: usize,
    pub max_dev: f64,
}

/// Aligned `max_dev` for `k = 1..=kmax`, i.e. simple-normality deviations to
/// bases `b, b², …, b^kmax`.
pub fn normality_score(x: &DigitSeq, kmax: usize) -> Result<Vec<ScoreRow>> {
    if kmax == 0 {
        return Err(Error::Argument("kmax must be at least 1".into()));
    }
    (1..=kmax)
        .map(|k| {
            aligned_block_freq(x, k).map(|r| ScoreRow {
                block_len: k,
                max_dev: r.max_dev,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylReport {
    pub r: u64,
    pub h: u64,
    pub n: u64,
    /// Number of digits of `x` used, the exponent `ℓ` of the modulus `b^ℓ`.
    pub precision: usize,
    /// `|S_N| / N`.
    pub value: f64,
}

/// Smallest digit count `ℓ` with `r^N · h · 2^64 ≤ b^ℓ`.
pub fn weyl_required_len(base: u32, r: u64, h: u64, n: u64) -> usize {
    let need = (BigUint::from(r).pow(n as u32) * h) << 64u32;
    let b = BigUint::from(base);
    // start from the floating estimate and correct exactly
    let est = (need.bits() as f64 / (base as f64).log2()).floor() as usize;
    let mut len = est.saturating_sub(2);
    let mut pow = b.pow(len as u32);
    while pow < need {
        pow *= &b;
        len += 1;
    }
    len
}

/// `frac = y / modulus`, truncated to 64 fractional bits.
pub(crate) fn fraction(y: &BigUint, modulus: &BigUint) -> f64 {
    let scaled: BigUint = (y << 64u32) / modulus;
    scaled.to_u64().expect("y < modulus") as f64 / 18446744073709551616.0
}

/// The phases `(r^n h V mod b^ℓ) / b^ℓ` for `n = 1..=N`, each exact before
/// the final 64-bit truncation.
pub fn weyl_phases(x: &DigitSeq, r: u64, h: u64, n: u64) -> Vec<f64> {
    let v = x.value();
    let modulus = v.denominator();
    let r = BigUint::from(r);
    let mut y = (v.numerator * h) % &modulus;
    (0..n)
        .map(|_| {
            y = (&y * &r) % &modulus;
            fraction(&y, &modulus)
        })
        .collect()
}

/// Sums with a fixed balanced-tree shape, independent of thread count.
pub(crate) fn pairwise_sum(terms: &[Complex64]) -> Complex64 {
    match terms.len() {
        0 => Complex64::zero(),
        1 => terms[0],
        len => {
            let (lo, hi) = terms.split_at(len / 2);
            let (a, b) = if len > 4096 {
                rayon::join(|| pairwise_sum(lo), || pairwise_sum(hi))
            } else {
                (pairwise_sum(lo), pairwise_sum(hi))
            };
            a + b
        }
    }
}

/// `|Σ_{n=1}^{N} e(r^n h x)| / N` for `x = 0.x_1 x_2 … x_ℓ` in base `b`.
pub fn weyl_sum(x: &DigitSeq, r: u64, h: u64, n: u64) -> Result<WeylReport> {
    if r < 2 {
        return Err(Error::Argument(format!("r must be at least 2, got {r}")));
    }
    if h == 0 || n == 0 {
        return Err(Error::Argument("h and N must be positive".into()));
    }
    let required = weyl_required_len(x.base(), r, h, n);
    if x.len() < required {
        return Err(Error::Precondition(format!(
            "weyl sum with r={r}, h={h}, N={n} in base {} needs at least {required} digits, got {}",
            x.base(),
            x.len()
        )));
    }
    let terms: Vec<Complex64> = weyl_phases(x, r, h, n)
        .into_iter()
        .map(|phi| Complex64::from_polar(1.0, TAU * phi))
        .collect();
    let s = pairwise_sum(&terms);
    Ok(WeylReport {
        r,
        h,
        n,
        precision: x.len(),
        value: (s.norm() / n as f64).min(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toeplitz::sample_iid;

    fn seq(base: u32, d: &[u8]) -> DigitSeq {
        DigitSeq::new(base, d.to_vec()).unwrap()
    }

    fn total(r: &FreqReport) -> u64 {
        r.counts.values().sum()
    }

    #[test]
    fn aligned_examples() {
        let z = DigitSeq::zeros(2, 1000).unwrap();
        let r = aligned_block_freq(&z, 1).unwrap();
        assert_eq!(r.counts.get("0"), Some(&1000));
        assert_eq!(r.max_dev, 0.5);

        let alt: Vec<u8> = (0..200).map(|i| (i % 2) as u8).collect();
        let r = aligned_block_freq(&seq(2, &alt), 2).unwrap();
        assert_eq!(r.n, 100);
        assert_eq!(r.counts.get("01"), Some(&100));
        assert_eq!(r.max_dev, 0.75);
    }

    #[test]
    fn sliding_examples() {
        let r = sliding_block_freq(&seq(2, &[0, 0, 0]), 2).unwrap();
        assert_eq!(r.counts.get("00"), Some(&2));
        assert_eq!(r.n, 2);
        let r = sliding_block_freq(&seq(2, &[0, 1, 1, 0]), 2).unwrap();
        let expect: BTreeMap<String, u64> =
            [("01", 1), ("11", 1), ("10", 1)].map(|(w, c)| (w.to_string(), c)).into();
        assert_eq!(r.counts, expect);
    }

    #[test]
    fn zero_block_len_and_short_input() {
        let s = seq(2, &[0, 1]);
        assert!(matches!(aligned_block_freq(&s, 0), Err(Error::Argument(_))));
        assert!(matches!(sliding_block_freq(&s, 0), Err(Error::Argument(_))));
        assert!(aligned_block_freq(&s, 3).is_err());
        assert!(normality_score(&s, 3).is_err());
    }

    #[test]
    fn k1_aligned_equals_sliding() {
        let x = sample_iid(5, 3001, 3).unwrap();
        let a = aligned_block_freq(&x, 1).unwrap();
        let s = sliding_block_freq(&x, 1).unwrap();
        assert_eq!((a.n, &a.counts, a.max_dev), (s.n, &s.counts, s.max_dev));
    }

    #[test]
    fn counts_are_conserved() {
        for (base, k, len) in [(2, 5, 1003), (3, 4, 500), (255, 2, 4000), (200, 3, 999)] {
            let x = sample_iid(base, len, 11).unwrap();
            let a = aligned_block_freq(&x, k).unwrap();
            assert_eq!(total(&a), a.n);
            assert_eq!(a.n, (len / k) as u64);
            let s = sliding_block_freq(&x, k).unwrap();
            assert_eq!(total(&s), s.n);
            assert_eq!(s.n, (len - k + 1) as u64);
            assert!((0.0..=1.0).contains(&a.max_dev));
        }
    }

    #[test]
    fn sparse_path_matches_dense_semantics() {
        // 200^3 words exceed the dense table limit
        let x = sample_iid(200, 3000, 5).unwrap();
        let r = aligned_block_freq(&x, 3).unwrap();
        let expect_dev = r
            .counts
            .values()
            .map(|&c| (c as f64 / 1000.0 - 1.0 / 8e6).abs())
            .fold(1.0 / 8e6, f64::max);
        assert!((r.max_dev - expect_dev).abs() < 1e-15);
        assert!(r.counts.keys().all(|k| k.split('.').count() == 3));
    }

    #[test]
    fn all_zero_score() {
        let z = DigitSeq::zeros(3, 600).unwrap();
        for row in normality_score(&z, 4).unwrap() {
            let expect = 1.0 - 3f64.powi(-(row.block_len as i32));
            assert!((row.max_dev - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn word_keys() {
        assert_eq!(word_key(&[1, 0, 9], 10), "109");
        assert_eq!(word_key(&[1, 0, 10], 11), "1.0.10");
    }

    #[test]
    fn weyl_all_zero_is_one() {
        let z = DigitSeq::zeros(2, 400).unwrap();
        let r = weyl_sum(&z, 3, 1, 200).unwrap();
        assert_eq!(r.value, 1.0);
    }

    #[test]
    fn weyl_guard() {
        let x = sample_iid(2, 100, 1).unwrap();
        // 3^30 · 2^64 needs 48 + 64 = 112 binary digits
        let err = weyl_sum(&x, 3, 1, 30).unwrap_err();
        match err {
            Error::Precondition(m) => assert!(m.contains("112"), "{m}"),
            e => panic!("{e:?}"),
        }
        assert_eq!(weyl_required_len(2, 3, 1, 30), 112);
        assert_eq!(weyl_required_len(2, 2, 1, 10), 74);
        assert_eq!(weyl_required_len(10, 10, 1, 5), 25);
        assert!(weyl_sum(&x, 1, 1, 1).is_err());
        assert!(weyl_sum(&x, 3, 0, 1).is_err());
    }

    #[test]
    fn phases_match_direct_powers() {
        let x = sample_iid(7, 300, 9).unwrap();
        let v = x.value();
        let m = v.denominator();
        let phases = weyl_phases(&x, 5, 3, 60);
        for (i, &phi) in phases.iter().enumerate() {
            let n = i as u32 + 1;
            let direct = (BigUint::from(5u32).pow(n) * 3u32 * &v.numerator) % &m;
            assert_eq!(phi, fraction(&direct, &m), "n={n}");
        }
    }

    #[test]
    fn rational_phases_are_exact() {
        // x = 0.(001)^∞ truncated at 12 binary digits is 585/4096; with r = 8
        // every phase shifts the period by three digits.
        let x = seq(2, &[0, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0, 1]);
        let phases = weyl_phases(&x, 8, 1, 3);
        assert_eq!(phases, vec![584.0 / 4096.0, 576.0 / 4096.0, 512.0 / 4096.0]);
    }

    #[test]
    fn appended_digits_do_not_move_the_value() {
        let x = sample_iid(2, 1500, 21).unwrap();
        let base = weyl_sum(&x.prefix(1200), 3, 1, 600).unwrap();
        let longer = weyl_sum(&x, 3, 1, 600).unwrap();
        assert!((base.value - longer.value).abs() < 1e-12);
    }

    #[test]
    fn pairwise_sum_is_exact_on_integers() {
        let terms: Vec<Complex64> = (0..10_000).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let s = pairwise_sum(&terms);
        assert_eq!(s, Complex64::new(49_995_000.0, 10_000.0));
    }
}
