//! Digit processes whose nearby digits are independent, and tools to check it.
//!
//! The counterexample process sets `X_1 X_2 X_3 = 000` and, for `n ≥ 4`,
//! `X_n = Z_{j,m}` with `j = ⌊log₂ n⌋`, `m = n mod 2Kr` and `r` the largest
//! power of two with `2^(2^r) ≤ n`. Within a dyadic block `[2^j, 2^{j+1})` the
//! digits are therefore one pattern of length `2Kr` repeated, so any `2Kr`
//! consecutive digits are independent while the block frequency of a digit
//! never averages out.

use crate::digits::{check_base, DigitSeq};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::hash::Hash;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterexampleParams {
    pub base: u32,
    /// A positive power of two.
    #[serde(rename = "K")]
    pub k: u64,
    pub seed: u64,
}

impl CounterexampleParams {
    pub fn new(base: u32, k: u64, seed: u64) -> Result<Self> {
        check_base(base)?;
        if !k.is_power_of_two() {
            return Err(Error::Argument(format!("K must be a power of two, got {k}")));
        }
        Ok(Self { base, k, seed })
    }

    /// Pattern length `2Kr` used throughout dyadic block `j ≥ 2`.
    pub fn pattern_len(&self, j: u32) -> u64 {
        2 * self.k * r_of_level(j)
    }

    /// `Z_{j,0} … Z_{j,2Kr-1}`. Each level draws from its own stream seeded by
    /// `derive_seed(seed, j)`, so the values do not depend on which other
    /// levels were materialized or in which order.
    pub fn pattern(&self, j: u32) -> Vec<u8> {
        let mut rng = rng_from_seed(derive_seed(self.seed, u64::from(j)));
        let b = self.base as u8;
        (0..self.pattern_len(j)).map(|_| rng.gen_range(0..b)).collect()
    }
}

/// Largest power of two `r` with `2^(2^r) ≤ n`, for any `n` in level `j ≥ 2`.
///
/// `2^(2^r) ≤ n` holds iff `2^r ≤ ⌊log₂ n⌋ = j`, so `r` only depends on `j`.
pub fn r_of_level(j: u32) -> u64 {
    assert!(j >= 2, "r is defined from n = 4 on");
    let lg = 31 - j.leading_zeros(); // ⌊log₂ j⌋ ≥ 1
    1u64 << (31 - lg.leading_zeros())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IndexKey {
    pub j: u32,
    pub m: u64,
    pub r: u64,
}

/// The key `(j, m, r)` selecting `Z_{j,m}` for digit `n`; `None` for `n < 4`.
pub fn index_key(params: &CounterexampleParams, n: u64) -> Option<IndexKey> {
    if n < 4 {
        return None;
    }
    let j = 63 - n.leading_zeros();
    let r = r_of_level(j);
    Some(IndexKey {
        j,
        m: n % (2 * params.k * r),
        r,
    })
}

/// The first `len` digits `X_1 … X_len` of the counterexample process.
pub fn counterexample_digits(params: &CounterexampleParams, len: usize) -> Result<DigitSeq> {
    let b = check_base(params.base)?;
    if len == 0 {
        return Err(Error::Argument("length must be at least 1".into()));
    }
    let mut out = vec![0u8; len.min(3)];
    let mut j = 2u32;
    while out.len() < len {
        let pattern = params.pattern(j);
        let start = 1usize << j;
        let end = (start << 1).min(len + 1);
        out.extend((start..end).map(|n| pattern[n % pattern.len()]));
        j += 1;
    }
    Ok(DigitSeq::from_trusted(b, out))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Certification<K> {
    /// Every window in the range had pairwise distinct keys.
    Pass { checked: u64 },
    /// The window starting at `n` contains `first < second` with equal keys.
    Violation { n: u64, first: u64, second: u64, key: K },
}

impl<K> Certification<K> {
    pub fn passed(&self) -> bool {
        matches!(self, Certification::Pass { .. })
    }
}

/// Checks, for every `n` in `start..=end`, that the keys of
/// `n, n+1, …, n+window(n)` are pairwise distinct.
///
/// Runs in linear time: with `next(i)` the next index sharing `i`'s key, the
/// window at `n` collides iff `min_{i ≥ n} next(i) ≤ n + window(n)`.
pub fn window_certify<K, F, W>(keymap: F, start: u64, end: u64, window: W) -> Result<Certification<K>>
where
    K: Hash + Eq + Clone,
    F: Fn(u64) -> K,
    W: Fn(u64) -> u64,
{
    if start == 0 || start > end {
        return Err(Error::Argument(format!("bad index range {start}..={end}")));
    }
    let ends: Vec<u64> = (start..=end)
        .map(|n| n.checked_add(window(n)).ok_or_else(|| Error::Range(format!("window at {n} overflows"))))
        .collect::<Result<_>>()?;
    let top = ends.iter().copied().max().unwrap_or(end).max(end);
    let span = (top - start + 1) as usize;

    let keys: Vec<K> = (start..=top).map(&keymap).collect();
    let mut next_same = vec![u64::MAX; span];
    let mut last: HashMap<&K, u64> = HashMap::with_capacity(span);
    for i in (0..span).rev() {
        if let Some(&nx) = last.get(&keys[i]) {
            next_same[i] = nx;
        }
        last.insert(&keys[i], start + i as u64);
    }
    let mut suffix_min = next_same.clone();
    for i in (0..span - 1).rev() {
        suffix_min[i] = suffix_min[i].min(suffix_min[i + 1]);
    }
    for (offset, &e) in ends.iter().enumerate() {
        if suffix_min[offset] <= e {
            let n = start + offset as u64;
            let i = (offset..span)
                .find(|&i| next_same[i] <= e)
                .expect("suffix minimum is attained");
            return Ok(Certification::Violation {
                n,
                first: start + i as u64,
                second: next_same[i],
                key: keys[i].clone(),
            });
        }
    }
    Ok(Certification::Pass { checked: end - start + 1 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicRow {
    pub j: u32,
    pub digit: u8,
    /// `|freq − 1/b|` of `digit` inside `[2^j, 2^{j+1})`.
    pub deviation: f64,
    pub pattern_len: Option<u64>,
    pub repeats: Option<u64>,
    pub structure_ok: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicReport {
    pub rows: Vec<DyadicRow>,
}

impl DyadicReport {
    pub fn max_deviation_in(&self, levels: std::ops::RangeInclusive<u32>) -> f64 {
        self.rows
            .iter()
            .filter(|r| levels.contains(&r.j))
            .map(|r| r.deviation)
            .fold(0.0, f64::max)
    }
}

/// Per dyadic block fully inside `x`: the deviation of `u`'s frequency from
/// `1/b` and, when `params` is given, whether the block is its first `2Kr`
/// digits repeated `2^j/(2Kr)` times.
///
/// Levels 0 and 1 (positions 1 to 3) are the all-zero prefix and are reported
/// as a length-1 pattern.
pub fn dyadic_block_report(
    x: &DigitSeq,
    u: u8,
    params: Option<&CounterexampleParams>,
) -> Result<DyadicReport> {
    if u32::from(u) >= x.base() {
        return Err(Error::Argument(format!("digit {u} not below base {}", x.base())));
    }
    let d = x.digits();
    let inv_b = 1.0 / x.base() as f64;
    let mut rows = Vec::new();
    let mut j = 0u32;
    while (1usize << (j + 1)) - 1 <= d.len() {
        let block = &d[(1usize << j) - 1..(1usize << (j + 1)) - 1];
        let hits = block.iter().filter(|&&c| c == u).count();
        let deviation = (hits as f64 / block.len() as f64 - inv_b).abs();
        let (pattern_len, repeats, structure_ok) = match params {
            None => (None, None, None),
            Some(p) => {
                let size = block.len() as u64;
                let plen = if j < 2 { 1 } else { p.pattern_len(j) };
                let ok = if j < 2 {
                    block.iter().all(|&c| c == 0)
                } else {
                    size.is_multiple_of(plen)
                        && block
                            .chunks(plen as usize)
                            .all(|c| c == &block[..plen as usize])
                };
                (Some(plen), Some(size / plen), Some(ok))
            }
        };
        rows.push(DyadicRow {
            j,
            digit: u,
            deviation,
            pattern_len,
            repeats,
            structure_ok,
        });
        j += 1;
    }
    Ok(DyadicReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::{delta, PrimeSet};

    fn params(seed: u64) -> CounterexampleParams {
        CounterexampleParams::new(2, 1, seed).unwrap()
    }

    /// r by its definition: largest power of two r with 2^(2^r) ≤ n.
    fn r_brute(n: u64) -> u64 {
        let mut r = 1u64;
        loop {
            let e = 1u64 << (2 * r); // 2^(next r)
            if e >= 64 || (1u64 << e) > n {
                return r;
            }
            r *= 2;
        }
    }

    #[test]
    fn r_matches_definition() {
        for n in 4..200_000u64 {
            assert_eq!(r_of_level(63 - n.leading_zeros()), r_brute(n), "n={n}");
        }
        assert_eq!(r_of_level(16), 4);
        assert_eq!(r_of_level(255), 4);
        assert_eq!(r_of_level(256), 8);
    }

    #[test]
    fn key_invariants() {
        let p = params(0);
        for n in 4..100_000u64 {
            let k = index_key(&p, n).unwrap();
            assert!(1u64 << k.j <= n && n < 1u64 << (k.j + 1));
            assert!(1u64 << (1u64 << k.r) <= n);
            let next = 1u64 << (2 * k.r);
            assert!(next >= 64 || (1u64 << next) > n);
            assert!(k.m < 2 * p.k * k.r);
        }
        assert_eq!(index_key(&p, 3), None);
    }

    #[test]
    fn level_four_pattern_repeats_four_times() {
        let p = params(17);
        let x = counterexample_digits(&p, 31).unwrap();
        let z = p.pattern(4);
        assert_eq!(z.len(), 4);
        for n in 16..=31usize {
            assert_eq!(index_key(&p, n as u64).unwrap().r, 2);
            assert_eq!(x.at(n), Some(z[n % 4]));
        }
        assert_eq!(x.digits()[15..31], [z.clone(), z.clone(), z.clone(), z].concat());
    }

    #[test]
    fn level_sixteen_pattern() {
        let p = params(5);
        let x = counterexample_digits(&p, (1 << 17) - 1).unwrap();
        let rep = dyadic_block_report(&x, 0, Some(&p)).unwrap();
        let row = &rep.rows[16];
        assert_eq!((row.pattern_len, row.repeats, row.structure_ok), (Some(8), Some(8192), Some(true)));
        assert_eq!(&x.digits()[(1 << 16) - 1..(1 << 16) + 7], &p.pattern(16)[..]);
    }

    #[test]
    fn prefix_and_determinism() {
        assert_eq!(counterexample_digits(&params(1), 3).unwrap().digits(), &[0, 0, 0]);
        let a = counterexample_digits(&params(9), 5000).unwrap();
        assert_eq!(a, counterexample_digits(&params(9), 5000).unwrap());
        assert_eq!(a.prefix(1000), counterexample_digits(&params(9), 1000).unwrap());
        assert!(CounterexampleParams::new(2, 3, 0).is_err());
        assert!(CounterexampleParams::new(2, 0, 0).is_err());
    }

    #[test]
    fn r_lower_bound_per_level() {
        for j in 2..=30u32 {
            assert!(r_of_level(j) as f64 >= ((j + 1) as f64).log2() / 2.0, "j={j}");
        }
    }

    #[test]
    fn certify_constant_key_fails_immediately() {
        let c = window_certify(|_| 0u8, 1, 100, |_| 1).unwrap();
        assert_eq!(c, Certification::Violation { n: 1, first: 1, second: 2, key: 0 });
    }

    #[test]
    fn certify_counterexample_keys() {
        for k in [1u64, 2, 4] {
            let p = CounterexampleParams::new(3, k, 0).unwrap();
            let c = window_certify(
                |n| index_key(&p, n).map(|key| (key.j, key.m)),
                4,
                300_000,
                |n| 2 * p.k * index_key(&p, n).unwrap().r - 1,
            )
            .unwrap();
            assert!(c.passed(), "K={k}: {c:?}");
            // one step wider always collides
            let c = window_certify(
                |n| index_key(&p, n).map(|key| (key.j, key.m)),
                4,
                300_000,
                |n| 2 * p.k * index_key(&p, n).unwrap().r,
            )
            .unwrap();
            assert!(!c.passed());
        }
    }

    #[test]
    fn certify_matches_brute_force() {
        let ps = PrimeSet::new(&[2, 3]).unwrap();
        let key = |n: u64| delta(&ps, n).unwrap();
        let win = |n: u64| (n as f64).sqrt() as u64 * 2 + n % 3;
        let brute = |start: u64, end: u64| {
            for n in start..=end {
                let mut seen = std::collections::HashSet::new();
                for i in n..=n + win(n) {
                    if !seen.insert(key(i)) {
                        return Some(n);
                    }
                }
            }
            None
        };
        for start in [1u64, 10, 40, 90] {
            let got = match window_certify(key, start, 3000, win).unwrap() {
                Certification::Pass { .. } => None,
                Certification::Violation { n, first, second, .. } => {
                    assert_eq!(key(first), key(second));
                    Some(n)
                }
            };
            assert_eq!(got, brute(start, 3000), "start={start}");
        }
    }

    #[test]
    fn dyadic_all_zero() {
        let z = DigitSeq::zeros(2, 1023).unwrap();
        let rep = dyadic_block_report(&z, 0, None).unwrap();
        assert_eq!(rep.rows.len(), 10);
        assert!(rep.rows.iter().all(|r| r.deviation == 0.5 && r.structure_ok.is_none()));
    }

    #[test]
    fn dyadic_structure_detects_corruption() {
        let p = params(3);
        let mut d = counterexample_digits(&p, (1 << 12) - 1).unwrap().into_digits();
        d[(1 << 10) + 5] ^= 1;
        let x = DigitSeq::new(2, d).unwrap();
        let rep = dyadic_block_report(&x, 0, Some(&p)).unwrap();
        let bad: Vec<u32> = rep
            .rows
            .iter()
            .filter(|r| r.structure_ok == Some(false))
            .map(|r| r.j)
            .collect();
        assert_eq!(bad, vec![10]);
    }
}
