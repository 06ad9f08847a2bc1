//! Arithmetic on the index structure induced by a finite set of primes `P`.
//!
//! Every positive integer factors uniquely as `n = ℓ · k` where `k` lies in
//! the multiplicative monoid `K` generated by `P` and `ℓ` (the *free part*)
//! is coprime to every prime of `P`. Listing the free integers in increasing
//! order as `j_1 = 1 < j_2 < …` gives the rank `δ(n)`, the index of `ℓ` in
//! that list. Two integers are equivalent when they share the same free part.

use crate::error::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const MAX_PRIMES: usize = 8;

/// Strictly increasing list of 1 to 8 distinct primes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct PrimeSet {
    primes: Vec<u64>,
    /// `(sign, product)` for every subset whose product fits in `u64`.
    subsets: Vec<(bool, u64)>,
}

impl PrimeSet {
    /// Accepts primes in any order; duplicates and composites are rejected.
    pub fn new(primes: &[u64]) -> Result<Self> {
        if primes.is_empty() || primes.len() > MAX_PRIMES {
            return Err(Error::Argument(format!(
                "prime set must hold 1..={MAX_PRIMES} primes, got {}",
                primes.len()
            )));
        }
        let mut sorted = primes.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Argument(format!("duplicate prime in {primes:?}")));
        }
        if let Some(&p) = sorted.iter().find(|&&p| !is_prime(p)) {
            return Err(Error::Argument(format!("{p} is not prime")));
        }
        let mut subsets = Vec::with_capacity(1 << sorted.len());
        for mask in 0u32..(1 << sorted.len()) {
            let product = sorted
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .try_fold(1u64, |acc, (_, &p)| acc.checked_mul(p));
            if let Some(product) = product {
                subsets.push((mask.count_ones() % 2 == 1, product));
            }
        }
        Ok(Self {
            primes: sorted,
            subsets,
        })
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// True iff no prime of the set divides `m`.
    pub fn is_free(&self, m: u64) -> bool {
        self.primes.iter().all(|&p| !m.is_multiple_of(p))
    }

    /// `#{1 ≤ m ≤ x : m free}` by inclusion–exclusion over all subsets.
    pub fn count_free(&self, x: u64) -> u64 {
        let (plus, minus) = self
            .subsets
            .iter()
            .fold((0u64, 0u64), |(plus, minus), &(odd, d)| {
                if odd {
                    (plus, minus + x / d)
                } else {
                    (plus + x / d, minus)
                }
            });
        plus - minus
    }
}

impl TryFrom<Vec<u64>> for PrimeSet {
    type Error = Error;

    fn try_from(v: Vec<u64>) -> Result<Self> {
        PrimeSet::new(&v)
    }
}

impl From<PrimeSet> for Vec<u64> {
    fn from(p: PrimeSet) -> Self {
        p.primes
    }
}

/// Deterministic Miller–Rabin, exact for every `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in SMALL {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    let mul = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let pow = |mut a: u64, mut e: u64| {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = mul(acc, a);
            }
            a = mul(a, a);
            e >>= 1;
        }
        acc
    };
    'witness: for a in SMALL {
        let mut x = pow(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// `n = l_part · ∏ p_i^{exponents[i]}` with `rank = δ(n)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub n: u64,
    pub exponents: Vec<u32>,
    pub l_part: u64,
    pub rank: u64,
}

fn require_positive(what: &str, n: u64) -> Result<()> {
    if n == 0 {
        Err(Error::Argument(format!("{what} must be at least 1")))
    } else {
        Ok(())
    }
}

/// Splits off the primes of `P` and ranks the free part.
pub fn decompose(p: &PrimeSet, n: u64) -> Result<Decomposition> {
    require_positive("n", n)?;
    let mut l_part = n;
    let exponents = p
        .primes()
        .iter()
        .map(|&q| {
            let mut e = 0;
            while l_part.is_multiple_of(q) {
                l_part /= q;
                e += 1;
            }
            e
        })
        .collect();
    Ok(Decomposition {
        n,
        exponents,
        l_part,
        rank: p.count_free(l_part),
    })
}

/// The free part `ℓ` of `n`, without ranking it.
pub fn free_part(p: &PrimeSet, n: u64) -> u64 {
    let mut l = n;
    for &q in p.primes() {
        while l.is_multiple_of(q) {
            l /= q;
        }
    }
    l
}

/// `δ(n)`: rank of the free part of `n` among all free integers.
pub fn delta(p: &PrimeSet, n: u64) -> Result<u64> {
    require_positive("n", n)?;
    Ok(p.count_free(free_part(p, n)))
}

/// `j_k`, the `k`-th free integer, by monotone search on the counting function.
pub fn unrank_l(p: &PrimeSet, k: u64) -> Result<u64> {
    require_positive("k", k)?;
    // j_k ≤ k · ∏ p/(p-1) ≤ k · 2^r, since the count function is 1 at 1
    // and the density of free integers is ∏ (1 - 1/p) ≥ 2^{-r}.
    let mut hi = k;
    while p.count_free(hi) < k {
        hi = hi.checked_mul(2).ok_or_else(|| {
            Error::Range(format!("free integer of rank {k} exceeds u64"))
        })?;
    }
    let mut lo = hi / 2;
    // invariant: count_free(lo) < k ≤ count_free(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if p.count_free(mid) >= k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Same free part.
pub fn equivalent(p: &PrimeSet, n: u64, m: u64) -> Result<bool> {
    require_positive("n", n)?;
    require_positive("n'", m)?;
    Ok(free_part(p, n) == free_part(p, m))
}

/// Sorted elements of `K = {∏ p_i^{e_i}}` up to `bound`.
///
/// Built as a k-way merge over the lattice: each emitted element spawns its
/// multiples by every prime, deduplicated by only multiplying by primes at
/// least as large as the largest prime already used.
pub fn enumerate_k(p: &PrimeSet, bound: u64) -> Result<Vec<u64>> {
    require_positive("bound", bound)?;
    let mut out = vec![1u64];
    let primes = p.primes();
    // (value, index of largest prime factor allowed to extend it)
    let mut frontier: Vec<(u64, usize)> = vec![(1, 0)];
    while let Some((v, start)) = frontier.pop() {
        for (i, &q) in primes.iter().enumerate().skip(start) {
            match v.checked_mul(q) {
                Some(w) if w <= bound => {
                    out.push(w);
                    frontier.push((w, i));
                }
                _ => {}
            }
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Empirical evidence for the gap between consecutive equivalent integers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub scanned_bound: u64,
    /// Pairs with `n < floor` are left out of `min_ratio`.
    pub floor: u64,
    /// Minimum of `(n' - n)/√n` over consecutive equivalent pairs with
    /// `floor ≤ n < n' ≤ scanned_bound`; `None` when no pair qualifies.
    pub min_ratio: Option<f64>,
    /// The pair attaining `min_ratio`.
    pub argmin: Option<(u64, u64)>,
    /// Largest `n` whose successor gap is below `2√n`, so that every pair with
    /// `n > empirical_n0` has `n' - n ≥ 2√n`. `0` when every pair qualifies.
    pub empirical_n0: u64,
    pub pairs: u64,
}

#[derive(Clone, Copy, Default)]
struct GapAcc {
    min: Option<(f64, u64, u64)>,
    n0: u64,
    pairs: u64,
}

impl GapAcc {
    fn merge(self, other: Self) -> Self {
        let min = match (self.min, other.min) {
            (Some(a), Some(b)) => Some(if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a }),
            (a, None) => a,
            (None, b) => b,
        };
        Self {
            min,
            n0: self.n0.max(other.n0),
            pairs: self.pairs + other.pairs,
        }
    }
}

/// Scans every equivalence class inside `[1, bound]` and records how far apart
/// consecutive class members are, relative to `√n`.
///
/// The comparison against `2√n` is done exactly on integers: a gap `g` is below
/// `2√n` iff `g² < 4n`.
pub fn gap_scan(p: &PrimeSet, bound: u64, floor: u64) -> Result<GapReport> {
    if bound < 4 {
        return Err(Error::Argument(format!("gap scan bound must be ≥ 4, got {bound}")));
    }
    let k = enumerate_k(p, bound)?;
    let smallest = p.primes()[0];
    // classes with a second member inside the bound
    let top = bound / smallest;
    let acc = (1..=top)
        .into_par_iter()
        .filter(|&l| p.is_free(l))
        .fold(GapAcc::default, |mut acc, l| {
            let limit = bound / l;
            let members = k.iter().take_while(|&&kk| kk <= limit);
            let mut prev: Option<u64> = None;
            for &kk in members {
                let n1 = l * kk;
                if let Some(n) = prev {
                    let gap = n1 - n;
                    acc.pairs += 1;
                    if (gap as u128) * (gap as u128) < 4 * n as u128 {
                        acc.n0 = acc.n0.max(n);
                    }
                    if n >= floor {
                        let ratio = gap as f64 / (n as f64).sqrt();
                        let better = match acc.min {
                            None => true,
                            Some((r, bn, _)) => ratio < r || (ratio == r && n < bn),
                        };
                        if better {
                            acc.min = Some((ratio, n, n1));
                        }
                    }
                }
                prev = Some(n1);
            }
            acc
        })
        .reduce(GapAcc::default, GapAcc::merge);
    Ok(GapReport {
        scanned_bound: bound,
        floor,
        min_ratio: acc.min.map(|m| m.0),
        argmin: acc.min.map(|m| (m.1, m.2)),
        empirical_n0: acc.n0,
        pairs: acc.pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(p: &[u64]) -> PrimeSet {
        PrimeSet::new(p).unwrap()
    }

    #[test]
    fn decompose_examples() {
        let d = decompose(&ps(&[2]), 12).unwrap();
        assert_eq!((d.exponents.clone(), d.l_part, d.rank), (vec![2], 3, 2));
        let d = decompose(&ps(&[2, 3]), 1).unwrap();
        assert_eq!((d.exponents.clone(), d.l_part, d.rank), (vec![0, 0], 1, 1));
        let d = decompose(&ps(&[2, 3]), 90).unwrap();
        assert_eq!((d.exponents.clone(), d.l_part, d.rank), (vec![1, 2], 5, 2));
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta(&ps(&[2]), 1).unwrap(), 1);
        assert_eq!(delta(&ps(&[2]), 6).unwrap(), 2);
        assert_eq!(delta(&ps(&[2, 3]), 90).unwrap(), 2);
    }

    #[test]
    fn unrank_examples() {
        assert_eq!(unrank_l(&ps(&[2]), 5).unwrap(), 9);
        assert_eq!(unrank_l(&ps(&[2, 3]), 1).unwrap(), 1);
        assert_eq!(unrank_l(&ps(&[2, 3]), 3).unwrap(), 7);
    }

    #[test]
    fn unrank_near_width_limit() {
        let p = ps(&[2]);
        // j_k = 2k - 1
        assert_eq!(unrank_l(&p, 1u64 << 62).unwrap(), (1u64 << 63) - 1);
        assert!(matches!(unrank_l(&p, u64::MAX), Err(Error::Range(_))));
    }

    #[test]
    fn equivalent_examples() {
        assert!(equivalent(&ps(&[2]), 3, 12).unwrap());
        assert!(equivalent(&ps(&[2]), 7, 7).unwrap());
        // 15 = 3 · 5 has free part 5 for P = {2, 3}
        assert!(equivalent(&ps(&[2, 3]), 5, 15).unwrap());
        assert!(!equivalent(&ps(&[2, 3]), 5, 35).unwrap());
    }

    #[test]
    fn enumerate_k_examples() {
        assert_eq!(enumerate_k(&ps(&[2]), 10).unwrap(), vec![1, 2, 4, 8]);
        assert_eq!(
            enumerate_k(&ps(&[2, 3]), 20).unwrap(),
            vec![1, 2, 3, 4, 6, 8, 9, 12, 16, 18]
        );
        assert_eq!(enumerate_k(&ps(&[3, 5]), 1).unwrap(), vec![1]);
        assert_eq!(enumerate_k(&ps(&[2]), u64::MAX).unwrap().len(), 64);
    }

    #[test]
    fn zero_inputs_are_rejected() {
        let p = ps(&[2]);
        assert!(decompose(&p, 0).is_err());
        assert!(delta(&p, 0).is_err());
        assert!(unrank_l(&p, 0).is_err());
        assert!(equivalent(&p, 0, 1).is_err());
        assert!(enumerate_k(&p, 0).is_err());
    }

    #[test]
    fn prime_set_validation() {
        assert!(PrimeSet::new(&[]).is_err());
        assert!(PrimeSet::new(&[2, 2]).is_err());
        assert!(PrimeSet::new(&[4]).is_err());
        assert!(PrimeSet::new(&[2, 3, 5, 7, 11, 13, 17, 19, 23]).is_err());
        assert_eq!(PrimeSet::new(&[5, 2]).unwrap().primes(), &[2, 5]);
        assert!(PrimeSet::new(&[18446744073709551557]).is_ok());
    }

    #[test]
    fn primality_against_sieve() {
        let n = 10_000usize;
        let mut sieve = vec![true; n + 1];
        sieve[0] = false;
        sieve[1] = false;
        for i in 2..=n {
            if sieve[i] {
                for j in (i * i..=n).step_by(i) {
                    sieve[j] = false;
                }
            }
        }
        for (i, &s) in sieve.iter().enumerate() {
            assert_eq!(is_prime(i as u64), s, "{i}");
        }
        // strong pseudoprimes to small base sets
        assert!(!is_prime(3_215_031_751));
        assert!(!is_prime(3_825_123_056_546_413_051));
    }

    #[test]
    fn gap_scan_single_prime() {
        // successor of n = kℓ is 2n, so the gap is n; n ≥ 2√n iff n ≥ 4
        let r = gap_scan(&ps(&[2]), 100, 1).unwrap();
        assert!(r.empirical_n0 <= 3);
        assert_eq!(r.empirical_n0, 3);
        assert_eq!(r.argmin, Some((1, 2)));
        let r = gap_scan(&ps(&[2]), 4, 1).unwrap();
        // pairs inside [1, 4]: (1,2), (2,4)
        assert_eq!(r.pairs, 2);
        assert!(gap_scan(&ps(&[2]), 3, 1).is_err());
    }

    #[test]
    fn gap_scan_matches_direct_pairs() {
        let p = ps(&[2, 3]);
        let bound = 5000u64;
        let r = gap_scan(&p, bound, 50).unwrap();
        // oracle: group every n by free part, scan sorted members
        let mut classes: std::collections::BTreeMap<u64, Vec<u64>> = Default::default();
        for n in 1..=bound {
            let mut l = n;
            while l % 2 == 0 {
                l /= 2;
            }
            while l % 3 == 0 {
                l /= 3;
            }
            classes.entry(l).or_default().push(n);
        }
        let mut min = f64::INFINITY;
        let mut pairs = 0;
        let mut n0 = 0;
        for members in classes.values() {
            for w in members.windows(2) {
                pairs += 1;
                let g = (w[1] - w[0]) as f64;
                if g < 2.0 * (w[0] as f64).sqrt() {
                    n0 = n0.max(w[0]);
                }
                if w[0] >= 50 {
                    min = min.min(g / (w[0] as f64).sqrt());
                }
            }
        }
        assert_eq!(r.pairs, pairs);
        assert_eq!(r.empirical_n0, n0);
        assert_eq!(r.min_ratio, Some(min));
    }
}
