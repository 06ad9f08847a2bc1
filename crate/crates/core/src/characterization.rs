//! Block structure of `τ_P(x)` for `P = {p1, p2}`.
//!
//! Cut `τ_P(x)` into windows `w_1 w_2 …` of length `(p1 p2)^{k+1}`. Removing
//! the positions `J` divisible by `p1^{k+1}` or `p2^{k+1}` leaves, in every
//! window, digits of `x` that come from `(k+1)²` runs of consecutive positions
//! of `x`. One fixed permutation `σ` reorders the survivors into those runs,
//! concatenated with `(i1, i2)` in lexicographic order, the run for `(i1, i2)`
//! having length `(p1-1)(p2-1)·p1^{i1}·p2^{i2}` and starting at
//! `(p1-1)(p2-1)·p1^{i1}·p2^{i2}·(i-1) + 1` for window `i`.
//!
//! The joint-frequency estimator looks for words `u_{i1,i2}` at positions
//! `(p1-1)(p2-1)·p1^{i1}·p2^{i2}·n + offset_{i1,i2}` and compares with the
//! independent target `b^{-Σ|u|}`.

use crate::digits::DigitSeq;
use crate::error::{Error, Result};
use crate::index::{is_prime, PrimeSet};
use crate::toeplitz::{free_count, is_toeplitz_member, toeplitz_transform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemovalSet {
    pub p1: u64,
    pub p2: u64,
    pub k: u32,
    pub i_size: usize,
    /// Sorted positions in `[1, i_size]` removed by `ρ_J`.
    pub j: Vec<usize>,
}

impl RemovalSet {
    pub fn kept_len(&self) -> usize {
        self.i_size - self.j.len()
    }

    fn unit(&self) -> usize {
        ((self.p1 - 1) * (self.p2 - 1)) as usize
    }

    /// Run length `(p1-1)(p2-1)·p1^a·p2^b` for block `(a, b)`.
    pub fn block_len(&self, a: u32, b: u32) -> usize {
        self.unit() * self.p1.pow(a) as usize * self.p2.pow(b) as usize
    }
}

fn checked_pow(p: u64, e: u32) -> Result<u64> {
    p.checked_pow(e)
        .filter(|&v| v <= usize::MAX as u64)
        .ok_or_else(|| Error::Range(format!("{p}^{e} overflows")))
}

pub fn removal_set(p1: u64, p2: u64, k: u32) -> Result<RemovalSet> {
    if p1 == p2 || !is_prime(p1) || !is_prime(p2) {
        return Err(Error::Argument(format!(
            "need two distinct primes, got ({p1}, {p2})"
        )));
    }
    let q1 = checked_pow(p1, k + 1)?;
    let q2 = checked_pow(p2, k + 1)?;
    let i_size = q1
        .checked_mul(q2)
        .filter(|&v| v <= 1 << 32)
        .ok_or_else(|| Error::Range(format!("window ({p1}·{p2})^{} too large", k + 1)))?;
    let j: Vec<usize> = (1..=i_size)
        .filter(|&x| x % q1 == 0 || x % q2 == 0)
        .map(|x| x as usize)
        .collect();
    assert_eq!(j.len() as u64, q1 + q2 - 1, "|J| = p1^(k+1) + p2^(k+1) - 1");
    assert_eq!(i_size - j.len() as u64, (q1 - 1) * (q2 - 1));
    Ok(RemovalSet {
        p1,
        p2,
        k,
        i_size: i_size as usize,
        j,
    })
}

/// Drops the symbols of `w` at the positions in `J`.
pub fn rho_j(rs: &RemovalSet, w: &[u8]) -> Result<Vec<u8>> {
    if w.len() != rs.i_size {
        return Err(Error::Argument(format!(
            "word length {} differs from window size {}",
            w.len(),
            rs.i_size
        )));
    }
    let mut out = Vec::with_capacity(rs.kept_len());
    let mut removed = rs.j.iter().peekable();
    for (idx, &c) in w.iter().enumerate() {
        if removed.peek() == Some(&&(idx + 1)) {
            removed.next();
        } else {
            out.push(c);
        }
    }
    Ok(out)
}

/// A permutation of `1..=n` acting on words by `σ(a_1…a_n) = a_{σ(1)} … a_{σ(n)}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SigmaPerm {
    /// 1-based images.
    pub perm: Vec<usize>,
}

impl SigmaPerm {
    pub fn apply<T: Copy>(&self, w: &[T]) -> Vec<T> {
        assert_eq!(w.len(), self.perm.len());
        self.perm.iter().map(|&s| w[s - 1]).collect()
    }

    pub fn is_bijection(&self) -> bool {
        let mut seen = vec![false; self.perm.len()];
        self.perm.iter().all(|&s| {
            (1..=seen.len()).contains(&s) && !std::mem::replace(&mut seen[s - 1], true)
        })
    }
}

fn valuation(mut x: u64, p: u64) -> (u32, u64) {
    let mut e = 0;
    while x.is_multiple_of(p) {
        x /= p;
        e += 1;
    }
    (e, x)
}

/// The rearrangement taking `ρ_J(w_i)` to the concatenated runs of `x`.
///
/// A kept position `j = p1^{e1}·p2^{e2}·m` (with `e1, e2 ≤ k` and `m` coprime
/// to `p1 p2`) belongs to run `(k-e1, k-e2)`; inside a run, positions are
/// taken in increasing order of `m`, which is their order in `ρ_J(w_i)`.
pub fn sigma_perm(rs: &RemovalSet) -> SigmaPerm {
    let side = rs.k as usize + 1;
    let mut runs: Vec<Vec<usize>> = vec![Vec::new(); side * side];
    let mut removed = rs.j.iter().peekable();
    let mut idx = 0;
    for pos in 1..=rs.i_size {
        if removed.peek() == Some(&&pos) {
            removed.next();
            continue;
        }
        idx += 1;
        let (e1, rest) = valuation(pos as u64, rs.p1);
        let (e2, _) = valuation(rest, rs.p2);
        let a = rs.k as usize - e1 as usize;
        let b = rs.k as usize - e2 as usize;
        runs[a * side + b].push(idx);
    }
    debug_assert!(runs.iter().enumerate().all(|(ab, r)| {
        r.len() == rs.block_len((ab / side) as u32, (ab % side) as u32)
    }));
    SigmaPerm {
        perm: runs.concat(),
    }
}

fn lemma5_needs(rs: &RemovalSet, windows: usize) -> (usize, usize) {
    let tau_len = rs.i_size * windows;
    let ps = PrimeSet::new(&[rs.p1, rs.p2]).expect("validated primes");
    let via_tau = free_count(&ps, tau_len);
    let via_blocks = rs.block_len(rs.k, rs.k) * windows;
    (tau_len, via_tau.max(via_blocks))
}

/// Concatenation of the `(k+1)²` runs of `x` that window `i` is built from.
fn runs_of_window(x: &[u8], rs: &RemovalSet, i: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(rs.kept_len());
    for a in 0..=rs.k {
        for b in 0..=rs.k {
            let len = rs.block_len(a, b);
            let start = len * (i - 1); // 0-based
            out.extend_from_slice(&x[start..start + len]);
        }
    }
    out
}

/// Checks windows `1..=windows` and returns the first one where `σ(ρ_J(w_i))`
/// differs from the concatenated runs of `x`, or `None` if all agree.
pub fn lemma5_check_windows(x: &DigitSeq, rs: &RemovalSet, windows: usize) -> Result<Option<usize>> {
    if windows == 0 {
        return Err(Error::Argument("window index starts at 1".into()));
    }
    let (tau_len, need) = lemma5_needs(rs, windows);
    if x.len() < need {
        return Err(Error::Argument(format!(
            "checking {windows} windows needs {need} digits of x, got {}",
            x.len()
        )));
    }
    let ps = PrimeSet::new(&[rs.p1, rs.p2])?;
    let tau = toeplitz_transform(&ps, x, tau_len)?;
    let sigma = sigma_perm(rs);
    for i in 1..=windows {
        let w = &tau.digits()[rs.i_size * (i - 1)..rs.i_size * i];
        let lhs = sigma.apply(&rho_j(rs, w)?);
        if lhs != runs_of_window(x.digits(), rs, i) {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

/// True iff `σ(ρ_J(w_i))` equals the concatenated runs of `x` for window `i`.
pub fn lemma5_check(x: &DigitSeq, rs: &RemovalSet, i: usize) -> Result<bool> {
    if i == 0 {
        return Err(Error::Argument("window index starts at 1".into()));
    }
    let (tau_len, need) = lemma5_needs(rs, i);
    if x.len() < need {
        return Err(Error::Argument(format!(
            "window {i} needs {need} digits of x, got {}",
            x.len()
        )));
    }
    let ps = PrimeSet::new(&[rs.p1, rs.p2])?;
    let tau = toeplitz_transform(&ps, x, tau_len)?;
    let w = &tau.digits()[rs.i_size * (i - 1)..];
    Ok(sigma_perm(rs).apply(&rho_j(rs, w)?) == runs_of_window(x.digits(), rs, i))
}

/// A family of words `u_{i1,i2}` (`0 ≤ i1, i2 ≤ k`) with optional offsets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CondIIQuery {
    pub k: u32,
    /// `words[i1][i2]` is the digit list of `u_{i1,i2}`.
    pub words: Vec<Vec<Vec<u8>>>,
    /// `offsets[i1][i2]`; an empty list means all zero.
    #[serde(default)]
    pub offsets: Vec<Vec<i64>>,
}

impl CondIIQuery {
    pub fn new(k: u32, words: Vec<Vec<Vec<u8>>>) -> Self {
        Self { k, words, offsets: Vec::new() }
    }

    pub fn with_offsets(mut self, offsets: Vec<Vec<i64>>) -> Self {
        self.offsets = offsets;
        self
    }

    fn offset(&self, i1: usize, i2: usize) -> i64 {
        self.offsets.get(i1).and_then(|r| r.get(i2)).copied().unwrap_or(0)
    }

    fn validate(&self, base: u32) -> Result<()> {
        let side = self.k as usize + 1;
        if self.words.is_empty() {
            return Err(Error::Argument("empty word family".into()));
        }
        if self.words.len() != side || self.words.iter().any(|r| r.len() != side) {
            return Err(Error::Argument(format!("word family must be {side}×{side}")));
        }
        if !self.offsets.is_empty()
            && (self.offsets.len() != side || self.offsets.iter().any(|r| r.len() != side))
        {
            return Err(Error::Argument(format!("offsets must be {side}×{side}")));
        }
        if self.words.iter().flatten().flatten().any(|&d| u32::from(d) >= base) {
            return Err(Error::Argument(format!("word digit not below base {base}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CondIIResult {
    /// Number of `n ≤ N` whose positions all lie inside `x`.
    pub n_effective: u64,
    pub hits: u64,
    pub frequency: f64,
    /// `b^{-Σ|u|}`.
    pub target: f64,
    /// Binomial standard error of `frequency` under the target.
    pub stderr: f64,
}

struct Slot<'a> {
    step: i128,
    offset: i128,
    word: &'a [u8],
}

/// Counts `n ∈ [1, N]` at which every `u_{i1,i2}` occurs in `x`, starting at
/// 1-based position `(p1-1)(p2-1)·p1^{i1}·p2^{i2}·n + offset_{i1,i2}`.
///
/// `n` whose positions fall below 1 are left out of `n_effective`. Positions
/// beyond the end of `x` are a precondition error.
pub fn condii_count(x: &DigitSeq, q: &CondIIQuery, p1: u64, p2: u64, n_max: u64) -> Result<(u64, u64)> {
    if p1 == p2 || !is_prime(p1) || !is_prime(p2) {
        return Err(Error::Argument(format!("need two distinct primes, got ({p1}, {p2})")));
    }
    q.validate(x.base())?;
    let unit = ((p1 - 1) * (p2 - 1)) as i128;
    let mut slots = Vec::new();
    for (i1, row) in q.words.iter().enumerate() {
        for (i2, word) in row.iter().enumerate() {
            let step = unit * (p1 as i128).pow(i1 as u32) * (p2 as i128).pow(i2 as u32);
            slots.push(Slot { step, offset: q.offset(i1, i2) as i128, word });
        }
    }
    let len = x.len() as i128;
    for s in &slots {
        let last = s.step * n_max as i128 + s.offset + s.word.len() as i128 - 1;
        if last > len {
            return Err(Error::Precondition(format!(
                "position {last} needed at n = {n_max}, x has {len} digits"
            )));
        }
    }
    let d = x.digits();
    let (eff, hits) = (1..=n_max)
        .into_par_iter()
        .fold(
            || (0u64, 0u64),
            |(eff, hits), n| {
                let mut valid = true;
                let mut all = true;
                for s in &slots {
                    let pos = s.step * n as i128 + s.offset;
                    if pos < 1 {
                        valid = false;
                        break;
                    }
                    if all {
                        let at = (pos - 1) as usize;
                        all = &d[at..at + s.word.len()] == s.word;
                    }
                }
                if valid {
                    (eff + 1, hits + u64::from(all))
                } else {
                    (eff, hits)
                }
            },
        )
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok((eff, hits))
}

/// Empirical joint frequency of the family against `b^{-Σ|u|}`.
pub fn condii_estimate(x: &DigitSeq, q: &CondIIQuery, p1: u64, p2: u64, n_max: u64) -> Result<CondIIResult> {
    let (n_effective, hits) = condii_count(x, q, p1, p2, n_max)?;
    let total: usize = q.words.iter().flatten().map(Vec::len).sum();
    let target = (x.base() as f64).powi(-(total as i32));
    let (frequency, stderr) = if n_effective == 0 {
        (f64::NAN, f64::NAN)
    } else {
        let nf = n_effective as f64;
        (hits as f64 / nf, (target * (1.0 - target) / nf).sqrt())
    };
    Ok(CondIIResult { n_effective, hits, frequency, target, stderr })
}

/// For a Toeplitz `t` over `P = {2}`, counts `n ≤ N` with `d_{4n-2} ≠ d_{4n-1}`
/// where `d = τ_{2}(t)`. The count is always zero: `d_{4n-2} = d_{2n-1} = t_n
/// = t_{2n} = d_{4n-1}`.
pub fn double_transform_witness(t: &DigitSeq, n_max: usize) -> Result<u64> {
    let two = PrimeSet::new(&[2])?;
    if !is_toeplitz_member(&two, t) {
        return Err(Error::Precondition("input is not a Toeplitz sequence for P = {2}".into()));
    }
    if n_max == 0 {
        return Ok(0);
    }
    let len = 4 * n_max - 1;
    let d = toeplitz_transform(&two, t, len)?;
    let d = d.digits();
    Ok((1..=n_max).filter(|&n| d[4 * n - 3] != d[4 * n - 2]).count() as u64)
}
