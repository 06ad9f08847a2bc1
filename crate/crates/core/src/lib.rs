//! Toeplitz transforms of digit sequences and finite-N normality diagnostics.
//!
//! A Toeplitz sequence for a finite prime set `P` satisfies `t_n = t_{n·p}` for
//! every `p ∈ P`. The crate provides
//!
//! - [`index`]: exact arithmetic on the factorization `n = ℓ·k` with `k` built
//!   from `P` and `ℓ` coprime to `P`, the rank `δ(n)` and class-gap scans;
//! - [`toeplitz`]: the transform `τ_P`, its inverse, constraint checks, seeded
//!   sampling from the uniform measure on `T_P` and exhaustive enumeration;
//! - [`metrics`]: aligned and sliding block frequencies and exact-phase Weyl sums;
//! - [`independence`]: a dyadic-block counterexample process, window
//!   certification for index maps and block-frequency drift reports;
//! - [`characterization`]: block rearrangement identities for `P = {p1, p2}`
//!   and estimators for joint word frequencies along geometric positions;
//! - [`spectral`]: Riesz-product sums, `L²(μ)` exponential sums and power-law fits;
//! - [`dseq`]: the `DSEQ1` file format.

pub mod characterization;
pub mod digits;
pub mod dseq;
pub mod error;
pub mod independence;
pub mod index;
pub mod metrics;
pub mod rng;
pub mod spectral;
pub mod toeplitz;

pub use digits::{value_of, DigitSeq, ExactValue};
pub use error::{Error, Result};
pub use index::PrimeSet;
