//! Exact computation of p-primary algebraic K-groups of finite chain rings.
//!
//! For a p-adic local field K with ring of integers O_K and uniformizer pi,
//! the quotients O_K/pi^n (in particular Z/p^n) have finite K-groups in
//! positive degrees.  Their p-primary parts are the cohomology of a two-term
//! syntomic complex built out of a prismatic envelope with explicit
//! generators and relations.  This crate assembles that complex with
//! exact arithmetic over Z/p^W for a certified working precision W, extracts
//! elementary divisors, and reports
//!
//! * `h1`: the exponents a_1 <= a_2 <= ... with
//!   K_{2i-1}(O_K/pi^n; Z_p) = (+) Z/p^{a_j}, and
//! * `h2`: the exponents for K_{2i-2}(O_K/pi^n; Z_p) (i >= 2).
//!
//! The precision bookkeeping is part of the contract: every matrix carries
//! the number of p-adic digits still known to be exact, and results are only
//! reported when the extracted exponents are strictly below that bound.

pub mod descent;
pub mod envelope;
pub mod linalg;
pub mod padic;
pub mod pipeline;

use thiserror::Error;

/// Errors surfaced by ring construction, envelope arithmetic, linear
/// algebra, and the top-level pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("p = {0} is not prime")]
    NotPrime(u64),
    #[error("residue field lift is not irreducible modulo p")]
    NotIrreducible,
    #[error("residue field lift is not separable modulo p")]
    NonSeparable,
    #[error("requested precision {0} is too small")]
    PrecisionTooSmall(u32),
    #[error("element is not a unit (valuation {0} > 0)")]
    NotAUnit(u32),
    #[error("element is not divisible by p")]
    NotDivisibleByP,
    #[error("Eisenstein polynomial is invalid: {0}")]
    BadEisenstein(String),
    #[error("element is not distinguished: delta(d) must be a unit")]
    NotDistinguished,
    #[error("rewriting did not reach a normal form within {0} passes")]
    NonConvergent(usize),
    #[error("basis weight range [{0}, {1}] is empty")]
    EmptyRange(u64, u64),
    #[error("truncation bound {0} is too small for the requested witness")]
    BoundTooSmall(u64),
    #[error("linear system has no integral solution")]
    NotIntegral,
    #[error("fixed point iteration for descent unit did not converge")]
    UnitNonConvergent,
    #[error("H^0 of the syntomic complex is nonzero; pipeline invariant broken")]
    H0Nonzero,
    #[error("precision exhausted: exponent {exponent} not below valid digits {valid}")]
    PrecisionExhausted { exponent: u32, valid: u32 },
    #[error("internal cross-check failed: {0}")]
    CheckFailed(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
