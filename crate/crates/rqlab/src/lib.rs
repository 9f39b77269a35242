//! Computational laboratory for real quadratic fields.
//!
//! The crate computes, exactly, the arithmetic data of Q(sqrt m) that drives
//! p-adic invariants at a split odd prime p: fundamental units by continued
//! fractions, class groups by reduced-ideal cycles, norm-equation solutions,
//! Fermat quotients, ray class groups mod p^t, and large-scale surveys over
//! split primes.

pub mod arith;
pub mod cf;
pub mod classgroup;
pub mod cli;
pub mod error;
pub mod field;
pub mod invariants;
pub mod norms;
pub mod padic;
pub mod rayclass;
pub mod stats;
pub mod units;

pub use cli::run_cli;
pub use error::{Error, Result};
