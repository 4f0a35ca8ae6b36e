//! Distributions of strongly additive functions on the integers and on the primes.
//!
//! The crate sieves `f(n)` for all `n <= x`, measures the standardized tail
//! frequencies of `f`, and compares them against large-deviation predictors
//! built from the limiting distribution of `f(p)` over the primes: the
//! saddle-point formula, the Cramér series, the normal and Poisson references
//! and the Kac random model. It also evaluates the Euler product that governs
//! the mean value of `exp(z f(n))` and reconstructs `f` from the zeros of that
//! product.
//!
//! ```
//! use addlab::afspec::AdditiveFunctionSpec;
//! use addlab::sieve::{sieve_values, SieveConfig};
//!
//! let omega = AdditiveFunctionSpec::omega();
//! let result = sieve_values(&omega, 10, &SieveConfig::default()).unwrap();
//! assert_eq!(result.value(6), 2.0);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod afspec;
pub mod error;
pub mod euler;
pub mod kac;
pub mod ldp;
pub mod numeric;
pub mod primedist;
pub mod primes;
pub mod report;
pub mod series;
pub mod sieve;
pub mod special;

pub use error::{Error, Result};
