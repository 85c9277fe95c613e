//! Cycle structure of parking functions viewed as maps `[n] -> [n]`.
//!
//! * [`parking`]: parking functions, the parking process, enumeration and
//!   uniform sampling.
//! * [`completions`]: counting completions of partially occupied streets.
//! * [`structure`]: functional graphs, cycles and tails.
//! * [`moments`]: exact and Monte Carlo means of cycle counts.
//! * [`stein`]: the transposition pair and explicit Poisson approximation terms.
//! * [`distributions`]: joint laws of `(C_1, ..., C_d)` and total variation.
//! * [`exact_math`]: big-integer combinatorics, Abel sums and rational helpers.

pub mod completions;
pub mod distributions;
pub mod error;
pub mod exact_math;
pub mod moments;
pub mod parking;
pub mod sampling;
pub mod stein;
pub mod structure;

pub use error::{Error, Result};
pub use exact_math::ExactRational;
pub use parking::PrefSeq;
pub use sampling::SeedPlan;
