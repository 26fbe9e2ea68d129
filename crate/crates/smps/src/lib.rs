//! Stochastic matrix product states.
//!
//! An sMPS writes a probability distribution over a chain of discrete
//! variables as a product of elementwise nonnegative matrices. This crate
//! provides:
//!
//! * [`mps`]: the [`StochasticMps`] type, dense contraction and the
//!   bipartite factorization used to evaluate block quantities without a
//!   full table;
//! * [`canonical`]: transfer matrices, cut spectra, channel decompositions,
//!   the natural form and truncation with an L1 error certificate;
//! * [`info`]: Shannon entropy, mutual information, the Pinsker bound and
//!   entropy-cost brackets;
//! * [`models`]: the Ising chain and the exact ASEP steady state;
//! * [`oracle`]: the ASEP master equation solved by brute force;
//! * [`mcsim`]: kinetic Monte Carlo with plug-in mutual information.
//!
//! ```
//! use smps::models::{asep_mps, AsepParams};
//! use smps::canonical::cut_spectrum;
//!
//! let params = AsepParams::new(0.3, 0.3, 8)?;
//! let mps = asep_mps(params);
//! let spectrum = cut_spectrum(&mps, 4)?;
//! assert!((spectrum.probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
//! # Ok::<(), smps::SmpsError>(())
//! ```
//!
//! A longer walkthrough lives in the guide under `book/`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod canonical;
pub mod error;
pub mod info;
pub mod mcsim;
pub mod models;
pub mod mps;
pub mod oracle;
pub mod table;

pub use error::{Result, SmpsError};
pub use mps::{BipartiteFactorization, StochasticMps};
pub use table::{l1_distance, ProbabilityTable};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/smps.md")]
    mod smps {}
    #[doc = include_str!("../../../book/src/spectra.md")]
    mod spectra {}
    #[doc = include_str!("../../../book/src/information.md")]
    mod information {}
    #[doc = include_str!("../../../book/src/truncation.md")]
    mod truncation {}
    #[doc = include_str!("../../../book/src/asep.md")]
    mod asep {}
    #[doc = include_str!("../../../book/src/oracle-mc.md")]
    mod oracle_mc {}
}
