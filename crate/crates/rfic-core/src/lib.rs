//! Numerical core for the random-field Ising chain (RFIC).
//!
//! The chain on `{1, ..., N}` with coupling `J`, boundary spins `(a, b)` and
//! i.i.d. external fields `h_n` has partition function
//!
//! ```text
//! Z = sum over spin configs of exp(-2J * #flips + sum_n sigma_n h_n)
//! ```
//!
//! and per-site free energy `F(J) = lim (1/N) log Z`, the top Lyapunov
//! exponent of a product of random 2x2 transfer matrices. This crate provides:
//!
//! - [`disorder`]: centered disorder laws, block convolutions, and the
//!   one-dimensional Wasserstein-1 distance between empirical samples;
//! - [`chain`]: exact log-domain transfer-matrix products, free-energy
//!   estimation, and spin-flip observables via analytic `J`-derivatives;
//! - [`continuum`]: the continuum-chain free energy in closed Bessel form,
//!   Brownian blocks, and the truncated jump expansion of the continuum
//!   block partition function;
//! - [`coarsegrain`]: block statistics, deterministic block inequalities,
//!   tail-expectation estimators, and `J`-dependent block-length schedules.
//!
//! Everything is deterministic given `(seed, stream)`; no global state.
//! The crate is `no_std`-compatible (with `alloc`): disable the default
//! `std` feature to use it in that mode.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
#[macro_use]
extern crate std;

pub mod chain;
pub mod coarsegrain;
pub mod continuum;
pub mod disorder;
pub mod math;
pub mod rng;

mod error;

pub use error::{Error, Result};
