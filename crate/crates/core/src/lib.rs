//! Self-consistent wave-particle dynamics of the one-dimensional
//! free-electron-laser model.
//!
//! The crate integrates the coupled N-body + wave equations of motion,
//! evaluates the short-time closed-form expansions for the macroscopic
//! observables, solves the linear dispersion relation of homogeneous
//! equilibria, and tracks the waterbag boundary with passive test particles.
//!
//! Everything is `no_std`-compatible (requires `alloc`); enable the `libm`
//! feature when building without `std`. The `parallel` feature (implies
//! `std`) parallelizes the N-body reductions over fixed-size chunks without
//! changing results: partial sums are combined in a fixed order, so output
//! is bit-identical for any worker count.

#![cfg_attr(not(feature = "std"), no_std)]
#![warn(missing_docs)]
// Validation guards are written `!(x > 0.0)` on purpose: the negation
// rejects NaN, which the suggested `x <= 0.0` would wave through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("fel1d-core needs either the `std` or the `libm` feature");

pub mod contour;
pub mod diag;
pub mod lintheory;
pub mod math;
pub mod nbody;
pub mod perturb;
pub mod sample;
pub mod types;
