//! Numerics for the Cauchy problem `u_tt - a(t)^2 Δu = 0` with an increasing
//! shape function `λ(t)` and an oscillating perturbation `a = λ ω`.
//!
//! The crate is `no_std` (with `alloc`). Everything that touches files, the
//! command line or threads lives in the `wavespeed` companion crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod coefficient;
pub mod diagonalizer;
pub mod energy;
pub mod error;
pub mod floquet;
pub mod grid;
pub mod jet;
pub mod linalg;
pub mod propagator;
pub mod quad;
pub mod runner;
pub mod validator;
pub mod zones;

pub use error::{Error, Result};
pub use num_complex::Complex64;
