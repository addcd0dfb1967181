//! Spin dynamics of recombining radical pairs.
//!
//! The crate builds sparse spin Hamiltonians for two-electron radical pairs with
//! hyperfine-coupled nuclei, and propagates them under spin-selective
//! recombination plus Lindblad-type relaxation in two independent ways:
//!
//! * [`mcwf`]: stochastic wavefunction trajectories under the non-Hermitian
//!   effective Hamiltonian, with Lindblad jumps and a terminating reaction jump;
//! * [`me`]: direct integration of the master equation for the density matrix,
//!   used as the deterministic reference on small systems.
//!
//! Both share the adaptive 5(4) Runge-Kutta integrator in [`ode`].
//!
//! The crate is `no_std` and only needs `alloc`. Threading, file formats and
//! the command-line front end live in the `radpair` crate.

#![no_std]
// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
pub mod error;
pub mod mcwf;
pub mod me;
pub mod model;
pub mod ode;
pub mod sparse;
pub mod spin;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Complex scalar used throughout.
pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);

/// Squared Euclidean norm of a complex vector.
pub fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// `<a|b>`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}
