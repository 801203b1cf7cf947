//! Numerical laboratory for the cubic Schrödinger equation in the interaction
//! representation `v(t) = S(−t)u(t)`.
//!
//! Fields live on a centred periodic box ([`grid`]); the free flow, its kernel
//! and the vector field `x − 2it∇` are in [`propagator`]; [`besov`] holds the
//! Littlewood–Paley machinery; [`trilinear`] the cubic interaction form;
//! [`picard`] the fixed-point solver and a split-step reference; [`lab`] turns
//! every estimate into a pass/fail report.

pub mod besov;
pub mod error;
pub mod family;
pub mod fft;
pub mod field;
pub mod grid;
pub mod io;
pub mod lab;
pub mod picard;
pub mod propagator;
pub mod trilinear;

pub use error::{LabError, Result};
pub use family::{make_field, TestFamily};
pub use field::Field;
pub use grid::{make_grid, Grid};
