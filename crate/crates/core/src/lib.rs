//! Optimal Korn-type constants for thin shells.
//!
//! A shell is a mid-surface patch thickened by `h` along its normal.
//! Displacements are discretized on a tensor grid in `(t, theta, z)` and
//! written in the local frame `(n, e_theta, e_z)`. The optimal constants are
//! generalized eigenvalues of quadratic forms on that grid, and sweeps over
//! `h` fit how they scale.
//!
//! ```
//! use std::f64::consts::PI;
//! use kornshell::korn_solver::{korn_second_constant, EigenOptions, GridPolicy};
//! use kornshell::surface::SurfacePatch;
//!
//! let cyl = SurfacePatch::cylinder(1.0, PI, 1.0)?;
//! let c2 = korn_second_constant(&cyl, 0.1, &GridPolicy::new(3, 6, 6), &EigenOptions::default())?;
//! assert!(c2.constant > 0.0);
//! # Ok::<(), kornshell::KornError>(())
//! ```
//!
//! The guide in `book/` walks through each module; its snippets run as
//! doc-tests of this crate.

pub mod ansatz;
pub mod error;
pub mod grid_field;
pub mod korn_solver;
pub mod rect_harmonic;
pub mod shell_ops;
pub mod surface;

pub use error::{KornError, Result};
pub use grid_field::{ScalarField, ShellGrid, VecField3};
pub use surface::SurfacePatch;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/surfaces.md")]
    mod surfaces {}
    #[doc = include_str!("../../../book/src/gradient.md")]
    mod gradient {}
    #[doc = include_str!("../../../book/src/constants.md")]
    mod constants {}
    #[doc = include_str!("../../../book/src/oscillating.md")]
    mod oscillating {}
    #[doc = include_str!("../../../book/src/rectangles.md")]
    mod rectangles {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/validation.md")]
    mod validation {}
}
