//! so(5) irreducible representations in an SO(3)-coupled basis.
//!
//! The pipeline runs in three stages:
//!
//! 1. [`branching`] finds the angular momentum content of `(v, f)`;
//! 2. [`basis`] builds exact coefficient tables for a coupled, non-orthonormal
//!    basis and [`matrix_elements`] assembles the octupole operator in it;
//! 3. [`unitarize`] finds the change of basis that makes the representation
//!    unitary and returns orthonormal coefficients and reduced matrix
//!    elements.
//!
//! [`validate`] rebuilds full generator matrices and checks the so(5)
//! commutation relations.
#![no_std]

extern crate alloc;

pub mod angular;
pub mod basis;
pub mod branching;
pub mod exact;
pub mod linalg;
pub mod matrix_elements;
pub mod scalar;
pub mod unitarize;
pub mod validate;

pub use angular::{cg, ladder_factor, CgArgs};
pub use basis::{build_basis, Basis, BasisSet, CoeffTable};
pub use branching::{dimension, l_content, IrrepLabel, LContent};
pub use exact::{HalfInt, RadicalSum, Rational};
pub use linalg::Mat;
pub use unitarize::{unitary_irrep, Node, Route, UnitaryIrrep};
pub use validate::{check_commutators, check_hermiticity, reconstruct, GeneratorMatrices};
