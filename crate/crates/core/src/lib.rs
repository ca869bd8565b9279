//! Optimal and least-squares measurements for discriminating mixed quantum
//! states.
//!
//! The pipeline is: build or load an [`Ensemble`], compute the square-root
//! measurement ([`compute_lsm`]) or the minimum-error measurement
//! ([`solve_optimal`]), check the dual certificate ([`certify`]) and the
//! Von Neumann structure of the result ([`vnm`]), and optionally simulate the
//! detection experiment ([`sim`]).

pub mod corpus;
pub mod ensemble;
pub mod error;
pub mod hermitian;
pub mod lsm;
pub mod matrix;
pub mod optimal;
pub mod povm;
pub mod sim;
pub mod vnm;

pub use ensemble::{Ensemble, Factorization, Priors, State};
pub use error::{Error, Result};
pub use lsm::compute_lsm;
pub use matrix::ComplexMatrix;
pub use num_complex::Complex64;
pub use optimal::{certify, prob_correct, solve_optimal, Certificate, SolveOptions, Solution};
pub use povm::Povm;
