//! Low-rank approximability of solutions to Kronecker-structured linear
//! systems and eigenvalue problems.
//!
//! The crate runs Richardson-type fixed-point iterations on dense tensors,
//! tracks the `t`-ranks of every iterate, and evaluates closed-form
//! singular-value decay bounds against spectra measured by brute force.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod eigen;
pub mod error;
pub mod kron;
pub mod lab;
pub mod richardson;
pub mod tensor;
pub mod trace;

pub use eigen::{shifted_richardson_run, EigenSetup};
pub use error::{Error, Result};
pub use kron::{KronSumOperator, ModelKind, ModelParams, RhsTensor};
pub use richardson::{dense_solve, richardson_run, LinearProblem, SpectralData};
pub use tensor::{Splitting, Tensor};
pub use trace::{IterationTrace, RankGrowth, TraceStep};
