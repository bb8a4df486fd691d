//! First-order solvers for `min_x f(x) + g(Bx)` with smooth `f`, prox-friendly
//! `g` and a linear map `B`, plus the operators, loss terms, diagnostics and
//! problem generators used to exercise them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod error;

pub mod diagnostics;
pub mod functions;
pub mod linops;
pub mod problems;
pub mod solvers;
pub mod vecops;

pub use error::{Error, Result};
pub use functions::{ProxTerm, SmoothTerm};
pub use linops::LinearMap;
pub use solvers::{Algorithm, Problem, RunResult, SolverConfig, Trace, TraceRecord};
