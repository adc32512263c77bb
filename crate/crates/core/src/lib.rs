//! Positive radial solutions of the weighted m-Laplacian Dirichlet problem
//! with solution-dependent diffusion
//!
//! ```text
//! -( r^{N+α-1} |v'|^{m-2} v' / (a(r) + g(v))^γ )' = r^{N+β-1} v^p   on (0, R),
//! ```
//!
//! together with the whole-line initial value problems behind the Liouville
//! theorems, integral identity checks and changes of variables.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bvp;
pub mod error;
pub mod grid;
pub mod identities;
pub mod ivp;
pub mod model;
mod ode;
pub mod scan;
pub mod transforms;

pub use error::{Error, Result};
pub use grid::{RadialGrid, RadialProfile};
pub use model::{
    check_hypotheses, classify_regime, compute_exponents, CoefficientSpec, DiffusionWeight,
    ExponentSet, HypothesisReport, Nonlinearity, ProblemParams, RegimeClassification, Verdict,
};
