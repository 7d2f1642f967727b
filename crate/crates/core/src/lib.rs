//! Cointegrated VAR analysis of the Global Carbon Budget.
//!
//! The crate estimates the unrestricted VECM for land sink, ocean sink, emissions
//! and atmospheric CO₂, runs the Johansen trace test and the exclusion and weak
//! exogeneity LR tests, fits the physically restricted model by maximum
//! likelihood, computes residual diagnostics, and simulates the carbon cycle
//! forward under emissions scenarios with optional sink weakening.
//!
//! See the guide under `book/` for a walk-through.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cvar;
pub mod data;
pub mod diagnostics;
pub mod dist;
pub mod error;
pub mod estimation;
mod linalg;
pub mod projection;
pub mod restrictions;
pub mod simulate;
pub mod structural;

pub use cvar::{concentrate, fit_vecm, quasi_loglik, solve_rrr, trace_test, TraceTestResult, VecmEstimate, VecmSpec};
pub use data::{AlignedDataset, Constants, EmissionScenario};
pub use error::{Error, Result};
pub use estimation::{fit_mle, fit_mle_default, FitOptions, StructuralFit};
pub use restrictions::{LrTestResult, Variable};
pub use structural::{StructuralTheta, theta_to_reduced, theta_to_structural};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/cointegration.md")]
    mod cointegration {}
    #[doc = include_str!("../../../book/src/hypothesis-tests.md")]
    mod hypothesis_tests {}
    #[doc = include_str!("../../../book/src/structural-model.md")]
    mod structural_model {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    mod diagnostics {}
    #[doc = include_str!("../../../book/src/projection.md")]
    mod projection {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/acceptance.md")]
    mod acceptance {}
}
