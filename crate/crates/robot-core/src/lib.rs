//! Outlier-robust optimal transport (ROBOT).
//!
//! Classical OT must transport *all* of the source mass, so a handful of
//! outliers can blow up the distance arbitrarily. ROBOT fixes this by letting
//! the source marginal be modified at a per-unit price `λ`, which turns out to
//! be the same problem as plain OT under the truncated ground cost
//! `min{c(x, y), 2λ}`. The truncated problem is cheap to solve (any OT solver
//! works), and the slack variables of the marginal-modification form can be
//! reconstructed from its plan, which is what makes outlier *identification*
//! possible.
//!
//! What lives where:
//!
//! - [`measure`], [`cost`], [`plan`]: discrete measures, ground costs and
//!   truncation, transport plans and solve reports.
//! - [`simplex`], [`transport`]: a dense two-phase LP solver and a
//!   transportation-polytope network simplex. These are deliberately
//!   independent so they can cross-check each other.
//! - [`exact`]: the marginal-modification LP and its two-sided/auxiliary
//!   variants, solved through [`simplex`].
//! - [`reconstruct`]: builds the slack solution from a truncated-cost plan.
//! - [`sinkhorn`]: log-domain entropic solver for the truncated problem.
//! - [`semidiscrete`]: stochastic semi-discrete dual ascent specialized to the
//!   shift generator, for robust mean estimation.
//! - [`detect`], [`datagen`], [`diagnostics`]: outlier detection plus the
//!   λ-selection heuristic, seeded synthetic data, and executable checks of
//!   the equivalence/bound theorems.

pub mod cost;
pub mod datagen;
pub mod detect;
pub mod diagnostics;
mod error;
pub mod exact;
pub mod measure;
pub mod plan;
pub mod reconstruct;
pub mod semidiscrete;
pub mod simplex;
pub mod sinkhorn;
pub mod transport;

pub use cost::{CostMatrix, CostSpec};
pub use error::{Error, Result};
pub use measure::{tv_distance, DiscreteMeasure};
pub use plan::{RobotSolution, SolveReport, TransportPlan};
