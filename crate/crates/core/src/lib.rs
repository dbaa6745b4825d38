//! Impulsive-dosing chemotherapy under Gompertz growth, the Norton–Simon
//! effect hypothesis and an Emax pharmacodynamic response, with optimizers for
//! the curative (fixed cumulative dose) and palliative (tumor threshold)
//! fractionation problems.
//!
//! Module map:
//! - [`pkpd`]: concentration, effect and tumor trajectory in closed form, plus
//!   an RK4 oracle;
//! - [`objective`]: `ln f₁`, its time-free approximation, the main-hypothesis
//!   diagnostic and the palliative threshold transforms;
//! - [`closed_form`]: analytic optima of the approximated problems;
//! - [`nlp`]: numerical solvers for the exact fixed-`N` problems;
//! - [`scheduler`]: administration patterns and dose intensity;
//! - [`config`], [`tables`]: run configuration and table regeneration.

pub mod closed_form;
pub mod config;
pub mod error;
pub mod exec;
pub mod nlp;
pub mod objective;
pub mod pkpd;
pub mod presets;
pub mod scheduler;
pub mod tables;

pub use error::{Error, Result};
pub use exec::Execution;
pub use objective::{DoseBounds, PalliativeTarget};
pub use pkpd::{DoseSchedule, DrugPK, Trajectory, TumorModel};
pub use scheduler::Pattern;
