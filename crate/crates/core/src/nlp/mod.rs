//! Exact fixed-`N` problems without the time-free approximation.
//!
//! * curative: maximize `ln f₁(d)` over `{Σd = D, d_min ≤ d_i ≤ d_max}` by
//!   spectral projected-gradient ascent started from the equal split;
//! * palliative: minimize `Σd` subject to `ln f₁(d) ≥ T̃_R` and the box, by an
//!   equal-dose root solve followed by Newton iterations on the KKT system.
//!
//! Non-convergence is reported in [`SolveReport::converged`], never silently.

mod brute;
mod curative;
mod palliative;
mod projection;

pub use brute::{brute_force_oracle, BruteForceProblem, GridOptimum, ProblemKind};
pub use curative::solve_curative_exact;
pub use palliative::solve_palliative_exact;
pub use projection::project_simplex_box;

pub use crate::objective::grad_log_f1;

use crate::error::{require_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Bound on the scaled first-order optimality residual.
    pub optimality_tol: f64,
    pub max_iterations: usize,
    /// Allowed constraint violation, relative to the constraint's scale.
    pub feasibility_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            optimality_tol: 1e-8,
            max_iterations: 5000,
            feasibility_tol: 1e-10,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        require_positive("optimality_tol", self.optimality_tol)?;
        require_positive("feasibility_tol", self.feasibility_tol)?;
        if self.max_iterations == 0 {
            return Err(Error::param("max_iterations", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub doses: Vec<f64>,
    /// `ln f₁` for the curative problem, `Σd` for the palliative one.
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub min_dose: f64,
    pub max_dose: f64,
    /// Palliative only: `ln f₁ - T̃_R` at the returned doses.
    pub constraint_slack: Option<f64>,
}

impl SolveReport {
    pub(crate) fn new(
        doses: Vec<f64>,
        objective: f64,
        kkt_residual: f64,
        iterations: usize,
        converged: bool,
        constraint_slack: Option<f64>,
    ) -> Self {
        let min_dose = doses.iter().copied().fold(f64::INFINITY, f64::min);
        let max_dose = doses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self {
            doses,
            objective,
            kkt_residual,
            iterations,
            converged,
            min_dose,
            max_dose,
            constraint_slack,
        }
    }

    pub fn total(&self) -> f64 {
        self.doses.iter().sum()
    }
}

/// Activity of a box constraint at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum BoxState {
    Free,
    Lower,
    Upper,
}

pub(crate) fn box_state(x: f64, lo: f64, hi: f64) -> BoxState {
    let eps = 1e-12 * hi.abs().max(1.0);
    if x <= lo + eps {
        BoxState::Lower
    } else if x >= hi - eps {
        BoxState::Upper
    } else {
        BoxState::Free
    }
}

pub(crate) fn check_times(times: &[f64], n: usize) -> Result<()> {
    if times.len() != n {
        return Err(Error::InvalidSchedule(format!(
            "{} administration times supplied for N = {n}",
            times.len()
        )));
    }
    Ok(())
}
