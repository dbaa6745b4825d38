use super::{box_state, check_times, project_simplex_box, BoxState, SolveReport, SolverConfig};
use crate::closed_form::feasible_n_range_curative;
use crate::error::{Error, Result};
use crate::objective::{DoseBounds, ExactObjective};
use crate::pkpd::DrugPK;

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

/// Maximizes `ln f₁` over `{Σd = D, d_min ≤ d_i ≤ d_max}` for fixed `n`.
pub fn solve_curative_exact(
    pk: &DrugPK,
    times: &[f64],
    horizon: f64,
    bounds: &DoseBounds,
    n: usize,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    check_times(times, n)?;
    let total = bounds.require_cumulative()?;
    let range = feasible_n_range_curative(bounds)?;
    if !range.contains(n) {
        return Err(Error::Infeasible(format!(
            "N = {n} outside the feasible range {}..={} for D = {total}",
            range.lo, range.hi
        )));
    }
    let (lo, hi) = (bounds.d_min(), bounds.d_max());
    let obj = ExactObjective::new(pk, times, horizon)?;

    let mut doses = project_simplex_box(&vec![total / n as f64; n], total, lo, hi)?;
    let mut grad = obj.gradient(&doses);
    // Curvature of ln(1 + d/k̃2) sets the natural step scale.
    let base_step = (total / n as f64 + obj.k2_tilde()).powi(2);
    let mut step_len = base_step;
    let mut residual = curative_residual(&doses, &grad, lo, hi);
    let mut iterations = 0;

    while residual > cfg.optimality_tol && iterations < cfg.max_iterations {
        iterations += 1;
        let mean = grad.iter().sum::<f64>() / n as f64;
        let centered: Vec<f64> = grad.iter().map(|g| g - mean).collect();

        let mut accepted = None;
        let mut alpha = step_len;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = doses.iter().zip(&centered).map(|(d, g)| d + alpha * g).collect();
            let candidate = project_simplex_box(&trial, total, lo, hi)?;
            let step: Vec<f64> = candidate.iter().zip(&doses).map(|(c, d)| c - d).collect();
            // Measured on the Lagrangian `ln f₁ - ḡ(Σd - D)` so that rounding
            // drift in Σd does not swamp the tiny ascent near the optimum.
            let drift: f64 = mean * step.iter().sum::<f64>();
            let slope: f64 = centered.iter().zip(&step).map(|(g, s)| g * s).sum();
            if slope <= 0.0 {
                break;
            }
            if obj.change(&doses, &step) - drift >= ARMIJO * slope {
                accepted = Some((candidate, step));
                break;
            }
            alpha *= 0.5;
        }
        let Some((candidate, step)) = accepted else {
            break;
        };

        let next_grad = obj.gradient(&candidate);
        // Barzilai–Borwein length for ascent on a concave objective.
        let ss: f64 = step.iter().map(|s| s * s).sum();
        let sy: f64 = step
            .iter()
            .zip(next_grad.iter().zip(&grad))
            .map(|(s, (gn, g))| s * (gn - g))
            .sum();
        step_len = if sy < 0.0 {
            (ss / -sy).clamp(1e-10 * base_step, 1e10 * base_step)
        } else {
            base_step
        };
        doses = candidate;
        grad = next_grad;
        residual = curative_residual(&doses, &grad, lo, hi);
    }

    let feasible = (doses.iter().sum::<f64>() - total).abs() <= cfg.feasibility_tol * total.max(1.0)
        && doses.iter().all(|&d| d >= lo && d <= hi);
    let converged = residual <= cfg.optimality_tol && feasible;
    let value = obj.value(&doses);
    Ok(SolveReport::new(doses, value, residual, iterations, converged, None))
}

/// Scaled first-order residual for `max f` on the simplex-box set: with the
/// multiplier `μ` of `Σd = D`, free entries need `g_i = μ`, entries at the
/// lower bound `g_i ≤ μ`, at the upper bound `g_i ≥ μ`. Divided by `‖g‖∞`.
pub(crate) fn curative_residual(doses: &[f64], grad: &[f64], lo: f64, hi: f64) -> f64 {
    let states: Vec<BoxState> = doses.iter().map(|&d| box_state(d, lo, hi)).collect();
    let free: Vec<f64> = states
        .iter()
        .zip(grad)
        .filter(|(s, _)| **s == BoxState::Free)
        .map(|(_, g)| *g)
        .collect();
    let max_at = |state| {
        states
            .iter()
            .zip(grad)
            .filter(|(s, _)| **s == state)
            .map(|(_, g)| *g)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let min_at = |state| {
        states
            .iter()
            .zip(grad)
            .filter(|(s, _)| **s == state)
            .map(|(_, g)| *g)
            .fold(f64::INFINITY, f64::min)
    };
    let mu = if free.is_empty() {
        let (a, b) = (max_at(BoxState::Lower), min_at(BoxState::Upper));
        match (a.is_finite(), b.is_finite()) {
            (true, true) => 0.5 * (a + b),
            (true, false) => a,
            (false, true) => b,
            (false, false) => 0.0,
        }
    } else {
        free.iter().sum::<f64>() / free.len() as f64
    };
    let worst = states
        .iter()
        .zip(grad)
        .map(|(s, &g)| match s {
            BoxState::Free => (g - mu).abs(),
            BoxState::Lower => (g - mu).max(0.0),
            BoxState::Upper => (mu - g).max(0.0),
        })
        .fold(0.0, f64::max);
    let scale = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}
