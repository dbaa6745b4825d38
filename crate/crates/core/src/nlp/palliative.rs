use nalgebra::{DMatrix, DVector};

use super::{box_state, check_times, BoxState, SolveReport, SolverConfig};
use crate::error::{Error, Result};
use crate::objective::{DoseBounds, ExactObjective};
use crate::pkpd::DrugPK;

const MAX_HALVINGS: usize = 40;

/// Minimizes `Σd` subject to `ln f₁(d) ≥ t_r_tilde` and the dose box, for
/// fixed `n`.
///
/// Phase one finds the equal dose that meets the constraint exactly (the
/// constraint is increasing in the common dose level); phase two runs Newton
/// iterations on the KKT conditions with an active set for the box, letting
/// individual doses deviate from the common level.
pub fn solve_palliative_exact(
    pk: &DrugPK,
    times: &[f64],
    horizon: f64,
    bounds: &DoseBounds,
    t_r_tilde: f64,
    n: usize,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    check_times(times, n)?;
    let (lo, hi) = (bounds.d_min(), bounds.d_max());
    let obj = ExactObjective::new(pk, times, horizon)?;
    let scale = t_r_tilde.abs().max(1.0);

    let at_max = obj.value(&vec![hi; n]);
    if at_max < t_r_tilde {
        return Err(Error::Infeasible(format!(
            "N = {n}: even d_max doses give ln f1 = {at_max:.6} < {t_r_tilde:.6}"
        )));
    }
    let at_min = obj.value(&vec![lo; n]);
    if at_min >= t_r_tilde {
        return Ok(SolveReport::new(
            vec![lo; n],
            n as f64 * lo,
            0.0,
            0,
            true,
            Some(at_min - t_r_tilde),
        ));
    }

    let level = equal_dose_root(&obj, n, lo, hi, t_r_tilde);
    let mut doses = vec![level; n];
    let mut states = vec![BoxState::Free; n];
    let grad = obj.gradient(&doses);
    let mut nu = least_squares_multiplier(&grad, &states);
    let mut residual = palliative_residual(&obj, &doses, nu, t_r_tilde, lo, hi);
    let mut iterations = 0;

    let short = |doses: &[f64]| obj.value(doses) - t_r_tilde < -cfg.feasibility_tol * scale;
    while (residual > cfg.optimality_tol || short(&doses)) && iterations < cfg.max_iterations {
        iterations += 1;
        release_bounds(&obj.gradient(&doses), nu, &mut states);
        let Some((dd, dnu)) = newton_direction(&obj, &doses, nu, t_r_tilde, &states) else {
            break;
        };

        let mut t = 1.0;
        let mut improved = None;
        for _ in 0..MAX_HALVINGS {
            let (trial, trial_states) = take_step(&doses, &dd, t, lo, hi, &states);
            let trial_nu = nu + t * dnu;
            let r = palliative_residual(&obj, &trial, trial_nu, t_r_tilde, lo, hi);
            if r < residual || r <= cfg.optimality_tol {
                improved = Some((trial, trial_states, trial_nu, r));
                break;
            }
            t *= 0.5;
        }
        let Some((trial, trial_states, trial_nu, r)) = improved else {
            break;
        };
        doses = trial;
        states = trial_states;
        nu = trial_nu;
        residual = r;
    }

    let slack = obj.value(&doses) - t_r_tilde;
    let feasible = slack >= -cfg.feasibility_tol * scale && doses.iter().all(|&d| d >= lo && d <= hi);
    let converged = residual <= cfg.optimality_tol && feasible;
    let total = doses.iter().sum();
    Ok(SolveReport::new(doses, total, residual, iterations, converged, Some(slack)))
}

/// Common dose level `x ∈ (lo, hi)` with `ln f₁(x, …, x) = target`;
/// safeguarded Newton on a shrinking bracket.
fn equal_dose_root(obj: &ExactObjective, n: usize, lo: f64, hi: f64, target: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let doses = vec![x; n];
        let f = obj.value(&doses) - target;
        if f == 0.0 {
            return x;
        }
        if f < 0.0 {
            a = x;
        } else {
            b = x;
        }
        let slope: f64 = obj.gradient(&doses).iter().sum();
        let newton = x - f / slope;
        let next = if slope > 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs() || b - a <= 4.0 * f64::EPSILON * b {
            return next;
        }
        x = next;
    }
    x
}

fn least_squares_multiplier(grad: &[f64], states: &[BoxState]) -> f64 {
    let (num, den) = grad
        .iter()
        .zip(states)
        .filter(|(_, s)| **s == BoxState::Free)
        .fold((0.0, 0.0), |(a, b), (g, _)| (a + g, b + g * g));
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Frees bound-held doses whose multiplier sign says they want to move
/// inward. Stationarity of `Σd - ν(ln f₁ - T̃)` is `r_i = 1 - ν g_i = 0`.
fn release_bounds(grad: &[f64], nu: f64, states: &mut [BoxState]) {
    for (state, g) in states.iter_mut().zip(grad) {
        let r = 1.0 - nu * g;
        match state {
            BoxState::Lower if r < 0.0 => *state = BoxState::Free,
            BoxState::Upper if r > 0.0 => *state = BoxState::Free,
            _ => {}
        }
    }
}

/// Newton step on the free doses and the multiplier:
///
/// ```text
/// [ -ν H_FF   -g_F ] [Δd_F]   [ -(1 - ν g_F) ]
/// [   g_Fᵀ      0  ] [ Δν ] = [ -(ln f₁ - T̃) ]
/// ```
fn newton_direction(
    obj: &ExactObjective,
    doses: &[f64],
    nu: f64,
    target: f64,
    states: &[BoxState],
) -> Option<(Vec<f64>, f64)> {
    let free: Vec<usize> = (0..doses.len()).filter(|&i| states[i] == BoxState::Free).collect();
    let grad = obj.gradient(doses);
    let c = obj.value(doses) - target;
    let m = free.len();
    if m == 0 {
        return None;
    }
    let hess = obj.hessian(doses);
    let mut kkt = DMatrix::<f64>::zeros(m + 1, m + 1);
    let mut rhs = DVector::<f64>::zeros(m + 1);
    for (a, &i) in free.iter().enumerate() {
        for (b, &j) in free.iter().enumerate() {
            kkt[(a, b)] = -nu * hess[i][j];
        }
        kkt[(a, m)] = -grad[i];
        kkt[(m, a)] = grad[i];
        rhs[a] = -(1.0 - nu * grad[i]);
    }
    rhs[m] = -c;
    let sol = kkt.lu().solve(&rhs)?;
    let mut dd = vec![0.0; doses.len()];
    for (a, &i) in free.iter().enumerate() {
        dd[i] = sol[a];
    }
    Some((dd, sol[m]))
}

/// Moves by `t·dd`, clamping into the box and pinning any dose that hits it.
fn take_step(
    doses: &[f64],
    dd: &[f64],
    t: f64,
    lo: f64,
    hi: f64,
    states: &[BoxState],
) -> (Vec<f64>, Vec<BoxState>) {
    let mut next = Vec::with_capacity(doses.len());
    let mut next_states = states.to_vec();
    for i in 0..doses.len() {
        let x = doses[i] + t * dd[i];
        if x <= lo {
            next.push(lo);
            next_states[i] = BoxState::Lower;
        } else if x >= hi {
            next.push(hi);
            next_states[i] = BoxState::Upper;
        } else {
            next.push(x);
        }
    }
    (next, next_states)
}

/// Scaled KKT residual: stationarity `1 - ν g_i` (sign-restricted at the
/// bounds), dual feasibility `ν ≥ 0`, and the constraint, which must be
/// active while `ν > 0` and satisfied always.
pub(crate) fn palliative_residual(
    obj: &ExactObjective,
    doses: &[f64],
    nu: f64,
    target: f64,
    lo: f64,
    hi: f64,
) -> f64 {
    let grad = obj.gradient(doses);
    let c = obj.value(doses) - target;
    let scale = target.abs().max(1.0);
    let stationarity = doses
        .iter()
        .zip(&grad)
        .map(|(&d, &g)| {
            let r = 1.0 - nu * g;
            match box_state(d, lo, hi) {
                BoxState::Free => r.abs(),
                BoxState::Lower => (-r).max(0.0),
                BoxState::Upper => r.max(0.0),
            }
        })
        .fold(0.0, f64::max);
    let primal = (-c).max(0.0) / scale;
    let complementarity = if nu > 0.0 { c.abs() / scale } else { 0.0 };
    let dual = (-nu).max(0.0);
    stationarity.max(primal).max(complementarity).max(dual)
}
