use crate::error::{Error, Result};
use crate::exec::{map_rows, Execution};

const MAX_POINTS: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProblemKind {
    /// Maximize the objective subject to `Σd = total`.
    Curative { total: f64 },
    /// Minimize `Σd` subject to `objective(d) ≥ target`.
    Palliative { target: f64 },
}

/// Small (`n ≤ 3`) instance for exhaustive search. `objective` must be
/// nondecreasing in each dose (true for both `ln f₁` and its approximation).
pub struct BruteForceProblem<'a> {
    pub n: usize,
    pub d_min: f64,
    pub d_max: f64,
    pub kind: ProblemKind,
    pub objective: &'a (dyn Fn(&[f64]) -> f64 + Sync),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOptimum {
    pub doses: Vec<f64>,
    /// Objective value (curative) or total dose (palliative).
    pub value: f64,
    /// Grid spacing along the swept coordinates.
    pub cell: f64,
    pub points: usize,
}

/// Exhaustive search over a grid of `resolution` points per free coordinate.
///
/// Curative: the first `n - 1` doses are swept and the last one closes the
/// sum. Palliative: the first `n - 1` are swept and the last one is the
/// smallest dose meeting the constraint (bisection).
pub fn brute_force_oracle(problem: &BruteForceProblem<'_>, resolution: usize) -> Result<GridOptimum> {
    let n = problem.n;
    if n == 0 || n > 3 {
        return Err(Error::param("n", format!("brute force supports 1..=3 doses, got {n}")));
    }
    if resolution < 2 {
        return Err(Error::param("resolution", "need at least 2 grid points"));
    }
    let points = (resolution as f64).powi(n as i32 - 1);
    if points > MAX_POINTS {
        return Err(Error::param(
            "resolution",
            format!("{points:.0} grid points exceed the limit of {MAX_POINTS:.0}"),
        ));
    }
    let (lo, hi) = (problem.d_min, problem.d_max);

    // Sweep window for the first coordinate; the curative case restricts it
    // to where the remaining doses can still close the sum.
    let (a, b) = match problem.kind {
        ProblemKind::Curative { total } => {
            let rest = (n - 1) as f64;
            ((total - rest * hi).max(lo), (total - rest * lo).min(hi))
        }
        ProblemKind::Palliative { .. } => (lo, hi),
    };
    if n > 1 && a > b {
        return Err(Error::Infeasible("no dose vector satisfies the sum and bounds".into()));
    }
    let axis = |lo: f64, hi: f64| -> Vec<f64> {
        (0..resolution)
            .map(|k| lo + (hi - lo) * k as f64 / (resolution - 1) as f64)
            .collect()
    };
    let first = if n == 1 { vec![f64::NAN] } else { axis(a, b) };
    let second = if n == 3 { axis(lo, hi) } else { vec![f64::NAN] };
    let cell = if n == 1 { 0.0 } else { (b - a) / (resolution - 1) as f64 };

    let rows = map_rows(Execution::Parallel, &first, |&x| {
        let mut best: Option<(Vec<f64>, f64)> = None;
        for &y in &second {
            let mut head: Vec<f64> = Vec::with_capacity(n);
            if n >= 2 {
                head.push(x);
            }
            if n == 3 {
                head.push(y);
            }
            let Some(candidate) = complete(problem, head) else {
                continue;
            };
            let value = match problem.kind {
                ProblemKind::Curative { .. } => (problem.objective)(&candidate),
                ProblemKind::Palliative { .. } => candidate.iter().sum(),
            };
            if best.as_ref().map_or(true, |(_, v)| better(problem.kind, value, *v)) {
                best = Some((candidate, value));
            }
        }
        best
    });

    let mut best: Option<(Vec<f64>, f64)> = None;
    for (candidate, value) in rows.into_iter().flatten() {
        if best.as_ref().map_or(true, |(_, v)| better(problem.kind, value, *v)) {
            best = Some((candidate, value));
        }
    }
    let (doses, value) =
        best.ok_or_else(|| Error::Infeasible("no grid point satisfies the constraints".into()))?;
    Ok(GridOptimum {
        doses,
        value,
        cell,
        points: points as usize,
    })
}

fn better(kind: ProblemKind, value: f64, incumbent: f64) -> bool {
    match kind {
        ProblemKind::Curative { .. } => value > incumbent,
        ProblemKind::Palliative { .. } => value < incumbent,
    }
}

/// Fills in the last dose, or `None` if no admissible value exists.
fn complete(problem: &BruteForceProblem<'_>, mut head: Vec<f64>) -> Option<Vec<f64>> {
    let (lo, hi) = (problem.d_min, problem.d_max);
    match problem.kind {
        ProblemKind::Curative { total } => {
            let last = total - head.iter().sum::<f64>();
            let eps = 1e-12 * total.max(1.0);
            if last < lo - eps || last > hi + eps {
                return None;
            }
            head.push(last.clamp(lo, hi));
            Some(head)
        }
        ProblemKind::Palliative { target } => {
            let eval = |head: &[f64], last: f64| {
                let mut d = head.to_vec();
                d.push(last);
                (problem.objective)(&d)
            };
            if eval(&head, hi) < target {
                return None;
            }
            if eval(&head, lo) >= target {
                head.push(lo);
                return Some(head);
            }
            let (mut a, mut b) = (lo, hi);
            while b - a > 1e-12 * hi {
                let mid = 0.5 * (a + b);
                if eval(&head, mid) >= target {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            head.push(b);
            Some(head)
        }
    }
}
