//! Test-only oracles: adaptive quadrature, finite differences, a dual
//! bisection projection, and randomized problem instances.
#![allow(dead_code)]

use metrodose::{DoseSchedule, DrugPK, TumorModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Adaptive Simpson on `[a, b]` with absolute tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Direct concentration sum, written independently of the library.
pub fn concentration(pk: &DrugPK, times: &[f64], doses: &[f64], t: f64) -> f64 {
    pk.sigma()
        * times
            .iter()
            .zip(doses)
            .filter(|(&tj, _)| tj <= t)
            .map(|(&tj, &d)| d * (-pk.lambda() * (t - tj)).exp())
            .sum::<f64>()
}

pub fn emax(pk: &DrugPK, c: f64) -> f64 {
    pk.k1() * c / (pk.k2() + c)
}

/// `∫₀ᵗ ρ` by quadrature, split at the dose instants.
pub fn quadrature_effect(pk: &DrugPK, times: &[f64], doses: &[f64], t: f64, tol: f64) -> f64 {
    let mut nodes: Vec<f64> = times.iter().copied().filter(|&x| x < t).collect();
    nodes.push(t);
    let mut total = 0.0;
    for w in nodes.windows(2) {
        let (a, b) = (w[0], w[1]);
        // Concentration on [a, b) from the doses given up to a.
        let c0 = concentration(pk, times, doses, a);
        let rho = |s: f64| emax(pk, c0 * (-pk.lambda() * (s - a)).exp());
        total += integrate(&rho, a, b, tol);
    }
    total
}

/// Central difference of `f` along coordinate `i` with step `h`.
pub fn central_difference(f: &dyn Fn(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut up = x.to_vec();
    let mut down = x.to_vec();
    up[i] += h;
    down[i] -= h;
    (f(&up) - f(&down)) / (2.0 * h)
}

/// Projection onto `{Σx = total, lo ≤ x ≤ hi}` by bisection on the shift `τ`
/// in `x = clamp(v - τ)`.
pub fn bisection_projection(v: &[f64], total: f64, lo: f64, hi: f64) -> Vec<f64> {
    let sum = |tau: f64| v.iter().map(|x| (x - tau).clamp(lo, hi)).sum::<f64>();
    let vmin = v.iter().copied().fold(f64::INFINITY, f64::min);
    let vmax = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut a, mut b) = (vmin - hi - 1.0, vmax - lo + 1.0);
    for _ in 0..300 {
        let m = 0.5 * (a + b);
        if sum(m) > total {
            a = m;
        } else {
            b = m;
        }
    }
    let tau = 0.5 * (a + b);
    v.iter().map(|x| (x - tau).clamp(lo, hi)).collect()
}

pub fn relative_error(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}

pub struct Instance {
    pub tumor: TumorModel,
    pub drug: DrugPK,
    pub sched: DoseSchedule,
}

/// λ ∈ [1, 20], ξ ∈ [1e-3, 1e-1], 1 ≤ N ≤ 40, gaps of a quarter day to a week.
pub fn random_instance(rng: &mut impl Rng) -> Instance {
    let lambda = rng.gen_range(1.0..=20.0);
    let xi = 10f64.powf(rng.gen_range(-3.0..=-1.0));
    let k1 = rng.gen_range(1.0..=60.0);
    let k2 = rng.gen_range(0.05..=2.0);
    let sigma = rng.gen_range(1e-3..=1e-2);
    let l0 = rng.gen_range(0.05..=0.9);
    let n = rng.gen_range(1..=40);
    let mut t = rng.gen_range(0.0..=5.0f64).floor();
    let mut times = Vec::with_capacity(n);
    for _ in 0..n {
        times.push(t);
        t += rng.gen_range(0.25..=7.0);
    }
    let doses = (0..n).map(|_| rng.gen_range(10.0..=200.0)).collect();
    let horizon = times[n - 1] + rng.gen_range(0.5..=30.0);
    Instance {
        tumor: TumorModel::new(xi, l0).unwrap(),
        drug: DrugPK::new(lambda, sigma, k1, k2).unwrap(),
        sched: DoseSchedule::new(times, doses, horizon).unwrap(),
    }
}
