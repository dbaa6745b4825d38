//! Objective and constraint functions of the dose-fractionation problems.
//!
//! The central quantity is `ln f₁ = (λ/k1) ∫_0^T ρ`, written as a product
//! over dose intervals:
//!
//! ```text
//! ln f₁ = Σ_i ln(A_i + d_i + k̃2) - ln(B_i + k̃2)
//! A_i = Σ_{j<i} d_j e^{λ(t_j - t_i)},   B_i = Σ_{j≤i} d_j e^{λ(t_j - t_{i+1})},   t_{N+1} = T
//! ```
//!
//! When `d_max e^{-λ s}` is negligible against `k̃2` every `A_i` and `B_i`
//! vanishes and `ln f₁ ≈ Σ ln(1 + d_i/k̃2)`, which no longer depends on the
//! administration times.

use crate::error::{require_positive, Error, Result};
use crate::pkpd::{self, validate_times, DoseSchedule, DrugPK, TumorModel};

/// Main-hypothesis ratio above which the approximation is flagged.
pub const MAIN_HYPOTHESIS_WARN_RATIO: f64 = 0.01;

/// Per-dose bounds and, for curative problems, the cumulative dose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoseBounds {
    d_min: f64,
    d_max: f64,
    cumulative: Option<f64>,
}

impl DoseBounds {
    pub fn new(d_min: f64, d_max: f64, cumulative: Option<f64>) -> Result<Self> {
        require_positive("d_min", d_min)?;
        require_positive("d_max", d_max)?;
        if d_min >= d_max {
            return Err(Error::param(
                "d_min",
                format!("must be below d_max ({d_min} >= {d_max})"),
            ));
        }
        if let Some(total) = cumulative {
            require_positive("D", total)?;
        }
        Ok(Self {
            d_min,
            d_max,
            cumulative,
        })
    }

    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn cumulative(&self) -> Option<f64> {
        self.cumulative
    }

    pub(crate) fn require_cumulative(&self) -> Result<f64> {
        self.cumulative
            .ok_or_else(|| Error::param("D", "curative problems need a cumulative dose"))
    }
}

/// Palliative threshold `L*/θ` and its two time-budget transforms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PalliativeTarget {
    pub l_star_rel: f64,
    /// `T_R`, days. Negative when the threshold exceeds the initial size.
    pub t_r: f64,
    /// `(λ/k1)(T + T_R)`: the bound on `ln f₁`.
    pub t_r_tilde: f64,
}

impl PalliativeTarget {
    pub fn new(tm: &TumorModel, pk: &DrugPK, horizon: f64, l_star_rel: f64) -> Result<Self> {
        require_positive("T", horizon)?;
        let t_r = rest_time(tm, l_star_rel)?;
        Ok(Self {
            l_star_rel,
            t_r,
            t_r_tilde: t_r_tilde(pk, horizon, t_r),
        })
    }
}

/// Precomputed decay weights of `ln f₁` for fixed times.
///
/// Row `i` of `pre` holds `e^{λ(t_j - t_i)}` and row `i` of `post` holds
/// `e^{λ(t_j - t_{i+1})}` for `j ≤ i`; every weight is at most 1.
#[derive(Debug, Clone)]
pub struct ExactObjective {
    k2_tilde: f64,
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
}

impl ExactObjective {
    pub fn new(pk: &DrugPK, times: &[f64], horizon: f64) -> Result<Self> {
        validate_times(times, horizon)?;
        let n = times.len();
        let next = |i: usize| if i + 1 < n { times[i + 1] } else { horizon };
        let lambda = pk.lambda();
        let pre = (0..n)
            .map(|i| (0..=i).map(|j| (lambda * (times[j] - times[i])).exp()).collect())
            .collect();
        let post = (0..n)
            .map(|i| (0..=i).map(|j| (lambda * (times[j] - next(i))).exp()).collect())
            .collect();
        Ok(Self {
            k2_tilde: pk.k2_tilde(),
            pre,
            post,
        })
    }

    pub fn len(&self) -> usize {
        self.pre.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pre.is_empty()
    }

    pub fn k2_tilde(&self) -> f64 {
        self.k2_tilde
    }

    fn check(&self, doses: &[f64]) {
        assert_eq!(doses.len(), self.len(), "dose vector length mismatch");
    }

    fn levels(&self, i: usize, doses: &[f64]) -> (f64, f64) {
        let dot = |w: &[f64]| w.iter().zip(doses).map(|(w, d)| w * d).sum::<f64>();
        (dot(&self.pre[i]) + self.k2_tilde, dot(&self.post[i]) + self.k2_tilde)
    }

    pub fn value(&self, doses: &[f64]) -> f64 {
        self.check(doses);
        (0..self.len())
            .map(|i| {
                let (num, den) = self.levels(i, doses);
                num.ln() - den.ln()
            })
            .sum()
    }

    pub fn gradient(&self, doses: &[f64]) -> Vec<f64> {
        self.check(doses);
        let mut grad = vec![0.0; self.len()];
        for i in 0..self.len() {
            let (num, den) = self.levels(i, doses);
            for (j, g) in grad.iter_mut().enumerate().take(i + 1) {
                *g += self.pre[i][j] / num - self.post[i][j] / den;
            }
        }
        grad
    }

    /// Dense Hessian, row-major.
    pub fn hessian(&self, doses: &[f64]) -> Vec<Vec<f64>> {
        self.check(doses);
        let n = self.len();
        let mut h = vec![vec![0.0; n]; n];
        for i in 0..n {
            let (num, den) = self.levels(i, doses);
            let (a, b) = (num * num, den * den);
            for j in 0..=i {
                for k in 0..=i {
                    h[j][k] += self.post[i][j] * self.post[i][k] / b
                        - self.pre[i][j] * self.pre[i][k] / a;
                }
            }
        }
        h
    }

    /// `value(doses + step) - value(doses)` without cancellation.
    pub fn change(&self, doses: &[f64], step: &[f64]) -> f64 {
        self.check(doses);
        self.check(step);
        let dot = |w: &[f64], v: &[f64]| w.iter().zip(v).map(|(w, v)| w * v).sum::<f64>();
        (0..self.len())
            .map(|i| {
                let (num, den) = self.levels(i, doses);
                (dot(&self.pre[i], step) / num).ln_1p() - (dot(&self.post[i], step) / den).ln_1p()
            })
            .sum()
    }
}

fn validate_doses(times: &[f64], doses: &[f64]) -> Result<()> {
    if doses.len() != times.len() {
        return Err(Error::InvalidSchedule(format!(
            "{} times but {} doses",
            times.len(),
            doses.len()
        )));
    }
    if let Some(d) = doses.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
        return Err(Error::InvalidSchedule(format!("doses must be >= 0, got {d}")));
    }
    Ok(())
}

/// `ln f₁(N, d)` evaluated from the explicit interval sums.
pub fn log_f1(pk: &DrugPK, times: &[f64], horizon: f64, doses: &[f64]) -> Result<f64> {
    validate_doses(times, doses)?;
    Ok(ExactObjective::new(pk, times, horizon)?.value(doses))
}

/// `∂ ln f₁ / ∂ d_i`.
pub fn grad_log_f1(pk: &DrugPK, times: &[f64], horizon: f64, doses: &[f64]) -> Result<Vec<f64>> {
    validate_doses(times, doses)?;
    Ok(ExactObjective::new(pk, times, horizon)?.gradient(doses))
}

/// Time-free approximation `Σ ln(1 + d_i/k̃2)`.
pub fn log_f1_hat(k2_tilde: f64, doses: &[f64]) -> f64 {
    debug_assert!(doses.iter().all(|d| *d >= 0.0));
    doses.iter().map(|d| (d / k2_tilde).ln_1p()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MainHypothesis {
    /// Gap `s` used, days.
    pub min_gap: f64,
    /// `d_max e^{-λ s}`, mg/m².
    pub lhs: f64,
    pub k2_tilde: f64,
    pub ratio: f64,
}

impl MainHypothesis {
    pub fn holds(&self) -> bool {
        self.ratio <= MAIN_HYPOTHESIS_WARN_RATIO
    }
}

/// Main-hypothesis diagnostic using the smallest inter-dose gap of `sched`.
pub fn check_main_hypothesis(pk: &DrugPK, sched: &DoseSchedule, d_max: f64) -> MainHypothesis {
    main_hypothesis_for_gap(pk, sched.min_gap(), d_max)
}

pub fn main_hypothesis_for_gap(pk: &DrugPK, min_gap: f64, d_max: f64) -> MainHypothesis {
    let lhs = d_max * (-pk.lambda() * min_gap).exp();
    let k2_tilde = pk.k2_tilde();
    MainHypothesis {
        min_gap,
        lhs,
        k2_tilde,
        ratio: lhs / k2_tilde,
    }
}

/// `T_R = (1/ξ) ln(ln(L*/θ) / ln(L0/θ))`: `L(T) ≤ L*` iff `∫ρ ≥ T + T_R`.
pub fn rest_time(tm: &TumorModel, l_star_rel: f64) -> Result<f64> {
    if !(l_star_rel > 0.0 && l_star_rel < 1.0) {
        return Err(Error::param(
            "l_star_rel",
            format!("must lie in (0, 1), got {l_star_rel}"),
        ));
    }
    Ok((l_star_rel.ln() / tm.l0_rel().ln()).ln() / tm.xi())
}

pub fn t_r_tilde(pk: &DrugPK, horizon: f64, t_r: f64) -> f64 {
    pk.lambda() / pk.k1() * (horizon + t_r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    /// `ln f₁ - T̃_R`.
    pub slack: f64,
}

/// Whether `sched` keeps the tumor at or below the palliative threshold.
pub fn palliative_feasible(pk: &DrugPK, sched: &DoseSchedule, target: &PalliativeTarget) -> Feasibility {
    let value = pkpd::scaled_cumulative_effect(pk, sched.times(), sched.doses(), sched.horizon());
    let slack = value - target.t_r_tilde;
    Feasibility {
        feasible: slack >= 0.0,
        slack,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::scheduler::{expand_pattern, Pattern};

    fn five_of_28(n: usize) -> Vec<f64> {
        expand_pattern(&"5/28d".parse::<Pattern>().unwrap(), n, 0.0)
    }

    #[test]
    fn bounds_validation() {
        assert!(DoseBounds::new(100.0, 200.0, Some(5750.0)).is_ok());
        assert!(DoseBounds::new(200.0, 200.0, None).is_err());
        assert!(DoseBounds::new(0.0, 200.0, None).is_err());
        assert!(DoseBounds::new(100.0, 200.0, Some(-1.0)).is_err());
        assert!(DoseBounds::new(100.0, 200.0, None).unwrap().require_cumulative().is_err());
    }

    #[test]
    fn log_f1_single_dose() {
        let pk = presets::tmz_drug();
        let (d, t1, horizon) = (120.0, 2.0, 9.0);
        let k2t = pk.k2_tilde();
        let expected = ((d + k2t) / (d * (pk.lambda() * (t1 - horizon)).exp() + k2t)).ln();
        let got = log_f1(&pk, &[t1], horizon, &[d]).unwrap();
        assert!((got - expected).abs() < 1e-14);
    }

    #[test]
    fn log_f1_vanishes_without_drug() {
        let pk = presets::tmz_drug();
        let times = five_of_28(10);
        assert_eq!(log_f1(&pk, &times, 210.0, &[0.0; 10]).unwrap(), 0.0);
        assert_eq!(log_f1_hat(90.0, &[0.0; 4]), 0.0);
    }

    #[test]
    fn log_f1_rejects_bad_input() {
        let pk = presets::tmz_drug();
        assert!(log_f1(&pk, &[0.0, 1.0], 5.0, &[1.0]).is_err());
        assert!(log_f1(&pk, &[1.0, 0.0], 5.0, &[1.0, 1.0]).is_err());
        assert!(log_f1(&pk, &[0.0], 5.0, &[-1.0]).is_err());
    }

    #[test]
    fn log_f1_hat_examples() {
        let expected = (100.0f64 / 90.0 + 1.0).ln() + (200.0f64 / 90.0 + 1.0).ln();
        assert!((log_f1_hat(90.0, &[100.0, 200.0]) - expected).abs() < 1e-15);
        let (total, n) = (5750.0, 40usize);
        let doses = vec![total / n as f64; n];
        let expected = n as f64 * (total / (n as f64 * 90.0) + 1.0).ln();
        assert!((log_f1_hat(90.0, &doses) - expected).abs() < 1e-12);
    }

    #[test]
    fn log_f1_matches_cumulative_effect() {
        let pk = presets::tmz_drug();
        let times = five_of_28(40);
        let doses: Vec<f64> = (0..40).map(|i| 100.0 + 2.5 * i as f64).collect();
        let sched = DoseSchedule::new(times.clone(), doses.clone(), 210.0).unwrap();
        let direct = log_f1(&pk, &times, 210.0, &doses).unwrap();
        let carried =
            pkpd::cumulative_effect(&pk, &sched, 210.0).unwrap() * pk.lambda() / pk.k1();
        assert!(((direct - carried) / direct).abs() < 1e-10);
    }

    #[test]
    fn change_agrees_with_difference() {
        let pk = DrugPK::new(1.5, 4e-3, 60.0, 0.36).unwrap();
        let times = [0.0, 0.5, 2.0, 2.25];
        let obj = ExactObjective::new(&pk, &times, 4.0).unwrap();
        let d = [100.0, 150.0, 80.0, 120.0];
        let step = [1.0, -2.0, 0.5, 0.5];
        let moved: Vec<f64> = d.iter().zip(&step).map(|(a, b)| a + b).collect();
        let diff = obj.value(&moved) - obj.value(&d);
        assert!((obj.change(&d, &step) - diff).abs() < 1e-13);
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let pk = DrugPK::new(1.5, 4e-3, 60.0, 0.36).unwrap();
        let times = [0.0, 0.5, 2.0, 2.25];
        let obj = ExactObjective::new(&pk, &times, 4.0).unwrap();
        let d = [100.0, 150.0, 80.0, 120.0];
        let h = obj.hessian(&d);
        for k in 0..4 {
            let step = 1e-3;
            let mut up = d;
            let mut down = d;
            up[k] += step;
            down[k] -= step;
            let (gu, gd) = (obj.gradient(&up), obj.gradient(&down));
            for j in 0..4 {
                let fd = (gu[j] - gd[j]) / (2.0 * step);
                assert!((fd - h[j][k]).abs() <= 1e-6 * h[j][k].abs().max(1e-9));
            }
            assert_eq!(h[k][(k + 1) % 4], h[(k + 1) % 4][k]);
        }
    }

    #[test]
    fn main_hypothesis_examples() {
        let pk = presets::tmz_drug();
        let mh = main_hypothesis_for_gap(&pk, 1.0, 200.0);
        assert!((mh.lhs - 0.01938).abs() < 1e-5);
        assert_eq!(mh.k2_tilde, pk.k2_tilde());
        assert!(mh.holds());
        let half = main_hypothesis_for_gap(&pk, 0.5, 200.0);
        assert!((half.lhs - 200.0 * (-4.621f64).exp()).abs() < 1e-12);
        let fast = DrugPK::new(1e4, 4e-3, 60.0, 0.36).unwrap();
        assert_eq!(main_hypothesis_for_gap(&fast, 1.0, 200.0).lhs, 0.0);
        let slow = DrugPK::new(0.1, 4e-3, 60.0, 0.36).unwrap();
        assert!(!main_hypothesis_for_gap(&slow, 1.0, 200.0).holds());
        let sched = DoseSchedule::new(five_of_28(12), vec![150.0; 12], 210.0).unwrap();
        assert_eq!(check_main_hypothesis(&pk, &sched, 200.0).min_gap, 1.0);
    }

    #[test]
    fn rest_time_examples() {
        let tm = presets::glioma_tumor();
        assert_eq!(rest_time(&tm, 0.25).unwrap(), 0.0);
        let t_r = rest_time(&tm, 0.1813).unwrap();
        assert!((t_r - 37.83228).abs() < 1e-4, "{t_r}");
        let fast = TumorModel::new(2.0 * tm.xi(), tm.l0_rel()).unwrap();
        assert!((rest_time(&fast, 0.1813).unwrap() - t_r / 2.0).abs() < 1e-12);
        assert!(rest_time(&tm, 0.5).unwrap() < 0.0);
        assert!(rest_time(&tm, 1.0).is_err());
        assert!(rest_time(&tm, 0.0).is_err());
    }

    #[test]
    fn t_r_tilde_examples() {
        let pk = presets::tmz_drug();
        assert_eq!(t_r_tilde(&pk, 210.0, -210.0), 0.0);
        let v = t_r_tilde(&pk, 210.0, 37.83228);
        assert!((v - 38.1744).abs() < 1e-3, "{v}");
        let doubled = DrugPK::new(pk.lambda(), pk.sigma(), 2.0 * pk.k1(), pk.k2()).unwrap();
        assert!((t_r_tilde(&doubled, 210.0, 37.8) - t_r_tilde(&pk, 210.0, 37.8) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn palliative_feasibility_trivial_target() {
        let pk = presets::tmz_drug();
        let target = PalliativeTarget {
            l_star_rel: 0.9,
            t_r: -210.0,
            t_r_tilde: 0.0,
        };
        let sched = DoseSchedule::new(vec![0.0], vec![1.0], 210.0).unwrap();
        let f = palliative_feasible(&pk, &sched, &target);
        assert!(f.feasible && f.slack >= 0.0);
    }
}
