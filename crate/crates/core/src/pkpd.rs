//! Pharmacokinetics, Emax pharmacodynamics and Gompertz tumor response under
//! impulsive dosing.
//!
//! Everything is expressed on ratios: tumor size relative to the carrying
//! capacity (`L/θ`), so the capacity itself never appears. Time is in days,
//! doses in mg/m², concentrations in mg/l.
//!
//! The drug concentration after bolus doses `d_j` at times `t_j` is
//!
//! ```text
//! c(t) = σ Σ_{t_j ≤ t} d_j exp(-λ (t - t_j))
//! ```
//!
//! (right-continuous at dose instants), the effect is `ρ = k1 c / (k2 + c)`,
//! and the tumor ratio `x = L/θ` solves `x' = ξ x ln(1/x) (1 - ρ)` in closed
//! form: `x(t) = exp(ln(x0) exp(-ξ (t - ∫ρ)))`.

use crate::error::{require_positive, Error, Result};

/// Drug-specific PK/PD constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrugPK {
    lambda: f64,
    sigma: f64,
    k1: f64,
    k2: f64,
}

impl DrugPK {
    /// `lambda`: clearance rate (1/day); `sigma`: dose-to-concentration factor
    /// (m²/l); `k1`: maximal effect; `k2`: half-effect concentration (mg/l).
    pub fn new(lambda: f64, sigma: f64, k1: f64, k2: f64) -> Result<Self> {
        require_positive("lambda", lambda)?;
        require_positive("sigma", sigma)?;
        require_positive("k1", k1)?;
        require_positive("k2", k2)?;
        Ok(Self {
            lambda,
            sigma,
            k1,
            k2,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn k1(&self) -> f64 {
        self.k1
    }

    pub fn k2(&self) -> f64 {
        self.k2
    }

    /// Half-effect level expressed as a dose, `k2 / sigma` (mg/m²).
    pub fn k2_tilde(&self) -> f64 {
        self.k2 / self.sigma
    }
}

/// Gompertz growth rate and initial size relative to carrying capacity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TumorModel {
    xi: f64,
    l0_rel: f64,
}

impl TumorModel {
    pub fn new(xi: f64, l0_rel: f64) -> Result<Self> {
        require_positive("xi", xi)?;
        if !(l0_rel > 0.0 && l0_rel < 1.0) {
            return Err(Error::param("l0_rel", format!("must lie in (0, 1), got {l0_rel}")));
        }
        Ok(Self { xi, l0_rel })
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn l0_rel(&self) -> f64 {
        self.l0_rel
    }
}

/// Administration days, doses and the final day of the treatment window.
#[derive(Debug, Clone, PartialEq)]
pub struct DoseSchedule {
    times: Vec<f64>,
    doses: Vec<f64>,
    horizon: f64,
}

impl DoseSchedule {
    pub fn new(times: Vec<f64>, doses: Vec<f64>, horizon: f64) -> Result<Self> {
        validate_times(&times, horizon)?;
        if doses.len() != times.len() {
            return Err(Error::InvalidSchedule(format!(
                "{} times but {} doses",
                times.len(),
                doses.len()
            )));
        }
        if let Some((i, d)) = doses
            .iter()
            .enumerate()
            .find(|(_, d)| !(d.is_finite() && **d > 0.0))
        {
            return Err(Error::InvalidSchedule(format!("dose {i} must be > 0, got {d}")));
        }
        Ok(Self {
            times,
            doses,
            horizon,
        })
    }

    /// Same administration times with a new dose vector.
    pub fn with_doses(&self, doses: Vec<f64>) -> Result<Self> {
        Self::new(self.times.clone(), doses, self.horizon)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn doses(&self) -> &[f64] {
        &self.doses
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn total_dose(&self) -> f64 {
        self.doses.iter().sum()
    }

    /// Smallest gap between consecutive doses; for a single dose, the gap to
    /// the horizon.
    pub fn min_gap(&self) -> f64 {
        if self.times.len() == 1 {
            return self.horizon - self.times[0];
        }
        self.times
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest gap counting the final gap from the last dose to the horizon.
    pub fn min_gap_with_horizon(&self) -> f64 {
        let last = self.horizon - self.times[self.times.len() - 1];
        self.min_gap().min(last)
    }
}

/// Checks the time-only part of the schedule invariants.
pub(crate) fn validate_times(times: &[f64], horizon: f64) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidSchedule("at least one dose is required".into()));
    }
    if !horizon.is_finite() {
        return Err(Error::InvalidSchedule(format!("horizon must be finite, got {horizon}")));
    }
    if !(times[0].is_finite() && times[0] >= 0.0) {
        return Err(Error::InvalidSchedule(format!(
            "first time must be >= 0, got {}",
            times[0]
        )));
    }
    if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidSchedule(format!(
            "times must be strictly increasing (t[{}] = {}, t[{}] = {})",
            i,
            times[i],
            i + 1,
            times[i + 1]
        )));
    }
    let last = times[times.len() - 1];
    if !(last < horizon) {
        return Err(Error::InvalidSchedule(format!(
            "last time {last} must precede the horizon {horizon}"
        )));
    }
    Ok(())
}

/// Sampled tumor ratio and concentration.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub sample_times: Vec<f64>,
    pub tumor_ratio: Vec<f64>,
    pub concentration: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.sample_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_times.is_empty()
    }

    pub fn final_ratio(&self) -> Option<f64> {
        self.tumor_ratio.last().copied()
    }
}

fn check_time(sched: &DoseSchedule, t: f64) -> Result<()> {
    if t >= 0.0 && t <= sched.horizon {
        Ok(())
    } else {
        Err(Error::TimeOutOfRange {
            t,
            horizon: sched.horizon,
        })
    }
}

/// Drug concentration (mg/l) at day `t`. A dose given at `t` is included.
pub fn concentration(pk: &DrugPK, sched: &DoseSchedule, t: f64) -> Result<f64> {
    check_time(sched, t)?;
    Ok(concentration_unchecked(pk, sched.times(), sched.doses(), t))
}

pub(crate) fn concentration_unchecked(pk: &DrugPK, times: &[f64], doses: &[f64], t: f64) -> f64 {
    pk.sigma
        * times
            .iter()
            .zip(doses)
            .take_while(|(tj, _)| **tj <= t)
            .map(|(tj, dj)| dj * (-pk.lambda * (t - tj)).exp())
            .sum::<f64>()
}

/// Emax response `k1 c / (k2 + c)`.
pub fn emax_effect(pk: &DrugPK, c: f64) -> Result<f64> {
    if !(c >= 0.0) {
        return Err(Error::param("c", format!("concentration must be >= 0, got {c}")));
    }
    Ok(pk.k1 * c / (pk.k2 + c))
}

/// `∫_0^t ρ(s) ds` in closed form.
///
/// On each dose interval the drug mass decays exponentially, so
/// `∫ c/(k2+c) = (1/λ) ln((P + k̃2)/(P e^{-λΔ} + k̃2))` where `P` is the
/// dose-equivalent mass right after the dose. `P` is carried forward with
/// decay factors `≤ 1`, which keeps long schedules free of overflow.
pub fn cumulative_effect(pk: &DrugPK, sched: &DoseSchedule, t: f64) -> Result<f64> {
    check_time(sched, t)?;
    Ok(pk.k1 / pk.lambda * scaled_cumulative_effect(pk, sched.times(), sched.doses(), t))
}

/// `(λ/k1) ∫_0^t ρ`, i.e. the log of the f₁ ratio when `t` is the horizon.
pub(crate) fn scaled_cumulative_effect(pk: &DrugPK, times: &[f64], doses: &[f64], t: f64) -> f64 {
    let k2t = pk.k2_tilde();
    let mut carried = 0.0;
    let mut total = 0.0;
    for (i, (&ti, &di)) in times.iter().zip(doses).enumerate() {
        if ti >= t {
            break;
        }
        let end = times.get(i + 1).map_or(t, |&next| next.min(t));
        let mass = carried + di;
        let decay = (-pk.lambda * (end - ti)).exp();
        let lost = -mass * (-pk.lambda * (end - ti)).exp_m1();
        total += (lost / (mass * decay + k2t)).ln_1p();
        carried = mass * decay;
    }
    total
}

/// Untreated Gompertz trajectory on the ratio scale.
pub fn untreated_ratio(tm: &TumorModel, t: f64) -> f64 {
    (tm.l0_rel.ln() * (-tm.xi * t).exp()).exp()
}

/// Tumor size relative to carrying capacity at day `t`.
pub fn tumor_ratio(tm: &TumorModel, pk: &DrugPK, sched: &DoseSchedule, t: f64) -> Result<f64> {
    let effect = cumulative_effect(pk, sched, t)?;
    Ok(ratio_from_effect(tm, t, effect))
}

pub(crate) fn ratio_from_effect(tm: &TumorModel, t: f64, effect: f64) -> f64 {
    (tm.l0_rel.ln() * (-tm.xi * (t - effect)).exp()).exp()
}

/// Untreated growth rate `ξ x ln(1/x)` on the ratio scale.
pub fn gompertz_rate(tm: &TumorModel, l_rel: f64) -> Result<f64> {
    if !(l_rel > 0.0 && l_rel < 1.0) {
        return Err(Error::param("l_rel", format!("must lie in (0, 1), got {l_rel}")));
    }
    Ok(tm.xi * l_rel * (-l_rel.ln()))
}

/// Closed-form trajectory sampled every `step` days plus the horizon itself.
/// `sched = None` gives the untreated curve.
pub fn sample_trajectory(
    tm: &TumorModel,
    pk: &DrugPK,
    sched: Option<&DoseSchedule>,
    horizon: f64,
    step: f64,
) -> Result<Trajectory> {
    require_positive("step", step)?;
    require_positive("horizon", horizon)?;
    if let Some(s) = sched {
        if s.horizon != horizon {
            return Err(Error::InvalidSchedule(format!(
                "schedule horizon {} differs from requested {horizon}",
                s.horizon
            )));
        }
    }
    let mut out = Trajectory::default();
    let count = (horizon / step).floor() as usize;
    let mut grid: Vec<f64> = (0..=count).map(|k| k as f64 * step).collect();
    if grid.last().is_some_and(|&last| horizon - last > 1e-9 * horizon) {
        grid.push(horizon);
    }
    for t in grid {
        let t = t.min(horizon);
        let (ratio, c) = match sched {
            Some(s) => (tumor_ratio(tm, pk, s, t)?, concentration(pk, s, t)?),
            None => (untreated_ratio(tm, t), 0.0),
        };
        out.sample_times.push(t);
        out.tumor_ratio.push(ratio);
        out.concentration.push(c);
    }
    Ok(out)
}

/// Integrates `x' = ξ x ln(1/x) (1 - ρ(t))` with classical RK4.
///
/// Each dose interval is split into equal sub-steps no longer than `step`, so
/// no step straddles a dose instant where `ρ` jumps. Within an interval the
/// concentration is the post-dose level at its left end, decayed.
pub fn simulate_ode_oracle(
    tm: &TumorModel,
    pk: &DrugPK,
    sched: &DoseSchedule,
    step: f64,
) -> Result<Trajectory> {
    require_positive("step", step)?;
    let mut nodes = Vec::with_capacity(sched.len() + 2);
    nodes.push(0.0);
    nodes.extend(sched.times().iter().copied().filter(|&t| t > 0.0));
    nodes.push(sched.horizon());

    let rhs = |x: f64, rho: f64| tm.xi * x * (-x.ln()) * (1.0 - rho);
    let mut out = Trajectory::default();
    let mut x = tm.l0_rel;

    for w in nodes.windows(2) {
        let (a, b) = (w[0], w[1]);
        let c0 = concentration_unchecked(pk, sched.times(), sched.doses(), a);
        let rho = |t: f64| {
            let c = c0 * (-pk.lambda * (t - a)).exp();
            pk.k1 * c / (pk.k2 + c)
        };
        let substeps = ((b - a) / step).ceil().max(1.0) as usize;
        let h = (b - a) / substeps as f64;
        out.sample_times.push(a);
        out.tumor_ratio.push(x);
        out.concentration.push(c0);
        for k in 0..substeps {
            let t = a + k as f64 * h;
            let k1 = rhs(x, rho(t));
            let k2 = rhs(x + 0.5 * h * k1, rho(t + 0.5 * h));
            let k3 = rhs(x + 0.5 * h * k2, rho(t + 0.5 * h));
            let k4 = rhs(x + h * k3, rho(t + h));
            x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if k + 1 < substeps {
                out.sample_times.push(t + h);
                out.tumor_ratio.push(x);
                out.concentration.push(c0 * (-pk.lambda * (t + h - a)).exp());
            }
        }
    }
    let horizon = sched.horizon();
    out.sample_times.push(horizon);
    out.tumor_ratio.push(x);
    out.concentration
        .push(concentration_unchecked(pk, sched.times(), sched.doses(), horizon));
    Ok(out)
}
