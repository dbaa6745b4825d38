//! Analytic optima of the time-free (approximated) problems.
//!
//! Curative: for fixed `N` equal doses `D/N` maximize `Σ ln(1 + d_i/k̃2)`
//! (AM–GM), and `N ln(1 + D/(N k̃2))` grows with `N`, so the longest feasible
//! treatment `⌊D/d_min⌋` wins.
//!
//! Palliative: for fixed `N` the cheapest doses meeting `Σ ln(1 + d_i/k̃2) ≥ T̃_R`
//! are equal, `k̃2 (e^{T̃_R/N} - 1)`, and the total decreases with `N` up to
//! `N_max - 1`; the optimum is either that or `N_max` doses of `d_min`.

use crate::error::{Error, Result};
use crate::objective::DoseBounds;

/// Closed integer interval; empty when `lo > hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NRange {
    pub lo: usize,
    pub hi: usize,
}

impl NRange {
    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn contains(&self, n: usize) -> bool {
        self.lo <= n && n <= self.hi
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> {
        self.lo..=self.hi
    }

    pub fn len(&self) -> usize {
        if self.is_empty() {
            0
        } else {
            self.hi - self.lo + 1
        }
    }

    /// Restricts to `n ≤ cap`.
    pub fn capped(self, cap: Option<usize>) -> NRange {
        match cap {
            Some(cap) => NRange {
                lo: self.lo,
                hi: self.hi.min(cap),
            },
            None => self,
        }
    }
}

// Quotients like 5750/50 must land on the integer, not one ulp either side.
const INTEGER_SLACK: f64 = 1e-12;

fn floor_ratio(x: f64) -> usize {
    (x * (1.0 + INTEGER_SLACK)).floor().max(0.0) as usize
}

fn ceil_ratio(x: f64) -> usize {
    (x * (1.0 - INTEGER_SLACK)).ceil().max(0.0) as usize
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurativePlan {
    pub n: usize,
    pub dose: f64,
    pub total: f64,
    pub objective_log_f1_hat: f64,
}

/// `{⌈D/d_max⌉, …, ⌊D/d_min⌋}`; empty when no integer `N` can split `D`.
pub fn feasible_n_range_curative(bounds: &DoseBounds) -> Result<NRange> {
    let total = bounds.require_cumulative()?;
    Ok(NRange {
        lo: ceil_ratio(total / bounds.d_max()).max(1),
        hi: floor_ratio(total / bounds.d_min()),
    })
}

/// Equal split `D/n` and its approximate objective `n ln(1 + D/(n k̃2))`.
pub fn curative_fixed_n(bounds: &DoseBounds, n: usize, k2_tilde: f64) -> Result<CurativePlan> {
    let total = bounds.require_cumulative()?;
    let range = feasible_n_range_curative(bounds)?;
    if n < range.lo || n == 0 {
        return Err(Error::Infeasible(format!(
            "N = {n}: dose D/N = {:.4} exceeds d_max = {}",
            total / n.max(1) as f64,
            bounds.d_max()
        )));
    }
    if n > range.hi {
        return Err(Error::Infeasible(format!(
            "N = {n}: dose D/N = {:.4} is below d_min = {}",
            total / n as f64,
            bounds.d_min()
        )));
    }
    let dose = total / n as f64;
    Ok(CurativePlan {
        n,
        dose,
        total,
        objective_log_f1_hat: n as f64 * (dose / k2_tilde).ln_1p(),
    })
}

/// Longest feasible equal-dose treatment, optionally capped by the number of
/// dosing slots the chosen pattern offers.
pub fn curative_optimal(bounds: &DoseBounds, k2_tilde: f64, cap: Option<usize>) -> Result<CurativePlan> {
    let range = feasible_n_range_curative(bounds)?;
    if range.is_empty() {
        return Err(Error::Infeasible(format!(
            "no integer N in [D/d_max, D/d_min] (ceil = {}, floor = {})",
            range.lo, range.hi
        )));
    }
    let capped = range.capped(cap);
    if capped.is_empty() {
        return Err(Error::Infeasible(format!(
            "schedule capacity {} is below the smallest feasible N = {}",
            cap.unwrap_or(0),
            range.lo
        )));
    }
    curative_fixed_n(bounds, capped.hi, k2_tilde)
}

/// `(1 + 1/x)^x`, strictly increasing on `(0, ∞)`.
pub fn phi1(x: f64) -> Result<f64> {
    check_phi_arg(x)?;
    Ok((x * (1.0 / x).ln_1p()).exp())
}

/// `x (e^{1/x} - 1)`, strictly decreasing on `(0, ∞)`.
pub fn phi2(x: f64) -> Result<f64> {
    check_phi_arg(x)?;
    Ok(x * (1.0 / x).exp_m1())
}

fn check_phi_arg(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::param("x", format!("must be > 0, got {x}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PalliativeNBounds {
    /// Fewest doses that can reach the target at `d_max`.
    pub n_min: usize,
    /// Doses of `d_min` needed to reach the target.
    pub n_max: usize,
}

/// `N_min = ⌈T̃_R / ln(1 + d_max/k̃2)⌉`, `N_max = ⌈T̃_R / ln(1 + d_min/k̃2)⌉`.
pub fn palliative_n_bounds(t_r_tilde: f64, k2_tilde: f64, bounds: &DoseBounds) -> Result<PalliativeNBounds> {
    if !(t_r_tilde > 0.0 && t_r_tilde.is_finite()) {
        return Err(Error::param(
            "t_r_tilde",
            format!("N bounds need a positive target, got {t_r_tilde}"),
        ));
    }
    let n_min = ceil_ratio(t_r_tilde / (bounds.d_max() / k2_tilde).ln_1p()).max(1);
    let n_max = ceil_ratio(t_r_tilde / (bounds.d_min() / k2_tilde).ln_1p()).max(1);
    if n_min > n_max {
        return Err(Error::Infeasible(format!("N_min = {n_min} exceeds N_max = {n_max}")));
    }
    Ok(PalliativeNBounds { n_min, n_max })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PalliativeCase {
    /// `N_max - 1` equal doses that meet the target exactly.
    A,
    /// `N_max` doses at `d_min`.
    B,
    /// A prescribed (or capacity-capped) `N` with the exact-target dose.
    FixedN,
}

impl PalliativeCase {
    pub fn tag(&self) -> &'static str {
        match self {
            PalliativeCase::A => "a",
            PalliativeCase::B => "b",
            PalliativeCase::FixedN => "fixed_n",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PalliativePlan {
    pub n: usize,
    pub dose: f64,
    pub total: f64,
    pub case: PalliativeCase,
}

fn target_dose(t_r_tilde: f64, k2_tilde: f64, n: usize) -> f64 {
    k2_tilde * (t_r_tilde / n as f64).exp_m1()
}

/// Cheapest equal doses reaching the target with exactly `n` doses,
/// `k̃2 (e^{T̃_R/n} - 1)`, for `n ∈ [N_min, N_max - 1]`.
pub fn palliative_fixed_n(
    t_r_tilde: f64,
    k2_tilde: f64,
    n: usize,
    bounds: &DoseBounds,
) -> Result<PalliativePlan> {
    let nb = palliative_n_bounds(t_r_tilde, k2_tilde, bounds)?;
    if n < nb.n_min {
        return Err(Error::Infeasible(format!(
            "N = {n} is below N_min = {}: even d_max doses miss the target",
            nb.n_min
        )));
    }
    if n + 1 > nb.n_max {
        return Err(Error::Infeasible(format!(
            "N = {n} exceeds N_max - 1 = {}: the target dose would fall below d_min",
            nb.n_max - 1
        )));
    }
    let dose = target_dose(t_r_tilde, k2_tilde, n);
    Ok(PalliativePlan {
        n,
        dose,
        total: n as f64 * dose,
        case: PalliativeCase::FixedN,
    })
}

/// Globally cheapest plan of the approximated palliative problem.
///
/// With `cap` below `N_max` the longest admissible treatment is returned with
/// [`PalliativeCase::FixedN`]. When `(N_max - 1) d* = N_max d_min` exactly,
/// case A (fewer doses) is reported.
pub fn palliative_optimal(
    t_r_tilde: f64,
    k2_tilde: f64,
    bounds: &DoseBounds,
    cap: Option<usize>,
) -> Result<PalliativePlan> {
    if cap == Some(0) {
        return Err(Error::Infeasible("schedule has no dosing slots".into()));
    }
    if t_r_tilde <= 0.0 {
        return Ok(PalliativePlan {
            n: 1,
            dose: bounds.d_min(),
            total: bounds.d_min(),
            case: PalliativeCase::B,
        });
    }
    let nb = palliative_n_bounds(t_r_tilde, k2_tilde, bounds)?;
    if let Some(cap) = cap {
        if cap < nb.n_min {
            return Err(Error::Infeasible(format!(
                "schedule capacity {cap} is below N_min = {}",
                nb.n_min
            )));
        }
        if cap < nb.n_max {
            return palliative_fixed_n(t_r_tilde, k2_tilde, cap, bounds);
        }
    }
    let case_b = PalliativePlan {
        n: nb.n_max,
        dose: bounds.d_min(),
        total: nb.n_max as f64 * bounds.d_min(),
        case: PalliativeCase::B,
    };
    let shorter = nb.n_max - 1;
    if shorter == 0 || shorter < nb.n_min {
        return Ok(case_b);
    }
    let d_star = target_dose(t_r_tilde, k2_tilde, shorter);
    // Ties are decided up to rounding of the exponential.
    if shorter as f64 * d_star <= case_b.total * (1.0 + INTEGER_SLACK) {
        Ok(PalliativePlan {
            n: shorter,
            dose: d_star,
            total: shorter as f64 * d_star,
            case: PalliativeCase::A,
        })
    } else {
        Ok(case_b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    const K2T: f64 = 90.0;

    fn table_target() -> f64 {
        let tm = presets::glioma_tumor();
        let pk = presets::tmz_drug();
        crate::objective::PalliativeTarget::new(&tm, &pk, presets::HORIZON, presets::L_STAR_REL)
            .unwrap()
            .t_r_tilde
    }

    fn curative(d_min: f64, d_max: f64, total: f64) -> DoseBounds {
        DoseBounds::new(d_min, d_max, Some(total)).unwrap()
    }

    #[test]
    fn curative_ranges() {
        assert_eq!(
            feasible_n_range_curative(&curative(100.0, 200.0, 5750.0)).unwrap(),
            NRange { lo: 29, hi: 57 }
        );
        let one = feasible_n_range_curative(&curative(100.0, 200.0, 150.0)).unwrap();
        assert_eq!((one.lo, one.hi, one.len()), (1, 1, 1));
        let empty = feasible_n_range_curative(&curative(90.0, 110.0, 250.0)).unwrap();
        assert!(empty.is_empty());
        assert_eq!(empty.len(), 0);
        assert!(curative_optimal(&curative(90.0, 110.0, 250.0), K2T, None).is_err());
        assert!(feasible_n_range_curative(&presets::palliative_bounds(100.0)).is_err());
    }

    #[test]
    fn curative_fixed_n_examples() {
        let b = curative(100.0, 200.0, 5750.0);
        assert_eq!(curative_fixed_n(&b, 40, K2T).unwrap().dose, 143.75);
        let p29 = curative_fixed_n(&b, 29, K2T).unwrap();
        assert!((p29.dose - 198.28).abs() < 0.005);
        assert!((p29.total - 29.0 * p29.dose).abs() < 1e-9);
        let low = curative(50.0, 200.0, 5750.0);
        assert_eq!(curative_fixed_n(&low, 115, K2T).unwrap().dose, 50.0);
        let err = curative_fixed_n(&b, 28, K2T).unwrap_err().to_string();
        assert!(err.contains("d_max"), "{err}");
        let err = curative_fixed_n(&b, 58, K2T).unwrap_err().to_string();
        assert!(err.contains("d_min"), "{err}");
    }

    #[test]
    fn curative_optimal_examples() {
        let p = curative_optimal(&curative(100.0, 200.0, 5750.0), K2T, Some(40)).unwrap();
        assert_eq!(p.n, 40);
        let p = curative_optimal(&curative(100.0, 200.0, 5750.0), K2T, None).unwrap();
        assert_eq!(p.n, 57);
        let p = curative_optimal(&curative(75.0, 200.0, 5750.0), K2T, None).unwrap();
        assert_eq!(p.n, 76);
        assert!((p.dose - 75.66).abs() < 0.005);
        let p = curative_optimal(&curative(150.0, 200.0, 5750.0), K2T, None).unwrap();
        assert_eq!(p.n, 38);
        assert!((p.dose - 151.32).abs() < 0.005);
        assert!(curative_optimal(&curative(100.0, 200.0, 5750.0), K2T, Some(20)).is_err());
    }

    #[test]
    fn phi_examples() {
        assert!((phi1(1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((phi2(1e8).unwrap() - 1.0).abs() < 1e-8);
        assert!(phi1(0.0).is_err());
        assert!(phi2(-1.0).is_err());
    }

    #[test]
    fn palliative_bounds_examples() {
        let t = table_target();
        let nb = palliative_n_bounds(t, K2T, &presets::palliative_bounds(100.0)).unwrap();
        assert_eq!((nb.n_min, nb.n_max), (33, 52));
        let nb = palliative_n_bounds(1e-9, K2T, &presets::palliative_bounds(100.0)).unwrap();
        assert_eq!((nb.n_min, nb.n_max), (1, 1));
        assert!(palliative_n_bounds(0.0, K2T, &presets::palliative_bounds(100.0)).is_err());
    }

    #[test]
    fn palliative_fixed_n_examples() {
        let t = table_target();
        let b = presets::palliative_bounds(100.0);
        let p40 = palliative_fixed_n(t, K2T, 40, &b).unwrap();
        assert!((p40.dose - 143.73).abs() < 0.005);
        assert!((p40.total - 5749.24).abs() < 0.01);
        let p33 = palliative_fixed_n(t, K2T, 33, &b).unwrap();
        assert!((p33.dose - 196.18).abs() < 0.005);
        assert!((p33.total - 6473.84).abs() < 0.01);
        let n = 7;
        let unit = palliative_fixed_n(n as f64 * 2f64.ln(), K2T, n, &presets::palliative_bounds(10.0))
            .unwrap();
        assert!((unit.dose - 90.0).abs() < 1e-12);
        assert!(palliative_fixed_n(t, K2T, 32, &b).unwrap_err().to_string().contains("N_min"));
        assert!(palliative_fixed_n(t, K2T, 52, &b).unwrap_err().to_string().contains("N_max"));
    }

    #[test]
    fn palliative_optimal_examples() {
        let t = table_target();
        let cases = [
            (150.0, PalliativeCase::B, 39, 150.00, 5850.00),
            (100.0, PalliativeCase::A, 51, 100.25, 5112.64),
            (75.0, PalliativeCase::B, 63, 75.00, 4725.00),
            (50.0, PalliativeCase::A, 86, 50.29, 4324.78),
        ];
        for (d_min, case, n, dose, total) in cases {
            let p = palliative_optimal(t, K2T, &presets::palliative_bounds(d_min), None).unwrap();
            assert_eq!((p.case, p.n), (case, n), "d_min = {d_min}");
            assert!((p.dose - dose).abs() < 0.005, "d_min = {d_min}: {}", p.dose);
            assert!((p.total - total).abs() < 0.005, "d_min = {d_min}: {}", p.total);
        }
    }

    #[test]
    fn palliative_optimal_capped_and_trivial() {
        let t = table_target();
        let b = presets::palliative_bounds(100.0);
        let p = palliative_optimal(t, K2T, &b, Some(40)).unwrap();
        assert_eq!((p.n, p.case), (40, PalliativeCase::FixedN));
        assert!(palliative_optimal(t, K2T, &b, Some(30)).is_err());
        let p = palliative_optimal(-1.0, K2T, &b, None).unwrap();
        assert_eq!((p.n, p.dose, p.case), (1, 100.0, PalliativeCase::B));
    }

    #[test]
    fn palliative_tie_reports_case_a() {
        // T̃_R chosen so that (N_max - 1) d* = N_max d_min with N_max = 3, d_min = 90:
        // 2 k̃2 (e^{T/2} - 1) = 270  ⇒  T = 2 ln(2.5).
        let b = presets::palliative_bounds(90.0);
        let t = 2.0 * 2.5f64.ln();
        let nb = palliative_n_bounds(t, K2T, &b).unwrap();
        assert_eq!(nb.n_max, 3);
        let p = palliative_optimal(t, K2T, &b, None).unwrap();
        assert_eq!((p.case, p.n), (PalliativeCase::A, 2));
        assert!((p.total - 270.0).abs() < 1e-9);
    }
}
