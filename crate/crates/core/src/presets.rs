//! Temozolomide / high-grade glioma reference parameters.

use crate::objective::DoseBounds;
use crate::pkpd::{DrugPK, TumorModel};

/// Clearance rate, 1/day (half-life 1.8 h).
pub const LAMBDA: f64 = 9.242;
pub const XI: f64 = 5.51e-3;
pub const K1: f64 = 60.0;
pub const K2: f64 = 0.36;
pub const SIGMA: f64 = 4e-3;
pub const D_MAX: f64 = 200.0;
pub const HORIZON: f64 = 210.0;
pub const L0_REL: f64 = 0.25;
pub const FIRST_DAY: f64 = 0.0;
/// Cumulative dose of the usual protocol, 5 x 150 + 25 x 200 mg/m².
pub const CUMULATIVE_DOSE: f64 = 5750.0;
/// Palliative threshold `L*/θ` used for the palliative sweeps.
pub const L_STAR_REL: f64 = 0.1813;

pub fn tmz_drug() -> DrugPK {
    DrugPK::new(LAMBDA, SIGMA, K1, K2).expect("reference drug parameters are valid")
}

pub fn glioma_tumor() -> TumorModel {
    TumorModel::new(XI, L0_REL).expect("reference tumor parameters are valid")
}

/// Curative bounds with the reference `D` and `d_max`.
pub fn curative_bounds(d_min: f64) -> DoseBounds {
    DoseBounds::new(d_min, D_MAX, Some(CUMULATIVE_DOSE)).expect("valid curative bounds")
}

pub fn palliative_bounds(d_min: f64) -> DoseBounds {
    DoseBounds::new(d_min, D_MAX, None).expect("valid palliative bounds")
}

/// The usual protocol: 30 doses on 5/28d, 150 mg/m² in the first cycle and
/// 200 mg/m² afterwards.
pub fn usual_treatment_doses() -> Vec<f64> {
    let mut doses = vec![150.0; 5];
    doses.extend(std::iter::repeat(200.0).take(25));
    doses
}
