//! Run configuration as flat `key = value` text.
//!
//! ```text
//! # drug
//! lambda = 9.242
//! sigma  = 0.004
//! k1 = 60
//! k2 = 0.36
//! # tumor and treatment window
//! xi = 0.00551
//! l0_rel = 0.25
//! T = 210
//! t1 = 0
//! # bounds
//! d_min = 100
//! d_max = 200
//! D = 5750
//! pattern = 5/28d
//! l_star_rel = 0.1813
//! ```
//!
//! `#` starts a comment. Unknown or repeated keys are errors. Solver
//! overrides: `optimality_tol`, `max_iterations`, `feasibility_tol`.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::nlp::SolverConfig;
use crate::objective::{DoseBounds, PalliativeTarget};
use crate::pkpd::{DrugPK, TumorModel};
use crate::presets;
use crate::scheduler::Pattern;

const KEYS: &[&str] = &[
    "lambda",
    "xi",
    "k1",
    "k2",
    "sigma",
    "d_min",
    "d_max",
    "D",
    "T",
    "l0_rel",
    "t1",
    "pattern",
    "l_star_rel",
    "optimality_tol",
    "max_iterations",
    "feasibility_tol",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub lambda: f64,
    pub xi: f64,
    pub k1: f64,
    pub k2: f64,
    pub sigma: f64,
    pub d_min: Option<f64>,
    pub d_max: f64,
    pub cumulative: Option<f64>,
    pub horizon: f64,
    pub l0_rel: f64,
    pub t1: f64,
    pub pattern: Option<Pattern>,
    pub l_star_rel: Option<f64>,
    pub solver: SolverConfig,
}

impl RunConfig {
    /// Temozolomide / glioma reference setup with `d_min = 100` on 5/28d.
    pub fn reference() -> Self {
        Self {
            lambda: presets::LAMBDA,
            xi: presets::XI,
            k1: presets::K1,
            k2: presets::K2,
            sigma: presets::SIGMA,
            d_min: Some(100.0),
            d_max: presets::D_MAX,
            cumulative: Some(presets::CUMULATIVE_DOSE),
            horizon: presets::HORIZON,
            l0_rel: presets::L0_REL,
            t1: presets::FIRST_DAY,
            pattern: Some(Pattern::new(5, 28).expect("valid pattern")),
            l_star_rel: Some(presets::L_STAR_REL),
            solver: SolverConfig::default(),
        }
    }

    pub fn drug(&self) -> Result<DrugPK> {
        DrugPK::new(self.lambda, self.sigma, self.k1, self.k2)
    }

    pub fn tumor(&self) -> Result<TumorModel> {
        TumorModel::new(self.xi, self.l0_rel)
    }

    /// Bounds including `D` when present.
    pub fn bounds(&self) -> Result<DoseBounds> {
        let d_min = self
            .d_min
            .ok_or_else(|| Error::param("d_min", "missing from config"))?;
        DoseBounds::new(d_min, self.d_max, self.cumulative)
    }

    pub fn pattern(&self) -> Result<&Pattern> {
        self.pattern
            .as_ref()
            .ok_or_else(|| Error::param("pattern", "missing from config"))
    }

    pub fn target(&self) -> Result<PalliativeTarget> {
        let l_star = self
            .l_star_rel
            .ok_or_else(|| Error::param("l_star_rel", "missing from config"))?;
        PalliativeTarget::new(&self.tumor()?, &self.drug()?, self.horizon, l_star)
    }

    pub fn validate(&self) -> Result<()> {
        self.drug()?;
        self.tumor()?;
        self.solver.validate()?;
        if !(self.d_max > 0.0 && self.d_max.is_finite()) {
            return Err(Error::param("d_max", format!("must be > 0, got {}", self.d_max)));
        }
        if self.d_min.is_some() {
            self.bounds()?;
        }
        if !(self.t1 >= 0.0 && self.t1 < self.horizon) {
            return Err(Error::param(
                "t1",
                format!("must satisfy 0 <= t1 < T, got t1 = {}, T = {}", self.t1, self.horizon),
            ));
        }
        if let Some(l) = self.l_star_rel {
            if !(l > 0.0 && l < 1.0) {
                return Err(Error::param("l_star_rel", format!("must lie in (0, 1), got {l}")));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |key: &str, value: String| {
            let _ = writeln!(out, "{key} = {value}");
        };
        put("lambda", self.lambda.to_string());
        put("sigma", self.sigma.to_string());
        put("k1", self.k1.to_string());
        put("k2", self.k2.to_string());
        put("xi", self.xi.to_string());
        put("l0_rel", self.l0_rel.to_string());
        put("T", self.horizon.to_string());
        put("t1", self.t1.to_string());
        if let Some(v) = self.d_min {
            put("d_min", v.to_string());
        }
        put("d_max", self.d_max.to_string());
        if let Some(v) = self.cumulative {
            put("D", v.to_string());
        }
        if let Some(p) = &self.pattern {
            put("pattern", p.to_string());
        }
        if let Some(v) = self.l_star_rel {
            put("l_star_rel", v.to_string());
        }
        put("optimality_tol", self.solver.optimality_tol.to_string());
        put("max_iterations", self.solver.max_iterations.to_string());
        put("feasibility_tol", self.solver.feasibility_tol.to_string());
        out
    }
}

impl FromStr for RunConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut seen: Vec<(&str, &str, usize)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                line: line_no,
                reason: format!("expected `key = value`, got `{line}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::Config {
                    line: line_no,
                    reason: format!("unknown key `{key}`"),
                });
            }
            if seen.iter().any(|(k, _, _)| *k == key) {
                return Err(Error::Config {
                    line: line_no,
                    reason: format!("duplicate key `{key}`"),
                });
            }
            seen.push((key, value, line_no));
        }

        let lookup = |key: &str| seen.iter().find(|(k, _, _)| *k == key).map(|(_, v, l)| (*v, *l));
        let number = |key: &str| -> Result<Option<f64>> {
            match lookup(key) {
                None => Ok(None),
                Some((v, line)) => v.parse::<f64>().map(Some).map_err(|_| Error::Config {
                    line,
                    reason: format!("`{key}` is not a number: `{v}`"),
                }),
            }
        };
        let required = |key: &'static str| -> Result<f64> {
            number(key)?.ok_or_else(|| Error::param(key, "missing from config"))
        };

        let defaults = SolverConfig::default();
        let max_iterations = match lookup("max_iterations") {
            None => defaults.max_iterations,
            Some((v, line)) => v.parse::<usize>().map_err(|_| Error::Config {
                line,
                reason: format!("`max_iterations` is not a whole number: `{v}`"),
            })?,
        };
        let pattern = match lookup("pattern") {
            None => None,
            Some((v, line)) => Some(v.parse::<Pattern>().map_err(|e| Error::Config {
                line,
                reason: e.to_string(),
            })?),
        };

        let config = RunConfig {
            lambda: required("lambda")?,
            xi: required("xi")?,
            k1: required("k1")?,
            k2: required("k2")?,
            sigma: required("sigma")?,
            d_min: number("d_min")?,
            d_max: required("d_max")?,
            cumulative: number("D")?,
            horizon: required("T")?,
            l0_rel: required("l0_rel")?,
            t1: number("t1")?.unwrap_or(0.0),
            pattern,
            l_star_rel: number("l_star_rel")?,
            solver: SolverConfig {
                optimality_tol: number("optimality_tol")?.unwrap_or(defaults.optimality_tol),
                max_iterations,
                feasibility_tol: number("feasibility_tol")?.unwrap_or(defaults.feasibility_tol),
            },
        };
        config.validate()?;
        Ok(config)
    }
}
