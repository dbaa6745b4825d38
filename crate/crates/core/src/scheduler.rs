//! Cyclic administration patterns such as `5/28d` (five consecutive dosing
//! days in every 28-day cycle), used to place doses once `N` is known.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pattern {
    days_on: u32,
    cycle_length: u32,
}

impl Pattern {
    pub fn new(days_on: u32, cycle_length: u32) -> Result<Self> {
        if days_on == 0 || days_on > cycle_length {
            return Err(Error::param(
                "pattern",
                format!("need 1 <= days_on <= cycle_length, got {days_on}/{cycle_length}"),
            ));
        }
        Ok(Self {
            days_on,
            cycle_length,
        })
    }

    pub fn days_on(&self) -> u32 {
        self.days_on
    }

    pub fn cycle_length(&self) -> u32 {
        self.cycle_length
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}d", self.days_on, self.cycle_length)
    }
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::PatternParse(s.to_string());
        let body = s.trim().strip_suffix('d').ok_or_else(bad)?;
        let (on, cycle) = body.split_once('/').ok_or_else(bad)?;
        let on: u32 = on.parse().map_err(|_| Error::PatternParse(on.to_string()))?;
        let cycle: u32 = cycle
            .parse()
            .map_err(|_| Error::PatternParse(cycle.to_string()))?;
        Pattern::new(on, cycle)
    }
}

/// First `n` dosing days of the repeating pattern starting at `start_day`.
pub fn expand_pattern(p: &Pattern, n: usize, start_day: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let cycle = (k as u32 / p.days_on) as f64;
            let offset = (k as u32 % p.days_on) as f64;
            start_day + cycle * p.cycle_length as f64 + offset
        })
        .collect()
}

/// Largest `n` whose dosing days all fall strictly before `horizon`.
pub fn capacity(p: &Pattern, horizon: f64, start_day: f64) -> usize {
    let span = horizon - start_day;
    if span <= 0.0 {
        return 0;
    }
    let cycle = p.cycle_length as f64;
    let full = (span / cycle).floor();
    let rest = span - full * cycle;
    let partial = (rest.ceil() as u32).min(p.days_on);
    full as usize * p.days_on as usize + partial as usize
}

/// Inclusive day count from the first to the last dose.
pub fn duration(times: &[f64]) -> f64 {
    match (times.first(), times.last()) {
        (Some(first), Some(last)) => last - first + 1.0,
        _ => 0.0,
    }
}

/// Total dose divided by treatment duration, mg/m²/day.
pub fn dose_intensity(total: f64, times: &[f64]) -> f64 {
    total / duration(times)
}
