//! Curative and palliative sweeps over `N`, and regeneration of the reference
//! tables with a cell-by-cell comparison against the embedded expected values.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::closed_form::{
    curative_optimal, feasible_n_range_curative, palliative_fixed_n, palliative_n_bounds,
    palliative_optimal, CurativePlan, NRange, PalliativeCase, PalliativeNBounds, PalliativePlan,
};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::exec::{map_rows, Execution};
use crate::nlp::{solve_curative_exact, solve_palliative_exact, SolveReport, SolverConfig};
use crate::objective::{palliative_feasible, DoseBounds, PalliativeTarget};
use crate::pkpd::{tumor_ratio, DoseSchedule, DrugPK, TumorModel};
use crate::presets;
use crate::scheduler::{capacity, dose_intensity, expand_pattern, Pattern};

/// Everything a sweep needs besides the palliative target.
#[derive(Debug, Clone)]
pub struct Setup {
    pub tumor: TumorModel,
    pub drug: DrugPK,
    pub horizon: f64,
    pub bounds: DoseBounds,
    pub pattern: Pattern,
    pub start_day: f64,
    pub solver: SolverConfig,
}

impl Setup {
    pub fn from_config(config: &RunConfig) -> Result<Self> {
        Ok(Self {
            tumor: config.tumor()?,
            drug: config.drug()?,
            horizon: config.horizon,
            bounds: config.bounds()?,
            pattern: config.pattern()?.clone(),
            start_day: config.t1,
            solver: config.solver,
        })
    }

    /// Reference drug and tumor with the given `d_min` and pattern.
    pub fn reference(d_min: f64, pattern: &str, curative: bool) -> Self {
        Self {
            tumor: presets::glioma_tumor(),
            drug: presets::tmz_drug(),
            horizon: presets::HORIZON,
            bounds: if curative {
                presets::curative_bounds(d_min)
            } else {
                presets::palliative_bounds(d_min)
            },
            pattern: pattern.parse().expect("valid reference pattern"),
            start_day: presets::FIRST_DAY,
            solver: SolverConfig::default(),
        }
    }

    pub fn capacity(&self) -> usize {
        capacity(&self.pattern, self.horizon, self.start_day)
    }

    pub fn times(&self, n: usize) -> Vec<f64> {
        expand_pattern(&self.pattern, n, self.start_day)
    }

    pub fn schedule(&self, doses: Vec<f64>) -> Result<DoseSchedule> {
        DoseSchedule::new(self.times(doses.len()), doses, self.horizon)
    }

    /// `L(T)/θ` for doses placed on the pattern.
    pub fn final_ratio(&self, doses: Vec<f64>) -> Result<f64> {
        tumor_ratio(&self.tumor, &self.drug, &self.schedule(doses)?, self.horizon)
    }
}

/// Condensed exact-solver outcome for one `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSummary {
    pub d_min: f64,
    pub d_max: f64,
    pub total: f64,
    /// `L(T)/θ`.
    pub ratio: f64,
    pub converged: bool,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub slack: Option<f64>,
}

impl ExactSummary {
    fn from_report(setup: &Setup, report: &SolveReport) -> Result<Self> {
        Ok(Self {
            d_min: report.min_dose,
            d_max: report.max_dose,
            total: report.total(),
            ratio: setup.final_ratio(report.doses.clone())?,
            converged: report.converged,
            kkt_residual: report.kkt_residual,
            iterations: report.iterations,
            slack: report.constraint_slack,
        })
    }
}

/// Solver failure or success; failures carry the reason as text.
pub type ExactOutcome = std::result::Result<ExactSummary, String>;

fn exact_ok(outcome: &Option<ExactOutcome>) -> bool {
    !matches!(outcome, Some(Err(_)) | Some(Ok(ExactSummary { converged: false, .. })))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurativeRow {
    pub n: usize,
    pub dose: f64,
    /// `L(T)/L0` with equal doses `D/N`.
    pub ratio_l0: f64,
    pub exact: Option<ExactOutcome>,
    pub optimal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurativeSweep {
    /// `L0/θ`, used to report ratios relative to `L0`.
    pub l0_rel: f64,
    pub range: NRange,
    pub capacity: usize,
    pub optimum: CurativePlan,
    pub rows: Vec<CurativeRow>,
}

impl CurativeSweep {
    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| exact_ok(&r.exact))
    }
}

/// Equal-split plans for every feasible `N` that fits the pattern, optionally
/// with the exact fixed-`N` solution next to each.
pub fn curative_sweep(setup: &Setup, exact: bool, exec: Execution) -> Result<CurativeSweep> {
    let k2t = setup.drug.k2_tilde();
    let range = feasible_n_range_curative(&setup.bounds)?;
    let cap = setup.capacity();
    let optimum = curative_optimal(&setup.bounds, k2t, Some(cap))?;
    let ns: Vec<usize> = range.capped(Some(cap)).iter().collect();
    let rows = map_rows(exec, &ns, |&n| -> Result<CurativeRow> {
        let plan = crate::closed_form::curative_fixed_n(&setup.bounds, n, k2t)?;
        let ratio_l0 = setup.final_ratio(vec![plan.dose; n])? / setup.tumor.l0_rel();
        let exact = exact.then(|| {
            solve_curative_exact(
                &setup.drug,
                &setup.times(n),
                setup.horizon,
                &setup.bounds,
                n,
                &setup.solver,
            )
            .and_then(|r| ExactSummary::from_report(setup, &r))
            .map_err(|e| e.to_string())
        });
        Ok(CurativeRow {
            n,
            dose: plan.dose,
            ratio_l0,
            exact,
            optimal: n == optimum.n,
        })
    });
    Ok(CurativeSweep {
        l0_rel: setup.tumor.l0_rel(),
        range,
        capacity: cap,
        optimum,
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}

pub fn curative_csv(sweep: &CurativeSweep) -> String {
    let with_exact = sweep.rows.iter().any(|r| r.exact.is_some());
    let mut out = String::from("n,dose,ratio_l0");
    if with_exact {
        out.push_str(",exact_d_min,exact_d_max,exact_ratio_l0,converged");
    }
    out.push_str(",optimal\n");
    for row in &sweep.rows {
        let _ = write!(out, "{},{:.2},{:.2}", row.n, row.dose, row.ratio_l0);
        if with_exact {
            out.push_str(&exact_columns(&row.exact, 2, Some(sweep.l0_rel)));
        }
        let _ = writeln!(out, ",{}", row.optimal);
    }
    out
}

fn exact_columns(outcome: &Option<ExactOutcome>, dose_decimals: usize, ratio_scale: Option<f64>) -> String {
    match outcome {
        Some(Ok(s)) => {
            let ratio = s.ratio / ratio_scale.unwrap_or(1.0);
            let ratio_decimals = if ratio_scale.is_some() { 2 } else { 5 };
            format!(
                ",{:.dp$},{:.dp$},{:.rp$},{}",
                s.d_min,
                s.d_max,
                ratio,
                s.converged,
                dp = dose_decimals,
                rp = ratio_decimals
            )
        }
        Some(Err(_)) => ",,,,false".to_string(),
        None => String::new(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PalliativeRow {
    pub n: usize,
    pub dose: f64,
    pub total: f64,
    /// `L(T)/θ` of the equal-dose plan.
    pub ratio: f64,
    /// `ln f₁ - T̃_R` of the equal-dose plan under the exact objective.
    pub slack: f64,
    pub exact: Option<ExactOutcome>,
    pub optimal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PalliativeSweep {
    pub target: PalliativeTarget,
    pub n_bounds: Option<PalliativeNBounds>,
    pub capacity: usize,
    pub optimum: PalliativePlan,
    pub optimum_ratio: f64,
    pub optimum_slack: f64,
    pub optimum_intensity: f64,
    pub rows: Vec<PalliativeRow>,
}

impl PalliativeSweep {
    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| exact_ok(&r.exact))
    }
}

/// Target-meeting equal doses for every admissible `N` that fits the pattern,
/// the global optimum of the approximated problem, and optionally the exact
/// fixed-`N` solutions.
pub fn palliative_sweep(
    setup: &Setup,
    target: &PalliativeTarget,
    exact: bool,
    exec: Execution,
) -> Result<PalliativeSweep> {
    let k2t = setup.drug.k2_tilde();
    let cap = setup.capacity();
    let t_r_tilde = target.t_r_tilde;
    let optimum = palliative_optimal(t_r_tilde, k2t, &setup.bounds, Some(cap))?;
    let optimum_doses = vec![optimum.dose; optimum.n];
    let optimum_sched = setup.schedule(optimum_doses.clone())?;
    let optimum_ratio = setup.final_ratio(optimum_doses)?;
    let optimum_slack = palliative_feasible(&setup.drug, &optimum_sched, target).slack;
    let optimum_intensity = dose_intensity(optimum.total, optimum_sched.times());

    let n_bounds = if t_r_tilde > 0.0 {
        Some(palliative_n_bounds(t_r_tilde, k2t, &setup.bounds)?)
    } else {
        None
    };
    let ns: Vec<usize> = match n_bounds {
        Some(nb) => (nb.n_min..nb.n_max).filter(|&n| n <= cap).collect(),
        None => Vec::new(),
    };
    let rows = map_rows(exec, &ns, |&n| -> Result<PalliativeRow> {
        let plan = palliative_fixed_n(t_r_tilde, k2t, n, &setup.bounds)?;
        let sched = setup.schedule(vec![plan.dose; n])?;
        let ratio = tumor_ratio(&setup.tumor, &setup.drug, &sched, setup.horizon)?;
        let slack = palliative_feasible(&setup.drug, &sched, target).slack;
        let exact = exact.then(|| {
            solve_palliative_exact(
                &setup.drug,
                sched.times(),
                setup.horizon,
                &setup.bounds,
                t_r_tilde,
                n,
                &setup.solver,
            )
            .and_then(|r| ExactSummary::from_report(setup, &r))
            .map_err(|e| e.to_string())
        });
        Ok(PalliativeRow {
            n,
            dose: plan.dose,
            total: plan.total,
            ratio,
            slack,
            exact,
            optimal: n == optimum.n,
        })
    });
    Ok(PalliativeSweep {
        target: *target,
        n_bounds,
        capacity: cap,
        optimum,
        optimum_ratio,
        optimum_slack,
        optimum_intensity,
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}

pub fn palliative_csv(sweep: &PalliativeSweep) -> String {
    let with_exact = sweep.rows.iter().any(|r| r.exact.is_some());
    let mut out = String::from("n,dose,total,ratio,slack");
    if with_exact {
        out.push_str(",exact_d_min,exact_d_max,exact_ratio,converged,exact_total");
    }
    out.push_str(",optimal\n");
    for row in &sweep.rows {
        let _ = write!(
            out,
            "{},{:.2},{:.2},{:.5},{:.3e}",
            row.n, row.dose, row.total, row.ratio, row.slack
        );
        if with_exact {
            out.push_str(&exact_columns(&row.exact, 5, None));
            match &row.exact {
                Some(Ok(s)) => {
                    let _ = write!(out, ",{:.2}", s.total);
                }
                _ => out.push(','),
            }
        }
        let _ = writeln!(out, ",{}", row.optimal);
    }
    out
}

// ---------------------------------------------------------------------------
// Reference table regeneration

const TABLE2: &str = include_str!("../data/table2.csv");
const TABLE3: &str = include_str!("../data/table3.csv");
const TABLE4: &str = include_str!("../data/table4.csv");
const TABLE5: &str = include_str!("../data/table5.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableId {
    /// Curative sweep over `N` on 5/28d, plus the usual protocol.
    CurativeSweep,
    /// Curative optimum for several `d_min`.
    CurativeDmin,
    /// Palliative sweep over `N` on 5/28d.
    PalliativeSweep,
    /// Palliative optimum for several `d_min`.
    PalliativeDmin,
}

impl TableId {
    pub const ALL: [TableId; 4] = [
        TableId::CurativeSweep,
        TableId::CurativeDmin,
        TableId::PalliativeSweep,
        TableId::PalliativeDmin,
    ];

    pub fn number(self) -> u8 {
        match self {
            TableId::CurativeSweep => 2,
            TableId::CurativeDmin => 3,
            TableId::PalliativeSweep => 4,
            TableId::PalliativeDmin => 5,
        }
    }

    fn expected_csv(self) -> &'static str {
        match self {
            TableId::CurativeSweep => TABLE2,
            TableId::CurativeDmin => TABLE3,
            TableId::PalliativeSweep => TABLE4,
            TableId::PalliativeDmin => TABLE5,
        }
    }
}

impl FromStr for TableId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "2" => Ok(TableId::CurativeSweep),
            "3" => Ok(TableId::CurativeDmin),
            "4" => Ok(TableId::PalliativeSweep),
            "5" => Ok(TableId::PalliativeDmin),
            other => Err(Error::param("table", format!("unknown table `{other}`; expected 2, 3, 4 or 5"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Text(String),
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Num(x) => write!(f, "{x:.6}"),
            Value::Text(s) => f.write_str(s),
        }
    }
}

/// One compared cell. `computed = None` marks a failed computation.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub row: String,
    pub column: String,
    pub expected: Value,
    pub computed: Option<Value>,
    pub tolerance: f64,
}

// Absorbs binary representation error of the printed decimals.
const REPR_SLACK: f64 = 1e-9;

impl Cell {
    pub fn deviation(&self) -> Option<f64> {
        match (&self.expected, &self.computed) {
            (Value::Num(e), Some(Value::Num(c))) => Some((c - e).abs()),
            _ => None,
        }
    }

    pub fn passed(&self) -> bool {
        match (&self.expected, &self.computed) {
            (Value::Num(_), Some(Value::Num(_))) => {
                self.deviation().is_some_and(|d| d <= self.tolerance + REPR_SLACK)
            }
            (Value::Text(e), Some(Value::Text(c))) => e == c,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reproduction {
    pub table: TableId,
    /// Regenerated table.
    pub csv: String,
    pub cells: Vec<Cell>,
}

impl Reproduction {
    pub fn passed(&self) -> bool {
        self.cells.iter().all(Cell::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter().filter(|c| !c.passed())
    }

    pub fn max_deviation(&self) -> f64 {
        self.cells.iter().filter_map(Cell::deviation).fold(0.0, f64::max)
    }

    /// Cells for one column, in row order.
    pub fn column(&self, name: &str) -> Vec<&Cell> {
        self.cells.iter().filter(|c| c.column == name).collect()
    }

    pub fn report(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "row,column,expected,computed,deviation,tolerance,status");
        for c in &self.cells {
            let computed = c.computed.as_ref().map_or("-".to_string(), |v| v.to_string());
            let deviation = c.deviation().map_or("-".to_string(), |d| format!("{d:.2e}"));
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.0e},{}",
                c.row,
                c.column,
                c.expected,
                computed,
                deviation,
                c.tolerance,
                if c.passed() { "pass" } else { "FAIL" }
            );
        }
        let failed = self.failures().count();
        let _ = writeln!(
            out,
            "# table {}: {} cells, {} failed, max deviation {:.3e}",
            self.table.number(),
            self.cells.len(),
            failed,
            self.max_deviation()
        );
        out
    }
}

/// Parsed expected table: header names and rows of raw fields.
struct Expected {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Expected {
    fn load(table: TableId) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(table.expected_csv().as_bytes());
        let header = reader
            .headers()
            .map_err(|e| Error::param("table", e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let rows = reader
            .records()
            .map(|r| r.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::param("table", e.to_string()))?;
        Ok(Self { header, rows })
    }

    fn field<'a>(&self, row: &'a [String], column: &str) -> &'a str {
        let idx = self
            .header
            .iter()
            .position(|h| h == column)
            .unwrap_or_else(|| panic!("embedded table lacks column `{column}`"));
        &row[idx]
    }

    fn num(&self, row: &[String], column: &str) -> f64 {
        self.field(row, column)
            .parse()
            .unwrap_or_else(|_| panic!("embedded table has a non-numeric `{column}`"))
    }
}

/// Cell collector for one table.
struct Cells<'a> {
    expected: &'a Expected,
    cells: Vec<Cell>,
}

impl<'a> Cells<'a> {
    fn num(&mut self, row_key: &str, row: &[String], column: &str, computed: Option<f64>, tolerance: f64) {
        self.cells.push(Cell {
            row: row_key.to_string(),
            column: column.to_string(),
            expected: Value::Num(self.expected.num(row, column)),
            computed: computed.map(Value::Num),
            tolerance,
        });
    }

    fn text(&mut self, row_key: &str, row: &[String], column: &str, computed: Option<String>) {
        self.cells.push(Cell {
            row: row_key.to_string(),
            column: column.to_string(),
            expected: Value::Text(self.expected.field(row, column).to_string()),
            computed: computed.map(Value::Text),
            tolerance: 0.0,
        });
    }
}

pub mod tolerance {
    //! Comparison tolerances per reproduced column.

    /// Doses and tumor ratios printed with two decimals.
    pub const TWO_DECIMALS: f64 = 0.005;
    /// One unit in the last printed place of two-decimal values.
    pub const TWO_DECIMAL_ULP: f64 = 0.01;
    /// One unit in the last printed place of five-decimal values.
    pub const FIVE_DECIMAL_ULP: f64 = 1e-5;
    /// Exact curative min/max dose.
    pub const EXACT_CURATIVE_DOSE: f64 = 0.05;
    /// Exact palliative total.
    pub const EXACT_PALLIATIVE_TOTAL: f64 = 0.5;
    /// Exact palliative min/max dose.
    pub const EXACT_PALLIATIVE_DOSE: f64 = 0.005;
    /// Exact palliative `L(T)/θ` must stay at or below 0.18135 (printed 0.18130).
    pub const EXACT_PALLIATIVE_RATIO: f64 = 5e-5;
}

/// Regenerates `table` and compares it with the embedded reference values.
pub fn reproduce(table: TableId, exec: Execution) -> Result<Reproduction> {
    match table {
        TableId::CurativeSweep => reproduce_curative_sweep(exec),
        TableId::CurativeDmin => reproduce_curative_dmin(exec),
        TableId::PalliativeSweep => reproduce_palliative_sweep(exec),
        TableId::PalliativeDmin => reproduce_palliative_dmin(exec),
    }
}

fn find_row<T>(rows: &[T], n: usize, key: impl Fn(&T) -> usize) -> Option<&T> {
    rows.iter().find(|r| key(r) == n)
}

fn reproduce_curative_sweep(exec: Execution) -> Result<Reproduction> {
    use tolerance::*;
    let expected = Expected::load(TableId::CurativeSweep)?;
    let setup = Setup::reference(100.0, "5/28d", true);
    let sweep = curative_sweep(&setup, true, exec)?;
    let mut cells = Cells {
        expected: &expected,
        cells: Vec::new(),
    };
    let total = presets::CUMULATIVE_DOSE;

    for row in &expected.rows {
        let key = expected.field(row, "row").to_string();
        if key == "UT" {
            let ratio = setup.final_ratio(presets::usual_treatment_doses())? / setup.tumor.l0_rel();
            let doses = presets::usual_treatment_doses();
            let lo = doses.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = doses.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            cells.num(&key, row, "n", Some(doses.len() as f64), 0.0);
            cells.num(&key, row, "exact_d_min", Some(lo), 0.0);
            cells.num(&key, row, "exact_d_max", Some(hi), 0.0);
            cells.num(&key, row, "exact_ratio_l0", Some(ratio), TWO_DECIMALS);
            continue;
        }
        let n = expected.num(row, "n") as usize;
        let got = find_row(&sweep.rows, n, |r| r.n);
        cells.num(&key, row, "dose", got.map(|r| r.dose), TWO_DECIMALS);
        cells.num(&key, row, "ratio_l0", got.map(|r| r.ratio_l0), TWO_DECIMALS);
        let exact = got.and_then(|r| match &r.exact {
            Some(Ok(s)) if s.converged => Some(s.clone()),
            _ => None,
        });
        cells.num(&key, row, "exact_d_min", exact.as_ref().map(|s| s.d_min), EXACT_CURATIVE_DOSE);
        cells.num(&key, row, "exact_d_max", exact.as_ref().map(|s| s.d_max), EXACT_CURATIVE_DOSE);
        cells.num(
            &key,
            row,
            "exact_ratio_l0",
            exact.as_ref().map(|s| s.ratio / setup.tumor.l0_rel()),
            TWO_DECIMALS,
        );
        let equal = total / n as f64;
        cells.cells.push(Cell {
            row: key.clone(),
            column: "exact_brackets_equal_split".into(),
            expected: Value::Text("yes".into()),
            computed: exact.as_ref().map(|s| {
                Value::Text(if s.d_min <= equal && equal <= s.d_max { "yes" } else { "no" }.into())
            }),
            tolerance: 0.0,
        });
    }

    let mut csv = curative_csv(&sweep);
    let ut_ratio = setup.final_ratio(presets::usual_treatment_doses())? / setup.tumor.l0_rel();
    let _ = writeln!(csv, "30 (UT),,,150.00,200.00,{ut_ratio:.2},true,false");
    Ok(Reproduction {
        table: TableId::CurativeSweep,
        csv,
        cells: cells.cells,
    })
}

/// Per-row patterns of the `d_min` tables.
fn dmin_pattern(expected: &Expected, row: &[String]) -> String {
    expected.field(row, "schedule").to_string()
}

fn reproduce_curative_dmin(exec: Execution) -> Result<Reproduction> {
    use tolerance::*;
    let expected = Expected::load(TableId::CurativeDmin)?;
    let rows = map_rows(exec, &expected.rows, |row| -> Result<(f64, String, CurativePlan, f64, f64)> {
        let d_min = expected.num(row, "d_min");
        let label = dmin_pattern(&expected, row);
        let setup = Setup::reference(d_min, &label, true);
        let plan = curative_optimal(&setup.bounds, setup.drug.k2_tilde(), Some(setup.capacity()))?;
        let ratio = setup.final_ratio(vec![plan.dose; plan.n])? / setup.tumor.l0_rel();
        let intensity = dose_intensity(plan.total, &setup.times(plan.n));
        Ok((d_min, label, plan, ratio, intensity))
    });
    let mut cells = Cells {
        expected: &expected,
        cells: Vec::new(),
    };
    let mut csv = String::from("d_min,n,dose,schedule,ratio_l0,dose_intensity\n");
    for (row, result) in expected.rows.iter().zip(rows) {
        let key = expected.field(row, "d_min").to_string();
        match result {
            Ok((d_min, label, plan, ratio, intensity)) => {
                let _ = writeln!(
                    csv,
                    "{d_min},{},{:.2},{label},{ratio:.2},{intensity:.2}",
                    plan.n, plan.dose
                );
                cells.num(&key, row, "n", Some(plan.n as f64), 0.0);
                cells.num(&key, row, "dose", Some(plan.dose), TWO_DECIMALS);
                cells.text(&key, row, "schedule", Some(label));
                cells.num(&key, row, "ratio_l0", Some(ratio), TWO_DECIMALS);
                cells.num(&key, row, "dose_intensity", Some(intensity), TWO_DECIMAL_ULP);
            }
            Err(_) => {
                for column in ["n", "dose", "ratio_l0", "dose_intensity"] {
                    cells.num(&key, row, column, None, 0.0);
                }
            }
        }
    }
    Ok(Reproduction {
        table: TableId::CurativeDmin,
        csv,
        cells: cells.cells,
    })
}

fn reference_target() -> Result<PalliativeTarget> {
    PalliativeTarget::new(
        &presets::glioma_tumor(),
        &presets::tmz_drug(),
        presets::HORIZON,
        presets::L_STAR_REL,
    )
}

fn reproduce_palliative_sweep(exec: Execution) -> Result<Reproduction> {
    use tolerance::*;
    let expected = Expected::load(TableId::PalliativeSweep)?;
    let setup = Setup::reference(100.0, "5/28d", false);
    let sweep = palliative_sweep(&setup, &reference_target()?, true, exec)?;
    let mut cells = Cells {
        expected: &expected,
        cells: Vec::new(),
    };
    for row in &expected.rows {
        let key = expected.field(row, "n").to_string();
        let n = expected.num(row, "n") as usize;
        let got = find_row(&sweep.rows, n, |r| r.n);
        cells.num(&key, row, "dose", got.map(|r| r.dose), TWO_DECIMALS);
        cells.num(&key, row, "total", got.map(|r| r.total), TWO_DECIMAL_ULP);
        cells.num(&key, row, "ratio", got.map(|r| r.ratio), FIVE_DECIMAL_ULP);
        let exact = got.and_then(|r| match &r.exact {
            Some(Ok(s)) if s.converged => Some(s.clone()),
            _ => None,
        });
        cells.num(&key, row, "exact_d_min", exact.as_ref().map(|s| s.d_min), EXACT_PALLIATIVE_DOSE);
        cells.num(&key, row, "exact_d_max", exact.as_ref().map(|s| s.d_max), EXACT_PALLIATIVE_DOSE);
        cells.num(&key, row, "exact_total", exact.as_ref().map(|s| s.total), EXACT_PALLIATIVE_TOTAL);
        cells.num(&key, row, "exact_ratio", exact.as_ref().map(|s| s.ratio), EXACT_PALLIATIVE_RATIO);
    }
    Ok(Reproduction {
        table: TableId::PalliativeSweep,
        csv: palliative_csv(&sweep),
        cells: cells.cells,
    })
}

fn reproduce_palliative_dmin(exec: Execution) -> Result<Reproduction> {
    use tolerance::*;
    let expected = Expected::load(TableId::PalliativeDmin)?;
    let target = reference_target()?;
    let rows = map_rows(exec, &expected.rows, |row| -> Result<(f64, String, PalliativePlan, f64, f64)> {
        let d_min = expected.num(row, "d_min");
        let label = dmin_pattern(&expected, row);
        let setup = Setup::reference(d_min, &label, false);
        let plan = palliative_optimal(target.t_r_tilde, setup.drug.k2_tilde(), &setup.bounds, Some(setup.capacity()))?;
        let ratio = setup.final_ratio(vec![plan.dose; plan.n])?;
        let intensity = dose_intensity(plan.total, &setup.times(plan.n));
        Ok((d_min, label, plan, ratio, intensity))
    });
    let mut cells = Cells {
        expected: &expected,
        cells: Vec::new(),
    };
    let mut csv = String::from("d_min,n,dose,total,schedule,ratio,dose_intensity,case\n");
    for (row, result) in expected.rows.iter().zip(rows) {
        let key = expected.field(row, "d_min").to_string();
        match result {
            Ok((d_min, label, plan, ratio, intensity)) => {
                let _ = writeln!(
                    csv,
                    "{d_min},{},{:.2},{:.2},{label},{ratio:.5},{intensity:.2},{}",
                    plan.n,
                    plan.dose,
                    plan.total,
                    plan.case.tag()
                );
                cells.num(&key, row, "n", Some(plan.n as f64), 0.0);
                cells.num(&key, row, "dose", Some(plan.dose), TWO_DECIMAL_ULP);
                cells.num(&key, row, "total", Some(plan.total), TWO_DECIMAL_ULP);
                cells.text(&key, row, "schedule", Some(label));
                cells.num(&key, row, "ratio", Some(ratio), FIVE_DECIMAL_ULP);
                cells.num(&key, row, "dose_intensity", Some(intensity), TWO_DECIMAL_ULP);
                let tag = match plan.case {
                    PalliativeCase::FixedN => None,
                    case => Some(case.tag().to_string()),
                };
                cells.text(&key, row, "case", tag);
            }
            Err(_) => {
                for column in ["n", "dose", "total", "ratio", "dose_intensity"] {
                    cells.num(&key, row, column, None, 0.0);
                }
            }
        }
    }
    Ok(Reproduction {
        table: TableId::PalliativeDmin,
        csv,
        cells: cells.cells,
    })
}
