use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use metrodose::config::RunConfig;
use metrodose::objective::{main_hypothesis_for_gap, MainHypothesis};
use metrodose::pkpd::sample_trajectory;
use metrodose::scheduler::{dose_intensity, expand_pattern};
use metrodose::tables::{self, Setup, TableId};
use metrodose::{DoseSchedule, Execution, Pattern};

/// Dose fractionation for impulsive chemotherapy: simulation, curative and
/// palliative planning, and regeneration of the reference tables.
#[derive(Parser)]
#[command(name = "metrodose", version, about)]
struct Cli {
    /// Evaluate table rows one after another instead of in parallel.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the tumor and concentration curves of a schedule.
    Simulate(SimulateArgs),
    /// Fixed cumulative dose: plan per N and the optimal N.
    Curative(PlanArgs),
    /// Tumor threshold at the horizon: cheapest plan per N and overall.
    Palliative(PlanArgs),
    /// Check that doses barely overlap (d_max e^{-λs} against k2/σ).
    CheckMh(CheckArgs),
    /// Regenerate a reference table and compare it cell by cell.
    Reproduce(ReproduceArgs),
    /// Print the effective configuration in the config file format.
    PrintConfig(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Parameter file (`key = value` lines). Defaults to the reference setup.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Administration pattern such as 5/28d; overrides the config.
    #[arg(long)]
    pattern: Option<Pattern>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Doses in mg/m², comma separated; `value*count` repeats a value.
    #[arg(long)]
    doses: String,
    /// Explicit administration days. Without it the pattern is used.
    #[arg(long)]
    times: Option<String>,
    /// Sampling step in days.
    #[arg(long, default_value_t = 1.0)]
    step: f64,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Also solve the exact fixed-N problem for every row.
    #[arg(long)]
    exact: bool,
    /// Emit only the optimal row.
    #[arg(long)]
    optimum_only: bool,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Smallest gap between doses in days. Defaults to the pattern's.
    #[arg(long)]
    gap: Option<f64>,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Table to regenerate: 2, 3, 4 or 5.
    #[arg(long, value_parser = parse_table)]
    table: TableId,
    /// Write the regenerated table here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the per-cell comparison here instead of stderr.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn parse_table(s: &str) -> Result<TableId, String> {
    s.parse().map_err(|e: metrodose::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Curative(args) => curative(args, exec),
        Command::Palliative(args) => palliative(args, exec),
        Command::CheckMh(args) => check_mh(args),
        Command::Reproduce(args) => reproduce(args, exec),
        Command::PrintConfig(args) => print_config(args),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(common: &CommonArgs) -> anyhow::Result<RunConfig> {
    let mut config = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            text.parse::<RunConfig>()
                .with_context(|| format!("in {}", path.display()))?
        }
        None => RunConfig::reference(),
    };
    if let Some(p) = &common.pattern {
        config.pattern = Some(p.clone());
    }
    Ok(config)
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// `150*5,200*25` → five 150s followed by twenty-five 200s.
fn parse_doses(text: &str) -> anyhow::Result<Vec<f64>> {
    let mut doses = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (value, count) = match item.split_once('*') {
            Some((v, c)) => (v.trim(), c.trim().parse::<usize>().with_context(|| format!("bad repeat count in `{item}`"))?),
            None => (item, 1),
        };
        let value: f64 = value.parse().with_context(|| format!("bad dose `{item}`"))?;
        doses.extend(std::iter::repeat(value).take(count));
    }
    if doses.is_empty() {
        bail!("--doses is empty");
    }
    Ok(doses)
}

fn parse_times(text: &str) -> anyhow::Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().with_context(|| format!("bad time `{s}`")))
        .collect()
}

fn warn_main_hypothesis(mh: &MainHypothesis) {
    if !mh.holds() {
        eprintln!(
            "warning: doses overlap: d_max e^(-lambda s) / k2_tilde = {:.4e} exceeds {} (s = {})",
            mh.ratio,
            metrodose::objective::MAIN_HYPOTHESIS_WARN_RATIO,
            mh.min_gap
        );
    }
}

fn simulate(args: SimulateArgs) -> anyhow::Result<bool> {
    let config = load_config(&args.common)?;
    let tumor = config.tumor()?;
    let drug = config.drug()?;
    let doses = parse_doses(&args.doses)?;
    let times = match &args.times {
        Some(text) => parse_times(text)?,
        None => {
            let pattern = config.pattern().context("give --times or a pattern")?;
            expand_pattern(pattern, doses.len(), config.t1)
        }
    };
    if times.len() != doses.len() {
        bail!("{} times for {} doses", times.len(), doses.len());
    }
    // An all-zero list is the untreated reference; schedules need positive doses.
    let sched = if doses.iter().all(|&d| d == 0.0) {
        None
    } else {
        Some(DoseSchedule::new(times, doses, config.horizon)?)
    };
    if let Some(s) = sched.as_ref().filter(|s| s.len() > 1) {
        warn_main_hypothesis(&metrodose::objective::check_main_hypothesis(&drug, s, config.d_max));
    }
    let traj = sample_trajectory(&tumor, &drug, sched.as_ref(), config.horizon, args.step)?;

    let mut csv = String::from("day,tumor_ratio,concentration\n");
    for i in 0..traj.len() {
        csv.push_str(&format!(
            "{},{:.8},{:.8e}\n",
            traj.sample_times[i], traj.tumor_ratio[i], traj.concentration[i]
        ));
    }
    emit(args.common.out.as_deref(), &csv)?;

    let ratio = traj.final_ratio().expect("trajectory includes the horizon");
    let total = sched.as_ref().map_or(0.0, DoseSchedule::total_dose);
    eprintln!(
        "L(T)/theta = {ratio:.5}  L(T)/L0 = {:.4}  total = {total:.2}  doses = {}",
        ratio / tumor.l0_rel(),
        sched.as_ref().map_or(0, DoseSchedule::len)
    );
    Ok(true)
}

fn plan_setup(config: &RunConfig) -> anyhow::Result<Setup> {
    let setup = Setup::from_config(config)?;
    let times = setup.times(2);
    warn_main_hypothesis(&main_hypothesis_for_gap(&setup.drug, times[1] - times[0], setup.bounds.d_max()));
    Ok(setup)
}

fn curative(args: PlanArgs, exec: Execution) -> anyhow::Result<bool> {
    let config = load_config(&args.common)?;
    let setup = plan_setup(&config)?;
    if setup.bounds.cumulative().is_none() {
        bail!("curative planning needs the cumulative dose `D` in the config");
    }
    let mut sweep = tables::curative_sweep(&setup, args.exact, exec)
        .context("no admissible number of doses")?;
    if args.optimum_only {
        sweep.rows.retain(|r| r.optimal);
    }
    emit(args.common.out.as_deref(), &tables::curative_csv(&sweep))?;

    let best = sweep.optimum;
    let times = setup.times(best.n);
    eprintln!(
        "optimum: N = {} of {}..={} (pattern {} fits {}), dose = {:.2}, last day = {}, dose intensity = {:.2}",
        best.n,
        sweep.range.lo,
        sweep.range.hi,
        setup.pattern,
        sweep.capacity,
        best.dose,
        times.last().copied().unwrap_or(0.0),
        dose_intensity(best.total, &times)
    );
    report_unconverged(sweep.rows.iter().map(|r| (r.n, &r.exact)))
}

fn palliative(args: PlanArgs, exec: Execution) -> anyhow::Result<bool> {
    let config = load_config(&args.common)?;
    let setup = plan_setup(&config)?;
    let target = config.target()?;
    let mut sweep = tables::palliative_sweep(&setup, &target, args.exact, exec)
        .context("no admissible number of doses")?;
    if args.optimum_only {
        sweep.rows.retain(|r| r.optimal);
    }
    emit(args.common.out.as_deref(), &tables::palliative_csv(&sweep))?;

    let best = sweep.optimum;
    eprintln!(
        "target: T_R = {:.4} days, scaled = {:.5}",
        target.t_r, target.t_r_tilde
    );
    eprintln!(
        "optimum: case {}, N = {}, dose = {:.2}, total = {:.2}, L(T)/theta = {:.5}, slack = {:.3e}, dose intensity = {:.2}",
        best.case.tag(),
        best.n,
        best.dose,
        best.total,
        sweep.optimum_ratio,
        sweep.optimum_slack,
        sweep.optimum_intensity
    );
    report_unconverged(sweep.rows.iter().map(|r| (r.n, &r.exact)))
}

fn report_unconverged<'a>(
    rows: impl Iterator<Item = (usize, &'a Option<tables::ExactOutcome>)>,
) -> anyhow::Result<bool> {
    let mut ok = true;
    for (n, exact) in rows {
        match exact {
            Some(Err(reason)) => {
                eprintln!("N = {n}: exact solver failed: {reason}");
                ok = false;
            }
            Some(Ok(s)) if !s.converged => {
                eprintln!(
                    "N = {n}: exact solver stopped after {} iterations, residual {:.3e}",
                    s.iterations, s.kkt_residual
                );
                ok = false;
            }
            _ => {}
        }
    }
    Ok(ok)
}

fn check_mh(args: CheckArgs) -> anyhow::Result<bool> {
    let config = load_config(&args.common)?;
    let drug = config.drug()?;
    let gap = match args.gap {
        Some(g) => g,
        None => {
            let times = expand_pattern(config.pattern()?, 2, config.t1);
            times[1] - times[0]
        }
    };
    if !(gap > 0.0) {
        bail!("--gap must be positive, got {gap}");
    }
    let mh = main_hypothesis_for_gap(&drug, gap, config.d_max);
    let text = format!(
        "s = {}\nd_max*exp(-lambda*s) = {:.6}\nk2_tilde = {}\nratio = {:.6e}\n{}\n",
        mh.min_gap,
        mh.lhs,
        mh.k2_tilde,
        mh.ratio,
        if mh.holds() { "pass" } else { "warn" }
    );
    emit(args.common.out.as_deref(), &text)?;
    Ok(true)
}

fn reproduce(args: ReproduceArgs, exec: Execution) -> anyhow::Result<bool> {
    let result = tables::reproduce(args.table, exec)?;
    emit(args.out.as_deref(), &result.csv)?;
    let report = result.report();
    match &args.report {
        Some(path) => fs::write(path, &report).with_context(|| format!("writing {}", path.display()))?,
        None => eprint!("{report}"),
    }
    Ok(result.passed())
}

fn print_config(args: CommonArgs) -> anyhow::Result<bool> {
    let config = load_config(&args)?;
    config.validate()?;
    emit(args.out.as_deref(), &config.to_text())?;
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dose_lists() {
        assert_eq!(parse_doses("150*2, 200").unwrap(), vec![150.0, 150.0, 200.0]);
        assert_eq!(parse_doses("0*3").unwrap(), vec![0.0; 3]);
        assert!(parse_doses("").is_err());
        assert!(parse_doses("150*x").is_err());
        assert!(parse_doses("abc").is_err());
    }

    #[test]
    fn time_lists() {
        assert_eq!(parse_times("0, 1,28").unwrap(), vec![0.0, 1.0, 28.0]);
        assert!(parse_times("0,a").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
