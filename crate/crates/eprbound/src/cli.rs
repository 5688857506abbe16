//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand};
use eprbound_core::bound::{bound_curve, BoundInput};
use eprbound_core::budget::{BudgetComponents, DispersionInput};
use eprbound_core::coincidence::loss_intervals;
use eprbound_core::geometry::MEAN_SIDEREAL_DAY;
use eprbound_core::interferometry::{fit_double_gaussian, FIT_WIDTH_MM};
use eprbound_core::polarization::{PolarizerPair, SETTING_COUNT};
use eprbound_core::sidereal::{align_multi_day, successive_plans, BinnedRun, UtcInstant, DEFAULT_SKEW_THRESHOLD_S};
use eprbound_core::deg;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::formats;
use crate::manifest::RunDir;
use crate::parallel::simulate_day;
use crate::ut1::load_ut1_table;

/// Exit status when alignment skew exceeds the threshold.
pub const EXIT_SKEW: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "eprbound", version, about = "Bounds on superluminal influences from long-baseline EPR experiments")]
struct Cli {
    /// Directory that receives one subdirectory per run.
    #[arg(long, global = true, default_value = "runs")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Lowest detectable superluminal speed versus frame speed, as CSV.
    Bound(BoundArgs),
    /// Path-equalization error budget.
    Budget(BudgetArgs),
    /// Simulate one sidereal day of S measurements.
    Simulate(SimulateArgs),
    /// Fit the double-Gaussian profile of a sweep trace.
    Fit(FitArgs),
    /// Acquisition plans anchored on the Earth rotation angle.
    Plan(PlanArgs),
    /// Assemble per-setting runs into an S series per angle bin.
    Align(AlignArgs),
}

#[derive(Debug, Args)]
struct BoundArgs {
    /// Fractional mismatch of each curve. Without it the five reference
    /// curves a-e are produced.
    #[arg(long = "rho-bar")]
    rho_bar: Vec<f64>,
    /// Acquisition time per curve, seconds (one value applies to all).
    #[arg(long = "delta-t")]
    delta_t: Vec<f64>,
    #[arg(long = "chi-deg", default_value_t = 90.0)]
    chi_deg: f64,
    #[arg(long, default_value_t = MEAN_SIDEREAL_DAY)]
    period: f64,
    #[arg(long = "beta-max", default_value_t = 0.999)]
    beta_max: f64,
    #[arg(long, default_value_t = 200)]
    points: usize,
}

#[derive(Debug, Args)]
struct BudgetArgs {
    #[arg(long, default_value_t = 100.0)]
    sweep_um: f64,
    #[arg(long, default_value_t = 120.0)]
    polarizer_um: f64,
    #[arg(long, default_value_t = 30.0)]
    thermal_um: f64,
    #[arg(long, default_value_t = 144.0)]
    dispersion_um: f64,
    #[arg(long, default_value_t = eprbound_core::budget::DEFAULT_DN_DLAMBDA)]
    dn_dlambda: f64,
    #[arg(long, default_value_t = eprbound_core::budget::DEFAULT_BANDWIDTH_NM)]
    bandwidth_nm: f64,
    #[arg(long, default_value_t = eprbound_core::budget::DEFAULT_ARM_LENGTH_M)]
    arm_length_m: f64,
    #[arg(long, default_value_t = 1200.0)]
    d_ab_m: f64,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Config file; falls back to $EPRBOUND_CONFIG, then to defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Significance of the loss-of-correlation report, in sigmas.
    #[arg(long, default_value_t = 5.0)]
    k_sigma: f64,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// CSV with columns x_mm,vpp.
    #[arg(long)]
    trace: PathBuf,
    #[arg(long, default_value_t = FIT_WIDTH_MM)]
    width_mm: f64,
}

#[derive(Debug, Args)]
struct PlanArgs {
    /// UT1-UTC table.
    #[arg(long)]
    ut1: PathBuf,
    /// First acquisition start, RFC 3339 UTC.
    #[arg(long)]
    start: String,
    #[arg(long, default_value_t = 12)]
    days: usize,
}

#[derive(Debug, Args)]
struct AlignArgs {
    /// Plans CSV written by `plan`.
    #[arg(long)]
    plans: PathBuf,
    /// Text file, one run per line: `day alpha_a_deg alpha_b_deg counts.csv`.
    #[arg(long)]
    runs: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SKEW_THRESHOLD_S * 1e3)]
    threshold_ms: f64,
    /// Also write s_min and sigma_smin.
    #[arg(long)]
    with_min: bool,
}

/// Runs the CLI on `args` (program name first) and returns the exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(stdout, "{text}");
            } else {
                let _ = write!(stderr, "{text}");
            }
            return code;
        }
    };
    match dispatch(cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

fn dispatch(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let out = cli.out.as_path();
    let emit = |stdout: &mut dyn Write, s: &str| stdout.write_all(s.as_bytes()).map_err(|e| Error::io("<stdout>", e));
    match cli.command {
        Command::Bound(a) => {
            let rows = bound_rows(&a)?;
            let mut run = RunDir::create(out, "bound", &render_bound(&a), None)?;
            let mut buf = Vec::new();
            formats::write_bound_csv(&mut buf, &rows)?;
            let path = run.write("bound.csv", &buf)?;
            emit(stdout, &format!("{} rows -> {}\n", rows.len(), path.display()))?;
            run.finish(Utc::now())?;
        }
        Command::Budget(a) => {
            let components = BudgetComponents {
                sweep: a.sweep_um,
                polarizer: a.polarizer_um,
                thermal: a.thermal_um,
                dispersion: a.dispersion_um,
            };
            let dispersion = DispersionInput {
                dn_dlambda: a.dn_dlambda,
                delta_lambda: a.bandwidth_nm,
                distance: a.arm_length_m,
            };
            let report = formats::budget_report(&components, &dispersion, a.d_ab_m)?;
            let config = format!(
                "budget.sweep_um = {}\nbudget.polarizer_um = {}\nbudget.thermal_um = {}\nbudget.dispersion_um = {}\n\
                 budget.dn_dlambda = {}\nbudget.bandwidth_nm = {}\nbudget.arm_length_m = {}\nbudget.d_ab_m = {}\n",
                a.sweep_um, a.polarizer_um, a.thermal_um, a.dispersion_um, a.dn_dlambda, a.bandwidth_nm, a.arm_length_m, a.d_ab_m
            );
            let mut run = RunDir::create(out, "budget", &config, None)?;
            run.write("budget.txt", report.as_bytes())?;
            emit(stdout, &report)?;
            run.finish(Utc::now())?;
        }
        Command::Simulate(a) => {
            let mut cfg = match RunConfig::resolve_path(a.config.as_deref()) {
                Some(p) => RunConfig::load(&p)?,
                None => RunConfig::default(),
            };
            if let Some(s) = a.seed {
                cfg.seed = s;
            }
            let day = cfg.day_config()?;
            let result = simulate_day(&day)?;
            let mut run = RunDir::create(out, "simulate", &cfg.render(), Some(cfg.seed))?;
            let mut jsonl = Vec::new();
            formats::write_records_jsonl(&mut jsonl, &result, &cfg.epoch)?;
            run.write("records.jsonl", &jsonl)?;
            let mut csv = Vec::new();
            formats::write_series_csv(&mut csv, &result)?;
            run.write("series.csv", &csv)?;
            let qm = (std::f64::consts::SQRT_2 - 1.0) / 2.0;
            let dips = loss_intervals(&result, qm, a.k_sigma);
            let mut summary = format!(
                "{} measurements over {} s; {} loss interval(s) below {} sigma\n",
                result.measurements.len(),
                result.period,
                dips.len(),
                a.k_sigma
            );
            for d in &dips {
                summary.push_str(&format!("  center {:.0} s, width {:.0} s\n", d.center, d.width));
            }
            summary.push_str(&format!("run directory {}\n", run.path().display()));
            emit(stdout, &summary)?;
            run.finish(Utc::now())?;
        }
        Command::Fit(a) => {
            let file = fs::File::open(&a.trace).map_err(|e| Error::io(&a.trace, e))?;
            let trace = formats::read_trace_csv(file)?;
            let report = fit_double_gaussian(&trace, a.width_mm)?;
            let text = formats::fit_report(&report);
            let config = format!("fit.trace = {}\nfit.width_mm = {}\n", a.trace.display(), a.width_mm);
            let mut run = RunDir::create(out, "fit", &config, None)?;
            let mut csv = Vec::new();
            formats::write_trace_csv(&mut csv, &trace)?;
            run.write("trace.csv", &csv)?;
            run.write("fit.txt", text.as_bytes())?;
            emit(stdout, &text)?;
            run.finish(Utc::now())?;
        }
        Command::Plan(a) => {
            let table = load_ut1_table(&a.ut1)?;
            let start = DateTime::parse_from_rfc3339(&a.start)
                .map_err(|e| Error::Usage(format!("--start: {e}")))?
                .with_timezone(&Utc);
            let plans = successive_plans(&utc_instant(&start)?, a.days, &table)?;
            let table_text = fs::read_to_string(&a.ut1).map_err(|e| Error::io(&a.ut1, e))?;
            let config = format!("plan.start = {}\nplan.days = {}\n# ut1 table\n{}", a.start, a.days, table_text);
            let mut run = RunDir::create(out, "plan", &config, None)?;
            let mut csv = Vec::new();
            formats::write_plans_csv(&mut csv, &plans)?;
            let path = run.write("plans.csv", &csv)?;
            let first = &plans[0];
            emit(
                stdout,
                &format!(
                    "{} plan(s), {} bins of {:.6e} rad, anchor angle {:.9} rad -> {}\n",
                    plans.len(),
                    first.bin_count,
                    first.bin_width(),
                    first.start_angle,
                    path.display()
                ),
            )?;
            run.finish(Utc::now())?;
        }
        Command::Align(a) => {
            let plans = formats::read_plans_csv(fs::File::open(&a.plans).map_err(|e| Error::io(&a.plans, e))?)?;
            let runs = read_runs(&a.runs, &plans)?;
            let alignment = align_multi_day(&runs, a.threshold_ms * 1e-3)?;
            let runs_text = fs::read_to_string(&a.runs).map_err(|e| Error::io(&a.runs, e))?;
            let config = format!(
                "align.plans = {}\nalign.threshold_ms = {}\n# runs\n{}",
                a.plans.display(),
                a.threshold_ms,
                runs_text
            );
            let mut run = RunDir::create(out, "align", &config, None)?;
            let mut csv = Vec::new();
            formats::write_alignment_csv(&mut csv, &alignment, a.with_min)?;
            let path = run.write("aligned.csv", &csv)?;
            emit(
                stdout,
                &format!(
                    "{} bins, max skew {:.3} ms -> {}\n",
                    alignment.bins.len(),
                    alignment.max_skew_s * 1e3,
                    path.display()
                ),
            )?;
            run.finish(Utc::now())?;
            if !alignment.within_threshold() {
                let _ = writeln!(
                    stderr,
                    "alignment skew {:.3} ms exceeds threshold {:.3} ms",
                    alignment.max_skew_s * 1e3,
                    a.threshold_ms
                );
                return Ok(EXIT_SKEW);
            }
        }
    }
    Ok(0)
}

/// Labels, mismatches and acquisition times (as fractions of T/π) of the
/// reference curves.
pub const REFERENCE_CURVES: [(&str, f64, f64); 5] = [
    ("a", 1e-3, 1e-1),
    ("b", 1e-5, 1e-1),
    ("c", 1e-6, 1e-1),
    ("d", 1e-6, 1e-3),
    ("e", 1e-6, 1e-7),
];

fn bound_rows(a: &BoundArgs) -> Result<Vec<(String, f64, f64, f64, f64)>> {
    if a.points < 2 || !(a.beta_max > 0.0 && a.beta_max < 1.0) {
        return Err(Error::Usage("need --points >= 2 and 0 < --beta-max < 1".into()));
    }
    let curves: Vec<(String, f64, f64)> = if a.rho_bar.is_empty() {
        REFERENCE_CURVES
            .iter()
            .map(|&(l, rho, frac)| (l.to_string(), rho, frac * a.period / std::f64::consts::PI))
            .collect()
    } else {
        let dt = |i: usize| match a.delta_t.len() {
            0 => Ok(100.0),
            1 => Ok(a.delta_t[0]),
            n if n == a.rho_bar.len() => Ok(a.delta_t[i]),
            _ => Err(Error::Usage("give one --delta-t, or one per --rho-bar".into())),
        };
        a.rho_bar
            .iter()
            .enumerate()
            .map(|(i, &rho)| Ok((format!("{}", i + 1), rho, dt(i)?)))
            .collect::<Result<_>>()?
    };
    let betas: Vec<f64> = (0..a.points)
        .map(|i| a.beta_max * i as f64 / (a.points - 1) as f64)
        .collect();
    let mut rows = Vec::new();
    for (label, rho_bar, delta_t) in curves {
        let template = BoundInput {
            rho_bar,
            beta: 0.0,
            chi: deg(a.chi_deg),
            delta_t,
            period: a.period,
        };
        for (beta, v) in bound_curve(&betas, &template)? {
            rows.push((label.clone(), rho_bar, delta_t, beta, v));
        }
    }
    Ok(rows)
}

fn render_bound(a: &BoundArgs) -> String {
    let list = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
    format!(
        "bound.rho_bar = {}\nbound.delta_t = {}\nbound.chi_deg = {}\nbound.period = {}\nbound.beta_max = {}\nbound.points = {}\n",
        list(&a.rho_bar),
        list(&a.delta_t),
        a.chi_deg,
        a.period,
        a.beta_max,
        a.points
    )
}

/// UTC calendar instant to MJD day plus seconds (leap seconds ignored).
pub fn utc_instant(t: &DateTime<Utc>) -> Result<UtcInstant> {
    const UNIX_EPOCH_MJD: i64 = 40_587;
    let secs = t.timestamp();
    let day = secs.div_euclid(86_400);
    let rem = secs.rem_euclid(86_400) as f64 + f64::from(t.timestamp_subsec_nanos()) * 1e-9;
    Ok(UtcInstant::new(UNIX_EPOCH_MJD + day, rem)?)
}

fn read_runs(list: &Path, plans: &[eprbound_core::sidereal::AcquisitionPlan]) -> Result<Vec<BinnedRun>> {
    let text = fs::read_to_string(list).map_err(|e| Error::io(list, e))?;
    let base = list.parent().unwrap_or(Path::new("."));
    let mut runs = Vec::with_capacity(SETTING_COUNT);
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let f: Vec<&str> = body.split_whitespace().collect();
        if f.len() != 4 {
            return Err(Error::parse(line, "expected `day alpha_a_deg alpha_b_deg counts.csv`"));
        }
        let day: usize = f[0].parse().map_err(|_| Error::parse(line, "bad day"))?;
        let a: f64 = f[1].parse().map_err(|_| Error::parse(line, "bad alpha_a_deg"))?;
        let b: f64 = f[2].parse().map_err(|_| Error::parse(line, "bad alpha_b_deg"))?;
        let plan = *plans
            .get(day)
            .ok_or_else(|| Error::parse(line, format!("no plan for day {day}")))?;
        let path = base.join(f[3]);
        let (counts, timing_offsets) =
            formats::read_binned_csv(fs::File::open(&path).map_err(|e| Error::io(&path, e))?)?;
        runs.push(BinnedRun {
            setting: PolarizerPair::from_degrees(a, b),
            plan,
            counts,
            timing_offsets,
        });
    }
    Ok(runs)
}
