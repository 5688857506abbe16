//! CSV, JSONL and text report formats.

use std::io::Write;

use chrono::{DateTime, Duration, SecondsFormat, Utc};
use eprbound_core::budget::{
    combine, dispersion_term, fractional_mismatch, BudgetComponents, DispersionInput,
};
use eprbound_core::coincidence::{CountRecord, DayRun};
use eprbound_core::interferometry::{FitReport, SweepTrace};
use eprbound_core::sidereal::{AcquisitionPlan, Alignment};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettingJson {
    pub alpha_a_deg: f64,
    pub alpha_b_deg: f64,
}

/// One line of the JSONL event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordJson {
    pub setting: SettingJson,
    /// ISO-8601 UTC start of the acquisition.
    pub window_start: String,
    /// Seconds from the run epoch.
    pub window_start_offset_s: f64,
    pub window_length: f64,
    pub n_a: f64,
    pub n_b: f64,
    pub n_ab: f64,
    pub n_ab_corrected: f64,
}

pub fn timestamp(epoch: &DateTime<Utc>, offset_s: f64) -> String {
    let t = *epoch + Duration::nanoseconds((offset_s * 1e9).round() as i64);
    t.to_rfc3339_opts(SecondsFormat::Nanos, true)
}

impl RecordJson {
    pub fn new(r: &CountRecord, epoch: &DateTime<Utc>) -> Self {
        let (alpha_a_deg, alpha_b_deg) = r.setting.degrees();
        Self {
            setting: SettingJson {
                alpha_a_deg,
                alpha_b_deg,
            },
            window_start: timestamp(epoch, r.window_start),
            window_start_offset_s: r.window_start,
            window_length: r.window_length,
            n_a: r.n_a,
            n_b: r.n_b,
            n_ab: r.n_ab,
            n_ab_corrected: r.n_ab_corrected,
        }
    }
}

pub fn write_records_jsonl<W: Write>(out: &mut W, run: &DayRun, epoch: &DateTime<Utc>) -> Result<()> {
    for m in &run.measurements {
        for r in &m.records {
            serde_json::to_writer(&mut *out, &RecordJson::new(r, epoch))?;
            out.write_all(b"\n").map_err(|e| Error::io("<jsonl>", e))?;
        }
    }
    Ok(())
}

pub fn write_series_csv<W: Write>(out: W, run: &DayRun) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_sidereal_s", "s_max", "s_min", "sigma_smax", "sigma_smin"])?;
    for m in &run.measurements {
        let e = &m.estimate;
        w.write_record([m.t_mid, e.s_max, e.s_min, e.sigma_smax, e.sigma_smin].map(|v| v.to_string()))?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Rows of `curve,rho_bar,delta_t_s,beta,beta_t_min`.
pub fn write_bound_csv<W: Write>(out: W, rows: &[(String, f64, f64, f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["curve", "rho_bar", "delta_t_s", "beta", "beta_t_min"])?;
    for (label, rho, dt, beta, v) in rows {
        w.write_record([label.clone(), rho.to_string(), dt.to_string(), beta.to_string(), v.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn write_alignment_csv<W: Write>(out: W, a: &Alignment, with_min: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["bin_index", "era_rad", "t_sidereal_s", "s_max", "sigma_smax"];
    if with_min {
        header.extend(["s_min", "sigma_smin"]);
    }
    w.write_record(&header)?;
    for b in &a.bins {
        let mut row = vec![
            b.bin_index.to_string(),
            b.era_rad.to_string(),
            b.t_sidereal_s.to_string(),
            b.s_max.to_string(),
            b.sigma_smax.to_string(),
        ];
        if with_min {
            row.push(b.s_min.to_string());
            row.push(b.sigma_smin.to_string());
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct TraceRow {
    x_mm: f64,
    vpp: f64,
}

/// Sweep trace from CSV with columns `x_mm,vpp`.
pub fn read_trace_csv<R: std::io::Read>(input: R) -> Result<SweepTrace> {
    let mut r = csv::Reader::from_reader(input);
    let (mut x, mut v) = (Vec::new(), Vec::new());
    for row in r.deserialize() {
        let row: TraceRow = row?;
        x.push(row.x_mm);
        v.push(row.vpp);
    }
    Ok(SweepTrace::new(x, v)?)
}

pub fn write_trace_csv<W: Write>(out: W, trace: &SweepTrace) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x_mm", "vpp"])?;
    for (x, v) in trace.positions().iter().zip(trace.vpp()) {
        w.write_record([x.to_string(), v.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn fit_report(r: &FitReport) -> String {
    let p = &r.params;
    format!(
        "amp_a = {}\namp_b = {}\nx_c_mm = {}\nd_mm = {}\nw_mm = {}\nresidual = {}\n",
        p.amp_a, p.amp_b, p.x_c, p.d, p.w, r.residual
    )
}

/// Path-equalization budget table with the derived mismatch.
pub fn budget_report(components: &BudgetComponents, dispersion: &DispersionInput, d_ab_m: f64) -> Result<String> {
    let total = combine(components)?;
    let rho = fractional_mismatch(total, d_ab_m)?;
    let computed = dispersion_term(dispersion)?;
    let mut s = String::new();
    s.push_str("item        delta_d_um\n");
    for (name, v) in components.named() {
        s.push_str(&format!("{name:<11} {v:>10.1}\n"));
    }
    s.push_str(&format!("{:<11} {total:>10.1}\n", "total"));
    s.push_str(&format!("rho_bar = {rho:.2e} (d_ab = {d_ab_m} m)\n"));
    s.push_str(&format!(
        "dispersion from dn/dlambda * dlambda * d: {computed:.2} um; table value {:.1} um ({:+.1}%)\n",
        components.dispersion,
        100.0 * (components.dispersion - computed) / computed
    ));
    Ok(s)
}

/// One CSV row per plan.
pub fn write_plans_csv<W: Write>(out: W, plans: &[AcquisitionPlan]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["day", "start_mjd_day", "start_seconds", "start_angle_rad", "bin_count", "bin_width_rad"])?;
    for (day, p) in plans.iter().enumerate() {
        w.write_record([
            day.to_string(),
            p.start.mjd_day().to_string(),
            p.start.seconds().to_string(),
            p.start_angle.to_string(),
            p.bin_count.to_string(),
            p.bin_width().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct PlanRow {
    day: usize,
    start_mjd_day: i64,
    start_seconds: f64,
    start_angle_rad: f64,
    bin_count: usize,
}

pub fn read_plans_csv<R: std::io::Read>(input: R) -> Result<Vec<AcquisitionPlan>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (i, row) in r.deserialize().enumerate() {
        let row: PlanRow = row?;
        if row.day != i {
            return Err(Error::parse(i + 2, format!("expected day {i}, found {}", row.day)));
        }
        out.push(AcquisitionPlan {
            start: eprbound_core::sidereal::UtcInstant::new(row.start_mjd_day, row.start_seconds)?,
            start_angle: row.start_angle_rad,
            bin_count: row.bin_count,
        });
    }
    Ok(out)
}

#[derive(Debug, Deserialize)]
struct BinRow {
    bin_index: usize,
    count: f64,
    #[serde(default)]
    timing_offset_s: Option<f64>,
}

/// Binned counts from CSV `bin_index,count[,timing_offset_s]`, in bin order.
pub fn read_binned_csv<R: std::io::Read>(input: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut r = csv::Reader::from_reader(input);
    let (mut counts, mut offsets) = (Vec::new(), Vec::new());
    for (i, row) in r.deserialize().enumerate() {
        let row: BinRow = row?;
        if row.bin_index != i {
            return Err(Error::parse(i + 2, format!("expected bin {i}, found {}", row.bin_index)));
        }
        counts.push(row.count);
        if let Some(o) = row.timing_offset_s {
            offsets.push(o);
        }
    }
    if !offsets.is_empty() && offsets.len() != counts.len() {
        return Err(Error::parse(0, "timing_offset_s must be given for every bin or none"));
    }
    Ok((counts, offsets))
}
