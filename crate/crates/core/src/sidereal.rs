//! Sidereal-synchronized acquisition: UT1 − UTC tables, the Earth rotation
//! angle, plans of 2²⁰ angle bins per rotation, and assembly of the 12
//! settings acquired on successive days at the same rotation angles.
//!
//! The rotation angle follows the linear UT1 convention
//!
//! ```text
//! ERA = 2π (0.7790572732640 + 1.00273781191135448 · D_UT1)
//! ```
//!
//! with `D_UT1` the UT1 days elapsed since 2000-01-01 12:00 (MJD 51544.5).
//! Leap seconds are not modeled: UTC days are taken as 86400 s long.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use crate::polarization::{estimator_gradients, setting, setting_index, CorrelationCounts, PolarizerPair, SETTING_COUNT};
use crate::{Error, Result};

pub const SECONDS_PER_DAY: f64 = 86_400.0;
/// MJD of the J2000 day boundary preceding the epoch (the epoch is at noon).
pub const J2000_MJD_DAY: i64 = 51_544;
pub const ERA_AT_J2000: f64 = 0.779_057_273_264_0;
pub const ERA_RATE: f64 = 1.002_737_811_911_354_48;
/// `ERA_RATE − 1`, kept as its own literal so no digits are lost.
const ERA_RATE_EXCESS: f64 = 0.002_737_811_911_354_48;
/// UT1 seconds per full turn of the rotation angle.
pub const ERA_PERIOD_S: f64 = SECONDS_PER_DAY / ERA_RATE;
/// Rotation-angle bins per turn.
pub const PLAN_BINS: usize = 1 << 20;
/// Default tolerated timing skew between matching bins, seconds.
pub const DEFAULT_SKEW_THRESHOLD_S: f64 = 5e-3;

/// UT1 − UTC by date, linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct Ut1Table {
    rows: Vec<(f64, f64)>,
}

impl Ut1Table {
    /// Validates `(mjd, ut1_minus_utc)` rows. Row numbers in errors are
    /// 1-based positions in `rows`.
    pub fn new(rows: Vec<(f64, f64)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyTable);
        }
        for (i, &(mjd, dut1)) in rows.iter().enumerate() {
            let row = i + 1;
            if !mjd.is_finite() || !dut1.is_finite() {
                return Err(Error::TableRow {
                    row,
                    reason: "non-finite value",
                });
            }
            if !(dut1.abs() < 1.0) {
                return Err(Error::TableRow {
                    row,
                    reason: "|UT1 - UTC| must stay below 1 s",
                });
            }
            if i > 0 {
                let prev = rows[i - 1].0;
                if mjd == prev {
                    return Err(Error::TableRow {
                        row,
                        reason: "duplicate mjd",
                    });
                }
                if mjd < prev {
                    return Err(Error::TableRow {
                        row,
                        reason: "mjd must increase",
                    });
                }
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[(f64, f64)] {
        &self.rows
    }

    pub fn first_mjd(&self) -> f64 {
        self.rows[0].0
    }

    pub fn last_mjd(&self) -> f64 {
        self.rows[self.rows.len() - 1].0
    }

    /// UT1 − UTC in seconds at `mjd`. Queries outside the table are refused.
    pub fn dut1_at(&self, mjd: f64) -> Result<f64> {
        let (first, last) = (self.first_mjd(), self.last_mjd());
        if !(mjd >= first && mjd <= last) {
            return Err(Error::OutOfSpan { mjd, first, last });
        }
        let i = self.rows.partition_point(|&(m, _)| m <= mjd);
        if i == 0 {
            return Ok(self.rows[0].1);
        }
        let (m0, v0) = self.rows[i - 1];
        if i == self.rows.len() || m0 == mjd {
            return Ok(v0);
        }
        let (m1, v1) = self.rows[i];
        Ok(v0 + (v1 - v0) * (mjd - m0) / (m1 - m0))
    }
}

/// A UTC instant split into an integer MJD and seconds of that day, which
/// keeps sub-microsecond resolution over centuries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtcInstant {
    mjd_day: i64,
    seconds: f64,
}

impl UtcInstant {
    /// Normalizes `seconds` into `[0, 86400)`.
    pub fn new(mjd_day: i64, seconds: f64) -> Result<Self> {
        if !seconds.is_finite() {
            return Err(Error::InvalidParameter {
                name: "seconds",
                value: seconds,
                reason: "seconds must be finite",
            });
        }
        let carry = libm::floor(seconds / SECONDS_PER_DAY);
        let mut s = seconds - carry * SECONDS_PER_DAY;
        let mut day = mjd_day + carry as i64;
        if s >= SECONDS_PER_DAY {
            s -= SECONDS_PER_DAY;
            day += 1;
        }
        Ok(Self {
            mjd_day: day,
            seconds: s.max(0.0),
        })
    }

    pub fn from_mjd(mjd: f64) -> Result<Self> {
        let day = libm::floor(mjd);
        Self::new(day as i64, (mjd - day) * SECONDS_PER_DAY)
    }

    pub fn mjd_day(&self) -> i64 {
        self.mjd_day
    }

    pub fn seconds(&self) -> f64 {
        self.seconds
    }

    pub fn mjd(&self) -> f64 {
        self.mjd_day as f64 + self.seconds / SECONDS_PER_DAY
    }

    pub fn plus_seconds(&self, dt: f64) -> Result<Self> {
        Self::new(self.mjd_day, self.seconds + dt)
    }

    /// `self − other` in seconds.
    pub fn seconds_since(&self, other: &Self) -> f64 {
        (self.mjd_day - other.mjd_day) as f64 * SECONDS_PER_DAY + (self.seconds - other.seconds)
    }
}

/// Rotation angle in `[0, 2π)` for a UT1 instant given as integer MJD plus
/// seconds of the UT1 day.
pub fn era_from_ut1(mjd_day: i64, ut1_seconds: f64) -> f64 {
    let n = (mjd_day - J2000_MJD_DAY) as f64;
    let f = ut1_seconds / SECONDS_PER_DAY - 0.5;
    // The integer turns in 1.0027…·n are dropped before adding the rest.
    let slow = crate::rem_euclid(ERA_RATE_EXCESS * n, 1.0);
    let turns = ERA_AT_J2000 + slow + f + ERA_RATE_EXCESS * f;
    let angle = TAU * crate::rem_euclid(turns, 1.0);
    if angle >= TAU {
        0.0
    } else {
        angle
    }
}

/// Rotation angle at a UTC instant, with UT1 − UTC from `table`.
pub fn earth_rotation_angle(instant: &UtcInstant, table: &Ut1Table) -> Result<f64> {
    let dut1 = table.dut1_at(instant.mjd())?;
    Ok(era_from_ut1(instant.mjd_day, instant.seconds + dut1))
}

/// Angle in `(−π, π]`.
fn wrap_pi(angle: f64) -> f64 {
    let r = crate::rem_euclid(angle + PI, TAU) - PI;
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}

/// Rotation-angle bins for one acquisition day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcquisitionPlan {
    pub start: UtcInstant,
    pub start_angle: f64,
    pub bin_count: usize,
}

impl AcquisitionPlan {
    pub fn bin_width(&self) -> f64 {
        TAU / self.bin_count as f64
    }

    /// Edge `k` for `k` in `0..=bin_count`, wrapped into `[0, 2π)`.
    pub fn edge(&self, k: usize) -> f64 {
        crate::rem_euclid(self.start_angle + k as f64 * self.bin_width(), TAU)
    }

    pub fn bin_edges(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.bin_count).map(move |k| self.edge(k))
    }

    /// Bin holding `angle`.
    pub fn bin_of(&self, angle: f64) -> usize {
        let offset = crate::rem_euclid(angle - self.start_angle, TAU);
        ((offset / self.bin_width()) as usize).min(self.bin_count - 1)
    }

    /// UT1 seconds from the anchor to the start of bin `k`.
    pub fn bin_offset_s(&self, k: usize) -> f64 {
        k as f64 * ERA_PERIOD_S / self.bin_count as f64
    }

    /// Same anchor with a different bin count (for coarse runs).
    pub fn with_bin_count(self, bin_count: usize) -> Result<Self> {
        if bin_count == 0 {
            return Err(Error::InvalidParameter {
                name: "bin_count",
                value: 0.0,
                reason: "a plan needs at least one bin",
            });
        }
        Ok(Self { bin_count, ..self })
    }
}

/// Plan of [`PLAN_BINS`] bins anchored at the rotation angle of `start`.
pub fn build_plan(start: &UtcInstant, table: &Ut1Table) -> Result<AcquisitionPlan> {
    Ok(AcquisitionPlan {
        start: *start,
        start_angle: earth_rotation_angle(start, table)?,
        bin_count: PLAN_BINS,
    })
}

/// Plans for `days` successive rotations sharing the first plan's angle
/// grid. Each anchor is the UTC instant at which the rotation angle returns
/// to the first anchor angle.
pub fn successive_plans(start: &UtcInstant, days: usize, table: &Ut1Table) -> Result<Vec<AcquisitionPlan>> {
    let first = build_plan(start, table)?;
    let omega = TAU / ERA_PERIOD_S;
    let mut out = Vec::with_capacity(days);
    for d in 0..days {
        let mut t = start.plus_seconds(d as f64 * ERA_PERIOD_S)?;
        for _ in 0..4 {
            let miss = wrap_pi(earth_rotation_angle(&t, table)? - first.start_angle);
            t = t.plus_seconds(-miss / omega)?;
        }
        out.push(AcquisitionPlan { start: t, ..first });
    }
    Ok(out)
}

/// One day of binned coincidences at a single setting.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedRun {
    pub setting: PolarizerPair,
    pub plan: AcquisitionPlan,
    /// Normalized coincidences per bin.
    pub counts: Vec<f64>,
    /// Measured minus planned start of each bin, seconds. Empty means the
    /// acquisition followed the plan exactly.
    pub timing_offsets: Vec<f64>,
}

/// One bin of the assembled series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignedBin {
    pub bin_index: usize,
    pub era_rad: f64,
    /// Sidereal seconds from the anchor.
    pub t_sidereal_s: f64,
    pub s_max: f64,
    pub sigma_smax: f64,
    pub s_min: f64,
    pub sigma_smin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub bins: Vec<AlignedBin>,
    /// Largest spread of acquisition times over matching bins, seconds.
    pub max_skew_s: f64,
    pub threshold_s: f64,
}

impl Alignment {
    pub fn within_threshold(&self) -> bool {
        self.max_skew_s <= self.threshold_s
    }

    /// Turns a threshold violation into an error.
    pub fn checked(self) -> Result<Self> {
        if self.within_threshold() {
            Ok(self)
        } else {
            Err(Error::AlignmentSkew {
                skew_s: self.max_skew_s,
                threshold_s: self.threshold_s,
            })
        }
    }
}

/// Assembles one run per setting into per-bin correlation estimates.
/// Uncertainties treat each bin count as Poisson.
pub fn align_multi_day(runs: &[BinnedRun], threshold_s: f64) -> Result<Alignment> {
    let mut slots: [Option<&BinnedRun>; SETTING_COUNT] = [None; SETTING_COUNT];
    for run in runs {
        let (alpha_a_deg, alpha_b_deg) = run.setting.degrees();
        let i = setting_index(&run.setting).ok_or(Error::UnknownSetting {
            alpha_a_deg,
            alpha_b_deg,
        })?;
        if slots[i].is_some() {
            return Err(Error::DuplicateSetting {
                alpha_a_deg,
                alpha_b_deg,
            });
        }
        slots[i] = Some(run);
    }
    let mut ordered = Vec::with_capacity(SETTING_COUNT);
    for (i, slot) in slots.iter().enumerate() {
        let (alpha_a_deg, alpha_b_deg) = setting(i).degrees();
        ordered.push(slot.ok_or(Error::MissingSetting {
            alpha_a_deg,
            alpha_b_deg,
        })?);
    }

    let reference = ordered[0].plan;
    let n = reference.bin_count;
    for run in &ordered {
        let p = run.plan;
        let angle_gap = wrap_pi(p.start_angle - reference.start_angle).abs();
        if p.bin_count != n
            || angle_gap > 1e-9
            || run.counts.len() != n
            || !(run.timing_offsets.is_empty() || run.timing_offsets.len() == n)
        {
            return Err(Error::GridMismatch);
        }
    }

    let omega = TAU / ERA_PERIOD_S;
    let anchor_lag: Vec<f64> = ordered
        .iter()
        .map(|r| wrap_pi(r.plan.start_angle - reference.start_angle) / omega)
        .collect();
    let mut max_skew: f64 = 0.0;
    let mut bins = Vec::with_capacity(n);
    for k in 0..n {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (run, lag) in ordered.iter().zip(&anchor_lag) {
            let off = lag + run.timing_offsets.get(k).copied().unwrap_or(0.0);
            lo = lo.min(off);
            hi = hi.max(off);
        }
        max_skew = max_skew.max(hi - lo);

        let raw: [f64; SETTING_COUNT] = core::array::from_fn(|i| ordered[i].counts[k]);
        let counts = CorrelationCounts::from_array(raw)?;
        let s_max = counts.s_max()?;
        let s_min = counts.s_min()?;
        let (g_max, g_min) = estimator_gradients(&raw);
        let sigma = |g: &[f64; SETTING_COUNT]| {
            libm::sqrt(g.iter().zip(&raw).map(|(g, c)| g * g * c.max(0.0)).sum::<f64>())
        };
        bins.push(AlignedBin {
            bin_index: k,
            era_rad: reference.edge(k),
            t_sidereal_s: reference.bin_offset_s(k),
            s_max,
            sigma_smax: sigma(&g_max),
            s_min,
            sigma_smin: sigma(&g_min),
        });
    }
    Ok(Alignment {
        bins,
        max_skew_s: max_skew,
        threshold_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> Ut1Table {
        Ut1Table::new(alloc::vec![(51_540.0, 0.35), (60_000.0, 0.10), (60_001.0, 0.12), (61_000.0, -0.2)]).unwrap()
    }

    #[test]
    fn interpolation() {
        let t = table();
        assert!((t.dut1_at(60_000.5).unwrap() - 0.11).abs() < 1e-15);
        assert_eq!(t.dut1_at(60_001.0).unwrap(), 0.12);
        assert!(matches!(t.dut1_at(61_000.5), Err(Error::OutOfSpan { .. })));
    }

    #[test]
    fn table_validation() {
        assert!(matches!(Ut1Table::new(alloc::vec![]), Err(Error::EmptyTable)));
        assert!(matches!(
            Ut1Table::new(alloc::vec![(1.0, 0.0), (1.0, 0.1)]),
            Err(Error::TableRow { row: 2, .. })
        ));
        assert!(Ut1Table::new(alloc::vec![(1.0, 0.0), (0.5, 0.1)]).is_err());
        assert!(Ut1Table::new(alloc::vec![(1.0, 1.2)]).is_err());
    }

    #[test]
    fn era_at_epoch() {
        let v = era_from_ut1(J2000_MJD_DAY, 43_200.0);
        assert!((v - TAU * ERA_AT_J2000).abs() < 1e-12);
    }

    #[test]
    fn instants_normalize() {
        let t = UtcInstant::new(60_000, 86_400.5).unwrap();
        assert_eq!((t.mjd_day(), t.seconds()), (60_001, 0.5));
        let u = t.plus_seconds(-1.0).unwrap();
        assert_eq!(u.mjd_day(), 60_000);
        assert!((u.seconds_since(&t) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn plan_geometry() {
        let start = UtcInstant::new(60_000, 3_600.0).unwrap();
        let p = build_plan(&start, &table()).unwrap();
        assert_eq!(p.bin_count, 1 << 20);
        assert!((p.bin_width() - 5.992e-6).abs() < 1e-9);
        assert!(wrap_pi(p.edge(p.bin_count) - p.edge(0)).abs() < 1e-12);
        assert_eq!(p.bin_of(p.start_angle + 2.5 * p.bin_width()), 2);
    }
}
