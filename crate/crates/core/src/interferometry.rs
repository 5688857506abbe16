//! Path equalization by white-light interference: the double-Gaussian
//! `V_pp` profile seen while sweeping a polarizer across the zero path
//! difference, its least-squares fit, the sweep controller that keeps the
//! sweep centered, synthetic drift days, and beam deflection by a vertical
//! refractive-index gradient.
//!
//! Positions are in millimetres throughout.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::rng::stream_rng;
use crate::{Error, Result};

/// Fixed width of each Gaussian, mm.
pub const FIT_WIDTH_MM: f64 = 0.020;
/// Coherence length of the source, mm. Kept for reference; the fit uses
/// [`FIT_WIDTH_MM`].
pub const COHERENCE_LENGTH_MM: f64 = 0.0281;
/// Half-width of the tracking sweep, mm.
pub const SWEEP_HALF_WIDTH_MM: f64 = 0.100;
/// Seconds between tracking sweeps.
pub const SWEEP_CADENCE_S: f64 = 15.0;
/// Temperature coefficient of the refractive index of air, per kelvin.
pub const DN_DT_AIR: f64 = 9.5e-7;

const MAX_ITERATIONS: usize = 200;

/// A measured sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTrace {
    positions: Vec<f64>,
    vpp: Vec<f64>,
}

impl SweepTrace {
    pub fn new(positions: Vec<f64>, vpp: Vec<f64>) -> Result<Self> {
        if positions.len() != vpp.len() {
            return Err(Error::InvalidTrace {
                reason: "positions and vpp differ in length",
            });
        }
        if positions.len() < 5 {
            return Err(Error::InvalidTrace {
                reason: "a trace needs at least 5 samples",
            });
        }
        if positions.iter().chain(&vpp).any(|v| !v.is_finite()) {
            return Err(Error::InvalidTrace {
                reason: "non-finite sample",
            });
        }
        if positions.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::InvalidTrace {
                reason: "positions must be strictly increasing",
            });
        }
        Ok(Self { positions, vpp })
    }

    /// Samples `params` at `n` evenly spaced positions over `[lo, hi]`.
    pub fn synthetic(params: &DoubleGaussianParams, lo: f64, hi: f64, n: usize) -> Result<Self> {
        let step = (hi - lo) / (n.max(2) - 1) as f64;
        let positions: Vec<f64> = (0..n).map(|i| lo + i as f64 * step).collect();
        let vpp = positions.iter().map(|&x| vpp_model(x, params)).collect();
        Self::new(positions, vpp)
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn vpp(&self) -> &[f64] {
        &self.vpp
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn span(&self) -> f64 {
        self.positions[self.len() - 1] - self.positions[0]
    }

    /// Same trace with every position moved by `shift`.
    pub fn shifted(&self, shift: f64) -> Self {
        Self {
            positions: self.positions.iter().map(|x| x + shift).collect(),
            vpp: self.vpp.clone(),
        }
    }

    /// Same trace with each sample multiplied by `1 + rel · N(0, 1)`.
    pub fn with_noise<R: Rng + ?Sized>(&self, rel: f64, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, rel.abs()).unwrap_or_else(|_| Normal::new(0.0, 0.0).expect("zero sigma"));
        Self {
            positions: self.positions.clone(),
            vpp: self.vpp.iter().map(|v| v * (1.0 + normal.sample(rng))).collect(),
        }
    }
}

/// Two Gaussians of equal width `w`, centered at `x_c ± d / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleGaussianParams {
    pub amp_a: f64,
    pub amp_b: f64,
    pub x_c: f64,
    pub d: f64,
    pub w: f64,
}

impl DoubleGaussianParams {
    /// Amplitude of the path oscillation, `d / 2`.
    pub fn fluctuation_amplitude(&self) -> f64 {
        0.5 * self.d
    }
}

/// `A·exp(−((x − x_c − d/2)/w)²) + B·exp(−((x − x_c + d/2)/w)²)`.
pub fn vpp_model(x: f64, p: &DoubleGaussianParams) -> f64 {
    let ua = (x - p.x_c - 0.5 * p.d) / p.w;
    let ub = (x - p.x_c + 0.5 * p.d) / p.w;
    p.amp_a * libm::exp(-ua * ua) + p.amp_b * libm::exp(-ub * ub)
}

/// Fitted parameters and the residual norm `sqrt(Σ r²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitReport {
    pub params: DoubleGaussianParams,
    pub residual: f64,
    pub iterations: usize,
}

/// Least-squares fit of amplitudes, center and separation with the width
/// fixed at `w`. Several starting points are tried and the best converged
/// fit is returned.
pub fn fit_double_gaussian(trace: &SweepTrace, w: f64) -> Result<FitReport> {
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::InvalidParameter {
            name: "w",
            value: w,
            reason: "fit width must be positive",
        });
    }
    if trace.span() < 4.0 * w {
        return Err(Error::InvalidParameter {
            name: "span",
            value: trace.span(),
            reason: "trace must span at least four widths",
        });
    }
    let (lo, hi) = trace
        .vpp
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    if span <= 1e-12 * hi.abs().max(1.0) {
        return Err(Error::NoSignal { span });
    }

    let mut best: Option<(FitReport, bool)> = None;
    for start in starts(trace, w, lo) {
        let (report, converged) = levenberg_marquardt(trace, start, Amplitudes::Free);
        let better = match &best {
            None => true,
            Some((b, b_conv)) => (converged && !b_conv) || (converged == *b_conv && report.residual < b.residual * (1.0 - 1e-9)),
        };
        if better {
            best = Some((report, converged));
        }
    }
    let (report, converged) = best.expect("at least one start");
    // A free fit still crawling along the amplitude valley is fine when
    // the balanced fit settles and wins.
    match prefer_balanced(trace, report) {
        Some(balanced) => Ok(balanced),
        None if converged => Ok(report),
        None => Err(Error::FitFailure {
            best: report.params,
            residual: report.residual,
            iterations: report.iterations,
        }),
    }
}

/// Threshold on the chi-square gain from freeing the second amplitude:
/// 3σ for one extra parameter.
const ASYMMETRY_CHI2: f64 = 9.0;

/// When the peaks are unresolved, the two amplitudes trade off against the
/// center along a nearly flat valley. Refit with equal amplitudes and keep
/// that fit if the free one shows a single maximum (`d ≤ √2 w`) or is not
/// significantly better. `None` keeps the free fit.
fn prefer_balanced(trace: &SweepTrace, free: FitReport) -> Option<FitReport> {
    let dof = trace.len().saturating_sub(4).max(1) as f64;
    let rss_free = free.residual * free.residual;
    let mean = 0.5 * (free.params.amp_a + free.params.amp_b);
    let start = DoubleGaussianParams {
        amp_a: mean,
        amp_b: mean,
        ..free.params
    };
    let (balanced, converged) = levenberg_marquardt(trace, start, Amplitudes::Equal);
    let rss_bal = balanced.residual * balanced.residual;
    let unresolved = free.params.d <= core::f64::consts::SQRT_2 * free.params.w;
    (converged && (unresolved || rss_bal - rss_free <= ASYMMETRY_CHI2 * rss_free / dof)).then_some(balanced)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Amplitudes {
    Free,
    Equal,
}

fn starts(trace: &SweepTrace, w: f64, floor: f64) -> Vec<DoubleGaussianParams> {
    let x = &trace.positions;
    let y = &trace.vpp;
    let weights: Vec<f64> = y.iter().map(|v| v - floor).collect();
    let total: f64 = weights.iter().sum();
    let centroid = x.iter().zip(&weights).map(|(x, w)| x * w).sum::<f64>() / total;

    // Peaks of a 3-point running mean, highest first.
    let smooth: Vec<f64> = (0..y.len())
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(y.len() - 1);
            y[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect();
    let mut peaks: Vec<usize> = (1..y.len() - 1)
        .filter(|&i| smooth[i] >= smooth[i - 1] && smooth[i] > smooth[i + 1])
        .collect();
    peaks.sort_by(|&a, &b| smooth[b].total_cmp(&smooth[a]));
    let top = peaks
        .first()
        .copied()
        .unwrap_or_else(|| (0..y.len()).max_by(|&a, &b| y[a].total_cmp(&y[b])).unwrap_or(0));

    let mut out = Vec::new();
    out.push(with_amplitudes(trace, centroid, 0.0, w));
    out.push(with_amplitudes(trace, x[top], 0.0, w));
    if let Some(&second) = peaks.iter().find(|&&i| (x[i] - x[top]).abs() >= 1.5 * w) {
        let (a, b) = (x[top].max(x[second]), x[top].min(x[second]));
        out.push(with_amplitudes(trace, 0.5 * (a + b), a - b, w));
    }
    out
}

/// Start with the best nonnegative amplitudes for a given center and
/// separation.
fn with_amplitudes(trace: &SweepTrace, x_c: f64, d: f64, w: f64) -> DoubleGaussianParams {
    let unit = |amp_a, amp_b| DoubleGaussianParams { amp_a, amp_b, x_c, d, w };
    let (mut saa, mut sbb, mut sab, mut sya, mut syb) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&x, &y) in trace.positions.iter().zip(&trace.vpp) {
        let ga = vpp_model(x, &unit(1.0, 0.0));
        let gb = vpp_model(x, &unit(0.0, 1.0));
        saa += ga * ga;
        sbb += gb * gb;
        sab += ga * gb;
        sya += y * ga;
        syb += y * gb;
    }
    let det = saa * sbb - sab * sab;
    if det > 1e-9 * saa * sbb {
        let a = (sya * sbb - syb * sab) / det;
        let b = (syb * saa - sya * sab) / det;
        if a >= 0.0 && b >= 0.0 {
            return unit(a, b);
        }
    }
    let both = (sya + syb) / (saa + sbb + 2.0 * sab).max(f64::MIN_POSITIVE);
    unit(0.5 * both.max(0.0), 0.5 * both.max(0.0))
}

fn cost(trace: &SweepTrace, p: &DoubleGaussianParams) -> f64 {
    trace
        .positions
        .iter()
        .zip(&trace.vpp)
        .map(|(&x, &y)| {
            let r = y - vpp_model(x, p);
            r * r
        })
        .sum()
}

fn apply(p: &DoubleGaussianParams, delta: &[f64; 4], amps: Amplitudes) -> DoubleGaussianParams {
    let amp_a = (p.amp_a + delta[0]).max(0.0);
    DoubleGaussianParams {
        amp_a,
        amp_b: match amps {
            Amplitudes::Free => (p.amp_b + delta[1]).max(0.0),
            Amplitudes::Equal => amp_a,
        },
        x_c: p.x_c + delta[2],
        d: p.d + delta[3],
        w: p.w,
    }
}

/// Keeps `d ≥ 0` by relabeling the two peaks.
fn canonical(p: DoubleGaussianParams) -> DoubleGaussianParams {
    if p.d < 0.0 {
        DoubleGaussianParams {
            amp_a: p.amp_b,
            amp_b: p.amp_a,
            d: -p.d,
            ..p
        }
    } else {
        p
    }
}

fn levenberg_marquardt(trace: &SweepTrace, start: DoubleGaussianParams, amps: Amplitudes) -> (FitReport, bool) {
    let mut p = start;
    let mut c = cost(trace, &p);
    let mut lambda = 1e-3;
    let scale = trace.vpp.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let (jtj, jtr) = normal_equations(trace, &p, amps);
        let mut improved = false;
        while lambda < 1e16 {
            let mut a = jtj;
            for i in 0..4 {
                a[i][i] += lambda * jtj[i][i].max(1e-12 * (1.0 + jtj[i][i]));
            }
            let Some(delta) = solve4(a, jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial = apply(&p, &delta, amps);
            let tc = cost(trace, &trial);
            if tc <= c {
                let gain = c - tc;
                let small_step = (delta[2].abs() + delta[3].abs()) <= 1e-13 * (1.0 + p.x_c.abs() + p.d.abs());
                p = trial;
                c = tc;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if gain <= 1e-15 * c.max(1e-30 * scale) || small_step || c <= 1e-28 * scale {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // No step lowers the cost: a stationary point.
            converged = true;
        }
        if converged {
            break;
        }
    }
    (
        FitReport {
            params: canonical(p),
            residual: libm::sqrt(c),
            iterations,
        },
        converged,
    )
}

/// `JᵀJ` and `Jᵀr`. With equal amplitudes the first column carries the
/// common amplitude and the second is pinned to a zero step.
fn normal_equations(trace: &SweepTrace, p: &DoubleGaussianParams, amps: Amplitudes) -> ([[f64; 4]; 4], [f64; 4]) {
    let mut jtj = [[0.0; 4]; 4];
    let mut jtr = [0.0; 4];
    for (&x, &y) in trace.positions.iter().zip(&trace.vpp) {
        let ua = (x - p.x_c - 0.5 * p.d) / p.w;
        let ub = (x - p.x_c + 0.5 * p.d) / p.w;
        let ga = libm::exp(-ua * ua);
        let gb = libm::exp(-ub * ub);
        let r = y - p.amp_a * ga - p.amp_b * gb;
        let (j0, j1) = match amps {
            Amplitudes::Free => (ga, gb),
            Amplitudes::Equal => (ga + gb, 0.0),
        };
        let j = [
            j0,
            j1,
            2.0 * (p.amp_a * ga * ua + p.amp_b * gb * ub) / p.w,
            (p.amp_a * ga * ua - p.amp_b * gb * ub) / p.w,
        ];
        for i in 0..4 {
            jtr[i] += j[i] * r;
            for k in 0..4 {
                jtj[i][k] += j[i] * j[k];
            }
        }
    }
    if amps == Amplitudes::Equal {
        jtj[1][1] = 1.0;
    }
    (jtj, jtr)
}

/// Gaussian elimination with partial pivoting.
fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let pivot = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if !(a[pivot][col].abs() > 0.0) {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for row in (0..4).rev() {
        let s: f64 = (row + 1..4).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Range swept by the motor during one tracking step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepWindow {
    pub center: f64,
    pub half_width: f64,
    /// Seconds until the next sweep.
    pub cadence: f64,
}

impl SweepWindow {
    pub fn lo(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn hi(&self) -> f64 {
        self.center + self.half_width
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.lo()..=self.hi()).contains(&x)
    }
}

/// Next sweep: ±100 μm around the last fitted center.
pub fn sweep_step(previous_xc: f64) -> SweepWindow {
    SweepWindow {
        center: previous_xc,
        half_width: SWEEP_HALF_WIDTH_MM,
        cadence: SWEEP_CADENCE_S,
    }
}

/// Atmospheric conditions of a synthetic day.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftProfile {
    Night,
    Day,
}

/// Equalization position sampled every [`SWEEP_CADENCE_S`] seconds over 24 h.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftSeries {
    pub times: Vec<f64>,
    /// Slow drift of the zero path difference, mm.
    pub center: Vec<f64>,
    /// Amplitude `A` of the fast path oscillation, mm.
    pub amplitude: Vec<f64>,
}

impl DriftSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `max − min` of the center, mm.
    pub fn excursion(&self) -> f64 {
        let (lo, hi) = self
            .center
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        hi - lo
    }

    /// Sweep trace seen at sample `i` across `window`: two equal bells
    /// separated by `2A`, with multiplicative noise `rel_noise`.
    pub fn trace_at(&self, i: usize, window: &SweepWindow, samples: usize, rel_noise: f64, seed: u64) -> Result<SweepTrace> {
        let truth = DoubleGaussianParams {
            amp_a: 1.0,
            amp_b: 1.0,
            x_c: self.center[i],
            d: 2.0 * self.amplitude[i],
            w: FIT_WIDTH_MM,
        };
        let clean = SweepTrace::synthetic(&truth, window.lo(), window.hi(), samples)?;
        Ok(clean.with_noise(rel_noise, &mut stream_rng(seed, i as u64)))
    }
}

const DRIFT_LIMIT_MM: f64 = 0.4;

/// Synthetic 24 h series. The slow drift is a sum of long-period
/// harmonics; the day profile adds turbulence between 10 h and 16 h and a
/// fast-fluctuation amplitude that peaks at 33 μm around 13 h.
pub fn synthesize_drift_day(seed: u64, profile: DriftProfile) -> DriftSeries {
    use core::f64::consts::{PI, TAU};
    let mut rng = stream_rng(seed, u64::MAX);
    let n = (86_400.0 / SWEEP_CADENCE_S) as usize;
    let times: Vec<f64> = (0..n).map(|i| i as f64 * SWEEP_CADENCE_S).collect();

    let harmonics: Vec<(f64, f64, f64)> = (1..=3)
        .map(|k| {
            let amp = rng.random_range(0.3..1.0) / k as f64;
            (amp, k as f64, rng.random_range(0.0..TAU))
        })
        .collect();
    let mut center: Vec<f64> = times
        .iter()
        .map(|&t| {
            harmonics
                .iter()
                .map(|&(a, k, ph)| a * libm::sin(TAU * k * t / 86_400.0 + ph))
                .sum()
        })
        .collect();

    let turbulent = |t: f64| (10.0 * 3600.0..16.0 * 3600.0).contains(&t);
    let mut turb: f64 = 0.0;
    let kick = Normal::new(0.0, 0.012).expect("finite sigma");
    let mut amplitude = Vec::with_capacity(n);
    for (i, &t) in times.iter().enumerate() {
        let (base, peak) = match profile {
            DriftProfile::Night => (0.004, 0.0),
            DriftProfile::Day => (0.006, 0.033),
        };
        let jitter = rng.random_range(-0.001..0.001);
        let a = if profile == DriftProfile::Day && turbulent(t) {
            let phase = (t - 10.0 * 3600.0) / (6.0 * 3600.0);
            let bump = libm::sin(PI * phase);
            base + (peak - base) * bump * bump
        } else {
            base + jitter
        };
        amplitude.push(a);
        if profile == DriftProfile::Day && turbulent(t) {
            turb = 0.8 * turb + kick.sample(&mut rng);
            turb = turb.clamp(-0.05, 0.05);
        } else {
            turb *= 0.8;
        }
        center[i] += turb;
    }

    // Scale the slow drift so the whole day stays inside the observed range.
    let mean = center.iter().sum::<f64>() / n as f64;
    let (lo, hi) = center
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let target = DRIFT_LIMIT_MM * rng.random_range(0.6..0.95);
    let s = target / (hi - lo);
    let offset = rng.random_range(4.0..6.0);
    for c in &mut center {
        *c = offset + (*c - mean) * s;
    }
    DriftSeries {
        times,
        center,
        amplitude,
    }
}

/// One step of the closed tracking loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    pub t: f64,
    pub truth: f64,
    pub window: SweepWindow,
    /// Fitted center, or the previous one when the fit failed.
    pub tracked: f64,
    pub fit_ok: bool,
}

/// Runs the sweep-and-refit loop over `series`, starting centered on the
/// first true position.
pub fn track_drift(series: &DriftSeries, samples: usize, rel_noise: f64, seed: u64) -> Vec<TrackPoint> {
    let mut out = Vec::with_capacity(series.len());
    let mut xc = series.center.first().copied().unwrap_or(0.0);
    for i in 0..series.len() {
        let window = sweep_step(xc);
        let fit = series
            .trace_at(i, &window, samples, rel_noise, seed)
            .and_then(|tr| fit_double_gaussian(&tr, FIT_WIDTH_MM));
        let fit_ok = match fit {
            Ok(r) if window.contains(r.params.x_c) => {
                xc = r.params.x_c;
                true
            }
            _ => false,
        };
        out.push(TrackPoint {
            t: series.times[i],
            truth: series.center[i],
            window,
            tracked: xc,
            fit_ok,
        });
    }
    out
}

/// Uniform vertical gradient of the refractive index over a horizontal path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientModel {
    /// Per metre.
    pub dn_dy: f64,
    /// Metres.
    pub path_length: f64,
}

impl GradientModel {
    pub fn new(dn_dy: f64, path_length: f64) -> Result<Self> {
        if !(path_length > 0.0) || !path_length.is_finite() || !dn_dy.is_finite() {
            return Err(Error::InvalidParameter {
                name: "path_length",
                value: path_length,
                reason: "path length must be positive and the gradient finite",
            });
        }
        Ok(Self { dn_dy, path_length })
    }

    /// From a temperature gradient in K/m.
    pub fn from_temperature_gradient(dt_dy: f64, path_length: f64) -> Result<Self> {
        Self::new(DN_DT_AIR * dt_dy, path_length)
    }
}

/// Vertical displacement of a ray after `path_length` metres in a uniform
/// gradient: `½ · dn/dy · L²`.
pub fn beam_deflection(model: &GradientModel) -> f64 {
    0.5 * model.dn_dy * model.path_length * model.path_length
}
