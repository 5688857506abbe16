use alloc::vec::Vec;

use rand::Rng;

use super::acquisition::{acquire, Scratch, WindowSpec};
use super::normalize::{estimate_s, Normalization, SEstimate};
use super::{Apparatus, CorrelationModel, CountRecord, Factorized, QuantumCorrelations};
use crate::bound::{required_speed, ReducedSpeed};
use crate::geometry::{BaselineGeometry, CosEta, PreferredFrame, SiderealClock};
use crate::polarization::{setting, EntangledState, SETTING_COUNT};
use crate::rng::{stream_rng, window_stream};
use crate::{Error, Result};

/// Distribution of the instantaneous fractional path mismatch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MismatchSampler {
    Uniform { max: f64 },
    Constant(f64),
}

impl MismatchSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            MismatchSampler::Uniform { max } => max * rng.random::<f64>(),
            MismatchSampler::Constant(v) => v,
        }
    }

    fn validate(&self) -> Result<()> {
        let v = match *self {
            MismatchSampler::Uniform { max } => max,
            MismatchSampler::Constant(v) => v,
        };
        if !(0.0..1.0).contains(&v) {
            return Err(Error::InvalidParameter {
                name: "rho_inst",
                value: v,
                reason: "fractional mismatch must lie in [0, 1)",
            });
        }
        Ok(())
    }
}

/// What happens to a pair when no signal can connect its detections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfluenceModel<F = Factorized> {
    pub beta_t: ReducedSpeed,
    pub fallback: F,
    pub mismatch: MismatchSampler,
}

impl InfluenceModel<Factorized> {
    /// Factorized fallback and a uniform mismatch on `[0, rho_bar]`.
    pub fn new(beta_t: ReducedSpeed, rho_bar: f64) -> Self {
        Self {
            beta_t,
            fallback: Factorized::default(),
            mismatch: MismatchSampler::Uniform { max: rho_bar },
        }
    }
}

impl<F> InfluenceModel<F> {
    pub fn validate(&self) -> Result<()> {
        if let ReducedSpeed::Finite(v) = self.beta_t {
            if !(v >= 1.0) {
                return Err(Error::InvalidParameter {
                    name: "beta_t",
                    value: v,
                    reason: "superluminal reduced speed must be at least 1",
                });
            }
        }
        self.mismatch.validate()
    }
}

/// Timing of one S measurement: the 12 settings are visited in order,
/// each held for `acquisition_time`, one every `measurement_interval / 12`
/// seconds. The difference is polarizer rotation dead time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    measurement_interval: f64,
    acquisition_time: f64,
}

impl Schedule {
    pub fn new(measurement_interval: f64, acquisition_time: f64) -> Result<Self> {
        if !(acquisition_time > 0.0) || !acquisition_time.is_finite() {
            return Err(Error::InvalidParameter {
                name: "acquisition_time",
                value: acquisition_time,
                reason: "acquisition time must be positive",
            });
        }
        if !(measurement_interval >= SETTING_COUNT as f64 * acquisition_time) || !measurement_interval.is_finite() {
            return Err(Error::InvalidParameter {
                name: "measurement_interval",
                value: measurement_interval,
                reason: "interval must hold 12 acquisitions",
            });
        }
        Ok(Self {
            measurement_interval,
            acquisition_time,
        })
    }

    pub fn measurement_interval(&self) -> f64 {
        self.measurement_interval
    }

    pub fn acquisition_time(&self) -> f64 {
        self.acquisition_time
    }

    /// Dead time after each acquisition.
    pub fn latency(&self) -> f64 {
        self.measurement_interval / SETTING_COUNT as f64 - self.acquisition_time
    }

    /// Start of acquisition `slot` of measurement `index`.
    pub fn acquisition_start(&self, index: usize, slot: usize) -> f64 {
        index as f64 * self.measurement_interval + slot as f64 * self.measurement_interval / SETTING_COUNT as f64
    }

    /// Number of measurements needed to cover `[0, period)`.
    pub fn measurements_per(&self, period: f64) -> usize {
        libm::ceil(period / self.measurement_interval) as usize
    }
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            measurement_interval: 100.0,
            acquisition_time: 1.0,
        }
    }
}

/// Everything a sidereal-day run needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DayConfig<F = Factorized> {
    pub frame: PreferredFrame,
    pub geometry: BaselineGeometry,
    pub clock: SiderealClock,
    pub state: EntangledState,
    pub influence: InfluenceModel<F>,
    pub schedule: Schedule,
    pub apparatus: Apparatus,
    pub pair_rate: f64,
    pub seed: u64,
}

/// One S measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub index: usize,
    /// Midpoint of the measurement interval, sidereal seconds.
    pub t_mid: f64,
    pub records: [CountRecord; SETTING_COUNT],
    pub estimate: SEstimate,
    /// Fraction of pairs that kept quantum correlations.
    pub correlated_fraction: f64,
}

/// Simulates measurement `index` of the day. Each acquisition draws from
/// its own stream, so the result does not depend on what else is run.
pub fn simulate_measurement<F: CorrelationModel>(cfg: &DayConfig<F>, index: usize) -> Result<Measurement> {
    cfg.influence.validate()?;
    let cos = CosEta::new(&cfg.frame, &cfg.geometry, &cfg.clock);
    let beta = cfg.frame.beta();
    let quantum = QuantumCorrelations(cfg.state);
    let mut scratch = Scratch::default();
    let mut pairs = 0u64;
    let mut correlated = 0u64;
    let mut records = [None; SETTING_COUNT];
    for (slot, out) in records.iter_mut().enumerate() {
        let pair = setting(slot);
        let spec = WindowSpec {
            setting: pair,
            start: cfg.schedule.acquisition_start(index, slot),
            length: cfg.schedule.acquisition_time(),
            pair_rate: cfg.pair_rate,
        };
        let mut rng = stream_rng(cfg.seed, window_stream(index as u64, slot as u64));
        let influence = &cfg.influence;
        let gate = |t: f64, rng: &mut crate::rng::SimRng| match influence.beta_t {
            ReducedSpeed::Infinite => true,
            beta_t => {
                let rho = influence.mismatch.sample(rng);
                beta_t >= required_speed(rho, cos.at(t), beta)
            }
        };
        let (record, tally) = acquire(
            &spec,
            &cfg.apparatus,
            &quantum.probabilities(&pair),
            &influence.fallback.probabilities(&pair),
            gate,
            &mut rng,
            &mut scratch,
        )?;
        pairs += tally.pairs;
        correlated += tally.correlated;
        *out = Some(record);
    }
    let records = records.map(|r| r.expect("every slot simulated"));
    let background = (cfg.apparatus.detector_a.dark_rate, cfg.apparatus.detector_b.dark_rate);
    let norm = Normalization::from_records(&records, background)?;
    let estimate = estimate_s(&records, &norm, cfg.apparatus.coincidence_window())?;
    Ok(Measurement {
        index,
        t_mid: (index as f64 + 0.5) * cfg.schedule.measurement_interval(),
        records,
        estimate,
        correlated_fraction: if pairs == 0 {
            1.0
        } else {
            correlated as f64 / pairs as f64
        },
    })
}

/// A full day of measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct DayRun {
    pub measurements: Vec<Measurement>,
    pub measurement_interval: f64,
    pub period: f64,
}

/// Simulates every measurement covering one sidereal day, in order.
pub fn simulate_sidereal_day<F: CorrelationModel>(cfg: &DayConfig<F>) -> Result<DayRun> {
    let n = cfg.schedule.measurements_per(cfg.clock.period());
    let measurements = (0..n)
        .map(|k| simulate_measurement(cfg, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(DayRun {
        measurements,
        measurement_interval: cfg.schedule.measurement_interval(),
        period: cfg.clock.period(),
    })
}

/// A run of consecutive measurements with `S_max` significantly below the
/// quantum value. Runs wrap around the end of the day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossInterval {
    pub first: usize,
    /// Inclusive; smaller than `first` when the run wraps.
    pub last: usize,
    pub len: usize,
    /// Center of the run, seconds in `[0, period)`.
    pub center: f64,
    pub width: f64,
}

/// Runs of measurements with `s_max < qm_value − k_sigma · σ`.
pub fn loss_intervals(run: &DayRun, qm_value: f64, k_sigma: f64) -> Vec<LossInterval> {
    let flags: Vec<bool> = run
        .measurements
        .iter()
        .map(|m| m.estimate.s_max < qm_value - k_sigma * m.estimate.sigma_smax)
        .collect();
    let n = flags.len();
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let dt = run.measurement_interval;
    let t_mid = |i: usize| (i as f64 + 0.5) * dt;
    if flags.iter().all(|&f| f) {
        out.push(LossInterval {
            first: 0,
            last: n - 1,
            len: n,
            center: 0.5 * n as f64 * dt,
            width: n as f64 * dt,
        });
        return out;
    }
    // Start scanning just after an unflagged measurement so no run is split.
    let origin = flags.iter().position(|&f| !f).unwrap_or(0);
    let mut k = 0;
    while k < n {
        let i = (origin + k) % n;
        if !flags[i] {
            k += 1;
            continue;
        }
        let mut len = 0;
        while k + len < n && flags[(origin + k + len) % n] {
            len += 1;
        }
        let last = (i + len - 1) % n;
        let center = crate::rem_euclid(t_mid(i) + 0.5 * (len - 1) as f64 * dt, run.period);
        out.push(LossInterval {
            first: i,
            last,
            len,
            center,
            width: len as f64 * dt,
        });
        k += len;
    }
    out.sort_by(|a, b| a.center.total_cmp(&b.center));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fake_run(flags: &[bool]) -> DayRun {
        let measurements = flags
            .iter()
            .enumerate()
            .map(|(i, &low)| Measurement {
                index: i,
                t_mid: (i as f64 + 0.5) * 10.0,
                records: [CountRecord {
                    setting: setting(0),
                    window_start: 0.0,
                    window_length: 1.0,
                    n_a: 0.0,
                    n_b: 0.0,
                    n_ab: 0.0,
                    n_ab_corrected: 0.0,
                }; SETTING_COUNT],
                estimate: SEstimate {
                    s_max: if low { -0.3 } else { 0.2 },
                    s_min: -1.2,
                    sigma_smax: 0.01,
                    sigma_smin: 0.01,
                },
                correlated_fraction: 1.0,
            })
            .collect();
        DayRun {
            measurements,
            measurement_interval: 10.0,
            period: flags.len() as f64 * 10.0,
        }
    }

    #[test]
    fn runs_wrap_around_midnight() {
        let run = fake_run(&[true, false, false, true, true, false, true, true]);
        let iv = loss_intervals(&run, 0.2071, 5.0);
        assert_eq!(iv.len(), 2);
        let wrapped = iv.iter().find(|i| i.first == 6).unwrap();
        assert_eq!((wrapped.last, wrapped.len), (0, 3));
        assert!((wrapped.center - 75.0).abs() < 1e-9);
        let inner = iv.iter().find(|i| i.first == 3).unwrap();
        assert_eq!(inner.len, 2);
        assert!((inner.center - 40.0).abs() < 1e-9);
    }

    #[test]
    fn schedule_latency() {
        let s = Schedule::default();
        assert!((s.latency() - (100.0 / 12.0 - 1.0)).abs() < 1e-12);
        assert!(Schedule::new(1.0, 0.1).is_err());
        assert_eq!(s.measurements_per(crate::geometry::MEAN_SIDEREAL_DAY), 862);
    }
}
