//! Seeded Monte Carlo of singles and coincidence counting, accidental and
//! background corrections, transmission-independent normalization, and
//! correlation estimates with propagated Poisson uncertainties.
//!
//! Counts follow
//!
//! ```text
//! N_A(α_A)      = N τ_A ε_A p_A(α_A)
//! N_B(α_B)      = N τ_B ε_B p_B(α_B)
//! N(α_A, α_B)   = N τ_A ε_A τ_B ε_B p(α_A, α_B)
//! ```
//!
//! for `N` emitted pairs, plus dark counts and accidental coincidences
//! between unrelated detections.

mod acquisition;
mod day;
mod exact;
mod normalize;

pub use acquisition::{simulate_window, WindowSpec};
pub use day::{
    loss_intervals, simulate_measurement, simulate_sidereal_day, DayConfig, DayRun, InfluenceModel,
    LossInterval, Measurement, MismatchSampler, Schedule,
};
pub use exact::{expected_record, noise_free_counts, CountField, Exact, ExpectedRecord};
pub use normalize::{estimate_s, normalize, Normalization, SEstimate};

use crate::polarization::{joint_probability, singles_probability, EntangledState, PolarizerPair};
use crate::{Error, Result};

/// Output pulse duration of the photon counting modules, seconds.
pub const DEFAULT_PULSE_WIDTH: f64 = 25e-9;
/// Pair emission rate used by default, pairs per second.
pub const DEFAULT_PAIR_RATE: f64 = 15_000.0;

/// A photon counting channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorChannel {
    pub efficiency: f64,
    /// Dark plus background counts, per second.
    pub dark_rate: f64,
    /// Output pulse duration `δ't`, seconds.
    pub pulse_width: f64,
}

impl DetectorChannel {
    pub fn new(efficiency: f64, dark_rate: f64, pulse_width: f64) -> Result<Self> {
        let d = Self {
            efficiency,
            dark_rate,
            pulse_width,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(Error::InvalidProbability {
                what: "detector efficiency",
                value: self.efficiency,
            });
        }
        if !(self.dark_rate >= 0.0) || !self.dark_rate.is_finite() {
            return Err(Error::InvalidParameter {
                name: "dark_rate",
                value: self.dark_rate,
                reason: "dark rate must be nonnegative",
            });
        }
        if !(self.pulse_width > 0.0) || !self.pulse_width.is_finite() {
            return Err(Error::InvalidParameter {
                name: "pulse_width",
                value: self.pulse_width,
                reason: "pulse width must be positive",
            });
        }
        Ok(())
    }
}

impl Default for DetectorChannel {
    fn default() -> Self {
        Self {
            efficiency: 1.0,
            dark_rate: 0.0,
            pulse_width: DEFAULT_PULSE_WIDTH,
        }
    }
}

/// Transmission of one arm, possibly varying with time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transmission {
    Constant(f64),
    /// `mean + amplitude · sin(2πt / period + phase)`.
    Sinusoidal {
        mean: f64,
        amplitude: f64,
        period: f64,
        phase: f64,
    },
    /// Daytime stress profile: outside `[start, end)` (seconds of day) the
    /// transmission is `base`; inside it drops by up to `depth · base`,
    /// following a fast oscillation of period `period`.
    Sunlight {
        base: f64,
        depth: f64,
        start: f64,
        end: f64,
        period: f64,
    },
}

impl Transmission {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = match *self {
            Transmission::Constant(t) => (t, t),
            Transmission::Sinusoidal {
                mean,
                amplitude,
                period,
                ..
            } => {
                if !(period > 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "period",
                        value: period,
                        reason: "modulation period must be positive",
                    });
                }
                (mean - amplitude.abs(), mean + amplitude.abs())
            }
            Transmission::Sunlight {
                base,
                depth,
                period,
                ..
            } => {
                if !(period > 0.0) || !(0.0..=1.0).contains(&depth) {
                    return Err(Error::InvalidParameter {
                        name: "depth",
                        value: depth,
                        reason: "stress depth must lie in [0, 1] with a positive period",
                    });
                }
                (base * (1.0 - depth), base)
            }
        };
        if !(lo >= 0.0 && hi <= 1.0) {
            return Err(Error::InvalidProbability {
                what: "arm transmission",
                value: if lo < 0.0 { lo } else { hi },
            });
        }
        Ok(())
    }

    /// Transmission at time `t`, seconds.
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            Transmission::Constant(tau) => tau,
            Transmission::Sinusoidal {
                mean,
                amplitude,
                period,
                phase,
            } => mean + amplitude * libm::sin(core::f64::consts::TAU * t / period + phase),
            Transmission::Sunlight {
                base,
                depth,
                start,
                end,
                period,
            } => {
                let day = crate::rem_euclid(t, 86_400.0);
                if day < start || day >= end {
                    base
                } else {
                    let x = core::f64::consts::TAU * day / period;
                    let wobble = 0.5 + 0.25 * libm::sin(x) + 0.25 * libm::sin(2.7 * x + 1.3);
                    base * (1.0 - depth * wobble)
                }
            }
        }
    }

    /// Same profile with every transmission value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        match *self {
            Transmission::Constant(t) => Transmission::Constant(t * factor),
            Transmission::Sinusoidal {
                mean,
                amplitude,
                period,
                phase,
            } => Transmission::Sinusoidal {
                mean: mean * factor,
                amplitude: amplitude * factor,
                period,
                phase,
            },
            Transmission::Sunlight {
                base,
                depth,
                start,
                end,
                period,
            } => Transmission::Sunlight {
                base: base * factor,
                depth,
                start,
                end,
                period,
            },
        }
    }
}

impl Default for Transmission {
    fn default() -> Self {
        Transmission::Constant(1.0)
    }
}

/// Both detection arms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Apparatus {
    pub detector_a: DetectorChannel,
    pub detector_b: DetectorChannel,
    pub transmission_a: Transmission,
    pub transmission_b: Transmission,
}

impl Apparatus {
    pub fn validate(&self) -> Result<()> {
        self.detector_a.validate()?;
        self.detector_b.validate()?;
        self.transmission_a.validate()?;
        self.transmission_b.validate()
    }

    /// Full width `δ't` of the coincidence window: two detections coincide
    /// when their pulses start less than `δ't / 2` apart, which makes the
    /// accidental rate of independent streams `r_A r_B δ't`.
    pub fn coincidence_window(&self) -> f64 {
        0.5 * (self.detector_a.pulse_width + self.detector_b.pulse_width)
    }
}

/// Pass probabilities through the two polarizers for one pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassProbabilities {
    pub p_a: f64,
    pub p_b: f64,
    pub p_ab: f64,
}

impl PassProbabilities {
    pub fn validate(&self) -> Result<()> {
        for (what, value) in [
            ("polarizer pass probability at A", self.p_a),
            ("polarizer pass probability at B", self.p_b),
            ("joint pass probability", self.p_ab),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::InvalidProbability { what, value });
            }
        }
        let slack = 1e-12;
        if self.p_ab > self.p_a.min(self.p_b) + slack || self.p_ab + 1.0 + slack < self.p_a + self.p_b {
            return Err(Error::InvalidProbability {
                what: "joint pass probability inconsistent with marginals",
                value: self.p_ab,
            });
        }
        Ok(())
    }
}

/// Source of the joint statistics of a pair at a given setting.
pub trait CorrelationModel {
    fn probabilities(&self, setting: &PolarizerPair) -> PassProbabilities;
}

/// Quantum correlations of the entangled state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QuantumCorrelations(pub EntangledState);

impl CorrelationModel for QuantumCorrelations {
    fn probabilities(&self, setting: &PolarizerPair) -> PassProbabilities {
        PassProbabilities {
            p_a: singles_probability(&self.0, setting.alpha_a),
            p_b: singles_probability(&self.0, setting.alpha_b),
            p_ab: joint_probability(&self.0, setting),
        }
    }
}

/// Uncorrelated photons: `p(a, b) = p_A · p_B`, angle independent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Factorized {
    pub p_a: f64,
    pub p_b: f64,
}

impl Default for Factorized {
    fn default() -> Self {
        Self { p_a: 0.5, p_b: 0.5 }
    }
}

impl CorrelationModel for Factorized {
    fn probabilities(&self, _setting: &PolarizerPair) -> PassProbabilities {
        PassProbabilities {
            p_a: self.p_a,
            p_b: self.p_b,
            p_ab: self.p_a * self.p_b,
        }
    }
}

impl<M: CorrelationModel + ?Sized> CorrelationModel for &M {
    fn probabilities(&self, setting: &PolarizerPair) -> PassProbabilities {
        (**self).probabilities(setting)
    }
}

/// Counts from one acquisition at one setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountRecord {
    pub setting: PolarizerPair,
    /// Start of the acquisition, seconds from the run origin.
    pub window_start: f64,
    /// Acquisition time `δt`, seconds.
    pub window_length: f64,
    pub n_a: f64,
    pub n_b: f64,
    /// Raw coincidences, accidentals included.
    pub n_ab: f64,
    /// Coincidences after accidental subtraction (may be negative).
    pub n_ab_corrected: f64,
}

/// Accidental coincidence rate of two independent streams:
/// `r_A · r_B · δ't`.
pub fn accidental_rate(rate_a: f64, rate_b: f64, pulse_width: f64) -> f64 {
    rate_a * rate_b * pulse_width
}

/// Removes the expected accidentals `(n_A/δt)(n_B/δt) δ't · δt` from the raw
/// coincidences. The result is not clamped at zero.
pub fn subtract_accidentals(record: &CountRecord, pulse_width: f64) -> CountRecord {
    let t = record.window_length;
    let accidentals = accidental_rate(record.n_a / t, record.n_b / t, pulse_width) * t;
    CountRecord {
        n_ab_corrected: record.n_ab - accidentals,
        ..*record
    }
}
