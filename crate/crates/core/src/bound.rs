//! Lower limit of the superluminal speeds an Earth-based experiment can
//! detect:
//!
//! ```text
//! β_t,min = sqrt(1 + (1 − β²)(1 − ρ̄²) / (ρ̄ + β sin χ sin(π δt / T))²)
//! ```
//!
//! and its pointwise form used by the day simulator, where the window term
//! is replaced by the instantaneous `β |cos η(t)|`.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::PI;

use crate::{Error, Result};

/// A reduced superluminal speed `v_t / c`, possibly unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReducedSpeed {
    Finite(f64),
    Infinite,
}

impl ReducedSpeed {
    /// Parses a finite value, mapping `+∞` to [`ReducedSpeed::Infinite`].
    pub fn from_f64(value: f64) -> Self {
        if value == f64::INFINITY {
            ReducedSpeed::Infinite
        } else {
            ReducedSpeed::Finite(value)
        }
    }

    pub fn as_f64(&self) -> f64 {
        match *self {
            ReducedSpeed::Finite(v) => v,
            ReducedSpeed::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ReducedSpeed::Infinite)
    }
}

impl PartialOrd for ReducedSpeed {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (ReducedSpeed::Infinite, ReducedSpeed::Infinite) => Some(Ordering::Equal),
            (ReducedSpeed::Infinite, _) => Some(Ordering::Greater),
            (_, ReducedSpeed::Infinite) => Some(Ordering::Less),
            (ReducedSpeed::Finite(a), ReducedSpeed::Finite(b)) => a.partial_cmp(b),
        }
    }
}

/// Parameters of the detectable-speed bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInput {
    /// Fractional path uncertainty `Δd / d_AB`.
    pub rho_bar: f64,
    /// Reduced speed of the preferred frame.
    pub beta: f64,
    /// Polar angle of the frame velocity, radians.
    pub chi: f64,
    /// Acquisition time, seconds.
    pub delta_t: f64,
    /// Sidereal day, seconds.
    pub period: f64,
}

impl BoundInput {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, value, reason| Err(Error::InvalidParameter { name, value, reason });
        if !(self.rho_bar > 0.0 && self.rho_bar < 1.0) {
            return bad("rho_bar", self.rho_bar, "fractional mismatch must lie in (0, 1)");
        }
        if !(0.0..1.0).contains(&self.beta) {
            return bad("beta", self.beta, "reduced frame speed must lie in [0, 1)");
        }
        if !self.chi.is_finite() {
            return bad("chi", self.chi, "polar angle must be finite");
        }
        if !(self.delta_t > 0.0) || !self.delta_t.is_finite() {
            return bad("delta_t", self.delta_t, "acquisition time must be positive");
        }
        if !(self.period > 0.0) || !self.period.is_finite() {
            return bad("period", self.period, "sidereal period must be positive");
        }
        Ok(())
    }

    /// `ρ̄ + β sin χ sin(π δt / T)`.
    pub fn effective_mismatch(&self) -> f64 {
        self.rho_bar + self.beta * libm::sin(self.chi) * libm::sin(PI * self.delta_t / self.period)
    }
}

/// `sqrt(1 + (1 − β²)(1 − ρ²) / ρ_eff²)` for `ρ_eff > 0`, evaluated
/// without overflow. Returns exactly 1 when the numerator vanishes.
fn speed_for_mismatch(rho: f64, rho_eff: f64, beta: f64) -> f64 {
    let numerator = (1.0 - beta * beta) * (1.0 - rho * rho);
    if numerator <= 0.0 {
        return 1.0;
    }
    libm::hypot(1.0, libm::sqrt(numerator) / rho_eff)
}

/// The lowest superluminal reduced speed the configuration can exclude.
pub fn beta_t_min(input: &BoundInput) -> Result<f64> {
    input.validate()?;
    let denominator = input.effective_mismatch();
    if !(denominator > 0.0) {
        return Err(Error::BoundDomain { denominator });
    }
    Ok(speed_for_mismatch(input.rho_bar, denominator, input.beta))
}

/// `β_t,min` over a grid of frame speeds with the remaining inputs fixed.
/// Errors carry the index of the offending grid point.
pub fn bound_curve(betas: &[f64], template: &BoundInput) -> Result<Vec<(f64, f64)>> {
    if betas.is_empty() {
        return Err(Error::InvalidParameter {
            name: "betas",
            value: 0.0,
            reason: "grid must be nonempty",
        });
    }
    betas
        .iter()
        .enumerate()
        .map(|(index, &beta)| {
            let input = BoundInput { beta, ..*template };
            beta_t_min(&input)
                .map(|v| (beta, v))
                .map_err(|e| Error::GridPoint {
                    index,
                    beta,
                    source: alloc::boxed::Box::new(e),
                })
        })
        .collect()
}

/// Speed a signal needs to connect the two detections when the
/// instantaneous fractional mismatch is `rho_inst` and the baseline makes
/// angle `η` with the frame velocity. The effective mismatch is
/// `ρ_inst + β |cos η|`; at or beyond 1 any superluminal speed suffices,
/// and at 0 no finite speed does.
pub fn required_speed(rho_inst: f64, cos_eta: f64, beta: f64) -> ReducedSpeed {
    let rho = rho_inst.max(0.0);
    let rho_eff = rho + beta * cos_eta.abs();
    if rho_eff >= 1.0 {
        ReducedSpeed::Finite(1.0)
    } else if rho_eff <= 0.0 {
        ReducedSpeed::Infinite
    } else {
        ReducedSpeed::Finite(speed_for_mismatch(rho, rho_eff, beta))
    }
}

/// Smallest effective mismatch at which a signal of speed `beta_t` still
/// arrives in time, `sqrt((1 − β²) / (β_t² − 1))`. This inverts
/// [`required_speed`] up to the `(1 − ρ_inst²)` factor, a relative
/// correction of order `ρ_inst²`.
pub fn critical_mismatch(beta_t: ReducedSpeed, beta: f64) -> f64 {
    match beta_t {
        ReducedSpeed::Infinite => 0.0,
        ReducedSpeed::Finite(v) if v <= 1.0 => 1.0,
        ReducedSpeed::Finite(v) => libm::sqrt((1.0 - beta * beta) / (v * v - 1.0)),
    }
}
