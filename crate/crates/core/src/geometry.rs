//! Orientation of the preferred-frame velocity relative to a baseline that
//! rotates with the Earth.
//!
//! With the Earth's polar axis as `z`, the baseline unit vector has
//! declination `δ_b` and right ascension advancing at the sidereal rate, so
//!
//! ```text
//! cos η(t) = cos χ · sin δ_b + sin χ · cos δ_b · cos(2πt/T + φ₀)
//! ```
//!
//! where `χ` is the polar angle of the frame velocity. The two detection
//! events are simultaneous in the preferred frame when `cos η = 0`.

use core::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::{Error, Result};

/// Mean sidereal day, seconds.
pub const MEAN_SIDEREAL_DAY: f64 = 86164.0905;

/// Closeness to the tangency condition below which a single crossing is
/// reported.
const TANGENT_TOLERANCE: f64 = 1e-12;

/// Velocity of the preferred frame relative to the fixed stars.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreferredFrame {
    beta: f64,
    polar_angle: f64,
    phase0: f64,
}

impl PreferredFrame {
    pub fn new(beta: f64, polar_angle: f64, phase0: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::InvalidParameter {
                name: "beta",
                value: beta,
                reason: "reduced frame speed must lie in [0, 1)",
            });
        }
        if !(0.0..=PI).contains(&polar_angle) {
            return Err(Error::InvalidParameter {
                name: "polar_angle",
                value: polar_angle,
                reason: "polar angle must lie in [0, π]",
            });
        }
        if !phase0.is_finite() {
            return Err(Error::InvalidParameter {
                name: "phase0",
                value: phase0,
                reason: "phase must be finite",
            });
        }
        Ok(Self {
            beta,
            polar_angle,
            phase0,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn polar_angle(&self) -> f64 {
        self.polar_angle
    }

    pub fn phase0(&self) -> f64 {
        self.phase0
    }
}

/// How the baseline declination is derived from the site geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeclinationMode {
    /// `δ_b = asin(sin γ · cos latitude)`.
    #[default]
    Exact,
    /// `δ_b = γ`: the simplified statement that the accessible polar angles
    /// are `[γ, π − γ]`.
    GalleryTilt,
}

/// Orientation and length of the polarizer baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineGeometry {
    gamma: f64,
    latitude: f64,
    d_ab: f64,
    mode: DeclinationMode,
}

impl BaselineGeometry {
    /// `gamma` is the angle between the baseline and the local East–West
    /// axis, `d_ab` the polarizer separation in meters.
    pub fn new(gamma: f64, latitude: f64, d_ab: f64) -> Result<Self> {
        if !(gamma.abs() <= FRAC_PI_2) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                value: gamma,
                reason: "baseline tilt must satisfy |γ| ≤ π/2",
            });
        }
        if !(latitude.abs() <= FRAC_PI_2) {
            return Err(Error::InvalidParameter {
                name: "latitude",
                value: latitude,
                reason: "latitude must satisfy |λ| ≤ π/2",
            });
        }
        if !(d_ab > 0.0) || !d_ab.is_finite() {
            return Err(Error::InvalidParameter {
                name: "d_ab",
                value: d_ab,
                reason: "baseline length must be positive",
            });
        }
        Ok(Self {
            gamma,
            latitude,
            d_ab,
            mode: DeclinationMode::Exact,
        })
    }

    /// A true East–West baseline at the equator.
    pub fn east_west(d_ab: f64) -> Result<Self> {
        Self::new(0.0, 0.0, d_ab)
    }

    pub fn with_mode(mut self, mode: DeclinationMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn latitude(&self) -> f64 {
        self.latitude
    }

    pub fn d_ab(&self) -> f64 {
        self.d_ab
    }

    pub fn mode(&self) -> DeclinationMode {
        self.mode
    }
}

/// Length of the rotation period used for the baseline motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiderealClock {
    period: f64,
}

impl SiderealClock {
    pub fn new(period: f64) -> Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::InvalidParameter {
                name: "period",
                value: period,
                reason: "sidereal period must be positive",
            });
        }
        Ok(Self { period })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Angular rate, rad/s.
    pub fn omega(&self) -> f64 {
        TAU / self.period
    }
}

impl Default for SiderealClock {
    fn default() -> Self {
        Self {
            period: MEAN_SIDEREAL_DAY,
        }
    }
}

/// Effective declination of the baseline direction.
pub fn baseline_declination(geom: &BaselineGeometry) -> f64 {
    match geom.mode {
        DeclinationMode::Exact => {
            libm::asin((libm::sin(geom.gamma) * libm::cos(geom.latitude)).clamp(-1.0, 1.0))
        }
        DeclinationMode::GalleryTilt => geom.gamma,
    }
}

/// The constant and oscillating parts of `cos η(t) = a + b cos(ωt + φ₀)`.
fn cos_eta_terms(pf: &PreferredFrame, geom: &BaselineGeometry) -> (f64, f64) {
    let delta = baseline_declination(geom);
    let (s_chi, c_chi) = libm::sincos(pf.polar_angle);
    let (s_d, c_d) = libm::sincos(delta);
    (c_chi * s_d, s_chi * c_d)
}

/// Cosine of the angle between the frame velocity and the baseline at
/// sidereal time `t` (seconds).
pub fn cos_eta(t: f64, pf: &PreferredFrame, geom: &BaselineGeometry, clock: &SiderealClock) -> f64 {
    let (a, b) = cos_eta_terms(pf, geom);
    let phase = crate::rem_euclid(t / clock.period, 1.0) * TAU + pf.phase0;
    (a + b * libm::cos(phase)).clamp(-1.0, 1.0)
}

/// Precomputed form of [`cos_eta`] for repeated evaluation.
#[derive(Debug, Clone, Copy)]
pub struct CosEta {
    constant: f64,
    amplitude: f64,
    period: f64,
    phase0: f64,
}

impl CosEta {
    pub fn new(pf: &PreferredFrame, geom: &BaselineGeometry, clock: &SiderealClock) -> Self {
        let (constant, amplitude) = cos_eta_terms(pf, geom);
        Self {
            constant,
            amplitude,
            period: clock.period,
            phase0: pf.phase0,
        }
    }

    #[inline]
    pub fn at(&self, t: f64) -> f64 {
        let phase = crate::rem_euclid(t / self.period, 1.0) * TAU + self.phase0;
        (self.constant + self.amplitude * libm::cos(phase)).clamp(-1.0, 1.0)
    }
}

/// Orthogonality instants within one sidereal period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Crossings {
    /// The frame velocity never becomes orthogonal to the baseline.
    None,
    /// Orthogonality is reached only tangentially, once per period.
    Tangent(f64),
    /// Two transversal crossings, sorted, in `[0, T)`.
    Two(f64, f64),
    /// Velocity along the polar axis with an equatorial baseline: orthogonal
    /// at every instant.
    Always,
}

impl Crossings {
    /// The crossing instants as a slice-like list (empty for `None` and `Always`).
    pub fn times(&self) -> impl Iterator<Item = f64> {
        let (a, b) = match *self {
            Crossings::Two(t1, t2) => (Some(t1), Some(t2)),
            Crossings::Tangent(t) => (Some(t), None),
            Crossings::None | Crossings::Always => (None, None),
        };
        a.into_iter().chain(b)
    }

    pub fn count(&self) -> usize {
        self.times().count()
    }
}

/// Solutions of `cos η(t) = 0` within `[0, T)`.
pub fn crossing_times(pf: &PreferredFrame, geom: &BaselineGeometry, clock: &SiderealClock) -> Crossings {
    let (a, b) = cos_eta_terms(pf, geom);
    if b.abs() < TANGENT_TOLERANCE {
        return if a.abs() < TANGENT_TOLERANCE {
            Crossings::Always
        } else {
            Crossings::None
        };
    }
    let r = -a / b;
    let omega = clock.omega();
    let wrap = |phase: f64| crate::rem_euclid((phase - pf.phase0) / omega, clock.period);
    if (r.abs() - 1.0).abs() <= TANGENT_TOLERANCE {
        let psi = if r > 0.0 { 0.0 } else { PI };
        return Crossings::Tangent(wrap(psi));
    }
    if r.abs() > 1.0 {
        return Crossings::None;
    }
    let psi = libm::acos(r);
    let (t1, t2) = (wrap(psi), wrap(-psi));
    if t1 <= t2 {
        Crossings::Two(t1, t2)
    } else {
        Crossings::Two(t2, t1)
    }
}

/// Instant of the maximum of `cos η` within `[0, T)`.
pub fn extremum_time(pf: &PreferredFrame, clock: &SiderealClock) -> f64 {
    crate::rem_euclid(-pf.phase0 / clock.omega(), clock.period)
}

/// Fraction of the celestial sphere whose polar angles lie within `angle` of
/// either pole: `1 − cos(angle)`.
pub fn excluded_sky_fraction(angle: f64) -> Result<f64> {
    if !(0.0..=FRAC_PI_2).contains(&angle) {
        return Err(Error::InvalidParameter {
            name: "angle",
            value: angle,
            reason: "angle must lie in [0, π/2]",
        });
    }
    Ok(1.0 - libm::cos(angle))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deg;

    fn cascina() -> BaselineGeometry {
        BaselineGeometry::new(deg(18.0), deg(43.6), 1200.0).unwrap()
    }

    #[test]
    fn declination_examples() {
        let g0 = BaselineGeometry::new(0.0, deg(37.0), 1.0).unwrap();
        assert_eq!(baseline_declination(&g0), 0.0);
        let g90 = BaselineGeometry::new(deg(90.0), 0.0, 1.0).unwrap();
        assert!((baseline_declination(&g90) - FRAC_PI_2).abs() < 1e-15);
        let d = baseline_declination(&cascina()).to_degrees();
        assert!((d - 12.931_231_158_621_216).abs() < 1e-9, "{d}");
        let compat = cascina().with_mode(DeclinationMode::GalleryTilt);
        assert_eq!(baseline_declination(&compat), deg(18.0));
    }

    #[test]
    fn quarter_turn_of_east_west_baseline() {
        let pf = PreferredFrame::new(1e-3, FRAC_PI_2, 0.0).unwrap();
        let clock = SiderealClock::default();
        let v = cos_eta(clock.period() / 4.0, &pf, &BaselineGeometry::east_west(1.0).unwrap(), &clock);
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn polar_velocity_is_constant() {
        let pf = PreferredFrame::new(1e-3, 0.0, 0.7).unwrap();
        let g = cascina();
        let clock = SiderealClock::default();
        let expected = libm::sin(baseline_declination(&g));
        for i in 0..50 {
            let t = i as f64 * 1731.0;
            assert!((cos_eta(t, &pf, &g, &clock) - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn east_west_crossings_at_quarter_periods() {
        let pf = PreferredFrame::new(1e-3, FRAC_PI_2, 0.0).unwrap();
        let clock = SiderealClock::default();
        let t = clock.period();
        match crossing_times(&pf, &BaselineGeometry::east_west(1.0).unwrap(), &clock) {
            Crossings::Two(t1, t2) => {
                assert!((t1 - t / 4.0).abs() < 1e-9 * t);
                assert!((t2 - 3.0 * t / 4.0).abs() < 1e-9 * t);
                assert!(((t2 - t1) - t / 2.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn no_crossings_near_the_pole() {
        let pf = PreferredFrame::new(1e-3, deg(5.0), 0.0).unwrap();
        assert_eq!(
            crossing_times(&pf, &cascina(), &SiderealClock::default()),
            Crossings::None
        );
    }

    #[test]
    fn tangent_at_boundary_and_always_on_axis() {
        let g = BaselineGeometry::new(deg(30.0), 0.0, 1.0).unwrap();
        let pf = PreferredFrame::new(0.0, deg(30.0), 0.0).unwrap();
        assert!(matches!(
            crossing_times(&pf, &g, &SiderealClock::default()),
            Crossings::Tangent(_)
        ));
        let pf = PreferredFrame::new(0.0, 0.0, 0.0).unwrap();
        assert_eq!(
            crossing_times(&pf, &BaselineGeometry::east_west(1.0).unwrap(), &SiderealClock::default()),
            Crossings::Always
        );
    }

    #[test]
    fn excluded_fraction() {
        assert_eq!(excluded_sky_fraction(0.0).unwrap(), 0.0);
        assert!((excluded_sky_fraction(FRAC_PI_2).unwrap() - 1.0).abs() < 1e-15);
        let f = excluded_sky_fraction(deg(18.0)).unwrap();
        assert!((f - 0.048_943).abs() < 1e-6, "{f}");
        assert!(excluded_sky_fraction(-0.1).is_err());
        assert!(excluded_sky_fraction(2.0).is_err());
    }

    #[test]
    fn constructors_validate() {
        assert!(PreferredFrame::new(1.0, 0.0, 0.0).is_err());
        assert!(PreferredFrame::new(0.5, 4.0, 0.0).is_err());
        assert!(BaselineGeometry::new(0.0, 0.0, 0.0).is_err());
        assert!(BaselineGeometry::new(2.0, 0.0, 1.0).is_err());
        assert!(SiderealClock::new(-1.0).is_err());
    }
}
