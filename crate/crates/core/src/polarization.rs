//! Ideal correlations of the polarization-entangled pair
//! `(|HH⟩ + e^{iφ}|VV⟩)/√2` and the `S_max` / `S_min` estimators built from
//! coincidence counts at twelve polarizer settings.

use core::f64::consts::FRAC_PI_2;
use core::f64::consts::PI;

use crate::{Error, Result};

/// Tolerance used when matching polarizer angles modulo 180°.
pub const ANGLE_TOLERANCE: f64 = 1e-9;

/// The two-photon state, parameterized by its relative phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntangledState {
    pub phi: f64,
}

impl EntangledState {
    pub fn new(phi: f64) -> Result<Self> {
        if !phi.is_finite() {
            return Err(Error::InvalidParameter {
                name: "phi",
                value: phi,
                reason: "phase must be finite",
            });
        }
        Ok(Self { phi })
    }
}

impl Default for EntangledState {
    fn default() -> Self {
        Self { phi: 0.0 }
    }
}

/// Polarizer angles at Alice and Bob, radians from the horizontal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizerPair {
    pub alpha_a: f64,
    pub alpha_b: f64,
}

impl PolarizerPair {
    pub const fn new(alpha_a: f64, alpha_b: f64) -> Self {
        Self { alpha_a, alpha_b }
    }

    pub fn from_degrees(alpha_a_deg: f64, alpha_b_deg: f64) -> Self {
        Self::new(alpha_a_deg.to_radians(), alpha_b_deg.to_radians())
    }

    pub fn degrees(&self) -> (f64, f64) {
        (self.alpha_a.to_degrees(), self.alpha_b.to_degrees())
    }

    /// Both angles reduced to `[0, π)`.
    pub fn canonical(&self) -> Self {
        Self::new(canonical_angle(self.alpha_a), canonical_angle(self.alpha_b))
    }

    /// True when both angles agree modulo π within [`ANGLE_TOLERANCE`].
    pub fn same_setting(&self, other: &Self) -> bool {
        angles_match(self.alpha_a, other.alpha_a) && angles_match(self.alpha_b, other.alpha_b)
    }

    fn missing(&self) -> Error {
        let (a, b) = self.degrees();
        Error::MissingSetting {
            alpha_a_deg: a,
            alpha_b_deg: b,
        }
    }
}

fn canonical_angle(angle: f64) -> f64 {
    let r = crate::rem_euclid(angle, PI);
    if PI - r < ANGLE_TOLERANCE {
        0.0
    } else {
        r
    }
}

fn angles_match(x: f64, y: f64) -> bool {
    let d = crate::rem_euclid(x - y, PI);
    d < ANGLE_TOLERANCE || PI - d < ANGLE_TOLERANCE
}

/// Probability that both photons pass their polarizers:
/// `½ |cos α_A cos α_B + e^{iφ} sin α_A sin α_B|²`.
pub fn joint_probability(state: &EntangledState, pair: &PolarizerPair) -> f64 {
    let (sa, ca) = libm::sincos(pair.alpha_a);
    let (sb, cb) = libm::sincos(pair.alpha_b);
    let (sphi, cphi) = libm::sincos(state.phi);
    let re = ca * cb + cphi * sa * sb;
    let im = sphi * sa * sb;
    (0.5 * (re * re + im * im)).clamp(0.0, 0.5)
}

/// Probability that a single photon passes its polarizer. The reduced state
/// of either photon is maximally mixed, so this is ½ for every angle.
pub fn singles_probability(_state: &EntangledState, _alpha: f64) -> f64 {
    0.5
}

/// Coincidence rate with all polarizers at 45°, relative to the rate with no
/// polarizers: `(1 + cos φ) / 4`.
pub fn fringe_rate(state: &EntangledState) -> f64 {
    (1.0 + libm::cos(state.phi)) / 4.0
}

/// `N(a, ∞) = N(a, b) + N(a, b + 90°)`.
pub fn marginal_count(n_ab: f64, n_ab_perp: f64) -> f64 {
    n_ab + n_ab_perp
}

/// Number of distinct settings required by the two estimators and the
/// no-polarizer total.
pub const SETTING_COUNT: usize = 12;

/// The twelve settings in degrees, in a fixed order. Entries 0–3 form the
/// `S_max` numerator, 4–7 the `S_min` numerator (202.5° is stored as its
/// 22.5° equivalent) and 8–11 the no-polarizer total `N`.
pub const SETTINGS_DEG: [(f64, f64); SETTING_COUNT] = [
    (45.0, 67.5),
    (0.0, 67.5),
    (45.0, 112.5),
    (90.0, 22.5),
    (135.0, 22.5),
    (0.0, 22.5),
    (135.0, 157.5),
    (90.0, 67.5),
    (0.0, 0.0),
    (0.0, 90.0),
    (90.0, 0.0),
    (90.0, 90.0),
];

const S_MAX_TERMS: [usize; 4] = [0, 1, 2, 3];
const S_MIN_TERMS: [usize; 4] = [4, 5, 6, 7];
const TOTAL_TERMS: [usize; 4] = [8, 9, 10, 11];

/// The setting at `index` in [`SETTINGS_DEG`] order.
pub fn setting(index: usize) -> PolarizerPair {
    let (a, b) = SETTINGS_DEG[index];
    PolarizerPair::from_degrees(a, b)
}

/// All twelve settings in [`SETTINGS_DEG`] order.
pub fn settings() -> [PolarizerPair; SETTING_COUNT] {
    core::array::from_fn(setting)
}

/// Position of `pair` among the twelve settings, matching modulo 180°.
pub fn setting_index(pair: &PolarizerPair) -> Option<usize> {
    (0..SETTING_COUNT).find(|&i| setting(i).same_setting(pair))
}

fn unknown(pair: &PolarizerPair) -> Error {
    let (a, b) = pair.degrees();
    Error::UnknownSetting {
        alpha_a_deg: a,
        alpha_b_deg: b,
    }
}

/// Coincidence counts (real valued once corrected) at the twelve settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationCounts {
    counts: [f64; SETTING_COUNT],
}

impl CorrelationCounts {
    /// Counts in [`SETTINGS_DEG`] order.
    pub fn from_array(counts: [f64; SETTING_COUNT]) -> Result<Self> {
        if let Some(&c) = counts.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "count",
                value: c,
                reason: "counts must be finite",
            });
        }
        Ok(Self { counts })
    }

    /// Builds the table from `(setting, count)` entries. Every one of the
    /// twelve settings must appear exactly once.
    pub fn from_entries<'a, I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a (PolarizerPair, f64)>,
    {
        let mut builder = CountsBuilder::new();
        for (pair, count) in entries {
            builder.insert(pair, *count)?;
        }
        builder.build()
    }

    /// Expected counts for `total` pairs of `state` with ideal detection.
    pub fn ideal(state: &EntangledState, total: f64) -> Self {
        Self::from_fn(|pair| total * joint_probability(state, pair))
    }

    pub fn from_fn(mut f: impl FnMut(&PolarizerPair) -> f64) -> Self {
        Self {
            counts: core::array::from_fn(|i| f(&setting(i))),
        }
    }

    pub fn as_array(&self) -> &[f64; SETTING_COUNT] {
        &self.counts
    }

    pub fn get(&self, pair: &PolarizerPair) -> Result<f64> {
        setting_index(pair)
            .map(|i| self.counts[i])
            .ok_or_else(|| pair.missing())
    }

    /// `N(a, ∞)` from the entries at `(a, b)` and `(a, b + 90°)`.
    pub fn marginal_a(&self, alpha_a: f64, alpha_b: f64) -> Result<f64> {
        let n = self.get(&PolarizerPair::new(alpha_a, alpha_b))?;
        let n_perp = self.get(&PolarizerPair::new(alpha_a, alpha_b + FRAC_PI_2))?;
        Ok(marginal_count(n, n_perp))
    }

    /// `N(∞, b)` from the entries at `(a, b)` and `(a + 90°, b)`.
    pub fn marginal_b(&self, alpha_a: f64, alpha_b: f64) -> Result<f64> {
        let n = self.get(&PolarizerPair::new(alpha_a, alpha_b))?;
        let n_perp = self.get(&PolarizerPair::new(alpha_a + FRAC_PI_2, alpha_b))?;
        Ok(marginal_count(n, n_perp))
    }

    /// Coincidences with no polarizers:
    /// `N(0°,0°) + N(0°,90°) + N(90°,0°) + N(90°,90°)`.
    pub fn total(&self) -> f64 {
        TOTAL_TERMS.iter().map(|&i| self.counts[i]).sum()
    }

    fn ratio(&self, terms: &[usize; 4]) -> Result<f64> {
        let denominator = self.total();
        if !(denominator > 0.0) {
            return Err(Error::DegenerateDenominator { value: denominator });
        }
        let [p, m1, m2, m3] = terms.map(|i| self.counts[i]);
        Ok((p - m1 - m2 - m3) / denominator)
    }

    /// `[N(45°,67.5°) − N(0°,67.5°) − N(45°,112.5°) − N(90°,22.5°)] / N`.
    pub fn s_max(&self) -> Result<f64> {
        self.ratio(&S_MAX_TERMS)
    }

    /// `[N(135°,202.5°) − N(0°,202.5°) − N(135°,157.5°) − N(90°,67.5°)] / N`.
    pub fn s_min(&self) -> Result<f64> {
        self.ratio(&S_MIN_TERMS)
    }
}

/// Sensitivities of the two estimators with respect to each of the twelve
/// counts, in [`SETTINGS_DEG`] order. Used for error propagation.
pub(crate) fn estimator_gradients(counts: &[f64; SETTING_COUNT]) -> ([f64; 12], [f64; 12]) {
    let d: f64 = TOTAL_TERMS.iter().map(|&i| counts[i]).sum();
    let grad = |terms: &[usize; 4]| {
        let u = counts[terms[0]] - counts[terms[1]] - counts[terms[2]] - counts[terms[3]];
        let mut g = [0.0; 12];
        g[terms[0]] = 1.0 / d;
        for &i in &terms[1..] {
            g[i] = -1.0 / d;
        }
        for &i in &TOTAL_TERMS {
            g[i] -= u / (d * d);
        }
        g
    };
    (grad(&S_MAX_TERMS), grad(&S_MIN_TERMS))
}

/// Incremental construction of a [`CorrelationCounts`] table.
#[derive(Debug, Clone, Default)]
pub struct CountsBuilder {
    counts: [Option<f64>; SETTING_COUNT],
}

impl CountsBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, pair: &PolarizerPair, count: f64) -> Result<&mut Self> {
        let i = setting_index(pair).ok_or_else(|| unknown(pair))?;
        if self.counts[i].is_some() {
            let (a, b) = pair.degrees();
            return Err(Error::DuplicateSetting {
                alpha_a_deg: a,
                alpha_b_deg: b,
            });
        }
        self.counts[i] = Some(count);
        Ok(self)
    }

    pub fn build(&self) -> Result<CorrelationCounts> {
        let mut out = [0.0; SETTING_COUNT];
        for (i, slot) in self.counts.iter().enumerate() {
            out[i] = slot.ok_or_else(|| setting(i).missing())?;
        }
        CorrelationCounts::from_array(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::SQRT_2;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    #[test]
    fn aligned_and_orthogonal_polarizers() {
        let s = EntangledState::default();
        assert_eq!(joint_probability(&s, &PolarizerPair::from_degrees(0.0, 0.0)), 0.5);
        assert!(joint_probability(&s, &PolarizerPair::from_degrees(0.0, 90.0)) < 1e-32);
    }

    #[test]
    fn joint_probability_at_45_and_67_5() {
        // ½cos²(22.5°) = (2 + √2) / 8
        let p = joint_probability(
            &EntangledState::default(),
            &PolarizerPair::from_degrees(45.0, 67.5),
        );
        assert!(close(p, (2.0 + SQRT_2) / 8.0, 1e-15));
        assert!((p - 0.426777).abs() < 1e-6);
    }

    #[test]
    fn singles_are_one_half() {
        for (phi, alpha) in [(0.0, 0.0), (PI / 3.0, 17f64.to_radians()), (PI, PI / 4.0)] {
            assert_eq!(singles_probability(&EntangledState::new(phi).unwrap(), alpha), 0.5);
        }
    }

    #[test]
    fn fringe_extremes() {
        assert_eq!(fringe_rate(&EntangledState::new(0.0).unwrap()), 0.5);
        assert!(fringe_rate(&EntangledState::new(PI).unwrap()).abs() < 1e-16);
        let half = EntangledState::new(FRAC_PI_2).unwrap();
        let direct = joint_probability(&half, &PolarizerPair::from_degrees(45.0, 45.0));
        assert!(close(fringe_rate(&half), 0.25, 1e-15));
        assert!(close(direct, 0.25, 1e-15));
    }

    #[test]
    fn ideal_estimators() {
        let c = CorrelationCounts::ideal(&EntangledState::default(), 1.0e6);
        assert!(close(c.s_max().unwrap(), (SQRT_2 - 1.0) / 2.0, 1e-9));
        assert!(close(c.s_min().unwrap(), -(SQRT_2 + 1.0) / 2.0, 1e-9));
    }

    #[test]
    fn uniform_quarter_counts() {
        let c = CorrelationCounts::from_array([250.0; 12]).unwrap();
        assert_eq!(c.s_max().unwrap(), -0.5);
        assert_eq!(c.s_min().unwrap(), -0.5);
    }

    #[test]
    fn single_positive_term() {
        let k = 37.0;
        let mut a = [0.0; 12];
        a[0] = k;
        a[8] = k;
        let c = CorrelationCounts::from_array(a).unwrap();
        assert_eq!(c.s_max().unwrap(), 1.0);
        let mut b = [0.0; 12];
        b[8] = k;
        assert_eq!(CorrelationCounts::from_array(b).unwrap().s_min().unwrap(), 0.0);
    }

    #[test]
    fn degenerate_denominator() {
        let c = CorrelationCounts::from_array([0.0; 12]).unwrap();
        assert!(matches!(c.s_max(), Err(Error::DegenerateDenominator { .. })));
        let mut a = [1.0; 12];
        for i in TOTAL_TERMS {
            a[i] = -1.0;
        }
        let c = CorrelationCounts::from_array(a).unwrap();
        assert!(matches!(c.s_min(), Err(Error::DegenerateDenominator { .. })));
    }

    #[test]
    fn lookup_is_modulo_180() {
        let c = CorrelationCounts::from_fn(|p| p.alpha_a + 10.0 * p.alpha_b);
        let direct = c.get(&PolarizerPair::from_degrees(135.0, 22.5)).unwrap();
        let wrapped = c.get(&PolarizerPair::from_degrees(135.0, 202.5)).unwrap();
        assert_eq!(direct, wrapped);
        assert_eq!(
            c.get(&PolarizerPair::from_degrees(-135.0, 67.5 + 180.0)).unwrap(),
            c.get(&PolarizerPair::from_degrees(45.0, 67.5)).unwrap()
        );
        assert!(matches!(
            c.get(&PolarizerPair::from_degrees(10.0, 10.0)),
            Err(Error::MissingSetting { .. })
        ));
    }

    #[test]
    fn marginals() {
        assert_eq!(marginal_count(3.0, 4.0), 7.0);
        assert_eq!(marginal_count(0.0, 0.0), 0.0);
        let total = 8000.0;
        let c = CorrelationCounts::ideal(&EntangledState::default(), total);
        assert!(close(c.marginal_a(0.0, 0.0).unwrap(), total / 2.0, 1e-15));
        assert!(close(c.marginal_b(0.0, 0.0).unwrap(), total / 2.0, 1e-15));
        assert!(matches!(
            c.marginal_a(deg(45.0), deg(67.5)),
            Err(Error::MissingSetting { .. })
        ));
    }

    #[test]
    fn builder_rejects_duplicates_and_gaps() {
        let mut b = CountsBuilder::new();
        b.insert(&PolarizerPair::from_degrees(0.0, 0.0), 1.0).unwrap();
        assert!(matches!(
            b.insert(&PolarizerPair::from_degrees(180.0, 0.0), 1.0),
            Err(Error::DuplicateSetting { .. })
        ));
        assert!(matches!(
            b.insert(&PolarizerPair::from_degrees(10.0, 0.0), 1.0),
            Err(Error::UnknownSetting { .. })
        ));
        assert!(matches!(b.build(), Err(Error::MissingSetting { .. })));
    }

    #[test]
    fn twelve_settings_are_distinct() {
        for i in 0..SETTING_COUNT {
            assert_eq!(setting_index(&setting(i)), Some(i));
        }
    }

    fn deg(x: f64) -> f64 {
        x.to_radians()
    }
}
