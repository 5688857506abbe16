//! Noise-free expectation counts over a generic number field.
//!
//! Instantiated with [`Exact`] the arithmetic is exact, so transmission
//! factors cancel in the normalized counts down to the last bit.

use core::ops::{Add, Div, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::normalize::{normalize_generic, Ingredients};
use super::{Apparatus, CorrelationModel, CountRecord};
use crate::polarization::{setting, CorrelationCounts, SETTING_COUNT};
use crate::{Error, Result};

/// Arbitrary precision rationals.
pub type Exact = BigRational;

/// Arithmetic needed by the expectation and normalization paths.
pub trait CountField:
    Clone + PartialOrd + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self>
{
    /// Embeds a finite float. Non-finite inputs are rejected upstream.
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn zero() -> Self {
        Self::from_f64(0.0)
    }
}

impl CountField for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl CountField for BigRational {
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).unwrap_or_else(|| BigRational::from_integer(BigInt::zero()))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Expected counts of one acquisition.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedRecord<T> {
    pub n_a: T,
    pub n_b: T,
    pub n_ab: T,
    pub n_ab_corrected: T,
    /// Singles with the dark contribution removed.
    pub signal_a: T,
    pub signal_b: T,
}

impl ExpectedRecord<f64> {
    pub fn to_record(&self, setting: crate::polarization::PolarizerPair, start: f64, length: f64) -> CountRecord {
        CountRecord {
            setting,
            window_start: start,
            window_length: length,
            n_a: self.n_a,
            n_b: self.n_b,
            n_ab: self.n_ab,
            n_ab_corrected: self.n_ab_corrected,
        }
    }
}

/// Mean counts for the 12-setting slot `index`, with the transmissions
/// evaluated at `t_mid`.
pub fn expected_record<T: CountField, M: CorrelationModel + ?Sized>(
    model: &M,
    index: usize,
    apparatus: &Apparatus,
    pair_rate: f64,
    length: f64,
    t_mid: f64,
) -> Result<ExpectedRecord<T>> {
    apparatus.validate()?;
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::InvalidParameter {
            name: "window_length",
            value: length,
            reason: "acquisition time must be positive",
        });
    }
    if !(pair_rate >= 0.0) || !pair_rate.is_finite() {
        return Err(Error::InvalidParameter {
            name: "pair_rate",
            value: pair_rate,
            reason: "pair rate must be nonnegative",
        });
    }
    let p = model.probabilities(&setting(index));
    p.validate()?;
    let f = T::from_f64;
    let len = f(length);
    let pairs = f(pair_rate) * len.clone();
    let ta = f(apparatus.transmission_a.at(t_mid)) * f(apparatus.detector_a.efficiency);
    let tb = f(apparatus.transmission_b.at(t_mid)) * f(apparatus.detector_b.efficiency);
    let signal_a = pairs.clone() * ta.clone() * f(p.p_a);
    let signal_b = pairs.clone() * tb.clone() * f(p.p_b);
    let n_a = signal_a.clone() + f(apparatus.detector_a.dark_rate) * len.clone();
    let n_b = signal_b.clone() + f(apparatus.detector_b.dark_rate) * len.clone();
    let accidentals = n_a.clone() * n_b.clone() * f(apparatus.coincidence_window()) / len;
    let n_ab = pairs * ta * tb * f(p.p_ab) + accidentals.clone();
    let n_ab_corrected = n_ab.clone() - accidentals;
    Ok(ExpectedRecord {
        n_a,
        n_b,
        n_ab,
        n_ab_corrected,
        signal_a,
        signal_b,
    })
}

/// Normalized noise-free counts for all 12 settings, computed exactly.
///
/// Each count is `N_c(i) · m_A m_B / (S_A(i) S_B(i))` where `S` are the
/// dark-subtracted singles and `m` the reference singles per arm.
pub fn noise_free_counts<M: CorrelationModel + ?Sized>(
    model: &M,
    apparatus: &Apparatus,
    pair_rate: f64,
    length: f64,
    t_mid: f64,
    reference_means: (f64, f64),
) -> Result<CorrelationCounts> {
    let mut items: [Option<Ingredients<Exact>>; SETTING_COUNT] = Default::default();
    for (i, slot) in items.iter_mut().enumerate() {
        let r: ExpectedRecord<Exact> = expected_record(model, i, apparatus, pair_rate, length, t_mid)?;
        *slot = Some(Ingredients {
            signal_a: r.signal_a,
            signal_b: r.signal_b,
            coincidences: r.n_ab_corrected,
        });
    }
    let items = items.map(|x| x.expect("filled above"));
    let means = (Exact::from_f64(reference_means.0), Exact::from_f64(reference_means.1));
    let out = normalize_generic(&items, &means)?;
    CorrelationCounts::from_array(out.map(|x| CountField::to_f64(&x)))
}
