use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::{Apparatus, CorrelationModel, CountRecord, PassProbabilities};
use crate::polarization::PolarizerPair;
use crate::{Error, Result};

/// One acquisition: a setting held for `length` seconds from `start`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSpec {
    pub setting: PolarizerPair,
    pub start: f64,
    pub length: f64,
    /// Emitted pairs per second.
    pub pair_rate: f64,
}

impl WindowSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0) || !self.length.is_finite() {
            return Err(Error::InvalidParameter {
                name: "window_length",
                value: self.length,
                reason: "acquisition time must be positive",
            });
        }
        if !(self.pair_rate >= 0.0) || !self.pair_rate.is_finite() {
            return Err(Error::InvalidParameter {
                name: "pair_rate",
                value: self.pair_rate,
                reason: "pair rate must be nonnegative",
            });
        }
        if !self.start.is_finite() {
            return Err(Error::InvalidParameter {
                name: "window_start",
                value: self.start,
                reason: "window start must be finite",
            });
        }
        Ok(())
    }
}

/// Simulates one acquisition with every pair following `model`.
pub fn simulate_window<M, R>(model: &M, spec: &WindowSpec, apparatus: &Apparatus, rng: &mut R) -> Result<CountRecord>
where
    M: CorrelationModel + ?Sized,
    R: Rng + ?Sized,
{
    let p = model.probabilities(&spec.setting);
    let mut scratch = Scratch::default();
    acquire(spec, apparatus, &p, &p, |_, _| true, rng, &mut scratch).map(|(r, _)| r)
}

#[derive(Debug, Default)]
pub(crate) struct Scratch {
    a: Vec<f64>,
    b: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Tally {
    pub pairs: u64,
    pub correlated: u64,
}

/// Core acquisition loop. `gate(t, rng)` decides per pair whether it shows
/// the `correlated` statistics or the `fallback` ones.
pub(crate) fn acquire<R, G>(
    spec: &WindowSpec,
    apparatus: &Apparatus,
    correlated: &PassProbabilities,
    fallback: &PassProbabilities,
    mut gate: G,
    rng: &mut R,
    scratch: &mut Scratch,
) -> Result<(CountRecord, Tally)>
where
    R: Rng + ?Sized,
    G: FnMut(f64, &mut R) -> bool,
{
    spec.validate()?;
    apparatus.validate()?;
    correlated.validate()?;
    fallback.validate()?;

    let Scratch { a, b } = scratch;
    a.clear();
    b.clear();
    let end = spec.start + spec.length;
    let mut tally = Tally::default();

    if spec.pair_rate > 0.0 {
        let gaps = Exp::new(spec.pair_rate).map_err(|_| Error::InvalidParameter {
            name: "pair_rate",
            value: spec.pair_rate,
            reason: "pair rate must be positive",
        })?;
        let eps_a = apparatus.detector_a.efficiency;
        let eps_b = apparatus.detector_b.efficiency;
        let mut t = spec.start + gaps.sample(rng);
        while t < end {
            let ta = apparatus.transmission_a.at(t) * eps_a;
            let tb = apparatus.transmission_b.at(t) * eps_b;
            if !(0.0..=1.0).contains(&ta) {
                return Err(Error::InvalidProbability {
                    what: "transmission times efficiency at A",
                    value: ta,
                });
            }
            if !(0.0..=1.0).contains(&tb) {
                return Err(Error::InvalidProbability {
                    what: "transmission times efficiency at B",
                    value: tb,
                });
            }
            let p = if gate(t, rng) {
                tally.correlated += 1;
                correlated
            } else {
                fallback
            };
            tally.pairs += 1;
            let both = ta * tb * p.p_ab;
            let only_a = ta * p.p_a - both;
            let only_b = tb * p.p_b - both;
            let u: f64 = rng.random();
            if u < both {
                a.push(t);
                b.push(t);
            } else if u < both + only_a {
                a.push(t);
            } else if u < both + only_a + only_b {
                b.push(t);
            }
            t += gaps.sample(rng);
        }
    }

    let darks_a = add_darks(a, apparatus.detector_a.dark_rate, spec.start, end, rng);
    let darks_b = add_darks(b, apparatus.detector_b.dark_rate, spec.start, end, rng);
    if darks_a {
        a.sort_unstable_by(f64::total_cmp);
    }
    if darks_b {
        b.sort_unstable_by(f64::total_cmp);
    }

    let window = apparatus.coincidence_window();
    let n_ab = count_coincidences(a, b, 0.5 * window) as f64;
    let n_a = a.len() as f64;
    let n_b = b.len() as f64;
    let accidentals = n_a * n_b * window / spec.length;
    Ok((
        CountRecord {
            setting: spec.setting,
            window_start: spec.start,
            window_length: spec.length,
            n_a,
            n_b,
            n_ab,
            n_ab_corrected: n_ab - accidentals,
        },
        tally,
    ))
}

fn add_darks<R: Rng + ?Sized>(events: &mut Vec<f64>, rate: f64, start: f64, end: f64, rng: &mut R) -> bool {
    if !(rate > 0.0) {
        return false;
    }
    let Ok(gaps) = Exp::new(rate) else {
        return false;
    };
    let before = events.len();
    let mut t = start + gaps.sample(rng);
    while t < end {
        events.push(t);
        t += gaps.sample(rng);
    }
    events.len() > before
}

/// Number of (a, b) pairs with `|t_a − t_b| < half_window`. Both inputs
/// must be sorted.
pub(crate) fn count_coincidences(a: &[f64], b: &[f64], half_window: f64) -> u64 {
    let mut lo = 0;
    let mut count = 0;
    for &ta in a {
        while lo < b.len() && ta - b[lo] >= half_window {
            lo += 1;
        }
        let mut j = lo;
        while j < b.len() && b[j] - ta < half_window {
            count += 1;
            j += 1;
        }
    }
    count
}
