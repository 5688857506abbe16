use super::exact::CountField;
use super::CountRecord;
use crate::polarization::{estimator_gradients, setting, setting_index, CorrelationCounts, SETTING_COUNT};
use crate::{Error, Result};

/// Inputs of the singles normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    /// Reference singles per arm, counts per acquisition.
    pub reference_means: (f64, f64),
    /// Dark plus background rates removed from the singles, per second.
    pub background_rates: (f64, f64),
}

impl Normalization {
    /// Reference means taken as the mean background-subtracted singles of
    /// `records`.
    pub fn from_records(records: &[CountRecord], background_rates: (f64, f64)) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::InvalidParameter {
                name: "records",
                value: 0.0,
                reason: "no records to average",
            });
        }
        let n = records.len() as f64;
        let (mut a, mut b) = (0.0, 0.0);
        for r in records {
            a += r.n_a - background_rates.0 * r.window_length;
            b += r.n_b - background_rates.1 * r.window_length;
        }
        Ok(Self {
            reference_means: (a / n, b / n),
            background_rates,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Ingredients<T> {
    pub signal_a: T,
    pub signal_b: T,
    pub coincidences: T,
}

pub(crate) fn normalize_generic<T: CountField>(
    items: &[Ingredients<T>; SETTING_COUNT],
    means: &(T, T),
) -> Result<[T; SETTING_COUNT]> {
    let zero = T::zero();
    let scale = means.0.clone() * means.1.clone();
    let mut out: [T; SETTING_COUNT] = core::array::from_fn(|_| zero.clone());
    for (i, item) in items.iter().enumerate() {
        if !(item.signal_a > zero) || !(item.signal_b > zero) {
            let (alpha_a_deg, alpha_b_deg) = setting(i).degrees();
            return Err(Error::DegenerateWindow {
                alpha_a_deg,
                alpha_b_deg,
            });
        }
        out[i] = item.coincidences.clone() * scale.clone() / (item.signal_a.clone() * item.signal_b.clone());
    }
    Ok(out)
}

/// Places one record per setting in the canonical order.
pub(crate) fn order_records(records: &[CountRecord]) -> Result<[CountRecord; SETTING_COUNT]> {
    let mut slots: [Option<CountRecord>; SETTING_COUNT] = [None; SETTING_COUNT];
    for r in records {
        let (alpha_a_deg, alpha_b_deg) = r.setting.degrees();
        let i = setting_index(&r.setting).ok_or(Error::UnknownSetting {
            alpha_a_deg,
            alpha_b_deg,
        })?;
        if slots[i].is_some() {
            return Err(Error::DuplicateSetting {
                alpha_a_deg,
                alpha_b_deg,
            });
        }
        slots[i] = Some(*r);
    }
    let mut out = [placeholder(); SETTING_COUNT];
    for (i, slot) in slots.iter().enumerate() {
        let (alpha_a_deg, alpha_b_deg) = setting(i).degrees();
        out[i] = slot.ok_or(Error::MissingSetting {
            alpha_a_deg,
            alpha_b_deg,
        })?;
    }
    Ok(out)
}

fn placeholder() -> CountRecord {
    CountRecord {
        setting: setting(0),
        window_start: 0.0,
        window_length: 1.0,
        n_a: 0.0,
        n_b: 0.0,
        n_ab: 0.0,
        n_ab_corrected: 0.0,
    }
}

fn ingredients(r: &CountRecord, norm: &Normalization) -> Ingredients<f64> {
    Ingredients {
        signal_a: r.n_a - norm.background_rates.0 * r.window_length,
        signal_b: r.n_b - norm.background_rates.1 * r.window_length,
        coincidences: r.n_ab_corrected,
    }
}

/// Corrects every accidental-subtracted coincidence count for the singles
/// of its own acquisition: `N_c · m_A m_B / (S_A S_B)`.
pub fn normalize(records: &[CountRecord], norm: &Normalization) -> Result<CorrelationCounts> {
    let ordered = order_records(records)?;
    let items = ordered.map(|r| ingredients(&r, norm));
    let out = normalize_generic(&items, &norm.reference_means)?;
    CorrelationCounts::from_array(out)
}

/// Point estimates and first-order standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SEstimate {
    pub s_max: f64,
    pub s_min: f64,
    pub sigma_smax: f64,
    pub sigma_smin: f64,
}

/// Estimates `S_max`, `S_min` from normalized counts and propagates Poisson
/// errors. Each acquisition contributes three independent Poisson counts:
/// coincidences, A-only and B-only detections.
pub fn estimate_s(records: &[CountRecord], norm: &Normalization, coincidence_window: f64) -> Result<SEstimate> {
    let ordered = order_records(records)?;
    let counts = normalize(&ordered, norm)?;
    let s_max = counts.s_max()?;
    let s_min = counts.s_min()?;

    let scale = norm.reference_means.0 * norm.reference_means.1;
    let mut variance = [0.0; SETTING_COUNT];
    for (i, r) in ordered.iter().enumerate() {
        let it = ingredients(r, norm);
        let c = counts.as_array()[i];
        let k = scale / (it.signal_a * it.signal_b);
        let rate = coincidence_window / r.window_length;
        let d_ab = k;
        let d_a = -k * r.n_b * rate - c / it.signal_a;
        let d_b = -k * r.n_a * rate - c / it.signal_b;
        let x11 = r.n_ab.max(0.0);
        let x10 = (r.n_a - r.n_ab).max(0.0);
        let x01 = (r.n_b - r.n_ab).max(0.0);
        let g11 = d_ab + d_a + d_b;
        variance[i] = x11 * g11 * g11 + x10 * d_a * d_a + x01 * d_b * d_b;
    }
    let (g_max, g_min) = estimator_gradients(counts.as_array());
    let propagate = |g: &[f64; SETTING_COUNT]| {
        libm::sqrt(g.iter().zip(&variance).map(|(g, v)| g * g * v).sum::<f64>())
    };
    Ok(SEstimate {
        s_max,
        s_min,
        sigma_smax: propagate(&g_max),
        sigma_smin: propagate(&g_min),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coincidence::{expected_record, Apparatus, QuantumCorrelations};
    use crate::polarization::settings;

    // Pulses short enough that accidentals are negligible.
    fn expected_records(total_rate: f64) -> [CountRecord; SETTING_COUNT] {
        let m = QuantumCorrelations::default();
        let mut app = Apparatus::default();
        app.detector_a.pulse_width = 1e-15;
        app.detector_b.pulse_width = 1e-15;
        core::array::from_fn(|i| {
            let e = expected_record::<f64, _>(&m, i, &app, total_rate, 1.0, 0.5).unwrap();
            e.to_record(setting(i), 0.0, 1.0)
        })
    }

    #[test]
    fn ideal_expectations_give_quantum_values() {
        let recs = expected_records(15_000.0);
        let norm = Normalization::from_records(&recs, (0.0, 0.0)).unwrap();
        let c = normalize(&recs, &norm).unwrap();
        assert!((c.s_max().unwrap() - (core::f64::consts::SQRT_2 - 1.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn sigma_scales_as_inverse_sqrt_total() {
        let e1 = {
            let r = expected_records(1e4);
            estimate_s(&r, &Normalization::from_records(&r, (0.0, 0.0)).unwrap(), 1e-15).unwrap()
        };
        let e4 = {
            let r = expected_records(4e4);
            estimate_s(&r, &Normalization::from_records(&r, (0.0, 0.0)).unwrap(), 1e-15).unwrap()
        };
        assert!((e1.sigma_smax / e4.sigma_smax - 2.0).abs() < 1e-6);
        assert!((e1.sigma_smin / e4.sigma_smin - 2.0).abs() < 1e-6);
    }

    #[test]
    fn uniform_quarter_counts() {
        let recs: [CountRecord; SETTING_COUNT] = core::array::from_fn(|i| CountRecord {
            setting: setting(i),
            window_start: 0.0,
            window_length: 1.0,
            n_a: 5000.0,
            n_b: 5000.0,
            n_ab: 2500.0,
            n_ab_corrected: 2500.0,
        });
        let e = estimate_s(&recs, &Normalization::from_records(&recs, (0.0, 0.0)).unwrap(), 0.0).unwrap();
        assert!((e.s_max + 0.5).abs() < 1e-12 && (e.s_min + 0.5).abs() < 1e-12);
    }

    #[test]
    fn ordering_errors() {
        let recs = expected_records(1e4);
        assert!(matches!(
            normalize(&recs[..11], &Normalization::from_records(&recs, (0.0, 0.0)).unwrap()),
            Err(Error::MissingSetting { .. })
        ));
        let mut dup = recs;
        dup[3].setting = settings()[2];
        assert!(matches!(order_records(&dup), Err(Error::DuplicateSetting { .. })));
        let mut zero = recs;
        zero[5].n_a = 0.0;
        assert!(matches!(
            normalize(&zero, &Normalization::from_records(&recs, (0.0, 0.0)).unwrap()),
            Err(Error::DegenerateWindow { .. })
        ));
    }
}
