#![allow(dead_code)]

use eprbound_core::coincidence::{
    estimate_s, simulate_window, Apparatus, CorrelationModel, CountRecord, Normalization, SEstimate, WindowSpec,
};
use eprbound_core::polarization::{setting, SETTING_COUNT};
use eprbound_core::rng::{stream_rng, window_stream};

pub const QM_SMAX: f64 = (std::f64::consts::SQRT_2 - 1.0) / 2.0;
pub const QM_SMIN: f64 = -(std::f64::consts::SQRT_2 + 1.0) / 2.0;

/// Twelve back-to-back acquisitions of `length` seconds, one per setting.
pub fn measure<M: CorrelationModel>(
    model: &M,
    app: &Apparatus,
    pair_rate: f64,
    length: f64,
    seed: u64,
    index: u64,
) -> ([CountRecord; SETTING_COUNT], SEstimate) {
    let records = std::array::from_fn(|slot| {
        let spec = WindowSpec {
            setting: setting(slot),
            start: slot as f64 * length,
            length,
            pair_rate,
        };
        let mut rng = stream_rng(seed, window_stream(index, slot as u64));
        simulate_window(model, &spec, app, &mut rng).unwrap()
    });
    let norm = Normalization::from_records(&records, (app.detector_a.dark_rate, app.detector_b.dark_rate)).unwrap();
    let est = estimate_s(&records, &norm, app.coincidence_window()).unwrap();
    (records, est)
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}
