//! Multi-threaded day simulation. Measurements draw from independent
//! streams, so the result equals the sequential one bit for bit.

use eprbound_core::coincidence::{simulate_measurement, CorrelationModel, DayConfig, DayRun};
use rayon::prelude::*;

pub fn simulate_day<F: CorrelationModel + Sync>(cfg: &DayConfig<F>) -> eprbound_core::Result<DayRun> {
    let n = cfg.schedule.measurements_per(cfg.clock.period());
    let measurements = (0..n)
        .into_par_iter()
        .map(|k| simulate_measurement(cfg, k))
        .collect::<eprbound_core::Result<Vec<_>>>()?;
    Ok(DayRun {
        measurements,
        measurement_interval: cfg.schedule.measurement_interval(),
        period: cfg.clock.period(),
    })
}
