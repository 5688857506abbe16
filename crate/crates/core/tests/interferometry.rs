use eprbound_core::interferometry::{
    beam_deflection, fit_double_gaussian, synthesize_drift_day, sweep_step, track_drift, vpp_model,
    DoubleGaussianParams, DriftProfile, GradientModel, SweepTrace, FIT_WIDTH_MM, SWEEP_HALF_WIDTH_MM,
};
use eprbound_core::rng::stream_rng;
use proptest::prelude::*;

const SAMPLES: usize = 201;

fn truth(x_c: f64, d: f64) -> DoubleGaussianParams {
    DoubleGaussianParams {
        amp_a: 1.0,
        amp_b: 1.0,
        x_c,
        d,
        w: FIT_WIDTH_MM,
    }
}

fn noisy(p: &DoubleGaussianParams, rel: f64, seed: u64) -> SweepTrace {
    let w = sweep_step(p.x_c + 0.013);
    SweepTrace::synthetic(p, w.lo(), w.hi(), SAMPLES).unwrap().with_noise(rel, &mut stream_rng(seed, 0))
}

/// Residual of the best fit at fixed (x_c, d): the amplitudes enter
/// linearly, so they follow from the normal equations. `equal` ties them.
fn profile_residual(trace: &SweepTrace, x_c: f64, d: f64, equal: bool) -> f64 {
    let basis = |x: f64, s: f64| {
        let u = (x - x_c - s * d / 2.0) / FIT_WIDTH_MM;
        (-u * u).exp()
    };
    let (mut saa, mut sab, mut sbb, mut sya, mut syb) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&x, &y) in trace.positions().iter().zip(trace.vpp()) {
        let (ga, gb) = (basis(x, 1.0), basis(x, -1.0));
        saa += ga * ga;
        sab += ga * gb;
        sbb += gb * gb;
        sya += y * ga;
        syb += y * gb;
    }
    let det = saa * sbb - sab * sab;
    let (a, b) = if equal || det.abs() < 1e-12 * saa * sbb {
        let s = (sya + syb) / (saa + 2.0 * sab + sbb);
        (s, s)
    } else {
        ((sya * sbb - syb * sab) / det, (syb * saa - sya * sab) / det)
    };
    let p = DoubleGaussianParams { amp_a: a, amp_b: b, x_c, d, w: FIT_WIDTH_MM };
    trace
        .positions()
        .iter()
        .zip(trace.vpp())
        .map(|(&x, &y)| (y - vpp_model(x, &p)).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[test]
fn day_traces_recover_center_within_two_microns() {
    for seed in 0..200 {
        let p = truth(0.1 + 0.0007 * seed as f64, 0.066);
        let fit = fit_double_gaussian(&noisy(&p, 0.05, seed), FIT_WIDTH_MM).unwrap();
        assert!((fit.params.x_c - p.x_c).abs() <= 0.002, "seed {seed}: {:?}", fit.params);
    }
}

#[test]
fn night_traces_recover_center_within_one_micron() {
    for seed in 0..200 {
        let d = 0.006 + 0.00002 * seed as f64;
        let p = truth(-0.05 + 0.0003 * seed as f64, d);
        let fit = fit_double_gaussian(&noisy(&p, 0.05, 1000 + seed), FIT_WIDTH_MM).unwrap();
        assert!((fit.params.x_c - p.x_c).abs() <= 0.001, "seed {seed}: {:?}", fit.params);
    }
}

#[test]
fn fit_is_no_worse_than_grid_search() {
    for seed in 0..5 {
        let p = truth(0.02, 0.05);
        let trace = noisy(&p, 0.05, 50 + seed);
        let fit = fit_double_gaussian(&trace, FIT_WIDTH_MM).unwrap();
        let equal = fit.params.amp_a == fit.params.amp_b;
        let mut best = f64::INFINITY;
        for i in 0..=80 {
            for j in 0..=60 {
                let x_c = p.x_c - 0.004 + 0.0001 * i as f64;
                let d = 0.02 + 0.001 * j as f64;
                best = best.min(profile_residual(&trace, x_c, d, equal));
            }
        }
        assert!(fit.residual <= best + 1e-9, "seed {seed}: {} > {best}", fit.residual);
    }
}

#[test]
fn tracking_follows_drift_all_day() {
    for (profile, seed) in [(DriftProfile::Day, 3), (DriftProfile::Night, 4)] {
        let series = synthesize_drift_day(seed, profile);
        assert!(series.excursion() <= 0.4, "{}", series.excursion());
        let track = track_drift(&series, SAMPLES, 0.05, seed);
        let worst = track.iter().map(|p| (p.tracked - p.truth).abs()).fold(0.0, f64::max);
        assert!(worst <= 0.1, "{profile:?}: {worst}");
        assert!(track.iter().all(|p| p.window.half_width == SWEEP_HALF_WIDTH_MM));
    }
}

#[test]
fn day_profile_peaks_near_thirty_three_microns() {
    let series = synthesize_drift_day(8, DriftProfile::Day);
    let peak = series.amplitude.iter().cloned().fold(0.0, f64::max);
    assert!((peak - 0.033).abs() < 0.003, "{peak}");
    let night = synthesize_drift_day(8, DriftProfile::Night);
    assert!(night.amplitude.iter().all(|&a| a < 0.006));
}

#[test]
fn deflection_grows_with_square_of_path() {
    let short = beam_deflection(&GradientModel::from_temperature_gradient(0.9, 300.0).unwrap());
    let long = beam_deflection(&GradientModel::from_temperature_gradient(0.9, 600.0).unwrap());
    assert!((long / short - 4.0).abs() < 1e-12);
    assert!(GradientModel::new(1e-6, 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fit_is_translation_equivariant(shift in -0.3f64..0.3, d in 0.0f64..0.08, seed in 0u64..1000) {
        let trace = noisy(&truth(0.0, d), 0.03, seed);
        let a = fit_double_gaussian(&trace, FIT_WIDTH_MM).unwrap();
        let b = fit_double_gaussian(&trace.shifted(shift), FIT_WIDTH_MM).unwrap();
        prop_assert!((b.params.x_c - a.params.x_c - shift).abs() < 1e-6);
        prop_assert!((b.params.d - a.params.d).abs() < 1e-6);
    }

    #[test]
    fn center_is_midpoint_of_the_two_peaks(x_c in -0.05f64..0.05, d in 0.045f64..0.09) {
        let p = truth(x_c, d);
        let fit = fit_double_gaussian(&noisy(&p, 0.0, 0), FIT_WIDTH_MM).unwrap();
        let lo = fit.params.x_c - fit.params.d / 2.0;
        let hi = fit.params.x_c + fit.params.d / 2.0;
        prop_assert!(((lo + hi) / 2.0 - x_c).abs() < 1e-7);
        prop_assert!((hi - lo - d).abs() < 1e-7);
    }
}
