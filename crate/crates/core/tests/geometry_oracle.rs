use std::f64::consts::{FRAC_PI_2, PI, TAU};

use eprbound_core::deg;
use eprbound_core::geometry::{
    baseline_declination, cos_eta, crossing_times, excluded_sky_fraction, extremum_time, BaselineGeometry, Crossings,
    DeclinationMode, PreferredFrame, SiderealClock,
};
use proptest::prelude::*;

type V3 = [f64; 3];

fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn rotate_z(v: V3, angle: f64) -> V3 {
    let (s, c) = angle.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]]
}

/// Baseline unit vector in the celestial frame: built from the local East
/// and North axes at the site, then carried around the polar axis.
fn baseline_vector(gamma: f64, latitude: f64, t: f64, period: f64) -> V3 {
    let east = [0.0, 1.0, 0.0];
    let north = [-latitude.sin(), 0.0, latitude.cos()];
    let local = [
        gamma.cos() * east[0] + gamma.sin() * north[0],
        gamma.cos() * east[1] + gamma.sin() * north[1],
        gamma.cos() * east[2] + gamma.sin() * north[2],
    ];
    rotate_z(local, TAU * t / period)
}

fn frame_vector(chi: f64, phase0: f64) -> V3 {
    let az = FRAC_PI_2 - phase0;
    [chi.sin() * az.cos(), chi.sin() * az.sin(), chi.cos()]
}

/// cos η as a dot product. The baseline's hour angle at `t = 0` differs
/// from the closed form's reference, so only the harmonic content is
/// compared.
fn oracle(chi: f64, phase0: f64, gamma: f64, latitude: f64, t: f64, period: f64) -> f64 {
    let b = baseline_vector(gamma, latitude, t, period);
    let v = frame_vector(chi, phase0);
    dot(b, v)
}

fn oracle_crossings(f: impl Fn(f64) -> f64, period: f64) -> Vec<f64> {
    let n = 200_000;
    let h = period / n as f64;
    let mut out = Vec::new();
    for k in 0..n {
        let (mut lo, mut hi) = (k as f64 * h, (k + 1) as f64 * h);
        let (flo, fhi) = (f(lo), f(hi));
        if flo == 0.0 {
            out.push(lo);
            continue;
        }
        if flo * fhi >= 0.0 {
            continue;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if f(mid) * flo > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push(0.5 * (lo + hi));
    }
    out
}

#[test]
fn default_site_declination() {
    let g = BaselineGeometry::new(deg(18.0), deg(43.6), 1200.0).unwrap();
    let d = baseline_declination(&g).to_degrees();
    assert!((d - 12.931).abs() < 1e-3, "{d}");
    let tilt = g.with_mode(DeclinationMode::GalleryTilt);
    assert!((baseline_declination(&tilt) - deg(18.0)).abs() < 1e-15);
}

#[test]
fn excluded_fraction_at_eighteen_degrees() {
    let f = excluded_sky_fraction(deg(18.0)).unwrap();
    assert!((f - 0.048_943).abs() < 1e-6, "{f}");
    assert!(excluded_sky_fraction(deg(91.0)).is_err());
    assert_eq!(excluded_sky_fraction(0.0).unwrap(), 0.0);
}

#[test]
fn excluded_fraction_matches_monte_carlo_area() {
    // Uniform points on the sphere: cos θ uniform on [-1, 1].
    let n = 2_000_000;
    let angle = deg(18.0);
    let hits = (0..n)
        .filter(|&k| {
            let u = -1.0 + 2.0 * (k as f64 + 0.5) / n as f64;
            let theta = u.acos();
            theta < angle || theta > PI - angle
        })
        .count();
    let mc = hits as f64 / n as f64;
    assert!((mc - excluded_sky_fraction(angle).unwrap()).abs() < 1e-5);
}

#[test]
fn crossings_agree_with_bisection() {
    let clock = SiderealClock::default();
    let pf = PreferredFrame::new(1e-3, FRAC_PI_2, 0.0).unwrap();
    let g = BaselineGeometry::new(deg(18.0), deg(43.6), 1200.0).unwrap();
    let f = |t| cos_eta(t, &pf, &g, &clock);
    let roots = oracle_crossings(f, clock.period());
    let Crossings::Two(t1, t2) = crossing_times(&pf, &g, &clock) else {
        panic!("expected two crossings");
    };
    assert_eq!(roots.len(), 2);
    assert!((roots[0] - t1).abs() < 1e-6 && (roots[1] - t2).abs() < 1e-6, "{roots:?} vs {t1} {t2}");
    assert!((t1 - 21_541.0).abs() < 1.0 && (t2 - 64_623.0).abs() < 1.0, "{t1} {t2}");
}

#[test]
fn polar_frame_over_equatorial_baseline_is_always_orthogonal() {
    let pf = PreferredFrame::new(1e-3, 0.0, 0.0).unwrap();
    let g = BaselineGeometry::east_west(1200.0).unwrap();
    assert_eq!(crossing_times(&pf, &g, &SiderealClock::default()), Crossings::Always);
}

#[test]
fn frame_near_pole_never_crosses() {
    let pf = PreferredFrame::new(1e-3, deg(5.0), 0.0).unwrap();
    let g = BaselineGeometry::new(deg(18.0), deg(43.6), 1200.0).unwrap();
    assert_eq!(crossing_times(&pf, &g, &SiderealClock::default()), Crossings::None);
}

/// Mean and first-harmonic amplitude of a period-`T` signal by DFT. Exact
/// for `a + b cos(ωt + φ)` sampled at `n ≥ 3` points.
fn harmonics(f: impl Fn(f64) -> f64, period: f64) -> (f64, f64) {
    let n = 64;
    let (mut mean, mut re, mut im) = (0.0, 0.0, 0.0);
    for k in 0..n {
        let t = period * k as f64 / n as f64;
        let x = f(t);
        let w = TAU * k as f64 / n as f64;
        mean += x;
        re += x * w.cos();
        im += x * w.sin();
    }
    let n = n as f64;
    (mean / n, 2.0 * (re * re + im * im).sqrt() / n)
}

proptest! {
    #[test]
    fn closed_form_matches_vector_oracle(
        chi in 0.0f64..PI,
        phase0 in -PI..PI,
        gamma in 0.0f64..FRAC_PI_2,
        latitude in -1.5f64..1.5,
    ) {
        let clock = SiderealClock::default();
        let period = clock.period();
        let pf = PreferredFrame::new(1e-3, chi, phase0).unwrap();
        let g = BaselineGeometry::new(gamma, latitude, 1.0).unwrap();
        let (a_or, b_or) = harmonics(|t| oracle(chi, phase0, gamma, latitude, t, period), period);
        let (a, b) = harmonics(|t| cos_eta(t, &pf, &g, &clock), period);
        prop_assert!((a - a_or).abs() < 1e-12, "constant {a} vs {a_or}");
        prop_assert!((b - b_or).abs() < 1e-12, "amplitude {b} vs {b_or}");
    }

    #[test]
    fn crossings_are_roots(chi in 0.2f64..2.9, phase0 in -PI..PI, gamma in 0.0f64..0.6) {
        let clock = SiderealClock::default();
        let pf = PreferredFrame::new(1e-3, chi, phase0).unwrap();
        let g = BaselineGeometry::new(gamma, deg(43.6), 1.0).unwrap();
        for t in crossing_times(&pf, &g, &clock).times() {
            prop_assert!((0.0..clock.period()).contains(&t));
            prop_assert!(cos_eta(t, &pf, &g, &clock).abs() < 1e-9);
        }
        let tm = extremum_time(&pf, &clock);
        let peak = cos_eta(tm, &pf, &g, &clock);
        prop_assert!(peak >= cos_eta(tm + 500.0, &pf, &g, &clock));
        prop_assert!(peak >= cos_eta(tm - 500.0, &pf, &g, &clock));
    }
}
