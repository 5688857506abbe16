use std::f64::consts::{FRAC_PI_2, PI};

use eprbound_core::bound::{beta_t_min, bound_curve, critical_mismatch, required_speed, BoundInput, ReducedSpeed};
use eprbound_core::geometry::MEAN_SIDEREAL_DAY as T;
use proptest::prelude::*;

/// Curves a–e: (ρ̄, δt as a fraction of T/π).
const CURVES: [(f64, f64); 5] = [(1e-3, 1e-1), (1e-5, 1e-1), (1e-6, 1e-1), (1e-6, 1e-3), (1e-6, 1e-7)];

fn template(rho_bar: f64, frac: f64) -> BoundInput {
    BoundInput {
        rho_bar,
        beta: 0.0,
        chi: FRAC_PI_2,
        delta_t: frac * T / PI,
        period: T,
    }
}

fn grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| 0.999_999 * k as f64 / (n - 1) as f64).collect()
}

#[test]
fn zero_speed_endpoint_is_inverse_mismatch() {
    for rho in [1e-3, 1e-5, 1e-6, 1.8e-7] {
        let v = beta_t_min(&template(rho, 1e-1)).unwrap();
        assert!((v * rho - 1.0).abs() < 1e-12, "{rho}: {v}");
    }
}

#[test]
fn near_luminal_values_match_high_precision() {
    // 40-digit evaluations of the bound at β = 0.999999.
    let want = [
        1.000_098_348_986_007_6,
        1.000_100_309_023_286_3,
        1.000_100_327_108_793_2,
        1.730_898_508_493_414_2,
        1_285.648_877_439_462,
    ];
    for (&(rho, frac), w) in CURVES.iter().zip(want) {
        let v = beta_t_min(&BoundInput { beta: 0.999_999, ..template(rho, frac) }).unwrap();
        assert!((v - w).abs() < 1e-3, "{rho} {frac}: {v} vs {w}");
        assert!((v / w - 1.0).abs() < 1e-9, "{rho} {frac}: {v} vs {w}");
    }
}

#[test]
fn curves_are_monotone_and_ordered() {
    let betas = grid(400);
    let curves: Vec<Vec<f64>> = CURVES
        .iter()
        .map(|&(rho, frac)| bound_curve(&betas, &template(rho, frac)).unwrap().into_iter().map(|(_, v)| v).collect())
        .collect();
    for c in &curves {
        assert!(c.windows(2).all(|w| w[1] <= w[0]));
    }
    for k in 0..betas.len() {
        // a < b < c by decreasing ρ̄; c < d < e by decreasing δt.
        assert!(curves[0][k] < curves[1][k], "a/b at {}", betas[k]);
        assert!(curves[1][k] < curves[2][k], "b/c at {}", betas[k]);
        if k > 0 {
            assert!(curves[2][k] < curves[3][k], "c/d at {}", betas[k]);
            assert!(curves[3][k] < curves[4][k], "d/e at {}", betas[k]);
        }
    }
}

proptest! {
    #[test]
    fn nonincreasing_in_beta(rho in 1e-8f64..1e-2, frac in 1e-8f64..0.5, b1 in 0.0f64..0.999, b2 in 0.0f64..0.999) {
        let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
        let t = template(rho, frac);
        let v_lo = beta_t_min(&BoundInput { beta: lo, ..t }).unwrap();
        let v_hi = beta_t_min(&BoundInput { beta: hi, ..t }).unwrap();
        prop_assert!(v_hi <= v_lo * (1.0 + 1e-14));
        prop_assert!(v_hi >= 1.0);
    }

    #[test]
    fn required_speed_is_even_in_cos_eta(rho in 0.0f64..1e-3, c in -1.0f64..1.0, beta in 1e-6f64..0.5) {
        prop_assert_eq!(required_speed(rho, c, beta), required_speed(rho, -c, beta));
    }

    #[test]
    fn critical_mismatch_is_the_gate_threshold(bt in 1.5f64..1e7, beta in 1e-6f64..0.1) {
        let rho_c = critical_mismatch(ReducedSpeed::Finite(bt), beta);
        prop_assume!(rho_c < 0.1);
        let above = required_speed(rho_c * 1.001, 0.0, beta);
        let below = required_speed(rho_c * 0.999, 0.0, beta);
        prop_assert!(ReducedSpeed::Finite(bt) >= above);
        prop_assert!(ReducedSpeed::Finite(bt) < below);
    }
}
