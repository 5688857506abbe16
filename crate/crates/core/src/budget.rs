//! Quadrature budget of the optical-path equalization uncertainty and the
//! fractional mismatch it implies for a given baseline.

use crate::{Error, Result};

/// Air-index dispersion near 810 nm at room conditions, per nm.
pub const DEFAULT_DN_DLAMBDA: f64 = 5.87e-9;
/// Full width of the detection bandpass, nm.
pub const DEFAULT_BANDWIDTH_NM: f64 = 40.0;
/// Source-to-polarizer distance, m.
pub const DEFAULT_ARM_LENGTH_M: f64 = 600.0;
/// Dispersion term carried in the reference budget, μm. The product
/// `dn/dλ · Δλ · d` of the default inputs gives 140.88 μm; the budget keeps
/// the published component and reports the difference alongside it.
pub const REFERENCE_DISPERSION_UM: f64 = 144.0;

/// The four uncertainty components, all in μm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetComponents {
    /// Half of the sweep excursion of the equalization stage.
    pub sweep: f64,
    /// Absorbing depth of the polarizing film.
    pub polarizer: f64,
    /// Arm-to-arm temperature difference.
    pub thermal: f64,
    /// Air dispersion across the detection band.
    pub dispersion: f64,
}

impl Default for BudgetComponents {
    fn default() -> Self {
        Self {
            sweep: 100.0,
            polarizer: 120.0,
            thermal: 30.0,
            dispersion: REFERENCE_DISPERSION_UM,
        }
    }
}

impl BudgetComponents {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in self.named() {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "budget components must be nonnegative",
                });
            }
        }
        Ok(())
    }

    pub fn named(&self) -> [(&'static str, f64); 4] {
        [
            ("sweep", self.sweep),
            ("polarizer", self.polarizer),
            ("thermal", self.thermal),
            ("dispersion", self.dispersion),
        ]
    }
}

/// Inputs of the air-dispersion term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionInput {
    /// `∂n/∂λ`, per nm.
    pub dn_dlambda: f64,
    /// Filter bandwidth, nm.
    pub delta_lambda: f64,
    /// Source-to-polarizer path, m.
    pub distance: f64,
}

impl Default for DispersionInput {
    fn default() -> Self {
        Self {
            dn_dlambda: DEFAULT_DN_DLAMBDA,
            delta_lambda: DEFAULT_BANDWIDTH_NM,
            distance: DEFAULT_ARM_LENGTH_M,
        }
    }
}

/// `∂n/∂λ · Δλ · d`, in μm.
pub fn dispersion_term(input: &DispersionInput) -> Result<f64> {
    for (name, value) in [
        ("dn_dlambda", input.dn_dlambda),
        ("delta_lambda", input.delta_lambda),
        ("distance", input.distance),
    ] {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::InvalidParameter {
                name,
                value,
                reason: "dispersion inputs must be positive",
            });
        }
    }
    Ok(input.dn_dlambda * input.delta_lambda * input.distance * 1e6)
}

/// Euclidean norm of the components, μm.
pub fn combine(components: &BudgetComponents) -> Result<f64> {
    components.validate()?;
    let [a, b, c, d] = components.named().map(|(_, v)| v);
    Ok(libm::hypot(libm::hypot(a, b), libm::hypot(c, d)))
}

/// `Δd / d_AB` with `delta_d` in μm and `d_ab` in m.
pub fn fractional_mismatch(delta_d_um: f64, d_ab_m: f64) -> Result<f64> {
    if !(delta_d_um > 0.0) || !(d_ab_m > 0.0) {
        return Err(Error::InvalidParameter {
            name: if delta_d_um > 0.0 { "d_ab" } else { "delta_d" },
            value: if delta_d_um > 0.0 { d_ab_m } else { delta_d_um },
            reason: "lengths must be positive",
        });
    }
    Ok(delta_d_um * 1e-6 / d_ab_m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dispersion_with_default_inputs() {
        let v = dispersion_term(&DispersionInput::default()).unwrap();
        assert!((v - 140.88).abs() < 1e-9, "{v}");
        let doubled = dispersion_term(&DispersionInput {
            distance: 1200.0,
            ..Default::default()
        })
        .unwrap();
        assert!((doubled - 2.0 * v).abs() < 1e-9);
        let tiny = dispersion_term(&DispersionInput {
            delta_lambda: 1e-12,
            ..Default::default()
        })
        .unwrap();
        assert!(tiny < 1e-9);
        assert!(dispersion_term(&DispersionInput {
            delta_lambda: 0.0,
            ..Default::default()
        })
        .is_err());
    }

    #[test]
    fn combine_examples() {
        // mpmath: sqrt(46036) = 214.56001491424258...
        let total = combine(&BudgetComponents::default()).unwrap();
        assert!((total - 214.560_014_914_242_58).abs() < 1e-9, "{total}");
        let only = |x| BudgetComponents {
            sweep: 0.0,
            polarizer: 0.0,
            thermal: 0.0,
            dispersion: x,
        };
        assert_eq!(combine(&only(7.5)).unwrap(), 7.5);
        let pyth = BudgetComponents {
            sweep: 3.0,
            polarizer: 4.0,
            thermal: 0.0,
            dispersion: 0.0,
        };
        assert_eq!(combine(&pyth).unwrap(), 5.0);
        assert!(combine(&only(-1.0)).is_err());
    }

    #[test]
    fn mismatch_examples() {
        let r = fractional_mismatch(215.0, 1200.0).unwrap();
        assert!((r - 1.791_666_666_666_666_7e-7).abs() < 1e-20);
        assert!((fractional_mismatch(1e6, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((fractional_mismatch(100.0, 100.0).unwrap() - 1e-6).abs() < 1e-21);
        assert!(fractional_mismatch(0.0, 1.0).is_err());
    }
}
