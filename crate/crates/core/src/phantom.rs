//! Analytic test coefficients in the reduced radial variable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::ReducedCoefficient;
use crate::grid::RadialGrid;
use crate::quadrature::adaptive;
use crate::specfun::ModeIndex;

/// A coefficient family `c_lk(rho)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhantomSpec {
    /// `A rho^{l+1} exp(-(rho - center)^2 / (2 width^2))`
    GaussMonomial {
        amplitude: f64,
        #[serde(default = "one")]
        width: f64,
        #[serde(default)]
        center: f64,
    },
    /// `A exp(1 - 1/(1 - x^2))` with `x = (rho - center)/width`, zero for `|x| >= 1`.
    BumpCompact { amplitude: f64, center: f64, width: f64 },
    /// Free-form expression; recognized in configs but not evaluated.
    Custom { expression: String },
}

fn one() -> f64 {
    1.0
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self::GaussMonomial {
            amplitude: 1.0,
            width: 1.0,
            center: 0.0,
        }
    }
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::GaussMonomial { amplitude, width, center } => {
                if !amplitude.is_finite() || !(width > 0.0) || !width.is_finite() || !center.is_finite() {
                    return Err(Error::invalid(
                        "gauss_monomial needs finite amplitude/center and positive width",
                    ));
                }
            }
            Self::BumpCompact { amplitude, center, width } => {
                if !amplitude.is_finite() || !(width > 0.0) || !(center - width >= 0.0) || !center.is_finite() {
                    return Err(Error::invalid(
                        "bump_compact needs positive width and support inside [0, inf)",
                    ));
                }
            }
            Self::Custom { ref expression } => {
                return Err(Error::invalid(format!(
                    "custom phantom expressions are not supported: {expression:?}"
                )));
            }
        }
        Ok(())
    }

    /// `c_lk(rho)` for degree `l`.
    pub fn value(&self, l: usize, rho: f64) -> Result<f64> {
        self.validate()?;
        Ok(self.value_unchecked(l, rho))
    }

    fn value_unchecked(&self, l: usize, rho: f64) -> f64 {
        match *self {
            Self::GaussMonomial { amplitude, width, center } => {
                let x = (rho - center) / width;
                amplitude * rho.powi(l as i32 + 1) * (-0.5 * x * x).exp()
            }
            Self::BumpCompact { amplitude, center, width } => {
                let x = (rho - center) / width;
                if x.abs() >= 1.0 {
                    0.0
                } else {
                    amplitude * (1.0 - 1.0 / (1.0 - x * x)).exp()
                }
            }
            Self::Custom { .. } => f64::NAN,
        }
    }

    /// `int_R^inf c^2 / int_0^inf c^2`.
    pub fn tail_fraction(&self, l: usize, radius: f64) -> Result<f64> {
        self.validate()?;
        let sq = |r: f64| self.value_unchecked(l, r).powi(2);
        let end = self.support_end(l);
        let total = adaptive(sq, 0.0, end, 64, 0.0, 1e-13);
        if radius >= end {
            return Ok(0.0);
        }
        let tail = adaptive(sq, radius, end, 64, 0.0, 1e-13);
        Ok(tail / total)
    }

    /// Radius beyond which the coefficient is below double precision.
    fn support_end(&self, l: usize) -> f64 {
        match *self {
            Self::GaussMonomial { width, center, .. } => {
                center.max(0.0) + width * (80.0 + 2.0 * (l as f64 + 1.0)).sqrt() * 2.0 + 10.0
            }
            Self::BumpCompact { center, width, .. } => center + width,
            Self::Custom { .. } => 0.0,
        }
    }
}

/// Samples a phantom on `grid` as the reduced coefficient of `mode`.
pub fn phantom_coeff(spec: &PhantomSpec, mode: ModeIndex, alpha: f64, grid: &RadialGrid) -> Result<ReducedCoefficient> {
    spec.validate()?;
    ReducedCoefficient::from_fn(mode, alpha, grid.clone(), |r| spec.value_unchecked(mode.l, r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_monomial_values() {
        let p = PhantomSpec::default();
        assert_eq!(p.value(0, 0.0).unwrap(), 0.0);
        assert!((p.value(0, 1.0).unwrap() - (-0.5f64).exp()).abs() < 1e-16);
        assert!((p.value(0, 1.0).unwrap() - 0.606531).abs() < 1e-6);
        assert!((p.value(2, 2.0).unwrap() - 8.0 * (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn discrete_norm_matches_gaussian_moment() {
        let grid = RadialGrid::composite(12.0, 16, 16).unwrap();
        let c = phantom_coeff(&PhantomSpec::default(), ModeIndex::new(3, 0, 0).unwrap(), 1.5, &grid).unwrap();
        let exact = (std::f64::consts::PI.sqrt() / 4.0).sqrt();
        assert!((c.l2_norm() - exact).abs() < 1e-12);
        assert!((exact - 0.6656677).abs() < 1e-7);
    }

    #[test]
    fn bump_has_compact_support() {
        let p = PhantomSpec::BumpCompact {
            amplitude: 2.0,
            center: 3.0,
            width: 1.5,
        };
        assert_eq!(p.value(1, 1.5).unwrap(), 0.0);
        assert_eq!(p.value(1, 4.5).unwrap(), 0.0);
        assert!((p.value(1, 3.0).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(p.tail_fraction(0, 12.0).unwrap(), 0.0);
        let bad = PhantomSpec::BumpCompact {
            amplitude: 1.0,
            center: 1.0,
            width: 2.0,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn built_in_tails_are_negligible() {
        for l in 0..=4 {
            let t = PhantomSpec::default().tail_fraction(l, 12.0).unwrap();
            assert!(t < 1e-12, "l = {l}: {t}");
        }
    }

    #[test]
    fn custom_is_unsupported() {
        let p = PhantomSpec::Custom {
            expression: "rho^2".into(),
        };
        let grid = RadialGrid::composite(1.0, 1, 4).unwrap();
        assert!(phantom_coeff(&p, ModeIndex::new(3, 0, 0).unwrap(), 1.5, &grid).is_err());
    }

    #[test]
    fn serde_shape() {
        let p: PhantomSpec = serde_json::from_str(r#"{"kind":"gauss_monomial","amplitude":2.0}"#).unwrap();
        assert_eq!(
            p,
            PhantomSpec::GaussMonomial {
                amplitude: 2.0,
                width: 1.0,
                center: 0.0
            }
        );
    }
}
