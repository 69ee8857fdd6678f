//! Inversion of per-mode boundary data: the right-hand side `g`, the
//! regularized spectral solve, the Fourier-coefficient bookkeeping, and the
//! Hankel-type transforms between reduced coefficients and radial profiles.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{ModeSeries, ReducedCoefficient};
use crate::grid::RadialGrid;
use crate::kernel::KernelSpec;
use crate::spectral::{regularized_inverse_apply, GramDecomposition, Regularization};
use crate::specfun::{bessel_j_unchecked, ModeIndex};

/// `g(s_i) = sum_j w_j K(t_j, s_i) u(t_j)` over the series' time grid.
pub fn data_to_g(spec: &KernelSpec, series: &ModeSeries, sgrid: &RadialGrid) -> Result<Vec<f64>> {
    if series.values.len() != series.grid.len() {
        return Err(Error::LengthMismatch {
            context: "series values",
            expected: series.grid.len(),
            found: series.values.len(),
        });
    }
    sgrid.check_avoids(spec.model.branch_point())?;
    let weighted: Vec<(f64, f64)> = series
        .grid
        .nodes()
        .iter()
        .zip(series.grid.weights())
        .zip(&series.values)
        .filter(|(_, &u)| u != 0.0)
        .map(|((&t, &w), &u)| (t, w * u))
        .collect();
    let g = sgrid
        .nodes()
        .par_iter()
        .map(|&s| {
            let roots = spec.model.roots_unchecked(s);
            let sum: f64 = weighted.iter().map(|&(t, wu)| wu * roots.multiplier(t)).sum();
            sum * spec.radial_factor(s)
        })
        .collect();
    Ok(g)
}

/// Outcome of one mode's inversion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub mode: ModeIndex,
    pub recovered: ReducedCoefficient,
    pub reference: Option<ReducedCoefficient>,
    pub rel_l2_error: Option<f64>,
    pub spectrum_used: usize,
    pub regularization: Regularization,
}

impl ReconstructionReport {
    /// Attaches a reference coefficient on the same grid and records the
    /// relative weighted `L^2` error against it.
    pub fn with_reference(mut self, reference: ReducedCoefficient) -> Result<Self> {
        if reference.grid != self.recovered.grid {
            return Err(Error::invalid("reference coefficient lives on a different grid"));
        }
        let err = rel_l2_error(&self.recovered.values, &reference.values, reference.grid.weights())?;
        self.rel_l2_error = Some(err);
        self.reference = Some(reference);
        Ok(self)
    }
}

fn check_compatible(spec: &KernelSpec, dec: &GramDecomposition) -> Result<()> {
    let d = &dec.spec;
    if d.model != spec.model || d.alpha != spec.alpha || d.mode.n != spec.mode.n || d.mode.l != spec.mode.l {
        return Err(Error::SpecMismatch(format!(
            "decomposition built for {:?}, alpha {}, n {}, l {}; requested {:?}, alpha {}, n {}, l {}",
            d.model, d.alpha, d.mode.n, d.mode.l, spec.model, spec.alpha, spec.mode.n, spec.mode.l
        )));
    }
    Ok(())
}

/// Recovers `c_lk` from `u_lk`. The decomposition may come from any `k` of
/// the same degree, since the kernel does not depend on `k`.
pub fn reconstruct_mode(
    spec: &KernelSpec,
    series: &ModeSeries,
    dec: &GramDecomposition,
    reg: &Regularization,
) -> Result<ReconstructionReport> {
    check_compatible(spec, dec)?;
    if series.mode != spec.mode {
        return Err(Error::SpecMismatch(format!(
            "series is for mode {}, kernel for {}",
            series.mode, spec.mode
        )));
    }
    let g = data_to_g(spec, series, &dec.grid)?;
    let values = regularized_inverse_apply(dec, &g, reg)?;
    Ok(ReconstructionReport {
        mode: spec.mode,
        recovered: ReducedCoefficient::new(spec.mode, spec.alpha, dec.grid.clone(), values)?,
        reference: None,
        rel_l2_error: None,
        spectrum_used: dec.terms_used(reg),
        regularization: *reg,
    })
}

/// Whether `f_lk` is real or purely imaginary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Real,
    Imaginary,
}

/// `f_lk(rho) = (2 pi)^{-n/2} i^l rho^{alpha - n/2} c_lk(rho)`, stored as
/// real `values` times `1` or `i` according to `part`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierCoefficient {
    pub mode: ModeIndex,
    pub part: Part,
    pub values: Vec<f64>,
}

pub fn fourier_coefficient(coeff: &ReducedCoefficient) -> FourierCoefficient {
    let n = coeff.mode.n as f64;
    let l = coeff.mode.l;
    let part = if l % 2 == 0 { Part::Real } else { Part::Imaginary };
    // i^l = +-1 or +-i
    let sign = if l % 4 < 2 { 1.0 } else { -1.0 };
    let scale = sign * (2.0 * PI).powf(-0.5 * n);
    let values = coeff
        .grid
        .nodes()
        .iter()
        .zip(&coeff.values)
        .map(|(&rho, &c)| scale * rho.powf(coeff.alpha - 0.5 * n) * c)
        .collect();
    FourierCoefficient {
        mode: coeff.mode,
        part,
        values,
    }
}

/// `f_lk(r) = r^{-(n-2)/2} int c(rho) rho^alpha J_nu(r rho) d rho`, with the
/// integral taken by the coefficient's own grid quadrature.
pub fn hankel_synthesize(coeff: &ReducedCoefficient, radii: &[f64]) -> Result<Vec<f64>> {
    if let Some(r) = radii.iter().find(|&&r| !(r > 0.0) || !r.is_finite()) {
        return Err(Error::invalid(format!("radii must be positive and finite, got {r}")));
    }
    let order = coeff.mode.bessel_order();
    let shift = 0.5 * (coeff.mode.n as f64 - 2.0);
    let terms: Vec<(f64, f64)> = coeff
        .grid
        .nodes()
        .iter()
        .zip(coeff.grid.weights())
        .zip(&coeff.values)
        .map(|((&rho, &w), &c)| (rho, w * c * rho.powf(coeff.alpha)))
        .collect();
    Ok(radii
        .par_iter()
        .map(|&r| {
            let s: f64 = terms
                .iter()
                .map(|&(rho, a)| a * bessel_j_unchecked(order, r * rho))
                .sum();
            r.powf(-shift) * s
        })
        .collect())
}

/// Inverse of [`hankel_synthesize`]:
/// `c(rho) = rho^{1-alpha} int f(r) r^{n/2} J_nu(r rho) dr`, with `profile`
/// sampled on the quadrature grid `rgrid` and `c` sampled on `target`.
pub fn hankel_analyze(
    mode: ModeIndex,
    alpha: f64,
    rgrid: &RadialGrid,
    profile: &[f64],
    target: &RadialGrid,
) -> Result<ReducedCoefficient> {
    if profile.len() != rgrid.len() {
        return Err(Error::LengthMismatch {
            context: "radial profile",
            expected: rgrid.len(),
            found: profile.len(),
        });
    }
    let order = mode.bessel_order();
    let half_n = 0.5 * mode.n as f64;
    let terms: Vec<(f64, f64)> = rgrid
        .nodes()
        .iter()
        .zip(rgrid.weights())
        .zip(profile)
        .map(|((&r, &w), &f)| (r, w * f * r.powf(half_n)))
        .collect();
    let values = target
        .nodes()
        .par_iter()
        .map(|&rho| {
            let s: f64 = terms
                .iter()
                .map(|&(r, a)| a * bessel_j_unchecked(order, r * rho))
                .sum();
            rho.powf(1.0 - alpha) * s
        })
        .collect();
    ReducedCoefficient::new(mode, alpha, target.clone(), values)
}

/// `sqrt(sum w (a-b)^2) / sqrt(sum w b^2)`
pub fn rel_l2_error(a: &[f64], b: &[f64], weights: &[f64]) -> Result<f64> {
    if a.len() != b.len() || b.len() != weights.len() {
        return Err(Error::LengthMismatch {
            context: "relative error operands",
            expected: weights.len(),
            found: if a.len() != weights.len() { a.len() } else { b.len() },
        });
    }
    let (mut num, mut den) = (0.0, 0.0);
    for ((x, y), w) in a.iter().zip(b).zip(weights) {
        num += w * (x - y) * (x - y);
        den += w * y * y;
    }
    if den == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok((num / den).sqrt())
}
