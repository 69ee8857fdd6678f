//! Forward map from reduced radial coefficients to per-mode boundary data,
//! synthesis and analysis of fields on the detector sphere, and additive noise.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{RadialGrid, TimeGrid};
use crate::kernel::KernelSpec;
use crate::model::DampingModel;
use crate::quadrature::gauss_legendre;
use crate::specfun::{harmonic_dim, sph_harmonic, ModeIndex};

/// The real radial unknown `c_lk(rho) = (2 pi)^{n/2} i^{-l} f_lk(rho) rho^{n/2 - alpha}`
/// sampled on a radial grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedCoefficient {
    pub mode: ModeIndex,
    pub alpha: f64,
    pub grid: RadialGrid,
    pub values: Vec<f64>,
}

impl ReducedCoefficient {
    pub fn new(mode: ModeIndex, alpha: f64, grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                context: "coefficient values",
                expected: grid.len(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("coefficient values"));
        }
        Ok(Self {
            mode,
            alpha,
            grid,
            values,
        })
    }

    pub fn zeros(mode: ModeIndex, alpha: f64, grid: RadialGrid) -> Self {
        let values = vec![0.0; grid.len()];
        Self {
            mode,
            alpha,
            grid,
            values,
        }
    }

    pub fn from_fn(mode: ModeIndex, alpha: f64, grid: RadialGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(mode, alpha, grid, values)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }

    /// Quadrature `L^2` norm on the grid.
    pub fn l2_norm(&self) -> f64 {
        self.values
            .iter()
            .zip(self.grid.weights())
            .map(|(v, w)| w * v * v)
            .sum::<f64>()
            .sqrt()
    }
}

/// Per-mode boundary data `u_lk(t)` on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSeries {
    pub mode: ModeIndex,
    pub grid: TimeGrid,
    pub values: Vec<f64>,
}

impl ModeSeries {
    pub fn new(mode: ModeIndex, grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                context: "series values",
                expected: grid.len(),
                found: values.len(),
            });
        }
        Ok(Self { mode, grid, values })
    }

    pub fn zeros(mode: ModeIndex, grid: TimeGrid) -> Self {
        let values = vec![0.0; grid.len()];
        Self { mode, grid, values }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }

    pub fn rms(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64).sqrt()
    }
}

/// `u_lk(t_i) = sum_j w_j K(t_i, rho_j) c(rho_j)`.
pub fn forward_mode(model: DampingModel, coeff: &ReducedCoefficient, tgrid: &TimeGrid) -> Result<ModeSeries> {
    let spec = KernelSpec::new(model, coeff.mode, coeff.alpha)?;
    coeff.grid.check_avoids(model.branch_point())?;
    if !spec.in_window() {
        let (lo, hi) = spec.admissible_window();
        log::warn!(
            "alpha = {} is outside the admissible window ({lo}, {hi}) for mode {}",
            spec.alpha,
            coeff.mode
        );
    }
    let terms: Vec<_> = coeff
        .grid
        .nodes()
        .iter()
        .zip(coeff.grid.weights())
        .zip(&coeff.values)
        .filter(|(_, &c)| c != 0.0)
        .map(|((&rho, &w), &c)| (model.roots_unchecked(rho), w * c * spec.radial_factor(rho)))
        .collect();
    let values = tgrid
        .nodes()
        .par_iter()
        .map(|&t| terms.iter().map(|(roots, a)| a * roots.multiplier(t)).sum())
        .collect();
    ModeSeries::new(coeff.mode, tgrid.clone(), values)
}

/// Detector layout with quadrature weights for integrals over `S^{n-1}`.
///
/// `n = 2`: `N` equiangular points. `n = 3`: Gauss-Legendre nodes in
/// `cos(theta)` times equiangular azimuths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereQuadrature {
    pub n: usize,
    pub directions: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Highest degree `l` whose products are integrated exactly.
    pub max_degree: usize,
}

impl SphereQuadrature {
    /// Smallest layout that resolves degree `l_max`.
    pub fn for_degree(n: usize, l_max: usize) -> Result<Self> {
        match n {
            2 => Self::circle(2 * l_max + 1),
            3 => Self::sphere(l_max + 1, 2 * l_max + 1),
            _ => Err(Error::UnsupportedDimension(n)),
        }
    }

    pub fn circle(points: usize) -> Result<Self> {
        if points == 0 {
            return Err(Error::invalid("circle layout needs at least one detector"));
        }
        let w = 2.0 * PI / points as f64;
        let directions = (0..points)
            .map(|i| {
                let th = w * i as f64;
                vec![th.cos(), th.sin()]
            })
            .collect();
        Ok(Self {
            n: 2,
            directions,
            weights: vec![w; points],
            max_degree: (points - 1) / 2,
        })
    }

    pub fn sphere(polar: usize, azimuthal: usize) -> Result<Self> {
        if polar == 0 || azimuthal == 0 {
            return Err(Error::invalid("sphere layout needs at least one detector per axis"));
        }
        let (x, wx) = gauss_legendre(polar);
        let dphi = 2.0 * PI / azimuthal as f64;
        let mut directions = Vec::with_capacity(polar * azimuthal);
        let mut weights = Vec::with_capacity(polar * azimuthal);
        for (&c, &wc) in x.iter().zip(&wx) {
            let s = (1.0 - c * c).max(0.0).sqrt();
            for j in 0..azimuthal {
                let phi = dphi * j as f64;
                directions.push(vec![s * phi.cos(), s * phi.sin(), c]);
                weights.push(wc * dphi);
            }
        }
        Ok(Self {
            n: 3,
            directions,
            weights,
            max_degree: (polar - 1).min((azimuthal - 1) / 2),
        })
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    fn check_degree(&self, l_max: usize) -> Result<()> {
        if l_max > self.max_degree {
            let needed = Self::for_degree(self.n, l_max)?.len();
            return Err(Error::TooFewDetectors {
                l_max,
                needed,
                available: self.len(),
            });
        }
        Ok(())
    }
}

/// `u(theta_i, t_j) = sum_{l,k} u_lk(t_j) Y_lk(theta_i)`; rows are
/// directions, columns times. An empty mode list gives a zero-column field.
pub fn synthesize_sphere(modes: &[ModeSeries], directions: &[Vec<f64>], n: usize) -> Result<DMatrix<f64>> {
    if n != 2 && n != 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    let Some(first) = modes.first() else {
        return Ok(DMatrix::zeros(directions.len(), 0));
    };
    for m in modes {
        if m.mode.n != n {
            return Err(Error::invalid(format!(
                "mode {} does not live on S^{}",
                m.mode,
                n - 1
            )));
        }
        if m.grid != first.grid {
            return Err(Error::invalid("all modes must share one time grid"));
        }
    }
    let cols = first.values.len();
    let mut harmonics = DMatrix::zeros(directions.len(), modes.len());
    for (i, d) in directions.iter().enumerate() {
        for (k, m) in modes.iter().enumerate() {
            harmonics[(i, k)] = sph_harmonic(m.mode, d)?;
        }
    }
    let coeffs = DMatrix::from_fn(modes.len(), cols, |k, j| modes[k].values[j]);
    Ok(harmonics * coeffs)
}

/// `u_lk(t_j) = sum_i q_i u(theta_i, t_j) Y_lk(theta_i)` for every mode of
/// degree `l <= l_max`, in `(l, k)` order.
pub fn analyze_sphere(
    samples: &DMatrix<f64>,
    quad: &SphereQuadrature,
    l_max: usize,
    tgrid: &TimeGrid,
) -> Result<Vec<ModeSeries>> {
    quad.check_degree(l_max)?;
    if samples.nrows() != quad.len() {
        return Err(Error::LengthMismatch {
            context: "sample rows (detectors)",
            expected: quad.len(),
            found: samples.nrows(),
        });
    }
    if samples.ncols() != tgrid.len() {
        return Err(Error::LengthMismatch {
            context: "sample columns (times)",
            expected: tgrid.len(),
            found: samples.ncols(),
        });
    }
    let modes = ModeIndex::all_up_to(quad.n, l_max)?;
    modes
        .par_iter()
        .map(|&mode| {
            let mut values = vec![0.0; tgrid.len()];
            for (i, (d, q)) in quad.directions.iter().zip(&quad.weights).enumerate() {
                let y = q * sph_harmonic(mode, d)?;
                for (v, s) in values.iter_mut().zip(samples.row(i).iter()) {
                    *v += y * s;
                }
            }
            ModeSeries::new(mode, tgrid.clone(), values)
        })
        .collect()
}

/// Adds i.i.d. `N(0, sigma^2)` noise; deterministic for a fixed seed.
pub fn add_noise(series: &ModeSeries, sigma: f64, seed: u64) -> Result<ModeSeries> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!("noise sigma must be nonnegative, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(series.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = series.values.iter().map(|v| v + normal.sample(&mut rng)).collect();
    ModeSeries::new(series.mode, series.grid.clone(), values)
}

/// Number of modes of degree at most `l_max` on `S^{n-1}`.
pub fn mode_count(n: usize, l_max: usize) -> usize {
    (0..=l_max).map(|l| harmonic_dim(n, l)).sum()
}
