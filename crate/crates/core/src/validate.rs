//! Independent quadrature oracles for the closed-form time integrals and the
//! identity suite run by `dampwave validate`.

use std::fmt;

use serde::Serialize;

use crate::error::Result;
use crate::grid::RadialGrid;
use crate::kernel::{assemble_gram_matrix, gram_h, KernelSpec};
use crate::model::{CharacteristicRoots, DampingModel};
use crate::quadrature::adaptive;
use crate::spectral::eig_sym;
use crate::specfun::{bessel_j, ModeIndex};

/// Time beyond which `sqrt(tail_a tail_b)` drops below `rel` times its value
/// at `t = 0`, so truncating `int m_a m_b dt` there is harmless.
pub fn oracle_horizon(a: &CharacteristicRoots, b: &CharacteristicRoots, rel: f64) -> f64 {
    let bound = |t: f64| (a.square_tail_bound(t) * b.square_tail_bound(t)).sqrt();
    let target = rel * bound(0.0);
    let mut hi = 1.0 / a.slow_rate().min(b.slow_rate());
    while bound(hi) > target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if bound(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// `int_0^T m(t, s) m(t, rho) dt` by adaptive Gauss-Legendre quadrature, with
/// `T` from [`oracle_horizon`] at `1e-15`.
pub fn numeric_product_integral(model: &DampingModel, s: f64, rho: f64) -> Result<f64> {
    let a = model.roots(s)?;
    let b = model.roots(rho)?;
    let horizon = oracle_horizon(&a, &b, 1e-15);
    let busiest = [a.frequency(), b.frequency(), a.slow_rate(), b.slow_rate()]
        .into_iter()
        .fold(0.0, f64::max);
    let initial = ((horizon * busiest / 2.0).ceil() as usize).clamp(8, 50_000);
    Ok(adaptive(
        |t| a.multiplier(t) * b.multiplier(t),
        0.0,
        horizon,
        initial,
        0.0,
        1e-13,
    ))
}

/// `int_0^T m(t, rho)^2 dt` by quadrature.
pub fn numeric_square_integral(model: &DampingModel, rho: f64) -> Result<f64> {
    numeric_product_integral(model, rho, rho)
}

/// Relative deviation of `m(t, b* + offset)` from the double-root form
/// `t e^{-t b-rate}` at the branch point.
pub fn branch_deviation(model: &DampingModel, t: f64, offset: f64) -> Result<f64> {
    let b = model.branch_point();
    let rate = model.slow_decay_rate(b);
    let limit = t * (-t * rate).exp();
    let m = model.multiplier(t, b + offset)?;
    Ok((m - limit).abs() / m.abs())
}

/// One line of the identity suite.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub passed: bool,
    /// Worst observed error measure.
    pub worst: f64,
    pub tolerance: f64,
}

impl fmt::Display for IdentityCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: worst {:.3e} (tolerance {:.1e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.worst,
            self.tolerance
        )
    }
}

fn check(name: &str, worst: f64, tolerance: f64) -> IdentityCheck {
    IdentityCheck {
        name: name.to_string(),
        passed: worst <= tolerance,
        worst,
        tolerance,
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Sample frequencies around and away from the branch point.
fn sample_frequencies(model: &DampingModel) -> [f64; 5] {
    let b = model.branch_point();
    [0.3, 1.0, b - 1e-3, b + 1e-3, 5.0]
}

/// Quadrature versus `1/(2 sigma pi)` for the given parameters.
pub fn time_integral_error(models: &[DampingModel]) -> Result<f64> {
    let mut worst = 0.0f64;
    for m in models {
        for rho in sample_frequencies(m) {
            let exact = m.multiplier_time_l2(rho)?;
            worst = worst.max(rel(numeric_square_integral(m, rho)?, exact));
        }
    }
    Ok(worst)
}

/// Worst ratio `deviation(eps/10) / deviation(eps)` over `eps = 1e-3, 1e-4`,
/// both sides of the branch point and `t in {0.5, 1, 5}`; first-order
/// continuity gives about `0.1`.
pub fn branch_shrink_ratio(model: &DampingModel) -> Result<f64> {
    let mut worst = 0.0f64;
    for t in [0.5, 1.0, 5.0] {
        for sign in [-1.0, 1.0] {
            let d: Vec<f64> = [1e-3, 1e-4, 1e-5]
                .iter()
                .map(|e| branch_deviation(model, t, sign * e))
                .collect::<Result<_>>()?;
            for p in d.windows(2) {
                if p[0] > 1e-13 {
                    worst = worst.max(p[1] / p[0]);
                }
            }
        }
    }
    Ok(worst)
}

/// Analytic `H` against the quadrature oracle on fixed sample pairs.
pub fn gram_quadrature_error(spec: &KernelSpec, pairs: &[(f64, f64)]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &(s, rho) in pairs {
        let analytic = gram_h(spec, s, rho)?;
        let numeric = spec.radial_factor(s) * spec.radial_factor(rho) * numeric_product_integral(&spec.model, s, rho)?;
        worst = worst.max(rel(analytic, numeric));
    }
    Ok(worst)
}

/// `H(rho, rho) / (rho^{2 alpha} J_nu(rho)^2 int m^2)` against one.
pub fn gram_diagonal_error(spec: &KernelSpec, radii: &[f64]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &rho in radii {
        let j = bessel_j(spec.bessel_order(), rho)?;
        if j == 0.0 {
            continue;
        }
        let want = rho.powf(2.0 * spec.alpha) * j * j * spec.model.multiplier_time_l2(rho)?;
        worst = worst.max(rel(gram_h(spec, rho, rho)?, want));
    }
    Ok(worst)
}

/// Symmetry defect, eigen-residual and most negative eigenvalue of the
/// assembled matrix, each relative to `lambda_1`.
pub fn gram_structure(spec: &KernelSpec, grid: &RadialGrid) -> Result<(f64, f64, f64)> {
    let b = assemble_gram_matrix(spec, grid)?;
    let asym = (&b.values - b.values.transpose()).amax();
    let dec = eig_sym(&b)?;
    let top = dec.largest();
    let residual = dec.max_residual(&b.values) / top;
    let negative = (-dec.eigenvalues.last().copied().unwrap_or(0.0) / top).max(0.0);
    Ok((asym, residual, negative))
}

/// Default kernels: strong `delta = 1, alpha = 1.5` and weak `gamma = 1,
/// alpha = 0.75`, both at `n = 3, l = 0`.
pub fn default_specs() -> [KernelSpec; 2] {
    let mode = ModeIndex { n: 3, l: 0, k: 0 };
    [
        KernelSpec {
            model: DampingModel::strong(1.0).expect("positive parameter"),
            mode,
            alpha: 1.5,
        },
        KernelSpec {
            model: DampingModel::weak(1.0).expect("positive parameter"),
            mode,
            alpha: 0.75,
        },
    ]
}

/// Every closed-form identity with its tolerance.
pub fn identity_suite() -> Result<Vec<IdentityCheck>> {
    let strong: Vec<DampingModel> = [0.5, 1.0, 3.0].iter().map(|&d| DampingModel::strong(d)).collect::<Result<_>>()?;
    let weak: Vec<DampingModel> = [0.5, 1.0, 3.0].iter().map(|&g| DampingModel::weak(g)).collect::<Result<_>>()?;
    let mut out = vec![
        check("strong time integral 1/(2 delta rho^4)", time_integral_error(&strong)?, 1e-6),
        check("weak time integral 1/(2 gamma rho^2)", time_integral_error(&weak)?, 1e-6),
    ];
    let shrink = strong
        .iter()
        .chain(&weak)
        .map(branch_shrink_ratio)
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    out.push(check("branch point continuity (first order in eps)", shrink, 0.2));
    let pairs = [(0.3, 0.7), (1.0, 1.0), (1.9, 2.2), (0.45, 0.55), (3.0, 7.5), (0.2, 11.5), (6.0, 6.1)];
    let radii = [0.25, 0.5, 1.0, 2.0, 3.3, 7.0, 11.9];
    let grid = RadialGrid::composite(12.0, 16, 16)?;
    for spec in default_specs() {
        let kind = spec.model.kind();
        out.push(check(&format!("{kind} Gram kernel vs time quadrature"), gram_quadrature_error(&spec, &pairs)?, 1e-8));
        out.push(check(&format!("{kind} Gram diagonal identity"), gram_diagonal_error(&spec, &radii)?, 1e-12));
        let (asym, residual, negative) = gram_structure(&spec, &grid)?;
        out.push(check(&format!("{kind} Gram matrix symmetry"), asym, 0.0));
        out.push(check(&format!("{kind} Gram eigen-residual / lambda_1"), residual, 1e-10));
        out.push(check(&format!("{kind} Gram negative eigenvalues / lambda_1"), negative, 1e-10));
    }
    Ok(out)
}
