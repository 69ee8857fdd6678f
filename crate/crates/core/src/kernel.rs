//! The Fredholm kernel `K(t, rho) = m(t, rho) rho^alpha J_nu(rho)` of one mode,
//! its Gram kernel `H(s, rho) = int_0^inf K(t, s) K(t, rho) dt`, the weighted
//! symmetric discretization of the Gram operator, and the `L^2` diagnostics
//! of `K` over truncated domains.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{RadialGrid, TimeGrid};
use crate::model::{CharacteristicRoots, DampingKind, DampingModel};
use crate::quadrature::composite;
use crate::specfun::{bessel_j_unchecked, BesselOrder, ModeIndex};

/// Per-node tail tolerance used by [`adapted_time_grid`] when none is given.
pub const DEFAULT_TIME_TOL: f64 = 1e-16;

/// Model, mode, and power weight `alpha` defining one radial kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub model: DampingModel,
    pub mode: ModeIndex,
    pub alpha: f64,
}

impl KernelSpec {
    pub fn new(model: DampingModel, mode: ModeIndex, alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::invalid(format!("alpha must be finite, got {alpha}")));
        }
        Ok(Self { model, mode, alpha })
    }

    pub fn bessel_order(&self) -> BesselOrder {
        self.mode.bessel_order()
    }

    /// Open interval of `alpha` for which `K` is square integrable:
    /// `(-(n-5)/2, 2)` for strong damping, `(-(n-3)/2, 1)` for weak.
    pub fn admissible_window(&self) -> (f64, f64) {
        admissible_window(self.model.kind(), self.mode.n)
    }

    pub fn in_window(&self) -> bool {
        let (lo, hi) = self.admissible_window();
        self.alpha > lo && self.alpha < hi
    }

    /// `rho^alpha J_nu(rho)`
    pub fn radial_factor(&self, rho: f64) -> f64 {
        rho.powf(self.alpha) * bessel_j_unchecked(self.bessel_order(), rho)
    }
}

pub fn admissible_window(kind: DampingKind, n: usize) -> (f64, f64) {
    let n = n as f64;
    match kind {
        DampingKind::Strong => (-(n - 5.0) / 2.0, 2.0),
        DampingKind::Weak => (-(n - 3.0) / 2.0, 1.0),
    }
}

fn check_positive(rho: f64, what: &str) -> Result<()> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::invalid(format!("{what} must be positive and finite, got {rho}")));
    }
    Ok(())
}

/// `K(t, rho)`
pub fn kernel_k(spec: &KernelSpec, t: f64, rho: f64) -> Result<f64> {
    check_positive(rho, "rho")?;
    let m = spec.model.multiplier(t, rho)?;
    Ok(m * spec.radial_factor(rho))
}

/// `H(s, rho) = (s rho)^alpha J_nu(s) J_nu(rho) int_0^inf m(t,s) m(t,rho) dt`
pub fn gram_h(spec: &KernelSpec, s: f64, rho: f64) -> Result<f64> {
    check_positive(s, "s")?;
    check_positive(rho, "rho")?;
    let time = spec.model.product_time_integral_unchecked(s, rho);
    Ok(spec.radial_factor(s) * spec.radial_factor(rho) * time)
}

/// Weighted discretization `B = W^{1/2} H W^{1/2}` of the Gram operator on a
/// radial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub values: DMatrix<f64>,
    pub grid: RadialGrid,
    pub spec: KernelSpec,
}

impl GramMatrix {
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    /// The discretized operator applied to a grid function:
    /// `(H W c)_i = sum_j H(rho_i, rho_j) w_j c_j`.
    pub fn apply_operator(&self, c: &[f64]) -> Result<Vec<f64>> {
        if c.len() != self.len() {
            return Err(Error::LengthMismatch {
                context: "Gram operator argument",
                expected: self.len(),
                found: c.len(),
            });
        }
        let w = self.grid.weights();
        let scaled: Vec<f64> = c.iter().zip(w).map(|(ci, wi)| ci * wi.sqrt()).collect();
        let x = nalgebra::DVector::from_vec(scaled);
        let y = &self.values * x;
        Ok(y.iter().zip(w).map(|(yi, wi)| yi / wi.sqrt()).collect())
    }
}

/// Assembles `B[i][j] = sqrt(w_i) H(rho_i, rho_j) sqrt(w_j)`.
pub fn assemble_gram_matrix(spec: &KernelSpec, grid: &RadialGrid) -> Result<GramMatrix> {
    if grid.is_empty() {
        return Err(Error::invalid("cannot assemble a Gram matrix on an empty grid"));
    }
    grid.check_avoids(spec.model.branch_point())?;
    if !spec.in_window() {
        let (lo, hi) = spec.admissible_window();
        log::warn!(
            "alpha = {} is outside the admissible window ({lo}, {hi}) for {} damping, n = {}",
            spec.alpha,
            spec.model.kind(),
            spec.mode.n
        );
    }
    let nodes = grid.nodes();
    let factors: Vec<f64> = nodes
        .iter()
        .zip(grid.weights())
        .map(|(&r, &w)| w.sqrt() * spec.radial_factor(r))
        .collect();
    let n = nodes.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i..n)
                .map(|j| {
                    let time = spec.model.product_time_integral_unchecked(nodes[i], nodes[j]);
                    factors[i] * factors[j] * time
                })
                .collect()
        })
        .collect();
    let mut values = DMatrix::zeros(n, n);
    for (i, row) in rows.into_iter().enumerate() {
        for (offset, v) in row.into_iter().enumerate() {
            let j = i + offset;
            values[(i, j)] = v;
            values[(j, i)] = v;
        }
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Gram matrix"));
    }
    Ok(GramMatrix {
        values,
        grid: grid.clone(),
        spec: *spec,
    })
}

/// `int_lo^hi int_0^T K(t, rho)^2 dt d rho`; `horizon = None` means `T = inf`.
///
/// The time integral is evaluated in closed form, the radial one by
/// Gauss-Legendre panels of unit width, graded geometrically towards
/// `rho = 0` when `lo = 0`.
pub fn kernel_l2_mass(spec: &KernelSpec, lo: f64, hi: f64, horizon: Option<f64>) -> Result<f64> {
    if !(lo >= 0.0) || !(hi > lo) || !hi.is_finite() {
        return Err(Error::invalid(format!("invalid radial interval [{lo}, {hi}]")));
    }
    if let Some(t) = horizon {
        if !(t > 0.0) {
            return Err(Error::invalid(format!("time horizon must be positive, got {t}")));
        }
    }
    let mut breaks = Vec::new();
    let mut start = lo;
    if lo == 0.0 {
        let first = hi.min(1.0);
        breaks.push(0.0);
        for k in (1..=52).rev() {
            breaks.push(first * 0.5f64.powi(k));
        }
        start = first;
    }
    let panels = (hi - start).ceil().max(1.0) as usize;
    let h = (hi - start) / panels as f64;
    for i in 0..panels {
        breaks.push(start + h * i as f64);
    }
    breaks.push(hi);
    breaks.dedup();

    let rule = composite(&breaks, 16);
    let model = spec.model;
    let terms: Vec<f64> = rule
        .nodes
        .par_iter()
        .zip(rule.weights.par_iter())
        .map(|(&rho, &w)| -> Result<f64> {
            let time = match horizon {
                None => model.multiplier_time_l2(rho)?,
                Some(t) => model.multiplier_time_l2_truncated(rho, t)?,
            };
            Ok(w * spec.radial_factor(rho).powi(2) * time)
        })
        .collect::<Result<_>>()?;
    Ok(terms.iter().sum())
}

/// `int_0^R int_0^T K(t, rho)^2 dt d rho`
pub fn kernel_l2_norm(spec: &KernelSpec, radius: f64, horizon: Option<f64>) -> Result<f64> {
    kernel_l2_mass(spec, 0.0, radius, horizon)
}

struct NodeScales {
    roots: CharacteristicRoots,
    /// squared `sqrt(w) rho^alpha J_nu(rho)`
    weight: f64,
    /// time after which the node's tail is negligible
    horizon: f64,
}

/// Time grid adapted to the kernel on a radial grid.
///
/// Each radial node contributes exponentials and oscillations with known
/// rates. A node stays active until the envelope bound on its remaining
/// `int K^2 dt`, scaled by its quadrature weight, drops below `tol` times the
/// largest diagonal entry of `B`. Panels are then sized so that every active
/// node has at most `4` units of decay or phase per `order`-point panel.
/// `max_horizon` truncates the result.
pub fn adapted_time_grid(
    spec: &KernelSpec,
    grid: &RadialGrid,
    order: usize,
    tol: f64,
    max_horizon: Option<f64>,
) -> Result<TimeGrid> {
    const PHASE_PER_PANEL: f64 = 4.0;
    const FAST_CUTOFF: f64 = 40.0;
    if grid.is_empty() {
        return Err(Error::invalid("time grid construction needs a nonempty radial grid"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("time grid tolerance must be positive, got {tol}")));
    }
    let model = spec.model;
    let mut nodes: Vec<NodeScales> = grid
        .nodes()
        .iter()
        .zip(grid.weights())
        .map(|(&rho, &w)| NodeScales {
            roots: model.roots_unchecked(rho),
            weight: w * spec.radial_factor(rho).powi(2),
            horizon: 0.0,
        })
        .collect();
    let scale = grid
        .nodes()
        .iter()
        .zip(&nodes)
        .map(|(&rho, node)| node.weight * model.multiplier_time_l2(rho).unwrap_or(0.0))
        .fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Err(Error::invalid("kernel vanishes on every radial node"));
    }
    let threshold = tol * scale;
    for node in &mut nodes {
        if node.weight == 0.0 {
            continue;
        }
        let alive = |t: f64| node.weight * node.roots.square_tail_bound(t) > threshold;
        if !alive(0.0) {
            continue;
        }
        let mut hi = 1.0 / node.roots.slow_rate();
        while alive(hi) {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if alive(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        node.horizon = hi;
    }
    let mut horizon = nodes.iter().map(|n| n.horizon).fold(0.0, f64::max);
    if let Some(cap) = max_horizon {
        if !(cap > 0.0) {
            return Err(Error::invalid(format!("time horizon must be positive, got {cap}")));
        }
        horizon = horizon.min(cap);
    }
    if !(horizon > 0.0) {
        return Err(Error::invalid("adapted time horizon is zero"));
    }

    let mut breaks = vec![0.0];
    let mut t = 0.0;
    while t < horizon {
        let mut h = horizon - t;
        for node in nodes.iter().filter(|n| n.horizon > t) {
            let roots = &node.roots;
            let fast = roots.fast_rate();
            if fast * t < FAST_CUTOFF {
                h = h.min(PHASE_PER_PANEL / fast);
            }
            h = h.min(PHASE_PER_PANEL / roots.slow_rate());
            let freq = roots.frequency();
            if freq > 0.0 {
                h = h.min(PHASE_PER_PANEL / freq);
            }
        }
        t = if horizon - t - h < 1e-3 * h { horizon } else { t + h };
        breaks.push(t);
    }
    TimeGrid::from_breaks(breaks, order)
}
