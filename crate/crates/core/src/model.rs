//! Damping models and the Fourier multiplier `m(t, rho)` that maps the initial
//! velocity transform to the solution transform at time `t`, together with the
//! closed-form time integrals used by the kernel and as test oracles.
//!
//! Both equations reduce, per frequency `rho`, to the ODE
//! `y'' + sigma(rho) y' + pi(rho) y = 0`, `y(0) = 0`, `y'(0) = 1`, with
//!
//! | model  | `sigma`       | `pi`    | branch point `b*` |
//! |--------|---------------|---------|-------------------|
//! | weak   | `gamma`       | `rho^2` | `gamma / 2`       |
//! | strong | `delta rho^2` | `rho^2` | `2 / delta`       |
//!
//! so `m(t, rho) = e^{-a t} sinh(w t) / w` with `a = sigma/2` and
//! `w^2 = a^2 - pi` (sin for `w^2 < 0`, `t e^{-a t}` at `w = 0`).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative half-width of the band around `b*` where the multiplier is
/// evaluated through its limit form.
pub const BRANCH_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DampingKind {
    /// `u_tt - Lap u + gamma u_t = 0`
    Weak,
    /// `u_tt - Lap u - delta Lap u_t = 0`
    Strong,
}

impl fmt::Display for DampingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DampingKind::Weak => f.write_str("weak"),
            DampingKind::Strong => f.write_str("strong"),
        }
    }
}

/// Which damped equation is being solved, with its damping coefficient
/// (`gamma` for [`DampingKind::Weak`], `delta` for [`DampingKind::Strong`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampingModel {
    kind: DampingKind,
    parameter: f64,
}

/// Where `rho` sits relative to the branch point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Distinct real roots (overdamped frequency).
    Real,
    /// Complex-conjugate roots (oscillating frequency).
    Oscillatory,
    /// Coincident roots, within [`BRANCH_GUARD`] of `b*`.
    Critical,
}

impl DampingModel {
    pub fn new(kind: DampingKind, parameter: f64) -> Result<Self> {
        if !(parameter > 0.0) || !parameter.is_finite() {
            return Err(Error::invalid(format!(
                "damping parameter must be positive and finite, got {parameter}"
            )));
        }
        Ok(Self { kind, parameter })
    }

    pub fn weak(gamma: f64) -> Result<Self> {
        Self::new(DampingKind::Weak, gamma)
    }

    pub fn strong(delta: f64) -> Result<Self> {
        Self::new(DampingKind::Strong, delta)
    }

    pub fn kind(&self) -> DampingKind {
        self.kind
    }

    pub fn parameter(&self) -> f64 {
        self.parameter
    }

    /// Frequency `b*` where the characteristic roots coincide.
    pub fn branch_point(&self) -> f64 {
        match self.kind {
            DampingKind::Weak => 0.5 * self.parameter,
            DampingKind::Strong => 2.0 / self.parameter,
        }
    }

    /// `(sigma, pi)`: minus the sum and the product of the characteristic roots.
    pub fn root_sum_product(&self, rho: f64) -> (f64, f64) {
        let rho2 = rho * rho;
        match self.kind {
            DampingKind::Weak => (self.parameter, rho2),
            DampingKind::Strong => (self.parameter * rho2, rho2),
        }
    }

    pub fn branch(&self, rho: f64) -> Branch {
        let b = self.branch_point();
        if (rho - b).abs() < BRANCH_GUARD * b {
            return Branch::Critical;
        }
        let above = rho > b;
        match (self.kind, above) {
            (DampingKind::Weak, false) | (DampingKind::Strong, true) => Branch::Real,
            _ => Branch::Oscillatory,
        }
    }

    pub fn roots(&self, rho: f64) -> Result<CharacteristicRoots> {
        check_frequency(rho)?;
        Ok(self.roots_unchecked(rho))
    }

    pub(crate) fn roots_unchecked(&self, rho: f64) -> CharacteristicRoots {
        let (sigma, pi) = self.root_sum_product(rho);
        let a = 0.5 * sigma;
        match self.branch(rho) {
            Branch::Critical => CharacteristicRoots::Double { value: -a },
            Branch::Real => {
                let w = (a - rho).max(0.0).sqrt() * (a + rho).sqrt();
                let fast = -(a + w);
                // product of the roots is pi; avoids cancellation in -a + w
                CharacteristicRoots::Real {
                    slow: pi / fast,
                    fast,
                }
            }
            Branch::Oscillatory => {
                let w = (rho - a).max(0.0).sqrt() * (rho + a).sqrt();
                CharacteristicRoots::Complex { re: -a, im: w }
            }
        }
    }

    /// Fourier multiplier `m(t, rho)`.
    pub fn multiplier(&self, t: f64, rho: f64) -> Result<f64> {
        check_frequency(rho)?;
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::invalid(format!(
                "time must be finite and nonnegative, got {t}"
            )));
        }
        Ok(self.multiplier_unchecked(t, rho))
    }

    pub(crate) fn multiplier_unchecked(&self, t: f64, rho: f64) -> f64 {
        self.roots_unchecked(rho).multiplier(t)
    }

    /// `int_0^inf m(t, rho)^2 dt = 1 / (2 sigma pi)`, i.e. `1/(2 delta rho^4)`
    /// (strong) or `1/(2 gamma rho^2)` (weak), on every branch.
    pub fn multiplier_time_l2(&self, rho: f64) -> Result<f64> {
        check_frequency(rho)?;
        let (sigma, pi) = self.root_sum_product(rho);
        Ok(0.5 / (sigma * pi))
    }

    /// `int_0^T m(t, rho)^2 dt`. Closed form away from the branch point, where
    /// the partial fractions cancel; adaptive quadrature within it.
    pub fn multiplier_time_l2_truncated(&self, rho: f64, horizon: f64) -> Result<f64> {
        check_frequency(rho)?;
        if !(horizon >= 0.0) {
            return Err(Error::invalid(format!("horizon must be nonnegative, got {horizon}")));
        }
        if horizon.is_infinite() {
            return self.multiplier_time_l2(rho);
        }
        let roots = self.roots_unchecked(rho);
        Ok(match roots.square_integral_to(horizon) {
            Some(v) => v,
            None => crate::quadrature::adaptive(
                |t| roots.multiplier(t).powi(2),
                0.0,
                horizon,
                16,
                0.0,
                1e-13,
            ),
        })
    }

    /// `int_0^inf m(t, s) m(t, rho) dt` in closed form.
    ///
    /// With `(S1, P1)`, `(S2, P2)` the root sums/products at `s` and `rho`,
    /// partial fractions over the four exponentials collapse to
    ///
    /// `(S1 + S2) / [(P1 - P2)^2 + S1 S2 (P1 + P2) + P1 S2^2 + P2 S1^2]`,
    ///
    /// which has no branch structure and only nonnegative terms.
    pub fn product_time_integral(&self, s: f64, rho: f64) -> Result<f64> {
        check_frequency(s)?;
        check_frequency(rho)?;
        Ok(self.product_time_integral_unchecked(s, rho))
    }

    pub(crate) fn product_time_integral_unchecked(&self, s: f64, rho: f64) -> f64 {
        // fixed argument order makes the result bitwise symmetric
        let (s, rho) = if s <= rho { (s, rho) } else { (rho, s) };
        let (s1, p1) = self.root_sum_product(s);
        let (s2, p2) = self.root_sum_product(rho);
        let dp = p1 - p2;
        let denom = dp * dp + s1 * s2 * (p1 + p2) + p1 * s2 * s2 + p2 * s1 * s1;
        (s1 + s2) / denom
    }

    /// Exponential decay rate of the slowest component of `m(., rho)`.
    pub fn slow_decay_rate(&self, rho: f64) -> f64 {
        self.roots_unchecked(rho).slow_rate()
    }
}

fn check_frequency(rho: f64) -> Result<()> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::invalid(format!(
            "frequency must be positive and finite, got {rho}"
        )));
    }
    Ok(())
}

/// Roots `mu_1, mu_2` of the characteristic polynomial at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CharacteristicRoots {
    Real { slow: f64, fast: f64 },
    Complex { re: f64, im: f64 },
    Double { value: f64 },
}

impl CharacteristicRoots {
    /// `mu_1 + mu_2`
    pub fn sum(&self) -> f64 {
        match *self {
            Self::Real { slow, fast } => slow + fast,
            Self::Complex { re, .. } => 2.0 * re,
            Self::Double { value } => 2.0 * value,
        }
    }

    /// `mu_1 mu_2`
    pub fn product(&self) -> f64 {
        match *self {
            Self::Real { slow, fast } => slow * fast,
            Self::Complex { re, im } => re * re + im * im,
            Self::Double { value } => value * value,
        }
    }

    /// Largest real part (closest to zero).
    pub fn max_real_part(&self) -> f64 {
        match *self {
            Self::Real { slow, .. } => slow,
            Self::Complex { re, .. } => re,
            Self::Double { value } => value,
        }
    }

    pub fn slow_rate(&self) -> f64 {
        -self.max_real_part()
    }

    pub fn fast_rate(&self) -> f64 {
        match *self {
            Self::Real { fast, .. } => -fast,
            Self::Complex { re, .. } => -re,
            Self::Double { value } => -value,
        }
    }

    /// Angular frequency of oscillation, zero for real roots.
    pub fn frequency(&self) -> f64 {
        match *self {
            Self::Complex { im, .. } => im,
            _ => 0.0,
        }
    }

    /// `int_0^T m(t)^2 dt` from the exponential partial fractions, or `None`
    /// when the roots are too close for that to be accurate.
    pub fn square_integral_to(&self, horizon: f64) -> Option<f64> {
        const MIN_SPLIT: f64 = 0.1;
        let t = horizon;
        match *self {
            Self::Double { value } => {
                let c = -2.0 * value;
                let tail = (-c * t).exp() * (t * t / c + 2.0 * t / (c * c) + 2.0 / (c * c * c));
                Some(2.0 / (c * c * c) - tail)
            }
            Self::Complex { re, im } => {
                if 2.0 * im * t < MIN_SPLIT {
                    return None;
                }
                let c = -2.0 * re;
                let d = 2.0 * im;
                let plain = -(-c * t).exp_m1() / c;
                let e = (-c * t).exp();
                let cosine = (c - e * (c * (d * t).cos() - d * (d * t).sin())) / (c * c + d * d);
                Some((plain - cosine) / (2.0 * im * im))
            }
            Self::Real { slow, fast } => {
                let gap = slow - fast;
                if gap * t < MIN_SPLIT {
                    return None;
                }
                let part = |rate: f64| (rate * t).exp_m1() / rate;
                Some((part(2.0 * slow) - 2.0 * part(slow + fast) + part(2.0 * fast)) / (gap * gap))
            }
        }
    }

    /// Upper bound on `int_t^inf m(s)^2 ds`, from `|m(s)| <= e^{-r s} min(s, 1/width)`
    /// with `r` the slow rate and `width` the root separation.
    pub fn square_tail_bound(&self, t: f64) -> f64 {
        let r = self.slow_rate();
        let width = match *self {
            Self::Real { slow, fast } => slow - fast,
            Self::Complex { im, .. } => im,
            Self::Double { .. } => 0.0,
        };
        let grow = t + 1.0 / r;
        let c = if width > 0.0 { grow.min(1.0 / width) } else { grow };
        (-2.0 * r * t).exp() * c * c / (2.0 * r)
    }

    /// `(e^{mu_1 t} - e^{mu_2 t}) / (mu_1 - mu_2)`.
    pub fn multiplier(&self, t: f64) -> f64 {
        match *self {
            Self::Double { value } => t * (value * t).exp(),
            Self::Complex { re, im } => (re * t).exp() * (im * t).sin() / im,
            Self::Real { slow, fast } => {
                // e^{slow t} (1 - e^{-(slow - fast) t}) / (slow - fast)
                let gap = slow - fast;
                (slow * t).exp() * -(-gap * t).exp_m1() / gap
            }
        }
    }
}
