//! Special functions used by the per-mode radial problems: Bessel functions of
//! the first kind for integer and half-integer orders, real spherical
//! harmonics on the circle and the 2-sphere, and the harmonic dimension count.

use std::f64::consts::{FRAC_2_PI, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Order of a Bessel function, restricted to nonnegative multiples of 1/2.
///
/// Stored as twice the order so equality and hashing are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BesselOrder {
    twice: u32,
}

impl BesselOrder {
    pub const fn integer(n: u32) -> Self {
        Self { twice: 2 * n }
    }

    /// The order `m + 1/2`.
    pub const fn half_integer(m: u32) -> Self {
        Self { twice: 2 * m + 1 }
    }

    pub const fn from_twice(twice: u32) -> Self {
        Self { twice }
    }

    pub fn from_f64(value: f64) -> Result<Self> {
        let twice = 2.0 * value;
        if !(value >= 0.0) || twice.fract() != 0.0 || twice > u32::MAX as f64 {
            return Err(Error::invalid(format!(
                "Bessel order must be a nonnegative multiple of 1/2, got {value}"
            )));
        }
        Ok(Self {
            twice: twice as u32,
        })
    }

    pub fn value(self) -> f64 {
        self.twice as f64 / 2.0
    }

    pub fn twice(self) -> u32 {
        self.twice
    }

    pub fn is_half_integer(self) -> bool {
        self.twice % 2 == 1
    }
}

impl fmt::Display for BesselOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_half_integer() {
            write!(f, "{}/2", self.twice)
        } else {
            write!(f, "{}", self.twice / 2)
        }
    }
}

/// A spherical-harmonic channel `(n, l, k)` on `S^{n-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeIndex {
    pub n: usize,
    pub l: usize,
    pub k: usize,
}

impl ModeIndex {
    pub fn new(n: usize, l: usize, k: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("dimension n must be >= 2, got {n}")));
        }
        let dim = harmonic_dim(n, l);
        if k >= dim {
            return Err(Error::invalid(format!(
                "harmonic index k = {k} out of range for d({n},{l}) = {dim}"
            )));
        }
        Ok(Self { n, l, k })
    }

    /// `nu = l + (n - 2)/2`.
    pub fn bessel_order(&self) -> BesselOrder {
        BesselOrder::from_twice((2 * self.l + self.n - 2) as u32)
    }

    /// Every mode of degree `l <= l_max` in `(l, k)` order.
    pub fn all_up_to(n: usize, l_max: usize) -> Result<Vec<Self>> {
        let mut modes = Vec::new();
        for l in 0..=l_max {
            for k in 0..harmonic_dim(n, l) {
                modes.push(Self::new(n, l, k)?);
            }
        }
        Ok(modes)
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(n={}, l={}, k={})", self.n, self.l, self.k)
    }
}

/// Dimension `d(n, l)` of the space of degree-`l` spherical harmonics on
/// `S^{n-1}`: `(n+l-3)! (2l+n-2) / (l! (n-2)!)`, with `d(n, 0) = 1`.
///
/// Panics if `n < 2` or the count overflows `u128`.
pub fn harmonic_dim(n: usize, l: usize) -> usize {
    assert!(n >= 2, "harmonic_dim requires n >= 2");
    if l == 0 {
        return 1;
    }
    // (n+l-3)! / ((l-1)! (n-2)!) = C(n+l-3, l-1), then times (2l+n-2)/l.
    let top = (n + l - 3) as u128;
    let pick = (l - 1) as u128;
    let mut binom: u128 = 1;
    for i in 0..pick {
        binom = binom
            .checked_mul(top - i)
            .expect("harmonic dimension overflow")
            / (i + 1);
    }
    let numer = binom
        .checked_mul((2 * l + n - 2) as u128)
        .expect("harmonic dimension overflow");
    (numer / l as u128) as usize
}

// ---------------------------------------------------------------------------
// Bessel functions
// ---------------------------------------------------------------------------

const MILLER_RESCALE: f64 = 1e250;
const ASYMPTOTIC_MIN_X: f64 = 1.0e3;

/// `J_nu(x)` for `x >= 0`.
pub fn bessel_j(order: BesselOrder, x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::invalid(format!(
            "Bessel argument must be finite and nonnegative, got {x}"
        )));
    }
    Ok(bessel_j_unchecked(order, x))
}

/// `J_nu(x)` without argument validation; `x` must be finite and `>= 0`.
pub(crate) fn bessel_j_unchecked(order: BesselOrder, x: f64) -> f64 {
    let nu = order.value();
    if x == 0.0 {
        return if order.twice == 0 { 1.0 } else { 0.0 };
    }
    if 0.25 * x * x <= nu + 1.0 {
        return ascending_series(order, x);
    }
    if x >= ASYMPTOTIC_MIN_X && x >= 10.0 * nu * nu {
        return hankel_asymptotic(nu, x);
    }
    if order.is_half_integer() {
        half_integer_recurrence(order.twice / 2, x)
    } else {
        integer_miller(order.twice / 2, x)
    }
}

/// `(x/2)^nu / Gamma(nu+1) * sum_k (-x^2/4)^k / (k! (nu+1)_k)`.
///
/// Used only where `x^2/4 <= nu + 1`, so the terms decrease monotonically.
fn ascending_series(order: BesselOrder, x: f64) -> f64 {
    let half = 0.5 * x;
    let nu = order.value();
    let mut prefactor = if order.is_half_integer() {
        // Gamma(3/2) = sqrt(pi)/2
        half.sqrt() * 2.0 / PI.sqrt()
    } else {
        1.0
    };
    let first = if order.is_half_integer() { 1.5 } else { 1.0 };
    for j in 0..(order.twice / 2) {
        prefactor *= half / (first + j as f64);
    }

    let q = -half * half;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * (nu + kf));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    prefactor * sum
}

/// Half-integer orders from the closed forms of `J_{-1/2}` and `J_{1/2}`.
fn half_integer_recurrence(m: u32, x: f64) -> f64 {
    let scale = (FRAC_2_PI / x).sqrt();
    let j_minus = scale * x.cos();
    let j_plus = scale * x.sin();
    if m == 0 {
        return j_plus;
    }
    if (m as f64) <= x {
        // Upward recurrence is stable while the order stays below x.
        let mut prev = j_minus;
        let mut cur = j_plus;
        for k in 0..m {
            let nu = k as f64 + 0.5;
            let next = 2.0 * nu / x * cur - prev;
            prev = cur;
            cur = next;
        }
        return cur;
    }

    // Miller: run the recurrence downward from well above the target and fix
    // the scale against whichever closed form is larger in magnitude.
    let start = miller_start(m, x);
    let mut above = 0.0;
    let mut cur = 1e-30;
    let mut target = 0.0;
    let at_plus;
    let mut k = start;
    loop {
        // cur holds J_{k+1/2}, above holds J_{k+3/2}
        if k == m {
            target = cur;
        }
        if k == 0 {
            at_plus = cur;
            break;
        }
        let nu = k as f64 + 0.5;
        let below = 2.0 * nu / x * cur - above;
        above = cur;
        cur = below;
        k -= 1;
        if cur.abs() > MILLER_RESCALE {
            cur /= MILLER_RESCALE;
            above /= MILLER_RESCALE;
            target /= MILLER_RESCALE;
        }
    }
    // One more step gives J_{-1/2}.
    let at_minus = 1.0 / x * at_plus - above;
    if j_plus.abs() >= j_minus.abs() {
        target * (j_plus / at_plus)
    } else {
        target * (j_minus / at_minus)
    }
}

/// Integer orders by Miller's algorithm with the normalization
/// `J_0 + 2 sum_k J_{2k} = 1`.
fn integer_miller(n: u32, x: f64) -> f64 {
    let start = miller_start(n, x);
    let start = start + (start % 2); // even start keeps the sum bookkeeping simple
    let mut above = 0.0;
    let mut cur = 1e-30;
    let mut target = 0.0;
    let mut sum = 0.0;
    let mut k = start;
    loop {
        // cur holds J_k
        if k == n {
            target = cur;
        }
        if k == 0 {
            sum += cur;
            break;
        }
        if k % 2 == 0 {
            sum += 2.0 * cur;
        }
        let below = 2.0 * k as f64 / x * cur - above;
        above = cur;
        cur = below;
        k -= 1;
        if cur.abs() > MILLER_RESCALE {
            cur /= MILLER_RESCALE;
            above /= MILLER_RESCALE;
            target /= MILLER_RESCALE;
            sum /= MILLER_RESCALE;
        }
    }
    target / sum
}

fn miller_start(order: u32, x: f64) -> u32 {
    let top = (order as f64).max(x);
    (top + 20.0 + (40.0 * top).sqrt()).ceil() as u32
}

/// Hankel's large-argument expansion, summed until the terms stop shrinking.
fn hankel_asymptotic(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let eight_x = 8.0 * x;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * eight_x);
        if term.abs() >= last {
            break;
        }
        last = term.abs();
        // k odd contributes to Q, k even to P, with alternating signs
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (0.5 * nu + 0.25) * PI;
    (FRAC_2_PI / x).sqrt() * (p * chi.cos() - q * chi.sin())
}

// ---------------------------------------------------------------------------
// Spherical harmonics
// ---------------------------------------------------------------------------

/// Real orthonormal spherical harmonic `Y_{lk}` at a unit `direction`.
///
/// For `n = 2` the basis is `1/sqrt(2 pi)` for `l = 0` and
/// `cos(l theta)/sqrt(pi)`, `sin(l theta)/sqrt(pi)` for `k = 0, 1`.
/// For `n = 3`, `k = 0` is the zonal harmonic and `k = 2m - 1`, `k = 2m`
/// carry `cos(m phi)` and `sin(m phi)`.
pub fn sph_harmonic(mode: ModeIndex, direction: &[f64]) -> Result<f64> {
    if mode.n != 2 && mode.n != 3 {
        return Err(Error::UnsupportedDimension(mode.n));
    }
    if direction.len() != mode.n {
        return Err(Error::LengthMismatch {
            context: "sph_harmonic direction",
            expected: mode.n,
            found: direction.len(),
        });
    }
    let norm: f64 = direction.iter().map(|c| c * c).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!(
            "direction must be a unit vector, |direction| = {norm}"
        )));
    }
    let azimuth = direction[1].atan2(direction[0]);
    if mode.n == 2 {
        return Ok(circle_harmonic(mode.l, mode.k, azimuth));
    }
    let cos_polar = direction[2].clamp(-1.0, 1.0);
    Ok(sphere_harmonic(mode.l, mode.k, cos_polar, azimuth))
}

fn circle_harmonic(l: usize, k: usize, theta: f64) -> f64 {
    if l == 0 {
        return 1.0 / (2.0 * PI).sqrt();
    }
    let arg = l as f64 * theta;
    let trig = if k == 0 { arg.cos() } else { arg.sin() };
    trig / PI.sqrt()
}

fn sphere_harmonic(l: usize, k: usize, cos_polar: f64, azimuth: f64) -> f64 {
    let m = (k + 1) / 2;
    let legendre = normalized_legendre(l, m, cos_polar);
    if m == 0 {
        legendre
    } else if k % 2 == 1 {
        std::f64::consts::SQRT_2 * legendre * (m as f64 * azimuth).cos()
    } else {
        std::f64::consts::SQRT_2 * legendre * (m as f64 * azimuth).sin()
    }
}

/// Associated Legendre function scaled so that `P * e^{i m phi}` is
/// orthonormal on the 2-sphere (no Condon-Shortley phase).
fn normalized_legendre(l: usize, m: usize, x: f64) -> f64 {
    debug_assert!(m <= l);
    let sin_polar = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = (0.25 / PI).sqrt();
    for j in 1..=m {
        let jf = j as f64;
        pmm *= ((2.0 * jf + 1.0) / (2.0 * jf)).sqrt() * sin_polar;
    }
    if l == m {
        return pmm;
    }
    let mf = m as f64;
    let mut prev = pmm;
    let mut cur = (2.0 * mf + 3.0).sqrt() * x * pmm;
    for ll in (m + 2)..=l {
        let lf = ll as f64;
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
        let next = a * (x * cur - b * prev);
        prev = cur;
        cur = next;
    }
    cur
}
