//! Gauss-Legendre rules: single-interval nodes, composite panels over a list of
//! breakpoints, and a globally adaptive integrator for smooth integrands.

use std::collections::BinaryHeap;
use std::f64::consts::PI;

/// Nodes and weights of the `order`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "Gauss-Legendre order must be positive");
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let nf = order as f64;
    for i in 0..order.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut deriv = 0.0;
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(order, x);
            deriv = dp;
            let step = p / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(order, x);
        if dp != 0.0 {
            deriv = dp;
        }
        let w = 2.0 / ((1.0 - x * x) * deriv * deriv);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    if order % 2 == 1 {
        nodes[order / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// A quadrature rule as parallel node/weight vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Composite Gauss-Legendre rule with one `order`-point panel between each
/// pair of consecutive `breaks`.
pub fn composite(breaks: &[f64], order: usize) -> Rule {
    let (x, w) = gauss_legendre(order);
    let panels = breaks.len().saturating_sub(1);
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for pair in breaks.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(mid + half * xi);
            weights.push(half * wi);
        }
    }
    Rule { nodes, weights }
}

/// Equal-width breakpoints on `[a, b]`.
pub fn uniform_breaks(a: f64, b: f64, panels: usize) -> Vec<f64> {
    let h = (b - a) / panels as f64;
    let mut breaks: Vec<f64> = (0..panels).map(|i| a + h * i as f64).collect();
    breaks.push(b);
    breaks
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss-Legendre integration over `[a, b]`.
///
/// Each segment is estimated with a 16-point rule and compared against the
/// sum of the same rule on its two halves. The worst segment is bisected until
/// the summed error estimate drops below `max(abs_tol, rel_tol * |total|)`.
/// `initial` seeds the integration with that many equal segments.
pub fn adaptive(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    initial: usize,
    abs_tol: f64,
    rel_tol: f64,
) -> f64 {
    const ORDER: usize = 16;
    const MAX_SEGMENTS: usize = 200_000;
    let (x, w) = gauss_legendre(ORDER);
    let panel = |a: f64, b: f64| -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        half * x
            .iter()
            .zip(&w)
            .map(|(xi, wi)| wi * f(mid + half * xi))
            .sum::<f64>()
    };
    let assess = |a: f64, b: f64| -> Segment {
        let whole = panel(a, b);
        let m = 0.5 * (a + b);
        let split = panel(a, m) + panel(m, b);
        Segment {
            a,
            b,
            value: split,
            error: (whole - split).abs(),
        }
    };

    let mut heap: BinaryHeap<Segment> = uniform_breaks(a, b, initial.max(1))
        .windows(2)
        .map(|p| assess(p[0], p[1]))
        .collect();
    let resum = |heap: &BinaryHeap<Segment>| -> (f64, f64) {
        heap.iter()
            .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error))
    };
    let (mut total, mut error) = resum(&heap);
    let mut steps = 0usize;
    loop {
        if error <= abs_tol.max(rel_tol * total.abs()) || heap.len() >= MAX_SEGMENTS {
            return resum(&heap).0;
        }
        let worst = heap.pop().expect("nonempty segment heap");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            // interval exhausted at machine resolution
            error -= worst.error;
            heap.push(Segment { error: 0.0, ..worst });
            continue;
        }
        let left = assess(worst.a, m);
        let right = assess(m, worst.b);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        steps += 1;
        if steps % 1024 == 0 {
            (total, error) = resum(&heap);
        }
    }
}
