//! Quadrature grids standing in for the half-lines `rho in [0, inf)` and
//! `t in [0, inf)`: composite Gauss-Legendre panels on a truncated interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::BRANCH_GUARD;
use crate::quadrature::{composite, uniform_breaks};

/// Panel breakpoints and nodes/weights of a composite rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PanelRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// Empty for grids built from explicit nodes.
    breaks: Vec<f64>,
    order: usize,
}

impl PanelRule {
    fn from_breaks(breaks: Vec<f64>, order: usize) -> Result<Self> {
        if breaks.len() < 2 || order == 0 {
            return Err(Error::invalid("grid needs at least one panel and order >= 1"));
        }
        if breaks.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::invalid("panel breakpoints must be strictly increasing"));
        }
        let rule = composite(&breaks, order);
        Ok(Self {
            nodes: rule.nodes,
            weights: rule.weights,
            breaks,
            order,
        })
    }

    fn from_nodes(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::invalid("grid must contain at least one node"));
        }
        if nodes.len() != weights.len() {
            return Err(Error::LengthMismatch {
                context: "grid weights",
                expected: nodes.len(),
                found: weights.len(),
            });
        }
        if nodes.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::invalid("grid nodes must be strictly increasing"));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::invalid("grid weights must be positive and finite"));
        }
        Ok(Self {
            nodes,
            weights,
            breaks: Vec::new(),
            order: 0,
        })
    }

    fn refined(&self) -> Result<Self> {
        if self.breaks.is_empty() {
            return Err(Error::invalid("explicit-node grids cannot be refined"));
        }
        let mut breaks = Vec::with_capacity(2 * self.breaks.len());
        for p in self.breaks.windows(2) {
            breaks.push(p[0]);
            breaks.push(0.5 * (p[0] + p[1]));
        }
        breaks.push(*self.breaks.last().unwrap());
        Self::from_breaks(breaks, self.order)
    }
}

/// Radial frequency grid on `(0, R]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    rule: PanelRule,
    radius: f64,
}

impl RadialGrid {
    /// `panels` equal Gauss-Legendre panels of `order` nodes on `[0, radius]`.
    pub fn composite(radius: f64, panels: usize, order: usize) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() || panels == 0 {
            return Err(Error::invalid(format!(
                "radial grid needs radius > 0 and panels >= 1 (radius = {radius}, panels = {panels})"
            )));
        }
        Self::from_breaks(uniform_breaks(0.0, radius, panels), order)
    }

    pub fn from_breaks(breaks: Vec<f64>, order: usize) -> Result<Self> {
        if breaks.first().copied() != Some(0.0) {
            return Err(Error::invalid("radial grid panels must start at 0"));
        }
        let radius = *breaks.last().unwrap();
        Ok(Self {
            rule: PanelRule::from_breaks(breaks, order)?,
            radius,
        })
    }

    /// Grid from explicit positive nodes and weights; `R` is the weight total.
    pub fn from_nodes(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let rule = PanelRule::from_nodes(nodes, weights)?;
        if rule.nodes[0] <= 0.0 {
            return Err(Error::invalid("radial nodes must be positive"));
        }
        let radius = rule.weights.iter().sum();
        Ok(Self { rule, radius })
    }

    /// Same panels, each split in two.
    pub fn refined(&self) -> Result<Self> {
        Ok(Self {
            rule: self.rule.refined()?,
            radius: self.radius,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.rule.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.rule.weights
    }

    pub fn len(&self) -> usize {
        self.rule.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rule.nodes.is_empty()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn order(&self) -> usize {
        self.rule.order
    }

    pub fn panels(&self) -> usize {
        self.rule.breaks.len().saturating_sub(1)
    }

    /// Fails if any node sits within the branch guard band around `b`.
    pub fn check_avoids(&self, branch_point: f64) -> Result<()> {
        let band = BRANCH_GUARD * branch_point;
        match self.nodes().iter().find(|&&r| (r - branch_point).abs() < band) {
            Some(r) => Err(Error::invalid(format!(
                "radial node {r} lies on the branch point {branch_point}"
            ))),
            None => Ok(()),
        }
    }
}

/// Time grid on `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    rule: PanelRule,
    horizon: f64,
}

impl TimeGrid {
    pub fn composite(horizon: f64, panels: usize, order: usize) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() || panels == 0 {
            return Err(Error::invalid(format!(
                "time grid needs T > 0 and panels >= 1 (T = {horizon}, panels = {panels})"
            )));
        }
        Self::from_breaks(uniform_breaks(0.0, horizon, panels), order)
    }

    pub fn from_breaks(breaks: Vec<f64>, order: usize) -> Result<Self> {
        if breaks.first().copied() != Some(0.0) {
            return Err(Error::invalid("time grid panels must start at 0"));
        }
        let horizon = *breaks.last().unwrap();
        Ok(Self {
            rule: PanelRule::from_breaks(breaks, order)?,
            horizon,
        })
    }

    pub fn from_nodes(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let rule = PanelRule::from_nodes(nodes, weights)?;
        if rule.nodes[0] < 0.0 {
            return Err(Error::invalid("time nodes must be nonnegative"));
        }
        let horizon = *rule.nodes.last().unwrap();
        Ok(Self { rule, horizon })
    }

    pub fn refined(&self) -> Result<Self> {
        Ok(Self {
            rule: self.rule.refined()?,
            horizon: self.horizon,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.rule.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.rule.weights
    }

    pub fn len(&self) -> usize {
        self.rule.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rule.nodes.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn breaks(&self) -> &[f64] {
        &self.rule.breaks
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_radial_grid_shape() {
        let g = RadialGrid::composite(12.0, 16, 16).unwrap();
        assert_eq!(g.len(), 256);
        assert!((g.weights().iter().sum::<f64>() - 12.0).abs() < 1e-10);
        assert!(g.nodes()[0] > 0.0 && *g.nodes().last().unwrap() < 12.0);
        // default branch points of both models
        g.check_avoids(2.0).unwrap();
        g.check_avoids(0.5).unwrap();
    }

    #[test]
    fn refinement_doubles_nodes() {
        let g = RadialGrid::composite(12.0, 16, 16).unwrap();
        let r = g.refined().unwrap();
        assert_eq!(r.len(), 512);
        assert_eq!(r.panels(), 32);
        assert!((r.weights().iter().sum::<f64>() - 12.0).abs() < 1e-10);
    }

    #[test]
    fn explicit_grids() {
        let g = RadialGrid::from_nodes(vec![1.0], vec![1.0]).unwrap();
        assert_eq!(g.radius(), 1.0);
        assert!(g.refined().is_err());
        assert!(RadialGrid::from_nodes(vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(RadialGrid::from_nodes(vec![2.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(RadialGrid::from_nodes(vec![1.0, 2.0], vec![1.0]).is_err());
        assert!(RadialGrid::from_nodes(vec![1.0, 2.0], vec![1.0, -1.0]).is_err());
    }

    #[test]
    fn branch_point_detection() {
        let g = RadialGrid::from_nodes(vec![1.0, 2.0], vec![1.0, 1.0]).unwrap();
        assert!(g.check_avoids(2.0).is_err());
        assert!(g.check_avoids(2.0 + 1e-3).is_ok());
    }

    #[test]
    fn time_grid_weights() {
        let g = TimeGrid::composite(40.0, 16, 16).unwrap();
        assert!((g.weights().iter().sum::<f64>() - 40.0).abs() < 1e-10);
        assert_eq!(g.horizon(), 40.0);
        assert!(TimeGrid::composite(0.0, 4, 4).is_err());
    }
}
