use crate::error::{structure, Result};

/// How a grid was produced. Only informational; the nodes are authoritative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepPolicy {
    Uniform,
    Explicit,
}

/// Ordered discretization nodes starting at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    nodes: Vec<f64>,
    policy: StepPolicy,
}

impl TimeGrid {
    /// `steps + 1` equally spaced nodes on `[0, horizon]`.
    pub fn uniform(horizon: f64, steps: usize) -> Result<Self> {
        if steps == 0 || !(horizon > 0.0) || !horizon.is_finite() {
            return Err(structure(format!(
                "uniform grid needs steps >= 1 and a finite positive horizon (got {steps}, {horizon})"
            )));
        }
        let h = horizon / steps as f64;
        let mut nodes: Vec<f64> = (0..=steps).map(|i| i as f64 * h).collect();
        nodes[steps] = horizon;
        Ok(Self {
            nodes,
            policy: StepPolicy::Uniform,
        })
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(structure("a grid needs at least 2 nodes"));
        }
        if nodes[0] != 0.0 {
            return Err(structure(format!("first node must be 0, got {}", nodes[0])));
        }
        if let Some(i) = nodes.windows(2).position(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(structure(format!(
                "grid not strictly increasing at node {}: {} -> {}",
                i + 1,
                nodes[i],
                nodes[i + 1]
            )));
        }
        Ok(Self {
            nodes,
            policy: StepPolicy::Explicit,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn policy(&self) -> StepPolicy {
        self.policy
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Number of intervals.
    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn horizon(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn step(&self, i: usize) -> f64 {
        self.nodes[i + 1] - self.nodes[i]
    }

    pub fn max_step(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Default interpolation / round-trip tolerance: ten maximal steps.
    pub fn default_tolerance(&self) -> f64 {
        10.0 * self.max_step()
    }

    /// Index `i` of the cell `[t_i, t_{i+1})` containing `t`, clamped to the
    /// last cell for `t >= horizon` and to the first for `t < 0`.
    pub fn cell(&self, t: f64) -> usize {
        let j = self.nodes.partition_point(|&x| x <= t);
        j.saturating_sub(1).min(self.steps() - 1)
    }

    /// First node index with `t_i >= t` (the node a stopping time snaps to),
    /// or `None` past the horizon.
    pub fn snap_up(&self, t: f64) -> Option<usize> {
        let tol = 1e-12 * self.horizon().max(1.0);
        let j = self.nodes.partition_point(|&x| x < t - tol);
        (j < self.nodes.len()).then_some(j)
    }

    /// Same nodes, compared exactly.
    pub fn same_as(&self, other: &TimeGrid) -> bool {
        self.nodes == other.nodes
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_has_exact_endpoints() {
        let g = TimeGrid::uniform(1.0, 10).unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g.nodes()[0], 0.0);
        assert_eq!(g.horizon(), 1.0);
        assert!((g.max_step() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_nodes() {
        assert!(TimeGrid::from_nodes(vec![0.0]).is_err());
        assert!(TimeGrid::from_nodes(vec![0.1, 0.2]).is_err());
        assert!(TimeGrid::from_nodes(vec![0.0, 0.5, 0.5]).is_err());
        assert!(TimeGrid::uniform(1.0, 0).is_err());
        assert!(TimeGrid::uniform(-1.0, 4).is_err());
    }

    #[test]
    fn cell_and_snap() {
        let g = TimeGrid::from_nodes(vec![0.0, 1.0, 2.0, 4.0]).unwrap();
        assert_eq!(g.cell(0.0), 0);
        assert_eq!(g.cell(1.0), 1);
        assert_eq!(g.cell(3.9), 2);
        assert_eq!(g.cell(10.0), 2);
        assert_eq!(g.snap_up(1.5), Some(2));
        assert_eq!(g.snap_up(2.0), Some(2));
        assert_eq!(g.snap_up(4.5), None);
    }
}
