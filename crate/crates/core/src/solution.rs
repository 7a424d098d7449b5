//! Path-wise solution pairs `(Y, Z)` shared by every solver.

use std::io::Write;
use std::sync::Arc;

use crate::error::{structure, Result};
use crate::timechange::TimeGrid;

/// Which algorithm produced a [`SolutionEnsemble`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Lsmc,
    Picard,
    ClosedForm,
    MarkovOde,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Lsmc => "lsmc",
            Scheme::Picard => "picard",
            Scheme::ClosedForm => "closed-form",
            Scheme::MarkovOde => "markov-ode",
        }
    }
}

/// `Y` (`k` components) and `Z` (`k x d` components, row-major) on every
/// node of a shared grid, one row per path. `Z` at the last node is zero.
#[derive(Debug, Clone)]
pub struct SolutionEnsemble {
    pub grid: Arc<TimeGrid>,
    pub k: usize,
    pub d: usize,
    /// `y[p][node * k + i]`
    pub y: Vec<Vec<f64>>,
    /// `z[p][node * k * d + i * d + j]`
    pub z: Vec<Vec<f64>>,
    /// First node at which each path is stopped (grid length - 1 if never).
    pub stop_index: Vec<usize>,
    pub scheme: Scheme,
    pub seed: Option<u64>,
    /// Standard error of the estimate of `Y_1` at each node.
    pub y_se: Vec<f64>,
    pub warnings: Vec<String>,
    /// Sup-distance between successive iterates (Picard only).
    pub iterate_distances: Vec<f64>,
    pub diverged: bool,
}

impl SolutionEnsemble {
    /// All-zero ensemble of `paths` rows.
    pub fn zeros(grid: Arc<TimeGrid>, k: usize, d: usize, paths: usize, scheme: Scheme) -> Self {
        let n = grid.len();
        Self {
            y: vec![vec![0.0; n * k]; paths],
            z: vec![vec![0.0; n * k * d]; paths],
            stop_index: vec![n - 1; paths],
            y_se: vec![0.0; n],
            grid,
            k,
            d,
            scheme,
            seed: None,
            warnings: Vec::new(),
            iterate_distances: Vec::new(),
            diverged: false,
        }
    }

    pub fn paths(&self) -> usize {
        self.y.len()
    }

    pub fn nodes(&self) -> usize {
        self.grid.len()
    }

    pub fn y_at(&self, path: usize, node: usize) -> &[f64] {
        &self.y[path][node * self.k..(node + 1) * self.k]
    }

    pub fn z_at(&self, path: usize, node: usize) -> &[f64] {
        let q = self.k * self.d;
        &self.z[path][node * q..(node + 1) * q]
    }

    /// Ensemble mean of component `i` of `Y` at `node`.
    pub fn mean_y(&self, node: usize, i: usize) -> f64 {
        let s: f64 = (0..self.paths()).map(|p| self.y_at(p, node)[i]).sum();
        s / self.paths() as f64
    }

    /// Estimate of `Y_0` (first component) with its standard error.
    pub fn y0(&self) -> (f64, f64) {
        (self.mean_y(0, 0), self.y_se[0])
    }

    pub fn sup_abs_y(&self) -> f64 {
        self.y
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    /// Ensemble mean path of component `i` of `Y`.
    pub fn mean_path(&self, i: usize) -> Vec<f64> {
        (0..self.nodes()).map(|j| self.mean_y(j, i)).collect()
    }

    /// Columnar snapshot: `path_id,node_time,Y_1..Y_k,Z_11..Z_kd,stopped_flag`,
    /// values with 12 significant digits, LF line endings.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let mut header = vec!["path_id".to_string(), "node_time".to_string()];
        header.extend((1..=self.k).map(|i| format!("Y_{i}")));
        for i in 1..=self.k {
            header.extend((1..=self.d).map(|j| format!("Z_{i}{j}")));
        }
        header.push("stopped_flag".into());
        writeln!(w, "{}", header.join(","))?;
        for p in 0..self.paths() {
            for (j, &t) in self.grid.nodes().iter().enumerate() {
                let mut row = format!("{p},{}", fmt12(t));
                for v in self.y_at(p, j).iter().chain(self.z_at(p, j)) {
                    row.push(',');
                    row.push_str(&fmt12(*v));
                }
                row.push_str(if j >= self.stop_index[p] { ",1" } else { ",0" });
                writeln!(w, "{row}")?;
            }
        }
        Ok(())
    }

    /// Checks the shape of every row against `k`, `d` and the grid.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes();
        if self.z.len() != self.y.len() || self.stop_index.len() != self.y.len() {
            return Err(structure("path counts of Y, Z and stop indices differ"));
        }
        if self.y.iter().any(|r| r.len() != n * self.k) || self.z.iter().any(|r| r.len() != n * self.k * self.d) {
            return Err(structure("solution rows do not match grid and dimensions"));
        }
        Ok(())
    }
}

/// 12 significant digits.
pub fn fmt12(x: f64) -> String {
    format!("{x:.11e}")
}
