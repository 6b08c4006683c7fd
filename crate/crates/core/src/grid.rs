//! Uniform space and time grids.

use crate::error::{param, Result};
use serde::{Deserialize, Serialize};

/// Uniform partition of [0, 1] into `m` subintervals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceGrid {
    pub m: usize,
}

impl SpaceGrid {
    pub fn new(m: usize) -> Result<Self> {
        if m < 2 {
            return param(format!("space grid needs at least 2 subintervals, got {m}"));
        }
        Ok(Self { m })
    }

    pub fn h(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn n_nodes(&self) -> usize {
        self.m + 1
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.m {
            1.0
        } else {
            i as f64 / self.m as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.m).map(|i| self.node(i)).collect()
    }

    /// Composite trapezoid weights on the nodes.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.h();
        let mut w = vec![h; self.m + 1];
        w[0] = 0.5 * h;
        w[self.m] = 0.5 * h;
        w
    }
}

/// Uniform partition of [0, T] into `n` steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub n: usize,
    pub t_final: f64,
}

impl TimeGrid {
    pub fn new(n: usize, t_final: f64) -> Result<Self> {
        if n < 2 {
            return param(format!("time grid needs at least 2 steps, got {n}"));
        }
        if !(t_final > 0.0) || !t_final.is_finite() {
            return param(format!("final time must be positive, got {t_final}"));
        }
        Ok(Self { n, t_final })
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.n as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        if j == self.n {
            self.t_final
        } else {
            j as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n).map(|j| self.time(j)).collect()
    }

    /// Index of the grid instant closest to `t`.
    pub fn index_of(&self, t: f64) -> usize {
        ((t / self.dt()).round().max(0.0) as usize).min(self.n)
    }

    /// Trapezoid weights for ∫ over [t_{j0}, t_{j1}] on the full index range 0..=n.
    pub fn trapezoid_weights(&self, j0: usize, j1: usize) -> Vec<f64> {
        let dt = self.dt();
        let mut w = vec![0.0; self.n + 1];
        if j1 > j0 {
            for wj in &mut w[j0..=j1] {
                *wj = dt;
            }
            w[j0] = 0.5 * dt;
            w[j1] = 0.5 * dt;
        }
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn space_nodes_exact_endpoints() {
        let g = SpaceGrid::new(7).unwrap();
        let x = g.nodes();
        assert_eq!(x[0], 0.0);
        assert_eq!(x[7], 1.0);
        assert!((g.trapezoid_weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(SpaceGrid::new(1).is_err());
    }

    #[test]
    fn time_weights_integrate_constants() {
        let tg = TimeGrid::new(10, 1.0).unwrap();
        let w = tg.trapezoid_weights(5, 10);
        assert!((w.iter().sum::<f64>() - 0.5).abs() < 1e-15);
        assert_eq!(tg.index_of(0.5), 5);
        assert_eq!(tg.time(10), 1.0);
        assert!(TimeGrid::new(1, 1.0).is_err());
        assert!(TimeGrid::new(4, 0.0).is_err());
    }
}
