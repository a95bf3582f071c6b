use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform time grid on `[t0, t1]` with `n_steps` intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t0: f64,
    t1: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, n_steps: usize) -> Result<Self> {
        if !t0.is_finite() || !t1.is_finite() {
            return Err(Error::Grid(format!("non-finite bounds [{t0}, {t1}]")));
        }
        if n_steps == 0 {
            return Err(Error::Grid("n_steps must be >= 1".into()));
        }
        if t1 <= t0 {
            return Err(Error::Grid(format!("dt <= 0 for [{t0}, {t1}]")));
        }
        Ok(Self { t0, t1, n_steps })
    }

    /// Grid of `n_steps` steps of size `dt` starting at `t0`.
    pub fn with_step(t0: f64, dt: f64, n_steps: usize) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Grid(format!("dt must be > 0, got {dt}")));
        }
        Self::new(t0, t0 + dt * n_steps as f64, n_steps)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / self.n_steps as f64
    }

    /// Node `i`; the last node is exactly `t1`.
    pub fn time(&self, i: usize) -> f64 {
        if i >= self.n_steps {
            self.t1
        } else {
            self.t0 + i as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_nodes()).map(|i| self.time(i)).collect()
    }

    /// Index of the node nearest to `t`, clamped to the grid.
    pub fn nearest(&self, t: f64) -> usize {
        let x = ((t - self.t0) / self.dt()).round();
        x.clamp(0.0, self.n_steps as f64) as usize
    }

    /// Grid refined by an integer factor.
    pub fn refined(&self, factor: usize) -> Self {
        Self { t0: self.t0, t1: self.t1, n_steps: self.n_steps * factor.max(1) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_nodes_and_exact_endpoint() {
        let g = TimeGrid::new(0.0, 1.0, 365).unwrap();
        assert_eq!(g.n_nodes(), 366);
        assert_eq!(g.time(0), 0.0);
        assert_eq!(g.time(365), 1.0);
        assert!((g.time(5) - 5.0 / 365.0).abs() < 1e-15);
        assert_eq!(g.nearest(11.0 / 365.0), 11);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(matches!(TimeGrid::new(1.0, 1.0, 10), Err(Error::Grid(_))));
        assert!(matches!(TimeGrid::new(0.0, 1.0, 0), Err(Error::Grid(_))));
        assert!(TimeGrid::with_step(0.0, -0.1, 3).is_err());
    }
}
