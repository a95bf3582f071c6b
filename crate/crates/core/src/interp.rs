use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-linear function given by samples at strictly increasing abscissae.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1D {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Table1D {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Input(format!("table has {} abscissae and {} values", x.len(), y.len())));
        }
        if x.is_empty() {
            return Err(Error::Input("empty table".into()));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Input("table contains non-finite entries".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Input("table abscissae must be strictly increasing".into()));
        }
        Ok(Self { x, y })
    }

    pub fn constant(value: f64, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo, hi], vec![value, value])
    }

    pub fn xs(&self) -> &[f64] {
        &self.x
    }

    pub fn ys(&self) -> &[f64] {
        &self.y
    }

    pub fn lo(&self) -> f64 {
        self.x[0]
    }

    pub fn hi(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    pub fn covers(&self, t: f64) -> bool {
        t >= self.lo() - 1e-12 && t <= self.hi() + 1e-12
    }

    fn bracket(&self, t: f64) -> usize {
        // index i with x[i] <= t < x[i+1], clamped to the last interval
        let n = self.x.len();
        match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            p if p >= n => n.saturating_sub(2),
            p => p - 1,
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !self.covers(t) {
            return Err(Error::Interpolation(format!(
                "t={t} outside table support [{}, {}]",
                self.lo(),
                self.hi()
            )));
        }
        if self.x.len() == 1 {
            return Ok(self.y[0]);
        }
        let i = self.bracket(t);
        let (x0, x1) = (self.x[i], self.x[i + 1]);
        let w = ((t - x0) / (x1 - x0)).clamp(0.0, 1.0);
        Ok(self.y[i] + w * (self.y[i + 1] - self.y[i]))
    }

    /// Exact integral of the interpolant over `[a, b]`.
    pub fn integral(&self, a: f64, b: f64) -> Result<f64> {
        if a > b {
            return Ok(-self.integral(b, a)?);
        }
        if !self.covers(a) || !self.covers(b) {
            return Err(Error::Interpolation(format!(
                "integral over [{a}, {b}] leaves support [{}, {}]",
                self.lo(),
                self.hi()
            )));
        }
        let mut acc = 0.0;
        let mut lo = a;
        while lo < b {
            let i = self.bracket(lo);
            let hi = if i + 1 < self.x.len() { self.x[i + 1].min(b) } else { b };
            let hi = if hi <= lo { b } else { hi };
            acc += 0.5 * (hi - lo) * (self.eval(lo)? + self.eval(hi)?);
            lo = hi;
        }
        Ok(acc)
    }

    /// Local node spacing around `t`.
    pub fn spacing_at(&self, t: f64) -> f64 {
        if self.x.len() < 2 {
            return 0.0;
        }
        let i = self.bracket(t);
        self.x[i + 1] - self.x[i]
    }
}

/// Market instantaneous forward curve f^M(0, ·) sampled on a maturity grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardCurve {
    table: Table1D,
}

impl ForwardCurve {
    pub fn new(maturities: Vec<f64>, forwards: Vec<f64>) -> Result<Self> {
        let table = Table1D::new(maturities, forwards)?;
        if table.xs().len() < 3 {
            return Err(Error::Input("forward curve needs at least 3 nodes".into()));
        }
        if table.lo() > 0.0 {
            return Err(Error::Input(format!("forward curve must start at 0, starts at {}", table.lo())));
        }
        Ok(Self { table })
    }

    /// Curve sampled from a closure on `[0, hi]` with `n` intervals.
    pub fn from_fn(hi: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let xs: Vec<f64> = (0..=n).map(|i| hi * i as f64 / n as f64).collect();
        let ys = xs.iter().map(|&x| f(x)).collect();
        Self::new(xs, ys)
    }

    pub fn table(&self) -> &Table1D {
        &self.table
    }

    pub fn horizon(&self) -> f64 {
        self.table.hi()
    }

    pub fn forward(&self, t: f64) -> Result<f64> {
        self.table.eval(t)
    }

    /// P^M(0, T) = exp(-∫₀ᵀ f^M).
    pub fn discount(&self, t: f64) -> Result<f64> {
        Ok((-self.table.integral(0.0, t)?).exp())
    }

    /// ∂_T f^M(0, t): centered difference at the native spacing, one-sided at the ends.
    pub fn slope(&self, t: f64) -> Result<f64> {
        if !self.table.covers(t) {
            return Err(Error::Interpolation(format!(
                "t={t} outside forward curve support [0, {}]",
                self.horizon()
            )));
        }
        let h = self.table.spacing_at(t);
        let (lo, hi) = (self.table.lo(), self.table.hi());
        if t - h >= lo - 1e-12 && t + h <= hi + 1e-12 {
            let a = self.table.eval((t - h).max(lo))?;
            let b = self.table.eval((t + h).min(hi))?;
            Ok((b - a) / (2.0 * h))
        } else if t + h <= hi + 1e-12 {
            Ok((self.table.eval((t + h).min(hi))? - self.table.eval(t)?) / h)
        } else {
            Ok((self.table.eval(t)? - self.table.eval((t - h).max(lo))?) / h)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_interpolation_and_support() {
        let t = Table1D::new(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 0.0]).unwrap();
        assert_eq!(t.eval(0.5).unwrap(), 1.0);
        assert_eq!(t.eval(2.0).unwrap(), 1.0);
        assert_eq!(t.eval(3.0).unwrap(), 0.0);
        assert!(matches!(t.eval(3.5), Err(Error::Interpolation(_))));
        assert!((t.integral(0.0, 3.0).unwrap() - 3.0).abs() < 1e-15);
        assert!((t.integral(0.5, 2.0).unwrap() - (0.75 + 1.5)).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(Table1D::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(Table1D::new(vec![0.0], vec![1.0, 2.0]).is_err());
        assert!(Table1D::new(vec![0.0, 1.0], vec![f64::NAN, 2.0]).is_err());
    }

    #[test]
    fn forward_curve_discount_and_slope() {
        let c = ForwardCurve::from_fn(10.0, 1000, |t| 0.02 + 0.001 * t).unwrap();
        let p: f64 = c.discount(5.0).unwrap();
        assert!((p - (-(0.02f64 * 5.0 + 0.0005 * 25.0)).exp()).abs() < 1e-14);
        assert!((c.slope(3.3).unwrap() - 0.001).abs() < 1e-12);
        assert!((c.slope(0.0).unwrap() - 0.001).abs() < 1e-12);
        assert!((c.slope(10.0).unwrap() - 0.001).abs() < 1e-12);
        assert!(c.slope(10.5).is_err());
    }
}
