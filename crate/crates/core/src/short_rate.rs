//! Affine short-rate diffusions under P, Q and the impacted measure Q̃.

use serde::{Deserialize, Serialize};

use crate::error::{finite, positive, Error, Result};
use crate::grid::TimeGrid;
use crate::interp::{ForwardCurve, Table1D};
use crate::mc::{gaussian_increments, par_map, RngStream};
use crate::quad::simpson;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Measure {
    P,
    Q,
    Qtilde,
}

/// Coefficient tables of a generic affine model:
/// dr = (b + β r) dt + sqrt(a + α r) dW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineTables {
    pub a: Table1D,
    pub alpha: Table1D,
    pub b: Table1D,
    pub beta: Table1D,
}

impl AffineTables {
    pub fn at(&self, t: f64) -> Result<[f64; 4]> {
        Ok([self.a.eval(t)?, self.alpha.eval(t)?, self.b.eval(t)?, self.beta.eval(t)?])
    }

    fn validate(&self) -> Result<()> {
        let alpha_zero = self.alpha.ys().iter().all(|&v| v == 0.0);
        let a_zero = self.a.ys().iter().all(|&v| v == 0.0);
        if alpha_zero && self.a.ys().iter().all(|&v| v >= 0.0) {
            return Ok(());
        }
        if a_zero
            && self.alpha.ys().iter().all(|&v| v >= 0.0)
            && self.b.ys().iter().all(|&v| v >= 0.0)
        {
            return Ok(());
        }
        Err(Error::param(
            "affine",
            "need either alpha = 0 and a >= 0, or a = 0 and alpha, b >= 0",
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelKind {
    Vasicek { k: f64, theta: f64, sigma: f64, r0: f64 },
    /// `shift` is subtracted from `a` in the dynamics; θ(t) stays fitted with `a`.
    HullWhite { a: f64, sigma: f64, r0: f64, curve: ForwardCurve, shift: f64 },
    GenericAffine { tables: AffineTables, r0: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortRateModel {
    pub kind: ModelKind,
    pub measure: Measure,
}

impl ShortRateModel {
    /// Vasicek dr = k(θ − r)dt + σ dW under Q.
    pub fn vasicek(k: f64, theta: f64, sigma: f64, r0: f64) -> Result<Self> {
        let m = Self { kind: ModelKind::Vasicek { k, theta, sigma, r0 }, measure: Measure::Q };
        m.validate()?;
        Ok(m)
    }

    /// Hull–White dr = (θ(t) − a r)dt + σ dW under Q, θ fitted to `curve`.
    pub fn hull_white(a: f64, sigma: f64, r0: f64, curve: ForwardCurve) -> Result<Self> {
        let m = Self {
            kind: ModelKind::HullWhite { a, sigma, r0, curve, shift: 0.0 },
            measure: Measure::Q,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn generic_affine(tables: AffineTables, r0: f64) -> Result<Self> {
        let m = Self { kind: ModelKind::GenericAffine { tables, r0 }, measure: Measure::Q };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            ModelKind::Vasicek { k, theta, sigma, r0 } => {
                positive("k", *k)?;
                finite("theta", *theta)?;
                finite("sigma", *sigma)?;
                finite("r0", *r0)?;
                if *sigma < 0.0 {
                    return Err(Error::param("sigma", format!("must be >= 0, got {sigma}")));
                }
            }
            ModelKind::HullWhite { a, sigma, r0, shift, .. } => {
                positive("a", *a)?;
                finite("sigma", *sigma)?;
                finite("r0", *r0)?;
                if *sigma < 0.0 {
                    return Err(Error::param("sigma", format!("must be >= 0, got {sigma}")));
                }
                positive("a", a - shift)?;
            }
            ModelKind::GenericAffine { tables, r0 } => {
                finite("r0", *r0)?;
                tables.validate()?;
            }
        }
        Ok(())
    }

    pub fn r0(&self) -> f64 {
        match &self.kind {
            ModelKind::Vasicek { r0, .. }
            | ModelKind::HullWhite { r0, .. }
            | ModelKind::GenericAffine { r0, .. } => *r0,
        }
    }

    pub fn with_r0(&self, r: f64) -> Self {
        let mut m = self.clone();
        match &mut m.kind {
            ModelKind::Vasicek { r0, .. }
            | ModelKind::HullWhite { r0, .. }
            | ModelKind::GenericAffine { r0, .. } => *r0 = r,
        }
        m
    }

    /// Constant volatility σ of the Gaussian models.
    pub fn sigma(&self) -> Option<f64> {
        match &self.kind {
            ModelKind::Vasicek { sigma, .. } | ModelKind::HullWhite { sigma, .. } => Some(*sigma),
            ModelKind::GenericAffine { .. } => None,
        }
    }

    /// Affine coefficients (a, α, b, β) at time t.
    pub fn coefficients(&self, t: f64) -> Result<[f64; 4]> {
        match &self.kind {
            ModelKind::Vasicek { k, theta, sigma, .. } => Ok([sigma * sigma, 0.0, k * theta, -k]),
            ModelKind::HullWhite { a, sigma, curve, shift, .. } => {
                let th = hull_white_theta(curve, *a, *sigma, t)?;
                Ok([sigma * sigma, 0.0, th, -(a - shift)])
            }
            ModelKind::GenericAffine { tables, .. } => tables.at(t),
        }
    }

    pub fn drift(&self, t: f64, r: f64) -> Result<f64> {
        let [_, _, b, beta] = self.coefficients(t)?;
        Ok(b + beta * r)
    }

    pub fn diffusion(&self, t: f64, r: f64) -> Result<f64> {
        let [a, alpha, _, _] = self.coefficients(t)?;
        Ok((a + alpha * r).max(0.0).sqrt())
    }

    /// Shift the mean reversion by σ·d, which is how a Girsanov kernel
    /// proportional to r acts on the Gaussian models.
    fn reparametrize(&self, d: f64, measure: Measure) -> Result<Self> {
        if d == 0.0 && !matches!(self.kind, ModelKind::GenericAffine { .. }) {
            return Ok(Self { kind: self.kind.clone(), measure });
        }
        let kind = match &self.kind {
            ModelKind::Vasicek { k, theta, sigma, r0 } => {
                let kt = k - sigma * d;
                if !(kt > 0.0) {
                    return Err(Error::MeasureTransform {
                        bound: format!("k > sigma*(lambda_tilde - lambda) violated: {k} <= {}", sigma * d),
                    });
                }
                ModelKind::Vasicek { k: kt, theta: k * theta / kt, sigma: *sigma, r0: *r0 }
            }
            ModelKind::HullWhite { a, sigma, r0, curve, shift } => {
                let s = shift + sigma * d;
                if !(a - s > 0.0) {
                    return Err(Error::MeasureTransform {
                        bound: format!("a_tilde = {} must be > 0", a - s),
                    });
                }
                ModelKind::HullWhite { a: *a, sigma: *sigma, r0: *r0, curve: curve.clone(), shift: s }
            }
            ModelKind::GenericAffine { .. } => {
                return Err(Error::UnsupportedModel("measure transforms need a Gaussian model".into()))
            }
        };
        Ok(Self { kind, measure })
    }

    /// The same model under P when the Q-kernel is λ(t) = λ r(t):
    /// the P drift is the Q drift minus σλr.
    pub fn real_world(&self, lambda: f64) -> Result<Self> {
        self.reparametrize(-lambda, Measure::P)
    }

    /// Mean reversion of a Gaussian model as seen in its dynamics (k̃ or ã).
    pub fn mean_reversion(&self) -> Option<f64> {
        match &self.kind {
            ModelKind::Vasicek { k, .. } => Some(*k),
            ModelKind::HullWhite { a, shift, .. } => Some(a - shift),
            ModelKind::GenericAffine { .. } => None,
        }
    }
}

/// Re-parametrize a Q model under Q̃: k̃ = k − σ(λ̃ − λ), θ̃ = kθ/k̃; ã = a − σ(λ̃ − λ).
pub fn apply_impacted_measure(model: &ShortRateModel, lambda: f64, lambda_tilde: f64) -> Result<ShortRateModel> {
    finite("lambda", lambda)?;
    finite("lambda_tilde", lambda_tilde)?;
    model.reparametrize(lambda_tilde - lambda, Measure::Qtilde)
}

/// θ(t) = ∂_T f^M(0,t) + a f^M(0,t) + σ²(1 − e^{−2at})/(2a).
pub fn hull_white_theta(curve: &ForwardCurve, a: f64, sigma: f64, t: f64) -> Result<f64> {
    let f = curve.forward(t)?;
    Ok(curve.slope(t)? + a * f + sigma * sigma * (1.0 - (-2.0 * a * t).exp()) / (2.0 * a))
}

/// α(t) = f^M(0,t) + σ²(1 − e^{−at})²/(2a²).
pub fn hull_white_alpha(curve: &ForwardCurve, a: f64, sigma: f64, t: f64) -> Result<f64> {
    let e = 1.0 - (-a * t).exp();
    Ok(curve.forward(t)? + sigma * sigma * e * e / (2.0 * a * a))
}

/// Conditional mean and variance of r(t) given r(s) = r_s.
pub fn analytic_moments(model: &ShortRateModel, s: f64, t: f64, r_s: f64) -> Result<(f64, f64)> {
    if t < s {
        return Err(Error::Domain(format!("need s <= t, got s={s}, t={t}")));
    }
    let h = t - s;
    match &model.kind {
        ModelKind::Vasicek { k, theta, sigma, .. } => {
            let e = (-k * h).exp();
            Ok((r_s * e + theta * (1.0 - e), sigma * sigma * (1.0 - e * e) / (2.0 * k)))
        }
        ModelKind::HullWhite { a, sigma, curve, shift, .. } => {
            let ae = a - shift;
            let e = (-ae * h).exp();
            let var = sigma * sigma * (1.0 - e * e) / (2.0 * ae);
            let mean = if *shift == 0.0 {
                r_s * e + hull_white_alpha(curve, *a, *sigma, t)? - hull_white_alpha(curve, *a, *sigma, s)? * e
            } else {
                r_s * e + hull_white_forced_mean(curve, *a, ae, *sigma, s, t)?
            };
            Ok((mean, var))
        }
        ModelKind::GenericAffine { .. } => {
            Err(Error::UnsupportedModel("analytic moments need Vasicek or Hull-White".into()))
        }
    }
}

/// ∫_s^t e^{−ã(t−u)} θ(u) du with θ fitted using `a`.
pub(crate) fn hull_white_forced_mean(
    curve: &ForwardCurve,
    a: f64,
    a_eff: f64,
    sigma: f64,
    s: f64,
    t: f64,
) -> Result<f64> {
    if t <= s {
        return Ok(0.0);
    }
    // validate support up front so the quadrature closure can unwrap
    hull_white_theta(curve, a, sigma, s)?;
    hull_white_theta(curve, a, sigma, t)?;
    let n = (((t - s) / 1e-3).ceil() as usize).max(16);
    Ok(simpson(s, t, n, |u| {
        (-a_eff * (t - u)).exp() * hull_white_theta(curve, a, sigma, u).unwrap_or(f64::NAN)
    }))
}

/// Per-node Euler coefficients: drift = c + d r, variance = va + vb r.
#[derive(Debug, Clone)]
pub(crate) struct EulerScheme {
    pub grid: TimeGrid,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub va: Vec<f64>,
    pub vb: Vec<f64>,
}

impl EulerScheme {
    pub fn new(model: &ShortRateModel, grid: TimeGrid) -> Result<Self> {
        model.validate()?;
        let n = grid.n_nodes();
        let (mut c, mut d, mut va, mut vb) =
            (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        for i in 0..n {
            let [a, alpha, b, beta] = model.coefficients(grid.time(i))?;
            c.push(b);
            d.push(beta);
            va.push(a);
            vb.push(alpha);
        }
        Ok(Self { grid, c, d, va, vb })
    }

    /// Euler–Maruyama path from `r_start` driven by `dw`.
    pub fn path(&self, r_start: f64, dw: &[f64]) -> Vec<f64> {
        let dt = self.grid.dt();
        let mut r = Vec::with_capacity(dw.len() + 1);
        let mut x = r_start;
        r.push(x);
        for (i, z) in dw.iter().enumerate() {
            let vol = (self.va[i] + self.vb[i] * x).max(0.0).sqrt();
            x += (self.c[i] + self.d[i] * x) * dt + vol * z;
            r.push(x);
        }
        r
    }

    pub fn sample(&self, r_start: f64, stream: RngStream) -> Result<(Vec<f64>, Vec<f64>)> {
        let dw = gaussian_increments(stream, self.grid.n_steps(), self.grid.dt())?;
        Ok((self.path(r_start, &dw), dw))
    }
}

/// Simulated short-rate paths on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub grid: TimeGrid,
    pub seed: u64,
    pub n_paths: usize,
    rates: Vec<f64>,
}

impl PathSet {
    /// r(t_i) along path `p`; stream id of path `p` is `p`.
    pub fn path(&self, p: usize) -> &[f64] {
        let n = self.grid.n_nodes();
        &self.rates[p * n..(p + 1) * n]
    }

    /// Values of every path at node `i`.
    pub fn column(&self, i: usize) -> Vec<f64> {
        (0..self.n_paths).map(|p| self.path(p)[i]).collect()
    }
}

/// Euler–Maruyama paths of `model` on `grid`; path `p` uses stream (seed, p).
pub fn simulate_short_rate(model: &ShortRateModel, grid: &TimeGrid, seed: u64, n_paths: usize) -> Result<PathSet> {
    if n_paths == 0 {
        return Err(Error::param("n_paths", "must be >= 1"));
    }
    let scheme = EulerScheme::new(model, *grid)?;
    let r0 = model.r0();
    let paths = par_map(n_paths, |p| scheme.sample(r0, RngStream::new(seed, p as u64)).map(|x| x.0));
    let mut rates = Vec::with_capacity(n_paths * grid.n_nodes());
    for p in paths {
        rates.extend(p?);
    }
    Ok(PathSet { grid: *grid, seed, n_paths, rates })
}
