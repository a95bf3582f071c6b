//! Inventory, transient impact, impact kernels and impacted bond prices.

use serde::{Deserialize, Serialize};

use crate::affine::CouponSchedule;
use crate::error::{finite, positive, Error, Result};
use crate::grid::TimeGrid;
use crate::quad::gauss_legendre;

/// Impact kernel in t for a fixed maturity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Kernel {
    /// scale·(1 − t/T)^exponent, zero from T on.
    Power { scale: f64, exponent: f64, maturity: f64 },
    Constant { value: f64 },
}

impl Kernel {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Kernel::Power { scale, exponent, maturity } => {
                let u = (1.0 - t / maturity).max(0.0);
                scale * u.powf(exponent)
            }
            Kernel::Constant { value } => value,
        }
    }

    pub fn deriv(&self, t: f64) -> f64 {
        match *self {
            Kernel::Power { scale, exponent, maturity } => {
                let u = (1.0 - t / maturity).max(0.0);
                if exponent == 1.0 {
                    if t < maturity { -scale / maturity } else { 0.0 }
                } else {
                    -scale * exponent / maturity * u.powf(exponent - 1.0)
                }
            }
            Kernel::Constant { .. } => 0.0,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Kernel::Constant { .. })
    }

    /// c with self = c·other, when both share a shape.
    fn ratio_to(&self, other: &Kernel) -> Option<f64> {
        match (*self, *other) {
            (
                Kernel::Power { scale: a, exponent: ea, maturity: ta },
                Kernel::Power { scale: b, exponent: eb, maturity: tb },
            ) if ea == eb && ta == tb => Some(a / b),
            (Kernel::Constant { value: a }, Kernel::Constant { value: b }) => Some(a / b),
            _ => None,
        }
    }

    fn validate(&self, name: &'static str) -> Result<()> {
        match *self {
            Kernel::Power { scale, exponent, maturity } => {
                positive(name, scale)?;
                positive(name, maturity)?;
                if !(exponent >= 1.0) {
                    return Err(Error::param(name, format!("exponent >= 1 required (kernel family), got {exponent}")));
                }
            }
            Kernel::Constant { value } => {
                positive(name, value)?;
            }
        }
        Ok(())
    }
}

/// Kernels l, K, transient parameters and the traded maturity / horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpactSpec {
    pub l: Kernel,
    pub k: Kernel,
    pub rho: f64,
    pub gamma: f64,
    pub y: f64,
    pub maturity: f64,
    pub tau: f64,
}

impl ImpactSpec {
    /// l = κ(1 − t/T)^α, K = (1 − t/T)^β.
    #[allow(clippy::too_many_arguments)]
    pub fn power_law(kappa: f64, alpha: f64, beta: f64, rho: f64, gamma: f64, y: f64, maturity: f64, tau: f64) -> Result<Self> {
        let s = Self {
            l: Kernel::Power { scale: kappa, exponent: alpha, maturity },
            k: Kernel::Power { scale: 1.0, exponent: beta, maturity },
            rho,
            gamma,
            y,
            maturity,
            tau,
        };
        s.validate()?;
        Ok(s)
    }

    /// Time-constant kernels l ≡ l0 and K ≡ k0.
    #[allow(clippy::too_many_arguments)]
    pub fn constant(l0: f64, k0: f64, rho: f64, gamma: f64, y: f64, maturity: f64, tau: f64) -> Result<Self> {
        let s = Self {
            l: Kernel::Constant { value: l0 },
            k: Kernel::Constant { value: k0 },
            rho,
            gamma,
            y,
            maturity,
            tau,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.l.validate("l")?;
        self.k.validate("K")?;
        positive("rho", self.rho)?;
        positive("gamma", self.gamma)?;
        finite("y", self.y)?;
        if self.y < 0.0 {
            return Err(Error::param("y", format!("must be >= 0, got {}", self.y)));
        }
        positive("T", self.maturity)?;
        positive("tau", self.tau)?;
        if self.tau >= self.maturity {
            return Err(Error::param("tau", format!("tau must be < traded maturity ({} >= {})", self.tau, self.maturity)));
        }
        Ok(())
    }

    pub fn with_rho(&self, rho: f64) -> Self {
        Self { rho, ..*self }
    }

    /// Same kernels re-anchored at another maturity (power kernels follow it).
    pub fn with_maturity(&self, maturity: f64) -> Self {
        let move_to = |k: Kernel| match k {
            Kernel::Power { scale, exponent, .. } => Kernel::Power { scale, exponent, maturity },
            c => c,
        };
        Self { l: move_to(self.l), k: move_to(self.k), maturity, ..*self }
    }
}

/// v(t) = Σ c_j (t − t0)^j on [t0, t1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub t0: f64,
    pub t1: f64,
    pub coeffs: Vec<f64>,
}

impl Piece {
    fn eval(&self, t: f64) -> f64 {
        let s = t - self.t0;
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c)
    }

    fn deriv(&self, t: f64) -> f64 {
        let s = t - self.t0;
        self.coeffs.iter().enumerate().skip(1).rev().fold(0.0, |acc, (j, &c)| acc * s + j as f64 * c)
    }

    fn antideriv(&self, t: f64) -> f64 {
        let s = t - self.t0;
        self.coeffs
            .iter()
            .enumerate()
            .rev()
            .fold(0.0, |acc, (j, &c)| acc * s + c / (j + 1) as f64)
            * s
    }

    fn nth_deriv(&self, n: usize, t: f64) -> f64 {
        let s = t - self.t0;
        let mut acc = 0.0;
        for j in (n..self.coeffs.len()).rev() {
            let mut f = 1.0;
            for m in 0..n {
                f *= (j - m) as f64;
            }
            acc = acc * s + f * self.coeffs[j];
        }
        acc
    }

    /// Coefficients re-expanded around a new origin.
    fn shifted(&self, origin: f64) -> Vec<f64> {
        let n = self.coeffs.len();
        let mut out = vec![0.0; n];
        let mut fact = 1.0;
        for (m, o) in out.iter_mut().enumerate() {
            if m > 0 {
                fact *= m as f64;
            }
            *o = self.nth_deriv(m, origin) / fact;
        }
        out
    }

    /// ∫_c^d e^{−ρ(d−s)} v(s) ds for [c, d] inside the piece.
    fn exp_integral(&self, rho: f64, c: f64, d: f64) -> f64 {
        let h = d - c;
        if h <= 0.0 {
            return 0.0;
        }
        if rho * h > 1.0 {
            let e = (-rho * h).exp();
            let mut acc = 0.0;
            let mut sign = 1.0;
            let mut pw = rho;
            for j in 0..self.coeffs.len() {
                acc += sign * (self.nth_deriv(j, d) - e * self.nth_deriv(j, c)) / pw;
                sign = -sign;
                pw *= rho;
            }
            acc
        } else {
            gauss_legendre(c, d, |s| (-rho * (d - s)).exp() * self.eval(s))
        }
    }
}

/// Deterministic trading speed; positive = selling, zero outside its pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedSchedule {
    pieces: Vec<Piece>,
}

impl SpeedSchedule {
    pub fn new(pieces: Vec<Piece>) -> Result<Self> {
        for p in &pieces {
            if !(p.t1 > p.t0) || !p.t0.is_finite() || !p.t1.is_finite() {
                return Err(Error::Input(format!("empty or non-finite piece [{}, {})", p.t0, p.t1)));
            }
            if p.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::Input("non-finite polynomial coefficient".into()));
            }
        }
        if pieces.windows(2).any(|w| w[1].t0 < w[0].t1) {
            return Err(Error::Input("schedule pieces overlap or are unordered".into()));
        }
        if pieces.first().is_some_and(|p| p.t0 < 0.0) {
            return Err(Error::Input("schedule starts before 0".into()));
        }
        Ok(Self { pieces })
    }

    pub fn zero() -> Self {
        Self { pieces: Vec::new() }
    }

    /// v ≡ c on [0, τ].
    pub fn constant(c: f64, tau: f64) -> Result<Self> {
        positive("tau", tau)?;
        Self::new(vec![Piece { t0: 0.0, t1: tau, coeffs: vec![finite("c", c)?] }])
    }

    /// Piecewise-constant: `values[i]` on [times[i], times[i+1]).
    pub fn piecewise_constant(times: &[f64], values: &[f64]) -> Result<Self> {
        if times.len() != values.len() + 1 {
            return Err(Error::Input("need one more breakpoint than values".into()));
        }
        Self::new(
            values
                .iter()
                .enumerate()
                .map(|(i, &v)| Piece { t0: times[i], t1: times[i + 1], coeffs: vec![v] })
                .collect(),
        )
    }

    /// Linear interpolation of `values` sampled at `times`.
    pub fn piecewise_linear(times: &[f64], values: &[f64]) -> Result<Self> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(Error::Input("need matching samples, at least two".into()));
        }
        Self::new(
            (0..times.len() - 1)
                .map(|i| {
                    let h = times[i + 1] - times[i];
                    Piece { t0: times[i], t1: times[i + 1], coeffs: vec![values[i], (values[i + 1] - values[i]) / h] }
                })
                .collect(),
        )
    }

    /// Σ w_i v_i on the union of breakpoints.
    pub fn combine(weights: &[f64], schedules: &[&SpeedSchedule]) -> Result<Self> {
        if weights.len() != schedules.len() {
            return Err(Error::Input("weights and schedules differ in length".into()));
        }
        let mut bps: Vec<f64> = schedules.iter().flat_map(|s| s.pieces.iter().flat_map(|p| [p.t0, p.t1])).collect();
        bps.sort_by(f64::total_cmp);
        bps.dedup();
        let mut pieces = Vec::new();
        for w in bps.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = 0.5 * (a + b);
            let mut coeffs: Vec<f64> = Vec::new();
            for (&wt, s) in weights.iter().zip(schedules) {
                if let Some(p) = s.piece_at(mid) {
                    let c = p.shifted(a);
                    if coeffs.len() < c.len() {
                        coeffs.resize(c.len(), 0.0);
                    }
                    for (x, y) in coeffs.iter_mut().zip(c) {
                        *x += wt * y;
                    }
                }
            }
            if !coeffs.is_empty() {
                pieces.push(Piece { t0: a, t1: b, coeffs });
            }
        }
        Self::new(pieces)
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// End of the last piece (0 for the zero schedule).
    pub fn horizon(&self) -> f64 {
        self.pieces.last().map_or(0.0, |p| p.t1)
    }

    fn piece_at(&self, t: f64) -> Option<&Piece> {
        let i = self.pieces.partition_point(|p| p.t1 <= t);
        match self.pieces.get(i) {
            Some(p) if p.t0 <= t => Some(p),
            _ => self.pieces.last().filter(|p| t == p.t1),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.piece_at(t).map_or(0.0, |p| p.eval(t))
    }

    pub fn deriv(&self, t: f64) -> f64 {
        self.piece_at(t).map_or(0.0, |p| p.deriv(t))
    }

    /// Exact ∫_a^b v.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        self.pieces
            .iter()
            .map(|p| {
                let (lo, hi) = (a.max(p.t0), b.min(p.t1));
                if hi > lo { p.antideriv(hi) - p.antideriv(lo) } else { 0.0 }
            })
            .sum()
    }

    /// Exact ∫_a^b e^{−ρ(b−s)} v(s) ds.
    pub fn exp_integral(&self, rho: f64, a: f64, b: f64) -> f64 {
        self.pieces
            .iter()
            .map(|p| {
                let (lo, hi) = (a.max(p.t0), b.min(p.t1));
                if hi > lo { (-rho * (b - hi)).exp() * p.exp_integral(rho, lo, hi) } else { 0.0 }
            })
            .sum()
    }

    pub fn is_constant_sign(&self) -> bool {
        let mut pos = false;
        let mut neg = false;
        for p in &self.pieces {
            for t in [p.t0, 0.5 * (p.t0 + p.t1), p.t1] {
                let v = p.eval(t);
                pos |= v > 0.0;
                neg |= v < 0.0;
            }
        }
        !(pos && neg)
    }
}

/// X(t) = x − ∫₀ᵗ v.
pub fn inventory(x: f64, v: &SpeedSchedule, grid: &TimeGrid) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.n_nodes());
    let mut acc = x - v.integral(0.0, grid.time(0));
    out.push(acc);
    for i in 0..grid.n_steps() {
        acc -= v.integral(grid.time(i), grid.time(i + 1));
        out.push(acc);
    }
    out
}

/// Υ(t) = y e^{−ρt} + γ∫₀ᵗ e^{−ρ(t−s)} v(s) ds on the grid, exact per polynomial piece.
pub fn transient_impact(v: &SpeedSchedule, spec: &ImpactSpec, grid: &TimeGrid) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.n_nodes());
    let t0 = grid.time(0);
    let mut u = spec.y * (-spec.rho * t0).exp() + spec.gamma * v.exp_integral(spec.rho, 0.0, t0);
    out.push(u);
    for i in 0..grid.n_steps() {
        let (a, b) = (grid.time(i), grid.time(i + 1));
        u = u * (-spec.rho * (b - a)).exp() + spec.gamma * v.exp_integral(spec.rho, a, b);
        out.push(u);
    }
    out
}

fn check_before_maturity(spec: &ImpactSpec, grid: &TimeGrid) -> Result<()> {
    if grid.t1() > spec.maturity + 1e-12 {
        return Err(Error::Domain(format!("grid ends at {} after the maturity {}", grid.t1(), spec.maturity)));
    }
    Ok(())
}

/// I_T(t) = l(t,T) v(t) + K(t,T) Υ(t).
pub fn overall_impact(v: &SpeedSchedule, spec: &ImpactSpec, grid: &TimeGrid) -> Result<Vec<f64>> {
    check_before_maturity(spec, grid)?;
    let ups = transient_impact(v, spec, grid);
    Ok((0..grid.n_nodes())
        .map(|i| {
            let t = grid.time(i);
            spec.l.eval(t) * v.eval(t) + spec.k.eval(t) * ups[i]
        })
        .collect())
}

/// J_T = ∂l·v + l·∂v + ∂K·Υ + K(−ρΥ + γv); v' is the derivative of the active piece.
pub fn impact_density(v: &SpeedSchedule, spec: &ImpactSpec, grid: &TimeGrid) -> Result<Vec<f64>> {
    check_before_maturity(spec, grid)?;
    let ups = transient_impact(v, spec, grid);
    Ok((0..grid.n_nodes())
        .map(|i| {
            let t = grid.time(i);
            let (vt, dv) = (v.eval(t), v.deriv(t));
            spec.l.deriv(t) * vt
                + spec.l.eval(t) * dv
                + spec.k.deriv(t) * ups[i]
                + spec.k.eval(t) * (-spec.rho * ups[i] + spec.gamma * vt)
        })
        .collect())
}

/// Impacted price path with the first node where it stopped being positive.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpactedPath {
    pub prices: Vec<f64>,
    pub degenerate_at: Option<usize>,
}

impl ImpactedPath {
    pub fn is_degenerate(&self) -> bool {
        self.degenerate_at.is_some()
    }
}

/// P̃ = P − I on the grid.
pub fn impacted_zcb(p: &[f64], v: &SpeedSchedule, spec: &ImpactSpec, grid: &TimeGrid) -> Result<ImpactedPath> {
    if p.len() != grid.n_nodes() {
        return Err(Error::Input(format!("price path has {} nodes, grid has {}", p.len(), grid.n_nodes())));
    }
    let imp = overall_impact(v, spec, grid)?;
    let prices: Vec<f64> = p.iter().zip(&imp).map(|(a, b)| a - b).collect();
    let degenerate_at = prices.iter().position(|&x| !(x > 0.0));
    Ok(ImpactedPath { prices, degenerate_at })
}

/// P̃ = P − I(0) − ∫₀ᵗ J by the trapezoid rule (the differential form).
pub fn impacted_zcb_integral_form(p: &[f64], v: &SpeedSchedule, spec: &ImpactSpec, grid: &TimeGrid) -> Result<Vec<f64>> {
    let j = impact_density(v, spec, grid)?;
    let i0 = overall_impact(v, spec, &TimeGrid::new(grid.t0(), grid.t0() + grid.dt(), 1)?)?[0];
    let h = grid.dt();
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(p.len());
    for (i, &pi) in p.iter().enumerate() {
        if i > 0 {
            acc += 0.5 * h * (j[i - 1] + j[i]);
        }
        out.push(pi - i0 - acc);
    }
    Ok(out)
}

/// Σ c_i P̃(t,T_i) + N P̃(t,T_n).
pub fn impacted_coupon_bond(schedule: &CouponSchedule, t: f64, p_tilde: &[f64]) -> Result<f64> {
    schedule.combine(t, p_tilde)
}

/// Aggregated kernel K^B(t) and the speed weights defining v^B(t, ·).
#[derive(Debug, Clone, PartialEq)]
pub struct CouponAggregate {
    pub t: f64,
    pub kappa: f64,
    pub k_b: f64,
    /// v^B(t, s) = Σ weights_i v_{T_i}(s).
    pub weights: Vec<f64>,
    /// Aggregated initial transient state.
    pub y_b: f64,
}

/// K^B = Σ c_i K(t,T_i) + N K(t,T_n) and the K-weighted average speed, for l = κK.
pub fn coupon_aggregates(schedule: &CouponSchedule, specs: &[ImpactSpec], t: f64) -> Result<CouponAggregate> {
    let n = schedule.payments().len();
    if specs.len() != n {
        return Err(Error::Input(format!("need {n} impact specs, got {}", specs.len())));
    }
    let kappa = specs[0]
        .l
        .ratio_to(&specs[0].k)
        .ok_or_else(|| Error::UnsupportedModel("coupon aggregation requires l = kappa*K (alpha = beta)".into()))?;
    for s in specs {
        let r = s.l.ratio_to(&s.k);
        if r.is_none_or(|r| (r - kappa).abs() > 1e-12 * kappa.abs()) {
            return Err(Error::UnsupportedModel("coupon aggregation requires l = kappa*K with a common kappa".into()));
        }
        if s.rho != specs[0].rho || s.gamma != specs[0].gamma {
            return Err(Error::UnsupportedModel("coupon aggregation requires common rho and gamma".into()));
        }
    }
    let mut mass: Vec<f64> = schedule
        .payments()
        .iter()
        .zip(specs)
        .map(|(&(ti, c), s)| if ti >= t { c * s.k.eval(t) } else { 0.0 })
        .collect();
    mass[n - 1] += schedule.notional() * specs[n - 1].k.eval(t);
    let k_b: f64 = mass.iter().sum();
    if !(k_b > 0.0) {
        return Err(Error::Domain(format!("aggregated kernel vanishes at t={t}")));
    }
    let weights: Vec<f64> = mass.iter().map(|m| m / k_b).collect();
    let y_b = weights.iter().zip(specs).map(|(w, s)| w * s.y).sum();
    Ok(CouponAggregate { t, kappa, k_b, weights, y_b })
}

impl CouponAggregate {
    /// v^B(t, s).
    pub fn speed(&self, speeds: &[SpeedSchedule], s: f64) -> f64 {
        self.weights.iter().zip(speeds).map(|(w, v)| w * v.eval(s)).sum()
    }

    /// B̃(t) = B(t) − κK^B v^B(t,t) − K^B(y^B e^{−ρt} + γ∫₀ᵗ e^{−ρ(t−s)} v^B(t,s) ds).
    pub fn impacted_price(&self, unimpacted: f64, speeds: &[SpeedSchedule], rho: f64, gamma: f64) -> Result<f64> {
        let refs: Vec<&SpeedSchedule> = speeds.iter().collect();
        let vb = SpeedSchedule::combine(&self.weights, &refs)?;
        let t = self.t;
        let ups = self.y_b * (-rho * t).exp() + gamma * vb.exp_integral(rho, 0.0, t);
        Ok(unimpacted - self.kappa * self.k_b * vb.eval(t) - self.k_b * ups)
    }
}
