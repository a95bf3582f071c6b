//! Optimal execution of a zero-coupon bond position under temporary and transient impact.
//!
//! The state (X, Υ, v, Z) solves a linear forward-backward system whose fundamental
//! matrix Φ gives the feedback coefficients. Solutions are checked against a
//! brute-force quadratic program and the first-order condition.

use nalgebra::{DMatrix, DVector, Matrix4};
use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};
use crate::grid::TimeGrid;
use crate::impact::{ImpactSpec, Kernel};
use crate::interp::Table1D;
use crate::quad::gauss_legendre;

/// Price of the traded bond: a martingale, or a deterministic drift μ(t).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PriceModel {
    Martingale { p0: f64 },
    DeterministicDrift { p0: f64, drift: Table1D },
}

impl PriceModel {
    pub fn p0(&self) -> f64 {
        match self {
            PriceModel::Martingale { p0 } | PriceModel::DeterministicDrift { p0, .. } => *p0,
        }
    }

    fn mu(&self, t: f64) -> f64 {
        match self {
            PriceModel::Martingale { .. } => 0.0,
            PriceModel::DeterministicDrift { drift, .. } => drift.eval(t).unwrap_or(0.0),
        }
    }

    /// E[P(t)] = P(0) + ∫₀ᵗ μ.
    fn mean(&self, t: f64) -> f64 {
        match self {
            PriceModel::Martingale { p0 } => *p0,
            PriceModel::DeterministicDrift { p0, drift } => p0 + drift.integral(0.0, t).unwrap_or(0.0),
        }
    }

    fn is_martingale(&self) -> bool {
        match self {
            PriceModel::Martingale { .. } => true,
            PriceModel::DeterministicDrift { drift, .. } => drift.ys().iter().all(|&m| m == 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExecutionProblem {
    /// Initial inventory.
    pub x: f64,
    pub tau: f64,
    /// Running inventory penalty φ.
    pub phi: f64,
    /// Terminal inventory penalty ϱ.
    pub varrho: f64,
    pub impact: ImpactSpec,
    pub price: PriceModel,
}

impl ExecutionProblem {
    pub fn validate(&self) -> Result<()> {
        self.impact.validate()?;
        positive("tau", self.tau)?;
        if self.tau != self.impact.tau {
            return Err(Error::param("tau", "execution horizon must equal the impact spec horizon"));
        }
        if !self.x.is_finite() {
            return Err(Error::param("x", "must be finite"));
        }
        if !(self.phi >= 0.0) || !self.phi.is_finite() {
            return Err(Error::param("phi", format!("must be >= 0, got {}", self.phi)));
        }
        if !(self.varrho >= 0.0) || !self.varrho.is_finite() {
            return Err(Error::param("varrho", format!("must be >= 0, got {}", self.varrho)));
        }
        positive("p0", self.price.p0())?;
        if let PriceModel::DeterministicDrift { drift, .. } = &self.price {
            if drift.lo() > 0.0 || drift.hi() < self.tau {
                return Err(Error::param("drift", "drift table must cover [0, tau]"));
            }
        }
        // l is monotone for the implemented kernel families, so the ends bound it.
        let lmin = self.l(0.0).min(self.l(self.tau));
        if !(lmin > 0.0) {
            return Err(Error::param("l", "temporary impact must stay positive on [0, tau]"));
        }
        Ok(())
    }

    fn l(&self, t: f64) -> f64 {
        self.impact.l.eval(t)
    }

    fn k(&self, t: f64) -> f64 {
        self.impact.k.eval(t)
    }

    /// (Λ, Λ′) with Λ = 1/(2l).
    fn lambda_pair(&self, t: f64) -> (f64, f64) {
        let l = self.l(t);
        (0.5 / l, -0.5 * self.impact.l.deriv(t) / (l * l))
    }

    fn constant_kernels(&self) -> bool {
        self.impact.l.is_constant() && self.impact.k.is_constant()
    }

    fn terminal_row(&self) -> [f64; 4] {
        let lt = self.l(self.tau);
        [self.varrho / lt, -self.k(self.tau) / (2.0 * lt), -1.0, 0.0]
    }
}

/// Λ(t) = 1/(2l(t,T)) for t in [0, τ].
pub fn lambda_fn(t: f64, spec: &ImpactSpec) -> Result<f64> {
    if !(0.0..=spec.tau).contains(&t) {
        return Err(Error::Domain(format!("t = {t} outside [0, {}]", spec.tau)));
    }
    let l = spec.l.eval(t);
    if !(l > 0.0) {
        return Err(Error::Domain(format!("l({t}) = {l} is not positive")));
    }
    Ok(0.5 / l)
}

/// The 4×4 system matrix for the state (X, Υ, v, Z).
pub fn build_a(t: f64, p: &ExecutionProblem) -> Matrix4<f64> {
    let (lam, dlam) = p.lambda_pair(t);
    let (k, dk) = (p.k(t), p.impact.k.deriv(t));
    let (rho, gamma) = (p.impact.rho, p.impact.gamma);
    #[rustfmt::skip]
    let a = Matrix4::new(
        0.0, 0.0, -1.0, 0.0,
        0.0, -rho, gamma, 0.0,
        -2.0 * p.phi * lam, rho * k * lam - dlam * k - lam * dk, 0.0, dlam + rho * lam,
        0.0, 0.0, k * gamma, rho,
    );
    a
}

/// Φ on the grid nodes: Φ(0) = Id, Φ′ = AΦ, classical RK4.
pub fn fundamental_solution(p: &ExecutionProblem, grid: &TimeGrid) -> Result<Vec<Matrix4<f64>>> {
    let mut out = Vec::with_capacity(grid.n_nodes());
    let mut phi = Matrix4::identity();
    out.push(phi);
    let h = grid.dt();
    for i in 0..grid.n_steps() {
        let t = grid.time(i);
        let a0 = build_a(t, p);
        let am = build_a(t + 0.5 * h, p);
        let a1 = build_a(t + h, p);
        let k1 = a0 * phi;
        let k2 = am * (phi + k1 * (0.5 * h));
        let k3 = am * (phi + k2 * (0.5 * h));
        let k4 = a1 * (phi + k3 * h);
        phi += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        let det = phi.determinant();
        // tr A = 0, so Liouville predicts det Φ ≡ 1.
        if !(det.abs() > 1e-12) {
            return Err(Error::Conditioning(format!("det Φ({}) = {det:e}, expected 1", grid.time(i + 1))));
        }
        out.push(phi);
    }
    Ok(out)
}

/// Which composition of Φ is used for Ψ(t, τ).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsiForm {
    /// Ψ(t,τ) = Φ(τ)Φ⁻¹(t), the propagator carrying the state from t to τ.
    #[default]
    Propagator,
    /// Ψ(t,τ) = Φ⁻¹(τ)Φ(t).
    Reversed,
}

/// Ψ(t,τ) from Φ(t) and Φ(τ) by a linear solve.
pub fn psi(phi_t: &Matrix4<f64>, phi_tau: &Matrix4<f64>, form: PsiForm) -> Result<Matrix4<f64>> {
    let singular = || Error::Conditioning("singular fundamental matrix".into());
    match form {
        PsiForm::Propagator => {
            // Ψ Φ(t) = Φ(τ)  ⇔  Φ(t)ᵀ Ψᵀ = Φ(τ)ᵀ
            let y = phi_t.transpose().lu().solve(&phi_tau.transpose()).ok_or_else(singular)?;
            Ok(y.transpose())
        }
        PsiForm::Reversed => phi_tau.lu().solve(phi_t).ok_or_else(singular),
    }
}

/// G_j = (ϱ/l(τ))Ψ^{1j} − (K(τ)/2l(τ))Ψ^{2j} − Ψ^{3j}.
pub fn g_vector(p: &ExecutionProblem, psi: &Matrix4<f64>) -> [f64; 4] {
    let c = p.terminal_row();
    let mut g = [0.0; 4];
    for (j, gj) in g.iter_mut().enumerate() {
        *gj = (0..4).map(|i| c[i] * psi[(i, j)]).sum();
    }
    g
}

/// (v₀, v₁, v₂, v₃) of the linear feedback.
pub fn feedback_coeffs(g: &[f64; 4], psi: &Matrix4<f64>) -> Result<[f64; 4]> {
    let (p41, p42, p43, p44) = (psi[(3, 0)], psi[(3, 1)], psi[(3, 2)], psi[(3, 3)]);
    if g[2] == 0.0 || p44 == 0.0 {
        return Err(Error::Admissibility("G³ or Ψ⁴⁴ vanishes".into()));
    }
    let denom = 1.0 - g[3] * p43 / (g[2] * p44);
    if denom == 0.0 {
        return Err(Error::Admissibility("G⁴Ψ⁴³ − G³Ψ⁴⁴ vanishes".into()));
    }
    let r = g[3] / (g[2] * p44);
    Ok([1.0 / denom, r * p41 - g[0] / g[2], r * p42 - g[1] / g[2], g[3] / g[2]])
}

/// Numerical margins of the admissibility assumptions over a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    /// inf |G⁴Ψ⁴³ − G³Ψ⁴⁴| and where it is attained.
    pub a1_inf: f64,
    pub a1_at: f64,
    pub a2_psi4_sup: [f64; 4],
    pub a2_g_sup: [f64; 4],
    pub a3_psi44_inf: f64,
    pub a3_g3_inf: f64,
    pub a3_at: f64,
    pub ok: bool,
    /// First time where a quantity that must stay away from zero changes sign or vanishes.
    pub offending: Option<(String, f64)>,
}

/// Coefficients on a uniform grid of [0, τ].
#[derive(Debug, Clone)]
pub struct CoefficientTable {
    pub times: Vec<f64>,
    pub phi: Vec<Matrix4<f64>>,
    pub psi: Vec<Matrix4<f64>>,
    pub g: Vec<[f64; 4]>,
    /// Feedback coefficients; NaN where they are undefined.
    pub v: Vec<[f64; 4]>,
    pub det_error: f64,
}

pub fn coefficient_table(p: &ExecutionProblem, n_steps: usize, form: PsiForm) -> Result<CoefficientTable> {
    p.validate()?;
    let grid = TimeGrid::new(0.0, p.tau, n_steps)?;
    let phi = fundamental_solution(p, &grid)?;
    let det_error = phi.iter().fold(0.0f64, |m, f| m.max((f.determinant() - 1.0).abs()));
    let last = *phi.last().unwrap();
    let psi: Vec<Matrix4<f64>> = phi.iter().map(|f| psi(f, &last, form)).collect::<Result<_>>()?;
    let g: Vec<[f64; 4]> = psi.iter().map(|m| g_vector(p, m)).collect();
    let v = g.iter().zip(&psi).map(|(g, m)| feedback_coeffs(g, m).unwrap_or([f64::NAN; 4])).collect();
    Ok(CoefficientTable { times: grid.times(), phi, psi, g, v, det_error })
}

/// Inf/sup margins of the admissibility assumptions on the table's grid.
pub fn check_admissibility(table: &CoefficientTable) -> AdmissibilityReport {
    let n = table.times.len();
    let a1: Vec<f64> = (0..n).map(|i| table.g[i][3] * table.psi[i][(3, 2)] - table.g[i][2] * table.psi[i][(3, 3)]).collect();
    let p44: Vec<f64> = (0..n).map(|i| table.psi[i][(3, 3)]).collect();
    let g3: Vec<f64> = (0..n).map(|i| table.g[i][2]).collect();
    let argmin = |xs: &[f64]| {
        xs.iter().enumerate().fold((f64::INFINITY, 0usize), |(m, k), (i, x)| if x.abs() < m { (x.abs(), i) } else { (m, k) })
    };
    let (a1_inf, i1) = argmin(&a1);
    let (p44_inf, ip) = argmin(&p44);
    let (g3_inf, ig) = argmin(&g3);
    let mut a2_psi4_sup = [0.0f64; 4];
    let mut a2_g_sup = [0.0f64; 4];
    for i in 0..n {
        for j in 0..4 {
            a2_psi4_sup[j] = a2_psi4_sup[j].max(table.psi[i][(3, j)].abs());
            a2_g_sup[j] = a2_g_sup[j].max(table.g[i][j].abs());
        }
    }
    let mut offending = None;
    'scan: for i in 0..n {
        for (name, xs) in [("G4*Psi43 - G3*Psi44", &a1), ("Psi44", &p44), ("G3", &g3)] {
            let crossed = i > 0 && xs[i].signum() != xs[i - 1].signum();
            if !(xs[i].abs() > 1e-12) || crossed {
                offending = Some((name.to_string(), table.times[i]));
                break 'scan;
            }
        }
    }
    let bounded = a2_psi4_sup.iter().chain(&a2_g_sup).all(|x| x.is_finite());
    let a3_at = if p44_inf <= g3_inf { table.times[ip] } else { table.times[ig] };
    AdmissibilityReport {
        a1_inf,
        a1_at: table.times[i1],
        a2_psi4_sup,
        a2_g_sup,
        a3_psi44_inf: p44_inf,
        a3_g3_inf: g3_inf,
        a3_at,
        ok: offending.is_none() && bounded,
        offending,
    }
}

/// The five terms of the performance functional and their total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObjectiveBreakdown {
    /// ∫ E[P] v
    pub price_term: f64,
    /// ∫ K Υ v
    pub transient_cost: f64,
    /// ∫ l v²
    pub temporary_cost: f64,
    /// X(τ) E[P(τ)]
    pub terminal_value: f64,
    /// φ ∫ X²
    pub running_penalty: f64,
    /// ϱ X(τ)²
    pub terminal_penalty: f64,
    pub total: f64,
}

impl ObjectiveBreakdown {
    fn new(price_term: f64, transient_cost: f64, temporary_cost: f64, terminal_value: f64, running_penalty: f64, terminal_penalty: f64) -> Self {
        let total = price_term - transient_cost - temporary_cost + terminal_value - running_penalty - terminal_penalty;
        Self { price_term, transient_cost, temporary_cost, terminal_value, running_penalty, terminal_penalty, total }
    }
}

/// Composite Simpson on uniform samples (even number of intervals).
fn simpson_samples(ys: &[f64], h: f64) -> f64 {
    let n = ys.len() - 1;
    debug_assert!(n % 2 == 0);
    let mut acc = ys[0] + ys[n];
    for (i, y) in ys.iter().enumerate().take(n).skip(1) {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * y;
    }
    acc * h / 3.0
}

/// ∫_{t_i}^{τ} of uniform samples, trapezoid.
fn tail_integrals(ys: &[f64], h: f64) -> Vec<f64> {
    let n = ys.len();
    let mut out = vec![0.0; n];
    for i in (0..n - 1).rev() {
        out[i] = out[i + 1] + 0.5 * h * (ys[i] + ys[i + 1]);
    }
    out
}

/// Z(s) = −∫_s^τ K(t) e^{−ρ(t−s)} γ v(t) dt by backward recursion, trapezoid per step.
fn z_explicit(p: &ExecutionProblem, times: &[f64], v: &[f64]) -> Vec<f64> {
    let n = times.len();
    let h = times[1] - times[0];
    let (rho, gamma) = (p.impact.rho, p.impact.gamma);
    let e = (-rho * h).exp();
    let mut z = vec![0.0; n];
    for i in (0..n - 1).rev() {
        let a = p.k(times[i]) * gamma * v[i];
        let b = p.k(times[i + 1]) * gamma * v[i + 1] * e;
        z[i] = e * z[i + 1] - 0.5 * h * (a + b);
    }
    z
}

fn residual_from_states(p: &ExecutionProblem, times: &[f64], v: &[f64], x: &[f64], ups: &[f64]) -> Vec<f64> {
    let n = times.len();
    let h = times[1] - times[0];
    let z = z_explicit(p, times, v);
    let ix = tail_integrals(x, h);
    let xt = x[n - 1];
    let pt = p.price.mean(p.tau);
    (0..n)
        .map(|i| {
            let t = times[i];
            let mu_tail = pt - p.price.mean(t);
            -p.k(t) * ups[i] + z[i] - 2.0 * p.l(t) * v[i] + 2.0 * p.phi * ix[i] + 2.0 * p.varrho * xt - mu_tail
        })
        .collect()
}

/// X and Υ from a sampled speed on a uniform grid (trapezoid in each step).
fn states_from_speed(p: &ExecutionProblem, h: f64, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (rho, gamma) = (p.impact.rho, p.impact.gamma);
    let e = (-rho * h).exp();
    let mut x = vec![p.x; v.len()];
    let mut u = vec![p.impact.y; v.len()];
    for i in 1..v.len() {
        x[i] = x[i - 1] - 0.5 * h * (v[i - 1] + v[i]);
        u[i] = e * u[i - 1] + gamma * 0.5 * h * (e * v[i - 1] + v[i]);
    }
    (x, u)
}

/// First-order-condition residual
/// E[P(s)] − E[P(τ)] − KΥ + Z − 2lv + 2φ∫_s^τ X + 2ϱX(τ) for a speed sampled on a
/// uniform grid of [0, τ].
pub fn foc_residual(p: &ExecutionProblem, v: &[f64]) -> Result<Vec<f64>> {
    p.validate()?;
    if v.len() < 2 {
        return Err(Error::Input("need at least two samples".into()));
    }
    let grid = TimeGrid::new(0.0, p.tau, v.len() - 1)?;
    let (x, u) = states_from_speed(p, grid.dt(), v);
    Ok(residual_from_states(p, &grid.times(), v, &x, &u))
}

/// Performance functional of a speed sampled on a uniform grid with an even number
/// of intervals (Simpson).
pub fn objective(p: &ExecutionProblem, v: &[f64]) -> Result<ObjectiveBreakdown> {
    p.validate()?;
    if v.len() < 3 || (v.len() - 1) % 2 != 0 {
        return Err(Error::Input("need an even number of intervals".into()));
    }
    let grid = TimeGrid::new(0.0, p.tau, v.len() - 1)?;
    let (x, u) = states_from_speed(p, grid.dt(), v);
    Ok(objective_from_states(p, &grid.times(), v, &x, &u))
}

fn objective_from_states(p: &ExecutionProblem, times: &[f64], v: &[f64], x: &[f64], u: &[f64]) -> ObjectiveBreakdown {
    let h = times[1] - times[0];
    let n = times.len();
    let col = |f: &dyn Fn(usize) -> f64| simpson_samples(&(0..n).map(f).collect::<Vec<_>>(), h);
    let price = col(&|i| p.price.mean(times[i]) * v[i]);
    let transient = col(&|i| p.k(times[i]) * u[i] * v[i]);
    let temporary = col(&|i| p.l(times[i]) * v[i] * v[i]);
    let running = p.phi * col(&|i| x[i] * x[i]);
    let xt = x[n - 1];
    ObjectiveBreakdown::new(price, transient, temporary, xt * p.price.mean(p.tau), running, p.varrho * xt * xt)
}

/// Exact integrals of the problem's coefficients over one interval.
struct Cell {
    h: f64,
    l: f64,
    k: f64,
    /// ∫ K(t) e^{−ρ(t−a)} dt
    f: f64,
    /// ∫ E[P]
    p: f64,
}

fn cells(p: &ExecutionProblem, n: usize) -> Vec<Cell> {
    let h = p.tau / n as f64;
    let rho = p.impact.rho;
    (0..n)
        .map(|k| {
            let a = k as f64 * h;
            let b = if k + 1 == n { p.tau } else { a + h };
            let quad = |f: &dyn Fn(f64) -> f64| gauss_legendre(a, b, f);
            let kconst = match p.impact.k {
                Kernel::Constant { value } => Some(value),
                _ => None,
            };
            let f = match kconst {
                Some(c) => -c * (-rho * (b - a)).exp_m1() / rho,
                None => quad(&|t| p.k(t) * (-rho * (t - a)).exp()),
            };
            Cell {
                h: b - a,
                l: quad(&|t| p.l(t)),
                k: quad(&|t| p.k(t)),
                f,
                p: if p.price.is_martingale() { p.price.p0() * (b - a) } else { quad(&|t| p.price.mean(t)) },
            }
        })
        .collect()
}

/// Exact functional of a piecewise-constant speed with `values.len()` equal pieces on [0, τ].
pub fn piecewise_objective(p: &ExecutionProblem, values: &[f64]) -> Result<ObjectiveBreakdown> {
    p.validate()?;
    if values.is_empty() {
        return Err(Error::Input("need at least one piece".into()));
    }
    let cs = cells(p, values.len());
    let (rho, gamma) = (p.impact.rho, p.impact.gamma);
    let (mut price, mut transient, mut temporary, mut running) = (0.0, 0.0, 0.0, 0.0);
    let mut x = p.x;
    let mut u = p.impact.y;
    for (c, &v) in cs.iter().zip(values) {
        price += v * c.p;
        transient += v * (u * c.f + gamma * v / rho * (c.k - c.f));
        temporary += v * v * c.l;
        running += p.phi * (x * x * c.h - x * v * c.h * c.h + v * v * c.h.powi(3) / 3.0);
        let e = (-rho * c.h).exp();
        u = u * e - gamma * v * (-rho * c.h).exp_m1() / rho;
        x -= v * c.h;
    }
    Ok(ObjectiveBreakdown::new(price, transient, temporary, x * p.price.mean(p.tau), running, p.varrho * x * x))
}

/// Maximizer of the functional over piecewise-constant speeds on `n_steps` pieces:
/// the functional is const + bᵀv − vᵀSv, assembled exactly, and 2Sv = b is solved
/// by Cholesky.
pub fn brute_force_qp(p: &ExecutionProblem, n_steps: usize) -> Result<(Vec<f64>, f64)> {
    p.validate()?;
    if n_steps == 0 || n_steps > 2000 {
        return Err(Error::Input(format!("n_steps must be in 1..=2000, got {n_steps}")));
    }
    let n = n_steps;
    let cs = cells(p, n);
    let (rho, gamma, phi, vr, x, y) = (p.impact.rho, p.impact.gamma, p.phi, p.varrho, p.x, p.impact.y);
    let pt = p.price.mean(p.tau);
    let mut s = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);
    let a: Vec<f64> = (0..n).map(|k| k as f64 * p.tau / n as f64).collect();
    for k in 0..n {
        let c = &cs[k];
        b[k] += c.p - c.h * pt;
        s[(k, k)] += c.l;
        // transient: Υ on cell k from y, earlier cells and the cell itself
        b[k] -= y * (-rho * a[k]).exp() * c.f;
        s[(k, k)] += gamma / rho * (c.k - c.f);
        for j in 0..k {
            let bj = a[j] + cs[j].h;
            let q = -gamma / rho * (-rho * cs[j].h).exp_m1() * (-rho * (a[k] - bj)).exp() * c.f;
            s[(k, j)] += 0.5 * q;
            s[(j, k)] += 0.5 * q;
        }
        // running penalty on cell k: φ[c² h − c v h² + v² h³/3], c = x − Σ_{j<k} h_j v_j
        let hk = c.h;
        b[k] += phi * x * hk * hk;
        s[(k, k)] += phi * hk.powi(3) / 3.0;
        for j in 0..k {
            b[j] += 2.0 * phi * x * hk * cs[j].h;
            let q = phi * hk * hk * cs[j].h;
            s[(k, j)] += 0.5 * q;
            s[(j, k)] += 0.5 * q;
        }
    }
    // φ h_k Σ_{i,j<k} h_i h_j v_i v_j, accumulated via suffix sums of h.
    let mut suffix = vec![0.0; n + 1];
    for k in (0..n).rev() {
        suffix[k] = suffix[k + 1] + cs[k].h;
    }
    for i in 0..n {
        for j in 0..n {
            let m = i.max(j);
            s[(i, j)] += phi * cs[i].h * cs[j].h * suffix[m + 1] + vr * cs[i].h * cs[j].h;
        }
        b[i] += 2.0 * vr * x * cs[i].h;
    }
    let constant = x * pt - phi * x * x * p.tau - vr * x * x;
    let chol = (s.clone() * 2.0)
        .cholesky()
        .ok_or_else(|| Error::ProblemData("quadratic form is not negative definite (functional not concave)".into()))?;
    let v = chol.solve(&b);
    let value = constant + 0.5 * b.dot(&v);
    Ok((v.iter().copied().collect(), value))
}

/// One row of the coefficient output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoeffRow {
    pub t: f64,
    pub v: [f64; 4],
    pub g: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExecutionSolution {
    pub times: Vec<f64>,
    pub v: Vec<f64>,
    pub x: Vec<f64>,
    pub upsilon: Vec<f64>,
    pub z: Vec<f64>,
    pub objective: ObjectiveBreakdown,
    pub coeffs: Vec<CoeffRow>,
    pub admissibility: AdmissibilityReport,
    pub foc_sup_residual: f64,
    /// sup |Z from its explicit integral − Z from the propagator identity|.
    pub z_consistency: f64,
    /// |v̂(τ) − (ϱ/l)X(τ) + (K/2l)Υ(τ)|
    pub terminal_identity_error: f64,
    pub det_error: f64,
    pub picard_iterations: usize,
    /// Relative change of the objective when the step is halved.
    pub refinement_change: Option<f64>,
    /// Speed on the internal fine grid (4 substeps per output step).
    pub fine_times: Vec<f64>,
    pub fine_v: Vec<f64>,
}

const PICARD_TOL: f64 = 1e-9;
const PICARD_MAX: usize = 200;

struct Path {
    x: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
}

/// Closed-loop forward integration on the fine grid; RK4 over pairs of fine steps,
/// odd nodes filled by cubic Hermite interpolation.
fn closed_loop(p: &ExecutionProblem, tab: &CoefficientTable, e1: &[f64], e2: &[f64]) -> Path {
    let m = tab.times.len();
    let h = tab.times[1] - tab.times[0];
    let (rho, gamma) = (p.impact.rho, p.impact.gamma);
    let speed = |c: usize, x: f64, u: f64| {
        let w = tab.v[c];
        w[0] * (w[1] * x + w[2] * u + w[3] * e1[c] - e2[c])
    };
    let rhs = |c: usize, x: f64, u: f64| {
        let v = speed(c, x, u);
        (-v, -rho * u + gamma * v)
    };
    let mut x = vec![0.0; m];
    let mut u = vec![0.0; m];
    x[0] = p.x;
    u[0] = p.impact.y;
    let hh = 2.0 * h;
    let mut c = 0;
    while c + 2 < m {
        let (x0, u0) = (x[c], u[c]);
        let k1 = rhs(c, x0, u0);
        let k2 = rhs(c + 1, x0 + 0.5 * hh * k1.0, u0 + 0.5 * hh * k1.1);
        let k3 = rhs(c + 1, x0 + 0.5 * hh * k2.0, u0 + 0.5 * hh * k2.1);
        let k4 = rhs(c + 2, x0 + hh * k3.0, u0 + hh * k3.1);
        x[c + 2] = x0 + hh / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        u[c + 2] = u0 + hh / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        let d1 = rhs(c + 2, x[c + 2], u[c + 2]);
        x[c + 1] = 0.5 * (x0 + x[c + 2]) + hh / 8.0 * (k1.0 - d1.0);
        u[c + 1] = 0.5 * (u0 + u[c + 2]) + hh / 8.0 * (k1.1 - d1.1);
        c += 2;
    }
    let v = (0..m).map(|c| speed(c, x[c], u[c])).collect();
    Path { x, u, v }
}

/// E-terms ∫_t^τ ΛΨ⁴³(μ+Γ)/Ψ⁴⁴(t) and ∫_t^τ ΛG³(μ+Γ)/G³(t) on the fine grid.
fn e_terms(p: &ExecutionProblem, tab: &CoefficientTable, x: Option<&[f64]>) -> (Vec<f64>, Vec<f64>) {
    let m = tab.times.len();
    let h = tab.times[1] - tab.times[0];
    let gam: Vec<f64> = match x {
        Some(x) => {
            let ix = tail_integrals(x, h);
            let pt = p.price.mean(p.tau);
            (0..m)
                .map(|c| {
                    let t = tab.times[c];
                    let (lam, dlam) = p.lambda_pair(t);
                    dlam / lam * (2.0 * p.phi * ix[c] + 2.0 * p.varrho * x[m - 1] - (pt - p.price.mean(t)))
                })
                .collect()
        }
        None => vec![0.0; m],
    };
    let drive: Vec<f64> = (0..m).map(|c| p.price.mu(tab.times[c]) + gam[c]).collect();
    let lam: Vec<f64> = tab.times.iter().map(|&t| p.lambda_pair(t).0).collect();
    let i1 = tail_integrals(&(0..m).map(|c| lam[c] * tab.psi[c][(3, 2)] * drive[c]).collect::<Vec<_>>(), h);
    let i2 = tail_integrals(&(0..m).map(|c| lam[c] * tab.g[c][2] * drive[c]).collect::<Vec<_>>(), h);
    let e1 = (0..m).map(|c| i1[c] / tab.psi[c][(3, 3)]).collect();
    let e2 = (0..m).map(|c| i2[c] / tab.g[c][2]).collect();
    (e1, e2)
}

/// Solve with Ψ = Φ(τ)Φ⁻¹(t); see [`solve_execution_with`].
pub fn solve_execution(p: &ExecutionProblem, grid: &TimeGrid) -> Result<ExecutionSolution> {
    solve_execution_with(p, grid, PsiForm::Propagator)
}

/// Optimal schedule from the linear feedback, reported on `grid` (which must be [0, τ]).
/// Coefficients live on a grid four times finer; with time-varying kernels or a
/// drifting price the expectation terms are resolved by Picard iteration.
pub fn solve_execution_with(p: &ExecutionProblem, grid: &TimeGrid, form: PsiForm) -> Result<ExecutionSolution> {
    let mut sol = solve_inner(p, grid, form)?;
    let fine = TimeGrid::new(0.0, p.tau, 2 * grid.n_steps())?;
    let finer = solve_inner(p, &fine, form)?;
    sol.refinement_change = Some(((finer.objective.total - sol.objective.total) / sol.objective.total.abs().max(1e-300)).abs());
    Ok(sol)
}

fn solve_inner(p: &ExecutionProblem, grid: &TimeGrid, form: PsiForm) -> Result<ExecutionSolution> {
    p.validate()?;
    if grid.t0() != 0.0 || (grid.t1() - p.tau).abs() > 1e-12 * p.tau {
        return Err(Error::Grid(format!("execution grid must span [0, {}]", p.tau)));
    }
    let sub = 4;
    let tab = coefficient_table(p, sub * grid.n_steps(), form)?;
    let adm = check_admissibility(&tab);
    if !adm.ok {
        let (what, t) = adm.offending.clone().unwrap_or(("unbounded coefficients".into(), f64::NAN));
        return Err(Error::Admissibility(format!("{what} vanishes or changes sign at t = {t}")));
    }
    let deterministic_gamma = p.constant_kernels();
    let (e1, e2) = e_terms(p, &tab, None);
    let mut path = closed_loop(p, &tab, &e1, &e2);
    let mut iterations = 0;
    if !(deterministic_gamma && p.price.is_martingale()) {
        let mut prev_diff = f64::INFINITY;
        loop {
            iterations += 1;
            if iterations > PICARD_MAX {
                return Err(Error::Regime(format!(
                    "Picard iteration did not converge in {PICARD_MAX} steps; try a shorter horizon or constant kernels"
                )));
            }
            let (e1, e2) = e_terms(p, &tab, if deterministic_gamma { None } else { Some(&path.x) });
            let mut next = closed_loop(p, &tab, &e1, &e2);
            let diff = next.v.iter().zip(&path.v).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if diff > prev_diff {
                for (n, o) in next.x.iter_mut().zip(&path.x) {
                    *n = 0.5 * (*n + o);
                }
                for (n, o) in next.v.iter_mut().zip(&path.v) {
                    *n = 0.5 * (*n + o);
                }
                for (n, o) in next.u.iter_mut().zip(&path.u) {
                    *n = 0.5 * (*n + o);
                }
            }
            path = next;
            if diff < PICARD_TOL || deterministic_gamma {
                break;
            }
            prev_diff = diff;
        }
    }
    let (e1, _) = e_terms(p, &tab, if deterministic_gamma { None } else { Some(&path.x) });
    let times = &tab.times;
    let m = times.len();
    let residual = residual_from_states(p, times, &path.v, &path.x, &path.u);
    let foc_sup = residual.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    let z = z_explicit(p, times, &path.v);
    let z_consistency = (0..m)
        .map(|c| {
            let s = &tab.psi[c];
            let zp = -(s[(3, 0)] * path.x[c] + s[(3, 1)] * path.u[c] + s[(3, 2)] * path.v[c]) / s[(3, 3)] - e1[c];
            (zp - z[c]).abs()
        })
        .fold(0.0f64, f64::max);
    let tr = p.terminal_row();
    let terminal_identity_error = (path.v[m - 1] - (tr[0] * path.x[m - 1] + tr[1] * path.u[m - 1])).abs();
    let objective = objective_from_states(p, times, &path.v, &path.x, &path.u);
    let pick = |xs: &[f64]| (0..grid.n_nodes()).map(|i| xs[i * sub]).collect::<Vec<_>>();
    let coeffs = (0..grid.n_nodes()).map(|i| CoeffRow { t: grid.time(i), v: tab.v[i * sub], g: tab.g[i * sub] }).collect();
    Ok(ExecutionSolution {
        times: grid.times(),
        v: pick(&path.v),
        x: pick(&path.x),
        upsilon: pick(&path.u),
        z: pick(&z),
        objective,
        coeffs,
        admissibility: adm,
        foc_sup_residual: foc_sup,
        z_consistency,
        terminal_identity_error,
        det_error: tab.det_error,
        picard_iterations: iterations,
        refinement_change: None,
        fine_times: tab.times.clone(),
        fine_v: path.v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn benchmark() -> ExecutionProblem {
        let tau = 10.0 / 365.0;
        ExecutionProblem {
            x: 2.0,
            tau,
            phi: 0.1,
            varrho: 1.0,
            impact: ImpactSpec::constant(0.01, 0.01, 2.0, 1.0, 0.0, 5.0, tau).unwrap(),
            price: PriceModel::Martingale { p0: 0.9 },
        }
    }

    fn power(phi: f64, varrho: f64) -> ExecutionProblem {
        let tau = 10.0 / 365.0;
        ExecutionProblem {
            x: 2.0,
            tau,
            phi,
            varrho,
            impact: ImpactSpec::power_law(0.01, 1.0, 1.0, 2.0, 1.0, 0.0, 5.0, tau).unwrap(),
            price: PriceModel::Martingale { p0: 0.9 },
        }
    }

    #[test]
    fn lambda_examples() {
        let p = power(0.1, 1.0);
        assert_eq!(lambda_fn(0.0, &p.impact).unwrap(), 50.0);
        assert!(lambda_fn(p.tau, &p.impact).unwrap().is_finite());
        assert!(lambda_fn(p.tau + 0.1, &p.impact).is_err());
        assert_eq!(lambda_fn(0.01, &benchmark().impact).unwrap(), 50.0);
    }

    #[test]
    fn system_matrix_rows() {
        let p = benchmark();
        let a = build_a(0.01, &p);
        assert_eq!(a.row(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0, -1.0, 0.0]);
        assert_eq!(a.row(1).iter().copied().collect::<Vec<_>>(), vec![0.0, -2.0, 1.0, 0.0]);
        let lam = 50.0;
        let r3: Vec<f64> = a.row(2).iter().copied().collect();
        assert_eq!(r3, vec![-2.0 * 0.1 * lam, 2.0 * 0.01 * lam, 0.0, 2.0 * lam]);
        assert_eq!(a.trace(), 0.0);
        let mut q = benchmark();
        q.phi = 0.0;
        assert_eq!(build_a(0.0, &q), build_a(0.02, &q));
        let pp = power(0.1, 1.0);
        assert_eq!(build_a(0.01, &pp).row(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0, -1.0, 0.0]);
    }

    #[test]
    fn constant_system_matches_matrix_exponential() {
        let p = benchmark();
        let grid = TimeGrid::new(0.0, p.tau, 400).unwrap();
        let phi = fundamental_solution(&p, &grid).unwrap();
        let a = build_a(0.0, &p);
        for i in [100, 250, 400] {
            let exact = (a * grid.time(i)).exp();
            assert!((phi[i] - exact).amax() < 1e-8 * exact.amax(), "i={i}");
        }
        assert!(phi.iter().all(|f| (f.determinant() - 1.0).abs() < 1e-8));
    }

    #[test]
    fn zero_matrix_flow_is_identity() {
        let id = Matrix4::<f64>::identity();
        let g = Matrix4::new(2.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 3.0);
        assert_eq!(psi(&id, &id, PsiForm::Propagator).unwrap(), id);
        assert!((psi(&g, &g, PsiForm::Propagator).unwrap() - id).amax() < 1e-15);
        assert!((psi(&g, &g, PsiForm::Reversed).unwrap() - id).amax() < 1e-15);
    }

    #[test]
    fn propagator_cocycle() {
        let p = power(0.1, 1.0);
        let tab = coefficient_table(&p, 400, PsiForm::Propagator).unwrap();
        for (s, t) in [(100, 50), (300, 10), (399, 200)] {
            // Ψ(t,τ) = Ψ(s,τ) Φ(s) Φ⁻¹(t)
            let flow = tab.phi[s] * tab.phi[t].try_inverse().unwrap();
            let lhs = tab.psi[t];
            let rhs = tab.psi[s] * flow;
            assert!((lhs - rhs).amax() < 1e-8 * lhs.amax());
        }
        assert!(tab.det_error < 1e-8);
    }

    #[test]
    fn terminal_values_of_g_and_coefficients() {
        let p = power(0.1, 1.0);
        let tab = coefficient_table(&p, 200, PsiForm::Propagator).unwrap();
        let last = tab.g.len() - 1;
        let lt = p.l(p.tau);
        let kt = p.k(p.tau);
        let g = tab.g[last];
        assert!((g[0] - 1.0 / lt).abs() < 1e-12 * g[0].abs());
        assert!((g[1] + kt / (2.0 * lt)).abs() < 1e-12);
        assert!((g[2] + 1.0).abs() < 1e-14 && g[3].abs() < 1e-14);
        let v = tab.v[last];
        assert!((v[0] - 1.0).abs() < 1e-14 && v[3].abs() < 1e-14);
        assert!((v[1] - 1.0 / lt).abs() < 1e-10 && (v[2] + kt / (2.0 * lt)).abs() < 1e-12);
        let mut q = p.clone();
        q.varrho = 0.0;
        let t0 = coefficient_table(&q, 10, PsiForm::Propagator).unwrap();
        assert!(t0.g[10][0].abs() < 1e-14);
    }

    #[test]
    fn g_is_grid_converged() {
        let p = benchmark();
        let a = coefficient_table(&p, 200, PsiForm::Propagator).unwrap();
        let b = coefficient_table(&p, 400, PsiForm::Propagator).unwrap();
        for i in 0..=200 {
            for j in 0..4 {
                assert!((a.g[i][j] - b.g[2 * i][j]).abs() < 1e-6 * (1.0 + b.g[2 * i][j].abs()));
            }
        }
    }

    #[test]
    fn nothing_to_trade() {
        let mut p = benchmark();
        p.x = 0.0;
        let sol = solve_execution(&p, &TimeGrid::new(0.0, p.tau, 100).unwrap()).unwrap();
        assert!(sol.v.iter().all(|&v| v == 0.0));
        assert_eq!(sol.objective.total, 0.0);
        let (v, j) = brute_force_qp(&p, 50).unwrap();
        assert!(v.iter().all(|x| x.abs() < 1e-12) && j.abs() < 1e-12);
        let mut q = p.clone();
        q.phi = 0.0;
        q.varrho = 0.0;
        assert!(foc_residual(&q, &vec![0.0; 11]).unwrap().iter().all(|&r| r == 0.0));
    }

    #[test]
    fn idle_objective_is_book_value_minus_penalties() {
        let p = benchmark();
        let o = piecewise_objective(&p, &[0.0; 7]).unwrap();
        let want = 2.0 * 0.9 - 0.1 * 4.0 * p.tau - 4.0;
        assert!((o.total - want).abs() < 1e-14);
        let s = objective(&p, &[0.0; 9]).unwrap();
        assert!((s.total - want).abs() < 1e-14);
        let mut q = p.clone();
        q.phi = 0.0;
        q.varrho = 0.0;
        assert_eq!(piecewise_objective(&q, &[0.0; 3]).unwrap().total, 2.0 * 0.9);
    }

    #[test]
    fn doubling_l_doubles_temporary_cost() {
        let p = benchmark();
        let mut q = p.clone();
        q.impact.l = Kernel::Constant { value: 0.02 };
        let v = [30.0, 50.0, 70.0, 20.0];
        let a = piecewise_objective(&p, &v).unwrap();
        let b = piecewise_objective(&q, &v).unwrap();
        assert!((b.temporary_cost - 2.0 * a.temporary_cost).abs() < 1e-12 * a.temporary_cost);
        assert_eq!(a.transient_cost, b.transient_cost);
    }

    #[test]
    fn qp_assembly_matches_direct_evaluation() {
        let p = power(0.3, 0.7);
        let mut p = p;
        p.impact.y = 0.02;
        let (v, j) = brute_force_qp(&p, 40).unwrap();
        let direct = piecewise_objective(&p, &v).unwrap().total;
        assert!((j - direct).abs() < 1e-12 * j.abs(), "{j} vs {direct}");
        let mut w = v.clone();
        w[7] += 0.5;
        assert!(piecewise_objective(&p, &w).unwrap().total < j);
    }

    #[test]
    fn benchmark_matches_oracle() {
        let p = benchmark();
        let sol = solve_execution(&p, &TimeGrid::new(0.0, p.tau, 500).unwrap()).unwrap();
        let (_, jstar) = brute_force_qp(&p, 500).unwrap();
        let gap = (sol.objective.total - jstar).abs() / jstar.abs();
        assert!(gap < 1e-3, "gap {gap}");
        assert!(jstar <= sol.objective.total + 1e-9);
        assert!(sol.foc_sup_residual < 1e-6 * 0.9, "foc {}", sol.foc_sup_residual);
        assert!(sol.terminal_identity_error < 1e-8);
        assert!(sol.z_consistency < 1e-6, "z {}", sol.z_consistency);
        assert!(sol.admissibility.ok && sol.admissibility.a1_inf > 0.0);
        assert!(sol.v.iter().all(|&v| v > 0.0));
        assert!(sol.x.windows(2).all(|w| w[1] < w[0]));
        assert!(sol.refinement_change.unwrap() < 1e-6);
    }

    #[test]
    fn power_kernels_converge_by_picard() {
        let mut p = power(0.1, 1.0);
        p.impact.y = 0.01;
        let sol = solve_execution(&p, &TimeGrid::new(0.0, p.tau, 250).unwrap()).unwrap();
        assert!(sol.picard_iterations > 1 && sol.picard_iterations < PICARD_MAX);
        let (_, jstar) = brute_force_qp(&p, 500).unwrap();
        assert!(((sol.objective.total - jstar) / jstar).abs() < 1e-3);
        assert!(sol.foc_sup_residual < 1e-6, "foc {}", sol.foc_sup_residual);
        assert!(sol.terminal_identity_error < 1e-8);
    }

    #[test]
    fn drifting_price_matches_oracle() {
        let mut p = benchmark();
        p.price = PriceModel::DeterministicDrift { p0: 0.9, drift: Table1D::new(vec![0.0, p.tau], vec![0.5, -0.3]).unwrap() };
        let sol = solve_execution(&p, &TimeGrid::new(0.0, p.tau, 250).unwrap()).unwrap();
        let (_, jstar) = brute_force_qp(&p, 500).unwrap();
        assert!(((sol.objective.total - jstar) / jstar).abs() < 1e-4);
        assert!(sol.foc_sup_residual < 1e-6);
    }

    #[test]
    fn reversed_psi_breaks_optimality() {
        let p = benchmark();
        let grid = TimeGrid::new(0.0, p.tau, 200).unwrap();
        match solve_execution_with(&p, &grid, PsiForm::Reversed) {
            Ok(sol) => assert!(sol.foc_sup_residual > 1e-3, "{}", sol.foc_sup_residual),
            Err(e) => assert!(e.is_numerical()),
        }
    }

    #[test]
    fn long_horizon_with_strong_penalty_violates_assumptions() {
        let tau = 1.0;
        let q = ExecutionProblem {
            x: 2.0,
            tau,
            phi: 10.0,
            varrho: 1.0,
            impact: ImpactSpec::constant(0.01, 0.01, 2.0, 1.0, 0.0, 5.0, tau).unwrap(),
            price: PriceModel::Martingale { p0: 0.9 },
        };
        let rep = check_admissibility(&coefficient_table(&q, 400, PsiForm::Propagator).unwrap());
        assert!(!rep.ok);
        let (what, t) = rep.offending.unwrap();
        assert!(t > 0.0 && t < tau, "{what} at {t}");
        let err = solve_execution(&q, &TimeGrid::new(0.0, tau, 100).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Admissibility(_)));
        // the problem itself is still concave and has a discrete optimum
        assert!(brute_force_qp(&q, 200).is_ok());
    }

    #[test]
    fn short_horizon_is_admissible() {
        let mut p = benchmark();
        p.tau = 1e-4;
        p.impact.tau = 1e-4;
        let rep = check_admissibility(&coefficient_table(&p, 50, PsiForm::Propagator).unwrap());
        assert!(rep.ok);
        assert!((rep.a3_g3_inf - 1.0).abs() < 0.05);
    }

    #[test]
    fn z_solves_its_backward_equation() {
        let p = benchmark();
        let sol = solve_execution(&p, &TimeGrid::new(0.0, p.tau, 500).unwrap()).unwrap();
        assert_eq!(*sol.z.last().unwrap(), 0.0);
        let t = &sol.fine_times;
        let v = &sol.fine_v;
        let z = z_explicit(&p, t, v);
        let h = t[1] - t[0];
        for c in (1..t.len() - 1).step_by(50) {
            let dz = (z[c + 1] - z[c - 1]) / (2.0 * h);
            let rhs = p.impact.rho * z[c] + p.k(t[c]) * p.impact.gamma * v[c];
            assert!((dz - rhs).abs() < 1e-8 * (1.0 + rhs.abs()), "{dz} vs {rhs}");
        }
    }

    #[test]
    fn fast_transient_decay_approaches_temporary_impact_profile() {
        let tau = 10.0 / 365.0;
        let (l, k, phi, vr, x) = (0.01, 0.01, 0.1, 1.0, 2.0);
        let n = 200;
        let dists: Vec<f64> = [1.0, 10.0, 100.0, 1000.0]
            .iter()
            .map(|&rho| {
                let p = ExecutionProblem {
                    x,
                    tau,
                    phi,
                    varrho: vr,
                    impact: ImpactSpec::constant(l, k, rho, 0.5 * rho, 0.0, 5.0, tau).unwrap(),
                    price: PriceModel::Martingale { p0: 0.9 },
                };
                let (v, _) = brute_force_qp(&p, n).unwrap();
                let le = l + 0.5 * k;
                let w = (phi / le).sqrt();
                let c = vr / le;
                let b = -x * (w * (w * tau).sinh() + c * (w * tau).cosh()) / (w * (w * tau).cosh() + c * (w * tau).sinh());
                let h = tau / n as f64;
                let err: f64 = v
                    .iter()
                    .enumerate()
                    .map(|(i, vi)| {
                        let t = (i as f64 + 0.5) * h;
                        let ac = -w * (x * (w * t).sinh() + b * (w * t).cosh());
                        (vi - ac).powi(2) * h
                    })
                    .sum();
                err.sqrt()
            })
            .collect();
        assert!(dists.windows(2).all(|d| d[1] < d[0]), "{dists:?}");
        assert!(dists[3] < 0.5 * dists[0], "{dists:?}");
    }

    #[test]
    fn bump_shows_up_where_applied() {
        let p = benchmark();
        let sol = solve_execution(&p, &TimeGrid::new(0.0, p.tau, 250).unwrap()).unwrap();
        let mut v = sol.fine_v.clone();
        let n = v.len();
        let (lo, hi) = (n / 2, n / 2 + n / 100);
        for x in &mut v[lo..hi] {
            *x *= 1.01;
        }
        let r = foc_residual(&p, &v).unwrap();
        let (imax, rmax) = r.iter().enumerate().fold((0, 0.0f64), |(k, m), (i, x)| if x.abs() > m { (i, x.abs()) } else { (k, m) });
        assert!((lo..hi).contains(&imax));
        let outside = r[..lo.saturating_sub(2)].iter().chain(&r[hi + 2..]).fold(0.0f64, |m, x| m.max(x.abs()));
        // Z and X(τ) carry part of the bump to every earlier time, so locality is
        // dominance rather than exact zero.
        assert!(rmax > 20.0 * outside, "{rmax} vs {outside}");
    }
}
