//! Affine bond prices P = A e^{−B r}, their dynamics, yields and coupon bonds.

use serde::{Deserialize, Serialize};

use crate::error::{positive, Error, Result};
use crate::grid::TimeGrid;
use crate::short_rate::{hull_white_theta, AffineTables, Measure, ModelKind, ShortRateModel};
use crate::quad::simpson;

/// A(t,T) and B(t,T).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BondCoeffs {
    pub a: f64,
    pub b: f64,
}

impl BondCoeffs {
    pub const TERMINAL: BondCoeffs = BondCoeffs { a: 1.0, b: 0.0 };

    pub fn price(&self, r: f64) -> f64 {
        self.a * (-self.b * r).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum YieldConvention {
    /// P^{−1/T} − 1 with the absolute maturity T.
    #[default]
    Paper,
    /// P^{−1/(T−t)} − 1.
    TimeToMaturity,
}

fn check_window(t: f64, maturity: f64) -> Result<()> {
    if !(t.is_finite() && maturity.is_finite()) || t > maturity {
        return Err(Error::Domain(format!("need t <= T, got t={t}, T={maturity}")));
    }
    Ok(())
}

pub(crate) fn vasicek_coeffs(k: f64, theta: f64, sigma: f64, h: f64) -> BondCoeffs {
    let b = -(-k * h).exp_m1() / k;
    let s2 = sigma * sigma;
    let ln_a = (theta - s2 / (2.0 * k * k)) * (b - h) - s2 * b * b / (4.0 * k);
    BondCoeffs { a: ln_a.exp(), b }
}

/// A(t,T), B(t,T) under the model's pricing measure.
pub fn affine_coeffs(model: &ShortRateModel, t: f64, maturity: f64) -> Result<BondCoeffs> {
    check_window(t, maturity)?;
    if model.measure == Measure::P {
        return Err(Error::Domain("bond coefficients need a pricing measure (Q or Qtilde)".into()));
    }
    if t == maturity {
        return Ok(BondCoeffs::TERMINAL);
    }
    match &model.kind {
        ModelKind::Vasicek { k, theta, sigma, .. } => Ok(vasicek_coeffs(*k, *theta, *sigma, maturity - t)),
        ModelKind::HullWhite { a, sigma, curve, shift, .. } => {
            let ae = a - shift;
            let b = -(-ae * (maturity - t)).exp_m1() / ae;
            if *shift == 0.0 {
                let ratio = curve.discount(maturity)? / curve.discount(t)?;
                let ln = b * curve.forward(t)? - sigma * sigma * (1.0 - (-2.0 * a * t).exp()) * b * b / (4.0 * a);
                Ok(BondCoeffs { a: ratio * ln.exp(), b })
            } else {
                hull_white_theta(curve, *a, *sigma, t)?;
                hull_white_theta(curve, *a, *sigma, maturity)?;
                let n = (((maturity - t) / 1e-3).ceil() as usize).max(16);
                let ln_a = simpson(t, maturity, n, |u| {
                    let bu = -(-ae * (maturity - u)).exp_m1() / ae;
                    let th = hull_white_theta(curve, *a, *sigma, u).unwrap_or(f64::NAN);
                    0.5 * sigma * sigma * bu * bu - th * bu
                });
                Ok(BondCoeffs { a: ln_a.exp(), b })
            }
        }
        ModelKind::GenericAffine { tables, .. } => {
            let n = (((maturity - t) / 1e-3).ceil() as usize).max(1);
            let grid = TimeGrid::new(t, maturity, n)?;
            Ok(riccati_solve(tables, maturity, &grid)?[0])
        }
    }
}

/// Integrate −∂_t ln A = ½aB² − bB, ∂_t B = ½αB² − βB − 1 backward from (1, 0) at T.
/// Returns coefficients at every grid node; the grid must end at T.
pub fn riccati_solve(tables: &AffineTables, maturity: f64, grid: &TimeGrid) -> Result<Vec<BondCoeffs>> {
    if (grid.t1() - maturity).abs() > 1e-12 {
        return Err(Error::Grid(format!("grid must end at T={maturity}, ends at {}", grid.t1())));
    }
    for t in [grid.t0(), grid.t1()] {
        tables.at(t)?;
    }
    let sub = ((grid.dt() / 1e-3).ceil() as usize).max(1);
    let h = grid.dt() / sub as f64;
    let rhs = |t: f64, b: f64| -> Result<(f64, f64)> {
        let [a, alpha, bb, beta] = tables.at(t)?;
        Ok((bb * b - 0.5 * a * b * b, 0.5 * alpha * b * b - beta * b - 1.0))
    };
    let n = grid.n_nodes();
    let mut out = vec![BondCoeffs::TERMINAL; n];
    let (mut ln_a, mut b) = (0.0, 0.0);
    for i in (0..grid.n_steps()).rev() {
        let t_hi = grid.time(i + 1);
        for s in 0..sub {
            let t = t_hi - s as f64 * h;
            // backward step of size −h
            let (k1a, k1b) = rhs(t, b)?;
            let (k2a, k2b) = rhs(t - 0.5 * h, b - 0.5 * h * k1b)?;
            let (k3a, k3b) = rhs(t - 0.5 * h, b - 0.5 * h * k2b)?;
            let (k4a, k4b) = rhs(t - h, b - h * k3b)?;
            ln_a -= h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
            b -= h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
        }
        out[i] = BondCoeffs { a: ln_a.exp(), b };
    }
    Ok(out)
}

/// P(t,T) = A(t,T) e^{−B(t,T) r}.
pub fn zcb_price(model: &ShortRateModel, t: f64, maturity: f64, r: f64) -> Result<f64> {
    Ok(affine_coeffs(model, t, maturity)?.price(r))
}

/// (∂_t ln A, ∂_t B) from the Riccati system with the pricing coefficients.
pub(crate) fn coeff_time_derivatives(model: &ShortRateModel, t: f64, c: BondCoeffs) -> Result<(f64, f64)> {
    let [a, alpha, b, beta] = model.coefficients(t)?;
    Ok((b * c.b - 0.5 * a * c.b * c.b, 0.5 * alpha * c.b * c.b - beta * c.b - 1.0))
}

/// Drift and volatility of dP(t,T) under P.
///
/// `model` is a pricing model (Q or Q̃) and `lambda` the slope of its Girsanov
/// kernel λ(t) = λ r(t); the P drift of r is then μ_pricing − σλr.
pub fn zcb_drift_vol(model: &ShortRateModel, lambda: f64, t: f64, maturity: f64, r: f64) -> Result<(f64, f64)> {
    if t >= maturity {
        return Err(Error::DegenerateVolatility { t });
    }
    let c = affine_coeffs(model, t, maturity)?;
    drift_vol_from(model, lambda, t, c, r)
}

pub(crate) fn drift_vol_from(model: &ShortRateModel, lambda: f64, t: f64, c: BondCoeffs, r: f64) -> Result<(f64, f64)> {
    let (dln_a, db) = coeff_time_derivatives(model, t, c)?;
    let vol = model.diffusion(t, r)?;
    let mu_p = model.drift(t, r)? - vol * lambda * r;
    let p = c.price(r);
    let mu = p * (dln_a - db * r - c.b * mu_p + 0.5 * c.b * c.b * vol * vol);
    Ok((mu, -vol * c.b * p))
}

/// Y = P^{−1/T} − 1.
pub fn yield_from_price(p: f64, maturity: f64) -> Result<f64> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::Domain(format!("yield undefined for price {p}")));
    }
    positive("T", maturity)?;
    Ok(p.powf(-1.0 / maturity) - 1.0)
}

pub fn yield_with_convention(p: f64, t: f64, maturity: f64, convention: YieldConvention) -> Result<f64> {
    match convention {
        YieldConvention::Paper => yield_from_price(p, maturity),
        YieldConvention::TimeToMaturity => yield_from_price(p, maturity - t),
    }
}

/// Coupons c_i paid at T_i plus the notional N at T_n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouponSchedule {
    payments: Vec<(f64, f64)>,
    notional: f64,
}

impl CouponSchedule {
    pub fn new(payments: Vec<(f64, f64)>, notional: f64) -> Result<Self> {
        if payments.is_empty() {
            return Err(Error::Input("coupon schedule needs at least one date".into()));
        }
        if payments.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Input("coupon dates must be strictly increasing".into()));
        }
        if payments.iter().any(|&(t, c)| !t.is_finite() || !(c >= 0.0)) {
            return Err(Error::Input("coupons must be >= 0 at finite dates".into()));
        }
        positive("notional", notional)?;
        Ok(Self { payments, notional })
    }

    pub fn payments(&self) -> &[(f64, f64)] {
        &self.payments
    }

    pub fn maturities(&self) -> Vec<f64> {
        self.payments.iter().map(|p| p.0).collect()
    }

    pub fn notional(&self) -> f64 {
        self.notional
    }

    pub fn final_maturity(&self) -> f64 {
        self.payments[self.payments.len() - 1].0
    }

    /// Σ c_i x_i + N x_n over dates still ≥ t; the shared linear form behind
    /// both plain and impacted coupon prices.
    pub(crate) fn combine(&self, t: f64, xs: &[f64]) -> Result<f64> {
        if xs.len() != self.payments.len() {
            return Err(Error::Input(format!(
                "need {} zero-coupon prices, got {}",
                self.payments.len(),
                xs.len()
            )));
        }
        if t > self.final_maturity() {
            return Err(Error::Domain(format!("t={t} after the final maturity")));
        }
        let mut acc = 0.0;
        for (&(ti, c), &x) in self.payments.iter().zip(xs) {
            if ti >= t {
                if !x.is_finite() {
                    return Err(Error::Input(format!("missing price for T={ti}")));
                }
                acc += c * x;
            }
        }
        Ok(acc + self.notional * xs[xs.len() - 1])
    }
}

/// Σ c_i P(t,T_i) + N P(t,T_n); coupons dated before t are already paid.
pub fn coupon_bond_price(schedule: &CouponSchedule, t: f64, zcb: &[f64]) -> Result<f64> {
    schedule.combine(t, zcb)
}
