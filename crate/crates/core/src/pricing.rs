//! Market prices of risk, impacted LIBOR and Eurodollar futures under Q̃.

use serde::{Deserialize, Serialize};

use crate::affine::affine_coeffs;
use crate::error::{finite, positive, Error, Result};
use crate::grid::TimeGrid;
use crate::mc::{block_reduce, Moments, RngStream, Stat};
use crate::short_rate::{analytic_moments, apply_impacted_measure, EulerScheme, Measure, ModelKind, ShortRateModel};

/// Slopes of λ(t) = λ r(t) and λ̃(t) = λ̃ r(t).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MprConfig {
    pub lambda: f64,
    pub lambda_tilde: f64,
}

impl MprConfig {
    pub fn impacted_model(&self, model: &ShortRateModel) -> Result<ShortRateModel> {
        apply_impacted_measure(model, self.lambda, self.lambda_tilde)
    }
}

/// (μ_T − rP)/σ_T.
pub fn market_price_of_risk(mu: f64, sigma: f64, p: f64, r: f64) -> Result<f64> {
    if sigma == 0.0 {
        return Err(Error::DegenerateVolatility { t: f64::NAN });
    }
    Ok((mu - r * p) / sigma)
}

/// (μ_T − rP̃ − J_T)/σ_T.
pub fn impacted_mpr(mu: f64, sigma: f64, p_tilde: f64, j: f64, r: f64) -> Result<f64> {
    if sigma == 0.0 {
        return Err(Error::DegenerateVolatility { t: f64::NAN });
    }
    Ok((mu - r * p_tilde - j) / sigma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DayCount {
    /// Year fractions are taken as given (times are already ACT/365 years).
    #[default]
    Act365,
    Act360,
}

impl DayCount {
    pub fn year_fraction(&self, s: f64, t: f64) -> f64 {
        match self {
            DayCount::Act365 => t - s,
            DayCount::Act360 => (t - s) * 365.0 / 360.0,
        }
    }
}

/// L̃(S,T) = (1 − P̃)/(τ(S,T) P̃).
pub fn impacted_libor(p_tilde: f64, s: f64, t: f64, daycount: DayCount) -> Result<f64> {
    if !(p_tilde > 0.0) {
        return Err(Error::Domain(format!("LIBOR undefined for price {p_tilde}")));
    }
    if !(s < t) {
        return Err(Error::Domain(format!("need S < T, got S={s}, T={t}")));
    }
    Ok((1.0 - p_tilde) / (daycount.year_fraction(s, t) * p_tilde))
}

/// Which mean of r(t) enters E^Q̃[B r(t)] in the futures formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EurodollarVariant {
    /// Mean r0 e^{−k̃t} + θ̃(1 − e^{−k̃t}), matching the simulated Q̃ dynamics.
    #[default]
    DynamicsConsistent,
    /// Mean r0 e^{−k̃t} + θ(1 − e^{−k̃t}) with the base θ.
    PaperLiteral,
}

/// E^Q̃[1/P̃(t,T)] = (1/A) exp{B E[r(t)] + ½B² Var[r(t)]}.
pub fn inverse_bond_expectation(
    model: &ShortRateModel,
    mpr: &MprConfig,
    t: f64,
    maturity: f64,
    variant: EurodollarVariant,
) -> Result<f64> {
    if model.measure != Measure::Q {
        return Err(Error::Domain("pass the base model under Q; the impacted measure is applied here".into()));
    }
    let tilde = mpr.impacted_model(model)?;
    let c = affine_coeffs(&tilde, t, maturity)?;
    let (mut mean, var) = analytic_moments(&tilde, 0.0, t, tilde.r0())?;
    if let (EurodollarVariant::PaperLiteral, ModelKind::Vasicek { theta, .. }, ModelKind::Vasicek { k, r0, .. }) =
        (variant, &model.kind, &tilde.kind)
    {
        let e = (-k * t).exp();
        mean = r0 * e + theta * (1.0 - e);
    }
    Ok((c.b * mean + 0.5 * c.b * c.b * var).exp() / c.a)
}

/// N(1 + 1/τ − (1/τ) E^Q̃[1/P̃(t,T)]).
pub fn eurodollar_closed_form(
    model: &ShortRateModel,
    mpr: &MprConfig,
    t: f64,
    maturity: f64,
    notional: f64,
    daycount: DayCount,
    variant: EurodollarVariant,
) -> Result<f64> {
    positive("notional", notional)?;
    if !(t < maturity) || t < 0.0 {
        return Err(Error::Domain(format!("need 0 <= t < T, got t={t}, T={maturity}")));
    }
    let tau = daycount.year_fraction(t, maturity);
    let e = inverse_bond_expectation(model, mpr, t, maturity, variant)?;
    Ok(notional * (1.0 + 1.0 / tau - e / tau))
}

/// Monte-Carlo options shared by the estimators here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McOptions {
    pub seed: u64,
    pub n_paths: usize,
    pub steps_per_year: usize,
}

impl McOptions {
    pub fn new(seed: u64, n_paths: usize) -> Self {
        Self { seed, n_paths, steps_per_year: 365 }
    }

    fn grid(&self, t0: f64, t1: f64) -> Result<TimeGrid> {
        let n = (((t1 - t0) * self.steps_per_year as f64).round() as usize).max(1);
        TimeGrid::new(t0, t1, n)
    }
}

fn check_mc_model(model: &ShortRateModel) -> Result<()> {
    if model.measure == Measure::P {
        return Err(Error::Domain("Monte-Carlo pricing needs a model under Q or Qtilde".into()));
    }
    if opts_invalid(model) {
        return Err(Error::param("model", "non-finite parameters"));
    }
    Ok(())
}

fn opts_invalid(model: &ShortRateModel) -> bool {
    model.validate().is_err()
}

/// Eurodollar price by simulating r to t under `tilde` and averaging e^{B r(t)}/A.
pub fn eurodollar_mc(
    tilde: &ShortRateModel,
    t: f64,
    maturity: f64,
    notional: f64,
    daycount: DayCount,
    opts: &McOptions,
) -> Result<(f64, f64)> {
    check_mc_model(tilde)?;
    positive("notional", notional)?;
    positive("t", t)?;
    if !(t < maturity) {
        return Err(Error::Domain(format!("need t < T, got t={t}, T={maturity}")));
    }
    if opts.n_paths < 2 {
        return Err(Error::InsufficientSamples(opts.n_paths));
    }
    let c = affine_coeffs(tilde, t, maturity)?;
    let grid = opts.grid(0.0, t)?;
    let scheme = EulerScheme::new(tilde, grid)?;
    let r0 = tilde.r0();
    let acc = block_reduce(opts.n_paths, || vec![Moments::default()], |acc, p| {
        if let Ok((r, _)) = scheme.sample(r0, RngStream::new(opts.seed, p as u64)) {
            acc[0].push((c.b * r[r.len() - 1]).exp() / c.a);
        }
    })
    .ok_or(Error::InsufficientSamples(0))?;
    let Stat { mean, se, .. } = acc[0].stat();
    let tau = daycount.year_fraction(t, maturity);
    Ok((notional * (1.0 + 1.0 / tau - mean / tau), notional * se / tau))
}

/// E^Q̃[e^{−∫ₜᵀ r} | r(t) = r_t] by Euler paths and trapezoidal integration.
pub fn impacted_zcb_expectation_mc(
    tilde: &ShortRateModel,
    t: f64,
    maturity: f64,
    r_t: f64,
    opts: &McOptions,
) -> Result<(f64, f64)> {
    check_mc_model(tilde)?;
    finite("r_t", r_t)?;
    if t > maturity {
        return Err(Error::Domain(format!("need t <= T, got t={t}, T={maturity}")));
    }
    if t == maturity {
        return Ok((1.0, 0.0));
    }
    if opts.n_paths < 2 {
        return Err(Error::InsufficientSamples(opts.n_paths));
    }
    let grid = opts.grid(t, maturity)?;
    let scheme = EulerScheme::new(tilde, grid)?;
    let h = grid.dt();
    let acc = block_reduce(opts.n_paths, || vec![Moments::default()], |acc, p| {
        if let Ok((r, _)) = scheme.sample(r_t, RngStream::new(opts.seed, p as u64)) {
            let n = r.len();
            let integral = h * (0.5 * (r[0] + r[n - 1]) + r[1..n - 1].iter().sum::<f64>());
            acc[0].push((-integral).exp());
        }
    })
    .ok_or(Error::InsufficientSamples(0))?;
    let s = acc[0].stat();
    Ok((s.mean, s.se))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::{zcb_drift_vol, zcb_price};

    fn sec5() -> ShortRateModel {
        ShortRateModel::vasicek(0.2, 0.1, 0.05, 0.01).unwrap()
    }

    #[test]
    fn mpr_examples() {
        assert_eq!(market_price_of_risk(0.027, -0.02, 0.9, 0.03).unwrap(), 0.0);
        let v = market_price_of_risk(0.05, -0.02, 0.9, 0.03).unwrap();
        assert!((v - (0.05 - 0.027) / -0.02).abs() < 1e-15);
        assert!(market_price_of_risk(0.05, 0.0, 0.9, 0.03).is_err());
        let w = impacted_mpr(0.05, -0.02, 0.9, 0.001, 0.03).unwrap();
        assert!((w - (0.05 - 0.027 - 0.001) / -0.02).abs() < 1e-15);
        assert_eq!(impacted_mpr(0.05, -0.02, 0.9, 0.0, 0.03).unwrap(), v);
    }

    #[test]
    fn mpr_is_maturity_invariant() {
        let m = sec5();
        let (lambda, r, t) = (0.3, 0.02, 0.4);
        let mut vals = Vec::new();
        for mat in [1.0, 5.0, 15.0] {
            let (mu, sig) = zcb_drift_vol(&m, lambda, t, mat, r).unwrap();
            let p = zcb_price(&m, t, mat, r).unwrap();
            vals.push(market_price_of_risk(mu, sig, p, r).unwrap());
        }
        assert!((vals[0] - vals[1]).abs() < 1e-12 && (vals[1] - vals[2]).abs() < 1e-12);
        // with the P drift k(θ − r) − σλr the ratio is −λ r
        assert!((vals[0] + lambda * r).abs() < 1e-12);
    }

    #[test]
    fn libor_examples() {
        assert_eq!(impacted_libor(1.0, 0.0, 0.25, DayCount::Act365).unwrap(), 0.0);
        let l = impacted_libor(0.95, 0.0, 0.25, DayCount::Act365).unwrap();
        assert!((l - 0.05 / (0.25 * 0.95)).abs() < 1e-15);
        assert!(impacted_libor(1.01, 0.0, 0.25, DayCount::Act365).unwrap() < 0.0);
        assert!(impacted_libor(0.0, 0.0, 0.25, DayCount::Act365).is_err());
    }

    #[test]
    fn eurodollar_trivial_cases() {
        let flat = ShortRateModel::vasicek(0.2, 0.0, 0.0, 0.0).unwrap();
        let mpr = MprConfig { lambda: 0.0, lambda_tilde: 0.5 };
        let c = eurodollar_closed_form(&flat, &mpr, 0.25, 0.5, 1e6, DayCount::Act365, EurodollarVariant::default()).unwrap();
        assert!((c - 1e6).abs() < 1e-6);
        // λ̃ = λ prices with the base parameters
        let m = sec5();
        let same = MprConfig { lambda: 0.4, lambda_tilde: 0.4 };
        let a = eurodollar_closed_form(&m, &same, 0.25, 0.5, 1e6, DayCount::Act365, EurodollarVariant::PaperLiteral).unwrap();
        let b = eurodollar_closed_form(&m, &same, 0.25, 0.5, 1e6, DayCount::Act365, EurodollarVariant::DynamicsConsistent).unwrap();
        assert_eq!(a, b);
        let bad = MprConfig { lambda: 0.0, lambda_tilde: 4.0 };
        assert!(matches!(
            eurodollar_closed_form(&m, &bad, 0.25, 0.5, 1e6, DayCount::Act365, EurodollarVariant::default()),
            Err(Error::MeasureTransform { .. })
        ));
    }

    #[test]
    fn eurodollar_decreases_in_r0() {
        let mpr = MprConfig { lambda: 0.0, lambda_tilde: 0.5 };
        let mut prev = f64::INFINITY;
        for i in 0..10 {
            let m = ShortRateModel::vasicek(0.2, 0.1, 0.05, -0.02 + 0.01 * i as f64).unwrap();
            let c = eurodollar_closed_form(&m, &mpr, 0.25, 0.5, 1e6, DayCount::Act365, EurodollarVariant::default()).unwrap();
            assert!(c < prev);
            prev = c;
        }
    }

    #[test]
    fn zero_vol_mc_is_exact() {
        let m = ShortRateModel::vasicek(0.2, 0.1, 0.0, 0.01).unwrap();
        let mpr = MprConfig { lambda: 0.0, lambda_tilde: 0.5 };
        let tilde = mpr.impacted_model(&m).unwrap();
        let (p, se) = eurodollar_mc(&tilde, 0.25, 0.5, 1e6, DayCount::Act365, &McOptions::new(1, 64)).unwrap();
        assert_eq!(se, 0.0);
        let c = eurodollar_closed_form(&m, &mpr, 0.25, 0.5, 1e6, DayCount::Act365, EurodollarVariant::default()).unwrap();
        // Euler bias of the deterministic mean is the only difference, O(dt)
        assert!((p - c).abs() < 2.0, "{p} vs {c}");
        let fine = McOptions { steps_per_year: 36_500, ..McOptions::new(1, 4) };
        let (pf, _) = eurodollar_mc(&tilde, 0.25, 0.5, 1e6, DayCount::Act365, &fine).unwrap();
        assert!((pf - c).abs() < 0.02, "{pf} vs {c}");
        let (z, zse) = impacted_zcb_expectation_mc(&tilde, 1.0, 1.0, 0.05, &McOptions::new(1, 10)).unwrap();
        assert_eq!((z, zse), (1.0, 0.0));
    }

    #[test]
    fn zcb_expectation_matches_closed_form() {
        let mpr = MprConfig { lambda: 0.0, lambda_tilde: 1.0 };
        let tilde = mpr.impacted_model(&sec5()).unwrap();
        let (p, se) = impacted_zcb_expectation_mc(&tilde, 0.0, 5.0, 0.01, &McOptions::new(99, 20_000)).unwrap();
        let exact = zcb_price(&tilde, 0.0, 5.0, 0.01).unwrap();
        assert!((p - exact).abs() < 4.0 * se, "{p} vs {exact} ± {se}");
    }
}
