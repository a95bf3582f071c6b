//! Built-in example suite: boundary cases with exact answers, across every module.

use curve_impact::affine::{affine_coeffs, coupon_bond_price, riccati_solve, yield_from_price, zcb_drift_vol, zcb_price};
use curve_impact::curve::{cross_impact_drift, first_crossing_time, simulate_impacted_curve};
use curve_impact::execution::{
    build_a, check_admissibility, coefficient_table, foc_residual, g_vector, lambda_fn, objective, psi, solve_execution,
};
use curve_impact::hjm::{
    forward_impact_density, hjm_coeffs, hjm_condition_residual, impacted_short_rate_from_lattice,
    reconstruct_bond_from_forwards, sup_norm,
};
use curve_impact::impact::{
    coupon_aggregates, impact_density, impacted_coupon_bond, impacted_zcb, inventory, overall_impact, transient_impact,
};
use curve_impact::mc::{block_reduce, gaussian_increments, reduce_mean_se, with_threads, Moments};
use curve_impact::pricing::{
    eurodollar_closed_form, eurodollar_mc, impacted_libor, impacted_mpr, impacted_zcb_expectation_mc,
    market_price_of_risk, McOptions,
};
use curve_impact::short_rate::{
    analytic_moments, apply_impacted_measure, hull_white_theta, simulate_short_rate, AffineTables,
};
use curve_impact::*;
use nalgebra::Matrix4;

use crate::config::{parse, CurveConfig, PAPER_SEC5};
use crate::CliError;

type Check = std::result::Result<(), String>;

fn ensure(cond: bool, what: impl Into<String>) -> Check {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn close(a: f64, b: f64, tol: f64, what: &str) -> Check {
    ensure((a - b).abs() <= tol, format!("{what}: {a} vs {b} (tol {tol})"))
}

fn e<T>(r: Result<T>) -> std::result::Result<T, String> {
    r.map_err(|x| x.to_string())
}

const TAU: f64 = 10.0 / 365.0;

fn vasicek() -> ShortRateModel {
    ShortRateModel::vasicek(0.2, 0.1, 0.05, 0.01).unwrap()
}

fn sec5_impact() -> ImpactSpec {
    ImpactSpec::power_law(0.01, 1.0, 1.0, 2.0, 1.0, 0.01, 5.0, TAU).unwrap()
}

fn flat(c: f64) -> ForwardCurve {
    ForwardCurve::new(vec![0.0, 10.0, 20.0], vec![c, c, c]).unwrap()
}

fn exec_problem(x: f64, phi: f64, varrho: f64, y: f64) -> ExecutionProblem {
    ExecutionProblem {
        x,
        tau: TAU,
        phi,
        varrho,
        impact: ImpactSpec::constant(0.01, 0.01, 2.0, 1.0, y, 5.0, TAU).unwrap(),
        price: PriceModel::Martingale { p0: 0.9 },
    }
}

fn short_rate_checks() -> Vec<(&'static str, Check)> {
    vec![
        ("zero volatility at the mean stays put", (|| {
            let m = e(ShortRateModel::vasicek(0.3, 0.04, 0.0, 0.04))?;
            let ps = e(simulate_short_rate(&m, &e(TimeGrid::new(0.0, 1.0, 50))?, 1, 4))?;
            ensure(ps.path(3).iter().all(|&r| (r - 0.04).abs() < 1e-15), "path left theta")
        })()),
        ("no elapsed time gives the start value", (|| {
            let (m, v) = e(analytic_moments(&vasicek(), 0.5, 0.5, 0.03))?;
            ensure(m == 0.03 && v == 0.0, format!("({m}, {v})"))
        })()),
        ("flat curve Hull-White theta", (|| {
            let (a, s, c, t) = (0.1, 0.01, 0.03, 2.0);
            let th = e(hull_white_theta(&flat(c), a, s, t))?;
            close(th, a * c + s * s * (1.0 - (-2.0 * a * t).exp()) / (2.0 * a), 1e-12, "theta")?;
            close(e(hull_white_theta(&flat(c), a, 0.0, t))?, a * c, 1e-12, "theta with sigma 0")
        })()),
        ("equal kernels leave the model unchanged", (|| {
            let m = e(apply_impacted_measure(&vasicek(), 0.3, 0.3))?;
            ensure(m.kind == vasicek().kind, "parameters moved")
        })()),
    ]
}

fn affine_checks() -> Vec<(&'static str, Check)> {
    vec![
        ("terminal bond coefficients", (|| {
            let c = e(affine_coeffs(&vasicek(), 3.0, 3.0))?;
            ensure(c.a == 1.0 && c.b == 0.0, format!("{c:?}"))
        })()),
        ("zero coefficients integrate to B = T - t", (|| {
            let z = |v: f64| Table1D::constant(v, 0.0, 2.0).unwrap();
            let tables = AffineTables { a: z(0.0), alpha: z(0.0), b: z(0.0), beta: z(0.0) };
            let g = e(TimeGrid::new(0.0, 2.0, 200))?;
            let out = e(riccati_solve(&tables, 2.0, &g))?;
            ensure(out.iter().enumerate().all(|(i, c)| (c.b - (2.0 - g.time(i))).abs() < 1e-12 && (c.a - 1.0).abs() < 1e-12), "B != T - t")
        })()),
        ("bond at maturity is worth one", (|| {
            ensure(e(zcb_price(&vasicek(), 4.0, 4.0, 0.3))? == 1.0, "P(T,T) != 1")
        })()),
        ("negative rates lift prices above par", (|| {
            ensure(e(zcb_price(&vasicek(), 0.0, 1.0, -0.5))? > 1.0, "price not above 1")
        })()),
        ("zero volatility gives zero bond volatility", (|| {
            let m = e(ShortRateModel::vasicek(0.2, 0.1, 0.0, 0.01))?;
            let (mu, s) = e(zcb_drift_vol(&m, 0.0, 0.0, 5.0, 0.01))?;
            ensure(s == 0.0, "sigma_T != 0")?;
            ensure(market_price_of_risk(mu, s, 0.9, 0.01).is_err(), "no error for sigma_T = 0")
        })()),
        ("par price has zero yield", (|| ensure(e(yield_from_price(1.0, 7.0))? == 0.0, "Y(1) != 0"))()),
        ("zero-coupon schedule is the bond", (|| {
            let s = e(CouponSchedule::new(vec![(2.0, 0.0)], 1.0))?;
            close(e(coupon_bond_price(&s, 0.0, &[0.9]))?, 0.9, 0.0, "price")
        })()),
        ("coupon bond at its last date", (|| {
            let s = e(CouponSchedule::new(vec![(1.0, 0.05), (2.0, 0.05)], 1.0))?;
            close(e(coupon_bond_price(&s, 2.0, &[1.0, 1.0]))?, 1.05, 1e-15, "price")
        })()),
    ]
}

fn impact_checks() -> Vec<(&'static str, Check)> {
    let g = TimeGrid::new(0.0, TAU, 10).unwrap();
    let zero = SpeedSchedule::zero();
    let buy = SpeedSchedule::constant(-2.0, TAU).unwrap();
    let quiet = ImpactSpec { y: 0.0, ..sec5_impact() };
    vec![
        ("no trading keeps inventory", (|| ensure(inventory(1.5, &zero, &g).iter().all(|&x| x == 1.5), "X moved"))()),
        ("buying raises inventory linearly", (|| {
            let x = inventory(1.0, &buy, &g);
            ensure(x.iter().enumerate().all(|(i, v)| (v - (1.0 + 2.0 * g.time(i))).abs() < 1e-14), "X != x + 2t")
        })()),
        ("transient state decays from y", (|| {
            let g = e(TimeGrid::new(0.0, 1.0, 20))?;
            let u = transient_impact(&zero, &sec5_impact(), &g);
            ensure(u.iter().enumerate().all(|(i, v)| (v - 0.01 * (-2.0 * g.time(i)).exp()).abs() < 1e-15), "not pure decay")
        })()),
        ("no trading and no state means no impact", (|| {
            let i = e(overall_impact(&zero, &quiet, &g))?;
            let j = e(impact_density(&zero, &quiet, &g))?;
            ensure(i.iter().chain(&j).all(|&x| x == 0.0), "nonzero impact")
        })()),
        ("kernels vanish at maturity", (|| {
            let s = e(ImpactSpec::power_law(0.01, 1.0, 1.0, 2.0, 1.0, 0.01, 1.0, 0.5))?;
            let v = e(SpeedSchedule::constant(3.0, 0.5))?;
            let i = e(overall_impact(&v, &s, &e(TimeGrid::new(0.0, 1.0, 8))?))?;
            ensure(i[8] == 0.0, format!("I(T) = {}", i[8]))
        })()),
        ("no impact leaves prices alone", (|| {
            let p = vec![0.7; g.n_nodes()];
            ensure(e(impacted_zcb(&p, &zero, &quiet, &g))?.prices == p, "prices moved")
        })()),
        ("buying lifts the impacted price", (|| {
            let p = vec![0.7; g.n_nodes()];
            let pt = e(impacted_zcb(&p, &buy, &quiet, &g))?;
            ensure(pt.prices.iter().skip(1).all(|&x| x > 0.7), "price not above P")
        })()),
        ("single coupon-free bond aggregates to itself", (|| {
            let s = e(CouponSchedule::new(vec![(5.0, 0.0)], 2.0))?;
            let spec = e(ImpactSpec::power_law(0.01, 1.0, 1.0, 2.0, 1.0, 0.0, 5.0, TAU))?;
            let agg = e(coupon_aggregates(&s, &[spec], 0.01))?;
            close(agg.k_b, 2.0 * spec.k.eval(0.01), 1e-15, "K^B")?;
            close(agg.speed(std::slice::from_ref(&buy), 0.005), -2.0, 1e-15, "v^B")?;
            close(e(impacted_coupon_bond(&s, 0.01, &[0.8]))?, 1.6, 1e-15, "N P~")
        })()),
        ("equal speeds average to the common speed", (|| {
            let s = e(CouponSchedule::new(vec![(3.0, 0.04), (5.0, 0.04)], 1.0))?;
            let specs = [sec5_impact().with_maturity(3.0), sec5_impact()];
            let agg = e(coupon_aggregates(&s, &specs, 0.01))?;
            close(agg.speed(&[buy.clone(), buy.clone()], 0.005), -2.0, 1e-14, "v^B")
        })()),
    ]
}

fn pricing_checks() -> Vec<(&'static str, Check)> {
    vec![
        ("risk-neutral drift has zero price of risk", (|| {
            ensure(e(market_price_of_risk(0.027, -0.02, 0.9, 0.03))? == 0.0, "nonzero")
        })()),
        ("no impact reduces to the plain price of risk", (|| {
            ensure(e(impacted_mpr(0.05, -0.02, 0.9, 0.0, 0.03))? == e(market_price_of_risk(0.05, -0.02, 0.9, 0.03))?, "differ")
        })()),
        ("par bond has zero LIBOR", (|| ensure(e(impacted_libor(1.0, 0.0, 0.25, DayCount::Act365))? == 0.0, "nonzero"))()),
        ("inflated price gives a negative rate", (|| {
            ensure(e(impacted_libor(1.01, 0.0, 0.25, DayCount::Act365))? < 0.0, "rate not negative")
        })()),
        ("equal kernels give the classic futures price", (|| {
            let m = vasicek();
            let a = e(eurodollar_closed_form(&m, &MprConfig { lambda: 0.4, lambda_tilde: 0.4 }, 0.5, 0.75, 1.0, DayCount::Act365, EurodollarVariant::default()))?;
            let b = e(eurodollar_closed_form(&m, &MprConfig::default(), 0.5, 0.75, 1.0, DayCount::Act365, EurodollarVariant::default()))?;
            close(a, b, 1e-15, "price")
        })()),
        ("zero volatility Monte Carlo is exact", (|| {
            let m = e(ShortRateModel::vasicek(0.2, 0.05, 0.0, 0.05))?;
            let cf = e(eurodollar_closed_form(&m, &MprConfig::default(), 0.5, 0.75, 1.0, DayCount::Act365, EurodollarVariant::default()))?;
            let (mc, se) = e(eurodollar_mc(&e(MprConfig::default().impacted_model(&m))?, 0.5, 0.75, 1.0, DayCount::Act365, &McOptions::new(1, 8)))?;
            ensure(se == 0.0, "SE != 0")?;
            close(mc, cf, 1e-12, "price")
        })()),
        ("bond expectation at maturity is one", (|| {
            let q = e(MprConfig::default().impacted_model(&vasicek()))?;
            let (v, se) = e(impacted_zcb_expectation_mc(&q, 2.0, 2.0, 0.05, &McOptions::new(1, 100)))?;
            ensure(v == 1.0 && se == 0.0, "not (1, 0)")
        })()),
    ]
}

fn curve_checks() -> Vec<(&'static str, Check)> {
    vec![
        ("absorbed impact gives a risk-neutral cross drift", (|| {
            let (r, pt, j, ps) = (0.03, 0.8, 0.002, 0.7);
            close(e(cross_impact_drift(r, pt, j, r * pt + j, -0.1, -0.2, ps))?, r * ps, 1e-15, "mu_S")
        })()),
        ("no trading reproduces the unimpacted curve", (|| {
            let mut cfg: CurveConfig = parse(PAPER_SEC5).map_err(|x| x.to_string())?;
            cfg.paths = 64;
            cfg.horizon = 0.1;
            cfg.steps = 36;
            cfg.impact.y = 0.0;
            let mut x = cfg.experiment(std::path::Path::new(".")).map_err(|x| x.to_string())?;
            x.speed = SpeedSchedule::zero();
            let run = e(simulate_impacted_curve(&x))?;
            let same = run.scenarios[0].snapshots.iter().flat_map(|s| &s.entries).all(|m| m.p.mean == m.p_tilde.mean);
            ensure(same, "P~ != P")?;
            let pt: Vec<f64> = run.scenarios[0].snapshots.iter().map(|s| s.entries[0].p_tilde.mean).collect();
            let p: Vec<f64> = run.scenarios[0].snapshots.iter().map(|s| s.entries[0].p.mean).collect();
            ensure(first_crossing_time(&run.times, &pt, &p, TAU, 1e-6) == Crossing::Identical, "not identical")
        })()),
    ]
}

fn lattice(forward: f64, sigma: f64) -> ForwardLattice {
    let times = vec![0.0, 0.1, 0.2];
    let mats: Vec<f64> = (0..=40).map(|j| j as f64 * 0.05).collect();
    let mut l = ForwardLattice::empty(times.clone(), mats.clone());
    for (i, &t) in times.iter().enumerate() {
        for (j, &m) in mats.iter().enumerate() {
            if m >= t - 1e-12 {
                l.forward[i][j] = forward;
                l.sigma[i][j] = sigma;
                l.alpha[i][j] = 0.0;
                l.jf[i][j] = 0.0;
            }
        }
    }
    l
}

fn hjm_checks() -> Vec<(&'static str, Check)> {
    vec![
        ("no impact, no forward density", (|| {
            let j = e(forward_impact_density(&[0.0; 5], &[0.9, 0.8, 0.7, 0.6, 0.5], &[1.0, 2.0, 3.0, 4.0, 5.0]))?;
            ensure(j.iter().all(|&x| x == 0.0), "nonzero")
        })()),
        ("proportional impact, no forward density", (|| {
            let p = [0.9, 0.8, 0.7, 0.6, 0.5];
            let i: Vec<f64> = p.iter().map(|x| 0.1 * x).collect();
            let j = e(forward_impact_density(&i, &p, &[1.0, 2.0, 3.0, 4.0, 5.0]))?;
            ensure(j.iter().all(|&x| x.abs() < 1e-14), "nonzero")
        })()),
        ("flat forwards reprice bonds", (|| {
            close(e(reconstruct_bond_from_forwards(&lattice(0.0, 0.0), 0, 1.0))?, 1.0, 0.0, "zero forwards")?;
            close(e(reconstruct_bond_from_forwards(&lattice(0.03, 0.0), 1, 1.1))?, (-0.03f64).exp(), 1e-14, "flat forwards")
        })()),
        ("constant volatility integrates exactly", (|| {
            let l = lattice(0.03, 0.0);
            let (nu, b) = e(hjm_coeffs(&l, 0, 1.0))?;
            ensure(nu == 0.0 && b == 0.0, "nonzero")?;
            let (nu, _) = e(hjm_coeffs(&lattice(0.03, 0.01), 1, 1.1))?;
            close(nu, -0.01, 1e-14, "nu")
        })()),
        ("risk-neutral drift satisfies the condition", (|| {
            let mut l = lattice(0.03, 0.01);
            e(l.set_drift_from_condition(&[0.0; 3]))?;
            ensure(sup_norm(&e(hjm_condition_residual(&l, &[0.0; 3]))?) < 1e-14, "residual")
        })()),
        ("flat forwards give a flat short rate", (|| {
            close(e(impacted_short_rate_from_lattice(&lattice(0.03, 0.01), 0.15))?, 0.03, 1e-15, "r")
        })()),
    ]
}

fn execution_checks() -> Vec<(&'static str, Check)> {
    vec![
        ("constant l gives Lambda = 1/(2l)", (|| close(e(lambda_fn(0.01, &exec_problem(1.0, 0.1, 1.0, 0.0).impact))?, 50.0, 1e-12, "Lambda"))()),
        ("no running penalty, constant system matrix", (|| {
            let p = exec_problem(1.0, 0.0, 1.0, 0.0);
            ensure(build_a(0.0, &p) == build_a(0.02, &p), "A(t) varies")
        })()),
        ("identity propagator at the horizon", (|| {
            let i = Matrix4::identity();
            ensure(e(psi(&i, &i, PsiForm::Propagator))? == i, "Psi != Id")
        })()),
        ("terminal G values", (|| {
            let p = exec_problem(1.0, 0.1, 0.0, 0.0);
            let g = g_vector(&p, &Matrix4::identity());
            ensure(g == [0.0, -0.5, -1.0, 0.0], format!("{g:?}"))
        })()),
        ("short horizons are admissible", (|| {
            let tab = e(coefficient_table(&exec_problem(2.0, 0.1, 1.0, 0.0), 200, PsiForm::Propagator))?;
            ensure(check_admissibility(&tab).ok, "assumptions fail")
        })()),
        ("nothing to trade", (|| {
            let s = e(solve_execution(&exec_problem(0.0, 0.1, 1.0, 0.0), &e(TimeGrid::new(0.0, TAU, 50))?))?;
            ensure(s.v.iter().all(|&v| v.abs() < 1e-14) && s.objective.total.abs() < 1e-14, "not idle")
        })()),
        ("idle schedule is worth the book value", (|| {
            let o = e(objective(&exec_problem(2.0, 0.0, 0.0, 0.0), &[0.0; 11]))?;
            close(o.total, 1.8, 1e-15, "J")
        })()),
        ("idle, flat, unpenalized residual vanishes", (|| {
            let r = e(foc_residual(&exec_problem(0.0, 0.0, 0.0, 0.0), &[0.0; 11]))?;
            ensure(r.iter().all(|&x| x == 0.0), "residual")
        })()),
    ]
}

fn mc_checks() -> Vec<(&'static str, Check)> {
    vec![
        ("same stream, same draws", (|| {
            ensure(e(gaussian_increments(RngStream::new(4, 9), 32, 0.1))? == e(gaussian_increments(RngStream::new(4, 9), 32, 0.1))?, "differ")
        })()),
        ("constant sample has zero SE", (|| {
            ensure(e(reduce_mean_se(&[2.5; 10]))? == (2.5, 0.0), "not (c, 0)")
        })()),
        ("two-point sample", (|| ensure(e(reduce_mean_se(&[0.0, 1.0]))? == (0.5, 0.5), "not (0.5, 0.5)"))()),
        ("reduction ignores the pool size", (|| {
            let f = || {
                block_reduce(1000, || vec![Moments::default()], |a, p| a[0].push((p as f64).sin())).map(|m| m[0].stat())
            };
            ensure(with_threads(Some(1), f) == with_threads(Some(5), f), "differ")
        })()),
    ]
}

/// Every check with its outcome.
pub fn checks() -> Vec<(&'static str, Check)> {
    let mut all = Vec::new();
    all.extend(short_rate_checks());
    all.extend(affine_checks());
    all.extend(impact_checks());
    all.extend(pricing_checks());
    all.extend(curve_checks());
    all.extend(hjm_checks());
    all.extend(execution_checks());
    all.extend(mc_checks());
    all
}

pub fn run() -> std::result::Result<String, CliError> {
    let all = checks();
    let failed: Vec<String> = all.iter().filter_map(|(n, r)| r.as_ref().err().map(|m| format!("{n}: {m}"))).collect();
    for (n, r) in &all {
        if let Err(m) = r {
            eprintln!("FAIL {n}: {m}");
        }
    }
    if failed.is_empty() {
        Ok(format!("selftest: {} checks passed", all.len()))
    } else {
        Err(CliError::Other(anyhow::anyhow!("{} of {} checks failed", failed.len(), all.len())))
    }
}
