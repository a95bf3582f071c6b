use curve_impact::affine::{affine_coeffs, riccati_solve, zcb_price};
use curve_impact::curve::cross_impact_drift;
use curve_impact::execution::{brute_force_qp, piecewise_objective, solve_execution};
use curve_impact::impact::{impacted_zcb, impacted_zcb_integral_form, overall_impact, transient_impact};
use curve_impact::mc::{gaussian_increments, Moments};
use curve_impact::pricing::{eurodollar_closed_form, impacted_mpr};
use curve_impact::short_rate::{apply_impacted_measure, AffineTables};
use curve_impact::*;
use proptest::prelude::*;

fn flat_curve(f: f64) -> ForwardCurve {
    ForwardCurve::new(vec![0.0, 15.0, 30.0], vec![f, f, f]).unwrap()
}

fn benchmark(x: f64, phi: f64, varrho: f64) -> ExecutionProblem {
    let tau = 10.0 / 365.0;
    ExecutionProblem {
        x,
        tau,
        phi,
        varrho,
        impact: ImpactSpec::constant(0.01, 0.01, 2.0, 1.0, 0.0, 5.0, tau).unwrap(),
        price: PriceModel::Martingale { p0: 0.9 },
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn measure_change_identity_and_additivity(
        k in 0.05f64..1.0, theta in 0.0f64..0.1, sigma in 0.001f64..0.05,
        lambda in -1.0f64..1.0, d1 in -1.0f64..1.0, d2 in -1.0f64..1.0,
    ) {
        for base in [
            ShortRateModel::vasicek(k, theta, sigma, 0.02).unwrap(),
            ShortRateModel::hull_white(k, sigma, 0.02, flat_curve(theta)).unwrap(),
        ] {
            prop_assert_eq!(apply_impacted_measure(&base, lambda, lambda).unwrap().kind, base.kind.clone());
            let once = apply_impacted_measure(&base, lambda, lambda + d1 + d2).unwrap();
            let step = apply_impacted_measure(&base, lambda, lambda + d1).unwrap();
            let twice = apply_impacted_measure(&step, lambda + d1, lambda + d1 + d2).unwrap();
            let (a, b) = (once.mean_reversion().unwrap(), twice.mean_reversion().unwrap());
            prop_assert!((a - b).abs() < 1e-12 * a.abs().max(1.0), "{} vs {}", a, b);
        }
    }

    #[test]
    fn bond_prices_pull_to_par_and_fall_in_r(
        k in 0.05f64..1.0, theta in 0.0f64..0.1, sigma in 0.0f64..0.05,
        t in 0.0f64..5.0, h in 0.01f64..20.0, r in -0.02f64..0.2, dr in 1e-4f64..0.05,
    ) {
        let m = ShortRateModel::vasicek(k, theta, sigma, r).unwrap();
        prop_assert_eq!(zcb_price(&m, t, t, r).unwrap(), 1.0);
        prop_assert!(zcb_price(&m, t, t + h, r + dr).unwrap() < zcb_price(&m, t, t + h, r).unwrap());
    }

    #[test]
    fn eurodollar_falls_in_r0(r0 in 0.0f64..0.1, dr in 1e-3f64..0.05, lt in -0.5f64..0.5) {
        let mpr = MprConfig { lambda: 0.0, lambda_tilde: lt };
        let price = |r: f64| {
            let m = ShortRateModel::vasicek(0.8, 0.05, 0.02, r).unwrap();
            eurodollar_closed_form(&m, &mpr, 0.5, 0.75, 1.0, DayCount::Act365, EurodollarVariant::default()).unwrap()
        };
        prop_assert!(price(r0 + dr) < price(r0));
    }

    #[test]
    fn cross_impacted_drift_keeps_the_impacted_mpr(
        r in -0.02f64..0.2, pt in 0.3f64..1.2, ps in 0.3f64..1.2, j in -0.1f64..0.1,
        mu in -0.1f64..0.1, st in -0.5f64..-0.001, ss in -0.5f64..-0.001,
    ) {
        let lt = impacted_mpr(mu, st, pt, j, r).unwrap();
        let mu_s = cross_impact_drift(r, pt, j, mu, st, ss, ps).unwrap();
        let ls = impacted_mpr(mu_s, ss, ps, 0.0, r).unwrap();
        prop_assert!((lt - ls).abs() < 1e-10 * lt.abs().max(1.0), "{} vs {}", lt, ls);
    }

    #[test]
    fn trading_direction_sets_the_price_side(c in -5.0f64..5.0, rho in 0.1f64..10.0, gamma in 0.1f64..3.0) {
        prop_assume!(c.abs() > 1e-6);
        let tau = 10.0 / 365.0;
        let spec = ImpactSpec::power_law(0.01, 1.0, 1.0, rho, gamma, 0.0, 5.0, tau).unwrap();
        let v = SpeedSchedule::constant(c, tau).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 365).unwrap();
        let p = vec![0.7; grid.n_nodes()];
        let pt = impacted_zcb(&p, &v, &spec, &grid).unwrap();
        for (a, b) in pt.prices.iter().zip(&p).skip(1) {
            prop_assert_eq!((a - b).signum(), -c.signum());
        }
    }

    #[test]
    fn impact_decays_once_trading_stops(c in -5.0f64..5.0, rho in 0.1f64..10.0) {
        prop_assume!(c.abs() > 1e-6);
        let tau = 10.0 / 365.0;
        let spec = ImpactSpec::power_law(0.01, 1.0, 1.0, rho, 1.0, 0.0, 5.0, tau).unwrap();
        let v = SpeedSchedule::constant(c, tau).unwrap();
        let grid = TimeGrid::new(0.0, 1.0, 365).unwrap();
        let imp = overall_impact(&v, &spec, &grid).unwrap();
        let ups = transient_impact(&v, &spec, &grid);
        let i_tau = grid.nearest(tau);
        for i in i_tau + 1..grid.n_nodes() {
            let t = grid.time(i);
            let expected = spec.k.eval(t) * ups[i_tau] * (-rho * (t - grid.time(i_tau))).exp();
            prop_assert!((imp[i] - expected).abs() < 1e-12);
            prop_assert!(imp[i].abs() <= imp[i - 1].abs());
        }
    }

    #[test]
    fn density_integrates_to_impact(
        c0 in -3.0f64..3.0, c1 in -50.0f64..50.0, rho in 0.5f64..5.0, y in 0.0f64..0.05,
    ) {
        let tau = 10.0 / 365.0;
        let spec = ImpactSpec::power_law(0.01, 1.0, 1.0, rho, 1.0, y, 5.0, tau).unwrap();
        let v = SpeedSchedule::piecewise_linear(&[0.0, tau], &[c0, c0 + c1 * tau]).unwrap();
        let grid = TimeGrid::new(0.0, tau, 2000).unwrap();
        let p = vec![0.8; grid.n_nodes()];
        let direct = impacted_zcb(&p, &v, &spec, &grid).unwrap().prices;
        let integral = impacted_zcb_integral_form(&p, &v, &spec, &grid).unwrap();
        for (a, b) in direct.iter().zip(&integral) {
            prop_assert!((a - b).abs() < 1e-6, "{} vs {}", a, b);
        }
    }

    #[test]
    fn merged_moments_match_sequential(xs in prop::collection::vec(-1e3f64..1e3, 2..200), cut in 0usize..200) {
        let cut = cut.min(xs.len());
        let mut all = Moments::default();
        let (mut a, mut b) = (Moments::default(), Moments::default());
        for (i, &x) in xs.iter().enumerate() {
            all.push(x);
            if i < cut { a.push(x) } else { b.push(x) }
        }
        let (s, m) = (all.stat(), a.merge(&b).stat());
        prop_assert_eq!(s.n, m.n);
        prop_assert!((s.mean - m.mean).abs() < 1e-9);
        prop_assert!((s.se - m.se).abs() < 1e-9 * s.se.max(1.0));
    }

    #[test]
    fn streams_are_reproducible(seed in any::<u64>(), id in any::<u64>()) {
        let a = gaussian_increments(RngStream::new(seed, id), 16, 0.01).unwrap();
        let b = gaussian_increments(RngStream::new(seed, id), 16, 0.01).unwrap();
        prop_assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn riccati_tracks_closed_form(k in 0.05f64..1.5, theta in 0.0f64..0.1, sigma in 0.001f64..0.05, h in 0.5f64..10.0) {
        let m = ShortRateModel::vasicek(k, theta, sigma, 0.02).unwrap();
        let grid = TimeGrid::new(0.0, h, 2000).unwrap();
        let c = |v: f64| Table1D::constant(v, 0.0, h).unwrap();
        let tables = AffineTables { a: c(sigma * sigma), alpha: c(0.0), b: c(k * theta), beta: c(-k) };
        let ode = riccati_solve(&tables, h, &grid).unwrap();
        for (i, c) in ode.iter().enumerate() {
            let exact = affine_coeffs(&m, grid.time(i), h).unwrap();
            prop_assert!((c.a - exact.a).abs() < 1e-8 && (c.b - exact.b).abs() < 1e-8);
        }
    }

    #[test]
    fn objective_is_concave(
        a in prop::collection::vec(-40.0f64..40.0, 20), b in prop::collection::vec(-40.0f64..40.0, 20), w in 0.0f64..1.0,
    ) {
        let p = benchmark(2.0, 0.1, 1.0);
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| w * x + (1.0 - w) * y).collect();
        let ja = piecewise_objective(&p, &a).unwrap().total;
        let jb = piecewise_objective(&p, &b).unwrap().total;
        let jm = piecewise_objective(&p, &mix).unwrap().total;
        prop_assert!(jm >= w * ja + (1.0 - w) * jb - 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn feedback_solution_meets_the_oracle(x in -4.0f64..4.0, phi in 0.01f64..0.5, varrho in 0.2f64..2.0) {
        let p = benchmark(x, phi, varrho);
        let sol = solve_execution(&p, &TimeGrid::new(0.0, p.tau, 200).unwrap()).unwrap();
        let (_, best) = brute_force_qp(&p, 200).unwrap();
        prop_assert!((sol.objective.total - best).abs() <= 1e-3 * best.abs());
        prop_assert!(sol.objective.total <= best + 1e-8 * best.abs().max(1.0));
    }
}
