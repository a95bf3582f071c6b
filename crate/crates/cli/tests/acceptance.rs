//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Always exits 0 so the workspace test run reflects build health; set
//! `ACCEPTANCE_STRICT=1` to turn any FAIL into a non-zero exit.

use std::path::{Path, PathBuf};
use std::time::Instant;

use curve_impact::affine::{affine_coeffs, riccati_solve, zcb_price};
use curve_impact::curve::{lambda_tilde_consistency, simulate_impacted_curve};
use curve_impact::hjm::{hjm_condition_residual, sup_norm, vasicek_round_trip_error};
use curve_impact::impact::{impacted_zcb, impacted_zcb_integral_form};
use curve_impact::pricing::{eurodollar_closed_form, eurodollar_mc, impacted_zcb_expectation_mc, McOptions};
use curve_impact::short_rate::AffineTables;
use curve_impact::*;
use curve_impact_cli::config::{parse, CurveConfig, OptexecConfig, DAYS_PER_YEAR, OPTEXEC_BENCHMARK, PAPER_SEC5};
use curve_impact_cli::curve_cmd::{compute, crossing_for, CurveOutputs};
use curve_impact_cli::optexec_cmd;

type Res<T> = std::result::Result<T, Box<dyn std::error::Error>>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn day(run: &CurveRun, d: f64) -> usize {
    let t = d / DAYS_PER_YEAR;
    (0..run.times.len()).min_by(|&a, &b| (run.times[a] - t).abs().total_cmp(&(run.times[b] - t).abs())).unwrap()
}

fn preset() -> CurveConfig {
    parse(PAPER_SEC5).expect("bundled preset parses")
}

fn c1(res: &CurveOutputs) -> Outcome {
    let snap = res.base.snapshot(0, day(&res.base, 5.0));
    let worst = snap.entries.iter().map(|e| e.gap.mean / e.gap.se).fold(f64::NEG_INFINITY, f64::max);
    let secs = res.timings["base"];
    let gaps: Vec<String> = snap.entries.iter().map(|e| format!("T={}: {:.3e}", e.maturity, e.gap.mean)).collect();
    outcome(
        worst < -4.0 && secs < 60.0,
        format!("gaps {} | least significant z = {worst:.1} (< -4) | base run {secs:.2}s", gaps.join(", ")),
    )
}

fn c2(res: &CurveOutputs) -> Outcome {
    let snap = res.base.snapshot(0, day(&res.base, 270.0));
    let max_gap = snap.entries.iter().map(|e| e.gap.mean.abs()).fold(0.0, f64::max);
    let max_z = snap.entries.iter().map(|e| (e.gap.mean / e.gap.se).abs()).fold(0.0, f64::max);
    outcome(max_gap < 2e-3 && max_z <= 4.0, format!("max |gap| = {max_gap:.3e} (< 2e-3), max |z| = {max_z:.1} (<= 4)"))
}

fn c3() -> Res<Outcome> {
    let mut cfg = preset();
    cfg.rho_sweep = None;
    cfg.k_sweep = None;
    let seeds: Vec<u64> = (0..5).map(|i| cfg.seed + i).collect();
    let mut all = true;
    let mut lines = Vec::new();
    for &seed in &seeds {
        cfg.seed = seed;
        let experiment = cfg.experiment(Path::new("."))?;
        let run = simulate_impacted_curve(&experiment)?;
        let atol = cfg.crossing.as_ref().map_or(1e-6, |c| c.atol);
        let times: Vec<Option<f64>> =
            [5.0, 10.0, 15.0].iter().map(|&m| crossing_for(&run, m, experiment.impact.tau, atol).time()).collect();
        let ok = match (times[0], times[1], times[2]) {
            (Some(a), Some(b), Some(c)) => a > b && b > c,
            _ => false,
        };
        all &= ok;
        let fmt = |t: &Option<f64>| t.map_or("none".to_string(), |t| format!("{:.1}d", t * DAYS_PER_YEAR));
        lines.push(format!("seed {seed}: {}", times.iter().map(fmt).collect::<Vec<_>>().join("/")));
    }
    Ok(outcome(all, format!("crossing days for T=5/10/15: {}", lines.join("; "))))
}

fn c4(res: &CurveOutputs) -> Outcome {
    let Some((rhos, sweep)) = &res.rho else { return outcome(false, "no rho sweep configured") };
    let m = sweep.maturities.iter().position(|&x| x == 1.0).unwrap();
    let i = day(sweep, 15.0);
    let p = sweep.snapshot(0, i).entries[m].p.mean;
    let dist: Vec<f64> = (0..rhos.len()).map(|s| (sweep.snapshot(s, i).entries[m].p_tilde.mean - p).abs()).collect();
    let monotone = dist.windows(2).all(|w| w[1] < w[0]);
    let paired: Vec<f64> = (1..rhos.len())
        .map(|s| {
            let d = sweep.scenarios[s].vs_first[i][m];
            d.mean / d.se
        })
        .collect();
    let significant = paired.iter().all(|z| z.abs() > 4.0);
    outcome(
        monotone && significant,
        format!(
            "rho {rhos:?}: |Ptilde - P| at 15d = [{}], paired z vs rho={} = {paired:.1?}",
            dist.iter().map(|d| format!("{d:.3e}")).collect::<Vec<_>>().join(", "),
            rhos[0]
        ),
    )
}

fn c5(res: &CurveOutputs) -> Outcome {
    let avg = |run: &CurveRun| {
        let snap = run.snapshot(0, day(run, 270.0));
        let picked: Vec<_> = snap.entries.iter().filter(|e| [5.0, 10.0, 15.0].contains(&e.maturity)).collect();
        let n = picked.len() as f64;
        // SEs summed rather than added in quadrature: the maturities share paths.
        (picked.iter().map(|e| e.gap.mean).sum::<f64>() / n, picked.iter().map(|e| e.gap.se).sum::<f64>() / n)
    };
    let find = |k: f64| res.k.iter().find(|(x, _)| *x == k).map(|(_, r)| avg(r));
    let (Some((g_lo, se_lo)), Some((g_hi, se_hi))) = (find(0.01), find(0.2)) else {
        return outcome(false, "k sweep must contain 0.01 and 0.2");
    };
    let margin = g_lo.abs() - g_hi.abs();
    outcome(
        margin > 4.0 * (se_lo + se_hi),
        format!("mean gap at 270d: k=0.01 {g_lo:.3e} (se {se_lo:.1e}), k=0.2 {g_hi:.3e} (se {se_hi:.1e})"),
    )
}

fn c6() -> Res<Outcome> {
    let mpr = MprConfig { lambda: 0.0, lambda_tilde: 0.5 };
    let vasicek = ShortRateModel::vasicek(0.2, 0.1, 0.05, 0.01)?;
    let curve = ForwardCurve::new(vec![0.0, 1.0, 2.0, 5.0, 10.0, 30.0], vec![0.01, 0.015, 0.02, 0.03, 0.035, 0.04])?;
    let hull_white = ShortRateModel::hull_white(0.2, 0.01, 0.01, curve)?;
    let seeds = [61u64, 62, 63, 64];
    let mut all = true;
    let mut parts = Vec::new();
    for (j, (name, model)) in [("vasicek", &vasicek), ("hull-white", &hull_white)].into_iter().enumerate() {
        let tilde = mpr.impacted_model(model)?;

        let t0 = Instant::now();
        let cf = zcb_price(&tilde, 0.0, 5.0, model.r0())?;
        let (mc, se) = impacted_zcb_expectation_mc(&tilde, 0.0, 5.0, model.r0(), &McOptions::new(seeds[2 * j], 100_000))?;
        let secs = t0.elapsed().as_secs_f64();
        let z = (mc - cf) / se;
        all &= z.abs() <= 3.0 && secs < 30.0;
        parts.push(format!("{name} P(0,5) z={z:.2} ({secs:.1}s)"));

        let t0 = Instant::now();
        let dc = DayCount::Act365;
        let cf = eurodollar_closed_form(model, &mpr, 1.0, 1.25, 1.0, dc, EurodollarVariant::DynamicsConsistent)?;
        let (mc, se) = eurodollar_mc(&tilde, 1.0, 1.25, 1.0, dc, &McOptions::new(seeds[2 * j + 1], 100_000))?;
        let secs = t0.elapsed().as_secs_f64();
        let z = (mc - cf) / se;
        all &= z.abs() <= 3.0 && secs < 30.0;
        parts.push(format!("{name} Eurodollar z={z:.2} ({secs:.1}s)"));
    }
    Ok(outcome(all, parts.join(", ")))
}

fn lattice_mats(t0: f64, t1: f64, h: f64) -> Vec<f64> {
    let n = ((t1 - t0) / h).round() as usize;
    (0..=n).map(|j| t0 + j as f64 * h).collect()
}

fn c7(res: &CurveOutputs) -> Res<Outcome> {
    let mut parts = Vec::new();
    let mut all = true;
    let mut check = |ok: bool, s: String| {
        all &= ok;
        parts.push(format!("{s} [{}]", if ok { "ok" } else { "FAIL" }));
    };

    // The traded bond must reach par; cross-impacted ones are only measured.
    let tau = 10.0 / DAYS_PER_YEAR;
    let mut short = res.experiment.clone();
    short.maturities = vec![0.5];
    short.traded = 0.5;
    short.impact = ImpactSpec::power_law(0.01, 1.0, 1.0, 2.0, 1.0, 0.01, 0.5, tau)?;
    short.grid = TimeGrid::new(0.0, 0.5, 200)?;
    short.n_paths = 2000;
    let run = simulate_impacted_curve(&short)?;
    let last = &run.snapshot(0, 200).entries[0];
    check(last.p_tilde.mean == 1.0 && last.p_tilde.se == 0.0, format!("traded Ptilde(T,T) = {}", last.p_tilde.mean));
    let base = &res.base;
    let m = base.maturities.iter().position(|&x| x == 1.0).unwrap();
    let cross = base.snapshot(0, base.times.len() - 1).entries[m].p_tilde.mean;

    let lam = lambda_tilde_consistency(&res.experiment, 50)?;
    check(lam < 1e-10, format!("lambda-tilde spread {lam:.1e}"));

    let spec = ImpactSpec::power_law(0.01, 1.0, 1.0, 2.0, 1.0, 0.01, 5.0, tau)?;
    let speed = SpeedSchedule::constant(-2.0, tau)?;
    let bump = MaturityProfile::Gaussian { center: 5.0, width: 0.5 };
    let mut rt: f64 = 0.0;
    for t in [5.0 / DAYS_PER_YEAR, 11.0 / DAYS_PER_YEAR, 0.1, 270.0 / DAYS_PER_YEAR] {
        rt = rt.max(vasicek_round_trip_error(0.2, 0.1, 0.05, 0.04, t, 10.0, 0.01, &speed, &spec, bump)?);
    }
    rt = rt.max(vasicek_round_trip_error(0.2, 0.1, 0.05, 0.04, 0.5, 5.5, 0.01, &speed, &spec, MaturityProfile::Uniform)?);
    check(rt < 1e-4, format!("HJM round trip {rt:.1e}"));

    let gam = [0.3, -0.7, 1.1];
    let mut errs = Vec::new();
    for h in [0.02, 0.01] {
        let mut l = ForwardLattice::vasicek(0.3, 0.05, 0.02, 0.0, vec![0.0, 0.5, 1.0], &[0.03; 3], lattice_mats(0.0, 6.0, h))?;
        l.set_drift_from_condition(&gam)?;
        errs.push(sup_norm(&hjm_condition_residual(&l, &gam)?));
    }
    let order = (errs[0] / errs[1]).log2();
    check((order - 2.0).abs() < 0.2 && errs[1] < 1e-6, format!("HJM residual {:.1e} at dT=0.01, order {order:.2}", errs[1]));

    let mut ric: f64 = 0.0;
    for (k, theta, sigma, h) in [(0.2, 0.1, 0.05, 5.0), (0.05, 0.03, 0.01, 10.0), (1.5, 0.0, 0.02, 1.0)] {
        let model = ShortRateModel::vasicek(k, theta, sigma, 0.02)?;
        let grid = TimeGrid::new(0.0, h, 2000)?;
        let c = |v: f64| Table1D::constant(v, 0.0, h);
        let tables = AffineTables { a: c(sigma * sigma)?, alpha: c(0.0)?, b: c(k * theta)?, beta: c(-k)? };
        for (i, co) in riccati_solve(&tables, h, &grid)?.iter().enumerate() {
            let exact = affine_coeffs(&model, grid.time(i), h)?;
            ric = ric.max((co.a - exact.a).abs()).max((co.b - exact.b).abs());
        }
    }
    check(ric < 1e-8, format!("Riccati {ric:.1e}"));

    let grid = TimeGrid::new(0.0, tau, 2000)?;
    let p = vec![0.8; grid.n_nodes()];
    let mut ij: f64 = 0.0;
    for v in [speed.clone(), SpeedSchedule::piecewise_linear(&[0.0, tau], &[3.0, -1.0])?] {
        let direct = impacted_zcb(&p, &v, &spec, &grid)?.prices;
        let integral = impacted_zcb_integral_form(&p, &v, &spec, &grid)?;
        ij = direct.iter().zip(&integral).map(|(a, b)| (a - b).abs()).fold(ij, f64::max);
    }
    check(ij < 1e-6, format!("int J vs I {ij:.1e}"));

    Ok(outcome(all, format!("{} (cross-impacted Ptilde(1,1) = {cross:.6}, reported only)", parts.join(", "))))
}

fn c8() -> Res<Outcome> {
    let cfg: OptexecConfig = parse(OPTEXEC_BENCHMARK)?;
    let (_, r, secs) = optexec_cmd::solve(&cfg)?;
    let gap = r.gap.unwrap_or(f64::INFINITY);
    let a = &r.admissibility;
    let margins = a.a1_inf > 0.0 && a.a3_psi44_inf > 0.0 && a.a3_g3_inf > 0.0;
    Ok(outcome(
        gap < 1e-3 && r.foc_relative < 1e-6 && r.terminal_identity_error < 1e-8 && r.admissible && margins,
        format!(
            "gap {gap:.2e}, FOC/P0 {:.1e}, terminal {:.1e}, margins a1 {:.3e} psi44 {:.3e} G3 {:.3e} ({secs:.2}s)",
            r.foc_relative, r.terminal_identity_error, a.a1_inf, a.a3_psi44_inf, a.a3_g3_inf
        ),
    ))
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

fn c9() -> Outcome {
    let root = tempfile::tempdir().unwrap();
    let commands: [(&str, Vec<&str>); 3] = [
        ("simulate-curve", vec!["simulate-curve", "--preset", "paper_sec5"]),
        ("optexec", vec!["optexec", "--preset", "optexec_benchmark"]),
        (
            "price-eurodollar",
            vec![
                "price-eurodollar", "--k", "0.2", "--theta", "0.1", "--sigma", "0.05", "--r0", "0.01", "--lambda-tilde", "0.5",
                "--expiry", "1", "--maturity", "1.25", "--paths", "100000", "--seed", "7",
            ],
        ),
    ];
    let mut all = true;
    let mut parts = Vec::new();
    for (name, args) in &commands {
        let mut outputs = Vec::new();
        for threads in ["1", "4", "16"] {
            let out: PathBuf = root.path().join(format!("{name}-{threads}"));
            let mut argv = vec!["curve-impact", "--threads", threads];
            argv.extend(args.iter().copied());
            argv.extend(["--out", out.to_str().unwrap()]);
            let code = curve_impact_cli::run(argv);
            if code != 0 {
                all = false;
                parts.push(format!("{name} exited {code} at {threads} threads"));
            }
            outputs.push(csv_files(&out));
        }
        let same = !outputs[0].is_empty() && outputs.iter().all(|o| *o == outputs[0]);
        all &= same;
        parts.push(format!("{name} {} CSVs {}", outputs[0].len(), if same { "identical" } else { "DIFFER" }));
    }
    outcome(all, format!("1/4/16 threads: {}", parts.join(", ")))
}

fn report(n: usize, o: Res<Outcome>) -> bool {
    let o = o.unwrap_or_else(|e| outcome(false, format!("error: {e}")));
    println!("criterion {n}: {} | {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    o.pass
}

fn main() {
    let cfg = preset();
    let res = compute(&cfg, Path::new(".")).expect("paper preset runs");
    let results = [
        report(1, Ok(c1(&res))),
        report(2, Ok(c2(&res))),
        report(3, c3()),
        report(4, Ok(c4(&res))),
        report(5, Ok(c5(&res))),
        report(6, c6()),
        report(7, c7(&res)),
        report(8, c8()),
        report(9, Ok(c9())),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria pass", results.len());
    if passed < results.len() && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
