//! `simulate-curve`: averaged impacted yield curves and the figure CSVs.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use curve_impact::affine::yield_with_convention;
use curve_impact::curve::{first_crossing_time, mean_reversion_sweep, rho_sweep, simulate_impacted_curve};
use curve_impact::{Crossing, CurveExperimentConfig, CurveRun, Stat};

use crate::config::{ensure_valid, CurveConfig, DAYS_PER_YEAR};
use crate::output::{num, write_csv, write_run_record, Meta};
use crate::{prepare_out, CliError};

/// Everything `simulate-curve` computes before writing.
#[derive(Debug, Clone)]
pub struct CurveOutputs {
    pub experiment: CurveExperimentConfig,
    pub base: CurveRun,
    pub crossings: Vec<(f64, Crossing)>,
    pub rho: Option<(Vec<f64>, CurveRun)>,
    pub k: Vec<(f64, CurveRun)>,
    pub timings: BTreeMap<String, f64>,
}

fn index_of(xs: &[f64], x: f64) -> usize {
    xs.iter().position(|&m| m == x).unwrap_or(0)
}

/// Crossing of averaged P̃ and P for one maturity of scenario 0, searched after `start`.
pub fn crossing_for(run: &CurveRun, maturity: f64, start: f64, atol: f64) -> Crossing {
    let m = index_of(&run.maturities, maturity);
    let sc = &run.scenarios[0];
    let pt: Vec<f64> = sc.snapshots.iter().map(|s| s.entries[m].p_tilde.mean).collect();
    let p: Vec<f64> = sc.snapshots.iter().map(|s| s.entries[m].p.mean).collect();
    first_crossing_time(&run.times, &pt, &p, start, atol)
}

pub fn compute(cfg: &CurveConfig, base: &Path) -> Result<CurveOutputs, CliError> {
    ensure_valid(cfg.violations())?;
    let experiment = cfg.experiment(base)?;
    let mut timings = BTreeMap::new();

    let t0 = Instant::now();
    let run = simulate_impacted_curve(&experiment)?;
    timings.insert("base".to_string(), t0.elapsed().as_secs_f64());

    let crossings = match &cfg.crossing {
        Some(c) => c.maturities.iter().map(|&m| (m, crossing_for(&run, m, experiment.impact.tau, c.atol))).collect(),
        None => Vec::new(),
    };

    let rho = match &cfg.rho_sweep {
        Some(r) => {
            let t0 = Instant::now();
            let out = rho_sweep(&experiment, &r.rhos)?;
            timings.insert("rho_sweep".to_string(), t0.elapsed().as_secs_f64());
            Some((r.rhos.clone(), out))
        }
        None => None,
    };

    let k = match &cfg.k_sweep {
        Some(s) => {
            let t0 = Instant::now();
            let out = mean_reversion_sweep(&experiment, &s.ks)?;
            timings.insert("k_sweep".to_string(), t0.elapsed().as_secs_f64());
            out
        }
        None => Vec::new(),
    };

    Ok(CurveOutputs { experiment, base: run, crossings, rho, k, timings })
}

fn stat_pair(s: &Stat) -> [String; 2] {
    [num(s.mean), num(s.se)]
}

fn exclusions(meta: &mut Meta, label: &str, run: &CurveRun) {
    for (s, sc) in run.scenarios.iter().enumerate() {
        for (m, &n) in run.maturities.iter().zip(&sc.degenerate) {
            let key = if run.scenarios.len() > 1 { format!("{label}[{s}]/T{}", num(*m)) } else { format!("{label}/T{}", num(*m)) };
            meta.exclusion_counts.insert(key, n);
        }
    }
}

pub fn write(cfg: &CurveConfig, res: &CurveOutputs, out: &Path) -> Result<usize, CliError> {
    prepare_out(out)?;
    let run = &res.base;
    let grid = &res.experiment.grid;
    let conv = res.experiment.yield_convention;
    let mut files = 0;

    for &d in &cfg.snapshot_days {
        let i = grid.nearest(d as f64 / DAYS_PER_YEAR);
        let snap = run.snapshot(0, i);
        let rows = snap.entries.iter().map(|e| {
            let y_of = |p: f64| yield_with_convention(p, snap.t, e.maturity, conv).unwrap_or(f64::NAN);
            let y_mean_p = if snap.t < e.maturity { y_of(e.p.mean) } else { f64::NAN };
            let yt_mean_p = if snap.t < e.maturity { y_of(e.p_tilde.mean) } else { f64::NAN };
            vec![
                num(e.maturity),
                num(e.y.mean),
                num(e.y_tilde.mean),
                num(e.y.se),
                num(e.y_tilde.se),
                num(e.gap.mean),
                num(e.gap.se),
                num(y_mean_p),
                num(yt_mean_p),
                e.degenerate.to_string(),
            ]
        });
        write_csv(
            &out.join(format!("yield_curves_t{d}.csv")),
            &[
                "maturity",
                "Y_mean",
                "Ytilde_mean",
                "Y_se",
                "Ytilde_se",
                "gap_mean",
                "gap_se",
                "Y_from_mean_P",
                "Ytilde_from_mean_Ptilde",
                "degenerate",
            ],
            rows,
        )?;
        files += 1;
    }

    for (m, &mat) in run.maturities.iter().enumerate() {
        let rows = run.scenarios[0].snapshots.iter().map(|s| {
            let e = &s.entries[m];
            let mut r = vec![num(s.t)];
            for st in [&e.p, &e.p_tilde, &e.diff] {
                r.extend(stat_pair(st));
            }
            r.push(num(e.y.mean));
            r.push(num(e.y_tilde.mean));
            r
        });
        write_csv(
            &out.join(format!("bond_paths_T{}.csv", num(mat))),
            &["t", "P_mean", "P_se", "Ptilde_mean", "Ptilde_se", "diff_mean", "diff_se", "Y_mean", "Ytilde_mean"],
            rows,
        )?;
        files += 1;
    }

    if cfg.crossing.is_some() {
        let rows = res.crossings.iter().map(|(m, c)| {
            let rule = match c {
                Crossing::Identical => "identical",
                Crossing::SignChange { .. } => "sign-change",
                Crossing::Tolerance { .. } => "tolerance",
                Crossing::None => "none",
            };
            let (ty, td) = match c.time() {
                Some(t) => (num(t), num(t * DAYS_PER_YEAR)),
                None => (String::new(), String::new()),
            };
            vec![num(*m), rule.to_string(), ty, td]
        });
        write_csv(&out.join("crossing_times.csv"), &["maturity", "rule", "t_years", "t_days"], rows)?;
        files += 1;
    }

    if let (Some((rhos, sweep)), Some(rc)) = (&res.rho, &cfg.rho_sweep) {
        let m = index_of(&sweep.maturities, rc.maturity);
        let mut rows = Vec::new();
        for (s, &rho) in rhos.iter().enumerate() {
            let sc = &sweep.scenarios[s];
            for (i, snap) in sc.snapshots.iter().enumerate() {
                let e = &snap.entries[m];
                let mut r = vec![num(rho), num(snap.t), num(e.p.mean)];
                r.extend(stat_pair(&e.p_tilde));
                r.extend(stat_pair(&sc.vs_first[i][m]));
                rows.push(r);
            }
        }
        write_csv(
            &out.join("rho_sweep.csv"),
            &["rho", "t", "P_mean", "Ptilde_mean", "Ptilde_se", "diff_vs_first_mean", "diff_vs_first_se"],
            rows,
        )?;
        files += 1;
    }

    if !res.k.is_empty() {
        let mut rows = Vec::new();
        for (k, kr) in &res.k {
            for snap in &kr.scenarios[0].snapshots {
                for e in &snap.entries {
                    rows.push(vec![
                        num(*k),
                        num(snap.t),
                        num(e.maturity),
                        num(e.y.mean),
                        num(e.y_tilde.mean),
                        num(e.gap.mean),
                        num(e.gap.se),
                    ]);
                }
            }
        }
        write_csv(&out.join("k_sweep.csv"), &["k", "t", "maturity", "Y_mean", "Ytilde_mean", "gap_mean", "gap_se"], rows)?;
        files += 1;
    }

    let mut meta = Meta::new(cfg, cfg.seed);
    exclusions(&mut meta, "base", run);
    if let Some((_, sweep)) = &res.rho {
        exclusions(&mut meta, "rho_sweep", sweep);
    }
    for (k, kr) in &res.k {
        exclusions(&mut meta, &format!("k_sweep(k={})", num(*k)), kr);
    }
    meta.timings = res.timings.clone();
    write_run_record(out, cfg, &meta)?;
    Ok(files)
}

pub fn run(cfg: &CurveConfig, base: &Path, out: &Path) -> Result<String, CliError> {
    let t0 = Instant::now();
    let res = compute(cfg, base)?;
    let files = write(cfg, &res, out)?;
    let excluded: u64 = res.base.scenarios[0].degenerate.iter().sum();
    Ok(format!(
        "simulate-curve: {} maturities x {} nodes x {} paths, {} CSV files, {} excluded paths, {:.2}s -> {}",
        cfg.maturities.len(),
        res.base.times.len(),
        cfg.paths,
        files,
        excluded,
        t0.elapsed().as_secs_f64(),
        out.display()
    ))
}
