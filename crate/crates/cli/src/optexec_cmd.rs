//! `optexec`: feedback-form optimal execution, certified against the brute-force QP.

use std::path::Path;
use std::time::Instant;

use curve_impact::execution::{brute_force_qp, solve_execution_with, AdmissibilityReport, ObjectiveBreakdown};
use curve_impact::{ExecutionSolution, TimeGrid};
use serde::Serialize;

use crate::config::{ensure_valid, OptexecConfig};
use crate::output::{num, write_csv, write_json, write_run_record, Meta};
use crate::{prepare_out, CliError};

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub objective: f64,
    pub objective_terms: ObjectiveBreakdown,
    pub oracle_objective: Option<f64>,
    /// |J(v̂) − J*| / |J*|
    pub gap: Option<f64>,
    pub foc_sup_residual: f64,
    /// FOC sup-residual divided by P(0).
    pub foc_relative: f64,
    pub terminal_identity_error: f64,
    pub z_consistency: f64,
    pub det_error: f64,
    pub picard_iterations: usize,
    pub refinement_change: Option<f64>,
    pub admissible: bool,
    pub admissibility: AdmissibilityReport,
}

pub fn solve(cfg: &OptexecConfig) -> Result<(ExecutionSolution, Report, f64), CliError> {
    ensure_valid(cfg.violations())?;
    let p = cfg.problem()?;
    let t0 = Instant::now();
    let sol = solve_execution_with(&p, &TimeGrid::new(0.0, p.tau, cfg.steps)?, cfg.psi_form)?;
    let oracle = if cfg.oracle_steps > 0 { Some(brute_force_qp(&p, cfg.oracle_steps)?.1) } else { None };
    let elapsed = t0.elapsed().as_secs_f64();
    let j = sol.objective.total;
    let report = Report {
        objective: j,
        objective_terms: sol.objective,
        oracle_objective: oracle,
        gap: oracle.map(|o| (j - o).abs() / o.abs().max(f64::MIN_POSITIVE)),
        foc_sup_residual: sol.foc_sup_residual,
        foc_relative: sol.foc_sup_residual / p.price.p0().abs(),
        terminal_identity_error: sol.terminal_identity_error,
        z_consistency: sol.z_consistency,
        det_error: sol.det_error,
        picard_iterations: sol.picard_iterations,
        refinement_change: sol.refinement_change,
        admissible: sol.admissibility.ok,
        admissibility: sol.admissibility.clone(),
    };
    Ok((sol, report, elapsed))
}

pub fn write(cfg: &OptexecConfig, sol: &ExecutionSolution, report: &Report, elapsed: f64, out: &Path) -> Result<(), CliError> {
    prepare_out(out)?;
    let rows = (0..sol.times.len())
        .map(|i| vec![num(sol.times[i]), num(sol.v[i]), num(sol.x[i]), num(sol.upsilon[i]), num(sol.z[i])]);
    write_csv(&out.join("schedule.csv"), &["t", "v", "X", "Upsilon", "Z"], rows)?;
    let rows = sol.coeffs.iter().map(|c| {
        let mut r = vec![num(c.t)];
        r.extend(c.v.iter().map(|&x| num(x)));
        r.extend(c.g.iter().map(|&x| num(x)));
        r
    });
    write_csv(&out.join("coeffs.csv"), &["t", "v0", "v1", "v2", "v3", "G1", "G2", "G3", "G4"], rows)?;
    write_json(&out.join("report.json"), report)?;
    let mut meta = Meta::new(cfg, 0);
    meta.timings.insert("solve".to_string(), elapsed);
    write_run_record(out, cfg, &meta)
}

pub fn run(cfg: &OptexecConfig, out: &Path) -> Result<String, CliError> {
    let (sol, report, elapsed) = solve(cfg)?;
    write(cfg, &sol, &report, elapsed, out)?;
    let gap = report.gap.map(|g| format!("{g:.3e}")).unwrap_or_else(|| "n/a".into());
    Ok(format!(
        "optexec: J = {}, oracle gap {}, FOC sup-residual {:.3e}, terminal identity {:.3e}, admissible {} -> {}",
        report.objective,
        gap,
        report.foc_sup_residual,
        report.terminal_identity_error,
        report.admissible,
        out.display()
    ))
}
