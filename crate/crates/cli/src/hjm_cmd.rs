//! `hjm-check`: drift-condition residuals of a forward-rate lattice read from CSV.

use std::path::Path;

use curve_impact::hjm::{fit_gamma, hjm_condition_residual, sup_norm};
use curve_impact::ForwardLattice;
use serde::Serialize;

use crate::output::{num, write_csv, write_json};
use crate::{prepare_out, CliError};

const SURFACES: [&str; 4] = ["forward", "sigma", "alpha", "jf"];

fn bad(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{}: {msg}", path.display()))
}

fn cell(s: &str) -> Result<f64, std::num::ParseFloatError> {
    let s = s.trim();
    if s.is_empty() {
        Ok(f64::NAN)
    } else {
        s.parse()
    }
}

/// Read a lattice CSV: header `surface,t,T1,...,Tm`, then one row per (surface, t).
/// Empty cells stand for maturities before t.
pub fn read_lattice(path: &Path) -> Result<ForwardLattice, CliError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_path(path).map_err(|e| bad(path, e))?;
    let header = rdr.headers().map_err(|e| bad(path, e))?.clone();
    if header.len() < 3 || &header[0] != "surface" || &header[1] != "t" {
        return Err(bad(path, "header must be `surface,t,T1,...`"));
    }
    let maturities: Vec<f64> = header.iter().skip(2).map(cell).collect::<Result<_, _>>().map_err(|e| bad(path, e))?;
    let mut times: Vec<f64> = Vec::new();
    let mut surfaces: [Vec<(f64, Vec<f64>)>; 4] = Default::default();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| bad(path, e))?;
        let k = SURFACES.iter().position(|&s| s == rec[0].trim()).ok_or_else(|| bad(path, format!("unknown surface `{}`", &rec[0])))?;
        let t = cell(&rec[1]).map_err(|e| bad(path, e))?;
        let row: Vec<f64> = rec.iter().skip(2).map(cell).collect::<Result<_, _>>().map_err(|e| bad(path, e))?;
        if k == 0 {
            times.push(t);
        }
        surfaces[k].push((t, row));
    }
    let mut grids = Vec::with_capacity(4);
    for (k, rows) in surfaces.iter().enumerate() {
        let ts: Vec<f64> = rows.iter().map(|r| r.0).collect();
        if ts != times {
            return Err(bad(path, format!("surface `{}` must list the same calendar times as `forward`", SURFACES[k])));
        }
        grids.push(rows.iter().map(|r| r.1.clone()).collect::<Vec<_>>());
    }
    let jf = grids.pop().unwrap_or_default();
    let alpha = grids.pop().unwrap_or_default();
    let sigma = grids.pop().unwrap_or_default();
    let forward = grids.pop().unwrap_or_default();
    Ok(ForwardLattice::new(times, maturities, forward, sigma, alpha, jf)?)
}

pub fn write_lattice(path: &Path, lattice: &ForwardLattice) -> Result<(), CliError> {
    let mut header = vec!["surface".to_string(), "t".to_string()];
    header.extend(lattice.maturities.iter().map(|&m| num(m)));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut rows = Vec::new();
    for (name, s) in SURFACES.iter().zip([&lattice.forward, &lattice.sigma, &lattice.alpha, &lattice.jf]) {
        for (i, &t) in lattice.times.iter().enumerate() {
            let mut r = vec![name.to_string(), num(t)];
            r.extend(s[i].iter().map(|&x| if x.is_nan() { String::new() } else { num(x) }));
            rows.push(r);
        }
    }
    write_csv(path, &header_refs, rows)
}

/// Read `t,gamma` rows, header optional.
pub fn read_gamma(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_path(path).map_err(|e| bad(path, e))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(path, e))?;
        if rec.len() < 2 {
            return Err(bad(path, "rows need t,gamma"));
        }
        match (cell(&rec[0]), cell(&rec[1])) {
            (Ok(t), Ok(g)) => out.push((t, g)),
            _ if i == 0 => {}
            _ => return Err(bad(path, format!("row {} is not numeric", i + 1))),
        }
    }
    Ok(out)
}

pub fn write_gamma(path: &Path, times: &[f64], gamma: &[f64]) -> Result<(), CliError> {
    write_csv(path, &["t", "gamma"], times.iter().zip(gamma).map(|(t, g)| vec![num(*t), num(*g)]))
}

#[derive(Debug, Clone, Serialize)]
pub struct HjmReport {
    pub calendar_times: usize,
    pub maturities: usize,
    pub maturity_spacing: f64,
    pub residual_sup: f64,
    pub residual_rms: f64,
    pub worst_t: f64,
    pub worst_maturity: f64,
    /// Per calendar time, the γ̃ minimizing the sup residual, and its distance to the input.
    pub fitted_gamma_max_abs_diff: f64,
    pub fitted_residual_sup: f64,
}

pub fn check(lattice: &ForwardLattice, gamma: &[(f64, f64)]) -> Result<HjmReport, CliError> {
    if gamma.len() != lattice.times.len() || gamma.iter().zip(&lattice.times).any(|((t, _), s)| (t - s).abs() > 1e-9) {
        return Err(CliError::Validation("gamma times must match the lattice calendar times".into()));
    }
    let g: Vec<f64> = gamma.iter().map(|p| p.1).collect();
    let res = hjm_condition_residual(lattice, &g)?;
    let (mut sq, mut n, mut worst) = (0.0, 0usize, (0.0f64, 0.0, 0.0));
    for (i, row) in res.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            if x.is_nan() {
                continue;
            }
            sq += x * x;
            n += 1;
            if x.abs() > worst.0 {
                worst = (x.abs(), lattice.times[i], lattice.maturities[j]);
            }
        }
    }
    let fitted = fit_gamma(lattice)?;
    let fitted_res = hjm_condition_residual(lattice, &fitted)?;
    Ok(HjmReport {
        calendar_times: lattice.times.len(),
        maturities: lattice.maturities.len(),
        maturity_spacing: lattice.spacing(),
        residual_sup: sup_norm(&res),
        residual_rms: if n > 0 { (sq / n as f64).sqrt() } else { 0.0 },
        worst_t: worst.1,
        worst_maturity: worst.2,
        fitted_gamma_max_abs_diff: fitted.iter().zip(&g).fold(0.0, |m, (a, b)| m.max((a - b).abs())),
        fitted_residual_sup: sup_norm(&fitted_res),
    })
}

pub fn run(lattice: &Path, gamma: &Path, out: Option<&Path>) -> Result<String, CliError> {
    let l = read_lattice(lattice)?;
    let g = read_gamma(gamma)?;
    let report = check(&l, &g)?;
    if let Some(dir) = out {
        prepare_out(dir)?;
        write_json(&dir.join("hjm_check.json"), &report)?;
    }
    serde_json::to_string(&report).map_err(|e| CliError::Other(e.into()))
}
