//! Cross-impact across maturities and the averaged impacted yield-curve experiment.

use serde::{Deserialize, Serialize};

use crate::affine::{affine_coeffs, drift_vol_from, yield_with_convention, BondCoeffs, YieldConvention};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::impact::{impact_density, overall_impact, ImpactSpec, SpeedSchedule};
use crate::mc::{block_reduce, Mergeable, Moments, RngStream, Stat};
use crate::pricing::impacted_mpr;
use crate::short_rate::{EulerScheme, ShortRateModel};

/// How the cross-impacted bonds are integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossScheme {
    /// P̃_S = P_S + D_S with the closed-form P_S and Euler on the impact part
    /// dD_S = [r D_S + (σ_S/σ_T)(r I_T − J_T)] dt.
    #[default]
    Decomposed,
    /// Euler on the full cross-impacted SDE with the short rate's increments.
    EulerFull,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveExperimentConfig {
    /// Pricing model under Q.
    pub model: ShortRateModel,
    /// Slope of the Q kernel; the short rate is simulated under P.
    pub lambda: f64,
    pub maturities: Vec<f64>,
    pub traded: f64,
    pub impact: ImpactSpec,
    pub speed: SpeedSchedule,
    pub grid: TimeGrid,
    pub n_paths: usize,
    pub seed: u64,
    pub yield_convention: YieldConvention,
    pub cross_scheme: CrossScheme,
}

impl CurveExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.impact.validate()?;
        if self.maturities.is_empty() || self.maturities.iter().any(|&m| !(m > 0.0)) {
            return Err(Error::param("maturities", "need positive maturities"));
        }
        if !self.maturities.contains(&self.traded) {
            return Err(Error::param("traded", format!("traded maturity {} not in the maturity set", self.traded)));
        }
        if self.impact.maturity != self.traded {
            return Err(Error::param("impact", "impact spec maturity must equal the traded maturity"));
        }
        if self.grid.t0() != 0.0 {
            return Err(Error::Grid("experiment grid must start at 0".into()));
        }
        let min = self.maturities.iter().cloned().fold(f64::INFINITY, f64::min);
        if self.grid.t1() > min + 1e-12 {
            return Err(Error::Grid(format!("horizon {} passes the shortest maturity {min}", self.grid.t1())));
        }
        if self.n_paths < 2 {
            return Err(Error::param("n_paths", "need at least 2 paths"));
        }
        Ok(())
    }

    fn traded_index(&self) -> usize {
        self.maturities.iter().position(|&m| m == self.traded).unwrap_or(0)
    }
}

/// μ_S = (σ_S/σ_T)[μ_T − r P̃_T − J_T] + r P̃_S.
pub fn cross_impact_drift(
    r: f64,
    p_tilde_t: f64,
    j_t: f64,
    mu_t: f64,
    sigma_t: f64,
    sigma_s: f64,
    p_tilde_s: f64,
) -> Result<f64> {
    if sigma_t == 0.0 {
        return Err(Error::DegenerateVolatility { t: f64::NAN });
    }
    Ok(sigma_s / sigma_t * (mu_t - r * p_tilde_t - j_t) + r * p_tilde_s)
}

/// Path-averaged statistics of one maturity at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaturityStats {
    pub maturity: f64,
    pub p: Stat,
    pub p_tilde: Stat,
    pub y: Stat,
    pub y_tilde: Stat,
    /// Paired Ỹ − Y.
    pub gap: Stat,
    /// Paired P̃ − P.
    pub diff: Stat,
    pub degenerate: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSnapshot {
    pub t: f64,
    pub entries: Vec<MaturityStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioResult {
    pub impact: ImpactSpec,
    pub snapshots: Vec<CurveSnapshot>,
    /// Paths excluded from impacted-yield averages, per maturity.
    pub degenerate: Vec<u64>,
    /// Paired P̃(scenario) − P̃(first scenario), per node and maturity.
    pub vs_first: Vec<Vec<Stat>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRun {
    pub times: Vec<f64>,
    pub maturities: Vec<f64>,
    pub n_paths: usize,
    pub scenarios: Vec<ScenarioResult>,
}

impl CurveRun {
    pub fn snapshot(&self, scenario: usize, node: usize) -> &CurveSnapshot {
        &self.scenarios[scenario].snapshots[node]
    }
}

const Q: usize = 7;
const QP: usize = 0;
const QPT: usize = 1;
const QY: usize = 2;
const QYT: usize = 3;
const QGAP: usize = 4;
const QDIFF: usize = 5;
const QVS: usize = 6;

struct CurveAcc {
    moments: Vec<Moments>,
    degenerate: Vec<u64>,
}

impl Mergeable for CurveAcc {
    fn merge(self, other: Self) -> Self {
        let moments = self.moments.merge(other.moments);
        let degenerate = self.degenerate.iter().zip(&other.degenerate).map(|(a, b)| a + b).collect();
        CurveAcc { moments, degenerate }
    }
}

/// Deterministic per-node tables shared by every path.
struct Tables {
    coeffs: Vec<Vec<BondCoeffs>>,
    impact: Vec<Vec<f64>>,
    density: Vec<Vec<f64>>,
}

fn build_tables(cfg: &CurveExperimentConfig, specs: &[ImpactSpec]) -> Result<Tables> {
    let n = cfg.grid.n_nodes();
    let mut coeffs = Vec::with_capacity(n);
    for i in 0..n {
        let t = cfg.grid.time(i);
        coeffs.push(cfg.maturities.iter().map(|&m| affine_coeffs(&cfg.model, t, m)).collect::<Result<Vec<_>>>()?);
    }
    let mut impact = Vec::new();
    let mut density = Vec::new();
    for s in specs {
        impact.push(overall_impact(&cfg.speed, s, &cfg.grid)?);
        density.push(impact_density(&cfg.speed, s, &cfg.grid)?);
    }
    Ok(Tables { coeffs, impact, density })
}

/// One path: unimpacted prices [i][m] and impacted prices per scenario [s][i][m].
struct PathValues {
    p: Vec<Vec<f64>>,
    pt: Vec<Vec<Vec<f64>>>,
}

fn simulate_path(
    cfg: &CurveExperimentConfig,
    tables: &Tables,
    r: &[f64],
    dw: &[f64],
    n_scen: usize,
) -> Result<PathValues> {
    let n = cfg.grid.n_nodes();
    let nm = cfg.maturities.len();
    let ti = cfg.traded_index();
    let dt = cfg.grid.dt();
    let p: Vec<Vec<f64>> = (0..n).map(|i| tables.coeffs[i].iter().map(|c| c.price(r[i])).collect()).collect();
    let mut pt = vec![vec![vec![0.0; nm]; n]; n_scen];
    for (s, pts) in pt.iter_mut().enumerate() {
        let imp = &tables.impact[s];
        let jd = &tables.density[s];
        let mut state: Vec<f64> = match cfg.cross_scheme {
            CrossScheme::Decomposed => vec![0.0; nm],
            CrossScheme::EulerFull => p[0].clone(),
        };
        for i in 0..n {
            let t = cfg.grid.time(i);
            let c_t = tables.coeffs[i][ti];
            for m in 0..nm {
                pts[i][m] = if m == ti {
                    p[i][m] - imp[i]
                } else {
                    match cfg.cross_scheme {
                        CrossScheme::Decomposed => p[i][m] + state[m],
                        CrossScheme::EulerFull => state[m],
                    }
                };
            }
            if i + 1 == n {
                break;
            }
            let ri = r[i];
            let bt_pt = c_t.b * p[i][ti];
            for m in 0..nm {
                if m == ti {
                    continue;
                }
                let c_s = tables.coeffs[i][m];
                let ratio = if bt_pt != 0.0 { c_s.b * p[i][m] / bt_pt } else { 0.0 };
                match cfg.cross_scheme {
                    CrossScheme::Decomposed => {
                        state[m] += (ri * state[m] + ratio * (ri * imp[i] - jd[i])) * dt;
                    }
                    CrossScheme::EulerFull => {
                        let (mu_t, sig_t) = drift_vol_from(&cfg.model, cfg.lambda, t, c_t, ri)?;
                        let sig_s = ratio * sig_t;
                        let mu_s = cross_impact_drift(ri, pts[i][ti], jd[i], mu_t, sig_t, sig_s, state[m])?;
                        state[m] += mu_s * dt + sig_s * dw[i];
                    }
                }
            }
        }
    }
    Ok(PathValues { p, pt })
}

/// Run the experiment for several impact specs on common short-rate paths.
pub fn simulate_scenarios(cfg: &CurveExperimentConfig, specs: &[ImpactSpec]) -> Result<CurveRun> {
    cfg.validate()?;
    if specs.is_empty() {
        return Err(Error::Input("need at least one impact scenario".into()));
    }
    for s in specs {
        s.validate()?;
    }
    let tables = build_tables(cfg, specs)?;
    let dynamics = cfg.model.real_world(cfg.lambda)?;
    let scheme = EulerScheme::new(&dynamics, cfg.grid)?;
    let (n, nm, ns) = (cfg.grid.n_nodes(), cfg.maturities.len(), specs.len());
    let idx = |s: usize, i: usize, m: usize, q: usize| ((s * n + i) * nm + m) * Q + q;
    let times = cfg.grid.times();
    let conv = cfg.yield_convention;
    let r0 = dynamics.r0();

    let failure = std::sync::Mutex::new(None::<Error>);
    let acc = block_reduce(
        cfg.n_paths,
        || CurveAcc { moments: vec![Moments::default(); ns * n * nm * Q], degenerate: vec![0; ns * nm] },
        |acc, path| {
            let mut run = || -> Result<()> {
                let (r, dw) = scheme.sample(r0, RngStream::new(cfg.seed, path as u64))?;
                let pv = simulate_path(cfg, &tables, &r, &dw, ns)?;
                for s in 0..ns {
                    for m in 0..nm {
                        let mat = cfg.maturities[m];
                        let degenerate = pv.pt[s].iter().any(|row| !(row[m] > 0.0));
                        if degenerate {
                            acc.degenerate[s * nm + m] += 1;
                        }
                        for i in 0..n {
                            let (p, pt) = (pv.p[i][m], pv.pt[s][i][m]);
                            let mo = &mut acc.moments;
                            mo[idx(s, i, m, QP)].push(p);
                            mo[idx(s, i, m, QPT)].push(pt);
                            mo[idx(s, i, m, QDIFF)].push(pt - p);
                            mo[idx(s, i, m, QVS)].push(pt - pv.pt[0][i][m]);
                            let t = times[i];
                            if t >= mat {
                                continue;
                            }
                            let y = yield_with_convention(p, t, mat, conv);
                            if let Ok(y) = y {
                                mo[idx(s, i, m, QY)].push(y);
                                if !degenerate {
                                    if let Ok(yt) = yield_with_convention(pt, t, mat, conv) {
                                        mo[idx(s, i, m, QYT)].push(yt);
                                        mo[idx(s, i, m, QGAP)].push(yt - y);
                                    }
                                }
                            }
                        }
                    }
                }
                Ok(())
            };
            if let Err(e) = run() {
                failure.lock().map(|mut f| f.get_or_insert(e).clone()).ok();
            }
        },
    )
    .ok_or_else(|| Error::Input("no paths".into()))?;
    if let Some(e) = failure.into_inner().ok().flatten() {
        return Err(e);
    }

    let mut scenarios = Vec::with_capacity(ns);
    for (s, spec) in specs.iter().enumerate() {
        let mut snapshots = Vec::with_capacity(n);
        let mut vs_first = Vec::with_capacity(n);
        for (i, &t) in times.iter().enumerate() {
            let entries = (0..nm)
                .map(|m| {
                    let st = |q| acc.moments[idx(s, i, m, q)].stat();
                    MaturityStats {
                        maturity: cfg.maturities[m],
                        p: st(QP),
                        p_tilde: st(QPT),
                        y: st(QY),
                        y_tilde: st(QYT),
                        gap: st(QGAP),
                        diff: st(QDIFF),
                        degenerate: acc.degenerate[s * nm + m],
                    }
                })
                .collect();
            snapshots.push(CurveSnapshot { t, entries });
            vs_first.push((0..nm).map(|m| acc.moments[idx(s, i, m, QVS)].stat()).collect());
        }
        scenarios.push(ScenarioResult {
            impact: *spec,
            snapshots,
            degenerate: acc.degenerate[s * nm..(s + 1) * nm].to_vec(),
            vs_first,
        });
    }
    Ok(CurveRun { times, maturities: cfg.maturities.clone(), n_paths: cfg.n_paths, scenarios })
}

/// Steps 1–8: averaged unimpacted and impacted curves at every grid node.
pub fn simulate_impacted_curve(cfg: &CurveExperimentConfig) -> Result<CurveRun> {
    simulate_scenarios(cfg, &[cfg.impact])
}

/// One scenario per ρ, all on common random numbers.
pub fn rho_sweep(cfg: &CurveExperimentConfig, rhos: &[f64]) -> Result<CurveRun> {
    if rhos.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::param("rho", "sweep values must be positive"));
    }
    let specs: Vec<ImpactSpec> = rhos.iter().map(|&r| cfg.impact.with_rho(r)).collect();
    simulate_scenarios(cfg, &specs)
}

/// One run per mean-reversion speed k (same seed, so same Brownian increments).
pub fn mean_reversion_sweep(cfg: &CurveExperimentConfig, ks: &[f64]) -> Result<Vec<(f64, CurveRun)>> {
    ks.iter()
        .map(|&k| {
            let mut c = cfg.clone();
            match &mut c.model.kind {
                crate::short_rate::ModelKind::Vasicek { k: kk, .. } => *kk = k,
                crate::short_rate::ModelKind::HullWhite { a, .. } => *a = k,
                _ => return Err(Error::UnsupportedModel("k sweep needs a Gaussian model".into())),
            }
            Ok((k, simulate_impacted_curve(&c)?))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum Crossing {
    /// The two averaged curves coincide everywhere.
    Identical,
    SignChange { index: usize, t: f64 },
    Tolerance { index: usize, t: f64 },
    None,
}

impl Crossing {
    pub fn time(&self) -> Option<f64> {
        match *self {
            Crossing::SignChange { t, .. } | Crossing::Tolerance { t, .. } => Some(t),
            Crossing::Identical => Some(0.0),
            Crossing::None => None,
        }
    }
}

/// First node after `start` where mean P̃ − mean P changes sign or falls below `atol`.
pub fn first_crossing_time(times: &[f64], p_tilde: &[f64], p: &[f64], start: f64, atol: f64) -> Crossing {
    let d: Vec<f64> = p_tilde.iter().zip(p).map(|(a, b)| a - b).collect();
    if d.iter().all(|&x| x == 0.0) {
        return Crossing::Identical;
    }
    let first = times.iter().position(|&t| t > start).unwrap_or(times.len());
    for i in first..d.len() {
        if i > 0 && d[i] != 0.0 && d[i - 1] != 0.0 && d[i].signum() != d[i - 1].signum() && i > first {
            return Crossing::SignChange { index: i, t: times[i] };
        }
        if d[i].abs() < atol {
            return Crossing::Tolerance { index: i, t: times[i] };
        }
    }
    Crossing::None
}

/// Largest |λ̃_T − λ̃_S| over nodes and cross-impacted maturities of the first
/// `n_paths` paths, with λ̃_S computed from the cross drift and full Euler states.
pub fn lambda_tilde_consistency(cfg: &CurveExperimentConfig, n_paths: usize) -> Result<f64> {
    cfg.validate()?;
    let tables = build_tables(cfg, &[cfg.impact])?;
    let dynamics = cfg.model.real_world(cfg.lambda)?;
    let scheme = EulerScheme::new(&dynamics, cfg.grid)?;
    let ti = cfg.traded_index();
    let mut worst: f64 = 0.0;
    for path in 0..n_paths {
        let (r, dw) = scheme.sample(dynamics.r0(), RngStream::new(cfg.seed, path as u64))?;
        let pv = simulate_path(cfg, &tables, &r, &dw, 1)?;
        for i in 0..cfg.grid.n_steps() {
            let t = cfg.grid.time(i);
            let c_t = tables.coeffs[i][ti];
            let (mu_t, sig_t) = drift_vol_from(&cfg.model, cfg.lambda, t, c_t, r[i])?;
            let pt_t = pv.pt[0][i][ti];
            let j = tables.density[0][i];
            let lt = impacted_mpr(mu_t, sig_t, pt_t, j, r[i])?;
            for m in 0..cfg.maturities.len() {
                if m == ti {
                    continue;
                }
                let c_s = tables.coeffs[i][m];
                let (_, sig_s) = drift_vol_from(&cfg.model, cfg.lambda, t, c_s, r[i])?;
                let pt_s = pv.pt[0][i][m];
                let mu_s = cross_impact_drift(r[i], pt_t, j, mu_t, sig_t, sig_s, pt_s)?;
                let ls = impacted_mpr(mu_s, sig_s, pt_s, 0.0, r[i])?;
                worst = worst.max((lt - ls).abs());
            }
        }
    }
    Ok(worst)
}
