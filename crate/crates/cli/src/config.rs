//! Run configurations: JSON trees, unknown keys rejected, validated before use.

use std::fmt;
use std::path::{Path, PathBuf};

use curve_impact::execution::{ExecutionProblem, PriceModel, PsiForm};
use curve_impact::impact::Piece;
use curve_impact::{
    CrossScheme, CurveExperimentConfig, DayCount, EurodollarVariant, ForwardCurve, ImpactSpec, ShortRateModel,
    SpeedSchedule, Table1D, TimeGrid, YieldConvention,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DAYS_PER_YEAR: f64 = 365.0;

/// One failed check: where in the tree, and the bound that was violated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Default)]
struct Checker {
    out: Vec<Violation>,
}

impl Checker {
    fn push(&mut self, path: &str, message: impl Into<String>) {
        self.out.push(Violation { path: path.to_string(), message: message.into() });
    }

    fn finite(&mut self, path: &str, v: f64) -> bool {
        if !v.is_finite() {
            self.push(path, format!("must be finite, got {v}"));
            return false;
        }
        true
    }

    fn positive(&mut self, path: &str, v: f64) {
        if self.finite(path, v) && v <= 0.0 {
            self.push(path, format!("must be > 0, got {v}"));
        }
    }

    fn non_negative(&mut self, path: &str, v: f64) {
        if self.finite(path, v) && v < 0.0 {
            self.push(path, format!("must be >= 0, got {v}"));
        }
    }
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

/// Parse a config file, reporting the key path of the first bad value.
pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        CliError::Validation(format!("config key `{at}`: {}", e.inner()))
    })
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let parsed: Result<Vec<f64>, _> = rec.iter().map(|s| s.trim().parse::<f64>()).collect();
        match parsed {
            Ok(v) => rows.push(v),
            // a header line
            Err(_) if i == 0 => {}
            Err(e) => return Err(CliError::Validation(format!("{} row {}: {e}", path.display(), i + 1))),
        }
    }
    Ok(rows)
}

/// Forward curve f^M(0,·): inline samples or a two-column CSV (maturity_years, forward_rate).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maturities: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forwards: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

impl CurveSource {
    fn check(&self, c: &mut Checker, at: &str) {
        match (&self.maturities, &self.forwards, &self.csv) {
            (Some(m), Some(f), None) => {
                if m.len() != f.len() {
                    c.push(&join(at, "forwards"), "must have one value per maturity");
                }
                if m.len() < 3 {
                    c.push(&join(at, "maturities"), "need at least 3 nodes");
                }
                if m.windows(2).any(|w| !(w[1] > w[0])) {
                    c.push(&join(at, "maturities"), "must be strictly increasing");
                }
            }
            (None, None, Some(_)) => {}
            _ => c.push(at, "give either `maturities` and `forwards`, or `csv`"),
        }
    }

    pub fn build(&self, base: &Path) -> Result<ForwardCurve, CliError> {
        let (m, f) = match (&self.maturities, &self.forwards, &self.csv) {
            (Some(m), Some(f), None) => (m.clone(), f.clone()),
            (None, None, Some(p)) => {
                let rows = read_rows(&resolve(base, p))?;
                if rows.iter().any(|r| r.len() < 2) {
                    return Err(CliError::Validation("forward curve CSV needs two columns".into()));
                }
                (rows.iter().map(|r| r[0]).collect(), rows.iter().map(|r| r[1]).collect())
            }
            _ => return Err(CliError::Validation("model.curve: give either samples or csv".into())),
        };
        Ok(ForwardCurve::new(m, f)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    Vasicek { k: f64, theta: f64, sigma: f64, r0: f64 },
    HullWhite { a: f64, sigma: f64, r0: f64, curve: CurveSource },
}

impl ModelConfig {
    fn check(&self, c: &mut Checker, at: &str) {
        match self {
            ModelConfig::Vasicek { k, theta, sigma, r0 } => {
                c.positive(&join(at, "k"), *k);
                c.finite(&join(at, "theta"), *theta);
                c.non_negative(&join(at, "sigma"), *sigma);
                c.finite(&join(at, "r0"), *r0);
            }
            ModelConfig::HullWhite { a, sigma, r0, curve } => {
                c.positive(&join(at, "a"), *a);
                c.non_negative(&join(at, "sigma"), *sigma);
                c.finite(&join(at, "r0"), *r0);
                curve.check(c, &join(at, "curve"));
            }
        }
    }

    fn speed(&self) -> f64 {
        match self {
            ModelConfig::Vasicek { k, .. } => *k,
            ModelConfig::HullWhite { a, .. } => *a,
        }
    }

    fn sigma(&self) -> f64 {
        match self {
            ModelConfig::Vasicek { sigma, .. } | ModelConfig::HullWhite { sigma, .. } => *sigma,
        }
    }

    pub fn build(&self, base: &Path) -> Result<ShortRateModel, CliError> {
        Ok(match self {
            ModelConfig::Vasicek { k, theta, sigma, r0 } => ShortRateModel::vasicek(*k, *theta, *sigma, *r0)?,
            ModelConfig::HullWhite { a, sigma, r0, curve } => ShortRateModel::hull_white(*a, *sigma, *r0, curve.build(base)?)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelConfig {
    /// l = κ(1 − t/T)^α, K = (1 − t/T)^β.
    Power { kappa: f64, alpha: f64, beta: f64 },
    Constant { l: f64, k: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpactConfig {
    pub kernel: KernelConfig,
    pub rho: f64,
    pub gamma: f64,
    #[serde(default)]
    pub y: f64,
    /// Trading horizon in years; alternatively `tau_days`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_days: Option<f64>,
}

impl ImpactConfig {
    pub fn tau(&self) -> Option<f64> {
        match (self.tau, self.tau_days) {
            (Some(t), None) => Some(t),
            (None, Some(d)) => Some(d / DAYS_PER_YEAR),
            _ => None,
        }
    }

    fn check(&self, c: &mut Checker, at: &str, maturity: f64) {
        match self.kernel {
            KernelConfig::Power { kappa, alpha, beta } => {
                c.positive(&join(at, "kernel.kappa"), kappa);
                for (key, v) in [("alpha", alpha), ("beta", beta)] {
                    if c.finite(&join(at, &format!("kernel.{key}")), v) && v < 1.0 {
                        c.push(&join(at, &format!("kernel.{key}")), format!("{key} >= 1 required (kernel family), got {v}"));
                    }
                }
            }
            KernelConfig::Constant { l, k } => {
                c.positive(&join(at, "kernel.l"), l);
                c.positive(&join(at, "kernel.k"), k);
            }
        }
        c.positive(&join(at, "rho"), self.rho);
        c.positive(&join(at, "gamma"), self.gamma);
        c.non_negative(&join(at, "y"), self.y);
        match self.tau() {
            None => c.push(at, "give exactly one of `tau` (years) or `tau_days`"),
            Some(tau) => {
                let key = if self.tau.is_some() { "tau" } else { "tau_days" };
                c.positive(&join(at, key), tau);
                if tau >= maturity {
                    c.push(&join(at, key), format!("tau must be < traded maturity ({tau} >= {maturity})"));
                }
            }
        }
    }

    pub fn build(&self, maturity: f64) -> Result<ImpactSpec, CliError> {
        let tau = self.tau().ok_or_else(|| CliError::Validation("impact: missing tau".into()))?;
        Ok(match self.kernel {
            KernelConfig::Power { kappa, alpha, beta } => {
                ImpactSpec::power_law(kappa, alpha, beta, self.rho, self.gamma, self.y, maturity, tau)?
            }
            KernelConfig::Constant { l, k } => ImpactSpec::constant(l, k, self.rho, self.gamma, self.y, maturity, tau)?,
        })
    }
}

/// Trading speed: the builtin constant schedule, explicit polynomial pieces,
/// or a CSV of rows (t_start, t_end, c0, c1, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpeedConfig {
    Constant {
        c: f64,
        /// Defaults to the impact horizon.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tau: Option<f64>,
    },
    Pieces { pieces: Vec<Piece> },
    Csv { path: PathBuf },
}

impl SpeedConfig {
    fn check(&self, c: &mut Checker, at: &str) {
        match self {
            SpeedConfig::Constant { c: v, tau } => {
                c.finite(&join(at, "c"), *v);
                if let Some(t) = tau {
                    c.positive(&join(at, "tau"), *t);
                }
            }
            SpeedConfig::Pieces { pieces } => {
                for (i, p) in pieces.iter().enumerate() {
                    if !(p.t1 > p.t0) {
                        c.push(&format!("{at}.pieces[{i}]"), "need t1 > t0");
                    }
                }
            }
            SpeedConfig::Csv { .. } => {}
        }
    }

    pub fn build(&self, base: &Path, tau: f64) -> Result<SpeedSchedule, CliError> {
        Ok(match self {
            SpeedConfig::Constant { c, tau: t } => SpeedSchedule::constant(*c, t.unwrap_or(tau))?,
            SpeedConfig::Pieces { pieces } => SpeedSchedule::new(pieces.clone())?,
            SpeedConfig::Csv { path } => {
                let rows = read_rows(&resolve(base, path))?;
                let pieces = rows
                    .into_iter()
                    .map(|r| {
                        if r.len() < 3 {
                            return Err(CliError::Validation("speed CSV rows need t_start, t_end, c0".into()));
                        }
                        Ok(Piece { t0: r[0], t1: r[1], coeffs: r[2..].to_vec() })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                SpeedSchedule::new(pieces)?
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossingConfig {
    pub maturities: Vec<f64>,
    #[serde(default = "default_atol")]
    pub atol: f64,
}

fn default_atol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhoSweepConfig {
    pub rhos: Vec<f64>,
    /// Cross-impacted maturity reported in `rho_sweep.csv`.
    pub maturity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KSweepConfig {
    /// Mean-reversion speeds (Vasicek k or Hull–White a).
    pub ks: Vec<f64>,
}

/// `simulate-curve` configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    pub model: ModelConfig,
    /// Slope of the market price of risk, λ(t) = λ r(t).
    #[serde(default)]
    pub lambda: f64,
    pub maturities: Vec<f64>,
    pub traded: f64,
    pub impact: ImpactConfig,
    pub speed: SpeedConfig,
    /// Simulated window [0, horizon] in years.
    pub horizon: f64,
    pub steps: usize,
    pub paths: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub yield_convention: YieldConvention,
    #[serde(default)]
    pub cross_scheme: CrossScheme,
    /// Days at which `yield_curves_t{days}.csv` is written.
    #[serde(default)]
    pub snapshot_days: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crossing: Option<CrossingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_sweep: Option<RhoSweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_sweep: Option<KSweepConfig>,
}

impl CurveConfig {
    pub fn violations(&self) -> Vec<Violation> {
        let mut c = Checker::default();
        self.model.check(&mut c, "model");
        c.finite("lambda", self.lambda);
        if self.maturities.is_empty() {
            c.push("maturities", "need at least one maturity");
        }
        for (i, &m) in self.maturities.iter().enumerate() {
            c.positive(&format!("maturities[{i}]"), m);
        }
        if !self.maturities.contains(&self.traded) {
            c.push("traded", format!("traded maturity {} is not in `maturities`", self.traded));
        }
        self.impact.check(&mut c, "impact", self.traded);
        self.speed.check(&mut c, "speed");
        c.positive("horizon", self.horizon);
        let shortest = self.maturities.iter().cloned().fold(f64::INFINITY, f64::min);
        if self.horizon > shortest {
            c.push("horizon", format!("must not pass the shortest maturity {shortest}"));
        }
        if self.steps == 0 {
            c.push("steps", "must be >= 1");
        }
        if self.paths < 2 {
            c.push("paths", "need at least 2 paths for standard errors");
        }
        for (i, &d) in self.snapshot_days.iter().enumerate() {
            if d as f64 / DAYS_PER_YEAR > self.horizon {
                c.push(&format!("snapshot_days[{i}]"), "lies after the horizon");
            }
        }
        if let Some(x) = &self.crossing {
            for (i, m) in x.maturities.iter().enumerate() {
                if !self.maturities.contains(m) {
                    c.push(&format!("crossing.maturities[{i}]"), "not in `maturities`");
                }
            }
            c.non_negative("crossing.atol", x.atol);
        }
        if let Some(r) = &self.rho_sweep {
            if r.rhos.is_empty() {
                c.push("rho_sweep.rhos", "empty sweep");
            }
            for (i, &v) in r.rhos.iter().enumerate() {
                c.positive(&format!("rho_sweep.rhos[{i}]"), v);
            }
            if !self.maturities.contains(&r.maturity) {
                c.push("rho_sweep.maturity", "not in `maturities`");
            }
        }
        if let Some(k) = &self.k_sweep {
            for (i, &v) in k.ks.iter().enumerate() {
                c.positive(&format!("k_sweep.ks[{i}]"), v);
            }
        }
        c.out
    }

    pub fn experiment(&self, base: &Path) -> Result<CurveExperimentConfig, CliError> {
        let impact = self.impact.build(self.traded)?;
        Ok(CurveExperimentConfig {
            model: self.model.build(base)?,
            lambda: self.lambda,
            maturities: self.maturities.clone(),
            traded: self.traded,
            speed: self.speed.build(base, impact.tau)?,
            impact,
            grid: TimeGrid::new(0.0, self.horizon, self.steps)?,
            n_paths: self.paths,
            seed: self.seed,
            yield_convention: self.yield_convention,
            cross_scheme: self.cross_scheme,
        })
    }
}

/// `price-eurodollar` configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EurodollarConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub lambda_tilde: f64,
    /// Fixing time S of the futures contract.
    pub expiry: f64,
    /// Payment time T of the underlying deposit.
    pub maturity: f64,
    #[serde(default = "one")]
    pub notional: f64,
    pub paths: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub daycount: DayCount,
    #[serde(default)]
    pub variant: EurodollarVariant,
}

fn one() -> f64 {
    1.0
}

impl EurodollarConfig {
    pub fn violations(&self) -> Vec<Violation> {
        let mut c = Checker::default();
        self.model.check(&mut c, "model");
        c.finite("lambda", self.lambda);
        c.finite("lambda_tilde", self.lambda_tilde);
        let (speed, sigma) = (self.model.speed(), self.model.sigma());
        let shift = sigma * (self.lambda_tilde - self.lambda);
        if speed.is_finite() && shift.is_finite() && speed - shift <= 0.0 {
            let name = if matches!(self.model, ModelConfig::Vasicek { .. }) { "k" } else { "a" };
            c.push(
                "lambda_tilde",
                format!("{name} <= sigma(lambda_tilde - lambda) ({speed} <= {shift}); the impacted mean reversion must stay positive"),
            );
        }
        c.positive("expiry", self.expiry);
        if self.maturity <= self.expiry {
            c.push("maturity", format!("must be > expiry ({} <= {})", self.maturity, self.expiry));
        }
        c.positive("notional", self.notional);
        if self.paths < 2 {
            c.push("paths", "need at least 2 paths for standard errors");
        }
        c.out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PriceConfig {
    Martingale { p0: f64 },
    /// E[dP] = μ(t)dt with μ linear between the samples.
    DeterministicDrift { p0: f64, times: Vec<f64>, drift: Vec<f64> },
}

/// `optexec` configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptexecConfig {
    /// Initial inventory.
    pub x: f64,
    /// Maturity of the traded bond.
    pub maturity: f64,
    pub impact: ImpactConfig,
    /// Running inventory penalty φ.
    pub phi: f64,
    /// Terminal inventory penalty ϱ.
    pub varrho: f64,
    pub price: PriceConfig,
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// Steps of the brute-force oracle; 0 skips it.
    #[serde(default = "default_steps")]
    pub oracle_steps: usize,
    #[serde(default)]
    pub psi_form: PsiForm,
}

fn default_steps() -> usize {
    500
}

impl OptexecConfig {
    pub fn violations(&self) -> Vec<Violation> {
        let mut c = Checker::default();
        c.finite("x", self.x);
        c.positive("maturity", self.maturity);
        self.impact.check(&mut c, "impact", self.maturity);
        c.non_negative("phi", self.phi);
        c.non_negative("varrho", self.varrho);
        match &self.price {
            PriceConfig::Martingale { p0 } => {
                c.finite("price.p0", *p0);
            }
            PriceConfig::DeterministicDrift { p0, times, drift } => {
                c.finite("price.p0", *p0);
                if times.len() != drift.len() || times.len() < 2 {
                    c.push("price.drift", "need at least two samples, one per time");
                }
                if let (Some(&a), Some(&b), Some(tau)) = (times.first(), times.last(), self.impact.tau()) {
                    if a > 0.0 || b < tau {
                        c.push("price.times", "must cover [0, tau]");
                    }
                }
            }
        }
        if self.steps < 2 {
            c.push("steps", "must be >= 2");
        }
        if self.oracle_steps > 2000 {
            c.push("oracle_steps", "the dense oracle is limited to 2000 steps");
        }
        c.out
    }

    pub fn problem(&self) -> Result<ExecutionProblem, CliError> {
        let impact = self.impact.build(self.maturity)?;
        let price = match &self.price {
            PriceConfig::Martingale { p0 } => PriceModel::Martingale { p0: *p0 },
            PriceConfig::DeterministicDrift { p0, times, drift } => {
                PriceModel::DeterministicDrift { p0: *p0, drift: Table1D::new(times.clone(), drift.clone())? }
            }
        };
        let p = ExecutionProblem { x: self.x, tau: impact.tau, phi: self.phi, varrho: self.varrho, impact, price };
        p.validate()?;
        Ok(p)
    }
}

/// Any of the subcommand configurations, for `validate_config`.
#[derive(Debug, Clone, PartialEq)]
pub enum RunConfig {
    Curve(CurveConfig),
    Eurodollar(EurodollarConfig),
    Optexec(OptexecConfig),
}

/// Every invariant violation with its key path; empty when the tree is usable.
pub fn validate_config(cfg: &RunConfig) -> Vec<Violation> {
    match cfg {
        RunConfig::Curve(c) => c.violations(),
        RunConfig::Eurodollar(c) => c.violations(),
        RunConfig::Optexec(c) => c.violations(),
    }
}

pub(crate) fn ensure_valid(violations: Vec<Violation>) -> Result<(), CliError> {
    if violations.is_empty() {
        return Ok(());
    }
    let lines: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
    Err(CliError::Validation(lines.join("; ")))
}

pub const PAPER_SEC5: &str = include_str!("../presets/paper_sec5.cfg");
pub const OPTEXEC_BENCHMARK: &str = include_str!("../presets/optexec_benchmark.cfg");

#[cfg(test)]
mod tests {
    use super::*;

    fn sec5() -> CurveConfig {
        parse(PAPER_SEC5).unwrap()
    }

    #[test]
    fn presets_are_clean() {
        assert!(sec5().violations().is_empty(), "{:?}", sec5().violations());
        let o: OptexecConfig = parse(OPTEXEC_BENCHMARK).unwrap();
        assert!(o.violations().is_empty());
    }

    #[test]
    fn tau_past_maturity_is_reported() {
        let mut c = sec5();
        c.impact.tau_days = Some(6.0 * 365.0);
        let v = c.violations();
        assert!(v.iter().any(|v| v.path == "impact.tau_days" && v.message.starts_with("tau must be < traded maturity")));
    }

    #[test]
    fn alpha_below_one_is_reported() {
        let mut c = sec5();
        c.impact.kernel = KernelConfig::Power { kappa: 0.01, alpha: 0.5, beta: 1.0 };
        let v = c.violations();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].path, "impact.kernel.alpha");
        assert!(v[0].message.contains("alpha >= 1 required (kernel family)"));
    }

    #[test]
    fn unknown_keys_name_their_path() {
        let text = PAPER_SEC5.replace("\"rho\"", "\"rho\": 2.0, \"rhoo\"");
        match parse::<CurveConfig>(&text) {
            Err(CliError::Validation(m)) => assert!(m.contains("impact") && m.contains("rhoo"), "{m}"),
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_type_names_its_path() {
        let text = PAPER_SEC5.replace("\"paths\": 10000", "\"paths\": \"many\"");
        match parse::<CurveConfig>(&text) {
            Err(CliError::Validation(m)) => assert!(m.contains("`paths`"), "{m}"),
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn impacted_speed_bound() {
        let c = EurodollarConfig {
            model: ModelConfig::Vasicek { k: 0.2, theta: 0.1, sigma: 0.05, r0: 0.01 },
            lambda: 0.0,
            lambda_tilde: 5.0,
            expiry: 0.5,
            maturity: 0.75,
            notional: 1.0,
            paths: 100,
            seed: 0,
            daycount: DayCount::Act365,
            variant: EurodollarVariant::DynamicsConsistent,
        };
        let v = c.violations();
        assert_eq!(v.len(), 1);
        assert!(v[0].message.starts_with("k <= sigma(lambda_tilde - lambda)"));
    }
}
