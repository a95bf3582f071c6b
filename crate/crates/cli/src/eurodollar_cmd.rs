//! `price-eurodollar`: closed form and Monte Carlo under the impacted measure.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, ValueEnum};
use curve_impact::pricing::{eurodollar_closed_form, eurodollar_mc, McOptions};
use curve_impact::{DayCount, EurodollarVariant, MprConfig};
use serde::Serialize;

use crate::config::{ensure_valid, load, CurveSource, EurodollarConfig, ModelConfig};
use crate::output::{num, write_csv, write_run_record, Meta};
use crate::{prepare_out, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Vasicek,
    HullWhite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DayCountArg {
    Act365,
    Act360,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    DynamicsConsistent,
    PaperLiteral,
}

/// Flags override the corresponding entries of `--config`.
#[derive(Debug, Args)]
pub struct EurodollarArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Hull–White mean-reversion speed.
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub r0: Option<f64>,
    /// Hull–White initial forward curve, CSV of (maturity_years, forward_rate).
    #[arg(long)]
    pub curve: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_tilde: Option<f64>,
    /// Fixing time S.
    #[arg(long)]
    pub expiry: Option<f64>,
    /// End of the deposit period T.
    #[arg(long)]
    pub maturity: Option<f64>,
    #[arg(long)]
    pub notional: Option<f64>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub daycount: Option<DayCountArg>,
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
}

fn need(v: Option<f64>, flag: &str) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Validation(format!("missing --{flag}")))
}

fn model_from_flags(a: &EurodollarArgs) -> Result<ModelConfig, CliError> {
    Ok(match a.model.unwrap_or(ModelArg::Vasicek) {
        ModelArg::Vasicek => ModelConfig::Vasicek {
            k: need(a.k, "k")?,
            theta: need(a.theta, "theta")?,
            sigma: need(a.sigma, "sigma")?,
            r0: need(a.r0, "r0")?,
        },
        ModelArg::HullWhite => ModelConfig::HullWhite {
            a: need(a.a, "a")?,
            sigma: need(a.sigma, "sigma")?,
            r0: need(a.r0, "r0")?,
            curve: CurveSource {
                maturities: None,
                forwards: None,
                csv: Some(a.curve.clone().ok_or_else(|| CliError::Validation("missing --curve".into()))?),
            },
        },
    })
}

fn override_model(m: &mut ModelConfig, a: &EurodollarArgs) {
    match m {
        ModelConfig::Vasicek { k, theta, sigma, r0 } => {
            *k = a.k.unwrap_or(*k);
            *theta = a.theta.unwrap_or(*theta);
            *sigma = a.sigma.unwrap_or(*sigma);
            *r0 = a.r0.unwrap_or(*r0);
        }
        ModelConfig::HullWhite { a: speed, sigma, r0, curve } => {
            *speed = a.a.unwrap_or(*speed);
            *sigma = a.sigma.unwrap_or(*sigma);
            *r0 = a.r0.unwrap_or(*r0);
            if let Some(p) = &a.curve {
                *curve = CurveSource { maturities: None, forwards: None, csv: Some(p.clone()) };
            }
        }
    }
}

/// Merge `--config` (if any) with the flags.
pub fn resolve(a: &EurodollarArgs) -> Result<(EurodollarConfig, PathBuf), CliError> {
    let (mut cfg, base) = match &a.config {
        Some(p) => {
            let mut c: EurodollarConfig = load(p)?;
            let same_kind = matches!(
                (a.model, &c.model),
                (None, _)
                    | (Some(ModelArg::Vasicek), ModelConfig::Vasicek { .. })
                    | (Some(ModelArg::HullWhite), ModelConfig::HullWhite { .. })
            );
            if same_kind {
                override_model(&mut c.model, a);
            } else {
                c.model = model_from_flags(a)?;
            }
            (c, p.parent().map(Path::to_path_buf).unwrap_or_default())
        }
        None => (
            EurodollarConfig {
                model: model_from_flags(a)?,
                lambda: 0.0,
                lambda_tilde: 0.0,
                expiry: need(a.expiry, "expiry")?,
                maturity: need(a.maturity, "maturity")?,
                notional: 1.0,
                paths: a.paths.unwrap_or(100_000),
                seed: 0,
                daycount: DayCount::Act365,
                variant: EurodollarVariant::DynamicsConsistent,
            },
            PathBuf::from("."),
        ),
    };
    cfg.lambda = a.lambda.unwrap_or(cfg.lambda);
    cfg.lambda_tilde = a.lambda_tilde.unwrap_or(cfg.lambda_tilde);
    cfg.expiry = a.expiry.unwrap_or(cfg.expiry);
    cfg.maturity = a.maturity.unwrap_or(cfg.maturity);
    cfg.notional = a.notional.unwrap_or(cfg.notional);
    cfg.paths = a.paths.unwrap_or(cfg.paths);
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    if let Some(d) = a.daycount {
        cfg.daycount = match d {
            DayCountArg::Act365 => DayCount::Act365,
            DayCountArg::Act360 => DayCount::Act360,
        };
    }
    if let Some(v) = a.variant {
        cfg.variant = match v {
            VariantArg::DynamicsConsistent => EurodollarVariant::DynamicsConsistent,
            VariantArg::PaperLiteral => EurodollarVariant::PaperLiteral,
        };
    }
    Ok((cfg, base))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EurodollarQuote {
    pub closed_form: f64,
    pub mc_price: f64,
    pub mc_se: f64,
    pub n_paths: usize,
}

pub fn price(cfg: &EurodollarConfig, base: &Path) -> Result<EurodollarQuote, CliError> {
    ensure_valid(cfg.violations())?;
    let model = cfg.model.build(base)?;
    let mpr = MprConfig { lambda: cfg.lambda, lambda_tilde: cfg.lambda_tilde };
    let closed_form = eurodollar_closed_form(&model, &mpr, cfg.expiry, cfg.maturity, cfg.notional, cfg.daycount, cfg.variant)?;
    let tilde = mpr.impacted_model(&model)?;
    let (mc_price, mc_se) =
        eurodollar_mc(&tilde, cfg.expiry, cfg.maturity, cfg.notional, cfg.daycount, &McOptions::new(cfg.seed, cfg.paths))?;
    Ok(EurodollarQuote { closed_form, mc_price, mc_se, n_paths: cfg.paths })
}

pub fn run(args: &EurodollarArgs) -> Result<String, CliError> {
    let (cfg, base) = resolve(args)?;
    let t0 = Instant::now();
    let q = price(&cfg, &base)?;
    let elapsed = t0.elapsed().as_secs_f64();
    prepare_out(&args.out)?;
    write_csv(
        &args.out.join("eurodollar.csv"),
        &["closed_form", "mc_price", "mc_se", "n_paths"],
        [vec![num(q.closed_form), num(q.mc_price), num(q.mc_se), q.n_paths.to_string()]],
    )?;
    let mut meta = Meta::new(&cfg, cfg.seed);
    meta.timings.insert("pricing".to_string(), elapsed);
    write_run_record(&args.out, &cfg, &meta)?;
    let z = if q.mc_se > 0.0 { (q.mc_price - q.closed_form) / q.mc_se } else { 0.0 };
    Ok(format!(
        "price-eurodollar: closed form {}, Monte Carlo {} +/- {} ({} paths, z = {:.2}) -> {}",
        q.closed_form,
        q.mc_price,
        q.mc_se,
        q.n_paths,
        z,
        args.out.display()
    ))
}
