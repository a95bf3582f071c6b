//! Fixtures shared by the benchmarks.

use curve_impact::{
    CrossScheme, CurveExperimentConfig, ExecutionProblem, ImpactSpec, PriceModel, Result, ShortRateModel, SpeedSchedule,
    TimeGrid, YieldConvention,
};

pub const TAU: f64 = 10.0 / 365.0;

/// The §5-style curve experiment on a reduced grid.
pub fn curve_experiment(n_paths: usize, steps: usize) -> Result<CurveExperimentConfig> {
    Ok(CurveExperimentConfig {
        model: ShortRateModel::vasicek(0.2, 0.1, 0.05, 0.01)?,
        lambda: 0.0,
        maturities: vec![1.0, 2.0, 5.0, 10.0, 15.0],
        traded: 5.0,
        impact: ImpactSpec::power_law(0.01, 1.0, 1.0, 2.0, 1.0, 0.01, 5.0, TAU)?,
        speed: SpeedSchedule::constant(-2.0, TAU)?,
        grid: TimeGrid::new(0.0, steps as f64 / 365.0, steps)?,
        n_paths,
        seed: 1,
        yield_convention: YieldConvention::Paper,
        cross_scheme: CrossScheme::Decomposed,
    })
}

/// Liquidation benchmark with constant kernels and a martingale price.
pub fn execution_problem() -> Result<ExecutionProblem> {
    Ok(ExecutionProblem {
        x: 2.0,
        tau: TAU,
        phi: 0.1,
        varrho: 1.0,
        impact: ImpactSpec::constant(0.01, 0.01, 2.0, 1.0, 0.0, 5.0, TAU)?,
        price: PriceModel::Martingale { p0: 0.9 },
    })
}
