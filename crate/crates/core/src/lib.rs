//! Price impact on interest-rate term structures.
//!
//! Affine short-rate models, impacted zero-coupon and coupon bonds, the
//! impacted risk-neutral measure, endogenous cross-impact across maturities,
//! impacted HJM forward curves and a linear-feedback optimal execution solver.
//! Every analytic route has a numerical counterpart that can be used to check it.

pub mod affine;
pub mod curve;
pub mod error;
pub mod execution;
pub mod grid;
pub mod hjm;
pub mod impact;
pub mod interp;
pub mod mc;
pub mod pricing;
pub(crate) mod quad;
pub mod short_rate;

pub use affine::{BondCoeffs, CouponSchedule, YieldConvention};
pub use curve::{CrossScheme, Crossing, CurveExperimentConfig, CurveRun, CurveSnapshot};
pub use error::{Error, Result};
pub use execution::{ExecutionProblem, ExecutionSolution, PriceModel, PsiForm};
pub use grid::TimeGrid;
pub use hjm::{ForwardLattice, MaturityProfile};
pub use impact::{ImpactSpec, Kernel, SpeedSchedule};
pub use interp::{ForwardCurve, Table1D};
pub use mc::{RngStream, Stat};
pub use pricing::{DayCount, EurodollarVariant, MprConfig};
pub use short_rate::{Measure, ModelKind, PathSet, ShortRateModel};
