//! Impacted forward-rate lattices, forward impact and the impacted HJM drift condition.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::impact::{transient_impact, ImpactSpec, SpeedSchedule};

const ON_GRID: f64 = 1e-9;

/// Surfaces on calendar times t_i × uniform maturities T_j, stored [i][j].
/// Cells with T_j < t_i are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardLattice {
    pub times: Vec<f64>,
    pub maturities: Vec<f64>,
    pub forward: Vec<Vec<f64>>,
    pub sigma: Vec<Vec<f64>>,
    pub alpha: Vec<Vec<f64>>,
    /// Impact drift density entering df̃ alongside α.
    pub jf: Vec<Vec<f64>>,
}

fn nan_surface(times: &[f64], maturities: &[f64]) -> Vec<Vec<f64>> {
    vec![vec![f64::NAN; maturities.len()]; times.len()]
}

impl ForwardLattice {
    pub fn new(
        times: Vec<f64>,
        maturities: Vec<f64>,
        forward: Vec<Vec<f64>>,
        sigma: Vec<Vec<f64>>,
        alpha: Vec<Vec<f64>>,
        jf: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let l = Self { times, maturities, forward, sigma, alpha, jf };
        l.validate()?;
        Ok(l)
    }

    /// Lattice with NaN surfaces ready to be filled.
    pub fn empty(times: Vec<f64>, maturities: Vec<f64>) -> Self {
        let s = nan_surface(&times, &maturities);
        Self { forward: s.clone(), sigma: s.clone(), alpha: s.clone(), jf: s, times, maturities }
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.maturities;
        if m.len() < 3 {
            return Err(Error::Input("need at least 3 maturities".into()));
        }
        let h = m[1] - m[0];
        if !(h > 0.0) || m.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > ON_GRID * h.max(1.0) * 10.0) {
            return Err(Error::Grid("maturity grid must be uniform and increasing".into()));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) || self.times.is_empty() {
            return Err(Error::Grid("calendar times must be increasing".into()));
        }
        for (i, &t) in self.times.iter().enumerate() {
            if self.column(t).is_none() {
                return Err(Error::Grid(format!("calendar time {t} is not on the maturity grid")));
            }
            for (name, s) in [("forward", &self.forward), ("sigma", &self.sigma), ("alpha", &self.alpha), ("jf", &self.jf)] {
                if s.len() != self.times.len() || s[i].len() != m.len() {
                    return Err(Error::Input(format!("surface {name} has the wrong shape")));
                }
                for (j, &tj) in m.iter().enumerate() {
                    if tj >= t - ON_GRID && !s[i][j].is_finite() {
                        return Err(Error::Input(format!("surface {name} not finite at t={t}, T={tj}")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        self.maturities[1] - self.maturities[0]
    }

    /// Index of the maturity node equal to `t`.
    pub fn column(&self, t: f64) -> Option<usize> {
        let h = self.spacing();
        let x = (t - self.maturities[0]) / h;
        let j = x.round();
        if (x - j).abs() < 1e-6 && j >= 0.0 && (j as usize) < self.maturities.len() {
            Some(j as usize)
        } else {
            None
        }
    }

    fn row_integral(&self, row: &[f64], i: usize, maturity: f64) -> Result<f64> {
        let t = self.times[i];
        let j0 = self.column(t).ok_or_else(|| Error::Input(format!("no maturity node at {t}")))?;
        let last = *self.maturities.last().unwrap();
        if maturity < t - ON_GRID || maturity > last + ON_GRID {
            return Err(Error::Input(format!("maturity {maturity} outside the covered range [{t}, {last}]")));
        }
        let h = self.spacing();
        let x = ((maturity - self.maturities[0]) / h).max(j0 as f64);
        let mut jn = x.floor() as usize;
        if jn >= self.maturities.len() - 1 {
            jn = self.maturities.len() - 1;
        }
        let mut acc = 0.0;
        for j in j0..jn {
            acc += 0.5 * h * (row[j] + row[j + 1]);
        }
        let frac = (maturity - self.maturities[jn]) / h;
        if frac > ON_GRID && jn + 1 < row.len() {
            let end = row[jn] + frac * (row[jn + 1] - row[jn]);
            acc += 0.5 * frac * h * (row[jn] + end);
        }
        Ok(acc)
    }

    /// Cumulative trapezoid ∫_{t_i}^{T_j} of a row, NaN before t_i.
    fn cumulative(&self, row: &[f64], i: usize) -> Vec<f64> {
        let h = self.spacing();
        let j0 = self.column(self.times[i]).unwrap_or(0);
        let mut out = vec![f64::NAN; row.len()];
        let mut acc = 0.0;
        out[j0] = 0.0;
        for j in j0 + 1..row.len() {
            acc += 0.5 * h * (row[j - 1] + row[j]);
            out[j] = acc;
        }
        out
    }

    /// α(t,T) = σ(t,T)∫_t^Tσ − σ(t,T)γ̃(t) − J^f(t,T), with trapezoid ∫σ.
    pub fn set_drift_from_condition(&mut self, gamma: &[f64]) -> Result<()> {
        if gamma.len() != self.times.len() {
            return Err(Error::Input("one γ̃ value per calendar time".into()));
        }
        for i in 0..self.times.len() {
            let cs = self.cumulative(&self.sigma[i], i);
            for j in 0..self.maturities.len() {
                self.alpha[i][j] = if cs[j].is_nan() {
                    f64::NAN
                } else {
                    self.sigma[i][j] * (cs[j] - gamma[i]) - self.jf[i][j]
                };
            }
        }
        Ok(())
    }

    /// Add a forward level shift f̃ − f and set J^f to its calendar-time derivative.
    pub fn add_forward_shift(&mut self, shift: &[Vec<f64>]) -> Result<()> {
        if shift.len() != self.times.len() || shift.iter().any(|r| r.len() != self.maturities.len()) {
            return Err(Error::Input("shift surface has the wrong shape".into()));
        }
        let n = self.times.len();
        for i in 0..n {
            for j in 0..self.maturities.len() {
                if self.forward[i][j].is_nan() {
                    continue;
                }
                self.forward[i][j] += shift[i][j];
                let back = (i > 0 && shift[i - 1][j].is_finite()).then(|| (shift[i - 1][j], self.times[i - 1]));
                let fwd = (i + 1 < n && shift[i + 1][j].is_finite()).then(|| (shift[i + 1][j], self.times[i + 1]));
                let here = (shift[i][j], self.times[i]);
                self.jf[i][j] = match (back, fwd) {
                    (Some(a), Some(b)) => (b.0 - a.0) / (b.1 - a.1),
                    (Some(a), None) => (here.0 - a.0) / (here.1 - a.1),
                    (None, Some(b)) => (b.0 - here.0) / (b.1 - here.1),
                    (None, None) => 0.0,
                };
            }
        }
        Ok(())
    }

    /// Unimpacted Vasicek forwards along a short-rate path, with drift under the
    /// real-world measure for the MPR slope `lambda` (γ̃ = λ r).
    pub fn vasicek(k: f64, theta: f64, sigma: f64, lambda: f64, times: Vec<f64>, rates: &[f64], maturities: Vec<f64>) -> Result<Self> {
        if rates.len() != times.len() {
            return Err(Error::Input("one short rate per calendar time".into()));
        }
        let mut l = Self::empty(times, maturities);
        for i in 0..l.times.len() {
            let t = l.times[i];
            for j in 0..l.maturities.len() {
                let h = l.maturities[j] - t;
                if h < -ON_GRID {
                    continue;
                }
                let h = h.max(0.0);
                let b = -(-k * h).exp_m1() / k;
                let sf = sigma * (-k * h).exp();
                l.forward[i][j] = vasicek_forward(k, theta, sigma, h, rates[i]);
                l.sigma[i][j] = sf;
                l.alpha[i][j] = sf * (sigma * b - lambda * rates[i]);
                l.jf[i][j] = 0.0;
            }
        }
        l.validate()?;
        Ok(l)
    }
}

/// Vasicek instantaneous forward f(t, t+h) given r(t).
pub fn vasicek_forward(k: f64, theta: f64, sigma: f64, h: f64, r: f64) -> f64 {
    let e = (-k * h).exp();
    let b = -(-k * h).exp_m1() / k;
    let s2 = sigma * sigma;
    -((theta - s2 / (2.0 * k * k)) * (e - 1.0) - s2 * b * e / (2.0 * k)) + e * r
}

/// How trading is spread over the maturity continuum: v_T = w(T)·v.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MaturityProfile {
    /// Every maturity traded at the same speed.
    Uniform,
    /// Trading concentrated around one maturity, w = exp(−(T − center)²/(2 width²)).
    Gaussian { center: f64, width: f64 },
}

impl MaturityProfile {
    pub fn weight(&self, maturity: f64) -> f64 {
        match *self {
            MaturityProfile::Uniform => 1.0,
            MaturityProfile::Gaussian { center, width } => {
                let z = (maturity - center) / width;
                (-0.5 * z * z).exp()
            }
        }
    }
}

/// I_T(t) over a maturity family with speeds w(T)·v and initial transient impact w(T)·y.
/// Power kernels are re-anchored at each T, so they vanish for T ≤ t.
pub fn impact_surface(
    speed: &SpeedSchedule,
    spec: &ImpactSpec,
    profile: MaturityProfile,
    t: f64,
    maturities: &[f64],
) -> Result<Vec<f64>> {
    let grid = TimeGrid::new(0.0, t, 1)?;
    let ups = *transient_impact(speed, spec, &grid).last().unwrap();
    let v = speed.eval(t);
    Ok(maturities
        .iter()
        .map(|&m| {
            let s = spec.with_maturity(m);
            if m <= t && !s.l.is_constant() {
                0.0
            } else {
                profile.weight(m) * (s.l.eval(t) * v + s.k.eval(t) * ups)
            }
        })
        .collect())
}

/// Forward level shift −∂_T log(1 − I_T(t)/P(t,T)) on a uniform maturity grid,
/// centered differences inside and second-order one-sided ones at the ends.
pub fn forward_impact_density(impact: &[f64], prices: &[f64], maturities: &[f64]) -> Result<Vec<f64>> {
    let n = maturities.len();
    if n < 3 || impact.len() != n || prices.len() != n {
        return Err(Error::Input("need matching impact, price and maturity vectors of length >= 3".into()));
    }
    let g = impact
        .iter()
        .zip(prices)
        .zip(maturities)
        .map(|((&i, &p), &m)| {
            if !(p - i > 0.0) {
                return Err(Error::Domain(format!("impacted price {} not positive at T={m}", p - i)));
            }
            Ok(-(-i / p).ln_1p())
        })
        .collect::<Result<Vec<f64>>>()?;
    let h = maturities[1] - maturities[0];
    let mut out = vec![0.0; n];
    out[0] = (-3.0 * g[0] + 4.0 * g[1] - g[2]) / (2.0 * h);
    out[n - 1] = (3.0 * g[n - 1] - 4.0 * g[n - 2] + g[n - 3]) / (2.0 * h);
    for j in 1..n - 1 {
        out[j] = (g[j + 1] - g[j - 1]) / (2.0 * h);
    }
    Ok(out)
}

/// P̃(t_i,T) = exp(−∫_{t_i}^T f̃(t_i,u)du), trapezoid in maturity.
pub fn reconstruct_bond_from_forwards(lattice: &ForwardLattice, i: usize, maturity: f64) -> Result<f64> {
    Ok((-lattice.row_integral(&lattice.forward[i], i, maturity)?).exp())
}

/// (ν(t_i,T), b̃(t_i,T)) with ν = −∫σ and b̃ = −∫α − ∫J^f + ½ν².
pub fn hjm_coeffs(lattice: &ForwardLattice, i: usize, maturity: f64) -> Result<(f64, f64)> {
    let nu = -lattice.row_integral(&lattice.sigma[i], i, maturity)?;
    let ia = lattice.row_integral(&lattice.alpha[i], i, maturity)?;
    let ij = lattice.row_integral(&lattice.jf[i], i, maturity)?;
    Ok((nu, -ia - ij + 0.5 * nu * nu))
}

/// ν and b̃ on every maturity node of calendar row i (NaN before t_i).
fn coeff_rows(lattice: &ForwardLattice, i: usize) -> (Vec<f64>, Vec<f64>) {
    let cs = lattice.cumulative(&lattice.sigma[i], i);
    let ca = lattice.cumulative(&lattice.alpha[i], i);
    let cj = lattice.cumulative(&lattice.jf[i], i);
    let nu: Vec<f64> = cs.iter().map(|s| -s).collect();
    let b = (0..nu.len()).map(|j| -ca[j] - cj[j] + 0.5 * nu[j] * nu[j]).collect();
    (nu, b)
}

/// b̃(t,T) + ν(t,T)γ̃(t) on the lattice, NaN where T < t.
pub fn hjm_condition_residual(lattice: &ForwardLattice, gamma: &[f64]) -> Result<Vec<Vec<f64>>> {
    lattice.validate()?;
    if gamma.len() != lattice.times.len() {
        return Err(Error::Input(format!("{} γ̃ samples for {} calendar times", gamma.len(), lattice.times.len())));
    }
    Ok((0..lattice.times.len())
        .into_par_iter()
        .map(|i| {
            let (nu, b) = coeff_rows(lattice, i);
            nu.iter().zip(&b).map(|(n, b)| b + n * gamma[i]).collect()
        })
        .collect())
}

/// Largest |x| ignoring NaN cells.
pub fn sup_norm(surface: &[Vec<f64>]) -> f64 {
    surface.iter().flatten().filter(|x| !x.is_nan()).fold(0.0, |m, x| m.max(x.abs()))
}

/// Per calendar time, the γ̃ minimizing sup_T |b̃ + νγ̃| (convex; ternary search).
pub fn fit_gamma(lattice: &ForwardLattice) -> Result<Vec<f64>> {
    lattice.validate()?;
    Ok((0..lattice.times.len())
        .into_par_iter()
        .map(|i| {
            let (nu, b) = coeff_rows(lattice, i);
            let cells: Vec<(f64, f64)> = nu.iter().zip(&b).filter(|(n, _)| !n.is_nan() && **n != 0.0).map(|(n, b)| (*n, *b)).collect();
            if cells.is_empty() {
                return 0.0;
            }
            let ratios = cells.iter().map(|(n, b)| -b / n);
            let (mut lo, mut hi) = ratios.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(x), h.max(x)));
            let cost = |g: f64| cells.iter().fold(0.0f64, |m, (n, b)| m.max((b + n * g).abs()));
            for _ in 0..200 {
                let m1 = lo + (hi - lo) / 3.0;
                let m2 = hi - (hi - lo) / 3.0;
                if cost(m1) <= cost(m2) {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            0.5 * (lo + hi)
        })
        .collect())
}

/// r̃(t) = f̃(t,t), linearly interpolated between calendar nodes.
pub fn impacted_short_rate_from_lattice(lattice: &ForwardLattice, t: f64) -> Result<f64> {
    let ts = &lattice.times;
    let diag = |i: usize| -> Result<f64> {
        let j = lattice.column(ts[i]).ok_or_else(|| Error::Input(format!("no diagonal cell at {}", ts[i])))?;
        Ok(lattice.forward[i][j])
    };
    if let Some(i) = ts.iter().position(|&x| (x - t).abs() < ON_GRID) {
        return diag(i);
    }
    let k = ts.iter().position(|&x| x > t).ok_or_else(|| Error::Input(format!("t = {t} after the last calendar time")))?;
    if k == 0 {
        return Err(Error::Input(format!("t = {t} before the first calendar time")));
    }
    let w = (t - ts[k - 1]) / (ts[k] - ts[k - 1]);
    Ok((1.0 - w) * diag(k - 1)? + w * diag(k)?)
}

/// Sup over the maturity grid of |exp(−∫(f + shift)) − (P − I)| at one calendar time,
/// with P, f from Vasicek and the shift from the impact surface.
#[allow(clippy::too_many_arguments)]
pub fn vasicek_round_trip_error(
    k: f64,
    theta: f64,
    sigma: f64,
    r: f64,
    t: f64,
    horizon: f64,
    dm: f64,
    speed: &SpeedSchedule,
    spec: &ImpactSpec,
    profile: MaturityProfile,
) -> Result<f64> {
    let n = ((horizon - t) / dm).round() as usize;
    let mats: Vec<f64> = (0..=n).map(|j| t + j as f64 * dm).collect();
    let mut lat = ForwardLattice::vasicek(k, theta, sigma, 0.0, vec![t], &[r], mats.clone())?;
    let prices: Vec<f64> = mats.iter().map(|&m| crate::affine::vasicek_coeffs(k, theta, sigma, m - t).price(r)).collect();
    let imp = impact_surface(speed, spec, profile, t, &mats)?;
    let shift = forward_impact_density(&imp, &prices, &mats)?;
    for j in 0..mats.len() {
        lat.forward[0][j] += shift[j];
    }
    let mut worst: f64 = 0.0;
    for j in 0..mats.len() {
        let rebuilt = reconstruct_bond_from_forwards(&lat, 0, mats[j])?;
        worst = worst.max((rebuilt - (prices[j] - imp[j])).abs());
    }
    Ok(worst)
}
