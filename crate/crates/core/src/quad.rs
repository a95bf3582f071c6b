//! Fixed quadrature rules.

const GL8_X: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_W: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// 8-point Gauss–Legendre on `[a, b]`; exact for polynomials of degree ≤ 15.
pub(crate) fn gauss_legendre(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
    let mut acc = 0.0;
    for k in 0..8 {
        acc += GL8_W[k] * f(m + h * GL8_X[k]);
    }
    acc * h
}

/// Composite Simpson with at least `min_intervals` (rounded up to even) panels.
pub(crate) fn simpson(a: f64, b: f64, min_intervals: usize, f: impl Fn(f64) -> f64) -> f64 {
    let n = (min_intervals.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_integrate_known_functions() {
        let gl = gauss_legendre(0.0, 2.0, |x| x.powi(15));
        assert!((gl - 2f64.powi(16) / 16.0).abs() < 1e-9);
        let s = simpson(0.0, std::f64::consts::PI, 200, f64::sin);
        assert!((s - 2.0).abs() < 1e-8);
    }
}
