#![allow(clippy::excessive_precision)]

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;
const MAX_ITER: usize = 10_000;

/// Constants of the danger-score standardization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareParams {
    /// Computational limit `L` on the standardized score; above it the
    /// linear approximation takes over.
    pub limit: f64,
    /// Step `epsilon` used to estimate the slope of the linear approximation.
    pub epsilon: f64,
    /// Critical value for one degree of freedom at p = 0.05.
    pub critical_1df: f64,
    /// Standardized score that maps to a normalized danger of 1.
    pub warning_threshold: f64,
}

impl Default for ChiSquareParams {
    fn default() -> Self {
        ChiSquareParams { limit: 50.0, epsilon: 5.0, critical_1df: 3.84, warning_threshold: 50.0 }
    }
}

impl ChiSquareParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.limit > 0.0 && self.limit.is_finite()) {
            return Err(Error::InvalidInput(format!("limit must be positive, got {}", self.limit)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidInput(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.warning_threshold > 0.0 && self.warning_threshold.is_finite()) {
            return Err(Error::InvalidInput(format!("warning threshold must be positive, got {}", self.warning_threshold)));
        }
        Ok(())
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

fn gamma_prefactor(a: f64, x: f64) -> f64 {
    (a * x.ln() - x - ln_gamma(a)).exp()
}

/// Series for P(a, x); converges fast for x < a + 1.
fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    (sum * gamma_prefactor(a, x)).min(1.0)
}

/// Continued fraction for Q(a, x) (modified Lentz); converges fast for x >= a + 1.
fn gamma_q_continued_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    (gamma_prefactor(a, x) * h).clamp(0.0, 1.0)
}

/// Regularized lower incomplete gamma function P(a, x).
pub fn regularized_gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_p_series(a, x)
    } else {
        1.0 - gamma_q_continued_fraction(a, x)
    }
}

/// Regularized upper incomplete gamma function Q(a, x) = 1 - P(a, x).
pub fn regularized_gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_continued_fraction(a, x)
    }
}

fn check_df(df: u32) -> Result<f64> {
    if df == 0 {
        return Err(Error::InvalidInput("chi-square needs at least one degree of freedom".into()));
    }
    Ok(df as f64)
}

/// `P(X < x)` for `X ~ chi^2(df)`.
pub fn chi2_cdf(x: f64, df: u32) -> Result<f64> {
    let k = check_df(df)?;
    if x.is_nan() || x < 0.0 {
        return Err(Error::InvalidInput(format!("chi-square argument must be >= 0, got {x}")));
    }
    Ok(regularized_gamma_p(0.5 * k, 0.5 * x))
}

/// Upper tail `P(X >= x)` for `X ~ chi^2(df)`, accurate where the CDF rounds to 1.
pub fn chi2_sf(x: f64, df: u32) -> Result<f64> {
    let k = check_df(df)?;
    if x.is_nan() || x < 0.0 {
        return Err(Error::InvalidInput(format!("chi-square argument must be >= 0, got {x}")));
    }
    Ok(regularized_gamma_q(0.5 * k, 0.5 * x))
}

fn chi2_pdf(x: f64, k: f64) -> f64 {
    if x <= 0.0 {
        return if k < 2.0 {
            f64::INFINITY
        } else if k == 2.0 {
            0.5
        } else {
            0.0
        };
    }
    let h = 0.5 * k;
    ((h - 1.0) * x.ln() - 0.5 * x - h * std::f64::consts::LN_2 - ln_gamma(h)).exp()
}

/// Find x with `g(x) = 0` where `g` is increasing and `g' = pdf`.
/// Bracket expansion, then Newton steps that fall back to bisection whenever
/// they would leave the bracket.
fn solve_increasing(k: f64, g: impl Fn(f64) -> f64) -> f64 {
    let mut lo = 0.0_f64;
    let mut hi = k.max(1.0) * 2.0;
    while g(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return f64::INFINITY;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..500 {
        let fx = g(x);
        if fx == 0.0 {
            return x;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = chi2_pdf(x, k);
        let mut next = if d > 0.0 && d.is_finite() { x - fx / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * next.abs() || hi - lo <= 4.0 * f64::EPSILON * hi {
            return next;
        }
        x = next;
    }
    x
}

/// Quantile of `chi^2(df)`: the x with `chi2_cdf(x, df) = prob`.
///
/// `prob = 1` has no finite quantile and is an error; callers in the upper
/// tail should go through [`chi2_inv_sf`] instead.
pub fn chi2_inv_cdf(prob: f64, df: u32) -> Result<f64> {
    let k = check_df(df)?;
    if prob.is_nan() || !(0.0..=1.0).contains(&prob) {
        return Err(Error::InvalidInput(format!("probability {prob} outside [0, 1)")));
    }
    if prob == 1.0 {
        return Err(Error::NonFiniteQuantile(prob));
    }
    if prob == 0.0 {
        return Ok(0.0);
    }
    let x = solve_increasing(k, |x| regularized_gamma_p(0.5 * k, 0.5 * x) - prob);
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFiniteQuantile(prob))
    }
}

/// Inverse survival function: the x with `chi2_sf(x, df) = tail`.
pub fn chi2_inv_sf(tail: f64, df: u32) -> Result<f64> {
    let k = check_df(df)?;
    if tail.is_nan() || !(0.0..=1.0).contains(&tail) {
        return Err(Error::InvalidInput(format!("tail probability {tail} outside (0, 1]")));
    }
    if tail == 0.0 {
        return Err(Error::NonFiniteQuantile(1.0));
    }
    if tail == 1.0 {
        return Ok(0.0);
    }
    let x = solve_increasing(k, |x| tail - regularized_gamma_q(0.5 * k, 0.5 * x));
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFiniteQuantile(1.0 - tail))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!(ln_gamma(2.0).abs() < 1e-14);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
        assert!((ln_gamma(10.0) - 362_880f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn cdf_at_zero() {
        for k in 1..12 {
            assert_eq!(chi2_cdf(0.0, k).unwrap(), 0.0);
            assert_eq!(chi2_sf(0.0, k).unwrap(), 1.0);
        }
    }

    #[test]
    fn critical_value_one_df() {
        assert!((chi2_cdf(3.84, 1).unwrap() - 0.95).abs() < 5e-4);
    }

    #[test]
    fn two_df_closed_form() {
        for x in [0.1, 1.0, 3.0, 10.0, 40.0] {
            let exact = 1.0 - (-0.5_f64 * x).exp();
            assert!((chi2_cdf(x, 2).unwrap() - exact).abs() < 1e-14);
        }
    }

    #[test]
    fn table_value_three_df() {
        // Published tables: P(chi^2_3 < 0.999) = 0.1985
        assert!((chi2_cdf(0.999, 3).unwrap() - 0.1987).abs() < 5e-4);
    }

    #[test]
    fn inverse_endpoints() {
        assert_eq!(chi2_inv_cdf(0.0, 4).unwrap(), 0.0);
        assert!(matches!(chi2_inv_cdf(1.0, 4), Err(Error::NonFiniteQuantile(_))));
        assert!(chi2_inv_cdf(1.2, 4).is_err());
        assert!(chi2_cdf(1.0, 0).is_err());
        assert_eq!(chi2_inv_sf(1.0, 3).unwrap(), 0.0);
        assert!(chi2_inv_sf(0.0, 3).is_err());
    }

    #[test]
    fn inverse_round_trip() {
        for k in [1, 3, 7] {
            for x in [0.5, 5.0, 20.0] {
                let back = chi2_inv_cdf(chi2_cdf(x, k).unwrap(), k).unwrap();
                assert!((back - x).abs() < 1e-8, "k={k} x={x} back={back}");
            }
        }
    }

    #[test]
    fn inverse_reference_value() {
        assert!((chi2_inv_cdf(0.1987, 1).unwrap() - 0.0633).abs() < 1e-3);
    }

    #[test]
    fn survival_inverse_far_tail() {
        // sf_1(50) ~ 1.5e-12: the cdf route cannot resolve x here, the sf route can.
        let tail = chi2_sf(50.0, 1).unwrap();
        let x = chi2_inv_sf(tail, 1).unwrap();
        assert!((x - 50.0).abs() < 1e-8, "{x}");
    }

    #[test]
    fn agrees_with_statrs() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        for k in 1..=10u32 {
            let oracle = ChiSquared::new(k as f64).unwrap();
            for x in [0.1, 1.0, 3.84, 12.0, 50.0] {
                assert!((chi2_cdf(x, k).unwrap() - oracle.cdf(x)).abs() < 1e-12, "k={k} x={x}");
                let sf = oracle.sf(x);
                assert!((chi2_sf(x, k).unwrap() - sf).abs() <= 1e-10 * sf.max(1e-300), "k={k} x={x}");
            }
            for p in [0.01, 0.5, 0.95] {
                assert!((chi2_inv_cdf(p, k).unwrap() - oracle.inverse_cdf(p)).abs() < 1e-6, "k={k} p={p}");
            }
        }
    }
}
