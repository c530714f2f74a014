use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent of the generalized mean used for cohort-level aggregate distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerMeanConfig {
    pub p: f64,
}

impl Default for PowerMeanConfig {
    fn default() -> Self {
        PowerMeanConfig { p: 8.0 }
    }
}

/// `M_p(x) = (mean(x_i^p))^(1/p)` over non-negative values.
///
/// Values are scaled by their maximum before exponentiation so that large
/// `p` neither underflows on small distances nor overflows on large ones.
pub fn generalized_mean(values: &[f64], cfg: PowerMeanConfig) -> Result<f64> {
    let p = cfg.p;
    if p == 0.0 || !p.is_finite() {
        return Err(Error::InvalidInput(format!("power mean exponent must be finite and non-zero, got {p}")));
    }
    if values.is_empty() {
        return Err(Error::InvalidInput("power mean of an empty list".into()));
    }
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidInput(format!("power mean needs non-negative values, got {v}")));
    }
    let max = values.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(0.0);
    }
    if p < 0.0 && values.contains(&0.0) {
        return Ok(0.0);
    }
    let n = values.len() as f64;
    if p == 1.0 {
        return Ok(values.iter().sum::<f64>() / n);
    }
    let mean: f64 = values.iter().map(|v| (v / max).powf(p)).sum::<f64>() / n;
    let m = max * mean.powf(1.0 / p);
    // Rounding can push the result a hair outside [min, max].
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(m.clamp(min, max))
}
