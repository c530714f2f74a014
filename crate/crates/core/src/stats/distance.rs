use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-9;

/// A probability mass function over named bins.
///
/// Binary dimensions are the two-bin case (`present`/`absent`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDistribution {
    bins: Vec<(String, f64)>,
}

impl DiscreteDistribution {
    pub fn new(bins: Vec<(String, f64)>) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::InvalidInput("distribution has no bins".into()));
        }
        let mut total = 0.0;
        for (id, p) in &bins {
            if !(p.is_finite() && *p >= 0.0 && *p <= 1.0 + SUM_TOLERANCE) {
                return Err(Error::InvalidInput(format!("bin `{id}` has probability {p}")));
            }
            total += p;
        }
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidInput(format!("probabilities sum to {total}, not 1")));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some((dup, _)) = bins.iter().find(|(id, _)| !seen.insert(id.as_str())) {
            return Err(Error::InvalidInput(format!("duplicate bin `{dup}`")));
        }
        Ok(DiscreteDistribution { bins })
    }

    pub fn binary(present: f64) -> Result<Self> {
        Self::new(vec![("present".into(), present), ("absent".into(), 1.0 - present)])
    }

    /// Normalises non-negative masses into a distribution. `None` when the total mass is zero.
    pub fn from_masses(masses: Vec<(String, f64)>) -> Result<Option<Self>> {
        if let Some((id, m)) = masses.iter().find(|(_, m)| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::InvalidInput(format!("bin `{id}` has mass {m}")));
        }
        let total: f64 = masses.iter().map(|(_, m)| m).sum();
        if total <= 0.0 {
            return Ok(None);
        }
        let bins = masses.into_iter().map(|(id, m)| (id, m / total)).collect();
        Self::new(bins).map(Some)
    }

    pub fn bins(&self) -> &[(String, f64)] {
        &self.bins
    }

    pub fn probability(&self, id: &str) -> Option<f64> {
        self.bins.iter().find(|(b, _)| b == id).map(|(_, p)| *p)
    }
}

/// Hellinger distance `sqrt(1 - sum(sqrt(p_i q_i)))`.
///
/// Evaluated as `||sqrt(P) - sqrt(Q)||_2 / sqrt(2)`, which is the same quantity
/// but keeps full relative precision when the distributions are nearly equal.
pub fn hellinger(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    if p.bins.len() != q.bins.len() {
        return Err(Error::IncomparableDistributions(format!("{} bins vs {} bins", p.bins.len(), q.bins.len())));
    }
    let mut pairs = Vec::with_capacity(p.bins.len());
    for (id, pi) in &p.bins {
        let qi = q.probability(id).ok_or_else(|| Error::IncomparableDistributions(format!("bin `{id}` missing")))?;
        pairs.push((*pi, qi));
    }
    Ok(hellinger_weights(pairs))
}

/// Hellinger distance over aligned probability pairs, no validation.
pub fn hellinger_weights(pairs: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    let sq: f64 = pairs
        .into_iter()
        .map(|(p, q)| {
            let d = p.max(0.0).sqrt() - q.max(0.0).sqrt();
            d * d
        })
        .sum();
    (0.5 * sq).sqrt().min(1.0)
}

/// Hellinger distance between two Bernoulli distributions given their success probabilities.
pub fn hellinger_binary(p: f64, q: f64) -> f64 {
    hellinger_weights([(p, q), (1.0 - p, 1.0 - q)])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(ps: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::new(ps.iter().enumerate().map(|(i, p)| (format!("b{i}"), *p)).collect()).unwrap()
    }

    #[test]
    fn identical_is_zero() {
        assert_eq!(hellinger(&dist(&[0.5, 0.5]), &dist(&[0.5, 0.5])).unwrap(), 0.0);
    }

    #[test]
    fn disjoint_is_one() {
        assert_eq!(hellinger(&dist(&[1.0, 0.0]), &dist(&[0.0, 1.0])).unwrap(), 1.0);
    }

    #[test]
    fn binary_reference_value() {
        // mpmath, 40 digits: 0.18185028436528520838...
        let h = hellinger(&DiscreteDistribution::binary(0.1).unwrap(), &DiscreteDistribution::binary(0.3).unwrap()).unwrap();
        assert!((h - 0.181_850_284_365_285_2).abs() < 1e-12);
        assert!((hellinger_binary(0.1, 0.3) - h).abs() < 1e-15);
    }

    #[test]
    fn bin_order_does_not_matter() {
        let p = DiscreteDistribution::new(vec![("a".into(), 0.2), ("b".into(), 0.8)]).unwrap();
        let q = DiscreteDistribution::new(vec![("b".into(), 0.4), ("a".into(), 0.6)]).unwrap();
        let r = DiscreteDistribution::new(vec![("a".into(), 0.6), ("b".into(), 0.4)]).unwrap();
        assert_eq!(hellinger(&p, &q).unwrap(), hellinger(&p, &r).unwrap());
    }

    #[test]
    fn mismatched_bins_rejected() {
        let p = dist(&[0.5, 0.5]);
        let q = DiscreteDistribution::new(vec![("b0".into(), 0.5), ("x".into(), 0.5)]).unwrap();
        assert!(matches!(hellinger(&p, &q), Err(Error::IncomparableDistributions(_))));
        assert!(matches!(hellinger(&p, &dist(&[0.2, 0.3, 0.5])), Err(Error::IncomparableDistributions(_))));
    }

    #[test]
    fn construction_validates() {
        assert!(DiscreteDistribution::new(vec![("a".into(), 0.5)]).is_err());
        assert!(DiscreteDistribution::new(vec![("a".into(), -0.1), ("b".into(), 1.1)]).is_err());
        assert!(DiscreteDistribution::new(vec![("a".into(), 0.5), ("a".into(), 0.5)]).is_err());
        assert!(DiscreteDistribution::from_masses(vec![("a".into(), 0.0)]).unwrap().is_none());
        let d = DiscreteDistribution::from_masses(vec![("a".into(), 3.0), ("b".into(), 1.0)]).unwrap().unwrap();
        assert_eq!(d.probability("a"), Some(0.75));
    }

    #[test]
    fn near_equal_distributions_keep_precision() {
        let h = hellinger_binary(0.3, 0.3 + 1e-15);
        assert!(h < 1e-14, "{h}");
    }
}
