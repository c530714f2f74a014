use crate::error::{Error, Result};

/// Weighted Pearson correlation between `v` and `o`.
///
/// Direct two-pass evaluation of the weighted covariance over the weighted
/// standard deviations. Returns `Ok(None)` when either vector has zero
/// weighted variance: the correlation is undefined there, not zero.
pub fn weighted_pearson(v: &[f64], o: &[f64], w: &[f64]) -> Result<Option<f64>> {
    if v.len() != o.len() || v.len() != w.len() {
        return Err(Error::InvalidInput(format!("weighted_pearson length mismatch: {} / {} / {}", v.len(), o.len(), w.len())));
    }
    if v.len() < 2 {
        return Err(Error::InvalidInput("weighted_pearson needs at least two entities".into()));
    }
    if let Some(bad) = w.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(Error::InvalidInput(format!("weights must be positive, got {bad}")));
    }
    let total: f64 = w.iter().sum();
    let mean_v = v.iter().zip(w).map(|(x, wi)| wi * x).sum::<f64>() / total;
    let mean_o = o.iter().zip(w).map(|(x, wi)| wi * x).sum::<f64>() / total;

    let mut cov = 0.0;
    let mut var_v = 0.0;
    let mut var_o = 0.0;
    for ((vi, oi), wi) in v.iter().zip(o).zip(w) {
        let dv = vi - mean_v;
        let dov = oi - mean_o;
        cov += wi * dv * dov;
        var_v += wi * dv * dv;
        var_o += wi * dov * dov;
    }
    if var_v <= 0.0 || var_o <= 0.0 {
        return Ok(None);
    }
    Ok(Some((cov / (var_v.sqrt() * var_o.sqrt())).clamp(-1.0, 1.0)))
}

/// Weighted sufficient statistics of a pair of binary vectors.
///
/// `total = sum(w)`, `v = sum(w*v)`, `o = sum(w*o)`, `vo = sum(w*v*o)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BinaryMoments {
    pub total: f64,
    pub v: f64,
    pub o: f64,
    pub vo: f64,
}

impl BinaryMoments {
    pub fn add(&mut self, v: bool, o: bool, w: f64) {
        self.total += w;
        if v {
            self.v += w;
            if o {
                self.vo += w;
            }
        }
        if o {
            self.o += w;
        }
    }
}

/// Weighted Pearson correlation of two binary vectors from their 2x2 weighted
/// contingency masses (the phi coefficient). Agrees with [`weighted_pearson`].
pub fn pearson_from_moments(m: &BinaryMoments) -> Option<f64> {
    let n11 = m.vo;
    let n10 = m.v - m.vo;
    let n01 = m.o - m.vo;
    let n00 = m.total - m.v - m.o + m.vo;
    let v1 = m.v;
    let v0 = m.total - m.v;
    let o1 = m.o;
    let o0 = m.total - m.o;
    if v1 <= 0.0 || v0 <= 0.0 || o1 <= 0.0 || o0 <= 0.0 {
        return None;
    }
    let r = (n11 * n00 - n10 * n01) / ((v1 * v0).sqrt() * (o1 * o0).sqrt());
    Some(r.clamp(-1.0, 1.0))
}

/// Linear blend `rho * (1 - c) + c * rho_weighted` for `c` in `[0, 1]`.
pub fn interp_correlation(rho: f64, rho_weighted: f64, c: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::InvalidInput(format!("interpolation coefficient {c} outside [0, 1]")));
    }
    if c == 0.0 {
        return Ok(rho);
    }
    if c == 1.0 {
        return Ok(rho_weighted);
    }
    Ok(rho * (1.0 - c) + c * rho_weighted)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn textbook_pearson(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        sxy / (sxx * syy).sqrt()
    }

    #[test]
    fn perfect_correlation() {
        let v = [1.0, 0.0, 1.0];
        assert_eq!(weighted_pearson(&v, &v, &[1.0; 3]).unwrap(), Some(1.0));
    }

    #[test]
    fn uniform_weights_reduce_to_textbook() {
        let v = [1.0, 0.0, 1.0, 0.0];
        let o = [1.0, 0.0, 0.0, 0.0];
        let r = weighted_pearson(&v, &o, &[1.0; 4]).unwrap().unwrap();
        assert!((r - textbook_pearson(&v, &o)).abs() < 1e-15);
        assert!((r - 0.577_350_269_189_625_7).abs() < 1e-12);
    }

    #[test]
    fn duplicated_entity_weight() {
        let v = [1.0, 0.0, 1.0, 0.0];
        let o = [1.0, 0.0, 0.0, 0.0];
        let r = weighted_pearson(&v, &o, &[2.0, 1.0, 1.0, 1.0]).unwrap().unwrap();
        let expanded = textbook_pearson(&[1.0, 1.0, 0.0, 1.0, 0.0], &[1.0, 1.0, 0.0, 0.0, 0.0]);
        assert!((r - expanded).abs() < 1e-12);
        assert!((r - 2.0 / 3.0).abs() < 1e-4);
    }

    #[test]
    fn scaling_weights_is_invariant() {
        let v = [1.0, 0.0, 1.0, 0.0, 1.0];
        let o = [1.0, 1.0, 0.0, 0.0, 1.0];
        let w = [0.3, 1.7, 2.0, 0.5, 1.1];
        let scaled: Vec<f64> = w.iter().map(|x| x * 13.0).collect();
        let a = weighted_pearson(&v, &o, &w).unwrap().unwrap();
        let b = weighted_pearson(&v, &o, &scaled).unwrap().unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn constant_vector_is_undefined() {
        assert_eq!(weighted_pearson(&[1.0, 1.0, 1.0], &[1.0, 0.0, 1.0], &[1.0; 3]).unwrap(), None);
        let mut m = BinaryMoments::default();
        m.add(true, true, 1.0);
        m.add(true, false, 1.0);
        assert_eq!(pearson_from_moments(&m), None);
    }

    #[test]
    fn moments_route_agrees_with_direct() {
        let v = [true, false, true, true, false, false, true];
        let o = [true, false, false, true, true, false, true];
        let w = [0.5, 2.0, 1.25, 3.0, 0.75, 1.0, 2.5];
        let mut m = BinaryMoments::default();
        for i in 0..v.len() {
            m.add(v[i], o[i], w[i]);
        }
        let vf: Vec<f64> = v.iter().map(|&b| b as u8 as f64).collect();
        let of: Vec<f64> = o.iter().map(|&b| b as u8 as f64).collect();
        let direct = weighted_pearson(&vf, &of, &w).unwrap().unwrap();
        assert!((pearson_from_moments(&m).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn input_errors() {
        assert!(weighted_pearson(&[1.0], &[1.0], &[1.0]).is_err());
        assert!(weighted_pearson(&[1.0, 0.0], &[1.0], &[1.0, 1.0]).is_err());
        assert!(weighted_pearson(&[1.0, 0.0], &[1.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn interpolation() {
        assert_eq!(interp_correlation(0.2, 0.6, 0.0).unwrap(), 0.2);
        assert_eq!(interp_correlation(0.2, 0.6, 1.0).unwrap(), 0.6);
        assert!((interp_correlation(0.2, 0.6, 0.5).unwrap() - 0.4).abs() < 1e-15);
        assert!(interp_correlation(0.2, 0.6, 1.5).is_err());
        assert!(interp_correlation(0.2, 0.6, -0.1).is_err());
    }
}
