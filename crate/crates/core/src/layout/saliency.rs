use std::collections::BTreeSet;

use super::metric::{LayoutConfig, MetricField};
use crate::cohort::{DimId, DimensionForest};
use crate::error::{Error, Result};

/// `true` for every collapsed dimension and everything below one.
pub fn collapsed_mask(forest: &DimensionForest, cfg: &LayoutConfig) -> Result<Vec<bool>> {
    let mut mask = vec![false; forest.len()];
    for code in &cfg.collapses {
        for d in forest.subtree(forest.require(code)?) {
            mask[d.index()] = true;
        }
    }
    Ok(mask)
}

// Gradients closer than this count as tied.
const TIE_EPS: f64 = 1e-12;

/// Marks the dimensions that get a label and a table row.
///
/// 1. `|delta| >= t_s` is salient.
/// 2. Pinned dimensions and attribute dimensions are salient.
/// 3. Any leaf-to-root path that reaches `|s| >= t_s` somewhere but holds no
///    salient dimension yet gets its largest `|delta|` marked (ties go to the
///    shallowest node).
/// 4. Collapsed dimensions and their descendants are never salient.
pub fn compute_saliency(forest: &DimensionForest, field: &MetricField, cfg: &LayoutConfig) -> Result<BTreeSet<DimId>> {
    cfg.validate(forest)?;
    if field.len() != forest.len() {
        return Err(Error::InvalidInput("metric field does not cover the forest".into()));
    }
    let collapsed = collapsed_mask(forest, cfg)?;
    let t = cfg.saliency_threshold;
    let mut salient = vec![false; forest.len()];

    for d in forest.ids() {
        if field.delta(d).abs() >= t || forest.kind(d).is_attribute() {
            salient[d.index()] = true;
        }
    }
    for code in &cfg.pins {
        salient[forest.require(code)?.index()] = true;
    }
    for d in forest.ids() {
        if collapsed[d.index()] {
            salient[d.index()] = false;
        }
    }

    for leaf in forest.leaves() {
        let path: Vec<DimId> = forest.path(leaf).into_iter().filter(|d| !collapsed[d.index()]).collect();
        if path.iter().any(|d| salient[d.index()]) {
            continue;
        }
        if !path.iter().any(|d| field.value(*d).abs() >= t) {
            continue;
        }
        let mut best = path[0];
        for &d in &path[1..] {
            if field.delta(d).abs() > field.delta(best).abs() + TIE_EPS {
                best = d;
            }
        }
        salient[best.index()] = true;
    }

    Ok(forest.ids().filter(|d| salient[d.index()]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::{DimensionKind, DimensionRecord};

    fn chain(n: usize) -> DimensionForest {
        let recs = (0..n)
            .map(|i| DimensionRecord {
                code: format!("n{i}"),
                label: String::new(),
                parent: (i > 0).then(|| format!("n{}", i - 1)),
                kind: DimensionKind::Event,
            })
            .collect();
        DimensionForest::from_records(recs).unwrap()
    }

    fn cfg(t: f64) -> LayoutConfig {
        LayoutConfig { saliency_threshold: t, ..Default::default() }
    }

    fn codes(f: &DimensionForest, s: &BTreeSet<DimId>) -> Vec<String> {
        s.iter().map(|d| f.code(*d).to_string()).collect()
    }

    #[test]
    fn rule_one_on_gradient() {
        let f = chain(4);
        let field = MetricField::from_values(&f, vec![Some(0.0), Some(0.05), Some(0.4), Some(0.42)]).unwrap();
        assert_eq!(codes(&f, &compute_saliency(&f, &field, &cfg(0.2)).unwrap()), ["n2"]);
    }

    #[test]
    fn gradual_drift_marks_shallowest_max_gradient() {
        let f = chain(4);
        let field = MetricField::from_values(&f, vec![Some(0.0), Some(0.15), Some(0.30), Some(0.45)]).unwrap();
        assert_eq!(codes(&f, &compute_saliency(&f, &field, &cfg(0.2)).unwrap()), ["n1"]);
    }

    #[test]
    fn infinite_threshold_keeps_pins_and_attributes() {
        let mut recs = chain(3).records();
        recs.push(DimensionRecord { code: "sex".into(), label: String::new(), parent: None, kind: DimensionKind::Categorical });
        let f = DimensionForest::from_records(recs).unwrap();
        let field = MetricField::from_values(&f, vec![Some(0.9); 4]).unwrap();
        let mut c = cfg(f64::INFINITY);
        c.pins.insert("n1".into());
        assert_eq!(codes(&f, &compute_saliency(&f, &field, &c).unwrap()), ["n1", "sex"]);
    }

    #[test]
    fn collapse_overrides_everything() {
        let f = chain(4);
        let field = MetricField::from_values(&f, vec![Some(0.0), Some(0.5), Some(0.9), Some(0.1)]).unwrap();
        let mut c = cfg(0.2);
        c.collapses.insert("n1".into());
        c.pins.insert("n3".into());
        assert!(compute_saliency(&f, &field, &c).unwrap().is_empty());
    }

    #[test]
    fn unknown_pin_rejected() {
        let f = chain(2);
        let field = MetricField::from_values(&f, vec![None, None]).unwrap();
        let mut c = cfg(0.2);
        c.pins.insert("zz".into());
        assert!(compute_saliency(&f, &field, &c).is_err());
        assert!(compute_saliency(&f, &field, &cfg(0.0)).is_err());
    }
}
