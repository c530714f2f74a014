//! Deterministic synthetic corpus: an ICD-like forest and entities with one
//! gender-dependent condition, a condition correlated with it, and an outcome
//! driven by both.

use std::collections::{BTreeMap, BTreeSet};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::cohort::{AttributeValue, Constraint, Dataset, DimensionForest, DimensionKind, DimensionRecord, EntityRecord};
use crate::error::Result;
use crate::ingest::content_checksum;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub entities: usize,
    pub chapters: usize,
    pub categories: usize,
    pub subcodes: usize,
    pub seed: u64,
    /// Leaf whose prevalence depends on gender.
    pub target: String,
    /// Leaf correlated with the target but not with gender directly.
    pub confounder: String,
    pub female_share: f64,
    pub target_female: f64,
    pub target_male: f64,
    pub confounder_given_target: f64,
    pub confounder_otherwise: f64,
    /// Background events per entity.
    pub background_events: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            entities: 10_000,
            chapters: 9,
            categories: 10,
            subcodes: 10,
            seed: 20_190_101,
            target: "E4.2".into(),
            confounder: "C7.1".into(),
            female_share: 0.5,
            target_female: 0.55,
            target_male: 0.05,
            confounder_given_target: 0.6,
            confounder_otherwise: 0.1,
            background_events: 6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub hierarchy: Vec<DimensionRecord>,
    pub entities: Vec<EntityRecord>,
    /// Derives the skewed focus cohort from the root.
    pub filter: Constraint,
}

impl SynthCorpus {
    pub fn filter(&self) -> Constraint {
        self.filter.clone()
    }

    pub fn dataset(&self, id: &str) -> Result<Dataset> {
        let ent = crate::ingest::write_entities(&self.entities)?;
        let hier = crate::ingest::write_hierarchy(&self.hierarchy)?;
        let forest = DimensionForest::from_records(self.hierarchy.clone())?;
        Dataset::new(id, content_checksum(ent.as_bytes(), hier.as_bytes()), forest, self.entities.clone())
    }
}

fn chapter_code(c: usize) -> String {
    char::from(b'A' + c as u8).to_string()
}

pub fn hierarchy(cfg: &SynthConfig) -> Vec<DimensionRecord> {
    let rec = |code: String, parent: Option<String>, kind| DimensionRecord { label: format!("synthetic {code}"), code, parent, kind };
    let mut out = Vec::new();
    for c in 0..cfg.chapters {
        let ch = chapter_code(c);
        out.push(rec(ch.clone(), None, DimensionKind::Event));
        for k in 0..cfg.categories {
            let cat = format!("{ch}{k}");
            out.push(rec(cat.clone(), Some(ch.clone()), DimensionKind::Event));
            for s in 0..cfg.subcodes {
                out.push(rec(format!("{cat}.{s}"), Some(cat.clone()), DimensionKind::Event));
            }
        }
    }
    out.push(rec("gender".into(), None, DimensionKind::Categorical));
    out.push(rec("age".into(), None, DimensionKind::Numeric));
    out
}

pub fn generate(cfg: &SynthConfig) -> SynthCorpus {
    let hierarchy = hierarchy(cfg);
    let leaves: Vec<&str> = hierarchy.iter().filter(|r| r.code.contains('.')).map(|r| r.code.as_str()).collect();
    let mut rng = StdRng::seed_from_u64(cfg.seed);
    let entities = (0..cfg.entities)
        .map(|i| {
            let female = rng.random_bool(cfg.female_share);
            let mut events = BTreeSet::new();
            for _ in 0..cfg.background_events {
                // Skewed popularity: low indices are common.
                let u: f64 = rng.random();
                let leaf = leaves[((u * u) * leaves.len() as f64) as usize];
                if leaf != cfg.target && leaf != cfg.confounder {
                    events.insert(leaf.to_string());
                }
            }
            let target = rng.random_bool(if female { cfg.target_female } else { cfg.target_male });
            let conf = rng.random_bool(if target { cfg.confounder_given_target } else { cfg.confounder_otherwise });
            if target {
                events.insert(cfg.target.clone());
            }
            if conf {
                events.insert(cfg.confounder.clone());
            }
            let outcome = rng.random_bool(0.05 + 0.3 * f64::from(u8::from(target)) + 0.2 * f64::from(u8::from(conf)));
            let mut attributes = BTreeMap::new();
            attributes.insert("gender".into(), AttributeValue::Category(if female { "F" } else { "M" }.into()));
            attributes.insert("age".into(), AttributeValue::Number(f64::from(rng.random_range(18u32..90))));
            EntityRecord { entity_id: format!("p{i:06}"), attributes, events, outcome }
        })
        .collect();
    SynthCorpus { hierarchy, entities, filter: Constraint::category_equals("gender", "F") }
}

/// Entities realizing exact subgroup counts over `n` event dimensions
/// `D0..`: subgroup `p` (bit `j` = has `Dj`) gets `baseline[p]` entities, the
/// first `focus[p]` of which also carry the `FOCUS` event. The root cohort
/// is the baseline and `filter` derives the focus.
pub fn counts_corpus(baseline: &[usize], focus: &[usize]) -> Result<SynthCorpus> {
    let n = baseline.len().trailing_zeros() as usize;
    if baseline.len() != 1 << n || focus.len() != baseline.len() || focus.iter().zip(baseline).any(|(f, b)| f > b) {
        return Err(crate::Error::InvalidInput("counts must cover 2^n subgroups with focus within baseline".into()));
    }
    let rec = |code: String| DimensionRecord { code, label: String::new(), parent: None, kind: DimensionKind::Event };
    let mut hierarchy: Vec<DimensionRecord> = (0..n).map(|j| rec(format!("D{j}"))).collect();
    hierarchy.push(rec("FOCUS".into()));
    let mut entities = Vec::new();
    for (p, (&b, &f)) in baseline.iter().zip(focus).enumerate() {
        for i in 0..b {
            let mut events: BTreeSet<String> = (0..n).filter(|j| p >> j & 1 == 1).map(|j| format!("D{j}")).collect();
            if i < f {
                events.insert("FOCUS".into());
            }
            entities.push(EntityRecord { entity_id: format!("s{p}-{i}"), attributes: BTreeMap::new(), events, outcome: i % 2 == 0 });
        }
    }
    Ok(SynthCorpus { hierarchy, entities, filter: Constraint::has_event("FOCUS") })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_prevalence() {
        let corpus = generate(&SynthConfig::default());
        assert_eq!(corpus.hierarchy.len(), 9 + 90 + 900 + 2);
        assert_eq!(corpus.entities.len(), 10_000);
        let ds = corpus.dataset("synth").unwrap();
        let t = ds.forest().id("E4.2").unwrap();
        let overall = ds.presence(t).len() as f64 / ds.len() as f64;
        assert!((overall - 0.30).abs() < 0.02, "{overall}");
        let females = corpus.filter().select(&ds, &ds.all()).unwrap();
        let shifted = females.intersection_len(ds.presence(t)) as f64 / females.len() as f64;
        assert!((shifted - 0.55).abs() < 0.02, "{shifted}");
    }

    #[test]
    fn counts_are_realized() {
        let c = counts_corpus(&[100, 200, 300, 400], &[0, 200, 300, 400]).unwrap();
        let ds = c.dataset("t").unwrap();
        let focus = c.filter().select(&ds, &ds.all()).unwrap();
        let cfg = crate::reweight::ReweightConfig::new(vec!["D0".into(), "D1".into()], 1.0);
        let t = crate::reweight::partition_subgroups(&ds, &ds.all(), &focus, &cfg).unwrap();
        let b: Vec<usize> = t.rows.iter().map(|r| r.baseline).collect();
        let f: Vec<usize> = t.rows.iter().map(|r| r.focus).collect();
        assert_eq!((b, f), (vec![100, 200, 300, 400], vec![0, 200, 300, 400]));
        assert!(counts_corpus(&[1, 2, 3], &[0, 0, 0]).is_err());
    }

    #[test]
    fn deterministic() {
        let small = SynthConfig { entities: 50, ..Default::default() };
        assert_eq!(generate(&small).entities, generate(&small).entities);
    }
}
