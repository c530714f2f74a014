use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::dataset::{AttributeColumn, Dataset};
use super::entity_set::EntitySet;
use super::forest::DimensionKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Predicate {
    HasEvent,
    LacksEvent,
    CategoryEquals {
        value: String,
    },
    /// Inclusive on both ends.
    NumericInRange {
        lo: f64,
        hi: f64,
    },
}

/// A filter on one dimension used to derive a cohort from its parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub dimension: String,
    #[serde(flatten)]
    pub predicate: Predicate,
}

impl Constraint {
    pub fn has_event(code: impl Into<String>) -> Self {
        Constraint { dimension: code.into(), predicate: Predicate::HasEvent }
    }

    pub fn category_equals(code: impl Into<String>, value: impl Into<String>) -> Self {
        Constraint { dimension: code.into(), predicate: Predicate::CategoryEquals { value: value.into() } }
    }

    pub fn validate(&self, ds: &Dataset) -> Result<()> {
        let d = ds.forest().require(&self.dimension)?;
        let kind = ds.forest().kind(d);
        let ok = match (&self.predicate, kind) {
            (Predicate::HasEvent | Predicate::LacksEvent, DimensionKind::Event) => true,
            (Predicate::CategoryEquals { .. }, DimensionKind::Categorical) => true,
            (Predicate::NumericInRange { lo, hi }, DimensionKind::Numeric) => lo <= hi && !lo.is_nan() && !hi.is_nan(),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("predicate {:?} does not apply to {kind:?} dimension `{}`", self.predicate, self.dimension)))
        }
    }

    /// Members of `within` satisfying the constraint.
    pub fn select(&self, ds: &Dataset, within: &EntitySet) -> Result<EntitySet> {
        self.validate(ds)?;
        let d = ds.forest().require(&self.dimension)?;
        let n = ds.len();
        let out = match &self.predicate {
            Predicate::HasEvent => EntitySet::from_indices(n, within.iter_and(ds.presence(d))),
            Predicate::LacksEvent => within.difference(ds.presence(d)),
            Predicate::CategoryEquals { value } => match ds.column(d) {
                Some(AttributeColumn::Categorical { categories, values }) => match categories.iter().position(|c| c == value) {
                    Some(cat) => EntitySet::from_indices(n, within.iter().filter(|&i| values[i] == Some(cat as u32))),
                    None => EntitySet::empty(n),
                },
                _ => unreachable!("validated as categorical"),
            },
            Predicate::NumericInRange { lo, hi } => match ds.column(d) {
                Some(AttributeColumn::Numeric { values }) => {
                    EntitySet::from_indices(n, within.iter().filter(|&i| values[i].is_some_and(|v| v >= *lo && v <= *hi)))
                }
                _ => unreachable!("validated as numeric"),
            },
        };
        Ok(out)
    }
}

/// Persistable description of a cohort; members are recomputed by replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub id: String,
    pub parent: Option<String>,
    pub constraint: Option<Constraint>,
    /// True for the implicitly excluded sibling: members of the parent that fail the constraint.
    #[serde(default)]
    pub is_complement: bool,
}

#[derive(Debug, Clone)]
pub struct Cohort {
    pub spec: CohortSpec,
    pub members: Arc<EntitySet>,
}

impl Cohort {
    pub fn id(&self) -> &str {
        &self.spec.id
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }
}

/// Cohort provenance tree plus the baseline/focus roles.
#[derive(Debug, Clone)]
pub struct CohortTree {
    cohorts: Vec<Cohort>,
    baseline: String,
    focus: Option<String>,
}

pub const ROOT_COHORT: &str = "c0";

impl CohortTree {
    /// A tree holding a single root cohort with every entity; the root is the baseline.
    pub fn new(ds: &Dataset) -> Self {
        let root = Cohort {
            spec: CohortSpec { id: ROOT_COHORT.into(), parent: None, constraint: None, is_complement: false },
            members: Arc::new(ds.all()),
        };
        CohortTree { cohorts: vec![root], baseline: ROOT_COHORT.into(), focus: None }
    }

    pub fn cohorts(&self) -> &[Cohort] {
        &self.cohorts
    }

    pub fn specs(&self) -> Vec<CohortSpec> {
        self.cohorts.iter().map(|c| c.spec.clone()).collect()
    }

    pub fn get(&self, id: &str) -> Result<&Cohort> {
        self.cohorts.iter().find(|c| c.spec.id == id).ok_or_else(|| Error::UnknownCohort(id.to_string()))
    }

    pub fn baseline(&self) -> &Cohort {
        self.get(&self.baseline).expect("baseline always exists")
    }

    pub fn baseline_id(&self) -> &str {
        &self.baseline
    }

    pub fn focus_id(&self) -> Option<&str> {
        self.focus.as_deref()
    }

    pub fn focus(&self) -> Option<&Cohort> {
        self.focus.as_deref().map(|f| self.get(f).expect("focus always exists"))
    }

    pub fn set_baseline(&mut self, id: &str) -> Result<()> {
        self.get(id)?;
        self.baseline = id.to_string();
        Ok(())
    }

    pub fn set_focus(&mut self, id: Option<&str>) -> Result<()> {
        if let Some(id) = id {
            self.get(id)?;
        }
        self.focus = id.map(str::to_string);
        Ok(())
    }

    fn next_id(&self) -> String {
        format!("c{}", self.cohorts.len())
    }

    /// Splits `parent` by `constraint` into the included cohort and its
    /// complement; both are registered as children of `parent`.
    pub fn derive(&mut self, ds: &Dataset, parent: &str, constraint: Constraint) -> Result<(String, String)> {
        let parent_members = self.get(parent)?.members.clone();
        let included = constraint.select(ds, &parent_members)?;
        let excluded = parent_members.difference(&included);

        let inc_id = self.next_id();
        self.cohorts.push(Cohort {
            spec: CohortSpec {
                id: inc_id.clone(),
                parent: Some(parent.into()),
                constraint: Some(constraint.clone()),
                is_complement: false,
            },
            members: Arc::new(included),
        });
        let exc_id = self.next_id();
        self.cohorts.push(Cohort {
            spec: CohortSpec { id: exc_id.clone(), parent: Some(parent.into()), constraint: Some(constraint), is_complement: true },
            members: Arc::new(excluded),
        });
        Ok((inc_id, exc_id))
    }

    pub fn children(&self, id: &str) -> impl Iterator<Item = &Cohort> + '_ {
        let id = id.to_string();
        self.cohorts.iter().filter(move |c| c.spec.parent.as_deref() == Some(id.as_str()))
    }

    /// Constraints on the path from the root to `id`, root first.
    pub fn lineage_constraints(&self, id: &str) -> Result<Vec<Constraint>> {
        let mut out = Vec::new();
        let mut cur = Some(self.get(id)?);
        while let Some(c) = cur {
            if let Some(con) = &c.spec.constraint {
                out.push(con.clone());
            }
            cur = match &c.spec.parent {
                Some(p) => Some(self.get(p)?),
                None => None,
            };
        }
        out.reverse();
        Ok(out)
    }

    /// Rebuilds a tree from persisted specs by re-running every derivation.
    pub fn replay(ds: &Dataset, specs: &[CohortSpec], baseline: &str, focus: Option<&str>) -> Result<Self> {
        let mut tree = CohortTree::new(ds);
        let mut i = 0;
        if let Some(root) = specs.first() {
            if root.id != ROOT_COHORT || root.parent.is_some() {
                return Err(Error::Parse(format!("first cohort must be the root `{ROOT_COHORT}`, got `{}`", root.id)));
            }
            i = 1;
        }
        while i < specs.len() {
            let inc = &specs[i];
            let exc = specs.get(i + 1).ok_or_else(|| Error::Parse(format!("cohort `{}` has no excluded sibling", inc.id)))?;
            let (Some(parent), Some(constraint)) = (&inc.parent, &inc.constraint) else {
                return Err(Error::Parse(format!("cohort `{}` lacks parent or constraint", inc.id)));
            };
            if inc.is_complement || !exc.is_complement || exc.parent != inc.parent || exc.constraint != inc.constraint {
                return Err(Error::Parse(format!("cohorts `{}`/`{}` are not an included/excluded pair", inc.id, exc.id)));
            }
            let (a, b) = tree.derive(ds, parent, constraint.clone())?;
            if a != inc.id || b != exc.id {
                return Err(Error::Parse(format!("cohort ids out of sequence at `{}`", inc.id)));
            }
            i += 2;
        }
        tree.set_baseline(baseline)?;
        tree.set_focus(focus)?;
        Ok(tree)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::dataset::tests::{cardiac_forest, entity};
    use crate::cohort::dataset::AttributeValue;

    fn fixture() -> Dataset {
        let mut es = Vec::new();
        for i in 0..10 {
            let events: &[&str] = match i % 4 {
                0 => &["I50.32"],
                1 => &["I50"],
                2 => &["J"],
                _ => &[],
            };
            let mut e = entity(&format!("p{i}"), events, i % 3 == 0);
            e.attributes.insert("gender".into(), AttributeValue::Category(if i < 6 { "F" } else { "M" }.into()));
            e.attributes.insert("age".into(), AttributeValue::Number(20.0 + 5.0 * i as f64));
            es.push(e);
        }
        Dataset::new("fx", "x", cardiac_forest(), es).unwrap()
    }

    #[test]
    fn has_event_matches_brute_force() {
        let ds = fixture();
        let mut tree = CohortTree::new(&ds);
        let (inc, exc) = tree.derive(&ds, ROOT_COHORT, Constraint::has_event("I50")).unwrap();
        let expected: Vec<usize> = ds
            .entities()
            .iter()
            .enumerate()
            .filter(|(_, e)| crate::cohort::entity_has_dimension(e, "I50", ds.forest()).unwrap())
            .map(|(i, _)| i)
            .collect();
        assert_eq!(tree.get(&inc).unwrap().members.iter().collect::<Vec<_>>(), expected);
        assert_eq!(tree.get(&inc).unwrap().size() + tree.get(&exc).unwrap().size(), 10);
        assert!(tree.get(&exc).unwrap().spec.is_complement);
    }

    #[test]
    fn partition_and_subset() {
        let ds = fixture();
        let mut tree = CohortTree::new(&ds);
        let (f, m) = tree.derive(&ds, ROOT_COHORT, Constraint::category_equals("gender", "F")).unwrap();
        let (a, b) = tree
            .derive(&ds, &f, Constraint { dimension: "age".into(), predicate: Predicate::NumericInRange { lo: 20.0, hi: 35.0 } })
            .unwrap();
        assert_eq!(tree.get(&f).unwrap().size(), 6);
        assert_eq!(tree.get(&m).unwrap().size(), 4);
        assert_eq!(tree.get(&a).unwrap().size(), 4);
        let parent = tree.get(&f).unwrap().members.clone();
        let (x, y) = (tree.get(&a).unwrap().members.clone(), tree.get(&b).unwrap().members.clone());
        assert!(x.is_subset(&parent) && y.is_subset(&parent) && x.is_disjoint(&y));
        assert_eq!(x.union(&y), *parent);
        assert_eq!(tree.lineage_constraints(&a).unwrap().len(), 2);
    }

    #[test]
    fn matching_all_leaves_empty_complement() {
        let ds = fixture();
        let mut tree = CohortTree::new(&ds);
        let (inc, exc) = tree
            .derive(&ds, ROOT_COHORT, Constraint { dimension: "age".into(), predicate: Predicate::NumericInRange { lo: 0.0, hi: 1e9 } })
            .unwrap();
        assert_eq!(tree.get(&inc).unwrap().size(), 10);
        assert_eq!(tree.get(&exc).unwrap().size(), 0);
    }

    #[test]
    fn invalid_constraints() {
        let ds = fixture();
        let mut tree = CohortTree::new(&ds);
        assert!(matches!(tree.derive(&ds, ROOT_COHORT, Constraint::has_event("nope")), Err(Error::UnknownDimension(_))));
        assert!(tree.derive(&ds, ROOT_COHORT, Constraint::has_event("gender")).is_err());
        assert!(matches!(tree.derive(&ds, "c42", Constraint::has_event("J")), Err(Error::UnknownCohort(_))));
    }

    #[test]
    fn replay_reproduces_members() {
        let ds = fixture();
        let mut tree = CohortTree::new(&ds);
        let (f, _) = tree.derive(&ds, ROOT_COHORT, Constraint::category_equals("gender", "F")).unwrap();
        tree.derive(&ds, &f, Constraint::has_event("J")).unwrap();
        tree.set_focus(Some(&f)).unwrap();
        let again = CohortTree::replay(&ds, &tree.specs(), tree.baseline_id(), tree.focus_id()).unwrap();
        for (a, b) in tree.cohorts().iter().zip(again.cohorts()) {
            assert_eq!(a.members, b.members);
            assert_eq!(a.spec, b.spec);
        }
        assert_eq!(again.focus_id(), Some(f.as_str()));
    }

    #[test]
    fn constraint_json_shape() {
        let c = Constraint::category_equals("gender", "Female");
        let j = serde_json::to_value(&c).unwrap();
        assert_eq!(j, serde_json::json!({"dimension": "gender", "op": "category_equals", "value": "Female"}));
        let back: Constraint = serde_json::from_value(j).unwrap();
        assert_eq!(back, c);
    }
}
