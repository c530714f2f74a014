use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::entity_set::EntitySet;
use super::forest::{DimId, DimensionForest, DimensionKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttributeValue {
    Number(f64),
    Category(String),
}

/// One individual: attributes, the set of event codes it carries, and its outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityRecord {
    pub entity_id: String,
    #[serde(default)]
    pub attributes: BTreeMap<String, AttributeValue>,
    #[serde(default)]
    pub events: BTreeSet<String>,
    pub outcome: bool,
}

/// True iff the entity carries `code` itself or any code below it in the
/// hierarchy. For attribute dimensions: true iff the attribute has a value.
pub fn entity_has_dimension(entity: &EntityRecord, code: &str, forest: &DimensionForest) -> Result<bool> {
    let id = forest.require(code)?;
    if forest.kind(id).is_attribute() {
        return Ok(entity.attributes.contains_key(code));
    }
    for event in &entity.events {
        let Some(e) = forest.id(event) else { continue };
        if e == id || forest.is_ancestor(id, e) {
            return Ok(true);
        }
    }
    Ok(false)
}

#[derive(Debug, Clone)]
pub enum AttributeColumn {
    Categorical { categories: Vec<String>, values: Vec<Option<u32>> },
    Numeric { values: Vec<Option<f64>> },
}

/// Immutable, indexed dataset: the forest, the entities, and per-dimension
/// presence bitsets with the hierarchy closure already applied.
#[derive(Debug)]
pub struct Dataset {
    id: String,
    checksum: String,
    forest: DimensionForest,
    entities: Vec<EntityRecord>,
    index: HashMap<String, usize>,
    presence: Vec<EntitySet>,
    outcome: EntitySet,
    columns: Vec<Option<AttributeColumn>>,
}

const MAX_REPORTED_UNKNOWN: usize = 10;

impl Dataset {
    pub fn new(id: impl Into<String>, checksum: impl Into<String>, forest: DimensionForest, entities: Vec<EntityRecord>) -> Result<Self> {
        let n = entities.len();
        let mut index = HashMap::with_capacity(n);
        for (i, e) in entities.iter().enumerate() {
            if index.insert(e.entity_id.clone(), i).is_some() {
                return Err(Error::DuplicateEntity(e.entity_id.clone()));
            }
        }

        let mut unknown = Vec::new();
        let mut presence = vec![EntitySet::empty(n); forest.len()];
        let mut outcome = EntitySet::empty(n);
        for (i, e) in entities.iter().enumerate() {
            if e.outcome {
                outcome.insert(i);
            }
            for code in &e.events {
                match forest.id(code).filter(|d| forest.kind(*d) == DimensionKind::Event) {
                    Some(d) => {
                        presence[d.index()].insert(i);
                        for a in forest.ancestors(d) {
                            presence[a.index()].insert(i);
                        }
                    }
                    None => {
                        if unknown.len() < MAX_REPORTED_UNKNOWN && !unknown.contains(code) {
                            unknown.push(code.clone());
                        }
                    }
                }
            }
        }
        if !unknown.is_empty() {
            return Err(Error::UnknownEventCodes(unknown));
        }

        let mut columns: Vec<Option<AttributeColumn>> = vec![None; forest.len()];
        for d in forest.ids() {
            let code = forest.code(d);
            match forest.kind(d) {
                DimensionKind::Event => {}
                DimensionKind::Categorical => {
                    let mut dict: BTreeMap<String, u32> = BTreeMap::new();
                    for e in &entities {
                        if let Some(v) = e.attributes.get(code) {
                            let s = categorical_value(v, code, &e.entity_id)?;
                            let next = dict.len() as u32;
                            dict.entry(s).or_insert(next);
                        }
                    }
                    // Re-number in sorted order so category ids follow label order.
                    let categories: Vec<String> = dict.keys().cloned().collect();
                    let rank: HashMap<&str, u32> = categories.iter().enumerate().map(|(i, c)| (c.as_str(), i as u32)).collect();
                    let mut values = Vec::with_capacity(n);
                    for (i, e) in entities.iter().enumerate() {
                        let v = match e.attributes.get(code) {
                            Some(v) => {
                                presence[d.index()].insert(i);
                                Some(rank[categorical_value(v, code, &e.entity_id)?.as_str()])
                            }
                            None => None,
                        };
                        values.push(v);
                    }
                    columns[d.index()] = Some(AttributeColumn::Categorical { categories, values });
                }
                DimensionKind::Numeric => {
                    let mut values = Vec::with_capacity(n);
                    for (i, e) in entities.iter().enumerate() {
                        let v = match e.attributes.get(code) {
                            Some(AttributeValue::Number(x)) if x.is_finite() => {
                                presence[d.index()].insert(i);
                                Some(*x)
                            }
                            Some(other) => {
                                return Err(Error::Parse(format!(
                                    "entity `{}`: numeric attribute `{code}` has value {other:?}",
                                    e.entity_id
                                )))
                            }
                            None => None,
                        };
                        values.push(v);
                    }
                    columns[d.index()] = Some(AttributeColumn::Numeric { values });
                }
            }
        }

        Ok(Dataset { id: id.into(), checksum: checksum.into(), forest, entities, index, presence, outcome, columns })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn checksum(&self) -> &str {
        &self.checksum
    }

    pub fn forest(&self) -> &DimensionForest {
        &self.forest
    }

    pub fn entities(&self) -> &[EntityRecord] {
        &self.entities
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn entity_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Entities that have dimension `d` (closure over descendants applied).
    pub fn presence(&self, d: DimId) -> &EntitySet {
        &self.presence[d.index()]
    }

    pub fn has(&self, entity: usize, d: DimId) -> bool {
        self.presence[d.index()].contains(entity)
    }

    pub fn outcome(&self) -> &EntitySet {
        &self.outcome
    }

    pub fn column(&self, d: DimId) -> Option<&AttributeColumn> {
        self.columns[d.index()].as_ref()
    }

    pub fn all(&self) -> EntitySet {
        EntitySet::full(self.len())
    }
}

fn categorical_value(v: &AttributeValue, code: &str, entity: &str) -> Result<String> {
    match v {
        AttributeValue::Category(s) => Ok(s.clone()),
        AttributeValue::Number(x) => Err(Error::Parse(format!("entity `{entity}`: categorical attribute `{code}` has numeric value {x}"))),
    }
}
