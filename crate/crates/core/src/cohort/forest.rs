use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a dimension inside its [`DimensionForest`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DimId(pub u32);

impl DimId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimensionKind {
    #[serde(alias = "event-type", alias = "event_type")]
    Event,
    #[serde(alias = "categorical-attribute", alias = "categorical_attribute")]
    Categorical,
    #[serde(alias = "numeric-attribute", alias = "numeric_attribute")]
    Numeric,
}

impl DimensionKind {
    pub fn is_attribute(self) -> bool {
        !matches!(self, DimensionKind::Event)
    }
}

/// One record of the flat parent-pointer hierarchy file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionRecord {
    pub code: String,
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub parent: Option<String>,
    pub kind: DimensionKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionNode {
    pub code: String,
    pub label: String,
    pub parent: Option<String>,
    pub kind: DimensionKind,
}

/// Multi-rooted hierarchy of dimensions: event-type trees plus attribute roots.
#[derive(Debug, Clone)]
pub struct DimensionForest {
    nodes: Vec<DimensionNode>,
    by_code: HashMap<String, DimId>,
    parent: Vec<Option<DimId>>,
    children: Vec<Vec<DimId>>,
    depth: Vec<u32>,
    roots: Vec<DimId>,
}

impl DimensionForest {
    pub fn from_records(records: Vec<DimensionRecord>) -> Result<Self> {
        let mut by_code = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if r.code.is_empty() {
                return Err(Error::InvalidHierarchy(format!("record {i} has an empty code")));
            }
            if by_code.insert(r.code.clone(), DimId(i as u32)).is_some() {
                return Err(Error::InvalidHierarchy(format!("duplicate code `{}`", r.code)));
            }
        }

        let mut parent = Vec::with_capacity(records.len());
        for r in &records {
            let p = match &r.parent {
                None => None,
                Some(p) if p == &r.code => return Err(Error::HierarchyCycle(r.code.clone())),
                Some(p) => {
                    let pid = *by_code.get(p).ok_or_else(|| Error::InvalidHierarchy(format!("`{}` has unknown parent `{p}`", r.code)))?;
                    Some(pid)
                }
            };
            if p.is_some() && r.kind.is_attribute() {
                return Err(Error::InvalidHierarchy(format!("attribute dimension `{}` must be a root", r.code)));
            }
            if let Some(pid) = p {
                if records[pid.index()].kind.is_attribute() {
                    return Err(Error::InvalidHierarchy(format!(
                        "`{}` cannot be a child of attribute `{}`",
                        r.code,
                        records[pid.index()].code
                    )));
                }
            }
            parent.push(p);
        }

        // Cycle check: 0 = unvisited, 1 = on the current walk, 2 = known to reach a root.
        let mut state = vec![0u8; records.len()];
        for start in 0..records.len() {
            let mut walk = Vec::new();
            let mut cur = Some(start);
            while let Some(i) = cur {
                match state[i] {
                    2 => break,
                    1 => return Err(Error::HierarchyCycle(records[i].code.clone())),
                    _ => {
                        state[i] = 1;
                        walk.push(i);
                        cur = parent[i].map(DimId::index);
                    }
                }
            }
            for i in walk {
                state[i] = 2;
            }
        }

        let mut children = vec![Vec::new(); records.len()];
        let mut roots = Vec::new();
        for (i, p) in parent.iter().enumerate() {
            match p {
                Some(p) => children[p.index()].push(DimId(i as u32)),
                None => roots.push(DimId(i as u32)),
            }
        }
        for c in &mut children {
            c.sort_by(|a, b| records[a.index()].code.cmp(&records[b.index()].code));
        }
        roots.sort_by(|a, b| records[a.index()].code.cmp(&records[b.index()].code));

        let mut depth = vec![0u32; records.len()];
        let mut stack: Vec<DimId> = roots.clone();
        while let Some(id) = stack.pop() {
            for &c in &children[id.index()] {
                depth[c.index()] = depth[id.index()] + 1;
                stack.push(c);
            }
        }

        let nodes = records.into_iter().map(|r| DimensionNode { code: r.code, label: r.label, parent: r.parent, kind: r.kind }).collect();
        Ok(DimensionForest { nodes, by_code, parent, children, depth, roots })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = DimId> + '_ {
        (0..self.nodes.len() as u32).map(DimId)
    }

    pub fn id(&self, code: &str) -> Option<DimId> {
        self.by_code.get(code).copied()
    }

    pub fn require(&self, code: &str) -> Result<DimId> {
        self.id(code).ok_or_else(|| Error::UnknownDimension(code.to_string()))
    }

    pub fn node(&self, id: DimId) -> &DimensionNode {
        &self.nodes[id.index()]
    }

    pub fn nodes(&self) -> &[DimensionNode] {
        &self.nodes
    }

    pub fn code(&self, id: DimId) -> &str {
        &self.nodes[id.index()].code
    }

    pub fn kind(&self, id: DimId) -> DimensionKind {
        self.nodes[id.index()].kind
    }

    pub fn parent(&self, id: DimId) -> Option<DimId> {
        self.parent[id.index()]
    }

    /// Children sorted by code.
    pub fn children(&self, id: DimId) -> &[DimId] {
        &self.children[id.index()]
    }

    pub fn roots(&self) -> &[DimId] {
        &self.roots
    }

    pub fn depth(&self, id: DimId) -> usize {
        self.depth[id.index()] as usize
    }

    pub fn is_leaf(&self, id: DimId) -> bool {
        self.children[id.index()].is_empty()
    }

    /// Proper ancestors, nearest first.
    pub fn ancestors(&self, id: DimId) -> impl Iterator<Item = DimId> + '_ {
        std::iter::successors(self.parent(id), move |p| self.parent(*p))
    }

    /// Root-first path ending at `id`.
    pub fn path(&self, id: DimId) -> Vec<DimId> {
        let mut p: Vec<DimId> = self.ancestors(id).collect();
        p.reverse();
        p.push(id);
        p
    }

    pub fn is_ancestor(&self, ancestor: DimId, of: DimId) -> bool {
        self.ancestors(of).any(|a| a == ancestor)
    }

    /// `id` and all of its descendants, pre-order.
    pub fn subtree(&self, id: DimId) -> Vec<DimId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.children(n).iter().rev());
        }
        out
    }

    pub fn leaves(&self) -> impl Iterator<Item = DimId> + '_ {
        self.ids().filter(|id| self.is_leaf(*id))
    }

    pub fn records(&self) -> Vec<DimensionRecord> {
        self.nodes
            .iter()
            .map(|n| DimensionRecord { code: n.code.clone(), label: n.label.clone(), parent: n.parent.clone(), kind: n.kind })
            .collect()
    }
}
