use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::metric::{LayoutConfig, Metric, MetricField};
use super::saliency::collapsed_mask;
use crate::cohort::{DimId, DimensionForest};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Leaf,
    Dummy,
    CollapsedGroup,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    Node,
    Group,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColorScale {
    Sequential,
    Diverging,
}

/// One cell of a layout row. `span` is the number of rows the merged
/// rectangle covers when this cell is its top, 0 when the cell continues the
/// rectangle of the row above.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutCell {
    pub code: String,
    pub depth: usize,
    pub span: usize,
    pub kind: CellKind,
    pub value: f64,
    pub hatched: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutRow {
    pub kind: RowKind,
    /// Largest `|sort metric|` on the row's leaf-to-root path(s).
    pub score: f64,
    pub cells: Vec<LayoutCell>,
    /// Leaves aggregated into a collapsed-group row.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelAnchor {
    pub code: String,
    pub row: usize,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub code: String,
    pub row: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutModel {
    pub rows: Vec<LayoutRow>,
    pub labels: Vec<LabelAnchor>,
    pub table_rows: Vec<TableRow>,
    pub salient: Vec<String>,
    pub sort: Metric,
    pub color: Metric,
    pub color_scale: ColorScale,
    /// Largest `|color metric|` over dimensions that are neither constraints
    /// nor below one.
    pub color_max: f64,
}

enum Unit {
    Leaf(DimId),
    Group { key: DimId, leaves: Vec<DimId> },
}

/// Lays out the forest as an icicle table.
///
/// Leaves (or runs of non-salient leaves sharing their deepest salient
/// ancestor) become rows sorted by path score; a dummy row is inserted above
/// the first row of every non-leaf salient node; equal adjacent cells merge.
pub fn build_layout(
    forest: &DimensionForest,
    sort_field: &MetricField,
    color_field: &MetricField,
    salient: &BTreeSet<DimId>,
    cfg: &LayoutConfig,
    constraints: &BTreeSet<DimId>,
) -> Result<LayoutModel> {
    if sort_field.len() != forest.len() || color_field.len() != forest.len() {
        return Err(Error::InvalidInput("metric field does not cover the forest".into()));
    }
    let collapsed = collapsed_mask(forest, cfg)?;
    let is_salient = |d: DimId| salient.contains(&d) && !collapsed[d.index()];

    // Path score: max |sort value| from the root down to each node.
    let mut path_max = vec![0.0f64; forest.len()];
    let mut stack: Vec<DimId> = forest.roots().to_vec();
    while let Some(d) = stack.pop() {
        let own = sort_field.value(d).abs();
        path_max[d.index()] = forest.parent(d).map_or(own, |p| path_max[p.index()].max(own));
        stack.extend_from_slice(forest.children(d));
    }

    let mut leaves: Vec<DimId> = forest.leaves().collect();
    leaves.sort_by(|a, b| path_max[b.index()].total_cmp(&path_max[a.index()]).then_with(|| forest.code(*a).cmp(forest.code(*b))));

    let mut units: Vec<Unit> = Vec::new();
    for leaf in leaves {
        if is_salient(leaf) {
            units.push(Unit::Leaf(leaf));
            continue;
        }
        let key =
            forest.ancestors(leaf).find(|a| is_salient(*a)).unwrap_or_else(|| *forest.path(leaf).first().expect("path contains the leaf"));
        match units.last_mut() {
            Some(Unit::Group { key: k, leaves }) if *k == key => leaves.push(leaf),
            _ => units.push(Unit::Group { key, leaves: vec![leaf] }),
        }
    }

    let node_cell = |d: DimId| LayoutCell {
        code: forest.code(d).to_string(),
        depth: forest.depth(d),
        span: 1,
        kind: CellKind::Node,
        value: color_field.value(d),
        hatched: false,
    };

    let mut base: Vec<LayoutRow> = Vec::with_capacity(units.len());
    for unit in &units {
        match unit {
            Unit::Leaf(leaf) => base.push(LayoutRow {
                kind: RowKind::Leaf,
                score: path_max[leaf.index()],
                cells: forest.path(*leaf).into_iter().map(node_cell).collect(),
                members: Vec::new(),
            }),
            Unit::Group { leaves, .. } => {
                let paths: Vec<Vec<DimId>> = leaves.iter().map(|l| forest.path(*l)).collect();
                let mut chain_len = paths[0].len() - 1;
                for p in &paths[1..] {
                    chain_len = chain_len.min(p.len() - 1);
                    chain_len = paths[0].iter().zip(p).take(chain_len).take_while(|(a, b)| a == b).count();
                }
                let mut value = 0.0f64;
                for p in &paths {
                    for &d in &p[chain_len..] {
                        let v = color_field.value(d);
                        if v.abs() > value.abs() {
                            value = v;
                        }
                    }
                }
                let mut cells: Vec<LayoutCell> = paths[0][..chain_len].iter().map(|d| node_cell(*d)).collect();
                cells.push(LayoutCell {
                    code: forest.code(leaves[0]).to_string(),
                    depth: chain_len,
                    span: 1,
                    kind: CellKind::Group,
                    value,
                    hatched: false,
                });
                base.push(LayoutRow {
                    kind: RowKind::CollapsedGroup,
                    score: path_max[leaves[0].index()],
                    cells,
                    members: leaves.iter().map(|l| forest.code(*l).to_string()).collect(),
                });
            }
        }
    }

    // Dummy rows, one per non-leaf salient node, above the node's first row.
    let mut first_row: HashMap<&str, usize> = HashMap::new();
    for (i, row) in base.iter().enumerate() {
        for c in row.cells.iter().filter(|c| c.kind == CellKind::Node) {
            first_row.entry(c.code.as_str()).or_insert(i);
        }
    }
    let mut dummies: Vec<(usize, usize, DimId)> = salient
        .iter()
        .copied()
        .filter(|d| is_salient(*d) && !forest.is_leaf(*d))
        .filter_map(|d| first_row.get(forest.code(d)).map(|&r| (r, forest.depth(d), d)))
        .collect();
    dummies.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then_with(|| forest.code(a.2).cmp(forest.code(b.2))));

    let mut rows: Vec<LayoutRow> = Vec::with_capacity(base.len() + dummies.len());
    let mut next = dummies.iter().peekable();
    for (i, row) in base.into_iter().enumerate() {
        while let Some(&&(at, _, d)) = next.peek() {
            if at != i {
                break;
            }
            rows.push(LayoutRow {
                kind: RowKind::Dummy,
                score: row.score,
                cells: forest.path(d).into_iter().map(node_cell).collect(),
                members: Vec::new(),
            });
            next.next();
        }
        rows.push(row);
    }

    merge_cells(&mut rows);

    let mut labels = Vec::new();
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let salient_codes: BTreeSet<&str> = salient.iter().filter(|d| is_salient(**d)).map(|d| forest.code(*d)).collect();
    for (i, row) in rows.iter().enumerate() {
        for c in row.cells.iter().filter(|c| c.kind == CellKind::Node) {
            if salient_codes.contains(c.code.as_str()) && seen.insert(c.code.as_str()) {
                labels.push(LabelAnchor { code: c.code.clone(), row: i, depth: c.depth });
            }
        }
    }
    let table_rows = labels.iter().map(|l| TableRow { code: l.code.clone(), row: l.row }).collect();

    let mut excluded = vec![false; forest.len()];
    for &c in constraints {
        for d in forest.subtree(c) {
            excluded[d.index()] = true;
        }
    }
    let eligible = forest.ids().filter(|d| !excluded[d.index()]).map(|d| color_field.value(d).abs());
    let color_max = eligible
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
        .unwrap_or_else(|| forest.ids().map(|d| color_field.value(d).abs()).fold(0.0, f64::max));
    for row in &mut rows {
        for c in &mut row.cells {
            c.hatched = c.value.abs() > color_max;
        }
    }

    Ok(LayoutModel {
        rows,
        labels,
        table_rows,
        salient: salient_codes.iter().map(|s| s.to_string()).collect(),
        sort: cfg.sort,
        color: cfg.color,
        color_scale: if cfg.color.is_signed() { ColorScale::Diverging } else { ColorScale::Sequential },
        color_max,
    })
}

fn merge_cells(rows: &mut [LayoutRow]) {
    let max_depth = rows.iter().map(|r| r.cells.len()).max().unwrap_or(0);
    for depth in 0..max_depth {
        let mut head: Option<usize> = None;
        for i in 0..rows.len() {
            let same = match (head, rows[i].cells.get(depth)) {
                (Some(h), Some(c)) => {
                    let prev = &rows[i - 1].cells.get(depth);
                    c.kind == CellKind::Node
                        && prev.is_some_and(|p| p.kind == CellKind::Node && p.code == c.code)
                        && rows[h].cells[depth].code == c.code
                }
                _ => false,
            };
            if same {
                let h = head.expect("checked above");
                rows[h].cells[depth].span += 1;
                rows[i].cells[depth].span = 0;
            } else {
                head = rows[i].cells.get(depth).map(|_| i);
            }
        }
    }
}

/// Layout restricted to a reweight dimension, its ancestors and its
/// descendants, with the ancestors, the dimension and two levels of children
/// forced salient.
pub fn replace_reweight_view(
    forest: &DimensionForest,
    sort_field: &MetricField,
    color_field: &MetricField,
    cfg: &LayoutConfig,
    reweight_dims: &[String],
    dim: &str,
    constraints: &BTreeSet<DimId>,
) -> Result<LayoutModel> {
    if !reweight_dims.iter().any(|d| d == dim) {
        return Err(Error::InvalidConfig(format!("`{dim}` is not a current reweight dimension")));
    }
    let target = forest.require(dim)?;
    let mut keep: BTreeSet<DimId> = forest.ancestors(target).collect();
    keep.extend(forest.subtree(target));

    let records = forest.records().into_iter().enumerate().filter(|(i, _)| keep.contains(&DimId(*i as u32))).map(|(_, r)| r).collect();
    let sub = DimensionForest::from_records(records)?;
    let remap = |d: DimId| sub.id(forest.code(d)).expect("kept node exists in the sub-forest");
    let back = |d: DimId| forest.id(sub.code(d)).expect("sub-forest node exists in the forest");

    let sub_sort = MetricField::from_values(&sub, sub.ids().map(|d| Some(sort_field.value(back(d)))).collect())?;
    let sub_color = MetricField::from_values(&sub, sub.ids().map(|d| Some(color_field.value(back(d)))).collect())?;

    let mut salient: BTreeSet<DimId> = forest.ancestors(target).map(remap).collect();
    let t = remap(target);
    salient.insert(t);
    for &c in sub.children(t) {
        salient.insert(c);
        salient.extend(sub.children(c).iter().copied());
    }
    let sub_constraints = constraints.iter().filter(|c| keep.contains(c)).map(|c| remap(*c)).collect();
    let view_cfg = LayoutConfig { pins: BTreeSet::new(), collapses: BTreeSet::new(), ..cfg.clone() };
    build_layout(&sub, &sub_sort, &sub_color, &salient, &view_cfg, &sub_constraints)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::{DimensionKind, DimensionRecord};
    use crate::layout::compute_saliency;

    fn rec(code: &str, parent: Option<&str>) -> DimensionRecord {
        DimensionRecord { code: code.into(), label: String::new(), parent: parent.map(Into::into), kind: DimensionKind::Event }
    }

    /// R -> {A, B -> {B1, B2}} with A = 0.5, B1 = 0.3, B2 = 0.1.
    fn small() -> (DimensionForest, MetricField) {
        let f = DimensionForest::from_records(vec![
            rec("R", None),
            rec("A", Some("R")),
            rec("B", Some("R")),
            rec("B1", Some("B")),
            rec("B2", Some("B")),
        ])
        .unwrap();
        let v = |c: &str| match c {
            "A" => 0.5,
            "B1" => 0.3,
            "B2" => 0.1,
            _ => 0.0,
        };
        let field = MetricField::from_values(&f, f.ids().map(|d| Some(v(f.code(d)))).collect()).unwrap();
        (f, field)
    }

    fn cells(row: &LayoutRow) -> Vec<&str> {
        row.cells.iter().map(|c| c.code.as_str()).collect()
    }

    fn layout(f: &DimensionForest, field: &MetricField, cfg: &LayoutConfig) -> LayoutModel {
        let salient = compute_saliency(f, field, cfg).unwrap();
        build_layout(f, field, field, &salient, cfg, &BTreeSet::new()).unwrap()
    }

    #[test]
    fn split_sort_and_group() {
        let (f, field) = small();
        let cfg = LayoutConfig { saliency_threshold: 0.25, ..Default::default() };
        let m = layout(&f, &field, &cfg);
        assert_eq!(m.salient, ["A", "B1"]);
        assert_eq!(m.rows.len(), 3);
        assert_eq!(cells(&m.rows[0]), ["R", "A"]);
        assert_eq!(cells(&m.rows[1]), ["R", "B", "B1"]);
        assert_eq!(cells(&m.rows[2]), ["R", "B", "B2"]);
        assert_eq!(m.rows[2].kind, RowKind::CollapsedGroup);
        assert_eq!(m.rows[2].cells[2].kind, CellKind::Group);
        assert_eq!(m.rows[0].cells[0].span, 3);
        assert_eq!(m.rows[1].cells[1].span, 2);
        assert!(m.rows.iter().all(|r| r.kind != RowKind::Dummy));
        assert_eq!(m.labels.len(), 2);
    }

    #[test]
    fn pinned_inner_node_gets_dummy_row() {
        let (f, field) = small();
        let mut cfg = LayoutConfig { saliency_threshold: 0.25, ..Default::default() };
        cfg.pins.insert("B".into());
        let m = layout(&f, &field, &cfg);
        let kinds: Vec<RowKind> = m.rows.iter().map(|r| r.kind).collect();
        assert_eq!(kinds, [RowKind::Leaf, RowKind::Dummy, RowKind::Leaf, RowKind::CollapsedGroup]);
        assert_eq!(cells(&m.rows[1]), ["R", "B"]);
        assert_eq!(m.rows[1].cells[1].span, 3);
        assert_eq!(m.rows[0].cells[0].span, 4);
        let b = m.labels.iter().find(|l| l.code == "B").unwrap();
        assert_eq!((b.row, b.depth), (1, 1));
        assert_eq!(m.rows[1].cells.len(), 2, "label slot right of B is free");
    }

    #[test]
    fn single_chain() {
        let f = DimensionForest::from_records(vec![rec("R", None), rec("X", Some("R")), rec("Y", Some("X"))]).unwrap();
        let field = MetricField::from_values(&f, vec![Some(0.0), Some(0.0), Some(0.0)]).unwrap();
        let m = layout(&f, &field, &LayoutConfig::default());
        assert_eq!(m.rows.len(), 1);
        assert!(m.rows[0].cells.iter().all(|c| c.span == 1));
    }

    #[test]
    fn constraints_do_not_set_color_max() {
        let (f, field) = small();
        let cfg = LayoutConfig { saliency_threshold: 0.25, ..Default::default() };
        let salient = compute_saliency(&f, &field, &cfg).unwrap();
        let constraints: BTreeSet<DimId> = [f.id("A").unwrap()].into();
        let m = build_layout(&f, &field, &field, &salient, &cfg, &constraints).unwrap();
        assert!((m.color_max - 0.3).abs() < 1e-15);
        let a = &m.rows[0].cells[1];
        assert_eq!(a.code, "A");
        assert!(a.hatched);
    }

    #[test]
    fn correlation_coloring_is_diverging() {
        let (f, field) = small();
        let cfg = LayoutConfig { color: Metric::FocusCorrelation, ..Default::default() };
        assert_eq!(layout(&f, &field, &cfg).color_scale, ColorScale::Diverging);
        assert_eq!(layout(&f, &field, &LayoutConfig::default()).color_scale, ColorScale::Sequential);
    }

    fn deep() -> DimensionForest {
        // R -> P -> Q -> T -> {T1 -> {T11, T12}, T2}; R -> S
        DimensionForest::from_records(vec![
            rec("R", None),
            rec("P", Some("R")),
            rec("Q", Some("P")),
            rec("T", Some("Q")),
            rec("T1", Some("T")),
            rec("T11", Some("T1")),
            rec("T12", Some("T1")),
            rec("T2", Some("T")),
            rec("S", Some("R")),
            rec("U", None),
        ])
        .unwrap()
    }

    #[test]
    fn replace_view_counts() {
        let f = deep();
        let field = MetricField::from_values(&f, vec![Some(0.0); f.len()]).unwrap();
        let cfg = LayoutConfig::default();
        let dims = vec!["T".to_string()];
        let m = replace_reweight_view(&f, &field, &field, &cfg, &dims, "T", &BTreeSet::new()).unwrap();
        // 3 ancestors + T + 2 children + 2 grandchildren
        assert_eq!(m.salient.len(), 3 + 1 + 2 + 2);
        assert!(!m.rows.iter().flat_map(|r| &r.cells).any(|c| c.code == "S" || c.code == "U"));

        let dims = vec!["T11".to_string()];
        let leaf = replace_reweight_view(&f, &field, &field, &cfg, &dims, "T11", &BTreeSet::new()).unwrap();
        assert_eq!(leaf.salient, ["P", "Q", "R", "T", "T1", "T11"]);

        let dims = vec!["R".to_string()];
        let root = replace_reweight_view(&f, &field, &field, &cfg, &dims, "R", &BTreeSet::new()).unwrap();
        assert_eq!(root.salient, ["P", "Q", "R", "S"]);

        assert!(replace_reweight_view(&f, &field, &field, &cfg, &dims, "T", &BTreeSet::new()).is_err());
    }
}
