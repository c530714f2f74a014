//! Saliency and the icicle-table layout: a split, sorted icicle plot with
//! dummy rows that give every salient node room for a label and a table row.

mod icicle;
mod metric;
mod saliency;

pub use icicle::{
    build_layout, replace_reweight_view, CellKind, ColorScale, LabelAnchor, LayoutCell, LayoutModel, LayoutRow, RowKind, TableRow,
};
pub use metric::{LayoutConfig, Metric, MetricField};
pub use saliency::{collapsed_mask, compute_saliency};
