//! Data models behind the distance/correlation plots, the per-dimension
//! distribution plots and the reweight set view.

mod contour;
mod distribution;
mod scatter;
mod setvis;
mod vector;

pub use contour::{contour_polylines, CohortContours, ContourLevel, ContourModel, CONTOUR_GRID, CONTOUR_LEVELS};
pub use distribution::{distribution_plot, DistributionPlot, HistogramBin};
pub use scatter::{scatter_points, ScatterDimension, ScatterModel, DEFAULT_SCATTER_CAP, SCATTER_GRID};
pub use setvis::{set_vis, CohortSubgroups, DangerFlag, SetVisCohort, SetVisColumn, SetVisModel, SetVisRow};
pub use vector::{vector_field, ShiftVector, VectorModel, DEFAULT_VECTOR_THRESHOLD};

/// Correlation axis of the plot plane.
pub const CORR_RANGE: (f64, f64) = (-1.0, 1.0);
/// Distance axis of the plot plane.
pub const DIST_RANGE: (f64, f64) = (0.0, 1.0);

pub(crate) fn clamp_point(x: f64, y: f64) -> [f64; 2] {
    [x.clamp(CORR_RANGE.0, CORR_RANGE.1), y.clamp(DIST_RANGE.0, DIST_RANGE.1)]
}
