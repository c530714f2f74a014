use serde::{Deserialize, Serialize};

use super::clamp_point;
use crate::cohort::DimensionStats;
use crate::error::{Error, Result};

pub const DEFAULT_VECTOR_THRESHOLD: f64 = 0.02;

/// Movement of one dimension's focus glyph caused by reweighting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftVector {
    pub code: String,
    pub base: [f64; 2],
    pub tip: [f64; 2],
    pub magnitude: f64,
    /// Sign of `dist_weighted - dist_unweighted`; negative means reduced distance.
    pub delta_distance_sign: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorModel {
    pub threshold: f64,
    pub vectors: Vec<ShiftVector>,
}

pub fn vector_field(stats: &DimensionStats, min_magnitude: f64) -> Result<VectorModel> {
    if !(min_magnitude.is_finite() && min_magnitude >= 0.0) {
        return Err(Error::InvalidConfig(format!("vector threshold {min_magnitude} must be finite and >= 0")));
    }
    let vectors = stats
        .rows
        .iter()
        .filter_map(|s| {
            let dist = s.distance_unweighted?;
            let corr = s.corr_focus.unwrap_or(0.0);
            let base = clamp_point(corr, dist);
            let tip = clamp_point(s.corr_focus_weighted.unwrap_or(corr), s.distance_weighted.unwrap_or(dist));
            let magnitude = (tip[0] - base[0]).hypot(tip[1] - base[1]);
            let dd = tip[1] - base[1];
            let sign = if dd > 0.0 {
                1
            } else if dd < 0.0 {
                -1
            } else {
                0
            };
            (magnitude >= min_magnitude).then(|| ShiftVector { code: s.code.clone(), base, tip, magnitude, delta_distance_sign: sign })
        })
        .collect();
    Ok(VectorModel { threshold: min_magnitude, vectors })
}
