use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{clamp_point, CORR_RANGE, DIST_RANGE};
use crate::cohort::DimensionStats;
use crate::error::{Error, Result};

pub const SCATTER_GRID: usize = 32;
pub const DEFAULT_SCATTER_CAP: usize = 500;

/// Glyphs of one dimension as `[correlation, distance]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterDimension {
    pub code: String,
    pub baseline: [f64; 2],
    pub focus: [f64; 2],
    pub weighted_focus: [f64; 2],
    pub priority: f64,
    pub bin: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterModel {
    pub cap: usize,
    pub grid: usize,
    /// Dimensions with a distance before filtering.
    pub candidates: usize,
    pub dimensions: Vec<ScatterDimension>,
}

fn bin_of(p: [f64; 2]) -> usize {
    let cell = |v: f64, (lo, hi): (f64, f64)| (((v - lo) / (hi - lo) * SCATTER_GRID as f64) as usize).min(SCATTER_GRID - 1);
    cell(p[1], DIST_RANGE) * SCATTER_GRID + cell(p[0], CORR_RANGE)
}

/// Keeps at most `cap` dimensions, thinning the densest grid cells first.
///
/// Within a cell the lowest priority (`dist + |corr|` of the focus glyph) goes
/// first, ties dropping the later code. Among equally dense cells the one
/// holding the smallest surviving priority is thinned first, so the global
/// maximum is the last point to go.
pub fn scatter_points(stats: &DimensionStats, cap: usize) -> Result<ScatterModel> {
    if cap == 0 {
        return Err(Error::InvalidConfig("scatter cap must be at least 1".into()));
    }
    let mut dims: Vec<ScatterDimension> = stats
        .rows
        .iter()
        .filter_map(|s| {
            let dist = s.distance_unweighted?;
            let corr = s.corr_focus.unwrap_or(0.0);
            let focus = clamp_point(corr, dist);
            Some(ScatterDimension {
                code: s.code.clone(),
                baseline: clamp_point(s.corr_baseline.unwrap_or(0.0), 0.0),
                focus,
                weighted_focus: clamp_point(s.corr_focus_weighted.unwrap_or(corr), s.distance_weighted.unwrap_or(dist)),
                priority: focus[1] + focus[0].abs(),
                bin: bin_of(focus),
            })
        })
        .collect();
    let candidates = dims.len();

    let by_rank =
        |a: &ScatterDimension, b: &ScatterDimension| -> Ordering { b.priority.total_cmp(&a.priority).then_with(|| a.code.cmp(&b.code)) };
    let mut bins: Vec<Vec<usize>> = vec![Vec::new(); SCATTER_GRID * SCATTER_GRID];
    for (i, d) in dims.iter().enumerate() {
        bins[d.bin].push(i);
    }
    for b in &mut bins {
        b.sort_by(|&x, &y| by_rank(&dims[x], &dims[y]));
    }

    let mut kept = candidates;
    while kept > cap {
        let mut victim: Option<usize> = None;
        for (bi, b) in bins.iter().enumerate() {
            let Some(&last) = b.last() else { continue };
            let better = match victim {
                None => true,
                Some(v) => {
                    let cur = &bins[v];
                    b.len() > cur.len()
                        || (b.len() == cur.len() && by_rank(&dims[last], &dims[*cur.last().expect("non-empty")]) == Ordering::Greater)
                }
            };
            if better {
                victim = Some(bi);
            }
        }
        bins[victim.expect("kept > cap >= 1 means some bin is non-empty")].pop();
        kept -= 1;
    }

    let mut keep = vec![false; dims.len()];
    for &i in bins.iter().flatten() {
        keep[i] = true;
    }
    let mut i = 0;
    dims.retain(|_| {
        i += 1;
        keep[i - 1]
    });
    Ok(ScatterModel { cap, grid: SCATTER_GRID, candidates, dimensions: dims })
}
