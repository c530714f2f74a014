use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{clamp_point, CORR_RANGE, DIST_RANGE};

pub const CONTOUR_GRID: usize = 64;
/// Density levels as fractions of each cohort's grid maximum.
pub const CONTOUR_LEVELS: [f64; 3] = [0.25, 0.5, 0.75];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourLevel {
    pub fraction: f64,
    pub density: f64,
    pub polylines: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortContours {
    pub cohort: String,
    pub points: usize,
    pub bandwidth: Option<[f64; 2]>,
    pub levels: Vec<ContourLevel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourModel {
    pub grid: usize,
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    pub cohorts: Vec<CohortContours>,
}

fn axis(i: usize, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * i as f64 / (CONTOUR_GRID - 1) as f64
}

fn std_dev(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = v.clone().count() as f64;
    let mean = v.clone().sum::<f64>() / n;
    (v.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Gaussian KDE on the grid; `density[j][i]` is at `(x_i, y_j)`.
fn density_grid(points: &[[f64; 2]], h: [f64; 2]) -> Vec<Vec<f64>> {
    let norm = 1.0 / (2.0 * std::f64::consts::PI * h[0] * h[1] * points.len() as f64);
    (0..CONTOUR_GRID)
        .map(|j| {
            let y = axis(j, DIST_RANGE);
            (0..CONTOUR_GRID)
                .map(|i| {
                    let x = axis(i, CORR_RANGE);
                    points
                        .iter()
                        .map(|p| {
                            let (dx, dy) = ((x - p[0]) / h[0], (y - p[1]) / h[1]);
                            (-0.5 * (dx * dx + dy * dy)).exp()
                        })
                        .sum::<f64>()
                        * norm
                })
                .collect()
        })
        .collect()
}

/// Scott's rule per axis, never narrower than one grid cell.
fn bandwidth(points: &[[f64; 2]]) -> [f64; 2] {
    let factor = (points.len() as f64).powf(-1.0 / 6.0);
    let cell = |(lo, hi): (f64, f64)| (hi - lo) / (CONTOUR_GRID - 1) as f64;
    let hx = std_dev(points.iter().map(|p| p[0])) * factor;
    let hy = std_dev(points.iter().map(|p| p[1])) * factor;
    [hx.max(cell(CORR_RANGE)), hy.max(cell(DIST_RANGE))]
}

/// Edge identifiers: horizontal edge from node (i, j) to (i+1, j), vertical from (i, j) to (i, j+1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Edge {
    H(usize, usize),
    V(usize, usize),
}

fn crossing(grid: &[Vec<f64>], level: f64, e: Edge) -> [f64; 2] {
    let (a, b) = match e {
        Edge::H(i, j) => ((i, j), (i + 1, j)),
        Edge::V(i, j) => ((i, j), (i, j + 1)),
    };
    let (va, vb) = (grid[a.1][a.0], grid[b.1][b.0]);
    let t = if vb != va { ((level - va) / (vb - va)).clamp(0.0, 1.0) } else { 0.5 };
    let (xa, ya) = (axis(a.0, CORR_RANGE), axis(a.1, DIST_RANGE));
    let (xb, yb) = (axis(b.0, CORR_RANGE), axis(b.1, DIST_RANGE));
    clamp_point(xa + t * (xb - xa), ya + t * (yb - ya))
}

/// Marching squares over the grid, segments stitched into polylines.
/// A polyline is closed when its first and last points coincide.
fn marching_squares(grid: &[Vec<f64>], level: f64) -> Vec<Vec<[f64; 2]>> {
    let n = CONTOUR_GRID;
    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    for j in 0..n - 1 {
        for i in 0..n - 1 {
            let v = [grid[j][i], grid[j][i + 1], grid[j + 1][i + 1], grid[j + 1][i]];
            let case = v.iter().enumerate().fold(0u8, |c, (k, &x)| c | (u8::from(x >= level) << k));
            let (bottom, right, top, left) = (Edge::H(i, j), Edge::V(i + 1, j), Edge::H(i, j + 1), Edge::V(i, j));
            let centre_in = (v.iter().sum::<f64>() / 4.0) >= level;
            match case {
                0 | 15 => {}
                1 | 14 => segments.push((left, bottom)),
                2 | 13 => segments.push((bottom, right)),
                3 | 12 => segments.push((left, right)),
                4 | 11 => segments.push((right, top)),
                6 | 9 => segments.push((bottom, top)),
                7 | 8 => segments.push((left, top)),
                5 if centre_in => {
                    segments.push((left, top));
                    segments.push((bottom, right));
                }
                5 => {
                    segments.push((left, bottom));
                    segments.push((right, top));
                }
                10 if centre_in => {
                    segments.push((left, bottom));
                    segments.push((right, top));
                }
                10 => {
                    segments.push((left, top));
                    segments.push((bottom, right));
                }
                _ => unreachable!("four corners give sixteen cases"),
            }
        }
    }

    let mut at: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        at.entry(a).or_default().push(s);
        at.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    let other = |s: usize, e: Edge| if segments[s].0 == e { segments[s].1 } else { segments[s].0 };
    let next_unused = |e: Edge, used: &[bool]| at[&e].iter().copied().find(|&s| !used[s]);

    // Open chains start at an edge touched by a single segment; closed ones anywhere.
    let mut starts: Vec<usize> = (0..segments.len()).filter(|&s| at[&segments[s].0].len() == 1 || at[&segments[s].1].len() == 1).collect();
    starts.extend(0..segments.len());
    for s0 in starts {
        if used[s0] {
            continue;
        }
        let start = if at[&segments[s0].0].len() == 1 {
            segments[s0].0
        } else if at[&segments[s0].1].len() == 1 {
            segments[s0].1
        } else {
            segments[s0].0
        };
        let mut chain = vec![start];
        let mut edge = start;
        let mut seg = Some(s0);
        while let Some(s) = seg {
            used[s] = true;
            edge = other(s, edge);
            chain.push(edge);
            seg = next_unused(edge, &used);
        }
        lines.push(chain.into_iter().map(|e| crossing(grid, level, e)).collect());
    }
    lines
}

/// Density contours per cohort of `(correlation, distance)` points.
pub fn contour_polylines(sets: &[(String, Vec<[f64; 2]>)]) -> ContourModel {
    let cohorts = sets
        .iter()
        .map(|(cohort, raw)| {
            let points: Vec<[f64; 2]> =
                raw.iter().filter(|p| p[0].is_finite() && p[1].is_finite()).map(|p| clamp_point(p[0], p[1])).collect();
            if points.len() < 3 {
                return CohortContours { cohort: cohort.clone(), points: points.len(), bandwidth: None, levels: Vec::new() };
            }
            let h = bandwidth(&points);
            let grid = density_grid(&points, h);
            let max = grid.iter().flatten().copied().fold(0.0, f64::max);
            let levels = CONTOUR_LEVELS
                .iter()
                .map(|&fraction| {
                    let density = fraction * max;
                    ContourLevel { fraction, density, polylines: marching_squares(&grid, density) }
                })
                .collect();
            CohortContours { cohort: cohort.clone(), points: points.len(), bandwidth: Some(h), levels }
        })
        .collect();
    ContourModel { grid: CONTOUR_GRID, x_range: [CORR_RANGE.0, CORR_RANGE.1], y_range: [DIST_RANGE.0, DIST_RANGE.1], cohorts }
}
