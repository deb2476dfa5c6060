//! Rectangular linear assignment by the Hungarian method with potentials.

use crate::geometry::Point2;

/// Cost given to padding rows or columns.
pub const DUMMY_COST: f64 = 1e6;

/// Minimum-cost assignment for a `rows x cols` cost matrix. The matrix is
/// padded to square with [`DUMMY_COST`]; pairs involving padding are
/// dropped, so exactly `min(rows, cols)` pairs `(row, col)` are returned,
/// sorted by row.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let rows = cost.len();
    let cols = cost.first().map_or(0, Vec::len);
    let n = rows.max(cols);
    if n == 0 || rows == 0 || cols == 0 {
        return Vec::new();
    }
    let c = |i: usize, j: usize| if i < rows && j < cols { cost[i][j] } else { DUMMY_COST };
    // 1-based potentials formulation; p[j] is the row assigned to column j.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = c(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut pairs: Vec<(usize, usize)> =
        (1..=n).filter(|&j| p[j] >= 1 && p[j] <= rows && j <= cols).map(|j| (p[j] - 1, j - 1)).collect();
    pairs.sort_unstable();
    pairs
}

#[derive(Clone, Debug, PartialEq)]
pub struct Matching {
    /// `(pred index, gt index, distance)`.
    pub pairs: Vec<(usize, usize, f64)>,
}

impl Matching {
    pub fn distances(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.2).collect()
    }

    pub fn total(&self) -> f64 {
        self.pairs.iter().map(|p| p.2).sum()
    }
}

/// Euclidean-cost assignment between predicted and ground-truth positions.
pub fn hungarian_match(pred: &[Point2<f64>], gt: &[Point2<f64>]) -> Matching {
    let cost: Vec<Vec<f64>> = pred.iter().map(|p| gt.iter().map(|g| p.distance(g)).collect()).collect();
    let pairs = hungarian(&cost).into_iter().map(|(i, j)| (i, j, cost[i][j])).collect();
    Matching { pairs }
}
