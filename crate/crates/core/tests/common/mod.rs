//! Reference implementations used as test oracles. They deliberately share
//! no code with the library beyond plain data types.
#![allow(dead_code)]

use fieldpos::camera::CameraPose;
use fieldpos::geometry::ImageSize;

type M3 = [[f64; 3]; 3];

fn mul(a: &M3, b: &M3) -> M3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

/// World-to-camera rotation built from elementary rotations:
/// `R_x(tilt) · R_base · R_z(pan)`.
pub fn rotation(pan_deg: f64, tilt_deg: f64) -> M3 {
    let (sp, cp) = pan_deg.to_radians().sin_cos();
    let (st, ct) = tilt_deg.to_radians().sin_cos();
    let rz = [[cp, -sp, 0.0], [sp, cp, 0.0], [0.0, 0.0, 1.0]];
    let base = [[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]];
    let rx = [[1.0, 0.0, 0.0], [0.0, ct, st], [0.0, -st, ct]];
    mul(&rx, &mul(&base, &rz))
}

/// Pixel of a ground point, or `None` behind the camera.
pub fn project(pose: &CameraPose<f64>, size: ImageSize, x: f64, y: f64) -> Option<(f64, f64)> {
    let r = rotation(pose.pan, pose.tilt);
    let d = [x - pose.x, y - pose.y, -pose.z];
    let c: Vec<f64> = (0..3).map(|i| (0..3).map(|k| r[i][k] * d[k]).sum()).collect();
    if c[2] <= 0.0 {
        return None;
    }
    let f = pose.focal * size.width as f64 / 1280.0;
    Some((f * c[0] / c[2] + size.width as f64 / 2.0, f * c[1] / c[2] + size.height as f64 / 2.0))
}

pub fn visible(pose: &CameraPose<f64>, size: ImageSize, x: f64, y: f64) -> bool {
    project(pose, size, x, y)
        .is_some_and(|(u, v)| (0.0..=size.width as f64).contains(&u) && (0.0..=size.height as f64).contains(&v))
}

/// IoU of the field areas seen by two cameras, counted on an `n x n` grid of
/// cell centres over the field.
pub fn raster_iou(a: &CameraPose<f64>, b: &CameraPose<f64>, size: ImageSize, length: f64, width: f64, n: usize) -> f64 {
    let (mut inter, mut union) = (0u64, 0u64);
    for i in 0..n {
        let x = (i as f64 + 0.5) * length / n as f64;
        for j in 0..n {
            let y = (j as f64 + 0.5) * width / n as f64;
            let (va, vb) = (visible(a, size, x, y), visible(b, size, x, y));
            inter += (va && vb) as u64;
            union += (va || vb) as u64;
        }
    }
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Minimum total cost over all injections of the smaller side into the
/// larger one.
pub fn brute_force_assignment(cost: &[Vec<f64>]) -> f64 {
    let rows = cost.len();
    let cols = cost.first().map_or(0, |r| r.len());
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    let at = |r: usize, c: usize| if rows <= cols { cost[r][c] } else { cost[c][r] };
    let (small, large) = (rows.min(cols), rows.max(cols));
    fn rec(i: usize, small: usize, large: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64, at: &dyn Fn(usize, usize) -> f64) {
        if i == small {
            *best = best.min(acc);
            return;
        }
        for c in 0..large {
            if !used[c] {
                used[c] = true;
                rec(i + 1, small, large, used, acc + at(i, c), best, at);
                used[c] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    rec(0, small, large, &mut vec![false; large], 0.0, &mut best, &at);
    best
}

/// Textbook DBSCAN: pairwise distances, core points with at least
/// `min_pts` points (self included) within `eps`, clusters grown
/// breadth-first from unvisited cores in index order, border points given to
/// the first cluster (lowest id) with a core within `eps`.
pub fn dbscan_reference(points: &[[f64; 3]], eps: f64, min_pts: usize) -> Vec<Option<usize>> {
    let n = points.len();
    let dist = |i: usize, j: usize| -> f64 { (0..3).map(|k| (points[i][k] - points[j][k]).powi(2)).sum::<f64>().sqrt() };
    let close = |i: usize, j: usize| dist(i, j) <= eps;
    let core: Vec<bool> = (0..n).map(|i| (0..n).filter(|&j| close(i, j)).count() >= min_pts).collect();
    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut k = 0;
    for s in 0..n {
        if !core[s] || label[s].is_some() {
            continue;
        }
        let mut queue = std::collections::VecDeque::from([s]);
        label[s] = Some(k);
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                if core[j] && label[j].is_none() && close(i, j) {
                    label[j] = Some(k);
                    queue.push_back(j);
                }
            }
        }
        k += 1;
    }
    (0..n)
        .map(|i| if core[i] { label[i] } else { (0..n).filter(|&j| core[j] && close(i, j)).filter_map(|j| label[j]).min() })
        .collect()
}

/// Whether two labelings describe the same partition, noise included.
pub fn same_partition(a: &[Option<usize>], b: &[Option<usize>]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut fwd = std::collections::HashMap::new();
    let mut back = std::collections::HashMap::new();
    for (x, y) in a.iter().zip(b) {
        match (x, y) {
            (None, None) => {}
            (Some(x), Some(y)) => {
                if *fwd.entry(*x).or_insert(*y) != *y || *back.entry(*y).or_insert(*x) != *x {
                    return false;
                }
            }
            _ => return false,
        }
    }
    true
}
