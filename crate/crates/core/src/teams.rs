//! Team assignment: jersey colour features clustered with DBSCAN, with the
//! radius chosen by a grid search over the balance cost.

use std::f64::consts::TAU;

use image::imageops::{self, FilterType};
use image::RgbImage;
use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Team {
    A,
    B,
    /// Goalkeepers, referees, noise and anything else.
    #[serde(rename = "O")]
    Other,
}

impl Team {
    pub fn as_str(&self) -> &'static str {
        match self {
            Team::A => "A",
            Team::B => "B",
            Team::Other => "O",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "A" => Ok(Team::A),
            "B" => Ok(Team::B),
            "O" => Ok(Team::Other),
            _ => Err(Error::Parse(format!("unknown team label {s:?}"))),
        }
    }

    pub fn other_team(&self) -> Team {
        match self {
            Team::A => Team::B,
            Team::B => Team::A,
            Team::Other => Team::Other,
        }
    }
}

/// Mean HSV of a crop, each channel in [0, 1].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hsv {
    pub h: f64,
    pub s: f64,
    pub v: f64,
}

impl Hsv {
    pub fn validate(&self) -> Result<()> {
        if [self.h, self.s, self.v].iter().all(|c| (0.0..=1.0).contains(c)) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("HSV channels outside [0, 1]: {self:?}")))
        }
    }

    /// `(s cos 2πh, s sin 2πh, v)`.
    pub fn embed(&self) -> ColorFeature {
        let a = TAU * self.h;
        [self.s * a.cos(), self.s * a.sin(), self.v]
    }
}

pub type ColorFeature = [f64; 3];

pub fn rgb_to_hsv(rgb: [u8; 3]) -> Hsv {
    let [r, g, b] = rgb.map(|c| c as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let d = max - min;
    let h = if d == 0.0 {
        0.0
    } else if max == r {
        ((g - b) / d).rem_euclid(6.0) / 6.0
    } else if max == g {
        ((b - r) / d + 2.0) / 6.0
    } else {
        ((r - g) / d + 4.0) / 6.0
    };
    let s = if max == 0.0 { 0.0 } else { d / max };
    Hsv { h, s, v: max }
}

pub fn hsv_to_rgb(c: Hsv) -> [u8; 3] {
    let h6 = c.h.rem_euclid(1.0) * 6.0;
    let x = c.v * c.s;
    let k = |n: f64| {
        let t = (n + h6).rem_euclid(6.0);
        c.v - x * t.min(4.0 - t).clamp(0.0, 1.0)
    };
    [k(5.0), k(3.0), k(1.0)].map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
}

/// Mean colour of a player crop: upper half, scaled to 20x20, central 16x16,
/// averaged in HSV with a circular hue mean.
pub fn crop_hsv(crop: &RgbImage) -> Result<Hsv> {
    let (w, h) = crop.dimensions();
    if w == 0 || h == 0 {
        return Err(Error::InvalidArgument("empty crop".into()));
    }
    let upper = imageops::crop_imm(crop, 0, 0, w, h.div_ceil(2)).to_image();
    let scaled = imageops::resize(&upper, 20, 20, FilterType::Triangle);
    let (mut hc, mut hs, mut s, mut v) = (0.0, 0.0, 0.0, 0.0);
    for y in 2..18 {
        for x in 2..18 {
            let c = rgb_to_hsv(scaled.get_pixel(x, y).0);
            hc += (TAU * c.h).cos();
            hs += (TAU * c.h).sin();
            s += c.s;
            v += c.v;
        }
    }
    let hue = if hc.abs() < 1e-12 && hs.abs() < 1e-12 { 0.0 } else { hs.atan2(hc).rem_euclid(TAU) / TAU };
    Ok(Hsv { h: hue.min(1.0), s: s / 256.0, v: v / 256.0 })
}

pub fn color_feature(crop: &RgbImage) -> Result<ColorFeature> {
    Ok(crop_hsv(crop)?.embed())
}

/// DBSCAN labels: `Some(cluster)` or `None` for noise. A point is core if at
/// least `min_pts` points (itself included) lie within `eps`. Clusters are
/// numbered by their lowest core index; a border point joins the lowest
/// numbered adjacent cluster.
pub fn dbscan(features: &[ColorFeature], eps: f64, min_pts: usize) -> Vec<Option<usize>> {
    let n = features.len();
    let eps2 = eps * eps;
    let near = |i: usize, j: usize| {
        let (a, b) = (features[i], features[j]);
        (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2) <= eps2
    };
    let neighbors: Vec<Vec<usize>> = (0..n).into_par_iter().map(|i| (0..n).filter(|&j| near(i, j)).collect()).collect();
    let core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= min_pts).collect();
    let mut labels = vec![None; n];
    let mut next = 0;
    let mut stack = Vec::new();
    for seed in 0..n {
        if !core[seed] || labels[seed].is_some() {
            continue;
        }
        labels[seed] = Some(next);
        stack.push(seed);
        while let Some(i) = stack.pop() {
            for &j in &neighbors[i] {
                if core[j] && labels[j].is_none() {
                    labels[j] = Some(next);
                    stack.push(j);
                }
            }
        }
        next += 1;
    }
    for i in 0..n {
        if !core[i] {
            labels[i] = neighbors[i].iter().filter(|&&j| core[j]).filter_map(|&j| labels[j]).min();
        }
    }
    labels
}

/// Cluster sizes, indexed by cluster id, and the noise count.
fn cluster_sizes(labels: &[Option<usize>]) -> (Vec<usize>, usize) {
    let k = labels.iter().flatten().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0; k];
    let mut noise = 0;
    for l in labels {
        match l {
            Some(c) => sizes[*c] += 1,
            None => noise += 1,
        }
    }
    (sizes, noise)
}

/// `|Other| + ||A| - |B||` for exactly two clusters, infinity otherwise.
pub fn cluster_cost(labels: &[Option<usize>]) -> f64 {
    let (sizes, noise) = cluster_sizes(labels);
    if sizes.len() != 2 {
        return f64::INFINITY;
    }
    (noise + sizes[0].abs_diff(sizes[1])) as f64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TeamClusterConfig {
    pub n_cls: f64,
    pub eps_lo: f64,
    pub eps_hi: f64,
    pub eps_step: f64,
    /// Frames sampled for the radius search.
    pub sample_frames: usize,
    pub seed: u64,
}

impl Default for TeamClusterConfig {
    fn default() -> Self {
        TeamClusterConfig { n_cls: 0.2, eps_lo: 0.01, eps_hi: 0.5, eps_step: 0.01, sample_frames: 20, seed: 0 }
    }
}

impl TeamClusterConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..=0.5).contains(&self.n_cls)
            && self.eps_lo > 0.0
            && self.eps_step > 0.0
            && self.eps_hi >= self.eps_lo
            && self.sample_frames >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid team clustering config {self:?}")))
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        let n = ((self.eps_hi - self.eps_lo) / self.eps_step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.eps_lo + i as f64 * self.eps_step).collect()
    }

    pub fn min_pts(&self, n: usize) -> usize {
        ((self.n_cls * n as f64).round() as usize).max(2)
    }
}

/// Radius with the lowest two-cluster cost; ties go to the smaller radius.
pub fn epsilon_search(features: &[ColorFeature], cfg: &TeamClusterConfig) -> Result<f64> {
    cfg.validate()?;
    let min_pts = cfg.min_pts(features.len());
    if features.len() < 2 * min_pts {
        return Err(Error::InvalidArgument(format!(
            "{} features are too few for min_pts {min_pts}",
            features.len()
        )));
    }
    let grid = cfg.grid();
    let costs: Vec<f64> = grid.par_iter().map(|&eps| cluster_cost(&dbscan(features, eps, min_pts))).collect();
    let mut best: Option<(f64, f64)> = None;
    for (&eps, &c) in grid.iter().zip(&costs) {
        if c.is_finite() && best.is_none_or(|(_, bc)| c < bc) {
            best = Some((eps, c));
        }
    }
    best.map(|(eps, _)| eps).ok_or(Error::NoFeasibleEpsilon)
}

/// Seeded choice of at most `cfg.sample_frames` distinct frames, ascending.
pub fn sample_frames(frames: &[u64], cfg: &TeamClusterConfig) -> Vec<u64> {
    let mut unique: Vec<u64> = frames.to_vec();
    unique.sort_unstable();
    unique.dedup();
    if unique.len() <= cfg.sample_frames {
        return unique;
    }
    let mut rng = rng::stream(cfg.seed, rng::FRAME_SAMPLE_STREAM);
    let mut picked: Vec<u64> = index::sample(&mut rng, unique.len(), cfg.sample_frames).into_iter().map(|i| unique[i]).collect();
    picked.sort_unstable();
    picked
}

#[derive(Clone, Debug, PartialEq)]
pub struct TeamAssignment {
    pub epsilon: f64,
    pub min_pts: usize,
    pub labels: Vec<Team>,
}

/// Searches the radius on the detections of sampled frames, then clusters
/// all detections. The two largest clusters become A (larger) and B; on a
/// size tie the cluster with the lower mean member index is A.
pub fn assign_teams(frames: &[u64], features: &[ColorFeature], cfg: &TeamClusterConfig) -> Result<TeamAssignment> {
    if frames.len() != features.len() {
        return Err(Error::InvalidArgument("one frame index per feature required".into()));
    }
    let picked = sample_frames(frames, cfg);
    let sample: Vec<ColorFeature> =
        frames.iter().zip(features).filter(|(f, _)| picked.binary_search(f).is_ok()).map(|(_, x)| *x).collect();
    let epsilon = epsilon_search(&sample, cfg)?;
    let min_pts = cfg.min_pts(features.len());
    let clusters = dbscan(features, epsilon, min_pts);
    let (sizes, _) = cluster_sizes(&clusters);
    let mut index_sum = vec![0usize; sizes.len()];
    for (i, c) in clusters.iter().enumerate() {
        if let Some(c) = c {
            index_sum[*c] += i;
        }
    }
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    // Mean index comparison a/sa < b/sb done in integers.
    order.sort_by(|&a, &b| {
        sizes[b].cmp(&sizes[a]).then((index_sum[a] * sizes[b]).cmp(&(index_sum[b] * sizes[a])))
    });
    let labels = clusters
        .iter()
        .map(|c| match c {
            Some(c) if order.first() == Some(c) => Team::A,
            Some(c) if order.get(1) == Some(c) => Team::B,
            _ => Team::Other,
        })
        .collect();
    Ok(TeamAssignment { epsilon, min_pts, labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgb;
    use proptest::prelude::*;

    fn close(a: ColorFeature, b: ColorFeature, tol: f64) -> bool {
        a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn pure_red_embeds_to_unit_hue() {
        let crop = RgbImage::from_pixel(12, 30, Rgb([255, 0, 0]));
        assert!(close(color_feature(&crop).unwrap(), [1.0, 0.0, 1.0], 1e-12));
    }

    #[test]
    fn gray_has_no_chroma() {
        let crop = RgbImage::from_pixel(9, 17, Rgb([128, 128, 128]));
        let f = color_feature(&crop).unwrap();
        assert!(close(f, [0.0, 0.0, 128.0 / 255.0], 1e-12));
    }

    #[test]
    fn lower_half_is_ignored() {
        let mut crop = RgbImage::from_pixel(20, 40, Rgb([255, 255, 255]));
        for y in 20..40 {
            for x in 0..20 {
                crop.put_pixel(x, y, Rgb([40, 160, 40]));
            }
        }
        assert!(close(color_feature(&crop).unwrap(), [0.0, 0.0, 1.0], 1e-12));
        assert!(color_feature(&RgbImage::new(0, 5)).is_err());
    }

    #[test]
    fn hue_mean_wraps_around_red() {
        let mut crop = RgbImage::from_pixel(20, 40, Rgb([255, 0, 20]));
        for y in 0..20 {
            for x in (0..20).step_by(2) {
                crop.put_pixel(x, y, Rgb([255, 20, 0]));
            }
        }
        let hsv = crop_hsv(&crop).unwrap();
        assert!(hsv.h < 0.02 || hsv.h > 0.98, "hue {}", hsv.h);
    }

    #[test]
    fn hsv_round_trip() {
        for rgb in [[255, 0, 0], [0, 255, 0], [0, 0, 255], [12, 200, 99], [255, 255, 255], [0, 0, 0], [250, 10, 240]] {
            assert_eq!(hsv_to_rgb(rgb_to_hsv(rgb)), rgb);
        }
    }

    #[test]
    fn dbscan_basic_cases() {
        let mut f = vec![[0.0, 0.0, 0.0]; 5];
        f.extend(vec![[1.0, 1.0, 1.0]; 4]);
        let l = dbscan(&f, 0.1, 3);
        assert_eq!(&l[..5], &[Some(0); 5]);
        assert_eq!(&l[5..], &[Some(1); 4]);
        assert_eq!(dbscan(&[[0.0; 3]], 0.1, 2), vec![None]);
    }

    #[test]
    fn border_point_joins_lowest_cluster() {
        // A border point between two blobs; the blob listed first gets id 0.
        let p = |x: f64| [x, 0.0, 0.0];
        let f = [p(1.0), p(2.0), p(2.05), p(2.1), p(2.15), p(0.0), p(-0.05), p(-0.1), p(-0.15)];
        let l = dbscan(&f, 1.0, 4);
        assert_eq!(l, vec![Some(0), Some(0), Some(0), Some(0), Some(0), Some(1), Some(1), Some(1), Some(1)]);
    }

    #[test]
    fn cost_formula() {
        let mut l = vec![Some(0); 10];
        l.extend(vec![Some(1); 9]);
        l.extend([None, None]);
        assert_eq!(cluster_cost(&l), 3.0);
        assert_eq!(cluster_cost(&[Some(0), Some(1)]), 0.0);
        assert_eq!(cluster_cost(&[Some(0), Some(1), Some(2)]), f64::INFINITY);
        assert_eq!(cluster_cost(&[Some(0), Some(0)]), f64::INFINITY);
    }

    #[test]
    fn grid_and_min_pts() {
        let cfg = TeamClusterConfig::default();
        let g = cfg.grid();
        assert_eq!(g.len(), 50);
        assert!((g[49] - 0.5).abs() < 1e-12);
        assert_eq!(cfg.min_pts(3), 2);
        assert_eq!(cfg.min_pts(100), 20);
    }

    #[test]
    fn identical_features_are_infeasible() {
        let f = vec![[0.3, 0.1, 0.5]; 40];
        assert!(matches!(epsilon_search(&f, &TeamClusterConfig::default()), Err(Error::NoFeasibleEpsilon)));
    }

    #[test]
    fn separated_palettes_give_balanced_teams() {
        let a = Hsv { h: 0.0, s: 0.9, v: 0.9 }.embed();
        let b = Hsv { h: 0.6, s: 0.9, v: 0.9 }.embed();
        let r = Hsv { h: 0.15, s: 0.1, v: 0.1 }.embed();
        let mut feats = Vec::new();
        let mut frames = Vec::new();
        for fr in 0..30u64 {
            for i in 0..10 {
                let d = 0.002 * (i as f64);
                feats.push([a[0] + d, a[1], a[2]]);
                feats.push([b[0], b[1] - d, b[2]]);
                frames.extend([fr, fr]);
            }
            feats.push(r);
            frames.push(fr);
        }
        let t = assign_teams(&frames, &feats, &TeamClusterConfig::default()).unwrap();
        let count = |team| t.labels.iter().filter(|&&l| l == team).count();
        assert_eq!(count(Team::A), 300);
        assert_eq!(count(Team::B), 300);
        assert_eq!(count(Team::Other), 30);
        assert_eq!(t.labels[0], Team::A);
    }

    #[test]
    fn frame_sampling_is_seeded() {
        let frames: Vec<u64> = (0..100).flat_map(|f| [f, f]).collect();
        let cfg = TeamClusterConfig::default();
        let a = sample_frames(&frames, &cfg);
        assert_eq!(a.len(), 20);
        assert_eq!(a, sample_frames(&frames, &cfg));
        assert_ne!(a, sample_frames(&frames, &TeamClusterConfig { seed: 1, ..cfg }));
    }

    proptest! {
        #[test]
        fn dbscan_is_permutation_invariant(
            pts in prop::collection::vec(prop::array::uniform3(0.0f64..1.0), 1..40),
            eps in 0.05f64..0.4, min_pts in 1usize..5, rot in 0usize..40,
        ) {
            // Core membership and co-clustering of core points do not depend on order.
            let n = pts.len();
            let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
            let shuffled: Vec<_> = perm.iter().map(|&i| pts[i]).collect();
            let a = dbscan(&pts, eps, min_pts);
            let b = dbscan(&shuffled, eps, min_pts);
            let core = |f: &[ColorFeature], i: usize| f.iter().filter(|q| {
                (0..3).map(|k| (q[k] - f[i][k]).powi(2)).sum::<f64>() <= eps * eps
            }).count() >= min_pts;
            for i in 0..n {
                for j in 0..n {
                    if core(&pts, perm[i]) && core(&pts, perm[j]) {
                        prop_assert_eq!(a[perm[i]] == a[perm[j]], b[i] == b[j]);
                    }
                }
                prop_assert_eq!(a[perm[i]].is_none(), b[i].is_none());
            }
        }

        #[test]
        fn cost_is_zero_only_when_balanced(sizes in prop::collection::vec(0usize..6, 3)) {
            let mut l = vec![Some(0); sizes[0] + 1];
            l.extend(vec![Some(1); sizes[1] + 1]);
            l.extend(vec![None; sizes[2]]);
            let c = cluster_cost(&l);
            prop_assert!(c >= 0.0);
            prop_assert_eq!(c == 0.0, sizes[0] == sizes[1] && sizes[2] == 0);
        }
    }
}
