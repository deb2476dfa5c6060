//! Synthetic matches with full ground truth: player trajectories, a tracking
//! broadcast camera, team palettes, and corrupted observations derived from
//! them (noisy detections, colour features, wrong homographies).

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::camera::CameraPose;
use crate::error::{Error, Result};
use crate::evaluation::{GroundTruthFrame, GtPlayer};
use crate::geometry::{fit_homography, Homography, ImageSize, Point2};
use crate::projection::Detection;
use crate::rng;
use crate::shots::{ShotLabel, ShotSegment};
use crate::teams::{Hsv, Team};

/// Player height used to size detection boxes, metres.
pub const PLAYER_HEIGHT: f64 = 1.8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Palettes {
    pub team_a: Hsv,
    pub team_b: Hsv,
    pub goalkeepers: Hsv,
    pub referee: Hsv,
}

impl Default for Palettes {
    fn default() -> Self {
        Palettes {
            team_a: Hsv { h: 0.0, s: 0.85, v: 0.85 },
            team_b: Hsv { h: 2.0 / 3.0, s: 0.8, v: 0.75 },
            goalkeepers: Hsv { h: 1.0 / 3.0, s: 0.9, v: 0.6 },
            referee: Hsv { h: 0.0, s: 0.05, v: 0.12 },
        }
    }
}

/// Fixed broadcast camera that pans, tilts and zooms to follow play.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraRig {
    pub location: [f64; 3],
    pub pan_range: (f64, f64),
    pub tilt_range: (f64, f64),
    pub focal_range: (f64, f64),
    /// Per-frame exponential smoothing weight of the target pose.
    pub smoothing: f64,
}

impl Default for CameraRig {
    fn default() -> Self {
        CameraRig {
            location: [52.0, -45.0, 17.0],
            pan_range: (-30.0, 30.0),
            tilt_range: (-16.0, -8.0),
            focal_range: (2000.0, 4000.0),
            smoothing: 0.08,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub frames: usize,
    pub frame_rate: f64,
    pub field_length: f64,
    pub field_width: f64,
    /// Outfield players per team; one goalkeeper per team is added.
    pub outfield_players: usize,
    pub referee: bool,
    /// Whether the referee appears in the ground truth.
    pub referee_in_gt: bool,
    /// Metres per second.
    pub v_max: f64,
    pub camera: CameraRig,
    pub palettes: Palettes,
    pub image_size: ImageSize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            frames: 200,
            frame_rate: 25.0,
            field_length: 105.0,
            field_width: 68.0,
            outfield_players: 10,
            referee: true,
            referee_in_gt: false,
            v_max: 8.0,
            camera: CameraRig::default(),
            palettes: Palettes::default(),
            image_size: ImageSize::REFERENCE,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let c = &self.camera;
        let ok = self.frames >= 1
            && self.frame_rate > 0.0
            && self.field_length > 20.0
            && self.field_width > 20.0
            && self.v_max > 0.0
            && c.location[2] > 0.0
            && c.pan_range.0 <= c.pan_range.1
            && c.tilt_range.0 <= c.tilt_range.1
            && 0.0 < c.focal_range.0
            && c.focal_range.0 <= c.focal_range.1
            && (0.0..=1.0).contains(&c.smoothing);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid synthetic match config {self:?}")))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Outfield(Team),
    Goalkeeper(Team),
    Referee,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlayerInfo {
    pub id: u32,
    pub role: Role,
    pub palette: Hsv,
}

impl PlayerInfo {
    /// Team label used in ground truth and for colour-based assignment:
    /// goalkeepers and the referee are `Other`.
    pub fn label(&self) -> Team {
        match self.role {
            Role::Outfield(t) => t,
            _ => Team::Other,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticMatch {
    pub config: SynthConfig,
    pub seed: u64,
    pub players: Vec<PlayerInfo>,
    /// `positions[frame][player]`.
    pub positions: Vec<Vec<Point2<f64>>>,
    pub poses: Vec<CameraPose<f64>>,
    pub homographies: Vec<Homography<f64>>,
}

impl SyntheticMatch {
    pub fn frame_count(&self) -> usize {
        self.positions.len()
    }

    pub fn ground_truth(&self) -> Vec<GroundTruthFrame> {
        (0..self.frame_count())
            .map(|f| GroundTruthFrame {
                frame: f as u64,
                players: self
                    .players
                    .iter()
                    .zip(&self.positions[f])
                    .filter(|(p, _)| p.role != Role::Referee || self.config.referee_in_gt)
                    .map(|(p, &position)| GtPlayer { player_id: p.id, team: p.label(), position })
                    .collect(),
            })
            .collect()
    }
}

/// Moves `from` towards `to` by at most `step`.
fn step_towards(from: Point2<f64>, to: Point2<f64>, step: f64) -> Point2<f64> {
    let d = from.distance(&to);
    if d <= step {
        to
    } else {
        let t = step / d;
        Point2::new(from.x + (to.x - from.x) * t, from.y + (to.y - from.y) * t)
    }
}

fn clamp_to(p: Point2<f64>, lx: f64, ly: f64, margin: f64) -> Point2<f64> {
    Point2::new(p.x.clamp(margin, lx - margin), p.y.clamp(margin, ly - margin))
}

/// Formation offset (metres, attacking direction +x) of outfield slot `i`.
fn slot(i: usize, n: usize) -> (f64, f64) {
    let lines = [(-22.0, 4usize), (-6.0, 4), (10.0, 2)];
    let mut k = i % n.max(1);
    for (x, count) in lines.iter().cycle().take(16) {
        if k < *count {
            let y = if *count == 1 { 0.0 } else { -24.0 + 48.0 * k as f64 / (*count - 1) as f64 };
            return (*x, y);
        }
        k -= count;
    }
    (0.0, 0.0)
}

/// Pose aiming the rig at `target` with a zoom that keeps the horizontal
/// angular spread of `spread` points in frame.
fn aim(rig: &CameraRig, target: Point2<f64>, spread: &[Point2<f64>], size: ImageSize) -> CameraPose<f64> {
    let [cx, cy, cz] = rig.location;
    let (dx, dy) = (target.x - cx, target.y - cy);
    let pan = dx.atan2(dy).to_degrees();
    let tilt = (-cz).atan2(dx.hypot(dy)).to_degrees();
    let mut angles: Vec<f64> = spread
        .iter()
        .map(|p| {
            let a = (p.x - cx).atan2(p.y - cy).to_degrees() - pan;
            a.abs()
        })
        .collect();
    angles.sort_by(f64::total_cmp);
    let half = angles.get(angles.len() * 4 / 5).copied().unwrap_or(10.0).max(1.0);
    let focal = 0.9 * (size.width as f64 / 2.0) / half.to_radians().tan() * 1280.0 / size.width as f64;
    CameraPose::new(
        cx,
        cy,
        cz,
        focal.clamp(rig.focal_range.0, rig.focal_range.1),
        pan.clamp(rig.pan_range.0, rig.pan_range.1),
        tilt.clamp(rig.tilt_range.0, rig.tilt_range.1),
    )
}

pub fn generate_match(cfg: &SynthConfig, seed: u64) -> Result<SyntheticMatch> {
    cfg.validate()?;
    let mut rng = rng::stream(seed, rng::MATCH_STREAM);
    let (lx, ly) = (cfg.field_length, cfg.field_width);
    let dt = 1.0 / cfg.frame_rate;
    let step = cfg.v_max * dt;

    let mut players = Vec::new();
    for team in [Team::A, Team::B] {
        let palette = if team == Team::A { cfg.palettes.team_a } else { cfg.palettes.team_b };
        for _ in 0..cfg.outfield_players {
            players.push(PlayerInfo { id: players.len() as u32, role: Role::Outfield(team), palette });
        }
        players.push(PlayerInfo { id: players.len() as u32, role: Role::Goalkeeper(team), palette: cfg.palettes.goalkeepers });
    }
    if cfg.referee {
        players.push(PlayerInfo { id: players.len() as u32, role: Role::Referee, palette: cfg.palettes.referee });
    }

    let centre = Point2::new(lx / 2.0, ly / 2.0);
    let focus_box = (lx * 0.3, lx * 0.7, ly * 0.33, ly * 0.67);
    let draw_focus = |rng: &mut ChaCha8Rng| {
        Point2::new(rng.random_range(focus_box.0..focus_box.1), rng.random_range(focus_box.2..focus_box.3))
    };
    let mut focus = draw_focus(&mut rng);
    let mut focus_goal = draw_focus(&mut rng);
    let jitter = Normal::new(0.0, 4.0).expect("valid sigma");
    let mut jitters: Vec<(f64, f64)> = players.iter().map(|_| (jitter.sample(&mut rng), jitter.sample(&mut rng))).collect();
    let target = |p: &PlayerInfo, idx: usize, focus: Point2<f64>, j: (f64, f64)| -> Point2<f64> {
        let raw = match p.role {
            Role::Outfield(t) => {
                let k = idx % (cfg.outfield_players + 1);
                let (sx, sy) = slot(k, cfg.outfield_players);
                let dir = if t == Team::A { 1.0 } else { -1.0 };
                let shift = if t == Team::A { 0.0 } else { 3.0 };
                Point2::new(focus.x + 0.7 * dir * sx + shift + j.0, focus.y + 0.7 * sy + j.1)
            }
            Role::Goalkeeper(t) => {
                let goal_x = if t == Team::A { 0.0 } else { lx };
                Point2::new(goal_x + 0.12 * (focus.x - goal_x) + j.0 * 0.3, centre.y + 0.2 * (focus.y - centre.y) + j.1 * 0.3)
            }
            Role::Referee => Point2::new(focus.x + 4.0 + j.0, focus.y - 6.0 + j.1),
        };
        clamp_to(raw, lx, ly, 0.5)
    };

    let mut current: Vec<Point2<f64>> =
        players.iter().enumerate().map(|(i, p)| target(p, i, focus, jitters[i])).collect();
    let rejitter_every = (2.0 * cfg.frame_rate).round().max(1.0) as usize;
    let mut positions = Vec::with_capacity(cfg.frames);
    let mut poses = Vec::with_capacity(cfg.frames);
    let mut pose: Option<CameraPose<f64>> = None;
    for f in 0..cfg.frames {
        if f > 0 {
            if focus.distance(&focus_goal) < 1.0 {
                focus_goal = draw_focus(&mut rng);
            }
            focus = step_towards(focus, focus_goal, 3.0 * dt);
            if f % rejitter_every == 0 {
                for j in jitters.iter_mut() {
                    *j = (jitter.sample(&mut rng), jitter.sample(&mut rng));
                }
            }
            for (i, p) in players.iter().enumerate() {
                let next = step_towards(current[i], target(p, i, focus, jitters[i]), step);
                current[i] = clamp_to(next, lx, ly, 0.0);
            }
        }
        let outfield: Vec<Point2<f64>> = players
            .iter()
            .zip(&current)
            .filter(|(p, _)| matches!(p.role, Role::Outfield(_)))
            .map(|(_, &q)| q)
            .collect();
        let n = outfield.len().max(1) as f64;
        let centroid = Point2::new(outfield.iter().map(|p| p.x).sum::<f64>() / n, outfield.iter().map(|p| p.y).sum::<f64>() / n);
        let want = aim(&cfg.camera, centroid, &outfield, cfg.image_size);
        let a = cfg.camera.smoothing;
        let next = match pose {
            None => want,
            Some(p) => CameraPose {
                pan: p.pan + a * (want.pan - p.pan),
                tilt: p.tilt + a * (want.tilt - p.tilt),
                focal: p.focal + a * (want.focal - p.focal),
                ..p
            },
        };
        pose = Some(next);
        poses.push(next);
        positions.push(current.clone());
    }
    let homographies = poses.iter().map(|p| p.homography(cfg.image_size)).collect::<Result<Vec<_>>>()?;
    Ok(SyntheticMatch { config: cfg.clone(), seed, players, positions, poses, homographies })
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NoiseConfig {
    /// Pixels, applied to both anchor coordinates.
    pub anchor_sigma: f64,
    pub dropout: f64,
    /// Mean number of false positives per frame (Poisson).
    pub false_positive_rate: f64,
    /// Standard deviation of the HSV channel noise.
    pub color_sigma: f64,
    pub homography_corruption_prob: f64,
    /// Field-corner displacement of a corrupted homography, metres.
    pub homography_corruption_magnitude: f64,
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.anchor_sigma >= 0.0
            && (0.0..=1.0).contains(&self.dropout)
            && self.false_positive_rate >= 0.0
            && self.color_sigma >= 0.0
            && (0.0..=1.0).contains(&self.homography_corruption_prob)
            && self.homography_corruption_magnitude >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid noise config {self:?}")))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameDetections {
    pub frame: u64,
    pub detections: Vec<Detection>,
    pub colors: Vec<Hsv>,
    /// Source player id; `None` for false positives.
    pub sources: Vec<Option<u32>>,
}

fn noisy_color<R: Rng>(c: Hsv, sigma: f64, rng: &mut R) -> Hsv {
    if sigma == 0.0 {
        return c;
    }
    let n = Normal::new(0.0, sigma).expect("valid sigma");
    Hsv {
        h: (c.h + n.sample(rng)).rem_euclid(1.0),
        s: (c.s + n.sample(rng)).clamp(0.0, 1.0),
        v: (c.v + n.sample(rng)).clamp(0.0, 1.0),
    }
}

/// Box of a standing player whose feet project to `anchor`.
fn player_box(pose: &CameraPose<f64>, size: ImageSize, ground: Point2<f64>, anchor: Point2<f64>, frame: u64) -> Option<Detection> {
    let foot = pose.project_world(size, [ground.x, ground.y, 0.0])?;
    let head = pose.project_world(size, [ground.x, ground.y, PLAYER_HEIGHT])?;
    let height = (foot.y - head.y).abs().max(4.0);
    let width = (0.4 * height).max(2.0);
    let d = Detection { frame, x1: anchor.x - width / 2.0, y1: anchor.y - height, x2: anchor.x + width / 2.0, y2: anchor.y, confidence: Some(1.0) };
    d.validate(Some(size)).ok().map(|_| d)
}

/// Detections of players whose feet project inside the image, with anchor
/// noise, dropout, false positives and colour noise applied.
pub fn corrupt_detections(m: &SyntheticMatch, noise: &NoiseConfig, seed: u64) -> Result<Vec<FrameDetections>> {
    noise.validate()?;
    let size = m.config.image_size;
    let mut rng = rng::stream(seed, rng::DETECTION_STREAM);
    let mut crng = rng::stream(seed, rng::COLOR_STREAM);
    let anchor_noise = Normal::new(0.0, noise.anchor_sigma.max(0.0)).expect("valid sigma");
    let fp_count = (noise.false_positive_rate > 0.0).then(|| Poisson::new(noise.false_positive_rate).expect("positive rate"));
    let mut out = Vec::with_capacity(m.frame_count());
    for f in 0..m.frame_count() {
        let (pose, h) = (&m.poses[f], &m.homographies[f]);
        let front = h.front_sign(size);
        let mut fd = FrameDetections { frame: f as u64, detections: Vec::new(), colors: Vec::new(), sources: Vec::new() };
        for (p, &pos) in m.players.iter().zip(&m.positions[f]) {
            let v = h.project(pos);
            if v[2] * front <= 0.0 {
                continue;
            }
            let a = Point2::new(v[0] / v[2], v[1] / v[2]);
            if !(a.x >= 0.0 && a.y >= 0.0 && a.x < size.width as f64 && a.y < size.height as f64) {
                continue;
            }
            if noise.dropout > 0.0 && rng.random_bool(noise.dropout) {
                continue;
            }
            let a = if noise.anchor_sigma > 0.0 {
                Point2::new(a.x + anchor_noise.sample(&mut rng), a.y + anchor_noise.sample(&mut rng))
            } else {
                a
            };
            if let Some(d) = player_box(pose, size, pos, a, f as u64) {
                fd.detections.push(d);
                fd.colors.push(noisy_color(p.palette, noise.color_sigma, &mut crng));
                fd.sources.push(Some(p.id));
            }
        }
        let n_fp = fp_count.map_or(0, |d| d.sample(&mut rng) as usize);
        for _ in 0..n_fp {
            let a = Point2::new(
                rng.random_range(0.0..size.width as f64),
                rng.random_range(size.height as f64 * 0.3..size.height as f64),
            );
            let height = rng.random_range(20.0..80.0);
            let d = Detection { frame: f as u64, x1: a.x - 0.2 * height, y1: a.y - height, x2: a.x + 0.2 * height, y2: a.y, confidence: Some(0.5) };
            let gray = Hsv { h: rng.random_range(0.0..1.0), s: rng.random_range(0.0..0.12), v: rng.random_range(0.35..0.6) };
            fd.detections.push(d);
            fd.colors.push(noisy_color(gray, noise.color_sigma, &mut crng));
            fd.sources.push(None);
        }
        out.push(fd);
    }
    Ok(out)
}

/// Homography whose back-projections of the four field-corner images are the
/// corners displaced by `magnitude` in independent random directions.
pub fn displaced_homography<R: Rng>(h: &Homography<f64>, corners: &[Point2<f64>; 4], magnitude: f64, rng: &mut R) -> Result<Homography<f64>> {
    let moved: Vec<Point2<f64>> = corners
        .iter()
        .map(|c| {
            let a = rng.random_range(0.0..std::f64::consts::TAU);
            Point2::new(c.x + magnitude * a.cos(), c.y + magnitude * a.sin())
        })
        .collect();
    let targets: Vec<Point2<f64>> = corners
        .iter()
        .map(|c| {
            let v = h.project(*c);
            Point2::new(v[0] / v[2], v[1] / v[2])
        })
        .collect();
    fit_homography(&moved, &targets)
}

/// Per-frame homographies where each frame is replaced, with the configured
/// probability, by a [`displaced_homography`]. Also returns which frames
/// were corrupted.
pub fn corrupt_homographies(m: &SyntheticMatch, noise: &NoiseConfig, seed: u64) -> Result<(Vec<Homography<f64>>, Vec<bool>)> {
    noise.validate()?;
    let mut rng = rng::stream(seed, rng::HOMOGRAPHY_STREAM);
    let corners = [
        Point2::new(0.0, 0.0),
        Point2::new(m.config.field_length, 0.0),
        Point2::new(m.config.field_length, m.config.field_width),
        Point2::new(0.0, m.config.field_width),
    ];
    let mut hs = Vec::with_capacity(m.frame_count());
    let mut flags = Vec::with_capacity(m.frame_count());
    for h in &m.homographies {
        let corrupt = noise.homography_corruption_prob > 0.0 && rng.random_bool(noise.homography_corruption_prob);
        if corrupt {
            hs.push(displaced_homography(h, &corners, noise.homography_corruption_magnitude, &mut rng)?);
        } else {
            hs.push(*h);
        }
        flags.push(corrupt);
    }
    Ok((hs, flags))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShotSequenceConfig {
    pub shots: usize,
    /// Probability that a shot is a main-camera shot.
    pub main_fraction: f64,
    pub main_length: (usize, usize),
    pub other_length: (usize, usize),
    /// Probability that a frame of a non-main shot has no homography.
    pub failure_rate: f64,
    pub image_size: ImageSize,
}

impl Default for ShotSequenceConfig {
    fn default() -> Self {
        ShotSequenceConfig {
            shots: 40,
            main_fraction: 0.5,
            main_length: (50, 150),
            other_length: (10, 60),
            failure_rate: 0.3,
            image_size: ImageSize::REFERENCE,
        }
    }
}

/// Consecutive shots with their true labels. Main shots follow a smooth
/// pan/tilt/zoom path of the broadcast camera; other shots jump between
/// unrelated close-up poses, with some registrations failing.
pub fn generate_shot_sequence(cfg: &ShotSequenceConfig, seed: u64) -> Result<Vec<(ShotSegment<f64>, ShotLabel)>> {
    let mut rng = rng::stream(seed, rng::MATCH_STREAM);
    let rig = CameraRig::default();
    let mut out = Vec::with_capacity(cfg.shots);
    let mut start = 0u64;
    for _ in 0..cfg.shots {
        let main = rng.random_bool(cfg.main_fraction);
        let (lo, hi) = if main { cfg.main_length } else { cfg.other_length };
        let len = rng.random_range(lo.max(2)..=hi.max(lo.max(2)));
        let mut hs = Vec::with_capacity(len);
        if main {
            let pan0 = rng.random_range(rig.pan_range.0..rig.pan_range.1);
            let tilt0 = rng.random_range(rig.tilt_range.0..rig.tilt_range.1);
            let f0 = rng.random_range(rig.focal_range.0..rig.focal_range.1);
            let (wp, wt, wf) = (rng.random_range(0.2..1.0), rng.random_range(0.1..0.6), rng.random_range(0.05..0.3));
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            for i in 0..len {
                let t = i as f64 / len as f64;
                let s = (std::f64::consts::PI * t + phase).sin();
                let pose = CameraPose::new(
                    rig.location[0],
                    rig.location[1],
                    rig.location[2],
                    f0 * (1.0 + 0.1 * wf * s),
                    pan0 + 5.0 * wp * s,
                    tilt0 + wt * s,
                );
                hs.push(Some(pose.homography(cfg.image_size)?));
            }
        } else {
            for _ in 0..len {
                if rng.random_bool(cfg.failure_rate) {
                    hs.push(None);
                    continue;
                }
                let pose = CameraPose::new(
                    rng.random_range(0.0..105.0),
                    rng.random_range(-60.0..-10.0),
                    rng.random_range(2.0..25.0),
                    rng.random_range(1500.0..15000.0),
                    rng.random_range(-60.0..60.0),
                    rng.random_range(-40.0..-3.0),
                );
                hs.push(pose.homography(cfg.image_size).ok());
            }
        }
        let end = start + len as u64 - 1;
        out.push((ShotSegment::new(start, end, hs)?, if main { ShotLabel::MainCamera } else { ShotLabel::Other }));
        start = end + 1;
    }
    Ok(out)
}

/// Shuffles detections within each frame, keeping the parallel vectors
/// aligned.
pub fn shuffle_detections(frames: &mut [FrameDetections], seed: u64) {
    let mut rng = rng::stream(seed, rng::DETECTION_STREAM);
    for f in frames {
        let mut idx: Vec<usize> = (0..f.detections.len()).collect();
        idx.shuffle(&mut rng);
        f.detections = idx.iter().map(|&i| f.detections[i]).collect();
        f.colors = idx.iter().map(|&i| f.colors[i]).collect();
        f.sources = idx.iter().map(|&i| f.sources[i]).collect();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig { frames: 60, ..Default::default() }
    }

    #[test]
    fn deterministic() {
        let a = generate_match(&small(), 5).unwrap();
        let b = generate_match(&small(), 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.positions, generate_match(&small(), 6).unwrap().positions);
    }

    #[test]
    fn roster() {
        let m = generate_match(&small(), 1).unwrap();
        assert_eq!(m.players.len(), 23);
        let gt = m.ground_truth();
        assert_eq!(gt[0].players.len(), 22);
        assert_eq!(gt[0].players.iter().filter(|p| p.team == Team::A).count(), 10);
        assert_eq!(gt[0].players.iter().filter(|p| p.team == Team::Other).count(), 2);
    }

    #[test]
    fn camera_within_ranges() {
        let m = generate_match(&small(), 2).unwrap();
        let rig = m.config.camera;
        for p in &m.poses {
            assert!(p.pan >= rig.pan_range.0 && p.pan <= rig.pan_range.1);
            assert!(p.tilt >= rig.tilt_range.0 && p.tilt <= rig.tilt_range.1);
            assert!(p.focal >= rig.focal_range.0 && p.focal <= rig.focal_range.1);
        }
    }

    #[test]
    fn noiseless_anchors_are_exact() {
        let m = generate_match(&small(), 3).unwrap();
        let dets = corrupt_detections(&m, &NoiseConfig::default(), 3).unwrap();
        let mut total = 0;
        for fd in &dets {
            let f = fd.frame as usize;
            for (d, s) in fd.detections.iter().zip(&fd.sources) {
                let pos = m.positions[f][s.unwrap() as usize];
                let q = m.homographies[f].apply(pos).unwrap();
                assert!(d.anchor().distance(&q) < 1e-9);
                total += 1;
            }
        }
        assert!(total > 60 * 8, "only {total} detections");
    }

    #[test]
    fn zero_corruption_is_identity() {
        let m = generate_match(&small(), 4).unwrap();
        let (hs, flags) = corrupt_homographies(&m, &NoiseConfig::default(), 4).unwrap();
        assert_eq!(hs, m.homographies);
        assert!(flags.iter().all(|f| !f));
    }

    #[test]
    fn corruption_displaces_corners_by_magnitude() {
        let m = generate_match(&small(), 4).unwrap();
        let noise = NoiseConfig { homography_corruption_prob: 1.0, homography_corruption_magnitude: 20.0, ..Default::default() };
        let (hs, _) = corrupt_homographies(&m, &noise, 4).unwrap();
        let corners = [Point2::new(0.0, 0.0), Point2::new(105.0, 0.0), Point2::new(105.0, 68.0), Point2::new(0.0, 68.0)];
        for (h, g) in hs.iter().zip(&m.homographies).take(5) {
            let inv = h.inverse().unwrap();
            for c in corners {
                let v = g.project(c);
                let back = inv.project(Point2::new(v[0] / v[2], v[1] / v[2]));
                let p = Point2::new(back[0] / back[2], back[1] / back[2]);
                assert!((p.distance(&c) - 20.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn shot_sequence_labels() {
        let shots = generate_shot_sequence(&ShotSequenceConfig::default(), 9).unwrap();
        assert_eq!(shots.len(), 40);
        for w in shots.windows(2) {
            assert_eq!(w[0].0.end + 1, w[1].0.start);
        }
        assert!(shots.iter().any(|s| s.1 == ShotLabel::MainCamera));
        assert!(shots.iter().any(|s| s.1 == ShotLabel::Other));
    }
}
