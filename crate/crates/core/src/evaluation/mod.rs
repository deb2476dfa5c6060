//! Position accuracy evaluation: ground-truth matching, frame filters,
//! per-frame aggregation and per-match reports.

pub mod hungarian;
pub mod sbd;

use std::collections::BTreeMap;

pub use hungarian::{hungarian, hungarian_match, Matching, DUMMY_COST};
pub use sbd::{sbd_f1, sbd_matches};

use crate::error::{Error, Result};
use crate::field::FieldTemplate;
use crate::geometry::{Homography, ImageSize, Point2};
use crate::projection::{self_verify, FrameEstimate, SvConfig};
use crate::teams::Team;

pub const DEFAULT_ZETA: f64 = 0.3;
pub const DEFAULT_BORDER_TOLERANCE: f64 = 0.05;
pub const DEFAULT_Q: f64 = 0.8;
pub const DEFAULT_THRESHOLDS: [f64; 2] = [2.0, 3.0];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GtPlayer {
    pub player_id: u32,
    pub team: Team,
    pub position: Point2<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GroundTruthFrame {
    pub frame: u64,
    pub players: Vec<GtPlayer>,
}

/// Players whose projection under `h` lies in front of the camera and inside
/// the image grown by `border_tol` of its size on every side.
pub fn visible_gt<'a>(players: &'a [GtPlayer], h: &Homography<f64>, size: ImageSize, border_tol: f64) -> Vec<&'a GtPlayer> {
    let (w, hgt) = (size.width as f64, size.height as f64);
    let (mx, my) = (border_tol * w, border_tol * hgt);
    let front = h.front_sign(size);
    players
        .iter()
        .filter(|p| {
            let v = h.project(p.position);
            if v[2] * front <= 0.0 {
                return false;
            }
            let (x, y) = (v[0] / v[2], v[1] / v[2]);
            x >= -mx && x <= w + mx && y >= -my && y <= hgt + my
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PmConfig {
    pub zeta: f64,
    pub border_tol: f64,
}

impl Default for PmConfig {
    fn default() -> Self {
        PmConfig { zeta: DEFAULT_ZETA, border_tol: DEFAULT_BORDER_TOLERANCE }
    }
}

impl PmConfig {
    pub fn validate(&self) -> Result<()> {
        if (0.0..1.0).contains(&self.zeta) && self.border_tol >= 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid player-mismatch config {self:?}")))
        }
    }
}

/// Keeps a frame iff `1 - zeta < n_real / n_gt < 1 + zeta`.
pub fn pm_filter(n_real: usize, n_gt_visible: usize, zeta: f64) -> bool {
    if n_gt_visible == 0 {
        return false;
    }
    let r = n_real as f64 / n_gt_visible as f64;
    1.0 - zeta < r && r < 1.0 + zeta
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Aggregation {
    Mean,
    Median,
    /// Mean of the `max(1, floor(q n))` smallest distances.
    BestQ(f64),
}

impl Aggregation {
    pub fn name(&self) -> String {
        match self {
            Aggregation::Mean => "mean".into(),
            Aggregation::Median => "median".into(),
            Aggregation::BestQ(q) => format!("best{}", crate::textfmt::fmt_num(*q)),
        }
    }
}

pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

/// Per-frame error from matched distances; `None` for an empty set.
pub fn aggregate_frame(distances: &[f64], mode: Aggregation) -> Option<f64> {
    match mode {
        Aggregation::Mean => mean(distances),
        Aggregation::Median => median(distances),
        Aggregation::BestQ(q) => {
            if distances.is_empty() {
                return None;
            }
            let mut v = distances.to_vec();
            v.sort_by(f64::total_cmp);
            let k = ((q * v.len() as f64).floor() as usize).clamp(1, v.len());
            mean(&v[..k])
        }
    }
}

/// Which ground truth a frame was matched against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GtMode {
    /// Players visible under the estimated homography.
    Visible,
    /// No homography: all players.
    All,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    /// Self-verification applied when set.
    pub sv: Option<SvConfig>,
    pub pm: Option<PmConfig>,
    pub team_constraint: bool,
    pub aggregation: Aggregation,
    pub thresholds: Vec<f64>,
    pub image_size: ImageSize,
    /// Border tolerance for the visible ground truth used in matching.
    pub border_tol: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            sv: None,
            pm: None,
            team_constraint: false,
            aggregation: Aggregation::BestQ(DEFAULT_Q),
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            image_size: ImageSize::REFERENCE,
            border_tol: DEFAULT_BORDER_TOLERANCE,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameRecord {
    pub frame: u64,
    pub mode: GtMode,
    pub n_real: usize,
    pub n_gt: usize,
    /// Passed the enabled filters.
    pub passed: bool,
    /// Aggregated error; `None` if nothing could be matched.
    pub error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub sv: bool,
    pub pm: bool,
    pub team_constraint: bool,
    pub total_frames: usize,
    /// Frames that passed the filters and produced an error value.
    pub kept_frames: usize,
    pub ratio: f64,
    pub d_mean: f64,
    pub d_median: f64,
    /// `(l, fraction of kept frames with error <= l)`.
    pub acc: Vec<(f64, f64)>,
    /// No frame was kept; metric values are NaN.
    pub empty: bool,
    pub frames: Vec<FrameRecord>,
}

impl MetricsReport {
    pub fn acc_at(&self, l: f64) -> Option<f64> {
        self.acc.iter().find(|(t, _)| *t == l).map(|a| a.1)
    }

    fn from_records(cfg: &EvalConfig, frames: Vec<FrameRecord>) -> Self {
        let errors: Vec<f64> = frames.iter().filter(|f| f.passed).filter_map(|f| f.error).collect();
        let total = frames.len();
        let kept = errors.len();
        let empty = kept == 0;
        let acc = cfg
            .thresholds
            .iter()
            .map(|&l| (l, if empty { f64::NAN } else { errors.iter().filter(|&&e| e <= l).count() as f64 / kept as f64 }))
            .collect();
        MetricsReport {
            sv: cfg.sv.is_some(),
            pm: cfg.pm.is_some(),
            team_constraint: cfg.team_constraint,
            total_frames: total,
            kept_frames: kept,
            ratio: if total == 0 { 0.0 } else { kept as f64 / total as f64 },
            d_mean: mean(&errors).unwrap_or(f64::NAN),
            d_median: median(&errors).unwrap_or(f64::NAN),
            acc,
            empty,
            frames,
        }
    }
}

struct PreparedFrame<'a> {
    frame: u64,
    mode: GtMode,
    passed: bool,
    n_real: usize,
    pred: Vec<(Point2<f64>, Option<Team>)>,
    gt: Vec<&'a GtPlayer>,
}

fn prepare<'a>(
    est: &FrameEstimate,
    gt: Option<&'a GroundTruthFrame>,
    field: &FieldTemplate<f64>,
    cfg: &EvalConfig,
) -> PreparedFrame<'a> {
    let players: &'a [GtPlayer] = gt.map_or(&[], |g| g.players.as_slice());
    let (mode, gt) = match &est.homography {
        Some(h) => (GtMode::Visible, visible_gt(players, h, cfg.image_size, cfg.border_tol)),
        None => (GtMode::All, players.iter().collect()),
    };
    let pred: Vec<_> = est.players.iter().filter_map(|p| p.position.map(|x| (x, p.team))).collect();
    let n_real = est.players.len();
    let mut passed = true;
    if let Some(sv) = &cfg.sv {
        let positions: Vec<_> = est.players.iter().map(|p| p.position).collect();
        passed &= est.homography.is_some() && self_verify(&positions, field, sv);
    }
    if let Some(pm) = &cfg.pm {
        let n_gt = match &est.homography {
            Some(h) => visible_gt(players, h, cfg.image_size, pm.border_tol).len(),
            None => 0,
        };
        passed &= pm_filter(n_real, n_gt, pm.zeta);
    }
    PreparedFrame { frame: est.frame, mode, passed, n_real, pred, gt }
}

fn unconstrained_error(f: &PreparedFrame, agg: Aggregation) -> Option<f64> {
    let pred: Vec<_> = f.pred.iter().map(|p| p.0).collect();
    let gt: Vec<_> = f.gt.iter().map(|g| g.position).collect();
    aggregate_frame(&hungarian_match(&pred, &gt).distances(), agg)
}

/// Frame error with predictions of team `t` matched to ground truth of
/// `mapping(t)`, averaged over the teams present on both sides.
fn team_error(f: &PreparedFrame, agg: Aggregation, swap: bool) -> Option<f64> {
    let mut per_team = Vec::new();
    for t in [Team::A, Team::B] {
        let target = if swap { t.other_team() } else { t };
        let pred: Vec<_> = f.pred.iter().filter(|p| p.1 == Some(t)).map(|p| p.0).collect();
        let gt: Vec<_> = f.gt.iter().filter(|g| g.team == target).map(|g| g.position).collect();
        if let Some(e) = aggregate_frame(&hungarian_match(&pred, &gt).distances(), agg) {
            per_team.push(e);
        }
    }
    mean(&per_team)
}

/// Report for one match. Estimates without a ground-truth frame are matched
/// against an empty set.
pub fn match_report(
    estimates: &[FrameEstimate],
    gt: &BTreeMap<u64, GroundTruthFrame>,
    field: &FieldTemplate<f64>,
    cfg: &EvalConfig,
) -> Result<MetricsReport> {
    if let Some(sv) = &cfg.sv {
        sv.validate()?;
    }
    if let Some(pm) = &cfg.pm {
        pm.validate()?;
    }
    let prepared: Vec<_> = estimates.iter().map(|e| prepare(e, gt.get(&e.frame), field, cfg)).collect();
    let records = |error: &dyn Fn(&PreparedFrame) -> Option<f64>| -> Vec<FrameRecord> {
        prepared
            .iter()
            .map(|f| FrameRecord {
                frame: f.frame,
                mode: f.mode,
                n_real: f.n_real,
                n_gt: f.gt.len(),
                passed: f.passed,
                error: if f.passed { error(f) } else { None },
            })
            .collect()
    };
    if !cfg.team_constraint {
        return Ok(MetricsReport::from_records(cfg, records(&|f| unconstrained_error(f, cfg.aggregation))));
    }
    let straight = MetricsReport::from_records(cfg, records(&|f| team_error(f, cfg.aggregation, false)));
    let swapped = MetricsReport::from_records(cfg, records(&|f| team_error(f, cfg.aggregation, true)));
    Ok(if swapped.d_mean < straight.d_mean || straight.empty && !swapped.empty { swapped } else { straight })
}

/// Unweighted mean over the non-empty per-match reports.
pub fn combine_reports(reports: &[MetricsReport]) -> Option<MetricsReport> {
    let first = reports.first()?;
    let used: Vec<&MetricsReport> = reports.iter().filter(|r| !r.empty).collect();
    let avg = |f: &dyn Fn(&MetricsReport) -> f64| mean(&used.iter().map(|r| f(r)).collect::<Vec<_>>()).unwrap_or(f64::NAN);
    Some(MetricsReport {
        sv: first.sv,
        pm: first.pm,
        team_constraint: first.team_constraint,
        total_frames: reports.iter().map(|r| r.total_frames).sum(),
        kept_frames: reports.iter().map(|r| r.kept_frames).sum(),
        ratio: mean(&reports.iter().map(|r| r.ratio).collect::<Vec<_>>()).unwrap_or(0.0),
        d_mean: avg(&|r| r.d_mean),
        d_median: avg(&|r| r.d_median),
        acc: first.acc.iter().enumerate().map(|(i, (l, _))| (*l, avg(&|r| r.acc[i].1))).collect(),
        empty: used.is_empty(),
        frames: Vec::new(),
    })
}

/// The six filter rows of the standard results table: no filter, sv, and
/// sv+pm, each without and with the team constraint.
pub fn standard_rows(base: &EvalConfig, sv: SvConfig, pm: PmConfig) -> Vec<EvalConfig> {
    let mut rows = Vec::new();
    for team_constraint in [false, true] {
        for (sv, pm) in [(None, None), (Some(sv), None), (Some(sv), Some(pm))] {
            rows.push(EvalConfig { sv, pm, team_constraint, ..base.clone() });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projection::PlayerEstimate;
    use proptest::prelude::*;

    #[test]
    fn pm_examples() {
        assert!(!pm_filter(6, 10, 0.3));
        assert!(pm_filter(10, 10, 0.3));
        assert!(!pm_filter(7, 10, 0.3));
        assert!(!pm_filter(13, 10, 0.3));
        assert!(pm_filter(12, 10, 0.3));
        assert!(!pm_filter(0, 0, 0.3));
    }

    #[test]
    fn aggregation_examples() {
        let d = [1.0, 1.0, 1.0, 1.0, 100.0];
        assert_eq!(aggregate_frame(&d, Aggregation::BestQ(0.8)), Some(1.0));
        assert_eq!(aggregate_frame(&d, Aggregation::Median), Some(1.0));
        assert_eq!(aggregate_frame(&d, Aggregation::Mean), Some(20.8));
        for m in [Aggregation::Mean, Aggregation::Median, Aggregation::BestQ(0.8)] {
            assert_eq!(aggregate_frame(&[2.0], m), Some(2.0));
            assert_eq!(aggregate_frame(&[], m), None);
        }
        assert_eq!(aggregate_frame(&[1.0, 4.0, 2.0, 3.0], Aggregation::Median), Some(2.5));
    }

    #[test]
    fn visibility() {
        let size = ImageSize::REFERENCE;
        let h = Homography::identity();
        let p = |x, y| GtPlayer { player_id: 0, team: Team::A, position: Point2::new(x, y) };
        let players = [p(640.0, 360.0), p(-0.04 * 1280.0, 360.0), p(-0.06 * 1280.0, 360.0)];
        let v = visible_gt(&players, &h, size, 0.05);
        assert_eq!(v.len(), 2);
        let pose = crate::camera::CameraPose::new(52.0, -45.0, 17.0, 3000.0, 0.0, -10.0);
        let hp = pose.homography(size).unwrap();
        let behind = [p(52.0, -60.0)];
        assert!(visible_gt(&behind, &hp, size, 0.05).is_empty());
    }

    fn estimate(frame: u64, pts: &[(f64, f64, Team)]) -> FrameEstimate {
        FrameEstimate {
            frame,
            homography: Some(Homography::scaling(10.0, 10.0).unwrap()),
            players: pts
                .iter()
                .enumerate()
                .map(|(i, &(x, y, t))| PlayerEstimate { position: Some(Point2::new(x, y)), detection_id: i, team: Some(t) })
                .collect(),
            kept: true,
        }
    }

    fn gt_frame(frame: u64, pts: &[(f64, f64, Team)]) -> GroundTruthFrame {
        GroundTruthFrame {
            frame,
            players: pts
                .iter()
                .enumerate()
                .map(|(i, &(x, y, team))| GtPlayer { player_id: i as u32, team, position: Point2::new(x, y) })
                .collect(),
        }
    }

    #[test]
    fn swapped_team_labels_are_resolved() {
        let field = FieldTemplate::standard(105.0, 68.0).unwrap();
        let g = [(10.0, 10.0, Team::A), (20.0, 20.0, Team::B), (30.0, 15.0, Team::A)];
        let swapped: Vec<_> = g.iter().map(|&(x, y, t)| (x, y, t.other_team())).collect();
        let gt: BTreeMap<_, _> = [(0, gt_frame(0, &g))].into();
        let cfg = EvalConfig { team_constraint: true, ..Default::default() };
        let r = match_report(&[estimate(0, &swapped)], &gt, &field, &cfg).unwrap();
        assert_eq!(r.d_mean, 0.0);
        assert_eq!(r.acc_at(2.0), Some(1.0));
    }

    #[test]
    fn one_team_missing_uses_the_other() {
        let field = FieldTemplate::standard(105.0, 68.0).unwrap();
        let g = [(10.0, 10.0, Team::A), (20.0, 20.0, Team::B)];
        let gt: BTreeMap<_, _> = [(0, gt_frame(0, &g))].into();
        let cfg = EvalConfig { team_constraint: true, aggregation: Aggregation::Mean, ..Default::default() };
        let r = match_report(&[estimate(0, &[(11.0, 10.0, Team::A)])], &gt, &field, &cfg).unwrap();
        assert_eq!(r.d_mean, 1.0);
        let r = match_report(&[estimate(0, &[])], &gt, &field, &cfg).unwrap();
        assert!(r.empty && r.kept_frames == 0);
    }

    #[test]
    fn sv_discards_everything() {
        let field = FieldTemplate::standard(105.0, 68.0).unwrap();
        let gt: BTreeMap<_, _> = [(0, gt_frame(0, &[(10.0, 10.0, Team::A)]))].into();
        let cfg = EvalConfig { sv: Some(SvConfig::default()), ..Default::default() };
        let r = match_report(&[estimate(0, &[(-50.0, 10.0, Team::A)])], &gt, &field, &cfg).unwrap();
        assert!(r.empty);
        assert_eq!(r.ratio, 0.0);
    }

    #[test]
    fn standard_rows_cover_the_table() {
        let rows = standard_rows(&EvalConfig::default(), SvConfig::default(), PmConfig::default());
        assert_eq!(rows.len(), 6);
        assert_eq!(rows.iter().filter(|r| r.team_constraint).count(), 3);
        assert_eq!(rows.iter().filter(|r| r.pm.is_some()).count(), 2);
    }

    proptest! {
        #[test]
        fn best_q_below_mean_and_monotone(d in prop::collection::vec(0.0f64..50.0, 1..30), q1 in 0.0f64..1.0, q2 in 0.0f64..1.0) {
            let (lo, hi) = (q1.min(q2), q1.max(q2));
            let m = aggregate_frame(&d, Aggregation::Mean).unwrap();
            let a = aggregate_frame(&d, Aggregation::BestQ(lo)).unwrap();
            let b = aggregate_frame(&d, Aggregation::BestQ(hi)).unwrap();
            prop_assert!(a <= b + 1e-12);
            prop_assert!(b <= m + 1e-12);
        }

        #[test]
        fn pm_keep_set_shrinks_with_zeta(n_real in 0usize..30, n_gt in 0usize..30, z1 in 0.0f64..0.99, z2 in 0.0f64..0.99) {
            let (lo, hi) = (z1.min(z2), z1.max(z2));
            if pm_filter(n_real, n_gt, lo) {
                prop_assert!(pm_filter(n_real, n_gt, hi));
            }
        }

        #[test]
        fn matching_cost_is_permutation_invariant(
            pred in prop::collection::vec((0.0f64..105.0, 0.0f64..68.0), 0..7),
            gt in prop::collection::vec((0.0f64..105.0, 0.0f64..68.0), 0..7),
            rot in 0usize..7,
        ) {
            let p: Vec<_> = pred.iter().map(|&(x, y)| Point2::new(x, y)).collect();
            let g: Vec<_> = gt.iter().map(|&(x, y)| Point2::new(x, y)).collect();
            let mut r = p.clone();
            if !r.is_empty() { let k = rot % r.len(); r.rotate_left(k); }
            let a = hungarian_match(&p, &g).total();
            let b = hungarian_match(&r, &g).total();
            prop_assert!((a - b).abs() < 1e-9);
            prop_assert_eq!(hungarian_match(&p, &g).pairs.len(), p.len().min(g.len()));
        }

        #[test]
        fn acc_thresholds_are_nested(errs in prop::collection::vec(0.0f64..6.0, 1..20)) {
            let field = FieldTemplate::standard(105.0, 68.0).unwrap();
            let mut gt = BTreeMap::new();
            let mut est = Vec::new();
            for (i, e) in errs.iter().enumerate() {
                gt.insert(i as u64, gt_frame(i as u64, &[(50.0, 30.0, Team::A)]));
                est.push(estimate(i as u64, &[(50.0 + e, 30.0, Team::A)]));
            }
            let r = match_report(&est, &gt, &field, &EvalConfig::default()).unwrap();
            prop_assert!(r.acc_at(2.0).unwrap() <= r.acc_at(3.0).unwrap());
        }
    }
}
