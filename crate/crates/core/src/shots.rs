//! Main-camera shot classification from the per-shot mean homography change.

use crate::error::{Error, Result};
use crate::geometry::Homography;
use crate::num::Real;

pub const DEFAULT_TAU: f64 = 0.35;
/// Pair change charged when either frame has no homography.
pub const FAILED_PAIR_CHANGE: f64 = 3.0;

#[derive(Clone, Debug, PartialEq)]
pub struct ShotSegment<T: Real = f64> {
    pub start: u64,
    /// Inclusive.
    pub end: u64,
    /// One entry per frame; `None` marks a failed registration.
    pub homographies: Vec<Option<Homography<T>>>,
}

impl<T: Real> ShotSegment<T> {
    pub fn new(start: u64, end: u64, homographies: Vec<Option<Homography<T>>>) -> Result<Self> {
        if start > end || (end - start + 1) as usize != homographies.len() {
            return Err(Error::InvalidArgument(format!(
                "shot {start}..={end} does not match {} homographies",
                homographies.len()
            )));
        }
        Ok(ShotSegment { start, end, homographies })
    }

    pub fn len(&self) -> usize {
        self.homographies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.homographies.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShotLabel {
    MainCamera,
    Other,
}

impl ShotLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            ShotLabel::MainCamera => "main",
            ShotLabel::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "main" => Ok(ShotLabel::MainCamera),
            "other" => Ok(ShotLabel::Other),
            _ => Err(Error::Parse(format!("unknown shot label {s:?}"))),
        }
    }
}

/// Mean normalised change between consecutive frames. `None` if the shot
/// has fewer than two frames.
pub fn shot_change_score<T: Real>(homographies: &[Option<Homography<T>>]) -> Option<f64> {
    if homographies.len() < 2 {
        return None;
    }
    let entries: Vec<Option<[f64; 9]>> =
        homographies.iter().map(|h| h.map(|h| h.to_row_major().map(|v| v.as_f64()))).collect();
    let mut lo = [f64::INFINITY; 9];
    let mut hi = [f64::NEG_INFINITY; 9];
    for e in entries.iter().flatten() {
        for i in 0..9 {
            lo[i] = lo[i].min(e[i]);
            hi[i] = hi[i].max(e[i]);
        }
    }
    let normalize = |e: &[f64; 9]| -> [f64; 9] {
        std::array::from_fn(|i| if hi[i] > lo[i] { (e[i] - lo[i]) / (hi[i] - lo[i]) } else { 0.0 })
    };
    let total: f64 = entries
        .windows(2)
        .map(|w| match (&w[0], &w[1]) {
            (Some(a), Some(b)) => {
                let (a, b) = (normalize(a), normalize(b));
                a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
            }
            _ => FAILED_PAIR_CHANGE,
        })
        .sum();
    Some(total / (homographies.len() - 1) as f64)
}

/// Main camera iff the score is at most `tau`. Unscorable shots are `Other`.
pub fn classify_shot(score: Option<f64>, tau: f64) -> ShotLabel {
    match score {
        Some(s) if s <= tau => ShotLabel::MainCamera,
        _ => ShotLabel::Other,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShotClassification {
    pub start: u64,
    pub end: u64,
    pub score: Option<f64>,
    pub label: ShotLabel,
}

pub fn classify_segment<T: Real>(shot: &ShotSegment<T>, tau: f64) -> ShotClassification {
    let score = shot_change_score(&shot.homographies);
    ShotClassification { start: shot.start, end: shot.end, score, label: classify_shot(score, tau) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn h(v: [f64; 9]) -> Option<Homography<f64>> {
        Some(Homography::from_row_major(v).unwrap())
    }

    #[test]
    fn constant_shot_scores_zero() {
        let a = h([2.0, 0.1, 5.0, 0.0, 1.5, 3.0, 0.001, 0.0, 1.0]);
        assert_eq!(shot_change_score(&[a; 7]), Some(0.0));
    }

    #[test]
    fn alternating_shot_scores_sqrt_of_changed_entries() {
        let a = h([2.0, 0.1, 5.0, 0.0, 1.5, 3.0, 0.0, 0.0, 1.0]);
        let b = h([3.0, 0.1, 9.0, 0.0, 1.5, 1.0, 0.0, 0.0, 1.0]);
        let seq: Vec<_> = (0..9).map(|i| if i % 2 == 0 { a } else { b }).collect();
        assert!((shot_change_score(&seq).unwrap() - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn failed_frames_are_penalised() {
        let a = h([1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(shot_change_score(&[a, None, a]), Some(3.0));
        assert_eq!(shot_change_score(&[a, a, None]), Some(1.5));
        assert_eq!(shot_change_score::<f64>(&[a]), None);
    }

    #[test]
    fn threshold_is_inclusive() {
        assert_eq!(classify_shot(Some(0.0), DEFAULT_TAU), ShotLabel::MainCamera);
        assert_eq!(classify_shot(Some(0.35), DEFAULT_TAU), ShotLabel::MainCamera);
        assert_eq!(classify_shot(Some(0.36), DEFAULT_TAU), ShotLabel::Other);
        assert_eq!(classify_shot(None, DEFAULT_TAU), ShotLabel::Other);
    }

    #[test]
    fn segment_length_must_match() {
        assert!(ShotSegment::<f64>::new(3, 5, vec![None; 2]).is_err());
        assert!(ShotSegment::<f64>::new(3, 5, vec![None; 3]).is_ok());
    }

    proptest! {
        #[test]
        fn score_ignores_projective_scale(
            seq in prop::collection::vec(prop::array::uniform8(-2.0f64..2.0), 2..12),
            scales in prop::collection::vec(0.1f64..10.0, 12),
        ) {
            let hs: Vec<_> = seq.iter().map(|e| {
                let mut v = [0.0; 9];
                v[..8].copy_from_slice(e);
                v[0] += 5.0; v[4] += 5.0; v[8] = 1.0;
                Homography::from_row_major(v).ok()
            }).collect();
            let scaled: Vec<_> = hs.iter().zip(&scales).map(|(h, &s)| h.map(|h| {
                Homography::new(crate::linalg::scale(h.matrix(), s)).unwrap()
            })).collect();
            let (a, b) = (shot_change_score(&hs).unwrap(), shot_change_score(&scaled).unwrap());
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
