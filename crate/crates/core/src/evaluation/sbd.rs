//! Shot boundary detection scores with a frame tolerance.

/// Precision, recall and F1 of predicted cuts against ground truth. Ground
/// truth cuts are visited in ascending order and each takes the earliest
/// unmatched prediction within `delta` frames, which yields a maximum
/// one-to-one matching. Empty denominators count as 1.
pub fn sbd_f1(pred: &[i64], gt: &[i64], delta: i64) -> (f64, f64, f64) {
    let matched = sbd_matches(pred, gt, delta);
    let ratio = |n: usize| if n == 0 { 1.0 } else { matched as f64 / n as f64 };
    let (p, r) = (ratio(pred.len()), ratio(gt.len()));
    let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f1)
}

pub fn sbd_matches(pred: &[i64], gt: &[i64], delta: i64) -> usize {
    let mut pred = pred.to_vec();
    pred.sort_unstable();
    let mut gt = gt.to_vec();
    gt.sort_unstable();
    let mut used = vec![false; pred.len()];
    let mut matched = 0;
    for g in gt {
        if let Some(i) = (0..pred.len()).find(|&i| !used[i] && (pred[i] - g).abs() <= delta) {
            used[i] = true;
            matched += 1;
        }
    }
    matched
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_edges() {
        assert_eq!(sbd_f1(&[10], &[12], 2), (1.0, 1.0, 1.0));
        assert_eq!(sbd_f1(&[10], &[13], 2), (0.0, 0.0, 0.0));
        assert_eq!(sbd_f1(&[10], &[10], 0), (1.0, 1.0, 1.0));
    }

    #[test]
    fn nearest_choice_would_lose_a_match() {
        assert_eq!(sbd_matches(&[5, 2], &[4, 5], 2), 2);
    }

    #[test]
    fn duplicates_match_once() {
        let (p, r, f) = sbd_f1(&[10, 10], &[10], 1);
        assert_eq!((p, r), (0.5, 1.0));
        assert!((f - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_sets() {
        assert_eq!(sbd_f1(&[], &[], 3), (1.0, 1.0, 1.0));
        assert_eq!(sbd_f1(&[], &[4], 3), (1.0, 0.0, 0.0));
        assert_eq!(sbd_f1(&[4], &[], 3), (0.0, 1.0, 0.0));
    }
}
