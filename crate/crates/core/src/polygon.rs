//! Convex polygon clipping and area.

use crate::geometry::{cross, Point2};
use crate::num::Real;

/// Signed shoelace area; positive for counter-clockwise vertex order.
pub fn signed_area<T: Real>(poly: &[Point2<T>]) -> T {
    if poly.len() < 3 {
        return T::zero();
    }
    let mut acc = T::zero();
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        acc = acc + a.x * b.y - b.x * a.y;
    }
    acc / T::lit(2.0)
}

pub fn area<T: Real>(poly: &[Point2<T>]) -> T {
    signed_area(poly).abs()
}

/// Keeps the part of `poly` where `f(p) >= 0`, for an affine function `f`.
pub fn clip_half_plane<T: Real, F: Fn(Point2<T>) -> T>(poly: &[Point2<T>], f: F) -> Vec<Point2<T>> {
    let mut out = Vec::with_capacity(poly.len() + 2);
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        let (fa, fb) = (f(a), f(b));
        if fa >= T::zero() {
            out.push(a);
        }
        if (fa >= T::zero()) != (fb >= T::zero()) {
            let t = fa / (fa - fb);
            out.push(Point2::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t));
        }
    }
    out
}

/// Sutherland-Hodgman clip of `subject` against the convex polygon `clip`
/// (either orientation).
pub fn clip_convex<T: Real>(subject: &[Point2<T>], clip: &[Point2<T>]) -> Vec<Point2<T>> {
    if clip.len() < 3 {
        return Vec::new();
    }
    let orient = if signed_area(clip) >= T::zero() { T::one() } else { -T::one() };
    let mut out = subject.to_vec();
    for i in 0..clip.len() {
        if out.is_empty() {
            break;
        }
        let (a, b) = (clip[i], clip[(i + 1) % clip.len()]);
        out = clip_half_plane(&out, |p| orient * cross(a, b, p));
    }
    out
}

/// Axis-aligned rectangle as a counter-clockwise polygon.
pub fn rectangle<T: Real>(x0: T, y0: T, x1: T, y1: T) -> Vec<Point2<T>> {
    vec![Point2::new(x0, y0), Point2::new(x1, y0), Point2::new(x1, y1), Point2::new(x0, y1)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlapping_squares() {
        let a = rectangle(0.0, 0.0, 2.0, 2.0);
        let b = rectangle(1.0, 1.0, 3.0, 3.0);
        assert_eq!(area(&clip_convex(&a, &b)), 1.0);
        let disjoint = rectangle(5.0, 5.0, 6.0, 6.0);
        assert_eq!(area(&clip_convex(&a, &disjoint)), 0.0);
    }

    #[test]
    fn clockwise_clip_polygon_is_handled() {
        let a = rectangle(0.0, 0.0, 2.0, 2.0);
        let mut b = rectangle(1.0, 0.0, 3.0, 2.0);
        b.reverse();
        assert_eq!(area(&clip_convex(&a, &b)), 2.0);
    }

    #[test]
    fn half_plane_cut_of_triangle() {
        let tri: Vec<Point2<f64>> = vec![Point2::new(0.0, 0.0), Point2::new(4.0, 0.0), Point2::new(0.0, 4.0)];
        let cut = clip_half_plane(&tri, |p| 2.0 - p.x);
        // area of triangle minus the corner triangle beyond x = 2
        assert!((area(&cut) - 6.0).abs() < 1e-12);
    }
}
