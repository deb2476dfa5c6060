//! IoU of the camera-visible field regions under two homographies.

use crate::field::FieldTemplate;
use crate::geometry::{Homography, ImageSize, Point2};
use crate::num::Real;
use crate::polygon::{area, clip_convex, clip_half_plane, rectangle};

const DEPTH_EPS: f64 = 1e-9;

/// Part of the field rectangle that `h` (field to image) maps inside the
/// image in front of the camera, as a convex polygon in field coordinates.
///
/// With `(x, y, w) = h p` and `w` positive in front, each image border is an
/// affine half-plane in `p`, so the region is the field clipped by five
/// half-planes without mapping anything through the homography.
pub fn visible_field_region<T: Real>(h: &Homography<T>, size: ImageSize, template: &FieldTemplate<T>) -> Vec<Point2<f64>> {
    let h = h.cast::<f64>();
    let s = h.front_sign(size);
    let (wd, ht) = (size.width as f64, size.height as f64);
    let m = *h.matrix();
    let row = |i: usize| move |p: Point2<f64>| m[i][0] * p.x + m[i][1] * p.y + m[i][2];
    let (x, y, w) = (row(0), row(1), row(2));
    let mut poly = rectangle(0.0, 0.0, template.length.as_f64(), template.width.as_f64());
    let norm = (m[2][0].powi(2) + m[2][1].powi(2) + m[2][2].powi(2)).sqrt();
    poly = clip_half_plane(&poly, |p| s * w(p) - DEPTH_EPS * norm);
    poly = clip_half_plane(&poly, |p| s * x(p));
    poly = clip_half_plane(&poly, |p| s * (wd * w(p) - x(p)));
    poly = clip_half_plane(&poly, |p| s * y(p));
    poly = clip_half_plane(&poly, |p| s * (ht * w(p) - y(p)));
    if poly.len() < 3 {
        return Vec::new();
    }
    poly
}

/// Intersection over union of the visible field regions; 0 when the union is empty.
pub fn iou_part<T: Real>(h_pred: &Homography<T>, h_gt: &Homography<T>, size: ImageSize, template: &FieldTemplate<T>) -> f64 {
    let a = visible_field_region(h_pred, size, template);
    let b = visible_field_region(h_gt, size, template);
    let (area_a, area_b) = (area(&a), area(&b));
    if a.len() < 3 || b.len() < 3 {
        if area_a + area_b > 0.0 {
            return 0.0;
        }
        log::warn!("degenerate visible regions in IoU computation");
        return 0.0;
    }
    if a == b {
        return 1.0;
    }
    let inter = area(&clip_convex(&a, &b));
    let union = area_a + area_b - inter;
    if union <= 0.0 {
        log::warn!("empty union in IoU computation");
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}
