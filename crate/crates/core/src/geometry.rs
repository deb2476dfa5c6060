//! Planar projective geometry: points, image extents and homographies.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat3};
use crate::num::Real;

/// Projective depth below which a point is treated as lying on the line at infinity.
pub const DEPTH_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point2<T: Real = f64> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Point2<T> {
    pub fn new(x: T, y: T) -> Self {
        Point2 { x, y }
    }

    pub fn distance(&self, other: &Self) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn cast<U: Real>(self) -> Point2<U> {
        Point2::new(U::lit(self.x.as_f64()), U::lit(self.y.as_f64()))
    }
}

/// Image extent in pixels. Pixel `(i, j)` has its centre at image coordinate `(i, j)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ImageSize {
    pub width: u32,
    pub height: u32,
}

impl ImageSize {
    /// Reference resolution for rendered edge images and focal lengths.
    pub const REFERENCE: ImageSize = ImageSize { width: 1280, height: 720 };
    /// Resolution edge images are resized to before computing descriptors.
    pub const DESCRIPTOR: ImageSize = ImageSize { width: 320, height: 180 };

    pub const fn new(width: u32, height: u32) -> Self {
        ImageSize { width, height }
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn contains<T: Real>(&self, p: Point2<T>) -> bool {
        p.x >= T::zero() && p.y >= T::zero() && p.x <= T::from_count(self.width as usize) && p.y <= T::from_count(self.height as usize)
    }
}

/// Brings a 3x3 matrix to canonical scale: `h33 = 1` when `h33` is not
/// negligible, otherwise unit Frobenius norm.
pub fn canonicalize<T: Real>(m: &Mat3<T>) -> Mat3<T> {
    let f = linalg::frobenius(m);
    if f == T::zero() {
        return *m;
    }
    if m[2][2].abs() > T::lit(1e-12) * f {
        let mut out = linalg::scale(m, T::one() / m[2][2]);
        out[2][2] = T::one();
        out
    } else {
        linalg::scale(m, T::one() / f)
    }
}

/// Invertible projective map of the plane, kept at canonical scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Homography<T: Real = f64> {
    m: Mat3<T>,
}

impl<T: Real> Homography<T> {
    pub fn new(m: Mat3<T>) -> Result<Self> {
        if m.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Singular);
        }
        let c = canonicalize(&m);
        let f = linalg::frobenius(&c);
        if f == T::zero() || linalg::det(&c).abs() <= T::lit(1e-12) * f * f * f {
            return Err(Error::Singular);
        }
        Ok(Homography { m: c })
    }

    pub fn from_row_major(v: [T; 9]) -> Result<Self> {
        Self::new([[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]])
    }

    pub fn identity() -> Self {
        Homography { m: linalg::identity() }
    }

    /// Diagonal scaling `x' = sx x`, `y' = sy y`.
    pub fn scaling(sx: T, sy: T) -> Result<Self> {
        let z = T::zero();
        Self::new([[sx, z, z], [z, sy, z], [z, z, T::one()]])
    }

    pub fn translation(tx: T, ty: T) -> Self {
        let (o, z) = (T::one(), T::zero());
        Homography { m: [[o, z, tx], [z, o, ty], [z, z, o]] }
    }

    pub fn matrix(&self) -> &Mat3<T> {
        &self.m
    }

    pub fn to_row_major(&self) -> [T; 9] {
        let m = &self.m;
        [m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2]]
    }

    /// Homogeneous image of `p`, without division.
    #[inline]
    pub fn project(&self, p: Point2<T>) -> [T; 3] {
        linalg::mat_vec(&self.m, [p.x, p.y, T::one()])
    }

    /// Maps `p`, failing when its projective depth is within [`DEPTH_EPS`] of zero.
    pub fn apply(&self, p: Point2<T>) -> Result<Point2<T>> {
        let [x, y, w] = self.project(p);
        if w.abs() <= T::lit(DEPTH_EPS) || !w.is_finite() {
            return Err(Error::AtInfinity(w.as_f64()));
        }
        Ok(Point2::new(x / w, y / w))
    }

    pub fn inverse(&self) -> Result<Self> {
        Self::new(linalg::invert(&self.m)?)
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        Self::new(linalg::mat_mul(&self.m, &other.m))
    }

    /// Sign of the projective depth of points in front of the camera.
    ///
    /// Canonical scaling can flip the sign of the third row, so the
    /// orientation is recovered from the bottom-centre pixel of the image,
    /// which views the ground in front of any camera that sees the field.
    pub fn front_sign(&self, size: ImageSize) -> T {
        let inv = linalg::adjugate(&self.m);
        let d = linalg::det(&self.m);
        let r = linalg::mat_vec(&inv, [T::lit(size.width as f64 / 2.0), T::from_count(size.height as usize), T::one()]);
        let w = r[2] / d;
        if w < T::zero() {
            -T::one()
        } else {
            T::one()
        }
    }

    pub fn cast<U: Real>(&self) -> Homography<U> {
        let mut m = [[U::zero(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = U::lit(self.m[i][j].as_f64());
            }
        }
        Homography { m }
    }

    /// Largest absolute entry-wise difference between canonical forms.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.m.iter().flatten().zip(other.m.iter().flatten()).fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).abs()))
    }
}

impl<T: Real> Default for Homography<T> {
    fn default() -> Self {
        Self::identity()
    }
}

/// Fits a homography mapping `src[i]` to `dst[i]` by the normalised DLT.
pub fn fit_homography<T: Real>(src: &[Point2<T>], dst: &[Point2<T>]) -> Result<Homography<T>> {
    let s: Vec<[T; 2]> = src.iter().map(|p| [p.x, p.y]).collect();
    let d: Vec<[T; 2]> = dst.iter().map(|p| [p.x, p.y]).collect();
    Homography::new(linalg::fit_dlt(&s, &d)?)
}

/// Twice the signed area of the triangle `abc`.
pub fn cross<T: Real>(a: Point2<T>, b: Point2<T>, c: Point2<T>) -> T {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}
