//! Small dense linear algebra over [`Real`] scalars: 3x3 matrices, linear solves
//! and the direct linear transform used to fit homographies.

use crate::error::{Error, Result};
use crate::num::Real;

pub type Mat3<T> = [[T; 3]; 3];

pub fn identity<T: Real>() -> Mat3<T> {
    let (o, z) = (T::one(), T::zero());
    [[o, z, z], [z, o, z], [z, z, o]]
}

pub fn mat_mul<T: Real>(a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut out = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

pub fn mat_vec<T: Real>(a: &Mat3<T>, v: [T; 3]) -> [T; 3] {
    [
        a[0][0] * v[0] + a[0][1] * v[1] + a[0][2] * v[2],
        a[1][0] * v[0] + a[1][1] * v[1] + a[1][2] * v[2],
        a[2][0] * v[0] + a[2][1] * v[1] + a[2][2] * v[2],
    ]
}

pub fn transpose<T: Real>(a: &Mat3<T>) -> Mat3<T> {
    let mut out = *a;
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i];
        }
    }
    out
}

pub fn det<T: Real>(a: &Mat3<T>) -> T {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

pub fn adjugate<T: Real>(a: &Mat3<T>) -> Mat3<T> {
    let c = |r0: usize, r1: usize, c0: usize, c1: usize| a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0];
    [
        [c(1, 2, 1, 2), -c(0, 2, 1, 2), c(0, 1, 1, 2)],
        [-c(1, 2, 0, 2), c(0, 2, 0, 2), -c(0, 1, 0, 2)],
        [c(1, 2, 0, 1), -c(0, 2, 0, 1), c(0, 1, 0, 1)],
    ]
}

pub fn frobenius<T: Real>(a: &Mat3<T>) -> T {
    a.iter().flatten().map(|&x| x * x).sum::<T>().sqrt()
}

pub fn scale<T: Real>(a: &Mat3<T>, s: T) -> Mat3<T> {
    let mut out = *a;
    out.iter_mut().flatten().for_each(|x| *x = *x * s);
    out
}

/// Solves the square system `a * x = b` in place by Gaussian elimination with
/// partial pivoting. `a` is row-major `n x n`.
pub fn solve<T: Real>(a: &mut [T], b: &mut [T], n: usize) -> Result<()> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let max_abs = a.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    if max_abs == T::zero() || !max_abs.is_finite() {
        return Err(Error::Singular);
    }
    let tiny = max_abs * T::epsilon() * T::from_count(n);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().partial_cmp(&a[j * n + col].abs()).unwrap())
            .unwrap();
        if a[pivot * n + col].abs() <= tiny {
            return Err(Error::Singular);
        }
        if pivot != col {
            for k in 0..n {
                a.swap(pivot * n + k, col * n + k);
            }
            b.swap(pivot, col);
        }
        let d = a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] / d;
            if f == T::zero() {
                continue;
            }
            for k in col..n {
                a[row * n + k] = a[row * n + k] - f * a[col * n + k];
            }
            b[row] = b[row] - f * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc = acc - a[col * n + k] * b[k];
        }
        b[col] = acc / a[col * n + col];
    }
    Ok(())
}

/// Least-squares solution of the overdetermined `rows x cols` system via
/// Householder QR. Returns `x` minimising `|a x - b|`.
pub fn least_squares<T: Real>(a: &mut [T], b: &mut [T], rows: usize, cols: usize) -> Result<Vec<T>> {
    if rows < cols {
        return Err(Error::InvalidArgument("underdetermined system".into()));
    }
    let max_abs = a.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    if max_abs == T::zero() {
        return Err(Error::Singular);
    }
    for k in 0..cols {
        let norm = (k..rows).map(|i| a[i * cols + k] * a[i * cols + k]).sum::<T>().sqrt();
        if norm <= max_abs * T::epsilon() * T::from_count(rows) {
            return Err(Error::Singular);
        }
        let alpha = if a[k * cols + k] > T::zero() { -norm } else { norm };
        // v = x - alpha e1, stored in column k below the diagonal
        a[k * cols + k] = a[k * cols + k] - alpha;
        let vnorm2 = (k..rows).map(|i| a[i * cols + k] * a[i * cols + k]).sum::<T>();
        if vnorm2 > T::zero() {
            for j in k + 1..cols {
                let dot = (k..rows).map(|i| a[i * cols + k] * a[i * cols + j]).sum::<T>();
                let f = (dot + dot) / vnorm2;
                for i in k..rows {
                    a[i * cols + j] = a[i * cols + j] - f * a[i * cols + k];
                }
            }
            let dot = (k..rows).map(|i| a[i * cols + k] * b[i]).sum::<T>();
            let f = (dot + dot) / vnorm2;
            for i in k..rows {
                b[i] = b[i] - f * a[i * cols + k];
            }
        }
        a[k * cols + k] = alpha;
    }
    let mut x = vec![T::zero(); cols];
    for k in (0..cols).rev() {
        let mut acc = b[k];
        for j in k + 1..cols {
            acc = acc - a[k * cols + j] * x[j];
        }
        x[k] = acc / a[k * cols + k];
    }
    Ok(x)
}

/// Similarity transform that moves the centroid of `pts` to the origin and
/// scales their mean distance to sqrt(2).
fn normalizer<T: Real>(pts: &[[T; 2]]) -> Mat3<T> {
    let n = T::from_count(pts.len());
    let cx = pts.iter().map(|p| p[0]).sum::<T>() / n;
    let cy = pts.iter().map(|p| p[1]).sum::<T>() / n;
    let mean_dist = pts.iter().map(|p| ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt()).sum::<T>() / n;
    let s = if mean_dist > T::zero() { T::SQRT_2() / mean_dist } else { T::one() };
    let z = T::zero();
    [[s, z, -s * cx], [z, s, -s * cy], [z, z, T::one()]]
}

/// Direct linear transform: fits the 3x3 matrix mapping `src[i]` to `dst[i]`
/// (projectively) from at least four correspondences, with Hartley
/// normalisation of both point sets.
pub fn fit_dlt<T: Real>(src: &[[T; 2]], dst: &[[T; 2]]) -> Result<Mat3<T>> {
    if src.len() != dst.len() || src.len() < 4 {
        return Err(Error::InvalidArgument("DLT needs at least four correspondences".into()));
    }
    let ts = normalizer(src);
    let td = normalizer(dst);
    let n = src.len();
    let mut a = vec![T::zero(); 2 * n * 8];
    let mut b = vec![T::zero(); 2 * n];
    for (i, (s, d)) in src.iter().zip(dst).enumerate() {
        let sp = mat_vec(&ts, [s[0], s[1], T::one()]);
        let dp = mat_vec(&td, [d[0], d[1], T::one()]);
        let (x, y, u, v) = (sp[0], sp[1], dp[0], dp[1]);
        let r0 = &mut a[(2 * i) * 8..(2 * i + 1) * 8];
        r0.copy_from_slice(&[x, y, T::one(), T::zero(), T::zero(), T::zero(), -u * x, -u * y]);
        b[2 * i] = u;
        let r1 = &mut a[(2 * i + 1) * 8..(2 * i + 2) * 8];
        r1.copy_from_slice(&[T::zero(), T::zero(), T::zero(), x, y, T::one(), -v * x, -v * y]);
        b[2 * i + 1] = v;
    }
    let h = if n == 4 {
        solve(&mut a, &mut b, 8)?;
        b
    } else {
        least_squares(&mut a, &mut b, 2 * n, 8)?
    };
    let hn = [[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], T::one()]];
    let td_inv = invert(&td)?;
    Ok(mat_mul(&mat_mul(&td_inv, &hn), &ts))
}

/// Plain inverse via the adjugate; fails when the determinant is negligible
/// relative to the matrix magnitude.
pub fn invert<T: Real>(a: &Mat3<T>) -> Result<Mat3<T>> {
    let d = det(a);
    let f = frobenius(a);
    if !d.is_finite() || f == T::zero() || d.abs() <= T::lit(1e-12) * f * f * f {
        return Err(Error::Singular);
    }
    Ok(scale(&adjugate(a), T::one() / d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_recovers_known_solution() {
        let mut a: Vec<f64> = vec![2.0, 1.0, -1.0, -3.0, -1.0, 2.0, -2.0, 1.0, 2.0];
        let mut b = vec![8.0, -11.0, -3.0];
        solve(&mut a, &mut b, 3).unwrap();
        for (x, e) in b.iter().zip([2.0, 3.0, -1.0]) {
            assert!((x - e).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_system_is_rejected() {
        let mut a = vec![1.0, 2.0, 2.0, 4.0];
        let mut b = vec![1.0, 2.0];
        assert!(matches!(solve(&mut a, &mut b, 2), Err(Error::Singular)));
        assert!(invert(&[[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 0.0, 1.0]]).is_err());
    }

    #[test]
    fn least_squares_fits_a_line() {
        // y = 2x + 1 sampled exactly
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let mut a: Vec<f64> = xs.iter().flat_map(|&x| [x, 1.0]).collect();
        let mut b: Vec<f64> = xs.iter().map(|&x| 2.0 * x + 1.0).collect();
        let sol = least_squares(&mut a, &mut b, 5, 2).unwrap();
        assert!((sol[0] - 2.0).abs() < 1e-12 && (sol[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let m: Mat3<f64> = [[1.5, 0.2, 3.0], [-0.4, 2.0, 1.0], [0.001, 0.002, 1.0]];
        let p = mat_mul(&m, &invert(&m).unwrap());
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((p[i][j] - e).abs() < 1e-12);
            }
        }
    }
}
