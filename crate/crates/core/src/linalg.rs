//! Fixed-size 2x2 and 3x3 helpers.

use crate::scalar::Real;

pub type V3<T> = [T; 3];
pub type M3<T> = [[T; 3]; 3];
pub type M2<T> = [[T; 2]; 2];

pub fn zeros3<T: Real>() -> M3<T> {
    [[T::zero(); 3]; 3]
}

pub fn identity3<T: Real>() -> M3<T> {
    let mut m = zeros3();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = T::one();
    }
    m
}

pub fn dot<T: Real>(a: &V3<T>, b: &V3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm<T: Real>(a: &V3<T>) -> T {
    dot(a, a).sqrt()
}

pub fn scale<T: Real>(a: &V3<T>, s: T) -> V3<T> {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn add<T: Real>(a: &V3<T>, b: &V3<T>) -> V3<T> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub<T: Real>(a: &V3<T>, b: &V3<T>) -> V3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn cross<T: Real>(a: &V3<T>, b: &V3<T>) -> V3<T> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn matvec<T: Real>(m: &M3<T>, v: &V3<T>) -> V3<T> {
    [dot(&m[0], v), dot(&m[1], v), dot(&m[2], v)]
}

pub fn transpose<T: Real>(m: &M3<T>) -> M3<T> {
    let mut r = zeros3();
    for i in 0..3 {
        for j in 0..3 {
            r[i][j] = m[j][i];
        }
    }
    r
}

pub fn matmul<T: Real>(a: &M3<T>, b: &M3<T>) -> M3<T> {
    let mut r = zeros3();
    for i in 0..3 {
        for j in 0..3 {
            r[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    r
}

/// Bilinear form `a^T m b`.
pub fn form<T: Real>(m: &M3<T>, a: &V3<T>, b: &V3<T>) -> T {
    dot(a, &matvec(m, b))
}

pub fn det3<T: Real>(m: &M3<T>) -> T {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub fn inverse3<T: Real>(m: &M3<T>) -> Option<M3<T>> {
    let d = det3(m);
    if d == T::zero() || !d.is_finite() {
        return None;
    }
    let mut r = zeros3();
    for i in 0..3 {
        for j in 0..3 {
            let (a, b) = ((j + 1) % 3, (j + 2) % 3);
            let (c, e) = ((i + 1) % 3, (i + 2) % 3);
            r[i][j] = (m[a][c] * m[b][e] - m[a][e] * m[b][c]) / d;
        }
    }
    Some(r)
}

/// Lower-triangular `L` with `m = L L^T`.
pub fn cholesky3<T: Real>(m: &M3<T>) -> Option<M3<T>> {
    let mut l = zeros3();
    for i in 0..3 {
        for j in 0..=i {
            let mut s = m[i][j];
            for k in 0..j {
                s = s - l[i][k] * l[j][k];
            }
            if i == j {
                if s <= T::zero() {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

pub fn max_abs3<T: Real>(m: &M3<T>) -> T {
    m.iter()
        .flat_map(|r| r.iter())
        .fold(T::zero(), |a, &b| a.max(b.abs()))
}

/// Symmetric eigen-decomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues ascending and the matrix whose columns are the
/// matching unit eigenvectors.
pub fn sym_eigen3<T: Real>(m: &M3<T>) -> (V3<T>, M3<T>) {
    let mut a = *m;
    let mut v = identity3::<T>();
    let scale = max_abs3(m).max(T::min_positive_value());
    for _sweep in 0..64 {
        let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
        if off <= T::epsilon() * T::c(1e-3) * scale {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            if a[p][q].abs() <= T::min_positive_value() {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (T::c(2.0) * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
            let c = T::one() / (t * t + T::one()).sqrt();
            let s = t * c;
            for k in 0..3 {
                let akp = a[k][p];
                let akq = a[k][q];
                a[k][p] = c * akp - s * akq;
                a[k][q] = s * akp + c * akq;
            }
            for k in 0..3 {
                let apk = a[p][k];
                let aqk = a[q][k];
                a[p][k] = c * apk - s * aqk;
                a[q][k] = s * apk + c * aqk;
            }
            for row in v.iter_mut() {
                let vkp = row[p];
                let vkq = row[q];
                row[p] = c * vkp - s * vkq;
                row[q] = s * vkp + c * vkq;
            }
        }
    }
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&i, &j| a[i][i].partial_cmp(&a[j][j]).unwrap_or(std::cmp::Ordering::Equal));
    let vals = [a[idx[0]][idx[0]], a[idx[1]][idx[1]], a[idx[2]][idx[2]]];
    let mut vecs = zeros3();
    for (col, &src) in idx.iter().enumerate() {
        for row in 0..3 {
            vecs[row][col] = v[row][src];
        }
    }
    (vals, vecs)
}

pub fn column<T: Real>(m: &M3<T>, j: usize) -> V3<T> {
    [m[0][j], m[1][j], m[2][j]]
}

/// Eigenvalues (descending) and the unit eigenvector of the larger one for a symmetric 2x2 matrix.
pub fn sym_eigen2<T: Real>(m: &M2<T>) -> (T, T, [T; 2]) {
    let half_tr = (m[0][0] + m[1][1]) * T::c(0.5);
    let a = (m[0][0] - m[1][1]) * T::c(0.5);
    let b = m[0][1];
    let r = a.hypot(b);
    let phi = b.atan2(a) * T::c(0.5);
    (half_tr + r, half_tr - r, [phi.cos(), phi.sin()])
}

/// Unit vector orthogonal to `x` built from the coordinate axis least aligned with it.
pub fn any_orthonormal<T: Real>(x: &V3<T>) -> V3<T> {
    let n = norm(x);
    let u = scale(x, T::one() / n);
    let mut best = 0;
    for k in 1..3 {
        if u[k].abs() < u[best].abs() {
            best = k;
        }
    }
    let mut e = [T::zero(); 3];
    e[best] = T::one();
    let w = sub(&e, &scale(&u, dot(&u, &e)));
    scale(&w, T::one() / norm(&w))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_reconstructs() {
        let m = [[2.0, -1.0, 0.5], [-1.0, 3.0, 0.25], [0.5, 0.25, -1.0]];
        let (l, e) = sym_eigen3(&m);
        assert!(l[0] <= l[1] && l[1] <= l[2]);
        let mut r = zeros3::<f64>();
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] = (0..3).map(|k| e[i][k] * l[k] * e[j][k]).sum();
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                assert!((r[i][j] - m[i][j]).abs() < 1e-13);
            }
        }
        let ete = matmul(&transpose(&e), &e);
        for i in 0..3 {
            for j in 0..3 {
                let d: f64 = if i == j { 1.0 } else { 0.0 };
                assert!((ete[i][j] - d).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn cholesky_and_inverse() {
        let m = [[4.0, 2.0, 0.0], [2.0, 5.0, 1.0], [0.0, 1.0, 3.0]];
        let l = cholesky3(&m).unwrap();
        let llt = matmul(&l, &transpose(&l));
        assert!(max_abs3(&[
            [llt[0][0] - m[0][0], llt[0][1] - m[0][1], llt[0][2] - m[0][2]],
            [llt[1][0] - m[1][0], llt[1][1] - m[1][1], llt[1][2] - m[1][2]],
            [llt[2][0] - m[2][0], llt[2][1] - m[2][1], llt[2][2] - m[2][2]],
        ]) < 1e-14);
        let inv = inverse3(&m).unwrap();
        let id = matmul(&m, &inv);
        for i in 0..3 {
            for j in 0..3 {
                let d: f64 = if i == j { 1.0 } else { 0.0 };
                assert!((id[i][j] - d).abs() < 1e-14);
            }
        }
        assert!(cholesky3(&[[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).is_none());
    }

    #[test]
    fn two_by_two_eigen() {
        let (l1, l2, v) = sym_eigen2(&[[1.0, 2.0], [2.0, -2.0]]);
        assert!((l1 + l2 - (-1.0f64)).abs() < 1e-14);
        assert!((l1 * l2 - (-6.0f64)).abs() < 1e-13);
        let mv = [v[0] + 2.0 * v[1], 2.0 * v[0] - 2.0 * v[1]];
        assert!((mv[0] - l1 * v[0]).abs() < 1e-13 && (mv[1] - l1 * v[1]).abs() < 1e-13);
    }
}
