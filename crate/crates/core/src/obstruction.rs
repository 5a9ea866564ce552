//! Trace-free Jacobi data and the sixteenth-order point-wise obstruction.
//!
//! Directions are given by their components in the orthonormal frame of the
//! [`CurvaturePack`]. For a direction `X` with `X`-perp basis `{w1, w2}`:
//!
//! * `J̊(X) = J(X) - ½ tr J(X)` has matrix `((A, B), (B, -A))`,
//! * `J̊'(X)` is the trace-free part of `J'(X) = (∇_X R)(·, X)X`, entries `A1, B1`,
//! * `D1 = (∇_X ric)(X,X)`, `D2 = 2 tr(J̊J̊) + (∇²_{X,X} ric)(X,X)`,
//! * `P = tr(J̊J̊) D2 - tr(J̊J̊') D1`, `D = det(J̊J̊' - J̊'J̊)`,
//!
//! and the obstruction is `P² = D(-D1² - 4 tr(J̊J̊) ric(X,X))`.

use crate::curvature::{self, jacobi_from_riem, pack_at, ricci_rank, CurvaturePack, T4, T5};
use crate::error::{Error, Result};
use crate::linalg::{self, M2, M3, V3};
use crate::metric::MetricSpec;
use crate::riccati::integrate_geodesic;
use crate::scalar::Real;

/// Eigengap below which `J̊(X)` counts as isotropic.
pub const ISOTROPY_GAP: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct JacobiFrame<T> {
    /// Unit direction.
    pub x: V3<T>,
    pub w1: V3<T>,
    pub w2: V3<T>,
    pub a: T,
    pub b: T,
    /// `ric(X, X)`.
    pub t: T,
    pub isotropic: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivedJacobi<T> {
    pub a1: T,
    pub b1: T,
    /// `tr J'(X)`.
    pub trace: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObstructionValues<T> {
    pub a: T,
    pub b: T,
    pub a1: T,
    pub b1: T,
    pub ric_xx: T,
    pub d1: T,
    pub d2: T,
    /// `tr(J̊∘J̊)`.
    pub tr_jj: T,
    /// `tr(J̊∘J̊')`.
    pub tr_jjp: T,
    pub d: T,
    pub p: T,
    pub lhs: T,
    pub rhs: T,
    pub residual: T,
    pub scale: T,
}

impl<T: Real> ObstructionValues<T> {
    pub fn relative(&self) -> T {
        self.residual.abs() / self.scale
    }

    /// `A²(AD2 - D1A1)² + (AB1D1)² + 8(A²B1)² ric(X,X)`; equals `residual / 4` when `B = 0`.
    pub fn reduced_form(&self) -> T {
        let (a, a1, b1) = (self.a, self.a1, self.b1);
        let inner = a * self.d2 - self.d1 * a1;
        let q = a * b1 * self.d1;
        let w = a * a * b1;
        a * a * inner * inner + q * q + T::c(8.0) * w * w * self.ric_xx
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UCandidate<T> {
    pub frame: JacobiFrame<T>,
    pub a: T,
    pub b: T,
    pub d: T,
    pub consistency: T,
}

/// Trace-free 2x2 entries `(A, B)` of an operator restricted to `span{w1, w2}`, plus the trace.
fn restrict<T: Real>(m: &M3<T>, w1: &V3<T>, w2: &V3<T>) -> (T, T, T) {
    let m11 = linalg::dot(w1, &linalg::matvec(m, w1));
    let m22 = linalg::dot(w2, &linalg::matvec(m, w2));
    let m12 = linalg::dot(w2, &linalg::matvec(m, w1));
    let m21 = linalg::dot(w1, &linalg::matvec(m, w2));
    let half = T::c(0.5);
    ((m11 - m22) * half, (m12 + m21) * half, m11 + m22)
}

/// `J'(X) = (∇_X R)(·, X)X` as a frame matrix.
fn derived_operator<T: Real>(nabla_riem: &T5<T>, x: &V3<T>) -> M3<T> {
    let mut out = linalg::zeros3();
    for (m, t) in nabla_riem.iter().enumerate() {
        if x[m] == T::zero() {
            continue;
        }
        let jm = jacobi_from_riem(t, x);
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = out[i][j] + x[m] * jm[i][j];
            }
        }
    }
    out
}

fn basis_of_perp<T: Real>(x: &V3<T>) -> (V3<T>, V3<T>) {
    let u = linalg::scale(x, T::one() / linalg::norm(x));
    let w1 = linalg::any_orthonormal(&u);
    let w2 = linalg::cross(&u, &w1);
    (w1, w2)
}

/// Jacobi frame from a curvature tensor and Ricci form.
pub fn jacobi_frame_from<T: Real>(riem: &T4<T>, ric: &M3<T>, x: &V3<T>) -> Result<JacobiFrame<T>> {
    let n = linalg::norm(x);
    if n == T::zero() {
        return Err(Error::ZeroVector);
    }
    let u = linalg::scale(x, T::one() / n);
    let (w1, w2) = basis_of_perp(&u);
    let j = jacobi_from_riem(riem, &u);
    let (a, b, _) = restrict(&j, &w1, &w2);
    let t = linalg::form(ric, &u, &u);
    let (hi, lo, vec) = linalg::sym_eigen2(&[[a, b], [b, -a]]);
    if hi - lo < T::c(ISOTROPY_GAP) {
        return Ok(JacobiFrame {
            x: u,
            w1,
            w2,
            a: T::zero(),
            b: T::zero(),
            t,
            isotropic: true,
        });
    }
    let e1 = linalg::add(&linalg::scale(&w1, vec[0]), &linalg::scale(&w2, vec[1]));
    let e2 = linalg::cross(&u, &e1);
    Ok(JacobiFrame {
        x: u,
        w1: e1,
        w2: e2,
        a: hi,
        b: T::zero(),
        t,
        isotropic: false,
    })
}

/// Eigenbasis of `J̊(X)` in `X`-perp with `B = 0`, `A >= 0`.
pub fn jacobi_frame<T: Real>(pack: &CurvaturePack<T>, x: &V3<T>) -> Result<JacobiFrame<T>> {
    jacobi_frame_from(&pack.riem, &pack.ric, x)
}

/// Entries of `J̊'(X)` and `tr J'(X)` in the basis of `frame`.
pub fn derived_jacobi_direct<T: Real>(pack: &CurvaturePack<T>, frame: &JacobiFrame<T>) -> DerivedJacobi<T> {
    let jp = derived_operator(&pack.nabla_riem, &frame.x);
    let (a1, b1, trace) = restrict(&jp, &frame.w1, &frame.w2);
    DerivedJacobi { a1, b1, trace }
}

/// Obstruction invariants at the (not necessarily unit) direction `X`.
pub fn obstruction_values<T: Real>(pack: &CurvaturePack<T>, x: &V3<T>) -> Result<ObstructionValues<T>> {
    if linalg::norm(x) == T::zero() {
        return Err(Error::ZeroVector);
    }
    let (w1, w2) = basis_of_perp(x);
    Ok(values_in_basis(pack, x, &w1, &w2))
}

/// Same as [`obstruction_values`] but evaluated in the `J̊(X)` eigenbasis, where `B = 0`.
pub fn obstruction_values_eigenbasis<T: Real>(pack: &CurvaturePack<T>, x: &V3<T>) -> Result<ObstructionValues<T>> {
    let f = jacobi_frame(pack, x)?;
    Ok(values_in_basis(pack, x, &f.w1, &f.w2))
}

fn values_in_basis<T: Real>(pack: &CurvaturePack<T>, x: &V3<T>, w1: &V3<T>, w2: &V3<T>) -> ObstructionValues<T> {
    let two = T::c(2.0);
    let j = jacobi_from_riem(&pack.riem, x);
    let jp = derived_operator(&pack.nabla_riem, x);
    let (a, b, _) = restrict(&j, w1, w2);
    let (a1, b1, _) = restrict(&jp, w1, w2);
    let ric_xx = pack.ric_form(x, x);
    let d1 = pack.nabla_ric_form(x, x, x);
    let tr_jj = two * (a * a + b * b);
    let tr_jjp = two * (a * a1 + b * b1);
    let d2 = two * tr_jj + pack.nabla2_ric_form(x, x, x, x);
    let p = tr_jj * d2 - tr_jjp * d1;
    let m: M2<T> = [[a, b], [b, -a]];
    let mp: M2<T> = [[a1, b1], [b1, -a1]];
    let comm = sub2(&mul2(&m, &mp), &mul2(&mp, &m));
    let d = comm[0][0] * comm[1][1] - comm[0][1] * comm[1][0];
    let lhs = p * p;
    let rhs = d * (-d1 * d1 - T::c(4.0) * tr_jj * ric_xx);
    let residual = lhs - rhs;
    let scale = lhs.abs().max(rhs.abs()).max(T::one());
    ObstructionValues {
        a,
        b,
        a1,
        b1,
        ric_xx,
        d1,
        d2,
        tr_jj,
        tr_jjp,
        d,
        p,
        lhs,
        rhs,
        residual,
        scale,
    }
}

fn mul2<T: Real>(x: &M2<T>, y: &M2<T>) -> M2<T> {
    std::array::from_fn(|i| std::array::from_fn(|j| x[i][0] * y[0][j] + x[i][1] * y[1][j]))
}

fn sub2<T: Real>(x: &M2<T>, y: &M2<T>) -> M2<T> {
    std::array::from_fn(|i| std::array::from_fn(|j| x[i][j] - y[i][j]))
}

/// Trace-free shape operator forced by the two first-order jet conditions at a unit `X`.
pub fn reconstruct_u<T: Real>(pack: &CurvaturePack<T>, x: &V3<T>) -> Result<UCandidate<T>> {
    let frame = jacobi_frame(pack, x)?;
    let u = frame.x;
    let dj = derived_jacobi_direct(pack, &frame);
    let (a, b, a1, b1) = (frame.a, frame.b, dj.a1, dj.b1);
    let two = T::c(2.0);
    let d1 = pack.nabla_ric_form(&u, &u, &u);
    let d2 = two * two * (a * a + b * b) + pack.nabla2_ric_form(&u, &u, &u, &u);
    let d = a1 * b - a * b1;
    // Floors keep numerical noise on parallel-curvature metrics from passing as signal.
    let floor = T::c(1e-6) * (T::one() + max_abs4(&pack.riem) + max_abs5(&pack.nabla_riem));
    let n0 = (a * a + b * b).sqrt().max(floor);
    let n1 = (a1 * a1 + b1 * b1).sqrt().max(floor);
    let threshold = T::c(1e-10) * n0 * n1;
    if !(d.abs() > threshold) {
        return Err(Error::DegenerateSystem {
            d: d.to_f64_lossy(),
            threshold: threshold.to_f64_lossy(),
        });
    }
    let four_d = T::c(4.0) * d;
    let ua = (b * d2 - b1 * d1) / four_d;
    let ub = (-a * d2 + a1 * d1) / four_d;
    let consistency = (two * (ua * ua + ub * ub) + frame.t).abs();
    Ok(UCandidate {
        frame,
        a: ua,
        b: ub,
        d,
        consistency,
    })
}

fn max_abs4<T: Real>(t: &T4<T>) -> T {
    t.iter().flatten().flatten().flatten().fold(T::zero(), |m, v| m.max(v.abs()))
}

fn max_abs5<T: Real>(t: &T5<T>) -> T {
    t.iter().flatten().flatten().flatten().flatten().fold(T::zero(), |m, v| m.max(v.abs()))
}

/// Directions `w` with `J̊(w) = 0` for the curvature model with Ricci eigenvalues `(0, λ2, λ3)`.
pub fn null_jacobi_directions<T: Real>(l2: T, l3: T) -> Result<Vec<V3<T>>> {
    if l2 >= T::zero() || l3 >= T::zero() {
        return Err(Error::NonNegativeEigenvalue);
    }
    let z = T::zero();
    let one = T::one();
    Ok(if l2 == l3 {
        vec![[one, z, z], [-one, z, z]]
    } else if l2 < l3 {
        let c = (l3 / l2).sqrt();
        let s = ((l2 - l3) / l2).sqrt();
        vec![[c, s, z], [c, -s, z]]
    } else {
        let c = (l2 / l3).sqrt();
        let s = ((l3 - l2) / l3).sqrt();
        vec![[c, z, s], [c, z, -s]]
    })
}

/// Frobenius norm of `J̊(w)` on `w`-perp for a frame curvature tensor.
pub fn trace_free_jacobi_norm<T: Real>(riem: &T4<T>, w: &V3<T>) -> T {
    let (w1, w2) = basis_of_perp(w);
    let (a, b, _) = restrict(&jacobi_from_riem(riem, w), &w1, &w2);
    (T::c(2.0) * (a * a + b * b)).sqrt()
}

/// Quasi-uniform unit vectors on the sphere.
pub fn fibonacci_sphere(n: usize) -> Vec<V3<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * k as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// Deviations `(ΔA1, ΔB1)` between the direct derived-Jacobi entries and their
/// values from differentiating the eigenframe of `J̊(γ'(t))` along the geodesic
/// through `p` with initial direction `v` (frame components).
pub fn jet12_crosscheck(spec: &MetricSpec, p: V3<f64>, v: V3<f64>) -> Result<(f64, f64)> {
    let h = 1e-4;
    let pack0 = pack_at(spec, p)?;
    let vn = linalg::scale(&v, 1.0 / linalg::norm(&v));
    let f0 = jacobi_frame(&pack0, &vn)?;
    if f0.isotropic || 2.0 * f0.a < 1e-6 {
        return Err(Error::Precondition("isotropic direction: eigenframe of the trace-free Jacobi operator is undefined".into()));
    }
    let dj = derived_jacobi_direct(&pack0, &f0);
    let vc = pack0.coordinate_components(&vn);
    let w1c0 = pack0.coordinate_components(&f0.w1);
    let w2c0 = pack0.coordinate_components(&f0.w2);
    let mut a_at = [0.0; 2];
    let mut w1_at = [[0.0; 3]; 2];
    for (k, s) in [h, -h].into_iter().enumerate() {
        let path = integrate_geodesic(spec, p, vc, s, h / 4.0)?;
        let n = path.positions.len() - 1;
        let pk = pack_at(spec, path.positions[n])?;
        let vk = pk.frame_components(&path.velocities[n]);
        let fk = jacobi_frame(&pk, &vk)?;
        if fk.isotropic {
            return Err(Error::Precondition("eigengap closes along the geodesic".into()));
        }
        let mut w = pk.coordinate_components(&fk.w1);
        if linalg::form(&pack0.g, &w, &w1c0) < 0.0 {
            w = linalg::scale(&w, -1.0);
        }
        a_at[k] = fk.a;
        w1_at[k] = w;
    }
    let a1_fd = (a_at[0] - a_at[1]) / (2.0 * h);
    let gam = &pack0.christoffel;
    let dw: V3<f64> = std::array::from_fn(|j| {
        let mut acc = (w1_at[0][j] - w1_at[1][j]) / (2.0 * h);
        for k in 0..3 {
            for l in 0..3 {
                acc += gam[j][k][l].value() * vc[k] * w1c0[l];
            }
        }
        acc
    });
    let b1_fd = 2.0 * f0.a * linalg::form(&pack0.g, &dw, &w2c0);
    Ok(((a1_fd - dj.a1).abs(), (b1_fd - dj.b1).abs()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rank1Report {
    pub scal: f64,
    /// `e3(scal)`.
    pub lie_scal: f64,
    pub div_e3: f64,
    /// Trace-free part of `(L_{e3} g)` on the kernel plane.
    pub q: M2<f64>,
    pub q_eigenvalues: [f64; 2],
    /// `min_v |g(∇_v e3, v)² + scal/2|` over unit `v` in the kernel plane.
    pub u1_defect: f64,
    pub u1_max_defect: f64,
    /// Same extremes with `g(∇_v e3, v)` replaced by `½ Q(v, v)`.
    pub u1_defect_qform: f64,
    pub u1_max_defect_qform: f64,
    pub flagged: bool,
    /// `e3` in coordinates.
    pub e3: V3<f64>,
}

/// Unit coordinate eigenvector of the nonzero Ricci eigenvalue at `p`.
fn rank1_axis(spec: &MetricSpec, p: V3<f64>, tol: f64) -> Result<(CurvaturePack<f64>, usize, M3<f64>)> {
    let pack = pack_at(spec, p)?;
    let rep = ricci_rank(&pack, tol);
    if rep.rank != 1 {
        return Err(Error::Precondition(format!("Ricci rank is {} at the point, expected 1", rep.rank)));
    }
    let idx = if rep.eigenvalues[0].abs() > rep.eigenvalues[2].abs() { 0 } else { 2 };
    Ok((pack, idx, rep.eigenframe))
}

/// Rank-one checks: `e3(scal)`, `div e3`, the Lie derivative of `g` on the kernel plane and the
/// defect of `g(∇_v e3, v)² = -scal/2`.
pub fn rank1_checks(spec: &MetricSpec, p: V3<f64>, tol: f64) -> Result<Rank1Report> {
    let h = 1e-4;
    let (pack, idx, ef) = rank1_axis(spec, p, tol)?;
    let e3_on = linalg::column(&ef, idx);
    let e3 = pack.coordinate_components(&e3_on);
    let others: Vec<usize> = (0..3).filter(|&k| k != idx).collect();
    let f1 = pack.coordinate_components(&linalg::column(&ef, others[0]));
    let f2 = pack.coordinate_components(&linalg::column(&ef, others[1]));

    let mut de = [[0.0; 3]; 3]; // de[k][j] = ∂_k e3^j
    for k in 0..3 {
        let mut ends = [[0.0; 3]; 2];
        for (s, sign) in [1.0, -1.0].into_iter().enumerate() {
            let mut q = p;
            q[k] += sign * h;
            let (pk, ik, efk) = rank1_axis(spec, q, tol)?;
            let mut v = pk.coordinate_components(&linalg::column(&efk, ik));
            if linalg::form(&pack.g, &v, &e3) < 0.0 {
                v = linalg::scale(&v, -1.0);
            }
            ends[s] = v;
        }
        for j in 0..3 {
            de[k][j] = (ends[0][j] - ends[1][j]) / (2.0 * h);
        }
    }
    let gam = |j: usize, k: usize, l: usize| pack.christoffel[j][k][l].value();
    let mut div = 0.0;
    for k in 0..3 {
        div += de[k][k];
        for j in 0..3 {
            div += gam(k, k, j) * e3[j];
        }
    }
    let lie_scal = linalg::dot(&e3_on, &pack.dscal);
    let nabla = |y: &V3<f64>| -> V3<f64> {
        std::array::from_fn(|j| {
            let mut acc = 0.0;
            for k in 0..3 {
                acc += y[k] * de[k][j];
                for l in 0..3 {
                    acc += gam(j, k, l) * y[k] * e3[l];
                }
            }
            acc
        })
    };
    let fs = [f1, f2];
    let s: M2<f64> = std::array::from_fn(|a| std::array::from_fn(|b| linalg::form(&pack.g, &nabla(&fs[a]), &fs[b])));
    let sym: M2<f64> = std::array::from_fn(|a| std::array::from_fn(|b| s[a][b] + s[b][a]));
    let half_tr = 0.5 * (sym[0][0] + sym[1][1]);
    let q = [[sym[0][0] - half_tr, sym[0][1]], [sym[1][0], sym[1][1] - half_tr]];
    let (q_hi, q_lo, _) = linalg::sym_eigen2(&q);
    let (s_hi, s_lo, _) = linalg::sym_eigen2(&[[s[0][0], 0.5 * (s[0][1] + s[1][0])], [0.5 * (s[0][1] + s[1][0]), s[1][1]]]);
    let (min_d, max_d) = square_defect_range(s_lo, s_hi, pack.scal);
    let (min_q, max_q) = square_defect_range(0.5 * q_lo, 0.5 * q_hi, pack.scal);
    Ok(Rank1Report {
        scal: pack.scal,
        lie_scal,
        div_e3: div,
        q,
        q_eigenvalues: [q_hi, q_lo],
        u1_defect: min_d,
        u1_max_defect: max_d,
        u1_defect_qform: min_q,
        u1_max_defect_qform: max_q,
        flagged: max_d > 1e-6,
        e3,
    })
}

/// Extremes of `|s² + scal/2|` over `s ∈ [lo, hi]`.
fn square_defect_range(lo: f64, hi: f64, scal: f64) -> (f64, f64) {
    let c = -0.5 * scal;
    let f = |s: f64| (s * s - c).abs();
    let mut cands = vec![f(lo), f(hi)];
    if lo <= 0.0 && hi >= 0.0 {
        cands.push(f(0.0));
    }
    let mut min = cands.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = cands.iter().cloned().fold(0.0, f64::max);
    if c >= 0.0 {
        let r = c.sqrt();
        if (lo <= r && r <= hi) || (lo <= -r && -r <= hi) {
            min = 0.0;
        }
    }
    (min, max)
}

/// `A` entry of `J̊(X)` against the basis vector `w1` for a curvature model (no eigen-rotation).
pub fn trace_free_entry<T: Real>(riem: &T4<T>, ric: &M3<T>, x: &V3<T>, w1: &V3<T>) -> T {
    let j = curvature::jacobi_from_riem(riem, x);
    linalg::dot(w1, &linalg::matvec(&j, w1)) - T::c(0.5) * linalg::form(ric, x, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::riem_from_ricci;
    use crate::expr::Params;

    fn pk(name: &str, p: V3<f64>) -> CurvaturePack<f64> {
        pack_at(&MetricSpec::builtin(name, &Params::new()).unwrap(), p).unwrap()
    }

    #[test]
    fn space_forms_are_isotropic_and_unobstructed() {
        for (name, p, t) in [("flat", [0.1, 0.2, 0.3], 0.0), ("hyperbolic", [0.1, 0.2, 1.3], -2.0)] {
            let pack = pk(name, p);
            let x = [0.3, -0.5, 0.7];
            let f = jacobi_frame(&pack, &x).unwrap();
            assert!(f.isotropic);
            assert!((f.t - t).abs() < 1e-10);
            let dj = derived_jacobi_direct(&pack, &f);
            assert!(dj.a1.abs() < 1e-9 && dj.b1.abs() < 1e-9 && dj.trace.abs() < 1e-9);
            let ov = obstruction_values(&pack, &x).unwrap();
            assert!(ov.relative() < 1e-9);
            assert!(matches!(reconstruct_u(&pack, &x), Err(Error::DegenerateSystem { .. })));
        }
    }

    #[test]
    fn frame_invariants_on_heisenberg() {
        let pack = pk("heisenberg", [0.2, -0.4, 0.1]);
        let x = [0.2, 0.6, 0.7];
        let f = jacobi_frame(&pack, &x).unwrap();
        assert!(!f.isotropic && f.a >= 0.0);
        for (u, v) in [(f.x, f.w1), (f.x, f.w2), (f.w1, f.w2)] {
            assert!(linalg::dot(&u, &v).abs() < 1e-10);
        }
        let j = jacobi_from_riem(&pack.riem, &f.x);
        let m11 = linalg::dot(&f.w1, &linalg::matvec(&j, &f.w1));
        let m12 = linalg::dot(&f.w2, &linalg::matvec(&j, &f.w1));
        let m22 = linalg::dot(&f.w2, &linalg::matvec(&j, &f.w2));
        assert!((m11 - (f.t / 2.0 + f.a)).abs() < 1e-9);
        assert!((m22 - (f.t / 2.0 - f.a)).abs() < 1e-9);
        assert!(m12.abs() < 1e-9);
        let dj = derived_jacobi_direct(&pack, &f);
        assert!((dj.trace - pack.nabla_ric_form(&f.x, &f.x, &f.x)).abs() < 1e-8);
    }

    #[test]
    fn value_identities_and_reduced_form() {
        let pack = pk("heisenberg", [0.3, 0.1, -0.2]);
        for x in [[0.0, 1.0, 1.0], [0.4, -0.3, 0.8], [1.0, 0.2, 0.1]] {
            let ov = obstruction_values(&pack, &x).unwrap();
            let det = 4.0 * (ov.a * ov.b1 - ov.a1 * ov.b).powi(2);
            assert!((ov.d - det).abs() < 1e-8 * ov.scale);
            let p = 2.0 * ((ov.a * ov.a + ov.b * ov.b) * ov.d2 - (ov.a * ov.a1 + ov.b * ov.b1) * ov.d1);
            assert!((ov.p - p).abs() < 1e-8 * ov.scale);
            let ev = obstruction_values_eigenbasis(&pack, &x).unwrap();
            assert!((ev.residual - ov.residual).abs() < 1e-9 * ov.scale);
            assert!((4.0 * ev.reduced_form() - ev.residual).abs() < 1e-7 * ev.scale);
        }
        let ov = obstruction_values(&pack, &[0.0, 1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()]).unwrap();
        assert!(ov.relative() > 1e-3, "{}", ov.relative());
    }

    #[test]
    fn reconstructed_u_is_inconsistent_on_heisenberg() {
        let pack = pk("heisenberg", [0.3, 0.1, -0.2]);
        let u = reconstruct_u(&pack, &[0.4, -0.3, 0.8]).unwrap();
        assert!(u.consistency > 1e-6);
        let ov = obstruction_values(&pack, &[0.4, -0.3, 0.8]).unwrap();
        assert!(ov.relative() > 1e-6);
    }

    #[test]
    fn null_directions_kill_trace_free_jacobi() {
        for (l2, l3) in [(-2.0f64, -1.0f64), (-1.0, -2.0), (-1.0, -1.0), (-0.3, -5.0)] {
            let riem = riem_from_ricci(&[[0.0, 0.0, 0.0], [0.0, l2, 0.0], [0.0, 0.0, l3]]);
            let ws = null_jacobi_directions::<f64>(l2, l3).unwrap();
            for w in &ws {
                assert!((linalg::norm(w) - 1.0).abs() < 1e-14);
                assert!(trace_free_jacobi_norm(&riem, w) < 1e-12, "{l2} {l3}");
            }
        }
        let s = 0.5f64.sqrt();
        let w = null_jacobi_directions(-2.0, -1.0).unwrap();
        assert!((w[0][0] - s).abs() < 1e-15 && (w[0][1] - s).abs() < 1e-15);
        assert_eq!(null_jacobi_directions(-1.0, -1.0).unwrap().len(), 2);
        assert!(null_jacobi_directions(0.0, -1.0).is_err());
    }

    #[test]
    fn model_trace_free_entry() {
        let (l2, l3): (f64, f64) = (-2.0, -1.0);
        let ric = [[0.0, 0.0, 0.0], [0.0, l2, 0.0], [0.0, 0.0, l3]];
        let riem = riem_from_ricci(&ric);
        for (x, y) in [(1.0, 0.0), (0.3, 0.7), (-1.2, 0.4)] {
            let a = trace_free_entry(&riem, &ric, &[x, y, 0.0], &[0.0, 0.0, 1.0]);
            assert!((2.0 * a - ((l3 - l2) * x * x + l3 * y * y)).abs() < 1e-13);
        }
    }

    #[test]
    fn fibonacci_points_are_unit() {
        let d = fibonacci_sphere(64);
        assert_eq!(d.len(), 64);
        for v in d {
            assert!((linalg::norm(&v) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn jet_formula_matches_direct_derivative() {
        let spec = MetricSpec::builtin("heisenberg", &Params::new()).unwrap();
        let (da, db) = jet12_crosscheck(&spec, [0.2, 0.1, -0.3], [0.3, 0.5, 0.8]).unwrap();
        assert!(da < 1e-4 && db < 1e-4, "{da} {db}");
        let sol = MetricSpec::builtin("sol", &Params::new()).unwrap();
        let (da, db) = jet12_crosscheck(&sol, [0.1, 0.2, 0.3], [1.0, 0.0, 0.0]).unwrap();
        assert!(da < 1e-4 && db < 1e-4, "{da} {db}");
        let flat = MetricSpec::builtin("flat", &Params::new()).unwrap();
        assert!(matches!(jet12_crosscheck(&flat, [0.0; 3], [1.0, 0.0, 0.0]), Err(Error::Precondition(_))));
    }

    #[test]
    fn sol_rank_one_report() {
        let spec = MetricSpec::builtin("sol", &Params::new()).unwrap();
        let r = rank1_checks(&spec, [0.2, -0.1, 0.3], 1e-8).unwrap();
        assert!(r.lie_scal.abs() < 1e-9);
        assert!(r.div_e3.abs() < 1e-6);
        assert!((r.q_eigenvalues[0] - 2.0).abs() < 1e-6 && (r.q_eigenvalues[1] + 2.0).abs() < 1e-6);
        assert!(r.u1_defect.abs() < 1e-6);
        assert!((r.u1_max_defect - 1.0).abs() < 1e-6);
        assert!(r.flagged);
        let flat = MetricSpec::builtin("flat", &Params::new()).unwrap();
        assert!(rank1_checks(&flat, [0.0; 3], 1e-8).is_err());
    }
}
