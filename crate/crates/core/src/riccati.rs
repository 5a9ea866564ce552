//! Geodesics with parallel frames and the matrix Riccati equation `u' + u² + J = 0`.

use crate::curvature::{christoffel_values, coordinate_curvature, metric_jets_order, pack_at, T3};
use crate::error::{Error, Result};
use crate::linalg::{self, M2, V3};
use crate::metric::MetricSpec;
use crate::obstruction::{derived_jacobi_direct, jacobi_frame};
use crate::scalar::Real;

/// `‖u‖` beyond which a trajectory counts as blown up.
pub const BLOWUP_NORM: f64 = 1e8;

/// Geodesic samples with a parallel orthonormal frame of `γ'`-perp (coordinate components).
#[derive(Clone, Debug)]
pub struct GeodesicPath<T> {
    pub dt: T,
    pub times: Vec<T>,
    pub positions: Vec<V3<T>>,
    pub velocities: Vec<V3<T>>,
    pub w1: Vec<V3<T>>,
    pub w2: Vec<V3<T>>,
}

type State<T> = [V3<T>; 4];

fn rhs<T: Real>(gam: &T3<T>, s: &State<T>) -> State<T> {
    let v = s[1];
    let transport = |w: &V3<T>| -> V3<T> {
        std::array::from_fn(|k| {
            let mut acc = T::zero();
            for i in 0..3 {
                for j in 0..3 {
                    acc = acc + gam[k][i][j] * v[i] * w[j];
                }
            }
            -acc
        })
    };
    [v, transport(&v), transport(&s[2]), transport(&s[3])]
}

fn axpy<T: Real>(s: &State<T>, k: &State<T>, h: T) -> State<T> {
    std::array::from_fn(|a| std::array::from_fn(|i| s[a][i] + k[a][i] * h))
}

fn christoffel_at<T: Real>(spec: &MetricSpec, x: V3<T>) -> Result<T3<T>> {
    christoffel_values(&metric_jets_order(spec, x, 1)?)
}

/// Number of steps covering `|t_end|` with step at most `dt`, rounded up to an even count.
pub fn even_steps(t_end: f64, dt: f64) -> usize {
    let n = (t_end.abs() / dt).ceil().max(1.0) as usize;
    n + n % 2
}

/// RK4 integration of the geodesic and parallel-transport equations from `p` with coordinate
/// velocity `v` (unit for `g`) to time `t_end` (may be negative).
pub fn integrate_geodesic<T: Real>(spec: &MetricSpec, p: V3<T>, v: V3<T>, t_end: T, dt: T) -> Result<GeodesicPath<T>> {
    if !(dt > T::zero()) {
        return Err(Error::Precondition("step size must be positive".into()));
    }
    let m0 = metric_jets_order(spec, p, 0)?;
    let g0 = m0.value();
    let speed = linalg::form(&g0, &v, &v);
    if (speed - T::one()).abs() > T::c(1e-10) {
        return Err(Error::Precondition(format!("initial velocity has g(v,v) = {}", speed)));
    }
    let l = linalg::cholesky3(&g0).ok_or(Error::NotPositiveDefinite(0.0))?;
    let lt = linalg::transpose(&l);
    let e = linalg::inverse3(&lt).ok_or(Error::NotPositiveDefinite(0.0))?;
    let v_on = linalg::matvec(&lt, &v);
    let w1_on = linalg::any_orthonormal(&v_on);
    let w2_on = linalg::cross(&v_on, &w1_on);
    let n = even_steps(t_end.to_f64_lossy(), dt.to_f64_lossy());
    let h = t_end / T::c(n as f64);
    let mut s: State<T> = [p, v, linalg::matvec(&e, &w1_on), linalg::matvec(&e, &w2_on)];
    let mut path = GeodesicPath {
        dt: h,
        times: Vec::with_capacity(n + 1),
        positions: Vec::with_capacity(n + 1),
        velocities: Vec::with_capacity(n + 1),
        w1: Vec::with_capacity(n + 1),
        w2: Vec::with_capacity(n + 1),
    };
    let half = T::c(0.5);
    let sixth = T::one() / T::c(6.0);
    for step in 0..=n {
        path.times.push(h * T::c(step as f64));
        path.positions.push(s[0]);
        path.velocities.push(s[1]);
        path.w1.push(s[2]);
        path.w2.push(s[3]);
        if step == n {
            break;
        }
        let k1 = rhs(&christoffel_at(spec, s[0])?, &s);
        let s2 = axpy(&s, &k1, h * half);
        let k2 = rhs(&christoffel_at(spec, s2[0])?, &s2);
        let s3 = axpy(&s, &k2, h * half);
        let k3 = rhs(&christoffel_at(spec, s3[0])?, &s3);
        let s4 = axpy(&s, &k3, h);
        let k4 = rhs(&christoffel_at(spec, s4[0])?, &s4);
        s = std::array::from_fn(|a| {
            std::array::from_fn(|i| s[a][i] + h * sixth * (k1[a][i] + T::c(2.0) * (k2[a][i] + k3[a][i]) + k4[a][i]))
        });
    }
    Ok(path)
}

/// Energy and frame-orthonormality drift `(max |g(γ',γ') - 1|, max frame Gram deviation)`.
pub fn path_drift<T: Real>(spec: &MetricSpec, path: &GeodesicPath<T>) -> Result<(T, T)> {
    let mut energy = T::zero();
    let mut ortho = T::zero();
    for k in 0..path.times.len() {
        let g = metric_jets_order(spec, path.positions[k], 0)?.value();
        let vs = [path.velocities[k], path.w1[k], path.w2[k]];
        energy = energy.max((linalg::form(&g, &vs[0], &vs[0]) - T::one()).abs());
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { T::one() } else { T::zero() };
                ortho = ortho.max((linalg::form(&g, &vs[i], &vs[j]) - want).abs());
            }
        }
    }
    Ok((energy, ortho))
}

/// `J(t)_{ab} = g(R(w_a, γ')γ', w_b)` in the parallel frame at every sample.
pub fn jacobi_along<T: Real>(spec: &MetricSpec, path: &GeodesicPath<T>) -> Result<Vec<M2<T>>> {
    let mut out = Vec::with_capacity(path.times.len());
    for k in 0..path.times.len() {
        let m = metric_jets_order(spec, path.positions[k], 2)?;
        let g = m.value();
        let (_, r) = coordinate_curvature(&m)?;
        let v = path.velocities[k];
        let ws = [path.w1[k], path.w2[k]];
        let jw: Vec<V3<T>> = ws
            .iter()
            .map(|w| {
                std::array::from_fn(|l| {
                    let mut acc = T::zero();
                    for i in 0..3 {
                        for j in 0..3 {
                            for kk in 0..3 {
                                acc = acc + r[l][i][j][kk] * w[i] * v[j] * v[kk];
                            }
                        }
                    }
                    acc
                })
            })
            .collect();
        out.push(std::array::from_fn(|a| std::array::from_fn(|b| linalg::form(&g, &jw[a], &ws[b]))));
    }
    Ok(out)
}

/// Riccati sample: `u = ((u11, u12), (u12, u22))` in the parallel frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RiccatiState<T> {
    pub t: T,
    pub u: [T; 3],
    pub trace_defect: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RiccatiRun<T> {
    pub states: Vec<RiccatiState<T>>,
    /// Path sample index of each state.
    pub sample_index: Vec<usize>,
    pub max_trace_defect: T,
    /// Times bracketing the crossing of [`BLOWUP_NORM`].
    pub blowup: Option<(T, T)>,
}

impl<T: Real> RiccatiRun<T> {
    pub fn blowup_time(&self) -> Option<T> {
        self.blowup.map(|(_, hi)| hi)
    }
}

fn unorm<T: Real>(u: &[T; 3]) -> T {
    (u[0] * u[0] + T::c(2.0) * u[1] * u[1] + u[2] * u[2]).sqrt()
}

fn ric_rhs<T: Real>(u: &[T; 3], j: &M2<T>) -> [T; 3] {
    let (a, b, c) = (u[0], u[1], u[2]);
    [
        -(a * a + b * b) - j[0][0],
        -(a * b + b * c) - T::c(0.5) * (j[0][1] + j[1][0]),
        -(b * b + c * c) - j[1][1],
    ]
}

/// Quadratic interpolation through samples at `0, 1, 2` (in units of the path step).
fn interp<T: Real>(js: &[M2<T>; 3], s: T) -> M2<T> {
    let one = T::one();
    let two = T::c(2.0);
    let l0 = (s - one) * (s - two) / two;
    let l1 = -s * (s - two);
    let l2 = s * (s - one) / two;
    std::array::from_fn(|a| std::array::from_fn(|b| l0 * js[0][a][b] + l1 * js[1][a][b] + l2 * js[2][a][b]))
}

/// RK4 for `u' = -u² - J` with step `2·path.dt`, midpoints taken from the intermediate samples.
/// Steps are subdivided so that `h‖u‖ ≤ 0.5`; the run stops at the first blow-up.
pub fn integrate_riccati<T: Real>(path: &GeodesicPath<T>, js: &[M2<T>], u0: M2<T>, t_end: T) -> RiccatiRun<T> {
    let mut u = [u0[0][0], T::c(0.5) * (u0[0][1] + u0[1][0]), u0[1][1]];
    let h = path.dt;
    let last = ((t_end / h).to_f64_lossy().round().max(0.0) as usize).min(js.len().saturating_sub(1));
    let last = last - last % 2;
    let mut run = RiccatiRun {
        states: vec![RiccatiState {
            t: path.times[0],
            u,
            trace_defect: (u[0] + u[2]).abs(),
        }],
        sample_index: vec![0],
        max_trace_defect: (u[0] + u[2]).abs(),
        blowup: None,
    };
    let limit = T::c(BLOWUP_NORM);
    let half = T::c(0.5);
    let sixth = T::one() / T::c(6.0);
    let mut k = 0;
    while k < last {
        let win = [js[k], js[k + 1], js[k + 2]];
        let mut s = T::zero();
        let mut t_prev = path.times[k];
        while s < T::c(2.0) {
            let n = unorm(&u).max(T::c(1e-300));
            let ds = (T::c(2.0) - s).min(half / (n * h.abs()));
            let step = ds * h;
            let k1 = ric_rhs(&u, &interp(&win, s));
            let jm = interp(&win, s + ds * half);
            let u2: [T; 3] = std::array::from_fn(|i| u[i] + step * half * k1[i]);
            let k2 = ric_rhs(&u2, &jm);
            let u3: [T; 3] = std::array::from_fn(|i| u[i] + step * half * k2[i]);
            let k3 = ric_rhs(&u3, &jm);
            let u4: [T; 3] = std::array::from_fn(|i| u[i] + step * k3[i]);
            let k4 = ric_rhs(&u4, &interp(&win, s + ds));
            u = std::array::from_fn(|i| u[i] + step * sixth * (k1[i] + T::c(2.0) * (k2[i] + k3[i]) + k4[i]));
            s = if ds == T::c(2.0) - s { T::c(2.0) } else { s + ds };
            let t_now = path.times[k] + s * h;
            if !(unorm(&u) <= limit) {
                run.blowup = Some((t_prev, t_now));
                return run;
            }
            t_prev = t_now;
        }
        k += 2;
        let defect = (u[0] + u[2]).abs();
        run.max_trace_defect = run.max_trace_defect.max(defect);
        run.states.push(RiccatiState {
            t: path.times[k],
            u,
            trace_defect: defect,
        });
        run.sample_index.push(k);
    }
    run
}

/// One grid candidate of [`constrained_probe`].
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeCandidate {
    pub a: f64,
    pub b: f64,
    /// `2 tr(u0 J) - tr J'`.
    pub r1: f64,
    /// `2 tr(u0 J') - (2 tr(J²) - ric(v,v)² + (∇²_{v,v} ric)(v,v))`.
    pub r2: f64,
    /// `|tr(u0²) + tr J|`.
    pub zero_order_defect: f64,
    pub max_trace_defect: f64,
    pub blowup_time: Option<f64>,
}

impl ProbeCandidate {
    pub fn score(&self) -> f64 {
        self.r1.abs() + self.r2.abs() + self.zero_order_defect
    }

    /// Satisfies both jet conditions and keeps a trace-free trajectory to `tol`.
    pub fn admissible(&self, tol: f64) -> bool {
        self.r1.abs() < tol && self.r2.abs() < tol && self.max_trace_defect < tol && self.blowup_time.is_none()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeReport {
    pub radius: f64,
    pub candidates: Vec<ProbeCandidate>,
    pub best: usize,
    /// Best candidate has `|tr(u0²) + tr J| > 1e-6`.
    pub zero_order_flag: bool,
}

impl ProbeReport {
    pub fn best(&self) -> &ProbeCandidate {
        &self.candidates[self.best]
    }
}

/// Scans trace-free `u0 = ((a, b), (b, -a))` over a grid, checks the first jet conditions at
/// `t = 0` and integrates each candidate to `t_end`. `v` is a `g`-unit coordinate vector.
pub fn constrained_probe(
    spec: &MetricSpec,
    p: V3<f64>,
    v: V3<f64>,
    t_end: f64,
    dt: f64,
    grid_radius: Option<f64>,
    grid_n: usize,
) -> Result<ProbeReport> {
    let path = integrate_geodesic(spec, p, v, t_end, dt)?;
    let js = jacobi_along(spec, &path)?;
    let pack = pack_at(spec, p)?;
    let vo = pack.frame_components(&v);
    let w1 = pack.frame_components(&path.w1[0]);
    let w2 = pack.frame_components(&path.w2[0]);
    let f0 = jacobi_frame(&pack, &vo)?;
    // Express J'(v) in the parallel frame basis at t = 0.
    let frame = crate::obstruction::JacobiFrame {
        x: f0.x,
        w1,
        w2,
        a: f0.a,
        b: f0.b,
        t: f0.t,
        isotropic: f0.isotropic,
    };
    let dj = derived_jacobi_direct(&pack, &frame);
    let a1 = dj.a1;
    let b1 = dj.b1;
    let j0 = js[0];
    let jp: M2<f64> = [[0.5 * dj.trace + a1, b1], [b1, 0.5 * dj.trace - a1]];
    let ric = pack.ric_form(&vo, &vo);
    let n2 = pack.nabla2_ric_form(&vo, &vo, &vo, &vo);
    let tr = |m: &M2<f64>| m[0][0] + m[1][1];
    let mul = |x: &M2<f64>, y: &M2<f64>| -> M2<f64> {
        std::array::from_fn(|i| std::array::from_fn(|j| x[i][0] * y[0][j] + x[i][1] * y[1][j]))
    };
    let tr_j = tr(&j0);
    let tr_jp = tr(&jp);
    let tr_j2 = tr(&mul(&j0, &j0));
    let radius = grid_radius.unwrap_or_else(|| 2.0 * (0.0f64.max(-ric) / 2.0).sqrt());
    let n = grid_n.max(1);
    let mut candidates = Vec::with_capacity(n * n);
    for i in 0..n {
        for k in 0..n {
            let coord = |idx: usize| if n == 1 { 0.0 } else { -radius + 2.0 * radius * idx as f64 / (n - 1) as f64 };
            let (a, b) = (coord(i), coord(k));
            let u0: M2<f64> = [[a, b], [b, -a]];
            let r1 = 2.0 * tr(&mul(&u0, &j0)) - tr_jp;
            let r2 = 2.0 * tr(&mul(&u0, &jp)) - (2.0 * tr_j2 - ric * ric + n2);
            let run = integrate_riccati(&path, &js, u0, t_end);
            candidates.push(ProbeCandidate {
                a,
                b,
                r1,
                r2,
                zero_order_defect: (2.0 * (a * a + b * b) + tr_j).abs(),
                max_trace_defect: run.max_trace_defect,
                blowup_time: run.blowup_time(),
            });
        }
    }
    let best = (0..candidates.len())
        .min_by(|&x, &y| candidates[x].score().total_cmp(&candidates[y].score()))
        .unwrap_or(0);
    let zero_order_flag = candidates[best].zero_order_defect > 1e-6;
    Ok(ProbeReport {
        radius,
        candidates,
        best,
        zero_order_flag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Params;

    fn spec(name: &str) -> MetricSpec {
        MetricSpec::builtin(name, &Params::new()).unwrap()
    }

    #[test]
    fn flat_geodesic_is_a_line() {
        let path = integrate_geodesic::<f64>(&spec("flat"), [0.1, 0.2, 0.3], [0.6, 0.8, 0.0], 1.0, 0.1).unwrap();
        let end = path.positions.last().unwrap();
        assert!((end[0] - 0.7).abs() < 1e-14 && (end[1] - 1.0).abs() < 1e-14);
        assert_eq!(path.w1.first(), path.w1.last());
        assert_eq!(path.times.len() % 2, 1);
    }

    #[test]
    fn vertical_hyperbolic_geodesic() {
        let z0 = 1.3;
        let path = integrate_geodesic::<f64>(&spec("hyperbolic"), [0.0, 0.0, z0], [0.0, 0.0, z0], 1.0, 1e-3).unwrap();
        let end = path.positions.last().unwrap();
        assert!((end[2] - z0 * 1f64.exp()).abs() < 1e-8);
        let (e, o) = path_drift(&spec("hyperbolic"), &path).unwrap();
        assert!(e < 1e-8 && o < 1e-8);
    }

    #[test]
    fn sphere_great_circle_closes() {
        let s = spec("sphere");
        // The coordinate unit circle is a great circle; g = I on it.
        let path = integrate_geodesic::<f64>(&s, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 2.0 * std::f64::consts::PI, 1e-3).unwrap();
        let end = path.positions.last().unwrap();
        assert!(linalg::norm(&linalg::sub(end, &[1.0, 0.0, 0.0])) < 1e-6, "{end:?}");
    }

    #[test]
    fn hyperbolic_jacobi_is_minus_identity() {
        let s = spec("hyperbolic");
        let path = integrate_geodesic::<f64>(&s, [0.1, 0.0, 1.0], [0.6, 0.0, 0.8], 1.0, 0.01).unwrap();
        for j in jacobi_along(&s, &path).unwrap() {
            assert!((j[0][0] + 1.0).abs() < 1e-9 && (j[1][1] + 1.0).abs() < 1e-9 && j[0][1].abs() < 1e-9);
        }
    }

    #[test]
    fn flat_blowup_at_one() {
        let s = spec("flat");
        let path = integrate_geodesic::<f64>(&s, [0.0; 3], [1.0, 0.0, 0.0], 2.0, 1e-3).unwrap();
        let js = jacobi_along(&s, &path).unwrap();
        let run = integrate_riccati(&path, &js, [[1.0, 0.0], [0.0, -1.0]], 2.0);
        let t = run.blowup_time().unwrap();
        assert!((t - 1.0).abs() < 1e-3, "{t}");
        let zero = integrate_riccati(&path, &js, [[0.0, 0.0], [0.0, 0.0]], 2.0);
        assert!(zero.blowup.is_none() && zero.max_trace_defect == 0.0);
    }

    #[test]
    fn hyperbolic_tanh_solution() {
        let s = spec("hyperbolic");
        let path = integrate_geodesic::<f64>(&s, [0.0, 0.0, 1.0], [0.0, 0.0, 1.0], 1.0, 0.0025).unwrap();
        let js = jacobi_along(&s, &path).unwrap();
        let run = integrate_riccati(&path, &js, [[0.5, 0.0], [0.0, 0.5]], 1.0);
        let last = run.states.last().unwrap();
        let want = (1.0 + 0.5f64.atanh()).tanh();
        assert!((last.u[0] - want).abs() < 1e-9 && (last.u[2] - want).abs() < 1e-9);
        assert!((last.t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn probe_on_flat_and_hyperbolic() {
        let flat = constrained_probe(&spec("flat"), [0.0; 3], [1.0, 0.0, 0.0], 1.0, 0.05, None, 5).unwrap();
        let b = flat.best();
        assert_eq!((b.a, b.b), (0.0, 0.0));
        assert_eq!(b.score(), 0.0);
        let hyp = constrained_probe(&spec("hyperbolic"), [0.0, 0.0, 1.0], [0.0, 0.0, 1.0], 1.0, 0.05, Some(0.0), 1).unwrap();
        let c = hyp.best();
        assert!(c.r1.abs() < 1e-9 && c.r2.abs() < 1e-9);
        assert!(hyp.zero_order_flag);
    }
}
