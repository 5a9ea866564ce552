//! Polynomial identities for a Ricci eigenframe `{e1, e2, e3}` with eigenvalues `(0, λ2, λ3)`.
//!
//! Connection data `Γ_ijk = g(∇_{e_i} e_j, e_k)` and the derivatives `L_i λ_j = e_i(λ_j)` are
//! free synthetic inputs. Indices in code are 0-based (`e1` is index 0).
//!
//! Along the special directions `X = t e_i + e_j` with `w1 = e_k` and `w2 ∝ e_i - t e_j` the
//! Jacobi data become polynomials in `t`: `a` (the trace-free entry), `c`, `d1 = (∇_X ric)(X,X)`,
//! `a1` and `b1`. The three cases are
//!
//! | case | `(i, j, k)` |
//! |------|-------------|
//! | `A1` | `(1, 2, 3)` |
//! | `A2` | `(1, 3, 2)` |
//! | `A3` | `(2, 3, 1)` |

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{bisect_roots, sturm_count_open, UPoly};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameMode {
    /// Unconstrained random data.
    Free,
    /// Derivatives solved from the first-order eigenframe relations and the contracted Bianchi identity.
    Co3B2bis,
    /// Coefficient table of a rigidity lemma.
    Table,
}

impl fmt::Display for FrameMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FrameMode::Free => "free",
            FrameMode::Co3B2bis => "co3_b2bis",
            FrameMode::Table => "table",
        })
    }
}

impl std::str::FromStr for FrameMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "free" => Ok(FrameMode::Free),
            "co3_b2bis" => Ok(FrameMode::Co3B2bis),
            "table" => Ok(FrameMode::Table),
            _ => Err(Error::Parse(format!("unknown frame mode '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    A1,
    A2,
    A3,
}

impl Case {
    pub const ALL: [Case; 3] = [Case::A1, Case::A2, Case::A3];

    /// `(i, j, k)`, 0-based.
    pub fn indices(self) -> (usize, usize, usize) {
        match self {
            Case::A1 => (0, 1, 2),
            Case::A2 => (0, 2, 1),
            Case::A3 => (1, 2, 0),
        }
    }
}

/// Synthetic eigenframe data.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameData<T> {
    pub l2: T,
    pub l3: T,
    /// `dl[i][0] = L_i λ2`, `dl[i][1] = L_i λ3`.
    pub dl: [[T; 2]; 3],
    /// `gamma[i] = [Γ_i12, Γ_i13, Γ_i23]` (1-based names).
    pub gamma: [[T; 3]; 3],
    /// Optional second-order coefficients, ascending in `t`.
    pub d2: Option<Vec<T>>,
    pub mode: FrameMode,
}

fn pair_slot(j: usize, k: usize) -> Option<(usize, bool)> {
    match (j, k) {
        (0, 1) => Some((0, true)),
        (1, 0) => Some((0, false)),
        (0, 2) => Some((1, true)),
        (2, 0) => Some((1, false)),
        (1, 2) => Some((2, true)),
        (2, 1) => Some((2, false)),
        _ => None,
    }
}

impl<T: Real> FrameData<T> {
    pub fn zero(l2: T, l3: T) -> Self {
        FrameData {
            l2,
            l3,
            dl: [[T::zero(); 2]; 3],
            gamma: [[T::zero(); 3]; 3],
            d2: None,
            mode: FrameMode::Free,
        }
    }

    /// `Γ_ijk`, 0-based, antisymmetric in `(j, k)`.
    pub fn g(&self, i: usize, j: usize, k: usize) -> T {
        match pair_slot(j, k) {
            Some((s, true)) => self.gamma[i][s],
            Some((s, false)) => -self.gamma[i][s],
            None => T::zero(),
        }
    }

    /// Sets `Γ_ijk` (and thereby `Γ_ikj = -Γ_ijk`).
    pub fn set_g(&mut self, i: usize, j: usize, k: usize, v: T) {
        match pair_slot(j, k) {
            Some((s, true)) => self.gamma[i][s] = v,
            Some((s, false)) => self.gamma[i][s] = -v,
            None => {}
        }
    }

    /// Eigenvalue of `e_m` (`λ1 = 0`).
    pub fn lambda(&self, m: usize) -> T {
        [T::zero(), self.l2, self.l3][m]
    }

    /// `L_i λ_m` (zero for `m = 0`).
    pub fn dlam(&self, i: usize, m: usize) -> T {
        if m == 0 {
            T::zero()
        } else {
            self.dl[i][m - 1]
        }
    }

    /// `(∇_{e_a} ric)(e_b, e_c) = δ_bc L_a λ_b + (λ_b - λ_c) Γ_abc`.
    pub fn nabla_ric(&self, a: usize, b: usize, c: usize) -> T {
        let diag = if b == c { self.dlam(a, b) } else { T::zero() };
        diag + (self.lambda(b) - self.lambda(c)) * self.g(a, b, c)
    }

    /// Solves the dependent derivatives from the eigenframe relations
    /// `L2λ2 = 2λ2λ3Γ112/(λ2-λ3)`, `L1λ2 = 2λ2Γ212` and the three contracted Bianchi equations.
    /// `L3λ2` stays free.
    pub fn impose_co3_b2bis(&mut self) -> Result<()> {
        let (l2, l3) = (self.l2, self.l3);
        if l2 == l3 {
            return Err(Error::EqualEigenvalues);
        }
        let two = T::c(2.0);
        let g = |i, j, k| self.g(i, j, k);
        let g112 = g(0, 0, 1);
        let g113 = g(0, 0, 2);
        let g212 = g(1, 0, 1);
        let g221 = g(1, 1, 0);
        let g331 = g(2, 2, 0);
        let g332 = g(2, 2, 1);
        let g223 = g(1, 1, 2);
        let l2_2 = two * l2 * l3 * g112 / (l2 - l3);
        let l1_2 = two * l2 * g212;
        let l1_3 = two * (l2 * g221 + l3 * g331) - l1_2;
        let l2_3 = l2_2 + two * (l3 - l2) * g332 - two * l2 * g112;
        let l3_2 = self.dl[2][0];
        let l3_3 = l3_2 + two * (l3 - l2) * g223 + two * l3 * g113;
        self.dl = [[l1_2, l1_3], [l2_2, l2_3], [l3_2, l3_3]];
        self.mode = FrameMode::Co3B2bis;
        Ok(())
    }

    /// Flat `key = value` text, one entry per line.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("mode = {}\n", self.mode));
        out.push_str(&format!("lambda2 = {}\n", self.l2.to_f64_lossy()));
        out.push_str(&format!("lambda3 = {}\n", self.l3.to_f64_lossy()));
        for i in 0..3 {
            for m in 0..2 {
                out.push_str(&format!("L{}lambda{} = {}\n", i + 1, m + 2, self.dl[i][m].to_f64_lossy()));
            }
        }
        for i in 0..3 {
            for (s, (j, k)) in [(1, 2), (1, 3), (2, 3)].iter().enumerate() {
                out.push_str(&format!("gamma{}{}{} = {}\n", i + 1, j, k, self.gamma[i][s].to_f64_lossy()));
            }
        }
        if let Some(d2) = &self.d2 {
            let s: Vec<String> = d2.iter().map(|v| v.to_f64_lossy().to_string()).collect();
            out.push_str(&format!("d2 = {}\n", s.join(", ")));
        }
        out
    }

    /// Parses [`to_kv`](Self::to_kv) output. Missing derivative and connection keys default to 0.
    pub fn from_kv(src: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, line) in src.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", n + 1)))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        let num = |s: &str| -> Result<T> {
            s.parse::<f64>().map(T::c).map_err(|_| Error::Parse(format!("bad number '{s}'")))
        };
        let req = |k: &str| -> Result<T> { num(map.get(k).ok_or_else(|| Error::Parse(format!("missing key '{k}'")))?) };
        let opt = |k: &str| -> Result<T> { map.get(k).map(|s| num(s)).unwrap_or(Ok(T::zero())) };
        let mut fd = FrameData::zero(req("lambda2")?, req("lambda3")?);
        for i in 0..3 {
            for m in 0..2 {
                fd.dl[i][m] = opt(&format!("L{}lambda{}", i + 1, m + 2))?;
            }
            for (s, (j, k)) in [(1, 2), (1, 3), (2, 3)].iter().enumerate() {
                fd.gamma[i][s] = opt(&format!("gamma{}{}{}", i + 1, j, k))?;
            }
        }
        if let Some(m) = map.get("mode") {
            fd.mode = m.parse()?;
        }
        if let Some(d2) = map.get("d2") {
            fd.d2 = Some(d2.split(',').map(|s| num(s.trim())).collect::<Result<Vec<T>>>()?);
        }
        let mut known: Vec<String> = ["mode", "lambda2", "lambda3", "d2"].iter().map(|s| s.to_string()).collect();
        for i in 1..=3 {
            known.extend([format!("L{i}lambda2"), format!("L{i}lambda3")]);
            known.extend(["12", "13", "23"].iter().map(|jk| format!("gamma{i}{jk}")));
        }
        if let Some(k) = map.keys().find(|k| !known.contains(k)) {
            return Err(Error::Parse(format!("unknown key '{k}'")));
        }
        Ok(fd)
    }
}

impl FrameData<f64> {
    /// Random data; `lambdas` fixes `(λ2, λ3)`, otherwise `λ2 < λ3 < 0` are drawn with a gap.
    pub fn random(seed: u64, mode: FrameMode, lambdas: Option<(f64, f64)>) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (l2, l3) = match lambdas {
            Some(l) => l,
            None => loop {
                let a: f64 = rng.random_range(-3.0..-0.3);
                let b: f64 = rng.random_range(-3.0..-0.3);
                if (a - b).abs() > 0.2 {
                    break (a.min(b), a.max(b));
                }
            },
        };
        if l2 >= 0.0 || l3 >= 0.0 {
            return Err(Error::NonNegativeEigenvalue);
        }
        if l2 == l3 {
            return Err(Error::EqualEigenvalues);
        }
        let mut fd = FrameData::zero(l2, l3);
        for row in fd.gamma.iter_mut() {
            for v in row.iter_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
        }
        for row in fd.dl.iter_mut() {
            for v in row.iter_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
        }
        if mode == FrameMode::Co3B2bis {
            fd.impose_co3_b2bis()?;
        }
        Ok(fd)
    }
}

/// Random frame data in the given mode.
pub fn consistent_frame(seed: u64, mode: FrameMode) -> Result<FrameData<f64>> {
    FrameData::random(seed, mode, None)
}

/// The polynomials of one special-direction case.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyBundle<T: Real> {
    pub case: Case,
    pub a: UPoly<T>,
    pub c: UPoly<T>,
    pub d1: UPoly<T>,
    pub a1: UPoly<T>,
    pub b1: UPoly<T>,
}

impl<T: Real> PolyBundle<T> {
    /// Coefficient-wise `max |b1 + (t²+1) c|`.
    pub fn gcd_residual(&self) -> T {
        let r = &self.b1 + &(&UPoly::t2p1() * &self.c);
        r.max_abs()
    }
}

fn cst<T: Real>(v: T) -> UPoly<T> {
    UPoly::new(vec![v])
}

fn lin<T: Real>(c0: T, c1: T) -> UPoly<T> {
    UPoly::new(vec![c0, c1])
}

/// `p12`, `p13`, `p23` as polynomials.
pub fn p_polys<T: Real>(fd: &FrameData<T>) -> [UPoly<T>; 3] {
    let (l2, l3) = (fd.l2, fd.l3);
    let g = |i, j, k| fd.g(i, j, k);
    let p12 = UPoly::new(vec![
        l3 * g(1, 0, 2),
        (l2 - l3) * g(1, 1, 2) + l3 * g(0, 0, 2),
        (l2 - l3) * g(0, 1, 2),
    ]);
    let p13 = UPoly::new(vec![
        l2 * g(2, 0, 1),
        (l3 - l2) * g(2, 2, 1) + l2 * g(0, 0, 1),
        (l2 - l3) * g(0, 1, 2),
    ]);
    let p23 = UPoly::new(vec![
        -l2 * g(2, 1, 0),
        l3 * g(2, 2, 0) - l2 * g(1, 1, 0),
        l3 * g(1, 2, 0),
    ]);
    [p12, p13, p23]
}

/// Derivatives at `t = 0` of `p12`, `p13`, `p23`.
pub fn p_primes<T: Real>(fd: &FrameData<T>) -> [T; 3] {
    let p = p_polys(fd);
    [p[0].coeff(1), p[1].coeff(1), p[2].coeff(1)]
}

/// Builds `a, c, d1, a1, b1` for the case. `a1` uses the general expansion
/// `A1 = L_X A - ric(X, ∇_X X)`; `d1` is the raw cubic `(∇_X ric)(X,X)`.
pub fn special_direction_polys<T: Real>(fd: &FrameData<T>, case: Case) -> PolyBundle<T> {
    let (i, j, k) = case.indices();
    let zero = UPoly::<T>::zero();
    let mut x: [UPoly<T>; 3] = [zero.clone(), zero.clone(), zero.clone()];
    x[i] = lin(T::zero(), T::one());
    x[j] = cst(T::one());
    let mut v: [UPoly<T>; 3] = [zero.clone(), zero.clone(), zero.clone()];
    v[i] = cst(T::one());
    v[j] = lin(T::zero(), -T::one());

    let half = T::c(0.5);
    let (alpha, beta) = match case {
        Case::A1 => (UPoly::new(vec![T::zero(), T::zero(), -half]), UPoly::new(vec![half, T::zero(), half])),
        Case::A2 => (UPoly::new(vec![half, T::zero(), half]), UPoly::new(vec![T::zero(), T::zero(), -half])),
        Case::A3 => (cst(-half), UPoly::new(vec![T::zero(), T::zero(), -half])),
    };
    let a = &alpha.scale(&fd.l2) + &beta.scale(&fd.l3);

    let mut d1 = zero.clone();
    for p in 0..3 {
        for q in 0..3 {
            for r in 0..3 {
                let coef = fd.nabla_ric(p, q, r);
                if coef != T::zero() {
                    d1 = &d1 + &(&(&x[p] * &x[q]) * &x[r]).scale(&coef);
                }
            }
        }
    }

    let lx = |m: usize| -> UPoly<T> {
        let mut acc = zero.clone();
        for p in 0..3 {
            acc = &acc + &x[p].scale(&fd.dlam(p, m));
        }
        acc
    };
    // (∇_X X)_b
    let nxx: Vec<UPoly<T>> = (0..3)
        .map(|b| {
            let mut acc = zero.clone();
            for p in 0..3 {
                for r in 0..3 {
                    let gv = fd.g(p, r, b);
                    if gv != T::zero() {
                        acc = &acc + &(&x[p] * &x[r]).scale(&gv);
                    }
                }
            }
            acc
        })
        .collect();
    let mut ric_x_nxx = zero.clone();
    for b in 0..3 {
        ric_x_nxx = &ric_x_nxx + &(&x[b] * &nxx[b]).scale(&fd.lambda(b));
    }
    let a1 = &(&(&alpha * &lx(1)) + &(&beta * &lx(2))) - &ric_x_nxx;

    // g(∇_X e_k, v)
    let mut nek_v = zero.clone();
    for p in 0..3 {
        for m in 0..3 {
            let gv = fd.g(p, k, m);
            if gv != T::zero() {
                nek_v = &nek_v + &(&x[p] * &v[m]).scale(&gv);
            }
        }
    }
    let mut ric_x_v = zero.clone();
    for b in 0..3 {
        ric_x_v = &ric_x_v + &(&x[b] * &v[b]).scale(&fd.lambda(b));
    }
    let b1 = &(&a * &nek_v).scale(&T::c(2.0)) + &(&nxx[k] * &ric_x_v);

    let [p12, p13, p23] = p_polys(fd);
    let c = match case {
        Case::A1 => p12,
        Case::A2 => p13,
        Case::A3 => p23,
    };
    PolyBundle { case, a, c, d1, a1, b1 }
}

/// Residuals of the three contracted Bianchi equations in the frame (left minus right).
pub fn bianchi_frame_residuals<T: Real>(fd: &FrameData<T>) -> [T; 3] {
    let (l2, l3) = (fd.l2, fd.l3);
    let half = T::c(0.5);
    let g = |i, j, k| fd.g(i, j, k);
    [
        half * (fd.dl[0][0] + fd.dl[0][1]) - (l2 * g(1, 1, 0) + l3 * g(2, 2, 0)),
        half * (fd.dl[1][1] - fd.dl[1][0]) - ((l3 - l2) * g(2, 2, 1) - l2 * g(0, 0, 1)),
        half * (fd.dl[2][1] - fd.dl[2][0]) - ((l3 - l2) * g(1, 1, 2) + l3 * g(0, 0, 2)),
    ]
}

/// `λ2 Γ112² + λ3 Γ113² + (λ2+λ3)²/2`.
pub fn ric111_residual<T: Real>(fd: &FrameData<T>) -> T {
    let g112 = fd.g(0, 0, 1);
    let g113 = fd.g(0, 0, 2);
    let s = fd.l2 + fd.l3;
    fd.l2 * g112 * g112 + fd.l3 * g113 * g113 + s * s * T::c(0.5)
}

/// Closed form of `d1` along `t e2 + e3` as displayed for the eigenframe setting.
/// Its `t³` coefficient equals the raw `L2λ2` only under the first eigenframe relation.
pub fn d123_bis<T: Real>(fd: &FrameData<T>) -> UPoly<T> {
    let (l2, l3) = (fd.l2, fd.l3);
    let two = T::c(2.0);
    let g = |i, j, k| fd.g(i, j, k);
    UPoly::new(vec![
        fd.dl[2][1],
        fd.dl[1][1] - two * (l2 - l3) * g(2, 2, 1),
        fd.dl[2][0] - two * (l3 - l2) * g(1, 1, 2),
        two * l2 * l3 * g(0, 0, 1) / (l2 - l3),
    ])
}

/// Closed form of `d1` along `t e1 + e3`.
pub fn d114<T: Real>(fd: &FrameData<T>) -> UPoly<T> {
    let l3 = fd.l3;
    let two = T::c(2.0);
    UPoly::new(vec![
        fd.dl[2][1],
        fd.dl[0][1] + two * l3 * fd.g(2, 2, 0),
        -two * l3 * fd.g(0, 0, 2),
    ])
}

/// Closed form of `a1` in case `A2`.
pub fn a13_closed<T: Real>(fd: &FrameData<T>) -> UPoly<T> {
    let l3 = fd.l3;
    let [p12p, _, p23p] = p_primes(fd);
    let g113 = fd.g(0, 0, 2);
    let g331 = fd.g(2, 2, 0);
    let d0 = special_direction_polys(fd, Case::A2).d1.coeff(0);
    UPoly::new(vec![
        p12p - T::c(2.0) * l3 * g113 + T::c(0.5) * d0,
        p23p,
        p12p - T::c(3.0) * l3 * g113,
        T::c(3.0) * p23p - T::c(4.0) * l3 * g331,
    ])
}

/// Closed form of `a1` in case `A3`.
pub fn a23_closed<T: Real>(fd: &FrameData<T>) -> UPoly<T> {
    let (l2, l3) = (fd.l2, fd.l3);
    let [p12p, p13p, _] = p_primes(fd);
    let g112 = fd.g(0, 0, 1);
    let d13 = special_direction_polys(fd, Case::A2).d1;
    let d0 = d13.coeff(0);
    let dpp = T::c(2.0) * d13.coeff(2);
    let half = T::c(0.5);
    let neg = UPoly::new(vec![
        half * d0 + half * dpp + p12p,
        l2 * l2 / (l2 - l3) * g112 - p13p,
        half * d0 - T::c(0.25) * dpp - p12p,
        l2 * (T::c(3.0) * l3 - T::c(2.0) * l2) / (l2 - l3) * g112 + p13p,
    ]);
    -&neg
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct A1Check<T> {
    pub residual13: T,
    pub residual23: T,
    /// Data were not generated under the eigenframe relations; nonzero residuals are expected.
    pub inconsistent_mode: bool,
}

/// Differences between the closed-form `a1` coefficients and the general expansion.
pub fn a1_crosscheck<T: Real>(fd: &FrameData<T>) -> A1Check<T> {
    let r13 = (&special_direction_polys(fd, Case::A2).a1 - &a13_closed(fd)).max_abs();
    let r23 = (&special_direction_polys(fd, Case::A3).a1 - &a23_closed(fd)).max_abs();
    A1Check {
        residual13: r13,
        residual23: r23,
        inconsistent_mode: fd.mode != FrameMode::Co3B2bis,
    }
}

/// Residuals of the evaluations at imaginary points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RootIdentities<T> {
    pub re_d23: T,
    pub im_d23: T,
    pub re_a13: T,
    pub re_a23: T,
    pub im_a23: T,
    pub im_a13: T,
}

impl<T: Real> RootIdentities<T> {
    pub fn max(&self) -> T {
        [self.re_d23, self.im_d23, self.re_a13, self.re_a23, self.im_a23, self.im_a13]
            .iter()
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// Evaluates `d1` and `a1` of cases `A2`, `A3` at `i√(λ2/λ3)`, `i√(λ2/(λ2-λ3))` and
/// `i√((λ2+2λ3)/(λ2-λ3))` and compares with the coefficient formulas. Needs `λ2 < λ3 < 0`.
pub fn root_identities<T: Real>(fd: &FrameData<T>) -> Result<RootIdentities<T>> {
    let (l2, l3) = (fd.l2, fd.l3);
    if !(l2 < l3 && l3 < T::zero()) {
        return Err(Error::Precondition("root identities need λ2 < λ3 < 0".into()));
    }
    let two = T::c(2.0);
    let four = T::c(4.0);
    let rho = (l2 / l3).sqrt();
    let sigma = (l2 / (l2 - l3)).sqrt();
    let tau = ((l2 + two * l3) / (l2 - l3)).sqrt();
    let [p12p, p13p, p23p] = p_primes(fd);
    let g112 = fd.g(0, 0, 1);
    let g331 = fd.g(2, 2, 0);
    let b13 = special_direction_polys(fd, Case::A2);
    let b23 = special_direction_polys(fd, Case::A3);
    let d0 = b13.d1.coeff(0);
    let dpp = two * b13.d1.coeff(2);

    let (re_d23, im_d23) = b23.d1.eval_imag(&rho);
    let want_re_d23 = (l3 - l2) / l3 * (d0 + T::c(3.0) * l2 / (l2 - l3) * dpp / two) - four * l2 / l3 * p12p;
    let want_im_d23 = four * (p13p - two * l2 * g112) * rho;

    let (re_a13, im_a13) = b13.a1.eval_imag(&sigma);
    let want_re_a13 = two * l3 / (l3 - l2) * p12p - (l2 + two * l3) / (l2 - l3) * dpp / two + d0;
    let want_im_a13 = -(sigma / (l2 - l3)) * ((two * l2 + l3) * p23p - four * l2 * l3 * g331);

    let (re_a23, im_a23) = b23.a1.eval_imag(&rho);
    let (re_d13_tau, _) = b13.d1.eval_imag(&tau);
    let want_re_a23 = (l2 - l3) / (two * l3) * re_d13_tau - (l2 + l3) / l3 * p12p;
    let want_im_a23 = two * l2 * l2 / l3 * g112 - (l2 + l3) / l3 * p13p;

    Ok(RootIdentities {
        re_d23: re_d23 - want_re_d23,
        im_d23: im_d23 - want_im_d23,
        re_a13: two * re_a13 - want_re_a13,
        re_a23: re_a23 - want_re_a23,
        im_a23: -(l3 / l2).sqrt() * im_a23 - want_im_a23,
        im_a13: im_a13 - want_im_a13,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lemma {
    L4,
    L5,
}

/// `3 - 2√2`.
pub fn rigid_ratio() -> f64 {
    3.0 - 2.0 * 2f64.sqrt()
}

/// Frame data from a rigidity-lemma table: `λ3 = rλ2`, `s = √(-2λ2)`, unspecified entries zero.
/// `signs = (ε1, ε2)` for `L4` and `(ε1, ε3)` for `L5`; `r` defaults to `3 - 2√2`.
pub fn lemma_frame(which: Lemma, l2: f64, signs: (f64, f64), r: Option<f64>) -> Result<FrameData<f64>> {
    if l2 >= 0.0 {
        return Err(Error::NonNegativeEigenvalue);
    }
    let (e1, e2) = signs;
    if e1.abs() != 1.0 || e2.abs() != 1.0 {
        return Err(Error::Precondition("signs must be ±1".into()));
    }
    let r = r.unwrap_or_else(rigid_ratio);
    let s = (-2.0 * l2).sqrt();
    let sr = r.sqrt();
    let mut fd = FrameData::zero(l2, r * l2);
    fd.mode = FrameMode::Table;
    fd.set_g(0, 0, 1, -e1 * (r - 1.0) * s / 2.0);
    fd.set_g(2, 2, 1, e1 * (r - 1.0) * s / 2.0);
    let l2_2 = e1 * r * l2 * s;
    let l3_2 = match which {
        Lemma::L4 => {
            fd.set_g(0, 0, 2, e2 * (r - 1.0) * s / (2.0 * sr));
            fd.set_g(1, 1, 2, -e2 * (r - 1.0) * s / (2.0 * sr));
            e2 * l2 * s / sr
        }
        Lemma::L5 => {
            fd.set_g(0, 0, 2, -e2 * (r - 1.0) * s / (2.0 * sr));
            fd.set_g(1, 1, 2, e2 * (3.0 * r - 1.0) * s / (2.0 * sr));
            e2 * l2 * s * (2.0 * r - 1.0) / sr
        }
    };
    fd.dl = [[0.0, 0.0], [l2_2, r * l2_2], [l3_2, r * l3_2]];
    Ok(fd)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdsVerdict {
    pub contradiction: bool,
    /// `det(α1·2/s, ω)·ε1·ε·√r`; `±(r-1)(1+r)` for `L4` and `±(r²+2r-1)` for `L5`.
    pub determinant: f64,
    pub certificate: String,
}

/// Closure test of the structure equations for lemma data.
///
/// `de^k(e_i, e_j) = Γ_jik - Γ_ijk`. The form `α1 = de³(e2,e3) e² - de²(e2,e3) e³` is the
/// combination of `e², e³` whose differential has no `e²∧e³` part, and
/// `ω = (L2λ2 e² + L3λ2 e³)/(λ2 s)` is closed because `dλ2 = λ2 s ω`. If `α1` and `ω` are
/// independent, both `e²` and `e³` would have to be closed, contradicting a nonzero table.
pub fn eds_closure(which: Lemma, l2: f64, signs: (f64, f64), r: Option<f64>) -> Result<EdsVerdict> {
    let fd = lemma_frame(which, l2, signs, r)?;
    let r = r.unwrap_or_else(rigid_ratio);
    let s = (-2.0 * l2).sqrt();
    let de = |kk: usize, i: usize, j: usize| fd.g(j, i, kk) - fd.g(i, j, kk);
    let mut de_max: f64 = 0.0;
    for kk in 1..3 {
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            de_max = de_max.max(de(kk, i, j).abs());
        }
    }
    let alpha = [de(2, 1, 2) * 2.0 / s, -de(1, 1, 2) * 2.0 / s];
    let omega = [fd.dl[1][0] / (l2 * s), fd.dl[2][0] / (l2 * s)];
    let det = alpha[0] * omega[1] - alpha[1] * omega[0];
    let na = alpha[0].hypot(alpha[1]);
    let no = omega[0].hypot(omega[1]);
    let normalised = if na > 0.0 && no > 0.0 { det / (na * no) } else { 0.0 };
    let determinant = det * signs.0 * signs.1 * r.sqrt();
    let independent = normalised.abs() > 1e-9;
    let contradiction = de_max > 1e-12 && independent;
    let (poly_name, poly_val) = match which {
        Lemma::L4 => ("(r-1)(1+r)", (r - 1.0) * (1.0 + r)),
        Lemma::L5 => ("-r^2-2r+1", -r * r - 2.0 * r + 1.0),
    };
    let certificate = if contradiction {
        format!(
            "closed 1-forms alpha1 = ({:.12}, {:.12}) and omega = ({:.12}, {:.12}) in (e2, e3) are independent: \
             normalised det = {:.6e}, signed det = {:.12} = ±{} at r = {:.12} (value {:.12}); hence de2 = de3 = 0, \
             but max |de| = {:.6e}",
            alpha[0], alpha[1], omega[0], omega[1], normalised, determinant, poly_name, r, poly_val, de_max
        )
    } else {
        format!(
            "no contradiction: normalised det = {:.3e} (≈ 0, {} = {:.3e} at r = {:.12}), max |de| = {:.3e}",
            normalised, poly_name, poly_val, r, de_max
        )
    };
    Ok(EdsVerdict {
        contradiction,
        determinant,
        certificate,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateEntry {
    pub name: String,
    pub polynomial: String,
    /// Exact count of distinct real roots in `(0, 1)`.
    pub sturm_roots: usize,
    /// Roots located by bisection to `1e-12`.
    pub roots: Vec<f64>,
    pub expected_roots: Vec<f64>,
    pub pass: bool,
}

/// Root isolation on `(0, 1)` for the three polynomials behind the rigidity contradictions.
pub fn contradiction_certificates() -> Vec<CertificateEntry> {
    let entries: [(&str, [i64; 4], Vec<f64>); 3] = [
        ("cubic r^3+6r^2+21r+8", [8, 21, 6, 1], vec![]),
        ("(r-1)(r^2+4)", [-4, 4, -1, 1], vec![]),
        ("2(1-r)^2-(1+r)^2", [1, -6, 1, 0], vec![rigid_ratio()]),
    ];
    entries
        .into_iter()
        .map(|(name, c, expected)| {
            let exact: UPoly<BigRational> = UPoly::from_i64(&c);
            let float: UPoly<f64> = UPoly::new(c.iter().map(|&v| v as f64).collect());
            let zero = BigRational::from_integer(0.into());
            let one = BigRational::from_integer(1.into());
            let sturm = sturm_count_open(&exact, &zero, &one);
            let roots = bisect_roots(&float, 0.0, 1.0, 1000, 1e-13);
            let pass = sturm == expected.len()
                && roots.len() == expected.len()
                && roots.iter().zip(&expected).all(|(a, b)| (a - b).abs() < 1e-12);
            CertificateEntry {
                name: name.to_string(),
                polynomial: exact.to_string(),
                sturm_roots: sturm,
                roots,
                expected_roots: expected,
                pass,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_free_entry_polynomials() {
        let fd = FrameData::<f64>::zero(-2.0, -1.0);
        let a1 = special_direction_polys(&fd, Case::A1).a;
        assert_eq!(a1.scale(&2.0).coeffs(), &[-1.0, 0.0, 1.0]);
        let a3 = special_direction_polys(&fd, Case::A3).a;
        assert_eq!(a3.coeffs(), &[1.0, 0.0, 0.5]);
    }

    #[test]
    fn factorisation_holds_for_free_data() {
        for seed in 0..50 {
            let fd = consistent_frame(seed, FrameMode::Free).unwrap();
            for case in Case::ALL {
                let b = special_direction_polys(&fd, case);
                assert!(b.gcd_residual() < 1e-10, "seed {seed} {case:?}: {}", b.gcd_residual());
                assert!(b.a.degree() == Some(2));
                assert!(b.c.degree().unwrap_or(0) <= 2 && b.d1.degree().unwrap_or(0) <= 3);
                assert!(b.a1.degree().unwrap_or(0) <= 3 && b.b1.degree().unwrap_or(0) <= 4);
            }
        }
    }

    #[test]
    fn zero_connection_gives_zero_c() {
        let mut fd = FrameData::<f64>::zero(-2.0, -1.0);
        fd.dl = [[0.3, -0.2], [0.1, 0.5], [0.7, -0.4]];
        for case in Case::ALL {
            let b = special_direction_polys(&fd, case);
            assert!(b.c.is_zero());
        }
        let mut z = FrameData::<f64>::zero(-2.0, -1.0);
        z.impose_co3_b2bis().unwrap();
        assert_eq!(z.dl[1][0], 0.0);
        assert_eq!(z.dl[0][0], 0.0);
        assert_eq!(bianchi_frame_residuals(&z), [0.0; 3]);
    }

    #[test]
    fn consistent_data_satisfies_bianchi() {
        let fd = consistent_frame(7, FrameMode::Co3B2bis).unwrap();
        for r in bianchi_frame_residuals(&fd) {
            assert!(r.abs() < 1e-12);
        }
        let free = consistent_frame(7, FrameMode::Free).unwrap();
        assert!(bianchi_frame_residuals(&free).iter().any(|r| r.abs() > 1e-3));
        assert!(FrameData::random(1, FrameMode::Co3B2bis, Some((-1.0, -1.0))).is_err());
    }

    #[test]
    fn reduction_of_d1_in_first_case() {
        for seed in 0..20 {
            let fd = consistent_frame(seed, FrameMode::Co3B2bis).unwrap();
            let b = special_direction_polys(&fd, Case::A1);
            let k = 4.0 * fd.l2 / (fd.l2 - fd.l3) * fd.g(0, 0, 1);
            assert!((&b.d1 - &b.a.scale(&k)).max_abs() < 1e-10);
        }
    }

    #[test]
    fn closed_forms_of_d1() {
        let fd = consistent_frame(3, FrameMode::Free).unwrap();
        assert!((&special_direction_polys(&fd, Case::A2).d1 - &d114(&fd)).max_abs() < 1e-12);
        let raw = special_direction_polys(&fd, Case::A3).d1;
        assert!((&raw - &d123_bis(&fd)).max_abs() > 1e-6);
        let co = consistent_frame(3, FrameMode::Co3B2bis).unwrap();
        assert!((&special_direction_polys(&co, Case::A3).d1 - &d123_bis(&co)).max_abs() < 1e-12);
    }

    #[test]
    fn a1_closed_forms() {
        let z = a1_crosscheck(&FrameData::<f64>::zero(-2.0, -1.0));
        assert_eq!((z.residual13, z.residual23), (0.0, 0.0));
        let c = a1_crosscheck(&consistent_frame(7, FrameMode::Co3B2bis).unwrap());
        assert!(c.residual13 < 1e-10 && c.residual23 < 1e-10, "{c:?}");
        assert!(!c.inconsistent_mode);
        let f = a1_crosscheck(&consistent_frame(7, FrameMode::Free).unwrap());
        assert!(f.residual23 > 1e-3 && f.inconsistent_mode);
    }

    #[test]
    fn imaginary_point_identities() {
        let z = root_identities(&FrameData::<f64>::zero(-3.0, -1.0)).unwrap();
        assert_eq!(z.max(), 0.0);
        let fd = FrameData::random(11, FrameMode::Co3B2bis, Some((-3.0, -1.0))).unwrap();
        let r = root_identities(&fd).unwrap();
        assert!(r.max() < 1e-9, "{r:?}");
        let free = FrameData::random(11, FrameMode::Free, Some((-3.0, -1.0))).unwrap();
        assert!(root_identities(&free).unwrap().re_d23.abs() > 1e-6);
        assert!(root_identities(&FrameData::<f64>::zero(-1.0, -3.0)).is_err());
    }

    #[test]
    fn lemma_tables() {
        let r = rigid_ratio();
        let s2 = 2f64.sqrt();
        let fd = lemma_frame(Lemma::L4, -1.0, (1.0, 1.0), None).unwrap();
        assert!((fd.g(0, 0, 1) + (r - 1.0) / 2.0 * s2).abs() < 1e-15);
        assert!((fd.g(0, 0, 2) - (r - 1.0) / (2.0 * r.sqrt()) * s2).abs() < 1e-15);
        let l5 = lemma_frame(Lemma::L5, -1.0, (1.0, 1.0), None).unwrap();
        assert!((l5.g(1, 1, 2) - (3.0 * r - 1.0) / (2.0 * r.sqrt()) * s2).abs() < 1e-14);
        for which in [Lemma::L4, Lemma::L5] {
            for signs in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let fd = lemma_frame(which, -1.7, signs, None).unwrap();
                assert!(ric111_residual(&fd).abs() < 1e-12);
                for b in bianchi_frame_residuals(&fd) {
                    assert!(b.abs() < 1e-12, "{which:?} {signs:?} {b}");
                }
            }
        }
    }

    #[test]
    fn ric111_examples() {
        let fd = FrameData::<f64>::zero(-2.0, -1.0);
        assert_eq!(ric111_residual(&fd), 4.5);
        let mut fd = fd;
        fd.set_g(0, 0, 1, 1.5);
        assert_eq!(ric111_residual(&fd), 0.0);
    }

    #[test]
    fn eds_contradictions() {
        let r = rigid_ratio();
        for which in [Lemma::L4, Lemma::L5] {
            for signs in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let v = eds_closure(which, -1.0, signs, None).unwrap();
                assert!(v.contradiction, "{}", v.certificate);
                let want = match which {
                    Lemma::L4 => (r - 1.0) * (1.0 + r),
                    Lemma::L5 => r * r + 2.0 * r - 1.0,
                };
                assert!((v.determinant.abs() - want.abs()).abs() < 1e-12, "{} vs {}", v.determinant, want);
            }
        }
        let degenerate = eds_closure(Lemma::L5, -1.0, (1.0, 1.0), Some(2f64.sqrt() - 1.0)).unwrap();
        assert!(!degenerate.contradiction);
    }

    #[test]
    fn certificates_pass() {
        let c = contradiction_certificates();
        assert_eq!(c.len(), 3);
        assert!(c.iter().all(|e| e.pass), "{c:?}");
        assert_eq!(c[2].sturm_roots, 1);
    }

    #[test]
    fn kv_roundtrip() {
        let mut fd = consistent_frame(5, FrameMode::Co3B2bis).unwrap();
        fd.d2 = Some(vec![0.5, -1.25]);
        let back = FrameData::<f64>::from_kv(&fd.to_kv()).unwrap();
        assert_eq!(back, fd);
        assert!(FrameData::<f64>::from_kv("lambda2 = -1\nlambda3 = -2\nbogus = 1\n").is_err());
        assert!(FrameData::<f64>::from_kv("lambda2 = -1\n").is_err());
    }
}
