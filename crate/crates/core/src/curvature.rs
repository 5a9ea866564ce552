//! Curvature of a metric from its 4-jet.
//!
//! Conventions: `R(X,Y) = ∇_X∇_Y - ∇_Y∇_X - ∇_[X,Y]`, `ric(Y,Z) = tr(X ↦ R(X,Y)Z)`,
//! so `ric(v,v) = tr J(v)` with `J(v)x = R(x,v)v`, and the round sphere has
//! positive Ricci curvature. With `R(X,Y,Z,W) = g(R(X,Y)Z,W)` this equals
//! `-Σ_i R(e_i,X,e_i,Y)`.
//!
//! Everything is computed in coordinates and then expressed in the orthonormal
//! frame `e_a = Σ_i E[i][a] ∂_i` obtained from the Cholesky factor of `g`.
//! All [`CurvaturePack`] tensors and all vector arguments of the functions in
//! this module use components in that frame.

use crate::error::{Error, Result};
use crate::expr::eval_jet;
use crate::jet::Jet4;
use crate::linalg::{self, M3, V3};
use crate::metric::{MetricSpec, COMPONENTS};
use crate::scalar::Real;

pub type T3<T> = [[[T; 3]; 3]; 3];
pub type T4<T> = [[[[T; 3]; 3]; 3]; 3];
pub type T5<T> = [[[[[T; 3]; 3]; 3]; 3]; 3];

type JetM3<T> = [[Jet4<T>; 3]; 3];
type JetT3<T> = [[[Jet4<T>; 3]; 3]; 3];
type JetT4<T> = [[[[Jet4<T>; 3]; 3]; 3]; 3];

/// Smallest eigenvalue allowed for the value of `g`.
pub const PD_THRESHOLD: f64 = 1e-10;
/// Default relative tolerance of [`ricci_rank`].
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Jets of the metric components at a point.
#[derive(Clone, Debug)]
pub struct MetricJet<T> {
    pub point: V3<T>,
    pub g: JetM3<T>,
}

impl<T: Real> MetricJet<T> {
    pub fn value(&self) -> M3<T> {
        std::array::from_fn(|i| std::array::from_fn(|j| self.g[i][j].value()))
    }

    pub fn order(&self) -> usize {
        self.g[0][0].order()
    }
}

/// Jets of all six components to order 4 at `p`.
pub fn metric_jets<T: Real>(spec: &MetricSpec, p: V3<T>) -> Result<MetricJet<T>> {
    metric_jets_order(spec, p, 4)
}

/// Jets of all six components to the given order.
pub fn metric_jets_order<T: Real>(spec: &MetricSpec, p: V3<T>, order: usize) -> Result<MetricJet<T>> {
    let mut comps: Vec<Jet4<T>> = Vec::with_capacity(6);
    for e in &spec.components {
        comps.push(eval_jet(e, p, &spec.params, order)?);
    }
    let zero = Jet4::constant(p, T::zero(), order);
    let mut g: JetM3<T> = std::array::from_fn(|_| std::array::from_fn(|_| zero.clone()));
    for (k, &(i, j)) in COMPONENTS.iter().enumerate() {
        g[i][j] = comps[k].clone();
        g[j][i] = comps[k].clone();
    }
    let m = MetricJet { point: p, g };
    let (vals, _) = linalg::sym_eigen3(&m.value());
    if !(vals[0] > T::c(PD_THRESHOLD)) {
        return Err(Error::NotPositiveDefinite(vals[0].to_f64_lossy()));
    }
    Ok(m)
}

fn jet_zero<T: Real>(p: V3<T>, order: usize) -> Jet4<T> {
    Jet4::constant(p, T::zero(), order)
}

/// Inverse metric jets via adjugate and reciprocal determinant.
fn inverse_jets<T: Real>(g: &JetM3<T>) -> Result<JetM3<T>> {
    let cof = |r0: usize, r1: usize, c0: usize, c1: usize| -> Jet4<T> {
        &(&g[r0][c0] * &g[r1][c1]) - &(&g[r0][c1] * &g[r1][c0])
    };
    let adj: JetM3<T> = std::array::from_fn(|i| {
        std::array::from_fn(|j| cof((j + 1) % 3, (j + 2) % 3, (i + 1) % 3, (i + 2) % 3))
    });
    let mut det = &g[0][0] * &adj[0][0];
    det = &det + &(&g[0][1] * &adj[1][0]);
    det = &det + &(&g[0][2] * &adj[2][0]);
    let rdet = det.recip().map_err(|r| Error::DomainFault {
        subtree: "det g".into(),
        reason: r,
    })?;
    Ok(std::array::from_fn(|i| std::array::from_fn(|j| &adj[i][j] * &rdet)))
}

/// `Γ^k_ij` jets, index `[k][i][j]`, one order below the metric.
fn christoffel_jets<T: Real>(m: &MetricJet<T>) -> Result<JetT3<T>> {
    let ginv = inverse_jets(&m.g)?;
    let dg: JetT3<T> = std::array::from_fn(|a| std::array::from_fn(|b| std::array::from_fn(|c| m.g[b][c].partial(a))));
    let order = m.order().saturating_sub(1);
    let p = m.point;
    let mut out: JetT3<T> = std::array::from_fn(|_| std::array::from_fn(|_| std::array::from_fn(|_| jet_zero(p, order))));
    for i in 0..3 {
        for j in i..3 {
            let lowered: [Jet4<T>; 3] = std::array::from_fn(|l| &(&dg[i][j][l] + &dg[j][i][l]) - &dg[l][i][j]);
            for k in 0..3 {
                let mut acc = jet_zero(p, order);
                for (l, low) in lowered.iter().enumerate() {
                    acc = &acc + &(&ginv[k][l] * low);
                }
                let acc = acc.scale(T::c(0.5));
                out[k][i][j] = acc.clone();
                out[k][j][i] = acc;
            }
        }
    }
    Ok(out)
}

/// `R^l_ijk` jets, index `[l][i][j][k]`, component `l` of `R(∂_i,∂_j)∂_k`.
fn riemann_jets<T: Real>(gam: &JetT3<T>) -> JetT4<T> {
    let p = gam[0][0][0].base();
    let order = gam[0][0][0].order().saturating_sub(1);
    let dgam: T4<Jet4<T>> = std::array::from_fn(|m| {
        std::array::from_fn(|k| std::array::from_fn(|i| std::array::from_fn(|j| gam[k][i][j].partial(m))))
    });
    std::array::from_fn(|l| {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                std::array::from_fn(|k| {
                    if i == j {
                        return jet_zero(p, order);
                    }
                    let mut acc = &dgam[i][l][j][k] - &dgam[j][l][i][k];
                    for mm in 0..3 {
                        acc = &acc + &(&gam[l][i][mm] * &gam[mm][j][k]);
                        acc = &acc - &(&gam[l][j][mm] * &gam[mm][i][k]);
                    }
                    acc
                })
            })
        })
    })
}

/// Coordinate Christoffel symbols `Γ^k_ij` (index `[k][i][j]`) and curvature
/// `R^l_ijk` (index `[l][i][j][k]`) values; needs metric jets of order 2.
pub fn coordinate_curvature<T: Real>(m: &MetricJet<T>) -> Result<(T3<T>, T4<T>)> {
    let gam = christoffel_jets(m)?;
    let r = riemann_jets(&gam);
    let gv = std::array::from_fn(|k| std::array::from_fn(|i| std::array::from_fn(|j| gam[k][i][j].value())));
    let rv = std::array::from_fn(|l| {
        std::array::from_fn(|i| std::array::from_fn(|j| std::array::from_fn(|k| r[l][i][j][k].value())))
    });
    Ok((gv, rv))
}

/// Coordinate Christoffel symbols from order-1 metric jets.
pub fn christoffel_values<T: Real>(m: &MetricJet<T>) -> Result<T3<T>> {
    let gam = christoffel_jets(m)?;
    Ok(std::array::from_fn(|k| std::array::from_fn(|i| std::array::from_fn(|j| gam[k][i][j].value()))))
}

/// Point-wise curvature data.
#[derive(Clone, Debug)]
pub struct CurvaturePack<T> {
    pub point: V3<T>,
    /// Coordinate metric and inverse.
    pub g: M3<T>,
    pub ginv: M3<T>,
    /// Columns are the orthonormal frame vectors in coordinates.
    pub frame: M3<T>,
    /// `L^T` where `g = L L^T`; maps coordinate components to frame components.
    pub to_frame: M3<T>,
    /// Coordinate `Γ^k_ij` jets to order 2, index `[k][i][j]`.
    pub christoffel: JetT3<T>,
    /// `riem[a][b][c][d]`: component `d` of `R(e_a,e_b)e_c`.
    pub riem: T4<T>,
    /// `nabla_riem[m][a][b][c][d]`: component `d` of `(∇_{e_m}R)(e_a,e_b)e_c`.
    pub nabla_riem: T5<T>,
    pub ric: M3<T>,
    /// Ricci operator (equals `ric` in an orthonormal frame).
    pub ric_op: M3<T>,
    pub scal: T,
    /// `Ric - (scal/4) id`.
    pub schouten: M3<T>,
    /// `e_a(scal)` from differentiating the scalar-curvature jet.
    pub dscal: V3<T>,
    /// `nabla_ric[a][b][c] = (∇_{e_a} ric)(e_b,e_c)`.
    pub nabla_ric: T3<T>,
    /// `nabla2_ric[a][b][c][d] = (∇²_{e_a,e_b} ric)(e_c,e_d)`.
    pub nabla2_ric: T4<T>,
    /// Coordinate Ricci form (for path computations).
    pub ric_coord: M3<T>,
}

/// Full curvature package from order-4 metric jets.
pub fn curvature_pack<T: Real>(m: &MetricJet<T>) -> Result<CurvaturePack<T>> {
    let p = m.point;
    let gval = m.value();
    let ginv = linalg::inverse3(&gval).ok_or(Error::NotPositiveDefinite(0.0))?;
    let l = linalg::cholesky3(&gval).ok_or(Error::NotPositiveDefinite(0.0))?;
    let to_frame = linalg::transpose(&l);
    let frame = linalg::inverse3(&to_frame).ok_or(Error::NotPositiveDefinite(0.0))?;

    let gam = christoffel_jets(m)?;
    let rj = riemann_jets(&gam);
    let ginv_j = inverse_jets(&m.g)?;
    let ord_r = rj[0][0][0][0].order();

    let ric_j: JetM3<T> = std::array::from_fn(|j| {
        std::array::from_fn(|k| {
            let mut acc = jet_zero(p, ord_r);
            for (i, ri) in rj.iter().enumerate() {
                acc = &acc + &ri[i][j][k];
            }
            acc
        })
    });
    let mut scal_j = jet_zero(p, ord_r);
    for j in 0..3 {
        for k in 0..3 {
            scal_j = &scal_j + &(&ginv_j[j][k] * &ric_j[j][k]);
        }
    }

    let gv = |k: usize, i: usize, j: usize| gam[k][i][j].value();
    let ord1 = ord_r.saturating_sub(1);
    let nric_j: JetT3<T> = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            std::array::from_fn(|k| {
                let mut acc = ric_j[j][k].partial(i);
                for mm in 0..3 {
                    acc = &acc - &(&gam[mm][i][j] * &ric_j[mm][k]);
                    acc = &acc - &(&gam[mm][i][k] * &ric_j[j][mm]);
                }
                acc.truncate(ord1)
            })
        })
    });
    let nric: T3<T> = std::array::from_fn(|i| std::array::from_fn(|j| std::array::from_fn(|k| nric_j[i][j][k].value())));
    let n2ric: T4<T> = std::array::from_fn(|l| {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                std::array::from_fn(|k| {
                    let mut acc = nric_j[i][j][k].d1(l);
                    for mm in 0..3 {
                        acc = acc - gv(mm, l, i) * nric[mm][j][k];
                        acc = acc - gv(mm, l, j) * nric[i][mm][k];
                        acc = acc - gv(mm, l, k) * nric[i][j][mm];
                    }
                    acc
                })
            })
        })
    });
    let rv = |l: usize, i: usize, j: usize, k: usize| rj[l][i][j][k].value();
    let nriem: T5<T> = std::array::from_fn(|mm| {
        std::array::from_fn(|l| {
            std::array::from_fn(|i| {
                std::array::from_fn(|j| {
                    std::array::from_fn(|k| {
                        let mut acc = rj[l][i][j][k].d1(mm);
                        for q in 0..3 {
                            acc = acc + gv(l, mm, q) * rv(q, i, j, k);
                            acc = acc - gv(q, mm, i) * rv(l, q, j, k);
                            acc = acc - gv(q, mm, j) * rv(l, i, q, k);
                            acc = acc - gv(q, mm, k) * rv(l, i, j, q);
                        }
                        acc
                    })
                })
            })
        })
    });

    // Push to the orthonormal frame: lower slots contract with E, upper with L^T.
    let e = frame;
    let riem: T4<T> = std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            std::array::from_fn(|c| {
                std::array::from_fn(|d| {
                    let mut acc = T::zero();
                    for i in 0..3 {
                        for j in 0..3 {
                            for k in 0..3 {
                                let w = e[i][a] * e[j][b] * e[k][c];
                                if w == T::zero() {
                                    continue;
                                }
                                let up: T = (0..3).map(|ll| to_frame[d][ll] * rv(ll, i, j, k)).sum();
                                acc = acc + w * up;
                            }
                        }
                    }
                    acc
                })
            })
        })
    });
    let nabla_riem: T5<T> = std::array::from_fn(|mm| {
        std::array::from_fn(|a| {
            std::array::from_fn(|b| {
                std::array::from_fn(|c| {
                    std::array::from_fn(|d| {
                        let mut acc = T::zero();
                        for q in 0..3 {
                            if e[q][mm] == T::zero() {
                                continue;
                            }
                            for i in 0..3 {
                                for j in 0..3 {
                                    for k in 0..3 {
                                        let w = e[q][mm] * e[i][a] * e[j][b] * e[k][c];
                                        if w == T::zero() {
                                            continue;
                                        }
                                        let up: T = (0..3).map(|ll| to_frame[d][ll] * nriem[q][ll][i][j][k]).sum();
                                        acc = acc + w * up;
                                    }
                                }
                            }
                        }
                        acc
                    })
                })
            })
        })
    });
    let ric_coord: M3<T> = std::array::from_fn(|j| std::array::from_fn(|k| ric_j[j][k].value()));
    let ric = congruence(&ric_coord, &e);
    let scal = scal_j.value();
    let mut schouten = ric;
    for (i, row) in schouten.iter_mut().enumerate() {
        row[i] = row[i] - scal * T::c(0.25);
    }
    let dscal: V3<T> = std::array::from_fn(|a| (0..3).map(|i| e[i][a] * scal_j.d1(i)).sum());
    let nabla_ric: T3<T> = std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            std::array::from_fn(|c| {
                let mut acc = T::zero();
                for i in 0..3 {
                    for j in 0..3 {
                        for k in 0..3 {
                            acc = acc + e[i][a] * e[j][b] * e[k][c] * nric[i][j][k];
                        }
                    }
                }
                acc
            })
        })
    });
    let nabla2_ric: T4<T> = std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            std::array::from_fn(|c| {
                std::array::from_fn(|d| {
                    let mut acc = T::zero();
                    for l in 0..3 {
                        for i in 0..3 {
                            let w0 = e[l][a] * e[i][b];
                            if w0 == T::zero() {
                                continue;
                            }
                            for j in 0..3 {
                                for k in 0..3 {
                                    acc = acc + w0 * e[j][c] * e[k][d] * n2ric[l][i][j][k];
                                }
                            }
                        }
                    }
                    acc
                })
            })
        })
    });
    let christoffel = std::array::from_fn(|k| std::array::from_fn(|i| std::array::from_fn(|j| gam[k][i][j].truncate(2))));
    Ok(CurvaturePack {
        point: p,
        g: gval,
        ginv,
        frame,
        to_frame,
        christoffel,
        riem,
        nabla_riem,
        ric,
        ric_op: ric,
        scal,
        schouten,
        dscal,
        nabla_ric,
        nabla2_ric,
        ric_coord,
    })
}

/// `E^T m E`.
fn congruence<T: Real>(m: &M3<T>, e: &M3<T>) -> M3<T> {
    linalg::matmul(&linalg::transpose(e), &linalg::matmul(m, e))
}

/// Convenience: jets and pack at a point of a metric specification.
pub fn pack_at<T: Real>(spec: &MetricSpec, p: V3<T>) -> Result<CurvaturePack<T>> {
    curvature_pack(&metric_jets(spec, p)?)
}

impl<T: Real> CurvaturePack<T> {
    /// Frame components of a coordinate vector.
    pub fn frame_components(&self, v_coord: &V3<T>) -> V3<T> {
        linalg::matvec(&self.to_frame, v_coord)
    }

    /// Coordinate components of a frame vector.
    pub fn coordinate_components(&self, v_frame: &V3<T>) -> V3<T> {
        linalg::matvec(&self.frame, v_frame)
    }

    /// `R(x,y)z`.
    pub fn r_apply(&self, x: &V3<T>, y: &V3<T>, z: &V3<T>) -> V3<T> {
        apply4(&self.riem, x, y, z)
    }

    /// `(∇_w R)(x,y)z`.
    pub fn nabla_r_apply(&self, w: &V3<T>, x: &V3<T>, y: &V3<T>, z: &V3<T>) -> V3<T> {
        let mut out = [T::zero(); 3];
        for (m, t) in self.nabla_riem.iter().enumerate() {
            if w[m] == T::zero() {
                continue;
            }
            let part = apply4(t, x, y, z);
            for d in 0..3 {
                out[d] = out[d] + w[m] * part[d];
            }
        }
        out
    }

    pub fn ric_form(&self, x: &V3<T>, y: &V3<T>) -> T {
        linalg::form(&self.ric, x, y)
    }

    /// `(∇_x ric)(y,z)`.
    pub fn nabla_ric_form(&self, x: &V3<T>, y: &V3<T>, z: &V3<T>) -> T {
        let mut acc = T::zero();
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    acc = acc + self.nabla_ric[a][b][c] * x[a] * y[b] * z[c];
                }
            }
        }
        acc
    }

    /// `(∇²_{x,y} ric)(z,w)`.
    pub fn nabla2_ric_form(&self, x: &V3<T>, y: &V3<T>, z: &V3<T>, w: &V3<T>) -> T {
        let mut acc = T::zero();
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    for d in 0..3 {
                        acc = acc + self.nabla2_ric[a][b][c][d] * x[a] * y[b] * z[c] * w[d];
                    }
                }
            }
        }
        acc
    }

    /// Ricci form recomputed as `-Σ_i R(e_i,X,e_i,Y)` with `R(X,Y,Z,W) = g(R(X,Y)Z,W)`.
    pub fn ric_from_four_tensor(&self) -> M3<T> {
        std::array::from_fn(|x| std::array::from_fn(|y| -(0..3).map(|i| self.riem[i][x][i][y]).sum::<T>()))
    }

    /// Flips the sign of the curvature tensors only (debug aid for self tests).
    pub fn tamper_sign(&mut self) {
        for a in self.riem.iter_mut().flatten().flatten().flatten() {
            *a = -*a;
        }
        for a in self.nabla_riem.iter_mut().flatten().flatten().flatten().flatten() {
            *a = -*a;
        }
    }

    /// Structural residuals: antisymmetry, ric symmetry, scal trace, Schouten, first Bianchi.
    pub fn invariant_residuals(&self) -> [T; 5] {
        let mut anti = T::zero();
        let mut bianchi = T::zero();
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    for d in 0..3 {
                        anti = anti.max((self.riem[a][b][c][d] + self.riem[b][a][c][d]).abs());
                        let cyc = self.riem[a][b][c][d] + self.riem[b][c][a][d] + self.riem[c][a][b][d];
                        bianchi = bianchi.max(cyc.abs());
                    }
                }
            }
        }
        let mut sym = T::zero();
        let mut sch = T::zero();
        for i in 0..3 {
            for j in 0..3 {
                sym = sym.max((self.ric[i][j] - self.ric[j][i]).abs());
                let d = if i == j { self.scal * T::c(0.25) } else { T::zero() };
                sch = sch.max((self.schouten[i][j] - (self.ric[i][j] - d)).abs());
            }
        }
        let tr = (self.ric[0][0] + self.ric[1][1] + self.ric[2][2] - self.scal).abs();
        [anti, sym, tr, sch, bianchi]
    }
}

fn apply4<T: Real>(t: &T4<T>, x: &V3<T>, y: &V3<T>, z: &V3<T>) -> V3<T> {
    let mut out = [T::zero(); 3];
    for a in 0..3 {
        if x[a] == T::zero() {
            continue;
        }
        for b in 0..3 {
            if y[b] == T::zero() {
                continue;
            }
            for c in 0..3 {
                let w = x[a] * y[b] * z[c];
                if w == T::zero() {
                    continue;
                }
                for d in 0..3 {
                    out[d] = out[d] + w * t[a][b][c][d];
                }
            }
        }
    }
    out
}

/// Matrix of `J(v) = R(·,v)v` in the frame (`J[d][a]` = component `d` of `J e_a`).
pub fn jacobi_op<T: Real>(pack: &CurvaturePack<T>, v: &V3<T>) -> Result<M3<T>> {
    if linalg::norm(v) == T::zero() {
        return Err(Error::ZeroVector);
    }
    Ok(jacobi_from_riem(&pack.riem, v))
}

/// `J(v)` for an arbitrary curvature tensor in frame components.
pub fn jacobi_from_riem<T: Real>(riem: &T4<T>, v: &V3<T>) -> M3<T> {
    let mut j = linalg::zeros3();
    for a in 0..3 {
        let mut ea = [T::zero(); 3];
        ea[a] = T::one();
        let col = apply4(riem, &ea, v, v);
        for d in 0..3 {
            j[d][a] = col[d];
        }
    }
    j
}

/// Curvature tensor built from a Ricci operator via `R = ρ ∧ g` in an orthonormal frame.
pub fn riem_from_ricci<T: Real>(ric: &M3<T>) -> T4<T> {
    let scal = ric[0][0] + ric[1][1] + ric[2][2];
    let half = scal * T::c(0.5);
    let mut r = [[[[T::zero(); 3]; 3]; 3]; 3];
    // R(X,Y)Z = (Ric X ∧ Y + X ∧ Ric Y - (scal/2) X ∧ Y) Z,  (X ∧ Y)Z = g(Y,Z)X - g(X,Z)Y
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                for d in 0..3 {
                    let delta = |i: usize, j: usize| if i == j { T::one() } else { T::zero() };
                    let ricx_d = ric[d][a];
                    let ricy_d = ric[d][b];
                    let t1 = delta(b, c) * ricx_d - ric[c][a] * delta(b, d);
                    let t2 = ric[c][b] * delta(a, d) - delta(a, c) * ricy_d;
                    let t3 = (delta(b, c) * delta(a, d) - delta(a, c) * delta(b, d)) * half;
                    r[a][b][c][d] = t1 + t2 - t3;
                }
            }
        }
    }
    r
}

/// Maximum deviations of three universal 3-dimensional identities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityResiduals<T> {
    /// `tr(J(v)∘J(v))` against its Schouten expression.
    pub j2_residual: T,
    /// Contracted Bianchi `div Ric - ½ d scal`.
    pub bianchi_residual: T,
    /// `R` against `Ric X ∧ Y + X ∧ Ric Y - (scal/2) X ∧ Y`.
    pub kulkarni_residual: T,
}

pub fn identity_residuals<T: Real>(pack: &CurvaturePack<T>, samples: &[V3<T>]) -> IdentityResiduals<T> {
    let rho = &pack.schouten;
    let tr_rho = rho[0][0] + rho[1][1] + rho[2][2];
    let tr_rho2: T = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| rho[i][j] * rho[j][i]).sum();
    let mut j2 = T::zero();
    for v in samples {
        let j = jacobi_from_riem(&pack.riem, v);
        let lhs: T = (0..3).flat_map(|i| (0..3).map(move |k| (i, k))).map(|(i, k)| j[i][k] * j[k][i]).sum();
        let vv = linalg::dot(v, v);
        let rv = linalg::matvec(rho, v);
        let rvv = linalg::dot(&rv, v);
        let rhs = (tr_rho2 * vv + T::c(2.0) * tr_rho * rvv - T::c(2.0) * linalg::dot(&rv, &rv)) * vv + rvv * rvv;
        j2 = j2.max((lhs - rhs).abs());
    }
    let mut bianchi = T::zero();
    for b in 0..3 {
        let div: T = (0..3).map(|a| pack.nabla_ric[a][a][b]).sum();
        bianchi = bianchi.max((div - T::c(0.5) * pack.dscal[b]).abs());
    }
    let model = riem_from_ricci(&pack.ric);
    let mut kn = T::zero();
    for (x, y) in pack.riem.iter().flatten().flatten().flatten().zip(model.iter().flatten().flatten().flatten()) {
        kn = kn.max((*x - *y).abs());
    }
    IdentityResiduals {
        j2_residual: j2,
        bianchi_residual: bianchi,
        kulkarni_residual: kn,
    }
}

/// Max deviation of the Ricci identity
/// `(∇²_{X,Y} - ∇²_{Y,X}) ric(Z,W) = -ric(R(X,Y)Z,W) - ric(Z,R(X,Y)W)` over frame vectors.
pub fn ricci_identity_residual<T: Real>(pack: &CurvaturePack<T>) -> T {
    let mut worst = T::zero();
    let e = |i: usize| {
        let mut v = [T::zero(); 3];
        v[i] = T::one();
        v
    };
    for x in 0..3 {
        for y in 0..3 {
            for z in 0..3 {
                for w in 0..3 {
                    let lhs = pack.nabla2_ric[x][y][z][w] - pack.nabla2_ric[y][x][z][w];
                    let rz = pack.r_apply(&e(x), &e(y), &e(z));
                    let rw = pack.r_apply(&e(x), &e(y), &e(w));
                    let rhs = -pack.ric_form(&rz, &e(w)) - pack.ric_form(&e(z), &rw);
                    worst = worst.max((lhs - rhs).abs());
                }
            }
        }
    }
    worst
}

/// Ricci eigen-structure at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct RankReport<T> {
    /// Ascending.
    pub eigenvalues: V3<T>,
    /// Columns are unit eigenvectors in frame components.
    pub eigenframe: M3<T>,
    pub rank: usize,
    pub ric_nonpositive: bool,
    pub det_zero: bool,
}

pub fn ricci_rank<T: Real>(pack: &CurvaturePack<T>, tol: T) -> RankReport<T> {
    let (vals, mut vecs) = linalg::sym_eigen3(&pack.ric_op);
    for col in 0..3 {
        let first = (0..3).find(|&r| vecs[r][col].abs() > tol);
        if let Some(r) = first {
            if vecs[r][col] < T::zero() {
                for row in vecs.iter_mut() {
                    row[col] = -row[col];
                }
            }
        }
    }
    let maxabs = vals.iter().fold(T::zero(), |a, v| a.max(v.abs()));
    let thr = tol * (T::one() + maxabs);
    let rank = vals.iter().filter(|v| v.abs() > thr).count();
    RankReport {
        eigenvalues: vals,
        eigenframe: vecs,
        rank,
        ric_nonpositive: vals[2] <= thr,
        det_zero: rank <= 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Params;

    fn pack(name: &str, p: [f64; 3]) -> CurvaturePack<f64> {
        pack_at(&MetricSpec::builtin(name, &Params::new()).unwrap(), p).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn space_forms_have_constant_ricci() {
        for (name, p, k) in [
            ("sphere", [0.3, -0.2, 0.5], 1.0),
            ("hyperbolic", [0.1, 0.4, 1.3], -1.0),
            ("flat", [0.0, 0.0, 0.0], 0.0),
        ] {
            let pk = pack(name, p);
            for i in 0..3 {
                for j in 0..3 {
                    let want = if i == j { 2.0 * k } else { 0.0 };
                    assert!(close(pk.ric[i][j], want, 1e-10), "{name} ric[{i}][{j}] = {}", pk.ric[i][j]);
                }
            }
            assert!(close(pk.scal, 6.0 * k, 1e-10));
            for v in pk.dscal {
                assert!(v.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sphere_scaling_parameter() {
        let mut params = Params::new();
        params.insert("c".into(), 2.0);
        let pk = pack_at(&MetricSpec::builtin("sphere", &params).unwrap(), [0.1, 0.2, -0.3]).unwrap();
        assert!(close(pk.scal, 24.0, 1e-9));
    }

    #[test]
    fn four_tensor_trace_matches_ricci() {
        let pk = pack("heisenberg", [0.4, -0.7, 0.2]);
        let alt = pk.ric_from_four_tensor();
        for i in 0..3 {
            for j in 0..3 {
                assert!(close(alt[i][j], pk.ric[i][j], 1e-12));
            }
        }
    }

    #[test]
    fn structural_identities_on_random_metric() {
        let spec = MetricSpec::random_polynomial(7);
        let pk = pack_at(&spec, [0.1, -0.2, 0.15]).unwrap();
        for r in pk.invariant_residuals() {
            assert!(r < 1e-10, "{r}");
        }
        let samples = [[1.0, 0.0, 0.0], [0.3, -0.5, 0.8], [0.2, 0.9, -0.1]];
        let id = identity_residuals(&pk, &samples);
        assert!(id.j2_residual < 1e-10);
        assert!(id.bianchi_residual < 1e-9);
        assert!(id.kulkarni_residual < 1e-10);
        assert!(ricci_identity_residual(&pk) < 1e-8);
    }

    #[test]
    fn heisenberg_ricci_spectrum() {
        let pk = pack("heisenberg", [0.3, 0.1, -0.4]);
        let rep = ricci_rank(&pk, DEFAULT_RANK_TOL);
        let ev = rep.eigenvalues;
        assert!(close(ev[0], -0.5, 1e-10) && close(ev[1], -0.5, 1e-10) && close(ev[2], 0.5, 1e-10));
        assert_eq!(rep.rank, 3);
        assert!(!rep.ric_nonpositive);
    }

    #[test]
    fn product_metric_has_rank_one_ricci() {
        let pk = pack("h2xr", [0.2, 1.1, 0.0]);
        let rep = ricci_rank(&pk, DEFAULT_RANK_TOL);
        assert_eq!(rep.rank, 2);
        assert!(rep.det_zero && rep.ric_nonpositive);
        let sol = ricci_rank(&pack("sol", [0.0, 0.0, 0.3]), DEFAULT_RANK_TOL);
        assert_eq!(sol.rank, 1);
        assert!(close(sol.eigenvalues[0], -2.0, 1e-10));
    }

    #[test]
    fn jacobi_trace_is_ricci() {
        let pk = pack("sol", [0.1, 0.2, 0.3]);
        let v = [0.3, -0.4, 0.5];
        let j = jacobi_op(&pk, &v).unwrap();
        assert!(close(j[0][0] + j[1][1] + j[2][2], pk.ric_form(&v, &v), 1e-12));
        let jv = linalg::matvec(&j, &v);
        assert!(linalg::norm(&jv) < 1e-12);
        assert_eq!(jacobi_op(&pk, &[0.0; 3]), Err(Error::ZeroVector));
    }

    #[test]
    fn rejects_indefinite_metric() {
        let spec = MetricSpec::custom(["1", "0", "0", "-1", "0", "1"], Params::new(), [[-1.0, 1.0]; 3]).unwrap();
        assert!(matches!(metric_jets::<f64>(&spec, [0.0; 3]), Err(Error::NotPositiveDefinite(_))));
    }
}
