//! Truncated Taylor jets in three variables up to total order 4.
//!
//! Coefficients are partial derivatives (not Taylor coefficients), indexed by
//! multi-index in graded lexicographic order: `(0,0,0)`, `(1,0,0)`, `(0,1,0)`,
//! `(0,0,1)`, `(2,0,0)`, `(1,1,0)`, ...

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::expr::Func;
use crate::scalar::Real;

pub const MAX_ORDER: usize = 4;
pub const NCOEF: usize = 35;

/// Division and reciprocal fault below this magnitude.
pub const DIV_FAULT: f64 = 1e-12;

struct Tables {
    multi: Vec<[u8; 3]>,
    index: [[[usize; 5]; 5]; 5],
    /// For each target index: `(beta, gamma - beta, weight)`.
    product: Vec<Vec<(usize, usize, f64)>>,
    /// For each index and axis: index of `gamma + e_axis` (or `usize::MAX`).
    raise: Vec<[usize; 3]>,
}

fn binom(n: u8, k: u8) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let mut multi = Vec::with_capacity(NCOEF);
        for d in 0..=4u8 {
            for a in (0..=d).rev() {
                for b in (0..=d - a).rev() {
                    multi.push([a, b, d - a - b]);
                }
            }
        }
        let mut index = [[[usize::MAX; 5]; 5]; 5];
        for (k, m) in multi.iter().enumerate() {
            index[m[0] as usize][m[1] as usize][m[2] as usize] = k;
        }
        let mut product = Vec::with_capacity(NCOEF);
        for g in &multi {
            let mut terms = Vec::new();
            for b0 in 0..=g[0] {
                for b1 in 0..=g[1] {
                    for b2 in 0..=g[2] {
                        let w = binom(g[0], b0) * binom(g[1], b1) * binom(g[2], b2);
                        let kb = index[b0 as usize][b1 as usize][b2 as usize];
                        let kr = index[(g[0] - b0) as usize][(g[1] - b1) as usize]
                            [(g[2] - b2) as usize];
                        terms.push((kb, kr, w));
                    }
                }
            }
            product.push(terms);
        }
        let raise = multi
            .iter()
            .map(|m| {
                let mut r = [usize::MAX; 3];
                for (ax, slot) in r.iter_mut().enumerate() {
                    let mut n = *m;
                    n[ax] += 1;
                    if n.iter().map(|&x| x as usize).sum::<usize>() <= MAX_ORDER {
                        *slot = index[n[0] as usize][n[1] as usize][n[2] as usize];
                    }
                }
                r
            })
            .collect();
        Tables {
            multi,
            index,
            product,
            raise,
        }
    })
}

/// Multi-index at canonical position `k`.
pub fn multi_index(k: usize) -> [u8; 3] {
    tables().multi[k]
}

/// Canonical position of a multi-index of total order at most 4.
pub fn index_of(m: [u8; 3]) -> usize {
    tables().index[m[0] as usize][m[1] as usize][m[2] as usize]
}

fn degree(k: usize) -> usize {
    match k {
        0 => 0,
        1..=3 => 1,
        4..=9 => 2,
        10..=19 => 3,
        _ => 4,
    }
}

/// Number of coefficients of total order at most `order`.
pub fn ncoef(order: usize) -> usize {
    [1, 4, 10, 20, 35][order.min(4)]
}

/// Jet of a scalar function at a base point.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet4<T> {
    base: [T; 3],
    order: usize,
    c: [T; NCOEF],
}

impl<T: Real> Jet4<T> {
    pub fn constant(base: [T; 3], v: T, order: usize) -> Self {
        let mut c = [T::zero(); NCOEF];
        c[0] = v;
        Jet4 {
            base,
            order: order.min(MAX_ORDER),
            c,
        }
    }

    /// The coordinate function `x_{i+1}`.
    pub fn variable(base: [T; 3], i: usize, order: usize) -> Self {
        let mut j = Self::constant(base, base[i], order);
        if j.order >= 1 {
            j.c[1 + i] = T::one();
        }
        j
    }

    /// Builds a jet from its derivative table; entries above `order` are zeroed.
    pub fn from_coeffs(base: [T; 3], order: usize, coeffs: &[T]) -> Self {
        let order = order.min(MAX_ORDER);
        let mut c = [T::zero(); NCOEF];
        for (k, v) in coeffs.iter().take(ncoef(order)).enumerate() {
            c[k] = *v;
        }
        Jet4 { base, order, c }
    }

    pub fn base(&self) -> [T; 3] {
        self.base
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> T {
        self.c[0]
    }

    pub fn coeffs(&self) -> &[T; NCOEF] {
        &self.c
    }

    /// Partial derivative for multi-index `m` (zero above the jet order).
    pub fn deriv(&self, m: [u8; 3]) -> T {
        self.c[index_of(m)]
    }

    /// First partial derivative `d/dx_{i+1}` at the base point.
    pub fn d1(&self, i: usize) -> T {
        self.c[1 + i]
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self::from_coeffs(self.base, order.min(self.order), &self.c)
    }

    /// The jet of `d/dx_{i+1}` of this function; one order lower.
    pub fn partial(&self, i: usize) -> Self {
        let t = tables();
        let order = self.order.saturating_sub(1);
        let mut c = [T::zero(); NCOEF];
        if self.order > 0 {
            for (k, slot) in c.iter_mut().enumerate().take(ncoef(order)) {
                *slot = self.c[t.raise[k][i]];
            }
        }
        Jet4 {
            base: self.base,
            order,
            c,
        }
    }

    pub fn scale(&self, s: T) -> Self {
        let mut r = self.clone();
        r.c.iter_mut().for_each(|x| *x = *x * s);
        r
    }

    pub fn add_scalar(&self, s: T) -> Self {
        let mut r = self.clone();
        r.c[0] = r.c[0] + s;
        r
    }

    fn check_base(&self, o: &Self) -> Result<()> {
        if self.base == o.base {
            Ok(())
        } else {
            Err(Error::BasePointMismatch)
        }
    }

    fn zip(&self, o: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert!(self.base == o.base, "jet base points differ");
        let order = self.order.min(o.order);
        let mut c = [T::zero(); NCOEF];
        for (k, slot) in c.iter_mut().enumerate().take(ncoef(order)) {
            *slot = f(self.c[k], o.c[k]);
        }
        Jet4 {
            base: self.base,
            order,
            c,
        }
    }

    fn mul_raw(&self, o: &Self) -> Self {
        let t = tables();
        let order = self.order.min(o.order);
        let mut c = [T::zero(); NCOEF];
        for (k, slot) in c.iter_mut().enumerate().take(ncoef(order)) {
            let mut acc = T::zero();
            for &(b, r, w) in &t.product[k] {
                acc = acc + T::c(w) * self.c[b] * o.c[r];
            }
            *slot = acc;
        }
        Jet4 {
            base: self.base,
            order,
            c,
        }
    }

    /// Truncated Leibniz product.
    pub fn mul(&self, o: &Self) -> Result<Self> {
        self.check_base(o)?;
        Ok(self.mul_raw(o))
    }

    /// Reciprocal by coefficient recursion; faults when `|value| < 1e-12`.
    pub fn recip(&self) -> std::result::Result<Self, String> {
        let a0 = self.c[0];
        if a0.abs() < T::c(DIV_FAULT) || !a0.is_finite() {
            return Err(format!("division by near-zero value {:e}", a0.to_f64_lossy()));
        }
        let t = tables();
        let inv = T::one() / a0;
        let mut r = [T::zero(); NCOEF];
        r[0] = inv;
        for k in 1..ncoef(self.order) {
            let mut acc = T::zero();
            for &(b, rest, w) in &t.product[k] {
                if b != 0 {
                    acc = acc + T::c(w) * self.c[b] * r[rest];
                }
            }
            r[k] = -acc * inv;
        }
        Ok(Jet4 {
            base: self.base,
            order: self.order,
            c: r,
        })
    }

    pub fn div(&self, o: &Self) -> std::result::Result<Self, String> {
        if self.base != o.base {
            return Err("jet base points differ".into());
        }
        Ok(self.mul_raw(&o.recip()?))
    }

    pub fn powi(&self, n: i32) -> std::result::Result<Self, String> {
        if n < 0 {
            return self.recip()?.powi(-n);
        }
        let mut acc = Self::constant(self.base, T::one(), self.order);
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_raw(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_raw(&base);
            }
        }
        Ok(acc)
    }

    /// `f(self)` from the scalar derivatives `f^(k)(value)`, `k = 0..=order`.
    pub fn compose(&self, derivs: &[T]) -> Self {
        let mut h = self.clone();
        h.c[0] = T::zero();
        let mut out = Self::constant(self.base, derivs[0], self.order);
        let mut hp = Self::constant(self.base, T::one(), self.order);
        let mut fact = T::one();
        for (k, dk) in derivs.iter().enumerate().take(self.order + 1).skip(1) {
            hp = hp.mul_raw(&h);
            fact = fact * T::c(k as f64);
            out = &out + &hp.scale(*dk / fact);
        }
        out
    }

    pub fn apply(&self, f: Func) -> std::result::Result<Self, String> {
        let u = self.c[0];
        let d: [T; 5] = match f {
            Func::Exp => [u.exp(); 5],
            Func::Log => {
                if u <= T::zero() {
                    return Err(format!("log of non-positive value {}", u));
                }
                let r = T::one() / u;
                [
                    u.ln(),
                    r,
                    -r * r,
                    T::c(2.0) * r * r * r,
                    T::c(-6.0) * r * r * r * r,
                ]
            }
            Func::Sin => {
                let (s, c) = u.sin_cos();
                [s, c, -s, -c, s]
            }
            Func::Cos => {
                let (s, c) = u.sin_cos();
                [c, -s, -c, s, c]
            }
            Func::Sinh => {
                let (s, c) = (u.sinh(), u.cosh());
                [s, c, s, c, s]
            }
            Func::Cosh => {
                let (s, c) = (u.sinh(), u.cosh());
                [c, s, c, s, c]
            }
            Func::Sqrt => {
                if u <= T::zero() {
                    return Err(format!("sqrt of non-positive value {}", u));
                }
                let r = u.sqrt();
                let r3 = r * r * r;
                let r5 = r3 * r * r;
                let r7 = r5 * r * r;
                [
                    r,
                    T::c(0.5) / r,
                    T::c(-0.25) / r3,
                    T::c(0.375) / r5,
                    T::c(-0.9375) / r7,
                ]
            }
        };
        Ok(self.compose(&d))
    }

    /// Taylor polynomial value at `base + h` (used by tests).
    pub fn taylor_eval(&self, h: [T; 3]) -> T {
        let mut acc = T::zero();
        for k in 0..ncoef(self.order) {
            let m = multi_index(k);
            let mut term = self.c[k];
            for ax in 0..3 {
                for j in 0..m[ax] {
                    term = term * h[ax] / T::c((j + 1) as f64);
                }
            }
            acc = acc + term;
        }
        acc
    }

    /// Total order of coefficient `k`.
    pub fn degree_of(k: usize) -> usize {
        degree(k)
    }
}

/// Truncated product; errors on base-point mismatch.
pub fn jet_mul<T: Real>(a: &Jet4<T>, b: &Jet4<T>) -> Result<Jet4<T>> {
    a.mul(b)
}

impl<T: Real> Add for &Jet4<T> {
    type Output = Jet4<T>;
    fn add(self, o: &Jet4<T>) -> Jet4<T> {
        self.zip(o, |a, b| a + b)
    }
}

impl<T: Real> Sub for &Jet4<T> {
    type Output = Jet4<T>;
    fn sub(self, o: &Jet4<T>) -> Jet4<T> {
        self.zip(o, |a, b| a - b)
    }
}

/// Panics on base-point mismatch; use [`Jet4::mul`] for a checked product.
impl<T: Real> Mul for &Jet4<T> {
    type Output = Jet4<T>;
    fn mul(self, o: &Jet4<T>) -> Jet4<T> {
        assert!(self.base == o.base, "jet base points differ");
        self.mul_raw(o)
    }
}

impl<T: Real> Neg for &Jet4<T> {
    type Output = Jet4<T>;
    fn neg(self) -> Jet4<T> {
        self.scale(-T::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_lex_order() {
        assert_eq!(multi_index(0), [0, 0, 0]);
        assert_eq!(multi_index(1), [1, 0, 0]);
        assert_eq!(multi_index(3), [0, 0, 1]);
        assert_eq!(multi_index(4), [2, 0, 0]);
        assert_eq!(multi_index(5), [1, 1, 0]);
        assert_eq!(multi_index(9), [0, 0, 2]);
        assert_eq!(multi_index(10), [3, 0, 0]);
        assert_eq!(multi_index(34), [0, 0, 4]);
        for k in 0..NCOEF {
            assert_eq!(index_of(multi_index(k)), k);
        }
    }

    #[test]
    fn square_of_coordinate() {
        let x = Jet4::<f64>::variable([0.0; 3], 0, 4);
        let sq = &x * &x;
        for k in 0..NCOEF {
            let expect = if multi_index(k) == [2, 0, 0] { 2.0 } else { 0.0 };
            assert_eq!(sq.coeffs()[k], expect);
        }
    }

    #[test]
    fn partial_lowers_order() {
        let b = [0.3, -0.2, 0.5];
        let x = Jet4::<f64>::variable(b, 0, 4);
        let y = Jet4::<f64>::variable(b, 1, 4);
        let f = (&(&x * &x) * &y).apply(Func::Exp).unwrap();
        let fx = f.partial(0);
        assert_eq!(fx.order(), 3);
        assert!((fx.d1(1) - f.deriv([1, 1, 0])).abs() < 1e-15);
    }

    #[test]
    fn recip_times_self_is_one() {
        let b = [0.3, -0.2, 0.5];
        let x = Jet4::<f64>::variable(b, 0, 4);
        let z = Jet4::<f64>::variable(b, 2, 4);
        let f = (&x + &(&z * &z)).add_scalar(2.0);
        let one = &f * &f.recip().unwrap();
        assert!((one.value() - 1.0).abs() < 1e-15);
        assert!(one.coeffs()[1..].iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn mismatched_bases_rejected() {
        let a = Jet4::<f64>::variable([0.0; 3], 0, 2);
        let b = Jet4::<f64>::variable([1.0, 0.0, 0.0], 0, 2);
        assert_eq!(jet_mul(&a, &b), Err(Error::BasePointMismatch));
    }
}
