//! Dense univariate polynomials over a float or exact rational coefficient type.

use std::fmt::{self, Debug};
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Coefficient field for [`UPoly`].
///
/// Float types compare against a relative tolerance; `BigRational` is exact.
pub trait Coeff:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    const EXACT: bool;

    fn c_from_i64(v: i64) -> Self;

    fn c_ratio(n: i64, d: i64) -> Self {
        Self::c_from_i64(n) / Self::c_from_i64(d)
    }

    fn c_to_f64(&self) -> f64;

    /// Human-readable form (exact for rationals).
    fn c_display(&self) -> String;

    fn c_abs(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// -1, 0 or 1.
    fn c_sign(&self) -> i32 {
        if *self > Self::zero() {
            1
        } else if *self < Self::zero() {
            -1
        } else {
            0
        }
    }

    /// Square root when it is representable (always for non-negative floats,
    /// only for perfect squares of rationals).
    fn c_sqrt_exact(&self) -> Option<Self>;

    /// Zero test relative to `scale` (tolerance `1e-12 * scale` on floats, exact on rationals).
    fn c_negligible(&self, scale: &Self) -> bool;
}

macro_rules! float_coeff {
    ($t:ty) => {
        impl Coeff for $t {
            const EXACT: bool = false;
            #[inline]
            fn c_from_i64(v: i64) -> Self {
                v as $t
            }
            #[inline]
            fn c_to_f64(&self) -> f64 {
                *self as f64
            }
            fn c_display(&self) -> String {
                format!("{}", self)
            }
            fn c_sqrt_exact(&self) -> Option<Self> {
                if *self >= 0.0 {
                    Some(self.sqrt())
                } else {
                    None
                }
            }
            fn c_negligible(&self, scale: &Self) -> bool {
                self.abs() <= (1e-12 as $t) * scale.abs().max(<$t>::MIN_POSITIVE)
            }
        }
    };
}

float_coeff!(f32);
float_coeff!(f64);

impl Coeff for BigRational {
    const EXACT: bool = true;

    fn c_from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn c_to_f64(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn c_display(&self) -> String {
        format_rational(self)
    }

    fn c_sqrt_exact(&self) -> Option<Self> {
        if self.is_negative() {
            return None;
        }
        let n = self.numer();
        let d = self.denom();
        let rn = n.sqrt();
        let rd = d.sqrt();
        if &(&rn * &rn) == n && &(&rd * &rd) == d {
            Some(BigRational::new(rn, rd))
        } else {
            None
        }
    }

    fn c_negligible(&self, _scale: &Self) -> bool {
        self.is_zero()
    }
}

/// True when `x` equals `k * sqrt(m)` (with `m >= 0`), decided without taking roots.
pub fn equals_scaled_sqrt<C: Coeff>(x: &C, k: &C, m: &C) -> bool {
    let lhs = x.clone() * x.clone();
    let rhs = k.clone() * k.clone() * m.clone();
    let scale = lhs.c_abs() + rhs.c_abs();
    if !(lhs.clone() - rhs).c_negligible(&scale) {
        return false;
    }
    let sx = if x.c_negligible(&scale) { 0 } else { x.c_sign() };
    let sk = if (k.clone() * k.clone() * m.clone()).c_negligible(&scale) {
        0
    } else {
        k.c_sign()
    };
    sx == sk
}

/// Dense polynomial, coefficients in ascending powers of `t`.
#[derive(Clone, PartialEq)]
pub struct UPoly<C> {
    c: Vec<C>,
}

impl<C: Coeff> UPoly<C> {
    pub fn new(mut coeffs: Vec<C>) -> Self {
        while coeffs.last().is_some_and(|x| x.is_zero()) {
            coeffs.pop();
        }
        UPoly { c: coeffs }
    }

    pub fn zero() -> Self {
        UPoly { c: Vec::new() }
    }

    pub fn constant(v: C) -> Self {
        Self::new(vec![v])
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&v| C::c_from_i64(v)).collect())
    }

    /// `t^2 + 1`.
    pub fn t2p1() -> Self {
        Self::from_i64(&[1, 0, 1])
    }

    pub fn coeffs(&self) -> &[C] {
        &self.c
    }

    /// Coefficient of `t^k` (zero past the end).
    pub fn coeff(&self, k: usize) -> C {
        self.c.get(k).cloned().unwrap_or_else(C::zero)
    }

    /// Coefficients padded with zeros to length `n` (never truncates).
    pub fn padded(&self, n: usize) -> Vec<C> {
        let mut v = self.c.clone();
        while v.len() < n {
            v.push(C::zero());
        }
        v
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.c.len().checked_sub(1)
    }

    pub fn lead(&self) -> C {
        self.c.last().cloned().unwrap_or_else(C::zero)
    }

    pub fn max_abs(&self) -> C {
        self.c
            .iter()
            .map(|x| x.c_abs())
            .fold(C::zero(), |a, b| if b > a { b } else { a })
    }

    /// Drops coefficients negligible relative to `scale` (exact zeros on rationals).
    pub fn trimmed_rel(&self, scale: &C) -> Self {
        Self::new(
            self.c
                .iter()
                .map(|x| {
                    if x.c_negligible(scale) {
                        C::zero()
                    } else {
                        x.clone()
                    }
                })
                .collect(),
        )
    }

    /// Zero test with the coefficient tolerance of the backend.
    pub fn is_zero_rel(&self, scale: &C) -> bool {
        self.c.iter().all(|x| x.c_negligible(scale))
    }

    pub fn scale(&self, s: &C) -> Self {
        Self::new(self.c.iter().map(|x| x.clone() * s.clone()).collect())
    }

    pub fn eval(&self, t: &C) -> C {
        let mut acc = C::zero();
        for x in self.c.iter().rev() {
            acc = acc * t.clone() + x.clone();
        }
        acc
    }

    /// `(Re p(i), Im p(i))` by alternating coefficient sums.
    pub fn eval_i(&self) -> (C, C) {
        let mut re = C::zero();
        let mut im = C::zero();
        for (k, x) in self.c.iter().enumerate() {
            match k % 4 {
                0 => re = re + x.clone(),
                1 => im = im + x.clone(),
                2 => re = re - x.clone(),
                _ => im = im - x.clone(),
            }
        }
        (re, im)
    }

    /// `(Re p(i s), Im p(i s))` for real `s`.
    pub fn eval_imag(&self, s: &C) -> (C, C) {
        let mut re = C::zero();
        let mut im = C::zero();
        let mut pw = C::one();
        for (k, x) in self.c.iter().enumerate() {
            let term = x.clone() * pw.clone();
            match k % 4 {
                0 => re = re + term,
                1 => im = im + term,
                2 => re = re - term,
                _ => im = im - term,
            }
            pw = pw * s.clone();
        }
        (re, im)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, x)| x.clone() * C::c_from_i64(k as i64))
                .collect(),
        )
    }

    /// `t^n p(1/t)`; requires `deg p <= n`.
    pub fn reversed(&self, n: usize) -> Self {
        let mut v = self.padded(n + 1);
        v.reverse();
        Self::new(v)
    }

    /// Euclidean division; the divisor's leading coefficient must be nonzero.
    pub fn div_rem(&self, d: &Self) -> (Self, Self) {
        assert!(!d.is_zero(), "polynomial division by zero");
        let dd = d.c.len() - 1;
        let lead = d.lead();
        let mut r = self.c.clone();
        if r.len() <= dd {
            return (Self::zero(), self.clone());
        }
        let mut q = vec![C::zero(); r.len() - dd];
        for k in (0..q.len()).rev() {
            let f = r[k + dd].clone() / lead.clone();
            for (j, dj) in d.c.iter().enumerate() {
                r[k + j] = r[k + j].clone() - f.clone() * dj.clone();
            }
            r[k + dd] = C::zero();
            q[k] = f;
        }
        (Self::new(q), Self::new(r))
    }

    /// Quotient when `d` divides `self` within backend tolerance.
    pub fn exact_div(&self, d: &Self) -> Option<Self> {
        let (q, r) = self.div_rem(d);
        let scale = self.max_abs();
        if r.is_zero_rel(&scale) {
            Some(q)
        } else {
            None
        }
    }
}

impl<C: Coeff> Debug for UPoly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "UPoly{:?}", self.c)
    }
}

impl<C: Coeff> fmt::Display for UPoly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.c.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, x) in self.c.iter().enumerate().rev() {
            if x.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "({})", x.c_display())?,
                1 => write!(f, "({})*t", x.c_display())?,
                _ => write!(f, "({})*t^{}", x.c_display(), k)?,
            }
        }
        Ok(())
    }
}

impl<C: Coeff> Add for &UPoly<C> {
    type Output = UPoly<C>;
    fn add(self, o: &UPoly<C>) -> UPoly<C> {
        let n = self.c.len().max(o.c.len());
        UPoly::new((0..n).map(|k| self.coeff(k) + o.coeff(k)).collect())
    }
}

impl<C: Coeff> Sub for &UPoly<C> {
    type Output = UPoly<C>;
    fn sub(self, o: &UPoly<C>) -> UPoly<C> {
        let n = self.c.len().max(o.c.len());
        UPoly::new((0..n).map(|k| self.coeff(k) - o.coeff(k)).collect())
    }
}

impl<C: Coeff> Mul for &UPoly<C> {
    type Output = UPoly<C>;
    fn mul(self, o: &UPoly<C>) -> UPoly<C> {
        if self.is_zero() || o.is_zero() {
            return UPoly::zero();
        }
        let mut v = vec![C::zero(); self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            for (j, b) in o.c.iter().enumerate() {
                v[i + j] = v[i + j].clone() + a.clone() * b.clone();
            }
        }
        UPoly::new(v)
    }
}

impl<C: Coeff> Neg for &UPoly<C> {
    type Output = UPoly<C>;
    fn neg(self) -> UPoly<C> {
        UPoly::new(self.c.iter().map(|x| -x.clone()).collect())
    }
}

macro_rules! owned_binop {
    ($tr:ident, $m:ident) => {
        impl<C: Coeff> $tr for UPoly<C> {
            type Output = UPoly<C>;
            fn $m(self, o: UPoly<C>) -> UPoly<C> {
                (&self).$m(&o)
            }
        }
    };
}
owned_binop!(Add, add);
owned_binop!(Sub, sub);
owned_binop!(Mul, mul);

/// Sturm chain of a rational polynomial.
pub fn sturm_chain(p: &UPoly<BigRational>) -> Vec<UPoly<BigRational>> {
    let mut chain = vec![p.clone(), p.derivative()];
    loop {
        let n = chain.len();
        if chain[n - 1].is_zero() {
            chain.pop();
            break;
        }
        let (_, r) = chain[n - 2].div_rem(&chain[n - 1]);
        if r.is_zero() {
            break;
        }
        chain.push(-&r);
    }
    chain
}

fn sign_variations(chain: &[UPoly<BigRational>], x: &BigRational) -> usize {
    let signs: Vec<i32> = chain
        .iter()
        .map(|p| p.eval(x).c_sign())
        .filter(|&s| s != 0)
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Number of distinct real roots in the half-open interval `(a, b]`.
pub fn sturm_count(p: &UPoly<BigRational>, a: &BigRational, b: &BigRational) -> usize {
    if p.is_zero() {
        return usize::MAX;
    }
    let chain = sturm_chain(p);
    sign_variations(&chain, a).saturating_sub(sign_variations(&chain, b))
}

/// Number of distinct real roots in the open interval `(a, b)`.
pub fn sturm_count_open(p: &UPoly<BigRational>, a: &BigRational, b: &BigRational) -> usize {
    let n = sturm_count(p, a, b);
    if p.eval(b).is_zero() {
        n - 1
    } else {
        n
    }
}

/// Roots of `p` in `(a, b)` located by scanning `n_scan` cells for sign changes
/// and bisecting each bracket until it is narrower than `tol`.
pub fn bisect_roots(p: &UPoly<f64>, a: f64, b: f64, n_scan: usize, tol: f64) -> Vec<f64> {
    let mut roots = Vec::new();
    let h = (b - a) / n_scan as f64;
    for k in 0..n_scan {
        let mut lo = a + h * k as f64;
        let mut hi = lo + h;
        if k == 0 {
            lo += h * 1e-9;
        }
        if k + 1 == n_scan {
            hi -= h * 1e-9;
        }
        let mut flo = p.eval(&lo);
        let fhi = p.eval(&hi);
        if flo == 0.0 {
            roots.push(lo);
            continue;
        }
        if flo.signum() == fhi.signum() {
            continue;
        }
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            let fm = p.eval(&mid);
            if fm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if fm.signum() == flo.signum() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    roots
}

/// Parses `"3"`, `"-0.125"`, `"1.5e-3"` or `"7/3"` into an exact rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (ip, fp) = mant.split_once('.').unwrap_or((mant, ""));
    if ip.is_empty() && fp.is_empty() {
        return None;
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{}{}", ip, fp).parse().ok()?;
    let scale = exp - fp.len() as i32;
    let ten = BigInt::from(10);
    let mut r = BigRational::from_integer(digits);
    if scale >= 0 {
        r *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if neg { -r } else { r })
}

/// Exact decimal-or-fraction text for a rational (`"7/3"`, `"-2"`).
pub fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
