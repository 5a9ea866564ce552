//! Classification of the two quadratic polynomial constraints
//!
//! ```text
//! a12:  P^2 + (t^2+1)(d1 c)^2 = L (t^2+1)(a c)^2
//! a3 :  P^2 + (t^2+1)(d1 c)^2 = -8 (t^2+1)(a c)^2 (l2 t^2 + l3)
//! ```
//!
//! Branch decisions use only field operations and [`equals_scaled_sqrt`], so the
//! rational backend decides exactly. [`verify_constraint`] is the brute-force
//! oracle every verdict is checked against.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::poly::{equals_scaled_sqrt, format_rational, parse_rational, sturm_count_open, Coeff, UPoly};
use crate::Rational;

/// Which of the two eigen-directions produced an a12 instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum A12Tag {
    A1,
    A2,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Regime<C> {
    A12 { lambda: C, tag: A12Tag },
    A3 { l2: C, l3: C },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintInstance<C: Coeff> {
    pub a: UPoly<C>,
    pub c: UPoly<C>,
    pub d1: UPoly<C>,
    pub p: UPoly<C>,
    pub regime: Regime<C>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Branch {
    CZero,
    DEqualsSqrtLambdaA(i32),
    CaseIII(i32),
    CaseIV(i32),
    A3BranchII(i32, i32),
    Infeasible,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = |x: i32| if x < 0 { '-' } else { '+' };
        match self {
            Branch::CZero => write!(f, "CZero"),
            Branch::DEqualsSqrtLambdaA(x) => write!(f, "DEqualsSqrtLambdaA({})", s(*x)),
            Branch::CaseIII(x) => write!(f, "CaseIII({})", s(*x)),
            Branch::CaseIV(x) => write!(f, "CaseIV({})", s(*x)),
            Branch::A3BranchII(x, y) => write!(f, "A3BranchII({},{})", s(*x), s(*y)),
            Branch::Infeasible => write!(f, "Infeasible"),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BranchVerdict {
    pub branch: Branch,
    /// Factorization data reproducing the decision path.
    pub witness: Vec<String>,
    /// Violated condition for infeasible verdicts.
    pub certificate: Option<String>,
    /// Oracle residual (max coefficient deviation of the constraint).
    pub residual: f64,
    /// Largest coefficient among the two sides of the constraint.
    pub scale: f64,
    /// Set when the instance was reversed to bring the eigenvalues in order.
    pub via_tilde: bool,
}

impl BranchVerdict {
    /// Residual bound for non-infeasible verdicts.
    pub fn sound(&self) -> bool {
        self.branch == Branch::Infeasible || self.residual <= 1e-9 * self.scale.max(1.0)
    }
}

fn sgn<C: Coeff>(x: &C) -> i32 {
    x.c_sign()
}

fn ci<C: Coeff>(v: i64) -> C {
    C::c_from_i64(v)
}

fn poly_max<C: Coeff>(ps: &[&UPoly<C>]) -> C {
    ps.iter()
        .map(|p| p.max_abs())
        .fold(C::zero(), |a, b| if b > a { b } else { a })
}

impl<C: Coeff> ConstraintInstance<C> {
    pub fn map<D: Coeff>(&self, f: impl Fn(&C) -> D) -> ConstraintInstance<D> {
        let m = |p: &UPoly<C>| UPoly::new(p.coeffs().iter().map(&f).collect());
        ConstraintInstance {
            a: m(&self.a),
            c: m(&self.c),
            d1: m(&self.d1),
            p: m(&self.p),
            regime: match &self.regime {
                Regime::A12 { lambda, tag } => Regime::A12 {
                    lambda: f(lambda),
                    tag: *tag,
                },
                Regime::A3 { l2, l3 } => Regime::A3 {
                    l2: f(l2),
                    l3: f(l3),
                },
            },
        }
    }

    pub fn to_f64(&self) -> ConstraintInstance<f64> {
        self.map(|x| x.c_to_f64())
    }

    /// Largest coefficient over all four polynomials.
    pub fn coeff_scale(&self) -> C {
        poly_max(&[&self.a, &self.c, &self.d1, &self.p])
    }

    /// Checks the degree bounds of the regime.
    pub fn check_degrees(&self) -> Result<()> {
        if self.a.degree() != Some(2) {
            return Err(Error::Malformed(format!(
                "deg a must be 2, got {:?}",
                self.a.degree()
            )));
        }
        let (dd, dp) = match self.regime {
            Regime::A12 { .. } => (2, 5),
            Regime::A3 { .. } => (3, 6),
        };
        let over = |name: &str, p: &UPoly<C>, bound: usize| -> Result<()> {
            match p.degree() {
                Some(d) if d > bound => Err(Error::DegreeOverflow(format!(
                    "deg {} = {} exceeds {}",
                    name, d, bound
                ))),
                _ => Ok(()),
            }
        };
        over("c", &self.c, 2)?;
        over("d1", &self.d1, dd)?;
        over("P", &self.p, dp)
    }

    /// Multiplies `P` and `c` by `s`; the constraint is homogeneous of degree 2 in that pair.
    pub fn scaled_pc(&self, s: &C) -> Self {
        let mut out = self.clone();
        out.p = self.p.scale(s);
        out.c = self.c.scale(s);
        out
    }
}

/// The two sides of the constraint, `(lhs, rhs)`.
pub fn constraint_sides<C: Coeff>(inst: &ConstraintInstance<C>) -> (UPoly<C>, UPoly<C>) {
    let t2 = UPoly::<C>::t2p1();
    let dc = &inst.d1 * &inst.c;
    let ac = &inst.a * &inst.c;
    let lhs = &(&inst.p * &inst.p) + &(&t2 * &(&dc * &dc));
    let rhs = match &inst.regime {
        Regime::A12 { lambda, .. } => (&t2 * &(&ac * &ac)).scale(lambda),
        Regime::A3 { l2, l3 } => {
            let m = UPoly::new(vec![l3.clone(), C::zero(), l2.clone()]);
            (&t2 * &(&(&ac * &ac) * &m)).scale(&ci(-8))
        }
    };
    (lhs, rhs)
}

/// Max coefficient deviation between the two sides (exact on rationals).
pub fn verify_constraint<C: Coeff>(inst: &ConstraintInstance<C>) -> Result<C> {
    inst.check_degrees()?;
    let (lhs, rhs) = constraint_sides(inst);
    Ok((&lhs - &rhs).max_abs())
}

fn finish<C: Coeff>(
    inst: &ConstraintInstance<C>,
    branch: Branch,
    witness: Vec<String>,
    certificate: Option<String>,
) -> BranchVerdict {
    let (lhs, rhs) = constraint_sides(inst);
    let residual = (&lhs - &rhs).max_abs().c_to_f64();
    let scale = poly_max(&[&lhs, &rhs]).c_to_f64();
    BranchVerdict {
        branch,
        witness,
        certificate,
        residual,
        scale,
        via_tilde: false,
    }
}

fn infeasible<C: Coeff>(inst: &ConstraintInstance<C>, witness: Vec<String>, why: String) -> BranchVerdict {
    finish(inst, Branch::Infeasible, witness, Some(why))
}

/// Nonzero `c` with negligible leading coefficients removed.
fn trimmed_c<C: Coeff>(inst: &ConstraintInstance<C>) -> UPoly<C> {
    inst.c.trimmed_rel(&inst.coeff_scale())
}

/// Classifies an a12 instance (requires `L > 0`).
pub fn classify_a12<C: Coeff>(inst: &ConstraintInstance<C>) -> Result<BranchVerdict> {
    let (lambda, tag) = match &inst.regime {
        Regime::A12 { lambda, tag } => (lambda.clone(), *tag),
        _ => return Err(Error::Precondition("a12 regime expected".into())),
    };
    inst.check_degrees()?;
    if lambda <= C::zero() {
        return Err(Error::Precondition("Lambda must be positive".into()));
    }
    let c = trimmed_c(inst);
    let p_scale = inst.coeff_scale();
    if c.is_zero() {
        return Ok(if inst.p.is_zero_rel(&p_scale) {
            finish(inst, Branch::CZero, vec!["c = 0, P = 0".into()], None)
        } else {
            infeasible(inst, vec![], "c = 0 forces P = 0".into())
        });
    }
    let Some(q) = inst.p.exact_div(&c) else {
        return Ok(infeasible(inst, vec![], "c does not divide P".into()));
    };
    let q = q.trimmed_rel(&p_scale);
    let mut witness = vec![format!("P = c * q, q = {}", q)];
    let (re, im) = q.eval_i();
    let qs = q.max_abs();
    if !(re.c_negligible(&qs) && im.c_negligible(&qs)) {
        return Ok(infeasible(inst, witness, "q(i) != 0".into()));
    }
    let Some(v) = q.exact_div(&UPoly::t2p1()) else {
        return Ok(infeasible(inst, witness, "t^2+1 does not divide q".into()));
    };
    let v = v.trimmed_rel(&qs);
    witness.push(format!("q = (t^2+1) * v, v = {}", v));
    // Eigenvalue tied to L, and the other one read off a(0).
    let nu = -lambda.clone() / ci(8);
    let mu = inst.a.coeff(0) * ci(2);
    match v.degree() {
        Some(d) if d >= 2 => {
            return Ok(infeasible(
                inst,
                witness,
                format!("deg v = {} exceeds 1 (deg a = 2, deg d1 <= 2)", d),
            ))
        }
        Some(1) => {
            // Both factorizations give x1 x2 = -nu * mu * L.
            let prod = -(nu.clone() * mu.clone() * lambda.clone());
            witness.push(format!(
                "x1 x2 = -nu mu L = {} (nu = {}, mu = {})",
                prod.c_display(),
                nu.c_display(),
                mu.c_display()
            ));
            if prod < C::zero() {
                return Ok(infeasible(
                    inst,
                    witness,
                    "sign clash: deg v = 1 needs x1 x2 > 0 but x1 x2 < 0".into(),
                ));
            }
            let ok = identity_a12(inst, &lambda, &v);
            if ok {
                return Err(Error::Malformed(
                    "deg v = 1 solution: a is outside the eigenvalue regime".into(),
                ));
            }
            return Ok(infeasible(
                inst,
                witness,
                "L a^2 - d1^2 != (t^2+1) v^2".into(),
            ));
        }
        _ => {}
    }
    if !identity_a12(inst, &lambda, &v) {
        return Ok(infeasible(
            inst,
            witness,
            "L a^2 - d1^2 != (t^2+1) v^2".into(),
        ));
    }
    if v.is_zero() {
        let s = sgn(&inst.d1.lead()) * sgn(&inst.a.lead());
        witness.push(format!("d1 = {}sqrt(L) a", if s < 0 { "-" } else { "+" }));
        return Ok(finish(inst, Branch::DEqualsSqrtLambdaA(s), witness, None));
    }
    let dir = match sgn(&(nu.clone() - mu.clone())) {
        0 => 1,
        x => x,
    };
    let s = sgn(&inst.d1.lead()) * dir;
    witness.push(format!(
        "d1 = {}sqrt(-2 nu)((nu - mu) t^2 + 2 nu - mu), v^2 = L nu (mu - nu)",
        if s < 0 { "-" } else { "+" }
    ));
    let b = match tag {
        A12Tag::A1 => Branch::CaseIII(s),
        A12Tag::A2 => Branch::CaseIV(s),
    };
    Ok(finish(inst, b, witness, None))
}

fn identity_a12<C: Coeff>(inst: &ConstraintInstance<C>, lambda: &C, v: &UPoly<C>) -> bool {
    let la2 = (&inst.a * &inst.a).scale(lambda);
    let d2 = &inst.d1 * &inst.d1;
    let tv = &UPoly::t2p1() * &(v * v);
    let scale = poly_max(&[&la2, &d2, &tv]);
    (&(&la2 - &d2) - &tv).is_zero_rel(&scale)
}

/// `l3 t^2 + l2`.
fn w_poly<C: Coeff>(l2: &C, l3: &C) -> UPoly<C> {
    UPoly::new(vec![l2.clone(), C::zero(), l3.clone()])
}

/// Degree of `q + s * sqrt(-2 l2) * w` decided exactly.
fn qpm_degree<C: Coeff>(q: &UPoly<C>, l2: &C, l3: &C, s: i64) -> Option<usize> {
    let m = [l2.clone(), C::zero(), l3.clone()];
    let root_arg = -l2.clone() * ci(2);
    (0..3).rev().find(|&k| {
        let target = m[k].clone() * ci(-s);
        !equals_scaled_sqrt(&q.coeff(k), &target, &root_arg)
    })
}

fn r_certificate<C: Coeff>(l2: &C, l3: &C) -> String {
    let cubic = UPoly::<Rational>::from_i64(&[-4, 4, -1, 1]);
    let n = sturm_count_open(&cubic, &Rational::zero(), &Rational::one());
    format!(
        "(r-1)(r^2+4) has no root in (0,1) (Sturm count {}), r = l3/l2 = {}",
        n,
        (l3.clone() / l2.clone()).c_display()
    )
}

/// Classifies an a3 instance with `l2 < l3 < 0`.
pub fn classify_a3<C: Coeff>(inst: &ConstraintInstance<C>) -> Result<BranchVerdict> {
    let (l2, l3) = match &inst.regime {
        Regime::A3 { l2, l3 } => (l2.clone(), l3.clone()),
        _ => return Err(Error::Precondition("a3 regime expected".into())),
    };
    if l2 >= C::zero() || l3 >= C::zero() {
        return Err(Error::NonNegativeEigenvalue);
    }
    if l2 == l3 {
        return Err(Error::EqualEigenvalues);
    }
    if l3 < l2 {
        return Err(Error::Precondition(
            "l2 < l3 required; apply the tilde transform first".into(),
        ));
    }
    inst.check_degrees()?;
    let w = w_poly(&l2, &l3);
    let a2 = (&inst.a * &inst.a).scale(&ci(4));
    let ww = &w * &w;
    if !(&a2 - &ww).is_zero_rel(&poly_max(&[&a2, &ww])) {
        return Err(Error::Malformed("4 a^2 must equal (l3 t^2 + l2)^2".into()));
    }
    let c = trimmed_c(inst);
    let scale = inst.coeff_scale();
    if c.is_zero() {
        return Ok(if inst.p.is_zero_rel(&scale) {
            finish(inst, Branch::CZero, vec!["c = 0, P = 0".into()], None)
        } else {
            infeasible(inst, vec![], "c = 0 forces P = 0".into())
        });
    }
    let q = inst
        .p
        .exact_div(&c)
        .map(|x| x.trimmed_rel(&scale))
        .and_then(|x| x.exact_div(&UPoly::t2p1()));
    let Some(q) = q else {
        return Ok(infeasible(inst, vec![], "c (t^2+1) does not divide P".into()));
    };
    let q = q.trimmed_rel(&scale);
    let mut witness = vec![format!("P = c (t^2+1) q, q = {}", q)];
    if q.degree().is_some_and(|d| d > 2) {
        return Ok(infeasible(inst, witness, "deg q exceeds 2".into()));
    }
    // H1 = d1 - i k w, H2 = d1 + i k w with k = sqrt(2(l3 - l2)); w(i) = l2 - l3.
    let (re, im) = inst.d1.eval_i();
    let dscale = inst.d1.max_abs();
    let kk = (l3.clone() - l2.clone()) * ci(2);
    let re0 = re.c_negligible(&dscale);
    let h1 = re0 && equals_scaled_sqrt(&im, &(l2.clone() - l3.clone()), &kk);
    let h2 = re0 && equals_scaled_sqrt(&im, &(l3.clone() - l2.clone()), &kk);
    if !h1 && !h2 {
        return Ok(infeasible(inst, witness, "neither H1(i) nor H2(i) vanishes".into()));
    }
    witness.push(if h1 { "H1(i) = 0" } else { "H2(i) = 0" }.into());
    let dp = qpm_degree(&q, &l2, &l3, 1);
    let dm = qpm_degree(&q, &l2, &l3, -1);
    witness.push(format!("deg q+ = {:?}, deg q- = {:?}", dp, dm));
    for d in [dp, dm] {
        match d {
            None | Some(1) => {
                return Ok(infeasible(
                    inst,
                    witness,
                    "q+ or q- has a real root, contradicting d1^2 + 2(l3-l2) w^2 > 0".into(),
                ))
            }
            Some(0) => {
                let cert = r_certificate(&l2, &l3);
                return Ok(infeasible(inst, witness, cert));
            }
            _ => {}
        }
    }
    let m = UPoly::new(vec![l3.clone(), C::zero(), l2.clone()]);
    let t1 = &UPoly::t2p1() * &(&q * &q);
    let t2 = &inst.d1 * &inst.d1;
    let t3 = (&ww * &m).scale(&ci(2));
    let red = &(&t1 + &t2) + &t3;
    if !red.is_zero_rel(&poly_max(&[&t1, &t2, &t3])) {
        return Ok(infeasible(
            inst,
            witness,
            "(t^2+1) q^2 + d1^2 + 2 w^2 (l2 t^2 + l3) != 0".into(),
        ));
    }
    let s1 = -sgn(&inst.d1.lead());
    let s2 = -sgn(&q.coeff(2));
    witness.push(format!(
        "d1 = {}sqrt(2(l3-l2)) t w, P = {}sqrt(-2 l3) c (t^2+1) w",
        if s1 < 0 { "-" } else { "+" },
        if s2 < 0 { "-" } else { "+" }
    ));
    Ok(finish(inst, Branch::A3BranchII(s1, s2), witness, None))
}

/// `t^6 P(1/t)`, `t^3 d1(1/t)`, `t^2 a(1/t)`, `t^2 c(1/t)` with `l2` and `l3` swapped.
pub fn tilde_transform<C: Coeff>(inst: &ConstraintInstance<C>) -> Result<ConstraintInstance<C>> {
    let Regime::A3 { l2, l3 } = &inst.regime else {
        return Err(Error::Precondition("tilde transform needs the a3 regime".into()));
    };
    inst.check_degrees()?;
    Ok(ConstraintInstance {
        a: inst.a.reversed(2),
        c: inst.c.reversed(2),
        d1: inst.d1.reversed(3),
        p: inst.p.reversed(6),
        regime: Regime::A3 {
            l2: l3.clone(),
            l3: l2.clone(),
        },
    })
}

/// [`classify_a3`] after reversing the instance when `l3 < l2`.
pub fn classify_a3_any<C: Coeff>(inst: &ConstraintInstance<C>) -> Result<BranchVerdict> {
    match &inst.regime {
        Regime::A3 { l2, l3 } if l3 < l2 => {
            let mut v = classify_a3(&tilde_transform(inst)?)?;
            v.via_tilde = true;
            Ok(v)
        }
        _ => classify_a3(inst),
    }
}

/// Dispatches on the regime.
pub fn classify<C: Coeff>(inst: &ConstraintInstance<C>) -> Result<BranchVerdict> {
    match inst.regime {
        Regime::A12 { .. } => classify_a12(inst),
        Regime::A3 { .. } => classify_a3_any(inst),
    }
}

// ---------------------------------------------------------------------------
// JSON instance files

fn json_coeff(v: &Value) -> Result<Rational> {
    let s = match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        _ => return Err(Error::Parse(format!("coefficient must be a string, got {}", v))),
    };
    parse_rational(&s).ok_or_else(|| Error::Parse(format!("bad coefficient `{}`", s)))
}

fn json_poly(obj: &Map<String, Value>, key: &str) -> Result<UPoly<Rational>> {
    match obj.get(key) {
        None => Err(Error::Parse(format!("missing `{}`", key))),
        Some(Value::Array(xs)) => Ok(UPoly::new(
            xs.iter().map(json_coeff).collect::<Result<Vec<_>>>()?,
        )),
        Some(v) => Err(Error::Parse(format!("`{}` must be an array, got {}", key, v))),
    }
}

fn poly_json(p: &UPoly<Rational>) -> Value {
    Value::Array(p.coeffs().iter().map(|x| Value::String(format_rational(x))).collect())
}

impl FromStr for ConstraintInstance<Rational> {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_json(&v)
    }
}

impl ConstraintInstance<Rational> {
    /// Reads `{regime, lambda2, lambda3 | Lambda, a, c, d1, P}`.
    ///
    /// Regimes: `a12` (same as `a1`), `a1`, `a2`, `a3`. For `a1`/`a2` a missing
    /// `Lambda` is derived from the eigenvalues as `-8 l2` resp. `-8 l3`.
    pub fn from_json(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Parse("instance must be a JSON object".into()))?;
        let regime_s = obj
            .get("regime")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Parse("missing `regime`".into()))?;
        let num = |k: &str| obj.get(k).map(json_coeff).transpose();
        let regime = match regime_s {
            "a12" | "a1" | "a2" => {
                let tag = if regime_s == "a2" { A12Tag::A2 } else { A12Tag::A1 };
                let lambda = match num("Lambda")? {
                    Some(l) => l,
                    None => {
                        let key = if tag == A12Tag::A1 { "lambda2" } else { "lambda3" };
                        let l = num(key)?.ok_or_else(|| {
                            Error::Parse(format!("missing `Lambda` (or `{}`)", key))
                        })?;
                        l * Rational::c_from_i64(-8)
                    }
                };
                Regime::A12 { lambda, tag }
            }
            "a3" => Regime::A3 {
                l2: num("lambda2")?.ok_or_else(|| Error::Parse("missing `lambda2`".into()))?,
                l3: num("lambda3")?.ok_or_else(|| Error::Parse("missing `lambda3`".into()))?,
            },
            other => return Err(Error::Parse(format!("unknown regime `{}`", other))),
        };
        Ok(ConstraintInstance {
            a: json_poly(obj, "a")?,
            c: json_poly(obj, "c")?,
            d1: json_poly(obj, "d1")?,
            p: json_poly(obj, "P")?,
            regime,
        })
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "a": poly_json(&self.a),
            "c": poly_json(&self.c),
            "d1": poly_json(&self.d1),
            "P": poly_json(&self.p),
        });
        let o = v.as_object_mut().expect("object literal");
        match &self.regime {
            Regime::A12 { lambda, tag } => {
                o.insert("regime".into(), json!(if *tag == A12Tag::A1 { "a1" } else { "a2" }));
                o.insert("Lambda".into(), json!(format_rational(lambda)));
            }
            Regime::A3 { l2, l3 } => {
                o.insert("regime".into(), json!("a3"));
                o.insert("lambda2".into(), json!(format_rational(l2)));
                o.insert("lambda3".into(), json!(format_rational(l3)));
            }
        }
        v
    }
}

// ---------------------------------------------------------------------------
// Planted instances

/// Families of instances with a known classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Planted {
    A12CZero,
    DSqrtLambda,
    CaseIII,
    CaseIV,
    /// `P = c (t^2+1) v` with `deg v = 1`.
    DegOneV,
    A3CZero,
    A3BranchII,
    /// `deg q+ = 0` with `H1(i) = 0`.
    A3DegZero,
}

impl Planted {
    pub const ALL: [Planted; 8] = [
        Planted::A12CZero,
        Planted::DSqrtLambda,
        Planted::CaseIII,
        Planted::CaseIV,
        Planted::DegOneV,
        Planted::A3CZero,
        Planted::A3BranchII,
        Planted::A3DegZero,
    ];
}

fn rq(n: i64, d: i64) -> Rational {
    Rational::c_ratio(n, d)
}

/// Rational with numerator in `[-64, 64]` and denominator in `[1, 64]`.
fn rand_q(rng: &mut ChaCha8Rng) -> Rational {
    rq(rng.random_range(-64..=64), rng.random_range(1..=64))
}

fn rand_pos(rng: &mut ChaCha8Rng) -> Rational {
    rq(rng.random_range(1..=12), rng.random_range(1..=8))
}

fn rand_sign(rng: &mut ChaCha8Rng) -> i32 {
    if rng.random_bool(0.5) {
        1
    } else {
        -1
    }
}

fn rand_poly(rng: &mut ChaCha8Rng, deg: usize) -> UPoly<Rational> {
    UPoly::new((0..=deg).map(|_| rand_q(rng)).collect())
}

fn rand_nonzero_poly(rng: &mut ChaCha8Rng, max_deg: usize) -> UPoly<Rational> {
    loop {
        let d = rng.random_range(0..=max_deg);
        let p = rand_poly(rng, d);
        if !p.is_zero() {
            return p;
        }
    }
}

fn sq(x: &Rational) -> Rational {
    x.clone() * x.clone()
}

/// Negative rational different from `nu`.
fn other_eigenvalue(rng: &mut ChaCha8Rng, nu: &Rational) -> Rational {
    loop {
        let mu = -rand_pos(rng);
        if &mu != nu {
            return mu;
        }
    }
}

/// `a = ((mu - nu) t^2 + mu) / 2`.
fn regime_a(nu: &Rational, mu: &Rational) -> UPoly<Rational> {
    let h = rq(1, 2);
    UPoly::new(vec![mu.clone() * h.clone(), Rational::zero(), (mu.clone() - nu.clone()) * h])
}

/// Random instance of the given family and the branch it must classify to.
pub fn planted_instance(kind: Planted, seed: u64) -> (ConstraintInstance<Rational>, Branch) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = &mut rng;
    let one = || Rational::one();
    let t2 = UPoly::<Rational>::t2p1();
    match kind {
        Planted::A12CZero => {
            let nu = -rand_pos(r);
            let mu = other_eigenvalue(r, &nu);
            let inst = ConstraintInstance {
                a: regime_a(&nu, &mu),
                c: UPoly::zero(),
                d1: rand_poly(r, 2),
                p: UPoly::zero(),
                regime: Regime::A12 {
                    lambda: nu * rq(-8, 1),
                    tag: A12Tag::A1,
                },
            };
            (inst, Branch::CZero)
        }
        Planted::DSqrtLambda => {
            let s = rand_pos(r);
            let lambda = sq(&s);
            let nu = -lambda.clone() / rq(8, 1);
            let mu = other_eigenvalue(r, &nu);
            let a = regime_a(&nu, &mu);
            let sign = rand_sign(r);
            let d1 = a.scale(&(s * Rational::c_from_i64(sign as i64)));
            // a has negative leading coefficient when mu < nu; record the actual sign.
            let expected = Branch::DEqualsSqrtLambdaA(d1.lead().c_sign() * a.lead().c_sign());
            let inst = ConstraintInstance {
                a,
                c: rand_nonzero_poly(r, 2),
                d1,
                p: UPoly::zero(),
                regime: Regime::A12 {
                    lambda,
                    tag: A12Tag::A1,
                },
            };
            (inst, expected)
        }
        Planted::CaseIII | Planted::CaseIV => {
            let k = rand_pos(r);
            let m = rand_pos(r);
            let nu = sq(&k) * rq(-2, 1);
            let mu = nu.clone() - sq(&m) * rq(2, 1);
            let lambda = sq(&k) * rq(16, 1);
            let sd = rand_sign(r);
            let sp = rand_sign(r);
            let two_k = k.clone() * rq(2, 1);
            let d1 = UPoly::new(vec![
                nu.clone() * rq(2, 1) - mu.clone(),
                Rational::zero(),
                nu.clone() - mu.clone(),
            ])
            .scale(&(two_k * Rational::c_from_i64(sd as i64)));
            let v = sq(&k) * m * rq(8, 1) * Rational::c_from_i64(sp as i64);
            let c = rand_nonzero_poly(r, 2);
            let p = (&c * &t2).scale(&v);
            let tag = if kind == Planted::CaseIII { A12Tag::A1 } else { A12Tag::A2 };
            let inst = ConstraintInstance {
                a: regime_a(&nu, &mu),
                c,
                d1,
                p,
                regime: Regime::A12 { lambda, tag },
            };
            let b = if tag == A12Tag::A1 {
                Branch::CaseIII(sd)
            } else {
                Branch::CaseIV(sd)
            };
            (inst, b)
        }
        Planted::DegOneV => {
            let nu = -rand_pos(r);
            let mu = other_eigenvalue(r, &nu);
            let c = rand_nonzero_poly(r, 2);
            let x = rand_pos(r) * Rational::c_from_i64(rand_sign(r) as i64);
            let v = UPoly::new(vec![-rand_q(r) * x.clone(), x]);
            let p = &(&c * &t2) * &v;
            let inst = ConstraintInstance {
                a: regime_a(&nu, &mu),
                c,
                d1: rand_poly(r, 2),
                p,
                regime: Regime::A12 {
                    lambda: nu * rq(-8, 1),
                    tag: A12Tag::A1,
                },
            };
            (inst, Branch::Infeasible)
        }
        Planted::A3CZero => {
            let l3 = -rand_pos(r);
            let l2 = l3.clone() - rand_pos(r);
            let inst = ConstraintInstance {
                a: w_poly(&l2, &l3).scale(&rq(1, 2)),
                c: UPoly::zero(),
                d1: rand_poly(r, 3),
                p: UPoly::zero(),
                regime: Regime::A3 { l2, l3 },
            };
            (inst, Branch::CZero)
        }
        Planted::A3BranchII => {
            let k = rand_pos(r);
            let m = rand_pos(r);
            let l3 = sq(&k) * rq(-2, 1);
            let l2 = l3.clone() - sq(&m) * rq(2, 1);
            let w = w_poly(&l2, &l3);
            let s1 = rand_sign(r);
            let s2 = rand_sign(r);
            let sa = Rational::c_from_i64(rand_sign(r) as i64);
            let c = rand_nonzero_poly(r, 2);
            let d1 = (&UPoly::new(vec![Rational::zero(), one()]) * &w)
                .scale(&(m * rq(2 * s1 as i64, 1)));
            let p = (&(&c * &t2) * &w).scale(&(k * rq(2 * s2 as i64, 1)));
            let inst = ConstraintInstance {
                a: w.scale(&(sa * rq(-1, 2))),
                c,
                d1,
                p,
                regime: Regime::A3 { l2, l3 },
            };
            (inst, Branch::A3BranchII(s1, s2))
        }
        Planted::A3DegZero => {
            // m < k keeps l3 negative.
            let k = rand_pos(r);
            let m = k.clone() * rq(r.random_range(1..=15), 16);
            let l2 = sq(&k) * rq(-2, 1);
            let l3 = l2.clone() + sq(&m) * rq(2, 1);
            let kappa = m * rq(2, 1);
            let sigma = k * rq(2, 1);
            let w = w_poly(&l2, &l3);
            let d1 = UPoly::new(vec![Rational::zero(), (l2.clone() - l3.clone()) * kappa]);
            let c1 = l3.clone() * (l3.clone() - l2.clone()) / sigma.clone();
            let q = &UPoly::constant(c1) - &w.scale(&sigma);
            let c = rand_nonzero_poly(r, 2);
            let p = &(&c * &t2) * &q;
            let inst = ConstraintInstance {
                a: w.scale(&rq(1, 2)),
                c,
                d1,
                p,
                regime: Regime::A3 { l2, l3 },
            };
            (inst, Branch::Infeasible)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[i64]) -> UPoly<Rational> {
        UPoly::from_i64(v)
    }

    #[test]
    fn czero_residual_is_zero() {
        let inst = ConstraintInstance {
            a: p(&[1, 2, 3]),
            c: UPoly::zero(),
            d1: p(&[5, -1]),
            p: UPoly::zero(),
            regime: Regime::A12 {
                lambda: rq(3, 1),
                tag: A12Tag::A1,
            },
        };
        assert!(verify_constraint(&inst).unwrap().is_zero());
        assert_eq!(classify_a12(&inst).unwrap().branch, Branch::CZero);
    }

    #[test]
    fn sqrt2_float_instance() {
        let a = UPoly::<f64>::new(vec![0.3, -1.1, 2.0]);
        let inst = ConstraintInstance {
            d1: a.scale(&2f64.sqrt()),
            a,
            c: UPoly::new(vec![1.0, 1.0]),
            p: UPoly::zero(),
            regime: Regime::A12 {
                lambda: 2.0,
                tag: A12Tag::A1,
            },
        };
        assert!(verify_constraint(&inst).unwrap() < 1e-12);
        let v = classify_a12(&inst).unwrap();
        assert_eq!(v.branch, Branch::DEqualsSqrtLambdaA(1));
        assert!(v.sound());
    }

    #[test]
    fn random_instance_has_residual() {
        let inst = ConstraintInstance {
            a: p(&[1, 0, 2]),
            c: p(&[1, 1]),
            d1: p(&[0, 1]),
            p: p(&[1, 2, 3]),
            regime: Regime::A12 {
                lambda: rq(2, 1),
                tag: A12Tag::A1,
            },
        };
        assert!(!verify_constraint(&inst).unwrap().is_zero());
        assert_eq!(classify_a12(&inst).unwrap().branch, Branch::Infeasible);
    }

    #[test]
    fn case_iii_with_eigenvalues_minus1_minus2() {
        // nu = l2 = -1, mu = l3 = -2, L = 8.
        let (nu, mu) = (rq(-1, 1), rq(-2, 1));
        let a = regime_a(&nu, &mu);
        // d1 = sqrt(2)(t^2 + 0): irrational, so use floats.
        let s2 = 2f64.sqrt();
        let d1 = UPoly::<f64>::new(vec![0.0, 0.0, s2]);
        // v^2 = L nu (mu - nu) = 8.
        let v = 8f64.sqrt();
        let c = UPoly::<f64>::new(vec![2.0, -1.0, 0.5]);
        let inst = ConstraintInstance {
            a: UPoly::new(a.coeffs().iter().map(|x| x.c_to_f64()).collect()),
            p: (&c * &UPoly::t2p1()).scale(&v),
            c,
            d1,
            regime: Regime::A12 {
                lambda: 8.0,
                tag: A12Tag::A1,
            },
        };
        let verdict = classify_a12(&inst).unwrap();
        assert_eq!(verdict.branch, Branch::CaseIII(1));
        assert!(verdict.sound(), "{:?}", verdict);
    }

    #[test]
    fn deg_one_v_reports_sign_clash() {
        let (inst, _) = planted_instance(Planted::DegOneV, 3);
        let v = classify_a12(&inst).unwrap();
        assert_eq!(v.branch, Branch::Infeasible);
        assert!(v.certificate.unwrap().contains("sign clash"));
    }

    #[test]
    fn a3_branch_ii_at_minus2_minus1() {
        // l2 = -2, l3 = -1: k = sqrt(1/2), m = sqrt(1/2), irrational.
        let (l2, l3) = (-2.0f64, -1.0f64);
        let w = UPoly::new(vec![l2, 0.0, l3]);
        let kappa = (2.0 * (l3 - l2)).sqrt();
        let d1 = (&UPoly::new(vec![0.0, 1.0]) * &w).scale(&kappa);
        let c = UPoly::constant(1.0);
        let p = (&UPoly::t2p1() * &w).scale(&(-2.0 * l3).sqrt());
        let inst = ConstraintInstance {
            a: w.scale(&0.5),
            c,
            d1,
            p,
            regime: Regime::A3 { l2, l3 },
        };
        assert!(verify_constraint(&inst).unwrap() < 1e-12);
        let v = classify_a3(&inst).unwrap();
        assert_eq!(v.branch, Branch::A3BranchII(1, 1));
    }

    #[test]
    fn a3_precondition() {
        let (inst, _) = planted_instance(Planted::A3BranchII, 1);
        let t = tilde_transform(&inst).unwrap();
        assert!(matches!(classify_a3(&t), Err(Error::Precondition(_))));
        let v = classify_a3_any(&t).unwrap();
        assert!(v.via_tilde);
        assert_eq!(v.branch, classify_a3(&inst).unwrap().branch);
    }

    #[test]
    fn a3_deg_zero_certificate() {
        let (inst, _) = planted_instance(Planted::A3DegZero, 9);
        assert!(!verify_constraint(&inst).unwrap().is_zero());
        let v = classify_a3(&inst).unwrap();
        assert_eq!(v.branch, Branch::Infeasible);
        let cert = v.certificate.unwrap();
        assert!(cert.contains("(r-1)(r^2+4) has no root in (0,1)"), "{}", cert);
        assert!(cert.contains("Sturm count 0"));
    }

    #[test]
    fn planted_families_classify() {
        for kind in Planted::ALL {
            for seed in 0..50 {
                let (inst, want) = planted_instance(kind, seed);
                let v = classify(&inst).unwrap();
                assert_eq!(v.branch, want, "{:?} seed {}: {:?}", kind, seed, v);
                if want != Branch::Infeasible {
                    assert_eq!(v.residual, 0.0);
                }
            }
        }
    }

    #[test]
    fn tilde_involution_and_reversal() {
        let (inst, _) = planted_instance(Planted::A3BranchII, 4);
        let back = tilde_transform(&tilde_transform(&inst).unwrap()).unwrap();
        assert_eq!(back, inst);
        let mut i2 = inst.clone();
        i2.d1 = p(&[0, 0, 0, 1]);
        assert_eq!(tilde_transform(&i2).unwrap().d1, p(&[1]));
    }

    #[test]
    fn degree_overflow() {
        let (mut inst, _) = planted_instance(Planted::CaseIII, 0);
        inst.p = p(&[0, 0, 0, 0, 0, 0, 1]);
        assert!(matches!(verify_constraint(&inst), Err(Error::DegreeOverflow(_))));
    }

    #[test]
    fn json_roundtrip() {
        let (inst, _) = planted_instance(Planted::A3BranchII, 2);
        let text = inst.to_json().to_string();
        let back: ConstraintInstance<Rational> = text.parse().unwrap();
        assert_eq!(back, inst);
        let alias: ConstraintInstance<Rational> =
            r#"{"regime":"a12","Lambda":"2","a":["1","0","1"],"c":[],"d1":[],"P":[]}"#
                .parse()
                .unwrap();
        assert!(matches!(alias.regime, Regime::A12 { tag: A12Tag::A1, .. }));
    }
}
