use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ricobs_core::curvature::{identity_residuals, jacobi_op, pack_at};
use ricobs_core::expr::{eval_jet, eval_value, parse_expr, BinOp, Expr, Func, Params};
use ricobs_core::jet::{Jet4, NCOEF};
use ricobs_core::metric::MetricSpec;
use ricobs_core::obstruction::{fibonacci_sphere, obstruction_values};
use ricobs_core::polyclass::{classify, planted_instance, tilde_transform, Branch, Planted, Regime};
use ricobs_core::Rational;

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0u32..20).prop_map(|k| Expr::Num(k as f64 / 4.0)),
        Just(Expr::Pi),
        (0usize..3).prop_map(Expr::Var),
        Just(Expr::Param("k".into())),
    ]
}

/// Expressions that are smooth on all of R^3 (no division, log or sqrt).
fn smooth_expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (inner.clone(), inner.clone(), prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul)])
                .prop_map(|(a, b, op)| Expr::Bin(op, Box::new(a), Box::new(b))),
            (inner.clone(), 0i32..4).prop_map(|(e, n)| Expr::Pow(Box::new(e), n)),
            (inner, prop_oneof![Just(Func::Sin), Just(Func::Cos), Just(Func::Exp)])
                .prop_map(|(e, f)| Expr::Call(f, Box::new(e))),
        ]
    })
}

/// Any expression tree, including operators that can fault at evaluation.
fn any_expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(5, 32, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (
                inner.clone(),
                inner.clone(),
                prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div)]
            )
                .prop_map(|(a, b, op)| Expr::Bin(op, Box::new(a), Box::new(b))),
            (inner.clone(), -3i32..5).prop_map(|(e, n)| Expr::Pow(Box::new(e), n)),
            (
                inner,
                prop_oneof![
                    Just(Func::Exp),
                    Just(Func::Log),
                    Just(Func::Sin),
                    Just(Func::Cos),
                    Just(Func::Sinh),
                    Just(Func::Cosh),
                    Just(Func::Sqrt)
                ]
            )
                .prop_map(|(e, f)| Expr::Call(f, Box::new(e))),
        ]
    })
}

fn params() -> Params {
    [("k".to_string(), 0.75)].into_iter().collect()
}

fn point() -> impl Strategy<Value = [f64; 3]> {
    [-0.8f64..0.8, -0.8f64..0.8, -0.8f64..0.8]
}

fn jet_strategy() -> impl Strategy<Value = Jet4<f64>> {
    proptest::collection::vec(-2.0f64..2.0, NCOEF).prop_map(|c| Jet4::from_coeffs([0.1, 0.2, 0.3], 4, &c))
}

fn close_jets(a: &Jet4<f64>, b: &Jet4<f64>, tol: f64) -> bool {
    a.coeffs().iter().zip(b.coeffs()).all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn printed_expressions_parse_back_to_the_same_tree(e in any_expr()) {
        let text = e.to_string();
        let back = parse_expr(&text, &["k"]).expect("printed expression parses");
        prop_assert_eq!(&back, &e, "{}", text);
        prop_assert_eq!(back.to_string(), text);
    }

    #[test]
    fn jet_derivatives_match_finite_differences(e in smooth_expr(), p in point()) {
        let ps = params();
        let jet = eval_jet::<f64>(&e, p, &ps, 4).expect("smooth expression");
        let f = |q: [f64; 3]| eval_value(&e, q, &ps).expect("smooth expression");
        let f0 = f(p);
        prop_assert!((jet.value() - f0).abs() <= 1e-12 * (1.0 + f0.abs()));
        for i in 0..3 {
            let h = 1e-5;
            let mut up = p;
            let mut dn = p;
            up[i] += h;
            dn[i] -= h;
            let (fu, fd) = (f(up), f(dn));
            let scale = 1.0 + f0.abs().max(fu.abs()).max(fd.abs());
            let mut m = [0u8; 3];
            m[i] = 1;
            let d1 = jet.deriv(m);
            prop_assert!((d1 - (fu - fd) / (2.0 * h)).abs() <= 1e-5 * scale, "d{} {} vs fd", i, d1);
            let h2 = 1e-3;
            let mut up2 = p;
            let mut dn2 = p;
            up2[i] += h2;
            dn2[i] -= h2;
            m[i] = 2;
            let d2 = jet.deriv(m);
            let fd2 = (f(up2) - 2.0 * f0 + f(dn2)) / (h2 * h2);
            prop_assert!((d2 - fd2).abs() <= 1e-3 * scale, "d{}{} {} vs {}", i, i, d2, fd2);
        }
    }

    #[test]
    fn jet_product_is_commutative_and_associative(a in jet_strategy(), b in jet_strategy(), c in jet_strategy()) {
        let ab = a.mul(&b).unwrap();
        let ba = b.mul(&a).unwrap();
        prop_assert!(close_jets(&ab, &ba, 1e-12));
        let ab_c = ab.mul(&c).unwrap();
        let a_bc = a.mul(&b.mul(&c).unwrap()).unwrap();
        prop_assert!(close_jets(&ab_c, &a_bc, 1e-11));
        let dist = a.mul(&(&b + &c)).unwrap();
        let sum = &ab + &a.mul(&c).unwrap();
        prop_assert!(close_jets(&dist, &sum, 1e-12));
    }

    #[test]
    fn jet_reciprocal_inverts(a in jet_strategy()) {
        let a = a.add_scalar(5.0);
        let prod = a.mul(&a.recip().unwrap()).unwrap();
        let one = Jet4::constant([0.1, 0.2, 0.3], 1.0, 4);
        prop_assert!(close_jets(&prod, &one, 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn curvature_identities_hold_on_random_polynomial_metrics(seed in 0u64..10_000) {
        let spec = MetricSpec::random_polynomial(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dirs = fibonacci_sphere(12);
        let pack = pack_at::<f64>(&spec, spec.sample_point(&mut rng)).expect("positive definite");
        let r = identity_residuals(&pack, &dirs);
        prop_assert!(r.j2_residual < 1e-7);
        prop_assert!(r.bianchi_residual < 1e-7);
        prop_assert!(r.kulkarni_residual < 1e-7);
        for v in &dirs {
            let j = jacobi_op(&pack, v).unwrap();
            prop_assert!((j[0][0] + j[1][1] + j[2][2] - pack.ric_form(v, v)).abs() < 1e-9);
        }
    }

    #[test]
    fn obstruction_is_even_in_the_direction(seed in 0u64..10_000, k in 0usize..16) {
        let spec = MetricSpec::builtin(["heisenberg", "sol", "h2xr"][(seed % 3) as usize], &Params::new()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pack = pack_at::<f64>(&spec, spec.sample_point(&mut rng)).unwrap();
        let v = fibonacci_sphere(16)[k];
        let a = obstruction_values(&pack, &v).unwrap();
        let b = obstruction_values(&pack, &[-v[0], -v[1], -v[2]]).unwrap();
        prop_assert_eq!(a.lhs, b.lhs);
        prop_assert_eq!(a.rhs, b.rhs);
        prop_assert_eq!(a.d1, -b.d1);
    }

    #[test]
    fn classification_is_invariant_under_scaling_p_and_c(kind in 0usize..8, seed in 0u64..100_000, num in 1i64..50, den in 1i64..50, neg in any::<bool>()) {
        let (inst, want) = planted_instance(Planted::ALL[kind], seed);
        let s = Rational::new(if neg { -num } else { num }.into(), den.into());
        let base = classify(&inst).unwrap();
        prop_assert_eq!(&base.branch, &want);
        let scaled = classify(&inst.scaled_pc(&s)).unwrap();
        prop_assert_eq!(scaled.branch, base.branch);
        if want != Branch::Infeasible {
            prop_assert_eq!(scaled.residual, 0.0);
        }
    }

    #[test]
    fn tilde_transform_is_an_involution(kind in 5usize..8, seed in 0u64..100_000) {
        let (inst, _) = planted_instance(Planted::ALL[kind], seed);
        let is_a3 = matches!(inst.regime, Regime::A3 { .. });
        prop_assert!(is_a3);
        let once = tilde_transform(&inst).unwrap();
        prop_assert_eq!(tilde_transform(&once).unwrap(), inst);
    }
}
