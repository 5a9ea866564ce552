//! Closed-form curvature of the model geometries.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ricobs_core::curvature::{pack_at, ricci_rank};
use ricobs_core::expr::Params;
use ricobs_core::metric::MetricSpec;
use ricobs_core::riccati::{integrate_geodesic, integrate_riccati, jacobi_along};

fn spec(name: &str, params: &[(&str, f64)]) -> MetricSpec {
    let p: Params = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    MetricSpec::builtin(name, &p).unwrap()
}

fn sorted_spectrum(name: &str, params: &[(&str, f64)], seed: u64) -> Vec<[f64; 3]> {
    let s = spec(name, params);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..5)
        .map(|_| {
            let pack = pack_at::<f64>(&s, s.sample_point(&mut rng)).unwrap();
            ricci_rank(&pack, 1e-8).eigenvalues
        })
        .collect()
}

fn assert_spectrum(got: &[[f64; 3]], want: [f64; 3], tol: f64) {
    for ev in got {
        for k in 0..3 {
            assert!((ev[k] - want[k]).abs() < tol, "{:?} vs {:?}", ev, want);
        }
    }
}

#[test]
fn space_forms_have_constant_ricci() {
    for c in [0.5, 1.0, 2.0] {
        let k = c * c;
        assert_spectrum(&sorted_spectrum("hyperbolic", &[("c", c)], 1), [-2.0 * k; 3], 1e-8);
        assert_spectrum(&sorted_spectrum("sphere", &[("c", c)], 2), [2.0 * k; 3], 1e-8);
    }
    assert_spectrum(&sorted_spectrum("flat", &[], 3), [0.0; 3], 1e-14);
}

#[test]
fn product_and_solvable_models() {
    assert_spectrum(&sorted_spectrum("h2xr", &[], 4), [-1.0, -1.0, 0.0], 1e-9);
    assert_spectrum(&sorted_spectrum("sol", &[], 5), [-2.0, 0.0, 0.0], 1e-9);
    let s = spec("sol", &[]);
    let pack = pack_at::<f64>(&s, [0.2, -0.4, 0.3]).unwrap();
    let r = ricci_rank(&pack, 1e-8);
    assert_eq!(r.rank, 1);
    assert!(r.ric_nonpositive);
    assert!((pack.scal + 2.0).abs() < 1e-9);
}

#[test]
fn heisenberg_spectrum_and_scalar_curvature() {
    for l in [0.5, 1.0, 2.0] {
        let q = l * l / 2.0;
        assert_spectrum(&sorted_spectrum("heisenberg", &[("L", l)], 6), [-q, -q, q], 1e-8);
        let pack = pack_at::<f64>(&spec("heisenberg", &[("L", l)]), [0.1, 0.5, -0.3]).unwrap();
        assert!((pack.scal + q).abs() < 1e-9);
    }
}

#[test]
fn sphere_riccati_follows_cotangent() {
    // Unit sphere: J = I on the normal plane, u = cot(t) solves u' = -u² - 1.
    let s = spec("sphere", &[]);
    let path = integrate_geodesic::<f64>(&s, [0.0; 3], [0.5, 0.0, 0.0], 1.0, 0.005).unwrap();
    let js = jacobi_along(&s, &path).unwrap();
    let t0 = 0.7f64;
    let u0 = 1.0 / t0.tan();
    let run = integrate_riccati(&path, &js, [[u0, 0.0], [0.0, u0]], 1.0);
    for st in &run.states {
        let exact = 1.0 / (st.t + t0).tan();
        assert!((st.u[0] - exact).abs() < 1e-7, "t {} u {} exact {}", st.t, st.u[0], exact);
        assert!(st.u[1].abs() < 1e-9);
    }
}
