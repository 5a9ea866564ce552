//! Invariant suite behind `ricobs selftest`.

use ricobs_core::curvature::{identity_residuals, jacobi_op, pack_at, CurvaturePack};
use ricobs_core::expr::Params;
use ricobs_core::frame_algebra::{
    a1_crosscheck, consistent_frame, contradiction_certificates, eds_closure, root_identities,
    special_direction_polys, Case, FrameData, FrameMode, Lemma,
};
use ricobs_core::metric::{MetricSpec, BUILTINS};
use ricobs_core::obstruction::fibonacci_sphere;
use ricobs_core::polyclass::{classify, planted_instance, tilde_transform, Planted};
use ricobs_core::riccati::{integrate_geodesic, integrate_riccati, jacobi_along};
use ricobs_core::curvature::ricci_rank;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

fn check(name: &str, value: f64, threshold: f64, detail: String) -> Check {
    Check {
        name: name.to_string(),
        pass: value.is_finite() && value < threshold,
        value,
        threshold,
        detail,
    }
}

fn zoo_packs(seed: u64, per_metric: usize, tamper: bool) -> Vec<(String, CurvaturePack<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for name in BUILTINS {
        let spec = MetricSpec::builtin(name, &Params::new()).expect("builtin");
        for _ in 0..per_metric {
            let p = spec.sample_point(&mut rng);
            let mut pack = pack_at::<f64>(&spec, p).expect("zoo point");
            if tamper {
                pack.tamper_sign();
            }
            out.push((name.to_string(), pack));
        }
    }
    out
}

fn identity_checks(seed: u64, tamper: bool) -> Vec<Check> {
    let dirs = fibonacci_sphere(20);
    let packs = zoo_packs(seed, 5, tamper);
    let (mut j2, mut b1, mut kn, mut tr) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (_, pack) in &packs {
        let r = identity_residuals(pack, &dirs);
        j2 = j2.max(r.j2_residual);
        b1 = b1.max(r.bianchi_residual);
        kn = kn.max(r.kulkarni_residual);
        for v in &dirs {
            let j = jacobi_op(pack, v).expect("unit direction");
            tr = tr.max((j[0][0] + j[1][1] + j[2][2] - pack.ric_form(v, v)).abs());
        }
    }
    let d = format!("{} zoo points x {} directions", packs.len(), dirs.len());
    vec![
        check("identity.j2", j2, 1e-7, d.clone()),
        check("identity.contracted_bianchi", b1, 1e-7, d.clone()),
        check("identity.kulkarni_nomizu", kn, 1e-7, d.clone()),
        check("identity.trace_jacobi_equals_ric", tr, 1e-9, d),
    ]
}

fn heisenberg_check() -> Check {
    let mut worst = 0.0f64;
    for l in [0.5, 1.0, 2.0] {
        let mut params = Params::new();
        params.insert("L".into(), l);
        let spec = MetricSpec::builtin("heisenberg", &params).expect("builtin");
        let pack = pack_at::<f64>(&spec, [0.3, -0.2, 0.1]).expect("point");
        let ev = ricci_rank(&pack, 1e-8).eigenvalues;
        let want = [-l * l / 2.0, -l * l / 2.0, l * l / 2.0];
        for k in 0..3 {
            worst = worst.max((ev[k] - want[k]).abs());
        }
    }
    check(
        "heisenberg.ricci_spectrum",
        worst,
        1e-8,
        "eigenvalues {-L^2/2, -L^2/2, L^2/2} at L in {0.5, 1, 2}".into(),
    )
}

fn frame_checks(seed: u64) -> Vec<Check> {
    let n = 200;
    let mut gcd = 0.0f64;
    let mut a1 = 0.0f64;
    let mut roots = 0.0f64;
    for k in 0..n {
        let s = seed.wrapping_mul(1_000_003).wrapping_add(k);
        let free = FrameData::random(s, FrameMode::Free, None).expect("frame");
        for case in Case::ALL {
            gcd = gcd.max(special_direction_polys(&free, case).gcd_residual());
        }
        let fd = consistent_frame(s, FrameMode::Co3B2bis).expect("frame");
        let c = a1_crosscheck(&fd);
        a1 = a1.max(c.residual13.max(c.residual23));
        roots = roots.max(root_identities(&fd).expect("ordered eigenvalues").max());
    }
    vec![
        check("frame.gcd_factorization", gcd, 1e-10, format!("{} frames x 3 cases", n)),
        check("frame.a1_crosscheck", a1, 1e-9, format!("{} consistent frames", n)),
        check("frame.root_identities", roots, 1e-9, format!("{} consistent frames", n)),
    ]
}

fn certificate_checks() -> Vec<Check> {
    let mut out: Vec<Check> = contradiction_certificates()
        .into_iter()
        .map(|c| Check {
            name: format!("certificate.{}", c.name),
            pass: c.pass,
            value: c.sturm_roots as f64,
            threshold: c.expected_roots.len() as f64,
            detail: format!("roots in (0,1): {:?}", c.roots),
        })
        .collect();
    let mut failures = 0;
    let mut detail = Vec::new();
    for which in [Lemma::L4, Lemma::L5] {
        for s1 in [1.0, -1.0] {
            for s2 in [1.0, -1.0] {
                let ok = eds_closure(which, -1.0, (s1, s2), None)
                    .map(|v| v.contradiction)
                    .unwrap_or(false);
                if !ok {
                    failures += 1;
                    detail.push(format!("{:?}({},{})", which, s1, s2));
                }
            }
        }
    }
    out.push(Check {
        name: "certificate.eds_closure_all_signs".into(),
        pass: failures == 0,
        value: failures as f64,
        threshold: 1.0,
        detail: if detail.is_empty() {
            "8/8 combinations contradictory".into()
        } else {
            format!("no contradiction for {}", detail.join(", "))
        },
    });
    out
}

fn classifier_checks(seed: u64) -> Vec<Check> {
    let per = 100u64;
    let mut wrong = 0usize;
    let mut worst = 0.0f64;
    let mut tilde_bad = 0usize;
    for kind in Planted::ALL {
        for k in 0..per {
            let (inst, want) = planted_instance(kind, seed.wrapping_mul(7919).wrapping_add(k));
            match classify(&inst) {
                Ok(v) if v.branch == want => {
                    if want != ricobs_core::polyclass::Branch::Infeasible {
                        worst = worst.max(v.residual);
                    }
                }
                _ => wrong += 1,
            }
            if matches!(inst.regime, ricobs_core::polyclass::Regime::A3 { .. }) {
                let back = tilde_transform(&tilde_transform(&inst).expect("a3")).expect("a3");
                if back != inst {
                    tilde_bad += 1;
                }
            }
        }
    }
    vec![
        Check {
            name: "classifier.planted_branches".into(),
            pass: wrong == 0,
            value: wrong as f64,
            threshold: 1.0,
            detail: format!("{} families x {} instances misclassified", Planted::ALL.len(), per),
        },
        Check {
            name: "classifier.exact_residual".into(),
            pass: worst == 0.0,
            value: worst,
            threshold: f64::MIN_POSITIVE,
            detail: "oracle residual of feasible planted instances".into(),
        },
        Check {
            name: "classifier.tilde_involution".into(),
            pass: tilde_bad == 0,
            value: tilde_bad as f64,
            threshold: 1.0,
            detail: "tilde(tilde(x)) == x".into(),
        },
    ]
}

/// Log2 slope of successive errors.
fn slope(errs: &[f64]) -> f64 {
    let n = errs.len();
    (errs[n - 2] / errs[n - 1]).log2()
}

pub fn geodesic_errors(dts: &[f64]) -> Vec<f64> {
    let spec = MetricSpec::builtin("hyperbolic", &Params::new()).expect("builtin");
    let t_end = 2.0;
    dts.iter()
        .map(|&dt| {
            let path = integrate_geodesic::<f64>(&spec, [0.0, 0.0, 1.0], [0.0, 0.0, 1.0], t_end, dt)
                .expect("geodesic");
            let k = path.times.len() - 1;
            let t = path.times[k];
            (path.positions[k][2] - t.exp()).abs()
        })
        .collect()
}

pub fn riccati_errors(dts: &[f64]) -> Vec<f64> {
    let spec = MetricSpec::builtin("hyperbolic", &Params::new()).expect("builtin");
    let t_end = 2.0;
    dts.iter()
        .map(|&dt| {
            let path = integrate_geodesic::<f64>(&spec, [0.0, 0.0, 1.0], [0.0, 0.0, 1.0], t_end, dt)
                .expect("geodesic");
            let js = jacobi_along(&spec, &path).expect("jacobi");
            let run = integrate_riccati(&path, &js, [[0.5, 0.0], [0.0, 0.5]], t_end);
            let last = run.states.last().expect("states");
            let exact = (last.t + 0.5f64.atanh()).tanh();
            (last.u[0] - exact).abs().max((last.u[2] - exact).abs())
        })
        .collect()
}

fn convergence_checks() -> Vec<Check> {
    let dts = [0.1, 0.05, 0.025];
    let g = geodesic_errors(&dts);
    let r = riccati_errors(&dts);
    let sg = slope(&g);
    let sr = slope(&r);
    let spec = MetricSpec::builtin("flat", &Params::new()).expect("builtin");
    let path = integrate_geodesic::<f64>(&spec, [0.0; 3], [1.0, 0.0, 0.0], 1.5, 0.001).expect("geodesic");
    let js = jacobi_along(&spec, &path).expect("jacobi");
    let run = integrate_riccati(&path, &js, [[1.0, 0.0], [0.0, -1.0]], 1.5);
    let bt = run.blowup_time().unwrap_or(f64::INFINITY);
    vec![
        check(
            "riccati.geodesic_order",
            (sg - 4.0).abs(),
            0.2,
            format!("slope {:.3}, errors {:?}", sg, g),
        ),
        check(
            "riccati.tanh_order",
            (sr - 4.0).abs(),
            0.2,
            format!("slope {:.3}, errors {:?}", sr, r),
        ),
        check(
            "riccati.flat_blowup_time",
            (bt - 1.0).abs(),
            1e-3,
            format!("blow-up at t = {}", bt),
        ),
    ]
}

/// Runs every check; `tamper` flips the curvature sign inside the identity checks.
pub fn run(seed: u64, tamper: bool) -> Vec<Check> {
    let mut out = identity_checks(seed, tamper);
    out.push(heisenberg_check());
    out.extend(frame_checks(seed));
    out.extend(certificate_checks());
    out.extend(classifier_checks(seed));
    out.extend(convergence_checks());
    out
}
