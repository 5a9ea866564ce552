//! Acceptance criteria as named, self-contained checks over the core library.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ricobs_core::curvature::{identity_residuals, jacobi_op, pack_at, ricci_rank};
use ricobs_core::expr::Params;
use ricobs_core::frame_algebra::{
    a1_crosscheck, bianchi_frame_residuals, consistent_frame, contradiction_certificates, eds_closure,
    lemma_frame, ric111_residual, root_identities, special_direction_polys, Case, FrameData, FrameMode,
    Lemma,
};
use ricobs_core::metric::{MetricSpec, BUILTINS};
use ricobs_core::obstruction::{fibonacci_sphere, obstruction_values};
use ricobs_core::polyclass::{classify, planted_instance, tilde_transform, Branch, Planted, Regime};
use ricobs_core::riccati::{integrate_geodesic, integrate_riccati, jacobi_along};

/// Result of one criterion with a human-readable measurement summary.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn builtin(name: &str, params: &[(&str, f64)]) -> MetricSpec {
    let p: Params = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    MetricSpec::builtin(name, &p).expect("builtin metric")
}

/// Max identity residuals, max |tr J(v) - ric(v,v)| and wall time of the zoo sweep.
pub struct ZooSweep {
    pub identities: [f64; 3],
    pub trace: f64,
    pub seconds: f64,
}

pub fn zoo_sweep() -> ZooSweep {
    let start = Instant::now();
    let dirs = fibonacci_sphere(20);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut worst = [0.0f64; 3];
    let mut trace = 0.0f64;
    for name in BUILTINS {
        let spec = builtin(name, &[]);
        for _ in 0..20 {
            let pack = pack_at::<f64>(&spec, spec.sample_point(&mut rng)).expect("zoo point");
            let r = identity_residuals(&pack, &dirs);
            worst[0] = worst[0].max(r.j2_residual);
            worst[1] = worst[1].max(r.bianchi_residual);
            worst[2] = worst[2].max(r.kulkarni_residual);
            for v in &dirs {
                let j = jacobi_op(&pack, v).expect("unit direction");
                trace = trace.max((j[0][0] + j[1][1] + j[2][2] - pack.ric_form(v, v)).abs());
            }
        }
    }
    ZooSweep {
        identities: worst,
        trace,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn identities(sweep: &ZooSweep) -> Outcome {
    let (w, secs) = (sweep.identities, sweep.seconds);
    let pass = w.iter().all(|&x| x < 1e-7) && secs < 10.0;
    outcome(
        pass,
        format!(
            "j2 {:.2e}, bianchi {:.2e}, kulkarni-nomizu {:.2e} (< 1e-7), runtime {:.2} s (< 10 s)",
            w[0], w[1], w[2], secs
        ),
    )
}

pub fn sign_lock(sweep: &ZooSweep) -> Outcome {
    let t = sweep.trace;
    outcome(t < 1e-9, format!("max |tr J(v) - ric(v,v)| = {:.2e} (< 1e-9)", t))
}

pub fn constant_curvature() -> Outcome {
    let spec = builtin("hyperbolic", &[("c", 1.0)]);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut ric_err = 0.0f64;
    let mut scal_err = 0.0f64;
    for _ in 0..10 {
        let pack = pack_at::<f64>(&spec, spec.sample_point(&mut rng)).expect("point");
        for i in 0..3 {
            for j in 0..3 {
                ric_err = ric_err.max((pack.ric_coord[i][j] + 2.0 * pack.g[i][j]).abs());
            }
        }
        scal_err = scal_err.max((pack.scal + 6.0).abs());
    }
    let t_end = 10.0;
    let path = integrate_geodesic::<f64>(&spec, [0.1, -0.2, 1.0], [0.6, 0.0, 0.8], t_end, 0.01).expect("geodesic");
    let js = jacobi_along(&spec, &path).expect("jacobi");
    let run = integrate_riccati(&path, &js, [[1.0, 0.0], [0.0, 1.0]], t_end);
    let drift = run
        .states
        .iter()
        .map(|s| (s.u[0] - 1.0).abs().max(s.u[1].abs()).max((s.u[2] - 1.0).abs()))
        .fold(0.0f64, f64::max);
    let reached = run.states.last().map(|s| s.t).unwrap_or(0.0);
    let pass = ric_err < 1e-9 && scal_err < 1e-9 && drift < 1e-8 && (reached - t_end).abs() < 1e-9;
    outcome(
        pass,
        format!(
            "|Ric + 2g| {:.2e}, |scal + 6| {:.2e} (< 1e-9); u = I drift {:.2e} (< 1e-8) up to t = {}",
            ric_err, scal_err, drift, reached
        ),
    )
}

pub fn heisenberg_spectrum() -> Outcome {
    let mut worst = 0.0f64;
    let mut seen = Vec::new();
    for l in [0.5, 1.0, 2.0] {
        let spec = builtin("heisenberg", &[("L", l)]);
        let pack = pack_at::<f64>(&spec, [0.3, -0.2, 0.1]).expect("point");
        let ev = ricci_rank(&pack, 1e-8).eigenvalues;
        let want = [-l * l / 2.0, l * l / 2.0, l * l / 2.0];
        for k in 0..3 {
            worst = worst.max((ev[k] - want[k]).abs());
        }
        seen.push(format!("L={}: {:?}", l, ev));
    }
    outcome(
        worst < 1e-8,
        format!(
            "expected {{-L^2/2, L^2/2, L^2/2}}, max deviation {:.3e}; computed {}",
            worst,
            seen.join("; ")
        ),
    )
}

pub fn detector_separation() -> Outcome {
    let dirs = fibonacci_sphere(64);
    let mut flat_max = 0.0f64;
    for name in ["flat", "hyperbolic"] {
        let spec = builtin(name, &[]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10 {
            let pack = pack_at::<f64>(&spec, spec.sample_point(&mut rng)).expect("point");
            for v in &dirs {
                flat_max = flat_max.max(obstruction_values(&pack, v).expect("direction").relative());
            }
        }
    }
    let mut pass = flat_max < 1e-9;
    let mut parts = vec![format!("flat/hyperbolic max relative {:.2e} (< 1e-9)", flat_max)];
    for name in ["heisenberg", "sol"] {
        let spec = builtin(name, &[]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut fracs = Vec::new();
        for _ in 0..10 {
            let pack = pack_at::<f64>(&spec, spec.sample_point(&mut rng)).expect("point");
            let hits = dirs
                .iter()
                .filter(|v| obstruction_values(&pack, v).expect("direction").relative() > 1e-6)
                .count();
            fracs.push(hits as f64 / dirs.len() as f64);
        }
        let min = fracs.iter().cloned().fold(1.0f64, f64::min);
        let below = fracs.iter().filter(|&&f| f < 0.9).count();
        pass &= below == 0;
        parts.push(format!(
            "{} min fraction above 1e-6: {:.3} ({} of 10 points below 0.9)",
            name, min, below
        ));
    }
    outcome(pass, parts.join("; "))
}

pub fn homogeneity() -> Outcome {
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let dirs = fibonacci_sphere(16);
    for name in ["heisenberg", "sol", "h2xr"] {
        let spec = builtin(name, &[]);
        for _ in 0..5 {
            let pack = pack_at::<f64>(&spec, spec.sample_point(&mut rng)).expect("point");
            for v in &dirs {
                let x = [0.7 * v[0], 0.7 * v[1], 0.7 * v[2]];
                let x2 = [2.0 * x[0], 2.0 * x[1], 2.0 * x[2]];
                let a = obstruction_values(&pack, &x).expect("direction");
                let b = obstruction_values(&pack, &x2).expect("direction");
                let pairs = [
                    (a.d1, b.d1, 3),
                    (a.d2, b.d2, 4),
                    (a.tr_jj, b.tr_jj, 4),
                    (a.tr_jjp, b.tr_jjp, 5),
                    (a.p, b.p, 8),
                    (a.d, b.d, 10),
                    (a.lhs, b.lhs, 16),
                    (a.rhs, b.rhs, 16),
                ];
                for (lo, hi, k) in pairs {
                    let want = lo * 2f64.powi(k);
                    let den = want.abs().max(hi.abs());
                    if den > 0.0 {
                        worst = worst.max((hi - want).abs() / den);
                    }
                }
            }
        }
    }
    outcome(
        worst < 1e-8,
        format!("max relative deviation from degrees 3,4,4,5,8,10,16,16: {:.2e} (< 1e-8)", worst),
    )
}

pub fn frame_algebra() -> Outcome {
    let mut gcd = 0.0f64;
    let mut a1 = 0.0f64;
    let mut roots = 0.0f64;
    for s in 0..1000u64 {
        let free = FrameData::random(s, FrameMode::Free, None).expect("frame");
        for case in Case::ALL {
            gcd = gcd.max(special_direction_polys(&free, case).gcd_residual());
        }
        let fd = consistent_frame(s, FrameMode::Co3B2bis).expect("frame");
        let c = a1_crosscheck(&fd);
        a1 = a1.max(c.residual13.max(c.residual23));
        roots = roots.max(root_identities(&fd).expect("ordered eigenvalues").max());
    }
    let mut table = 0.0f64;
    for which in [Lemma::L4, Lemma::L5] {
        for l2 in [-0.5, -1.0, -2.0] {
            for signs in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let fd = lemma_frame(which, l2, signs, None).expect("table");
                for r in bianchi_frame_residuals(&fd) {
                    table = table.max(r.abs());
                }
                table = table.max(ric111_residual(&fd).abs());
            }
        }
    }
    let pass = gcd < 1e-10 && a1 < 1e-9 && roots < 1e-9 && table < 1e-12;
    outcome(
        pass,
        format!(
            "gcd {:.2e} (< 1e-10), a1 crosscheck {:.2e}, root identities {:.2e} (< 1e-9), lemma tables {:.2e} (< 1e-12)",
            gcd, a1, roots, table
        ),
    )
}

pub fn certificates() -> Outcome {
    let certs = contradiction_certificates();
    let mut parts = Vec::new();
    let mut pass = true;
    for c in certs.iter().filter(|c| c.expected_roots.is_empty()) {
        let ok = c.pass && c.roots.is_empty() && c.sturm_roots == 0;
        pass &= ok;
        parts.push(format!("{}: {} roots in (0,1)", c.name, c.roots.len()));
    }
    let mut closed = 0;
    for which in [Lemma::L4, Lemma::L5] {
        for e1 in [1.0, -1.0] {
            for e2 in [1.0, -1.0] {
                if eds_closure(which, -1.0, (e1, e2), None).map(|v| v.contradiction).unwrap_or(false) {
                    closed += 1;
                }
            }
        }
    }
    pass &= closed == 8 && parts.len() == 2;
    parts.push(format!("eds contradictions {}/8", closed));
    outcome(pass, parts.join("; "))
}

pub fn classifier() -> Outcome {
    let per = 1000u64;
    let mut wrong = 0usize;
    let mut worst = 0.0f64;
    let mut tilde_bad = 0usize;
    for kind in Planted::ALL {
        for seed in 0..per {
            let (inst, want) = planted_instance(kind, seed);
            match classify(&inst) {
                Ok(v) if v.branch == want => {
                    if want != Branch::Infeasible {
                        worst = worst.max(v.residual);
                    }
                }
                _ => wrong += 1,
            }
            if matches!(inst.regime, Regime::A3 { .. }) {
                let back = tilde_transform(&tilde_transform(&inst).expect("a3")).expect("a3");
                if back != inst {
                    tilde_bad += 1;
                }
            }
        }
    }
    outcome(
        wrong == 0 && worst == 0.0 && tilde_bad == 0,
        format!(
            "{} families x {}: misclassified {}, max oracle residual {:e}, tilde involution failures {}",
            Planted::ALL.len(),
            per,
            wrong,
            worst,
            tilde_bad
        ),
    )
}

pub fn riccati_numerics() -> Outcome {
    let flat = builtin("flat", &[]);
    let path = integrate_geodesic::<f64>(&flat, [0.0; 3], [1.0, 0.0, 0.0], 1.5, 0.001).expect("geodesic");
    let js = jacobi_along(&flat, &path).expect("jacobi");
    let bt = integrate_riccati(&path, &js, [[1.0, 0.0], [0.0, -1.0]], 1.5)
        .blowup_time()
        .unwrap_or(f64::INFINITY);

    let hyp = builtin("hyperbolic", &[]);
    let t_end = 2.0;
    let mut geo = Vec::new();
    let mut ric = Vec::new();
    for dt in [0.1, 0.05, 0.025] {
        let path = integrate_geodesic::<f64>(&hyp, [0.0, 0.0, 1.0], [0.0, 0.0, 1.0], t_end, dt).expect("geodesic");
        let k = path.times.len() - 1;
        geo.push((path.positions[k][2] - path.times[k].exp()).abs());
        let js = jacobi_along(&hyp, &path).expect("jacobi");
        let run = integrate_riccati(&path, &js, [[0.5, 0.0], [0.0, 0.5]], t_end);
        let last = run.states.last().expect("states");
        let exact = (last.t + 0.5f64.atanh()).tanh();
        ric.push((last.u[0] - exact).abs().max((last.u[2] - exact).abs()));
    }
    let slope = |e: &[f64]| (e[1] / e[2]).log2();
    let (sg, sr) = (slope(&geo), slope(&ric));
    let pass = (bt - 1.0).abs() < 1e-3 && (sg - 4.0).abs() < 0.2 && (sr - 4.0).abs() < 0.2;
    outcome(
        pass,
        format!(
            "blow-up at t = {:.6} (1 ± 1e-3); geodesic slope {:.3}, tanh slope {:.3} (4 ± 0.2)",
            bt, sg, sr
        ),
    )
}

/// Evaluates every criterion in order.
pub fn run_all() -> Vec<(&'static str, Outcome)> {
    let sweep = zoo_sweep();
    vec![
        ("1 identity suite", identities(&sweep)),
        ("2 sign-convention lock", sign_lock(&sweep)),
        ("3 constant-curvature ground truth", constant_curvature()),
        ("4 heisenberg ricci eigenvalues", heisenberg_spectrum()),
        ("5 obstruction detector separation", detector_separation()),
        ("6 homogeneity degrees", homogeneity()),
        ("7 frame algebra", frame_algebra()),
        ("8 contradiction certificates", certificates()),
        ("9 classifier soundness", classifier()),
        ("10 riccati numerics", riccati_numerics()),
    ]
}
