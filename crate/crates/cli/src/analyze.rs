//! Point and direction sweeps over a metric.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ricobs_core::curvature::{identity_residuals, jacobi_op, pack_at, ricci_rank};
use ricobs_core::metric::MetricSpec;
use ricobs_core::obstruction::{fibonacci_sphere, obstruction_values, rank1_checks};
use serde::{Deserialize, Serialize};

/// Sweep settings; every field may come from a config file.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyzeConfig {
    pub points: usize,
    pub dirs: usize,
    pub seed: u64,
    pub rank_tol: f64,
    /// Relative obstruction residual counted as a genuine violation.
    pub rel_threshold: f64,
    /// Fraction of violating samples that makes the verdict `obstructed`.
    pub obstructed_fraction: f64,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        AnalyzeConfig {
            points: 10,
            dirs: 16,
            seed: 0,
            rank_tol: 1e-8,
            rel_threshold: 1e-6,
            obstructed_fraction: 0.1,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Rank1Summary {
    pub u1_defect: f64,
    pub u1_max_defect: f64,
    pub u1_defect_qform: f64,
    pub lie_scal: f64,
    pub div_e3: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PointReport {
    pub point: [f64; 3],
    pub j2_residual: f64,
    pub bianchi_residual: f64,
    pub kulkarni_residual: f64,
    pub trace_ric_residual: f64,
    pub ricci_eigenvalues: [f64; 3],
    pub rank: usize,
    pub ric_nonpositive: bool,
    pub max_relative_obstruction: f64,
    pub rank1: Option<Rank1Summary>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Quantiles {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q90: f64,
    pub max: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SampleRow {
    pub point_index: usize,
    pub dir_index: usize,
    pub dir: [f64; 3],
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub relative: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalysisReport {
    pub metric: String,
    pub params: Vec<(String, f64)>,
    pub config: AnalyzeConfig,
    pub points: Vec<PointReport>,
    /// Counts of Ricci rank 0, 1, 2, 3.
    pub rank_histogram: [usize; 4],
    pub obstruction_quantiles: Option<Quantiles>,
    pub violating_fraction: f64,
    pub verdict: String,
    #[serde(skip)]
    pub samples: Vec<SampleRow>,
}

fn quantiles(v: &[f64]) -> Option<Quantiles> {
    if v.is_empty() {
        return None;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let q = |p: f64| s[((s.len() - 1) as f64 * p).round() as usize];
    Some(Quantiles {
        min: s[0],
        q25: q(0.25),
        median: q(0.5),
        q75: q(0.75),
        q90: q(0.9),
        max: s[s.len() - 1],
    })
}

fn analyze_point(
    spec: &MetricSpec,
    idx: usize,
    p: [f64; 3],
    dirs: &[[f64; 3]],
    cfg: &AnalyzeConfig,
    tamper: bool,
) -> (PointReport, Vec<SampleRow>) {
    let mut rep = PointReport {
        point: p,
        j2_residual: f64::NAN,
        bianchi_residual: f64::NAN,
        kulkarni_residual: f64::NAN,
        trace_ric_residual: f64::NAN,
        ricci_eigenvalues: [f64::NAN; 3],
        rank: 0,
        ric_nonpositive: false,
        max_relative_obstruction: f64::NAN,
        rank1: None,
        error: None,
    };
    let mut pack = match pack_at::<f64>(spec, p) {
        Ok(x) => x,
        Err(e) => {
            rep.error = Some(e.to_string());
            return (rep, vec![]);
        }
    };
    if tamper {
        pack.tamper_sign();
    }
    let ir = identity_residuals(&pack, dirs);
    rep.j2_residual = ir.j2_residual;
    rep.bianchi_residual = ir.bianchi_residual;
    rep.kulkarni_residual = ir.kulkarni_residual;
    let mut tr = 0.0f64;
    for v in dirs {
        if let Ok(j) = jacobi_op(&pack, v) {
            let t = j[0][0] + j[1][1] + j[2][2];
            tr = tr.max((t - pack.ric_form(v, v)).abs());
        }
    }
    rep.trace_ric_residual = tr;
    let rr = ricci_rank(&pack, cfg.rank_tol);
    rep.ricci_eigenvalues = rr.eigenvalues;
    rep.rank = rr.rank;
    rep.ric_nonpositive = rr.ric_nonpositive;
    if rr.rank == 1 {
        rep.rank1 = rank1_checks(spec, p, cfg.rank_tol).ok().map(|r| Rank1Summary {
            u1_defect: r.u1_defect,
            u1_max_defect: r.u1_max_defect,
            u1_defect_qform: r.u1_defect_qform,
            lie_scal: r.lie_scal,
            div_e3: r.div_e3,
            flagged: r.flagged,
        });
    }
    let mut rows = Vec::with_capacity(dirs.len());
    let mut worst = 0.0f64;
    for (k, v) in dirs.iter().enumerate() {
        if let Ok(o) = obstruction_values(&pack, v) {
            let rel = o.relative();
            worst = worst.max(rel);
            rows.push(SampleRow {
                point_index: idx,
                dir_index: k,
                dir: *v,
                lhs: o.lhs,
                rhs: o.rhs,
                residual: o.residual,
                relative: rel,
            });
        }
    }
    rep.max_relative_obstruction = worst;
    (rep, rows)
}

/// Runs the sweep; points are processed on scoped threads.
pub fn analyze(spec: &MetricSpec, cfg: &AnalyzeConfig, tamper: bool) -> AnalysisReport {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pts: Vec<[f64; 3]> = (0..cfg.points).map(|_| spec.sample_point(&mut rng)).collect();
    let dirs = fibonacci_sphere(cfg.dirs.max(1));
    let results: Vec<(PointReport, Vec<SampleRow>)> = std::thread::scope(|s| {
        let handles: Vec<_> = pts
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let dirs = &dirs;
                s.spawn(move || analyze_point(spec, i, *p, dirs, cfg, tamper))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep thread panicked"))
            .collect()
    });
    let mut points = Vec::new();
    let mut samples = Vec::new();
    let mut hist = [0usize; 4];
    for (p, rows) in results {
        if p.error.is_none() {
            hist[p.rank.min(3)] += 1;
        }
        points.push(p);
        samples.extend(rows);
    }
    let rels: Vec<f64> = samples.iter().map(|r| r.relative).collect();
    let expected = cfg.points * cfg.dirs.max(1);
    let violating = rels.iter().filter(|&&r| r > cfg.rel_threshold).count();
    let frac = if rels.is_empty() {
        0.0
    } else {
        violating as f64 / rels.len() as f64
    };
    let verdict = if rels.len() * 2 < expected {
        "degenerate"
    } else if frac >= cfg.obstructed_fraction {
        "obstructed"
    } else {
        "unobstructed-at-samples"
    };
    AnalysisReport {
        metric: spec.name.clone(),
        params: spec.params.iter().map(|(k, v)| (k.clone(), *v)).collect(),
        config: cfg.clone(),
        points,
        rank_histogram: hist,
        obstruction_quantiles: quantiles(&rels),
        violating_fraction: frac,
        verdict: verdict.to_string(),
        samples,
    }
}

pub const SAMPLE_CSV_HEADER: &str = "point_index,dir_index,v1,v2,v3,lhs,rhs,residual,relative";

pub fn samples_csv(rep: &AnalysisReport) -> String {
    let mut s = String::from(SAMPLE_CSV_HEADER);
    s.push('\n');
    for r in &rep.samples {
        let _ = writeln!(
            s,
            "{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.point_index, r.dir_index, r.dir[0], r.dir[1], r.dir[2], r.lhs, r.rhs, r.residual, r.relative
        );
    }
    s
}

pub fn summary_text(rep: &AnalysisReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "metric: {}", rep.metric);
    let _ = writeln!(
        s,
        "points: {}  directions: {}  seed: {}",
        rep.config.points, rep.config.dirs, rep.config.seed
    );
    let maxf = |f: fn(&PointReport) -> f64| rep.points.iter().map(f).fold(0.0f64, f64::max);
    let _ = writeln!(
        s,
        "identity residuals (max): j2 {:.3e}  bianchi {:.3e}  kulkarni {:.3e}  tr J - ric {:.3e}",
        maxf(|p| p.j2_residual),
        maxf(|p| p.bianchi_residual),
        maxf(|p| p.kulkarni_residual),
        maxf(|p| p.trace_ric_residual)
    );
    let _ = writeln!(s, "rank histogram [0,1,2,3]: {:?}", rep.rank_histogram);
    let nonpos = rep.points.iter().filter(|p| p.ric_nonpositive).count();
    let _ = writeln!(s, "ric_nonpositive at {}/{} points", nonpos, rep.points.len());
    if let Some(q) = &rep.obstruction_quantiles {
        let _ = writeln!(
            s,
            "relative obstruction residual: min {:.3e} median {:.3e} q90 {:.3e} max {:.3e}",
            q.min, q.median, q.q90, q.max
        );
    }
    let r1: Vec<&Rank1Summary> = rep.points.iter().filter_map(|p| p.rank1.as_ref()).collect();
    if !r1.is_empty() {
        let lo = r1.iter().map(|r| r.u1_defect).fold(f64::INFINITY, f64::min);
        let hi = r1.iter().map(|r| r.u1_max_defect).fold(0.0f64, f64::max);
        let flagged = r1.iter().filter(|r| r.flagged).count();
        let _ = writeln!(
            s,
            "rank-one checks: {} points, U1 defect over kernel directions in [{:.3e}, {:.3e}], flagged {}",
            r1.len(),
            lo,
            hi,
            flagged
        );
    }
    let errs = rep.points.iter().filter(|p| p.error.is_some()).count();
    if errs > 0 {
        let _ = writeln!(s, "points with errors: {}", errs);
    }
    let _ = writeln!(
        s,
        "violating fraction: {:.3}  verdict: {}",
        rep.violating_fraction, rep.verdict
    );
    s
}

/// Writes `report.json` and `samples.csv` into `dir`.
pub fn write_outputs(rep: &AnalysisReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(rep)?)?;
    std::fs::write(dir.join("samples.csv"), samples_csv(rep))?;
    Ok(())
}
