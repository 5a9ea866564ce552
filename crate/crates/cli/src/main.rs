mod analyze;
mod metric_file;
mod selftest;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ricobs_core::curvature::pack_at;
use ricobs_core::frame_algebra::{
    a1_crosscheck, bianchi_frame_residuals, contradiction_certificates, eds_closure, ric111_residual,
    root_identities, special_direction_polys, Case, FrameData, FrameMode, Lemma,
};
use ricobs_core::linalg;
use ricobs_core::polyclass::{classify, ConstraintInstance};
use ricobs_core::riccati::{integrate_geodesic, integrate_riccati, jacobi_along};
use ricobs_core::Rational;
use serde_json::json;

use analyze::AnalyzeConfig;
use metric_file::{load_metric, parse_params, parse_triple};

#[derive(Parser)]
#[command(name = "ricobs", version, about = "Curvature obstructions, Riccati flows and polynomial constraint classification")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Numerical tolerance (meaning depends on the command).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Machine-readable output on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Output file or directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sweep points and directions: identity residuals, Ricci rank, obstruction residuals.
    Analyze {
        /// Builtin metric name or path to a TOML metric file.
        metric: String,
        /// Parameter override `key=value` (repeatable).
        #[arg(long = "param")]
        params: Vec<String>,
        /// Number of sample points.
        #[arg(short = 'n', long)]
        points: Option<usize>,
        /// Number of Fibonacci directions per point.
        #[arg(short = 'm', long)]
        dirs: Option<usize>,
        /// TOML file with sweep settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, hide = true)]
        tamper_sign: bool,
    },
    /// Integrate the Riccati equation along a geodesic and emit a trajectory CSV.
    Riccati {
        /// Builtin metric name or path to a TOML metric file.
        metric: String,
        /// Parameter override `key=value` (repeatable).
        #[arg(long = "param")]
        params: Vec<String>,
        /// Start point `x1,x2,x3` (default: centre of the sampling box).
        #[arg(long, allow_hyphen_values = true)]
        point: Option<String>,
        /// Coordinate direction `v1,v2,v3`, rescaled to unit length.
        #[arg(long, allow_hyphen_values = true, default_value = "1,0,0")]
        dir: String,
        /// Initial shape operator `u11,u12,u22` in the parallel frame.
        #[arg(long, allow_hyphen_values = true, default_value = "0,0,0")]
        u0: String,
        /// Final time.
        #[arg(long = "t-end", default_value_t = 1.0)]
        t_end: f64,
        /// Geodesic step (the Riccati step is twice this).
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
    },
    /// Classify a polynomial constraint instance (JSON file).
    Classify {
        /// JSON instance file.
        instance: PathBuf,
        /// Use the floating-point backend instead of exact rationals.
        #[arg(long)]
        float: bool,
    },
    /// Frame-algebra checks on frame data (key-value file or random).
    FrameCheck {
        /// Key-value frame file; random data from --seed when absent.
        frame: Option<PathBuf>,
        /// Mode for random data: free, co3_b2bis.
        #[arg(long, default_value = "co3_b2bis")]
        mode: String,
        /// Also run the closure tests and root certificates.
        #[arg(long)]
        eds: bool,
    },
    /// Run the invariant suite; exit status 0 iff every check passes.
    Selftest {
        #[arg(long, hide = true)]
        tamper_sign: bool,
    },
}

fn emit(common: &Common, text: &str) -> Result<()> {
    match &common.out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{}", text);
            Ok(())
        }
    }
}

fn cmd_analyze(
    common: &Common,
    metric: &str,
    params: &[String],
    points: Option<usize>,
    dirs: Option<usize>,
    config: Option<&Path>,
    tamper: bool,
) -> Result<()> {
    let spec = load_metric(metric, &parse_params(params)?)?;
    let mut cfg: AnalyzeConfig = match config {
        Some(p) => {
            let src = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str(&src).context("config file")?
        }
        None => AnalyzeConfig::default(),
    };
    if let Some(n) = points {
        cfg.points = n;
    }
    if let Some(m) = dirs {
        cfg.dirs = m;
    }
    if let Some(t) = common.tol {
        cfg.rank_tol = t;
    }
    if common.seed != 0 || config.is_none() {
        cfg.seed = common.seed;
    }
    let rep = analyze::analyze(&spec, &cfg, tamper);
    if let Some(dir) = &common.out {
        analyze::write_outputs(&rep, dir)?;
    }
    if common.json {
        println!("{}", serde_json::to_string_pretty(&rep)?);
    } else {
        print!("{}", analyze::summary_text(&rep));
    }
    Ok(())
}

pub const RICCATI_CSV_HEADER: &str = "t,x1,x2,x3,u11,u12,u22,trace_defect,status";

#[allow(clippy::too_many_arguments)]
fn cmd_riccati(
    common: &Common,
    metric: &str,
    params: &[String],
    point: Option<&str>,
    dir: &str,
    u0: &str,
    t_end: f64,
    dt: f64,
) -> Result<()> {
    let spec = load_metric(metric, &parse_params(params)?)?;
    let p = match point {
        Some(s) => parse_triple(s)?,
        None => std::array::from_fn(|k| 0.5 * (spec.sample_box[k][0] + spec.sample_box[k][1])),
    };
    let v = parse_triple(dir)?;
    let g = pack_at::<f64>(&spec, p)?.g;
    let n2 = linalg::form(&g, &v, &v);
    if n2 <= 0.0 {
        bail!("direction must be nonzero");
    }
    let v = linalg::scale(&v, 1.0 / n2.sqrt());
    let u = parse_triple(u0)?;
    let path = integrate_geodesic::<f64>(&spec, p, v, t_end, dt)?;
    let js = jacobi_along(&spec, &path)?;
    let run = integrate_riccati(&path, &js, [[u[0], u[1]], [u[1], u[2]]], t_end);
    let mut csv = String::from(RICCATI_CSV_HEADER);
    csv.push('\n');
    for (s, &k) in run.states.iter().zip(&run.sample_index) {
        let x = path.positions[k];
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{:e},ok",
            s.t, x[0], x[1], x[2], s.u[0], s.u[1], s.u[2], s.trace_defect
        );
    }
    if let Some((lo, hi)) = run.blowup {
        let k = ((hi / path.dt).round().max(0.0) as usize).min(path.positions.len() - 1);
        let x = path.positions[k];
        let _ = writeln!(csv, "{},{},{},{},nan,nan,nan,nan,blowup", hi, x[0], x[1], x[2]);
        let _ = lo;
    }
    if common.json {
        if let Some(path) = &common.out {
            std::fs::write(path, &csv)?;
        }
        let summary = json!({
            "metric": spec.name,
            "point": p,
            "direction": v,
            "steps": run.states.len(),
            "max_trace_defect": run.max_trace_defect,
            "blowup_time": run.blowup_time(),
            "blowup_bracket": run.blowup,
        });
        println!("{}", serde_json::to_string_pretty(&summary)?);
        Ok(())
    } else {
        emit(common, &csv)
    }
}

fn cmd_classify(common: &Common, path: &Path, float: bool) -> Result<()> {
    let src = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let inst: ConstraintInstance<Rational> = src.parse()?;
    let verdict = if float {
        classify(&inst.to_f64())?
    } else {
        classify(&inst)?
    };
    let text = if common.json {
        format!("{}\n", serde_json::to_string_pretty(&verdict)?)
    } else {
        let mut s = format!("branch: {}\n", verdict.branch);
        for w in &verdict.witness {
            let _ = writeln!(s, "  {}", w);
        }
        if let Some(c) = &verdict.certificate {
            let _ = writeln!(s, "certificate: {}", c);
        }
        if verdict.via_tilde {
            let _ = writeln!(s, "classified after the reversal t -> 1/t");
        }
        let _ = writeln!(s, "oracle residual: {:e} (scale {:e})", verdict.residual, verdict.scale);
        s
    };
    emit(common, &text)
}

fn cmd_frame_check(common: &Common, frame: Option<&Path>, mode: &str, eds: bool) -> Result<()> {
    let fd = match frame {
        Some(p) => {
            let src = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            FrameData::<f64>::from_kv(&src)?
        }
        None => {
            let mode: FrameMode = mode.parse()?;
            FrameData::random(common.seed, mode, None)?
        }
    };
    let mut gcd = serde_json::Map::new();
    for case in Case::ALL {
        gcd.insert(
            format!("{:?}", case),
            json!(special_direction_polys(&fd, case).gcd_residual()),
        );
    }
    let a1 = a1_crosscheck(&fd);
    let roots = root_identities(&fd).map(|r| r.max()).ok();
    let mut report = json!({
        "mode": fd.mode.to_string(),
        "lambda2": fd.l2,
        "lambda3": fd.l3,
        "gcd_residual": gcd,
        "bianchi_residuals": bianchi_frame_residuals(&fd),
        "ric111_residual": ric111_residual(&fd),
        "a1_crosscheck": {
            "residual13": a1.residual13,
            "residual23": a1.residual23,
            "inconsistent_mode": a1.inconsistent_mode,
        },
        "root_identities_max": roots,
    });
    if eds {
        let mut closures = Vec::new();
        for which in [Lemma::L4, Lemma::L5] {
            for s1 in [1.0, -1.0] {
                for s2 in [1.0, -1.0] {
                    let v = eds_closure(which, fd.l2, (s1, s2), None)?;
                    closures.push(json!({
                        "lemma": format!("{:?}", which),
                        "signs": [s1, s2],
                        "contradiction": v.contradiction,
                        "determinant": v.determinant,
                        "certificate": v.certificate,
                    }));
                }
            }
        }
        report["eds_closure"] = json!(closures);
        report["certificates"] = serde_json::to_value(contradiction_certificates())?;
    }
    let text = if common.json {
        format!("{}\n", serde_json::to_string_pretty(&report)?)
    } else {
        let mut s = fd.to_kv();
        s.push_str("---\n");
        for (k, v) in report.as_object().expect("object") {
            if k == "eds_closure" || k == "certificates" {
                for item in v.as_array().expect("array") {
                    let _ = writeln!(s, "{}: {}", k, item);
                }
            } else {
                let _ = writeln!(s, "{}: {}", k, v);
            }
        }
        s
    };
    emit(common, &text)
}

fn cmd_selftest(common: &Common, tamper: bool) -> Result<bool> {
    let checks = selftest::run(common.seed, tamper);
    let ok = checks.iter().all(|c| c.pass);
    let text = if common.json {
        format!(
            "{}\n",
            serde_json::to_string_pretty(&json!({ "pass": ok, "checks": checks }))?
        )
    } else {
        let mut s = String::new();
        for c in &checks {
            let _ = writeln!(
                s,
                "{} {:<40} value {:.3e} (threshold {:.1e})  {}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.threshold,
                c.detail
            );
        }
        let passed = checks.iter().filter(|c| c.pass).count();
        let _ = writeln!(s, "{}/{} checks passed", passed, checks.len());
        s
    };
    emit(common, &text)?;
    Ok(ok)
}

fn run(cli: Cli) -> Result<bool> {
    let c = &cli.common;
    match &cli.cmd {
        Cmd::Analyze {
            metric,
            params,
            points,
            dirs,
            config,
            tamper_sign,
        } => cmd_analyze(c, metric, params, *points, *dirs, config.as_deref(), *tamper_sign)?,
        Cmd::Riccati {
            metric,
            params,
            point,
            dir,
            u0,
            t_end,
            dt,
        } => cmd_riccati(c, metric, params, point.as_deref(), dir, u0, *t_end, *dt)?,
        Cmd::Classify { instance, float } => cmd_classify(c, instance, *float)?,
        Cmd::FrameCheck { frame, mode, eds } => cmd_frame_check(c, frame.as_deref(), mode, *eds)?,
        Cmd::Selftest { tamper_sign } => return cmd_selftest(c, *tamper_sign),
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(2)
        }
    }
}
