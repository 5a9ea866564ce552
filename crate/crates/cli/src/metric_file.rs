//! Metric selection: builtin names or TOML metric files.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use ricobs_core::expr::Params;
use ricobs_core::metric::{MetricSpec, BUILTINS};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricFile {
    name: String,
    #[serde(default)]
    params: BTreeMap<String, f64>,
    components: Option<Components>,
    #[serde(rename = "box")]
    sample_box: Option<SampleBox>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Components {
    g11: String,
    g12: String,
    g13: String,
    g22: String,
    g23: String,
    g33: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleBox {
    x1: [f64; 2],
    x2: [f64; 2],
    x3: [f64; 2],
}

/// Parses `k=v` overrides.
pub fn parse_params(items: &[String]) -> Result<Params> {
    let mut out = Params::new();
    for it in items {
        let (k, v) = it
            .split_once('=')
            .with_context(|| format!("--param expects key=value, got `{}`", it))?;
        let v: f64 = v
            .trim()
            .parse()
            .with_context(|| format!("--param {}: not a number", k))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

/// Parses a metric file from TOML text.
pub fn parse_metric_toml(src: &str, overrides: &Params) -> Result<MetricSpec> {
    let f: MetricFile = toml::from_str(src).context("metric file")?;
    let mut params: Params = f.params.into_iter().collect();
    if f.name != "custom" {
        if f.components.is_some() {
            bail!("components are only allowed with name = \"custom\"");
        }
        for (k, v) in overrides {
            params.insert(k.clone(), *v);
        }
        let mut spec = MetricSpec::builtin(&f.name, &params)?;
        if let Some(b) = f.sample_box {
            spec.sample_box = [b.x1, b.x2, b.x3];
        }
        return Ok(spec);
    }
    let c = f
        .components
        .context("custom metric needs a [components] table")?;
    for (k, v) in overrides {
        if !params.contains_key(k) {
            bail!("unknown parameter `{}`", k);
        }
        params.insert(k.clone(), *v);
    }
    let sample_box = f
        .sample_box
        .map(|b| [b.x1, b.x2, b.x3])
        .unwrap_or([[-1.0, 1.0]; 3]);
    let src = [
        c.g11.as_str(),
        c.g12.as_str(),
        c.g13.as_str(),
        c.g22.as_str(),
        c.g23.as_str(),
        c.g33.as_str(),
    ];
    Ok(MetricSpec::custom(src, params, sample_box)?)
}

/// Resolves a builtin name or a path to a metric file.
pub fn load_metric(arg: &str, overrides: &Params) -> Result<MetricSpec> {
    if BUILTINS.contains(&arg) {
        return Ok(MetricSpec::builtin(arg, overrides)?);
    }
    let path = Path::new(arg);
    if !path.exists() {
        bail!(
            "`{}` is neither a builtin metric ({}) nor a file",
            arg,
            BUILTINS.join(", ")
        );
    }
    let src = std::fs::read_to_string(path).with_context(|| format!("reading {}", arg))?;
    parse_metric_toml(&src, overrides)
}

/// Parses `a,b,c`.
pub fn parse_triple(s: &str) -> Result<[f64; 3]> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("expected three comma-separated numbers, got `{}`", s))?;
    match v.as_slice() {
        [a, b, c] => Ok([*a, *b, *c]),
        _ => bail!("expected three comma-separated numbers, got `{}`", s),
    }
}
