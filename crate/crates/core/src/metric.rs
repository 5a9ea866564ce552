//! Metric specifications: builtin model geometries and custom expression metrics.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::expr::{parse_expr, Expr, Params};

/// Component order of the six independent entries.
pub const COMPONENTS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
pub const COMPONENT_NAMES: [&str; 6] = ["g11", "g12", "g13", "g22", "g23", "g33"];

pub const BUILTINS: [&str; 6] = ["flat", "hyperbolic", "sphere", "heisenberg", "sol", "h2xr"];

/// A metric on a coordinate patch of R^3 given by six component expressions.
#[derive(Clone, Debug)]
pub struct MetricSpec {
    pub name: String,
    pub components: [Expr; 6],
    pub params: Params,
    /// Coordinate box `[lo, hi]` per axis used for random sampling.
    pub sample_box: [[f64; 2]; 3],
}

fn parse_all(src: [&str; 6], params: &Params) -> Result<[Expr; 6]> {
    let names: Vec<&str> = params.keys().map(|s| s.as_str()).collect();
    let mut out: Vec<Expr> = Vec::with_capacity(6);
    for s in src {
        out.push(parse_expr(s, &names)?);
    }
    Ok(out.try_into().expect("six components"))
}

impl MetricSpec {
    /// Builds a builtin; `overrides` replaces default parameter values.
    pub fn builtin(name: &str, overrides: &Params) -> Result<Self> {
        let (defaults, src, sample_box): (&[(&str, f64)], [&str; 6], [[f64; 2]; 3]) = match name {
            "flat" => (&[], ["1", "0", "0", "1", "0", "1"], [[-1.0, 1.0]; 3]),
            "hyperbolic" => (
                &[("c", 1.0)],
                [
                    "1/(c^2*x3^2)",
                    "0",
                    "0",
                    "1/(c^2*x3^2)",
                    "0",
                    "1/(c^2*x3^2)",
                ],
                [[-1.0, 1.0], [-1.0, 1.0], [0.5, 2.0]],
            ),
            "sphere" => (
                &[("c", 1.0)],
                [
                    "4/(c^2*(1 + x1^2 + x2^2 + x3^2)^2)",
                    "0",
                    "0",
                    "4/(c^2*(1 + x1^2 + x2^2 + x3^2)^2)",
                    "0",
                    "4/(c^2*(1 + x1^2 + x2^2 + x3^2)^2)",
                ],
                [[-1.0, 1.0]; 3],
            ),
            "heisenberg" => (
                &[("L", 1.0)],
                ["1", "0", "0", "1 + L^2*x1^2", "-L*x1", "1"],
                [[-1.0, 1.0]; 3],
            ),
            "sol" => (
                &[],
                ["exp(2*x3)", "0", "0", "exp(-2*x3)", "0", "1"],
                [[-1.0, 1.0]; 3],
            ),
            "h2xr" => (
                &[],
                ["1/x2^2", "0", "0", "1/x2^2", "0", "1"],
                [[-1.0, 1.0], [0.5, 2.0], [-1.0, 1.0]],
            ),
            _ => return Err(Error::UnknownMetric(name.to_string())),
        };
        let mut params: Params = defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        for (k, v) in overrides {
            if !params.contains_key(k) {
                return Err(Error::UnknownIdentifier {
                    name: k.clone(),
                    offset: 0,
                });
            }
            params.insert(k.clone(), *v);
        }
        Ok(MetricSpec {
            name: name.to_string(),
            components: parse_all(src, &params)?,
            params,
            sample_box,
        })
    }

    /// Custom metric from six component sources in the order `g11 g12 g13 g22 g23 g33`.
    pub fn custom(src: [&str; 6], params: Params, sample_box: [[f64; 2]; 3]) -> Result<Self> {
        Ok(MetricSpec {
            name: "custom".to_string(),
            components: parse_all(src, &params)?,
            params,
            sample_box,
        })
    }

    /// Identity plus small random polynomial terms of degree up to 3, positive
    /// definite on the default box `[-0.5, 0.5]^3`.
    pub fn random_polynomial(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let monomials = [
            "x1", "x2", "x3", "x1*x2", "x2*x3", "x1*x3", "x1^2", "x2^2", "x3^2", "x1*x2*x3",
            "x1^3", "x2^2*x3",
        ];
        let mut src: Vec<String> = Vec::with_capacity(6);
        for (k, &(i, j)) in COMPONENTS.iter().enumerate() {
            let mut s = if i == j { "1".to_string() } else { "0".to_string() };
            for m in monomials {
                let c: f64 = rng.random_range(-0.12..0.12);
                s.push_str(&format!(" + {:.6}*{}", c, m));
            }
            let _ = k;
            src.push(s);
        }
        let refs: [&str; 6] = std::array::from_fn(|k| src[k].as_str());
        let mut spec = Self::custom(refs, Params::new(), [[-0.5, 0.5]; 3]).expect("generated source parses");
        spec.name = format!("polynomial-{}", seed);
        spec
    }

    /// Uniform sample from the box.
    pub fn sample_point<R: rand::Rng>(&self, rng: &mut R) -> [f64; 3] {
        std::array::from_fn(|k| {
            let [lo, hi] = self.sample_box[k];
            rng.random_range(lo..hi)
        })
    }

    /// Component source text in storage order.
    pub fn component_sources(&self) -> [String; 6] {
        std::array::from_fn(|k| self.components[k].to_string())
    }
}
