//! TOML metric documents.
//!
//! ```toml
//! [metric]
//! kind = "custom"          # acoustic | schwarzschild | gordon | gordon_radial | kerr | minkowski | custom
//! n = 2
//! params = { A = -1.0, B = 1.0 }
//! probe = [[1.0, 0.0], [0.0, 2.0]]   # optional sample points; g00 must be positive there
//!
//! [components]             # custom only: upper triangle, index 0 is time
//! g00 = "1"
//! g01 = "(A*x1 - B*x2)/(x1^2 + x2^2)"
//! # … g02, g11, g12, g22
//!
//! [gordon]                 # gordon only: flow and refractive index expressions
//! w1 = "-alpha*x1/(x1^2 + x2^2)"
//! w2 = "-alpha*x2/(x1^2 + x2^2)"
//! index = "1.5"
//! ```
//!
//! Builtin parameters: `acoustic` {A, B}; `schwarzschild` {m};
//! `kerr` {m, a} (n = 2 is the restricted `(ρ, z)` metric, n = 3 the full
//! Kerr–Schild metric); `gordon_radial` {alpha, index, c}; `gordon` {c} plus
//! any names used by its expressions. `custom` parameters are free names.

use std::collections::BTreeMap;

use serde::Deserialize;
use thiserror::Error;

use crate::expr::{Expr, ExprError, Scope};

use super::builtin::{self, ExprMetric};
use super::{MetricError, Provenance, SpacetimeMetric};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid TOML: {0}")]
    Toml(String),
    #[error("in `{key}`: {source}")]
    Expr { key: String, source: ExprError },
    #[error("missing component `{0}`")]
    MissingComponent(String),
    #[error("unknown component `{0}`")]
    UnknownComponent(String),
    #[error("missing parameter `{0}`")]
    MissingParam(String),
    #[error("unknown parameter `{0}` for this metric kind")]
    UnknownParam(String),
    #[error("unknown metric kind `{0}`")]
    UnknownKind(String),
    #[error("metric kind `{kind}` does not support n = {n}")]
    Dimension { kind: String, n: usize },
    #[error("probe point {index} has {got} coordinates, expected {expected}")]
    ProbeShape {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("probe at {point:?} failed: {source}")]
    Probe {
        point: Vec<f64>,
        source: MetricError,
    },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// A parsed metric of either supported spatial dimension.
#[derive(Debug, Clone)]
pub enum AnyMetric {
    Planar(SpacetimeMetric<2>),
    Spatial(SpacetimeMetric<3>),
}

impl AnyMetric {
    pub fn dim(&self) -> usize {
        match self {
            AnyMetric::Planar(_) => 2,
            AnyMetric::Spatial(_) => 3,
        }
    }

    pub fn planar(self) -> Option<SpacetimeMetric<2>> {
        match self {
            AnyMetric::Planar(m) => Some(m),
            AnyMetric::Spatial(_) => None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    metric: MetricSection,
    components: Option<BTreeMap<String, String>>,
    gordon: Option<GordonSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricSection {
    kind: String,
    n: usize,
    #[serde(default)]
    params: BTreeMap<String, f64>,
    #[serde(default)]
    probe: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GordonSection {
    w1: String,
    w2: String,
    index: String,
}

struct Params {
    map: BTreeMap<String, f64>,
}

impl Params {
    fn take(&mut self, name: &str) -> Result<f64, ConfigError> {
        self.map
            .remove(name)
            .ok_or_else(|| ConfigError::MissingParam(name.into()))
    }

    fn take_or(&mut self, name: &str, default: f64) -> f64 {
        self.map.remove(name).unwrap_or(default)
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.map.into_keys().next() {
            Some(k) => Err(ConfigError::UnknownParam(k)),
            None => Ok(()),
        }
    }
}

pub fn parse_metric_config(text: &str) -> Result<AnyMetric, ConfigError> {
    let doc: Document = toml::from_str(text).map_err(|e| ConfigError::Toml(e.to_string()))?;
    let kind = doc.metric.kind.as_str();
    let n = doc.metric.n;
    if doc.components.is_some() && kind != "custom" {
        return Err(ConfigError::UnknownComponent(
            "[components] is only valid for kind = \"custom\"".into(),
        ));
    }
    let mut params = Params {
        map: doc.metric.params.clone(),
    };
    let dim_err = || ConfigError::Dimension {
        kind: kind.to_string(),
        n,
    };
    let metric = match (kind, n) {
        ("minkowski", 2) => AnyMetric::Planar(builtin::minkowski()),
        ("minkowski", 3) => AnyMetric::Spatial(builtin::minkowski()),
        ("acoustic", 2) => {
            let a = params.take("A")?;
            let b = params.take("B")?;
            AnyMetric::Planar(builtin::acoustic_vortex(a, b)?)
        }
        ("schwarzschild", 2) => AnyMetric::Planar(builtin::schwarzschild_equatorial(params.take("m")?)?),
        ("kerr", 2) => {
            let m = params.take("m")?;
            AnyMetric::Planar(builtin::kerr_restricted(m, params.take("a")?)?)
        }
        ("kerr", 3) => {
            let m = params.take("m")?;
            AnyMetric::Spatial(builtin::kerr_schild_3d(m, params.take("a")?)?)
        }
        ("gordon_radial", 2) => {
            let alpha = params.take("alpha")?;
            let index = params.take("index")?;
            let c = params.take_or("c", 1.0);
            AnyMetric::Planar(builtin::gordon_radial(alpha, index, c)?)
        }
        ("gordon", 2) => {
            let sec = doc
                .gordon
                .as_ref()
                .ok_or_else(|| ConfigError::MissingComponent("[gordon] section".into()))?;
            let c = params.take_or("c", 1.0);
            let scope = Scope::with_params(2, params.map.clone());
            params.map.clear();
            let parse = |key: &str, src: &str| {
                Expr::parse(src, &scope).map_err(|source| ConfigError::Expr {
                    key: format!("gordon.{key}"),
                    source,
                })
            };
            let w = [parse("w1", &sec.w1)?, parse("w2", &sec.w2)?];
            AnyMetric::Planar(builtin::gordon(w, parse("index", &sec.index)?, c)?)
        }
        ("custom", 2) => AnyMetric::Planar(custom::<2>(&doc, &mut params)?),
        ("custom", 3) => AnyMetric::Spatial(custom::<3>(&doc, &mut params)?),
        ("minkowski" | "acoustic" | "schwarzschild" | "kerr" | "gordon_radial" | "gordon" | "custom", _) => {
            return Err(dim_err())
        }
        _ => return Err(ConfigError::UnknownKind(kind.to_string())),
    };
    params.finish()?;
    probe(&metric, &doc.metric.probe)?;
    Ok(metric)
}

fn custom<const N: usize>(
    doc: &Document,
    params: &mut Params,
) -> Result<SpacetimeMetric<N>, ConfigError> {
    let table = doc
        .components
        .as_ref()
        .ok_or_else(|| ConfigError::MissingComponent("[components] table".into()))?;
    let scope = Scope::with_params(N, std::mem::take(&mut params.map));
    let mut keys: Vec<String> = Vec::new();
    for j in 0..=N {
        for k in j..=N {
            keys.push(format!("g{j}{k}"));
        }
    }
    if let Some(extra) = table.keys().find(|k| !keys.contains(k)) {
        return Err(ConfigError::UnknownComponent(extra.clone()));
    }
    let mut exprs = Vec::with_capacity(keys.len());
    for key in &keys {
        let src = table
            .get(key)
            .ok_or_else(|| ConfigError::MissingComponent(key.clone()))?;
        exprs.push(Expr::parse(src, &scope).map_err(|source| ConfigError::Expr {
            key: key.clone(),
            source,
        })?);
    }
    // keys run g00, g01..g0N, then the spatial upper triangle
    let ss = exprs.split_off(N + 1);
    let tt = exprs.remove(0);
    let ts: [Expr; N] = exprs.try_into().expect("N time-space components");
    let params = scope.params.iter().map(|(k, v)| (k.as_str(), *v));
    Ok(SpacetimeMetric::new(
        ExprMetric { tt, ts, ss },
        Provenance::builtin("custom", params),
    ))
}

fn probe(metric: &AnyMetric, points: &[Vec<f64>]) -> Result<(), ConfigError> {
    let expected = metric.dim();
    for (index, p) in points.iter().enumerate() {
        if p.len() != expected {
            return Err(ConfigError::ProbeShape {
                index,
                got: p.len(),
                expected,
            });
        }
        let res = match metric {
            AnyMetric::Planar(m) => m.eval_inverse_metric(&[p[0], p[1]]).map(|_| ()),
            AnyMetric::Spatial(m) => m.eval_inverse_metric(&[p[0], p[1], p[2]]).map(|_| ()),
        };
        res.map_err(|source| ConfigError::Probe {
            point: p.clone(),
            source,
        })?;
    }
    Ok(())
}
