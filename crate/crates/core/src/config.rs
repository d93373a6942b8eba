//! JSON model configuration.
//!
//! ```json
//! {
//!   "model": "flrw_toy",
//!   "grid_n": 256,
//!   "t_domain": [-1.0, 1.0],
//!   "params": { "t": [-1.0, 0.0, 1.0], "scale": [0.8, 1.0, 1.3], "lapse": [1.0, 1.0, 1.0] }
//! }
//! ```
//!
//! Bounds of `t_domain` are numbers, or `null` / `"-inf"` / `"inf"` for an
//! unbounded end (accepted for `static` and `de_sitter` only). Unknown keys are
//! rejected at every level.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::grid::{DerivativeScheme, Grid};
use crate::spacetime::{FlrwToy, ModelKind, SpacetimeModel, Tabulated, TimeDomain, DEFAULT_MARGIN_FLOOR};
use crate::spline::{CubicSpline, EndCondition};

/// Default grid size when neither the config nor the caller sets one.
pub const DEFAULT_GRID_N: usize = 256;

/// One end of `t_domain`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Bound {
    Finite(f64),
    Named(String),
    Unbounded(Option<()>),
}

impl Bound {
    fn resolve(&self, lower: bool) -> Result<f64> {
        match self {
            Bound::Finite(v) if v.is_finite() => Ok(*v),
            Bound::Finite(v) => Err(Error::Config(format!("non-finite time bound {v}"))),
            Bound::Unbounded(_) => Ok(if lower { f64::NEG_INFINITY } else { f64::INFINITY }),
            Bound::Named(s) => match (s.as_str(), lower) {
                ("-inf", true) => Ok(f64::NEG_INFINITY),
                ("inf" | "+inf", false) => Ok(f64::INFINITY),
                _ => Err(Error::Config(format!("unrecognised time bound `{s}`"))),
            },
        }
    }

    fn from_f64(v: f64) -> Self {
        if v.is_finite() {
            Bound::Finite(v)
        } else if v < 0.0 {
            Bound::Named("-inf".into())
        } else {
            Bound::Named("inf".into())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub model: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_n: Option<usize>,
    pub t_domain: (Bound, Bound),
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub params: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derivative_fallback: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin_floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<DerivativeScheme>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlrwParams {
    pub t: Vec<f64>,
    pub scale: Vec<f64>,
    pub lapse: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeLattice {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabulatedParams {
    pub x_points: usize,
    pub t_lattice: TimeLattice,
    /// Row-major, one row of `x_points` values per time level.
    pub lapse: Vec<f64>,
    pub metric: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EmptyParams {}

/// A loaded configuration: the model plus the grid it asks for.
#[derive(Clone, Debug)]
pub struct LoadedModel {
    pub model: SpacetimeModel,
    pub grid_n: usize,
    pub scheme: DerivativeScheme,
}

impl LoadedModel {
    pub fn grid(&self) -> Result<Grid> {
        Grid::with_scheme(self.grid_n, self.scheme)
    }
}

fn params<T: for<'de> Deserialize<'de>>(value: &Value, kind: ModelKind) -> Result<T> {
    let value = if value.is_null() { Value::Object(Default::default()) } else { value.clone() };
    serde_json::from_value(value).map_err(|e| Error::Config(format!("params of `{}`: {e}", kind.name())))
}

impl ModelConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn build(&self) -> Result<LoadedModel> {
        let domain = TimeDomain::new(self.t_domain.0.resolve(true)?, self.t_domain.1.resolve(false)?)?;
        let analytic = matches!(self.model, ModelKind::Static | ModelKind::DeSitter);
        if !analytic && !domain.is_finite() {
            return Err(Error::Config(format!(
                "infinite time bounds are only accepted for analytic built-ins, not `{}`",
                self.model.name()
            )));
        }
        let model = match self.model {
            ModelKind::Static | ModelKind::DeSitter => {
                params::<EmptyParams>(&self.params, self.model)?;
                let base = if self.model == ModelKind::Static {
                    SpacetimeModel::static_product()
                } else {
                    SpacetimeModel::de_sitter()
                };
                if domain == TimeDomain::real_line() {
                    base
                } else {
                    base.with_domain(domain)
                }
            }
            ModelKind::FlrwToy => {
                let p: FlrwParams = params(&self.params, self.model)?;
                let scale = CubicSpline::new(p.t.clone(), p.scale, EndCondition::Natural)?;
                let lapse = CubicSpline::new(p.t, p.lapse, EndCondition::Natural)?;
                SpacetimeModel::flrw_toy(FlrwToy::new(scale, lapse)?, domain)?
            }
            ModelKind::Tabulated => {
                let p: TabulatedParams = params(&self.params, self.model)?;
                let table = Tabulated::new(
                    p.x_points,
                    (p.t_lattice.min, p.t_lattice.max, p.t_lattice.points),
                    p.lapse,
                    p.metric,
                )?;
                SpacetimeModel::tabulated(table, domain)?
            }
            ModelKind::Reparametrized => {
                return Err(Error::Config("reparametrized splittings are exported as `tabulated`".into()));
            }
        };
        let floor = self.margin_floor.unwrap_or(DEFAULT_MARGIN_FLOOR);
        if !(floor >= 0.0 && floor < 1.0) {
            return Err(Error::Config(format!("margin_floor must lie in [0, 1), got {floor}")));
        }
        let model = model
            .with_margin_floor(floor)
            .with_derivative_fallback(self.derivative_fallback.unwrap_or(true));
        let grid_n = self.grid_n.unwrap_or(DEFAULT_GRID_N);
        Grid::new(grid_n)?;
        Ok(LoadedModel {
            model,
            grid_n,
            scheme: self.scheme.unwrap_or_default(),
        })
    }

    /// Serialises a tabulated model (as produced by a reparametrization export).
    pub fn from_tabulated(model: &SpacetimeModel, grid_n: usize) -> Result<Self> {
        let table = model
            .as_tabulated()
            .ok_or_else(|| Error::InvalidArgument(format!("`{}` is not a tabulated model", model.name())))?;
        let (min, max, points) = table.t_lattice();
        let params = TabulatedParams {
            x_points: table.x_points(),
            t_lattice: TimeLattice { min, max, points },
            lapse: table.lapse_samples().to_vec(),
            metric: table.metric_samples().to_vec(),
        };
        let domain = model.t_domain();
        Ok(ModelConfig {
            model: ModelKind::Tabulated,
            grid_n: Some(grid_n),
            t_domain: (Bound::from_f64(domain.min), Bound::from_f64(domain.max)),
            params: serde_json::to_value(params)?,
            derivative_fallback: Some(model.derivative_fallback_enabled()),
            margin_floor: Some(model.margin_floor()),
            scheme: None,
        })
    }
}

/// Reads and builds a configuration file.
pub fn load_model(path: &Path) -> Result<LoadedModel> {
    ModelConfig::load(path)?.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_built_ins() {
        let c = ModelConfig::from_json_str(r#"{"model":"de_sitter","grid_n":64,"t_domain":["-inf","inf"]}"#).unwrap();
        let m = c.build().unwrap();
        assert_eq!(m.grid_n, 64);
        assert_eq!(m.model.kind(), ModelKind::DeSitter);
        assert_eq!(m.model.t_domain(), TimeDomain::real_line());
        let c = ModelConfig::from_json_str(r#"{"model":"static","t_domain":[null,null],"params":{}}"#).unwrap();
        assert_eq!(c.build().unwrap().grid_n, DEFAULT_GRID_N);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(ModelConfig::from_json_str(r#"{"model":"static","t_domain":[0,1],"colour":"red"}"#).is_err());
        let c = ModelConfig::from_json_str(r#"{"model":"static","t_domain":[0,1],"params":{"speed":2}}"#).unwrap();
        assert!(c.build().is_err());
        assert!(ModelConfig::from_json_str(r#"{"model":"static"}"#).is_err());
    }

    #[test]
    fn infinite_bounds_only_for_analytic_models() {
        let text = r#"{"model":"flrw_toy","t_domain":["-inf",1],"params":{"t":[-1,0,1],"scale":[1,1,1],"lapse":[1,1,1]}}"#;
        assert!(ModelConfig::from_json_str(text).unwrap().build().is_err());
        let text = r#"{"model":"flrw_toy","t_domain":[-1,1],"params":{"t":[-1,0,1],"scale":[1,1.1,1.3],"lapse":[1,1,1]}}"#;
        let m = ModelConfig::from_json_str(text).unwrap().build().unwrap();
        assert!((m.model.metric(0.0, 0.0) - 1.21).abs() < 1e-12);
    }

    #[test]
    fn tabulated_round_trip() {
        let text = r#"{"model":"tabulated","grid_n":16,"t_domain":[0,1],
            "params":{"x_points":4,"t_lattice":{"min":0,"max":1,"points":2},
            "lapse":[1,1,1,1,2,2,2,2],"metric":[1,2,3,4,1,2,3,4]}}"#;
        let c = ModelConfig::from_json_str(text).unwrap();
        let m = c.build().unwrap();
        let back = ModelConfig::from_tabulated(&m.model, 16).unwrap();
        let again = ModelConfig::from_json_str(&back.to_json_pretty().unwrap()).unwrap().build().unwrap();
        assert_eq!(again.model.metric(1.0, 0.3), m.model.metric(1.0, 0.3));
        assert_eq!(again.model.lapse(2.0, 0.7), m.model.lapse(2.0, 0.7));
    }

    #[test]
    fn tabulated_length_mismatch() {
        let text = r#"{"model":"tabulated","t_domain":[0,1],
            "params":{"x_points":4,"t_lattice":{"min":0,"max":1,"points":2},"lapse":[1,1],"metric":[1,1]}}"#;
        assert!(ModelConfig::from_json_str(text).unwrap().build().is_err());
    }
}
