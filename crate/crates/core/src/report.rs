//! JSON summaries and CSV exports with deterministic formatting.

use serde::Serialize;
use serde_json::{Map, Value};

use crate::geodesic::GeodesicState;
use crate::grid::{Grid, ScalarField};
use crate::splitting::PathDiscretization;

pub const SCHEMA_VERSION: u32 = 1;

/// One output record: `{schema_version, operation, model, grid_n, scheme, parameters, tolerances, ...values}`.
///
/// Keys are emitted in sorted order, so equal inputs give byte-identical output.
#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    root: Map<String, Value>,
    parameters: Map<String, Value>,
    tolerances: Map<String, Value>,
}

fn to_value(value: impl Serialize) -> Value {
    serde_json::to_value(value).unwrap_or(Value::Null)
}

impl Record {
    pub fn new(operation: &str, model: &str, grid: &Grid) -> Self {
        let mut root = Map::new();
        root.insert("schema_version".into(), SCHEMA_VERSION.into());
        root.insert("operation".into(), operation.into());
        root.insert("model".into(), model.into());
        root.insert("grid_n".into(), grid.n().into());
        root.insert("scheme".into(), grid.scheme().name().into());
        Record {
            root,
            parameters: Map::new(),
            tolerances: Map::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Serialize) -> Self {
        self.parameters.insert(key.into(), to_value(value));
        self
    }

    pub fn tolerance(mut self, key: &str, value: impl Serialize) -> Self {
        self.tolerances.insert(key.into(), to_value(value));
        self
    }

    pub fn value(mut self, key: &str, value: impl Serialize) -> Self {
        self.root.insert(key.into(), to_value(value));
        self
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.root.get(key)
    }

    pub fn into_value(self) -> Value {
        let mut root = self.root;
        root.insert("parameters".into(), Value::Object(self.parameters));
        root.insert("tolerances".into(), Value::Object(self.tolerances));
        Value::Object(root)
    }

    /// Pretty-printed JSON followed by a newline.
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(&self.clone().into_value()).expect("JSON values serialise");
        text.push('\n');
        text
    }
}

/// `x,value` rows for a field.
pub fn field_csv(field: &ScalarField) -> String {
    let mut out = String::from("x,value\n");
    for (i, v) in field.values().iter().enumerate() {
        out.push_str(&format!("{},{}\n", field.grid().x(i), v));
    }
    out
}

fn row_csv(out: &mut String, s: f64, values: &[f64]) {
    out.push_str(&s.to_string());
    for v in values {
        out.push(',');
        out.push_str(&v.to_string());
    }
    out.push('\n');
}

fn header(n: usize) -> String {
    let mut out = String::from("s");
    for i in 0..n {
        out.push_str(&format!(",f_{i}"));
    }
    out.push('\n');
    out
}

/// `s,f_0,…,f_{N-1}` rows, one per accepted state.
pub fn trajectory_csv(states: &[GeodesicState]) -> String {
    let n = states.first().map_or(0, |s| s.f.len());
    let mut out = header(n);
    for st in states {
        row_csv(&mut out, st.s, st.f.values());
    }
    out
}

/// `s,f_0,…,f_{N-1}` rows, one per knot at `s_k = k/K`.
pub fn path_csv(path: &PathDiscretization) -> String {
    let mut out = header(path.start().len());
    let k = path.segments();
    for (i, c) in path.knots().iter().enumerate() {
        row_csv(&mut out, i as f64 / k as f64, c.values());
    }
    out
}
