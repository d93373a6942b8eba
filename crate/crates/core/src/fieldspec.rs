//! Compact textual field specifications for the command line.
//!
//! A spec is a comma-separated sum of terms:
//!
//! * `const:<v>` (or a bare number): the constant `v`;
//! * `harmonic:<k>:<cos|sin>[:amp]`: `amp · cos(kx)` or `amp · sin(kx)` (amp defaults to 1);
//! * `samples:@<file.csv>`: one value per grid point, taken from the last
//!   column of each row; a non-numeric first row is treated as a header.
//!
//! Metric specs additionally accept `g0` and `g:<t>[:scale]` for (a multiple
//! of) the slice metric `g_t` of a model.

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Grid, MetricField, ScalarField};
use crate::spacetime::SpacetimeModel;

fn spec_error(spec: &str, reason: impl Into<String>) -> Error {
    Error::FieldSpec {
        spec: spec.to_string(),
        reason: reason.into(),
    }
}

fn number(spec: &str, text: &str) -> Result<f64> {
    text.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| spec_error(spec, format!("`{text}` is not a finite number")))
}

fn read_samples(spec: &str, path: &Path, grid: &Grid) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut values = Vec::new();
    for (row, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let last = line.rsplit(',').next().unwrap_or(line).trim();
        match last.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            _ if row == 0 => continue,
            _ => return Err(spec_error(spec, format!("row {} of {} is not numeric", row + 1, path.display()))),
        }
    }
    if values.len() != grid.n() {
        return Err(spec_error(spec, format!("{} samples in {}, grid has {}", values.len(), path.display(), grid.n())));
    }
    Ok(values)
}

fn term(spec: &str, term: &str, grid: &Grid) -> Result<Vec<f64>> {
    let parts: Vec<&str> = term.trim().split(':').collect();
    match parts.as_slice() {
        ["const", v] => Ok(vec![number(spec, v)?; grid.n()]),
        [v] if v.trim().parse::<f64>().is_ok() => Ok(vec![number(spec, v)?; grid.n()]),
        ["harmonic", k, kind, rest @ ..] if rest.len() <= 1 => {
            let k: u32 = k.trim().parse().map_err(|_| spec_error(spec, format!("harmonic index `{k}` is not a non-negative integer")))?;
            let amp = match rest {
                [a] => number(spec, a)?,
                _ => 1.0,
            };
            let trig: fn(f64) -> f64 = match kind.trim() {
                "cos" => f64::cos,
                "sin" => f64::sin,
                other => return Err(spec_error(spec, format!("expected `cos` or `sin`, got `{other}`"))),
            };
            Ok((0..grid.n()).map(|i| amp * trig(k as f64 * grid.x(i))).collect())
        }
        ["samples", file] => {
            let path = file
                .strip_prefix('@')
                .ok_or_else(|| spec_error(spec, "sample files are written as samples:@path"))?;
            read_samples(spec, Path::new(path), grid)
        }
        _ => Err(spec_error(spec, format!("unrecognised term `{term}`"))),
    }
}

/// Parses a field spec on `grid`.
pub fn parse_field(spec: &str, grid: &Grid) -> Result<ScalarField> {
    if spec.trim().is_empty() {
        return Err(spec_error(spec, "empty specification"));
    }
    let mut sum = vec![0.0; grid.n()];
    // `samples:@a,b.csv` would be ambiguous, so commas always separate terms.
    for t in spec.split(',') {
        for (acc, v) in sum.iter_mut().zip(term(spec, t, grid)?) {
            *acc += v;
        }
    }
    ScalarField::new(grid, sum)
}

/// Parses a metric spec: `g0`, `g:<t>[:scale]`, or a positive field spec.
pub fn parse_metric(spec: &str, grid: &Grid, model: &SpacetimeModel) -> Result<MetricField> {
    let trimmed = spec.trim();
    if trimmed == "g0" {
        return model.slice_metric(grid, 0.0);
    }
    if let Some(rest) = trimmed.strip_prefix("g:") {
        let mut parts = rest.split(':');
        let t = number(spec, parts.next().unwrap_or(""))?;
        let scale = match parts.next() {
            Some(s) => number(spec, s)?,
            None => 1.0,
        };
        if parts.next().is_some() {
            return Err(spec_error(spec, "expected g:<t>[:scale]"));
        }
        return model.slice_metric(grid, t)?.scaled(scale);
    }
    MetricField::from_field(&parse_field(spec, grid)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn parses_terms_and_sums() {
        let g = Grid::new(16).unwrap();
        let f = parse_field("const:0.5", &g).unwrap();
        assert!(f.values().iter().all(|&v| v == 0.5));
        let h = parse_field("harmonic:2:sin:0.3,const:1", &g).unwrap();
        for i in 0..16 {
            assert!((h.values()[i] - (1.0 + 0.3 * (2.0 * g.x(i)).sin())).abs() < 1e-15);
        }
        assert_eq!(parse_field("-0.25", &g).unwrap().values()[7], -0.25);
        let c = parse_field("harmonic:1:cos", &g).unwrap();
        assert_eq!(c.values()[0], 1.0);
    }

    #[test]
    fn rejects_bad_specs() {
        let g = Grid::new(16).unwrap();
        for bad in ["", "const:", "const:x", "harmonic:1:tan", "harmonic:-1:cos", "poly:3", "const:inf", "samples:file.csv"] {
            assert!(matches!(parse_field(bad, &g), Err(Error::FieldSpec { .. })), "{bad}");
        }
    }

    #[test]
    fn reads_sample_files() {
        let g = Grid::new(8).unwrap();
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "x,value").unwrap();
        for i in 0..8 {
            writeln!(file, "{},{}", g.x(i), i as f64).unwrap();
        }
        let spec = format!("samples:@{}", file.path().display());
        let f = parse_field(&spec, &g).unwrap();
        assert_eq!(f.values()[5], 5.0);
        assert!(parse_field(&spec, &Grid::new(16).unwrap()).is_err());
    }

    #[test]
    fn metric_specs() {
        let g = Grid::new(16).unwrap();
        let ds = SpacetimeModel::de_sitter();
        assert_eq!(parse_metric("g0", &g, &ds).unwrap(), MetricField::flat(&g));
        let m = parse_metric("g:0:4", &g, &ds).unwrap();
        assert_eq!(m.coeff()[3], 4.0);
        let m = parse_metric("g:1", &g, &ds).unwrap();
        assert!((m.coeff()[0] - 1f64.cosh().powi(2)).abs() < 1e-15);
        assert!(parse_metric("const:-1", &g, &ds).is_err());
        assert_eq!(parse_metric("const:2", &g, &ds).unwrap().coeff()[0], 2.0);
    }
}
