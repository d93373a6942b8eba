//! Closed-form curvature against the finite-difference curvature of the
//! connection form, at two steps to show second-order agreement.

use cauchy_space::geometry::curvature_fd_oracle;
use cauchy_space::{DerivativeScheme, Grid, ScalarField, SpacetimeModel};

fn main() -> cauchy_space::Result<()> {
    let g = Grid::with_scheme(128, DerivativeScheme::Spectral)?;
    let model = SpacetimeModel::de_sitter();
    let u = ScalarField::from_fn(&g, |x| 0.4 * x.cos());
    let v = ScalarField::from_fn(&g, |x| 0.3 * (2.0 * x).sin() + 0.1);
    let w = ScalarField::from_fn(&g, |x| 0.5 * x.sin());
    for t0 in [0.0, 0.35] {
        let f = ScalarField::constant(&g, t0);
        let mut prev = None;
        for step in [2e-3, 1e-3, 5e-4] {
            let o = curvature_fd_oracle(&model, &f, &u, &v, &w, step)?;
            let d = o.max_discrepancy();
            let ratio = prev.map(|p: f64| format!("{:.3}", p / d)).unwrap_or_else(|| "-".into());
            println!("t = {t0}, ε = {step:.0e}: discrepancy {d:.3e}, ratio {ratio}");
            prev = Some(d);
        }
    }
    Ok(())
}
