//! Sectional curvature of a few planes, including the regression value -1/π
//! for span{cos, sin} at the zero section of de Sitter.

use std::f64::consts::PI;

use cauchy_space::geometry::sectional_curvature;
use cauchy_space::{Grid, ScalarField, SpacetimeModel};

fn main() -> cauchy_space::Result<()> {
    let g = Grid::new(256)?;
    let model = SpacetimeModel::de_sitter();
    let zero = ScalarField::zeros(&g);
    let cos = ScalarField::from_fn(&g, f64::cos);
    let sin = ScalarField::from_fn(&g, f64::sin);
    let k = sectional_curvature(&model, &zero, &cos, &sin)?;
    println!("K(cos, sin) at t = 0: {k:.12} (−1/π = {:.12})", -1.0 / PI);

    for t0 in [0.0, 0.5, 1.0] {
        let f = ScalarField::constant(&g, t0);
        let k1 = ScalarField::from_fn(&g, |x| 1.0 + 0.0 * x);
        let cos2 = ScalarField::from_fn(&g, |x| (2.0 * x).cos());
        println!(
            "t = {t0}: K(1, cos) = {:.6}, K(cos, cos 2x) = {:.6}",
            sectional_curvature(&model, &f, &k1, &cos)?,
            sectional_curvature(&model, &f, &cos, &cos2)?
        );
    }
    match sectional_curvature(&model, &zero, &cos, &(&cos * 2.0)) {
        Err(e) => println!("parallel vectors: {e}"),
        Ok(k) => println!("parallel vectors unexpectedly gave {k}"),
    }
    Ok(())
}
