//! Shooting geodesics: energy conservation and step-halving in de Sitter, and
//! a clean abort when a trajectory leaves the chart domain.

use cauchy_space::geodesic::geodesic_ivp;
use cauchy_space::{Grid, ScalarField, SpacetimeModel};

fn main() -> cauchy_space::Result<()> {
    let g = Grid::new(32)?;
    let model = SpacetimeModel::de_sitter();
    let (f0, u0) = (ScalarField::zeros(&g), ScalarField::constant(&g, 1.0));
    for ds in [0.2, 0.1, 0.05, 1e-3] {
        let t = geodesic_ivp(&model, &f0, &u0, 1.0, ds)?;
        println!("ds = {ds:<6}: t(1) = {:.10}, speed drift {:.3e}", t.last().f.values()[0], t.speed_drift());
    }

    let tilted = ScalarField::from_fn(&g, |x| 0.8 * x.cos());
    let t = geodesic_ivp(&model, &f0, &tilted, 5.0, 1e-2)?;
    match &t.termination {
        Some(e) => println!("tilted start stopped at s = {:.2}: {e}", t.last().s),
        None => println!("tilted start reached s = 5 with min margin {:.4}", t.last().margin),
    }
    Ok(())
}
