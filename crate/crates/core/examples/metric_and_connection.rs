//! The chart metric, its derivative and the connection form, with the Koszul
//! identity checked on a curved de Sitter slice.

use cauchy_space::geometry::{koszul_residual, ChartPoint};
use cauchy_space::{DerivativeScheme, Grid, ScalarField, SpacetimeModel};

fn main() -> cauchy_space::Result<()> {
    let g = Grid::with_scheme(128, DerivativeScheme::Spectral)?;
    let model = SpacetimeModel::de_sitter();
    let f = ScalarField::from_fn(&g, |x| 0.3 + 0.2 * x.cos());
    let u = ScalarField::from_fn(&g, |x| 1.0 + x.sin());
    let v = ScalarField::from_fn(&g, |x| (2.0 * x).cos());
    let w = ScalarField::from_fn(&g, |x| 0.5 - x.cos());

    let point = ChartPoint::new(&model, &f)?;
    println!("G(u, u)      = {:.12}", point.metric(&u, &u));
    println!("G(u, v)      = {:.12}", point.metric(&u, &v));
    println!("D_w G(u, v)  = {:.12}", point.metric_derivative(&u, &v, &w));
    println!("|Γ(u, v)|∞   = {:.6}", point.gamma(&u, &v).max_abs());

    let k = koszul_residual(&model, &f, &u, &v, &w, 1e-3)?;
    println!("Koszul: lhs {:.12}, rhs {:.12}, relative {:.2e}", k.lhs, k.rhs, k.relative);
    println!("finite-difference variant: ratio {:.3} between steps 1e-3 and 5e-4", k.fd_ratio);
    Ok(())
}
