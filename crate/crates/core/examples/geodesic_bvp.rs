//! Two-point geodesics by energy minimisation, with a multi-start probe and a
//! comparison against the one-dimensional reduced length.

use cauchy_space::geodesic::{euler_lagrange_residual, geodesic_bvp, multistart, BvpOptions};
use cauchy_space::{Grid, ScalarField, SpacetimeModel};

fn main() -> cauchy_space::Result<()> {
    let g = Grid::new(64)?;
    let model = SpacetimeModel::de_sitter();
    let (f0, f1) = (ScalarField::zeros(&g), ScalarField::constant(&g, 0.5));
    let options = BvpOptions::default();
    for k in [8, 16, 32] {
        let r = geodesic_bvp(&model, &f0, &f1, k, &options)?;
        println!(
            "K = {k:>2}: converged {} in {} iterations, length {:.8}, EL residual {:.2e}",
            r.converged,
            r.iterations,
            r.length,
            euler_lagrange_residual(&model, &r.path)?
        );
    }
    let report = multistart(&model, &f0, &f1, 16, 8, 0, &options)?;
    println!(
        "8 perturbed seeds: all converged {}, max pairwise distance {:.2e}, max spatial variation {:.2e}",
        report.all_converged, report.max_pairwise_distance, report.max_spatial_variation
    );

    let bump = ScalarField::from_fn(&g, |x| 0.5 + 0.1 * x.cos());
    let r = geodesic_bvp(&model, &f0, &bump, 16, &options)?;
    println!("to a curved slice: length {:.8}, spatial variation {:.4}", r.length, r.path.max_spatial_variation());
    Ok(())
}
