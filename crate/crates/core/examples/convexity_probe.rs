//! Energy along straight lines between two paths with shared endpoints; a
//! negative second difference would flag non-convexity at grid scale.

use cauchy_space::geodesic::{convexity_probe, perturbed_seed};
use cauchy_space::{Grid, ScalarField, SpacetimeModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cauchy_space::Result<()> {
    let g = Grid::new(128)?;
    let (f0, f1) = (ScalarField::zeros(&g), ScalarField::constant(&g, 0.5));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for model in [SpacetimeModel::static_product(), SpacetimeModel::de_sitter()] {
        let a = perturbed_seed(&f0, &f1, 16, 0.2, &mut rng)?;
        let b = perturbed_seed(&f0, &f1, 16, 0.2, &mut rng)?;
        let report = convexity_probe(&model, &a, &b, 21)?;
        println!(
            "{}: energy from {:.6} to {:.6}, min second difference {:.3e}",
            model.name(),
            report.energies[0],
            report.energies[report.energies.len() - 1],
            report.min_second_difference
        );
    }
    Ok(())
}
