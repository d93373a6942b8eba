//! The L²(dvol_h) lower bound on chart distance, its lapse-bound hypothesis,
//! and a comparison with lengths of random paths.

use cauchy_space::geodesic::perturbed_seed;
use cauchy_space::splitting::{distance_lower_bound, path_length, verify_lapse_bound};
use cauchy_space::{Grid, ScalarField, SpacetimeModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> cauchy_space::Result<()> {
    let g = Grid::new(64)?;
    let model = SpacetimeModel::de_sitter();
    let (f0, f1) = (ScalarField::zeros(&g), ScalarField::constant(&g, 0.5));
    for scale in [1.0, 4.0] {
        let h = model.slice_metric(&g, 0.0)?.scaled(scale)?;
        let report = verify_lapse_bound(&model, &h);
        println!(
            "h = {scale}·g_0: bound {:.6}, lapse check {} (min {:.4} at t = {:.2})",
            distance_lower_bound(&f0, &f1, &h),
            if report.passed { "passes" } else { "fails" },
            report.min,
            report.t_at_min
        );
    }
    let h = model.slice_metric(&g, 0.0)?;
    let bound = distance_lower_bound(&f0, &f1, &h);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for amp in [0.0, 0.1, 0.3] {
        let path = perturbed_seed(&f0, &f1, 16, amp, &mut rng)?;
        println!("perturbation {amp}: length {:.6} ≥ bound {bound:.6}", path_length(&model, &path)?);
    }
    Ok(())
}
