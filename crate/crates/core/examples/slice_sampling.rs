//! Sampling a spacetime along a graph: lapse, metric, spacelike margin and the
//! induced metric on a curved slice of de Sitter.

use cauchy_space::spacetime::{induced_metric, sample_model, spacelike_margin};
use cauchy_space::{Grid, ScalarField, SpacetimeModel};

fn main() -> cauchy_space::Result<()> {
    let g = Grid::new(128)?;
    let model = SpacetimeModel::de_sitter();
    for amp in [0.1, 0.5, 0.9, 1.1] {
        let f = ScalarField::from_fn(&g, |x| amp * x.sin());
        match sample_model(&model, &f) {
            Ok(slice) => {
                let s = induced_metric(&model, &f)?;
                println!(
                    "amp {amp}: min E = {:.4}, max F = {:.4}, induced metric in [{:.4}, {:.4}]",
                    spacelike_margin(&model, &f)?,
                    slice.lorentz.max(),
                    s.as_field().min(),
                    s.as_field().max()
                );
            }
            Err(e) => println!("amp {amp}: rejected ({e})"),
        }
    }
    Ok(())
}
