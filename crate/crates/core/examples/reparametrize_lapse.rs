//! Repairing a failed lapse bound by a time reparametrization and exporting
//! the result as a tabulated model.

use cauchy_space::config::ModelConfig;
use cauchy_space::splitting::{reparametrize_bounded_lapse, verify_lapse_bound, ReparametrizeOptions};
use cauchy_space::{Grid, SpacetimeModel};

fn main() -> cauchy_space::Result<()> {
    let g = Grid::new(32)?;
    let model = SpacetimeModel::de_sitter();
    let h = model.slice_metric(&g, 0.0)?.scaled(4.0)?;
    let before = verify_lapse_bound(&model, &h);
    println!("before: min {:.6}, passed {}", before.min, before.passed);

    let rep = reparametrize_bounded_lapse(&model, &h, (-2.0, 2.0), &ReparametrizeOptions::default())?;
    let tau = rep.model.t_domain();
    println!("after:  min {:.9}, passed {}", rep.certificate.min, rep.certificate.passed);
    println!("new time τ ∈ [{:.4}, {:.4}], min f' = {:.9}", tau.min, tau.max, rep.min_speed);
    for t in [-1.0, 0.0, 1.0] {
        println!("  f({t}) = {:.6}", rep.map.eval(t));
    }

    let table = rep.to_tabulated(32, 41)?;
    let text = ModelConfig::from_tabulated(&table, 32)?.to_json_pretty()?;
    println!("tabulated export: {} bytes of JSON", text.len());
    Ok(())
}
