//! Random inputs for property checks: band-limited tangent vectors and
//! slices with a guaranteed spacelike margin. Deterministic given the RNG.

use rand::Rng;

use crate::grid::{Grid, ScalarField};
use crate::spacetime::{spacelike_margin, SpacetimeModel};

/// `Σ_{k ≤ max_harmonic} a_k cos kx + b_k sin kx` with coefficients uniform in `[-1, 1]`.
pub fn band_limited(grid: &Grid, max_harmonic: usize, rng: &mut impl Rng) -> ScalarField {
    let coeffs: Vec<(f64, f64)> = (0..=max_harmonic).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    ScalarField::from_fn(grid, |x| {
        coeffs
            .iter()
            .enumerate()
            .map(|(k, (a, b))| a * (k as f64 * x).cos() + b * (k as f64 * x).sin())
            .sum()
    })
}

/// Random time inside the model domain, away from its ends.
pub fn random_time(model: &SpacetimeModel, rng: &mut impl Rng) -> f64 {
    let d = model.t_domain();
    if d.is_finite() {
        rng.gen_range(d.min + 0.3 * d.width()..d.max - 0.3 * d.width())
    } else {
        rng.gen_range(-1.0..1.0)
    }
}

/// Constant plus low harmonics of random amplitude, shrunk until `min E_f ≥ margin`.
pub fn random_slice(model: &SpacetimeModel, grid: &Grid, amplitude: f64, margin: f64, rng: &mut impl Rng) -> ScalarField {
    let t0 = random_time(model, rng);
    let shape = band_limited(grid, 2, rng).map(|v| v / 3.0);
    let d = model.t_domain();
    let room = if d.is_finite() { 0.25 * d.width() } else { f64::INFINITY };
    let mut amp = amplitude.min(room / (shape.max_abs() + 1e-300));
    loop {
        let f = shape.map(|v| t0 + amp * v);
        match spacelike_margin(model, &f) {
            Ok(m) if m >= margin => return f,
            _ if amp < 1e-12 => return ScalarField::constant(grid, t0),
            _ => amp *= 0.5,
        }
    }
}
