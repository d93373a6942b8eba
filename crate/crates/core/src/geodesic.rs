//! Geodesics of the chart metric: RK4 shooting on `f'' = -Γ_f(f', f')` and
//! two-point solves by minimising the discrete energy
//! `E = ½ Σ_k G_{m_k}(Δ_k, Δ_k) / K`.
//!
//! Nothing guarantees existence or uniqueness of solutions, so every result
//! carries a convergence flag and residual diagnostics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{metric_g_density, ChartPoint};
use crate::grid::ScalarField;
use crate::spacetime::{SliceBase, SpacetimeModel};
use crate::splitting::{path_length, PathDiscretization};

/// One accepted point of a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicState {
    pub s: f64,
    pub f: ScalarField,
    /// Chart velocity `f'(s)`.
    pub fdot: ScalarField,
    /// `G_f(f', f')`.
    pub speed: f64,
    pub margin: f64,
}

/// Output of [`geodesic_ivp`]; `termination` holds the error that stopped an incomplete run.
#[derive(Debug)]
pub struct Trajectory {
    pub states: Vec<GeodesicState>,
    pub ds: f64,
    pub termination: Option<Error>,
}

impl Trajectory {
    pub fn completed(&self) -> bool {
        self.termination.is_none()
    }

    pub fn last(&self) -> &GeodesicState {
        self.states.last().expect("trajectory holds the initial state")
    }

    /// `max_s |G(f', f')(s) - G(f', f')(0)| / G(f', f')(0)`; absolute when the initial speed is 0.
    pub fn speed_drift(&self) -> f64 {
        let s0 = self.states[0].speed;
        let scale = if s0 > 0.0 { s0 } else { 1.0 };
        self.states.iter().map(|st| (st.speed - s0).abs() / scale).fold(0.0, f64::max)
    }
}

fn state_at(model: &SpacetimeModel, s: f64, f: ScalarField, fdot: ScalarField) -> Result<GeodesicState> {
    let point = ChartPoint::new(model, &f)?;
    let speed = point.metric(&fdot, &fdot);
    let margin = point.slice().margin.min();
    Ok(GeodesicState { s, f, fdot, speed, margin })
}

fn acceleration(model: &SpacetimeModel, f: &ScalarField, v: &ScalarField) -> Result<ScalarField> {
    Ok(-&ChartPoint::new(model, f)?.gamma(v, v))
}

/// Classical RK4 on `(f, f')` from `(f0, u0)` over `s ∈ [0, s_end]`.
///
/// The step is adjusted down so an integer number of steps reaches `s_end`.
/// A step that leaves the chart domain or the time domain ends the run; the
/// trajectory up to the last valid state is returned with the error attached.
pub fn geodesic_ivp(model: &SpacetimeModel, f0: &ScalarField, u0: &ScalarField, s_end: f64, ds: f64) -> Result<Trajectory> {
    if !(ds > 0.0) || !(s_end >= 0.0) || !s_end.is_finite() {
        return Err(Error::InvalidArgument(format!("need ds > 0 and finite s_end >= 0 (got ds = {ds}, s_end = {s_end})")));
    }
    if !u0.is_finite() {
        return Err(Error::InvalidArgument("initial velocity is not finite".into()));
    }
    let steps = (s_end / ds - 1e-9).ceil().max(0.0) as usize;
    let h = if steps > 0 { s_end / steps as f64 } else { ds };
    let mut states = vec![state_at(model, 0.0, f0.clone(), u0.clone())?];
    let mut termination = None;
    for step in 1..=steps {
        let cur = states.last().unwrap();
        let next = (|| -> Result<GeodesicState> {
            let (f, v) = (&cur.f, &cur.fdot);
            let a1 = acceleration(model, f, v)?;
            let (f2, v2) = (f.axpy(0.5 * h, v), v.axpy(0.5 * h, &a1));
            let a2 = acceleration(model, &f2, &v2)?;
            let (f3, v3) = (f.axpy(0.5 * h, &v2), v.axpy(0.5 * h, &a2));
            let a3 = acceleration(model, &f3, &v3)?;
            let (f4, v4) = (f.axpy(h, &v3), v.axpy(h, &a3));
            let a4 = acceleration(model, &f4, &v4)?;
            let df = &(&(v + &v4) + &(&(&v2 + &v3) * 2.0)) * (h / 6.0);
            let dv = &(&(&a1 + &a4) + &(&(&a2 + &a3) * 2.0)) * (h / 6.0);
            state_at(model, step as f64 * h, f + &df, v + &dv)
        })();
        match next {
            Ok(state) => states.push(state),
            Err(e) => {
                termination = Some(e);
                break;
            }
        }
    }
    Ok(Trajectory { states, ds: h, termination })
}

/// Discrete energy and its gradient with respect to the interior knots.
#[derive(Clone, Debug)]
pub struct EnergyGradient {
    pub energy: f64,
    /// `grad[j-1]` is the `dx`-density of `∂E/∂c_j` for interior knot `j`.
    pub grad: Vec<ScalarField>,
    /// `G`-density at each segment midpoint.
    pub density: Vec<ScalarField>,
}

impl EnergyGradient {
    /// `(Σ_j Σ_i grad_{j,i}² Δx)^{1/2}`.
    pub fn norm(&self) -> f64 {
        let mut sum = 0.0;
        for g in &self.grad {
            sum += g.values().iter().map(|v| v * v).sum::<f64>() * g.grid().spacing();
        }
        sum.sqrt()
    }

    /// Solves `K (ρ_{j-1} + ρ_j) d_j - K ρ_{j-1} d_{j-1} - K ρ_j d_{j+1} = grad_j` pointwise in `x`,
    /// the velocity block of the Hessian, with `d = 0` at the end knots.
    pub fn preconditioned(&self) -> Vec<ScalarField> {
        let k = self.density.len();
        let m = k - 1;
        let kf = k as f64;
        let n = self.density[0].len();
        let mut out = vec![vec![0.0; n]; m];
        let (mut c, mut r) = (vec![0.0; m], vec![0.0; m]);
        for i in 0..n {
            let rho = |seg: usize| self.density[seg].values()[i] * kf;
            for j in 0..m {
                let diag = rho(j) + rho(j + 1);
                let lower = if j > 0 { -rho(j) } else { 0.0 };
                let denom = diag - lower * if j > 0 { c[j - 1] } else { 0.0 };
                c[j] = -rho(j + 1) / denom;
                let prev = if j > 0 { r[j - 1] } else { 0.0 };
                r[j] = (self.grad[j].values()[i] - lower * prev) / denom;
            }
            for j in (0..m).rev() {
                let next = if j + 1 < m { out[j + 1][i] } else { 0.0 };
                out[j][i] = r[j] - c[j] * next;
            }
        }
        let grid = self.grad[0].grid();
        out.into_iter().map(|v| ScalarField::from_vec(grid, v)).collect()
    }
}

/// `E = ½ Σ_k G_{m_k}(Δ_k, Δ_k) / K`.
pub fn path_energy(model: &SpacetimeModel, path: &PathDiscretization) -> Result<f64> {
    let k = path.segments();
    let mut total = 0.0;
    for i in 0..k {
        let chord = path.chord(i);
        let density = metric_g_density(model, &path.midpoint(i))?;
        let mut g = 0.0;
        for (d, c) in density.values().iter().zip(chord.values()) {
            g += d * c * c;
        }
        total += g * chord.grid().spacing();
    }
    Ok(0.5 * total / k as f64)
}

/// Energy and exact gradient: velocity terms through `G`, base-point terms through `D_f G`
/// with the half weight of each midpoint slice.
pub fn energy_and_grad(model: &SpacetimeModel, path: &PathDiscretization) -> Result<EnergyGradient> {
    let k = path.segments();
    let mut energy = 0.0;
    let mut velocity = Vec::with_capacity(k);
    let mut base = Vec::with_capacity(k);
    let mut density = Vec::with_capacity(k);
    for i in 0..k {
        let point = ChartPoint::new(model, &path.midpoint(i))?;
        let chord = path.chord(i);
        energy += point.metric(&chord, &chord);
        velocity.push(point.metric_density(&chord));
        density.push(point.metric_density(&ScalarField::constant(chord.grid(), 1.0)));
        base.push(point.metric_derivative_density(&chord, &chord));
    }
    let quarter = 0.25 / k as f64;
    let grad = (1..k)
        .map(|j| {
            let v = &velocity[j - 1] - &velocity[j];
            v.axpy(quarter, &(&base[j - 1] + &base[j]))
        })
        .collect();
    Ok(EnergyGradient {
        energy: 0.5 * energy / k as f64,
        grad,
        density,
    })
}

/// Knobs of [`geodesic_bvp`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BvpOptions {
    /// Stop when the gradient norm is at or below this value.
    pub tol: f64,
    pub max_iter: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// Step shrink factor of the backtracking search.
    pub shrink: f64,
    pub initial_step: f64,
}

impl Default for BvpOptions {
    fn default() -> Self {
        BvpOptions {
            tol: 1e-9,
            max_iter: 20_000,
            armijo: 1e-4,
            shrink: 0.5,
            initial_step: 1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BvpResult {
    pub path: PathDiscretization,
    pub energy: f64,
    pub length: f64,
    pub grad_norm_final: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn check_seed(model: &SpacetimeModel, path: &PathDiscretization) -> Result<()> {
    for (knot, c) in path.knots().iter().enumerate() {
        let checked = SliceBase::sample(model, c).and_then(|b| b.require_spacelike(model.margin_floor()));
        if let Err(e) = checked {
            return Err(Error::SeedNotSpacelike { knot, source: Box::new(e) });
        }
    }
    Ok(())
}

/// Two-point solve seeded by the chart-linear path between `f0` and `f1`.
pub fn geodesic_bvp(
    model: &SpacetimeModel,
    f0: &ScalarField,
    f1: &ScalarField,
    segments: usize,
    options: &BvpOptions,
) -> Result<BvpResult> {
    let seed = PathDiscretization::linear(f0, f1, segments)?;
    geodesic_bvp_from(model, seed, options)
}

/// Preconditioned gradient descent with Armijo backtracking from a caller-supplied seed.
///
/// The search direction applies the inverse of the velocity block of the
/// Hessian (see [`EnergyGradient::preconditioned`]), so the iteration count
/// does not grow with `K`. Trial steps whose midpoints leave the chart domain
/// count as failed decreases and are shrunk. Once the predicted decrease is
/// below the roundoff of the energy itself, a step is accepted if it lowers
/// the gradient norm instead.
pub fn geodesic_bvp_from(model: &SpacetimeModel, seed: PathDiscretization, options: &BvpOptions) -> Result<BvpResult> {
    check_seed(model, &seed)?;
    let mut path = seed;
    let mut eg = energy_and_grad(model, &path)?;
    let mut step = options.initial_step;
    let mut iterations = 0;
    let mut grad_norm = eg.norm();
    while grad_norm > options.tol && iterations < options.max_iter {
        let direction = if path.segments() > 1 { eg.preconditioned() } else { Vec::new() };
        let slope: f64 = eg
            .grad
            .iter()
            .zip(&direction)
            .map(|(g, d)| g.values().iter().zip(d.values()).map(|(a, b)| a * b).sum::<f64>() * g.grid().spacing())
            .sum();
        let roundoff = 64.0 * f64::EPSILON * eg.energy.abs().max(f64::MIN_POSITIVE);
        let mut trial_step = (step * 2.0).min(options.initial_step);
        let mut accepted = None;
        for _ in 0..60 {
            let interior = (1..path.segments())
                .map(|j| path.knot(j).axpy(-trial_step, &direction[j - 1]))
                .collect();
            let candidate = path.with_interior(interior)?;
            if let Ok(e) = energy_and_grad(model, &candidate) {
                let predicted = trial_step * slope;
                let sufficient = e.energy <= eg.energy - options.armijo * predicted;
                let in_noise = predicted <= roundoff && e.energy <= eg.energy + roundoff && e.norm() < grad_norm;
                if sufficient || in_noise {
                    accepted = Some((candidate, e));
                    break;
                }
            }
            trial_step *= options.shrink;
        }
        let Some((candidate, e)) = accepted else { break };
        path = candidate;
        eg = e;
        step = trial_step;
        grad_norm = eg.norm();
        iterations += 1;
    }
    let length = path_length(model, &path)?;
    Ok(BvpResult {
        energy: eg.energy,
        length,
        grad_norm_final: grad_norm,
        iterations,
        converged: grad_norm <= options.tol,
        path,
    })
}

/// Largest `L²(dx)` norm over interior knots of `K²(c_{j+1} - 2c_j + c_{j-1}) + Γ_{c_j}(v_j, v_j)`
/// with the centred velocity `v_j = K(c_{j+1} - c_{j-1})/2`.
pub fn euler_lagrange_residual(model: &SpacetimeModel, path: &PathDiscretization) -> Result<f64> {
    let k = path.segments();
    let kf = k as f64;
    let mut worst: f64 = 0.0;
    for j in 1..k {
        let (prev, cur, next) = (path.knot(j - 1), path.knot(j), path.knot(j + 1));
        let accel = &(&(next - cur) - &(cur - prev)) * (kf * kf);
        let vel = &(next - prev) * (0.5 * kf);
        let r = &accel + &ChartPoint::new(model, cur)?.gamma(&vel, &vel);
        let norm = (r.values().iter().map(|v| v * v).sum::<f64>() * r.grid().spacing()).sqrt();
        worst = worst.max(norm);
    }
    Ok(worst)
}

/// Summary of a multi-start uniqueness probe.
#[derive(Clone, Debug)]
pub struct MultistartReport {
    pub results: Vec<BvpResult>,
    /// Largest pairwise [`PathDiscretization::l2_distance`] between converged paths.
    pub max_pairwise_distance: f64,
    pub max_spatial_variation: f64,
    pub all_converged: bool,
}

/// Default amplitude of the random seed perturbations.
pub const SEED_PERTURBATION: f64 = 0.05;

/// Chart-linear path plus `amplitude · sin(πs) · p(x)` with random low harmonics `p`.
pub fn perturbed_seed(
    f0: &ScalarField,
    f1: &ScalarField,
    segments: usize,
    amplitude: f64,
    rng: &mut impl Rng,
) -> Result<PathDiscretization> {
    let linear = PathDiscretization::linear(f0, f1, segments)?;
    let coeffs: Vec<(f64, f64)> = (0..3).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let second: f64 = rng.gen_range(-1.0..1.0);
    let bump = ScalarField::from_fn(f0.grid(), |x| {
        coeffs
            .iter()
            .enumerate()
            .map(|(m, (a, b))| a * (m as f64 * x).cos() + if m > 0 { b * (m as f64 * x).sin() } else { 0.0 })
            .sum::<f64>()
            / 3.0
    });
    let interior = (1..segments)
        .map(|j| {
            let s = j as f64 / segments as f64;
            let profile = (std::f64::consts::PI * s).sin() + 0.5 * second * (2.0 * std::f64::consts::PI * s).sin();
            linear.knot(j).axpy(amplitude * profile, &bump)
        })
        .collect();
    linear.with_interior(interior)
}

/// Runs `seeds` solves from independently perturbed seeds (seed `i` uses
/// `ChaCha8Rng::seed_from_u64(base_seed + i)`) and compares the results.
pub fn multistart(
    model: &SpacetimeModel,
    f0: &ScalarField,
    f1: &ScalarField,
    segments: usize,
    seeds: usize,
    base_seed: u64,
    options: &BvpOptions,
) -> Result<MultistartReport> {
    let mut results = Vec::with_capacity(seeds);
    for i in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(i as u64));
        let seed = perturbed_seed(f0, f1, segments, SEED_PERTURBATION, &mut rng)?;
        results.push(geodesic_bvp_from(model, seed, options)?);
    }
    let mut max_pairwise_distance: f64 = 0.0;
    for a in 0..results.len() {
        for b in a + 1..results.len() {
            max_pairwise_distance = max_pairwise_distance.max(results[a].path.l2_distance(&results[b].path));
        }
    }
    Ok(MultistartReport {
        max_spatial_variation: results.iter().map(|r| r.path.max_spatial_variation()).fold(0.0, f64::max),
        all_converged: results.iter().all(|r| r.converged),
        max_pairwise_distance,
        results,
    })
}

/// Energy profile along `λ ↦ (1 - λ) a + λ b`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub lambdas: Vec<f64>,
    pub energies: Vec<f64>,
    /// `E(λ_{i-1}) - 2E(λ_i) + E(λ_{i+1})`.
    pub second_differences: Vec<f64>,
    pub min_second_difference: f64,
}

pub fn convexity_probe(
    model: &SpacetimeModel,
    path_a: &PathDiscretization,
    path_b: &PathDiscretization,
    samples: usize,
) -> Result<ConvexityReport> {
    if samples < 3 {
        return Err(Error::InvalidArgument(format!("convexity probe needs at least 3 samples, got {samples}")));
    }
    if path_a.segments() != path_b.segments() {
        return Err(Error::InvalidArgument("paths have different knot counts".into()));
    }
    let tol = 1e-12;
    let same_ends = (path_a.start() - path_b.start()).max_abs() <= tol && (path_a.end() - path_b.end()).max_abs() <= tol;
    if !same_ends {
        return Err(Error::InvalidArgument("paths must share their endpoints".into()));
    }
    let lambdas: Vec<f64> = (0..samples).map(|i| i as f64 / (samples - 1) as f64).collect();
    let mut energies = Vec::with_capacity(samples);
    for &l in &lambdas {
        energies.push(path_energy(model, &path_a.lerp(path_b, l)?)?);
    }
    let second_differences: Vec<f64> = energies.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect();
    let min_second_difference = second_differences.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ConvexityReport {
        lambdas,
        energies,
        second_differences,
        min_second_difference,
    })
}
