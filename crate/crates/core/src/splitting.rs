//! Discrete paths of graphs, the `L²(dvol_h)` distance lower bound, and the
//! time reparametrization that makes a splitting satisfy the lapse bound
//! `β √det(h⁻¹ g_t) ≥ 1`.
//!
//! The lower bound `d(f₀, f₁) ≥ ‖f₀ - f₁‖_{L²(dvol_h)}` only holds for
//! splittings that pass [`verify_lapse_bound`]; [`reparametrize_bounded_lapse`]
//! produces one from any splitting on a finite time window.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::metric_g;
use crate::grid::{l2_norm, MetricField, ScalarField};
use crate::spacetime::{SpacetimeModel, Tabulated, TimeDomain};
use crate::spline::{hermite, CubicSpline, EndCondition};

/// Tolerance of the lapse-bound certificate: pass iff the lattice minimum is at least `1 - LAPSE_TOLERANCE`.
pub const LAPSE_TOLERANCE: f64 = 1e-8;

/// Default time step of the `m(t)` and certificate lattices.
pub const DEFAULT_LATTICE_STEP: f64 = 1e-2;

/// Half-width of the lattice used when the time domain is unbounded.
pub const UNBOUNDED_LATTICE_HALF_WIDTH: f64 = 4.0;

/// Knots `c_0, …, c_K` of a path at parameters `s_k = k/K`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathDiscretization {
    knots: Vec<ScalarField>,
}

impl PathDiscretization {
    pub fn new(knots: Vec<ScalarField>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidArgument(format!("a path needs at least 2 knots, got {}", knots.len())));
        }
        if knots.iter().any(|k| k.grid() != knots[0].grid()) {
            return Err(Error::InvalidArgument("path knots live on different grids".into()));
        }
        Ok(PathDiscretization { knots })
    }

    /// Chart-linear path `c_k = (1 - k/K) f₀ + (k/K) f₁`.
    pub fn linear(f0: &ScalarField, f1: &ScalarField, segments: usize) -> Result<Self> {
        if segments == 0 {
            return Err(Error::InvalidArgument("a path needs at least one segment".into()));
        }
        let diff = f1 - f0;
        Self::new((0..=segments).map(|k| f0.axpy(k as f64 / segments as f64, &diff)).collect())
    }

    /// Number of segments `K`.
    pub fn segments(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn knots(&self) -> &[ScalarField] {
        &self.knots
    }

    pub fn knot(&self, k: usize) -> &ScalarField {
        &self.knots[k]
    }

    pub fn start(&self) -> &ScalarField {
        &self.knots[0]
    }

    pub fn end(&self) -> &ScalarField {
        self.knots.last().expect("at least two knots")
    }

    /// Midpoint slice `m_k = (c_k + c_{k+1})/2`.
    pub fn midpoint(&self, k: usize) -> ScalarField {
        &(&self.knots[k] + &self.knots[k + 1]) * 0.5
    }

    /// Chord velocity `Δ_k = K (c_{k+1} - c_k)`.
    pub fn chord(&self, k: usize) -> ScalarField {
        &(&self.knots[k + 1] - &self.knots[k]) * self.segments() as f64
    }

    /// Replaces the interior knots, keeping the endpoints.
    pub fn with_interior(&self, interior: Vec<ScalarField>) -> Result<Self> {
        if interior.len() + 2 != self.knots.len() {
            return Err(Error::InvalidArgument("interior knot count does not match the path".into()));
        }
        let mut knots = Vec::with_capacity(self.knots.len());
        knots.push(self.start().clone());
        knots.extend(interior);
        knots.push(self.end().clone());
        Self::new(knots)
    }

    /// Pointwise convex combination `(1 - λ) self + λ other`.
    pub fn lerp(&self, other: &PathDiscretization, lambda: f64) -> Result<Self> {
        if other.knots.len() != self.knots.len() {
            return Err(Error::InvalidArgument("paths have different knot counts".into()));
        }
        Self::new(
            self.knots
                .iter()
                .zip(&other.knots)
                .map(|(a, b)| a.axpy(lambda, &(b - a)))
                .collect(),
        )
    }

    /// `(∫₀¹ ‖c(s) - c'(s)‖²_{L²(dx)} ds)^{1/2}` with the trapezoidal rule in `s`.
    pub fn l2_distance(&self, other: &PathDiscretization) -> f64 {
        let flat = MetricField::flat(self.start().grid());
        let k = self.segments();
        let mut sum = 0.0;
        for (i, (a, b)) in self.knots.iter().zip(&other.knots).enumerate() {
            let w = if i == 0 || i == k { 0.5 } else { 1.0 };
            sum += w * l2_norm(&(a - b), &flat).powi(2);
        }
        (sum / k as f64).sqrt()
    }

    /// Largest `max_x c_k - min_x c_k` over the knots.
    pub fn max_spatial_variation(&self) -> f64 {
        self.knots.iter().map(ScalarField::variation).fold(0.0, f64::max)
    }
}

/// Discrete length `Σ_k √G_{m_k}(Δ_k, Δ_k) / K`.
pub fn path_length(model: &SpacetimeModel, path: &PathDiscretization) -> Result<f64> {
    let k = path.segments();
    let mut total = 0.0;
    for i in 0..k {
        let chord = path.chord(i);
        total += metric_g(model, &path.midpoint(i), &chord, &chord)?.max(0.0).sqrt();
    }
    Ok(total / k as f64)
}

/// `‖f₀ - f₁‖_{L²(dvol_h)}`.
pub fn distance_lower_bound(f0: &ScalarField, f1: &ScalarField, h: &MetricField) -> f64 {
    l2_norm(&(f0 - f1), h)
}

/// Outcome of checking `β √(a_t / a_h) ≥ 1` on a sample lattice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LapseBoundReport {
    /// Minimum of `β √(a_t/a_h)` over the lattice.
    pub min: f64,
    pub t_at_min: f64,
    pub x_at_min: f64,
    pub threshold: f64,
    pub passed: bool,
    pub t_samples: usize,
    pub t_range: (f64, f64),
}

/// Default certificate lattice: the time domain when finite, otherwise
/// `[-4, 4]`, always containing `t = 0` when the domain does.
pub fn default_time_lattice(domain: TimeDomain) -> Vec<f64> {
    let (lo, hi) = if domain.is_finite() {
        (domain.min, domain.max)
    } else {
        (
            domain.min.max(-UNBOUNDED_LATTICE_HALF_WIDTH),
            domain.max.min(UNBOUNDED_LATTICE_HALF_WIDTH),
        )
    };
    uniform_lattice(lo, hi, DEFAULT_LATTICE_STEP)
}

fn uniform_lattice(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let intervals = ((hi - lo) / step).ceil().max(1.0) as usize;
    (0..=intervals).map(|i| lo + (hi - lo) * i as f64 / intervals as f64).collect()
}

/// `min_x β√(a/h)` at one time.
fn lapse_volume_min(model: &SpacetimeModel, h: &MetricField, t: f64) -> (f64, f64) {
    let grid = h.grid();
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..grid.n() {
        let x = grid.x(i);
        let value = model.lapse(x, t) * (model.metric(x, t) / h.coeff()[i]).sqrt();
        if value < best.0 {
            best = (value, x);
        }
    }
    best
}

pub fn verify_lapse_bound(model: &SpacetimeModel, h: &MetricField) -> LapseBoundReport {
    verify_lapse_bound_on(model, h, &default_time_lattice(model.t_domain()))
}

pub fn verify_lapse_bound_on(model: &SpacetimeModel, h: &MetricField, times: &[f64]) -> LapseBoundReport {
    let mut min = f64::INFINITY;
    let (mut t_at_min, mut x_at_min) = (f64::NAN, f64::NAN);
    for &t in times {
        let (value, x) = lapse_volume_min(model, h, t);
        if value < min {
            min = value;
            t_at_min = t;
            x_at_min = x;
        }
    }
    let threshold = 1.0 - LAPSE_TOLERANCE;
    LapseBoundReport {
        min,
        t_at_min,
        x_at_min,
        threshold,
        passed: min >= threshold,
        t_samples: times.len(),
        t_range: (
            times.first().copied().unwrap_or(f64::NAN),
            times.last().copied().unwrap_or(f64::NAN),
        ),
    }
}

/// Monotone time change `τ ↦ f(τ)` solving `f' = F(f)`, `f(0) = 0`.
///
/// Sampled by RK4 and interpolated by cubic Hermite segments using the exact
/// slopes `F(f_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeMap {
    tau: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    envelope: CubicSpline,
}

impl TimeMap {
    pub fn domain(&self) -> TimeDomain {
        TimeDomain {
            min: self.tau[0],
            max: *self.tau.last().unwrap(),
        }
    }

    pub fn samples(&self) -> (&[f64], &[f64]) {
        (&self.tau, &self.values)
    }

    /// `f'(τ_i)` at the samples.
    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// The smooth right-hand side `F`.
    pub fn envelope(&self) -> &CubicSpline {
        &self.envelope
    }

    pub fn eval(&self, tau: f64) -> f64 {
        let n = self.tau.len();
        if tau <= self.tau[0] {
            return self.values[0] + self.slopes[0] * (tau - self.tau[0]);
        }
        if tau >= self.tau[n - 1] {
            return self.values[n - 1] + self.slopes[n - 1] * (tau - self.tau[n - 1]);
        }
        let i = match self.tau.binary_search_by(|t| t.partial_cmp(&tau).unwrap()) {
            Ok(i) => return self.values[i],
            Err(i) => i - 1,
        };
        hermite(
            self.tau[i],
            self.tau[i + 1],
            self.values[i],
            self.values[i + 1],
            self.slopes[i],
            self.slopes[i + 1],
            tau,
        )
    }

    /// `f'(τ) = F(f(τ))`.
    pub fn speed(&self, tau: f64) -> f64 {
        self.envelope.eval(self.eval(tau))
    }

    /// `f''(τ) = F'(f) F(f)`.
    pub fn acceleration(&self, tau: f64) -> f64 {
        let f = self.eval(tau);
        self.envelope.derivative(f) * self.envelope.eval(f)
    }
}

/// Knobs of [`reparametrize_bounded_lapse`].
#[derive(Clone, Debug, PartialEq)]
pub struct ReparametrizeOptions {
    /// Step of the `m(t)` lattice.
    pub lattice_step: f64,
    /// RK4 step of `f' = F(f)`.
    pub ode_step: f64,
    /// Safety margin added to the envelope knots.
    pub pad: f64,
    /// τ-interval the reparametrized splitting must cover, if any.
    pub tau_range: Option<(f64, f64)>,
}

impl Default for ReparametrizeOptions {
    fn default() -> Self {
        ReparametrizeOptions {
            lattice_step: DEFAULT_LATTICE_STEP,
            ode_step: 1e-3,
            pad: 1e-6,
            tau_range: None,
        }
    }
}

/// A splitting with lapse `β(x, f(τ)) f'(τ)²` and metric `g_{f(τ)}`.
#[derive(Clone, Debug)]
pub struct ReparametrizedSplitting {
    pub map: TimeMap,
    pub model: SpacetimeModel,
    /// `(t, m(t))` on the input lattice.
    pub m_samples: Vec<(f64, f64)>,
    /// Certificate of the output on its own τ lattice.
    pub certificate: LapseBoundReport,
    /// Smallest `f'` over the map samples.
    pub min_speed: f64,
}

/// Target `max(1, 1/m)` for the envelope.
fn envelope_target(m: f64) -> f64 {
    (1.0 / m).max(1.0)
}

fn m_of_t(model: &SpacetimeModel, h: &MetricField, t: f64) -> Result<f64> {
    let (value, _) = lapse_volume_min(model, h, t);
    if !(value > 0.0) {
        return Err(Error::NonPositiveM { t, value });
    }
    Ok(value.sqrt())
}

fn build_envelope(model: &SpacetimeModel, h: &MetricField, lattice: &[f64], pad: f64) -> Result<(CubicSpline, Vec<(f64, f64)>)> {
    let mut m_samples = Vec::with_capacity(lattice.len());
    for &t in lattice {
        m_samples.push((t, m_of_t(model, h, t)?));
    }
    let targets: Vec<f64> = m_samples.iter().map(|&(_, m)| envelope_target(m)).collect();
    let n = targets.len();
    let mut knots: Vec<f64> = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(n - 1);
            targets[lo..=hi].iter().copied().fold(f64::NEG_INFINITY, f64::max) + pad
        })
        .collect();

    // A posteriori check on a 4× finer lattice; bump the knots around any deficit.
    let fine: Vec<f64> = {
        let (lo, hi) = (lattice[0], lattice[n - 1]);
        let intervals = 4 * (n - 1).max(1);
        (0..=intervals).map(|i| lo + (hi - lo) * i as f64 / intervals as f64).collect()
    };
    let mut fine_targets = Vec::with_capacity(fine.len());
    for &t in &fine {
        fine_targets.push(envelope_target(m_of_t(model, h, t)?));
    }
    for _ in 0..64 {
        let spline = CubicSpline::new(lattice.to_vec(), knots.clone(), EndCondition::Clamped { start: 0.0, end: 0.0 })?;
        let mut ok = true;
        for (&t, &target) in fine.iter().zip(&fine_targets) {
            let deficit = target + 0.5 * pad - spline.eval(t);
            if deficit > 0.0 {
                ok = false;
                let j = lattice.partition_point(|&k| k <= t).saturating_sub(1);
                for idx in j.saturating_sub(1)..=(j + 2).min(n - 1) {
                    knots[idx] += deficit + pad;
                }
            }
        }
        if ok {
            return Ok((spline, m_samples));
        }
    }
    Err(Error::LapseCertificate {
        min: f64::NAN,
        threshold: 1.0 - LAPSE_TOLERANCE,
    })
}

fn rk4_step(f: f64, dt: f64, rhs: &impl Fn(f64) -> f64) -> f64 {
    let k1 = rhs(f);
    let k2 = rhs(f + 0.5 * dt * k1);
    let k3 = rhs(f + 0.5 * dt * k2);
    let k4 = rhs(f + dt * k3);
    f + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Integrates `f' = F(f)` from `f(0) = 0` in both directions until `f` leaves `(lo, hi)`.
fn integrate_time_map(envelope: CubicSpline, lo: f64, hi: f64, step: f64) -> TimeMap {
    let rhs = |f: f64| envelope.eval(f);
    let march = |dir: f64| {
        let mut out = Vec::new();
        let (mut tau, mut f) = (0.0, 0.0);
        loop {
            let next = rk4_step(f, dir * step, &rhs);
            if !(next > lo && next < hi) {
                break;
            }
            tau += dir * step;
            f = next;
            out.push((tau, f));
        }
        out
    };
    let backward = march(-1.0);
    let forward = march(1.0);
    let mut tau = Vec::with_capacity(backward.len() + forward.len() + 1);
    let mut values = Vec::with_capacity(tau.capacity());
    for &(t, f) in backward.iter().rev() {
        tau.push(t);
        values.push(f);
    }
    tau.push(0.0);
    values.push(0.0);
    for &(t, f) in &forward {
        tau.push(t);
        values.push(f);
    }
    let slopes = values.iter().map(|&f| envelope.eval(f)).collect();
    TimeMap {
        tau,
        values,
        slopes,
        envelope,
    }
}

/// Builds a reparametrized splitting satisfying the lapse bound against `h`.
///
/// `t_window` is a finite interval of the input time containing 0. The output is
/// verified on its own τ lattice; a failing certificate is an error.
pub fn reparametrize_bounded_lapse(
    model: &SpacetimeModel,
    h: &MetricField,
    t_window: (f64, f64),
    options: &ReparametrizeOptions,
) -> Result<ReparametrizedSplitting> {
    let (lo, hi) = t_window;
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::InvalidArgument(format!("reparametrization window ({lo}, {hi}) must be finite and non-empty")));
    }
    if !(lo < 0.0 && 0.0 < hi) {
        return Err(Error::WindowExhausted(format!("window ({lo}, {hi}) does not contain t = 0")));
    }
    let domain = model.t_domain();
    if lo < domain.min || hi > domain.max {
        return Err(Error::WindowExhausted(format!(
            "window ({lo}, {hi}) exceeds the model time domain ({}, {})",
            domain.min, domain.max
        )));
    }
    if !(options.lattice_step > 0.0 && options.ode_step > 0.0 && options.pad >= 0.0) {
        return Err(Error::InvalidArgument("lattice step, ODE step and pad must be positive".into()));
    }

    let lattice = uniform_lattice(lo, hi, options.lattice_step);
    let (envelope, m_samples) = build_envelope(model, h, &lattice, options.pad)?;
    let map = integrate_time_map(envelope, lo, hi, options.ode_step);
    let tau_domain = map.domain();
    if let Some((a, b)) = options.tau_range {
        if a < tau_domain.min || b > tau_domain.max {
            return Err(Error::WindowExhausted(format!(
                "requested τ range ({a}, {b}) exceeds the reachable range ({}, {})",
                tau_domain.min, tau_domain.max
            )));
        }
    }
    if !(tau_domain.max > tau_domain.min) {
        return Err(Error::WindowExhausted("window too small for a single ODE step".into()));
    }
    let min_speed = map.slopes.iter().copied().fold(f64::INFINITY, f64::min);
    let new_model = SpacetimeModel::reparametrized(model.clone(), map.clone());
    let certificate = verify_lapse_bound_on(
        &new_model,
        h,
        &uniform_lattice(tau_domain.min, tau_domain.max, options.lattice_step),
    );
    if !certificate.passed {
        return Err(Error::LapseCertificate {
            min: certificate.min,
            threshold: certificate.threshold,
        });
    }
    Ok(ReparametrizedSplitting {
        map,
        model: new_model,
        m_samples,
        certificate,
        min_speed,
    })
}

impl ReparametrizedSplitting {
    /// Samples the new splitting on an `(x, τ)` lattice as a tabulated model.
    pub fn to_tabulated(&self, x_points: usize, t_points: usize) -> Result<SpacetimeModel> {
        let domain = self.model.t_domain();
        let (t0, t1) = (domain.min, domain.max);
        let mut lapse = Vec::with_capacity(x_points * t_points);
        let mut metric = Vec::with_capacity(x_points * t_points);
        for k in 0..t_points {
            let t = t0 + (t1 - t0) * k as f64 / (t_points - 1) as f64;
            for j in 0..x_points {
                let x = 2.0 * std::f64::consts::PI * j as f64 / x_points as f64;
                lapse.push(self.model.lapse(x, t));
                metric.push(self.model.metric(x, t));
            }
        }
        let table = Tabulated::new(x_points, (t0, t1, t_points), lapse, metric)?;
        Ok(SpacetimeModel::tabulated(table, domain)?.with_margin_floor(self.model.margin_floor()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(64).unwrap()
    }

    #[test]
    fn static_constant_path_length() {
        let g = grid();
        let tau = 0.8;
        let model = SpacetimeModel::static_product();
        for k in [1, 3, 16] {
            let p = PathDiscretization::linear(&ScalarField::zeros(&g), &ScalarField::constant(&g, tau), k).unwrap();
            assert!((path_length(&model, &p).unwrap() - tau * (2.0 * PI).sqrt()).abs() < 1e-12);
        }
        let still = PathDiscretization::linear(&ScalarField::zeros(&g), &ScalarField::zeros(&g), 4).unwrap();
        assert_eq!(path_length(&model, &still).unwrap(), 0.0);
    }

    #[test]
    fn path_length_converges_at_second_order() {
        let g = grid();
        let model = SpacetimeModel::de_sitter();
        let path = |k: usize| {
            PathDiscretization::new(
                (0..=k)
                    .map(|i| {
                        let s = i as f64 / k as f64;
                        ScalarField::from_fn(&g, |x| s * s + 0.1 * (PI * s).sin() * x.cos())
                    })
                    .collect(),
            )
            .unwrap()
        };
        let l = |k| path_length(&model, &path(k)).unwrap();
        let ratio = (l(8) - l(16)) / (l(16) - l(32));
        assert!((ratio - 4.0).abs() < 0.3, "ratio {ratio}");
    }

    #[test]
    fn distance_bound_examples() {
        let g = grid();
        let flat = MetricField::flat(&g);
        let f = ScalarField::from_fn(&g, f64::sin);
        assert_eq!(distance_lower_bound(&f, &f, &flat), 0.0);
        let b = distance_lower_bound(&ScalarField::zeros(&g), &ScalarField::constant(&g, -0.5), &flat);
        assert!((b - 0.5 * (2.0 * PI).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn lapse_bound_examples() {
        let g = grid();
        let stat = verify_lapse_bound(&SpacetimeModel::static_product(), &MetricField::flat(&g));
        assert_eq!(stat.min, 1.0);
        assert!(stat.passed);
        let ds = SpacetimeModel::de_sitter();
        let r = verify_lapse_bound(&ds, &MetricField::flat(&g));
        assert!(r.passed);
        assert!((r.min - 1.0).abs() < 1e-15 && r.t_at_min.abs() < 1e-12);
        let r4 = verify_lapse_bound(&ds, &MetricField::constant(&g, 4.0).unwrap());
        assert!(!r4.passed);
        assert!((r4.min - 0.5).abs() < 1e-15);
    }

    #[test]
    fn default_lattice_contains_zero() {
        let lattice = default_time_lattice(TimeDomain::real_line());
        assert_eq!(lattice.len() % 2, 1);
        assert!(lattice.iter().any(|&t| t == 0.0));
    }

    #[test]
    fn static_reparametrization_is_nearly_identity() {
        let g = grid();
        let r = reparametrize_bounded_lapse(
            &SpacetimeModel::static_product(),
            &MetricField::flat(&g),
            (-1.0, 1.0),
            &ReparametrizeOptions::default(),
        )
        .unwrap();
        for tau in [-0.5, 0.0, 0.3, 0.9] {
            assert!((r.map.eval(tau) - tau).abs() < 2e-6);
        }
        assert!(r.certificate.passed);
        assert!(r.min_speed >= 1.0);
    }

    #[test]
    fn de_sitter_reparametrization_repairs_the_bound() {
        let g = grid();
        let h = MetricField::constant(&g, 4.0).unwrap();
        let model = SpacetimeModel::de_sitter();
        assert!(!verify_lapse_bound(&model, &h).passed);
        let r = reparametrize_bounded_lapse(&model, &h, (-2.0, 2.0), &ReparametrizeOptions::default()).unwrap();
        assert!(r.certificate.min >= 1.0 - LAPSE_TOLERANCE, "{:?}", r.certificate);
        assert!(r.min_speed >= 1.0);
        let (tau, values) = r.map.samples();
        assert!(values.windows(2).all(|w| w[1] > w[0]));
        assert!(tau.contains(&0.0));
    }

    #[test]
    fn window_must_contain_zero() {
        let g = grid();
        let err = reparametrize_bounded_lapse(
            &SpacetimeModel::de_sitter(),
            &MetricField::flat(&g),
            (0.5, 1.0),
            &ReparametrizeOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::WindowExhausted(_)));
        let opts = ReparametrizeOptions {
            tau_range: Some((-5.0, 5.0)),
            ..Default::default()
        };
        let err = reparametrize_bounded_lapse(&SpacetimeModel::de_sitter(), &MetricField::flat(&g), (-1.0, 1.0), &opts).unwrap_err();
        assert!(matches!(err, Error::WindowExhausted(_)));
    }
}
