//! Orthogonal splittings `-β dt² + g_t` of a spatially compact spacetime over
//! the circle, and the per-slice quantities the chart formulas consume.
//!
//! A graph `f : Σ → ℝ` represents the hypersurface `{(x, f(x))}`. It lies in
//! the chart domain when `E_f = 1 - β_f ‖df‖²_{g_f}` is positive everywhere.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{gradient, Grid, MetricField, ScalarField};
use crate::spline::{catmull_rom_weights, CubicSpline};
use crate::splitting::TimeMap;

/// Default lower bound on `min E_f` accepted by the slice sampler.
pub const DEFAULT_MARGIN_FLOOR: f64 = 1e-8;

/// Relative step of the central-difference fallback for time derivatives.
pub const FALLBACK_RELATIVE_STEP: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Static,
    DeSitter,
    FlrwToy,
    Tabulated,
    Reparametrized,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Static => "static",
            ModelKind::DeSitter => "de_sitter",
            ModelKind::FlrwToy => "flrw_toy",
            ModelKind::Tabulated => "tabulated",
            ModelKind::Reparametrized => "reparametrized",
        }
    }
}

/// Open time interval `(min, max)`; either end may be infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeDomain {
    pub min: f64,
    pub max: f64,
}

impl TimeDomain {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if min.is_nan() || max.is_nan() || !(max > min) {
            return Err(Error::Config(format!("empty time domain ({min}, {max})")));
        }
        Ok(TimeDomain { min, max })
    }

    pub fn real_line() -> Self {
        TimeDomain {
            min: f64::NEG_INFINITY,
            max: f64::INFINITY,
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        t > self.min && t < self.max
    }

    pub fn is_finite(&self) -> bool {
        self.min.is_finite() && self.max.is_finite()
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }
}

/// Homogeneous toy cosmology: `β = b(t)`, `a = s(t)²`, both cubic splines.
#[derive(Clone, Debug, PartialEq)]
pub struct FlrwToy {
    scale: CubicSpline,
    lapse: CubicSpline,
}

impl FlrwToy {
    /// `scale` is `s(t)`, `lapse` is `b(t)`; both must stay positive on their knot range.
    pub fn new(scale: CubicSpline, lapse: CubicSpline) -> Result<Self> {
        for (name, spline) in [("scale", &scale), ("lapse", &lapse)] {
            let (lo, hi) = spline.range();
            let samples = 64 * spline.knots().len();
            for i in 0..=samples {
                let t = lo + (hi - lo) * i as f64 / samples as f64;
                if spline.eval(t) <= 0.0 {
                    return Err(Error::Config(format!("flrw_toy {name} spline is not positive at t = {t}")));
                }
            }
        }
        Ok(FlrwToy { scale, lapse })
    }

    pub fn scale(&self) -> &CubicSpline {
        &self.scale
    }

    pub fn lapse(&self) -> &CubicSpline {
        &self.lapse
    }

    /// Knot range shared by the two splines.
    pub fn range(&self) -> (f64, f64) {
        let (a0, a1) = self.scale.range();
        let (b0, b1) = self.lapse.range();
        (a0.max(b0), a1.min(b1))
    }
}

/// Lapse and metric sampled on an `(x, t)` lattice, interpolated bicubically
/// (Catmull–Rom, periodic in `x`).
///
/// Samples are row-major with one row per time level: index `k * x_points + j`
/// holds the value at `x_j = 2πj/x_points`, `t_k = t_min + k (t_max - t_min)/(t_points - 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tabulated {
    x_points: usize,
    t_min: f64,
    t_max: f64,
    t_points: usize,
    lapse: Vec<f64>,
    metric: Vec<f64>,
}

impl Tabulated {
    pub fn new(
        x_points: usize,
        (t_min, t_max, t_points): (f64, f64, usize),
        lapse: Vec<f64>,
        metric: Vec<f64>,
    ) -> Result<Self> {
        if x_points < 4 || t_points < 2 {
            return Err(Error::Config(format!(
                "tabulated lattice needs x_points >= 4 and t_points >= 2 (got {x_points}, {t_points})"
            )));
        }
        if !(t_max > t_min) || !t_min.is_finite() || !t_max.is_finite() {
            return Err(Error::Config(format!("bad tabulated time range [{t_min}, {t_max}]")));
        }
        let expected = x_points * t_points;
        for (name, table) in [("lapse", &lapse), ("metric", &metric)] {
            if table.len() != expected {
                return Err(Error::Config(format!(
                    "tabulated {name} has {} samples, lattice needs {expected}",
                    table.len()
                )));
            }
            if let Some(i) = table.iter().position(|v| !v.is_finite() || *v <= 0.0) {
                return Err(Error::Config(format!("tabulated {name} sample {i} is not positive")));
            }
        }
        Ok(Tabulated {
            x_points,
            t_min,
            t_max,
            t_points,
            lapse,
            metric,
        })
    }

    pub fn x_points(&self) -> usize {
        self.x_points
    }

    pub fn t_lattice(&self) -> (f64, f64, usize) {
        (self.t_min, self.t_max, self.t_points)
    }

    pub fn lapse_samples(&self) -> &[f64] {
        &self.lapse
    }

    pub fn metric_samples(&self) -> &[f64] {
        &self.metric
    }

    fn interpolate(&self, table: &[f64], x: f64, t: f64) -> f64 {
        let nx = self.x_points as isize;
        let fx = (x / (2.0 * PI)).rem_euclid(1.0) * self.x_points as f64;
        let jx = fx.floor() as isize;
        let sx = fx - jx as f64;
        let dt = (self.t_max - self.t_min) / (self.t_points - 1) as f64;
        let ft = (t - self.t_min) / dt;
        let kt = (ft.floor() as isize).clamp(0, self.t_points as isize - 2);
        let st = ft - kt as f64;
        let wx = catmull_rom_weights(sx);
        let wt = catmull_rom_weights(st);
        let mut value = 0.0;
        for (a, wta) in wt.iter().enumerate() {
            let k = (kt - 1 + a as isize).clamp(0, self.t_points as isize - 1) as usize;
            let row = &table[k * self.x_points..(k + 1) * self.x_points];
            let mut line = 0.0;
            for (b, wxb) in wx.iter().enumerate() {
                let j = (jx - 1 + b as isize).rem_euclid(nx) as usize;
                line += wxb * row[j];
            }
            value += wta * line;
        }
        value
    }
}

#[derive(Clone, Debug)]
enum Source {
    Static,
    DeSitter,
    Flrw(FlrwToy),
    Tabulated(Tabulated),
    Reparametrized(Box<SpacetimeModel>, TimeMap),
}

/// Splitting data `(β, ∂_tβ, g_t, h_t = ∂_t g_t)` of a spacetime `Σ × I`.
///
/// Immutable once built. Time arguments are in the model's own time
/// coordinate; [`SpacetimeModel::rebased`] produces the time-translated
/// splitting that puts a constant slice at `t = 0`.
#[derive(Clone, Debug)]
pub struct SpacetimeModel {
    source: Source,
    domain: TimeDomain,
    offset: f64,
    fallback: bool,
    forced_step: Option<f64>,
    margin_floor: f64,
}

impl SpacetimeModel {
    fn from_source(source: Source, domain: TimeDomain) -> Self {
        SpacetimeModel {
            source,
            domain,
            offset: 0.0,
            fallback: true,
            forced_step: None,
            margin_floor: DEFAULT_MARGIN_FLOOR,
        }
    }

    /// `β ≡ 1`, `a ≡ 1` on `ℝ`.
    pub fn static_product() -> Self {
        Self::from_source(Source::Static, TimeDomain::real_line())
    }

    /// Global de Sitter slicing of `dS²`: `β ≡ 1`, `a = cosh² t`.
    pub fn de_sitter() -> Self {
        Self::from_source(Source::DeSitter, TimeDomain::real_line())
    }

    pub fn flrw_toy(data: FlrwToy, domain: TimeDomain) -> Result<Self> {
        let (lo, hi) = data.range();
        if !domain.is_finite() {
            return Err(Error::Config("flrw_toy requires a finite time domain".into()));
        }
        if domain.min < lo || domain.max > hi {
            return Err(Error::Config(format!(
                "time domain ({}, {}) exceeds the spline knot range [{lo}, {hi}]",
                domain.min, domain.max
            )));
        }
        Ok(Self::from_source(Source::Flrw(data), domain))
    }

    pub fn tabulated(data: Tabulated, domain: TimeDomain) -> Result<Self> {
        if !domain.is_finite() {
            return Err(Error::Config("tabulated models require a finite time domain".into()));
        }
        if domain.min < data.t_min || domain.max > data.t_max {
            return Err(Error::Config(format!(
                "time domain ({}, {}) exceeds the lattice range [{}, {}]",
                domain.min, domain.max, data.t_min, data.t_max
            )));
        }
        Ok(Self::from_source(Source::Tabulated(data), domain))
    }

    /// Pull-back of `base` along `(x, τ) ↦ (x, f(τ))`.
    pub(crate) fn reparametrized(base: SpacetimeModel, map: TimeMap) -> Self {
        let domain = map.domain();
        let margin_floor = base.margin_floor;
        let fallback = base.fallback;
        let mut model = Self::from_source(Source::Reparametrized(Box::new(base), map), domain);
        model.margin_floor = margin_floor;
        model.fallback = fallback;
        model
    }

    pub fn kind(&self) -> ModelKind {
        match self.source {
            Source::Static => ModelKind::Static,
            Source::DeSitter => ModelKind::DeSitter,
            Source::Flrw(_) => ModelKind::FlrwToy,
            Source::Tabulated(_) => ModelKind::Tabulated,
            Source::Reparametrized(..) => ModelKind::Reparametrized,
        }
    }

    pub fn name(&self) -> &'static str {
        self.kind().name()
    }

    pub fn t_domain(&self) -> TimeDomain {
        self.domain
    }

    /// Accumulated time translation applied by [`Self::rebased`].
    pub fn time_offset(&self) -> f64 {
        self.offset
    }

    pub fn margin_floor(&self) -> f64 {
        self.margin_floor
    }

    /// Restricts an analytic model to a sub-interval of its time domain.
    pub fn with_domain(mut self, domain: TimeDomain) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_margin_floor(mut self, floor: f64) -> Self {
        self.margin_floor = floor;
        self
    }

    /// Enables or disables the central-difference substitute for missing time derivatives.
    pub fn with_derivative_fallback(mut self, enabled: bool) -> Self {
        self.fallback = enabled;
        self
    }

    /// Ignore analytic time derivatives and use central differences with `step`.
    pub fn with_numeric_derivatives(mut self, step: f64) -> Self {
        self.forced_step = Some(step);
        self
    }

    pub fn derivative_fallback_enabled(&self) -> bool {
        self.fallback
    }

    /// Time-translated splitting `(x, t) ↦ (x, t + t0)`; the slice `t = t0`
    /// becomes the zero section.
    pub fn rebased(&self, t0: f64) -> Self {
        let mut model = self.clone();
        model.offset += t0;
        model.domain = TimeDomain {
            min: self.domain.min - t0,
            max: self.domain.max - t0,
        };
        model
    }

    fn has_analytic_derivatives(&self) -> bool {
        match &self.source {
            Source::Static | Source::DeSitter | Source::Flrw(_) => true,
            Source::Tabulated(_) => false,
            Source::Reparametrized(base, _) => base.has_analytic_derivatives() && base.forced_step.is_none(),
        }
    }

    /// Reparametrized models differentiate through the chain rule; their base decides.
    fn differences_numerically(&self) -> bool {
        self.forced_step.is_some() || matches!(self.source, Source::Tabulated(_))
    }

    /// True when time derivatives come from central differences.
    pub fn uses_fallback_derivatives(&self) -> bool {
        self.forced_step.is_some() || !self.has_analytic_derivatives()
    }

    /// Step used by the central-difference fallback.
    pub fn fallback_step(&self) -> f64 {
        if let Some(step) = self.forced_step {
            return step;
        }
        if self.domain.is_finite() {
            FALLBACK_RELATIVE_STEP * self.domain.width()
        } else {
            FALLBACK_RELATIVE_STEP
        }
    }

    /// Lapse `β(x, t)`.
    pub fn lapse(&self, x: f64, t: f64) -> f64 {
        let s = t + self.offset;
        match &self.source {
            Source::Static | Source::DeSitter => 1.0,
            Source::Flrw(data) => data.lapse.eval(s),
            Source::Tabulated(data) => data.interpolate(&data.lapse, x, s),
            Source::Reparametrized(base, map) => {
                let speed = map.speed(s);
                base.lapse(x, map.eval(s)) * speed * speed
            }
        }
    }

    /// Coefficient `a(x, t)` of `g_t = a dx²`.
    pub fn metric(&self, x: f64, t: f64) -> f64 {
        let s = t + self.offset;
        match &self.source {
            Source::Static => 1.0,
            Source::DeSitter => s.cosh().powi(2),
            Source::Flrw(data) => data.scale.eval(s).powi(2),
            Source::Tabulated(data) => data.interpolate(&data.metric, x, s),
            Source::Reparametrized(base, map) => base.metric(x, map.eval(s)),
        }
    }

    fn central_difference(&self, x: f64, t: f64, eval: impl Fn(f64, f64) -> f64) -> Result<f64> {
        if !self.fallback && self.forced_step.is_none() {
            return Err(Error::MissingDerivative(self.name()));
        }
        let h = self.fallback_step();
        Ok((eval(x, t + h) - eval(x, t - h)) / (2.0 * h))
    }

    /// `∂β/∂t (x, t)`.
    pub fn lapse_dt(&self, x: f64, t: f64) -> Result<f64> {
        if self.differences_numerically() {
            return self.central_difference(x, t, |x, t| self.lapse(x, t));
        }
        let s = t + self.offset;
        match &self.source {
            Source::Static | Source::DeSitter => Ok(0.0),
            Source::Flrw(data) => Ok(data.lapse.derivative(s)),
            Source::Tabulated(_) => unreachable!("tabulated models always difference numerically"),
            Source::Reparametrized(base, map) => {
                let f = map.eval(s);
                let speed = map.speed(s);
                let accel = map.acceleration(s);
                Ok(base.lapse_dt(x, f)? * speed.powi(3) + 2.0 * base.lapse(x, f) * speed * accel)
            }
        }
    }

    /// Coefficient of `h_t = ∂g_t/∂t` at `(x, t)`.
    pub fn metric_dt(&self, x: f64, t: f64) -> Result<f64> {
        if self.differences_numerically() {
            return self.central_difference(x, t, |x, t| self.metric(x, t));
        }
        let s = t + self.offset;
        match &self.source {
            Source::Static => Ok(0.0),
            Source::DeSitter => Ok((2.0 * s).sinh()),
            Source::Flrw(data) => Ok(2.0 * data.scale.eval(s) * data.scale.derivative(s)),
            Source::Tabulated(_) => unreachable!("tabulated models always difference numerically"),
            Source::Reparametrized(base, map) => {
                let f = map.eval(s);
                Ok(base.metric_dt(x, f)? * map.speed(s))
            }
        }
    }

    /// Borrowed access to the tabulated data, if this is a tabulated model.
    pub fn as_tabulated(&self) -> Option<&Tabulated> {
        match &self.source {
            Source::Tabulated(data) => Some(data),
            _ => None,
        }
    }

    pub fn as_flrw(&self) -> Option<&FlrwToy> {
        match &self.source {
            Source::Flrw(data) => Some(data),
            _ => None,
        }
    }

    /// Metric `g_t` of the slice `t` (constant in time) as a field on `grid`.
    pub fn slice_metric(&self, grid: &Grid, t: f64) -> Result<MetricField> {
        MetricField::new(grid, (0..grid.n()).map(|i| self.metric(grid.x(i), t)).collect())
    }

    /// Rejects graphs with values outside the open time domain.
    pub fn check_domain(&self, f: &ScalarField) -> Result<()> {
        for (index, &t) in f.values().iter().enumerate() {
            if !self.domain.contains(t) {
                return Err(Error::DomainViolation {
                    t,
                    index,
                    min: self.domain.min,
                    max: self.domain.max,
                });
            }
        }
        Ok(())
    }
}

/// A graph function in the chart domain, validated against a model.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphFunction {
    field: ScalarField,
    margin: f64,
}

impl GraphFunction {
    pub fn new(model: &SpacetimeModel, field: ScalarField) -> Result<Self> {
        let margin = spacelike_margin(model, &field)?;
        let floor = model.margin_floor();
        if margin <= floor {
            let base = SliceBase::sample(model, &field)?;
            return Err(base.violation(floor));
        }
        Ok(GraphFunction { field, margin })
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn into_field(self) -> ScalarField {
        self.field
    }

    /// `min_x E_f(x)` at construction.
    pub fn margin(&self) -> f64 {
        self.margin
    }
}

/// Everything the chart formulas need at a fixed graph `f`, sampled on the grid.
#[derive(Clone, Debug)]
pub struct SliceData {
    pub f: ScalarField,
    /// `β_f(x) = β(x, f(x))`.
    pub lapse: ScalarField,
    /// `(∂β/∂t)_f`.
    pub lapse_dt: ScalarField,
    /// `g_f`, the metric `(g_{f(x)})_x` on Σ.
    pub metric: MetricField,
    /// Coefficient of `h_f = (∂_t g)_f`.
    pub metric_dt: ScalarField,
    /// Coefficient of `∇_f f`.
    pub grad: ScalarField,
    /// `ζ_f = g_f(∇_f f, ∇_f f)`.
    pub grad_sq: ScalarField,
    /// `E_f = 1 - β_f ζ_f`.
    pub margin: ScalarField,
    /// `F_f = E_f^{-1/2}`.
    pub lorentz: ScalarField,
    /// True when the time derivatives were obtained by central differences.
    pub fallback_derivatives: bool,
}

pub(crate) struct SliceBase {
    pub lapse: ScalarField,
    pub metric: MetricField,
    pub grad: ScalarField,
    pub grad_sq: ScalarField,
    pub margin: ScalarField,
}

impl SliceBase {
    /// Samples `β_f`, `g_f`, `∇f` and `E_f` without judging the margin.
    pub(crate) fn sample(model: &SpacetimeModel, f: &ScalarField) -> Result<Self> {
        model.check_domain(f)?;
        let grid = f.grid();
        let n = grid.n();
        let mut lapse = Vec::with_capacity(n);
        let mut metric = Vec::with_capacity(n);
        for (i, &t) in f.values().iter().enumerate() {
            let x = grid.x(i);
            lapse.push(model.lapse(x, t));
            metric.push(model.metric(x, t));
        }
        let lapse = ScalarField::new(grid, lapse)?;
        let metric = MetricField::new(grid, metric)?;
        let grad = gradient(f, &metric);
        let grad_sq = ScalarField::from_vec(
            grid,
            grad.values().iter().zip(metric.coeff()).map(|(g, a)| a * g * g).collect(),
        );
        let margin = lapse.zip_map(&grad_sq, |b, z| 1.0 - b * z);
        Ok(SliceBase {
            lapse,
            metric,
            grad,
            grad_sq,
            margin,
        })
    }

    pub(crate) fn violation(&self, floor: f64) -> Error {
        let (index, margin) = self
            .margin
            .values()
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, e)| if e < acc.1 { (i, e) } else { acc });
        Error::SpacelikeViolation { margin, index, floor }
    }

    /// Fails with `SpacelikeViolation` when `min E_f ≤ floor`.
    pub(crate) fn require_spacelike(&self, floor: f64) -> Result<()> {
        if self.margin.min() <= floor {
            Err(self.violation(floor))
        } else {
            Ok(())
        }
    }

    pub(crate) fn lorentz(&self) -> ScalarField {
        self.margin.map(|e| 1.0 / e.sqrt())
    }
}

/// Evaluates all slice quantities at `f`.
///
/// Fails with `DomainViolation` if `f` leaves the time domain and with
/// `SpacelikeViolation` if `min E_f` is at or below the model's margin floor.
pub fn sample_model(model: &SpacetimeModel, f: &ScalarField) -> Result<SliceData> {
    let base = SliceBase::sample(model, f)?;
    base.require_spacelike(model.margin_floor())?;
    let grid = f.grid();
    let mut lapse_dt = Vec::with_capacity(grid.n());
    let mut metric_dt = Vec::with_capacity(grid.n());
    for (i, &t) in f.values().iter().enumerate() {
        let x = grid.x(i);
        lapse_dt.push(model.lapse_dt(x, t)?);
        metric_dt.push(model.metric_dt(x, t)?);
    }
    let lorentz = base.lorentz();
    Ok(SliceData {
        f: f.clone(),
        lapse: base.lapse,
        lapse_dt: ScalarField::new(grid, lapse_dt)?,
        metric: base.metric,
        metric_dt: ScalarField::new(grid, metric_dt)?,
        grad: base.grad,
        grad_sq: base.grad_sq,
        margin: base.margin,
        lorentz,
        fallback_derivatives: model.uses_fallback_derivatives(),
    })
}

/// `min_x E_f(x)`; positive iff the graph is spacelike at grid resolution.
/// Negative margins are reported, not rejected.
pub fn spacelike_margin(model: &SpacetimeModel, f: &ScalarField) -> Result<f64> {
    Ok(SliceBase::sample(model, f)?.margin.min())
}

/// Metric induced on the hypersurface `Gr(f)`, pulled back to Σ: `a_f - β_f f'²`.
pub fn induced_metric(model: &SpacetimeModel, f: &ScalarField) -> Result<MetricField> {
    let base = SliceBase::sample(model, f)?;
    let df = f.dx();
    let coeff: Vec<f64> = (0..f.len())
        .map(|i| base.metric.coeff()[i] - base.lapse.values()[i] * df.values()[i].powi(2))
        .collect();
    match coeff.iter().position(|&c| c <= crate::grid::POSITIVITY_TOLERANCE) {
        Some(index) => Err(Error::SpacelikeViolation {
            margin: base.margin.values()[index],
            index,
            floor: 0.0,
        }),
        None => MetricField::new(f.grid(), coeff),
    }
}
