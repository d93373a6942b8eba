//! Discretised Riemannian calculus on the periodic slice `Σ = S¹`.
//!
//! The slice is sampled at `x_i = 2πi/N`. A Riemannian metric on the circle is a
//! single positive coefficient `a(x)` (the metric is `a dx²`), a vector field is
//! its `∂_x` coefficient, and integrals use the periodic trapezoidal rule, which
//! is spectrally accurate for smooth integrands.
//!
//! Two derivative backends are available. [`DerivativeScheme::Central4`] is the
//! default five-point stencil; [`DerivativeScheme::Spectral`] differentiates in
//! Fourier space and is exact for trigonometric polynomials below the Nyquist
//! mode. Both are antisymmetric circulant operators, so the discrete Green
//! identity `Σ (Du) w = -Σ u (Dw)` holds to rounding for either.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest supported number of grid points.
pub const MIN_POINTS: usize = 8;

/// Metric coefficients at or below this value are rejected.
pub const POSITIVITY_TOLERANCE: f64 = 1e-12;

/// How `d/dx` is discretised on the periodic grid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeScheme {
    /// Fourth-order central differences.
    #[default]
    Central4,
    /// Fourier differentiation with the Nyquist mode removed.
    Spectral,
}

impl DerivativeScheme {
    pub fn name(self) -> &'static str {
        match self {
            DerivativeScheme::Central4 => "central4",
            DerivativeScheme::Spectral => "spectral",
        }
    }
}

impl std::str::FromStr for DerivativeScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "central4" => Ok(DerivativeScheme::Central4),
            "spectral" => Ok(DerivativeScheme::Spectral),
            other => Err(Error::InvalidArgument(format!(
                "unknown derivative scheme `{other}` (expected central4 or spectral)"
            ))),
        }
    }
}

struct SpectralPlan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

struct GridInner {
    n: usize,
    scheme: DerivativeScheme,
    spectral: Option<SpectralPlan>,
}

/// Uniform periodic grid on the circle. Cheap to clone.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &1)
            .field("n", &self.inner.n)
            .field("scheme", &self.inner.scheme)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.inner.n == other.inner.n && self.inner.scheme == other.inner.scheme
    }
}

impl Grid {
    /// Grid with the default fourth-order stencil.
    pub fn new(n: usize) -> Result<Self> {
        Self::with_scheme(n, DerivativeScheme::Central4)
    }

    pub fn with_scheme(n: usize, scheme: DerivativeScheme) -> Result<Self> {
        if n < MIN_POINTS {
            return Err(Error::InvalidGrid(n));
        }
        let spectral = match scheme {
            DerivativeScheme::Central4 => None,
            DerivativeScheme::Spectral => {
                let mut planner = FftPlanner::new();
                Some(SpectralPlan {
                    forward: planner.plan_fft_forward(n),
                    inverse: planner.plan_fft_inverse(n),
                })
            }
        };
        Ok(Grid {
            inner: Arc::new(GridInner { n, scheme, spectral }),
        })
    }

    /// Dimension of the slice. Only circles are implemented.
    pub fn dim(&self) -> usize {
        1
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn scheme(&self) -> DerivativeScheme {
        self.inner.scheme
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.inner.n as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        2.0 * PI * i as f64 / self.inner.n as f64
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.x(i)).collect()
    }

    /// Same grid but a different derivative backend.
    pub fn rescheme(&self, scheme: DerivativeScheme) -> Grid {
        if scheme == self.scheme() {
            self.clone()
        } else {
            Grid::with_scheme(self.n(), scheme).expect("size already validated")
        }
    }

    /// Discrete `d/dx` of periodic samples.
    pub fn derivative(&self, values: &[f64]) -> Vec<f64> {
        assert_eq!(values.len(), self.n(), "sample count does not match grid");
        match &self.inner.spectral {
            None => self.central4(values),
            Some(plan) => self.fourier(plan, values),
        }
    }

    fn central4(&self, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        let scale = 1.0 / (12.0 * self.spacing());
        (0..n)
            .map(|i| {
                let p1 = u[(i + 1) % n];
                let m1 = u[(i + n - 1) % n];
                let p2 = u[(i + 2) % n];
                let m2 = u[(i + n - 2) % n];
                (8.0 * (p1 - m1) - (p2 - m2)) * scale
            })
            .collect()
    }

    fn fourier(&self, plan: &SpectralPlan, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        let mut buf: Vec<Complex<f64>> = u.iter().map(|&v| Complex::new(v, 0.0)).collect();
        plan.forward.process(&mut buf);
        for (k, c) in buf.iter_mut().enumerate() {
            let wave = if 2 * k < n {
                k as f64
            } else if 2 * k == n {
                0.0
            } else {
                k as f64 - n as f64
            };
            *c = Complex::new(-wave * c.im, wave * c.re);
        }
        plan.inverse.process(&mut buf);
        let norm = 1.0 / n as f64;
        buf.iter().map(|c| c.re * norm).collect()
    }
}

/// Real samples of a function on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    /// Checked constructor: length must match and every sample must be finite.
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::LengthMismatch {
                expected: grid.n(),
                found: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(ScalarField {
            grid: grid.clone(),
            values,
        })
    }

    pub(crate) fn from_vec(grid: &Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n());
        ScalarField {
            grid: grid.clone(),
            values,
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        Self::from_vec(grid, (0..grid.n()).map(|i| f(grid.x(i))).collect())
    }

    /// Builds a field from per-index values; caller guarantees finiteness.
    pub(crate) fn from_index_fn(grid: &Grid, f: impl FnMut(usize) -> f64) -> Self {
        Self::from_vec(grid, (0..grid.n()).map(f).collect())
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self::from_vec(grid, vec![c; grid.n()])
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max - min` over the grid.
    pub fn variation(&self) -> f64 {
        self.max() - self.min()
    }

    /// True when every sample equals the first one bit for bit.
    pub fn is_constant(&self) -> bool {
        self.values.iter().all(|v| *v == self.values[0])
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_vec(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_same_grid(&self.grid, &other.grid);
        Self::from_vec(
            &self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    /// Plain coordinate derivative `du/dx`.
    pub fn dx(&self) -> Self {
        Self::from_vec(&self.grid, self.grid.derivative(&self.values))
    }

    /// `self + t * other`.
    pub fn axpy(&self, t: f64, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a + t * b)
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a * b)
    }
}

impl Mul<f64> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: f64) -> ScalarField {
        self.map(|a| a * rhs)
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self.map(|a| -a)
    }
}

/// Riemannian metric `a(x) dx²` on the circle.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricField {
    grid: Grid,
    coeff: Vec<f64>,
}

impl MetricField {
    pub fn new(grid: &Grid, coeff: Vec<f64>) -> Result<Self> {
        if coeff.len() != grid.n() {
            return Err(Error::LengthMismatch {
                expected: grid.n(),
                found: coeff.len(),
            });
        }
        for (index, &value) in coeff.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite { index });
            }
            if value <= POSITIVITY_TOLERANCE {
                return Err(Error::NonPositiveMetric { index, value });
            }
        }
        Ok(MetricField {
            grid: grid.clone(),
            coeff,
        })
    }

    pub fn from_field(field: &ScalarField) -> Result<Self> {
        Self::new(field.grid(), field.values().to_vec())
    }

    /// The round metric `dx²`.
    pub fn flat(grid: &Grid) -> Self {
        MetricField {
            grid: grid.clone(),
            coeff: vec![1.0; grid.n()],
        }
    }

    pub fn constant(grid: &Grid, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.n()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeff(&self) -> &[f64] {
        &self.coeff
    }

    pub fn as_field(&self) -> ScalarField {
        ScalarField::from_vec(&self.grid, self.coeff.clone())
    }

    /// Density of `dvol` with respect to `dx`, i.e. `√a`.
    pub fn volume_density(&self) -> ScalarField {
        ScalarField::from_vec(&self.grid, self.coeff.iter().map(|a| a.sqrt()).collect())
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(&self.grid, self.coeff.iter().map(|a| a * factor).collect())
    }
}

fn assert_same_grid(a: &Grid, b: &Grid) {
    assert!(a == b, "fields live on different grids: {a:?} vs {b:?}");
}

/// Gradient of `u` for the metric `g`, as a `∂_x` coefficient: `u'/a`.
///
/// Panics if the two arguments live on different grids.
pub fn gradient(u: &ScalarField, g: &MetricField) -> ScalarField {
    assert_same_grid(u.grid(), g.grid());
    let du = u.grid().derivative(u.values());
    ScalarField::from_vec(
        u.grid(),
        du.iter().zip(g.coeff()).map(|(d, a)| d / a).collect(),
    )
}

/// Divergence `(1/√a) d/dx(√a X)` of the vector field with coefficient `x`.
pub fn divergence(x: &ScalarField, g: &MetricField) -> ScalarField {
    assert_same_grid(x.grid(), g.grid());
    let density = g.volume_density();
    let flux: Vec<f64> = x
        .values()
        .iter()
        .zip(density.values())
        .map(|(v, s)| v * s)
        .collect();
    let dflux = x.grid().derivative(&flux);
    ScalarField::from_vec(
        x.grid(),
        dflux
            .iter()
            .zip(density.values())
            .map(|(d, s)| d / s)
            .collect(),
    )
}

/// Laplace–Beltrami operator, defined as `divergence(gradient(u))`.
pub fn laplacian(u: &ScalarField, g: &MetricField) -> ScalarField {
    divergence(&gradient(u, g), g)
}

/// Pointwise `g(X, Y) = a X Y` for vector coefficients `X`, `Y`.
pub fn pair(x: &ScalarField, y: &ScalarField, g: &MetricField) -> ScalarField {
    assert_same_grid(x.grid(), g.grid());
    let xy = x * y;
    ScalarField::from_vec(
        x.grid(),
        xy.values().iter().zip(g.coeff()).map(|(p, a)| p * a).collect(),
    )
}

/// Christoffel symbol `a'/(2a)` of the metric.
pub fn christoffel(g: &MetricField) -> ScalarField {
    let da = g.grid().derivative(g.coeff());
    ScalarField::from_vec(
        g.grid(),
        da.iter().zip(g.coeff()).map(|(d, a)| 0.5 * d / a).collect(),
    )
}

/// `Hess(f)(∇f, ∇f) = g(∇_{∇f}∇f, ∇f)`, evaluated as `(f'' - Γ f') (f'/a)²`.
pub fn hessian_gg(f: &ScalarField, g: &MetricField) -> ScalarField {
    assert_same_grid(f.grid(), g.grid());
    let df = f.dx();
    let ddf = df.dx();
    let gamma = christoffel(g);
    let n = f.len();
    let values = (0..n)
        .map(|i| {
            let grad = df.values()[i] / g.coeff()[i];
            (ddf.values()[i] - gamma.values()[i] * df.values()[i]) * grad * grad
        })
        .collect();
    ScalarField::from_vec(f.grid(), values)
}

/// Weighted `L²` pairing `∫ weight u v dvol_g`, periodic trapezoidal rule,
/// summed left to right.
pub fn l2_inner(u: &ScalarField, v: &ScalarField, weight: &ScalarField, g: &MetricField) -> f64 {
    assert_same_grid(u.grid(), v.grid());
    assert_same_grid(u.grid(), weight.grid());
    assert_same_grid(u.grid(), g.grid());
    let mut sum = 0.0;
    for i in 0..u.len() {
        sum += weight.values()[i] * u.values()[i] * v.values()[i] * g.coeff()[i].sqrt();
    }
    sum * u.grid().spacing()
}

/// `∫ u v dvol_g`.
pub fn l2_product(u: &ScalarField, v: &ScalarField, g: &MetricField) -> f64 {
    l2_inner(u, v, &ScalarField::constant(u.grid(), 1.0), g)
}

pub fn l2_norm(u: &ScalarField, g: &MetricField) -> f64 {
    l2_product(u, u, g).sqrt()
}

/// `∫ u dx` with the trapezoidal rule.
pub fn integrate(u: &ScalarField) -> f64 {
    u.values().iter().sum::<f64>() * u.grid().spacing()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid(n: usize) -> Grid {
        Grid::new(n).unwrap()
    }

    #[test]
    fn rejects_small_grids_and_bad_metrics() {
        assert!(matches!(Grid::new(7), Err(Error::InvalidGrid(7))));
        let g = grid(8);
        assert!(matches!(
            MetricField::constant(&g, 0.0),
            Err(Error::NonPositiveMetric { .. })
        ));
        assert!(MetricField::constant(&g, 1e-13).is_err());
        assert!(ScalarField::new(&g, vec![0.0; 7]).is_err());
        let mut bad = vec![0.0; 8];
        bad[3] = f64::NAN;
        assert!(matches!(ScalarField::new(&g, bad), Err(Error::NonFinite { index: 3 })));
    }

    #[test]
    #[should_panic(expected = "different grids")]
    fn mismatched_grids_are_a_contract_violation() {
        let u = ScalarField::constant(&grid(16), 1.0);
        gradient(&u, &MetricField::flat(&grid(32)));
    }

    #[test]
    fn gradient_of_constant_is_exactly_zero() {
        for scheme in [DerivativeScheme::Central4, DerivativeScheme::Spectral] {
            let g = Grid::with_scheme(64, scheme).unwrap();
            let u = ScalarField::constant(&g, 0.37);
            let metric = MetricField::new(&g, g.coordinates().iter().map(|x| 2.0 + x.sin()).collect()).unwrap();
            assert_eq!(gradient(&u, &metric).max_abs(), 0.0);
            assert!(laplacian(&u, &metric).max_abs() < 1e-15);
            assert_eq!(hessian_gg(&u, &metric).max_abs(), 0.0);
        }
    }

    #[test]
    fn gradient_of_sine_converges_at_fourth_order() {
        let err = |n: usize| {
            let g = grid(n);
            let u = ScalarField::from_fn(&g, f64::sin);
            let du = gradient(&u, &MetricField::flat(&g));
            du.zip_map(&ScalarField::from_fn(&g, f64::cos), |a, b| a - b).max_abs()
        };
        let order = (err(32) / err(64)).log2();
        assert!(order > 3.9 && order < 4.1, "order {order}");
        assert!(err(256) < 1e-7);
    }

    #[test]
    fn gradient_rescales_with_constant_metric() {
        let g = grid(128);
        let u = ScalarField::from_fn(&g, f64::sin);
        let du = gradient(&u, &MetricField::constant(&g, 4.0).unwrap());
        let expected = ScalarField::from_fn(&g, |x| x.cos() / 4.0);
        assert!((&du - &expected).max_abs() < 1e-6);
    }

    #[test]
    fn laplacian_eigenfunction_and_rescaling() {
        let g = grid(256);
        let u = ScalarField::from_fn(&g, f64::cos);
        let flat = laplacian(&u, &MetricField::flat(&g));
        assert!((&flat + &u).max_abs() < 1e-7);

        let t0: f64 = 0.7;
        let a = t0.cosh().powi(2);
        let scaled = laplacian(&u, &MetricField::constant(&g, a).unwrap());
        let expected = &u * (-1.0 / a);
        assert!((&scaled - &expected).max_abs() < 1e-7);
    }

    #[test]
    fn hessian_of_sine_on_flat_circle() {
        let g = grid(256);
        let f = ScalarField::from_fn(&g, f64::sin);
        let h = hessian_gg(&f, &MetricField::flat(&g));
        let expected = ScalarField::from_fn(&g, |x| -x.sin() * x.cos().powi(2));
        assert!((&h - &expected).max_abs() < 1e-7);
    }

    #[test]
    fn hessian_uses_the_metric_christoffel_symbol() {
        // a = e^{2x}-like periodic metric: check against the closed-form 1D formula.
        let g = grid(512);
        let a = |x: f64| 2.0 + x.cos();
        let metric = MetricField::new(&g, g.coordinates().iter().map(|&x| a(x)).collect()).unwrap();
        let f = ScalarField::from_fn(&g, |x| (2.0 * x).sin());
        let h = hessian_gg(&f, &metric);
        let expected = ScalarField::from_fn(&g, |x| {
            let fp = 2.0 * (2.0 * x).cos();
            let fpp = -4.0 * (2.0 * x).sin();
            let gam = -x.sin() / (2.0 * a(x));
            (fpp - gam * fp) * (fp / a(x)).powi(2)
        });
        assert!((&h - &expected).max_abs() < 1e-6);
    }

    #[test]
    fn l2_inner_examples() {
        for n in [8, 9, 64, 257] {
            let g = grid(n);
            let one = ScalarField::constant(&g, 1.0);
            let flat = MetricField::flat(&g);
            assert_abs_diff_eq!(l2_inner(&one, &one, &one, &flat), 2.0 * PI, epsilon = 1e-12);
            let c = ScalarField::from_fn(&g, f64::cos);
            let s = ScalarField::from_fn(&g, f64::sin);
            assert_abs_diff_eq!(l2_inner(&c, &s, &one, &flat), 0.0, epsilon = 1e-14);
            assert_abs_diff_eq!(l2_inner(&c, &c, &one, &flat), PI, epsilon = 1e-12);
        }
    }

    #[test]
    fn spectral_derivative_is_exact_on_trigonometric_polynomials() {
        for n in [16, 17, 64] {
            let g = Grid::with_scheme(n, DerivativeScheme::Spectral).unwrap();
            let u = ScalarField::from_fn(&g, |x| (3.0 * x).sin() + 0.5 * (2.0 * x).cos());
            let expected = ScalarField::from_fn(&g, |x| 3.0 * (3.0 * x).cos() - (2.0 * x).sin());
            assert!((&u.dx() - &expected).max_abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn green_identity_holds_to_rounding_for_both_schemes() {
        for scheme in [DerivativeScheme::Central4, DerivativeScheme::Spectral] {
            let g = Grid::with_scheme(96, scheme).unwrap();
            let metric = MetricField::new(&g, g.coordinates().iter().map(|x| 1.5 + 0.5 * (2.0 * x).sin()).collect()).unwrap();
            let u = ScalarField::from_fn(&g, |x| (x.cos() * 2.0).exp());
            let w = ScalarField::from_fn(&g, |x| (3.0 * x).sin() + x.cos());
            let one = ScalarField::constant(&g, 1.0);
            let lhs = l2_inner(&pair(&gradient(&u, &metric), &gradient(&w, &metric), &metric), &one, &one, &metric);
            let rhs = -l2_inner(&laplacian(&u, &metric), &w, &one, &metric);
            assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0), "{scheme:?}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn operations_are_bit_reproducible() {
        let g = grid(64);
        let metric = MetricField::new(&g, g.coordinates().iter().map(|x| 2.0 + x.sin()).collect()).unwrap();
        let u = ScalarField::from_fn(&g, |x| (x + 0.3).sin().exp());
        let first = (laplacian(&u, &metric), l2_norm(&u, &metric));
        let second = (laplacian(&u, &metric), l2_norm(&u, &metric));
        assert_eq!(first.0.values(), second.0.values());
        assert_eq!(first.1.to_bits(), second.1.to_bits());
    }
}
