//! Closed-form geometry of the `L²` metric in the graph chart.
//!
//! At a graph `f` the chart metric is `G_f(u, v) = ∫ β_f F_f u v dvol_{g_f}` and the
//! connection form is `Γ_f(u, v) = ½ φ(f) u v + g_f(ψ(f), ∇(u v))`, so the
//! covariant derivative of constant fields is `∇_u v = Γ_f(u, v)` and geodesics
//! solve `f'' = -Γ_f(f', f')`. Curvature is evaluated intrinsically from the
//! metric induced on the hypersurface.

use crate::error::{Error, Result};
use crate::grid::{hessian_gg, l2_product, laplacian, MetricField, ScalarField};
use crate::spacetime::{induced_metric, sample_model, SliceBase, SliceData, SpacetimeModel};

/// Derived slice quantities entering `φ(f)` and `D_f G`.
#[derive(Clone, Debug, PartialEq)]
pub struct AuxiliaryFields {
    /// `η_f = ½ tr(g_f⁻¹ h_f)`.
    pub eta: ScalarField,
    /// `ξ(f) = ½ (∂_tβ/β)_f ζ_f - ½ h_f(∇f, ∇f)`.
    pub xi: ScalarField,
    /// `ε(f) = g_f(∇β_f, ∇f)`.
    pub eps: ScalarField,
    /// `δ(f) = β_f Hess_f(f)(∇f, ∇f) + ½ ζ_f ε(f)`.
    pub delta: ScalarField,
    /// `ζ_f = g_f(∇f, ∇f)`.
    pub zeta: ScalarField,
    /// `Δ_f f`.
    pub lap_f: ScalarField,
}

impl AuxiliaryFields {
    pub fn from_slice(s: &SliceData) -> Self {
        let a = s.metric.coeff();
        let eta = s.metric_dt.zip_map(&s.metric.as_field(), |h, a| 0.5 * h / a);
        let n = s.f.len();
        let xi = ScalarField::new(
            s.f.grid(),
            (0..n)
                .map(|i| {
                    let g = s.grad.values()[i];
                    0.5 * s.lapse_dt.values()[i] / s.lapse.values()[i] * s.grad_sq.values()[i]
                        - 0.5 * s.metric_dt.values()[i] * g * g
                })
                .collect(),
        )
        .expect("finite slice data");
        let dbeta = s.lapse.dx();
        let df = s.f.dx();
        let eps = ScalarField::new(
            s.f.grid(),
            (0..n).map(|i| dbeta.values()[i] * df.values()[i] / a[i]).collect(),
        )
        .expect("finite slice data");
        let hess = hessian_gg(&s.f, &s.metric);
        let delta = ScalarField::new(
            s.f.grid(),
            (0..n)
                .map(|i| s.lapse.values()[i] * hess.values()[i] + 0.5 * s.grad_sq.values()[i] * eps.values()[i])
                .collect(),
        )
        .expect("finite slice data");
        AuxiliaryFields {
            eta,
            xi,
            eps,
            delta,
            zeta: s.grad_sq.clone(),
            lap_f: laplacian(&s.f, &s.metric),
        }
    }
}

/// The two fields determining `Γ_f`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionForm {
    pub phi: ScalarField,
    /// `∂_x` coefficient of `ψ(f) = β_f F_f² ∇f`.
    pub psi: ScalarField,
}

impl ConnectionForm {
    pub fn from_slice(s: &SliceData, aux: &AuxiliaryFields) -> Self {
        let n = s.f.len();
        let mut phi = Vec::with_capacity(n);
        let mut psi = Vec::with_capacity(n);
        for i in 0..n {
            let beta = s.lapse.values()[i];
            let f2 = s.lorentz.values()[i].powi(2);
            phi.push(
                s.lapse_dt.values()[i] / beta
                    + aux.eta.values()[i]
                    + (beta * aux.xi.values()[i] + beta * aux.lap_f.values()[i] + 2.0 * aux.eps.values()[i]) * f2
                    + 3.0 * beta * aux.delta.values()[i] * f2 * f2,
            );
            psi.push(beta * f2 * s.grad.values()[i]);
        }
        ConnectionForm {
            phi: ScalarField::new(s.f.grid(), phi).expect("finite connection form"),
            psi: ScalarField::new(s.f.grid(), psi).expect("finite connection form"),
        }
    }

    /// `Γ(u, v) = ½ φ u v + ψ (uv)'`; the metric factors of `g_f(ψ, ∇(uv))` cancel in 1D.
    pub fn apply(&self, u: &ScalarField, v: &ScalarField) -> ScalarField {
        let uv = u * v;
        let duv = uv.dx();
        ScalarField::from_index_fn(uv.grid(), |i| {
            0.5 * self.phi.values()[i] * uv.values()[i] + self.psi.values()[i] * duv.values()[i]
        })
    }
}

/// Coefficients of `D_f G`: `DG(u, v)(w) = ∫ (A u v w + B g_f(∇f, ∇w) u v) dvol_{g_f}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricDerivative {
    /// `A = β_f F_f [(∂_tβ/β)_f + η_f + β_f F_f² ξ(f)]`.
    pub pointwise: ScalarField,
    /// `B = β_f² F_f³`.
    pub gradient: ScalarField,
}

impl MetricDerivative {
    pub fn from_slice(s: &SliceData, aux: &AuxiliaryFields) -> Self {
        let n = s.f.len();
        let mut pointwise = Vec::with_capacity(n);
        let mut gradient = Vec::with_capacity(n);
        for i in 0..n {
            let beta = s.lapse.values()[i];
            let big_f = s.lorentz.values()[i];
            pointwise.push(
                beta * big_f
                    * (s.lapse_dt.values()[i] / beta + aux.eta.values()[i] + beta * big_f * big_f * aux.xi.values()[i]),
            );
            gradient.push(beta * beta * big_f.powi(3));
        }
        MetricDerivative {
            pointwise: ScalarField::new(s.f.grid(), pointwise).expect("finite metric derivative"),
            gradient: ScalarField::new(s.f.grid(), gradient).expect("finite metric derivative"),
        }
    }
}

/// Everything known about the chart at one graph `f`.
#[derive(Clone, Debug)]
pub struct ChartPoint {
    slice: SliceData,
    aux: AuxiliaryFields,
    form: ConnectionForm,
    dg: MetricDerivative,
    /// `β_f F_f √a_f`, the density of `G_f` against `dx`.
    density: ScalarField,
}

impl ChartPoint {
    pub fn new(model: &SpacetimeModel, f: &ScalarField) -> Result<Self> {
        Ok(Self::from_slice(sample_model(model, f)?))
    }

    pub fn from_slice(slice: SliceData) -> Self {
        let aux = AuxiliaryFields::from_slice(&slice);
        let form = ConnectionForm::from_slice(&slice, &aux);
        let dg = MetricDerivative::from_slice(&slice, &aux);
        let density = metric_density(&slice.lapse, &slice.lorentz, &slice.metric);
        ChartPoint {
            slice,
            aux,
            form,
            dg,
            density,
        }
    }

    pub fn slice(&self) -> &SliceData {
        &self.slice
    }

    pub fn auxiliary(&self) -> &AuxiliaryFields {
        &self.aux
    }

    pub fn connection_form(&self) -> &ConnectionForm {
        &self.form
    }

    pub fn metric_derivative_coefficients(&self) -> &MetricDerivative {
        &self.dg
    }

    /// `G_f(u, v)`.
    pub fn metric(&self, u: &ScalarField, v: &ScalarField) -> f64 {
        weighted_sum(&self.density, u, v)
    }

    /// Field `m` with `G_f(u, w) = Σ m_i w_i Δx` for all `w`.
    pub fn metric_density(&self, u: &ScalarField) -> ScalarField {
        &self.density * u
    }

    /// `Γ_f(u, v)`.
    pub fn gamma(&self, u: &ScalarField, v: &ScalarField) -> ScalarField {
        self.form.apply(u, v)
    }

    /// `D_f G(u, v)(w)`, the derivative of `f ↦ G_f(u, v)` in direction `w`.
    pub fn metric_derivative(&self, u: &ScalarField, v: &ScalarField, w: &ScalarField) -> f64 {
        let density = self.metric_derivative_density(u, v);
        let mut sum = 0.0;
        for i in 0..w.len() {
            sum += density.values()[i] * w.values()[i];
        }
        sum * w.grid().spacing()
    }

    /// Field `d` with `D_f G(u, v)(w) = Σ d_i w_i Δx` for all `w`.
    ///
    /// The gradient term is moved onto `w` by the discrete identity `Dᵀ = -D`.
    pub fn metric_derivative_density(&self, u: &ScalarField, v: &ScalarField) -> ScalarField {
        let s = &self.slice;
        let sqrt_a = s.metric.volume_density();
        let df = s.f.dx();
        let uv = u * v;
        let flux = ScalarField::from_index_fn(u.grid(), |i| {
            self.dg.gradient.values()[i] * df.values()[i] * uv.values()[i] / sqrt_a.values()[i]
        });
        let dflux = flux.dx();
        ScalarField::from_index_fn(u.grid(), |i| {
            self.dg.pointwise.values()[i] * uv.values()[i] * sqrt_a.values()[i] - dflux.values()[i]
        })
    }
}

fn metric_density(lapse: &ScalarField, lorentz: &ScalarField, metric: &MetricField) -> ScalarField {
    let sqrt_a = metric.volume_density();
    ScalarField::from_index_fn(lapse.grid(), |i| {
        lapse.values()[i] * lorentz.values()[i] * sqrt_a.values()[i]
    })
}

fn weighted_sum(density: &ScalarField, u: &ScalarField, v: &ScalarField) -> f64 {
    assert!(density.grid() == u.grid() && u.grid() == v.grid(), "fields live on different grids");
    let mut sum = 0.0;
    for i in 0..u.len() {
        sum += density.values()[i] * u.values()[i] * v.values()[i];
    }
    sum * u.grid().spacing()
}

/// `G_f(u, v)`, skipping the time derivatives that only the connection needs.
pub fn metric_g(model: &SpacetimeModel, f: &ScalarField, u: &ScalarField, v: &ScalarField) -> Result<f64> {
    let base = SliceBase::sample(model, f)?;
    base.require_spacelike(model.margin_floor())?;
    let density = metric_density(&base.lapse, &base.lorentz(), &base.metric);
    Ok(weighted_sum(&density, u, v))
}

/// Density of `G_f` against `dx`, i.e. `β_f F_f √a_f`.
pub fn metric_g_density(model: &SpacetimeModel, f: &ScalarField) -> Result<ScalarField> {
    let base = SliceBase::sample(model, f)?;
    base.require_spacelike(model.margin_floor())?;
    Ok(metric_density(&base.lapse, &base.lorentz(), &base.metric))
}

pub fn connection_gamma(model: &SpacetimeModel, f: &ScalarField, u: &ScalarField, v: &ScalarField) -> Result<ScalarField> {
    Ok(ChartPoint::new(model, f)?.gamma(u, v))
}

pub fn metric_derivative_dg(
    model: &SpacetimeModel,
    f: &ScalarField,
    u: &ScalarField,
    v: &ScalarField,
    w: &ScalarField,
) -> Result<f64> {
    Ok(ChartPoint::new(model, f)?.metric_derivative(u, v, w))
}

/// Both sides of the Koszul identity at one `(f, u, v, w)`.
#[derive(Clone, Debug, PartialEq)]
pub struct KoszulReport {
    /// `2 G_f(Γ_f(u, v), w)`.
    pub lhs: f64,
    /// `D_uG(v, w) + D_vG(u, w) - D_wG(u, v)` from the closed-form derivative.
    pub rhs: f64,
    pub residual: f64,
    /// Residual over the sum of the absolute values of the four terms.
    pub relative: f64,
    pub step: f64,
    /// Residual with `D_fG` replaced by central differences of `G` at `step`.
    pub fd_residual: f64,
    /// Same at `step / 2`.
    pub fd_residual_half: f64,
    /// `fd_residual / fd_residual_half`; about 4 for a second-order difference.
    pub fd_ratio: f64,
}

pub fn koszul_residual(
    model: &SpacetimeModel,
    f: &ScalarField,
    u: &ScalarField,
    v: &ScalarField,
    w: &ScalarField,
    step: f64,
) -> Result<KoszulReport> {
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {step}")));
    }
    let point = ChartPoint::new(model, f)?;
    let floor = 10.0 * step;
    if point.slice().margin.min() < floor {
        return Err(SliceBase::sample(model, f)?.violation(floor));
    }
    let lhs = 2.0 * point.metric(&point.gamma(u, v), w);
    let duvw = point.metric_derivative(v, w, u);
    let dvuw = point.metric_derivative(u, w, v);
    let dwuv = point.metric_derivative(u, v, w);
    let rhs = duvw + dvuw - dwuv;
    let residual = (lhs - rhs).abs();
    let scale = lhs.abs() + duvw.abs() + dvuw.abs() + dwuv.abs();
    let relative = if scale > 0.0 { residual / scale } else { residual };

    let fd = |eps: f64| -> Result<f64> {
        let d = |dir: &ScalarField, a: &ScalarField, b: &ScalarField| -> Result<f64> {
            let plus = metric_g(model, &f.axpy(eps, dir), a, b)?;
            let minus = metric_g(model, &f.axpy(-eps, dir), a, b)?;
            Ok((plus - minus) / (2.0 * eps))
        };
        Ok((lhs - (d(u, v, w)? + d(v, u, w)? - d(w, u, v)?)).abs())
    };
    let fd_residual = fd(step)?;
    let fd_residual_half = fd(0.5 * step)?;
    Ok(KoszulReport {
        lhs,
        rhs,
        residual,
        relative,
        step,
        fd_residual,
        fd_residual_half,
        fd_ratio: fd_residual / fd_residual_half,
    })
}

/// Curvature tensor of the `L²` metric on functions over a Riemannian circle:
/// `R(u, v)w = g(v∇u - u∇v, ∇w) + ½ (vΔu - uΔv) w`.
pub fn curvature_r31(s_metric: &MetricField, u: &ScalarField, v: &ScalarField, w: &ScalarField) -> ScalarField {
    let (du, dv, dw) = (u.dx(), v.dx(), w.dx());
    let (lu, lv) = (laplacian(u, s_metric), laplacian(v, s_metric));
    let a = s_metric.coeff();
    ScalarField::from_index_fn(u.grid(), |i| {
        let (ui, vi) = (u.values()[i], v.values()[i]);
        (vi * du.values()[i] - ui * dv.values()[i]) * dw.values()[i] / a[i]
            + 0.5 * (vi * lu.values()[i] - ui * lv.values()[i]) * w.values()[i]
    })
}

/// Normalised Gram determinant below which a pair is treated as degenerate.
pub const DEGENERATE_PLANE_TOLERANCE: f64 = 1e-12;

/// Gram–Schmidt in `L²(dvol_S)`, `u` first. Fails with `DegeneratePlane`.
pub fn orthonormal_pair(s_metric: &MetricField, u: &ScalarField, v: &ScalarField) -> Result<(ScalarField, ScalarField, f64)> {
    let uu = l2_product(u, u, s_metric);
    let vv = l2_product(v, v, s_metric);
    let uv = l2_product(u, v, s_metric);
    let gram = uu * vv - uv * uv;
    let normaliser = uu * vv;
    if !(normaliser > 0.0) || gram <= DEGENERATE_PLANE_TOLERANCE * normaliser {
        let ratio = if normaliser > 0.0 { gram / normaliser } else { 0.0 };
        return Err(Error::DegeneratePlane(ratio));
    }
    let e1 = u * (1.0 / uu.sqrt());
    let rest = v.axpy(-uv / uu, u);
    let norm = l2_product(&rest, &rest, s_metric).sqrt();
    Ok((e1, &rest * (1.0 / norm), gram))
}

/// `-½ ∫_S ‖e₁∇e₂ - e₂∇e₁‖² dvol_S` for an `L²(S)`-orthonormal pair.
pub fn sectional_from_orthonormal(s_metric: &MetricField, e1: &ScalarField, e2: &ScalarField) -> f64 {
    let (d1, d2) = (e1.dx(), e2.dx());
    let a = s_metric.coeff();
    let mut sum = 0.0;
    for i in 0..e1.len() {
        let c = e1.values()[i] * d2.values()[i] - e2.values()[i] * d1.values()[i];
        sum += c * c / a[i] * a[i].sqrt();
    }
    -0.5 * sum * e1.grid().spacing()
}

/// Sectional curvature of span{u, v} at the hypersurface `Gr(f)`.
///
/// `u` and `v` are read as functions on the hypersurface, pulled back to Σ.
pub fn sectional_curvature(model: &SpacetimeModel, f: &ScalarField, u: &ScalarField, v: &ScalarField) -> Result<f64> {
    let s_metric = induced_metric(model, f)?;
    let (e1, e2, _) = orthonormal_pair(&s_metric, u, v)?;
    Ok(sectional_from_orthonormal(&s_metric, &e1, &e2))
}

/// `⟨R(u, v)w, z⟩` paired in `L²(dvol_S)` on the induced metric of `Gr(f)`.
pub fn riemann_4(
    model: &SpacetimeModel,
    f: &ScalarField,
    u: &ScalarField,
    v: &ScalarField,
    w: &ScalarField,
    z: &ScalarField,
) -> Result<f64> {
    let s_metric = induced_metric(model, f)?;
    if model.margin_floor() >= 0.0 {
        SliceBase::sample(model, f)?.require_spacelike(model.margin_floor())?;
    }
    Ok(l2_product(&curvature_r31(&s_metric, u, v, w), z, &s_metric))
}

/// Result of comparing `DΓ + Γ∧Γ` by finite differences with the closed form.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureOracle {
    pub step: f64,
    /// `√β₀ (DΓ(u, v)w + (Γ∧Γ)(u, v)w)` at the zero section.
    pub finite_difference: ScalarField,
    /// `(Γ₀∧Γ₀)(u, v)w` alone.
    pub wedge: ScalarField,
    /// `R(√β₀u, √β₀v)(√β₀w)` on the induced metric of the base slice.
    pub closed_form: ScalarField,
    pub discrepancy: ScalarField,
}

impl CurvatureOracle {
    pub fn max_discrepancy(&self) -> f64 {
        self.discrepancy.max_abs()
    }
}

/// Finite-difference check of the curvature formula at a constant slice.
///
/// The splitting is translated in time so that `base_f` becomes the zero
/// section, where the graph map has differential `u ↦ √β₀ u`.
pub fn curvature_fd_oracle(
    model: &SpacetimeModel,
    base_f: &ScalarField,
    u: &ScalarField,
    v: &ScalarField,
    w: &ScalarField,
    step: f64,
) -> Result<CurvatureOracle> {
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {step}")));
    }
    if !base_f.is_constant() {
        return Err(Error::RebaseUnavailable(
            "only constant slices can be moved to the zero section by a time translation".into(),
        ));
    }
    let rebased = model.rebased(base_f.values()[0]);
    let grid = base_f.grid();
    let zero = ScalarField::zeros(grid);
    let base = ChartPoint::new(&rebased, &zero)?;

    let directional = |dir: &ScalarField, a: &ScalarField, b: &ScalarField| -> Result<ScalarField> {
        let plus = connection_gamma(&rebased, &zero.axpy(step, dir), a, b)?;
        let minus = connection_gamma(&rebased, &zero.axpy(-step, dir), a, b)?;
        Ok(&(&plus - &minus) * (0.5 / step))
    };
    let d_gamma = &directional(u, v, w)? - &directional(v, u, w)?;
    let wedge = &base.gamma(u, &base.gamma(v, w)) - &base.gamma(v, &base.gamma(u, w));
    let sqrt_beta = base.slice().lapse.map(f64::sqrt);
    let finite_difference = &sqrt_beta * &(&d_gamma + &wedge);

    let s_metric = induced_metric(&rebased, &zero)?;
    let closed_form = curvature_r31(&s_metric, &(&sqrt_beta * u), &(&sqrt_beta * v), &(&sqrt_beta * w));
    let discrepancy = &finite_difference - &closed_form;
    Ok(CurvatureOracle {
        step,
        finite_difference,
        wedge,
        closed_form,
        discrepancy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{DerivativeScheme, Grid};
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid {
        Grid::new(n).unwrap()
    }

    fn spectral(n: usize) -> Grid {
        Grid::with_scheme(n, DerivativeScheme::Spectral).unwrap()
    }

    #[test]
    fn metric_examples() {
        let g = grid(128);
        let one = ScalarField::constant(&g, 1.0);
        let stat = SpacetimeModel::static_product();
        let ds = SpacetimeModel::de_sitter();
        let zero = ScalarField::zeros(&g);
        assert!((metric_g(&stat, &zero, &one, &one).unwrap() - 2.0 * PI).abs() < 1e-13);
        let t0: f64 = 0.7;
        let c = ScalarField::constant(&g, t0);
        assert!((metric_g(&ds, &c, &one, &one).unwrap() - 2.0 * PI * t0.cosh()).abs() < 1e-12);
        let cos = ScalarField::from_fn(&g, f64::cos);
        let sin = ScalarField::from_fn(&g, f64::sin);
        assert!(metric_g(&ds, &c, &cos, &sin).unwrap().abs() < 1e-14);
    }

    #[test]
    fn connection_vanishes_on_static_constants() {
        let g = grid(64);
        let u = ScalarField::from_fn(&g, |x| x.sin() + 0.3);
        let v = ScalarField::from_fn(&g, |x| (2.0 * x).cos());
        let gamma = connection_gamma(&SpacetimeModel::static_product(), &ScalarField::constant(&g, -2.0), &u, &v).unwrap();
        assert_eq!(gamma.max_abs(), 0.0);
    }

    #[test]
    fn de_sitter_constant_slice_connection() {
        let g = grid(64);
        let t0: f64 = 0.3;
        let u = ScalarField::from_fn(&g, |x| x.sin() + 0.3);
        let v = ScalarField::from_fn(&g, |x| (2.0 * x).cos());
        let point = ChartPoint::new(&SpacetimeModel::de_sitter(), &ScalarField::constant(&g, t0)).unwrap();
        assert_eq!(point.connection_form().psi.max_abs(), 0.0);
        for i in 0..g.n() {
            assert!((point.connection_form().phi.values()[i] - t0.tanh()).abs() < 1e-15);
        }
        let gamma = point.gamma(&u, &v);
        let expected = &(&u * &v) * (0.5 * t0.tanh());
        assert!((&gamma - &expected).max_abs() < 1e-15);
    }

    #[test]
    fn connection_is_symmetric_and_bilinear() {
        let g = grid(64);
        let f = ScalarField::from_fn(&g, |x| 0.2 * x.sin() + 0.1 * (2.0 * x).cos());
        let point = ChartPoint::new(&SpacetimeModel::de_sitter(), &f).unwrap();
        let u = ScalarField::from_fn(&g, |x| x.cos());
        let u2 = ScalarField::from_fn(&g, |x| 1.0 + (3.0 * x).sin());
        let v = ScalarField::from_fn(&g, |x| (2.0 * x).sin() - 0.5);
        assert!((&point.gamma(&u, &v) - &point.gamma(&v, &u)).max_abs() < 1e-13);
        let sum = &point.gamma(&(&u + &u2), &v) - &(&point.gamma(&u, &v) + &point.gamma(&u2, &v));
        assert!(sum.max_abs() < 1e-12);
    }

    #[test]
    fn auxiliary_fields_vanish_for_flat_graphs() {
        let g = grid(32);
        let point = ChartPoint::new(&SpacetimeModel::de_sitter(), &ScalarField::constant(&g, 0.4)).unwrap();
        let aux = point.auxiliary();
        for field in [&aux.xi, &aux.eps, &aux.delta, &aux.zeta, &aux.lap_f] {
            assert_eq!(field.max_abs(), 0.0);
        }
        assert!(aux.eta.max_abs() > 0.0);
    }

    #[test]
    fn metric_derivative_examples() {
        let g = grid(64);
        let one = ScalarField::constant(&g, 1.0);
        let u = ScalarField::from_fn(&g, |x| x.cos() + 2.0);
        let stat = SpacetimeModel::static_product();
        assert_eq!(metric_derivative_dg(&stat, &ScalarField::constant(&g, 1.0), &u, &u, &u).unwrap(), 0.0);
        let t0: f64 = 0.45;
        let d = metric_derivative_dg(&SpacetimeModel::de_sitter(), &ScalarField::constant(&g, t0), &one, &one, &one).unwrap();
        assert!((d - 2.0 * PI * t0.sinh()).abs() < 1e-12);
    }

    #[test]
    fn metric_derivative_matches_central_differences() {
        let g = grid(64);
        let model = SpacetimeModel::de_sitter();
        let f = ScalarField::from_fn(&g, |x| 0.3 * x.sin() + 0.2);
        let u = ScalarField::from_fn(&g, |x| 1.0 + x.cos());
        let v = ScalarField::from_fn(&g, |x| (2.0 * x).sin());
        let w = ScalarField::from_fn(&g, |x| 0.5 + (3.0 * x).cos());
        let exact = metric_derivative_dg(&model, &f, &u, &v, &w).unwrap();
        let fd = |e: f64| {
            (metric_g(&model, &f.axpy(e, &w), &u, &v).unwrap() - metric_g(&model, &f.axpy(-e, &w), &u, &v).unwrap())
                / (2.0 * e)
        };
        let (e1, e2) = ((exact - fd(2e-3)).abs(), (exact - fd(1e-3)).abs());
        assert!(e1 < 1e-4 * exact.abs(), "{e1}");
        assert!((e1 / e2 - 4.0).abs() < 0.1, "ratio {}", e1 / e2);
    }

    #[test]
    fn koszul_static_constant_is_exact() {
        let g = grid(64);
        let u = ScalarField::from_fn(&g, |x| x.sin());
        let v = ScalarField::from_fn(&g, |x| x.cos() + 1.0);
        let w = ScalarField::from_fn(&g, |x| (2.0 * x).cos());
        let r = koszul_residual(&SpacetimeModel::static_product(), &ScalarField::constant(&g, 0.2), &u, &v, &w, 1e-3).unwrap();
        assert!(r.residual < 1e-15);
    }

    #[test]
    fn koszul_de_sitter_slice() {
        let g = grid(128);
        let u = ScalarField::from_fn(&g, |x| 0.4 + x.sin() - 0.3 * (3.0 * x).cos());
        let v = ScalarField::from_fn(&g, |x| x.cos() + 0.2 * (2.0 * x).sin());
        let w = ScalarField::from_fn(&g, |x| 1.0 - 0.5 * (2.0 * x).cos());
        let r = koszul_residual(&SpacetimeModel::de_sitter(), &ScalarField::constant(&g, 0.3), &u, &v, &w, 1e-3).unwrap();
        assert!(r.relative < 1e-8, "{r:?}");
        assert!((3.5..=4.5).contains(&r.fd_ratio), "{r:?}");
    }

    #[test]
    fn koszul_on_curved_graph_with_spectral_derivatives() {
        let g = spectral(128);
        let f = ScalarField::from_fn(&g, |x| 0.2 + 0.25 * x.sin() - 0.1 * (2.0 * x).cos());
        let u = ScalarField::from_fn(&g, |x| 0.4 + x.sin());
        let v = ScalarField::from_fn(&g, |x| x.cos() + 0.2 * (2.0 * x).sin());
        let w = ScalarField::from_fn(&g, |x| 1.0 - 0.5 * (3.0 * x).cos());
        let r = koszul_residual(&SpacetimeModel::de_sitter(), &f, &u, &v, &w, 1e-3).unwrap();
        assert!(r.relative < 1e-8, "{r:?}");
    }

    #[test]
    fn koszul_rejects_thin_margins() {
        let g = grid(64);
        let f = ScalarField::from_fn(&g, |x| 0.999 * x.sin());
        let u = ScalarField::constant(&g, 1.0);
        let err = koszul_residual(&SpacetimeModel::static_product(), &f, &u, &u, &u, 1e-3).unwrap_err();
        assert!(matches!(err, Error::SpacelikeViolation { .. }));
    }

    #[test]
    fn r31_examples() {
        let g = grid(128);
        let flat = MetricField::flat(&g);
        let c1 = ScalarField::constant(&g, 1.0);
        let c2 = ScalarField::constant(&g, -3.0);
        let w = ScalarField::from_fn(&g, f64::sin);
        assert_eq!(curvature_r31(&flat, &c1, &c2, &w).max_abs(), 0.0);
        let cos = ScalarField::from_fn(&g, f64::cos);
        let sin = ScalarField::from_fn(&g, f64::sin);
        let r = curvature_r31(&flat, &cos, &sin, &sin);
        assert!((&r + &cos).max_abs() < 1e-6);
        let swapped = curvature_r31(&flat, &sin, &cos, &sin);
        assert!((&r + &swapped).max_abs() < 1e-15);
    }

    #[test]
    fn sectional_examples() {
        let g = grid(256);
        let ds = SpacetimeModel::de_sitter();
        let zero = ScalarField::zeros(&g);
        let u = ScalarField::from_fn(&g, |x| x.cos() / PI.sqrt());
        let v = ScalarField::from_fn(&g, |x| x.sin() / PI.sqrt());
        let k = sectional_curvature(&ds, &zero, &u, &v).unwrap();
        assert!((k + 1.0 / PI).abs() < 1e-6, "{k}");

        // Constant and cosine on the flat circle: only the cross term survives,
        // K = -½ ∫ (sin/√(2π·π))² dx = -1/(4π).
        let stat = SpacetimeModel::static_product();
        let e1 = ScalarField::constant(&g, 1.0 / (2.0 * PI).sqrt());
        let e2 = ScalarField::from_fn(&g, |x| x.cos() / PI.sqrt());
        let k = sectional_curvature(&stat, &zero, &e1, &e2).unwrap();
        assert!((k + 1.0 / (4.0 * PI)).abs() < 1e-6, "{k}");
        let k2 = sectional_curvature(&stat, &zero, &ScalarField::constant(&g, 1.0), &ScalarField::from_fn(&g, |x| 1.0 + x.cos())).unwrap();
        assert!((k2 - k).abs() < 1e-10);

        let err = sectional_curvature(&stat, &zero, &ScalarField::constant(&g, 1.0), &ScalarField::constant(&g, 2.0));
        assert!(matches!(err, Err(Error::DegeneratePlane(_))));
    }

    #[test]
    fn riemann_4_examples() {
        let g = spectral(64);
        let ds = SpacetimeModel::de_sitter();
        let zero = ScalarField::zeros(&g);
        let cos = ScalarField::from_fn(&g, f64::cos);
        let sin = ScalarField::from_fn(&g, f64::sin);
        let r = riemann_4(&ds, &zero, &cos, &sin, &sin, &cos).unwrap();
        assert!((r + PI).abs() < 1e-12, "{r}");

        let f = ScalarField::from_fn(&g, |x| 0.1 + 0.2 * x.cos());
        let u = ScalarField::from_fn(&g, |x| 1.0 + 0.5 * x.sin());
        let v = ScalarField::from_fn(&g, |x| (2.0 * x).cos() - 0.3 * x.cos());
        let rr = riemann_4(&ds, &f, &u, &v, &v, &u).unwrap();
        let s = induced_metric(&ds, &f).unwrap();
        let gram = l2_product(&u, &u, &s) * l2_product(&v, &v, &s) - l2_product(&u, &v, &s).powi(2);
        let k = sectional_curvature(&ds, &f, &u, &v).unwrap();
        assert!((rr / gram - k).abs() < 1e-10, "{} vs {k}", rr / gram);
        let anti = riemann_4(&ds, &f, &u, &v, &cos, &sin).unwrap() + riemann_4(&ds, &f, &v, &u, &cos, &sin).unwrap();
        assert!(anti.abs() < 1e-14);
    }

    #[test]
    fn curvature_oracle_static_has_flat_wedge() {
        let g = spectral(64);
        let u = ScalarField::from_fn(&g, |x| x.cos());
        let v = ScalarField::from_fn(&g, |x| (2.0 * x).sin());
        let w = ScalarField::from_fn(&g, |x| 1.0 + x.sin());
        let o = curvature_fd_oracle(&SpacetimeModel::static_product(), &ScalarField::zeros(&g), &u, &v, &w, 1e-3).unwrap();
        let half = curvature_fd_oracle(&SpacetimeModel::static_product(), &ScalarField::zeros(&g), &u, &v, &w, 5e-4).unwrap();
        let ratio = o.max_discrepancy() / half.max_discrepancy();
        assert!(o.max_discrepancy() < 1e-4 && (3.5..=4.5).contains(&ratio), "{} {ratio}", o.max_discrepancy());
        assert_eq!(o.wedge.max_abs(), 0.0);
    }

    #[test]
    fn curvature_oracle_requires_constant_slice() {
        let g = grid(32);
        let f = ScalarField::from_fn(&g, |x| 0.1 * x.sin());
        let u = ScalarField::constant(&g, 1.0);
        let err = curvature_fd_oracle(&SpacetimeModel::de_sitter(), &f, &u, &u, &u, 1e-3).unwrap_err();
        assert!(matches!(err, Error::RebaseUnavailable(_)));
    }

    #[test]
    fn curvature_oracle_converges_on_de_sitter() {
        let g = spectral(128);
        let u = ScalarField::from_fn(&g, |x| x.cos() + 0.3 * (2.0 * x).sin());
        let v = ScalarField::from_fn(&g, |x| x.sin() - 0.2);
        let w = ScalarField::from_fn(&g, |x| 1.0 + 0.5 * (2.0 * x).cos());
        let base = ScalarField::constant(&g, 0.35);
        let a = curvature_fd_oracle(&SpacetimeModel::de_sitter(), &base, &u, &v, &w, 1e-3).unwrap();
        let b = curvature_fd_oracle(&SpacetimeModel::de_sitter(), &base, &u, &v, &w, 5e-4).unwrap();
        assert!(a.max_discrepancy() < 1e-5, "{}", a.max_discrepancy());
        let ratio = a.max_discrepancy() / b.max_discrepancy();
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }
}
