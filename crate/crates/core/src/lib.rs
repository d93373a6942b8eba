//! Numerical `L²` geometry on the space of spacelike Cauchy graphs in a spatially
//! compact, globally hyperbolic spacetime `Σ × I` with `Σ = S¹`.
//!
//! A spacetime is given by an orthogonal splitting `-β dt² + g_t`
//! ([`SpacetimeModel`]). A hypersurface is the graph of `f : Σ → I`, and tangent
//! vectors at `f` are functions on Σ. The crate evaluates the chart metric, its
//! derivative, the Levi-Civita connection form and the curvature in closed form,
//! checks them against finite-difference oracles, and provides distance bounds,
//! lapse-bounded reparametrizations and geodesic solvers built on top.

pub mod error;
pub mod grid;
pub mod spline;
pub mod spacetime;
pub mod geometry;
pub mod splitting;
pub mod geodesic;
pub mod config;
pub mod fieldspec;
pub mod report;
pub mod trials;
pub mod cli;

pub use error::{Error, Result};
pub use grid::{DerivativeScheme, Grid, MetricField, ScalarField};
pub use spacetime::{sample_model, spacelike_margin, induced_metric, GraphFunction, ModelKind, SliceData, SpacetimeModel, TimeDomain};
