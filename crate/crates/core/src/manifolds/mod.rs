//! Analytic metric charts, their connection and curvature, and the chart catalog.

mod catalog;
mod chart;
mod curvature;
mod minkowski;
mod warped;

pub use catalog::{lorentzian_model_surface_spec, Catalog, CatalogEntry, Provenance, BUILTIN_IDS};
pub use chart::{
    fd_step, finite_difference_jet, metric_jet, richardson_derivative, ChartRef, MetricChart, MetricJet,
};
pub use curvature::{
    causal_character, causal_character_with, christoffel, christoffel_with_derivatives, curvature_vector,
    metric_eval, plane_gram, riemann, sectional_curvature, sectional_from_tensor, CausalCharacter,
    Christoffel, PlaneSection, RiemannTensor, TangentVector, CURVATURE_SIGN, DEGENERATE_PLANE_TOL,
};
pub use minkowski::Minkowski;
pub use warped::{ConformalSpaceForm, Interval, WarpedProductChart, WarpedProductSpec, Warping};
