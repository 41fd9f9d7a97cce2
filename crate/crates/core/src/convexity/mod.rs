//! Comparison functions `f_{K,q}`, geodesic-stencil Hessians, λ-convexity
//! and space-time convexity certificates, and modified shape operators.

mod certify;
mod comparison;
mod gi;
mod gradient;
mod hessian;
mod shape;

pub use certify::{certify_lambda_convex, certify_lambda_convex_field, certify_spacetime_convex, CertifyOptions, LambdaFn};
pub use comparison::{
    f_derivatives, f_series, f_value, lambda_value, ComparisonField, DiagonalQuadratic, EnergyBound, ScalarField,
};
pub use gradient::{coordinate_gradient, gradient_formula_check, GradientCheck};
pub use gi::{gi_warped_candidate, WarpedRegion, WarpingLift};
pub use hessian::{
    coordinate_hessian, hessian_matrix, hessian_quadratic_form, normalize_direction, second_derivative_along,
    HessianOptions, HessianSample,
};
pub use shape::{shape_operator_track, track_random_arcs, ShapeOperatorTrack, ShapeTrackOptions};
