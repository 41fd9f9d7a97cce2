//! Spacelike immersed patches: induced metric, second fundamental form and
//! mean curvature (relativity sign convention), the restricted Laplacian,
//! trapped classification and obstruction audits.

mod audit;
mod extrinsic;
mod laplacian;
mod patch;

pub use audit::{audit_obstruction, closed_geodesic_search, AuditMode, AuditOptions, ClosedGeodesicSearch, GridAudit};
pub use extrinsic::{
    classify_trapped, induced_metric, mean_curvature, orthonormal_coefficients, random_orthonormal_coefficients,
    second_fundamental_form, ExtrinsicData, TrappedClass, SPACELIKE_FLOOR,
};
pub use laplacian::{restricted_laplacian, LaplacianOptions, LaplacianPair};
pub use patch::{ImmersedPatch, PatchFamily, PatchJet};
