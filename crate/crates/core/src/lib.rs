//! Numerical laboratory for semi-Riemannian metric charts: signed energy,
//! comparison functions `f_{K,q}`, curvature bounds `R <= K`, geodesic
//! triangle comparisons and mean curvature of spacelike submanifolds.

pub mod error;
pub mod linalg;
pub mod convexity;
pub mod curvature_bounds;
pub mod geodesics;
pub mod manifolds;
pub mod report;
pub mod sampling;
pub mod submanifolds;
pub mod triangles;

pub use error::{GeomError, Result};
