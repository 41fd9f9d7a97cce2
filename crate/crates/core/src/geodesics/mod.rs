//! Geodesic integration, the exponential map and its inverse, Jacobi
//! fields and the signed energy function.

mod arc;
pub mod integrator;
mod jacobi;
mod shooting;

pub use arc::{flow, flow_with_variations, integrate_geodesic, ArcStats, GeodesicArc, GeodesicOptions, VariationalFlow};
pub use jacobi::{exp_differential, jacobi_transport, JacobiField};
pub use shooting::{
    exp_map, exp_map_in, inverse_exp, inverse_exp_in, signed_energy, signed_energy_with, Numerics, ShootingOptions,
    StarRegion,
};
