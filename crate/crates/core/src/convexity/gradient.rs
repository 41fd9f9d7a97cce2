use crate::error::{GeomError, Result};
use crate::linalg::{Point, Vector};
use crate::manifolds::metric_eval;

use super::comparison::{f_derivatives, ComparisonField, ScalarField};

/// Metric gradient `g⁻¹ df` with `df` from 4th-order coordinate differences.
pub fn coordinate_gradient(field: &dyn ScalarField, p: &Point, step: f64) -> Result<Vector> {
    let n = field.chart().dim();
    let mut pts = Vec::with_capacity(4 * n);
    for i in 0..n {
        for s in [-2.0, -1.0, 1.0, 2.0] {
            let mut x = p.clone();
            x[i] += s * step;
            pts.push(x);
        }
    }
    let vals = field.values_near(p, &pts).map_err(|e| match e {
        GeomError::OutsideRegion { .. } | GeomError::OutOfDomain(_) => GeomError::DomainTooTight,
        other => other,
    })?;
    let df = Vector::from_fn(n, |i, _| {
        let v = &vals[4 * i..4 * i + 4];
        (v[0] - 8.0 * v[1] + 8.0 * v[2] - v[3]) / (12.0 * step)
    });
    let g = metric_eval(field.chart().as_ref(), p.as_slice())?;
    g.lu().solve(&df).ok_or_else(|| GeomError::OutOfDomain(p.as_slice().to_vec()))
}

/// `∇f_{K,q}` two ways: by coordinate differences, and as
/// `f'(E) ∇E` with `f'(E) = sin√(KE)/(2√(KE))` and `∇E = 2γ'(1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientCheck {
    pub energy: f64,
    pub finite_difference: Vector,
    pub formula: Vector,
    pub residual: f64,
}

pub fn gradient_formula_check(field: &ComparisonField, p: &Point) -> Result<GradientCheck> {
    let energy = field.energy(p)?;
    let fd = coordinate_gradient(field, p, 1e-3 * field.scale())?;
    let (_, d1, _) = f_derivatives(field.k, energy);
    let formula = field.energy_gradient(p)? * d1;
    let residual = (&fd - &formula).norm();
    Ok(GradientCheck {
        energy,
        finite_difference: fd,
        formula,
        residual,
    })
}
