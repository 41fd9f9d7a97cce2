use crate::error::{GeomError, Result};
use crate::geodesics::{flow, GeodesicOptions};
use crate::linalg::{bilinear, euclideanized, Matrix, Point, Vector};
use crate::manifolds::metric_eval;

use super::comparison::ScalarField;

/// Geodesic stencil controls for second derivatives along geodesics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HessianOptions {
    /// Coordinate displacement of the outer stencil points, relative to the
    /// field's scale.
    pub relative_step: f64,
    pub geodesic: GeodesicOptions,
}

impl Default for HessianOptions {
    fn default() -> Self {
        HessianOptions {
            relative_step: 1e-3,
            geodesic: GeodesicOptions::default(),
        }
    }
}

/// `(f∘γ_v)''(0)` for a normalized direction.
#[derive(Clone, Debug, PartialEq)]
pub struct HessianSample {
    pub point: Point,
    pub direction: Vector,
    pub value: f64,
    pub g_vv: f64,
    /// Difference between the two Richardson levels.
    pub error_estimate: f64,
}

impl HessianSample {
    pub fn error_within_budget(&self) -> bool {
        self.error_estimate <= 1e-6 * (1.0 + self.value.abs())
    }
}

/// Rescales `v` so that `|g(v,v)|` is 1, or its auxiliary Euclidean norm is
/// 1 for (numerically) null vectors.
pub fn normalize_direction(g: &Matrix, v: &Vector) -> Result<Vector> {
    let aux = bilinear(&euclideanized(g), v, v);
    if aux <= 0.0 || !aux.is_finite() {
        return Err(GeomError::InvalidArgument("zero direction".into()));
    }
    let gvv = bilinear(g, v, v);
    if gvv.abs() <= 1e-10 * aux {
        Ok(v / aux.sqrt())
    } else {
        Ok(v / gvv.abs().sqrt())
    }
}

/// Raw second derivative of `f` along the geodesic through `p` with
/// velocity `v` (not normalized). Returns `(value, error_estimate)`.
pub fn second_derivative_along(
    field: &dyn ScalarField,
    p: &Point,
    v: &Vector,
    opts: &HessianOptions,
) -> Result<(f64, f64)> {
    let chart = field.chart().as_ref();
    let speed = v.norm();
    if speed == 0.0 {
        return Ok((0.0, 0.0));
    }
    let h = opts.relative_step * field.scale() / speed;
    let offsets = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0];
    let mut points = Vec::with_capacity(offsets.len());
    for &s in &offsets {
        let (x, _) = flow(chart, p, v, s * h, &opts.geodesic).map_err(stencil_error)?;
        points.push(x);
    }
    let values = field.values_near(p, &points).map_err(stencil_error)?;
    let center = field.value(p)?;
    let [m2, m1, mh, ph, p1, p2] = [values[0], values[1], values[2], values[3], values[4], values[5]];
    let coarse = (-m2 + 16.0 * m1 - 30.0 * center + 16.0 * p1 - p2) / (12.0 * h * h);
    let half = h / 2.0;
    let fine = (-m1 + 16.0 * mh - 30.0 * center + 16.0 * ph - p1) / (12.0 * half * half);
    let value = (16.0 * fine - coarse) / 15.0;
    if !value.is_finite() {
        return Err(GeomError::NoConvergence {
            iterations: 0,
            residual: value,
        });
    }
    Ok((value, (fine - coarse).abs()))
}

fn stencil_error(e: GeomError) -> GeomError {
    match e {
        GeomError::OutsideRegion { .. } | GeomError::LeftDomain { .. } | GeomError::OutOfDomain(_) => {
            GeomError::DomainTooTight
        }
        other => other,
    }
}

/// Hessian quadratic form `Hess f(v, v)` with `v` normalized.
pub fn hessian_quadratic_form(
    field: &dyn ScalarField,
    p: &Point,
    v: &Vector,
    opts: &HessianOptions,
) -> Result<HessianSample> {
    let g = metric_eval(field.chart().as_ref(), p.as_slice())?;
    let direction = normalize_direction(&g, v)?;
    let (value, error_estimate) = second_derivative_along(field, p, &direction, opts)?;
    Ok(HessianSample {
        point: p.clone(),
        g_vv: bilinear(&g, &direction, &direction),
        direction,
        value,
        error_estimate,
    })
}

/// Full Hessian in chart coordinates by polarization over the coordinate
/// frame: `H_ij = (Q(e_i + e_j) - Q(e_i) - Q(e_j)) / 2`.
pub fn hessian_matrix(field: &dyn ScalarField, p: &Point, opts: &HessianOptions) -> Result<Matrix> {
    let n = field.chart().dim();
    let basis = |i: usize| Vector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 });
    let mut diag = vec![0.0; n];
    for (i, d) in diag.iter_mut().enumerate() {
        *d = second_derivative_along(field, p, &basis(i), opts)?.0;
    }
    let mut h = Matrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = diag[i];
        for j in (i + 1)..n {
            let q = second_derivative_along(field, p, &(basis(i) + basis(j)), opts)?.0;
            let hij = 0.5 * (q - diag[i] - diag[j]);
            h[(i, j)] = hij;
            h[(j, i)] = hij;
        }
    }
    Ok(h)
}

/// Cross-check oracle: `∂_i∂_j f - Γ^k_ij ∂_k f` from coordinate finite
/// differences.
pub fn coordinate_hessian(field: &dyn ScalarField, p: &Point, step: f64) -> Result<Matrix> {
    let n = field.chart().dim();
    let conn = crate::manifolds::christoffel(field.chart().as_ref(), p.as_slice())?;
    let f = |x: &Point| field.value(x);
    let e = |i: usize| Vector::from_fn(n, |j, _| if i == j { step } else { 0.0 });
    let f0 = f(p)?;
    let mut grad = vec![0.0; n];
    for (i, gi) in grad.iter_mut().enumerate() {
        *gi = (-f(&(p + e(i) * 2.0))? + 8.0 * f(&(p + e(i)))? - 8.0 * f(&(p - e(i)))? + f(&(p - e(i) * 2.0))?)
            / (12.0 * step);
    }
    let mut h = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let d2 = if i == j {
                (-f(&(p + e(i) * 2.0))? + 16.0 * f(&(p + e(i)))? - 30.0 * f0 + 16.0 * f(&(p - e(i)))?
                    - f(&(p - e(i) * 2.0))?)
                    / (12.0 * step * step)
            } else {
                (f(&(p + e(i) + e(j)))? - f(&(p + e(i) - e(j)))? - f(&(p - e(i) + e(j)))? + f(&(p - e(i) - e(j)))?)
                    / (4.0 * step * step)
            };
            let corr: f64 = (0..n).map(|k| conn.get(k, i, j) * grad[k]).sum();
            h[(i, j)] = d2 - corr;
            h[(j, i)] = d2 - corr;
        }
    }
    Ok(h)
}
