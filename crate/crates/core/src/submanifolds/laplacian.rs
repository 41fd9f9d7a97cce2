use crate::convexity::{coordinate_gradient, second_derivative_along, HessianOptions, ScalarField};
use crate::error::{GeomError, Result};
use crate::linalg::{bilinear, Matrix, Point, Vector};
use crate::manifolds::metric_jet;

use super::extrinsic::{extrinsic_from_jet, orthonormal_coefficients, ExtrinsicData};
use super::patch::ImmersedPatch;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaplacianOptions {
    /// Parameter stencil step relative to the patch's parameter scale.
    pub parameter_step: f64,
    /// Coordinate step for `∇̄f`, relative to the field scale.
    pub gradient_step: f64,
    pub hessian: HessianOptions,
}

impl Default for LaplacianOptions {
    fn default() -> Self {
        LaplacianOptions {
            parameter_step: 1e-3,
            gradient_step: 1e-3,
            hessian: HessianOptions::default(),
        }
    }
}

/// Both sides of `Δu = Σ ∇̄²f(e_i, e_i) − k g(H, ∇̄f)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LaplacianPair {
    pub direct: f64,
    pub identity: f64,
    pub hessian_trace: f64,
    /// `k g(H, ∇̄f)`.
    pub mean_curvature_term: f64,
    pub value: f64,
    pub extrinsic: ExtrinsicData,
}

impl LaplacianPair {
    pub fn relative_error(&self) -> f64 {
        (self.direct - self.identity).abs() / (1.0 + self.direct.abs())
    }
}

// 4th-order first-derivative weights at offsets −2, −1, 1, 2.
const D1: [(f64, f64); 4] = [(-2.0, 1.0 / 12.0), (-1.0, -8.0 / 12.0), (1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)];

fn stencil_error(e: GeomError) -> GeomError {
    match e {
        GeomError::OutsideRegion { .. } | GeomError::LeftDomain { .. } | GeomError::OutOfDomain(_) => {
            GeomError::DomainTooTight
        }
        other => other,
    }
}

/// `∂_c h_ab` from the immersion jet and the ambient metric jet.
fn induced_metric_derivatives(patch: &ImmersedPatch, ext: &ExtrinsicData, dd: &[Vector]) -> Result<Vec<Matrix>> {
    let k = patch.k;
    let n = patch.chart.dim();
    let jet = metric_jet(patch.chart.as_ref(), ext.point.as_slice(), false)?;
    let d = &ext.tangent;
    let g = &ext.g;
    let mut out = Vec::with_capacity(k);
    for c in 0..k {
        let mut dg = Matrix::zeros(n, n);
        for l in 0..n {
            dg += &jet.dg[l] * d[(l, c)];
        }
        let m = Matrix::from_fn(k, k, |a, b| {
            let da = d.column(a).into_owned();
            let db = d.column(b).into_owned();
            bilinear(g, &dd[c * k + a], &db) + bilinear(g, &da, &dd[c * k + b]) + bilinear(&dg, &da, &db)
        });
        out.push(m);
    }
    Ok(out)
}

/// Laplace–Beltrami of `f ∘ φ` by parameter stencils, against the
/// ambient identity, at parameter point `u`.
pub fn restricted_laplacian(
    patch: &ImmersedPatch,
    field: &dyn ScalarField,
    u: &[f64],
    opts: &LaplacianOptions,
) -> Result<LaplacianPair> {
    let k = patch.k;
    let jet = patch.jet(u)?;
    let dd = jet.dd.clone();
    let ext = extrinsic_from_jet(patch, u, jet)?;
    let x = ext.point.clone();

    // direct side
    let delta = opts.parameter_step * patch.parameter_scale();
    let mut params: Vec<Vec<f64>> = Vec::new();
    for a in 0..k {
        for &(s, _) in &D1 {
            let mut p = u.to_vec();
            p[a] += s * delta;
            params.push(p);
        }
    }
    for a in 0..k {
        for b in a + 1..k {
            for &(s, _) in &D1 {
                for &(t, _) in &D1 {
                    let mut p = u.to_vec();
                    p[a] += s * delta;
                    p[b] += t * delta;
                    params.push(p);
                }
            }
        }
    }
    let points = params.iter().map(|p| patch.point(p)).collect::<Result<Vec<Point>>>()?;
    let vals = field.values_near(&x, &points).map_err(stencil_error)?;
    let center = field.value(&x).map_err(stencil_error)?;
    let mut grad = vec![0.0; k];
    let mut hess = Matrix::zeros(k, k);
    for a in 0..k {
        let v = &vals[4 * a..4 * a + 4];
        grad[a] = D1.iter().zip(v).map(|(&(_, w), f)| w * f).sum::<f64>() / delta;
        hess[(a, a)] = (-v[0] + 16.0 * v[1] - 30.0 * center + 16.0 * v[2] - v[3]) / (12.0 * delta * delta);
    }
    let mut idx = 4 * k;
    for a in 0..k {
        for b in a + 1..k {
            let mut s = 0.0;
            for &(_, wa) in &D1 {
                for &(_, wb) in &D1 {
                    s += wa * wb * vals[idx];
                    idx += 1;
                }
            }
            hess[(a, b)] = s / (delta * delta);
            hess[(b, a)] = hess[(a, b)];
        }
    }
    let h_inv = ext
        .induced_metric
        .clone()
        .try_inverse()
        .ok_or(GeomError::SpacelikeViolation(0.0))?;
    let dh = induced_metric_derivatives(patch, &ext, &dd)?;
    let mut direct = 0.0;
    for a in 0..k {
        for b in 0..k {
            // Γ^c_ab u_c = ½ h^{cd}(∂_a h_bd + ∂_b h_ad − ∂_d h_ab) u_c
            let mut christ = 0.0;
            for c in 0..k {
                for d in 0..k {
                    christ += 0.5 * h_inv[(c, d)] * (dh[a][(b, d)] + dh[b][(a, d)] - dh[d][(a, b)]) * grad[c];
                }
            }
            direct += h_inv[(a, b)] * (hess[(a, b)] - christ);
        }
    }

    // identity side
    let frame = orthonormal_coefficients(&ext.induced_metric)?;
    let mut trace = 0.0;
    for i in 0..k {
        let e = &ext.tangent * frame.column(i);
        trace += second_derivative_along(field, &x, &e, &opts.hessian)?.0;
    }
    let nabla = coordinate_gradient(field, &x, opts.gradient_step * field.scale())?;
    let h_term = k as f64 * bilinear(&ext.g, &ext.mean_curvature, &nabla);
    Ok(LaplacianPair {
        direct,
        identity: trace - h_term,
        hessian_trace: trace,
        mean_curvature_term: h_term,
        value: center,
        extrinsic: ext,
    })
}
