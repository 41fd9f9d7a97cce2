use nalgebra::SymmetricEigen;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::linalg::{bilinear, euclideanized, Matrix, Point, Vector};
use crate::manifolds::{christoffel, metric_eval, TangentVector};
use crate::sampling::rng_for;

use super::patch::{ImmersedPatch, PatchJet};

/// Smallest admissible eigenvalue of the induced metric.
pub const SPACELIKE_FLOOR: f64 = 1e-8;

/// Extrinsic data at one parameter point.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtrinsicData {
    pub u: Vec<f64>,
    pub point: Point,
    /// Ambient metric at `point`.
    pub g: Matrix,
    /// Columns `∂_a φ`.
    pub tangent: Matrix,
    pub induced_metric: Matrix,
    /// `II(∂_a, ∂_b)` at index `a * k + b`.
    pub second_fundamental: Vec<Vector>,
    pub mean_curvature: Vector,
    /// `max |g(II_ab, ∂_c φ)|`.
    pub tangential_residual: f64,
}

impl ExtrinsicData {
    pub fn k(&self) -> usize {
        self.tangent.ncols()
    }

    pub fn mean_curvature_vector(&self) -> TangentVector {
        TangentVector::new(self.point.clone(), self.mean_curvature.clone())
    }

    /// `H` recomputed in the tangent frame `tangent · c`, where the columns
    /// of `c` are orthonormal for the induced metric.
    pub fn mean_curvature_in_frame(&self, c: &Matrix) -> Vector {
        let k = self.k();
        let mut h = Vector::zeros(self.point.len());
        for i in 0..k {
            for a in 0..k {
                for b in 0..k {
                    h += &self.second_fundamental[a * k + b] * (c[(a, i)] * c[(b, i)]);
                }
            }
        }
        h / k as f64
    }

    /// `g(H, H)`.
    pub fn mean_curvature_square(&self) -> f64 {
        bilinear(&self.g, &self.mean_curvature, &self.mean_curvature)
    }
}

fn induced_from(g: &Matrix, d: &Matrix) -> Result<Matrix> {
    let h = d.transpose() * g * d;
    let h = (&h + h.transpose()) * 0.5;
    let min = SymmetricEigen::new(h.clone()).eigenvalues.min();
    if !(min > SPACELIKE_FLOOR) {
        return Err(GeomError::SpacelikeViolation(min));
    }
    Ok(h)
}

/// Pullback `dφᵀ g dφ`; errors unless positive definite.
pub fn induced_metric(patch: &ImmersedPatch, u: &[f64]) -> Result<Matrix> {
    let jet = patch.jet(u)?;
    let g = metric_eval(patch.chart.as_ref(), jet.x.as_slice())?;
    induced_from(&g, &jet.d)
}

/// Columns orthonormal for `h`: `c = L⁻ᵀ` with `h = L Lᵀ`.
pub fn orthonormal_coefficients(h: &Matrix) -> Result<Matrix> {
    let chol = h
        .clone()
        .cholesky()
        .ok_or_else(|| GeomError::SpacelikeViolation(SymmetricEigen::new(h.clone()).eigenvalues.min()))?;
    let l = chol.l();
    let inv = l
        .try_inverse()
        .ok_or_else(|| GeomError::SpacelikeViolation(0.0))?;
    Ok(inv.transpose())
}

/// An `h`-orthonormal frame rotated by a seeded random orthogonal matrix.
pub fn random_orthonormal_coefficients(h: &Matrix, seed: u64, index: u64) -> Result<Matrix> {
    let k = h.nrows();
    let mut rng = rng_for(seed, index);
    let a = Matrix::from_fn(k, k, |_, _| rng.gen_range(-1.0..1.0));
    let q = a.qr().q();
    Ok(orthonormal_coefficients(h)? * q)
}

/// Normal part of `w`: `w − dφ h⁻¹ dφᵀ g w`.
fn normal_part(g: &Matrix, d: &Matrix, h_inv: &Matrix, w: &Vector) -> Vector {
    let coeff = h_inv * (d.transpose() * (g * w));
    w - d * coeff
}

pub(crate) fn extrinsic_from_jet(patch: &ImmersedPatch, u: &[f64], jet: PatchJet) -> Result<ExtrinsicData> {
    let chart = patch.chart.as_ref();
    let k = patch.k;
    let n = chart.dim();
    let g = metric_eval(chart, jet.x.as_slice())?;
    let h = induced_from(&g, &jet.d)?;
    let h_inv = h.clone().try_inverse().ok_or(GeomError::SpacelikeViolation(0.0))?;
    let conn = christoffel(chart, jet.x.as_slice())?;
    let mut ii = Vec::with_capacity(k * k);
    let mut gamma = vec![0.0; n];
    for a in 0..k {
        for b in 0..k {
            let da = jet.d.column(a).into_owned();
            let db = jet.d.column(b).into_owned();
            conn.contract(da.as_slice(), db.as_slice(), &mut gamma);
            let cov = &jet.dd[a * k + b] + Vector::from_column_slice(&gamma);
            ii.push(-normal_part(&g, &jet.d, &h_inv, &cov));
        }
    }
    // symmetrize away round-off in the mixed partials
    for a in 0..k {
        for b in a + 1..k {
            let s = (&ii[a * k + b] + &ii[b * k + a]) * 0.5;
            ii[a * k + b] = s.clone();
            ii[b * k + a] = s;
        }
    }
    let mut mean = Vector::zeros(n);
    for a in 0..k {
        for b in 0..k {
            mean += &ii[a * k + b] * h_inv[(a, b)];
        }
    }
    mean /= k as f64;
    let scale = euclideanized(&g);
    let mut residual: f64 = 0.0;
    for v in &ii {
        for c in 0..k {
            let t = jet.d.column(c).into_owned();
            let norms = bilinear(&scale, v, v).sqrt().max(1.0) * bilinear(&scale, &t, &t).sqrt().max(1.0);
            residual = residual.max(bilinear(&g, v, &t).abs() / norms);
        }
    }
    Ok(ExtrinsicData {
        u: u.to_vec(),
        point: jet.x,
        g,
        tangent: jet.d,
        induced_metric: h,
        second_fundamental: ii,
        mean_curvature: mean,
        tangential_residual: residual,
    })
}

/// `II(X, Y) = −(∇̄_X Y)^⊥` and `H = (1/k) tr II`.
pub fn second_fundamental_form(patch: &ImmersedPatch, u: &[f64]) -> Result<ExtrinsicData> {
    let jet = patch.jet(u)?;
    extrinsic_from_jet(patch, u, jet)
}

pub fn mean_curvature(patch: &ImmersedPatch, u: &[f64]) -> Result<TangentVector> {
    Ok(second_fundamental_form(patch, u)?.mean_curvature_vector())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrappedClass {
    WeaklyFutureTrapped,
    /// Causal, past-pointing `H`.
    WeaklyPastTrapped,
    /// `H = 0` in codimension two.
    Marginally,
    /// `H = 0` in other codimensions.
    ZeroH,
    UntrappedSpacelikeH,
}

impl TrappedClass {
    pub fn label(self) -> &'static str {
        match self {
            TrappedClass::WeaklyFutureTrapped => "weakly_future_trapped",
            TrappedClass::WeaklyPastTrapped => "weakly_past_trapped",
            TrappedClass::Marginally => "marginally",
            TrappedClass::ZeroH => "zero_h",
            TrappedClass::UntrappedSpacelikeH => "untrapped_spacelike_h",
        }
    }

    /// Admissible for the weakly-trapped audit (`H` zero or causal future).
    pub fn future_or_zero(self) -> bool {
        matches!(
            self,
            TrappedClass::WeaklyFutureTrapped | TrappedClass::Marginally | TrappedClass::ZeroH
        )
    }
}

/// Classification against the chart's declared future `∂_t`. `tol` is
/// an absolute threshold on `|H|` in the euclideanized metric; null-ness
/// is decided relative to `|H|²`.
pub fn classify_trapped(patch: &ImmersedPatch, data: &ExtrinsicData, tol: f64) -> Result<TrappedClass> {
    let chart = patch.chart.as_ref();
    let t = chart
        .time_index()
        .filter(|_| chart.index() == 1)
        .ok_or_else(|| GeomError::InvalidArgument(format!("chart {} has no time orientation", chart.name())))?;
    let hv = &data.mean_curvature;
    let size2 = bilinear(&euclideanized(&data.g), hv, hv);
    if size2.sqrt() <= tol {
        return Ok(if patch.codimension() == 2 {
            TrappedClass::Marginally
        } else {
            TrappedClass::ZeroH
        });
    }
    let q = bilinear(&data.g, hv, hv);
    if q > 1e-9 * size2 {
        return Ok(TrappedClass::UntrappedSpacelikeH);
    }
    let future = data.g.column(t).dot(hv);
    Ok(if future < 0.0 {
        TrappedClass::WeaklyFutureTrapped
    } else {
        TrappedClass::WeaklyPastTrapped
    })
}
