use nalgebra::DMatrix;

use crate::error::{GeomError, Result};
use crate::linalg::{bilinear, condition_number, Point, Vector};
use crate::manifolds::{metric_eval, MetricChart};

use super::arc::{flow, flow_with_variations, GeodesicOptions};

/// Star-shaped region `{ t·u : 0 <= t < radius(u) }` in the tangent space
/// at `center`, with a constant radius profile measured in the coordinate
/// norm of initial velocities.
#[derive(Clone, Debug, PartialEq)]
pub struct StarRegion {
    pub center: Point,
    pub radius: f64,
    pub margin: f64,
}

impl StarRegion {
    pub fn new(center: Point, radius: f64) -> Self {
        StarRegion {
            center,
            radius,
            margin: 0.0,
        }
    }

    /// Maximal parameter along the direction `u` (any nonzero vector).
    pub fn radius_along(&self, _u: &Vector) -> f64 {
        self.radius
    }

    pub fn contains_velocity(&self, v: &Vector) -> bool {
        v.norm() < self.radius_along(v) - self.margin
    }
}

/// Newton shooting controls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShootingOptions {
    pub max_iter: usize,
    /// Absolute endpoint residual accepted as converged, scaled by `1 + |p|`.
    pub tol: f64,
    /// Condition number above which the shooting Jacobian counts as singular.
    pub cond_limit: f64,
    /// Number of halvings of the homotopy step before giving up.
    pub homotopy_levels: usize,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions {
            max_iter: 30,
            tol: 1e-13,
            cond_limit: 1e10,
            homotopy_levels: 4,
        }
    }
}

/// Integration and shooting tolerances used throughout the crate.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Numerics {
    pub geodesic: GeodesicOptions,
    pub shooting: ShootingOptions,
}

/// `exp_q(v) = γ_{q,v}(1)`.
pub fn exp_map(chart: &dyn MetricChart, q: &Point, v: &Vector, opts: &GeodesicOptions) -> Result<Point> {
    if v.iter().all(|&c| c == 0.0) {
        metric_eval(chart, q.as_slice())?;
        return Ok(q.clone());
    }
    flow(chart, q, v, 1.0, opts).map(|(x, _)| x)
}

/// `exp_q(v)` restricted to a star region.
pub fn exp_map_in(chart: &dyn MetricChart, region: &StarRegion, v: &Vector, opts: &GeodesicOptions) -> Result<Point> {
    if !region.contains_velocity(v) {
        return Err(GeomError::OutsideRegion {
            norm: v.norm(),
            radius: region.radius_along(v),
        });
    }
    exp_map(chart, &region.center, v, opts)
}

fn newton(chart: &dyn MetricChart, q: &Point, p: &Point, guess: Vector, num: &Numerics) -> Result<Vector> {
    let n = chart.dim();
    let opts = &num.shooting;
    let tol = opts.tol * (1.0 + p.norm());
    let zeros = DMatrix::zeros(n, n);
    let ident = DMatrix::identity(n, n);
    let mut v = guess;
    let mut prev: Option<(Vector, f64, Vector)> = None;
    let mut damping = 1.0;
    let mut last_residual = f64::INFINITY;
    for _ in 0..opts.max_iter {
        let attempt = flow_with_variations(chart, q, &v, &zeros, &ident, 1.0, &num.geodesic);
        let flowed = match attempt {
            Ok(f) => Some(f),
            Err(GeomError::LeftDomain { .. }) | Err(GeomError::OutOfDomain(_)) | Err(GeomError::TooManySteps(_)) => None,
            Err(e) => return Err(e),
        };
        let residual_vec = flowed.as_ref().map(|f| &f.position - p);
        let residual = residual_vec.as_ref().map_or(f64::INFINITY, |r| r.norm());
        if let Some((v_prev, r_prev, step)) = &prev {
            if residual > *r_prev && damping > 1.0 / 256.0 {
                damping *= 0.5;
                v = v_prev + step * damping;
                continue;
            }
        }
        let (flowed, residual_vec) = match (flowed, residual_vec) {
            (Some(f), Some(r)) => (f, r),
            _ => {
                return Err(GeomError::NoConvergence {
                    iterations: 0,
                    residual: f64::INFINITY,
                })
            }
        };
        last_residual = residual;
        if residual <= tol {
            return Ok(v);
        }
        let cond = condition_number(&flowed.dx);
        if cond > opts.cond_limit {
            return Err(GeomError::SingularJacobian { condition: cond });
        }
        let step = flowed
            .dx
            .clone()
            .lu()
            .solve(&(-&residual_vec))
            .ok_or(GeomError::SingularJacobian {
                condition: f64::INFINITY,
            })?;
        if step.norm() <= 8.0 * f64::EPSILON * (1.0 + v.norm()) {
            // stagnated at the integration noise floor
            if residual <= 1e3 * tol {
                return Ok(v);
            }
            break;
        }
        damping = 1.0;
        prev = Some((v.clone(), residual, step.clone()));
        v += step;
    }
    Err(GeomError::NoConvergence {
        iterations: opts.max_iter,
        residual: last_residual,
    })
}

/// Initial velocity `v` with `exp_q(v) = p` by Newton shooting; falls back
/// to continuation along the coordinate segment from `q` to `p` when the
/// direct iteration fails.
pub fn inverse_exp(
    chart: &dyn MetricChart,
    q: &Point,
    p: &Point,
    guess: Option<&Vector>,
    num: &Numerics,
) -> Result<Vector> {
    metric_eval(chart, q.as_slice())?;
    metric_eval(chart, p.as_slice())?;
    if q == p {
        return Ok(Vector::zeros(chart.dim()));
    }
    let start = guess.cloned().unwrap_or_else(|| p - q);
    match newton(chart, q, p, start, num) {
        Ok(v) => Ok(v),
        Err(e @ GeomError::SingularJacobian { .. }) => Err(e),
        Err(first_err) => {
            let mut stages = 4usize;
            for _ in 0..num.shooting.homotopy_levels {
                if let Ok(v) = continuation(chart, q, p, stages, num) {
                    return Ok(v);
                }
                stages *= 2;
            }
            Err(first_err)
        }
    }
}

fn continuation(chart: &dyn MetricChart, q: &Point, p: &Point, stages: usize, num: &Numerics) -> Result<Vector> {
    let delta = p - q;
    let mut v = &delta / stages as f64;
    for s in 1..=stages {
        let target = q + &delta * (s as f64 / stages as f64);
        v = newton(chart, q, &target, v.clone(), num)?;
        if s < stages {
            v *= (s + 1) as f64 / s as f64;
        }
    }
    Ok(v)
}

/// `inverse_exp` constrained to a star region around `region.center`.
pub fn inverse_exp_in(
    chart: &dyn MetricChart,
    region: &StarRegion,
    p: &Point,
    guess: Option<&Vector>,
    num: &Numerics,
) -> Result<Vector> {
    let v = inverse_exp(chart, &region.center, p, guess, num)?;
    if !region.contains_velocity(&v) {
        return Err(GeomError::OutsideRegion {
            norm: v.norm(),
            radius: region.radius_along(&v),
        });
    }
    Ok(v)
}

/// Signed energy `E_q(p) = g(v, v)` for `v = exp_q^{-1}(p)`.
pub fn signed_energy(chart: &dyn MetricChart, q: &Point, p: &Point, num: &Numerics) -> Result<f64> {
    let v = inverse_exp(chart, q, p, None, num)?;
    let g = metric_eval(chart, q.as_slice())?;
    Ok(bilinear(&g, &v, &v))
}

/// Signed energy together with the shooting velocity, warm-started from `guess`.
pub fn signed_energy_with(
    chart: &dyn MetricChart,
    q: &Point,
    p: &Point,
    guess: Option<&Vector>,
    num: &Numerics,
) -> Result<(f64, Vector)> {
    let v = inverse_exp(chart, q, p, guess, num)?;
    let g = metric_eval(chart, q.as_slice())?;
    Ok((bilinear(&g, &v, &v), v))
}
