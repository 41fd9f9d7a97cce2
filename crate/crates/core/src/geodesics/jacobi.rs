use nalgebra::DMatrix;

use crate::error::Result;
use crate::linalg::{Point, Vector};
use crate::manifolds::{christoffel, MetricChart};

use super::arc::{variational_rhs, GeodesicArc};
use super::integrator::integrate;
use super::GeodesicOptions;

/// A Jacobi field along a geodesic arc, obtained from the linearized
/// geodesic flow; solves `J'' + R(γ', J)γ' = 0`.
#[derive(Clone, Debug)]
pub struct JacobiField {
    n: usize,
    t_max: f64,
    solution: super::integrator::Solution,
}

impl JacobiField {
    /// `(γ(t), γ'(t), J(t))` in coordinates.
    fn raw(&self, t: f64) -> Option<Vec<f64>> {
        if t == self.t_max {
            return Some(self.solution.y_end.clone());
        }
        self.solution.eval(t)
    }

    pub fn value(&self, t: f64) -> Option<Vector> {
        let n = self.n;
        self.raw(t).map(|y| Vector::from_column_slice(&y[2 * n..3 * n]))
    }

    pub fn base_point(&self, t: f64) -> Option<Point> {
        let n = self.n;
        self.raw(t).map(|y| Point::from_column_slice(&y[..n]))
    }

    /// Covariant derivative `DJ/dt = dJ/dt + Γ(γ', J)`.
    pub fn covariant_derivative(&self, chart: &dyn MetricChart, t: f64) -> Result<Option<Vector>> {
        let n = self.n;
        let Some(y) = self.raw(t) else { return Ok(None) };
        let conn = christoffel(chart, &y[..n])?;
        let mut corr = vec![0.0; n];
        conn.contract(&y[n..2 * n], &y[2 * n..3 * n], &mut corr);
        Ok(Some(Vector::from_fn(n, |k, _| y[3 * n + k] + corr[k])))
    }
}

/// Jacobi field along `arc` with `J(0) = j0` and covariant `J'(0) = dj0`.
pub fn jacobi_transport(arc: &GeodesicArc, j0: &Vector, dj0: &Vector, opts: &GeodesicOptions) -> Result<JacobiField> {
    let chart = arc.chart().as_ref();
    let n = chart.dim();
    // coordinate derivative of J at t = 0 from the covariant one
    let conn = christoffel(chart, arc.p0.as_slice())?;
    let mut corr = vec![0.0; n];
    conn.contract(arc.v0.as_slice(), j0.as_slice(), &mut corr);
    let dv0 = Vector::from_fn(n, |k, _| dj0[k] - corr[k]);
    let mut y0 = arc.p0.as_slice().to_vec();
    y0.extend_from_slice(arc.v0.as_slice());
    y0.extend_from_slice(j0.as_slice());
    y0.extend_from_slice(dv0.as_slice());
    let sol = integrate(
        variational_rhs(chart, 1),
        0.0,
        &y0,
        arc.t_max,
        &opts.integrator(arc.t_max, true),
    )?;
    Ok(JacobiField {
        n,
        t_max: arc.t_max,
        solution: sol,
    })
}

/// Differential of `exp_q` at `v` (the shooting Jacobian), n × n.
pub fn exp_differential(chart: &dyn MetricChart, q: &Point, v: &Vector, opts: &GeodesicOptions) -> Result<DMatrix<f64>> {
    let n = chart.dim();
    let f = super::arc::flow_with_variations(chart, q, v, &DMatrix::zeros(n, n), &DMatrix::identity(n, n), 1.0, opts)?;
    Ok(f.dx)
}
