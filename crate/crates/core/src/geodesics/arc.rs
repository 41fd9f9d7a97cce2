use crate::error::{GeomError, Result};
use crate::linalg::{bilinear, Point, Vector};
use crate::manifolds::{metric_eval, metric_jet, ChartRef, Christoffel, MetricChart};

use super::integrator::{integrate, IntegratorOptions, Solution, StepControl};

/// Tolerances for geodesic integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeodesicOptions {
    /// Local error tolerance per step (absolute and relative).
    pub tol: f64,
    pub max_steps: usize,
    /// When set, integrate with this many equal steps per unit parameter
    /// instead of adaptive control.
    pub fixed_steps_per_unit: Option<usize>,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        GeodesicOptions {
            tol: 1e-12,
            max_steps: 200_000,
            fixed_steps_per_unit: None,
        }
    }
}

impl GeodesicOptions {
    pub fn with_tol(tol: f64) -> Self {
        GeodesicOptions {
            tol,
            ..Default::default()
        }
    }

    pub(crate) fn integrator(&self, span: f64, dense: bool) -> IntegratorOptions {
        let mut opts = match self.fixed_steps_per_unit {
            Some(per_unit) => IntegratorOptions::fixed(((per_unit as f64) * span.abs()).ceil().max(1.0) as usize),
            None => IntegratorOptions::adaptive(self.tol),
        };
        if let StepControl::Adaptive { .. } = opts.control {
            opts.max_steps = self.max_steps;
        }
        opts.dense = dense;
        opts
    }
}

fn connection_at(chart: &dyn MetricChart, x: &[f64], second_order: bool) -> Result<Christoffel> {
    if !chart.in_domain(x) {
        return Err(GeomError::OutOfDomain(x.to_vec()));
    }
    Christoffel::from_jet(&metric_jet(chart, x, second_order)?)
}

/// Right-hand side of the geodesic equation on the state `(x, v)`.
pub(crate) fn geodesic_rhs(chart: &dyn MetricChart) -> impl FnMut(f64, &[f64], &mut [f64]) -> Result<()> + '_ {
    let n = chart.dim();
    let mut acc = vec![0.0; n];
    move |_t, y, dy| {
        let (x, v) = y.split_at(n);
        let conn = connection_at(chart, x, false)?;
        conn.contract(v, v, &mut acc);
        dy[..n].copy_from_slice(v);
        for k in 0..n {
            dy[n + k] = -acc[k];
        }
        Ok(())
    }
}

/// Geodesic equation coupled with `m` columns of its linearization; the
/// state is `(x, v, X_1..X_m, V_1..V_m)`.
pub(crate) fn variational_rhs(
    chart: &dyn MetricChart,
    m: usize,
) -> impl FnMut(f64, &[f64], &mut [f64]) -> Result<()> + '_ {
    let n = chart.dim();
    let mut acc = vec![0.0; n];
    move |_t, y, dy| {
        let x = &y[..n];
        let v = &y[n..2 * n];
        let conn = connection_at(chart, x, true)?;
        conn.contract(v, v, &mut acc);
        dy[..n].copy_from_slice(v);
        for k in 0..n {
            dy[n + k] = -acc[k];
        }
        // A^k_l = ∂_l Γ^k_ab v^a v^b,  B^k_b = 2 Γ^k_ab v^a
        let mut a_mat = vec![0.0; n * n];
        let mut b_mat = vec![0.0; n * n];
        for k in 0..n {
            for l in 0..n {
                let mut s = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        s += conn.deriv(l, k, a, b) * v[a] * v[b];
                    }
                }
                a_mat[k * n + l] = s;
            }
            for b in 0..n {
                let mut s = 0.0;
                for a in 0..n {
                    s += conn.get(k, a, b) * v[a];
                }
                b_mat[k * n + b] = 2.0 * s;
            }
        }
        let xs = 2 * n;
        let vs = 2 * n + n * m;
        for j in 0..m {
            let xj = &y[xs + j * n..xs + (j + 1) * n];
            let vj = &y[vs + j * n..vs + (j + 1) * n];
            for k in 0..n {
                dy[xs + j * n + k] = vj[k];
                let mut s = 0.0;
                for l in 0..n {
                    s += a_mat[k * n + l] * xj[l] + b_mat[k * n + l] * vj[l];
                }
                dy[vs + j * n + k] = -s;
            }
        }
        Ok(())
    }
}

/// Position and velocity of the geodesic `γ_{p,v}` at parameter `t`.
pub fn flow(chart: &dyn MetricChart, p: &Point, v: &Vector, t: f64, opts: &GeodesicOptions) -> Result<(Point, Vector)> {
    let n = chart.dim();
    check_lengths(chart, p, v)?;
    metric_eval(chart, p.as_slice())?;
    let mut y0 = p.as_slice().to_vec();
    y0.extend_from_slice(v.as_slice());
    let sol = integrate(geodesic_rhs(chart), 0.0, &y0, t, &opts.integrator(t, false))?;
    Ok((
        Point::from_column_slice(&sol.y_end[..n]),
        Vector::from_column_slice(&sol.y_end[n..]),
    ))
}

/// Geodesic flow together with the coordinate linearization along it.
#[derive(Clone, Debug)]
pub struct VariationalFlow {
    pub position: Point,
    pub velocity: Vector,
    /// `∂x(t)` for each variation column (n × m).
    pub dx: nalgebra::DMatrix<f64>,
    /// `∂v(t)` for each variation column (n × m).
    pub dv: nalgebra::DMatrix<f64>,
}

pub fn flow_with_variations(
    chart: &dyn MetricChart,
    p: &Point,
    v: &Vector,
    dx0: &nalgebra::DMatrix<f64>,
    dv0: &nalgebra::DMatrix<f64>,
    t: f64,
    opts: &GeodesicOptions,
) -> Result<VariationalFlow> {
    let n = chart.dim();
    check_lengths(chart, p, v)?;
    let m = dx0.ncols();
    let mut y0 = Vec::with_capacity(2 * n + 2 * n * m);
    y0.extend_from_slice(p.as_slice());
    y0.extend_from_slice(v.as_slice());
    y0.extend_from_slice(dx0.as_slice());
    y0.extend_from_slice(dv0.as_slice());
    let sol = integrate(variational_rhs(chart, m), 0.0, &y0, t, &opts.integrator(t, false))?;
    let y = &sol.y_end;
    Ok(VariationalFlow {
        position: Point::from_column_slice(&y[..n]),
        velocity: Vector::from_column_slice(&y[n..2 * n]),
        dx: nalgebra::DMatrix::from_column_slice(n, m, &y[2 * n..2 * n + n * m]),
        dv: nalgebra::DMatrix::from_column_slice(n, m, &y[2 * n + n * m..]),
    })
}

fn check_lengths(chart: &dyn MetricChart, p: &Point, v: &Vector) -> Result<()> {
    if p.len() != chart.dim() || v.len() != chart.dim() {
        return Err(GeomError::InvalidArgument(format!(
            "expected {}-dimensional point and velocity",
            chart.dim()
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArcStats {
    pub steps: usize,
    pub rejected: usize,
    /// Largest `|g(γ',γ') − g(v0,v0)|` over accepted steps.
    pub max_norm_drift: f64,
}

/// A numerically integrated geodesic `γ: [0, t_max] → M` with dense output.
#[derive(Clone, Debug)]
pub struct GeodesicArc {
    chart: ChartRef,
    pub p0: Point,
    pub v0: Vector,
    pub t_max: f64,
    pub stats: ArcStats,
    solution: Solution,
}

impl GeodesicArc {
    pub fn chart(&self) -> &ChartRef {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.p0.len()
    }

    /// `(γ(t), γ'(t))`; `t = 0` returns the initial data exactly.
    pub fn state(&self, t: f64) -> Option<(Point, Vector)> {
        if t == 0.0 {
            return Some((self.p0.clone(), self.v0.clone()));
        }
        let n = self.dim();
        let y = if t == self.t_max {
            self.solution.y_end.clone()
        } else {
            self.solution.eval(t)?
        };
        Some((Point::from_column_slice(&y[..n]), Vector::from_column_slice(&y[n..])))
    }

    pub fn position(&self, t: f64) -> Option<Point> {
        self.state(t).map(|s| s.0)
    }

    pub fn velocity(&self, t: f64) -> Option<Vector> {
        self.state(t).map(|s| s.1)
    }

    /// `g(γ'(0), γ'(0))`.
    pub fn speed_squared(&self) -> f64 {
        let g = self.chart.metric_at(self.p0.as_slice());
        bilinear(&g, &self.v0, &self.v0)
    }

    /// Accepted step times.
    pub fn step_times(&self) -> &[f64] {
        &self.solution.ts
    }
}

/// Integrates the geodesic with initial data `(p0, v0)` on `[0, t_max]`.
pub fn integrate_geodesic(
    chart: &ChartRef,
    p0: &Point,
    v0: &Vector,
    t_max: f64,
    opts: &GeodesicOptions,
) -> Result<GeodesicArc> {
    let n = chart.dim();
    check_lengths(chart.as_ref(), p0, v0)?;
    if !(t_max >= 0.0) {
        return Err(GeomError::InvalidArgument("t_max must be non-negative".into()));
    }
    let g0 = metric_eval(chart.as_ref(), p0.as_slice())?;
    let e0 = bilinear(&g0, v0, v0);
    let mut y0 = p0.as_slice().to_vec();
    y0.extend_from_slice(v0.as_slice());
    let sol = integrate(
        geodesic_rhs(chart.as_ref()),
        0.0,
        &y0,
        t_max,
        &opts.integrator(t_max, true),
    )?;
    let mut drift: f64 = 0.0;
    for y in &sol.ys {
        let g = chart.metric_at(&y[..n]);
        let v = Vector::from_column_slice(&y[n..]);
        drift = drift.max((bilinear(&g, &v, &v) - e0).abs());
    }
    Ok(GeodesicArc {
        chart: chart.clone(),
        p0: p0.clone(),
        v0: v0.clone(),
        t_max,
        stats: ArcStats {
            steps: sol.steps,
            rejected: sol.rejected,
            max_norm_drift: drift,
        },
        solution: sol,
    })
}
