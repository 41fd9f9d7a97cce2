use std::fmt;
use std::sync::Arc;

use crate::error::{GeomError, Result};
use crate::linalg::Matrix;

/// Shared, immutable handle to a chart.
pub type ChartRef = Arc<dyn MetricChart>;

/// Metric components together with their first (and optionally second)
/// coordinate partial derivatives at one point.
///
/// `dg[l]` holds `∂_l g_ij`; `ddg[l * dim + m]` holds `∂_l ∂_m g_ij`.
#[derive(Clone, Debug)]
pub struct MetricJet {
    pub g: Matrix,
    pub dg: Vec<Matrix>,
    pub ddg: Option<Vec<Matrix>>,
}

/// An analytic coordinate chart of a semi-Riemannian manifold.
pub trait MetricChart: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    /// Number of negative eigenvalues of the metric.
    fn index(&self) -> usize;

    /// Signed distance-like margin to the boundary of the coordinate domain;
    /// positive in the interior, `f64::INFINITY` for unbounded directions.
    fn domain_margin(&self, x: &[f64]) -> f64;

    /// Metric components at `x`. Callers are expected to check the domain.
    fn metric_at(&self, x: &[f64]) -> Matrix;

    /// Analytic metric jet; `None` makes the evaluators fall back to
    /// finite differences.
    fn analytic_jet(&self, _x: &[f64], _second_order: bool) -> Option<MetricJet> {
        None
    }

    /// Coordinate whose unit vector is declared future-pointing.
    fn time_index(&self) -> Option<usize> {
        None
    }

    /// Typical coordinate length used to size finite-difference steps.
    fn coordinate_scale(&self) -> f64 {
        1.0
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().all(|c| c.is_finite()) && self.domain_margin(x) > 0.0
    }
}

pub(crate) fn check_domain(chart: &dyn MetricChart, x: &[f64]) -> Result<()> {
    if chart.in_domain(x) {
        Ok(())
    } else {
        Err(GeomError::OutOfDomain(x.to_vec()))
    }
}

/// Step used by the finite-difference fallback, `eps^(1/5)` times the chart scale.
pub fn fd_step(chart: &dyn MetricChart) -> f64 {
    f64::EPSILON.powf(0.2) * chart.coordinate_scale()
}

fn central_4th<F>(f: &F, x: &[f64], l: usize, h: f64) -> Matrix
where
    F: Fn(&[f64]) -> Matrix,
{
    let mut y = x.to_vec();
    let mut at = |s: f64| {
        y[l] = x[l] + s;
        f(&y)
    };
    let m2 = at(-2.0 * h);
    let m1 = at(-h);
    let p1 = at(h);
    let p2 = at(2.0 * h);
    (m2 - m1 * 8.0 + p1 * 8.0 - p2) / (12.0 * h)
}

/// Fourth-order central difference of a matrix field along coordinate `l`,
/// improved by one Richardson extrapolation step.
pub fn richardson_derivative<F>(f: &F, x: &[f64], l: usize, h: f64) -> Matrix
where
    F: Fn(&[f64]) -> Matrix,
{
    let coarse = central_4th(f, x, l, h);
    let fine = central_4th(f, x, l, 0.5 * h);
    (fine * 16.0 - coarse) / 15.0
}

/// Metric jet at `x`, analytic when the chart provides one and finite
/// differences otherwise.
pub fn metric_jet(chart: &dyn MetricChart, x: &[f64], second_order: bool) -> Result<MetricJet> {
    check_domain(chart, x)?;
    if let Some(jet) = chart.analytic_jet(x, second_order) {
        if !second_order || jet.ddg.is_some() {
            return Ok(jet);
        }
    }
    finite_difference_jet(chart, x, second_order)
}

/// Finite-difference jet regardless of analytic availability; also used as
/// an oracle against the analytic jets.
pub fn finite_difference_jet(
    chart: &dyn MetricChart,
    x: &[f64],
    second_order: bool,
) -> Result<MetricJet> {
    check_domain(chart, x)?;
    let n = chart.dim();
    let h = fd_step(chart);
    let reach = if second_order { 4.0 * h } else { 2.0 * h };
    if chart.domain_margin(x) <= reach {
        return Err(GeomError::StencilExitsDomain(x.to_vec()));
    }
    let metric = |y: &[f64]| chart.metric_at(y);
    let dg: Vec<Matrix> = (0..n).map(|l| richardson_derivative(&metric, x, l, h)).collect();
    let ddg = if second_order {
        let mut out = Vec::with_capacity(n * n);
        for l in 0..n {
            let first = |y: &[f64]| richardson_derivative(&metric, y, l, h);
            for m in 0..n {
                out.push(richardson_derivative(&first, x, m, h));
            }
        }
        // symmetrize the mixed partials
        for l in 0..n {
            for m in (l + 1)..n {
                let avg = (&out[l * n + m] + &out[m * n + l]) * 0.5;
                out[l * n + m] = avg.clone();
                out[m * n + l] = avg;
            }
        }
        Some(out)
    } else {
        None
    };
    Ok(MetricJet {
        g: chart.metric_at(x),
        dg,
        ddg,
    })
}
