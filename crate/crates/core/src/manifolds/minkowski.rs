use super::chart::{MetricChart, MetricJet};
use crate::linalg::Matrix;

/// Minkowski space `E^n_1` in inertial coordinates `(x_1, …, x_{n-1}, t)`;
/// the time coordinate comes last.
#[derive(Clone, Debug)]
pub struct Minkowski {
    name: String,
    dim: usize,
}

impl Minkowski {
    pub fn new(dim: usize) -> Self {
        Minkowski {
            name: format!("minkowski:{dim}"),
            dim,
        }
    }
}

impl MetricChart for Minkowski {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn index(&self) -> usize {
        1
    }

    fn domain_margin(&self, _x: &[f64]) -> f64 {
        f64::INFINITY
    }

    fn metric_at(&self, _x: &[f64]) -> Matrix {
        let mut g = Matrix::identity(self.dim, self.dim);
        g[(self.dim - 1, self.dim - 1)] = -1.0;
        g
    }

    fn analytic_jet(&self, x: &[f64], second_order: bool) -> Option<MetricJet> {
        let n = self.dim;
        Some(MetricJet {
            g: self.metric_at(x),
            dg: vec![Matrix::zeros(n, n); n],
            ddg: second_order.then(|| vec![Matrix::zeros(n, n); n * n]),
        })
    }

    fn time_index(&self) -> Option<usize> {
        Some(self.dim - 1)
    }
}
