use serde::{Deserialize, Serialize};

use super::chart::{MetricChart, MetricJet};
use crate::error::{GeomError, Result};
use crate::linalg::Matrix;

/// Positive warping function together with its first two derivatives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Warping {
    Constant { value: f64 },
    Cosh { amplitude: f64, rate: f64 },
    Sinh { amplitude: f64, rate: f64 },
    Sin { amplitude: f64, rate: f64 },
    Cos { amplitude: f64, rate: f64 },
    Exp { amplitude: f64, rate: f64 },
    /// `Σ c_j τ^j`
    Polynomial { coefficients: Vec<f64> },
}

impl Warping {
    pub fn cosh() -> Self {
        Warping::Cosh { amplitude: 1.0, rate: 1.0 }
    }

    pub fn sin() -> Self {
        Warping::Sin { amplitude: 1.0, rate: 1.0 }
    }

    pub fn constant(value: f64) -> Self {
        Warping::Constant { value }
    }

    /// `(f, f', f'')` at `tau`.
    pub fn eval(&self, tau: f64) -> (f64, f64, f64) {
        match *self {
            Warping::Constant { value } => (value, 0.0, 0.0),
            Warping::Cosh { amplitude: a, rate: r } => {
                let (c, s) = ((r * tau).cosh(), (r * tau).sinh());
                (a * c, a * r * s, a * r * r * c)
            }
            Warping::Sinh { amplitude: a, rate: r } => {
                let (c, s) = ((r * tau).cosh(), (r * tau).sinh());
                (a * s, a * r * c, a * r * r * s)
            }
            Warping::Sin { amplitude: a, rate: r } => {
                let (s, c) = (r * tau).sin_cos();
                (a * s, a * r * c, -a * r * r * s)
            }
            Warping::Cos { amplitude: a, rate: r } => {
                let (s, c) = (r * tau).sin_cos();
                (a * c, -a * r * s, -a * r * r * c)
            }
            Warping::Exp { amplitude: a, rate: r } => {
                let e = (r * tau).exp();
                (a * e, a * r * e, a * r * r * e)
            }
            Warping::Polynomial { ref coefficients } => {
                let (mut f, mut d1, mut d2) = (0.0, 0.0, 0.0);
                for &c in coefficients.iter().rev() {
                    d2 = d2 * tau + 2.0 * d1;
                    d1 = d1 * tau + f;
                    f = f * tau + c;
                }
                (f, d1, d2)
            }
        }
    }

    pub fn value(&self, tau: f64) -> f64 {
        self.eval(tau).0
    }
}

/// Open interval `(lower, upper)`; `None` stands for an infinite end.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interval {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Self {
        let wrap = |v: f64| if v.is_finite() { Some(v) } else { None };
        Interval {
            lower: wrap(lower),
            upper: wrap(upper),
        }
    }

    pub fn real_line() -> Self {
        Interval { lower: None, upper: None }
    }

    pub fn lo(&self) -> f64 {
        self.lower.unwrap_or(f64::NEG_INFINITY)
    }

    pub fn hi(&self) -> f64 {
        self.upper.unwrap_or(f64::INFINITY)
    }

    pub fn margin(&self, tau: f64) -> f64 {
        (tau - self.lo()).min(self.hi() - tau)
    }

    /// Compact working subinterval: `[-3, 3]` clipped to the interval with
    /// an inset of `inset` at finite ends.
    pub fn compact_part(&self, inset: f64) -> (f64, f64) {
        let lo = self.lower.map_or(-3.0, |a| (a + inset).max(-3.0));
        let hi = self.upper.map_or(3.0, |b| (b - inset).min(3.0));
        (lo, hi)
    }
}

/// Warped product `-I ×_f F` with `F` a space form of curvature
/// `fiber_curvature` and dimension `fiber_dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WarpedProductSpec {
    pub interval: Interval,
    pub warping: Warping,
    pub fiber_dim: usize,
    /// Ignored when `fiber_dim == 1`.
    pub fiber_curvature: f64,
}

impl WarpedProductSpec {
    pub fn new(interval: Interval, warping: Warping, fiber_dim: usize, fiber_curvature: f64) -> Self {
        WarpedProductSpec {
            interval,
            warping,
            fiber_dim,
            fiber_curvature,
        }
    }

    /// Effective fiber curvature used by the conformal fiber model.
    pub fn model_curvature(&self) -> f64 {
        if self.fiber_dim == 1 {
            0.0
        } else {
            self.fiber_curvature
        }
    }

    /// Checks dimensions and positivity of the warping on a dense grid of
    /// the compact working subinterval.
    pub fn validate(&self) -> Result<()> {
        if self.fiber_dim == 0 {
            return Err(GeomError::InvalidArgument("fiber_dim must be at least 1".into()));
        }
        if self.interval.lo() >= self.interval.hi() {
            return Err(GeomError::InvalidArgument("empty warping interval".into()));
        }
        let (lo, hi) = self.interval.compact_part(1e-3);
        for i in 0..=1000 {
            let tau = lo + (hi - lo) * i as f64 / 1000.0;
            let f = self.warping.value(tau);
            if !(f > 0.0) {
                return Err(GeomError::InvalidArgument(format!(
                    "warping is not positive at tau = {tau} (f = {f})"
                )));
            }
        }
        Ok(())
    }
}

/// Chart of a warped product with coordinates `(τ, x_1, …, x_m)`; the
/// fiber carries the conformally flat space-form metric
/// `|dx|² / (1 + C|x|²/4)²`, which is the identity at `x = 0`.
#[derive(Clone, Debug)]
pub struct WarpedProductChart {
    name: String,
    spec: WarpedProductSpec,
    margin: f64,
}

impl WarpedProductChart {
    pub fn new(name: impl Into<String>, spec: WarpedProductSpec) -> Result<Self> {
        spec.validate()?;
        Ok(WarpedProductChart {
            name: name.into(),
            spec,
            margin: 1e-9,
        })
    }

    /// Interior margin subtracted from the domain boundary.
    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    pub fn spec(&self) -> &WarpedProductSpec {
        &self.spec
    }

    fn fiber_c(&self) -> f64 {
        0.25 * self.spec.model_curvature()
    }
}

impl MetricChart for WarpedProductChart {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.spec.fiber_dim + 1
    }

    fn index(&self) -> usize {
        1
    }

    fn domain_margin(&self, x: &[f64]) -> f64 {
        let tau_margin = self.spec.interval.margin(x[0]);
        let c = self.fiber_c();
        let fiber_margin = if c < 0.0 {
            let r = x[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
            (-c).sqrt().recip() - r
        } else {
            f64::INFINITY
        };
        let f_positive = if self.spec.warping.value(x[0]) > 0.0 {
            f64::INFINITY
        } else {
            -1.0
        };
        tau_margin.min(fiber_margin).min(f_positive) - self.margin
    }

    fn metric_at(&self, x: &[f64]) -> Matrix {
        let n = self.dim();
        let f = self.spec.warping.value(x[0]);
        let c = self.fiber_c();
        let r2: f64 = x[1..].iter().map(|v| v * v).sum();
        let conf = (1.0 + c * r2).powi(-2);
        let mut g = Matrix::zeros(n, n);
        g[(0, 0)] = -1.0;
        for i in 1..n {
            g[(i, i)] = f * f * conf;
        }
        g
    }

    fn analytic_jet(&self, x: &[f64], second_order: bool) -> Option<MetricJet> {
        let n = self.dim();
        let (f, f1, f2) = self.spec.warping.eval(x[0]);
        let c = self.fiber_c();
        let r2: f64 = x[1..].iter().map(|v| v * v).sum();
        let s = 1.0 + c * r2;
        // conformal factor A and its partials in the fiber coordinates
        let a = s.powi(-2);
        let da = |l: usize| -4.0 * c * x[l] * s.powi(-3);
        let dda = |l: usize, m: usize| {
            let delta = if l == m { 1.0 } else { 0.0 };
            -4.0 * c * delta * s.powi(-3) + 24.0 * c * c * x[l] * x[m] * s.powi(-4)
        };
        let w = f * f;
        let dw = 2.0 * f * f1;
        let ddw = 2.0 * (f1 * f1 + f * f2);

        let fiber_diag = |value: f64| {
            let mut m = Matrix::zeros(n, n);
            for i in 1..n {
                m[(i, i)] = value;
            }
            m
        };
        let g = self.metric_at(x);
        let mut dg = Vec::with_capacity(n);
        dg.push(fiber_diag(dw * a));
        for l in 1..n {
            dg.push(fiber_diag(w * da(l)));
        }
        let ddg = second_order.then(|| {
            let mut out = Vec::with_capacity(n * n);
            for l in 0..n {
                for m in 0..n {
                    let value = match (l, m) {
                        (0, 0) => ddw * a,
                        (0, m) => dw * da(m),
                        (l, 0) => dw * da(l),
                        (l, m) => w * dda(l, m),
                    };
                    out.push(fiber_diag(value));
                }
            }
            out
        });
        Some(MetricJet { g, dg, ddg })
    }

    fn time_index(&self) -> Option<usize> {
        Some(0)
    }
}

/// Riemannian space form of curvature `K` in the conformally flat chart
/// `|dx|² / (1 + K|x|²/4)²`.
#[derive(Clone, Debug)]
pub struct ConformalSpaceForm {
    name: String,
    dim: usize,
    curvature: f64,
}

impl ConformalSpaceForm {
    pub fn new(name: impl Into<String>, dim: usize, curvature: f64) -> Self {
        ConformalSpaceForm {
            name: name.into(),
            dim,
            curvature,
        }
    }

    pub fn curvature(&self) -> f64 {
        self.curvature
    }
}

impl MetricChart for ConformalSpaceForm {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn index(&self) -> usize {
        0
    }

    fn domain_margin(&self, x: &[f64]) -> f64 {
        let c = 0.25 * self.curvature;
        if c < 0.0 {
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            (-c).sqrt().recip() - r - 1e-9
        } else {
            f64::INFINITY
        }
    }

    fn metric_at(&self, x: &[f64]) -> Matrix {
        let c = 0.25 * self.curvature;
        let r2: f64 = x.iter().map(|v| v * v).sum();
        Matrix::identity(self.dim, self.dim) * (1.0 + c * r2).powi(-2)
    }

    fn analytic_jet(&self, x: &[f64], second_order: bool) -> Option<MetricJet> {
        let n = self.dim;
        let c = 0.25 * self.curvature;
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let s = 1.0 + c * r2;
        let id = Matrix::identity(n, n);
        let dg = (0..n).map(|l| &id * (-4.0 * c * x[l] * s.powi(-3))).collect();
        let ddg = second_order.then(|| {
            let mut out = Vec::with_capacity(n * n);
            for l in 0..n {
                for m in 0..n {
                    let delta = if l == m { 1.0 } else { 0.0 };
                    let v = -4.0 * c * delta * s.powi(-3) + 24.0 * c * c * x[l] * x[m] * s.powi(-4);
                    out.push(&id * v);
                }
            }
            out
        });
        Some(MetricJet {
            g: self.metric_at(x),
            dg,
            ddg,
        })
    }
}
