use std::fmt;

use crate::error::{GeomError, Result};
use crate::geodesics::{inverse_exp_in, Numerics, StarRegion};
use crate::linalg::{bilinear, Point, Vector};
use crate::manifolds::{metric_eval, ChartRef};

/// `f_{K}(E) = (1 - cos√(KE))/K`, `E/2` when `K = 0`; the cosh branch is
/// taken when `KE < 0`. Evaluated through half-angle identities so that
/// small `|KE|` loses no precision.
pub fn f_value(k: f64, e: f64) -> f64 {
    let x = k * e;
    if k == 0.0 || x == 0.0 {
        return e / 2.0;
    }
    if x > 0.0 {
        let h = (x.sqrt() / 2.0).sin();
        2.0 * h * h / k
    } else {
        let h = ((-x).sqrt() / 2.0).sinh();
        -2.0 * h * h / k
    }
}

/// Partial sum `E · Σ_{n=1}^{terms} (-KE)^{n-1}/(2n)!` of the power series.
pub fn f_series(k: f64, e: f64, terms: usize) -> f64 {
    let x = k * e;
    let mut term = 0.5; // (-x)^0 / 2!
    let mut sum = 0.0;
    for n in 1..=terms {
        sum += term;
        let n = n as f64;
        term *= -x / ((2.0 * n + 1.0) * (2.0 * n + 2.0));
    }
    e * sum
}

/// `λ = 1 - K f_K(E)`, i.e. `cos√(KE)` (cosh branch for `KE < 0`).
pub fn lambda_value(k: f64, e: f64) -> f64 {
    let x = k * e;
    if k == 0.0 || x == 0.0 {
        1.0
    } else if x > 0.0 {
        x.sqrt().cos()
    } else {
        (-x).sqrt().cosh()
    }
}

/// `(f, df/dE, d²f/dE²)`.
pub fn f_derivatives(k: f64, e: f64) -> (f64, f64, f64) {
    let x = k * e;
    let f = f_value(k, e);
    if x.abs() < 0.5 {
        return (f, first_series(x), k * second_series(x));
    }
    if x > 0.0 {
        let s = x.sqrt();
        (f, s.sin() / (2.0 * s), k * (s * s.cos() - s.sin()) / (4.0 * s * s * s))
    } else {
        let s = (-x).sqrt();
        (f, s.sinh() / (2.0 * s), -k * (s * s.cosh() - s.sinh()) / (4.0 * s * s * s))
    }
}

// f'(E) = Σ_{n>=1} n (-x)^{n-1} / (2n)!
fn first_series(x: f64) -> f64 {
    let (mut sum, mut pow, mut fact) = (0.0, 1.0, 2.0);
    for n in 1..=20usize {
        let nf = n as f64;
        sum += nf * pow / fact;
        pow *= -x;
        fact *= (2.0 * nf + 1.0) * (2.0 * nf + 2.0);
    }
    sum
}

// f''(E)/K = Σ_{n>=2} n(n-1) (-1)^{n-1} x^{n-2} / (2n)!
fn second_series(x: f64) -> f64 {
    let (mut sum, mut pow, mut fact) = (0.0, 1.0, 24.0);
    for n in 2..=21usize {
        let nf = n as f64;
        sum -= nf * (nf - 1.0) * pow / fact;
        pow *= -x;
        fact *= (2.0 * nf + 1.0) * (2.0 * nf + 2.0);
    }
    sum
}

/// Which upper/lower bound on `E_q` a use of `f_{K,q}` relies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnergyBound {
    /// `E < π²/K` for `K > 0`, `E > π²/K` for `K < 0`: λ-convexity range.
    Convexity,
    /// `E < π²/(4K)` resp. `E > π²/(4K)`: range where `λ > 0`.
    PositiveLambda,
}

impl EnergyBound {
    pub fn admits(self, k: f64, e: f64) -> bool {
        let c = match self {
            EnergyBound::Convexity => std::f64::consts::PI.powi(2),
            EnergyBound::PositiveLambda => std::f64::consts::PI.powi(2) / 4.0,
        };
        k * e < c
    }
}

/// Smooth function on a chart, evaluated pointwise.
pub trait ScalarField: Sync {
    fn chart(&self) -> &ChartRef;

    fn value(&self, p: &Point) -> Result<f64>;

    /// Values at points clustered around `center`; implementations may
    /// warm-start from the center.
    fn values_near(&self, center: &Point, points: &[Point]) -> Result<Vec<f64>> {
        let _ = center;
        points.iter().map(|p| self.value(p)).collect()
    }

    /// Typical coordinate length scale of the field's domain.
    fn scale(&self) -> f64 {
        self.chart().coordinate_scale()
    }
}

/// `f_{K,q} = f_K ∘ E_q` on a star region about `q`.
#[derive(Clone)]
pub struct ComparisonField {
    pub chart: ChartRef,
    pub k: f64,
    pub region: StarRegion,
    pub numerics: Numerics,
}

impl fmt::Debug for ComparisonField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ComparisonField")
            .field("chart", &self.chart.name())
            .field("k", &self.k)
            .field("q", &self.region.center.as_slice())
            .field("radius", &self.region.radius)
            .finish()
    }
}

impl ComparisonField {
    pub fn new(chart: ChartRef, k: f64, region: StarRegion) -> Result<Self> {
        if region.center.len() != chart.dim() {
            return Err(GeomError::InvalidArgument(format!(
                "base point has {} coordinates, chart dimension is {}",
                region.center.len(),
                chart.dim()
            )));
        }
        metric_eval(chart.as_ref(), region.center.as_slice())?;
        Ok(ComparisonField {
            chart,
            k,
            region,
            numerics: Numerics::default(),
        })
    }

    pub fn with_numerics(mut self, numerics: Numerics) -> Self {
        self.numerics = numerics;
        self
    }

    pub fn q(&self) -> &Point {
        &self.region.center
    }

    /// `(E_q(p), exp_q^{-1}(p))`.
    pub fn energy_with(&self, p: &Point, guess: Option<&Vector>) -> Result<(f64, Vector)> {
        let v = inverse_exp_in(self.chart.as_ref(), &self.region, p, guess, &self.numerics)?;
        let g = metric_eval(self.chart.as_ref(), self.q().as_slice())?;
        Ok((bilinear(&g, &v, &v), v))
    }

    pub fn energy(&self, p: &Point) -> Result<f64> {
        self.energy_with(p, None).map(|(e, _)| e)
    }

    pub fn lambda_at(&self, p: &Point) -> Result<f64> {
        Ok(lambda_value(self.k, self.energy(p)?))
    }

    /// Gradient of `E_q` at `p` by the Gauss lemma: `2 γ'(1)` for the
    /// geodesic from `q` to `p`.
    pub fn energy_gradient(&self, p: &Point) -> Result<Vector> {
        let (_, v) = self.energy_with(p, None)?;
        let (_, vel) = crate::geodesics::flow(self.chart.as_ref(), self.q(), &v, 1.0, &self.numerics.geodesic)?;
        Ok(vel * 2.0)
    }
}

impl ScalarField for ComparisonField {
    fn chart(&self) -> &ChartRef {
        &self.chart
    }

    fn value(&self, p: &Point) -> Result<f64> {
        Ok(f_value(self.k, self.energy(p)?))
    }

    fn values_near(&self, center: &Point, points: &[Point]) -> Result<Vec<f64>> {
        let (_, v0) = self.energy_with(center, None)?;
        let g = metric_eval(self.chart.as_ref(), self.q().as_slice())?;
        points
            .iter()
            .map(|p| {
                let v = inverse_exp_in(self.chart.as_ref(), &self.region, p, Some(&v0), &self.numerics)?;
                Ok(f_value(self.k, bilinear(&g, &v, &v)))
            })
            .collect()
    }

    fn scale(&self) -> f64 {
        self.region.radius
    }
}

/// `½ Σ c_i (x_i - a_i)²` in chart coordinates.
#[derive(Clone, Debug)]
pub struct DiagonalQuadratic {
    pub chart: ChartRef,
    pub center: Point,
    pub coefficients: Vec<f64>,
}

impl ScalarField for DiagonalQuadratic {
    fn chart(&self) -> &ChartRef {
        &self.chart
    }

    fn value(&self, p: &Point) -> Result<f64> {
        Ok(0.5
            * p.iter()
                .zip(self.center.iter())
                .zip(&self.coefficients)
                .map(|((x, a), c)| c * (x - a) * (x - a))
                .sum::<f64>())
    }

    fn scale(&self) -> f64 {
        1.0
    }
}
