use serde::{Deserialize, Serialize};

use super::chart::{check_domain, metric_jet, MetricChart, MetricJet};
use crate::error::{GeomError, Result};
use crate::linalg::{bilinear, Matrix, Point, Vector};

/// Global sign applied to the coordinate formula
/// `∂_iΓ^l_jk − ∂_jΓ^l_ik + Γ^m_jk Γ^l_im − Γ^m_ik Γ^l_jm`.
/// With `-1` the constant-curvature charts satisfy `g(R(v,w)v,w) = K·Q(v,w)`.
pub const CURVATURE_SIGN: f64 = -1.0;

/// A tangent vector at a coordinate point.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    pub point: Point,
    pub components: Vector,
}

impl TangentVector {
    pub fn new(point: Point, components: Vector) -> Self {
        TangentVector { point, components }
    }
}

/// A 2-plane spanned by `v`, `w` at `point`.
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneSection {
    pub point: Point,
    pub v: Vector,
    pub w: Vector,
}

impl PlaneSection {
    pub fn new(point: Point, v: Vector, w: Vector) -> Self {
        PlaneSection { point, v, w }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CausalCharacter {
    Spacelike,
    Null,
    Timelike,
}

impl CausalCharacter {
    /// The sign `sg` taking values `1, 0, -1`.
    pub fn sign(self) -> f64 {
        match self {
            CausalCharacter::Spacelike => 1.0,
            CausalCharacter::Null => 0.0,
            CausalCharacter::Timelike => -1.0,
        }
    }
}

/// Levi-Civita connection coefficients at a point, optionally with their
/// first partial derivatives.
#[derive(Clone, Debug)]
pub struct Christoffel {
    n: usize,
    pub g: Matrix,
    pub ginv: Matrix,
    gamma: Vec<f64>,
    dgamma: Option<Vec<f64>>,
}

impl Christoffel {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// `Γ^k_ij`
    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.gamma[(k * self.n + i) * self.n + j]
    }

    /// `∂_l Γ^k_ij`; panics when derivatives were not requested.
    #[inline]
    pub fn deriv(&self, l: usize, k: usize, i: usize, j: usize) -> f64 {
        let n = self.n;
        self.dgamma.as_ref().expect("connection derivatives not computed")[((l * n + k) * n + i) * n + j]
    }

    pub fn has_derivatives(&self) -> bool {
        self.dgamma.is_some()
    }

    /// `Γ(a, b)^k = Γ^k_ij a^i b^j`
    pub fn contract(&self, a: &[f64], b: &[f64], out: &mut [f64]) {
        let n = self.n;
        for (k, o) in out.iter_mut().enumerate().take(n) {
            let mut acc = 0.0;
            for i in 0..n {
                if a[i] == 0.0 {
                    continue;
                }
                let row = &self.gamma[(k * n + i) * n..(k * n + i + 1) * n];
                let mut inner = 0.0;
                for j in 0..n {
                    inner += row[j] * b[j];
                }
                acc += a[i] * inner;
            }
            *o = acc;
        }
    }

    pub fn from_jet(jet: &MetricJet) -> Result<Self> {
        let n = jet.g.nrows();
        let ginv = jet
            .g
            .clone()
            .try_inverse()
            .ok_or_else(|| GeomError::InvalidArgument("metric is singular".into()))?;
        // T_mij = ∂_i g_mj + ∂_j g_mi − ∂_m g_ij
        let t = |m: usize, i: usize, j: usize, d: &dyn Fn(usize, usize, usize) -> f64| {
            d(i, m, j) + d(j, m, i) - d(m, i, j)
        };
        let first = |l: usize, a: usize, b: usize| jet.dg[l][(a, b)];
        let mut gamma = vec![0.0; n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut acc = 0.0;
                    for m in 0..n {
                        acc += ginv[(k, m)] * t(m, i, j, &first);
                    }
                    gamma[(k * n + i) * n + j] = 0.5 * acc;
                    gamma[(k * n + j) * n + i] = 0.5 * acc;
                }
            }
        }
        let dgamma = jet.ddg.as_ref().map(|ddg| {
            // ∂_l g^{km} = −g^{ka} ∂_l g_ab g^{bm}
            let dginv: Vec<Matrix> = jet.dg.iter().map(|d| -(&ginv * d * &ginv)).collect();
            let mut out = vec![0.0; n * n * n * n];
            for l in 0..n {
                let second = |p: usize, a: usize, b: usize| ddg[l * n + p][(a, b)];
                for k in 0..n {
                    for i in 0..n {
                        for j in i..n {
                            let mut acc = 0.0;
                            for m in 0..n {
                                acc += dginv[l][(k, m)] * t(m, i, j, &first)
                                    + ginv[(k, m)] * t(m, i, j, &second);
                            }
                            out[((l * n + k) * n + i) * n + j] = 0.5 * acc;
                            out[((l * n + k) * n + j) * n + i] = 0.5 * acc;
                        }
                    }
                }
            }
            out
        });
        Ok(Christoffel {
            n,
            g: jet.g.clone(),
            ginv,
            gamma,
            dgamma,
        })
    }
}

/// Metric components at `x`, symmetrized.
pub fn metric_eval(chart: &dyn MetricChart, x: &[f64]) -> Result<Matrix> {
    check_domain(chart, x)?;
    let g = chart.metric_at(x);
    Ok((&g + g.transpose()) * 0.5)
}

/// Christoffel symbols `Γ^k_ij` at `x`.
pub fn christoffel(chart: &dyn MetricChart, x: &[f64]) -> Result<Christoffel> {
    Christoffel::from_jet(&metric_jet(chart, x, false)?)
}

/// Christoffel symbols together with their first partial derivatives.
pub fn christoffel_with_derivatives(chart: &dyn MetricChart, x: &[f64]) -> Result<Christoffel> {
    Christoffel::from_jet(&metric_jet(chart, x, true)?)
}

/// Curvature tensor `R^l_ijk` defined by `R(∂_i, ∂_j)∂_k = R^l_ijk ∂_l`.
#[derive(Clone, Debug)]
pub struct RiemannTensor {
    n: usize,
    pub g: Matrix,
    data: Vec<f64>,
}

impl RiemannTensor {
    pub fn from_connection(conn: &Christoffel) -> Self {
        let n = conn.dim();
        let mut data = vec![0.0; n * n * n * n];
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    for k in 0..n {
                        let mut r = conn.deriv(i, l, j, k) - conn.deriv(j, l, i, k);
                        for m in 0..n {
                            r += conn.get(m, j, k) * conn.get(l, i, m) - conn.get(m, i, k) * conn.get(l, j, m);
                        }
                        data[((l * n + i) * n + j) * n + k] = CURVATURE_SIGN * r;
                    }
                }
            }
        }
        RiemannTensor {
            n,
            g: conn.g.clone(),
            data,
        }
    }

    #[inline]
    pub fn get(&self, l: usize, i: usize, j: usize, k: usize) -> f64 {
        self.data[((l * self.n + i) * self.n + j) * self.n + k]
    }

    /// `R(a, b)c`
    pub fn apply(&self, a: &Vector, b: &Vector, c: &Vector) -> Vector {
        let n = self.n;
        Vector::from_fn(n, |l, _| {
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let ab = a[i] * b[j];
                    if ab == 0.0 {
                        continue;
                    }
                    for k in 0..n {
                        acc += self.get(l, i, j, k) * ab * c[k];
                    }
                }
            }
            acc
        })
    }

    /// `g(R(v,w)v, w)`
    pub fn quartic(&self, v: &Vector, w: &Vector) -> f64 {
        bilinear(&self.g, &self.apply(v, w, v), w)
    }
}

pub fn riemann(chart: &dyn MetricChart, x: &[f64]) -> Result<RiemannTensor> {
    Ok(RiemannTensor::from_connection(&christoffel_with_derivatives(chart, x)?))
}

/// `R(v, w)v` for tangent vectors at a common point.
pub fn curvature_vector(
    chart: &dyn MetricChart,
    v: &TangentVector,
    w: &TangentVector,
) -> Result<TangentVector> {
    if v.point != w.point {
        return Err(GeomError::InvalidArgument(
            "tangent vectors must share a base point".into(),
        ));
    }
    let r = riemann(chart, v.point.as_slice())?;
    Ok(TangentVector::new(
        v.point.clone(),
        r.apply(&v.components, &w.components, &v.components),
    ))
}

/// `Q(v, w) = g(v,v)g(w,w) − g(v,w)²`
pub fn plane_gram(g: &Matrix, v: &Vector, w: &Vector) -> f64 {
    let vv = bilinear(g, v, v);
    let ww = bilinear(g, w, w);
    let vw = bilinear(g, v, w);
    vv * ww - vw * vw
}

/// Default degeneracy threshold for `|Q|`.
pub const DEGENERATE_PLANE_TOL: f64 = 1e-12;

/// `g(R(v,w)v,w) / Q(v,w)`.
pub fn sectional_curvature(chart: &dyn MetricChart, plane: &PlaneSection, tol: f64) -> Result<f64> {
    let r = riemann(chart, plane.point.as_slice())?;
    sectional_from_tensor(&r, &plane.v, &plane.w, tol)
}

pub fn sectional_from_tensor(r: &RiemannTensor, v: &Vector, w: &Vector, tol: f64) -> Result<f64> {
    let q = plane_gram(&r.g, v, w);
    if q.abs() <= tol {
        return Err(GeomError::DegeneratePlane(q.abs()));
    }
    Ok(r.quartic(v, w) / q)
}

/// Causal character of `v` with respect to the metric matrix `g`.
pub fn causal_character_with(g: &Matrix, v: &Vector, tol: f64) -> CausalCharacter {
    let vv = bilinear(g, v, v);
    if vv > tol {
        CausalCharacter::Spacelike
    } else if vv < -tol {
        CausalCharacter::Timelike
    } else {
        CausalCharacter::Null
    }
}

/// Causal character of a tangent vector on a Lorentzian chart.
pub fn causal_character(chart: &dyn MetricChart, v: &TangentVector, tol: f64) -> Result<CausalCharacter> {
    if chart.index() != 1 {
        return Err(GeomError::InvalidArgument(format!(
            "causal character needs a Lorentzian chart, `{}` has index {}",
            chart.name(),
            chart.index()
        )));
    }
    let g = metric_eval(chart, v.point.as_slice())?;
    Ok(causal_character_with(&g, &v.components, tol))
}
