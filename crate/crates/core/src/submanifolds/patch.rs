use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::geodesics::{integrate_geodesic, GeodesicArc, GeodesicOptions};
use crate::linalg::{Matrix, Point, Vector};
use crate::manifolds::{christoffel, ChartRef};

/// Built-in immersion families. Graph-like families use the spatial
/// coordinates `offset_spatial + u` and time `offset_time + h(u)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PatchFamily {
    /// `h = 0`.
    FlatSlice { offset: Vec<f64>, half_width: f64 },
    /// `h(u) = Σ_j c_j |u|^{2j}`.
    Graph {
        offset: Vec<f64>,
        coefficients: Vec<f64>,
        half_width: f64,
    },
    /// `h(u) = sign·√(1 + |u|²)`: the unit hyperboloid about `offset`,
    /// future sheet for `sign = 1`, past sheet for `sign = -1`.
    Hyperboloid { offset: Vec<f64>, sign: f64, half_width: f64 },
    /// Round sphere of the given coordinate radius in the time slice
    /// through `center` (a circle when there are two spatial dimensions,
    /// a 2-sphere in angles away from the poles when there are three).
    RoundSphere { center: Vec<f64>, radius: f64 },
    /// `s ↦ γ(s)`, `s ∈ [0, length]`.
    GeodesicSegment {
        point: Vec<f64>,
        velocity: Vec<f64>,
        length: f64,
    },
}

/// Immersion `φ` with first and second partial derivatives at a
/// parameter point.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchJet {
    pub x: Point,
    /// `n × k`, columns `∂_a φ`.
    pub d: Matrix,
    /// `∂_a ∂_b φ` at index `a * k + b`.
    pub dd: Vec<Vector>,
}

#[derive(Clone)]
pub struct ImmersedPatch {
    pub chart: ChartRef,
    pub family: PatchFamily,
    pub k: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub periodic: Vec<bool>,
    /// Grid points per parameter direction.
    pub grid_n: usize,
    arc: Option<GeodesicArc>,
}

impl fmt::Debug for ImmersedPatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImmersedPatch")
            .field("chart", &self.chart.name())
            .field("family", &self.family)
            .field("k", &self.k)
            .field("grid_n", &self.grid_n)
            .finish()
    }
}

fn check_len(v: &[f64], n: usize, what: &str) -> Result<()> {
    if v.len() != n {
        return Err(GeomError::InvalidArgument(format!("{what} has {} coordinates, chart needs {n}", v.len())));
    }
    Ok(())
}

impl ImmersedPatch {
    pub fn new(chart: ChartRef, family: PatchFamily, grid_n: usize) -> Result<Self> {
        let n = chart.dim();
        if grid_n == 0 {
            return Err(GeomError::InvalidArgument("grid_n must be positive".into()));
        }
        let mut arc = None;
        let (k, lower, upper, periodic) = match &family {
            PatchFamily::FlatSlice { offset, half_width }
            | PatchFamily::Graph { offset, half_width, .. }
            | PatchFamily::Hyperboloid { offset, half_width, .. } => {
                check_len(offset, n, "offset")?;
                if chart.time_index().is_none() {
                    return Err(GeomError::InvalidArgument("graph patches need a time coordinate".into()));
                }
                let k = n - 1;
                (k, vec![-half_width; k], vec![*half_width; k], vec![false; k])
            }
            PatchFamily::RoundSphere { center, radius } => {
                check_len(center, n, "center")?;
                if *radius <= 0.0 || chart.time_index().is_none() {
                    return Err(GeomError::InvalidArgument("sphere needs a positive radius and a time coordinate".into()));
                }
                match n - 1 {
                    2 => (1, vec![0.0], vec![2.0 * PI], vec![true]),
                    3 => (2, vec![0.35, 0.0], vec![PI - 0.35, 2.0 * PI], vec![false, true]),
                    m => {
                        return Err(GeomError::InvalidArgument(format!(
                            "round spheres supported in 2 or 3 spatial dimensions, not {m}"
                        )))
                    }
                }
            }
            PatchFamily::GeodesicSegment { point, velocity, length } => {
                check_len(point, n, "point")?;
                check_len(velocity, n, "velocity")?;
                arc = Some(integrate_geodesic(
                    &chart,
                    &Point::from_column_slice(point),
                    &Vector::from_column_slice(velocity),
                    *length,
                    &GeodesicOptions::default(),
                )?);
                (1, vec![0.0], vec![*length], vec![false])
            }
        };
        Ok(ImmersedPatch {
            chart,
            family,
            k,
            lower,
            upper,
            periodic,
            grid_n,
            arc,
        })
    }

    pub fn codimension(&self) -> usize {
        self.chart.dim() - self.k
    }

    /// Cell-centred grid: `lower + (i + 1/2)(upper - lower)/grid_n` per
    /// direction, so no grid point sits on a boundary.
    pub fn grid(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![]];
        for a in 0..self.k {
            let step = (self.upper[a] - self.lower[a]) / self.grid_n as f64;
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (0..self.grid_n).map(move |i| {
                        let mut p = prefix.clone();
                        p.push(self.lower[a] + (i as f64 + 0.5) * step);
                        p
                    })
                })
                .collect();
        }
        out
    }

    /// Parameter length scale used for stencils.
    pub fn parameter_scale(&self) -> f64 {
        (0..self.k).map(|a| self.upper[a] - self.lower[a]).fold(0.0, f64::max)
    }

    fn spatial_indices(&self) -> Vec<usize> {
        let t = self.chart.time_index().unwrap_or(usize::MAX);
        (0..self.chart.dim()).filter(|&i| i != t).collect()
    }

    pub fn point(&self, u: &[f64]) -> Result<Point> {
        Ok(self.jet(u)?.x)
    }

    pub fn jet(&self, u: &[f64]) -> Result<PatchJet> {
        if u.len() != self.k {
            return Err(GeomError::InvalidArgument(format!("expected {} parameters", self.k)));
        }
        let n = self.chart.dim();
        let k = self.k;
        let mut x = Point::zeros(n);
        let mut d = Matrix::zeros(n, k);
        let mut dd = vec![Vector::zeros(n); k * k];
        match &self.family {
            PatchFamily::FlatSlice { offset, .. }
            | PatchFamily::Graph { offset, .. }
            | PatchFamily::Hyperboloid { offset, .. } => {
                let t = self.chart.time_index().expect("checked at construction");
                let sp = self.spatial_indices();
                let (h, dh, ddh) = self.height(u);
                x.copy_from_slice(offset);
                x[t] += h;
                for (a, &i) in sp.iter().enumerate() {
                    x[i] += u[a];
                    d[(i, a)] = 1.0;
                    d[(t, a)] = dh[a];
                }
                for a in 0..k {
                    for b in 0..k {
                        dd[a * k + b][t] = ddh[a * k + b];
                    }
                }
            }
            PatchFamily::RoundSphere { center, radius } => {
                let sp = self.spatial_indices();
                x.copy_from_slice(center);
                let r = *radius;
                if k == 1 {
                    let (s, c) = u[0].sin_cos();
                    x[sp[0]] += r * c;
                    x[sp[1]] += r * s;
                    d[(sp[0], 0)] = -r * s;
                    d[(sp[1], 0)] = r * c;
                    dd[0][sp[0]] = -r * c;
                    dd[0][sp[1]] = -r * s;
                } else {
                    let (st, ct) = u[0].sin_cos();
                    let (sp_, cp) = u[1].sin_cos();
                    let w = [st * cp, st * sp_, ct];
                    let wt = [ct * cp, ct * sp_, -st];
                    let wp = [-st * sp_, st * cp, 0.0];
                    let wtt = [-st * cp, -st * sp_, -ct];
                    let wtp = [-ct * sp_, ct * cp, 0.0];
                    let wpp = [-st * cp, -st * sp_, 0.0];
                    for (j, &i) in sp.iter().enumerate() {
                        x[i] += r * w[j];
                        d[(i, 0)] = r * wt[j];
                        d[(i, 1)] = r * wp[j];
                        dd[0][i] = r * wtt[j];
                        dd[1][i] = r * wtp[j];
                        dd[2][i] = r * wtp[j];
                        dd[3][i] = r * wpp[j];
                    }
                }
            }
            PatchFamily::GeodesicSegment { .. } => {
                let arc = self.arc.as_ref().expect("arc integrated at construction");
                let (p, v) = arc
                    .state(u[0])
                    .ok_or_else(|| GeomError::InvalidArgument(format!("parameter {} outside segment", u[0])))?;
                let conn = christoffel(self.chart.as_ref(), p.as_slice())?;
                let mut acc = vec![0.0; n];
                conn.contract(v.as_slice(), v.as_slice(), &mut acc);
                x = p;
                d.set_column(0, &v);
                dd[0] = -Vector::from_vec(acc);
            }
        }
        Ok(PatchJet { x, d, dd })
    }

    /// `(h, ∂h, ∂∂h)` for graph-like families.
    fn height(&self, u: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let k = u.len();
        let r2: f64 = u.iter().map(|x| x * x).sum();
        let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        match &self.family {
            PatchFamily::Graph { coefficients, .. } => {
                // h = Σ c_j r^{2j}; with ρ = r², h' = dh/dρ, h'' = d²h/dρ²
                let mut h = 0.0;
                let mut h1 = 0.0;
                let mut h2 = 0.0;
                for (j, &c) in coefficients.iter().enumerate() {
                    let j = j as i32;
                    h += c * r2.powi(j);
                    if j >= 1 {
                        h1 += c * j as f64 * r2.powi(j - 1);
                    }
                    if j >= 2 {
                        h2 += c * (j * (j - 1)) as f64 * r2.powi(j - 2);
                    }
                }
                let dh = u.iter().map(|&x| 2.0 * h1 * x).collect();
                let ddh = (0..k * k)
                    .map(|ab| {
                        let (a, b) = (ab / k, ab % k);
                        2.0 * h1 * delta(a, b) + 4.0 * h2 * u[a] * u[b]
                    })
                    .collect();
                (h, dh, ddh)
            }
            PatchFamily::Hyperboloid { sign, .. } => {
                let s = (1.0 + r2).sqrt();
                let dh = u.iter().map(|&x| sign * x / s).collect();
                let ddh = (0..k * k)
                    .map(|ab| {
                        let (a, b) = (ab / k, ab % k);
                        sign * (delta(a, b) / s - u[a] * u[b] / (s * s * s))
                    })
                    .collect();
                (sign * s, dh, ddh)
            }
            _ => (0.0, vec![0.0; k], vec![0.0; k * k]),
        }
    }
}
