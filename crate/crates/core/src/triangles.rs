//! Signed triangle comparison against constant-curvature model surfaces.
//!
//! All comparisons run on signed energies `E = sg·ℓ²`, which encode signed
//! length order-preservingly.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convexity::lambda_value;
use crate::error::{GeomError, Result};
use crate::geodesics::{flow, inverse_exp, signed_energy_with, GeodesicOptions, Numerics, StarRegion};
use crate::linalg::{bilinear, Point, Vector};
use crate::manifolds::{metric_eval, ChartRef};
use crate::report::{CheckReport, SampleRecord};
use crate::sampling::{rng_for, uniform_in_ball};

/// `ℓ ↦ sign(ℓ)·ℓ²`.
pub fn signed_square(l: f64) -> f64 {
    l * l.abs()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSignature {
    Riemannian,
    Lorentzian,
}

/// Signs of the flat ambient space holding the model surface: 3-space for
/// `K != 0` (the quadric `<x,x> = 1/K`), the plane itself for `K = 0`.
pub fn ambient_signs(k: f64, signature: ModelSignature) -> Vec<f64> {
    use ModelSignature::*;
    match (k.partial_cmp(&0.0), signature) {
        (Some(std::cmp::Ordering::Equal), Riemannian) => vec![1.0, 1.0],
        (Some(std::cmp::Ordering::Equal), Lorentzian) => vec![1.0, -1.0],
        (Some(std::cmp::Ordering::Greater), Riemannian) => vec![1.0, 1.0, 1.0],
        (Some(std::cmp::Ordering::Greater), Lorentzian) => vec![1.0, 1.0, -1.0],
        (_, Riemannian) => vec![1.0, 1.0, -1.0],
        (_, Lorentzian) => vec![1.0, -1.0, -1.0],
    }
}

fn ambient_dot(signs: &[f64], a: &[f64], b: &[f64]) -> f64 {
    signs.iter().zip(a).zip(b).map(|((s, x), y)| s * x * y).sum()
}

/// Signed energy between two model points. `K = 0`: `<b-a, b-a>`. Otherwise
/// `c = K<a,b> = cos√(KE)` is inverted on the principal branch
/// `√(KE) ∈ [0, π) ∪ i[0, ∞)`; `c <= -1` has no principal preimage.
pub fn model_energy(k: f64, signature: ModelSignature, a: &[f64], b: &[f64]) -> Result<f64> {
    let signs = ambient_signs(k, signature);
    if k == 0.0 {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
        return Ok(ambient_dot(&signs, &d, &d));
    }
    let c = k * ambient_dot(&signs, a, b);
    if c <= -1.0 {
        return Err(GeomError::BranchAmbiguity { kf: 1.0 - c });
    }
    if c <= 1.0 {
        Ok(c.acos().powi(2) / k)
    } else {
        Ok(-c.acosh().powi(2) / k)
    }
}

/// Point at affine fraction `s` of the model geodesic from `a` to `b`.
pub fn model_point(k: f64, signature: ModelSignature, a: &[f64], b: &[f64], s: f64) -> Result<Vec<f64>> {
    if k == 0.0 {
        return Ok(a.iter().zip(b).map(|(x, y)| x + s * (y - x)).collect());
    }
    let e = model_energy(k, signature, a, b)?;
    let x = k * e;
    let (wa, wb) = if x.abs() < 1e-14 {
        (1.0 - s, s)
    } else if x > 0.0 {
        let th = x.sqrt();
        ((th * (1.0 - s)).sin() / th.sin(), (th * s).sin() / th.sin())
    } else {
        let th = (-x).sqrt();
        ((th * (1.0 - s)).sinh() / th.sinh(), (th * s).sinh() / th.sinh())
    };
    Ok(a.iter().zip(b).map(|(p, q)| wa * p + wb * q).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelTriangle {
    pub k: f64,
    pub signature: ModelSignature,
    pub vertices: [Vec<f64>; 3],
    /// `[E01, E02, E12]`
    pub side_energies: [f64; 3],
}

/// Side `i` joins these vertices: `0 → (0,1)`, `1 → (0,2)`, `2 → (1,2)`.
pub const SIDES: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

impl ModelTriangle {
    pub fn side_point(&self, side: usize, s: f64) -> Result<Vec<f64>> {
        let (i, j) = SIDES[side];
        model_point(self.k, self.signature, &self.vertices[i], &self.vertices[j], s)
    }

    pub fn energy(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        model_energy(self.k, self.signature, a, b)
    }

    /// Largest deviation from `<x,x> = 1/K` (zero for `K = 0`).
    pub fn quadric_defect(&self) -> f64 {
        if self.k == 0.0 {
            return 0.0;
        }
        let signs = ambient_signs(self.k, self.signature);
        self.vertices
            .iter()
            .map(|x| (ambient_dot(&signs, x, x) - 1.0 / self.k).abs())
            .fold(0.0, f64::max)
    }
}

const DEGENERATE_PIVOT: f64 = 1e-10;

/// Realizes a Gram matrix in flat space with the given signs by an
/// indefinite LDLᵀ: each pivot claims an unused axis of its sign, with
/// positive leading coefficients as the canonical orientation.
fn realize_gram(gram: &[Vec<f64>], signs: &[f64]) -> Result<Option<Vec<Vec<f64>>>> {
    let m = gram.len();
    let dim = signs.len();
    let scale = gram.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs())).max(1e-300);
    let mut used = vec![false; dim];
    let mut axes = Vec::with_capacity(m);
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(m);
    for i in 0..m {
        let mut x = vec![0.0; dim];
        // coefficients on previously claimed axes
        for (j, &ax) in axes.iter().enumerate() {
            let pj: &Vec<f64> = &points[j];
            let partial: f64 = (0..j).map(|l| signs[axes[l]] * x[axes[l]] * pj[axes[l]]).sum();
            x[ax] = (gram[i][j] - partial) / (signs[ax] * pj[ax]);
        }
        let rest = gram[i][i] - ambient_dot(signs, &x, &x);
        if rest.abs() <= DEGENERATE_PIVOT * scale {
            return Err(GeomError::DegenerateTriangle(rest));
        }
        let Some(ax) = (0..dim).find(|&a| !used[a] && signs[a] * rest > 0.0) else {
            return Ok(None);
        };
        used[ax] = true;
        x[ax] = (rest / signs[ax]).sqrt();
        axes.push(ax);
        points.push(x);
    }
    Ok(Some(points))
}

/// Model triangle with side energies `[E01, E02, E12]` in the model surface
/// of curvature `K`; the Lorentzian model is tried first.
pub fn realize_model_triangle(k: f64, energies: [f64; 3]) -> Result<ModelTriangle> {
    let [e01, e02, e12] = energies;
    let mut found = Vec::new();
    for signature in [ModelSignature::Lorentzian, ModelSignature::Riemannian] {
        let signs = ambient_signs(k, signature);
        let vertices = if k == 0.0 {
            let dot = 0.5 * (e01 + e02 - e12);
            let gram = vec![vec![e01, dot], vec![dot, e02]];
            realize_gram(&gram, &signs)?.map(|pts| vec![vec![0.0; 2], pts[0].clone(), pts[1].clone()])
        } else {
            let c = |e: f64| lambda_value(k, e) / k;
            let r = 1.0 / k;
            let gram = vec![
                vec![r, c(e01), c(e02)],
                vec![c(e01), r, c(e12)],
                vec![c(e02), c(e12), r],
            ];
            realize_gram(&gram, &signs)?
        };
        if let Some(v) = vertices {
            let tri = ModelTriangle {
                k,
                signature,
                vertices: [v[0].clone(), v[1].clone(), v[2].clone()],
                side_energies: energies,
            };
            if round_trip_ok(&tri) {
                found.push(tri);
            }
        }
    }
    match found.len() {
        0 => Err(GeomError::NotRealizable(energies)),
        1 => Ok(found.pop().unwrap()),
        _ => Err(GeomError::InvalidArgument(format!(
            "side energies {energies:?} realized in both model signatures"
        ))),
    }
}

fn round_trip_ok(tri: &ModelTriangle) -> bool {
    SIDES.iter().enumerate().all(|(s, &(i, j))| {
        tri.energy(&tri.vertices[i], &tri.vertices[j])
            .is_ok_and(|e| (e - tri.side_energies[s]).abs() <= 1e-9 * (1.0 + e.abs()))
    })
}

/// Geodesic triangle in a chart with sides `p_i → p_j` given by shooting.
#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicTriangle {
    pub vertices: [Point; 3],
    /// Initial velocities of sides `01`, `02`, `12`.
    pub side_velocities: [Vector; 3],
    pub side_energies: [f64; 3],
}

impl GeodesicTriangle {
    pub fn new(chart: &ChartRef, vertices: [Point; 3], num: &Numerics) -> Result<Self> {
        let mut vel = Vec::new();
        let mut energies = [0.0; 3];
        for (s, &(i, j)) in SIDES.iter().enumerate() {
            let (e, v) = signed_energy_with(chart.as_ref(), &vertices[i], &vertices[j], None, num)?;
            energies[s] = e;
            vel.push(v);
        }
        Ok(GeodesicTriangle {
            vertices,
            side_velocities: [vel[0].clone(), vel[1].clone(), vel[2].clone()],
            side_energies: energies,
        })
    }

    pub fn side_point(&self, chart: &ChartRef, side: usize, s: f64, opts: &GeodesicOptions) -> Result<Point> {
        let (i, _) = SIDES[side];
        if s == 0.0 {
            return Ok(self.vertices[i].clone());
        }
        if s == 1.0 {
            return Ok(self.vertices[SIDES[side].1].clone());
        }
        Ok(flow(chart.as_ref(), &self.vertices[i], &self.side_velocities[side], s, opts)?.0)
    }
}

/// A point on a triangle side: `(side index, affine fraction)`.
pub type SidePoint = (usize, f64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonDirection {
    /// `R <= K`: chart energies at most model energies.
    AtMost,
    /// `R >= K`: chart energies at least model energies.
    AtLeast,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairComparison {
    pub pair: (SidePoint, SidePoint),
    pub chart_energy: f64,
    pub model_energy: f64,
    pub margin: f64,
}

/// Compares chart and model signed energies between corresponding side
/// points (equal affine fractions).
pub fn compare_pairs(
    chart: &ChartRef,
    tri: &GeodesicTriangle,
    model: &ModelTriangle,
    pairs: &[(SidePoint, SidePoint)],
    direction: ComparisonDirection,
    num: &Numerics,
) -> Result<Vec<PairComparison>> {
    let g = |x: &Point| metric_eval(chart.as_ref(), x.as_slice());
    pairs
        .iter()
        .map(|&(a, b)| {
            let x = tri.side_point(chart, a.0, a.1, &num.geodesic)?;
            let y = tri.side_point(chart, b.0, b.1, &num.geodesic)?;
            let chart_energy = if x == y {
                0.0
            } else {
                let v = inverse_exp(chart.as_ref(), &x, &y, Some(&(&y - &x)), num)?;
                bilinear(&g(&x)?, &v, &v)
            };
            let model_energy = model.energy(&model.side_point(a.0, a.1)?, &model.side_point(b.0, b.1)?)?;
            let margin = match direction {
                ComparisonDirection::AtMost => model_energy - chart_energy,
                ComparisonDirection::AtLeast => chart_energy - model_energy,
            };
            Ok(PairComparison {
                pair: (a, b),
                chart_energy,
                model_energy,
                margin,
            })
        })
        .collect()
}

pub fn compare_triangle(
    chart: &ChartRef,
    k: f64,
    tri: &GeodesicTriangle,
    pairs: &[(SidePoint, SidePoint)],
    direction: ComparisonDirection,
    tol: f64,
    num: &Numerics,
) -> Result<CheckReport> {
    let model = realize_model_triangle(k, tri.side_energies)?;
    let rows = compare_pairs(chart, tri, &model, pairs, direction, num)?;
    let mut report = CheckReport::new("triangle-comparison", chart.name(), Some(k), vec![], tol);
    fold_rows(&mut report, tri, &rows);
    report.finish_by_margin();
    Ok(report)
}

fn fold_rows(report: &mut CheckReport, tri: &GeodesicTriangle, rows: &[PairComparison]) {
    for r in rows {
        report.record(r.margin, || SampleRecord {
            point: tri.vertices.iter().flat_map(|p| p.iter().copied()).collect(),
            direction: Some(vec![r.pair.0 .0 as f64, r.pair.0 .1, r.pair.1 .0 as f64, r.pair.1 .1]),
            second_direction: None,
            margin: r.margin,
            label: format!("chart E={:.6e}, model E={:.6e}", r.chart_energy, r.model_energy),
        });
    }
}

/// Random small triangle: vertices `exp_q(w_i)` with `|w_i| <= scale`,
/// re-drawn until no side is (nearly) null and the model is
/// nondegenerate.
pub fn random_triangle(
    chart: &ChartRef,
    region: &StarRegion,
    k: f64,
    scale: f64,
    seed: u64,
    index: u64,
    num: &Numerics,
) -> Result<(GeodesicTriangle, ModelTriangle)> {
    let n = chart.dim();
    let mut last = GeomError::SamplerExhausted(0);
    for attempt in 0..50u64 {
        let mut rng = rng_for(seed, index.wrapping_mul(1009).wrapping_add(attempt));
        let mut vs = Vec::new();
        for _ in 0..3 {
            let w = uniform_in_ball(&mut rng, n, scale);
            vs.push(crate::geodesics::exp_map(chart.as_ref(), &region.center, &w, &num.geodesic)?);
        }
        let tri = match GeodesicTriangle::new(chart, [vs[0].clone(), vs[1].clone(), vs[2].clone()], num) {
            Ok(t) => t,
            Err(e) => {
                last = e;
                continue;
            }
        };
        let min_e = tri.side_energies.iter().fold(f64::INFINITY, |a, e| a.min(e.abs()));
        if min_e < 1e-4 * scale * scale {
            continue;
        }
        match realize_model_triangle(k, tri.side_energies) {
            Ok(m) => return Ok((tri, m)),
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// Random side-point pairs, each on two different sides.
pub fn random_pairs(seed: u64, index: u64, count: usize) -> Vec<(SidePoint, SidePoint)> {
    let mut rng = rng_for(seed ^ 0x7a1_u64, index);
    (0..count)
        .map(|_| {
            let a = rng.gen_range(0..3);
            let b = (a + rng.gen_range(1..3)) % 3;
            ((a, rng.gen_range(0.0..=1.0)), (b, rng.gen_range(0.0..=1.0)))
        })
        .collect()
}

/// Batch of random triangle comparisons with deterministic seeds.
#[allow(clippy::too_many_arguments)]
pub fn compare_random_triangles(
    chart: &ChartRef,
    region: &StarRegion,
    k: f64,
    scale: f64,
    n_triangles: usize,
    pairs_per_triangle: usize,
    direction: ComparisonDirection,
    seed: u64,
    tol: f64,
    num: &Numerics,
) -> Result<CheckReport> {
    let results: Vec<Result<(GeodesicTriangle, Vec<PairComparison>)>> = (0..n_triangles)
        .into_par_iter()
        .map(|i| {
            let (tri, model) = random_triangle(chart, region, k, scale, seed, i as u64, num)?;
            let pairs = random_pairs(seed, i as u64, pairs_per_triangle);
            let rows = compare_pairs(chart, &tri, &model, &pairs, direction, num)?;
            Ok((tri, rows))
        })
        .collect();
    let mut report = CheckReport::new(
        "triangle-comparison",
        chart.name(),
        Some(k),
        region.center.as_slice().to_vec(),
        tol,
    );
    let mut strict = 0usize;
    for r in results {
        let (tri, rows) = r?;
        strict += rows.iter().filter(|r| r.margin > 1e-3).count();
        fold_rows(&mut report, &tri, &rows);
    }
    report.finish_by_margin();
    report.diag("strict_pairs", strict as f64);
    report.diag("triangles", n_triangles as f64);
    Ok(report)
}
