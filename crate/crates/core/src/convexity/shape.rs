use rayon::prelude::*;

use crate::error::{GeomError, Result};
use crate::geodesics::{exp_differential, integrate_geodesic, GeodesicArc};
use crate::linalg::{bilinear, condition_number, euclideanized, relative_eigenvalues, Matrix, Point, Vector};
use crate::manifolds::{christoffel, metric_eval, riemann};
use crate::report::{CheckReport, SampleRecord, Series};
use crate::sampling::rng_for;

use super::comparison::{f_derivatives, lambda_value, ComparisonField};
use super::hessian::{hessian_matrix, HessianOptions};

#[derive(Clone, Debug, PartialEq)]
pub struct ShapeTrackOptions {
    pub hessian: HessianOptions,
    /// Parameter offset for the central difference in the Riccati residual;
    /// `None` skips the diagnostic.
    pub riccati_step: Option<f64>,
}

impl Default for ShapeTrackOptions {
    fn default() -> Self {
        ShapeTrackOptions {
            hessian: HessianOptions::default(),
            riccati_step: None,
        }
    }
}

/// Modified shape operator `S = g⁻¹ Hess f_{K,q}` along a radial geodesic,
/// compared with the model value `(1 - K f̃) I`.
#[derive(Clone, Debug)]
pub struct ShapeOperatorTrack {
    pub arc: GeodesicArc,
    pub times: Vec<f64>,
    pub s: Vec<Matrix>,
    pub s_model: Vec<Matrix>,
    /// Smallest eigenvalue of `Hess f - (1 - K f̃) g` relative to the
    /// euclideanized metric, i.e. of `S - S̃` in a g-orthonormal frame up to
    /// signs of timelike directions.
    pub min_eig_diff: Vec<f64>,
    /// `max |g S - (g S)^T|`.
    pub self_adjoint_defect: Vec<f64>,
    /// `max |∇_t U + U² + R(γ', ·)γ'|` with `U = g⁻¹ Hess(E_q/2) / t`.
    pub riccati_residual: Vec<Option<f64>>,
}

impl ShapeOperatorTrack {
    pub fn min_eig(&self) -> f64 {
        self.min_eig_diff.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn shape_operator_track(
    field: &ComparisonField,
    arc: &GeodesicArc,
    times: &[f64],
    opts: &ShapeTrackOptions,
) -> Result<ShapeOperatorTrack> {
    let chart = field.chart.as_ref();
    if (&arc.p0 - field.q()).amax() > 1e-10 {
        return Err(GeomError::InvalidArgument("arc does not start at the base point".into()));
    }
    let c = arc.speed_squared();
    if c.abs() <= 1e-10 * arc.v0.norm_squared() {
        return Err(GeomError::InvalidArgument("arc is null".into()));
    }
    let n = chart.dim();
    let mut track = ShapeOperatorTrack {
        arc: arc.clone(),
        times: times.to_vec(),
        s: Vec::new(),
        s_model: Vec::new(),
        min_eig_diff: Vec::new(),
        self_adjoint_defect: Vec::new(),
        riccati_residual: Vec::new(),
    };
    for &t in times {
        let p = arc.position(t).ok_or(GeomError::InvalidArgument(format!("time {t} outside arc")))?;
        if t > 0.0 {
            let d = exp_differential(chart, field.q(), &(&arc.v0 * t), &field.numerics.geodesic)?;
            if condition_number(&d) > field.numerics.shooting.cond_limit {
                return Err(GeomError::ConjugatePoint { t });
            }
        }
        let g = metric_eval(chart, p.as_slice())?;
        let ginv = g.clone().try_inverse().ok_or(GeomError::OutOfDomain(p.as_slice().to_vec()))?;
        let h = hessian_matrix(field, &p, &opts.hessian)?;
        let model = lambda_value(field.k, c * t * t);
        let s = &ginv * &h;
        let gs = &g * &s;
        track.self_adjoint_defect.push((&gs - gs.transpose()).amax());
        track.min_eig_diff.push(relative_eigenvalues(&(&h - &g * model), &euclideanized(&g))[0]);
        track.s.push(s);
        track.s_model.push(Matrix::identity(n, n) * model);
        let residual = match opts.riccati_step {
            Some(dt) if t > 2.0 * dt => Some(riccati_residual(field, arc, t, dt, &h, opts)?),
            _ => None,
        };
        track.riccati_residual.push(residual);
    }
    Ok(track)
}

/// `W = g⁻¹ Hess(E_q/2)`, recovered from `Hess f` through
/// `Hess f = f'(E) Hess E + f''(E) dE ⊗ dE` and `dE = 2t γ'♭`. `W = t U`
/// is smooth at the vertex, unlike `U`, so it is the one differenced.
fn radial_operator(field: &ComparisonField, arc: &GeodesicArc, t: f64, h: &Matrix) -> Result<(Point, Vector, Matrix)> {
    let p = arc.position(t).ok_or(GeomError::InvalidArgument(format!("time {t} outside arc")))?;
    let vel = arc.velocity(t).ok_or(GeomError::InvalidArgument(format!("time {t} outside arc")))?;
    let g = metric_eval(field.chart.as_ref(), p.as_slice())?;
    let c = arc.speed_squared();
    let (_, d1, d2) = f_derivatives(field.k, c * t * t);
    let de = &g * &vel * (2.0 * t);
    let hess_e = (h - &de * de.transpose() * d2) / d1;
    let ginv = g.try_inverse().ok_or(GeomError::OutOfDomain(p.as_slice().to_vec()))?;
    Ok((p, vel, ginv * hess_e / 2.0))
}

fn riccati_residual(
    field: &ComparisonField,
    arc: &GeodesicArc,
    t: f64,
    dt: f64,
    h: &Matrix,
    opts: &ShapeTrackOptions,
) -> Result<f64> {
    let chart = field.chart.as_ref();
    let n = chart.dim();
    let (p, vel, w) = radial_operator(field, arc, t, h)?;
    let mut neighbours = Vec::new();
    for s in [t - dt, t + dt] {
        let ps = arc.position(s).ok_or(GeomError::InvalidArgument(format!("time {s} outside arc")))?;
        let hs = hessian_matrix(field, &ps, &opts.hessian)?;
        neighbours.push(radial_operator(field, arc, s, &hs)?.2);
    }
    let dw = (&neighbours[1] - &neighbours[0]) / (2.0 * dt);
    let u = &w / t;
    // U' = W'/t - W/t²
    let du = dw / t - &w / (t * t);
    let conn = christoffel(chart, p.as_slice())?;
    // A^i_j = Γ^i_{kj} γ'^k
    let a = Matrix::from_fn(n, n, |i, j| (0..n).map(|k| conn.get(i, k, j) * vel[k]).sum());
    let cov = du + &a * &u - &u * &a;
    let r = riemann(chart, p.as_slice())?;
    let jacobi_op = Matrix::from_fn(n, n, |i, j| {
        let e = Vector::from_fn(n, |l, _| if l == j { 1.0 } else { 0.0 });
        r.apply(&vel, &e, &vel)[i]
    });
    Ok((cov + &u * &u + jacobi_op).amax())
}

/// Tracks `S - (1 - K f̃) I` along `n_arcs` random radial geodesics from
/// `q` (`exp_q` of vectors uniform in `0.9` of the star ball, near-null
/// ones skipped), at `times_per_arc` evenly spaced times in `(0, 1]`.
pub fn track_random_arcs(
    field: &ComparisonField,
    n_arcs: usize,
    times_per_arc: usize,
    seed: u64,
    tol: f64,
    opts: &ShapeTrackOptions,
) -> Result<CheckReport> {
    let n = field.chart.dim();
    let g0 = metric_eval(field.chart.as_ref(), field.q().as_slice())?;
    let times: Vec<f64> = (1..=times_per_arc).map(|j| j as f64 / times_per_arc as f64).collect();
    let mut velocities = Vec::with_capacity(n_arcs);
    let mut index = 0u64;
    while velocities.len() < n_arcs {
        if index > 100 * n_arcs as u64 + 100 {
            return Err(GeomError::SamplerStarved {
                accepted: velocities.len(),
                attempts: index as usize,
            });
        }
        let mut rng = rng_for(seed, index);
        index += 1;
        let v = crate::sampling::uniform_in_ball(&mut rng, n, 0.9 * field.region.radius);
        if bilinear(&g0, &v, &v).abs() > 1e-2 * v.norm_squared() {
            velocities.push(v);
        }
    }
    let tracks: Vec<Result<ShapeOperatorTrack>> = velocities
        .par_iter()
        .map(|v| {
            let arc = integrate_geodesic(&field.chart, field.q(), v, 1.0, &field.numerics.geodesic)?;
            shape_operator_track(field, &arc, &times, opts)
        })
        .collect();
    let mut report = CheckReport::new("shape-track", field.chart.name(), Some(field.k), field.q().as_slice().to_vec(), tol);
    let mut series = Series::new("min_eigenvalue", "t", "min_eig_S_minus_model");
    let mut max_defect = 0.0f64;
    let mut max_riccati = 0.0f64;
    for (v, track) in velocities.iter().zip(tracks) {
        let track = track?;
        for (j, &t) in track.times.iter().enumerate() {
            let m = track.min_eig_diff[j];
            series.points.push([t, m]);
            max_defect = max_defect.max(track.self_adjoint_defect[j]);
            if let Some(r) = track.riccati_residual[j] {
                max_riccati = max_riccati.max(r);
            }
            report.record(m, || SampleRecord {
                point: track.arc.position(t).map(|p| p.as_slice().to_vec()).unwrap_or_default(),
                direction: Some(v.as_slice().to_vec()),
                second_direction: None,
                margin: m,
                label: format!("t = {t}"),
            });
        }
    }
    report.diag("arcs", n_arcs as f64);
    report.diag("max_self_adjoint_defect", max_defect);
    if opts.riccati_step.is_some() {
        report.diag("max_riccati_residual", max_riccati);
    }
    report.series.push(series);
    report.finish_by_margin();
    Ok(report)
}
