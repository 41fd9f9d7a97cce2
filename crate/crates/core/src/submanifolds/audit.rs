use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convexity::{gradient_formula_check, lambda_value, ComparisonField, ScalarField};
use crate::error::{GeomError, Result};
use crate::geodesics::integrate_geodesic;
use crate::linalg::{bilinear, euclideanized};
use crate::report::{CheckReport, SampleRecord, Series, Verdict};
use crate::sampling::{DirectionKind, RegionSampler, Sampler};

use super::extrinsic::{classify_trapped, TrappedClass};
use super::laplacian::{restricted_laplacian, LaplacianOptions};
use super::patch::ImmersedPatch;

/// Which obstruction is being audited.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditMode {
    /// Spacelike submanifolds with `H = 0`.
    VanishingMeanCurvature,
    /// Weakly future-trapped submanifolds with `H E_q ≤ 0`.
    WeaklyTrapped,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuditOptions {
    /// Tolerance on the subharmonicity margin.
    pub tol: f64,
    /// `|H|` below this counts as zero.
    pub zero_mean_curvature: f64,
    /// Required lower bound on `k(1 − K u)`.
    pub lambda_floor: f64,
    /// `H E_q ≤ he_tol (1 + |∇̄E|)`.
    pub he_tol: f64,
    pub laplacian: LaplacianOptions,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            tol: 1e-5,
            zero_mean_curvature: 1e-7,
            lambda_floor: 1e-6,
            he_tol: 1e-6,
            laplacian: LaplacianOptions::default(),
        }
    }
}

/// Everything the audit learns at one grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct GridAudit {
    pub u: Vec<f64>,
    pub point: Vec<f64>,
    pub energy: f64,
    pub value: f64,
    pub class: TrappedClass,
    pub mean_curvature_norm: f64,
    /// `g(H, ∇̄E_q)` by central differences of `E_q` along `H`.
    pub he: f64,
    pub he_allowance: f64,
    pub laplacian_direct: f64,
    pub laplacian_identity: f64,
    /// `k(1 − K u)`.
    pub k_lambda: f64,
    pub gradient_residual: f64,
}

impl GridAudit {
    pub fn subharmonic_margin(&self) -> f64 {
        self.laplacian_direct - self.k_lambda
    }

    /// `π²/4 − K E_q`.
    pub fn energy_bound_margin(&self, k: f64) -> f64 {
        PI * PI / 4.0 - k * self.energy
    }
}

fn audit_point(patch: &ImmersedPatch, field: &ComparisonField, u: &[f64], opts: &AuditOptions) -> Result<GridAudit> {
    let pair = restricted_laplacian(patch, field, u, &opts.laplacian)?;
    let ext = &pair.extrinsic;
    let x = &ext.point;
    let class = classify_trapped(patch, ext, opts.zero_mean_curvature)?;
    let (energy, v) = field.energy_with(x, None)?;
    let hv = &ext.mean_curvature;
    let h_size = bilinear(&euclideanized(&ext.g), hv, hv).sqrt();
    let grad = gradient_formula_check(field, x)?;
    let grad_e = field.energy_gradient(x)?;
    let he = if h_size <= opts.zero_mean_curvature {
        0.0
    } else {
        let eps = 1e-4 * field.scale() / h_size;
        let (ep, _) = field.energy_with(&(x + hv * eps), Some(&v))?;
        let (em, _) = field.energy_with(&(x - hv * eps), Some(&v))?;
        (ep - em) / (2.0 * eps)
    };
    let k = patch.k as f64;
    Ok(GridAudit {
        u: u.to_vec(),
        point: x.as_slice().to_vec(),
        energy,
        value: pair.value,
        class,
        mean_curvature_norm: h_size,
        he,
        he_allowance: opts.he_tol * (1.0 + grad_e.norm()),
        laplacian_direct: pair.direct,
        laplacian_identity: pair.identity,
        k_lambda: k * lambda_value(field.k, energy),
        gradient_residual: grad.residual,
    })
}

/// Hypothesis checklist and strict-subharmonicity certificate for a patch.
///
/// `OBSTRUCTED` means every hypothesis holds on the grid and
/// `Δu ≥ k(1 − K u) > 0` there, so the patch cannot be closed (or
/// stochastically complete) inside the field's region.
pub fn audit_obstruction(
    patch: &ImmersedPatch,
    field: &ComparisonField,
    mode: AuditMode,
    opts: &AuditOptions,
) -> Result<CheckReport> {
    let check_id = match mode {
        AuditMode::VanishingMeanCurvature => "submanifold-audit-vanishing-h",
        AuditMode::WeaklyTrapped => "submanifold-audit-weakly-trapped",
    };
    let mut report = CheckReport::new(
        check_id,
        patch.chart.name(),
        Some(field.k),
        field.q().as_slice().to_vec(),
        opts.tol,
    );
    let grid = patch.grid();
    let results: Vec<Result<GridAudit>> = grid.par_iter().map(|u| audit_point(patch, field, u, opts)).collect();
    let mut points = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(p) => points.push(p),
            Err(GeomError::SpacelikeViolation(min)) => {
                report.diag("min_induced_eigenvalue", min);
                report.set_verdict(Verdict::HypothesisFailed {
                    failed: vec!["spacelike".into()],
                });
                return Ok(report);
            }
            Err(e) => return Err(e),
        }
    }

    let k = field.k;
    let mut failed = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok && !failed.iter().any(|f: &String| f == name) {
            failed.push(name.to_string());
        }
    };
    for p in &points {
        check("energy_bound", p.energy_bound_margin(k) > 0.0);
        match mode {
            AuditMode::VanishingMeanCurvature => {
                check("vanishing_mean_curvature", p.mean_curvature_norm <= opts.zero_mean_curvature)
            }
            AuditMode::WeaklyTrapped => {
                check("weakly_future_trapped", p.class.future_or_zero());
                check("he_nonpositive", p.he <= p.he_allowance);
            }
        }
    }

    let mut energy_series = Series::new("energy_bound", "grid_index", "pi2_over_4_minus_KE");
    let mut h_series = Series::new("mean_curvature", "grid_index", "norm_H");
    let mut he_series = Series::new("he", "grid_index", "HE_minus_allowance");
    let mut sub_series = Series::new("subharmonic", "grid_index", "laplacian_minus_k_lambda");
    let mut min_k_lambda = f64::INFINITY;
    let mut max_identity = 0.0f64;
    let mut max_gradient = 0.0f64;
    let mut max_h = 0.0f64;
    for (i, p) in points.iter().enumerate() {
        let x = i as f64;
        energy_series.points.push([x, p.energy_bound_margin(k)]);
        h_series.points.push([x, p.mean_curvature_norm]);
        he_series.points.push([x, p.he - p.he_allowance]);
        sub_series.points.push([x, p.subharmonic_margin()]);
        min_k_lambda = min_k_lambda.min(p.k_lambda);
        max_identity = max_identity
            .max((p.laplacian_direct - p.laplacian_identity).abs() / (1.0 + p.laplacian_direct.abs()));
        max_gradient = max_gradient.max(p.gradient_residual);
        max_h = max_h.max(p.mean_curvature_norm);
        report.record(p.subharmonic_margin(), || SampleRecord {
            point: p.point.clone(),
            direction: None,
            second_direction: None,
            margin: p.subharmonic_margin(),
            label: format!("u = {:?}, class = {:?}", p.u, p.class),
        });
    }
    report.diag("min_k_lambda", min_k_lambda);
    report.diag("max_laplacian_identity_error", max_identity);
    report.diag("max_gradient_residual", max_gradient);
    report.diag("max_mean_curvature_norm", max_h);
    report.diag("grid_points", points.len() as f64);
    for class in [
        TrappedClass::WeaklyFutureTrapped,
        TrappedClass::WeaklyPastTrapped,
        TrappedClass::Marginally,
        TrappedClass::ZeroH,
        TrappedClass::UntrappedSpacelikeH,
    ] {
        let count = points.iter().filter(|p| p.class == class).count();
        report.diag(&format!("class_{}", class.label()), count as f64);
    }
    if patch.periodic.iter().all(|&p| p) {
        // classical maximum principle: at a maximum of u, Δu ≤ 0
        if let Some(top) = points.iter().max_by(|a, b| a.value.total_cmp(&b.value)) {
            report.diag("laplacian_at_max_u", top.laplacian_direct);
        }
    }
    report.series = vec![energy_series, h_series, he_series, sub_series];

    let verdict = if !failed.is_empty() {
        Verdict::HypothesisFailed { failed }
    } else if report.min_margin.is_some_and(|m| m >= -opts.tol) && min_k_lambda >= opts.lambda_floor {
        Verdict::Obstructed
    } else {
        Verdict::Fail
    };
    if verdict == Verdict::Obstructed && patch.periodic.iter().all(|&p| p) {
        report
            .notes
            .push("closed patch certified strictly subharmonic: contradicts the maximum principle".into());
    }
    report.set_verdict(verdict);
    Ok(report)
}

/// Outcome of looking for closed spacelike geodesics near `q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedGeodesicSearch {
    pub trials: usize,
    /// Trials whose geodesic left the chart (or hit its singular edge)
    /// before `max_length`.
    pub exited: usize,
    /// Smallest `|γ(t) − γ(0)| + |γ'(t) − γ'(0)|` over `t ≥ max_length / 20`.
    pub min_return_defect: f64,
    /// Loops that close within `closure_tol`.
    pub closed: usize,
    /// Closed loops that also satisfy the energy bound along the whole loop.
    pub admissible_closed: usize,
}

/// Maximum-principle surrogate: shoot unit spacelike geodesics from
/// points near `q` and report any that close up while staying inside
/// the region where the subharmonicity certificate applies.
pub fn closed_geodesic_search(
    field: &ComparisonField,
    n_trials: usize,
    max_length: f64,
    closure_tol: f64,
    seed: u64,
) -> Result<ClosedGeodesicSearch> {
    let sampler = RegionSampler::new(field.chart.clone(), field.region.clone(), seed)
        .with_fraction(0.5)
        .with_kinds(vec![DirectionKind::Spacelike]);
    let outcomes: Vec<Result<Option<(f64, bool, bool)>>> = (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let (p, v) = sampler.pair(i).ok_or(GeomError::SamplerExhausted(i))??;
            let arc = match integrate_geodesic(&field.chart, &p, &v, max_length, &field.numerics.geodesic) {
                Ok(a) => a,
                Err(
                    GeomError::LeftDomain { .. }
                    | GeomError::OutOfDomain(_)
                    | GeomError::StepSizeUnderflow { .. }
                    | GeomError::TooManySteps(_),
                ) => return Ok(None),
                Err(e) => return Err(e),
            };
            let steps = 2000;
            let mut best = f64::INFINITY;
            let mut best_t = 0.0;
            for j in steps / 20..=steps {
                let t = max_length * j as f64 / steps as f64;
                if let Some((x, w)) = arc.state(t) {
                    let d = (&x - &p).norm() + (&w - &v).norm();
                    if d < best {
                        best = d;
                        best_t = t;
                    }
                }
            }
            let closed = best < closure_tol;
            let admissible = closed && {
                let k = field.k;
                (0..64).all(|j| {
                    arc.position(best_t * j as f64 / 64.0)
                        .and_then(|x| field.energy(&x).ok())
                        .is_some_and(|e| k * e < PI * PI / 4.0)
                })
            };
            Ok(Some((best, closed, admissible)))
        })
        .collect();
    let mut out = ClosedGeodesicSearch {
        trials: n_trials,
        exited: 0,
        min_return_defect: f64::INFINITY,
        closed: 0,
        admissible_closed: 0,
    };
    for o in outcomes {
        match o? {
            None => out.exited += 1,
            Some((d, c, a)) => {
                out.min_return_defect = out.min_return_defect.min(d);
                out.closed += c as usize;
                out.admissible_closed += a as usize;
            }
        }
    }
    Ok(out)
}
