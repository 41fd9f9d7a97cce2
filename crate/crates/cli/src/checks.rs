use std::f64::consts::PI;

use nalgebra::DVector;
use stconvex::convexity::{
    certify_lambda_convex, gi_warped_candidate, gradient_formula_check, hessian_quadratic_form,
    second_derivative_along, track_random_arcs, CertifyOptions, ComparisonField, HessianOptions, ShapeTrackOptions,
    WarpedRegion,
};
use stconvex::curvature_bounds::{certify_bound, cross_validate_grw, BoundQuery};
use stconvex::geodesics::{exp_map, integrate_geodesic, inverse_exp_in, StarRegion};
use stconvex::linalg::bilinear;
use stconvex::manifolds::{metric_eval, Catalog, CatalogEntry};
use stconvex::report::{CheckReport, SampleRecord, Series, Verdict};
use stconvex::sampling::{causal_direction, rng_for, DirectionKind, RegionSampler, Sampler};
use stconvex::submanifolds::{audit_obstruction, restricted_laplacian, AuditOptions, ImmersedPatch, LaplacianOptions};
use stconvex::triangles::compare_random_triangles;
use stconvex::{GeomError, Result};

use crate::config::{CheckSpec, FieldSpec, Identity};

pub fn comparison_field(catalog: &Catalog, spec: &FieldSpec) -> Result<(CatalogEntry, ComparisonField)> {
    let entry = catalog.lookup(&spec.chart)?;
    let q = spec
        .q
        .as_ref()
        .map(|q| DVector::from_column_slice(q))
        .unwrap_or_else(|| entry.base_point.clone());
    let radius = spec.region_radius.unwrap_or(entry.star_radius);
    let field = ComparisonField::new(entry.chart.clone(), spec.k, StarRegion::new(q, radius))?;
    Ok((entry, field))
}

/// Runs one check with the given (already derived) seed.
pub fn execute(check: &CheckSpec, catalog: &Catalog, seed: u64) -> Result<CheckReport> {
    match check {
        CheckSpec::Bound {
            chart,
            k,
            direction,
            n_samples,
            tol,
            cross_validate,
            grid_n,
            ..
        } => {
            let entry = catalog.lookup(chart)?;
            if *cross_validate {
                let spec = entry.grw.as_ref().ok_or_else(|| GeomError::InvalidArgument("not a warped product".into()))?;
                let mut r = cross_validate_grw(spec, *k, *direction, *n_samples, *grid_n, seed, *tol)?.to_check_report();
                r.chart = entry.id.clone();
                return Ok(r);
            }
            let region = StarRegion::new(entry.base_point.clone(), entry.star_radius);
            let points = RegionSampler::new(entry.chart.clone(), region, seed);
            let report = certify_bound(&BoundQuery {
                chart: entry.chart.clone(),
                k: *k,
                direction: *direction,
                points: &points,
                n_samples: *n_samples,
                seed,
                tol: *tol,
            })?;
            let mut r = report.to_check_report();
            r.q = entry.base_point.as_slice().to_vec();
            Ok(r)
        }
        CheckSpec::Convexity {
            field,
            n_samples,
            tol,
            lambda,
            ..
        } => {
            let (_, f) = comparison_field(catalog, field)?;
            let sampler = RegionSampler::new(f.chart.clone(), f.region.clone(), seed);
            let opts = CertifyOptions {
                tol: *tol,
                ..CertifyOptions::default().with_samples(*n_samples)
            };
            match lambda {
                Some(c) => {
                    let c = *c;
                    let constant = move |_: &DVector<f64>| Ok(c);
                    certify_lambda_convex(&f, &sampler, Some(&constant), &opts)
                }
                None => certify_lambda_convex(&f, &sampler, None, &opts),
            }
        }
        CheckSpec::SpacetimeConvexity {
            chart,
            tau,
            fiber_half_width,
            n_samples,
            tol,
            ..
        } => {
            let entry = catalog.lookup(chart)?;
            let spec = entry.grw.as_ref().ok_or_else(|| GeomError::InvalidArgument("not a warped product".into()))?;
            let opts = CertifyOptions {
                tol: *tol,
                ..CertifyOptions::default().with_samples(*n_samples)
            };
            let region = WarpedRegion {
                tau: (tau[0], tau[1]),
                fiber_half_width: *fiber_half_width,
                seed,
            };
            let mut r = gi_warped_candidate(spec, &region, &opts)?;
            r.chart = entry.id.clone();
            Ok(r)
        }
        CheckSpec::ShapeTrack {
            field,
            n_arcs,
            times_per_arc,
            tol,
            ..
        } => {
            let (_, f) = comparison_field(catalog, field)?;
            track_random_arcs(&f, *n_arcs, *times_per_arc, seed, *tol, &ShapeTrackOptions::default())
        }
        CheckSpec::Triangles {
            field,
            direction,
            scale,
            n_triangles,
            pairs_per_triangle,
            tol,
            ..
        } => {
            let (_, f) = comparison_field(catalog, field)?;
            compare_random_triangles(
                &f.chart,
                &f.region,
                f.k,
                *scale,
                *n_triangles,
                *pairs_per_triangle,
                *direction,
                seed,
                *tol,
                &f.numerics,
            )
        }
        CheckSpec::SubmanifoldAudit {
            field,
            patch,
            mode,
            grid_n,
            tol,
        } => {
            let (_, f) = comparison_field(catalog, field)?;
            let patch = ImmersedPatch::new(f.chart.clone(), patch.clone(), *grid_n)?;
            let opts = AuditOptions {
                tol: *tol,
                ..AuditOptions::default()
            };
            audit_obstruction(&patch, &f, *mode, &opts)
        }
        CheckSpec::Identities {
            field,
            identity,
            n_samples,
            tol,
            patch,
            grid_n,
            ..
        } => {
            let (_, f) = comparison_field(catalog, field)?;
            let patch = match patch {
                Some(p) => Some(ImmersedPatch::new(f.chart.clone(), p.clone(), *grid_n)?),
                None => None,
            };
            identity_check(&f, *identity, *n_samples, seed, *tol, patch.as_ref())
        }
    }
}

fn record_residual(report: &mut CheckReport, residual: f64, point: &DVector<f64>, direction: Option<&DVector<f64>>, label: String) {
    let m = -residual;
    report.record(m, || SampleRecord {
        point: point.as_slice().to_vec(),
        direction: direction.map(|d| d.as_slice().to_vec()),
        second_direction: None,
        margin: m,
        label,
    });
}

/// A residual-style check: margin `−residual`, pass iff `residual ≤ tol`.
pub fn identity_check(
    f: &ComparisonField,
    identity: Identity,
    n_samples: usize,
    seed: u64,
    tol: f64,
    patch: Option<&ImmersedPatch>,
) -> Result<CheckReport> {
    let mut report = CheckReport::new(
        &format!("identity-{}", identity.label()),
        f.chart.name(),
        Some(f.k),
        f.q().as_slice().to_vec(),
        tol,
    );
    let sampler = RegionSampler::new(f.chart.clone(), f.region.clone(), seed);
    let hess = HessianOptions::default();
    let mut series = Series::new(identity.label(), "sample", "residual");
    match identity {
        Identity::Hessian => {
            for i in 0..n_samples {
                let (p, v) = sampler.pair(i).ok_or(GeomError::SamplerExhausted(i))??;
                let s = hessian_quadratic_form(f, &p, &v, &hess)?;
                let e = f.energy(&p)?;
                let expected = stconvex::convexity::lambda_value(f.k, e) * s.g_vv;
                let dev = (s.value - expected).abs() / (1.0 + expected.abs());
                series.points.push([i as f64, dev]);
                record_residual(&mut report, dev, &p, Some(&s.direction), format!("E = {e:.6}"));
            }
        }
        Identity::Vertex => {
            let g = metric_eval(f.chart.as_ref(), f.q().as_slice())?;
            for i in 0..n_samples {
                let mut rng = rng_for(seed, i as u64);
                let v = causal_direction(&mut rng, &g, DirectionKind::Timelike, 1.0)
                    .ok_or_else(|| GeomError::InvalidArgument("chart has no timelike directions".into()))?;
                let (value, _) = second_derivative_along(f, f.q(), &v, &hess)?;
                let dev = (value + 1.0).abs();
                series.points.push([i as f64, dev]);
                record_residual(&mut report, dev, f.q(), Some(&v), format!("g(v,v) = {:.3e}", bilinear(&g, &v, &v)));
            }
        }
        Identity::GradientFormula => {
            let mut skipped = 0usize;
            for i in 0..n_samples {
                let p = sampler.point(i).ok_or(GeomError::SamplerExhausted(i))??;
                let c = gradient_formula_check(f, &p)?;
                if f.k * c.energy > PI * PI - 0.1 {
                    skipped += 1;
                    continue;
                }
                series.points.push([i as f64, c.residual]);
                record_residual(&mut report, c.residual, &p, None, format!("E = {:.6}", c.energy));
            }
            report.diag("skipped_beyond_energy_bound", skipped as f64);
        }
        Identity::LaplacianIdentity => {
            let patch = patch.ok_or_else(|| GeomError::InvalidArgument("laplacian identity needs a patch".into()))?;
            let grid = patch.grid();
            for (i, u) in grid.iter().enumerate() {
                let pair = restricted_laplacian(patch, f, u, &LaplacianOptions::default())?;
                let rel = pair.relative_error();
                series.points.push([i as f64, rel]);
                record_residual(
                    &mut report,
                    rel,
                    &pair.extrinsic.point,
                    None,
                    format!("direct {:.9}, identity {:.9}", pair.direct, pair.identity),
                );
            }
        }
        Identity::SpeedDrift => {
            for i in 0..n_samples {
                let (p, v) = sampler.pair(i).ok_or(GeomError::SamplerExhausted(i))??;
                let arc = integrate_geodesic(&f.chart, &p, &(v * 0.5 * f.region.radius), 1.0, &f.numerics.geodesic);
                let arc = match arc {
                    Ok(a) => a,
                    Err(GeomError::LeftDomain { .. }) => {
                        report.diag("left_domain", report.diagnostics.get("left_domain").copied().unwrap_or(0.0) + 1.0);
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let drift = arc.stats.max_norm_drift;
                series.points.push([i as f64, drift]);
                record_residual(&mut report, drift, &p, Some(&arc.v0), format!("{} steps", arc.stats.steps));
            }
        }
        Identity::RoundTrip => {
            let g = metric_eval(f.chart.as_ref(), f.q().as_slice())?;
            for i in 0..n_samples {
                let w = sampler.preimage(i);
                let p = exp_map(f.chart.as_ref(), f.q(), &w, &f.numerics.geodesic)?;
                let v = inverse_exp_in(f.chart.as_ref(), &f.region, &p, None, &f.numerics)?;
                let err = (&v - &w).norm();
                series.points.push([bilinear(&g, &w, &w), err]);
                record_residual(&mut report, err, &p, Some(&w), String::new());
            }
            series.x_label = "energy".into();
        }
    }
    report.series.push(series);
    if report.n_samples == 0 {
        report.notes.push("no samples evaluated".into());
        report.set_verdict(Verdict::Fail);
    } else {
        report.finish_by_margin();
    }
    Ok(report)
}
