use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use stconvex::convexity::*;
use stconvex::geodesics::{integrate_geodesic, GeodesicOptions, StarRegion};
use stconvex::manifolds::{metric_eval, Catalog, ChartRef, Interval, Minkowski, WarpedProductSpec, Warping};
use stconvex::report::Verdict;
use stconvex::sampling::{DirectionKind, ListSampler, RegionSampler, Sampler};

fn field(id: &str, k: f64) -> ComparisonField {
    let e = Catalog::new().lookup(id).unwrap();
    ComparisonField::new(e.chart, k, StarRegion::new(e.base_point, e.star_radius)).unwrap()
}

fn v(c: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(c)
}

#[test]
fn minkowski_unit_directions_give_plus_minus_one() {
    let f = field("minkowski:3", 0.0);
    let p = v(&[0.3, -0.2, 0.4]);
    let opts = HessianOptions::default();
    let t = hessian_quadratic_form(&f, &p, &v(&[0.0, 0.0, 2.0]), &opts).unwrap();
    assert!((t.value + 1.0).abs() < 1e-6, "{}", t.value);
    assert_eq!(t.g_vv, -1.0);
    let s = hessian_quadratic_form(&f, &p, &v(&[0.6, 0.8, 0.0]), &opts).unwrap();
    assert!((s.value - 1.0).abs() < 1e-6);
    assert!(s.error_within_budget());
}

#[test]
fn desitter_quadratic_form_matches_model() {
    let f = field("desitter:3", 1.0);
    let sampler = RegionSampler::new(f.chart.clone(), f.region.clone(), 11);
    for i in 0..12 {
        let (p, dir) = sampler.pair(i).unwrap().unwrap();
        let hs = hessian_quadratic_form(&f, &p, &dir, &HessianOptions::default()).unwrap();
        let e = f.energy(&p).unwrap();
        let expected = (1.0 - f_value(1.0, e)) * hs.g_vv;
        assert!((hs.value - expected).abs() < 1e-5, "sample {i}: {} vs {expected}", hs.value);
    }
}

#[test]
fn hessian_matrix_examples() {
    let opts = HessianOptions::default();
    let f = field("minkowski:3", 0.0);
    let p = v(&[0.5, 0.1, -0.3]);
    let h = hessian_matrix(&f, &p, &opts).unwrap();
    let g = metric_eval(f.chart.as_ref(), p.as_slice()).unwrap();
    assert!((&h - &g).amax() < 1e-6);

    for (id, k) in [("desitter:3", 1.0), ("antidesitter-sin:3", -1.0)] {
        let f = field(id, k);
        let p = f.q() + v(&[0.2, -0.15, 0.1]);
        let h = hessian_matrix(&f, &p, &opts).unwrap();
        let g = metric_eval(f.chart.as_ref(), p.as_slice()).unwrap();
        let lam = f.lambda_at(&p).unwrap();
        assert!((&h - &g * lam).amax() < 1e-5, "{id}");
        // geodesic stencils agree with the coordinate-derivative oracle
        let oracle = coordinate_hessian(&f, &p, 1e-3).unwrap();
        assert!((&h - oracle).amax() < 1e-5, "{id}");
    }
}

#[test]
fn hessian_at_vertex_is_metric_on_all_charts() {
    let catalog = Catalog::new();
    for entry in catalog.list() {
        for k in [-1.0, 0.0, 1.0] {
            let f = ComparisonField::new(entry.chart.clone(), k, StarRegion::new(entry.base_point.clone(), entry.star_radius)).unwrap();
            let h = hessian_matrix(&f, &entry.base_point, &HessianOptions::default()).unwrap();
            let g = metric_eval(entry.chart.as_ref(), entry.base_point.as_slice()).unwrap();
            assert!((&h - &g).amax() < 1e-5, "{} K={k}: {}", entry.id, (&h - &g).amax());
        }
    }
}

#[test]
fn minkowski_lambda_convexity_is_equality() {
    let f = field("minkowski:3", 0.0);
    let sampler = RegionSampler::new(f.chart.clone(), f.region.clone(), 3);
    let one = |_: &DVector<f64>| Ok(1.0);
    let r = certify_lambda_convex(&f, &sampler, Some(&one), &CertifyOptions::default().with_samples(30)).unwrap();
    assert!(r.pass);
    assert!(r.min_margin.unwrap().abs() < 1e-6 && r.max_margin.unwrap().abs() < 1e-6);
}

#[test]
fn grw_cosh_hyperbolic_is_strictly_lambda_convex() {
    let f = field("grw-cosh-hyperbolic:3", 1.0);
    let sampler = RegionSampler::new(f.chart.clone(), f.region.clone(), 2024);
    let r = certify_lambda_convex(&f, &sampler, None, &CertifyOptions::default().with_samples(60)).unwrap();
    assert!(r.pass, "{:?}", r.min_margin);
    assert!(r.diagnostics["strict_samples"] >= 1.0);
    assert_eq!(r.series[0].points.len(), 60);
}

#[test]
fn antidesitter_with_too_large_k_fails() {
    // R = -1 on anti-de Sitter, so R <= 1 fails on timelike planes.
    let f = field("antidesitter-sin:3", 1.0);
    let sampler = RegionSampler::new(f.chart.clone(), f.region.clone(), 5).with_kinds(vec![DirectionKind::Timelike]);
    let r = certify_lambda_convex(&f, &sampler, None, &CertifyOptions::default().with_samples(20)).unwrap();
    assert!(!r.pass);
    assert!(r.min_margin.unwrap() < -1e-3);
    assert!(r.worst_sample.is_some());
}

#[test]
fn sampler_exhaustion_is_an_error() {
    let f = field("minkowski:2", 0.0);
    let s = ListSampler(vec![(v(&[0.1, 0.0]), v(&[1.0, 0.0]))]);
    let err = certify_lambda_convex(&f, &s, None, &CertifyOptions::default().with_samples(2)).unwrap_err();
    assert_eq!(err, stconvex::GeomError::SamplerExhausted(1));
}

#[test]
fn stencil_leaving_region_is_domain_too_tight() {
    let e = Catalog::new().lookup("desitter:3").unwrap();
    let f = ComparisonField::new(e.chart, 1.0, StarRegion::new(e.base_point, 0.1)).unwrap();
    let p = v(&[0.0999999, 0.0, 0.0]);
    let err = hessian_quadratic_form(&f, &p, &v(&[1.0, 0.0, 0.0]), &HessianOptions::default()).unwrap_err();
    assert_eq!(err, stconvex::GeomError::DomainTooTight);
}

fn minkowski_quadratic(coefficients: Vec<f64>) -> DiagonalQuadratic {
    let chart: ChartRef = Arc::new(Minkowski::new(3));
    DiagonalQuadratic {
        chart,
        center: DVector::zeros(3),
        coefficients,
    }
}

#[test]
fn minkowski_spacetime_convex_examples() {
    let opts = CertifyOptions::default().with_samples(10);
    let half = |_: &DVector<f64>| Ok(0.5);
    let good = minkowski_quadratic(vec![1.0, 1.0, -0.5]);
    let sampler = stconvex::sampling::BoxSampler::around(good.chart.clone(), &DVector::zeros(3), 1.0, 1);
    let r = certify_spacetime_convex(&good, &half, &sampler, &opts).unwrap();
    assert!(r.pass, "{r:?}");

    let bad = minkowski_quadratic(vec![1.0, 1.0, 1.0]);
    let r = certify_spacetime_convex(&bad, &half, &sampler, &opts).unwrap();
    assert!(!r.pass);
    assert_eq!(r.diagnostics["failed_signature"], 10.0);
}

fn sin_hyperbolic(upper: f64) -> WarpedProductSpec {
    WarpedProductSpec::new(Interval::new(0.0, upper), Warping::sin(), 2, -1.0)
}

#[test]
fn warping_lift_signature_switches_at_quarter_period() {
    // Hess(-sin²τ/2) = -cos 2τ dτ² + cos²τ g_F: Lorentzian only for τ < π/4.
    let opts = CertifyOptions::default().with_samples(12);
    let lower = gi_warped_candidate(&sin_hyperbolic(PI / 2.0), &WarpedRegion { tau: (0.05, PI / 4.0 - 0.05), fiber_half_width: 0.5, seed: 1 }, &opts).unwrap();
    assert!(lower.pass, "{lower:?}");
    let upper = gi_warped_candidate(&sin_hyperbolic(PI / 2.0), &WarpedRegion { tau: (PI / 4.0 + 0.05, PI / 2.0 - 0.05), fiber_half_width: 0.5, seed: 1 }, &opts).unwrap();
    assert!(!upper.pass);
    assert_eq!(upper.diagnostics["failed_signature"], 12.0);
    assert_eq!(upper.diagnostics["failed_convexity"], 0.0);

    let full = gi_warped_candidate(&sin_hyperbolic(PI), &WarpedRegion { tau: (0.05, PI - 0.05), fiber_half_width: 0.5, seed: 2 }, &opts).unwrap();
    assert!(!full.pass);
    assert!(full.diagnostics["first_violation_x0"] > PI / 4.0 - 1e-9);
}

#[test]
fn static_product_lift_fails() {
    let spec = WarpedProductSpec::new(Interval::real_line(), Warping::constant(1.0), 2, -1.0);
    let r = gi_warped_candidate(&spec, &WarpedRegion { tau: (-1.0, 1.0), fiber_half_width: 0.5, seed: 3 }, &CertifyOptions::default().with_samples(5)).unwrap();
    assert!(!r.pass);
    assert_eq!(r.verdict, Verdict::Fail);
    assert_eq!(r.diagnostics["failed_lambda_positive"], 5.0);
}

fn radial_arc(f: &ComparisonField, dir: &[f64], t_max: f64) -> stconvex::geodesics::GeodesicArc {
    integrate_geodesic(&f.chart, f.q(), &v(dir), t_max, &GeodesicOptions::default()).unwrap()
}

#[test]
fn shape_operator_in_constant_curvature_is_model() {
    for (id, k) in [("desitter:3", 1.0), ("minkowski:3", 0.0), ("antidesitter-sin:3", -1.0)] {
        let f = field(id, k);
        let arc = radial_arc(&f, &[0.3, 0.1, 0.2], 1.0);
        let track = shape_operator_track(&f, &arc, &[0.25, 0.5, 0.75, 1.0], &ShapeTrackOptions::default()).unwrap();
        for (s, m) in track.s.iter().zip(&track.s_model) {
            assert!((s - m).amax() < 1e-5, "{id}");
        }
        assert!(track.self_adjoint_defect.iter().all(|&d| d < 1e-7));
        if k == 0.0 {
            assert!((&track.s[0] - DMatrix::<f64>::identity(3, 3)).amax() < 1e-6);
        }
    }
}

#[test]
fn shape_operator_comparison_on_grw() {
    let f = field("grw-cosh-hyperbolic:3", 1.0);
    let arc = radial_arc(&f, &[0.2, 0.6, -0.3], 1.0);
    assert!(arc.speed_squared() > 0.0);
    let track = shape_operator_track(&f, &arc, &[0.3, 0.6, 0.9], &ShapeTrackOptions::default()).unwrap();
    assert!(track.min_eig() >= -1e-5, "{}", track.min_eig());
}

#[test]
fn riccati_residual_vanishes_along_radial_geodesics() {
    let f = field("grw-cosh-hyperbolic:3", 1.0);
    let arc = radial_arc(&f, &[0.5, 0.3, -0.1], 1.0);
    let opts = ShapeTrackOptions {
        riccati_step: Some(0.02),
        ..Default::default()
    };
    let track = shape_operator_track(&f, &arc, &[0.5, 0.8], &opts).unwrap();
    for r in &track.riccati_residual {
        assert!(r.unwrap() < 1e-4, "{r:?}");
    }
}

#[test]
fn null_arc_rejected() {
    let f = field("minkowski:2", 0.0);
    let arc = radial_arc(&f, &[1.0, 1.0], 0.5);
    assert!(shape_operator_track(&f, &arc, &[0.2], &ShapeTrackOptions::default()).is_err());
}

#[test]
fn lambda_positive_below_quarter_period() {
    for i in 0..=40 {
        let k = -2.0 + 0.1 * i as f64;
        for j in 0..=200 {
            let e = -20.0 + 0.2 * j as f64;
            if k * e < PI * PI / 4.0 - 1e-12 {
                assert!(lambda_value(k, e) > 0.0, "K={k} E={e}");
            }
        }
    }
}

proptest! {
    #[test]
    fn closed_form_matches_series(k in -5.0f64..5.0, x in -0.999f64..0.999) {
        prop_assume!(k.abs() > 1e-3);
        let e = x / k;
        prop_assert!((f_value(k, e) - f_series(k, e, 20)).abs() <= 1e-12);
    }

    #[test]
    fn lambda_is_one_minus_k_f(k in -3.0f64..3.0, e in -4.0f64..4.0) {
        let lhs = lambda_value(k, e);
        let rhs = 1.0 - k * f_value(k, e);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }
}
