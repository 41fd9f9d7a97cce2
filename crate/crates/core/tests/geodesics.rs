use nalgebra::DVector;
use proptest::prelude::*;
use stconvex::geodesics::{
    exp_differential, exp_map, exp_map_in, flow, integrate_geodesic, inverse_exp, inverse_exp_in, jacobi_transport,
    signed_energy, GeodesicOptions, Numerics, StarRegion,
};
use stconvex::linalg::bilinear;
use stconvex::manifolds::Catalog;

fn v(c: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(c)
}

#[test]
fn minkowski_geodesics_are_straight_lines() {
    let e = Catalog::new().lookup("minkowski:3").unwrap();
    let q = v(&[0.2, -0.1, 0.3]);
    let w = v(&[0.5, 0.7, -1.1]);
    let p = exp_map(e.chart.as_ref(), &q, &w, &GeodesicOptions::default()).unwrap();
    assert!((&p - (&q + &w)).amax() < 1e-13);
    let back = inverse_exp(e.chart.as_ref(), &q, &p, None, &Numerics::default()).unwrap();
    assert!((&back - &w).amax() < 1e-12);
    // E_q(p) = g(p − q, p − q) = 0.25 + 0.49 − 1.21
    let energy = signed_energy(e.chart.as_ref(), &q, &p, &Numerics::default()).unwrap();
    assert!((energy - (0.25 + 0.49 - 1.21)).abs() < 1e-12);
}

#[test]
fn exp_of_zero_is_the_base_point() {
    let e = Catalog::new().lookup("desitter:3").unwrap();
    let q = e.base_point.clone();
    assert_eq!(exp_map(e.chart.as_ref(), &q, &v(&[0.0; 3]), &GeodesicOptions::default()).unwrap(), q);
    assert_eq!(inverse_exp(e.chart.as_ref(), &q, &q, None, &Numerics::default()).unwrap(), v(&[0.0; 3]));
}

#[test]
fn star_region_limits_velocities() {
    let e = Catalog::new().lookup("desitter:3").unwrap();
    let region = StarRegion::new(e.base_point.clone(), 0.5);
    let opts = GeodesicOptions::default();
    assert!(exp_map_in(e.chart.as_ref(), &region, &v(&[0.3, 0.0, 0.0]), &opts).is_ok());
    assert!(exp_map_in(e.chart.as_ref(), &region, &v(&[0.6, 0.0, 0.0]), &opts).is_err());
    let far = exp_map(e.chart.as_ref(), &e.base_point, &v(&[0.7, 0.2, 0.0]), &opts).unwrap();
    assert!(inverse_exp_in(e.chart.as_ref(), &region, &far, None, &Numerics::default()).is_err());
}

#[test]
fn differential_of_exp_at_zero_is_identity() {
    for id in ["desitter:3", "grw-cosh-hyperbolic:3", "static-hyperbolic:3"] {
        let e = Catalog::new().lookup(id).unwrap();
        let d = exp_differential(e.chart.as_ref(), &e.base_point, &v(&[1e-9, 0.0, 0.0]), &GeodesicOptions::default())
            .unwrap();
        assert!((d - nalgebra::DMatrix::identity(3, 3)).amax() < 1e-7, "{id}");
    }
}

#[test]
fn jacobi_fields_in_minkowski_are_affine() {
    let e = Catalog::new().lookup("minkowski:3").unwrap();
    let opts = GeodesicOptions::default();
    let arc = integrate_geodesic(&e.chart, &e.base_point, &v(&[0.3, 0.1, 0.9]), 1.0, &opts).unwrap();
    let (j0, dj0) = (v(&[1.0, 0.0, 0.2]), v(&[0.0, -0.5, 0.3]));
    let j = jacobi_transport(&arc, &j0, &dj0, &opts).unwrap();
    for t in [0.25, 0.5, 1.0] {
        assert!((j.value(t).unwrap() - (&j0 + &dj0 * t)).amax() < 1e-11);
    }
}

#[test]
fn jacobi_field_on_desitter_timelike_geodesic() {
    // along a unit timelike geodesic in curvature 1, a normal Jacobi field
    // with J(0) = 0 has |J(t)| = |J'(0)| sinh t
    let e = Catalog::new().lookup("desitter:3").unwrap();
    let chart = e.chart.as_ref();
    let q = e.base_point.clone();
    let g = chart.metric_at(q.as_slice());
    let mut u = v(&[0.0, 0.0, 0.0]);
    let t_idx = chart.time_index().unwrap();
    u[t_idx] = 1.0 / (-g[(t_idx, t_idx)]).sqrt();
    let s = (0..3).find(|&i| i != t_idx).unwrap();
    let mut n = v(&[0.0, 0.0, 0.0]);
    n[s] = 1.0 / g[(s, s)].sqrt();
    let opts = GeodesicOptions::default();
    let arc = integrate_geodesic(&e.chart, &q, &(&u * 0.5), 1.0, &opts).unwrap();
    let j = jacobi_transport(&arc, &v(&[0.0; 3]), &n, &opts).unwrap();
    for t in [0.4, 1.0] {
        let x = j.base_point(t).unwrap();
        let jt = j.value(t).unwrap();
        let norm = bilinear(&chart.metric_at(x.as_slice()), &jt, &jt).sqrt();
        let expected = 2.0 * (0.5 * t as f64).sinh();
        assert!((norm - expected).abs() < 1e-8, "t={t}: {norm} vs {expected}");
    }
}

fn charts() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec![
        "minkowski:3",
        "desitter:3",
        "antidesitter-sin:3",
        "grw-cosh-hyperbolic:3",
        "static-hyperbolic:3",
        "minkowski-grw:3",
    ])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn affine_reparametrization(id in charts(), d in prop::collection::vec(-1.0f64..1.0, 3), c in 0.2f64..1.5) {
        let e = Catalog::new().lookup(id).unwrap();
        let w = v(&d) * (0.4 * e.star_radius);
        let opts = GeodesicOptions::default();
        let (scaled, _) = flow(e.chart.as_ref(), &e.base_point, &(&w * c), 1.0, &opts).unwrap();
        let (stretched, _) = flow(e.chart.as_ref(), &e.base_point, &w, c, &opts).unwrap();
        prop_assert!((scaled - stretched).amax() < 1e-9);
    }

    #[test]
    fn speed_is_conserved(id in charts(), d in prop::collection::vec(-1.0f64..1.0, 3)) {
        let e = Catalog::new().lookup(id).unwrap();
        let w = v(&d) * (0.5 * e.star_radius);
        let arc = integrate_geodesic(&e.chart, &e.base_point, &w, 1.0, &GeodesicOptions::default()).unwrap();
        prop_assert!(arc.stats.max_norm_drift <= 1e-8, "{}", arc.stats.max_norm_drift);
        let (x, u) = arc.state(1.0).unwrap();
        let end = bilinear(&e.chart.metric_at(x.as_slice()), &u, &u);
        prop_assert!((end - arc.speed_squared()).abs() <= 1e-8);
    }

    #[test]
    fn inverse_exp_round_trip(id in charts(), d in prop::collection::vec(-1.0f64..1.0, 3)) {
        let e = Catalog::new().lookup(id).unwrap();
        let w = v(&d) * (0.5 * e.star_radius);
        let p = exp_map(e.chart.as_ref(), &e.base_point, &w, &GeodesicOptions::default()).unwrap();
        let back = inverse_exp(e.chart.as_ref(), &e.base_point, &p, None, &Numerics::default()).unwrap();
        prop_assert!((back - &w).amax() < 1e-7);
    }

    #[test]
    fn integration_is_deterministic(id in charts(), d in prop::collection::vec(-1.0f64..1.0, 3)) {
        let e = Catalog::new().lookup(id).unwrap();
        let w = v(&d) * (0.5 * e.star_radius);
        let opts = GeodesicOptions::default();
        let a = exp_map(e.chart.as_ref(), &e.base_point, &w, &opts).unwrap();
        let b = exp_map(e.chart.as_ref(), &e.base_point, &w, &opts).unwrap();
        prop_assert_eq!(a, b);
    }
}
