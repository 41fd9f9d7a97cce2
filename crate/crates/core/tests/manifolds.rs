use nalgebra::DVector;
use proptest::prelude::*;
use stconvex::manifolds::{
    causal_character, christoffel, finite_difference_jet, metric_jet, sectional_curvature, CausalCharacter, Catalog,
    PlaneSection, TangentVector,
};

fn v(c: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(c)
}

#[test]
fn constant_curvature_charts_have_their_curvature() {
    let catalog = Catalog::new();
    for (id, k) in [("minkowski:3", 0.0), ("desitter:3", 1.0), ("antidesitter-sin:3", -1.0)] {
        let e = catalog.lookup(id).unwrap();
        assert_eq!(e.constant_curvature, Some(k));
        let p = &e.base_point;
        for (a, b) in [
            (v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0])),
            (v(&[0.3, -0.2, 1.0]), v(&[0.1, 0.9, 0.4])),
            (v(&[0.0, 0.5, 0.5]), v(&[1.0, 0.0, 0.2])),
        ] {
            let s = sectional_curvature(e.chart.as_ref(), &PlaneSection::new(p.clone(), a, b), 1e-12).unwrap();
            assert!((s - k).abs() < 1e-6, "{id}: {s} vs {k}");
        }
    }
}

#[test]
fn grw_sectional_curvatures_match_closed_form() {
    // −dτ² + cosh²τ g_H: mixed planes f''/f = 1, fiber planes (C + f'²)/f²
    let e = Catalog::new().lookup("grw-cosh-hyperbolic:3").unwrap();
    let p = v(&[0.4, 0.1, -0.2]);
    let chart = e.chart.as_ref();
    let mixed = sectional_curvature(chart, &PlaneSection::new(p.clone(), v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.3])), 1e-12)
        .unwrap();
    assert!((mixed - 1.0).abs() < 1e-6, "{mixed}");
    let fiber = sectional_curvature(chart, &PlaneSection::new(p.clone(), v(&[0.0, 1.0, 0.0]), v(&[0.0, 0.0, 1.0])), 1e-12)
        .unwrap();
    let (c, s) = (0.4f64.cosh(), 0.4f64.sinh());
    assert!((fiber - (s * s - 1.0) / (c * c)).abs() < 1e-6, "{fiber}");
}

#[test]
fn degenerate_planes_are_rejected() {
    let e = Catalog::new().lookup("minkowski:3").unwrap();
    let p = e.base_point.clone();
    let plane = PlaneSection::new(p.clone(), v(&[1.0, 0.0, 0.0]), v(&[2.0, 0.0, 0.0]));
    assert!(sectional_curvature(e.chart.as_ref(), &plane, 1e-12).is_err());
    // the plane through a null vector and an orthogonal spacelike vector has Q = 0
    let null = PlaneSection::new(p, v(&[1.0, 0.0, 1.0]), v(&[0.0, 1.0, 0.0]));
    assert!(sectional_curvature(e.chart.as_ref(), &null, 1e-12).is_err());
}

#[test]
fn causal_characters_in_minkowski() {
    let e = Catalog::new().lookup("minkowski:3").unwrap();
    let p = e.base_point.clone();
    let tv = |c: &[f64]| TangentVector::new(p.clone(), v(c));
    let chart = e.chart.as_ref();
    assert_eq!(causal_character(chart, &tv(&[0.0, 0.0, 1.0]), 1e-12).unwrap(), CausalCharacter::Timelike);
    assert_eq!(causal_character(chart, &tv(&[1.0, 0.0, 0.0]), 1e-12).unwrap(), CausalCharacter::Spacelike);
    assert_eq!(causal_character(chart, &tv(&[0.6, 0.8, 1.0]), 1e-12).unwrap(), CausalCharacter::Null);
    let riemannian = Catalog::new().lookup("model-surface:K=1,index=0").unwrap();
    let q = riemannian.base_point.clone();
    assert!(causal_character(riemannian.chart.as_ref(), &TangentVector::new(q, v(&[1.0, 0.0])), 1e-12).is_err());
}

#[test]
fn catalog_lists_every_builtin_and_rejects_unknown_ids() {
    let catalog = Catalog::new();
    let listed: Vec<String> = catalog.list().into_iter().map(|e| e.id).collect();
    for id in stconvex::manifolds::BUILTIN_IDS {
        assert!(listed.iter().any(|l| l == id), "{id}");
    }
    assert!(catalog.lookup("minkowski:0").is_err());
    assert!(catalog.lookup("nonsense").is_err());
    assert!(catalog.lookup("grw:missing").is_err());
}

#[test]
fn metric_index_matches_signature() {
    for e in Catalog::new().list() {
        let g = e.chart.metric_at(e.base_point.as_slice());
        assert!((&g - g.transpose()).amax() < 1e-15, "{}", e.id);
        let negative = g.symmetric_eigenvalues().iter().filter(|&&l| l < 0.0).count();
        assert_eq!(negative, e.chart.index(), "{}", e.id);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn analytic_jets_agree_with_finite_differences(
        which in 0usize..6,
        d in prop::collection::vec(-0.3f64..0.3, 3),
    ) {
        let id = ["minkowski:3", "desitter:3", "antidesitter-sin:3", "grw-cosh-hyperbolic:3",
                  "static-hyperbolic:3", "minkowski-grw:3"][which];
        let e = Catalog::new().lookup(id).unwrap();
        let x = &e.base_point + v(&d) * e.star_radius.min(1.0);
        let exact = metric_jet(e.chart.as_ref(), x.as_slice(), true).unwrap();
        let fd = finite_difference_jet(e.chart.as_ref(), x.as_slice(), true).unwrap();
        for l in 0..3 {
            prop_assert!((&exact.dg[l] - &fd.dg[l]).amax() < 1e-7, "{id} dg[{l}]");
        }
        let (a, b) = (exact.ddg.unwrap(), fd.ddg.unwrap());
        for l in 0..9 {
            prop_assert!((&a[l] - &b[l]).amax() < 1e-5, "{id} ddg[{l}]");
        }
    }

    #[test]
    fn christoffels_are_symmetric(which in 0usize..4, d in prop::collection::vec(-0.3f64..0.3, 3)) {
        let id = ["desitter:3", "antidesitter-sin:3", "grw-cosh-hyperbolic:3", "static-hyperbolic:3"][which];
        let e = Catalog::new().lookup(id).unwrap();
        let x = &e.base_point + v(&d) * e.star_radius.min(1.0);
        let c = christoffel(e.chart.as_ref(), x.as_slice()).unwrap();
        for k in 0..3 { for i in 0..3 { for j in 0..3 {
            prop_assert_eq!(c.get(k, i, j), c.get(k, j, i));
        }}}
    }
}
