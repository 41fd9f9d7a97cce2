use std::f64::consts::PI;

use proptest::prelude::*;

use stconvex::geodesics::{Numerics, StarRegion};
use stconvex::manifolds::{Catalog, ChartRef};
use stconvex::triangles::*;
use stconvex::GeomError;

use ModelSignature::{Lorentzian, Riemannian};

#[test]
fn model_energy_examples() {
    assert_eq!(model_energy(0.0, Riemannian, &[0.0, 0.0], &[3.0, 0.0]).unwrap(), 9.0);
    let e = model_energy(1.0, Riemannian, &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap();
    assert!((e - PI * PI / 4.0).abs() < 1e-14);
    // dS₂: <a,b> = cosh 1
    let a = [1.0, 0.0, 0.0];
    let b = [1.0f64.cosh(), 0.0, 1.0f64.sinh()];
    assert!((model_energy(1.0, Lorentzian, &a, &b).unwrap() + 1.0).abs() < 1e-14);
    // antipodal points are beyond the principal branch
    assert!(matches!(
        model_energy(1.0, Riemannian, &[1.0, 0.0, 0.0], &[-1.0, 0.0, 0.0]),
        Err(GeomError::BranchAmbiguity { .. })
    ));
}

#[test]
fn realization_examples() {
    let t = realize_model_triangle(0.0, [9.0, 9.0, 9.0]).unwrap();
    assert_eq!(t.signature, Riemannian);
    for (s, &(i, j)) in SIDES.iter().enumerate() {
        let e = t.energy(&t.vertices[i], &t.vertices[j]).unwrap();
        assert!((e - 9.0).abs() < 1e-12, "side {s}");
    }

    // two unit timelike edges from a common vertex in the Minkowski plane
    let p1 = [0.0, 1.0];
    let p2 = [1.0f64.sinh(), 1.0f64.cosh()];
    let mink = |a: &[f64], b: &[f64]| (b[0] - a[0]).powi(2) - (b[1] - a[1]).powi(2);
    let e12 = mink(&p1, &p2);
    let t = realize_model_triangle(0.0, [-1.0, -1.0, e12]).unwrap();
    assert_eq!(t.signature, Lorentzian);
    assert!((t.energy(&t.vertices[1], &t.vertices[2]).unwrap() - e12).abs() < 1e-12);

    assert!(matches!(realize_model_triangle(0.0, [1.0, 4.0, 9.0]), Err(GeomError::DegenerateTriangle(_))));
    // two orthogonal timelike edges: negative definite edge Gram, no flat model
    assert!(matches!(realize_model_triangle(0.0, [-1.0, -1.0, -2.0]), Err(GeomError::NotRealizable(_))));
}

fn entry(id: &str) -> (ChartRef, StarRegion) {
    let e = Catalog::new().lookup(id).unwrap();
    (e.chart, StarRegion::new(e.base_point, e.star_radius))
}

#[test]
fn desitter_triangles_realize_on_ds2() {
    let (chart, region) = entry("desitter:3");
    let num = Numerics::default();
    for i in 0..5 {
        let (tri, model) = random_triangle(&chart, &region, 1.0, 0.6, 3, i, &num).unwrap();
        assert!(model.quadric_defect() < 1e-12);
        for (s, &(a, b)) in SIDES.iter().enumerate() {
            let e = model.energy(&model.vertices[a], &model.vertices[b]).unwrap();
            assert!((e - tri.side_energies[s]).abs() < 1e-9);
        }
    }
}

#[test]
fn vertex_pairs_have_zero_margin() {
    let (chart, region) = entry("grw-cosh-hyperbolic:3");
    let num = Numerics::default();
    let (tri, _) = random_triangle(&chart, &region, 1.0, 0.5, 8, 0, &num).unwrap();
    let pairs = [((0, 0.0), (0, 1.0)), ((1, 1.0), (2, 1.0)), ((0, 1.0), (2, 0.0))];
    let r = compare_triangle(&chart, 1.0, &tri, &pairs, ComparisonDirection::AtMost, 1e-5, &num).unwrap();
    assert!(r.min_margin.unwrap().abs() < 1e-9 && r.max_margin.unwrap().abs() < 1e-9);
}

#[test]
fn constant_curvature_charts_are_their_own_models() {
    let num = Numerics::default();
    for (id, k) in [("minkowski:3", 0.0), ("desitter:3", 1.0), ("antidesitter-sin:3", -1.0)] {
        let (chart, region) = entry(id);
        let r = compare_random_triangles(&chart, &region, k, 0.5, 6, 5, ComparisonDirection::AtMost, 21, 1e-5, &num).unwrap();
        let bound = if k == 0.0 { 1e-8 } else { 1e-5 };
        assert!(r.min_margin.unwrap() >= -bound && r.max_margin.unwrap() <= bound, "{id}: {:?} {:?}", r.min_margin, r.max_margin);
    }
}

#[test]
fn grw_cosh_hyperbolic_comparison_holds_strictly() {
    let (chart, region) = entry("grw-cosh-hyperbolic:3");
    let r = compare_random_triangles(&chart, &region, 1.0, 0.9, 12, 5, ComparisonDirection::AtMost, 5, 1e-5, &Numerics::default()).unwrap();
    assert!(r.pass, "{:?}", r.min_margin);
    assert!(r.diagnostics["strict_pairs"] >= 1.0, "{:?}", r.max_margin);
}

proptest! {
    #[test]
    fn signed_square_is_strictly_increasing(a in -1e3f64..1e3, b in -1e3f64..1e3) {
        prop_assume!(a < b);
        prop_assert!(signed_square(a) < signed_square(b));
    }

    #[test]
    fn realization_round_trips(k in prop::sample::select(vec![-1.0, 0.0, 1.0]),
                               e in prop::array::uniform3(-1.0f64..1.0)) {
        match realize_model_triangle(k, e) {
            Ok(t) => {
                prop_assert!(t.quadric_defect() < 1e-12);
                for (s, &(i, j)) in SIDES.iter().enumerate() {
                    let got = t.energy(&t.vertices[i], &t.vertices[j]).unwrap();
                    prop_assert!((got - e[s]).abs() <= 1e-9 * (1.0 + got.abs()));
                }
            }
            Err(GeomError::NotRealizable(_)) | Err(GeomError::DegenerateTriangle(_)) => {}
            Err(other) => prop_assert!(false, "{other:?}"),
        }
    }
}

#[test]
fn side_points_lie_on_model_surface() {
    let t = realize_model_triangle(-1.0, [0.3, -0.2, 0.4]).unwrap();
    let p = t.side_point(2, 0.37).unwrap();
    let signs = ambient_signs(-1.0, t.signature);
    let norm: f64 = signs.iter().zip(&p).map(|(s, x)| s * x * x).sum();
    assert!((norm + 1.0).abs() < 1e-12);
    let e_total = t.side_energies[2];
    let e_part = t.energy(&t.vertices[1], &p).unwrap();
    assert!((e_part - 0.37f64.powi(2) * e_total).abs() < 1e-12);
}
