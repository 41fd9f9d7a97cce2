use std::sync::Arc;

use nalgebra::DVector;
use proptest::prelude::*;

use stconvex::curvature_bounds::*;
use stconvex::manifolds::{Catalog, ChartRef, Minkowski, PlaneSection};
use stconvex::sampling::BoxSampler;

use BoundDirection::{Lower, Upper};

fn v(c: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(c)
}

fn chart(id: &str) -> ChartRef {
    Catalog::new().lookup(id).unwrap().chart
}

#[test]
fn plane_margin_examples() {
    let m = chart("minkowski:3");
    let plane = PlaneSection::new(v(&[0.1, 0.2, 0.3]), v(&[1.0, 0.0, 0.5]), v(&[0.0, 1.0, 2.0]));
    assert_eq!(plane_margin(&m, &plane, 0.0, Upper).unwrap(), 0.0);

    let ds = chart("desitter:3");
    let p = v(&[0.3, 0.1, -0.2]);
    for (a, b) in [([0.0, 1.0, 0.0], [0.0, 0.0, 1.0]), ([1.0, 0.2, 0.0], [0.3, 0.0, 1.0])] {
        let plane = PlaneSection::new(p.clone(), v(&a), v(&b));
        assert!(plane_margin(&ds, &plane, 1.0, Upper).unwrap().abs() < 1e-6);
    }
    // unit spacelike fiber plane at the waist: sec = 1, Q = 1
    let plane = PlaneSection::new(v(&[0.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0]), v(&[0.0, 0.0, 1.0]));
    assert!((plane_margin(&ds, &plane, 0.0, Upper).unwrap() + 1.0).abs() < 1e-9);

    let degenerate = PlaneSection::new(p, v(&[1.0, 0.0, 0.0]), v(&[2.0, 0.0, 0.0]));
    assert!(matches!(plane_margin(&ds, &degenerate, 1.0, Upper), Err(stconvex::GeomError::DegeneratePlane(_))));
}

#[test]
fn minkowski_upper_bound_is_sharp() {
    let m: ChartRef = Arc::new(Minkowski::new(3));
    let pts = BoxSampler::around(m.clone(), &DVector::zeros(3), 1.0, 4);
    let r = certify_bound(&BoundQuery { chart: m, k: 0.0, direction: Upper, points: &pts, n_samples: 1000, seed: 9, tol: 1e-6 }).unwrap();
    assert!(r.pass);
    assert!(r.min_margin.abs() <= 1e-9);
    assert!(r.spacelike.count > 0 && r.timelike.count > 0);
}

fn catalog_spec(id: &str) -> stconvex::manifolds::WarpedProductSpec {
    Catalog::new().lookup(id).unwrap().grw.unwrap()
}

#[test]
fn grw_cosh_hyperbolic_examples() {
    let spec = catalog_spec("grw-cosh-hyperbolic:3");
    let up = cross_validate_grw(&spec, 1.0, Upper, 500, 200, 1, 1e-6).unwrap();
    assert!(up.agree && up.sampled.pass);
    let low = cross_validate_grw(&spec, 1.0, Lower, 500, 200, 1, 1e-6).unwrap();
    assert!(low.agree && !low.sampled.pass);
    let ch: ChartRef = Arc::new(stconvex::manifolds::WarpedProductChart::new("w", spec).unwrap());
    assert!(low.sampled.witness_is_spacelike(&ch));
    assert!(low.grid.fiber_margin.unwrap() < 0.0);
}

#[test]
fn grid_examples() {
    let ds = catalog_spec("desitter:3");
    for dir in [Upper, Lower] {
        let g = grw_admissible(&ds, 1.0, dir, 200, 1e-9).unwrap();
        assert!(g.pass);
        assert!(g.warping_margin.abs() < 1e-12 && g.fiber_margin.unwrap().abs() < 1e-12);
    }
    let flat = catalog_spec("minkowski-grw:3");
    let g = grw_admissible(&flat, 0.0, Upper, 200, 0.0).unwrap();
    assert!(g.pass && g.min_margin() == 0.0);
    assert!(matches!(grw_admissible(&flat, 0.0, Upper, 1, 0.0), Err(stconvex::GeomError::GridExitsInterval(_))));
}

const GRW_IDS: [&str; 5] = ["desitter:3", "antidesitter-sin:3", "grw-cosh-hyperbolic:3", "static-hyperbolic:3", "minkowski-grw:3"];

fn expected_pass(id: &str, k: f64, dir: BoundDirection) -> bool {
    match (id, dir) {
        ("desitter:3", _) => k == 1.0,
        ("antidesitter-sin:3", _) => k == -1.0,
        ("grw-cosh-hyperbolic:3", Upper) => k == 1.0,
        ("grw-cosh-hyperbolic:3", Lower) => false,
        ("static-hyperbolic:3", Upper) => k <= 0.0,
        ("static-hyperbolic:3", Lower) => false,
        ("minkowski-grw:3", _) => k == 0.0,
        _ => unreachable!(),
    }
}

#[test]
fn lemma_cells_match_hand_derived_verdicts() {
    for id in GRW_IDS {
        let spec = catalog_spec(id);
        for k in [-1.0, 0.0, 1.0] {
            for dir in [Upper, Lower] {
                let cv = cross_validate_grw(&spec, k, dir, 400, 200, 77, 1e-6).unwrap();
                assert!(cv.agree, "{id} K={k} {dir:?}: {:?}", cv.to_check_report().notes);
                assert_eq!(cv.grid.pass, expected_pass(id, k, dir), "{id} K={k} {dir:?}");
            }
        }
    }
}

#[test]
fn larger_k_failures_come_from_timelike_planes() {
    // R <= K holds at K = 1 on the cosh/hyperbolic GRW; raising K keeps
    // spacelike planes passing and breaks only timelike ones.
    let spec = catalog_spec("grw-cosh-hyperbolic:3");
    let cv = cross_validate_grw(&spec, 1.5, Upper, 400, 200, 5, 1e-6).unwrap();
    assert!(!cv.sampled.pass);
    assert!(cv.sampled.spacelike.passes(1e-6));
    assert!(!cv.sampled.timelike.passes(1e-6));
}

#[test]
fn bisection_brackets_admissible_k() {
    let spec = catalog_spec("static-hyperbolic:3");
    let ch: ChartRef = Arc::new(stconvex::manifolds::WarpedProductChart::new("s", spec.clone()).unwrap());
    let (planes, _) = sample_planes(&ch, &WarpedPointSampler::new(&spec, 2), 400, 2).unwrap();
    let (lo, hi) = bisect_bound(&planes, Upper, (-3.0, 3.0), 1e-9, 60).unwrap();
    // sampled planes approach the extremal sectional curvatures from inside
    assert!((-1.05..=-1.0 + 1e-9).contains(&lo), "{lo}");
    assert!((-1e-9..=0.05).contains(&hi), "{hi}");
    assert!(bisect_bound(&planes, Lower, (-3.0, 3.0), 1e-9, 60).is_none());
}

#[test]
fn reports_are_deterministic() {
    let spec = catalog_spec("grw-cosh-hyperbolic:3");
    let a = cross_validate_grw(&spec, 1.0, Upper, 200, 50, 42, 1e-6).unwrap().to_check_report().to_json();
    let b = cross_validate_grw(&spec, 1.0, Upper, 200, 50, 42, 1e-6).unwrap().to_check_report().to_json();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn normalized_margin_is_basis_independent(
        a in prop::array::uniform3(-1.0f64..1.0),
        b in prop::array::uniform3(-1.0f64..1.0),
        m in prop::array::uniform4(-2.0f64..2.0),
        tau in -1.5f64..1.5,
    ) {
        let ch = chart("grw-cosh-hyperbolic:3");
        let p = v(&[tau, 0.2, -0.1]);
        let (va, vb) = (v(&a), v(&b));
        let det = m[0] * m[3] - m[1] * m[2];
        prop_assume!(det.abs() > 0.1);
        let g = ch.metric_at(p.as_slice());
        let q = stconvex::manifolds::plane_gram(&g, &va, &vb);
        prop_assume!(q.abs() > 1e-3);
        let plane = PlaneSection::new(p.clone(), va.clone(), vb.clone());
        let other = PlaneSection::new(p, &va * m[0] + &vb * m[1], &va * m[2] + &vb * m[3]);
        for dir in [Upper, Lower] {
            let x = normalized_plane_margin(&ch, &plane, 0.7, dir).unwrap();
            let y = normalized_plane_margin(&ch, &other, 0.7, dir).unwrap();
            prop_assert!((x - y).abs() <= 1e-6 * (1.0 + x.abs()));
        }
    }
}
