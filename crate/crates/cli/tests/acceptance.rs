//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs the full check suite through the batch front end, evaluates every
//! criterion from the written reports, then reruns the suite to compare
//! report bytes. Exits non-zero if any criterion's outcome differs from
//! the expectation recorded in `EXPECTED_FAILURES`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::time::Instant;

use stconvex::curvature_bounds::BoundDirection;
use stconvex::manifolds::Catalog;
use stconvex::report::{CheckReport, Verdict};
use stconvex::submanifolds::{AuditMode, PatchFamily};
use stconvex::triangles::ComparisonDirection;
use stconvex_cli::{run, CheckSpec, FieldSpec, Identity, RunConfig, RunManifest};

/// Criterion 9 includes the claim that `−f²/2` is space-time convex on
/// `(0, π/2) ×_sin H²`. Under the signature requirement of the definition
/// it is not: `Hess(−sin²τ/2) = −cos 2τ dτ² + cos²τ g_F` is positive
/// definite for `τ > π/4`. That clause is evaluated faithfully and is
/// expected to fail; the other two clauses must pass.
const EXPECTED_FAILURES: &[u32] = &[9];

fn field(chart: &str, k: f64) -> FieldSpec {
    FieldSpec {
        chart: chart.into(),
        k,
        q: None,
        region_radius: None,
    }
}

fn identity(chart: &str, k: f64, identity: Identity, n: usize, tol: f64) -> CheckSpec {
    CheckSpec::Identities {
        field: field(chart, k),
        identity,
        n_samples: n,
        seed: None,
        tol,
        patch: None,
        grid_n: 5,
    }
}

fn laplacian(chart: &str, patch: PatchFamily, grid_n: usize) -> CheckSpec {
    CheckSpec::Identities {
        field: field(chart, 0.0),
        identity: Identity::LaplacianIdentity,
        n_samples: 1,
        seed: None,
        tol: 1e-4,
        patch: Some(patch),
        grid_n,
    }
}

fn segment(chart: &str, k: f64, point: Vec<f64>, velocity: Vec<f64>) -> CheckSpec {
    CheckSpec::SubmanifoldAudit {
        field: field(chart, k),
        patch: PatchFamily::GeodesicSegment {
            point,
            velocity,
            length: 1.0,
        },
        mode: AuditMode::VanishingMeanCurvature,
        grid_n: 8,
        tol: 1e-5,
    }
}

fn lorentzian_charts() -> Vec<String> {
    Catalog::new()
        .list()
        .into_iter()
        .filter(|e| e.is_lorentzian())
        .map(|e| e.id)
        .collect()
}

/// `(criterion, check)` in execution order.
fn suite() -> Vec<(u32, CheckSpec)> {
    let mut s = Vec::new();
    // 1: Hessian identity on constant curvature
    for (chart, k) in [("minkowski:3", 0.0), ("desitter:3", 1.0), ("antidesitter-sin:3", -1.0)] {
        s.push((1, identity(chart, k, Identity::Hessian, 100, 1e-5)));
    }
    // 2: λ-convexity with strictness
    s.push((
        2,
        CheckSpec::Convexity {
            field: field("grw-cosh-hyperbolic:3", 1.0),
            n_samples: 500,
            seed: None,
            tol: 1e-5,
            lambda: None,
        },
    ));
    // 3: vertex behaviour
    for chart in lorentzian_charts() {
        for k in [-1.0, 0.0, 1.0] {
            s.push((3, identity(&chart, k, Identity::Vertex, 8, 1e-5)));
        }
    }
    // 4: shape operator comparison
    s.push((
        4,
        CheckSpec::ShapeTrack {
            field: field("grw-cosh-hyperbolic:3", 1.0),
            n_arcs: 20,
            times_per_arc: 4,
            seed: None,
            tol: 1e-5,
        },
    ));
    // 5: 30 cross-validation cells
    for chart in ["desitter:3", "antidesitter-sin:3", "grw-cosh-hyperbolic:3", "static-hyperbolic:3", "minkowski-grw:3"] {
        for k in [-1.0, 0.0, 1.0] {
            for direction in [BoundDirection::Upper, BoundDirection::Lower] {
                s.push((
                    5,
                    CheckSpec::Bound {
                        chart: chart.into(),
                        k,
                        direction,
                        n_samples: 2000,
                        seed: None,
                        tol: 1e-6,
                        cross_validate: true,
                        grid_n: 401,
                    },
                ));
            }
        }
    }
    // 6: triangle comparisons
    for (chart, k) in [
        ("minkowski:3", 0.0),
        ("desitter:3", 1.0),
        ("antidesitter-sin:3", -1.0),
        ("grw-cosh-hyperbolic:3", 1.0),
    ] {
        s.push((
            6,
            CheckSpec::Triangles {
                field: field(chart, k),
                direction: ComparisonDirection::AtMost,
                scale: 0.5,
                n_triangles: 50,
                pairs_per_triangle: 5,
                seed: None,
                tol: 1e-5,
            },
        ));
    }
    // 7: restricted Laplacian identity
    s.push((
        7,
        laplacian(
            "minkowski:3",
            PatchFamily::FlatSlice {
                offset: vec![0.0; 3],
                half_width: 0.8,
            },
            5,
        ),
    ));
    s.push((
        7,
        laplacian(
            "minkowski:3",
            PatchFamily::RoundSphere {
                center: vec![0.0; 3],
                radius: 1.0,
            },
            12,
        ),
    ));
    s.push((
        7,
        laplacian(
            "minkowski:4",
            PatchFamily::RoundSphere {
                center: vec![0.1, 0.0, 0.0, 0.0],
                radius: 0.8,
            },
            5,
        ),
    ));
    s.push((
        7,
        laplacian(
            "minkowski:3",
            PatchFamily::Hyperboloid {
                offset: vec![0.0, 0.0, 0.5],
                sign: -1.0,
                half_width: 0.5,
            },
            5,
        ),
    ));
    // 8: gradient formula, K cycling over the charts
    for (i, chart) in lorentzian_charts().iter().enumerate() {
        let k = [-1.0, 0.0, 1.0][i % 3];
        s.push((8, identity(chart, k, Identity::GradientFormula, 200, 1e-5)));
    }
    // 9: obstruction audits
    s.push((9, segment("minkowski:3", 0.0, vec![-0.5, 0.2, 0.1], vec![1.0, 0.2, 0.4])));
    s.push((9, segment("static-hyperbolic:3", 0.0, vec![0.1, -0.3, 0.1], vec![0.2, 0.6, 0.3])));
    s.push((9, segment("grw-cosh-hyperbolic:3", 1.0, vec![0.1, -0.3, 0.1], vec![0.1, 0.6, 0.3])));
    s.push((
        9,
        CheckSpec::SubmanifoldAudit {
            field: field("minkowski:3", 0.0),
            patch: PatchFamily::RoundSphere {
                center: vec![0.0; 3],
                radius: 1.0,
            },
            mode: AuditMode::WeaklyTrapped,
            grid_n: 12,
            tol: 1e-5,
        },
    ));
    s.push((
        9,
        CheckSpec::SpacetimeConvexity {
            chart: "antidesitter-sin:3".into(),
            tau: [1e-3, PI / 2.0 - 1e-3],
            fiber_half_width: 0.5,
            n_samples: 200,
            seed: None,
            tol: 1e-5,
        },
    ));
    // 10: integrator drift and shooting round trip
    for chart in ["minkowski:3", "desitter:3", "antidesitter-sin:3", "grw-cosh-hyperbolic:3"] {
        s.push((10, identity(chart, 0.0, Identity::SpeedDrift, 20, 1e-8)));
        s.push((10, identity(chart, 0.0, Identity::RoundTrip, 20, 1e-7)));
    }
    s
}

fn config(checks: &[(u32, CheckSpec)]) -> RunConfig {
    RunConfig {
        schema_version: stconvex_cli::config::CONFIG_SCHEMA_VERSION,
        seed: 20240611,
        output_dir: None,
        charts: Vec::new(),
        checks: checks.iter().map(|(_, c)| c.clone()).collect(),
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn min(r: &CheckReport) -> f64 {
    r.min_margin.unwrap_or(f64::NEG_INFINITY)
}

fn all_pass(reports: &[&CheckReport]) -> (bool, f64) {
    let worst = reports.iter().map(|r| min(r)).fold(f64::INFINITY, f64::min);
    (reports.iter().all(|r| r.pass), worst)
}

fn evaluate(
    criterion: u32,
    reports: &[&CheckReport],
    determinism: &dyn Fn() -> (bool, String),
) -> (Outcome, BTreeMap<&'static str, bool>) {
    let mut clauses = BTreeMap::new();
    let outcome = match criterion {
        1 | 3 | 4 | 7 => {
            let (pass, worst) = all_pass(reports);
            let enough = criterion != 1 || reports.iter().all(|r| r.n_samples >= 100);
            Outcome {
                pass: pass && enough,
                detail: format!("{} reports, worst margin {worst:.3e}", reports.len()),
            }
        }
        2 => {
            let r = reports[0];
            let strict = r.diagnostics.get("strict_samples").copied().unwrap_or(0.0);
            Outcome {
                pass: r.pass && r.n_samples == 500 && strict >= 1.0,
                detail: format!("min margin {:.3e}, {strict} strict samples of {}", min(r), r.n_samples),
            }
        }
        5 => {
            let agree = reports.iter().filter(|r| r.verdict == Verdict::Pass).count();
            let bad: Vec<String> = reports
                .iter()
                .filter(|r| r.verdict != Verdict::Pass)
                .map(|r| format!("{} {} K={:?}", r.chart, r.check_id, r.k))
                .collect();
            Outcome {
                pass: agree == 30 && reports.len() == 30,
                detail: format!("{agree}/{} cells agree {bad:?}", reports.len()),
            }
        }
        6 => {
            let constant = &reports[..3];
            let equality = constant.iter().all(|r| {
                r.pass && r.max_margin.unwrap_or(f64::INFINITY) <= 1e-5 && min(r) >= -1e-5
            });
            let grw = reports[3];
            let spread = constant
                .iter()
                .map(|r| min(r).abs().max(r.max_margin.unwrap_or(0.0).abs()))
                .fold(0.0, f64::max);
            Outcome {
                pass: equality && grw.pass,
                detail: format!(
                    "constant-curvature max |margin| {spread:.3e}; grw min margin {:.3e} over {} pairs",
                    min(grw),
                    grw.n_samples
                ),
            }
        }
        8 => {
            let (pass, worst) = all_pass(reports);
            let complete = reports
                .iter()
                .all(|r| r.n_samples as f64 + r.diagnostics.get("skipped_beyond_energy_bound").copied().unwrap_or(0.0) == 200.0);
            Outcome {
                pass: pass && complete,
                detail: format!("{} charts, worst residual {:.3e}", reports.len(), -worst),
            }
        }
        9 => {
            let segments = &reports[..3];
            let seg_ok = segments
                .iter()
                .all(|r| r.verdict == Verdict::Obstructed && min(r) >= -1e-5);
            let circle = reports[3];
            let circle_ok = matches!(&circle.verdict, Verdict::HypothesisFailed { failed } if failed.iter().any(|f| f == "weakly_future_trapped"))
                && circle.diagnostics.get("class_untrapped_spacelike_h") == circle.diagnostics.get("grid_points");
            let gi = reports[4];
            clauses.insert("segments", seg_ok);
            clauses.insert("circle", circle_ok);
            clauses.insert("gi", gi.pass);
            Outcome {
                pass: seg_ok && circle_ok && gi.pass,
                detail: format!(
                    "segments obstructed: {seg_ok} (min margin {:.3e}); circle hypothesis-failed with spacelike H: {circle_ok}; GI space-time convexity: {} ({} signature failures of {}, first at τ = {:.4})",
                    segments.iter().map(|r| min(r)).fold(f64::INFINITY, f64::min),
                    gi.pass,
                    gi.diagnostics.get("failed_signature").copied().unwrap_or(f64::NAN),
                    gi.n_samples,
                    gi.diagnostics.get("first_violation_x0").copied().unwrap_or(f64::NAN),
                ),
            }
        }
        10 => {
            let (pass, _) = all_pass(reports);
            let drift = reports
                .iter()
                .filter(|r| r.check_id == "identity-speed-drift")
                .map(|r| -min(r))
                .fold(0.0, f64::max);
            let trip = reports
                .iter()
                .filter(|r| r.check_id == "identity-round-trip")
                .map(|r| -min(r))
                .fold(0.0, f64::max);
            let (same, what) = determinism();
            Outcome {
                pass: pass && same,
                detail: format!("max drift {drift:.3e}, max round trip {trip:.3e}; {what}"),
            }
        }
        _ => unreachable!(),
    };
    (outcome, clauses)
}

const TITLES: [&str; 10] = [
    "constant-curvature Hessian identity",
    "lambda-convexity on grw-cosh-hyperbolic:3",
    "vertex second derivative -1",
    "shape-operator comparison",
    "curvature-bound cross-validation",
    "triangle comparisons",
    "restricted Laplacian identity",
    "gradient formula",
    "trapped-submanifold audits",
    "infrastructure and determinism",
];

fn compare_dirs(a: &Path, b: &Path, manifest: &RunManifest) -> (bool, String) {
    let mut differing = Vec::new();
    let mut count = 0;
    for name in manifest.outputs.iter().filter(|n| *n != "manifest.json") {
        count += 1;
        if fs::read(a.join(name)).ok() != fs::read(b.join(name)).ok() {
            differing.push(name.clone());
        }
    }
    (
        differing.is_empty(),
        format!("{count} report/series files compared, {} differ {differing:?}", differing.len()),
    )
}

fn main() {
    let started = Instant::now();
    let checks = suite();
    let cfg = config(&checks);
    let first = tempfile::tempdir().expect("tempdir");
    let second = tempfile::tempdir().expect("tempdir");
    let (manifest, reports) = run(&cfg, first.path()).expect("suite config is valid");
    println!("acceptance suite: {} checks in {:.1}s", reports.len(), started.elapsed().as_secs_f64());
    for entry in manifest.checks.iter().filter(|c| c.status == stconvex_cli::CheckStatus::Error) {
        println!("  error in check {} ({} on {})", entry.index, entry.kind, entry.chart);
        for n in &reports[entry.index].notes {
            println!("    {n}");
        }
    }

    let determinism = || {
        let t = Instant::now();
        let (again, _) = run(&cfg, second.path()).expect("suite config is valid");
        let (same, what) = compare_dirs(first.path(), second.path(), &manifest);
        let same = same && again.outputs == manifest.outputs;
        (same, format!("{what} (rerun {:.1}s)", t.elapsed().as_secs_f64()))
    };

    let mut unexpected = Vec::new();
    for criterion in 1..=10u32 {
        let group: Vec<&CheckReport> = checks
            .iter()
            .zip(&reports)
            .filter(|((c, _), _)| *c == criterion)
            .map(|(_, r)| r)
            .collect();
        let (outcome, clauses) = evaluate(criterion, &group, &determinism);
        println!(
            "AC{criterion:<2} {} {}: {}",
            if outcome.pass { "PASS" } else { "FAIL" },
            TITLES[criterion as usize - 1],
            outcome.detail
        );
        let expected_fail = EXPECTED_FAILURES.contains(&criterion);
        if criterion == 9 {
            // only the space-time convexity clause may fail
            if !(clauses["segments"] && clauses["circle"]) || clauses["gi"] == expected_fail {
                unexpected.push(criterion);
            }
        } else if outcome.pass == expected_fail {
            unexpected.push(criterion);
        }
    }
    println!("acceptance suite finished in {:.1}s", started.elapsed().as_secs_f64());
    if !unexpected.is_empty() {
        eprintln!("criteria with unexpected outcomes: {unexpected:?}");
        std::process::exit(1);
    }
}
