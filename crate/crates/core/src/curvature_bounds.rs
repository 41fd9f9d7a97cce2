//! Certify or refute `R <= K` / `R >= K` by sampling 2-planes, and by the
//! closed-form warped-product criterion; cross-validate the two.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::linalg::{euclideanized, Point, Vector};
use crate::manifolds::{plane_gram, riemann, ChartRef, PlaneSection, WarpedProductSpec};
use crate::report::{CheckReport, SampleRecord, Verdict};
use crate::sampling::{rng_for, unit_direction, Sampler};

/// `Upper` is `R <= K`: spacelike sectional curvatures `<= K`, timelike
/// ones `>= K`. `Lower` is the reverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundDirection {
    Upper,
    Lower,
}

impl BoundDirection {
    pub fn label(self) -> &'static str {
        match self {
            BoundDirection::Upper => "upper",
            BoundDirection::Lower => "lower",
        }
    }
}

/// Raw margin: `K·Q - g(R(v,w)v,w)` (upper) or its negative (lower).
pub fn plane_margin(chart: &ChartRef, plane: &PlaneSection, k: f64, direction: BoundDirection) -> Result<f64> {
    let r = riemann(chart.as_ref(), plane.point.as_slice())?;
    let q = plane_gram(&r.g, &plane.v, &plane.w);
    if q.abs() <= crate::manifolds::DEGENERATE_PLANE_TOL {
        return Err(GeomError::DegeneratePlane(q.abs()));
    }
    Ok(signed(k * q - r.quartic(&plane.v, &plane.w), direction))
}

/// Margin divided by `|Q|`, i.e. `sign(Q)·(K - sec)` for the upper bound;
/// independent of the basis chosen for the plane.
pub fn normalized_plane_margin(chart: &ChartRef, plane: &PlaneSection, k: f64, direction: BoundDirection) -> Result<f64> {
    let r = riemann(chart.as_ref(), plane.point.as_slice())?;
    let q = plane_gram(&r.g, &plane.v, &plane.w);
    if q.abs() <= crate::manifolds::DEGENERATE_PLANE_TOL {
        return Err(GeomError::DegeneratePlane(q.abs()));
    }
    Ok(signed(k * q - r.quartic(&plane.v, &plane.w), direction) / q.abs())
}

fn signed(m: f64, direction: BoundDirection) -> f64 {
    match direction {
        BoundDirection::Upper => m,
        BoundDirection::Lower => -m,
    }
}

pub struct BoundQuery<'a> {
    pub chart: ChartRef,
    pub k: f64,
    pub direction: BoundDirection,
    /// Supplies base points (directions are drawn separately).
    pub points: &'a dyn Sampler,
    pub n_samples: usize,
    pub seed: u64,
    pub tol: f64,
}

/// Planes with `|Q|` at most this fraction of the auxiliary-metric Gram
/// determinant are rejected as (near-)degenerate.
pub const PLANE_REJECTION: f64 = 1e-6;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassStats {
    pub count: usize,
    pub min_margin: Option<f64>,
    pub max_margin: Option<f64>,
}

impl ClassStats {
    fn push(&mut self, m: f64) {
        self.count += 1;
        self.min_margin = Some(self.min_margin.map_or(m, |c| c.min(m)));
        self.max_margin = Some(self.max_margin.map_or(m, |c| c.max(m)));
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.min_margin.map_or(true, |m| m >= -tol)
    }
}

/// A sampled plane with its sectional curvature data.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledPlane {
    pub plane: PlaneSection,
    pub q: f64,
    pub sectional: f64,
}

impl SampledPlane {
    /// `sign(Q)·(K - sec)`, negated for the lower bound.
    pub fn margin(&self, k: f64, direction: BoundDirection) -> f64 {
        signed(self.q.signum() * (k - self.sectional), direction)
    }

    pub fn is_spacelike(&self) -> bool {
        self.q > 0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub chart: String,
    pub k: f64,
    pub direction: BoundDirection,
    pub tol: f64,
    pub min_margin: f64,
    pub witness: PlaneSection,
    pub spacelike: ClassStats,
    pub timelike: ClassStats,
    pub rejected: usize,
    pub pass: bool,
}

impl BoundReport {
    fn from_planes(chart: &str, k: f64, direction: BoundDirection, tol: f64, planes: &[SampledPlane], rejected: usize) -> Self {
        let mut spacelike = ClassStats::default();
        let mut timelike = ClassStats::default();
        let mut worst = 0;
        let mut min_margin = f64::INFINITY;
        for (i, p) in planes.iter().enumerate() {
            let m = p.margin(k, direction);
            if p.is_spacelike() {
                spacelike.push(m);
            } else {
                timelike.push(m);
            }
            if m < min_margin || m.is_nan() {
                min_margin = if m.is_nan() { f64::NEG_INFINITY } else { m };
                worst = i;
            }
        }
        BoundReport {
            chart: chart.into(),
            k,
            direction,
            tol,
            min_margin,
            witness: planes[worst].plane.clone(),
            spacelike,
            timelike,
            rejected,
            pass: min_margin >= -tol,
        }
    }

    pub fn witness_is_spacelike(&self, chart: &ChartRef) -> bool {
        let g = chart.metric_at(self.witness.point.as_slice());
        plane_gram(&g, &self.witness.v, &self.witness.w) > 0.0
    }

    pub fn to_check_report(&self) -> CheckReport {
        let mut r = CheckReport::new(
            &format!("bound-{}", self.direction.label()),
            &self.chart,
            Some(self.k),
            vec![],
            self.tol,
        );
        r.n_samples = self.spacelike.count + self.timelike.count;
        r.min_margin = Some(finite(self.min_margin));
        r.max_margin = [self.spacelike.max_margin, self.timelike.max_margin]
            .into_iter()
            .flatten()
            .reduce(f64::max)
            .map(finite);
        r.worst_sample = Some(SampleRecord {
            point: self.witness.point.as_slice().to_vec(),
            direction: Some(self.witness.v.as_slice().to_vec()),
            second_direction: Some(self.witness.w.as_slice().to_vec()),
            margin: finite(self.min_margin),
            label: "witness plane".into(),
        });
        r.set_verdict(if self.pass { Verdict::Pass } else { Verdict::Fail });
        for (name, s) in [("spacelike", &self.spacelike), ("timelike", &self.timelike)] {
            r.diag(&format!("{name}_count"), s.count as f64);
            if let Some(m) = s.min_margin {
                r.diag(&format!("{name}_min_margin"), m);
            }
        }
        r.diag("rejected_planes", self.rejected as f64);
        r
    }
}

fn finite(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        f64::MAX.copysign(x)
    }
}

const MAX_DRAWS_PER_PLANE: usize = 100;

/// Draws `n` nondegenerate planes, each from its own deterministic stream.
pub fn sample_planes(chart: &ChartRef, points: &dyn Sampler, n: usize, seed: u64) -> Result<(Vec<SampledPlane>, usize)> {
    if n == 0 {
        return Err(GeomError::InvalidArgument("n_samples must be at least 1".into()));
    }
    let dim = chart.dim();
    let drawn: Vec<Result<(SampledPlane, usize)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let point: Point = points.point(i).ok_or(GeomError::SamplerExhausted(i))??;
            let r = riemann(chart.as_ref(), point.as_slice())?;
            let aux = euclideanized(&r.g);
            let mut rng = rng_for(seed, i as u64);
            for attempt in 0..MAX_DRAWS_PER_PLANE {
                let v = unit_direction(&mut rng, dim);
                let mut w = unit_direction(&mut rng, dim);
                w -= &v * v.dot(&w);
                let wn = w.norm();
                if wn < 1e-6 {
                    continue;
                }
                let w: Vector = w / wn;
                let q = plane_gram(&r.g, &v, &w);
                let scale = plane_gram(&aux, &v, &w);
                if q.abs() <= PLANE_REJECTION * scale {
                    continue;
                }
                return Ok((
                    SampledPlane {
                        sectional: r.quartic(&v, &w) / q,
                        q,
                        plane: PlaneSection::new(point, v, w),
                    },
                    attempt,
                ));
            }
            Err(GeomError::SamplerStarved {
                accepted: 0,
                attempts: MAX_DRAWS_PER_PLANE,
            })
        })
        .collect();
    let mut planes = Vec::with_capacity(n);
    let mut rejected = 0;
    for (accepted, d) in drawn.into_iter().enumerate() {
        match d {
            Ok((p, r)) => {
                rejected += r;
                planes.push(p);
            }
            Err(GeomError::SamplerStarved { .. }) => {
                return Err(GeomError::SamplerStarved {
                    accepted,
                    attempts: accepted + rejected + MAX_DRAWS_PER_PLANE,
                })
            }
            Err(e) => return Err(e),
        }
    }
    if rejected as f64 > 0.99 * (rejected + n) as f64 {
        return Err(GeomError::SamplerStarved {
            accepted: n,
            attempts: n + rejected,
        });
    }
    Ok((planes, rejected))
}

pub fn certify_bound(query: &BoundQuery) -> Result<BoundReport> {
    let (planes, rejected) = sample_planes(&query.chart, query.points, query.n_samples, query.seed)?;
    Ok(BoundReport::from_planes(
        query.chart.name(),
        query.k,
        query.direction,
        query.tol,
        &planes,
        rejected,
    ))
}

/// Slack of the closed-form warped-product criterion on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridReport {
    pub k: f64,
    pub direction: BoundDirection,
    pub interval: (f64, f64),
    pub grid_n: usize,
    /// `min (f'' - K f)/f` (upper) or `min (K f - f'')/f` (lower).
    pub warping_margin: f64,
    pub warping_worst_tau: f64,
    /// `min (K f² - f'² - C)/f²` (upper) or its negative (lower); absent for
    /// one-dimensional fibers, whose curvature is meaningless.
    pub fiber_margin: Option<f64>,
    pub fiber_worst_tau: Option<f64>,
    pub tol: f64,
    pub pass: bool,
}

impl GridReport {
    pub fn min_margin(&self) -> f64 {
        self.fiber_margin.map_or(self.warping_margin, |f| f.min(self.warping_margin))
    }
}

/// Closed-form criterion for `-I ×_f F`: `R <= K` iff `f'' >= K f` and
/// (fiber dimension >= 2) `C <= K f² - f'²` throughout; reversed for
/// `R >= K`. Slacks are divided by `f` resp. `f²`, making them differences
/// of sectional curvatures. Checked on `grid_n` points of the compact part
/// of the interval (inset 1e-3).
pub fn grw_admissible(spec: &WarpedProductSpec, k: f64, direction: BoundDirection, grid_n: usize, tol: f64) -> Result<GridReport> {
    let (lo, hi) = spec.interval.compact_part(1e-3);
    if grid_n < 2 || !(lo < hi) {
        return Err(GeomError::GridExitsInterval(lo));
    }
    let c = spec.fiber_curvature;
    let mut warp = (f64::INFINITY, lo);
    let mut fiber = (f64::INFINITY, lo);
    for i in 0..grid_n {
        let tau = lo + (hi - lo) * i as f64 / (grid_n - 1) as f64;
        if spec.interval.margin(tau) <= 0.0 {
            return Err(GeomError::GridExitsInterval(tau));
        }
        let (f, d1, d2) = spec.warping.eval(tau);
        let w = signed((d2 - k * f) / f, direction);
        let fm = signed((k * f * f - d1 * d1 - c) / (f * f), direction);
        if w < warp.0 {
            warp = (w, tau);
        }
        if fm < fiber.0 {
            fiber = (fm, tau);
        }
    }
    let has_fiber = spec.fiber_dim >= 2;
    let mut report = GridReport {
        k,
        direction,
        interval: (lo, hi),
        grid_n,
        warping_margin: warp.0,
        warping_worst_tau: warp.1,
        fiber_margin: has_fiber.then_some(fiber.0),
        fiber_worst_tau: has_fiber.then_some(fiber.1),
        tol,
        pass: false,
    };
    report.pass = report.min_margin() >= -tol;
    Ok(report)
}

/// Samples points of a warped product with `τ` uniform on the same compact
/// part used by [`grw_admissible`] and fiber coordinates in a small box.
#[derive(Clone, Debug)]
pub struct WarpedPointSampler {
    pub dim: usize,
    pub tau: (f64, f64),
    pub fiber_half_width: f64,
    pub seed: u64,
}

impl WarpedPointSampler {
    pub fn new(spec: &WarpedProductSpec, seed: u64) -> Self {
        WarpedPointSampler {
            dim: spec.fiber_dim + 1,
            tau: spec.interval.compact_part(1e-3),
            fiber_half_width: 0.5,
            seed,
        }
    }
}

impl Sampler for WarpedPointSampler {
    fn pair(&self, index: usize) -> Option<Result<(Point, Vector)>> {
        let mut rng = rng_for(self.seed ^ 0x5eed_0f_7a0, index as u64);
        let mut p = Point::zeros(self.dim);
        p[0] = rng.gen_range(self.tau.0..=self.tau.1);
        for i in 1..self.dim {
            p[i] = rng.gen_range(-self.fiber_half_width..=self.fiber_half_width);
        }
        let v = unit_direction(&mut rng, self.dim);
        Some(Ok((p, v)))
    }
}

/// Agreement between sampled planes and the closed-form grid criterion.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossValidation {
    pub sampled: BoundReport,
    pub grid: GridReport,
    pub agree: bool,
}

pub fn cross_validate_grw(
    spec: &WarpedProductSpec,
    k: f64,
    direction: BoundDirection,
    n_planes: usize,
    grid_n: usize,
    seed: u64,
    tol: f64,
) -> Result<CrossValidation> {
    spec.validate()?;
    let chart: ChartRef = std::sync::Arc::new(crate::manifolds::WarpedProductChart::new("grw-cross-check", spec.clone())?);
    let points = WarpedPointSampler::new(spec, seed);
    let sampled = certify_bound(&BoundQuery {
        chart,
        k,
        direction,
        points: &points,
        n_samples: n_planes,
        seed,
        tol,
    })?;
    let grid = grw_admissible(spec, k, direction, grid_n, tol)?;
    let agree = sampled.pass == grid.pass;
    Ok(CrossValidation { sampled, grid, agree })
}

impl CrossValidation {
    pub fn to_check_report(&self) -> CheckReport {
        let mut r = self.sampled.to_check_report();
        r.check_id = format!("cross-validate-{}", self.sampled.direction.label());
        r.diag("grid_warping_margin", self.grid.warping_margin);
        if let Some(f) = self.grid.fiber_margin {
            r.diag("grid_fiber_margin", f);
        }
        r.diag("sampled_pass", f64::from(u8::from(self.sampled.pass)));
        r.diag("grid_pass", f64::from(u8::from(self.grid.pass)));
        r.set_verdict(if self.agree { Verdict::Pass } else { Verdict::Fail });
        if !self.agree {
            r.notes.push(format!(
                "disagreement: sampled min margin {:.3e}, grid margins warping {:.3e} at τ={:.4}, fiber {:?} at τ={:?}",
                self.sampled.min_margin,
                self.grid.warping_margin,
                self.grid.warping_worst_tau,
                self.grid.fiber_margin,
                self.grid.fiber_worst_tau
            ));
        }
        r
    }
}

/// Largest admissible `K`-interval inside `range` according to cached
/// plane samples, located by bisection per plane class. For the upper
/// bound spacelike planes force `K >= sup sec` and timelike planes force
/// `K <= inf sec`; for the lower bound the roles swap. Returns `None` if
/// the classes' constraints do not overlap within `range`.
pub fn bisect_bound(
    planes: &[SampledPlane],
    direction: BoundDirection,
    range: (f64, f64),
    tol: f64,
    iterations: usize,
) -> Option<(f64, f64)> {
    let class_ok = |k: f64, spacelike: bool| {
        planes
            .iter()
            .filter(|p| p.is_spacelike() == spacelike)
            .all(|p| p.margin(k, direction) >= -tol)
    };
    // the class whose margin increases with K
    let rising = direction == BoundDirection::Upper;
    let bisect = |spacelike: bool, find_low: bool| -> Option<f64> {
        let (mut a, mut b) = range;
        let ok_a = class_ok(a, spacelike);
        let ok_b = class_ok(b, spacelike);
        if find_low {
            if ok_a {
                return Some(a);
            }
            if !ok_b {
                return None;
            }
        } else {
            if ok_b {
                return Some(b);
            }
            if !ok_a {
                return None;
            }
        }
        for _ in 0..iterations {
            let mid = 0.5 * (a + b);
            let ok = class_ok(mid, spacelike);
            if ok == find_low {
                b = mid;
            } else {
                a = mid;
            }
        }
        Some(if find_low { b } else { a })
    };
    let lo = bisect(rising, true)?;
    let hi = bisect(!rising, false)?;
    (lo <= hi).then_some((lo, hi))
}
