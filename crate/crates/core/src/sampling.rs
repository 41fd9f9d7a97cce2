//! Deterministic samplers. Every sample index draws from its own RNG seeded
//! by `derive_seed(master, index)`, so parallel evaluation reproduces
//! sequential results bit for bit.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::geodesics::{exp_map, GeodesicOptions, StarRegion};
use crate::linalg::{bilinear, symmetrize, Matrix, Point, Vector};
use crate::manifolds::{metric_eval, ChartRef};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for sample `index` under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(0x632B_E59B_D9B4_E019)))
}

pub fn rng_for(master: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, index))
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box–Muller
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Uniform direction on the coordinate unit sphere.
pub fn unit_direction(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    loop {
        let v = DVector::from_fn(n, |_, _| standard_normal(rng));
        let norm = v.norm();
        if norm > 1e-8 {
            return v / norm;
        }
    }
}

/// Uniform point in the coordinate ball of radius `r`.
pub fn uniform_in_ball(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vector {
    let u: f64 = rng.gen();
    unit_direction(rng, n) * (r * u.powf(1.0 / n as f64))
}

/// Frame `(e_1..e_n)` orthonormal for `g`, with timelike vectors first.
pub fn orthonormal_frame(g: &Matrix) -> (Vec<Vector>, Vec<f64>) {
    let eig = symmetrize(g).symmetric_eigen();
    let mut idx: Vec<usize> = (0..g.nrows()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut frame = Vec::new();
    let mut signs = Vec::new();
    for i in idx {
        let lam = eig.eigenvalues[i];
        frame.push(eig.eigenvectors.column(i) / lam.abs().sqrt());
        signs.push(lam.signum());
    }
    (frame, signs)
}

/// Which causal type a sampled direction should have.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DirectionKind {
    Spacelike,
    Timelike,
    Null,
}

/// Random direction of the requested causal type at a point with metric
/// `g`, normalized so that `|g(v,v)|` is 1 (0 for null directions).
/// Boost rapidities are drawn from `[-max_rapidity, max_rapidity]`.
pub fn causal_direction(
    rng: &mut ChaCha8Rng,
    g: &Matrix,
    kind: DirectionKind,
    max_rapidity: f64,
) -> Option<Vector> {
    let (frame, signs) = orthonormal_frame(g);
    let n = frame.len();
    let neg: Vec<usize> = (0..n).filter(|&i| signs[i] < 0.0).collect();
    let pos: Vec<usize> = (0..n).filter(|&i| signs[i] > 0.0).collect();
    let combine = |idx: &[usize], rng: &mut ChaCha8Rng| -> Option<Vector> {
        if idx.is_empty() {
            return None;
        }
        let c = unit_direction(rng, idx.len());
        let mut v = Vector::zeros(n);
        for (k, &i) in idx.iter().enumerate() {
            v += &frame[i] * c[k];
        }
        Some(v)
    };
    let beta = rng.gen_range(-max_rapidity..=max_rapidity);
    match kind {
        DirectionKind::Spacelike => {
            let s = combine(&pos, rng)?;
            match combine(&neg, rng) {
                Some(t) => Some(s * beta.cosh() + t * beta.sinh()),
                None => Some(s),
            }
        }
        DirectionKind::Timelike => {
            let t = combine(&neg, rng)?;
            match combine(&pos, rng) {
                Some(s) => Some(t * beta.cosh() + s * beta.sinh()),
                None => Some(t),
            }
        }
        DirectionKind::Null => {
            let t = combine(&neg, rng)?;
            let s = combine(&pos, rng)?;
            let v = t + s;
            let norm = v.norm();
            Some(v / norm)
        }
    }
}

/// Source of `(point, direction)` samples addressed by index.
pub trait Sampler: Sync {
    /// `None` once the sampler is exhausted.
    fn pair(&self, index: usize) -> Option<Result<(Point, Vector)>>;

    fn point(&self, index: usize) -> Option<Result<Point>> {
        self.pair(index).map(|r| r.map(|(p, _)| p))
    }
}

/// Points `exp_q(w)` with `w` uniform in a ball of radius
/// `fraction · radius`, paired with directions cycling through spacelike,
/// timelike and null types.
#[derive(Clone, Debug)]
pub struct RegionSampler {
    pub chart: ChartRef,
    pub region: StarRegion,
    pub fraction: f64,
    pub seed: u64,
    pub kinds: Vec<DirectionKind>,
    pub max_rapidity: f64,
    pub geodesic: GeodesicOptions,
}

impl RegionSampler {
    pub fn new(chart: ChartRef, region: StarRegion, seed: u64) -> Self {
        let kinds = if chart.index() == 0 {
            vec![DirectionKind::Spacelike]
        } else {
            vec![DirectionKind::Spacelike, DirectionKind::Timelike, DirectionKind::Null]
        };
        RegionSampler {
            chart,
            region,
            fraction: 0.9,
            seed,
            kinds,
            max_rapidity: 1.0,
            geodesic: GeodesicOptions::default(),
        }
    }

    pub fn with_fraction(mut self, fraction: f64) -> Self {
        self.fraction = fraction;
        self
    }

    pub fn with_kinds(mut self, kinds: Vec<DirectionKind>) -> Self {
        self.kinds = kinds;
        self
    }

    /// Tangent vector at the center that the sample point is the image of.
    pub fn preimage(&self, index: usize) -> Vector {
        let mut rng = rng_for(self.seed, index as u64);
        uniform_in_ball(&mut rng, self.chart.dim(), self.fraction * self.region.radius)
    }
}

impl Sampler for RegionSampler {
    fn pair(&self, index: usize) -> Option<Result<(Point, Vector)>> {
        let mut rng = rng_for(self.seed, index as u64);
        let n = self.chart.dim();
        let w = uniform_in_ball(&mut rng, n, self.fraction * self.region.radius);
        let kind = self.kinds[index % self.kinds.len()];
        Some((|| {
            let p = exp_map(self.chart.as_ref(), &self.region.center, &w, &self.geodesic)?;
            let g = metric_eval(self.chart.as_ref(), p.as_slice())?;
            let v = causal_direction(&mut rng, &g, kind, self.max_rapidity)
                .unwrap_or_else(|| unit_direction(&mut rng, n));
            Ok((p, v))
        })())
    }
}

/// Uniform points in a coordinate box with random coordinate-unit directions.
#[derive(Clone, Debug)]
pub struct BoxSampler {
    pub chart: ChartRef,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub seed: u64,
}

impl BoxSampler {
    pub fn new(chart: ChartRef, lower: Vec<f64>, upper: Vec<f64>, seed: u64) -> Self {
        BoxSampler {
            chart,
            lower,
            upper,
            seed,
        }
    }

    /// Box of half-width `half_width` around `center`.
    pub fn around(chart: ChartRef, center: &Point, half_width: f64, seed: u64) -> Self {
        let lower = center.iter().map(|c| c - half_width).collect();
        let upper = center.iter().map(|c| c + half_width).collect();
        BoxSampler::new(chart, lower, upper, seed)
    }
}

impl Sampler for BoxSampler {
    fn pair(&self, index: usize) -> Option<Result<(Point, Vector)>> {
        let mut rng = rng_for(self.seed, index as u64);
        let n = self.chart.dim();
        // rejection against the chart domain
        for _ in 0..1000 {
            let p = Point::from_fn(n, |i, _| rng.gen_range(self.lower[i]..=self.upper[i]));
            let v = unit_direction(&mut rng, n);
            if self.chart.in_domain(p.as_slice()) {
                return Some(Ok((p, v)));
            }
        }
        Some(Err(crate::GeomError::SamplerStarved {
            accepted: 0,
            attempts: 1000,
        }))
    }
}

/// Fixed list of samples.
#[derive(Clone, Debug, Default)]
pub struct ListSampler(pub Vec<(Point, Vector)>);

impl Sampler for ListSampler {
    fn pair(&self, index: usize) -> Option<Result<(Point, Vector)>> {
        self.0.get(index).cloned().map(Ok)
    }
}

/// `g(v, v)` at `p`.
pub fn norm_squared(chart: &ChartRef, p: &Point, v: &Vector) -> Result<f64> {
    let g = metric_eval(chart.as_ref(), p.as_slice())?;
    Ok(bilinear(&g, v, v))
}
