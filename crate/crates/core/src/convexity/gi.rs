use std::sync::Arc;

use crate::error::Result;
use crate::linalg::Point;
use crate::manifolds::{ChartRef, WarpedProductChart, WarpedProductSpec};
use crate::report::CheckReport;
use crate::sampling::BoxSampler;

use super::certify::{certify_spacetime_convex, CertifyOptions};
use super::comparison::ScalarField;

/// Lift of `-f(τ)²/2` to a warped product `-I ×_f F` (τ is coordinate 0).
#[derive(Clone, Debug)]
pub struct WarpingLift {
    pub chart: ChartRef,
    pub spec: WarpedProductSpec,
}

impl ScalarField for WarpingLift {
    fn chart(&self) -> &ChartRef {
        &self.chart
    }

    fn value(&self, p: &Point) -> Result<f64> {
        let f = self.spec.warping.value(p[0]);
        Ok(-0.5 * f * f)
    }

    fn scale(&self) -> f64 {
        1.0
    }
}

/// Sampled region of a warped product: `τ` range and fiber coordinate box.
#[derive(Clone, Debug, PartialEq)]
pub struct WarpedRegion {
    pub tau: (f64, f64),
    pub fiber_half_width: f64,
    pub seed: u64,
}

/// Space-time convexity of `-f²/2` on a warped product, with
/// `λ = f'(τ)²`, the largest admissible choice (it saturates the fiber
/// directions of `Hess(-f²/2) = -(f'² + f f'') dτ² + f'² g_F`).
pub fn gi_warped_candidate(spec: &WarpedProductSpec, region: &WarpedRegion, opts: &CertifyOptions) -> Result<CheckReport> {
    spec.validate()?;
    let chart: ChartRef = Arc::new(WarpedProductChart::new("warped-candidate", spec.clone())?);
    let lift = WarpingLift {
        chart: chart.clone(),
        spec: spec.clone(),
    };
    let n = chart.dim();
    let mut lower = vec![-region.fiber_half_width; n];
    let mut upper = vec![region.fiber_half_width; n];
    lower[0] = region.tau.0;
    upper[0] = region.tau.1;
    let sampler = BoxSampler::new(chart, lower, upper, region.seed);
    let warping = spec.warping.clone();
    let lambda = move |p: &Point| -> Result<f64> {
        let (_, d1, _) = warping.eval(p[0]);
        Ok(d1 * d1)
    };
    let mut report = certify_spacetime_convex(&lift, &lambda, &sampler, opts)?;
    report.check_id = "gi-warped-candidate".into();
    report.diag("tau_lower", region.tau.0);
    report.diag("tau_upper", region.tau.1);
    Ok(report)
}
