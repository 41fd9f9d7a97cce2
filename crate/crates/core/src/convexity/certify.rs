use rayon::prelude::*;

use crate::error::{GeomError, Result};
use crate::linalg::{euclideanized, relative_eigenvalues, Point};
use crate::manifolds::metric_eval;
use crate::report::{CheckReport, SampleRecord, Series, Verdict};
use crate::sampling::Sampler;

use super::comparison::{lambda_value, ComparisonField, EnergyBound, ScalarField};
use super::hessian::{hessian_matrix, hessian_quadratic_form, HessianOptions};

/// Pointwise `λ` for λ-convexity checks.
pub type LambdaFn<'a> = &'a (dyn Fn(&Point) -> Result<f64> + Sync);

#[derive(Clone, Debug, PartialEq)]
pub struct CertifyOptions {
    pub n_samples: usize,
    pub tol: f64,
    pub hessian: HessianOptions,
    /// Margins above this count as strict inequality witnesses.
    pub strict_threshold: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            n_samples: 100,
            tol: 1e-5,
            hessian: HessianOptions::default(),
            strict_threshold: 1e-3,
        }
    }
}

impl CertifyOptions {
    pub fn with_samples(mut self, n: usize) -> Self {
        self.n_samples = n;
        self
    }
}

struct LambdaSample {
    energy: Option<f64>,
    point: Point,
    direction: Vec<f64>,
    margin: f64,
    error_estimate: f64,
}

fn draw<T: Send>(
    sampler: &dyn Sampler,
    n: usize,
    eval: impl Fn(Point, crate::linalg::Vector) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let results: Vec<Option<Result<T>>> = (0..n)
        .into_par_iter()
        .map(|i| sampler.pair(i).map(|r| r.and_then(|(p, v)| eval(p, v))))
        .collect();
    let mut out = Vec::with_capacity(n);
    for (i, r) in results.into_iter().enumerate() {
        match r {
            None => return Err(GeomError::SamplerExhausted(i)),
            Some(r) => out.push(r?),
        }
    }
    Ok(out)
}

/// Samples `m = (f∘γ_v)''(0) - λ(p) g(v,v)` over `(p, v)` pairs drawn from
/// `sampler`. `λ` defaults to `cos√(K E_q)`.
pub fn certify_lambda_convex(
    field: &ComparisonField,
    sampler: &dyn Sampler,
    lambda_fn: Option<LambdaFn>,
    opts: &CertifyOptions,
) -> Result<CheckReport> {
    let samples = draw(sampler, opts.n_samples, |p, v| {
        let e = field.energy(&p)?;
        let lambda = match lambda_fn {
            Some(l) => l(&p)?,
            None => lambda_value(field.k, e),
        };
        let hs = hessian_quadratic_form(field, &p, &v, &opts.hessian)?;
        Ok(LambdaSample {
            energy: Some(e),
            margin: hs.value - lambda * hs.g_vv,
            direction: hs.direction.as_slice().to_vec(),
            point: p,
            error_estimate: hs.error_estimate,
        })
    })?;
    let mut report = CheckReport::new(
        "lambda-convexity",
        field.chart.name(),
        Some(field.k),
        field.q().as_slice().to_vec(),
        opts.tol,
    );
    fold_lambda_samples(&mut report, &samples, opts);
    let outside = samples
        .iter()
        .filter(|s| s.energy.is_some_and(|e| !EnergyBound::Convexity.admits(field.k, e)))
        .count();
    report.diag("samples_outside_energy_bound", outside as f64);
    if outside > 0 {
        report.notes.push(format!("{outside} samples violate the energy bound K·E < π²"));
    }
    Ok(report)
}

/// λ-convexity of an arbitrary field with an explicit `λ`.
pub fn certify_lambda_convex_field(
    field: &dyn ScalarField,
    sampler: &dyn Sampler,
    lambda_fn: LambdaFn,
    opts: &CertifyOptions,
) -> Result<CheckReport> {
    let samples = draw(sampler, opts.n_samples, |p, v| {
        let lambda = lambda_fn(&p)?;
        let hs = hessian_quadratic_form(field, &p, &v, &opts.hessian)?;
        Ok(LambdaSample {
            energy: None,
            margin: hs.value - lambda * hs.g_vv,
            direction: hs.direction.as_slice().to_vec(),
            point: p,
            error_estimate: hs.error_estimate,
        })
    })?;
    let mut report = CheckReport::new("lambda-convexity", field.chart().name(), None, vec![], opts.tol);
    fold_lambda_samples(&mut report, &samples, opts);
    Ok(report)
}

fn fold_lambda_samples(report: &mut CheckReport, samples: &[LambdaSample], opts: &CertifyOptions) {
    let mut series = Series::new("energy_vs_margin", "E_q", "margin");
    let mut strict = 0usize;
    let mut max_err: f64 = 0.0;
    for s in samples {
        report.record(s.margin, || SampleRecord {
            point: s.point.as_slice().to_vec(),
            direction: Some(s.direction.clone()),
            second_direction: None,
            margin: s.margin,
            label: String::new(),
        });
        if s.margin > opts.strict_threshold {
            strict += 1;
        }
        max_err = max_err.max(s.error_estimate);
        if let Some(e) = s.energy {
            series.points.push([e, s.margin]);
        }
    }
    report.finish_by_margin();
    report.diag("strict_samples", strict as f64);
    report.diag("max_stencil_error", max_err);
    if !series.points.is_empty() {
        report.series.push(series);
    }
}

/// Space-time convexity at sampled points: `Hess f - λ g ⪰ 0` with
/// `λ > 0`, and `Hess f` with exactly one negative eigenvalue (coordinate
/// Euclidean reference; eigenvalues within `tol` of zero count as
/// degenerate).
pub fn certify_spacetime_convex(
    field: &dyn ScalarField,
    lambda_fn: LambdaFn,
    sampler: &dyn Sampler,
    opts: &CertifyOptions,
) -> Result<CheckReport> {
    let chart = field.chart().clone();
    if chart.index() != 1 {
        return Err(GeomError::InvalidArgument(format!(
            "{} is not Lorentzian",
            chart.name()
        )));
    }
    struct Sample {
        point: Point,
        lambda: f64,
        convexity_margin: f64,
        eigenvalues: Vec<f64>,
    }
    let samples = draw(sampler, opts.n_samples, |p, _| {
        let h = hessian_matrix(field, &p, &opts.hessian)?;
        let g = metric_eval(chart.as_ref(), p.as_slice())?;
        let lambda = lambda_fn(&p)?;
        let b = &h - &g * lambda;
        let convexity_margin = relative_eigenvalues(&b, &euclideanized(&g))[0];
        let mut eigenvalues: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
        eigenvalues.sort_by(f64::total_cmp);
        Ok(Sample {
            point: p,
            lambda,
            convexity_margin,
            eigenvalues,
        })
    })?;

    let mut report = CheckReport::new("spacetime-convexity", chart.name(), None, vec![], opts.tol);
    let mut series = Series::new("x0_vs_margin", "x0", "margin");
    let (mut bad_lambda, mut bad_convexity, mut bad_signature) = (0usize, 0usize, 0usize);
    let mut first_bad_x0 = f64::INFINITY;
    let mut min_lambda = f64::INFINITY;
    let mut worst_eigs: Option<Vec<f64>> = None;
    for s in &samples {
        let e = &s.eigenvalues;
        let signature_margin = (-e[0]).min(e.get(1).copied().unwrap_or(f64::INFINITY));
        let lambda_ok = s.lambda > 0.0;
        let convex_ok = s.convexity_margin >= -opts.tol;
        let signature_ok = signature_margin > opts.tol;
        bad_lambda += usize::from(!lambda_ok);
        bad_convexity += usize::from(!convex_ok);
        bad_signature += usize::from(!signature_ok);
        if !(lambda_ok && convex_ok && signature_ok) {
            first_bad_x0 = first_bad_x0.min(s.point[0]);
        }
        min_lambda = min_lambda.min(s.lambda);
        let margin = s.convexity_margin.min(signature_margin).min(s.lambda);
        let before = report.min_margin;
        report.record(margin, || SampleRecord {
            point: s.point.as_slice().to_vec(),
            direction: None,
            second_direction: None,
            margin,
            label: format!("lambda={:.6e}", s.lambda),
        });
        if report.min_margin != before {
            worst_eigs = Some(e.clone());
        }
        series.points.push([s.point[0], margin]);
    }
    let pass = bad_lambda + bad_convexity + bad_signature == 0 && !samples.is_empty();
    report.set_verdict(if pass { Verdict::Pass } else { Verdict::Fail });
    report.diag("failed_lambda_positive", bad_lambda as f64);
    report.diag("failed_convexity", bad_convexity as f64);
    report.diag("failed_signature", bad_signature as f64);
    report.diag("min_lambda", min_lambda);
    if first_bad_x0.is_finite() {
        report.diag("first_violation_x0", first_bad_x0);
    }
    if let Some(e) = worst_eigs {
        report.notes.push(format!("Hessian eigenvalues at worst sample: {e:?}"));
    }
    report.series.push(series);
    Ok(report)
}
