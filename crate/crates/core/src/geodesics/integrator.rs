//! Dormand–Prince 5(4) integrator with the standard fourth-order
//! continuous extension.

use crate::error::{GeomError, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Step-size control.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepControl {
    /// Error-controlled steps with mixed absolute/relative tolerance.
    Adaptive { rtol: f64, atol: f64 },
    /// A fixed number of equal steps over the interval.
    Fixed { steps: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorOptions {
    pub control: StepControl,
    pub max_steps: usize,
    pub dense: bool,
}

impl IntegratorOptions {
    pub fn adaptive(tol: f64) -> Self {
        IntegratorOptions {
            control: StepControl::Adaptive { rtol: tol, atol: tol },
            max_steps: 200_000,
            dense: false,
        }
    }

    pub fn fixed(steps: usize) -> Self {
        IntegratorOptions {
            control: StepControl::Fixed { steps },
            max_steps: steps.max(1),
            dense: false,
        }
    }

    pub fn with_dense(mut self) -> Self {
        self.dense = true;
        self
    }
}

/// One accepted step with its interpolation coefficients.
#[derive(Clone, Debug)]
struct DenseStep {
    t0: f64,
    h: f64,
    rcont: [Vec<f64>; 5],
}

/// Result of an integration run.
#[derive(Clone, Debug)]
pub struct Solution {
    pub t0: f64,
    pub t_end: f64,
    pub y_end: Vec<f64>,
    pub steps: usize,
    pub rejected: usize,
    /// Accepted step times and states (always recorded, cheap at this size).
    pub ts: Vec<f64>,
    pub ys: Vec<Vec<f64>>,
    dense: Vec<DenseStep>,
}

impl Solution {
    pub fn has_dense_output(&self) -> bool {
        !self.dense.is_empty() || self.ts.len() == 1
    }

    /// Interpolated state at `t` within the integration interval.
    pub fn eval(&self, t: f64) -> Option<Vec<f64>> {
        let (lo, hi) = if self.t_end >= self.t0 {
            (self.t0, self.t_end)
        } else {
            (self.t_end, self.t0)
        };
        let slack = 1e-12 * (1.0 + hi.abs().max(lo.abs()));
        if t < lo - slack || t > hi + slack || self.dense.is_empty() {
            if self.dense.is_empty() && (t - self.t0).abs() <= slack {
                return self.ys.first().cloned();
            }
            return None;
        }
        let forward = self.t_end >= self.t0;
        let idx = self
            .dense
            .partition_point(|s| if forward { s.t0 + s.h < t } else { s.t0 + s.h > t })
            .min(self.dense.len() - 1);
        let s = &self.dense[idx];
        let theta = (t - s.t0) / s.h;
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &s.rcont;
        Some(
            (0..r1.len())
                .map(|i| r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i]))))
                .collect(),
        )
    }
}

fn error_norm(err: &[f64], y0: &[f64], y1: &[f64], rtol: f64, atol: f64) -> f64 {
    let n = err.len() as f64;
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = atol + rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

struct Stages {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y1: Vec<f64>,
}

impl Stages {
    fn new(n: usize) -> Self {
        Stages {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            y1: vec![0.0; n],
        }
    }
}

/// One Dormand–Prince step from `(t, y)` with size `h`; `k[0]` must hold
/// `f(t, y)` on entry. On success `y1` holds the new state and `k[6]` the
/// derivative there.
fn dp_step<F>(f: &mut F, t: f64, y: &[f64], h: f64, st: &mut Stages) -> Result<()>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y.len();
    macro_rules! stage {
        ($out:expr, $c:expr, $($a:expr => $ki:expr),+) => {{
            for i in 0..n {
                st.tmp[i] = y[i] + h * (0.0 $(+ $a * st.k[$ki][i])+);
            }
            let (head, tail) = st.k.split_at_mut($out);
            let _ = head;
            f(t + $c * h, &st.tmp, &mut tail[0])?;
        }};
    }
    stage!(1, C2, A21 => 0);
    stage!(2, C3, A31 => 0, A32 => 1);
    stage!(3, C4, A41 => 0, A42 => 1, A43 => 2);
    stage!(4, C5, A51 => 0, A52 => 1, A53 => 2, A54 => 3);
    stage!(5, 1.0, A61 => 0, A62 => 1, A63 => 2, A64 => 3, A65 => 4);
    for i in 0..n {
        st.y1[i] = y[i]
            + h * (A71 * st.k[0][i] + A73 * st.k[2][i] + A74 * st.k[3][i] + A75 * st.k[4][i] + A76 * st.k[5][i]);
    }
    let (head, tail) = st.k.split_at_mut(6);
    let _ = head;
    f(t + h, &st.y1, &mut tail[0])?;
    Ok(())
}

fn dense_coefficients(y0: &[f64], h: f64, st: &Stages) -> [Vec<f64>; 5] {
    let n = y0.len();
    let mut r = std::array::from_fn(|_| vec![0.0; n]);
    for i in 0..n {
        let ydiff = st.y1[i] - y0[i];
        let bspl = h * st.k[0][i] - ydiff;
        r[0][i] = y0[i];
        r[1][i] = ydiff;
        r[2][i] = bspl;
        r[3][i] = ydiff - h * st.k[6][i] - bspl;
        r[4][i] = h
            * (D1 * st.k[0][i]
                + D3 * st.k[2][i]
                + D4 * st.k[3][i]
                + D5 * st.k[4][i]
                + D6 * st.k[5][i]
                + D7 * st.k[6][i]);
    }
    r
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end` (either direction).
///
/// The right-hand side may fail (e.g. when a stage leaves a chart domain);
/// adaptive runs retry with a halved step and report the failure once the
/// step underflows.
pub fn integrate<F>(mut f: F, t0: f64, y0: &[f64], t_end: f64, opts: &IntegratorOptions) -> Result<Solution>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y0.len();
    let mut sol = Solution {
        t0,
        t_end,
        y_end: y0.to_vec(),
        steps: 0,
        rejected: 0,
        ts: vec![t0],
        ys: vec![y0.to_vec()],
        dense: Vec::new(),
    };
    let span = t_end - t0;
    if span == 0.0 {
        return Ok(sol);
    }
    let dir = span.signum();
    let mut st = Stages::new(n);
    let mut y = y0.to_vec();
    let mut t = t0;
    f(t, &y, &mut st.k[0])?;

    match opts.control {
        StepControl::Fixed { steps } => {
            let steps = steps.max(1);
            let h = span / steps as f64;
            for s in 0..steps {
                dp_step(&mut f, t, &y, h, &mut st)?;
                if opts.dense {
                    sol.dense.push(DenseStep {
                        t0: t,
                        h,
                        rcont: dense_coefficients(&y, h, &st),
                    });
                }
                t = if s + 1 == steps { t_end } else { t0 + h * (s + 1) as f64 };
                y.copy_from_slice(&st.y1);
                let (k0, rest) = st.k.split_at_mut(1);
                k0[0].copy_from_slice(&rest[5]);
                sol.ts.push(t);
                sol.ys.push(y.clone());
                sol.steps += 1;
            }
        }
        StepControl::Adaptive { rtol, atol } => {
            let h_min = 1e-14 * (1.0 + t0.abs().max(t_end.abs()));
            // initial step from the usual derivative-based guess
            let d0 = error_norm(&y, &y, &y, rtol, atol);
            let d1 = error_norm(&st.k[0], &y, &y, rtol, atol);
            let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
            let mut h = h0.min(span.abs()) * dir;
            let mut last_reject = false;
            let mut err_vec = vec![0.0; n];
            while (t_end - t) * dir > 0.0 {
                if sol.steps + sol.rejected >= opts.max_steps {
                    return Err(GeomError::TooManySteps(opts.max_steps));
                }
                if (t + h - t_end) * dir > 0.0 || ((t_end - t - h) * dir).abs() < h_min {
                    h = t_end - t;
                }
                if h.abs() < h_min {
                    return Err(GeomError::StepSizeUnderflow { t });
                }
                match dp_step(&mut f, t, &y, h, &mut st) {
                    Ok(()) => {}
                    Err(e @ GeomError::OutOfDomain(_)) | Err(e @ GeomError::LeftDomain { .. }) => {
                        if h.abs() * 0.5 < h_min {
                            return Err(match e {
                                GeomError::OutOfDomain(_) => GeomError::LeftDomain { t_exit: t },
                                other => other,
                            });
                        }
                        h *= 0.5;
                        sol.rejected += 1;
                        last_reject = true;
                        continue;
                    }
                    Err(e) => return Err(e),
                }
                for i in 0..n {
                    err_vec[i] = h
                        * (E1 * st.k[0][i]
                            + E3 * st.k[2][i]
                            + E4 * st.k[3][i]
                            + E5 * st.k[4][i]
                            + E6 * st.k[5][i]
                            + E7 * st.k[6][i]);
                }
                let err = error_norm(&err_vec, &y, &st.y1, rtol, atol);
                if err <= 1.0 {
                    if opts.dense {
                        sol.dense.push(DenseStep {
                            t0: t,
                            h,
                            rcont: dense_coefficients(&y, h, &st),
                        });
                    }
                    t = if ((t_end - (t + h)) * dir).abs() < h_min { t_end } else { t + h };
                    y.copy_from_slice(&st.y1);
                    let (k0, rest) = st.k.split_at_mut(1);
                    k0[0].copy_from_slice(&rest[5]);
                    sol.ts.push(t);
                    sol.ys.push(y.clone());
                    sol.steps += 1;
                    let mut fac = 0.9 * err.max(1e-10).powf(-0.2);
                    fac = fac.clamp(0.2, 10.0);
                    if last_reject {
                        fac = fac.min(1.0);
                    }
                    last_reject = false;
                    h *= fac;
                } else {
                    sol.rejected += 1;
                    last_reject = true;
                    h *= (0.9 * err.powf(-0.2)).max(0.2);
                }
            }
        }
    }
    sol.t_end = t_end;
    sol.y_end = y;
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator(_t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        dy[0] = y[1];
        dy[1] = -y[0];
        Ok(())
    }

    #[test]
    fn harmonic_oscillator_adaptive() {
        let sol = integrate(oscillator, 0.0, &[0.0, 1.0], 3.0, &IntegratorOptions::adaptive(1e-12)).unwrap();
        assert!((sol.y_end[0] - 3f64.sin()).abs() < 1e-10);
        assert!((sol.y_end[1] - 3f64.cos()).abs() < 1e-10);
    }

    #[test]
    fn backward_and_fixed_integration() {
        let sol = integrate(oscillator, 0.0, &[0.0, 1.0], -2.0, &IntegratorOptions::fixed(400)).unwrap();
        assert!((sol.y_end[0] - (-2f64).sin()).abs() < 1e-11);
        assert_eq!(sol.steps, 400);
    }

    #[test]
    fn dense_output_interpolates() {
        let opts = IntegratorOptions::adaptive(1e-12).with_dense();
        let sol = integrate(oscillator, 0.0, &[0.0, 1.0], 5.0, &opts).unwrap();
        for i in 0..=50 {
            let t = 0.1 * i as f64;
            let y = sol.eval(t).unwrap();
            assert!((y[0] - t.sin()).abs() < 1e-9, "t = {t}");
        }
        assert!(sol.eval(5.5).is_none());
    }

    #[test]
    fn domain_failure_reported_as_left_domain() {
        let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
            if y[0] > 1.0 {
                return Err(GeomError::OutOfDomain(y.to_vec()));
            }
            dy[0] = 1.0;
            Ok(())
        };
        let err = integrate(rhs, 0.0, &[0.0], 2.0, &IntegratorOptions::adaptive(1e-10)).unwrap_err();
        match err {
            GeomError::LeftDomain { t_exit } => assert!((t_exit - 1.0).abs() < 1e-6),
            other => panic!("unexpected {other:?}"),
        }
    }
}
