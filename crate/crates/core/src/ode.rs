//! Dormand–Prince 5(4) integrator for autonomous matrix ODEs.
//!
//! The driver calls a projection hook after every accepted step (used for
//! re-symmetrization and orthogonal retraction) and hands each accepted state
//! to an observer, which may stop the integration early.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
// fifth-order weights (also the last stage, FSAL)
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// fifth minus fourth order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            h_init: 1e-2,
            h_min: 1e-12,
            h_max: 1.0,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Clone, Debug)]
pub struct OdeOutcome {
    pub t: f64,
    pub y: DMatrix<f64>,
    pub accepted: usize,
    pub rejected: usize,
    /// The observer asked to stop before `t_end`.
    pub stopped: bool,
}

/// Information passed to the observer after each accepted step (and once at
/// the initial point).
pub struct StepView<'a> {
    pub t: f64,
    pub y: &'a DMatrix<f64>,
    pub dydt: &'a DMatrix<f64>,
    /// Size of the projection applied after this step.
    pub correction: f64,
}

fn error_norm(err: &DMatrix<f64>, y0: &DMatrix<f64>, y1: &DMatrix<f64>, ctl: &StepControl) -> f64 {
    let mut acc = 0.0;
    for ((e, a), b) in err.iter().zip(y0.iter()).zip(y1.iter()) {
        let scale = ctl.abs_tol + ctl.rel_tol * a.abs().max(b.abs());
        acc += (e / scale).powi(2);
    }
    (acc / err.len() as f64).sqrt()
}

fn combo(y: &DMatrix<f64>, h: f64, coeffs: &[f64], ks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let mut out = y.clone();
    for (c, k) in coeffs.iter().zip(ks) {
        if *c != 0.0 {
            out += k * (h * c);
        }
    }
    out
}

/// Integrates `y' = f(y)` from `t = 0` to `t_end`.
///
/// `project` may modify the accepted state in place and returns the size of
/// its correction. Returns `StiffRegion` if the step size underflows and
/// `NonFinite` on overflow; the observer has seen every accepted state up
/// to that point.
pub fn integrate<F, P, O>(
    ctl: &StepControl,
    mut f: F,
    y0: DMatrix<f64>,
    t_end: f64,
    mut project: P,
    mut observe: O,
) -> Result<OdeOutcome>
where
    F: FnMut(&DMatrix<f64>) -> DMatrix<f64>,
    P: FnMut(&mut DMatrix<f64>) -> f64,
    O: FnMut(&StepView<'_>) -> Control,
{
    let mut t = 0.0;
    let mut y = y0;
    let mut k1 = f(&y);
    let mut out = OdeOutcome {
        t,
        y: y.clone(),
        accepted: 0,
        rejected: 0,
        stopped: false,
    };
    let first = StepView {
        t,
        y: &y,
        dydt: &k1,
        correction: 0.0,
    };
    if observe(&first) == Control::Stop {
        out.stopped = true;
        return Ok(out);
    }

    let mut h = ctl.h_init.min(ctl.h_max).min(t_end.max(ctl.h_min));
    let mut last_rejected = false;
    let mut steps = 0usize;
    while t < t_end {
        steps += 1;
        if steps > ctl.max_steps {
            return Err(Error::TooManySteps {
                steps: ctl.max_steps,
                t_end,
            });
        }
        if t + h > t_end {
            h = t_end - t;
        }
        let mut ks: Vec<DMatrix<f64>> = Vec::with_capacity(7);
        ks.push(k1.clone());
        ks.push(f(&combo(&y, h, &A2, &ks)));
        ks.push(f(&combo(&y, h, &A3, &ks)));
        ks.push(f(&combo(&y, h, &A4, &ks)));
        ks.push(f(&combo(&y, h, &A5, &ks)));
        ks.push(f(&combo(&y, h, &A6, &ks)));
        let y_new = combo(&y, h, &B, &ks);
        ks.push(f(&y_new));
        let mut err = DMatrix::zeros(y.nrows(), y.ncols());
        for (e, k) in E.iter().zip(&ks) {
            if *e != 0.0 {
                err += k * (h * e);
            }
        }
        let en = error_norm(&err, &y, &y_new, ctl);
        if !en.is_finite() || !y_new.iter().all(|v| v.is_finite()) {
            if h <= ctl.h_min {
                return Err(Error::NonFinite { t });
            }
            h = (h * 0.1).max(ctl.h_min);
            out.rejected += 1;
            last_rejected = true;
            continue;
        }
        if en <= 1.0 {
            t += h;
            y = y_new;
            let correction = project(&mut y);
            k1 = if correction != 0.0 {
                f(&y)
            } else {
                ks.pop().expect("seven stages")
            };
            out.accepted += 1;
            let view = StepView {
                t,
                y: &y,
                dydt: &k1,
                correction,
            };
            if observe(&view) == Control::Stop {
                out.stopped = true;
                break;
            }
            let grow = if en == 0.0 {
                5.0
            } else {
                (0.9 * en.powf(-0.2)).clamp(0.2, 5.0)
            };
            let grow = if last_rejected { grow.min(1.0) } else { grow };
            h = (h * grow).min(ctl.h_max);
            last_rejected = false;
        } else {
            out.rejected += 1;
            last_rejected = true;
            let shrink = (0.9 * en.powf(-0.2)).clamp(0.1, 1.0);
            h *= shrink;
            if h < ctl.h_min {
                return Err(Error::StiffRegion { t, h });
            }
        }
    }
    out.t = t;
    out.y = y;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    #[test]
    fn exponential_decay() {
        let ctl = StepControl::default();
        let out = integrate(
            &ctl,
            |y| -y,
            scalar(1.0),
            5.0,
            |_| 0.0,
            |_| Control::Continue,
        )
        .unwrap();
        assert!((out.t - 5.0).abs() < 1e-15);
        assert!((out.y[(0, 0)] - (-5.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn harmonic_oscillator_is_fifth_order_accurate() {
        // y = (x, v), x'' = -x
        let ctl = StepControl {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            ..StepControl::default()
        };
        let f = |y: &DMatrix<f64>| DMatrix::from_row_slice(2, 1, &[y[(1, 0)], -y[(0, 0)]]);
        let y0 = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let out = integrate(&ctl, f, y0, 10.0, |_| 0.0, |_| Control::Continue).unwrap();
        assert!((out.y[(0, 0)] - 10f64.cos()).abs() < 1e-10);
        assert!((out.y[(1, 0)] + 10f64.sin()).abs() < 1e-10);
    }

    #[test]
    fn observer_can_stop() {
        let ctl = StepControl::default();
        let mut seen = 0;
        let out = integrate(
            &ctl,
            |y| y.clone(),
            scalar(1.0),
            10.0,
            |_| 0.0,
            |v| {
                seen += 1;
                if v.y[(0, 0)] > 2.0 {
                    Control::Stop
                } else {
                    Control::Continue
                }
            },
        )
        .unwrap();
        assert!(out.stopped);
        assert!(out.y[(0, 0)] > 2.0 && out.y[(0, 0)] < 3.0);
        assert_eq!(seen, out.accepted + 1);
    }

    #[test]
    fn blow_up_reports_failure() {
        let ctl = StepControl::default();
        // y' = y^2 blows up at t = 1
        let res = integrate(
            &ctl,
            |y| y.component_mul(y),
            scalar(1.0),
            2.0,
            |_| 0.0,
            |_| Control::Continue,
        );
        assert!(matches!(
            res,
            Err(Error::StiffRegion { .. })
                | Err(Error::NonFinite { .. })
                | Err(Error::TooManySteps { .. })
        ));
    }
}
