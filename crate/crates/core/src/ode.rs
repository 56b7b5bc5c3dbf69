//! Adaptive Dormand–Prince 5(4) integrator.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("state left the domain at t = {t}")]
    DomainExit { t: f64 },
    #[error("step budget exhausted at t = {t}")]
    TooManySteps { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Largest allowed |step|.
    pub max_step: f64,
    pub max_steps: usize,
}

impl OdeOptions {
    pub fn new(rtol: f64, max_step: f64) -> Self {
        OdeOptions { rtol, atol: rtol * 1e-3, max_step, max_steps: 2_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub ts: Vec<f64>,
    pub ys: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.ys.last().expect("trajectories are non-empty")
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `y' = f(t, y)` from 0 to `t_end` (either sign), recording every
/// accepted step. `inside` is checked after each step.
pub fn integrate<F, G>(f: F, y0: &[f64], t_end: f64, opts: &OdeOptions, inside: G) -> Result<Trajectory, OdeError>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
    G: Fn(&[f64]) -> bool,
{
    let n = y0.len();
    let mut traj = Trajectory { ts: vec![0.0], ys: vec![y0.to_vec()] };
    if t_end == 0.0 {
        return Ok(traj);
    }
    let dir = t_end.signum();
    let span = t_end.abs();
    let mut t = 0.0f64;
    let mut y = y0.to_vec();
    let mut h = (0.01 * span).min(opts.max_step);
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut steps = 0usize;
    while t < span {
        steps += 1;
        if steps > opts.max_steps {
            return Err(OdeError::TooManySteps { t: dir * t });
        }
        // absorb a sliver remainder instead of taking a vanishing last step
        let last = t + h >= span || span - (t + h) < 1e-3 * h;
        let step = if last { span - t } else { h };
        for s in 0..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += dir * step * A[s][j] * kj[i];
                }
                tmp[i] = acc;
            }
            k[s] = f(dir * (t + C[s] * step), &tmp);
        }
        let mut err: f64 = 0.0;
        let mut y5 = vec![0.0; n];
        for i in 0..n {
            let mut hi = y[i];
            let mut lo = y[i];
            for s in 0..7 {
                hi += dir * step * B5[s] * k[s][i];
                lo += dir * step * B4[s] * k[s][i];
            }
            y5[i] = hi;
            let sc = opts.atol + opts.rtol * y[i].abs().max(hi.abs());
            let e = ((hi - lo) / sc).abs();
            // f64::max would drop a NaN
            err = if e.is_nan() || err.is_nan() { f64::NAN } else { err.max(e) };
        }
        if !err.is_finite() {
            if step < 1e-14 * span.max(1.0) {
                return Err(OdeError::NonFinite { t: dir * t });
            }
            h = 0.25 * step;
            continue;
        }
        if err <= 1.0 {
            t = if last { span } else { t + step };
            y = y5;
            if y.iter().any(|v| !v.is_finite()) {
                return Err(OdeError::NonFinite { t: dir * t });
            }
            if !inside(&y) {
                return Err(OdeError::DomainExit { t: dir * t });
            }
            traj.ts.push(dir * t);
            traj.ys.push(y.clone());
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = (step * factor).min(opts.max_step);
        if t < span && h < 1e-14 * span.max(1.0) {
            return Err(OdeError::StepUnderflow { t: dir * t });
        }
    }
    Ok(traj)
}

/// Convenience wrapper: final state only.
pub fn advance<F>(f: F, y0: &[f64], t_end: f64, opts: &OdeOptions) -> Result<Vec<f64>, OdeError>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    Ok(integrate(f, y0, t_end, opts, |_| true)?.last().to_vec())
}
