//! Fixed-step Dormand–Prince integration of model dynamics, known input
//! signals and off-grid sampling of trajectories.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::model::ModelSpec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("state became non-finite at t = {0}")]
    NonFiniteState(f64),
    #[error("time {t} outside [0, {horizon}]")]
    OutOfDomain { t: f64, horizon: f64 },
    #[error("invalid integration settings: {0}")]
    InvalidSettings(String),
}

/// A known input signal `u(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputFunction {
    None,
    /// `u(t) = exp(−k t)`.
    ExpDecay { k: f64 },
    /// Piecewise linear through the samples.
    Tabulated { times: Vec<f64>, values: Vec<f64> },
}

impl InputFunction {
    pub fn is_none(&self) -> bool {
        matches!(self, InputFunction::None)
    }

    /// `u^(order)(t)`.
    pub fn derivative(&self, t: f64, order: usize) -> f64 {
        match self {
            InputFunction::None => 0.0,
            InputFunction::ExpDecay { k } => (-k).powi(order as i32) * (-k * t).exp(),
            InputFunction::Tabulated { times, values } => {
                let j = times.partition_point(|&s| s <= t).clamp(1, times.len() - 1);
                let slope = (values[j] - values[j - 1]) / (times[j] - times[j - 1]);
                match order {
                    0 => values[j - 1] + slope * (t - times[j - 1]),
                    1 => slope,
                    _ => 0.0,
                }
            }
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.derivative(t, 0)
    }

    /// Values of all declared inputs (zero or one signal) at `t`.
    pub fn values(&self, t: f64) -> Vec<f64> {
        if self.is_none() {
            Vec::new()
        } else {
            vec![self.value(t)]
        }
    }
}

/// States on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub theta: Vec<f64>,
    pub x0: Vec<f64>,
    pub dt: f64,
    /// Continuous-extension coefficients of each step.
    #[serde(skip)]
    dense: Vec<[Vec<f64>; 3]>,
}

// Dormand–Prince 5(4) tableau
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
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

const DENSE: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// One Dormand–Prince step; returns the 5th-order solution and the size of
/// the embedded error estimate.
pub fn dopri5_step(rhs: &mut impl FnMut(f64, &[f64], &mut [f64]), t: f64, x: &[f64], h: f64) -> (Vec<f64>, f64) {
    let (next, err, _) = dopri5_step_dense(rhs, t, x, h);
    (next, err)
}

/// As [`dopri5_step`], also returning the coefficients of the 4th-order
/// continuous extension.
fn dopri5_step_dense(
    rhs: &mut impl FnMut(f64, &[f64], &mut [f64]),
    t: f64,
    x: &[f64],
    h: f64,
) -> (Vec<f64>, f64, [Vec<f64>; 3]) {
    let n = x.len();
    let mut k = vec![vec![0.0; n]; 7];
    let mut stage = vec![0.0; n];
    for s in 0..7 {
        for (d, st) in stage.iter_mut().enumerate() {
            *st = x[d] + h * (0..s).map(|j| A[s][j] * k[j][d]).sum::<f64>();
        }
        let (head, tail) = k.split_at_mut(s);
        let _ = head;
        rhs(t + C[s] * h, &stage, &mut tail[0]);
    }
    let mut next = vec![0.0; n];
    let mut err: f64 = 0.0;
    for d in 0..n {
        next[d] = x[d] + h * (0..7).map(|s| B5[s] * k[s][d]).sum::<f64>();
        let low = x[d] + h * (0..7).map(|s| B4[s] * k[s][d]).sum::<f64>();
        err = err.max((next[d] - low).abs());
    }
    let mut r3 = vec![0.0; n];
    let mut r4 = vec![0.0; n];
    let mut r5 = vec![0.0; n];
    for d in 0..n {
        let r2 = next[d] - x[d];
        r3[d] = h * k[0][d] - r2;
        r4[d] = r2 - h * k[6][d] - r3[d];
        r5[d] = h * (0..7).map(|s| DENSE[s] * k[s][d]).sum::<f64>();
    }
    (next, err, [r3, r4, r5])
}

/// Integrates `ẋ = f(x, u(t); θ)` from `x0` over `[0, horizon]` with step
/// `dt`.
pub fn integrate(
    m: &ModelSpec,
    theta: &[f64],
    x0: &[f64],
    input: &InputFunction,
    horizon: f64,
    dt: f64,
) -> Result<Trajectory, SimError> {
    if !(dt > 0.0 && horizon > 0.0) {
        return Err(SimError::InvalidSettings("step and horizon must be positive".into()));
    }
    let steps = (horizon / dt).round() as usize;
    if ((steps as f64) * dt - horizon).abs() > 1e-9 * horizon {
        return Err(SimError::InvalidSettings(format!("horizon {horizon} is not a multiple of the step {dt}")));
    }
    if x0.len() != m.n_states() || theta.len() != m.params.len() {
        return Err(SimError::InvalidSettings("initial state or parameter vector has the wrong length".into()));
    }
    let compiled = crate::model::CompiledDynamics::new(m);
    let mut rhs = |t: f64, x: &[f64], out: &mut [f64]| compiled.eval(x, &input.values(t), theta, out);
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut x = x0.to_vec();
    times.push(0.0);
    states.push(x.clone());
    let mut dense = Vec::with_capacity(steps);
    let mut max_err: f64 = 0.0;
    for s in 0..steps {
        let t = s as f64 * dt;
        let (next, err, coeffs) = dopri5_step_dense(&mut rhs, t, &x, dt);
        dense.push(coeffs);
        max_err = max_err.max(err);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(SimError::NonFiniteState(t + dt));
        }
        x = next;
        times.push((s + 1) as f64 * dt);
        states.push(x.clone());
    }
    log::debug!("dopri5: {steps} steps of {dt}, largest embedded error estimate {max_err:.3e}");
    Ok(Trajectory { times, states, theta: theta.to_vec(), x0: x0.to_vec(), dt, dense })
}

impl Trajectory {
    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn n_states(&self) -> usize {
        self.x0.len()
    }

    /// State at time `t`: the solver's continuous extension inside the step
    /// containing `t` (exact on the grid), or cubic interpolation through the
    /// four nearest grid points for trajectories without step data.
    pub fn sample(&self, t: f64) -> Result<Vec<f64>, SimError> {
        let horizon = self.horizon();
        if !(t >= -1e-12 && t <= horizon + 1e-12) {
            return Err(SimError::OutOfDomain { t, horizon });
        }
        let pos = t / self.dt;
        let nearest = pos.round();
        if (pos - nearest).abs() < 1e-9 {
            return Ok(self.states[nearest as usize].clone());
        }
        let last = self.times.len() - 1;
        let step = (pos.floor() as usize).min(last - 1);
        if let Some([r3, r4, r5]) = self.dense.get(step) {
            let th = (t - self.times[step]) / self.dt;
            let (a, b) = (&self.states[step], &self.states[step + 1]);
            return Ok((0..a.len())
                .map(|d| a[d] + th * ((b[d] - a[d]) + (1.0 - th) * (r3[d] + th * (r4[d] + (1.0 - th) * r5[d]))))
                .collect());
        }
        let start = (pos.floor() as isize - 1).clamp(0, last as isize - 3) as usize;
        let nodes: Vec<usize> = (start..start + 4).collect();
        let mut out = vec![0.0; self.n_states()];
        for &j in &nodes {
            let tj = self.times[j];
            let w: f64 = nodes.iter().filter(|&&k| k != j).map(|&k| (t - self.times[k]) / (tj - self.times[k])).product();
            for (o, x) in out.iter_mut().zip(&self.states[j]) {
                *o += w * x;
            }
        }
        Ok(out)
    }

    /// Writes `t,<names>` rows with round-trip float formatting.
    pub fn write_csv(&self, names: &[String], mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "t,{}", names.join(","))?;
        for (t, x) in self.times.iter().zip(&self.states) {
            let row: Vec<String> = x.iter().map(|v| format!("{v:?}")).collect();
            writeln!(w, "{t:?},{}", row.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;

    fn decay() -> ModelSpec {
        parse_model("states: x\ndynamics:\n  d/dt x = -x\nmeasure:\n  y1 = x\n").unwrap()
    }

    #[test]
    fn constant_and_exponential() {
        let still = parse_model("states: x\ndynamics:\n  d/dt x = 0\nmeasure:\n  y1 = x\n").unwrap();
        let tr = integrate(&still, &[], &[3.5], &InputFunction::None, 2.0, 0.5).unwrap();
        assert!(tr.states.iter().all(|x| x[0] == 3.5));
        let tr = integrate(&decay(), &[], &[1.0], &InputFunction::None, 1.0, 0.1).unwrap();
        assert!((tr.states.last().unwrap()[0] - (-1.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn interpolation_off_grid() {
        let tr = integrate(&decay(), &[], &[1.0], &InputFunction::None, 2.0, 0.2).unwrap();
        assert_eq!(tr.sample(0.4).unwrap(), tr.states[2]);
        assert!((tr.sample(0.5).unwrap()[0] - (-0.5f64).exp()).abs() < 1e-6);
        assert!((tr.sample(1.93).unwrap()[0] - (-1.93f64).exp()).abs() < 1e-6);
        assert!(matches!(tr.sample(3.0), Err(SimError::OutOfDomain { .. })));
    }

    #[test]
    fn exp_decay_input_derivatives() {
        let u = InputFunction::ExpDecay { k: 0.01 };
        for j in 0..4 {
            let expected = (-0.01f64).powi(j) * u.value(7.0);
            assert!((u.derivative(7.0, j as usize) - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn blow_up_is_reported() {
        let m = parse_model("states: x\ndynamics:\n  d/dt x = x^2\nmeasure:\n  y1 = x\n").unwrap();
        assert!(matches!(
            integrate(&m, &[], &[1.0], &InputFunction::None, 5.0, 0.1),
            Err(SimError::NonFiniteState(_))
        ));
    }
}
