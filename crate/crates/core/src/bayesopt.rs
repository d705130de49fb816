//! Gaussian-process Bayesian optimization with Expected Improvement over a
//! box, minimizing.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BoError {
    #[error("kernel matrix stayed singular after raising the nugget to {0:e}")]
    SingularKernel(f64),
    #[error("iteration budget of {0} suggestions exhausted")]
    IterationBudgetExceeded(usize),
    #[error("no observations to fit")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoConfig {
    pub lower: f64,
    pub upper: f64,
    /// Points of the initial Latin-hypercube design.
    pub n_init: usize,
    /// Random candidates scored by EI per suggestion.
    pub n_candidates: usize,
    /// Kernel length scale as a fraction of the box width.
    pub length_scale: f64,
    /// Diagonal jitter relative to the signal variance.
    pub nugget: f64,
    /// Model `ln(value)` instead of the value.
    pub log_objective: bool,
}

impl Default for BoConfig {
    fn default() -> Self {
        BoConfig { lower: 0.0, upper: 0.5, n_init: 5, n_candidates: 1024, length_scale: 0.1, nugget: 1e-6, log_objective: true }
    }
}

/// Exact GP posterior with a squared-exponential kernel and constant mean.
#[derive(Debug, Clone)]
pub struct Posterior {
    xs: Vec<Vec<f64>>,
    alpha: DVector<f64>,
    chol: Cholesky<f64, nalgebra::Dyn>,
    mean: f64,
    signal_var: f64,
    length_scale: f64,
}

fn kernel(a: &[f64], b: &[f64], ls: f64, var: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    var * (-0.5 * d2 / (ls * ls)).exp()
}

/// Fits the GP; the signal variance is the sample variance of `ys` (1 when
/// that is degenerate). A singular kernel is retried with a larger nugget.
pub fn gp_fit(xs: &[Vec<f64>], ys: &[f64], length_scale: f64, nugget: f64) -> Result<Posterior, BoError> {
    if xs.is_empty() {
        return Err(BoError::Empty);
    }
    let n = xs.len();
    let mean = ys.iter().sum::<f64>() / n as f64;
    let var = ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n as f64;
    let signal_var = if var > 1e-12 { var } else { 1.0 };
    let k = DMatrix::from_fn(n, n, |i, j| kernel(&xs[i], &xs[j], length_scale, signal_var));
    let mut jitter = nugget;
    for _ in 0..8 {
        let mut kj = k.clone();
        for i in 0..n {
            kj[(i, i)] += jitter * signal_var;
        }
        if let Some(chol) = Cholesky::new(kj) {
            let centered = DVector::from_iterator(n, ys.iter().map(|y| y - mean));
            let alpha = chol.solve(&centered);
            return Ok(Posterior { xs: xs.to_vec(), alpha, chol, mean, signal_var, length_scale });
        }
        log::warn!("kernel matrix not positive definite with nugget {jitter:e}; retrying");
        jitter *= 10.0;
    }
    Err(BoError::SingularKernel(jitter))
}

impl Posterior {
    /// Predictive mean and standard deviation at `x`.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let ks = DVector::from_iterator(self.xs.len(), self.xs.iter().map(|p| kernel(p, x, self.length_scale, self.signal_var)));
        let mu = self.mean + ks.dot(&self.alpha);
        let v = self.chol.solve(&ks);
        let var = (self.signal_var - ks.dot(&v)).max(0.0);
        (mu, var.sqrt())
    }
}

/// `EI = (best − μ) Φ(z) + σ φ(z)`, `z = (best − μ)/σ`.
pub fn expected_improvement(mu: f64, sd: f64, best: f64) -> f64 {
    if sd <= 0.0 {
        return (best - mu).max(0.0);
    }
    let n = Normal::standard();
    let z = (best - mu) / sd;
    ((best - mu) * n.cdf(z) + sd * n.pdf(z)).max(0.0)
}

/// One observed candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub x: Vec<f64>,
    pub value: f64,
}

/// Sequential optimizer state; the suggestion sequence is a deterministic
/// function of the seed and the observed values.
#[derive(Debug, Clone)]
pub struct BoState {
    pub config: BoConfig,
    pub dim: usize,
    pub budget: usize,
    pub seed: u64,
    pub history: Vec<Observation>,
    design: Vec<Vec<f64>>,
    suggested: usize,
}

impl BoState {
    pub fn new(dim: usize, budget: usize, seed: u64, config: BoConfig) -> BoState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = config.n_init.min(budget).max(1);
        let (lo, hi) = (config.lower, config.upper);
        let columns: Vec<Vec<f64>> = (0..dim)
            .map(|_| {
                let mut strata: Vec<usize> = (0..k).collect();
                strata.shuffle(&mut rng);
                strata.into_iter().map(|s| lo + (hi - lo) * (s as f64 + rng.gen::<f64>()) / k as f64).collect()
            })
            .collect();
        let design = (0..k).map(|i| columns.iter().map(|c| c[i]).collect()).collect();
        BoState { config, dim, budget, seed, history: Vec::new(), design, suggested: 0 }
    }

    /// Next point to evaluate: the initial design first, then the EI maximizer
    /// among seeded uniform candidates.
    pub fn suggest_next(&mut self) -> Result<Vec<f64>, BoError> {
        if self.suggested >= self.budget {
            return Err(BoError::IterationBudgetExceeded(self.budget));
        }
        let k = self.suggested;
        self.suggested += 1;
        if k < self.design.len() {
            return Ok(self.design[k].clone());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(k as u64 + 1)));
        let (lo, hi) = (self.config.lower, self.config.upper);
        let candidates: Vec<Vec<f64>> =
            (0..self.config.n_candidates).map(|_| (0..self.dim).map(|_| rng.gen_range(lo..=hi)).collect()).collect();
        let (xs, ys) = self.fit_data();
        if xs.is_empty() {
            return Ok(candidates[0].clone());
        }
        let post = gp_fit(&xs, &ys, self.config.length_scale * (hi - lo), self.config.nugget)?;
        let best = ys.iter().copied().fold(f64::INFINITY, f64::min);
        let mut top = (f64::NEG_INFINITY, 0);
        for (i, c) in candidates.iter().enumerate() {
            let (mu, sd) = post.predict(c);
            let ei = expected_improvement(mu, sd, best);
            if ei > top.0 {
                top = (ei, i);
            }
        }
        Ok(candidates[top.1].clone())
    }

    pub fn observe(&mut self, x: Vec<f64>, value: f64) {
        self.history.push(Observation { x, value });
    }

    /// Finite observations, transformed for the GP.
    fn fit_data(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        self.history
            .iter()
            .filter(|o| o.value.is_finite() && (!self.config.log_objective || o.value > 0.0))
            .map(|o| (o.x.clone(), if self.config.log_objective { o.value.ln() } else { o.value }))
            .unzip()
    }

    /// Index of the smallest observed value.
    pub fn best(&self) -> Option<usize> {
        (0..self.history.len())
            .filter(|&i| !self.history[i].value.is_nan())
            .min_by(|&a, &b| self.history[a].value.total_cmp(&self.history[b].value))
    }
}

/// Runs `budget` iterations on `f` and returns the state.
pub fn minimize(f: impl FnMut(&[f64]) -> f64, dim: usize, budget: usize, seed: u64, config: BoConfig) -> BoState {
    let mut f = f;
    let mut st = BoState::new(dim, budget, seed, config);
    while let Ok(x) = st.suggest_next() {
        let v = f(&x);
        st.observe(x, v);
    }
    st
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_posterior() {
        let p = gp_fit(&[vec![0.2]], &[3.0], 0.05, 1e-6).unwrap();
        let (mu, sd) = p.predict(&[0.2]);
        assert!((mu - 3.0).abs() < 1e-4 && sd < 1e-2);
        let (mu, sd) = p.predict(&[0.49]);
        assert!((mu - 3.0).abs() < 1e-9 && (sd - 1.0).abs() < 1e-6);
    }

    #[test]
    fn duplicates_and_interpolation() {
        let xs = vec![vec![0.1], vec![0.1], vec![0.3]];
        let p = gp_fit(&xs, &[1.0, 1.0, 2.0], 0.05, 1e-6).unwrap();
        for (x, y) in xs.iter().zip([1.0, 1.0, 2.0]) {
            assert!((p.predict(x).0 - y).abs() < 1e-4 * 2.0);
        }
    }

    #[test]
    fn smooth_function_is_tracked() {
        let f = |x: f64| (6.0 * x).sin();
        let xs: Vec<Vec<f64>> = [0.0, 0.1, 0.2, 0.3, 0.4].iter().map(|&x| vec![x]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| f(x[0])).collect();
        let p = gp_fit(&xs, &ys, 0.1, 1e-6).unwrap();
        for m in [0.05, 0.15, 0.25, 0.35] {
            let (mu, sd) = p.predict(&[m]);
            assert!((mu - f(m)).abs() <= 3.0 * sd, "{m}: {mu} vs {} (sd {sd})", f(m));
        }
    }

    #[test]
    fn ei_closed_form() {
        assert_eq!(expected_improvement(2.0, 0.0, 1.0), 0.0);
        assert!((expected_improvement(1.0, 1.0, 1.0) - 0.398_942_280_401_432_7).abs() < 1e-12);
        let mut prev = f64::INFINITY;
        for k in 0..50 {
            let ei = expected_improvement(-2.0 + 0.1 * k as f64, 0.7, 0.0);
            assert!(ei <= prev && ei >= 0.0);
            prev = ei;
        }
    }

    #[test]
    fn suggestions_stay_in_the_box_and_budget_is_enforced() {
        let mut st = BoState::new(2, 8, 11, BoConfig::default());
        for k in 0..8 {
            let x = st.suggest_next().unwrap();
            assert!(x.iter().all(|v| (0.0..=0.5).contains(v)));
            st.observe(x, 1.0 + k as f64);
        }
        assert_eq!(st.suggest_next(), Err(BoError::IterationBudgetExceeded(8)));
    }

    #[test]
    fn deterministic_trace() {
        let f = |x: &[f64]| (x[0] - 0.2).powi(2) + 0.01;
        let a = minimize(f, 1, 12, 5, BoConfig::default());
        let b = minimize(f, 1, 12, 5, BoConfig::default());
        assert_eq!(a.history, b.history);
    }
}
