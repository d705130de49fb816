//! Loss functions for partially measured systems and the three estimation
//! procedures: joint training (baseline), and parameter sampling by
//! Bayesian optimization with (proposed) or without (reference) augmented
//! data from the observability reconstructions.

use std::io::Write;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{rational, JetPoly, Var};
use crate::bayesopt::{BoConfig, BoState, Observation};
use crate::neural::{Adam, Idx, Network, Tape};
use crate::observability::{evaluate_reconstruction, ObservabilityError, ObservabilityResult, ReconstructionExpr};
use crate::scenarios::{Dataset, Scenario, ScenarioId, Split};

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("loss became non-finite at epoch {0}")]
    NonFiniteLoss(usize),
    #[error("split `{0}` is empty")]
    EmptySplit(&'static str),
    #[error("mode {0:?} needs an observability analysis")]
    MissingAnalysis(Mode),
    #[error("dataset has {found} tracked states, the scenario {expected}")]
    Mismatch { found: usize, expected: usize },
    #[error(transparent)]
    Observability(#[from] ObservabilityError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Network and parameters trained jointly on the measurements.
    Baseline,
    /// Parameters sampled by BO, network trained on the measurements only.
    Reference,
    /// Parameters sampled by BO, measurements plus augmented states.
    Proposed,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "baseline" => Ok(Mode::Baseline),
            "reference" => Ok(Mode::Reference),
            "proposed" => Ok(Mode::Proposed),
            _ => Err(format!("unknown mode `{s}` (expected baseline, reference or proposed)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub eq: f64,
    pub init: f64,
    pub data: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { eq: 1.0, init: 1.0, data: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// 5000 epochs, 10 BO iterations.
    Desk,
    /// 30000 epochs, 30 BO iterations (50 for SAIRD).
    Full,
}

impl std::str::FromStr for Profile {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "desk" => Ok(Profile::Desk),
            "full" => Ok(Profile::Full),
            _ => Err(format!("unknown profile `{s}` (expected desk or full)")),
        }
    }
}

/// Split whose loss picks the checkpoint (and gives `E_val`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    Val,
    Test,
}

impl std::str::FromStr for Selection {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "val" => Ok(Selection::Val),
            "test" => Ok(Selection::Test),
            _ => Err(format!("unknown split `{s}` (expected val or test)")),
        }
    }
}

impl Selection {
    pub fn split(self, d: &Dataset) -> &Split {
        match self {
            Selection::Val => &d.val,
            Selection::Test => &d.test,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub mode: Mode,
    /// Full-batch Adam steps per training run.
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    pub weights: LossWeights,
    /// Epochs between evaluations of the validation loss.
    pub val_every: usize,
    pub selection: Selection,
    /// Parameter samples drawn by BO.
    pub bo_iterations: usize,
    pub bo: BoConfig,
}

impl TrainConfig {
    pub fn profile(profile: Profile, scenario: ScenarioId, mode: Mode, seed: u64) -> TrainConfig {
        let (epochs, s) = match (profile, scenario) {
            (Profile::Desk, _) => (5000, 10),
            (Profile::Full, ScenarioId::Saird) => (30000, 50),
            (Profile::Full, _) => (30000, 30),
        };
        TrainConfig {
            mode,
            epochs,
            lr: 1e-3,
            seed,
            weights: LossWeights::default(),
            val_every: 10,
            selection: Selection::Val,
            bo_iterations: s,
            bo: BoConfig::default(),
        }
    }
}

/// Individual loss terms; `data` covers the measurements, `aug` the
/// augmented states.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub eq: f64,
    pub init: f64,
    pub data: f64,
    pub aug: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy)]
enum Slot {
    State(usize),
    Input(usize),
    Param(usize),
}

type Terms = Vec<(f64, Vec<(Slot, i32)>)>;

fn compile(p: &JetPoly) -> Terms {
    p.terms()
        .map(|(m, c)| {
            let fs = m
                .factors()
                .iter()
                .map(|&(v, e)| {
                    let s = match v {
                        Var::State { index, order: 0 } => Slot::State(index),
                        Var::Input { index, order: 0 } => Slot::Input(index),
                        Var::Param(k) => Slot::Param(k),
                        other => panic!("loss polynomial contains jet {other:?}"),
                    };
                    (s, e as i32)
                })
                .collect();
            (rational::to_f64(c), fs)
        })
        .collect()
}

/// Pseudo-measurements of observable states at the points of one split;
/// `None` where the reconstruction denominator vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct Augmentation {
    /// Training-state index of each augmented state.
    pub states: Vec<usize>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl Augmentation {
    pub fn dropped(&self) -> usize {
        self.values.iter().flatten().filter(|v| v.is_none()).count()
    }
}

/// Evaluates every linear reconstruction of `analysis` on the jets of
/// `split` with the unknown parameters set to `unknown`.
pub fn augment(s: &Scenario, analysis: &ObservabilityResult, split: &Split, unknown: &[f64]) -> Augmentation {
    let theta = s.theta_with(unknown);
    let by_name = |name: &str| theta[s.model.param_index(name).expect("analysis parameters belong to the model")];
    let mut out = Augmentation { states: Vec::new(), values: Vec::new() };
    for (state, expr) in analysis.reconstructions() {
        let Some(i) = s.training.state_index(&state.name) else { continue };
        let th: Vec<f64> = expr.params.iter().map(|p| by_name(p)).collect();
        out.states.push(i);
        out.values.push((0..split.len()).map(|d| reconstruct(expr, split, d, &th)).collect());
    }
    let dropped = out.dropped();
    if dropped > 0 {
        log::info!("augmentation: {dropped} points skipped for vanishing denominators");
    }
    out
}

fn reconstruct(e: &ReconstructionExpr, split: &Split, d: usize, theta: &[f64]) -> Option<f64> {
    evaluate_reconstruction(e, &split.jets(d), theta).ok().filter(|v| v.is_finite())
}

/// The loss of one scenario, ready to evaluate on any split.
#[derive(Debug, Clone)]
pub struct Objective {
    dynamics: Vec<Terms>,
    measurements: Vec<Terms>,
    x0: Vec<f64>,
    init: Vec<usize>,
    n_states: usize,
    n_params: usize,
    pub weights: LossWeights,
}

/// Gradient of the total loss.
#[derive(Debug, Clone)]
pub struct LossGradient {
    pub network: Vec<f64>,
    pub theta: Vec<f64>,
}

impl Objective {
    pub fn new(s: &Scenario, weights: LossWeights) -> Objective {
        let map = s.training_map();
        Objective {
            dynamics: s.training.dynamics.iter().map(compile).collect(),
            measurements: s.training.measurements.iter().map(compile).collect(),
            x0: map.iter().map(|&i| s.x0[i]).collect(),
            init: s.initial_indices(),
            n_states: s.training.n_states(),
            n_params: s.model.params.len(),
            weights,
        }
    }

    fn poly(tape: &mut Tape, t: &Terms, x: &[Idx], u: &[f64], theta: &[Idx]) -> Idx {
        let mut acc: Option<Idx> = None;
        for (c, fs) in t {
            let mut term = tape.constant(*c);
            for &(s, e) in fs {
                let base = match s {
                    Slot::State(i) => x[i],
                    Slot::Param(k) => theta[k],
                    Slot::Input(l) => tape.constant(u[l]),
                };
                let f = if e == 1 { base } else { tape.powi(base, e) };
                term = tape.mul(term, f);
            }
            acc = Some(match acc {
                None => term,
                Some(a) => tape.add(a, term),
            });
        }
        acc.unwrap_or_else(|| tape.constant(0.0))
    }

    /// Loss of `net` with parameters `theta` (model order) on `split`, plus
    /// its gradient when requested.
    pub fn evaluate(
        &self,
        net: &Network,
        theta: &[f64],
        split: &Split,
        aug: Option<&Augmentation>,
        want_grad: bool,
    ) -> (LossParts, Option<LossGradient>) {
        let n_pts = split.len();
        let mut times = split.times.clone();
        times.push(0.0);
        let batch = net.forward_batch(&times);
        let n = self.n_states;
        let mut tape = Tape::new();
        let th: Vec<Idx> = theta.iter().map(|&v| tape.leaf(v)).collect();
        let xs: Vec<Vec<Idx>> = (0..=n_pts).map(|d| (0..n).map(|i| tape.leaf(batch.x[(i, d)])).collect()).collect();
        let dxs: Vec<Vec<Idx>> = (0..n_pts).map(|d| (0..n).map(|i| tape.leaf(batch.dx[(i, d)])).collect()).collect();

        let mut eq_groups = vec![Vec::with_capacity(n_pts); n];
        let mut data_groups = vec![Vec::with_capacity(n_pts); self.measurements.len()];
        for d in 0..n_pts {
            let u = split.inputs_at(d);
            for (i, f) in self.dynamics.iter().enumerate() {
                let fv = Self::poly(&mut tape, f, &xs[d], &u, &th);
                let r = tape.sub(dxs[d][i], fv);
                eq_groups[i].push(tape.square(r));
            }
            for (m, g) in self.measurements.iter().enumerate() {
                let gv = Self::poly(&mut tape, g, &xs[d], &u, &th);
                let y = tape.constant(split.outputs[d][m]);
                let r = tape.sub(gv, y);
                data_groups[m].push(tape.square(r));
            }
        }
        let means = |tape: &mut Tape, groups: &[Vec<Idx>]| -> Idx {
            let ms: Vec<Idx> = groups.iter().filter(|g| !g.is_empty()).map(|g| tape.mean(g)).collect();
            tape.sum(&ms)
        };
        let l_eq = means(&mut tape, &eq_groups);
        let l_data = means(&mut tape, &data_groups);
        let init_terms: Vec<Idx> = self
            .init
            .iter()
            .map(|&i| {
                let c = tape.constant(self.x0[i]);
                let r = tape.sub(xs[n_pts][i], c);
                tape.square(r)
            })
            .collect();
        let l_init = tape.sum(&init_terms);
        let aug_groups: Vec<Vec<Idx>> = aug
            .map(|a| {
                a.states
                    .iter()
                    .zip(&a.values)
                    .map(|(&i, vals)| {
                        vals.iter()
                            .enumerate()
                            .filter_map(|(d, v)| {
                                let v = (*v)?;
                                let c = tape.constant(v);
                                let r = tape.sub(xs[d][i], c);
                                Some(tape.square(r))
                            })
                            .collect()
                    })
                    .collect()
            })
            .unwrap_or_default();
        let l_aug = means(&mut tape, &aug_groups);

        let w = self.weights;
        let (we, wi, wd) = (tape.constant(w.eq), tape.constant(w.init), tape.constant(w.data));
        let a = tape.mul(we, l_eq);
        let b = tape.mul(wi, l_init);
        let data_all = tape.add(l_data, l_aug);
        let c = tape.mul(wd, data_all);
        let total = tape.sum(&[a, b, c]);
        let parts = LossParts {
            eq: tape.value(l_eq),
            init: tape.value(l_init),
            data: tape.value(l_data),
            aug: tape.value(l_aug),
            total: tape.value(total),
        };
        if !want_grad {
            return (parts, None);
        }
        let adj = tape.gradient(total);
        let at = |i: Idx| adj[i.index()];
        let gx = DMatrix::from_fn(n, n_pts + 1, |i, d| at(xs[d][i]));
        let gdx = DMatrix::from_fn(n, n_pts + 1, |i, d| if d < n_pts { at(dxs[d][i]) } else { 0.0 });
        let mut grad = vec![0.0; net.n_params()];
        net.backward(&batch, &gx, &gdx, &mut grad);
        let theta_grad = th.iter().map(|&i| at(i)).collect();
        debug_assert_eq!(theta.len(), self.n_params);
        (parts, Some(LossGradient { network: grad, theta: theta_grad }))
    }
}

/// One row of the loss trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub epoch: usize,
    pub parts: LossParts,
}

/// Result of one network training run.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub network: Network,
    /// Unknown parameters at the selected checkpoint.
    pub theta: Vec<f64>,
    pub val_loss: f64,
    pub best_epoch: usize,
    pub trace: Vec<TraceRow>,
}

struct FitSpec<'a> {
    scenario: &'a Scenario,
    data: &'a Dataset,
    aug_train: Option<&'a Augmentation>,
    aug_sel: Option<&'a Augmentation>,
    learn_theta: bool,
}

fn fit(spec: &FitSpec, objective: &Objective, mut net: Network, mut unknown: Vec<f64>, cfg: &TrainConfig) -> Result<FitResult, TrainError> {
    let s = spec.scenario;
    let pos: Vec<usize> = s.unknown.iter().map(|p| s.model.param_index(p).unwrap()).collect();
    let n_net = net.n_params();
    let mut adam = Adam::new(n_net + if spec.learn_theta { unknown.len() } else { 0 }, cfg.lr);
    let mut flat = net.params.clone();
    if spec.learn_theta {
        flat.extend(&unknown);
    }
    let mut best: Option<FitResult> = None;
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..=cfg.epochs {
        net.params.copy_from_slice(&flat[..n_net]);
        if spec.learn_theta {
            unknown.copy_from_slice(&flat[n_net..]);
        }
        let theta = s.theta_with(&unknown);
        let last = epoch == cfg.epochs;
        if epoch % cfg.val_every.max(1) == 0 || last {
            let (val, _) = objective.evaluate(&net, &theta, cfg.selection.split(spec.data), spec.aug_sel, false);
            if !val.total.is_finite() {
                return Err(TrainError::NonFiniteLoss(epoch));
            }
            if best.as_ref().is_none_or(|b| val.total < b.val_loss) {
                best = Some(FitResult { network: net.clone(), theta: unknown.clone(), val_loss: val.total, best_epoch: epoch, trace: Vec::new() });
            }
        }
        if last {
            break;
        }
        let (parts, grad) = objective.evaluate(&net, &theta, &spec.data.train, spec.aug_train, true);
        if !parts.total.is_finite() {
            return Err(TrainError::NonFiniteLoss(epoch));
        }
        trace.push(TraceRow { epoch, parts });
        let grad = grad.unwrap();
        let mut g = grad.network;
        if spec.learn_theta {
            g.extend(pos.iter().map(|&k| grad.theta[k]));
        }
        adam.step(&mut flat, &g);
    }
    let mut out = best.expect("at least one validation pass");
    out.trace = trace;
    Ok(out)
}

fn check(s: &Scenario, d: &Dataset) -> Result<(), TrainError> {
    if d.state_names.len() != s.training.n_states() {
        return Err(TrainError::Mismatch { found: d.state_names.len(), expected: s.training.n_states() });
    }
    for (name, split) in [("train", &d.train), ("val", &d.val), ("test", &d.test)] {
        if split.is_empty() {
            return Err(TrainError::EmptySplit(name));
        }
    }
    Ok(())
}

/// Everything a procedure returns.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub mode: Mode,
    pub unknown: Vec<String>,
    pub theta_hat: Vec<f64>,
    pub network: Network,
    /// Loss trace of the selected run.
    pub trace: Vec<TraceRow>,
    pub val_loss: f64,
    pub best_epoch: usize,
    /// `(θ⁽ˢ⁾, E_val⁽ˢ⁾)` in sampling order (empty for the baseline).
    pub bo_history: Vec<Observation>,
    pub s_star: Option<usize>,
}

/// Joint Adam over network weights and the unknown parameters, which start
/// uniformly in the search box.
pub fn train_baseline(s: &Scenario, d: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    check(s, d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let theta0: Vec<f64> = s.unknown.iter().map(|_| rng.gen_range(cfg.bo.lower..=cfg.bo.upper)).collect();
    let objective = Objective::new(s, cfg.weights);
    let net = Network::standard(s.training.n_states(), cfg.seed);
    let spec = FitSpec { scenario: s, data: d, aug_train: None, aug_sel: None, learn_theta: true };
    let r = fit(&spec, &objective, net, theta0, cfg)?;
    Ok(TrainOutcome {
        mode: Mode::Baseline,
        unknown: s.unknown.clone(),
        theta_hat: r.theta,
        network: r.network,
        trace: r.trace,
        val_loss: r.val_loss,
        best_epoch: r.best_epoch,
        bo_history: Vec::new(),
        s_star: None,
    })
}

/// Trains the network with the unknown parameters fixed to `unknown`; with
/// `analysis` the loss includes the augmented states. Returns the run and
/// `E_val`, the same loss on the validation split at the selected
/// checkpoint.
pub fn train_fixed_theta(
    s: &Scenario,
    analysis: Option<&ObservabilityResult>,
    d: &Dataset,
    unknown: &[f64],
    cfg: &TrainConfig,
) -> Result<FitResult, TrainError> {
    check(s, d)?;
    let aug = analysis.map(|a| (augment(s, a, &d.train, unknown), augment(s, a, cfg.selection.split(d), unknown)));
    let objective = Objective::new(s, cfg.weights);
    let net = Network::standard(s.training.n_states(), cfg.seed);
    let spec = FitSpec {
        scenario: s,
        data: d,
        aug_train: aug.as_ref().map(|a| &a.0),
        aug_sel: aug.as_ref().map(|a| &a.1),
        learn_theta: false,
    };
    fit(&spec, &objective, net, unknown.to_vec(), cfg)
}

/// Samples `θ⁽ˢ⁾` by BO, trains a network for each and keeps the one with
/// the smallest validation objective.
pub fn run_algorithm1(s: &Scenario, analysis: Option<&ObservabilityResult>, d: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    check(s, d)?;
    let mut bo = BoState::new(s.unknown.len(), cfg.bo_iterations, cfg.seed, cfg.bo);
    let mut best: Option<(usize, FitResult)> = None;
    while let Ok(theta) = bo.suggest_next() {
        let k = bo.history.len();
        let e_val = match train_fixed_theta(s, analysis, d, &theta, cfg) {
            Ok(r) => {
                let e = r.val_loss;
                if best.as_ref().is_none_or(|(_, b)| e < b.val_loss) {
                    best = Some((k, r));
                }
                e
            }
            Err(TrainError::NonFiniteLoss(epoch)) => {
                log::warn!("candidate {theta:?} diverged at epoch {epoch}; recorded as +inf");
                f64::INFINITY
            }
            Err(e) => return Err(e),
        };
        log::info!("s = {}: theta = {theta:?}, E_val = {e_val:.6e}", k + 1);
        bo.observe(theta, e_val);
    }
    let (s_star, r) = best.ok_or(TrainError::NonFiniteLoss(0))?;
    Ok(TrainOutcome {
        mode: if analysis.is_some() { Mode::Proposed } else { Mode::Reference },
        unknown: s.unknown.clone(),
        theta_hat: bo.history[s_star].x.clone(),
        network: r.network,
        trace: r.trace,
        val_loss: r.val_loss,
        best_epoch: r.best_epoch,
        bo_history: bo.history,
        s_star: Some(s_star),
    })
}

/// Dispatches on `cfg.mode`.
pub fn train(s: &Scenario, analysis: Option<&ObservabilityResult>, d: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    match cfg.mode {
        Mode::Baseline => train_baseline(s, d, cfg),
        Mode::Reference => run_algorithm1(s, None, d, cfg),
        Mode::Proposed => run_algorithm1(s, Some(analysis.ok_or(TrainError::MissingAnalysis(Mode::Proposed))?), d, cfg),
    }
}

pub fn write_losses_csv(trace: &[TraceRow], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "epoch,L_eq,L_init,L_data,L_aug,total")?;
    for r in trace {
        let p = r.parts;
        writeln!(w, "{},{:?},{:?},{:?},{:?},{:?}", r.epoch, p.eq, p.init, p.data, p.aug, p.total)?;
    }
    Ok(())
}

pub fn write_bo_history(names: &[String], history: &[Observation], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "s,{},E_val", names.join(","))?;
    for (k, o) in history.iter().enumerate() {
        let xs: Vec<String> = o.x.iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{},{},{:?}", k + 1, xs.join(","), o.value)?;
    }
    Ok(())
}
