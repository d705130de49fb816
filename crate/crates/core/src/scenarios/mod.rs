//! The three epidemic scenarios, their datasets and the analytic oracle for
//! derivatives of the measurements.

pub mod presets;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{rational, JetPoly, Rational, Var};
use crate::model::{parse_model, JetExpander, ModelError, ModelSpec};
use crate::observability::{analyze_all, AnalysisOptions, JetValues, ObservabilityError, ObservabilityResult};
use crate::simulate::{integrate, InputFunction, SimError, Trajectory};

pub use presets::{SAIRD, SEIR, SICRD};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("unknown scenario `{0}` (expected seir, sicrd or saird)")]
    UnknownScenario(String),
    #[error("parameter `{0}` is not part of the scenario")]
    UnknownParameter(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error(transparent)]
    Observability(#[from] ObservabilityError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed dataset: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioId {
    Seir,
    Sicrd,
    Saird,
}

impl ScenarioId {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioId::Seir => "seir",
            ScenarioId::Sicrd => "sicrd",
            ScenarioId::Saird => "saird",
        }
    }
}

impl std::str::FromStr for ScenarioId {
    type Err = ScenarioError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "seir" => Ok(ScenarioId::Seir),
            "sicrd" => Ok(ScenarioId::Sicrd),
            "saird" => Ok(ScenarioId::Saird),
            _ => Err(ScenarioError::UnknownScenario(s.into())),
        }
    }
}

/// A model with its ground truth and the settings of one experiment.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: ScenarioId,
    /// Full model as written in the preset.
    pub model: ModelSpec,
    /// States represented by the network (the full model minus `untracked`).
    pub training: ModelSpec,
    /// Parameter values as exact decimal literals, for every parameter.
    pub values: BTreeMap<String, String>,
    /// Parameters estimated from data; the rest are known.
    pub unknown: Vec<String>,
    /// Known parameters substituted before the observability analysis.
    pub analysis_fixed: Vec<String>,
    /// Initial state of the full model.
    pub x0: Vec<f64>,
    pub input: InputFunction,
    /// Output of the full model used for the single-output analysis.
    pub analysis_output: usize,
    /// Training states whose initial value is left out of the initial loss.
    pub drop_initial: Vec<String>,
    pub horizon: f64,
    pub dt: f64,
}

impl Scenario {
    /// `seir`, `sicrd` or `saird` with the unknown parameters of the paper
    /// experiments (ε; β; β and κ).
    pub fn preset(id: ScenarioId) -> Scenario {
        let vals = |pairs: &[(&str, &str)]| pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        let (text, values, unknown, fixed, x0, input, untracked): (_, BTreeMap<String, String>, _, &[&str], Vec<f64>, _, &[&str]) =
            match id {
                ScenarioId::Seir => (
                    SEIR,
                    vals(&[("beta", "0.26"), ("gamma", "0.1"), ("epsilon", "0.2")]),
                    vec!["epsilon"],
                    &[],
                    vec![0.99, 0.0, 0.01, 0.0],
                    InputFunction::None,
                    &[],
                ),
                ScenarioId::Sicrd => (
                    SICRD,
                    vals(&[("beta", "0.26"), ("p", "0.01"), ("q", "0.01"), ("r", "0.05"), ("mu", "0.05")]),
                    vec!["beta"],
                    &["r", "mu"],
                    vec![0.99, 0.01, 0.0, 0.0, 0.0],
                    InputFunction::None,
                    &["D"],
                ),
                ScenarioId::Saird => (
                    SAIRD,
                    vals(&[("beta", "0.26"), ("xi", "0.1"), ("kappa", "0.1"), ("gamma", "0.05"), ("delta", "0.05")]),
                    vec!["beta", "kappa"],
                    &["gamma", "delta"],
                    vec![0.985, 0.005, 0.01, 0.0, 0.0],
                    InputFunction::ExpDecay { k: 0.01 },
                    &["D"],
                ),
            };
        let model = parse_model(text).expect("preset parses");
        let drop: BTreeSet<usize> = untracked.iter().map(|s| model.state_index(s).unwrap()).collect();
        let mut training = model.remove_states(&drop).expect("untracked states are unreferenced");
        training.reductions.clear();
        Scenario {
            id,
            model,
            training,
            values,
            unknown: unknown.into_iter().map(String::from).collect(),
            analysis_fixed: fixed.iter().map(|s| s.to_string()).collect(),
            x0,
            input,
            analysis_output: 0,
            drop_initial: Vec::new(),
            horizon: 200.0,
            dt: 0.2,
        }
    }

    pub fn from_name(name: &str) -> Result<Scenario, ScenarioError> {
        Ok(Scenario::preset(name.parse()?))
    }

    /// Replaces the set of estimated parameters. In the SAIRD model a known
    /// κ is substituted before the analysis as well.
    pub fn with_unknown(mut self, names: &[&str]) -> Result<Scenario, ScenarioError> {
        for n in names {
            if !self.values.contains_key(*n) {
                return Err(ScenarioError::UnknownParameter(n.to_string()));
            }
        }
        self.unknown = names.iter().map(|s| s.to_string()).collect();
        if self.id == ScenarioId::Saird {
            self.analysis_fixed.retain(|p| p != "kappa");
            if !self.unknown.iter().any(|p| p == "kappa") {
                self.analysis_fixed.push("kappa".into());
            }
        }
        Ok(self)
    }

    /// Leaves the initial value of the named states out of the initial loss.
    pub fn without_initial(mut self, states: &[&str]) -> Result<Scenario, ScenarioError> {
        for s in states {
            if self.training.state_index(s).is_none() {
                return Err(ScenarioError::Format(format!("no tracked state `{s}`")));
            }
        }
        self.drop_initial = states.iter().map(|s| s.to_string()).collect();
        Ok(self)
    }

    pub fn value(&self, name: &str) -> f64 {
        self.values[name].parse().expect("decimal literal")
    }

    /// True values of all parameters in `model.params` order.
    pub fn true_theta(&self) -> Vec<f64> {
        self.model.params.iter().map(|p| self.value(p)).collect()
    }

    pub fn true_unknown(&self) -> Vec<f64> {
        self.unknown.iter().map(|p| self.value(p)).collect()
    }

    /// All parameters (model order) with the unknown ones set to `unknown`.
    pub fn theta_with(&self, unknown: &[f64]) -> Vec<f64> {
        self.model
            .params
            .iter()
            .map(|p| match self.unknown.iter().position(|u| u == p) {
                Some(k) => unknown[k],
                None => self.value(p),
            })
            .collect()
    }

    /// Indices into `training.states` of the states in the initial loss.
    pub fn initial_indices(&self) -> Vec<usize> {
        (0..self.training.n_states()).filter(|&i| !self.drop_initial.contains(&self.training.states[i])).collect()
    }

    /// Full-model state index of each training state.
    pub fn training_map(&self) -> Vec<usize> {
        self.training.states.iter().map(|s| self.model.state_index(s).unwrap()).collect()
    }

    /// The reduced single-output system handed to the Gröbner analysis.
    pub fn analysis_model(&self) -> Result<ModelSpec, ScenarioError> {
        let fixed: BTreeMap<String, Rational> = self
            .analysis_fixed
            .iter()
            .map(|p| (p.clone(), rational::parse_decimal(&self.values[p]).expect("decimal literal")))
            .collect();
        let m = self.model.substitute_params(&fixed)?.apply_reductions()?;
        Ok(m.select_outputs(&[self.analysis_output]))
    }

    pub fn analyze(&self, opts: &AnalysisOptions) -> Result<ObservabilityResult, ScenarioError> {
        Ok(analyze_all(&self.analysis_model()?, opts)?)
    }

    /// Noise-free solution of the full model at the true parameters.
    pub fn simulate(&self) -> Result<Trajectory, ScenarioError> {
        Ok(integrate(&self.model, &self.true_theta(), &self.x0, &self.input, self.horizon, self.dt)?)
    }

    /// Highest output and input jet orders the oracle provides.
    pub fn jet_orders(&self) -> (usize, usize) {
        let n = self.analysis_model().map(|m| m.n_states()).unwrap_or(1);
        (n.saturating_sub(1).max(1), n.saturating_sub(2))
    }
}

/// How a dataset is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataConfig {
    pub sigma: f64,
    pub seed: u64,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    /// Noise on `[−σ/2, σ/2]` instead of `[0, σ]`.
    pub symmetric_noise: bool,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig { sigma: 0.0, seed: 0, n_train: 50, n_val: 50, n_test: 100, symmetric_noise: false }
    }
}

/// One split, per time point.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub times: Vec<f64>,
    /// All measurements of the full model.
    pub outputs: Vec<Vec<f64>>,
    /// `ỹ, ỹ', …` of the analysis output.
    pub output_jets: Vec<Vec<f64>>,
    /// `u, u', …`; empty without input.
    pub input_jets: Vec<Vec<f64>>,
    /// Clean and noisy values of the training states.
    pub truth: Vec<Vec<f64>>,
    pub noisy: Vec<Vec<f64>>,
}

impl Split {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn jets(&self, d: usize) -> JetValues {
        JetValues {
            outputs: vec![self.output_jets[d].clone()],
            inputs: if self.input_jets.is_empty() { vec![] } else { vec![self.input_jets[d].clone()] },
        }
    }

    pub fn inputs_at(&self, d: usize) -> Vec<f64> {
        self.input_jets.get(d).map(|j| vec![j[0]]).unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub scenario: ScenarioId,
    pub config: DataConfig,
    pub state_names: Vec<String>,
    pub n_outputs: usize,
    pub output_order: usize,
    pub input_order: usize,
    /// Initial state of the training states.
    pub x0: Vec<f64>,
    pub train: Split,
    pub val: Split,
    pub test: Split,
}

/// Draws train/test points from the solver grid and validation points
/// uniformly on `[0, T]`, perturbs every state with uniform noise and
/// measures the perturbed states. Jets are filled by [`derivative_oracle`].
pub fn make_dataset(s: &Scenario, cfg: &DataConfig) -> Result<Dataset, ScenarioError> {
    let traj = s.simulate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let grid = traj.times.len();
    if cfg.n_train + cfg.n_test > grid {
        return Err(ScenarioError::Format("more grid points requested than the solver produced".into()));
    }
    let picks = sample(&mut rng, grid, cfg.n_train + cfg.n_test).into_vec();
    let mut train_idx = picks[..cfg.n_train].to_vec();
    let mut test_idx = picks[cfg.n_train..].to_vec();
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    let mut val_t: Vec<f64> = (0..cfg.n_val).map(|_| rng.gen_range(0.0..=s.horizon)).collect();
    val_t.sort_by(f64::total_cmp);

    let theta = s.true_theta();
    let map = s.training_map();
    let make = |times: Vec<f64>, states: Vec<Vec<f64>>, rng: &mut ChaCha8Rng| {
        let mut split = Split { times, ..Default::default() };
        for x in states {
            let noisy: Vec<f64> = x
                .iter()
                .map(|v| {
                    let e = if cfg.sigma > 0.0 { rng.gen_range(0.0..cfg.sigma) } else { 0.0 };
                    v + if cfg.symmetric_noise { e - cfg.sigma / 2.0 } else { e }
                })
                .collect();
            split.outputs.push(s.model.eval_measurements(&noisy, &theta));
            split.truth.push(map.iter().map(|&i| x[i]).collect());
            split.noisy.push(noisy);
        }
        split
    };
    let at = |idx: &[usize]| (idx.iter().map(|&i| traj.times[i]).collect(), idx.iter().map(|&i| traj.states[i].clone()).collect());
    let (tt, tx) = at(&train_idx);
    let train = make(tt, tx, &mut rng);
    let vx = val_t.iter().map(|&t| traj.sample(t)).collect::<Result<Vec<_>, _>>()?;
    let val = make(val_t, vx, &mut rng);
    let (st, sx) = at(&test_idx);
    let test = make(st, sx, &mut rng);

    let (p, q) = s.jet_orders();
    let mut d = Dataset {
        scenario: s.id,
        config: *cfg,
        state_names: s.training.states.clone(),
        n_outputs: s.model.n_outputs(),
        output_order: p,
        input_order: q,
        x0: map.iter().map(|&i| s.x0[i]).collect(),
        train,
        val,
        test,
    };
    derivative_oracle(s, &mut d)?;
    // keep only the training states in the stored noisy values
    for split in [&mut d.train, &mut d.val, &mut d.test] {
        split.noisy = split.noisy.iter().map(|x| map.iter().map(|&i| x[i]).collect()).collect();
    }
    Ok(d)
}

/// Fills `ỹ^(k)`, `k ≤ output_order`, by evaluating the dynamics-expanded
/// `Dᵏ g` at the (noisy) full states with the true parameters, and the input
/// jets from the exact input function.
pub fn derivative_oracle(s: &Scenario, d: &mut Dataset) -> Result<(), ScenarioError> {
    let mut ex = JetExpander::new(&s.model);
    let polys: Vec<JetPoly> = (0..=d.output_order).map(|k| ex.output(s.analysis_output, k)).collect();
    let theta = s.true_theta();
    let n_inputs = s.model.inputs.len();
    for split in [&mut d.train, &mut d.val, &mut d.test] {
        if split.noisy.first().is_some_and(|x| x.len() != s.model.n_states()) {
            return Err(ScenarioError::Format("the oracle needs noisy values of every model state".into()));
        }
        split.input_jets = if n_inputs == 0 {
            Vec::new()
        } else {
            split.times.iter().map(|&t| (0..=d.input_order.max(1)).map(|j| s.input.derivative(t, j)).collect()).collect()
        };
        split.output_jets = (0..split.len())
            .map(|i| {
                let (x, t) = (&split.noisy[i], split.times[i]);
                polys
                    .iter()
                    .map(|p| {
                        p.evaluate(|v| match v {
                            Var::Param(k) => theta[k],
                            Var::State { index, order: 0 } => x[index],
                            Var::Input { order, .. } => s.input.derivative(t, order),
                            other => panic!("unexpanded jet {other:?}"),
                        })
                    })
                    .collect()
            })
            .collect();
        // the zeroth jet is the measurement itself
        for (j, o) in split.output_jets.iter_mut().zip(&split.outputs) {
            j[0] = o[s.analysis_output];
        }
    }
    Ok(())
}

impl Dataset {
    fn header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        h.extend((1..=self.n_outputs).map(|m| format!("y{m}")));
        h.extend((1..=self.output_order).map(|k| format!("d{k}y1")));
        if let Some(j) = self.train.input_jets.first() {
            h.extend((0..j.len()).map(|k| if k == 0 { "u".to_string() } else { format!("d{k}u") }));
        }
        h.extend(self.state_names.iter().map(|s| format!("truth_{s}")));
        h.extend(self.state_names.iter().map(|s| format!("noisy_{s}")));
        h
    }

    /// Writes `manifest.json` and `train.csv`, `val.csv`, `test.csv`.
    pub fn save(&self, dir: &Path) -> Result<(), ScenarioError> {
        std::fs::create_dir_all(dir)?;
        let manifest = Manifest {
            scenario: self.scenario,
            sigma: self.config.sigma,
            seed: self.config.seed,
            symmetric_noise: self.config.symmetric_noise,
            sizes: [self.train.len(), self.val.len(), self.test.len()],
            state_names: self.state_names.clone(),
            n_outputs: self.n_outputs,
            output_order: self.output_order,
            input_order: self.input_order,
            x0: self.x0.clone(),
        };
        std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest).unwrap())?;
        let header = self.header().join(",");
        for (name, split) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join(format!("{name}.csv")))?);
            writeln!(w, "{header}")?;
            for d in 0..split.len() {
                let mut row = format!("{:?}", split.times[d]);
                let cells = split.outputs[d]
                    .iter()
                    .chain(&split.output_jets[d][1..])
                    .chain(split.input_jets.get(d).into_iter().flatten())
                    .chain(&split.truth[d])
                    .chain(&split.noisy[d]);
                for v in cells {
                    let _ = write!(row, ",{v:?}");
                }
                writeln!(w, "{row}")?;
            }
        }
        Ok(())
    }

    /// Reads a directory written by [`Dataset::save`].
    pub fn load(dir: &Path) -> Result<Dataset, ScenarioError> {
        let text = std::fs::read_to_string(dir.join("manifest.json"))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| ScenarioError::Format(e.to_string()))?;
        let mut d = Dataset {
            scenario: m.scenario,
            config: DataConfig {
                sigma: m.sigma,
                seed: m.seed,
                n_train: m.sizes[0],
                n_val: m.sizes[1],
                n_test: m.sizes[2],
                symmetric_noise: m.symmetric_noise,
            },
            state_names: m.state_names,
            n_outputs: m.n_outputs,
            output_order: m.output_order,
            input_order: m.input_order,
            x0: m.x0,
            train: Split::default(),
            val: Split::default(),
            test: Split::default(),
        };
        let n = d.state_names.len();
        for (k, name) in ["train", "val", "test"].iter().enumerate() {
            let file = std::fs::File::open(dir.join(format!("{name}.csv")))?;
            let mut lines = std::io::BufReader::new(file).lines();
            let header: Vec<String> =
                lines.next().ok_or_else(|| ScenarioError::Format(format!("{name}.csv is empty")))??.split(',').map(String::from).collect();
            let n_inputs = header.iter().filter(|h| *h == "u" || (h.starts_with('d') && h.ends_with('u'))).count();
            let mut split = Split::default();
            for line in lines {
                let line = line?;
                let v: Vec<f64> = line
                    .split(',')
                    .map(|c| c.parse::<f64>().map_err(|e| ScenarioError::Format(format!("{name}.csv: {e}"))))
                    .collect::<Result<_, _>>()?;
                if v.len() != header.len() {
                    return Err(ScenarioError::Format(format!("{name}.csv: row has {} cells, header {}", v.len(), header.len())));
                }
                let mut it = v.into_iter();
                split.times.push(it.next().unwrap());
                let outputs: Vec<f64> = it.by_ref().take(d.n_outputs).collect();
                let mut jets = vec![outputs[0]];
                jets.extend(it.by_ref().take(d.output_order));
                if n_inputs > 0 {
                    split.input_jets.push(it.by_ref().take(n_inputs).collect());
                }
                split.output_jets.push(jets);
                split.outputs.push(outputs);
                split.truth.push(it.by_ref().take(n).collect());
                split.noisy.push(it.by_ref().take(n).collect());
            }
            match k {
                0 => d.train = split,
                1 => d.val = split,
                _ => d.test = split,
            }
        }
        Ok(d)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    scenario: ScenarioId,
    sigma: f64,
    seed: u64,
    symmetric_noise: bool,
    sizes: [usize; 3],
    state_names: Vec<String>,
    n_outputs: usize,
    output_order: usize,
    input_order: usize,
    x0: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_consistent() {
        for id in [ScenarioId::Seir, ScenarioId::Sicrd, ScenarioId::Saird] {
            let s = Scenario::preset(id);
            assert_eq!(s.values.len(), s.model.params.len());
            assert_eq!(s.x0.len(), s.model.n_states());
            assert_eq!(s.training.n_states(), 4);
            let tr = s.simulate().unwrap();
            assert_eq!(tr.times.len(), 1001);
            for x in &tr.states {
                assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn datasets_are_deterministic_and_bounded() {
        let s = Scenario::preset(ScenarioId::Seir);
        let cfg = DataConfig { sigma: 0.05, seed: 3, ..Default::default() };
        let a = make_dataset(&s, &cfg).unwrap();
        assert_eq!(a, make_dataset(&s, &cfg).unwrap());
        let b = make_dataset(&s, &DataConfig { seed: 4, ..cfg }).unwrap();
        assert_ne!(a.train.times, b.train.times);
        assert_eq!((a.train.len(), a.val.len(), a.test.len()), (50, 50, 100));
        for split in [&a.train, &a.val, &a.test] {
            for (c, n) in split.truth.iter().zip(&split.noisy) {
                for (x, y) in c.iter().zip(n) {
                    assert!(*y >= *x && *y - *x <= 0.05);
                }
            }
            for (o, n) in split.outputs.iter().zip(&split.noisy) {
                assert_eq!(o[0], n[2]);
            }
        }
        for t in &a.train.times {
            assert!(((t / 0.2).round() - t / 0.2).abs() < 1e-9);
        }
    }

    #[test]
    fn noise_free_measurements_and_oracle() {
        let s = Scenario::preset(ScenarioId::Seir);
        let d = make_dataset(&s, &DataConfig { seed: 1, ..Default::default() }).unwrap();
        for k in 0..d.train.len() {
            let x = &d.train.truth[k];
            assert_eq!(d.train.outputs[k][0], x[2]);
            let expected = 0.2 * x[1] - 0.1 * x[2];
            assert!((d.train.output_jets[k][1] - expected).abs() < 1e-15);
        }
        let s3 = Scenario::preset(ScenarioId::Saird);
        let d3 = make_dataset(&s3, &DataConfig::default()).unwrap();
        for (t, u) in d3.val.times.iter().zip(&d3.val.input_jets) {
            assert_eq!(u[0], (-0.01 * t).exp());
        }
    }

    #[test]
    fn csv_round_trip() {
        let s = Scenario::preset(ScenarioId::Saird);
        let d = make_dataset(&s, &DataConfig { sigma: 0.01, seed: 9, ..Default::default() }).unwrap();
        let dir = tempfile::tempdir().unwrap();
        d.save(dir.path()).unwrap();
        assert_eq!(Dataset::load(dir.path()).unwrap(), d);
    }
}
