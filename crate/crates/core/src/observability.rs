//! Algebraic observability of unmeasured states by Gröbner elimination and
//! the reconstruction formulas derived from the certificates.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::algebra::{
    buchberger, AlgebraError, BlockOrder, Budget, JetPoly, MonomialOrder, Poly, PolyRing, Var, VarNames,
};
use crate::model::{total_derivative, ModelSpec};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ObservabilityError {
    #[error("observability analysis needs exactly one output, found {0}")]
    UnsupportedMultiOutput(usize),
    #[error("state `{0}` is measured; nothing to analyze")]
    MeasuredState(String),
    #[error("no unmeasured state to analyze")]
    NoUnmeasuredState,
    #[error("certificate has degree {0} in the target state; only linear certificates are solved")]
    DegreeTooHigh(usize),
    #[error("reconstruction denominator {value:e} is below the threshold {threshold:e}")]
    DenominatorNearZero { value: f64, threshold: f64 },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Options for [`analyze`].
#[derive(Debug, Clone, Copy)]
pub struct AnalysisOptions {
    pub budget: Budget,
    /// Order inside the block of eliminated jets.
    pub eliminated_block: BlockOrder,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { budget: Budget::default(), eliminated_block: BlockOrder::Lex }
    }
}

/// Prolonged system with the elimination order for one target state.
#[derive(Debug, Clone)]
pub struct ObservabilityIdeal {
    pub ring: Arc<PolyRing>,
    pub generators: Vec<Poly>,
    pub target: usize,
}

/// Builds `{Dʲ(ẋ − f)}_{j ≤ N−2} ∪ {Dʲ(y − g)}_{j ≤ N−1}` over the ring
/// `(eliminated jets) > (target) > (output and input jets)`.
pub fn build_ideal(m: &ModelSpec, target: usize, block: BlockOrder) -> Result<ObservabilityIdeal, ObservabilityError> {
    if m.n_outputs() != 1 {
        return Err(ObservabilityError::UnsupportedMultiOutput(m.n_outputs()));
    }
    if m.measured_indices().contains(&target) {
        return Err(ObservabilityError::MeasuredState(m.states[target].clone()));
    }
    let n = m.n_states();
    let mut eliminated: Vec<Var> = (0..n).filter(|&i| i != target).map(|i| Var::state(i, 0)).collect();
    for order in 1..n {
        eliminated.extend((0..n).map(|i| Var::state(i, order)));
    }
    let mut low: Vec<Var> = (0..n).map(|j| Var::output(0, j)).collect();
    for l in 0..m.inputs.len() {
        low.extend((0..n.saturating_sub(1)).map(|j| Var::input(l, j)));
    }
    let order = MonomialOrder::blocks(vec![(eliminated.len(), block), (1, BlockOrder::Lex), (low.len(), BlockOrder::Lex)]);
    let vars: Vec<(Var, String)> = eliminated
        .into_iter()
        .chain([Var::state(target, 0)])
        .chain(low)
        .map(|v| (v, m.var_name(v)))
        .collect();
    let ring = PolyRing::new(m.params.clone(), vars, order);

    let mut gens = Vec::new();
    for (i, f) in m.dynamics.iter().enumerate() {
        let mut p = JetPoly::var(Var::state(i, 1)) - f;
        for j in 0..n.saturating_sub(1) {
            if j > 0 {
                p = total_derivative(&p);
            }
            gens.push(p.clone());
        }
    }
    let mut p = JetPoly::var(Var::output(0, 0)) - &m.measurements[0];
    for j in 0..n {
        if j > 0 {
            p = total_derivative(&p);
        }
        gens.push(p.clone());
    }
    let generators = gens
        .iter()
        .map(|g| ring.from_jet(g).expect("generators live in the ring"))
        .collect();
    Ok(ObservabilityIdeal { ring, generators, target })
}

/// Witness `H = Σ h_j x_iʲ` of observability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    #[serde(skip)]
    pub polynomial: JetPoly,
    /// `h_0 … h_k`.
    #[serde(skip)]
    pub coefficients: Vec<JetPoly>,
    pub degree: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Observability {
    Observable { certificate: Certificate },
    Unobservable { reason: String },
}

impl Observability {
    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            Observability::Observable { certificate } => Some(certificate),
            Observability::Unobservable { .. } => None,
        }
    }
}

/// Decides observability of state `target` of a single-output model.
pub fn analyze(m: &ModelSpec, target: usize, opts: &AnalysisOptions) -> Result<Observability, ObservabilityError> {
    if m.n_outputs() != 1 {
        return Err(ObservabilityError::UnsupportedMultiOutput(m.n_outputs()));
    }
    if m.measured_indices().contains(&target) {
        return Err(ObservabilityError::MeasuredState(m.states[target].clone()));
    }
    let influencing = m.influencing_states();
    if !influencing.contains(&target) {
        return Ok(Observability::Unobservable {
            reason: "the state never influences the measured output".into(),
        });
    }
    let drop: BTreeSet<usize> = (0..m.n_states()).filter(|i| !influencing.contains(i)).collect();
    let core = m.remove_states(&drop).expect("non-influencing states are unreferenced by the rest");
    let t = core.state_index(&m.states[target]).unwrap();
    let ideal = build_ideal(&core, t, opts.eliminated_block)?;
    let gb = buchberger(&ideal.generators, opts.budget)?;
    let ring = &ideal.ring;
    let target_slot = ring.var_index(Var::state(t, 0)).unwrap();

    let mut best: Option<(u16, usize, String, Poly, Poly)> = None;
    for g in gb.polys() {
        let support = g.support();
        if support.iter().any(|&k| k < target_slot) || g.degree_in(target_slot) == 0 {
            continue;
        }
        let parts = g.coefficients_in(target_slot);
        let lead = parts.last().unwrap().clone();
        if gb.is_member(&lead)? {
            continue;
        }
        let deg = g.degree_in(target_slot);
        let max_order = support
            .iter()
            .filter_map(|&k| match ring.vars[k] {
                Var::Output { order, .. } => Some(order),
                _ => None,
            })
            .max()
            .unwrap_or(0);
        let text = g.to_jet().display(&core).to_string();
        let key = (deg, max_order, text.clone());
        if best.as_ref().is_none_or(|b| key < (b.0, b.1, b.2.clone())) {
            best = Some((deg, max_order, text, g.clone(), lead));
        }
    }
    let Some((deg, _, _, g, _)) = best else {
        return Ok(Observability::Unobservable {
            reason: "no basis element with a non-vanishing leading coefficient in the state".into(),
        });
    };
    // back to the caller's state numbering
    let back = |v: Var| match v {
        Var::State { index, order } => Var::State { index: m.state_index(&core.states[index]).unwrap(), order },
        other => other,
    };
    let polynomial = g.to_jet().map_vars(back);
    let coefficients = polynomial.coefficients_in(Var::state(target, 0));
    let text = polynomial.display(m).to_string();
    Ok(Observability::Observable {
        certificate: Certificate { polynomial, coefficients, degree: deg as usize, text },
    })
}

/// Per-state outcome of [`analyze_all`].
#[derive(Debug, Clone, Serialize)]
pub struct StateReport {
    pub name: String,
    pub index: usize,
    #[serde(flatten)]
    pub status: Observability,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reconstruction: Option<ReconstructionExpr>,
}

/// Observability of every unmeasured state.
#[derive(Debug, Clone, Serialize)]
pub struct ObservabilityResult {
    pub model: String,
    pub params: Vec<String>,
    pub observable: Vec<String>,
    pub states: Vec<StateReport>,
    pub note: String,
}

impl ObservabilityResult {
    pub fn observable_indices(&self) -> Vec<usize> {
        self.states.iter().filter(|s| s.status.certificate().is_some()).map(|s| s.index).collect()
    }

    pub fn state(&self, name: &str) -> Option<&StateReport> {
        self.states.iter().find(|s| s.name == name)
    }

    pub fn reconstructions(&self) -> impl Iterator<Item = (&StateReport, &ReconstructionExpr)> {
        self.states.iter().filter_map(|s| s.reconstruction.as_ref().map(|r| (s, r)))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "observable: {{{}}}", self.observable.join(", "));
        for s in &self.states {
            match &s.status {
                Observability::Observable { certificate } => {
                    let _ = writeln!(out, "{} (x{}): observable", s.name, s.index + 1);
                    let _ = writeln!(out, "  H = {}", certificate.text);
                    if let Some(r) = &s.reconstruction {
                        let _ = writeln!(out, "  solution = ({}) / ({})", r.numerator_text, r.denominator_text);
                        let _ = writeln!(out, "  output order p = {}, input order q = {}", r.output_order, r.input_order);
                    }
                }
                Observability::Unobservable { reason } => {
                    let _ = writeln!(out, "{} (x{}): unobservable ({reason})", s.name, s.index + 1);
                }
            }
        }
        let _ = writeln!(out, "note: {}", self.note);
        out
    }
}

const GENERIC_NOTE: &str = "results hold for generic parameter values; values where a leading coefficient vanishes are not detected";

/// Analyzes every unmeasured state of a single-output model. States listed in
/// `skip` (for instance states fixed by a reduction) are left out.
pub fn analyze_all(m: &ModelSpec, opts: &AnalysisOptions) -> Result<ObservabilityResult, ObservabilityError> {
    if m.n_outputs() != 1 {
        return Err(ObservabilityError::UnsupportedMultiOutput(m.n_outputs()));
    }
    let measured = m.measured_indices();
    let targets: Vec<usize> = (0..m.n_states()).filter(|i| !measured.contains(i)).collect();
    if targets.is_empty() {
        return Err(ObservabilityError::NoUnmeasuredState);
    }
    let mut states = Vec::new();
    for i in targets {
        let status = analyze(m, i, opts)?;
        let reconstruction = match status.certificate() {
            Some(c) if c.degree == 1 => Some(reconstruction(m, i, c)?),
            _ => None,
        };
        states.push(StateReport { name: m.states[i].clone(), index: i, status, reconstruction });
    }
    let observable = states.iter().filter(|s| s.status.certificate().is_some()).map(|s| s.name.clone()).collect();
    Ok(ObservabilityResult { model: m.to_string(), params: m.params.clone(), observable, states, note: GENERIC_NOTE.into() })
}

/// `x_i = numerator / denominator` over output jets, input jets and θ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionExpr {
    pub target: usize,
    #[serde(skip)]
    pub numerator: JetPoly,
    #[serde(skip)]
    pub denominator: JetPoly,
    pub numerator_text: String,
    pub denominator_text: String,
    /// Parameter symbols the expression is written in, by `Var::Param` index.
    pub params: Vec<String>,
    pub output_order: usize,
    pub input_order: usize,
}

/// Solves a linear certificate `h₁ xᵢ + h₀ = 0` for `xᵢ`.
pub fn reconstruction(m: &ModelSpec, target: usize, c: &Certificate) -> Result<ReconstructionExpr, ObservabilityError> {
    if c.degree != 1 {
        return Err(ObservabilityError::DegreeTooHigh(c.degree));
    }
    let mut numerator = -&c.coefficients[0];
    let mut denominator = c.coefficients[1].clone();
    if let Some(k) = denominator.as_constant() {
        numerator = numerator.scale(&(crate::algebra::rational::int(1) / k));
        denominator = JetPoly::one();
    }
    let orders = |pick: fn(Var) -> Option<usize>| {
        numerator.vars().into_iter().chain(denominator.vars()).filter_map(pick).max().unwrap_or(0)
    };
    let output_order = orders(|v| if let Var::Output { order, .. } = v { Some(order) } else { None });
    let input_order = orders(|v| if let Var::Input { order, .. } = v { Some(order) } else { None });
    Ok(ReconstructionExpr {
        target,
        numerator_text: numerator.display(m).to_string(),
        denominator_text: denominator.display(m).to_string(),
        numerator,
        denominator,
        params: m.params.clone(),
        output_order,
        input_order,
    })
}

/// Numeric jets at one time point, indexed `[signal][order]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct JetValues {
    pub outputs: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
}

fn jet_value(v: Var, jets: &JetValues, theta: &[f64]) -> f64 {
    match v {
        Var::Param(k) => theta[k],
        Var::Output { index, order } => jets.outputs[index][order],
        Var::Input { index, order } => jets.inputs[index][order],
        Var::State { .. } => panic!("reconstruction expressions contain no state jets"),
    }
}

/// Relative threshold under which a denominator counts as vanishing.
pub const DENOMINATOR_TOLERANCE: f64 = 1e-12;

/// Evaluates a reconstruction at numeric jets and parameters (ordered as
/// `e.params`).
pub fn evaluate_reconstruction(e: &ReconstructionExpr, jets: &JetValues, theta: &[f64]) -> Result<f64, ObservabilityError> {
    let den = e.denominator.evaluate(|v| jet_value(v, jets, theta));
    // scale: largest coefficient of the denominator once θ is fixed
    let scale = e
        .denominator
        .terms()
        .map(|(m, c)| {
            m.factors()
                .iter()
                .filter(|(v, _)| v.is_param())
                .fold(crate::algebra::rational::to_f64(c), |acc, &(v, k)| acc * jet_value(v, jets, theta).powi(k as i32))
                .abs()
        })
        .fold(0.0, f64::max);
    let threshold = DENOMINATOR_TOLERANCE * scale;
    if !(den.abs() > threshold) {
        return Err(ObservabilityError::DenominatorNearZero { value: den, threshold });
    }
    Ok(e.numerator.evaluate(|v| jet_value(v, jets, theta)) / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;

    const SEIR: &str = "states: S, E, I\nparams: beta, epsilon, gamma\ndynamics:\n  d/dt S = -beta*S*I\n  d/dt E = beta*S*I - epsilon*E\n  d/dt I = epsilon*E - gamma*I\nmeasure:\n  y1 = I\n";

    fn v(x: Var) -> JetPoly {
        JetPoly::var(x)
    }

    #[test]
    fn seir_ideal_matches_the_prolonged_system() {
        let m = parse_model(SEIR).unwrap();
        let ideal = build_ideal(&m, 1, BlockOrder::Lex).unwrap();
        assert_eq!(ideal.generators.len(), 3 * 2 + 3);
        assert_eq!(ideal.ring.nvars(), 12);
        let names: Vec<&str> = ideal.ring.var_names.iter().map(String::as_str).collect();
        assert_eq!(names, ["S", "I", "d1S", "d1E", "d1I", "d2S", "d2E", "d2I", "E", "y1", "d1y1", "d2y1"]);
    }

    #[test]
    fn seir_exposed_certificate() {
        let m = parse_model(SEIR).unwrap();
        let obs = analyze(&m, 1, &AnalysisOptions::default()).unwrap();
        let c = obs.certificate().unwrap();
        let (e, g) = (v(Var::Param(1)), v(Var::Param(2)));
        let expected = &e * v(Var::state(1, 0)) - &g * v(Var::output(0, 0)) - v(Var::output(0, 1));
        assert_eq!(c.polynomial, expected, "{}", c.text);
        let r = reconstruction(&m, 1, c).unwrap();
        assert_eq!(r.numerator_text, "gamma*y1 + d1y1");
        assert_eq!(r.denominator_text, "epsilon");
    }

    #[test]
    fn errors_for_measured_and_multi_output() {
        let m = parse_model(SEIR).unwrap();
        assert!(matches!(analyze(&m, 2, &AnalysisOptions::default()), Err(ObservabilityError::MeasuredState(_))));
        let single = parse_model("states: x\nparams: a\ndynamics:\n  d/dt x = a*x\nmeasure:\n  y1 = x\n").unwrap();
        assert!(matches!(analyze_all(&single, &AnalysisOptions::default()), Err(ObservabilityError::NoUnmeasuredState)));
        let two = parse_model("states: x, z\ndynamics:\n  d/dt x = z\n  d/dt z = x\nmeasure:\n  y1 = x\n  y2 = z\n").unwrap();
        assert!(matches!(build_ideal(&two, 0, BlockOrder::Lex), Err(ObservabilityError::UnsupportedMultiOutput(2))));
    }

    #[test]
    fn vanishing_denominator_is_flagged() {
        let m = parse_model(SEIR).unwrap();
        let obs = analyze(&m, 0, &AnalysisOptions::default()).unwrap();
        let r = reconstruction(&m, 0, obs.certificate().unwrap()).unwrap();
        let jets = JetValues { outputs: vec![vec![0.0, 0.1, 0.2]], inputs: vec![] };
        let err = evaluate_reconstruction(&r, &jets, &[0.26, 0.2, 0.1]).unwrap_err();
        assert!(matches!(err, ObservabilityError::DenominatorNearZero { .. }));
    }
}
