//! Polynomial state-space models `ẋ = f(x, u; θ)`, `y = g(x; θ)`: the text
//! format, canonical printing and jet-space calculus.
//!
//! ```text
//! # SEIR with the infectious compartment measured
//! states: S, E, I, R
//! params: beta, epsilon, gamma
//! dynamics:
//!   d/dt S = -beta*S*I
//!   d/dt E = beta*S*I - epsilon*E
//!   d/dt I = epsilon*E - gamma*I
//!   d/dt R = gamma*I
//! measure:
//!   y1 = I
//! reduce:
//!   R = 1 - S - E - I
//! ```
//!
//! Expressions use `+ - * ^`, parentheses, integer or decimal literals and
//! division by nonzero constants. Decimals are read exactly (`0.26` is
//! `13/50`). `#` starts a comment.

mod calculus;
mod compiled;
mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::algebra::{jet_name, JetPoly, Rational, Var, VarNames};

pub use calculus::{substitute_dynamics, total_derivative, JetExpander};
pub use compiled::{CompiledDynamics, CompiledPoly};
pub use parse::parse_model;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    SyntaxError { line: usize, col: usize, msg: String },
    #[error("undeclared symbol `{name}` at line {line}, column {col}")]
    UndeclaredSymbol { name: String, line: usize, col: usize },
    #[error("non-polynomial term at line {line}, column {col}: {detail}")]
    NonPolynomialTerm { line: usize, col: usize, detail: String },
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("jet order {found} exceeds the substitution budget {limit}")]
    OrderOverflow { found: usize, limit: usize },
}

impl ModelError {
    pub(crate) fn syntax(line: usize, col: usize, msg: impl Into<String>) -> Self {
        ModelError::SyntaxError { line, col, msg: msg.into() }
    }
}

/// A parsed model. Polynomials use `Var::State{order: 0}`,
/// `Var::Input{order: 0}` and `Var::Param` indices into the name lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    pub states: Vec<String>,
    pub params: Vec<String>,
    pub inputs: Vec<String>,
    pub dynamics: Vec<JetPoly>,
    pub measurements: Vec<JetPoly>,
    /// `(state index, expression)`: the state is determined algebraically by
    /// the others.
    pub reductions: Vec<(usize, JetPoly)>,
}

impl ModelSpec {
    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.measurements.len()
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|s| s == name)
    }

    /// States measured directly (`y_m = x_i`).
    pub fn measured_indices(&self) -> BTreeSet<usize> {
        self.measurements
            .iter()
            .filter_map(|g| match g.as_var() {
                Some(Var::State { index, .. }) => Some(index),
                _ => None,
            })
            .collect()
    }

    pub fn reduced_indices(&self) -> BTreeSet<usize> {
        self.reductions.iter().map(|(i, _)| *i).collect()
    }

    /// Replaces the named parameters by exact values and drops them from
    /// the parameter list.
    pub fn substitute_params(&self, values: &BTreeMap<String, Rational>) -> Result<ModelSpec, ModelError> {
        let mut map = BTreeMap::new();
        for (name, v) in values {
            let k = self.param_index(name).ok_or_else(|| ModelError::Invalid(format!("unknown parameter `{name}`")))?;
            map.insert(Var::Param(k), JetPoly::constant(v.clone()));
        }
        let kept: Vec<usize> = (0..self.params.len()).filter(|k| !values.contains_key(&self.params[*k])).collect();
        let rename = |v: Var| match v {
            Var::Param(k) => Var::Param(kept.iter().position(|&j| j == k).expect("kept parameter")),
            other => other,
        };
        let apply = |p: &JetPoly| p.substitute_all(&map).map_vars(rename);
        Ok(ModelSpec {
            states: self.states.clone(),
            params: kept.iter().map(|&k| self.params[k].clone()).collect(),
            inputs: self.inputs.clone(),
            dynamics: self.dynamics.iter().map(apply).collect(),
            measurements: self.measurements.iter().map(apply).collect(),
            reductions: self.reductions.iter().map(|(i, r)| (*i, apply(r))).collect(),
        })
    }

    /// Eliminates every reduced state by its rule and removes it.
    pub fn apply_reductions(&self) -> Result<ModelSpec, ModelError> {
        let map: BTreeMap<Var, JetPoly> =
            self.reductions.iter().map(|(i, r)| (Var::state(*i, 0), r.clone())).collect();
        let mut m = self.clone();
        m.dynamics = m.dynamics.iter().map(|f| f.substitute_all(&map)).collect();
        m.measurements = m.measurements.iter().map(|g| g.substitute_all(&map)).collect();
        let drop = self.reduced_indices();
        m.reductions.clear();
        m.remove_states(&drop)
    }

    /// Keeps only the listed outputs, renumbered in the given order.
    pub fn select_outputs(&self, outputs: &[usize]) -> ModelSpec {
        let mut m = self.clone();
        m.measurements = outputs.iter().map(|&k| self.measurements[k].clone()).collect();
        m
    }

    /// Removes states that no remaining equation or measurement refers to.
    pub fn remove_states(&self, drop: &BTreeSet<usize>) -> Result<ModelSpec, ModelError> {
        let kept: Vec<usize> = (0..self.n_states()).filter(|i| !drop.contains(i)).collect();
        let still_used = |p: &JetPoly| {
            p.vars().into_iter().any(|v| matches!(v, Var::State { index, .. } if drop.contains(&index)))
        };
        let kept_dynamics: Vec<&JetPoly> = kept.iter().map(|&i| &self.dynamics[i]).collect();
        if kept_dynamics.iter().any(|f| still_used(f))
            || self.measurements.iter().any(still_used)
            || self.reductions.iter().any(|(i, r)| !drop.contains(i) && still_used(r))
        {
            return Err(ModelError::Invalid("removed state is still referenced".into()));
        }
        let rename = |v: Var| match v {
            Var::State { index, order } => Var::State { index: kept.iter().position(|&j| j == index).unwrap(), order },
            other => other,
        };
        Ok(ModelSpec {
            states: kept.iter().map(|&i| self.states[i].clone()).collect(),
            params: self.params.clone(),
            inputs: self.inputs.clone(),
            dynamics: kept_dynamics.into_iter().map(|f| f.map_vars(rename)).collect(),
            measurements: self.measurements.iter().map(|g| g.map_vars(rename)).collect(),
            reductions: self
                .reductions
                .iter()
                .filter(|(i, _)| !drop.contains(i))
                .map(|(i, r)| (kept.iter().position(|j| j == i).unwrap(), r.map_vars(rename)))
                .collect(),
        })
    }

    /// States that can influence the measurements through the dynamics.
    pub fn influencing_states(&self) -> BTreeSet<usize> {
        let states_in = |p: &JetPoly| -> Vec<usize> {
            p.vars().into_iter().filter_map(|v| if let Var::State { index, .. } = v { Some(index) } else { None }).collect()
        };
        let mut set: BTreeSet<usize> = self.measurements.iter().flat_map(states_in).collect();
        loop {
            let extra: Vec<usize> = set.iter().flat_map(|&i| states_in(&self.dynamics[i])).collect();
            let before = set.len();
            set.extend(extra);
            if set.len() == before {
                return set;
            }
        }
    }

    /// Evaluates `f(x, u; θ)`.
    pub fn eval_dynamics(&self, x: &[f64], u: &[f64], theta: &[f64], out: &mut [f64]) {
        for (o, f) in out.iter_mut().zip(&self.dynamics) {
            *o = f.evaluate(|v| lookup(v, x, u, theta));
        }
    }

    /// Evaluates `g(x; θ)`.
    pub fn eval_measurements(&self, x: &[f64], theta: &[f64]) -> Vec<f64> {
        self.measurements.iter().map(|g| g.evaluate(|v| lookup(v, x, &[], theta))).collect()
    }

    pub fn display_poly<'a>(&'a self, p: &'a JetPoly) -> impl fmt::Display + 'a {
        p.display(self)
    }
}

fn lookup(v: Var, x: &[f64], u: &[f64], theta: &[f64]) -> f64 {
    match v {
        Var::Param(k) => theta[k],
        Var::State { index, order: 0 } => x[index],
        Var::Input { index, order: 0 } => u[index],
        other => panic!("cannot evaluate jet {other:?} pointwise"),
    }
}

impl VarNames for ModelSpec {
    fn var_name(&self, v: Var) -> String {
        match v {
            Var::Param(k) => self.params[k].clone(),
            Var::State { index, order } => jet_name(&self.states[index], order),
            Var::Output { index, order } => jet_name(&format!("y{}", index + 1), order),
            Var::Input { index, order } => jet_name(&self.inputs[index], order),
        }
    }
}

/// Canonical text form; parsing it yields an equal model.
impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "states: {}", self.states.join(", "))?;
        if !self.params.is_empty() {
            writeln!(f, "params: {}", self.params.join(", "))?;
        }
        if !self.inputs.is_empty() {
            writeln!(f, "inputs: {}", self.inputs.join(", "))?;
        }
        writeln!(f, "dynamics:")?;
        for (name, rhs) in self.states.iter().zip(&self.dynamics) {
            writeln!(f, "  d/dt {name} = {}", rhs.display(self))?;
        }
        writeln!(f, "measure:")?;
        for (k, g) in self.measurements.iter().enumerate() {
            writeln!(f, "  y{} = {}", k + 1, g.display(self))?;
        }
        if !self.reductions.is_empty() {
            writeln!(f, "reduce:")?;
            for (i, r) in &self.reductions {
                writeln!(f, "  {} = {}", self.states[*i], r.display(self))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rational::ratio;

    const SEIR: &str = "states: S, E, I, R
params: beta, epsilon, gamma
dynamics:
  d/dt S = -beta*S*I
  d/dt E = beta*S*I - epsilon*E
  d/dt I = epsilon*E - gamma*I
  d/dt R = gamma*I
measure:
  y1 = I
reduce:
  R = 1 - (S + E + I)
";

    #[test]
    fn parses_seir() {
        let m = parse_model(SEIR).unwrap();
        assert_eq!(m.n_states(), 4);
        assert_eq!(m.params.len(), 3);
        assert_eq!(m.measured_indices(), BTreeSet::from([2]));
        let a = m.apply_reductions().unwrap();
        assert_eq!(a.n_states(), 3);
        assert_eq!(a.measured_indices(), BTreeSet::from([2]));
    }

    #[test]
    fn canonical_print_round_trips() {
        let m = parse_model(SEIR).unwrap();
        let text = m.to_string();
        assert_eq!(parse_model(&text).unwrap(), m, "{text}");
        let fixed = m.substitute_params(&BTreeMap::from([("beta".to_string(), ratio(13, 50))])).unwrap();
        assert!(fixed.to_string().contains("-0.26*S*I"), "{fixed}");
        assert_eq!(parse_model(&fixed.to_string()).unwrap(), fixed);
    }

    #[test]
    fn reports_errors_with_positions() {
        let empty = "states: S\nparams: a\ndynamics:\nmeasure:\n  y1 = S\n";
        assert!(matches!(parse_model(empty), Err(ModelError::SyntaxError { .. })));
        let division = "states: S\ndynamics:\n  d/dt S = 1/S\nmeasure:\n  y1 = S\n";
        assert!(matches!(parse_model(division), Err(ModelError::NonPolynomialTerm { line: 3, .. })));
        let undeclared = "states: S\ndynamics:\n  d/dt S = -k*S\nmeasure:\n  y1 = S\n";
        match parse_model(undeclared) {
            Err(ModelError::UndeclaredSymbol { name, line, col }) => {
                assert_eq!((name.as_str(), line, col), ("k", 3, 13));
            }
            other => panic!("{other:?}"),
        }
        let bad = "states: S\ndynamics:\n  d/dt S = S +* 2\nmeasure:\n  y1 = S\n";
        assert!(matches!(parse_model(bad), Err(ModelError::SyntaxError { line: 3, .. })));
    }

    #[test]
    fn constant_division_is_exact() {
        let m = parse_model("states: S\ndynamics:\n  d/dt S = S/4 - 0.5*S^2\nmeasure:\n  y1 = S\n").unwrap();
        let s = JetPoly::var(Var::state(0, 0));
        assert_eq!(m.dynamics[0], &s.scale(&ratio(1, 4)) - &s.pow(2).scale(&ratio(1, 2)));
    }

    #[test]
    fn influence_closure_finds_decoupled_states() {
        let m = parse_model(
            "states: S, I, R\nparams: b, g\ndynamics:\n  d/dt S = -b*S*I\n  d/dt I = b*S*I - g*I\n  d/dt R = g*I\nmeasure:\n  y1 = I\n",
        )
        .unwrap();
        assert_eq!(m.influencing_states(), BTreeSet::from([0, 1]));
    }
}
