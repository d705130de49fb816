//! Formal total derivative and elimination of higher jets through the
//! dynamics.

use std::collections::BTreeMap;

use crate::algebra::{JetPoly, Var};

use super::{ModelError, ModelSpec};

/// `D(p) = Σ ∂p/∂v · D(v)` over the jet variables of `p`; parameters are
/// constants.
pub fn total_derivative(p: &JetPoly) -> JetPoly {
    let mut out = JetPoly::zero();
    for v in p.vars() {
        if let Some(next) = v.prolong() {
            out = out + p.partial(v) * JetPoly::var(next);
        }
    }
    out
}

/// Expresses state and output jets as polynomials in `(x, u-jets, θ)` by
/// repeatedly replacing `ẋᵢ` with `fᵢ`; expansions are cached.
pub struct JetExpander<'a> {
    model: &'a ModelSpec,
    states: Vec<Vec<JetPoly>>,
    outputs: Vec<Vec<JetPoly>>,
}

impl<'a> JetExpander<'a> {
    pub fn new(model: &'a ModelSpec) -> Self {
        let states = (0..model.n_states()).map(|i| vec![JetPoly::var(Var::state(i, 0))]).collect();
        let outputs = model.measurements.iter().map(|g| vec![g.clone()]).collect();
        JetExpander { model, states, outputs }
    }

    /// Replaces first-order state jets by the dynamics.
    fn substitute_first(&self, p: &JetPoly) -> JetPoly {
        let map: BTreeMap<Var, JetPoly> = p
            .vars()
            .into_iter()
            .filter_map(|v| match v {
                Var::State { index, order: 1 } => Some((v, self.model.dynamics[index].clone())),
                _ => None,
            })
            .collect();
        p.substitute_all(&map)
    }

    /// `x_i^(order)` in terms of `(x, u-jets, θ)`.
    pub fn state(&mut self, index: usize, order: usize) -> JetPoly {
        while self.states[index].len() <= order {
            let last = self.states[index].last().unwrap();
            let next = self.substitute_first(&total_derivative(last));
            self.states[index].push(next);
        }
        self.states[index][order].clone()
    }

    /// `y_m^(order)` in terms of `(x, u-jets, θ)`.
    pub fn output(&mut self, index: usize, order: usize) -> JetPoly {
        while self.outputs[index].len() <= order {
            let last = self.outputs[index].last().unwrap();
            let next = self.substitute_first(&total_derivative(last));
            self.outputs[index].push(next);
        }
        self.outputs[index][order].clone()
    }

    /// Rewrites every state and output jet of `p`.
    pub fn expand(&mut self, p: &JetPoly) -> JetPoly {
        let mut map = BTreeMap::new();
        for v in p.vars() {
            match v {
                Var::State { index, order } if order > 0 => {
                    map.insert(v, self.state(index, order));
                }
                Var::Output { index, order } => {
                    map.insert(v, self.output(index, order));
                }
                _ => {}
            }
        }
        p.substitute_all(&map)
    }
}

/// Eliminates state jets of positive order and output jets from `p`, failing
/// when `p` needs more than `max_order` substitutions.
pub fn substitute_dynamics(p: &JetPoly, model: &ModelSpec, max_order: usize) -> Result<JetPoly, ModelError> {
    let found = p
        .vars()
        .into_iter()
        .filter(|v| matches!(v, Var::State { .. } | Var::Output { .. }))
        .map(Var::order)
        .max()
        .unwrap_or(0);
    if found > max_order {
        return Err(ModelError::OrderOverflow { found, limit: max_order });
    }
    Ok(JetExpander::new(model).expand(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;

    fn seir() -> ModelSpec {
        parse_model(
            "states: S, E, I\nparams: beta, epsilon, gamma\ndynamics:\n  d/dt S = -beta*S*I\n  d/dt E = beta*S*I - epsilon*E\n  d/dt I = epsilon*E - gamma*I\nmeasure:\n  y1 = I\n",
        )
        .unwrap()
    }

    fn var(v: Var) -> JetPoly {
        JetPoly::var(v)
    }

    #[test]
    fn derivative_of_dynamics_residual() {
        // D(ẋ₁ + β x₁ x₃) = ẍ₁ + β ẋ₁ x₃ + β x₁ ẋ₃
        let b = var(Var::Param(0));
        let p = var(Var::state(0, 1)) + &b * var(Var::state(0, 0)) * var(Var::state(2, 0));
        let expected = var(Var::state(0, 2))
            + &b * var(Var::state(0, 1)) * var(Var::state(2, 0))
            + &b * var(Var::state(0, 0)) * var(Var::state(2, 1));
        assert_eq!(total_derivative(&p), expected);
        assert!(total_derivative(&(&b * &b)).is_zero());
        let lin = var(Var::output(0, 0)) - var(Var::state(2, 0));
        assert_eq!(total_derivative(&lin), var(Var::output(0, 1)) - var(Var::state(2, 1)));
    }

    #[test]
    fn output_jets_follow_the_dynamics() {
        let m = seir();
        let (b, e, g) = (var(Var::Param(0)), var(Var::Param(1)), var(Var::Param(2)));
        let (s, x2, i) = (var(Var::state(0, 0)), var(Var::state(1, 0)), var(Var::state(2, 0)));
        let y = |k| var(Var::output(0, k));
        assert_eq!(substitute_dynamics(&y(0), &m, 2).unwrap(), i);
        assert_eq!(substitute_dynamics(&y(1), &m, 2).unwrap(), &e * &x2 - &g * &i);
        let expected = &e * (&b * &s * &i - &e * &x2) - &g * (&e * &x2 - &g * &i);
        assert_eq!(substitute_dynamics(&y(2), &m, 2).unwrap(), expected);
        assert!(matches!(substitute_dynamics(&y(3), &m, 2), Err(ModelError::OrderOverflow { found: 3, limit: 2 })));
    }
}
