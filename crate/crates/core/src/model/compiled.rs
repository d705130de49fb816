//! Floating-point evaluation of polynomials over a flat value vector.

use crate::algebra::{rational, JetPoly, Var};

use super::ModelSpec;

/// A polynomial whose variables are slots of a value slice.
#[derive(Debug, Clone)]
pub struct CompiledPoly {
    terms: Vec<(f64, Vec<(usize, i32)>)>,
}

impl CompiledPoly {
    pub fn new(p: &JetPoly, slot: impl Fn(Var) -> usize) -> Self {
        let terms = p
            .terms()
            .map(|(m, c)| (rational::to_f64(c), m.factors().iter().map(|&(v, e)| (slot(v), e as i32)).collect()))
            .collect();
        CompiledPoly { terms }
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, fs)| fs.iter().fold(*c, |acc, &(s, e)| acc * powi(values[s], e)))
            .sum()
    }

    /// Adds `scale · ∂p/∂values[s]` into `grad[s]`.
    pub fn add_gradient(&self, values: &[f64], scale: f64, grad: &mut [f64]) {
        for (c, fs) in &self.terms {
            for (k, &(s, e)) in fs.iter().enumerate() {
                let mut d = c * e as f64 * powi(values[s], e - 1);
                for (j, &(s2, e2)) in fs.iter().enumerate() {
                    if j != k {
                        d *= powi(values[s2], e2);
                    }
                }
                grad[s] += scale * d;
            }
        }
    }
}

#[inline]
fn powi(x: f64, e: i32) -> f64 {
    match e {
        0 => 1.0,
        1 => x,
        2 => x * x,
        _ => x.powi(e),
    }
}

/// `f(x, u; θ)` with slots laid out as `[x…, u…, θ…]`.
#[derive(Debug, Clone)]
pub struct CompiledDynamics {
    pub n_states: usize,
    pub n_inputs: usize,
    pub n_params: usize,
    pub rhs: Vec<CompiledPoly>,
}

impl CompiledDynamics {
    pub fn new(m: &ModelSpec) -> Self {
        let (n, l) = (m.n_states(), m.inputs.len());
        let slot = move |v: Var| match v {
            Var::State { index, order: 0 } => index,
            Var::Input { index, order: 0 } => n + index,
            Var::Param(k) => n + l + k,
            other => panic!("dynamics contain jet {other:?}"),
        };
        CompiledDynamics {
            n_states: n,
            n_inputs: l,
            n_params: m.params.len(),
            rhs: m.dynamics.iter().map(|f| CompiledPoly::new(f, slot)).collect(),
        }
    }

    pub fn layout(&self, x: &[f64], u: &[f64], theta: &[f64]) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n_states + self.n_inputs + self.n_params);
        v.extend_from_slice(x);
        v.extend_from_slice(u);
        v.extend_from_slice(theta);
        v
    }

    pub fn eval(&self, x: &[f64], u: &[f64], theta: &[f64], out: &mut [f64]) {
        let v = self.layout(x, u, theta);
        for (o, f) in out.iter_mut().zip(&self.rhs) {
            *o = f.eval(&v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;

    #[test]
    fn gradient_matches_finite_differences() {
        let m = parse_model("states: S, I\nparams: b\ndynamics:\n  d/dt S = -b*S^2*I\n  d/dt I = b*S*I - I^3\nmeasure:\n  y1 = I\n").unwrap();
        let c = CompiledDynamics::new(&m);
        let v = vec![0.7, 0.3, 0.26];
        for f in &c.rhs {
            let mut g = vec![0.0; 3];
            f.add_gradient(&v, 1.0, &mut g);
            for s in 0..3 {
                let h = 1e-6;
                let (mut a, mut b) = (v.clone(), v.clone());
                a[s] += h;
                b[s] -= h;
                let fd = (f.eval(&a) - f.eval(&b)) / (2.0 * h);
                assert!((fd - g[s]).abs() < 1e-8, "{fd} vs {}", g[s]);
            }
        }
    }
}
