//! Reverse-mode differentiation of scalar loss expressions.

use super::NeuralError;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Idx(usize);

impl Idx {
    /// Position on the tape; indexes the vector returned by [`Tape::gradient`].
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Add(Idx, Idx),
    Sub(Idx, Idx),
    Mul(Idx, Idx),
    Neg(Idx),
    Powi(Idx, i32),
    Tanh(Idx),
    Mean(Vec<Idx>),
}

/// Records `+ − × neg powi tanh square mean` over scalars.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    ops: Vec<Op>,
    values: Vec<f64>,
}

impl Tape {
    pub fn new() -> Tape {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    fn push(&mut self, op: Op, value: f64) -> Idx {
        self.ops.push(op);
        self.values.push(value);
        Idx(self.ops.len() - 1)
    }

    pub fn value(&self, i: Idx) -> f64 {
        self.values[i.0]
    }

    /// An input whose adjoint is reported by [`Tape::gradient`].
    pub fn leaf(&mut self, v: f64) -> Idx {
        self.push(Op::Leaf, v)
    }

    pub fn constant(&mut self, v: f64) -> Idx {
        self.push(Op::Leaf, v)
    }

    pub fn add(&mut self, a: Idx, b: Idx) -> Idx {
        self.push(Op::Add(a, b), self.values[a.0] + self.values[b.0])
    }

    pub fn sub(&mut self, a: Idx, b: Idx) -> Idx {
        self.push(Op::Sub(a, b), self.values[a.0] - self.values[b.0])
    }

    pub fn mul(&mut self, a: Idx, b: Idx) -> Idx {
        self.push(Op::Mul(a, b), self.values[a.0] * self.values[b.0])
    }

    pub fn neg(&mut self, a: Idx) -> Idx {
        self.push(Op::Neg(a), -self.values[a.0])
    }

    pub fn powi(&mut self, a: Idx, e: i32) -> Idx {
        self.push(Op::Powi(a, e), self.values[a.0].powi(e))
    }

    pub fn square(&mut self, a: Idx) -> Idx {
        self.powi(a, 2)
    }

    pub fn tanh(&mut self, a: Idx) -> Idx {
        self.push(Op::Tanh(a), self.values[a.0].tanh())
    }

    pub fn mean(&mut self, xs: &[Idx]) -> Idx {
        let v = xs.iter().map(|i| self.values[i.0]).sum::<f64>() / xs.len().max(1) as f64;
        self.push(Op::Mean(xs.to_vec()), v)
    }

    pub fn sum(&mut self, xs: &[Idx]) -> Idx {
        match xs.split_first() {
            None => self.constant(0.0),
            Some((&first, rest)) => rest.iter().fold(first, |acc, &x| self.add(acc, x)),
        }
    }

    /// Applies a primitive by name, rejecting anything outside the supported
    /// set.
    pub fn apply(&mut self, name: &str, args: &[Idx]) -> Result<Idx, NeuralError> {
        Ok(match (name, args) {
            ("add", &[a, b]) => self.add(a, b),
            ("sub", &[a, b]) => self.sub(a, b),
            ("mul", &[a, b]) => self.mul(a, b),
            ("neg", &[a]) => self.neg(a),
            ("tanh", &[a]) => self.tanh(a),
            ("square", &[a]) => self.square(a),
            ("mean", xs) => self.mean(xs),
            _ => return Err(NeuralError::UnsupportedPrimitive(name.to_string())),
        })
    }

    /// Adjoints `∂out/∂node` for every recorded node.
    pub fn gradient(&self, out: Idx) -> Vec<f64> {
        let mut adj = vec![0.0; out.0 + 1];
        adj[out.0] = 1.0;
        for k in (0..=out.0).rev() {
            let g = adj[k];
            if g == 0.0 {
                continue;
            }
            match &self.ops[k] {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    adj[a.0] += g;
                    adj[b.0] += g;
                }
                Op::Sub(a, b) => {
                    adj[a.0] += g;
                    adj[b.0] -= g;
                }
                Op::Mul(a, b) => {
                    adj[a.0] += g * self.values[b.0];
                    adj[b.0] += g * self.values[a.0];
                }
                Op::Neg(a) => adj[a.0] -= g,
                Op::Powi(a, e) => adj[a.0] += g * *e as f64 * self.values[a.0].powi(e - 1),
                Op::Tanh(a) => adj[a.0] += g * (1.0 - self.values[k] * self.values[k]),
                Op::Mean(xs) => {
                    let w = g / xs.len() as f64;
                    for x in xs {
                        adj[x.0] += w;
                    }
                }
            }
        }
        adj.resize(self.ops.len(), 0.0);
        adj
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_of_a_small_expression() {
        // f = mean((a·b − tanh(a))², b³)
        let mut t = Tape::new();
        let (a, b) = (t.leaf(0.7), t.leaf(-1.3));
        let ab = t.mul(a, b);
        let th = t.tanh(a);
        let d = t.sub(ab, th);
        let sq = t.square(d);
        let cube = t.powi(b, 3);
        let f = t.mean(&[sq, cube]);
        let g = t.gradient(f);
        let eval = |a: f64, b: f64| 0.5 * ((a * b - a.tanh()).powi(2) + b.powi(3));
        let h = 1e-6;
        let fa = (eval(0.7 + h, -1.3) - eval(0.7 - h, -1.3)) / (2.0 * h);
        let fb = (eval(0.7, -1.3 + h) - eval(0.7, -1.3 - h)) / (2.0 * h);
        assert!((g[a.0] - fa).abs() < 1e-8 && (g[b.0] - fb).abs() < 1e-8);
        assert!((t.value(f) - eval(0.7, -1.3)).abs() < 1e-15);
    }

    #[test]
    fn constant_loss_and_unsupported_primitives() {
        let mut t = Tape::new();
        let x = t.leaf(2.0);
        let c = t.constant(3.0);
        let g = t.gradient(c);
        assert_eq!(g[x.0], 0.0);
        assert_eq!(t.apply("exp", &[x]), Err(NeuralError::UnsupportedPrimitive("exp".into())));
        assert!(t.apply("mul", &[x, c]).is_ok());
    }
}
