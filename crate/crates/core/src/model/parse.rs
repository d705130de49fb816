//! Recursive-descent parser for the model description language.

use std::collections::HashMap;

use crate::algebra::rational::{self, Rational};
use crate::algebra::{JetPoly, Var};

use super::{ModelError, ModelSpec};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Op(char),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    col: usize,
}

fn tokenize(text: &str, line: usize, col0: usize) -> Result<Vec<Token>, ModelError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = col0 + i;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let lit: String = chars[start..i].iter().collect();
            let value = rational::parse_decimal(&lit)
                .ok_or_else(|| ModelError::syntax(line, col, format!("malformed number `{lit}`")))?;
            out.push(Token { tok: Tok::Num(value), col });
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), col });
        } else if "+-*/^()".contains(c) {
            out.push(Token { tok: Tok::Op(c), col });
            i += 1;
        } else {
            return Err(ModelError::syntax(line, col, format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

/// Parses one polynomial expression. `symbols` maps names to variables.
pub(crate) fn parse_expr(
    text: &str,
    line: usize,
    col0: usize,
    symbols: &HashMap<String, Var>,
) -> Result<JetPoly, ModelError> {
    let tokens = tokenize(text, line, col0)?;
    let end_col = col0 + text.chars().count();
    let mut p = ExprParser { tokens, pos: 0, line, end_col, symbols };
    if p.tokens.is_empty() {
        return Err(ModelError::syntax(line, end_col, "expected an expression"));
    }
    let value = p.expr()?;
    if let Some(t) = p.tokens.get(p.pos) {
        return Err(ModelError::syntax(line, t.col, "unexpected trailing input"));
    }
    Ok(value)
}

struct ExprParser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    line: usize,
    end_col: usize,
    symbols: &'a HashMap<String, Var>,
}

impl ExprParser<'_> {
    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Token { tok: Tok::Op(c), .. }) => Some(*c),
            _ => None,
        }
    }

    fn col(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end_col, |t| t.col)
    }

    fn expr(&mut self) -> Result<JetPoly, ModelError> {
        let mut acc = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            acc = if op == '+' { acc + rhs } else { acc - rhs };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<JetPoly, ModelError> {
        let mut acc = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            let col = self.col();
            self.pos += 1;
            let rhs = self.unary()?;
            if op == '*' {
                acc = acc * rhs;
            } else {
                match rhs.as_constant() {
                    Some(c) if !num_traits::Zero::is_zero(&c) => acc = acc.scale(&(Rational::from_integer(1.into()) / c)),
                    Some(_) => return Err(ModelError::NonPolynomialTerm { line: self.line, col, detail: "division by zero".into() }),
                    None => {
                        return Err(ModelError::NonPolynomialTerm {
                            line: self.line,
                            col,
                            detail: "division by a non-constant expression".into(),
                        })
                    }
                }
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<JetPoly, ModelError> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<JetPoly, ModelError> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let col = self.col();
            let negative = self.peek_op() == Some('-');
            if negative {
                return Err(ModelError::NonPolynomialTerm { line: self.line, col, detail: "negative exponent".into() });
            }
            match self.tokens.get(self.pos) {
                Some(Token { tok: Tok::Num(n), .. }) if n.is_integer() => {
                    let e: u32 = n.to_integer().try_into().map_err(|_| ModelError::syntax(self.line, col, "exponent too large"))?;
                    self.pos += 1;
                    Ok(base.pow(e))
                }
                Some(Token { tok: Tok::Num(_), .. }) => {
                    Err(ModelError::NonPolynomialTerm { line: self.line, col, detail: "fractional exponent".into() })
                }
                _ => Err(ModelError::syntax(self.line, col, "expected an integer exponent")),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<JetPoly, ModelError> {
        let col = self.col();
        let Some(token) = self.tokens.get(self.pos).cloned() else {
            return Err(ModelError::syntax(self.line, col, "unexpected end of expression"));
        };
        self.pos += 1;
        match token.tok {
            Tok::Num(v) => Ok(JetPoly::constant(v)),
            Tok::Ident(name) => match self.symbols.get(&name) {
                Some(&v) => Ok(JetPoly::var(v)),
                None => Err(ModelError::UndeclaredSymbol { name, line: self.line, col }),
            },
            Tok::Op('(') => {
                let inner = self.expr()?;
                if self.peek_op() != Some(')') {
                    return Err(ModelError::syntax(self.line, self.col(), "expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Tok::Op(c) => Err(ModelError::syntax(self.line, col, format!("unexpected `{c}`"))),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Dynamics,
    Measure,
    Reduce,
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_') && chars.all(|c| c.is_alphanumeric() || c == '_')
}

/// Parses a complete model.
pub fn parse_model(text: &str) -> Result<ModelSpec, ModelError> {
    let mut states: Vec<String> = Vec::new();
    let mut params: Vec<String> = Vec::new();
    let mut inputs: Vec<String> = Vec::new();
    let mut dynamics_src: Vec<(usize, usize, String, usize, String)> = Vec::new();
    let mut measure_src: Vec<(usize, usize, String, usize, String)> = Vec::new();
    let mut reduce_src: Vec<(usize, usize, String, usize, String)> = Vec::new();
    let mut saw_dynamics = false;
    let mut section = Section::None;

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start().len();
        let trimmed = content.trim();
        let header = trimmed.split_once(':').map(|(h, rest)| (h.trim(), rest, trimmed.find(':').unwrap()));
        if let Some((name, rest, colon)) = header {
            let list_target = match name {
                "states" => Some(&mut states),
                "params" => Some(&mut params),
                "inputs" => Some(&mut inputs),
                _ => None,
            };
            if let Some(list) = list_target {
                let mut col = indent + colon + 2;
                for item in rest.split(',') {
                    let name = item.trim();
                    if name.is_empty() {
                        if rest.trim().is_empty() {
                            break;
                        }
                        return Err(ModelError::syntax(line, col, "empty name in declaration list"));
                    }
                    if !is_identifier(name) {
                        return Err(ModelError::syntax(line, col, format!("invalid name `{name}`")));
                    }
                    list.push(name.to_string());
                    col += item.len() + 1;
                }
                section = Section::None;
                continue;
            }
            let next = match name {
                "dynamics" => Some(Section::Dynamics),
                "measure" => Some(Section::Measure),
                "reduce" => Some(Section::Reduce),
                _ => None,
            };
            if let Some(next) = next {
                if !rest.trim().is_empty() {
                    return Err(ModelError::syntax(line, indent + colon + 2, "section header must end the line"));
                }
                if next == Section::Dynamics {
                    saw_dynamics = true;
                }
                section = next;
                continue;
            }
        }
        let Some((lhs, rhs)) = trimmed.split_once('=') else {
            return Err(ModelError::syntax(line, indent + 1, "expected `name = expression` or a section header"));
        };
        let rhs_col = indent + lhs.len() + 2 + (rhs.len() - rhs.trim_start().len());
        let lhs_col = indent + 1;
        let entry = (line, lhs_col, lhs.trim().to_string(), rhs_col, rhs.trim().to_string());
        match section {
            Section::Dynamics => {
                let Some(target) = lhs.trim().strip_prefix("d/dt") else {
                    return Err(ModelError::syntax(line, lhs_col, "dynamics lines read `d/dt NAME = ...`"));
                };
                let (line, lc, _, rc, r) = entry;
                dynamics_src.push((line, lc, target.trim().to_string(), rc, r));
            }
            Section::Measure => measure_src.push(entry),
            Section::Reduce => reduce_src.push(entry),
            Section::None => return Err(ModelError::syntax(line, lhs_col, "equation outside a section")),
        }
    }

    let mut symbols: HashMap<String, Var> = HashMap::new();
    let declared = states
        .iter()
        .enumerate()
        .map(|(i, n)| (n, Var::state(i, 0)))
        .chain(params.iter().enumerate().map(|(i, n)| (n, Var::Param(i))))
        .chain(inputs.iter().enumerate().map(|(i, n)| (n, Var::input(i, 0))));
    for (name, var) in declared {
        if symbols.insert(name.clone(), var).is_some() {
            return Err(ModelError::Invalid(format!("symbol `{name}` declared more than once")));
        }
    }
    if states.is_empty() {
        return Err(ModelError::syntax(1, 1, "no states declared"));
    }
    if !saw_dynamics || dynamics_src.is_empty() {
        return Err(ModelError::syntax(text.lines().count().max(1), 1, "empty or missing dynamics block"));
    }

    let mut dynamics: Vec<Option<JetPoly>> = vec![None; states.len()];
    for (line, lc, target, rc, rhs) in &dynamics_src {
        let Some(i) = states.iter().position(|s| s == target) else {
            return Err(ModelError::UndeclaredSymbol { name: target.clone(), line: *line, col: *lc });
        };
        if dynamics[i].is_some() {
            return Err(ModelError::syntax(*line, *lc, format!("second equation for `{target}`")));
        }
        dynamics[i] = Some(parse_expr(rhs, *line, *rc, &symbols)?);
    }
    let dynamics: Vec<JetPoly> = dynamics
        .into_iter()
        .enumerate()
        .map(|(i, f)| f.ok_or_else(|| ModelError::syntax(1, 1, format!("no dynamics for state `{}`", states[i]))))
        .collect::<Result<_, _>>()?;

    let mut measurements = Vec::new();
    for (k, (line, lc, lhs, rc, rhs)) in measure_src.iter().enumerate() {
        if *lhs != format!("y{}", k + 1) {
            return Err(ModelError::syntax(*line, *lc, format!("expected `y{}` (outputs are numbered in order)", k + 1)));
        }
        let g = parse_expr(rhs, *line, *rc, &symbols)?;
        if g.vars().iter().any(|v| matches!(v, Var::Input { .. })) {
            return Err(ModelError::Invalid(format!("measurement `{lhs}` depends on an input")));
        }
        measurements.push(g);
    }
    if measurements.is_empty() {
        return Err(ModelError::syntax(text.lines().count().max(1), 1, "empty or missing measure block"));
    }

    let mut reductions = Vec::new();
    for (line, lc, lhs, rc, rhs) in &reduce_src {
        let Some(i) = states.iter().position(|s| s == lhs) else {
            return Err(ModelError::UndeclaredSymbol { name: lhs.clone(), line: *line, col: *lc });
        };
        let rule = parse_expr(rhs, *line, *rc, &symbols)?;
        if rule.vars().contains(&Var::state(i, 0)) {
            return Err(ModelError::syntax(*line, *rc, format!("reduction of `{lhs}` refers to itself")));
        }
        reductions.push((i, rule));
    }

    Ok(ModelSpec { states, params, inputs, dynamics, measurements, reductions })
}
