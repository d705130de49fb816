//! Exact polynomial algebra: rationals, jet polynomials, parameter
//! coefficients and Gröbner bases.

pub mod coeff;
pub mod groebner;
pub mod jet;
pub mod poly;
pub mod rational;

pub use coeff::ParamPoly;
pub use groebner::{buchberger, normal_form, s_polynomial, AlgebraError, Budget, GroebnerBasis};
pub use jet::{jet_name, JetPoly, Monomial, Var, VarNames};
pub use poly::{BlockOrder, MonomialOrder, Poly, PolyRing};
pub use rational::Rational;
