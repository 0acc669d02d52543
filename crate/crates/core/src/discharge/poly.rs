//! Polynomials over opaque atoms with rational coefficients.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::logic::{ArithOp, Term};

/// Sorted product of atoms; the empty monomial is the constant 1.
pub type Monomial = Vec<Term>;

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Poly {
    pub terms: BTreeMap<Monomial, BigRational>,
}

impl Poly {
    pub fn constant(q: BigRational) -> Poly {
        let mut p = Poly::default();
        if !q.is_zero() {
            p.terms.insert(Vec::new(), q);
        }
        p
    }

    pub fn atom(t: Term) -> Poly {
        let mut p = Poly::default();
        p.terms.insert(vec![t], BigRational::one());
        p
    }

    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self.terms.get(&Vec::new()).cloned(),
            _ => None,
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            let e = out.terms.entry(m.clone()).or_insert_with(BigRational::zero);
            *e += c;
            if e.is_zero() {
                out.terms.remove(m);
            }
        }
        out
    }

    pub fn scale(&self, k: &BigRational) -> Poly {
        if k.is_zero() {
            return Poly::default();
        }
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect() }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(&-BigRational::one()))
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::default();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let mut m: Monomial = m1.iter().chain(m2.iter()).cloned().collect();
                m.sort();
                out = out.add(&Poly { terms: BTreeMap::from([(m, c1 * c2)]) });
            }
        }
        out
    }

    /// Highest monomial degree.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    /// Whether every coefficient is an integer.
    pub fn integral(&self) -> bool {
        self.terms.values().all(|c| c.is_integer())
    }

    /// Normal form of an arithmetic term. Division by a nonzero constant is
    /// scaling; any other division, and every non-arithmetic term, is an atom.
    pub fn of_term(t: &Term) -> Poly {
        match t {
            Term::Int(i) => Poly::constant(BigRational::from_integer(i.clone())),
            Term::Real(q) => Poly::constant(q.clone()),
            Term::ToReal(a) => Poly::of_term(a),
            Term::Neg(a) => Poly::of_term(a).scale(&-BigRational::one()),
            Term::Arith(op, a, b) => {
                let (pa, pb) = (Poly::of_term(a), Poly::of_term(b));
                match op {
                    ArithOp::Add => pa.add(&pb),
                    ArithOp::Sub => pa.sub(&pb),
                    ArithOp::Mul => pa.mul(&pb),
                    ArithOp::Div => match pb.as_constant() {
                        Some(k) if !k.is_zero() => pa.scale(&k.recip()),
                        _ => Poly::atom(t.clone()),
                    },
                }
            }
            _ => Poly::atom(t.clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{Sort, Tag, Var};
    use num_bigint::BigInt;

    fn int_rat(i: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(i))
    }

    fn v(n: &str) -> Term {
        Term::Var(Var::new(n, Tag::Cur, Sort::Real, 0))
    }

    #[test]
    fn cancels() {
        let t = Term::arith(ArithOp::Sub, Term::arith(ArithOp::Add, v("x"), v("d")), Term::arith(ArithOp::Add, v("d"), v("x")));
        assert_eq!(Poly::of_term(&t).as_constant(), Some(BigRational::zero()));
    }

    #[test]
    fn expands_products() {
        let s = Term::arith(ArithOp::Add, v("x"), v("y"));
        let p = Poly::of_term(&Term::arith(ArithOp::Mul, s.clone(), s));
        assert_eq!(p.terms.len(), 3);
        assert_eq!(p.degree(), 2);
        assert_eq!(p.terms[&vec![v("x"), v("y")]], int_rat(2));
    }

    #[test]
    fn constant_division_scales() {
        let t = Term::arith(ArithOp::Div, v("x"), Term::Real(int_rat(2)));
        assert_eq!(Poly::of_term(&t).terms[&vec![v("x")]], BigRational::new(1.into(), 2.into()));
    }
}
