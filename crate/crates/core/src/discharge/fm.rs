//! Satisfiability of conjunctions of linear constraints over the rationals
//! by Fourier–Motzkin elimination, with model extraction.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    Lt,
    Le,
    Eq,
}

/// `sum(coeffs[v] * v) + constant  rel  0`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Constraint {
    pub coeffs: BTreeMap<usize, BigRational>,
    pub constant: BigRational,
    pub rel: Rel,
}

impl Constraint {
    fn value_with(&self, model: &BTreeMap<usize, BigRational>, skip: usize) -> BigRational {
        let mut acc = self.constant.clone();
        for (v, c) in &self.coeffs {
            if *v != skip {
                acc += c * model.get(v).cloned().unwrap_or_else(BigRational::zero);
            }
        }
        acc
    }

    /// Scales so the first coefficient has magnitude one (equalities also
    /// get a positive sign), making duplicates syntactically equal.
    fn normalized(mut self) -> Constraint {
        if let Some(first) = self.coeffs.values().next().cloned() {
            let k = if self.rel == Rel::Eq { first.recip() } else { first.abs().recip() };
            for c in self.coeffs.values_mut() {
                *c *= &k;
            }
            self.constant *= &k;
        }
        self
    }

    fn trivial(&self) -> Option<bool> {
        if !self.coeffs.is_empty() {
            return None;
        }
        let z = BigRational::zero();
        Some(match self.rel {
            Rel::Lt => self.constant < z,
            Rel::Le => self.constant <= z,
            Rel::Eq => self.constant == z,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Unsat,
    Sat(BTreeMap<usize, BigRational>),
    /// The constraint set grew past the limit.
    TooLarge,
}

pub const MAX_CONSTRAINTS: usize = 4000;

enum Step {
    /// `v = -(rest) / c` from an equality.
    Solved(usize, Constraint),
    /// Bounds on `v` from the constraints mentioning it.
    Bounded(usize, Vec<Constraint>),
}

pub fn solve(constraints: Vec<Constraint>) -> Outcome {
    let mut set: BTreeSet<Constraint> = BTreeSet::new();
    for c in constraints {
        match c.trivial() {
            Some(true) => {}
            Some(false) => return Outcome::Unsat,
            None => {
                set.insert(c.normalized());
            }
        }
    }
    let mut steps = Vec::new();
    // Equalities first: substitute them away.
    while let Some(eq) = set.iter().find(|c| c.rel == Rel::Eq).cloned() {
        set.remove(&eq);
        let (&v, cv) = eq.coeffs.iter().next().unwrap();
        let cv = cv.clone();
        let mut next = BTreeSet::new();
        for c in std::mem::take(&mut set) {
            let Some(a) = c.coeffs.get(&v).cloned() else {
                next.insert(c);
                continue;
            };
            // c - (a / cv) * eq eliminates v.
            let k = &a / &cv;
            let mut coeffs = c.coeffs.clone();
            for (w, e) in &eq.coeffs {
                let x = coeffs.entry(*w).or_insert_with(BigRational::zero);
                *x -= &k * e;
                if x.is_zero() {
                    coeffs.remove(w);
                }
            }
            let r = Constraint { coeffs, constant: &c.constant - &k * &eq.constant, rel: c.rel };
            match r.trivial() {
                Some(true) => {}
                Some(false) => return Outcome::Unsat,
                None => {
                    next.insert(r.normalized());
                }
            }
        }
        set = next;
        steps.push(Step::Solved(v, eq));
    }
    // Inequalities: eliminate variables one at a time.
    loop {
        let mut counts: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
        for c in &set {
            for (v, a) in &c.coeffs {
                let e = counts.entry(*v).or_default();
                if a.is_positive() {
                    e.0 += 1;
                } else {
                    e.1 += 1;
                }
            }
        }
        let Some((&v, _)) = counts.iter().min_by_key(|(_, (p, n))| p * n) else {
            break;
        };
        let (with, without): (Vec<Constraint>, Vec<Constraint>) = std::mem::take(&mut set).into_iter().partition(|c| c.coeffs.contains_key(&v));
        set = without.into_iter().collect();
        let (upper, lower): (Vec<&Constraint>, Vec<&Constraint>) = with.iter().partition(|c| c.coeffs[&v].is_positive());
        for u in &upper {
            for l in &lower {
                let au = &u.coeffs[&v];
                let al = -l.coeffs[&v].clone();
                let mut coeffs = BTreeMap::new();
                let vars: BTreeSet<usize> = u.coeffs.keys().chain(l.coeffs.keys()).copied().filter(|w| *w != v).collect();
                for w in &vars {
                    let val = u.coeffs.get(w).map(|c| c * &al).unwrap_or_else(BigRational::zero)
                        + l.coeffs.get(w).map(|c| c * au).unwrap_or_else(BigRational::zero);
                    if !val.is_zero() {
                        coeffs.insert(*w, val);
                    }
                }
                let rel = if u.rel == Rel::Lt || l.rel == Rel::Lt { Rel::Lt } else { Rel::Le };
                let r = Constraint { coeffs, constant: &u.constant * &al + &l.constant * au, rel };
                match r.trivial() {
                    Some(true) => {}
                    Some(false) => return Outcome::Unsat,
                    None => {
                        set.insert(r.normalized());
                    }
                }
            }
        }
        if set.len() > MAX_CONSTRAINTS {
            return Outcome::TooLarge;
        }
        steps.push(Step::Bounded(v, with));
    }
    // Every remaining constraint was trivially true; build a model
    // backwards.
    let mut model: BTreeMap<usize, BigRational> = BTreeMap::new();
    for step in steps.into_iter().rev() {
        match step {
            Step::Solved(v, eq) => {
                let rest = eq.value_with(&model, v);
                model.insert(v, -rest / &eq.coeffs[&v]);
            }
            Step::Bounded(v, cs) => {
                let mut lo: Option<(BigRational, bool)> = None;
                let mut hi: Option<(BigRational, bool)> = None;
                for c in &cs {
                    let a = &c.coeffs[&v];
                    let bound = -c.value_with(&model, v) / a;
                    let strict = c.rel == Rel::Lt;
                    if a.is_positive() {
                        if hi.as_ref().is_none_or(|(h, s)| bound < *h || (bound == *h && strict && !s)) {
                            hi = Some((bound, strict));
                        }
                    } else if lo.as_ref().is_none_or(|(l, s)| bound > *l || (bound == *l && strict && !s)) {
                        lo = Some((bound, strict));
                    }
                }
                let one = BigRational::one();
                let val = match (lo, hi) {
                    (None, None) => BigRational::zero(),
                    (Some((l, s)), None) => if s { l + one } else { l },
                    (None, Some((h, s))) => if s { h - one } else { h },
                    (Some((l, ls)), Some((h, hs))) => {
                        if l == h && !ls && !hs {
                            l
                        } else {
                            (l + h) / BigRational::from_integer(2.into())
                        }
                    }
                };
                model.insert(v, val);
            }
        }
    }
    Outcome::Sat(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    fn c(coeffs: &[(usize, i64)], k: i64, rel: Rel) -> Constraint {
        Constraint { coeffs: coeffs.iter().map(|(v, a)| (*v, q(*a))).collect(), constant: q(k), rel }
    }

    fn holds(c: &Constraint, m: &BTreeMap<usize, BigRational>) -> bool {
        let v = c.value_with(m, usize::MAX);
        match c.rel {
            Rel::Lt => v < q(0),
            Rel::Le => v <= q(0),
            Rel::Eq => v == q(0),
        }
    }

    #[test]
    fn strict_cycle_is_unsat() {
        // x < y, y < z, z <= x
        let cs = vec![c(&[(0, 1), (1, -1)], 0, Rel::Lt), c(&[(1, 1), (2, -1)], 0, Rel::Lt), c(&[(2, 1), (0, -1)], 0, Rel::Le)];
        assert_eq!(solve(cs), Outcome::Unsat);
    }

    #[test]
    fn model_satisfies_constraints() {
        // 0 < x, x < y, x + y = 3, y <= 2
        let cs = vec![
            c(&[(0, -1)], 0, Rel::Lt),
            c(&[(0, 1), (1, -1)], 0, Rel::Lt),
            c(&[(0, 1), (1, 1)], -3, Rel::Eq),
            c(&[(1, 1)], -2, Rel::Le),
        ];
        let Outcome::Sat(m) = solve(cs.clone()) else { panic!() };
        assert!(cs.iter().all(|k| holds(k, &m)), "{m:?}");
    }

    #[test]
    fn equalities_can_contradict() {
        let cs = vec![c(&[(0, 1), (1, -1)], 0, Rel::Eq), c(&[(0, 1), (1, -1)], -1, Rel::Eq)];
        assert_eq!(solve(cs), Outcome::Unsat);
    }
}
