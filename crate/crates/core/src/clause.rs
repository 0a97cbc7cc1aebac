//! Propositional literals and non-tautological clauses.

use std::collections::BTreeMap;
use std::fmt;

use crate::model::{VarId, VarSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub var: VarId,
    pub positive: bool,
}

impl Literal {
    pub fn pos(var: VarId) -> Self {
        Literal { var, positive: true }
    }

    pub fn neg(var: VarId) -> Self {
        Literal { var, positive: false }
    }

    pub fn complement(self) -> Self {
        Literal { var: self.var, positive: !self.positive }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ClauseError {
    #[error("variable #{0} occurs in two literals")]
    RepeatedVariable(u32),
    #[error("pivot #{0} does not occur with opposite signs in the two clauses")]
    NotComplementary(u32),
    #[error("resolvent on #{0} would be tautological")]
    Tautological(u32),
}

/// A disjunction with at most one literal per variable, kept sorted by
/// variable.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Clause {
    lits: Vec<Literal>,
}

impl Clause {
    pub fn new(mut lits: Vec<Literal>) -> Result<Self, ClauseError> {
        lits.sort();
        lits.dedup();
        for w in lits.windows(2) {
            if w[0].var == w[1].var {
                return Err(ClauseError::RepeatedVariable(w[0].var.0));
            }
        }
        Ok(Clause { lits })
    }

    pub fn empty() -> Self {
        Clause::default()
    }

    pub fn literals(&self) -> &[Literal] {
        &self.lits
    }

    pub fn len(&self) -> usize {
        self.lits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }

    pub fn vars(&self) -> VarSet {
        self.lits.iter().map(|l| l.var).collect()
    }

    pub fn literal_of(&self, v: VarId) -> Option<Literal> {
        self.lits.iter().copied().find(|l| l.var == v)
    }

    pub fn contains(&self, l: Literal) -> bool {
        self.lits.contains(&l)
    }

    /// `self \ {v, ¬v}`.
    pub fn without(&self, v: VarId) -> Clause {
        Clause { lits: self.lits.iter().copied().filter(|l| l.var != v).collect() }
    }

    /// The unique assignment on `vars(self)` that falsifies the clause.
    pub fn falsifier(&self) -> BTreeMap<VarId, bool> {
        self.lits.iter().map(|l| (l.var, !l.positive)).collect()
    }

    /// `a` is defined on every variable of the clause and makes each
    /// literal false.
    pub fn is_falsified_by(&self, a: &BTreeMap<VarId, bool>) -> bool {
        self.lits.iter().all(|l| a.get(&l.var).is_some_and(|&b| b != l.positive))
    }

    /// `a` makes some literal true. Undefined variables count as false.
    pub fn is_satisfied_by(&self, a: &BTreeMap<VarId, bool>) -> bool {
        self.lits.iter().any(|l| a.get(&l.var).is_some_and(|&b| b == l.positive))
    }

    /// The unique clause on `a`'s domain falsified by `a`.
    pub fn falsified_by(a: &BTreeMap<VarId, bool>) -> Clause {
        Clause { lits: a.iter().map(|(&var, &b)| Literal { var, positive: !b }).collect() }
    }
}

/// `(a \ {L}) ∪ (b \ {M})` for the complementary pivot literals `L`, `M`.
pub fn resolvent(a: &Clause, b: &Clause, pivot: VarId) -> Result<Clause, ClauseError> {
    let (Some(la), Some(lb)) = (a.literal_of(pivot), b.literal_of(pivot)) else {
        return Err(ClauseError::NotComplementary(pivot.0));
    };
    if la.positive == lb.positive {
        return Err(ClauseError::NotComplementary(pivot.0));
    }
    let lits: Vec<Literal> = a.lits.iter().chain(&b.lits).copied().filter(|l| l.var != pivot).collect();
    Clause::new(lits).map_err(|_| ClauseError::Tautological(pivot.0))
}

/// Prints literals as `x -y z` using the supplied variable names.
pub struct ClauseDisplay<'a, F: Fn(VarId) -> &'a str> {
    pub clause: &'a Clause,
    pub name: F,
}

impl<'a, F: Fn(VarId) -> &'a str> fmt::Display for ClauseDisplay<'a, F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, l) in self.clause.lits.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            if !l.positive {
                f.write_str("-")?;
            }
            f.write_str((self.name)(l.var))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const X: VarId = VarId(0);
    const Y: VarId = VarId(1);
    const Z: VarId = VarId(2);

    fn c(lits: &[Literal]) -> Clause {
        Clause::new(lits.to_vec()).unwrap()
    }

    #[test]
    fn textbook_resolution() {
        let a = c(&[Literal::pos(X), Literal::pos(Y)]);
        let b = c(&[Literal::neg(Y), Literal::pos(Z)]);
        assert_eq!(resolvent(&a, &b, Y).unwrap(), c(&[Literal::pos(X), Literal::pos(Z)]));
    }

    #[test]
    fn unit_clauses_resolve_to_empty() {
        let a = c(&[Literal::pos(Y)]);
        let b = c(&[Literal::neg(Y)]);
        assert!(resolvent(&a, &b, Y).unwrap().is_empty());
    }

    #[test]
    fn tautological_resolvent_rejected() {
        let a = c(&[Literal::pos(X), Literal::pos(Y)]);
        let b = c(&[Literal::neg(Y), Literal::neg(X)]);
        assert_eq!(resolvent(&a, &b, Y), Err(ClauseError::Tautological(1)));
    }

    #[test]
    fn pivot_must_be_complementary() {
        let a = c(&[Literal::pos(X)]);
        let b = c(&[Literal::pos(X), Literal::pos(Y)]);
        assert_eq!(resolvent(&a, &b, X), Err(ClauseError::NotComplementary(0)));
        assert_eq!(resolvent(&a, &b, Y), Err(ClauseError::NotComplementary(1)));
    }

    #[test]
    fn repeated_variable_rejected() {
        assert!(Clause::new(vec![Literal::pos(X), Literal::neg(X)]).is_err());
        assert_eq!(Clause::new(vec![Literal::pos(X), Literal::pos(X)]).unwrap().len(), 1);
    }

    #[test]
    fn falsifier_is_unique() {
        let a = c(&[Literal::pos(X), Literal::neg(Y)]);
        let g = a.falsifier();
        assert!(a.is_falsified_by(&g));
        assert_eq!(Clause::falsified_by(&g), a);
    }

    fn arb_clause() -> impl Strategy<Value = Clause> {
        proptest::collection::btree_map(0u32..4, any::<bool>(), 0..4).prop_map(|m| {
            Clause::new(m.into_iter().map(|(v, p)| Literal { var: VarId(v), positive: p }).collect()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn resolvent_is_symmetric(a in arb_clause(), b in arb_clause(), p in 0u32..4) {
            let p = VarId(p);
            prop_assert_eq!(resolvent(&a, &b, p), resolvent(&b, &a, p));
        }
    }
}
