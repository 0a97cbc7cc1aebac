//! Brute-force semantics: recursive evaluation where quantifiers enumerate
//! the universe of the quantified variable. Results are memoized on
//! `(index, assignment restricted to the free variables)`.

use std::collections::HashMap;

use crate::clause::Clause;
use crate::model::{
    Assignment, Atom, Elem, Formula, Index, Leaf, Node, QcInstance, QcbfFormula, Structure, VarId, VarTable, FALSE,
    TRUE,
};

/// How leaves are interpreted and which elements a variable ranges over.
pub trait Semantics<L> {
    fn universe(&self, vars: &VarTable, v: VarId) -> &[Elem];
    fn holds(&self, leaf: &L, a: &Assignment) -> bool;
}

impl Semantics<Atom> for Structure {
    fn universe(&self, vars: &VarTable, v: VarId) -> &[Elem] {
        Structure::universe(self, vars.sort(v))
    }

    fn holds(&self, atom: &Atom, a: &Assignment) -> bool {
        let tuple: Vec<Elem> = atom.args.iter().map(|v| a[v]).collect();
        self.interpretations[atom.relation.ix()].contains(&tuple)
    }
}

/// The two-element domain of propositional formulas.
#[derive(Clone, Copy, Debug, Default)]
pub struct Booleans;

const BOOLS: [Elem; 2] = [FALSE, TRUE];

impl Semantics<Clause> for Booleans {
    fn universe(&self, _: &VarTable, _: VarId) -> &[Elem] {
        &BOOLS
    }

    fn holds(&self, clause: &Clause, a: &Assignment) -> bool {
        clause.literals().iter().any(|l| (a[&l.var] == TRUE) == l.positive)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("index {0} is not a location of the formula")]
    UnknownIndex(u32),
    #[error("assignment domain differs from the free variables at index {0}")]
    DomainMismatch(u32),
    #[error("value for variable {0} is outside its sort's universe")]
    SortMismatch(String),
}

pub struct Evaluator<'a, L, S> {
    formula: &'a Formula<L>,
    sem: &'a S,
    memo: HashMap<(Index, Vec<Elem>), bool>,
}

impl<'a, L: Leaf, S: Semantics<L>> Evaluator<'a, L, S> {
    pub fn new(formula: &'a Formula<L>, sem: &'a S) -> Self {
        Evaluator { formula, sem, memo: HashMap::new() }
    }

    /// Truth of the subformula at `i` under `a`, which must be defined
    /// exactly on its free variables.
    pub fn eval(&mut self, i: Index, a: &Assignment) -> Result<bool, EvalError> {
        if !self.formula.contains(i) {
            return Err(EvalError::UnknownIndex(i.0));
        }
        let free = self.formula.free(i);
        if a.len() != free.len() || !free.iter().all(|v| a.contains_key(v)) {
            return Err(EvalError::DomainMismatch(i.0));
        }
        for (&v, e) in a {
            if !self.sem.universe(self.formula.vars(), v).contains(e) {
                return Err(EvalError::SortMismatch(self.formula.vars().name(v).to_string()));
            }
        }
        Ok(self.rec(i, a))
    }

    /// Truth of the whole sentence.
    pub fn eval_root(&mut self) -> Result<bool, EvalError> {
        self.eval(self.formula.root(), &Assignment::new())
    }

    fn rec(&mut self, i: Index, a: &Assignment) -> bool {
        let key: Vec<Elem> = self.formula.free(i).iter().map(|v| a[v]).collect();
        if let Some(&b) = self.memo.get(&(i, key.clone())) {
            return b;
        }
        let f = self.formula;
        let result = match f.node(i) {
            Node::Leaf(l) => self.sem.holds(l, a),
            Node::True => true,
            Node::And(cs) => cs.iter().all(|&c| {
                let sub = restrict(a, f, c);
                self.rec(c, &sub)
            }),
            Node::Exists(v, c) | Node::Forall(v, c) => {
                let universal = matches!(f.node(i), Node::Forall(..));
                let (v, c) = (*v, *c);
                let base = restrict(a, f, c);
                let universe = self.sem.universe(f.vars(), v).to_vec();
                let mut check = |b: Elem| {
                    let mut ext = base.clone();
                    if f.free(c).contains(&v) {
                        ext.insert(v, b);
                    }
                    self.rec(c, &ext)
                };
                if universal {
                    universe.into_iter().all(&mut check)
                } else {
                    universe.into_iter().any(&mut check)
                }
            }
        };
        self.memo.insert((i, key), result);
        result
    }
}

fn restrict<L: Leaf>(a: &Assignment, f: &Formula<L>, i: Index) -> Assignment {
    f.free(i).iter().filter_map(|v| a.get(v).map(|&e| (*v, e))).collect()
}

/// Truth of the subformula at `i` of a QCSP instance under `a`.
pub fn evaluate(inst: &QcInstance, i: Index, a: &Assignment) -> Result<bool, EvalError> {
    Evaluator::new(&inst.formula, &inst.structure).eval(i, a)
}

/// Truth of the subformula at `i` of a QCBF under `a` (values `FALSE`/`TRUE`).
pub fn evaluate_qcbf(f: &QcbfFormula, i: Index, a: &Assignment) -> Result<bool, EvalError> {
    Evaluator::new(f, &Booleans).eval(i, a)
}

/// `B ⊨ φ`.
pub fn is_true(inst: &QcInstance) -> bool {
    Evaluator::new(&inst.formula, &inst.structure).eval_root().expect("sentence")
}

pub fn qcbf_is_true(f: &QcbfFormula) -> bool {
    Evaluator::new(f, &Booleans).eval_root().expect("sentence")
}

/// Every map from `vars` into the universes given by `universe`, in
/// lexicographic order.
pub fn all_assignments(vars: &[VarId], universe: impl Fn(VarId) -> Vec<Elem>) -> Vec<Assignment> {
    let mut out = vec![Assignment::new()];
    for &v in vars {
        let u = universe(v);
        out = out
            .into_iter()
            .flat_map(|a| {
                u.iter().map(move |&e| {
                    let mut a = a.clone();
                    a.insert(v, e);
                    a
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::running_example;
    use crate::model::Tree;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    fn asg(inst: &QcInstance, pairs: &[(&str, &str)]) -> Assignment {
        pairs
            .iter()
            .map(|(v, e)| (inst.formula.vars().by_name(v).unwrap(), inst.structure.element_by_name(e).unwrap()))
            .collect()
    }

    #[test]
    fn example_is_true() {
        let inst = running_example();
        assert!(evaluate(&inst, Index(1), &Assignment::new()).unwrap());
        assert!(evaluate(&inst, Index(4), &asg(&inst, &[("x", "a"), ("y", "d")])).unwrap());
        assert!(!evaluate(&inst, Index(2), &asg(&inst, &[("x", "b")])).unwrap());
    }

    #[test]
    fn assignment_errors() {
        let inst = running_example();
        assert_eq!(evaluate(&inst, Index(2), &Assignment::new()), Err(EvalError::DomainMismatch(2)));
        // d belongs to sort u, not to x's sort e.
        assert_eq!(evaluate(&inst, Index(2), &asg(&inst, &[("x", "d")])), Err(EvalError::SortMismatch("x".into())));
        assert_eq!(evaluate(&inst, Index(9), &Assignment::new()), Err(EvalError::UnknownIndex(9)));
    }

    #[test]
    fn conjunction_is_pointwise() {
        let inst = running_example();
        let f = &inst.formula;
        let mut ev = Evaluator::new(f, &inst.structure);
        let vars: Vec<VarId> = f.free(Index(3)).iter().copied().collect();
        for a in all_assignments(&vars, |v| inst.universe_of(v).to_vec()) {
            let whole = ev.eval(Index(3), &a).unwrap();
            let parts = [Index(4), Index(5)].iter().all(|&c| {
                let sub: Assignment = f.free(c).iter().map(|v| (*v, a[v])).collect();
                ev.eval(c, &sub).unwrap()
            });
            assert_eq!(whole, parts);
        }
    }

    #[test]
    fn reindexing_preserves_truth() {
        let inst = running_example();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let mut perm: Vec<u32> = (1..=6).collect();
            perm.shuffle(&mut rng);
            let moved = inst.formula.reindexed(&perm);
            let other = QcInstance::new(moved.clone(), inst.structure.clone());
            for i in inst.formula.indices() {
                let j = Index(perm[i.0 as usize - 1]);
                let vars: Vec<VarId> = inst.formula.free(i).iter().copied().collect();
                for a in all_assignments(&vars, |v| inst.universe_of(v).to_vec()) {
                    assert_eq!(evaluate(&inst, i, &a), evaluate(&other, j, &a));
                }
            }
        }
    }

    #[test]
    fn qcbf_semantics() {
        let mut vt = VarTable::new();
        let x = vt.get_or_insert("x", crate::model::SortId(0)).unwrap();
        let lit = |p| Tree::Leaf(Clause::new(vec![crate::clause::Literal { var: x, positive: p }]).unwrap());
        let t = Formula::from_tree(vt.clone(), Tree::exists(x, lit(true)));
        assert!(qcbf_is_true(&t));
        let f = Formula::from_tree(vt, Tree::exists(x, Tree::and(vec![lit(true), lit(false)])));
        assert!(!qcbf_is_true(&f));
    }
}
