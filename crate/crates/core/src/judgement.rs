//! Judgement proofs over QCSP instances: rule checking, extraction of the
//! formula a derived judgement defines, and refutation generation for
//! false instances.

use std::collections::HashMap;

use serde::Serialize;

use crate::constraint::{Constraint, ConstraintError};
use crate::model::{Index, Node, QcFormula, QcInstance, Tree, VarId, VarSet};

/// `(i, V, F)` with `V ⊆ free(φ(i))`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Judgement {
    pub location: Index,
    pub constraint: Constraint,
}

impl Judgement {
    pub fn new(location: Index, constraint: Constraint) -> Self {
        Judgement { location, constraint }
    }

    pub fn width(&self) -> usize {
        self.constraint.width()
    }

    pub fn is_empty(&self) -> bool {
        self.constraint.is_empty()
    }
}

/// Premises are 0-based positions of earlier steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum JudgementRule {
    Atom,
    Projection { premise: usize },
    Join { left: usize, right: usize },
    UpwardFlow { premise: usize },
    ForallElimination { premise: usize, var: VarId },
    DownwardFlow { premise: usize },
}

impl JudgementRule {
    pub fn premises(&self) -> Vec<usize> {
        match *self {
            JudgementRule::Atom => vec![],
            JudgementRule::Join { left, right } => vec![left, right],
            JudgementRule::Projection { premise }
            | JudgementRule::UpwardFlow { premise }
            | JudgementRule::ForallElimination { premise, .. }
            | JudgementRule::DownwardFlow { premise } => vec![premise],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            JudgementRule::Atom => "atom",
            JudgementRule::Projection { .. } => "project",
            JudgementRule::Join { .. } => "join",
            JudgementRule::UpwardFlow { .. } => "up",
            JudgementRule::ForallElimination { .. } => "forall-elim",
            JudgementRule::DownwardFlow { .. } => "down",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct JudgementStep {
    pub rule: JudgementRule,
    pub judgement: Judgement,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct JudgementProof {
    pub steps: Vec<JudgementStep>,
}

impl JudgementProof {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn width(&self) -> usize {
        self.steps.iter().map(|s| s.judgement.width()).max().unwrap_or(0)
    }

    pub fn refutes(&self) -> bool {
        self.steps.iter().any(|s| s.judgement.is_empty())
    }

    pub fn last(&self) -> Option<&Judgement> {
        self.steps.last().map(|s| &s.judgement)
    }

    /// The steps that `last` depends on, renumbered, ending in `last`.
    pub fn trimmed_to(&self, last: usize) -> JudgementProof {
        let keep = crate::clause_proof::needed_steps(last, |k| self.steps[k].rule.premises());
        let mut renumber = std::collections::BTreeMap::new();
        let mut out = JudgementProof::default();
        for k in keep {
            let mut step = self.steps[k].clone();
            let r = |p: usize| renumber[&p];
            step.rule = match step.rule {
                JudgementRule::Atom => JudgementRule::Atom,
                JudgementRule::Projection { premise } => JudgementRule::Projection { premise: r(premise) },
                JudgementRule::Join { left, right } => JudgementRule::Join { left: r(left), right: r(right) },
                JudgementRule::UpwardFlow { premise } => JudgementRule::UpwardFlow { premise: r(premise) },
                JudgementRule::ForallElimination { premise, var } => {
                    JudgementRule::ForallElimination { premise: r(premise), var }
                }
                JudgementRule::DownwardFlow { premise } => JudgementRule::DownwardFlow { premise: r(premise) },
            };
            renumber.insert(k, out.steps.len());
            out.steps.push(step);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum StepError {
    #[error("premise {0} is not an earlier step")]
    PremiseOutOfRange(usize),
    #[error("location {0} does not exist")]
    UnknownLocation(u32),
    #[error("variable set escapes free(φ({0}))")]
    VariablesNotFree(u32),
    #[error("φ({0}) is not an atom")]
    NotAnAtom(u32),
    #[error("rows differ from the rule's result")]
    RowsMismatch,
    #[error("variable set differs from the rule's result")]
    VarsMismatch,
    #[error("projection target is not a subset of the premise's variables")]
    NotSubset,
    #[error("premise sits at location {found}, rule needs {expected}")]
    LocationMismatch { expected: u32, found: u32 },
    #[error("{parent} is not the parent of {child}")]
    NotParent { parent: u32, child: u32 },
    #[error("φ({0}) is not a universal quantification of the named variable")]
    NotUniversal(u32),
    #[error("eliminated variable is not in the premise")]
    VariableNotInPremise,
}

fn premise<S>(prefix: &[S], at: usize) -> Result<&S, StepError> {
    prefix.get(at).ok_or(StepError::PremiseOutOfRange(at))
}

fn expect_same(expected: &Constraint, got: &Constraint) -> Result<(), StepError> {
    if expected.vars() != got.vars() {
        Err(StepError::VarsMismatch)
    } else if expected.rows() != got.rows() {
        Err(StepError::RowsMismatch)
    } else {
        Ok(())
    }
}

fn expect_parent(f: &QcFormula, parent: Index, child: Index) -> Result<(), StepError> {
    if f.parent(child) == Some(parent) {
        Ok(())
    } else {
        Err(StepError::NotParent { parent: parent.0, child: child.0 })
    }
}

/// Checks one step against the already checked `prefix`.
pub fn check_step(inst: &QcInstance, prefix: &[JudgementStep], step: &JudgementStep) -> Result<(), StepError> {
    let f = &inst.formula;
    let j = &step.judgement;
    let i = j.location;
    if !f.contains(i) {
        return Err(StepError::UnknownLocation(i.0));
    }
    if !j.constraint.vars().iter().all(|v| f.free(i).contains(v)) {
        return Err(StepError::VariablesNotFree(i.0));
    }
    match step.rule {
        JudgementRule::Atom => {
            let Node::Leaf(atom) = f.node(i) else {
                return Err(StepError::NotAnAtom(i.0));
            };
            expect_same(&inst.atom_rows(atom), &j.constraint)
        }
        JudgementRule::Projection { premise: p } => {
            let prem = &premise(prefix, p)?.judgement;
            same_location(i, prem.location)?;
            let target = j.constraint.var_set();
            let projected = prem.constraint.project(&target).map_err(|_| StepError::NotSubset)?;
            expect_same(&projected, &j.constraint)
        }
        JudgementRule::Join { left, right } => {
            let l = &premise(prefix, left)?.judgement;
            let r = &premise(prefix, right)?.judgement;
            same_location(i, l.location)?;
            same_location(i, r.location)?;
            expect_same(&l.constraint.join(&r.constraint), &j.constraint)
        }
        JudgementRule::UpwardFlow { premise: p } => {
            let prem = &premise(prefix, p)?.judgement;
            expect_parent(f, i, prem.location)?;
            expect_same(&prem.constraint, &j.constraint)
        }
        JudgementRule::DownwardFlow { premise: p } => {
            let prem = &premise(prefix, p)?.judgement;
            expect_parent(f, prem.location, i)?;
            expect_same(&prem.constraint, &j.constraint)
        }
        JudgementRule::ForallElimination { premise: p, var } => {
            let prem = &premise(prefix, p)?.judgement;
            expect_parent(f, i, prem.location)?;
            match f.node(i) {
                Node::Forall(y, _) if *y == var => {}
                _ => return Err(StepError::NotUniversal(i.0)),
            }
            let eliminated = prem.constraint.forall_eliminate(var, inst.universe_of(var)).map_err(|e| match e {
                ConstraintError::MissingVariable(_) => StepError::VariableNotInPremise,
                _ => StepError::RowsMismatch,
            })?;
            expect_same(&eliminated, &j.constraint)
        }
    }
}

fn same_location(expected: Index, found: Index) -> Result<(), StepError> {
    if expected == found {
        Ok(())
    } else {
        Err(StepError::LocationMismatch { expected: expected.0, found: found.0 })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StepViolation {
    /// 1-based step number.
    pub step: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProofReport {
    pub valid: bool,
    pub width: usize,
    pub length: usize,
    pub refutes: bool,
    pub violations: Vec<StepViolation>,
}

/// Checks every step. Steps after an invalid one are still checked against
/// the full prefix.
pub fn check_proof(inst: &QcInstance, proof: &JudgementProof) -> ProofReport {
    let violations: Vec<StepViolation> = proof
        .steps
        .iter()
        .enumerate()
        .filter_map(|(k, s)| {
            check_step(inst, &proof.steps[..k], s).err().map(|e| StepViolation { step: k + 1, message: e.to_string() })
        })
        .collect();
    ProofReport {
        valid: violations.is_empty(),
        width: proof.width(),
        length: proof.len(),
        refutes: proof.refutes(),
        violations,
    }
}

/// Appends steps to a proof, computing each judgement from its premises.
pub struct ProofBuilder<'a> {
    inst: &'a QcInstance,
    pub proof: JudgementProof,
}

impl<'a> ProofBuilder<'a> {
    pub fn new(inst: &'a QcInstance) -> Self {
        ProofBuilder { inst, proof: JudgementProof::default() }
    }

    pub fn judgement(&self, step: usize) -> &Judgement {
        &self.proof.steps[step].judgement
    }

    fn push(&mut self, rule: JudgementRule, judgement: Judgement) -> Result<usize, StepError> {
        let step = JudgementStep { rule, judgement };
        check_step(self.inst, &self.proof.steps, &step)?;
        self.proof.steps.push(step);
        Ok(self.proof.steps.len() - 1)
    }

    pub fn atom(&mut self, i: Index) -> Result<usize, StepError> {
        let Node::Leaf(atom) = self.inst.formula.node(i) else {
            return Err(StepError::NotAnAtom(i.0));
        };
        let c = self.inst.atom_rows(atom);
        self.push(JudgementRule::Atom, Judgement::new(i, c))
    }

    pub fn project(&mut self, p: usize, target: &VarSet) -> Result<usize, StepError> {
        let prem = self.judgement(p).clone();
        let c = prem.constraint.project(target).map_err(|_| StepError::NotSubset)?;
        self.push(JudgementRule::Projection { premise: p }, Judgement::new(prem.location, c))
    }

    pub fn join(&mut self, left: usize, right: usize) -> Result<usize, StepError> {
        let (l, r) = (self.judgement(left), self.judgement(right));
        let j = Judgement::new(l.location, l.constraint.join(&r.constraint));
        self.push(JudgementRule::Join { left, right }, j)
    }

    pub fn up(&mut self, p: usize) -> Result<usize, StepError> {
        let prem = self.judgement(p).clone();
        let parent = self
            .inst
            .formula
            .parent(prem.location)
            .ok_or(StepError::NotParent { parent: 0, child: prem.location.0 })?;
        self.push(JudgementRule::UpwardFlow { premise: p }, Judgement::new(parent, prem.constraint))
    }

    pub fn down(&mut self, p: usize, child: Index) -> Result<usize, StepError> {
        let prem = self.judgement(p).clone();
        self.push(JudgementRule::DownwardFlow { premise: p }, Judgement::new(child, prem.constraint))
    }

    pub fn forall_elim(&mut self, p: usize) -> Result<usize, StepError> {
        let prem = self.judgement(p).clone();
        let parent = self
            .inst
            .formula
            .parent(prem.location)
            .ok_or(StepError::NotParent { parent: 0, child: prem.location.0 })?;
        let Node::Forall(y, _) = self.inst.formula.node(parent) else {
            return Err(StepError::NotUniversal(parent.0));
        };
        let y = *y;
        let c = prem
            .constraint
            .forall_eliminate(y, self.inst.universe_of(y))
            .map_err(|_| StepError::VariableNotInPremise)?;
        self.push(JudgementRule::ForallElimination { premise: p, var: y }, Judgement::new(parent, c))
    }

    pub fn finish(self) -> JudgementProof {
        self.proof
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ExtractError {
    #[error("step {0} does not exist")]
    NoSuchStep(usize),
    #[error("step {step} is invalid: {error}")]
    InvalidPrefix { step: usize, error: StepError },
}

/// The qc-formula `ψ` with `free(ψ) = V` defined by the judgement at
/// `position`: an assignment on `V` is a row iff it satisfies `ψ`.
pub fn extract_defining_formula(
    inst: &QcInstance,
    proof: &JudgementProof,
    position: usize,
) -> Result<QcFormula, ExtractError> {
    if position >= proof.len() {
        return Err(ExtractError::NoSuchStep(position));
    }
    for k in 0..=position {
        check_step(inst, &proof.steps[..k], &proof.steps[k])
            .map_err(|error| ExtractError::InvalidPrefix { step: k + 1, error })?;
    }
    let mut memo: HashMap<usize, Tree<crate::model::Atom>> = HashMap::new();
    let tree = defining_tree(inst, proof, position, &mut memo);
    Ok(crate::model::Formula::from_tree(inst.formula.vars().clone(), tree))
}

fn defining_tree(
    inst: &QcInstance,
    proof: &JudgementProof,
    k: usize,
    memo: &mut HashMap<usize, Tree<crate::model::Atom>>,
) -> Tree<crate::model::Atom> {
    if let Some(t) = memo.get(&k) {
        return t.clone();
    }
    let step = &proof.steps[k];
    let tree = match step.rule {
        JudgementRule::Atom => inst.formula.subtree(step.judgement.location),
        JudgementRule::Projection { premise } => {
            let inner = defining_tree(inst, proof, premise, memo);
            let from = proof.steps[premise].judgement.constraint.var_set();
            let kept = step.judgement.constraint.var_set();
            let dropped: Vec<VarId> = from.difference(&kept).copied().collect();
            dropped.into_iter().rev().fold(inner, |body, v| Tree::exists(v, body))
        }
        JudgementRule::Join { left, right } => {
            Tree::and(vec![defining_tree(inst, proof, left, memo), defining_tree(inst, proof, right, memo)])
        }
        JudgementRule::ForallElimination { premise, var } => {
            Tree::forall(var, defining_tree(inst, proof, premise, memo))
        }
        JudgementRule::UpwardFlow { premise } | JudgementRule::DownwardFlow { premise } => {
            defining_tree(inst, proof, premise, memo)
        }
    };
    memo.insert(k, tree.clone());
    tree
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Refutation {
    /// `B ⊨ φ`; no refutation exists.
    True,
    /// A proof whose last step is an empty judgement at the root.
    Refuted(JudgementProof),
}

/// Derives, bottom-up, a judgement at every location whose defining formula
/// is the subformula itself. The root judgement is `(r, ∅, ∅)` exactly when
/// the instance is false.
pub fn generate_refutation(inst: &QcInstance) -> Refutation {
    let mut b = ProofBuilder::new(inst);
    let root = derive_location(&mut b, inst.formula.root()).expect("generated steps are valid");
    match root {
        Some(p) if b.judgement(p).is_empty() => Refutation::Refuted(b.finish()),
        _ => Refutation::True,
    }
}

/// Returns the step deriving `(i, free(φ(i)), ⟦φ(i)⟧)`, or `None` when the
/// subformula is equivalent to ⊤ with no atoms to derive from.
fn derive_location(b: &mut ProofBuilder<'_>, i: Index) -> Result<Option<usize>, StepError> {
    let f = &b.inst.formula;
    match f.node(i).clone() {
        Node::Leaf(_) => b.atom(i).map(Some),
        Node::True => Ok(None),
        Node::And(children) => {
            let mut acc: Option<usize> = None;
            for c in children {
                if let Some(p) = derive_location(b, c)? {
                    let lifted = b.up(p)?;
                    acc = Some(match acc {
                        None => lifted,
                        Some(prev) => b.join(prev, lifted)?,
                    });
                }
            }
            Ok(acc)
        }
        Node::Exists(x, c) => {
            let Some(p) = derive_location(b, c)? else { return Ok(None) };
            let vars = b.judgement(p).constraint.var_set();
            let p = if vars.contains(&x) {
                let mut rest = vars;
                rest.remove(&x);
                b.project(p, &rest)?
            } else {
                p
            };
            b.up(p).map(Some)
        }
        Node::Forall(y, c) => {
            let Some(p) = derive_location(b, c)? else { return Ok(None) };
            if b.judgement(p).constraint.position(y).is_some() {
                b.forall_elim(p).map(Some)
            } else {
                b.up(p).map(Some)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{running_example, running_example_falsified};
    use crate::model::{Elem, Formula, RelId, RelationSymbol, Signature, SortId, Structure, Tree, VarTable};
    use crate::oracle::{all_assignments, is_true, Evaluator};

    fn x_rows(inst: &QcInstance, names: &[&str]) -> Constraint {
        let x = inst.formula.vars().by_name("x").unwrap();
        Constraint::new(vec![x], names.iter().map(|n| vec![inst.structure.element_by_name(n).unwrap()])).unwrap()
    }

    /// Atom at 4, up to 3, ∀-elim to 2, down twice to 4, atom at 6,
    /// projection at 6.
    fn example_derivation(inst: &QcInstance) -> JudgementProof {
        let mut b = ProofBuilder::new(inst);
        let a4 = b.atom(Index(4)).unwrap();
        let u3 = b.up(a4).unwrap();
        let g2 = b.forall_elim(u3).unwrap();
        let d3 = b.down(g2, Index(3)).unwrap();
        b.down(d3, Index(4)).unwrap();
        let a6 = b.atom(Index(6)).unwrap();
        let x = inst.formula.vars().by_name("x").unwrap();
        b.project(a6, &VarSet::from([x])).unwrap();
        b.finish()
    }

    #[test]
    fn example_derivation_checks() {
        let inst = running_example();
        let p = example_derivation(&inst);
        assert_eq!(p.steps[2].judgement, Judgement::new(Index(2), x_rows(&inst, &["a"])));
        assert_eq!(p.steps[4].judgement, Judgement::new(Index(4), x_rows(&inst, &["a"])));
        assert_eq!(p.steps[6].judgement, Judgement::new(Index(6), x_rows(&inst, &["a", "b", "c"])));
        let r = check_proof(&inst, &p);
        assert!(r.valid, "{:?}", r.violations);
        assert_eq!((r.width, r.length, r.refutes), (2, 7, false));
    }

    #[test]
    fn underivable_claim_is_rejected() {
        let inst = running_example();
        let mut p = example_derivation(&inst);
        let g = x_rows(&inst, &["a"]);
        // (6, {x}, G) by downward flow from (5, ...) is impossible: no judgement
        // at 5 carries G, and projection from the atom gives H.
        for rule in [
            JudgementRule::DownwardFlow { premise: 2 },
            JudgementRule::Projection { premise: 5 },
            JudgementRule::UpwardFlow { premise: 4 },
            JudgementRule::Atom,
        ] {
            let step = JudgementStep { rule, judgement: Judgement::new(Index(6), g.clone()) };
            assert!(check_step(&inst, &p.steps, &step).is_err(), "{rule:?}");
        }
        p.steps.push(JudgementStep {
            rule: JudgementRule::Projection { premise: 5 },
            judgement: Judgement::new(Index(6), g),
        });
        let r = check_proof(&inst, &p);
        assert!(!r.valid);
        assert_eq!(r.violations[0].step, 8);
    }

    #[test]
    fn side_conditions_are_named() {
        let inst = running_example();
        let p = example_derivation(&inst);
        let c = p.steps[0].judgement.constraint.clone();
        let bad_parent = JudgementStep {
            rule: JudgementRule::UpwardFlow { premise: 0 },
            judgement: Judgement::new(Index(2), c.clone()),
        };
        assert!(matches!(
            check_step(&inst, &p.steps, &bad_parent),
            Err(StepError::NotParent { .. }) | Err(StepError::VariablesNotFree(_))
        ));
        let escape = JudgementStep {
            rule: JudgementRule::UpwardFlow { premise: 1 },
            judgement: Judgement::new(Index(2), c.clone()),
        };
        assert_eq!(check_step(&inst, &p.steps, &escape), Err(StepError::VariablesNotFree(2)));
        let wrong_rows = JudgementStep {
            rule: JudgementRule::UpwardFlow { premise: 0 },
            judgement: Judgement::new(Index(3), Constraint::empty_on(&c.var_set())),
        };
        assert_eq!(check_step(&inst, &p.steps, &wrong_rows), Err(StepError::RowsMismatch));
        let future =
            JudgementStep { rule: JudgementRule::UpwardFlow { premise: 40 }, judgement: Judgement::new(Index(3), c) };
        assert_eq!(check_step(&inst, &p.steps, &future), Err(StepError::PremiseOutOfRange(40)));
    }

    #[test]
    fn empty_proof_report() {
        let r = check_proof(&running_example(), &JudgementProof::default());
        assert!(r.valid);
        assert_eq!((r.length, r.width, r.refutes), (0, 0, false));
    }

    fn assert_defines(inst: &QcInstance, proof: &JudgementProof, k: usize) -> QcFormula {
        let psi = extract_defining_formula(inst, proof, k).unwrap();
        let c = &proof.steps[k].judgement.constraint;
        assert_eq!(psi.free(psi.root()), &c.var_set());
        assert!(psi.width() <= proof.width());
        let mut ev = Evaluator::new(&psi, &inst.structure);
        for a in all_assignments(c.vars(), |v| inst.universe_of(v).to_vec()) {
            assert_eq!(c.contains(&a), ev.eval(psi.root(), &a).unwrap(), "step {k}, {a:?}");
        }
        psi
    }

    #[test]
    fn defining_formulas_of_example() {
        let inst = running_example();
        let p = example_derivation(&inst);
        for k in 0..p.len() {
            assert_defines(&inst, &p, k);
        }
        let psi = assert_defines(&inst, &p, 2);
        let x = inst.formula.vars().by_name("x").unwrap();
        let y = inst.formula.vars().by_name("y").unwrap();
        assert_eq!(
            psi.to_tree(),
            Tree::forall(y, Tree::Leaf(crate::model::Atom { relation: RelId(0), args: vec![x, y] }))
        );
        assert_eq!(assert_defines(&inst, &p, 0).to_tree(), inst.formula.subtree(Index(4)));
        assert_eq!(assert_defines(&inst, &p, 6).to_tree(), Tree::exists(y, inst.formula.subtree(Index(6))));
    }

    #[test]
    fn extraction_rejects_invalid_prefix() {
        let inst = running_example();
        let mut p = example_derivation(&inst);
        p.steps[1].judgement.location = Index(2);
        assert!(matches!(extract_defining_formula(&inst, &p, 3), Err(ExtractError::InvalidPrefix { step: 2, .. })));
        assert_eq!(extract_defining_formula(&inst, &p, 99), Err(ExtractError::NoSuchStep(99)));
    }

    #[test]
    fn true_example_has_no_refutation() {
        assert_eq!(generate_refutation(&running_example()), Refutation::True);
    }

    #[test]
    fn falsified_example_is_refuted() {
        let inst = running_example_falsified();
        assert!(!is_true(&inst));
        let Refutation::Refuted(p) = generate_refutation(&inst) else { panic!("expected a refutation") };
        let r = check_proof(&inst, &p);
        assert!(r.valid && r.refutes);
        assert!(r.width <= inst.formula.width());
        let last = p.last().unwrap();
        assert_eq!(last.location, inst.formula.root());
        assert!(last.is_empty() && last.width() == 0);
    }

    #[test]
    fn empty_relation_refuted_at_atom_width() {
        let sig = Signature {
            sorts: vec!["s".into()],
            relations: vec![RelationSymbol { name: "R".into(), arity: vec![SortId(0); 3] }],
        };
        let mut st = Structure::new(sig);
        st.add_element(SortId(0), "p");
        st.add_element(SortId(0), "q");
        let mut vt = VarTable::new();
        let vs: Vec<VarId> = ["a", "b", "c"].iter().map(|n| vt.get_or_insert(n, SortId(0)).unwrap()).collect();
        let atom = Tree::Leaf(crate::model::Atom { relation: RelId(0), args: vs.clone() });
        let tree = vs.iter().rev().fold(atom, |t, &v| Tree::exists(v, t));
        let inst = QcInstance::new(Formula::from_tree(vt, tree), st);
        let Refutation::Refuted(p) = generate_refutation(&inst) else { panic!() };
        assert!(p.steps[0].judgement.is_empty());
        assert_eq!(p.width(), 3);
        assert!(check_proof(&inst, &p).valid);
        let _ = Elem(0);
    }

    #[test]
    fn top_is_true() {
        let inst = QcInstance::new(Formula::from_tree(VarTable::new(), Tree::True), running_example().structure);
        assert_eq!(generate_refutation(&inst), Refutation::True);
    }
}
