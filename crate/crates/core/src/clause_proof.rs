//! Clause judgement proofs on QCBFs, and the closure set used to simulate
//! Q-resolution on prenex instances.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use crate::clause::{resolvent, Clause, ClauseError};
use crate::judgement::StepViolation;
use crate::model::{Index, Node, QcbfFormula, VarId};

/// `(i, α)` with `vars(α) ⊆ free(ψ(i))`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClauseJudgement {
    pub location: Index,
    pub clause: Clause,
}

impl ClauseJudgement {
    pub fn new(location: Index, clause: Clause) -> Self {
        ClauseJudgement { location, clause }
    }

    pub fn width(&self) -> usize {
        self.clause.len()
    }
}

/// Premises are 0-based positions of earlier steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ClauseRule {
    Clause,
    Resolve { left: usize, right: usize, pivot: VarId },
    UpwardFlow { premise: usize },
    ForallRemoval { premise: usize, var: VarId },
    DownwardFlow { premise: usize },
}

impl ClauseRule {
    pub fn premises(&self) -> Vec<usize> {
        match *self {
            ClauseRule::Clause => vec![],
            ClauseRule::Resolve { left, right, .. } => vec![left, right],
            ClauseRule::UpwardFlow { premise }
            | ClauseRule::ForallRemoval { premise, .. }
            | ClauseRule::DownwardFlow { premise } => vec![premise],
        }
    }

    pub fn is_flow(&self) -> bool {
        matches!(self, ClauseRule::UpwardFlow { .. } | ClauseRule::DownwardFlow { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ClauseRule::Clause => "clause",
            ClauseRule::Resolve { .. } => "resolve",
            ClauseRule::UpwardFlow { .. } => "up",
            ClauseRule::ForallRemoval { .. } => "forall-remove",
            ClauseRule::DownwardFlow { .. } => "down",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ClauseStep {
    pub rule: ClauseRule,
    pub judgement: ClauseJudgement,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClauseProof {
    pub steps: Vec<ClauseStep>,
}

impl ClauseProof {
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
        self.steps.iter().any(|s| s.judgement.clause.is_empty())
    }

    pub fn non_flow_count(&self) -> usize {
        self.steps.iter().filter(|s| !s.rule.is_flow()).count()
    }

    /// Every step is a premise of at most one later step.
    pub fn is_tree_like(&self) -> bool {
        let mut used = vec![0usize; self.steps.len()];
        for s in &self.steps {
            for p in s.rule.premises() {
                if p < used.len() {
                    used[p] += 1;
                }
            }
        }
        used.iter().all(|&n| n <= 1)
    }

    pub fn last(&self) -> Option<&ClauseJudgement> {
        self.steps.last().map(|s| &s.judgement)
    }

    /// Keeps only the steps the last step depends on, renumbering premises.
    pub fn trimmed(&self) -> ClauseProof {
        let Some(last) = self.steps.len().checked_sub(1) else {
            return ClauseProof::default();
        };
        let keep = needed_steps(last, |k| self.steps[k].rule.premises());
        let mut renumber = BTreeMap::new();
        let mut out = ClauseProof::default();
        for k in keep {
            let mut step = self.steps[k].clone();
            step.rule = match step.rule {
                ClauseRule::Clause => ClauseRule::Clause,
                ClauseRule::Resolve { left, right, pivot } => {
                    ClauseRule::Resolve { left: renumber[&left], right: renumber[&right], pivot }
                }
                ClauseRule::UpwardFlow { premise } => ClauseRule::UpwardFlow { premise: renumber[&premise] },
                ClauseRule::ForallRemoval { premise, var } => {
                    ClauseRule::ForallRemoval { premise: renumber[&premise], var }
                }
                ClauseRule::DownwardFlow { premise } => ClauseRule::DownwardFlow { premise: renumber[&premise] },
            };
            renumber.insert(k, out.steps.len());
            out.steps.push(step);
        }
        out
    }

    /// Duplicates shared sub-derivations so that every step has at most one
    /// successor. The result ends in a copy of the last step.
    pub fn unfolded(&self) -> ClauseProof {
        let mut out = ClauseProof::default();
        if let Some(last) = self.steps.len().checked_sub(1) {
            self.unfold_into(last, &mut out);
        }
        out
    }

    fn unfold_into(&self, k: usize, out: &mut ClauseProof) -> usize {
        let step = &self.steps[k];
        let rule = match step.rule {
            ClauseRule::Clause => ClauseRule::Clause,
            ClauseRule::Resolve { left, right, pivot } => {
                let left = self.unfold_into(left, out);
                let right = self.unfold_into(right, out);
                ClauseRule::Resolve { left, right, pivot }
            }
            ClauseRule::UpwardFlow { premise } => ClauseRule::UpwardFlow { premise: self.unfold_into(premise, out) },
            ClauseRule::ForallRemoval { premise, var } => {
                ClauseRule::ForallRemoval { premise: self.unfold_into(premise, out), var }
            }
            ClauseRule::DownwardFlow { premise } => {
                ClauseRule::DownwardFlow { premise: self.unfold_into(premise, out) }
            }
        };
        out.steps.push(ClauseStep { rule, judgement: step.judgement.clone() });
        out.steps.len() - 1
    }
}

/// Ancestors of `last` (inclusive) in increasing order.
pub(crate) fn needed_steps(last: usize, premises: impl Fn(usize) -> Vec<usize>) -> BTreeSet<usize> {
    let mut keep = BTreeSet::new();
    let mut stack = vec![last];
    while let Some(k) = stack.pop() {
        if keep.insert(k) {
            stack.extend(premises(k));
        }
    }
    keep
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ClauseStepError {
    #[error("premise {0} is not an earlier step")]
    PremiseOutOfRange(usize),
    #[error("location {0} does not exist")]
    UnknownLocation(u32),
    #[error("clause variables escape free(ψ({0}))")]
    VariablesNotFree(u32),
    #[error("ψ({0}) is not this clause")]
    NotThatClause(u32),
    #[error("{0}")]
    Resolution(ClauseError),
    #[error("clause differs from the rule's result")]
    ClauseMismatch,
    #[error("premise sits at location {found}, rule needs {expected}")]
    LocationMismatch { expected: u32, found: u32 },
    #[error("{parent} is not the parent of {child}")]
    NotParent { parent: u32, child: u32 },
    #[error("ψ({0}) is not a universal quantification of the named variable")]
    NotUniversal(u32),
}

fn premise(prefix: &[ClauseStep], at: usize) -> Result<&ClauseJudgement, ClauseStepError> {
    prefix.get(at).map(|s| &s.judgement).ok_or(ClauseStepError::PremiseOutOfRange(at))
}

fn expect_parent(f: &QcbfFormula, parent: Index, child: Index) -> Result<(), ClauseStepError> {
    if f.parent(child) == Some(parent) {
        Ok(())
    } else {
        Err(ClauseStepError::NotParent { parent: parent.0, child: child.0 })
    }
}

fn expect_clause(expected: &Clause, got: &Clause) -> Result<(), ClauseStepError> {
    if expected == got {
        Ok(())
    } else {
        Err(ClauseStepError::ClauseMismatch)
    }
}

pub fn check_clause_step(f: &QcbfFormula, prefix: &[ClauseStep], step: &ClauseStep) -> Result<(), ClauseStepError> {
    let j = &step.judgement;
    let i = j.location;
    if !f.contains(i) {
        return Err(ClauseStepError::UnknownLocation(i.0));
    }
    if !j.clause.vars().is_subset(f.free(i)) {
        return Err(ClauseStepError::VariablesNotFree(i.0));
    }
    match step.rule {
        ClauseRule::Clause => match f.node(i) {
            Node::Leaf(c) if *c == j.clause => Ok(()),
            _ => Err(ClauseStepError::NotThatClause(i.0)),
        },
        ClauseRule::Resolve { left, right, pivot } => {
            let (l, r) = (premise(prefix, left)?, premise(prefix, right)?);
            for p in [l, r] {
                if p.location != i {
                    return Err(ClauseStepError::LocationMismatch { expected: i.0, found: p.location.0 });
                }
            }
            let res = resolvent(&l.clause, &r.clause, pivot).map_err(ClauseStepError::Resolution)?;
            expect_clause(&res, &j.clause)
        }
        ClauseRule::UpwardFlow { premise: p } => {
            let p = premise(prefix, p)?;
            expect_parent(f, i, p.location)?;
            expect_clause(&p.clause, &j.clause)
        }
        ClauseRule::DownwardFlow { premise: p } => {
            let p = premise(prefix, p)?;
            expect_parent(f, p.location, i)?;
            expect_clause(&p.clause, &j.clause)
        }
        ClauseRule::ForallRemoval { premise: p, var } => {
            let p = premise(prefix, p)?;
            expect_parent(f, i, p.location)?;
            match f.node(i) {
                Node::Forall(y, _) if *y == var => {}
                _ => return Err(ClauseStepError::NotUniversal(i.0)),
            }
            expect_clause(&p.clause.without(var), &j.clause)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClauseProofReport {
    pub valid: bool,
    pub width: usize,
    pub length: usize,
    pub refutes: bool,
    pub tree_like: bool,
    pub non_flow_count: usize,
    pub violations: Vec<StepViolation>,
}

pub fn check_clause_proof(f: &QcbfFormula, proof: &ClauseProof) -> ClauseProofReport {
    let violations: Vec<StepViolation> = proof
        .steps
        .iter()
        .enumerate()
        .filter_map(|(k, s)| {
            check_clause_step(f, &proof.steps[..k], s)
                .err()
                .map(|e| StepViolation { step: k + 1, message: e.to_string() })
        })
        .collect();
    ClauseProofReport {
        valid: violations.is_empty(),
        width: proof.width(),
        length: proof.len(),
        refutes: proof.refutes(),
        tree_like: proof.is_tree_like(),
        non_flow_count: proof.non_flow_count(),
        violations,
    }
}

/// Appends checked steps, computing each judgement from its premises.
pub struct ClauseProofBuilder<'a> {
    f: &'a QcbfFormula,
    pub proof: ClauseProof,
}

impl<'a> ClauseProofBuilder<'a> {
    pub fn new(f: &'a QcbfFormula) -> Self {
        ClauseProofBuilder { f, proof: ClauseProof::default() }
    }

    pub fn judgement(&self, step: usize) -> &ClauseJudgement {
        &self.proof.steps[step].judgement
    }

    fn push(&mut self, rule: ClauseRule, judgement: ClauseJudgement) -> Result<usize, ClauseStepError> {
        let step = ClauseStep { rule, judgement };
        check_clause_step(self.f, &self.proof.steps, &step)?;
        self.proof.steps.push(step);
        Ok(self.proof.steps.len() - 1)
    }

    pub fn clause(&mut self, i: Index) -> Result<usize, ClauseStepError> {
        let Node::Leaf(c) = self.f.node(i) else {
            return Err(ClauseStepError::NotThatClause(i.0));
        };
        let c = c.clone();
        self.push(ClauseRule::Clause, ClauseJudgement::new(i, c))
    }

    pub fn resolve(&mut self, left: usize, right: usize, pivot: VarId) -> Result<usize, ClauseStepError> {
        let (l, r) = (self.judgement(left), self.judgement(right));
        let c = resolvent(&l.clause, &r.clause, pivot).map_err(ClauseStepError::Resolution)?;
        let j = ClauseJudgement::new(l.location, c);
        self.push(ClauseRule::Resolve { left, right, pivot }, j)
    }

    pub fn up(&mut self, p: usize) -> Result<usize, ClauseStepError> {
        let prem = self.judgement(p).clone();
        let parent =
            self.f.parent(prem.location).ok_or(ClauseStepError::NotParent { parent: 0, child: prem.location.0 })?;
        self.push(ClauseRule::UpwardFlow { premise: p }, ClauseJudgement::new(parent, prem.clause))
    }

    pub fn down(&mut self, p: usize, child: Index) -> Result<usize, ClauseStepError> {
        let prem = self.judgement(p).clone();
        self.push(ClauseRule::DownwardFlow { premise: p }, ClauseJudgement::new(child, prem.clause))
    }

    pub fn forall_remove(&mut self, p: usize) -> Result<usize, ClauseStepError> {
        let prem = self.judgement(p).clone();
        let parent =
            self.f.parent(prem.location).ok_or(ClauseStepError::NotParent { parent: 0, child: prem.location.0 })?;
        let Node::Forall(y, _) = self.f.node(parent) else {
            return Err(ClauseStepError::NotUniversal(parent.0));
        };
        let y = *y;
        self.push(
            ClauseRule::ForallRemoval { premise: p, var: y },
            ClauseJudgement::new(parent, prem.clause.without(y)),
        )
    }

    /// Upward flows from the location of `p` until `target` is reached.
    pub fn up_to(&mut self, mut p: usize, target: Index) -> Result<usize, ClauseStepError> {
        while self.judgement(p).location != target {
            p = self.up(p)?;
        }
        Ok(p)
    }

    /// Downward flows from the location of `p` (an ancestor of `target`)
    /// along the path to `target`.
    pub fn down_to(&mut self, mut p: usize, target: Index) -> Result<usize, ClauseStepError> {
        let from = self.judgement(p).location;
        let path = self.f.path_to_root(target);
        let Some(pos) = path.iter().position(|&k| k == from) else {
            return Err(ClauseStepError::NotParent { parent: from.0, child: target.0 });
        };
        for &k in path[..pos].iter().rev() {
            p = self.down(p, k)?;
        }
        Ok(p)
    }

    pub fn finish(self) -> ClauseProof {
        self.proof
    }
}

/// How a member of the closure set was first obtained.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Origin {
    Input(Index),
    Resolvent { left: Clause, right: Clause, pivot: VarId },
    Removal { from: Clause, var: VarId },
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum QresError {
    #[error("formula is not prenex with a conjunction of clauses below the prefix")]
    NotPrenex,
    #[error("target clause is not in the closure set")]
    NotInClosure,
    #[error("closure exceeded {0} clauses")]
    ResourceLimit(usize),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct QresOptions {
    /// Restrict resolution pivots to existentially quantified variables.
    pub existential_pivots: bool,
    /// Abort once the closure holds more clauses than this.
    pub max_clauses: Option<usize>,
}

/// The closure set `𝒞` of a prenex QCBF, with one origin per clause.
#[derive(Clone, Debug)]
pub struct Closure {
    pub matrix: Index,
    pub clauses: BTreeMap<Clause, Origin>,
}

impl Closure {
    pub fn contains(&self, c: &Clause) -> bool {
        self.clauses.contains_key(c)
    }

    pub fn contains_empty(&self) -> bool {
        self.contains(&Clause::empty())
    }
}

/// Clause leaves of the quantifier-free part rooted at `matrix`, or `None`
/// when it contains something other than conjunctions, clauses and ⊤.
fn matrix_leaves(f: &QcbfFormula, matrix: Index) -> Option<Vec<Index>> {
    let mut out = Vec::new();
    let mut stack = vec![matrix];
    while let Some(i) = stack.pop() {
        match f.node(i) {
            Node::Leaf(_) => out.push(i),
            Node::True => {}
            Node::And(cs) => stack.extend(cs.iter().rev()),
            _ => return None,
        }
    }
    Some(out)
}

/// Computes `𝒞` by saturation.
pub fn qres_closure(f: &QcbfFormula, opts: QresOptions) -> Result<Closure, QresError> {
    let matrix = f.prenex_matrix().ok_or(QresError::NotPrenex)?;
    let leaves = matrix_leaves(f, matrix).ok_or(QresError::NotPrenex)?;
    // Binders on the path from the matrix to the root, innermost first.
    let binders: Vec<(VarId, bool)> =
        f.path_to_root(matrix).into_iter().filter_map(|k| f.node(k).quantifier()).collect();
    let innermost = |v: VarId| binders.iter().find(|(u, _)| *u == v).map(|&(_, univ)| univ);

    let mut clauses: BTreeMap<Clause, Origin> = BTreeMap::new();
    let mut queue = VecDeque::new();
    let add = |c: Clause, o: Origin, clauses: &mut BTreeMap<Clause, Origin>, queue: &mut VecDeque<Clause>| {
        if !clauses.contains_key(&c) {
            clauses.insert(c.clone(), o);
            queue.push_back(c);
        }
    };
    for &l in &leaves {
        let Node::Leaf(c) = f.node(l) else { unreachable!() };
        add(c.clone(), Origin::Input(l), &mut clauses, &mut queue);
    }
    while let Some(c) = queue.pop_front() {
        if let Some(limit) = opts.max_clauses {
            if clauses.len() > limit {
                return Err(QresError::ResourceLimit(limit));
            }
        }
        // Universal removal of the innermost variable of c.
        let first = binders.iter().find(|(u, _)| c.literal_of(*u).is_some());
        if let Some(&(y, true)) = first {
            add(c.without(y), Origin::Removal { from: c.clone(), var: y }, &mut clauses, &mut queue);
        }
        let others: Vec<Clause> = clauses.keys().cloned().collect();
        for d in others {
            for l in c.literals() {
                if opts.existential_pivots && innermost(l.var) != Some(false) {
                    continue;
                }
                if d.contains(l.complement()) {
                    if let Ok(r) = resolvent(&c, &d, l.var) {
                        let o = Origin::Resolvent { left: c.clone(), right: d.clone(), pivot: l.var };
                        add(r, o, &mut clauses, &mut queue);
                    }
                }
            }
        }
    }
    Ok(Closure { matrix, clauses })
}

/// A clause judgement proof ending in `(c, target)` where `c` is the index
/// of the quantifier-free part, if `target ∈ 𝒞`.
pub fn qres_closure_derive(f: &QcbfFormula, target: &Clause, opts: QresOptions) -> Result<ClauseProof, QresError> {
    let closure = qres_closure(f, opts)?;
    if !closure.contains(target) {
        return Err(QresError::NotInClosure);
    }
    let mut b = ClauseProofBuilder::new(f);
    let mut memo = BTreeMap::new();
    derive_member(&mut b, &closure, target, &mut memo);
    Ok(b.finish())
}

fn derive_member(
    b: &mut ClauseProofBuilder<'_>,
    closure: &Closure,
    c: &Clause,
    memo: &mut BTreeMap<Clause, usize>,
) -> usize {
    if let Some(&k) = memo.get(c) {
        return k;
    }
    let matrix = closure.matrix;
    let step = match &closure.clauses[c] {
        Origin::Input(leaf) => {
            let k = b.clause(*leaf).expect("input clause");
            b.up_to(k, matrix).expect("clause variables are free up to the matrix")
        }
        Origin::Resolvent { left, right, pivot } => {
            let l = derive_member(b, closure, left, memo);
            let r = derive_member(b, closure, right, memo);
            b.resolve(l, r, *pivot).expect("closure resolvent")
        }
        Origin::Removal { from, var } => {
            let k = derive_member(b, closure, from, memo);
            let j = b.proof.steps[k].judgement.location;
            let binder = b.f.binder_above(j, *var).expect("universal binder above the matrix");
            let child = b.f.quantifier_child(binder).expect("quantifier");
            let k = b.up_to(k, child).expect("no variable of the clause is bound below the binder");
            let k = b.forall_remove(k).expect("innermost universal");
            b.down_to(k, matrix).expect("path back to the matrix")
        }
    };
    memo.insert(c.clone(), step);
    step
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clause::Literal;
    use crate::fixtures::{parse_clause, prenex_qbf};
    use crate::oracle::qcbf_is_true;

    fn cl(f: &QcbfFormula, text: &str) -> Clause {
        let mut vt = f.vars().clone();
        parse_clause(&mut vt, text)
    }

    #[test]
    fn hand_refutation_checks() {
        // ∃x ∀y ((¬y) ∧ (y ∨ ¬x) ∧ (x)), locations 1 ∃x, 2 ∀y, 3 ∧, 4-6 clauses.
        let f = prenex_qbf("e x a y", &["-y", "y -x", "x"]);
        assert!(!qcbf_is_true(&f));
        let mut b = ClauseProofBuilder::new(&f);
        let a = b.clause(Index(4)).unwrap();
        let a = b.up(a).unwrap();
        let c = b.clause(Index(5)).unwrap();
        let c = b.up(c).unwrap();
        let y = f.vars().by_name("y").unwrap();
        let x = f.vars().by_name("x").unwrap();
        let r = b.resolve(a, c, y).unwrap();
        assert_eq!(b.judgement(r).clause, cl(&f, "-x"));
        let d = b.clause(Index(6)).unwrap();
        let d = b.up(d).unwrap();
        b.resolve(r, d, x).unwrap();
        let p = b.finish();
        let rep = check_clause_proof(&f, &p);
        assert!(rep.valid && rep.refutes && rep.tree_like);
        assert_eq!((rep.length, rep.width, rep.non_flow_count), (8, 2, 5));
    }

    #[test]
    fn single_clause_step() {
        let f = prenex_qbf("e x e y", &["x y", "-x"]);
        let mut b = ClauseProofBuilder::new(&f);
        b.clause(Index(4)).unwrap();
        let rep = check_clause_proof(&f, &b.finish());
        assert!(rep.valid && !rep.refutes);
        assert_eq!(rep.width, 2);
    }

    #[test]
    fn vacuous_removal_keeps_clause() {
        let f = prenex_qbf("e x a y", &["x", "y"]);
        let mut b = ClauseProofBuilder::new(&f);
        let k = b.clause(Index(4)).unwrap();
        let k = b.up(k).unwrap();
        let k = b.forall_remove(k).unwrap();
        assert_eq!(b.judgement(k).clause, cl(&f, "x"));
        assert_eq!(b.judgement(k).location, Index(2));
    }

    #[test]
    fn violations_are_reported() {
        let f = prenex_qbf("e x a y", &["-y", "y -x", "x"]);
        let wrong_leaf =
            ClauseStep { rule: ClauseRule::Clause, judgement: ClauseJudgement::new(Index(4), cl(&f, "y")) };
        assert_eq!(check_clause_step(&f, &[], &wrong_leaf), Err(ClauseStepError::NotThatClause(4)));
        // y is not free at the root.
        let escaped = ClauseStep {
            rule: ClauseRule::UpwardFlow { premise: 0 },
            judgement: ClauseJudgement::new(Index(1), cl(&f, "-y")),
        };
        assert_eq!(check_clause_step(&f, &[], &escaped), Err(ClauseStepError::VariablesNotFree(1)));
        let mut b = ClauseProofBuilder::new(&f);
        let a = b.clause(Index(4)).unwrap();
        let c = b.clause(Index(5)).unwrap();
        let y = f.vars().by_name("y").unwrap();
        assert!(b.resolve(a, c, y).is_err());
        let mut p = b.finish();
        p.steps.push(p.steps[0].clone());
        p.steps[1].rule = ClauseRule::UpwardFlow { premise: 0 };
        let rep = check_clause_proof(&f, &p);
        assert!(!rep.valid);
        assert_eq!(rep.violations[0].step, 2);
    }

    #[test]
    fn tree_like_detection() {
        let f = prenex_qbf("e x", &["x", "-x"]);
        let mut b = ClauseProofBuilder::new(&f);
        let a = b.clause(Index(3)).unwrap();
        let a = b.up(a).unwrap();
        b.down(a, Index(3)).unwrap();
        b.down(a, Index(3)).unwrap();
        let p = b.finish();
        assert!(!p.is_tree_like());
        assert!(check_clause_proof(&f, &p).valid);
        let u = p.unfolded();
        assert!(u.is_tree_like());
        assert!(check_clause_proof(&f, &u).valid);
        assert_eq!(u.last(), p.last());
    }

    #[test]
    fn closure_refutes_exists_forall() {
        let f = prenex_qbf("e x a y", &["x y", "-x y"]);
        assert!(!qcbf_is_true(&f));
        let closure = qres_closure(&f, QresOptions::default()).unwrap();
        assert!(closure.contains(&cl(&f, "y")));
        assert!(closure.contains_empty());
        let p = qres_closure_derive(&f, &Clause::empty(), QresOptions::default()).unwrap();
        let rep = check_clause_proof(&f, &p);
        assert!(rep.valid && rep.refutes);
        let last = p.last().unwrap();
        assert_eq!((last.location, last.clause.is_empty()), (Index(3), true));
    }

    #[test]
    fn input_target_is_two_steps() {
        let f = prenex_qbf("e x a y", &["x y", "-x y"]);
        let p = qres_closure_derive(&f, &cl(&f, "x y"), QresOptions::default()).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.steps[1].rule, ClauseRule::UpwardFlow { premise: 0 });
    }

    #[test]
    fn true_formula_has_no_empty_clause() {
        let f = prenex_qbf("a y e x", &["x y", "-x -y"]);
        assert!(qcbf_is_true(&f));
        assert_eq!(
            qres_closure_derive(&f, &Clause::empty(), QresOptions::default()).unwrap_err(),
            QresError::NotInClosure
        );
    }

    #[test]
    fn removal_waits_for_inner_variables() {
        // y is outer to x, so (x ∨ y) may not lose y until x is gone.
        let f = prenex_qbf("a y e x", &["x y"]);
        let closure = qres_closure(&f, QresOptions::default()).unwrap();
        assert!(!closure.contains(&cl(&f, "x")));
        let g = prenex_qbf("e x a y", &["x y"]);
        assert!(qres_closure(&g, QresOptions::default()).unwrap().contains(&cl(&g, "x")));
    }

    #[test]
    fn existential_pivot_restriction() {
        // Resolving on universal y is only allowed by default.
        let f = prenex_qbf("e x a y e z", &["x y z", "-y z"]);
        let open = qres_closure(&f, QresOptions::default()).unwrap();
        let strict = qres_closure(&f, QresOptions { existential_pivots: true, ..Default::default() }).unwrap();
        assert!(open.contains(&cl(&f, "x z")));
        assert!(!strict.contains(&cl(&f, "x z")));
    }

    #[test]
    fn non_prenex_rejected() {
        let mut vt = crate::model::VarTable::new();
        let x = vt.get_or_insert("x", crate::model::SortId(0)).unwrap();
        let lit = |p| crate::model::Tree::Leaf(Clause::new(vec![Literal { var: x, positive: p }]).unwrap());
        let t = crate::model::Tree::and(vec![
            crate::model::Tree::exists(x, lit(true)),
            crate::model::Tree::exists(x, lit(false)),
        ]);
        let f = crate::model::Formula::from_tree(vt, t);
        assert_eq!(qres_closure(&f, QresOptions::default()).unwrap_err(), QresError::NotPrenex);
    }
}
