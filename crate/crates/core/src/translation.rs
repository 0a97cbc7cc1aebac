//! QCBF to QCSP translation and the proof translations between clause
//! judgement proofs and constraint judgement proofs.

use std::collections::{BTreeMap, BTreeSet};

use crate::clause::Clause;
use crate::clause_proof::{check_clause_proof, ClauseProof, ClauseProofBuilder, ClauseRule};
use crate::constraint::Constraint;
use crate::judgement::{check_proof, JudgementProof, JudgementRule, ProofBuilder};
use crate::model::{
    Atom, Elem, Formula, Index, Node, QcInstance, QcbfFormula, RelId, RelationSymbol, Signature, SortId, Structure,
    VarId, VarSet, FALSE, TRUE,
};
use crate::oracle::all_assignments;

/// Boolean assignment on a set of propositional variables.
pub type BoolAssignment = BTreeMap<VarId, bool>;

/// Relation introduced for each clause leaf.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TranslationMap {
    pub relation_of: BTreeMap<Index, RelId>,
}

pub fn bool_elem(b: bool) -> Elem {
    if b {
        TRUE
    } else {
        FALSE
    }
}

/// One-sorted instance over `{0, 1}` where each clause leaf becomes an atom
/// over a fresh relation `C<index>` holding the clause's satisfying
/// assignments. Indices are unchanged.
pub fn qcsp_translation(f: &QcbfFormula) -> (QcInstance, TranslationMap) {
    let vars = f.vars();
    let mut relations = Vec::new();
    let mut relation_of = BTreeMap::new();
    let mut args_of = BTreeMap::new();
    for i in f.indices() {
        if let Node::Leaf(c) = f.node(i) {
            let mut args: Vec<VarId> = c.vars().into_iter().collect();
            args.sort_by(|a, b| vars.name(*a).cmp(vars.name(*b)));
            relation_of.insert(i, RelId(relations.len() as u32));
            relations.push(RelationSymbol { name: format!("C{}", i.0), arity: vec![SortId(0); args.len()] });
            args_of.insert(i, args);
        }
    }
    let mut st = Structure::new(Signature { sorts: vec!["s".into()], relations });
    st.add_element(SortId(0), "0");
    st.add_element(SortId(0), "1");
    let nodes = f
        .nodes()
        .iter()
        .zip(f.indices())
        .map(|(n, i)| match n {
            Node::Leaf(c) => {
                let args = args_of[&i].clone();
                let rel = relation_of[&i];
                for a in all_assignments(&args, |_| vec![FALSE, TRUE]) {
                    let g: BoolAssignment = a.iter().map(|(&v, &e)| (v, e == TRUE)).collect();
                    if c.is_satisfied_by(&g) {
                        st.interpretations[rel.ix()].insert(args.iter().map(|v| a[v]).collect());
                    }
                }
                Node::Leaf(Atom { relation: rel, args })
            }
            Node::True => Node::True,
            Node::And(cs) => Node::And(cs.clone()),
            Node::Exists(v, c) => Node::Exists(*v, *c),
            Node::Forall(v, c) => Node::Forall(*v, *c),
        })
        .collect();
    let formula = Formula::from_nodes(vars.clone(), nodes, f.root()).expect("same shape as the input");
    (QcInstance::new(formula, st), TranslationMap { relation_of })
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TranslationError {
    #[error("input proof is invalid at step {step}: {message}")]
    InvalidInput { step: usize, message: String },
}

/// Translates a valid clause judgement proof of `f` into a constraint
/// judgement proof of its translation `inst`.
pub fn clause_to_constraint_proof(
    f: &QcbfFormula,
    inst: &QcInstance,
    cp: &ClauseProof,
) -> Result<JudgementProof, TranslationError> {
    let report = check_clause_proof(f, cp);
    if let Some(v) = report.violations.first() {
        return Err(TranslationError::InvalidInput { step: v.step, message: v.message.clone() });
    }
    let mut b = ProofBuilder::new(inst);
    let mut image = Vec::with_capacity(cp.len());
    for step in &cp.steps {
        let i = step.judgement.location;
        let k = match step.rule {
            ClauseRule::Clause => b.atom(i),
            ClauseRule::Resolve { left, right, .. } => {
                let j = b.join(image[left], image[right]).expect("same location");
                b.project(j, &step.judgement.clause.vars())
            }
            ClauseRule::UpwardFlow { premise } => b.up(image[premise]),
            ClauseRule::DownwardFlow { premise } => b.down(image[premise], i),
            ClauseRule::ForallRemoval { premise, var } => {
                if b.judgement(image[premise]).constraint.position(var).is_some() {
                    b.forall_elim(image[premise])
                } else {
                    b.up(image[premise])
                }
            }
        }
        .expect("translated step is valid");
        image.push(k);
    }
    Ok(b.finish())
}

/// Assignments on the constraint's variables (over `{0, 1}`) outside its
/// rows.
pub fn missing_assignments(c: &Constraint) -> Vec<BoolAssignment> {
    all_assignments(c.vars(), |_| vec![FALSE, TRUE])
        .into_iter()
        .filter(|a| !c.contains(a))
        .map(|a| a.into_iter().map(|(v, e)| (v, e == TRUE)).collect())
        .collect()
}

fn restrict(g: &BoolAssignment, keep: &VarSet) -> BoolAssignment {
    g.iter().filter(|(v, _)| keep.contains(v)).map(|(&v, &b)| (v, b)).collect()
}

struct ClauseIndex {
    at: BTreeMap<Index, Vec<usize>>,
    seen: BTreeMap<(Index, Clause), usize>,
}

impl ClauseIndex {
    fn record(&mut self, b: &ClauseProofBuilder<'_>, k: usize) {
        let j = b.judgement(k);
        if self.seen.insert((j.location, j.clause.clone()), k).is_none() {
            self.at.entry(j.location).or_default().push(k);
        }
    }

    /// A clause at `i` over `V` falsified by `g`, preferring fewest literals.
    fn cover(&self, b: &ClauseProofBuilder<'_>, i: Index, vars: &VarSet, g: &BoolAssignment) -> Option<usize> {
        self.at
            .get(&i)?
            .iter()
            .copied()
            .filter(|&k| {
                let c = &b.judgement(k).clause;
                c.vars().is_subset(vars) && c.is_falsified_by(g)
            })
            .min_by_key(|&k| b.judgement(k).clause.len())
    }

    fn has(&self, i: Index, c: &Clause) -> Option<usize> {
        self.seen.get(&(i, c.clone())).copied()
    }
}

/// Translates a valid constraint judgement proof of the translation `inst`
/// of `f` into a clause judgement proof of `f`.
pub fn constraint_to_clause_proof(
    f: &QcbfFormula,
    inst: &QcInstance,
    jp: &JudgementProof,
) -> Result<ClauseProof, TranslationError> {
    let report = check_proof(inst, jp);
    if let Some(v) = report.violations.first() {
        return Err(TranslationError::InvalidInput { step: v.step, message: v.message.clone() });
    }
    let mut b = ClauseProofBuilder::new(f);
    let mut ix = ClauseIndex { at: BTreeMap::new(), seen: BTreeMap::new() };
    for step in &jp.steps {
        let j = &step.judgement;
        let i = j.location;
        let vars = j.constraint.var_set();
        match step.rule {
            JudgementRule::Atom => {
                let Node::Leaf(c) = f.node(i) else { unreachable!("checked atom") };
                if ix.has(i, c).is_none() {
                    let k = b.clause(i).expect("leaf clause");
                    ix.record(&b, k);
                }
            }
            JudgementRule::Join { .. } => {
                // Two complementary unit clauses covering an empty constraint
                // on one variable collapse to the empty clause, so later flows
                // need to carry only one clause.
                if vars.len() == 1
                    && j.constraint.is_empty()
                    && ix.cover(&b, i, &VarSet::new(), &BTreeMap::new()).is_none()
                {
                    let v = *vars.iter().next().unwrap();
                    let k0 = ix.cover(&b, i, &vars, &BTreeMap::from([(v, false)])).expect("entailment");
                    let k1 = ix.cover(&b, i, &vars, &BTreeMap::from([(v, true)])).expect("entailment");
                    let k = b.resolve(k0, k1, v).expect("complementary units");
                    ix.record(&b, k);
                }
            }
            JudgementRule::Projection { premise } => {
                let from = jp.steps[premise].judgement.constraint.clone();
                let mut current = from.var_set();
                for v in from.var_set().difference(&vars) {
                    let mut next = current.clone();
                    next.remove(v);
                    let projected = from.project(&next).expect("subset");
                    for g in missing_assignments(&projected) {
                        if ix.cover(&b, i, &next, &g).is_some() {
                            continue;
                        }
                        let mut g0 = g.clone();
                        g0.insert(*v, false);
                        let mut g1 = g.clone();
                        g1.insert(*v, true);
                        let k0 = ix.cover(&b, i, &current, &g0).expect("entailment");
                        let k1 = ix.cover(&b, i, &current, &g1).expect("entailment");
                        let k = b.resolve(k0, k1, *v).expect("both covers mention the eliminated variable");
                        ix.record(&b, k);
                    }
                    current = next;
                }
            }
            JudgementRule::UpwardFlow { premise } | JudgementRule::DownwardFlow { premise } => {
                let src = jp.steps[premise].judgement.location;
                for g in missing_assignments(&j.constraint) {
                    if ix.cover(&b, i, &vars, &g).is_some() {
                        continue;
                    }
                    let k = ix.cover(&b, src, &vars, &g).expect("entailment");
                    let c = b.judgement(k).clause.clone();
                    if ix.has(i, &c).is_some() {
                        continue;
                    }
                    let k = if matches!(step.rule, JudgementRule::UpwardFlow { .. }) { b.up(k) } else { b.down(k, i) }
                        .expect("flowed clause stays free");
                    ix.record(&b, k);
                }
            }
            JudgementRule::ForallElimination { premise, var } => {
                let src = &jp.steps[premise].judgement;
                let src_vars = src.constraint.var_set();
                for g in missing_assignments(&j.constraint) {
                    if ix.cover(&b, i, &vars, &g).is_some() {
                        continue;
                    }
                    let k = [false, true]
                        .iter()
                        .find_map(|&bit| {
                            let mut h = g.clone();
                            h.insert(var, bit);
                            ix.cover(&b, src.location, &src_vars, &h)
                        })
                        .expect("entailment");
                    let removed = b.judgement(k).clause.without(var);
                    if ix.has(i, &removed).is_some() {
                        continue;
                    }
                    let k = b.forall_remove(k).expect("universal parent");
                    ix.record(&b, k);
                }
            }
        }
    }
    Ok(b.finish())
}

/// Every clause judgement `(i, α)` of `cp` has some `(i, vars(α), F)` in
/// `jp` with the falsifier of `α` outside `F`.
pub fn clause_entailment_holds(cp: &ClauseProof, jp: &JudgementProof) -> bool {
    cp.steps.iter().all(|s| {
        let c = &s.judgement.clause;
        let g: BTreeMap<VarId, Elem> = c.falsifier().into_iter().map(|(v, b)| (v, bool_elem(b))).collect();
        jp.steps.iter().any(|t| {
            t.judgement.location == s.judgement.location
                && t.judgement.constraint.var_set() == c.vars()
                && !t.judgement.constraint.contains(&g)
        })
    })
}

/// Every judgement `(i, V, F)` of `jp` and every `g ∉ F` have some `(i, α)`
/// in `cp` with `vars(α) ⊆ V` falsified by `g`.
pub fn constraint_entailment_holds(jp: &JudgementProof, cp: &ClauseProof) -> bool {
    let mut at: BTreeMap<Index, BTreeSet<&Clause>> = BTreeMap::new();
    for s in &cp.steps {
        at.entry(s.judgement.location).or_default().insert(&s.judgement.clause);
    }
    jp.steps.iter().all(|s| {
        let vars = s.judgement.constraint.var_set();
        let here = at.get(&s.judgement.location);
        missing_assignments(&s.judgement.constraint).iter().all(|g| {
            here.is_some_and(|cs| {
                cs.iter().any(|c| c.vars().is_subset(&vars) && c.is_falsified_by(&restrict(g, &c.vars())))
            })
        })
    })
}

/// `max(w·2^(w-1), 1)`.
pub fn clause_blowup(w: usize) -> usize {
    if w == 0 {
        1
    } else {
        (w << (w - 1)).max(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clause_proof::{check_clause_proof, qres_closure_derive, QresOptions};
    use crate::fixtures::{parse_clause, prenex_qbf};
    use crate::judgement::{generate_refutation, Refutation};
    use crate::model::{validate_instance, Assignment};
    use crate::oracle::{evaluate, evaluate_qcbf, qcbf_is_true};

    #[test]
    fn clause_relation_tuples() {
        let f = prenex_qbf("e y e z", &["-y z"]);
        let (inst, map) = qcsp_translation(&f);
        assert!(validate_instance(&inst).is_empty());
        let rel = map.relation_of[&Index(4)];
        assert_eq!(inst.structure.signature.relation(rel).name, "C4");
        let tuples: Vec<Vec<Elem>> = inst.structure.interpretations[rel.ix()].iter().cloned().collect();
        assert_eq!(tuples, vec![vec![FALSE, FALSE], vec![FALSE, TRUE], vec![TRUE, TRUE]]);
    }

    #[test]
    fn empty_clause_is_empty_nullary_relation() {
        let mut vt = crate::model::VarTable::new();
        let empty = parse_clause(&mut vt, "");
        let f = Formula::from_tree(vt, crate::model::Tree::Leaf(empty));
        let (inst, map) = qcsp_translation(&f);
        let rel = map.relation_of[&Index(1)];
        assert!(inst.structure.signature.relation(rel).arity.is_empty());
        assert!(inst.structure.interpretations[rel.ix()].is_empty());
    }

    #[test]
    fn translation_agrees_everywhere() {
        for (prefix, clauses) in [
            ("e x a y", vec!["x y", "-x y"]),
            ("a y e x", vec!["x y", "-x -y"]),
            ("e x a y e z", vec!["x -y z", "-z y", "-x"]),
        ] {
            let f = prenex_qbf(prefix, &clauses);
            let (inst, _) = qcsp_translation(&f);
            for i in f.indices() {
                let vars: Vec<VarId> = f.free(i).iter().copied().collect();
                for a in all_assignments(&vars, |_| vec![FALSE, TRUE]) {
                    let a: Assignment = a;
                    assert_eq!(evaluate_qcbf(&f, i, &a), evaluate(&inst, i, &a));
                }
            }
        }
    }

    fn hand_refutation(f: &QcbfFormula) -> ClauseProof {
        let mut b = ClauseProofBuilder::new(f);
        let y = f.vars().by_name("y").unwrap();
        let x = f.vars().by_name("x").unwrap();
        let a = b.clause(Index(4)).unwrap();
        let a = b.up(a).unwrap();
        let c = b.clause(Index(5)).unwrap();
        let c = b.up(c).unwrap();
        let r = b.resolve(a, c, y).unwrap();
        let d = b.clause(Index(6)).unwrap();
        let d = b.up(d).unwrap();
        b.resolve(r, d, x).unwrap();
        b.finish()
    }

    #[test]
    fn refutation_round_trip() {
        let f = prenex_qbf("e x a y", &["-y", "y -x", "x"]);
        let (inst, _) = qcsp_translation(&f);
        let cp = hand_refutation(&f);
        let jp = clause_to_constraint_proof(&f, &inst, &cp).unwrap();
        let r = check_proof(&inst, &jp);
        assert!(r.valid && r.refutes);
        assert!(jp.len() <= 2 * cp.len() && jp.width() <= cp.width() + 1);
        assert!(clause_entailment_holds(&cp, &jp));
        let back = constraint_to_clause_proof(&f, &inst, &jp).unwrap();
        let rep = check_clause_proof(&f, &back);
        assert!(rep.valid && rep.refutes);
        assert!(back.len() <= jp.len() * clause_blowup(jp.width()));
        assert!(back.width() <= jp.width());
        assert!(constraint_entailment_holds(&jp, &back));
    }

    #[test]
    fn single_clause_step_maps_to_atom() {
        let f = prenex_qbf("e x a y", &["-y", "y -x", "x"]);
        let (inst, _) = qcsp_translation(&f);
        let mut b = ClauseProofBuilder::new(&f);
        b.clause(Index(5)).unwrap();
        let jp = clause_to_constraint_proof(&f, &inst, &b.finish()).unwrap();
        assert_eq!(jp.len(), 1);
        assert_eq!(jp.steps[0].rule, JudgementRule::Atom);
    }

    #[test]
    fn resolve_widths() {
        let f = prenex_qbf("e x a y", &["-y", "y -x", "x"]);
        let (inst, _) = qcsp_translation(&f);
        let jp = clause_to_constraint_proof(&f, &inst, &hand_refutation(&f)).unwrap();
        // Steps 5 and 6 come from the resolve on y of widths 1 and 2.
        assert_eq!(jp.steps[4].judgement.width(), 2);
        assert_eq!(jp.steps[5].judgement.width(), 1);
    }

    #[test]
    fn join_only_adds_nothing() {
        let f = prenex_qbf("e x e y", &["x y", "-x"]);
        let (inst, _) = qcsp_translation(&f);
        let mut b = ProofBuilder::new(&inst);
        let a = b.atom(Index(4)).unwrap();
        let a = b.up(a).unwrap();
        let c = b.atom(Index(5)).unwrap();
        let c = b.up(c).unwrap();
        b.join(a, c).unwrap();
        let jp = b.finish();
        let cp = constraint_to_clause_proof(&f, &inst, &jp).unwrap();
        assert_eq!(cp.len(), 4);
        assert!(constraint_entailment_holds(&jp, &cp));
    }

    #[test]
    fn generated_refutation_translates_to_empty_clause() {
        let f = prenex_qbf("e x a y", &["x y", "-x y"]);
        assert!(!qcbf_is_true(&f));
        let (inst, _) = qcsp_translation(&f);
        let Refutation::Refuted(jp) = generate_refutation(&inst) else { panic!() };
        let cp = constraint_to_clause_proof(&f, &inst, &jp).unwrap();
        let rep = check_clause_proof(&f, &cp);
        assert!(rep.valid && rep.refutes, "{:?}", rep.violations);
        assert!(cp.len() <= jp.len() * clause_blowup(jp.width()));
        assert!(constraint_entailment_holds(&jp, &cp));
    }

    #[test]
    fn qres_refutation_round_trips() {
        let f = prenex_qbf("e x a y", &["x y", "-x y"]);
        let (inst, _) = qcsp_translation(&f);
        let cp = qres_closure_derive(&f, &Clause::empty(), QresOptions::default()).unwrap();
        let jp = clause_to_constraint_proof(&f, &inst, &cp).unwrap();
        assert!(check_proof(&inst, &jp).refutes);
        let back = constraint_to_clause_proof(&f, &inst, &jp).unwrap();
        assert!(check_clause_proof(&f, &back).refutes);
    }

    #[test]
    fn invalid_input_rejected() {
        let f = prenex_qbf("e x a y", &["-y", "y -x", "x"]);
        let (inst, _) = qcsp_translation(&f);
        let mut cp = hand_refutation(&f);
        cp.steps[1].judgement.location = Index(1);
        assert!(matches!(
            clause_to_constraint_proof(&f, &inst, &cp),
            Err(TranslationError::InvalidInput { step: 2, .. })
        ));
    }

    #[test]
    fn blowup_values() {
        assert_eq!((clause_blowup(0), clause_blowup(1), clause_blowup(2), clause_blowup(3)), (1, 1, 4, 12));
    }
}
