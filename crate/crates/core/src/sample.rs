//! Seeded random instances, formulas and proofs for sweeps and benches.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clause::{Clause, Literal};
use crate::clause_proof::{ClauseProof, ClauseProofBuilder};
use crate::judgement::{JudgementProof, ProofBuilder};
use crate::model::{
    Atom, Elem, Formula, Index, Leaf, Node, QcInstance, QcbfFormula, RelId, RelationSymbol, Signature, SortId,
    Structure, Tree, VarId, VarSet, VarTable,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A tree with exactly `budget` nodes. Quantifiers pick from `pool`;
/// leaves receive the variables in scope.
pub fn random_tree<L, R: Rng + ?Sized>(
    rng: &mut R,
    budget: usize,
    pool: &[VarId],
    leaf: &mut dyn FnMut(&mut R, &[VarId]) -> Tree<L>,
) -> Tree<L> {
    fn go<L, R: Rng + ?Sized>(
        rng: &mut R,
        budget: usize,
        pool: &[VarId],
        scope: &mut Vec<VarId>,
        leaf: &mut dyn FnMut(&mut R, &[VarId]) -> Tree<L>,
    ) -> Tree<L> {
        if budget <= 1 {
            return leaf(rng, scope);
        }
        if budget == 2 || rng.gen_bool(0.5) {
            let v = *pool.choose(rng).expect("non-empty pool");
            let fresh = !scope.contains(&v);
            if fresh {
                scope.push(v);
            }
            let body = go(rng, budget - 1, pool, scope, leaf);
            if fresh {
                scope.pop();
            }
            return if rng.gen_bool(0.5) { Tree::forall(v, body) } else { Tree::exists(v, body) };
        }
        let arity = if budget >= 4 && rng.gen_bool(0.2) { 3 } else { 2 };
        let mut rest = budget - 1 - arity;
        let mut children = Vec::with_capacity(arity);
        for n in 0..arity {
            let extra = if n + 1 == arity { rest } else { rng.gen_range(0..=rest) };
            rest -= extra;
            children.push(go(rng, 1 + extra, pool, scope, leaf));
        }
        Tree::And(children)
    }
    go(rng, budget, pool, &mut Vec::new(), leaf)
}

const ELEMENT_NAMES: [[&str; 3]; 2] = [["a", "b", "c"], ["d", "e", "f"]];

/// Random QCSP instance with at most `max_nodes` formula nodes, one or two
/// sorts, and universes of 1 to `max_universe` elements. Every atom gets
/// its own relation symbol with a random interpretation.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, max_nodes: usize, max_universe: usize) -> QcInstance {
    let sorts = rng.gen_range(1..=2usize);
    let sizes: Vec<usize> = (0..sorts).map(|_| rng.gen_range(1..=max_universe.min(3))).collect();
    let mut vt = VarTable::new();
    let pool: Vec<VarId> =
        ["x", "y", "z"].iter().map(|n| vt.get_or_insert(n, SortId(rng.gen_range(0..sorts) as u32)).unwrap()).collect();
    let sort_of: Vec<SortId> = pool.iter().map(|&v| vt.sort(v)).collect();
    let mut relations: Vec<(Vec<SortId>, f64)> = Vec::new();
    let mut leaf = |rng: &mut R, scope: &[VarId]| -> Tree<Atom> {
        if scope.is_empty() && rng.gen_bool(0.3) {
            return Tree::True;
        }
        let arity = if scope.is_empty() { 0 } else { rng.gen_range(1..=2usize) };
        let args: Vec<VarId> = (0..arity).map(|_| *scope.choose(rng).unwrap()).collect();
        let sorts = args.iter().map(|v| sort_of[v.ix()]).collect();
        relations.push((sorts, rng.gen_range(0.3..0.95)));
        Tree::Leaf(Atom { relation: RelId(relations.len() as u32 - 1), args })
    };
    let budget = rng.gen_range(1..=max_nodes.max(1));
    let tree = random_tree(rng, budget, &pool, &mut leaf);
    let sig = Signature {
        sorts: (0..sorts).map(|s| ["s", "t"][s].to_string()).collect(),
        relations: relations
            .iter()
            .enumerate()
            .map(|(n, (arity, _))| RelationSymbol { name: format!("R{n}"), arity: arity.clone() })
            .collect(),
    };
    let mut st = Structure::new(sig);
    for (s, &size) in sizes.iter().enumerate() {
        for name in &ELEMENT_NAMES[s][..size] {
            st.add_element(SortId(s as u32), name);
        }
    }
    for (n, (arity, density)) in relations.iter().enumerate() {
        for tuple in product(arity.iter().map(|&s| st.universe(s).to_vec()).collect()) {
            if rng.gen_bool(*density) {
                st.interpretations[n].insert(tuple);
            }
        }
    }
    QcInstance::new(Formula::from_tree(vt, tree), st)
}

fn product(factors: Vec<Vec<Elem>>) -> Vec<Vec<Elem>> {
    factors.into_iter().fold(vec![vec![]], |acc, f| {
        acc.iter()
            .flat_map(|p| {
                f.iter().map(move |&e| {
                    let mut q = p.clone();
                    q.push(e);
                    q
                })
            })
            .collect()
    })
}

fn bool_vars(n: usize) -> (VarTable, Vec<VarId>) {
    let mut vt = VarTable::new();
    let vars = (1..=n).map(|k| vt.get_or_insert(&format!("v{k}"), SortId(0)).unwrap()).collect();
    (vt, vars)
}

fn random_clause<R: Rng + ?Sized>(rng: &mut R, scope: &[VarId]) -> Clause {
    let mut lits = vec![];
    for &v in scope {
        if rng.gen_bool(0.6) {
            lits.push(Literal { var: v, positive: rng.gen_bool(0.5) });
        }
    }
    Clause::new(lits).expect("distinct variables")
}

/// Random closed QCBF, usually not prenex, over at most `max_vars`
/// variables and with at most `max_nodes` nodes.
pub fn random_qcbf<R: Rng + ?Sized>(rng: &mut R, max_vars: usize, max_nodes: usize) -> QcbfFormula {
    let (vt, pool) = bool_vars(rng.gen_range(1..=max_vars.max(1)));
    let budget = rng.gen_range(2..=max_nodes.max(2));
    let tree = random_tree(rng, budget, &pool, &mut |rng, scope| Tree::Leaf(random_clause(rng, scope)));
    Formula::from_tree(vt, tree)
}

/// Random prenex QBF whose prefix quantifies every one of `1..=max_vars`
/// variables once, with 1 to `max_clauses` clauses.
pub fn random_prenex_qbf<R: Rng + ?Sized>(rng: &mut R, max_vars: usize, max_clauses: usize) -> QcbfFormula {
    let (vt, mut vars) = bool_vars(rng.gen_range(1..=max_vars.max(1)));
    vars.shuffle(rng);
    let universal: Vec<bool> = vars.iter().map(|_| rng.gen_bool(0.5)).collect();
    let n = rng.gen_range(1..=max_clauses.max(1));
    let clauses = (0..n).map(|_| Tree::Leaf(random_clause(rng, &vars))).collect();
    Formula::from_tree(vt, prefix_tree(&vars, &universal, Tree::And(clauses)))
}

fn prefix_tree<L>(vars: &[VarId], universal: &[bool], matrix: Tree<L>) -> Tree<L> {
    vars.iter().zip(universal).rev().fold(
        matrix,
        |body, (&v, &u)| {
            if u {
                Tree::forall(v, body)
            } else {
                Tree::exists(v, body)
            }
        },
    )
}

fn permutations(items: &[VarId]) -> Vec<Vec<VarId>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = vec![];
    for k in 0..items.len() {
        let mut rest = items.to_vec();
        let first = rest.remove(k);
        for mut p in permutations(&rest) {
            p.insert(0, first);
            out.push(p);
        }
    }
    out
}

/// Every prenex QBF quantifying exactly `n` variables with between 1 and
/// `max_clauses` distinct clauses, in a fixed order.
pub fn enumerate_prenex_qbfs(n: usize, max_clauses: usize) -> Vec<QcbfFormula> {
    let (vt, vars) = bool_vars(n);
    let mut clauses = vec![Clause::empty()];
    for &v in &vars {
        let mut next = clauses.clone();
        for c in &clauses {
            for positive in [true, false] {
                let mut lits = c.literals().to_vec();
                lits.push(Literal { var: v, positive });
                next.push(Clause::new(lits).unwrap());
            }
        }
        clauses = next;
    }
    let mut sets: Vec<Vec<usize>> = vec![];
    fn choose(start: usize, left: usize, total: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if !cur.is_empty() {
            out.push(cur.clone());
        }
        if left == 0 {
            return;
        }
        for k in start..total {
            cur.push(k);
            choose(k + 1, left - 1, total, cur, out);
            cur.pop();
        }
    }
    choose(0, max_clauses, clauses.len(), &mut vec![], &mut sets);
    let mut out = vec![];
    for order in permutations(&vars) {
        for mask in 0..(1u32 << n) {
            let universal: Vec<bool> = (0..n).map(|k| mask >> k & 1 == 1).collect();
            for set in &sets {
                let matrix = Tree::And(set.iter().map(|&k| Tree::Leaf(clauses[k].clone())).collect());
                out.push(Formula::from_tree(vt.clone(), prefix_tree(&order, &universal, matrix)));
            }
        }
    }
    out
}

fn leaves<L: Leaf>(f: &Formula<L>) -> Vec<Index> {
    f.indices().filter(|&i| matches!(f.node(i), Node::Leaf(_))).collect()
}

/// A valid clause proof of `f` built by a random walk of about `steps`
/// rule applications. Every step is checked when pushed.
pub fn random_clause_proof<R: Rng + ?Sized>(rng: &mut R, f: &QcbfFormula, steps: usize) -> ClauseProof {
    let mut b = ClauseProofBuilder::new(f);
    let lv = leaves(f);
    if lv.is_empty() {
        return b.finish();
    }
    let mut attempts = 0;
    while b.proof.len() < steps && attempts < steps * 20 {
        attempts += 1;
        let n = b.proof.len();
        if n == 0 || rng.gen_bool(0.15) {
            let _ = b.clause(*lv.choose(rng).unwrap());
            continue;
        }
        let p = rng.gen_range(0..n);
        let _ = match rng.gen_range(0..4) {
            0 => {
                let loc = b.judgement(p).location;
                let partners: Vec<usize> = (0..n).filter(|&q| b.judgement(q).location == loc && q != p).collect();
                let Some(&q) = partners.choose(rng) else { continue };
                let pivots: Vec<VarId> = b
                    .judgement(p)
                    .clause
                    .literals()
                    .iter()
                    .filter(|l| b.judgement(q).clause.contains(l.complement()))
                    .map(|l| l.var)
                    .collect();
                let Some(&v) = pivots.choose(rng) else { continue };
                b.resolve(p, q, v)
            }
            1 => b.up(p),
            2 => {
                let cs = f.node(b.judgement(p).location).children().to_vec();
                let Some(&c) = cs.choose(rng) else { continue };
                b.down(p, c)
            }
            _ => b.forall_remove(p),
        };
    }
    b.finish()
}

/// A valid judgement proof of `inst` built by a random walk, keeping every
/// constraint to at most `max_width` variables.
pub fn random_judgement_proof<R: Rng + ?Sized>(
    rng: &mut R,
    inst: &QcInstance,
    steps: usize,
    max_width: usize,
) -> JudgementProof {
    let f = &inst.formula;
    let mut b = ProofBuilder::new(inst);
    let lv: Vec<Index> = leaves(f).into_iter().filter(|&i| f.free(i).len() <= max_width).collect();
    if lv.is_empty() {
        return b.finish();
    }
    let mut attempts = 0;
    while b.proof.len() < steps && attempts < steps * 20 {
        attempts += 1;
        let n = b.proof.len();
        if n == 0 || rng.gen_bool(0.15) {
            let _ = b.atom(*lv.choose(rng).unwrap());
            continue;
        }
        let p = rng.gen_range(0..n);
        let _ = match rng.gen_range(0..5) {
            0 => {
                let vars: VarSet =
                    b.judgement(p).constraint.var_set().into_iter().filter(|_| rng.gen_bool(0.5)).collect();
                b.project(p, &vars)
            }
            1 => {
                let loc = b.judgement(p).location;
                let mine = b.judgement(p).constraint.var_set();
                let partners: Vec<usize> = (0..n)
                    .filter(|&q| {
                        let j = b.judgement(q);
                        j.location == loc && mine.union(&j.constraint.var_set()).count() <= max_width
                    })
                    .collect();
                let Some(&q) = partners.choose(rng) else { continue };
                b.join(p, q)
            }
            2 => b.up(p),
            3 => {
                let cs = f.node(b.judgement(p).location).children().to_vec();
                let Some(&c) = cs.choose(rng) else { continue };
                b.down(p, c)
            }
            _ => b.forall_elim(p),
        };
    }
    b.finish()
}

/// Random sentence of width at most 2 over one sort. Every quantifier binds
/// a fresh variable, except that a conjunction may quantify the same
/// universal variable on both sides. Conjunctions are binary. Prenexing
/// such a sentence by the inverse rewrites always succeeds.
pub fn random_width2_sentence<R: Rng + ?Sized>(rng: &mut R, max_nodes: usize) -> QcInstance {
    loop {
        let mut vt = VarTable::new();
        let mut relations: Vec<usize> = vec![];
        let budget = rng.gen_range(3..=max_nodes.max(3));
        let tree = width2_tree(rng, budget, &mut vec![], &mut vt, &mut relations);
        let f = Formula::from_tree(vt, tree);
        if f.width() > 2 {
            continue;
        }
        let size = rng.gen_range(2..=3usize);
        let sig = Signature {
            sorts: vec!["s".into()],
            relations: relations
                .iter()
                .enumerate()
                .map(|(n, &a)| RelationSymbol { name: format!("R{n}"), arity: vec![SortId(0); a] })
                .collect(),
        };
        let mut st = Structure::new(sig);
        for name in &ELEMENT_NAMES[0][..size] {
            st.add_element(SortId(0), name);
        }
        for (n, &a) in relations.iter().enumerate() {
            let density = rng.gen_range(0.4..0.95);
            for t in product(vec![st.universe(SortId(0)).to_vec(); a]) {
                if rng.gen_bool(density) {
                    st.interpretations[n].insert(t);
                }
            }
        }
        return QcInstance::new(f, st);
    }
}

fn width2_tree<R: Rng + ?Sized>(
    rng: &mut R,
    budget: usize,
    scope: &mut Vec<VarId>,
    vt: &mut VarTable,
    relations: &mut Vec<usize>,
) -> Tree<Atom> {
    let fresh = |vt: &mut VarTable| {
        let name = format!("v{}", vt.len() + 1);
        vt.get_or_insert(&name, SortId(0)).unwrap()
    };
    if budget <= 1 {
        // Prefer recently bound variables to keep the width low.
        let recent: Vec<VarId> = scope.iter().rev().take(2).copied().collect();
        let arity = if recent.is_empty() { 0 } else { rng.gen_range(1..=recent.len()) };
        let mut args: Vec<VarId> = recent[..arity].to_vec();
        args.shuffle(rng);
        relations.push(args.len());
        return Tree::Leaf(Atom { relation: RelId(relations.len() as u32 - 1), args });
    }
    if budget >= 7 && rng.gen_bool(0.3) {
        let y = fresh(vt);
        scope.push(y);
        let left = rng.gen_range(1..=budget - 5);
        let l = width2_tree(rng, left, scope, vt, relations);
        let r = width2_tree(rng, budget - 3 - left, scope, vt, relations);
        scope.pop();
        return Tree::and(vec![Tree::forall(y, l), Tree::forall(y, r)]);
    }
    if budget == 2 || rng.gen_bool(0.55) {
        let v = fresh(vt);
        scope.push(v);
        let body = width2_tree(rng, budget - 1, scope, vt, relations);
        scope.pop();
        return if rng.gen_bool(0.5) { Tree::forall(v, body) } else { Tree::exists(v, body) };
    }
    let left = rng.gen_range(1..=budget - 2);
    let l = width2_tree(rng, left, scope, vt, relations);
    let r = width2_tree(rng, budget - 1 - left, scope, vt, relations);
    Tree::and(vec![l, r])
}
