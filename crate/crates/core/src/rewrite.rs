//! Equivalence-preserving rewrites that push quantifiers down through
//! conjunctions, their inverses, and prenexing by the inverses.

use crate::model::{Formula, Index, Leaf, Tree, VarId, VarSet};

/// Rewrites applied at a location.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rewrite {
    /// `∧_{i∈J∪K} φ_i ⇝ (∧_{j∈J} φ_j) ∧ (∧_{k∈K} φ_k)`; `first` lists the
    /// 0-based positions of `J`, which must be a non-empty proper subset.
    Split { first: Vec<usize> },
    /// `Qv(φ ∧ ψ) ⇝ (Qv φ) ∧ ψ` for a binary conjunction, where `ψ` is the
    /// child at position `rest` and `v ∉ free(ψ)`.
    Extract { rest: usize },
    /// `∀y ∧_i φ_i ⇝ ∧_i ∀y φ_i`.
    Distribute,
}

impl Rewrite {
    pub fn number(&self) -> u8 {
        match self {
            Rewrite::Split { .. } => 1,
            Rewrite::Extract { .. } => 2,
            Rewrite::Distribute => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RewriteError {
    #[error("no location {0}")]
    UnknownIndex(u32),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("side condition violated: {0}")]
    SideCondition(String),
}

pub fn tree_free<L: Leaf>(t: &Tree<L>) -> VarSet {
    match t {
        Tree::Leaf(l) => l.vars(),
        Tree::True => VarSet::new(),
        Tree::And(cs) => cs.iter().flat_map(tree_free).collect(),
        Tree::Exists(v, b) | Tree::Forall(v, b) => {
            let mut s = tree_free(b);
            s.remove(v);
            s
        }
    }
}

/// Replaces the subtree at `at` with `g` of it. Indices of the result are
/// preorder positions, so `at` still names the replaced subtree.
fn replace_at<L: Leaf>(
    f: &Formula<L>,
    at: Index,
    g: impl FnOnce(Tree<L>) -> Result<Tree<L>, RewriteError>,
) -> Result<Formula<L>, RewriteError> {
    if !f.contains(at) {
        return Err(RewriteError::UnknownIndex(at.0));
    }
    let mut path = f.path_to_root(at);
    path.reverse();
    let positions: Vec<usize> =
        path.windows(2).map(|w| f.node(w[0]).children().iter().position(|&c| c == w[1]).expect("child")).collect();
    let mut tree = f.to_tree();
    let mut cur = &mut tree;
    for p in positions {
        cur = match cur {
            Tree::And(cs) => &mut cs[p],
            Tree::Exists(_, b) | Tree::Forall(_, b) => b,
            _ => unreachable!("leaves have no children"),
        };
    }
    let old = std::mem::replace(cur, Tree::True);
    *cur = g(old)?;
    Ok(Formula::from_tree(f.vars().clone(), tree))
}

fn shape(msg: &str) -> RewriteError {
    RewriteError::Shape(msg.to_string())
}

/// Applies one rewrite at `at`.
pub fn rewrite<L: Leaf>(f: &Formula<L>, rule: &Rewrite, at: Index) -> Result<Formula<L>, RewriteError> {
    let vars = f.vars().clone();
    replace_at(f, at, |t| match (rule, t) {
        (Rewrite::Split { first }, Tree::And(cs)) => {
            let mut seen = vec![false; cs.len()];
            for &p in first {
                if p >= cs.len() || seen[p] {
                    return Err(shape("split positions must be distinct conjuncts"));
                }
                seen[p] = true;
            }
            if first.is_empty() || first.len() == cs.len() {
                return Err(shape("split needs two non-empty blocks"));
            }
            let (mut j, mut k) = (vec![], vec![]);
            for (p, c) in cs.into_iter().enumerate() {
                if seen[p] {
                    j.push(c)
                } else {
                    k.push(c)
                }
            }
            Ok(Tree::And(vec![Tree::And(j), Tree::And(k)]))
        }
        (Rewrite::Split { .. }, _) => Err(shape("split applies to a conjunction")),
        (Rewrite::Extract { rest }, q @ (Tree::Exists(..) | Tree::Forall(..))) => {
            let universal = matches!(q, Tree::Forall(..));
            let (Tree::Exists(v, body) | Tree::Forall(v, body)) = q else { unreachable!() };
            let Tree::And(mut cs) = *body else {
                return Err(shape("quantifier body must be a conjunction"));
            };
            if cs.len() != 2 || *rest > 1 {
                return Err(shape("quantifier body must be a binary conjunction"));
            }
            if tree_free(&cs[*rest]).contains(&v) {
                return Err(RewriteError::SideCondition(format!("{} is free in the extracted conjunct", vars.name(v))));
            }
            let phi = cs.remove(1 - *rest);
            let bound = if universal { Tree::forall(v, phi) } else { Tree::exists(v, phi) };
            cs.insert(1 - *rest, bound);
            Ok(Tree::And(cs))
        }
        (Rewrite::Extract { .. }, _) => Err(shape("extraction applies to a quantifier")),
        (Rewrite::Distribute, Tree::Forall(y, body)) => match *body {
            Tree::And(cs) if !cs.is_empty() => Ok(Tree::And(cs.into_iter().map(|c| Tree::forall(y, c)).collect())),
            _ => Err(shape("universal body must be a non-empty conjunction")),
        },
        (Rewrite::Distribute, _) => Err(shape("distribution applies to a universal quantifier")),
    })
}

/// Inverse of [`Rewrite::Split`]: flattens a conjunction of two
/// conjunctions. Returns the rewrite that undoes it at the same location.
pub fn merge_conjunction<L: Leaf>(f: &Formula<L>, at: Index) -> Result<(Formula<L>, Rewrite), RewriteError> {
    let mut first = None;
    let g = replace_at(f, at, |t| match t {
        Tree::And(cs) if cs.len() == 2 && cs.iter().all(|c| matches!(c, Tree::And(_))) => {
            let mut out = vec![];
            for c in cs {
                let Tree::And(inner) = c else { unreachable!() };
                if first.is_none() {
                    first = Some((0..inner.len()).collect::<Vec<_>>());
                }
                out.extend(inner);
            }
            Ok(Tree::And(out))
        }
        _ => Err(shape("expected a conjunction of two conjunctions")),
    })?;
    let first = first.expect("set on success");
    let total = match g.node(at) {
        crate::model::Node::And(cs) => cs.len(),
        _ => unreachable!(),
    };
    if first.is_empty() || first.len() == total {
        return Err(shape("both blocks must be non-empty"));
    }
    Ok((g, Rewrite::Split { first }))
}

/// Inverse of [`Rewrite::Extract`]: `(Qv φ) ∧ ψ ⇝ Qv(φ ∧ ψ)` for the
/// first quantified conjunct whose variable is not free in the other.
pub fn pull_quantifier<L: Leaf>(f: &Formula<L>, at: Index) -> Result<(Formula<L>, Rewrite), RewriteError> {
    let mut rest = None;
    let g = replace_at(f, at, |t| {
        let Tree::And(mut cs) = t else { return Err(shape("expected a conjunction")) };
        if cs.len() != 2 {
            return Err(shape("expected a binary conjunction"));
        }
        for p in 0..2 {
            let v = match &cs[p] {
                Tree::Exists(v, _) | Tree::Forall(v, _) => *v,
                _ => continue,
            };
            if tree_free(&cs[1 - p]).contains(&v) {
                continue;
            }
            let q = cs.remove(p);
            let (universal, body) = match q {
                Tree::Forall(_, b) => (true, *b),
                Tree::Exists(_, b) => (false, *b),
                _ => unreachable!(),
            };
            cs.insert(p, body);
            rest = Some(1 - p);
            let and = Tree::And(cs);
            return Ok(if universal { Tree::forall(v, and) } else { Tree::exists(v, and) });
        }
        Err(RewriteError::SideCondition("no conjunct's quantifier can be pulled out".into()))
    })?;
    Ok((g, Rewrite::Extract { rest: rest.expect("set on success") }))
}

/// Inverse of [`Rewrite::Distribute`]: `∧_i ∀y φ_i ⇝ ∀y ∧_i φ_i`.
pub fn factor_universal<L: Leaf>(f: &Formula<L>, at: Index) -> Result<(Formula<L>, Rewrite), RewriteError> {
    let g = replace_at(f, at, |t| {
        let Tree::And(cs) = t else { return Err(shape("expected a conjunction")) };
        let y: Option<VarId> = match cs.first() {
            Some(Tree::Forall(y, _)) => Some(*y),
            _ => None,
        };
        let Some(y) = y else { return Err(shape("expected universal conjuncts")) };
        let mut bodies = vec![];
        for c in cs {
            match c {
                Tree::Forall(z, b) if z == y => bodies.push(*b),
                _ => return Err(shape("conjuncts must quantify the same variable universally")),
            }
        }
        Ok(Tree::forall(y, Tree::And(bodies)))
    })?;
    Ok((g, Rewrite::Distribute))
}

/// A prenex form of `f` with the forward rewrites leading back: applying
/// `steps` in order to the returned formula yields `f`.
#[derive(Clone, Debug)]
pub struct Prenexed<L> {
    pub prenex: Formula<L>,
    pub steps: Vec<(Index, Rewrite)>,
}

impl<L: Leaf> Prenexed<L> {
    /// The formulas visited by the forward rewrites, starting with the
    /// prenex one.
    pub fn forward_chain(&self) -> Result<Vec<Formula<L>>, RewriteError> {
        let mut out = vec![self.prenex.clone()];
        for (at, r) in &self.steps {
            let next = rewrite(out.last().unwrap(), r, *at)?;
            out.push(next);
        }
        Ok(out)
    }
}

fn is_quantifier<L: Leaf>(f: &Formula<L>, i: Index) -> bool {
    f.node(i).quantifier().is_some()
}

/// Prenexes by the inverse rewrites only. Bound variables must not be free
/// in sibling conjuncts; otherwise the side condition fails and an error
/// is returned.
pub fn prenex_by_inverse_rewrites<L: Leaf>(f: &Formula<L>) -> Result<Prenexed<L>, RewriteError> {
    let mut cur = f.clone();
    let mut undo: Vec<(Index, Rewrite)> = vec![];
    loop {
        let target = cur.indices().find(
            |&i| matches!(cur.node(i), crate::model::Node::And(cs) if cs.iter().any(|&c| is_quantifier(&cur, c))),
        );
        let Some(at) = target else { break };
        let (next, r) = match factor_universal(&cur, at) {
            Ok(x) if cur.node(at).children().len() >= 2 => x,
            _ => pull_quantifier(&cur, at)?,
        };
        undo.push((at, r));
        cur = next;
    }
    loop {
        let target = cur.indices().find(|&i| {
            matches!(cur.node(i), crate::model::Node::And(cs)
                if cs.len() == 2 && cs.iter().all(|&c| matches!(cur.node(c), crate::model::Node::And(g) if !g.is_empty())))
        });
        let Some(at) = target else { break };
        let (next, r) = merge_conjunction(&cur, at)?;
        undo.push((at, r));
        cur = next;
    }
    undo.reverse();
    Ok(Prenexed { prenex: cur, steps: undo })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Atom, QcFormula, RelId, SortId, VarTable};

    fn atom(r: u32, args: &[VarId]) -> Tree<Atom> {
        Tree::Leaf(Atom { relation: RelId(r), args: args.to_vec() })
    }

    fn xy() -> (VarTable, VarId, VarId) {
        let mut vt = VarTable::new();
        let x = vt.get_or_insert("x", SortId(0)).unwrap();
        let y = vt.get_or_insert("y", SortId(0)).unwrap();
        (vt, x, y)
    }

    #[test]
    fn distribute_universal() {
        let (vt, x, y) = xy();
        let f = QcFormula::from_tree(vt, Tree::forall(y, Tree::and(vec![atom(0, &[x, y]), atom(1, &[x, y])])));
        let g = rewrite(&f, &Rewrite::Distribute, Index(1)).unwrap();
        assert_eq!(g.to_tree(), Tree::and(vec![Tree::forall(y, atom(0, &[x, y])), Tree::forall(y, atom(1, &[x, y]))]));
    }

    #[test]
    fn extract_existential() {
        let (vt, x, y) = xy();
        let f = QcFormula::from_tree(vt, Tree::exists(x, Tree::and(vec![atom(0, &[x, y]), atom(2, &[y])])));
        let g = rewrite(&f, &Rewrite::Extract { rest: 1 }, Index(1)).unwrap();
        assert_eq!(g.to_tree(), Tree::and(vec![Tree::exists(x, atom(0, &[x, y])), atom(2, &[y])]));
        let err = rewrite(&f, &Rewrite::Extract { rest: 0 }, Index(1)).unwrap_err();
        assert!(matches!(err, RewriteError::SideCondition(_)));
    }

    #[test]
    fn split_conjunction() {
        let (vt, x, y) = xy();
        let f = QcFormula::from_tree(vt, Tree::and(vec![atom(0, &[x]), atom(1, &[y]), atom(2, &[x, y])]));
        let g = rewrite(&f, &Rewrite::Split { first: vec![0, 2] }, Index(1)).unwrap();
        assert_eq!(
            g.to_tree(),
            Tree::and(vec![Tree::and(vec![atom(0, &[x]), atom(2, &[x, y])]), Tree::and(vec![atom(1, &[y])])])
        );
        assert!(rewrite(&f, &Rewrite::Split { first: vec![] }, Index(1)).is_err());
        assert!(rewrite(&f, &Rewrite::Split { first: vec![0, 1, 2] }, Index(1)).is_err());
        assert!(rewrite(&f, &Rewrite::Distribute, Index(1)).is_err());
        assert_eq!(rewrite(&f, &Rewrite::Distribute, Index(9)).unwrap_err(), RewriteError::UnknownIndex(9));
    }

    #[test]
    fn inverses_round_trip() {
        let mut vt = VarTable::new();
        let x = vt.get_or_insert("x", SortId(0)).unwrap();
        let y = vt.get_or_insert("y", SortId(0)).unwrap();
        let z = vt.get_or_insert("z", SortId(0)).unwrap();
        let w = vt.get_or_insert("w", SortId(0)).unwrap();
        let tree = Tree::exists(
            x,
            Tree::and(vec![
                Tree::forall(y, atom(0, &[x, y])),
                Tree::and(vec![
                    Tree::exists(z, atom(1, &[x, z])),
                    Tree::and(vec![Tree::forall(w, atom(2, &[x, w])), Tree::forall(w, atom(3, &[w]))]),
                ]),
            ]),
        );
        let f = QcFormula::from_tree(vt, tree);
        let p = prenex_by_inverse_rewrites(&f).unwrap();
        assert!(p.prenex.prenex_matrix().is_some());
        assert!(p.steps.iter().any(|(_, r)| r.number() == 3));
        let chain = p.forward_chain().unwrap();
        assert_eq!(chain.last().unwrap().to_tree(), f.to_tree());
    }
}
