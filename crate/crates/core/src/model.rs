//! Multi-sorted signatures, finite structures and indexed formula trees.
//!
//! A formula is stored as a flat vector of nodes. Every node has a 1-based
//! [`Index`] (its location); parent links and free-variable sets are
//! computed once at construction and cached.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::clause::Clause;

macro_rules! id_type {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
        pub struct $name(pub u32);

        impl $name {
            pub fn ix(self) -> usize {
                self.0 as usize
            }
        }
    };
}

id_type!(
    /// Position of a sort in [`Signature::sorts`].
    SortId
);
id_type!(
    /// Position of a relation symbol in [`Signature::relations`].
    RelId
);
id_type!(
    /// Position of a variable in a formula's [`VarTable`].
    VarId
);
id_type!(
    /// Interned universe element. For propositional formulas `Elem(0)` is
    /// false and `Elem(1)` is true.
    Elem
);

/// A formula location. Indices are dense and start at 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Index(pub u32);

impl Index {
    fn slot(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub type VarSet = BTreeSet<VarId>;

/// A (total or partial) map from variables to elements.
pub type Assignment = BTreeMap<VarId, Elem>;

pub const FALSE: Elem = Elem(0);
pub const TRUE: Elem = Elem(1);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationSymbol {
    pub name: String,
    pub arity: Vec<SortId>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    pub sorts: Vec<String>,
    pub relations: Vec<RelationSymbol>,
}

impl Signature {
    pub fn sort_by_name(&self, name: &str) -> Option<SortId> {
        self.sorts.iter().position(|s| s == name).map(|p| SortId(p as u32))
    }

    pub fn relation_by_name(&self, name: &str) -> Option<RelId> {
        self.relations.iter().position(|r| r.name == name).map(|p| RelId(p as u32))
    }

    pub fn relation(&self, r: RelId) -> &RelationSymbol {
        &self.relations[r.ix()]
    }
}

/// A finite multi-sorted structure. Element names are interned globally,
/// so one element may belong to the universes of several sorts.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Structure {
    pub signature: Signature,
    pub elements: Vec<String>,
    /// Universe of each sort, indexed by [`SortId`].
    pub universes: Vec<Vec<Elem>>,
    /// Interpretation of each relation symbol, indexed by [`RelId`].
    pub interpretations: Vec<BTreeSet<Vec<Elem>>>,
}

impl Structure {
    pub fn new(signature: Signature) -> Self {
        let sorts = signature.sorts.len();
        let rels = signature.relations.len();
        Structure {
            signature,
            elements: Vec::new(),
            universes: vec![Vec::new(); sorts],
            interpretations: vec![BTreeSet::new(); rels],
        }
    }

    /// Interns `name`, returning the existing id when already present.
    pub fn intern(&mut self, name: &str) -> Elem {
        match self.element_by_name(name) {
            Some(e) => e,
            None => {
                self.elements.push(name.to_string());
                Elem(self.elements.len() as u32 - 1)
            }
        }
    }

    pub fn element_by_name(&self, name: &str) -> Option<Elem> {
        self.elements.iter().position(|e| e == name).map(|p| Elem(p as u32))
    }

    pub fn element_name(&self, e: Elem) -> &str {
        &self.elements[e.ix()]
    }

    pub fn universe(&self, s: SortId) -> &[Elem] {
        &self.universes[s.ix()]
    }

    /// Adds `name` to the universe of `sort`.
    pub fn add_element(&mut self, sort: SortId, name: &str) -> Elem {
        let e = self.intern(name);
        if !self.universes[sort.ix()].contains(&e) {
            self.universes[sort.ix()].push(e);
        }
        e
    }

    pub fn add_tuple(&mut self, rel: RelId, names: &[&str]) {
        let tuple = names.iter().map(|n| self.intern(n)).collect();
        self.interpretations[rel.ix()].insert(tuple);
    }

    /// Size of the union of all universes.
    pub fn domain_size(&self) -> usize {
        let all: BTreeSet<Elem> = self.universes.iter().flatten().copied().collect();
        all.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Variable {
    pub name: String,
    pub sort: SortId,
}

/// Variables of one formula. A name denotes exactly one variable, and the
/// variable carries its sort.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VarTable {
    vars: Vec<Variable>,
}

impl VarTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the variable called `name`, creating it with `sort` if new.
    /// Fails when `name` already exists with a different sort.
    pub fn get_or_insert(&mut self, name: &str, sort: SortId) -> Result<VarId, SortId> {
        match self.by_name(name) {
            Some(v) if self.vars[v.ix()].sort == sort => Ok(v),
            Some(v) => Err(self.vars[v.ix()].sort),
            None => {
                self.vars.push(Variable { name: name.to_string(), sort });
                Ok(VarId(self.vars.len() as u32 - 1))
            }
        }
    }

    pub fn by_name(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name).map(|p| VarId(p as u32))
    }

    pub fn get(&self, v: VarId) -> &Variable {
        &self.vars[v.ix()]
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.vars[v.ix()].name
    }

    pub fn sort(&self, v: VarId) -> SortId {
        self.vars[v.ix()].sort
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, &Variable)> {
        self.vars.iter().enumerate().map(|(i, v)| (VarId(i as u32), v))
    }
}

/// Leaves of a formula tree: atoms for qc-formulas, clauses for QCBFs.
pub trait Leaf: Clone + fmt::Debug + PartialEq + Eq {
    fn vars(&self) -> VarSet;
}

/// `R(v_1, ..., v_k)`. Arguments may repeat a variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Atom {
    pub relation: RelId,
    pub args: Vec<VarId>,
}

impl Leaf for Atom {
    fn vars(&self) -> VarSet {
        self.args.iter().copied().collect()
    }
}

impl Leaf for Clause {
    fn vars(&self) -> VarSet {
        Clause::vars(self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Node<L> {
    Leaf(L),
    True,
    And(Vec<Index>),
    Exists(VarId, Index),
    Forall(VarId, Index),
}

impl<L> Node<L> {
    pub fn children(&self) -> &[Index] {
        match self {
            Node::Leaf(_) | Node::True => &[],
            Node::And(cs) => cs,
            Node::Exists(_, c) | Node::Forall(_, c) => std::slice::from_ref(c),
        }
    }

    /// The quantified variable and whether the quantifier is universal.
    pub fn quantifier(&self) -> Option<(VarId, bool)> {
        match self {
            Node::Exists(v, _) => Some((*v, false)),
            Node::Forall(v, _) => Some((*v, true)),
            _ => None,
        }
    }
}

/// Owned formula tree, used to build formulas and to rewrite them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tree<L> {
    Leaf(L),
    True,
    And(Vec<Tree<L>>),
    Exists(VarId, Box<Tree<L>>),
    Forall(VarId, Box<Tree<L>>),
}

impl<L> Tree<L> {
    pub fn and(children: Vec<Tree<L>>) -> Self {
        Tree::And(children)
    }

    pub fn exists(v: VarId, body: Tree<L>) -> Self {
        Tree::Exists(v, Box::new(body))
    }

    pub fn forall(v: VarId, body: Tree<L>) -> Self {
        Tree::Forall(v, Box::new(body))
    }

    pub fn node_count(&self) -> usize {
        match self {
            Tree::Leaf(_) | Tree::True => 1,
            Tree::And(cs) => 1 + cs.iter().map(Tree::node_count).sum::<usize>(),
            Tree::Exists(_, b) | Tree::Forall(_, b) => 1 + b.node_count(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum StructureError {
    #[error("index {0} is not a location of the formula")]
    UnknownIndex(u32),
    #[error("node {parent} refers to missing child {child}")]
    DanglingChild { parent: u32, child: u32 },
    #[error("node {0} has more than one parent")]
    SharedChild(u32),
    #[error("node {0} is the root but has a parent")]
    RootHasParent(u32),
    #[error("node {0} is not reachable from the root")]
    Unreachable(u32),
    #[error("conjunction at {0} has no conjuncts")]
    EmptyConjunction(u32),
    #[error("node {0} refers to unknown variable {1}")]
    UnknownVariable(u32, u32),
}

/// An indexed formula tree with cached parent links and free-variable sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Formula<L> {
    vars: VarTable,
    nodes: Vec<Node<L>>,
    root: Index,
    parents: Vec<Option<Index>>,
    free: Vec<VarSet>,
    depth: Vec<u32>,
}

pub type QcFormula = Formula<Atom>;
pub type QcbfFormula = Formula<Clause>;

impl<L: Leaf> Formula<L> {
    /// Builds a formula from a tree, numbering nodes in depth-first preorder
    /// starting at 1.
    pub fn from_tree(vars: VarTable, tree: Tree<L>) -> Self {
        let mut nodes = Vec::with_capacity(tree.node_count());
        flatten(tree, &mut nodes);
        Self::from_nodes(vars, nodes, Index(1)).expect("preorder flattening is well formed")
    }

    /// Builds a formula from explicit nodes; `nodes[k]` has index `k + 1`.
    pub fn from_nodes(vars: VarTable, nodes: Vec<Node<L>>, root: Index) -> Result<Self, StructureError> {
        let n = nodes.len();
        if root.0 == 0 || root.slot() >= n {
            return Err(StructureError::UnknownIndex(root.0));
        }
        let mut parents: Vec<Option<Index>> = vec![None; n];
        for (k, node) in nodes.iter().enumerate() {
            let me = Index(k as u32 + 1);
            if let Node::And(cs) = node {
                if cs.is_empty() {
                    return Err(StructureError::EmptyConjunction(me.0));
                }
            }
            if let Some((v, _)) = node.quantifier() {
                if v.ix() >= vars.len() {
                    return Err(StructureError::UnknownVariable(me.0, v.0));
                }
            }
            for &c in node.children() {
                if c.0 == 0 || c.slot() >= n {
                    return Err(StructureError::DanglingChild { parent: me.0, child: c.0 });
                }
                if parents[c.slot()].is_some() {
                    return Err(StructureError::SharedChild(c.0));
                }
                parents[c.slot()] = Some(me);
            }
        }
        if parents[root.slot()].is_some() {
            return Err(StructureError::RootHasParent(root.0));
        }
        // Reachability also rules out cycles: every node has at most one
        // parent and the root has none.
        let mut depth = vec![u32::MAX; n];
        let mut order = Vec::with_capacity(n);
        let mut stack = vec![(root, 0u32)];
        while let Some((i, d)) = stack.pop() {
            depth[i.slot()] = d;
            order.push(i);
            for &c in nodes[i.slot()].children() {
                stack.push((c, d + 1));
            }
        }
        if let Some(k) = depth.iter().position(|&d| d == u32::MAX) {
            return Err(StructureError::Unreachable(k as u32 + 1));
        }
        let mut free = vec![VarSet::new(); n];
        for &i in order.iter().rev() {
            free[i.slot()] = compute_free(&nodes[i.slot()], &free);
        }
        for node in &nodes {
            if let Node::Leaf(l) = node {
                if let Some(v) = l.vars().into_iter().find(|v| v.ix() >= vars.len()) {
                    return Err(StructureError::UnknownVariable(0, v.0));
                }
            }
        }
        Ok(Formula { vars, nodes, root, parents, free, depth })
    }

    pub fn vars(&self) -> &VarTable {
        &self.vars
    }

    pub fn root(&self) -> Index {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn indices(&self) -> impl Iterator<Item = Index> + '_ {
        (1..=self.nodes.len() as u32).map(Index)
    }

    pub fn contains(&self, i: Index) -> bool {
        i.0 >= 1 && i.slot() < self.nodes.len()
    }

    pub fn node(&self, i: Index) -> &Node<L> {
        &self.nodes[i.slot()]
    }

    pub fn nodes(&self) -> &[Node<L>] {
        &self.nodes
    }

    pub fn parent(&self, i: Index) -> Option<Index> {
        self.parents[i.slot()]
    }

    /// Distance from the root.
    pub fn depth(&self, i: Index) -> u32 {
        self.depth[i.slot()]
    }

    /// Cached free variables of the subformula at `i`.
    pub fn free(&self, i: Index) -> &VarSet {
        &self.free[i.slot()]
    }

    /// Free variables at `i`, or an error for an unknown index.
    pub fn free_vars(&self, i: Index) -> Result<&VarSet, StructureError> {
        if self.contains(i) {
            Ok(self.free(i))
        } else {
            Err(StructureError::UnknownIndex(i.0))
        }
    }

    /// Maximum number of free variables over all subformulas.
    pub fn width(&self) -> usize {
        self.free.iter().map(BTreeSet::len).max().unwrap_or(0)
    }

    pub fn is_sentence(&self) -> bool {
        self.free(self.root).is_empty()
    }

    /// `true` when `anc` lies on the path from `desc` to the root
    /// (reflexive).
    pub fn is_ancestor(&self, anc: Index, desc: Index) -> bool {
        let mut cur = Some(desc);
        while let Some(c) = cur {
            if c == anc {
                return true;
            }
            if self.depth(c) <= self.depth(anc) {
                return false;
            }
            cur = self.parent(c);
        }
        false
    }

    /// The unique child of a quantifier node.
    pub fn quantifier_child(&self, i: Index) -> Option<Index> {
        match self.node(i) {
            Node::Exists(_, c) | Node::Forall(_, c) => Some(*c),
            _ => None,
        }
    }

    /// Recomputes every free-variable set from scratch.
    pub fn recompute_free(&self) -> Vec<VarSet> {
        let mut free = vec![VarSet::new(); self.nodes.len()];
        let mut order: Vec<Index> = self.indices().collect();
        order.sort_by_key(|&i| std::cmp::Reverse(self.depth(i)));
        for i in order {
            free[i.slot()] = compute_free(&self.nodes[i.slot()], &free);
        }
        free
    }

    /// Owned copy of the subtree at `i`.
    pub fn subtree(&self, i: Index) -> Tree<L> {
        match self.node(i) {
            Node::Leaf(l) => Tree::Leaf(l.clone()),
            Node::True => Tree::True,
            Node::And(cs) => Tree::And(cs.iter().map(|&c| self.subtree(c)).collect()),
            Node::Exists(v, c) => Tree::exists(*v, self.subtree(*c)),
            Node::Forall(v, c) => Tree::forall(*v, self.subtree(*c)),
        }
    }

    pub fn to_tree(&self) -> Tree<L> {
        self.subtree(self.root)
    }

    /// Renumbers the nodes: the node at index `i` moves to index
    /// `perm[i - 1]`. `perm` must be a permutation of `1..=len`.
    pub fn reindexed(&self, perm: &[u32]) -> Self {
        let n = self.nodes.len();
        assert_eq!(perm.len(), n);
        let map = |i: Index| Index(perm[i.slot()]);
        let mut nodes: Vec<Option<Node<L>>> = vec![None; n];
        for (k, node) in self.nodes.iter().enumerate() {
            let moved = match node {
                Node::Leaf(l) => Node::Leaf(l.clone()),
                Node::True => Node::True,
                Node::And(cs) => Node::And(cs.iter().map(|&c| map(c)).collect()),
                Node::Exists(v, c) => Node::Exists(*v, map(*c)),
                Node::Forall(v, c) => Node::Forall(*v, map(*c)),
            };
            nodes[perm[k] as usize - 1] = Some(moved);
        }
        let nodes = nodes.into_iter().map(|n| n.expect("permutation")).collect();
        Self::from_nodes(self.vars.clone(), nodes, map(self.root)).expect("reindexing preserves shape")
    }

    /// Path from `i` up to the root, starting with `i`.
    pub fn path_to_root(&self, i: Index) -> Vec<Index> {
        let mut out = vec![i];
        let mut cur = i;
        while let Some(p) = self.parent(cur) {
            out.push(p);
            cur = p;
        }
        out
    }

    /// First location strictly above `i` that quantifies `v`.
    pub fn binder_above(&self, i: Index, v: VarId) -> Option<Index> {
        let mut cur = self.parent(i);
        while let Some(c) = cur {
            if matches!(self.node(c).quantifier(), Some((u, _)) if u == v) {
                return Some(c);
            }
            cur = self.parent(c);
        }
        None
    }

    /// A prenex formula is a chain of quantifiers above a quantifier-free
    /// part. Returns the index of that quantifier-free part.
    pub fn prenex_matrix(&self) -> Option<Index> {
        let mut cur = self.root;
        while let Some(c) = self.quantifier_child(cur) {
            cur = c;
        }
        let matrix = cur;
        let mut stack = vec![matrix];
        while let Some(i) = stack.pop() {
            if self.node(i).quantifier().is_some() {
                return None;
            }
            stack.extend_from_slice(self.node(i).children());
        }
        Some(matrix)
    }
}

fn flatten<L>(tree: Tree<L>, out: &mut Vec<Node<L>>) -> Index {
    let me = out.len();
    out.push(Node::True);
    let node = match tree {
        Tree::Leaf(l) => Node::Leaf(l),
        Tree::True => Node::True,
        Tree::And(cs) => Node::And(cs.into_iter().map(|c| flatten(c, out)).collect()),
        Tree::Exists(v, b) => Node::Exists(v, flatten(*b, out)),
        Tree::Forall(v, b) => Node::Forall(v, flatten(*b, out)),
    };
    out[me] = node;
    Index(me as u32 + 1)
}

fn compute_free<L: Leaf>(node: &Node<L>, free: &[VarSet]) -> VarSet {
    match node {
        Node::Leaf(l) => l.vars(),
        Node::True => VarSet::new(),
        Node::And(cs) => cs.iter().flat_map(|c| free[c.slot()].iter().copied()).collect(),
        Node::Exists(v, c) | Node::Forall(v, c) => {
            let mut s = free[c.slot()].clone();
            s.remove(v);
            s
        }
    }
}

/// A QCSP instance `(φ, B)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QcInstance {
    pub formula: QcFormula,
    pub structure: Structure,
}

impl QcInstance {
    pub fn new(formula: QcFormula, structure: Structure) -> Self {
        QcInstance { formula, structure }
    }

    pub fn universe_of(&self, v: VarId) -> &[Elem] {
        self.structure.universe(self.formula.vars().sort(v))
    }

    /// Rows of the atom at `i`: assignments on its variables (sorted by id)
    /// whose argument tuple lies in the relation.
    pub fn atom_rows(&self, atom: &Atom) -> crate::constraint::Constraint {
        crate::constraint::Constraint::from_atom(atom, &self.structure, self.formula.vars())
    }
}

/// One invariant violation found by [`validate_instance`] or
/// [`validate_qcbf`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// Offending index, relation, sort or variable name.
    pub subject: String,
    pub message: String,
}

impl Violation {
    fn new(subject: impl Into<String>, message: impl Into<String>) -> Self {
        Violation { subject: subject.into(), message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}

pub fn validate_signature(sig: &Signature) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for s in &sig.sorts {
        if !seen.insert(s.as_str()) {
            out.push(Violation::new(format!("sort {s}"), "duplicate sort name"));
        }
    }
    let mut seen = BTreeSet::new();
    for r in &sig.relations {
        if !seen.insert(r.name.as_str()) {
            out.push(Violation::new(format!("relation {}", r.name), "duplicate relation name"));
        }
        for s in &r.arity {
            if s.ix() >= sig.sorts.len() {
                out.push(Violation::new(
                    format!("relation {}", r.name),
                    format!("arity mentions unknown sort #{}", s.0),
                ));
            }
        }
    }
    out
}

pub fn validate_structure(st: &Structure) -> Vec<Violation> {
    let mut out = validate_signature(&st.signature);
    let sig = &st.signature;
    if st.universes.len() != sig.sorts.len() {
        out.push(Violation::new("universe", "one universe per sort required"));
        return out;
    }
    if st.interpretations.len() != sig.relations.len() {
        out.push(Violation::new("interpretation", "one interpretation per relation required"));
        return out;
    }
    for (s, u) in st.universes.iter().enumerate() {
        let name = &sig.sorts[s];
        if u.is_empty() {
            out.push(Violation::new(format!("sort {name}"), "empty universe"));
        }
        if u.iter().any(|e| e.ix() >= st.elements.len()) {
            out.push(Violation::new(format!("sort {name}"), "universe refers to unknown element"));
        }
        let distinct: BTreeSet<_> = u.iter().collect();
        if distinct.len() != u.len() {
            out.push(Violation::new(format!("sort {name}"), "universe lists an element twice"));
        }
    }
    for (r, tuples) in st.interpretations.iter().enumerate() {
        let rel = &sig.relations[r];
        for t in tuples {
            if t.len() != rel.arity.len() {
                out.push(Violation::new(
                    format!("relation {}", rel.name),
                    format!("tuple of length {} for arity {}", t.len(), rel.arity.len()),
                ));
                continue;
            }
            for (pos, (e, s)) in t.iter().zip(&rel.arity).enumerate() {
                let ok = st.universes.get(s.ix()).is_some_and(|u| u.contains(e));
                if !ok {
                    let ename = st.elements.get(e.ix()).map_or("?", String::as_str);
                    let sname = sig.sorts.get(s.ix()).map_or("?", String::as_str);
                    out.push(Violation::new(
                        format!("relation {}", rel.name),
                        format!("position {} holds {ename}, not in universe of sort {sname}", pos + 1),
                    ));
                }
            }
        }
    }
    out
}

fn validate_tree_common<L: Leaf>(f: &Formula<L>, out: &mut Vec<Violation>) {
    let recomputed = f.recompute_free();
    for i in f.indices() {
        if &recomputed[i.slot()] != f.free(i) {
            out.push(Violation::new(format!("index {i}"), "cached free variables are stale"));
        }
        for &c in f.node(i).children() {
            if f.parent(c) != Some(i) {
                out.push(Violation::new(format!("index {c}"), "parent link inconsistent"));
            }
        }
    }
    if !f.is_sentence() {
        let names: Vec<_> = f.free(f.root()).iter().map(|&v| f.vars().name(v)).collect();
        out.push(Violation::new(format!("index {}", f.root()), format!("root has free variables {names:?}")));
    }
}

/// Reports every invariant violation of a QCSP instance; empty means valid.
pub fn validate_instance(inst: &QcInstance) -> Vec<Violation> {
    let mut out = validate_structure(&inst.structure);
    let sig = &inst.structure.signature;
    let f = &inst.formula;
    for (v, var) in f.vars().iter() {
        if var.sort.ix() >= sig.sorts.len() {
            out.push(Violation::new(format!("variable {}", var.name), format!("unknown sort #{}", var.sort.0)));
        }
        let _ = v;
    }
    for i in f.indices() {
        if let Node::Leaf(atom) = f.node(i) {
            let Some(rel) = sig.relations.get(atom.relation.ix()) else {
                out.push(Violation::new(format!("index {i}"), "atom uses unknown relation"));
                continue;
            };
            if rel.arity.len() != atom.args.len() {
                out.push(Violation::new(
                    format!("index {i}"),
                    format!("atom {} has {} arguments, arity is {}", rel.name, atom.args.len(), rel.arity.len()),
                ));
                continue;
            }
            for (pos, (&v, &s)) in atom.args.iter().zip(&rel.arity).enumerate() {
                if f.vars().sort(v) != s {
                    out.push(Violation::new(
                        format!("index {i}"),
                        format!("argument {} of {} is {} of the wrong sort", pos + 1, rel.name, f.vars().name(v)),
                    ));
                }
            }
        }
    }
    validate_tree_common(f, &mut out);
    out
}

/// Reports every invariant violation of a QCBF; empty means valid.
pub fn validate_qcbf(f: &QcbfFormula) -> Vec<Violation> {
    let mut out = Vec::new();
    for i in f.indices() {
        if let Node::Leaf(c) = f.node(i) {
            if let Err(e) = Clause::new(c.literals().to_vec()) {
                out.push(Violation::new(format!("index {i}"), e.to_string()));
            }
        }
    }
    validate_tree_common(f, &mut out);
    out
}
