//! Located variables, the falsity-detection search over QCBFs, its traces,
//! and compilers between traces and tree-like clause judgement proofs.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;

use crate::clause::Clause;
use crate::clause_proof::{check_clause_proof, ClauseProof, ClauseProofBuilder, ClauseRule};
use crate::model::{Index, Node, QcbfFormula, VarId, VarSet};
use crate::translation::BoolAssignment;

/// `(i, u)`: a variable together with the location quantifying it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LocatedVariable {
    pub location: Index,
    pub var: VarId,
    pub universal: bool,
}

pub type LocatedSet = BTreeSet<LocatedVariable>;

/// The located variable bound at `i`, if `ψ(i)` is a quantifier.
pub fn located_at(f: &QcbfFormula, i: Index) -> Option<LocatedVariable> {
    f.node(i).quantifier().map(|(var, universal)| LocatedVariable { location: i, var, universal })
}

pub fn located_variables(f: &QcbfFormula) -> Vec<LocatedVariable> {
    f.indices().filter_map(|i| located_at(f, i)).collect()
}

/// `i <ψ j` and `u` is free at every `k` with `i <ψ k ≤ψ j`.
pub fn follows(f: &QcbfFormula, j: Index, lv: &LocatedVariable) -> bool {
    let mut cur = j;
    loop {
        if cur == lv.location {
            return cur != j;
        }
        if !f.free(cur).contains(&lv.var) {
            return false;
        }
        match f.parent(cur) {
            Some(p) => cur = p,
            None => return false,
        }
    }
}

pub fn follows_set(f: &QcbfFormula, j: Index, s: &LocatedSet) -> bool {
    s.iter().all(|lv| follows(f, j, lv))
}

/// Any two distinct members follow one another in some direction.
pub fn coherent(f: &QcbfFormula, s: &LocatedSet) -> bool {
    let v: Vec<&LocatedVariable> = s.iter().collect();
    v.iter().enumerate().all(|(k, a)| v[k + 1..].iter().all(|b| follows(f, b.location, a) || follows(f, a.location, b)))
}

pub fn vars_of(s: &LocatedSet) -> VarSet {
    s.iter().map(|lv| lv.var).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label {
    pub set: LocatedSet,
    pub assignment: BoolAssignment,
}

impl Label {
    pub fn root() -> Self {
        Label { set: LocatedSet::new(), assignment: BoolAssignment::new() }
    }
}

/// A recursion tree of the search. Leaves name the falsified clause.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub label: Label,
    pub children: Vec<Trace>,
    pub leaf: Option<Index>,
}

impl Trace {
    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(Trace::node_count).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(Trace::depth).max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("trace node {path:?}: {message}")]
pub struct TraceViolation {
    /// Child positions from the root to the offending node.
    pub path: Vec<usize>,
    pub message: String,
}

fn located_ok(f: &QcbfFormula, lv: &LocatedVariable) -> bool {
    f.contains(lv.location) && located_at(f, lv.location) == Some(*lv)
}

fn restrict(a: &BoolAssignment, s: &LocatedSet) -> BoolAssignment {
    let vars = vars_of(s);
    a.iter().filter(|(v, _)| vars.contains(v)).map(|(&v, &b)| (v, b)).collect()
}

/// Checks every condition of the trace definition.
pub fn validate_trace(f: &QcbfFormula, t: &Trace) -> Result<(), TraceViolation> {
    let mut path = Vec::new();
    validate_node(f, t, &mut path)
}

fn validate_node(f: &QcbfFormula, t: &Trace, path: &mut Vec<usize>) -> Result<(), TraceViolation> {
    let fail = |path: &Vec<usize>, m: &str| Err(TraceViolation { path: path.clone(), message: m.to_string() });
    let Label { set, assignment } = &t.label;
    if !set.iter().all(|lv| located_ok(f, lv)) {
        return fail(path, "set holds a pair that is not a located variable");
    }
    if !coherent(f, set) {
        return fail(path, "set is not coherent");
    }
    if assignment.keys().copied().collect::<VarSet>() != vars_of(set) {
        return fail(path, "assignment domain differs from vars(S)");
    }
    match t.children.len() {
        0 => {
            let Some(i) = t.leaf else { return fail(path, "leaf without a clause index") };
            if !f.contains(i) {
                return fail(path, "leaf index does not exist");
            }
            let Node::Leaf(c) = f.node(i) else { return fail(path, "leaf index is not a clause") };
            if !follows_set(f, i, set) {
                return fail(path, "leaf index does not follow S");
            }
            if c.vars() != vars_of(set) {
                return fail(path, "vars mismatch between clause and S");
            }
            if !c.is_falsified_by(assignment) {
                return fail(path, "clause is not falsified by the assignment");
            }
        }
        1 => {
            let child = &t.children[0].label;
            let new: Vec<&LocatedVariable> = child.set.difference(set).collect();
            if new.len() != 1 || !set.is_subset(&child.set) {
                return fail(path, "child set is not S plus one located variable");
            }
            let lv = new[0];
            if !lv.universal || !follows_set(f, lv.location, set) {
                return fail(path, "branch variable is not a universal located variable following S");
            }
            let Some(&b) = child.assignment.get(&lv.var) else {
                return fail(path, "child assignment misses the branch variable");
            };
            let mut expected = assignment.clone();
            expected.insert(lv.var, b);
            if child.assignment != expected {
                return fail(path, "child assignment does not extend the parent's");
            }
        }
        2 => {
            let (c0, c1) = (&t.children[0].label, &t.children[1].label);
            let n0: Vec<&LocatedVariable> = c0.set.difference(set).collect();
            let n1: Vec<&LocatedVariable> = c1.set.difference(set).collect();
            if n0.len() != 1 || n0 != n1 {
                return fail(path, "children do not add the same single located variable");
            }
            let lv = *n0[0];
            let mut whole = set.clone();
            whole.insert(lv);
            if !coherent(f, &whole) {
                return fail(path, "S plus the branch variable is not coherent");
            }
            let mut s0 = c0.set.clone();
            s0.remove(&lv);
            let mut s1 = c1.set.clone();
            s1.remove(&lv);
            if s0.union(&s1).copied().collect::<LocatedSet>() != *set {
                return fail(path, "S0 ∪ S1 differs from S");
            }
            let (Some(&b0), Some(&b1)) = (c0.assignment.get(&lv.var), c1.assignment.get(&lv.var)) else {
                return fail(path, "child assignment misses the branch variable");
            };
            if b0 == b1 {
                return fail(path, "children give the branch variable the same value");
            }
            for (s, c, b) in [(&s0, c0, b0), (&s1, c1, b1)] {
                let mut expected = restrict(assignment, s);
                expected.insert(lv.var, b);
                if c.assignment != expected {
                    return fail(path, "child assignment is not a restriction of the parent's");
                }
            }
        }
        _ => return fail(path, "more than two children"),
    }
    if !t.children.is_empty() && t.leaf.is_some() {
        return fail(path, "inner node carries a clause index");
    }
    for (k, c) in t.children.iter().enumerate() {
        path.push(k);
        validate_node(f, c, path)?;
        path.pop();
    }
    Ok(())
}

/// Orders the nondeterministic choices of the search.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Policy {
    /// Falsify first, then ∀-branch on the shallowest located variable,
    /// then Q-branch.
    #[default]
    Default,
    /// Choices shuffled by a seeded generator.
    Random(u64),
}

impl std::str::FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "default" {
            return Ok(Policy::Default);
        }
        s.strip_prefix("random:")
            .and_then(|n| n.parse().ok())
            .map(Policy::Random)
            .ok_or_else(|| format!("unknown policy `{s}`; expected `default` or `random:<seed>`"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SearchError {
    #[error("search exceeded {0} steps")]
    ResourceLimit(usize),
    #[error("too many located variables ({0}) for the search")]
    TooLarge(usize),
}

/// Search state: bit masks over the located variables for `S` and for the
/// members of `S` whose variable is 1.
type State = (u64, u64);

#[derive(Clone, Debug)]
enum Choice {
    Falsify(Index),
    Forall { lv: usize, value: bool },
    Branch { lv: usize, s0: u64, s1: u64 },
}

struct Search<'a> {
    f: &'a QcbfFormula,
    lvs: Vec<LocatedVariable>,
    /// `after[a]` has bit `b` when located variable `b` follows `a`.
    after: Vec<u64>,
    clauses: Vec<(Index, Clause)>,
}

impl<'a> Search<'a> {
    fn new(f: &'a QcbfFormula) -> Result<Self, SearchError> {
        let mut lvs = located_variables(f);
        if lvs.len() > 64 {
            return Err(SearchError::TooLarge(lvs.len()));
        }
        lvs.sort_by_key(|lv| (f.depth(lv.location), lv.location));
        let after = lvs
            .iter()
            .map(|a| {
                lvs.iter().enumerate().filter(|(_, b)| follows(f, b.location, a)).fold(0u64, |m, (k, _)| m | (1 << k))
            })
            .collect();
        let clauses = f
            .indices()
            .filter_map(|i| match f.node(i) {
                Node::Leaf(c) => Some((i, c.clone())),
                _ => None,
            })
            .collect();
        Ok(Search { f, lvs, after, clauses })
    }

    fn members(mask: u64) -> impl Iterator<Item = usize> {
        (0..64).filter(move |k| mask & (1 << k) != 0)
    }

    fn label(&self, (set, val): State) -> Label {
        Label {
            set: Self::members(set).map(|k| self.lvs[k]).collect(),
            assignment: Self::members(set).map(|k| (self.lvs[k].var, val & (1 << k) != 0)).collect(),
        }
    }

    /// `x` follows every member of `set`.
    fn follows_all(&self, x: usize, set: u64) -> bool {
        Self::members(set).all(|s| self.after[s] & (1 << x) != 0)
    }

    fn coherent_with(&self, x: usize, set: u64) -> bool {
        set & (1 << x) == 0
            && Self::members(set).all(|s| self.after[s] & (1 << x) != 0 || self.after[x] & (1 << s) != 0)
    }

    fn choices(&self, (set, val): State) -> Vec<Choice> {
        let mut out = Vec::new();
        let label = self.label((set, val));
        let vars = vars_of(&label.set);
        for (i, c) in &self.clauses {
            if c.vars() == vars && c.is_falsified_by(&label.assignment) && follows_set(self.f, *i, &label.set) {
                out.push(Choice::Falsify(*i));
            }
        }
        for x in 0..self.lvs.len() {
            if self.lvs[x].universal && set & (1 << x) == 0 && self.follows_all(x, set) {
                out.push(Choice::Forall { lv: x, value: false });
                out.push(Choice::Forall { lv: x, value: true });
            }
        }
        let members: Vec<usize> = Self::members(set).collect();
        for x in 0..self.lvs.len() {
            if !self.coherent_with(x, set) {
                continue;
            }
            // Each member goes to both halves, only S0, or only S1.
            let splits = 3usize.pow(members.len() as u32);
            for code in 0..splits {
                let (mut s0, mut s1, mut c) = (0u64, 0u64, code);
                for &m in &members {
                    match c % 3 {
                        0 => {
                            s0 |= 1 << m;
                            s1 |= 1 << m;
                        }
                        1 => s0 |= 1 << m,
                        _ => s1 |= 1 << m,
                    }
                    c /= 3;
                }
                out.push(Choice::Branch { lv: x, s0, s1 });
            }
        }
        out
    }

    fn children(&self, (set, val): State, choice: &Choice) -> Vec<State> {
        match *choice {
            Choice::Falsify(_) => vec![],
            Choice::Forall { lv, value } => {
                let bit = 1u64 << lv;
                vec![(set | bit, if value { val | bit } else { val })]
            }
            Choice::Branch { lv, s0, s1 } => {
                let bit = 1u64 << lv;
                vec![(s0 | bit, val & s0), (s1 | bit, (val & s1) | bit)]
            }
        }
    }
}

/// Searches for a trace with root label `(∅, e)`. `Ok(None)` means no
/// refuting trace exists.
///
/// The nondeterministic choices are resolved exhaustively: a state is
/// refutable when some choice leads only to refutable states, computed as a
/// least fixpoint over the states reachable from the root. Among the
/// choices that witness refutability the policy picks the first.
pub fn detect_falsity(f: &QcbfFormula, policy: Policy, max_steps: Option<usize>) -> Result<Option<Trace>, SearchError> {
    let search = Search::new(f)?;
    let mut steps = 0usize;
    let mut tick = |n: usize| -> Result<(), SearchError> {
        steps += n;
        match max_steps {
            Some(m) if steps > m => Err(SearchError::ResourceLimit(m)),
            _ => Ok(()),
        }
    };
    let root: State = (0, 0);
    let mut rng = match policy {
        Policy::Random(seed) => Some(rand_chacha::ChaCha8Rng::seed_from_u64(seed)),
        Policy::Default => None,
    };
    let mut choices: HashMap<State, Vec<Choice>> = HashMap::new();
    let mut order = Vec::new();
    let mut queue = VecDeque::from([root]);
    choices.insert(root, Vec::new());
    while let Some(s) = queue.pop_front() {
        let mut cs = search.choices(s);
        tick(cs.len() + 1)?;
        if let Some(rng) = rng.as_mut() {
            cs.shuffle(rng);
        }
        for c in &cs {
            for child in search.children(s, c) {
                if let std::collections::hash_map::Entry::Vacant(e) = choices.entry(child) {
                    e.insert(Vec::new());
                    queue.push_back(child);
                }
            }
        }
        choices.insert(s, cs);
        order.push(s);
    }
    // rank[s] = round in which s became refutable, with its witness.
    let mut won: HashMap<State, (usize, usize)> = HashMap::new();
    let mut round = 0;
    loop {
        let mut fresh = Vec::new();
        for s in &order {
            if won.contains_key(s) {
                continue;
            }
            let cs = &choices[s];
            tick(cs.len())?;
            let witness = cs
                .iter()
                .position(|c| search.children(*s, c).iter().all(|ch| won.get(ch).is_some_and(|&(r, _)| r < round)));
            if let Some(w) = witness {
                fresh.push((*s, w));
            }
        }
        if fresh.is_empty() {
            break;
        }
        for (s, w) in fresh {
            won.insert(s, (round, w));
        }
        if won.contains_key(&root) {
            break;
        }
        round += 1;
    }
    if !won.contains_key(&root) {
        return Ok(None);
    }
    Ok(Some(build_trace(&search, &choices, &won, root)))
}

fn build_trace(
    search: &Search<'_>,
    choices: &HashMap<State, Vec<Choice>>,
    won: &HashMap<State, (usize, usize)>,
    s: State,
) -> Trace {
    let choice = &choices[&s][won[&s].1];
    let children = search.children(s, choice).into_iter().map(|c| build_trace(search, choices, won, c)).collect();
    let leaf = match choice {
        Choice::Falsify(i) => Some(*i),
        _ => None,
    };
    Trace { label: search.label(s), children, leaf }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CompileError {
    #[error("invalid trace: {0}")]
    InvalidTrace(TraceViolation),
    #[error("trace root label is not (∅, e)")]
    RootNotEmpty,
    #[error("invalid proof at step {step}: {message}")]
    InvalidProof { step: usize, message: String },
    #[error("proof is not tree-like")]
    NotTreeLike,
    #[error("proof does not end in an empty clause")]
    NotRefutation,
    #[error("variable at location {0} has no binder above it")]
    Unbound(u32),
    #[error("premises of resolve step {0} locate a variable differently")]
    LocationConflict(usize),
}

/// Compiles a trace with root `(∅, e)` into a tree-like clause proof of an
/// empty clause with one non-flow step per trace node.
pub fn trace_to_proof(f: &QcbfFormula, t: &Trace) -> Result<ClauseProof, CompileError> {
    validate_trace(f, t).map_err(CompileError::InvalidTrace)?;
    if t.label != Label::root() {
        return Err(CompileError::RootNotEmpty);
    }
    let mut b = ClauseProofBuilder::new(f);
    compile_node(f, &mut b, t);
    Ok(b.finish())
}

/// Child of the deepest location in `s`.
fn below_deepest(f: &QcbfFormula, s: &LocatedSet) -> Index {
    let deepest = s.iter().max_by_key(|lv| f.depth(lv.location)).expect("non-empty");
    f.quantifier_child(deepest.location).expect("quantifier")
}

fn compile_node(f: &QcbfFormula, b: &mut ClauseProofBuilder<'_>, t: &Trace) -> usize {
    let set = &t.label.set;
    match t.children.len() {
        0 => b.clause(t.leaf.expect("validated leaf")).expect("leaf clause"),
        1 => {
            let child = &t.children[0];
            let lv = *child.label.set.difference(set).next().expect("validated");
            let k = compile_node(f, b, child);
            let below = f.quantifier_child(lv.location).expect("quantifier");
            let k = b.up_to(k, below).expect("clause variables stay free below the binder");
            b.forall_remove(k).expect("universal binder")
        }
        _ => {
            let lv = *t.children[0].label.set.difference(set).next().expect("validated");
            let mut whole = set.clone();
            whole.insert(lv);
            let m = below_deepest(f, &whole);
            let ks: Vec<usize> = t
                .children
                .iter()
                .map(|c| {
                    let k = compile_node(f, b, c);
                    let l = below_deepest(f, &c.label.set);
                    let k = b.up_to(k, l).expect("upward to the child of the deepest binder");
                    b.down_to(k, m).expect("downward along a coherent chain")
                })
                .collect();
            b.resolve(ks[0], ks[1], lv.var).expect("children falsify complementary literals")
        }
    }
}

/// Compiles a tree-like clause proof ending in an empty clause into a trace
/// with root `(∅, e)`.
pub fn proof_to_trace(f: &QcbfFormula, p: &ClauseProof) -> Result<Trace, CompileError> {
    let report = check_clause_proof(f, p);
    if let Some(v) = report.violations.first() {
        return Err(CompileError::InvalidProof { step: v.step, message: v.message.clone() });
    }
    if !report.tree_like {
        return Err(CompileError::NotTreeLike);
    }
    match p.last() {
        Some(j) if j.clause.is_empty() => {}
        _ => return Err(CompileError::NotRefutation),
    }
    trace_of(f, p, p.len() - 1)
}

fn trace_of(f: &QcbfFormula, p: &ClauseProof, k: usize) -> Result<Trace, CompileError> {
    let step = &p.steps[k];
    let clause = &step.judgement.clause;
    match step.rule {
        ClauseRule::Clause => {
            let i = step.judgement.location;
            let mut set = LocatedSet::new();
            for v in clause.vars() {
                let j = f.binder_above(i, v).ok_or(CompileError::Unbound(i.0))?;
                set.insert(located_at(f, j).expect("binder"));
            }
            Ok(Trace { label: Label { set, assignment: clause.falsifier() }, children: vec![], leaf: Some(i) })
        }
        ClauseRule::UpwardFlow { premise } | ClauseRule::DownwardFlow { premise } => trace_of(f, p, premise),
        ClauseRule::ForallRemoval { premise, var } => {
            let inner = trace_of(f, p, premise)?;
            if clause.len() == p.steps[premise].judgement.clause.len() {
                return Ok(inner);
            }
            let set: LocatedSet = inner.label.set.iter().filter(|lv| lv.var != var).copied().collect();
            let assignment = restrict(&inner.label.assignment, &set);
            Ok(Trace { label: Label { set, assignment }, children: vec![inner], leaf: None })
        }
        ClauseRule::Resolve { left, right, pivot } => {
            let mut l = trace_of(f, p, left)?;
            let mut r = trace_of(f, p, right)?;
            let by_var = |t: &Trace| -> BTreeMap<VarId, LocatedVariable> {
                t.label.set.iter().map(|lv| (lv.var, *lv)).collect()
            };
            let (lm, rm) = (by_var(&l), by_var(&r));
            if lm.iter().any(|(v, lv)| rm.get(v).is_some_and(|o| o != lv)) {
                return Err(CompileError::LocationConflict(k + 1));
            }
            if l.label.assignment.get(&pivot) == Some(&true) {
                std::mem::swap(&mut l, &mut r);
            }
            let set: LocatedSet = l.label.set.union(&r.label.set).filter(|lv| lv.var != pivot).copied().collect();
            Ok(Trace { label: Label { set, assignment: clause.falsifier() }, children: vec![l, r], leaf: None })
        }
    }
}
