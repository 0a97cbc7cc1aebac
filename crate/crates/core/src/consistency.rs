//! k-judge-consistency: the propagation algorithm over constraint tables,
//! a checker for k-constraint systems, and an independent saturation of
//! all derivable judgements of bounded width.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::constraint::Constraint;
use crate::judgement::{JudgementProof, ProofBuilder};
use crate::model::{Assignment, Elem, Index, Node, QcInstance, VarId, VarSet};
use crate::oracle;

/// `(i, V)` with `V` sorted.
pub type TableKey = (Index, Vec<VarId>);

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ConsistencyError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("resource limit of {0} steps reached")]
    ResourceLimit(usize),
    #[error("formula is not prenex")]
    NotPrenex,
}

/// `Q[i, V]` for every location `i` and every `V ⊆ free(φ(i))` with
/// `|V| ≤ k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintSystemTable {
    pub k: usize,
    pub entries: BTreeMap<TableKey, Constraint>,
}

impl ConstraintSystemTable {
    pub fn get(&self, i: Index, vars: &[VarId]) -> Option<&Constraint> {
        self.entries.get(&(i, vars.to_vec()))
    }

    pub fn get_mut(&mut self, i: Index, vars: &[VarId]) -> Option<&mut Constraint> {
        self.entries.get_mut(&(i, vars.to_vec()))
    }

    /// Total number of rows over all entries.
    pub fn size(&self) -> usize {
        self.entries.values().map(Constraint::len).sum()
    }

    pub fn has_empty(&self) -> bool {
        self.entries.values().any(Constraint::is_empty)
    }
}

/// All subsets of `set` with at most `k` elements, each sorted.
pub fn subsets_up_to(set: &[VarId], k: usize) -> Vec<Vec<VarId>> {
    let mut out = vec![vec![]];
    for &v in set {
        let extended: Vec<Vec<VarId>> = out
            .iter()
            .filter(|s| s.len() < k)
            .map(|s| {
                let mut t = s.clone();
                t.push(v);
                t
            })
            .collect();
        out.extend(extended);
    }
    for s in &mut out {
        s.sort();
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

fn to_set(vars: &[VarId]) -> VarSet {
    vars.iter().copied().collect()
}

/// The keys a table for `inst` at width `k` must have.
pub fn table_keys(inst: &QcInstance, k: usize) -> Vec<TableKey> {
    let f = &inst.formula;
    let mut keys = Vec::new();
    for i in f.indices() {
        let free: Vec<VarId> = f.free(i).iter().copied().collect();
        for v in subsets_up_to(&free, k) {
            keys.push((i, v));
        }
    }
    keys
}

fn full(inst: &QcInstance, vars: &[VarId]) -> Constraint {
    Constraint::full(&to_set(vars), |v| inst.universe_of(v).to_vec())
}

/// `|I|·Σ_{j≤k} C(n,j)|B|^j` where `n` is the formula width and `|B|` the
/// total number of elements.
pub fn iteration_bound(inst: &QcInstance, k: usize) -> u128 {
    let n = inst.formula.width() as u128;
    let b = inst.structure.domain_size() as u128;
    let mut sum: u128 = 0;
    for j in 0..=k as u128 {
        if j > n {
            break;
        }
        let mut binom: u128 = 1;
        for t in 0..j {
            binom = binom * (n - t) / (t + 1);
        }
        sum = sum.saturating_add(binom.saturating_mul(b.saturating_pow(j as u32)));
    }
    (inst.formula.len() as u128).saturating_mul(sum)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Narrowing {
    /// `U ⊊ V` at the same location.
    Restrict { small: usize, big: usize },
    /// Same `V` at a parent and a child.
    Agree { a: usize, b: usize },
    /// `Q[i, U \ {y}] ∩= ε_y Q[j, U]`.
    Universal { parent: usize, child: usize, y: VarId },
}

/// Order in which the narrowing rules are swept.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RuleOrder {
    #[default]
    Forward,
    Reverse,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Propagation {
    pub consistent: bool,
    pub table: ConstraintSystemTable,
    /// Rule applications that removed at least one row.
    pub iterations: usize,
}

fn narrowings(inst: &QcInstance, keys: &[TableKey], slot: &BTreeMap<TableKey, usize>) -> Vec<Narrowing> {
    let f = &inst.formula;
    let mut out = Vec::new();
    for (n, (i, v)) in keys.iter().enumerate() {
        for u in subsets_up_to(v, v.len()) {
            if u.len() < v.len() {
                out.push(Narrowing::Restrict { small: slot[&(*i, u)], big: n });
            }
        }
        for &j in f.node(*i).children() {
            if v.iter().all(|x| f.free(j).contains(x)) {
                out.push(Narrowing::Agree { a: n, b: slot[&(j, v.clone())] });
            }
        }
        if let Some(p) = f.parent(*i) {
            if let Node::Forall(y, _) = f.node(p) {
                if v.contains(y) {
                    let rest: Vec<VarId> = v.iter().copied().filter(|x| x != y).collect();
                    out.push(Narrowing::Universal { parent: slot[&(p, rest)], child: n, y: *y });
                }
            }
        }
    }
    out
}

fn apply(inst: &QcInstance, q: &mut [Constraint], rule: Narrowing) -> bool {
    match rule {
        Narrowing::Restrict { small, big } => {
            let target = q[small].var_set();
            let proj = q[big].project(&target).expect("U ⊆ V");
            let before = (q[small].len(), q[big].len());
            q[small] = q[small].intersect(&proj);
            q[big] = q[big].join(&q[small]);
            before != (q[small].len(), q[big].len())
        }
        Narrowing::Agree { a, b } => {
            let both = q[a].intersect(&q[b]);
            let changed = both.len() != q[a].len() || both.len() != q[b].len();
            q[a] = both.clone();
            q[b] = both;
            changed
        }
        Narrowing::Universal { parent, child, y } => {
            let e = q[child].forall_eliminate(y, inst.universe_of(y)).expect("y ∈ U, non-empty universe");
            let before = q[parent].len();
            q[parent] = q[parent].intersect(&e);
            before != q[parent].len()
        }
    }
}

/// Runs the narrowing rules round-robin until nothing changes.
pub fn propagate(inst: &QcInstance, k: usize) -> Result<Propagation, ConsistencyError> {
    propagate_with(inst, k, RuleOrder::Forward)
}

pub fn propagate_with(inst: &QcInstance, k: usize, order: RuleOrder) -> Result<Propagation, ConsistencyError> {
    if k < 1 {
        return Err(ConsistencyError::ZeroK);
    }
    let f = &inst.formula;
    let keys = table_keys(inst, k);
    let slot: BTreeMap<TableKey, usize> = keys.iter().cloned().enumerate().map(|(n, key)| (key, n)).collect();
    let mut q: Vec<Constraint> = keys
        .iter()
        .map(|(i, v)| match f.node(*i) {
            Node::Leaf(atom) if to_set(&atom.args).into_iter().eq(v.iter().copied()) => inst.atom_rows(atom),
            _ => full(inst, v),
        })
        .collect();
    let mut rules = narrowings(inst, &keys, &slot);
    if order == RuleOrder::Reverse {
        rules.reverse();
    }
    let mut iterations = 0;
    loop {
        let mut changed = false;
        for &r in &rules {
            if apply(inst, &mut q, r) {
                iterations += 1;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let entries: BTreeMap<TableKey, Constraint> = keys.into_iter().zip(q).collect();
    let table = ConstraintSystemTable { k, entries };
    Ok(Propagation { consistent: !table.has_empty(), table, iterations })
}

pub fn is_k_judge_consistent(inst: &QcInstance, k: usize) -> Result<bool, ConsistencyError> {
    propagate(inst, k).map(|p| p.consistent)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Property {
    Keys,
    NonEmpty,
    Alpha,
    Pi,
    Lambda,
    Epsilon,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Property::Keys => "keys",
            Property::NonEmpty => "non-emptiness",
            Property::Alpha => "(α)",
            Property::Pi => "(π)",
            Property::Lambda => "(λ)",
            Property::Epsilon => "(ε)",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemViolation {
    pub property: Property,
    pub location: Index,
    pub vars: Vec<VarId>,
    /// A row of `P[location, vars]` (or of the set it is compared with)
    /// showing the failure.
    pub witness: Option<Assignment>,
}

impl fmt::Display for SystemViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} violated at {} {:?}",
            self.property,
            self.location.0,
            self.vars.iter().map(|v| v.0).collect::<Vec<_>>()
        )
    }
}

fn first_difference(a: &Constraint, b: &Constraint) -> Option<Assignment> {
    a.assignments().find(|r| !b.contains(r)).or_else(|| b.assignments().find(|r| !a.contains(r)))
}

/// Checks that `table` is a k-constraint system for `inst`.
pub fn verify_system(inst: &QcInstance, k: usize, table: &ConstraintSystemTable) -> Result<(), SystemViolation> {
    let f = &inst.formula;
    let keys = table_keys(inst, k);
    let v = |property, (location, vars): &TableKey, witness| SystemViolation {
        property,
        location: *location,
        vars: vars.clone(),
        witness,
    };
    for key in &keys {
        let Some(c) = table.entries.get(key) else {
            return Err(v(Property::Keys, key, None));
        };
        if c.vars() != key.1.as_slice() {
            return Err(v(Property::Keys, key, None));
        }
    }
    if let Some(extra) = table.entries.keys().find(|key| !keys.contains(key)) {
        return Err(v(Property::Keys, extra, None));
    }
    let at = |i: Index, vars: &[VarId]| &table.entries[&(i, vars.to_vec())];
    for key in &keys {
        if at(key.0, &key.1).is_empty() {
            return Err(v(Property::NonEmpty, key, None));
        }
    }
    // ε first: a parent set that grew past ε_y of its child also breaks
    // (λ), and the ε witness is the more telling one.
    for property in [Property::Alpha, Property::Epsilon, Property::Pi, Property::Lambda] {
        for key @ (i, vars) in &keys {
            let p = at(*i, vars);
            match property {
                Property::Alpha => {
                    if let Node::Leaf(atom) = f.node(*i) {
                        if to_set(&atom.args).into_iter().eq(vars.iter().copied()) {
                            let allowed = inst.atom_rows(atom);
                            if let Some(w) = p.assignments().find(|r| !allowed.contains(r)) {
                                return Err(v(Property::Alpha, key, Some(w)));
                            }
                        }
                    }
                }
                Property::Epsilon => {
                    let Node::Forall(y, j) = f.node(*i) else { continue };
                    if vars.contains(y) {
                        continue;
                    }
                    let mut u = vars.clone();
                    u.push(*y);
                    u.sort();
                    if u.len() > k || !f.free(*j).contains(y) {
                        continue;
                    }
                    let e = at(*j, &u).forall_eliminate(*y, inst.universe_of(*y)).expect("y ∈ U");
                    if let Some(w) = p.assignments().find(|r| !e.contains(r)) {
                        return Err(v(Property::Epsilon, key, Some(w)));
                    }
                }
                Property::Pi => {
                    for u in subsets_up_to(vars, vars.len()) {
                        let proj = p.project(&to_set(&u)).expect("U ⊆ V");
                        let pu = at(*i, &u);
                        if &proj != pu {
                            return Err(v(Property::Pi, &(*i, u), first_difference(pu, &proj)));
                        }
                    }
                }
                Property::Lambda => {
                    for &j in f.node(*i).children() {
                        if vars.iter().all(|x| f.free(j).contains(x)) {
                            let pj = at(j, vars);
                            if p != pj {
                                return Err(v(Property::Lambda, key, first_difference(p, pj)));
                            }
                        }
                    }
                }
                Property::Keys | Property::NonEmpty => unreachable!(),
            }
        }
    }
    Ok(())
}

/// Every judgement of width at most `k` derivable for an instance,
/// represented by the least constraint per `(i, V)`.
#[derive(Clone, Debug)]
pub struct Saturation {
    /// A valid judgement proof containing a derivation of every minimal
    /// constraint.
    pub proof: JudgementProof,
    /// Step of `proof` holding the least derivable constraint for a key.
    pub best: BTreeMap<TableKey, usize>,
    /// First step deriving an empty constraint.
    pub empty: Option<usize>,
}

impl Saturation {
    pub fn minimal(&self, i: Index, vars: &[VarId]) -> Option<&Constraint> {
        self.best.get(&(i, vars.to_vec())).map(|&s| &self.proof.steps[s].judgement.constraint)
    }

    /// Whether some derivable judgement at `i` on `c.vars()` is exactly `c`.
    /// Derivable constraints are closed under intersection, so `c` is
    /// derivable only if it contains the minimal one.
    pub fn covers(&self, i: Index, c: &Constraint) -> bool {
        self.minimal(i, c.vars()).is_some_and(|m| m.is_subset(c))
    }

    pub fn refutation(&self) -> Option<JudgementProof> {
        self.empty.map(|s| self.proof.trimmed_to(s))
    }
}

struct Saturator<'a> {
    inst: &'a QcInstance,
    k: usize,
    b: ProofBuilder<'a>,
    best: BTreeMap<TableKey, usize>,
    by_location: BTreeMap<Index, Vec<Vec<VarId>>>,
    queue: VecDeque<usize>,
    empty: Option<usize>,
    max_steps: Option<usize>,
}

impl Saturator<'_> {
    fn key(&self, s: usize) -> TableKey {
        let j = self.b.judgement(s);
        (j.location, j.constraint.vars().to_vec())
    }

    fn budget(&self) -> Result<(), ConsistencyError> {
        match self.max_steps {
            Some(m) if self.b.proof.len() > m => Err(ConsistencyError::ResourceLimit(m)),
            _ => Ok(()),
        }
    }

    fn install(&mut self, key: TableKey, s: usize) {
        if !self.best.contains_key(&key) {
            self.by_location.entry(key.0).or_default().push(key.1.clone());
        }
        self.best.insert(key, s);
        if self.empty.is_none() && self.b.judgement(s).is_empty() {
            self.empty = Some(s);
        }
        self.queue.push_back(s);
    }

    /// Keeps the freshly pushed step `t` if it improves on the best
    /// constraint for its key.
    fn offer(&mut self, t: usize) -> Result<(), ConsistencyError> {
        debug_assert_eq!(t + 1, self.b.proof.len());
        let key = self.key(t);
        match self.best.get(&key).copied() {
            None => self.install(key, t),
            Some(old) => {
                let (co, ct) = (&self.b.judgement(old).constraint, &self.b.judgement(t).constraint);
                if co.is_subset(ct) {
                    self.b.proof.steps.pop();
                } else if ct.is_subset(co) {
                    self.install(key, t);
                } else {
                    let j = self.b.join(old, t).expect("join of same-location judgements");
                    self.install(key, j);
                }
            }
        }
        self.budget()
    }

    fn process(&mut self, s: usize) -> Result<(), ConsistencyError> {
        let (loc, vars) = self.key(s);
        if self.best.get(&(loc, vars.clone())) != Some(&s) {
            return Ok(());
        }
        let f = &self.inst.formula;
        for u in subsets_up_to(&vars, vars.len()) {
            if u.len() < vars.len() {
                let t = self.b.project(s, &to_set(&u)).expect("projection");
                self.offer(t)?;
            }
        }
        let others = self.by_location.get(&loc).cloned().unwrap_or_default();
        for w in others {
            if w == vars {
                continue;
            }
            let union: VarSet = vars.iter().chain(&w).copied().collect();
            if union.len() > self.k {
                continue;
            }
            let Some(&other) = self.best.get(&(loc, w)) else { continue };
            let t = self.b.join(s, other).expect("join");
            self.offer(t)?;
        }
        if let Some(p) = f.parent(loc) {
            if vars.iter().all(|x| f.free(p).contains(x)) {
                let t = self.b.up(s).expect("upward flow");
                self.offer(t)?;
            }
            if let Node::Forall(y, _) = f.node(p) {
                if vars.contains(y) {
                    let t = self.b.forall_elim(s).expect("universal elimination");
                    self.offer(t)?;
                }
            }
        }
        for &c in f.node(loc).children() {
            if vars.iter().all(|x| f.free(c).contains(x)) {
                let t = self.b.down(s, c).expect("downward flow");
                self.offer(t)?;
            }
        }
        Ok(())
    }
}

/// Derives every judgement of width at most `k`, keeping per key only
/// improvements. With `stop_on_empty` the search ends at the first empty
/// judgement.
pub fn saturate(
    inst: &QcInstance,
    k: usize,
    max_steps: Option<usize>,
    stop_on_empty: bool,
) -> Result<Saturation, ConsistencyError> {
    if k < 1 {
        return Err(ConsistencyError::ZeroK);
    }
    let mut st = Saturator {
        inst,
        k,
        b: ProofBuilder::new(inst),
        best: BTreeMap::new(),
        by_location: BTreeMap::new(),
        queue: VecDeque::new(),
        empty: None,
        max_steps,
    };
    let f = &inst.formula;
    for i in f.indices() {
        if let Node::Leaf(atom) = f.node(i) {
            if to_set(&atom.args).len() <= k {
                let t = st.b.atom(i).expect("atom");
                st.offer(t)?;
            }
        }
    }
    while let Some(s) = st.queue.pop_front() {
        if stop_on_empty && st.empty.is_some() {
            break;
        }
        st.process(s)?;
    }
    Ok(Saturation { proof: st.b.finish(), best: st.best, empty: st.empty })
}

pub fn minimal_derivable(
    inst: &QcInstance,
    k: usize,
    max_steps: Option<usize>,
) -> Result<Saturation, ConsistencyError> {
    saturate(inst, k, max_steps, false)
}

/// A refutation of width at most `k`, if one exists.
pub fn bounded_width_refutation_search(
    inst: &QcInstance,
    k: usize,
    max_steps: Option<usize>,
) -> Result<Option<JudgementProof>, ConsistencyError> {
    Ok(saturate(inst, k, max_steps, true)?.refutation())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct QwidthReport {
    pub consistent: bool,
    pub oracle_truth: bool,
    pub agree: bool,
}

/// Compares k-judge-consistency with the truth of a prenex instance. The
/// caller vouches that the Q-width is at most `k`.
pub fn qwidth_consistency_check(inst: &QcInstance, k: usize) -> Result<QwidthReport, ConsistencyError> {
    if inst.formula.prenex_matrix().is_none() {
        return Err(ConsistencyError::NotPrenex);
    }
    let consistent = is_k_judge_consistent(inst, k)?;
    let oracle_truth = oracle::is_true(inst);
    Ok(QwidthReport { consistent, oracle_truth, agree: consistent == oracle_truth })
}

/// Renders an assignment as `v=e` pairs in variable order.
pub fn format_assignment(inst: &QcInstance, a: &Assignment) -> String {
    let parts: Vec<String> = a
        .iter()
        .map(|(&v, &e): (&VarId, &Elem)| format!("{}={}", inst.formula.vars().name(v), inst.structure.element_name(e)))
        .collect();
    parts.join(",")
}
