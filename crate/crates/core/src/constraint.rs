//! Constraints `(V, F)`: a variable set with a set of assignments on it,
//! plus restriction, join and universal elimination.
//!
//! Rows are stored as element vectors aligned with the sorted variable list,
//! so two constraints are equal exactly when their row sets are.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::model::{Assignment, Atom, Elem, Structure, VarId, VarSet, VarTable};

pub type Row = Vec<Elem>;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ConstraintError {
    #[error("row of length {got} for {expected} variables")]
    RowLength { expected: usize, got: usize },
    #[error("projection target is not a subset of the constraint's variables")]
    NotSubset,
    #[error("variable #{0} is not in the constraint")]
    MissingVariable(u32),
    #[error("universal elimination over an empty universe")]
    EmptyUniverse,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Constraint {
    vars: Vec<VarId>,
    rows: BTreeSet<Row>,
}

impl Constraint {
    pub fn new(vars: Vec<VarId>, rows: impl IntoIterator<Item = Row>) -> Result<Self, ConstraintError> {
        let mut order: Vec<usize> = (0..vars.len()).collect();
        order.sort_by_key(|&k| vars[k]);
        let sorted: Vec<VarId> = order.iter().map(|&k| vars[k]).collect();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(ConstraintError::RowLength { expected: sorted.len(), got: vars.len() });
        }
        let mut out = BTreeSet::new();
        for r in rows {
            if r.len() != vars.len() {
                return Err(ConstraintError::RowLength { expected: vars.len(), got: r.len() });
            }
            out.insert(order.iter().map(|&k| r[k]).collect());
        }
        Ok(Constraint { vars: sorted, rows: out })
    }

    /// `(∅, {e})`.
    pub fn unit() -> Self {
        Constraint { vars: Vec::new(), rows: BTreeSet::from([Vec::new()]) }
    }

    /// `(V, ∅)`.
    pub fn empty_on(vars: &VarSet) -> Self {
        Constraint { vars: vars.iter().copied().collect(), rows: BTreeSet::new() }
    }

    /// Every map from `vars` into the given universes.
    pub fn full(vars: &VarSet, universe: impl Fn(VarId) -> Vec<Elem>) -> Self {
        let vars: Vec<VarId> = vars.iter().copied().collect();
        let mut rows = vec![Vec::new()];
        for &v in &vars {
            let u = universe(v);
            rows = rows
                .into_iter()
                .flat_map(|r: Row| {
                    u.iter().map(move |&e| {
                        let mut r = r.clone();
                        r.push(e);
                        r
                    })
                })
                .collect();
        }
        Constraint { vars, rows: rows.into_iter().collect() }
    }

    /// Satisfying assignments of an atom, over its (deduplicated) variables.
    pub fn from_atom(atom: &Atom, st: &Structure, vt: &VarTable) -> Self {
        let vars: VarSet = atom.args.iter().copied().collect();
        let full = Constraint::full(&vars, |v| st.universe(vt.sort(v)).to_vec());
        let tuples = &st.interpretations[atom.relation.ix()];
        let rows = full
            .rows
            .iter()
            .filter(|r| {
                let tuple: Vec<Elem> = atom.args.iter().map(|a| r[full.position(*a).unwrap()]).collect();
                tuples.contains(&tuple)
            })
            .cloned()
            .collect();
        Constraint { vars: full.vars, rows }
    }

    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    pub fn var_set(&self) -> VarSet {
        self.vars.iter().copied().collect()
    }

    pub fn rows(&self) -> &BTreeSet<Row> {
        &self.rows
    }

    pub fn width(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn position(&self, v: VarId) -> Option<usize> {
        self.vars.binary_search(&v).ok()
    }

    /// Rows as assignments.
    pub fn assignments(&self) -> impl Iterator<Item = Assignment> + '_ {
        self.rows.iter().map(|r| self.vars.iter().copied().zip(r.iter().copied()).collect())
    }

    /// Membership of an assignment defined exactly on `vars`.
    pub fn contains(&self, a: &Assignment) -> bool {
        if a.len() != self.vars.len() {
            return false;
        }
        let row: Option<Row> = self.vars.iter().map(|v| a.get(v).copied()).collect();
        row.is_some_and(|r| self.rows.contains(&r))
    }

    /// `F ↾ U`.
    pub fn project(&self, target: &VarSet) -> Result<Constraint, ConstraintError> {
        let keep: Option<Vec<usize>> = target.iter().map(|&v| self.position(v)).collect();
        let keep = keep.ok_or(ConstraintError::NotSubset)?;
        Ok(Constraint {
            vars: target.iter().copied().collect(),
            rows: self.rows.iter().map(|r| keep.iter().map(|&k| r[k]).collect()).collect(),
        })
    }

    /// `F_1 ⋈ F_2` on `U_1 ∪ U_2`.
    pub fn join(&self, other: &Constraint) -> Constraint {
        let vars: Vec<VarId> =
            self.vars.iter().chain(&other.vars).copied().collect::<BTreeSet<_>>().into_iter().collect();
        // For each output column, where to read it from.
        let src: Vec<(bool, usize)> = vars
            .iter()
            .map(|&v| match self.position(v) {
                Some(p) => (true, p),
                None => (false, other.position(v).unwrap()),
            })
            .collect();
        let shared: Vec<(usize, usize)> =
            self.vars.iter().enumerate().filter_map(|(p, &v)| other.position(v).map(|q| (p, q))).collect();
        let mut index: BTreeMap<Row, Vec<&Row>> = BTreeMap::new();
        for r in &other.rows {
            let key = shared.iter().map(|&(_, q)| r[q]).collect();
            index.entry(key).or_default().push(r);
        }
        let mut rows = BTreeSet::new();
        for r1 in &self.rows {
            let key: Row = shared.iter().map(|&(p, _)| r1[p]).collect();
            for r2 in index.get(&key).into_iter().flatten() {
                rows.insert(src.iter().map(|&(left, k)| if left { r1[k] } else { r2[k] }).collect());
            }
        }
        Constraint { vars, rows }
    }

    /// `ε_y F`: the maps on `V \ {y}` all of whose extensions by an element
    /// of `universe` lie in `F`.
    pub fn forall_eliminate(&self, y: VarId, universe: &[Elem]) -> Result<Constraint, ConstraintError> {
        let p = self.position(y).ok_or(ConstraintError::MissingVariable(y.0))?;
        if universe.is_empty() {
            return Err(ConstraintError::EmptyUniverse);
        }
        let rows: HashSet<&Row> = self.rows.iter().collect();
        let mut out = BTreeSet::new();
        for r in &self.rows {
            let mut rest = r.clone();
            rest.remove(p);
            if out.contains(&rest) {
                continue;
            }
            let all = universe.iter().all(|&b| {
                let mut ext = rest.clone();
                ext.insert(p, b);
                rows.contains(&ext)
            });
            if all {
                out.insert(rest);
            }
        }
        let mut vars = self.vars.clone();
        vars.remove(p);
        Ok(Constraint { vars, rows: out })
    }

    /// Intersection of two constraints over the same variables.
    pub fn intersect(&self, other: &Constraint) -> Constraint {
        debug_assert_eq!(self.vars, other.vars);
        Constraint { vars: self.vars.clone(), rows: self.rows.intersection(&other.rows).cloned().collect() }
    }

    pub fn is_subset(&self, other: &Constraint) -> bool {
        self.vars == other.vars && self.rows.is_subset(&other.rows)
    }
}
