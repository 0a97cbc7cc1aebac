//! Small hand-built instances used throughout the tests, benches and docs.

use crate::clause::{Clause, Literal};
use crate::model::{
    Atom, Formula, Index, QcInstance, QcbfFormula, RelId, RelationSymbol, Signature, SortId, Structure, Tree, VarTable,
};

fn eu_structure(e_univ: &[&str], u_univ: &[&str], tuples: &[(&str, &str)]) -> Structure {
    let sig = Signature {
        sorts: vec!["e".into(), "u".into()],
        relations: vec![RelationSymbol { name: "E".into(), arity: vec![SortId(0), SortId(1)] }],
    };
    let mut st = Structure::new(sig);
    for n in e_univ {
        st.add_element(SortId(0), n);
    }
    for n in u_univ {
        st.add_element(SortId(1), n);
    }
    for (a, b) in tuples {
        st.add_tuple(RelId(0), &[a, b]);
    }
    st
}

/// `E^B` of the running example.
pub const RUNNING_EXAMPLE_TUPLES: [(&str, &str); 5] = [("a", "d"), ("a", "e"), ("a", "f"), ("b", "e"), ("c", "f")];

/// `∃x ∀y (E(x,y) ∧ ∃x E(x,y))` with locations 1..6 in depth-first order,
/// over the given interpretation of `E` with `B_e = {a,b,c}`,
/// `B_u = {d,e,f}`.
pub fn running_example_with(tuples: &[(&str, &str)]) -> QcInstance {
    let mut vt = VarTable::new();
    let x = vt.get_or_insert("x", SortId(0)).unwrap();
    let y = vt.get_or_insert("y", SortId(1)).unwrap();
    let e = || Tree::Leaf(Atom { relation: RelId(0), args: vec![x, y] });
    let tree = Tree::exists(x, Tree::forall(y, Tree::and(vec![e(), Tree::exists(x, e())])));
    QcInstance::new(Formula::from_tree(vt, tree), eu_structure(&["a", "b", "c"], &["d", "e", "f"], tuples))
}

/// The running example, which is true.
pub fn running_example() -> QcInstance {
    running_example_with(&RUNNING_EXAMPLE_TUPLES)
}

/// The running example without `(a, f)`; no `x` is related to every `y`,
/// so the sentence is false.
pub fn running_example_falsified() -> QcInstance {
    running_example_with(&[("a", "d"), ("a", "e"), ("b", "e"), ("c", "f")])
}

/// Location `n` of [`running_example`] as numbered in its figure.
pub fn running_example_index(n: u32) -> Index {
    Index(n)
}

/// `∃x ∀y E(x,y)` with `B_e = {a,b}`, `B_u = {d,e,f}`.
pub fn prenex_exists_forall(tuples: &[(&str, &str)]) -> QcInstance {
    let mut vt = VarTable::new();
    let x = vt.get_or_insert("x", SortId(0)).unwrap();
    let y = vt.get_or_insert("y", SortId(1)).unwrap();
    let tree = Tree::exists(x, Tree::forall(y, Tree::Leaf(Atom { relation: RelId(0), args: vec![x, y] })));
    QcInstance::new(Formula::from_tree(vt, tree), eu_structure(&["a", "b"], &["d", "e", "f"], tuples))
}

/// The false instance used by the consistency examples:
/// `E = {(a,d),(a,e),(b,f)}`.
pub fn false_exists_forall() -> QcInstance {
    prenex_exists_forall(&[("a", "d"), ("a", "e"), ("b", "f")])
}

/// Builds a prenex QCBF. `prefix` is a whitespace separated list such as
/// `"e x a y"` (`e` existential, `a` universal); clauses are written as
/// `"x -y"`. The matrix is a conjunction, even for a single clause.
pub fn prenex_qbf(prefix: &str, clauses: &[&str]) -> QcbfFormula {
    let mut vt = VarTable::new();
    let words: Vec<&str> = prefix.split_whitespace().collect();
    let mut quants = Vec::new();
    for pair in words.chunks(2) {
        let v = vt.get_or_insert(pair[1], SortId(0)).unwrap();
        quants.push((pair[0] == "a", v));
    }
    let matrix = Tree::and(clauses.iter().map(|c| Tree::Leaf(parse_clause(&mut vt, c))).collect());
    let tree =
        quants.into_iter().rev().fold(
            matrix,
            |body, (universal, v)| {
                if universal {
                    Tree::forall(v, body)
                } else {
                    Tree::exists(v, body)
                }
            },
        );
    Formula::from_tree(vt, tree)
}

/// Parses `"x -y z"` against (and extending) a variable table.
pub fn parse_clause(vt: &mut VarTable, text: &str) -> Clause {
    let lits = text
        .split_whitespace()
        .map(|w| {
            let (positive, name) = match w.strip_prefix('-') {
                Some(n) => (false, n),
                None => (true, w),
            };
            Literal { var: vt.get_or_insert(name, SortId(0)).unwrap(), positive }
        })
        .collect();
    Clause::new(lits).expect("well-formed clause")
}
