//! Text formats: instance documents, proof documents, traces and
//! constraint table dumps.
//!
//! An instance document is a sequence of sections, each opened by a header
//! line (`SORTS`, `RELATIONS`, `UNIVERSE`, `TUPLES`, `FORMULA`). A document
//! without `SORTS` is a QCBF, whose formula uses `(clause ...)` leaves and
//! unsorted binders. `#` starts a comment.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::clause::{Clause, Literal};
use crate::clause_proof::{ClauseJudgement, ClauseProof, ClauseRule, ClauseStep};
use crate::consistency::ConstraintSystemTable;
use crate::constraint::Constraint;
use crate::judgement::{Judgement, JudgementProof, JudgementRule, JudgementStep};
use crate::model::{
    validate_instance, validate_qcbf, Atom, Elem, Formula, Index, Leaf, Node, QcInstance, QcbfFormula, RelationSymbol,
    Signature, SortId, Structure, Tree, VarId, VarTable,
};
use crate::trace::{Label, LocatedSet, LocatedVariable, Trace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ErrorKind {
    Lexical,
    Structural,
    Validation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, thiserror::Error)]
#[error("line {line}, column {col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ErrorKind,
    pub message: String,
}

fn err<T>(line: usize, col: usize, kind: ErrorKind, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { line, col, kind, message: message.into() })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Document {
    Qcsp(QcInstance),
    Qcbf(QcbfFormula),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Open,
    Close,
    Word(String),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | ':' | '\'' | '=' | '+' | '*' | '/' | '<' | '>' | '!' | '?')
}

fn lex_line(text: &str, line: usize) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut k = 0;
    while k < chars.len() {
        let c = chars[k];
        let col = k + 1;
        if c == '#' {
            break;
        } else if c.is_whitespace() {
            k += 1;
        } else if c == '(' || c == ')' {
            out.push(Token { tok: if c == '(' { Tok::Open } else { Tok::Close }, line, col });
            k += 1;
        } else if word_char(c) {
            let start = k;
            while k < chars.len() && word_char(chars[k]) {
                k += 1;
            }
            out.push(Token { tok: Tok::Word(chars[start..k].iter().collect()), line, col });
        } else {
            return err(line, col, ErrorKind::Lexical, format!("unexpected character {c:?}"));
        }
    }
    Ok(out)
}

const SECTIONS: [&str; 5] = ["SORTS", "RELATIONS", "UNIVERSE", "TUPLES", "FORMULA"];

struct Section {
    line: usize,
    lines: Vec<(usize, Vec<Token>)>,
}

fn is_header(tokens: &[Token]) -> Option<&str> {
    match tokens {
        [Token { tok: Tok::Word(w), .. }] if w.chars().all(|c| c.is_ascii_uppercase()) => Some(w.as_str()),
        _ => None,
    }
}

fn split_sections(text: &str) -> Result<BTreeMap<&'static str, Section>, ParseError> {
    let mut sections: BTreeMap<&'static str, Section> = BTreeMap::new();
    let mut current: Option<&'static str> = None;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let tokens = lex_line(raw, line)?;
        if tokens.is_empty() {
            continue;
        }
        if let Some(h) = is_header(&tokens) {
            let Some(&name) = SECTIONS.iter().find(|&&s| s == h) else {
                return err(line, tokens[0].col, ErrorKind::Structural, format!("unknown section {h}"));
            };
            if sections.contains_key(name) {
                return err(line, 1, ErrorKind::Structural, format!("duplicate section {name}"));
            }
            sections.insert(name, Section { line, lines: vec![] });
            current = Some(name);
            continue;
        }
        let Some(cur) = current else {
            return err(line, tokens[0].col, ErrorKind::Structural, "content before the first section header");
        };
        sections.get_mut(cur).unwrap().lines.push((line, tokens));
    }
    Ok(sections)
}

fn word(t: &Token) -> Option<&str> {
    match &t.tok {
        Tok::Word(w) => Some(w),
        _ => None,
    }
}

fn expect_word<'a>(t: &'a Token, what: &str) -> Result<&'a str, ParseError> {
    word(t).ok_or_else(|| ParseError {
        line: t.line,
        col: t.col,
        kind: ErrorKind::Structural,
        message: format!("expected {what}"),
    })
}

/// Splits `name : rest` lines.
fn colon_line(tokens: &[Token]) -> Result<(&Token, &[Token]), ParseError> {
    let t = &tokens[0];
    let name = expect_word(t, "a name")?;
    if name.ends_with(':') && name.len() > 1 {
        // `E:` written without a space is not accepted; keep the grammar simple.
        return err(t.line, t.col, ErrorKind::Structural, "expected ' : ' after the name");
    }
    match tokens.get(1) {
        Some(c) if word(c) == Some(":") => Ok((t, &tokens[2..])),
        Some(c) => err(c.line, c.col, ErrorKind::Structural, "expected ':'"),
        None => err(t.line, t.col + name.len(), ErrorKind::Structural, "expected ':'"),
    }
}

/// Parses an instance or QCBF document.
pub fn parse_document(text: &str) -> Result<Document, ParseError> {
    let sections = split_sections(text)?;
    let last_line = text.lines().count().max(1);
    let Some(formula) = sections.get("FORMULA") else {
        return err(last_line, 1, ErrorKind::Structural, "missing FORMULA section");
    };
    let tokens: Vec<Token> = formula.lines.iter().flat_map(|(_, t)| t.iter().cloned()).collect();
    if tokens.is_empty() {
        return err(formula.line, 1, ErrorKind::Structural, "empty FORMULA section");
    }
    if !sections.contains_key("SORTS") {
        for s in ["RELATIONS", "UNIVERSE", "TUPLES"] {
            if let Some(sec) = sections.get(s) {
                return err(sec.line, 1, ErrorKind::Structural, format!("{s} requires a SORTS section"));
            }
        }
        let mut p =
            FormulaParser { tokens: &tokens, pos: 0, vt: VarTable::new(), scope: vec![], sig: None, end: formula.line };
        let tree = p.expr_qcbf()?;
        p.finish()?;
        let f = Formula::from_tree(p.vt, tree);
        if let Some(v) = validate_qcbf(&f).first() {
            return err(formula.line, 1, ErrorKind::Validation, v.to_string());
        }
        return Ok(Document::Qcbf(f));
    }
    let st = parse_structure(&sections)?;
    let mut p = FormulaParser {
        tokens: &tokens,
        pos: 0,
        vt: VarTable::new(),
        scope: vec![],
        sig: Some(&st.signature),
        end: formula.line,
    };
    let tree = p.expr_qcsp()?;
    p.finish()?;
    let inst = QcInstance::new(Formula::from_tree(p.vt, tree), st);
    if let Some(v) = validate_instance(&inst).first() {
        return err(formula.line, 1, ErrorKind::Validation, v.to_string());
    }
    Ok(Document::Qcsp(inst))
}

pub fn parse_instance(text: &str) -> Result<QcInstance, ParseError> {
    match parse_document(text)? {
        Document::Qcsp(i) => Ok(i),
        Document::Qcbf(_) => err(1, 1, ErrorKind::Structural, "expected a QCSP instance, found a QCBF"),
    }
}

pub fn parse_qcbf(text: &str) -> Result<QcbfFormula, ParseError> {
    match parse_document(text)? {
        Document::Qcbf(f) => Ok(f),
        Document::Qcsp(_) => err(1, 1, ErrorKind::Structural, "expected a QCBF, found a QCSP instance"),
    }
}

fn parse_structure(sections: &BTreeMap<&'static str, Section>) -> Result<Structure, ParseError> {
    let mut sig = Signature::default();
    for (_, line) in &sections["SORTS"].lines {
        for t in line {
            let name = expect_word(t, "a sort name")?;
            if sig.sorts.iter().any(|s| s == name) {
                return err(t.line, t.col, ErrorKind::Validation, format!("duplicate sort {name}"));
            }
            sig.sorts.push(name.to_string());
        }
    }
    if let Some(sec) = sections.get("RELATIONS") {
        for (_, line) in &sec.lines {
            let (name_tok, rest) = colon_line(line)?;
            let name = word(name_tok).unwrap();
            if sig.relation_by_name(name).is_some() {
                return err(name_tok.line, name_tok.col, ErrorKind::Validation, format!("duplicate relation {name}"));
            }
            let mut arity = vec![];
            for t in rest {
                let s = expect_word(t, "a sort name")?;
                let Some(id) = sig.sort_by_name(s) else {
                    return err(t.line, t.col, ErrorKind::Validation, format!("unknown sort {s}"));
                };
                arity.push(id);
            }
            sig.relations.push(RelationSymbol { name: name.to_string(), arity });
        }
    }
    let mut st = Structure::new(sig);
    if let Some(sec) = sections.get("UNIVERSE") {
        let mut seen = BTreeSet::new();
        for (_, line) in &sec.lines {
            let t = &line[0];
            let s = expect_word(t, "a sort name")?;
            let Some(id) = st.signature.sort_by_name(s) else {
                return err(t.line, t.col, ErrorKind::Validation, format!("unknown sort {s}"));
            };
            if !seen.insert(id) {
                return err(t.line, t.col, ErrorKind::Validation, format!("universe of {s} given twice"));
            }
            match line.get(1) {
                Some(e) if word(e) == Some("=") => {}
                Some(e) => return err(e.line, e.col, ErrorKind::Structural, "expected '='"),
                None => return err(t.line, t.col, ErrorKind::Structural, "expected '='"),
            }
            for e in &line[2..] {
                let name = expect_word(e, "an element name")?;
                if st.element_by_name(name).is_some_and(|x| st.universe(id).contains(&x)) {
                    return err(e.line, e.col, ErrorKind::Validation, format!("duplicate element {name}"));
                }
                st.add_element(id, name);
            }
        }
    }
    if let Some(sec) = sections.get("TUPLES") {
        for (_, line) in &sec.lines {
            let (name_tok, rest) = colon_line(line)?;
            let name = word(name_tok).unwrap();
            let Some(rel) = st.signature.relation_by_name(name) else {
                return err(name_tok.line, name_tok.col, ErrorKind::Validation, format!("unknown relation {name}"));
            };
            let arity = st.signature.relation(rel).arity.clone();
            let mut k = 0;
            while k < rest.len() {
                let open = &rest[k];
                if open.tok != Tok::Open {
                    return err(open.line, open.col, ErrorKind::Structural, "expected '(' to start a tuple");
                }
                k += 1;
                let mut tuple = vec![];
                loop {
                    let Some(t) = rest.get(k) else {
                        return err(open.line, open.col, ErrorKind::Structural, "unclosed tuple");
                    };
                    k += 1;
                    match &t.tok {
                        Tok::Close => break,
                        Tok::Open => return err(t.line, t.col, ErrorKind::Structural, "nested tuple"),
                        Tok::Word(w) => tuple.push((t, w.clone())),
                    }
                }
                if tuple.len() != arity.len() {
                    return err(
                        open.line,
                        open.col,
                        ErrorKind::Validation,
                        format!("tuple of length {} for {name} of arity {}", tuple.len(), arity.len()),
                    );
                }
                let mut elems = vec![];
                for ((t, w), &s) in tuple.iter().zip(&arity) {
                    match st.element_by_name(w) {
                        Some(e) if st.universe(s).contains(&e) => elems.push(e),
                        _ => {
                            return err(
                                t.line,
                                t.col,
                                ErrorKind::Validation,
                                format!("{w} is not in the universe of {}", st.signature.sorts[s.ix()]),
                            )
                        }
                    }
                }
                st.interpretations[rel.ix()].insert(elems);
            }
        }
    }
    Ok(st)
}

type LeafParser<'f, P, L> = dyn FnMut(&mut P, &str, usize, usize) -> Result<Tree<L>, ParseError> + 'f;

struct FormulaParser<'a> {
    tokens: &'a [Token],
    pos: usize,
    vt: VarTable,
    scope: Vec<VarId>,
    sig: Option<&'a Signature>,
    end: usize,
}

impl FormulaParser<'_> {
    fn next(&mut self) -> Result<&Token, ParseError> {
        let end = self.end;
        let t = self.tokens.get(self.pos).ok_or_else(|| ParseError {
            line: self.tokens.last().map_or(end, |t| t.line),
            col: self.tokens.last().map_or(1, |t| t.col),
            kind: ErrorKind::Structural,
            message: "unexpected end of formula".into(),
        })?;
        self.pos += 1;
        Ok(t)
    }

    fn peek_close(&self) -> bool {
        self.tokens.get(self.pos).is_some_and(|t| t.tok == Tok::Close)
    }

    fn close(&mut self) -> Result<(), ParseError> {
        let t = self.next()?.clone();
        if t.tok != Tok::Close {
            return err(t.line, t.col, ErrorKind::Structural, "expected ')'");
        }
        Ok(())
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.tokens.get(self.pos) {
            Some(t) => err(t.line, t.col, ErrorKind::Structural, "trailing input after the formula"),
            None => Ok(()),
        }
    }

    fn head(&mut self) -> Result<(String, usize, usize), ParseError> {
        let t = self.next()?.clone();
        if t.tok != Tok::Open {
            return err(t.line, t.col, ErrorKind::Structural, "expected '('");
        }
        let h = self.next()?.clone();
        let w = expect_word(&h, "a connective")?.to_string();
        Ok((w, h.line, h.col))
    }

    fn binder(&mut self) -> Result<VarId, ParseError> {
        let t = self.next()?.clone();
        let w = expect_word(&t, "a variable")?;
        let id = match self.sig {
            Some(sig) => {
                let Some((name, sort)) = w.split_once(':') else {
                    return err(t.line, t.col, ErrorKind::Structural, "expected variable:sort");
                };
                let Some(s) = sig.sort_by_name(sort) else {
                    return err(t.line, t.col, ErrorKind::Validation, format!("unknown sort {sort}"));
                };
                self.vt.get_or_insert(name, s).map_err(|_| ParseError {
                    line: t.line,
                    col: t.col,
                    kind: ErrorKind::Validation,
                    message: format!("variable {name} used with two sorts"),
                })?
            }
            None => self.vt.get_or_insert(w, SortId(0)).expect("single sort"),
        };
        Ok(id)
    }

    fn bound(&self, t: &Token, name: &str) -> Result<VarId, ParseError> {
        match self.vt.by_name(name) {
            Some(v) if self.scope.contains(&v) => Ok(v),
            _ => err(t.line, t.col, ErrorKind::Validation, format!("unbound variable {name}")),
        }
    }

    fn expr<L>(&mut self, leaf: &mut LeafParser<'_, Self, L>) -> Result<Tree<L>, ParseError> {
        let (h, line, col) = self.head()?;
        match h.as_str() {
            "exists" | "forall" => {
                let v = self.binder()?;
                self.scope.push(v);
                let body = self.expr(leaf)?;
                self.scope.pop();
                self.close()?;
                Ok(if h == "forall" { Tree::forall(v, body) } else { Tree::exists(v, body) })
            }
            "and" => {
                let mut cs = vec![];
                while !self.peek_close() {
                    cs.push(self.expr(leaf)?);
                }
                if cs.is_empty() {
                    return err(line, col, ErrorKind::Structural, "conjunction without conjuncts");
                }
                self.close()?;
                Ok(Tree::And(cs))
            }
            "true" => {
                self.close()?;
                Ok(Tree::True)
            }
            other => leaf(self, other, line, col),
        }
    }

    fn expr_qcsp(&mut self) -> Result<Tree<Atom>, ParseError> {
        self.expr(&mut |p: &mut Self, head: &str, line, col| {
            if head != "atom" {
                return err(line, col, ErrorKind::Structural, format!("unknown connective {head}"));
            }
            let t = p.next()?.clone();
            let name = expect_word(&t, "a relation name")?;
            let sig = p.sig.expect("qcsp");
            let Some(rel) = sig.relation_by_name(name) else {
                return err(t.line, t.col, ErrorKind::Validation, format!("unknown relation {name}"));
            };
            let mut args = vec![];
            while !p.peek_close() {
                let a = p.next()?.clone();
                let n = expect_word(&a, "a variable")?;
                args.push(p.bound(&a, n)?);
            }
            p.close()?;
            let arity = &sig.relation(rel).arity;
            if arity.len() != args.len() {
                return err(t.line, t.col, ErrorKind::Validation, format!("{name} expects {} arguments", arity.len()));
            }
            Ok(Tree::Leaf(Atom { relation: rel, args }))
        })
    }

    fn expr_qcbf(&mut self) -> Result<Tree<Clause>, ParseError> {
        self.expr(&mut |p: &mut Self, head: &str, line, col| {
            if head != "clause" {
                return err(line, col, ErrorKind::Structural, format!("unknown connective {head}"));
            }
            let mut lits = vec![];
            while !p.peek_close() {
                let a = p.next()?.clone();
                let w = expect_word(&a, "a literal")?;
                let (positive, name) = match w.strip_prefix('-') {
                    Some(n) => (false, n),
                    None => (true, w),
                };
                lits.push(Literal { var: p.bound(&a, name)?, positive });
            }
            p.close()?;
            Clause::new(lits).map(Tree::Leaf).map_err(|e| ParseError {
                line,
                col,
                kind: ErrorKind::Validation,
                message: e.to_string(),
            })
        })
    }
}

fn print_tree<L: Leaf>(
    f: &Formula<L>,
    i: Index,
    binder: &dyn Fn(VarId) -> String,
    leaf: &dyn Fn(&L) -> String,
    out: &mut String,
) {
    match f.node(i) {
        Node::Leaf(l) => out.push_str(&leaf(l)),
        Node::True => out.push_str("(true)"),
        Node::And(cs) => {
            out.push_str("(and");
            for &c in cs {
                out.push(' ');
                print_tree(f, c, binder, leaf, out);
            }
            out.push(')');
        }
        Node::Exists(v, c) | Node::Forall(v, c) => {
            let q = if matches!(f.node(i), Node::Forall(..)) { "forall" } else { "exists" };
            let _ = write!(out, "({q} {} ", binder(*v));
            print_tree(f, *c, binder, leaf, out);
            out.push(')');
        }
    }
}

/// Canonical text of a QCSP instance.
pub fn print_instance(inst: &QcInstance) -> String {
    let st = &inst.structure;
    let sig = &st.signature;
    let mut out = String::new();
    let _ = writeln!(out, "SORTS\n{}", sig.sorts.join(" "));
    out.push_str("RELATIONS\n");
    for r in &sig.relations {
        let sorts: Vec<&str> = r.arity.iter().map(|s| sig.sorts[s.ix()].as_str()).collect();
        let _ = writeln!(out, "{} : {}", r.name, sorts.join(" "));
    }
    out.push_str("UNIVERSE\n");
    for (s, name) in sig.sorts.iter().enumerate() {
        let elems: Vec<&str> = st.universe(SortId(s as u32)).iter().map(|&e| st.element_name(e)).collect();
        let _ = writeln!(out, "{name} = {}", elems.join(" "));
    }
    out.push_str("TUPLES\n");
    for (r, rel) in sig.relations.iter().enumerate() {
        let tuples: Vec<String> = st.interpretations[r]
            .iter()
            .map(|t| format!("({})", t.iter().map(|&e| st.element_name(e)).collect::<Vec<_>>().join(" ")))
            .collect();
        let _ = writeln!(out, "{} : {}", rel.name, tuples.join(" "));
    }
    out.push_str("FORMULA\n");
    let f = &inst.formula;
    let mut body = String::new();
    let leaf = |a: &Atom| {
        let mut s = format!("(atom {}", sig.relation(a.relation).name);
        for &v in &a.args {
            s.push(' ');
            s.push_str(f.vars().name(v));
        }
        s.push(')');
        s
    };
    let binder = |v: VarId| format!("{}:{}", f.vars().name(v), sig.sorts[f.vars().sort(v).ix()]);
    print_tree(f, f.root(), &binder, &leaf, &mut body);
    out.push_str(&body);
    out.push('\n');
    out.lines().map(str::trim_end).collect::<Vec<_>>().join("\n") + "\n"
}

fn literal_text(vt: &VarTable, l: &Literal) -> String {
    format!("{}{}", if l.positive { "" } else { "-" }, vt.name(l.var))
}

/// Literals ordered by variable name, so the text does not depend on how
/// variable ids were assigned.
fn clause_literals(vt: &VarTable, c: &Clause) -> Vec<String> {
    let mut lits: Vec<&Literal> = c.literals().iter().collect();
    lits.sort_by_key(|l| vt.name(l.var));
    lits.into_iter().map(|l| literal_text(vt, l)).collect()
}

fn clause_words(vt: &VarTable, c: &Clause) -> String {
    clause_literals(vt, c).join(" ")
}

/// Canonical text of a QCBF.
pub fn print_qcbf(f: &QcbfFormula) -> String {
    let mut body = String::new();
    let leaf = |c: &Clause| {
        let words = clause_words(f.vars(), c);
        if words.is_empty() {
            "(clause)".to_string()
        } else {
            format!("(clause {words})")
        }
    };
    let binder = |v: VarId| f.vars().name(v).to_string();
    print_tree(f, f.root(), &binder, &leaf, &mut body);
    format!("FORMULA\n{body}\n")
}

pub fn print_document(d: &Document) -> String {
    match d {
        Document::Qcsp(i) => print_instance(i),
        Document::Qcbf(f) => print_qcbf(f),
    }
}

/// First 16 hex digits of the SHA-256 of the canonical document.
pub fn document_hash(d: &Document) -> String {
    let digest = Sha256::digest(print_document(d).as_bytes());
    hex::encode(digest)[..16].to_string()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ProofSystem {
    Qcsp,
    Qcbf,
}

impl ProofSystem {
    fn word(self) -> &'static str {
        match self {
            ProofSystem::Qcsp => "qcsp",
            ProofSystem::Qcbf => "qcbf",
        }
    }
}

const MAGIC: &str = "qjudge-proof";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofDocument<P> {
    pub system: ProofSystem,
    pub hash: String,
    pub proof: P,
}

fn premise_list(ps: &[usize]) -> String {
    format!("[{}]", ps.iter().map(|p| (p + 1).to_string()).collect::<Vec<_>>().join(","))
}

fn constraint_text(inst: &QcInstance, c: &Constraint) -> String {
    let vt = inst.formula.vars();
    let st = &inst.structure;
    let vars: Vec<&str> = c.vars().iter().map(|&v| vt.name(v)).collect();
    let rows: Vec<String> = c
        .rows()
        .iter()
        .map(|r| format!("({})", r.iter().map(|&e| st.element_name(e)).collect::<Vec<_>>().join(",")))
        .collect();
    format!("vars=[{}] rows={{{}}}", vars.join(","), rows.join(","))
}

pub fn print_judgement_proof(inst: &QcInstance, proof: &JudgementProof) -> String {
    let vt = inst.formula.vars();
    let mut out = format!("{MAGIC} qcsp {}\n", document_hash(&Document::Qcsp(inst.clone())));
    for (k, s) in proof.steps.iter().enumerate() {
        let params = match s.rule {
            JudgementRule::ForallElimination { var, .. } => format!(" var={}", vt.name(var)),
            _ => String::new(),
        };
        let _ = writeln!(
            out,
            "{}: {} {}{} @{} {}",
            k + 1,
            s.rule.name(),
            premise_list(&s.rule.premises()),
            params,
            s.judgement.location.0,
            constraint_text(inst, &s.judgement.constraint)
        );
    }
    out
}

pub fn print_clause_proof(f: &QcbfFormula, proof: &ClauseProof) -> String {
    let vt = f.vars();
    let mut out = format!("{MAGIC} qcbf {}\n", document_hash(&Document::Qcbf(f.clone())));
    for (k, s) in proof.steps.iter().enumerate() {
        let params = match s.rule {
            ClauseRule::Resolve { pivot, .. } => format!(" pivot={}", vt.name(pivot)),
            ClauseRule::ForallRemoval { var, .. } => format!(" var={}", vt.name(var)),
            _ => String::new(),
        };
        let lits = clause_literals(vt, &s.judgement.clause);
        let _ = writeln!(
            out,
            "{}: {} {}{} @{} clause=({})",
            k + 1,
            s.rule.name(),
            premise_list(&s.rule.premises()),
            params,
            s.judgement.location.0,
            lits.join(",")
        );
    }
    out
}

/// Reads the header line of a proof document.
pub fn proof_header(text: &str) -> Result<(ProofSystem, String), ParseError> {
    let first = text.lines().next().unwrap_or("");
    let words: Vec<&str> = first.split_whitespace().collect();
    match words.as_slice() {
        [MAGIC, sys, hash] => {
            let system = match *sys {
                "qcsp" => ProofSystem::Qcsp,
                "qcbf" => ProofSystem::Qcbf,
                _ => return err(1, MAGIC.len() + 2, ErrorKind::Structural, format!("unknown proof system {sys}")),
            };
            if hash.is_empty() || !hash.chars().all(|c| c.is_ascii_hexdigit()) {
                return err(1, first.find(hash).unwrap_or(0) + 1, ErrorKind::Lexical, "hash must be hexadecimal");
            }
            Ok((system, hash.to_string()))
        }
        _ => err(1, 1, ErrorKind::Structural, format!("expected '{MAGIC} qcsp|qcbf <hash>'")),
    }
}

/// The fields of one step line.
struct StepLine<'a> {
    line: usize,
    text: &'a str,
    rule: &'a str,
    premises: Vec<usize>,
    param: Option<(&'a str, &'a str)>,
    location: Index,
    rest: &'a str,
}

fn col_of(text: &str, part: &str) -> usize {
    (part.as_ptr() as usize).saturating_sub(text.as_ptr() as usize) + 1
}

fn split_step<'a>(line: usize, text: &'a str, expected: usize) -> Result<StepLine<'a>, ParseError> {
    let structural = |part: &str, msg: String| err::<StepLine>(line, col_of(text, part), ErrorKind::Structural, msg);
    let Some((num, rest)) = text.split_once(':') else {
        return structural(text, "expected '<n>:'".into());
    };
    if num.trim().parse::<usize>().ok() != Some(expected) {
        return structural(num, format!("expected step number {expected}"));
    }
    let mut parts = rest.split_whitespace();
    let Some(rule) = parts.next() else { return structural(rest, "missing rule".into()) };
    let Some(prem) = parts.next() else { return structural(rule, "missing premise list".into()) };
    let Some(inner) = prem.strip_prefix('[').and_then(|p| p.strip_suffix(']')) else {
        return structural(prem, "premise list must look like [1,2]".into());
    };
    let mut premises = vec![];
    for p in inner.split(',').filter(|p| !p.is_empty()) {
        match p.parse::<usize>() {
            Ok(n) if n >= 1 => premises.push(n - 1),
            _ => return err(line, col_of(text, p), ErrorKind::Lexical, format!("bad premise {p}")),
        }
    }
    let mut next = parts.next();
    let mut param = None;
    if let Some(w) = next {
        if !w.starts_with('@') {
            let Some((k, v)) = w.split_once('=') else { return structural(w, "expected a parameter or @index".into()) };
            param = Some((k, v));
            next = parts.next();
        }
    }
    let Some(loc) = next.and_then(|w| w.strip_prefix('@')) else {
        return structural(next.unwrap_or(rest), "expected @index".into());
    };
    let Ok(location) = loc.parse::<u32>() else {
        return err(line, col_of(text, loc), ErrorKind::Lexical, format!("bad index {loc}"));
    };
    let after = &text[col_of(text, loc) - 1 + loc.len()..];
    Ok(StepLine { line, text, rule, premises, param, location: Index(location), rest: after.trim() })
}

fn var_by_name(vt: &VarTable, line: usize, col: usize, name: &str) -> Result<VarId, ParseError> {
    vt.by_name(name).ok_or_else(|| ParseError {
        line,
        col,
        kind: ErrorKind::Validation,
        message: format!("unknown variable {name}"),
    })
}

fn premise(s: &StepLine, n: usize) -> Result<usize, ParseError> {
    s.premises.get(n).copied().map_or_else(
        || err(s.line, col_of(s.text, s.rule), ErrorKind::Structural, format!("{} needs more premises", s.rule)),
        Ok,
    )
}

fn arity_check(s: &StepLine, n: usize) -> Result<(), ParseError> {
    if s.premises.len() != n {
        return err(s.line, col_of(s.text, s.rule), ErrorKind::Structural, format!("{} takes {n} premises", s.rule));
    }
    Ok(())
}

fn param_var(s: &StepLine, key: &str, vt: &VarTable) -> Result<VarId, ParseError> {
    match s.param {
        Some((k, v)) if k == key => var_by_name(vt, s.line, col_of(s.text, v), v),
        _ => err(s.line, col_of(s.text, s.rule), ErrorKind::Structural, format!("{} needs {key}=<variable>", s.rule)),
    }
}

fn no_param(s: &StepLine) -> Result<(), ParseError> {
    match s.param {
        Some((k, _)) => err(s.line, col_of(s.text, k), ErrorKind::Structural, format!("{} takes no parameter", s.rule)),
        None => Ok(()),
    }
}

fn parse_constraint(inst: &QcInstance, s: &StepLine) -> Result<Constraint, ParseError> {
    let vt = inst.formula.vars();
    let rest = s.rest;
    let bad =
        |part: &str, msg: &str| err::<Constraint>(s.line, col_of(s.text, part), ErrorKind::Structural, msg.to_string());
    let Some(after) = rest.strip_prefix("vars=[") else { return bad(rest, "expected vars=[...]") };
    let Some((names, rows)) = after.split_once(']') else { return bad(after, "unclosed variable list") };
    let mut vars = vec![];
    for n in names.split(',').map(str::trim).filter(|n| !n.is_empty()) {
        vars.push(var_by_name(vt, s.line, col_of(s.text, n), n)?);
    }
    let rows = rows.trim();
    let Some(body) = rows.strip_prefix("rows={").and_then(|r| r.strip_suffix('}')) else {
        return bad(rows, "expected rows={...}");
    };
    let mut out = vec![];
    let mut rest = body.trim();
    while !rest.is_empty() {
        let Some(inner) = rest.strip_prefix('(') else { return bad(rest, "expected '('") };
        let Some((tuple, tail)) = inner.split_once(')') else { return bad(inner, "unclosed row") };
        let mut row = vec![];
        for e in tuple.split(',').map(str::trim).filter(|e| !e.is_empty()) {
            let Some(el) = inst.structure.element_by_name(e) else {
                return err(s.line, col_of(s.text, e), ErrorKind::Validation, format!("unknown element {e}"));
            };
            row.push(el);
        }
        if row.len() != vars.len() {
            return err(s.line, col_of(s.text, tuple), ErrorKind::Validation, "row length differs from vars");
        }
        out.push(row);
        rest = tail.trim_start().strip_prefix(',').unwrap_or(tail).trim_start();
    }
    Constraint::new(vars, out).map_err(|e| ParseError {
        line: s.line,
        col: col_of(s.text, s.rest),
        kind: ErrorKind::Validation,
        message: e.to_string(),
    })
}

/// Header hash and numbered step lines.
type StepLines<'a> = (String, Vec<(usize, &'a str)>);

fn step_lines(text: &str, want: ProofSystem) -> Result<StepLines<'_>, ParseError> {
    let (system, hash) = proof_header(text)?;
    if system != want {
        return err(1, MAGIC.len() + 2, ErrorKind::Structural, format!("expected a {} proof", want.word()));
    }
    let lines = text
        .lines()
        .enumerate()
        .skip(1)
        .map(|(n, l)| (n + 1, l))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .collect();
    Ok((hash, lines))
}

/// Parses a constraint proof against the instance it refers to. The header
/// hash is returned, not compared.
pub fn parse_judgement_proof(text: &str, inst: &QcInstance) -> Result<ProofDocument<JudgementProof>, ParseError> {
    let (hash, lines) = step_lines(text, ProofSystem::Qcsp)?;
    let vt = inst.formula.vars();
    let mut proof = JudgementProof::default();
    for (k, (line, l)) in lines.into_iter().enumerate() {
        let s = split_step(line, l, k + 1)?;
        let rule = match s.rule {
            "atom" => {
                arity_check(&s, 0)?;
                no_param(&s)?;
                JudgementRule::Atom
            }
            "project" | "up" | "down" => {
                arity_check(&s, 1)?;
                no_param(&s)?;
                let premise = premise(&s, 0)?;
                match s.rule {
                    "project" => JudgementRule::Projection { premise },
                    "up" => JudgementRule::UpwardFlow { premise },
                    _ => JudgementRule::DownwardFlow { premise },
                }
            }
            "join" => {
                arity_check(&s, 2)?;
                no_param(&s)?;
                JudgementRule::Join { left: premise(&s, 0)?, right: premise(&s, 1)? }
            }
            "forall-elim" => {
                arity_check(&s, 1)?;
                JudgementRule::ForallElimination { premise: premise(&s, 0)?, var: param_var(&s, "var", vt)? }
            }
            other => return err(line, col_of(l, s.rule), ErrorKind::Structural, format!("unknown rule {other}")),
        };
        let constraint = parse_constraint(inst, &s)?;
        proof.steps.push(JudgementStep { rule, judgement: Judgement::new(s.location, constraint) });
    }
    Ok(ProofDocument { system: ProofSystem::Qcsp, hash, proof })
}

pub fn parse_clause_proof(text: &str, f: &QcbfFormula) -> Result<ProofDocument<ClauseProof>, ParseError> {
    let (hash, lines) = step_lines(text, ProofSystem::Qcbf)?;
    let vt = f.vars();
    let mut proof = ClauseProof::default();
    for (k, (line, l)) in lines.into_iter().enumerate() {
        let s = split_step(line, l, k + 1)?;
        let rule = match s.rule {
            "clause" => {
                arity_check(&s, 0)?;
                no_param(&s)?;
                ClauseRule::Clause
            }
            "up" | "down" => {
                arity_check(&s, 1)?;
                no_param(&s)?;
                let premise = premise(&s, 0)?;
                if s.rule == "up" {
                    ClauseRule::UpwardFlow { premise }
                } else {
                    ClauseRule::DownwardFlow { premise }
                }
            }
            "resolve" => {
                arity_check(&s, 2)?;
                ClauseRule::Resolve {
                    left: premise(&s, 0)?,
                    right: premise(&s, 1)?,
                    pivot: param_var(&s, "pivot", vt)?,
                }
            }
            "forall-remove" => {
                arity_check(&s, 1)?;
                ClauseRule::ForallRemoval { premise: premise(&s, 0)?, var: param_var(&s, "var", vt)? }
            }
            other => return err(line, col_of(l, s.rule), ErrorKind::Structural, format!("unknown rule {other}")),
        };
        let Some(body) = s.rest.strip_prefix("clause=(").and_then(|b| b.strip_suffix(')')) else {
            return err(line, col_of(l, s.rest), ErrorKind::Structural, "expected clause=(...)");
        };
        let mut lits = vec![];
        for w in body.split(',').map(str::trim).filter(|w| !w.is_empty()) {
            let (positive, name) = match w.strip_prefix('-') {
                Some(n) => (false, n),
                None => (true, w),
            };
            lits.push(Literal { var: var_by_name(vt, line, col_of(l, w), name)?, positive });
        }
        let clause = Clause::new(lits).map_err(|e| ParseError {
            line,
            col: col_of(l, body),
            kind: ErrorKind::Validation,
            message: e.to_string(),
        })?;
        proof.steps.push(ClauseStep { rule, judgement: ClauseJudgement::new(s.location, clause) });
    }
    Ok(ProofDocument { system: ProofSystem::Qcbf, hash, proof })
}

fn label_text(vt: &VarTable, l: &Label) -> String {
    let set: Vec<String> = l
        .set
        .iter()
        .map(|lv| format!("({},{},{})", lv.location.0, vt.name(lv.var), if lv.universal { "∀" } else { "∃" }))
        .collect();
    let a: Vec<String> = l.assignment.iter().map(|(&v, &b)| format!("{}={}", vt.name(v), u8::from(b))).collect();
    format!("S=[{}] a={{{}}}", set.join(","), a.join(","))
}

/// One node per line, children indented by two spaces.
pub fn print_trace(f: &QcbfFormula, t: &Trace) -> String {
    fn go(f: &QcbfFormula, t: &Trace, depth: usize, out: &mut String) {
        out.push_str(&"  ".repeat(depth));
        out.push_str(&label_text(f.vars(), &t.label));
        if let Some(i) = t.leaf {
            let _ = write!(out, " falsifies @{}", i.0);
        }
        out.push('\n');
        for c in &t.children {
            go(f, c, depth + 1, out);
        }
    }
    let mut out = String::new();
    go(f, t, 0, &mut out);
    out
}

fn parse_label(f: &QcbfFormula, line: usize, text: &str, body: &str) -> Result<(Label, Option<Index>), ParseError> {
    let vt = f.vars();
    let bad = |part: &str, msg: &str| err(line, col_of(text, part), ErrorKind::Structural, msg.to_string());
    let Some(after) = body.strip_prefix("S=[") else { return bad(body, "expected S=[...]") };
    let Some((set_text, rest)) = after.split_once(']') else { return bad(after, "unclosed S") };
    let mut set = LocatedSet::new();
    let mut cur = set_text.trim();
    while !cur.is_empty() {
        let Some(inner) = cur.strip_prefix('(') else { return bad(cur, "expected '('") };
        let Some((triple, tail)) = inner.split_once(')') else { return bad(inner, "unclosed located variable") };
        let parts: Vec<&str> = triple.split(',').map(str::trim).collect();
        let [loc, var, q] = parts.as_slice() else { return bad(triple, "expected (index,variable,∀|∃)") };
        let Ok(loc) = loc.parse::<u32>() else { return err(line, col_of(text, loc), ErrorKind::Lexical, "bad index") };
        let universal = match *q {
            "∀" | "A" => true,
            "∃" | "E" => false,
            _ => return bad(q, "expected ∀ or ∃"),
        };
        set.insert(LocatedVariable {
            location: Index(loc),
            var: var_by_name(vt, line, col_of(text, var), var)?,
            universal,
        });
        cur = tail.trim_start().strip_prefix(',').unwrap_or(tail).trim_start();
    }
    let rest = rest.trim_start();
    let Some(after) = rest.strip_prefix("a={") else { return bad(rest, "expected a={...}") };
    let Some((a_text, tail)) = after.split_once('}') else { return bad(after, "unclosed assignment") };
    let mut assignment = BTreeMap::new();
    for pair in a_text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let Some((v, b)) = pair.split_once('=') else { return bad(pair, "expected v=0|1") };
        let value = match b {
            "0" => false,
            "1" => true,
            _ => return err(line, col_of(text, b), ErrorKind::Lexical, "values are 0 or 1"),
        };
        assignment.insert(var_by_name(vt, line, col_of(text, v), v)?, value);
    }
    let tail = tail.trim();
    let leaf = if tail.is_empty() {
        None
    } else {
        let Some(idx) = tail.strip_prefix("falsifies @") else { return bad(tail, "expected 'falsifies @index'") };
        let Ok(i) = idx.trim().parse::<u32>() else {
            return err(line, col_of(text, idx), ErrorKind::Lexical, "bad index");
        };
        Some(Index(i))
    };
    Ok((Label { set, assignment }, leaf))
}

pub fn parse_trace(text: &str, f: &QcbfFormula) -> Result<Trace, ParseError> {
    let mut stack: Vec<(usize, Trace)> = vec![];
    let mut root: Option<Trace> = None;
    let fold = |stack: &mut Vec<(usize, Trace)>, root: &mut Option<Trace>, to: usize| {
        while stack.len() > to {
            let (_, t) = stack.pop().unwrap();
            match stack.last_mut() {
                Some((_, parent)) => parent.children.push(t),
                None => *root = Some(t),
            }
        }
    };
    for (n, l) in text.lines().enumerate() {
        let line = n + 1;
        if l.trim().is_empty() {
            continue;
        }
        let indent = l.len() - l.trim_start_matches(' ').len();
        if indent % 2 != 0 {
            return err(line, 1, ErrorKind::Structural, "indentation must be a multiple of two spaces");
        }
        let depth = indent / 2;
        if root.is_some() || (stack.is_empty() && depth != 0) {
            return err(line, 1, ErrorKind::Structural, "a trace has exactly one root");
        }
        if depth > stack.len() {
            return err(line, 1, ErrorKind::Structural, "indentation skips a level");
        }
        fold(&mut stack, &mut root, depth);
        if root.is_some() {
            return err(line, 1, ErrorKind::Structural, "a trace has exactly one root");
        }
        let (label, leaf) = parse_label(f, line, l, l.trim_start())?;
        stack.push((depth, Trace { label, children: vec![], leaf }));
    }
    fold(&mut stack, &mut root, 0);
    root.map_or_else(|| err(1, 1, ErrorKind::Structural, "empty trace"), Ok)
}

/// One line per table entry, `i [v1,v2] : {rows}`, in key order.
pub fn print_table(inst: &QcInstance, table: &ConstraintSystemTable) -> String {
    let vt = inst.formula.vars();
    let st = &inst.structure;
    let mut lines: Vec<((u32, Vec<&str>), String)> = table
        .entries
        .iter()
        .map(|((i, vars), c)| {
            let names: Vec<&str> = vars.iter().map(|&v| vt.name(v)).collect();
            let rows: Vec<String> = c
                .rows()
                .iter()
                .map(|r| format!("({})", r.iter().map(|&e: &Elem| st.element_name(e)).collect::<Vec<_>>().join(",")))
                .collect();
            ((i.0, names.clone()), format!("{} [{}] : {{{}}}", i.0, names.join(","), rows.join(",")))
        })
        .collect();
    lines.sort();
    lines.into_iter().map(|(_, l)| l + "\n").collect()
}
