use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qjudge::clause::{Clause, Literal};
use qjudge::clause_proof::{check_clause_proof, qres_closure_derive, QresError, QresOptions};
use qjudge::consistency::{bounded_width_refutation_search, propagate, ConsistencyError};
use qjudge::judgement::{check_proof, generate_refutation, Refutation};
use qjudge::model::{QcInstance, QcbfFormula};
use qjudge::oracle;
use qjudge::text::{
    document_hash, parse_clause_proof, parse_document, parse_judgement_proof, parse_trace, print_clause_proof,
    print_instance, print_judgement_proof, print_table, print_trace, proof_header, Document, ProofSystem,
};
use qjudge::trace::{detect_falsity, proof_to_trace, trace_to_proof, validate_trace, Policy, SearchError};
use qjudge::translation::{clause_to_constraint_proof, constraint_to_clause_proof, qcsp_translation};

#[derive(Parser)]
#[command(name = "qjudge", version, about = "Judgement proofs for quantified constraint formulas")]
struct Cli {
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate an instance or QCBF by brute force.
    Eval { file: PathBuf },
    /// Check a proof document against an instance.
    Check {
        file: PathBuf,
        #[arg(long)]
        proof: PathBuf,
    },
    /// Produce a refutation by brute-force search (the proof goes to stdout or --out).
    Prove {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for a falsity trace of a QCBF.
    Refute {
        file: PathBuf,
        #[arg(long, default_value = "default")]
        policy: Policy,
        #[arg(long)]
        max_steps: Option<usize>,
        /// Print the compiled clause proof instead of the trace.
        #[arg(long)]
        proof: bool,
    },
    /// Validate a trace file against a QCBF.
    Trace {
        file: PathBuf,
        trace: PathBuf,
        /// Print the compiled clause proof.
        #[arg(long)]
        compile: bool,
    },
    /// Decide k-judge-consistency by propagation.
    Consistency {
        file: PathBuf,
        #[arg(short, default_value_t = 2)]
        k: usize,
        /// Dump the fixpoint table.
        #[arg(long)]
        table: bool,
        /// Also search for a width-k refutation and print it.
        #[arg(long)]
        refutation: bool,
        #[arg(long)]
        max_steps: Option<usize>,
    },
    /// Print the QCSP instance of a QCBF.
    Translate { file: PathBuf },
    /// Derive a clause of the Q-resolution closure of a prenex QCBF.
    Simqres {
        file: PathBuf,
        /// Target clause such as "x,-y"; empty by default.
        #[arg(long, default_value = "")]
        target: String,
        #[arg(long)]
        existential_pivots: bool,
        #[arg(long)]
        max_clauses: Option<usize>,
    },
    /// Convert between traces, clause proofs and constraint proofs of a QCBF.
    Convert {
        file: PathBuf,
        /// A proof document or a trace.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        to: Target,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Trace,
    Qcbf,
    Qcsp,
}

enum Failure {
    Input(String),
    Violated(Value, String),
    Limit(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Violated(..) => 2,
            Failure::Limit(_) => 3,
        }
    }
}

/// Text and JSON forms of a successful report.
struct Report {
    text: String,
    json: Value,
}

fn report(text: impl Into<String>, json: Value) -> Result<Report, Failure> {
    Ok(Report { text: text.into(), json })
}

fn input<E: std::fmt::Display>(what: &Path) -> impl FnOnce(E) -> Failure + '_ {
    move |e| Failure::Input(format!("{}: {e}", what.display()))
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(input(path))
}

fn load(path: &Path) -> Result<Document, Failure> {
    parse_document(&read(path)?).map_err(input(path))
}

fn load_qcbf(path: &Path) -> Result<QcbfFormula, Failure> {
    match load(path)? {
        Document::Qcbf(f) => Ok(f),
        Document::Qcsp(_) => Err(Failure::Input(format!("{}: expected a QCBF document", path.display()))),
    }
}

/// A QCSP instance, translating QCBF input.
fn load_instance(path: &Path) -> Result<(QcInstance, Option<QcbfFormula>), Failure> {
    Ok(match load(path)? {
        Document::Qcsp(i) => (i, None),
        Document::Qcbf(f) => (qcsp_translation(&f).0, Some(f)),
    })
}

fn check_hash(found: &str, doc: &Document) -> Result<(), Failure> {
    let expected = document_hash(doc);
    if found == expected {
        Ok(())
    } else {
        let msg = format!("hash mismatch: proof is for {found}, instance is {expected}");
        Err(Failure::Violated(json!({ "valid": false, "hash_mismatch": true }), msg))
    }
}

fn write_out(out: &Option<PathBuf>, text: &str) -> Result<Option<String>, Failure> {
    match out {
        Some(p) => {
            std::fs::write(p, text).map_err(input(p))?;
            Ok(None)
        }
        None => Ok(Some(text.to_string())),
    }
}

fn parse_target(f: &QcbfFormula, text: &str) -> Result<Clause, Failure> {
    let mut lits = vec![];
    for word in text.split([',', ' ']).filter(|w| !w.is_empty()) {
        let (neg, name) = word.strip_prefix('-').map_or((false, word), |n| (true, n));
        let v = f.vars().by_name(name).ok_or_else(|| Failure::Input(format!("unknown variable `{name}`")))?;
        lits.push(if neg { Literal::neg(v) } else { Literal::pos(v) });
    }
    Clause::new(lits).map_err(|e| Failure::Input(e.to_string()))
}

fn eval(file: &Path) -> Result<Report, Failure> {
    let truth = match load(file)? {
        Document::Qcsp(i) => oracle::is_true(&i),
        Document::Qcbf(f) => oracle::qcbf_is_true(&f),
    };
    report(truth.to_string(), json!({ "truth": truth }))
}

fn check(file: &Path, proof: &Path) -> Result<Report, Failure> {
    let text = read(proof)?;
    let (system, hash) = proof_header(&text).map_err(input(proof))?;
    let (json, valid, head, tail) = match (system, load(file)?) {
        (ProofSystem::Qcbf, Document::Qcbf(f)) => {
            check_hash(&hash, &Document::Qcbf(f.clone()))?;
            let doc = parse_clause_proof(&text, &f).map_err(input(proof))?;
            let r = check_clause_proof(&f, &doc.proof);
            let tail = format!(
                "length={}, refutes={}, tree_like={}, non_flow={}",
                r.length, r.refutes, r.tree_like, r.non_flow_count
            );
            let msgs = r.violations.iter().map(|v| format!("step {}: {}", v.step, v.message)).collect::<Vec<_>>();
            (serde_json::to_value(&r).unwrap(), r.valid, format!("width={}", r.width), (tail, msgs))
        }
        (ProofSystem::Qcsp, doc) => {
            let inst = match doc {
                Document::Qcsp(i) => i,
                Document::Qcbf(f) => qcsp_translation(&f).0,
            };
            check_hash(&hash, &Document::Qcsp(inst.clone()))?;
            let doc = parse_judgement_proof(&text, &inst).map_err(input(proof))?;
            let r = check_proof(&inst, &doc.proof);
            let tail = format!("length={}, refutes={}", r.length, r.refutes);
            let msgs = r.violations.iter().map(|v| format!("step {}: {}", v.step, v.message)).collect::<Vec<_>>();
            (serde_json::to_value(&r).unwrap(), r.valid, format!("width={}", r.width), (tail, msgs))
        }
        (ProofSystem::Qcbf, Document::Qcsp(_)) => {
            return Err(Failure::Input("a qcbf proof needs a QCBF document".into()));
        }
    };
    let (tail, msgs) = tail;
    if valid {
        report(format!("valid, {head}\n{tail}"), json)
    } else {
        Err(Failure::Violated(json, format!("invalid, {head}\n{}", msgs.join("\n"))))
    }
}

fn prove(file: &Path, out: &Option<PathBuf>) -> Result<Report, Failure> {
    let (inst, qcbf) = load_instance(file)?;
    let Refutation::Refuted(jp) = generate_refutation(&inst) else {
        return Err(Failure::Violated(json!({ "truth": true }), "true: no refutation exists".into()));
    };
    let (text, system, len) = match qcbf {
        Some(f) => {
            let cp = constraint_to_clause_proof(&f, &inst, &jp).map_err(|e| Failure::Input(e.to_string()))?;
            (print_clause_proof(&f, &cp), "qcbf", cp.len())
        }
        None => (print_judgement_proof(&inst, &jp), "qcsp", jp.len()),
    };
    let shown = write_out(out, &text)?;
    let summary = format!("refuted, {len} steps");
    report(shown.unwrap_or(summary), json!({ "truth": false, "system": system, "length": len, "proof": text }))
}

fn search_failure(e: SearchError) -> Failure {
    Failure::Limit(e.to_string())
}

fn refute(file: &Path, policy: Policy, max_steps: Option<usize>, as_proof: bool) -> Result<Report, Failure> {
    let f = load_qcbf(file)?;
    let Some(t) = detect_falsity(&f, policy, max_steps).map_err(search_failure)? else {
        return Err(Failure::Violated(json!({ "truth": true }), "true: no falsity trace".into()));
    };
    let text = if as_proof {
        let p = trace_to_proof(&f, &t).map_err(|e| Failure::Input(e.to_string()))?;
        print_clause_proof(&f, &p)
    } else {
        print_trace(&f, &t)
    };
    report(text.clone(), json!({ "truth": false, "nodes": t.node_count(), "depth": t.depth(), "output": text }))
}

fn trace(file: &Path, trace: &Path, compile: bool) -> Result<Report, Failure> {
    let f = load_qcbf(file)?;
    let t = parse_trace(&read(trace)?, &f).map_err(input(trace))?;
    if let Err(v) = validate_trace(&f, &t) {
        return Err(Failure::Violated(
            json!({ "valid": false, "violation": v.to_string() }),
            format!("invalid trace: {v}"),
        ));
    }
    let summary = format!("valid trace, nodes={}, depth={}", t.node_count(), t.depth());
    let mut j = json!({ "valid": true, "nodes": t.node_count(), "depth": t.depth() });
    if !compile {
        return report(summary, j);
    }
    let p = trace_to_proof(&f, &t).map_err(|e| Failure::Violated(json!({ "valid": false }), e.to_string()))?;
    let text = print_clause_proof(&f, &p);
    j["proof"] = json!(text);
    report(format!("{summary}\n{}", text.trim_end()), j)
}

fn consistency_failure(e: ConsistencyError) -> Failure {
    match e {
        ConsistencyError::ResourceLimit(_) => Failure::Limit(e.to_string()),
        _ => Failure::Input(e.to_string()),
    }
}

fn consistency(
    file: &Path,
    k: usize,
    table: bool,
    refutation: bool,
    max_steps: Option<usize>,
) -> Result<Report, Failure> {
    let (inst, _) = load_instance(file)?;
    let p = propagate(&inst, k).map_err(consistency_failure)?;
    let verdict = if p.consistent { "CONSISTENT" } else { "INCONSISTENT" };
    let mut text = format!("{verdict} (k={k})");
    let mut j = json!({ "consistent": p.consistent, "k": k, "iterations": p.iterations, "entries": p.table.size() });
    if table {
        let dump = print_table(&inst, &p.table);
        text.push('\n');
        text.push_str(dump.trim_end());
        j["table"] = json!(dump);
    }
    if refutation && !p.consistent {
        let proof = bounded_width_refutation_search(&inst, k, max_steps).map_err(consistency_failure)?;
        if let Some(proof) = proof {
            let dump = print_judgement_proof(&inst, &proof);
            text.push('\n');
            text.push_str(dump.trim_end());
            j["refutation"] = json!(dump);
        }
    }
    report(text, j)
}

fn translate(file: &Path) -> Result<Report, Failure> {
    let f = load_qcbf(file)?;
    let (inst, _) = qcsp_translation(&f);
    let text = print_instance(&inst);
    report(text.trim_end(), json!({ "instance": text, "hash": document_hash(&Document::Qcsp(inst)) }))
}

fn simqres(file: &Path, target: &str, existential_pivots: bool, max_clauses: Option<usize>) -> Result<Report, Failure> {
    let f = load_qcbf(file)?;
    let target = parse_target(&f, target)?;
    let opts = QresOptions { existential_pivots, max_clauses };
    let p = qres_closure_derive(&f, &target, opts).map_err(|e| match e {
        QresError::NotPrenex => Failure::Input(e.to_string()),
        QresError::NotInClosure => Failure::Violated(json!({ "derived": false }), e.to_string()),
        QresError::ResourceLimit(_) => Failure::Limit(e.to_string()),
    })?;
    let text = print_clause_proof(&f, &p);
    report(text.trim_end(), json!({ "derived": true, "length": p.len(), "proof": text }))
}

fn convert(file: &Path, from: &Path, to: Target) -> Result<Report, Failure> {
    let f = load_qcbf(file)?;
    let text = read(from)?;
    let bad = |e: &dyn std::fmt::Display| Failure::Violated(json!({ "converted": false }), e.to_string());
    let (inst, _) = qcsp_translation(&f);
    let header = proof_header(&text).ok();
    match &header {
        Some((ProofSystem::Qcbf, h)) => check_hash(h, &Document::Qcbf(f.clone()))?,
        Some((ProofSystem::Qcsp, h)) => check_hash(h, &Document::Qcsp(inst.clone()))?,
        None => {}
    }
    let out = match (header.map(|h| h.0), to) {
        (None, Target::Qcbf) => {
            let t = parse_trace(&text, &f).map_err(input(from))?;
            print_clause_proof(&f, &trace_to_proof(&f, &t).map_err(|e| bad(&e))?)
        }
        (Some(ProofSystem::Qcbf), Target::Trace) => {
            let doc = parse_clause_proof(&text, &f).map_err(input(from))?;
            print_trace(&f, &proof_to_trace(&f, &doc.proof).map_err(|e| bad(&e))?)
        }
        (Some(ProofSystem::Qcbf), Target::Qcsp) => {
            let doc = parse_clause_proof(&text, &f).map_err(input(from))?;
            let jp = clause_to_constraint_proof(&f, &inst, &doc.proof).map_err(|e| bad(&e))?;
            print_judgement_proof(&inst, &jp)
        }
        (Some(ProofSystem::Qcsp), Target::Qcbf) => {
            let doc = parse_judgement_proof(&text, &inst).map_err(input(from))?;
            let cp = constraint_to_clause_proof(&f, &inst, &doc.proof).map_err(|e| bad(&e))?;
            print_clause_proof(&f, &cp)
        }
        (Some(ProofSystem::Qcsp), Target::Trace) => {
            let doc = parse_judgement_proof(&text, &inst).map_err(input(from))?;
            let cp = constraint_to_clause_proof(&f, &inst, &doc.proof).map_err(|e| bad(&e))?;
            print_trace(&f, &proof_to_trace(&f, &cp).map_err(|e| bad(&e))?)
        }
        (None, Target::Qcsp) => {
            let t = parse_trace(&text, &f).map_err(input(from))?;
            let cp = trace_to_proof(&f, &t).map_err(|e| bad(&e))?;
            let jp = clause_to_constraint_proof(&f, &inst, &cp).map_err(|e| bad(&e))?;
            print_judgement_proof(&inst, &jp)
        }
        (None, Target::Trace) | (Some(ProofSystem::Qcbf), Target::Qcbf) | (Some(ProofSystem::Qcsp), Target::Qcsp) => {
            return Err(Failure::Input("input already has the requested form".into()));
        }
    };
    report(out.trim_end(), json!({ "converted": true, "output": out }))
}

fn run(cli: &Cli) -> Result<Report, Failure> {
    match &cli.cmd {
        Cmd::Eval { file } => eval(file),
        Cmd::Check { file, proof } => check(file, proof),
        Cmd::Prove { file, out } => prove(file, out),
        Cmd::Refute { file, policy, max_steps, proof } => refute(file, *policy, *max_steps, *proof),
        Cmd::Trace { file, trace: t, compile } => trace(file, t, *compile),
        Cmd::Consistency { file, k, table, refutation, max_steps } => {
            consistency(file, *k, *table, *refutation, *max_steps)
        }
        Cmd::Translate { file } => translate(file),
        Cmd::Simqres { file, target, existential_pivots, max_clauses } => {
            simqres(file, target, *existential_pivots, *max_clauses)
        }
        Cmd::Convert { file, input: from, to } => convert(file, from, *to),
    }
}

fn emit(line: impl std::fmt::Display) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(r) => {
            if cli.json {
                emit(&r.json);
            } else {
                emit(r.text.trim_end());
            }
            ExitCode::SUCCESS
        }
        Err(fail) => {
            let code = fail.code();
            match (&fail, cli.json) {
                (Failure::Violated(j, msg), true) => {
                    let mut j = j.clone();
                    j["message"] = json!(msg);
                    emit(&j);
                }
                (Failure::Violated(_, msg), false) => emit(msg),
                (Failure::Input(msg) | Failure::Limit(msg), true) => {
                    let kind = if code == 1 { "input" } else { "resource_limit" };
                    emit(json!({ "error": kind, "message": msg }));
                }
                (Failure::Input(msg) | Failure::Limit(msg), false) => eprintln!("error: {msg}"),
            }
            ExitCode::from(code)
        }
    }
}
