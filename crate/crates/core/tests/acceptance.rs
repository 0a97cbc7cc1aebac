//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines are always printed.

use std::collections::BTreeSet;
use std::time::Instant;

use qjudge::batch::par_map;
use qjudge::clause::Clause;
use qjudge::clause_proof::{check_clause_proof, qres_closure, qres_closure_derive, QresOptions};
use qjudge::consistency::{
    bounded_width_refutation_search, is_k_judge_consistent, iteration_bound, minimal_derivable, propagate_with,
    qwidth_consistency_check, verify_system, RuleOrder,
};
use qjudge::constraint::Constraint;
use qjudge::judgement::{
    check_proof, check_step, generate_refutation, Judgement, JudgementRule, JudgementStep, Refutation,
};
use qjudge::model::{Index, QcInstance};
use qjudge::oracle;
use qjudge::rewrite::prenex_by_inverse_rewrites;
use qjudge::sample;
use qjudge::text::parse_instance;
use qjudge::trace::{detect_falsity, proof_to_trace, trace_to_proof, validate_trace, Policy};
use qjudge::translation::{
    clause_blowup, clause_entailment_holds, clause_to_constraint_proof, constraint_entailment_holds,
    constraint_to_clause_proof, qcsp_translation,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn golden_text() -> String {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../cli/examples/ex33.qcsp");
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

fn golden_example() -> Outcome {
    let inst = parse_instance(&golden_text()).map_err(|e| e.to_string())?;
    ensure(oracle::is_true(&inst), || "the golden instance evaluates false".into())?;
    let vt = inst.formula.vars();
    let (x, y) = (vt.by_name("x").unwrap(), vt.by_name("y").unwrap());
    let el = |n: &str| inst.structure.element_by_name(n).unwrap();
    let f_e = Constraint::new(
        vec![x, y],
        [("a", "d"), ("a", "e"), ("a", "f"), ("b", "e"), ("c", "f")].iter().map(|(p, q)| vec![el(p), el(q)]),
    )
    .unwrap();
    let g = Constraint::new(vec![x], [vec![el("a")]]).unwrap();
    let h = Constraint::new(vec![x], ["a", "b", "c"].iter().map(|n| vec![el(n)])).unwrap();
    let step = |rule, i: u32, c: &Constraint| JudgementStep { rule, judgement: Judgement::new(Index(i), c.clone()) };
    let steps = [
        step(JudgementRule::Atom, 4, &f_e),
        step(JudgementRule::UpwardFlow { premise: 0 }, 3, &f_e),
        step(JudgementRule::ForallElimination { premise: 1, var: y }, 2, &g),
        step(JudgementRule::DownwardFlow { premise: 2 }, 3, &g),
        step(JudgementRule::DownwardFlow { premise: 3 }, 4, &g),
        step(JudgementRule::Atom, 6, &f_e),
        step(JudgementRule::Projection { premise: 5 }, 6, &h),
    ];
    for (k, s) in steps.iter().enumerate() {
        check_step(&inst, &steps[..k], s).map_err(|e| format!("step {}: {e}", k + 1))?;
    }
    let sat = minimal_derivable(&inst, 2, None).map_err(|e| e.to_string())?;
    ensure(sat.covers(Index(4), &g), || "(4,{x},G) missing from the saturation".into())?;
    ensure(sat.covers(Index(6), &h), || "(6,{x},H) missing from the saturation".into())?;
    ensure(!sat.covers(Index(6), &g), || "(6,{x},G) is derivable at width 2".into())?;
    ensure(!sat.proof.steps.iter().any(|s| s.judgement == Judgement::new(Index(6), g.clone())), || {
        "saturation produced (6,{x},G)".into()
    })?;
    Ok(format!("4 derivations check, (6,{{x}},G) absent from {} saturated steps", sat.proof.len()))
}

fn soundness_completeness() -> Outcome {
    let seeds: Vec<u64> = (0..600).collect();
    let results = par_map(&seeds, |&s| {
        let inst = sample::random_instance(&mut sample::rng(1000 + s), 6, 3);
        let truth = oracle::is_true(&inst);
        match generate_refutation(&inst) {
            Refutation::True if truth => Ok(0),
            Refutation::True => Err(format!("seed {s}: false instance but no refutation")),
            Refutation::Refuted(_) if truth => Err(format!("seed {s}: refutation of a true instance")),
            Refutation::Refuted(p) => {
                let rep = check_proof(&inst, &p);
                if !rep.valid || !rep.refutes {
                    Err(format!("seed {s}: invalid refutation {:?}", rep.violations.first()))
                } else if rep.width > inst.formula.width() {
                    Err(format!("seed {s}: width {} > formula width {}", rep.width, inst.formula.width()))
                } else {
                    Ok(1)
                }
            }
        }
    });
    let refuted: usize = results.into_iter().collect::<Result<Vec<_>, _>>()?.iter().sum();
    Ok(format!("{} instances, {refuted} false and refuted, all proofs valid within formula width", seeds.len()))
}

fn translation_bounds() -> Outcome {
    let seeds: Vec<u64> = (0..400).collect();
    let results = par_map(&seeds, |&s| -> Result<Option<()>, String> {
        let mut r = sample::rng(2000 + s);
        let f = sample::random_qcbf(&mut r, 4, 8);
        let cp = sample::random_clause_proof(&mut r, &f, 14);
        if cp.is_empty() {
            return Ok(None);
        }
        let (inst, _) = qcsp_translation(&f);
        let jp = clause_to_constraint_proof(&f, &inst, &cp).map_err(|e| format!("seed {s}: {e}"))?;
        let rep = check_proof(&inst, &jp);
        ensure(rep.valid, || format!("seed {s}: constraint proof invalid {:?}", rep.violations.first()))?;
        ensure(jp.len() <= 2 * cp.len(), || format!("seed {s}: length {} > 2·{}", jp.len(), cp.len()))?;
        ensure(jp.width() <= cp.width() + 1, || format!("seed {s}: width {} > {}+1", jp.width(), cp.width()))?;
        ensure(clause_entailment_holds(&cp, &jp), || format!("seed {s}: clause entailment fails"))?;
        let extra = sample::random_judgement_proof(&mut r, &inst, 12, 3);
        for input in [&jp, &extra] {
            if input.is_empty() {
                continue;
            }
            let back = constraint_to_clause_proof(&f, &inst, input).map_err(|e| format!("seed {s}: {e}"))?;
            let rep = check_clause_proof(&f, &back);
            ensure(rep.valid, || format!("seed {s}: clause proof invalid {:?}", rep.violations.first()))?;
            let bound = input.len() * clause_blowup(input.width());
            ensure(back.len() <= bound, || format!("seed {s}: clause proof length {} > {bound}", back.len()))?;
            ensure(constraint_entailment_holds(input, &back), || format!("seed {s}: constraint entailment fails"))?;
        }
        Ok(Some(()))
    });
    let done = results.into_iter().collect::<Result<Vec<_>, _>>()?.into_iter().flatten().count();
    ensure(done >= 200, || format!("only {done} non-empty clause proofs"))?;
    Ok(format!("{done} clause proofs translated both ways within bounds"))
}

fn qres_simulation() -> Outcome {
    let mut formulas = vec![];
    for n in 1..=2 {
        formulas.extend(sample::enumerate_prenex_qbfs(n, 4));
    }
    formulas.extend(sample::enumerate_prenex_qbfs(3, 2));
    let exhaustive = formulas.len();
    let mut r = sample::rng(3000);
    for _ in 0..3000 {
        formulas.push(sample::random_prenex_qbf(&mut r, 4, 4));
    }
    let results = par_map(&formulas, |f| -> Result<(bool, bool), String> {
        let truth = oracle::qcbf_is_true(f);
        let closure = qres_closure(f, QresOptions::default()).map_err(|e| e.to_string())?;
        if !closure.contains_empty() {
            return Ok((truth, false));
        }
        ensure(!truth, || "empty clause in the closure of a true QBF".into())?;
        let p = qres_closure_derive(f, &Clause::empty(), QresOptions::default()).map_err(|e| e.to_string())?;
        let rep = check_clause_proof(f, &p);
        ensure(rep.valid, || format!("derived proof invalid {:?}", rep.violations.first()))?;
        let last = p.last().expect("non-empty");
        ensure(last.clause.is_empty() && last.location == closure.matrix, || "proof does not end in (c, ⊥)".into())?;
        Ok((truth, true))
    });
    let results = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let derived = results.iter().filter(|(_, d)| *d).count();
    let false_total = results.iter().filter(|(t, _)| !t).count();
    Ok(format!(
        "{} QBFs ({exhaustive} enumerated), {derived} of {false_total} false ones have ⊥ in the closure, all derived and checked",
        formulas.len()
    ))
}

fn trace_proof_equality() -> Outcome {
    let seeds: Vec<u64> = (0..600).collect();
    let results = par_map(&seeds, |&s| -> Result<Option<usize>, String> {
        let mut r = sample::rng(4000 + s);
        let f = if s % 2 == 0 { sample::random_qcbf(&mut r, 3, 8) } else { sample::random_prenex_qbf(&mut r, 3, 3) };
        if oracle::qcbf_is_true(&f) {
            return Ok(None);
        }
        let policy = if s % 3 == 0 { Policy::Random(s) } else { Policy::Default };
        let t = detect_falsity(&f, policy, None).map_err(|e| e.to_string())?.ok_or(format!("seed {s}: no trace"))?;
        validate_trace(&f, &t).map_err(|e| format!("seed {s}: {e}"))?;
        let p = trace_to_proof(&f, &t).map_err(|e| format!("seed {s}: {e}"))?;
        let rep = check_clause_proof(&f, &p);
        ensure(rep.valid && rep.refutes, || format!("seed {s}: compiled proof rejected"))?;
        ensure(t.node_count() == p.non_flow_count(), || {
            format!("seed {s}: {} trace nodes, {} non-flow steps", t.node_count(), p.non_flow_count())
        })?;
        let back = proof_to_trace(&f, &p).map_err(|e| format!("seed {s}: {e}"))?;
        validate_trace(&f, &back).map_err(|e| format!("seed {s}: {e}"))?;
        ensure(back.node_count() == p.non_flow_count(), || format!("seed {s}: inverse changes the count"))?;
        let again = trace_to_proof(&f, &back).map_err(|e| format!("seed {s}: {e}"))?;
        let rep = check_clause_proof(&f, &again);
        ensure(rep.valid && rep.refutes, || format!("seed {s}: round-tripped proof rejected"))?;
        Ok(Some(t.node_count()))
    });
    let sizes: Vec<usize> = results.into_iter().collect::<Result<Vec<_>, _>>()?.into_iter().flatten().collect();
    ensure(sizes.len() >= 100, || format!("only {} traces", sizes.len()))?;
    Ok(format!("{} traces, up to {} nodes, counts equal both ways", sizes.len(), sizes.iter().max().unwrap()))
}

fn small_instances(seed: u64, n: u64) -> Vec<QcInstance> {
    (0..n).map(|s| sample::random_instance(&mut sample::rng(seed + s), 5, 3)).collect()
}

fn characterization() -> Outcome {
    let insts = small_instances(5000, 400);
    let results = par_map(&insts, |inst| -> Result<(bool, bool), String> {
        let mut inconsistent = (false, false);
        for k in 1..=2 {
            let p = propagate_with(inst, k, RuleOrder::Forward).map_err(|e| e.to_string())?;
            let r = bounded_width_refutation_search(inst, k, None).map_err(|e| e.to_string())?;
            ensure(p.consistent == r.is_none(), || {
                format!("k={k}: propagation {} but search {}", p.consistent, r.is_some())
            })?;
            if let Some(r) = r {
                let rep = check_proof(inst, &r);
                ensure(rep.valid && rep.refutes && rep.width <= k, || format!("k={k}: bad refutation"))?;
            }
            if p.consistent {
                verify_system(inst, k, &p.table).map_err(|v| format!("k={k}: {v}"))?;
            }
            if k == 1 {
                inconsistent.0 = !p.consistent;
            } else {
                inconsistent.1 = !p.consistent;
            }
        }
        Ok(inconsistent)
    });
    let results = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let (i1, i2) = (results.iter().filter(|r| r.0).count(), results.iter().filter(|r| r.1).count());
    Ok(format!("{} instances × k∈{{1,2}}, {i1} inconsistent at k=1, {i2} at k=2, all agree", insts.len()))
}

fn propagation_bound() -> Outcome {
    let insts = small_instances(6000, 400);
    let results = par_map(&insts, |inst| -> Result<usize, String> {
        let mut worst = 0;
        for k in 1..=2 {
            let a = propagate_with(inst, k, RuleOrder::Forward).map_err(|e| e.to_string())?;
            let b = propagate_with(inst, k, RuleOrder::Reverse).map_err(|e| e.to_string())?;
            let bound = iteration_bound(inst, k);
            for p in [&a, &b] {
                ensure(p.iterations as u128 <= bound, || {
                    format!("k={k}: {} iterations > bound {bound}", p.iterations)
                })?;
            }
            ensure(a.table == b.table, || format!("k={k}: rule orders reach different fixpoints"))?;
            worst = worst.max(a.iterations.max(b.iterations));
        }
        Ok(worst)
    });
    let worst = results.into_iter().collect::<Result<Vec<_>, _>>()?.into_iter().max().unwrap_or(0);
    Ok(format!("{} instances × 2 orders × k∈{{1,2}}, max {worst} iterations, fixpoints identical", insts.len()))
}

fn qwidth_tractability() -> Outcome {
    let seeds: Vec<u64> = (0..200).collect();
    let results = par_map(&seeds, |&s| -> Result<(bool, usize), String> {
        let inst = sample::random_width2_sentence(&mut sample::rng(7000 + s), 10);
        let pre = prenex_by_inverse_rewrites(&inst.formula).map_err(|e| format!("seed {s}: {e}"))?;
        let chain = pre.forward_chain().map_err(|e| format!("seed {s}: {e}"))?;
        ensure(chain.last().unwrap().to_tree() == inst.formula.to_tree(), || {
            format!("seed {s}: rewrites miss the original")
        })?;
        let prenex = QcInstance::new(pre.prenex.clone(), inst.structure.clone());
        let rep = qwidth_consistency_check(&prenex, 2).map_err(|e| format!("seed {s}: {e}"))?;
        ensure(rep.agree, || format!("seed {s}: consistency {} but truth {}", rep.consistent, rep.oracle_truth))?;
        let mut prev: Option<(bool, bool)> = None;
        for f in &chain {
            let step = QcInstance::new(f.clone(), inst.structure.clone());
            let truth = oracle::is_true(&step);
            let consistent = is_k_judge_consistent(&step, 2).map_err(|e| e.to_string())?;
            if let Some((t, c)) = prev {
                ensure(t == truth, || format!("seed {s}: a rewrite changed the truth value"))?;
                ensure(!c || consistent, || format!("seed {s}: a rewrite lost 2-judge-consistency"))?;
            }
            prev = Some((truth, consistent));
        }
        Ok((rep.oracle_truth, pre.steps.len()))
    });
    let results = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let falses = results.iter().filter(|(t, _)| !t).count();
    let rules: usize = results.iter().map(|(_, n)| n).sum();
    Ok(format!("{} prenex instances ({falses} false), {rules} rewrites checked, all agree", results.len()))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("golden running example", golden_example),
        ("refutation soundness and completeness", soundness_completeness),
        ("clause/constraint translation bounds", translation_bounds),
        ("Q-resolution simulation", qres_simulation),
        ("trace and proof sizes", trace_proof_equality),
        ("consistency characterization", characterization),
        ("propagation bound and order independence", propagation_bound),
        ("Q-width tractability", qwidth_tractability),
    ];
    let filter: BTreeSet<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let id = (n + 1).to_string();
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {id} {name}: {detail} ({secs:.2}s)"),
            Err(why) => {
                failed += 1;
                println!("FAIL {id} {name}: {why} ({secs:.2}s)");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
