//! Judgement proofs, clause proofs and consistency checking for quantified
//! conjunctive formulas over finite structures.

pub mod batch;
pub mod clause;
pub mod clause_proof;
pub mod consistency;
pub mod constraint;
pub mod fixtures;
pub mod judgement;
pub mod model;
pub mod oracle;
pub mod rewrite;
pub mod sample;
pub mod text;
pub mod trace;
pub mod translation;
