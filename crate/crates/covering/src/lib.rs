//! Covering systems of the integers: exact construction, transformation, and
//! verification.
//!
//! A covering system is a finite set of congruences such that every integer
//! satisfies at least one of them. This crate provides:
//!
//! - exact CRT arithmetic on factored naturals and residue classes ([`arith`]);
//! - the covering-system value type with audits and a text format ([`system`]);
//! - two independent coverage deciders plus an exact uncovered-measure
//!   computation ([`verifier`]);
//! - a condensed tree-diagram DSL with wedges and power branches, expansion,
//!   structural verification, and symbolic audits ([`treespec`], [`families`]);
//! - ready-made covering constructions ([`constructions`]);
//! - covering-preserving transformations ([`transforms`]).

pub mod arith;
pub mod constructions;
pub mod families;
pub mod system;
pub mod transforms;
pub mod treespec;
pub mod verifier;

pub use arith::{
    class_relation, crt_combine, split_class, ClassRelation, Congruence, FactoredNat,
    ResidueClass,
};
pub use system::{audit, density, parse_system, serialize_system, AuditReport, CoveringSystem};
pub use verifier::{brute_force_verify, split_verify, uncovered_measure, CoverReport, Verdict};
