//! Condensed tree diagrams for covering systems.
//!
//! A tree describes how the integers are recursively split into residue
//! classes. Every non-leaf node is a `p`-node with exactly `p` effective
//! child branches, one per residue digit; a leaf names the prime powers of
//! its path that it keeps, and forgoing the rest enlarges the congruence to
//! a superset of the leaf's class, so coverage is preserved.
//!
//! Two condensed notations keep diagrams small:
//!
//! - a *wedge* `{m1,..,mk} x m0 take n` stands for the `n` numerically
//!   smallest of the `2^k` subset products times `m0`, one leaf per chosen
//!   modulus, in ascending order;
//! - a *power branch* on a `c`-node repeats the node's remaining children
//!   once per exponent `i`, substituting each factor token `c^e0` with
//!   `c^i`, and closes the descending chain with a terminal `q`-node whose
//!   branch `j` keeps `c^j` and the residue `j` modulo `q`.
//!
//! Grammar of the text form (whitespace insignificant, `#` comments):
//!
//! ```text
//! tree   := ("q" INT ";")? node
//! node   := "node" INT "{" child* "}"
//! child  := node | leaf | wedge | power
//! leaf   := "leaf" "[" factors "]" ";"
//! wedge  := "wedge" "{" factors "}" "x" "[" factors "]" "take" INT ";"
//! power  := "power" INT ("^" INT)? ("term" ("minimal"|"full"))? ";"
//! factors:= factor ("," factor | "*" factor)*
//! factor := INT ("^" INT)? | "@" INT
//! ```
//!
//! `power 3;` declares base prime 3 starting at exponent 1; `power 7^2;`
//! starts at exponent 2 and substitutes only the `7^2` tokens. A terminal
//! branch keeps nothing but `c^j` and the new `q` digit under `term minimal`
//! (the default); `term full` additionally keeps the rest of the path.

mod expand;
mod parse;
mod print;
mod validate;

pub use expand::{expand, expand_with, ExpandConfig};
pub use parse::parse_tree;
pub use print::{to_dot, to_dsl};
pub use validate::{structural_verify, StructuralReport};

pub(crate) use validate::{wedge_branch_tokens, wedge_selection};

use thiserror::Error;

use crate::arith::Prime;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{value} is not prime")]
    NonPrime { value: u64 },
    #[error("node {path}: expected {expected} child branches, found {actual}")]
    ChildCountMismatch {
        path: String,
        expected: u64,
        actual: u64,
    },
    #[error("node {path}: power branch must be the leftmost child")]
    PowerNotLeftmost { path: String },
    #[error("node {path}: more than one power branch")]
    DuplicatePower { path: String },
    #[error("node {path}: power base {base} differs from node prime {node_prime}")]
    PowerBaseMismatch {
        path: String,
        base: u64,
        node_prime: u64,
    },
    #[error("node {path}: power starts at exponent {declared}, path requires {expected}")]
    PowerStartExponent {
        path: String,
        declared: u32,
        expected: u32,
    },
    #[error("node {path}: wedge takes {take} branches but only {available} moduli are available")]
    WedgeTakeTooLarge {
        path: String,
        take: u64,
        available: u64,
    },
    #[error("{path}: factor references prime {prime} which is not on the path")]
    UnknownPathPrime { path: String, prime: Prime },
    #[error("{path}: factor {prime}^{needed} exceeds the path power {prime}^{available}")]
    ContainmentViolation {
        path: String,
        prime: Prime,
        needed: u32,
        available: u32,
    },
    #[error("{path}: prime {prime} repeats inside one factor list")]
    DuplicateFactorPrime { path: String, prime: Prime },
    #[error("{path}: leaf keeps no factors")]
    EmptyLeaf { path: String },
    #[error("node {path}: {prime}-node inside the body of a {prime}-power branch")]
    NestedSamePrimeInPowerBody { path: String, prime: Prime },
    #[error("q = {q} already occurs as a literal prime in the tree")]
    QCollision { q: Prime },
    #[error("terminal prime {q} must exceed the power start exponent {start_exponent}")]
    QBelowPowerStart { q: Prime, start_exponent: u32 },
    #[error("prime power {prime}^{exp} does not fit 128 bits")]
    ComponentOverflow { prime: Prime, exp: u32 },
    #[error("expansion exceeds the budget of {budget} congruences")]
    BudgetExceeded { budget: u64 },
    #[error("family analysis failed: {detail}")]
    FamilyOverlap { detail: String },
}

/// A parsed condensed tree diagram.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeSpec {
    pub root: TreeNode,
    /// Terminal prime the tree was written for, when the source declares one.
    pub declared_q: Option<Prime>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeNode {
    pub prime: Prime,
    pub children: Vec<Child>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Child {
    Node(TreeNode),
    Leaf(Leaf),
    Wedge(Wedge),
    Power(Power),
}

impl Child {
    /// Number of child-branch slots the element occupies.
    pub fn effective_count(&self) -> u64 {
        match self {
            Child::Wedge(w) => w.take,
            _ => 1,
        }
    }
}

/// A leaf keeps the listed prime powers of its path; everything else on the
/// path is forgone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Leaf {
    pub retained: Vec<FactorToken>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FactorToken {
    Literal { prime: Prime, exp: u32 },
    /// `@p`: the full power of `p` accumulated on the path.
    PathRef { prime: Prime },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Wedge {
    pub optional_factors: Vec<FactorToken>,
    pub base: Vec<FactorToken>,
    pub take: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Power {
    pub base_prime: Prime,
    pub start_exponent: u32,
    pub termination: Termination,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Termination {
    /// Terminal branch `j` keeps only `c^j` and the `q` digit.
    #[default]
    Minimal,
    /// Terminal branch `j` also keeps the rest of the path modulus.
    FullContext,
}

impl TreeNode {
    pub fn effective_child_count(&self) -> u64 {
        self.children.iter().map(Child::effective_count).sum()
    }

    /// Every prime literally present in the tree: node primes, factor primes,
    /// power bases.
    pub fn literal_primes(&self) -> std::collections::BTreeSet<Prime> {
        let mut out = std::collections::BTreeSet::new();
        self.collect_primes(&mut out);
        out
    }

    fn collect_primes(&self, out: &mut std::collections::BTreeSet<Prime>) {
        out.insert(self.prime);
        for child in &self.children {
            match child {
                Child::Node(n) => n.collect_primes(out),
                Child::Leaf(l) => {
                    for t in &l.retained {
                        if let FactorToken::Literal { prime, .. } = t {
                            out.insert(*prime);
                        }
                    }
                }
                Child::Wedge(w) => {
                    for t in w.optional_factors.iter().chain(&w.base) {
                        if let FactorToken::Literal { prime, .. } = t {
                            out.insert(*prime);
                        }
                    }
                }
                Child::Power(p) => {
                    out.insert(p.base_prime);
                }
            }
        }
    }
}

impl TreeSpec {
    pub fn literal_primes(&self) -> std::collections::BTreeSet<Prime> {
        self.root.literal_primes()
    }
}

/// Checks `q` against the tree's literal primes.
pub(crate) fn check_q(tree: &TreeSpec, q: Prime, force: bool) -> Result<(), TreeError> {
    if !crate::arith::is_prime(q) {
        return Err(TreeError::NonPrime { value: q });
    }
    if !force && tree.literal_primes().contains(&q) {
        return Err(TreeError::QCollision { q });
    }
    Ok(())
}
