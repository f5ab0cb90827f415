//! Exact expansion of a tree into its covering system.
//!
//! One congruence per expanded branch, in depth-first digit order, with
//! exact duplicates dropped on first sight. Power-branch copies substitute
//! only the `c^e0` factor tokens, so branches that forgo the power prime
//! produce the same congruence at every level and appear once; that is what
//! keeps the moduli of the large constructions distinct.

use std::collections::{BTreeMap, HashSet};

use num_bigint::BigUint;
use num_traits::Zero;

use super::validate::{wedge_branch_tokens, wedge_selection};
use super::{check_q, Child, FactorToken, Power, Termination, TreeError, TreeNode, TreeSpec};
use crate::arith::{Congruence, Prime, ResidueClass};
use crate::system::CoveringSystem;

#[derive(Clone, Debug)]
pub struct ExpandConfig {
    /// Expansion aborts after this many distinct congruences.
    pub budget: u64,
    /// Permit a terminal prime that already occurs in the tree.
    pub force_q: bool,
}

impl Default for ExpandConfig {
    fn default() -> Self {
        Self {
            budget: 1_000_000,
            force_q: false,
        }
    }
}

/// Expands the tree at terminal prime `q` with default limits.
pub fn expand(tree: &TreeSpec, q: Prime) -> Result<CoveringSystem, TreeError> {
    expand_with(tree, q, &ExpandConfig::default())
}

pub fn expand_with(
    tree: &TreeSpec,
    q: Prime,
    cfg: &ExpandConfig,
) -> Result<CoveringSystem, TreeError> {
    check_q(tree, q, cfg.force_q)?;
    let mut run = Expansion {
        q,
        budget: cfg.budget,
        seen: HashSet::new(),
        out: CoveringSystem::with_labels(Vec::new(), Vec::new()),
    };
    run.node(&tree.root, &PathState::default(), &mut Vec::new())?;
    Ok(run.out)
}

#[derive(Clone)]
struct PathComp {
    exp: u32,
    residue: BigUint,
    /// Start exponent of the enclosing power branch unrolling this prime.
    subst: Option<u32>,
}

/// Concrete residues accumulated along the unrolled path.
#[derive(Clone, Default)]
struct PathState {
    components: BTreeMap<Prime, PathComp>,
}

impl PathState {
    fn exp(&self, p: Prime) -> u32 {
        self.components.get(&p).map(|c| c.exp).unwrap_or(0)
    }

    fn residue(&self, p: Prime) -> BigUint {
        self.components
            .get(&p)
            .map(|c| c.residue.clone())
            .unwrap_or_else(BigUint::zero)
    }

    fn subst(&self, p: Prime) -> Option<u32> {
        self.components.get(&p).and_then(|c| c.subst)
    }

    /// Template exponent used for wedge ordering: the written level of a
    /// substituted prime, the path exponent otherwise.
    fn template_exp(&self, p: Prime) -> u32 {
        match self.components.get(&p) {
            Some(c) => c.subst.unwrap_or(c.exp),
            None => 0,
        }
    }

    /// One digit deeper in `p`, keeping any substitution marker.
    fn deepen(&self, p: Prime, digit: u64) -> Self {
        let mut next = self.clone();
        let comp = next.components.entry(p).or_insert(PathComp {
            exp: 0,
            residue: BigUint::zero(),
            subst: None,
        });
        let step = BigUint::from(p).pow(comp.exp);
        comp.residue += step * BigUint::from(digit);
        comp.exp += 1;
        next
    }

    fn mark_subst(&mut self, p: Prime, e0: u32) {
        if let Some(comp) = self.components.get_mut(&p) {
            comp.subst = Some(e0);
        }
    }
}

struct Expansion {
    q: Prime,
    budget: u64,
    seen: HashSet<Congruence>,
    out: CoveringSystem,
}

impl Expansion {
    fn emit(
        &mut self,
        exponents: &BTreeMap<Prime, u32>,
        residue_of: &dyn Fn(Prime) -> BigUint,
        label: &[String],
    ) -> Result<(), TreeError> {
        let parts: Vec<(Prime, u32, BigUint)> = exponents
            .iter()
            .map(|(&p, &e)| {
                let pe = BigUint::from(p).pow(e);
                (p, e, residue_of(p) % pe)
            })
            .collect();
        let class = ResidueClass::from_components(parts).expect("path components are valid");
        let congruence = class.to_congruence();
        if self.seen.insert(congruence.clone()) {
            if self.out.len() as u64 >= self.budget {
                return Err(TreeError::BudgetExceeded {
                    budget: self.budget,
                });
            }
            self.out.push(congruence, Some(label.join("/")));
        }
        Ok(())
    }

    fn emit_leaf(
        &mut self,
        tokens: &[FactorToken],
        path: &PathState,
        label: &[String],
    ) -> Result<(), TreeError> {
        let exps = resolve_tokens(tokens, path, &label.join("/"))?;
        self.emit(&exps, &|p| path.residue(p), label)
    }

    fn node(
        &mut self,
        node: &TreeNode,
        path: &PathState,
        label: &mut Vec<String>,
    ) -> Result<(), TreeError> {
        if path.subst(node.prime).is_some() {
            return Err(TreeError::NestedSamePrimeInPowerBody {
                path: label.join("/"),
                prime: node.prime,
            });
        }
        match node.children.split_first() {
            Some((Child::Power(p), body)) => {
                if p.base_prime != node.prime {
                    return Err(TreeError::PowerBaseMismatch {
                        path: label.join("/"),
                        base: p.base_prime,
                        node_prime: node.prime,
                    });
                }
                let expected = path.exp(node.prime) + 1;
                if p.start_exponent != expected {
                    return Err(TreeError::PowerStartExponent {
                        path: label.join("/"),
                        declared: p.start_exponent,
                        expected,
                    });
                }
                if u64::from(p.start_exponent) >= self.q {
                    return Err(TreeError::QBelowPowerStart {
                        q: self.q,
                        start_exponent: p.start_exponent,
                    });
                }
                self.power_level(p, body, p.start_exponent, path, label)
            }
            _ => self.children(&node.children, node.prime, 0, path, label),
        }
    }

    /// One level of a power chain: digit 0 descends, digits 1..c-1 carry the
    /// substituted body copy at this level.
    fn power_level(
        &mut self,
        power: &Power,
        body: &[Child],
        level: u32,
        path: &PathState,
        label: &mut Vec<String>,
    ) -> Result<(), TreeError> {
        let c = power.base_prime;
        if u64::from(level) > self.q - 1 {
            return self.terminal(power, path, label);
        }
        label.push(format!("{}^{}:0", c, level));
        let chain = path.deepen(c, 0);
        self.power_level(power, body, level + 1, &chain, label)?;
        label.pop();

        let mut body_path = path.clone();
        body_path.mark_subst(c, power.start_exponent);
        // After deepen the component exists, so mark again below each digit.
        label.push(format!("{}^{}", c, level));
        self.children_marked(body, c, 1, &body_path, power.start_exponent, label)?;
        label.pop();
        Ok(())
    }

    fn terminal(
        &mut self,
        power: &Power,
        path: &PathState,
        label: &mut Vec<String>,
    ) -> Result<(), TreeError> {
        let c = power.base_prime;
        let q = self.q;
        for j in 0..q {
            let mut exps: BTreeMap<Prime, u32> = BTreeMap::new();
            exps.insert(q, 1);
            if j >= 1 {
                exps.insert(c, u32::try_from(j).expect("terminal index fits u32"));
            }
            if power.termination == Termination::FullContext {
                for (&p, comp) in &path.components {
                    if p != c {
                        exps.insert(p, comp.exp);
                    }
                }
            }
            label.push(format!("t{}:{}", c, j));
            let residue_of = |p: Prime| {
                if p == q {
                    BigUint::from(j)
                } else {
                    path.residue(p)
                }
            };
            self.emit(&exps, &residue_of, label)?;
            label.pop();
        }
        Ok(())
    }

    fn children(
        &mut self,
        children: &[Child],
        prime: Prime,
        first_digit: u64,
        path: &PathState,
        label: &mut Vec<String>,
    ) -> Result<(), TreeError> {
        self.children_inner(children, prime, first_digit, path, None, label)
    }

    fn children_marked(
        &mut self,
        children: &[Child],
        prime: Prime,
        first_digit: u64,
        path: &PathState,
        e0: u32,
        label: &mut Vec<String>,
    ) -> Result<(), TreeError> {
        self.children_inner(children, prime, first_digit, path, Some(e0), label)
    }

    fn children_inner(
        &mut self,
        children: &[Child],
        prime: Prime,
        first_digit: u64,
        path: &PathState,
        mark: Option<u32>,
        label: &mut Vec<String>,
    ) -> Result<(), TreeError> {
        let mut digit = first_digit;
        for child in children {
            let deepen_at = |d: u64| {
                let mut p = path.deepen(prime, d);
                if let Some(e0) = mark {
                    p.mark_subst(prime, e0);
                }
                p
            };
            match child {
                Child::Power(_) => unreachable!("power branches are handled by node()"),
                Child::Node(n) => {
                    label.push(digit.to_string());
                    self.node(n, &deepen_at(digit), label)?;
                    label.pop();
                }
                Child::Leaf(l) => {
                    label.push(digit.to_string());
                    self.emit_leaf(&l.retained, &deepen_at(digit), label)?;
                    label.pop();
                }
                Child::Wedge(w) => {
                    label.push(format!("w{}", digit));
                    let loc = label.join("/");
                    let probe = deepen_at(digit);
                    let chosen =
                        wedge_selection(w, &|p| probe.template_exp(p).max(1), &loc)?;
                    for (b, mask) in chosen.iter().enumerate() {
                        let tokens = wedge_branch_tokens(w, *mask);
                        let branch_path = deepen_at(digit + b as u64);
                        label.push(format!("b{}", b));
                        self.emit_leaf(&tokens, &branch_path, label)?;
                        label.pop();
                    }
                    label.pop();
                }
            }
            digit += child.effective_count();
        }
        Ok(())
    }
}

/// Containment-checked exponent resolution with power substitution applied:
/// a literal `c^e0` token inside the body of a `c`-power at level `i`
/// resolves to `c^i`; `@p` resolves to the full path power of `p`.
fn resolve_tokens(
    tokens: &[FactorToken],
    path: &PathState,
    at: &str,
) -> Result<BTreeMap<Prime, u32>, TreeError> {
    let mut out: BTreeMap<Prime, u32> = BTreeMap::new();
    for token in tokens {
        let (prime, exp) = match *token {
            FactorToken::Literal { prime, exp } => {
                let resolved = match path.subst(prime) {
                    Some(e0) if exp == e0 => path.exp(prime),
                    _ => exp,
                };
                (prime, resolved)
            }
            FactorToken::PathRef { prime } => (prime, path.exp(prime)),
        };
        let available = path.exp(prime);
        if available == 0 {
            return Err(TreeError::UnknownPathPrime {
                path: at.to_string(),
                prime,
            });
        }
        let entry = out.entry(prime).or_insert(0);
        *entry += exp;
        if *entry > available {
            return Err(TreeError::ContainmentViolation {
                path: at.to_string(),
                prime,
                needed: *entry,
                available,
            });
        }
    }
    Ok(out)
}
