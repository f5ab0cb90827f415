//! Shape checks (run at parse time) and the structural coverage certificate.

use std::collections::BTreeMap;

use num_bigint::BigUint;

use super::{check_q, Child, FactorToken, Power, TreeError, TreeNode, TreeSpec, Wedge};
use crate::arith::Prime;

/// Invariants checkable without path context: effective child counts, wedge
/// sizes, power placement.
pub(super) fn validate_shape(tree: &TreeSpec) -> Result<(), TreeError> {
    shape_node(&tree.root, &mut Vec::new())
}

fn shape_node(node: &TreeNode, path: &mut Vec<String>) -> Result<(), TreeError> {
    let path_str = |path: &[String]| {
        if path.is_empty() {
            "/".to_string()
        } else {
            format!("/{}", path.join("/"))
        }
    };
    for (idx, child) in node.children.iter().enumerate() {
        match child {
            Child::Power(_) if idx != 0 => {
                return Err(TreeError::PowerNotLeftmost {
                    path: path_str(path),
                })
            }
            Child::Power(_) => {
                if node.children[1..]
                    .iter()
                    .any(|c| matches!(c, Child::Power(_)))
                {
                    return Err(TreeError::DuplicatePower {
                        path: path_str(path),
                    });
                }
            }
            Child::Wedge(w) => {
                let k = w.optional_factors.len() as u32;
                let available = if k >= 63 { u64::MAX } else { 1u64 << k };
                if w.take == 0 || w.take > available {
                    return Err(TreeError::WedgeTakeTooLarge {
                        path: path_str(path),
                        take: w.take,
                        available,
                    });
                }
            }
            Child::Leaf(l) => {
                if l.retained.is_empty() {
                    return Err(TreeError::EmptyLeaf {
                        path: path_str(path),
                    });
                }
            }
            Child::Node(_) => {}
        }
    }
    let actual = node.effective_child_count();
    if actual != node.prime {
        return Err(TreeError::ChildCountMismatch {
            path: path_str(path),
            expected: node.prime,
            actual,
        });
    }
    for (idx, child) in node.children.iter().enumerate() {
        if let Child::Node(n) = child {
            path.push(idx.to_string());
            shape_node(n, path)?;
            path.pop();
        }
    }
    Ok(())
}

/// Exponent context along a path. `substituted` marks the prime of an
/// enclosing power body together with its start exponent; a factor token
/// equal to `c^e0` tracks the copy level and is always containment-safe.
#[derive(Clone, Default)]
pub(super) struct PathExps {
    exps: BTreeMap<Prime, u32>,
    substituted: BTreeMap<Prime, u32>,
}

impl PathExps {
    pub(super) fn available(&self, p: Prime) -> u32 {
        self.exps.get(&p).copied().unwrap_or(0)
    }

    pub(super) fn substitution(&self, p: Prime) -> Option<u32> {
        self.substituted.get(&p).copied()
    }
}

/// Resolves a factor list against the path, checking containment. Returns
/// the per-prime exponents the branch keeps.
pub(super) fn resolve_exponents(
    tokens: &[FactorToken],
    path: &PathExps,
    at: &str,
) -> Result<BTreeMap<Prime, u32>, TreeError> {
    let mut out: BTreeMap<Prime, u32> = BTreeMap::new();
    for token in tokens {
        let (prime, exp) = match *token {
            FactorToken::Literal { prime, exp } => (prime, exp),
            FactorToken::PathRef { prime } => {
                let available = path.available(prime);
                if available == 0 {
                    return Err(TreeError::UnknownPathPrime {
                        path: at.to_string(),
                        prime,
                    });
                }
                (prime, available)
            }
        };
        let entry = out.entry(prime).or_insert(0);
        *entry += exp;
        let available = path.available(prime);
        if available == 0 {
            return Err(TreeError::UnknownPathPrime {
                path: at.to_string(),
                prime,
            });
        }
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

/// Subset selection for a wedge: the `take` numerically smallest subset
/// products times the base, in ascending order. Values are taken at the
/// written exponents, so the chosen subsets and their order are a function
/// of the factor multiset only and stay fixed across power-branch copies.
pub(crate) fn wedge_selection(
    w: &Wedge,
    avail: &dyn Fn(Prime) -> u32,
    at: &str,
) -> Result<Vec<u32>, TreeError> {
    let k = w.optional_factors.len();
    let token_value = |t: &FactorToken| -> BigUint {
        match *t {
            FactorToken::Literal { prime, exp } => BigUint::from(prime).pow(exp),
            FactorToken::PathRef { prime } => BigUint::from(prime).pow(avail(prime).max(1)),
        }
    };
    let base_value: BigUint = w.base.iter().map(token_value).product();
    let mut products: Vec<(BigUint, u32)> = (0..(1u32 << k))
        .map(|mask| {
            let mut v = base_value.clone();
            for (i, t) in w.optional_factors.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    v *= token_value(t);
                }
            }
            (v, mask)
        })
        .collect();
    products.sort();
    let chosen: Vec<u32> = products
        .into_iter()
        .take(w.take as usize)
        .map(|(_, mask)| mask)
        .collect();
    if chosen.len() != w.take as usize {
        return Err(TreeError::WedgeTakeTooLarge {
            path: at.to_string(),
            take: w.take,
            available: 1u64 << k,
        });
    }
    Ok(chosen)
}

pub(crate) fn wedge_branch_tokens(w: &Wedge, mask: u32) -> Vec<FactorToken> {
    let mut tokens = w.base.clone();
    for (i, t) in w.optional_factors.iter().enumerate() {
        if mask & (1 << i) != 0 {
            tokens.push(*t);
        }
    }
    tokens
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StructuralReport {
    pub nodes: u64,
    pub branches: u64,
    pub power_branches: u64,
}

/// Certifies that the expansion of `tree` at terminal prime `q` is a
/// covering system, without materializing it.
///
/// The walk checks, template by template, that every node splits its class
/// into exactly `prime` branches, that every leaf keeps only prime powers
/// available on its path (so its congruence contains its class), and that
/// power branches substitute soundly and terminate. Those local facts chain
/// into the global statement: the root class is the integers and every
/// branch either ends in a containing congruence or is partitioned further.
pub fn structural_verify(tree: &TreeSpec, q: Prime) -> Result<StructuralReport, TreeError> {
    check_q(tree, q, false)?;
    let mut report = StructuralReport::default();
    let path = PathExps::default();
    verify_node(&tree.root, &path, q, &mut Vec::new(), &mut report)?;
    Ok(report)
}

fn verify_node(
    node: &TreeNode,
    path: &PathExps,
    q: Prime,
    trail: &mut Vec<String>,
    report: &mut StructuralReport,
) -> Result<(), TreeError> {
    report.nodes += 1;
    let at = |trail: &[String]| {
        if trail.is_empty() {
            "/".to_string()
        } else {
            format!("/{}", trail.join("/"))
        }
    };
    // The node deepens its own prime by one for everything below it.
    let mut here = path.clone();
    let new_exp = here.available(node.prime) + 1;
    if here.substitution(node.prime).is_some() {
        return Err(TreeError::NestedSamePrimeInPowerBody {
            path: at(trail),
            prime: node.prime,
        });
    }
    here.exps.insert(node.prime, new_exp);

    let (body, power) = match node.children.split_first() {
        Some((Child::Power(p), rest)) => (rest, Some(p)),
        _ => (&node.children[..], None),
    };

    if let Some(p) = power {
        report.power_branches += 1;
        verify_power(node, p, &here, q, trail, &at)?;
        // Body containment is checked at the first copy; deeper copies only
        // swap c^e0 tokens for c^i, which stays within the level-i path.
        let mut body_path = here.clone();
        body_path.substituted.insert(p.base_prime, p.start_exponent);
        walk_children(body, 1, &body_path, q, trail, report, &at)?;
    } else {
        walk_children(&node.children, 0, &here, q, trail, report, &at)?;
    }
    Ok(())
}

fn verify_power(
    node: &TreeNode,
    p: &Power,
    here: &PathExps,
    q: Prime,
    trail: &[String],
    at: &dyn Fn(&[String]) -> String,
) -> Result<(), TreeError> {
    if p.base_prime != node.prime {
        return Err(TreeError::PowerBaseMismatch {
            path: at(trail),
            base: p.base_prime,
            node_prime: node.prime,
        });
    }
    let expected = here.available(node.prime);
    if p.start_exponent != expected {
        return Err(TreeError::PowerStartExponent {
            path: at(trail),
            declared: p.start_exponent,
            expected,
        });
    }
    if u64::from(p.start_exponent) >= q {
        return Err(TreeError::QBelowPowerStart {
            q,
            start_exponent: p.start_exponent,
        });
    }
    Ok(())
}

fn walk_children(
    children: &[Child],
    first_digit: u64,
    path: &PathExps,
    q: Prime,
    trail: &mut Vec<String>,
    report: &mut StructuralReport,
    at: &dyn Fn(&[String]) -> String,
) -> Result<(), TreeError> {
    let mut digit = first_digit;
    for child in children {
        match child {
            Child::Power(_) => unreachable!("power handled by the caller"),
            Child::Node(n) => {
                trail.push(digit.to_string());
                verify_node(n, path, q, trail, report)?;
                trail.pop();
                digit += 1;
            }
            Child::Leaf(l) => {
                trail.push(digit.to_string());
                resolve_exponents(&l.retained, path, &at(trail))?;
                trail.pop();
                report.branches += 1;
                digit += 1;
            }
            Child::Wedge(w) => {
                trail.push(format!("w{}", digit));
                let loc = at(trail);
                let chosen = wedge_selection(w, &|p| path.available(p), &loc)?;
                for mask in chosen {
                    let tokens = wedge_branch_tokens(w, mask);
                    resolve_exponents(&tokens, path, &loc)?;
                    report.branches += 1;
                }
                trail.pop();
                digit += w.take;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::parse_tree;
    use super::*;

    #[test]
    fn verifies_a_plain_tree() {
        // Splits mod 2, then the even class mod 3.
        let t = parse_tree(
            "node 2 { node 3 { leaf [3]; leaf [3]; leaf [2*3]; } leaf [2]; }",
        )
        .unwrap();
        let report = structural_verify(&t, 7).unwrap();
        assert_eq!(report.nodes, 2);
        assert_eq!(report.branches, 4);
    }

    #[test]
    fn rejects_factors_beyond_the_path() {
        let t = parse_tree("node 2 { node 3 { leaf [3]; leaf [3^2]; leaf [2*3]; } leaf [2]; }")
            .unwrap();
        let err = structural_verify(&t, 7).unwrap_err();
        assert!(matches!(err, TreeError::ContainmentViolation { prime: 3, needed: 2, available: 1, .. }));

        let t = parse_tree("node 2 { leaf [5]; leaf [2]; }").unwrap();
        let err = structural_verify(&t, 7).unwrap_err();
        assert!(matches!(err, TreeError::UnknownPathPrime { prime: 5, .. }));
    }

    #[test]
    fn q_collision_is_rejected() {
        let t = parse_tree("node 3 { power 3; leaf [3]; leaf [3]; }").unwrap();
        assert!(structural_verify(&t, 5).is_ok());
        let err = structural_verify(&t, 3).unwrap_err();
        assert!(matches!(err, TreeError::QCollision { q: 3 }));
    }

    #[test]
    fn power_start_exponent_must_match_the_path() {
        let t = parse_tree("node 3 { power 3^2; leaf [3]; leaf [3]; }").unwrap();
        let err = structural_verify(&t, 5).unwrap_err();
        assert!(matches!(
            err,
            TreeError::PowerStartExponent {
                declared: 2,
                expected: 1,
                ..
            }
        ));
    }

    #[test]
    fn power_base_must_match_the_node() {
        let t = parse_tree("node 3 { power 5; leaf [3]; leaf [3]; }").unwrap();
        let err = structural_verify(&t, 7).unwrap_err();
        assert!(matches!(err, TreeError::PowerBaseMismatch { base: 5, .. }));
    }

    #[test]
    fn same_prime_node_inside_a_power_body_is_rejected() {
        let t = parse_tree(
            "node 3 { power 3; leaf [3]; node 3 { leaf [3]; leaf [3]; leaf [3]; } }",
        )
        .unwrap();
        let err = structural_verify(&t, 5).unwrap_err();
        assert!(matches!(
            err,
            TreeError::NestedSamePrimeInPowerBody { prime: 3, .. }
        ));
    }
}
