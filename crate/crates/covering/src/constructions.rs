//! Ready-made covering constructions, each stored as tree DSL text so the
//! source of a construction is the diagram itself, not hand-built syntax.

use thiserror::Error;

use crate::arith::{is_prime, Prime};
use crate::system::CoveringSystem;
use crate::treespec::{parse_tree, TreeError, TreeSpec};

const SIX7: &str = include_str!("../resources/six7.tree");
const FOUR7: &str = include_str!("../resources/four7.tree");
const SEVEN11: &str = include_str!("../resources/seven11.tree");
const FIG4: &str = include_str!("../resources/fig4.tree");
const PMINUS5_TEMPLATE: &str = include_str!("../resources/pminus5.tree.in");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConstructionError {
    #[error("{0} is not prime")]
    NonPrime(u64),
    #[error("p = {p} is too small; this construction needs p >= {min}")]
    PTooSmall { p: u64, min: u64 },
    #[error("q = {q} is too small; this construction needs q > {min}")]
    QTooSmall { q: u64, min: u64 },
    #[error("q must differ from p (both are {0})")]
    QEqualsP(u64),
    #[error("q = {0} collides with a factor used by the construction")]
    QCollides(u64),
    #[error("internal transcription error: {0}")]
    Transcription(String),
}

impl From<TreeError> for ConstructionError {
    fn from(e: TreeError) -> Self {
        ConstructionError::Transcription(e.to_string())
    }
}

/// The ten-congruence covering system with lcm 90 used as the running
/// example: 1 % 2, 1 % 3, 2 % 6, 3 % 9, 0 % 5, 6 % 10, 12 % 15, 18 % 30,
/// 9 % 45, 24 % 90.
pub fn example_system() -> CoveringSystem {
    CoveringSystem::from_pairs(&[
        (1, 2),
        (1, 3),
        (2, 6),
        (3, 9),
        (0, 5),
        (6, 10),
        (12, 15),
        (18, 30),
        (9, 45),
        (24, 90),
    ])
}

fn require_prime(n: u64) -> Result<Prime, ConstructionError> {
    if is_prime(n) {
        Ok(n)
    } else {
        Err(ConstructionError::NonPrime(n))
    }
}

/// Small power-branch covering whose smallest modulus is 3, expanded at
/// q := p. Needs p > 3 so the terminal prime avoids the tree's own primes.
pub fn fig4_tree(p: u64) -> Result<TreeSpec, ConstructionError> {
    let p = require_prime(p)?;
    if p <= 3 {
        return Err(ConstructionError::PTooSmall { p, min: 5 });
    }
    let mut tree = parse_tree(FIG4)?;
    tree.declared_q = Some(p);
    Ok(tree)
}

/// Square-free odd covering with the modulus 7 used exactly six times.
pub fn six_sevens_tree() -> TreeSpec {
    parse_tree(SIX7).expect("embedded transcription parses")
}

fn q_checked(
    text: &str,
    q: u64,
    forbidden_extra: Option<u64>,
) -> Result<TreeSpec, ConstructionError> {
    let q = require_prime(q)?;
    if q <= 19 {
        return Err(ConstructionError::QTooSmall { q, min: 19 });
    }
    if let Some(p) = forbidden_extra {
        if q == p {
            return Err(ConstructionError::QEqualsP(q));
        }
    }
    let mut tree = parse_tree(text)?;
    if tree.literal_primes().contains(&q) {
        return Err(ConstructionError::QCollides(q));
    }
    tree.declared_q = Some(q);
    Ok(tree)
}

/// Odd covering with the modulus 7 used exactly four times; q > 19 prime.
pub fn four_sevens_tree(q: u64) -> Result<TreeSpec, ConstructionError> {
    q_checked(FOUR7, q, None)
}

/// Odd covering with the modulus 11 used exactly seven times; q > 19 prime.
pub fn seven_elevens_tree(q: u64) -> Result<TreeSpec, ConstructionError> {
    q_checked(SEVEN11, q, None)
}

/// Odd covering with the modulus p used exactly p - 5 times, for p >= 23;
/// q > 19 prime, q != p.
pub fn p_minus_five_tree(p: u64, q: u64) -> Result<TreeSpec, ConstructionError> {
    let p = require_prime(p)?;
    if p < 23 {
        return Err(ConstructionError::PTooSmall { p, min: 23 });
    }
    let leaves = "  leaf [%P%];\n".repeat((p - 5) as usize);
    let text = PMINUS5_TEMPLATE
        .replace("%ROOT_LEAVES%", leaves.trim_end())
        .replace("%P%", &p.to_string());
    q_checked(&text, q, Some(p))
}

/// CLI construction names.
pub const NAMES: &[&str] = &["example", "fig4", "six7", "four7", "seven11", "pminus5"];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::FamilySet;
    use crate::system::{audit, density, serialize_system};
    use crate::treespec::{expand, structural_verify};
    use crate::verifier::{brute_force_verify, Verdict};
    use crate::FactoredNat;
    use num_rational::BigRational;

    #[test]
    fn example_serializes_to_the_ten_canonical_lines() {
        let text = serialize_system(&example_system());
        assert_eq!(
            text,
            "1 % 2\n1 % 3\n2 % 2*3\n3 % 3^2\n0 % 5\n6 % 2*5\n12 % 3*5\n18 % 2*3*5\n9 % 3^2*5\n24 % 2*3^2*5\n"
        );
    }

    #[test]
    fn example_is_covered_with_density_139_over_90() {
        let s = example_system();
        let report = brute_force_verify(&s, 1_000_000_000).unwrap();
        assert_eq!(report.verdict, Verdict::Covered);
        assert_eq!(s.lcm(), FactoredNat::factor(90));
        let d = density(&s);
        assert_eq!(d.harmonic_sum, BigRational::new(139.into(), 90.into()));
    }

    #[test]
    fn fig4_preconditions() {
        assert!(matches!(
            fig4_tree(3),
            Err(ConstructionError::PTooSmall { p: 3, .. })
        ));
        assert!(matches!(fig4_tree(4), Err(ConstructionError::NonPrime(4))));
        assert_eq!(fig4_tree(5).unwrap().declared_q, Some(5));
    }

    #[test]
    fn fig4_expansion_covers_and_its_repeated_branch_folds() {
        let tree = fig4_tree(5).unwrap();
        let s = expand(&tree, 5).unwrap();
        assert_eq!(s.lcm(), FactoredNat::factor(1620));
        let report = brute_force_verify(&s, 10_000).unwrap();
        assert_eq!(report.verdict, Verdict::Covered);
        // The level-independent branch keeping only 2^2 collapses to a
        // single congruence, so modulus 4 appears once in the expansion.
        let a = audit(&s, 2);
        assert_eq!(a.multiplicity.get(&FactoredNat::factor(4)), Some(&1));
    }

    #[test]
    fn six_sevens_has_143_congruences_and_the_claimed_audit() {
        let tree = six_sevens_tree();
        structural_verify(&tree, 29).unwrap();
        let s = expand(&tree, 29).unwrap();
        assert_eq!(s.len(), 143);
        assert_eq!(
            s.lcm(),
            FactoredNat::from_prime_powers([3, 5, 7, 11, 13, 17, 19, 23].map(|p| (p, 1)))
                .unwrap()
        );
        let a = audit(&s, 7);
        assert!(a.all_odd);
        assert!(a.all_square_free);
        assert_eq!(a.designated_prime_count, 6);
        assert_eq!(a.distinct_except.len(), 1);
        assert_eq!(a.distinct_except.get(&FactoredNat::factor(7)), Some(&6));
        let d = density(&s);
        assert!(d.harmonic_sum >= BigRational::new(1.into(), 1.into()));
    }

    #[test]
    fn four_sevens_preconditions() {
        assert!(matches!(
            four_sevens_tree(19),
            Err(ConstructionError::QTooSmall { q: 19, .. })
        ));
        assert!(matches!(
            four_sevens_tree(21),
            Err(ConstructionError::NonPrime(21))
        ));
        assert!(four_sevens_tree(23).is_ok());
    }

    #[test]
    fn seven_elevens_root_shape() {
        let tree = seven_elevens_tree(23).unwrap();
        assert_eq!(tree.root.prime, 11);
        assert_eq!(tree.root.effective_child_count(), 11);
        let subtrees = tree
            .root
            .children
            .iter()
            .filter(|c| matches!(c, crate::treespec::Child::Node(_)))
            .count();
        let leaves = tree
            .root
            .children
            .iter()
            .filter(|c| matches!(c, crate::treespec::Child::Leaf(_)))
            .count();
        assert_eq!((subtrees, leaves), (4, 7));
    }

    #[test]
    fn p_minus_five_preconditions() {
        assert!(matches!(
            p_minus_five_tree(19, 29),
            Err(ConstructionError::PTooSmall { p: 19, .. })
        ));
        assert!(matches!(
            p_minus_five_tree(23, 23),
            Err(ConstructionError::QEqualsP(23))
        ));
        assert!(matches!(
            p_minus_five_tree(23, 17),
            Err(ConstructionError::QTooSmall { q: 17, .. })
        ));
        assert!(p_minus_five_tree(23, 29).is_ok());
        assert!(p_minus_five_tree(29, 23).is_ok());
    }

    #[test]
    fn big_constructions_pass_structural_verification() {
        structural_verify(&four_sevens_tree(23).unwrap(), 23).unwrap();
        structural_verify(&seven_elevens_tree(23).unwrap(), 23).unwrap();
        structural_verify(&p_minus_five_tree(23, 29).unwrap(), 29).unwrap();
    }

    #[test]
    fn four_sevens_audit_is_q_independent() {
        for q in [23u64, 29] {
            let fams = FamilySet::build(&four_sevens_tree(q).unwrap(), q, false).unwrap();
            let a = fams.audit(7).unwrap();
            assert!(a.all_odd, "q={}", q);
            assert!(!a.all_square_free);
            assert_eq!(a.designated_prime_count, 4);
            assert!(a.no_other_repeats(7), "q={}: {:?}", q, a.distinct_except);
        }
    }
}
