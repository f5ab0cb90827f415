//! Coverage deciders.
//!
//! Two independent algorithms answer "does every integer satisfy some
//! congruence": exhaustive enumeration over one full period (the oracle,
//! usable only when the lcm is small) and recursive residue-class splitting
//! (general; depth follows the structure of the moduli instead of their
//! size). The splitting machinery also computes the exact uncovered measure.

use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use crate::arith::{Congruence, Prime, ResidueClass};
use crate::system::CoveringSystem;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error("lcm {0} exceeds the enumeration limit")]
    LcmExceedsLimit(BigUint),
    #[error("class budget exhausted after exploring {classes_explored} classes")]
    ResourceBudgetExceeded { classes_explored: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Covered,
    NotCovered,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VerifyStats {
    pub classes_explored: u64,
    pub max_depth: u32,
    pub elapsed: Duration,
}

/// Outcome of a coverage check.
///
/// A `NotCovered` report carries a witness class and its least nonnegative
/// member; the witness satisfies no congruence of the input, which is
/// directly checkable by remainders. A `Covered` report from the splitting
/// algorithm optionally carries a replayable certificate.
#[derive(Clone, Debug)]
pub struct CoverReport {
    pub verdict: Verdict,
    pub witness_class: Option<ResidueClass>,
    pub witness_integer: Option<BigUint>,
    pub stats: VerifyStats,
    pub certificate: Option<Certificate>,
}

/// Refinement-tree leaves of a successful split run: each explored leaf class
/// together with the index of a congruence containing it.
#[derive(Clone, Debug, Default)]
pub struct Certificate {
    pub leaves: Vec<(ResidueClass, usize)>,
}

impl Certificate {
    /// Re-checks every leaf containment against the system.
    pub fn replay(&self, s: &CoveringSystem) -> bool {
        self.leaves.iter().all(|(class, idx)| {
            s.congruences()
                .get(*idx)
                .map(|c| class_within_congruence(class, &ResidueClass::from_congruence(c)))
                .unwrap_or(false)
        })
    }
}

impl CoverReport {
    fn covered(stats: VerifyStats, certificate: Option<Certificate>) -> Self {
        Self {
            verdict: Verdict::Covered,
            witness_class: None,
            witness_integer: None,
            stats,
            certificate,
        }
    }

    fn not_covered(witness: ResidueClass, stats: VerifyStats) -> Self {
        let witness_integer = witness.least_member();
        Self {
            verdict: Verdict::NotCovered,
            witness_class: Some(witness),
            witness_integer: Some(witness_integer),
            stats,
            certificate: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    /// Largest lcm the brute-force oracle will enumerate.
    pub brute_limit: u64,
    /// Largest number of classes the splitting verifier may explore.
    pub class_budget: u64,
    /// Collect a replayable certificate on Covered runs.
    pub certificate: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            brute_limit: 200_000_000,
            class_budget: 100_000_000,
            certificate: false,
        }
    }
}

/// Checks coverage by enumerating every residue in `[0, lcm)`.
pub fn brute_force_verify(s: &CoveringSystem, limit: u64) -> Result<CoverReport, VerifyError> {
    let start = Instant::now();
    let lcm_f = s.lcm();
    let lcm = match lcm_f.value_u64() {
        Some(v) if v <= limit => v,
        _ => return Err(VerifyError::LcmExceedsLimit(lcm_f.value())),
    };
    // One bit per residue in a full period.
    let words = (lcm as usize + 63) / 64;
    let mut covered = vec![0u64; words];
    for c in s.congruences() {
        if c.is_universal() {
            let stats = VerifyStats {
                classes_explored: 0,
                max_depth: 0,
                elapsed: start.elapsed(),
            };
            return Ok(CoverReport::covered(stats, None));
        }
        let m = c
            .modulus()
            .value_u64()
            .expect("modulus divides lcm, so it fits u64");
        let mut r: u64 = (c.residue() % BigUint::from(m))
            .try_into()
            .expect("residue below modulus");
        while r < lcm {
            covered[(r / 64) as usize] |= 1u64 << (r % 64);
            r += m;
        }
    }
    let witness = covered.iter().enumerate().find_map(|(w, &bits)| {
        if bits != u64::MAX {
            let bit = (!bits).trailing_zeros() as u64;
            let n = w as u64 * 64 + bit;
            (n < lcm).then_some(n)
        } else {
            None
        }
    });
    let stats = VerifyStats {
        classes_explored: lcm,
        max_depth: 0,
        elapsed: start.elapsed(),
    };
    match witness {
        None => Ok(CoverReport::covered(stats, None)),
        Some(n) => {
            debug_assert!(s.congruences().iter().all(|c| !c.contains_u64(n)));
            let witness_class = ResidueClass::from_congruence(
                &Congruence::new(BigUint::from(n), lcm_f).expect("witness below lcm"),
            );
            let mut report = CoverReport::not_covered(witness_class, stats);
            report.witness_integer = Some(BigUint::from(n));
            Ok(report)
        }
    }
}

/// True when `class` is a subset of the congruence class `cong`.
fn class_within_congruence(class: &ResidueClass, cong: &ResidueClass) -> bool {
    cong.components().all(|(p, cc)| match class.component(p) {
        Some(kc) if kc.exp >= cc.exp => {
            let pe = BigUint::from(p).pow(cc.exp);
            kc.residue.clone() % &pe == cc.residue.clone() % pe
        }
        _ => false,
    })
}

/// True when the two classes share no integer.
fn classes_disjoint(a: &ResidueClass, b: &ResidueClass) -> bool {
    a.components().any(|(p, ac)| match b.component(p) {
        Some(bc) => {
            let common = ac.exp.min(bc.exp);
            let pe = BigUint::from(p).pow(common);
            ac.residue.clone() % &pe != bc.residue.clone() % pe
        }
        None => false,
    })
}

struct SplitRun<'a> {
    congruences: Vec<ResidueClass>,
    budget: u64,
    stats: VerifyStats,
    certificate: Option<Certificate>,
    uncovered: Option<Vec<ResidueClass>>,
    system: &'a CoveringSystem,
}

enum SplitOutcome {
    Covered,
    Witness(ResidueClass),
}

impl<'a> SplitRun<'a> {
    fn new(s: &'a CoveringSystem, cfg: &VerifyConfig, collect_uncovered: bool) -> Self {
        Self {
            congruences: s
                .congruences()
                .iter()
                .map(ResidueClass::from_congruence)
                .collect(),
            budget: cfg.class_budget,
            stats: VerifyStats::default(),
            certificate: cfg.certificate.then(Certificate::default),
            uncovered: collect_uncovered.then(Vec::new),
            system: s,
        }
    }

    fn explore(
        &mut self,
        class: &ResidueClass,
        relevant: &[usize],
        depth: u32,
    ) -> Result<SplitOutcome, VerifyError> {
        if self.stats.classes_explored >= self.budget {
            return Err(VerifyError::ResourceBudgetExceeded {
                classes_explored: self.stats.classes_explored,
            });
        }
        self.stats.classes_explored += 1;
        self.stats.max_depth = self.stats.max_depth.max(depth);

        if let Some(&idx) = relevant
            .iter()
            .find(|&&i| class_within_congruence(class, &self.congruences[i]))
        {
            if let Some(cert) = &mut self.certificate {
                cert.leaves.push((class.clone(), idx));
            }
            return Ok(SplitOutcome::Covered);
        }
        if relevant.is_empty() {
            if let Some(unc) = &mut self.uncovered {
                unc.push(class.clone());
                // Keep walking sibling classes; the caller wants all of them.
                return Ok(SplitOutcome::Covered);
            }
            return Ok(SplitOutcome::Witness(class.clone()));
        }

        let split_prime = self.pick_split_prime(class, relevant);
        let p = match split_prime {
            Some(p) => p,
            None => unreachable!("relevant congruence neither contains nor refines the class"),
        };
        for child in crate::arith::split_class(class, p) {
            let child_relevant: Vec<usize> = relevant
                .iter()
                .copied()
                .filter(|&i| !classes_disjoint(&child, &self.congruences[i]))
                .collect();
            match self.explore(&child, &child_relevant, depth + 1)? {
                SplitOutcome::Covered => {}
                witness => return Ok(witness),
            }
        }
        Ok(SplitOutcome::Covered)
    }

    /// The smallest prime whose exponent in some relevant modulus exceeds the
    /// exponent in the class. Refining by it separates at least one pair of
    /// congruences, so the recursion always makes progress.
    fn pick_split_prime(&self, class: &ResidueClass, relevant: &[usize]) -> Option<Prime> {
        let mut best: Option<Prime> = None;
        for &i in relevant {
            for (p, comp) in self.congruences[i].components() {
                if comp.exp > class.exponent(p) && best.map_or(true, |b| p < b) {
                    best = Some(p);
                }
            }
        }
        best
    }

    fn finish(self, outcome: SplitOutcome, start: Instant) -> CoverReport {
        let mut stats = self.stats;
        stats.elapsed = start.elapsed();
        match outcome {
            SplitOutcome::Covered => CoverReport::covered(stats, self.certificate),
            SplitOutcome::Witness(w) => {
                debug_assert!({
                    let n = w.least_member();
                    self.system.congruences().iter().all(|c| !c.contains(&n))
                });
                CoverReport::not_covered(w, stats)
            }
        }
    }
}

/// Decides coverage by recursive residue-class splitting.
///
/// Congruences disjoint from the current class are dropped for the subtree;
/// a congruence containing the class closes the branch. The reported witness
/// is the first uncovered class in split order, so reports are deterministic.
pub fn split_verify(s: &CoveringSystem) -> Result<CoverReport, VerifyError> {
    split_verify_with(s, &VerifyConfig::default())
}

pub fn split_verify_with(
    s: &CoveringSystem,
    cfg: &VerifyConfig,
) -> Result<CoverReport, VerifyError> {
    let start = Instant::now();
    let mut run = SplitRun::new(s, cfg, false);
    let all: Vec<usize> = (0..s.len()).collect();
    let outcome = run.explore(&ResidueClass::universal(), &all, 0)?;
    Ok(run.finish(outcome, start))
}

/// Exact natural density of the integers not covered by `s`.
pub fn uncovered_measure(s: &CoveringSystem) -> Result<BigRational, VerifyError> {
    uncovered_measure_with(s, &VerifyConfig::default())
}

pub fn uncovered_measure_with(
    s: &CoveringSystem,
    cfg: &VerifyConfig,
) -> Result<BigRational, VerifyError> {
    let mut run = SplitRun::new(s, cfg, true);
    let all: Vec<usize> = (0..s.len()).collect();
    run.explore(&ResidueClass::universal(), &all, 0)?;
    let uncovered = run.uncovered.take().expect("collection mode");
    Ok(uncovered
        .iter()
        .map(|c| c.measure())
        .fold(BigRational::zero(), |a, b| a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn eq3() -> CoveringSystem {
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

    #[test]
    fn brute_force_on_the_worked_example() {
        let report = brute_force_verify(&eq3(), 1_000_000_000).unwrap();
        assert_eq!(report.verdict, Verdict::Covered);
        assert_eq!(eq3().lcm().value_u64(), Some(90));
    }

    #[test]
    fn brute_force_finds_the_witness_for_a_removed_line() {
        let mut pairs = vec![
            (1u64, 2u64),
            (1, 3),
            (2, 6),
            (3, 9),
            (0, 5),
            (6, 10),
            (12, 15),
            (18, 30),
            (9, 45),
        ];
        let s = CoveringSystem::from_pairs(&pairs);
        let report = brute_force_verify(&s, 1_000_000_000).unwrap();
        assert_eq!(report.verdict, Verdict::NotCovered);
        assert_eq!(report.witness_integer, Some(BigUint::from(24u32)));
        pairs.push((24, 90));
        let report = brute_force_verify(&CoveringSystem::from_pairs(&pairs), 1_000_000_000).unwrap();
        assert_eq!(report.verdict, Verdict::Covered);
    }

    #[test]
    fn brute_force_trivial_cases() {
        let report = brute_force_verify(&CoveringSystem::from_pairs(&[(0, 2)]), 10).unwrap();
        assert_eq!(report.verdict, Verdict::NotCovered);
        assert_eq!(report.witness_integer, Some(BigUint::one()));

        let err = brute_force_verify(&eq3(), 10).unwrap_err();
        assert_eq!(err, VerifyError::LcmExceedsLimit(BigUint::from(90u32)));
    }

    #[test]
    fn split_verify_on_the_worked_example() {
        let report = split_verify(&eq3()).unwrap();
        assert_eq!(report.verdict, Verdict::Covered);
    }

    #[test]
    fn split_verify_trivial_not_covered() {
        let s = CoveringSystem::from_pairs(&[(1, 3), (2, 3)]);
        let report = split_verify(&s).unwrap();
        assert_eq!(report.verdict, Verdict::NotCovered);
        assert_eq!(report.witness_integer, Some(BigUint::zero()));
    }

    #[test]
    fn split_verify_short_circuits_on_the_universal_congruence() {
        let s = CoveringSystem::new(vec![Congruence::universal(), Congruence::from_u64(1, 3)]);
        let report = split_verify(&s).unwrap();
        assert_eq!(report.verdict, Verdict::Covered);
        assert_eq!(report.stats.classes_explored, 1);
    }

    #[test]
    fn split_verify_respects_the_budget() {
        let cfg = VerifyConfig {
            class_budget: 3,
            ..VerifyConfig::default()
        };
        let err = split_verify_with(&eq3(), &cfg).unwrap_err();
        assert!(matches!(err, VerifyError::ResourceBudgetExceeded { .. }));
    }

    #[test]
    fn certificate_replays() {
        let cfg = VerifyConfig {
            certificate: true,
            ..VerifyConfig::default()
        };
        let report = split_verify_with(&eq3(), &cfg).unwrap();
        let cert = report.certificate.expect("requested certificate");
        assert!(!cert.leaves.is_empty());
        assert!(cert.replay(&eq3()));
    }

    #[test]
    fn uncovered_measure_examples() {
        let half = uncovered_measure(&CoveringSystem::from_pairs(&[(0, 2)])).unwrap();
        assert_eq!(half, BigRational::new(1.into(), 2.into()));

        assert_eq!(uncovered_measure(&eq3()).unwrap(), BigRational::zero());

        let mut pairs = vec![
            (1u64, 2u64),
            (1, 3),
            (2, 6),
            (3, 9),
            (0, 5),
            (6, 10),
            (12, 15),
            (18, 30),
            (9, 45),
        ];
        pairs.retain(|&(r, m)| !(r == 24 && m == 90));
        let one_class = uncovered_measure(&CoveringSystem::from_pairs(&pairs)).unwrap();
        assert_eq!(one_class, BigRational::new(1.into(), 90.into()));
    }

    #[test]
    fn split_verdict_is_permutation_invariant() {
        let mut pairs = vec![(1u64, 2u64), (2, 4), (0, 8), (4, 8)];
        let a = split_verify(&CoveringSystem::from_pairs(&pairs)).unwrap();
        pairs.reverse();
        let b = split_verify(&CoveringSystem::from_pairs(&pairs)).unwrap();
        assert_eq!(a.verdict, b.verdict);
    }
}
