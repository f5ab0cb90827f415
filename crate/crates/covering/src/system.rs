//! The covering-system value type, its audits, density accounting, and the
//! two serialization formats.
//!
//! Covering file format: one congruence per line, `<residue> % <factors>`,
//! factors joined by `*`, each `prime` or `prime^exp`, `#` starts a comment.
//! Canonical form sorts factors by prime and puts a single space around `%`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{is_prime, Congruence, FactoredNat, Prime};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("line {line}: factor {factor} is not prime")]
    NonPrimeFactor { line: usize, factor: u64 },
    #[error("line {line}: prime {prime} appears twice in one modulus")]
    DuplicatePrime { line: usize, prime: u64 },
    #[error("line {line}: residue {residue} is not below the modulus")]
    ResidueOutOfRange { line: usize, residue: BigUint },
    #[error("line {line}: modulus 1 is not allowed")]
    ModulusOne { line: usize },
    #[error("structured document: {0}")]
    Structured(String),
}

/// An ordered multiset of congruences, with optional provenance labels.
///
/// Labels never take part in equality; two systems with the same congruence
/// list in the same order are equal.
#[derive(Clone, Default)]
pub struct CoveringSystem {
    congruences: Vec<Congruence>,
    labels: Option<Vec<String>>,
}

impl PartialEq for CoveringSystem {
    fn eq(&self, other: &Self) -> bool {
        self.congruences == other.congruences
    }
}

impl Eq for CoveringSystem {}

impl std::fmt::Debug for CoveringSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.congruences.iter()).finish()
    }
}

impl CoveringSystem {
    pub fn new(congruences: Vec<Congruence>) -> Self {
        Self {
            congruences,
            labels: None,
        }
    }

    pub fn with_labels(congruences: Vec<Congruence>, labels: Vec<String>) -> Self {
        assert_eq!(congruences.len(), labels.len());
        Self {
            congruences,
            labels: Some(labels),
        }
    }

    pub fn from_pairs(pairs: &[(u64, u64)]) -> Self {
        Self::new(
            pairs
                .iter()
                .map(|&(r, m)| Congruence::from_u64(r, m))
                .collect(),
        )
    }

    pub fn congruences(&self) -> &[Congruence] {
        &self.congruences
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label_of(&self, i: usize) -> Option<&str> {
        self.labels.as_ref().map(|l| l[i].as_str())
    }

    pub fn len(&self) -> usize {
        self.congruences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.congruences.is_empty()
    }

    pub fn push(&mut self, c: Congruence, label: Option<String>) {
        self.congruences.push(c);
        match (&mut self.labels, label) {
            (Some(ls), Some(l)) => ls.push(l),
            (Some(ls), None) => ls.push(String::new()),
            (None, Some(l)) => {
                let mut ls = vec![String::new(); self.congruences.len() - 1];
                ls.push(l);
                self.labels = Some(ls);
            }
            (None, None) => {}
        }
    }

    /// Least common multiple of all moduli, in factored form.
    pub fn lcm(&self) -> FactoredNat {
        self.congruences
            .iter()
            .fold(FactoredNat::one(), |acc, c| acc.lcm(c.modulus()))
    }

    /// Drops exact duplicate congruences, keeping first occurrences.
    pub fn dedup(&self) -> CoveringSystem {
        let mut seen = std::collections::HashSet::new();
        let mut out = CoveringSystem::default();
        if self.labels.is_some() {
            out.labels = Some(Vec::new());
        }
        for (i, c) in self.congruences.iter().enumerate() {
            if seen.insert(c.clone()) {
                out.push(c.clone(), self.label_of(i).map(|s| s.to_string()));
            }
        }
        out
    }
}

/// Modulus bookkeeping for one covering system.
///
/// `multiplicity` maps each modulus to how many congruences carry it. For
/// audits produced symbolically on systems too large to enumerate, the map is
/// restricted to repeated moduli plus the designated prime; `total` is always
/// the exact congruence count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditReport {
    pub multiplicity: BTreeMap<FactoredNat, u64>,
    pub total: u64,
    pub all_odd: bool,
    pub all_square_free: bool,
    pub distinct_except: BTreeMap<FactoredNat, u64>,
    pub designated_prime_count: u64,
}

impl AuditReport {
    /// True when no modulus other than the designated prime repeats.
    pub fn no_other_repeats(&self, designated: Prime) -> bool {
        let designated = FactoredNat::from_prime(designated).expect("designated prime");
        self.distinct_except
            .keys()
            .all(|m| *m == designated)
    }
}

/// Counts modulus multiplicities and the designated-prime usage.
///
/// Two congruences with the same modulus and different residues still count
/// as a repeated modulus; repetition is a property of the modulus multiset.
pub fn audit(s: &CoveringSystem, designated: Prime) -> AuditReport {
    let designated_mod = FactoredNat::from_prime(designated).expect("designated must be prime");
    let mut multiplicity: BTreeMap<FactoredNat, u64> = BTreeMap::new();
    let mut all_odd = true;
    let mut all_square_free = true;
    for c in s.congruences() {
        *multiplicity.entry(c.modulus().clone()).or_insert(0) += 1;
        all_odd &= c.modulus().is_odd();
        all_square_free &= c.modulus().is_square_free();
    }
    let distinct_except: BTreeMap<FactoredNat, u64> = multiplicity
        .iter()
        .filter(|(_, &n)| n >= 2)
        .map(|(m, &n)| (m.clone(), n))
        .collect();
    let designated_prime_count = multiplicity.get(&designated_mod).copied().unwrap_or(0);
    AuditReport {
        multiplicity,
        total: s.len() as u64,
        all_odd,
        all_square_free,
        distinct_except,
        designated_prime_count,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityReport {
    /// Exact sum of 1/m over all congruences.
    pub harmonic_sum: BigRational,
    pub lcm: FactoredNat,
}

/// Exact harmonic sum and lcm. A sum below 1 rules out coverage.
pub fn density(s: &CoveringSystem) -> DensityReport {
    let mut harmonic_sum = BigRational::zero();
    for c in s.congruences() {
        harmonic_sum += BigRational::new(BigInt::one(), BigInt::from(c.modulus().value()));
    }
    DensityReport {
        harmonic_sum,
        lcm: s.lcm(),
    }
}

pub fn serialize_system(s: &CoveringSystem) -> String {
    let mut out = String::new();
    for c in s.congruences() {
        writeln!(out, "{} % {}", c.residue(), c.modulus()).expect("write to string");
    }
    out
}

pub fn parse_system(text: &str) -> Result<CoveringSystem, FormatError> {
    let mut congruences = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        if line.trim().is_empty() {
            continue;
        }
        congruences.push(parse_line(line, line_no)?);
    }
    Ok(CoveringSystem::new(congruences))
}

fn parse_line(line: &str, line_no: usize) -> Result<Congruence, FormatError> {
    let syntax = |col: usize, msg: &str| FormatError::Syntax {
        line: line_no,
        col,
        msg: msg.to_string(),
    };
    let pct = line
        .find('%')
        .ok_or_else(|| syntax(line.len(), "expected `%` between residue and modulus"))?;
    let residue_str = line[..pct].trim();
    let modulus_str = line[pct + 1..].trim();
    if residue_str.is_empty() {
        return Err(syntax(1, "missing residue"));
    }
    let residue: BigUint = residue_str
        .parse()
        .map_err(|_| syntax(1, "residue is not a decimal natural"))?;
    if modulus_str.is_empty() {
        return Err(syntax(pct + 2, "missing modulus"));
    }
    let mut seen: BTreeMap<Prime, u32> = BTreeMap::new();
    for part in modulus_str.split('*') {
        let part = part.trim();
        let (base_str, exp) = match part.split_once('^') {
            Some((b, e)) => {
                let exp: u32 = e
                    .trim()
                    .parse()
                    .map_err(|_| syntax(pct + 2, "bad exponent"))?;
                if exp == 0 {
                    return Err(syntax(pct + 2, "exponent must be at least 1"));
                }
                (b.trim(), exp)
            }
            None => (part, 1u32),
        };
        let base: u64 = base_str
            .parse()
            .map_err(|_| syntax(pct + 2, "factor is not a decimal natural"))?;
        if base == 1 {
            return Err(FormatError::ModulusOne { line: line_no });
        }
        // A factor may be written as a plain prime-power value, e.g. 9 for 3^2.
        let factored = FactoredNat::factor(base);
        if factored.num_primes() != 1 {
            return Err(FormatError::NonPrimeFactor {
                line: line_no,
                factor: base,
            });
        }
        let (p, base_exp) = factored.iter().next().expect("one prime");
        if seen.insert(p, base_exp * exp).is_some() {
            return Err(FormatError::DuplicatePrime {
                line: line_no,
                prime: p,
            });
        }
    }
    let modulus =
        FactoredNat::from_prime_powers(seen.into_iter()).expect("factors validated above");
    if modulus.is_one() {
        return Err(FormatError::ModulusOne { line: line_no });
    }
    Congruence::new(residue.clone(), modulus).map_err(|_| FormatError::ResidueOutOfRange {
        line: line_no,
        residue,
    })
}

/// Machine interchange document: decimal-string residues and prime-to-exponent
/// maps with decimal-string keys.
#[derive(Serialize, Deserialize)]
struct StructuredDoc {
    congruences: Vec<StructuredCongruence>,
    #[serde(skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct StructuredCongruence {
    residue: String,
    modulus: BTreeMap<String, u32>,
}

pub fn serialize_structured(s: &CoveringSystem) -> String {
    let doc = StructuredDoc {
        congruences: s
            .congruences()
            .iter()
            .map(|c| StructuredCongruence {
                residue: c.residue().to_string(),
                modulus: c.modulus().iter().map(|(p, e)| (p.to_string(), e)).collect(),
            })
            .collect(),
        labels: s.labels().map(|l| l.to_vec()),
    };
    serde_json::to_string_pretty(&doc).expect("structured document serializes")
}

pub fn parse_structured(text: &str) -> Result<CoveringSystem, FormatError> {
    let doc: StructuredDoc =
        serde_json::from_str(text).map_err(|e| FormatError::Structured(e.to_string()))?;
    let mut congruences = Vec::new();
    for (i, sc) in doc.congruences.iter().enumerate() {
        let residue: BigUint = sc
            .residue
            .parse()
            .map_err(|_| FormatError::Structured(format!("entry {}: bad residue", i)))?;
        let mut parts = Vec::new();
        for (k, &e) in &sc.modulus {
            let p: u64 = k
                .parse()
                .map_err(|_| FormatError::Structured(format!("entry {}: bad prime key", i)))?;
            if !is_prime(p) {
                return Err(FormatError::NonPrimeFactor { line: i + 1, factor: p });
            }
            parts.push((p, e));
        }
        let modulus = FactoredNat::from_prime_powers(parts)
            .map_err(|e| FormatError::Structured(e.to_string()))?;
        if modulus.is_one() {
            return Err(FormatError::ModulusOne { line: i + 1 });
        }
        let c = Congruence::new(residue.clone(), modulus).map_err(|_| {
            FormatError::ResidueOutOfRange {
                line: i + 1,
                residue,
            }
        })?;
        congruences.push(c);
    }
    Ok(match doc.labels {
        Some(labels) if labels.len() == congruences.len() => {
            CoveringSystem::with_labels(congruences, labels)
        }
        _ => CoveringSystem::new(congruences),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn eq3_pairs() -> Vec<(u64, u64)> {
        vec![
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
        ]
    }

    #[test]
    fn parse_single_lines() {
        let s = parse_system("24 % 2*3^2*5").unwrap();
        assert_eq!(s.congruences()[0], Congruence::from_u64(24, 90));
        let s = parse_system("3 % 9").unwrap();
        assert_eq!(s.congruences()[0], Congruence::from_u64(3, 9));
    }

    #[test]
    fn parse_rejects_non_prime_power_factors() {
        // 4 is fine (2^2 written as its value); 6 is not a prime power.
        match parse_system("5 % 4*6") {
            Err(FormatError::NonPrimeFactor { factor, .. }) => assert_eq!(factor, 6),
            other => panic!("expected NonPrimeFactor, got {:?}", other),
        }
        let s = parse_system("5 % 4*3").unwrap();
        assert_eq!(s.congruences()[0], Congruence::from_u64(5, 12));
    }

    #[test]
    fn parse_rejects_modulus_one_and_bad_residues() {
        assert!(matches!(parse_system("0 % 1"), Err(FormatError::ModulusOne { .. })));
        assert!(matches!(
            parse_system("9 % 9"),
            Err(FormatError::ResidueOutOfRange { .. })
        ));
        assert!(matches!(
            parse_system("1 % 3*3"),
            Err(FormatError::DuplicatePrime { .. })
        ));
        let err = parse_system("1 % 2\nnot a line\n").unwrap_err();
        match err {
            FormatError::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("expected Syntax, got {:?}", other),
        }
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let s = parse_system("# header\n\n1 % 2  # trailing\n").unwrap();
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn serialize_parse_is_identity_on_canonical_form() {
        let s = CoveringSystem::from_pairs(&eq3_pairs());
        let text = serialize_system(&s);
        let reparsed = parse_system(&text).unwrap();
        assert_eq!(reparsed, s);
        assert_eq!(serialize_system(&reparsed), text);
        assert!(text.starts_with("1 % 2\n1 % 3\n2 % 2*3\n3 % 3^2\n0 % 5\n"));
    }

    #[test]
    fn structured_round_trip() {
        let s = CoveringSystem::with_labels(
            vec![Congruence::from_u64(24, 90), Congruence::from_u64(1, 3)],
            vec!["a".into(), "b".into()],
        );
        let text = serialize_structured(&s);
        let back = parse_structured(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.labels(), s.labels());
    }

    #[test]
    fn audit_of_the_worked_example() {
        let s = CoveringSystem::from_pairs(&eq3_pairs());
        let report = audit(&s, 7);
        assert!(!report.all_odd);
        assert!(report.distinct_except.is_empty());
        assert_eq!(report.designated_prime_count, 0);
        assert_eq!(report.total, 10);
        assert_eq!(
            report.multiplicity.values().sum::<u64>(),
            s.len() as u64
        );
    }

    #[test]
    fn audit_counts_repeats() {
        let s = CoveringSystem::from_pairs(&[(0, 3), (0, 3)]);
        let report = audit(&s, 3);
        let three = FactoredNat::factor(3);
        assert_eq!(report.multiplicity.get(&three), Some(&2));
        assert_eq!(report.distinct_except.get(&three), Some(&2));
        assert_eq!(report.designated_prime_count, 2);
    }

    #[test]
    fn audit_is_permutation_invariant() {
        let mut pairs = eq3_pairs();
        let a = audit(&CoveringSystem::from_pairs(&pairs), 3);
        pairs.reverse();
        let b = audit(&CoveringSystem::from_pairs(&pairs), 3);
        assert_eq!(a, b);
    }

    #[test]
    fn density_of_the_worked_example() {
        let s = CoveringSystem::from_pairs(&eq3_pairs());
        let report = density(&s);
        assert_eq!(
            report.harmonic_sum,
            BigRational::new(BigInt::from(139), BigInt::from(90))
        );
        assert_eq!(report.lcm, FactoredNat::factor(90));
    }

    #[test]
    fn density_of_a_partition() {
        let s = CoveringSystem::from_pairs(&[(0, 2), (1, 2)]);
        let report = density(&s);
        assert_eq!(report.harmonic_sum, BigRational::one());
        assert_eq!(report.lcm, FactoredNat::factor(2));
    }

    #[test]
    fn density_ignores_residues() {
        let a = density(&CoveringSystem::from_pairs(&[(0, 6), (1, 10)]));
        let b = density(&CoveringSystem::from_pairs(&[(5, 6), (7, 10)]));
        assert_eq!(a.harmonic_sum, b.harmonic_sum);
    }
}
