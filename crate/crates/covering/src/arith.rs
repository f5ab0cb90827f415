//! Exact arithmetic on factored naturals and CRT-form residue classes.
//!
//! Every modulus in this crate is a [`FactoredNat`]: a positive integer kept
//! as a prime-to-exponent map, never as a plain machine word. Residue classes
//! are kept in CRT form, one component per prime, so splitting a class modulo
//! a deeper prime power touches exactly one component.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use thiserror::Error;

pub type Prime = u64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArithError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("exponent must be at least 1")]
    ZeroExponent,
    #[error("parts share the prime {0}")]
    NonCoprimeParts(Prime),
    #[error("residue {residue} not below modulus {modulus}")]
    ResidueOutOfRange { residue: BigUint, modulus: BigUint },
}

/// Deterministic Miller-Rabin, valid for all 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    // These witnesses are complete below 3.3e24, which covers u64.
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a % n, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// A positive integer stored as a prime-to-exponent map. The empty map is 1.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct FactoredNat {
    factors: BTreeMap<Prime, u32>,
}

impl FactoredNat {
    pub fn one() -> Self {
        Self::default()
    }

    /// Builds from explicit prime powers. Repeated primes accumulate.
    pub fn from_prime_powers<I>(parts: I) -> Result<Self, ArithError>
    where
        I: IntoIterator<Item = (Prime, u32)>,
    {
        let mut factors = BTreeMap::new();
        for (p, e) in parts {
            if !is_prime(p) {
                return Err(ArithError::NotPrime(p));
            }
            if e == 0 {
                return Err(ArithError::ZeroExponent);
            }
            *factors.entry(p).or_insert(0) += e;
        }
        Ok(Self { factors })
    }

    pub fn from_prime(p: Prime) -> Result<Self, ArithError> {
        Self::from_prime_powers([(p, 1)])
    }

    /// Factors a small natural by trial division. Inputs here are moduli from
    /// the constructions, all well below 2^64.
    pub fn factor(n: u64) -> Self {
        assert!(n >= 1, "factor() requires n >= 1");
        let mut factors = BTreeMap::new();
        let mut n = n;
        let mut d = 2u64;
        while d * d <= n {
            while n % d == 0 {
                *factors.entry(d).or_insert(0) += 1;
                n /= d;
            }
            d += if d == 2 { 1 } else { 2 };
        }
        if n > 1 {
            *factors.entry(n).or_insert(0) += 1;
        }
        Self { factors }
    }

    pub fn value(&self) -> BigUint {
        let mut v = BigUint::one();
        for (&p, &e) in &self.factors {
            v *= BigUint::from(p).pow(e);
        }
        v
    }

    /// Value as u64 when it fits.
    pub fn value_u64(&self) -> Option<u64> {
        let mut v: u64 = 1;
        for (&p, &e) in &self.factors {
            for _ in 0..e {
                v = v.checked_mul(p)?;
            }
        }
        Some(v)
    }

    pub fn value_u128(&self) -> Option<u128> {
        let mut v: u128 = 1;
        for (&p, &e) in &self.factors {
            for _ in 0..e {
                v = v.checked_mul(p as u128)?;
            }
        }
        Some(v)
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn exponent(&self, p: Prime) -> u32 {
        self.factors.get(&p).copied().unwrap_or(0)
    }

    pub fn primes(&self) -> impl Iterator<Item = Prime> + '_ {
        self.factors.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Prime, u32)> + '_ {
        self.factors.iter().map(|(&p, &e)| (p, e))
    }

    pub fn num_primes(&self) -> usize {
        self.factors.len()
    }

    pub fn is_odd(&self) -> bool {
        !self.factors.contains_key(&2)
    }

    pub fn is_square_free(&self) -> bool {
        self.factors.values().all(|&e| e == 1)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut factors = self.factors.clone();
        for (&p, &e) in &other.factors {
            *factors.entry(p).or_insert(0) += e;
        }
        Self { factors }
    }

    pub fn lcm(&self, other: &Self) -> Self {
        let mut factors = self.factors.clone();
        for (&p, &e) in &other.factors {
            let cur = factors.entry(p).or_insert(0);
            *cur = (*cur).max(e);
        }
        Self { factors }
    }

    pub fn is_coprime(&self, other: &Self) -> bool {
        self.factors.keys().all(|p| !other.factors.contains_key(p))
    }

    pub fn divides(&self, other: &Self) -> bool {
        self.factors
            .iter()
            .all(|(&p, &e)| other.exponent(p) >= e)
    }

    /// Removes every power of `p`, returning the p-free part.
    pub fn without_prime(&self, p: Prime) -> Self {
        let mut factors = self.factors.clone();
        factors.remove(&p);
        Self { factors }
    }

    pub fn with_prime_power(&self, p: Prime, e: u32) -> Self {
        let mut factors = self.factors.clone();
        if e == 0 {
            factors.remove(&p);
        } else {
            factors.insert(p, e);
        }
        Self { factors }
    }
}

impl Ord for FactoredNat {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.factors == other.factors {
            return Ordering::Equal;
        }
        match (self.value_u128(), other.value_u128()) {
            (Some(a), Some(b)) => a.cmp(&b),
            _ => self.value().cmp(&other.value()),
        }
    }
}

impl PartialOrd for FactoredNat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for FactoredNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for FactoredNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        let mut first = true;
        for (&p, &e) in &self.factors {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "{}", p)?;
            } else {
                write!(f, "{}^{}", p, e)?;
            }
        }
        Ok(())
    }
}

/// One congruence `x = residue (mod modulus)` with `0 <= residue < modulus`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Congruence {
    residue: BigUint,
    modulus: FactoredNat,
}

impl Congruence {
    pub fn new(residue: BigUint, modulus: FactoredNat) -> Result<Self, ArithError> {
        let value = modulus.value();
        if residue >= value {
            return Err(ArithError::ResidueOutOfRange {
                residue,
                modulus: value,
            });
        }
        Ok(Self { residue, modulus })
    }

    pub fn from_u64(residue: u64, modulus: u64) -> Self {
        Self::new(BigUint::from(residue), FactoredNat::factor(modulus)).expect("residue in range")
    }

    /// The class of all integers, kept for internal short circuits.
    pub fn universal() -> Self {
        Self {
            residue: BigUint::zero(),
            modulus: FactoredNat::one(),
        }
    }

    pub fn residue(&self) -> &BigUint {
        &self.residue
    }

    pub fn modulus(&self) -> &FactoredNat {
        &self.modulus
    }

    pub fn is_universal(&self) -> bool {
        self.modulus.is_one()
    }

    pub fn contains(&self, n: &BigUint) -> bool {
        if self.modulus.is_one() {
            return true;
        }
        n % self.modulus.value() == self.residue
    }

    pub fn contains_u64(&self, n: u64) -> bool {
        self.contains(&BigUint::from(n))
    }
}

impl fmt::Debug for Congruence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} % {}", self.residue, self.modulus)
    }
}

/// Chinese remainder combination of pairwise coprime parts.
///
/// The returned congruence cuts out exactly the intersection of the inputs,
/// with modulus equal to their product.
pub fn crt_combine(parts: &[(BigUint, FactoredNat)]) -> Result<Congruence, ArithError> {
    let mut modulus = FactoredNat::one();
    for (i, (residue, m)) in parts.iter().enumerate() {
        if !modulus.is_coprime(m) {
            let shared = m
                .primes()
                .find(|&p| modulus.exponent(p) > 0)
                .expect("non-coprime parts share a prime");
            return Err(ArithError::NonCoprimeParts(shared));
        }
        if *residue >= m.value() {
            return Err(ArithError::ResidueOutOfRange {
                residue: parts[i].0.clone(),
                modulus: m.value(),
            });
        }
        modulus = modulus.mul(m);
    }
    let mut acc = BigUint::zero();
    let mut acc_mod = BigUint::one();
    for (residue, m) in parts {
        let mv = m.value();
        acc = crt_pair(&acc, &acc_mod, residue, &mv);
        acc_mod *= mv;
    }
    Congruence::new(acc, modulus)
}

/// Combines `x = a (mod m)` with `x = b (mod n)` for coprime m, n.
fn crt_pair(a: &BigUint, m: &BigUint, b: &BigUint, n: &BigUint) -> BigUint {
    use num_bigint::BigInt;
    use num_integer::Integer;
    if m.is_one() {
        return b.clone();
    }
    if n.is_one() {
        return a.clone();
    }
    let (mi, ni) = (BigInt::from(m.clone()), BigInt::from(n.clone()));
    let gcd = mi.extended_gcd(&ni);
    debug_assert!(gcd.gcd.is_one());
    // x = a + m * t where t = (b - a) * m^{-1} mod n
    let diff = (BigInt::from(b.clone()) - BigInt::from(a.clone())).mod_floor(&ni);
    let inv = gcd.x.mod_floor(&ni);
    let t = (diff * inv).mod_floor(&ni);
    let x = BigInt::from(a.clone()) + mi * t;
    x.to_biguint().expect("CRT lift is nonnegative")
}

/// A residue class in CRT form: one `(residue mod p^exp)` component per prime.
/// The empty component map is the class of all integers.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct ResidueClass {
    components: BTreeMap<Prime, ClassComponent>,
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ClassComponent {
    pub exp: u32,
    pub residue: BigUint,
}

/// Set relation between two residue classes viewed as subsets of the integers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassRelation {
    Equal,
    SubsetOfB,
    SupersetOfB,
    Disjoint,
    ProperOverlap,
}

impl ResidueClass {
    pub fn universal() -> Self {
        Self::default()
    }

    pub fn from_components<I>(parts: I) -> Result<Self, ArithError>
    where
        I: IntoIterator<Item = (Prime, u32, BigUint)>,
    {
        let mut components = BTreeMap::new();
        for (p, exp, residue) in parts {
            if !is_prime(p) {
                return Err(ArithError::NotPrime(p));
            }
            if exp == 0 {
                return Err(ArithError::ZeroExponent);
            }
            let pe = BigUint::from(p).pow(exp);
            if residue >= pe {
                return Err(ArithError::ResidueOutOfRange {
                    residue,
                    modulus: pe,
                });
            }
            components.insert(p, ClassComponent { exp, residue });
        }
        Ok(Self { components })
    }

    pub fn from_congruence(c: &Congruence) -> Self {
        let mut components = BTreeMap::new();
        for (p, e) in c.modulus().iter() {
            let pe = BigUint::from(p).pow(e);
            components.insert(
                p,
                ClassComponent {
                    exp: e,
                    residue: c.residue() % pe,
                },
            );
        }
        Self { components }
    }

    pub fn to_congruence(&self) -> Congruence {
        let parts: Vec<(BigUint, FactoredNat)> = self
            .components
            .iter()
            .map(|(&p, comp)| {
                (
                    comp.residue.clone(),
                    FactoredNat::from_prime_powers([(p, comp.exp)]).expect("component is a prime power"),
                )
            })
            .collect();
        crt_combine(&parts).expect("components are pairwise coprime")
    }

    pub fn is_universal(&self) -> bool {
        self.components.is_empty()
    }

    pub fn component(&self, p: Prime) -> Option<&ClassComponent> {
        self.components.get(&p)
    }

    pub fn exponent(&self, p: Prime) -> u32 {
        self.components.get(&p).map(|c| c.exp).unwrap_or(0)
    }

    pub fn components(&self) -> impl Iterator<Item = (Prime, &ClassComponent)> + '_ {
        self.components.iter().map(|(&p, c)| (p, c))
    }

    pub fn modulus(&self) -> FactoredNat {
        FactoredNat::from_prime_powers(self.components.iter().map(|(&p, c)| (p, c.exp)))
            .expect("class components are prime powers")
    }

    /// The least nonnegative member.
    pub fn least_member(&self) -> BigUint {
        self.to_congruence().residue().clone()
    }

    pub fn contains_int(&self, n: &BigUint) -> bool {
        self.components.iter().all(|(&p, comp)| {
            let pe = BigUint::from(p).pow(comp.exp);
            n % pe == comp.residue
        })
    }

    /// Natural density of the class, as an exact rational.
    pub fn measure(&self) -> num_rational::BigRational {
        use num_bigint::BigInt;
        num_rational::BigRational::new(BigInt::one(), BigInt::from(self.modulus().value()))
    }
}

impl fmt::Debug for ResidueClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.to_congruence())
    }
}

/// Decides the set relation between two classes.
///
/// Per prime, a class constrains residues modulo `p^exp`; the comparison
/// only ever looks at the shared prefix of the two exponents.
pub fn class_relation(a: &ResidueClass, b: &ResidueClass) -> ClassRelation {
    let mut a_subset_b = true;
    let mut b_subset_a = true;
    let primes: std::collections::BTreeSet<Prime> = a
        .components
        .keys()
        .chain(b.components.keys())
        .copied()
        .collect();
    for p in primes {
        let ca = a.components.get(&p);
        let cb = b.components.get(&p);
        match (ca, cb) {
            (Some(ca), Some(cb)) => {
                let common = ca.exp.min(cb.exp);
                let pc = BigUint::from(p).pow(common);
                if &ca.residue % &pc != &cb.residue % &pc {
                    return ClassRelation::Disjoint;
                }
                if ca.exp < cb.exp {
                    a_subset_b = false;
                }
                if cb.exp < ca.exp {
                    b_subset_a = false;
                }
            }
            (Some(_), None) => b_subset_a = false,
            (None, Some(_)) => a_subset_b = false,
            (None, None) => unreachable!(),
        }
    }
    match (a_subset_b, b_subset_a) {
        (true, true) => ClassRelation::Equal,
        (true, false) => ClassRelation::SubsetOfB,
        (false, true) => ClassRelation::SupersetOfB,
        (false, false) => ClassRelation::ProperOverlap,
    }
}

/// Splits a class into the `p` subclasses one level deeper in `p`.
///
/// Output `j` carries the new digit `j`, so its residue is the old residue
/// plus `j * p^(old exp)`. The outputs partition the input.
pub fn split_class(c: &ResidueClass, p: Prime) -> Vec<ResidueClass> {
    assert!(is_prime(p), "split_class requires a prime");
    let (old_exp, old_residue) = match c.components.get(&p) {
        Some(comp) => (comp.exp, comp.residue.clone()),
        None => (0, BigUint::zero()),
    };
    let step = BigUint::from(p).pow(old_exp);
    (0..p)
        .map(|j| {
            let mut components = c.components.clone();
            components.insert(
                p,
                ClassComponent {
                    exp: old_exp + 1,
                    residue: &old_residue + &step * BigUint::from(j),
                },
            );
            ResidueClass { components }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fnat(pairs: &[(u64, u32)]) -> FactoredNat {
        FactoredNat::from_prime_powers(pairs.iter().copied()).unwrap()
    }

    fn class(parts: &[(u64, u32, u64)]) -> ResidueClass {
        ResidueClass::from_components(parts.iter().map(|&(p, e, r)| (p, e, BigUint::from(r))))
            .unwrap()
    }

    #[test]
    fn factor_small_values() {
        assert_eq!(FactoredNat::factor(90), fnat(&[(2, 1), (3, 2), (5, 1)]));
        assert_eq!(FactoredNat::factor(1), FactoredNat::one());
        // 3^6 * 5 * 7 = 729 * 35 = 25515
        assert_eq!(729u64 * 5 * 7, 25515);
        assert_eq!(FactoredNat::factor(25515), fnat(&[(3, 6), (5, 1), (7, 1)]));
    }

    #[test]
    fn factor_value_round_trip_up_to_a_million() {
        for n in 1..=1_000_000u64 {
            let f = FactoredNat::factor(n);
            assert_eq!(f.value_u64(), Some(n), "round trip failed at {}", n);
        }
    }

    #[test]
    fn primality_spot_checks() {
        let primes = [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 1_000_000_007, 18_446_744_073_709_551_557];
        for p in primes {
            assert!(is_prime(p), "{} should be prime", p);
        }
        let composites = [0u64, 1, 4, 6, 9, 25515, 1_000_000_005, 18_446_744_073_709_551_615];
        for c in composites {
            assert!(!is_prime(c), "{} should be composite", c);
        }
        // Strong pseudoprime to base 2 alone.
        assert!(!is_prime(3_215_031_751));
    }

    #[test]
    fn ordering_is_by_value() {
        let a = FactoredNat::factor(12);
        let b = FactoredNat::factor(35);
        assert!(a < b);
        assert_eq!(FactoredNat::factor(30), fnat(&[(2, 1), (3, 1), (5, 1)]));
    }

    #[test]
    fn crt_combine_matches_worked_examples() {
        // ([0,6,4],[2,9,5]) combines to 24 mod 90.
        let parts = vec![
            (BigUint::from(0u32), fnat(&[(2, 1)])),
            (BigUint::from(6u32), fnat(&[(3, 2)])),
            (BigUint::from(4u32), fnat(&[(5, 1)])),
        ];
        let c = crt_combine(&parts).unwrap();
        assert_eq!(c.residue(), &BigUint::from(24u32));
        assert_eq!(c.modulus(), &FactoredNat::factor(90));

        // ([0,4],[9,5]) combines to 9 mod 45.
        let parts = vec![
            (BigUint::from(0u32), fnat(&[(3, 2)])),
            (BigUint::from(4u32), fnat(&[(5, 1)])),
        ];
        let c = crt_combine(&parts).unwrap();
        assert_eq!(c.residue(), &BigUint::from(9u32));
        assert_eq!(c.modulus(), &FactoredNat::factor(45));

        // Single part is the identity.
        let parts = vec![(BigUint::from(7u32), fnat(&[(3, 2)]))];
        let c = crt_combine(&parts).unwrap();
        assert_eq!(c.residue(), &BigUint::from(7u32));
    }

    #[test]
    fn crt_combine_rejects_shared_primes() {
        let parts = vec![
            (BigUint::from(1u32), fnat(&[(2, 1)])),
            (BigUint::from(3u32), fnat(&[(2, 2)])),
        ];
        assert_eq!(crt_combine(&parts), Err(ArithError::NonCoprimeParts(2)));
    }

    #[test]
    fn crt_combine_satisfies_inputs() {
        // Every input congruence holds for the combined residue.
        let moduli = [(2u64, 3u32), (3, 2), (5, 1), (7, 1)];
        for seed in 0..200u64 {
            let parts: Vec<(BigUint, FactoredNat)> = moduli
                .iter()
                .enumerate()
                .map(|(i, &(p, e))| {
                    let pe = p.pow(e);
                    let r = (seed.wrapping_mul(2654435761).wrapping_add(i as u64 * 97)) % pe;
                    (BigUint::from(r), fnat(&[(p, e)]))
                })
                .collect();
            let c = crt_combine(&parts).unwrap();
            for (r, m) in &parts {
                assert_eq!(&(c.residue() % m.value()), r);
            }
        }
    }

    #[test]
    fn class_relation_examples() {
        // 2 mod 6 is a subset of 2 mod 3.
        let a = class(&[(2, 1, 0), (3, 1, 2)]);
        let b = class(&[(3, 1, 2)]);
        assert_eq!(class_relation(&a, &b), ClassRelation::SubsetOfB);
        assert_eq!(class_relation(&b, &a), ClassRelation::SupersetOfB);

        let a = class(&[(2, 1, 1)]);
        let b = class(&[(2, 1, 0)]);
        assert_eq!(class_relation(&a, &b), ClassRelation::Disjoint);

        // 0 mod 6 and 3 mod 9 share exactly 12 mod 18.
        let a = class(&[(2, 1, 0), (3, 1, 0)]);
        let b = class(&[(3, 2, 3)]);
        assert_eq!(class_relation(&a, &b), ClassRelation::ProperOverlap);
        let both = crt_combine(&[
            (BigUint::from(0u32), fnat(&[(2, 1)])),
            (BigUint::from(3u32), fnat(&[(3, 2)])),
        ])
        .unwrap();
        assert_eq!(both.residue(), &BigUint::from(12u32));

        let u = ResidueClass::universal();
        assert_eq!(class_relation(&u, &u), ClassRelation::Equal);
        assert_eq!(class_relation(&a, &u), ClassRelation::SubsetOfB);
    }

    #[test]
    fn class_relation_agrees_with_membership_sampling() {
        let cases = [
            (class(&[(2, 2, 1)]), class(&[(2, 1, 1)])),
            (class(&[(2, 1, 0), (3, 1, 2)]), class(&[(3, 2, 5)])),
            (class(&[(5, 1, 3)]), class(&[(3, 1, 1)])),
            (class(&[(2, 2, 3), (3, 1, 0)]), class(&[(2, 1, 1)])),
        ];
        for (a, b) in &cases {
            let rel = class_relation(a, b);
            let am = a.modulus().value_u64().unwrap();
            let ar = a.least_member();
            let mut all_in_b = true;
            for k in 0..200u64 {
                let n = &ar + BigUint::from(am) * BigUint::from(k);
                assert!(a.contains_int(&n));
                if !b.contains_int(&n) {
                    all_in_b = false;
                }
            }
            match rel {
                ClassRelation::SubsetOfB | ClassRelation::Equal => assert!(all_in_b),
                _ => assert!(!all_in_b),
            }
        }
    }

    #[test]
    fn split_class_examples() {
        let u = ResidueClass::universal();
        let parts = split_class(&u, 2);
        assert_eq!(parts, vec![class(&[(2, 1, 0)]), class(&[(2, 1, 1)])]);

        // 0 mod 3 splits into 0, 3, 6 modulo 9.
        let parts = split_class(&class(&[(3, 1, 0)]), 3);
        assert_eq!(
            parts,
            vec![class(&[(3, 2, 0)]), class(&[(3, 2, 3)]), class(&[(3, 2, 6)])]
        );

        // 1 mod 2 split by 3, new digit order 0, 1, 2 mod 3.
        let parts = split_class(&class(&[(2, 1, 1)]), 3);
        let residues: Vec<u64> = parts
            .iter()
            .map(|c| c.least_member().try_into().unwrap())
            .collect();
        assert_eq!(residues, vec![3, 1, 5]);
        let as_set: std::collections::BTreeSet<u64> = residues.into_iter().collect();
        assert_eq!(as_set, [1u64, 3, 5].into_iter().collect());
    }

    #[test]
    fn split_class_partitions_and_preserves_measure() {
        let c = class(&[(2, 1, 1), (3, 1, 2)]);
        for p in [2u64, 3, 5] {
            let parts = split_class(&c, p);
            assert_eq!(parts.len(), p as usize);
            for i in 0..parts.len() {
                for j in i + 1..parts.len() {
                    assert_eq!(class_relation(&parts[i], &parts[j]), ClassRelation::Disjoint);
                }
                assert_eq!(class_relation(&parts[i], &c), ClassRelation::SubsetOfB);
            }
            let total: num_rational::BigRational =
                parts.iter().map(|k| k.measure()).sum();
            assert_eq!(total, c.measure());
        }
    }

    #[test]
    fn congruence_class_round_trip() {
        let c = Congruence::from_u64(24, 90);
        let cls = ResidueClass::from_congruence(&c);
        assert_eq!(cls.to_congruence(), c);
        assert_eq!(cls.least_member(), BigUint::from(24u32));
    }
}
