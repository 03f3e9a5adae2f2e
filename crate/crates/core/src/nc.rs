//! Noncommutative polynomials with integer coefficients and the classical
//! matrix identities: the standard polynomial `s_{2d}` (vanishes on all
//! `d×d` matrices), Razmyslov's commutator identity, and the sign-free
//! noncommutative determinant.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cnf::{align, CnfGrammar};
use crate::grammar::{Grammar, Rule, Symbol};
use crate::matrix::{derive_seed, random_field_matrix, MatrixError, MatrixRing, ModMatrix};
use crate::oracle::{cyk_parse_count, enumerate_slice, OracleError};

/// Largest `2d` (resp. `n`) whose permutation table is built.
pub const DEFAULT_PERMUTATION_CAP: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NcError {
    #[error("no substitution or matrix for variable {0}")]
    MissingVariable(Var),
    #[error("the assignment is empty")]
    EmptyAssignment,
    #[error("matrices disagree on dimension or field")]
    Mismatch,
    #[error("{n}! permutations exceed the cap of {cap}!")]
    TooLarge { n: usize, cap: usize },
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// A noncommuting variable, identified by name.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Var(pub String);

impl Var {
    pub fn new(name: impl Into<String>) -> Self {
        Var(name.into())
    }

    /// `X1`, `X2`, ...
    pub fn indexed(i: usize) -> Self {
        Var(format!("X{i}"))
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub type Monomial = Vec<Var>;

/// Finite map from monomials to nonzero integer coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NcPoly {
    terms: BTreeMap<Monomial, BigInt>,
}

impl NcPoly {
    pub fn zero() -> Self {
        NcPoly::default()
    }

    pub fn one() -> Self {
        Self::monomial(Vec::new(), BigInt::one())
    }

    pub fn var(v: Var) -> Self {
        Self::monomial(vec![v], BigInt::one())
    }

    pub fn monomial(m: Monomial, coeff: impl Into<BigInt>) -> Self {
        let mut p = NcPoly::zero();
        p.add_term(m, coeff.into());
        p
    }

    /// Sum of coefficient-one words over single-letter variable names, e.g.
    /// `from_words(&["AB", "A"])`.
    pub fn from_words(words: &[&str]) -> Self {
        let mut p = NcPoly::zero();
        for w in words {
            p.add_term(
                w.chars().map(|c| Var(c.to_string())).collect(),
                BigInt::one(),
            );
        }
        p
    }

    pub fn add_term(&mut self, m: Monomial, coeff: BigInt) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += coeff;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigInt)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &[Var]) -> BigInt {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    pub fn monomial_count(&self) -> usize {
        self.terms.len()
    }

    /// At least `2^(d-1)` monomials, the minimum any identity for `d×d`
    /// matrices must have.
    pub fn meets_lower_bound(&self, d: usize) -> bool {
        let bound = 1u128 << (d.max(1) - 1).min(127);
        self.monomial_count() as u128 >= bound
    }

    /// Every coefficient is `±1`.
    pub fn has_unit_coefficients(&self) -> bool {
        self.terms.values().all(|c| c.abs().is_one())
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    pub fn variables(&self) -> BTreeSet<Var> {
        self.terms.keys().flatten().cloned().collect()
    }

    pub fn scale(&self, k: &BigInt) -> NcPoly {
        let mut out = NcPoly::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c * k);
        }
        out
    }

    /// Homomorphic substitution of every variable.
    pub fn substitute(&self, subst: &BTreeMap<Var, NcPoly>) -> Result<NcPoly, NcError> {
        let mut out = NcPoly::zero();
        for (m, c) in &self.terms {
            let mut term = NcPoly::monomial(Vec::new(), c.clone());
            for v in m {
                let q = subst
                    .get(v)
                    .ok_or_else(|| NcError::MissingVariable(v.clone()))?;
                term = &term * q;
            }
            out = &out + &term;
        }
        Ok(out)
    }

    /// `Σ coeff · A_{m1}···A_{mk}`; the empty monomial maps to the identity.
    pub fn eval<M: MatrixRing>(&self, assignment: &BTreeMap<Var, M>) -> Result<M, NcError> {
        let template = assignment.values().next().ok_or(NcError::EmptyAssignment)?;
        if assignment.values().any(|m| !m.compatible(template)) {
            return Err(NcError::Mismatch);
        }
        let mut acc = template.zero_like();
        // prefix[i] is the product of the first i letters of `last`. Terms
        // are sorted, so neighbours share long prefixes.
        let mut prefix = vec![template.identity_like()];
        let mut last: &[Var] = &[];
        for (m, c) in &self.terms {
            let shared = m.iter().zip(last).take_while(|(a, b)| a == b).count();
            prefix.truncate(shared + 1);
            for v in &m[shared..] {
                let x = assignment
                    .get(v)
                    .ok_or_else(|| NcError::MissingVariable(v.clone()))?;
                let next = prefix.last().expect("identity at the bottom").mul(x);
                prefix.push(next);
            }
            last = m;
            acc = acc.add(&prefix[m.len()].scale(c));
        }
        Ok(acc)
    }

    /// `[p, q] = pq - qp`.
    pub fn commutator(p: &NcPoly, q: &NcPoly) -> NcPoly {
        &(p * q) - &(q * p)
    }

    pub fn pow(&self, k: usize) -> NcPoly {
        (0..k).fold(NcPoly::one(), |acc, _| &acc * self)
    }
}

impl Add for &NcPoly {
    type Output = NcPoly;
    fn add(self, rhs: &NcPoly) -> NcPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &NcPoly {
    type Output = NcPoly;
    fn sub(self, rhs: &NcPoly) -> NcPoly {
        self + &(-rhs)
    }
}

impl Neg for &NcPoly {
    type Output = NcPoly;
    fn neg(self) -> NcPoly {
        NcPoly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Mul for &NcPoly {
    type Output = NcPoly;
    fn mul(self, rhs: &NcPoly) -> NcPoly {
        let mut out = NcPoly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                let mut m = m1.clone();
                m.extend(m2.iter().cloned());
                out.add_term(m, c1 * c2);
            }
        }
        out
    }
}

impl fmt::Display for NcPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        let compact = self.variables().iter().all(|v| v.0.chars().count() == 1);
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            match (i, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let word = if compact {
                m.iter().map(|v| v.0.as_str()).collect::<String>()
            } else {
                m.iter().map(|v| v.0.as_str()).collect::<Vec<_>>().join("·")
            };
            if m.is_empty() {
                write!(f, "{abs}")?;
            } else if abs.is_one() {
                f.write_str(&word)?;
            } else {
                write!(f, "{abs}{word}")?;
            }
        }
        Ok(())
    }
}

/// Square matrix of noncommutative polynomials.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NcMatrix {
    rows: Vec<Vec<NcPoly>>,
}

impl NcMatrix {
    pub fn new(rows: Vec<Vec<NcPoly>>) -> Option<Self> {
        let n = rows.len();
        (n > 0 && rows.iter().all(|r| r.len() == n)).then_some(NcMatrix { rows })
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }
}

/// All permutations of `0..n` in Heap's order with their signs (+1 even).
pub fn permutations_with_sign(n: usize) -> Vec<(Vec<usize>, i32)> {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut out = vec![(perm.clone(), 1)];
    let mut sign = 1;
    let mut c = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            sign = -sign;
            out.push((perm.clone(), sign));
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

fn check_cap(n: usize, cap: usize) -> Result<(), NcError> {
    if n > cap {
        Err(NcError::TooLarge { n, cap })
    } else {
        Ok(())
    }
}

/// `s_{2d} = Σ_{σ ∈ S_{2d}} sgn(σ) X_{σ(1)}···X_{σ(2d)}` over `X1..X{2d}`.
pub fn standard_identity(d: usize) -> Result<NcPoly, NcError> {
    standard_identity_capped(d, DEFAULT_PERMUTATION_CAP)
}

pub fn standard_identity_capped(d: usize, cap: usize) -> Result<NcPoly, NcError> {
    if d == 0 {
        return Err(NcError::ZeroDimension);
    }
    check_cap(2 * d, cap)?;
    let mut p = NcPoly::zero();
    for (perm, sign) in permutations_with_sign(2 * d) {
        let m = perm.iter().map(|&i| Var::indexed(i + 1)).collect();
        p.add_term(m, BigInt::from(sign));
    }
    Ok(p)
}

/// `Σ_{σ ∈ S_d} sgn(σ) [X1^σ(1), X2]···[X1^σ(d), X2]`, expanded. Exponents
/// run over `1..=d`.
pub fn razmyslov_identity(d: usize) -> Result<NcPoly, NcError> {
    if d == 0 {
        return Err(NcError::ZeroDimension);
    }
    check_cap(d, DEFAULT_PERMUTATION_CAP)?;
    let x1 = NcPoly::var(Var::indexed(1));
    let x2 = NcPoly::var(Var::indexed(2));
    let brackets: Vec<NcPoly> = (1..=d)
        .map(|k| NcPoly::commutator(&x1.pow(k), &x2))
        .collect();
    let mut out = NcPoly::zero();
    for (perm, sign) in permutations_with_sign(d) {
        let term = perm
            .iter()
            .fold(NcPoly::one(), |acc, &i| &acc * &brackets[i]);
        out = &out + &term.scale(&BigInt::from(sign));
    }
    Ok(out)
}

/// `Σ_{σ ∈ S_n} M_{1,σ(1)}···M_{n,σ(n)}` with row-order products and no sign.
pub fn nc_determinant(m: &NcMatrix) -> Result<NcPoly, NcError> {
    let n = m.size();
    check_cap(n, DEFAULT_PERMUTATION_CAP)?;
    let mut out = NcPoly::zero();
    for (perm, _) in permutations_with_sign(n) {
        let term = perm
            .iter()
            .enumerate()
            .fold(NcPoly::one(), |acc, (row, &col)| &acc * &m.rows[row][col]);
        out = &out + &term;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub enum IdentityVerdict {
    /// A nonzero evaluation; `p` is not an identity for `d×d` matrices.
    RefutedWithWitness {
        trial: usize,
        assignment: BTreeMap<Var, ModMatrix>,
        value: ModMatrix,
    },
    /// Every trial evaluated to zero. Evidence only.
    ConsistentWithIdentity { trials: usize },
}

impl IdentityVerdict {
    pub fn is_refuted(&self) -> bool {
        matches!(self, IdentityVerdict::RefutedWithWitness { .. })
    }
}

/// Random assignment of `d×d` matrices over `𝔽_modulus` to `vars`.
pub fn random_assignment(
    vars: &BTreeSet<Var>,
    d: usize,
    modulus: u64,
    seed: u64,
) -> Result<BTreeMap<Var, ModMatrix>, NcError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vars.iter()
        .map(|v| Ok((v.clone(), random_field_matrix(d, modulus, &mut rng)?)))
        .collect()
}

/// Evaluates `p` on `trials` seeded random `d×d` assignments over `𝔽_modulus`.
pub fn is_identity_probabilistic(
    p: &NcPoly,
    d: usize,
    trials: usize,
    modulus: u64,
    seed: u64,
) -> Result<IdentityVerdict, NcError> {
    if d == 0 {
        return Err(NcError::ZeroDimension);
    }
    let mut vars = p.variables();
    if vars.is_empty() {
        // Constants still need a matrix to fix the dimension.
        vars.insert(Var::new("_"));
    }
    for trial in 0..trials {
        let assignment = random_assignment(&vars, d, modulus, derive_seed(seed, trial as u64))?;
        let value = p.eval(&assignment)?;
        if !value.is_zero() {
            return Ok(IdentityVerdict::RefutedWithWitness {
                trial,
                assignment,
                value,
            });
        }
    }
    Ok(IdentityVerdict::ConsistentWithIdentity { trials })
}

/// Two finite grammars over `x1..x{2d}`: the first generates the words
/// `x_σ(1)···x_σ(2d)` of even permutations, the second those of odd ones.
/// Their length-`2d` slice difference is exactly `s_{2d}`.
pub fn standard_identity_language_pair(d: usize) -> Result<(Grammar, Grammar), NcError> {
    if d == 0 {
        return Err(NcError::ZeroDimension);
    }
    check_cap(2 * d, DEFAULT_PERMUTATION_CAP)?;
    let letters: Vec<String> = (1..=2 * d).map(|i| format!("x{i}")).collect();
    let mut perms = permutations_with_sign(2 * d);
    perms.sort();
    let build = |want: i32| {
        let rules = perms
            .iter()
            .filter(|(_, s)| *s == want)
            .map(|(p, _)| {
                Rule::new(
                    "S",
                    p.iter()
                        .map(|&i| Symbol::Terminal(letters[i].clone()))
                        .collect(),
                )
            })
            .collect();
        Grammar::new(letters.clone(), vec!["S".into()], rules, "S")
            .expect("well-formed permutation grammar")
    };
    Ok((build(1), build(-1)))
}

/// The length-`n` slice difference `Σ_{w ∈ L1} w − Σ_{w ∈ L2} w` as a
/// polynomial in the letters, each word weighted by its derivation count.
pub fn slice_difference(g1: &CnfGrammar, g2: &CnfGrammar, n: usize) -> Result<NcPoly, NcError> {
    let (g1, g2) = align(g1, g2).map_err(OracleError::from)?;
    let letters: Vec<Var> = g1.terminals().iter().map(|t| Var::new(t.clone())).collect();
    let mut out = NcPoly::zero();
    for (g, sign) in [(&g1, BigInt::one()), (&g2, -BigInt::one())] {
        for w in enumerate_slice(g, n, None).words {
            let count = BigInt::from(cyk_parse_count(g, &w)?);
            let m = w.letters().iter().map(|&a| letters[a].clone()).collect();
            out.add_term(m, count * &sign);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: usize) -> NcPoly {
        NcPoly::var(Var::indexed(i))
    }

    #[test]
    fn ring_basics() {
        let p = NcPoly::monomial(vec![Var::indexed(1), Var::indexed(2)], 1);
        assert!((&p + &(-&p)).is_zero());
        let ab = &x(1) * &x(2);
        let ba = &x(2) * &x(1);
        assert_ne!(ab, ba);
        assert_eq!(ab.monomial_count(), 1);
        assert_eq!((&ab - &ba).to_string(), "X1·X2 - X2·X1");
    }

    #[test]
    fn worked_product() {
        let l = NcPoly::from_words(&["AB", "A"]);
        let r = NcPoly::from_words(&["A", "BA"]);
        assert_eq!(&l * &r, NcPoly::from_words(&["ABA", "ABBA", "AA", "ABA"]));
        assert_eq!((&l * &r).to_string(), "AA + 2ABA + ABBA");
    }

    #[test]
    fn substitution_example() {
        let comm = NcPoly::commutator(&x(1), &x(2));
        let subst = BTreeMap::from([
            (Var::indexed(1), NcPoly::from_words(&["AB", "A"])),
            (Var::indexed(2), NcPoly::from_words(&["A", "BA"])),
        ]);
        let got = comm.substitute(&subst).unwrap();
        let mut want = NcPoly::from_words(&["ABBA", "ABA", "ABA"]);
        want = &want - &NcPoly::from_words(&["BAAB", "BAA", "AAB"]);
        assert_eq!(got, want);

        let ident: BTreeMap<Var, NcPoly> = [1, 2].map(|i| (Var::indexed(i), x(i))).into();
        assert_eq!(comm.substitute(&ident).unwrap(), comm);

        let y = NcPoly::var(Var::new("Y"));
        let collapse = BTreeMap::from([(Var::indexed(1), y.clone()), (Var::indexed(2), y)]);
        assert!(comm.substitute(&collapse).unwrap().is_zero());

        let partial = BTreeMap::from([(Var::indexed(1), x(1))]);
        assert_eq!(
            comm.substitute(&partial),
            Err(NcError::MissingVariable(Var::indexed(2)))
        );
    }

    #[test]
    fn standard_identity_shape() {
        let s1 = standard_identity(1).unwrap();
        assert_eq!(s1, NcPoly::commutator(&x(1), &x(2)));
        let s2 = standard_identity(2).unwrap();
        assert_eq!(s2.monomial_count(), 24);
        assert!(s2.has_unit_coefficients());
        let positive = s2.terms().filter(|(_, c)| c.is_positive()).count();
        assert_eq!(positive, 12);
        assert_eq!(s2.degree(), 4);
        assert!(s2.meets_lower_bound(2));
        for (d, fact) in [(3, 720), (4, 40320)] {
            assert_eq!(standard_identity(d).unwrap().monomial_count(), fact);
        }
        assert!(matches!(
            standard_identity(5),
            Err(NcError::TooLarge { n: 10, cap: 8 })
        ));
    }

    #[test]
    fn razmyslov_small() {
        assert_eq!(
            razmyslov_identity(1).unwrap(),
            NcPoly::commutator(&x(1), &x(2))
        );
        let r2 = razmyslov_identity(2).unwrap();
        let c1 = NcPoly::commutator(&x(1), &x(2));
        let c2 = NcPoly::commutator(&x(1).pow(2), &x(2));
        assert_eq!(r2, &(&c1 * &c2) - &(&c2 * &c1));
        assert_eq!(r2.degree(), 5);
    }

    #[test]
    fn determinant() {
        let a = |s: &str| NcPoly::var(Var::new(s));
        let one = NcMatrix::new(vec![vec![a("p")]]).unwrap();
        assert_eq!(nc_determinant(&one).unwrap(), a("p"));
        let m = NcMatrix::new(vec![vec![a("a"), a("b")], vec![a("c"), a("d")]]).unwrap();
        assert_eq!(
            nc_determinant(&m).unwrap(),
            NcPoly::from_words(&["ad", "bc"])
        );
        let y = a("Y");
        let same = NcMatrix::new(vec![vec![y.clone(), y.clone()], vec![y.clone(), y]]).unwrap();
        assert_eq!(
            nc_determinant(&same).unwrap(),
            NcPoly::from_words(&["YY", "YY"])
        );
        assert!(NcMatrix::new(vec![vec![a("a")], vec![]]).is_none());
    }

    #[test]
    fn eval_scalars_commute() {
        let comm = NcPoly::commutator(&x(1), &x(2));
        let v = is_identity_probabilistic(&comm, 1, 20, 1_000_000_007, 3).unwrap();
        assert_eq!(v, IdentityVerdict::ConsistentWithIdentity { trials: 20 });
        assert!(is_identity_probabilistic(&comm, 2, 20, 1_000_000_007, 3)
            .unwrap()
            .is_refuted());
        assert!(matches!(
            comm.eval::<ModMatrix>(&BTreeMap::new()),
            Err(NcError::EmptyAssignment)
        ));
    }

    #[test]
    fn permutation_signs() {
        let perms = permutations_with_sign(4);
        assert_eq!(perms.len(), 24);
        for (p, s) in &perms {
            let inversions = (0..4)
                .flat_map(|i| (i + 1..4).map(move |j| (i, j)))
                .filter(|&(i, j)| p[i] > p[j])
                .count();
            assert_eq!(*s, if inversions % 2 == 0 { 1 } else { -1 }, "{p:?}");
        }
        let mut sorted: Vec<_> = perms.into_iter().map(|(p, _)| p).collect();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 24);
    }

    #[test]
    fn language_pair_sizes() {
        let (e, o) = standard_identity_language_pair(1).unwrap();
        assert_eq!(e.rules().len(), 1);
        assert_eq!(o.rules().len(), 1);
        let (e, o) = standard_identity_language_pair(2).unwrap();
        assert_eq!((e.rules().len(), o.rules().len()), (12, 12));
        assert_eq!(e.terminals(), o.terminals());
    }
}
