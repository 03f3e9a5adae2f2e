//! Matrix substitution: every letter becomes a square matrix, every word the
//! product of its letters, a language the sum of its words.
//!
//! Slice signatures compute, per length `n`, the derivation-weighted sum of
//! word products exactly over a prime field. Two languages whose n-slices
//! differ give a nonzero homogeneous polynomial of degree `n` in the matrix
//! entries unless the difference is a polynomial identity for `d×d`
//! matrices, so a random assignment separates them with high probability.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cnf::{align, AlphabetError, CnfGrammar};
use crate::oracle::{enumerate_slice, OracleError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("matrix dimension must be at least 1")]
    ZeroDimension,
    #[error("matrices disagree on dimension or field")]
    Mismatch,
    #[error("assignment has {got} matrices, the alphabet has {want} letters")]
    AssignmentArity { got: usize, want: usize },
    #[error("letter {letter} has l1 norm {norm}, which is not below {bound}")]
    NormTooLarge {
        letter: usize,
        norm: f64,
        bound: f64,
    },
    #[error("matrix fixed-point iteration did not converge after {0} steps")]
    NotConverged(usize),
    #[error(transparent)]
    Alphabet(#[from] AlphabetError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
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

/// Deterministic Miller–Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in WITNESSES {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in WITNESSES {
        let mut x = pow_mod(a, d, n);
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

/// Square matrices that can stand in for letters and noncommutative
/// variables.
pub trait MatrixRing: Clone + PartialEq + fmt::Debug {
    fn dim(&self) -> usize;
    fn zero_like(&self) -> Self;
    fn identity_like(&self) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn scale(&self, k: &BigInt) -> Self;
    fn is_zero(&self) -> bool;
    /// Same dimension and same field.
    fn compatible(&self, other: &Self) -> bool;
}

/// A `d×d` matrix over the prime field `𝔽_p`, row-major.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModMatrix {
    dim: usize,
    modulus: u64,
    data: Vec<u64>,
}

impl ModMatrix {
    pub fn zero(dim: usize, modulus: u64) -> Self {
        ModMatrix {
            dim,
            modulus,
            data: vec![0; dim * dim],
        }
    }

    pub fn identity(dim: usize, modulus: u64) -> Self {
        let mut m = Self::zero(dim, modulus);
        for i in 0..dim {
            m.data[i * dim + i] = 1 % modulus;
        }
        m
    }

    /// Entries are reduced modulo `modulus`.
    pub fn from_rows(rows: &[Vec<u64>], modulus: u64) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "matrix must be square");
        ModMatrix {
            dim,
            modulus,
            data: rows.iter().flatten().map(|&x| x % modulus).collect(),
        }
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.dim + j]
    }

    pub fn entries(&self) -> &[u64] {
        &self.data
    }

    pub fn scale_u64(&self, k: u64) -> Self {
        let k = k % self.modulus;
        ModMatrix {
            dim: self.dim,
            modulus: self.modulus,
            data: self
                .data
                .iter()
                .map(|&x| mul_mod(x, k, self.modulus))
                .collect(),
        }
    }

    fn add_assign_product(&mut self, a: &ModMatrix, b: &ModMatrix) {
        let (d, p) = (self.dim, self.modulus);
        for i in 0..d {
            for k in 0..d {
                let aik = a.data[i * d + k];
                if aik == 0 {
                    continue;
                }
                for j in 0..d {
                    let idx = i * d + j;
                    self.data[idx] = (self.data[idx] + mul_mod(aik, b.data[k * d + j], p)) % p;
                }
            }
        }
    }
}

impl fmt::Debug for ModMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[u64]> = self.data.chunks(self.dim.max(1)).collect();
        write!(f, "ModMatrix(mod {}){:?}", self.modulus, rows)
    }
}

impl MatrixRing for ModMatrix {
    fn dim(&self) -> usize {
        self.dim
    }

    fn zero_like(&self) -> Self {
        Self::zero(self.dim, self.modulus)
    }

    fn identity_like(&self) -> Self {
        Self::identity(self.dim, self.modulus)
    }

    fn add(&self, other: &Self) -> Self {
        let p = self.modulus;
        ModMatrix {
            dim: self.dim,
            modulus: p,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| (a + b) % p)
                .collect(),
        }
    }

    fn sub(&self, other: &Self) -> Self {
        let p = self.modulus;
        ModMatrix {
            dim: self.dim,
            modulus: p,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| (a + p - b) % p)
                .collect(),
        }
    }

    fn mul(&self, other: &Self) -> Self {
        let mut out = self.zero_like();
        out.add_assign_product(self, other);
        out
    }

    fn scale(&self, k: &BigInt) -> Self {
        let p = BigInt::from(self.modulus);
        let mut r = k % &p;
        if r.is_negative() {
            r += &p;
        }
        self.scale_u64(r.to_u64().expect("reduced modulo p"))
    }

    fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    fn compatible(&self, other: &Self) -> bool {
        self.dim == other.dim && self.modulus == other.modulus
    }
}

/// A real `d×d` matrix, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn zero(dim: usize) -> Self {
        RealMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zero(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "matrix must be square");
        RealMatrix {
            dim,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Entrywise ℓ¹ norm, `Σ_ij |A_ij|`. Submultiplicative.
    pub fn l1_norm(&self) -> f64 {
        self.data.iter().map(|x| x.abs()).sum()
    }

    pub fn scale_f64(&self, k: f64) -> Self {
        RealMatrix {
            dim: self.dim,
            data: self.data.iter().map(|x| x * k).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl MatrixRing for RealMatrix {
    fn dim(&self) -> usize {
        self.dim
    }

    fn zero_like(&self) -> Self {
        Self::zero(self.dim)
    }

    fn identity_like(&self) -> Self {
        Self::identity(self.dim)
    }

    fn add(&self, other: &Self) -> Self {
        RealMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    fn sub(&self, other: &Self) -> Self {
        RealMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    fn mul(&self, other: &Self) -> Self {
        let d = self.dim;
        let mut out = Self::zero(d);
        for i in 0..d {
            for k in 0..d {
                let aik = self.data[i * d + k];
                for j in 0..d {
                    out.data[i * d + j] += aik * other.data[k * d + j];
                }
            }
        }
        out
    }

    fn scale(&self, k: &BigInt) -> Self {
        self.scale_f64(k.to_f64().unwrap_or(f64::NAN))
    }

    fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    fn compatible(&self, other: &Self) -> bool {
        self.dim == other.dim
    }
}

/// Uniform entries in `𝔽_p`, reproducible from the generator state.
pub fn random_field_matrix<R: Rng + ?Sized>(
    d: usize,
    p: u64,
    rng: &mut R,
) -> Result<ModMatrix, MatrixError> {
    if d == 0 {
        return Err(MatrixError::ZeroDimension);
    }
    if !is_prime(p) {
        return Err(MatrixError::NotPrime(p));
    }
    Ok(ModMatrix {
        dim: d,
        modulus: p,
        data: (0..d * d).map(|_| rng.gen_range(0..p)).collect(),
    })
}

/// A real matrix with `0 < ‖X‖₁ < eps_norm`: uniform entries in `[-1, 1]`,
/// rescaled to a norm drawn uniformly from `(0, eps_norm)`.
pub fn random_real_matrix_small<R: Rng + ?Sized>(
    d: usize,
    eps_norm: f64,
    rng: &mut R,
) -> RealMatrix {
    assert!(d >= 1 && eps_norm > 0.0);
    loop {
        let m = RealMatrix {
            dim: d,
            data: (0..d * d).map(|_| rng.gen_range(-1.0..=1.0)).collect(),
        };
        let norm = m.l1_norm();
        let target = rng.gen_range(0.0..eps_norm);
        if norm == 0.0 || target == 0.0 {
            continue;
        }
        let scaled = m.scale_f64(target / norm);
        if scaled.l1_norm() < eps_norm {
            return scaled;
        }
    }
}

/// One matrix per letter, indexed by alphabet position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LetterAssignment<M> {
    pub matrices: Vec<M>,
}

impl<M: MatrixRing> LetterAssignment<M> {
    pub fn new(matrices: Vec<M>) -> Result<Self, MatrixError> {
        if let Some(first) = matrices.first() {
            if matrices.iter().any(|m| !m.compatible(first)) {
                return Err(MatrixError::Mismatch);
            }
        }
        Ok(LetterAssignment { matrices })
    }

    pub fn word_product(&self, word: &[usize]) -> M {
        let mut acc = self.matrices[0].identity_like();
        for &a in word {
            acc = acc.mul(&self.matrices[a]);
        }
        acc
    }

    pub fn scaled(&self, k: &BigInt) -> Self {
        LetterAssignment {
            matrices: self.matrices.iter().map(|m| m.scale(k)).collect(),
        }
    }
}

impl LetterAssignment<ModMatrix> {
    pub fn random<R: Rng + ?Sized>(
        letters: usize,
        d: usize,
        p: u64,
        rng: &mut R,
    ) -> Result<Self, MatrixError> {
        let matrices = (0..letters)
            .map(|_| random_field_matrix(d, p, rng))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(LetterAssignment { matrices })
    }
}

/// `per_length[n-1][C]`: sum over derivations of `C` yielding a length-`n`
/// word of the product of its letter matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceSignature<M> {
    pub start: usize,
    pub per_length: Vec<Vec<M>>,
}

impl<M: MatrixRing> SliceSignature<M> {
    pub fn max_len(&self) -> usize {
        self.per_length.len()
    }

    pub fn get(&self, nonterminal: usize, n: usize) -> &M {
        &self.per_length[n - 1][nonterminal]
    }

    pub fn start_slice(&self, n: usize) -> &M {
        self.get(self.start, n)
    }
}

/// `M_C[1] = Σ_{C->a} X_a`, `M_C[n] = Σ_{C->DE} Σ_k M_D[k]·M_E[n-k]`.
pub fn slice_signatures<M: MatrixRing>(
    g: &CnfGrammar,
    assignment: &LetterAssignment<M>,
    max_len: usize,
) -> Result<SliceSignature<M>, MatrixError> {
    let want = g.terminals().len();
    if assignment.matrices.len() != want || want == 0 {
        return Err(MatrixError::AssignmentArity {
            got: assignment.matrices.len(),
            want,
        });
    }
    let zero = assignment.matrices[0].zero_like();
    let nts = g.nonterminals().len();
    let mut per_length: Vec<Vec<M>> = Vec::with_capacity(max_len);
    if max_len >= 1 {
        let mut row = vec![zero.clone(); nts];
        for r in g.terminal_rules() {
            row[r.lhs] = row[r.lhs].add(&assignment.matrices[r.terminal]);
        }
        per_length.push(row);
    }
    for n in 2..=max_len {
        let mut row = vec![zero.clone(); nts];
        for r in g.binary_rules() {
            for k in 1..n {
                let (left, right) = (&per_length[k - 1][r.left], &per_length[n - k - 1][r.right]);
                if left.is_zero() || right.is_zero() {
                    continue;
                }
                row[r.lhs] = row[r.lhs].add(&left.mul(right));
            }
        }
        per_length.push(row);
    }
    Ok(SliceSignature {
        start: g.start(),
        per_length,
    })
}

/// Scalar convergence radius for one grammar, `1/(|G|²·|Σ|)`.
pub fn grammar_epsilon(g: &CnfGrammar) -> f64 {
    let p = g.size().max(1) as f64;
    1.0 / (p * p * g.terminals().len().max(1) as f64)
}

/// Kleene iteration of the full matrix series from zero matrices. Every
/// letter matrix must have ℓ¹ norm below `epsilon`; submultiplicativity of
/// the norm then bounds the iterates by the convergent scalar majorant.
pub fn matrix_series_fixed_point(
    g: &CnfGrammar,
    assignment: &LetterAssignment<RealMatrix>,
    epsilon: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<RealMatrix>, MatrixError> {
    let want = g.terminals().len();
    if assignment.matrices.len() != want || want == 0 {
        return Err(MatrixError::AssignmentArity {
            got: assignment.matrices.len(),
            want,
        });
    }
    for (letter, m) in assignment.matrices.iter().enumerate() {
        let norm = m.l1_norm();
        if norm >= epsilon {
            return Err(MatrixError::NormTooLarge {
                letter,
                norm,
                bound: epsilon,
            });
        }
    }
    let zero = assignment.matrices[0].zero_like();
    let mut cur = vec![zero.clone(); g.nonterminals().len()];
    for _ in 0..max_iter {
        let mut next = vec![zero.clone(); cur.len()];
        for r in g.terminal_rules() {
            next[r.lhs] = next[r.lhs].add(&assignment.matrices[r.terminal]);
        }
        for r in g.binary_rules() {
            next[r.lhs] = next[r.lhs].add(&cur[r.left].mul(&cur[r.right]));
        }
        let change = cur
            .iter()
            .zip(&next)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max);
        cur = next;
        if !change.is_finite() {
            break;
        }
        if change < tol {
            return Ok(cur);
        }
    }
    Err(MatrixError::NotConverged(max_iter))
}

/// Per-trial seed derived from the run seed (splitmix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityParams {
    pub dim: usize,
    pub max_len: usize,
    pub trials: usize,
    pub prime: u64,
    pub seed: u64,
}

impl Default for SimilarityParams {
    fn default() -> Self {
        SimilarityParams {
            dim: 3,
            max_len: 32,
            trials: 8,
            prime: 2_147_483_647,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SimilarityVerdict {
    /// The n-slices differ; sound. `n = 0` means the ε flags differ.
    DistinguishedAtLength { n: usize, trial: usize, seed: u64 },
    /// No trial separated the grammars. Evidence only.
    IndistinguishableUpTo {
        max_len: usize,
        trials: usize,
        dim: usize,
        prime: u64,
    },
}

impl SimilarityVerdict {
    pub fn is_distinguished(&self) -> bool {
        matches!(self, SimilarityVerdict::DistinguishedAtLength { .. })
    }
}

/// The assignment used by trial `trial` of a run with seed `seed`.
pub fn trial_assignment(
    letters: usize,
    params: &SimilarityParams,
    trial: usize,
) -> Result<(u64, LetterAssignment<ModMatrix>), MatrixError> {
    let seed = derive_seed(params.seed, trial as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((
        seed,
        LetterAssignment::random(letters, params.dim, params.prime, &mut rng)?,
    ))
}

/// Randomized refutation of d-similarity: compare start-symbol slice
/// signatures under fresh random assignments. The lowest trial index with a
/// mismatch is reported, and within it the shortest length.
pub fn d_similarity_test(
    g1: &CnfGrammar,
    g2: &CnfGrammar,
    params: &SimilarityParams,
) -> Result<SimilarityVerdict, MatrixError> {
    if params.dim == 0 {
        return Err(MatrixError::ZeroDimension);
    }
    if !is_prime(params.prime) {
        return Err(MatrixError::NotPrime(params.prime));
    }
    let (g1, g2) = align(g1, g2)?;
    if g1.generates_empty_word() != g2.generates_empty_word() {
        return Ok(SimilarityVerdict::DistinguishedAtLength {
            n: 0,
            trial: 0,
            seed: params.seed,
        });
    }
    let letters = g1.terminals().len();
    if letters == 0 {
        return Ok(SimilarityVerdict::IndistinguishableUpTo {
            max_len: params.max_len,
            trials: params.trials,
            dim: params.dim,
            prime: params.prime,
        });
    }
    let run = |trial: usize| -> Result<Option<SimilarityVerdict>, MatrixError> {
        let (seed, assignment) = trial_assignment(letters, params, trial)?;
        let s1 = slice_signatures(&g1, &assignment, params.max_len)?;
        let s2 = slice_signatures(&g2, &assignment, params.max_len)?;
        Ok((1..=params.max_len)
            .find(|&n| s1.start_slice(n) != s2.start_slice(n))
            .map(|n| SimilarityVerdict::DistinguishedAtLength { n, trial, seed }))
    };
    // Trials run in parallel chunks so a hit stops the remaining work; the
    // lowest trial index wins regardless of scheduling.
    let chunk = rayon::current_num_threads().max(1) * 2;
    let mut found = None;
    let mut lo = 0;
    while lo < params.trials && found.is_none() {
        let hi = (lo + chunk).min(params.trials);
        found = (lo..hi)
            .into_par_iter()
            .map(run)
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .flatten()
            .next();
        lo = hi;
    }
    Ok(found.unwrap_or(SimilarityVerdict::IndistinguishableUpTo {
        max_len: params.max_len,
        trials: params.trials,
        dim: params.dim,
        prime: params.prime,
    }))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundedDifferenceReport {
    pub dim: usize,
    pub max_len: usize,
    /// `2^(d-1)`.
    pub bound: u64,
    /// Symmetric-difference size of every nonempty differing slice.
    pub differing_slices: Vec<(usize, usize)>,
    /// Every slice up to `max_len` differs in fewer than `bound` words.
    pub applies: bool,
    pub first_violation: Option<usize>,
    /// Some slice differs, in fewer than `bound` words.
    pub weak_form_applies: bool,
}

impl BoundedDifferenceReport {
    /// The grammars differ within the bound and the hypotheses hold, so they
    /// are predicted to be distinguishable with `d×d` matrices.
    pub fn predicts_distinguishable(&self) -> bool {
        self.weak_form_applies
    }
}

fn symmetric_difference_size(a: &[crate::oracle::Word], b: &[crate::oracle::Word]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() || j < b.len() {
        match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) if x == y => {
                i += 1;
                j += 1;
            }
            (Some(x), Some(y)) if x < y => {
                count += 1;
                i += 1;
            }
            (Some(_), None) => {
                count += 1;
                i += 1;
            }
            _ => {
                count += 1;
                j += 1;
            }
        }
    }
    count
}

/// Checks the slice-size hypothesis of the bounded-difference criterion
/// (fewer than `2^(d-1)` differing words per slice) up to `max_len`.
pub fn bounded_difference_applicability(
    g1: &CnfGrammar,
    g2: &CnfGrammar,
    d: usize,
    max_len: usize,
) -> Result<BoundedDifferenceReport, MatrixError> {
    let (g1, g2) = align(g1, g2)?;
    let bound = 1u64 << (d.max(1) - 1).min(63);
    let mut differing = Vec::new();
    if g1.generates_empty_word() != g2.generates_empty_word() {
        differing.push((0, 1));
    }
    for n in 1..=max_len {
        let a = enumerate_slice(&g1, n, None).words;
        let b = enumerate_slice(&g2, n, None).words;
        let size = symmetric_difference_size(&a, &b);
        if size > 0 {
            differing.push((n, size));
        }
    }
    let first_violation = differing
        .iter()
        .find(|&&(_, s)| s as u64 >= bound)
        .map(|&(n, _)| n);
    let weak = differing.iter().any(|&(_, s)| (s as u64) < bound);
    Ok(BoundedDifferenceReport {
        dim: d,
        max_len,
        bound,
        applies: first_violation.is_none(),
        first_violation,
        weak_form_applies: weak,
        differing_slices: differing,
    })
}
