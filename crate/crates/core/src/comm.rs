//! Commutative images.
//!
//! A CNF grammar without ε translates into one polynomial equation per
//! nonterminal,
//!
//! ```text
//! f(C) = Σ_{C -> D E} f(D)·f(E) + Σ_{C -> a} a
//! ```
//!
//! whose least solution is the commutative image of `L(C)` when the grammar
//! is unambiguous. This module builds that system, evaluates it numerically
//! by Kleene iteration inside the convergence ball, computes exact Parikh
//! coefficients, and writes the universally quantified equality sentence
//! in SMT-LIB 2 for an external real-arithmetic solver.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::{BigRational, Rational64};
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cnf::{align, AlphabetError, CnfGrammar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CommError {
    #[error(transparent)]
    Alphabet(#[from] AlphabetError),
    #[error("the alphabet is empty")]
    EmptyAlphabet,
    #[error("fixed-point iteration did not converge after {iterations} steps (last change {last_change:e})")]
    NotConverged { iterations: usize, last_change: f64 },
    #[error("evaluation point has {got} coordinates, the alphabet has {want}")]
    PointArity { got: usize, want: usize },
    #[error("evaluation point has a negative coordinate")]
    NegativePoint,
}

/// The equation of one unknown: products of unknowns plus letter variables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GfEquation {
    pub products: Vec<(usize, usize)>,
    pub letters: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GfSystem {
    pub unknowns: Vec<String>,
    pub letter_variables: Vec<String>,
    pub equations: Vec<GfEquation>,
    pub start: usize,
}

pub fn build_gf_system(g: &CnfGrammar) -> GfSystem {
    let mut equations = vec![
        GfEquation {
            products: Vec::new(),
            letters: Vec::new(),
        };
        g.nonterminals().len()
    ];
    for r in g.binary_rules() {
        equations[r.lhs].products.push((r.left, r.right));
    }
    for r in g.terminal_rules() {
        equations[r.lhs].letters.push(r.terminal);
    }
    GfSystem {
        unknowns: g.nonterminals().to_vec(),
        letter_variables: g.terminals().to_vec(),
        equations,
        start: g.start(),
    }
}

impl fmt::Display for GfSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (c, eq) in self.equations.iter().enumerate() {
            let mut terms: Vec<String> = eq
                .products
                .iter()
                .map(|&(d, e)| format!("{}·{}", self.unknowns[d], self.unknowns[e]))
                .collect();
            terms.extend(eq.letters.iter().map(|&a| self.letter_variables[a].clone()));
            if terms.is_empty() {
                terms.push("0".into());
            }
            writeln!(f, "{} = {}", self.unknowns[c], terms.join(" + "))?;
        }
        Ok(())
    }
}

/// `1 / (max(|G1|, |G2|)² · |Σ|)` over the joint alphabet. Sizes are floored
/// at 1 so empty bodies still give a finite radius.
pub fn convergence_epsilon(g1: &CnfGrammar, g2: &CnfGrammar) -> Result<BigRational, CommError> {
    let (g1, _) = align(g1, g2)?;
    let sigma = g1.terminals().len();
    if sigma == 0 {
        return Err(CommError::EmptyAlphabet);
    }
    let p = g1.size().max(g2.size()).max(1);
    Ok(BigRational::new(
        BigInt::one(),
        BigInt::from(p) * BigInt::from(p) * BigInt::from(sigma),
    ))
}

fn epsilon_denominator(g1: &CnfGrammar, g2: &CnfGrammar) -> Result<u64, CommError> {
    let eps = convergence_epsilon(g1, g2)?;
    Ok(eps.denom().to_u64().expect("desk-scale grammar sizes"))
}

/// A point of evaluation, one nonnegative rational per letter.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalPoint(pub Vec<Rational64>);

impl EvalPoint {
    pub fn as_f64(&self) -> Vec<f64> {
        self.0
            .iter()
            .map(|r| *r.numer() as f64 / *r.denom() as f64)
            .collect()
    }

    pub fn max_coordinate(&self) -> f64 {
        self.as_f64().into_iter().fold(0.0, f64::max)
    }
}

impl fmt::Display for EvalPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|r| r.to_string()).collect();
        write!(f, "({})", parts.join(", "))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixedPoint {
    pub values: Vec<f64>,
    pub iterations: usize,
}

/// Kleene iteration from the zero vector, applying every equation at once,
/// until the largest coordinate change drops below `tol`.
pub fn eval_fixed_point(
    sys: &GfSystem,
    point: &EvalPoint,
    tol: f64,
    max_iter: usize,
) -> Result<FixedPoint, CommError> {
    if point.0.len() != sys.letter_variables.len() {
        return Err(CommError::PointArity {
            got: point.0.len(),
            want: sys.letter_variables.len(),
        });
    }
    if point.0.iter().any(|r| *r < Rational64::zero()) {
        return Err(CommError::NegativePoint);
    }
    let x = point.as_f64();
    let mut cur = vec![0.0f64; sys.unknowns.len()];
    let mut next = cur.clone();
    let mut change = f64::INFINITY;
    for it in 1..=max_iter {
        change = 0.0;
        for (c, eq) in sys.equations.iter().enumerate() {
            let v: f64 = eq
                .products
                .iter()
                .map(|&(d, e)| cur[d] * cur[e])
                .sum::<f64>()
                + eq.letters.iter().map(|&a| x[a]).sum::<f64>();
            change = if v.is_finite() {
                change.max((v - cur[c]).abs())
            } else {
                f64::INFINITY
            };
            next[c] = v;
        }
        std::mem::swap(&mut cur, &mut next);
        if !change.is_finite() {
            break;
        }
        if change < tol {
            return Ok(FixedPoint {
                values: cur,
                iterations: it,
            });
        }
    }
    Err(CommError::NotConverged {
        iterations: max_iter,
        last_change: change,
    })
}

/// Letter counts of a word, indexed by alphabet position.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParikhVector(pub Vec<u32>);

impl ParikhVector {
    pub fn zero(k: usize) -> Self {
        ParikhVector(vec![0; k])
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    fn add(&self, other: &ParikhVector) -> ParikhVector {
        ParikhVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Monomial notation over `alphabet`, e.g. `a^2b` or `1` for zero.
    pub fn render(&self, alphabet: &[String]) -> String {
        let mut out = String::new();
        for (i, &d) in self.0.iter().enumerate() {
            match d {
                0 => {}
                1 => out.push_str(&alphabet[i]),
                d => out.push_str(&format!("{}^{d}", alphabet[i])),
            }
        }
        if out.is_empty() {
            out.push('1');
        }
        out
    }
}

pub type ParikhCoefficients = BTreeMap<ParikhVector, BigUint>;

/// Exact coefficients of the commutative image up to total degree
/// `max_degree`, by dynamic programming over (nonterminal, Parikh vector).
/// The state space grows like `max_degree^|Σ|`.
pub fn parikh_coefficients(g: &CnfGrammar, max_degree: usize) -> ParikhCoefficients {
    let k = g.terminals().len();
    let nts = g.nonterminals().len();
    // levels[n][C]: vector -> derivations, words of total degree n
    let mut levels: Vec<Vec<HashMap<ParikhVector, BigUint>>> =
        vec![vec![HashMap::new(); nts]; max_degree + 1];
    if max_degree >= 1 {
        for r in g.terminal_rules() {
            let mut v = ParikhVector::zero(k);
            v.0[r.terminal] = 1;
            *levels[1][r.lhs].entry(v).or_default() += 1u32;
        }
    }
    for n in 2..=max_degree {
        let mut row: Vec<HashMap<ParikhVector, BigUint>> = vec![HashMap::new(); nts];
        for r in g.binary_rules() {
            for split in 1..n {
                let (left, right) = (&levels[split][r.left], &levels[n - split][r.right]);
                if left.is_empty() || right.is_empty() {
                    continue;
                }
                for (u, cu) in left {
                    for (w, cw) in right {
                        *row[r.lhs].entry(u.add(w)).or_default() += cu * cw;
                    }
                }
            }
        }
        levels[n] = row;
    }
    let mut out = ParikhCoefficients::new();
    if g.generates_empty_word() {
        out.insert(ParikhVector::zero(k), BigUint::one());
    }
    for level in levels.iter().skip(1) {
        for (v, c) in &level[g.start()] {
            if !c.is_zero() {
                out.insert(v.clone(), c.clone());
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericOptions {
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
    /// Degree whose tail bound is added to `tol`: a `Distinguished` verdict
    /// certifies a coefficient mismatch at total degree at most this.
    pub degree: usize,
    pub max_iter: usize,
}

impl Default for NumericOptions {
    fn default() -> Self {
        NumericOptions {
            samples: 100,
            tol: 1e-12,
            seed: 0,
            degree: 8,
            max_iter: 1_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CommVerdict {
    /// Every sample agreed within tolerance. Consistent with equality of
    /// commutative images, not a proof of it.
    PointwiseEqual { samples: usize, max_delta: f64 },
    Distinguished {
        sample: usize,
        point: EvalPoint,
        delta: f64,
        threshold: f64,
    },
}

/// Upper bound on `Σ_{n > degree} r^n` with `r = p²·|Σ|·x_max`, doubled to
/// cover the tails of both series.
pub fn tail_bound(p: usize, sigma: usize, x_max: f64, degree: usize) -> f64 {
    let r = (p * p * sigma) as f64 * x_max;
    if r >= 1.0 {
        return f64::INFINITY;
    }
    2.0 * r.powi(degree as i32 + 1) / (1.0 - r)
}

/// Seeded sample points with coordinates `k / (2·Q·N)`, `1 <= k < Q`, where
/// `ε = 1/N`. Every coordinate lies in `(0, ε/2)`.
pub fn sample_points(
    sigma: usize,
    eps_denominator: u64,
    samples: usize,
    seed: u64,
) -> Vec<EvalPoint> {
    const Q: i64 = 64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let denom = 2 * Q * eps_denominator as i64;
    (0..samples)
        .map(|_| {
            EvalPoint(
                (0..sigma)
                    .map(|_| Rational64::new(rng.gen_range(1..Q), denom))
                    .collect(),
            )
        })
        .collect()
}

/// Compares `f(S1)` and `f(S2)` (including ε) at seeded random points in
/// the convergence ball.
pub fn comm_equal_numeric(
    g1: &CnfGrammar,
    g2: &CnfGrammar,
    opts: &NumericOptions,
) -> Result<CommVerdict, CommError> {
    let (g1, g2) = align(g1, g2)?;
    let n = epsilon_denominator(&g1, &g2)?;
    let sigma = g1.terminals().len();
    let p = g1.size().max(g2.size()).max(1);
    let (s1, s2) = (build_gf_system(&g1), build_gf_system(&g2));
    let flag = |g: &CnfGrammar| if g.generates_empty_word() { 1.0 } else { 0.0 };
    let mut max_delta = 0.0f64;
    for (i, point) in sample_points(sigma, n, opts.samples, opts.seed)
        .into_iter()
        .enumerate()
    {
        let v1 =
            eval_fixed_point(&s1, &point, opts.tol, opts.max_iter)?.values[s1.start] + flag(&g1);
        let v2 =
            eval_fixed_point(&s2, &point, opts.tol, opts.max_iter)?.values[s2.start] + flag(&g2);
        let delta = (v1 - v2).abs();
        let threshold = opts.tol + tail_bound(p, sigma, point.max_coordinate(), opts.degree);
        if delta > threshold {
            return Ok(CommVerdict::Distinguished {
                sample: i,
                point,
                delta,
                threshold,
            });
        }
        max_delta = max_delta.max(delta);
    }
    Ok(CommVerdict::PointwiseEqual {
        samples: opts.samples,
        max_delta,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubsetVerdict {
    Equal,
    NotEqual,
}

/// Language equality under the promise `L(g1) ⊆ L(g2)`: a strict superset
/// has some strictly larger coefficient, so equal images mean equal
/// languages. `NotEqual` holds without the promise.
pub fn subset_equivalence(
    g1: &CnfGrammar,
    g2: &CnfGrammar,
    opts: &NumericOptions,
) -> Result<SubsetVerdict, CommError> {
    Ok(match comm_equal_numeric(g1, g2, opts)? {
        CommVerdict::PointwiseEqual { .. } => SubsetVerdict::Equal,
        CommVerdict::Distinguished { .. } => SubsetVerdict::NotEqual,
    })
}

const SMT_RESERVED: &[&str] = &[
    "and", "or", "not", "xor", "ite", "let", "forall", "exists", "true", "false", "distinct",
    "par", "as", "match", "assert", "push", "pop", "exit", "abs", "div", "mod", "to_real",
    "to_int", "is_int",
];

fn letter_symbols(alphabet: &[String]) -> Vec<String> {
    let simple = |s: &str| {
        let mut chars = s.chars();
        matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
            && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
            && !SMT_RESERVED.contains(&s)
            && !s.starts_with("g1_")
            && !s.starts_with("g2_")
    };
    let candidates: Vec<String> = alphabet
        .iter()
        .enumerate()
        .map(|(i, a)| {
            if simple(a) {
                a.clone()
            } else {
                format!("x_{i}")
            }
        })
        .collect();
    let unique: HashSet<&String> = candidates.iter().collect();
    if unique.len() == candidates.len() {
        candidates
    } else {
        (0..alphabet.len()).map(|i| format!("x_{i}")).collect()
    }
}

fn smt_sum(terms: Vec<String>) -> String {
    match terms.len() {
        0 => "0".to_string(),
        1 => terms.into_iter().next().expect("one term"),
        _ => format!("(+ {})", terms.join(" ")),
    }
}

/// SMT-LIB 2 script (logic NRA) asserting the negation of
///
/// ```text
/// ∀ letters, nonterminals: (Small ∧ Bounded ∧ Correctness) ⇒ S1 = S2
/// ```
///
/// `Bounded` keeps every nonterminal below `1/(p²-1)` in absolute value.
/// An unambiguous nonterminal has 0/1 coefficients, so its series lies in
/// that box on the ε-ball, and for `p ≥ 3` the equations contract there.
/// Without it a recursive system has spurious real roots.
///
/// `unsat` means the commutative images agree. Letters keep their names when
/// they are plain identifiers; nonterminals are prefixed `g1_` / `g2_`.
pub fn emit_smt_sentence(g1: &CnfGrammar, g2: &CnfGrammar) -> Result<String, CommError> {
    let (g1, g2) = align(g1, g2)?;
    let eps_n = epsilon_denominator(&g1, &g2)?;
    let letters = letter_symbols(g1.terminals());
    let nt = |prefix: &str, g: &CnfGrammar, i: usize| format!("{prefix}_{}", g.nonterminals()[i]);

    let mut vars: Vec<String> = letters.clone();
    vars.extend((0..g1.nonterminals().len()).map(|i| nt("g1", &g1, i)));
    vars.extend((0..g2.nonterminals().len()).map(|i| nt("g2", &g2, i)));

    let mut hyps = Vec::new();
    for l in &letters {
        hyps.push(format!("(< (* {l} {eps_n}) 1)"));
        hyps.push(format!("(< (* (- {l}) {eps_n}) 1)"));
    }
    let p = g1.size().max(g2.size()).max(1) as u64;
    if p >= 2 {
        for v in &vars[letters.len()..] {
            hyps.push(format!("(< (* {v} {}) 1)", p * p - 1));
            hyps.push(format!("(< (* (- {v}) {}) 1)", p * p - 1));
        }
    }
    for (prefix, g) in [("g1", &g1), ("g2", &g2)] {
        let sys = build_gf_system(g);
        for (c, eq) in sys.equations.iter().enumerate() {
            let mut terms: Vec<String> = eq
                .products
                .iter()
                .map(|&(d, e)| format!("(* {} {})", nt(prefix, g, d), nt(prefix, g, e)))
                .collect();
            terms.extend(eq.letters.iter().map(|&a| letters[a].clone()));
            hyps.push(format!("(= {} {})", nt(prefix, g, c), smt_sum(terms)));
        }
    }
    let side = |prefix: &str, g: &CnfGrammar| {
        let s = nt(prefix, g, g.start());
        if g.generates_empty_word() {
            format!("(+ {s} 1)")
        } else {
            s
        }
    };
    let goal = format!("(= {} {})", side("g1", &g1), side("g2", &g2));

    let mut out = String::new();
    out.push_str("; commutative-image equality: unsat <=> images are equal\n");
    out.push_str(&format!("; epsilon = 1/{eps_n}\n"));
    for (sym, name) in letters.iter().zip(g1.terminals()) {
        if sym != name {
            out.push_str(&format!("; letter {sym} = {name:?}\n"));
        }
    }
    out.push_str("(set-logic NRA)\n");
    let binders: Vec<String> = vars.iter().map(|v| format!("({v} Real)")).collect();
    out.push_str(&format!("(assert (not (forall ({})\n", binders.join(" ")));
    out.push_str("  (=> (and\n");
    for h in &hyps {
        out.push_str(&format!("        {h}\n"));
    }
    out.push_str("      )\n");
    out.push_str(&format!("      {goal}))))\n"));
    out.push_str("(check-sat)\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::to_cnf;
    use crate::grammar::parse_grammar;

    fn cnf(text: &str) -> CnfGrammar {
        to_cnf(&parse_grammar(text).unwrap()).unwrap()
    }

    const LEFT: &str = "S1 -> A1 B1 | a ; A1 -> a ; B1 -> b";
    const RIGHT: &str = "S2 -> B2 A2 | a ; A2 -> a ; B2 -> b";

    #[test]
    fn system_shape() {
        let sys = build_gf_system(&cnf(LEFT));
        assert_eq!(sys.to_string(), "S1 = A1·B1 + a\nA1 = a\nB1 = b\n");
        assert_eq!(build_gf_system(&cnf("S -> a")).to_string(), "S = a\n");
    }

    #[test]
    fn epsilon_values() {
        let eps = convergence_epsilon(&cnf(LEFT), &cnf(RIGHT)).unwrap();
        assert_eq!(eps, BigRational::new(1.into(), 32.into()));
        let one = convergence_epsilon(&cnf("S -> a"), &cnf("T -> a")).unwrap();
        assert_eq!(one, BigRational::one());
    }

    #[test]
    fn fixed_point_finite_language() {
        let sys = build_gf_system(&cnf(LEFT));
        let x = Rational64::new(1, 64);
        let fp = eval_fixed_point(&sys, &EvalPoint(vec![x, x]), 1e-15, 100).unwrap();
        let expect = 1.0 / 64.0 + 1.0 / 4096.0;
        assert!((fp.values[sys.start] - expect).abs() < 1e-15);
        let zero =
            eval_fixed_point(&sys, &EvalPoint(vec![Rational64::zero(); 2]), 1e-15, 10).unwrap();
        assert!(zero.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn divergence_reports_not_converged() {
        // S = S·S + a has no real solution for a > 1/4.
        let sys = build_gf_system(&cnf("S -> S S | a"));
        let err = eval_fixed_point(&sys, &EvalPoint(vec![Rational64::new(1, 2)]), 1e-12, 10_000);
        assert!(matches!(err, Err(CommError::NotConverged { .. })));
        let err = eval_fixed_point(&sys, &EvalPoint(vec![]), 1e-12, 10);
        assert!(matches!(err, Err(CommError::PointArity { .. })));
    }

    #[test]
    fn finite_language_coefficients() {
        let g = cnf("S -> a b | b a | b b a | c c d e | b a b");
        let coeffs = parikh_coefficients(&g, 5);
        let rendered: Vec<(String, u32)> = coeffs
            .iter()
            .map(|(v, c)| (v.render(g.terminals()), c.try_into().unwrap()))
            .collect();
        let mut rendered = rendered;
        rendered.sort();
        assert_eq!(
            rendered,
            [
                ("ab".to_string(), 2),
                ("ab^2".to_string(), 2),
                ("c^2de".to_string(), 1)
            ]
        );
    }

    #[test]
    fn numeric_verdicts() {
        let opts = NumericOptions {
            samples: 20,
            ..NumericOptions::default()
        };
        assert!(matches!(
            comm_equal_numeric(&cnf(LEFT), &cnf(RIGHT), &opts).unwrap(),
            CommVerdict::PointwiseEqual { .. }
        ));
        assert!(matches!(
            comm_equal_numeric(&cnf("S -> a"), &cnf("S -> a a"), &opts).unwrap(),
            CommVerdict::Distinguished { sample: 0, .. }
        ));
        assert_eq!(
            subset_equivalence(&cnf("S -> a"), &cnf("S -> a | a a"), &opts).unwrap(),
            SubsetVerdict::NotEqual
        );
        assert_eq!(
            subset_equivalence(&cnf(LEFT), &cnf(LEFT), &opts).unwrap(),
            SubsetVerdict::Equal
        );
    }

    #[test]
    fn smt_letter_names() {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        assert_eq!(letter_symbols(&s(&["a", "b"])), s(&["a", "b"]));
        assert_eq!(letter_symbols(&s(&["a", "("])), s(&["a", "x_1"]));
        assert_eq!(letter_symbols(&s(&["and"])), s(&["x_0"]));
        // A collision between a kept name and a generated one falls back.
        assert_eq!(letter_symbols(&s(&["x_1", "("])), s(&["x_0", "x_1"]));
    }
}
