//! Transcript for `ueq identity-demo`.

use std::fmt::Write as _;

use ueq_core::matrix::{
    bounded_difference_applicability, d_similarity_test, SimilarityParams, SimilarityVerdict,
};
use ueq_core::nc::{
    is_identity_probabilistic, razmyslov_identity, standard_identity,
    standard_identity_language_pair, IdentityVerdict, NcPoly,
};
use ueq_core::oracle::first_difference;
use ueq_core::to_cnf;

use crate::CliError;

pub const MAX_DEMO_DIM: usize = 4;
const PRIME: u64 = 2_147_483_647;

fn verdict_line(p: &NcPoly, d: usize, trials: usize, seed: u64) -> Result<String, CliError> {
    let v = is_identity_probabilistic(p, d, trials, PRIME, seed)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(match v {
        IdentityVerdict::ConsistentWithIdentity { trials } => {
            format!("zero on all {trials} random {d}x{d} assignments mod {PRIME}")
        }
        IdentityVerdict::RefutedWithWitness { trial, .. } => {
            format!("nonzero on {d}x{d} matrices (random trial {trial})")
        }
    })
}

fn similarity_line(v: &SimilarityVerdict, d: usize) -> String {
    match v {
        SimilarityVerdict::DistinguishedAtLength { n, trial, .. } => {
            format!("{d}x{d}: distinguished at length {n} (trial {trial})")
        }
        SimilarityVerdict::IndistinguishableUpTo {
            max_len, trials, ..
        } => {
            format!("{d}x{d}: indistinguishable up to length {max_len} over {trials} trials")
        }
    }
}

/// Runs the demo for `d×d` matrices. Fails for `d = 0` or `d > 4`.
pub fn identity_demo(d: usize, seed: u64) -> Result<String, CliError> {
    if d == 0 || d > MAX_DEMO_DIM {
        return Err(CliError::Usage(format!(
            "--dim must be between 1 and {MAX_DEMO_DIM}; the standard polynomial has (2d)! terms"
        )));
    }
    // s_8 has 40320 terms, so fewer random evaluations there.
    let trials = if d <= 2 { 100 } else { 20 };
    let mut out = String::new();
    let s = standard_identity(d).map_err(|e| CliError::Usage(e.to_string()))?;
    let positive = s
        .terms()
        .filter(|(_, c)| c.sign() == num_bigint::Sign::Plus)
        .count();
    let _ = writeln!(out, "standard polynomial s_{}:", 2 * d);
    if d == 1 {
        let _ = writeln!(out, "  s_2 = {s}");
    }
    let _ = writeln!(
        out,
        "  {} monomials ({positive} with +1, {} with -1), degree {}",
        s.monomial_count(),
        s.monomial_count() - positive,
        s.degree()
    );
    let _ = writeln!(
        out,
        "  at least 2^{} = {} monomials, as any identity for {d}x{d} matrices needs: {}",
        d - 1,
        1u64 << (d - 1),
        if s.meets_lower_bound(d) { "yes" } else { "no" }
    );
    let _ = writeln!(out, "  {}", verdict_line(&s, d, trials, seed)?);
    let _ = writeln!(out, "  {}", verdict_line(&s, d + 1, trials, seed)?);

    let r = razmyslov_identity(d).map_err(|e| CliError::Usage(e.to_string()))?;
    let _ = writeln!(out, "\ncommutator polynomial of order {d}:");
    let _ = writeln!(
        out,
        "  {} monomials, degree {}",
        r.monomial_count(),
        r.degree()
    );
    let _ = writeln!(out, "  {}", verdict_line(&r, d, trials, seed)?);

    let (l1, l2) =
        standard_identity_language_pair(d).map_err(|e| CliError::Usage(e.to_string()))?;
    let (g1, g2) = (
        to_cnf(&l1).expect("nonempty"),
        to_cnf(&l2).expect("nonempty"),
    );
    let n = 2 * d;
    let _ = writeln!(
        out,
        "\npermutation languages over x1..x{n}: {} even and {} odd words of length {n}",
        l1.rules().len(),
        l2.rules().len()
    );
    let diff = first_difference(&g1, &g2, n).expect("same alphabet");
    if let Some(w) = diff {
        let _ = writeln!(
            out,
            "  first difference: {} (in {} language only)",
            w.word.render(g1.terminals()),
            if w.in_first { "even" } else { "odd" }
        );
    }
    for dim in [d, d + 1] {
        let params = SimilarityParams {
            dim,
            max_len: n,
            trials: 8,
            prime: PRIME,
            seed,
        };
        let v = d_similarity_test(&g1, &g2, &params).map_err(|e| CliError::Usage(e.to_string()))?;
        let _ = writeln!(out, "  matrix substitution {}", similarity_line(&v, dim));
    }
    let report = bounded_difference_applicability(&g1, &g2, d, n)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let sizes: Vec<String> = report
        .differing_slices
        .iter()
        .map(|(len, size)| format!("length {len}: {size} words"))
        .collect();
    let _ = writeln!(
        out,
        "  differing slices: {}; bound for {d}x{d} matrices is {} words",
        sizes.join(", "),
        report.bound
    );
    let _ = writeln!(
        out,
        "  small-difference criterion applies: {}",
        if report.applies {
            "yes"
        } else {
            "no, so matrices of this size may miss the difference"
        }
    );
    Ok(out)
}
