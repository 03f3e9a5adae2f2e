use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use serde::Serialize;
use ueq_core::comm::{
    comm_equal_numeric, convergence_epsilon, parikh_coefficients, CommVerdict, NumericOptions,
};
use ueq_core::matrix::{
    bounded_difference_applicability, d_similarity_test, BoundedDifferenceReport, SimilarityParams,
    SimilarityVerdict,
};
use ueq_core::oracle::{
    check_unambiguous_upto, count_words_by_length, cyk_parse_count, first_difference,
};
use ueq_core::{align, CnfGrammar};

use crate::{CliError, LoadedGrammar, EXIT_DIFFERENT, EXIT_EQUAL, EXIT_PROMISE_VIOLATED};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOptions {
    pub max_len: usize,
    pub degree: usize,
    pub dim: usize,
    pub trials: usize,
    pub prime: u64,
    pub seed: u64,
    pub samples: usize,
    /// Longest slice searched for ambiguous words.
    pub audit_len: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            max_len: 14,
            degree: 8,
            dim: 3,
            trials: 8,
            prime: 2_147_483_647,
            seed: 0,
            samples: 100,
            audit_len: 10,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
    pub cnf_size: usize,
    pub generates_empty_word: bool,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Inputs {
    pub first: InputFile,
    pub second: InputFile,
    pub alphabet: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PromiseAudit {
    pub max_len: usize,
    /// A word with two or more parse trees in the first grammar.
    pub first: Option<String>,
    pub second: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub word: String,
    pub in_first: bool,
    pub in_second: bool,
    pub derivations_first: String,
    pub derivations_second: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct FirstDifference {
    pub max_len: usize,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SliceCounts {
    pub max_len: usize,
    pub first: Vec<String>,
    pub second: Vec<String>,
    pub first_mismatch: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoefficientMismatch {
    pub monomial: String,
    pub first: String,
    pub second: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParikhExact {
    pub degree: usize,
    pub equal: bool,
    pub first_mismatch: Option<CoefficientMismatch>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MatrixSlice {
    pub dim: usize,
    pub prime: u64,
    pub trials: usize,
    pub max_len: usize,
    pub seed: u64,
    pub outcome: Result<SimilarityVerdict, String>,
    pub bounded_difference: Result<BoundedDifferenceReport, String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CommNumeric {
    pub epsilon: Option<String>,
    pub samples: usize,
    pub seed: u64,
    pub outcome: Result<CommVerdict, String>,
}

#[derive(Debug, Clone, Serialize)]
pub enum Evidence {
    /// Replayable with a membership check in each grammar.
    Word {
        word: String,
        in_first: bool,
        in_second: bool,
    },
    /// Replayable by recomputing slice signatures for trial `trial`.
    SliceMismatch {
        n: usize,
        trial: usize,
        seed: u64,
        dim: usize,
        prime: u64,
    },
    CountMismatch {
        n: usize,
    },
    CoefficientMismatch {
        monomial: String,
    },
}

#[derive(Debug, Clone, Serialize)]
pub enum Overall {
    ProvenDifferent(Evidence),
    ConsistentWithEqual {
        max_len: usize,
        degree: usize,
        dim: usize,
        trials: usize,
        prime: u64,
        samples: usize,
    },
    PromiseViolated {
        grammar: String,
        word: String,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub inputs: Inputs,
    pub promise_audit: PromiseAudit,
    pub first_difference: FirstDifference,
    pub slice_counts: SliceCounts,
    pub parikh_exact: ParikhExact,
    pub matrix_slice: MatrixSlice,
    pub comm_numeric: CommNumeric,
    pub smt_emitted: Option<String>,
    pub notes: Vec<String>,
    pub overall: Overall,
}

impl EquivalenceReport {
    pub fn exit_code(&self) -> i32 {
        match self.overall {
            Overall::ProvenDifferent(_) => EXIT_DIFFERENT,
            Overall::ConsistentWithEqual { .. } => EXIT_EQUAL,
            Overall::PromiseViolated { .. } => EXIT_PROMISE_VIOLATED,
        }
    }
}

fn input_file(g: &LoadedGrammar) -> InputFile {
    InputFile {
        path: g.path.display().to_string(),
        sha256: g.sha256.clone(),
        cnf_size: g.cnf.size(),
        generates_empty_word: g.cnf.generates_empty_word(),
        diagnostics: g.diagnostics.clone(),
    }
}

fn parikh_stage(g1: &CnfGrammar, g2: &CnfGrammar, degree: usize) -> ParikhExact {
    let (c1, c2) = (
        parikh_coefficients(g1, degree),
        parikh_coefficients(g2, degree),
    );
    let keys: BTreeSet<_> = c1.keys().chain(c2.keys()).collect();
    // Lowest total degree first, then the map order.
    let mismatch = keys
        .into_iter()
        .filter(|v| c1.get(*v) != c2.get(*v))
        .min_by_key(|v| (v.degree(), (*v).clone()))
        .map(|v| CoefficientMismatch {
            monomial: v.render(g1.terminals()),
            first: c1
                .get(v)
                .map(|c| c.to_string())
                .unwrap_or_else(|| "0".into()),
            second: c2
                .get(v)
                .map(|c| c.to_string())
                .unwrap_or_else(|| "0".into()),
        });
    // The ε coefficient lives in the flags, not the map.
    let eps_equal = g1.generates_empty_word() == g2.generates_empty_word();
    let first_mismatch = mismatch.or_else(|| {
        (!eps_equal).then(|| CoefficientMismatch {
            monomial: "1".into(),
            first: (g1.generates_empty_word() as u8).to_string(),
            second: (g2.generates_empty_word() as u8).to_string(),
        })
    });
    ParikhExact {
        degree,
        equal: first_mismatch.is_none(),
        first_mismatch,
    }
}

/// Runs every stage and assembles the report. All stages run even after a
/// difference is found.
pub fn check(
    first: &LoadedGrammar,
    second: &LoadedGrammar,
    opts: &CheckOptions,
) -> Result<EquivalenceReport, CliError> {
    let (g1, g2) = align(&first.cnf, &second.cnf)?;
    let alphabet = g1.terminals().to_vec();
    let render = |w: &ueq_core::Word| w.render(&alphabet);

    let audit_len = opts.audit_len.min(opts.max_len);
    let promise_audit = PromiseAudit {
        max_len: audit_len,
        first: check_unambiguous_upto(&g1, audit_len).map(|w| render(&w)),
        second: check_unambiguous_upto(&g2, audit_len).map(|w| render(&w)),
    };

    let witness = first_difference(&g1, &g2, opts.max_len)
        .expect("aligned grammars share the alphabet")
        .map(|d| Witness {
            word: render(&d.word),
            in_first: d.in_first,
            in_second: d.in_second,
            derivations_first: cyk_parse_count(&g1, &d.word).expect("aligned").to_string(),
            derivations_second: cyk_parse_count(&g2, &d.word).expect("aligned").to_string(),
        });

    let (n1, n2) = (
        count_words_by_length(&g1, opts.max_len),
        count_words_by_length(&g2, opts.max_len),
    );
    let slice_counts = SliceCounts {
        max_len: opts.max_len,
        first_mismatch: (0..=opts.max_len).find(|&n| n1[n] != n2[n]),
        first: n1.iter().map(|c| c.to_string()).collect(),
        second: n2.iter().map(|c| c.to_string()).collect(),
    };

    let parikh_exact = parikh_stage(&g1, &g2, opts.degree);

    let params = SimilarityParams {
        dim: opts.dim,
        max_len: opts.max_len,
        trials: opts.trials,
        prime: opts.prime,
        seed: opts.seed,
    };
    let matrix_slice = MatrixSlice {
        dim: opts.dim,
        prime: opts.prime,
        trials: opts.trials,
        max_len: opts.max_len,
        seed: opts.seed,
        outcome: d_similarity_test(&g1, &g2, &params).map_err(|e| e.to_string()),
        bounded_difference: bounded_difference_applicability(
            &g1,
            &g2,
            opts.dim,
            opts.max_len.min(opts.audit_len),
        )
        .map_err(|e| e.to_string()),
    };

    let numeric = NumericOptions {
        samples: opts.samples,
        seed: opts.seed,
        degree: opts.degree,
        ..NumericOptions::default()
    };
    let comm_numeric = CommNumeric {
        epsilon: convergence_epsilon(&g1, &g2).ok().map(|e| e.to_string()),
        samples: opts.samples,
        seed: opts.seed,
        outcome: comm_equal_numeric(&g1, &g2, &numeric).map_err(|e| e.to_string()),
    };

    let overall = if let Some(word) = &promise_audit.first {
        Overall::PromiseViolated {
            grammar: first.path.display().to_string(),
            word: word.clone(),
        }
    } else if let Some(word) = &promise_audit.second {
        Overall::PromiseViolated {
            grammar: second.path.display().to_string(),
            word: word.clone(),
        }
    } else if let Some(w) = &witness {
        Overall::ProvenDifferent(Evidence::Word {
            word: w.word.clone(),
            in_first: w.in_first,
            in_second: w.in_second,
        })
    } else if let Ok(SimilarityVerdict::DistinguishedAtLength { n, trial, seed }) =
        matrix_slice.outcome
    {
        Overall::ProvenDifferent(Evidence::SliceMismatch {
            n,
            trial,
            seed,
            dim: opts.dim,
            prime: opts.prime,
        })
    } else if let Some(n) = slice_counts.first_mismatch {
        Overall::ProvenDifferent(Evidence::CountMismatch { n })
    } else if let Some(m) = &parikh_exact.first_mismatch {
        Overall::ProvenDifferent(Evidence::CoefficientMismatch {
            monomial: m.monomial.clone(),
        })
    } else {
        Overall::ConsistentWithEqual {
            max_len: opts.max_len,
            degree: opts.degree,
            dim: opts.dim,
            trials: opts.trials,
            prime: opts.prime,
            samples: opts.samples,
        }
    };

    let mut report = EquivalenceReport {
        inputs: Inputs {
            first: input_file(first),
            second: input_file(second),
            alphabet,
        },
        promise_audit,
        first_difference: FirstDifference {
            max_len: opts.max_len,
            witness,
        },
        slice_counts,
        parikh_exact,
        matrix_slice,
        comm_numeric,
        smt_emitted: None,
        notes: Vec::new(),
        overall,
    };
    report.notes = notes(&report);
    Ok(report)
}

fn notes(r: &EquivalenceReport) -> Vec<String> {
    let mut out = Vec::new();
    let different = matches!(r.overall, Overall::ProvenDifferent(_));
    let comm_equal = matches!(
        r.comm_numeric.outcome,
        Ok(CommVerdict::PointwiseEqual { .. })
    );
    if different && r.parikh_exact.equal && comm_equal {
        out.push(format!(
            "the languages differ although their commutative images agree (exactly to degree {}, numerically at {} points)",
            r.parikh_exact.degree, r.comm_numeric.samples
        ));
    }
    if let (Some(w), Ok(SimilarityVerdict::IndistinguishableUpTo { dim, .. })) =
        (&r.first_difference.witness, &r.matrix_slice.outcome)
    {
        let mut note = format!(
            "{dim}x{dim} matrix substitution did not separate the languages, yet `{}` is in only one of them; \
             the slice difference may be a polynomial identity for {dim}x{dim} matrices",
            w.word
        );
        if let Ok(report) = &r.matrix_slice.bounded_difference {
            if let Some(n) = report.first_violation {
                let size = report
                    .differing_slices
                    .iter()
                    .find(|(m, _)| *m == n)
                    .map_or(0, |(_, s)| *s);
                let _ = write!(
                    note,
                    " (slice {n} differs in {size} words, at or above the {} that {dim}x{dim} matrices are guaranteed to detect)",
                    report.bound
                );
            }
        }
        out.push(note);
    }
    if matches!(r.overall, Overall::PromiseViolated { .. }) {
        out.push(
            "an input is ambiguous; commutative-image and matrix verdicts assume unambiguity"
                .into(),
        );
    }
    out
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

impl fmt::Display for EquivalenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = &self.inputs;
        writeln!(
            f,
            "first:  {} (sha256 {}, CNF size {})",
            i.first.path, i.first.sha256, i.first.cnf_size
        )?;
        writeln!(
            f,
            "second: {} (sha256 {}, CNF size {})",
            i.second.path, i.second.sha256, i.second.cnf_size
        )?;
        writeln!(f, "alphabet: {}", i.alphabet.join(" "))?;
        for d in i.first.diagnostics.iter().chain(&i.second.diagnostics) {
            writeln!(f, "  {d}")?;
        }
        writeln!(f)?;

        let a = &self.promise_audit;
        write!(f, "promise audit (up to length {}): ", a.max_len)?;
        match (&a.first, &a.second) {
            (None, None) => writeln!(f, "no ambiguous word found")?,
            (x, y) => {
                if let Some(w) = x {
                    write!(f, "first grammar ambiguous on `{w}` ")?;
                }
                if let Some(w) = y {
                    write!(f, "second grammar ambiguous on `{w}`")?;
                }
                writeln!(f)?;
            }
        }

        match &self.first_difference.witness {
            Some(w) => writeln!(
                f,
                "first difference: `{}` (in first: {}, in second: {})",
                w.word,
                yes_no(w.in_first),
                yes_no(w.in_second)
            )?,
            None => writeln!(
                f,
                "first difference: none up to length {}",
                self.first_difference.max_len
            )?,
        }

        match self.slice_counts.first_mismatch {
            Some(n) => writeln!(
                f,
                "slice sizes: differ at length {n} ({} vs {})",
                self.slice_counts.first[n], self.slice_counts.second[n]
            )?,
            None => writeln!(
                f,
                "slice sizes: equal up to length {}",
                self.slice_counts.max_len
            )?,
        }

        match &self.parikh_exact.first_mismatch {
            Some(m) => writeln!(
                f,
                "Parikh coefficients: differ at {} ({} vs {})",
                m.monomial, m.first, m.second
            )?,
            None => writeln!(
                f,
                "Parikh coefficients: equal up to degree {}",
                self.parikh_exact.degree
            )?,
        }

        let m = &self.matrix_slice;
        write!(
            f,
            "matrix substitution ({}x{}, p = {}, {} trials): ",
            m.dim, m.dim, m.prime, m.trials
        )?;
        match &m.outcome {
            Ok(SimilarityVerdict::DistinguishedAtLength { n, trial, seed }) => writeln!(
                f,
                "distinguished at length {n} (trial {trial}, seed {seed})"
            )?,
            Ok(SimilarityVerdict::IndistinguishableUpTo { max_len, .. }) => {
                writeln!(f, "indistinguishable up to length {max_len}")?
            }
            Err(e) => writeln!(f, "error: {e}")?,
        }

        let c = &self.comm_numeric;
        write!(
            f,
            "commutative images (ε = {}, {} samples): ",
            c.epsilon.as_deref().unwrap_or("n/a"),
            c.samples
        )?;
        match &c.outcome {
            Ok(CommVerdict::PointwiseEqual { max_delta, .. }) => {
                writeln!(f, "equal at every sample (max |Δ| = {max_delta:e})")?
            }
            Ok(CommVerdict::Distinguished {
                sample,
                point,
                delta,
                threshold,
            }) => writeln!(
                f,
                "differ at sample {sample}, point {point} (|Δ| = {delta:e} > {threshold:e})"
            )?,
            Err(e) => writeln!(f, "error: {e}")?,
        }

        if let Some(path) = &self.smt_emitted {
            writeln!(f, "SMT sentence written to {path}")?;
        }
        for note in &self.notes {
            writeln!(f, "note: {note}")?;
        }
        writeln!(f)?;
        match &self.overall {
            Overall::ProvenDifferent(e) => {
                let why = match e {
                    Evidence::Word { word, .. } => format!("word `{word}`"),
                    Evidence::SliceMismatch { n, trial, .. } => {
                        format!("slice signatures differ at length {n} in trial {trial}")
                    }
                    Evidence::CountMismatch { n } => format!("slice sizes differ at length {n}"),
                    Evidence::CoefficientMismatch { monomial } => format!("coefficient of {monomial} differs"),
                };
                writeln!(f, "verdict: DIFFERENT ({why})")
            }
            Overall::ConsistentWithEqual {
                max_len,
                degree,
                dim,
                trials,
                prime,
                samples,
            } => writeln!(
                f,
                "verdict: CONSISTENT WITH EQUAL (max length {max_len}, degree {degree}, {dim}x{dim} matrices, {trials} trials mod {prime}, {samples} samples)"
            ),
            Overall::PromiseViolated { grammar, word } => {
                writeln!(f, "verdict: PROMISE VIOLATED ({grammar} is ambiguous on `{word}`)")
            }
        }
    }
}
