//! Equivalence testing for unambiguous context-free grammars.
//!
//! Three strategies of increasing power, plus the algebra that explains
//! where the strongest one breaks down:
//!
//! - [`oracle`]: brute force. Derivation counting, lexicographic slice
//!   enumeration, and the first difference of two languages.
//! - [`comm`]: commutative images. The polynomial system of a CNF grammar,
//!   numeric evaluation near the origin, exact Parikh coefficients, and an
//!   SMT-LIB sentence for external solvers.
//! - [`matrix`]: matrix substitution over prime fields. Slice signatures and
//!   randomized d-similarity testing.
//! - [`nc`]: noncommutative polynomials and matrix identities. Languages
//!   whose slice difference is an identity (such as the standard polynomial)
//!   cannot be told apart by substitution of small matrices.
//!
//! Grammars are read with [`grammar::parse_grammar`] and normalized with
//! [`cnf::to_cnf`]; all analyses work on [`cnf::CnfGrammar`].

pub mod cnf;
pub mod comm;
pub mod grammar;
pub mod matrix;
pub mod nc;
pub mod oracle;

pub use cnf::{align, grammar_size, joint_alphabet, to_cnf, to_cnf_or_empty, CnfError, CnfGrammar};
pub use grammar::{parse_grammar, validate, Diagnostics, Grammar, ParseError};
pub use oracle::{DifferenceWitness, Word};
