//! Brute-force ground truth: membership with derivation counting, slice
//! enumeration in lexicographic order, first differences, and a bounded
//! ambiguity audit.
//!
//! Words are sequences of terminal indices into the grammar's alphabet, so
//! the lexicographic order is the alphabet's declaration order.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::rc::Rc;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cnf::{align, AlphabetError, CnfGrammar};

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Word(pub Vec<usize>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    /// Parses a word over `alphabet`. Letters are split on whitespace when
    /// the text contains any, otherwise per character.
    pub fn parse(text: &str, alphabet: &[String]) -> Result<Word, OracleError> {
        let text = text.trim();
        if text.is_empty() || text == "eps" || text == "ε" {
            return Ok(Word::empty());
        }
        let pieces: Vec<String> = if text.contains(char::is_whitespace) {
            text.split_whitespace().map(str::to_string).collect()
        } else {
            text.chars().map(String::from).collect()
        };
        pieces
            .into_iter()
            .map(|p| {
                alphabet
                    .iter()
                    .position(|a| *a == p)
                    .ok_or(OracleError::ForeignSymbol(p))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Word)
    }

    /// Renders over `alphabet`: letters are concatenated when every letter
    /// name is a single character, space-separated otherwise.
    pub fn render(&self, alphabet: &[String]) -> String {
        if self.0.is_empty() {
            return "ε".to_string();
        }
        let compact = alphabet.iter().all(|a| a.chars().count() == 1);
        let names = self.0.iter().map(|&i| alphabet[i].as_str());
        if compact {
            names.collect()
        } else {
            names.collect::<Vec<_>>().join(" ")
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifferenceWitness {
    pub word: Word,
    pub in_first: bool,
    pub in_second: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("symbol `{0}` is not in the alphabet")]
    ForeignSymbol(String),
    #[error("letter index {0} is outside the alphabet")]
    ForeignIndex(usize),
    #[error(transparent)]
    Alphabet(#[from] AlphabetError),
}

/// Number of distinct parse trees of `w` in `g`. The empty word counts as
/// one derivation exactly when the grammar's ε flag is set.
pub fn cyk_parse_count(g: &CnfGrammar, w: &Word) -> Result<BigUint, OracleError> {
    if let Some(&bad) = w.0.iter().find(|&&a| a >= g.terminals().len()) {
        return Err(OracleError::ForeignIndex(bad));
    }
    let n = w.len();
    if n == 0 {
        return Ok(if g.generates_empty_word() {
            BigUint::one()
        } else {
            BigUint::zero()
        });
    }
    let nts = g.nonterminals().len();
    // table[len-1][i][C] = parse trees of w[i..i+len] rooted at C
    let mut table: Vec<Vec<Vec<BigUint>>> = Vec::with_capacity(n);
    let mut first = vec![vec![BigUint::zero(); nts]; n];
    for (i, &a) in w.0.iter().enumerate() {
        for r in g.terminal_rules() {
            if r.terminal == a {
                first[i][r.lhs] += 1u32;
            }
        }
    }
    table.push(first);
    for len in 2..=n {
        let mut row = vec![vec![BigUint::zero(); nts]; n - len + 1];
        for (i, cell) in row.iter_mut().enumerate() {
            for split in 1..len {
                let left = &table[split - 1][i];
                let right = &table[len - split - 1][i + split];
                for r in g.binary_rules() {
                    if !left[r.left].is_zero() && !right[r.right].is_zero() {
                        cell[r.lhs] += &left[r.left] * &right[r.right];
                    }
                }
            }
        }
        table.push(row);
    }
    Ok(table[n - 1][0][g.start()].clone())
}

pub fn is_member(g: &CnfGrammar, w: &Word) -> Result<bool, OracleError> {
    Ok(!cyk_parse_count(g, w)?.is_zero())
}

/// `nonempty[m][C]`: nonterminal `C` derives some word of length `m`.
fn nonempty_by_length(g: &CnfGrammar, max_len: usize) -> Vec<Vec<bool>> {
    let nts = g.nonterminals().len();
    let mut ne = vec![vec![false; nts]; max_len + 1];
    if max_len >= 1 {
        for r in g.terminal_rules() {
            ne[1][r.lhs] = true;
        }
    }
    for m in 2..=max_len {
        for r in g.binary_rules() {
            if ne[m][r.lhs] {
                continue;
            }
            if (1..m).any(|k| ne[k][r.left] && ne[m - k][r.right]) {
                ne[m][r.lhs] = true;
            }
        }
    }
    ne
}

/// Decides whether `g` has a word of a fixed length that starts with a given
/// prefix. Positions past the prefix act as wildcards.
struct PrefixOracle<'g> {
    g: &'g CnfGrammar,
    n: usize,
    nonempty: Vec<Vec<bool>>,
}

impl<'g> PrefixOracle<'g> {
    fn new(g: &'g CnfGrammar, n: usize) -> Self {
        PrefixOracle {
            g,
            n,
            nonempty: nonempty_by_length(g, n),
        }
    }

    fn slice_nonempty(&self) -> bool {
        self.nonempty[self.n][self.g.start()]
    }

    fn viable(&self, prefix: &[usize]) -> bool {
        let p = prefix.len();
        if p == 0 {
            return self.slice_nonempty();
        }
        let n = self.n;
        let nts = self.g.nonterminals().len();
        // comp[i][m][C] for i < p: C derives a length-m word agreeing with
        // the prefix on positions i..min(i+m, p).
        let mut comp: Vec<Vec<Vec<bool>>> = vec![Vec::new(); p];
        for i in (0..p).rev() {
            let mut rows = vec![vec![false; nts]; n - i + 1];
            for r in self.g.terminal_rules() {
                if r.terminal == prefix[i] {
                    rows[1][r.lhs] = true;
                }
            }
            for m in 2..=n - i {
                for r in self.g.binary_rules() {
                    if rows[m][r.lhs] {
                        continue;
                    }
                    let hit = (1..m).any(|k| {
                        rows[k][r.left] && {
                            let j = i + k;
                            if j >= p {
                                self.nonempty[m - k][r.right]
                            } else {
                                comp[j][m - k][r.right]
                            }
                        }
                    });
                    if hit {
                        rows[m][r.lhs] = true;
                    }
                }
            }
            comp[i] = rows;
        }
        comp[0][n][self.g.start()]
    }
}

/// Lazy lexicographic enumeration of one slice of a CNF language.
pub struct SliceIter<'g> {
    oracle: PrefixOracle<'g>,
    alphabet: usize,
    prefix: Vec<usize>,
    started: bool,
    done: bool,
}

impl<'g> SliceIter<'g> {
    pub fn new(g: &'g CnfGrammar, n: usize) -> Self {
        let oracle = PrefixOracle::new(g, n);
        let done = n == 0 || g.terminals().is_empty() || !oracle.slice_nonempty();
        SliceIter {
            oracle,
            alphabet: g.terminals().len(),
            prefix: Vec::with_capacity(n),
            started: false,
            done,
        }
    }

    /// Extends the current prefix with the smallest viable letters, trying
    /// letters from `from` at the current depth. Returns false when the
    /// prefix has to be abandoned.
    fn descend(&mut self, mut from: usize) -> bool {
        while self.prefix.len() < self.oracle.n {
            let mut found = false;
            for a in from..self.alphabet {
                self.prefix.push(a);
                if self.oracle.viable(&self.prefix) {
                    found = true;
                    break;
                }
                self.prefix.pop();
            }
            if !found {
                return false;
            }
            from = 0;
        }
        true
    }
}

impl Iterator for SliceIter<'_> {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            if self.descend(0) {
                return Some(Word(self.prefix.clone()));
            }
            self.done = true;
            return None;
        }
        // Backtrack: bump the deepest position that still has a larger
        // viable letter, then fill the rest minimally.
        loop {
            let Some(last) = self.prefix.pop() else {
                self.done = true;
                return None;
            };
            if self.descend(last + 1) {
                return Some(Word(self.prefix.clone()));
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slice {
    pub words: Vec<Word>,
    pub truncated: bool,
}

/// All words of length `n` in lexicographic order, cut at `limit`.
pub fn enumerate_slice(g: &CnfGrammar, n: usize, limit: Option<usize>) -> Slice {
    if n == 0 {
        let words = if g.generates_empty_word() && limit != Some(0) {
            vec![Word::empty()]
        } else {
            Vec::new()
        };
        return Slice {
            truncated: g.generates_empty_word() && limit == Some(0),
            words,
        };
    }
    let counts = derivation_counts(g, n);
    if limit.is_none() && counts[n][g.start()] <= BigUint::from(GENERATE_LIMIT) {
        let words = Generator::new(g, counts)
            .words(g.start(), n)
            .iter()
            .cloned()
            .map(Word)
            .collect();
        return Slice {
            words,
            truncated: false,
        };
    }
    let mut iter = SliceIter::new(g, n);
    let mut words = Vec::new();
    let cap = limit.unwrap_or(usize::MAX);
    while words.len() < cap {
        match iter.next() {
            Some(w) => words.push(w),
            None => {
                return Slice {
                    words,
                    truncated: false,
                }
            }
        }
    }
    let truncated = iter.next().is_some();
    Slice { words, truncated }
}

/// Slices with at most this many derivations are built bottom-up instead of
/// through prefix queries.
const GENERATE_LIMIT: u32 = 1 << 18;

type WordSet = Rc<BTreeSet<Vec<usize>>>;

struct Generator<'g> {
    g: &'g CnfGrammar,
    counts: Vec<Vec<BigUint>>,
    binary_of: Vec<Vec<usize>>,
    letters_of: Vec<Vec<usize>>,
    memo: HashMap<(usize, usize), WordSet>,
}

impl<'g> Generator<'g> {
    fn new(g: &'g CnfGrammar, counts: Vec<Vec<BigUint>>) -> Self {
        let mut binary_of = vec![Vec::new(); g.nonterminals().len()];
        for (i, r) in g.binary_rules().iter().enumerate() {
            binary_of[r.lhs].push(i);
        }
        let mut letters_of = vec![Vec::new(); g.nonterminals().len()];
        for r in g.terminal_rules() {
            letters_of[r.lhs].push(r.terminal);
        }
        Generator {
            g,
            counts,
            binary_of,
            letters_of,
            memo: HashMap::new(),
        }
    }

    /// The distinct length-`m` words of `nt`, memoized per `(nt, m)`.
    fn words(&mut self, nt: usize, m: usize) -> WordSet {
        if let Some(set) = self.memo.get(&(nt, m)) {
            return set.clone();
        }
        let g = self.g;
        let mut out = BTreeSet::new();
        if m == 1 {
            out.extend(self.letters_of[nt].iter().map(|&a| vec![a]));
        } else {
            for i in 0..self.binary_of[nt].len() {
                let r = g.binary_rules()[self.binary_of[nt][i]];
                for k in 1..m {
                    if self.counts[k][r.left].is_zero() || self.counts[m - k][r.right].is_zero() {
                        continue;
                    }
                    let left = self.words(r.left, k);
                    let right = self.words(r.right, m - k);
                    for u in left.iter() {
                        for v in right.iter() {
                            let mut w = u.clone();
                            w.extend_from_slice(v);
                            out.insert(w);
                        }
                    }
                }
            }
        }
        let set = Rc::new(out);
        self.memo.insert((nt, m), set.clone());
        set
    }
}

/// The shortest, then lexicographically least, word in the symmetric
/// difference of the two languages with length at most `max_len`.
pub fn first_difference(
    g1: &CnfGrammar,
    g2: &CnfGrammar,
    max_len: usize,
) -> Result<Option<DifferenceWitness>, OracleError> {
    let (g1, g2) = align(g1, g2)?;
    if g1.generates_empty_word() != g2.generates_empty_word() {
        return Ok(Some(DifferenceWitness {
            word: Word::empty(),
            in_first: g1.generates_empty_word(),
            in_second: g2.generates_empty_word(),
        }));
    }
    for n in 1..=max_len {
        if let Some(w) = first_difference_at(&g1, &g2, n) {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

/// Merges the two sorted slice enumerations and stops at the first word
/// present on one side only.
fn first_difference_at(g1: &CnfGrammar, g2: &CnfGrammar, n: usize) -> Option<DifferenceWitness> {
    let mut it1 = SliceIter::new(g1, n).peekable();
    let mut it2 = SliceIter::new(g2, n).peekable();
    loop {
        let order = match (it1.peek(), it2.peek()) {
            (None, None) => return None,
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (Some(a), Some(b)) => a.cmp(b),
        };
        match order {
            Ordering::Equal => {
                it1.next();
                it2.next();
            }
            Ordering::Less => {
                return Some(DifferenceWitness {
                    word: it1.next().expect("peeked"),
                    in_first: true,
                    in_second: false,
                })
            }
            Ordering::Greater => {
                return Some(DifferenceWitness {
                    word: it2.next().expect("peeked"),
                    in_first: false,
                    in_second: true,
                })
            }
        }
    }
}

/// Shortest-then-least word of length at most `max_len` with more than one
/// parse tree. `None` does not certify unambiguity.
pub fn check_unambiguous_upto(g: &CnfGrammar, max_len: usize) -> Option<Word> {
    let totals = count_words_by_length(g, max_len);
    for n in 1..=max_len {
        // A slice with at most one derivation in total cannot hold an
        // ambiguous word.
        if totals[n] <= BigUint::one() {
            continue;
        }
        for w in enumerate_slice(g, n, None).words {
            let c = cyk_parse_count(g, &w).expect("enumerated words are over the alphabet");
            if c > BigUint::one() {
                return Some(w);
            }
        }
    }
    None
}

/// Entry `n` is the number of derivations of length-`n` words from the
/// start symbol, which is the slice size for unambiguous grammars. Entry 0
/// reflects the ε flag.
pub fn count_words_by_length(g: &CnfGrammar, max_len: usize) -> Vec<BigUint> {
    let per_nt = derivation_counts(g, max_len);
    let mut out: Vec<BigUint> = per_nt.iter().map(|row| row[g.start()].clone()).collect();
    out[0] = if g.generates_empty_word() {
        BigUint::one()
    } else {
        BigUint::zero()
    };
    out
}

/// `counts[n][C]` = derivations of length-`n` words from `C` (n >= 1).
pub(crate) fn derivation_counts(g: &CnfGrammar, max_len: usize) -> Vec<Vec<BigUint>> {
    let nts = g.nonterminals().len();
    let mut counts = vec![vec![BigUint::zero(); nts]; max_len + 1];
    if max_len >= 1 {
        for r in g.terminal_rules() {
            counts[1][r.lhs] += 1u32;
        }
    }
    for n in 2..=max_len {
        let mut row = vec![BigUint::zero(); nts];
        for r in g.binary_rules() {
            for k in 1..n {
                let (l, rr) = (&counts[k][r.left], &counts[n - k][r.right]);
                if !l.is_zero() && !rr.is_zero() {
                    row[r.lhs] += l * rr;
                }
            }
        }
        counts[n] = row;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::to_cnf;
    use crate::grammar::parse_grammar;

    fn cnf(text: &str) -> CnfGrammar {
        to_cnf(&parse_grammar(text).unwrap()).unwrap()
    }

    fn words(g: &CnfGrammar, n: usize) -> Vec<String> {
        enumerate_slice(g, n, None)
            .words
            .iter()
            .map(|w| w.render(g.terminals()))
            .collect()
    }

    #[test]
    fn parse_count_example_pair() {
        let g = cnf("S1 -> A1 B1 | a ; A1 -> a ; B1 -> b");
        let ab = Word::parse("ab", g.terminals()).unwrap();
        assert_eq!(cyk_parse_count(&g, &ab).unwrap(), BigUint::one());
        let ba = Word::parse("ba", g.terminals()).unwrap();
        assert!(cyk_parse_count(&g, &ba).unwrap().is_zero());
        assert_eq!(
            Word::parse("ac", g.terminals()),
            Err(OracleError::ForeignSymbol("c".into()))
        );
        assert_eq!(
            cyk_parse_count(&g, &Word(vec![7])),
            Err(OracleError::ForeignIndex(7))
        );
    }

    #[test]
    fn ambiguous_counts() {
        let g = cnf("S -> S S | a");
        let w = Word::parse("aaa", g.terminals()).unwrap();
        assert_eq!(cyk_parse_count(&g, &w).unwrap(), BigUint::from(2u32));
        // Shortest ambiguous word is aaa; aa has a single tree.
        assert_eq!(check_unambiguous_upto(&g, 3), Some(w));
        assert_eq!(check_unambiguous_upto(&g, 2), None);
    }

    #[test]
    fn dyck_slices() {
        let g = cnf("S -> a S b S | eps");
        assert_eq!(words(&g, 4), ["aabb", "abab"]);
        assert_eq!(words(&g, 3), Vec::<String>::new());
        assert_eq!(words(&g, 6).len(), 5);
        assert_eq!(check_unambiguous_upto(&g, 8), None);
        let counts: Vec<u32> = count_words_by_length(&g, 10)
            .iter()
            .map(|c| c.try_into().unwrap())
            .collect();
        assert_eq!(counts, [1, 0, 1, 0, 2, 0, 5, 0, 14, 0, 42]);
    }

    #[test]
    fn example_pair_difference() {
        let g1 = cnf("S1 -> A1 B1 | a ; A1 -> a ; B1 -> b");
        let g2 = cnf("S2 -> B2 A2 | a ; A2 -> a ; B2 -> b");
        assert_eq!(words(&g2, 2), ["ba"]);
        let w = first_difference(&g1, &g2, 5).unwrap().unwrap();
        assert_eq!(w.word.render(g1.terminals()), "ab");
        assert!(w.in_first && !w.in_second);
        assert_eq!(first_difference(&g1, &g1, 10).unwrap(), None);
        assert_eq!(check_unambiguous_upto(&g1, 8), None);
        let c: Vec<u32> = count_words_by_length(&g1, 4)
            .iter()
            .map(|c| c.try_into().unwrap())
            .collect();
        assert_eq!(c, [0, 1, 1, 0, 0]);
    }

    #[test]
    fn epsilon_difference_first() {
        let g1 = cnf("S -> a | eps");
        let g2 = cnf("S -> a");
        let w = first_difference(&g1, &g2, 3).unwrap().unwrap();
        assert!(w.word.is_empty());
        assert!(w.in_first);
    }

    #[test]
    fn truncation_flag() {
        let g = cnf("S -> a S | b S | a | b");
        let s = enumerate_slice(&g, 3, Some(3));
        assert_eq!(s.words.len(), 3);
        assert!(s.truncated);
        let s = enumerate_slice(&g, 3, Some(8));
        assert!(!s.truncated);
        assert_eq!(s.words.len(), 8);
    }

    #[test]
    fn incompatible_alphabets_error() {
        let g1 = cnf("S -> a");
        let g2 = cnf("S -> b");
        assert!(matches!(
            first_difference(&g1, &g2, 2),
            Err(OracleError::Alphabet(_))
        ));
    }
}
