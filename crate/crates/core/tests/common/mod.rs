//! Independent oracles and generators shared by the integration tests.
//! Nothing here calls into the library's own parsing or counting code.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, HashSet};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use ueq_core::grammar::{Rule, Symbol};
use ueq_core::matrix::{LetterAssignment, MatrixRing};
use ueq_core::{CnfGrammar, Grammar};

pub fn t(s: &str) -> Symbol {
    Symbol::Terminal(s.to_string())
}

pub fn n(s: &str) -> Symbol {
    Symbol::Nonterminal(s.to_string())
}

pub fn names(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

/// Membership in a general grammar by saturating the set of facts
/// `(symbol, i, j)` = "symbol derives w[i..j]". Handles ε-rules and unit
/// cycles because it is a least fixed point, not a recursion.
pub fn member_general(g: &Grammar, w: &[&str]) -> bool {
    let len = w.len();
    let mut facts: HashSet<(String, usize, usize)> = HashSet::new();
    loop {
        let before = facts.len();
        for rule in g.rules() {
            for i in 0..=len {
                // Reachable end positions after matching a prefix of the rhs.
                let mut ends: BTreeSet<usize> = BTreeSet::from([i]);
                for sym in &rule.rhs {
                    let mut next = BTreeSet::new();
                    for &k in &ends {
                        match sym {
                            Symbol::Terminal(a) => {
                                if k < len && w[k] == a {
                                    next.insert(k + 1);
                                }
                            }
                            Symbol::Nonterminal(b) => {
                                for j in k..=len {
                                    if facts.contains(&(b.clone(), k, j)) {
                                        next.insert(j);
                                    }
                                }
                            }
                        }
                    }
                    ends = next;
                }
                for j in ends {
                    facts.insert((rule.lhs.clone(), i, j));
                }
            }
        }
        if facts.len() == before {
            break;
        }
    }
    facts.contains(&(g.start().to_string(), 0, len))
}

/// Number of parse trees of `w` from nonterminal `nt` in a CNF grammar,
/// by plain recursion over split points.
pub fn naive_tree_count(g: &CnfGrammar, nt: usize, w: &[usize]) -> BigUint {
    if w.is_empty() {
        return BigUint::zero();
    }
    let mut total = BigUint::zero();
    if w.len() == 1 {
        for r in g.terminal_rules() {
            if r.lhs == nt && r.terminal == w[0] {
                total += 1u32;
            }
        }
        return total;
    }
    for r in g.binary_rules() {
        if r.lhs != nt {
            continue;
        }
        for k in 1..w.len() {
            let left = naive_tree_count(g, r.left, &w[..k]);
            if left.is_zero() {
                continue;
            }
            total += left * naive_tree_count(g, r.right, &w[k..]);
        }
    }
    total
}

/// All words of length `n` over `k` letters, in lexicographic order.
pub fn all_words(k: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        let mut next = Vec::with_capacity(out.len() * k);
        for w in &out {
            for a in 0..k {
                let mut v = w.clone();
                v.push(a);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// `Σ_{|w| = n} trees(w)·M(w)` computed word by word.
pub fn brute_slice_sum<M: MatrixRing>(g: &CnfGrammar, asg: &LetterAssignment<M>, n: usize) -> M {
    let unit = asg.word_product(&[]);
    let mut acc = unit.zero_like();
    for w in all_words(g.terminals().len(), n) {
        let c = naive_tree_count(g, g.start(), &w);
        if c.is_zero() {
            continue;
        }
        let prod = asg.word_product(&w);
        acc = acc.add(&prod.scale(&BigInt::from(c)));
    }
    acc
}

/// Words of the language up to `max_len`, found by exhaustive membership.
pub fn language_upto(g: &Grammar, max_len: usize) -> Vec<Vec<String>> {
    let letters: Vec<&str> = g.terminals().iter().map(String::as_str).collect();
    let mut out = Vec::new();
    for len in 0..=max_len {
        for w in all_words(letters.len(), len) {
            let word: Vec<&str> = w.iter().map(|&i| letters[i]).collect();
            if member_general(g, &word) {
                out.push(word.iter().map(|s| s.to_string()).collect());
            }
        }
    }
    out
}

/// A grammar listing `words` as alternatives of `S`.
pub fn finite_grammar(alphabet: &[String], words: &BTreeSet<Vec<usize>>) -> Grammar {
    let rules = words
        .iter()
        .map(|w| {
            Rule::new(
                "S",
                w.iter()
                    .map(|&a| Symbol::Terminal(alphabet[a].clone()))
                    .collect(),
            )
        })
        .collect();
    Grammar::new(alphabet.to_vec(), vec!["S".into()], rules, "S").unwrap()
}

/// A random grammar with up to `max_rules` rules over nonterminals `S, A, B`
/// and the given letters. Right-hand sides have length 0 to 3.
pub fn random_grammar<R: Rng>(rng: &mut R, letters: &[&str], max_rules: usize) -> Grammar {
    let nts = ["S", "A", "B"];
    let count = rng.gen_range(1..=max_rules);
    let mut rules = Vec::new();
    for i in 0..count {
        let lhs = if i == 0 {
            "S"
        } else {
            *nts.choose(rng).unwrap()
        };
        let len = rng.gen_range(0..=3);
        let rhs = (0..len)
            .map(|_| {
                if rng.gen_bool(0.55) {
                    t(letters.choose(rng).unwrap())
                } else {
                    n(nts.choose(rng).unwrap())
                }
            })
            .collect();
        rules.push(Rule::new(lhs, rhs));
    }
    Grammar::new(names(letters), names(&nts), rules, "S").unwrap()
}

/// A random CNF-shaped grammar with at most `max_rules` rules.
pub fn random_cnf_shaped<R: Rng>(rng: &mut R, letters: &[&str], max_rules: usize) -> Grammar {
    let nts = ["S", "A", "B", "C"];
    let count = rng.gen_range(2..=max_rules);
    let mut rules = vec![Rule::new("S", vec![t(letters.choose(rng).unwrap())])];
    for _ in 1..count {
        let lhs = *nts.choose(rng).unwrap();
        if rng.gen_bool(0.4) {
            rules.push(Rule::new(lhs, vec![t(letters.choose(rng).unwrap())]));
        } else {
            rules.push(Rule::new(
                lhs,
                vec![n(nts.choose(rng).unwrap()), n(nts.choose(rng).unwrap())],
            ));
        }
    }
    Grammar::new(names(letters), names(&nts), rules, "S").unwrap()
}

/// Catalan numbers `C_0..=C_n` from the product formula.
pub fn catalan(n: usize) -> Vec<BigUint> {
    let mut out = vec![BigUint::one()];
    for k in 0..n {
        let next = &out[k] * BigUint::from(2 * (2 * k + 1)) / BigUint::from(k + 2);
        out.push(next);
    }
    out
}

/// Parikh vectors of a finite word list, counted.
pub fn parikh_of(words: &[Vec<usize>], k: usize) -> HashMap<Vec<u32>, u64> {
    let mut out = HashMap::new();
    for w in words {
        let mut v = vec![0u32; k];
        for &a in w {
            v[a] += 1;
        }
        *out.entry(v).or_insert(0) += 1;
    }
    out
}
