//! Chomsky normal form.
//!
//! [`to_cnf`] runs the textbook pipeline: lift terminals out of long
//! right-hand sides, binarize, drop ε-rules, drop unit rules, then remove
//! unproductive and unreachable nonterminals. Whether the grammar derives the
//! empty word is recorded in a flag; the CNF body itself never derives ε.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{Grammar, Rule, Symbol};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BinaryRule {
    pub lhs: usize,
    pub left: usize,
    pub right: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TerminalRule {
    pub lhs: usize,
    pub terminal: usize,
}

/// A grammar in Chomsky normal form, stored by symbol index.
///
/// Nonterminal indices refer to `nonterminals`, terminal indices to
/// `terminals`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnfGrammar {
    terminals: Vec<String>,
    nonterminals: Vec<String>,
    binary_rules: Vec<BinaryRule>,
    terminal_rules: Vec<TerminalRule>,
    start: usize,
    generates_empty_word: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CnfError {
    #[error("the grammar generates the empty language")]
    EmptyLanguage,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlphabetError {
    #[error("alphabets are incompatible: letters {0:?} are not shared in a consistent order")]
    Incompatible(Vec<String>),
    #[error("letter `{0}` is not in the target alphabet")]
    MissingLetter(String),
}

impl CnfGrammar {
    /// A CNF grammar for the empty language (or `{ε}` when `generates_empty_word`).
    pub fn empty(
        terminals: Vec<String>,
        start: impl Into<String>,
        generates_empty_word: bool,
    ) -> Self {
        CnfGrammar {
            terminals,
            nonterminals: vec![start.into()],
            binary_rules: Vec::new(),
            terminal_rules: Vec::new(),
            start: 0,
            generates_empty_word,
        }
    }

    pub fn terminals(&self) -> &[String] {
        &self.terminals
    }

    pub fn nonterminals(&self) -> &[String] {
        &self.nonterminals
    }

    pub fn binary_rules(&self) -> &[BinaryRule] {
        &self.binary_rules
    }

    pub fn terminal_rules(&self) -> &[TerminalRule] {
        &self.terminal_rules
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn start_name(&self) -> &str {
        &self.nonterminals[self.start]
    }

    pub fn generates_empty_word(&self) -> bool {
        self.generates_empty_word
    }

    /// Number of rules, `|binary| + |terminal|`.
    pub fn size(&self) -> usize {
        self.binary_rules.len() + self.terminal_rules.len()
    }

    pub fn is_body_empty(&self) -> bool {
        self.size() == 0
    }

    pub fn terminal_index(&self, name: &str) -> Option<usize> {
        self.terminals.iter().position(|t| t == name)
    }

    pub fn nonterminal_index(&self, name: &str) -> Option<usize> {
        self.nonterminals.iter().position(|t| t == name)
    }

    /// Re-indexes terminals onto `alphabet`, which must contain every letter
    /// of this grammar.
    pub fn over_alphabet(&self, alphabet: &[String]) -> Result<CnfGrammar, AlphabetError> {
        let pos: HashMap<&str, usize> = alphabet
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let map: Vec<usize> = self
            .terminals
            .iter()
            .map(|t| {
                pos.get(t.as_str())
                    .copied()
                    .ok_or_else(|| AlphabetError::MissingLetter(t.clone()))
            })
            .collect::<Result<_, _>>()?;
        Ok(CnfGrammar {
            terminals: alphabet.to_vec(),
            nonterminals: self.nonterminals.clone(),
            binary_rules: self.binary_rules.clone(),
            terminal_rules: self
                .terminal_rules
                .iter()
                .map(|r| TerminalRule {
                    lhs: r.lhs,
                    terminal: map[r.terminal],
                })
                .collect(),
            start: self.start,
            generates_empty_word: self.generates_empty_word,
        })
    }

    /// Renames every nonterminal through `f`. Names must stay distinct.
    pub fn rename_nonterminals(&self, f: impl Fn(&str) -> String) -> CnfGrammar {
        let mut out = self.clone();
        out.nonterminals = self.nonterminals.iter().map(|n| f(n)).collect();
        out
    }

    /// Converts back to a general [`Grammar`]. When the empty word is
    /// generated a fresh start `S_0 -> eps | S` is added so the language
    /// survives a round trip through the text format.
    pub fn to_grammar(&self) -> Grammar {
        let nt = |i: usize| Symbol::Nonterminal(self.nonterminals[i].clone());
        let mut rules = Vec::new();
        let mut nonterminals = self.nonterminals.clone();
        let mut start = self.start_name().to_string();
        if self.generates_empty_word && self.is_body_empty() {
            rules.push(Rule::new(start.clone(), vec![]));
        } else if self.generates_empty_word {
            let taken: HashSet<String> = nonterminals.iter().cloned().collect();
            let fresh = fresh_name(&start, &taken, 0);
            rules.push(Rule::new(fresh.clone(), vec![]));
            rules.push(Rule::new(fresh.clone(), vec![nt(self.start)]));
            nonterminals.insert(0, fresh.clone());
            start = fresh;
        }
        // Group rules by lhs in nonterminal order.
        for lhs in 0..self.nonterminals.len() {
            for r in self.binary_rules.iter().filter(|r| r.lhs == lhs) {
                rules.push(Rule::new(
                    self.nonterminals[lhs].clone(),
                    vec![nt(r.left), nt(r.right)],
                ));
            }
            for r in self.terminal_rules.iter().filter(|r| r.lhs == lhs) {
                rules.push(Rule::new(
                    self.nonterminals[lhs].clone(),
                    vec![Symbol::Terminal(self.terminals[r.terminal].clone())],
                ));
            }
        }
        Grammar::new(self.terminals.clone(), nonterminals, rules, start)
            .expect("CNF grammar is well formed")
    }

    /// Start symbol's rules followed by the rest, one per line.
    pub fn render(&self) -> String {
        self.to_grammar().render()
    }
}

/// The letter order for a two-grammar operation: the first grammar's
/// alphabet when it contains the second's, otherwise the second's when it
/// contains the first's and agrees with the first's order.
pub fn joint_alphabet(first: &[String], second: &[String]) -> Result<Vec<String>, AlphabetError> {
    let set1: HashSet<&String> = first.iter().collect();
    let set2: HashSet<&String> = second.iter().collect();
    if set2.is_subset(&set1) {
        return Ok(first.to_vec());
    }
    if set1.is_subset(&set2) {
        let restricted: Vec<&String> = second.iter().filter(|s| set1.contains(s)).collect();
        if restricted.iter().copied().eq(first.iter()) {
            return Ok(second.to_vec());
        }
        return Err(AlphabetError::Incompatible(first.to_vec()));
    }
    let mut extra: Vec<String> = second
        .iter()
        .filter(|s| !set1.contains(s))
        .cloned()
        .collect();
    extra.extend(first.iter().filter(|s| !set2.contains(s)).cloned());
    Err(AlphabetError::Incompatible(extra))
}

/// Re-indexes both grammars onto their joint alphabet.
pub fn align(g1: &CnfGrammar, g2: &CnfGrammar) -> Result<(CnfGrammar, CnfGrammar), AlphabetError> {
    let alphabet = joint_alphabet(&g1.terminals, &g2.terminals)?;
    Ok((g1.over_alphabet(&alphabet)?, g2.over_alphabet(&alphabet)?))
}

fn fresh_name(base: &str, taken: &HashSet<String>, from: usize) -> String {
    (from..)
        .map(|k| format!("{base}_{k}"))
        .find(|c| !taken.contains(c))
        .expect("unbounded search")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Sym {
    T(usize),
    N(usize),
}

struct Builder {
    names: Vec<String>,
    taken: HashSet<String>,
    /// Names are never released, so the smallest free suffix per base only
    /// grows.
    next_suffix: HashMap<String, usize>,
    rules: Vec<(usize, Vec<Sym>)>,
}

impl Builder {
    fn fresh(&mut self, base: &str) -> usize {
        let from = self.next_suffix.get(base).copied().unwrap_or(1);
        let name = fresh_name(base, &self.taken, from);
        let k: usize = name[base.len() + 1..].parse().expect("numeric suffix");
        self.next_suffix.insert(base.to_string(), k + 1);
        self.taken.insert(name.clone());
        self.names.push(name);
        self.names.len() - 1
    }
}

/// Converts a grammar to Chomsky normal form.
///
/// Returns [`CnfError::EmptyLanguage`] when `L(g)` is empty; use
/// [`to_cnf_or_empty`] to get an empty-body grammar instead.
pub fn to_cnf(g: &Grammar) -> Result<CnfGrammar, CnfError> {
    let t_index: HashMap<&str, usize> = g
        .terminals()
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let n_index: HashMap<&str, usize> = g
        .nonterminals()
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let mut b = Builder {
        names: g.nonterminals().to_vec(),
        taken: g.nonterminals().iter().cloned().collect(),
        next_suffix: HashMap::new(),
        rules: g
            .rules()
            .iter()
            .map(|r| {
                let rhs = r
                    .rhs
                    .iter()
                    .map(|s| match s {
                        Symbol::Terminal(t) => Sym::T(t_index[t.as_str()]),
                        Symbol::Nonterminal(n) => Sym::N(n_index[n.as_str()]),
                    })
                    .collect();
                (n_index[r.lhs.as_str()], rhs)
            })
            .collect(),
    };
    let start = n_index[g.start()];

    // Terminal lifting: one fresh nonterminal per terminal that occurs in a
    // right-hand side of length >= 2, created in order of first need.
    let mut lifted: HashMap<usize, usize> = HashMap::new();
    let mut lift_rules = Vec::new();
    for ri in 0..b.rules.len() {
        if b.rules[ri].1.len() < 2 {
            continue;
        }
        for si in 0..b.rules[ri].1.len() {
            if let Sym::T(t) = b.rules[ri].1[si] {
                let n = match lifted.get(&t) {
                    Some(&n) => n,
                    None => {
                        let n = b.fresh("T");
                        lifted.insert(t, n);
                        lift_rules.push((n, vec![Sym::T(t)]));
                        n
                    }
                };
                b.rules[ri].1[si] = Sym::N(n);
            }
        }
    }
    b.rules.extend(lift_rules);

    // Binarization: C -> X1 X2 ... Xk becomes C -> X1 C_1, C_1 -> X2 C_2, ...
    let mut binarized = Vec::with_capacity(b.rules.len());
    for (lhs, rhs) in std::mem::take(&mut b.rules) {
        if rhs.len() <= 2 {
            binarized.push((lhs, rhs));
            continue;
        }
        let base = b.names[lhs].clone();
        let mut cur = lhs;
        for k in 0..rhs.len() - 2 {
            let next = b.fresh(&base);
            binarized.push((cur, vec![rhs[k], Sym::N(next)]));
            cur = next;
        }
        binarized.push((cur, rhs[rhs.len() - 2..].to_vec()));
    }
    let rules = binarized;
    let count = b.names.len();

    // ε-elimination.
    let mut nullable = vec![false; count];
    loop {
        let mut changed = false;
        for (lhs, rhs) in &rules {
            if !nullable[*lhs] && rhs.iter().all(|s| matches!(s, Sym::N(n) if nullable[*n])) {
                nullable[*lhs] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let is_nullable = |s: &Sym| matches!(s, Sym::N(n) if nullable[*n]);
    let mut no_eps: Vec<(usize, Vec<Sym>)> = Vec::new();
    let mut seen: HashSet<(usize, Vec<Sym>)> = HashSet::new();
    let mut push = |rule: (usize, Vec<Sym>), out: &mut Vec<(usize, Vec<Sym>)>| {
        if !rule.1.is_empty() && seen.insert(rule.clone()) {
            out.push(rule);
        }
    };
    for (lhs, rhs) in &rules {
        push((*lhs, rhs.clone()), &mut no_eps);
        if rhs.len() == 2 {
            if is_nullable(&rhs[0]) {
                push((*lhs, vec![rhs[1]]), &mut no_eps);
            }
            if is_nullable(&rhs[1]) {
                push((*lhs, vec![rhs[0]]), &mut no_eps);
            }
        }
    }
    let generates_empty_word = nullable[start];

    // Unit-rule elimination via the unit closure of each nonterminal.
    let mut unit_succ: Vec<Vec<usize>> = vec![Vec::new(); count];
    for (lhs, rhs) in &no_eps {
        if let [Sym::N(n)] = rhs.as_slice() {
            unit_succ[*lhs].push(*n);
        }
    }
    let mut by_lhs: Vec<Vec<&Vec<Sym>>> = vec![Vec::new(); count];
    for (lhs, rhs) in &no_eps {
        if !matches!(rhs.as_slice(), [Sym::N(_)]) {
            by_lhs[*lhs].push(rhs);
        }
    }
    let mut final_rules: Vec<(usize, Vec<Sym>)> = Vec::new();
    let mut seen: HashSet<(usize, Vec<Sym>)> = HashSet::new();
    for c in 0..count {
        let mut closure = vec![c];
        let mut visited: HashSet<usize> = HashSet::from([c]);
        let mut queue = VecDeque::from([c]);
        while let Some(x) = queue.pop_front() {
            for &y in &unit_succ[x] {
                if visited.insert(y) {
                    closure.push(y);
                    queue.push_back(y);
                }
            }
        }
        for d in closure {
            for rhs in &by_lhs[d] {
                let rule = (c, (*rhs).clone());
                if seen.insert(rule.clone()) {
                    final_rules.push(rule);
                }
            }
        }
    }

    // Remove unproductive, then unreachable nonterminals.
    let mut productive = vec![false; count];
    loop {
        let mut changed = false;
        for (lhs, rhs) in &final_rules {
            if !productive[*lhs]
                && rhs.iter().all(|s| match s {
                    Sym::T(_) => true,
                    Sym::N(n) => productive[*n],
                })
            {
                productive[*lhs] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    final_rules.retain(|(lhs, rhs)| {
        productive[*lhs]
            && rhs
                .iter()
                .all(|s| matches!(s, Sym::T(_)) || matches!(s, Sym::N(n) if productive[*n]))
    });
    if !productive[start] {
        if generates_empty_word {
            return Ok(CnfGrammar::empty(
                g.terminals().to_vec(),
                g.start().to_string(),
                true,
            ));
        }
        return Err(CnfError::EmptyLanguage);
    }
    let mut rules_of: Vec<Vec<usize>> = vec![Vec::new(); count];
    for (i, (lhs, _)) in final_rules.iter().enumerate() {
        rules_of[*lhs].push(i);
    }
    let mut reachable = vec![false; count];
    reachable[start] = true;
    let mut stack = vec![start];
    while let Some(x) = stack.pop() {
        for &ri in &rules_of[x] {
            for s in &final_rules[ri].1 {
                if let Sym::N(n) = s {
                    if !reachable[*n] {
                        reachable[*n] = true;
                        stack.push(*n);
                    }
                }
            }
        }
    }
    final_rules.retain(|(lhs, _)| reachable[*lhs]);

    let mut remap = vec![usize::MAX; count];
    let mut nonterminals = Vec::new();
    for i in 0..count {
        if reachable[i] && productive[i] {
            remap[i] = nonterminals.len();
            nonterminals.push(b.names[i].clone());
        }
    }
    let mut binary_rules = Vec::new();
    let mut terminal_rules = Vec::new();
    for (lhs, rhs) in final_rules {
        match rhs.as_slice() {
            [Sym::T(t)] => terminal_rules.push(TerminalRule {
                lhs: remap[lhs],
                terminal: *t,
            }),
            [Sym::N(l), Sym::N(r)] => binary_rules.push(BinaryRule {
                lhs: remap[lhs],
                left: remap[*l],
                right: remap[*r],
            }),
            other => unreachable!("non-CNF rule survived conversion: {other:?}"),
        }
    }
    Ok(CnfGrammar {
        terminals: g.terminals().to_vec(),
        nonterminals,
        binary_rules,
        terminal_rules,
        start: remap[start],
        generates_empty_word,
    })
}

/// Like [`to_cnf`] but maps the empty language to an empty-body grammar.
pub fn to_cnf_or_empty(g: &Grammar) -> CnfGrammar {
    match to_cnf(g) {
        Ok(c) => c,
        Err(CnfError::EmptyLanguage) => {
            CnfGrammar::empty(g.terminals().to_vec(), g.start().to_string(), false)
        }
    }
}

/// Number of rules of a CNF grammar.
pub fn grammar_size(g: &CnfGrammar) -> usize {
    g.size()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::parse_grammar;

    fn cnf(text: &str) -> CnfGrammar {
        to_cnf(&parse_grammar(text).unwrap()).unwrap()
    }

    #[test]
    fn already_cnf_is_unchanged() {
        let g = cnf("S1 -> A1 B1 | a ; A1 -> a ; B1 -> b");
        assert_eq!(grammar_size(&g), 4);
        assert_eq!(g.nonterminals(), ["S1", "A1", "B1"]);
        assert_eq!(
            g.binary_rules(),
            [BinaryRule {
                lhs: 0,
                left: 1,
                right: 2
            }]
        );
        let mut tr: Vec<_> = g
            .terminal_rules()
            .iter()
            .map(|r| (r.lhs, r.terminal))
            .collect();
        tr.sort();
        assert_eq!(tr, [(0, 0), (1, 0), (2, 1)]);
        assert!(!g.generates_empty_word());
    }

    #[test]
    fn epsilon_only() {
        let g = cnf("S -> eps");
        assert!(g.is_body_empty());
        assert!(g.generates_empty_word());
        assert_eq!(grammar_size(&g), 0);
    }

    #[test]
    fn empty_language_is_reported() {
        let g = parse_grammar("S -> S").unwrap();
        assert_eq!(to_cnf(&g), Err(CnfError::EmptyLanguage));
        let e = to_cnf_or_empty(&g);
        assert!(e.is_body_empty() && !e.generates_empty_word());
    }

    #[test]
    fn dyck_conversion_is_deterministic() {
        let text = "S -> a S b S | eps";
        let a = cnf(text);
        let b = cnf(text);
        assert_eq!(a, b);
        assert!(a.generates_empty_word());
        // Fresh names are the original name plus a numeric suffix.
        assert!(a.nonterminals().iter().any(|n| n == "S_1"));
        assert!(a.nonterminals().iter().any(|n| n == "T_1"));
        assert_eq!(grammar_size(&a), 8);
    }

    #[test]
    fn fresh_names_avoid_collisions() {
        let g = cnf("S -> a b c | S_1\nS_1 -> c");
        let mut names = g.nonterminals().to_vec();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), g.nonterminals().len());
    }

    #[test]
    fn render_preserves_language_flag() {
        let g = cnf("S -> a S b S | eps");
        let again = to_cnf(&parse_grammar(&g.render()).unwrap()).unwrap();
        assert!(again.generates_empty_word());
        assert_eq!(
            crate::oracle::count_words_by_length(&again, 10),
            crate::oracle::count_words_by_length(&g, 10)
        );
    }

    #[test]
    fn joint_alphabet_rules() {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        assert_eq!(
            joint_alphabet(&s(&["a", "b"]), &s(&["b"])).unwrap(),
            s(&["a", "b"])
        );
        assert_eq!(
            joint_alphabet(&s(&["a", "b"]), &s(&["b", "a"])).unwrap(),
            s(&["a", "b"])
        );
        assert_eq!(
            joint_alphabet(&s(&["b"]), &s(&["a", "b", "c"])).unwrap(),
            s(&["a", "b", "c"])
        );
        assert!(joint_alphabet(&s(&["b", "a"]), &s(&["a", "b", "c"])).is_err());
        assert!(joint_alphabet(&s(&["a"]), &s(&["b"])).is_err());
    }
}
