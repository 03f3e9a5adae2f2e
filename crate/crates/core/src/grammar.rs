//! Context-free grammar data model, the text format, and validation.
//!
//! The text format is line oriented:
//!
//! ```text
//! # comment
//! S -> a S b S | eps
//! A -> "(" A ")" ; B -> b      # `;` separates rules on one line
//! @start S                     # optional, default is the first lhs
//! @terminals a b               # optional, fixes the alphabet order
//! @nonterminals S A B          # optional, fixes the nonterminal order
//! ```
//!
//! Uppercase-initial tokens are nonterminals, everything else is a terminal.
//! Quoted tokens (`"..."` or `'...'`) are always terminals. `eps` (or `ε`)
//! denotes the empty right-hand side.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A grammar symbol.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Symbol {
    Terminal(String),
    Nonterminal(String),
}

impl Symbol {
    pub fn name(&self) -> &str {
        match self {
            Symbol::Terminal(s) | Symbol::Nonterminal(s) => s,
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, Symbol::Terminal(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rule {
    pub lhs: String,
    pub rhs: Vec<Symbol>,
}

impl Rule {
    pub fn new(lhs: impl Into<String>, rhs: Vec<Symbol>) -> Self {
        Rule {
            lhs: lhs.into(),
            rhs,
        }
    }
}

/// A context-free grammar with ordered terminal and nonterminal sets.
///
/// The order of `terminals` is the letter order used for every
/// lexicographic comparison downstream.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grammar {
    terminals: Vec<String>,
    nonterminals: Vec<String>,
    rules: Vec<Rule>,
    start: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrammarError {
    #[error("start symbol `{0}` is not a nonterminal")]
    UnknownStart(String),
    #[error("symbol `{0}` is used but not declared")]
    UndeclaredSymbol(String),
    #[error("`{0}` is declared both as a terminal and as a nonterminal")]
    NameClash(String),
    #[error("`{0}` is declared twice")]
    DuplicateDeclaration(String),
    #[error("`{0}` is not a valid nonterminal name")]
    InvalidNonterminalName(String),
    #[error("terminal names must be non-empty")]
    EmptyTerminalName,
}

/// Nonterminal names are an uppercase letter followed by letters, digits or `_`.
pub fn is_valid_nonterminal_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_uppercase() => chars.all(|c| c.is_alphanumeric() || c == '_'),
        _ => false,
    }
}

impl Grammar {
    pub fn new(
        terminals: Vec<String>,
        nonterminals: Vec<String>,
        rules: Vec<Rule>,
        start: impl Into<String>,
    ) -> Result<Self, GrammarError> {
        let start = start.into();
        let mut seen_t = HashSet::new();
        for t in &terminals {
            if t.is_empty() {
                return Err(GrammarError::EmptyTerminalName);
            }
            if !seen_t.insert(t.as_str()) {
                return Err(GrammarError::DuplicateDeclaration(t.clone()));
            }
        }
        let mut seen_n = HashSet::new();
        for n in &nonterminals {
            if !is_valid_nonterminal_name(n) {
                return Err(GrammarError::InvalidNonterminalName(n.clone()));
            }
            if seen_t.contains(n.as_str()) {
                return Err(GrammarError::NameClash(n.clone()));
            }
            if !seen_n.insert(n.as_str()) {
                return Err(GrammarError::DuplicateDeclaration(n.clone()));
            }
        }
        if !seen_n.contains(start.as_str()) {
            return Err(GrammarError::UnknownStart(start));
        }
        for rule in &rules {
            if !seen_n.contains(rule.lhs.as_str()) {
                return Err(GrammarError::UndeclaredSymbol(rule.lhs.clone()));
            }
            for sym in &rule.rhs {
                let known = match sym {
                    Symbol::Terminal(t) => seen_t.contains(t.as_str()),
                    Symbol::Nonterminal(n) => seen_n.contains(n.as_str()),
                };
                if !known {
                    return Err(GrammarError::UndeclaredSymbol(sym.name().to_string()));
                }
            }
        }
        Ok(Grammar {
            terminals,
            nonterminals,
            rules,
            start,
        })
    }

    /// Builds a grammar whose symbol sets are collected from the rules in
    /// first-appearance order. The start symbol is the first lhs.
    pub fn from_rules(rules: Vec<Rule>) -> Result<Self, GrammarError> {
        let start = rules
            .first()
            .map(|r| r.lhs.clone())
            .ok_or_else(|| GrammarError::UnknownStart(String::new()))?;
        let mut terminals = Vec::new();
        let mut nonterminals = Vec::new();
        let mut seen = HashSet::new();
        for rule in &rules {
            if seen.insert(Symbol::Nonterminal(rule.lhs.clone())) {
                nonterminals.push(rule.lhs.clone());
            }
            for sym in &rule.rhs {
                if seen.insert(sym.clone()) {
                    match sym {
                        Symbol::Terminal(t) => terminals.push(t.clone()),
                        Symbol::Nonterminal(n) => nonterminals.push(n.clone()),
                    }
                }
            }
        }
        Grammar::new(terminals, nonterminals, rules, start)
    }

    pub fn terminals(&self) -> &[String] {
        &self.terminals
    }

    pub fn nonterminals(&self) -> &[String] {
        &self.nonterminals
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn start(&self) -> &str {
        &self.start
    }

    /// Renders the grammar in the text format. `parse_grammar` inverts this.
    pub fn render(&self) -> String {
        let mut out = String::new();
        if !self.terminals.is_empty() {
            out.push_str("@terminals");
            for t in &self.terminals {
                out.push(' ');
                out.push_str(&render_terminal(t));
            }
            out.push('\n');
        }
        out.push_str("@nonterminals");
        for n in &self.nonterminals {
            out.push(' ');
            out.push_str(n);
        }
        out.push('\n');
        out.push_str(&format!("@start {}\n", self.start));
        let mut i = 0;
        while i < self.rules.len() {
            let lhs = &self.rules[i].lhs;
            out.push_str(lhs);
            out.push_str(" ->");
            let mut first = true;
            while i < self.rules.len() && &self.rules[i].lhs == lhs {
                if !first {
                    out.push_str(" |");
                }
                first = false;
                let rhs = &self.rules[i].rhs;
                if rhs.is_empty() {
                    out.push_str(" eps");
                }
                for sym in rhs {
                    out.push(' ');
                    match sym {
                        Symbol::Terminal(t) => out.push_str(&render_terminal(t)),
                        Symbol::Nonterminal(n) => out.push_str(n),
                    }
                }
                i += 1;
            }
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for Grammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

fn is_bare_char(c: char) -> bool {
    !c.is_whitespace() && !matches!(c, '|' | ';' | '#' | '"' | '\'' | '@')
}

fn render_terminal(t: &str) -> String {
    let first = t.chars().next();
    let bare = t.chars().all(is_bare_char)
        && !t.contains("->")
        && !t.contains('→')
        && !matches!(t, "eps" | "ε")
        && !matches!(first, Some(c) if c.is_uppercase());
    if bare {
        return t.to_string();
    }
    let mut out = String::from("\"");
    for c in t.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

// ─── Parsing ───────────────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("expected a nonterminal on the left-hand side")]
    ExpectedLhs,
    #[error("expected `->`")]
    ExpectedArrow,
    #[error("unexpected `{0}`")]
    Unexpected(String),
    #[error("unterminated quoted terminal")]
    UnterminatedQuote,
    #[error("unknown escape `\\{0}`")]
    UnknownEscape(char),
    #[error("empty quoted terminal")]
    EmptyTerminal,
    #[error("invalid nonterminal name `{0}`")]
    InvalidNonterminal(String),
    #[error("`eps` must be the only symbol of its alternative")]
    MisplacedEpsilon,
    #[error("duplicate start declaration")]
    DuplicateStart,
    #[error("unknown directive `@{0}`")]
    UnknownDirective(String),
    #[error("`{0}` is used both as a terminal and as a nonterminal")]
    NameClash(String),
    #[error("`|` continuation without a preceding rule")]
    DanglingAlternative,
    #[error("grammar has no rules and no start declaration")]
    NoRules,
    #[error("start symbol `{0}` never appears")]
    UnknownStart(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Arrow,
    Bar,
    Semi,
    Newline,
    Bare(String),
    Quoted(String),
    Directive(String),
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn tokenize(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    for (li, raw_line) in text.lines().enumerate() {
        let line = li + 1;
        let chars: Vec<char> = raw_line.chars().collect();
        let mut i = 0;
        let err = |column: usize, kind| ParseError { line, column, kind };
        while i < chars.len() {
            let c = chars[i];
            let column = i + 1;
            if c.is_whitespace() {
                i += 1;
            } else if c == '#' {
                break;
            } else if c == '|' {
                out.push(Spanned {
                    tok: Tok::Bar,
                    line,
                    column,
                });
                i += 1;
            } else if c == ';' {
                out.push(Spanned {
                    tok: Tok::Semi,
                    line,
                    column,
                });
                i += 1;
            } else if c == '→' {
                out.push(Spanned {
                    tok: Tok::Arrow,
                    line,
                    column,
                });
                i += 1;
            } else if c == '-' && chars.get(i + 1) == Some(&'>') {
                out.push(Spanned {
                    tok: Tok::Arrow,
                    line,
                    column,
                });
                i += 2;
            } else if c == '"' || c == '\'' {
                let quote = c;
                i += 1;
                let mut s = String::new();
                loop {
                    match chars.get(i) {
                        None => return Err(err(column, ParseErrorKind::UnterminatedQuote)),
                        Some(&ch) if ch == quote => {
                            i += 1;
                            break;
                        }
                        Some('\\') => {
                            let esc = chars
                                .get(i + 1)
                                .copied()
                                .ok_or_else(|| err(column, ParseErrorKind::UnterminatedQuote))?;
                            s.push(match esc {
                                '\\' => '\\',
                                '"' => '"',
                                '\'' => '\'',
                                'n' => '\n',
                                't' => '\t',
                                'r' => '\r',
                                other => {
                                    return Err(err(i + 1, ParseErrorKind::UnknownEscape(other)))
                                }
                            });
                            i += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                if s.is_empty() {
                    return Err(err(column, ParseErrorKind::EmptyTerminal));
                }
                out.push(Spanned {
                    tok: Tok::Quoted(s),
                    line,
                    column,
                });
            } else if c == '@' {
                i += 1;
                let start = i;
                while i < chars.len() && chars[i].is_alphanumeric() {
                    i += 1;
                }
                let name: String = chars[start..i].iter().collect();
                out.push(Spanned {
                    tok: Tok::Directive(name),
                    line,
                    column,
                });
            } else {
                let start = i;
                while i < chars.len()
                    && is_bare_char(chars[i])
                    && chars[i] != '→'
                    && !(chars[i] == '-' && chars.get(i + 1) == Some(&'>'))
                {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                out.push(Spanned {
                    tok: Tok::Bare(s),
                    line,
                    column,
                });
            }
        }
        out.push(Spanned {
            tok: Tok::Newline,
            line,
            column: chars.len() + 1,
        });
    }
    Ok(out)
}

/// Collects symbols in first-appearance order and checks the terminal and
/// nonterminal name spaces stay disjoint.
#[derive(Default)]
struct SymbolTable {
    terminals: Vec<String>,
    nonterminals: Vec<String>,
    kinds: HashMap<String, bool>,
}

impl SymbolTable {
    fn add(&mut self, sym: &Symbol, line: usize, column: usize) -> Result<(), ParseError> {
        let is_t = sym.is_terminal();
        match self.kinds.get(sym.name()) {
            Some(&k) if k == is_t => Ok(()),
            Some(_) => Err(ParseError {
                line,
                column,
                kind: ParseErrorKind::NameClash(sym.name().to_string()),
            }),
            None => {
                self.kinds.insert(sym.name().to_string(), is_t);
                if is_t {
                    self.terminals.push(sym.name().to_string());
                } else {
                    self.nonterminals.push(sym.name().to_string());
                }
                Ok(())
            }
        }
    }
}

enum Item {
    Eps,
    Sym(Symbol),
}

fn classify(tok: &Spanned) -> Result<Item, ParseError> {
    let err = |kind| ParseError {
        line: tok.line,
        column: tok.column,
        kind,
    };
    match &tok.tok {
        Tok::Quoted(s) => Ok(Item::Sym(Symbol::Terminal(s.clone()))),
        Tok::Bare(s) if s == "eps" || s == "ε" => Ok(Item::Eps),
        Tok::Bare(s) => {
            if s.chars().next().is_some_and(char::is_uppercase) {
                if is_valid_nonterminal_name(s) {
                    Ok(Item::Sym(Symbol::Nonterminal(s.clone())))
                } else {
                    Err(err(ParseErrorKind::InvalidNonterminal(s.clone())))
                }
            } else {
                Ok(Item::Sym(Symbol::Terminal(s.clone())))
            }
        }
        other => Err(err(ParseErrorKind::Unexpected(describe(other)))),
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Arrow => "->".into(),
        Tok::Bar => "|".into(),
        Tok::Semi => ";".into(),
        Tok::Newline => "end of line".into(),
        Tok::Bare(s) | Tok::Quoted(s) => s.clone(),
        Tok::Directive(d) => format!("@{d}"),
    }
}

/// Parses the grammar text format.
pub fn parse_grammar(text: &str) -> Result<Grammar, ParseError> {
    let toks = tokenize(text)?;
    let mut table = SymbolTable::default();
    let mut rules: Vec<Rule> = Vec::new();
    let mut start: Option<(String, usize, usize)> = None;
    let mut i = 0;

    let at_end = |t: &Tok| matches!(t, Tok::Newline | Tok::Semi);

    while i < toks.len() {
        let tok = &toks[i];
        match &tok.tok {
            Tok::Newline | Tok::Semi => {
                i += 1;
            }
            Tok::Directive(name) => {
                i += 1;
                let mut args = Vec::new();
                while i < toks.len() && !at_end(&toks[i].tok) {
                    args.push(&toks[i]);
                    i += 1;
                }
                match name.as_str() {
                    "start" => {
                        if start.is_some() {
                            return Err(ParseError {
                                line: tok.line,
                                column: tok.column,
                                kind: ParseErrorKind::DuplicateStart,
                            });
                        }
                        let [arg] = args.as_slice() else {
                            return Err(ParseError {
                                line: tok.line,
                                column: tok.column,
                                kind: ParseErrorKind::ExpectedLhs,
                            });
                        };
                        let Item::Sym(sym @ Symbol::Nonterminal(_)) = classify(arg)? else {
                            return Err(ParseError {
                                line: arg.line,
                                column: arg.column,
                                kind: ParseErrorKind::ExpectedLhs,
                            });
                        };
                        table.add(&sym, arg.line, arg.column)?;
                        start = Some((sym.name().to_string(), arg.line, arg.column));
                    }
                    "terminals" | "nonterminals" => {
                        let want_terminal = name == "terminals";
                        for arg in args {
                            match classify(arg)? {
                                Item::Sym(sym) if sym.is_terminal() == want_terminal => {
                                    table.add(&sym, arg.line, arg.column)?
                                }
                                _ => {
                                    return Err(ParseError {
                                        line: arg.line,
                                        column: arg.column,
                                        kind: ParseErrorKind::Unexpected(describe(&arg.tok)),
                                    })
                                }
                            }
                        }
                    }
                    other => {
                        return Err(ParseError {
                            line: tok.line,
                            column: tok.column,
                            kind: ParseErrorKind::UnknownDirective(other.to_string()),
                        })
                    }
                }
            }
            _ => {
                // A rule, or a `| ...` continuation of the previous rule.
                let lhs = if tok.tok == Tok::Bar {
                    i += 1;
                    rules.last().map(|r| r.lhs.clone()).ok_or(ParseError {
                        line: tok.line,
                        column: tok.column,
                        kind: ParseErrorKind::DanglingAlternative,
                    })?
                } else {
                    let lhs = match classify(tok) {
                        Ok(Item::Sym(sym @ Symbol::Nonterminal(_))) => sym,
                        _ => {
                            return Err(ParseError {
                                line: tok.line,
                                column: tok.column,
                                kind: ParseErrorKind::ExpectedLhs,
                            })
                        }
                    };
                    table.add(&lhs, tok.line, tok.column)?;
                    i += 1;
                    match toks.get(i) {
                        Some(t) if t.tok == Tok::Arrow => i += 1,
                        Some(t) => {
                            return Err(ParseError {
                                line: t.line,
                                column: t.column,
                                kind: ParseErrorKind::ExpectedArrow,
                            })
                        }
                        None => unreachable!("token stream ends with a newline"),
                    }
                    lhs.name().to_string()
                };
                // Alternatives separated by `|` until end of statement.
                loop {
                    let mut rhs = Vec::new();
                    let mut eps_at: Option<(usize, usize)> = None;
                    let mut count = 0;
                    while i < toks.len() && !at_end(&toks[i].tok) && toks[i].tok != Tok::Bar {
                        let t = &toks[i];
                        match classify(t)? {
                            Item::Eps => eps_at = Some((t.line, t.column)),
                            Item::Sym(sym) => {
                                table.add(&sym, t.line, t.column)?;
                                rhs.push(sym);
                            }
                        }
                        count += 1;
                        i += 1;
                    }
                    if let Some((line, column)) = eps_at {
                        if count > 1 {
                            return Err(ParseError {
                                line,
                                column,
                                kind: ParseErrorKind::MisplacedEpsilon,
                            });
                        }
                    }
                    rules.push(Rule::new(lhs.clone(), rhs));
                    if i < toks.len() && toks[i].tok == Tok::Bar {
                        i += 1;
                        continue;
                    }
                    break;
                }
            }
        }
    }

    let start = match start {
        Some((s, _, _)) => s,
        None => match rules.first() {
            Some(r) => r.lhs.clone(),
            None => {
                return Err(ParseError {
                    line: 1,
                    column: 1,
                    kind: ParseErrorKind::NoRules,
                })
            }
        },
    };
    Grammar::new(table.terminals, table.nonterminals, rules, start.clone()).map_err(|_| {
        ParseError {
            line: 1,
            column: 1,
            kind: ParseErrorKind::UnknownStart(start),
        }
    })
}

// ─── Validation ────────────────────────────────────────────────────

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    /// The offending symbol.
    pub location: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}: {} ({})", self.message, self.location)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics(pub Vec<Diagnostic>);

impl Diagnostics {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        self.0.iter().any(|d| d.severity == Severity::Error)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Diagnostic> {
        self.0.iter()
    }
}

/// Nonterminals that derive at least one terminal word.
pub(crate) fn productive_set(g: &Grammar) -> HashSet<&str> {
    let mut productive: HashSet<&str> = HashSet::new();
    loop {
        let mut changed = false;
        for rule in &g.rules {
            if productive.contains(rule.lhs.as_str()) {
                continue;
            }
            let ok = rule.rhs.iter().all(|s| match s {
                Symbol::Terminal(_) => true,
                Symbol::Nonterminal(n) => productive.contains(n.as_str()),
            });
            if ok {
                productive.insert(rule.lhs.as_str());
                changed = true;
            }
        }
        if !changed {
            return productive;
        }
    }
}

fn reachable_set(g: &Grammar) -> HashSet<&str> {
    let mut reachable: HashSet<&str> = HashSet::from([g.start.as_str()]);
    let mut stack = vec![g.start.as_str()];
    while let Some(n) = stack.pop() {
        for rule in g.rules.iter().filter(|r| r.lhs == n) {
            for sym in &rule.rhs {
                if let Symbol::Nonterminal(m) = sym {
                    if reachable.insert(m.as_str()) {
                        stack.push(m.as_str());
                    }
                }
            }
        }
    }
    reachable
}

/// Reports undefined nonterminals as errors and useless ones as warnings.
pub fn validate(g: &Grammar) -> Diagnostics {
    let defined: HashSet<&str> = g.rules.iter().map(|r| r.lhs.as_str()).collect();
    let productive = productive_set(g);
    let reachable = reachable_set(g);
    let mut out = Vec::new();
    for n in &g.nonterminals {
        if !defined.contains(n.as_str()) {
            out.push(Diagnostic {
                severity: Severity::Error,
                message: format!("nonterminal {n} has no rules"),
                location: n.clone(),
            });
            continue;
        }
        if !reachable.contains(n.as_str()) {
            out.push(Diagnostic {
                severity: Severity::Warning,
                message: format!("nonterminal {n} is unreachable from {}", g.start),
                location: n.clone(),
            });
        }
        if !productive.contains(n.as_str()) {
            out.push(Diagnostic {
                severity: Severity::Warning,
                message: format!("nonterminal {n} derives no terminal word"),
                location: n.clone(),
            });
        }
    }
    Diagnostics(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Symbol {
        Symbol::Terminal(s.into())
    }
    fn n(s: &str) -> Symbol {
        Symbol::Nonterminal(s.into())
    }

    #[test]
    fn single_rule() {
        let g = parse_grammar("S -> a").unwrap();
        assert_eq!(g.terminals(), ["a"]);
        assert_eq!(g.nonterminals(), ["S"]);
        assert_eq!(g.rules(), [Rule::new("S", vec![t("a")])]);
        assert_eq!(g.start(), "S");
    }

    #[test]
    fn semicolon_separated_rules() {
        let g = parse_grammar("S1 -> A1 B1 | a ; A1 -> a ; B1 -> b").unwrap();
        assert_eq!(g.rules().len(), 4);
        assert_eq!(g.terminals(), ["a", "b"]);
        assert_eq!(g.nonterminals(), ["S1", "A1", "B1"]);
        assert_eq!(g.rules()[0], Rule::new("S1", vec![n("A1"), n("B1")]));
        assert!(validate(&g).is_empty());
    }

    #[test]
    fn self_loop_parses_then_warns() {
        let g = parse_grammar("S -> S").unwrap();
        let d = validate(&g);
        assert!(!d.has_errors());
        assert_eq!(d.0.len(), 1);
        assert!(d.0[0].message.contains("derives no terminal word"));
    }

    #[test]
    fn unreachable_warning() {
        let g = parse_grammar("S -> a\nA -> b").unwrap();
        let d = validate(&g);
        assert_eq!(d.0.len(), 1);
        assert_eq!(d.0[0].severity, Severity::Warning);
        assert_eq!(d.0[0].location, "A");
        assert!(d.0[0].message.contains("unreachable"));
    }

    #[test]
    fn undefined_nonterminal_is_error() {
        let g = parse_grammar("S -> A").unwrap();
        let d = validate(&g);
        let errors: Vec<_> = d.iter().filter(|d| d.severity == Severity::Error).collect();
        assert_eq!(errors.len(), 1);
        assert_eq!(errors[0].location, "A");
    }

    #[test]
    fn epsilon_and_continuation() {
        let g = parse_grammar("S -> a S b S\n  | eps\n").unwrap();
        assert_eq!(g.rules().len(), 2);
        assert!(g.rules()[1].rhs.is_empty());
        let g2 = parse_grammar("S -> ε").unwrap();
        assert!(g2.rules()[0].rhs.is_empty());
    }

    #[test]
    fn quoted_terminals_and_escapes() {
        let g = parse_grammar(r#"S -> "(" S ')' | "\"" | "eps""#).unwrap();
        assert_eq!(g.terminals(), ["(", ")", "\"", "eps"]);
        let err = parse_grammar(r#"S -> "\q""#).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownEscape('q'));
        assert_eq!(err.line, 1);
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_grammar("S -> a\nA b").unwrap_err();
        assert_eq!((err.line, err.column), (2, 3));
        assert_eq!(err.kind, ParseErrorKind::ExpectedArrow);

        let err = parse_grammar("a -> b").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::ExpectedLhs);

        let err = parse_grammar("@start S\n@start T\nS -> a").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::DuplicateStart);
        assert_eq!(err.line, 2);

        let err = parse_grammar("S -> a eps").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::MisplacedEpsilon);

        assert_eq!(
            parse_grammar("# nothing").unwrap_err().kind,
            ParseErrorKind::NoRules
        );
        assert!(matches!(
            parse_grammar("S -> \"abc").unwrap_err().kind,
            ParseErrorKind::UnterminatedQuote
        ));
    }

    #[test]
    fn directives_fix_orders() {
        let g = parse_grammar("@terminals b a\n@start T\nS -> a\nT -> S b").unwrap();
        assert_eq!(g.terminals(), ["b", "a"]);
        assert_eq!(g.start(), "T");
        assert_eq!(g.nonterminals(), ["T", "S"]);
    }

    #[test]
    fn arrow_without_spaces() {
        let g = parse_grammar("S->a S|b").unwrap();
        assert_eq!(g.rules().len(), 2);
        assert_eq!(g.terminals(), ["a", "b"]);
    }

    #[test]
    fn render_round_trip_examples() {
        for text in [
            "S -> a S b S | eps",
            "S1 -> A1 B1 | a ; A1 -> a ; B1 -> b",
            r#"S -> "(" S ")" | "eps" | "A" | "x y""#,
            "@terminals z a\nS -> a | S S\nB -> z",
        ] {
            let g = parse_grammar(text).unwrap();
            assert_eq!(parse_grammar(&g.render()).unwrap(), g, "{text}");
        }
    }

    #[test]
    fn constructor_rejects_bad_values() {
        assert_eq!(
            Grammar::new(vec!["a".into()], vec!["S".into()], vec![], "T"),
            Err(GrammarError::UnknownStart("T".into()))
        );
        assert_eq!(
            Grammar::new(vec!["S".into()], vec!["S".into()], vec![], "S"),
            Err(GrammarError::NameClash("S".into()))
        );
        assert!(Grammar::new(vec![], vec!["s".into()], vec![], "s").is_err());
    }
}
