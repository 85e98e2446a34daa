//! Parser for the line-oriented rule DSL.
//!
//! ```text
//! @rel R/2, P/1
//! @const c
//! # comment
//! [trans] R(x,y), R(y,z) -> R(x,z)
//! P(x) -> exists y. R(x,y), P(y) | x = c
//! P(x) -> false
//! true -> exists x. P(x)
//! ```
//!
//! Lowercase identifiers are variables unless declared with `@const`;
//! quoted names are always constants.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use super::{Atom, HeadDisjunct, Rule, RuleError, RuleSet, Signature, SignatureError, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    ArityMismatch { symbol: String, declared: usize, found: usize },
    VariableUsedAsConstant(String),
    UndeclaredRelation(String),
    UndeclaredConstant(String),
    Directive(String),
    Invalid(RuleError),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Syntax(m) => write!(f, "syntax error: {m}"),
            ParseErrorKind::ArityMismatch { symbol, declared, found } => {
                write!(f, "relation `{symbol}` has arity {declared} but is used with {found} argument(s)")
            }
            ParseErrorKind::VariableUsedAsConstant(n) => write!(f, "`{n}` is used both as a variable and as a constant"),
            ParseErrorKind::UndeclaredRelation(n) => write!(f, "undeclared relation `{n}`"),
            ParseErrorKind::UndeclaredConstant(n) => write!(f, "undeclared constant `{n}`"),
            ParseErrorKind::Directive(m) => write!(f, "bad directive: {m}"),
            ParseErrorKind::Invalid(e) => write!(f, "ill-formed rule: {e}"),
        }
    }
}

/// Parser configuration.
#[derive(Clone, Copy, Debug)]
pub struct ParseOptions {
    /// Declare relations and quoted constants on first use instead of failing.
    pub auto_declare: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { auto_declare: true }
    }
}

/// Parses one rule, extending `sig` with any new symbols.
pub fn parse_rule(text: &str, sig: &mut Signature) -> Result<Rule, ParseError> {
    let mut rules = parse_rules(text, sig, ParseOptions::default())?;
    single(&mut rules)
}

/// Parses one rule whose symbols must all be declared in `sig`.
pub fn parse_rule_strict(text: &str, sig: &Signature) -> Result<Rule, ParseError> {
    let mut sig = sig.clone();
    let mut rules = parse_rules(text, &mut sig, ParseOptions { auto_declare: false })?;
    single(&mut rules)
}

fn single(rules: &mut Vec<Rule>) -> Result<Rule, ParseError> {
    if rules.len() != 1 {
        return Err(ParseError {
            line: 1,
            column: 1,
            kind: ParseErrorKind::Syntax(format!("expected exactly one rule, found {}", rules.len())),
        });
    }
    Ok(rules.pop().unwrap())
}

/// Parses a whole rule file, directives included.
pub fn parse_rule_set(text: &str) -> Result<RuleSet, ParseError> {
    let mut signature = Signature::new();
    let rules = parse_rules(text, &mut signature, ParseOptions::default())?;
    Ok(RuleSet { signature, rules })
}

/// Parses every rule in `text`; directives and new symbols go into `sig`.
pub fn parse_rules(text: &str, sig: &mut Signature, opts: ParseOptions) -> Result<Vec<Rule>, ParseError> {
    let mut rules = Vec::new();
    // name -> used as a variable, for namespace clash detection across rules
    let mut kinds: BTreeMap<String, bool> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = strip_comment(raw);
        let trimmed = line.trim_start();
        if trimmed.trim().is_empty() {
            continue;
        }
        let offset = line.len() - trimmed.len();
        if let Some(rest) = trimmed.strip_prefix('@') {
            directive(rest, sig, line_no, offset + 2)?;
            continue;
        }
        let tokens = lex(line, line_no)?;
        let mut p = Parser { tokens, pos: 0, line: line_no, sig, opts, kinds: &mut kinds };
        let rule = p.rule()?;
        rules.push(rule);
    }
    Ok(rules)
}

fn strip_comment(line: &str) -> &str {
    let mut in_quote = false;
    for (i, ch) in line.char_indices() {
        match ch {
            '"' => in_quote = !in_quote,
            '#' if !in_quote => return &line[..i],
            _ => {}
        }
    }
    line
}

fn directive(rest: &str, sig: &mut Signature, line: usize, column: usize) -> Result<(), ParseError> {
    let err = |m: String| ParseError { line, column, kind: ParseErrorKind::Directive(m) };
    let (word, args) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
    let items = args.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty());
    let sig_err = |e: SignatureError| err(e.to_string());
    match word {
        "rel" => {
            for item in items {
                let (name, arity) = item.split_once('/').ok_or_else(|| err(format!("expected NAME/ARITY, found `{item}`")))?;
                if !is_ident(name) {
                    return Err(err(format!("invalid relation name `{name}`")));
                }
                let arity: usize = arity.parse().map_err(|_| err(format!("invalid arity `{arity}`")))?;
                sig.declare_relation(name, arity).map_err(sig_err)?;
            }
        }
        "const" => {
            for item in items {
                let name = item.trim_matches('"');
                if name.is_empty() {
                    return Err(err("empty constant name".into()));
                }
                sig.declare_constant(name).map_err(sig_err)?;
            }
        }
        other => return Err(err(format!("unknown directive `@{other}`"))),
    }
    Ok(())
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_') && chars.all(|c| c.is_alphanumeric() || c == '_' || c == '\'')
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Quoted(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Arrow,
    Pipe,
    Dot,
    Equals,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Quoted(s) => write!(f, "\"{s}\""),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Pipe => f.write_str("`|`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Equals => f.write_str("`=`"),
            Tok::End => f.write_str("end of line"),
        }
    }
}

fn lex(line: &str, line_no: usize) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        let simple = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            '|' => Some(Tok::Pipe),
            '.' => Some(Tok::Dot),
            '=' => Some(Tok::Equals),
            _ => None,
        };
        if let Some(t) = simple {
            out.push((t, col));
            i += 1;
        } else if c.is_whitespace() {
            i += 1;
        } else if c == '-' && chars.get(i + 1) == Some(&'>') {
            out.push((Tok::Arrow, col));
            i += 2;
        } else if c == '"' {
            let start = i + 1;
            let mut j = start;
            while j < chars.len() && chars[j] != '"' {
                j += 1;
            }
            if j >= chars.len() {
                return Err(ParseError { line: line_no, column: col, kind: ParseErrorKind::Syntax("unterminated quoted constant".into()) });
            }
            let name: String = chars[start..j].iter().collect();
            if name.is_empty() {
                return Err(ParseError { line: line_no, column: col, kind: ParseErrorKind::Syntax("empty quoted constant".into()) });
            }
            out.push((Tok::Quoted(name), col));
            i = j + 1;
        } else if c.is_alphanumeric() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
        } else {
            return Err(ParseError { line: line_no, column: col, kind: ParseErrorKind::Syntax(format!("unexpected character `{c}`")) });
        }
    }
    out.push((Tok::End, chars.len() + 1));
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
    sig: &'a mut Signature,
    opts: ParseOptions,
    kinds: &'a mut BTreeMap<String, bool>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].0
    }

    fn col(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].0.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn err_at(&self, column: usize, kind: ParseErrorKind) -> ParseError {
        ParseError { line: self.line, column, kind }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        self.err_at(self.col(), ParseErrorKind::Syntax(format!("expected {expected}, found {}", self.peek())))
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(what))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw) && !matches!(self.tokens.get(self.pos + 1), Some((Tok::LParen, _)))
    }

    fn rule(&mut self) -> Result<Rule, ParseError> {
        let start = self.col();
        let mut label = None;
        if *self.peek() == Tok::LBracket {
            self.bump();
            let mut parts = Vec::new();
            while !matches!(self.peek(), Tok::RBracket | Tok::End) {
                match self.bump() {
                    Tok::Ident(s) | Tok::Quoted(s) => parts.push(s),
                    _ => return Err(self.err_at(self.col(), ParseErrorKind::Syntax("labels are identifiers".into()))),
                }
            }
            self.expect(Tok::RBracket, "`]`")?;
            label = Some(parts.join(" "));
        }
        let body = if self.is_keyword("true") {
            self.bump();
            Vec::new()
        } else {
            self.atoms(&[])?
        };
        self.expect(Tok::Arrow, "`->`")?;
        let mut heads = Vec::new();
        if self.is_keyword("false") {
            self.bump();
        } else {
            loop {
                heads.push(self.disjunct()?);
                if *self.peek() == Tok::Pipe {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        if *self.peek() != Tok::End {
            return Err(self.unexpected("end of rule"));
        }
        let rule = Rule { body, heads, label };
        rule.validate().map_err(|e| self.err_at(start, ParseErrorKind::Invalid(e)))?;
        Ok(rule)
    }

    fn disjunct(&mut self) -> Result<HeadDisjunct, ParseError> {
        let mut existentials = Vec::new();
        if self.is_keyword("exists") {
            self.bump();
            loop {
                let col = self.col();
                match self.bump() {
                    Tok::Ident(name) => {
                        if self.sig.has_constant(&name) {
                            return Err(self.err_at(col, ParseErrorKind::VariableUsedAsConstant(name)));
                        }
                        self.note_kind(&name, true, col)?;
                        existentials.push(name);
                    }
                    _ => {
                        self.pos -= 1;
                        return Err(self.unexpected("an existential variable"));
                    }
                }
                match self.peek() {
                    Tok::Comma => {
                        self.bump();
                    }
                    Tok::Dot => {
                        self.bump();
                        break;
                    }
                    _ => return Err(self.unexpected("`,` or `.`")),
                }
            }
        }
        let atoms = self.atoms(&existentials)?;
        Ok(HeadDisjunct { existentials, atoms })
    }

    fn atoms(&mut self, bound: &[String]) -> Result<Vec<Atom>, ParseError> {
        let mut out = vec![self.atom(bound)?];
        while *self.peek() == Tok::Comma {
            self.bump();
            out.push(self.atom(bound)?);
        }
        Ok(out)
    }

    fn atom(&mut self, bound: &[String]) -> Result<Atom, ParseError> {
        let col = self.col();
        if let Tok::Ident(name) = self.peek().clone() {
            if matches!(self.tokens.get(self.pos + 1), Some((Tok::LParen, _))) {
                self.bump();
                self.bump();
                let mut args = Vec::new();
                if *self.peek() != Tok::RParen {
                    loop {
                        args.push(self.term(bound)?);
                        if *self.peek() == Tok::Comma {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Tok::RParen, "`)` or `,`")?;
                self.check_relation(&name, args.len(), col)?;
                return Ok(Atom::Rel { symbol: name, args });
            }
        }
        let left = self.term(bound)?;
        self.expect(Tok::Equals, "`=` or an atom")?;
        let right = self.term(bound)?;
        Ok(Atom::Eq(left, right))
    }

    fn term(&mut self, bound: &[String]) -> Result<Term, ParseError> {
        let col = self.col();
        match self.peek().clone() {
            Tok::Quoted(name) => {
                self.bump();
                if bound.contains(&name) {
                    return Err(self.err_at(col, ParseErrorKind::VariableUsedAsConstant(name)));
                }
                if !self.sig.has_constant(&name) {
                    if !self.opts.auto_declare {
                        return Err(self.err_at(col, ParseErrorKind::UndeclaredConstant(name)));
                    }
                    self.sig
                        .declare_constant(&name)
                        .map_err(|e| self.err_at(col, ParseErrorKind::Syntax(e.to_string())))?;
                }
                self.note_kind(&name, false, col)?;
                Ok(Term::Const(name))
            }
            Tok::Ident(name) => {
                self.bump();
                if self.sig.has_constant(&name) && !bound.contains(&name) {
                    self.note_kind(&name, false, col)?;
                    return Ok(Term::Const(name));
                }
                let first = name.chars().next().unwrap();
                if !(first.is_lowercase() || first == '_') {
                    return Err(self.err_at(
                        col,
                        ParseErrorKind::Syntax(format!("`{name}` is neither a variable (lowercase) nor a declared constant")),
                    ));
                }
                self.note_kind(&name, true, col)?;
                Ok(Term::Var(name))
            }
            _ => Err(self.unexpected("a term")),
        }
    }

    fn note_kind(&mut self, name: &str, is_var: bool, col: usize) -> Result<(), ParseError> {
        match self.kinds.get(name) {
            Some(&k) if k != is_var => Err(self.err_at(col, ParseErrorKind::VariableUsedAsConstant(name.to_string()))),
            Some(_) => Ok(()),
            None => {
                self.kinds.insert(name.to_string(), is_var);
                Ok(())
            }
        }
    }

    fn check_relation(&mut self, name: &str, found: usize, col: usize) -> Result<(), ParseError> {
        match self.sig.arity(name) {
            Some(declared) if declared != found => {
                Err(self.err_at(col, ParseErrorKind::ArityMismatch { symbol: name.to_string(), declared, found }))
            }
            Some(_) => Ok(()),
            None if self.opts.auto_declare => self
                .sig
                .declare_relation(name, found)
                .map_err(|e| self.err_at(col, ParseErrorKind::Syntax(e.to_string()))),
            None => Err(self.err_at(col, ParseErrorKind::UndeclaredRelation(name.to_string()))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Rule {
        parse_rule(s, &mut Signature::new()).unwrap()
    }

    #[test]
    fn parses_plain_tgd() {
        let r = p("P(x), R(x,y) -> Q(y)");
        assert_eq!(r.body, vec![Atom::rel("P", vec![Term::var("x")]), Atom::rel("R", vec![Term::var("x"), Term::var("y")])]);
        assert_eq!(r.heads, vec![HeadDisjunct::atoms_only(vec![Atom::rel("Q", vec![Term::var("y")])])]);
    }

    #[test]
    fn parses_negative_constraint() {
        let r = p("P(x) -> false");
        assert!(r.heads.is_empty());
        assert_eq!(r.body.len(), 1);
    }

    #[test]
    fn parses_nullary_disjunction() {
        let r = p("R() -> S() | T()");
        assert_eq!(r.heads.len(), 2);
        assert_eq!(r.to_string(), "R() -> S() | T()");
    }

    #[test]
    fn parses_existentials_and_equalities() {
        let r = p("P(x) -> exists y,z. R(x,y), R(y,z) | x = \"c\"");
        assert_eq!(r.heads[0].existentials, vec!["y", "z"]);
        assert_eq!(r.heads[1].atoms, vec![Atom::eq(Term::var("x"), Term::constant("c"))]);
        assert_eq!(r.to_string(), "P(x) -> exists y,z. R(x,y), R(y,z) | x = \"c\"");
    }

    #[test]
    fn declared_constants_are_bare() {
        let set = parse_rule_set("@rel P/1\n@const c\nP(c) -> P(x)\n").unwrap();
        assert_eq!(set.rules[0].body, vec![Atom::rel("P", vec![Term::constant("c")])]);
        assert!(set.signature.has_constant("c"));
    }

    #[test]
    fn empty_body_and_labels() {
        let r = p("[seed] true -> exists x. B(x)");
        assert!(r.body.is_empty());
        assert_eq!(r.label.as_deref(), Some("seed"));
        assert_eq!(r.to_string(), "[seed] true -> exists x. B(x)");
    }

    #[test]
    fn arity_mismatch_reports_position() {
        let e = parse_rule_set("R(x,y) -> R(x)").unwrap_err();
        assert_eq!(e.line, 1);
        assert_eq!(e.column, 11);
        assert!(matches!(e.kind, ParseErrorKind::ArityMismatch { .. }));
    }

    #[test]
    fn declared_arity_is_enforced() {
        let e = parse_rule_set("@rel R/2\n\nR(x) -> false").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(matches!(e.kind, ParseErrorKind::ArityMismatch { declared: 2, found: 1, .. }));
    }

    #[test]
    fn variable_used_as_constant() {
        let e = parse_rule_set("P(x) -> Q(\"x\")").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::VariableUsedAsConstant(ref n) if n == "x"));
        let e = parse_rule_set("@const c\nP(x) -> exists c. Q(c)").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::VariableUsedAsConstant(_)));
    }

    #[test]
    fn syntax_errors() {
        for bad in ["P(x) Q(x)", "P(x) ->", "P(x -> Q(x)", "P(x) -> exists . Q(x)", "P(X) -> Q(X)", "P(x) -> Q(x) extra"] {
            let e = parse_rule_set(bad).unwrap_err();
            assert_eq!(e.line, 1, "{bad}");
        }
    }

    #[test]
    fn strict_mode_requires_declarations() {
        let sig = Signature::from_parts([("P", 1)], []).unwrap();
        assert!(parse_rule_strict("P(x) -> P(x)", &sig).is_ok());
        let e = parse_rule_strict("P(x) -> Q(x)", &sig).unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::UndeclaredRelation(_)));
    }

    #[test]
    fn comments_and_blank_lines() {
        let set = parse_rule_set("# header\n\nP(x) -> Q(x) # trailing\n  \n").unwrap();
        assert_eq!(set.rules.len(), 1);
    }

    #[test]
    fn unsafe_rules_are_accepted() {
        let r = p("P(x), R(x,x) -> Q(y)");
        assert_eq!(r.universal_vars(), vec!["x", "y"]);
    }
}
