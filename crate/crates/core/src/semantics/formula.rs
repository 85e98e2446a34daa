//! First-order formulas and their prefix text form.
//!
//! ```text
//! (exists (x) (and (R x "c") (not (Q x))))
//! (forall (x y) (implies (= x y) (P x)))
//! true  false  (F)
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::rules::{Atom, Rule, Signature, SignatureError, Term};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    Not(Box<Formula>),
    /// Conjunction; empty means true.
    And(Vec<Formula>),
    /// Disjunction; empty means false.
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Exists(String, Box<Formula>),
    Forall(String, Box<Formula>),
}

impl Formula {
    pub fn atom(a: Atom) -> Formula {
        Formula::Atom(a)
    }

    pub fn rel(symbol: &str, args: &[Term]) -> Formula {
        Formula::Atom(Atom::rel(symbol, args.to_vec()))
    }

    /// Relational atom over variables named by `vars`.
    pub fn rel_vars(symbol: &str, vars: &[&str]) -> Formula {
        Formula::Atom(Atom::rel(symbol, vars.iter().map(|v| Term::var(*v)).collect()))
    }

    pub fn eq(a: Term, b: Term) -> Formula {
        Formula::Atom(Atom::Eq(a, b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(fs: Vec<Formula>) -> Formula {
        Formula::And(fs)
    }

    pub fn or(fs: Vec<Formula>) -> Formula {
        Formula::Or(fs)
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    /// `∃v1 ... ∃vn f`, innermost quantifier last.
    pub fn exists<S: AsRef<str>>(vars: &[S], f: Formula) -> Formula {
        vars.iter().rev().fold(f, |acc, v| Formula::Exists(v.as_ref().to_string(), Box::new(acc)))
    }

    pub fn forall<S: AsRef<str>>(vars: &[S], f: Formula) -> Formula {
        vars.iter().rev().fold(f, |acc, v| Formula::Forall(v.as_ref().to_string(), Box::new(acc)))
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => {
                for v in a.vars() {
                    if !bound.iter().any(|b| b == v) {
                        out.insert(v.to_string());
                    }
                }
            }
            Formula::Not(f) => f.collect_free(bound, out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_free(bound, out)),
            Formula::Implies(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Exists(v, f) | Formula::Forall(v, f) => {
                bound.push(v.clone());
                f.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    pub fn is_sentence(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// True when no variable is quantified twice along one branch.
    pub fn binds_each_var_once_per_path(&self) -> bool {
        fn go(f: &Formula, bound: &mut Vec<String>) -> bool {
            match f {
                Formula::True | Formula::False | Formula::Atom(_) => true,
                Formula::Not(g) => go(g, bound),
                Formula::And(fs) | Formula::Or(fs) => fs.iter().all(|g| go(g, bound)),
                Formula::Implies(a, b) => go(a, bound) && go(b, bound),
                Formula::Exists(v, g) | Formula::Forall(v, g) => {
                    if bound.contains(v) {
                        return false;
                    }
                    bound.push(v.clone());
                    let ok = go(g, bound);
                    bound.pop();
                    ok
                }
            }
        }
        go(self, &mut Vec::new())
    }

    /// Calls `f` on every atom.
    pub fn for_each_atom(&self, f: &mut dyn FnMut(&Atom)) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => f(a),
            Formula::Not(g) | Formula::Exists(_, g) | Formula::Forall(_, g) => g.for_each_atom(f),
            Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| g.for_each_atom(f)),
            Formula::Implies(a, b) => {
                a.for_each_atom(f);
                b.for_each_atom(f);
            }
        }
    }

    /// Relation symbols with arities, and constants, used by the formula.
    pub fn signature(&self) -> Result<Signature, SignatureError> {
        let mut sig = Signature::new();
        let mut err = None;
        self.for_each_atom(&mut |a| {
            for t in a.terms() {
                if let Term::Const(c) = t {
                    if let Err(e) = sig.declare_constant(c) {
                        err.get_or_insert(e);
                    }
                }
            }
            if let Atom::Rel { symbol, args } = a {
                if let Err(e) = sig.declare_relation(symbol, args.len()) {
                    err.get_or_insert(e);
                }
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(sig),
        }
    }

    pub fn relation_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.for_each_atom(&mut |a| {
            if let Atom::Rel { symbol, .. } = a {
                out.insert(symbol.clone());
            }
        });
        out
    }

    pub fn constant_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.for_each_atom(&mut |a| {
            for t in a.terms() {
                if let Term::Const(c) = t {
                    out.insert(c.clone());
                }
            }
        });
        out
    }

    /// Number of connectives, quantifiers and atoms.
    pub fn size(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => 1,
            Formula::Not(g) | Formula::Exists(_, g) | Formula::Forall(_, g) => 1 + g.size(),
            Formula::And(gs) | Formula::Or(gs) => 1 + gs.iter().map(Formula::size).sum::<usize>(),
            Formula::Implies(a, b) => 1 + a.size() + b.size(),
        }
    }

    /// Human-oriented infix rendering.
    pub fn to_infix(&self) -> String {
        match self {
            Formula::True => "⊤".into(),
            Formula::False => "⊥".into(),
            Formula::Atom(a) => a.to_string(),
            Formula::Not(g) => format!("¬{}", g.to_infix()),
            Formula::And(gs) if gs.is_empty() => "⊤".into(),
            Formula::Or(gs) if gs.is_empty() => "⊥".into(),
            Formula::And(gs) => format!("({})", gs.iter().map(Formula::to_infix).collect::<Vec<_>>().join(" ∧ ")),
            Formula::Or(gs) => format!("({})", gs.iter().map(Formula::to_infix).collect::<Vec<_>>().join(" ∨ ")),
            Formula::Implies(a, b) => format!("({} → {})", a.to_infix(), b.to_infix()),
            Formula::Exists(v, g) => format!("∃{v}.{}", g.to_infix()),
            Formula::Forall(v, g) => format!("∀{v}.{}", g.to_infix()),
        }
    }
}

fn write_term(f: &mut fmt::Formatter<'_>, t: &Term) -> fmt::Result {
    match t {
        Term::Var(v) => f.write_str(v),
        Term::Const(c) => write!(f, "\"{c}\""),
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Atom(Atom::Rel { symbol, args }) => {
                write!(f, "({symbol}")?;
                for a in args {
                    f.write_str(" ")?;
                    write_term(f, a)?;
                }
                f.write_str(")")
            }
            Formula::Atom(Atom::Eq(a, b)) => {
                f.write_str("(= ")?;
                write_term(f, a)?;
                f.write_str(" ")?;
                write_term(f, b)?;
                f.write_str(")")
            }
            Formula::Not(g) => write!(f, "(not {g})"),
            Formula::And(gs) | Formula::Or(gs) => {
                f.write_str(if matches!(self, Formula::And(_)) { "(and" } else { "(or" })?;
                for g in gs {
                    write!(f, " {g}")?;
                }
                f.write_str(")")
            }
            Formula::Implies(a, b) => write!(f, "(implies {a} {b})"),
            Formula::Exists(_, _) | Formula::Forall(_, _) => {
                let is_exists = matches!(self, Formula::Exists(_, _));
                let mut vars = Vec::new();
                let mut cur = self;
                loop {
                    match cur {
                        Formula::Exists(v, g) if is_exists => {
                            vars.push(v.as_str());
                            cur = g;
                        }
                        Formula::Forall(v, g) if !is_exists => {
                            vars.push(v.as_str());
                            cur = g;
                        }
                        _ => break,
                    }
                }
                write!(f, "({} ({}) {cur})", if is_exists { "exists" } else { "forall" }, vars.join(" "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("offset {offset}: {message}")]
pub struct FormulaParseError {
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Sx {
    Sym(String, usize),
    Quoted(String, usize),
    List(Vec<Sx>, usize),
}

fn read_sexprs(text: &str) -> Result<Vec<Sx>, FormulaParseError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut stack: Vec<(Vec<Sx>, usize)> = vec![(Vec::new(), 0)];
    let mut i = 0;
    while i < chars.len() {
        let (off, c) = chars[i];
        match c {
            ';' => {
                while i < chars.len() && chars[i].1 != '\n' {
                    i += 1;
                }
                continue;
            }
            '(' => stack.push((Vec::new(), off)),
            ')' => {
                let (items, start) = stack.pop().unwrap();
                let parent = stack.last_mut().ok_or(FormulaParseError { offset: off, message: "unbalanced `)`".into() })?;
                parent.0.push(Sx::List(items, start));
            }
            '"' => {
                let mut j = i + 1;
                while j < chars.len() && chars[j].1 != '"' {
                    j += 1;
                }
                if j >= chars.len() {
                    return Err(FormulaParseError { offset: off, message: "unterminated string".into() });
                }
                let s: String = chars[i + 1..j].iter().map(|p| p.1).collect();
                stack.last_mut().unwrap().0.push(Sx::Quoted(s, off));
                i = j;
            }
            c if c.is_whitespace() => {}
            _ => {
                let mut j = i;
                while j < chars.len() && !chars[j].1.is_whitespace() && !"()\";".contains(chars[j].1) {
                    j += 1;
                }
                let s: String = chars[i..j].iter().map(|p| p.1).collect();
                stack.last_mut().unwrap().0.push(Sx::Sym(s, off));
                i = j;
                continue;
            }
        }
        i += 1;
    }
    if stack.len() != 1 {
        return Err(FormulaParseError { offset: text.len(), message: "unbalanced `(`".into() });
    }
    Ok(stack.pop().unwrap().0)
}

const KEYWORDS: [&str; 9] = ["not", "and", "or", "implies", "exists", "forall", "=", "true", "false"];

fn to_term(x: &Sx, constants: &BTreeSet<String>) -> Result<Term, FormulaParseError> {
    match x {
        Sx::Sym(s, off) => {
            if KEYWORDS.contains(&s.as_str()) {
                return Err(FormulaParseError { offset: *off, message: format!("keyword `{s}` used as a term") });
            }
            Ok(if constants.contains(s) { Term::Const(s.clone()) } else { Term::Var(s.clone()) })
        }
        Sx::Quoted(s, _) => Ok(Term::Const(s.clone())),
        Sx::List(_, off) => Err(FormulaParseError { offset: *off, message: "expected a term".into() }),
    }
}

fn to_formula(x: &Sx, constants: &BTreeSet<String>) -> Result<Formula, FormulaParseError> {
    let err = |offset: usize, m: &str| FormulaParseError { offset, message: m.to_string() };
    match x {
        Sx::Sym(s, off) => match s.as_str() {
            "true" => Ok(Formula::True),
            "false" => Ok(Formula::False),
            _ => Err(err(*off, "expected a formula")),
        },
        Sx::Quoted(_, off) => Err(err(*off, "expected a formula")),
        Sx::List(items, off) => {
            let (head, rest) = items.split_first().ok_or_else(|| err(*off, "empty list"))?;
            let Sx::Sym(h, hoff) = head else {
                return Err(err(*off, "expected an operator or relation name"));
            };
            let sub = |i: &Sx| to_formula(i, constants);
            match h.as_str() {
                "not" if rest.len() == 1 => Ok(Formula::not(sub(&rest[0])?)),
                "and" => Ok(Formula::And(rest.iter().map(sub).collect::<Result<_, _>>()?)),
                "or" => Ok(Formula::Or(rest.iter().map(sub).collect::<Result<_, _>>()?)),
                "implies" if rest.len() == 2 => Ok(Formula::implies(sub(&rest[0])?, sub(&rest[1])?)),
                "=" if rest.len() == 2 => Ok(Formula::eq(to_term(&rest[0], constants)?, to_term(&rest[1], constants)?)),
                "exists" | "forall" if rest.len() == 2 => {
                    let Sx::List(vs, voff) = &rest[0] else {
                        return Err(err(*hoff, "expected a variable list"));
                    };
                    let mut names = Vec::new();
                    for v in vs {
                        match v {
                            Sx::Sym(n, _) if !KEYWORDS.contains(&n.as_str()) && !constants.contains(n) => names.push(n.clone()),
                            _ => return Err(err(*voff, "bad quantified variable")),
                        }
                    }
                    let body = sub(&rest[1])?;
                    Ok(if h == "exists" { Formula::exists(&names, body) } else { Formula::forall(&names, body) })
                }
                k if KEYWORDS.contains(&k) => Err(err(*hoff, &format!("wrong number of arguments for `{k}`"))),
                name => Ok(Formula::Atom(Atom::rel(name, rest.iter().map(|t| to_term(t, constants)).collect::<Result<_, _>>()?))),
            }
        }
    }
}

/// Parses one formula in prefix form. Bare names listed in `constants` are
/// read as constants, other bare names as variables.
pub fn parse_formula(text: &str, constants: &BTreeSet<String>) -> Result<Formula, FormulaParseError> {
    let items = read_sexprs(text)?;
    if items.len() != 1 {
        return Err(FormulaParseError { offset: 0, message: format!("expected one formula, found {}", items.len()) });
    }
    to_formula(&items[0], constants)
}

/// Parses a sequence of formulas (for example one sentence per line).
pub fn parse_formulas(text: &str, constants: &BTreeSet<String>) -> Result<Vec<Formula>, FormulaParseError> {
    read_sexprs(text)?.iter().map(|x| to_formula(x, constants)).collect()
}

/// The universal closure of a rule as a first-order sentence.
pub fn rule_sentence(rule: &Rule) -> Formula {
    let body = Formula::And(rule.body.iter().cloned().map(Formula::Atom).collect());
    let head = Formula::Or(
        rule.heads
            .iter()
            .map(|h| Formula::exists(&h.existentials, Formula::And(h.atoms.iter().cloned().map(Formula::Atom).collect())))
            .collect(),
    );
    Formula::forall(&rule.universal_vars(), Formula::implies(body, head))
}

/// Renames bound variables apart so that no name is bound twice or also free.
pub fn rename_bound_apart(f: &Formula) -> Formula {
    fn go(f: &Formula, env: &mut Vec<(String, String)>, used: &mut BTreeSet<String>) -> Formula {
        match f {
            Formula::True | Formula::False => f.clone(),
            Formula::Atom(a) => Formula::Atom(a.map_terms(|t| match t {
                Term::Var(v) => env.iter().rev().find(|(o, _)| o == v).map_or(t.clone(), |(_, n)| Term::Var(n.clone())),
                Term::Const(_) => t.clone(),
            })),
            Formula::Not(g) => Formula::not(go(g, env, used)),
            Formula::And(gs) => Formula::And(gs.iter().map(|g| go(g, env, used)).collect()),
            Formula::Or(gs) => Formula::Or(gs.iter().map(|g| go(g, env, used)).collect()),
            Formula::Implies(a, b) => Formula::implies(go(a, env, used), go(b, env, used)),
            Formula::Exists(v, g) | Formula::Forall(v, g) => {
                let mut name = v.clone();
                let mut k = 1;
                while used.contains(&name) {
                    name = format!("{v}_{k}");
                    k += 1;
                }
                used.insert(name.clone());
                env.push((v.clone(), name.clone()));
                let body = go(g, env, used);
                env.pop();
                if matches!(f, Formula::Exists(_, _)) {
                    Formula::Exists(name, Box::new(body))
                } else {
                    Formula::Forall(name, Box::new(body))
                }
            }
        }
    }
    let mut used: BTreeSet<String> = f.free_vars();
    go(f, &mut Vec::new(), &mut used)
}

/// Replaces free occurrences of variables by terms.
pub fn substitute_free(f: &Formula, sub: &BTreeMap<String, Term>) -> Formula {
    match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Atom(a) => Formula::Atom(a.substitute(sub)),
        Formula::Not(g) => Formula::not(substitute_free(g, sub)),
        Formula::And(gs) => Formula::And(gs.iter().map(|g| substitute_free(g, sub)).collect()),
        Formula::Or(gs) => Formula::Or(gs.iter().map(|g| substitute_free(g, sub)).collect()),
        Formula::Implies(a, b) => Formula::implies(substitute_free(a, sub), substitute_free(b, sub)),
        Formula::Exists(v, g) | Formula::Forall(v, g) => {
            let mut inner = sub.clone();
            inner.remove(v);
            let body = Box::new(substitute_free(g, &inner));
            if matches!(f, Formula::Exists(_, _)) {
                Formula::Exists(v.clone(), body)
            } else {
                Formula::Forall(v.clone(), body)
            }
        }
    }
}
