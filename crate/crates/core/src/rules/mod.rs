//! Generalized dependencies: terms, atoms, rules, signatures and classes.

mod classify;
mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

pub(crate) use classify::covered_by_body_atom;
pub use classify::{classify, frontier_guard, full_guard, ClassFlag, HeadGraph, RuleClass};
pub use parse::{parse_rule, parse_rule_set, parse_rule_strict, parse_rules, ParseError, ParseErrorKind, ParseOptions};

/// A variable or a constant symbol.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn constant(name: impl Into<String>) -> Term {
        Term::Const(name.into())
    }

    pub fn name(&self) -> &str {
        match self {
            Term::Var(n) | Term::Const(n) => n,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(n) => Some(n),
            Term::Const(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(n) => f.write_str(n),
            Term::Const(n) => write!(f, "\"{n}\""),
        }
    }
}

/// A relational atom `R(t1,...,tn)` or an equality `t1 = t2`.
///
/// Falsum is not an atom here: a rule with no head disjuncts is a negative
/// constraint, which is the only place falsum may occur.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Rel { symbol: String, args: Vec<Term> },
    Eq(Term, Term),
}

impl Atom {
    pub fn rel(symbol: impl Into<String>, args: Vec<Term>) -> Atom {
        Atom::Rel { symbol: symbol.into(), args }
    }

    pub fn eq(left: Term, right: Term) -> Atom {
        Atom::Eq(left, right)
    }

    pub fn is_relational(&self) -> bool {
        matches!(self, Atom::Rel { .. })
    }

    pub fn terms(&self) -> Vec<&Term> {
        match self {
            Atom::Rel { args, .. } => args.iter().collect(),
            Atom::Eq(a, b) => vec![a, b],
        }
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.terms().into_iter().filter_map(Term::as_var)
    }

    pub fn mentions_var(&self, v: &str) -> bool {
        self.vars().any(|x| x == v)
    }

    /// Applies `f` to every term, rebuilding the atom.
    pub fn map_terms(&self, mut f: impl FnMut(&Term) -> Term) -> Atom {
        match self {
            Atom::Rel { symbol, args } => Atom::Rel { symbol: symbol.clone(), args: args.iter().map(&mut f).collect() },
            Atom::Eq(a, b) => Atom::Eq(f(a), f(b)),
        }
    }

    /// Replaces variables according to `sub`; unmapped terms are kept.
    pub fn substitute(&self, sub: &BTreeMap<String, Term>) -> Atom {
        self.map_terms(|t| match t {
            Term::Var(v) => sub.get(v).cloned().unwrap_or_else(|| t.clone()),
            Term::Const(_) => t.clone(),
        })
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Rel { symbol, args } => {
                write!(f, "{symbol}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Atom::Eq(a, b) => write!(f, "{a} = {b}"),
        }
    }
}

/// One disjunct `exists y1..yk. atoms` of a rule head.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HeadDisjunct {
    pub existentials: Vec<String>,
    pub atoms: Vec<Atom>,
}

impl HeadDisjunct {
    pub fn new(existentials: Vec<String>, atoms: Vec<Atom>) -> HeadDisjunct {
        HeadDisjunct { existentials, atoms }
    }

    pub fn atoms_only(atoms: Vec<Atom>) -> HeadDisjunct {
        HeadDisjunct { existentials: Vec::new(), atoms }
    }

    pub fn is_existential(&self, v: &str) -> bool {
        self.existentials.iter().any(|e| e == v)
    }

    /// Variables of the disjunct that are not bound by its own quantifier.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for a in &self.atoms {
            for v in a.vars() {
                if !self.is_existential(v) && !out.iter().any(|o| o == v) {
                    out.push(v.to_string());
                }
            }
        }
        out
    }
}

impl fmt::Display for HeadDisjunct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.existentials.is_empty() {
            write!(f, "exists {}. ", self.existentials.join(","))?;
        }
        write_atoms(f, &self.atoms)
    }
}

fn write_atoms(f: &mut fmt::Formatter<'_>, atoms: &[Atom]) -> fmt::Result {
    for (i, a) in atoms.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{a}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("head disjunct {disjunct} binds `{var}` more than once")]
    DuplicateExistential { disjunct: usize, var: String },
    #[error("`{0}` is both universal and existential")]
    ExistentialIsUniversal(String),
    #[error("existential variable `{0}` does not occur in its disjunct")]
    UnusedExistential(String),
    #[error("head disjunct {0} has no atoms")]
    EmptyDisjunct(usize),
    #[error("`{0}` is used both as a variable and as a constant")]
    VarConstClash(String),
    #[error("relation `{symbol}` used with arity {found}, declared {declared}")]
    Arity { symbol: String, declared: usize, found: usize },
    #[error("empty name")]
    EmptyName,
}

/// A generalized dependency `body -> exists y. psi_1 | ... | psi_n`.
///
/// Universal quantification is implicit: every variable that is not bound by
/// the existential prefix of the disjunct it occurs in is universal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rule {
    pub body: Vec<Atom>,
    pub heads: Vec<HeadDisjunct>,
    pub label: Option<String>,
}

impl Rule {
    /// Builds a rule and checks the well-formedness conditions on variables.
    pub fn new(body: Vec<Atom>, heads: Vec<HeadDisjunct>) -> Result<Rule, RuleError> {
        let r = Rule { body, heads, label: None };
        r.validate()?;
        Ok(r)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Rule {
        self.label = Some(label.into());
        self
    }

    pub fn validate(&self) -> Result<(), RuleError> {
        let mut vars = BTreeSet::new();
        let mut consts = BTreeSet::new();
        for a in self.body.iter().chain(self.heads.iter().flat_map(|h| h.atoms.iter())) {
            if let Atom::Rel { symbol, .. } = a {
                if symbol.is_empty() {
                    return Err(RuleError::EmptyName);
                }
            }
            for t in a.terms() {
                if t.name().is_empty() {
                    return Err(RuleError::EmptyName);
                }
                match t {
                    Term::Var(v) => vars.insert(v.clone()),
                    Term::Const(c) => consts.insert(c.clone()),
                };
            }
        }
        if let Some(c) = vars.intersection(&consts).next() {
            return Err(RuleError::VarConstClash(c.clone()));
        }
        let universal: BTreeSet<String> = self.universal_vars().into_iter().collect();
        for (i, h) in self.heads.iter().enumerate() {
            if h.atoms.is_empty() {
                return Err(RuleError::EmptyDisjunct(i));
            }
            let mut seen = BTreeSet::new();
            for e in &h.existentials {
                if !seen.insert(e) {
                    return Err(RuleError::DuplicateExistential { disjunct: i, var: e.clone() });
                }
                if universal.contains(e) {
                    return Err(RuleError::ExistentialIsUniversal(e.clone()));
                }
                if !h.atoms.iter().any(|a| a.mentions_var(e)) {
                    return Err(RuleError::UnusedExistential(e.clone()));
                }
            }
        }
        Ok(())
    }

    /// Universal variables in order of first occurrence (body first, then heads).
    pub fn universal_vars(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut push = |v: &str| {
            if !out.iter().any(|o| o == v) {
                out.push(v.to_string());
            }
        };
        for a in &self.body {
            a.vars().for_each(&mut push);
        }
        for h in &self.heads {
            for a in &h.atoms {
                a.vars().filter(|v| !h.is_existential(v)).for_each(&mut push);
            }
        }
        out
    }

    /// Universal variables that occur in some head disjunct.
    pub fn frontier_variables(&self) -> BTreeSet<String> {
        self.heads.iter().flat_map(|h| h.free_vars()).collect()
    }

    /// Frontier variables in order of first occurrence in the rule.
    pub fn frontier_ordered(&self) -> Vec<String> {
        let fr = self.frontier_variables();
        self.universal_vars().into_iter().filter(|v| fr.contains(v)).collect()
    }

    pub fn is_negative_constraint(&self) -> bool {
        self.heads.is_empty()
    }

    pub fn is_equality_free(&self) -> bool {
        self.all_atoms().all(Atom::is_relational)
    }

    pub fn all_atoms(&self) -> impl Iterator<Item = &Atom> {
        self.body.iter().chain(self.heads.iter().flat_map(|h| h.atoms.iter()))
    }

    /// Relation symbols with the arity they are used at (first use wins).
    pub fn relations(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for a in self.all_atoms() {
            if let Atom::Rel { symbol, args } = a {
                out.entry(symbol.clone()).or_insert(args.len());
            }
        }
        out
    }

    pub fn constants(&self) -> BTreeSet<String> {
        self.all_atoms()
            .flat_map(|a| a.terms())
            .filter_map(|t| match t {
                Term::Const(c) => Some(c.clone()),
                Term::Var(_) => None,
            })
            .collect()
    }

    /// The smallest signature this rule is written over.
    pub fn signature(&self) -> Result<Signature, RuleError> {
        let mut sig = Signature::new();
        sig.absorb_rule(self)?;
        Ok(sig)
    }

    /// Applies a substitution to universal variables everywhere in the rule.
    /// Substituted terms must not use the names of existential variables.
    pub fn substitute_universal(&self, sub: &BTreeMap<String, Term>) -> Rule {
        let body = self.body.iter().map(|a| a.substitute(sub)).collect();
        let heads = self
            .heads
            .iter()
            .map(|h| {
                let mut local = sub.clone();
                for e in &h.existentials {
                    local.remove(e);
                }
                HeadDisjunct { existentials: h.existentials.clone(), atoms: h.atoms.iter().map(|a| a.substitute(&local)).collect() }
            })
            .collect();
        Rule { body, heads, label: self.label.clone() }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(l) = &self.label {
            write!(f, "[{l}] ")?;
        }
        if self.body.is_empty() {
            f.write_str("true")?;
        } else {
            write_atoms(f, &self.body)?;
        }
        f.write_str(" -> ")?;
        if self.heads.is_empty() {
            return f.write_str("false");
        }
        for (i, h) in self.heads.iter().enumerate() {
            if i > 0 {
                f.write_str(" | ")?;
            }
            write!(f, "{h}")?;
        }
        Ok(())
    }
}

/// Renders a rule in the rule DSL; `parse_rule` reads it back.
pub fn render_rule(rule: &Rule) -> String {
    rule.to_string()
}

/// Relation symbols with arities plus constant symbols.
///
/// Relations and constants are kept sorted by name; the position of a
/// relation in that order is its index in every [`crate::Structure`] over the
/// signature.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Signature {
    relations: Vec<(String, usize)>,
    constants: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignatureError {
    #[error("relation `{name}` declared with arity {old} and {new}")]
    ArityConflict { name: String, old: usize, new: usize },
    #[error("`{0}` is declared both as relation and constant")]
    KindConflict(String),
    #[error("empty symbol name")]
    EmptyName,
}

impl Signature {
    pub fn new() -> Signature {
        Signature::default()
    }

    /// Builds a signature from `(name, arity)` pairs and constant names.
    pub fn from_parts<'a>(
        relations: impl IntoIterator<Item = (&'a str, usize)>,
        constants: impl IntoIterator<Item = &'a str>,
    ) -> Result<Signature, SignatureError> {
        let mut sig = Signature::new();
        for (r, k) in relations {
            sig.declare_relation(r, k)?;
        }
        for c in constants {
            sig.declare_constant(c)?;
        }
        Ok(sig)
    }

    pub fn declare_relation(&mut self, name: &str, arity: usize) -> Result<(), SignatureError> {
        if name.is_empty() {
            return Err(SignatureError::EmptyName);
        }
        if self.constants.binary_search_by(|c| c.as_str().cmp(name)).is_ok() {
            return Err(SignatureError::KindConflict(name.to_string()));
        }
        match self.relations.binary_search_by(|(r, _)| r.as_str().cmp(name)) {
            Ok(i) => {
                let old = self.relations[i].1;
                if old != arity {
                    return Err(SignatureError::ArityConflict { name: name.to_string(), old, new: arity });
                }
            }
            Err(i) => self.relations.insert(i, (name.to_string(), arity)),
        }
        Ok(())
    }

    pub fn declare_constant(&mut self, name: &str) -> Result<(), SignatureError> {
        if name.is_empty() {
            return Err(SignatureError::EmptyName);
        }
        if self.arity(name).is_some() {
            return Err(SignatureError::KindConflict(name.to_string()));
        }
        if let Err(i) = self.constants.binary_search_by(|c| c.as_str().cmp(name)) {
            self.constants.insert(i, name.to_string());
        }
        Ok(())
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.relation_index(name).map(|i| self.relations[i].1)
    }

    pub fn relation_index(&self, name: &str) -> Option<usize> {
        self.relations.binary_search_by(|(r, _)| r.as_str().cmp(name)).ok()
    }

    pub fn constant_index(&self, name: &str) -> Option<usize> {
        self.constants.binary_search_by(|c| c.as_str().cmp(name)).ok()
    }

    pub fn has_constant(&self, name: &str) -> bool {
        self.constant_index(name).is_some()
    }

    pub fn relations(&self) -> &[(String, usize)] {
        &self.relations
    }

    pub fn constants(&self) -> &[String] {
        &self.constants
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty() && self.constants.is_empty()
    }

    /// Adds every symbol of `other`, failing on conflicting declarations.
    pub fn merge(&mut self, other: &Signature) -> Result<(), SignatureError> {
        for (r, k) in &other.relations {
            self.declare_relation(r, *k)?;
        }
        for c in &other.constants {
            self.declare_constant(c)?;
        }
        Ok(())
    }

    /// Adds the symbols used by `rule`.
    pub fn absorb_rule(&mut self, rule: &Rule) -> Result<(), RuleError> {
        for a in rule.all_atoms() {
            if let Atom::Rel { symbol, args } = a {
                self.declare_relation(symbol, args.len()).map_err(|e| match e {
                    SignatureError::ArityConflict { name, old, new } => RuleError::Arity { symbol: name, declared: old, found: new },
                    SignatureError::KindConflict(n) => RuleError::VarConstClash(n),
                    SignatureError::EmptyName => RuleError::EmptyName,
                })?;
            }
        }
        for c in rule.constants() {
            self.declare_constant(&c).map_err(|_| RuleError::VarConstClash(c.clone()))?;
        }
        Ok(())
    }

    /// True when every symbol of `self` is declared in `other` with the same arity.
    pub fn is_subsignature_of(&self, other: &Signature) -> bool {
        self.relations.iter().all(|(r, k)| other.arity(r) == Some(*k)) && self.constants.iter().all(|c| other.has_constant(c))
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (r, k) in &self.relations {
            writeln!(f, "@rel {r}/{k}")?;
        }
        for c in &self.constants {
            writeln!(f, "@const {c}")?;
        }
        Ok(())
    }
}

/// A finite set of rules together with the signature they are written over.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RuleSet {
    pub signature: Signature,
    pub rules: Vec<Rule>,
}

impl RuleSet {
    pub fn new(rules: Vec<Rule>) -> Result<RuleSet, RuleError> {
        let mut signature = Signature::new();
        for r in &rules {
            r.validate()?;
            signature.absorb_rule(r)?;
        }
        Ok(RuleSet { signature, rules })
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

impl fmt::Display for RuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.signature)?;
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

/// Collects the signature shared by a list of rules.
pub fn signature_of(rules: &[Rule]) -> Result<Signature, RuleError> {
    let mut sig = Signature::new();
    for r in rules {
        sig.absorb_rule(r)?;
    }
    Ok(sig)
}
