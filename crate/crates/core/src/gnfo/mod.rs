//! Guarded negation formulas, relativization to a unary predicate, and the
//! reduction of disjoint-union preservation to unsatisfiability.

use std::collections::BTreeSet;
use std::ops::ControlFlow;

use thiserror::Error;

use crate::rules::{classify, Atom, ClassFlag, Rule, Signature, Term};
use crate::semantics::{rule_sentence, Formula, Theory, TheoryError};
use crate::structures::{for_each_structure, induced_substructure, EnumerationError, StagedFilter, Structure};

/// Marker predicate of the left structure in the reduction.
pub const D_A: &str = "D_A";
/// Marker predicate of the right structure in the reduction.
pub const D_B: &str = "D_B";
/// Most enumeration nodes [`bounded_sat`] visits before giving up.
pub const SAT_NODE_CAP: u64 = 1 << 26;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GnfoError {
    #[error("relation name `{0}` is reserved for the reduction")]
    ReservedName(String),
    #[error("unsupported connective `{0}`; rewrite it into not, exists, and, or first")]
    Unsupported(&'static str),
    #[error("not frontier-guarded: {0}")]
    NotFrontierGuarded(String),
    #[error("search exceeded {0} enumeration nodes")]
    Cap(u64),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error(transparent)]
    Enumeration(#[from] EnumerationError),
}

/// Which side of the reduction a relativization targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn predicate(self) -> &'static str {
        match self {
            Side::A => D_A,
            Side::B => D_B,
        }
    }
}

/// A formula together with the result of the guarded-negation check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GnfoFormula {
    pub ast: Formula,
    pub gnfo_certified: bool,
}

impl GnfoFormula {
    pub fn new(ast: Formula) -> GnfoFormula {
        let gnfo_certified = is_gnfo(&ast);
        GnfoFormula { ast, gnfo_certified }
    }
}

/// Whether `f` is built from atoms with exists, and, or, and negations
/// `alpha & not phi` where the atom `alpha` holds every free variable of
/// `phi`. Conjunctions are read associatively, so the guard may be any atom
/// among the conjuncts. `true` and `false` count as empty and/or.
pub fn is_gnfo(f: &Formula) -> bool {
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => true,
        Formula::Exists(_, g) => is_gnfo(g),
        Formula::Or(fs) => fs.iter().all(is_gnfo),
        Formula::And(_) => {
            let mut conj = Vec::new();
            flatten_and(f, &mut conj);
            let atoms: Vec<&Atom> = conj.iter().filter_map(|c| if let Formula::Atom(a) = c { Some(a) } else { None }).collect();
            conj.iter().all(|c| match c {
                Formula::Not(g) => {
                    let free = g.free_vars();
                    is_gnfo(g) && atoms.iter().any(|a| free.iter().all(|v| a.mentions_var(v)))
                }
                other => is_gnfo(other),
            })
        }
        Formula::Not(_) | Formula::Implies(..) | Formula::Forall(..) => false,
    }
}

fn flatten_and<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
    match f {
        Formula::And(fs) => fs.iter().for_each(|g| flatten_and(g, out)),
        other => out.push(other),
    }
}

/// Replaces implications and universal quantifiers by not, exists, or.
pub fn to_core(f: &Formula) -> Formula {
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => f.clone(),
        Formula::Not(g) => Formula::not(to_core(g)),
        Formula::And(fs) => Formula::And(fs.iter().map(to_core).collect()),
        Formula::Or(fs) => Formula::Or(fs.iter().map(to_core).collect()),
        Formula::Implies(a, b) => Formula::Or(vec![Formula::not(to_core(a)), to_core(b)]),
        Formula::Exists(x, g) => Formula::Exists(x.clone(), Box::new(to_core(g))),
        Formula::Forall(x, g) => Formula::not(Formula::Exists(x.clone(), Box::new(Formula::not(to_core(g))))),
    }
}

/// Like [`to_core`], but aims at guarded-negation form: universally closed
/// implications `forall x. (a -> b)` become `not exists x. (a & not b)`, and
/// negated sentences get a trivial `v = v` guard. The result is equivalent
/// on nonempty domains; whether it is guarded is up to [`is_gnfo`].
pub fn guarded_form(f: &Formula) -> Formula {
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => f.clone(),
        Formula::Not(g) => negate(guarded_form(g)),
        Formula::And(fs) => Formula::And(fs.iter().map(guarded_form).collect()),
        Formula::Or(fs) => Formula::Or(fs.iter().map(guarded_form).collect()),
        Formula::Implies(a, b) => Formula::Or(vec![negate(guarded_form(a)), guarded_form(b)]),
        Formula::Exists(x, g) => Formula::Exists(x.clone(), Box::new(guarded_form(g))),
        Formula::Forall(..) => {
            let mut vars = Vec::new();
            let mut body = f;
            while let Formula::Forall(x, g) = body {
                vars.push(x.clone());
                body = g;
            }
            let inner = match body {
                Formula::Implies(a, b) => Formula::And(vec![guarded_form(a), negate(guarded_form(b))]),
                other => negate(guarded_form(other)),
            };
            negate(Formula::exists(&vars, inner))
        }
    }
}

fn negate(g: Formula) -> Formula {
    if g.is_sentence() {
        guarded_not(g)
    } else {
        Formula::not(g)
    }
}

fn marker(d: &str, t: Term) -> Formula {
    Formula::Atom(Atom::rel(d, vec![t]))
}

/// Relativizes `f` to the elements marked by the side's predicate: every
/// atom gets marker conjuncts on its arguments, and every quantifier is
/// bounded to marked elements. The bound is left out when the body already
/// forces the variable to be marked, so `exists x. R(x)` becomes
/// `exists x. (R(x) & D(x))`.
pub fn relativize(f: &Formula, side: Side) -> Result<Formula, GnfoError> {
    let d = side.predicate();
    Ok(match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Atom(a) => {
            let mut seen = BTreeSet::new();
            let mut conj = vec![f.clone()];
            for t in a.terms() {
                if seen.insert(t.clone()) {
                    conj.push(marker(d, t.clone()));
                }
            }
            if conj.len() == 1 {
                f.clone()
            } else {
                Formula::And(conj)
            }
        }
        Formula::Not(g) => Formula::not(relativize(g, side)?),
        Formula::And(fs) => Formula::And(fs.iter().map(|g| relativize(g, side)).collect::<Result<_, _>>()?),
        Formula::Or(fs) => Formula::Or(fs.iter().map(|g| relativize(g, side)).collect::<Result<_, _>>()?),
        Formula::Exists(x, g) => {
            let body = relativize(g, side)?;
            let body = if forces_marker(&body, x, d) { body } else { Formula::And(vec![marker(d, Term::var(x)), body]) };
            Formula::Exists(x.clone(), Box::new(body))
        }
        Formula::Implies(..) => return Err(GnfoError::Unsupported("implies")),
        Formula::Forall(..) => return Err(GnfoError::Unsupported("forall")),
    })
}

/// Whether every model of `f` marks the free variable `x`.
fn forces_marker(f: &Formula, x: &str, d: &str) -> bool {
    match f {
        Formula::Atom(Atom::Rel { symbol, args }) => symbol == d && args.len() == 1 && args[0].as_var() == Some(x),
        Formula::And(fs) => fs.iter().any(|g| forces_marker(g, x, d)),
        Formula::Or(fs) => !fs.is_empty() && fs.iter().all(|g| forces_marker(g, x, d)),
        Formula::Exists(y, g) => y != x && forces_marker(g, x, d),
        _ => false,
    }
}

/// All variable names in `f`, bound or free.
fn var_names(f: &Formula, out: &mut BTreeSet<String>) {
    match f {
        Formula::True | Formula::False => {}
        Formula::Atom(a) => out.extend(a.vars().map(str::to_string)),
        Formula::Not(g) => var_names(g, out),
        Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|g| var_names(g, out)),
        Formula::Implies(a, b) => {
            var_names(a, out);
            var_names(b, out);
        }
        Formula::Exists(x, g) | Formula::Forall(x, g) => {
            out.insert(x.clone());
            var_names(g, out);
        }
    }
}

fn fresh_var(f: &Formula) -> String {
    let mut used = BTreeSet::new();
    var_names(f, &mut used);
    (0..).map(|i| if i == 0 { "v".to_string() } else { format!("v{i}") }).find(|v| !used.contains(v)).expect("unbounded names")
}

/// `exists v. (v = v & not g)` for a sentence `g`: its negation in guarded form.
fn guarded_not(g: Formula) -> Formula {
    let v = fresh_var(&g);
    let t = Term::var(&v);
    Formula::Exists(v, Box::new(Formula::And(vec![Formula::eq(t.clone(), t), Formula::not(g)])))
}

fn marked(d: &str, vars: &[Term]) -> Formula {
    Formula::And(vars.iter().map(|t| marker(d, t.clone())).collect())
}

/// Output of [`disjoint_union_reduction`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DisjointUnionReduction {
    /// Satisfiable exactly when the input has two models whose disjoint
    /// union is not a model.
    pub formula: Formula,
    /// An equivalent guarded-negation sentence, when the input is in
    /// guarded-negation form after removing implications and universals.
    pub gnfo: Option<GnfoFormula>,
    /// The input signature without the marker predicates.
    pub base: Signature,
}

impl DisjointUnionReduction {
    /// Splits a model of the reduction into the two structures it encodes.
    pub fn project(&self, c: &Structure) -> Option<(Structure, Structure)> {
        let side = |d: &str| {
            let x: BTreeSet<_> = c.relation(d)?.iter().map(|t| t[0]).collect();
            induced_substructure(c, &x).ok()?.reduct(self.base.clone()).ok()
        };
        Some((side(D_A)?, side(D_B)?))
    }
}

/// Builds a sentence that is satisfiable iff `f` is not preserved under
/// disjoint unions. A model marks the left and right structures with
/// `D_A` and `D_B`; the sentence requires:
///
/// - every element is marked (the union covers the domain);
/// - every fact lies inside one side, so the structure is the union of the
///   two induced substructures;
/// - every constant is marked on both sides;
/// - both sides satisfy `f` and the whole structure does not.
pub fn disjoint_union_reduction(f: &Formula) -> Result<DisjointUnionReduction, GnfoError> {
    let base = f.signature().map_err(TheoryError::from)?;
    for name in [D_A, D_B] {
        if base.relation_index(name).is_some() || base.has_constant(name) {
            return Err(GnfoError::ReservedName(name.to_string()));
        }
    }
    let core = to_core(f);
    let (pa, pb) = (relativize(&core, Side::A)?, relativize(&core, Side::B)?);
    let x = Term::var("x");
    let cover = Formula::Or(vec![marker(D_A, x.clone()), marker(D_B, x.clone())]);
    let mut plain = vec![Formula::forall(&["x"], cover.clone())];
    let xx = Formula::eq(x.clone(), x.clone());
    let mut shaped = vec![guarded_not(Formula::exists(&["x"], Formula::And(vec![xx, Formula::not(cover)])))];
    for (r, k) in base.relations() {
        if *k == 0 {
            continue;
        }
        let names: Vec<String> = (1..=*k).map(|i| format!("x{i}")).collect();
        let vars: Vec<Term> = names.iter().map(Term::var).collect();
        let fact = Formula::Atom(Atom::rel(r.as_str(), vars.clone()));
        let inside = Formula::Or(vec![marked(D_A, &vars), marked(D_B, &vars)]);
        plain.push(Formula::forall(&names, Formula::implies(fact.clone(), inside.clone())));
        shaped.push(guarded_not(Formula::exists(&names, Formula::And(vec![fact, Formula::not(inside)]))));
    }
    for c in base.constants() {
        let both = Formula::And(vec![marker(D_A, Term::constant(c)), marker(D_B, Term::constant(c))]);
        plain.push(both.clone());
        shaped.push(both);
    }
    plain.extend([pa, pb, Formula::not(f.clone())]);
    let g = guarded_form(f);
    shaped.extend([relativize(&g, Side::A)?, relativize(&g, Side::B)?, guarded_not(g)]);
    let shaped = GnfoFormula::new(Formula::And(shaped));
    Ok(DisjointUnionReduction { formula: Formula::And(plain), gnfo: shaped.gnfo_certified.then_some(shaped), base })
}

struct NodeCap<'a> {
    inner: &'a mut dyn StagedFilter,
    nodes: u64,
    cap: u64,
    hit: bool,
}

impl StagedFilter for NodeCap<'_> {
    fn accept(&mut self, level: usize, partial: &Structure) -> bool {
        self.nodes += 1;
        if self.nodes > self.cap {
            self.hit = true;
            return false;
        }
        self.inner.accept(level, partial)
    }

    fn accept_complete(&mut self, s: &Structure) -> bool {
        !self.hit && self.inner.accept_complete(s)
    }
}

/// The first model of `f` with at most `max_domain` elements, in
/// enumeration order.
pub fn bounded_sat(f: &Formula, max_domain: usize) -> Result<Option<Structure>, GnfoError> {
    bounded_sat_with_cap(f, max_domain, SAT_NODE_CAP)
}

pub fn bounded_sat_with_cap(f: &Formula, max_domain: usize, cap: u64) -> Result<Option<Structure>, GnfoError> {
    let theory = Theory::from_sentence(f.clone())?.compile()?;
    let mut inner = theory.model_filter();
    let mut filter = NodeCap { inner: &mut inner, nodes: 0, cap, hit: false };
    let mut found = None;
    let _ = for_each_structure(theory.signature(), 1..=max_domain, &mut filter, &mut |s| {
        found = Some(s.clone());
        ControlFlow::Break(())
    })?;
    if found.is_none() && filter.hit {
        return Err(GnfoError::Cap(cap));
    }
    Ok(found)
}

/// The conjunction of the universal closures of the rules; `true` for none.
pub fn rules_to_sentence(rules: &[Rule]) -> Formula {
    match rules {
        [] => Formula::True,
        [r] => rule_sentence(r),
        _ => Formula::And(rules.iter().map(rule_sentence).collect()),
    }
}

/// Writes frontier-guarded rules as a guarded-negation sentence. Each rule
/// `body -> exists y. head` becomes `not exists x. (body & not exists y. head)`,
/// where the inner negation is guarded by the frontier guard in the body.
pub fn fg_rules_to_gnfo(rules: &[Rule]) -> Result<GnfoFormula, GnfoError> {
    let mut parts = Vec::new();
    for r in rules {
        if !classify(r).contains(ClassFlag::FrontierGuarded) {
            return Err(GnfoError::NotFrontierGuarded(r.to_string()));
        }
        let h = &r.heads[0];
        let head = Formula::exists(&h.existentials, Formula::And(h.atoms.iter().cloned().map(Formula::Atom).collect()));
        let mut conj: Vec<Formula> = r.body.iter().cloned().map(Formula::Atom).collect();
        conj.push(Formula::not(head));
        parts.push(guarded_not(Formula::exists(&r.universal_vars(), Formula::And(conj))));
    }
    let ast = match parts.len() {
        0 => Formula::True,
        1 => parts.pop().expect("one part"),
        _ => Formula::And(parts),
    };
    Ok(GnfoFormula::new(ast))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::{parse_rule, Signature};
    use crate::semantics::{eval_sentence, parse_formula};

    fn formula(s: &str) -> Formula {
        parse_formula(s, &BTreeSet::new()).unwrap()
    }

    fn rules(ts: &[&str]) -> Vec<Rule> {
        let mut sig = Signature::new();
        ts.iter().map(|t| parse_rule(t, &mut sig).unwrap()).collect()
    }

    #[test]
    fn grammar_examples() {
        assert!(is_gnfo(&formula("(exists (x) (and (R x x) (not (Q x))))")));
        assert!(!is_gnfo(&formula("(exists (x) (not (Q x)))")));
        assert!(is_gnfo(&formula("(exists (y) (and (= y y) (not (exists (x) (and (= x x) (not (or (D_A x) (D_B x))))))))")));
        assert!(!is_gnfo(&formula("(forall (x) (Q x))")));
        assert!(!is_gnfo(&formula("(exists (x y) (and (P x) (not (R x y))))")));
    }

    #[test]
    fn relativized_atom_under_exists() {
        let f = relativize(&formula("(exists (x) (R x))"), Side::A).unwrap();
        assert_eq!(f, formula("(exists (x) (and (R x) (D_A x)))"));
        let f = relativize(&formula("(not (Q))"), Side::A).unwrap();
        assert_eq!(f, formula("(not (Q))"));
        let f = relativize(&formula("(exists (x) (not (Q x)))"), Side::B).unwrap();
        assert_eq!(f, formula("(exists (x) (and (D_B x) (not (and (Q x) (D_B x)))))"));
        assert_eq!(relativize(&formula("(forall (x) (Q x))"), Side::A), Err(GnfoError::Unsupported("forall")));
    }

    #[test]
    fn bounded_sat_examples() {
        let m = bounded_sat(&formula("(exists (x) (Q x))"), 3).unwrap().unwrap();
        assert_eq!(m.size(), 1);
        assert!(eval_sentence(&m, &formula("(exists (x) (Q x))")).unwrap());
        assert_eq!(bounded_sat(&formula("(and (Q) (not (Q)))"), 3).unwrap(), None);
    }

    #[test]
    fn chain_rule_reduction_is_satisfiable() {
        let rs = rules(&["E(x,y), E(y,z) -> C(y)"]);
        let red = disjoint_union_reduction(&rules_to_sentence(&rs)).unwrap();
        let m = bounded_sat(&red.formula, 3).unwrap().expect("a model of size 3");
        assert_eq!(m.size(), 3);
        let (a, b) = red.project(&m).unwrap();
        assert!(crate::semantics::satisfies_rules(&a, &rs).unwrap());
        assert!(crate::semantics::satisfies_rules(&b, &rs).unwrap());
        let shaped = red.gnfo.expect("guarded form");
        assert_eq!(bounded_sat(&shaped.ast, 3).unwrap().map(|s| s.size()), Some(3));
    }

    #[test]
    fn tautology_reduction_is_unsatisfiable() {
        let red = disjoint_union_reduction(&formula("(forall (x) (= x x))")).unwrap();
        assert_eq!(bounded_sat(&red.formula, 3).unwrap(), None);
    }

    #[test]
    fn reserved_names_rejected() {
        assert_eq!(disjoint_union_reduction(&formula("(exists (x) (D_A x))")), Err(GnfoError::ReservedName("D_A".into())));
    }

    #[test]
    fn frontier_guarded_rules_become_gnfo() {
        let g = fg_rules_to_gnfo(&rules(&["P(x), Q(x) -> R(x)"])).unwrap();
        assert!(g.gnfo_certified);
        assert_eq!(fg_rules_to_gnfo(&[]).unwrap().ast, Formula::True);
        assert_eq!(rules_to_sentence(&[]), Formula::True);
        assert!(matches!(fg_rules_to_gnfo(&rules(&["R(x,y), R(y,z) -> R(x,z)"])), Err(GnfoError::NotFrontierGuarded(_))));
    }
}
