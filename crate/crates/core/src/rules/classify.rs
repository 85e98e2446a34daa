//! The syntactic class hierarchy of generalized dependencies.

use std::collections::BTreeSet;
use std::fmt;

use super::{Atom, Rule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassFlag {
    Gd,
    NegativeConstraint,
    Safe,
    Ded,
    Ed,
    Tgd,
    FrontierGuarded,
    Guarded,
    Linear,
    Diverse,
    QuasiFrontierGuarded,
}

impl ClassFlag {
    pub const ALL: [ClassFlag; 11] = [
        ClassFlag::Gd,
        ClassFlag::NegativeConstraint,
        ClassFlag::Safe,
        ClassFlag::Ded,
        ClassFlag::Ed,
        ClassFlag::Tgd,
        ClassFlag::FrontierGuarded,
        ClassFlag::Guarded,
        ClassFlag::Linear,
        ClassFlag::Diverse,
        ClassFlag::QuasiFrontierGuarded,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassFlag::Gd => "GD",
            ClassFlag::NegativeConstraint => "NegativeConstraint",
            ClassFlag::Safe => "Safe",
            ClassFlag::Ded => "DED",
            ClassFlag::Ed => "ED",
            ClassFlag::Tgd => "TGD",
            ClassFlag::FrontierGuarded => "FrontierGuarded",
            ClassFlag::Guarded => "Guarded",
            ClassFlag::Linear => "Linear",
            ClassFlag::Diverse => "Diverse",
            ClassFlag::QuasiFrontierGuarded => "QuasiFrontierGuarded",
        }
    }

    fn bit(self) -> u16 {
        1 << (self as u16)
    }
}

impl fmt::Display for ClassFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A set of class flags.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct RuleClass(u16);

impl RuleClass {
    pub fn empty() -> RuleClass {
        RuleClass(0)
    }

    pub fn contains(self, f: ClassFlag) -> bool {
        self.0 & f.bit() != 0
    }

    pub fn insert(&mut self, f: ClassFlag) {
        self.0 |= f.bit();
    }

    pub fn flags(self) -> impl Iterator<Item = ClassFlag> {
        ClassFlag::ALL.into_iter().filter(move |f| self.contains(*f))
    }

    pub fn intersect(self, other: RuleClass) -> RuleClass {
        RuleClass(self.0 & other.0)
    }

    /// The most specific class among GD, DED, ED, TGD, FG, G, linear.
    pub fn strongest(self) -> ClassFlag {
        [ClassFlag::Linear, ClassFlag::Guarded, ClassFlag::FrontierGuarded, ClassFlag::Tgd, ClassFlag::Ed, ClassFlag::Ded]
            .into_iter()
            .find(|f| self.contains(*f))
            .unwrap_or(ClassFlag::Gd)
    }
}

impl fmt::Display for RuleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.flags().map(ClassFlag::name).collect();
        write!(f, "{{{}}}", names.join(", "))
    }
}

/// Computes the class flags of a rule.
///
/// `Diverse` is never set here: a diverse dependency carries its
/// disequation guard separately (see `rewriting::DiverseDependency`).
pub fn classify(rule: &Rule) -> RuleClass {
    let mut c = RuleClass::empty();
    c.insert(ClassFlag::Gd);
    if rule.is_negative_constraint() {
        c.insert(ClassFlag::NegativeConstraint);
    }
    let frontier = rule.frontier_variables();
    let in_relational_body = |v: &String| rule.body.iter().any(|a| a.is_relational() && a.mentions_var(v));
    if !frontier.iter().all(in_relational_body) {
        return c;
    }
    c.insert(ClassFlag::Safe);
    if rule.is_negative_constraint() {
        return c;
    }
    c.insert(ClassFlag::Ded);
    if rule.heads.len() > 1 {
        return c;
    }
    c.insert(ClassFlag::Ed);
    if !rule.is_equality_free() {
        return c;
    }
    c.insert(ClassFlag::Tgd);
    if frontier_guard(rule).is_some() {
        c.insert(ClassFlag::FrontierGuarded);
    }
    if full_guard(rule).is_some() {
        c.insert(ClassFlag::Guarded);
    }
    if rule.body.len() == 1 {
        c.insert(ClassFlag::Linear);
    }
    let graph = HeadGraph::of(&rule.heads[0].existentials, &rule.heads[0].atoms);
    if graph.components.iter().all(|comp| covered_by_body_atom(&rule.body, &graph.component_universals(comp))) {
        c.insert(ClassFlag::QuasiFrontierGuarded);
    }
    c
}

fn guard_for(body: &[Atom], vars: &BTreeSet<String>) -> Option<usize> {
    body.iter().position(|a| a.is_relational() && vars.iter().all(|v| a.mentions_var(v)))
}

/// True when all of `vars` occur together in one relational body atom.
/// The empty set is covered vacuously.
pub(crate) fn covered_by_body_atom(body: &[Atom], vars: &BTreeSet<String>) -> bool {
    vars.is_empty() || guard_for(body, vars).is_some()
}

/// Index of the leftmost relational body atom containing every frontier variable.
pub fn frontier_guard(rule: &Rule) -> Option<usize> {
    guard_for(&rule.body, &rule.frontier_variables())
}

/// Index of the leftmost relational body atom containing every universal variable.
pub fn full_guard(rule: &Rule) -> Option<usize> {
    guard_for(&rule.body, &rule.universal_vars().into_iter().collect())
}

/// Head conjuncts as vertices, joined when they share an existential variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeadGraph {
    pub atoms: Vec<Atom>,
    pub existentials: Vec<String>,
    /// Pairs `(i, j)` with `i < j`.
    pub edges: Vec<(usize, usize)>,
    /// Connected components, each sorted, ordered by smallest vertex.
    pub components: Vec<Vec<usize>>,
}

impl HeadGraph {
    pub fn of(existentials: &[String], atoms: &[Atom]) -> HeadGraph {
        let n = atoms.len();
        let shares = |i: usize, j: usize| existentials.iter().any(|e| atoms[i].mentions_var(e) && atoms[j].mentions_var(e));
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if shares(i, j) {
                    edges.push((i, j));
                }
            }
        }
        let mut seen = vec![false; n];
        let mut components = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut k = 0;
            while k < comp.len() {
                let u = comp[k];
                for &(a, b) in &edges {
                    let other = if a == u { b } else if b == u { a } else { continue };
                    if !seen[other] {
                        seen[other] = true;
                        comp.push(other);
                    }
                }
                k += 1;
            }
            comp.sort_unstable();
            components.push(comp);
        }
        HeadGraph { atoms: atoms.to_vec(), existentials: existentials.to_vec(), edges, components }
    }

    /// Non-existential variables occurring in the given component.
    pub fn component_universals(&self, comp: &[usize]) -> BTreeSet<String> {
        comp.iter()
            .flat_map(|&i| self.atoms[i].vars())
            .filter(|v| !self.existentials.iter().any(|e| e == v))
            .map(str::to_string)
            .collect()
    }

    /// Existential variables occurring in the given component.
    pub fn component_existentials(&self, comp: &[usize]) -> Vec<String> {
        self.existentials.iter().filter(|e| comp.iter().any(|&i| self.atoms[i].mentions_var(e))).cloned().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::{parse_rule, Signature};

    fn class(s: &str) -> RuleClass {
        classify(&parse_rule(s, &mut Signature::new()).unwrap())
    }

    #[test]
    fn guarded_but_not_linear() {
        let c = class("P(x), R(x,y) -> Q(y)");
        for f in [ClassFlag::Safe, ClassFlag::Ded, ClassFlag::Ed, ClassFlag::Tgd, ClassFlag::FrontierGuarded, ClassFlag::Guarded] {
            assert!(c.contains(f), "{f}");
        }
        assert!(!c.contains(ClassFlag::Linear));
        let c = class("P(x), Q(x) -> R(x)");
        assert!(c.contains(ClassFlag::Guarded) && !c.contains(ClassFlag::Linear));
    }

    #[test]
    fn transitivity_is_not_frontier_guarded() {
        let c = class("R(x,y), R(y,z) -> R(x,z)");
        assert!(c.contains(ClassFlag::Tgd));
        assert!(!c.contains(ClassFlag::FrontierGuarded));
    }

    #[test]
    fn frontier_guarded_not_guarded() {
        let c = class("E(x,y), E(y,z) -> C(y)");
        assert!(c.contains(ClassFlag::FrontierGuarded));
        assert!(!c.contains(ClassFlag::Guarded));
        let r = parse_rule("E(x,y), E(y,z) -> C(y)", &mut Signature::new()).unwrap();
        assert_eq!(frontier_guard(&r), Some(0));
    }

    #[test]
    fn negative_constraint_is_safe_not_ded() {
        let c = class("P(x) -> false");
        assert!(c.contains(ClassFlag::NegativeConstraint) && c.contains(ClassFlag::Safe));
        assert!(!c.contains(ClassFlag::Ded));
    }

    #[test]
    fn unsafe_and_disjunctive_and_equality() {
        assert!(!class("P(x), R(x,x) -> Q(y)").contains(ClassFlag::Safe));
        let c = class("R() -> S() | T()");
        assert!(c.contains(ClassFlag::Ded) && !c.contains(ClassFlag::Ed));
        let c = class("R(x,y) -> x = y");
        assert!(c.contains(ClassFlag::Ed) && !c.contains(ClassFlag::Tgd));
        let c = class("x = y -> P(x)");
        assert!(!c.contains(ClassFlag::Safe));
    }

    #[test]
    fn linear_single_atom() {
        let c = class("R(x,y) -> exists z. R(y,z)");
        assert!(c.contains(ClassFlag::Linear) && c.contains(ClassFlag::Guarded));
        assert_eq!(c.strongest(), ClassFlag::Linear);
    }

    #[test]
    fn quasi_frontier_guarded() {
        assert!(class("R(x,y) -> exists z. R(y,z)").contains(ClassFlag::QuasiFrontierGuarded));
        assert!(!class("P(x), Q(y) -> exists z. R(x,z), R(y,z)").contains(ClassFlag::QuasiFrontierGuarded));
        let c = class("P(x), Q(y) -> exists z,w. R(x,z), S(y,w)");
        assert!(c.contains(ClassFlag::QuasiFrontierGuarded) && !c.contains(ClassFlag::FrontierGuarded));
    }

    #[test]
    fn head_graph_components() {
        let r = parse_rule("P(x) -> exists z,w. R(x,z), S(z,w), T(x,x)", &mut Signature::new()).unwrap();
        let g = HeadGraph::of(&r.heads[0].existentials, &r.heads[0].atoms);
        assert_eq!(g.edges, vec![(0, 1)]);
        assert_eq!(g.components, vec![vec![0, 1], vec![2]]);
        let r = parse_rule("P(y) -> exists z,w. R(y,z), S(y,w)", &mut Signature::new()).unwrap();
        let g = HeadGraph::of(&r.heads[0].existentials, &r.heads[0].atoms);
        assert_eq!(g.components.len(), 2);
    }
}
