//! Rewriting rule sets between classes.
//!
//! Wherever a construction needs logical consequence, a bounded countermodel
//! search stands in for it, and every rewrite comes with a report comparing
//! the model sets of input and output on all small structures.

mod ded;
mod diverse;
mod equality;
mod grounding;

use std::fmt;

use thiserror::Error;

use crate::preservation::Budget;
use crate::rules::{Rule, RuleError, SignatureError};
use crate::semantics::{Theory, TheoryError};
use crate::structures::{EnumerationError, Structure, Structures, DEFAULT_ENUMERATION_CAP};

pub use ded::{ded_to_ed_bounded, split_ded, DedToEd};
pub use diverse::{
    delta_set, gamma_dagger, gamma_star, head_graph, is_quasi_frontier_guarded, normalize_diverse, qfg_to_frontier_guarded,
    specialization_set, tgd_to_fgtgd_bounded, tgd_to_fgtgd_with_cap, DiverseDependency, DiverseNormalization, FgRewrite, Substitution,
    DEFAULT_SPECIALIZATION_CAP,
};
pub use equality::{eliminate_body_equalities, eliminate_head_equalities, BodyEqualities, HeadEqualities};
pub use grounding::{gd_to_ded_decidable, has_sharp_model, has_trivial_model};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RewriteError {
    #[error("not a disjunctive embedded dependency: {0}")]
    NotDed(String),
    #[error("not a tuple-generating dependency: {0}")]
    NotTgd(String),
    #[error("not quasi-frontier-guarded: {0}")]
    NotQuasiFrontierGuarded(String),
    #[error("{count} candidate substitutions exceed the cap of {cap}")]
    Cap { count: String, cap: u64 },
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error(transparent)]
    Enumeration(#[from] EnumerationError),
}

impl From<SignatureError> for RewriteError {
    fn from(e: SignatureError) -> Self {
        RewriteError::Theory(e.into())
    }
}

/// Outcome of a bounded entailment test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Entailment {
    /// No countermodel within the budget; this is not a proof.
    NotRefuted,
    /// A model of the premises that fails the conclusion.
    Countermodel(Structure),
}

/// Searches structures up to `budget.max_domain` for a model of `premises`
/// that is not a model of `conclusion`.
pub fn entails_bounded(premises: &[Rule], conclusion: &Rule, budget: &Budget) -> Result<Entailment, RewriteError> {
    let mut out = refute_each(premises, std::slice::from_ref(conclusion), budget)?;
    Ok(out.pop().expect("one conclusion"))
}

/// [`entails_bounded`] for many conclusions, sharing one enumeration of the
/// premises' models. The countermodel reported for each conclusion is the
/// first in enumeration order.
pub fn refute_each(premises: &[Rule], conclusions: &[Rule], budget: &Budget) -> Result<Vec<Entailment>, RewriteError> {
    let p = Theory::from_rules(premises)?;
    let mut sig = p.signature().clone();
    for c in conclusions {
        sig.absorb_rule(c)?;
    }
    let p = p.with_signature(&sig)?.compile()?;
    let cs: Vec<_> = conclusions.iter().map(|c| Theory::new(&sig, vec![c.clone()], Vec::new()).and_then(|t| t.compile())).collect::<Result<_, _>>()?;
    let mut out = vec![Entailment::NotRefuted; conclusions.len()];
    let mut open = conclusions.len();
    for s in Structures::new(&sig, 1..=budget.max_domain, DEFAULT_ENUMERATION_CAP)? {
        if open == 0 {
            break;
        }
        if !p.holds(&s) {
            continue;
        }
        for (i, c) in cs.iter().enumerate() {
            if out[i] == Entailment::NotRefuted && !c.holds(&s) {
                out[i] = Entailment::Countermodel(s.clone());
                open -= 1;
            }
        }
    }
    Ok(out)
}

/// Comparison of two model classes on every structure up to a size.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivalenceReport {
    pub max_domain: usize,
    pub structures_checked: u64,
    /// First model of the left side that is not a model of the right side.
    pub left_not_right: Option<Structure>,
    /// First model of the right side that is not a model of the left side.
    pub right_not_left: Option<Structure>,
}

impl EquivalenceReport {
    pub fn equivalent(&self) -> bool {
        self.left_not_right.is_none() && self.right_not_left.is_none()
    }
}

impl fmt::Display for EquivalenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.equivalent() {
            write!(f, "equivalent on all {} structures of size at most {}", self.structures_checked, self.max_domain)
        } else {
            write!(f, "NOT equivalent within size {}", self.max_domain)?;
            if let Some(s) = &self.left_not_right {
                write!(f, "; input model that fails the output on domain {:?}", s.domain().iter().map(|e| e.0).collect::<Vec<_>>())?;
            }
            if let Some(s) = &self.right_not_left {
                write!(f, "; output model that fails the input on domain {:?}", s.domain().iter().map(|e| e.0).collect::<Vec<_>>())?;
            }
            Ok(())
        }
    }
}

/// Compares the models of two theories on every structure over their joint
/// signature with at most `max_domain` elements.
pub fn bounded_equivalence(left: &Theory, right: &Theory, max_domain: usize) -> Result<EquivalenceReport, RewriteError> {
    let mut sig = left.signature().clone();
    sig.merge(right.signature())?;
    let l = left.with_signature(&sig)?.compile()?;
    let r = right.with_signature(&sig)?.compile()?;
    let mut report = EquivalenceReport { max_domain, structures_checked: 0, left_not_right: None, right_not_left: None };
    for s in Structures::new(&sig, 1..=max_domain, DEFAULT_ENUMERATION_CAP)? {
        report.structures_checked += 1;
        let (a, b) = (l.holds(&s), r.holds(&s));
        if a && !b && report.left_not_right.is_none() {
            report.left_not_right = Some(s);
        } else if b && !a && report.right_not_left.is_none() {
            report.right_not_left = Some(s);
        }
    }
    Ok(report)
}

/// [`bounded_equivalence`] for two rule sets.
pub fn bounded_rule_equivalence(left: &[Rule], right: &[Rule], max_domain: usize) -> Result<EquivalenceReport, RewriteError> {
    bounded_equivalence(&Theory::from_rules(left)?, &Theory::from_rules(right)?, max_domain)
}

/// A rewrite result in printable form: the output rules as a rule file,
/// preceded by a commented header.
#[derive(Clone, Debug)]
pub struct RewriteReport {
    pub target: String,
    pub input: Vec<Rule>,
    pub output: Vec<Rule>,
    pub residuals: Vec<Rule>,
    pub notes: Vec<String>,
    pub equivalence: EquivalenceReport,
}

impl fmt::Display for RewriteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# rewrite target: {}", self.target)?;
        writeln!(f, "# equivalence: {}", self.equivalence)?;
        writeln!(f, "# input:")?;
        for r in &self.input {
            writeln!(f, "#   {r}")?;
        }
        for n in &self.notes {
            writeln!(f, "# note: {n}")?;
        }
        if !self.residuals.is_empty() {
            writeln!(f, "# residual rules outside the target class:")?;
        }
        for r in &self.residuals {
            writeln!(f, "{r}")?;
        }
        if !self.output.is_empty() {
            writeln!(f, "# output:")?;
        }
        for r in &self.output {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::{parse_rule, Signature};

    fn rules(ts: &[&str]) -> Vec<Rule> {
        let mut sig = Signature::new();
        ts.iter().map(|t| parse_rule(t, &mut sig).unwrap()).collect()
    }

    #[test]
    fn transitivity_does_not_entail_reflexivity() {
        let p = rules(&["R(x,y), R(y,z) -> R(x,z)"]);
        let c = rules(&["R(x,y) -> R(x,x)"]).pop().unwrap();
        let Entailment::Countermodel(s) = entails_bounded(&p, &c, &Budget::with_max_domain(2)).unwrap() else { panic!() };
        assert_eq!(s.size(), 2);
    }

    #[test]
    fn chained_implication_not_refuted() {
        let p = rules(&["R() -> S()", "S() -> T()"]);
        let c = rules(&["R() -> T()"]).pop().unwrap();
        assert_eq!(entails_bounded(&p, &c, &Budget::with_max_domain(1)).unwrap(), Entailment::NotRefuted);
        assert_eq!(entails_bounded(&p, &p[0], &Budget::with_max_domain(2)).unwrap(), Entailment::NotRefuted);
    }

    #[test]
    fn equivalence_report() {
        let a = rules(&["R(x,y) -> R(y,x)"]);
        let b = rules(&["R(y,x) -> R(x,y)"]);
        assert!(bounded_rule_equivalence(&a, &b, 2).unwrap().equivalent());
        let c = rules(&["R(x,y) -> R(x,x)"]);
        let rep = bounded_rule_equivalence(&a, &c, 2).unwrap();
        assert!(!rep.equivalent());
        assert!(rep.left_not_right.is_some() && rep.right_not_left.is_some());
    }
}
