//! Disjunctive embedded dependencies to embedded dependencies.

use crate::preservation::Budget;
use crate::rules::{classify, ClassFlag, Rule};
use crate::structures::Structure;

use super::{bounded_rule_equivalence, refute_each, Entailment, EquivalenceReport, RewriteError};

/// One rule per head disjunct, each with the shared body.
pub fn split_ded(r: &Rule) -> Result<Vec<Rule>, RewriteError> {
    if !classify(r).contains(ClassFlag::Ded) {
        return Err(RewriteError::NotDed(r.to_string()));
    }
    Ok(r.heads.iter().map(|h| Rule { body: r.body.clone(), heads: vec![h.clone()], label: r.label.clone() }).collect())
}

/// Result of [`ded_to_ed_bounded`].
#[derive(Clone, Debug)]
pub struct DedToEd {
    /// Every split rule, in input order.
    pub split: Vec<Rule>,
    /// Split rules without a countermodel within the budget.
    pub candidate: Vec<Rule>,
    /// Split rules with a model of the input that violates them.
    pub refuted: Vec<(Rule, Structure)>,
    /// Candidate against input on all structures up to the budget size.
    pub report: EquivalenceReport,
}

impl DedToEd {
    /// The candidate, when it agrees with the input on every checked structure.
    pub fn verified(&self) -> Option<&[Rule]> {
        self.report.equivalent().then_some(self.candidate.as_slice())
    }
}

/// Keeps the split rules that the input entails up to the budget and compares
/// the result with the input.
pub fn ded_to_ed_bounded(rules: &[Rule], budget: &Budget) -> Result<DedToEd, RewriteError> {
    let mut split = Vec::new();
    for r in rules {
        split.extend(split_ded(r)?);
    }
    let verdicts = refute_each(rules, &split, budget)?;
    let mut candidate = Vec::new();
    let mut refuted = Vec::new();
    for (r, v) in split.iter().zip(verdicts) {
        match v {
            Entailment::NotRefuted => candidate.push(r.clone()),
            Entailment::Countermodel(s) => refuted.push((r.clone(), s)),
        }
    }
    let report = bounded_rule_equivalence(rules, &candidate, budget.max_domain)?;
    Ok(DedToEd { split, candidate, refuted, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::{parse_rule, Signature};

    fn rule(s: &str) -> Rule {
        parse_rule(s, &mut Signature::new()).unwrap()
    }

    #[test]
    fn split_shares_body() {
        let out = split_ded(&rule("R() -> S() | T()")).unwrap();
        assert_eq!(out, vec![rule("R() -> S()"), rule("R() -> T()")]);
        assert_eq!(split_ded(&rule("P(x) -> Q(x)")).unwrap(), vec![rule("P(x) -> Q(x)")]);
        assert!(matches!(split_ded(&rule("P(x) -> false")), Err(RewriteError::NotDed(_))));
        assert!(matches!(split_ded(&rule("P(x) -> Q(y)")), Err(RewriteError::NotDed(_))));
    }

    #[test]
    fn disjunction_without_products_fails() {
        let out = ded_to_ed_bounded(&[rule("R() -> S() | T()")], &Budget::default()).unwrap();
        assert!(out.candidate.is_empty());
        assert_eq!(out.refuted.len(), 2);
        assert!(!out.report.equivalent());
        assert!(out.verified().is_none());
    }

    #[test]
    fn ed_is_a_fixed_point() {
        let r = rule("R() -> S()");
        let out = ded_to_ed_bounded(&[r.clone()], &Budget::default()).unwrap();
        assert_eq!(out.candidate, vec![r]);
        assert!(out.report.equivalent());
    }
}
