//! Checking a rule on a structure.

use std::ops::ControlFlow;

use super::eval::{Assignment, EvalError};
use super::matching::{compile_atoms, satisfiable, solve, CAtom, VarTable};
use crate::rules::{Rule, Signature};
use crate::structures::{Elem, Structure};

/// Outcome of checking one rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleCheck {
    Satisfied,
    /// The lexicographically least assignment of the universal variables
    /// (ordered by first occurrence) under which the body holds and every
    /// head disjunct fails.
    Violated(Assignment),
}

impl RuleCheck {
    pub fn is_satisfied(&self) -> bool {
        matches!(self, RuleCheck::Satisfied)
    }
}

/// A rule compiled against a signature, for repeated checks.
#[derive(Clone, Debug)]
pub struct CompiledRule {
    rule: Rule,
    sig: Signature,
    universal: Vec<String>,
    slots: usize,
    body: Vec<CAtom>,
    heads: Vec<Vec<CAtom>>,
    head_only: Vec<usize>,
}

impl CompiledRule {
    pub fn new(rule: &Rule, sig: &Signature) -> Result<CompiledRule, EvalError> {
        let mut vars = VarTable::default();
        let universal = rule.universal_vars();
        for u in &universal {
            vars.slot(u);
        }
        let body = compile_atoms(&rule.body, sig, &mut vars)?;
        let body_vars: Vec<usize> = rule.body.iter().flat_map(|a| a.vars().map(|v| vars.get(v).unwrap()).collect::<Vec<_>>()).collect();
        let head_only = (0..universal.len()).filter(|i| !body_vars.contains(i)).collect();
        let mut heads = Vec::with_capacity(rule.heads.len());
        let mut slots = universal.len();
        for h in &rule.heads {
            let mut local = vars.clone();
            for e in &h.existentials {
                local.names.push(e.clone());
            }
            heads.push(compile_atoms(&h.atoms, sig, &mut local)?);
            slots = slots.max(local.len());
        }
        Ok(CompiledRule { rule: rule.clone(), sig: sig.clone(), universal, slots, body, heads, head_only })
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn source(&self) -> &Rule {
        &self.rule
    }

    fn head_holds(&self, s: &Structure, binding: &mut Vec<Option<Elem>>) -> bool {
        let u = self.universal.len();
        self.heads.iter().any(|h| {
            for slot in binding.iter_mut().skip(u) {
                *slot = None;
            }
            satisfiable(s, h, binding)
        })
    }

    /// Visits every violating assignment (as values in universal-variable order).
    fn violations(&self, s: &Structure, visit: &mut dyn FnMut(Vec<Elem>) -> ControlFlow<()>) {
        let u = self.universal.len();
        let mut binding = vec![None; self.slots];
        let body = &self.body;
        let mut scratch = vec![None; self.slots];
        let _ = solve(s, body, &mut binding, &self.head_only, &mut |b| {
            scratch[..u].copy_from_slice(&b[..u]);
            if self.head_holds(s, &mut scratch) {
                ControlFlow::Continue(())
            } else {
                visit(b[..u].iter().map(|e| e.expect("universal bound")).collect())
            }
        });
    }

    /// Whether `s` satisfies the rule. `s` must be over the compiled signature.
    pub fn holds(&self, s: &Structure) -> bool {
        let mut found = false;
        self.violations(s, &mut |_| {
            found = true;
            ControlFlow::Break(())
        });
        !found
    }

    pub fn check(&self, s: &Structure) -> RuleCheck {
        let mut least: Option<Vec<Elem>> = None;
        self.violations(s, &mut |v| {
            if least.as_ref().is_none_or(|l| v < *l) {
                least = Some(v);
            }
            ControlFlow::Continue(())
        });
        match least {
            None => RuleCheck::Satisfied,
            Some(v) => RuleCheck::Violated(self.universal.iter().cloned().zip(v).collect()),
        }
    }
}

/// Checks `r` on `s`, reporting the least violating assignment if any.
pub fn satisfies_rule(s: &Structure, r: &Rule) -> Result<RuleCheck, EvalError> {
    Ok(CompiledRule::new(r, s.signature())?.check(s))
}

/// Whether `s` is a model of every rule.
pub fn satisfies_rules(s: &Structure, rules: &[Rule]) -> Result<bool, EvalError> {
    for r in rules {
        if !CompiledRule::new(r, s.signature())?.holds(s) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::parse_rule;
    use crate::semantics::eval::eval_sentence;
    use crate::semantics::formula::rule_sentence;

    fn rule(t: &str) -> Rule {
        parse_rule(t, &mut Signature::new()).unwrap()
    }

    #[test]
    fn transitivity_violation_is_least() {
        let sig = Signature::from_parts([("R", 2)], []).unwrap();
        let s = Structure::from_ids(&sig, &[1, 2, 3], &[("R", &[1, 2]), ("R", &[2, 3]), ("R", &[3, 1])], &[]).unwrap();
        let r = rule("R(x,y), R(y,z) -> R(x,z)");
        let RuleCheck::Violated(a) = satisfies_rule(&s, &r).unwrap() else { panic!() };
        assert_eq!((a["x"], a["y"], a["z"]), (Elem(1), Elem(2), Elem(3)));
    }

    #[test]
    fn negative_constraint_on_empty_relation() {
        let sig = Signature::from_parts([("P", 1)], []).unwrap();
        let s = Structure::from_ids(&sig, &[1], &[], &[]).unwrap();
        assert!(satisfies_rule(&s, &rule("P(x) -> false")).unwrap().is_satisfied());
        let s = Structure::from_ids(&sig, &[1], &[("P", &[1])], &[]).unwrap();
        assert!(!satisfies_rule(&s, &rule("P(x) -> false")).unwrap().is_satisfied());
    }

    #[test]
    fn head_only_universals_range_over_domain() {
        let sig = Signature::from_parts([("P", 1), ("Q", 1)], []).unwrap();
        let s = Structure::from_ids(&sig, &[1, 2], &[("P", &[1]), ("Q", &[1])], &[]).unwrap();
        let r = rule("P(x) -> Q(y)");
        let RuleCheck::Violated(a) = satisfies_rule(&s, &r).unwrap() else { panic!() };
        assert_eq!(a["y"], Elem(2));
        assert_eq!(eval_sentence(&s, &rule_sentence(&r)).unwrap(), false);
    }

    #[test]
    fn empty_body_and_existentials() {
        let sig = Signature::from_parts([("B", 1)], []).unwrap();
        let s = Structure::from_ids(&sig, &[1], &[], &[]).unwrap();
        assert!(!satisfies_rule(&s, &rule("true -> exists x. B(x)")).unwrap().is_satisfied());
        let s = Structure::from_ids(&sig, &[1], &[("B", &[1])], &[]).unwrap();
        assert!(satisfies_rule(&s, &rule("true -> exists x. B(x)")).unwrap().is_satisfied());
    }

    #[test]
    fn equality_heads() {
        let sig = Signature::from_parts([("R", 2)], []).unwrap();
        let s = Structure::from_ids(&sig, &[1, 2], &[("R", &[1, 1])], &[]).unwrap();
        assert!(satisfies_rule(&s, &rule("R(x,y) -> x = y")).unwrap().is_satisfied());
        let s = Structure::from_ids(&sig, &[1, 2], &[("R", &[1, 2])], &[]).unwrap();
        assert!(!satisfies_rule(&s, &rule("R(x,y) -> x = y")).unwrap().is_satisfied());
    }
}
