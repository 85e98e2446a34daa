//! Grounding tests that decide whether a set of generalized dependencies is
//! equivalent to a set of disjunctive embedded dependencies.

use crate::rules::{signature_of, Rule};
use crate::semantics::{CompiledRule, TheoryError};
use crate::structures::{sharp_structure, trivial_structure, Structure};

use super::RewriteError;

fn holds_in(rules: &[Rule], build: fn(&crate::rules::Signature) -> Structure) -> Result<bool, RewriteError> {
    let sig = signature_of(rules)?;
    let s = build(&sig);
    for r in rules {
        if !CompiledRule::new(r, &sig).map_err(TheoryError::from)?.holds(&s) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Whether the one-element structure with every relation full is a model.
pub fn has_trivial_model(rules: &[Rule]) -> Result<bool, RewriteError> {
    holds_in(rules, trivial_structure)
}

/// Whether the two-element structure whose relations hold only on the
/// designated element is a model.
pub fn has_sharp_model(rules: &[Rule]) -> Result<bool, RewriteError> {
    holds_in(rules, sharp_structure)
}

/// A set of generalized dependencies is equivalent to a set of disjunctive
/// embedded dependencies exactly when it has both models above.
pub fn gd_to_ded_decidable(rules: &[Rule]) -> Result<bool, RewriteError> {
    Ok(has_trivial_model(rules)? && has_sharp_model(rules)?)
}
