//! First-order evaluation, rule checking and homomorphisms on finite structures.

mod cq;
mod eval;
mod formula;
mod hom;
pub(crate) mod matching;
mod rule_check;
mod theory;

pub use cq::{eval_cq, eval_cq_flat, Cq, CqError};
pub use eval::{eval, eval_atom, eval_sentence, Assignment, EvalError};
pub use formula::{parse_formula, parse_formulas, rename_bound_apart, rule_sentence, substitute_free, Formula, FormulaParseError};
pub use hom::{
    distinct_tuples, find_homomorphism, find_homomorphism_pinned, find_isomorphism, find_strict_homomorphism, is_globally_homomorphic,
    is_homomorphism, is_strict_homomorphism, mutual_hom_pinned, mutual_hom_pinned_witness, mutual_hom_via_expansion, GlobalEntry, GlobalHom,
    HomError, HomKind, HomWitness,
};
pub use rule_check::{satisfies_rule, satisfies_rules, CompiledRule, RuleCheck};
pub use theory::{CompiledTheory, Failure, ModelFilter, Theory, TheoryError};
