//! A workbench for existential rule languages over finite relational structures.
//!
//! The crate is organised around the objects the model theory of generalized
//! dependencies quantifies over:
//!
//! * [`rules`]: syntax, parsing and the syntactic class hierarchy
//!   (GD, DED, ED, TGD, frontier-guarded, guarded, linear).
//! * [`structures`]: finite structures and the constructions that preservation
//!   properties are stated for (unions, disjoint unions, direct products,
//!   isomorphic unions, trivial and sharp structures).
//! * [`semantics`]: first-order evaluation, rule checking, conjunctive queries
//!   and the homomorphism variants (plain, pinned, strict, global).
//! * [`preservation`]: bounded counterexample search for the seven closure
//!   properties, with replayable certificates.
//! * [`rewriting`]: class-to-class rewriting pipelines whose logical
//!   consequence steps are replaced by bounded countermodel search.
//! * [`gnfo`]: guarded-negation recognition, relativization and the
//!   disjoint-union reduction sentence.
//! * [`fixtures`]: the worked examples, shipped as runnable checks.
//!
//! Every procedure that would need unbounded entailment is a semi-decision:
//! results either carry a certificate or say "nothing found within budget".

pub mod fixtures;
pub mod gnfo;
pub mod preservation;
pub mod rewriting;
pub mod rules;
pub mod semantics;
pub mod structures;

pub use preservation::{Budget, PreservationProperty, SearchMode, Verdict};
pub use rules::{parse_rule, parse_rule_set, Atom, HeadDisjunct, Rule, RuleClass, RuleSet, Signature, Term};
pub use semantics::{Formula, Theory};
pub use structures::{Elem, Structure};
