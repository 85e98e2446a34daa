//! Bounded counterexample search for preservation properties.
//!
//! A rule set is preserved under a construction when every structure built
//! from models is again a model. The searches here look for a construction
//! that breaks this within a budget and report either a replayable
//! certificate or that nothing was found; they never claim preservation.

mod certificate;
mod search;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::rules::Rule;
use crate::semantics::{Theory, TheoryError};
use crate::structures::EnumerationError;

pub use certificate::{parse_certificate, replay, replay_verdict, write_certificate, Certificate, CertificateParseError, ReplayError};
pub use search::random_structure;

/// The closure properties that characterize the rule classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PreservationProperty {
    GlobalHomPreimage,
    DirectProduct,
    StrictHomImage,
    StrictHomPreimage,
    IsomorphicUnion,
    DisjointUnion,
    Union,
}

impl PreservationProperty {
    pub const ALL: [PreservationProperty; 7] = [
        PreservationProperty::GlobalHomPreimage,
        PreservationProperty::DirectProduct,
        PreservationProperty::StrictHomImage,
        PreservationProperty::StrictHomPreimage,
        PreservationProperty::IsomorphicUnion,
        PreservationProperty::DisjointUnion,
        PreservationProperty::Union,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PreservationProperty::GlobalHomPreimage => "GlobalHomPreimage",
            PreservationProperty::DirectProduct => "DirectProduct",
            PreservationProperty::StrictHomImage => "StrictHomImage",
            PreservationProperty::StrictHomPreimage => "StrictHomPreimage",
            PreservationProperty::IsomorphicUnion => "IsomorphicUnion",
            PreservationProperty::DisjointUnion => "DisjointUnion",
            PreservationProperty::Union => "Union",
        }
    }
}

impl fmt::Display for PreservationProperty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown preservation property `{0}`")]
pub struct UnknownProperty(pub String);

impl FromStr for PreservationProperty {
    type Err = UnknownProperty;

    /// Accepts the variant name in any case, with or without `-` or `_`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s.chars().filter(|c| *c != '-' && *c != '_').flat_map(char::to_lowercase).collect();
        PreservationProperty::ALL.into_iter().find(|p| p.name().to_lowercase() == norm).ok_or_else(|| UnknownProperty(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SearchMode {
    #[default]
    Exhaustive,
    Randomized,
}

/// Search limits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    /// Largest domain of the structures constructions start from.
    pub max_domain: usize,
    /// Most candidate constructions examined before giving up.
    pub max_pairs: u64,
    /// Largest family of guarded sets for isomorphic unions.
    pub max_guarded_family: usize,
    pub seed: u64,
    pub mode: SearchMode,
    /// Largest union examined by the union searches; `None` allows every
    /// union of two structures within `max_domain`.
    pub max_union: Option<usize>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_domain: 2, max_pairs: 1_000_000, max_guarded_family: 2, seed: 0, mode: SearchMode::Exhaustive, max_union: None }
    }
}

impl Budget {
    pub fn with_max_domain(max_domain: usize) -> Budget {
        Budget { max_domain, ..Budget::default() }
    }

    pub fn validate(&self) -> Result<(), PreservationError> {
        for (name, v) in [("max_domain", self.max_domain as u64), ("max_pairs", self.max_pairs), ("max_guarded_family", self.max_guarded_family as u64)] {
            if v == 0 {
                return Err(PreservationError::Budget(name));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PreservationError {
    #[error("budget field `{0}` must be at least 1")]
    Budget(&'static str),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error(transparent)]
    Enumeration(#[from] EnumerationError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    NoCounterexampleWithinBudget,
    Counterexample,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Stats {
    /// Structures built or enumerated, including rejected partial ones.
    pub structures_examined: u64,
    /// Candidate constructions tested against the theory.
    pub candidates: u64,
    /// Whether a limit stopped the search before it was complete.
    pub budget_exhausted: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub property: PreservationProperty,
    pub outcome: Outcome,
    pub certificate: Option<Certificate>,
    pub stats: Stats,
}

impl Verdict {
    pub fn is_counterexample(&self) -> bool {
        self.outcome == Outcome::Counterexample
    }
}

/// Searches for a counterexample to `prop` for the conjunction of `rules`.
pub fn check_preservation(rules: &[Rule], prop: PreservationProperty, budget: &Budget) -> Result<Verdict, PreservationError> {
    check_theory(&Theory::from_rules(rules)?, prop, budget)
}

/// Like [`check_preservation`] for a theory that may contain arbitrary sentences.
pub fn check_theory(theory: &Theory, prop: PreservationProperty, budget: &Budget) -> Result<Verdict, PreservationError> {
    budget.validate()?;
    search::run(theory, prop, budget)
}

/// Runs every property.
pub fn property_matrix(rules: &[Rule], budget: &Budget) -> Result<BTreeMap<PreservationProperty, Verdict>, PreservationError> {
    let theory = Theory::from_rules(rules)?;
    PreservationProperty::ALL.into_iter().map(|p| Ok((p, check_theory(&theory, p, budget)?))).collect()
}
