//! Theories: rule sets together with arbitrary first-order sentences.

use thiserror::Error;

use super::eval::{eval_sentence, Assignment, EvalError};
use super::formula::Formula;
use super::rule_check::{CompiledRule, RuleCheck};
use crate::rules::{Rule, RuleError, Signature, SignatureError};
use crate::structures::{level_symbols, LevelSymbol, StagedFilter, Structure};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TheoryError {
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Signature(#[from] SignatureError),
    #[error("formula has free variables: {0}")]
    NotASentence(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A conjunction of rules and sentences over one signature.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Theory {
    sig: Signature,
    rules: Vec<Rule>,
    sentences: Vec<Formula>,
}

/// The first conjunct of a theory that fails in a structure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Failure {
    Rule { index: usize, assignment: Assignment },
    Sentence { index: usize },
}

impl Theory {
    /// Builds a theory whose signature is `base` extended by every symbol used.
    pub fn new(base: &Signature, rules: Vec<Rule>, sentences: Vec<Formula>) -> Result<Theory, TheoryError> {
        let mut sig = base.clone();
        for r in &rules {
            r.validate()?;
            sig.absorb_rule(r)?;
        }
        for f in &sentences {
            if !f.is_sentence() {
                return Err(TheoryError::NotASentence(f.to_string()));
            }
            sig.merge(&f.signature()?)?;
        }
        Ok(Theory { sig, rules, sentences })
    }

    pub fn from_rules(rules: &[Rule]) -> Result<Theory, TheoryError> {
        Theory::new(&Signature::new(), rules.to_vec(), Vec::new())
    }

    pub fn from_sentence(f: Formula) -> Result<Theory, TheoryError> {
        Theory::new(&Signature::new(), Vec::new(), vec![f])
    }

    /// The same theory read over a larger signature.
    pub fn with_signature(&self, sig: &Signature) -> Result<Theory, TheoryError> {
        let mut s = sig.clone();
        s.merge(&self.sig)?;
        Ok(Theory { sig: s, ..self.clone() })
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn sentences(&self) -> &[Formula] {
        &self.sentences
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty() && self.sentences.is_empty()
    }

    /// The theory as one first-order sentence.
    pub fn to_sentence(&self) -> Formula {
        let mut parts: Vec<Formula> = self.rules.iter().map(super::formula::rule_sentence).collect();
        parts.extend(self.sentences.iter().cloned());
        Formula::and(parts)
    }

    pub fn compile(&self) -> Result<CompiledTheory, TheoryError> {
        let rules = self.rules.iter().map(|r| CompiledRule::new(r, &self.sig)).collect::<Result<_, _>>()?;
        Ok(CompiledTheory { sig: self.sig.clone(), rules, sentences: self.sentences.clone() })
    }

    pub fn holds(&self, s: &Structure) -> Result<bool, TheoryError> {
        Ok(self.first_failure(s)?.is_none())
    }

    pub fn first_failure(&self, s: &Structure) -> Result<Option<Failure>, TheoryError> {
        let s = self.adapt(s)?;
        Ok(self.compile()?.first_failure(&s))
    }

    fn adapt(&self, s: &Structure) -> Result<Structure, TheoryError> {
        if s.signature() == &self.sig {
            return Ok(s.clone());
        }
        s.reduct(self.sig.clone()).map_err(|_| TheoryError::Eval(EvalError::UnknownRelation(format!("{}", self.sig))))
    }
}

/// A theory prepared for repeated model checks.
#[derive(Clone, Debug)]
pub struct CompiledTheory {
    sig: Signature,
    rules: Vec<CompiledRule>,
    sentences: Vec<Formula>,
}

impl CompiledTheory {
    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    /// Whether `s` (over the compiled signature) is a model.
    pub fn holds(&self, s: &Structure) -> bool {
        self.rules.iter().all(|r| r.holds(s)) && self.sentences.iter().all(|f| eval_sentence(s, f).unwrap_or(false))
    }

    pub fn first_failure(&self, s: &Structure) -> Option<Failure> {
        for (index, r) in self.rules.iter().enumerate() {
            if let RuleCheck::Violated(assignment) = r.check(s) {
                return Some(Failure::Rule { index, assignment });
            }
        }
        self.sentences.iter().position(|f| !eval_sentence(s, f).unwrap_or(false)).map(|index| Failure::Sentence { index })
    }

    /// A pruning filter that keeps only models, checking each conjunct as
    /// soon as every symbol it mentions has been assigned.
    pub fn model_filter(&self) -> ModelFilter<'_> {
        let levels = level_symbols(&self.sig);
        let level_of = |rels: &mut dyn Iterator<Item = &String>, consts: &mut dyn Iterator<Item = &String>| -> Option<usize> {
            let mut m: Option<usize> = None;
            for r in rels {
                let i = self.sig.relation_index(r).expect("symbol in signature");
                let l = levels.iter().position(|x| *x == LevelSymbol::Relation(i)).unwrap();
                m = Some(m.map_or(l, |v| v.max(l)));
            }
            for c in consts {
                let i = self.sig.constant_index(c).expect("symbol in signature");
                let l = levels.iter().position(|x| *x == LevelSymbol::Constant(i)).unwrap();
                m = Some(m.map_or(l, |v| v.max(l)));
            }
            m
        };
        let mut at_level: Vec<Vec<Conjunct<'_>>> = vec![Vec::new(); levels.len()];
        let mut at_end: Vec<Conjunct<'_>> = Vec::new();
        let mut place = |l: Option<usize>, c| match l {
            Some(l) => at_level[l].push(c),
            None if !levels.is_empty() => at_level[0].push(c),
            None => at_end.push(c),
        };
        for r in &self.rules {
            let rel_names: Vec<String> = r.source().relations().into_keys().collect();
            let const_names: Vec<String> = r.source().constants().into_iter().collect();
            place(level_of(&mut rel_names.iter(), &mut const_names.iter()), Conjunct::Rule(r));
        }
        for f in &self.sentences {
            let parts: Vec<&Formula> = match f {
                Formula::And(gs) => gs.iter().collect(),
                g => vec![g],
            };
            for g in parts {
                let rel_names = g.relation_names();
                let const_names = g.constant_names();
                place(level_of(&mut rel_names.iter(), &mut const_names.iter()), Conjunct::Sentence(g));
            }
        }
        ModelFilter { at_level, at_end, rejected: 0 }
    }
}

#[derive(Clone, Copy)]
enum Conjunct<'a> {
    Rule(&'a CompiledRule),
    Sentence(&'a Formula),
}

impl Conjunct<'_> {
    fn holds(&self, s: &Structure) -> bool {
        match self {
            Conjunct::Rule(r) => r.holds(s),
            Conjunct::Sentence(f) => eval_sentence(s, f).unwrap_or(false),
        }
    }
}

/// Staged filter accepting exactly the models of a compiled theory.
pub struct ModelFilter<'a> {
    at_level: Vec<Vec<Conjunct<'a>>>,
    at_end: Vec<Conjunct<'a>>,
    /// Number of partial or complete structures rejected.
    pub rejected: u64,
}

impl StagedFilter for ModelFilter<'_> {
    fn accept(&mut self, level: usize, partial: &Structure) -> bool {
        let ok = self.at_level[level].iter().all(|c| c.holds(partial));
        if !ok {
            self.rejected += 1;
        }
        ok
    }

    fn accept_complete(&mut self, s: &Structure) -> bool {
        let ok = self.at_end.iter().all(|c| c.holds(s));
        if !ok {
            self.rejected += 1;
        }
        ok
    }
}

#[cfg(test)]
mod tests {
    use std::ops::ControlFlow;

    use super::*;
    use crate::rules::parse_rule;
    use crate::semantics::formula::parse_formula;
    use crate::structures::{enumerate_structures, for_each_structure};

    #[test]
    fn staged_models_match_plain_filtering() {
        let mut sig = Signature::new();
        let r1 = parse_rule("R(x,y), R(y,z) -> R(x,z)", &mut sig).unwrap();
        let r2 = parse_rule("P(x) -> exists y. R(x,y)", &mut sig).unwrap();
        let f = parse_formula("(and (exists (x) (P x)) (forall (x) (not (R x x))))", &Default::default()).unwrap();
        let t = Theory::new(&sig, vec![r1, r2], vec![f]).unwrap();
        let c = t.compile().unwrap();
        let plain: Vec<Structure> = enumerate_structures(t.signature(), 3).unwrap().filter(|s| c.holds(s)).collect();
        let mut staged = Vec::new();
        let mut filter = c.model_filter();
        let _ = for_each_structure(t.signature(), 1..=3, &mut filter, &mut |s| {
            staged.push(s.clone());
            ControlFlow::Continue(())
        })
        .unwrap();
        assert_eq!(plain, staged);
        assert!(!plain.is_empty());
    }

    #[test]
    fn symbol_free_sentence_on_empty_signature() {
        let t = Theory::from_sentence(parse_formula("(exists (x y) (not (= x y)))", &Default::default()).unwrap()).unwrap();
        let c = t.compile().unwrap();
        let mut n = 0;
        let mut filter = c.model_filter();
        let _ = for_each_structure(t.signature(), 1..=3, &mut filter, &mut |_| {
            n += 1;
            ControlFlow::Continue(())
        })
        .unwrap();
        assert_eq!(n, 2);
    }

    #[test]
    fn open_formula_rejected() {
        let f = parse_formula("(Q x)", &Default::default()).unwrap();
        assert!(matches!(Theory::from_sentence(f), Err(TheoryError::NotASentence(_))));
    }
}
