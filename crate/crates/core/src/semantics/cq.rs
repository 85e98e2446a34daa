//! Conjunctive queries, with or without equality atoms.

use std::collections::BTreeSet;

use thiserror::Error;

use super::eval::{Assignment, EvalError};
use super::formula::Formula;
use super::matching::{compile_atoms, satisfiable, VarTable};
use crate::rules::Atom;
use crate::structures::Structure;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CqError {
    #[error("not a conjunctive query: {0}")]
    Shape(String),
    #[error("variable `{0}` is quantified twice")]
    Rebound(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// `∃ existentials. ⋀ atoms`, flattened.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cq {
    pub existentials: Vec<String>,
    pub atoms: Vec<Atom>,
}

impl Cq {
    /// Reads a formula built from atoms, `true`, `∧` and `∃`.
    pub fn from_formula(f: &Formula) -> Result<Cq, CqError> {
        let mut q = Cq { existentials: Vec::new(), atoms: Vec::new() };
        let mut bound = BTreeSet::new();
        q.absorb(f, &mut bound)?;
        Ok(q)
    }

    fn absorb(&mut self, f: &Formula, bound: &mut BTreeSet<String>) -> Result<(), CqError> {
        match f {
            Formula::True => Ok(()),
            Formula::Atom(a) => {
                self.atoms.push(a.clone());
                Ok(())
            }
            Formula::And(gs) => gs.iter().try_for_each(|g| self.absorb(g, bound)),
            Formula::Exists(v, g) => {
                if !bound.insert(v.clone()) {
                    return Err(CqError::Rebound(v.clone()));
                }
                self.existentials.push(v.clone());
                self.absorb(g, bound)
            }
            other => Err(CqError::Shape(other.to_string())),
        }
    }

    pub fn has_equality(&self) -> bool {
        self.atoms.iter().any(|a| !a.is_relational())
    }

    /// Free variables in order of first occurrence.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for a in &self.atoms {
            for v in a.vars() {
                if !self.existentials.iter().any(|e| e == v) && !out.iter().any(|o| o == v) {
                    out.push(v.to_string());
                }
            }
        }
        out
    }

    pub fn to_formula(&self) -> Formula {
        Formula::exists(&self.existentials, Formula::and(self.atoms.iter().cloned().map(Formula::Atom).collect()))
    }
}

/// Truth of a conjunctive query through the join engine.
pub fn eval_cq(s: &Structure, q: &Formula, asg: &Assignment) -> Result<bool, CqError> {
    let cq = Cq::from_formula(q)?;
    eval_cq_flat(s, &cq, asg)
}

pub fn eval_cq_flat(s: &Structure, cq: &Cq, asg: &Assignment) -> Result<bool, CqError> {
    let mut vars = VarTable::default();
    for v in cq.free_vars() {
        if !asg.contains_key(&v) {
            return Err(EvalError::UnboundVariable(v).into());
        }
        vars.slot(&v);
    }
    let free = vars.len();
    let atoms = compile_atoms(&cq.atoms, s.signature(), &mut vars)?;
    let mut binding = vec![None; vars.len()];
    for (i, v) in vars.names[..free].iter().enumerate() {
        let e = asg[v];
        if !s.contains_elem(e) {
            return Err(EvalError::OutsideDomain(v.clone()).into());
        }
        binding[i] = Some(e);
    }
    Ok(satisfiable(s, &atoms, &mut binding))
}
