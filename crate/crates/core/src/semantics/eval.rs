//! Direct recursive (Tarskian) evaluation of formulas on finite structures.

use std::collections::BTreeMap;

use thiserror::Error;

use super::formula::Formula;
use crate::rules::{Atom, Term};
use crate::structures::{Elem, Structure};

/// Values of variables.
pub type Assignment = BTreeMap<String, Elem>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("variable `{0}` is not assigned")]
    UnboundVariable(String),
    #[error("relation `{0}` is not in the structure's signature")]
    UnknownRelation(String),
    #[error("constant `{0}` is not in the structure's signature")]
    UnknownConstant(String),
    #[error("relation `{symbol}` has arity {arity}, used with {used} argument(s)")]
    Arity { symbol: String, arity: usize, used: usize },
    #[error("variable `{0}` is assigned an element outside the domain")]
    OutsideDomain(String),
}

fn term_value(s: &Structure, t: &Term, asg: &Assignment) -> Result<Elem, EvalError> {
    match t {
        Term::Var(v) => asg.get(v).copied().ok_or_else(|| EvalError::UnboundVariable(v.clone())),
        Term::Const(c) => s.constant(c).ok_or_else(|| EvalError::UnknownConstant(c.clone())),
    }
}

/// Truth of an atom under an assignment.
pub fn eval_atom(s: &Structure, a: &Atom, asg: &Assignment) -> Result<bool, EvalError> {
    match a {
        Atom::Rel { symbol, args } => {
            let arity = s.signature().arity(symbol).ok_or_else(|| EvalError::UnknownRelation(symbol.clone()))?;
            if arity != args.len() {
                return Err(EvalError::Arity { symbol: symbol.clone(), arity, used: args.len() });
            }
            let t = args.iter().map(|x| term_value(s, x, asg)).collect::<Result<Vec<_>, _>>()?;
            Ok(s.holds(symbol, &t))
        }
        Atom::Eq(x, y) => Ok(term_value(s, x, asg)? == term_value(s, y, asg)?),
    }
}

/// `s ⊨ f[asg]`, quantifiers ranging over the domain of `s`.
pub fn eval(s: &Structure, f: &Formula, asg: &Assignment) -> Result<bool, EvalError> {
    if let Some((v, _)) = asg.iter().find(|(_, e)| !s.contains_elem(**e)) {
        return Err(EvalError::OutsideDomain(v.clone()));
    }
    let mut asg = asg.clone();
    go(s, f, &mut asg)
}

fn go(s: &Structure, f: &Formula, asg: &mut Assignment) -> Result<bool, EvalError> {
    Ok(match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(a) => eval_atom(s, a, asg)?,
        Formula::Not(g) => !go(s, g, asg)?,
        Formula::And(gs) => {
            for g in gs {
                if !go(s, g, asg)? {
                    return Ok(false);
                }
            }
            true
        }
        Formula::Or(gs) => {
            for g in gs {
                if go(s, g, asg)? {
                    return Ok(true);
                }
            }
            false
        }
        Formula::Implies(a, b) => !go(s, a, asg)? || go(s, b, asg)?,
        Formula::Exists(v, g) | Formula::Forall(v, g) => {
            let want = matches!(f, Formula::Exists(_, _));
            let saved = asg.get(v).copied();
            let mut result = !want;
            for &e in s.domain() {
                asg.insert(v.clone(), e);
                let r = go(s, g, asg);
                match r {
                    Ok(r) if r == want => {
                        result = want;
                        break;
                    }
                    Ok(_) => {}
                    Err(e) => {
                        restore(asg, v, saved);
                        return Err(e);
                    }
                }
            }
            restore(asg, v, saved);
            result
        }
    })
}

fn restore(asg: &mut Assignment, v: &str, saved: Option<Elem>) {
    match saved {
        Some(e) => asg.insert(v.to_string(), e),
        None => asg.remove(v),
    };
}

/// Truth of a sentence.
pub fn eval_sentence(s: &Structure, f: &Formula) -> Result<bool, EvalError> {
    eval(s, f, &Assignment::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::Signature;
    use crate::semantics::formula::parse_formula;

    fn f(t: &str) -> Formula {
        parse_formula(t, &Default::default()).unwrap()
    }

    #[test]
    fn exists_not_q() {
        let sig = Signature::from_parts([("Q", 1)], []).unwrap();
        let a = Structure::from_ids(&sig, &[1, 2], &[("Q", &[1])], &[]).unwrap();
        let b = Structure::from_ids(&sig, &[1], &[("Q", &[1])], &[]).unwrap();
        let psi = f("(exists (x) (not (Q x)))");
        assert!(eval_sentence(&a, &psi).unwrap());
        assert!(!eval_sentence(&b, &psi).unwrap());
        assert!(eval_sentence(&a, &f("(forall (x) (= x x))")).unwrap());
    }

    #[test]
    fn errors() {
        let sig = Signature::from_parts([("Q", 1)], []).unwrap();
        let a = Structure::from_ids(&sig, &[1], &[], &[]).unwrap();
        assert_eq!(eval_sentence(&a, &f("(Q x)")), Err(EvalError::UnboundVariable("x".into())));
        assert_eq!(eval_sentence(&a, &f("(exists (x) (P x))")), Err(EvalError::UnknownRelation("P".into())));
        assert!(matches!(eval_sentence(&a, &f("(exists (x) (Q x x))")), Err(EvalError::Arity { .. })));
        assert_eq!(eval_sentence(&a, &f("(Q \"c\")")), Err(EvalError::UnknownConstant("c".into())));
    }

    #[test]
    fn shadowing_restores_outer_value() {
        let sig = Signature::from_parts([("Q", 1)], []).unwrap();
        let a = Structure::from_ids(&sig, &[1, 2], &[("Q", &[1])], &[]).unwrap();
        let mut asg = Assignment::new();
        asg.insert("x".into(), Elem(1));
        assert!(eval(&a, &f("(and (exists (x) (not (Q x))) (Q x))"), &asg).unwrap());
    }
}
