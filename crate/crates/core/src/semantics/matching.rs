//! Backtracking join over conjunctions of atoms.
//!
//! Atoms are compiled against a signature: relation names become table
//! indices, constants become constant indices and variables become slots in
//! a binding vector.

use std::ops::ControlFlow;

use super::eval::EvalError;
use crate::rules::{Atom, Signature, Term};
use crate::structures::{Elem, Structure};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum CTerm {
    Var(usize),
    Const(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum CAtom {
    Rel { rel: usize, args: Vec<CTerm> },
    Eq(CTerm, CTerm),
}

/// Variable names and their slots.
#[derive(Clone, Debug, Default)]
pub(crate) struct VarTable {
    pub names: Vec<String>,
}

impl VarTable {
    pub fn slot(&mut self, name: &str) -> usize {
        match self.names.iter().position(|n| n == name) {
            Some(i) => i,
            None => {
                self.names.push(name.to_string());
                self.names.len() - 1
            }
        }
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }
}

fn compile_term(t: &Term, sig: &Signature, vars: &mut VarTable) -> Result<CTerm, EvalError> {
    match t {
        Term::Var(v) => Ok(CTerm::Var(vars.slot(v))),
        Term::Const(c) => sig.constant_index(c).map(CTerm::Const).ok_or_else(|| EvalError::UnknownConstant(c.clone())),
    }
}

pub(crate) fn compile_atom(a: &Atom, sig: &Signature, vars: &mut VarTable) -> Result<CAtom, EvalError> {
    match a {
        Atom::Rel { symbol, args } => {
            let rel = sig.relation_index(symbol).ok_or_else(|| EvalError::UnknownRelation(symbol.clone()))?;
            let arity = sig.relations()[rel].1;
            if arity != args.len() {
                return Err(EvalError::Arity { symbol: symbol.clone(), arity, used: args.len() });
            }
            let args = args.iter().map(|t| compile_term(t, sig, vars)).collect::<Result<_, _>>()?;
            Ok(CAtom::Rel { rel, args })
        }
        Atom::Eq(x, y) => Ok(CAtom::Eq(compile_term(x, sig, vars)?, compile_term(y, sig, vars)?)),
    }
}

pub(crate) fn compile_atoms(atoms: &[Atom], sig: &Signature, vars: &mut VarTable) -> Result<Vec<CAtom>, EvalError> {
    atoms.iter().map(|a| compile_atom(a, sig, vars)).collect()
}

fn value(s: &Structure, t: CTerm, binding: &[Option<Elem>]) -> Option<Elem> {
    match t {
        CTerm::Var(i) => binding[i],
        CTerm::Const(i) => Some(s.constant_values()[i]),
    }
}

/// Enumerates extensions of `binding` satisfying every atom in `atoms`, then
/// ranging every still-unbound slot of `extra` over the domain.
///
/// `visit` receives complete bindings; `Break` stops the search and is
/// propagated. On return `binding` is restored to its input state.
pub(crate) fn solve(
    s: &Structure,
    atoms: &[CAtom],
    binding: &mut Vec<Option<Elem>>,
    extra: &[usize],
    visit: &mut dyn FnMut(&[Option<Elem>]) -> ControlFlow<()>,
) -> ControlFlow<()> {
    let mut done = vec![false; atoms.len()];
    step(s, atoms, &mut done, binding, extra, visit)
}

fn step(
    s: &Structure,
    atoms: &[CAtom],
    done: &mut Vec<bool>,
    binding: &mut Vec<Option<Elem>>,
    extra: &[usize],
    visit: &mut dyn FnMut(&[Option<Elem>]) -> ControlFlow<()>,
) -> ControlFlow<()> {
    // Pick the next atom: fully bound first, then equalities with one bound
    // side, then the relational atom with the most bound arguments.
    let mut best: Option<(usize, usize)> = None;
    for (i, a) in atoms.iter().enumerate() {
        if done[i] {
            continue;
        }
        let score = match a {
            CAtom::Rel { args, .. } => {
                let bound = args.iter().filter(|t| value(s, **t, binding).is_some()).count();
                if bound == args.len() {
                    usize::MAX
                } else {
                    1 + bound
                }
            }
            CAtom::Eq(x, y) => match (value(s, *x, binding).is_some(), value(s, *y, binding).is_some()) {
                (true, true) => usize::MAX,
                (false, false) => 0,
                _ => usize::MAX - 1,
            },
        };
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((i, score));
        }
    }
    let Some((i, _)) = best else {
        return range_extra(s, binding, extra, 0, visit);
    };
    done[i] = true;
    let r = match &atoms[i] {
        CAtom::Eq(x, y) => match (value(s, *x, binding), value(s, *y, binding)) {
            (Some(a), Some(b)) => {
                if a == b {
                    step(s, atoms, done, binding, extra, visit)
                } else {
                    ControlFlow::Continue(())
                }
            }
            (Some(a), None) | (None, Some(a)) => {
                let CTerm::Var(slot) = (if value(s, *x, binding).is_none() { *x } else { *y }) else { unreachable!() };
                binding[slot] = Some(a);
                let r = step(s, atoms, done, binding, extra, visit);
                binding[slot] = None;
                r
            }
            (None, None) => {
                let (CTerm::Var(sx), CTerm::Var(sy)) = (*x, *y) else { unreachable!() };
                let mut r = ControlFlow::Continue(());
                for &e in s.domain() {
                    binding[sx] = Some(e);
                    binding[sy] = Some(e);
                    r = step(s, atoms, done, binding, extra, visit);
                    if r.is_break() {
                        break;
                    }
                }
                binding[sx] = None;
                binding[sy] = None;
                r
            }
        },
        CAtom::Rel { rel, args } => {
            let pattern: Vec<Option<Elem>> = args.iter().map(|t| value(s, *t, binding)).collect();
            let mut r = ControlFlow::Continue(());
            if pattern.iter().all(Option::is_some) {
                let t: Vec<Elem> = pattern.iter().map(|e| e.unwrap()).collect();
                if s.table(*rel).contains(&t) {
                    r = step(s, atoms, done, binding, extra, visit);
                }
            } else {
                let mut newly = Vec::with_capacity(args.len());
                'tuples: for tuple in s.table(*rel) {
                    newly.clear();
                    for (k, t) in args.iter().enumerate() {
                        let e = tuple[k];
                        match value(s, *t, binding) {
                            Some(v) if v != e => {
                                for &slot in &newly {
                                    binding[slot] = None;
                                }
                                continue 'tuples;
                            }
                            Some(_) => {}
                            None => {
                                let CTerm::Var(slot) = *t else { unreachable!() };
                                binding[slot] = Some(e);
                                newly.push(slot);
                            }
                        }
                    }
                    r = step(s, atoms, done, binding, extra, visit);
                    for &slot in &newly {
                        binding[slot] = None;
                    }
                    if r.is_break() {
                        break;
                    }
                }
            }
            r
        }
    };
    done[i] = false;
    r
}

fn range_extra(
    s: &Structure,
    binding: &mut Vec<Option<Elem>>,
    extra: &[usize],
    k: usize,
    visit: &mut dyn FnMut(&[Option<Elem>]) -> ControlFlow<()>,
) -> ControlFlow<()> {
    if k == extra.len() {
        return visit(binding);
    }
    let slot = extra[k];
    if binding[slot].is_some() {
        return range_extra(s, binding, extra, k + 1, visit);
    }
    for &e in s.domain() {
        binding[slot] = Some(e);
        if range_extra(s, binding, extra, k + 1, visit).is_break() {
            binding[slot] = None;
            return ControlFlow::Break(());
        }
    }
    binding[slot] = None;
    ControlFlow::Continue(())
}

/// Whether some extension of `binding` satisfies all atoms.
pub(crate) fn satisfiable(s: &Structure, atoms: &[CAtom], binding: &mut Vec<Option<Elem>>) -> bool {
    solve(s, atoms, binding, &[], &mut |_| ControlFlow::Break(())).is_break()
}
