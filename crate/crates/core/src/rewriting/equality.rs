//! Removing equality atoms from embedded dependencies.

use std::collections::BTreeMap;

use crate::rules::{Atom, HeadDisjunct, Rule, Term};

/// Result of [`eliminate_body_equalities`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BodyEqualities {
    pub rule: Rule,
    /// Equalities between distinct constant symbols; they stay in the body.
    pub flagged: Vec<Atom>,
}

/// Substitutes away body equalities with a variable side. Equalities `c = d`
/// between distinct constants cannot be removed this way and are kept.
pub fn eliminate_body_equalities(r: &Rule) -> BodyEqualities {
    let mut rule = r.clone();
    let mut flagged = Vec::new();
    loop {
        let Some(i) = rule.body.iter().position(|a| matches!(a, Atom::Eq(..)) && !flagged.contains(a)) else { break };
        let Atom::Eq(a, b) = rule.body.remove(i) else { unreachable!() };
        let (from, to) = match (&a, &b) {
            _ if a == b => continue,
            (_, Term::Var(y)) if a.is_var() => (y.clone(), a.clone()),
            (Term::Var(x), _) => (x.clone(), b.clone()),
            (_, Term::Var(y)) => (y.clone(), a.clone()),
            (Term::Const(_), Term::Const(_)) => {
                let eq = Atom::Eq(a, b);
                rule.body.insert(i, eq.clone());
                flagged.push(eq);
                continue;
            }
        };
        rule = rule.substitute_universal(&BTreeMap::from([(from, to)]));
    }
    BodyEqualities { rule, flagged }
}

/// Result of [`eliminate_head_equalities`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeadEqualities {
    /// Rules free of head equalities.
    pub rules: Vec<Rule>,
    /// Rules that still have head equalities between universal variables or
    /// constants. No tuple-generating rule expresses them.
    pub flagged: Vec<Rule>,
}

/// Removes head equalities that pin an existential variable by substituting
/// it away. For a single-disjunct rule, the remaining equalities do not
/// mention existentials and split off as separate rules `body -> t = u`,
/// which are flagged. A multi-disjunct rule with remaining equalities is
/// flagged whole.
pub fn eliminate_head_equalities(r: &Rule) -> HeadEqualities {
    let mut heads = Vec::new();
    for h in &r.heads {
        match pin_existentials(h) {
            Some(h) => heads.push(h),
            None => return HeadEqualities { rules: Vec::new(), flagged: Vec::new() },
        }
    }
    let rule = Rule { body: r.body.clone(), heads, label: r.label.clone() };
    let has_eq = |h: &HeadDisjunct| h.atoms.iter().any(|a| !a.is_relational());
    if !rule.heads.iter().any(has_eq) {
        return HeadEqualities { rules: vec![rule], flagged: Vec::new() };
    }
    if rule.heads.len() > 1 {
        return HeadEqualities { rules: Vec::new(), flagged: vec![rule] };
    }
    let h = &rule.heads[0];
    let (rel, eqs): (Vec<Atom>, Vec<Atom>) = h.atoms.iter().cloned().partition(Atom::is_relational);
    let mut rules = Vec::new();
    if !rel.is_empty() {
        let existentials = h.existentials.iter().filter(|e| rel.iter().any(|a| a.mentions_var(e))).cloned().collect();
        rules.push(Rule { body: rule.body.clone(), heads: vec![HeadDisjunct::new(existentials, rel)], label: rule.label.clone() });
    }
    let flagged = eqs.into_iter().map(|e| Rule { body: rule.body.clone(), heads: vec![HeadDisjunct::atoms_only(vec![e])], label: rule.label.clone() }).collect();
    HeadEqualities { rules, flagged }
}

/// Substitutes existentials fixed by an equality and drops trivial
/// equalities. Returns `None` when the disjunct becomes empty, that is,
/// valid.
fn pin_existentials(h: &HeadDisjunct) -> Option<HeadDisjunct> {
    let mut h = h.clone();
    loop {
        let ex = h.existentials.clone();
        let is_ex = |t: &Term| matches!(t, Term::Var(v) if ex.contains(v));
        let pos = h.atoms.iter().position(|a| match a {
            Atom::Eq(a, b) => a == b || is_ex(a) || is_ex(b),
            Atom::Rel { .. } => false,
        });
        let Some(i) = pos else { break };
        let Atom::Eq(a, b) = h.atoms.remove(i) else { unreachable!() };
        if a != b {
            let (e, t) = if is_ex(&a) { (a, b) } else { (b, a) };
            let e = e.name().to_string();
            let sub = BTreeMap::from([(e.clone(), t)]);
            h.atoms = h.atoms.iter().map(|x| x.substitute(&sub)).collect();
            h.existentials.retain(|x| *x != e);
        }
    }
    h.atoms.dedup();
    if h.atoms.is_empty() {
        return None;
    }
    let atoms = &h.atoms;
    h.existentials.retain(|e| atoms.iter().any(|a| a.mentions_var(e)));
    Some(h)
}
