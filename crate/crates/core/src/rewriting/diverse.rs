//! Tuple-generating dependencies to frontier-guarded ones through diverse
//! dependencies and their specializations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::preservation::Budget;
use crate::rules::{classify, covered_by_body_atom, signature_of, Atom, ClassFlag, HeadDisjunct, HeadGraph, Rule, Term};
use crate::semantics::{Formula, Theory};
use crate::structures::Structure;

use super::{bounded_equivalence, refute_each, Entailment, EquivalenceReport, RewriteError, RewriteReport};

/// Largest number of candidate substitutions [`specialization_set`] tries by default.
pub const DEFAULT_SPECIALIZATION_CAP: u64 = 1_000_000;

/// A tuple-generating rule that only fires when the listed terms denote
/// pairwise distinct elements.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DiverseDependency {
    pub base: Rule,
    pub una_terms: Vec<Term>,
}

impl DiverseDependency {
    /// Checks that `base` has one head disjunct, no equalities, and that the
    /// guard terms are distinct constants or universal variables of `base`.
    pub fn new(base: Rule, una_terms: Vec<Term>) -> Result<DiverseDependency, RewriteError> {
        base.validate()?;
        if base.heads.len() != 1 || !base.is_equality_free() {
            return Err(RewriteError::NotTgd(base.to_string()));
        }
        let universals = base.universal_vars();
        let mut seen = BTreeSet::new();
        for t in &una_terms {
            let ok = match t {
                Term::Var(v) => universals.contains(v),
                Term::Const(_) => true,
            };
            if !ok || !seen.insert(t) {
                return Err(RewriteError::NotTgd(format!("bad distinctness term `{t}` for {base}")));
            }
        }
        Ok(DiverseDependency { base, una_terms })
    }

    pub fn head(&self) -> &HeadDisjunct {
        &self.base.heads[0]
    }

    /// Pairwise disequations between the guard terms.
    pub fn disequations(&self) -> Vec<Formula> {
        let t = &self.una_terms;
        let mut out = Vec::new();
        for i in 0..t.len() {
            for j in i + 1..t.len() {
                out.push(Formula::not(Formula::eq(t[i].clone(), t[j].clone())));
            }
        }
        out
    }

    /// The universal closure of `guard & body -> exists y. head`.
    pub fn to_formula(&self) -> Formula {
        let mut ante = self.disequations();
        ante.extend(self.base.body.iter().cloned().map(Formula::Atom));
        let h = self.head();
        let head = Formula::exists(&h.existentials, Formula::And(h.atoms.iter().cloned().map(Formula::Atom).collect()));
        Formula::forall(&self.base.universal_vars(), Formula::implies(Formula::And(ante), head))
    }

    pub fn theory(&self) -> Result<Theory, RewriteError> {
        Ok(Theory::new(&self.base.signature()?, Vec::new(), vec![self.to_formula()])?)
    }

    /// The dependency with a specialization applied to its head.
    pub fn specialize(&self, s: &Substitution) -> DiverseDependency {
        let base = Rule { body: self.base.body.clone(), heads: vec![s.apply(self.head())], label: self.base.label.clone() };
        DiverseDependency { base, una_terms: self.una_terms.clone() }
    }
}

impl fmt::Display for DiverseDependency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.una_terms.iter().map(Term::to_string).collect();
        write!(f, "[distinct {}] {}", names.join(","), self.base)
    }
}

/// A map from existential variables to terms, identity elsewhere. Only
/// non-identity entries are stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Substitution(pub BTreeMap<String, Term>);

impl Substitution {
    pub fn identity() -> Substitution {
        Substitution::default()
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    /// Applies the map to a head disjunct. Existentials that no longer occur
    /// are dropped from the prefix.
    pub fn apply(&self, h: &HeadDisjunct) -> HeadDisjunct {
        let atoms: Vec<Atom> = h.atoms.iter().map(|a| a.substitute(&self.0)).collect();
        let existentials = h.existentials.iter().filter(|e| atoms.iter().any(|a| a.mentions_var(e))).cloned().collect();
        HeadDisjunct { existentials, atoms }
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(v, t)| format!("{v} -> {t}")).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Diverse dependencies equivalent to one rule, plus the branches that
/// equate distinct constants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiverseNormalization {
    pub diverse: Vec<DiverseDependency>,
    /// Branches with body equalities between distinct constants.
    pub residuals: Vec<Rule>,
}

/// Splits a tuple-generating rule by the equality pattern of its terms.
///
/// Every partition of the constants and universal variables gives one branch
/// in which each block is replaced by a representative (a constant when the
/// block has one). A branch whose block holds two distinct constants keeps
/// the equalities between them in its body and is returned as a residual.
pub fn normalize_diverse(r: &Rule) -> Result<DiverseNormalization, RewriteError> {
    if !classify(r).contains(ClassFlag::Tgd) {
        return Err(RewriteError::NotTgd(r.to_string()));
    }
    let mut terms: Vec<Term> = r.constants().into_iter().map(Term::Const).collect();
    terms.extend(r.universal_vars().into_iter().map(Term::Var));
    let mut out = DiverseNormalization { diverse: Vec::new(), residuals: Vec::new() };
    for blocks in partitions(terms.len()) {
        let mut sub = BTreeMap::new();
        let mut reps = Vec::new();
        let mut eqs = Vec::new();
        for block in &blocks {
            let members: Vec<&Term> = block.iter().map(|&i| &terms[i]).collect();
            let rep = members.iter().find(|t| !t.is_var()).copied().unwrap_or(members[0]).clone();
            for t in &members {
                match t {
                    Term::Var(v) if **t != rep => {
                        sub.insert(v.clone(), rep.clone());
                    }
                    Term::Const(_) if **t != rep => eqs.push(Atom::Eq(rep.clone(), (*t).clone())),
                    _ => {}
                }
            }
            reps.push(rep);
        }
        let mut rule = r.substitute_universal(&sub);
        if eqs.is_empty() {
            out.diverse.push(DiverseDependency { base: rule, una_terms: reps });
        } else {
            rule.body.extend(eqs);
            out.residuals.push(rule);
        }
    }
    Ok(out)
}

/// Set partitions of `0..n` as blocks in restricted-growth order.
fn partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    fn go(i: usize, n: usize, rgs: &mut Vec<usize>, blocks: usize, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == n {
            let mut bs = vec![Vec::new(); blocks];
            for (k, &b) in rgs.iter().enumerate() {
                bs[b].push(k);
            }
            out.push(bs);
            return;
        }
        for b in 0..=blocks {
            rgs.push(b);
            go(i + 1, n, rgs, blocks.max(b + 1), out);
            rgs.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, &mut Vec::new(), 0, &mut out);
    out
}

pub fn head_graph(d: &DiverseDependency) -> HeadGraph {
    HeadGraph::of(&d.head().existentials, &d.head().atoms)
}

/// Whether the universal variables of every head component occur together
/// in one body atom.
pub fn is_quasi_frontier_guarded(d: &DiverseDependency) -> bool {
    let g = head_graph(d);
    g.components.iter().all(|c| covered_by_body_atom(&d.base.body, &g.component_universals(c)))
}

/// All substitutions of existential variables by terms of `d` that make the
/// head quasi-frontier-guarded. Candidate terms are the existentials, then
/// the universal variables in order of occurrence, then the constants; the
/// first existential varies slowest.
pub fn specialization_set(d: &DiverseDependency, cap: u64) -> Result<Vec<Substitution>, RewriteError> {
    let ex = &d.head().existentials;
    let mut targets: Vec<Term> = ex.iter().cloned().map(Term::Var).collect();
    targets.extend(d.base.universal_vars().into_iter().map(Term::Var));
    targets.extend(d.base.constants().into_iter().map(Term::Const));
    let count = (targets.len() as u64).checked_pow(ex.len() as u32);
    if count.is_none_or(|c| c > cap) {
        let shown = count.map_or_else(|| format!("{}^{}", targets.len(), ex.len()), |c| c.to_string());
        return Err(RewriteError::Cap { count: shown, cap });
    }
    let mut out = Vec::new();
    let mut digits = vec![0usize; ex.len()];
    loop {
        let mut map = BTreeMap::new();
        for (e, &k) in ex.iter().zip(&digits) {
            if targets[k].as_var() != Some(e.as_str()) {
                map.insert(e.clone(), targets[k].clone());
            }
        }
        let s = Substitution(map);
        if is_quasi_frontier_guarded(&d.specialize(&s)) {
            out.push(s);
        }
        let Some(pos) = (0..digits.len()).rev().find(|&i| digits[i] + 1 < targets.len()) else { break };
        digits[pos] += 1;
        digits[pos + 1..].iter_mut().for_each(|k| *k = 0);
    }
    Ok(out)
}

/// `guard & body -> OR over s of exists y. s(head)`.
pub fn gamma_star(d: &DiverseDependency, specs: &[Substitution]) -> Formula {
    let mut ante = d.disequations();
    ante.extend(d.base.body.iter().cloned().map(Formula::Atom));
    let head = Formula::Or(
        specs
            .iter()
            .map(|s| {
                let h = s.apply(d.head());
                Formula::exists(&h.existentials, Formula::And(h.atoms.into_iter().map(Formula::Atom).collect()))
            })
            .collect(),
    );
    Formula::forall(&d.base.universal_vars(), Formula::implies(Formula::And(ante), head))
}

/// The star form with the distinctness guard moved into the head as a
/// disjunction of equalities, which makes it a rule.
pub fn gamma_dagger(d: &DiverseDependency, specs: &[Substitution]) -> Rule {
    let mut heads: Vec<HeadDisjunct> = specs.iter().map(|s| s.apply(d.head())).collect();
    let t = &d.una_terms;
    for i in 0..t.len() {
        for j in i + 1..t.len() {
            heads.push(HeadDisjunct::atoms_only(vec![Atom::Eq(t[i].clone(), t[j].clone())]));
        }
    }
    Rule { body: d.base.body.clone(), heads, label: d.base.label.clone() }
}

/// One tuple-generating rule `body -> exists y. s(head)` per specialization.
pub fn delta_set(d: &DiverseDependency, specs: &[Substitution]) -> Vec<Rule> {
    specs.iter().map(|s| Rule { body: d.base.body.clone(), heads: vec![s.apply(d.head())], label: d.base.label.clone() }).collect()
}

/// Splits a quasi-frontier-guarded rule into one frontier-guarded rule per
/// head component. Components share no existential variable, so the head
/// factors.
pub fn qfg_to_frontier_guarded(r: &Rule) -> Result<Vec<Rule>, RewriteError> {
    if !classify(r).contains(ClassFlag::QuasiFrontierGuarded) {
        return Err(RewriteError::NotQuasiFrontierGuarded(r.to_string()));
    }
    let h = &r.heads[0];
    let g = HeadGraph::of(&h.existentials, &h.atoms);
    if g.components.len() == 1 {
        return Ok(vec![r.clone()]);
    }
    let out = g
        .components
        .iter()
        .map(|c| {
            let head = HeadDisjunct::new(g.component_existentials(c), c.iter().map(|&i| h.atoms[i].clone()).collect());
            Rule { body: r.body.clone(), heads: vec![head], label: r.label.clone() }
        })
        .collect();
    Ok(out)
}

/// Every intermediate stage of [`tgd_to_fgtgd_bounded`].
#[derive(Clone, Debug)]
pub struct FgRewrite {
    pub input: Vec<Rule>,
    pub diverse: Vec<DiverseDependency>,
    /// Branches equating distinct constants, carried into the output as is.
    pub residuals: Vec<Rule>,
    /// Specializations of each diverse dependency, in the same order.
    pub specializations: Vec<Vec<Substitution>>,
    pub gamma_dagger: Vec<Rule>,
    pub delta: Vec<Rule>,
    /// Members of `delta` with no countermodel against `gamma_dagger`.
    pub kept: Vec<Rule>,
    pub refuted: Vec<(Rule, Structure)>,
    /// Frontier-guarded rules obtained by splitting `kept`.
    pub output: Vec<Rule>,
    pub notes: Vec<String>,
    /// Input against output plus residuals.
    pub equivalence: EquivalenceReport,
}

impl FgRewrite {
    pub fn report(&self) -> RewriteReport {
        RewriteReport {
            target: "frontier-guarded".into(),
            input: self.input.clone(),
            output: self.output.clone(),
            residuals: self.residuals.clone(),
            notes: self.notes.clone(),
            equivalence: self.equivalence.clone(),
        }
    }
}

/// Rewrites tuple-generating rules into frontier-guarded ones. Consequence
/// is replaced by countermodel search up to `budget.max_domain`, and the
/// result is compared with the input on all structures of that size.
pub fn tgd_to_fgtgd_bounded(rules: &[Rule], budget: &Budget) -> Result<FgRewrite, RewriteError> {
    tgd_to_fgtgd_with_cap(rules, budget, DEFAULT_SPECIALIZATION_CAP)
}

/// [`tgd_to_fgtgd_bounded`] with an explicit specialization cap.
pub fn tgd_to_fgtgd_with_cap(rules: &[Rule], budget: &Budget, cap: u64) -> Result<FgRewrite, RewriteError> {
    let mut diverse = Vec::new();
    let mut residuals = Vec::new();
    for r in rules {
        let n = normalize_diverse(r)?;
        diverse.extend(n.diverse);
        residuals.extend(n.residuals);
    }
    let mut notes = Vec::new();
    let mut specializations = Vec::new();
    let mut daggers = Vec::new();
    let mut delta = Vec::new();
    for d in &diverse {
        let specs = specialization_set(d, cap)?;
        if specs.is_empty() {
            notes.push(format!("no specialization of {d} is quasi-frontier-guarded"));
        }
        daggers.push(gamma_dagger(d, &specs));
        delta.extend(delta_set(d, &specs));
        specializations.push(specs);
    }
    let mut premises = daggers.clone();
    premises.extend(residuals.iter().cloned());
    let mut kept = Vec::new();
    let mut refuted = Vec::new();
    for (r, v) in delta.iter().zip(refute_each(&premises, &delta, budget)?) {
        match v {
            Entailment::NotRefuted => {
                if !kept.contains(r) {
                    kept.push(r.clone());
                }
            }
            Entailment::Countermodel(s) => refuted.push((r.clone(), s)),
        }
    }
    let mut output = Vec::new();
    for r in &kept {
        for f in qfg_to_frontier_guarded(r)? {
            if !output.contains(&f) {
                output.push(f);
            }
        }
    }
    let mut sig = signature_of(rules)?;
    for r in output.iter().chain(&residuals) {
        sig.absorb_rule(r)?;
    }
    let mut produced = output.clone();
    produced.extend(residuals.iter().cloned());
    let equivalence =
        bounded_equivalence(&Theory::new(&sig, rules.to_vec(), Vec::new())?, &Theory::new(&sig, produced, Vec::new())?, budget.max_domain)?;
    if !equivalence.equivalent() {
        notes.push("the output is not equivalent to the input within the tested size".into());
    }
    Ok(FgRewrite { input: rules.to_vec(), diverse, residuals, specializations, gamma_dagger: daggers, delta, kept, refuted, output, notes, equivalence })
}
