//! Counterexample certificates: storage, a text format and independent replay.
//!
//! Replay does not reuse the search. It re-evaluates the theory with the
//! direct first-order evaluator and checks every recorded map against the
//! definition of the construction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use super::{PreservationProperty, Verdict};
use crate::rules::Rule;
use crate::semantics::{
    distinct_tuples, eval, eval_sentence, is_homomorphism, is_strict_homomorphism, Assignment, Failure, Formula, Theory,
};
use crate::structures::{parse_structure, write_structure, Elem, Structure, Tuple};

/// Everything needed to re-check a counterexample.
///
/// Named parts by property:
/// * GlobalHomPreimage: structures `model`, `preimage`; per checked tuple `i`
///   the tuples `source.i`, `image.i` and maps `forward.i`, `backward.i`.
/// * DirectProduct: structures `left`, `right`, `product`; projection maps
///   `left`, `right`.
/// * StrictHomImage: structures `model`, `image`; map `h`.
/// * StrictHomPreimage: structures `model`, `preimage`; map `h`.
/// * IsomorphicUnion: structures `model`, `union`; sets `G.i`; maps `iso.i`.
/// * DisjointUnion, Union: structures `left`, `right`, `union`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub property: PreservationProperty,
    pub structures: Vec<(String, Structure)>,
    pub maps: Vec<(String, BTreeMap<Elem, Elem>)>,
    pub sets: Vec<(String, BTreeSet<Elem>)>,
    pub tuples: Vec<(String, Tuple)>,
    /// The first conjunct of the theory failing in the constructed structure.
    pub failure: Failure,
}

impl Certificate {
    pub fn structure(&self, name: &str) -> Option<&Structure> {
        self.structures.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    pub fn map(&self, name: &str) -> Option<&BTreeMap<Elem, Elem>> {
        self.maps.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }

    pub fn set(&self, name: &str) -> Option<&BTreeSet<Elem>> {
        self.sets.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    pub fn tuple(&self, name: &str) -> Option<&Tuple> {
        self.tuples.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    /// The structure that fails the theory.
    pub fn result(&self) -> Option<&Structure> {
        let name = match self.property {
            PreservationProperty::GlobalHomPreimage | PreservationProperty::StrictHomPreimage => "preimage",
            PreservationProperty::DirectProduct => "product",
            PreservationProperty::StrictHomImage => "image",
            PreservationProperty::IsomorphicUnion | PreservationProperty::DisjointUnion | PreservationProperty::Union => "union",
        };
        self.structure(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("malformed certificate: {0}")]
    Malformed(String),
    #[error("certificate rejected: {0}")]
    Rejected(String),
}

fn need<'a, T>(x: Option<&'a T>, what: &str) -> Result<&'a T, ReplayError> {
    x.ok_or_else(|| ReplayError::Malformed(format!("missing {what}")))
}

fn reject(msg: impl Into<String>) -> ReplayError {
    ReplayError::Rejected(msg.into())
}

fn sentence_holds(s: &Structure, f: &Formula) -> Result<bool, ReplayError> {
    eval_sentence(s, f).map_err(|e| ReplayError::Malformed(e.to_string()))
}

fn image(t: &[Elem], m: &BTreeMap<Elem, Elem>) -> Option<Tuple> {
    t.iter().map(|e| m.get(e).copied()).collect()
}

/// Re-validates every claim of a certificate against `theory`.
pub fn replay(cert: &Certificate, theory: &Theory) -> Result<(), ReplayError> {
    let phi = theory.to_sentence();
    let sig = theory.signature();
    for (name, s) in &cert.structures {
        if s.signature() != sig {
            return Err(ReplayError::Malformed(format!("structure `{name}` is not over the theory's signature")));
        }
    }
    let model_ok = |name: &str| -> Result<(), ReplayError> {
        let s = need(cert.structure(name), &format!("structure `{name}`"))?;
        if sentence_holds(s, &phi)? {
            Ok(())
        } else {
            Err(reject(format!("`{name}` is not a model")))
        }
    };
    let result = need(cert.result(), "result structure")?;
    if sentence_holds(result, &phi)? {
        return Err(reject("the constructed structure is a model"));
    }
    check_failure(result, theory, &cert.failure)?;
    match cert.property {
        PreservationProperty::GlobalHomPreimage => {
            model_ok("model")?;
            let b = need(cert.structure("model"), "model")?;
            let dom: Vec<Elem> = result.domain().iter().copied().collect();
            let entries: Vec<usize> = (0..).take_while(|i| cert.tuple(&format!("source.{i}")).is_some()).collect();
            for ta in distinct_tuples(&dom) {
                let i = *entries
                    .iter()
                    .find(|i| cert.tuple(&format!("source.{i}")) == Some(&ta))
                    .ok_or_else(|| reject(format!("no witness for tuple {ta:?}")))?;
                let tb = need(cert.tuple(&format!("image.{i}")), "image tuple")?;
                let f = need(cert.map(&format!("forward.{i}")), "forward map")?;
                let g = need(cert.map(&format!("backward.{i}")), "backward map")?;
                if tb.len() != ta.len() || image(&ta, f).as_ref() != Some(tb) || image(tb, g).as_ref() != Some(&ta) {
                    return Err(reject(format!("pins of witness {i} are not respected")));
                }
                if !is_homomorphism(result, b, f) || !is_homomorphism(b, result, g) {
                    return Err(reject(format!("witness {i} is not a pair of homomorphisms")));
                }
            }
        }
        PreservationProperty::DirectProduct => {
            model_ok("left")?;
            model_ok("right")?;
            let l = need(cert.structure("left"), "left")?;
            let r = need(cert.structure("right"), "right")?;
            let pl = need(cert.map("left"), "left projection")?;
            let pr = need(cert.map("right"), "right projection")?;
            check_product(result, l, r, pl, pr)?;
        }
        PreservationProperty::StrictHomImage => {
            model_ok("model")?;
            let a = need(cert.structure("model"), "model")?;
            let h = need(cert.map("h"), "map h")?;
            if !is_strict_homomorphism(a, result, h) {
                return Err(reject("h is not a strict homomorphism"));
            }
            if h.values().copied().collect::<BTreeSet<_>>() != *result.domain() {
                return Err(reject("h is not onto"));
            }
        }
        PreservationProperty::StrictHomPreimage => {
            model_ok("model")?;
            let b = need(cert.structure("model"), "model")?;
            let h = need(cert.map("h"), "map h")?;
            if !is_strict_homomorphism(result, b, h) {
                return Err(reject("h is not a strict homomorphism"));
            }
        }
        PreservationProperty::IsomorphicUnion => {
            model_ok("model")?;
            let a = need(cert.structure("model"), "model")?;
            check_iso_union(cert, a, result)?;
        }
        PreservationProperty::DisjointUnion | PreservationProperty::Union => {
            model_ok("left")?;
            model_ok("right")?;
            let l = need(cert.structure("left"), "left")?;
            let r = need(cert.structure("right"), "right")?;
            if l.constant_values() != r.constant_values() || result.constant_values() != l.constant_values() {
                return Err(reject("constants differ"));
            }
            if cert.property == PreservationProperty::DisjointUnion {
                let overlap: BTreeSet<Elem> = l.domain().intersection(r.domain()).copied().collect();
                let inside = |t: &Tuple| t.iter().all(|e| overlap.contains(e));
                let on_overlap = |s: &Structure| s.facts().filter(|(_, t)| inside(t)).map(|(n, t)| (n.to_string(), t.clone())).collect::<BTreeSet<_>>();
                if on_overlap(l) != on_overlap(r) {
                    return Err(reject("the two structures differ on their overlap"));
                }
            }
            let dom: BTreeSet<Elem> = l.domain().union(r.domain()).copied().collect();
            let facts: BTreeSet<(String, Tuple)> = l.facts().chain(r.facts()).map(|(n, t)| (n.to_string(), t.clone())).collect();
            let got: BTreeSet<(String, Tuple)> = result.facts().map(|(n, t)| (n.to_string(), t.clone())).collect();
            if dom != *result.domain() || facts != got {
                return Err(reject("the union is not the union of the two structures"));
            }
        }
    }
    Ok(())
}

fn check_failure(s: &Structure, theory: &Theory, failure: &Failure) -> Result<(), ReplayError> {
    match failure {
        Failure::Sentence { index } => {
            let f = need(theory.sentences().get(*index), "failing sentence")?;
            if sentence_holds(s, f)? {
                return Err(reject("the recorded sentence holds"));
            }
        }
        Failure::Rule { index, assignment } => {
            let r: &Rule = need(theory.rules().get(*index), "failing rule")?;
            let universal = r.universal_vars();
            if universal.iter().any(|u| !assignment.contains_key(u)) || assignment.len() != universal.len() {
                return Err(ReplayError::Malformed("assignment does not cover the rule's universal variables".into()));
            }
            let body = Formula::and(r.body.iter().cloned().map(Formula::Atom).collect());
            let heads = Formula::or(
                r.heads.iter().map(|h| Formula::exists(&h.existentials, Formula::and(h.atoms.iter().cloned().map(Formula::Atom).collect()))).collect(),
            );
            let asg: Assignment = assignment.clone();
            let ev = |f: &Formula| eval(s, f, &asg).map_err(|e| ReplayError::Malformed(e.to_string()));
            if !ev(&body)? || ev(&heads)? {
                return Err(reject("the recorded assignment does not violate the rule"));
            }
        }
    }
    Ok(())
}

fn check_product(p: &Structure, l: &Structure, r: &Structure, pl: &BTreeMap<Elem, Elem>, pr: &BTreeMap<Elem, Elem>) -> Result<(), ReplayError> {
    let pairs: BTreeMap<Elem, (Elem, Elem)> = p
        .domain()
        .iter()
        .map(|e| Some((*e, (*pl.get(e)?, *pr.get(e)?))))
        .collect::<Option<_>>()
        .ok_or_else(|| reject("projections are not total"))?;
    let distinct: BTreeSet<(Elem, Elem)> = pairs.values().copied().collect();
    let expected: BTreeSet<(Elem, Elem)> = l.domain().iter().flat_map(|x| r.domain().iter().map(move |y| (*x, *y))).collect();
    if distinct.len() != pairs.len() || distinct != expected {
        return Err(reject("product elements are not the pairs of the factors"));
    }
    for (i, (c, (x, y))) in p.constant_values().iter().map(|c| (c, pairs[c])).enumerate() {
        let _ = c;
        if x != l.constant_values()[i] || y != r.constant_values()[i] {
            return Err(reject("product constants are not pairs of constants"));
        }
    }
    let dom: Vec<Elem> = p.domain().iter().copied().collect();
    for (i, (_, k)) in p.signature().relations().iter().enumerate() {
        let mut ts: Vec<Tuple> = vec![Vec::new()];
        for _ in 0..*k {
            ts = ts.into_iter().flat_map(|t| dom.iter().map(move |e| [t.as_slice(), &[*e]].concat())).collect();
        }
        for t in ts {
            let lt: Tuple = t.iter().map(|e| pairs[e].0).collect();
            let rt: Tuple = t.iter().map(|e| pairs[e].1).collect();
            if p.table(i).contains(&t) != (l.table(i).contains(&lt) && r.table(i).contains(&rt)) {
                return Err(reject(format!("product fact mismatch at {t:?}")));
            }
        }
    }
    Ok(())
}

fn check_iso_union(cert: &Certificate, a: &Structure, u: &Structure) -> Result<(), ReplayError> {
    let count = (0..).take_while(|i| cert.set(&format!("G.{i}")).is_some()).count();
    if count == 0 {
        return Err(ReplayError::Malformed("empty family of guarded sets".into()));
    }
    let mut dom = BTreeSet::new();
    let mut facts = BTreeSet::new();
    let mut fresh_used: BTreeSet<Elem> = BTreeSet::new();
    for i in 0..count {
        let x = cert.set(&format!("G.{i}")).unwrap();
        let iso = need(cert.map(&format!("iso.{i}")), "copy map")?;
        if !x.iter().all(|e| a.contains_elem(*e)) || !a.constant_values().iter().all(|c| x.contains(c)) {
            return Err(reject(format!("G.{i} is not a guarded set")));
        }
        if iso.keys().copied().collect::<BTreeSet<_>>() != *a.domain() {
            return Err(reject(format!("iso.{i} is not total on the model")));
        }
        for (e, v) in iso {
            if x.contains(e) {
                if e != v {
                    return Err(reject(format!("iso.{i} moves an anchored element")));
                }
            } else if a.contains_elem(*v) || !fresh_used.insert(*v) {
                return Err(reject(format!("iso.{i} reuses an element")));
            }
        }
        dom.extend(iso.values().copied());
        for (n, t) in a.facts() {
            facts.insert((n.to_string(), image(t, iso).unwrap()));
        }
    }
    let got: BTreeSet<(String, Tuple)> = u.facts().map(|(n, t)| (n.to_string(), t.clone())).collect();
    if dom != *u.domain() || facts != got || u.constant_values() != a.constant_values() {
        return Err(reject("the union is not the union of the recorded copies"));
    }
    Ok(())
}

/// Replays the certificate of a verdict; `Ok(false)` when it is rejected.
pub fn replay_verdict(verdict: &Verdict, rules: &[Rule]) -> Result<bool, ReplayError> {
    let cert = verdict.certificate.as_ref().ok_or_else(|| ReplayError::Malformed("verdict carries no certificate".into()))?;
    let theory = Theory::from_rules(rules).map_err(|e| ReplayError::Malformed(e.to_string()))?;
    match replay(cert, &theory) {
        Ok(()) => Ok(true),
        Err(ReplayError::Rejected(_)) => Ok(false),
        Err(e) => Err(e),
    }
}

fn elems(xs: impl IntoIterator<Item = Elem>) -> String {
    xs.into_iter().map(|e| e.to_string()).collect::<Vec<_>>().join(" ")
}

/// Text form: a `certificate` header, then `structure`, `map`, `set`,
/// `tuple` and `failure` sections, each closed by `end`.
pub fn write_certificate(c: &Certificate) -> String {
    let mut out = String::new();
    writeln!(out, "certificate {}", c.property).unwrap();
    for (n, s) in &c.structures {
        writeln!(out, "structure {n}").unwrap();
        out.push_str(&write_structure(s));
        writeln!(out, "end").unwrap();
    }
    for (n, m) in &c.maps {
        writeln!(out, "map {n}").unwrap();
        for (k, v) in m {
            writeln!(out, "{k} -> {v}").unwrap();
        }
        writeln!(out, "end").unwrap();
    }
    for (n, s) in &c.sets {
        writeln!(out, "set {n}\n{}\nend", elems(s.iter().copied())).unwrap();
    }
    for (n, t) in &c.tuples {
        writeln!(out, "tuple {n}\n{}\nend", elems(t.iter().copied())).unwrap();
    }
    match &c.failure {
        Failure::Sentence { index } => writeln!(out, "failure sentence {index}\nend").unwrap(),
        Failure::Rule { index, assignment } => {
            writeln!(out, "failure rule {index}").unwrap();
            for (v, e) in assignment {
                writeln!(out, "{v} = {e}").unwrap();
            }
            writeln!(out, "end").unwrap();
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct CertificateParseError {
    pub line: usize,
    pub message: String,
}

fn parse_elem(s: &str, line: usize) -> Result<Elem, CertificateParseError> {
    s.parse::<u32>().map(Elem).map_err(|_| CertificateParseError { line, message: format!("expected an element id, found `{s}`") })
}

/// Reads the format produced by [`write_certificate`].
pub fn parse_certificate(text: &str) -> Result<Certificate, CertificateParseError> {
    let lines: Vec<(usize, &str)> = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#')).collect();
    let err = |line: usize, m: &str| CertificateParseError { line, message: m.to_string() };
    let (first_line, header) = *lines.first().ok_or_else(|| err(0, "empty certificate"))?;
    let prop = header
        .strip_prefix("certificate ")
        .ok_or_else(|| err(first_line, "expected `certificate PROPERTY`"))?
        .trim()
        .parse::<PreservationProperty>()
        .map_err(|e| err(first_line, &e.to_string()))?;
    let mut c = Certificate { property: prop, structures: Vec::new(), maps: Vec::new(), sets: Vec::new(), tuples: Vec::new(), failure: Failure::Sentence { index: 0 } };
    let mut have_failure = false;
    let mut i = 1;
    while i < lines.len() {
        let (ln, head) = lines[i];
        let end = (i + 1..lines.len()).find(|j| lines[*j].1 == "end").ok_or_else(|| err(ln, "section is not closed by `end`"))?;
        let body: Vec<(usize, &str)> = lines[i + 1..end].to_vec();
        let mut words = head.split_whitespace();
        let kind = words.next().unwrap_or("");
        let name = words.next().ok_or_else(|| err(ln, "section needs a name"))?.to_string();
        match kind {
            "structure" => {
                let text: String = body.iter().map(|(_, l)| format!("{l}\n")).collect();
                let s = parse_structure(&text, None).map_err(|e| err(ln + e.line, &e.message))?;
                c.structures.push((name, s.structure));
            }
            "map" => {
                let mut m = BTreeMap::new();
                for (l, t) in body {
                    let (k, v) = t.split_once("->").ok_or_else(|| err(l, "expected `a -> b`"))?;
                    m.insert(parse_elem(k.trim(), l)?, parse_elem(v.trim(), l)?);
                }
                c.maps.push((name, m));
            }
            "set" | "tuple" => {
                let items: Vec<Elem> =
                    body.iter().flat_map(|(l, t)| t.split_whitespace().map(move |w| (*l, w))).map(|(l, w)| parse_elem(w, l)).collect::<Result<_, _>>()?;
                if kind == "set" {
                    c.sets.push((name, items.into_iter().collect()));
                } else {
                    c.tuples.push((name, items));
                }
            }
            "failure" => {
                let index: usize = words.next().and_then(|w| w.parse().ok()).ok_or_else(|| err(ln, "expected `failure rule|sentence INDEX`"))?;
                c.failure = match name.as_str() {
                    "sentence" => Failure::Sentence { index },
                    "rule" => {
                        let mut assignment = Assignment::new();
                        for (l, t) in body {
                            let (v, e) = t.split_once('=').ok_or_else(|| err(l, "expected `var = elem`"))?;
                            assignment.insert(v.trim().to_string(), parse_elem(e.trim(), l)?);
                        }
                        Failure::Rule { index, assignment }
                    }
                    _ => return Err(err(ln, "expected `failure rule` or `failure sentence`")),
                };
                have_failure = true;
            }
            _ => return Err(err(ln, &format!("unknown section `{kind}`"))),
        }
        i = end + 1;
    }
    if !have_failure {
        return Err(err(0, "missing failure section"));
    }
    Ok(c)
}
