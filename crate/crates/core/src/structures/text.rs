//! Line-oriented structure files.
//!
//! ```text
//! @rel R/2, Q/0
//! @const c
//! domain: 1 2 3
//! const c = 1
//! R(1,2)
//! Q()
//! ```
//!
//! Numeric element names denote that element id; other names get fresh ids
//! above every numeric one, in order of appearance on the `domain:` line.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::{Elem, Structure, StructureError};
use crate::rules::Signature;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct StructureParseError {
    pub line: usize,
    pub message: String,
}

/// A parsed structure together with the names elements had in the file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedStructure {
    pub structure: Structure,
    pub names: BTreeMap<Elem, String>,
}

/// Parses a structure file. With `sig` given, every symbol must be declared
/// there; otherwise the signature is taken from directives and facts.
pub fn parse_structure(text: &str, sig: Option<&Signature>) -> Result<ParsedStructure, StructureParseError> {
    let fixed = sig.is_some();
    let mut sig = sig.cloned().unwrap_or_default();
    let mut domain_names: Option<Vec<String>> = None;
    let mut facts: Vec<(usize, String, Vec<String>)> = Vec::new();
    let mut consts: Vec<(usize, String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |m: String| StructureParseError { line, message: m };
        let l = raw.split('#').next().unwrap().trim();
        if l.is_empty() {
            continue;
        }
        if let Some(rest) = l.strip_prefix("@rel") {
            for item in rest.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()) {
                let (n, k) = item.split_once('/').ok_or_else(|| err(format!("expected NAME/ARITY, found `{item}`")))?;
                let k: usize = k.parse().map_err(|_| err(format!("invalid arity `{k}`")))?;
                if fixed && sig.arity(n) != Some(k) {
                    return Err(err(format!("relation `{n}/{k}` is not in the signature")));
                }
                sig.declare_relation(n, k).map_err(|e| err(e.to_string()))?;
            }
        } else if let Some(rest) = l.strip_prefix("@const") {
            for n in rest.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()) {
                if fixed && !sig.has_constant(n) {
                    return Err(err(format!("constant `{n}` is not in the signature")));
                }
                sig.declare_constant(n).map_err(|e| err(e.to_string()))?;
            }
        } else if let Some(rest) = l.strip_prefix("domain:") {
            if domain_names.is_some() {
                return Err(err("duplicate domain line".into()));
            }
            domain_names = Some(rest.split_whitespace().map(str::to_string).collect());
        } else if let Some(rest) = l.strip_prefix("const ") {
            let (n, v) = rest.split_once('=').ok_or_else(|| err("expected `const NAME = ELEMENT`".into()))?;
            consts.push((line, n.trim().to_string(), v.trim().to_string()));
        } else {
            let open = l.find('(').ok_or_else(|| err(format!("cannot read `{l}`")))?;
            if !l.ends_with(')') {
                return Err(err(format!("cannot read `{l}`")));
            }
            let name = l[..open].trim().to_string();
            let inner = &l[open + 1..l.len() - 1];
            let args: Vec<String> =
                if inner.trim().is_empty() { Vec::new() } else { inner.split(',').map(|a| a.trim().to_string()).collect() };
            facts.push((line, name, args));
        }
    }
    let domain_names = domain_names.ok_or(StructureParseError { line: 0, message: "missing `domain:` line".into() })?;
    let mut ids: BTreeMap<String, Elem> = BTreeMap::new();
    let mut next = domain_names.iter().filter_map(|n| n.parse::<u32>().ok()).max().map_or(0, |m| m + 1);
    for n in &domain_names {
        let e = match n.parse::<u32>() {
            Ok(v) => Elem(v),
            Err(_) => {
                next += 1;
                Elem(next - 1)
            }
        };
        if ids.insert(n.clone(), e).is_some() {
            return Err(StructureParseError { line: 0, message: format!("element `{n}` listed twice") });
        }
    }
    let lookup = |line: usize, n: &str| ids.get(n).copied().ok_or_else(|| StructureParseError { line, message: format!("undeclared element `{n}`") });
    let mut tuples = Vec::with_capacity(facts.len());
    for (line, name, args) in &facts {
        let t = args.iter().map(|a| lookup(*line, a)).collect::<Result<Vec<_>, _>>()?;
        match sig.arity(name) {
            Some(_) => {}
            None if !fixed => sig.declare_relation(name, t.len()).map_err(|e| StructureParseError { line: *line, message: e.to_string() })?,
            None => return Err(StructureParseError { line: *line, message: format!("unknown relation `{name}`") }),
        }
        tuples.push((*line, name.as_str(), t));
    }
    let mut cvals = Vec::new();
    for (line, n, v) in &consts {
        if !sig.has_constant(n) {
            if fixed {
                return Err(StructureParseError { line: *line, message: format!("unknown constant `{n}`") });
            }
            sig.declare_constant(n).map_err(|e| StructureParseError { line: *line, message: e.to_string() })?;
        }
        cvals.push((n.as_str(), lookup(*line, v)?));
    }
    // Report structure errors at the line of the first offending fact.
    for (line, name, t) in &tuples {
        let k = sig.arity(name).unwrap();
        if k != t.len() {
            return Err(StructureParseError { line: *line, message: StructureError::Arity { symbol: name.to_string(), arity: k, len: t.len() }.to_string() });
        }
    }
    let structure = Structure::new(sig, ids.values().copied(), tuples.into_iter().map(|(_, n, t)| (n, t)), cvals)
        .map_err(|e| StructureParseError { line: 0, message: e.to_string() })?;
    let names = ids.into_iter().map(|(n, e)| (e, n)).collect();
    Ok(ParsedStructure { structure, names })
}

/// Writes a structure with numeric element names; `parse_structure` reads it back exactly.
pub fn write_structure(s: &Structure) -> String {
    let mut out = String::new();
    let sig = s.signature();
    if !sig.relations().is_empty() {
        let rels: Vec<String> = sig.relations().iter().map(|(r, k)| format!("{r}/{k}")).collect();
        writeln!(out, "@rel {}", rels.join(", ")).unwrap();
    }
    if !sig.constants().is_empty() {
        writeln!(out, "@const {}", sig.constants().join(", ")).unwrap();
    }
    let dom: Vec<String> = s.domain().iter().map(|e| e.to_string()).collect();
    writeln!(out, "domain: {}", dom.join(" ")).unwrap();
    for (c, v) in sig.constants().iter().zip(s.constant_values()) {
        writeln!(out, "const {c} = {v}").unwrap();
    }
    for (r, t) in s.facts() {
        let args: Vec<String> = t.iter().map(|e| e.to_string()).collect();
        writeln!(out, "{r}({})", args.join(",")).unwrap();
    }
    out
}
