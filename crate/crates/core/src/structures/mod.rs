//! Finite relational structures.

mod enumerate;
mod ops;
mod text;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::rules::Signature;

pub use enumerate::{count_structures, enumerate_structures, for_each_structure, level_symbols, EnumerationError, LevelSymbol, StagedFilter, Structures, DEFAULT_ENUMERATION_CAP};
pub use ops::{
    direct_product, disjoint_union_compatible, expand_with_constants, induced_substructure, iso_copy, isomorphic_union, product_many,
    sharp_structure, trivial_structure, union, Expanded, FreshElems, GuardedSet, IsoCopy, IsoUnion, Product, ProductMany, CIRCLE, STAR,
};
pub use text::{parse_structure, write_structure, ParsedStructure, StructureParseError};

/// An opaque domain element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Elem(pub u32);

impl fmt::Display for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub type Tuple = Vec<Elem>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("the domain is empty")]
    EmptyDomain,
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("unknown constant `{0}`")]
    UnknownConstant(String),
    #[error("relation `{symbol}` has arity {arity}, tuple has length {len}")]
    Arity { symbol: String, arity: usize, len: usize },
    #[error("element {0} is not in the domain")]
    OutsideDomain(Elem),
    #[error("constant `{0}` has no interpretation")]
    MissingConstant(String),
    #[error("constant `{0}` is interpreted outside the chosen set")]
    ConstantOutside(String),
    #[error("structures are over different signatures")]
    SignatureMismatch,
    #[error("constant `{0}` is interpreted differently in the two structures")]
    ConstantMismatch(String),
    #[error("an empty family was given")]
    EmptyFamily,
}

/// A finite structure: nonempty domain, relation tables and constants.
///
/// Relation tables are indexed by the relation's position in the signature;
/// constant interpretations likewise.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Structure {
    sig: Arc<Signature>,
    domain: BTreeSet<Elem>,
    tables: Vec<BTreeSet<Tuple>>,
    consts: Vec<Elem>,
}

impl Structure {
    /// Builds a structure, checking every invariant.
    pub fn new<'a>(
        sig: impl Into<Arc<Signature>>,
        domain: impl IntoIterator<Item = Elem>,
        facts: impl IntoIterator<Item = (&'a str, Tuple)>,
        constants: impl IntoIterator<Item = (&'a str, Elem)>,
    ) -> Result<Structure, StructureError> {
        let sig = sig.into();
        let domain: BTreeSet<Elem> = domain.into_iter().collect();
        if domain.is_empty() {
            return Err(StructureError::EmptyDomain);
        }
        let mut tables = vec![BTreeSet::new(); sig.relations().len()];
        for (name, t) in facts {
            let i = sig.relation_index(name).ok_or_else(|| StructureError::UnknownRelation(name.to_string()))?;
            let arity = sig.relations()[i].1;
            if t.len() != arity {
                return Err(StructureError::Arity { symbol: name.to_string(), arity, len: t.len() });
            }
            if let Some(e) = t.iter().find(|e| !domain.contains(e)) {
                return Err(StructureError::OutsideDomain(*e));
            }
            tables[i].insert(t);
        }
        let mut consts: Vec<Option<Elem>> = vec![None; sig.constants().len()];
        for (name, e) in constants {
            let i = sig.constant_index(name).ok_or_else(|| StructureError::UnknownConstant(name.to_string()))?;
            if !domain.contains(&e) {
                return Err(StructureError::OutsideDomain(e));
            }
            consts[i] = Some(e);
        }
        let consts = consts
            .into_iter()
            .enumerate()
            .map(|(i, c)| c.ok_or_else(|| StructureError::MissingConstant(sig.constants()[i].clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Structure { sig, domain, tables, consts })
    }

    /// Shorthand with numeric elements, convenient for fixtures and tests.
    pub fn from_ids(
        sig: &Signature,
        domain: &[u32],
        facts: &[(&str, &[u32])],
        constants: &[(&str, u32)],
    ) -> Result<Structure, StructureError> {
        Structure::new(
            sig.clone(),
            domain.iter().map(|&d| Elem(d)),
            facts.iter().map(|(r, t)| (*r, t.iter().map(|&d| Elem(d)).collect())),
            constants.iter().map(|(c, d)| (*c, Elem(*d))),
        )
    }

    /// Assembles a structure from parts that are already known to be valid.
    pub(crate) fn from_parts_unchecked(sig: Arc<Signature>, domain: BTreeSet<Elem>, tables: Vec<BTreeSet<Tuple>>, consts: Vec<Elem>) -> Structure {
        debug_assert_eq!(tables.len(), sig.relations().len());
        debug_assert_eq!(consts.len(), sig.constants().len());
        Structure { sig, domain, tables, consts }
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn signature_arc(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn domain(&self) -> &BTreeSet<Elem> {
        &self.domain
    }

    pub fn size(&self) -> usize {
        self.domain.len()
    }

    pub fn contains_elem(&self, e: Elem) -> bool {
        self.domain.contains(&e)
    }

    pub fn max_elem(&self) -> Elem {
        *self.domain.iter().next_back().expect("nonempty domain")
    }

    pub fn tables(&self) -> &[BTreeSet<Tuple>] {
        &self.tables
    }

    pub fn table(&self, index: usize) -> &BTreeSet<Tuple> {
        &self.tables[index]
    }

    pub(crate) fn table_mut(&mut self, index: usize) -> &mut BTreeSet<Tuple> {
        &mut self.tables[index]
    }

    pub(crate) fn set_constant_at(&mut self, index: usize, e: Elem) {
        self.consts[index] = e;
    }

    pub fn relation(&self, name: &str) -> Option<&BTreeSet<Tuple>> {
        self.sig.relation_index(name).map(|i| &self.tables[i])
    }

    pub fn holds(&self, name: &str, tuple: &[Elem]) -> bool {
        self.relation(name).is_some_and(|t| t.contains(tuple))
    }

    /// Truth value of a nullary relation.
    pub fn flag(&self, name: &str) -> bool {
        self.holds(name, &[])
    }

    pub fn constant(&self, name: &str) -> Option<Elem> {
        self.sig.constant_index(name).map(|i| self.consts[i])
    }

    pub fn constant_values(&self) -> &[Elem] {
        &self.consts
    }

    /// Interpretations of all constants as a set.
    pub fn constant_elems(&self) -> BTreeSet<Elem> {
        self.consts.iter().copied().collect()
    }

    /// All facts as `(relation, tuple)` pairs in signature order.
    pub fn facts(&self) -> impl Iterator<Item = (&str, &Tuple)> {
        self.sig.relations().iter().zip(&self.tables).flat_map(|((r, _), t)| t.iter().map(move |tu| (r.as_str(), tu)))
    }

    pub fn fact_count(&self) -> usize {
        self.tables.iter().map(BTreeSet::len).sum()
    }

    /// Copy with one fact added.
    pub fn with_fact(&self, name: &str, tuple: Tuple) -> Result<Structure, StructureError> {
        let mut s = self.clone();
        let i = self.sig.relation_index(name).ok_or_else(|| StructureError::UnknownRelation(name.to_string()))?;
        let arity = self.sig.relations()[i].1;
        if tuple.len() != arity {
            return Err(StructureError::Arity { symbol: name.to_string(), arity, len: tuple.len() });
        }
        if let Some(e) = tuple.iter().find(|e| !self.domain.contains(e)) {
            return Err(StructureError::OutsideDomain(*e));
        }
        s.tables[i].insert(tuple);
        Ok(s)
    }

    /// Copy with one fact removed (no-op if absent).
    pub fn without_fact(&self, name: &str, tuple: &[Elem]) -> Result<Structure, StructureError> {
        let mut s = self.clone();
        let i = self.sig.relation_index(name).ok_or_else(|| StructureError::UnknownRelation(name.to_string()))?;
        s.tables[i].remove(tuple);
        Ok(s)
    }

    /// Reinterprets the structure over a signature that contains its own.
    /// New relations are empty; new constants are rejected.
    pub fn expand_signature(&self, sig: impl Into<Arc<Signature>>) -> Result<Structure, StructureError> {
        let sig = sig.into();
        if !self.sig.is_subsignature_of(&sig) {
            return Err(StructureError::SignatureMismatch);
        }
        let mut tables = vec![BTreeSet::new(); sig.relations().len()];
        for (i, (r, _)) in self.sig.relations().iter().enumerate() {
            tables[sig.relation_index(r).unwrap()] = self.tables[i].clone();
        }
        let mut consts = Vec::with_capacity(sig.constants().len());
        for c in sig.constants() {
            consts.push(self.constant(c).ok_or_else(|| StructureError::MissingConstant(c.clone()))?);
        }
        Ok(Structure { sig, domain: self.domain.clone(), tables, consts })
    }

    /// Forgets every symbol not in `sig`.
    pub fn reduct(&self, sig: impl Into<Arc<Signature>>) -> Result<Structure, StructureError> {
        let sig = sig.into();
        if !sig.is_subsignature_of(&self.sig) {
            return Err(StructureError::SignatureMismatch);
        }
        let tables = sig.relations().iter().map(|(r, _)| self.relation(r).unwrap().clone()).collect();
        let consts = sig.constants().iter().map(|c| self.constant(c).unwrap()).collect();
        Ok(Structure { sig, domain: self.domain.clone(), tables, consts })
    }

    /// Applies an injective renaming of elements (unmapped elements are kept).
    pub fn rename(&self, map: &BTreeMap<Elem, Elem>) -> Structure {
        let f = |e: &Elem| *map.get(e).unwrap_or(e);
        Structure {
            sig: self.sig.clone(),
            domain: self.domain.iter().map(f).collect(),
            tables: self.tables.iter().map(|t| t.iter().map(|tu| tu.iter().map(f).collect()).collect()).collect(),
            consts: self.consts.iter().map(f).collect(),
        }
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&write_structure(self))
    }
}
