//! Constructions on structures: substructures, unions, products and copies.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::{Elem, Structure, StructureError, Tuple};
use crate::rules::Signature;

/// The single element of the trivial structure, also the distinguished
/// element of the sharp structure.
pub const STAR: Elem = Elem(0);
/// The second element of the sharp structure.
pub const CIRCLE: Elem = Elem(1);

fn same_signature(a: &Structure, b: &Structure) -> Result<(), StructureError> {
    if a.signature() == b.signature() {
        Ok(())
    } else {
        Err(StructureError::SignatureMismatch)
    }
}

fn same_constants(a: &Structure, b: &Structure) -> Result<(), StructureError> {
    match a.constant_values().iter().zip(b.constant_values()).position(|(x, y)| x != y) {
        Some(i) => Err(StructureError::ConstantMismatch(a.signature().constants()[i].clone())),
        None => Ok(()),
    }
}

/// The substructure induced by `x`.
pub fn induced_substructure(s: &Structure, x: &BTreeSet<Elem>) -> Result<Structure, StructureError> {
    if x.is_empty() {
        return Err(StructureError::EmptyDomain);
    }
    if let Some(e) = x.iter().find(|e| !s.contains_elem(**e)) {
        return Err(StructureError::OutsideDomain(*e));
    }
    if let Some(i) = s.constant_values().iter().position(|c| !x.contains(c)) {
        return Err(StructureError::ConstantOutside(s.signature().constants()[i].clone()));
    }
    let tables = s.tables().iter().map(|t| t.iter().filter(|tu| tu.iter().all(|e| x.contains(e))).cloned().collect()).collect();
    Ok(Structure::from_parts_unchecked(s.signature_arc().clone(), x.clone(), tables, s.constant_values().to_vec()))
}

/// Union of two structures that agree on constants.
pub fn union(a: &Structure, b: &Structure) -> Result<Structure, StructureError> {
    same_signature(a, b)?;
    same_constants(a, b)?;
    let domain = a.domain().union(b.domain()).copied().collect();
    let tables = a.tables().iter().zip(b.tables()).map(|(x, y)| x.union(y).cloned().collect()).collect();
    Ok(Structure::from_parts_unchecked(a.signature_arc().clone(), domain, tables, a.constant_values().to_vec()))
}

/// Whether `a` and `b` may be joined as a disjoint union: same constants and
/// identical induced substructures on the shared elements. Nullary facts lie
/// inside every induced substructure, so they must agree even when the
/// domains are disjoint.
pub fn disjoint_union_compatible(a: &Structure, b: &Structure) -> bool {
    if a.signature() != b.signature() || same_constants(a, b).is_err() {
        return false;
    }
    let overlap: BTreeSet<Elem> = a.domain().intersection(b.domain()).copied().collect();
    let within = |tu: &Tuple| tu.iter().all(|e| overlap.contains(e));
    a.tables().iter().zip(b.tables()).all(|(x, y)| x.iter().filter(|t| within(t)).eq(y.iter().filter(|t| within(t))))
}

/// A direct product and the pair each of its elements stands for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Product {
    pub structure: Structure,
    pub pairs: BTreeMap<Elem, (Elem, Elem)>,
}

impl Product {
    pub fn elem_of(&self, a: Elem, b: Elem) -> Option<Elem> {
        self.pairs.iter().find(|(_, p)| **p == (a, b)).map(|(e, _)| *e)
    }
}

/// The direct product `a × b`. The pair of the i-th element of `a` and the
/// j-th element of `b` (in sorted order, from 0) gets id `i·|b| + j`.
pub fn direct_product(a: &Structure, b: &Structure) -> Result<Product, StructureError> {
    same_signature(a, b)?;
    let av: Vec<Elem> = a.domain().iter().copied().collect();
    let bv: Vec<Elem> = b.domain().iter().copied().collect();
    let nb = bv.len() as u32;
    let rank_a: BTreeMap<Elem, u32> = av.iter().enumerate().map(|(i, e)| (*e, i as u32)).collect();
    let rank_b: BTreeMap<Elem, u32> = bv.iter().enumerate().map(|(i, e)| (*e, i as u32)).collect();
    let id = |x: Elem, y: Elem| Elem(rank_a[&x] * nb + rank_b[&y]);
    let mut pairs = BTreeMap::new();
    for &x in &av {
        for &y in &bv {
            pairs.insert(id(x, y), (x, y));
        }
    }
    let tables = a
        .tables()
        .iter()
        .zip(b.tables())
        .map(|(ta, tb)| {
            let mut out = BTreeSet::new();
            for s in ta {
                for t in tb {
                    out.insert(s.iter().zip(t).map(|(x, y)| id(*x, *y)).collect::<Tuple>());
                }
            }
            out
        })
        .collect();
    let consts = a.constant_values().iter().zip(b.constant_values()).map(|(x, y)| id(*x, *y)).collect();
    let structure = Structure::from_parts_unchecked(a.signature_arc().clone(), pairs.keys().copied().collect(), tables, consts);
    Ok(Product { structure, pairs })
}

/// An iterated product with the component tuple of every element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductMany {
    pub structure: Structure,
    pub components: BTreeMap<Elem, Vec<Elem>>,
}

/// Left-nested product `((x0 × x1) × x2) × ...`.
pub fn product_many(xs: &[Structure]) -> Result<ProductMany, StructureError> {
    let (first, rest) = xs.split_first().ok_or(StructureError::EmptyFamily)?;
    let mut acc = ProductMany { structure: first.clone(), components: first.domain().iter().map(|e| (*e, vec![*e])).collect() };
    for x in rest {
        let p = direct_product(&acc.structure, x)?;
        let components = p
            .pairs
            .iter()
            .map(|(e, (l, r))| {
                let mut c = acc.components[l].clone();
                c.push(*r);
                (*e, c)
            })
            .collect();
        acc = ProductMany { structure: p.structure, components };
    }
    Ok(acc)
}

/// Monotone source of element ids never used before.
#[derive(Clone, Debug)]
pub struct FreshElems {
    next: u32,
}

impl FreshElems {
    pub fn starting_at(next: u32) -> FreshElems {
        FreshElems { next }
    }

    /// A source whose ids exceed every element of the given structures.
    pub fn above<'a>(structures: impl IntoIterator<Item = &'a Structure>) -> FreshElems {
        let max = structures.into_iter().map(|s| s.max_elem().0 + 1).max().unwrap_or(0);
        FreshElems { next: max }
    }

    pub fn ensure_above(&mut self, s: &Structure) {
        self.next = self.next.max(s.max_elem().0 + 1);
    }

    pub fn fresh(&mut self) -> Elem {
        let e = Elem(self.next);
        self.next += 1;
        e
    }
}

/// A subset of a domain containing every constant interpretation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GuardedSet(BTreeSet<Elem>);

impl GuardedSet {
    pub fn new(s: &Structure, elems: impl IntoIterator<Item = Elem>) -> Result<GuardedSet, StructureError> {
        let set: BTreeSet<Elem> = elems.into_iter().collect();
        if let Some(e) = set.iter().find(|e| !s.contains_elem(**e)) {
            return Err(StructureError::OutsideDomain(*e));
        }
        if let Some(i) = s.constant_values().iter().position(|c| !set.contains(c)) {
            return Err(StructureError::ConstantOutside(s.signature().constants()[i].clone()));
        }
        Ok(GuardedSet(set))
    }

    pub fn elems(&self) -> &BTreeSet<Elem> {
        &self.0
    }
}

/// An isomorphic copy of a structure that fixes an anchoring set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsoCopy {
    pub copy: Structure,
    pub iso: BTreeMap<Elem, Elem>,
}

/// Copies `s`, keeping the elements of `x` and renaming all others to fresh ids.
pub fn iso_copy(s: &Structure, x: &GuardedSet, fresh: &mut FreshElems) -> Result<IsoCopy, StructureError> {
    GuardedSet::new(s, x.0.iter().copied())?;
    fresh.ensure_above(s);
    let iso: BTreeMap<Elem, Elem> = s.domain().iter().map(|&e| (e, if x.0.contains(&e) { e } else { fresh.fresh() })).collect();
    Ok(IsoCopy { copy: s.rename(&iso), iso })
}

/// The union of anchored copies, with the copy for each guarded set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsoUnion {
    pub structure: Structure,
    pub copies: Vec<IsoCopy>,
}

impl IsoUnion {
    /// Maps every element of the union back to the element it copies.
    pub fn projection(&self) -> BTreeMap<Elem, Elem> {
        self.copies.iter().flat_map(|c| c.iso.iter().map(|(orig, copy)| (*copy, *orig))).collect()
    }
}

/// `⋃_{X ∈ g} s_X` where each `s_X` is an anchored copy of `s`.
pub fn isomorphic_union(s: &Structure, g: &[GuardedSet], fresh: &mut FreshElems) -> Result<IsoUnion, StructureError> {
    if g.is_empty() {
        return Err(StructureError::EmptyFamily);
    }
    let copies = g.iter().map(|x| iso_copy(s, x, fresh)).collect::<Result<Vec<_>, _>>()?;
    let mut structure = copies[0].copy.clone();
    for c in &copies[1..] {
        structure = union(&structure, &c.copy)?;
    }
    Ok(IsoUnion { structure, copies })
}

/// One element, every relation full, every constant on that element.
pub fn trivial_structure(sig: &Signature) -> Structure {
    let tables = sig.relations().iter().map(|(_, k)| BTreeSet::from([vec![STAR; *k]])).collect();
    Structure::from_parts_unchecked(Arc::new(sig.clone()), BTreeSet::from([STAR]), tables, vec![STAR; sig.constants().len()])
}

/// Two elements `∗, ∘`; every relation holds exactly the all-`∗` tuple and
/// every constant denotes `∗`.
pub fn sharp_structure(sig: &Signature) -> Structure {
    let tables = sig.relations().iter().map(|(_, k)| BTreeSet::from([vec![STAR; *k]])).collect();
    Structure::from_parts_unchecked(Arc::new(sig.clone()), BTreeSet::from([STAR, CIRCLE]), tables, vec![STAR; sig.constants().len()])
}

/// A structure expanded with fresh constants and their names.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expanded {
    pub structure: Structure,
    pub names: Vec<String>,
}

/// Names `$0, $1, ...` are used for the fresh constants, skipping any name
/// already present in the signature.
pub fn expand_with_constants(s: &Structure, elems: &[Elem]) -> Result<Expanded, StructureError> {
    if let Some(e) = elems.iter().find(|e| !s.contains_elem(**e)) {
        return Err(StructureError::OutsideDomain(*e));
    }
    let mut sig = s.signature().clone();
    let mut names = Vec::with_capacity(elems.len());
    let mut k = 0usize;
    for _ in elems {
        let name = loop {
            let cand = format!("${k}");
            k += 1;
            if sig.arity(&cand).is_none() && !sig.has_constant(&cand) {
                break cand;
            }
        };
        sig.declare_constant(&name).expect("fresh name");
        names.push(name);
    }
    let mut consts: Vec<(String, Elem)> = s.signature().constants().iter().cloned().zip(s.constant_values().iter().copied()).collect();
    consts.extend(names.iter().cloned().zip(elems.iter().copied()));
    let sig = Arc::new(sig);
    let mut values = vec![Elem(0); sig.constants().len()];
    for (n, e) in consts {
        values[sig.constant_index(&n).unwrap()] = e;
    }
    Ok(Expanded { structure: Structure::from_parts_unchecked(sig, s.domain().clone(), s.tables().to_vec(), values), names })
}
