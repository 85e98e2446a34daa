//! Exhaustive enumeration of structures over `{1..n}`.
//!
//! Order: domain size ascending; within a size, the symbols form an
//! odometer with constants (by name) first and relations (by name) after,
//! the first symbol varying slowest. A relation's table is read as a bitmask
//! over the lexicographically ordered tuples of `{1..n}^k`, bit `i` standing
//! for the `i`-th tuple, and masks count upwards from the empty table.

use std::collections::BTreeSet;
use std::ops::{ControlFlow, RangeInclusive};
use std::sync::Arc;

use thiserror::Error;

use super::{Elem, Structure, Tuple};
use crate::rules::Signature;

/// Default ceiling on the number of structures an enumeration may produce.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnumerationError {
    #[error("enumeration would produce {count} structures, above the cap of {cap}")]
    TooMany { count: String, cap: u64 },
    #[error("relation `{relation}` has {cells} candidate tuples at this size; at most 62 are supported")]
    TableTooLarge { relation: String, cells: u128 },
    #[error("domain sizes start at 1")]
    ZeroSize,
}

/// What an odometer level assigns.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LevelSymbol {
    Constant(usize),
    Relation(usize),
}

/// Odometer levels in order: constants, then relations.
pub fn level_symbols(sig: &Signature) -> Vec<LevelSymbol> {
    (0..sig.constants().len()).map(LevelSymbol::Constant).chain((0..sig.relations().len()).map(LevelSymbol::Relation)).collect()
}

/// Number of structures over `{1..n}`, or `None` on overflow.
pub fn count_structures(sig: &Signature, n: usize) -> Option<u128> {
    let mut total: u128 = 1;
    for _ in sig.constants() {
        total = total.checked_mul(n as u128)?;
    }
    for (_, k) in sig.relations() {
        let cells = (n as u128).checked_pow(*k as u32)?;
        if cells >= 127 {
            return None;
        }
        total = total.checked_mul(1u128 << cells)?;
    }
    Some(total)
}

/// Hook for pruning an enumeration while it is being built.
pub trait StagedFilter {
    /// Called once `level` has been assigned (earlier levels fixed, later
    /// ones not yet meaningful). Returning false skips every completion.
    fn accept(&mut self, _level: usize, _partial: &Structure) -> bool {
        true
    }

    /// Called on a fully assigned structure before it is emitted.
    fn accept_complete(&mut self, _s: &Structure) -> bool {
        true
    }
}

impl StagedFilter for () {}

fn all_tuples(domain: &[Elem], k: usize) -> Vec<Tuple> {
    let mut out = vec![Vec::with_capacity(k)];
    for _ in 0..k {
        out = out.into_iter().flat_map(|t| domain.iter().map(move |e| {
            let mut t2 = t.clone();
            t2.push(*e);
            t2
        })).collect();
    }
    out
}

/// Per-size layout: for each level, its number of values and (for relations) its tuples.
struct Layout {
    levels: Vec<LevelSymbol>,
    limits: Vec<u64>,
    tuples: Vec<Vec<Tuple>>,
    domain: Vec<Elem>,
}

impl Layout {
    fn new(sig: &Signature, n: usize) -> Result<Layout, EnumerationError> {
        let domain: Vec<Elem> = (1..=n as u32).map(Elem).collect();
        let levels = level_symbols(sig);
        let mut limits = Vec::with_capacity(levels.len());
        let mut tuples = Vec::with_capacity(levels.len());
        for l in &levels {
            match *l {
                LevelSymbol::Constant(_) => {
                    limits.push(n as u64);
                    tuples.push(Vec::new());
                }
                LevelSymbol::Relation(i) => {
                    let (name, k) = &sig.relations()[i];
                    let cells = (n as u128).pow(*k as u32);
                    if cells > 62 {
                        return Err(EnumerationError::TableTooLarge { relation: name.clone(), cells });
                    }
                    limits.push(1u64 << cells);
                    tuples.push(all_tuples(&domain, *k));
                }
            }
        }
        Ok(Layout { levels, limits, tuples, domain })
    }

    fn empty_structure(&self, sig: &Arc<Signature>) -> Structure {
        Structure::from_parts_unchecked(
            sig.clone(),
            self.domain.iter().copied().collect(),
            vec![BTreeSet::new(); sig.relations().len()],
            vec![self.domain[0]; sig.constants().len()],
        )
    }

    fn set(&self, level: usize, value: u64, s: &mut Structure) {
        match self.levels[level] {
            LevelSymbol::Constant(i) => s.set_constant_at(i, self.domain[value as usize]),
            LevelSymbol::Relation(i) => {
                let table = s.table_mut(i);
                table.clear();
                for (b, t) in self.tuples[level].iter().enumerate() {
                    if value >> b & 1 == 1 {
                        table.insert(t.clone());
                    }
                }
            }
        }
    }
}

fn check_cap(sig: &Signature, sizes: &RangeInclusive<usize>, cap: u64) -> Result<(), EnumerationError> {
    if *sizes.start() == 0 {
        return Err(EnumerationError::ZeroSize);
    }
    let mut total: u128 = 0;
    for n in sizes.clone() {
        match count_structures(sig, n).and_then(|c| total.checked_add(c)) {
            Some(t) => total = t,
            None => return Err(EnumerationError::TooMany { count: "more than 2^127".into(), cap }),
        }
    }
    if total > cap as u128 {
        return Err(EnumerationError::TooMany { count: total.to_string(), cap });
    }
    Ok(())
}

/// Streams every structure over `sig` with domain `{1..n}`, `1 ≤ n ≤ max_size`.
///
/// Fails up front when the total would exceed [`DEFAULT_ENUMERATION_CAP`].
pub fn enumerate_structures(sig: &Signature, max_size: usize) -> Result<Structures, EnumerationError> {
    Structures::new(sig, 1..=max_size, DEFAULT_ENUMERATION_CAP)
}

/// Iterator over all structures for a range of domain sizes.
pub struct Structures {
    sig: Arc<Signature>,
    sizes: RangeInclusive<usize>,
    n: usize,
    layout: Option<Layout>,
    counters: Vec<u64>,
    current: Option<Structure>,
    done: bool,
}

impl Structures {
    pub fn new(sig: &Signature, sizes: RangeInclusive<usize>, cap: u64) -> Result<Structures, EnumerationError> {
        check_cap(sig, &sizes, cap)?;
        for n in sizes.clone() {
            Layout::new(sig, n)?;
        }
        let n = *sizes.start();
        let done = sizes.is_empty();
        Ok(Structures { sig: Arc::new(sig.clone()), sizes, n, layout: None, counters: Vec::new(), current: None, done })
    }

    fn start_size(&mut self) -> Structure {
        let layout = Layout::new(&self.sig, self.n).expect("checked in constructor");
        let mut s = layout.empty_structure(&self.sig);
        for l in 0..layout.levels.len() {
            layout.set(l, 0, &mut s);
        }
        self.counters = vec![0; layout.levels.len()];
        self.layout = Some(layout);
        s
    }
}

impl Iterator for Structures {
    type Item = Structure;

    fn next(&mut self) -> Option<Structure> {
        if self.done {
            return None;
        }
        let next = match self.current.take() {
            None => self.start_size(),
            Some(mut s) => {
                let layout = self.layout.as_ref().unwrap();
                let mut level = layout.levels.len();
                loop {
                    if level == 0 {
                        self.n += 1;
                        if self.n > *self.sizes.end() {
                            self.done = true;
                            return None;
                        }
                        break self.start_size();
                    }
                    level -= 1;
                    self.counters[level] += 1;
                    if self.counters[level] < layout.limits[level] {
                        layout.set(level, self.counters[level], &mut s);
                        for l in level + 1..layout.levels.len() {
                            self.counters[l] = 0;
                            layout.set(l, 0, &mut s);
                        }
                        break s;
                    }
                }
            }
        };
        self.current = Some(next.clone());
        Some(next)
    }
}

/// Depth-first enumeration with pruning, in the same order as [`Structures`].
///
/// `visit` sees each structure that passes the filter; returning
/// `ControlFlow::Break` stops the walk. No cap is applied: the caller bounds
/// the work through the filter or the visitor.
pub fn for_each_structure(
    sig: &Signature,
    sizes: RangeInclusive<usize>,
    filter: &mut dyn StagedFilter,
    visit: &mut dyn FnMut(&Structure) -> ControlFlow<()>,
) -> Result<ControlFlow<()>, EnumerationError> {
    if *sizes.start() == 0 {
        return Err(EnumerationError::ZeroSize);
    }
    let sig = Arc::new(sig.clone());
    for n in sizes {
        let layout = Layout::new(&sig, n)?;
        let mut s = layout.empty_structure(&sig);
        if walk(&layout, 0, &mut s, filter, visit).is_break() {
            return Ok(ControlFlow::Break(()));
        }
    }
    Ok(ControlFlow::Continue(()))
}

fn walk(
    layout: &Layout,
    level: usize,
    s: &mut Structure,
    filter: &mut dyn StagedFilter,
    visit: &mut dyn FnMut(&Structure) -> ControlFlow<()>,
) -> ControlFlow<()> {
    if level == layout.levels.len() {
        if filter.accept_complete(s) {
            return visit(s);
        }
        return ControlFlow::Continue(());
    }
    for v in 0..layout.limits[level] {
        layout.set(level, v, s);
        if filter.accept(level, s) {
            walk(layout, level + 1, s, filter, visit)?;
        }
    }
    ControlFlow::Continue(())
}
