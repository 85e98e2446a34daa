//! Homomorphisms: plain, pinned, strict, onto, and global.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::structures::{expand_with_constants, Elem, Structure, Tuple};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HomKind {
    Plain,
    Strict,
}

/// A map between domains certifying a homomorphism.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomWitness {
    pub map: BTreeMap<Elem, Elem>,
    pub kind: HomKind,
    pub onto: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HomError {
    #[error("pinned tuples have lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("pinned element {0} is outside the domain")]
    OutsideDomain(Elem),
}

/// Whether `map` is total on `a`, respects constants and sends facts to facts.
pub fn is_homomorphism(a: &Structure, b: &Structure, map: &BTreeMap<Elem, Elem>) -> bool {
    if a.signature() != b.signature() {
        return false;
    }
    if !a.domain().iter().all(|e| map.get(e).is_some_and(|v| b.contains_elem(*v))) {
        return false;
    }
    if a.constant_values().iter().zip(b.constant_values()).any(|(x, y)| map[x] != *y) {
        return false;
    }
    a.tables().iter().zip(b.tables()).all(|(ta, tb)| ta.iter().all(|t| tb.contains(&t.iter().map(|e| map[e]).collect::<Tuple>())))
}

/// Additionally checks that membership is reflected: `t ∈ R^a` iff `map(t) ∈ R^b`
/// for every tuple `t` over the domain of `a`.
pub fn is_strict_homomorphism(a: &Structure, b: &Structure, map: &BTreeMap<Elem, Elem>) -> bool {
    if !is_homomorphism(a, b, map) {
        return false;
    }
    let dom: Vec<Elem> = a.domain().iter().copied().collect();
    a.signature().relations().iter().zip(a.tables().iter().zip(b.tables())).all(|((_, k), (ta, tb))| {
        all_tuples(&dom, *k).into_iter().all(|t| ta.contains(&t) || !tb.contains(&t.iter().map(|e| map[e]).collect::<Tuple>()))
    })
}

struct Search<'a> {
    a: &'a Structure,
    b: &'a Structure,
    order: Vec<Elem>,
    pinned: Vec<Option<Elem>>,
    pos: BTreeMap<Elem, usize>,
    /// Facts of `a` grouped by the position of their last element.
    checks: Vec<Vec<(usize, Tuple)>>,
    strict: bool,
    onto: bool,
    injective: bool,
    targets: Vec<Elem>,
}

impl<'a> Search<'a> {
    fn new(a: &'a Structure, b: &'a Structure, pins: &[(Elem, Elem)], strict: bool, onto: bool, injective: bool) -> Option<Search<'a>> {
        if a.signature() != b.signature() {
            return None;
        }
        let mut fixed: BTreeMap<Elem, Elem> = BTreeMap::new();
        let all_pins = a.constant_values().iter().copied().zip(b.constant_values().iter().copied()).chain(pins.iter().copied());
        for (x, y) in all_pins {
            if !a.contains_elem(x) || !b.contains_elem(y) {
                return None;
            }
            if let Some(prev) = fixed.insert(x, y) {
                if prev != y {
                    return None;
                }
            }
        }
        let mut degree: BTreeMap<Elem, usize> = a.domain().iter().map(|e| (*e, 0)).collect();
        for (_, t) in a.facts() {
            for e in t {
                *degree.get_mut(e).unwrap() += 1;
            }
        }
        let mut free: Vec<Elem> = a.domain().iter().copied().filter(|e| !fixed.contains_key(e)).collect();
        free.sort_by(|x, y| degree[y].cmp(&degree[x]).then(x.cmp(y)));
        let order: Vec<Elem> = fixed.keys().copied().chain(free).collect();
        let pinned = order.iter().map(|e| fixed.get(e).copied()).collect();
        let pos: BTreeMap<Elem, usize> = order.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        let mut checks = vec![Vec::new(); order.len()];
        for (ri, table) in a.tables().iter().enumerate() {
            for t in table {
                if let Some(last) = t.iter().map(|e| pos[e]).max() {
                    checks[last].push((ri, t.clone()));
                }
            }
        }
        Some(Search { a, b, order, pinned, pos, checks, strict, onto, injective, targets: b.domain().iter().copied().collect() })
    }

    fn nullary_ok(&self) -> bool {
        self.a.signature().relations().iter().enumerate().filter(|(_, (_, k))| *k == 0).all(|(i, _)| {
            let in_a = !self.a.table(i).is_empty();
            let in_b = !self.b.table(i).is_empty();
            (!in_a || in_b) && (!self.strict || in_a || !in_b)
        })
    }

    fn run(&self) -> Option<BTreeMap<Elem, Elem>> {
        if !self.nullary_ok() {
            return None;
        }
        if self.onto && self.order.len() < self.targets.len() {
            return None;
        }
        if self.injective && self.order.len() > self.targets.len() {
            return None;
        }
        let mut h: Vec<Elem> = Vec::with_capacity(self.order.len());
        let mut hits: BTreeMap<Elem, usize> = BTreeMap::new();
        if self.dfs(&mut h, &mut hits) {
            Some(self.order.iter().copied().zip(h).collect())
        } else {
            None
        }
    }

    fn image(&self, h: &[Elem], e: Elem) -> Elem {
        h[self.pos[&e]]
    }

    fn consistent(&self, h: &[Elem]) -> bool {
        let i = h.len() - 1;
        for (ri, t) in &self.checks[i] {
            let img: Tuple = t.iter().map(|e| self.image(h, *e)).collect();
            if !self.b.table(*ri).contains(&img) {
                return false;
            }
        }
        if self.strict {
            // every tuple over the assigned prefix that uses the newest element
            for (ri, (_, k)) in self.a.signature().relations().iter().enumerate() {
                if *k == 0 {
                    continue;
                }
                let mut idx = vec![0usize; *k];
                loop {
                    if idx.contains(&i) {
                        let img: Tuple = idx.iter().map(|&p| h[p]).collect();
                        if self.b.table(ri).contains(&img) {
                            let t: Tuple = idx.iter().map(|&p| self.order[p]).collect();
                            if !self.a.table(ri).contains(&t) {
                                return false;
                            }
                        }
                    }
                    let mut p = *k;
                    let mut wrapped = true;
                    while p > 0 {
                        p -= 1;
                        idx[p] += 1;
                        if idx[p] <= i {
                            wrapped = false;
                            break;
                        }
                        idx[p] = 0;
                    }
                    if wrapped {
                        break;
                    }
                }
            }
        }
        true
    }

    fn dfs(&self, h: &mut Vec<Elem>, hits: &mut BTreeMap<Elem, usize>) -> bool {
        let i = h.len();
        if i == self.order.len() {
            return !self.onto || hits.len() == self.targets.len();
        }
        if self.onto && self.targets.len() - hits.len() > self.order.len() - i {
            return false;
        }
        let candidates: Vec<Elem> = match self.pinned[i] {
            Some(v) => vec![v],
            None => self.targets.clone(),
        };
        for v in candidates {
            if self.injective && hits.contains_key(&v) {
                continue;
            }
            h.push(v);
            *hits.entry(v).or_insert(0) += 1;
            if self.consistent(h) && self.dfs(h, hits) {
                return true;
            }
            h.pop();
            let c = hits.get_mut(&v).unwrap();
            *c -= 1;
            if *c == 0 {
                hits.remove(&v);
            }
        }
        false
    }
}

/// Some homomorphism from `a` to `b`, if one exists.
pub fn find_homomorphism(a: &Structure, b: &Structure) -> Option<HomWitness> {
    find_homomorphism_pinned(a, b, &[])
}

/// Some homomorphism from `a` to `b` sending each `pins[i].0` to `pins[i].1`.
pub fn find_homomorphism_pinned(a: &Structure, b: &Structure, pins: &[(Elem, Elem)]) -> Option<HomWitness> {
    let map = Search::new(a, b, pins, false, false, false)?.run()?;
    let onto = map.values().collect::<BTreeSet<_>>().len() == b.size();
    Some(HomWitness { map, kind: HomKind::Plain, onto })
}

/// Some strict homomorphism from `a` into (or, with `require_onto`, onto) `b`.
pub fn find_strict_homomorphism(a: &Structure, b: &Structure, require_onto: bool) -> Option<HomWitness> {
    let map = Search::new(a, b, &[], true, require_onto, false)?.run()?;
    let onto = map.values().collect::<BTreeSet<_>>().len() == b.size();
    Some(HomWitness { map, kind: HomKind::Strict, onto })
}

/// An isomorphism from `a` onto `b`, if they are isomorphic.
pub fn find_isomorphism(a: &Structure, b: &Structure) -> Option<BTreeMap<Elem, Elem>> {
    if a.size() != b.size() || a.fact_count() != b.fact_count() {
        return None;
    }
    Search::new(a, b, &[], true, true, true)?.run()
}

/// Homomorphisms both ways between `(a, ta)` and `(b, tb)`, with the tuples
/// read as interpretations of fresh constants.
pub fn mutual_hom_pinned(a: &Structure, ta: &[Elem], b: &Structure, tb: &[Elem]) -> Result<bool, HomError> {
    Ok(mutual_hom_pinned_witness(a, ta, b, tb)?.is_some())
}

/// Like [`mutual_hom_pinned`], returning the two maps.
pub fn mutual_hom_pinned_witness(
    a: &Structure,
    ta: &[Elem],
    b: &Structure,
    tb: &[Elem],
) -> Result<Option<(BTreeMap<Elem, Elem>, BTreeMap<Elem, Elem>)>, HomError> {
    if ta.len() != tb.len() {
        return Err(HomError::LengthMismatch(ta.len(), tb.len()));
    }
    if let Some(e) = ta.iter().find(|e| !a.contains_elem(**e)) {
        return Err(HomError::OutsideDomain(*e));
    }
    if let Some(e) = tb.iter().find(|e| !b.contains_elem(**e)) {
        return Err(HomError::OutsideDomain(*e));
    }
    let fwd: Vec<(Elem, Elem)> = ta.iter().copied().zip(tb.iter().copied()).collect();
    let Some(f) = find_homomorphism_pinned(a, b, &fwd) else { return Ok(None) };
    let bwd: Vec<(Elem, Elem)> = tb.iter().copied().zip(ta.iter().copied()).collect();
    let Some(g) = find_homomorphism_pinned(b, a, &bwd) else { return Ok(None) };
    Ok(Some((f.map, g.map)))
}

/// Same question answered through explicit constant expansion; used to
/// cross-check the pinned search.
pub fn mutual_hom_via_expansion(a: &Structure, ta: &[Elem], b: &Structure, tb: &[Elem]) -> Result<bool, HomError> {
    if ta.len() != tb.len() {
        return Err(HomError::LengthMismatch(ta.len(), tb.len()));
    }
    let ea = expand_with_constants(a, ta).map_err(|_| HomError::OutsideDomain(ta[0]))?;
    let eb = expand_with_constants(b, tb).map_err(|_| HomError::OutsideDomain(tb[0]))?;
    Ok(find_homomorphism(&ea.structure, &eb.structure).is_some() && find_homomorphism(&eb.structure, &ea.structure).is_some())
}

/// One checked tuple of a global homomorphism with its image and the two maps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalEntry {
    pub source: Tuple,
    pub image: Tuple,
    pub forward: BTreeMap<Elem, Elem>,
    pub backward: BTreeMap<Elem, Elem>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalHom {
    pub holds: bool,
    pub witnesses: Vec<GlobalEntry>,
    /// The first tuple for which no image exists.
    pub failing: Option<Tuple>,
}

/// Duplicate-free tuples over `dom` of every length `0..=|dom|`, by length
/// then lexicographically.
pub fn distinct_tuples(dom: &[Elem]) -> Vec<Tuple> {
    let mut out = vec![Vec::new()];
    let mut layer: Vec<Tuple> = vec![Vec::new()];
    for _ in 0..dom.len() {
        let mut next = Vec::new();
        for t in &layer {
            for e in dom {
                if !t.contains(e) {
                    let mut t2 = t.clone();
                    t2.push(*e);
                    next.push(t2);
                }
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

fn all_tuples(dom: &[Elem], k: usize) -> Vec<Tuple> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out.into_iter().flat_map(|t| dom.iter().map(move |e| [t.clone(), vec![*e]].concat())).collect();
    }
    out
}

/// Whether `a ⇒ b`: every duplicate-free tuple of `a` has an image tuple in
/// `b` with homomorphisms both ways respecting the pins.
pub fn is_globally_homomorphic(a: &Structure, b: &Structure) -> GlobalHom {
    let da: Vec<Elem> = a.domain().iter().copied().collect();
    let db: Vec<Elem> = b.domain().iter().copied().collect();
    let mut witnesses = Vec::new();
    for ta in distinct_tuples(&da) {
        let mut found = None;
        for tb in all_tuples(&db, ta.len()) {
            if let Ok(Some((f, g))) = mutual_hom_pinned_witness(a, &ta, b, &tb) {
                found = Some(GlobalEntry { source: ta.clone(), image: tb, forward: f, backward: g });
                break;
            }
        }
        match found {
            Some(w) => witnesses.push(w),
            None => return GlobalHom { holds: false, witnesses, failing: Some(ta) },
        }
    }
    GlobalHom { holds: true, witnesses, failing: None }
}
