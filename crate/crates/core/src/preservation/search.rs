//! The per-property searches.
//!
//! Models are gathered first (all of them up to the domain bound in
//! exhaustive mode, a seeded sample otherwise); candidate constructions over
//! those models are then tried in a fixed order and the first one that is not
//! a model is reported.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::ControlFlow;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Budget, Certificate, Outcome, PreservationError, PreservationProperty, SearchMode, Stats, Verdict};
use crate::rules::Signature;
use crate::semantics::{is_globally_homomorphic, is_strict_homomorphism, CompiledTheory, ModelFilter, Theory};
use crate::structures::{
    direct_product, disjoint_union_compatible, for_each_structure, induced_substructure, isomorphic_union, union, Elem, FreshElems,
    GuardedSet, StagedFilter, Structure, Tuple,
};

/// Ceiling on enumeration nodes visited while collecting models.
const ENUMERATION_NODE_CAP: u64 = 1 << 26;
/// Ceiling on random structures drawn when sampling models.
const RANDOM_POOL_DRAWS: u64 = 20_000;

/// A structure over `{1..n}` with each fact present with probability 1/2 and
/// constants placed uniformly.
pub fn random_structure(sig: &Signature, n: usize, rng: &mut impl Rng) -> Structure {
    let dom: Vec<Elem> = (1..=n as u32).map(Elem).collect();
    let mut facts: Vec<(&str, Tuple)> = Vec::new();
    for (r, k) in sig.relations() {
        for t in tuples(&dom, *k) {
            if rng.gen_bool(0.5) {
                facts.push((r.as_str(), t));
            }
        }
    }
    let consts: Vec<(&str, Elem)> = sig.constants().iter().map(|c| (c.as_str(), dom[rng.gen_range(0..n)])).collect();
    Structure::new(sig.clone(), dom.iter().copied(), facts, consts).expect("well-formed random structure")
}

fn tuples(dom: &[Elem], k: usize) -> Vec<Tuple> {
    let mut out = vec![Vec::with_capacity(k)];
    for _ in 0..k {
        out = out.into_iter().flat_map(|t: Tuple| dom.iter().map(move |e| [t.as_slice(), &[*e]].concat())).collect();
    }
    out
}

struct Counting<'a, 'b> {
    inner: &'b mut ModelFilter<'a>,
    nodes: u64,
    exhausted: bool,
}

impl StagedFilter for Counting<'_, '_> {
    fn accept(&mut self, level: usize, partial: &Structure) -> bool {
        self.nodes += 1;
        if self.nodes > ENUMERATION_NODE_CAP {
            self.exhausted = true;
            return false;
        }
        self.inner.accept(level, partial)
    }

    fn accept_complete(&mut self, s: &Structure) -> bool {
        self.nodes += 1;
        self.inner.accept_complete(s)
    }
}

struct Ctx<'t> {
    prop: PreservationProperty,
    theory: CompiledTheory,
    sig: &'t Signature,
    budget: Budget,
    stats: Stats,
    rng: ChaCha8Rng,
    /// Models by domain size; index 0 is unused.
    pool: Vec<Vec<Structure>>,
}

impl Ctx<'_> {
    /// Counts one candidate; false once the budget is spent.
    fn tick(&mut self) -> bool {
        if self.stats.candidates >= self.budget.max_pairs {
            self.stats.budget_exhausted = true;
            return false;
        }
        self.stats.candidates += 1;
        self.stats.structures_examined += 1;
        true
    }

    fn random(&self) -> bool {
        self.budget.mode == SearchMode::Randomized
    }

    fn flat(&self) -> Vec<Structure> {
        self.pool.iter().flatten().cloned().collect()
    }

    fn certificate(&self, structures: Vec<(&str, Structure)>, result: &Structure) -> Certificate {
        Certificate {
            property: self.prop,
            structures: structures.into_iter().map(|(n, s)| (n.to_string(), s)).collect(),
            maps: Vec::new(),
            sets: Vec::new(),
            tuples: Vec::new(),
            failure: self.theory.first_failure(result).expect("counterexample is not a model"),
        }
    }

    fn collect_models(&mut self) -> Result<(), PreservationError> {
        let n_max = self.budget.max_domain;
        self.pool = vec![Vec::new(); n_max + 1];
        if self.random() {
            let draws = self.budget.max_pairs.min(RANDOM_POOL_DRAWS);
            for _ in 0..draws {
                let n = self.rng.gen_range(1..=n_max);
                let s = random_structure(self.sig, n, &mut self.rng);
                self.stats.structures_examined += 1;
                if self.theory.holds(&s) {
                    self.pool[n].push(s);
                }
            }
            return Ok(());
        }
        let theory = self.theory.clone();
        let mut inner = theory.model_filter();
        let mut filter = Counting { inner: &mut inner, nodes: 0, exhausted: false };
        for n in 1..=n_max {
            let mut found = Vec::new();
            let _ = for_each_structure(self.sig, n..=n, &mut filter, &mut |s| {
                found.push(s.clone());
                ControlFlow::Continue(())
            })?;
            self.pool[n] = found;
        }
        self.stats.structures_examined += filter.nodes;
        if filter.exhausted {
            self.stats.budget_exhausted = true;
        }
        Ok(())
    }
}

pub(super) fn run(theory: &Theory, prop: PreservationProperty, budget: &Budget) -> Result<Verdict, PreservationError> {
    let mut ctx = Ctx {
        prop,
        theory: theory.compile()?,
        sig: theory.signature(),
        budget: *budget,
        stats: Stats::default(),
        rng: ChaCha8Rng::seed_from_u64(budget.seed),
        pool: Vec::new(),
    };
    ctx.collect_models()?;
    let certificate = match prop {
        PreservationProperty::GlobalHomPreimage => global_hom_preimage(&mut ctx),
        PreservationProperty::DirectProduct => direct_products(&mut ctx),
        PreservationProperty::StrictHomImage => strict_images(&mut ctx),
        PreservationProperty::StrictHomPreimage => strict_preimages(&mut ctx),
        PreservationProperty::IsomorphicUnion => isomorphic_unions(&mut ctx),
        PreservationProperty::DisjointUnion => unions(&mut ctx, true),
        PreservationProperty::Union => unions(&mut ctx, false),
    };
    let outcome = if certificate.is_some() { Outcome::Counterexample } else { Outcome::NoCounterexampleWithinBudget };
    Ok(Verdict { property: prop, outcome, certificate, stats: ctx.stats })
}

/// Subsets of `s`'s domain containing every constant, by size then lexicographically.
fn guarded_sets(s: &Structure, include_full: bool) -> Vec<BTreeSet<Elem>> {
    let consts = s.constant_elems();
    let rest: Vec<Elem> = s.domain().iter().copied().filter(|e| !consts.contains(e)).collect();
    let mut out = Vec::new();
    for k in 0..=rest.len() {
        if k == rest.len() && !include_full {
            break;
        }
        for extra in rest.iter().copied().combinations(k) {
            let mut x = consts.clone();
            x.extend(extra);
            out.push(x);
        }
    }
    let mut out: Vec<BTreeSet<Elem>> = out.into_iter().collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    out
}

fn random_subset(rng: &mut ChaCha8Rng, s: &Structure) -> BTreeSet<Elem> {
    let consts = s.constant_elems();
    s.domain().iter().copied().filter(|e| consts.contains(e) || rng.gen_bool(0.5)).collect()
}

fn pick<'a>(rng: &mut ChaCha8Rng, xs: &'a [Structure]) -> &'a Structure {
    &xs[rng.gen_range(0..xs.len())]
}

// A ⇒ B forces A to embed into B as an induced substructure: pin the full
// tuple of A's elements; the forward map h and the backward map g satisfy
// g∘h = id, so h is injective and reflects every fact. Candidates are
// therefore the induced substructures of models, which makes the search
// complete up to isomorphism.
fn global_hom_preimage(ctx: &mut Ctx) -> Option<Certificate> {
    let flat = ctx.flat();
    if flat.is_empty() {
        return None;
    }
    let try_one = |ctx: &mut Ctx, b: &Structure, x: &BTreeSet<Elem>| -> Option<Certificate> {
        if x.is_empty() {
            return None;
        }
        let a = induced_substructure(b, x).ok()?;
        if ctx.theory.holds(&a) {
            return None;
        }
        let g = is_globally_homomorphic(&a, b);
        if !g.holds {
            return None;
        }
        let mut c = ctx.certificate(vec![("model", b.clone()), ("preimage", a.clone())], &a);
        for (i, w) in g.witnesses.into_iter().enumerate() {
            c.tuples.push((format!("source.{i}"), w.source));
            c.tuples.push((format!("image.{i}"), w.image));
            c.maps.push((format!("forward.{i}"), w.forward));
            c.maps.push((format!("backward.{i}"), w.backward));
        }
        Some(c)
    };
    if ctx.random() {
        while ctx.tick() {
            let b = pick(&mut ctx.rng, &flat).clone();
            let x = random_subset(&mut ctx.rng, &b);
            if let Some(c) = try_one(ctx, &b, &x) {
                return Some(c);
            }
        }
        return None;
    }
    for b in &flat {
        for x in guarded_sets(b, false) {
            if !ctx.tick() {
                return None;
            }
            if let Some(c) = try_one(ctx, b, &x) {
                return Some(c);
            }
        }
    }
    None
}

fn direct_products(ctx: &mut Ctx) -> Option<Certificate> {
    let flat = ctx.flat();
    if flat.is_empty() {
        return None;
    }
    let try_one = |ctx: &mut Ctx, a: &Structure, b: &Structure| -> Option<Certificate> {
        let p = direct_product(a, b).ok()?;
        if ctx.theory.holds(&p.structure) {
            return None;
        }
        let mut c = ctx.certificate(vec![("left", a.clone()), ("right", b.clone()), ("product", p.structure.clone())], &p.structure);
        c.maps.push(("left".into(), p.pairs.iter().map(|(e, (x, _))| (*e, *x)).collect()));
        c.maps.push(("right".into(), p.pairs.iter().map(|(e, (_, y))| (*e, *y)).collect()));
        Some(c)
    };
    if ctx.random() {
        while ctx.tick() {
            let a = pick(&mut ctx.rng, &flat).clone();
            let b = pick(&mut ctx.rng, &flat).clone();
            if let Some(c) = try_one(ctx, &a, &b) {
                return Some(c);
            }
        }
        return None;
    }
    for i in 0..flat.len() {
        for j in 0..=i {
            if !ctx.tick() {
                return None;
            }
            if let Some(c) = try_one(ctx, &flat[j], &flat[i]) {
                return Some(c);
            }
        }
    }
    None
}

/// Restricted growth strings of length `n`: set partitions with blocks
/// numbered by first occurrence, in lexicographic order.
fn partitions(n: usize) -> Vec<Vec<u32>> {
    fn go(n: usize, cur: &mut Vec<u32>, max: u32, out: &mut Vec<Vec<u32>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        let limit = if cur.is_empty() { 0 } else { max + 1 };
        for b in 0..=limit {
            cur.push(b);
            go(n, cur, max.max(b), out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(n, &mut Vec::new(), 0, &mut out);
    out
}

/// The image of `a` under the map sending its i-th element to `blocks[i] + 1`.
fn image_under(a: &Structure, blocks: &[u32]) -> (Structure, BTreeMap<Elem, Elem>) {
    let h: BTreeMap<Elem, Elem> = a.domain().iter().zip(blocks).map(|(e, b)| (*e, Elem(b + 1))).collect();
    let dom: BTreeSet<Elem> = h.values().copied().collect();
    let facts: Vec<(&str, Tuple)> = a.facts().map(|(r, t)| (r, t.iter().map(|e| h[e]).collect())).collect();
    let consts: Vec<(&str, Elem)> = a.signature().constants().iter().zip(a.constant_values()).map(|(c, v)| (c.as_str(), h[v])).collect();
    (Structure::new(a.signature().clone(), dom, facts, consts).expect("image is well-formed"), h)
}

fn strict_images(ctx: &mut Ctx) -> Option<Certificate> {
    let flat = ctx.flat();
    if flat.is_empty() {
        return None;
    }
    let try_one = |ctx: &mut Ctx, a: &Structure, blocks: &[u32]| -> Option<Certificate> {
        let (b, h) = image_under(a, blocks);
        if !is_strict_homomorphism(a, &b, &h) || ctx.theory.holds(&b) {
            return None;
        }
        let mut c = ctx.certificate(vec![("model", a.clone()), ("image", b.clone())], &b);
        c.maps.push(("h".into(), h));
        Some(c)
    };
    if ctx.random() {
        while ctx.tick() {
            let a = pick(&mut ctx.rng, &flat).clone();
            let raw: Vec<u32> = (0..a.size()).map(|_| ctx.rng.gen_range(0..a.size() as u32)).collect();
            let mut renum: BTreeMap<u32, u32> = BTreeMap::new();
            let blocks: Vec<u32> = raw
                .iter()
                .map(|r| {
                    let next = renum.len() as u32;
                    *renum.entry(*r).or_insert(next)
                })
                .collect();
            if let Some(c) = try_one(ctx, &a, &blocks) {
                return Some(c);
            }
        }
        return None;
    }
    for a in &flat {
        for blocks in partitions(a.size()) {
            if !ctx.tick() {
                return None;
            }
            if let Some(c) = try_one(ctx, a, &blocks) {
                return Some(c);
            }
        }
    }
    None
}

/// The strict preimage of `b` along `h: {1..n} → B`, with constant `c`
/// placed on `choice[c]`.
fn preimage_along(b: &Structure, h: &[Elem], choice: &[Elem]) -> Structure {
    let dom: Vec<Elem> = (1..=h.len() as u32).map(Elem).collect();
    let mut facts: Vec<(&str, Tuple)> = Vec::new();
    for (i, (r, k)) in b.signature().relations().iter().enumerate() {
        for t in tuples(&dom, *k) {
            let img: Tuple = t.iter().map(|e| h[e.0 as usize - 1]).collect();
            if b.table(i).contains(&img) {
                facts.push((r.as_str(), t));
            }
        }
    }
    let consts: Vec<(&str, Elem)> = b.signature().constants().iter().map(String::as_str).zip(choice.iter().copied()).collect();
    Structure::new(b.signature().clone(), dom, facts, consts).expect("preimage is well-formed")
}

fn strict_preimages(ctx: &mut Ctx) -> Option<Certificate> {
    let flat = ctx.flat();
    if flat.is_empty() {
        return None;
    }
    let try_one = |ctx: &mut Ctx, b: &Structure, h: &[Elem], choice: &[Elem]| -> Option<Certificate> {
        let a = preimage_along(b, h, choice);
        if ctx.theory.holds(&a) {
            return None;
        }
        let mut c = ctx.certificate(vec![("model", b.clone()), ("preimage", a.clone())], &a);
        c.maps.push(("h".into(), h.iter().enumerate().map(|(i, e)| (Elem(i as u32 + 1), *e)).collect()));
        Some(c)
    };
    let choices = |b: &Structure, h: &[Elem]| -> Vec<Vec<Elem>> {
        b.constant_values()
            .iter()
            .map(|v| (0..h.len()).filter(|i| h[*i] == *v).map(|i| Elem(i as u32 + 1)).collect::<Vec<_>>())
            .multi_cartesian_product()
            .collect::<Vec<_>>()
    };
    let nconst = ctx.sig.constants().len();
    let all_choices = |b: &Structure, h: &[Elem]| -> Vec<Vec<Elem>> {
        if nconst == 0 {
            vec![Vec::new()]
        } else {
            choices(b, h)
        }
    };
    let n_max = ctx.budget.max_domain;
    if ctx.random() {
        while ctx.tick() {
            let b = pick(&mut ctx.rng, &flat).clone();
            let dom: Vec<Elem> = b.domain().iter().copied().collect();
            let n = ctx.rng.gen_range(1..=n_max);
            let h: Vec<Elem> = (0..n).map(|_| dom[ctx.rng.gen_range(0..dom.len())]).collect();
            let cs = all_choices(&b, &h);
            if cs.is_empty() {
                continue;
            }
            let choice = cs[ctx.rng.gen_range(0..cs.len())].clone();
            if let Some(c) = try_one(ctx, &b, &h, &choice) {
                return Some(c);
            }
        }
        return None;
    }
    for b in &flat {
        let dom: Vec<Elem> = b.domain().iter().copied().collect();
        for n in 1..=n_max {
            for h in tuples(&dom, n) {
                for choice in all_choices(b, &h) {
                    if !ctx.tick() {
                        return None;
                    }
                    if let Some(c) = try_one(ctx, b, &h, &choice) {
                        return Some(c);
                    }
                }
            }
        }
    }
    None
}

fn isomorphic_unions(ctx: &mut Ctx) -> Option<Certificate> {
    let flat = ctx.flat();
    if flat.is_empty() {
        return None;
    }
    let try_one = |ctx: &mut Ctx, a: &Structure, family: &[BTreeSet<Elem>]| -> Option<Certificate> {
        let g: Vec<GuardedSet> = family.iter().map(|x| GuardedSet::new(a, x.iter().copied()).expect("guarded")).collect();
        let u = isomorphic_union(a, &g, &mut FreshElems::above([a])).ok()?;
        if ctx.theory.holds(&u.structure) {
            return None;
        }
        let mut c = ctx.certificate(vec![("model", a.clone()), ("union", u.structure.clone())], &u.structure);
        for (i, (x, copy)) in family.iter().zip(&u.copies).enumerate() {
            c.sets.push((format!("G.{i}"), x.clone()));
            c.maps.push((format!("iso.{i}"), copy.iso.clone()));
        }
        Some(c)
    };
    let fmax = ctx.budget.max_guarded_family;
    if ctx.random() {
        while ctx.tick() {
            let a = pick(&mut ctx.rng, &flat).clone();
            let k = ctx.rng.gen_range(1..=fmax);
            let family: Vec<BTreeSet<Elem>> = (0..k).map(|_| random_subset(&mut ctx.rng, &a)).collect::<BTreeSet<_>>().into_iter().collect();
            if let Some(c) = try_one(ctx, &a, &family) {
                return Some(c);
            }
        }
        return None;
    }
    for a in &flat {
        let sets = guarded_sets(a, true);
        for k in 1..=fmax.min(sets.len()) {
            for family in sets.iter().cloned().combinations(k) {
                if !ctx.tick() {
                    return None;
                }
                if let Some(c) = try_one(ctx, a, &family) {
                    return Some(c);
                }
            }
        }
    }
    None
}

fn shifted(b: &Structure, offset: u32) -> Structure {
    b.rename(&b.domain().iter().map(|e| (*e, Elem(e.0 + offset))).collect())
}

// Pairs are A over {1..n} and B over {n-k+1 .. n-k+m}, sharing k elements,
// ordered by the size of their union, then n, then k.
fn unions(ctx: &mut Ctx, disjoint: bool) -> Option<Certificate> {
    let try_one = |ctx: &mut Ctx, a: &Structure, b: &Structure| -> Option<Certificate> {
        if a.constant_values() != b.constant_values() || (disjoint && !disjoint_union_compatible(a, b)) {
            return None;
        }
        let u = union(a, b).ok()?;
        if ctx.theory.holds(&u) {
            return None;
        }
        Some(ctx.certificate(vec![("left", a.clone()), ("right", b.clone()), ("union", u.clone())], &u))
    };
    let n_max = ctx.budget.max_domain;
    if ctx.random() {
        let sizes: Vec<usize> = (1..=n_max).filter(|n| !ctx.pool[*n].is_empty()).collect();
        if sizes.is_empty() {
            return None;
        }
        while ctx.tick() {
            let n = sizes[ctx.rng.gen_range(0..sizes.len())];
            let m = sizes[ctx.rng.gen_range(0..sizes.len())];
            let k = ctx.rng.gen_range(0..=n.min(m));
            let a = pick(&mut ctx.rng, &ctx.pool[n].clone()).clone();
            let b = shifted(pick(&mut ctx.rng, &ctx.pool[m].clone()), (n - k) as u32);
            if let Some(c) = try_one(ctx, &a, &b) {
                return Some(c);
            }
        }
        return None;
    }
    let pool = ctx.pool.clone();
    let u_max = ctx.budget.max_union.unwrap_or(2 * n_max).min(2 * n_max);
    for u in 1..=u_max {
        for n in 1..=n_max {
            for k in 0..=n {
                let Some(m) = (u + k).checked_sub(n) else { continue };
                if m == 0 || m > n_max || k > m {
                    continue;
                }
                // a disjoint union where one side contains the other is
                // that side itself
                if disjoint && (k == n || k == m) {
                    continue;
                }
                let mut by_overlap: HashMap<Vec<(usize, Vec<u32>)>, Vec<&Structure>> = HashMap::new();
                for b in &pool[m] {
                    let key = if disjoint { overlap_key(b, 0, k) } else { Vec::new() };
                    by_overlap.entry(key).or_default().push(b);
                }
                for a in &pool[n] {
                    let key = if disjoint { overlap_key(a, (n - k) as u32, k) } else { Vec::new() };
                    let Some(bs) = by_overlap.get(&key) else { continue };
                    for b in bs {
                        let b = shifted(b, (n - k) as u32);
                        if a.constant_values() != b.constant_values() {
                            continue;
                        }
                        if !ctx.tick() {
                            return None;
                        }
                        if let Some(c) = try_one(ctx, a, &b) {
                            return Some(c);
                        }
                    }
                }
            }
        }
    }
    None
}

// Facts of `s` inside the elements offset+1 ..= offset+k, renumbered from 1.
// Nullary facts are included.
fn overlap_key(s: &Structure, offset: u32, k: usize) -> Vec<(usize, Vec<u32>)> {
    let inside = |e: &Elem| e.0 > offset && e.0 <= offset + k as u32;
    let mut key: Vec<(usize, Vec<u32>)> = s
        .tables()
        .iter()
        .enumerate()
        .flat_map(|(i, t)| t.iter().filter(|tu| tu.iter().all(inside)).map(move |tu| (i, tu.iter().map(|e| e.0 - offset).collect())))
        .collect();
    key.sort();
    key
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_counts_are_bell_numbers() {
        assert_eq!(partitions(1).len(), 1);
        assert_eq!(partitions(3).len(), 5);
        assert_eq!(partitions(4).len(), 15);
        assert_eq!(partitions(3)[0], vec![0, 0, 0]);
    }

    #[test]
    fn guarded_sets_contain_constants() {
        let sig = Signature::from_parts([("P", 1)], ["c"]).unwrap();
        let s = Structure::from_ids(&sig, &[1, 2, 3], &[], &[("c", 2)]).unwrap();
        let g = guarded_sets(&s, true);
        assert_eq!(g.len(), 4);
        assert!(g.iter().all(|x| x.contains(&Elem(2))));
        assert_eq!(guarded_sets(&s, false).len(), 3);
    }

    #[test]
    fn tuple_helper() {
        let d = [Elem(1), Elem(2)];
        assert_eq!(tuples(&d, 0), vec![Vec::<Elem>::new()]);
        assert_eq!(tuples(&d, 2).len(), 4);
    }
}
