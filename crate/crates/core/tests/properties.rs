//! Property tests for the invariants of each module. Random rules and
//! structures come from seeded generators so proptest only draws seeds.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{assignments, brute_cq, random_gd, random_rule_in, QAtom, Shape};
use exrules::fixtures;
use exrules::gnfo::{fg_rules_to_gnfo, is_gnfo, relativize, rules_to_sentence, to_core, Side, D_A};
use exrules::preservation::{check_preservation, random_structure, replay, Budget, PreservationProperty as P};
use exrules::rewriting::{
    bounded_rule_equivalence, delta_set, entails_bounded, has_sharp_model, has_trivial_model, is_quasi_frontier_guarded, normalize_diverse,
    qfg_to_frontier_guarded, specialization_set, split_ded, Entailment, DEFAULT_SPECIALIZATION_CAP,
};
use exrules::rules::{classify, signature_of, ClassFlag};
use exrules::semantics::{
    eval_cq_flat, eval_sentence, find_homomorphism, find_isomorphism, find_strict_homomorphism, is_globally_homomorphic, is_homomorphism,
    is_strict_homomorphism, mutual_hom_pinned, mutual_hom_via_expansion, rule_sentence, satisfies_rules, Cq, Formula, Theory,
};
use exrules::structures::{
    count_structures, direct_product, induced_substructure, iso_copy, isomorphic_union, sharp_structure, trivial_structure, union, FreshElems,
    GuardedSet, Structures, DEFAULT_ENUMERATION_CAP,
};
use exrules::{parse_rule, Atom, Elem, Rule, Signature, Structure, Term};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn small_sig() -> Signature {
    Signature::from_parts([("P", 1), ("R", 2), ("T", 0)], []).unwrap()
}

fn structures(sig: &Signature, max: usize) -> Vec<Structure> {
    Structures::new(sig, 1..=max, DEFAULT_ENUMERATION_CAP).unwrap().collect()
}

fn models(st: &Structure, rs: &[Rule]) -> bool {
    satisfies_rules(st, rs).unwrap()
}

// ---- rules ----

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn class_flags_follow_the_hierarchy(seed in any::<u64>()) {
        let r = random_gd(&mut rng(seed), Shape::gd());
        let c = classify(&r);
        let chain = [ClassFlag::Linear, ClassFlag::Guarded, ClassFlag::FrontierGuarded, ClassFlag::Tgd, ClassFlag::Ed, ClassFlag::Ded];
        for w in chain.windows(2) {
            prop_assert!(!c.contains(w[0]) || c.contains(w[1]), "{r}: {} without {}", w[0], w[1]);
        }
        prop_assert!(c.contains(ClassFlag::Gd));
    }

    #[test]
    fn render_then_parse_is_identity(seed in any::<u64>()) {
        let shape = Shape { constants: true, ..Shape::gd() };
        let r = random_gd(&mut rng(seed), shape);
        let back = parse_rule(&r.to_string(), &mut Signature::new()).unwrap();
        prop_assert_eq!(back, r);
    }

    #[test]
    fn frontier_is_universal(seed in any::<u64>()) {
        let r = random_gd(&mut rng(seed), Shape::gd());
        let u: BTreeSet<String> = r.universal_vars().into_iter().collect();
        prop_assert!(r.frontier_variables().is_subset(&u));
    }
}

#[test]
fn fixture_rules_round_trip() {
    for (_, rs) in fixtures::rule_corpus() {
        for r in rs {
            assert_eq!(parse_rule(&r.to_string(), &mut Signature::new()).unwrap(), r);
        }
    }
}

// ---- structures ----

#[test]
fn product_sizes_multiply_and_swap() {
    let all = structures(&Signature::from_parts([("R", 2)], []).unwrap(), 3);
    let sample: Vec<&Structure> = all.iter().step_by(7).collect();
    for a in &sample {
        for b in &sample {
            let ab = direct_product(a, b).unwrap();
            assert_eq!(ab.structure.size(), a.size() * b.size());
            let ba = direct_product(b, a).unwrap();
            // swapping the pair components is an isomorphism
            let inv: BTreeMap<(Elem, Elem), Elem> = ba.pairs.iter().map(|(e, p)| (*p, *e)).collect();
            let swap: BTreeMap<Elem, Elem> = ab.pairs.iter().map(|(e, (x, y))| (*e, inv[&(*y, *x)])).collect();
            assert!(is_strict_homomorphism(&ab.structure, &ba.structure, &swap));
            assert_eq!(swap.values().collect::<BTreeSet<_>>().len(), swap.len());
            assert!(find_isomorphism(&ab.structure, &ba.structure).is_some());
        }
    }
}

#[test]
fn enumeration_counts() {
    let sig = small_sig();
    for n in 1..=2 {
        let got = Structures::new(&sig, n..=n, DEFAULT_ENUMERATION_CAP).unwrap().count() as u128;
        let want: u128 = sig.relations().iter().map(|(_, k)| 1u128 << (n as u32).pow(*k as u32)).product();
        assert_eq!(got, want);
        assert_eq!(count_structures(&sig, n), Some(want));
    }
}

proptest! {
    #[test]
    fn union_is_commutative_and_idempotent(seed in any::<u64>(), n in 1usize..=3, m in 1usize..=3, shift in 0u32..3) {
        let mut g = rng(seed);
        let sig = small_sig();
        let a = random_structure(&sig, n, &mut g);
        let b = random_structure(&sig, m, &mut g);
        let b = b.rename(&b.domain().iter().map(|e| (*e, Elem(e.0 + shift))).collect());
        prop_assert_eq!(union(&a, &b).unwrap(), union(&b, &a).unwrap());
        prop_assert_eq!(union(&a, &a).unwrap(), a.clone());
    }

    #[test]
    fn iso_copies_are_isomorphic_and_overlap_on_anchors(seed in any::<u64>(), n in 1usize..=3) {
        let mut g = rng(seed);
        let s = random_structure(&small_sig(), n, &mut g);
        let dom: Vec<Elem> = s.domain().iter().copied().collect();
        let pick = |g: &mut ChaCha8Rng| GuardedSet::new(&s, dom.iter().copied().filter(|_| g.gen_bool(0.5))).unwrap();
        let (x, y) = (pick(&mut g), pick(&mut g));
        let mut fresh = FreshElems::above([&s]);
        let cx = iso_copy(&s, &x, &mut fresh).unwrap();
        let cy = iso_copy(&s, &y, &mut fresh).unwrap();
        for c in [&cx, &cy] {
            prop_assert!(is_strict_homomorphism(&s, &c.copy, &c.iso));
            prop_assert_eq!(c.iso.values().collect::<BTreeSet<_>>().len(), s.size());
            prop_assert_eq!(c.copy.domain().len(), s.size());
        }
        let meet: BTreeSet<Elem> = cx.copy.domain().intersection(cy.copy.domain()).copied().collect();
        let anchors: BTreeSet<Elem> = x.elems().intersection(y.elems()).copied().collect();
        prop_assert_eq!(meet, anchors);
        let whole = GuardedSet::new(&s, dom.iter().copied()).unwrap();
        prop_assert_eq!(isomorphic_union(&s, &[whole], &mut FreshElems::above([&s])).unwrap().structure, s.clone());
    }
}

// ---- semantics ----

fn r2() -> Signature {
    Signature::from_parts([("R", 2)], []).unwrap()
}

fn small_cqs() -> Vec<Vec<QAtom>> {
    let vars = ["a", "b", "c"];
    let mut out = Vec::new();
    let atoms: Vec<QAtom> = vars.iter().flat_map(|x| vars.iter().map(move |y| QAtom::R(x.to_string(), y.to_string()))).collect();
    for a in &atoms {
        out.push(vec![a.clone()]);
        for b in &atoms {
            out.push(vec![a.clone(), b.clone()]);
        }
    }
    out
}

fn to_cq(atoms: &[QAtom], ex: &[String]) -> Cq {
    let t = |v: &String| Term::var(v.as_str());
    Cq {
        existentials: ex.to_vec(),
        atoms: atoms
            .iter()
            .map(|a| match a {
                QAtom::R(x, y) => Atom::rel("R", vec![t(x), t(y)]),
                QAtom::Eq(x, y) => Atom::eq(t(x), t(y)),
            })
            .collect(),
    }
}

#[test]
fn homomorphisms_preserve_cqs() {
    let all = structures(&r2(), 2);
    for a in &all {
        for b in &all {
            let Some(h) = find_homomorphism(a, b) else { continue };
            assert!(is_homomorphism(a, b, &h.map));
            let dom: Vec<Elem> = a.domain().iter().copied().collect();
            for q in small_cqs() {
                let vars: Vec<String> = ["a", "b", "c"].iter().map(|v| v.to_string()).filter(|v| q.iter().any(|x| matches!(x, QAtom::R(p, r) if p == v || r == v))).collect();
                let (free, ex) = vars.split_at(vars.len().min(1));
                let cq = to_cq(&q, ex);
                for asg in assignments(free, &dom) {
                    if eval_cq_flat(a, &cq, &asg).unwrap() {
                        let img: BTreeMap<String, Elem> = asg.iter().map(|(v, e)| (v.clone(), h.map[e])).collect();
                        assert!(eval_cq_flat(b, &cq, &img).unwrap());
                        assert!(brute_cq(b, &q, ex, &img));
                    }
                }
            }
        }
    }
}

#[test]
fn strict_witnesses_reflect_facts() {
    let all = structures(&r2(), 2);
    for a in &all {
        for b in &all {
            for onto in [false, true] {
                if let Some(w) = find_strict_homomorphism(a, b, onto) {
                    assert!(is_homomorphism(a, b, &w.map));
                    for x in a.domain() {
                        for y in a.domain() {
                            assert_eq!(a.holds("R", &[*x, *y]), b.holds("R", &[w.map[x], w.map[y]]));
                        }
                    }
                    if onto {
                        assert_eq!(w.map.values().collect::<BTreeSet<_>>().len(), b.size());
                    }
                }
            }
        }
    }
}

fn tuples_up_to(dom: &[Elem], k: usize) -> Vec<Vec<Elem>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..k {
        layer = layer.iter().flat_map(|t: &Vec<Elem>| dom.iter().map(move |e| [t.clone(), vec![*e]].concat())).collect();
        out.extend(layer.clone());
    }
    out
}

#[test]
fn global_homomorphism_matches_long_tuple_definition() {
    let all = structures(&r2(), 2);
    for a in &all {
        for b in &all {
            let da: Vec<Elem> = a.domain().iter().copied().collect();
            let db: Vec<Elem> = b.domain().iter().copied().collect();
            let oracle = tuples_up_to(&da, 4).iter().all(|ta| {
                tuples_up_to(&db, ta.len()).iter().filter(|tb| tb.len() == ta.len()).any(|tb| mutual_hom_via_expansion(a, ta, b, tb).unwrap())
            });
            assert_eq!(is_globally_homomorphic(a, b).holds, oracle);
            for ta in tuples_up_to(&da, 2) {
                for tb in tuples_up_to(&db, 2).into_iter().filter(|t| t.len() == ta.len()) {
                    assert_eq!(mutual_hom_pinned(a, &ta, b, &tb).unwrap(), mutual_hom_pinned(b, &tb, a, &ta).unwrap());
                }
            }
        }
    }
}

// ---- preservation ----

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn counterexamples_replay(seed in any::<u64>()) {
        let mut g = rng(seed);
        let rs: Vec<Rule> = vec![random_gd(&mut g, Shape::gd())];
        let t = Theory::from_rules(&rs).unwrap();
        for prop in P::ALL {
            let v = check_preservation(&rs, prop, &Budget::with_max_domain(2)).unwrap();
            if let Some(c) = &v.certificate {
                prop_assert!(replay(c, &t).is_ok(), "{prop} certificate for {} fails replay", rs[0]);
            }
        }
    }

    #[test]
    fn counterexamples_persist_at_larger_budgets(seed in any::<u64>()) {
        let rs = vec![random_gd(&mut rng(seed), Shape::tgd())];
        for prop in [P::DirectProduct, P::Union, P::DisjointUnion, P::IsomorphicUnion, P::StrictHomImage] {
            let small = check_preservation(&rs, prop, &Budget::with_max_domain(1)).unwrap();
            if small.is_counterexample() {
                prop_assert!(check_preservation(&rs, prop, &Budget::with_max_domain(2)).unwrap().is_counterexample());
            }
        }
    }
}

// ---- rewriting ----

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_rules_imply_their_source(seed in any::<u64>()) {
        let r = random_rule_in(&mut rng(seed), ClassFlag::Ded);
        let sig = signature_of(std::slice::from_ref(&r)).unwrap();
        let parts = split_ded(&r).unwrap();
        for st in structures(&sig, 2) {
            if parts.iter().any(|p| models(&st, std::slice::from_ref(p))) {
                prop_assert!(models(&st, std::slice::from_ref(&r)));
            }
        }
    }

    #[test]
    fn diverse_normalization_is_equivalent(seed in any::<u64>()) {
        let shape = Shape { constants: seed % 3 == 0, ..Shape::tgd() };
        let r = random_gd(&mut rng(seed), shape);
        let r = if classify(&r).contains(ClassFlag::Tgd) { r } else { random_rule_in(&mut rng(seed), ClassFlag::Tgd) };
        let n = normalize_diverse(&r).unwrap();
        let sig = signature_of(std::slice::from_ref(&r)).unwrap();
        let sentences: Vec<Formula> = n.diverse.iter().map(|d| d.to_formula()).collect();
        let out = Theory::new(&sig, n.residuals.clone(), sentences).unwrap().compile().unwrap();
        for st in structures(out.signature(), 2) {
            prop_assert_eq!(models(&st, std::slice::from_ref(&r)), out.holds(&st));
        }
        for d in &n.diverse {
            let specs = specialization_set(d, DEFAULT_SPECIALIZATION_CAP).unwrap();
            for (s, member) in specs.iter().zip(delta_set(d, &specs)) {
                prop_assert!(is_quasi_frontier_guarded(&d.specialize(s)), "{d} under {s}");
                prop_assert!(classify(&member).contains(ClassFlag::QuasiFrontierGuarded));
            }
        }
    }

    #[test]
    fn qfg_split_is_frontier_guarded_and_equivalent(seed in any::<u64>()) {
        let r = random_rule_in(&mut rng(seed), ClassFlag::QuasiFrontierGuarded);
        let out = qfg_to_frontier_guarded(&r).unwrap();
        prop_assert!(out.iter().all(|o| classify(o).contains(ClassFlag::FrontierGuarded)));
        prop_assert!(bounded_rule_equivalence(std::slice::from_ref(&r), &out, 2).unwrap().equivalent());
    }

    #[test]
    fn grounding_tests_agree_with_evaluation(seed in any::<u64>()) {
        let shape = Shape { constants: seed % 2 == 0, ..Shape::gd() };
        let rs = vec![random_gd(&mut rng(seed), shape)];
        let sig = signature_of(&rs).unwrap();
        let direct = |st: &Structure| rs.iter().all(|r| eval_sentence(st, &rule_sentence(r)).unwrap());
        prop_assert_eq!(has_trivial_model(&rs).unwrap(), direct(&trivial_structure(&sig)));
        prop_assert_eq!(has_sharp_model(&rs).unwrap(), direct(&sharp_structure(&sig)));
    }

    #[test]
    fn countermodels_are_genuine(seed in any::<u64>()) {
        let mut g = rng(seed);
        let premise = random_rule_in(&mut g, ClassFlag::Tgd);
        let conclusion = random_rule_in(&mut g, ClassFlag::Tgd);
        let mut sig = premise.signature().unwrap();
        if sig.absorb_rule(&conclusion).is_err() {
            return Ok(());
        }
        if let Entailment::Countermodel(st) = entails_bounded(std::slice::from_ref(&premise), &conclusion, &Budget::with_max_domain(2)).unwrap() {
            prop_assert!(eval_sentence(&st, &rule_sentence(&premise)).unwrap());
            prop_assert!(!eval_sentence(&st, &rule_sentence(&conclusion)).unwrap());
        }
    }
}

// ---- gnfo ----

fn check_relativization(f: &Formula, max: usize) {
    let core = to_core(f);
    let pa = relativize(&core, Side::A).unwrap();
    let mut sig = f.signature().unwrap();
    sig.declare_relation(D_A, 1).unwrap();
    for c in structures(&sig, max) {
        let d: BTreeSet<Elem> = c.relation(D_A).unwrap().iter().map(|t| t[0]).collect();
        if d.is_empty() {
            continue;
        }
        let sub = induced_substructure(&c, &d).unwrap();
        assert_eq!(eval_sentence(&c, &pa).unwrap(), eval_sentence(&sub, f).unwrap(), "{f} on {c:?}");
    }
}

#[test]
fn relativization_matches_induced_substructure() {
    check_relativization(&fixtures::unguarded_negation(), 3);
    for (name, rs) in fixtures::rule_corpus() {
        let sig = signature_of(&rs).unwrap();
        let bits: usize = sig.relations().iter().map(|(_, k)| 3usize.pow(*k as u32)).sum::<usize>() + 3;
        let max = if bits <= 16 { 3 } else { 2 };
        eprintln!("relativization: {name} up to size {max}");
        check_relativization(&rules_to_sentence(&rs), max);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn frontier_guarded_rules_become_gnfo(seed in any::<u64>()) {
        let mut g = rng(seed);
        let rs: Vec<Rule> = (0..g.gen_range(1..=2)).map(|_| random_rule_in(&mut g, ClassFlag::FrontierGuarded)).collect();
        let Ok(_) = signature_of(&rs) else { return Ok(()) };
        let out = fg_rules_to_gnfo(&rs).unwrap();
        prop_assert!(out.gnfo_certified && is_gnfo(&out.ast));
        let plain = rules_to_sentence(&rs);
        for st in structures(&signature_of(&rs).unwrap(), 2) {
            prop_assert_eq!(eval_sentence(&st, &out.ast).unwrap(), eval_sentence(&st, &plain).unwrap());
        }
    }
}

#[test]
fn generators_reach_each_class() {
    let mut g = rng(1);
    for flag in [ClassFlag::Gd, ClassFlag::Ed, ClassFlag::FrontierGuarded, ClassFlag::Guarded, ClassFlag::Linear] {
        let r = random_rule_in(&mut g, flag);
        assert!(classify(&r).contains(flag));
    }
}
