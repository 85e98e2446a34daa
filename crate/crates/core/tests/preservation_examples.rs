use exrules::preservation::{check_preservation, check_theory, replay, Budget, PreservationProperty as P};
use exrules::semantics::{parse_formula, Theory};
use exrules::{parse_rule, Elem, Signature, Structure};

fn rules(texts: &[&str]) -> Vec<exrules::Rule> {
    let mut sig = Signature::new();
    texts.iter().map(|t| parse_rule(t, &mut sig).unwrap()).collect()
}

#[test]
fn unguarded_negation_fails_global_hom_preimages() {
    let f = parse_formula("(exists (x) (not (Q x)))", &Default::default()).unwrap();
    let t = Theory::from_sentence(f).unwrap();
    let v = check_theory(&t, P::GlobalHomPreimage, &Budget::with_max_domain(2)).unwrap();
    let c = v.certificate.unwrap();
    let sig = t.signature();
    assert_eq!(c.structure("preimage").unwrap(), &Structure::from_ids(sig, &[1], &[("Q", &[1])], &[]).unwrap());
    assert_eq!(c.structure("model").unwrap(), &Structure::from_ids(sig, &[1, 2], &[("Q", &[1])], &[]).unwrap());
    replay(&c, &t).unwrap();
}

#[test]
fn disjunctive_rule_fails_products() {
    let r = rules(&["R() -> S() | T()"]);
    let v = check_preservation(&r, P::DirectProduct, &Budget::with_max_domain(1)).unwrap();
    let c = v.certificate.unwrap();
    println!("{}", exrules::preservation::write_certificate(&c));
    let p = c.structure("product").unwrap();
    assert!(p.flag("R") && !p.flag("S") && !p.flag("T"));
}

#[test]
fn transitivity_fails_isomorphic_unions() {
    let r = rules(&["R(x,y), R(y,z) -> R(x,z)"]);
    let v = check_preservation(&r, P::IsomorphicUnion, &Budget::with_max_domain(2)).unwrap();
    let c = v.certificate.unwrap();
    println!("{}", exrules::preservation::write_certificate(&c));
    assert_eq!(c.structure("union").unwrap().size(), 3);
    assert_eq!(c.set("G.0").unwrap().iter().copied().collect::<Vec<_>>(), vec![Elem(1)]);
}

#[test]
fn chain_rule_fails_disjoint_unions() {
    let r = rules(&["E(x,y), E(y,z) -> C(y)"]);
    let v = check_preservation(&r, P::DisjointUnion, &Budget::with_max_domain(2)).unwrap();
    let c = v.certificate.unwrap();
    println!("{}", exrules::preservation::write_certificate(&c));
}

#[test]
fn conjunctive_body_fails_unions() {
    let r = rules(&["P(x), Q(x) -> R(x)"]);
    let v = check_preservation(&r, P::Union, &Budget::with_max_domain(1)).unwrap();
    let c = v.certificate.unwrap();
    println!("{}", exrules::preservation::write_certificate(&c));
}
