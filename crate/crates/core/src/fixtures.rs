//! The worked examples shipped as runnable checks.
//!
//! Each fixture rebuilds an example from its rules or sentence, runs the
//! relevant search or construction and compares the outcome with the
//! expected structures. A fixture passes only on exact agreement.

use std::collections::BTreeSet;
use std::fmt;
use std::time::Instant;

use crate::gnfo::{bounded_sat, disjoint_union_reduction, rules_to_sentence};
use crate::preservation::{check_preservation, check_theory, replay, Budget, Certificate, PreservationProperty};
use crate::rewriting::{ded_to_ed_bounded, has_sharp_model, has_trivial_model, tgd_to_fgtgd_bounded};
use crate::rules::{classify, parse_rules, ClassFlag, ParseOptions, Rule, Signature};
use crate::semantics::{parse_formula, Formula, Theory};
use crate::structures::{direct_product, disjoint_union_compatible, union, Structure};

/// One embedded example.
pub struct Fixture {
    pub name: &'static str,
    /// Where the example comes from, described in words.
    pub locus: &'static str,
    check: fn() -> Result<String, String>,
}

impl fmt::Debug for Fixture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fixture").field("name", &self.name).field("locus", &self.locus).finish()
    }
}

/// Result of running one fixture.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixtureOutcome {
    pub name: &'static str,
    pub locus: &'static str,
    pub passed: bool,
    /// What was observed, or the first mismatch.
    pub detail: String,
    pub millis: u128,
}

impl Fixture {
    pub fn run(&self) -> FixtureOutcome {
        let start = Instant::now();
        let r = (self.check)();
        let millis = start.elapsed().as_millis();
        let (passed, detail) = match r {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        FixtureOutcome { name: self.name, locus: self.locus, passed, detail, millis }
    }
}

pub const DISJUNCTIVE_HEAD: &str = "R() -> S() | T()";
pub const SHARP_MODEL_RULE: &str = "P(x), R(x,y) -> Q(y)";
pub const SHARP_MODEL_SPECIALIZED: &str = "P(x), R(x,x) -> Q(y)";
pub const TRANSITIVITY: &str = "R(x,y), R(y,z) -> R(x,z)";
pub const CHAIN_CENTER: &str = "E(x,y), E(y,z) -> C(y)";
pub const JOIN_ON_X: &str = "P(x), Q(x) -> R(x)";
pub const UNGUARDED_NEGATION: &str = "(exists (x) (not (Q x)))";

/// The product-hardness rule set for the base `A(x) -> B(x)` and the query
/// `exists x. B(x)`: every rule gains a `Q()` disjunct, plus `B(x) -> Q()`
/// and `R() -> P() | Q()`.
pub const PRODUCT_HARDNESS: &str = "A(x) -> B(x) | Q()\nB(x) -> Q()\nR() -> P() | Q()";
/// The disjoint-union-hardness rule set for the same base and query.
pub const DISJOINT_UNION_HARDNESS: &str =
    "A(x) -> B(x)\nB(x) -> Q()\nQ(), E(x,y) -> C(y)\nQ(), E(y,z) -> C(y)\nE(x,y), E(y,z) -> C(y)";
/// The union-hardness rule set for the same base and query.
pub const UNION_HARDNESS: &str = "A(x) -> B(x)\nB(x) -> Q()\nQ(), R(x) -> T(x)\nQ(), S(x) -> T(x)\nR(x), S(x) -> T(x)";

/// The five example rules, one per line, in the rule DSL. Relation names
/// are adjusted where the examples reuse a name with another arity.
pub const EXAMPLE_RULE_FILE: &str = "U() -> S() | T()\nP(x), R(x,y) -> Q(y)\nR(x,y), R(y,z) -> R(x,z)\nE(x,y), E(y,z) -> C(y)\nP(x), Q(x) -> J(x)\n";

/// The most specific class of each line of [`EXAMPLE_RULE_FILE`].
pub const EXAMPLE_RULE_CLASSES: [ClassFlag; 5] =
    [ClassFlag::Ded, ClassFlag::Guarded, ClassFlag::Tgd, ClassFlag::FrontierGuarded, ClassFlag::Guarded];

/// Parses a rule file with a fresh signature.
pub fn rules(text: &str) -> Vec<Rule> {
    parse_rules(text, &mut Signature::new(), ParseOptions::default()).expect("embedded rules parse")
}

/// Named rule sets used by the cross-checks: every fixture given by rules.
pub fn rule_corpus() -> Vec<(&'static str, Vec<Rule>)> {
    vec![
        ("disjunctive-head", rules(DISJUNCTIVE_HEAD)),
        ("sharp-model", rules(SHARP_MODEL_RULE)),
        ("transitivity", rules(TRANSITIVITY)),
        ("chain-center", rules(CHAIN_CENTER)),
        ("join-on-x", rules(JOIN_ON_X)),
        ("product-hardness", rules(PRODUCT_HARDNESS)),
        ("disjoint-union-hardness", rules(DISJOINT_UNION_HARDNESS)),
        ("union-hardness", rules(UNION_HARDNESS)),
    ]
}

/// The sentence whose negated part is `exists x. not Q(x)`.
pub fn unguarded_negation() -> Formula {
    parse_formula(UNGUARDED_NEGATION, &BTreeSet::new()).expect("embedded sentence parses")
}

/// The linear-order sentence: `Less` is a strict linear order with least
/// and greatest elements `Min`, `Max`, `Succ` is contained in the successor
/// relation, and if every non-maximal element has a successor then some
/// element is outside `Q`. Returned as a flat conjunction so that model
/// enumeration can check each conjunct as soon as its symbols are fixed.
pub fn linear_order_sentence() -> Formula {
    let parts = [
        // strict linear order
        "(forall (x) (not (Less x x)))",
        "(forall (x y z) (implies (and (Less x y) (Less y z)) (Less x z)))",
        "(forall (x y) (or (= x y) (Less x y) (Less y x)))",
        // least and greatest elements
        "(forall (x y) (implies (Min x) (or (= x y) (Less x y))))",
        "(exists (v) (Min v))",
        "(forall (x y) (implies (Max x) (or (= x y) (Less y x))))",
        "(exists (v) (Max v))",
        // Succ is the covering relation where defined
        "(forall (x y) (implies (Succ x y) (Less x y)))",
        "(forall (x y z) (implies (and (Succ x y) (Less x z)) (or (= y z) (Less y z))))",
        // if the successor chain is total, Q misses an element
        "(implies (forall (x) (or (Max x) (exists (y) (Succ x y)))) (exists (x) (not (Q x))))",
    ];
    Formula::And(parts.iter().map(|p| parse_formula(p, &BTreeSet::new()).expect("embedded sentence parses")).collect())
}

/// Two models of a hardness rule set, the construction applied to them,
/// and the rule set itself.
#[derive(Clone, Debug)]
pub struct HardnessCase {
    pub rules: Vec<Rule>,
    pub property: PreservationProperty,
    pub left: Structure,
    pub right: Structure,
    /// The product or union of `left` and `right`.
    pub combined: Structure,
}

fn sig_of(rs: &[Rule]) -> Signature {
    crate::rules::signature_of(rs).expect("embedded rules have a signature")
}

/// The base model is a single element with `A` and `B` empty. One expansion
/// sets `R`, `P`; the other sets `R`, `Q`. Their product has `R` only.
pub fn product_hardness_case() -> HardnessCase {
    let rs = rules(PRODUCT_HARDNESS);
    let sig = sig_of(&rs);
    let left = Structure::from_ids(&sig, &[1], &[("R", &[]), ("P", &[])], &[]).unwrap();
    let right = Structure::from_ids(&sig, &[1], &[("R", &[]), ("Q", &[])], &[]).unwrap();
    let combined = direct_product(&left, &right).unwrap().structure;
    HardnessCase { rules: rs, property: PreservationProperty::DirectProduct, left, right, combined }
}

/// Two copies of a three-element base model with `A`, `B` empty that share
/// only the middle element 2: the first has the edge (1,2), the second the
/// edge (2,5), `Q` is false and `C` empty. The union has the chain 1,2,5.
pub fn disjoint_union_hardness_case() -> HardnessCase {
    let rs = rules(DISJOINT_UNION_HARDNESS);
    let sig = sig_of(&rs);
    let left = Structure::from_ids(&sig, &[1, 2, 3], &[("E", &[1, 2])], &[]).unwrap();
    let right = Structure::from_ids(&sig, &[2, 4, 5], &[("E", &[2, 5])], &[]).unwrap();
    let combined = union(&left, &right).unwrap();
    HardnessCase { rules: rs, property: PreservationProperty::DisjointUnion, left, right, combined }
}

/// A one-element base model with `A`, `B` empty, once with `R` and once
/// with `S` on the element; `Q` is false and `T` empty.
pub fn union_hardness_case() -> HardnessCase {
    let rs = rules(UNION_HARDNESS);
    let sig = sig_of(&rs);
    let left = Structure::from_ids(&sig, &[1], &[("R", &[1])], &[]).unwrap();
    let right = Structure::from_ids(&sig, &[1], &[("S", &[1])], &[]).unwrap();
    let combined = union(&left, &right).unwrap();
    HardnessCase { rules: rs, property: PreservationProperty::Union, left, right, combined }
}

/// Checks a hardness case: both parts are models, the combination is not,
/// and the search finds a counterexample from structures no larger than the
/// parts.
pub fn check_hardness_case(case: &HardnessCase) -> Result<String, String> {
    let t = Theory::from_rules(&case.rules).map_err(|e| e.to_string())?;
    let holds = |s: &Structure| t.holds(s).map_err(|e| e.to_string());
    expect(holds(&case.left)?, "left expansion is not a model")?;
    expect(holds(&case.right)?, "right expansion is not a model")?;
    if case.property == PreservationProperty::DisjointUnion {
        expect(disjoint_union_compatible(&case.left, &case.right), "expansions do not agree on their overlap")?;
    }
    expect(!holds(&case.combined)?, "combined structure is a model")?;
    let size = case.left.size().max(case.right.size());
    let v = check_preservation(&case.rules, case.property, &Budget::with_max_domain(size)).map_err(|e| e.to_string())?;
    let cert = v.certificate.ok_or_else(|| format!("no {} counterexample found at max_domain {size}", case.property))?;
    replay(&cert, &t).map_err(|e| e.to_string())?;
    Ok(format!(
        "explicit expansions of sizes {}/{} combine to a non-model of size {}; search at max_domain {size} finds a counterexample",
        case.left.size(),
        case.right.size(),
        case.combined.size()
    ))
}

fn expect(cond: bool, msg: &str) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.to_string())
    }
}

fn find(rs: &[Rule], prop: PreservationProperty, max_domain: usize) -> Result<(Certificate, Theory), String> {
    let t = Theory::from_rules(rs).map_err(|e| e.to_string())?;
    let v = check_theory(&t, prop, &Budget::with_max_domain(max_domain)).map_err(|e| e.to_string())?;
    let c = v.certificate.ok_or_else(|| format!("no {prop} counterexample at max_domain {max_domain}"))?;
    replay(&c, &t).map_err(|e| format!("certificate does not replay: {e}"))?;
    Ok((c, t))
}

fn part<'a>(c: &'a Certificate, name: &str) -> Result<&'a Structure, String> {
    c.structure(name).ok_or_else(|| format!("certificate lacks `{name}`"))
}

fn same(found: &Structure, expected: &Structure, what: &str) -> Result<(), String> {
    if found == expected {
        Ok(())
    } else {
        Err(format!("{what}: expected\n{}found\n{}", crate::structures::write_structure(expected), crate::structures::write_structure(found)))
    }
}

fn global_hom_preimage() -> Result<String, String> {
    let t = Theory::from_sentence(unguarded_negation()).map_err(|e| e.to_string())?;
    let v = check_theory(&t, PreservationProperty::GlobalHomPreimage, &Budget::with_max_domain(2)).map_err(|e| e.to_string())?;
    let c = v.certificate.ok_or("no counterexample at max_domain 2")?;
    replay(&c, &t).map_err(|e| e.to_string())?;
    let sig = t.signature();
    same(part(&c, "preimage")?, &Structure::from_ids(sig, &[1], &[("Q", &[1])], &[]).unwrap(), "preimage")?;
    same(part(&c, "model")?, &Structure::from_ids(sig, &[1, 2], &[("Q", &[1])], &[]).unwrap(), "model")?;
    Ok("model {a,b} with Q={a}; preimage {a} with Q={a}".into())
}

fn direct_product_example() -> Result<String, String> {
    let (c, _) = find(&rules(DISJUNCTIVE_HEAD), PreservationProperty::DirectProduct, 1)?;
    let p = part(&c, "product")?;
    expect(p.size() == 1 && p.flag("R") && !p.flag("S") && !p.flag("T"), "product should have R true, S and T false")?;
    let (l, r) = (part(&c, "left")?, part(&c, "right")?);
    let factors = [(l.flag("S"), l.flag("T")), (r.flag("S"), r.flag("T"))];
    expect(
        l.flag("R") && r.flag("R") && factors.contains(&(true, false)) && factors.contains(&(false, true)),
        "factors should be R,S and R,T",
    )?;
    let ded = ded_to_ed_bounded(&rules(DISJUNCTIVE_HEAD), &Budget::with_max_domain(1)).map_err(|e| e.to_string())?;
    expect(ded.verified().is_none(), "rewriting to embedded dependencies should fail")?;
    Ok("factors {R,S} and {R,T}; product {R}; rewriting to ED refused".into())
}

fn isomorphic_union_example() -> Result<String, String> {
    let (c, t) = find(&rules(TRANSITIVITY), PreservationProperty::IsomorphicUnion, 2)?;
    let sig = t.signature();
    let full = [&[1u32, 1][..], &[1, 2], &[2, 1], &[2, 2]];
    let model_facts: Vec<(&str, &[u32])> = full.iter().map(|t| ("R", *t)).collect();
    same(part(&c, "model")?, &Structure::from_ids(sig, &[1, 2], &model_facts, &[]).unwrap(), "model")?;
    let g: Vec<Vec<u32>> = (0..).map_while(|i| c.set(&format!("G.{i}"))).map(|s| s.iter().map(|e| e.0).collect()).collect();
    expect(g == vec![vec![1], vec![1, 2]], &format!("guarded family should be {{a}},{{a,b}}, found {g:?}"))?;
    let u = part(&c, "union")?;
    expect(u.size() == 3, "union should have three elements")?;
    // {a,b}^2 together with {a,b'}^2 where b' is the fresh copy of b
    let fresh = *u.domain().iter().find(|e| e.0 > 2).unwrap();
    let mut facts: Vec<Vec<u32>> = full.iter().map(|t| t.to_vec()).collect();
    facts.extend([vec![1, fresh.0], vec![fresh.0, 1], vec![fresh.0, fresh.0]]);
    let fs: Vec<(&str, &[u32])> = facts.iter().map(|t| ("R", t.as_slice())).collect();
    same(u, &Structure::from_ids(sig, &[1, 2, fresh.0], &fs, &[]).unwrap(), "union")?;
    let witness = match &c.failure {
        crate::semantics::Failure::Rule { assignment, .. } => assignment.clone(),
        _ => return Err("failure should be a rule violation".into()),
    };
    let y = witness.get("y").copied();
    expect(y == Some(crate::structures::Elem(1)), "the violating chain should pass through the shared element")?;
    let chain: Vec<String> = ["x", "y", "z"].iter().filter_map(|v| witness.get(*v)).map(|e| e.0.to_string()).collect();
    Ok(format!("G = {{a}},{{a,b}}; union of 3 elements; violating chain {}", chain.join(",")))
}

fn disjoint_union_example() -> Result<String, String> {
    let (c, t) = find(&rules(CHAIN_CENTER), PreservationProperty::DisjointUnion, 2)?;
    let (l, r) = (part(&c, "left")?, part(&c, "right")?);
    let overlap: Vec<_> = l.domain().intersection(r.domain()).copied().collect();
    expect(overlap.len() == 1, "the two models should overlap in one element")?;
    let b = overlap[0];
    let edges = |s: &Structure| s.relation("E").unwrap().iter().cloned().collect::<Vec<_>>();
    let show = |es: &[Vec<crate::structures::Elem>]| es.iter().map(|t| format!("({},{})", t[0].0, t[1].0)).collect::<Vec<_>>().join(" ");
    let (el, er) = (edges(l), edges(r));
    let into_b = |es: &[Vec<crate::structures::Elem>]| es.len() == 1 && es[0][1] == b && es[0][0] != b;
    let out_of_b = |es: &[Vec<crate::structures::Elem>]| es.len() == 1 && es[0][0] == b && es[0][1] != b;
    expect(
        (into_b(&el) && out_of_b(&er)) || (into_b(&er) && out_of_b(&el)),
        "one model should hold (a,b) and the other (b,c)",
    )?;
    expect(l.relation("C").unwrap().is_empty() && r.relation("C").unwrap().is_empty(), "C should be empty")?;
    let red = disjoint_union_reduction(&rules_to_sentence(&rules(CHAIN_CENTER))).map_err(|e| e.to_string())?;
    let m = bounded_sat(&red.formula, 3).map_err(|e| e.to_string())?.ok_or("reduction sentence has no model of size 3")?;
    let (a, bb) = red.project(&m).ok_or("model does not project")?;
    expect(t.holds(&a).unwrap_or(false) && t.holds(&bb).unwrap_or(false), "projections should be models")?;
    Ok(format!("edges {} and {} overlapping in {{{}}}; reduction sentence has a model of size {}", show(&el), show(&er), b.0, m.size()))
}

fn union_example() -> Result<String, String> {
    let (c, t) = find(&rules(JOIN_ON_X), PreservationProperty::Union, 1)?;
    let sig = t.signature();
    let (l, r) = (part(&c, "left")?, part(&c, "right")?);
    let p = Structure::from_ids(sig, &[1], &[("P", &[1])], &[]).unwrap();
    let q = Structure::from_ids(sig, &[1], &[("Q", &[1])], &[]).unwrap();
    expect((l == &p && r == &q) || (l == &q && r == &p), "models should be {a} with P and {a} with Q")?;
    Ok("one-element models with P={a} and Q={a}; union violates the rule".into())
}

fn sharp_model_example() -> Result<String, String> {
    let rule = rules(SHARP_MODEL_RULE);
    let spec = rules(SHARP_MODEL_SPECIALIZED);
    let err = |e: crate::rewriting::RewriteError| e.to_string();
    expect(has_trivial_model(&rule).map_err(err)? && has_sharp_model(&rule).map_err(err)?, "the safe rule should have both models")?;
    expect(has_trivial_model(&spec).map_err(err)?, "the specialized rule should have a trivial model")?;
    expect(!has_sharp_model(&spec).map_err(err)?, "the specialized rule should lack a sharp model")?;
    // the structure {a,b} with P=Q={a}, R={(a,a)} separates the two rules
    let sig = sig_of(&rule);
    let s = Structure::from_ids(&sig, &[1, 2], &[("P", &[1]), ("Q", &[1]), ("R", &[1, 1])], &[]).unwrap();
    let holds = |rs: &[Rule]| Theory::from_rules(rs).and_then(|t| t.holds(&s)).map_err(|e| e.to_string());
    expect(holds(&rule)?, "the structure should satisfy the safe rule")?;
    expect(!holds(&spec)?, "the structure should violate the specialized rule")?;
    Ok("safe rule has trivial and sharp models; its unsafe specialization has no sharp model".into())
}

fn classification_example() -> Result<String, String> {
    let rs = rules(EXAMPLE_RULE_FILE);
    let got: Vec<ClassFlag> = rs.iter().map(|r| classify(r).strongest()).collect();
    expect(got == EXAMPLE_RULE_CLASSES, &format!("classes {got:?}"))?;
    Ok(got.iter().map(|c| c.name()).collect::<Vec<_>>().join(", "))
}

fn frontier_guarded_rewrite() -> Result<String, String> {
    let rw = tgd_to_fgtgd_bounded(&rules(CHAIN_CENTER), &Budget::with_max_domain(2)).map_err(|e| e.to_string())?;
    expect(rw.equivalence.equivalent(), &rw.equivalence.to_string())?;
    let tr = tgd_to_fgtgd_bounded(&rules(TRANSITIVITY), &Budget::with_max_domain(2)).map_err(|e| e.to_string())?;
    let out: Vec<Rule> = tr.output.iter().chain(&tr.residuals).cloned().collect();
    let at3 = crate::rewriting::bounded_rule_equivalence(&rules(TRANSITIVITY), &out, 3).map_err(|e| e.to_string())?;
    expect(!at3.equivalent(), "the transitivity rewrite should be refuted at size 3")?;
    Ok(format!("chain rule rewrites verified; transitivity rewrite refuted at size 3 ({at3})"))
}

fn linear_order_example() -> Result<String, String> {
    let t = Theory::from_sentence(linear_order_sentence()).map_err(|e| e.to_string())?;
    let v = check_theory(&t, PreservationProperty::GlobalHomPreimage, &Budget::with_max_domain(3)).map_err(|e| e.to_string())?;
    expect(!v.is_counterexample(), "a counterexample was found")?;
    expect(!v.stats.budget_exhausted, "the search stopped on the budget")?;
    Ok(format!("no counterexample at max_domain 3 ({} structures examined)", v.stats.structures_examined))
}

/// Every embedded fixture, in a fixed order.
pub fn all_fixtures() -> Vec<Fixture> {
    vec![
        Fixture {
            name: "global-hom-preimage",
            locus: "exists x. not Q(x) is not preserved under globally-homomorphic preimages",
            check: global_hom_preimage,
        },
        Fixture { name: "direct-product", locus: "R -> S | T is not preserved under direct products", check: direct_product_example },
        Fixture { name: "sharp-model", locus: "a safe rule and its unsafe specialization against trivial and sharp models", check: sharp_model_example },
        Fixture {
            name: "isomorphic-union",
            locus: "transitivity is not preserved under isomorphic unions (glued copies of the full relation on {a,b})",
            check: isomorphic_union_example,
        },
        Fixture {
            name: "disjoint-union",
            locus: "E(x,y), E(y,z) -> C(y) is not preserved under disjoint unions",
            check: disjoint_union_example,
        },
        Fixture { name: "union", locus: "P(x), Q(x) -> R(x) is not preserved under unions", check: union_example },
        Fixture { name: "classification", locus: "class membership of the example rules", check: classification_example },
        Fixture {
            name: "frontier-guarded-rewrite",
            locus: "rewriting tuple-generating rules into frontier-guarded ones",
            check: frontier_guarded_rewrite,
        },
        Fixture {
            name: "linear-order",
            locus: "linear-order sentence preserved under globally-homomorphic preimages in the finite",
            check: linear_order_example,
        },
        Fixture {
            name: "product-hardness",
            locus: "reduction from query entailment to preservation under direct products",
            check: || check_hardness_case(&product_hardness_case()),
        },
        Fixture {
            name: "disjoint-union-hardness",
            locus: "reduction from guarded query entailment to preservation under disjoint unions",
            check: || check_hardness_case(&disjoint_union_hardness_case()),
        },
        Fixture {
            name: "union-hardness",
            locus: "reduction from linear query entailment to preservation under unions",
            check: || check_hardness_case(&union_hardness_case()),
        },
    ]
}

/// Runs all fixtures, or the one named `only`. Returns `None` for an
/// unknown name.
pub fn run_fixtures(only: Option<&str>) -> Option<Vec<FixtureOutcome>> {
    let fs: Vec<Fixture> = all_fixtures().into_iter().filter(|f| only.is_none_or(|n| n == f.name)).collect();
    if fs.is_empty() {
        return None;
    }
    Some(fs.iter().map(Fixture::run).collect())
}
