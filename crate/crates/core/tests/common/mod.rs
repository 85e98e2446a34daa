//! Seeded generators and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use exrules::rules::{classify, ClassFlag};
use exrules::{parse_rule, Elem, Rule, Signature, Structure};
use rand::seq::SliceRandom;
use rand::Rng;

const RELS: [(&str, usize); 4] = [("P", 1), ("Q", 1), ("R", 2), ("S", 2)];
const UNIVERSALS: [&str; 3] = ["x", "y", "z"];
const EXISTENTIALS: [&str; 2] = ["u", "v"];

fn atom(rng: &mut impl Rng, vars: &[&str], eq_prob: f64, constant: bool) -> String {
    let term = |rng: &mut dyn rand::RngCore| {
        if constant && rng.gen_bool(0.2) {
            "\"c\"".to_string()
        } else {
            vars.choose(rng).unwrap().to_string()
        }
    };
    if rng.gen_bool(eq_prob) {
        return format!("{} = {}", term(rng), term(rng));
    }
    let (r, k) = RELS.choose(rng).unwrap();
    let args: Vec<String> = (0..*k).map(|_| term(rng)).collect();
    format!("{r}({})", args.join(","))
}

/// Which rule shapes [`random_rule`] may produce.
#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub max_atoms: usize,
    pub equalities: bool,
    pub disjunction: bool,
    pub falsum: bool,
    pub constants: bool,
}

impl Shape {
    pub fn gd() -> Shape {
        Shape { max_atoms: 3, equalities: true, disjunction: true, falsum: true, constants: false }
    }

    pub fn tgd() -> Shape {
        Shape { max_atoms: 3, equalities: false, disjunction: false, falsum: false, constants: false }
    }
}

/// A random generalized dependency with at most `shape.max_atoms` atoms in
/// total. Universal variables are drawn from x, y, z and existential ones
/// from u, v, so heads may mention universals absent from the body.
pub fn random_gd(rng: &mut impl Rng, shape: Shape) -> Rule {
    let total = rng.gen_range(2..=shape.max_atoms.max(2));
    let body_n = rng.gen_range(1..total);
    let eq = if shape.equalities { 0.15 } else { 0.0 };
    let mut body: Vec<String> = Vec::new();
    for i in 0..body_n {
        // the first body atom is relational so that the body binds something
        body.push(atom(rng, &UNIVERSALS, if i == 0 { 0.0 } else { eq }, shape.constants));
    }
    let head_n = total - body_n;
    let head = if shape.falsum && rng.gen_bool(0.1) {
        "false".to_string()
    } else {
        let disjuncts = if shape.disjunction && head_n >= 2 && rng.gen_bool(0.4) { 2 } else { 1 };
        let mut parts: Vec<Vec<String>> = vec![Vec::new(); disjuncts];
        for i in 0..head_n {
            let vars: Vec<&str> = UNIVERSALS.iter().chain(EXISTENTIALS.iter().take(rng.gen_range(0..=2))).copied().collect();
            parts[i % disjuncts].push(atom(rng, &vars, eq, shape.constants));
        }
        parts
            .iter()
            .map(|atoms| {
                let used: Vec<&str> = EXISTENTIALS.iter().filter(|e| atoms.iter().any(|a| mentions(a, e))).copied().collect();
                if used.is_empty() {
                    atoms.join(", ")
                } else {
                    format!("exists {}. {}", used.join(","), atoms.join(", "))
                }
            })
            .collect::<Vec<_>>()
            .join(" | ")
    };
    let text = format!("{} -> {head}", body.join(", "));
    parse_rule(&text, &mut Signature::new()).unwrap_or_else(|e| panic!("generated rule `{text}` does not parse: {e}"))
}

fn mentions(atom: &str, v: &str) -> bool {
    atom.split(|c: char| !c.is_alphanumeric()).any(|t| t == v)
}

/// A random rule whose class contains `flag`, by rejection sampling.
pub fn random_rule_in(rng: &mut impl Rng, flag: ClassFlag) -> Rule {
    let shape = match flag {
        ClassFlag::Gd | ClassFlag::Ded | ClassFlag::Ed => Shape::gd(),
        _ => Shape::tgd(),
    };
    loop {
        let r = random_gd(rng, shape);
        if classify(&r).contains(flag) {
            return r;
        }
    }
}

/// Every assignment of `vars` to elements of `dom`.
pub fn assignments(vars: &[String], dom: &[Elem]) -> Vec<BTreeMap<String, Elem>> {
    let mut out = vec![BTreeMap::new()];
    for v in vars {
        out = out
            .into_iter()
            .flat_map(|a| {
                dom.iter().map(move |&e| {
                    let mut b = a.clone();
                    b.insert(v.clone(), e);
                    b
                })
            })
            .collect();
    }
    out
}

/// A conjunctive query atom over one binary relation `R`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QAtom {
    R(String, String),
    Eq(String, String),
}

/// Truth of `exists ex. atoms` under `asg` by trying every value of the
/// existential variables.
pub fn brute_cq(s: &Structure, atoms: &[QAtom], ex: &[String], asg: &BTreeMap<String, Elem>) -> bool {
    let dom: Vec<Elem> = s.domain().iter().copied().collect();
    assignments(ex, &dom).into_iter().any(|e| {
        let val = |v: &String| e.get(v).or_else(|| asg.get(v)).copied().expect("bound variable");
        atoms.iter().all(|a| match a {
            QAtom::R(x, y) => s.holds("R", &[val(x), val(y)]),
            QAtom::Eq(x, y) => val(x) == val(y),
        })
    })
}
