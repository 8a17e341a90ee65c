//! Shared test corpus: the structure zoo, a set of named lfp bodies with
//! known stage behavior, FO probe formulas, and independent native oracles.

#![allow(dead_code)]

use lfp_core::eval::Valuation;
use lfp_core::family::{linear_order, paley, pure_set, successor};
use lfp_core::parser::{parse_formula_with, MacroSet};
use lfp_core::stages::LfpSpec;
use lfp_core::structure::{disjoint_union, FiniteStructure};
use lfp_core::{parse_formula, Formula, PartitionedFormula, Signature};

pub fn sig_s() -> Signature {
    Signature::new([("S", 2)]).unwrap()
}

pub fn sig_lt() -> Signature {
    Signature::new([("<", 2)]).unwrap()
}

pub fn sig_e() -> Signature {
    Signature::new([("E", 2)]).unwrap()
}

pub fn body(text: &str, sig: &Signature, rel: &str, arity: usize) -> Formula {
    parse_formula_with(text, sig, &[(rel.to_string(), arity)], &MacroSet::default()).unwrap()
}

/// Reach: elements reachable from the sources of the successor relation;
/// closure m on succ:m.
pub fn reach_spec() -> LfpSpec {
    let b = body("(A y. !S(y,x)) | E y. (S(y,x) & T(y))", &sig_s(), "T", 1);
    LfpSpec::new("T", ["x"], b).unwrap()
}

/// Height over the order: stage k+1 holds exactly the element of height k;
/// closure m on linord:m.
pub fn height_lt_spec() -> LfpSpec {
    let b = body(
        "A w. ((w < y & !(y < w | y = w)) -> T(w))",
        &sig_lt(),
        "T",
        1,
    );
    LfpSpec::new("T", ["y"], b).unwrap()
}

/// Minimum, then everything above something already in: closure 2 on
/// linord:m for m >= 2.
pub fn above_min_spec() -> LfpSpec {
    let b = body("!(E w. w < x) | E w. (w < x & T(w))", &sig_lt(), "T", 1);
    LfpSpec::new("T", ["x"], b).unwrap()
}

/// Even positions of the successor chain; closure ceil(m/2) on succ:m.
pub fn even_pos_spec() -> LfpSpec {
    let b = body(
        "!(E w. S(w,x)) | E u. E v. (S(u,v) & S(v,x) & T(u))",
        &sig_s(),
        "T",
        1,
    );
    LfpSpec::new("T", ["x"], b).unwrap()
}

/// Binary reach on the diagonal: stage k+1 = {(k,k)}; closure m on succ:m.
pub fn diag_reach_spec() -> LfpSpec {
    let b = body(
        "(!(E w. S(w,x)) & !(E w. S(w,y)) & x = y) | E u. E v. (S(u,x) & S(v,y) & D(u,v))",
        &sig_s(),
        "D",
        2,
    );
    LfpSpec::new("D", ["x", "y"], b).unwrap()
}

/// Everything at stage 1.
pub fn identity_spec() -> LfpSpec {
    LfpSpec::new("T", ["x"], Formula::eq("x", "x")).unwrap()
}

/// The named lfp corpus used by stage/unfold tests.
pub fn lfp_corpus() -> Vec<(&'static str, LfpSpec)> {
    vec![
        ("reach", reach_spec()),
        ("height-lt", height_lt_spec()),
        ("above-min", above_min_spec()),
        ("even-pos", even_pos_spec()),
        ("diag-reach", diag_reach_spec()),
        ("identity", identity_spec()),
    ]
}

/// Structures each lfp body is interpreted in (signature-compatible).
pub fn structures_for(spec: &LfpSpec, max_size: usize) -> Vec<FiniteStructure> {
    let sig: Vec<String> = lfp_core::formula::free_relation_variables(&spec.body)
        .into_keys()
        .filter(|n| n != &spec.rel)
        .collect();
    (1..=max_size)
        .map(|m| {
            if sig.iter().any(|n| n == "S") {
                successor(m)
            } else if sig.iter().any(|n| n == "<") {
                linear_order(m)
            } else {
                pure_set(m)
            }
        })
        .collect()
}

pub fn lt_probe() -> PartitionedFormula {
    let f = parse_formula("x < y", &sig_lt()).unwrap();
    PartitionedFormula::new(f, vec!["x".into()], vec!["y".into()]).unwrap()
}

pub fn eq_probe() -> PartitionedFormula {
    PartitionedFormula::new(Formula::eq("x", "y"), vec!["x".into()], vec!["y".into()]).unwrap()
}

pub fn succ_probe() -> PartitionedFormula {
    let f = parse_formula("S(x,y)", &sig_s()).unwrap();
    PartitionedFormula::new(f, vec!["x".into()], vec!["y".into()]).unwrap()
}

pub fn edge_probe() -> PartitionedFormula {
    let f = parse_formula("E(x,y)", &sig_e()).unwrap();
    PartitionedFormula::new(f, vec!["x".into()], vec!["y".into()]).unwrap()
}

/// The small structure zoo for detector and oracle-equivalence sweeps.
pub fn small_zoo(max_size: usize) -> Vec<FiniteStructure> {
    let mut out = Vec::new();
    for m in 1..=max_size.min(3) {
        out.push(pure_set(m));
    }
    for m in 2..=max_size {
        out.push(successor(m));
        out.push(linear_order(m));
    }
    if max_size >= 5 {
        out.push(paley(5).unwrap());
        out.push(disjoint_union(&successor(2), &linear_order(2)));
    }
    out
}

/// FO probes paired with the structures where their vocabulary exists.
pub fn fo_probes() -> Vec<(&'static str, PartitionedFormula)> {
    vec![
        ("eq", eq_probe()),
        ("lt", lt_probe()),
        ("succ-edge", succ_probe()),
        ("edge", edge_probe()),
    ]
}

// ---------------------------------------------------------------------------
// Native oracles (independent of the evaluator).
// ---------------------------------------------------------------------------

pub fn native_exp(a: usize, b: usize, limit: usize) -> Option<usize> {
    let mut out: usize = 1;
    for _ in 0..b {
        out = out.checked_mul(a)?;
        if out >= limit {
            return None;
        }
    }
    (out < limit).then_some(out)
}

/// bit(x;y): bit x of y is 1, bits 1-indexed from the least significant.
pub fn native_bit(x: usize, y: usize) -> bool {
    x >= 1 && (y >> (x - 1)) & 1 == 1
}

/// factor(x;y,z): y >= 2, x >= 1, y^z | x and y^{z+1} ∤ x.
pub fn native_factor(x: usize, y: usize, z: usize) -> bool {
    if y < 2 || x == 0 {
        return false;
    }
    let divides = |p: u128, x: u128| p != 0 && x.is_multiple_of(p);
    let yz = (y as u128).checked_pow(z as u32);
    match yz {
        None => false,
        Some(p) => divides(p, x as u128) && !divides(p * y as u128, x as u128),
    }
}

/// Reference closure-ordinal values for the corpus, as a plain function of
/// the structure size (derived by hand iteration of each operator).
pub fn expected_closure(name: &str, m: usize) -> usize {
    match name {
        "reach" => m,
        "height-lt" => m,
        "above-min" => {
            if m >= 2 {
                2
            } else {
                1
            }
        }
        "even-pos" => m.div_ceil(2),
        "diag-reach" => m,
        "identity" => 1,
        other => panic!("unknown corpus body {other}"),
    }
}

/// The valuation-free empty environment.
pub fn empty() -> Valuation {
    Valuation::new()
}

// ---------------------------------------------------------------------------
// Random generators for the monotonicity property suite.
// ---------------------------------------------------------------------------

use rand::Rng;
pub use rand_chacha::ChaCha8Rng;

/// Bodies over {R/1, S/2} with the relation variable X/1 occurring only
/// positively (X is never generated under a negation flip).
pub fn random_positive_body(rng: &mut ChaCha8Rng, depth: usize) -> Formula {
    let pick = if depth == 0 {
        rng.gen_range(0..5)
    } else {
        rng.gen_range(0..9)
    };
    match pick {
        0 => Formula::atom("X", ["x"]),
        1 => Formula::atom("R", ["x"]),
        2 => Formula::atom("S", ["x", "y"]),
        3 => Formula::eq("x", "y"),
        4 => Formula::atom("X", ["y"]),
        5 => Formula::and(
            random_positive_body(rng, depth - 1),
            random_positive_body(rng, depth - 1),
        ),
        6 => Formula::or(
            random_positive_body(rng, depth - 1),
            random_positive_body(rng, depth - 1),
        ),
        7 => Formula::exists("y", random_positive_body(rng, depth - 1)),
        _ => Formula::not(random_x_free(rng, depth - 1)),
    }
}

fn random_x_free(rng: &mut ChaCha8Rng, depth: usize) -> Formula {
    let pick = if depth == 0 {
        rng.gen_range(0..3)
    } else {
        rng.gen_range(0..5)
    };
    match pick {
        0 => Formula::atom("R", ["x"]),
        1 => Formula::atom("S", ["x", "y"]),
        2 => Formula::eq("x", "y"),
        3 => Formula::not(random_x_free(rng, depth - 1)),
        _ => Formula::forall("y", random_x_free(rng, depth - 1)),
    }
}

pub fn random_structure(rng: &mut ChaCha8Rng, max_size: usize) -> FiniteStructure {
    use lfp_core::structure::TupleSet;
    let size = rng.gen_range(1..=max_size);
    let mut r: TupleSet = TupleSet::new();
    let mut s: TupleSet = TupleSet::new();
    for a in 0..size {
        if rng.gen_bool(0.5) {
            r.insert(vec![a]);
        }
        for b in 0..size {
            if rng.gen_bool(0.4) {
                s.insert(vec![a, b]);
            }
        }
    }
    FiniteStructure::new(
        format!("rnd:{}", rng.gen::<u32>()),
        size,
        vec![("R".to_string(), 1, r), ("S".to_string(), 2, s)],
    )
    .unwrap()
}

/// A random pair X ⊆ Y of unary tuple sets.
pub fn random_nested_subsets(
    rng: &mut ChaCha8Rng,
    size: usize,
) -> (lfp_core::structure::TupleSet, lfp_core::structure::TupleSet) {
    let mut x = lfp_core::structure::TupleSet::new();
    let mut y = lfp_core::structure::TupleSet::new();
    for e in 0..size {
        if rng.gen_bool(0.5) {
            y.insert(vec![e]);
            if rng.gen_bool(0.5) {
                x.insert(vec![e]);
            }
        }
    }
    (x, y)
}
