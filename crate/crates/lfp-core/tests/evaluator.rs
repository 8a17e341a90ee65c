//! Evaluator-level integration tests: operator monotonicity, stage
//! soundness, iteration-strategy agreement, unfolding, and stage
//! comparison, all against the shared corpus.

mod common;

use common::*;

use lfp_core::eval::{eval, eval_reference, EvalCache, Valuation};
use lfp_core::stages::{closure_ordinal, lfp_stages, stage_comparison, LfpSpec, Strategy};
use lfp_core::structure::TupleSet;
use lfp_core::unfold::{unfold_lfp, unfold_over_family};
use lfp_core::{Formula, Polarity};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Monotonicity of Γ: random positive bodies, random X ⊆ Y, Γ(X) ⊆ Γ(Y).
/// This is also the polarity-soundness property for the positivity checker.
#[test]
fn gamma_is_monotone_on_random_positive_bodies() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut trials = 0;
    while trials < 1000 {
        let body = random_positive_body(&mut rng, 3);
        if lfp_core::formula::polarity(&body, "X") == Polarity::Negative {
            continue;
        }
        let m = random_structure(&mut rng, 5);
        let (xs, ys) = random_nested_subsets(&mut rng, m.size());
        let over = lfp_core::formula::free_variables(&body);
        let gamma = |set: &TupleSet| -> TupleSet {
            let val = Valuation::new().bind_relation("X", 1, set.clone());
            lfp_core::eval::defined_set(&body, &m, &val, &over).unwrap()
        };
        let gx = gamma(&xs);
        let gy = gamma(&ys);
        assert!(
            gx.is_subset(&gy),
            "monotonicity violated for {} on {} with X={xs:?} Y={ys:?}",
            body,
            m.name()
        );
        trials += 1;
    }
}

/// The two iteration strategies produce identical stage tables on the whole
/// corpus.
#[test]
fn naive_and_semi_naive_agree_on_corpus() {
    for (name, spec) in lfp_corpus() {
        for m in structures_for(&spec, 7) {
            let a = lfp_stages(&spec, &m, &empty(), Strategy::Naive).unwrap();
            let b = lfp_stages(&spec, &m, &empty(), Strategy::SemiNaive).unwrap();
            assert_eq!(a, b, "{name} on {}", m.name());
        }
    }
}

/// Closure ordinals match the hand-derived formulas for every corpus body.
#[test]
fn closure_ordinals_match_expectations() {
    for (name, spec) in lfp_corpus() {
        for m in structures_for(&spec, 9) {
            let c = closure_ordinal(&spec, &m, &empty()).unwrap();
            assert_eq!(
                c,
                expected_closure(name, m.size()),
                "{name} on {}",
                m.name()
            );
        }
    }
}

/// Stage tables satisfy their invariants: nonempty consecutive levels,
/// closure bound, and fixpoint stability.
#[test]
fn stage_table_invariants() {
    for (name, spec) in lfp_corpus() {
        for m in structures_for(&spec, 7) {
            let st = lfp_stages(&spec, &m, &empty(), Strategy::Naive).unwrap();
            assert!(
                st.closure() <= m.size().pow(spec.arity() as u32),
                "{name}: closure bound"
            );
            for k in 1..=st.closure() {
                assert!(!st.level(k).is_empty(), "{name}: level {k} nonempty");
            }
            // I^closure is the fixpoint.
            assert_eq!(st.stage_set(st.closure()), st.fixpoint(), "{name}");
        }
    }
}

/// The unfolding θ_k defines the stage set I^k pointwise, for k up to
/// closure + 2, on every corpus body and structure of size <= 8.
#[test]
fn unfolding_defines_stage_sets() {
    for (name, spec) in lfp_corpus() {
        for m in structures_for(&spec, 8) {
            let st = lfp_stages(&spec, &m, &empty(), Strategy::Naive).unwrap();
            for k in 0..=st.closure() + 2 {
                let theta = unfold_lfp(&spec, k);
                assert_eq!(
                    lfp_core::formula::polarity(&theta, &spec.rel),
                    Polarity::Absent,
                    "{name}: θ_{k} must not mention the bound variable"
                );
                let set = lfp_core::eval::defined_set(&theta, &m, &empty(), &spec.vars).unwrap();
                assert_eq!(set, st.stage_set(k), "{name} θ_{k} on {}", m.name());
            }
        }
    }
}

/// Family stabilization returns the maximal closure ordinal when within
/// budget and None otherwise.
#[test]
fn unfold_over_family_returns_max_closure() {
    let spec = reach_spec();
    for top in [1usize, 3, 5] {
        let family: Vec<_> = (1..=top).map(lfp_core::family::successor).collect();
        assert_eq!(
            unfold_over_family(&spec, &family, &empty(), 10).unwrap(),
            Some(top)
        );
    }
    let family: Vec<_> = (1..=12).map(lfp_core::family::successor).collect();
    assert_eq!(
        unfold_over_family(&spec, &family, &empty(), 5).unwrap(),
        None
    );
}

/// Stage comparison is a linear preorder on the fixpoint whose class count
/// equals the closure ordinal, on every corpus body.
#[test]
fn stage_comparison_class_counts() {
    for (name, spec) in lfp_corpus() {
        for m in structures_for(&spec, 6) {
            let cmp = stage_comparison(&spec, &m, &empty()).unwrap();
            assert_eq!(
                cmp.class_count(),
                closure_ordinal(&spec, &m, &empty()).unwrap(),
                "{name} on {}",
                m.name()
            );
            let fix: Vec<_> = cmp.stage_table().fixpoint().into_iter().collect();
            for a in &fix {
                for b in &fix {
                    assert!(cmp.holds(a, b) || cmp.holds(b, a), "{name}: totality");
                }
            }
        }
    }
}

/// The extension evaluator and the tree-walking reference agree on random
/// sentences over random structures, including an lfp formula.
#[test]
fn extension_and_reference_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let sig = lfp_core::Signature::new([("R", 1), ("S", 2)]).unwrap();
    let texts = [
        "E x. A y. (S(x,y) -> R(y))",
        "A x. (R(x) | E y. S(y,x))",
        "E x. E y. (S(x,y) & S(y,x) & !(x = y))",
        "[lfp T(x). R(x) | E y. (S(y,x) & T(y))](u)",
    ];
    for _ in 0..30 {
        let m = random_structure(&mut rng, 4);
        for text in texts {
            let f = lfp_core::parse_formula(text, &sig).unwrap();
            let frees = lfp_core::formula::free_variables(&f);
            let mut val = Valuation::new();
            for v in &frees {
                val.set(v.clone(), rng.gen_range(0..m.size()));
            }
            assert_eq!(
                eval(&f, &m, &val).unwrap(),
                eval_reference(&f, &m, &val).unwrap(),
                "{text} on {}",
                m.name()
            );
        }
    }
}

/// Reusing one cache across many evaluations of the same lfp formulas gives
/// the same answers as fresh evaluation.
#[test]
fn cache_reuse_is_sound() {
    let spec = reach_spec();
    let m = lfp_core::family::successor(5);
    let f = spec.apply(["u"]);
    let mut cache = EvalCache::new();
    for u in 0..5 {
        let val = Valuation::new().bind("u", u);
        let cached = lfp_core::eval::eval_cached(&f, &m, &val, &mut cache).unwrap();
        let fresh = eval(&f, &m, &val).unwrap();
        assert_eq!(cached, fresh);
    }
}

/// Evaluating an lfp body whose binder shadows a valuation variable leaves
/// the outer binding intact.
#[test]
fn binder_shadowing_of_valuation() {
    let m = lfp_core::family::successor(3);
    // x bound by the lfp; outer x = 2 must be untouched for the right
    // conjunct.
    let spec = LfpSpec::new("T", ["x"], common::body("!(E w. S(w,x))", &sig_s(), "T", 1)).unwrap();
    let f = Formula::and(spec.apply(["u"]), Formula::eq("x", "u"));
    let val = Valuation::new().bind("u", 0).bind("x", 0);
    assert!(eval(&f, &m, &val).unwrap());
    let val = Valuation::new().bind("u", 0).bind("x", 2);
    assert!(!eval(&f, &m, &val).unwrap());
}

/// Parameterized fixpoints: an lfp body mentioning an outer variable makes
/// the extension route compute a fixpoint table with context columns; it
/// must agree with per-pair reference evaluation on random structures.
#[test]
fn parameterized_fixpoints_agree_with_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let sig = lfp_core::Signature::new([("R", 1), ("S", 2)]).unwrap();
    // "v lies S-strictly-above u": the body's free u parameterizes the
    // inner fixpoint.
    let above = lfp_core::parse_formula(
        "[lfp T(x). S(u,x) | E y. (S(y,x) & T(y))](v)",
        &sig,
    )
    .unwrap();
    // A nested tower where the inner fixpoint depends on the outer binder.
    let nested = lfp_core::parse_formula(
        "[lfp U(w). R(w) | E z. ([lfp T(x). S(w,x) | E y. (S(y,x) & T(y))](z) & U(z))](v)",
        &sig,
    )
    .unwrap();
    for _ in 0..15 {
        let m = random_structure(&mut rng, 4);
        let over: Vec<String> = vec!["u".into(), "v".into()];
        let fast = lfp_core::eval::defined_set(&above, &m, &Valuation::new(), &over).unwrap();
        for u in 0..m.size() {
            for v in 0..m.size() {
                let val = Valuation::new().bind("u", u).bind("v", v);
                assert_eq!(
                    fast.contains(&vec![u, v]),
                    eval_reference(&above, &m, &val).unwrap(),
                    "above({u},{v}) on {}",
                    m.name()
                );
            }
        }
        for v in 0..m.size() {
            let val = Valuation::new().bind("v", v);
            assert_eq!(
                eval(&nested, &m, &val).unwrap(),
                eval_reference(&nested, &m, &val).unwrap(),
                "nested({v}) on {}",
                m.name()
            );
        }
    }
}
