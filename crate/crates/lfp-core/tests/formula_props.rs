//! Property tests for the syntax layer: render/parse round trips over
//! generated ASTs (including nested lfp towers) and substitution laws.

use proptest::prelude::*;

use lfp_core::formula::{free_variables, render, substitute_relation};
use lfp_core::{parse_formula, Formula, Signature};

fn sig() -> Signature {
    Signature::new([("R", 1), ("S", 2), ("E", 2), ("<", 2)]).unwrap()
}

fn var() -> impl Strategy<Value = String> {
    prop_oneof![Just("x"), Just("y"), Just("z"), Just("u"), Just("w")].prop_map(str::to_string)
}

/// Formulas over the test signature, with relation variables drawn from a
/// fixed pool so nested lfp binders stay distinct.
fn formula(depth: u32) -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        Just(Formula::True),
        Just(Formula::False),
        var().prop_map(|v| Formula::atom("R", [v])),
        (var(), var()).prop_map(|(a, b)| Formula::atom("S", [a, b])),
        (var(), var()).prop_map(|(a, b)| Formula::atom("<", [a, b])),
        (var(), var()).prop_map(|(a, b)| Formula::eq(a, b)),
    ];
    leaf.prop_recursive(depth, 64, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
            (var(), inner.clone()).prop_map(|(v, b)| Formula::forall(v, b)),
            (var(), inner).prop_map(|(v, b)| Formula::exists(v, b)),
        ]
    })
}

proptest! {
    /// parse(render(f)) is the identity on ASTs.
    #[test]
    fn render_parse_round_trip(f in formula(5)) {
        let text = render(&f);
        let back = parse_formula(&text, &sig()).unwrap_or_else(|e| {
            panic!("rendering `{text}` failed to reparse: {e}")
        });
        prop_assert_eq!(back, f);
    }

    /// Substituting a relation variable that does not occur is the identity.
    #[test]
    fn substitute_absent_relation_is_identity(f in formula(4)) {
        let out = substitute_relation(&f, "Q", &Formula::True, &["p".into()]).unwrap();
        prop_assert_eq!(out, f);
    }

    /// Free variables are preserved by rendering.
    #[test]
    fn free_variables_stable_under_round_trip(f in formula(4)) {
        let back = parse_formula(&render(&f), &sig()).unwrap();
        prop_assert_eq!(free_variables(&back), free_variables(&f));
    }
}

/// Nested lfp towers round-trip: positive bodies stacked three deep.
#[test]
fn nested_lfp_round_trip() {
    let mut inner = Formula::or(
        Formula::atom("R", ["x"]),
        Formula::exists(
            "y",
            Formula::and(Formula::atom("S", ["y", "x"]), Formula::atom("T1", ["y"])),
        ),
    );
    inner = Formula::lfp("T1", ["x"], inner, ["v"]);
    let mid = Formula::lfp(
        "T2",
        ["v"],
        Formula::or(inner, Formula::atom("T2", ["v"])),
        ["w"],
    );
    let outer = Formula::lfp(
        "T3",
        ["w"],
        Formula::or(mid, Formula::atom("T3", ["w"])),
        ["u"],
    );
    let text = render(&outer);
    let back = parse_formula(&text, &sig()).unwrap();
    assert_eq!(back, outer);
    // And once more through a second render.
    assert_eq!(parse_formula(&render(&back), &sig()).unwrap(), back);
}
