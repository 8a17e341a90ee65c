//! Constructions-level integration tests: the arithmetic library against
//! native integer arithmetic, preorder laws, the preorder/height round trip,
//! interpretation transfer, relativized witness transfer, and the IP
//! pipeline on a graph family.

mod common;

use common::*;

use lfp_core::constructions::{
    arithmetic_library, check_indiscernible, containment_preorder, derive_ip_witness,
    extract_indiscernible, height_formula, interpret, materialize_preorder, relativize_partitioned,
    sop_from_chain, InterpretedFormula, IpOutcome, StagePreorder,
};
use lfp_core::dividing::{detect, verify_witness, Budget, Probe, PropertyKind, Transposed};
use lfp_core::eval::{defined_set_cached, EvalCache, Valuation};
use lfp_core::family::{linear_order, paley, successor};
use lfp_core::stages::closure_ordinal;
use lfp_core::structure::{disjoint_union, TupleSet};

/// Every defined relation of the library matches native integer arithmetic
/// on ([m],<) for every m up to 64, exhaustively.
#[test]
fn arithmetic_matches_native_exhaustively() {
    let lib = arithmetic_library();
    let over3: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
    for msize in 1..=64usize {
        let m = linear_order(msize);
        let mut cache = EvalCache::new();

        let plus =
            defined_set_cached(&lib.plus, &m, &Valuation::new(), &over3, &mut cache).unwrap();
        let expected: TupleSet = (0..msize)
            .flat_map(|a| {
                (0..msize)
                    .filter(move |b| a + b < msize)
                    .map(move |b| vec![a, b, a + b])
            })
            .collect();
        assert_eq!(plus, expected, "plus on [{msize}]");

        let times =
            defined_set_cached(&lib.times, &m, &Valuation::new(), &over3, &mut cache).unwrap();
        let expected: TupleSet = (0..msize)
            .flat_map(|a| {
                (0..msize)
                    .filter(move |b| a * b < msize)
                    .map(move |b| vec![a, b, a * b])
            })
            .collect();
        assert_eq!(times, expected, "times on [{msize}]");

        let exp = defined_set_cached(&lib.exp, &m, &Valuation::new(), &over3, &mut cache).unwrap();
        let expected: TupleSet = (0..msize)
            .flat_map(|a| {
                (0..msize).filter_map(move |b| native_exp(a, b, msize).map(|c| vec![a, b, c]))
            })
            .collect();
        assert_eq!(exp, expected, "exp on [{msize}]");

        let over2: Vec<String> = ["x", "y"].iter().map(|s| s.to_string()).collect();
        let bit_set =
            defined_set_cached(&lib.bit.formula, &m, &Valuation::new(), &over2, &mut cache)
                .unwrap();
        let expected: TupleSet = (0..msize)
            .flat_map(|x| {
                (0..msize)
                    .filter(move |y| native_bit(x, *y))
                    .map(move |y| vec![x, y])
            })
            .collect();
        assert_eq!(bit_set, expected, "bit on [{msize}]");

        let factor_set = defined_set_cached(
            &lib.factor.formula,
            &m,
            &Valuation::new(),
            &over3,
            &mut cache,
        )
        .unwrap();
        let expected: TupleSet = (0..msize)
            .flat_map(|x| {
                (0..msize).flat_map(move |y| {
                    (0..msize)
                        .filter(move |&z| native_factor(x, y, z))
                        .map(move |z| vec![x, y, z])
                })
            })
            .collect();
        assert_eq!(factor_set, expected, "factor on [{msize}]");
    }
}

/// Containment preorders are reflexive and transitive on every corpus
/// structure of size <= 8.
#[test]
fn containment_preorders_are_preorders() {
    for (name, probe) in fo_probes() {
        let lam = containment_preorder(&probe);
        for m in small_zoo(8) {
            if !probe.compatible(&m) {
                continue;
            }
            assert!(
                lam.check_on(&m).unwrap(),
                "{name} containment on {}",
                m.name()
            );
        }
    }
}

/// The constructive cycle on linear orders: the containment preorder of
/// x<y carries an sOP(m) chain, and its height formula has closure m
/// again, so chains, preorders, and fixpoint depth translate into each
/// other without loss.
#[test]
fn theorem_cycle_on_linear_orders() {
    let lam = containment_preorder(&lt_probe());
    for msize in 1..=12usize {
        let m = linear_order(msize);
        // Chains are found by the sOP detector applied to λ itself.
        let chain_cert = detect(
            PropertyKind::Sop,
            &lam.formula,
            &m,
            msize,
            &Budget::UNLIMITED,
        )
        .unwrap()
        .expect("λ-chain of full length");
        let cert = sop_from_chain(&lam, &chain_cert.b, &m);
        assert!(verify_witness(&cert, &lam.formula, &m).unwrap());

        let spec = height_formula(&lam);
        assert_eq!(closure_ordinal(&spec, &m, &empty()).unwrap(), msize);
    }
}

/// Stage-comparison preorders feed back through the height formula with
/// the same closure ordinals, for the growing corpus bodies on their
/// families, sizes <= 12.
#[test]
fn stage_preorder_height_round_trip() {
    for (name, spec) in [("reach", reach_spec()), ("height-lt", height_lt_spec())] {
        for m in structures_for(&spec, 12) {
            let original = closure_ordinal(&spec, &m, &empty()).unwrap();
            let pre = StagePreorder::new(spec.clone());
            let (derived, lam) = materialize_preorder(&pre, &m, "Lam").unwrap();
            let height = height_formula(&lam);
            let back = closure_ordinal(&height, &derived, &empty()).unwrap();
            assert_eq!(back, original, "{name} on {}", m.name());
        }
    }
}

/// Interpretation preserves witnesses: bit has IP(2) on ([m],<) for m >= 8,
/// and interpreting it through the stage preorder of reach transfers IP(2)
/// to the successor structures, where the interpreted probe is detected
/// directly.
#[test]
fn interpretation_transfers_ip_to_successor() {
    let lib = arithmetic_library();
    let pre = StagePreorder::new(reach_spec());
    let interp = InterpretedFormula::new(lib.bit.clone(), pre).unwrap();
    for msize in [8usize, 10] {
        let m = successor(msize);
        let cert = detect(PropertyKind::Ip, &interp, &m, 2, &Budget::UNLIMITED)
            .unwrap()
            .unwrap_or_else(|| panic!("interpreted bit must have IP(2) on succ:{msize}"));
        assert!(verify_witness(&cert, &interp, &m).unwrap());
    }
    // Below the parameter-count threshold (2^2 tuples needed) there is no
    // IP(2) to transfer.
    let m = successor(3);
    assert!(detect(PropertyKind::Ip, &interp, &m, 2, &Budget::UNLIMITED)
        .unwrap()
        .is_none());
}

/// The syntactic interpretation through a written preorder formula agrees
/// with the semantic route on linear orders.
#[test]
fn syntactic_and_semantic_interpretation_agree() {
    let sig = sig_lt();
    let leq = lfp_core::parse_formula("y1 < y2 | y1 = y2", &sig).unwrap();
    let lam = lfp_core::constructions::PreorderFormula {
        formula: lfp_core::PartitionedFormula::new(leq, vec!["y1".into()], vec!["y2".into()])
            .unwrap(),
        linear: true,
    };
    let syntactic = interpret(&lt_probe(), &lam).unwrap();
    let m = linear_order(5);
    let ext = syntactic.ext_matrix(&m).unwrap();
    for a in 0..5usize {
        for b in 0..5usize {
            assert_eq!(ext.holds(&[a], &[b]), a < b);
        }
    }
}

/// Relativized formulas keep their witnesses in a disjoint union: an OP(n)
/// certificate on the left factor verifies unchanged for the L-relativized
/// formula on the union (left indices are preserved).
#[test]
fn relativization_transfers_witnesses_to_unions() {
    let left = linear_order(5);
    let right = successor(4);
    let union = disjoint_union(&left, &right);

    let probe = lt_probe();
    let cert = detect(PropertyKind::Op, &probe, &left, 3, &Budget::UNLIMITED)
        .unwrap()
        .unwrap();
    let relativized = relativize_partitioned(&probe, "L");
    let transferred = lfp_core::dividing::PropertyCertificate {
        structure: union.name().to_string(),
        formula: relativized.label(),
        ..cert
    };
    assert!(verify_witness(&transferred, &relativized, &union).unwrap());

    // The unrelativized formula would see the right-hand elements too; the
    // relativized one must not.
    let ext = relativized.ext_matrix(&union).unwrap();
    for b in 5..9usize {
        assert!(
            ext.row(b).is_empty(),
            "no guarded extension at right element {b}"
        );
    }
}

/// Indiscernible extraction on the 13-vertex Paley graph, verified by the
/// exhaustive subsequence check.
#[test]
fn paley_extraction_verified() {
    let m = paley(13).unwrap();
    let delta = vec![lfp_core::parse_formula("E(p,q)", &sig_e()).unwrap()];
    let seq: Vec<Vec<usize>> = (0..13).map(|i| vec![i]).collect();
    let out = extract_indiscernible(&m, &delta, 2, &seq, 3, &Budget::UNLIMITED)
        .unwrap()
        .unwrap();
    assert_eq!(out.indices, vec![0, 1, 4]);
    assert!(check_indiscernible(&m, &delta, 2, &out.elements).unwrap());
}

/// The IP pipeline succeeds on Paley graphs (order property without long
/// chains) and the resulting certificates verify for the transposed edge
/// formula.
#[test]
fn pipeline_derives_ip_on_paley() {
    let probe = edge_probe();
    for (q, op_n, k) in [(13usize, 4usize, 2usize), (29, 6, 3)] {
        let m = paley(q).unwrap();
        let op = detect(PropertyKind::Op, &probe, &m, op_n, &Budget::UNLIMITED)
            .unwrap()
            .unwrap_or_else(|| panic!("paley({q}) must have OP({op_n})"));
        match derive_ip_witness(&probe, &m, k, 2, &op, &Budget::UNLIMITED).unwrap() {
            IpOutcome::Certificate(cert) => {
                assert_eq!(cert.n, k);
                assert!(verify_witness(&cert, &Transposed(probe.clone()), &m).unwrap());
            }
            IpOutcome::Diagnostic(d) => {
                panic!(
                    "pipeline unexpectedly failed on paley({q}): {:?}",
                    d.unselected
                )
            }
        }
    }
}

/// On a pure linear order the pipeline must stop with a diagnostic whose
/// chain exhibit is a verified strict chain (selection fails exactly
/// because chains exist).
#[test]
fn pipeline_diagnostic_chain_is_verified() {
    let probe = lt_probe();
    let m = linear_order(16);
    let op = detect(PropertyKind::Op, &probe, &m, 10, &Budget::UNLIMITED)
        .unwrap()
        .unwrap();
    match derive_ip_witness(&probe, &m, 2, 3, &op, &Budget::UNLIMITED).unwrap() {
        IpOutcome::Certificate(_) => panic!("transposed order cannot have IP(2)"),
        IpOutcome::Diagnostic(diag) => {
            let chain = diag.chain.expect("chain must be exhibited");
            assert_eq!(chain.params.len(), 3, "chain length equals the spacing N");
        }
    }
}

/// Equality admits no OP(3), so there is no honest input for the pipeline
/// at k >= 2 with spacing 2 on small sets.
#[test]
fn pipeline_has_no_honest_input_for_equality() {
    let m = lfp_core::family::pure_set(6);
    assert!(
        detect(PropertyKind::Op, &eq_probe(), &m, 3, &Budget::UNLIMITED)
            .unwrap()
            .is_none()
    );
    // The best OP witness for equality has n = 2 < k*N.
    let op = detect(PropertyKind::Op, &eq_probe(), &m, 2, &Budget::UNLIMITED)
        .unwrap()
        .unwrap();
    assert!(matches!(
        derive_ip_witness(&eq_probe(), &m, 2, 2, &op, &Budget::UNLIMITED),
        Err(lfp_core::constructions::PipelineError::InsufficientWitness { .. })
    ));
}
