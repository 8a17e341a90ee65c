//! Detector-level integration tests: frozen examples, an independent
//! brute-force oracle, monotonicity in n, certificate transformers, and
//! sentence equivalence on a small sweep.

mod common;

use common::*;

use lfp_core::all_tuples;
use lfp_core::constructions::arithmetic_library;
use lfp_core::dividing::{
    build_property_sentence, detect, ip_to_op, sop_to_op, tp2_to_ip, verify_witness, Budget, Probe,
    PropertyCertificate, PropertyKind, Transposed,
};
use lfp_core::eval::{eval_reference, Valuation};
use lfp_core::family::linear_order;
use lfp_core::PartitionedFormula;

/// Exhaustive witness existence by plain enumeration through the reference
/// evaluator: no bitsets, no pruning beyond the definition itself.
fn naive_exists(
    kind: PropertyKind,
    probe: &PartitionedFormula,
    m: &lfp_core::FiniteStructure,
    n: usize,
) -> bool {
    let holds = |xt: &[usize], yt: &[usize]| -> bool {
        let mut val = Valuation::new();
        for (v, &e) in probe.x_vars.iter().zip(xt) {
            val.set(v.clone(), e);
        }
        for (v, &e) in probe.y_vars.iter().zip(yt) {
            val.set(v.clone(), e);
        }
        eval_reference(&probe.formula, m, &val).unwrap()
    };
    let xs = all_tuples(m.size(), probe.x_vars.len());
    let ys = all_tuples(m.size(), probe.y_vars.len());
    let choices = |k: usize, pool: usize| -> Vec<Vec<usize>> {
        // All k-vectors over 0..pool (with repetition).
        let mut out = vec![Vec::new()];
        for _ in 0..k {
            out = out
                .into_iter()
                .flat_map(|v| {
                    (0..pool).map(move |i| {
                        let mut w = v.clone();
                        w.push(i);
                        w
                    })
                })
                .collect();
        }
        out
    };
    match kind {
        PropertyKind::Op => choices(n, ys.len()).iter().any(|bv| {
            choices(n, xs.len())
                .iter()
                .any(|av| (0..n).all(|i| (0..n).all(|j| holds(&xs[av[i]], &ys[bv[j]]) == (i < j))))
        }),
        PropertyKind::Sop => choices(n, ys.len()).iter().any(|bv| {
            (0..n.saturating_sub(1)).all(|i| {
                let lo: Vec<bool> = xs.iter().map(|x| holds(x, &ys[bv[i]])).collect();
                let hi: Vec<bool> = xs.iter().map(|x| holds(x, &ys[bv[i + 1]])).collect();
                lo.iter().zip(&hi).all(|(a, b)| !a || *b)
                    && lo.iter().zip(&hi).any(|(a, b)| *b && !a)
            })
        }),
        PropertyKind::Ip => choices(1 << n, ys.len()).iter().any(|bv| {
            choices(n, xs.len()).iter().any(|av| {
                (0..n).all(|i| {
                    (0..(1 << n)).all(|j| holds(&xs[av[i]], &ys[bv[j]]) == (j >> i & 1 == 1))
                })
            })
        }),
        PropertyKind::Tp2 => choices(n * n, ys.len()).iter().any(|bv| {
            let entry = |i: usize, j: usize| &ys[bv[i * n + j]];
            let rows_ok = (0..n).all(|i| {
                (0..n).all(|j| {
                    (j + 1..n).all(|k| {
                        !xs.iter()
                            .any(|x| holds(x, entry(i, j)) && holds(x, entry(i, k)))
                    })
                })
            });
            rows_ok && {
                let mut f = vec![0usize; n];
                loop {
                    if !xs.iter().any(|x| (0..n).all(|i| holds(x, entry(i, f[i])))) {
                        return false;
                    }
                    let mut idx = n;
                    let done = loop {
                        if idx == 0 {
                            break true;
                        }
                        idx -= 1;
                        f[idx] += 1;
                        if f[idx] < n {
                            break false;
                        }
                        f[idx] = 0;
                    };
                    if done {
                        return true;
                    }
                }
            }
        }),
    }
}

/// The fast detector agrees with plain enumeration on a small sweep.
#[test]
fn detect_matches_naive_enumeration() {
    for m in small_zoo(3) {
        let msig = m.signature();
        for (name, probe) in fo_probes() {
            if !probe.compatible(&m) {
                continue;
            }
            let _ = &msig;
            for kind in PropertyKind::ALL {
                for n in 1..=2usize {
                    let fast = detect(kind, &probe, &m, n, &Budget::UNLIMITED)
                        .unwrap()
                        .is_some();
                    let slow = naive_exists(kind, &probe, &m, n);
                    assert_eq!(
                        fast,
                        slow,
                        "{name} {kind}({n}) on {} disagrees with enumeration",
                        m.name()
                    );
                }
            }
        }
    }
}

/// Frozen spec examples for the detectors.
#[test]
fn detector_examples() {
    // OP on the 4-element order at n=3: lexicographically least witness.
    let m = linear_order(4);
    let cert = detect(PropertyKind::Op, &lt_probe(), &m, 3, &Budget::UNLIMITED)
        .unwrap()
        .unwrap();
    assert_eq!(cert.a, vec![vec![0], vec![1], vec![2]]);
    assert_eq!(cert.b, vec![vec![0], vec![1], vec![2]]);

    // Equality admits no OP(3) anywhere.
    for size in [3usize, 4, 5] {
        let m = lfp_core::family::pure_set(size);
        assert!(
            detect(PropertyKind::Op, &eq_probe(), &m, 3, &Budget::UNLIMITED)
                .unwrap()
                .is_none()
        );
    }

    // sOP chain on the 3-element order.
    let m = linear_order(3);
    let cert = detect(PropertyKind::Sop, &lt_probe(), &m, 3, &Budget::UNLIMITED)
        .unwrap()
        .unwrap();
    assert_eq!(cert.b, vec![vec![0], vec![1], vec![2]]);

    // bit has IP(2) in ([8],<) with the frozen least witness.
    let lib = arithmetic_library();
    let m = linear_order(8);
    let cert = detect(PropertyKind::Ip, &lib.bit, &m, 2, &Budget::UNLIMITED)
        .unwrap()
        .unwrap();
    assert_eq!(cert.a, vec![vec![1], vec![2]]);
    assert_eq!(cert.b, vec![vec![0], vec![1], vec![2], vec![3]]);
}

/// The factor relation has TP2(2) in ([37],<); the least witness pairs the
/// primes 2 and 3 with exponents 0 and 1.
#[test]
fn factor_tp2_least_witness() {
    let lib = arithmetic_library();
    let m = linear_order(37);
    let cert = detect(PropertyKind::Tp2, &lib.factor, &m, 2, &Budget::UNLIMITED)
        .unwrap()
        .unwrap();
    assert_eq!(cert.b, vec![vec![2, 0], vec![2, 1], vec![3, 0], vec![3, 1]]);
    assert_eq!(cert.a, vec![vec![1], vec![3], vec![2], vec![6]]);
    assert!(verify_witness(&cert, &lib.factor, &m).unwrap());
}

/// Monotone in n: a witness at n implies witnesses at every m <= n.
#[test]
fn detection_is_monotone_in_n() {
    for m in small_zoo(5) {
        for (_, probe) in fo_probes() {
            if !probe.compatible(&m) {
                continue;
            }
            for kind in PropertyKind::ALL {
                let cap = if kind == PropertyKind::Tp2 { 2 } else { 3 };
                let mut top = 0;
                for n in 1..=cap {
                    if detect(kind, &probe, &m, n, &Budget::UNLIMITED)
                        .unwrap()
                        .is_some()
                    {
                        top = n;
                    }
                }
                for n in 1..=top {
                    assert!(
                        detect(kind, &probe, &m, n, &Budget::UNLIMITED)
                            .unwrap()
                            .is_some(),
                        "{kind}({n}) missing below {top} on {}",
                        m.name()
                    );
                }
            }
        }
    }
}

/// Certificate transformers produce verifying certificates on every
/// detected corpus instance.
#[test]
fn transformers_on_detected_instances() {
    for m in small_zoo(5) {
        for (name, probe) in fo_probes() {
            if !probe.compatible(&m) {
                continue;
            }
            // sOP(n) -> OP(n). When the chain's top extension covers all of
            // M^x the last OP row cannot exist; the transformer reports
            // that explicitly, and it may only happen when OP(n) genuinely
            // has no witness at all (e.g. x = y on a one-element set).
            for n in 1..=3usize {
                if let Some(cert) =
                    detect(PropertyKind::Sop, &probe, &m, n, &Budget::UNLIMITED).unwrap()
                {
                    match sop_to_op(&cert, &probe, &m) {
                        Ok(op) => assert!(
                            verify_witness(&op, &probe, &m).unwrap(),
                            "sOP({n})->OP({n}) on {} for {name}",
                            m.name()
                        ),
                        Err(lfp_core::dividing::TransformError::FullTopExtension(_, _)) => {
                            assert!(
                                detect(PropertyKind::Op, &probe, &m, n, &Budget::UNLIMITED)
                                    .unwrap()
                                    .is_none(),
                                "full-top refusal but OP({n}) exists on {} for {name}",
                                m.name()
                            );
                        }
                        Err(e) => panic!("sop_to_op failed on {} for {name}: {e}", m.name()),
                    }
                }
            }
            // IP(n) -> OP(n) (pure reindexing).
            for n in 1..=3usize {
                if let Some(cert) =
                    detect(PropertyKind::Ip, &probe, &m, n, &Budget::UNLIMITED).unwrap()
                {
                    let op = ip_to_op(&cert).unwrap();
                    assert!(
                        verify_witness(&op, &probe, &m).unwrap(),
                        "IP({n})->OP({n}) on {} for {name}",
                        m.name()
                    );
                }
            }
            // TP2(n) -> IP(n) for the transposed formula.
            for n in 1..=2usize {
                if let Some(cert) =
                    detect(PropertyKind::Tp2, &probe, &m, n, &Budget::UNLIMITED).unwrap()
                {
                    match tp2_to_ip(&cert, &probe, &m) {
                        Ok(ip) => assert!(
                            verify_witness(&ip, &Transposed(probe.clone()), &m).unwrap(),
                            "TP2({n})->IP({n}) on {} for {name}",
                            m.name()
                        ),
                        // The degenerate TP2(1) needs a point outside the
                        // single column; when none exists, IP(1) of the
                        // transpose must genuinely be absent.
                        Err(lfp_core::dividing::TransformError::NoComplementPoint) => {
                            assert_eq!(n, 1);
                            assert!(detect(
                                PropertyKind::Ip,
                                &Transposed(probe.clone()),
                                &m,
                                n,
                                &Budget::UNLIMITED
                            )
                            .unwrap()
                            .is_none());
                        }
                        Err(e) => {
                            panic!("tp2_to_ip failed on {} for {name}: {e}", m.name())
                        }
                    }
                }
            }
        }
    }
}

/// Every certificate a detector returns verifies, and serialized
/// certificates re-verify after a JSON round trip.
#[test]
fn certificates_survive_serialization() {
    let m = linear_order(5);
    for kind in PropertyKind::ALL {
        let n = if kind == PropertyKind::Tp2 { 1 } else { 2 };
        if let Some(cert) = detect(kind, &lt_probe(), &m, n, &Budget::UNLIMITED).unwrap() {
            assert!(verify_witness(&cert, &lt_probe(), &m).unwrap());
            let reloaded = PropertyCertificate::from_json(&cert.to_json()).unwrap();
            assert!(verify_witness(&reloaded, &lt_probe(), &m).unwrap());
        }
    }
}

/// Sentence truth coincides with detection on a small sweep (a slice of the
/// full acceptance criterion, kept here for fast feedback).
#[test]
fn sentences_match_detection_on_small_sweep() {
    for m in small_zoo(4) {
        for (name, probe) in fo_probes() {
            if !probe.compatible(&m) {
                continue;
            }
            for kind in [PropertyKind::Op, PropertyKind::Sop] {
                for n in 1..=2usize {
                    let sentence = build_property_sentence(kind, &probe, n).unwrap();
                    let truth = lfp_core::eval::eval(&sentence, &m, &Valuation::new()).unwrap();
                    let found = detect(kind, &probe, &m, n, &Budget::UNLIMITED)
                        .unwrap()
                        .is_some();
                    assert_eq!(truth, found, "{name} {kind}({n}) on {}", m.name());
                }
            }
        }
    }
}
