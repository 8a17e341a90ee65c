//! The IP-from-OP derivation pipeline: starting from a verified OP(n)
//! witness, extract a Δ_k-indiscernible parameter subsequence, anchor the
//! tuples `c_i = b_{iN}`, and search realizations for every subset of
//! `{1..k}`. When every subset is selected this yields an IP(k) certificate
//! for the transposed formula; otherwise the outcome is a structured
//! diagnostic naming an unselected subset and, when one can be found, a
//! strict chain of length N among the relevant φ_η subformulas — the
//! configuration that the selection argument shows must exist.

use thiserror::Error;

use super::indiscernible::{build_phi_eta, delta_k, extract_indiscernible};
use crate::dividing::{
    verify_witness, Budget, Probe, PropertyCertificate, PropertyKind, SearchError, Transposed,
    VerifyError,
};
use crate::eval::{defined_set_cached, EvalCache, EvalError, Valuation};
use crate::formula::{Formula, PartitionedFormula};
use crate::structure::{FiniteStructure, Tuple, TupleSet};
use crate::table::{tuple_from_rank, tuple_rank};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("pipeline parameters k and N must be >= 1")]
    BadParameters,
    #[error("expected a verified OP certificate, got {0}")]
    WrongKind(PropertyKind),
    #[error("the supplied OP witness does not verify")]
    InvalidWitness,
    #[error(
        "OP witness too short: no Δ_k-indiscernible subsequence of length {needed} \
         among its {have} parameters"
    )]
    InsufficientWitness { needed: usize, have: usize },
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

/// A strict chain exhibited by the diagnostic: `ψ(M;params_0) ⊊ … ⊊
/// ψ(M;params_{N-1})`, where ψ is a subformula of some φ_η.
#[derive(Debug, Clone)]
pub struct ChainExhibit {
    /// The chain formula ψ, over the probe's x-part and k y-blocks.
    pub formula: Formula,
    pub x_vars: Vec<String>,
    pub y_blocks: Vec<Vec<String>>,
    /// Parameter rows: each entry assigns one tuple per y-block.
    pub params: Vec<Vec<Tuple>>,
}

/// Why the derivation stopped: some subset was never realized against the
/// anchors.
#[derive(Debug, Clone)]
pub struct IpDiagnostic {
    /// The anchor parameters `c_0..c_{k-1}`.
    pub anchors: Vec<Tuple>,
    /// Subset masks (bit i-1 for member i) realized by some x-tuple.
    pub selected: Vec<u32>,
    /// Subset masks with no realizing x-tuple.
    pub unselected: Vec<u32>,
    /// An adjacent selected/unselected pair differing in two consecutive
    /// positions, when one exists.
    pub witness_pair: Option<(u32, u32)>,
    /// A verified strict chain of length N among φ_η subformulas.
    pub chain: Option<ChainExhibit>,
}

#[derive(Debug, Clone)]
pub enum IpOutcome {
    /// A verified IP(k) certificate for the transposed formula.
    Certificate(PropertyCertificate),
    Diagnostic(Box<IpDiagnostic>),
}

/// Run the pipeline for `phi(x;y)` on `m` with parameters `k` (target IP
/// level) and `N` (anchor spacing; the chain-length bound the argument
/// turns on).
pub fn derive_ip_witness(
    phi: &PartitionedFormula,
    m: &FiniteStructure,
    k: usize,
    n_spacing: usize,
    op_witness: &PropertyCertificate,
    budget: &Budget,
) -> Result<IpOutcome, PipelineError> {
    if k == 0 || n_spacing == 0 {
        return Err(PipelineError::BadParameters);
    }
    if op_witness.kind != PropertyKind::Op {
        return Err(PipelineError::WrongKind(op_witness.kind));
    }
    if !verify_witness(op_witness, phi, m)? {
        return Err(PipelineError::InvalidWitness);
    }

    // Extract a Δ_k-indiscernible subsequence of length kN from the OP
    // parameter sequence.
    let needed = k * n_spacing;
    let deltas = delta_k(phi, k);
    let found = extract_indiscernible(m, &deltas, k, &op_witness.b, needed, budget)?;
    let sub = found.ok_or(PipelineError::InsufficientWitness {
        needed,
        have: op_witness.b.len(),
    })?;
    let b_sub: Vec<Tuple> = sub.elements;
    let anchors: Vec<Tuple> = (0..k).map(|i| b_sub[i * n_spacing].clone()).collect();

    // Selection: which subsets of {1..k} are realized against the anchors.
    let ext = phi.ext_matrix(m)?;
    let msize = m.size();
    let anchor_rows: Vec<&crate::bits::BitSet> = anchors
        .iter()
        .map(|c| ext.row(tuple_rank(c, msize)))
        .collect();
    let full = crate::bits::BitSet::full(ext.x_count());
    let mut selected = Vec::new();
    let mut unselected = Vec::new();
    let mut realizers: Vec<Option<usize>> = Vec::with_capacity(1 << k);
    for mask in 0u32..(1 << k) {
        let mut cand = full.clone();
        for (i, row) in anchor_rows.iter().enumerate() {
            if mask >> i & 1 == 1 {
                cand.intersect_with(row);
            } else {
                cand.subtract(row);
            }
        }
        let first = cand.first_set();
        realizers.push(first);
        if first.is_some() {
            selected.push(mask);
        } else {
            unselected.push(mask);
        }
    }

    if unselected.is_empty() {
        // Assemble the IP(k) certificate for the transposed formula:
        // objects are the anchors (from M^y), parameters the realizers.
        let cert = PropertyCertificate {
            kind: PropertyKind::Ip,
            n: k,
            structure: m.name().to_string(),
            formula: format!("transpose({})", phi.label()),
            a: anchors,
            b: realizers
                .iter()
                .map(|r| tuple_from_rank(r.unwrap(), msize, phi.x_vars.len()))
                .collect(),
        };
        debug_assert!(verify_witness(&cert, &Transposed(phi.clone()), m)?);
        return Ok(IpOutcome::Certificate(cert));
    }

    // Diagnostic: find an adjacent selected/unselected pair and try to
    // exhibit the strict chain the argument predicts.
    let mut witness_pair = None;
    'outer: for &s in &selected {
        for &u in &unselected {
            let diff = s ^ u;
            // Two consecutive member positions j, j+1 with j+1 < k.
            if diff.count_ones() == 2 {
                let lo = diff.trailing_zeros();
                if diff == (0b11 << lo) && (lo as usize) + 1 < k {
                    witness_pair = Some((s, u));
                    break 'outer;
                }
            }
        }
    }
    let chain = match witness_pair {
        Some((s, u)) => exhibit_chain(phi, m, k, n_spacing, &b_sub, s, u)?,
        None => None,
    };
    Ok(IpOutcome::Diagnostic(Box::new(IpDiagnostic {
        anchors,
        selected,
        unselected,
        witness_pair,
        chain,
    })))
}

/// Try to exhibit a strict length-N chain for ψ = φ_{η∧η'} ∧ ±φ(x;y_j) over
/// the filler parameters between two consecutive anchors. Both sign/position
/// variants and both chain directions are tried; the first verified strict
/// chain is returned.
fn exhibit_chain(
    phi: &PartitionedFormula,
    m: &FiniteStructure,
    k: usize,
    n_spacing: usize,
    b_sub: &[Tuple],
    sel: u32,
    unsel: u32,
) -> Result<Option<ChainExhibit>, PipelineError> {
    let diff = sel ^ unsel;
    let j = diff.trailing_zeros() as usize; // 0-based position of the pair
    let common: Vec<usize> = (1..=k)
        .filter(|i| diff >> (i - 1) & 1 == 0 && sel >> (i - 1) & 1 == 1)
        .collect();
    // φ_{η∧η'}: assert only the positions where the two sets agree.
    let agree_positions: Vec<usize> = (1..=k).filter(|i| diff >> (i - 1) & 1 == 0).collect();
    let base = build_phi_eta(phi, &common, k);
    let agreeing = Formula::conjoin(agree_positions.iter().map(|&i| {
        let inst = phi.instantiate(&base.x_vars, &base.y_blocks[i - 1]);
        if common.contains(&i) {
            inst
        } else {
            Formula::not(inst)
        }
    }));

    let mut cache = EvalCache::new();
    for pivot in [j, j + 1] {
        for positive in [true, false] {
            let lit = {
                let inst = phi.instantiate(&base.x_vars, &base.y_blocks[pivot]);
                if positive {
                    inst
                } else {
                    Formula::not(inst)
                }
            };
            let psi = Formula::and(agreeing.clone(), lit);
            // Parameter rows: anchors everywhere except positions j, j+1,
            // which slide through the fillers b_{jN+t}, b_{jN+t+1}.
            let rows: Vec<Vec<Tuple>> = (0..n_spacing)
                .map(|t| {
                    (0..k)
                        .map(|i| {
                            if i == j {
                                b_sub[j * n_spacing + t].clone()
                            } else if i == j + 1 {
                                b_sub[j * n_spacing + t + 1].clone()
                            } else {
                                b_sub[i * n_spacing].clone()
                            }
                        })
                        .collect()
                })
                .collect();
            for forward in [true, false] {
                let ordered: Vec<&Vec<Tuple>> = if forward {
                    rows.iter().collect()
                } else {
                    rows.iter().rev().collect()
                };
                if chain_is_strict(&psi, &base.x_vars, &base.y_blocks, &ordered, m, &mut cache)? {
                    return Ok(Some(ChainExhibit {
                        formula: psi,
                        x_vars: base.x_vars.clone(),
                        y_blocks: base.y_blocks.clone(),
                        params: ordered.into_iter().cloned().collect(),
                    }));
                }
            }
        }
    }
    Ok(None)
}

fn chain_is_strict(
    psi: &Formula,
    x_vars: &[String],
    y_blocks: &[Vec<String>],
    rows: &[&Vec<Tuple>],
    m: &FiniteStructure,
    cache: &mut EvalCache,
) -> Result<bool, EvalError> {
    if rows.len() < 2 {
        return Ok(false);
    }
    let mut sets: Vec<TupleSet> = Vec::with_capacity(rows.len());
    for row in rows {
        let mut val = Valuation::new();
        for (block, tuple) in y_blocks.iter().zip(row.iter()) {
            for (v, &e) in block.iter().zip(tuple.iter()) {
                val.set(v.clone(), e);
            }
        }
        sets.push(defined_set_cached(psi, m, &val, x_vars, cache)?);
    }
    Ok(sets
        .windows(2)
        .all(|w| w[0].is_subset(&w[1]) && w[0] != w[1]))
}
