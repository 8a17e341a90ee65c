//! Constructive certificate transformers: each level-wise implication among
//! the dividing lines is realized by rewriting a witness, not by a fresh
//! search.

use thiserror::Error;

use super::probe::Probe;
use super::{PropertyCertificate, PropertyKind};
use crate::eval::EvalError;
use crate::structure::FiniteStructure;
use crate::table::{tuple_from_rank, tuple_rank};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TransformError {
    #[error("expected a {expected} certificate, got {got}")]
    WrongKind {
        expected: PropertyKind,
        got: PropertyKind,
    },
    #[error("certificate payload is malformed: {0}")]
    Malformed(String),
    #[error("no x-tuple outside the first column's extension; IP(1) is not derivable")]
    NoComplementPoint,
    #[error(
        "the top of the chain covers all of M^x, so no OP({0}) row can avoid every parameter; \
         an OP({1}) certificate would still follow from the chain prefix"
    )]
    FullTopExtension(usize, usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// sOP(n) ⇒ OP(n): along a strict chain `φ(M;b_1) ⊊ … ⊊ φ(M;b_n)`, pick
/// `a_i` in `φ(M;b_{i+1}) ∖ φ(M;b_i)`. Then `φ(a_i;b_j) ⟺ i < j` with the
/// same parameters.
pub fn sop_to_op<P: Probe + ?Sized>(
    cert: &PropertyCertificate,
    probe: &P,
    m: &FiniteStructure,
) -> Result<PropertyCertificate, TransformError> {
    if cert.kind != PropertyKind::Sop {
        return Err(TransformError::WrongKind {
            expected: PropertyKind::Sop,
            got: cert.kind,
        });
    }
    let n = cert.n;
    if cert.b.len() != n {
        return Err(TransformError::Malformed("b-part length".into()));
    }
    let ext = probe.ext_matrix(m)?;
    let mut a = Vec::with_capacity(n);
    for i in 0..n {
        // The OP matrix needs a_i ∈ ext(b_j) iff i < j: pick
        // a_i ∈ ext(b_{i+1}) ∖ ext(b_i) for i < n; the last row must avoid
        // every parameter, i.e. lie outside ext(b_n). A chain whose top
        // covers all of M^x admits no such row.
        let rank = if i + 1 < n {
            let mut diff = ext.row(tuple_rank(&cert.b[i + 1], m.size())).clone();
            diff.subtract(ext.row(tuple_rank(&cert.b[i], m.size())));
            diff.first_set().ok_or_else(|| {
                TransformError::Malformed(format!("chain is not strict at position {}", i + 1))
            })?
        } else {
            ext.row(tuple_rank(&cert.b[i], m.size()))
                .complement()
                .first_set()
                .ok_or(TransformError::FullTopExtension(n, n.saturating_sub(1)))?
        };
        a.push(tuple_from_rank(rank, m.size(), probe.x_arity()));
    }
    Ok(PropertyCertificate {
        kind: PropertyKind::Op,
        n,
        structure: cert.structure.clone(),
        formula: cert.formula.clone(),
        a,
        b: cert.b.clone(),
    })
}

/// IP(n) ⇒ OP(n): keep the a-part and take `b'_j := b_J` for the initial
/// segments `J = {1..j-1}`, whose parameter index is `2^(j-1)`.
pub fn ip_to_op(cert: &PropertyCertificate) -> Result<PropertyCertificate, TransformError> {
    if cert.kind != PropertyKind::Ip {
        return Err(TransformError::WrongKind {
            expected: PropertyKind::Ip,
            got: cert.kind,
        });
    }
    let n = cert.n;
    if cert.a.len() != n || cert.b.len() != (1usize << n) {
        return Err(TransformError::Malformed("payload lengths".into()));
    }
    let b = (1..=n)
        .map(|j| cert.b[(1usize << (j - 1)) - 1].clone())
        .collect();
    Ok(PropertyCertificate {
        kind: PropertyKind::Op,
        n,
        structure: cert.structure.clone(),
        formula: cert.formula.clone(),
        a: cert.a.clone(),
        b,
    })
}

/// TP2(n) ⇒ IP(n) for the transposed formula `φ(y;x)`: the new object
/// tuples are the column-1 parameters `b_{i,1}`, and the parameter for a
/// subset `J` is `a_{f_J}` where `f_J(i) = 1` if `i ∈ J` and `2` otherwise
/// (row inconsistency turns satisfaction of column 2 into falsity at column
/// 1). Requires `n >= 2`; for `n = 1` the missing empty-set parameter is
/// found by search when one exists.
pub fn tp2_to_ip<P: Probe + ?Sized>(
    cert: &PropertyCertificate,
    probe: &P,
    m: &FiniteStructure,
) -> Result<PropertyCertificate, TransformError> {
    if cert.kind != PropertyKind::Tp2 {
        return Err(TransformError::WrongKind {
            expected: PropertyKind::Tp2,
            got: cert.kind,
        });
    }
    let n = cert.n;
    if cert.b.len() != n * n || cert.a.len() != n.pow(n as u32) {
        return Err(TransformError::Malformed("payload lengths".into()));
    }
    // IP certificate for the transposed probe: a'-part lives in M^y.
    let a: Vec<Vec<usize>> = (1..=n).map(|i| cert.tp2_entry(i, 1).clone()).collect();
    let mut b = Vec::with_capacity(1usize << n);
    if n == 1 {
        let ext = probe.ext_matrix(m)?;
        let col1 = ext.row(tuple_rank(cert.tp2_entry(1, 1), m.size()));
        let outside = col1
            .complement()
            .first_set()
            .ok_or(TransformError::NoComplementPoint)?;
        b.push(tuple_from_rank(outside, m.size(), probe.x_arity()));
        b.push(cert.a[0].clone());
    } else {
        for j in 1..=(1usize << n) {
            let subset = PropertyCertificate::ip_subset(n, j);
            let f: Vec<usize> = (1..=n)
                .map(|i| if subset.contains(&i) { 1 } else { 2 })
                .collect();
            let rank = PropertyCertificate::tp2_f_rank(n, &f);
            b.push(cert.a[rank].clone());
        }
    }
    Ok(PropertyCertificate {
        kind: PropertyKind::Ip,
        n,
        structure: cert.structure.clone(),
        formula: format!("transpose({})", cert.formula),
        a,
        b,
    })
}
