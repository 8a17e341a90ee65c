//! Defining sentences: for each property and `n` there is a sentence true
//! in a structure exactly when a `kind(n)` witness exists. The sentence is
//! first-order when the probed formula is, and carries its lfp applications
//! otherwise. IP and TP2 sentences blow up as `2^n` and `n^n + n²`, so hard
//! caps keep them constructible.

use thiserror::Error;

use super::PropertyKind;
use crate::formula::{Formula, NameGen, PartitionedFormula};

pub const IP_SENTENCE_CAP: usize = 3;
pub const TP2_SENTENCE_CAP: usize = 2;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SentenceError {
    #[error("n must be >= 1")]
    BadN,
    #[error("{kind} sentences are capped at n <= {cap}, got {n}")]
    CapExceeded {
        kind: PropertyKind,
        cap: usize,
        n: usize,
    },
}

/// Build the sentence asserting a `kind(n)` witness for `pf` exists.
pub fn build_property_sentence(
    kind: PropertyKind,
    pf: &PartitionedFormula,
    n: usize,
) -> Result<Formula, SentenceError> {
    if n == 0 {
        return Err(SentenceError::BadN);
    }
    match kind {
        PropertyKind::Ip if n > IP_SENTENCE_CAP => Err(SentenceError::CapExceeded {
            kind,
            cap: IP_SENTENCE_CAP,
            n,
        }),
        PropertyKind::Tp2 if n > TP2_SENTENCE_CAP => Err(SentenceError::CapExceeded {
            kind,
            cap: TP2_SENTENCE_CAP,
            n,
        }),
        PropertyKind::Op => Ok(op_sentence(pf, n)),
        PropertyKind::Sop => Ok(sop_sentence(pf, n)),
        PropertyKind::Ip => Ok(ip_sentence(pf, n)),
        PropertyKind::Tp2 => Ok(tp2_sentence(pf, n)),
    }
}

fn namer(pf: &PartitionedFormula) -> NameGen {
    NameGen::avoiding_formula(&pf.formula)
}

fn signed(f: Formula, positive: bool) -> Formula {
    if positive {
        f
    } else {
        Formula::not(f)
    }
}

/// ∃ā ∃b̄ ⋀_{i,j} ±φ(a_i;b_j) with sign `i < j`.
fn op_sentence(pf: &PartitionedFormula, n: usize) -> Formula {
    let mut gen = namer(pf);
    let xblocks: Vec<Vec<String>> = (1..=n)
        .map(|i| gen.fresh_block(&format!("x{i}"), pf.x_vars.len()))
        .collect();
    let yblocks: Vec<Vec<String>> = (1..=n)
        .map(|j| gen.fresh_block(&format!("y{j}"), pf.y_vars.len()))
        .collect();
    let mut conjuncts = Vec::new();
    for (i, xb) in xblocks.iter().enumerate() {
        for (j, yb) in yblocks.iter().enumerate() {
            conjuncts.push(signed(pf.instantiate(xb, yb), i < j));
        }
    }
    let mut body = Formula::conjoin(conjuncts);
    for block in xblocks.iter().chain(yblocks.iter()).rev() {
        body = Formula::exists_block(block, body);
    }
    body
}

/// ∃b̄ [ ⋀_i (∀x φ(x;b_i)→φ(x;b_{i+1})) ∧ ⋀_i ∃x (φ(x;b_{i+1}) ∧ ¬φ(x;b_i)) ].
fn sop_sentence(pf: &PartitionedFormula, n: usize) -> Formula {
    let mut gen = namer(pf);
    let yblocks: Vec<Vec<String>> = (1..=n)
        .map(|j| gen.fresh_block(&format!("y{j}"), pf.y_vars.len()))
        .collect();
    let xblock = gen.fresh_block("x", pf.x_vars.len());
    let mut conjuncts = Vec::new();
    for i in 0..n.saturating_sub(1) {
        conjuncts.push(Formula::forall_block(
            &xblock,
            Formula::implies(
                pf.instantiate(&xblock, &yblocks[i]),
                pf.instantiate(&xblock, &yblocks[i + 1]),
            ),
        ));
        conjuncts.push(Formula::exists_block(
            &xblock,
            Formula::and(
                pf.instantiate(&xblock, &yblocks[i + 1]),
                Formula::not(pf.instantiate(&xblock, &yblocks[i])),
            ),
        ));
    }
    // n = 1: a single parameter tuple always exists (nonempty universe).
    let mut body = Formula::conjoin(conjuncts);
    for block in yblocks.iter().rev() {
        body = Formula::exists_block(block, body);
    }
    body
}

/// ∃ā ∃b̄_1..b̄_{2^n} ⋀_{i,J} ±φ(a_i;b_J) with sign `i ∈ J`.
fn ip_sentence(pf: &PartitionedFormula, n: usize) -> Formula {
    let mut gen = namer(pf);
    let xblocks: Vec<Vec<String>> = (1..=n)
        .map(|i| gen.fresh_block(&format!("x{i}"), pf.x_vars.len()))
        .collect();
    let yblocks: Vec<Vec<String>> = (1..=(1usize << n))
        .map(|j| gen.fresh_block(&format!("y{j}"), pf.y_vars.len()))
        .collect();
    let mut conjuncts = Vec::new();
    for (i0, xb) in xblocks.iter().enumerate() {
        for (j0, yb) in yblocks.iter().enumerate() {
            let member = j0 >> i0 & 1 == 1;
            conjuncts.push(signed(pf.instantiate(xb, yb), member));
        }
    }
    let mut body = Formula::conjoin(conjuncts);
    for block in xblocks.iter().chain(yblocks.iter()).rev() {
        body = Formula::exists_block(block, body);
    }
    body
}

/// ∃b̄-matrix [ row inconsistency ∧ ⋀_f ∃x ⋀_i φ(x;b_{i,f(i)}) ].
fn tp2_sentence(pf: &PartitionedFormula, n: usize) -> Formula {
    let mut gen = namer(pf);
    let blocks: Vec<Vec<Vec<String>>> = (1..=n)
        .map(|i| {
            (1..=n)
                .map(|j| gen.fresh_block(&format!("y{i}_{j}"), pf.y_vars.len()))
                .collect()
        })
        .collect();
    let xblock = gen.fresh_block("x", pf.x_vars.len());
    let mut conjuncts = Vec::new();
    for row in &blocks {
        for j in 0..n {
            for k in (j + 1)..n {
                conjuncts.push(Formula::not(Formula::exists_block(
                    &xblock,
                    Formula::and(
                        pf.instantiate(&xblock, &row[j]),
                        pf.instantiate(&xblock, &row[k]),
                    ),
                )));
            }
        }
    }
    let mut f = vec![0usize; n];
    loop {
        let path = Formula::conjoin((0..n).map(|i| pf.instantiate(&xblock, &blocks[i][f[i]])));
        conjuncts.push(Formula::exists_block(&xblock, path));
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
            break;
        }
    }
    let mut body = Formula::conjoin(conjuncts);
    for row in blocks.iter().rev() {
        for block in row.iter().rev() {
            body = Formula::exists_block(block, body);
        }
    }
    body
}
