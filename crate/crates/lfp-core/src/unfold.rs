//! Finite unfolding of an lfp body: `θ_0 = ⊥`, `θ_{k+1} = body[S := θ_k]`.
//! On every structure `θ_k` defines the stage set `I^k`; once `k` reaches
//! the closure ordinal it defines the fixpoint. When the body is lfp-free
//! the unfolding is a plain first-order formula.

use crate::eval::{EvalCache, EvalError, Valuation};
use crate::formula::{substitute_relation, Formula};
use crate::stages::LfpSpec;
use crate::structure::{FiniteStructure, TupleSet};

/// The `k`-th unfolding `θ_k` of the body: contains no occurrence of the
/// bound relation variable.
pub fn unfold_lfp(spec: &LfpSpec, k: usize) -> Formula {
    let mut theta = Formula::False;
    for _ in 0..k {
        theta = substitute_relation(&spec.body, &spec.rel, &theta, &spec.vars)
            .expect("binder arity matches atoms of a validated spec");
    }
    theta
}

/// Least `k <= max_k` such that `θ_k` and `θ_{k+1}` define the same set on
/// every structure of the family, or `None` if no such `k` exists within
/// the budget. When it exists, it equals the largest closure ordinal across
/// the family.
///
/// The set defined by `θ_{k+1} = body[S := θ_k]` equals the set defined by
/// `body` with `S` denoting the set of `θ_k` (substitution is
/// capture-avoiding), so the scan advances each structure by one operator
/// application instead of re-evaluating the ever-growing unfolding text.
/// The syntactic route is exercised separately by the unfolding oracle
/// tests.
pub fn unfold_over_family(
    spec: &LfpSpec,
    family: &[FiniteStructure],
    val: &Valuation,
    max_k: usize,
) -> Result<Option<usize>, EvalError> {
    let mut caches: Vec<EvalCache> = family.iter().map(|_| EvalCache::new()).collect();
    let mut current: Vec<TupleSet> = family.iter().map(|_| TupleSet::new()).collect();
    for k in 0..=max_k {
        let mut next = Vec::with_capacity(family.len());
        for ((m, cache), set) in family.iter().zip(caches.iter_mut()).zip(current.iter()) {
            next.push(crate::eval::gamma_step(spec, m, val, set, cache)?);
        }
        if next == current {
            return Ok(Some(k));
        }
        current = next;
    }
    Ok(None)
}
