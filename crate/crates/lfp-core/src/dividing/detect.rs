//! Exhaustive witness search for the dividing lines.
//!
//! All searches are depth-first over parameter tuples in row-major numeric
//! order with incremental consistency pruning, so the first witness found is
//! the lexicographically least one and repeated calls return identical
//! certificates. Every candidate slot value counts one search node against
//! the budget; `Ok(None)` is returned only when the search space was
//! exhausted (or `n` exceeds the trivial counting bound, which is refused
//! without searching).

use std::time::{Duration, Instant};

use thiserror::Error;

use super::probe::{ExtMatrix, Probe};
use super::{PropertyCertificate, PropertyKind};
use crate::bits::BitSet;
use crate::eval::EvalError;
use crate::structure::FiniteStructure;
use crate::table::tuple_from_rank;

/// Search budget; `None` means unlimited.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Budget {
    pub max_nodes: Option<u64>,
    pub max_millis: Option<u64>,
}

impl Budget {
    pub const UNLIMITED: Budget = Budget {
        max_nodes: None,
        max_millis: None,
    };

    pub fn nodes(max_nodes: u64) -> Budget {
        Budget {
            max_nodes: Some(max_nodes),
            max_millis: None,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SearchError {
    #[error("search budget exhausted after {nodes} nodes")]
    BudgetExhausted { nodes: u64 },
    #[error("n must be >= 1")]
    BadN,
    #[error("probe must have nonempty x and y parts")]
    BadProbe,
    #[error("ill-formed indiscernibility input: {0}")]
    BadDelta(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Node/deadline accounting for one search.
#[derive(Debug)]
pub struct Meter {
    nodes: u64,
    max_nodes: Option<u64>,
    deadline: Option<Instant>,
}

impl Meter {
    pub fn new(budget: &Budget) -> Meter {
        Meter {
            nodes: 0,
            max_nodes: budget.max_nodes,
            deadline: budget
                .max_millis
                .map(|ms| Instant::now() + Duration::from_millis(ms)),
        }
    }

    pub fn nodes(&self) -> u64 {
        self.nodes
    }

    pub(crate) fn tick(&mut self) -> Result<(), SearchError> {
        self.nodes += 1;
        if let Some(max) = self.max_nodes {
            if self.nodes > max {
                return Err(SearchError::BudgetExhausted { nodes: self.nodes });
            }
        }
        if self.nodes.is_multiple_of(1024) {
            if let Some(deadline) = self.deadline {
                if Instant::now() >= deadline {
                    return Err(SearchError::BudgetExhausted { nodes: self.nodes });
                }
            }
        }
        Ok(())
    }
}

fn pow_sat(base: usize, exp: usize) -> usize {
    let mut out: usize = 1;
    for _ in 0..exp {
        out = out.saturating_mul(base);
    }
    out
}

/// Counting bounds on realizable `n`: distinct parameter tuples are forced
/// by the defining biconditionals, so `n` above these cannot have a witness
/// and is refused without search.
fn within_trivial_bound(kind: PropertyKind, n: usize, x_count: usize, y_count: usize) -> bool {
    match kind {
        PropertyKind::Op => n <= x_count && n <= y_count,
        // A strictly increasing chain of subsets of M^x has length at most
        // |M^x| + 1; the parameters must be distinct.
        PropertyKind::Sop => n <= x_count + 1 && n <= y_count,
        PropertyKind::Ip => n <= x_count && pow_sat(2, n) <= y_count,
        PropertyKind::Tp2 => n <= y_count && pow_sat(n, n) <= x_count,
    }
}

/// Search for a `kind(n)` witness of `probe` in `m`.
pub fn detect<P: Probe + ?Sized>(
    kind: PropertyKind,
    probe: &P,
    m: &FiniteStructure,
    n: usize,
    budget: &Budget,
) -> Result<Option<PropertyCertificate>, SearchError> {
    if n == 0 {
        return Err(SearchError::BadN);
    }
    if probe.x_arity() == 0 || probe.y_arity() == 0 {
        return Err(SearchError::BadProbe);
    }
    let x_count = pow_sat(m.size(), probe.x_arity());
    let y_count = pow_sat(m.size(), probe.y_arity());
    if !within_trivial_bound(kind, n, x_count, y_count) {
        return Ok(None);
    }
    let ext = probe.ext_matrix(m)?;
    let mut meter = Meter::new(budget);
    let payload = match kind {
        PropertyKind::Op => detect_op(&ext, n, &mut meter)?,
        PropertyKind::Sop => detect_sop(&ext, n, &mut meter)?,
        PropertyKind::Ip => detect_ip(&ext, n, &mut meter)?,
        PropertyKind::Tp2 => detect_tp2(&ext, n, &mut meter)?,
    };
    Ok(payload.map(|(a, b)| PropertyCertificate {
        kind,
        n,
        structure: m.name().to_string(),
        formula: probe.label(),
        a,
        b,
    }))
}

type Witness = (Vec<Vec<usize>>, Vec<Vec<usize>>);

fn decode(ranks: &[usize], m: usize, arity: usize) -> Vec<Vec<usize>> {
    ranks
        .iter()
        .map(|&r| tuple_from_rank(r, m, arity))
        .collect()
}

/// OP(n): choose b_1..b_n; candidate sets C_i over x-ranks shrink as the
/// biconditional matrix prefix is fixed. At a leaf, a_i is the least member
/// of C_i.
fn detect_op(ext: &ExtMatrix, n: usize, meter: &mut Meter) -> Result<Option<Witness>, SearchError> {
    let x_count = ext.x_count();
    let full = BitSet::full(x_count);
    let mut chosen: Vec<usize> = Vec::with_capacity(n);
    // Candidate stack: cands[k] holds the n candidate sets after k slots.
    let mut stack: Vec<Vec<BitSet>> = vec![vec![full; n]];

    loop {
        let k = chosen.len();
        if k == n {
            let cands = stack.last().unwrap();
            let a: Vec<usize> = cands.iter().map(|c| c.first_set().unwrap()).collect();
            return Ok(Some((
                decode(&a, ext.universe, ext.x_arity),
                decode(&chosen, ext.universe, ext.y_arity),
            )));
        }
        // Next candidate for slot k (resume from last tried + 1 on backtrack).
        let start = 0;
        match try_op_slot(ext, &mut chosen, &mut stack, start, meter)? {
            true => continue,
            false => {
                // Backtrack: pop the last slot and resume it.
                loop {
                    match chosen.pop() {
                        None => return Ok(None),
                        Some(last) => {
                            stack.pop();
                            if try_op_slot(ext, &mut chosen, &mut stack, last + 1, meter)? {
                                break;
                            }
                        }
                    }
                }
            }
        }
    }
}

fn try_op_slot(
    ext: &ExtMatrix,
    chosen: &mut Vec<usize>,
    stack: &mut Vec<Vec<BitSet>>,
    start: usize,
    meter: &mut Meter,
) -> Result<bool, SearchError> {
    let j = chosen.len() + 1; // 1-indexed slot being filled
    for r in start..ext.y_count() {
        meter.tick()?;
        let row = ext.row(r);
        let prev = stack.last().unwrap();
        let mut next = prev.clone();
        let mut ok = true;
        for (i0, c) in next.iter_mut().enumerate() {
            // a_{i0+1}: in ext(b_j) iff i0+1 < j.
            if i0 + 1 < j {
                c.intersect_with(row);
            } else {
                c.subtract(row);
            }
            if c.is_empty() {
                ok = false;
                break;
            }
        }
        if ok {
            chosen.push(r);
            stack.push(next);
            return Ok(true);
        }
    }
    Ok(false)
}

/// sOP(n): chains of strictly increasing extensions, parameters in lex
/// order.
fn detect_sop(
    ext: &ExtMatrix,
    n: usize,
    meter: &mut Meter,
) -> Result<Option<Witness>, SearchError> {
    let mut chosen: Vec<usize> = Vec::with_capacity(n);

    fn try_slot(
        ext: &ExtMatrix,
        chosen: &mut Vec<usize>,
        start: usize,
        meter: &mut Meter,
    ) -> Result<bool, SearchError> {
        for r in start..ext.y_count() {
            meter.tick()?;
            let ok = match chosen.last() {
                None => true,
                Some(&prev) => {
                    let pr = ext.row(prev);
                    let cr = ext.row(r);
                    pr.is_subset(cr) && pr != cr
                }
            };
            if ok {
                chosen.push(r);
                return Ok(true);
            }
        }
        Ok(false)
    }

    loop {
        if chosen.len() == n {
            return Ok(Some((
                Vec::new(),
                decode(&chosen, ext.universe, ext.y_arity),
            )));
        }
        if try_slot(ext, &mut chosen, 0, meter)? {
            continue;
        }
        loop {
            match chosen.pop() {
                None => return Ok(None),
                Some(last) => {
                    if try_slot(ext, &mut chosen, last + 1, meter)? {
                        break;
                    }
                }
            }
        }
    }
}

/// IP(n): choose b_J for every subset J of {1..n} in index order; candidate
/// sets C_i shrink per placement.
fn detect_ip(ext: &ExtMatrix, n: usize, meter: &mut Meter) -> Result<Option<Witness>, SearchError> {
    let slots = 1usize << n;
    let x_count = ext.x_count();
    let full = BitSet::full(x_count);
    let mut chosen: Vec<usize> = Vec::with_capacity(slots);
    let mut stack: Vec<Vec<BitSet>> = vec![vec![full; n]];

    fn try_slot(
        ext: &ExtMatrix,
        chosen: &mut Vec<usize>,
        stack: &mut Vec<Vec<BitSet>>,
        start: usize,
        meter: &mut Meter,
    ) -> Result<bool, SearchError> {
        let j = chosen.len(); // 0-indexed: subset J = bits of j
        for r in start..ext.y_count() {
            meter.tick()?;
            let row = ext.row(r);
            let prev = stack.last().unwrap();
            let mut next = prev.clone();
            let mut ok = true;
            for (i0, c) in next.iter_mut().enumerate() {
                if j >> i0 & 1 == 1 {
                    c.intersect_with(row);
                } else {
                    c.subtract(row);
                }
                if c.is_empty() {
                    ok = false;
                    break;
                }
            }
            if ok {
                chosen.push(r);
                stack.push(next);
                return Ok(true);
            }
        }
        Ok(false)
    }

    loop {
        if chosen.len() == slots {
            let cands = stack.last().unwrap();
            let a: Vec<usize> = cands.iter().map(|c| c.first_set().unwrap()).collect();
            return Ok(Some((
                decode(&a, ext.universe, ext.x_arity),
                decode(&chosen, ext.universe, ext.y_arity),
            )));
        }
        if try_slot(ext, &mut chosen, &mut stack, 0, meter)? {
            continue;
        }
        loop {
            match chosen.pop() {
                None => return Ok(None),
                Some(last) => {
                    stack.pop();
                    if try_slot(ext, &mut chosen, &mut stack, last + 1, meter)? {
                        break;
                    }
                }
            }
        }
    }
}

/// TP2(n): fill the n×n parameter matrix in row-major order. A slot must
/// have nonempty extension, be extension-disjoint from earlier slots in its
/// row, and intersect every path intersection over the completed rows.
/// Completed-row path intersections are maintained level by level; at the
/// full matrix their least elements are the a_f.
fn detect_tp2(
    ext: &ExtMatrix,
    n: usize,
    meter: &mut Meter,
) -> Result<Option<Witness>, SearchError> {
    let slots = n * n;
    let mut chosen: Vec<usize> = Vec::with_capacity(slots);
    // paths[i] = intersections over complete rows 1..=i, in row-major order
    // of column choices; paths[0] = [full].
    let x_count = ext.x_count();
    let mut paths: Vec<Vec<BitSet>> = vec![vec![BitSet::full(x_count)]];

    fn try_slot(
        ext: &ExtMatrix,
        n: usize,
        chosen: &mut Vec<usize>,
        paths: &mut Vec<Vec<BitSet>>,
        start: usize,
        meter: &mut Meter,
    ) -> Result<bool, SearchError> {
        let slot = chosen.len();
        let row_idx = slot / n;
        let col_idx = slot % n;
        'cands: for r in start..ext.y_count() {
            meter.tick()?;
            let cand = ext.row(r);
            if cand.is_empty() {
                continue;
            }
            // Row disjointness with earlier columns of this row.
            for c in 0..col_idx {
                let other = chosen[row_idx * n + c];
                if !cand.is_disjoint(ext.row(other)) {
                    continue 'cands;
                }
            }
            // Every path over the completed rows must stay satisfiable
            // through this slot.
            for p in paths.last().unwrap() {
                if p.is_disjoint(cand) {
                    continue 'cands;
                }
            }
            chosen.push(r);
            if col_idx == n - 1 {
                // Row complete: extend the path intersections.
                let prev = paths.last().unwrap();
                let mut next = Vec::with_capacity(prev.len() * n);
                for p in prev {
                    for c in 0..n {
                        let mut q = p.clone();
                        q.intersect_with(ext.row(chosen[row_idx * n + c]));
                        debug_assert!(!q.is_empty());
                        next.push(q);
                    }
                }
                paths.push(next);
            }
            return Ok(true);
        }
        Ok(false)
    }

    loop {
        if chosen.len() == slots {
            let a: Vec<usize> = paths
                .last()
                .unwrap()
                .iter()
                .map(|p| p.first_set().unwrap())
                .collect();
            return Ok(Some((
                decode(&a, ext.universe, ext.x_arity),
                decode(&chosen, ext.universe, ext.y_arity),
            )));
        }
        if try_slot(ext, n, &mut chosen, &mut paths, 0, meter)? {
            continue;
        }
        loop {
            match chosen.pop() {
                None => return Ok(None),
                Some(last) => {
                    if chosen.len() % n == n - 1 {
                        // Popped a row-completing slot: drop its path level.
                        paths.pop();
                    }
                    if try_slot(ext, n, &mut chosen, &mut paths, last + 1, meter)? {
                        break;
                    }
                }
            }
        }
    }
}
