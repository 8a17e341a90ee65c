//! Δ-indiscernible subsequences and the φ_η / Δ_k formula families.
//!
//! A sequence is Δ-indiscernible when every formula in Δ takes the same
//! truth value on all increasing k-subsequences. Extraction is exhaustive
//! search with pruning rather than a constructive Ramsey recursion: at desk
//! scale the exhaustive search is simpler and directly verifiable.

use std::collections::HashMap;

use crate::dividing::{Budget, Meter, SearchError};
use crate::eval::{eval_cached, EvalCache, Valuation};
use crate::formula::{free_variables, Formula, NameGen, PartitionedFormula};
use crate::structure::{FiniteStructure, Tuple};

/// `φ_η(x; y_1..y_k)`: φ holds of `(x; y_i)` for exactly the `i ∈ η`.
/// Positive conjuncts come first, then the negated ones, each in ascending
/// block order. The x-part reuses the probe's own variables; the y-blocks
/// are fresh.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhiEta {
    pub formula: Formula,
    pub x_vars: Vec<String>,
    pub y_blocks: Vec<Vec<String>>,
}

/// Build `φ_η` for `η ⊆ {1..k}` (1-indexed members).
pub fn build_phi_eta(pf: &PartitionedFormula, eta: &[usize], k: usize) -> PhiEta {
    debug_assert!(eta.iter().all(|&i| 1 <= i && i <= k));
    let mut gen = NameGen::avoiding_formula(&pf.formula);
    let y_blocks: Vec<Vec<String>> = (1..=k)
        .map(|i| gen.fresh_block(&format!("y{i}"), pf.y_vars.len()))
        .collect();
    let positives = (1..=k)
        .filter(|i| eta.contains(i))
        .map(|i| pf.instantiate(&pf.x_vars, &y_blocks[i - 1]));
    let negatives = (1..=k)
        .filter(|i| !eta.contains(i))
        .map(|i| Formula::not(pf.instantiate(&pf.x_vars, &y_blocks[i - 1])));
    let formula = Formula::conjoin(positives.chain(negatives));
    PhiEta {
        formula,
        x_vars: pf.x_vars.clone(),
        y_blocks,
    }
}

/// `Δ_k`: the family `{ ∃x̄ φ_η(x̄; ȳ) : η ⊆ {1..k} }`, in subset-mask
/// order. Each member has exactly `k · |y|` free variables, grouped
/// blockwise.
pub fn delta_k(pf: &PartitionedFormula, k: usize) -> Vec<Formula> {
    (0u32..(1 << k))
        .map(|mask| {
            let eta: Vec<usize> = (1..=k).filter(|i| mask >> (i - 1) & 1 == 1).collect();
            let pe = build_phi_eta(pf, &eta, k);
            Formula::exists_block(&pe.x_vars, pe.formula)
        })
        .collect()
}

/// A Δ-indiscernible subsequence: positions into the original sequence plus
/// the elements themselves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Indiscernible {
    pub indices: Vec<usize>,
    pub elements: Vec<Tuple>,
}

/// Search for a length-`r` Δ-indiscernible subsequence of `seq` (a sequence
/// of same-arity tuples). Each δ in `delta` must have exactly `k * arity`
/// free variables, which are read in first-occurrence order as `k` blocks
/// of width `arity`. Returns the lexicographically least index set, or
/// `None` after exhaustive search.
pub fn extract_indiscernible(
    m: &FiniteStructure,
    delta: &[Formula],
    k: usize,
    seq: &[Tuple],
    r: usize,
    budget: &Budget,
) -> Result<Option<Indiscernible>, SearchError> {
    if k == 0 || seq.len() < r {
        return Ok(None);
    }
    if r < k {
        // No k-subsequences exist: any subsequence is vacuously
        // indiscernible, so the prefix is the least witness.
        return Ok(Some(Indiscernible {
            indices: (0..r).collect(),
            elements: seq[..r].to_vec(),
        }));
    }
    let arity = seq.first().map_or(0, |t| t.len());
    if seq.iter().any(|t| t.len() != arity) {
        return Err(SearchError::BadDelta(
            "sequence tuples have mixed arities".into(),
        ));
    }
    let var_blocks: Vec<Vec<Vec<String>>> = delta
        .iter()
        .map(|d| {
            let vars = free_variables(d);
            if vars.len() != k * arity {
                return Err(SearchError::BadDelta(format!(
                    "formula has {} free variables, expected {}",
                    vars.len(),
                    k * arity
                )));
            }
            Ok(vars.chunks(arity).map(|c| c.to_vec()).collect())
        })
        .collect::<Result<_, _>>()?;

    let mut searcher = Searcher {
        m,
        delta,
        var_blocks,
        seq,
        k,
        r,
        cache: EvalCache::new(),
        colors: HashMap::new(),
        meter: Meter::new(budget),
        chosen: Vec::with_capacity(r),
        established: None,
    };
    let found = searcher.search(0)?;
    Ok(found.then(|| Indiscernible {
        elements: searcher.chosen.iter().map(|&i| seq[i].clone()).collect(),
        indices: searcher.chosen,
    }))
}

/// DFS state for the extraction: indices are chosen in increasing order and
/// every new index must keep all k-subsets monochromatic with the color
/// established by the first k chosen.
struct Searcher<'a> {
    m: &'a FiniteStructure,
    delta: &'a [Formula],
    var_blocks: Vec<Vec<Vec<String>>>,
    seq: &'a [Tuple],
    k: usize,
    r: usize,
    cache: EvalCache,
    colors: HashMap<Vec<usize>, Vec<bool>>,
    meter: Meter,
    chosen: Vec<usize>,
    established: Option<Vec<bool>>,
}

impl Searcher<'_> {
    /// Truth vector of Δ on the k-subsequence at these positions.
    fn color_of(&mut self, positions: &[usize]) -> Result<Vec<bool>, SearchError> {
        if let Some(c) = self.colors.get(positions) {
            return Ok(c.clone());
        }
        let mut out = Vec::with_capacity(self.delta.len());
        for (d, blocks) in self.delta.iter().zip(&self.var_blocks) {
            let mut val = Valuation::new();
            for (block, &pos) in blocks.iter().zip(positions) {
                for (v, &e) in block.iter().zip(&self.seq[pos]) {
                    val.set(v.clone(), e);
                }
            }
            out.push(eval_cached(d, self.m, &val, &mut self.cache)?);
        }
        self.colors.insert(positions.to_vec(), out.clone());
        Ok(out)
    }

    fn search(&mut self, start: usize) -> Result<bool, SearchError> {
        if self.chosen.len() == self.r {
            return Ok(true);
        }
        for idx in start..self.seq.len() {
            // Not enough room to finish.
            if self.seq.len() - idx < self.r - self.chosen.len() {
                break;
            }
            self.meter.tick()?;
            self.chosen.push(idx);
            let mut ok = true;
            if self.chosen.len() >= self.k {
                // All new k-subsets end at idx.
                let mut subsets = combinations(&self.chosen[..self.chosen.len() - 1], self.k - 1);
                while let Some(mut s) = subsets.pop() {
                    s.push(idx);
                    let c = self.color_of(&s)?;
                    match self.established.as_ref() {
                        None => self.established = Some(c),
                        Some(e) => {
                            if *e != c {
                                ok = false;
                                break;
                            }
                        }
                    }
                }
            }
            if ok && self.search(idx + 1)? {
                return Ok(true);
            }
            // Backtrack; the established color resets only if it was set at
            // depth k by this element.
            if self.chosen.len() == self.k {
                self.established = None;
            }
            self.chosen.pop();
        }
        Ok(false)
    }
}

/// All (k)-element subsets of `items`, each in ascending order.
fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if items.len() < k {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        // advance
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] + (k - i) < items.len() {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Exhaustively confirm Δ-indiscernibility of a subsequence (the
/// verification oracle for extraction results).
pub fn check_indiscernible(
    m: &FiniteStructure,
    delta: &[Formula],
    k: usize,
    elements: &[Tuple],
) -> Result<bool, SearchError> {
    let arity = elements.first().map_or(0, |t| t.len());
    let var_blocks: Vec<Vec<Vec<String>>> = delta
        .iter()
        .map(|d| {
            let vars = free_variables(d);
            if vars.len() != k * arity {
                return Err(SearchError::BadDelta("free variable count".into()));
            }
            Ok(vars.chunks(arity).map(|c| c.to_vec()).collect())
        })
        .collect::<Result<_, _>>()?;
    let mut cache = EvalCache::new();
    let positions: Vec<usize> = (0..elements.len()).collect();
    let subsets = combinations(&positions, k);
    let mut reference: Option<Vec<bool>> = None;
    for s in &subsets {
        let mut color = Vec::with_capacity(delta.len());
        for (d, blocks) in delta.iter().zip(&var_blocks) {
            let mut val = Valuation::new();
            for (block, &pos) in blocks.iter().zip(s) {
                for (v, &e) in block.iter().zip(&elements[pos]) {
                    val.set(v.clone(), e);
                }
            }
            color.push(eval_cached(d, m, &val, &mut cache)?);
        }
        match reference.as_ref() {
            None => reference = Some(color),
            Some(r) => {
                if *r != color {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}
