//! Fixpoint stages, closure ordinals, and stage comparison.
//!
//! Stage indexing: `I^0 = ∅` and `I^{k+1} = Γ(I^k)`, so every tuple in the
//! fixpoint has a stage `>= 1` and the closure ordinal is the number of
//! strict growth steps until stabilization. A body whose operator sends `∅`
//! to `∅` has closure 0 and empty fixpoint.

use std::collections::BTreeMap;

use crate::eval::{gamma_extension, EvalCache, EvalError, RefEngine, Valuation};
use crate::formula::{free_variables, polarity, Formula};
use crate::structure::{FiniteStructure, Tuple, TupleSet};
use crate::table::all_tuples;

/// An lfp body with its binder: `[lfp rel(vars). body]`, not yet applied to
/// an argument tuple.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LfpSpec {
    pub rel: String,
    pub vars: Vec<String>,
    pub body: Formula,
}

impl LfpSpec {
    pub fn new(
        rel: impl Into<String>,
        vars: impl IntoIterator<Item = impl Into<String>>,
        body: Formula,
    ) -> Result<Self, EvalError> {
        let rel = rel.into();
        let vars: Vec<String> = vars.into_iter().map(Into::into).collect();
        if vars.is_empty() || (1..vars.len()).any(|i| vars[..i].contains(&vars[i])) {
            return Err(EvalError::BadBinder);
        }
        let found = polarity(&body, &rel);
        if !found.admissible_for_lfp() {
            return Err(EvalError::Polarity { rel, found });
        }
        Ok(LfpSpec { rel, vars, body })
    }

    /// Split a top-level lfp application `[lfp S(x̄). body](ū)` into its
    /// spec and argument tuple.
    pub fn from_formula(f: &Formula) -> Option<(LfpSpec, Vec<String>)> {
        match f {
            Formula::Lfp {
                rel,
                vars,
                body,
                args,
            } => Some((
                LfpSpec {
                    rel: rel.clone(),
                    vars: vars.clone(),
                    body: (**body).clone(),
                },
                args.clone(),
            )),
            _ => None,
        }
    }

    pub fn arity(&self) -> usize {
        self.vars.len()
    }

    /// The lfp application formula `[lfp rel(vars). body](args)`.
    pub fn apply(&self, args: impl IntoIterator<Item = impl Into<String>>) -> Formula {
        Formula::Lfp {
            rel: self.rel.clone(),
            vars: self.vars.clone(),
            body: Box::new(self.body.clone()),
            args: args.into_iter().map(Into::into).collect(),
        }
    }

    /// Context variables: free variables of the body outside the binder.
    pub fn context_vars(&self) -> Vec<String> {
        free_variables(&self.body)
            .into_iter()
            .filter(|v| !self.vars.contains(v))
            .collect()
    }
}

/// How the fixpoint iteration is driven. Both strategies must produce
/// identical stage tables; they differ in how a round is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Recompute `Γ(I_k)` from scratch each round via the materialized
    /// relational evaluator.
    #[default]
    Naive,
    /// Delta-driven per-tuple iteration: only tuples not yet derived are
    /// re-checked each round (sound because Γ is monotone), using the
    /// tree-walking evaluator.
    SemiNaive,
}

/// Per-tuple stage indices of an lfp computation on one structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageTable {
    arity: usize,
    universe: usize,
    stages: BTreeMap<Tuple, usize>,
    closure: usize,
}

impl StageTable {
    /// The closure ordinal: the least `k` with `I^k = I_φ`.
    pub fn closure(&self) -> usize {
        self.closure
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    /// Stage of a tuple (`None` outside the fixpoint).
    pub fn stage_of(&self, t: &[usize]) -> Option<usize> {
        self.stages.get(t).copied()
    }

    pub fn fixpoint(&self) -> TupleSet {
        self.stages.keys().cloned().collect()
    }

    pub fn fixpoint_len(&self) -> usize {
        self.stages.len()
    }

    /// `I^k = { t : stage(t) <= k }`.
    pub fn stage_set(&self, k: usize) -> TupleSet {
        self.stages
            .iter()
            .filter(|(_, &s)| s <= k)
            .map(|(t, _)| t.clone())
            .collect()
    }

    /// Tuples entering exactly at stage `k`.
    pub fn level(&self, k: usize) -> TupleSet {
        self.stages
            .iter()
            .filter(|(_, &s)| s == k)
            .map(|(t, _)| t.clone())
            .collect()
    }

    /// Levels `1..=closure`, each nonempty.
    pub fn levels(&self) -> Vec<TupleSet> {
        (1..=self.closure).map(|k| self.level(k)).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Tuple, usize)> {
        self.stages.iter().map(|(t, &s)| (t, s))
    }
}

/// Compute the stage table of `spec` on `m`. Extra free variables of the
/// body are fixed by `val`.
pub fn lfp_stages(
    spec: &LfpSpec,
    m: &FiniteStructure,
    val: &Valuation,
    strategy: Strategy,
) -> Result<StageTable, EvalError> {
    match strategy {
        Strategy::Naive => lfp_stages_naive(spec, m, val, &mut EvalCache::new()),
        Strategy::SemiNaive => lfp_stages_semi_naive(spec, m, val),
    }
}

/// As [`lfp_stages`] with the naive strategy against a shared cache.
pub fn lfp_stages_cached(
    spec: &LfpSpec,
    m: &FiniteStructure,
    val: &Valuation,
    cache: &mut EvalCache,
) -> Result<StageTable, EvalError> {
    lfp_stages_naive(spec, m, val, cache)
}

/// Memoized stage table for a context-free spec (no free variables outside
/// the binder): repeated probes of the same fixpoint reuse one table.
pub fn stage_table_memo(
    spec: &LfpSpec,
    m: &FiniteStructure,
    cache: &mut EvalCache,
) -> Result<std::rc::Rc<StageTable>, EvalError> {
    debug_assert!(spec.context_vars().is_empty());
    if let Some(hit) = cache.stage_table(spec) {
        return Ok(hit);
    }
    let table = std::rc::Rc::new(lfp_stages_naive(spec, m, &Valuation::new(), cache)?);
    cache.store_stage_table(spec.clone(), std::rc::Rc::clone(&table));
    Ok(table)
}

fn lfp_stages_naive(
    spec: &LfpSpec,
    m: &FiniteStructure,
    val: &Valuation,
    cache: &mut EvalCache,
) -> Result<StageTable, EvalError> {
    let found = polarity(&spec.body, &spec.rel);
    if !found.admissible_for_lfp() {
        return Err(EvalError::Polarity {
            rel: spec.rel.clone(),
            found,
        });
    }
    let bound = m.size().pow(spec.arity() as u32);
    let mut stages: BTreeMap<Tuple, usize> = BTreeMap::new();
    let mut current = TupleSet::new();
    let mut round = 0usize;
    loop {
        let next = gamma_extension(&spec.rel, &spec.vars, &spec.body, m, val, &current, cache)?;
        debug_assert!(
            current.is_subset(&next),
            "Γ must be inflationary along stages"
        );
        if next == current {
            break;
        }
        round += 1;
        for t in next.difference(&current) {
            stages.insert(t.clone(), round);
        }
        current = next;
        debug_assert!(round <= bound, "closure exceeds |A|^arity");
    }
    Ok(StageTable {
        arity: spec.arity(),
        universe: m.size(),
        stages,
        closure: round,
    })
}

fn lfp_stages_semi_naive(
    spec: &LfpSpec,
    m: &FiniteStructure,
    val: &Valuation,
) -> Result<StageTable, EvalError> {
    let found = polarity(&spec.body, &spec.rel);
    if !found.admissible_for_lfp() {
        return Err(EvalError::Polarity {
            rel: spec.rel.clone(),
            found,
        });
    }
    for v in free_variables(&spec.body) {
        if !spec.vars.contains(&v) && val.get(&v).is_none() {
            return Err(EvalError::UnboundVariable(v));
        }
    }
    let mut engine = RefEngine::new(m);
    let mut vars = val.vars().clone();
    let mut rels: Vec<(String, usize, TupleSet)> = val
        .relations()
        .iter()
        .map(|(n, (a, s))| (n.clone(), *a, s.clone()))
        .collect();

    let k = spec.arity();
    let candidates = all_tuples(m.size(), k);
    let mut stages: BTreeMap<Tuple, usize> = BTreeMap::new();
    let mut current = TupleSet::new();
    let mut round = 0usize;
    loop {
        rels.push((spec.rel.clone(), k, current.clone()));
        let mut fresh = Vec::new();
        for t in &candidates {
            if current.contains(t) {
                continue;
            }
            for (v, &e) in spec.vars.iter().zip(t.iter()) {
                vars.insert(v.clone(), e);
            }
            if engine.eval(&spec.body, &mut vars, &mut rels)? {
                fresh.push(t.clone());
            }
        }
        rels.pop();
        for v in &spec.vars {
            vars.remove(v);
        }
        if fresh.is_empty() {
            break;
        }
        round += 1;
        for t in fresh {
            stages.insert(t.clone(), round);
            current.insert(t);
        }
    }
    Ok(StageTable {
        arity: k,
        universe: m.size(),
        stages,
        closure: round,
    })
}

/// The closure ordinal `‖φ‖` of `spec` on `m`.
pub fn closure_ordinal(
    spec: &LfpSpec,
    m: &FiniteStructure,
    val: &Valuation,
) -> Result<usize, EvalError> {
    Ok(lfp_stages(spec, m, val, Strategy::Naive)?.closure())
}

/// The stage-comparison relation `{(b,c) ∈ I_φ × I_φ : ‖b‖ <= ‖c‖}`,
/// computed semantically from the stage table. It is a linear preorder on
/// the fixpoint whose number of equivalence classes is the closure ordinal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageComparison {
    table: StageTable,
}

impl StageComparison {
    pub fn stage_table(&self) -> &StageTable {
        &self.table
    }

    /// `b ≤_φ c`: both in the fixpoint and stage(b) <= stage(c).
    pub fn holds(&self, b: &[usize], c: &[usize]) -> bool {
        match (self.table.stage_of(b), self.table.stage_of(c)) {
            (Some(sb), Some(sc)) => sb <= sc,
            _ => false,
        }
    }

    /// Number of equivalence classes (equals the closure ordinal).
    pub fn class_count(&self) -> usize {
        self.table.closure()
    }

    /// Equivalence classes in increasing stage order.
    pub fn classes(&self) -> Vec<TupleSet> {
        self.table.levels()
    }

    /// All related pairs, materialized.
    pub fn pairs(&self) -> Vec<(Tuple, Tuple)> {
        let mut out = Vec::new();
        for (b, sb) in self.table.iter() {
            for (c, sc) in self.table.iter() {
                if sb <= sc {
                    out.push((b.clone(), c.clone()));
                }
            }
        }
        out
    }
}

pub fn stage_comparison(
    spec: &LfpSpec,
    m: &FiniteStructure,
    val: &Valuation,
) -> Result<StageComparison, EvalError> {
    Ok(StageComparison {
        table: lfp_stages(spec, m, val, Strategy::Naive)?,
    })
}
