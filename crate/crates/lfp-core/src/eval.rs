//! Semantics: Tarskian evaluation of FO + lfp formulas on finite
//! structures.
//!
//! Two independent evaluation routes are provided:
//!
//! - the *extension* route materializes, bottom-up, the set of satisfying
//!   assignments of every subformula as a relational table; lfp nodes become
//!   (possibly parameterized) fixpoint computations over such tables. This
//!   is the fast path behind [`eval`] and [`defined_set`].
//! - the *reference* route ([`eval_reference`]) is a plain tree-walking
//!   interpreter with per-tuple fixpoint iteration, kept deliberately
//!   simple; tests use it as an oracle against the extension route.
//!
//! Free relation variables are supplied through a [`Valuation`]; the
//! command-line formula language never exposes them, but lfp bodies
//! manipulated with their binder stripped need them.

use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use thiserror::Error;

use crate::formula::{free_variables, polarity, Formula, Polarity};
use crate::structure::{FiniteStructure, Tuple, TupleSet};
use crate::table::{all_tuples, Table};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("unknown relation `{0}` (not in the structure, valuation, or any lfp binder)")]
    UnboundRelation(String),
    #[error("relation `{rel}` has arity {expected}, got {got} arguments")]
    ArityMismatch {
        rel: String,
        expected: usize,
        got: usize,
    },
    #[error("lfp variable `{rel}` must occur only positively in its body (found {found:?})")]
    Polarity { rel: String, found: Polarity },
    #[error("lfp binder must bind a nonempty tuple of distinct variables")]
    BadBinder,
    #[error("variable `{var}` is bound to {value}, outside the universe 0..{size}")]
    ValueOutOfRange {
        var: String,
        value: usize,
        size: usize,
    },
}

/// Variable and relation-variable environment for evaluation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Valuation {
    vars: BTreeMap<String, usize>,
    rels: BTreeMap<String, (usize, TupleSet)>,
}

impl Valuation {
    pub fn new() -> Self {
        Valuation::default()
    }

    pub fn bind(mut self, var: impl Into<String>, value: usize) -> Self {
        self.vars.insert(var.into(), value);
        self
    }

    pub fn bind_relation(
        mut self,
        name: impl Into<String>,
        arity: usize,
        tuples: TupleSet,
    ) -> Self {
        self.rels.insert(name.into(), (arity, tuples));
        self
    }

    pub fn set(&mut self, var: impl Into<String>, value: usize) {
        self.vars.insert(var.into(), value);
    }

    pub fn get(&self, var: &str) -> Option<usize> {
        self.vars.get(var).copied()
    }

    pub fn vars(&self) -> &BTreeMap<String, usize> {
        &self.vars
    }

    pub fn relation(&self, name: &str) -> Option<&(usize, TupleSet)> {
        self.rels.get(name)
    }

    pub fn relations(&self) -> &BTreeMap<String, (usize, TupleSet)> {
        &self.rels
    }
}

// ---------------------------------------------------------------------------
// Extension route
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum RelDep {
    Set(usize, TupleSet),
    Param(Vec<String>, Table),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct LfpMemoKey {
    node: Formula,
    fixed: BTreeMap<String, usize>,
    rels: BTreeMap<String, RelDep>,
}

/// Memo store for fixpoint computations and structure-closed subformula
/// extensions. One cache serves one structure; reusing it across
/// evaluations of the same formulas amortizes the heavy nested-fixpoint
/// work (e.g. arithmetic gadgets).
#[derive(Debug, Default)]
pub struct EvalCache {
    tag: Option<(String, usize)>,
    lfp: HashMap<LfpMemoKey, Rc<Table>>,
    fo: HashMap<(Formula, BTreeMap<String, usize>), Rc<Table>>,
    stages: HashMap<crate::stages::LfpSpec, Rc<crate::stages::StageTable>>,
}

impl EvalCache {
    pub fn new() -> Self {
        EvalCache::default()
    }

    fn check(&mut self, m: &FiniteStructure) {
        let tag = (m.name().to_string(), m.size());
        match &self.tag {
            None => self.tag = Some(tag),
            Some(t) => assert_eq!(*t, tag, "EvalCache reused across different structures"),
        }
    }

    pub(crate) fn stage_table(
        &mut self,
        spec: &crate::stages::LfpSpec,
    ) -> Option<Rc<crate::stages::StageTable>> {
        self.stages.get(spec).cloned()
    }

    pub(crate) fn store_stage_table(
        &mut self,
        spec: crate::stages::LfpSpec,
        table: Rc<crate::stages::StageTable>,
    ) {
        self.stages.insert(spec, table);
    }
}

struct ParamBinding {
    rel: String,
    bound: Vec<String>,
    table: Table,
}

struct ExtCtx<'a> {
    m: &'a FiniteStructure,
    val: &'a Valuation,
    fixed: BTreeMap<String, usize>,
    params: Vec<ParamBinding>,
    cache: &'a mut EvalCache,
}

/// Extension of an atom read from a plain tuple set, honoring fixed
/// variables and repeated arguments.
fn atom_table<'t>(
    args: &[String],
    tuples: impl Iterator<Item = &'t Tuple>,
    fixed: &BTreeMap<String, usize>,
) -> Table {
    let mut cols: Vec<String> = args
        .iter()
        .filter(|a| !fixed.contains_key(*a))
        .cloned()
        .collect();
    cols.sort();
    cols.dedup();
    let first_pos: Vec<usize> = cols
        .iter()
        .map(|c| args.iter().position(|a| a == c).unwrap())
        .collect();
    let mut rows = std::collections::BTreeSet::new();
    'outer: for t in tuples {
        for (i, a) in args.iter().enumerate() {
            match fixed.get(a) {
                Some(&v) => {
                    if t[i] != v {
                        continue 'outer;
                    }
                }
                None => {
                    let first = args.iter().position(|b| b == a).unwrap();
                    if t[first] != t[i] {
                        continue 'outer;
                    }
                }
            }
        }
        rows.insert(first_pos.iter().map(|&i| t[i]).collect());
    }
    Table::new(cols, rows)
}

/// Extension of an atom whose relation is a parameterized fixpoint table
/// (columns: binder variables plus context columns).
fn apply_param(
    table: &Table,
    bound: &[String],
    args: &[String],
    fixed: &BTreeMap<String, usize>,
) -> Table {
    let ctx_cols: Vec<String> = table
        .cols()
        .iter()
        .filter(|c| !bound.contains(c))
        .cloned()
        .collect();
    let mut out_cols: Vec<String> = ctx_cols.clone();
    for a in args {
        if !fixed.contains_key(a) && !out_cols.contains(a) {
            out_cols.push(a.clone());
        }
    }
    out_cols.sort();

    let bound_pos: Vec<usize> = bound
        .iter()
        .map(|b| table.cols().iter().position(|c| c == b).expect("bound col"))
        .collect();
    let ctx_pos: Vec<usize> = ctx_cols
        .iter()
        .map(|c| table.cols().iter().position(|d| d == c).unwrap())
        .collect();

    let mut rows = std::collections::BTreeSet::new();
    'rows: for row in table.rows() {
        let mut assign: BTreeMap<&str, usize> = BTreeMap::new();
        for (c, &p) in ctx_cols.iter().zip(&ctx_pos) {
            assign.insert(c.as_str(), row[p]);
        }
        for (i, a) in args.iter().enumerate() {
            let v = row[bound_pos[i]];
            match fixed.get(a) {
                Some(&fv) => {
                    if v != fv {
                        continue 'rows;
                    }
                }
                None => match assign.get(a.as_str()) {
                    Some(&prev) => {
                        if prev != v {
                            continue 'rows;
                        }
                    }
                    None => {
                        assign.insert(a.as_str(), v);
                    }
                },
            }
        }
        rows.insert(out_cols.iter().map(|c| assign[c.as_str()]).collect());
    }
    Table::new(out_cols, rows)
}

/// A subformula whose relation symbols all come from the structure (no lfp
/// parameters in scope, no valuation relations) has a fixed extension per
/// structure; such extensions are memoized so fixpoint rounds do not
/// rematerialize loop-invariant pieces.
fn structure_closed(f: &Formula, cx: &ExtCtx) -> bool {
    crate::formula::free_relation_variables(f)
        .iter()
        .all(|(name, arity)| {
            cx.params.iter().all(|p| &p.rel != name)
                && cx.val.relation(name).is_none()
                && cx.m.relation(name).map(|r| r.arity()) == Some(*arity)
        })
}

fn extension(f: &Formula, cx: &mut ExtCtx) -> Result<Table, EvalError> {
    let memo_key = match f {
        Formula::True | Formula::False | Formula::Eq(_, _) | Formula::Atom { .. } => None,
        _ if structure_closed(f, cx) => {
            let fixed: BTreeMap<String, usize> = free_variables(f)
                .into_iter()
                .filter_map(|v| cx.fixed.get(&v).map(|&x| (v, x)))
                .collect();
            Some((f.clone(), fixed))
        }
        _ => None,
    };
    if let Some(key) = &memo_key {
        if let Some(hit) = cx.cache.fo.get(key) {
            return Ok((**hit).clone());
        }
    }
    let out = extension_uncached(f, cx)?;
    if let Some(key) = memo_key {
        cx.cache.fo.insert(key, Rc::new(out.clone()));
    }
    Ok(out)
}

fn extension_uncached(f: &Formula, cx: &mut ExtCtx) -> Result<Table, EvalError> {
    let msize = cx.m.size();
    match f {
        Formula::True => Ok(Table::boolean(true)),
        Formula::False => Ok(Table::boolean(false)),
        Formula::Eq(a, b) => {
            let fa = cx.fixed.get(a).copied();
            let fb = cx.fixed.get(b).copied();
            Ok(match (fa, fb) {
                (Some(va), Some(vb)) => Table::boolean(va == vb),
                (Some(va), None) => {
                    if va < msize {
                        Table::new(vec![b.clone()], [vec![va]])
                    } else {
                        Table::new(vec![b.clone()], [])
                    }
                }
                (None, Some(vb)) => {
                    if vb < msize {
                        Table::new(vec![a.clone()], [vec![vb]])
                    } else {
                        Table::new(vec![a.clone()], [])
                    }
                }
                (None, None) if a == b => Table::new(vec![a.clone()], (0..msize).map(|v| vec![v])),
                (None, None) => {
                    Table::new(vec![a.clone(), b.clone()], (0..msize).map(|v| vec![v, v]))
                }
            })
        }
        Formula::Atom { rel, args } => {
            // Innermost lfp binder first, then the valuation, then the
            // structure.
            if let Some(pi) = cx.params.iter().rposition(|p| &p.rel == rel) {
                let (bound, table) = {
                    let p = &cx.params[pi];
                    (p.bound.clone(), p.table.clone())
                };
                if bound.len() != args.len() {
                    return Err(EvalError::ArityMismatch {
                        rel: rel.clone(),
                        expected: bound.len(),
                        got: args.len(),
                    });
                }
                return Ok(apply_param(&table, &bound, args, &cx.fixed));
            }
            if let Some((arity, tuples)) = cx.val.relation(rel) {
                if *arity != args.len() {
                    return Err(EvalError::ArityMismatch {
                        rel: rel.clone(),
                        expected: *arity,
                        got: args.len(),
                    });
                }
                return Ok(atom_table(args, tuples.iter(), &cx.fixed));
            }
            match cx.m.relation(rel) {
                Some(r) => {
                    if r.arity() != args.len() {
                        return Err(EvalError::ArityMismatch {
                            rel: rel.clone(),
                            expected: r.arity(),
                            got: args.len(),
                        });
                    }
                    Ok(atom_table(args, r.iter(), &cx.fixed))
                }
                None => Err(EvalError::UnboundRelation(rel.clone())),
            }
        }
        Formula::Not(inner) => Ok(extension(inner, cx)?.complement(msize)),
        Formula::And(a, b) => {
            let ta = extension(a, cx)?;
            let tb = extension(b, cx)?;
            Ok(ta.join(&tb))
        }
        Formula::Or(a, b) => {
            let ta = extension(a, cx)?;
            let tb = extension(b, cx)?;
            Ok(ta.union(&tb, msize))
        }
        Formula::Implies(a, b) => {
            let ta = extension(a, cx)?;
            let tb = extension(b, cx)?;
            Ok(ta.complement(msize).union(&tb, msize))
        }
        Formula::Exists(v, body) => {
            let saved = cx.fixed.remove(v);
            let t = extension(body, cx);
            if let Some(val) = saved {
                cx.fixed.insert(v.clone(), val);
            }
            Ok(t?.project_out(v))
        }
        Formula::Forall(v, body) => {
            let saved = cx.fixed.remove(v);
            let t = extension(body, cx);
            if let Some(val) = saved {
                cx.fixed.insert(v.clone(), val);
            }
            let t = t?;
            if t.cols().iter().any(|c| c == v) {
                Ok(t.complement(msize).project_out(v).complement(msize))
            } else {
                // v not free in the body: over a nonempty universe the
                // quantifier is vacuous.
                Ok(t)
            }
        }
        Formula::Lfp {
            rel,
            vars,
            body,
            args,
        } => {
            let fix = lfp_extension(rel, vars, body, cx)?;
            Ok(apply_param(&fix, vars, args, &cx.fixed))
        }
    }
}

/// Compute the (possibly parameterized) least fixed point of `body` over the
/// binder `vars`, memoized in the cache. The returned table has the binder
/// variables plus any context columns of the body.
fn lfp_extension(
    rel: &str,
    vars: &[String],
    body: &Formula,
    cx: &mut ExtCtx,
) -> Result<Table, EvalError> {
    if vars.is_empty() || (1..vars.len()).any(|i| vars[..i].contains(&vars[i])) {
        return Err(EvalError::BadBinder);
    }
    let found = polarity(body, rel);
    if !found.admissible_for_lfp() {
        return Err(EvalError::Polarity {
            rel: rel.to_string(),
            found,
        });
    }

    // Binder variables shadow fixed context for the whole computation.
    let mut saved_fixed = Vec::new();
    for v in vars {
        saved_fixed.push((v.clone(), cx.fixed.remove(v)));
    }

    let result = lfp_extension_inner(rel, vars, body, cx);

    for (v, old) in saved_fixed.into_iter().rev() {
        if let Some(val) = old {
            cx.fixed.insert(v, val);
        }
    }
    result
}

fn lfp_extension_inner(
    rel: &str,
    vars: &[String],
    body: &Formula,
    cx: &mut ExtCtx,
) -> Result<Table, EvalError> {
    let body_free = free_variables(body);
    let fixed_restricted: BTreeMap<String, usize> = body_free
        .iter()
        .filter_map(|v| cx.fixed.get(v).map(|&x| (v.clone(), x)))
        .collect();
    let mut rel_deps: BTreeMap<String, RelDep> = BTreeMap::new();
    for (name, _arity) in crate::formula::free_relation_variables(body) {
        if name == rel {
            continue;
        }
        if let Some(p) = cx.params.iter().rev().find(|p| p.rel == name) {
            rel_deps.insert(name, RelDep::Param(p.bound.clone(), p.table.clone()));
        } else if let Some((arity, tuples)) = cx.val.relation(&name) {
            rel_deps.insert(name, RelDep::Set(*arity, tuples.clone()));
        }
        // Structure relations are constant per cache.
    }
    let key = LfpMemoKey {
        node: Formula::Lfp {
            rel: rel.to_string(),
            vars: vars.to_vec(),
            body: Box::new(body.clone()),
            args: vars.to_vec(),
        },
        fixed: fixed_restricted,
        rels: rel_deps,
    };
    cx.cache.check(cx.m);
    if let Some(hit) = cx.cache.lfp.get(&key) {
        return Ok((**hit).clone());
    }

    // Columns: binder variables plus unfixed context variables of the body.
    let mut cols: Vec<String> = vars.to_vec();
    for v in &body_free {
        if !cols.contains(v) && !cx.fixed.contains_key(v) {
            cols.push(v.clone());
        }
    }
    cols.sort();

    let msize = cx.m.size();
    let mut current = Table::new(cols.clone(), []);
    loop {
        cx.params.push(ParamBinding {
            rel: rel.to_string(),
            bound: vars.to_vec(),
            table: current.clone(),
        });
        let stepped = extension(body, cx);
        cx.params.pop();
        let next = stepped?.pad_to(&cols, msize);
        if next == current {
            break;
        }
        debug_assert!(
            current.rows().is_subset(next.rows()),
            "fixpoint iteration must be monotone"
        );
        current = next;
    }
    cx.cache.lfp.insert(key, Rc::new(current.clone()));
    Ok(current)
}

fn check_free_vars_bound(f: &Formula, bound: impl Fn(&str) -> bool) -> Result<(), EvalError> {
    for v in free_variables(f) {
        if !bound(&v) {
            return Err(EvalError::UnboundVariable(v));
        }
    }
    Ok(())
}

fn check_values_in_range(val: &Valuation, m: &FiniteStructure) -> Result<(), EvalError> {
    for (var, &value) in val.vars() {
        if value >= m.size() {
            return Err(EvalError::ValueOutOfRange {
                var: var.clone(),
                value,
                size: m.size(),
            });
        }
    }
    Ok(())
}

/// Tarskian truth of `f` under `val` (which must bind all free variables).
pub fn eval(f: &Formula, m: &FiniteStructure, val: &Valuation) -> Result<bool, EvalError> {
    let mut cache = EvalCache::new();
    eval_cached(f, m, val, &mut cache)
}

/// [`eval`] against a shared cache (one cache per structure).
pub fn eval_cached(
    f: &Formula,
    m: &FiniteStructure,
    val: &Valuation,
    cache: &mut EvalCache,
) -> Result<bool, EvalError> {
    check_free_vars_bound(f, |v| val.get(v).is_some())?;
    check_values_in_range(val, m)?;
    cache.check(m);
    let mut cx = ExtCtx {
        m,
        val,
        fixed: val.vars().clone(),
        params: Vec::new(),
        cache,
    };
    let t = extension(f, &mut cx)?;
    debug_assert!(t.cols().is_empty());
    Ok(t.truth())
}

/// The set `{ t over vars(over) : M ⊨ f[over := t] }`, with any remaining
/// free variables fixed by `val`.
pub fn defined_set(
    f: &Formula,
    m: &FiniteStructure,
    val: &Valuation,
    over: &[String],
) -> Result<TupleSet, EvalError> {
    let mut cache = EvalCache::new();
    defined_set_cached(f, m, val, over, &mut cache)
}

pub fn defined_set_cached(
    f: &Formula,
    m: &FiniteStructure,
    val: &Valuation,
    over: &[String],
    cache: &mut EvalCache,
) -> Result<TupleSet, EvalError> {
    check_free_vars_bound(f, |v| over.iter().any(|o| o == v) || val.get(v).is_some())?;
    check_values_in_range(val, m)?;
    cache.check(m);
    let mut fixed = val.vars().clone();
    for v in over {
        fixed.remove(v);
    }
    let mut cx = ExtCtx {
        m,
        val,
        fixed,
        params: Vec::new(),
        cache,
    };
    let t = extension(f, &mut cx)?;
    let mut cols: Vec<String> = over.to_vec();
    cols.sort();
    cols.dedup();
    let t = t.pad_to(&cols, m.size());
    Ok(t.rows_in_order(over))
}

/// One application of the operator Γ defined by an lfp body: the set of
/// binder tuples satisfying `body` when the bound relation variable denotes
/// `current`.
pub fn gamma_step(
    spec: &crate::stages::LfpSpec,
    m: &FiniteStructure,
    val: &Valuation,
    current: &TupleSet,
    cache: &mut EvalCache,
) -> Result<TupleSet, EvalError> {
    gamma_extension(&spec.rel, &spec.vars, &spec.body, m, val, current, cache)
}

/// As [`gamma_step`], spelled out for the stage machinery.
pub(crate) fn gamma_extension(
    rel: &str,
    vars: &[String],
    body: &Formula,
    m: &FiniteStructure,
    val: &Valuation,
    current: &TupleSet,
    cache: &mut EvalCache,
) -> Result<TupleSet, EvalError> {
    check_free_vars_bound(body, |v| {
        vars.iter().any(|o| o == v) || val.get(v).is_some()
    })?;
    cache.check(m);
    let mut fixed = val.vars().clone();
    for v in vars {
        fixed.remove(v);
    }
    let param = ParamBinding {
        rel: rel.to_string(),
        bound: vars.to_vec(),
        table: Table::new(vars.to_vec(), current.iter().cloned()),
    };
    let mut cx = ExtCtx {
        m,
        val,
        fixed,
        params: vec![param],
        cache,
    };
    let t = extension(body, &mut cx)?;
    let mut cols: Vec<String> = vars.to_vec();
    cols.sort();
    let t = t.pad_to(&cols, m.size());
    Ok(t.rows_in_order(vars))
}

// ---------------------------------------------------------------------------
// Reference route: a tree-walking interpreter used as an independent oracle.
// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq, Eq, Hash)]
struct RefMemoKey {
    node: Formula,
    fo: BTreeMap<String, usize>,
    rels: BTreeMap<String, (usize, TupleSet)>,
}

pub(crate) struct RefEngine<'a> {
    m: &'a FiniteStructure,
    memo: HashMap<RefMemoKey, Rc<TupleSet>>,
}

impl<'a> RefEngine<'a> {
    pub(crate) fn new(m: &'a FiniteStructure) -> Self {
        RefEngine {
            m,
            memo: HashMap::new(),
        }
    }

    pub(crate) fn eval(
        &mut self,
        f: &Formula,
        vars: &mut BTreeMap<String, usize>,
        rels: &mut Vec<(String, usize, TupleSet)>,
    ) -> Result<bool, EvalError> {
        match f {
            Formula::True => Ok(true),
            Formula::False => Ok(false),
            Formula::Eq(a, b) => {
                let va = *vars
                    .get(a)
                    .ok_or_else(|| EvalError::UnboundVariable(a.clone()))?;
                let vb = *vars
                    .get(b)
                    .ok_or_else(|| EvalError::UnboundVariable(b.clone()))?;
                Ok(va == vb)
            }
            Formula::Atom { rel, args } => {
                let mut tuple = Vec::with_capacity(args.len());
                for a in args {
                    tuple.push(
                        *vars
                            .get(a)
                            .ok_or_else(|| EvalError::UnboundVariable(a.clone()))?,
                    );
                }
                if let Some((_, arity, set)) = rels.iter().rev().find(|(n, _, _)| n == rel) {
                    if *arity != args.len() {
                        return Err(EvalError::ArityMismatch {
                            rel: rel.clone(),
                            expected: *arity,
                            got: args.len(),
                        });
                    }
                    return Ok(set.contains(&tuple));
                }
                match self.m.relation(rel) {
                    Some(r) => {
                        if r.arity() != args.len() {
                            return Err(EvalError::ArityMismatch {
                                rel: rel.clone(),
                                expected: r.arity(),
                                got: args.len(),
                            });
                        }
                        Ok(r.contains(&tuple))
                    }
                    None => Err(EvalError::UnboundRelation(rel.clone())),
                }
            }
            Formula::Not(inner) => Ok(!self.eval(inner, vars, rels)?),
            Formula::And(a, b) => Ok(self.eval(a, vars, rels)? && self.eval(b, vars, rels)?),
            Formula::Or(a, b) => Ok(self.eval(a, vars, rels)? || self.eval(b, vars, rels)?),
            Formula::Implies(a, b) => Ok(!self.eval(a, vars, rels)? || self.eval(b, vars, rels)?),
            Formula::Forall(v, body) => {
                let saved = vars.get(v).copied();
                let mut result = true;
                for e in 0..self.m.size() {
                    vars.insert(v.clone(), e);
                    if !self.eval(body, vars, rels)? {
                        result = false;
                        break;
                    }
                }
                restore(vars, v, saved);
                Ok(result)
            }
            Formula::Exists(v, body) => {
                let saved = vars.get(v).copied();
                let mut result = false;
                for e in 0..self.m.size() {
                    vars.insert(v.clone(), e);
                    if self.eval(body, vars, rels)? {
                        result = true;
                        break;
                    }
                }
                restore(vars, v, saved);
                Ok(result)
            }
            Formula::Lfp {
                rel,
                vars: bound,
                body,
                args,
            } => {
                let fix = self.fixpoint(rel, bound, body, vars, rels)?;
                let mut tuple = Vec::with_capacity(args.len());
                for a in args {
                    tuple.push(
                        *vars
                            .get(a)
                            .ok_or_else(|| EvalError::UnboundVariable(a.clone()))?,
                    );
                }
                Ok(fix.contains(&tuple))
            }
        }
    }

    /// Per-tuple fixpoint iteration: each round re-checks only tuples not
    /// yet derived (sound since the operator is monotone).
    pub(crate) fn fixpoint(
        &mut self,
        rel: &str,
        bound: &[String],
        body: &Formula,
        vars: &mut BTreeMap<String, usize>,
        rels: &mut Vec<(String, usize, TupleSet)>,
    ) -> Result<Rc<TupleSet>, EvalError> {
        if bound.is_empty() || (1..bound.len()).any(|i| bound[..i].contains(&bound[i])) {
            return Err(EvalError::BadBinder);
        }
        let found = polarity(body, rel);
        if !found.admissible_for_lfp() {
            return Err(EvalError::Polarity {
                rel: rel.to_string(),
                found,
            });
        }

        let body_free = free_variables(body);
        let fo: BTreeMap<String, usize> = body_free
            .iter()
            .filter(|v| !bound.contains(v))
            .filter_map(|v| vars.get(v).map(|&x| (v.clone(), x)))
            .collect();
        let rel_deps: BTreeMap<String, (usize, TupleSet)> =
            crate::formula::free_relation_variables(body)
                .into_iter()
                .filter(|(n, _)| n != rel)
                .filter_map(|(n, _)| {
                    rels.iter()
                        .rev()
                        .find(|(m, _, _)| *m == n)
                        .map(|(_, a, s)| (n, (*a, s.clone())))
                })
                .collect();
        let key = RefMemoKey {
            node: Formula::Lfp {
                rel: rel.to_string(),
                vars: bound.to_vec(),
                body: Box::new(body.clone()),
                args: bound.to_vec(),
            },
            fo,
            rels: rel_deps,
        };
        if let Some(hit) = self.memo.get(&key) {
            return Ok(Rc::clone(hit));
        }

        let k = bound.len();
        let candidates = all_tuples(self.m.size(), k);
        let mut current = TupleSet::new();
        let saved: Vec<(String, Option<usize>)> = bound
            .iter()
            .map(|v| (v.clone(), vars.get(v).copied()))
            .collect();
        loop {
            rels.push((rel.to_string(), k, current.clone()));
            let mut fresh = Vec::new();
            for t in &candidates {
                if current.contains(t) {
                    continue;
                }
                for (v, &e) in bound.iter().zip(t.iter()) {
                    vars.insert(v.clone(), e);
                }
                if self.eval(body, vars, rels)? {
                    fresh.push(t.clone());
                }
            }
            rels.pop();
            if fresh.is_empty() {
                break;
            }
            current.extend(fresh);
        }
        for (v, old) in &saved {
            restore(vars, v, *old);
        }
        let rc = Rc::new(current);
        self.memo.insert(key, Rc::clone(&rc));
        Ok(rc)
    }
}

fn restore(vars: &mut BTreeMap<String, usize>, v: &str, saved: Option<usize>) {
    match saved {
        Some(x) => {
            vars.insert(v.to_string(), x);
        }
        None => {
            vars.remove(v);
        }
    }
}

/// Truth of `f` via the tree-walking reference interpreter.
pub fn eval_reference(
    f: &Formula,
    m: &FiniteStructure,
    val: &Valuation,
) -> Result<bool, EvalError> {
    check_values_in_range(val, m)?;
    let mut engine = RefEngine::new(m);
    let mut vars = val.vars().clone();
    let mut rels: Vec<(String, usize, TupleSet)> = val
        .relations()
        .iter()
        .map(|(n, (a, s))| (n.clone(), *a, s.clone()))
        .collect();
    engine.eval(f, &mut vars, &mut rels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{linear_order, successor};
    use crate::parser::{parse_formula, parse_formula_with, MacroSet};
    use crate::signature::Signature;

    fn reach_formula() -> Formula {
        let sig = Signature::new([("S", 2)]).unwrap();
        parse_formula("[lfp T(x). (A y. !S(y,x)) | E y. (S(y,x) & T(y))](u)", &sig).unwrap()
    }

    #[test]
    fn eval_order_atoms() {
        let m = linear_order(3);
        let sig = m.signature();
        let f = parse_formula("x < y", &sig).unwrap();
        let val = Valuation::new().bind("x", 1).bind("y", 2);
        assert!(eval(&f, &m, &val).unwrap());
        let val = Valuation::new().bind("x", 2).bind("y", 1);
        assert!(!eval(&f, &m, &val).unwrap());
    }

    #[test]
    fn eval_minimum_sentence() {
        let m = linear_order(3);
        let f = parse_formula("E x. A y. (x = y | x < y)", &m.signature()).unwrap();
        assert!(eval(&f, &m, &Valuation::new()).unwrap());
    }

    #[test]
    fn eval_reach_on_successor() {
        let m = successor(4);
        let f = reach_formula();
        for u in 0..4 {
            let val = Valuation::new().bind("u", u);
            assert!(eval(&f, &m, &val).unwrap(), "element {u} is reachable");
            assert!(eval_reference(&f, &m, &val).unwrap());
        }
    }

    #[test]
    fn unbound_variable_is_an_error() {
        let m = linear_order(3);
        let f = parse_formula("x < y", &m.signature()).unwrap();
        let err = eval(&f, &m, &Valuation::new().bind("x", 0)).unwrap_err();
        assert_eq!(err, EvalError::UnboundVariable("y".into()));
    }

    #[test]
    fn arity_mismatch_is_an_error() {
        // Hand-built AST applying the binary order symbol to one argument.
        let m = linear_order(3);
        let f = Formula::atom("<", ["x"]);
        let val = Valuation::new().bind("x", 0);
        let err = eval(&f, &m, &val).unwrap_err();
        assert!(matches!(
            err,
            EvalError::ArityMismatch {
                expected: 2,
                got: 1,
                ..
            }
        ));
        let err = eval_reference(&f, &m, &val).unwrap_err();
        assert!(matches!(
            err,
            EvalError::ArityMismatch {
                expected: 2,
                got: 1,
                ..
            }
        ));
    }

    #[test]
    fn free_relation_variable_via_valuation() {
        let m = successor(3);
        let sig = m.signature();
        let body = parse_formula_with(
            "S(y,x) & T(y)",
            &sig,
            &[("T".into(), 1)],
            &MacroSet::default(),
        )
        .unwrap();
        let t_set: TupleSet = [vec![0]].into();
        let val = Valuation::new()
            .bind("x", 1)
            .bind("y", 0)
            .bind_relation("T", 1, t_set);
        assert!(eval(&body, &m, &val).unwrap());
        assert!(eval_reference(&body, &m, &val).unwrap());
    }

    #[test]
    fn defined_set_of_reach_prefix() {
        // On succ:4 the reach fixpoint is everything; the defined set of the
        // whole lfp formula over u is the universe.
        let m = successor(4);
        let f = reach_formula();
        let set = defined_set(&f, &m, &Valuation::new(), &["u".into()]).unwrap();
        assert_eq!(set.len(), 4);
    }

    #[test]
    fn forall_vacuous_quantification() {
        let m = linear_order(2);
        let f = parse_formula("A z. x < y", &m.signature()).unwrap();
        let val = Valuation::new().bind("x", 0).bind("y", 1);
        assert!(eval(&f, &m, &val).unwrap());
        assert!(eval_reference(&f, &m, &val).unwrap());
    }

    #[test]
    fn extension_and_reference_agree_on_random_cases() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let m = linear_order(4);
        let sig = m.signature();
        let texts = [
            "E x. A y. (x = y | x < y)",
            "A x. E y. x < y",
            "E x. (x < y & y < z)",
            "A x. (x < y -> E w. (x < w & w < y))",
            "!(E x. A y. y < x)",
        ];
        for text in texts {
            let f = parse_formula(text, &sig).unwrap();
            let frees = crate::formula::free_variables(&f);
            for _ in 0..5 {
                let mut val = Valuation::new();
                for v in &frees {
                    val.set(v.clone(), rng.gen_range(0..4));
                }
                assert_eq!(
                    eval(&f, &m, &val).unwrap(),
                    eval_reference(&f, &m, &val).unwrap(),
                    "mismatch on {text}"
                );
            }
        }
    }

    #[test]
    fn nested_lfp_with_context_variable() {
        // Inner fixpoint parameterized by an outer bound variable:
        // D(u,v) holds iff u and v are the same distance from 0, phrased
        // with an inner lfp that reaches forward from w.
        let m = successor(5);
        let sig = m.signature();
        // above(w, x): x reachable from w by S-steps (contextual w).
        let above = parse_formula("[lfp U(x). S(w,x) | E y. (S(y,x) & U(y))](v)", &sig).unwrap();
        // E w. (above holds of (w,v)) & w = u  — v strictly above u.
        let f = Formula::exists("w", Formula::and(above, Formula::eq("w", "u")));
        let val = Valuation::new().bind("u", 1).bind("v", 3);
        assert!(eval(&f, &m, &val).unwrap());
        assert!(eval_reference(&f, &m, &val).unwrap());
        let val = Valuation::new().bind("u", 3).bind("v", 1);
        assert!(!eval(&f, &m, &val).unwrap());
        assert!(!eval_reference(&f, &m, &val).unwrap());
    }

    #[test]
    fn polarity_violation_rejected_at_eval() {
        // Hand-built AST bypassing the parser.
        let m = successor(3);
        let bad = Formula::lfp("T", ["x"], Formula::not(Formula::atom("T", ["x"])), ["u"]);
        let err = eval(&bad, &m, &Valuation::new().bind("u", 0)).unwrap_err();
        assert!(matches!(err, EvalError::Polarity { .. }));
        let err = eval_reference(&bad, &m, &Valuation::new().bind("u", 0)).unwrap_err();
        assert!(matches!(err, EvalError::Polarity { .. }));
    }
}
