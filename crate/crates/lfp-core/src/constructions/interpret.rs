//! Tuple interpretation and relativization.
//!
//! `interpret` rewrites a formula over `{<, =}` into the vocabulary of a
//! preorder λ of width n: every variable becomes an n-block, `v < w`
//! becomes the strict part `λ(v̄,w̄) ∧ ¬λ(w̄,v̄)`, and `v = w` becomes the
//! equivalence `λ(v̄,w̄) ∧ λ(w̄,v̄)`. For semantic preorders (stage
//! comparison) the same semantics is provided by evaluating on the quotient
//! linear order instead.

use std::collections::BTreeMap;

use thiserror::Error;

use super::preorders::{PreorderFormula, StagePreorder};
use crate::bits::BitSet;
use crate::dividing::{ExtMatrix, Probe};
use crate::eval::{defined_set, eval, EvalCache, EvalError, Valuation};
use crate::family::linear_order;
use crate::formula::{free_relation_variables, Formula, NameGen, PartitionedFormula};
use crate::structure::FiniteStructure;
use crate::table::{all_tuples, tuple_rank};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InterpretError {
    #[error("interpretation source must use only `<` and `=`, found `{0}`")]
    ForeignSymbol(String),
}

/// Syntactic interpretation of `pf` (over `{<,=}`) through the preorder
/// `lambda`. The x/y partition expands blockwise.
pub fn interpret(
    pf: &PartitionedFormula,
    lambda: &PreorderFormula,
) -> Result<PartitionedFormula, InterpretError> {
    for (name, _arity) in free_relation_variables(&pf.formula) {
        if name != "<" {
            return Err(InterpretError::ForeignSymbol(name));
        }
    }
    let n = lambda.width();
    let mut gen = NameGen::avoiding_formula(&lambda.formula.formula);
    gen.reserve_formula(&pf.formula);

    let mut env: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for v in pf.x_vars.iter().chain(pf.y_vars.iter()) {
        env.insert(v.clone(), gen.fresh_block(v, n));
    }
    let body = rewrite(&pf.formula, lambda, n, &mut env, &mut gen);
    let x_vars: Vec<String> = pf.x_vars.iter().flat_map(|v| env[v].clone()).collect();
    let y_vars: Vec<String> = pf.y_vars.iter().flat_map(|v| env[v].clone()).collect();
    Ok(PartitionedFormula::new(body, x_vars, y_vars)
        .expect("blockwise expansion preserves the partition"))
}

fn strict_part(lambda: &PreorderFormula, a: &[String], b: &[String]) -> Formula {
    Formula::and(lambda.at(a, b), Formula::not(lambda.at(b, a)))
}

fn equiv_part(lambda: &PreorderFormula, a: &[String], b: &[String]) -> Formula {
    Formula::and(lambda.at(a, b), lambda.at(b, a))
}

fn rewrite(
    f: &Formula,
    lambda: &PreorderFormula,
    n: usize,
    env: &mut BTreeMap<String, Vec<String>>,
    gen: &mut NameGen,
) -> Formula {
    match f {
        Formula::True => Formula::True,
        Formula::False => Formula::False,
        Formula::Atom { rel, args } if rel == "<" => {
            strict_part(lambda, &env[&args[0]].clone(), &env[&args[1]].clone())
        }
        Formula::Atom { rel, args } => {
            // Relation variables bound by lfp: expand argument blocks.
            let expanded: Vec<String> = args.iter().flat_map(|a| env[a].clone()).collect();
            Formula::Atom {
                rel: rel.clone(),
                args: expanded,
            }
        }
        Formula::Eq(a, b) => equiv_part(lambda, &env[a].clone(), &env[b].clone()),
        Formula::Not(inner) => Formula::not(rewrite(inner, lambda, n, env, gen)),
        Formula::And(a, b) => Formula::and(
            rewrite(a, lambda, n, env, gen),
            rewrite(b, lambda, n, env, gen),
        ),
        Formula::Or(a, b) => Formula::or(
            rewrite(a, lambda, n, env, gen),
            rewrite(b, lambda, n, env, gen),
        ),
        Formula::Implies(a, b) => Formula::implies(
            rewrite(a, lambda, n, env, gen),
            rewrite(b, lambda, n, env, gen),
        ),
        Formula::Forall(v, body) => {
            let block = gen.fresh_block(v, n);
            let saved = env.insert(v.clone(), block.clone());
            let inner = rewrite(body, lambda, n, env, gen);
            restore_env(env, v, saved);
            Formula::forall_block(&block, inner)
        }
        Formula::Exists(v, body) => {
            let block = gen.fresh_block(v, n);
            let saved = env.insert(v.clone(), block.clone());
            let inner = rewrite(body, lambda, n, env, gen);
            restore_env(env, v, saved);
            Formula::exists_block(&block, inner)
        }
        Formula::Lfp {
            rel,
            vars,
            body,
            args,
        } => {
            let blocks: Vec<Vec<String>> = vars.iter().map(|v| gen.fresh_block(v, n)).collect();
            let saved: Vec<_> = vars
                .iter()
                .zip(blocks.iter())
                .map(|(v, b)| env.insert(v.clone(), b.clone()))
                .collect();
            let inner = rewrite(body, lambda, n, env, gen);
            for (v, s) in vars.iter().zip(saved) {
                restore_env(env, v, s);
            }
            let expanded_args: Vec<String> = args.iter().flat_map(|a| env[a].clone()).collect();
            Formula::Lfp {
                rel: rel.clone(),
                vars: blocks.into_iter().flatten().collect(),
                body: Box::new(inner),
                args: expanded_args,
            }
        }
    }
}

fn restore_env(env: &mut BTreeMap<String, Vec<String>>, v: &str, saved: Option<Vec<String>>) {
    match saved {
        Some(b) => {
            env.insert(v.to_string(), b);
        }
        None => {
            env.remove(v);
        }
    }
}

/// Semantic interpretation through a stage-comparison preorder: `pf` (over
/// `{<,=}`) is evaluated on the quotient of `M^n` by the preorder, which is
/// a finite linear order, and truth is pulled back along the class map.
#[derive(Debug, Clone)]
pub struct InterpretedFormula {
    pf: PartitionedFormula,
    pre: StagePreorder,
}

impl InterpretedFormula {
    pub fn new(
        pf: PartitionedFormula,
        pre: StagePreorder,
    ) -> Result<InterpretedFormula, InterpretError> {
        for (name, _arity) in free_relation_variables(&pf.formula) {
            if name != "<" {
                return Err(InterpretError::ForeignSymbol(name));
            }
        }
        Ok(InterpretedFormula { pf, pre })
    }

    /// The class index of every n-tuple (classes ordered by stage, with the
    /// outside-the-fixpoint top class last), plus the class count.
    fn class_map(
        &self,
        m: &FiniteStructure,
        cache: &mut EvalCache,
    ) -> Result<(Vec<usize>, usize), EvalError> {
        let table = crate::stages::stage_table_memo(&self.pre.spec, m, cache)?;
        let width = self.pre.spec.arity();
        let tuples = all_tuples(m.size(), width);
        let has_top = table.fixpoint_len() < tuples.len();
        let count = table.closure() + usize::from(has_top);
        let map = tuples
            .iter()
            .map(|t| match table.stage_of(t) {
                Some(s) => s - 1,
                None => count - 1,
            })
            .collect();
        Ok((map, count))
    }
}

impl Probe for InterpretedFormula {
    fn x_arity(&self) -> usize {
        self.pf.x_vars.len() * self.pre.spec.arity()
    }

    fn y_arity(&self) -> usize {
        self.pf.y_vars.len() * self.pre.spec.arity()
    }

    fn label(&self) -> String {
        format!("interpret({}, {})", self.pf.label(), self.pre.label())
    }

    fn compatible(&self, m: &FiniteStructure) -> bool {
        self.pre.compatible(m)
    }

    fn ext_matrix(&self, m: &FiniteStructure) -> Result<ExtMatrix, EvalError> {
        let (classes, count) = self.class_map(m, &mut EvalCache::new())?;
        let quotient = linear_order(count);
        let over: Vec<String> = self
            .pf
            .x_vars
            .iter()
            .chain(self.pf.y_vars.iter())
            .cloned()
            .collect();
        let base = defined_set(&self.pf.formula, &quotient, &Valuation::new(), &over)?;

        let width = self.pre.spec.arity();
        let p = self.pf.x_vars.len();
        let q = self.pf.y_vars.len();
        let msize = m.size();
        let x_count = msize.pow((p * width) as u32);
        let y_count = msize.pow((q * width) as u32);
        let mut rows = vec![BitSet::new(x_count); y_count];
        // Walk all block tuples, map to classes, and look up in the base set.
        let xs = all_tuples(msize, p * width);
        let ys = all_tuples(msize, q * width);
        let to_classes = |t: &[usize]| -> Vec<usize> {
            t.chunks(width)
                .map(|chunk| classes[tuple_rank(chunk, msize)])
                .collect()
        };
        let x_classes: Vec<Vec<usize>> = xs.iter().map(|t| to_classes(t)).collect();
        let y_classes: Vec<Vec<usize>> = ys.iter().map(|t| to_classes(t)).collect();
        for (yr, yc) in y_classes.iter().enumerate() {
            let row = &mut rows[yr];
            for (xr, xc) in x_classes.iter().enumerate() {
                let mut key = xc.clone();
                key.extend(yc.iter().copied());
                if base.contains(&key) {
                    row.set(xr);
                }
            }
        }
        Ok(ExtMatrix {
            universe: msize,
            x_arity: p * width,
            y_arity: q * width,
            rows,
        })
    }

    fn eval_pair(
        &self,
        m: &FiniteStructure,
        xt: &[usize],
        yt: &[usize],
        cache: &mut EvalCache,
    ) -> Result<bool, EvalError> {
        let (classes, count) = self.class_map(m, cache)?;
        let quotient = linear_order(count);
        let width = self.pre.spec.arity();
        let mut val = Valuation::new();
        for (v, chunk) in self.pf.x_vars.iter().zip(xt.chunks(width)) {
            val.set(v.clone(), classes[tuple_rank(chunk, m.size())]);
        }
        for (v, chunk) in self.pf.y_vars.iter().zip(yt.chunks(width)) {
            val.set(v.clone(), classes[tuple_rank(chunk, m.size())]);
        }
        eval(&self.pf.formula, &quotient, &val)
    }
}

/// Relativize a formula to a unary marker: all quantifiers (and lfp stages)
/// are bounded to the marked subuniverse and free variables are guarded.
pub fn relativize(f: &Formula, marker: &str) -> Formula {
    let guards: Vec<Formula> = crate::formula::free_variables(f)
        .into_iter()
        .map(|v| Formula::atom(marker, [v]))
        .collect();
    let core = relativize_inner(f, marker);
    if guards.is_empty() {
        core
    } else {
        Formula::conjoin(guards.into_iter().chain([core]))
    }
}

fn relativize_inner(f: &Formula, marker: &str) -> Formula {
    match f {
        Formula::True | Formula::False | Formula::Atom { .. } | Formula::Eq(_, _) => f.clone(),
        Formula::Not(inner) => Formula::not(relativize_inner(inner, marker)),
        Formula::And(a, b) => {
            Formula::and(relativize_inner(a, marker), relativize_inner(b, marker))
        }
        Formula::Or(a, b) => Formula::or(relativize_inner(a, marker), relativize_inner(b, marker)),
        Formula::Implies(a, b) => {
            Formula::implies(relativize_inner(a, marker), relativize_inner(b, marker))
        }
        Formula::Forall(v, body) => Formula::forall(
            v.clone(),
            Formula::implies(
                Formula::atom(marker, [v.clone()]),
                relativize_inner(body, marker),
            ),
        ),
        Formula::Exists(v, body) => Formula::exists(
            v.clone(),
            Formula::and(
                Formula::atom(marker, [v.clone()]),
                relativize_inner(body, marker),
            ),
        ),
        Formula::Lfp {
            rel,
            vars,
            body,
            args,
        } => {
            let bound = Formula::conjoin(vars.iter().map(|v| Formula::atom(marker, [v.clone()])));
            Formula::Lfp {
                rel: rel.clone(),
                vars: vars.clone(),
                body: Box::new(Formula::and(bound, relativize_inner(body, marker))),
                args: args.clone(),
            }
        }
    }
}

/// Relativize a partitioned formula (the partition is unchanged).
pub fn relativize_partitioned(pf: &PartitionedFormula, marker: &str) -> PartitionedFormula {
    PartitionedFormula::new(
        relativize(&pf.formula, marker),
        pf.x_vars.clone(),
        pf.y_vars.clone(),
    )
    .expect("guarding free variables keeps them free")
}
