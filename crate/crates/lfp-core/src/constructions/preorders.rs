//! Preorder gadgets: the containment preorder of a partitioned formula, the
//! height formula over a preorder, the (semantic) stage-comparison preorder
//! of an lfp body, and strict chains as sOP witnesses.

use std::collections::BTreeSet;

use crate::bits::BitSet;
use crate::dividing::{ExtMatrix, Probe, PropertyCertificate, PropertyKind};
use crate::eval::{EvalCache, EvalError, Valuation};
use crate::formula::{Formula, NameGen, PartitionedFormula};
use crate::stages::{lfp_stages, LfpSpec, StageTable, Strategy};
use crate::structure::{FiniteStructure, Tuple, TupleSet};
use crate::table::{all_tuples, tuple_rank};

/// A formula `λ(ȳ1; ȳ2)` with equal-width parts, expected to define a
/// reflexive transitive relation on tuples; `linear` marks totality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreorderFormula {
    pub formula: PartitionedFormula,
    pub linear: bool,
}

impl PreorderFormula {
    pub fn width(&self) -> usize {
        self.formula.x_vars.len()
    }

    /// Instantiate `λ(left; right)` at two variable blocks.
    pub fn at(&self, left: &[String], right: &[String]) -> Formula {
        self.formula.instantiate(left, right)
    }

    /// Exhaustively check reflexivity, transitivity (and totality when
    /// tagged linear) on one structure.
    pub fn check_on(&self, m: &FiniteStructure) -> Result<bool, EvalError> {
        let mut cache = EvalCache::new();
        let tuples = all_tuples(m.size(), self.width());
        let holds =
            |a: &Tuple, b: &Tuple, cache: &mut EvalCache| self.formula.eval_pair(m, a, b, cache);
        for a in &tuples {
            if !holds(a, a, &mut cache)? {
                return Ok(false);
            }
            for b in &tuples {
                if self.linear && !holds(a, b, &mut cache)? && !holds(b, a, &mut cache)? {
                    return Ok(false);
                }
                for c in &tuples {
                    if holds(a, b, &mut cache)?
                        && holds(b, c, &mut cache)?
                        && !holds(a, c, &mut cache)?
                    {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }
}

/// The containment preorder `ψ(ȳ1;ȳ2) ≡ ∀x̄ (φ(x̄;ȳ1) → φ(x̄;ȳ2))`:
/// `ψ(b1,b2)` holds exactly when `φ(M;b1) ⊆ φ(M;b2)`.
pub fn containment_preorder(pf: &PartitionedFormula) -> PreorderFormula {
    let mut gen = NameGen::avoiding_formula(&pf.formula);
    let y1 = gen.fresh_block("y1", pf.y_vars.len());
    let y2 = gen.fresh_block("y2", pf.y_vars.len());
    let xb = gen.fresh_block("x", pf.x_vars.len());
    let body = Formula::forall_block(
        &xb,
        Formula::implies(pf.instantiate(&xb, &y1), pf.instantiate(&xb, &y2)),
    );
    let formula = PartitionedFormula::new(body, y1, y2)
        .expect("fresh blocks partition the containment formula");
    PreorderFormula {
        formula,
        linear: false,
    }
}

/// The height body over a preorder: `φ(ȳ;T) ≡ ∀ȳ' ((λ(ȳ',ȳ) ∧ ¬λ(ȳ,ȳ')) →
/// T(ȳ'))`. Its stage set `I^n` is exactly the elements of λ-height `< n`,
/// so its closure ordinal is one more than the largest height.
pub fn height_formula(lambda: &PreorderFormula) -> LfpSpec {
    let width = lambda.width();
    let mut gen = NameGen::avoiding_formula(&lambda.formula.formula);
    let yb = gen.fresh_block("y", width);
    let yp = gen.fresh_block("z", width);
    let rel = "T".to_string();
    let strict_pred = Formula::and(lambda.at(&yp, &yb), Formula::not(lambda.at(&yb, &yp)));
    let body = Formula::forall_block(
        &yp,
        Formula::implies(strict_pred, Formula::atom(rel.clone(), yp.clone())),
    );
    LfpSpec::new(rel, yb, body).expect("T occurs positively in the height body")
}

/// The stage-comparison preorder of an lfp body, as a semantic probe:
/// `λ(b;c)` holds when `‖b‖ <= ‖c‖`, with tuples outside the fixpoint
/// forming a single maximal class so the preorder is total on all of `M^k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StagePreorder {
    pub spec: LfpSpec,
    label: String,
}

impl StagePreorder {
    pub fn new(spec: LfpSpec) -> StagePreorder {
        let label = format!("stage-preorder({})", crate::formula::render(&spec.body));
        StagePreorder { spec, label }
    }

    pub fn with_label(spec: LfpSpec, label: impl Into<String>) -> StagePreorder {
        StagePreorder {
            spec,
            label: label.into(),
        }
    }

    fn stage_table(&self, m: &FiniteStructure) -> Result<StageTable, EvalError> {
        lfp_stages(&self.spec, m, &Valuation::new(), Strategy::Naive)
    }

    /// Stage of a tuple with the outside-the-fixpoint top class mapped to
    /// `usize::MAX`.
    fn rank_of(table: &StageTable, t: &[usize]) -> usize {
        table.stage_of(t).unwrap_or(usize::MAX)
    }
}

impl Probe for StagePreorder {
    fn x_arity(&self) -> usize {
        self.spec.arity()
    }

    fn y_arity(&self) -> usize {
        self.spec.arity()
    }

    fn label(&self) -> String {
        self.label.clone()
    }

    fn compatible(&self, m: &FiniteStructure) -> bool {
        let sig = m.signature();
        crate::formula::free_relation_variables(&self.spec.body)
            .iter()
            .filter(|(n, _)| **n != self.spec.rel)
            .all(|(n, a)| sig.arity(n) == Some(*a))
            && self.spec.context_vars().is_empty()
    }

    fn ext_matrix(&self, m: &FiniteStructure) -> Result<ExtMatrix, EvalError> {
        let table = self.stage_table(m)?;
        let k = self.spec.arity();
        let count = m.size().pow(k as u32);
        let tuples = all_tuples(m.size(), k);
        let ranks: Vec<usize> = tuples.iter().map(|t| Self::rank_of(&table, t)).collect();
        let mut rows = vec![BitSet::new(count); count];
        for (ci, c) in tuples.iter().enumerate() {
            let row = &mut rows[tuple_rank(c, m.size())];
            for (bi, b) in tuples.iter().enumerate() {
                if ranks[bi] <= ranks[ci] {
                    row.set(tuple_rank(b, m.size()));
                }
            }
        }
        Ok(ExtMatrix {
            universe: m.size(),
            x_arity: k,
            y_arity: k,
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
        let table = crate::stages::stage_table_memo(&self.spec, m, cache)?;
        Ok(Self::rank_of(&table, xt) <= Self::rank_of(&table, yt))
    }

    fn closure_ordinal(&self, m: &FiniteStructure) -> Option<Result<usize, EvalError>> {
        Some(self.stage_table(m).map(|t| t.closure()))
    }
}

/// Materialize a probe's relation into a fresh binary relation symbol on a
/// copy of the structure, so semantic preorders can be consumed by purely
/// syntactic constructions (e.g. the height formula).
pub fn materialize_preorder<P: Probe>(
    probe: &P,
    m: &FiniteStructure,
    name: &str,
) -> Result<(FiniteStructure, PreorderFormula), EvalError> {
    assert_eq!(
        probe.x_arity(),
        probe.y_arity(),
        "preorders have equal parts"
    );
    let width = probe.x_arity();
    let ext = probe.ext_matrix(m)?;
    let tuples = all_tuples(m.size(), width);
    let mut rel: TupleSet = BTreeSet::new();
    for c in &tuples {
        let row = ext.row(tuple_rank(c, m.size()));
        for b in &tuples {
            if row.get(tuple_rank(b, m.size())) {
                let mut pair = b.clone();
                pair.extend(c.iter().copied());
                rel.insert(pair);
            }
        }
    }
    let mut rels: Vec<(String, usize, TupleSet)> = m
        .relations()
        .map(|(n, r)| (n.to_string(), r.arity(), r.tuples().clone()))
        .collect();
    rels.push((name.to_string(), 2 * width, rel));
    let derived = FiniteStructure::new(format!("{}+{name}", m.name()), m.size(), rels)
        .expect("materialized relation is in range");

    let mut gen = NameGen::default();
    let y1 = gen.fresh_block("y1", width);
    let y2 = gen.fresh_block("y2", width);
    let mut args = y1.clone();
    args.extend(y2.iter().cloned());
    let formula = PartitionedFormula::new(Formula::atom(name, args), y1, y2)
        .expect("atomic preorder formula partitions");
    Ok((
        derived,
        PreorderFormula {
            formula,
            linear: true,
        },
    ))
}

/// A strict λ-chain `b_1 <_λ … <_λ b_n` yields an sOP(n) certificate with λ
/// itself as the partitioned formula: for a preorder, `λ(M;b_i) ⊊ λ(M;b_j)`
/// exactly when `b_i` strictly precedes `b_j`.
pub fn sop_from_chain(
    lambda: &PreorderFormula,
    chain: &[Tuple],
    m: &FiniteStructure,
) -> PropertyCertificate {
    PropertyCertificate {
        kind: PropertyKind::Sop,
        n: chain.len(),
        structure: m.name().to_string(),
        formula: lambda.formula.label(),
        a: Vec::new(),
        b: chain.to_vec(),
    }
}
