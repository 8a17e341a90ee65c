//! The probe abstraction: anything that behaves like a partitioned formula
//! `φ(x;y)` on a structure. Besides syntactic [`PartitionedFormula`]s this
//! covers semantic objects such as stage-comparison preorders, which are
//! evaluable but not written in the grammar.

use crate::bits::BitSet;
use crate::eval::{defined_set_cached, eval_cached, EvalCache, EvalError, Valuation};
use crate::formula::{free_relation_variables, render, PartitionedFormula};
use crate::structure::FiniteStructure;
use crate::table::tuple_rank;

/// The full extension of a probe on one structure, sliced per parameter
/// tuple: `rows[y_rank]` is the bitset of x-tuple ranks satisfying
/// `φ(x; y)`. Ranks are row-major over the universe.
#[derive(Debug, Clone)]
pub struct ExtMatrix {
    pub universe: usize,
    pub x_arity: usize,
    pub y_arity: usize,
    pub rows: Vec<BitSet>,
}

impl ExtMatrix {
    pub fn x_count(&self) -> usize {
        self.universe.pow(self.x_arity as u32)
    }

    pub fn y_count(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, y_rank: usize) -> &BitSet {
        &self.rows[y_rank]
    }

    pub fn holds(&self, x: &[usize], y: &[usize]) -> bool {
        self.rows[tuple_rank(y, self.universe)].get(tuple_rank(x, self.universe))
    }

    /// The matrix of the transposed probe (x and y roles exchanged).
    pub fn transpose(&self) -> ExtMatrix {
        let xc = self.x_count();
        let yc = self.y_count();
        let mut rows = vec![BitSet::new(yc); xc];
        for (yr, row) in self.rows.iter().enumerate() {
            for xr in row.iter_ones() {
                rows[xr].set(yr);
            }
        }
        ExtMatrix {
            universe: self.universe,
            x_arity: self.y_arity,
            y_arity: self.x_arity,
            rows,
        }
    }
}

/// A partitioned-formula-like object evaluable on any structure.
pub trait Probe: Send + Sync {
    fn x_arity(&self) -> usize;
    fn y_arity(&self) -> usize;

    /// Short human-readable name for reports.
    fn label(&self) -> String;

    /// Whether the probe's vocabulary is interpreted in `m`.
    fn compatible(&self, m: &FiniteStructure) -> bool;

    /// Materialize the full extension, sliced per y-tuple.
    fn ext_matrix(&self, m: &FiniteStructure) -> Result<ExtMatrix, EvalError>;

    /// Evaluate one instance `φ(x̄; ȳ)`.
    fn eval_pair(
        &self,
        m: &FiniteStructure,
        xt: &[usize],
        yt: &[usize],
        cache: &mut EvalCache,
    ) -> Result<bool, EvalError>;

    /// Closure ordinal on `m`, for probes carrying an lfp computation.
    fn closure_ordinal(&self, _m: &FiniteStructure) -> Option<Result<usize, EvalError>> {
        None
    }
}

impl Probe for PartitionedFormula {
    fn x_arity(&self) -> usize {
        self.x_vars.len()
    }

    fn y_arity(&self) -> usize {
        self.y_vars.len()
    }

    fn label(&self) -> String {
        render(&self.formula)
    }

    fn compatible(&self, m: &FiniteStructure) -> bool {
        let sig = m.signature();
        free_relation_variables(&self.formula)
            .iter()
            .all(|(n, a)| sig.arity(n) == Some(*a))
    }

    fn ext_matrix(&self, m: &FiniteStructure) -> Result<ExtMatrix, EvalError> {
        let mut cache = EvalCache::new();
        let over: Vec<String> = self
            .x_vars
            .iter()
            .chain(self.y_vars.iter())
            .cloned()
            .collect();
        let set = defined_set_cached(&self.formula, m, &Valuation::new(), &over, &mut cache)?;
        let p = self.x_vars.len();
        let msize = m.size();
        let x_count = msize.pow(p as u32);
        let y_count = msize.pow(self.y_vars.len() as u32);
        let mut rows = vec![BitSet::new(x_count); y_count];
        for t in &set {
            let xr = tuple_rank(&t[..p], msize);
            let yr = tuple_rank(&t[p..], msize);
            rows[yr].set(xr);
        }
        Ok(ExtMatrix {
            universe: msize,
            x_arity: p,
            y_arity: self.y_vars.len(),
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
        debug_assert_eq!(xt.len(), self.x_vars.len());
        debug_assert_eq!(yt.len(), self.y_vars.len());
        let mut val = Valuation::new();
        for (v, &e) in self.x_vars.iter().zip(xt) {
            val.set(v.clone(), e);
        }
        for (v, &e) in self.y_vars.iter().zip(yt) {
            val.set(v.clone(), e);
        }
        eval_cached(&self.formula, m, &val, cache)
    }

    fn closure_ordinal(&self, m: &FiniteStructure) -> Option<Result<usize, EvalError>> {
        let (spec, _args) = crate::stages::LfpSpec::from_formula(&self.formula)?;
        if !spec.context_vars().is_empty() {
            return None;
        }
        Some(crate::stages::closure_ordinal(&spec, m, &Valuation::new()))
    }
}

/// Role-swapping wrapper: `Transposed(φ)(x;y) = φ(y;x)`.
#[derive(Debug, Clone)]
pub struct Transposed<P>(pub P);

impl<P: Probe> Probe for Transposed<P> {
    fn x_arity(&self) -> usize {
        self.0.y_arity()
    }

    fn y_arity(&self) -> usize {
        self.0.x_arity()
    }

    fn label(&self) -> String {
        format!("transpose({})", self.0.label())
    }

    fn compatible(&self, m: &FiniteStructure) -> bool {
        self.0.compatible(m)
    }

    fn ext_matrix(&self, m: &FiniteStructure) -> Result<ExtMatrix, EvalError> {
        Ok(self.0.ext_matrix(m)?.transpose())
    }

    fn eval_pair(
        &self,
        m: &FiniteStructure,
        xt: &[usize],
        yt: &[usize],
        cache: &mut EvalCache,
    ) -> Result<bool, EvalError> {
        self.0.eval_pair(m, yt, xt, cache)
    }
}
