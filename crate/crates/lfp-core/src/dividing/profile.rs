//! Family-level profiling: for every structure, probe, and property kind,
//! the maximal certified `n` up to a cap, with closure-ordinal columns for
//! lfp probes and a heuristic growth verdict per column.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::detect::{detect, Budget, SearchError};
use super::probe::Probe;
use super::{PropertyCertificate, PropertyKind};
use crate::structure::FiniteStructure;

/// One (structure, probe, kind) cell of a profile.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CellResult {
    /// Largest `n` with a stored certificate (0 when none, even at n = 1).
    pub max_n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<PropertyCertificate>,
    /// Set when the cell could not be decided (budget exhausted or the
    /// probe's vocabulary is absent from the structure).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub annotation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProfileRow {
    pub structure: String,
    pub size: usize,
    /// Cells keyed by probe label, then kind.
    pub cells: BTreeMap<String, BTreeMap<PropertyKind, CellResult>>,
    /// Closure ordinals for probes that carry an lfp computation.
    pub closures: BTreeMap<String, usize>,
}

/// Heuristic growth verdict for a (probe, kind) column across a family
/// prefix. Any finite run only sees a prefix, so this is a best-effort
/// reading, not a proof.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GrowthVerdict {
    /// Column is nondecreasing and still growing within the prefix.
    UnboundedWithinPrefix,
    /// Column stopped growing (or never grew).
    Plateaued,
    /// Some cell was undecided, so no verdict.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FamilyProfile {
    pub rows: Vec<ProfileRow>,
    /// Verdict per (probe label, kind).
    pub verdicts: BTreeMap<String, BTreeMap<PropertyKind, GrowthVerdict>>,
}

impl FamilyProfile {
    /// The max-n column for one (probe, kind) pair, in family order.
    pub fn column(&self, probe: &str, kind: PropertyKind) -> Vec<Option<usize>> {
        self.rows
            .iter()
            .map(|r| {
                r.cells.get(probe).and_then(|m| {
                    m.get(&kind)
                        .filter(|c| c.annotation.is_none())
                        .map(|c| c.max_n)
                })
            })
            .collect()
    }
}

fn judge(column: &[Option<usize>], n_cap: usize) -> GrowthVerdict {
    if column.iter().any(Option::is_none) || column.is_empty() {
        return GrowthVerdict::Inconclusive;
    }
    let values: Vec<usize> = column.iter().map(|c| c.unwrap()).collect();
    if !values.windows(2).all(|w| w[0] <= w[1]) {
        return GrowthVerdict::Plateaued;
    }
    let last = *values.last().unwrap();
    // Growth that hits the measurement cap cannot be told apart from a
    // plateau at the cap; read it as still growing.
    if last == n_cap && values.first() != values.last() {
        return GrowthVerdict::UnboundedWithinPrefix;
    }
    // A plateau is only confirmed by a trailing run of at least three equal
    // entries; shorter flat tails may just be slow growth.
    let trailing = values.iter().rev().take_while(|&&v| v == last).count();
    if trailing >= 3 || values.first() == values.last() {
        GrowthVerdict::Plateaued
    } else {
        GrowthVerdict::UnboundedWithinPrefix
    }
}

/// Largest certified n for one cell: walk n upward until detection fails.
/// Detection is monotone in n, so the first failure is conclusive.
fn profile_cell<P: Probe>(
    probe: &P,
    m: &FiniteStructure,
    kind: PropertyKind,
    n_cap: usize,
    budget: &Budget,
) -> CellResult {
    if !probe.compatible(m) {
        return CellResult {
            max_n: 0,
            certificate: None,
            annotation: Some("n/a".into()),
        };
    }
    let mut best: Option<PropertyCertificate> = None;
    for n in 1..=n_cap {
        match detect(kind, probe, m, n, budget) {
            Ok(Some(cert)) => best = Some(cert),
            Ok(None) => break,
            Err(SearchError::BudgetExhausted { nodes }) => {
                return CellResult {
                    max_n: best.as_ref().map_or(0, |c| c.n),
                    certificate: best,
                    annotation: Some(format!("budget exhausted at n={n} ({nodes} nodes)")),
                };
            }
            Err(e) => {
                return CellResult {
                    max_n: 0,
                    certificate: None,
                    annotation: Some(format!("error: {e}")),
                };
            }
        }
    }
    CellResult {
        max_n: best.as_ref().map_or(0, |c| c.n),
        certificate: best,
        annotation: None,
    }
}

/// Profile a family against a set of labeled probes. Cells run in a worker
/// pool; assembly is ordered, so the result is deterministic.
pub fn profile_family<P: Probe>(
    family: &[FiniteStructure],
    probes: &[(String, P)],
    kinds: &[PropertyKind],
    n_cap: usize,
    budget: &Budget,
) -> FamilyProfile {
    let mut jobs = Vec::new();
    for si in 0..family.len() {
        for pi in 0..probes.len() {
            for &kind in kinds {
                jobs.push((si, pi, kind));
            }
        }
    }
    let results: Vec<((usize, usize, PropertyKind), CellResult)> = jobs
        .par_iter()
        .map(|&(si, pi, kind)| {
            let cell = profile_cell(&probes[pi].1, &family[si], kind, n_cap, budget);
            ((si, pi, kind), cell)
        })
        .collect();

    let mut rows: Vec<ProfileRow> = family
        .iter()
        .map(|m| ProfileRow {
            structure: m.name().to_string(),
            size: m.size(),
            cells: BTreeMap::new(),
            closures: BTreeMap::new(),
        })
        .collect();
    for ((si, pi, kind), cell) in results {
        rows[si]
            .cells
            .entry(probes[pi].0.clone())
            .or_default()
            .insert(kind, cell);
    }
    for (si, m) in family.iter().enumerate() {
        for (label, probe) in probes {
            if !probe.compatible(m) {
                continue;
            }
            if let Some(Ok(c)) = probe.closure_ordinal(m) {
                rows[si].closures.insert(label.clone(), c);
            }
        }
    }

    let mut verdicts: BTreeMap<String, BTreeMap<PropertyKind, GrowthVerdict>> = BTreeMap::new();
    let profile = FamilyProfile {
        rows,
        verdicts: BTreeMap::new(),
    };
    for (label, _) in probes {
        for &kind in kinds {
            let col = profile.column(label, kind);
            verdicts
                .entry(label.clone())
                .or_default()
                .insert(kind, judge(&col, n_cap));
        }
    }
    FamilyProfile {
        rows: profile.rows,
        verdicts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{linear_order, pure_set};
    use crate::formula::{Formula, PartitionedFormula};
    use crate::parser::parse_formula;
    use crate::signature::Signature;

    fn lt_probe() -> PartitionedFormula {
        let sig = Signature::new([("<", 2)]).unwrap();
        let f = parse_formula("x < y", &sig).unwrap();
        PartitionedFormula::new(f, vec!["x".into()], vec!["y".into()]).unwrap()
    }

    #[test]
    fn sop_column_on_linear_orders_tracks_size() {
        let family: Vec<_> = (2..=6).map(linear_order).collect();
        let probes = vec![("lt".to_string(), lt_probe())];
        let profile = profile_family(
            &family,
            &probes,
            &[PropertyKind::Sop, PropertyKind::Op],
            8,
            &Budget::UNLIMITED,
        );
        let sop_col = profile.column("lt", PropertyKind::Sop);
        assert_eq!(sop_col, vec![Some(2), Some(3), Some(4), Some(5), Some(6)]);
        let op_col = profile.column("lt", PropertyKind::Op);
        assert_eq!(op_col, vec![Some(2), Some(3), Some(4), Some(5), Some(6)]);
        assert_eq!(
            profile.verdicts["lt"][&PropertyKind::Sop],
            GrowthVerdict::UnboundedWithinPrefix
        );
    }

    #[test]
    fn pure_set_plateaus() {
        let family: Vec<_> = (2..=5).map(pure_set).collect();
        let eqf =
            PartitionedFormula::new(Formula::eq("x", "y"), vec!["x".into()], vec!["y".into()])
                .unwrap();
        let probes = vec![("eq".to_string(), eqf)];
        let profile = profile_family(&family, &probes, &PropertyKind::ALL, 6, &Budget::UNLIMITED);
        for kind in PropertyKind::ALL {
            assert_eq!(
                profile.verdicts["eq"][&kind],
                GrowthVerdict::Plateaued,
                "{kind} should plateau on pure sets"
            );
            for col in profile.column("eq", kind) {
                assert!(col.unwrap() <= 2);
            }
        }
    }

    #[test]
    fn incompatible_probe_is_annotated() {
        let family = vec![pure_set(3)];
        let probes = vec![("lt".to_string(), lt_probe())];
        let profile = profile_family(&family, &probes, &[PropertyKind::Op], 3, &Budget::UNLIMITED);
        let cell = &profile.rows[0].cells["lt"][&PropertyKind::Op];
        assert_eq!(cell.annotation.as_deref(), Some("n/a"));
        assert_eq!(
            profile.verdicts["lt"][&PropertyKind::Op],
            GrowthVerdict::Inconclusive
        );
    }
}
