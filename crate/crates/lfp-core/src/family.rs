//! Generator zoo for structure families and the compact spec strings that
//! describe them on the command line.
//!
//! Spec strings: `pure:1..6`, `succ:2..20`, `linord:2..20`, `paley:5,13,17`,
//! `rg:8..16:seed=7`, `union(succ:2..10, linord:2..10)`. Size lists are
//! comma-separated integers or inclusive ranges `a..b`.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::structure::{disjoint_union, FiniteStructure, TupleSet};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FamilyError {
    #[error("cannot parse family spec `{0}`")]
    BadSpec(String),
    #[error("empty size list in family spec")]
    EmptySizes,
    #[error("paley size {0} is not a prime congruent to 1 mod 4")]
    BadPaleySize(usize),
    #[error("union operands have different lengths ({0} vs {1}); members pair by index")]
    UnequalUnion(usize, usize),
    #[error("structure generation failed: {0}")]
    Structure(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FamilySpec {
    PureSet(Vec<usize>),
    Successor(Vec<usize>),
    LinearOrder(Vec<usize>),
    Paley(Vec<usize>),
    RandomGraph(Vec<usize>, u64),
    Union(Box<FamilySpec>, Box<FamilySpec>),
}

fn parse_sizes(text: &str) -> Result<Vec<usize>, FamilyError> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        if let Some((a, b)) = part.split_once("..") {
            let a: usize = a
                .trim()
                .parse()
                .map_err(|_| FamilyError::BadSpec(text.into()))?;
            let b: usize = b
                .trim()
                .parse()
                .map_err(|_| FamilyError::BadSpec(text.into()))?;
            if a > b {
                return Err(FamilyError::BadSpec(text.into()));
            }
            out.extend(a..=b);
        } else {
            out.push(
                part.parse()
                    .map_err(|_| FamilyError::BadSpec(text.into()))?,
            );
        }
    }
    if out.is_empty() {
        return Err(FamilyError::EmptySizes);
    }
    Ok(out)
}

impl FamilySpec {
    /// Parse a compact spec string. `default_seed` is used for `rg` specs
    /// that do not carry an explicit `seed=` part.
    pub fn parse(text: &str, default_seed: u64) -> Result<FamilySpec, FamilyError> {
        let text = text.trim();
        if let Some(rest) = text.strip_prefix("union(") {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| FamilyError::BadSpec(text.into()))?;
            // Split at the top-level comma (operands may themselves be unions).
            let mut depth = 0usize;
            let mut split = None;
            for (i, c) in inner.char_indices() {
                match c {
                    '(' => depth += 1,
                    ')' => depth = depth.saturating_sub(1),
                    ',' if depth == 0 => {
                        split = Some(i);
                        break;
                    }
                    _ => {}
                }
            }
            let split = split.ok_or_else(|| FamilyError::BadSpec(text.into()))?;
            let left = FamilySpec::parse(&inner[..split], default_seed)?;
            let right = FamilySpec::parse(&inner[split + 1..], default_seed)?;
            return Ok(FamilySpec::Union(Box::new(left), Box::new(right)));
        }
        let mut parts = text.splitn(2, ':');
        let kind = parts.next().unwrap_or_default();
        let rest = parts
            .next()
            .ok_or_else(|| FamilyError::BadSpec(text.into()))?;
        match kind {
            "pure" => Ok(FamilySpec::PureSet(parse_sizes(rest)?)),
            "succ" => Ok(FamilySpec::Successor(parse_sizes(rest)?)),
            "linord" => Ok(FamilySpec::LinearOrder(parse_sizes(rest)?)),
            "paley" => Ok(FamilySpec::Paley(parse_sizes(rest)?)),
            "rg" => {
                let (sizes, seed) = match rest.split_once(":seed=") {
                    Some((s, seed)) => (
                        s,
                        seed.trim()
                            .parse()
                            .map_err(|_| FamilyError::BadSpec(text.into()))?,
                    ),
                    None => (rest, default_seed),
                };
                Ok(FamilySpec::RandomGraph(parse_sizes(sizes)?, seed))
            }
            _ => Err(FamilyError::BadSpec(text.into())),
        }
    }

    pub fn spec_string(&self) -> String {
        fn sizes(v: &[usize]) -> String {
            v.iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(",")
        }
        match self {
            FamilySpec::PureSet(v) => format!("pure:{}", sizes(v)),
            FamilySpec::Successor(v) => format!("succ:{}", sizes(v)),
            FamilySpec::LinearOrder(v) => format!("linord:{}", sizes(v)),
            FamilySpec::Paley(v) => format!("paley:{}", sizes(v)),
            FamilySpec::RandomGraph(v, seed) => format!("rg:{}:seed={seed}", sizes(v)),
            FamilySpec::Union(a, b) => format!("union({},{})", a.spec_string(), b.spec_string()),
        }
    }
}

fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Nonzero quadratic residues mod q.
fn quadratic_residues(q: usize) -> BTreeSet<usize> {
    (1..q).map(|a| (a * a) % q).collect()
}

pub fn pure_set(n: usize) -> FiniteStructure {
    FiniteStructure::new(format!("pure:{n}"), n, Vec::new()).expect("nonzero size")
}

/// `([n], S)` with `S = {(i, i+1)}`.
pub fn successor(n: usize) -> FiniteStructure {
    let tuples: TupleSet = (0..n.saturating_sub(1)).map(|i| vec![i, i + 1]).collect();
    FiniteStructure::new(format!("succ:{n}"), n, vec![("S".to_string(), 2, tuples)])
        .expect("nonzero size")
}

/// `([n], <)` with the natural strict order.
pub fn linear_order(n: usize) -> FiniteStructure {
    let mut tuples = TupleSet::new();
    for i in 0..n {
        for j in (i + 1)..n {
            tuples.insert(vec![i, j]);
        }
    }
    FiniteStructure::new(format!("linord:{n}"), n, vec![("<".to_string(), 2, tuples)])
        .expect("nonzero size")
}

/// The Paley graph on `q` vertices: `E(a,b)` iff `a != b` and `a - b` is a
/// nonzero quadratic residue mod `q`. Requires `q` prime, `q ≡ 1 (mod 4)`
/// (which makes `-1` a residue, hence `E` symmetric).
pub fn paley(q: usize) -> Result<FiniteStructure, FamilyError> {
    if !is_prime(q) || q % 4 != 1 {
        return Err(FamilyError::BadPaleySize(q));
    }
    let qr = quadratic_residues(q);
    let mut tuples = TupleSet::new();
    for a in 0..q {
        for b in 0..q {
            if a != b && qr.contains(&((a + q - b) % q)) {
                tuples.insert(vec![a, b]);
            }
        }
    }
    Ok(
        FiniteStructure::new(format!("paley:{q}"), q, vec![("E".to_string(), 2, tuples)])
            .expect("nonzero size"),
    )
}

/// A random graph on `n` vertices: each unordered pair is an edge
/// independently with probability 1/2, drawn from a ChaCha8 stream seeded by
/// `seed` mixed with `n`, so members of a family are independent but the
/// whole family is reproducible from one seed.
pub fn random_graph(n: usize, seed: u64) -> FiniteStructure {
    let mixed = seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut rng = ChaCha8Rng::seed_from_u64(mixed);
    let mut tuples = TupleSet::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(0.5) {
                tuples.insert(vec![i, j]);
                tuples.insert(vec![j, i]);
            }
        }
    }
    FiniteStructure::new(
        format!("rg:{n}:seed={seed}"),
        n,
        vec![("E".to_string(), 2, tuples)],
    )
    .expect("nonzero size")
}

/// Generate the family described by `spec`, in the order sizes were given.
/// Union families pair operand structures by index.
pub fn generate_family(spec: &FamilySpec) -> Result<Vec<FiniteStructure>, FamilyError> {
    let on_sizes = |sizes: &[usize],
                    f: &dyn Fn(usize) -> Result<FiniteStructure, FamilyError>|
     -> Result<Vec<FiniteStructure>, FamilyError> {
        sizes.iter().map(|&n| f(n)).collect()
    };
    match spec {
        FamilySpec::PureSet(sizes) => on_sizes(sizes, &|n| Ok(pure_set(n))),
        FamilySpec::Successor(sizes) => on_sizes(sizes, &|n| Ok(successor(n))),
        FamilySpec::LinearOrder(sizes) => on_sizes(sizes, &|n| Ok(linear_order(n))),
        FamilySpec::Paley(sizes) => on_sizes(sizes, &paley),
        FamilySpec::RandomGraph(sizes, seed) => on_sizes(sizes, &|n| Ok(random_graph(n, *seed))),
        FamilySpec::Union(a, b) => {
            let left = generate_family(a)?;
            let right = generate_family(b)?;
            if left.len() != right.len() {
                return Err(FamilyError::UnequalUnion(left.len(), right.len()));
            }
            Ok(left
                .iter()
                .zip(right.iter())
                .map(|(l, r)| disjoint_union(l, r))
                .collect())
        }
    }
}
