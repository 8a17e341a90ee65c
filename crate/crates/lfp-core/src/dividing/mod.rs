//! Brute-force detectors and verifiers for the combinatorial dividing lines
//! OP(n), sOP(n), IP(n), TP2(n) in a finite structure, plus the defining
//! sentences, certificate transformers, and family-level profiling.

mod detect;
mod probe;
mod profile;
mod sentence;
mod transform;
mod verify;

pub use detect::{detect, Budget, Meter, SearchError};
pub use probe::{ExtMatrix, Probe, Transposed};
pub use profile::{profile_family, CellResult, FamilyProfile, GrowthVerdict, ProfileRow};
pub use sentence::{build_property_sentence, SentenceError};
pub use transform::{ip_to_op, sop_to_op, tp2_to_ip, TransformError};
pub use verify::{verify_witness, VerifyError};

use serde::{Deserialize, Serialize};

use crate::structure::Tuple;

/// The four dividing lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PropertyKind {
    #[serde(rename = "OP")]
    Op,
    #[serde(rename = "sOP")]
    Sop,
    #[serde(rename = "IP")]
    Ip,
    #[serde(rename = "TP2")]
    Tp2,
}

impl PropertyKind {
    pub const ALL: [PropertyKind; 4] = [
        PropertyKind::Op,
        PropertyKind::Sop,
        PropertyKind::Ip,
        PropertyKind::Tp2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PropertyKind::Op => "OP",
            PropertyKind::Sop => "sOP",
            PropertyKind::Ip => "IP",
            PropertyKind::Tp2 => "TP2",
        }
    }

    pub fn parse(text: &str) -> Option<PropertyKind> {
        match text.to_ascii_lowercase().as_str() {
            "op" => Some(PropertyKind::Op),
            "sop" => Some(PropertyKind::Sop),
            "ip" => Some(PropertyKind::Ip),
            "tp2" => Some(PropertyKind::Tp2),
            _ => None,
        }
    }
}

impl std::fmt::Display for PropertyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A verified witness for `kind(n)` in a named structure.
///
/// Payload layout (all tuple lists):
/// - OP: `a[i-1]`, `b[j-1]` for `1 <= i,j <= n`; the defining condition is
///   `φ(a_i;b_j) ⟺ i < j`.
/// - sOP: `a` empty, `b[j-1]` the chain parameters, `φ(M;b_1) ⊊ … ⊊ φ(M;b_n)`.
/// - IP: `a[i-1]` for `1 <= i <= n`, `b[j-1]` for `1 <= j <= 2^n`, where the
///   parameter index `j` encodes the subset `J = { i : bit i-1 of (j-1) }`;
///   condition `φ(a_i;b_j) ⟺ i ∈ J`.
/// - TP2: `b[(i-1)*n + (j-1)]` is the matrix entry `b_{i,j}`; `a[r]` is
///   `a_f` for the function `f` with rank `r = Σ_i (f(i)-1)·n^(n-i)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyCertificate {
    pub kind: PropertyKind,
    pub n: usize,
    pub structure: String,
    pub formula: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub a: Vec<Tuple>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub b: Vec<Tuple>,
}

impl PropertyCertificate {
    /// TP2 matrix entry `b_{i,j}` (1-indexed).
    pub fn tp2_entry(&self, i: usize, j: usize) -> &Tuple {
        &self.b[(i - 1) * self.n + (j - 1)]
    }

    /// Rank of a TP2 path function given as 1-indexed column choices.
    pub fn tp2_f_rank(n: usize, f: &[usize]) -> usize {
        f.iter().fold(0, |acc, &j| acc * n + (j - 1))
    }

    /// Subset of `{1..n}` encoded by the IP parameter index `j` (1-indexed).
    pub fn ip_subset(n: usize, j: usize) -> Vec<usize> {
        (1..=n).filter(|i| (j - 1) >> (i - 1) & 1 == 1).collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("certificate serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
