//! Relational signatures. Equality is built in and never declared.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SignatureError {
    #[error("relation `{0}` declared twice")]
    Duplicate(String),
    #[error("relation `{0}` has arity 0; arities must be >= 1")]
    ZeroArity(String),
    #[error("`{0}` is not a valid relation name (expected `<` or an uppercase identifier)")]
    BadName(String),
    #[error("the order symbol `<` must have arity 2, got {0}")]
    OrderArity(usize),
}

/// A purely relational signature: names with arities. No functions, no
/// constants.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signature {
    rels: BTreeMap<String, usize>,
}

/// Relation names are either the distinguished order symbol `<` or uppercase
/// identifiers, so that every declared symbol is writable in the formula
/// grammar.
pub fn valid_relation_name(name: &str) -> bool {
    if name == "<" {
        return true;
    }
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_uppercase() => chars.all(|c| c.is_ascii_alphanumeric() || c == '_'),
        _ => false,
    }
}

impl Signature {
    pub fn empty() -> Self {
        Signature::default()
    }

    /// Build a signature from `(name, arity)` pairs.
    pub fn new<S: Into<String>>(
        rels: impl IntoIterator<Item = (S, usize)>,
    ) -> Result<Self, SignatureError> {
        let mut sig = Signature::default();
        for (name, arity) in rels {
            sig.declare(name.into(), arity)?;
        }
        Ok(sig)
    }

    pub fn declare(&mut self, name: String, arity: usize) -> Result<(), SignatureError> {
        if !valid_relation_name(&name) {
            return Err(SignatureError::BadName(name));
        }
        if arity == 0 {
            return Err(SignatureError::ZeroArity(name));
        }
        if name == "<" && arity != 2 {
            return Err(SignatureError::OrderArity(arity));
        }
        if self.rels.contains_key(&name) {
            return Err(SignatureError::Duplicate(name));
        }
        self.rels.insert(name, arity);
        Ok(())
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.rels.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.rels.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.rels.iter().map(|(n, a)| (n.as_str(), *a))
    }

    /// True if every relation of `self` appears in `other` with the same
    /// arity.
    pub fn subset_of(&self, other: &Signature) -> bool {
        self.iter().all(|(n, a)| other.arity(n) == Some(a))
    }
}
