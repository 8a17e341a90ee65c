//! Formula ASTs for FO + lfp, polarity analysis, free variables,
//! capture-avoiding substitution, and rendering.
//!
//! First-order variables are lowercase identifiers; relation variables
//! (second-order, bound by `lfp` or free in evaluator environments) are
//! uppercase identifiers. There are no function symbols or constants, so
//! every atom argument is a variable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    /// `R(x1,..,xk)` where `R` is a signature relation or a relation
    /// variable.
    Atom {
        rel: String,
        args: Vec<String>,
    },
    /// `x = y`. Equality is built in for every signature.
    Eq(String, String),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Forall(String, Box<Formula>),
    Exists(String, Box<Formula>),
    /// `[lfp S(x1,..,xk). body](u1,..,uk)`: binds `S` and the tuple
    /// variables inside `body`, applied to `args`.
    Lfp {
        rel: String,
        vars: Vec<String>,
        body: Box<Formula>,
        args: Vec<String>,
    },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormulaError {
    #[error("substitution for `{rel}` expects {expected} parameters, got {got}")]
    ParamArity {
        rel: String,
        expected: usize,
        got: usize,
    },
    #[error("atom `{rel}` has {got} arguments where {expected} were expected")]
    AtomArity {
        rel: String,
        expected: usize,
        got: usize,
    },
}

/// Occurrence polarity of a relation variable in a formula.
///
/// An occurrence is positive when it sits under an even number of
/// negation-like flips; the antecedent of an implication counts as one flip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Positive,
    Negative,
    Mixed,
    Absent,
}

impl Polarity {
    fn join(self, other: Polarity) -> Polarity {
        use Polarity::*;
        match (self, other) {
            (Absent, p) | (p, Absent) => p,
            (Positive, Positive) => Positive,
            (Negative, Negative) => Negative,
            _ => Mixed,
        }
    }

    /// Acceptable for an lfp binder: the variable may not occur at all.
    pub fn admissible_for_lfp(self) -> bool {
        matches!(self, Polarity::Positive | Polarity::Absent)
    }
}

impl Formula {
    pub fn atom(rel: impl Into<String>, args: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Formula::Atom {
            rel: rel.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }

    pub fn eq(a: impl Into<String>, b: impl Into<String>) -> Self {
        Formula::Eq(a.into(), b.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn forall(v: impl Into<String>, body: Formula) -> Self {
        Formula::Forall(v.into(), Box::new(body))
    }

    pub fn exists(v: impl Into<String>, body: Formula) -> Self {
        Formula::Exists(v.into(), Box::new(body))
    }

    pub fn lfp(
        rel: impl Into<String>,
        vars: impl IntoIterator<Item = impl Into<String>>,
        body: Formula,
        args: impl IntoIterator<Item = impl Into<String>>,
    ) -> Self {
        Formula::Lfp {
            rel: rel.into(),
            vars: vars.into_iter().map(Into::into).collect(),
            body: Box::new(body),
            args: args.into_iter().map(Into::into).collect(),
        }
    }

    /// Conjunction of an iterator, `true` when empty.
    pub fn conjoin(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut it = parts.into_iter();
        match it.next() {
            None => Formula::True,
            Some(first) => it.fold(first, Formula::and),
        }
    }

    /// Disjunction of an iterator, `false` when empty.
    pub fn disjoin(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut it = parts.into_iter();
        match it.next() {
            None => Formula::False,
            Some(first) => it.fold(first, Formula::or),
        }
    }

    /// Universal quantification over a block of variables.
    pub fn forall_block(vars: &[String], body: Formula) -> Formula {
        vars.iter()
            .rev()
            .fold(body, |acc, v| Formula::forall(v.clone(), acc))
    }

    /// Existential quantification over a block of variables.
    pub fn exists_block(vars: &[String], body: Formula) -> Formula {
        vars.iter()
            .rev()
            .fold(body, |acc, v| Formula::exists(v.clone(), acc))
    }
}

/// Occurrence polarity of the relation variable `rel` in `f`.
///
/// Occurrences inside an lfp node that rebinds the same name are shadowed
/// and do not count.
pub fn polarity(f: &Formula, rel: &str) -> Polarity {
    fn walk(f: &Formula, rel: &str, flipped: bool) -> Polarity {
        match f {
            Formula::True | Formula::False | Formula::Eq(_, _) => Polarity::Absent,
            Formula::Atom { rel: r, .. } => {
                if r == rel {
                    if flipped {
                        Polarity::Negative
                    } else {
                        Polarity::Positive
                    }
                } else {
                    Polarity::Absent
                }
            }
            Formula::Not(inner) => walk(inner, rel, !flipped),
            Formula::And(a, b) | Formula::Or(a, b) => {
                walk(a, rel, flipped).join(walk(b, rel, flipped))
            }
            Formula::Implies(a, b) => walk(a, rel, !flipped).join(walk(b, rel, flipped)),
            Formula::Forall(_, body) | Formula::Exists(_, body) => walk(body, rel, flipped),
            Formula::Lfp {
                rel: bound, body, ..
            } => {
                if bound == rel {
                    Polarity::Absent
                } else {
                    walk(body, rel, flipped)
                }
            }
        }
    }
    walk(f, rel, false)
}

/// Free first-order variables in deterministic first-occurrence order.
///
/// For an lfp node the body is scanned before the application arguments,
/// matching the order the pieces appear in the concrete syntax.
pub fn free_variables(f: &Formula) -> Vec<String> {
    fn walk(f: &Formula, bound: &mut Vec<String>, out: &mut Vec<String>) {
        let record = |v: &String, bound: &Vec<String>, out: &mut Vec<String>| {
            if !bound.contains(v) && !out.contains(v) {
                out.push(v.clone());
            }
        };
        match f {
            Formula::True | Formula::False => {}
            Formula::Atom { args, .. } => {
                for a in args {
                    record(a, bound, out);
                }
            }
            Formula::Eq(a, b) => {
                record(a, bound, out);
                record(b, bound, out);
            }
            Formula::Not(inner) => walk(inner, bound, out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                walk(a, bound, out);
                walk(b, bound, out);
            }
            Formula::Forall(v, body) | Formula::Exists(v, body) => {
                bound.push(v.clone());
                walk(body, bound, out);
                bound.pop();
            }
            Formula::Lfp {
                vars, body, args, ..
            } => {
                let depth = bound.len();
                bound.extend(vars.iter().cloned());
                walk(body, bound, out);
                bound.truncate(depth);
                for a in args {
                    record(a, bound, out);
                }
            }
        }
    }
    let mut out = Vec::new();
    walk(f, &mut Vec::new(), &mut out);
    out
}

/// Free relation variables (atoms not bound by an enclosing lfp), with the
/// arity of their first occurrence.
pub fn free_relation_variables(f: &Formula) -> BTreeMap<String, usize> {
    fn walk(f: &Formula, bound: &mut Vec<String>, out: &mut BTreeMap<String, usize>) {
        match f {
            Formula::Atom { rel, args } => {
                if !bound.contains(rel) {
                    out.entry(rel.clone()).or_insert(args.len());
                }
            }
            Formula::Not(inner) => walk(inner, bound, out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                walk(a, bound, out);
                walk(b, bound, out);
            }
            Formula::Forall(_, body) | Formula::Exists(_, body) => walk(body, bound, out),
            Formula::Lfp { rel, body, .. } => {
                bound.push(rel.clone());
                walk(body, bound, out);
                bound.pop();
            }
            _ => {}
        }
    }
    let mut out = BTreeMap::new();
    walk(f, &mut Vec::new(), &mut out);
    out
}

fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    if !avoid.contains(base) {
        return base.to_string();
    }
    let mut i = 2usize;
    loop {
        let candidate = format!("{base}_{i}");
        if !avoid.contains(&candidate) {
            return candidate;
        }
        i += 1;
    }
}

/// Capture-avoiding simultaneous substitution of variables for variables.
///
/// Bound variables are renamed whenever they collide with the image of the
/// map on variables actually free in their scope.
pub fn substitute_variables(f: &Formula, map: &BTreeMap<String, String>) -> Formula {
    if map.is_empty() {
        return f.clone();
    }
    let sub = |v: &String| map.get(v).cloned().unwrap_or_else(|| v.clone());
    match f {
        Formula::True => Formula::True,
        Formula::False => Formula::False,
        Formula::Atom { rel, args } => Formula::Atom {
            rel: rel.clone(),
            args: args.iter().map(sub).collect(),
        },
        Formula::Eq(a, b) => Formula::Eq(sub(a), sub(b)),
        Formula::Not(inner) => Formula::not(substitute_variables(inner, map)),
        Formula::And(a, b) => {
            Formula::and(substitute_variables(a, map), substitute_variables(b, map))
        }
        Formula::Or(a, b) => {
            Formula::or(substitute_variables(a, map), substitute_variables(b, map))
        }
        Formula::Implies(a, b) => {
            Formula::implies(substitute_variables(a, map), substitute_variables(b, map))
        }
        Formula::Forall(v, body) => {
            let (v2, body2) = rebind(std::slice::from_ref(v), body, map);
            Formula::Forall(v2.into_iter().next().unwrap(), Box::new(body2))
        }
        Formula::Exists(v, body) => {
            let (v2, body2) = rebind(std::slice::from_ref(v), body, map);
            Formula::Exists(v2.into_iter().next().unwrap(), Box::new(body2))
        }
        Formula::Lfp {
            rel,
            vars,
            body,
            args,
        } => {
            let (vars2, body2) = rebind(vars, body, map);
            Formula::Lfp {
                rel: rel.clone(),
                vars: vars2,
                body: Box::new(body2),
                args: args.iter().map(sub).collect(),
            }
        }
    }
}

/// Substitute under a binder block: drop shadowed map entries and rename the
/// binders that would capture incoming variables.
fn rebind(
    binders: &[String],
    body: &Formula,
    map: &BTreeMap<String, String>,
) -> (Vec<String>, Formula) {
    let body_free: BTreeSet<String> = free_variables(body).into_iter().collect();
    let mut inner: BTreeMap<String, String> = map
        .iter()
        .filter(|(k, _)| !binders.contains(k) && body_free.contains(*k))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    let incoming: BTreeSet<String> = inner.values().cloned().collect();

    let mut avoid: BTreeSet<String> = body_free;
    avoid.extend(incoming.iter().cloned());
    avoid.extend(inner.keys().cloned());
    avoid.extend(binders.iter().cloned());

    let mut new_binders = Vec::with_capacity(binders.len());
    for b in binders {
        if incoming.contains(b) {
            let nb = fresh_name(b, &avoid);
            avoid.insert(nb.clone());
            inner.insert(b.clone(), nb.clone());
            new_binders.push(nb);
        } else {
            new_binders.push(b.clone());
        }
    }
    (new_binders, substitute_variables(body, &inner))
}

/// Replace every atom `rel(t1,..,tk)` in `f` by `g` with `params` bound to
/// the atom's arguments, capture-avoidingly. The result contains no free
/// occurrence of `rel`.
pub fn substitute_relation(
    f: &Formula,
    rel: &str,
    g: &Formula,
    params: &[String],
) -> Result<Formula, FormulaError> {
    // Context variables of g (free but not parameters) must not be captured
    // by binders of f on the way down.
    let g_context: BTreeSet<String> = free_variables(g)
        .into_iter()
        .filter(|v| !params.contains(v))
        .collect();

    fn walk(
        f: &Formula,
        rel: &str,
        g: &Formula,
        params: &[String],
        g_context: &BTreeSet<String>,
    ) -> Result<Formula, FormulaError> {
        match f {
            Formula::Atom { rel: r, args } if r == rel => {
                if args.len() != params.len() {
                    return Err(FormulaError::ParamArity {
                        rel: rel.to_string(),
                        expected: params.len(),
                        got: args.len(),
                    });
                }
                let map: BTreeMap<String, String> = params
                    .iter()
                    .cloned()
                    .zip(args.iter().cloned())
                    .filter(|(p, a)| p != a)
                    .collect();
                Ok(substitute_variables(g, &map))
            }
            Formula::True | Formula::False | Formula::Eq(_, _) | Formula::Atom { .. } => {
                Ok(f.clone())
            }
            Formula::Not(inner) => Ok(Formula::not(walk(inner, rel, g, params, g_context)?)),
            Formula::And(a, b) => Ok(Formula::and(
                walk(a, rel, g, params, g_context)?,
                walk(b, rel, g, params, g_context)?,
            )),
            Formula::Or(a, b) => Ok(Formula::or(
                walk(a, rel, g, params, g_context)?,
                walk(b, rel, g, params, g_context)?,
            )),
            Formula::Implies(a, b) => Ok(Formula::implies(
                walk(a, rel, g, params, g_context)?,
                walk(b, rel, g, params, g_context)?,
            )),
            Formula::Forall(v, body) | Formula::Exists(v, body) => {
                let is_forall = matches!(f, Formula::Forall(_, _));
                let (binders, body) = guard_binders(std::slice::from_ref(v), body, rel, g_context);
                let new_body = walk(&body, rel, g, params, g_context)?;
                let v2 = binders.into_iter().next().unwrap();
                Ok(if is_forall {
                    Formula::forall(v2, new_body)
                } else {
                    Formula::exists(v2, new_body)
                })
            }
            Formula::Lfp {
                rel: bound,
                vars,
                body,
                args,
            } => {
                if bound == rel {
                    // Shadowed: occurrences inside refer to the inner binder.
                    Ok(f.clone())
                } else {
                    let (vars2, body2) = guard_binders(vars, body, rel, g_context);
                    let new_body = walk(&body2, rel, g, params, g_context)?;
                    Ok(Formula::Lfp {
                        rel: bound.clone(),
                        vars: vars2,
                        body: Box::new(new_body),
                        args: args.clone(),
                    })
                }
            }
        }
    }

    // Rename a binder block when it would capture context variables of g and
    // the substituted relation actually occurs below it.
    fn guard_binders(
        binders: &[String],
        body: &Formula,
        rel: &str,
        g_context: &BTreeSet<String>,
    ) -> (Vec<String>, Formula) {
        let needs_rename = binders.iter().any(|b| g_context.contains(b))
            && polarity(body, rel) != Polarity::Absent;
        if !needs_rename {
            return (binders.to_vec(), body.clone());
        }
        let mut avoid: BTreeSet<String> = free_variables(body).into_iter().collect();
        avoid.extend(g_context.iter().cloned());
        avoid.extend(binders.iter().cloned());
        let mut map = BTreeMap::new();
        let mut new_binders = Vec::with_capacity(binders.len());
        for b in binders {
            if g_context.contains(b) {
                let nb = fresh_name(b, &avoid);
                avoid.insert(nb.clone());
                map.insert(b.clone(), nb.clone());
                new_binders.push(nb);
            } else {
                new_binders.push(b.clone());
            }
        }
        (new_binders, substitute_variables(body, &map))
    }

    walk(f, rel, g, params, &g_context)
}

/// A formula with a declared `(x; y)` split of its free first-order
/// variables: `x_vars` is the object part, `y_vars` the parameter part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionedFormula {
    pub formula: Formula,
    pub x_vars: Vec<String>,
    pub y_vars: Vec<String>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PartitionError {
    #[error("x-part and y-part share variable `{0}`")]
    Overlap(String),
    #[error("variable `{0}` is listed but not free in the formula")]
    NotFree(String),
    #[error("free variable `{0}` is not covered by the partition")]
    Uncovered(String),
    #[error("variable `{0}` listed twice in the partition")]
    DuplicateVar(String),
}

impl PartitionedFormula {
    pub fn new(
        formula: Formula,
        x_vars: Vec<String>,
        y_vars: Vec<String>,
    ) -> Result<Self, PartitionError> {
        let mut seen = BTreeSet::new();
        for v in x_vars.iter().chain(y_vars.iter()) {
            if !seen.insert(v.clone()) {
                if x_vars.contains(v) && y_vars.contains(v) {
                    return Err(PartitionError::Overlap(v.clone()));
                }
                return Err(PartitionError::DuplicateVar(v.clone()));
            }
        }
        let free: BTreeSet<String> = free_variables(&formula).into_iter().collect();
        for v in &seen {
            if !free.contains(v) {
                return Err(PartitionError::NotFree(v.clone()));
            }
        }
        for v in &free {
            if !seen.contains(v) {
                return Err(PartitionError::Uncovered(v.clone()));
            }
        }
        Ok(PartitionedFormula {
            formula,
            x_vars,
            y_vars,
        })
    }

    /// Default split: the first free variable (in first-occurrence order) is
    /// the object part, the rest are parameters.
    pub fn default_split(formula: Formula) -> Result<Self, PartitionError> {
        let free = free_variables(&formula);
        let (x, y) = match free.split_first() {
            Some((first, rest)) => (vec![first.clone()], rest.to_vec()),
            None => (Vec::new(), Vec::new()),
        };
        PartitionedFormula::new(formula, x, y)
    }

    /// The same formula with object and parameter parts exchanged.
    pub fn transpose(&self) -> PartitionedFormula {
        PartitionedFormula {
            formula: self.formula.clone(),
            x_vars: self.y_vars.clone(),
            y_vars: self.x_vars.clone(),
        }
    }

    /// Instantiate at fresh variable blocks: substitute `x_vars -> xs`,
    /// `y_vars -> ys`.
    pub fn instantiate(&self, xs: &[String], ys: &[String]) -> Formula {
        assert_eq!(xs.len(), self.x_vars.len());
        assert_eq!(ys.len(), self.y_vars.len());
        let map: BTreeMap<String, String> = self
            .x_vars
            .iter()
            .chain(self.y_vars.iter())
            .cloned()
            .zip(xs.iter().chain(ys.iter()).cloned())
            .filter(|(a, b)| a != b)
            .collect();
        substitute_variables(&self.formula, &map)
    }
}

/// Deterministic generator of fresh variable names, avoiding a given pool.
#[derive(Debug, Clone, Default)]
pub struct NameGen {
    used: BTreeSet<String>,
}

impl NameGen {
    pub fn avoiding<'a>(names: impl IntoIterator<Item = &'a str>) -> Self {
        NameGen {
            used: names.into_iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn avoiding_formula(f: &Formula) -> Self {
        let mut used = BTreeSet::new();
        collect_all_variables(f, &mut used);
        NameGen { used }
    }

    pub fn reserve(&mut self, name: &str) {
        self.used.insert(name.to_string());
    }

    pub fn reserve_formula(&mut self, f: &Formula) {
        collect_all_variables(f, &mut self.used);
    }

    pub fn fresh(&mut self, base: &str) -> String {
        let name = fresh_name(base, &self.used);
        self.used.insert(name.clone());
        name
    }

    /// A block of `len` fresh names built from `base` (singletons stay
    /// unsuffixed, wider blocks get `_1`, `_2`, ...).
    pub fn fresh_block(&mut self, base: &str, len: usize) -> Vec<String> {
        if len == 1 {
            vec![self.fresh(base)]
        } else {
            (1..=len)
                .map(|i| self.fresh(&format!("{base}_{i}")))
                .collect()
        }
    }
}

/// Every variable name appearing anywhere in `f`, bound or free.
fn collect_all_variables(f: &Formula, out: &mut BTreeSet<String>) {
    match f {
        Formula::True | Formula::False => {}
        Formula::Atom { args, .. } => out.extend(args.iter().cloned()),
        Formula::Eq(a, b) => {
            out.insert(a.clone());
            out.insert(b.clone());
        }
        Formula::Not(inner) => collect_all_variables(inner, out),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            collect_all_variables(a, out);
            collect_all_variables(b, out);
        }
        Formula::Forall(v, body) | Formula::Exists(v, body) => {
            out.insert(v.clone());
            collect_all_variables(body, out);
        }
        Formula::Lfp {
            vars, body, args, ..
        } => {
            out.extend(vars.iter().cloned());
            out.extend(args.iter().cloned());
            collect_all_variables(body, out);
        }
    }
}

// ---------------------------------------------------------------------------
// Rendering. parse(render(f)) is the identity on ASTs; quantified formulas
// are parenthesized in operand position since they extend maximally right.
// ---------------------------------------------------------------------------

fn prec(f: &Formula) -> i8 {
    match f {
        Formula::Implies(_, _) => 0,
        Formula::Or(_, _) => 1,
        Formula::And(_, _) => 2,
        Formula::Not(_) => 5,
        Formula::Forall(_, _) | Formula::Exists(_, _) => -1,
        // Infix atoms read ambiguously right after `!`, so they rank below
        // it and get parenthesized there.
        Formula::Eq(_, _) => 4,
        Formula::Atom { rel, args } if rel == "<" && args.len() == 2 => 4,
        _ => 6,
    }
}

fn write_formula(f: &Formula, min: i8, out: &mut String) {
    let p = prec(f);
    let parens = p < min;
    if parens {
        out.push('(');
    }
    match f {
        Formula::True => out.push_str("true"),
        Formula::False => out.push_str("false"),
        Formula::Atom { rel, args } => {
            if rel == "<" && args.len() == 2 {
                out.push_str(&args[0]);
                out.push_str(" < ");
                out.push_str(&args[1]);
            } else {
                out.push_str(rel);
                out.push('(');
                out.push_str(&args.join(","));
                out.push(')');
            }
        }
        Formula::Eq(a, b) => {
            out.push_str(a);
            out.push_str(" = ");
            out.push_str(b);
        }
        Formula::Not(inner) => {
            out.push('!');
            write_formula(inner, 5, out);
        }
        Formula::And(a, b) => {
            write_formula(a, 2, out);
            out.push_str(" & ");
            write_formula(b, 3, out);
        }
        Formula::Or(a, b) => {
            write_formula(a, 1, out);
            out.push_str(" | ");
            write_formula(b, 2, out);
        }
        Formula::Implies(a, b) => {
            write_formula(a, 1, out);
            out.push_str(" -> ");
            write_formula(b, 0, out);
        }
        Formula::Forall(v, body) => {
            out.push_str("A ");
            out.push_str(v);
            out.push_str(". ");
            write_formula(body, -1, out);
        }
        Formula::Exists(v, body) => {
            out.push_str("E ");
            out.push_str(v);
            out.push_str(". ");
            write_formula(body, -1, out);
        }
        Formula::Lfp {
            rel,
            vars,
            body,
            args,
        } => {
            out.push_str("[lfp ");
            out.push_str(rel);
            out.push('(');
            out.push_str(&vars.join(","));
            out.push_str("). ");
            write_formula(body, -1, out);
            out.push_str("](");
            out.push_str(&args.join(","));
            out.push(')');
        }
    }
    if parens {
        out.push(')');
    }
}

/// Grammar-conformant text for `f`.
pub fn render(f: &Formula) -> String {
    let mut out = String::new();
    write_formula(f, -1, &mut out);
    out
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self))
    }
}

// The atom position where an infix `x < y` renders: an atom named "<" always
// has two arguments when built by the parser; hand-built unary/ternary "<"
// atoms would fall back to prefix syntax and fail signature checks later.

#[cfg(test)]
mod tests {
    use super::*;

    fn reach_body() -> Formula {
        // (A y. !S(y,x)) | E y. (S(y,x) & T(y))
        Formula::or(
            Formula::forall("y", Formula::not(Formula::atom("S", ["y", "x"]))),
            Formula::exists(
                "y",
                Formula::and(Formula::atom("S", ["y", "x"]), Formula::atom("T", ["y"])),
            ),
        )
    }

    #[test]
    fn polarity_examples() {
        // S(x,y) & T(y): positive.
        let f = Formula::and(Formula::atom("S", ["x", "y"]), Formula::atom("T", ["y"]));
        assert_eq!(polarity(&f, "T"), Polarity::Positive);

        // T(x) -> S(x): negative (antecedent flips).
        let f = Formula::implies(Formula::atom("T", ["x"]), Formula::atom("S", ["x"]));
        assert_eq!(polarity(&f, "T"), Polarity::Negative);

        // T(x) & !T(x): mixed.
        let f = Formula::and(
            Formula::atom("T", ["x"]),
            Formula::not(Formula::atom("T", ["x"])),
        );
        assert_eq!(polarity(&f, "T"), Polarity::Mixed);

        assert_eq!(polarity(&f, "U"), Polarity::Absent);
        assert_eq!(polarity(&reach_body(), "T"), Polarity::Positive);
    }

    #[test]
    fn polarity_implication_desugaring_agrees() {
        // polarity through -> must match polarity through !a | b.
        let a = Formula::atom("T", ["x"]);
        let b = Formula::atom("T", ["y"]);
        let imp = Formula::implies(a.clone(), b.clone());
        let desugared = Formula::or(Formula::not(a), b);
        assert_eq!(polarity(&imp, "T"), polarity(&desugared, "T"));
        assert_eq!(polarity(&imp, "T"), Polarity::Mixed);
    }

    #[test]
    fn free_variable_order() {
        let f = Formula::exists("x", Formula::atom("R", ["x", "y"]));
        assert_eq!(free_variables(&f), vec!["y"]);

        let f = Formula::and(Formula::eq("x", "y"), Formula::atom("R", ["y", "z"]));
        assert_eq!(free_variables(&f), vec!["x", "y", "z"]);

        let f = Formula::lfp(
            "T",
            ["x"],
            Formula::or(Formula::atom("T", ["x"]), Formula::atom("R", ["x"])),
            ["u"],
        );
        assert_eq!(free_variables(&f), vec!["u"]);
    }

    #[test]
    fn substitute_relation_bottom() {
        // T := false in S(y,x) & T(y)  =>  S(y,x) & false
        let f = Formula::and(Formula::atom("S", ["y", "x"]), Formula::atom("T", ["y"]));
        let out = substitute_relation(&f, "T", &Formula::False, &["p".into()]).unwrap();
        assert_eq!(
            out,
            Formula::and(Formula::atom("S", ["y", "x"]), Formula::False)
        );
    }

    #[test]
    fn substitute_relation_under_binder() {
        // T := (y = y with param y) in E y.(S(y,x) & T(y)) => E y.(S(y,x) & y=y)
        let f = Formula::exists(
            "y",
            Formula::and(Formula::atom("S", ["y", "x"]), Formula::atom("T", ["y"])),
        );
        let g = Formula::eq("y", "y");
        let out = substitute_relation(&f, "T", &g, &["y".into()]).unwrap();
        assert_eq!(
            out,
            Formula::exists(
                "y",
                Formula::and(Formula::atom("S", ["y", "x"]), Formula::eq("y", "y"))
            )
        );
    }

    #[test]
    fn substitute_relation_renames_inside_g() {
        // T := (E z. S(z,w)) with param w, applied to T(z): the bound z of g
        // must be renamed away from the incoming argument z.
        let g = Formula::exists("z", Formula::atom("S", ["z", "w"]));
        let f = Formula::atom("T", ["z"]);
        let out = substitute_relation(&f, "T", &g, &["w".into()]).unwrap();
        match &out {
            Formula::Exists(v, body) => {
                assert_ne!(v, "z");
                assert_eq!(**body, Formula::atom("S", [v.as_str(), "z"]));
            }
            other => panic!("expected Exists, got {other:?}"),
        }
    }

    #[test]
    fn substitute_relation_renames_outer_binder() {
        // g has free context variable z; substituting under E z must rename
        // the outer binder so g's z still refers to the context.
        let g = Formula::atom("S", ["z", "w"]); // z free context, w param
        let f = Formula::exists("z", Formula::atom("T", ["z"]));
        let out = substitute_relation(&f, "T", &g, &["w".into()]).unwrap();
        match &out {
            Formula::Exists(v, body) => {
                assert_ne!(v, "z");
                assert_eq!(**body, Formula::atom("S", ["z", v.as_str()]));
            }
            other => panic!("expected Exists, got {other:?}"),
        }
    }

    #[test]
    fn substitute_relation_shadowed_lfp() {
        let f = Formula::lfp("T", ["x"], Formula::atom("T", ["x"]), ["u"]);
        let out = substitute_relation(&f, "T", &Formula::False, &["p".into()]).unwrap();
        assert_eq!(out, f);
    }

    #[test]
    fn render_examples() {
        assert_eq!(
            render(&Formula::exists("x", Formula::atom("R", ["x"]))),
            "E x. R(x)"
        );
        let lt = Formula::atom("<", ["x", "y"]);
        assert_eq!(render(&lt), "x < y");
        let nested = Formula::and(
            Formula::or(Formula::True, Formula::False),
            Formula::not(Formula::eq("x", "y")),
        );
        assert_eq!(render(&nested), "(true | false) & !(x = y)");
    }

    #[test]
    fn partition_validation() {
        let f = Formula::atom("<", ["x", "y"]);
        assert!(PartitionedFormula::new(f.clone(), vec!["x".into()], vec!["y".into()]).is_ok());
        assert_eq!(
            PartitionedFormula::new(f.clone(), vec!["x".into(), "y".into()], vec!["y".into()])
                .unwrap_err(),
            PartitionError::Overlap("y".into())
        );
        assert_eq!(
            PartitionedFormula::new(f.clone(), vec!["x".into()], vec![]).unwrap_err(),
            PartitionError::Uncovered("y".into())
        );
        assert_eq!(
            PartitionedFormula::new(f, vec!["x".into(), "z".into()], vec!["y".into()]).unwrap_err(),
            PartitionError::NotFree("z".into())
        );
    }

    #[test]
    fn default_split_takes_first_variable() {
        let f = Formula::atom("<", ["x", "y"]);
        let pf = PartitionedFormula::default_split(f).unwrap();
        assert_eq!(pf.x_vars, vec!["x"]);
        assert_eq!(pf.y_vars, vec!["y"]);
    }
}
