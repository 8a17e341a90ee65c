//! Arithmetic on finite linear orders, defined by lfp formulas over the
//! signature `{<}`: graphs of addition, multiplication and exponentiation
//! (truncated at the universe size), the 1-indexed binary `bit` relation,
//! and the `factor` relation `y^z exactly divides x`.
//!
//! Everything is expressed through the macro layer, so each relation is
//! inspectable as grammar text and usable from the command line.

use crate::formula::{Formula, PartitionedFormula};
use crate::parser::{parse_formula_with, MacroSet, ParseError};
use crate::signature::Signature;

/// Macro sources, in dependency order. These are the library's definitions;
/// they parse against any signature containing `< / 2`.
pub const ARITH_MACROS: &[(&str, &[&str], &str)] = &[
    ("zero", &["a"], "!(E w. w < a)"),
    ("succ", &["a", "b"], "a < b & !(E w. (a < w & w < b))"),
    ("one", &["a"], "E w. (zero(w) & succ(w,a))"),
    (
        "plus",
        &["x", "y", "z"],
        "[lfp P(a,b,c). ((zero(b) & a = c) | E u. E v. (succ(u,b) & succ(v,c) & P(a,u,v)))](x,y,z)",
    ),
    (
        "times",
        &["x", "y", "z"],
        "[lfp M(a,b,c). ((zero(b) & zero(c)) | E u. E v. (succ(u,b) & M(a,u,v) & plus(v,a,c)))](x,y,z)",
    ),
    (
        "exp",
        &["x", "y", "z"],
        "[lfp X(a,b,c). ((zero(b) & one(c)) | E u. E v. (succ(u,b) & X(a,u,v) & times(v,a,c)))](x,y,z)",
    ),
    ("odd", &["a"], "E h. E u. (plus(h,h,u) & succ(u,a))"),
    ("half", &["a", "h"], "plus(h,h,a) | E u. (plus(h,h,u) & succ(u,a))"),
    (
        "bit",
        &["x", "y"],
        "[lfp B(i,w). ((one(i) & odd(w)) | E j. E h. (succ(j,i) & half(w,h) & B(j,h)))](x,y)",
    ),
    ("divides", &["d", "x"], "E q. times(d,q,x)"),
    ("ge2", &["y"], "E u. E v. (u < v & v < y)"),
    ("pos", &["x"], "E u. u < x"),
    (
        "factor",
        &["x", "y", "z"],
        "ge2(y) & pos(x) & (E p. (exp(y,z,p) & divides(p,x))) \
         & !(E z2. E q. (succ(z,z2) & exp(y,z2,q) & divides(q,x)))",
    ),
];

/// Register the arithmetic macros whose relations exist in `sig` (all of
/// them when `< / 2` is declared, none otherwise).
pub fn define_arith_macros(macros: &mut MacroSet, sig: &Signature) {
    if sig.arity("<") != Some(2) {
        return;
    }
    for (name, params, text) in ARITH_MACROS {
        macros
            .define(name, params, text, sig)
            .expect("library macro sources parse");
    }
}

/// The five named relations of the library.
#[derive(Debug, Clone)]
pub struct ArithmeticLibrary {
    /// `plus(x,y,z)` iff `x + y = z` (absent when the sum leaves the
    /// universe).
    pub plus: Formula,
    /// `times(x,y,z)` iff `x · y = z`.
    pub times: Formula,
    /// `exp(x,y,z)` iff `x ^ y = z`, with `0^0 = 1`.
    pub exp: Formula,
    /// `bit(x;y)` iff bit `x` of `y` is 1, bits 1-indexed from the least
    /// significant.
    pub bit: PartitionedFormula,
    /// `factor(x;y,z)` iff `y >= 2`, `x >= 1`, and `y^z` is the largest
    /// power of `y` dividing `x`.
    pub factor: PartitionedFormula,
    /// The macro set the relations were assembled from.
    pub macros: MacroSet,
}

/// Build the library over the signature `{<}`.
pub fn arithmetic_library() -> ArithmeticLibrary {
    fn build() -> Result<ArithmeticLibrary, ParseError> {
        let sig = Signature::new([("<", 2)]).expect("valid signature");
        let mut macros = MacroSet::new();
        define_arith_macros(&mut macros, &sig);
        let parse = |text: &str| parse_formula_with(text, &sig, &[], &macros);
        let plus = parse("plus(x,y,z)")?;
        let times = parse("times(x,y,z)")?;
        let exp = parse("exp(x,y,z)")?;
        let bit = PartitionedFormula::new(parse("bit(x,y)")?, vec!["x".into()], vec!["y".into()])
            .expect("bit partitions as (x;y)");
        let factor = PartitionedFormula::new(
            parse("factor(x,y,z)")?,
            vec!["x".into()],
            vec!["y".into(), "z".into()],
        )
        .expect("factor partitions as (x;y,z)");
        Ok(ArithmeticLibrary {
            plus,
            times,
            exp,
            bit,
            factor,
            macros,
        })
    }
    build().expect("arithmetic library sources parse")
}
