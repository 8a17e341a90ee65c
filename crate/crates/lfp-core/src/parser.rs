//! Concrete grammar and recursive-descent parser.
//!
//! ```text
//! formula := "true" | "false" | atom | "!" formula | "(" formula ")"
//!          | formula "&" formula | formula "|" formula | formula "->" formula
//!          | ("A"|"E") var "." formula
//!          | "[lfp" RelVar "(" varlist ")" "." formula "]" "(" varlist ")"
//! atom    := RelName "(" varlist ")" | var "=" var | var "<" var
//!          | macro "(" varlist ")"
//! ```
//!
//! Precedence `!` > `&` > `|` > `->`; `&`, `|` associate left, `->` right;
//! quantifier bodies extend maximally to the right. `x < y` is sugar for the
//! binary signature relation named `<`. Relation names and relation
//! variables are uppercase identifiers (`A`/`E` followed by `(` parse as
//! atoms, otherwise as quantifiers); first-order variables and macro names
//! are lowercase identifiers.
//!
//! Every lfp binder is checked: the bound relation variable must occur only
//! positively in its body, binder variables must be distinct, and the
//! application tuple must match the binder arity.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::formula::{free_variables, polarity, substitute_variables, Formula};
use crate::signature::Signature;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("parse error at {line}:{col}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    LParen,
    RParen,
    LBracket,
    RBracket,
    Dot,
    Comma,
    Bang,
    Amp,
    Pipe,
    Arrow,
    Equal,
    Less,
    /// Lowercase identifier: variable, macro name, or the keyword `lfp`.
    Lower(String),
    /// Uppercase identifier: relation symbol, relation variable, or the
    /// quantifier sigils `A`/`E`.
    Upper(String),
    True,
    False,
    Eof,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '(' => {
                i += 1;
                Tok::LParen
            }
            ')' => {
                i += 1;
                Tok::RParen
            }
            '[' => {
                i += 1;
                Tok::LBracket
            }
            ']' => {
                i += 1;
                Tok::RBracket
            }
            '.' => {
                i += 1;
                Tok::Dot
            }
            ',' => {
                i += 1;
                Tok::Comma
            }
            '!' => {
                i += 1;
                Tok::Bang
            }
            '&' => {
                i += 1;
                Tok::Amp
            }
            '|' => {
                i += 1;
                Tok::Pipe
            }
            '=' => {
                i += 1;
                Tok::Equal
            }
            '<' => {
                i += 1;
                Tok::Less
            }
            '-' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    i += 2;
                    Tok::Arrow
                } else {
                    return Err(err_at(src, i, "expected `->`".into()));
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < bytes.len() {
                    let d = bytes[j] as char;
                    if d.is_ascii_alphanumeric() || d == '_' {
                        j += 1;
                    } else {
                        break;
                    }
                }
                let word = &src[i..j];
                i = j;
                match word {
                    "true" => Tok::True,
                    "false" => Tok::False,
                    _ if word.starts_with(|c: char| c.is_ascii_uppercase()) => {
                        Tok::Upper(word.to_string())
                    }
                    _ => Tok::Lower(word.to_string()),
                }
            }
            other => {
                return Err(err_at(src, i, format!("unexpected character `{other}`")));
            }
        };
        toks.push((tok, start));
    }
    toks.push((Tok::Eof, src.len()));
    Ok(toks)
}

fn err_at(src: &str, offset: usize, message: String) -> ParseError {
    let mut line = 1;
    let mut col = 1;
    for (i, c) in src.char_indices() {
        if i >= offset {
            break;
        }
        if c == '\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    ParseError {
        offset,
        line,
        col,
        message,
    }
}

/// Named macros: lowercase-named parameterized shorthands expanded during
/// parsing. A macro body may use previously defined macros; its free
/// variables must all be parameters.
#[derive(Debug, Clone, Default)]
pub struct MacroSet {
    defs: BTreeMap<String, MacroDef>,
}

#[derive(Debug, Clone)]
struct MacroDef {
    params: Vec<String>,
    body: Formula,
}

impl MacroSet {
    pub fn new() -> Self {
        MacroSet::default()
    }

    /// Define `name(params) := text`, parsing the body against `sig` (and
    /// the macros defined so far).
    pub fn define(
        &mut self,
        name: &str,
        params: &[&str],
        text: &str,
        sig: &Signature,
    ) -> Result<(), ParseError> {
        if !name.chars().next().is_some_and(|c| c.is_ascii_lowercase()) {
            return Err(err_at(
                text,
                0,
                format!("macro name `{name}` must be lowercase"),
            ));
        }
        let body = parse_with(text, sig, &[], self)?;
        let params: Vec<String> = params.iter().map(|p| p.to_string()).collect();
        for v in free_variables(&body) {
            if !params.contains(&v) {
                return Err(err_at(
                    text,
                    0,
                    format!("macro `{name}` body has free variable `{v}` outside its parameters"),
                ));
            }
        }
        self.defs
            .insert(name.to_string(), MacroDef { params, body });
        Ok(())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.defs.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.defs.keys().map(|s| s.as_str())
    }

    fn expand(&self, name: &str, args: &[String]) -> Option<Result<Formula, String>> {
        let def = self.defs.get(name)?;
        if def.params.len() != args.len() {
            return Some(Err(format!(
                "macro `{name}` takes {} arguments, got {}",
                def.params.len(),
                args.len()
            )));
        }
        let map: BTreeMap<String, String> = def
            .params
            .iter()
            .cloned()
            .zip(args.iter().cloned())
            .filter(|(p, a)| p != a)
            .collect();
        Some(Ok(substitute_variables(&def.body, &map)))
    }
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
    sig: &'a Signature,
    /// Relation variables allowed free, with arities (evaluator-side API).
    free_rels: &'a [(String, usize)],
    macros: &'a MacroSet,
    /// lfp binders currently in scope: (name, arity).
    bound_rels: Vec<(String, usize)>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek2(&self) -> &Tok {
        if self.pos + 1 < self.toks.len() {
            &self.toks[self.pos + 1].0
        } else {
            &Tok::Eof
        }
    }

    fn here(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected {what}")))
        }
    }

    fn error(&self, message: String) -> ParseError {
        err_at(self.src, self.here(), message)
    }

    fn parse_formula(&mut self) -> Result<Formula, ParseError> {
        self.parse_implies()
    }

    fn parse_implies(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.parse_or()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.parse_implies()?;
            Ok(Formula::implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn parse_or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.parse_and()?;
        while *self.peek() == Tok::Pipe {
            self.bump();
            let rhs = self.parse_and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.parse_unary()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            let rhs = self.parse_unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Formula, ParseError> {
        if *self.peek() == Tok::Bang {
            self.bump();
            let inner = self.parse_unary()?;
            return Ok(Formula::not(inner));
        }
        self.parse_primary()
    }

    fn parse_primary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::True => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::False => {
                self.bump();
                Ok(Formula::False)
            }
            Tok::LParen => {
                self.bump();
                let f = self.parse_formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Tok::LBracket => self.parse_lfp(),
            Tok::Upper(name) => {
                if (name == "A" || name == "E") && *self.peek2() != Tok::LParen {
                    self.bump();
                    let var = self.parse_var()?;
                    self.expect(Tok::Dot, "`.` after quantified variable")?;
                    let body = self.parse_formula()?;
                    Ok(if name == "A" {
                        Formula::forall(var, body)
                    } else {
                        Formula::exists(var, body)
                    })
                } else {
                    self.parse_atom(name)
                }
            }
            Tok::Lower(word) => {
                if *self.peek2() == Tok::LParen {
                    self.parse_macro_call(word)
                } else {
                    // var = var | var < var
                    let at = self.here();
                    self.bump();
                    match self.bump() {
                        Tok::Equal => {
                            let rhs = self.parse_var()?;
                            Ok(Formula::eq(word, rhs))
                        }
                        Tok::Less => {
                            let rhs = self.parse_var()?;
                            if self.sig.arity("<") != Some(2) {
                                return Err(err_at(
                                    self.src,
                                    at,
                                    "`<` is not declared in this signature".into(),
                                ));
                            }
                            Ok(Formula::atom("<", [word, rhs]))
                        }
                        _ => Err(err_at(
                            self.src,
                            at,
                            format!("variable `{word}` must be followed by `=` or `<`"),
                        )),
                    }
                }
            }
            _ => Err(self.error("expected a formula".into())),
        }
    }

    fn parse_var(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Lower(w) => {
                self.bump();
                Ok(w)
            }
            _ => Err(self.error("expected a variable (lowercase identifier)".into())),
        }
    }

    fn parse_varlist(&mut self) -> Result<Vec<String>, ParseError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut vars = vec![self.parse_var()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            vars.push(self.parse_var()?);
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(vars)
    }

    fn rel_arity(&self, name: &str) -> Option<usize> {
        self.bound_rels
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, a)| *a)
            .or_else(|| {
                self.free_rels
                    .iter()
                    .find(|(n, _)| n == name)
                    .map(|(_, a)| *a)
            })
            .or_else(|| self.sig.arity(name))
    }

    fn parse_atom(&mut self, name: String) -> Result<Formula, ParseError> {
        let at = self.here();
        self.bump();
        let args = self.parse_varlist()?;
        match self.rel_arity(&name) {
            None => Err(err_at(
                self.src,
                at,
                format!("undeclared relation symbol `{name}`"),
            )),
            Some(a) if a != args.len() => Err(err_at(
                self.src,
                at,
                format!(
                    "relation `{name}` has arity {a}, got {} arguments",
                    args.len()
                ),
            )),
            Some(_) => Ok(Formula::Atom { rel: name, args }),
        }
    }

    fn parse_macro_call(&mut self, name: String) -> Result<Formula, ParseError> {
        let at = self.here();
        self.bump();
        let args = self.parse_varlist()?;
        match self.macros.expand(&name, &args) {
            None => Err(err_at(self.src, at, format!("unknown macro `{name}`"))),
            Some(Err(msg)) => Err(err_at(self.src, at, msg)),
            Some(Ok(f)) => Ok(f),
        }
    }

    fn parse_lfp(&mut self) -> Result<Formula, ParseError> {
        let at = self.here();
        self.expect(Tok::LBracket, "`[`")?;
        match self.bump() {
            Tok::Lower(w) if w == "lfp" => {}
            _ => return Err(err_at(self.src, at, "expected `lfp` after `[`".into())),
        }
        let rel = match self.bump() {
            Tok::Upper(name) => name,
            _ => {
                return Err(err_at(
                    self.src,
                    at,
                    "expected a relation variable (uppercase identifier) after `lfp`".into(),
                ))
            }
        };
        if self.rel_arity(&rel).is_some() {
            return Err(err_at(
                self.src,
                at,
                format!("lfp variable `{rel}` shadows a declared relation symbol"),
            ));
        }
        let vars = self.parse_varlist()?;
        for (i, v) in vars.iter().enumerate() {
            if vars[..i].contains(v) {
                return Err(err_at(
                    self.src,
                    at,
                    format!("repeated lfp binder variable `{v}`"),
                ));
            }
        }
        self.expect(Tok::Dot, "`.` after lfp binder tuple")?;
        self.bound_rels.push((rel.clone(), vars.len()));
        let body = self.parse_formula();
        self.bound_rels.pop();
        let body = body?;
        self.expect(Tok::RBracket, "`]` closing the lfp body")?;
        let args = self.parse_varlist()?;
        if args.len() != vars.len() {
            return Err(err_at(
                self.src,
                at,
                format!(
                    "lfp application expects {} arguments to match the binder tuple, got {}",
                    vars.len(),
                    args.len()
                ),
            ));
        }
        if !polarity(&body, &rel).admissible_for_lfp() {
            return Err(err_at(
                self.src,
                at,
                format!("lfp variable `{rel}` must occur only positively in its body"),
            ));
        }
        Ok(Formula::Lfp {
            rel,
            vars,
            body: Box::new(body),
            args,
        })
    }
}

fn parse_with(
    text: &str,
    sig: &Signature,
    free_rels: &[(String, usize)],
    macros: &MacroSet,
) -> Result<Formula, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser {
        src: text,
        toks,
        pos: 0,
        sig,
        free_rels,
        macros,
        bound_rels: Vec::new(),
    };
    let f = p.parse_formula()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error("unexpected trailing input".into()));
    }
    Ok(f)
}

/// Parse a closed-relation formula: every relation symbol must be declared
/// in `sig` or bound by an enclosing lfp.
pub fn parse_formula(text: &str, sig: &Signature) -> Result<Formula, ParseError> {
    parse_with(text, sig, &[], &MacroSet::default())
}

/// Parse allowing the listed relation variables to occur free (used when a
/// formula is an lfp body manipulated with its binder stripped) and
/// expanding macros.
pub fn parse_formula_with(
    text: &str,
    sig: &Signature,
    free_rels: &[(String, usize)],
    macros: &MacroSet,
) -> Result<Formula, ParseError> {
    parse_with(text, sig, free_rels, macros)
}
