//! Formulas of the many-sorted language of typed set theory.
//!
//! A formula relates variables by `=` and `in` only; there are no function
//! symbols and no set abstracts. Every variable may carry a declared type
//! (`x^3`). The one reserved name is `empty`, the typed empty-set constant
//! of TSTU, which is never bound.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Reserved nullary name for the TSTU empty-set constant.
pub const EMPTY: &str = "empty";

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Var {
    pub name: String,
    pub ty: Option<i64>,
}

impl Var {
    pub fn new(name: impl Into<String>) -> Self {
        Var { name: name.into(), ty: None }
    }

    pub fn typed(name: impl Into<String>, ty: i64) -> Self {
        Var { name: name.into(), ty: Some(ty) }
    }

    pub fn is_empty_const(&self) -> bool {
        self.name == EMPTY
    }

    fn with_type(&self, ty: Option<i64>) -> Self {
        Var { name: self.name.clone(), ty }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.ty {
            Some(t) => write!(f, "{}^{}", self.name, t),
            None => f.write_str(&self.name),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Formula {
    Equal(Var, Var),
    Member(Var, Var),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Forall(Var, Box<Formula>),
    Exists(Var, Box<Formula>),
}

/// Which typing discipline a sentence is read under.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Tst,
    Tstu,
    Tnt,
    Ttt,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tst" => Ok(Mode::Tst),
            "tstu" => Ok(Mode::Tstu),
            "tnt" => Ok(Mode::Tnt),
            "ttt" => Ok(Mode::Ttt),
            other => Err(format!("unknown mode `{other}` (expected tst, tstu, tnt or ttt)")),
        }
    }
}

/// A closed formula together with the theory it is read in.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    formula: Formula,
    mode: Mode,
}

impl Sentence {
    pub fn new(formula: Formula, mode: Mode) -> Result<Self, FormulaError> {
        let free = formula.free_vars();
        if let Some(v) = free.into_iter().find(|v| !v.is_empty_const()) {
            return Err(FormulaError::FreeVariable(v.name));
        }
        Ok(Sentence { formula, mode })
    }

    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn into_formula(self) -> Formula {
        self.formula
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.formula.fmt(f)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("variable `{0}` has no declared type")]
    MissingTypes(String),
    #[error("type {ty} of `{var}` is outside the sequence of length {len}")]
    TypeOutOfRange { var: String, ty: i64, len: usize },
    #[error("type sequence is not strictly increasing")]
    NotIncreasing,
    #[error("comprehension variable `{0}` occurs in the formula")]
    Capture(String),
    #[error("sentence has free variable `{0}`")]
    FreeVariable(String),
}

// ---------------------------------------------------------------------------
// Constructors and structural queries

impl Formula {
    pub fn eq(x: Var, y: Var) -> Self {
        Formula::Equal(x, y)
    }

    pub fn member(x: Var, y: Var) -> Self {
        Formula::Member(x, y)
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

    pub fn iff(a: Formula, b: Formula) -> Self {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    pub fn forall(v: Var, body: Formula) -> Self {
        Formula::Forall(v, Box::new(body))
    }

    pub fn exists(v: Var, body: Formula) -> Self {
        Formula::Exists(v, Box::new(body))
    }

    /// Free variables, the `empty` constant included.
    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        let mut bound = Vec::new();
        self.collect_free(&mut bound, &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<Var>) {
        match self {
            Formula::Equal(x, y) | Formula::Member(x, y) => {
                for v in [x, y] {
                    if !bound.iter().any(|b| b == &v.name) {
                        out.insert(v.clone());
                    }
                }
            }
            Formula::Not(a) => a.collect_free(bound, out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Forall(v, body) | Formula::Exists(v, body) => {
                bound.push(v.name.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// Every variable occurrence, binders included, in left-to-right order.
    pub fn occurrences(&self) -> Vec<&Var> {
        let mut out = Vec::new();
        self.visit_vars(&mut |v| out.push(v));
        out
    }

    fn visit_vars<'a>(&'a self, f: &mut impl FnMut(&'a Var)) {
        match self {
            Formula::Equal(x, y) | Formula::Member(x, y) => {
                f(x);
                f(y);
            }
            Formula::Not(a) => a.visit_vars(f),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
            Formula::Forall(v, body) | Formula::Exists(v, body) => {
                f(v);
                body.visit_vars(f);
            }
        }
    }

    /// Names of all variables, bound or free.
    pub fn names(&self) -> BTreeSet<String> {
        self.occurrences().into_iter().map(|v| v.name.clone()).collect()
    }

    /// Atomic subformulas in left-to-right order.
    pub fn atoms(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Formula>) {
        match self {
            Formula::Equal(..) | Formula::Member(..) => out.push(self),
            Formula::Not(a) => a.collect_atoms(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            Formula::Forall(_, body) | Formula::Exists(_, body) => body.collect_atoms(out),
        }
    }

    /// Maximum nesting of quantifiers.
    pub fn quantifier_depth(&self) -> usize {
        match self {
            Formula::Equal(..) | Formula::Member(..) => 0,
            Formula::Not(a) => a.quantifier_depth(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.quantifier_depth().max(b.quantifier_depth())
            }
            Formula::Forall(_, body) | Formula::Exists(_, body) => 1 + body.quantifier_depth(),
        }
    }

    /// Largest declared type, if any variable carries one.
    pub fn max_type(&self) -> Option<i64> {
        self.occurrences().into_iter().filter_map(|v| v.ty).max()
    }

    /// Rewrites every variable (binders included) through `f`.
    pub fn map_vars(&self, f: &mut impl FnMut(&Var) -> Var) -> Formula {
        match self {
            Formula::Equal(x, y) => Formula::Equal(f(x), f(y)),
            Formula::Member(x, y) => Formula::Member(f(x), f(y)),
            Formula::Not(a) => Formula::not(a.map_vars(f)),
            Formula::And(a, b) => Formula::and(a.map_vars(f), b.map_vars(f)),
            Formula::Or(a, b) => Formula::or(a.map_vars(f), b.map_vars(f)),
            Formula::Implies(a, b) => Formula::implies(a.map_vars(f), b.map_vars(f)),
            Formula::Iff(a, b) => Formula::iff(a.map_vars(f), b.map_vars(f)),
            Formula::Forall(v, body) => Formula::forall(f(v), body.map_vars(f)),
            Formula::Exists(v, body) => Formula::exists(f(v), body.map_vars(f)),
        }
    }

    /// Alpha-renames binders so that no name is bound twice and no bound name
    /// also occurs free. The first binder of a name keeps it unless the name
    /// is free somewhere; later binders get fresh `_N` suffixes.
    pub fn normalize(&self) -> Formula {
        let free: HashSet<String> = self.free_vars().into_iter().map(|v| v.name).collect();
        let mut taken: HashSet<String> = self.names().into_iter().collect();
        let mut seen_binders: HashSet<String> = HashSet::new();
        let mut scope: Vec<(String, String)> = Vec::new();
        self.rename(&free, &mut taken, &mut seen_binders, &mut scope)
    }

    fn rename(
        &self,
        free: &HashSet<String>,
        taken: &mut HashSet<String>,
        seen: &mut HashSet<String>,
        scope: &mut Vec<(String, String)>,
    ) -> Formula {
        let lookup = |v: &Var, scope: &Vec<(String, String)>| -> Var {
            match scope.iter().rev().find(|(old, _)| old == &v.name) {
                Some((_, new)) => Var { name: new.clone(), ty: v.ty },
                None => v.clone(),
            }
        };
        match self {
            Formula::Equal(x, y) => Formula::Equal(lookup(x, scope), lookup(y, scope)),
            Formula::Member(x, y) => Formula::Member(lookup(x, scope), lookup(y, scope)),
            Formula::Not(a) => Formula::not(a.rename(free, taken, seen, scope)),
            Formula::And(a, b) => {
                let a = a.rename(free, taken, seen, scope);
                Formula::and(a, b.rename(free, taken, seen, scope))
            }
            Formula::Or(a, b) => {
                let a = a.rename(free, taken, seen, scope);
                Formula::or(a, b.rename(free, taken, seen, scope))
            }
            Formula::Implies(a, b) => {
                let a = a.rename(free, taken, seen, scope);
                Formula::implies(a, b.rename(free, taken, seen, scope))
            }
            Formula::Iff(a, b) => {
                let a = a.rename(free, taken, seen, scope);
                Formula::iff(a, b.rename(free, taken, seen, scope))
            }
            Formula::Forall(v, body) | Formula::Exists(v, body) => {
                let new_name = if free.contains(&v.name) || seen.contains(&v.name) {
                    fresh_name(&v.name, taken)
                } else {
                    v.name.clone()
                };
                seen.insert(new_name.clone());
                scope.push((v.name.clone(), new_name.clone()));
                let body = body.rename(free, taken, seen, scope);
                scope.pop();
                let v = Var { name: new_name, ty: v.ty };
                match self {
                    Formula::Forall(..) => Formula::forall(v, body),
                    _ => Formula::exists(v, body),
                }
            }
        }
    }

    /// True when no name is bound twice and no bound name occurs free.
    pub fn is_normalized(&self) -> bool {
        let free: HashSet<String> = self.free_vars().into_iter().map(|v| v.name).collect();
        let mut seen = HashSet::new();
        let mut ok = true;
        self.visit_binders(&mut |v| {
            if free.contains(&v.name) || !seen.insert(v.name.clone()) {
                ok = false;
            }
        });
        ok
    }

    fn visit_binders(&self, f: &mut impl FnMut(&Var)) {
        match self {
            Formula::Equal(..) | Formula::Member(..) => {}
            Formula::Not(a) => a.visit_binders(f),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.visit_binders(f);
                b.visit_binders(f);
            }
            Formula::Forall(v, body) | Formula::Exists(v, body) => {
                f(v);
                body.visit_binders(f);
            }
        }
    }
}

fn fresh_name(base: &str, taken: &mut HashSet<String>) -> String {
    let mut n = 1usize;
    loop {
        let candidate = format!("{base}_{n}");
        if taken.insert(candidate.clone()) {
            return candidate;
        }
        n += 1;
    }
}

// ---------------------------------------------------------------------------
// Type transformations

fn require_types(phi: &Formula) -> Result<(), FormulaError> {
    match phi.occurrences().into_iter().find(|v| v.ty.is_none()) {
        Some(v) => Err(FormulaError::MissingTypes(v.name.clone())),
        None => Ok(()),
    }
}

/// Type-raising: every declared type goes up by one.
pub fn raise(phi: &Formula) -> Result<Formula, FormulaError> {
    require_types(phi)?;
    Ok(phi.map_vars(&mut |v| v.with_type(v.ty.map(|t| t + 1))))
}

/// Re-annotates each variable of type `i` with type `s[i]`.
pub fn translate_s(phi: &Formula, s: &[i64]) -> Result<Formula, FormulaError> {
    if s.windows(2).any(|w| w[0] >= w[1]) {
        return Err(FormulaError::NotIncreasing);
    }
    require_types(phi)?;
    for v in phi.occurrences() {
        let t = v.ty.unwrap_or_default();
        if t < 0 || t as usize >= s.len() {
            return Err(FormulaError::TypeOutOfRange { var: v.name.clone(), ty: t, len: s.len() });
        }
    }
    Ok(phi.map_vars(&mut |v| v.with_type(v.ty.map(|t| s[t as usize]))))
}

/// The ambiguity instance `phi <-> phi+`.
pub fn ambiguity_instance(phi: &Sentence) -> Result<Sentence, FormulaError> {
    let raised = raise(phi.formula())?;
    Sentence::new(Formula::iff(phi.formula().clone(), raised), phi.mode())
}

/// `exists A. forall x. (x in A <-> phi)`, normalized.
pub fn comprehension_instance(phi: &Formula, x: &Var, a: &Var) -> Result<Formula, FormulaError> {
    if phi.names().contains(&a.name) {
        return Err(FormulaError::Capture(a.name.clone()));
    }
    let body = Formula::iff(Formula::member(x.clone(), a.clone()), phi.clone());
    Ok(Formula::exists(a.clone(), Formula::forall(x.clone(), body)).normalize())
}

/// Recognizes the shape produced by [`comprehension_instance`], returning
/// `(phi, x, A)`.
pub fn as_comprehension_instance(f: &Formula) -> Option<(&Formula, &Var, &Var)> {
    let Formula::Exists(a, inner) = f else { return None };
    let Formula::Forall(x, body) = inner.as_ref() else { return None };
    let Formula::Iff(lhs, phi) = body.as_ref() else { return None };
    match lhs.as_ref() {
        Formula::Member(x2, a2) if x2.name == x.name && a2.name == a.name => {
            if phi.names().contains(&a.name) {
                None
            } else {
                Some((phi, x, a))
            }
        }
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// Pretty printing

// Binding strength; higher binds tighter.
const P_IFF: u8 = 1;
const P_IMP: u8 = 2;
const P_OR: u8 = 3;
const P_AND: u8 = 4;
const P_NOT: u8 = 5;

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        print_formula(self, 0, true, &mut out);
        f.write_str(&out)
    }
}

/// `min_prec` is the weakest operator that may appear unparenthesized here;
/// `rightmost` says whether nothing follows inside the current group, which
/// is what lets a quantifier body run to the end.
fn print_formula(f: &Formula, min_prec: u8, rightmost: bool, out: &mut String) {
    match f {
        Formula::Equal(x, y) => {
            out.push_str(&format!("{x} = {y}"));
        }
        Formula::Member(x, y) => {
            out.push_str(&format!("{x} in {y}"));
        }
        Formula::Not(a) => {
            out.push('~');
            print_formula(a, P_NOT, rightmost, out);
        }
        Formula::Forall(v, body) | Formula::Exists(v, body) => {
            let kw = if matches!(f, Formula::Forall(..)) { "forall" } else { "exists" };
            if rightmost {
                out.push_str(&format!("{kw} {v}. "));
                print_formula(body, 0, true, out);
            } else {
                out.push_str(&format!("({kw} {v}. "));
                print_formula(body, 0, true, out);
                out.push(')');
            }
        }
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
            let (prec, op, right_assoc) = match f {
                Formula::And(..) => (P_AND, "&", false),
                Formula::Or(..) => (P_OR, "|", false),
                Formula::Implies(..) => (P_IMP, "->", true),
                _ => (P_IFF, "<->", true),
            };
            let paren = prec < min_prec;
            let inner_right = paren || rightmost;
            if paren {
                out.push('(');
            }
            let (lp, rp) = if right_assoc { (prec + 1, prec) } else { (prec, prec + 1) };
            print_formula(a, lp, false, out);
            out.push_str(&format!(" {op} "));
            print_formula(b, rp, inner_right, out);
            if paren {
                out.push(')');
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Caret,
    Int(i64),
    Eq,
    In,
    Not,
    And,
    Or,
    Imp,
    Iff,
    Forall,
    Exists,
    Dot,
    LParen,
    RParen,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, FormulaError> {
    let bytes = text.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    let err = |offset: usize, message: String| FormulaError::Syntax { offset, message };
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'#' => break,
            b'^' => {
                out.push((Tok::Caret, start));
                i += 1;
                let num_start = i;
                if i < bytes.len() && (bytes[i] == b'-' || bytes[i] == b'+') {
                    i += 1;
                }
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let digits = &text[num_start..i];
                let n: i64 = digits
                    .parse()
                    .map_err(|_| err(num_start, format!("expected an integer type after `^`, found `{digits}`")))?;
                out.push((Tok::Int(n), num_start));
                continue;
            }
            b'=' => {
                out.push((Tok::Eq, start));
                i += 1;
            }
            b'~' => {
                out.push((Tok::Not, start));
                i += 1;
            }
            b'&' => {
                out.push((Tok::And, start));
                i += 1;
            }
            b'|' => {
                out.push((Tok::Or, start));
                i += 1;
            }
            b'.' => {
                out.push((Tok::Dot, start));
                i += 1;
            }
            b'(' => {
                out.push((Tok::LParen, start));
                i += 1;
            }
            b')' => {
                out.push((Tok::RParen, start));
                i += 1;
            }
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                out.push((Tok::Imp, start));
                i += 2;
            }
            b'<' if bytes.get(i + 1) == Some(&b'-') && bytes.get(i + 2) == Some(&b'>') => {
                out.push((Tok::Iff, start));
                i += 3;
            }
            c if c.is_ascii_alphabetic() => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let word = &text[start..i];
                let tok = match word {
                    "in" => Tok::In,
                    "forall" => Tok::Forall,
                    "exists" => Tok::Exists,
                    _ => Tok::Ident(word.to_string()),
                };
                out.push((tok, start));
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(err(start, format!("unexpected character `{ch}`")));
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    // Binder stack: name and declared type, innermost last.
    scope: Vec<Var>,
    _text: &'a str,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(_, o)| *o).unwrap_or(self.end)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, FormulaError> {
        Err(FormulaError::Syntax { offset: self.offset(), message: message.into() })
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn parse_iff(&mut self) -> Result<Formula, FormulaError> {
        let lhs = self.parse_imp()?;
        if self.eat(&Tok::Iff) {
            let rhs = self.parse_iff()?;
            return Ok(Formula::iff(lhs, rhs));
        }
        Ok(lhs)
    }

    fn parse_imp(&mut self) -> Result<Formula, FormulaError> {
        let lhs = self.parse_or()?;
        if self.eat(&Tok::Imp) {
            let rhs = self.parse_imp()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn parse_or(&mut self) -> Result<Formula, FormulaError> {
        let mut lhs = self.parse_and()?;
        while self.eat(&Tok::Or) {
            let rhs = self.parse_and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> Result<Formula, FormulaError> {
        let mut lhs = self.parse_unary()?;
        while self.eat(&Tok::And) {
            let rhs = self.parse_unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Formula, FormulaError> {
        match self.peek() {
            Some(Tok::Not) => {
                self.pos += 1;
                Ok(Formula::not(self.parse_unary()?))
            }
            Some(Tok::Forall) | Some(Tok::Exists) => {
                let universal = self.peek() == Some(&Tok::Forall);
                self.pos += 1;
                let mut vars = vec![self.parse_binder()?];
                while matches!(self.peek(), Some(Tok::Ident(_))) {
                    vars.push(self.parse_binder()?);
                }
                self.eat(&Tok::Dot);
                let depth = self.scope.len();
                self.scope.extend(vars.iter().cloned());
                let body = self.parse_iff();
                self.scope.truncate(depth);
                let mut f = body?;
                for v in vars.into_iter().rev() {
                    f = if universal { Formula::forall(v, f) } else { Formula::exists(v, f) };
                }
                Ok(f)
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let f = self.parse_iff()?;
                if !self.eat(&Tok::RParen) {
                    return self.error("expected `)`");
                }
                Ok(f)
            }
            Some(Tok::Ident(_)) => {
                let x = self.parse_var()?;
                let atom = match self.peek() {
                    Some(Tok::Eq) => {
                        self.pos += 1;
                        Formula::Equal(x, self.parse_var()?)
                    }
                    Some(Tok::In) => {
                        self.pos += 1;
                        Formula::Member(x, self.parse_var()?)
                    }
                    _ => return self.error("expected `=` or `in`"),
                };
                Ok(atom)
            }
            Some(_) => self.error("expected a formula"),
            None => self.error("unexpected end of input"),
        }
    }

    fn parse_ident_and_type(&mut self) -> Result<(String, Option<i64>, usize), FormulaError> {
        let offset = self.offset();
        let name = match self.peek() {
            Some(Tok::Ident(n)) => n.clone(),
            _ => return self.error("expected a variable"),
        };
        self.pos += 1;
        let ty = if self.eat(&Tok::Caret) {
            match self.peek() {
                Some(Tok::Int(n)) => {
                    let n = *n;
                    self.pos += 1;
                    Some(n)
                }
                _ => return self.error("expected an integer type"),
            }
        } else {
            None
        };
        Ok((name, ty, offset))
    }

    fn parse_binder(&mut self) -> Result<Var, FormulaError> {
        let (name, ty, offset) = self.parse_ident_and_type()?;
        if name == EMPTY {
            return Err(FormulaError::Syntax { offset, message: "`empty` is reserved and cannot be bound".into() });
        }
        Ok(Var { name, ty })
    }

    fn parse_var(&mut self) -> Result<Var, FormulaError> {
        let (name, ty, offset) = self.parse_ident_and_type()?;
        if let Some(binder) = self.scope.iter().rev().find(|b| b.name == name) {
            return match (binder.ty, ty) {
                (_, None) => Ok(binder.clone()),
                (Some(b), Some(t)) if b == t => Ok(binder.clone()),
                (None, Some(_)) => Err(FormulaError::Syntax {
                    offset,
                    message: format!("`{name}` is bound without a type but used with one"),
                }),
                (Some(b), Some(t)) => Err(FormulaError::Syntax {
                    offset,
                    message: format!("`{name}` is bound at type {b} but used at type {t}"),
                }),
            };
        }
        if name == EMPTY && ty.is_none() {
            return Err(FormulaError::Syntax { offset, message: "`empty` needs a type annotation".into() });
        }
        Ok(Var { name, ty })
    }
}

/// Parses one formula and alpha-renames it into normal form.
pub fn parse(text: &str) -> Result<Formula, FormulaError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, end: text.len(), scope: Vec::new(), _text: text };
    let f = p.parse_iff()?;
    if p.pos != p.toks.len() {
        return p.error("unexpected trailing input");
    }
    Ok(f.normalize())
}

/// A parsed corpus line.
#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub line: usize,
    pub text: String,
    pub formula: Result<Formula, FormulaError>,
}

/// Parses a corpus: one formula per line, `#` comments and blank lines skipped.
pub fn parse_corpus(text: &str) -> Vec<CorpusEntry> {
    text.lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                return None;
            }
            Some(CorpusEntry { line: i + 1, text: body.to_string(), formula: parse(body) })
        })
        .collect()
}

/// Declared types by variable name (first occurrence wins).
pub fn declared_types(phi: &Formula) -> BTreeMap<String, i64> {
    let mut out = BTreeMap::new();
    for v in phi.occurrences() {
        if let Some(t) = v.ty {
            out.entry(v.name.clone()).or_insert(t);
        }
    }
    out
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    // Annotations are per occurrence; `align` below makes bound ones agree.
    fn var() -> impl Strategy<Value = Var> {
        (0usize..5, proptest::option::of(-2i64..4)).prop_map(|(i, ty)| {
            let name = ["x", "y", "z", "w", "A"][i];
            Var { name: name.to_string(), ty }
        })
    }

    fn formula() -> impl Strategy<Value = Formula> {
        let leaf = prop_oneof![
            (var(), var()).prop_map(|(x, y)| Formula::eq(x, y)),
            (var(), var()).prop_map(|(x, y)| Formula::member(x, y)),
        ];
        leaf.prop_recursive(6, 64, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(Formula::not),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::iff(a, b)),
                (var(), inner.clone()).prop_map(|(v, b)| Formula::forall(v, b)),
                (var(), inner).prop_map(|(v, b)| Formula::exists(v, b)),
            ]
        })
    }

    /// Rewrites bound occurrences to carry their binder's annotation, which is
    /// what the parser produces.
    fn align(f: &Formula, scope: &mut Vec<Var>) -> Formula {
        let fix = |v: &Var, scope: &Vec<Var>| scope.iter().rev().find(|b| b.name == v.name).cloned().unwrap_or_else(|| v.clone());
        match f {
            Formula::Equal(x, y) => Formula::Equal(fix(x, scope), fix(y, scope)),
            Formula::Member(x, y) => Formula::Member(fix(x, scope), fix(y, scope)),
            Formula::Not(a) => Formula::not(align(a, scope)),
            Formula::And(a, b) => Formula::and(align(a, scope), align(b, scope)),
            Formula::Or(a, b) => Formula::or(align(a, scope), align(b, scope)),
            Formula::Implies(a, b) => Formula::implies(align(a, scope), align(b, scope)),
            Formula::Iff(a, b) => Formula::iff(align(a, scope), align(b, scope)),
            Formula::Forall(v, b) | Formula::Exists(v, b) => {
                scope.push(v.clone());
                let body = align(b, scope);
                scope.pop();
                if matches!(f, Formula::Forall(..)) {
                    Formula::forall(v.clone(), body)
                } else {
                    Formula::exists(v.clone(), body)
                }
            }
        }
    }

    proptest! {
        #[test]
        fn pretty_parse_round_trip(f in formula()) {
            let f = align(&f, &mut Vec::new()).normalize();
            let printed = f.to_string();
            let back = parse(&printed).map_err(|e| TestCaseError::fail(format!("{e} in {printed}")))?;
            prop_assert_eq!(&back, &f);
            prop_assert_eq!(back.to_string(), printed);
        }

        #[test]
        fn normalize_is_idempotent(f in formula()) {
            let n = f.normalize();
            prop_assert!(n.is_normalized());
            prop_assert_eq!(n.normalize(), n.clone());
        }

        #[test]
        fn raise_then_translate(f in formula()) {
            let f = align(&f, &mut Vec::new()).normalize();
            let typed = f.map_vars(&mut |v| Var { name: v.name.clone(), ty: Some(v.ty.unwrap_or(0).abs()) });
            let up = raise(&typed).unwrap();
            let s: Vec<i64> = (1..=8).collect();
            prop_assert_eq!(translate_s(&typed, &s).unwrap(), up);
        }
    }
}
