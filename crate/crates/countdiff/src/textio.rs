//! The text grammar shared by system files, the command line front end and
//! the browser demo.
//!
//! Four line-oriented formats are supported:
//!
//! * `.sys` — algebraic systems: a `vars` header naming the variables in
//!   ascending ranking order, then `eq`, `ineq` and `cofinite` lines.
//! * `.dsys` — differential systems: `basevars`, `funcs` (declaration
//!   order is descending ranking priority unless a `ranking` line says
//!   otherwise), an optional expansion `point`, and `eq` lines using the
//!   derivation operator `D(u, x, 2)`.
//! * `.mf` — counting manifests: the `.dsys` headers plus `start` and
//!   `fit-degree`, followed by `stratum` blocks whose declarations are
//!   expressions over the truncation order `l`, named indices, `zeta` and
//!   the coefficient symbols `g(u, k)`.
//! * `.lead` — leader sets for dimension computations.
//!
//! Everything is exact: numeric literals are integers combined with the
//! arithmetic operators, so rationals are written `1/2`. Multiplication is
//! always explicit. Comments run from `#` to the end of the line.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed};

use crate::diffalg::{DiffPoly, DiffVar, DifferentialSystem, MultiIndex};
use crate::diffcount::{
    BinderRange, Decl, DeclKind, DifferentialStratum, FamilyStratum, KExpr, Manifest,
    MarkerSpec, ResidualStratum, Stratum, DEFAULT_FIT_DEGREE,
};
use crate::dimension::LeaderSet;
use crate::poly::{rat_int, Field, Int, Rat, RatFn, Var};
use crate::sigma::{CofiniteMarker, QPoly, SigmaSystem};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

// ---------------------------------------------------------------------------
// lexer
// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq, Debug)]
enum Tok {
    Ident(String),
    Num(Int),
    Sym(char),
}

#[derive(Clone, Debug)]
struct Sp {
    tok: Tok,
    col: usize,
}

struct Line {
    no: usize,
    toks: Vec<Sp>,
}

const SYMBOLS: &str = "+-*/^(),:!.><=";

fn lex(text: &str) -> Result<Vec<Line>, ParseError> {
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let no = i + 1;
        let mut toks = Vec::new();
        let chars: Vec<char> = raw.chars().collect();
        let mut p = 0;
        while p < chars.len() {
            let c = chars[p];
            let col = p + 1;
            if c == '#' {
                break;
            }
            if c.is_whitespace() {
                p += 1;
            } else if c.is_ascii_digit() {
                let start = p;
                while p < chars.len() && chars[p].is_ascii_digit() {
                    p += 1;
                }
                let s: String = chars[start..p].iter().collect();
                let n = s.parse::<Int>().expect("digits parse");
                toks.push(Sp { tok: Tok::Num(n), col });
            } else if c.is_alphabetic() || c == '_' {
                let start = p;
                while p < chars.len() && (chars[p].is_alphanumeric() || chars[p] == '_') {
                    p += 1;
                }
                let s: String = chars[start..p].iter().collect();
                toks.push(Sp { tok: Tok::Ident(s), col });
            } else if SYMBOLS.contains(c) {
                toks.push(Sp { tok: Tok::Sym(c), col });
                p += 1;
            } else {
                return Err(ParseError {
                    line: no,
                    col,
                    message: format!("unexpected character `{c}`"),
                });
            }
        }
        if !toks.is_empty() {
            lines.push(Line { no, toks });
        }
    }
    Ok(lines)
}

// ---------------------------------------------------------------------------
// token cursor
// ---------------------------------------------------------------------------

struct Cur<'a> {
    toks: &'a [Sp],
    pos: usize,
    line: usize,
}

impl<'a> Cur<'a> {
    fn new(line: &'a Line) -> Self {
        Cur {
            toks: &line.toks,
            pos: 0,
            line: line.no,
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|s| &s.tok)
    }

    fn bump(&mut self) -> Option<&Tok> {
        let t = self.toks.get(self.pos).map(|s| &s.tok);
        self.pos += 1;
        t
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn col(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|s| s.col)
            .unwrap_or_else(|| self.toks.last().map(|s| s.col + 1).unwrap_or(1))
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            col: self.col(),
            message: message.into(),
        }
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat_sym(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{c}`")))
        }
    }

    fn eat_ident(&mut self, word: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == word) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_ident(&mut self, word: &str) -> Result<(), ParseError> {
        if self.eat_ident(word) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{word}`")))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err("expected a name")),
        }
    }

    fn uint(&mut self) -> Result<u32, ParseError> {
        match self.peek() {
            Some(Tok::Num(n)) => {
                let v = u32::try_from(n.clone())
                    .map_err(|_| self.err("number too large"))?;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.err("expected a number")),
        }
    }

    fn int(&mut self) -> Result<i64, ParseError> {
        let neg = self.eat_sym('-');
        match self.peek() {
            Some(Tok::Num(n)) => {
                let v = i64::try_from(n.clone())
                    .map_err(|_| self.err("number too large"))?;
                self.pos += 1;
                Ok(if neg { -v } else { v })
            }
            _ => Err(self.err("expected an integer")),
        }
    }

    fn rational(&mut self) -> Result<Rat, ParseError> {
        let num = self.int()?;
        if self.eat_sym('/') {
            let den = self.int()?;
            if den == 0 {
                return Err(self.err("zero denominator"));
            }
            Ok(Rat::new(Int::from(num), Int::from(den)))
        } else {
            Ok(Rat::from_integer(Int::from(num)))
        }
    }

    fn end(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.err("unexpected trailing input"))
        }
    }
}

/// Reads a variable name: either a plain identifier or a coefficient
/// symbol `g(name,2,0)`, normalized to its canonical spelling.
fn var_name(cur: &mut Cur) -> Result<String, ParseError> {
    let head = cur.ident()?;
    if head == "g" && cur.peek() == Some(&Tok::Sym('(')) {
        cur.bump();
        let func = cur.ident()?;
        let mut idx = Vec::new();
        while cur.eat_sym(',') {
            idx.push(cur.uint()?.to_string());
        }
        cur.expect_sym(')')?;
        if idx.is_empty() {
            return Err(cur.err("a coefficient symbol needs at least one index"));
        }
        Ok(format!("g({func},{})", idx.join(",")))
    } else {
        Ok(head)
    }
}

// ---------------------------------------------------------------------------
// algebraic polynomials (.sys)
// ---------------------------------------------------------------------------

fn parse_qpoly(cur: &mut Cur, names: &BTreeMap<String, Var>) -> Result<QPoly, ParseError> {
    let mut acc = qp_term(cur, names)?;
    loop {
        if cur.eat_sym('+') {
            acc = acc.add(&qp_term(cur, names)?);
        } else if cur.eat_sym('-') {
            acc = acc.sub(&qp_term(cur, names)?);
        } else {
            return Ok(acc);
        }
    }
}

fn qp_term(cur: &mut Cur, names: &BTreeMap<String, Var>) -> Result<QPoly, ParseError> {
    let mut acc = qp_unary(cur, names)?;
    loop {
        if cur.eat_sym('*') {
            acc = acc.mul(&qp_unary(cur, names)?);
        } else if cur.eat_sym('/') {
            let col = cur.col();
            let rhs = qp_unary(cur, names)?;
            let c = rhs.as_constant().ok_or(ParseError {
                line: cur.line,
                col,
                message: "can only divide by a nonzero constant".into(),
            })?;
            if Field::is_zero(&c) {
                return Err(ParseError {
                    line: cur.line,
                    col,
                    message: "division by zero".into(),
                });
            }
            acc = acc.scale(&c.recip());
        } else {
            return Ok(acc);
        }
    }
}

fn qp_unary(cur: &mut Cur, names: &BTreeMap<String, Var>) -> Result<QPoly, ParseError> {
    if cur.eat_sym('-') {
        return Ok(qp_unary(cur, names)?.neg());
    }
    let base = qp_atom(cur, names)?;
    if cur.eat_sym('^') {
        let e = cur.uint()?;
        Ok(base.pow(e))
    } else {
        Ok(base)
    }
}

fn qp_atom(cur: &mut Cur, names: &BTreeMap<String, Var>) -> Result<QPoly, ParseError> {
    match cur.peek() {
        Some(Tok::Num(_)) => {
            let Some(Tok::Num(n)) = cur.bump() else { unreachable!() };
            Ok(QPoly::constant(Rat::from_integer(n.clone())))
        }
        Some(Tok::Sym('(')) => {
            cur.bump();
            let inner = parse_qpoly(cur, names)?;
            cur.expect_sym(')')?;
            Ok(inner)
        }
        Some(Tok::Ident(_)) => {
            let col = cur.col();
            let name = var_name(cur)?;
            let v = names.get(&name).ok_or(ParseError {
                line: cur.line,
                col,
                message: format!("unknown variable `{name}`"),
            })?;
            Ok(QPoly::var(*v))
        }
        _ => Err(cur.err("expected a number, a variable or `(`")),
    }
}

/// An algebraic system together with its variable names, in ascending
/// ranking order.
#[derive(Clone, Debug)]
pub struct SysFile {
    pub system: SigmaSystem,
    pub var_names: Vec<String>,
}

pub fn parse_sys(text: &str) -> Result<SysFile, ParseError> {
    let lines = lex(text)?;
    let mut names: Vec<String> = Vec::new();
    let mut map: BTreeMap<String, Var> = BTreeMap::new();
    let mut system: Option<SigmaSystem> = None;
    for line in &lines {
        let mut cur = Cur::new(line);
        if cur.eat_ident("vars") {
            if system.is_some() {
                return Err(cur.err("duplicate `vars` line"));
            }
            while !cur.at_end() {
                let name = var_name(&mut cur)?;
                if map.contains_key(&name) {
                    return Err(cur.err(format!("variable `{name}` declared twice")));
                }
                map.insert(name.clone(), Var(names.len() as u32));
                names.push(name);
            }
            if names.is_empty() {
                return Err(cur.err("`vars` needs at least one name"));
            }
            system = Some(SigmaSystem::new(
                (0..names.len() as u32).map(Var).collect(),
            ));
        } else if cur.eat_ident("eq") {
            let sys = system.as_mut().ok_or_else(|| cur.err("`vars` must come first"))?;
            let p = parse_qpoly(&mut cur, &map)?;
            cur.end()?;
            sys.push_equation(p);
        } else if cur.eat_ident("ineq") {
            let sys = system.as_mut().ok_or_else(|| cur.err("`vars` must come first"))?;
            let p = parse_qpoly(&mut cur, &map)?;
            cur.end()?;
            sys.push_inequation(p);
        } else if cur.eat_ident("cofinite") {
            let sys = system.as_mut().ok_or_else(|| cur.err("`vars` must come first"))?;
            let col = cur.col();
            let name = var_name(&mut cur)?;
            cur.end()?;
            let v = map.get(&name).ok_or(ParseError {
                line: cur.line,
                col,
                message: format!("unknown variable `{name}`"),
            })?;
            sys.push_marker(CofiniteMarker {
                var: *v,
                family: None,
            });
        } else {
            return Err(cur.err("expected `vars`, `eq`, `ineq` or `cofinite`"));
        }
    }
    let system = system.ok_or(ParseError {
        line: lines.last().map(|l| l.no).unwrap_or(1),
        col: 1,
        message: "missing `vars` line".into(),
    })?;
    Ok(SysFile {
        system,
        var_names: names,
    })
}

// ---------------------------------------------------------------------------
// rendering
// ---------------------------------------------------------------------------

fn rat_string(r: &Rat) -> String {
    r.to_string()
}

/// Renders a polynomial with named variables in the file grammar:
/// descending ranking order, explicit `*`, `^` for powers.
pub fn poly_string<F: Fn(Var) -> String>(p: &QPoly, name: &F) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (mono, coeff)) in p.terms().rev().enumerate() {
        let neg = coeff.is_negative();
        let abs = if neg { -coeff.clone() } else { coeff.clone() };
        if i == 0 {
            if neg {
                out.push('-');
            }
        } else if neg {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        let mut parts: Vec<String> = Vec::new();
        if !abs.is_one() || mono.is_one() {
            parts.push(rat_string(&abs));
        }
        for (v, e) in mono.pairs() {
            if *e == 1 {
                parts.push(name(*v));
            } else {
                parts.push(format!("{}^{}", name(*v), e));
            }
        }
        out.push_str(&parts.join("*"));
    }
    out
}

/// Renders an algebraic system in the `.sys` grammar.
pub fn render_sys(sys: &SigmaSystem, names: &[String]) -> String {
    let name = |v: Var| names[v.0 as usize].clone();
    let mut out = String::new();
    out.push_str("vars ");
    out.push_str(&names.join(" "));
    out.push('\n');
    for eq in sys.equations() {
        out.push_str("eq ");
        out.push_str(&poly_string(eq, &name));
        out.push('\n');
    }
    for q in sys.inequations() {
        out.push_str("ineq ");
        out.push_str(&poly_string(q, &name));
        out.push('\n');
    }
    for m in sys.markers() {
        out.push_str("cofinite ");
        out.push_str(&name(m.var));
        out.push('\n');
    }
    out
}

/// Renders one jet variable: the bare function name for order zero,
/// otherwise the derivation operator form `D(u, x, 2, t)`.
fn diffvar_string(dv: &DiffVar, func_names: &[String], basevars: &[String]) -> String {
    let name = &func_names[dv.func as usize];
    if dv.mu.order() == 0 {
        return name.clone();
    }
    let mut args = vec![name.clone()];
    for (i, bv) in basevars.iter().enumerate() {
        let e = dv.mu.get(i);
        if e == 0 {
            continue;
        }
        args.push(bv.clone());
        if e > 1 {
            args.push(e.to_string());
        }
    }
    format!("D({})", args.join(", "))
}

/// Renders a differential polynomial in the `.dsys` expression grammar.
/// Non-constant coefficients are parenthesized, and a denominator becomes
/// an explicit division so that reparsing recovers the same value.
pub fn diffpoly_string(p: &DiffPoly, func_names: &[String], basevars: &[String]) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let base = |v: Var| basevars[v.0 as usize].clone();
    let mut out = String::new();
    for (i, (mono, coeff)) in p.terms().rev().enumerate() {
        let mut parts: Vec<String> = Vec::new();
        let mut tail = String::new();
        if let Some(r) = coeff.as_rat() {
            let neg = r.is_negative();
            let abs = if neg { -r.clone() } else { r.clone() };
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else if neg {
                out.push_str(" - ");
            } else {
                out.push_str(" + ");
            }
            if !abs.is_one() || mono.is_one() {
                parts.push(rat_string(&abs));
            }
        } else {
            if i > 0 {
                out.push_str(" + ");
            }
            parts.push(format!("({})", poly_string(coeff.num(), &base)));
            if !coeff.is_polynomial() {
                tail = format!("/({})", poly_string(coeff.den(), &base));
            }
        }
        for (dv, e) in mono.pairs() {
            let v = diffvar_string(dv, func_names, basevars);
            if *e == 1 {
                parts.push(v);
            } else {
                parts.push(format!("{v}^{e}"));
            }
        }
        out.push_str(&parts.join("*"));
        out.push_str(&tail);
    }
    out
}

/// Renders a differential system file in the `.dsys` grammar. The `funcs`
/// header lists the functions in descending ranking priority, which is the
/// declaration-order default on input, so no `ranking` line is needed.
pub fn render_dsys(f: &DsysFile) -> String {
    let names = &f.system.func_names;
    let mut out = String::new();
    out.push_str("basevars ");
    out.push_str(&f.basevars.join(" "));
    out.push('\n');
    out.push_str("funcs ");
    let declared: Vec<&str> = names.iter().rev().map(String::as_str).collect();
    out.push_str(&declared.join(" "));
    out.push('\n');
    out.push_str("point ");
    let coords: Vec<String> = f.point.iter().map(rat_string).collect();
    out.push_str(&coords.join(" "));
    out.push('\n');
    for eq in &f.system.equations {
        out.push_str("eq ");
        out.push_str(&diffpoly_string(eq, names, &f.basevars));
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// differential expressions (.dsys)
// ---------------------------------------------------------------------------

struct DiffCtx {
    basevars: BTreeMap<String, u32>,
    funcs: BTreeMap<String, u16>,
}

fn parse_diffpoly(cur: &mut Cur, ctx: &DiffCtx) -> Result<DiffPoly, ParseError> {
    let mut acc = dp_term(cur, ctx)?;
    loop {
        if cur.eat_sym('+') {
            acc = acc.add(&dp_term(cur, ctx)?);
        } else if cur.eat_sym('-') {
            acc = acc.sub(&dp_term(cur, ctx)?);
        } else {
            return Ok(acc);
        }
    }
}

fn dp_term(cur: &mut Cur, ctx: &DiffCtx) -> Result<DiffPoly, ParseError> {
    let mut acc = dp_unary(cur, ctx)?;
    loop {
        if cur.eat_sym('*') {
            acc = acc.mul(&dp_unary(cur, ctx)?);
        } else if cur.eat_sym('/') {
            let col = cur.col();
            let rhs = dp_unary(cur, ctx)?;
            let c = rhs.as_constant().ok_or(ParseError {
                line: cur.line,
                col,
                message: "can only divide by an expression without derivatives".into(),
            })?;
            if Field::is_zero(&c) {
                return Err(ParseError {
                    line: cur.line,
                    col,
                    message: "division by zero".into(),
                });
            }
            acc = acc.scale(&c.recip());
        } else {
            return Ok(acc);
        }
    }
}

fn dp_unary(cur: &mut Cur, ctx: &DiffCtx) -> Result<DiffPoly, ParseError> {
    if cur.eat_sym('-') {
        return Ok(dp_unary(cur, ctx)?.neg());
    }
    let base = dp_atom(cur, ctx)?;
    if cur.eat_sym('^') {
        let neg = cur.peek() == Some(&Tok::Sym('-'));
        if neg {
            cur.bump();
        }
        let e = cur.uint()?;
        if neg {
            let col = cur.col();
            let c = base.as_constant().ok_or(ParseError {
                line: cur.line,
                col,
                message: "negative powers need an expression without derivatives".into(),
            })?;
            if Field::is_zero(&c) {
                return Err(ParseError {
                    line: cur.line,
                    col,
                    message: "zero to a negative power".into(),
                });
            }
            let mut acc = RatFn::from_rat(rat_int(1));
            for _ in 0..e {
                acc = acc.mul(&c);
            }
            return Ok(DiffPoly::constant(acc.recip()));
        }
        Ok(base.pow(e))
    } else {
        Ok(base)
    }
}

fn dp_atom(cur: &mut Cur, ctx: &DiffCtx) -> Result<DiffPoly, ParseError> {
    match cur.peek() {
        Some(Tok::Num(_)) => {
            let Some(Tok::Num(n)) = cur.bump() else { unreachable!() };
            Ok(DiffPoly::constant(RatFn::from_rat(Rat::from_integer(
                n.clone(),
            ))))
        }
        Some(Tok::Sym('(')) => {
            cur.bump();
            let inner = parse_diffpoly(cur, ctx)?;
            cur.expect_sym(')')?;
            Ok(inner)
        }
        Some(Tok::Ident(s)) if s == "D" && cur.peek2() == Some(&Tok::Sym('(')) => {
            let dv = parse_dform(cur, ctx)?;
            Ok(DiffPoly::var(dv))
        }
        Some(Tok::Ident(_)) => {
            let col = cur.col();
            let name = cur.ident()?;
            if let Some(i) = ctx.basevars.get(&name) {
                return Ok(DiffPoly::constant(RatFn::var(Var(*i))));
            }
            if let Some(f) = ctx.funcs.get(&name) {
                return Ok(DiffPoly::var(DiffVar::new(
                    *f,
                    MultiIndex::zero(ctx.basevars.len()),
                )));
            }
            Err(ParseError {
                line: cur.line,
                col,
                message: format!("unknown name `{name}`"),
            })
        }
        _ => Err(cur.err("expected a number, a name, `D(` or `(`")),
    }
}

/// Parses `D(u, x, 2, t)`: the head is a function or a nested derivation,
/// then base variables, each optionally followed by a repetition count.
fn parse_dform(cur: &mut Cur, ctx: &DiffCtx) -> Result<DiffVar, ParseError> {
    cur.expect_ident("D")?;
    cur.expect_sym('(')?;
    let mut dv = match cur.peek() {
        Some(Tok::Ident(s)) if s == "D" && cur.peek2() == Some(&Tok::Sym('(')) => {
            parse_dform(cur, ctx)?
        }
        Some(Tok::Ident(_)) => {
            let col = cur.col();
            let name = cur.ident()?;
            let f = ctx.funcs.get(&name).ok_or(ParseError {
                line: cur.line,
                col,
                message: format!("unknown function `{name}`"),
            })?;
            DiffVar::new(*f, MultiIndex::zero(ctx.basevars.len()))
        }
        _ => return Err(cur.err("expected a function name or a nested `D(`")),
    };
    let mut last: Option<usize> = None;
    while cur.eat_sym(',') {
        match cur.peek() {
            Some(Tok::Ident(_)) => {
                let col = cur.col();
                let name = cur.ident()?;
                let i = ctx.basevars.get(&name).ok_or(ParseError {
                    line: cur.line,
                    col,
                    message: format!("unknown base variable `{name}`"),
                })?;
                dv = DiffVar::new(dv.func, dv.mu.bump(*i as usize));
                last = Some(*i as usize);
            }
            Some(Tok::Num(_)) => {
                let col = cur.col();
                let n = cur.uint()?;
                let Some(i) = last else {
                    return Err(ParseError {
                        line: cur.line,
                        col,
                        message: "a repetition count must follow a base variable".into(),
                    });
                };
                if n == 0 {
                    return Err(ParseError {
                        line: cur.line,
                        col,
                        message: "a repetition count must be at least 1".into(),
                    });
                }
                let mut mu = dv.mu.clone();
                for _ in 0..n - 1 {
                    mu = mu.bump(i);
                }
                dv = DiffVar::new(dv.func, mu);
                last = None;
            }
            _ => return Err(cur.err("expected a base variable or a count")),
        }
    }
    cur.expect_sym(')')?;
    Ok(dv)
}

/// A differential system together with its expansion point and base
/// variable names.
#[derive(Clone, Debug)]
pub struct DsysFile {
    pub system: DifferentialSystem,
    pub point: Vec<Rat>,
    pub basevars: Vec<String>,
}

/// Shared header state for `.dsys` and `.mf` files.
struct Header {
    basevars: Vec<String>,
    funcs_declared: Vec<String>,
    ranking: Option<Vec<String>>,
    point: Option<Vec<Rat>>,
}

impl Header {
    fn new() -> Self {
        Header {
            basevars: Vec::new(),
            funcs_declared: Vec::new(),
            ranking: None,
            point: None,
        }
    }

    /// Tries to consume one header line; returns false when the line is
    /// not a header.
    fn try_line(&mut self, cur: &mut Cur) -> Result<bool, ParseError> {
        if cur.eat_ident("basevars") {
            while !cur.at_end() {
                self.basevars.push(cur.ident()?);
            }
            if self.basevars.is_empty() {
                return Err(cur.err("`basevars` needs at least one name"));
            }
            Ok(true)
        } else if cur.eat_ident("funcs") {
            while !cur.at_end() {
                self.funcs_declared.push(cur.ident()?);
            }
            if self.funcs_declared.is_empty() {
                return Err(cur.err("`funcs` needs at least one name"));
            }
            Ok(true)
        } else if cur.eat_ident("ranking") {
            cur.expect_ident("orderly")?;
            let mut order = vec![cur.ident()?];
            while cur.eat_sym('>') {
                order.push(cur.ident()?);
            }
            cur.end()?;
            self.ranking = Some(order);
            Ok(true)
        } else if cur.eat_ident("point") {
            let mut coords = Vec::new();
            while !cur.at_end() {
                coords.push(cur.rational()?);
                cur.eat_sym(',');
            }
            self.point = Some(coords);
            Ok(true)
        } else {
            Ok(false)
        }
    }

    /// Resolves the ranking: function names indexed by priority id, where
    /// a greater id means a greater ranking priority.
    fn func_names(&self, err_line: usize) -> Result<Vec<String>, ParseError> {
        let order = self.ranking.as_ref().unwrap_or(&self.funcs_declared);
        let fail = |message: String| ParseError {
            line: err_line,
            col: 1,
            message,
        };
        if self.funcs_declared.is_empty() {
            return Err(fail("missing `funcs` line".into()));
        }
        if order.len() != self.funcs_declared.len()
            || !self
                .funcs_declared
                .iter()
                .all(|f| order.contains(f))
        {
            return Err(fail(
                "`ranking` must list every declared function exactly once".into(),
            ));
        }
        // first in the order is the highest priority, so it gets the
        // greatest id
        let n = order.len();
        let mut by_id = vec![String::new(); n];
        for (pos, name) in order.iter().enumerate() {
            by_id[n - 1 - pos] = name.clone();
        }
        Ok(by_id)
    }

    fn diff_ctx(&self, err_line: usize) -> Result<DiffCtx, ParseError> {
        let by_id = self.func_names(err_line)?;
        if self.basevars.is_empty() {
            return Err(ParseError {
                line: err_line,
                col: 1,
                message: "missing `basevars` line".into(),
            });
        }
        let mut funcs = BTreeMap::new();
        for (id, name) in by_id.iter().enumerate() {
            funcs.insert(name.clone(), id as u16);
        }
        let mut basevars = BTreeMap::new();
        for (i, name) in self.basevars.iter().enumerate() {
            if funcs.contains_key(name) || basevars.contains_key(name) {
                return Err(ParseError {
                    line: err_line,
                    col: 1,
                    message: format!("name `{name}` is declared twice"),
                });
            }
            basevars.insert(name.clone(), i as u32);
        }
        Ok(DiffCtx { basevars, funcs })
    }

    fn resolved_point(&self, err_line: usize) -> Result<Vec<Rat>, ParseError> {
        match &self.point {
            None => Ok(vec![rat_int(0); self.basevars.len()]),
            Some(p) => {
                if p.len() != self.basevars.len() {
                    return Err(ParseError {
                        line: err_line,
                        col: 1,
                        message: format!(
                            "`point` has {} coordinates, expected {}",
                            p.len(),
                            self.basevars.len()
                        ),
                    });
                }
                Ok(p.clone())
            }
        }
    }
}

pub fn parse_dsys(text: &str) -> Result<DsysFile, ParseError> {
    let lines = lex(text)?;
    let mut header = Header::new();
    let mut eq_lines: Vec<&Line> = Vec::new();
    for line in &lines {
        let mut cur = Cur::new(line);
        if header.try_line(&mut cur)? {
            cur.end()?;
        } else if matches!(cur.peek(), Some(Tok::Ident(s)) if s == "eq") {
            eq_lines.push(line);
        } else {
            return Err(cur.err(
                "expected `basevars`, `funcs`, `ranking`, `point` or `eq`",
            ));
        }
    }
    let last = lines.last().map(|l| l.no).unwrap_or(1);
    let ctx = header.diff_ctx(last)?;
    let func_names = header.func_names(last)?;
    let point = header.resolved_point(last)?;
    let mut equations = Vec::new();
    for line in eq_lines {
        let mut cur = Cur::new(line);
        cur.expect_ident("eq")?;
        let p = parse_diffpoly(&mut cur, &ctx)?;
        cur.end()?;
        equations.push(p);
    }
    Ok(DsysFile {
        system: DifferentialSystem::new(header.basevars.len(), func_names, equations),
        point,
        basevars: header.basevars.clone(),
    })
}

// ---------------------------------------------------------------------------
// stratum expressions (.mf)
// ---------------------------------------------------------------------------

struct KCtxNames<'a> {
    funcs: &'a BTreeMap<String, u16>,
    n_indep: usize,
}

fn parse_kexpr(cur: &mut Cur, ctx: &KCtxNames) -> Result<KExpr, ParseError> {
    let mut acc = kx_term(cur, ctx)?;
    loop {
        if cur.eat_sym('+') {
            acc = acc + kx_term(cur, ctx)?;
        } else if cur.eat_sym('-') {
            acc = acc - kx_term(cur, ctx)?;
        } else {
            return Ok(acc);
        }
    }
}

fn kx_term(cur: &mut Cur, ctx: &KCtxNames) -> Result<KExpr, ParseError> {
    let mut acc = kx_unary(cur, ctx)?;
    loop {
        if cur.eat_sym('*') {
            acc = acc * kx_unary(cur, ctx)?;
        } else if cur.eat_sym('/') {
            acc = acc / kx_unary(cur, ctx)?;
        } else {
            return Ok(acc);
        }
    }
}

fn kx_unary(cur: &mut Cur, ctx: &KCtxNames) -> Result<KExpr, ParseError> {
    if cur.eat_sym('-') {
        return Ok(-kx_unary(cur, ctx)?);
    }
    let base = kx_postfix(cur, ctx)?;
    if cur.eat_sym('^') {
        let e = kx_unary(cur, ctx)?;
        Ok(base.pow(e))
    } else {
        Ok(base)
    }
}

fn kx_postfix(cur: &mut Cur, ctx: &KCtxNames) -> Result<KExpr, ParseError> {
    let mut base = kx_atom(cur, ctx)?;
    while cur.eat_sym('!') {
        base = base.fact();
    }
    Ok(base)
}

fn kx_atom(cur: &mut Cur, ctx: &KCtxNames) -> Result<KExpr, ParseError> {
    match cur.peek() {
        Some(Tok::Num(_)) => {
            let Some(Tok::Num(n)) = cur.bump() else { unreachable!() };
            Ok(KExpr::Num(Rat::from_integer(n.clone())))
        }
        Some(Tok::Sym('(')) => {
            cur.bump();
            let inner = parse_kexpr(cur, ctx)?;
            cur.expect_sym(')')?;
            Ok(inner)
        }
        Some(Tok::Ident(s)) => {
            let s = s.clone();
            match s.as_str() {
                "l" => {
                    cur.bump();
                    Ok(KExpr::L)
                }
                "zeta" => {
                    cur.bump();
                    if cur.eat_sym('(') {
                        let i = cur.uint()?;
                        cur.expect_sym(')')?;
                        Ok(KExpr::Zeta(i as usize))
                    } else {
                        Ok(KExpr::Zeta(0))
                    }
                }
                "binom" => {
                    cur.bump();
                    cur.expect_sym('(')?;
                    let a = parse_kexpr(cur, ctx)?;
                    cur.expect_sym(',')?;
                    let b = parse_kexpr(cur, ctx)?;
                    cur.expect_sym(')')?;
                    Ok(KExpr::binom(a, b))
                }
                "g" if cur.peek2() == Some(&Tok::Sym('(')) => {
                    cur.bump();
                    cur.bump();
                    let col = cur.col();
                    let fname = cur.ident()?;
                    let f = ctx.funcs.get(&fname).ok_or(ParseError {
                        line: cur.line,
                        col,
                        message: format!("unknown function `{fname}`"),
                    })?;
                    let mut idx = Vec::new();
                    while cur.eat_sym(',') {
                        idx.push(parse_kexpr(cur, ctx)?);
                    }
                    cur.expect_sym(')')?;
                    if idx.len() != ctx.n_indep {
                        return Err(ParseError {
                            line: cur.line,
                            col,
                            message: format!(
                                "`g({fname}, ...)` needs {} indices",
                                ctx.n_indep
                            ),
                        });
                    }
                    Ok(KExpr::G(*f, idx))
                }
                _ => {
                    cur.bump();
                    Ok(KExpr::Binder(s))
                }
            }
        }
        _ => Err(cur.err("expected a number, a name or `(`")),
    }
}

fn parse_decl(
    cur: &mut Cur,
    ctx: &KCtxNames,
    kind: DeclKind,
) -> Result<Decl, ParseError> {
    let binder = if cur.eat_ident("for") {
        let name = cur.ident()?;
        cur.expect_ident("in")?;
        let lo = parse_kexpr(cur, ctx)?;
        cur.expect_sym('.')?;
        cur.expect_sym('.')?;
        let hi = parse_kexpr(cur, ctx)?;
        cur.expect_sym(':')?;
        Some(BinderRange { name, lo, hi })
    } else {
        None
    };
    let expr = parse_kexpr(cur, ctx)?;
    cur.end()?;
    Ok(Decl { kind, binder, expr })
}

pub fn parse_manifest(text: &str) -> Result<Manifest, ParseError> {
    let lines = lex(text)?;
    let mut header = Header::new();
    let mut start = 0u32;
    let mut fit_degree = DEFAULT_FIT_DEGREE;
    let mut blocks: Vec<(usize, Vec<&Line>)> = Vec::new(); // (header line index, body)
    let mut block_headers: Vec<&Line> = Vec::new();
    let mut in_strata = false;
    for line in &lines {
        let mut cur = Cur::new(line);
        if matches!(cur.peek(), Some(Tok::Ident(s)) if s == "stratum") {
            block_headers.push(line);
            blocks.push((block_headers.len() - 1, Vec::new()));
            in_strata = true;
        } else if in_strata {
            match blocks.last_mut() {
                Some((_, body)) => body.push(line),
                None => return Err(cur.err("declarations must follow a `stratum` line")),
            }
        } else if header.try_line(&mut cur)? {
            cur.end()?;
        } else if cur.eat_ident("start") {
            let v = cur.int()?;
            cur.end()?;
            start = u32::try_from(v)
                .map_err(|_| cur.err("`start` must be nonnegative"))?;
        } else if cur.eat_ident("fit") {
            cur.expect_sym('-')?;
            cur.expect_ident("degree")?;
            let v = cur.int()?;
            cur.end()?;
            fit_degree = u32::try_from(v)
                .map_err(|_| cur.err("`fit-degree` must be nonnegative"))?;
        } else {
            return Err(cur.err(
                "expected a header line (`basevars`, `funcs`, `ranking`, `point`, \
                 `start`, `fit-degree`) or a `stratum` block",
            ));
        }
    }
    let last = lines.last().map(|l| l.no).unwrap_or(1);
    let diff_ctx = header.diff_ctx(last)?;
    let func_names = header.func_names(last)?;
    let zeta = header.resolved_point(last)?;
    let kctx = KCtxNames {
        funcs: &diff_ctx.funcs,
        n_indep: header.basevars.len(),
    };

    let mut strata = Vec::new();
    for (hidx, body) in &blocks {
        let hline = block_headers[*hidx];
        let mut cur = Cur::new(hline);
        cur.expect_ident("stratum")?;
        if cur.eat_ident("diff") {
            cur.end()?;
            let mut equations = Vec::new();
            let mut coeff_inequations = Vec::new();
            for line in body {
                let mut c = Cur::new(line);
                if c.eat_ident("eq") {
                    equations.push(parse_diffpoly(&mut c, &diff_ctx)?);
                    c.end()?;
                } else if c.eat_ident("coeff") {
                    c.expect_sym('-')?;
                    c.expect_ident("ineq")?;
                    coeff_inequations.push(parse_kexpr(&mut c, &kctx)?);
                    c.end()?;
                } else {
                    return Err(c.err("expected `eq` or `coeff-ineq` in a diff stratum"));
                }
            }
            strata.push(Stratum::Differential(DifferentialStratum {
                equations,
                coeff_inequations,
            }));
        } else if cur.eat_ident("family") {
            let binder = cur.ident()?;
            cur.expect_ident("from")?;
            let lo = parse_kexpr(&mut cur, &kctx)?;
            cur.expect_ident("to")?;
            let hi = parse_kexpr(&mut cur, &kctx)?;
            cur.end()?;
            let mut declarations = Vec::new();
            for line in body {
                let mut c = Cur::new(line);
                if c.eat_ident("eq") {
                    declarations.push(parse_decl(&mut c, &kctx, DeclKind::Equation)?);
                } else if c.eat_ident("ineq") {
                    declarations.push(parse_decl(&mut c, &kctx, DeclKind::Inequation)?);
                } else {
                    return Err(c.err("expected `eq` or `ineq` in a family stratum"));
                }
            }
            strata.push(Stratum::Family(FamilyStratum {
                binder,
                lo,
                hi,
                declarations,
            }));
        } else if cur.eat_ident("residual") {
            cur.end()?;
            let mut declarations = Vec::new();
            let mut markers = Vec::new();
            for line in body {
                let mut c = Cur::new(line);
                if c.eat_ident("eq") {
                    declarations.push(parse_decl(&mut c, &kctx, DeclKind::Equation)?);
                } else if c.eat_ident("ineq") {
                    declarations.push(parse_decl(&mut c, &kctx, DeclKind::Inequation)?);
                } else if c.eat_ident("cofinite") {
                    c.expect_ident("g")?;
                    c.expect_sym('(')?;
                    let col = c.col();
                    let fname = c.ident()?;
                    let f = diff_ctx.funcs.get(&fname).ok_or(ParseError {
                        line: c.line,
                        col,
                        message: format!("unknown function `{fname}`"),
                    })?;
                    let mut indices = Vec::new();
                    while c.eat_sym(',') {
                        indices.push(parse_kexpr(&mut c, &kctx)?);
                    }
                    c.expect_sym(')')?;
                    c.expect_ident("scale")?;
                    let scale = parse_kexpr(&mut c, &kctx)?;
                    c.expect_ident("offset")?;
                    let offset = parse_kexpr(&mut c, &kctx)?;
                    c.expect_ident("from")?;
                    let from = c.int()?;
                    c.end()?;
                    markers.push(MarkerSpec {
                        func: *f,
                        indices,
                        param: "i".into(),
                        scale,
                        offset,
                        from,
                    });
                } else {
                    return Err(
                        c.err("expected `eq`, `ineq` or `cofinite` in a residual stratum")
                    );
                }
            }
            strata.push(Stratum::Residual(ResidualStratum {
                declarations,
                markers,
            }));
        } else {
            return Err(cur.err("expected `diff`, `family` or `residual`"));
        }
    }

    Ok(Manifest {
        n_indep: header.basevars.len(),
        func_names,
        zeta,
        start,
        fit_degree,
        strata,
    })
}

// ---------------------------------------------------------------------------
// leader sets (.lead)
// ---------------------------------------------------------------------------

/// A leader set together with its names.
#[derive(Clone, Debug)]
pub struct LeadFile {
    pub set: LeaderSet,
    pub basevars: Vec<String>,
    pub func_names: Vec<String>,
}

pub fn parse_lead(text: &str) -> Result<LeadFile, ParseError> {
    let lines = lex(text)?;
    let mut header = Header::new();
    let mut leader_lines: Vec<&Line> = Vec::new();
    for line in &lines {
        let mut cur = Cur::new(line);
        if header.try_line(&mut cur)? {
            cur.end()?;
        } else if matches!(cur.peek(), Some(Tok::Ident(s)) if s == "leader") {
            leader_lines.push(line);
        } else {
            return Err(cur.err("expected `basevars`, `funcs`, `ranking` or `leader`"));
        }
    }
    let last = lines.last().map(|l| l.no).unwrap_or(1);
    let ctx = header.diff_ctx(last)?;
    let func_names = header.func_names(last)?;
    let n = header.basevars.len();
    let mut families: Vec<Vec<MultiIndex>> = vec![Vec::new(); func_names.len()];
    for line in leader_lines {
        let mut cur = Cur::new(line);
        cur.expect_ident("leader")?;
        let col = cur.col();
        let fname = cur.ident()?;
        let f = ctx.funcs.get(&fname).ok_or(ParseError {
            line: cur.line,
            col,
            message: format!("unknown function `{fname}`"),
        })?;
        let mut mu = vec![cur.uint()?];
        while cur.eat_sym(',') {
            mu.push(cur.uint()?);
        }
        cur.end()?;
        if mu.len() != n {
            return Err(ParseError {
                line: cur.line,
                col,
                message: format!("a leader needs {n} indices"),
            });
        }
        families[*f as usize].push(MultiIndex::new(mu));
    }
    let set = LeaderSet::new(n, families).map_err(|e| ParseError {
        line: last,
        col: 1,
        message: e.to_string(),
    })?;
    Ok(LeadFile {
        set,
        basevars: header.basevars.clone(),
        func_names,
    })
}
