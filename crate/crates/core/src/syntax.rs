//! Concrete syntax for declarations, type schemes and value literals.
//!
//! ```text
//! type List(a) = Nil | Cons(a * List(a))     # declarations
//! List(a) * List(a)                          # schemes: lowercase names are quantified
//! let p = Cons(1, Nil) in (p, p)             # values
//! fix (r, s) = (A(s), B(r))
//! ```
//!
//! `#` starts a comment running to the end of the line.

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::defs::{CtorKind, DataDecl, DefsError, TypeDefs};
use crate::types::{Name, TypeExpr, TypeScheme};
use crate::value::Expr;

/// Values nested deeper than this are rejected rather than risking the stack.
pub const MAX_NESTING: usize = 100_000;
const MAX_TYPE_NESTING: usize = 256;
/// The value parser recurses once or twice per nesting level.
const PARSER_STACK: usize = 512 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParseErrorCode {
    Syntax,
    DuplicateConstructor,
    DuplicateType,
    UnknownTypeInPayload,
    UnboundParameter,
    UnknownType,
    ArityMismatch,
    UnknownConstructor,
    UnboundVariable,
    UselessBinder,
    DuplicateBinder,
    IntegerOverflow,
    NestingTooDeep,
}

impl fmt::Display for ParseErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{line}:{col}: {code}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub code: ParseErrorCode,
    pub message: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Pos {
    line: usize,
    col: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Lower(String),
    Upper(String),
    Int(String),
    Punct(char),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Lower(s) | Tok::Upper(s) | Tok::Int(s) => write!(f, "`{s}`"),
            Tok::Punct(c) => write!(f, "`{c}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1, 1);
    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
        if c == '\n' {
            chars.next();
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            chars.next();
            col += 1;
            continue;
        }
        if c == '#' {
            while chars.peek().is_some_and(|&c| c != '\n') {
                chars.next();
            }
            continue;
        }
        let mut word = String::new();
        if c.is_ascii_alphabetic() || c == '_' {
            while let Some(&c) = chars.peek().filter(|c| c.is_ascii_alphanumeric() || **c == '_' || **c == '\'') {
                word.push(c);
                chars.next();
                col += 1;
            }
            let tok = if word.starts_with(|c: char| c.is_ascii_uppercase()) { Tok::Upper(word) } else { Tok::Lower(word) };
            out.push((tok, pos));
            continue;
        }
        if c.is_ascii_digit() || c == '-' {
            word.push(c);
            chars.next();
            col += 1;
            while let Some(&d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                word.push(d);
                chars.next();
                col += 1;
            }
            if word == "-" {
                return Err(error(pos, ParseErrorCode::Syntax, "expected digits after `-`"));
            }
            out.push((Tok::Int(word), pos));
            continue;
        }
        if "()*,|=;".contains(c) {
            chars.next();
            col += 1;
            out.push((Tok::Punct(c), pos));
            continue;
        }
        return Err(error(pos, ParseErrorCode::Syntax, format!("unexpected character `{c}`")));
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

fn error(pos: Pos, code: ParseErrorCode, message: impl Into<String>) -> ParseError {
    ParseError { line: pos.line, col: pos.col, code, message: message.into() }
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Self, ParseError> {
        Ok(Parser { toks: lex(text)?, at: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expected(&self, what: &[&str]) -> ParseError {
        error(self.pos(), ParseErrorCode::Syntax, format!("expected {}, found {}", what.join(" or "), self.peek()))
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Punct(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.expected(&[&format!("`{c}`")]))
        }
    }

    fn keyword(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Tok::Lower(s) if s == kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn lower(&mut self) -> Result<(Name, Pos), ParseError> {
        match self.peek() {
            Tok::Lower(s) if !is_keyword(s) => match self.bump() {
                (Tok::Lower(s), p) => Ok((s, p)),
                _ => unreachable!(),
            },
            _ => Err(self.expected(&["a lowercase name"])),
        }
    }

    fn upper(&mut self) -> Result<(Name, Pos), ParseError> {
        match self.peek() {
            Tok::Upper(_) => match self.bump() {
                (Tok::Upper(s), p) => Ok((s, p)),
                _ => unreachable!(),
            },
            _ => Err(self.expected(&["a capitalized name"])),
        }
    }

    fn end(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.expected(&["end of input"]))
        }
    }

    /// `atom ('*' atom)*`; each constructor name and position is reported to
    /// `seen` for later validation.
    fn type_expr(&mut self, seen: &mut Vec<(Name, usize, Pos)>, depth: usize) -> Result<TypeExpr, ParseError> {
        if depth > MAX_TYPE_NESTING {
            return Err(error(self.pos(), ParseErrorCode::NestingTooDeep, "type is nested too deeply"));
        }
        let mut parts = vec![self.type_atom(seen, depth)?];
        while self.eat('*') {
            parts.push(self.type_atom(seen, depth)?);
        }
        Ok(TypeExpr::product(parts))
    }

    fn type_atom(&mut self, seen: &mut Vec<(Name, usize, Pos)>, depth: usize) -> Result<TypeExpr, ParseError> {
        match self.peek().clone() {
            Tok::Upper(name) if name == "Int" => {
                self.bump();
                Ok(TypeExpr::Int)
            }
            Tok::Upper(name) => {
                let (_, pos) = self.bump();
                let mut args = Vec::new();
                if self.eat('(') {
                    args.push(self.type_expr(seen, depth + 1)?);
                    while self.eat(',') {
                        args.push(self.type_expr(seen, depth + 1)?);
                    }
                    self.expect(')')?;
                }
                seen.push((name.clone(), args.len(), pos));
                Ok(TypeExpr::Con(name, args))
            }
            Tok::Lower(_) => Ok(TypeExpr::Var(self.lower()?.0)),
            Tok::Punct('(') => {
                self.bump();
                let t = self.type_expr(seen, depth + 1)?;
                self.expect(')')?;
                Ok(t)
            }
            _ => Err(self.expected(&["a type"])),
        }
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(s, "type" | "let" | "in" | "fix")
}

/// Parses a sequence of `type` declarations.
pub fn parse_type_defs(text: &str) -> Result<TypeDefs, ParseError> {
    let mut p = Parser::new(text)?;
    let mut decls = Vec::new();
    let mut type_pos: HashMap<Name, Pos> = HashMap::new();
    let mut ctor_pos: HashMap<Name, Pos> = HashMap::new();
    let mut payload_refs: Vec<(Name, Name, usize, Pos)> = Vec::new();
    let mut var_refs: Vec<(Name, Name, Pos)> = Vec::new();
    while p.eat(';') {}
    while *p.peek() != Tok::Eof {
        if !p.keyword("type") {
            return Err(p.expected(&["`type`"]));
        }
        let (name, name_pos) = p.upper()?;
        if name == "Int" {
            return Err(error(name_pos, ParseErrorCode::DuplicateType, "`Int` is built in"));
        }
        if type_pos.insert(name.clone(), name_pos).is_some() {
            return Err(error(name_pos, ParseErrorCode::DuplicateType, format!("type `{name}` is declared twice")));
        }
        let mut params = Vec::new();
        if p.eat('(') {
            params.push(p.lower()?.0);
            while p.eat(',') {
                params.push(p.lower()?.0);
            }
            p.expect(')')?;
        }
        p.expect('=')?;
        let mut decl = DataDecl { name: name.clone(), params, constants: vec![], unary: vec![] };
        loop {
            let (ctor, pos) = p.upper()?;
            if ctor_pos.insert(ctor.clone(), pos).is_some() {
                return Err(error(
                    pos,
                    ParseErrorCode::DuplicateConstructor,
                    format!("constructor `{ctor}` is declared twice"),
                ));
            }
            if p.eat('(') {
                let var_pos = p.pos();
                let mut seen = Vec::new();
                let payload = p.type_expr(&mut seen, 0)?;
                p.expect(')')?;
                for a in payload.free_vars() {
                    var_refs.push((name.clone(), a, var_pos));
                }
                payload_refs.extend(seen.into_iter().map(|(t, n, pos)| (name.clone(), t, n, pos)));
                decl.unary.push((ctor, payload));
            } else {
                decl.constants.push(ctor);
            }
            if !p.eat('|') {
                break;
            }
        }
        decls.push(decl);
        while p.eat(';') {}
    }
    let arity: HashMap<&Name, usize> = decls.iter().map(|d| (&d.name, d.params.len())).collect();
    for (_, t, n, pos) in &payload_refs {
        match arity.get(t) {
            None => {
                return Err(error(*pos, ParseErrorCode::UnknownTypeInPayload, format!("unknown type `{t}`")));
            }
            Some(&k) if k != *n => {
                return Err(error(
                    *pos,
                    ParseErrorCode::ArityMismatch,
                    format!("type `{t}` expects {k} argument(s), found {n}"),
                ));
            }
            _ => {}
        }
    }
    for (ty, a, pos) in &var_refs {
        let decl = decls.iter().find(|d| d.name == *ty).expect("declared");
        if !decl.params.contains(a) {
            return Err(error(
                *pos,
                ParseErrorCode::UnboundParameter,
                format!("type variable `{a}` is not a parameter of `{ty}`"),
            ));
        }
    }
    TypeDefs::new(decls).map_err(|e| defs_error(e, Pos { line: 1, col: 1 }))
}

fn defs_error(e: DefsError, pos: Pos) -> ParseError {
    let code = match e {
        DefsError::UnknownType(_) => ParseErrorCode::UnknownType,
        DefsError::UnknownConstructor(_) => ParseErrorCode::UnknownConstructor,
        DefsError::ArityMismatch { .. } => ParseErrorCode::ArityMismatch,
        DefsError::DuplicateConstructor(_) => ParseErrorCode::DuplicateConstructor,
        DefsError::DuplicateType(_) => ParseErrorCode::DuplicateType,
        DefsError::UnboundParameter { .. } => ParseErrorCode::UnboundParameter,
        DefsError::EmptyDeclaration(_) | DefsError::BadTupleArity => ParseErrorCode::Syntax,
    };
    error(pos, code, e.to_string())
}

/// Parses a type; its lowercase variables are universally quantified.
pub fn parse_type_scheme(text: &str, defs: &TypeDefs) -> Result<TypeScheme, ParseError> {
    let mut p = Parser::new(text)?;
    let mut seen = Vec::new();
    let t = p.type_expr(&mut seen, 0)?;
    p.end()?;
    for (name, n, pos) in seen {
        match defs.get(&name) {
            None => return Err(error(pos, ParseErrorCode::UnknownType, format!("unknown type `{name}`"))),
            Some(d) if d.params.len() != n => {
                return Err(error(
                    pos,
                    ParseErrorCode::ArityMismatch,
                    format!("type `{name}` expects {} argument(s), found {n}", d.params.len()),
                ))
            }
            _ => {}
        }
    }
    Ok(TypeScheme::closed(t))
}

struct Binder {
    name: Name,
    rec: bool,
    pos: Pos,
    uses: usize,
}

struct ValueParser<'a> {
    p: Parser,
    defs: &'a TypeDefs,
    scope: Vec<Binder>,
    all_binders: HashSet<Name>,
}

impl ValueParser<'_> {
    fn binders(&mut self) -> Result<Vec<(Name, Pos)>, ParseError> {
        let mut out = Vec::new();
        if self.p.eat('(') {
            out.push(self.p.lower()?);
            while self.p.eat(',') {
                out.push(self.p.lower()?);
            }
            self.p.expect(')')?;
        } else {
            out.push(self.p.lower()?);
        }
        for (name, pos) in &out {
            if !self.all_binders.insert(name.clone()) {
                return Err(error(*pos, ParseErrorCode::DuplicateBinder, format!("`{name}` is bound twice")));
            }
        }
        Ok(out)
    }

    fn open(&mut self, binders: &[(Name, Pos)], rec: bool) {
        for (name, pos) in binders {
            self.scope.push(Binder { name: name.clone(), rec, pos: *pos, uses: 0 });
        }
    }

    fn close(&mut self, n: usize) -> Result<(), ParseError> {
        for b in self.scope.split_off(self.scope.len() - n) {
            if b.uses == 0 {
                return Err(error(b.pos, ParseErrorCode::UselessBinder, format!("`{}` is never used", b.name)));
            }
        }
        Ok(())
    }

    fn value(&mut self, depth: usize) -> Result<Expr, ParseError> {
        if depth > MAX_NESTING {
            return Err(error(self.p.pos(), ParseErrorCode::NestingTooDeep, "value is nested too deeply"));
        }
        if self.p.keyword("let") {
            let binders = self.binders()?;
            self.p.expect('=')?;
            let bound = self.value(depth + 1)?;
            if !self.p.keyword("in") {
                return Err(self.p.expected(&["`in`"]));
            }
            self.open(&binders, false);
            let body = self.value(depth + 1)?;
            self.close(binders.len())?;
            let binders = binders.into_iter().map(|(n, _)| n).collect();
            return Ok(Expr::Let { binders, bound: Box::new(bound), body: Box::new(body) });
        }
        if self.p.keyword("fix") {
            let binders = self.binders()?;
            self.p.expect('=')?;
            self.open(&binders, true);
            let body = self.value(depth + 1)?;
            self.close(binders.len())?;
            let binders = binders.into_iter().map(|(n, _)| n).collect();
            return Ok(Expr::Fix { binders, body: Box::new(body) });
        }
        match self.p.peek().clone() {
            Tok::Int(digits) => {
                let (_, pos) = self.p.bump();
                digits
                    .parse::<i64>()
                    .map(Expr::Int)
                    .map_err(|_| error(pos, ParseErrorCode::IntegerOverflow, format!("`{digits}` does not fit in 64 bits")))
            }
            Tok::Lower(name) if !is_keyword(&name) => {
                let (_, pos) = self.p.bump();
                match self.scope.iter_mut().rev().find(|b| b.name == name) {
                    Some(b) => {
                        b.uses += 1;
                        Ok(if b.rec { Expr::Rec(name) } else { Expr::Shared(name) })
                    }
                    None => Err(error(pos, ParseErrorCode::UnboundVariable, format!("`{name}` is not bound"))),
                }
            }
            Tok::Upper(name) => {
                let (_, pos) = self.p.bump();
                let Some(info) = self.defs.constructor(&name) else {
                    return Err(error(pos, ParseErrorCode::UnknownConstructor, format!("unknown constructor `{name}`")));
                };
                let kind = info.kind;
                let has_args = *self.p.peek() == Tok::Punct('(');
                match (kind, has_args) {
                    (CtorKind::Constant, false) => Ok(Expr::Const(name)),
                    (CtorKind::Constant, true) => Err(error(
                        self.p.pos(),
                        ParseErrorCode::Syntax,
                        format!("constant constructor `{name}` takes no argument"),
                    )),
                    (CtorKind::Unary, false) => {
                        Err(self.p.expected(&[&format!("`(` after unary constructor `{name}`")]))
                    }
                    (CtorKind::Unary, true) => {
                        let args = self.tuple_items(depth)?;
                        Ok(Expr::apply(&name, Expr::product(args)))
                    }
                }
            }
            Tok::Punct('(') => {
                let items = self.tuple_items(depth)?;
                Ok(Expr::product(items))
            }
            _ => Err(self.p.expected(&["a value"])),
        }
    }

    /// `'(' value (',' value)* ')'`
    fn tuple_items(&mut self, depth: usize) -> Result<Vec<Expr>, ParseError> {
        self.p.expect('(')?;
        let mut items = vec![self.value(depth + 1)?];
        while self.p.eat(',') {
            items.push(self.value(depth + 1)?);
        }
        self.p.expect(')')?;
        Ok(items)
    }
}

/// Parses a closed value literal. Variables bound by `let` are sharing
/// pointers and those bound by `fix` are recursive pointers; every binder
/// must be used and no name may be bound twice.
pub fn parse_value_literal(text: &str, defs: &TypeDefs) -> Result<Expr, ParseError> {
    let parse = || {
        let mut vp = ValueParser { p: Parser::new(text)?, defs, scope: Vec::new(), all_binders: HashSet::new() };
        let e = vp.value(0)?;
        vp.p.end()?;
        Ok(e)
    };
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(PARSER_STACK)
            .spawn_scoped(s, parse)
            .expect("spawn parser thread")
            .join()
            .unwrap_or_else(|panic| std::panic::resume_unwind(panic))
    })
}

/// Prints `e` in the syntax accepted by [`parse_value_literal`].
pub fn print_expr(e: &Expr) -> String {
    enum Piece<'a> {
        Expr(&'a Expr),
        Text(&'static str),
        Owned(String),
    }
    fn binders(names: &[Name]) -> String {
        if names.len() == 1 {
            names[0].clone()
        } else {
            format!("({})", names.join(", "))
        }
    }
    fn items<'a>(stack: &mut Vec<Piece<'a>>, es: &'a [Expr]) {
        stack.push(Piece::Text(")"));
        for (i, e) in es.iter().enumerate().rev() {
            stack.push(Piece::Expr(e));
            if i > 0 {
                stack.push(Piece::Text(", "));
            }
        }
        stack.push(Piece::Text("("));
    }
    let mut out = String::new();
    let mut stack = vec![Piece::Expr(e)];
    while let Some(piece) = stack.pop() {
        match piece {
            Piece::Text(s) => out.push_str(s),
            Piece::Owned(s) => out.push_str(&s),
            Piece::Expr(e) => match e {
                Expr::Int(n) => out.push_str(&n.to_string()),
                Expr::Shared(x) | Expr::Rec(x) | Expr::Const(x) => out.push_str(x),
                Expr::Tuple(es) => items(&mut stack, es),
                Expr::Apply(f, arg) => {
                    out.push_str(f);
                    match &**arg {
                        Expr::Tuple(es) => items(&mut stack, es),
                        other => {
                            stack.push(Piece::Text(")"));
                            stack.push(Piece::Expr(other));
                            stack.push(Piece::Text("("));
                        }
                    }
                }
                Expr::Let { binders: names, bound, body } => {
                    stack.push(Piece::Expr(body));
                    stack.push(Piece::Text(" in "));
                    stack.push(Piece::Expr(bound));
                    stack.push(Piece::Owned(format!("let {} = ", binders(names))));
                }
                Expr::Fix { binders: names, body } => {
                    stack.push(Piece::Expr(body));
                    stack.push(Piece::Owned(format!("fix {} = ", binders(names))));
                }
            },
        }
    }
    out
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_expr(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::generate::gen_typed_program;

    const PRELUDE: &str = "
        type List(a) = Nil | Cons(a * List(a))
        type Bool = False | True
        type Nest(a) = Leaf | B(Nest(a * a))   # non-regular
    ";

    fn prelude() -> TypeDefs {
        parse_type_defs(PRELUDE).unwrap()
    }

    fn code(r: Result<impl fmt::Debug, ParseError>) -> ParseErrorCode {
        r.unwrap_err().code
    }

    #[test]
    fn declarations() {
        let defs = prelude();
        let list = defs.get("List").unwrap();
        assert_eq!(list.constants, vec!["Nil".to_string()]);
        assert_eq!(list.unary[0].0, "Cons");
        assert_eq!(defs, crate::defs::fixtures::prelude());

        let mixed = parse_type_defs("type T = F(Int) | A | G(Int) | B").unwrap();
        assert_eq!(mixed.constructor("B").unwrap().rank, 2);
        assert_eq!(mixed.constructor("G").unwrap().rank, 2);
    }

    #[test]
    fn declaration_errors() {
        let e = parse_type_defs("type T(a) = ").unwrap_err();
        assert_eq!((e.code, e.line, e.col), (ParseErrorCode::Syntax, 1, 13));
        assert_eq!(code(parse_type_defs("type A = X\ntype B = X")), ParseErrorCode::DuplicateConstructor);
        assert_eq!(code(parse_type_defs("type A = X(Tree)")), ParseErrorCode::UnknownTypeInPayload);
        assert_eq!(code(parse_type_defs("type A(a) = X(List(a))")), ParseErrorCode::UnknownTypeInPayload);
        assert_eq!(code(parse_type_defs("type A(a) = X(A)")), ParseErrorCode::ArityMismatch);
        assert_eq!(code(parse_type_defs("type A = X(b)")), ParseErrorCode::UnboundParameter);
        let e = parse_type_defs("type A = X\n\ntype A = Y").unwrap_err();
        assert_eq!((e.code, e.line, e.col), (ParseErrorCode::DuplicateType, 3, 6));
        assert_eq!(e.to_string(), "3:6: DuplicateType: type `A` is declared twice");
    }

    #[test]
    fn schemes() {
        let defs = prelude();
        let s = parse_type_scheme("List(Int)", &defs).unwrap();
        assert!(s.vars.is_empty());
        assert_eq!(s.body, TypeExpr::con("List", vec![TypeExpr::Int]));
        let s = parse_type_scheme("List(a) * List(a)", &defs).unwrap();
        assert_eq!(s.vars.len(), 1);
        assert_eq!(s.body.to_string(), "(List(a) * List(a))");
        let nested = parse_type_scheme("(Int * Int) * Int", &defs).unwrap();
        assert!(matches!(&nested.body, TypeExpr::Tuple(ts) if ts.len() == 2));
        assert_eq!(code(parse_type_scheme("List(Int, Int)", &defs)), ParseErrorCode::ArityMismatch);
        assert_eq!(code(parse_type_scheme("Tree(Int)", &defs)), ParseErrorCode::UnknownType);
        assert_eq!(code(parse_type_scheme("List(Int) Int", &defs)), ParseErrorCode::Syntax);
    }

    #[test]
    fn values() {
        let defs = prelude();
        let v = |s| parse_value_literal(s, &defs);
        assert_eq!(v("(Nil, Nil)").unwrap(), Expr::Tuple(vec![Expr::constant("Nil"), Expr::constant("Nil")]));
        assert_eq!(v("fix r = B(r)").unwrap(), Expr::fix(&["r"], Expr::apply("B", Expr::rec("r"))));
        assert_eq!(
            v("Cons(1, Nil)").unwrap(),
            Expr::apply("Cons", Expr::Tuple(vec![Expr::Int(1), Expr::constant("Nil")]))
        );
        assert_eq!(
            v("let p = -3 in (p, p)").unwrap(),
            Expr::let_in(&["p"], Expr::Int(-3), Expr::Tuple(vec![Expr::shared("p"), Expr::shared("p")]))
        );
        assert!(v("fix (r, s) = (Cons(1, s), Cons(2, r))").is_ok());
        assert_eq!(code(v("let p = 1 in 2")), ParseErrorCode::UselessBinder);
        assert_eq!(code(v("Tip")), ParseErrorCode::UnknownConstructor);
        assert_eq!(code(v("(p, 1)")), ParseErrorCode::UnboundVariable);
        assert_eq!(code(v("let p = 1 in let p = 2 in (p, p)")), ParseErrorCode::DuplicateBinder);
        assert_eq!(code(v("99999999999999999999")), ParseErrorCode::IntegerOverflow);
        assert_eq!(code(v("Nil(1)")), ParseErrorCode::Syntax);
        assert_eq!(code(v("Cons")), ParseErrorCode::Syntax);
        let deep = "B(".repeat(MAX_NESTING + 5) + "Leaf" + &")".repeat(MAX_NESTING + 5);
        assert_eq!(code(v(&deep)), ParseErrorCode::NestingTooDeep);
    }

    #[test]
    fn print_parse_round_trip() {
        let defs = prelude();
        for seed in 0..300 {
            let (e, _) = gen_typed_program(seed, 60, &defs);
            let text = print_expr(&e);
            assert_eq!(parse_value_literal(&text, &defs).unwrap(), e, "{text}");
        }
    }
}
