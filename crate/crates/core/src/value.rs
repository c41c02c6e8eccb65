//! Source expressions and the untyped value terms they translate to.
//!
//! Both term types can be nested arbitrarily deep (a decoded list of a
//! million cells is a million levels deep), so traversal, equality and drop
//! all run on explicit stacks. The derived `Clone` and `Debug` impls are
//! recursive and meant for small terms only.

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::defs::{CtorKind, TypeDefs};
use crate::types::{Name, Var, VarKind};

/// Expression of the source language: integers, tuples, constructors, and
/// `let`/`fix` binders for sharing and cycles.
#[derive(Clone, Debug)]
pub enum Expr {
    Int(i64),
    Shared(Name),
    Rec(Name),
    Tuple(Vec<Expr>),
    Const(Name),
    Apply(Name, Box<Expr>),
    Let { binders: Vec<Name>, bound: Box<Expr>, body: Box<Expr> },
    Fix { binders: Vec<Name>, body: Box<Expr> },
}

/// Untyped value: what remains of an [`Expr`] once constructors are replaced
/// by their ranks.
#[derive(Clone, Debug)]
pub enum ValueTerm {
    Int(i64),
    Shared(Name),
    Rec(Name),
    /// Mark 0 is a tuple (arity >= 2); mark i >= 1 is the i-th unary
    /// constructor of some type (arity 1).
    Block { mark: u32, fields: Vec<ValueTerm> },
    Let { binders: Vec<Name>, bound: Box<ValueTerm>, body: Box<ValueTerm> },
    Fix { binders: Vec<Name>, body: Box<ValueTerm> },
}

impl Expr {
    pub fn int(n: i64) -> Self {
        Expr::Int(n)
    }

    pub fn shared(p: &str) -> Self {
        Expr::Shared(p.to_string())
    }

    pub fn rec(r: &str) -> Self {
        Expr::Rec(r.to_string())
    }

    pub fn constant(c: &str) -> Self {
        Expr::Const(c.to_string())
    }

    /// A tuple, or the component itself when there is only one.
    pub fn product(mut components: Vec<Expr>) -> Self {
        if components.len() == 1 {
            components.pop().expect("one component")
        } else {
            Expr::Tuple(components)
        }
    }

    pub fn apply(f: &str, arg: Expr) -> Self {
        Expr::Apply(f.to_string(), Box::new(arg))
    }

    pub fn let_in(binders: &[&str], bound: Expr, body: Expr) -> Self {
        Expr::Let { binders: names(binders), bound: Box::new(bound), body: Box::new(body) }
    }

    pub fn fix(binders: &[&str], body: Expr) -> Self {
        Expr::Fix { binders: names(binders), body: Box::new(body) }
    }
}

impl ValueTerm {
    pub fn block(mark: u32, fields: Vec<ValueTerm>) -> Self {
        ValueTerm::Block { mark, fields }
    }

    pub fn shared(p: &str) -> Self {
        ValueTerm::Shared(p.to_string())
    }

    pub fn rec(r: &str) -> Self {
        ValueTerm::Rec(r.to_string())
    }

    pub fn let_in(binders: &[&str], bound: ValueTerm, body: ValueTerm) -> Self {
        ValueTerm::Let { binders: names(binders), bound: Box::new(bound), body: Box::new(body) }
    }

    pub fn fix(binders: &[&str], body: ValueTerm) -> Self {
        ValueTerm::Fix { binders: names(binders), body: Box::new(body) }
    }

    /// Number of `Block` nodes in the term.
    pub fn block_count(&self) -> usize {
        let mut n = 0;
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            match t {
                ValueTerm::Int(_) | ValueTerm::Shared(_) | ValueTerm::Rec(_) => {}
                ValueTerm::Block { fields, .. } => {
                    n += 1;
                    stack.extend(fields);
                }
                ValueTerm::Let { bound, body, .. } => {
                    stack.push(bound);
                    stack.push(body);
                }
                ValueTerm::Fix { body, .. } => stack.push(body),
            }
        }
        n
    }

    /// Maximum nesting depth of `fix` constructs.
    pub fn fix_depth(&self) -> usize {
        let mut max = 0;
        let mut stack = vec![(self, 0usize)];
        while let Some((t, d)) = stack.pop() {
            match t {
                ValueTerm::Int(_) | ValueTerm::Shared(_) | ValueTerm::Rec(_) => {}
                ValueTerm::Block { fields, .. } => stack.extend(fields.iter().map(|f| (f, d))),
                ValueTerm::Let { bound, body, .. } => {
                    stack.push((bound, d));
                    stack.push((body, d));
                }
                ValueTerm::Fix { body, .. } => {
                    max = max.max(d + 1);
                    stack.push((body, d + 1));
                }
            }
        }
        max
    }
}

fn names(ns: &[&str]) -> Vec<Name> {
    ns.iter().map(|s| s.to_string()).collect()
}

/// Shape of a term node as seen by binder-aware traversals.
pub(crate) enum View<'a, T> {
    Leaf,
    Var(VarKind, &'a Name),
    Children(&'a [T]),
    Child(&'a T),
    Let { binders: &'a [Name], bound: &'a T, body: &'a T },
    Fix { binders: &'a [Name], body: &'a T },
}

pub(crate) trait Term: Sized {
    fn view(&self) -> View<'_, Self>;
}

impl Term for Expr {
    fn view(&self) -> View<'_, Self> {
        match self {
            Expr::Int(_) | Expr::Const(_) => View::Leaf,
            Expr::Shared(p) => View::Var(VarKind::Shared, p),
            Expr::Rec(r) => View::Var(VarKind::Recursive, r),
            Expr::Tuple(es) => View::Children(es),
            Expr::Apply(_, e) => View::Child(e),
            Expr::Let { binders, bound, body } => View::Let { binders, bound, body },
            Expr::Fix { binders, body } => View::Fix { binders, body },
        }
    }
}

impl Term for ValueTerm {
    fn view(&self) -> View<'_, Self> {
        match self {
            ValueTerm::Int(_) => View::Leaf,
            ValueTerm::Shared(p) => View::Var(VarKind::Shared, p),
            ValueTerm::Rec(r) => View::Var(VarKind::Recursive, r),
            ValueTerm::Block { fields, .. } => View::Children(fields),
            ValueTerm::Let { binders, bound, body } => View::Let { binders, bound, body },
            ValueTerm::Fix { binders, body } => View::Fix { binders, body },
        }
    }
}

impl Drop for Expr {
    fn drop(&mut self) {
        fn detach(t: &mut Expr, out: &mut Vec<Expr>) {
            match t {
                Expr::Tuple(es) => out.append(es),
                Expr::Apply(_, e) => out.push(std::mem::replace(&mut **e, Expr::Int(0))),
                Expr::Let { bound, body, .. } => {
                    out.push(std::mem::replace(&mut **bound, Expr::Int(0)));
                    out.push(std::mem::replace(&mut **body, Expr::Int(0)));
                }
                Expr::Fix { body, .. } => out.push(std::mem::replace(&mut **body, Expr::Int(0))),
                _ => {}
            }
        }
        let mut stack = Vec::new();
        detach(self, &mut stack);
        while let Some(mut t) = stack.pop() {
            detach(&mut t, &mut stack);
        }
    }
}

impl Drop for ValueTerm {
    fn drop(&mut self) {
        fn detach(t: &mut ValueTerm, out: &mut Vec<ValueTerm>) {
            match t {
                ValueTerm::Block { fields, .. } => out.append(fields),
                ValueTerm::Let { bound, body, .. } => {
                    out.push(std::mem::replace(&mut **bound, ValueTerm::Int(0)));
                    out.push(std::mem::replace(&mut **body, ValueTerm::Int(0)));
                }
                ValueTerm::Fix { body, .. } => out.push(std::mem::replace(&mut **body, ValueTerm::Int(0))),
                _ => {}
            }
        }
        let mut stack = Vec::new();
        detach(self, &mut stack);
        while let Some(mut t) = stack.pop() {
            detach(&mut t, &mut stack);
        }
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        let mut stack = vec![(self, other)];
        while let Some((a, b)) = stack.pop() {
            match (a, b) {
                (Expr::Int(x), Expr::Int(y)) if x == y => {}
                (Expr::Shared(x), Expr::Shared(y)) | (Expr::Rec(x), Expr::Rec(y)) | (Expr::Const(x), Expr::Const(y))
                    if x == y => {}
                (Expr::Tuple(xs), Expr::Tuple(ys)) if xs.len() == ys.len() => stack.extend(xs.iter().zip(ys)),
                (Expr::Apply(f, x), Expr::Apply(g, y)) if f == g => stack.push((x, y)),
                (
                    Expr::Let { binders: bx, bound: ex, body: wx },
                    Expr::Let { binders: by, bound: ey, body: wy },
                ) if bx == by => {
                    stack.push((ex, ey));
                    stack.push((wx, wy));
                }
                (Expr::Fix { binders: bx, body: x }, Expr::Fix { binders: by, body: y }) if bx == by => {
                    stack.push((x, y))
                }
                _ => return false,
            }
        }
        true
    }
}

impl Eq for Expr {}

impl PartialEq for ValueTerm {
    fn eq(&self, other: &Self) -> bool {
        let mut stack = vec![(self, other)];
        while let Some((a, b)) = stack.pop() {
            match (a, b) {
                (ValueTerm::Int(x), ValueTerm::Int(y)) if x == y => {}
                (ValueTerm::Shared(x), ValueTerm::Shared(y)) | (ValueTerm::Rec(x), ValueTerm::Rec(y)) if x == y => {}
                (ValueTerm::Block { mark: m, fields: xs }, ValueTerm::Block { mark: n, fields: ys })
                    if m == n && xs.len() == ys.len() =>
                {
                    stack.extend(xs.iter().zip(ys))
                }
                (
                    ValueTerm::Let { binders: bx, bound: ex, body: wx },
                    ValueTerm::Let { binders: by, bound: ey, body: wy },
                ) if bx == by => {
                    stack.push((ex, ey));
                    stack.push((wx, wy));
                }
                (ValueTerm::Fix { binders: bx, body: x }, ValueTerm::Fix { binders: by, body: y }) if bx == by => {
                    stack.push((x, y))
                }
                _ => return false,
            }
        }
        true
    }
}

impl Eq for ValueTerm {}

/// One step from a term to one of its children.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PathStep {
    /// i-th component of a tuple block.
    Field(usize),
    /// Argument of a unary constructor.
    Payload,
    /// Bound expression of a `let`.
    Bound,
    /// Body of a `let` or `fix`.
    Body,
}

/// Position inside a term, from the root.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TermPath(pub Vec<PathStep>);

impl fmt::Display for TermPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("/");
        }
        for step in &self.0 {
            match step {
                PathStep::Field(i) => write!(f, "/{i}")?,
                PathStep::Payload => f.write_str("/payload")?,
                PathStep::Bound => f.write_str("/bound")?,
                PathStep::Body => f.write_str("/body")?,
            }
        }
        Ok(())
    }
}

/// Parent-pointer store for paths, so traversals can tag millions of
/// positions without copying path prefixes.
#[derive(Default)]
pub(crate) struct PathArena {
    nodes: Vec<(u32, PathStep)>,
}

impl PathArena {
    pub const ROOT: u32 = u32::MAX;

    pub fn child(&mut self, parent: u32, step: PathStep) -> u32 {
        self.nodes.push((parent, step));
        (self.nodes.len() - 1) as u32
    }

    pub fn resolve(&self, mut id: u32) -> TermPath {
        let mut steps = Vec::new();
        while id != Self::ROOT {
            let (parent, step) = self.nodes[id as usize];
            steps.push(step);
            id = parent;
        }
        steps.reverse();
        TermPath(steps)
    }
}

/// Free pointers of a term.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FreeVars {
    pub shared: HashSet<Name>,
    pub recursive: HashSet<Name>,
}

impl FreeVars {
    pub fn is_empty(&self) -> bool {
        self.shared.is_empty() && self.recursive.is_empty()
    }

    pub fn contains(&self, var: &Var) -> bool {
        match var.kind {
            VarKind::Shared => self.shared.contains(&var.name),
            VarKind::Recursive => self.recursive.contains(&var.name),
        }
    }
}

enum Walk<'a, T> {
    Visit(&'a T),
    Unbind(VarKind, &'a [Name]),
}

pub(crate) fn free_vars_of<T: Term>(t: &T) -> FreeVars {
    let mut out = FreeVars::default();
    let mut scope: HashMap<(VarKind, &Name), usize> = HashMap::new();
    let mut stack = vec![Walk::Visit(t)];
    while let Some(item) = stack.pop() {
        match item {
            Walk::Unbind(kind, binders) => {
                for b in binders {
                    let count = scope.get_mut(&(kind, b)).expect("bound");
                    *count -= 1;
                    if *count == 0 {
                        scope.remove(&(kind, b));
                    }
                }
            }
            Walk::Visit(t) => match t.view() {
                View::Leaf => {}
                View::Var(kind, name) => {
                    if !scope.contains_key(&(kind, name)) {
                        match kind {
                            VarKind::Shared => out.shared.insert(name.clone()),
                            VarKind::Recursive => out.recursive.insert(name.clone()),
                        };
                    }
                }
                View::Children(cs) => stack.extend(cs.iter().rev().map(Walk::Visit)),
                View::Child(c) => stack.push(Walk::Visit(c)),
                View::Let { binders, bound, body } => {
                    stack.push(Walk::Visit(bound));
                    stack.push(Walk::Unbind(VarKind::Shared, binders));
                    stack.push(Walk::Visit(body));
                    for b in binders {
                        *scope.entry((VarKind::Shared, b)).or_default() += 1;
                    }
                }
                View::Fix { binders, body } => {
                    stack.push(Walk::Unbind(VarKind::Recursive, binders));
                    stack.push(Walk::Visit(body));
                    for b in binders {
                        *scope.entry((VarKind::Recursive, b)).or_default() += 1;
                    }
                }
            },
        }
    }
    out
}

impl Expr {
    pub fn free_vars(&self) -> FreeVars {
        free_vars_of(self)
    }
}

impl ValueTerm {
    pub fn free_vars(&self) -> FreeVars {
        free_vars_of(self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum WfErrorKind {
    #[error("binder `{0}` is never used in its scope")]
    UselessBinder(Name),
    #[error("binder `{0}` is bound more than once")]
    DuplicateBinder(Name),
    #[error("variable `{0}` is not bound")]
    UnboundVariable(Name),
    #[error("binder list is empty")]
    EmptyBinders,
    #[error("tuple needs at least two components")]
    BadTupleArity,
    #[error("block with mark {mark} cannot have {arity} field(s)")]
    BadBlockArity { mark: u32, arity: usize },
    #[error("unknown constructor `{0}`")]
    UnknownConstructor(Name),
    #[error("constructor `{0}` used with the wrong number of arguments")]
    ConstructorKind(Name),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("at {path}: {kind}")]
pub struct WfError {
    pub kind: WfErrorKind,
    pub path: TermPath,
}

trait LocalCheck {
    fn local_check(&self, defs: Option<&TypeDefs>) -> Result<(), WfErrorKind>;
}

impl LocalCheck for Expr {
    fn local_check(&self, defs: Option<&TypeDefs>) -> Result<(), WfErrorKind> {
        let expect_ctor = |c: &Name, kind: CtorKind| match defs {
            None => Ok(()),
            Some(defs) => match defs.constructor(c) {
                None => Err(WfErrorKind::UnknownConstructor(c.clone())),
                Some(info) if info.kind != kind => Err(WfErrorKind::ConstructorKind(c.clone())),
                Some(_) => Ok(()),
            },
        };
        match self {
            Expr::Tuple(es) if es.len() < 2 => Err(WfErrorKind::BadTupleArity),
            Expr::Const(c) => expect_ctor(c, CtorKind::Constant),
            Expr::Apply(f, _) => expect_ctor(f, CtorKind::Unary),
            _ => Ok(()),
        }
    }
}

impl LocalCheck for ValueTerm {
    fn local_check(&self, _: Option<&TypeDefs>) -> Result<(), WfErrorKind> {
        match self {
            ValueTerm::Block { mark, fields } => {
                let ok = if *mark == 0 { fields.len() >= 2 } else { fields.len() == 1 };
                if ok {
                    Ok(())
                } else {
                    Err(WfErrorKind::BadBlockArity { mark: *mark, arity: fields.len() })
                }
            }
            _ => Ok(()),
        }
    }
}

fn step_for<T: Term>(parent: &T, index: usize) -> PathStep {
    match parent.view() {
        View::Child(_) => PathStep::Payload,
        _ => PathStep::Field(index),
    }
}

fn well_formed_impl<T: Term + LocalCheck>(t: &T, defs: Option<&TypeDefs>, closed: bool) -> Result<(), WfError> {
    enum Task<'a, T> {
        Visit(&'a T, u32),
        Close(VarKind, &'a [Name], u32),
    }
    let mut arena = PathArena::default();
    let mut seen: HashSet<&Name> = HashSet::new();
    // binder -> used
    let mut scope: HashMap<(VarKind, &Name), bool> = HashMap::new();
    let mut stack = vec![Task::Visit(t, PathArena::ROOT)];
    let fail = |kind, path: u32, arena: &PathArena| Err(WfError { kind, path: arena.resolve(path) });

    while let Some(task) = stack.pop() {
        match task {
            Task::Close(kind, binders, path) => {
                for b in binders {
                    if scope.remove(&(kind, b)) != Some(true) {
                        return fail(WfErrorKind::UselessBinder(b.clone()), path, &arena);
                    }
                }
            }
            Task::Visit(node, path) => {
                if let Err(kind) = node.local_check(defs) {
                    return fail(kind, path, &arena);
                }
                match node.view() {
                    View::Leaf => {}
                    View::Var(kind, name) => match scope.get_mut(&(kind, name)) {
                        Some(used) => *used = true,
                        None if closed => return fail(WfErrorKind::UnboundVariable(name.clone()), path, &arena),
                        None => {}
                    },
                    View::Children(cs) => {
                        for (i, c) in cs.iter().enumerate().rev() {
                            let p = arena.child(path, step_for(node, i));
                            stack.push(Task::Visit(c, p));
                        }
                    }
                    View::Child(c) => {
                        let p = arena.child(path, PathStep::Payload);
                        stack.push(Task::Visit(c, p));
                    }
                    View::Let { binders, bound, body } => {
                        if binders.is_empty() {
                            return fail(WfErrorKind::EmptyBinders, path, &arena);
                        }
                        for b in binders {
                            if !seen.insert(b) {
                                return fail(WfErrorKind::DuplicateBinder(b.clone()), path, &arena);
                            }
                            scope.insert((VarKind::Shared, b), false);
                        }
                        let pb = arena.child(path, PathStep::Bound);
                        stack.push(Task::Visit(bound, pb));
                        stack.push(Task::Close(VarKind::Shared, binders, path));
                        let pw = arena.child(path, PathStep::Body);
                        stack.push(Task::Visit(body, pw));
                    }
                    View::Fix { binders, body } => {
                        if binders.is_empty() {
                            return fail(WfErrorKind::EmptyBinders, path, &arena);
                        }
                        for b in binders {
                            if !seen.insert(b) {
                                return fail(WfErrorKind::DuplicateBinder(b.clone()), path, &arena);
                            }
                            scope.insert((VarKind::Recursive, b), false);
                        }
                        stack.push(Task::Close(VarKind::Recursive, binders, path));
                        let pw = arena.child(path, PathStep::Body);
                        stack.push(Task::Visit(body, pw));
                    }
                }
            }
        }
    }
    Ok(())
}

impl Expr {
    /// Checks usefulness of binders, global binder distinctness, tuple
    /// arities, constructor resolution against `defs`, and (when `closed`)
    /// the absence of free variables.
    pub fn well_formed(&self, defs: &TypeDefs, closed: bool) -> Result<(), WfError> {
        well_formed_impl(self, Some(defs), closed)
    }
}

impl ValueTerm {
    /// Same checks as [`Expr::well_formed`], with block mark/arity discipline
    /// in place of constructor resolution.
    pub fn well_formed(&self, closed: bool) -> Result<(), WfError> {
        well_formed_impl(self, None, closed)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error("unknown constructor `{0}`")]
    UnknownConstructor(Name),
    #[error("constructor `{0}` used with the wrong number of arguments")]
    ConstructorKind(Name),
}

/// Erases constructor names to their ranks: `C_i` becomes the integer `i`,
/// `F_i(e)` becomes `Block(i, e)`, tuples become mark-0 blocks.
pub fn translate(e: &Expr, defs: &TypeDefs) -> Result<ValueTerm, TranslateError> {
    enum Task<'a> {
        Visit(&'a Expr),
        Tuple(usize),
        Apply(u32),
        Let(&'a [Name]),
        Fix(&'a [Name]),
    }
    let rank = |c: &Name, kind: CtorKind| -> Result<usize, TranslateError> {
        let info = defs.constructor(c).ok_or_else(|| TranslateError::UnknownConstructor(c.clone()))?;
        if info.kind != kind {
            return Err(TranslateError::ConstructorKind(c.clone()));
        }
        Ok(info.rank)
    };
    let mut out: Vec<ValueTerm> = Vec::new();
    let mut stack = vec![Task::Visit(e)];
    while let Some(task) = stack.pop() {
        match task {
            Task::Visit(e) => match e {
                Expr::Int(n) => out.push(ValueTerm::Int(*n)),
                Expr::Shared(p) => out.push(ValueTerm::Shared(p.clone())),
                Expr::Rec(r) => out.push(ValueTerm::Rec(r.clone())),
                Expr::Const(c) => out.push(ValueTerm::Int(rank(c, CtorKind::Constant)? as i64)),
                Expr::Tuple(es) => {
                    stack.push(Task::Tuple(es.len()));
                    stack.extend(es.iter().rev().map(Task::Visit));
                }
                Expr::Apply(f, arg) => {
                    stack.push(Task::Apply(rank(f, CtorKind::Unary)? as u32));
                    stack.push(Task::Visit(arg));
                }
                Expr::Let { binders, bound, body } => {
                    stack.push(Task::Let(binders));
                    stack.push(Task::Visit(body));
                    stack.push(Task::Visit(bound));
                }
                Expr::Fix { binders, body } => {
                    stack.push(Task::Fix(binders));
                    stack.push(Task::Visit(body));
                }
            },
            Task::Tuple(n) => {
                let fields = out.split_off(out.len() - n);
                out.push(ValueTerm::Block { mark: 0, fields });
            }
            Task::Apply(mark) => {
                let arg = out.pop().expect("argument");
                out.push(ValueTerm::Block { mark, fields: vec![arg] });
            }
            Task::Let(binders) => {
                let body = out.pop().expect("body");
                let bound = out.pop().expect("bound");
                out.push(ValueTerm::Let { binders: binders.to_vec(), bound: Box::new(bound), body: Box::new(body) });
            }
            Task::Fix(binders) => {
                let body = out.pop().expect("body");
                out.push(ValueTerm::Fix { binders: binders.to_vec(), body: Box::new(body) });
            }
        }
    }
    Ok(out.pop().expect("translated term"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defs::fixtures::prelude;

    fn b0(fields: Vec<ValueTerm>) -> ValueTerm {
        ValueTerm::block(0, fields)
    }

    #[test]
    fn free_vars_examples() {
        let pp = b0(vec![ValueTerm::shared("p"), ValueTerm::shared("p")]);
        let closed = ValueTerm::let_in(&["p"], ValueTerm::Int(1), pp.clone());
        assert!(closed.free_vars().is_empty());
        let fv = pp.free_vars();
        assert_eq!(fv.shared.len(), 1);
        assert!(fv.contains(&Var::shared("p")));
        let nest = ValueTerm::fix(&["r"], ValueTerm::block(1, vec![ValueTerm::rec("r")]));
        assert!(nest.free_vars().is_empty());
    }

    #[test]
    fn let_binders_do_not_scope_over_bound() {
        let t = ValueTerm::let_in(&["p"], ValueTerm::shared("p"), ValueTerm::shared("p"));
        assert!(t.free_vars().contains(&Var::shared("p")));
    }

    #[test]
    fn translate_examples() {
        let defs = prelude();
        assert_eq!(translate(&Expr::constant("Nil"), &defs).unwrap(), ValueTerm::Int(1));
        let nn = Expr::Tuple(vec![Expr::constant("Nil"), Expr::constant("Nil")]);
        assert_eq!(translate(&nn, &defs).unwrap(), b0(vec![ValueTerm::Int(1), ValueTerm::Int(1)]));
        let cons = Expr::apply("Cons", Expr::Tuple(vec![Expr::int(5), Expr::constant("Nil")]));
        assert_eq!(
            translate(&cons, &defs).unwrap(),
            ValueTerm::block(1, vec![b0(vec![ValueTerm::Int(5), ValueTerm::Int(1)])])
        );
        assert_eq!(
            translate(&Expr::constant("Nope"), &defs),
            Err(TranslateError::UnknownConstructor("Nope".into()))
        );
    }

    #[test]
    fn well_formed_examples() {
        let useless = ValueTerm::let_in(&["p"], ValueTerm::Int(1), b0(vec![ValueTerm::Int(2), ValueTerm::Int(3)]));
        assert_eq!(useless.well_formed(true).unwrap_err().kind, WfErrorKind::UselessBinder("p".into()));

        let nest = ValueTerm::fix(&["r"], ValueTerm::block(1, vec![ValueTerm::rec("r")]));
        assert!(nest.well_formed(true).is_ok());

        let bad = b0(vec![ValueTerm::Int(1)]);
        assert!(matches!(bad.well_formed(true).unwrap_err().kind, WfErrorKind::BadBlockArity { mark: 0, arity: 1 }));
    }

    #[test]
    fn well_formed_reports_paths_and_duplicates() {
        let inner = ValueTerm::block(2, vec![ValueTerm::Int(1), ValueTerm::Int(2)]);
        let t = b0(vec![ValueTerm::Int(0), ValueTerm::block(1, vec![inner])]);
        let err = t.well_formed(true).unwrap_err();
        assert_eq!(err.path.to_string(), "/1/0");

        let dup = ValueTerm::let_in(
            &["p"],
            ValueTerm::Int(1),
            ValueTerm::let_in(&["p"], ValueTerm::Int(2), b0(vec![ValueTerm::shared("p"), ValueTerm::shared("p")])),
        );
        assert_eq!(dup.well_formed(true).unwrap_err().kind, WfErrorKind::DuplicateBinder("p".into()));

        let open = ValueTerm::shared("q");
        assert!(open.well_formed(false).is_ok());
        assert_eq!(open.well_formed(true).unwrap_err().kind, WfErrorKind::UnboundVariable("q".into()));
    }

    #[test]
    fn expr_well_formed_resolves_constructors() {
        let defs = prelude();
        let bad = Expr::apply("Nil", Expr::int(1));
        assert_eq!(bad.well_formed(&defs, true).unwrap_err().kind, WfErrorKind::ConstructorKind("Nil".into()));
        let ok = Expr::fix(&["r"], Expr::apply("B", Expr::rec("r")));
        assert!(ok.well_formed(&defs, true).is_ok());
    }

    #[test]
    fn deep_terms_do_not_overflow() {
        let mut t = ValueTerm::Int(1);
        for i in 0..1_000_000 {
            t = ValueTerm::block(1, vec![b0(vec![ValueTerm::Int(i), t])]);
        }
        assert_eq!(t.block_count(), 2_000_000);
        assert!(t.well_formed(true).is_ok());
        let copy_free = t.free_vars();
        assert!(copy_free.is_empty());
        assert!(t == t);
    }
}
