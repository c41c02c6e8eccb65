//! Type-directed verification of value terms.
//!
//! `check` walks a [`ValueTerm`] and a [`GroundType`] in parallel. Integers
//! and blocks are matched against the expanded declaration of the goal;
//! sharing variables accumulate the anti-unification of every constraint
//! they meet before their bound value is visited; recursion variables must
//! see an instance of the type their cycle was entered with. On success the
//! walk also rebuilds the source [`Expr`] the value represents.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::defs::{DefsError, TypeDefs};
use crate::types::{anti_unify, closed_le, env_le, univ, EnvType, GroundType, Name, TypeScheme, Var, VarKind};
use crate::value::{Expr, PathArena, PathStep, TermPath, ValueTerm};

/// Ordered mapping from pointers to their current type.
#[derive(Clone, Debug, Default)]
pub struct CheckEnv {
    entries: Vec<(Var, EnvType)>,
    index: HashMap<Var, usize>,
}

impl PartialEq for CheckEnv {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl CheckEnv {
    pub fn new() -> Self {
        CheckEnv::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, var: &Var) -> Option<&EnvType> {
        self.index.get(var).map(|&i| &self.entries[i].1)
    }

    pub fn contains(&self, var: &Var) -> bool {
        self.index.contains_key(var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &EnvType)> {
        self.entries.iter().map(|(v, t)| (v, t))
    }

    pub fn domain(&self) -> impl Iterator<Item = &Var> {
        self.entries.iter().map(|(v, _)| v)
    }

    /// `env ⊕ {var : ty}`. Fails if `var` is already bound.
    pub fn bind(&mut self, var: Var, ty: EnvType) -> Result<(), Var> {
        if self.index.contains_key(&var) {
            return Err(var);
        }
        self.index.insert(var.clone(), self.entries.len());
        self.entries.push((var, ty));
        Ok(())
    }

    pub fn extend(&self, var: Var, ty: EnvType) -> Result<CheckEnv, Var> {
        let mut out = self.clone();
        out.bind(var, ty)?;
        Ok(out)
    }

    /// `env ⊗ {p : goal}`: anti-unifies the entry of a sharing variable with
    /// a new constraint. Returns `false` if `p` is not a bound sharing variable.
    pub fn merge_shared(&mut self, p: &Var, goal: &GroundType) -> bool {
        if p.kind != VarKind::Shared {
            return false;
        }
        match self.index.get(p) {
            Some(&i) => {
                let entry = &mut self.entries[i].1;
                // Mutable constructors would need a strict variant here that
                // fails instead of generalizing differing arguments.
                *entry = EnvType::Ground(anti_unify(entry, goal));
                true
            }
            None => false,
        }
    }

    /// Restriction `env \ vars`, preserving the order of the other entries.
    pub fn without(&self, vars: &[Var]) -> CheckEnv {
        let mut out = CheckEnv::new();
        for (v, t) in &self.entries {
            if !vars.contains(v) {
                out.bind(v.clone(), t.clone()).expect("entries are distinct");
            }
        }
        out
    }

    fn truncate(&mut self, len: usize) {
        for (v, _) in self.entries.drain(len..) {
            self.index.remove(&v);
        }
    }

    /// `self ⪯ other`: same domain in the same order, sharing entries ordered
    /// by `⪯` (with `Bottom` least), recursion entries equal.
    pub fn le(&self, other: &CheckEnv) -> bool {
        self.entries.len() == other.entries.len()
            && self.entries.iter().zip(&other.entries).all(|((v, a), (w, b))| {
                v == w
                    && match v.kind {
                        VarKind::Shared => env_le(a, b),
                        VarKind::Recursive => a == b,
                    }
            })
    }
}

/// Which rule rejected the value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FailureReason {
    /// A non-variable value was checked against `Top`, the empty type.
    TopConstraintOnValue,
    /// An integer is not the rank of a constant constructor of the goal type.
    ConstantOutOfRange,
    /// A block mark is not the rank of a unary constructor of the goal type.
    UnaryMarkOutOfRange,
    TupleArityMismatch,
    /// A recursion variable meets a constraint that is not an instance of
    /// its cycle's type.
    RecursiveInstanceMismatch,
    /// Any other combination of goal and value.
    ShapeMismatch,
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("at value path {path}: {reason} (expected {goal})")]
pub struct CheckFailure {
    pub reason: FailureReason,
    pub path: TermPath,
    pub goal: GroundType,
}

/// Precondition violations: the inputs were not a well-formed value under
/// the given environment and declarations.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum UsageError {
    #[error("at value path {1}: variable `{0}` is not bound")]
    UnboundVariable(Var, TermPath),
    #[error("at value path {1}: `{0}` is already bound")]
    DuplicateBinder(Var, TermPath),
    #[error("at value path {1}: binder `{0}` is never used")]
    UselessBinder(Var, TermPath),
    #[error("at value path {1}: empty binder list")]
    EmptyBinders((), TermPath),
    #[error(transparent)]
    Defs(#[from] DefsError),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error(transparent)]
    Failure(#[from] CheckFailure),
    #[error(transparent)]
    Usage(#[from] UsageError),
}

impl CheckError {
    pub fn failure(&self) -> Option<&CheckFailure> {
        match self {
            CheckError::Failure(f) => Some(f),
            CheckError::Usage(_) => None,
        }
    }
}

/// Work counters for one `check` run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CheckStats {
    /// Number of `Block` nodes the walk examined.
    pub block_visits: u64,
    /// Number of value nodes of any kind the walk examined.
    pub node_visits: u64,
}

enum Task<'v> {
    Check { goal: GroundType, value: &'v ValueTerm, path: u32 },
    Tuple(usize),
    Apply(Name),
    LetBound { binders: &'v [Name], bound: &'v ValueTerm, path: u32, base: usize },
    LetDone(&'v [Name]),
    FixDone { binders: &'v [Name], base: usize },
}

/// Checks `value` against `goal` under `env`, returning the rebuilt
/// expression and the updated environment.
pub fn check(
    defs: &TypeDefs,
    env: CheckEnv,
    goal: &GroundType,
    value: &ValueTerm,
) -> Result<(Expr, CheckEnv), CheckError> {
    check_with_stats(defs, env, goal, value).0
}

/// [`check`], also reporting how much of the value was visited.
pub fn check_with_stats(
    defs: &TypeDefs,
    mut env: CheckEnv,
    goal: &GroundType,
    value: &ValueTerm,
) -> (Result<(Expr, CheckEnv), CheckError>, CheckStats) {
    let mut stats = CheckStats::default();
    let result = run(defs, &mut env, goal, value, &mut stats).map(|e| (e, env));
    (result, stats)
}

fn run(
    defs: &TypeDefs,
    env: &mut CheckEnv,
    goal: &GroundType,
    value: &ValueTerm,
    stats: &mut CheckStats,
) -> Result<Expr, CheckError> {
    let mut arena = PathArena::default();
    let mut out: Vec<Expr> = Vec::new();
    let mut stack = vec![Task::Check { goal: goal.clone(), value, path: PathArena::ROOT }];

    let fail = |reason, goal: GroundType, path, arena: &PathArena| -> CheckError {
        CheckFailure { reason, path: arena.resolve(path), goal }.into()
    };

    while let Some(task) = stack.pop() {
        match task {
            Task::Check { goal, value, path } => {
                stats.node_visits += 1;
                match (&goal, value) {
                    (_, ValueTerm::Shared(p)) => {
                        let var = Var { kind: VarKind::Shared, name: p.clone() };
                        if !env.merge_shared(&var, &goal) {
                            return Err(UsageError::UnboundVariable(var, arena.resolve(path)).into());
                        }
                        out.push(Expr::Shared(p.clone()));
                    }
                    (_, ValueTerm::Rec(r)) => {
                        let var = Var { kind: VarKind::Recursive, name: r.clone() };
                        match env.get(&var) {
                            Some(EnvType::Ground(cycle)) => {
                                if !closed_le(&goal, cycle) {
                                    return Err(fail(FailureReason::RecursiveInstanceMismatch, goal, path, &arena));
                                }
                            }
                            _ => return Err(UsageError::UnboundVariable(var, arena.resolve(path)).into()),
                        }
                        out.push(Expr::Rec(r.clone()));
                    }
                    (_, ValueTerm::Let { binders, bound, body }) => {
                        if binders.is_empty() {
                            return Err(UsageError::EmptyBinders((), arena.resolve(path)).into());
                        }
                        let base = env.len();
                        for p in binders {
                            let var = Var { kind: VarKind::Shared, name: p.clone() };
                            if let Err(v) = env.bind(var, EnvType::Bottom) {
                                return Err(UsageError::DuplicateBinder(v, arena.resolve(path)).into());
                            }
                        }
                        stack.push(Task::LetBound { binders, bound, path, base });
                        let body_path = arena.child(path, PathStep::Body);
                        stack.push(Task::Check { goal, value: body, path: body_path });
                    }
                    (_, ValueTerm::Fix { binders, body }) => {
                        let n = binders.len();
                        if n == 0 {
                            return Err(UsageError::EmptyBinders((), arena.resolve(path)).into());
                        }
                        let components: Vec<GroundType> = if n == 1 {
                            vec![goal.clone()]
                        } else {
                            match &goal {
                                GroundType::Tuple(cs) if cs.len() == n => cs.clone(),
                                GroundType::Tuple(_) => {
                                    return Err(fail(FailureReason::TupleArityMismatch, goal, path, &arena))
                                }
                                GroundType::Top => {
                                    return Err(fail(FailureReason::TopConstraintOnValue, goal, path, &arena))
                                }
                                _ => return Err(fail(FailureReason::ShapeMismatch, goal, path, &arena)),
                            }
                        };
                        let base = env.len();
                        for (r, ty) in binders.iter().zip(components) {
                            let var = Var { kind: VarKind::Recursive, name: r.clone() };
                            if let Err(v) = env.bind(var, EnvType::Ground(ty)) {
                                return Err(UsageError::DuplicateBinder(v, arena.resolve(path)).into());
                            }
                        }
                        stack.push(Task::FixDone { binders, base });
                        let body_path = arena.child(path, PathStep::Body);
                        stack.push(Task::Check { goal, value: body, path: body_path });
                    }
                    (GroundType::Top, _) => {
                        return Err(fail(FailureReason::TopConstraintOnValue, goal, path, &arena));
                    }
                    (GroundType::Int, ValueTerm::Int(i)) => out.push(Expr::Int(*i)),
                    (GroundType::Con(t, _), ValueTerm::Int(i)) => {
                        let decl = defs.get(t).ok_or_else(|| UsageError::Defs(DefsError::UnknownType(t.clone())))?;
                        match usize::try_from(*i) {
                            Ok(rank) if rank >= 1 && rank <= decl.constants.len() => {
                                out.push(Expr::Const(decl.constants[rank - 1].clone()))
                            }
                            _ => return Err(fail(FailureReason::ConstantOutOfRange, goal, path, &arena)),
                        }
                    }
                    (GroundType::Con(t, args), ValueTerm::Block { mark, fields }) => {
                        stats.block_visits += 1;
                        let payload = defs.unary_payload(t, args, *mark as usize).map_err(UsageError::from)?;
                        match payload {
                            Some((f, payload)) if fields.len() == 1 => {
                                stack.push(Task::Apply(f.clone()));
                                let p = arena.child(path, PathStep::Payload);
                                stack.push(Task::Check { goal: payload, value: &fields[0], path: p });
                            }
                            Some(_) => return Err(fail(FailureReason::ShapeMismatch, goal, path, &arena)),
                            None => return Err(fail(FailureReason::UnaryMarkOutOfRange, goal, path, &arena)),
                        }
                    }
                    (GroundType::Tuple(cs), ValueTerm::Block { mark: 0, fields }) => {
                        stats.block_visits += 1;
                        if cs.len() != fields.len() {
                            return Err(fail(FailureReason::TupleArityMismatch, goal, path, &arena));
                        }
                        stack.push(Task::Tuple(fields.len()));
                        for (i, (c, f)) in cs.iter().zip(fields).enumerate().rev() {
                            let p = arena.child(path, PathStep::Field(i));
                            stack.push(Task::Check { goal: c.clone(), value: f, path: p });
                        }
                    }
                    (_, ValueTerm::Block { .. }) => {
                        stats.block_visits += 1;
                        return Err(fail(FailureReason::ShapeMismatch, goal, path, &arena));
                    }
                    (_, ValueTerm::Int(_)) => {
                        return Err(fail(FailureReason::ShapeMismatch, goal, path, &arena));
                    }
                }
            }
            Task::Tuple(n) => {
                let es = out.split_off(out.len() - n);
                out.push(Expr::Tuple(es));
            }
            Task::Apply(f) => {
                let e = out.pop().expect("payload");
                out.push(Expr::Apply(f, Box::new(e)));
            }
            Task::LetBound { binders, bound, path, base } => {
                let mut components = Vec::with_capacity(binders.len());
                for (p, (var, ty)) in binders.iter().zip(&env.entries[base..]) {
                    debug_assert_eq!(&var.name, p);
                    match ty {
                        EnvType::Ground(g) => components.push(g.clone()),
                        EnvType::Bottom => {
                            return Err(UsageError::UselessBinder(var.clone(), arena.resolve(path)).into());
                        }
                    }
                }
                env.truncate(base);
                stack.push(Task::LetDone(binders));
                let bound_path = arena.child(path, PathStep::Bound);
                stack.push(Task::Check { goal: GroundType::product(components), value: bound, path: bound_path });
            }
            Task::LetDone(binders) => {
                let bound = out.pop().expect("bound");
                let body = out.pop().expect("body");
                out.push(Expr::Let { binders: binders.to_vec(), bound: Box::new(bound), body: Box::new(body) });
            }
            Task::FixDone { binders, base } => {
                env.truncate(base);
                let body = out.pop().expect("body");
                out.push(Expr::Fix { binders: binders.to_vec(), body: Box::new(body) });
            }
        }
    }
    Ok(out.pop().expect("checked expression"))
}

/// Entry point for a closed value: checks it against `univ(scheme)` in the
/// empty environment and hands the value back on success.
pub fn check_root(defs: &TypeDefs, scheme: &TypeScheme, value: ValueTerm) -> Result<ValueTerm, CheckError> {
    let goal = univ(scheme);
    defs.check_ground(&goal).map_err(UsageError::from)?;
    check(defs, CheckEnv::new(), &goal, &value)?;
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defs::fixtures::prelude;
    use crate::types::TypeExpr;
    use crate::value::translate;

    fn list(t: GroundType) -> GroundType {
        GroundType::con("List", vec![t])
    }

    fn bool_t() -> GroundType {
        GroundType::con("Bool", vec![])
    }

    fn b(mark: u32, fields: Vec<ValueTerm>) -> ValueTerm {
        ValueTerm::block(mark, fields)
    }

    fn reason(r: Result<(Expr, CheckEnv), CheckError>) -> FailureReason {
        r.unwrap_err().failure().expect("check failure").reason
    }

    #[test]
    fn integer_at_int() {
        let (e, env) = check(&prelude(), CheckEnv::new(), &GroundType::Int, &ValueTerm::Int(42)).unwrap();
        assert_eq!(e, Expr::Int(42));
        assert!(env.is_empty());
    }

    #[test]
    fn pair_of_empty_lists() {
        let goal = GroundType::Tuple(vec![list(GroundType::Top), list(GroundType::Top)]);
        let v = b(0, vec![ValueTerm::Int(1), ValueTerm::Int(1)]);
        let (e, env) = check(&prelude(), CheckEnv::new(), &goal, &v).unwrap();
        assert_eq!(e, Expr::Tuple(vec![Expr::constant("Nil"), Expr::constant("Nil")]));
        assert!(env.is_empty());
    }

    #[test]
    fn nest_cycle_is_rejected() {
        let v = ValueTerm::fix(&["r"], b(1, vec![ValueTerm::rec("r")]));
        let goal = GroundType::con("Nest", vec![GroundType::Int]);
        let err = check(&prelude(), CheckEnv::new(), &goal, &v).unwrap_err();
        let failure = err.failure().unwrap();
        assert_eq!(failure.reason, FailureReason::RecursiveInstanceMismatch);
        assert_eq!(failure.path.to_string(), "/body/payload");
        assert_eq!(failure.goal, GroundType::con("Nest", vec![GroundType::Tuple(vec![GroundType::Int; 2])]));
    }

    #[test]
    fn shared_cons_cell_generalizes_to_top() {
        let cons = b(1, vec![b(0, vec![ValueTerm::Int(1), ValueTerm::Int(1)])]);
        let v = ValueTerm::let_in(&["p"], cons, b(0, vec![ValueTerm::shared("p"), ValueTerm::shared("p")]));
        let goal = GroundType::Tuple(vec![list(GroundType::Int), list(bool_t())]);
        let err = check(&prelude(), CheckEnv::new(), &goal, &v).unwrap_err();
        let failure = err.failure().unwrap();
        assert_eq!(failure.reason, FailureReason::TopConstraintOnValue);
        assert_eq!(failure.path.to_string(), "/bound/payload/0");
    }

    #[test]
    fn shared_empty_list_is_accepted_at_two_types() {
        let v = ValueTerm::let_in(&["p"], ValueTerm::Int(1), b(0, vec![ValueTerm::shared("p"), ValueTerm::shared("p")]));
        let goal = GroundType::Tuple(vec![list(GroundType::Int), list(bool_t())]);
        let (e, _) = check(&prelude(), CheckEnv::new(), &goal, &v).unwrap();
        assert_eq!(translate(&e, &prelude()).unwrap(), v);
    }

    #[test]
    fn check_root_examples() {
        let defs = prelude();
        let tl = |t| TypeExpr::con("List", vec![t]);
        let scheme = TypeScheme::closed(TypeExpr::Tuple(vec![tl(TypeExpr::var("a")), tl(TypeExpr::var("a"))]));
        assert!(check_root(&defs, &scheme, b(0, vec![ValueTerm::Int(1), ValueTerm::Int(1)])).is_ok());
        assert!(check_root(&defs, &TypeScheme::mono(TypeExpr::Int), ValueTerm::Int(0)).is_ok());
        let err = check_root(&defs, &TypeScheme::closed(TypeExpr::var("a")), ValueTerm::Int(0)).unwrap_err();
        assert_eq!(err.failure().unwrap().reason, FailureReason::TopConstraintOnValue);
    }

    #[test]
    fn fall_through_reasons() {
        let defs = prelude();
        let env = CheckEnv::new;
        assert_eq!(reason(check(&defs, env(), &bool_t(), &ValueTerm::Int(3))), FailureReason::ConstantOutOfRange);
        assert_eq!(reason(check(&defs, env(), &bool_t(), &ValueTerm::Int(0))), FailureReason::ConstantOutOfRange);
        let cell = b(2, vec![ValueTerm::Int(1)]);
        assert_eq!(reason(check(&defs, env(), &list(GroundType::Int), &cell)), FailureReason::UnaryMarkOutOfRange);
        let triple = b(0, vec![ValueTerm::Int(1), ValueTerm::Int(1), ValueTerm::Int(1)]);
        let pair = GroundType::Tuple(vec![GroundType::Int, GroundType::Int]);
        assert_eq!(reason(check(&defs, env(), &pair, &triple)), FailureReason::TupleArityMismatch);
        assert_eq!(reason(check(&defs, env(), &GroundType::Int, &triple)), FailureReason::ShapeMismatch);
        assert_eq!(reason(check(&defs, env(), &pair, &ValueTerm::Int(1))), FailureReason::ShapeMismatch);
    }

    #[test]
    fn usage_errors_are_not_failures() {
        let defs = prelude();
        let err = check(&defs, CheckEnv::new(), &GroundType::Int, &ValueTerm::shared("p")).unwrap_err();
        assert!(matches!(err, CheckError::Usage(UsageError::UnboundVariable(..))));
        let useless = ValueTerm::let_in(&["p"], ValueTerm::Int(1), ValueTerm::Int(2));
        let err = check(&defs, CheckEnv::new(), &GroundType::Int, &useless).unwrap_err();
        assert!(matches!(err, CheckError::Usage(UsageError::UselessBinder(..))));
    }

    #[test]
    fn two_root_cycle_under_let() {
        // let (p, q) = fix (r, s) = (Cons((1, s)), Cons((2, r))) in (p, q)
        let defs = prelude();
        let cell = |n, tail| b(1, vec![b(0, vec![ValueTerm::Int(n), tail])]);
        let fix = ValueTerm::fix(&["r", "s"], b(0, vec![cell(1, ValueTerm::rec("s")), cell(2, ValueTerm::rec("r"))]));
        let v = ValueTerm::let_in(&["p", "q"], fix, b(0, vec![ValueTerm::shared("p"), ValueTerm::shared("q")]));
        let goal = GroundType::Tuple(vec![list(GroundType::Int), list(GroundType::Int)]);
        let (e, env) = check(&defs, CheckEnv::new(), &goal, &v).unwrap();
        assert!(env.is_empty());
        assert_eq!(translate(&e, &defs).unwrap(), v);

        // s is entered at List(Bool) but its occurrence inside r's cell needs List(Int)
        let goal = GroundType::Tuple(vec![list(GroundType::Int), list(bool_t())]);
        assert_eq!(reason(check(&defs, CheckEnv::new(), &goal, &v)), FailureReason::RecursiveInstanceMismatch);
    }

    #[test]
    fn output_environment_generalizes_input() {
        let defs = prelude();
        let mut env = CheckEnv::new();
        env.bind(Var::shared("p"), EnvType::Ground(list(GroundType::Int))).unwrap();
        let v = b(0, vec![ValueTerm::shared("p"), ValueTerm::Int(3)]);
        let goal = GroundType::Tuple(vec![list(bool_t()), GroundType::Int]);
        let (_, out) = check(&defs, env.clone(), &goal, &v).unwrap();
        assert!(env.le(&out));
        assert_eq!(out.get(&Var::shared("p")), Some(&EnvType::Ground(list(GroundType::Top))));
    }

    #[test]
    fn counts_block_visits() {
        let defs = prelude();
        let mut v = ValueTerm::Int(1);
        for i in 0..1000 {
            v = b(1, vec![b(0, vec![ValueTerm::Int(i), v])]);
        }
        let (r, stats) = check_with_stats(&defs, CheckEnv::new(), &list(GroundType::Int), &v);
        assert!(r.is_ok());
        assert_eq!(stats.block_visits, 2000);
    }
}
