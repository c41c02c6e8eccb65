//! Hindley-Milner inference over programs, with monomorphic `fix`, and a
//! checker for the polymorphic-recursion system driven by annotations.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::defs::{CtorKind, DefsError, TypeDefs};
use crate::types::{Name, TypeEnv, TypeExpr, TypeScheme, Var};
use crate::value::Expr;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum InferenceError {
    #[error("cannot build the infinite type {var} = {ty}")]
    Occurs { var: Name, ty: TypeExpr },
    #[error("cannot unify {0} with {1}")]
    Clash(TypeExpr, TypeExpr),
    #[error("unbound variable {0}")]
    Unbound(Var),
    #[error("fix binder `{0}` has no annotation")]
    MissingAnnotation(Name),
    #[error(transparent)]
    Defs(#[from] DefsError),
}

/// Schemes for `fix` binders, by binder name.
pub type FixAnnotation = HashMap<Name, TypeScheme>;

enum FixRule<'a> {
    Monomorphic,
    Annotated(&'a FixAnnotation),
}

/// Unification variables are named `'t0, 't1, ...`, which no parsed
/// identifier can collide with. Rigid variables become nullary
/// constructors whose names start with `!`.
struct Infer<'a> {
    defs: &'a TypeDefs,
    fix_rule: FixRule<'a>,
    subst: HashMap<Name, TypeExpr>,
    next: usize,
}

impl Infer<'_> {
    fn fresh(&mut self) -> TypeExpr {
        let t = TypeExpr::Var(format!("'t{}", self.next));
        self.next += 1;
        t
    }

    fn skolem(&mut self) -> TypeExpr {
        let t = TypeExpr::Con(format!("!s{}", self.next), vec![]);
        self.next += 1;
        t
    }

    fn resolve(&self, t: &TypeExpr) -> TypeExpr {
        match t {
            TypeExpr::Var(a) => match self.subst.get(a) {
                Some(u) => self.resolve(u),
                None => t.clone(),
            },
            TypeExpr::Int => TypeExpr::Int,
            TypeExpr::Tuple(ts) => TypeExpr::Tuple(ts.iter().map(|t| self.resolve(t)).collect()),
            TypeExpr::Con(c, ts) => TypeExpr::Con(c.clone(), ts.iter().map(|t| self.resolve(t)).collect()),
        }
    }

    fn unify(&mut self, a: &TypeExpr, b: &TypeExpr) -> Result<(), InferenceError> {
        let a = self.resolve(a);
        let b = self.resolve(b);
        match (&a, &b) {
            (TypeExpr::Var(x), TypeExpr::Var(y)) if x == y => Ok(()),
            (TypeExpr::Var(x), t) | (t, TypeExpr::Var(x)) => {
                if t.free_vars().contains(x) {
                    return Err(InferenceError::Occurs { var: x.clone(), ty: t.clone() });
                }
                self.subst.insert(x.clone(), t.clone());
                Ok(())
            }
            (TypeExpr::Int, TypeExpr::Int) => Ok(()),
            (TypeExpr::Tuple(xs), TypeExpr::Tuple(ys)) if xs.len() == ys.len() => {
                xs.iter().zip(ys).try_for_each(|(x, y)| self.unify(x, y))
            }
            (TypeExpr::Con(c, xs), TypeExpr::Con(d, ys)) if c == d && xs.len() == ys.len() => {
                xs.iter().zip(ys).try_for_each(|(x, y)| self.unify(x, y))
            }
            _ => Err(InferenceError::Clash(a, b)),
        }
    }

    fn instantiate(&mut self, s: &TypeScheme) -> TypeExpr {
        let mut theta = crate::types::Subst::new();
        for a in &s.vars {
            let v = self.fresh();
            theta.insert(a.clone(), v);
        }
        s.body.apply(&theta)
    }

    fn env_vars(&self, env: &TypeEnv) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        for (_, s) in env.iter() {
            for a in s.free_vars() {
                self.resolve(&TypeExpr::Var(a)).collect_vars(&mut out);
            }
        }
        out
    }

    fn generalize(&self, env: &TypeEnv, t: &TypeExpr) -> TypeScheme {
        let t = self.resolve(t);
        let env_fv = self.env_vars(env);
        let vars = t.free_vars().into_iter().filter(|a| !env_fv.contains(a)).collect();
        TypeScheme { vars, body: t }
    }

    fn infer(&mut self, env: &mut TypeEnv, e: &Expr) -> Result<TypeExpr, InferenceError> {
        match e {
            Expr::Int(_) => Ok(TypeExpr::Int),
            Expr::Shared(x) | Expr::Rec(x) => {
                let var = if matches!(e, Expr::Shared(_)) { Var::shared(x) } else { Var::recursive(x) };
                let s = env.get(&var).cloned().ok_or(InferenceError::Unbound(var))?;
                Ok(self.instantiate(&s))
            }
            Expr::Tuple(es) => {
                let ts = es.iter().map(|e| self.infer(env, e)).collect::<Result<_, _>>()?;
                Ok(TypeExpr::Tuple(ts))
            }
            Expr::Const(c) | Expr::Apply(c, _) => {
                let info = self.defs.constructor(c).ok_or_else(|| DefsError::UnknownConstructor(c.clone()))?;
                let want = if matches!(e, Expr::Const(_)) { CtorKind::Constant } else { CtorKind::Unary };
                if info.kind != want {
                    return Err(DefsError::UnknownConstructor(c.clone()).into());
                }
                let arity = self.defs.get(&info.type_name).map_or(0, |d| d.params.len());
                let args: Vec<TypeExpr> = (0..arity).map(|_| self.fresh()).collect();
                let result = TypeExpr::Con(info.type_name.clone(), args.clone());
                if let Expr::Apply(_, arg) = e {
                    let payload = self.defs.payload_type(c, &args)?;
                    let t = self.infer(env, arg)?;
                    self.unify(&t, &payload)?;
                }
                Ok(result)
            }
            Expr::Let { binders, bound, body } => {
                let t = self.infer(env, bound)?;
                let parts: Vec<TypeExpr> = if binders.len() == 1 {
                    vec![t]
                } else {
                    let parts: Vec<TypeExpr> = binders.iter().map(|_| self.fresh()).collect();
                    self.unify(&t, &TypeExpr::Tuple(parts.clone()))?;
                    parts
                };
                let schemes: Vec<TypeScheme> = parts.iter().map(|t| self.generalize(env, t)).collect();
                for (p, s) in binders.iter().zip(schemes) {
                    env.push(Var::shared(p), s);
                }
                let result = self.infer(env, body);
                for _ in binders {
                    env.pop();
                }
                result
            }
            Expr::Fix { binders, body } => match self.fix_rule {
                FixRule::Monomorphic => {
                    let parts: Vec<TypeExpr> = binders.iter().map(|_| self.fresh()).collect();
                    for (r, t) in binders.iter().zip(&parts) {
                        env.push(Var::recursive(r), TypeScheme::mono(t.clone()));
                    }
                    let t = self.infer(env, body);
                    for _ in binders {
                        env.pop();
                    }
                    let whole = TypeExpr::product(parts);
                    self.unify(&t?, &whole)?;
                    Ok(whole)
                }
                FixRule::Annotated(ann) => {
                    let schemes: Vec<TypeScheme> = binders
                        .iter()
                        .map(|r| ann.get(r).cloned().ok_or_else(|| InferenceError::MissingAnnotation(r.clone())))
                        .collect::<Result<_, _>>()?;
                    // the body must have the annotated types for arbitrary
                    // values of their quantified variables
                    let mut rigid_parts = Vec::new();
                    let mut skolems = BTreeSet::new();
                    for s in &schemes {
                        let mut theta = crate::types::Subst::new();
                        for a in &s.vars {
                            let k = self.skolem();
                            if let TypeExpr::Con(name, _) = &k {
                                skolems.insert(name.clone());
                            }
                            theta.insert(a.clone(), k);
                        }
                        rigid_parts.push(s.body.apply(&theta));
                    }
                    for (r, s) in binders.iter().zip(&schemes) {
                        env.push(Var::recursive(r), s.clone());
                    }
                    let t = self.infer(env, body);
                    for _ in binders {
                        env.pop();
                    }
                    self.unify(&t?, &TypeExpr::product(rigid_parts))?;
                    for (_, s) in env.iter() {
                        for a in s.free_vars() {
                            let escaped = self.resolve(&TypeExpr::Var(a.clone()));
                            if mentions_any(&escaped, &skolems) {
                                return Err(InferenceError::Clash(TypeExpr::Var(a), escaped));
                            }
                        }
                    }
                    let parts = schemes.iter().map(|s| self.instantiate(s)).collect();
                    Ok(TypeExpr::product(parts))
                }
            },
        }
    }
}

fn mentions_any(t: &TypeExpr, names: &BTreeSet<Name>) -> bool {
    match t {
        TypeExpr::Var(_) | TypeExpr::Int => false,
        TypeExpr::Tuple(ts) => ts.iter().any(|t| mentions_any(t, names)),
        TypeExpr::Con(c, ts) => names.contains(c) || ts.iter().any(|t| mentions_any(t, names)),
    }
}

/// Renames the quantified variables of `s` to `a0, a1, ...` in order of
/// first occurrence, skipping names that are free in `s`.
fn tidy(s: TypeScheme) -> TypeScheme {
    fn order(t: &TypeExpr, out: &mut Vec<Name>) {
        match t {
            TypeExpr::Var(a) => {
                if !out.contains(a) {
                    out.push(a.clone());
                }
            }
            TypeExpr::Int => {}
            TypeExpr::Tuple(ts) | TypeExpr::Con(_, ts) => ts.iter().for_each(|t| order(t, out)),
        }
    }
    let mut seen = Vec::new();
    order(&s.body, &mut seen);
    let free = s.free_vars();
    let mut theta = crate::types::Subst::new();
    let mut vars = BTreeSet::new();
    let mut i = 0;
    for a in seen.into_iter().filter(|a| s.vars.contains(a)) {
        let name = loop {
            let n = format!("a{i}");
            i += 1;
            if !free.contains(&n) {
                break n;
            }
        };
        theta.insert(a, TypeExpr::Var(name.clone()));
        vars.insert(name);
    }
    TypeScheme { vars, body: s.body.apply(&theta) }
}

/// The principal scheme of `e` under `env`, with monomorphic recursion and
/// unrestricted `let` generalization.
pub fn hm_infer(defs: &TypeDefs, env: &TypeEnv, e: &Expr) -> Result<TypeScheme, InferenceError> {
    let mut inf = Infer { defs, fix_rule: FixRule::Monomorphic, subst: HashMap::new(), next: 0 };
    let mut scope = env.clone();
    let t = inf.infer(&mut scope, e)?;
    let mut s = inf.generalize(env, &t);
    // free variables of env may have been refined by unification
    s.body = inf.resolve(&s.body);
    Ok(tidy(s))
}

/// Replaces free type variables by rigid constants.
fn rigidify(t: &TypeExpr, bound: &BTreeSet<Name>) -> TypeExpr {
    match t {
        TypeExpr::Var(a) if bound.contains(a) => t.clone(),
        TypeExpr::Var(a) => TypeExpr::Con(format!("!{a}"), vec![]),
        TypeExpr::Int => TypeExpr::Int,
        TypeExpr::Tuple(ts) => TypeExpr::Tuple(ts.iter().map(|t| rigidify(t, bound)).collect()),
        TypeExpr::Con(c, ts) => TypeExpr::Con(c.clone(), ts.iter().map(|t| rigidify(t, bound)).collect()),
    }
}

fn rigid_scheme(s: &TypeScheme) -> TypeScheme {
    TypeScheme { vars: s.vars.clone(), body: rigidify(&s.body, &s.vars) }
}

/// Whether `env ⊢ e : goal` holds with polymorphic recursion, each `fix`
/// binder taking the scheme given in `ann`. Free type variables of `env`,
/// `goal` and the annotations are fixed, not solved for.
pub fn mlrec_check(
    defs: &TypeDefs,
    env: &TypeEnv,
    e: &Expr,
    goal: &TypeExpr,
    ann: &FixAnnotation,
) -> Result<bool, InferenceError> {
    let ann: FixAnnotation = ann.iter().map(|(r, s)| (r.clone(), rigid_scheme(s))).collect();
    let mut scope = TypeEnv::new();
    for (v, s) in env.iter() {
        scope.push(v.clone(), rigid_scheme(s));
    }
    let mut inf = Infer { defs, fix_rule: FixRule::Annotated(&ann), subst: HashMap::new(), next: 0 };
    let result = inf.infer(&mut scope, e).and_then(|t| inf.unify(&t, &rigidify(goal, &BTreeSet::new())));
    match result {
        Ok(()) => Ok(true),
        Err(err @ InferenceError::MissingAnnotation(_)) => Err(err),
        Err(_) => Ok(false),
    }
}
