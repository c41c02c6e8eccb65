//! Type syntaxes and the relations between them.
//!
//! Three layers live here: open types with variables ([`TypeExpr`],
//! [`TypeScheme`]), closed value types where every variable position has been
//! replaced by [`GroundType::Top`], and the environment-only [`EnvType`] that
//! adds the neutral element for anti-unification.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Identifier for type variables, type constructors and data constructors.
pub type Name = String;

/// Open type expression.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeExpr {
    Var(Name),
    Int,
    /// Always at least two components.
    Tuple(Vec<TypeExpr>),
    Con(Name, Vec<TypeExpr>),
}

impl TypeExpr {
    pub fn var(name: &str) -> Self {
        TypeExpr::Var(name.to_string())
    }

    pub fn con(name: &str, args: Vec<TypeExpr>) -> Self {
        TypeExpr::Con(name.to_string(), args)
    }

    /// Builds a product, collapsing the one-component case to the component.
    pub fn product(mut components: Vec<TypeExpr>) -> Self {
        if components.len() == 1 {
            components.pop().unwrap()
        } else {
            TypeExpr::Tuple(components)
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Name>) {
        match self {
            TypeExpr::Var(a) => {
                out.insert(a.clone());
            }
            TypeExpr::Int => {}
            TypeExpr::Tuple(ts) | TypeExpr::Con(_, ts) => {
                for t in ts {
                    t.collect_vars(out);
                }
            }
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            TypeExpr::Var(_) => false,
            TypeExpr::Int => true,
            TypeExpr::Tuple(ts) | TypeExpr::Con(_, ts) => ts.iter().all(TypeExpr::is_ground),
        }
    }

    pub fn apply(&self, subst: &Subst) -> TypeExpr {
        match self {
            TypeExpr::Var(a) => subst.get(a).cloned().unwrap_or_else(|| self.clone()),
            TypeExpr::Int => TypeExpr::Int,
            TypeExpr::Tuple(ts) => TypeExpr::Tuple(ts.iter().map(|t| t.apply(subst)).collect()),
            TypeExpr::Con(c, ts) => TypeExpr::Con(c.clone(), ts.iter().map(|t| t.apply(subst)).collect()),
        }
    }

    /// Replaces every variable with `Top`.
    pub fn to_ground(&self) -> GroundType {
        match self {
            TypeExpr::Var(_) => GroundType::Top,
            TypeExpr::Int => GroundType::Int,
            TypeExpr::Tuple(ts) => GroundType::Tuple(ts.iter().map(TypeExpr::to_ground).collect()),
            TypeExpr::Con(c, ts) => GroundType::Con(c.clone(), ts.iter().map(TypeExpr::to_ground).collect()),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TypeExpr::Var(_) | TypeExpr::Int => 1,
            TypeExpr::Tuple(ts) | TypeExpr::Con(_, ts) => 1 + ts.iter().map(TypeExpr::depth).max().unwrap_or(0),
        }
    }
}

/// Substitution from type variables to types.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Subst(BTreeMap<Name, TypeExpr>);

impl Subst {
    pub fn new() -> Self {
        Subst(BTreeMap::new())
    }

    pub fn insert(&mut self, var: Name, ty: TypeExpr) {
        self.0.insert(var, ty);
    }

    pub fn get(&self, var: &str) -> Option<&TypeExpr> {
        self.0.get(var)
    }

    pub fn domain(&self) -> impl Iterator<Item = &Name> {
        self.0.keys()
    }

    /// Applies the substitution under a quantifier, renaming bound variables
    /// that would capture a variable of the substitution's image.
    pub fn apply_scheme(&self, scheme: &TypeScheme) -> TypeScheme {
        let mut image_vars = BTreeSet::new();
        for (k, t) in &self.0 {
            if !scheme.vars.contains(k) {
                t.collect_vars(&mut image_vars);
            }
        }
        let mut inner = Subst::new();
        for (k, t) in &self.0 {
            if !scheme.vars.contains(k) {
                inner.insert(k.clone(), t.clone());
            }
        }
        let mut vars = BTreeSet::new();
        let mut taken: BTreeSet<Name> = image_vars.union(&scheme.body.free_vars()).cloned().collect();
        for a in &scheme.vars {
            if image_vars.contains(a) {
                let mut i = 0;
                let fresh = loop {
                    let candidate = format!("{a}{i}");
                    if !taken.contains(&candidate) {
                        break candidate;
                    }
                    i += 1;
                };
                taken.insert(fresh.clone());
                inner.insert(a.clone(), TypeExpr::Var(fresh.clone()));
                vars.insert(fresh);
            } else {
                vars.insert(a.clone());
            }
        }
        TypeScheme { vars, body: scheme.body.apply(&inner) }
    }
}

/// `forall vars. body`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeScheme {
    pub vars: BTreeSet<Name>,
    pub body: TypeExpr,
}

impl TypeScheme {
    pub fn mono(body: TypeExpr) -> Self {
        TypeScheme { vars: BTreeSet::new(), body }
    }

    /// Quantifies every variable occurring in `body`.
    pub fn closed(body: TypeExpr) -> Self {
        TypeScheme { vars: body.free_vars(), body }
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut fv = self.body.free_vars();
        fv.retain(|a| !self.vars.contains(a));
        fv
    }

    /// Equality up to renaming of bound variables.
    pub fn alpha_eq(&self, other: &TypeScheme) -> bool {
        fn go(
            a: &TypeExpr,
            b: &TypeExpr,
            sa: &TypeScheme,
            sb: &TypeScheme,
            fwd: &mut BTreeMap<Name, Name>,
            bwd: &mut BTreeMap<Name, Name>,
        ) -> bool {
            match (a, b) {
                (TypeExpr::Var(x), TypeExpr::Var(y)) => {
                    let bx = sa.vars.contains(x);
                    let by = sb.vars.contains(y);
                    if bx != by {
                        return false;
                    }
                    if !bx {
                        return x == y;
                    }
                    let f = fwd.entry(x.clone()).or_insert_with(|| y.clone()).clone();
                    let g = bwd.entry(y.clone()).or_insert_with(|| x.clone()).clone();
                    &f == y && &g == x
                }
                (TypeExpr::Int, TypeExpr::Int) => true,
                (TypeExpr::Tuple(xs), TypeExpr::Tuple(ys)) => {
                    xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| go(x, y, sa, sb, fwd, bwd))
                }
                (TypeExpr::Con(c, xs), TypeExpr::Con(d, ys)) => {
                    c == d && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| go(x, y, sa, sb, fwd, bwd))
                }
                _ => false,
            }
        }
        let used_a = self.vars.intersection(&self.body.free_vars()).count();
        let used_b = other.vars.intersection(&other.body.free_vars()).count();
        used_a == used_b && go(&self.body, &other.body, self, other, &mut BTreeMap::new(), &mut BTreeMap::new())
    }
}

/// Closed value type: variables have all become `Top`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroundType {
    Top,
    Int,
    /// Always at least two components.
    Tuple(Vec<GroundType>),
    Con(Name, Vec<GroundType>),
}

impl GroundType {
    pub fn con(name: &str, args: Vec<GroundType>) -> Self {
        GroundType::Con(name.to_string(), args)
    }

    pub fn product(mut components: Vec<GroundType>) -> Self {
        if components.len() == 1 {
            components.pop().unwrap()
        } else {
            GroundType::Tuple(components)
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            GroundType::Top | GroundType::Int => 1,
            GroundType::Tuple(ts) | GroundType::Con(_, ts) => 1 + ts.iter().map(GroundType::depth).max().unwrap_or(0),
        }
    }

    pub fn contains_top(&self) -> bool {
        match self {
            GroundType::Top => true,
            GroundType::Int => false,
            GroundType::Tuple(ts) | GroundType::Con(_, ts) => ts.iter().any(GroundType::contains_top),
        }
    }

    /// Embeds a ground type into the open syntax. `Top` has no open
    /// counterpart, so callers must ensure it does not occur.
    pub fn to_type_expr(&self) -> Option<TypeExpr> {
        Some(match self {
            GroundType::Top => return None,
            GroundType::Int => TypeExpr::Int,
            GroundType::Tuple(ts) => TypeExpr::Tuple(ts.iter().map(GroundType::to_type_expr).collect::<Option<_>>()?),
            GroundType::Con(c, ts) => {
                TypeExpr::Con(c.clone(), ts.iter().map(GroundType::to_type_expr).collect::<Option<_>>()?)
            }
        })
    }
}

/// Entry type of a checking environment.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum EnvType {
    /// Neutral element of anti-unification; the type of a sharing variable
    /// before any of its occurrences has been seen.
    Bottom,
    Ground(GroundType),
}

impl EnvType {
    pub fn ground(&self) -> Option<&GroundType> {
        match self {
            EnvType::Bottom => None,
            EnvType::Ground(g) => Some(g),
        }
    }
}

impl From<GroundType> for EnvType {
    fn from(g: GroundType) -> Self {
        EnvType::Ground(g)
    }
}

/// The closed representative of a scheme's class: all variables become `Top`.
/// Free variables are treated as if quantified.
pub fn univ(scheme: &TypeScheme) -> GroundType {
    scheme.body.to_ground()
}

/// The most general scheme of a ground type: one fresh variable per `Top`
/// occurrence, named `a0, a1, ...` left to right.
pub fn schema(g: &GroundType) -> TypeScheme {
    fn go(g: &GroundType, next: &mut usize, vars: &mut BTreeSet<Name>) -> TypeExpr {
        match g {
            GroundType::Top => {
                let a = format!("a{next}");
                *next += 1;
                vars.insert(a.clone());
                TypeExpr::Var(a)
            }
            GroundType::Int => TypeExpr::Int,
            GroundType::Tuple(ts) => TypeExpr::Tuple(ts.iter().map(|t| go(t, next, vars)).collect()),
            GroundType::Con(c, ts) => TypeExpr::Con(c.clone(), ts.iter().map(|t| go(t, next, vars)).collect()),
        }
    }
    let mut vars = BTreeSet::new();
    let body = go(g, &mut 0, &mut vars);
    TypeScheme { vars, body }
}

/// `t` is an instance of `s`: some substitution over exactly the bound
/// variables of `s` maps its body to `t`.
pub fn instance_le(t: &TypeExpr, s: &TypeScheme) -> bool {
    fn matches(pat: &TypeExpr, t: &TypeExpr, bound: &BTreeSet<Name>, theta: &mut BTreeMap<Name, TypeExpr>) -> bool {
        match (pat, t) {
            (TypeExpr::Var(a), _) if bound.contains(a) => match theta.get(a) {
                Some(prev) => prev == t,
                None => {
                    theta.insert(a.clone(), t.clone());
                    true
                }
            },
            (TypeExpr::Var(a), TypeExpr::Var(b)) => a == b,
            (TypeExpr::Int, TypeExpr::Int) => true,
            (TypeExpr::Tuple(ps), TypeExpr::Tuple(ts)) => {
                ps.len() == ts.len() && ps.iter().zip(ts).all(|(p, t)| matches(p, t, bound, theta))
            }
            (TypeExpr::Con(c, ps), TypeExpr::Con(d, ts)) => {
                c == d && ps.len() == ts.len() && ps.iter().zip(ts).all(|(p, t)| matches(p, t, bound, theta))
            }
            _ => false,
        }
    }
    matches(&s.body, t, &s.vars, &mut BTreeMap::new())
}

/// `a ⪯ b` on closed types: every instance of `schema(a)` is an instance of
/// `schema(b)`. Since each `Top` stands for an independent variable this is
/// wildcard matching with `b`'s `Top` accepting anything.
pub fn closed_le(a: &GroundType, b: &GroundType) -> bool {
    match (a, b) {
        (_, GroundType::Top) => true,
        (GroundType::Int, GroundType::Int) => true,
        (GroundType::Tuple(xs), GroundType::Tuple(ys)) => {
            xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| closed_le(x, y))
        }
        (GroundType::Con(c, xs), GroundType::Con(d, ys)) => {
            c == d && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| closed_le(x, y))
        }
        _ => false,
    }
}

/// Extends `closed_le` to environment entries, with `Bottom` below everything.
pub fn env_le(a: &EnvType, b: &EnvType) -> bool {
    match (a, b) {
        (EnvType::Bottom, _) => true,
        (EnvType::Ground(_), EnvType::Bottom) => false,
        (EnvType::Ground(x), EnvType::Ground(y)) => closed_le(x, y),
    }
}

/// Memoryless anti-unification of an environment entry with a constraint.
pub fn anti_unify(a: &EnvType, b: &GroundType) -> GroundType {
    match a {
        EnvType::Bottom => b.clone(),
        EnvType::Ground(a) => lgg(a, b),
    }
}

/// Memoryless anti-unification of two closed types: conflicts become
/// independent `Top`s.
pub fn lgg(a: &GroundType, b: &GroundType) -> GroundType {
    match (a, b) {
        (GroundType::Int, GroundType::Int) => GroundType::Int,
        (GroundType::Tuple(xs), GroundType::Tuple(ys)) if xs.len() == ys.len() => {
            GroundType::Tuple(xs.iter().zip(ys).map(|(x, y)| lgg(x, y)).collect())
        }
        (GroundType::Con(c, xs), GroundType::Con(d, ys)) if c == d && xs.len() == ys.len() => {
            GroundType::Con(c.clone(), xs.iter().zip(ys).map(|(x, y)| lgg(x, y)).collect())
        }
        _ => GroundType::Top,
    }
}

/// Pointer kind: sharing (`p`, bound by `let`) or recursion (`r`, bound by `fix`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKind {
    Shared,
    Recursive,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub kind: VarKind,
    pub name: Name,
}

impl Var {
    pub fn shared(name: &str) -> Self {
        Var { kind: VarKind::Shared, name: name.to_string() }
    }

    pub fn recursive(name: &str) -> Self {
        Var { kind: VarKind::Recursive, name: name.to_string() }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Ordered typing environment over schemes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypeEnv {
    entries: Vec<(Var, TypeScheme)>,
}

impl TypeEnv {
    pub fn new() -> Self {
        TypeEnv::default()
    }

    /// `env ⊕ {var : scheme}`. A previous entry for the same variable is shadowed.
    pub fn extend(&self, var: Var, scheme: TypeScheme) -> TypeEnv {
        let mut out = self.clone();
        out.push(var, scheme);
        out
    }

    pub fn push(&mut self, var: Var, scheme: TypeScheme) {
        self.entries.push((var, scheme));
    }

    pub fn pop(&mut self) -> Option<(Var, TypeScheme)> {
        self.entries.pop()
    }

    pub fn get(&self, var: &Var) -> Option<&TypeScheme> {
        self.entries.iter().rev().find(|(v, _)| v == var).map(|(_, s)| s)
    }

    /// Restriction `env \ vars`.
    pub fn without(&self, vars: &[Var]) -> TypeEnv {
        TypeEnv { entries: self.entries.iter().filter(|(v, _)| !vars.contains(v)).cloned().collect() }
    }

    pub fn domain(&self) -> impl Iterator<Item = &Var> {
        self.entries.iter().map(|(v, _)| v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &TypeScheme)> {
        self.entries.iter().map(|(v, s)| (v, s))
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        for (_, s) in &self.entries {
            out.extend(s.free_vars());
        }
        out
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `gen(env, t)`: quantify the variables free in `t` but not in `env`.
pub fn gen(env: &TypeEnv, t: &TypeExpr) -> TypeScheme {
    let env_fv = env.free_vars();
    let vars = t.free_vars().into_iter().filter(|a| !env_fv.contains(a)).collect();
    TypeScheme { vars, body: t.clone() }
}

fn write_list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{item}")?;
    }
    Ok(())
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeExpr::Var(a) => f.write_str(a),
            TypeExpr::Int => f.write_str("Int"),
            TypeExpr::Tuple(ts) => {
                f.write_str("(")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" * ")?;
                    }
                    write!(f, "{t}")?;
                }
                f.write_str(")")
            }
            TypeExpr::Con(c, ts) if ts.is_empty() => f.write_str(c),
            TypeExpr::Con(c, ts) => {
                write!(f, "{c}(")?;
                write_list(f, ts)?;
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for TypeScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.vars.is_empty() {
            f.write_str("forall")?;
            for a in &self.vars {
                write!(f, " {a}")?;
            }
            f.write_str(". ")?;
        }
        write!(f, "{}", self.body)
    }
}

impl fmt::Display for GroundType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroundType::Top => f.write_str("Top"),
            GroundType::Int => f.write_str("Int"),
            GroundType::Tuple(ts) => {
                f.write_str("(")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" * ")?;
                    }
                    write!(f, "{t}")?;
                }
                f.write_str(")")
            }
            GroundType::Con(c, ts) if ts.is_empty() => f.write_str(c),
            GroundType::Con(c, ts) => {
                write!(f, "{c}(")?;
                write_list(f, ts)?;
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for EnvType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvType::Bottom => f.write_str("Bottom"),
            EnvType::Ground(g) => write!(f, "{g}"),
        }
    }
}
