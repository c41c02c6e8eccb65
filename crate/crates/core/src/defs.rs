//! Algebraic type declarations.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::types::{GroundType, Name, TypeExpr};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DefsError {
    #[error("unknown type `{0}`")]
    UnknownType(Name),
    #[error("unknown constructor `{0}`")]
    UnknownConstructor(Name),
    #[error("type `{name}` expects {expected} argument(s), found {found}")]
    ArityMismatch { name: Name, expected: usize, found: usize },
    #[error("constructor `{0}` is declared more than once")]
    DuplicateConstructor(Name),
    #[error("type `{0}` is declared more than once")]
    DuplicateType(Name),
    #[error("type variable `{var}` is not a parameter of `{ty}`")]
    UnboundParameter { ty: Name, var: Name },
    #[error("type `{0}` declares no constructors")]
    EmptyDeclaration(Name),
    #[error("tuple types need at least two components")]
    BadTupleArity,
}

/// One declaration `T(params) = C1 | ... | Cn | F1(t1) | ... | Fk(tk)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataDecl {
    pub name: Name,
    pub params: Vec<Name>,
    pub constants: Vec<Name>,
    pub unary: Vec<(Name, TypeExpr)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CtorKind {
    Constant,
    Unary,
}

/// Where a data constructor lives. Ranks are 1-based within their kind.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CtorInfo {
    pub type_name: Name,
    pub kind: CtorKind,
    pub rank: usize,
}

/// A declaration instantiated at ground arguments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub constants: Vec<Name>,
    pub unary: Vec<(Name, GroundType)>,
}

/// The mutually recursive declarations in force.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypeDefs {
    decls: BTreeMap<Name, DataDecl>,
    order: Vec<Name>,
    ctors: HashMap<Name, CtorInfo>,
}

impl TypeDefs {
    /// Validates and indexes a set of declarations.
    pub fn new(decls: Vec<DataDecl>) -> Result<Self, DefsError> {
        let mut defs = TypeDefs::default();
        for decl in decls {
            if defs.decls.contains_key(&decl.name) {
                return Err(DefsError::DuplicateType(decl.name));
            }
            if decl.constants.is_empty() && decl.unary.is_empty() {
                return Err(DefsError::EmptyDeclaration(decl.name));
            }
            let names = decl
                .constants
                .iter()
                .map(|c| (c, CtorKind::Constant))
                .enumerate()
                .chain(decl.unary.iter().map(|(f, _)| (f, CtorKind::Unary)).enumerate());
            for (i, (ctor, kind)) in names {
                let info = CtorInfo { type_name: decl.name.clone(), kind, rank: i + 1 };
                if defs.ctors.insert(ctor.clone(), info).is_some() {
                    return Err(DefsError::DuplicateConstructor(ctor.clone()));
                }
            }
            defs.order.push(decl.name.clone());
            defs.decls.insert(decl.name.clone(), decl);
        }
        for decl in defs.decls.values() {
            for (_, payload) in &decl.unary {
                for a in payload.free_vars() {
                    if !decl.params.contains(&a) {
                        return Err(DefsError::UnboundParameter { ty: decl.name.clone(), var: a });
                    }
                }
                defs.check_type(payload)?;
            }
        }
        Ok(defs)
    }

    pub fn get(&self, name: &str) -> Option<&DataDecl> {
        self.decls.get(name)
    }

    /// Declarations in source order.
    pub fn decls(&self) -> impl Iterator<Item = &DataDecl> {
        self.order.iter().map(move |n| &self.decls[n])
    }

    pub fn constructor(&self, name: &str) -> Option<&CtorInfo> {
        self.ctors.get(name)
    }

    pub fn is_empty(&self) -> bool {
        self.decls.is_empty()
    }

    fn decl_with_arity(&self, name: &str, found: usize) -> Result<&DataDecl, DefsError> {
        let decl = self.decls.get(name).ok_or_else(|| DefsError::UnknownType(name.to_string()))?;
        if decl.params.len() != found {
            return Err(DefsError::ArityMismatch { name: name.to_string(), expected: decl.params.len(), found });
        }
        Ok(decl)
    }

    /// Checks that every constructor is declared with the right arity and
    /// every tuple has at least two components.
    pub fn check_type(&self, t: &TypeExpr) -> Result<(), DefsError> {
        match t {
            TypeExpr::Var(_) | TypeExpr::Int => Ok(()),
            TypeExpr::Tuple(ts) => {
                if ts.len() < 2 {
                    return Err(DefsError::BadTupleArity);
                }
                ts.iter().try_for_each(|t| self.check_type(t))
            }
            TypeExpr::Con(c, ts) => {
                self.decl_with_arity(c, ts.len())?;
                ts.iter().try_for_each(|t| self.check_type(t))
            }
        }
    }

    pub fn check_ground(&self, g: &GroundType) -> Result<(), DefsError> {
        match g {
            GroundType::Top | GroundType::Int => Ok(()),
            GroundType::Tuple(ts) => {
                if ts.len() < 2 {
                    return Err(DefsError::BadTupleArity);
                }
                ts.iter().try_for_each(|t| self.check_ground(t))
            }
            GroundType::Con(c, ts) => {
                self.decl_with_arity(c, ts.len())?;
                ts.iter().try_for_each(|t| self.check_ground(t))
            }
        }
    }

    /// `Δ(T(args))`: the declaration with its parameters replaced by `args`.
    pub fn instantiate(&self, name: &str, args: &[GroundType]) -> Result<Instance, DefsError> {
        let decl = self.decl_with_arity(name, args.len())?;
        let unary = decl
            .unary
            .iter()
            .map(|(f, payload)| (f.clone(), subst_ground(payload, &decl.params, args)))
            .collect();
        Ok(Instance { constants: decl.constants.clone(), unary })
    }

    /// Number of constant constructors of `name`.
    pub fn constant_count(&self, name: &str) -> Result<usize, DefsError> {
        self.decls.get(name).map(|d| d.constants.len()).ok_or_else(|| DefsError::UnknownType(name.to_string()))
    }

    /// Payload of the `rank`-th (1-based) unary constructor of `name(args)`,
    /// or `None` when the rank is out of range.
    pub fn unary_payload(
        &self,
        name: &str,
        args: &[GroundType],
        rank: usize,
    ) -> Result<Option<(&Name, GroundType)>, DefsError> {
        let decl = self.decl_with_arity(name, args.len())?;
        if rank == 0 || rank > decl.unary.len() {
            return Ok(None);
        }
        let (f, payload) = &decl.unary[rank - 1];
        Ok(Some((f, subst_ground(payload, &decl.params, args))))
    }

    /// Open-type counterpart of [`TypeDefs::unary_payload`], by constructor name.
    pub fn payload_type(&self, ctor: &str, args: &[TypeExpr]) -> Result<TypeExpr, DefsError> {
        let info = self.constructor(ctor).ok_or_else(|| DefsError::UnknownConstructor(ctor.to_string()))?;
        let decl = self.decl_with_arity(&info.type_name, args.len())?;
        let (_, payload) = decl
            .unary
            .iter()
            .find(|(f, _)| f == ctor)
            .ok_or_else(|| DefsError::UnknownConstructor(ctor.to_string()))?;
        let mut theta = crate::types::Subst::new();
        for (a, t) in decl.params.iter().zip(args) {
            theta.insert(a.clone(), t.clone());
        }
        Ok(payload.apply(&theta))
    }
}

fn subst_ground(t: &TypeExpr, params: &[Name], args: &[GroundType]) -> GroundType {
    match t {
        TypeExpr::Var(a) => {
            // validated at construction: payload variables are parameters
            let i = params.iter().position(|p| p == a).expect("payload variable is a parameter");
            args[i].clone()
        }
        TypeExpr::Int => GroundType::Int,
        TypeExpr::Tuple(ts) => GroundType::Tuple(ts.iter().map(|t| subst_ground(t, params, args)).collect()),
        TypeExpr::Con(c, ts) => GroundType::Con(c.clone(), ts.iter().map(|t| subst_ground(t, params, args)).collect()),
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    fn v(a: &str) -> TypeExpr {
        TypeExpr::var(a)
    }

    /// `List(a) = Nil | Cons(a * List(a))`, `Bool = False | True`,
    /// `Nest(a) = Leaf | B(Nest(a * a))`.
    pub fn prelude() -> TypeDefs {
        TypeDefs::new(vec![
            DataDecl {
                name: "List".into(),
                params: vec!["a".into()],
                constants: vec!["Nil".into()],
                unary: vec![("Cons".into(), TypeExpr::Tuple(vec![v("a"), TypeExpr::con("List", vec![v("a")])]))],
            },
            DataDecl {
                name: "Bool".into(),
                params: vec![],
                constants: vec!["False".into(), "True".into()],
                unary: vec![],
            },
            DataDecl {
                name: "Nest".into(),
                params: vec!["a".into()],
                constants: vec!["Leaf".into()],
                unary: vec![(
                    "B".into(),
                    TypeExpr::con("Nest", vec![TypeExpr::Tuple(vec![v("a"), v("a")])]),
                )],
            },
        ])
        .unwrap()
    }
}
