//! Derivability in the closed type system over programs, where type
//! variables have been replaced by `Top`.
//!
//! This walks expressions, not values, and shares nothing with the checker.
//! Types for `let` binders are the anti-unification of the goals at which
//! the binder is used. For `fix` the binder types start at the goal and are
//! widened by anti-unification with the goals of the recursive uses until
//! every use fits; derivability is closed under more precise goals, so the
//! least such widening is the only candidate worth trying.

use std::collections::HashSet;

use crate::check::CheckEnv;
use crate::defs::{CtorKind, TypeDefs};
use crate::types::{closed_le, env_le, lgg, EnvType, GroundType, Var};
use crate::value::Expr;

/// Upper bound on widening rounds for one `fix`; each round strictly
/// generalizes a binder type, so this is never reached on sane inputs.
const MAX_WIDENING: usize = 64;

/// Decides `env ⊢ e : goal`.
pub fn top_check(defs: &TypeDefs, env: &CheckEnv, e: &Expr, goal: &GroundType) -> bool {
    let mut top = Top { defs, env, local: HashSet::new(), uses: Vec::new() };
    top.go(e, goal)
}

struct Top<'a> {
    defs: &'a TypeDefs,
    env: &'a CheckEnv,
    local: HashSet<Var>,
    /// Goals met at occurrences of locally bound variables, in traversal order.
    uses: Vec<(Var, GroundType)>,
}

impl Top<'_> {
    fn go(&mut self, e: &Expr, goal: &GroundType) -> bool {
        match e {
            Expr::Int(_) => *goal == GroundType::Int,
            Expr::Shared(x) | Expr::Rec(x) => {
                let var = if matches!(e, Expr::Shared(_)) { Var::shared(x) } else { Var::recursive(x) };
                if self.local.contains(&var) {
                    self.uses.push((var, goal.clone()));
                    return true;
                }
                match self.env.get(&var) {
                    Some(t) => env_le(&EnvType::Ground(goal.clone()), t),
                    None => false,
                }
            }
            Expr::Tuple(es) => match goal {
                GroundType::Tuple(gs) if gs.len() == es.len() => es.iter().zip(gs).all(|(e, g)| self.go(e, g)),
                _ => false,
            },
            Expr::Const(c) => match (goal, self.defs.constructor(c)) {
                (GroundType::Con(t, _), Some(info)) => {
                    info.kind == CtorKind::Constant && info.type_name == *t && self.defs.check_ground(goal).is_ok()
                }
                _ => false,
            },
            Expr::Apply(f, arg) => {
                let GroundType::Con(t, args) = goal else { return false };
                let payload = match self.defs.instantiate(t, args) {
                    Ok(inst) => inst.unary.into_iter().find(|(g, _)| g == f).map(|(_, p)| p),
                    Err(_) => None,
                };
                match payload {
                    Some(p) => self.go(arg, &p),
                    None => false,
                }
            }
            Expr::Let { binders, bound, body } => {
                let vars: Vec<Var> = binders.iter().map(|p| Var::shared(p)).collect();
                let start = self.uses.len();
                self.local.extend(vars.iter().cloned());
                let ok = self.go(body, goal);
                for v in &vars {
                    self.local.remove(v);
                }
                if !ok {
                    return false;
                }
                let types: Vec<GroundType> = vars.iter().map(|v| self.demand(v, start).unwrap_or(GroundType::Top)).collect();
                self.go(bound, &GroundType::product(types))
            }
            Expr::Fix { binders, body } => {
                let mut trial = match goal {
                    _ if binders.len() == 1 => vec![goal.clone()],
                    GroundType::Tuple(gs) if gs.len() == binders.len() => gs.clone(),
                    _ => return false,
                };
                let vars: Vec<Var> = binders.iter().map(|r| Var::recursive(r)).collect();
                for _ in 0..MAX_WIDENING {
                    let start = self.uses.len();
                    self.local.extend(vars.iter().cloned());
                    let ok = self.go(body, &GroundType::product(trial.clone()));
                    for v in &vars {
                        self.local.remove(v);
                    }
                    if !ok {
                        self.uses.truncate(start);
                        return false;
                    }
                    let mut fits = true;
                    for (v, t) in vars.iter().zip(trial.iter_mut()) {
                        if let Some(d) = self.demand(v, start) {
                            if !closed_le(&d, t) {
                                fits = false;
                            }
                            *t = lgg(t, &d);
                        }
                    }
                    if fits {
                        return true;
                    }
                    self.uses.truncate(start);
                }
                false
            }
        }
    }

    /// Anti-unification of the goals recorded for `v` since `start`.
    fn demand(&self, v: &Var, start: usize) -> Option<GroundType> {
        self.uses[start..]
            .iter()
            .filter(|(w, _)| w == v)
            .map(|(_, g)| g)
            .fold(None, |acc: Option<GroundType>, g| Some(acc.map_or_else(|| g.clone(), |a| lgg(&a, g))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defs::fixtures::prelude;

    fn list(t: GroundType) -> GroundType {
        GroundType::con("List", vec![t])
    }

    fn cons(head: Expr, tail: Expr) -> Expr {
        Expr::apply("Cons", Expr::Tuple(vec![head, tail]))
    }

    fn check(e: &Expr, goal: GroundType) -> bool {
        top_check(&prelude(), &CheckEnv::new(), e, &goal)
    }

    #[test]
    fn basic_rules() {
        let nils = Expr::Tuple(vec![Expr::constant("Nil"), Expr::constant("Nil")]);
        assert!(check(&nils, GroundType::Tuple(vec![list(GroundType::Top), list(GroundType::Top)])));
        assert!(check(&Expr::Int(1), GroundType::Int));
        assert!(!check(&Expr::Int(1), GroundType::Top));
        assert!(!check(&cons(Expr::Int(1), Expr::constant("Nil")), list(GroundType::Top)));
        assert!(!check(&Expr::constant("True"), list(GroundType::Int)));
    }

    #[test]
    fn shared_binders_take_the_anti_unified_demand() {
        let bool_t = GroundType::con("Bool", vec![]);
        let goal = GroundType::Tuple(vec![list(GroundType::Int), list(bool_t.clone())]);
        // let p = Nil in (Cons(1, p), Cons(True, p))
        let nil_shared = Expr::let_in(
            &["p"],
            Expr::constant("Nil"),
            Expr::Tuple(vec![
                cons(Expr::Int(1), Expr::shared("p")),
                cons(Expr::constant("True"), Expr::shared("p")),
            ]),
        );
        assert!(check(&nil_shared, goal.clone()));
        // let p = Cons(1, Nil) in (p, p): p would need List(Top)
        let cons_shared = Expr::let_in(
            &["p"],
            cons(Expr::Int(1), Expr::constant("Nil")),
            Expr::Tuple(vec![Expr::shared("p"), Expr::shared("p")]),
        );
        assert!(!check(&cons_shared, goal));
        assert!(check(&cons_shared, GroundType::Tuple(vec![list(GroundType::Int), list(GroundType::Int)])));
    }

    #[test]
    fn fix_widens_to_cover_polymorphic_recursion() {
        let nest = |t| GroundType::con("Nest", vec![t]);
        let e = Expr::fix(&["r"], Expr::apply("B", Expr::rec("r")));
        assert!(check(&e, nest(GroundType::Int)));
        let ones = Expr::fix(&["r"], cons(Expr::Int(1), Expr::rec("r")));
        assert!(check(&ones, list(GroundType::Int)));
        assert!(!check(&ones, list(GroundType::Top)));
    }

    #[test]
    fn environment_lookups() {
        let defs = prelude();
        let mut env = CheckEnv::new();
        env.bind(Var::shared("p"), EnvType::Ground(list(GroundType::Top))).unwrap();
        env.bind(Var::shared("q"), EnvType::Bottom).unwrap();
        assert!(top_check(&defs, &env, &Expr::shared("p"), &list(GroundType::Int)));
        assert!(!top_check(&defs, &env, &Expr::shared("q"), &list(GroundType::Int)));
        assert!(!top_check(&defs, &env, &Expr::shared("z"), &GroundType::Int));
    }
}
