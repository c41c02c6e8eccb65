//! Seeded generators of graphs and programs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::hm_infer;
use crate::defs::TypeDefs;
use crate::graph::{Node, NodeId, RawGraph};
use crate::types::{instance_le, Name, TypeEnv, TypeExpr, TypeScheme, Var, VarKind};
use crate::value::Expr;

/// A random rooted graph with at most `max_nodes` nodes. Children are picked
/// among later nodes when `cyclic` is false, so the result is a DAG; otherwise
/// any node may be picked, so back edges and self-loops occur. Unreachable
/// nodes are pruned.
pub fn random_graph<R: Rng>(rng: &mut R, max_nodes: usize, cyclic: bool) -> RawGraph {
    let n = rng.gen_range(1..=max_nodes.max(1));
    let mut nodes = Vec::with_capacity(n);
    for i in 0..n {
        let later = n - i - 1;
        if (!cyclic && later == 0) || rng.gen_bool(0.2) {
            nodes.push(Node::Int(rng.gen_range(-3..=3)));
            continue;
        }
        let mark = rng.gen_range(0..=3u32);
        let arity = if mark == 0 { rng.gen_range(2..=3) } else { 1 };
        let children = (0..arity)
            .map(|_| {
                if cyclic && rng.gen_bool(0.3) {
                    rng.gen_range(0..n)
                } else if later == 0 {
                    // only reachable when cyclic
                    rng.gen_range(0..n)
                } else if rng.gen_bool(0.6) {
                    i + 1 + rng.gen_range(0..later.min(3))
                } else {
                    rng.gen_range(i + 1..n)
                }
            })
            .collect();
        nodes.push(Node::Block { mark, children });
    }
    prune(nodes, 0)
}

/// Keeps the nodes reachable from `root`, renumbered in discovery order.
pub fn prune(nodes: Vec<Node>, root: NodeId) -> RawGraph {
    const NONE: usize = usize::MAX;
    let mut remap = vec![NONE; nodes.len()];
    let mut order = vec![root];
    remap[root] = 0;
    let mut i = 0;
    while i < order.len() {
        for &c in nodes[order[i]].children() {
            if remap[c] == NONE {
                remap[c] = order.len();
                order.push(c);
            }
        }
        i += 1;
    }
    let kept = order
        .iter()
        .map(|&id| match &nodes[id] {
            Node::Int(v) => Node::Int(*v),
            Node::Block { mark, children } => {
                Node::Block { mark: *mark, children: children.iter().map(|&c| remap[c]).collect() }
            }
        })
        .collect();
    RawGraph::new(kept, 0).expect("pruned graph is well formed")
}

/// A closed program and a type it has, built type-first: grow a target
/// type, then an inhabitant of it, inserting `let` sharing (sometimes with
/// several binders) and `fix` cycles up to four deep. The returned type is
/// either the target or the principal type of the program. Deterministic in
/// `seed`; when no inhabitant is found within a few attempts, or the budget
/// is too small, the result is an integer literal.
pub fn gen_typed_program(seed: u64, budget: usize, defs: &TypeDefs) -> (Expr, TypeExpr) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if budget > 1 && !defs.is_empty() {
        for _ in 0..8 {
            let target = loop {
                let t = random_type(&mut rng, defs, rng_depth(budget));
                if t.depth() > 1 || rng.gen_bool(0.15) {
                    break t;
                }
            };
            let mut g = ProgramGen {
                defs,
                rng: &mut rng,
                budget,
                scope: Vec::new(),
                env: TypeEnv::new(),
                next_p: 0,
                next_r: 0,
                fix_depth: 0,
            };
            let Some(e) = g.term(&target, 0, true) else { continue };
            let Ok(principal) = hm_infer(defs, &TypeEnv::new(), &e) else { continue };
            if !instance_le(&target, &principal) || e.well_formed(defs, true).is_err() {
                continue;
            }
            let ty = if rng.gen_bool(0.5) { principal.body } else { target };
            return (e, ty);
        }
    }
    (Expr::Int(rng.gen_range(-9..=9)), TypeExpr::Int)
}

fn rng_depth(budget: usize) -> usize {
    match budget {
        0..=4 => 1,
        5..=20 => 2,
        _ => 3,
    }
}

const MAX_TYPE_DEPTH: usize = 6;
const MAX_FIX_DEPTH: usize = 4;
const MAX_TUPLE: usize = 4;
const MAX_TERM_DEPTH: usize = 60;

/// A closed type of depth at most `depth + 1` (never more than six) over
/// `Int`, tuples and the declared constructors.
pub fn random_type<R: Rng>(rng: &mut R, defs: &TypeDefs, depth: usize) -> TypeExpr {
    let depth = depth.min(MAX_TYPE_DEPTH - 1);
    let decls: Vec<_> = defs.decls().collect();
    if depth == 0 || decls.is_empty() || rng.gen_bool(0.25) {
        let nullary: Vec<_> = decls.iter().filter(|d| d.params.is_empty()).collect();
        if !nullary.is_empty() && rng.gen_bool(0.3) {
            return TypeExpr::con(&nullary[rng.gen_range(0..nullary.len())].name, vec![]);
        }
        return TypeExpr::Int;
    }
    if rng.gen_bool(0.2) {
        let width = rng.gen_range(2..=MAX_TUPLE);
        return TypeExpr::Tuple((0..width).map(|_| random_type(rng, defs, depth - 1)).collect());
    }
    let d = decls[rng.gen_range(0..decls.len())];
    TypeExpr::con(&d.name, d.params.iter().map(|_| random_type(rng, defs, depth - 1)).collect())
}

struct Binding {
    var: Var,
    scheme: TypeScheme,
    uses: usize,
}

struct ProgramGen<'a, R> {
    defs: &'a TypeDefs,
    rng: &'a mut R,
    budget: usize,
    scope: Vec<Binding>,
    env: TypeEnv,
    next_p: usize,
    next_r: usize,
    fix_depth: usize,
}

impl<R: Rng> ProgramGen<'_, R> {
    fn bind(&mut self, var: Var, scheme: TypeScheme) {
        self.env.push(var.clone(), scheme.clone());
        self.scope.push(Binding { var, scheme, uses: 0 });
    }

    fn unbind(&mut self) -> usize {
        self.env.pop();
        self.scope.pop().map_or(0, |b| b.uses)
    }

    /// Undoes the use counts of a subterm that is being thrown away.
    fn forget(&mut self, e: &Expr) {
        let mut stack = vec![e];
        while let Some(e) = stack.pop() {
            match e {
                Expr::Shared(x) | Expr::Rec(x) => {
                    let var = if matches!(e, Expr::Shared(_)) { Var::shared(x) } else { Var::recursive(x) };
                    if let Some(b) = self.scope.iter_mut().rev().find(|b| b.var == var) {
                        b.uses -= 1;
                    }
                }
                Expr::Int(_) | Expr::Const(_) => {}
                Expr::Tuple(es) => stack.extend(es),
                Expr::Apply(_, e) => stack.push(e),
                Expr::Let { bound, body, .. } => {
                    stack.push(bound);
                    stack.push(body);
                }
                Expr::Fix { body, .. } => stack.push(body),
            }
        }
    }

    fn spend(&mut self) -> bool {
        if self.budget == 0 {
            return false;
        }
        self.budget -= 1;
        true
    }

    fn term(&mut self, goal: &TypeExpr, depth: usize, allow_var: bool) -> Option<Expr> {
        if depth > MAX_TERM_DEPTH {
            return None;
        }
        let funded = self.spend();
        if allow_var {
            let fits: Vec<usize> = (0..self.scope.len())
                .filter(|&i| {
                    let b = &self.scope[i];
                    match b.var.kind {
                        VarKind::Recursive => b.scheme.body == *goal,
                        VarKind::Shared => instance_le(goal, &b.scheme),
                    }
                })
                .collect();
            let rec_fits = fits.iter().any(|&i| self.scope[i].var.kind == VarKind::Recursive);
            let p = if !funded { 0.9 } else if rec_fits { 0.8 } else { 0.35 };
            if !fits.is_empty() && self.rng.gen_bool(p) {
                let b = &mut self.scope[fits[self.rng.gen_range(0..fits.len())]];
                b.uses += 1;
                return Some(match b.var.kind {
                    VarKind::Shared => Expr::Shared(b.var.name.clone()),
                    VarKind::Recursive => Expr::Rec(b.var.name.clone()),
                });
            }
        }
        if funded && self.rng.gen_bool(0.12) {
            return self.with_let(goal, depth);
        }
        let no_constants = matches!(goal, TypeExpr::Con(t, _) if self.defs.constant_count(t) == Ok(0));
        let recurs = matches!(goal, TypeExpr::Con(..)) && self.subgoals(goal)[1..].contains(goal);
        let p_fix = if no_constants && !funded {
            0.9
        } else if recurs {
            0.35
        } else {
            0.15
        };
        if self.fix_depth < MAX_FIX_DEPTH && matches!(goal, TypeExpr::Con(..) | TypeExpr::Tuple(_)) && self.rng.gen_bool(p_fix)
        {
            return self.with_fix(goal, depth);
        }
        self.structural(goal, depth, funded)
    }

    fn structural(&mut self, goal: &TypeExpr, depth: usize, funded: bool) -> Option<Expr> {
        match goal {
            TypeExpr::Var(_) => None,
            TypeExpr::Int => Some(Expr::Int(self.rng.gen_range(-9..=9))),
            TypeExpr::Tuple(ts) => {
                let mut es = Vec::with_capacity(ts.len());
                for t in ts {
                    match self.term(t, depth + 1, true) {
                        Some(e) => es.push(e),
                        None => {
                            es.iter().for_each(|e| self.forget(e));
                            return None;
                        }
                    }
                }
                Some(Expr::Tuple(es))
            }
            TypeExpr::Con(t, args) => {
                let decl = self.defs.get(t)?;
                let constants = decl.constants.clone();
                let unary: Vec<Name> = decl.unary.iter().map(|(f, _)| f.clone()).collect();
                let pick_unary = !unary.is_empty() && (constants.is_empty() || (funded && self.rng.gen_bool(if self.fix_depth > 0 { 0.8 } else { 0.6 })));
                if !pick_unary {
                    return Some(Expr::Const(constants[self.rng.gen_range(0..constants.len())].clone()));
                }
                let f = unary[self.rng.gen_range(0..unary.len())].clone();
                let payload = self.defs.payload_type(&f, args).ok()?;
                if payload.depth() > MAX_TYPE_DEPTH {
                    // non-regular types grow their payloads; stop unfolding
                    let c = constants.get(self.rng.gen_range(0..constants.len().max(1)))?;
                    return Some(Expr::Const(c.clone()));
                }
                let arg = self.term(&payload, depth + 1, true)?;
                Some(Expr::apply(&f, arg))
            }
        }
    }

    /// Types worth sharing under `goal`: itself, its components and the
    /// payloads of its constructors, a few levels down.
    fn subgoals(&self, goal: &TypeExpr) -> Vec<TypeExpr> {
        let mut out = vec![goal.clone()];
        let mut i = 0;
        while i < out.len() && out.len() < 8 {
            let t = out[i].clone();
            i += 1;
            let next: Vec<TypeExpr> = match &t {
                TypeExpr::Tuple(ts) => ts.clone(),
                TypeExpr::Con(c, args) => self
                    .defs
                    .get(c)
                    .map(|d| d.unary.iter().filter_map(|(f, _)| self.defs.payload_type(f, args).ok()).collect())
                    .unwrap_or_default(),
                _ => vec![],
            };
            for n in next {
                if !out.contains(&n) && n.depth() <= MAX_TYPE_DEPTH {
                    out.push(n);
                }
            }
        }
        out
    }

    fn with_let(&mut self, goal: &TypeExpr, depth: usize) -> Option<Expr> {
        let candidates = self.subgoals(goal);
        let arity = if self.rng.gen_bool(0.25) { 2 } else { 1 };
        let mut bounds = Vec::new();
        for _ in 0..arity {
            let t = candidates[self.rng.gen_range(0..candidates.len())].clone();
            match self.term(&t, depth + 1, true) {
                Some(e) => bounds.push(e),
                None => {
                    bounds.iter().for_each(|e| self.forget(e));
                    return self.structural(goal, depth, false);
                }
            }
        }
        let mut names = Vec::new();
        for e in &bounds {
            let scheme = hm_infer(self.defs, &self.env, e).ok()?;
            let p = format!("p{}", self.next_p);
            self.next_p += 1;
            self.bind(Var::shared(&p), scheme);
            names.push(p);
        }
        let body = self.term(goal, depth + 1, true);
        let mut used = vec![false; names.len()];
        for u in used.iter_mut().rev() {
            *u = self.unbind() > 0;
        }
        let Some(body) = body else {
            bounds.iter().for_each(|e| self.forget(e));
            return None;
        };
        let mut kept_names = Vec::new();
        let mut kept = Vec::new();
        for ((p, e), u) in names.into_iter().zip(bounds).zip(used) {
            if u {
                kept_names.push(p);
                kept.push(e);
            } else {
                self.forget(&e);
            }
        }
        if kept.is_empty() {
            return Some(body);
        }
        let bound = if kept.len() == 1 { kept.pop().expect("one bound") } else { Expr::Tuple(kept) };
        Some(Expr::Let { binders: kept_names, bound: Box::new(bound), body: Box::new(body) })
    }

    fn with_fix(&mut self, goal: &TypeExpr, depth: usize) -> Option<Expr> {
        // a tuple goal sometimes becomes one fix with a binder per component
        let parts: Vec<TypeExpr> = match goal {
            TypeExpr::Tuple(ts) if self.rng.gen_bool(0.5) => ts.clone(),
            TypeExpr::Tuple(_) => return self.structural(goal, depth, true),
            _ => vec![goal.clone()],
        };
        let mut names = Vec::new();
        for t in &parts {
            let r = format!("r{}", self.next_r);
            self.next_r += 1;
            self.bind(Var::recursive(&r), TypeScheme::mono(t.clone()));
            names.push(r);
        }
        self.fix_depth += 1;
        // bodies start with a constructor or tuple so every binder is well founded
        let mut bodies = Vec::new();
        let mut failed = false;
        for t in &parts {
            let funded = self.spend();
            match self.structural(t, depth + 1, funded) {
                Some(e) => bodies.push(e),
                None => {
                    failed = true;
                    break;
                }
            }
        }
        self.fix_depth -= 1;
        let mut all_used = true;
        let mut any_used = false;
        for _ in &parts {
            let u = self.unbind() > 0;
            all_used &= u;
            any_used |= u;
        }
        if failed || (any_used && !all_used) {
            bodies.iter().for_each(|e| self.forget(e));
            if failed {
                return None;
            }
            return self.structural(goal, depth, false);
        }
        let body = if bodies.len() == 1 { bodies.pop().expect("one body") } else { Expr::Tuple(bodies) };
        if !any_used {
            return Some(body);
        }
        Some(Expr::Fix { binders: names, body: Box::new(body) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defs::fixtures::prelude;

    fn count(e: &Expr, lets: &mut usize, fixes: &mut usize) {
        match e {
            Expr::Let { bound, body, .. } => {
                *lets += 1;
                count(bound, lets, fixes);
                count(body, lets, fixes);
            }
            Expr::Fix { body, .. } => {
                *fixes += 1;
                count(body, lets, fixes);
            }
            Expr::Tuple(es) => es.iter().for_each(|e| count(e, lets, fixes)),
            Expr::Apply(_, e) => count(e, lets, fixes),
            _ => {}
        }
    }

    #[test]
    fn smallest_budget_gives_a_literal() {
        let (e, t) = gen_typed_program(0, 1, &prelude());
        assert!(matches!(e, Expr::Int(_)));
        assert_eq!(t, TypeExpr::Int);
    }

    #[test]
    fn deterministic() {
        let defs = prelude();
        assert_eq!(gen_typed_program(42, 50, &defs), gen_typed_program(42, 50, &defs));
    }

    #[test]
    fn outputs_are_typed_and_varied() {
        let defs = prelude();
        let (mut lets, mut fixes, mut literals) = (0, 0, 0);
        for seed in 0..400 {
            let (e, t) = gen_typed_program(seed, 40, &defs);
            e.well_formed(&defs, true).unwrap();
            let s = hm_infer(&defs, &TypeEnv::new(), &e).unwrap();
            assert!(instance_le(&t, &s), "{t} vs {s}");
            if matches!(e, Expr::Int(_)) {
                literals += 1;
            }
            count(&e, &mut lets, &mut fixes);
        }
        assert!(lets > 50 && fixes > 50, "lets {lets}, fixes {fixes}");
        assert!(literals < 200, "{literals} literals");
    }
}
