use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use umv::check::{check, CheckEnv};
use umv::defs::TypeDefs;
use umv::graph::{delinearize, rooted_equal};
use umv::linearize::linearize;
use umv::oracles::generate::{gen_typed_program, random_graph, random_type};
use umv::oracles::{hm_infer, top_check};
use umv::syntax::parse_type_defs;
use umv::types::{closed_le, instance_le, schema, univ, EnvType, GroundType, TypeEnv, TypeExpr, TypeScheme, Var};
use umv::value::{translate, Expr, ValueTerm};
use umv::wire::{decode, encode};

fn prelude() -> TypeDefs {
    parse_type_defs(
        "type List(a) = Nil | Cons(a * List(a))
         type Bool = False | True
         type Nest(a) = Leaf | B(Nest(a * a))
         type Pair(a, b) = P(a * b)",
    )
    .unwrap()
}

/// Replaces random subterms of `g` by `Top`.
fn generalize(rng: &mut ChaCha8Rng, g: &GroundType) -> GroundType {
    if rng.gen_bool(0.2) {
        return GroundType::Top;
    }
    match g {
        GroundType::Tuple(ts) => GroundType::Tuple(ts.iter().map(|t| generalize(rng, t)).collect()),
        GroundType::Con(c, ts) => GroundType::Con(c.clone(), ts.iter().map(|t| generalize(rng, t)).collect()),
        other => other.clone(),
    }
}

fn generalize_env(rng: &mut ChaCha8Rng, env: &CheckEnv) -> CheckEnv {
    let mut out = CheckEnv::new();
    for (v, t) in env.iter() {
        let t = match t {
            EnvType::Ground(g) => EnvType::Ground(generalize(rng, g)),
            EnvType::Bottom => EnvType::Bottom,
        };
        out.bind(v.clone(), t).unwrap();
    }
    out
}

/// The body of the outermost `let` chain of `v`, with the environment that
/// binds all its binders to `Bottom`.
fn open_body(v: &ValueTerm) -> Option<(CheckEnv, &ValueTerm)> {
    let mut env = CheckEnv::new();
    let mut at = v;
    while let ValueTerm::Let { binders, body, .. } = at {
        for p in binders {
            env.bind(Var::shared(p), EnvType::Bottom).unwrap();
        }
        at = body;
    }
    (!env.is_empty()).then_some((env, at))
}

fn subst(t: &TypeExpr, theta: &BTreeMap<String, TypeExpr>) -> TypeExpr {
    match t {
        TypeExpr::Var(a) => theta.get(a).cloned().unwrap_or_else(|| t.clone()),
        TypeExpr::Int => TypeExpr::Int,
        TypeExpr::Tuple(ts) => TypeExpr::Tuple(ts.iter().map(|t| subst(t, theta)).collect()),
        TypeExpr::Con(c, ts) => TypeExpr::Con(c.clone(), ts.iter().map(|t| subst(t, theta)).collect()),
    }
}

fn has_fix(e: &Expr) -> bool {
    match e {
        Expr::Fix { .. } => true,
        Expr::Tuple(es) => es.iter().any(has_fix),
        Expr::Apply(_, e) => has_fix(e),
        Expr::Let { bound, body, .. } => has_fix(bound) || has_fix(body),
        _ => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn graph_round_trips(seed in any::<u64>(), size in 1usize..1000, cyclic in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, size, cyclic);
        let back = delinearize(&linearize(&g)).unwrap();
        prop_assert!(rooted_equal(&back, &g));
        let bytes = encode(&g);
        let decoded = decode(&bytes).unwrap();
        prop_assert!(rooted_equal(&decoded, &g));
        prop_assert_eq!(encode(&decoded), bytes);
    }

    #[test]
    fn decoding_is_total_and_canonical(seed in any::<u64>(), size in 1usize..60, flips in proptest::collection::vec((any::<usize>(), 1u8..), 1..4)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut bytes = encode(&random_graph(&mut rng, size, true));
        for (at, x) in flips {
            let at = at % bytes.len();
            bytes[at] ^= x;
        }
        if let Ok(g) = decode(&bytes) {
            prop_assert_eq!(encode(&g), bytes);
        }
    }

    #[test]
    fn generated_programs_are_accepted(seed in any::<u64>(), budget in 1usize..60) {
        let defs = prelude();
        let (e, t) = gen_typed_program(seed, budget, &defs);
        let goal = univ(&TypeScheme::closed(t));
        let v = translate(&e, &defs).unwrap();
        let (out, env) = check(&defs, CheckEnv::new(), &goal, &v).unwrap();
        prop_assert!(env.is_empty());
        prop_assert_eq!(translate(&out, &defs).unwrap(), v.clone());
        prop_assert!(top_check(&defs, &CheckEnv::new(), &out, &goal));
        // the checker also accepts what came back through the wire
        let wired = linearize(&decode(&encode(&delinearize(&v).unwrap())).unwrap());
        prop_assert!(check(&defs, CheckEnv::new(), &goal, &wired).is_ok());
    }

    #[test]
    fn checker_weakening(seed in any::<u64>(), budget in 8usize..60) {
        let defs = prelude();
        let (e, t) = gen_typed_program(seed, budget, &defs);
        let goal = univ(&TypeScheme::closed(t));
        let v = translate(&e, &defs).unwrap();
        let Some((bottoms, body)) = open_body(&v) else { return Ok(()) };
        let (_, env) = check(&defs, bottoms, &goal, body).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let (_, again) = check(&defs, env.clone(), &goal, body).unwrap();
        prop_assert!(env.le(&again));
        let wider = generalize_env(&mut rng, &env);
        prop_assert!(env.le(&wider));
        prop_assert!(check(&defs, wider, &goal, body).is_ok());
    }

    #[test]
    fn derivation_weakening(seed in any::<u64>(), budget in 8usize..60) {
        let defs = prelude();
        let (e, t) = gen_typed_program(seed, budget, &defs);
        let goal = univ(&TypeScheme::closed(t));
        let v = translate(&e, &defs).unwrap();
        let Some((bottoms, body)) = open_body(&v) else { return Ok(()) };
        let (out, env) = check(&defs, bottoms, &goal, body).unwrap();
        prop_assert!(top_check(&defs, &env, &out, &goal));
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let wider = generalize_env(&mut rng, &env);
        prop_assert!(top_check(&defs, &wider, &out, &goal));
    }

    #[test]
    fn univ_transport(seed in any::<u64>(), budget in 1usize..60) {
        let defs = prelude();
        let (e, t) = gen_typed_program(seed, budget, &defs);
        let principal = hm_infer(&defs, &TypeEnv::new(), &e).unwrap();
        prop_assert!(instance_le(&t, &principal));
        prop_assert!(top_check(&defs, &CheckEnv::new(), &e, &univ(&TypeScheme::closed(t))));
        prop_assert!(top_check(&defs, &CheckEnv::new(), &e, &univ(&principal)));
    }

    #[test]
    fn equivalence_sampling(seed in any::<u64>(), budget in 1usize..40) {
        let defs = prelude();
        let (e, t) = gen_typed_program(seed, budget, &defs);
        if has_fix(&e) {
            return Ok(());
        }
        let sigma = univ(&TypeScheme::closed(t));
        prop_assert!(top_check(&defs, &CheckEnv::new(), &e, &sigma));
        let principal = hm_infer(&defs, &TypeEnv::new(), &e).unwrap();
        let scheme = schema(&sigma);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
        for _ in 0..8 {
            let theta = scheme.vars.iter().map(|a| (a.clone(), random_type(&mut rng, &defs, 2))).collect();
            let tau = subst(&scheme.body, &theta);
            prop_assert!(instance_le(&tau, &principal), "{:?} not an instance of {:?}", tau, principal);
        }
    }

    #[test]
    fn univ_and_schema_are_inverse_on_closed_types(seed in any::<u64>()) {
        let defs = prelude();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_type(&mut rng, &defs, 4);
        let g = generalize(&mut rng, &univ(&TypeScheme::closed(t)));
        prop_assert_eq!(univ(&schema(&g)), g.clone());
        let h = generalize(&mut rng, &g);
        prop_assert!(closed_le(&g, &h));
    }
}
