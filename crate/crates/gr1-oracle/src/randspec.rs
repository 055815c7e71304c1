//! Seeded random GR(1) specifications for differential testing.
//!
//! Specs are small by construction (joint state space of at most 64) so the
//! parity-game oracle stays fast, and they always satisfy the shape rules:
//! primed atoms appear only where the section allows them, progress lists
//! are non-empty, and the environment initial condition is satisfiable
//! (enforced by enumeration, falling back to `true`).

use gr1::rng::StreamRng;
use gr1::vars::{Owner, Valuation, VarDecl};
use gr1::{eval_expr, validate_spec, BoolExpr, GR1Spec};

/// Where primed atoms may appear while generating one formula.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Priming {
    Forbidden,
    EnvironmentOnly,
    Anywhere,
}

fn var_pattern(rng: &mut StreamRng, owner: Owner) -> Vec<VarDecl> {
    let prefix = match owner {
        Owner::Environment => "e",
        Owner::System => "s",
    };
    let name = |i: usize| format!("{prefix}{i}");
    match rng.next_below(6) {
        0 => vec![VarDecl::boolean(name(0), owner)],
        1 | 2 => vec![
            VarDecl::boolean(name(0), owner),
            VarDecl::boolean(name(1), owner),
        ],
        3 => vec![
            VarDecl::boolean(name(0), owner),
            VarDecl::boolean(name(1), owner),
            VarDecl::boolean(name(2), owner),
        ],
        4 => vec![VarDecl::enumerated(name(0), owner, ["lo", "mid", "hi"])],
        _ => vec![
            VarDecl::enumerated(name(0), owner, ["lo", "mid", "hi"]),
            VarDecl::boolean(name(1), owner),
        ],
    }
}

fn gen_formula(
    rng: &mut StreamRng,
    pool: &[VarDecl],
    depth: u32,
    priming: Priming,
) -> BoolExpr {
    let leaf = depth == 0 || rng.next_below(100) < 30;
    if leaf {
        match rng.next_below(20) {
            0 | 1 => return BoolExpr::True,
            2 => return BoolExpr::False,
            _ => {}
        }
        let d = &pool[rng.next_below(pool.len() as u64) as usize];
        let value = d.domain[rng.next_below(d.domain.len() as u64) as usize].clone();
        let may_prime = match priming {
            Priming::Forbidden => false,
            Priming::EnvironmentOnly => d.owner == Owner::Environment,
            Priming::Anywhere => true,
        };
        let primed = may_prime && rng.next_below(2) == 1;
        return BoolExpr::Atom {
            var: d.name.clone(),
            value,
            primed,
        };
    }
    match rng.next_below(100) {
        0..=20 => gen_formula(rng, pool, depth - 1, priming).not(),
        21..=48 => gen_formula(rng, pool, depth - 1, priming)
            .and(gen_formula(rng, pool, depth - 1, priming)),
        49..=76 => gen_formula(rng, pool, depth - 1, priming)
            .or(gen_formula(rng, pool, depth - 1, priming)),
        _ => gen_formula(rng, pool, depth - 1, priming)
            .implies(gen_formula(rng, pool, depth - 1, priming)),
    }
}

fn env_satisfiable(theta: &BoolExpr, env: &[VarDecl]) -> bool {
    let mut vals = vec![Valuation::new()];
    for d in env {
        let mut next = Vec::with_capacity(vals.len() * d.domain.len());
        for v in &vals {
            for value in &d.domain {
                let mut w = v.clone();
                w.set(d.name.clone(), value.clone());
                next.push(w);
            }
        }
        vals = next;
    }
    vals
        .iter()
        .any(|v| eval_expr(theta, v, None).expect("env-only formula"))
}

/// Deterministic random specification for the stream `(seed, round)`.
pub fn random_spec(seed: u64, round: u64) -> GR1Spec {
    let mut rng = StreamRng::new(seed, round, 0);
    let env = var_pattern(&mut rng, Owner::Environment);
    let sys = var_pattern(&mut rng, Owner::System);
    let mut vars = env.clone();
    vars.extend(sys.clone());

    let theta_env = if rng.next_below(10) < 3 {
        BoolExpr::True
    } else {
        let f = gen_formula(&mut rng, &env, 2, Priming::Forbidden);
        if env_satisfiable(&f, &env) {
            f
        } else {
            BoolExpr::True
        }
    };
    let theta_sys = if rng.next_below(10) < 3 {
        BoolExpr::True
    } else {
        gen_formula(&mut rng, &vars, 2, Priming::Forbidden)
    };

    let safety =
        |rng: &mut StreamRng, vars: &[VarDecl], priming: Priming| -> Vec<BoolExpr> {
            let count = rng.next_below(3);
            (0..count)
                .map(|_| {
                    let depth = 1 + rng.next_below(3) as u32;
                    gen_formula(rng, vars, depth, priming)
                })
                .collect()
        };
    let env_safety = safety(&mut rng, &vars, Priming::EnvironmentOnly);
    let sys_safety = safety(&mut rng, &vars, Priming::Anywhere);

    let progress = |rng: &mut StreamRng, vars: &[VarDecl]| -> Vec<BoolExpr> {
        let count = 1 + rng.next_below(2);
        (0..count)
            .map(|_| {
                let depth = 1 + rng.next_below(2) as u32;
                gen_formula(rng, vars, depth, Priming::Forbidden)
            })
            .collect()
    };
    let env_progress = progress(&mut rng, &vars);
    let sys_progress = progress(&mut rng, &vars);

    let spec = GR1Spec {
        vars,
        theta_env,
        theta_sys,
        env_safety,
        sys_safety,
        env_progress,
        sys_progress,
    };
    debug_assert!(
        validate_spec(&spec).is_empty(),
        "generator must emit well-shaped specs"
    );
    spec
}
