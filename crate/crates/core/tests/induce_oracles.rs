//! Oracle-backed checks of the inducement machinery on the quadratic
//! instance, where the Lagrangian dual is computable in closed form.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stackopt::follower::{FollowerOracle, Responder, ResponseMode};
use stackopt::geometry::FeasibleSet;
use stackopt::induce::{learn_price, InduceConfig};
use stackopt::preferences::Valuation;
use stackopt::vector::Vector;

const Q: f64 = 1.0;

fn quadratic_setup() -> (Valuation, FeasibleSet, Vector) {
    let a = Vector::from(vec![1.0, 0.8]);
    let v = Valuation::quadratic(a.clone(), Q, 2.0).unwrap();
    let set = FeasibleSet::axis_box(Vector::zeros(2), Vector::filled(2, 2.0)).unwrap();
    (v, set, a)
}

/// Closed-form best response: clamp((a - p)/q) onto the box.
fn best_response(a: &Vector, p: &Vector) -> Vector {
    Vector::from(
        a.iter()
            .zip(p.iter())
            .map(|(ai, pi)| ((ai - pi) / Q).clamp(0.0, 2.0))
            .collect::<Vec<_>>(),
    )
}

/// Dual of the target-inducing program: `g(p) = max_x v(x) - <p, x - target>`.
fn dual(a: &Vector, v: &Valuation, target: &Vector, p: &Vector) -> f64 {
    let x = best_response(a, p);
    v.value(&x).unwrap() - p.dot(&(&x - target))
}

#[test]
fn observed_response_is_a_dual_subgradient() {
    let (v, _set, a) = quadratic_setup();
    let target = Vector::from(vec![0.5, 0.4]);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..300 {
        let p = Vector::from(vec![rng.random_range(0.0..1.5), rng.random_range(0.0..1.5)]);
        let p2 = Vector::from(vec![rng.random_range(0.0..1.5), rng.random_range(0.0..1.5)]);
        let sub = &target - &best_response(&a, &p);
        let lhs = dual(&a, &v, &target, &p2);
        let rhs = dual(&a, &v, &target, &p) + sub.dot(&(&p2 - &p));
        assert!(
            lhs >= rhs - 1e-8,
            "subgradient inequality violated: {lhs} < {rhs}"
        );
    }
}

#[test]
fn best_dual_value_over_iterates_is_nonincreasing() {
    let (v, set, a) = quadratic_setup();
    let target = Vector::from(vec![0.5, 0.4]);
    let mut oracle =
        FollowerOracle::new(v.clone(), set, ResponseMode::Exact { tol: 1e-9 }, 0).unwrap();
    let cfg = InduceConfig::new(0.01, v.lipschitz_bound(), 2.0 * 2f64.sqrt(), Q)
        .with_overrides(Some(4000), Some(0.4));
    let out = learn_price(&mut oracle, &target, &cfg).unwrap();
    let mut best = f64::INFINITY;
    let mut bests = Vec::new();
    for row in &out.trace {
        let g = dual(&a, &v, &target, &row.leader_action);
        best = best.min(g);
        bests.push(best);
    }
    for pair in bests.windows(2) {
        assert!(pair[1] <= pair[0] + 1e-12);
    }
    // final dual gap small enough for the distance guarantee
    let final_gap = dual(&a, &v, &target, &out.leader_action) - v.value(&target).unwrap();
    assert!(out.induced.dist(&target) <= 2.0 * (final_gap.max(0.0) / Q).sqrt() + 1e-6);
}

#[test]
fn regret_matches_gradient_descent_bound() {
    // fixed horizon, schedule step, no early exit: average Lagrangian loss
    // of the leader minus the best fixed action in hindsight is at most
    // G D / sqrt(T) with G = gamma sqrt(2), D = sqrt(d) L.
    let (v, set, a) = quadratic_setup();
    let target = Vector::from(vec![0.5, 0.4]);
    let t = 2000usize;
    let d = 2usize;
    let lambda = v.lipschitz_bound();
    let gamma = 2.0 * 2f64.sqrt();
    let radius = (d as f64).sqrt() * lambda;
    let eta = 2f64.sqrt() * gamma / (lambda * ((d as f64) * t as f64).sqrt());
    let mut oracle =
        FollowerOracle::new(v.clone(), set, ResponseMode::Exact { tol: 1e-9 }, 0).unwrap();
    let mut cfg = InduceConfig::new(0.8, lambda, gamma, Q).with_overrides(Some(t), Some(eta));
    cfg.check_every = 0;
    let out = learn_price(&mut oracle, &target, &cfg).unwrap();
    assert_eq!(out.trace.len(), t);

    let lagrangian = |x: &Vector, p: &Vector| v.value(x).unwrap() - p.dot(&(&*x - &target));
    let avg_play: f64 = out
        .trace
        .iter()
        .map(|row| lagrangian(&row.response, &row.leader_action))
        .sum::<f64>()
        / t as f64;
    // best fixed price in hindsight over the nonneg ball of radius D
    let mean_gap = {
        let mut acc = Vector::zeros(d);
        for row in &out.trace {
            acc = acc.axpy(1.0, &(&row.response - &target));
        }
        acc.scale(1.0 / t as f64)
    };
    let space = FeasibleSet::nonneg_ball(d, radius).unwrap();
    let avg_value: f64 = out
        .trace
        .iter()
        .map(|row| v.value(&row.response).unwrap())
        .sum::<f64>()
        / t as f64;
    let hindsight = avg_value - space.support_max(&mean_gap);
    let regret = avg_play - hindsight;
    let bound = gamma * 2f64.sqrt() * radius / (t as f64).sqrt();
    assert!(
        regret <= bound * 1.1,
        "regret {regret} above bound {bound}"
    );
    let _ = a;
}

#[test]
fn query_accounting_includes_probe_rows() {
    let (v, set, _) = quadratic_setup();
    let target = Vector::from(vec![0.5, 0.4]);
    let mut oracle =
        FollowerOracle::new(v.clone(), set, ResponseMode::Exact { tol: 1e-9 }, 0).unwrap();
    let cfg = InduceConfig::new(5e-3, v.lipschitz_bound(), 2.0 * 2f64.sqrt(), Q)
        .with_overrides(Some(3000), Some(0.4));
    let out = learn_price(&mut oracle, &target, &cfg).unwrap();
    assert_eq!(out.queries, oracle.query_count());
    assert_eq!(out.queries as usize, out.trace.len() + 1);
}
