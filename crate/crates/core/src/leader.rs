//! The composed leader optimizers: zeroth-order search over the follower's
//! action space, with inducement loops supplying approximate objective
//! evaluations at every query.
//!
//! Profit runs restrict the search to the interior shrink of the bundle
//! space so the inducing price is unique (the valuation gradient at the
//! bundle) and the observed revenue really is the bundle's revenue. The
//! observed objective is always computed from the leader's own bookkeeping
//! (prices paid, bundles seen), never from the follower's private valuation.

use crate::error::{Error, Result};
use crate::follower::{FollowerOracle, Responder, ResponseMode};
use crate::induce::{learn_price, learn_price_attempt, learn_price_noisy, learn_price_noisy_attempt, InduceConfig};
use crate::preferences::CostFunction;
use crate::vector::Vector;
use crate::zoo::{minimize, ObjectiveEvaluator, ZooConfig, ZooMethod, ZooOutcome};

/// `ln 2 / (2 pi)` — the sub-gaussian tail constant of the utility
/// averaging bound.
pub const GAUSSIAN_TAIL_CONSTANT: f64 = core::f64::consts::LN_2 / core::f64::consts::TAU;

#[derive(Clone, Debug)]
pub enum StackelbergInstance {
    /// Producer posts prices, consumer buys a bundle; leader objective is
    /// revenue minus production cost.
    Profit {
        oracle: FollowerOracle,
        cost: CostFunction,
        lambda_l: f64,
    },
    /// Principal pays a noisy agent per realized contribution; leader
    /// objective is value minus payment.
    Procurement {
        oracle: FollowerOracle,
        values: Vector,
        lambda_l: f64,
    },
    /// Toll authority minimizing equilibrium social cost.
    Routing {
        game: crate::routing::RoutingGame,
        lambda_l: f64,
    },
}

impl StackelbergInstance {
    pub fn profit(oracle: FollowerOracle, cost: CostFunction) -> Result<Self> {
        if cost.dim() != oracle.dim() {
            return Err(Error::DimensionMismatch {
                expected: oracle.dim(),
                got: cost.dim(),
            });
        }
        let (lambda_val, _) = oracle.valuation().holder_constants();
        let lambda_cost = cost.lipschitz_bound(oracle.valuation().region_bound());
        Ok(StackelbergInstance::Profit {
            lambda_l: lambda_val + lambda_cost,
            oracle,
            cost,
        })
    }

    pub fn procurement(oracle: FollowerOracle, values: Vector) -> Result<Self> {
        if values.dim() != oracle.dim() {
            return Err(Error::DimensionMismatch {
                expected: oracle.dim(),
                got: values.dim(),
            });
        }
        if !oracle.is_paid() {
            return Err(Error::Config("procurement needs a paid agent oracle".into()));
        }
        let lambda_l = values.norm() + 2.0 * oracle.valuation().lipschitz_bound();
        Ok(StackelbergInstance::Procurement {
            oracle,
            values,
            lambda_l,
        })
    }

    pub fn routing(game: crate::routing::RoutingGame) -> Self {
        let lambda_l = game.social_cost_lipschitz();
        StackelbergInstance::Routing { game, lambda_l }
    }

    pub fn lambda_l(&self) -> f64 {
        match self {
            StackelbergInstance::Profit { lambda_l, .. }
            | StackelbergInstance::Procurement { lambda_l, .. }
            | StackelbergInstance::Routing { lambda_l, .. } => *lambda_l,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LeaderTraceRow {
    pub iteration: usize,
    pub target: Vector,
    /// Norm of the leader action learned for this query.
    pub leader_action_norm: f64,
    pub distance_achieved: f64,
    pub observed_objective: f64,
    pub cumulative_queries: u64,
}

#[derive(Clone, Debug)]
pub struct LeaderResult {
    pub leader_action: Vector,
    pub induced: Vector,
    pub achieved_objective: f64,
    pub total_follower_queries: u64,
    pub zoo_queries: usize,
    pub trace: Vec<LeaderTraceRow>,
    /// False when a desk-scale cap loosened the published schedule.
    pub certified: bool,
    /// Inducement accuracy actually used.
    pub epsilon_used: f64,
}

#[derive(Clone, Debug)]
pub struct LeaderOptions {
    /// Lower cap on the schedule's inducement accuracy. The published
    /// schedules produce impractically small epsilons for small alpha; a
    /// floored run is flagged non-certified instead of silently weakened.
    pub epsilon_floor: Option<f64>,
    /// Refuse to run rather than produce a non-certified result.
    pub require_certified: bool,
    pub zoo_budget: usize,
    pub zoo_method: Option<ZooMethod>,
    pub zoo_seed: u64,
    pub induce_override_t: Option<usize>,
    pub induce_override_eta: Option<f64>,
    pub check_every: usize,
    /// Utility observations averaged per noisy evaluation (caps the
    /// published `s`).
    pub samples_per_eval: Option<usize>,
}

impl Default for LeaderOptions {
    fn default() -> Self {
        LeaderOptions {
            epsilon_floor: None,
            require_certified: false,
            zoo_budget: 2000,
            zoo_method: None,
            zoo_seed: 0,
            induce_override_t: Some(5000),
            induce_override_eta: None,
            check_every: 50,
            samples_per_eval: None,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct OproSchedule {
    pub epsilon: f64,
    pub delta: f64,
    pub alpha_prime: f64,
}

/// Profit-run schedule:
/// `eps = min((alpha / (lam (d+1+(12 gamma)^beta)))^(1/beta), 1/(12 gamma))`,
/// `delta = 4 eps`, `alpha' = d eps^beta lam`, with `lam` the summed
/// valuation and cost constants.
pub fn opro_schedule(
    d: usize,
    lambda_val: f64,
    lambda_cost: f64,
    holder_beta: f64,
    gamma: f64,
    alpha: f64,
) -> OproSchedule {
    let df = d as f64;
    let lam = lambda_val + lambda_cost;
    let epsilon = (alpha / (lam * (df + 1.0 + (12.0 * gamma).powf(holder_beta))))
        .powf(1.0 / holder_beta)
        .min(1.0 / (12.0 * gamma));
    OproSchedule {
        epsilon,
        delta: 4.0 * epsilon,
        alpha_prime: df * epsilon.powf(holder_beta) * lam,
    }
}

#[derive(Clone, Copy, Debug)]
pub struct OproNoisySchedule {
    pub epsilon: f64,
    pub delta: f64,
    pub alpha_prime: f64,
    pub beta_prime: f64,
    /// Observations averaged per evaluation:
    /// `s = 2 d ln(2/beta') / (a eps^2)` with `a = ln 2 / (2 pi)`.
    pub samples: f64,
}

pub fn opro_noisy_schedule(
    d: usize,
    gamma: f64,
    alpha: f64,
    beta_c: f64,
    zoo_budget: usize,
) -> OproNoisySchedule {
    let df = d as f64;
    let epsilon = alpha / (12.0 * gamma + 3.0 * df);
    let beta_prime = beta_c / (2.0 * zoo_budget as f64);
    let samples =
        2.0 * df * (2.0 / beta_prime).ln() / (GAUSSIAN_TAIL_CONSTANT * epsilon * epsilon);
    OproNoisySchedule {
        epsilon,
        delta: 2.0 * epsilon,
        alpha_prime: 3.0 * df * epsilon,
        beta_prime,
        samples,
    }
}

struct ProfitEvaluator<'a> {
    oracle: &'a mut FollowerOracle,
    cost: &'a CostFunction,
    cfg: InduceConfig,
    trace: Vec<LeaderTraceRow>,
    all_induced: bool,
}

impl ObjectiveEvaluator for ProfitEvaluator<'_> {
    fn evaluate(&mut self, target: &Vector) -> Result<f64> {
        // a target that resists inducement within the budget still yields a
        // valid profit observation at the achieved bundle; the run is then
        // flagged non-certified
        let (out, hit) = learn_price_attempt(self.oracle, target, &self.cfg)?;
        self.all_induced &= hit;
        let profit = out.leader_action.dot(&out.induced) - self.cost.evaluate(&out.induced)?;
        self.trace.push(LeaderTraceRow {
            iteration: self.trace.len() + 1,
            target: target.clone(),
            leader_action_norm: out.leader_action.norm(),
            distance_achieved: out.induced.dist(target),
            observed_objective: profit,
            cumulative_queries: self.oracle.query_count(),
        });
        Ok(-profit)
    }
}

fn pick_zoo_method(opts: &LeaderOptions, dim: usize) -> ZooMethod {
    opts.zoo_method.unwrap_or(if dim <= 3 {
        ZooMethod::GridRefine
    } else {
        ZooMethod::SmoothedGradient
    })
}

fn floored_epsilon(schedule_eps: f64, opts: &LeaderOptions) -> Result<(f64, bool)> {
    let eps = opts.epsilon_floor.map_or(schedule_eps, |f| schedule_eps.max(f));
    let floored = eps > schedule_eps * (1.0 + 1e-12);
    if floored && opts.require_certified {
        return Err(Error::Config(format!(
            "schedule epsilon {schedule_eps:.3e} below the floor; cannot certify"
        )));
    }
    Ok((eps, floored))
}

/// Profit maximization from revealed responses: zeroth-order search over the
/// shrunk bundle space, each query answered by a price-inducing run.
/// Returns a final price whose expected profit is within `alpha` of optimal
/// (per the published schedules; floored desk runs are flagged).
pub fn opro(instance: StackelbergInstance, alpha: f64) -> Result<LeaderResult> {
    opro_with(instance, alpha, &LeaderOptions::default())
}

pub fn opro_with(
    instance: StackelbergInstance,
    alpha: f64,
    opts: &LeaderOptions,
) -> Result<LeaderResult> {
    let (mut oracle, cost, _lambda_l) = match instance {
        StackelbergInstance::Profit {
            oracle,
            cost,
            lambda_l,
        } => (oracle, cost, lambda_l),
        _ => return Err(Error::Config("opro runs profit instances only".into())),
    };
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::Config("alpha must be positive".into()));
    }
    oracle.valuation().homogeneity_degree().map_err(|_| {
        Error::Config("profit maximization needs a homogeneous valuation".into())
    })?;
    let d = oracle.dim();
    let (lambda_val, holder_beta) = oracle.valuation().holder_constants();
    let lambda_cost = cost.lipschitz_bound(oracle.valuation().region_bound());
    let sigma = oracle.valuation().strong_concavity_constant();
    let gamma = oracle.feasible().norm_bound();

    let schedule = opro_schedule(d, lambda_val, lambda_cost, holder_beta, gamma, alpha);
    let (epsilon, floored) = floored_epsilon(schedule.epsilon, opts)?;
    let delta = 4.0 * epsilon;
    let alpha_prime = d as f64 * epsilon.powf(holder_beta) * (lambda_val + lambda_cost);

    let search_space = oracle.feasible().shrink(delta)?;
    let start_queries = oracle.query_count();
    let induce_cfg = InduceConfig::new(epsilon, lambda_val, gamma, sigma)
        .with_holder_beta(holder_beta)
        .with_overrides(
            opts.induce_override_t,
            opts.induce_override_eta.or(Some(sigma)),
        );
    let mut evaluator = ProfitEvaluator {
        oracle: &mut oracle,
        cost: &cost,
        cfg: induce_cfg.clone(),
        trace: Vec::new(),
        all_induced: true,
    };
    let zoo_cfg = ZooConfig::new(
        alpha_prime,
        pick_zoo_method(opts, d),
        opts.zoo_budget,
        opts.zoo_seed,
    );
    let outcome: ZooOutcome = minimize(&mut evaluator, &search_space, &zoo_cfg)?;
    let all_induced = evaluator.all_induced;
    let trace = std::mem::take(&mut evaluator.trace);

    let final_run = learn_price(&mut oracle, &outcome.point, &induce_cfg)?;
    let profit =
        final_run.leader_action.dot(&final_run.induced) - cost.evaluate(&final_run.induced)?;
    Ok(LeaderResult {
        leader_action: final_run.leader_action,
        induced: final_run.induced,
        achieved_objective: profit,
        total_follower_queries: oracle.query_count() - start_queries,
        zoo_queries: outcome.calls,
        trace,
        certified: !floored && outcome.certified && all_induced,
        epsilon_used: epsilon,
    })
}

/// General leader optimization: profit instances restrict to the interior
/// shrink and reuse the pricing pipeline; routing instances search the
/// path-flow simplex with the toll-enforcement oracle.
pub fn learn_opt(instance: StackelbergInstance, alpha: f64) -> Result<LeaderResult> {
    learn_opt_with(instance, alpha, &LeaderOptions::default())
}

pub fn learn_opt_with(
    instance: StackelbergInstance,
    alpha: f64,
    opts: &LeaderOptions,
) -> Result<LeaderResult> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::Config("alpha must be positive".into()));
    }
    match instance {
        StackelbergInstance::Profit {
            oracle,
            cost,
            lambda_l,
        } => {
            // epsilon = alpha / (lambda_L (d + 1)); evaluations are then
            // within lambda_L * eps and the search loses at most
            // (d + 1) eps lambda_L overall.
            let d = oracle.dim();
            let epsilon_opt = alpha / (lambda_l * (d as f64 + 1.0));
            let (lambda_val, holder_beta) = oracle.valuation().holder_constants();
            let schedule_eps = epsilon_opt.min(1.0 / (12.0 * oracle.feasible().norm_bound()));
            let (epsilon, floored) = floored_epsilon(schedule_eps, opts)?;
            let alpha_prime = d as f64 * epsilon.powf(holder_beta) * lambda_l;
            let mut inner_opts = opts.clone();
            inner_opts.epsilon_floor = Some(epsilon);
            let mut out = opro_with(
                StackelbergInstance::Profit {
                    oracle,
                    cost,
                    lambda_l,
                },
                (alpha_prime + lambda_l * epsilon.powf(holder_beta)).max(alpha),
                &inner_opts,
            )?;
            out.certified = out.certified && !floored;
            let _ = lambda_val;
            Ok(out)
        }
        StackelbergInstance::Routing { game, lambda_l } => {
            let toll_opts = crate::routing::TollOptimizeOptions {
                lambda_l: Some(lambda_l),
                leader: opts.clone(),
                enforce: crate::routing::EnforceOptions {
                    override_t: opts.induce_override_t,
                    override_eta: opts.induce_override_eta,
                    equilibrium_tol: None,
                    check_every: opts.check_every,
                },
            };
            crate::routing::optimize_tolls(&game, alpha, &toll_opts)
        }
        StackelbergInstance::Procurement { .. } => Err(Error::Config(
            "procurement instances are optimized under noise; use opro_noisy".into(),
        )),
    }
}

struct ProcurementEvaluator<'a> {
    oracle: &'a mut FollowerOracle,
    values: &'a Vector,
    cfg: InduceConfig,
    beta_prime: f64,
    samples: usize,
    trace: Vec<LeaderTraceRow>,
    all_induced: bool,
}

impl ProcurementEvaluator<'_> {
    fn observe_utility(&mut self, price: &Vector) -> Result<f64> {
        let mut sum = 0.0;
        for _ in 0..self.samples {
            let realized = self.oracle.respond(price)?;
            sum += (self.values - price).dot(&realized);
        }
        Ok(sum / self.samples as f64)
    }
}

impl ObjectiveEvaluator for ProcurementEvaluator<'_> {
    fn evaluate(&mut self, target: &Vector) -> Result<f64> {
        let (out, hit) =
            learn_price_noisy_attempt(self.oracle, target, &self.cfg, self.beta_prime)?;
        self.all_induced &= hit;
        let mean_utility = self.observe_utility(&out.leader_action)?;
        self.trace.push(LeaderTraceRow {
            iteration: self.trace.len() + 1,
            target: target.clone(),
            leader_action_norm: out.leader_action.norm(),
            distance_achieved: out.induced.dist(target),
            observed_objective: mean_utility,
            cumulative_queries: self.oracle.query_count(),
        });
        Ok(-mean_utility)
    }
}

/// Principal-agent optimization under gaussian observation noise: each
/// evaluation is the average of `s` realized utilities at a contract learned
/// by the stochastic inducing loop.
pub fn opro_noisy(
    instance: StackelbergInstance,
    alpha: f64,
    beta_c: f64,
) -> Result<LeaderResult> {
    opro_noisy_with(instance, alpha, beta_c, &LeaderOptions::default())
}

pub fn opro_noisy_with(
    instance: StackelbergInstance,
    alpha: f64,
    beta_c: f64,
    opts: &LeaderOptions,
) -> Result<LeaderResult> {
    let (mut oracle, values, _lambda_l) = match instance {
        StackelbergInstance::Procurement {
            oracle,
            values,
            lambda_l,
        } => (oracle, values, lambda_l),
        _ => {
            return Err(Error::Config(
                "opro_noisy runs procurement instances only".into(),
            ))
        }
    };
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::Config("alpha must be positive".into()));
    }
    if !beta_c.is_finite() || beta_c <= 0.0 || beta_c >= 0.5 {
        return Err(Error::Config("confidence must lie in (0, 1/2)".into()));
    }
    if !matches!(oracle.mode(), ResponseMode::Noisy { .. }) {
        return Err(Error::Config("opro_noisy requires a noisy oracle".into()));
    }
    let d = oracle.dim();
    let gamma = oracle.feasible().norm_bound();
    let sigma = oracle.valuation().strong_concavity_constant();
    let lambda_agent = oracle.valuation().lipschitz_bound().max(1.0);

    let schedule = opro_noisy_schedule(d, gamma, alpha, beta_c, opts.zoo_budget);
    let (epsilon, floored) = floored_epsilon(schedule.epsilon, opts)?;
    let delta = 2.0 * epsilon;
    let alpha_prime = 3.0 * d as f64 * epsilon;
    let published_samples = schedule.samples.ceil();
    let samples = match opts.samples_per_eval {
        Some(s) if s > 0 => s,
        _ => published_samples.min(200.0) as usize,
    };
    let samples_capped = (samples as f64) < published_samples;

    let search_space = oracle.feasible().shrink(delta)?;
    let start_queries = oracle.query_count();
    let induce_cfg = InduceConfig::new(epsilon, lambda_agent, gamma, sigma).with_overrides(
        opts.induce_override_t,
        opts.induce_override_eta.or(Some(sigma.min(1.0))),
    );
    let mut evaluator = ProcurementEvaluator {
        oracle: &mut oracle,
        values: &values,
        cfg: induce_cfg.clone(),
        beta_prime: schedule.beta_prime,
        samples,
        trace: Vec::new(),
        all_induced: true,
    };
    let zoo_cfg = ZooConfig::new(
        alpha_prime,
        pick_zoo_method(opts, d),
        opts.zoo_budget,
        opts.zoo_seed,
    );
    let outcome = minimize(&mut evaluator, &search_space, &zoo_cfg)?;
    let all_induced = evaluator.all_induced;
    let trace = std::mem::take(&mut evaluator.trace);

    let final_run = learn_price_noisy(&mut oracle, &outcome.point, &induce_cfg, schedule.beta_prime)?;
    let mut finisher = ProcurementEvaluator {
        oracle: &mut oracle,
        values: &values,
        cfg: induce_cfg,
        beta_prime: schedule.beta_prime,
        samples,
        trace: Vec::new(),
        all_induced: true,
    };
    let achieved = finisher.observe_utility(&final_run.leader_action)?;
    Ok(LeaderResult {
        leader_action: final_run.leader_action,
        induced: final_run.induced,
        achieved_objective: achieved,
        total_follower_queries: oracle.query_count() - start_queries,
        zoo_queries: outcome.calls,
        trace,
        certified: !floored && !samples_capped && outcome.certified && all_induced,
        epsilon_used: epsilon,
    })
}
