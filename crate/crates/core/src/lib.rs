//! Learning to optimize in leader-follower games from revealed responses.
//!
//! A leader (a producer posting prices, a principal posting contracts, a
//! toll authority) repeatedly acts, observes only the follower's best
//! response (possibly approximate or noise-perturbed), and converges to a
//! leader-optimal action. The machinery is organized as:
//!
//! * [`geometry`] — convex feasible sets with exact projections and the
//!   interior-shrink transform;
//! * [`preferences`] — CES / Cobb-Douglas / quadratic valuations, producer
//!   costs, and the bundle-space profit function;
//! * [`follower`] — the simulated follower with exact, approximate, and
//!   noisy response modes;
//! * [`induce`] / [`ellipsoid`] — learning an action that induces a chosen
//!   follower response (projected dual subgradient descent, central-cut
//!   ellipsoid);
//! * [`zoo`] — zeroth-order convex minimization from approximate
//!   evaluations over rounded bodies;
//! * [`leader`] — the composed optimizers (profit, general Stackelberg,
//!   noisy principal-agent);
//! * [`routing`] — nonatomic congestion games: Wardrop equilibria,
//!   target-flow enforcement, and optimal tolling.

pub mod error;
pub mod vector;
pub mod geometry;
pub mod preferences;
pub mod follower;
pub mod induce;
pub mod ellipsoid;
pub mod zoo;
pub mod leader;
pub mod routing;
pub mod stats;

pub use error::{Error, Result};
pub use follower::{best_response_exact, FollowerOracle, Responder, ResponseMode};
pub use geometry::FeasibleSet;
pub use induce::{
    learn_lead, learn_price, learn_price_noisy, Direction, InduceConfig, InduceResult,
};
pub use ellipsoid::{learn_price_ellipsoid, Ellipsoid};
pub use leader::{
    learn_opt, opro, opro_noisy, LeaderOptions, LeaderResult, StackelbergInstance,
};
pub use preferences::{profit_of_bundle, CostFunction, Valuation};
pub use routing::{
    braess_social_cost, enforce_target_flow, optimize_tolls, parse_game, wardrop_equilibrium,
    RoutingGame,
};
pub use vector::Vector;
pub use zoo::{round_set, ZooConfig, ZooMethod};
