//! The simulated follower: exact, approximately-optimal, and noise-perturbed
//! best responses to leader actions, with query accounting.
//!
//! The leader-side algorithms observe the instance only through
//! [`Responder::respond`], so the oracle is the single choke point for query
//! counting and for injecting approximation or noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::FeasibleSet;
use crate::preferences::Valuation;
use crate::vector::Vector;

/// Anything that maps a leader action to an observed follower action.
pub trait Responder {
    fn respond(&mut self, action: &Vector) -> Result<Vector>;
    fn query_count(&self) -> u64;
    fn dim(&self) -> usize;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ResponseMode {
    /// Returned action is within `tol` (Euclidean) of the true argmax.
    Exact { tol: f64 },
    /// Returned action is utility-optimal up to `zeta`.
    Approximate { zeta: f64 },
    /// True argmax plus `N(0, nu^2 I)` noise; may leave the feasible set.
    Noisy { nu: f64 },
}

#[derive(Clone, Debug)]
pub struct FollowerOracle {
    valuation: Valuation,
    feasible: FeasibleSet,
    mode: ResponseMode,
    /// `false`: quasi-linear consumer paying `<p, x>`. `true`: agent being
    /// paid `<p, x>` on top of `valuation` (which then carries the negated
    /// production cost).
    paid: bool,
    queries: u64,
    rng: ChaCha8Rng,
    warm: Option<Vector>,
    iteration_cap: usize,
}

impl FollowerOracle {
    pub fn new(
        valuation: Valuation,
        feasible: FeasibleSet,
        mode: ResponseMode,
        rng_seed: u64,
    ) -> Result<Self> {
        if feasible.dim() != valuation.dim() {
            return Err(Error::DimensionMismatch {
                expected: valuation.dim(),
                got: feasible.dim(),
            });
        }
        if !matches!(valuation.kind(), crate::preferences::ValuationKind::Quadratic { .. }) {
            // CES / Cobb-Douglas blow up at zero: insist the feasible set
            // respects the valuation's floor on every axis.
            for i in 0..feasible.dim() {
                let mut e = Vector::zeros(feasible.dim());
                e.set(i, -1.0);
                let axis_min = -feasible.support_max(&e);
                if axis_min < valuation.floor() - 1e-12 {
                    return Err(Error::InvalidParameter(format!(
                        "feasible set reaches {axis_min:.3e} on axis {i}, below the valuation floor {:.3e}",
                        valuation.floor()
                    )));
                }
            }
        }
        match mode {
            ResponseMode::Exact { tol } if !tol.is_finite() || tol <= 0.0 => {
                return Err(Error::InvalidParameter("exact tolerance must be positive".into()))
            }
            ResponseMode::Approximate { zeta } if !zeta.is_finite() || zeta <= 0.0 => {
                return Err(Error::InvalidParameter("zeta must be positive".into()))
            }
            ResponseMode::Noisy { nu } if nu < 0.0 => {
                return Err(Error::InvalidParameter("noise level must be nonnegative".into()))
            }
            _ => {}
        }
        Ok(FollowerOracle {
            valuation,
            feasible,
            mode,
            paid: false,
            queries: 0,
            rng: ChaCha8Rng::seed_from_u64(rng_seed),
            warm: None,
            iteration_cap: 1_000_000,
        })
    }

    /// Marks this follower as one the leader pays (principal-agent
    /// orientation): utility becomes `valuation(x) + <p, x>`.
    pub fn into_paid(mut self) -> Self {
        self.paid = true;
        self
    }

    pub fn is_paid(&self) -> bool {
        self.paid
    }

    pub fn valuation(&self) -> &Valuation {
        &self.valuation
    }

    pub fn feasible(&self) -> &FeasibleSet {
        &self.feasible
    }

    pub fn mode(&self) -> ResponseMode {
        self.mode
    }

    pub fn utility(&self, x: &Vector, p: &Vector) -> Result<f64> {
        let sign = if self.paid { 1.0 } else { -1.0 };
        Ok(self.valuation.value(x)? + sign * p.dot(x))
    }

    /// The true best response at the oracle's own exactness (1e-9), outside
    /// the query count. Test and verification helper.
    pub fn true_best_response(&self, p: &Vector) -> Result<Vector> {
        best_response_exact_signed(
            &self.valuation,
            &self.feasible,
            p,
            1e-9,
            self.warm.as_ref(),
            self.iteration_cap,
            self.paid,
        )
    }
}

impl Responder for FollowerOracle {
    fn respond(&mut self, p: &Vector) -> Result<Vector> {
        p.check_dim(self.feasible.dim())?;
        if p.min_entry() < 0.0 {
            return Err(Error::InvalidParameter("leader action must be nonnegative".into()));
        }
        self.queries += 1;
        match self.mode {
            ResponseMode::Exact { tol } => {
                let x = best_response_exact_signed(
                    &self.valuation,
                    &self.feasible,
                    p,
                    tol,
                    self.warm.as_ref(),
                    self.iteration_cap,
                    self.paid,
                )?;
                self.warm = Some(x.clone());
                Ok(x)
            }
            ResponseMode::Approximate { zeta } => {
                // Solve to utility gap zeta/2, then burn the other zeta/2 on a
                // feasibility-preserving perturbation toward a random member.
                let x = best_response_to_gap(
                    &self.valuation,
                    &self.feasible,
                    p,
                    0.5 * zeta,
                    self.warm.as_ref(),
                    self.iteration_cap,
                    self.paid,
                )?;
                self.warm = Some(x.clone());
                let u_x = self.utility(&x, p)?;
                let y = self.feasible.sample(&mut self.rng);
                let mut step = 1.0;
                for _ in 0..60 {
                    let cand = x.axpy(step, &(&y - &x));
                    let u_c = self.utility(&cand, p)?;
                    if u_x - u_c <= 0.5 * zeta {
                        return Ok(cand);
                    }
                    step *= 0.5;
                }
                Ok(x)
            }
            ResponseMode::Noisy { nu } => {
                let x = best_response_exact_signed(
                    &self.valuation,
                    &self.feasible,
                    p,
                    1e-7,
                    self.warm.as_ref(),
                    self.iteration_cap,
                    self.paid,
                )?;
                self.warm = Some(x.clone());
                let noise = Vector::from(
                    (0..x.dim())
                        .map(|_| {
                            let z: f64 = StandardNormal.sample(&mut self.rng);
                            nu * z
                        })
                        .collect::<Vec<_>>(),
                );
                Ok(&x + &noise)
            }
        }
    }

    fn query_count(&self) -> u64 {
        self.queries
    }

    fn dim(&self) -> usize {
        self.feasible.dim()
    }
}

/// Projected gradient ascent on `u(x) = v(x) - <p, x>` over `feasible`,
/// run until `|x - x*(p)| <= tol`.
pub fn best_response_exact(
    valuation: &Valuation,
    feasible: &FeasibleSet,
    p: &Vector,
    tol: f64,
) -> Result<Vector> {
    best_response_exact_signed(valuation, feasible, p, tol, None, 1_000_000, false)
}

fn best_response_exact_signed(
    valuation: &Valuation,
    feasible: &FeasibleSet,
    p: &Vector,
    tol: f64,
    warm: Option<&Vector>,
    cap: usize,
    paid: bool,
) -> Result<Vector> {
    // Strong concavity turns a utility gap into a distance bound:
    // |x - x*|^2 <= (2/sigma) (u(x*) - u(x)), and the linearization gap
    // max_y <grad u(x), y - x> over the set upper-bounds the utility gap.
    let sigma = valuation.strong_concavity_constant();
    let gap_threshold = 0.5 * sigma * tol * tol;
    best_response_to_gap(valuation, feasible, p, gap_threshold, warm, cap, paid)
}

/// Projected gradient ascent until the linearization gap
/// `max_y <grad u(x), y - x>` drops below `gap_threshold`.
fn best_response_to_gap(
    valuation: &Valuation,
    feasible: &FeasibleSet,
    p: &Vector,
    gap_threshold: f64,
    warm: Option<&Vector>,
    cap: usize,
    paid: bool,
) -> Result<Vector> {
    let sign = if paid { 1.0 } else { -1.0 };
    let utility = |x: &Vector| -> Result<f64> { Ok(valuation.value(x)? + sign * p.dot(x)) };
    let grad = |x: &Vector| -> Result<Vector> { Ok(valuation.gradient(x)?.axpy(sign, p)) };

    let mut x = match warm {
        Some(w) => feasible.project(w)?,
        None => feasible.project(&Vector::filled(
            feasible.dim(),
            0.5 * valuation.region_bound(),
        ))?,
    };

    let smooth = valuation.smoothness_bound();
    let mut eta = if smooth.is_finite() && smooth > 0.0 {
        1.0 / smooth
    } else {
        1.0
    };
    let eta_cap = 1e6;

    let mut u_x = utility(&x)?;
    let mut last_gap = f64::INFINITY;
    for _ in 0..cap {
        let g = grad(&x)?;
        let gap = feasible.support_max(&g) - g.dot(&x);
        last_gap = gap;
        // the absolute floor recognizes convergence below f64 resolution
        if gap <= gap_threshold.max(1e-14 * (1.0 + u_x.abs())) {
            return Ok(x);
        }
        // Backtracking ascent step with growth; the Armijo test keeps the
        // step matched to the local curvature even when the analytic
        // smoothness bound is floor-inflated.
        let mut accepted = false;
        for _ in 0..80 {
            let cand = feasible.project(&x.axpy(eta, &g))?;
            let progress = g.dot(&(&cand - &x));
            let u_c = utility(&cand)?;
            if u_c >= u_x + 0.3 * progress || progress <= 0.0 {
                if cand.dist(&x) < 1e-16 && progress <= 1e-18 {
                    // pinned against the boundary
                    return Ok(x);
                }
                x = cand;
                u_x = u_c;
                eta = (eta * 1.3).min(eta_cap);
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if !accepted {
            // step size underflowed; accept current point if the gap is
            // within numerical reach, otherwise fail loudly
            if last_gap <= gap_threshold.max(1e-12) {
                return Ok(x);
            }
            return Err(Error::SolverFailure {
                iterations: cap,
                residual: last_gap,
            });
        }
    }
    Err(Error::SolverFailure {
        iterations: cap,
        residual: last_gap,
    })
}
