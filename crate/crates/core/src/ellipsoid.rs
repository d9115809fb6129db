//! Central-cut ellipsoid induction: the noiseless alternative to the
//! subgradient loops, with query counts scaling in `ln(1/eps)`.

use crate::error::{Error, Result};
use crate::follower::{FollowerOracle, Responder};
use crate::geometry::FeasibleSet;
use crate::induce::{ConstraintOrientation, InduceConfig, InduceResult, InduceTraceRow};
use crate::vector::Vector;

/// `E = { x : (x - center)^T shape^{-1} (x - center) <= 1 }` with `shape`
/// symmetric positive-definite.
#[derive(Clone, Debug)]
pub struct Ellipsoid {
    center: Vector,
    /// row-major d x d
    shape: Vec<f64>,
}

impl Ellipsoid {
    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        if !radius.is_finite() || radius <= 0.0 {
            return Err(Error::InvalidParameter("ellipsoid radius must be positive".into()));
        }
        let d = center.dim();
        let mut shape = vec![0.0; d * d];
        for i in 0..d {
            shape[i * d + i] = radius * radius;
        }
        Ok(Ellipsoid { center, shape })
    }

    pub fn center(&self) -> &Vector {
        &self.center
    }

    pub fn shape(&self) -> &[f64] {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    fn mat_vec(&self, v: &Vector) -> Vector {
        let d = self.dim();
        Vector::from(
            (0..d)
                .map(|i| (0..d).map(|j| self.shape[i * d + j] * v[j]).sum())
                .collect::<Vec<f64>>(),
        )
    }

    /// Cholesky factor L with `shape = L L^T`, or None if not PD.
    fn cholesky(&self) -> Option<Vec<f64>> {
        let d = self.dim();
        let mut l = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                let mut s = self.shape[i * d + j];
                for k in 0..j {
                    s -= l[i * d + k] * l[j * d + k];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return None;
                    }
                    l[i * d + i] = s.sqrt();
                } else {
                    l[i * d + j] = s / l[j * d + j];
                }
            }
        }
        Some(l)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.cholesky().is_some()
    }

    pub fn contains(&self, x: &Vector) -> Result<bool> {
        x.check_dim(self.dim())?;
        let l = self
            .cholesky()
            .ok_or_else(|| Error::Numerical("ellipsoid shape lost positive definiteness".into()))?;
        let d = self.dim();
        // solve L y = (x - c), then |y|^2 = (x-c)^T A^{-1} (x-c)
        let diff = x - &self.center;
        let mut y = vec![0.0; d];
        for i in 0..d {
            let mut s = diff[i];
            for k in 0..i {
                s -= l[i * d + k] * y[k];
            }
            y[i] = s / l[i * d + i];
        }
        Ok(y.iter().map(|v| v * v).sum::<f64>() <= 1.0 + 1e-9)
    }

    /// `sqrt(det(shape))`, proportional to the volume.
    pub fn volume_proxy(&self) -> Result<f64> {
        let l = self
            .cholesky()
            .ok_or_else(|| Error::Numerical("ellipsoid shape lost positive definiteness".into()))?;
        let d = self.dim();
        Ok((0..d).map(|i| l[i * d + i]).product())
    }

    /// Draws a point of the ellipsoid (uniform direction, radial correction).
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Result<Vector> {
        use rand_distr::{Distribution, StandardNormal};
        let d = self.dim();
        let l = self
            .cholesky()
            .ok_or_else(|| Error::Numerical("ellipsoid shape lost positive definiteness".into()))?;
        let g = Vector::from(
            (0..d)
                .map(|_| StandardNormal.sample(rng))
                .collect::<Vec<f64>>(),
        );
        let n = g.norm().max(1e-12);
        let r = rng.random::<f64>().powf(1.0 / d as f64);
        let u = g.scale(r / n);
        let mut out = self.center.to_vec();
        for i in 0..d {
            for k in 0..=i {
                out[i] += l[i * d + k] * u[k];
            }
        }
        Ok(Vector::from(out))
    }

    /// Central-cut update: returns the minimum-volume ellipsoid containing
    /// `{ x in E : <w, x - center> <= 0 }`.
    pub fn step(&self, w: &Vector) -> Result<Ellipsoid> {
        w.check_dim(self.dim())?;
        let d = self.dim();
        if w.norm() == 0.0 {
            return Err(Error::InvalidParameter("ellipsoid cut vector must be nonzero".into()));
        }
        if d == 1 {
            // interval halving: keep the side where w (x - c) <= 0
            let r = self.shape[0].sqrt();
            let half = r / 2.0;
            let center = if w[0] > 0.0 {
                self.center[0] - half
            } else {
                self.center[0] + half
            };
            return Ok(Ellipsoid {
                center: Vector::from(vec![center]),
                shape: vec![half * half],
            });
        }
        let df = d as f64;
        let aw = self.mat_vec(w);
        let s2 = w.dot(&aw);
        if !s2.is_finite() || s2 <= 0.0 {
            return Err(Error::Numerical(format!(
                "degenerate cut: w^T A w = {s2:.3e}"
            )));
        }
        let b = aw.scale(1.0 / s2.sqrt());
        let center = self.center.axpy(-1.0 / (df + 1.0), &b);
        let scale = df * df / (df * df - 1.0);
        let coef = 2.0 / (df + 1.0);
        let mut shape = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                shape[i * d + j] = scale * (self.shape[i * d + j] - coef * b[i] * b[j]);
            }
        }
        // re-symmetrize: central-cut updates accumulate asymmetry in floats
        for i in 0..d {
            for j in 0..i {
                let avg = 0.5 * (shape[i * d + j] + shape[j * d + i]);
                shape[i * d + j] = avg;
                shape[j * d + i] = avg;
            }
        }
        let out = Ellipsoid { center, shape };
        match out.cholesky() {
            Some(l) => {
                let diag: Vec<f64> = (0..d).map(|i| l[i * d + i]).collect();
                let max = diag.iter().cloned().fold(f64::MIN, f64::max);
                let min = diag.iter().cloned().fold(f64::MAX, f64::min);
                if (max / min).powi(2) > 1e12 {
                    return Err(Error::Numerical(
                        "ellipsoid condition number exceeded 1e12".into(),
                    ));
                }
                Ok(out)
            }
            None => Err(Error::Numerical(
                "ellipsoid shape lost positive definiteness".into(),
            )),
        }
    }
}

/// `T = 100 d^2 ln(d lambda_val gamma / (eps sigma))` — the published
/// query cap of the price-inducing ellipsoid loop.
pub fn learn_price_ellipsoid_iterations(
    d: usize,
    lambda_val: f64,
    gamma: f64,
    epsilon: f64,
    sigma: f64,
) -> f64 {
    let df = d as f64;
    100.0 * df * df * (df * lambda_val * gamma / (epsilon * sigma)).ln()
}

/// `T = 100 m^2 ln(m / (eps sigma))` for the toll variant.
pub fn learn_toll_ellipsoid_iterations(m: usize, epsilon: f64, sigma: f64) -> f64 {
    let mf = m as f64;
    100.0 * mf * mf * (mf / (epsilon * sigma)).ln()
}

pub(crate) struct EllipsoidSpec<'a> {
    pub action_space: &'a FeasibleSet,
    pub initial_radius: f64,
    pub target: &'a Vector,
    pub horizon: usize,
    pub epsilon: f64,
    pub orientation: ConstraintOrientation,
}

/// Ellipsoid induction: skips infeasible centers via separating hyperplanes,
/// queries feasible ones, cuts with the response-based subgradient, and
/// returns the best feasible center seen. Noiseless oracles only.
pub(crate) fn induce_by_ellipsoid(
    responder: &mut dyn Responder,
    spec: &EllipsoidSpec<'_>,
) -> Result<InduceResult> {
    let d = spec.action_space.dim();
    let start_queries = responder.query_count();
    let mut ell = Ellipsoid::ball(Vector::zeros(d), spec.initial_radius)?;
    let mut best: Option<(f64, Vector, Vector)> = None;
    let mut trace: Vec<InduceTraceRow> = Vec::new();

    for t in 1..=spec.horizon {
        let mut guard = 0usize;
        while !spec.action_space.contains(ell.center(), 1e-12)? {
            let w = spec.action_space.separating_hyperplane(ell.center())?;
            ell = ell.step(&w)?;
            guard += 1;
            if guard > 400 * d * d + 400 {
                return Err(Error::Numerical(
                    "separation phase failed to reach the action space".into(),
                ));
            }
        }
        // snap vanishing negatives so oracle preconditions hold exactly
        let action = spec.action_space.project(ell.center())?;
        let response = responder.respond(&action)?;
        let dist = response.dist(spec.target);
        let improved = best.as_ref().is_none_or(|(b, _, _)| dist < *b);
        if improved {
            best = Some((dist, action.clone(), response.clone()));
        }
        if dist <= spec.epsilon {
            return Ok(InduceResult {
                leader_action: action,
                induced: response,
                queries: responder.query_count() - start_queries,
                trace,
            });
        }
        trace.push(InduceTraceRow {
            iteration: t,
            leader_action: action,
            response: response.clone(),
            distance_to_target: dist,
        });
        let cut = match spec.orientation {
            ConstraintOrientation::TargetUpperBound => spec.target - &response,
            ConstraintOrientation::TargetLowerBound => &response - spec.target,
        };
        if cut.norm() < 1e-15 {
            let (dist, action, response) = best.expect("at least one query");
            let _ = dist;
            return Ok(InduceResult {
                leader_action: action,
                induced: response,
                queries: responder.query_count() - start_queries,
                trace,
            });
        }
        ell = ell.step(&cut)?;
    }

    let (achieved, action, response) = best.expect("horizon is at least 1");
    if achieved <= spec.epsilon {
        Ok(InduceResult {
            leader_action: action,
            induced: response,
            queries: responder.query_count() - start_queries,
            trace,
        })
    } else {
        Err(Error::BudgetExhausted {
            achieved,
            target: spec.epsilon,
        })
    }
}

/// Ellipsoid variant of price inducement. Exact oracles only; query count is
/// capped by `learn_price_ellipsoid_iterations` and shrinks to
/// `O(ln(1/epsilon))` in practice thanks to the distance early-exit.
pub fn learn_price_ellipsoid(
    oracle: &mut FollowerOracle,
    target: &Vector,
    cfg: &InduceConfig,
) -> Result<InduceResult> {
    if matches!(oracle.mode(), crate::follower::ResponseMode::Noisy { .. }) {
        return Err(Error::Config(
            "the ellipsoid loop requires a noiseless oracle".into(),
        ));
    }
    let d = oracle.dim();
    target.check_dim(d)?;
    let schedule = crate::induce::learn_price_schedule(
        d,
        cfg.lambda_f,
        cfg.holder_beta,
        cfg.gamma,
        cfg.epsilon,
        cfg.sigma,
        cfg.use_constant_32,
    );
    let horizon = cfg.override_t.unwrap_or_else(|| {
        learn_price_ellipsoid_iterations(d, cfg.lambda_f, cfg.gamma, cfg.epsilon, cfg.sigma)
            .ceil()
            .max(8.0) as usize
    });
    let space = FeasibleSet::nonneg_ball(d, schedule.radius)?;
    induce_by_ellipsoid(
        oracle,
        &EllipsoidSpec {
            action_space: &space,
            initial_radius: schedule.radius,
            target,
            horizon,
            epsilon: cfg.epsilon,
            orientation: ConstraintOrientation::TargetUpperBound,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::follower::ResponseMode;
    use crate::preferences::Valuation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unit_ball_step_matches_closed_form() {
        let e = Ellipsoid::ball(Vector::zeros(2), 1.0).unwrap();
        let w = Vector::from(vec![1.0, 0.0]);
        let next = e.step(&w).unwrap();
        assert!(next.center().dist(&Vector::from(vec![-1.0 / 3.0, 0.0])) < 1e-12);
        let ratio = next.volume_proxy().unwrap() / e.volume_proxy().unwrap();
        let expected = (2.0 / 3.0) * (4.0f64 / 3.0).sqrt();
        assert!((ratio - expected).abs() < 1e-12, "volume ratio {ratio}");
        assert!((expected - 0.7698).abs() < 1e-4);
    }

    #[test]
    fn half_ellipsoid_containment_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut e = Ellipsoid::ball(Vector::from(vec![0.3, -0.2, 0.1]), 1.5).unwrap();
        // a few successive cuts to leave the spherical case
        for cut in [vec![1.0, 0.2, -0.1], vec![-0.3, 1.0, 0.4]] {
            e = e.step(&Vector::from(cut)).unwrap();
        }
        let w = Vector::from(vec![0.5, -1.0, 0.25]);
        let next = e.step(&w).unwrap();
        let mut kept = 0;
        while kept < 1000 {
            let x = e.sample(&mut rng).unwrap();
            if (&x - e.center()).dot(&w) <= 0.0 {
                kept += 1;
                assert!(next.contains(&x).unwrap(), "lost half-ellipsoid point");
            }
        }
    }

    #[test]
    fn one_dimensional_interval_halving() {
        let e = Ellipsoid::ball(Vector::from(vec![2.0]), 4.0).unwrap();
        let next = e.step(&Vector::from(vec![1.0])).unwrap();
        // keeps [-2, 2]: center 0, radius 2
        assert!((next.center()[0] - 0.0).abs() < 1e-12);
        assert!((next.shape()[0] - 4.0).abs() < 1e-12);
        let other = e.step(&Vector::from(vec![-3.0])).unwrap();
        assert!((other.center()[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_cut_rejected() {
        let e = Ellipsoid::ball(Vector::zeros(2), 1.0).unwrap();
        assert!(matches!(
            e.step(&Vector::zeros(2)),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn example_one_ellipsoid_beats_subgradient_queries() {
        let v = Valuation::ces(vec![1.0], 0.5, 1.0, 1.0).unwrap();
        let floor = v.floor();
        let set =
            FeasibleSet::axis_box(Vector::from(vec![floor]), Vector::from(vec![1.0])).unwrap();
        let (lam, beta) = v.holder_constants();
        let sigma = v.strong_concavity_constant();
        let target = Vector::from(vec![1.0 / 16.0]);

        let eps = 1e-3;
        let mut oracle =
            FollowerOracle::new(v.clone(), set.clone(), ResponseMode::Exact { tol: eps * 0.05 }, 0)
                .unwrap();
        let cfg = InduceConfig::new(eps, lam, 1.0, sigma).with_holder_beta(beta);
        let out = learn_price_ellipsoid(&mut oracle, &target, &cfg).unwrap();
        assert!((out.induced[0] - 1.0 / 16.0).abs() <= eps);
        let cap = learn_price_ellipsoid_iterations(1, lam, 1.0, eps, sigma);
        assert!((out.queries as f64) <= cap);

        // the subgradient loop needs far more queries at the same accuracy
        let mut oracle2 =
            FollowerOracle::new(v, set, ResponseMode::Exact { tol: eps * 0.05 }, 0).unwrap();
        let sub_cfg = InduceConfig::new(eps, lam, 1.0, sigma)
            .with_holder_beta(beta)
            .with_overrides(Some(200_000), Some(0.25));
        let sub = crate::induce::learn_price(&mut oracle2, &target, &sub_cfg).unwrap();
        assert!(
            sub.queries > out.queries,
            "subgradient {} vs ellipsoid {}",
            sub.queries,
            out.queries
        );
    }

    #[test]
    fn query_counts_scale_with_log_accuracy() {
        let v = Valuation::ces(vec![1.0], 0.5, 1.0, 1.0).unwrap();
        let floor = v.floor();
        let set =
            FeasibleSet::axis_box(Vector::from(vec![floor]), Vector::from(vec![1.0])).unwrap();
        let (lam, beta) = v.holder_constants();
        let sigma = v.strong_concavity_constant();
        let target = Vector::from(vec![1.0 / 16.0]);
        let mut qs = Vec::new();
        for eps in [1e-1, 1e-2, 1e-3] {
            let mut oracle = FollowerOracle::new(
                v.clone(),
                set.clone(),
                ResponseMode::Exact { tol: eps * 0.05 },
                0,
            )
            .unwrap();
            let cfg = InduceConfig::new(eps, lam, 1.0, sigma).with_holder_beta(beta);
            let out = learn_price_ellipsoid(&mut oracle, &target, &cfg).unwrap();
            qs.push((1.0 / eps as f64).ln());
            qs.push(out.queries as f64);
        }
        // affine fit of queries against ln(1/eps) with R^2 >= 0.95
        let xs: Vec<f64> = qs.iter().step_by(2).cloned().collect();
        let ys: Vec<f64> = qs.iter().skip(1).step_by(2).cloned().collect();
        let r2 = crate::stats::linear_fit_r2(&xs, &ys);
        assert!(r2 >= 0.95, "R^2 = {r2}, queries {ys:?}");
        assert!(ys[0] <= ys[1] && ys[1] <= ys[2], "counts not increasing: {ys:?}");
    }
}
