//! Convex feasible sets with exact Euclidean projections.
//!
//! Four families cover every action space the solvers need: axis-aligned
//! boxes (bundle spaces), balls, the intersection of a ball with the
//! nonnegative orthant (price and toll spaces), and the interior-shrink
//! transform `(1 - 2*delta) * C + delta * 1`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::vector::Vector;

#[derive(Clone, Debug)]
pub enum FeasibleSet {
    Box { lo: Vector, hi: Vector },
    Ball { center: Vector, radius: f64 },
    NonnegBall { dim: usize, radius: f64 },
    Shrunk { base: std::boxed::Box<FeasibleSet>, delta: f64 },
}

impl FeasibleSet {
    pub fn axis_box(lo: Vector, hi: Vector) -> Result<Self> {
        lo.check_dim(hi.dim())?;
        if lo.iter().zip(hi.iter()).any(|(l, h)| l > h) {
            return Err(Error::InvalidParameter(
                "box lower bound exceeds upper bound".into(),
            ));
        }
        Ok(FeasibleSet::Box { lo, hi })
    }

    pub fn unit_box(dim: usize) -> Self {
        FeasibleSet::Box {
            lo: Vector::zeros(dim),
            hi: Vector::filled(dim, 1.0),
        }
    }

    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        if !radius.is_finite() || radius <= 0.0 {
            return Err(Error::InvalidParameter("ball radius must be positive".into()));
        }
        Ok(FeasibleSet::Ball { center, radius })
    }

    pub fn nonneg_ball(dim: usize, radius: f64) -> Result<Self> {
        if !radius.is_finite() || radius <= 0.0 {
            return Err(Error::InvalidParameter("ball radius must be positive".into()));
        }
        Ok(FeasibleSet::NonnegBall { dim, radius })
    }

    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::Box { lo, .. } => lo.dim(),
            FeasibleSet::Ball { center, .. } => center.dim(),
            FeasibleSet::NonnegBall { dim, .. } => *dim,
            FeasibleSet::Shrunk { base, .. } => base.dim(),
        }
    }

    /// Euclidean projection, exact for every variant.
    ///
    /// The nonnegative-ball projection clamps negatives to zero and then
    /// rescales onto the sphere if needed; clamping and radial scaling
    /// commute on the cone, so the composite is the true argmin. Shrunk sets
    /// delegate through the affine map, which preserves projections because
    /// the scaling is isotropic.
    pub fn project(&self, point: &Vector) -> Result<Vector> {
        point.check_dim(self.dim())?;
        Ok(match self {
            FeasibleSet::Box { lo, hi } => Vector::from(
                point
                    .iter()
                    .zip(lo.iter().zip(hi.iter()))
                    .map(|(x, (l, h))| x.clamp(*l, *h))
                    .collect::<Vec<_>>(),
            ),
            FeasibleSet::Ball { center, radius } => {
                let offset = point - center;
                let n = offset.norm();
                if n <= *radius {
                    point.clone()
                } else {
                    center.axpy(radius / n, &offset)
                }
            }
            FeasibleSet::NonnegBall { radius, .. } => {
                let clamped =
                    Vector::from(point.iter().map(|x| x.max(0.0)).collect::<Vec<_>>());
                let n = clamped.norm();
                if n <= *radius {
                    clamped
                } else {
                    clamped.scale(radius / n)
                }
            }
            FeasibleSet::Shrunk { base, delta } => {
                let unmapped = unshrink(point, *delta);
                let projected = base.project(&unmapped)?;
                shrink_map(&projected, *delta)
            }
        })
    }

    /// True iff `point` lies within Euclidean distance `tol` of the set.
    pub fn contains(&self, point: &Vector, tol: f64) -> Result<bool> {
        assert!(tol >= 0.0, "tolerance must be nonnegative");
        let proj = self.project(point)?;
        Ok(proj.dist(point) <= tol)
    }

    /// The interior-shrink transform `(1 - 2*delta) * C + delta * 1`.
    ///
    /// Requires `0 < delta < 1/2` and a set that (up to a small slack for
    /// floored domains) contains the unit cube, so that every member of the
    /// result keeps a `delta/2` safety margin inside the original set.
    pub fn shrink(&self, delta: f64) -> Result<FeasibleSet> {
        if !delta.is_finite() || delta <= 0.0 || delta >= 0.5 {
            return Err(Error::InvalidParameter(format!(
                "shrink delta must lie in (0, 1/2), got {delta}"
            )));
        }
        if !self.contains_unit_cube(1e-3) {
            return Err(Error::InvalidParameter(
                "shrink requires a set containing the unit cube".into(),
            ));
        }
        Ok(FeasibleSet::Shrunk {
            base: std::boxed::Box::new(self.clone()),
            delta,
        })
    }

    /// Checks `[0,1]^d` membership of all corners up to `tol` (convexity
    /// makes corner containment sufficient). Falls back to per-variant rules
    /// above 16 dimensions.
    pub fn contains_unit_cube(&self, tol: f64) -> bool {
        let d = self.dim();
        if d <= 16 {
            for mask in 0..(1usize << d) {
                let corner = Vector::from(
                    (0..d)
                        .map(|i| if mask >> i & 1 == 1 { 1.0 } else { 0.0 })
                        .collect::<Vec<_>>(),
                );
                if !self.contains(&corner, tol).unwrap_or(false) {
                    return false;
                }
            }
            true
        } else {
            match self {
                FeasibleSet::Box { lo, hi } => {
                    lo.iter().all(|l| *l <= tol) && hi.iter().all(|h| *h >= 1.0 - tol)
                }
                FeasibleSet::NonnegBall { radius, .. } => (d as f64).sqrt() <= radius + tol,
                _ => false,
            }
        }
    }

    /// Unit outward normal separating an exterior `point` from the set:
    /// `<p - point, w> <= 0` for every member `p`.
    pub fn separating_hyperplane(&self, point: &Vector) -> Result<Vector> {
        let proj = self.project(point)?;
        let gap = point - &proj;
        let n = gap.norm();
        if n == 0.0 {
            return Err(Error::ContractViolation(
                "separating_hyperplane called on an interior point".into(),
            ));
        }
        Ok(gap.scale(1.0 / n))
    }

    /// sup over member pairs of their Euclidean distance.
    pub fn diameter(&self) -> f64 {
        match self {
            FeasibleSet::Box { lo, hi } => hi.dist(lo),
            FeasibleSet::Ball { radius, .. } => 2.0 * radius,
            FeasibleSet::NonnegBall { dim, radius } => {
                // Two orthogonal axis points realize the sup once d >= 2.
                if *dim >= 2 {
                    radius * 2f64.sqrt()
                } else {
                    *radius
                }
            }
            FeasibleSet::Shrunk { base, delta } => (1.0 - 2.0 * delta) * base.diameter(),
        }
    }

    /// Upper bound on sup over members of the Euclidean norm (the `gamma`
    /// of the step-size schedules). Exact for boxes, balls, and nonneg balls.
    pub fn norm_bound(&self) -> f64 {
        match self {
            FeasibleSet::Box { lo, hi } => lo
                .iter()
                .zip(hi.iter())
                .map(|(l, h)| l.abs().max(h.abs()).powi(2))
                .sum::<f64>()
                .sqrt(),
            FeasibleSet::Ball { center, radius } => center.norm() + radius,
            FeasibleSet::NonnegBall { radius, .. } => *radius,
            FeasibleSet::Shrunk { base, delta } => {
                (1.0 - 2.0 * delta) * base.norm_bound()
                    + delta * (base.dim() as f64).sqrt()
            }
        }
    }

    /// max over members of `<g, y>` (support function).
    pub fn support_max(&self, g: &Vector) -> f64 {
        assert_eq!(g.dim(), self.dim(), "support of unequal dimensions");
        match self {
            FeasibleSet::Box { lo, hi } => g
                .iter()
                .zip(lo.iter().zip(hi.iter()))
                .map(|(gi, (l, h))| if *gi >= 0.0 { gi * h } else { gi * l })
                .sum(),
            FeasibleSet::Ball { center, radius } => g.dot(center) + radius * g.norm(),
            FeasibleSet::NonnegBall { radius, .. } => {
                let pos_norm = g
                    .iter()
                    .map(|x| x.max(0.0).powi(2))
                    .sum::<f64>()
                    .sqrt();
                radius * pos_norm
            }
            FeasibleSet::Shrunk { base, delta } => {
                (1.0 - 2.0 * delta) * base.support_max(g) + delta * g.sum()
            }
        }
    }

    /// Draws a member. Boxes are sampled uniformly; balls via a gaussian
    /// direction with a radial correction; shrunk sets through the map.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        match self {
            FeasibleSet::Box { lo, hi } => Vector::from(
                lo.iter()
                    .zip(hi.iter())
                    .map(|(l, h)| {
                        if h > l {
                            rng.random_range(*l..*h)
                        } else {
                            *l
                        }
                    })
                    .collect::<Vec<_>>(),
            ),
            FeasibleSet::Ball { center, radius } => {
                let dir = gaussian_direction(center.dim(), rng);
                let r = *radius * rng.random::<f64>().powf(1.0 / center.dim() as f64);
                center.axpy(r, &dir)
            }
            FeasibleSet::NonnegBall { dim, radius } => {
                // fold a ball sample into the orthant; the fold keeps norms
                let dir = gaussian_direction(*dim, rng);
                let r = *radius * rng.random::<f64>().powf(1.0 / *dim as f64);
                Vector::from(
                    dir.scale(r).iter().map(|x| x.abs()).collect::<Vec<_>>(),
                )
            }
            FeasibleSet::Shrunk { base, delta } => {
                let inner = base.sample(rng);
                shrink_map(&inner, *delta)
            }
        }
    }
}

fn shrink_map(x: &Vector, delta: f64) -> Vector {
    Vector::from(
        x.iter()
            .map(|v| (1.0 - 2.0 * delta) * v + delta)
            .collect::<Vec<_>>(),
    )
}

fn unshrink(x: &Vector, delta: f64) -> Vector {
    Vector::from(
        x.iter()
            .map(|v| (v - delta) / (1.0 - 2.0 * delta))
            .collect::<Vec<_>>(),
    )
}

fn gaussian_direction<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vector {
    use rand_distr::{Distribution, StandardNormal};
    loop {
        let v = Vector::from(
            (0..dim)
                .map(|_| StandardNormal.sample(rng))
                .collect::<Vec<f64>>(),
        );
        let n = v.norm();
        if n > 1e-12 {
            return v.scale(1.0 / n);
        }
    }
}
