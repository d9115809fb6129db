//! Zeroth-order minimization over well-rounded bodies from approximate
//! function evaluations only.
//!
//! Two substitutes honor the same contract — given evaluations within
//! `eps/d` of a convex objective, return a point whose expected value is
//! within `eps` of the minimum:
//!
//! * `GridRefine` (dimension <= 3): successively refined lattices, keeping
//!   the level set of near-minimal evaluations each round. Noise-margin
//!   bookkeeping makes the shrink safe for convex objectives.
//! * `SmoothedGradient`: two-point sphere-sampling gradient estimates with
//!   projected descent and iterate averaging.
//!
//! Everything runs in the rounded coordinates produced by [`round_set`];
//! queries are mapped back to ambient coordinates before reaching the
//! evaluator.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::FeasibleSet;
use crate::vector::Vector;

pub trait ObjectiveEvaluator {
    fn evaluate(&mut self, x: &Vector) -> Result<f64>;
}

impl<F> ObjectiveEvaluator for F
where
    F: FnMut(&Vector) -> Result<f64>,
{
    fn evaluate(&mut self, x: &Vector) -> Result<f64> {
        self(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ZooMethod {
    /// Lattice refinement; rejected above 3 (embedded) dimensions.
    GridRefine,
    /// Two-point sphere-sampling gradient descent; any dimension.
    SmoothedGradient,
}

#[derive(Clone, Debug)]
pub struct ZooConfig {
    /// The `eps` of the oracle contract; evaluations must be `eps/d`-accurate.
    pub target_accuracy: f64,
    pub method: ZooMethod,
    /// Evaluator call budget.
    pub budget: usize,
    pub rng_seed: u64,
}

impl ZooConfig {
    pub fn new(target_accuracy: f64, method: ZooMethod, budget: usize, rng_seed: u64) -> Self {
        ZooConfig {
            target_accuracy,
            method,
            budget,
            rng_seed,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ZooOutcome {
    /// Minimizer candidate in ambient coordinates.
    pub point: Vector,
    /// Evaluator value observed at `point`.
    pub value: f64,
    pub calls: usize,
    /// False when the budget ran out before the refinement settled.
    pub certified: bool,
}

/// Families the rounding pre-processing accepts.
#[derive(Clone, Debug)]
pub enum RoundableSet {
    Feasible(FeasibleSet),
    /// `{ f >= 0 : sum f = total }` in path-flow coordinates.
    PathSimplex { paths: usize, total: f64 },
}

#[derive(Clone, Debug)]
enum RoundedKind {
    /// Embedded body is `[-1, 1]^n`.
    Cube { mid: Vector, halfwidth: Vector },
    /// Embedded body is the regular simplex spanned by `vertices`.
    Simplex {
        vertices: Vec<Vector>,
        columns: Vec<Vector>,
        centroid: Vector,
        total: f64,
    },
}

/// A convex body in isotropic coordinates together with the affine map back
/// to ambient space: the image contains a ball of `inner_radius` and sits in
/// a concentric ball of `outer_radius`.
#[derive(Clone, Debug)]
pub struct RoundedBody {
    kind: RoundedKind,
    ambient_dim: usize,
    embedded_dim: usize,
    pub inner_radius: f64,
    pub outer_radius: f64,
}

impl RoundedBody {
    pub fn embedded_dim(&self) -> usize {
        self.embedded_dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn ratio(&self) -> f64 {
        self.outer_radius / self.inner_radius
    }

    pub fn is_well_rounded(&self) -> bool {
        self.ratio() <= 2.0 * (self.embedded_dim as f64).sqrt() + 1e-12
    }

    pub fn to_ambient(&self, z: &Vector) -> Vector {
        match &self.kind {
            RoundedKind::Cube { mid, halfwidth } => Vector::from(
                mid.iter()
                    .zip(halfwidth.iter())
                    .zip(z.iter())
                    .map(|((m, h), zi)| m + h * zi)
                    .collect::<Vec<_>>(),
            ),
            RoundedKind::Simplex {
                columns, centroid, ..
            } => {
                let mut out = centroid.clone();
                for (j, col) in columns.iter().enumerate() {
                    out = out.axpy(z[j], col);
                }
                out
            }
        }
    }

    pub fn from_ambient(&self, x: &Vector) -> Vector {
        match &self.kind {
            RoundedKind::Cube { mid, halfwidth } => Vector::from(
                x.iter()
                    .zip(mid.iter().zip(halfwidth.iter()))
                    .map(|(xi, (m, h))| (xi - m) / h)
                    .collect::<Vec<_>>(),
            ),
            RoundedKind::Simplex {
                columns, centroid, ..
            } => {
                let diff = x - centroid;
                Vector::from(columns.iter().map(|c| c.dot(&diff)).collect::<Vec<_>>())
            }
        }
    }

    /// Euclidean projection in embedded coordinates (exact: clamping for the
    /// cube, the sorting algorithm for the simplex carried through the
    /// isometric embedding).
    pub fn project_embedded(&self, z: &Vector) -> Vector {
        match &self.kind {
            RoundedKind::Cube { .. } => Vector::from(
                z.iter().map(|v| v.clamp(-1.0, 1.0)).collect::<Vec<_>>(),
            ),
            RoundedKind::Simplex { total, .. } => {
                let ambient = self.to_ambient(z);
                let projected = project_onto_simplex(ambient.as_slice(), *total);
                self.from_ambient(&Vector::from(projected))
            }
        }
    }

    pub fn contains_embedded(&self, z: &Vector, tol: f64) -> bool {
        match &self.kind {
            RoundedKind::Cube { .. } => z.iter().all(|v| (-1.0 - tol..=1.0 + tol).contains(v)),
            RoundedKind::Simplex { .. } => self.to_ambient(z).min_entry() >= -tol,
        }
    }

    /// Axis-aligned bounding box of the embedded body.
    pub fn bounding_box(&self) -> (Vector, Vector) {
        match &self.kind {
            RoundedKind::Cube { .. } => (
                Vector::filled(self.embedded_dim, -1.0),
                Vector::filled(self.embedded_dim, 1.0),
            ),
            RoundedKind::Simplex { vertices, .. } => {
                let n = self.embedded_dim;
                let mut lo = Vector::filled(n, f64::INFINITY);
                let mut hi = Vector::filled(n, f64::NEG_INFINITY);
                for v in vertices {
                    for i in 0..n {
                        lo.set(i, lo[i].min(v[i]));
                        hi.set(i, hi[i].max(v[i]));
                    }
                }
                (lo, hi)
            }
        }
    }

    fn center(&self) -> Vector {
        Vector::zeros(self.embedded_dim)
    }
}

/// Projection of `v` onto `{ f >= 0 : sum f = total }`.
pub fn project_onto_simplex(v: &[f64], total: f64) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, uj) in u.iter().enumerate() {
        cumulative += uj;
        let candidate = (cumulative - total) / (j + 1) as f64;
        if uj - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

fn effective_box(set: &FeasibleSet) -> Option<(Vector, Vector)> {
    match set {
        FeasibleSet::Box { lo, hi } => Some((lo.clone(), hi.clone())),
        FeasibleSet::Shrunk { base, delta } => {
            let (lo, hi) = effective_box(base)?;
            let map = |v: &Vector| {
                Vector::from(
                    v.iter()
                        .map(|x| (1.0 - 2.0 * delta) * x + delta)
                        .collect::<Vec<_>>(),
                )
            };
            Some((map(&lo), map(&hi)))
        }
        _ => None,
    }
}

/// Rounds a supported set into isotropic coordinates: boxes (and shrunk
/// boxes) map to the cube `[-1,1]^n`; path-flow simplices map to their
/// centered orthonormal embedding. General rounding is out of scope.
pub fn round_set(set: &RoundableSet) -> Result<RoundedBody> {
    match set {
        RoundableSet::Feasible(fs) => {
            let (lo, hi) = effective_box(fs).ok_or_else(|| {
                Error::Unsupported(
                    "rounding supports boxes, shrunk boxes, and path-flow simplices".into(),
                )
            })?;
            let d = lo.dim();
            if lo.iter().zip(hi.iter()).any(|(l, h)| h - l <= 0.0) {
                return Err(Error::Unsupported(
                    "rounding requires full-dimensional boxes".into(),
                ));
            }
            let mid = (&lo + &hi).scale(0.5);
            let halfwidth = (&hi - &lo).scale(0.5);
            Ok(RoundedBody {
                kind: RoundedKind::Cube { mid, halfwidth },
                ambient_dim: d,
                embedded_dim: d,
                inner_radius: 1.0,
                outer_radius: (d as f64).sqrt(),
            })
        }
        RoundableSet::PathSimplex { paths, total } => {
            let k = *paths;
            if k < 2 {
                return Err(Error::Unsupported("a path simplex needs at least 2 paths".into()));
            }
            if k > 16 {
                return Err(Error::Unsupported(format!(
                    "path-flow rounding supports at most 16 paths, got {k}"
                )));
            }
            if !total.is_finite() || *total <= 0.0 {
                return Err(Error::InvalidParameter("simplex total must be positive".into()));
            }
            // Helmert basis of the sum-zero subspace: orthonormal columns.
            let n = k - 1;
            let mut columns = Vec::with_capacity(n);
            for j in 1..=n {
                let jf = j as f64;
                let norm = (jf * (jf + 1.0)).sqrt();
                let mut col = vec![0.0; k];
                for item in col.iter_mut().take(j) {
                    *item = 1.0 / norm;
                }
                col[j] = -jf / norm;
                columns.push(Vector::from(col));
            }
            let centroid = Vector::filled(k, total / k as f64);
            let vertices: Vec<Vector> = (0..k)
                .map(|i| {
                    let mut vertex = Vector::zeros(k);
                    vertex.set(i, *total);
                    let diff = &vertex - &centroid;
                    Vector::from(columns.iter().map(|c| c.dot(&diff)).collect::<Vec<_>>())
                })
                .collect();
            let circum = total * ((k as f64 - 1.0) / k as f64).sqrt();
            let inner = circum / (k as f64 - 1.0);
            Ok(RoundedBody {
                kind: RoundedKind::Simplex {
                    vertices,
                    columns,
                    centroid,
                    total: *total,
                },
                ambient_dim: k,
                embedded_dim: n,
                inner_radius: inner,
                outer_radius: circum,
            })
        }
    }
}

/// Minimizes over a feasible set by rounding first. The returned point is
/// feasible and, for convex objectives evaluated within
/// `target_accuracy / ambient_dim`, optimal up to `target_accuracy` (in
/// expectation over the optimizer's seed).
pub fn minimize(
    evaluator: &mut dyn ObjectiveEvaluator,
    set: &FeasibleSet,
    cfg: &ZooConfig,
) -> Result<ZooOutcome> {
    let body = round_set(&RoundableSet::Feasible(set.clone()))?;
    minimize_rounded(evaluator, &body, cfg)
}

pub fn minimize_rounded(
    evaluator: &mut dyn ObjectiveEvaluator,
    body: &RoundedBody,
    cfg: &ZooConfig,
) -> Result<ZooOutcome> {
    if !cfg.target_accuracy.is_finite() || cfg.target_accuracy <= 0.0 {
        return Err(Error::Config("target accuracy must be positive".into()));
    }
    if cfg.budget == 0 {
        return Err(Error::Config("budget must be positive".into()));
    }
    if !body.is_well_rounded() {
        return Err(Error::Unsupported(format!(
            "body with radius ratio {:.2} is not well-rounded in {} dimensions",
            body.ratio(),
            body.embedded_dim()
        )));
    }
    match cfg.method {
        ZooMethod::GridRefine => {
            if body.embedded_dim() > 3 {
                return Err(Error::Config(
                    "GridRefine supports at most 3 dimensions; use SmoothedGradient".into(),
                ));
            }
            grid_refine(evaluator, body, cfg)
        }
        ZooMethod::SmoothedGradient => smoothed_gradient(evaluator, body, cfg),
    }
}

struct CountingCache<'a> {
    evaluator: &'a mut dyn ObjectiveEvaluator,
    body: &'a RoundedBody,
    cache: BTreeMap<Vec<u64>, f64>,
    calls: usize,
    budget: usize,
}

impl<'a> CountingCache<'a> {
    fn new(evaluator: &'a mut dyn ObjectiveEvaluator, body: &'a RoundedBody, budget: usize) -> Self {
        CountingCache {
            evaluator,
            body,
            cache: BTreeMap::new(),
            calls: 0,
            budget,
        }
    }

    fn remaining(&self) -> usize {
        self.budget - self.calls
    }

    /// None when the budget is spent.
    fn query(&mut self, z: &Vector) -> Result<Option<f64>> {
        let key: Vec<u64> = z.iter().map(|v| v.to_bits()).collect();
        if let Some(v) = self.cache.get(&key) {
            return Ok(Some(*v));
        }
        if self.calls >= self.budget {
            return Ok(None);
        }
        self.calls += 1;
        let value = self.evaluator.evaluate(&self.body.to_ambient(z))?;
        if !value.is_finite() {
            return Err(Error::NonFinite("objective evaluation"));
        }
        self.cache.insert(key, value);
        Ok(Some(value))
    }
}

fn grid_refine(
    evaluator: &mut dyn ObjectiveEvaluator,
    body: &RoundedBody,
    cfg: &ZooConfig,
) -> Result<ZooOutcome> {
    let n = body.embedded_dim();
    let noise = cfg.target_accuracy / body.ambient_dim() as f64;
    let per_axis: usize = match n {
        1 => 33,
        2 => 11,
        _ => 7,
    };
    let mut cache = CountingCache::new(evaluator, body, cfg.budget);
    let (mut lo, mut hi) = body.bounding_box();
    let mut best: Option<(f64, Vector)> = None;
    let mut exhausted = false;
    let mut stagnant = 0;

    'rounds: for _round in 0..64 {
        let spacing: Vec<f64> = (0..n)
            .map(|i| (hi[i] - lo[i]) / (per_axis - 1) as f64)
            .collect();
        // enumerate the lattice, keep feasible points
        let mut points: Vec<(Vector, f64)> = Vec::new();
        let total: usize = per_axis.pow(n as u32);
        for flat in 0..total {
            let mut idx = flat;
            let mut coords = Vec::with_capacity(n);
            for i in 0..n {
                coords.push(lo[i] + (idx % per_axis) as f64 * spacing[i]);
                idx /= per_axis;
            }
            let z = Vector::from(coords);
            let z = if body.contains_embedded(&z, 1e-12) {
                z
            } else {
                // pull boundary cells onto the body so simplices keep a
                // usable lattice
                let proj = body.project_embedded(&z);
                if proj.dist(&z) > 1.5 * spacing.iter().cloned().fold(0.0, f64::max) {
                    continue;
                }
                proj
            };
            match cache.query(&z)? {
                Some(v) => {
                    if best.as_ref().is_none_or(|(b, _)| v < *b) {
                        best = Some((v, z.clone()));
                    }
                    points.push((z, v));
                }
                None => {
                    exhausted = true;
                    break 'rounds;
                }
            }
        }
        if points.is_empty() {
            return Err(Error::Numerical("no feasible lattice point".into()));
        }
        let round_best = points
            .iter()
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap()
            .clone();

        // Two-pass level set. The shrink may only cut points whose true
        // value provably exceeds the minimum, so the margin covers twice the
        // noise plus one cell of true variation — measured near the current
        // minimum, not globally, or steep far-away walls freeze the shrink.
        let adjacency = |za: &Vector, zb: &Vector| -> bool {
            let mut steps_total = 0.0;
            for i in 0..n {
                let steps = (za[i] - zb[i]).abs() / spacing[i].max(1e-300);
                if steps > 1.0 + 1e-9 {
                    return false;
                }
                steps_total += steps;
            }
            steps_total > 1e-9
        };
        let variation_within = |members: &[bool], points: &[(Vector, f64)]| -> f64 {
            let mut worst: f64 = 0.0;
            for (ia, (za, va)) in points.iter().enumerate() {
                if !members[ia] {
                    continue;
                }
                for (ib, (zb, vb)) in points.iter().enumerate() {
                    if ib <= ia || !members[ib] {
                        continue;
                    }
                    if adjacency(za, zb) {
                        worst = worst.max((va - vb).abs());
                    }
                }
            }
            worst
        };
        let coarse: Vec<bool> = {
            let global_var = variation_within(&vec![true; points.len()], &points);
            let coarse_margin = 4.0 * noise + global_var;
            points
                .iter()
                .map(|(_, v)| *v <= round_best.1 + coarse_margin)
                .collect()
        };
        let local_var = variation_within(&coarse, &points);
        let margin = 4.0 * noise + local_var;

        let mut level_lo = Vector::filled(n, f64::INFINITY);
        let mut level_hi = Vector::filled(n, f64::NEG_INFINITY);
        for (z, v) in &points {
            if *v <= round_best.1 + margin {
                for i in 0..n {
                    level_lo.set(i, level_lo[i].min(z[i]));
                    level_hi.set(i, level_hi[i].max(z[i]));
                }
            }
        }
        let mut next_lo = Vector::zeros(n);
        let mut next_hi = Vector::zeros(n);
        let mut shrunk = false;
        for i in 0..n {
            next_lo.set(i, (level_lo[i] - spacing[i]).max(lo[i]));
            next_hi.set(i, (level_hi[i] + spacing[i]).min(hi[i]));
            if next_hi[i] - next_lo[i] < 0.9 * (hi[i] - lo[i]) {
                shrunk = true;
            }
        }
        lo = next_lo;
        hi = next_hi;
        let max_side = (0..n).map(|i| hi[i] - lo[i]).fold(0.0, f64::max);
        if !shrunk {
            stagnant += 1;
            if stagnant >= 3 {
                break;
            }
        } else {
            stagnant = 0;
        }
        if max_side < 1e-9 * body.outer_radius || cache.remaining() < total {
            break;
        }
    }

    let (best_value, best_point) = best.ok_or_else(|| {
        Error::Numerical("grid refinement made no progress within the budget".into())
    })?;

    // Final pick: noise at a single lattice point can reach the full
    // evaluation error, so rank the leading candidates by symmetric-stencil
    // averages (the bias is second order for convex objectives) and then
    // polish once on a finer stencil.
    let spacing = (0..n)
        .map(|i| (hi[i] - lo[i]).max(1e-9) / (per_axis - 1) as f64)
        .fold(f64::MAX, f64::min);
    let mut ranked: Vec<(f64, Vector)> = cache
        .cache
        .iter()
        .map(|(k, v)| {
            (
                *v,
                Vector::from(k.iter().map(|b| f64::from_bits(*b)).collect::<Vec<_>>()),
            )
        })
        .filter(|(v, _)| *v <= best_value + 4.0 * noise)
        .collect();
    ranked.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    ranked.truncate(8);
    if !ranked.iter().any(|(_, z)| z == &best_point) {
        ranked.push((best_value, best_point.clone()));
    }

    let stencil_avg = |cache: &mut CountingCache<'_>,
                           center: &Vector,
                           radius: f64|
     -> Result<Option<f64>> {
        let mut sum = 0.0;
        let mut count = 0.0;
        for shell in [0.5f64, 1.0] {
            for i in 0..n {
                for sign in [-1.0, 1.0] {
                    let mut zz = center.to_vec();
                    zz[i] += sign * shell * radius;
                    let probe = body.project_embedded(&Vector::from(zz));
                    match cache.query(&probe)? {
                        Some(v) => {
                            sum += v;
                            count += 1.0;
                        }
                        None => return Ok(None),
                    }
                }
            }
        }
        match cache.query(center)? {
            Some(v) => {
                sum += v;
                count += 1.0;
            }
            None => return Ok(None),
        }
        Ok(Some(sum / count))
    };

    let mut winner = (best_value, best_point.clone());
    let mut winner_avg = f64::INFINITY;
    for (v, z) in &ranked {
        match stencil_avg(&mut cache, z, 0.35 * spacing)? {
            Some(avg) => {
                if avg < winner_avg {
                    winner_avg = avg;
                    winner = (*v, z.clone());
                }
            }
            None => {
                exhausted = true;
                break;
            }
        }
    }
    // polish: re-rank the winner against its immediate lattice neighbors on
    // a finer stencil
    let mut polish_best = winner_avg;
    for neighbor in neighborhood(&winner.1, 0.5 * spacing, n) {
        let z = body.project_embedded(&neighbor);
        match stencil_avg(&mut cache, &z, 0.12 * spacing)? {
            Some(avg) => {
                if avg < polish_best {
                    polish_best = avg;
                    if let Some(v) = cache.query(&z)? {
                        winner = (v, z);
                    }
                }
            }
            None => {
                exhausted = true;
                break;
            }
        }
    }

    Ok(ZooOutcome {
        point: body.to_ambient(&winner.1),
        value: winner.0,
        calls: cache.calls,
        certified: !exhausted,
    })
}

fn neighborhood(center: &Vector, step: f64, n: usize) -> Vec<Vector> {
    let mut out = vec![center.clone()];
    for i in 0..n {
        for sign in [-1.0, 1.0] {
            let mut z = center.to_vec();
            z[i] += sign * step;
            out.push(Vector::from(z));
        }
    }
    out
}

fn smoothed_gradient(
    evaluator: &mut dyn ObjectiveEvaluator,
    body: &RoundedBody,
    cfg: &ZooConfig,
) -> Result<ZooOutcome> {
    let n = body.embedded_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut cache = CountingCache::new(evaluator, body, cfg.budget);
    let radius = body.outer_radius;

    let mut z = body.center();
    let mut best: Option<(f64, Vector)> = None;
    let mut avg = Vector::zeros(n);
    let mut avg_count = 0.0;
    let mut grad_scale: f64 = 1.0;
    let mut exhausted = false;

    let reserve = (cfg.budget / 10).clamp(2, 64);
    let mut t = 0usize;
    while cache.remaining() > reserve {
        t += 1;
        let mu = (0.1 * radius / (t as f64).sqrt()).max(1e-7 * radius);
        let dir = {
            let g = Vector::from(
                (0..n)
                    .map(|_| StandardNormal.sample(&mut rng))
                    .collect::<Vec<f64>>(),
            );
            g.scale(1.0 / g.norm().max(1e-12))
        };
        let plus = body.project_embedded(&z.axpy(mu, &dir));
        let minus = body.project_embedded(&z.axpy(-mu, &dir));
        let (fp, fm) = match (cache.query(&plus)?, cache.query(&minus)?) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                exhausted = true;
                break;
            }
        };
        for (v, point) in [(fp, &plus), (fm, &minus)] {
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, point.clone()));
            }
        }
        let slope = (fp - fm) / (2.0 * mu) * n as f64;
        let grad = dir.scale(slope);
        grad_scale = grad_scale.max(grad.norm());
        let eta = radius / (grad_scale * (t as f64).sqrt());
        z = body.project_embedded(&z.axpy(-eta, &grad));
        if t > 8 {
            avg = avg.axpy(1.0, &z);
            avg_count += 1.0;
        }
    }

    // spend the reserve comparing the averaged iterate, the final iterate,
    // and the best single observation
    let mut candidates: Vec<Vector> = Vec::new();
    if avg_count > 0.0 {
        candidates.push(body.project_embedded(&avg.scale(1.0 / avg_count)));
    }
    candidates.push(z);
    if let Some((_, b)) = &best {
        candidates.push(b.clone());
    }
    let mut chosen: Option<(f64, Vector)> = None;
    let per = (cache.remaining() / candidates.len().max(1)).max(1);
    for cand in candidates {
        let mut sum = 0.0;
        let mut count = 0.0;
        for _ in 0..per {
            let jitter = Vector::from(
                (0..n)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        1e-6 * radius * z
                    })
                    .collect::<Vec<_>>(),
            );
            let probe = body.project_embedded(&cand.axpy(1.0, &jitter));
            match cache.query(&probe)? {
                Some(v) => {
                    sum += v;
                    count += 1.0;
                }
                None => break,
            }
        }
        if count > 0.0 {
            let score = sum / count;
            if chosen.as_ref().is_none_or(|(s, _)| score < *s) {
                chosen = Some((score, cand));
            }
        }
    }
    let (value, point) = chosen
        .or(best)
        .ok_or_else(|| Error::Numerical("no evaluation fit in the budget".into()))?;

    Ok(ZooOutcome {
        point: body.to_ambient(&point),
        value,
        calls: cache.calls,
        certified: !exhausted,
    })
}
