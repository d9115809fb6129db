//! Nonatomic routing games: Wardrop equilibria by potential minimization,
//! tolled equilibria, social cost, target-flow enforcement, and optimal
//! tolling.
//!
//! The general solver is Frank-Wolfe on the (tolled) potential with a
//! shortest-path linear-minimization oracle, so no polytope projection is
//! ever needed. Instances whose latencies have zero slope somewhere (the
//! built-in non-convexity witness) are handled by an exact path-class
//! enumerator instead.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::follower::Responder;
use crate::geometry::FeasibleSet;
use crate::induce::{
    enforce_flow_schedule, induce_by_subgradient, induce_by_subgradient_best_effort,
    ConstraintOrientation, InduceResult, LoopSpec,
};
use crate::vector::Vector;

#[derive(Clone, Debug)]
pub enum Latency {
    /// `l(x) = a x + b`
    Affine { a: f64, b: f64 },
    /// `l(x) = sum_i coeffs[i] x^i`
    Poly { coeffs: Vec<f64> },
}

impl Latency {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Latency::Affine { a, b } => a * x + b,
            Latency::Poly { coeffs } => {
                let mut acc = 0.0;
                for c in coeffs.iter().rev() {
                    acc = acc * x + c;
                }
                acc
            }
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Latency::Affine { a, .. } => *a,
            Latency::Poly { coeffs } => {
                let mut acc = 0.0;
                for (i, c) in coeffs.iter().enumerate().skip(1).rev() {
                    acc = acc * x + i as f64 * c;
                }
                acc
            }
        }
    }

    /// `int_0^x l(t) dt`
    pub fn integral(&self, x: f64) -> f64 {
        match self {
            Latency::Affine { a, b } => 0.5 * a * x * x + b * x,
            Latency::Poly { coeffs } => coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c * x.powi(i as i32 + 1) / (i as f64 + 1.0))
                .sum(),
        }
    }

    fn min_derivative(&self, hi: f64) -> f64 {
        match self {
            Latency::Affine { a, .. } => *a,
            Latency::Poly { .. } => {
                let mut min = f64::INFINITY;
                for i in 0..=1000 {
                    min = min.min(self.derivative(hi * i as f64 / 1000.0));
                }
                min
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub latency: Latency,
}

#[derive(Clone, Debug)]
pub struct Commodity {
    pub source: usize,
    pub sink: usize,
    pub demand: f64,
}

#[derive(Clone, Debug)]
pub struct RoutingGame {
    node_names: Vec<String>,
    edges: Vec<Edge>,
    commodities: Vec<Commodity>,
    /// min over edges of the latency slope on `[0, total demand]`.
    sigma_min: f64,
}

#[derive(Clone, Debug)]
pub struct Flow {
    pub edge_flows: Vector,
    pub per_commodity: Option<Vec<Vector>>,
    pub path_flows: Option<Vec<f64>>,
}

impl RoutingGame {
    pub fn new(
        node_names: Vec<String>,
        edges: Vec<Edge>,
        commodities: Vec<Commodity>,
    ) -> Result<Self> {
        if edges.is_empty() || commodities.is_empty() {
            return Err(Error::Model("a game needs edges and commodities".into()));
        }
        let n = node_names.len();
        for e in &edges {
            if e.tail >= n || e.head >= n {
                return Err(Error::Model("edge endpoint out of range".into()));
            }
        }
        let total: f64 = commodities.iter().map(|c| c.demand).sum();
        if commodities.iter().any(|c| !c.demand.is_finite() || c.demand <= 0.0) {
            return Err(Error::Model("demands must be positive".into()));
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Model(format!("total demand must be 1, got {total}")));
        }
        // latencies must be non-decreasing on the demand range
        let mut sigma_min = f64::INFINITY;
        for e in &edges {
            let d = e.latency.min_derivative(total);
            if d < -1e-9 {
                return Err(Error::Model("latencies must be non-decreasing".into()));
            }
            sigma_min = sigma_min.min(d.max(0.0));
        }
        let game = RoutingGame {
            node_names,
            edges,
            commodities,
            sigma_min,
        };
        for c in &game.commodities {
            if c.source >= n || c.sink >= n || c.source == c.sink {
                return Err(Error::Model("bad commodity endpoints".into()));
            }
            if game.shortest_path(&vec![0.0; game.edge_count()], c.source, c.sink).is_none() {
                return Err(Error::Model(format!(
                    "commodity {} -> {} is disconnected",
                    game.node_names[c.source], game.node_names[c.sink]
                )));
            }
        }
        Ok(game)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_count(&self) -> usize {
        self.node_names.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn commodities(&self) -> &[Commodity] {
        &self.commodities
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    pub fn total_demand(&self) -> f64 {
        self.commodities.iter().map(|c| c.demand).sum()
    }

    /// Per-edge Lipschitz bound of the social cost on the demand range.
    pub fn social_cost_lipschitz(&self) -> f64 {
        let hi = self.total_demand();
        let per_edge = self
            .edges
            .iter()
            .map(|e| {
                let slope = (0..=100)
                    .map(|i| e.latency.derivative(hi * i as f64 / 100.0))
                    .fold(0.0f64, f64::max);
                e.latency.eval(hi) + hi * slope
            })
            .fold(0.0f64, f64::max);
        per_edge * (self.edge_count() as f64).sqrt()
    }

    /// Untolled potential `Phi(f) = sum_e int_0^{f_e} l_e`.
    pub fn potential(&self, edge_flows: &Vector) -> Result<f64> {
        edge_flows.check_dim(self.edge_count())?;
        Ok(self
            .edges
            .iter()
            .zip(edge_flows.iter())
            .map(|(e, f)| e.latency.integral(*f))
            .sum())
    }

    /// `Psi(f) = sum_e f_e l_e(f_e)` — tolls excluded.
    pub fn social_cost(&self, edge_flows: &Vector) -> Result<f64> {
        edge_flows.check_dim(self.edge_count())?;
        Ok(self
            .edges
            .iter()
            .zip(edge_flows.iter())
            .map(|(e, f)| f * e.latency.eval(*f))
            .sum())
    }

    fn tolled_costs(&self, edge_flows: &Vector, tolls: &Vector) -> Vec<f64> {
        self.edges
            .iter()
            .enumerate()
            .map(|(i, e)| e.latency.eval(edge_flows[i]) + tolls[i])
            .collect()
    }

    /// Dijkstra under nonnegative edge weights; returns (cost, edge list).
    fn shortest_path(&self, weights: &[f64], source: usize, sink: usize) -> Option<(f64, Vec<usize>)> {
        let n = self.node_count();
        let mut dist = vec![f64::INFINITY; n];
        let mut from_edge: Vec<Option<usize>> = vec![None; n];
        let mut done = vec![false; n];
        dist[source] = 0.0;
        for _ in 0..n {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for v in 0..n {
                if !done[v] && dist[v] < best {
                    best = dist[v];
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            for (idx, e) in self.edges.iter().enumerate() {
                if e.tail == u {
                    let cand = dist[u] + weights[idx].max(0.0);
                    if cand < dist[e.head] - 1e-15 {
                        dist[e.head] = cand;
                        from_edge[e.head] = Some(idx);
                    }
                }
            }
        }
        if !dist[sink].is_finite() {
            return None;
        }
        let mut path = Vec::new();
        let mut v = sink;
        while v != source {
            let e = from_edge[v]?;
            path.push(e);
            v = self.edges[e].tail;
        }
        path.reverse();
        Some((dist[sink], path))
    }

    /// All simple source-sink paths of the single commodity, as edge lists,
    /// in DFS discovery order (the tie-break order everywhere).
    pub fn enumerate_paths(&self, limit: usize) -> Result<Vec<Vec<usize>>> {
        if self.commodities.len() != 1 {
            return Err(Error::Unsupported(
                "path enumeration needs a single commodity".into(),
            ));
        }
        let c = &self.commodities[0];
        let mut paths = Vec::new();
        let mut stack: Vec<usize> = Vec::new();
        let mut visited = vec![false; self.node_count()];
        self.dfs_paths(c.source, c.sink, &mut visited, &mut stack, &mut paths, limit)?;
        Ok(paths)
    }

    fn dfs_paths(
        &self,
        node: usize,
        sink: usize,
        visited: &mut Vec<bool>,
        stack: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        limit: usize,
    ) -> Result<()> {
        if node == sink {
            if out.len() >= limit {
                return Err(Error::Unsupported(format!(
                    "more than {limit} paths; path-based operations are unsupported"
                )));
            }
            out.push(stack.clone());
            return Ok(());
        }
        visited[node] = true;
        for (idx, e) in self.edges.iter().enumerate() {
            if e.tail == node && !visited[e.head] {
                stack.push(idx);
                self.dfs_paths(e.head, sink, visited, stack, out, limit)?;
                stack.pop();
            }
        }
        visited[node] = false;
        Ok(())
    }

    pub fn path_edge_flows(&self, paths: &[Vec<usize>], path_flows: &[f64]) -> Vector {
        let mut edge = vec![0.0; self.edge_count()];
        for (p, f) in paths.iter().zip(path_flows) {
            for &e in p {
                edge[e] += f;
            }
        }
        Vector::from(edge)
    }

    /// Aggregate node-balance residual of candidate edge flows.
    pub fn conservation_residual(&self, edge_flows: &Vector) -> Result<f64> {
        edge_flows.check_dim(self.edge_count())?;
        let n = self.node_count();
        let mut balance = vec![0.0; n];
        for (i, e) in self.edges.iter().enumerate() {
            balance[e.tail] += edge_flows[i];
            balance[e.head] -= edge_flows[i];
        }
        for c in &self.commodities {
            balance[c.source] -= c.demand;
            balance[c.sink] += c.demand;
        }
        Ok(balance.iter().map(|b| b * b).sum::<f64>().sqrt())
    }
}

/// Wardrop equilibrium of the tolled game, to edge-flow accuracy `tol`.
pub fn wardrop_equilibrium(game: &RoutingGame, tolls: &Vector, tol: f64) -> Result<Flow> {
    let start = all_or_nothing(game, tolls)?;
    wardrop_equilibrium_with_start(game, tolls, tol, &start)
}

fn all_or_nothing(game: &RoutingGame, tolls: &Vector) -> Result<Flow> {
    tolls.check_dim(game.edge_count())?;
    let weights = game.tolled_costs(&Vector::zeros(game.edge_count()), tolls);
    let mut per = Vec::new();
    for c in game.commodities() {
        let (_, path) = game
            .shortest_path(&weights, c.source, c.sink)
            .ok_or_else(|| Error::Model("disconnected commodity".into()))?;
        let mut f = vec![0.0; game.edge_count()];
        for e in path {
            f[e] += c.demand;
        }
        per.push(Vector::from(f));
    }
    let mut total = Vector::zeros(game.edge_count());
    for f in &per {
        total = total.axpy(1.0, f);
    }
    Ok(Flow {
        edge_flows: total,
        per_commodity: Some(per),
        path_flows: None,
    })
}

/// Frank-Wolfe with exact line search from a given starting flow. Runs until
/// the duality gap certifies edge-flow distance `tol` (strong convexity of
/// the potential under the positive-slope assumption).
pub fn wardrop_equilibrium_with_start(
    game: &RoutingGame,
    tolls: &Vector,
    tol: f64,
    start: &Flow,
) -> Result<Flow> {
    tolls.check_dim(game.edge_count())?;
    if tolls.min_entry() < 0.0 {
        return Err(Error::InvalidParameter("tolls must be nonnegative".into()));
    }
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    if game.sigma_min() <= 0.0 {
        return equilibrium_by_enumeration(game, tolls).map(|(flow, _)| flow);
    }
    let gap_target = 0.5 * game.sigma_min() * tol * tol;
    let mut per = start
        .per_commodity
        .clone()
        .ok_or_else(|| Error::Model("starting flow lacks a commodity decomposition".into()))?;
    let mut total = Vector::zeros(game.edge_count());
    for f in &per {
        total = total.axpy(1.0, f);
    }

    let cap = 400_000usize;
    let mut gap = f64::INFINITY;
    for _ in 0..cap {
        let weights = game.tolled_costs(&total, tolls);
        let mut target_per = Vec::with_capacity(per.len());
        for c in game.commodities() {
            let (_, path) = game
                .shortest_path(&weights, c.source, c.sink)
                .ok_or_else(|| Error::Model("disconnected commodity".into()))?;
            let mut f = vec![0.0; game.edge_count()];
            for e in path {
                f[e] += c.demand;
            }
            target_per.push(Vector::from(f));
        }
        let mut target = Vector::zeros(game.edge_count());
        for f in &target_per {
            target = target.axpy(1.0, f);
        }
        let direction = &target - &total;
        gap = -direction
            .iter()
            .zip(weights.iter())
            .map(|(d, w)| d * w)
            .sum::<f64>();
        if gap <= gap_target {
            return Ok(Flow {
                edge_flows: total,
                per_commodity: Some(per),
                path_flows: None,
            });
        }
        // exact line search: the directional derivative is increasing in t
        let h = |t: f64| -> f64 {
            direction
                .iter()
                .enumerate()
                .map(|(i, d)| d * (game.edges()[i].latency.eval(total[i] + t * d) + tolls[i]))
                .sum()
        };
        let step = if h(1.0) <= 0.0 {
            1.0
        } else {
            let mut lo = 0.0;
            let mut hi = 1.0;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if h(mid) <= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        if step < 1e-16 {
            break;
        }
        for (f, t) in per.iter_mut().zip(&target_per) {
            *f = f.axpy(step, &(t - &*f));
        }
        total = Vector::zeros(game.edge_count());
        for f in &per {
            total = total.axpy(1.0, f);
        }
    }
    Err(Error::SolverFailure {
        iterations: cap,
        residual: gap,
    })
}

/// Max over commodities and used paths of (tolled path cost − min path
/// cost): the Wardrop optimality certificate.
pub fn wardrop_certificate(game: &RoutingGame, tolls: &Vector, flow: &Flow) -> Result<f64> {
    let per = flow
        .per_commodity
        .as_ref()
        .ok_or_else(|| Error::Model("certificate needs a commodity decomposition".into()))?;
    let weights = game.tolled_costs(&flow.edge_flows, tolls);
    let mut worst: f64 = 0.0;
    for (c, f) in game.commodities().iter().zip(per) {
        let (min_cost, _) = game
            .shortest_path(&weights, c.source, c.sink)
            .ok_or_else(|| Error::Model("disconnected commodity".into()))?;
        // strip paths from the commodity flow and price each one
        let mut rem = f.to_vec();
        let threshold = 1e-9 * c.demand.max(1.0);
        for _ in 0..10 * game.edge_count() {
            // follow positive flow from the source
            let mut node = c.source;
            let mut path = Vec::new();
            let mut seen = vec![false; game.node_count()];
            loop {
                if node == c.sink {
                    break;
                }
                seen[node] = true;
                let next = game
                    .edges()
                    .iter()
                    .enumerate()
                    .filter(|(i, e)| e.tail == node && rem[*i] > threshold && !seen[e.head])
                    .max_by(|a, b| rem[a.0].partial_cmp(&rem[b.0]).unwrap());
                match next {
                    Some((i, e)) => {
                        path.push(i);
                        node = e.head;
                    }
                    None => break,
                }
            }
            if node != c.sink || path.is_empty() {
                break;
            }
            let bottleneck = path.iter().map(|i| rem[*i]).fold(f64::INFINITY, f64::min);
            let cost: f64 = path.iter().map(|i| weights[*i]).sum();
            worst = worst.max(cost - min_cost);
            for i in path {
                rem[i] -= bottleneck;
            }
        }
    }
    Ok(worst)
}

/// Exact equilibrium of a single-commodity game with affine latencies by
/// support enumeration over path classes. Returns the flow and the used
/// support. Ties at exact indifference resolve to the lexicographically
/// smallest support in path discovery order.
pub fn equilibrium_by_enumeration(
    game: &RoutingGame,
    tolls: &Vector,
) -> Result<(Flow, Vec<usize>)> {
    tolls.check_dim(game.edge_count())?;
    let paths = game.enumerate_paths(16)?;
    let k = paths.len();
    let demand = game.commodities()[0].demand;
    let (a, b): (Vec<f64>, Vec<f64>) = game
        .edges()
        .iter()
        .enumerate()
        .map(|(i, e)| match &e.latency {
            Latency::Affine { a, b } => (*a, b + tolls[i]),
            Latency::Poly { .. } => (f64::NAN, f64::NAN),
        })
        .unzip();
    if a.iter().any(|v| v.is_nan()) {
        return Err(Error::Unsupported(
            "path-class enumeration needs affine latencies".into(),
        ));
    }
    // path quadratic form: cost_i(f) = sum_j M_ij f_j + c_i
    let mut m = vec![0.0; k * k];
    let mut c = vec![0.0; k];
    for i in 0..k {
        for j in 0..k {
            m[i * k + j] = paths[i]
                .iter()
                .filter(|e| paths[j].contains(e))
                .map(|e| a[*e])
                .sum();
        }
        c[i] = paths[i].iter().map(|e| b[*e]).sum();
    }

    let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
    for mask in 1..(1u32 << k) {
        let support: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
        let s = support.len();
        // solve: sum_j M_ij f_j - mu = -c_i (i in S), sum f = demand
        let mut aug = vec![0.0; (s + 1) * (s + 2)];
        for (r, &i) in support.iter().enumerate() {
            for (cidx, &j) in support.iter().enumerate() {
                aug[r * (s + 2) + cidx] = m[i * k + j];
            }
            aug[r * (s + 2) + s] = -1.0;
            aug[r * (s + 2) + s + 1] = -c[i];
        }
        for cidx in 0..s {
            aug[s * (s + 2) + cidx] = 1.0;
        }
        aug[s * (s + 2) + s + 1] = demand;
        let solution = match solve_dense(&mut aug, s + 1) {
            Some(sol) => sol,
            None => continue,
        };
        let flows = &solution[..s];
        let mu = solution[s];
        if flows.iter().any(|f| *f < -1e-9) {
            continue;
        }
        let mut path_flows = vec![0.0; k];
        for (idx, &i) in support.iter().enumerate() {
            path_flows[i] = flows[idx].max(0.0);
        }
        // unused paths must not be cheaper
        let valid = (0..k).all(|i| {
            let cost: f64 = (0..k).map(|j| m[i * k + j] * path_flows[j]).sum::<f64>() + c[i];
            cost >= mu - 1e-9
        });
        if !valid {
            continue;
        }
        // tolled Beckmann potential in path coordinates
        let mut pot = 0.0;
        for i in 0..k {
            for j in 0..k {
                pot += 0.5 * path_flows[i] * m[i * k + j] * path_flows[j];
            }
            pot += c[i] * path_flows[i];
        }
        let better = match &best {
            None => true,
            Some((p, sup, _)) => {
                pot < p - 1e-12 || (pot <= p + 1e-12 && support < *sup)
            }
        };
        if better {
            best = Some((pot, support, path_flows));
        }
    }
    let (_, support, path_flows) =
        best.ok_or_else(|| Error::Model("no equilibrium support found".into()))?;
    let edge = game.path_edge_flows(&paths, &path_flows);
    let per = vec![edge.clone()];
    Ok((
        Flow {
            edge_flows: edge,
            per_commodity: Some(per),
            path_flows: Some(path_flows),
        },
        support,
    ))
}

fn solve_dense(aug: &mut [f64], n: usize) -> Option<Vec<f64>> {
    let w = n + 1;
    for col in 0..n {
        let mut pivot = col;
        for r in col + 1..n {
            if aug[r * w + col].abs() > aug[pivot * w + col].abs() {
                pivot = r;
            }
        }
        if aug[pivot * w + col].abs() < 1e-12 {
            return None;
        }
        if pivot != col {
            for j in 0..w {
                aug.swap(col * w + j, pivot * w + j);
            }
        }
        let d = aug[col * w + col];
        for r in 0..n {
            if r != col {
                let factor = aug[r * w + col] / d;
                for j in col..w {
                    aug[r * w + j] -= factor * aug[col * w + j];
                }
            }
        }
    }
    Some((0..n).map(|r| aug[r * w + n] / aug[r * w + r]).collect())
}

/// The equilibrium map as a leader-facing responder: tolls in, edge flows
/// out, one query per call.
pub struct EquilibriumResponder {
    game: RoutingGame,
    tol: f64,
    queries: u64,
}

impl EquilibriumResponder {
    pub fn new(game: RoutingGame, tol: f64) -> Self {
        EquilibriumResponder {
            game,
            tol,
            queries: 0,
        }
    }

    pub fn game(&self) -> &RoutingGame {
        &self.game
    }
}

impl Responder for EquilibriumResponder {
    fn respond(&mut self, tolls: &Vector) -> Result<Vector> {
        self.queries += 1;
        Ok(wardrop_equilibrium(&self.game, tolls, self.tol)?.edge_flows)
    }

    fn query_count(&self) -> u64 {
        self.queries
    }

    fn dim(&self) -> usize {
        self.game.edge_count()
    }
}

#[derive(Clone, Debug)]
pub struct EnforceOptions {
    pub override_t: Option<usize>,
    pub override_eta: Option<f64>,
    /// Equilibrium-oracle accuracy; defaults to `delta / 10`.
    pub equilibrium_tol: Option<f64>,
    pub check_every: usize,
}

impl Default for EnforceOptions {
    fn default() -> Self {
        EnforceOptions {
            override_t: Some(5000),
            override_eta: None,
            equilibrium_tol: None,
            check_every: 50,
        }
    }
}

/// Learns tolls enforcing a target edge flow to distance `delta`, by dual
/// subgradient ascent over `{tau >= 0 : |tau| <= 2m}`: raise the toll where
/// the equilibrium overshoots the target.
pub fn enforce_target_flow(
    game: &RoutingGame,
    target: &Vector,
    delta: f64,
    opts: &EnforceOptions,
) -> Result<InduceResult> {
    target.check_dim(game.edge_count())?;
    if !delta.is_finite() || delta <= 0.0 {
        return Err(Error::InvalidParameter("delta must be positive".into()));
    }
    if game.conservation_residual(target)? > 1e-6 {
        return Err(Error::Model("target flow violates conservation".into()));
    }
    if target.min_entry() < -1e-12 {
        return Err(Error::Model("target flow must be nonnegative".into()));
    }
    let m = game.edge_count();
    let sigma = game.sigma_min();
    let schedule_iterations = if sigma > 0.0 {
        enforce_flow_schedule(m, delta, sigma).iterations
    } else {
        f64::INFINITY
    };
    let horizon = match opts.override_t {
        Some(t) => t,
        None if schedule_iterations <= 5e7 => schedule_iterations.ceil() as usize,
        None => {
            return Err(Error::Config(
                "theoretical horizon not runnable; set override_t".into(),
            ))
        }
    };
    let eta = opts
        .override_eta
        .unwrap_or_else(|| 2.0 * (m as f64).powf(1.5) / (horizon as f64).sqrt());
    let eq_tol = opts.equilibrium_tol.unwrap_or(delta / 10.0);
    let space = FeasibleSet::nonneg_ball(m, 2.0 * m as f64)?;
    let mut responder = EquilibriumResponder::new(game.clone(), eq_tol);
    induce_by_subgradient(
        &mut responder,
        &LoopSpec {
            action_space: &space,
            target,
            horizon,
            eta,
            epsilon: delta,
            exit_epsilon: delta,
            orientation: ConstraintOrientation::TargetUpperBound,
            check_every: opts.check_every,
            check_samples: 1,
        },
    )
}

/// Like [`enforce_target_flow`] but budget exhaustion returns the closest
/// induced flow with `false` instead of an error. Games without strong
/// convexity have non-inducible targets, and the toll optimizer must keep
/// searching through them.
fn enforce_target_flow_best_effort(
    game: &RoutingGame,
    target: &Vector,
    delta: f64,
    opts: &EnforceOptions,
) -> Result<(InduceResult, bool)> {
    let m = game.edge_count();
    let horizon = opts.override_t.unwrap_or(5000);
    let eta = opts
        .override_eta
        .unwrap_or_else(|| 2.0 * (m as f64).powf(1.5) / (horizon as f64).sqrt());
    let eq_tol = opts.equilibrium_tol.unwrap_or(delta / 10.0);
    let space = FeasibleSet::nonneg_ball(m, 2.0 * m as f64)?;
    let mut responder = EquilibriumResponder::new(game.clone(), eq_tol);
    induce_by_subgradient_best_effort(
        &mut responder,
        &LoopSpec {
            action_space: &space,
            target,
            horizon,
            eta,
            epsilon: delta,
            exit_epsilon: delta,
            orientation: ConstraintOrientation::TargetUpperBound,
            check_every: opts.check_every,
            check_samples: 1,
        },
    )
}

/// Ellipsoid variant of toll enforcement over `{tau >= 0 : |tau| <= m}`,
/// with the published cap `100 m^2 ln(m/(eps sigma))`.
pub fn learn_toll_ellipsoid(
    game: &RoutingGame,
    target: &Vector,
    epsilon: f64,
    override_t: Option<usize>,
) -> Result<InduceResult> {
    target.check_dim(game.edge_count())?;
    let m = game.edge_count();
    let sigma = game.sigma_min();
    let horizon = override_t.unwrap_or_else(|| {
        crate::ellipsoid::learn_toll_ellipsoid_iterations(m, epsilon, sigma.max(1e-9))
            .ceil()
            .max(8.0) as usize
    });
    let space = FeasibleSet::nonneg_ball(m, m as f64)?;
    let mut responder = EquilibriumResponder::new(game.clone(), epsilon / 10.0);
    crate::ellipsoid::induce_by_ellipsoid(
        &mut responder,
        &crate::ellipsoid::EllipsoidSpec {
            action_space: &space,
            initial_radius: m as f64,
            target,
            horizon,
            epsilon,
            orientation: ConstraintOrientation::TargetUpperBound,
        },
    )
}

#[derive(Clone, Debug, Default)]
pub struct TollOptimizeOptions {
    /// Social-cost Lipschitz constant; computed from the latencies if unset.
    pub lambda_l: Option<f64>,
    pub leader: crate::leader::LeaderOptions,
    pub enforce: EnforceOptions,
}

/// Finds tolls whose equilibrium approximately minimizes social cost:
/// zeroth-order search over the path-flow simplex, each candidate flow
/// enforced by the toll-learning loop and priced by its observed social
/// cost. Single-commodity games with at most 16 paths.
pub fn optimize_tolls(
    game: &RoutingGame,
    alpha: f64,
    opts: &TollOptimizeOptions,
) -> Result<crate::leader::LeaderResult> {
    use crate::leader::{LeaderResult, LeaderTraceRow};
    use crate::zoo::{self, RoundableSet, ZooConfig, ZooMethod};

    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::Config("alpha must be positive".into()));
    }
    let paths = game.enumerate_paths(16)?;
    let k = paths.len();
    let demand = game.commodities()[0].demand;
    let lambda_l = opts.lambda_l.unwrap_or_else(|| game.social_cost_lipschitz());
    let n = k - 1;
    let schedule_eps = alpha / (lambda_l * (n as f64 + 1.0));
    let delta = opts
        .leader
        .epsilon_floor
        .map_or(schedule_eps, |f| schedule_eps.max(f));
    let floored = delta > schedule_eps * (1.0 + 1e-12);
    if floored && opts.leader.require_certified {
        return Err(Error::Config(
            "enforcement accuracy below the floor; cannot certify".into(),
        ));
    }
    let alpha_prime = n as f64 * delta * lambda_l;

    let body = zoo::round_set(&RoundableSet::PathSimplex { paths: k, total: demand })?;
    let mut trace: Vec<LeaderTraceRow> = Vec::new();
    let mut follower_queries: u64 = 0;
    let enforce_opts = opts.enforce.clone();
    let mut all_enforced = true;
    let mut evaluate = |path_flows: &Vector| -> Result<f64> {
        let target = game.path_edge_flows(&paths, path_flows.as_slice());
        // best effort: a target flow may not be inducible at all (zero-slope
        // latencies); the observed equilibrium's social cost still prices
        // the query
        let (out, hit) = enforce_target_flow_best_effort(game, &target, delta, &enforce_opts)?;
        all_enforced &= hit;
        follower_queries += out.queries;
        let sc = game.social_cost(&out.induced)?;
        let distance = out.induced.dist(&target);
        trace.push(LeaderTraceRow {
            iteration: trace.len() + 1,
            target,
            leader_action_norm: out.leader_action.norm(),
            distance_achieved: distance,
            observed_objective: sc,
            cumulative_queries: follower_queries,
        });
        Ok(sc)
    };
    let method = opts.leader.zoo_method.unwrap_or(if n <= 3 {
        ZooMethod::GridRefine
    } else {
        ZooMethod::SmoothedGradient
    });
    let zoo_cfg = ZooConfig::new(
        alpha_prime,
        method,
        opts.leader.zoo_budget,
        opts.leader.zoo_seed,
    );
    let outcome = zoo::minimize_rounded(&mut evaluate, &body, &zoo_cfg)?;

    let target = game.path_edge_flows(&paths, outcome.point.as_slice());
    let (final_run, final_hit) =
        enforce_target_flow_best_effort(game, &target, delta, &opts.enforce)?;
    follower_queries += final_run.queries;
    let achieved = game.social_cost(&final_run.induced)?;
    Ok(LeaderResult {
        leader_action: final_run.leader_action,
        induced: final_run.induced,
        achieved_objective: achieved,
        total_follower_queries: follower_queries,
        zoo_queries: outcome.calls,
        trace,
        certified: !floored && outcome.certified && all_enforced && final_hit,
        epsilon_used: delta,
    })
}

/// The two-route instance used throughout: latencies `x` and `0.5 + 0.5 x`,
/// unit demand.
pub fn two_link_game() -> RoutingGame {
    RoutingGame::new(
        vec!["S".into(), "T".into()],
        vec![
            Edge {
                tail: 0,
                head: 1,
                latency: Latency::Affine { a: 1.0, b: 0.0 },
            },
            Edge {
                tail: 0,
                head: 1,
                latency: Latency::Affine { a: 0.5, b: 0.5 },
            },
        ],
        vec![Commodity {
            source: 0,
            sink: 1,
            demand: 1.0,
        }],
    )
    .expect("two-link instance is valid")
}

/// The diamond network whose equilibrium social cost is not convex in the
/// two bridge tolls. Edge order: S->A, S->B, A->T, B->T, A->B (slow bridge,
/// latency 1/200), A->B (free bridge).
pub fn braess_game() -> RoutingGame {
    RoutingGame::new(
        vec!["S".into(), "A".into(), "B".into(), "T".into()],
        vec![
            Edge { tail: 0, head: 1, latency: Latency::Affine { a: 0.4, b: 0.0 } },
            Edge { tail: 0, head: 2, latency: Latency::Affine { a: 0.0, b: 0.5 } },
            Edge { tail: 1, head: 3, latency: Latency::Affine { a: 0.0, b: 0.5 } },
            Edge { tail: 2, head: 3, latency: Latency::Affine { a: 0.4, b: 0.0 } },
            Edge { tail: 1, head: 2, latency: Latency::Affine { a: 0.0, b: 1.0 / 200.0 } },
            Edge { tail: 1, head: 2, latency: Latency::Affine { a: 0.0, b: 0.0 } },
        ],
        vec![Commodity { source: 0, sink: 3, demand: 1.0 }],
    )
    .expect("braess instance is valid")
}

/// Social cost (tolls excluded) of the bridge-toll instance at tolls
/// `(tau1, tau2)` on the slow and free bridges; all other tolls zero.
/// Solved by exact path-class enumeration since two edges have zero slope.
pub fn braess_social_cost(tau1: f64, tau2: f64) -> Result<f64> {
    if tau1 < 0.0 || tau2 < 0.0 {
        return Err(Error::InvalidParameter("tolls must be nonnegative".into()));
    }
    let game = braess_game();
    let mut tolls = Vector::zeros(game.edge_count());
    tolls.set(4, tau1);
    tolls.set(5, tau2);
    let (flow, _) = equilibrium_by_enumeration(&game, &tolls)?;
    game.social_cost(&flow.edge_flows)
}

/// Parses the text graph format: one edge per line
/// `tail head affine a b` or `tail head poly c0 c1 ...`, plus commodity
/// lines `commodity source sink demand`. `#` starts a comment.
pub fn parse_game(text: &str) -> Result<RoutingGame> {
    let mut names: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let intern = |token: &str, names: &mut Vec<String>, index: &mut HashMap<String, usize>| {
        *index.entry(token.to_string()).or_insert_with(|| {
            names.push(token.to_string());
            names.len() - 1
        })
    };
    let mut edges = Vec::new();
    let mut commodities = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let err = |msg: &str| Error::Model(format!("line {}: {msg}", lineno + 1));
        if tokens[0] == "commodity" {
            if tokens.len() != 4 {
                return Err(err("commodity needs: commodity source sink demand"));
            }
            let source = intern(tokens[1], &mut names, &mut index);
            let sink = intern(tokens[2], &mut names, &mut index);
            let demand: f64 = tokens[3].parse().map_err(|_| err("bad demand"))?;
            commodities.push(Commodity { source, sink, demand });
        } else {
            if tokens.len() < 4 {
                return Err(err("edge needs: tail head variant params"));
            }
            let tail = intern(tokens[0], &mut names, &mut index);
            let head = intern(tokens[1], &mut names, &mut index);
            let params: Vec<f64> = tokens[3..]
                .iter()
                .map(|t| t.parse::<f64>().map_err(|_| err("bad parameter")))
                .collect::<Result<_>>()?;
            let latency = match tokens[2] {
                "affine" => {
                    if params.len() != 2 {
                        return Err(err("affine needs two parameters"));
                    }
                    Latency::Affine { a: params[0], b: params[1] }
                }
                "poly" => {
                    if params.is_empty() {
                        return Err(err("poly needs coefficients"));
                    }
                    Latency::Poly { coeffs: params }
                }
                other => return Err(err(&format!("unknown latency variant '{other}'"))),
            };
            edges.push(Edge { tail, head, latency });
        }
    }
    RoutingGame::new(names, edges, commodities)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_link_untolled_equilibrium() {
        let game = two_link_game();
        let flow = wardrop_equilibrium(&game, &Vector::zeros(2), 1e-6).unwrap();
        assert!((flow.edge_flows[0] - 2.0 / 3.0).abs() <= 1e-4);
        assert!((flow.edge_flows[1] - 1.0 / 3.0).abs() <= 1e-4);
        let sc = game.social_cost(&flow.edge_flows).unwrap();
        assert!((sc - 2.0 / 3.0).abs() <= 1e-4);
        assert!(wardrop_certificate(&game, &Vector::zeros(2), &flow).unwrap() <= 1e-4);
    }

    #[test]
    fn two_link_tolled_equilibrium_hits_target() {
        // toll 0.25 on the fast link equalizes at (0.5, 0.5)
        let game = two_link_game();
        let tolls = Vector::from(vec![0.25, 0.0]);
        let flow = wardrop_equilibrium(&game, &tolls, 1e-6).unwrap();
        assert!(flow.edge_flows.dist(&Vector::from(vec![0.5, 0.5])) <= 1e-4);
    }

    #[test]
    fn zero_flow_social_cost_is_zero() {
        let game = two_link_game();
        assert_eq!(game.social_cost(&Vector::zeros(2)).unwrap(), 0.0);
    }

    #[test]
    fn equilibrium_is_unique_across_starts() {
        let game = two_link_game();
        let tol = 1e-5;
        let tolls = Vector::from(vec![0.1, 0.05]);
        let a = wardrop_equilibrium(&game, &tolls, tol).unwrap();
        let start = Flow {
            edge_flows: Vector::from(vec![0.0, 1.0]),
            per_commodity: Some(vec![Vector::from(vec![0.0, 1.0])]),
            path_flows: None,
        };
        let b = wardrop_equilibrium_with_start(&game, &tolls, tol, &start).unwrap();
        assert!(a.edge_flows.dist(&b.edge_flows) <= 2.0 * tol);
    }

    #[test]
    fn potential_lipschitz_in_root_m() {
        use rand::Rng;
        use rand::SeedableRng;
        let game = two_link_game();
        let m = game.edge_count() as f64;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let x1: f64 = rng.random_range(0.0..1.0);
            let x2: f64 = rng.random_range(0.0..1.0);
            let f = Vector::from(vec![x1, 1.0 - x1]);
            let g = Vector::from(vec![x2, 1.0 - x2]);
            let lhs = (game.potential(&f).unwrap() - game.potential(&g).unwrap()).abs();
            assert!(lhs <= m.sqrt() * f.dist(&g) + 1e-12);
        }
    }

    #[test]
    fn braess_three_published_points() {
        assert!((braess_social_cost(0.0, 0.0).unwrap() - 0.8).abs() <= 1e-9);
        assert!((braess_social_cost(1.0, 2.0).unwrap() - 0.7).abs() <= 1e-9);
        assert!((braess_social_cost(0.01, 0.02).unwrap() - 0.805).abs() <= 1e-9);
    }

    #[test]
    fn braess_witnesses_nonconvexity() {
        let sc0 = braess_social_cost(0.0, 0.0).unwrap();
        let sc1 = braess_social_cost(1.0, 2.0).unwrap();
        let mix = braess_social_cost(0.01, 0.02).unwrap();
        assert!(mix > 0.99 * sc0 + 0.01 * sc1 + 1e-6);
    }

    #[test]
    fn braess_equilibria_route_as_analyzed() {
        let game = braess_game();
        // tau = 0: everything crosses the free bridge
        let (flow, _) = equilibrium_by_enumeration(&game, &Vector::zeros(6)).unwrap();
        assert!((flow.edge_flows[0] - 1.0).abs() < 1e-9); // S->A
        assert!((flow.edge_flows[5] - 1.0).abs() < 1e-9); // free bridge
        // tau = (1, 2): bridges abandoned, half and half
        let mut tolls = Vector::zeros(6);
        tolls.set(4, 1.0);
        tolls.set(5, 2.0);
        let (flow, _) = equilibrium_by_enumeration(&game, &tolls).unwrap();
        assert!((flow.edge_flows[0] - 0.5).abs() < 1e-9);
        assert!((flow.edge_flows[1] - 0.5).abs() < 1e-9);
        assert!(flow.edge_flows[4].abs() < 1e-9);
        assert!(flow.edge_flows[5].abs() < 1e-9);
    }

    #[test]
    fn enforce_two_link_target() {
        let game = two_link_game();
        let target = Vector::from(vec![0.5, 0.5]);
        let opts = EnforceOptions {
            override_t: Some(4000),
            override_eta: Some(0.5),
            ..Default::default()
        };
        let out = enforce_target_flow(&game, &target, 1e-2, &opts).unwrap();
        assert!(out.induced.dist(&target) <= 1e-2);
        // analytic inducing tolls satisfy tau1 - tau2 = 0.25
        let diff = out.leader_action[0] - out.leader_action[1];
        assert!((diff - 0.25).abs() <= 2e-2, "toll difference {diff}");
    }

    #[test]
    fn enforce_rejects_infeasible_targets() {
        let game = two_link_game();
        let bad = Vector::from(vec![0.9, 0.9]);
        assert!(matches!(
            enforce_target_flow(&game, &bad, 1e-2, &EnforceOptions::default()),
            Err(Error::Model(_))
        ));
    }

    #[test]
    fn enforce_current_equilibrium_is_instant() {
        let game = two_link_game();
        let eq = wardrop_equilibrium(&game, &Vector::zeros(2), 1e-7).unwrap();
        let opts = EnforceOptions {
            override_t: Some(100),
            override_eta: Some(0.5),
            check_every: 1,
            ..Default::default()
        };
        let out = enforce_target_flow(&game, &eq.edge_flows, 1e-2, &opts).unwrap();
        assert!(out.leader_action.norm() <= 0.05);
        assert!(out.queries <= 4);
    }

    #[test]
    fn toll_ellipsoid_matches_analytic_toll() {
        let game = two_link_game();
        let target = Vector::from(vec![0.5, 0.5]);
        let out = learn_toll_ellipsoid(&game, &target, 1e-3, None).unwrap();
        assert!(out.induced.dist(&target) <= 1e-3);
        let diff = out.leader_action[0] - out.leader_action[1];
        assert!((diff - 0.25).abs() <= 1e-2, "toll difference {diff}");
    }

    #[test]
    fn toll_ellipsoid_queries_scale_with_log_accuracy() {
        let game = two_link_game();
        let target = Vector::from(vec![0.5, 0.5]);
        let mut lnvals = Vec::new();
        let mut counts = Vec::new();
        for eps in [1e-1, 1e-2, 1e-3] {
            let out = learn_toll_ellipsoid(&game, &target, eps, None).unwrap();
            assert!(out.induced.dist(&target) <= eps);
            lnvals.push((1.0 / eps as f64).ln());
            counts.push(out.queries as f64);
        }
        let r2 = crate::stats::linear_fit_r2(&lnvals, &counts);
        assert!(r2 >= 0.95, "R^2 {r2} for counts {counts:?}");
    }

    #[test]
    fn equilibrium_minimizes_the_tolled_potential() {
        use rand::Rng;
        use rand::SeedableRng;
        let game = two_link_game();
        let tolls = Vector::from(vec![0.15, 0.05]);
        let eq = wardrop_equilibrium(&game, &tolls, 1e-6).unwrap();
        let tolled = |f: &Vector| game.potential(f).unwrap() + tolls.dot(f);
        let eq_value = tolled(&eq.edge_flows);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let x: f64 = rng.random_range(0.0..1.0);
            let f = Vector::from(vec![x, 1.0 - x]);
            assert!(eq_value <= tolled(&f) + 1e-8);
        }
    }

    #[test]
    fn dual_sandwich_on_two_link() {
        let game = two_link_game();
        let target = Vector::from(vec![0.5, 0.5]);
        let delta = 1e-2;
        let opts = EnforceOptions {
            override_t: Some(4000),
            override_eta: Some(0.5),
            equilibrium_tol: Some(1e-5),
            ..Default::default()
        };
        let out = enforce_target_flow(&game, &target, delta, &opts).unwrap();
        let tau = &out.leader_action;
        let f = wardrop_equilibrium(&game, tau, 1e-7).unwrap().edge_flows;
        let dual = game.potential(&f).unwrap() + tau.dot(&(&f - &target));
        let phi_target = game.potential(&target).unwrap();
        assert!(dual <= phi_target + 1e-6, "weak duality violated");
        assert!(
            phi_target <= dual + delta * delta * game.sigma_min() + 1e-6,
            "dual gap {} above delta^2 sigma",
            phi_target - dual
        );
    }

    #[test]
    fn optimize_tolls_two_link_reaches_social_optimum() {
        // optimal SC = 0.625 at flow (0.5, 0.5)
        let game = two_link_game();
        let alpha = 0.02;
        let opts = TollOptimizeOptions {
            lambda_l: None,
            leader: crate::leader::LeaderOptions {
                epsilon_floor: Some(5e-3),
                zoo_budget: 200,
                zoo_seed: 4,
                ..Default::default()
            },
            enforce: EnforceOptions {
                override_t: Some(3000),
                override_eta: Some(0.5),
                ..Default::default()
            },
        };
        let out = optimize_tolls(&game, alpha, &opts).unwrap();
        assert!(
            out.achieved_objective <= 0.625 + alpha,
            "social cost {}",
            out.achieved_objective
        );
        assert!(out.induced.dist(&Vector::from(vec![0.5, 0.5])) <= 0.1);
    }

    #[test]
    fn optimize_tolls_braess_beats_published_upper_bound() {
        let game = braess_game();
        let alpha = 0.02;
        let opts = TollOptimizeOptions {
            lambda_l: None,
            leader: crate::leader::LeaderOptions {
                epsilon_floor: Some(1e-2),
                zoo_budget: 260,
                zoo_seed: 9,
                ..Default::default()
            },
            enforce: EnforceOptions {
                override_t: Some(1500),
                override_eta: Some(0.8),
                ..Default::default()
            },
        };
        let out = optimize_tolls(&game, alpha, &opts).unwrap();
        // tolls (1, 2) route at SC 0.7, so the optimum is at most 0.7
        assert!(
            out.achieved_objective <= 0.7 + alpha,
            "social cost {}",
            out.achieved_objective
        );
    }

    #[test]
    fn parse_round_trips_two_link() {
        let text = "\
# two parallel routes
S T affine 1.0 0.0
S T affine 0.5 0.5
commodity S T 1.0
";
        let game = parse_game(text).unwrap();
        assert_eq!(game.edge_count(), 2);
        let flow = wardrop_equilibrium(&game, &Vector::zeros(2), 1e-6).unwrap();
        assert!((flow.edge_flows[0] - 2.0 / 3.0).abs() <= 1e-4);
        assert!(parse_game("S T bogus 1\ncommodity S T 1").is_err());
        assert!(parse_game("S T affine 1 0\ncommodity S T 0.5").is_err());
    }

    #[test]
    fn polynomial_latency_game() {
        let text = "\
S T poly 0.1 0.2 0.7
S T affine 0.6 0.2
commodity S T 1.0
";
        let game = parse_game(text).unwrap();
        let flow = wardrop_equilibrium(&game, &Vector::zeros(2), 1e-5).unwrap();
        let cert = wardrop_certificate(&game, &Vector::zeros(2), &flow).unwrap();
        assert!(cert <= 1e-4, "certificate {cert}");
    }
}
