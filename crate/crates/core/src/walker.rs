//! Simple random walk on clusters, equilibrium measures, and a rejection
//! sampler for the cluster of a point conditioned on reaching a far point.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::keys::{self, tagged_rng, DENOMINATOR_OFFSET, TAG_WALK};
use crate::lattice::{Point, Region};
use crate::montecarlo::{anchor, check_far, Sampler};
use crate::percolation::{bfs, explore, Arena, Cluster, Flow, Lattice, Probe, ProbeVerdict};
use crate::stats::{Estimate, RatioEstimate};

pub const DEFAULT_MAX_STEPS: u64 = 1_000_000;
/// Largest graph accepted by [`exact_hit_distribution`].
pub const EXACT_LIMIT: usize = 10_000;
/// Accepted samples required by [`estimate_iic_hit`].
pub const MIN_ACCEPTED: u64 = 100;
const DENSE_LIMIT: usize = 800;
/// Residual bound met by [`exact_hit_distribution`].
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Undirected connected graph on cluster vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterGraph {
    vertices: Vec<Point>,
    adjacency: Vec<Vec<u32>>,
}

fn adjacency_lists(n: usize, edges: impl Iterator<Item = (usize, usize)>) -> Vec<Vec<u32>> {
    let mut adj = vec![Vec::new(); n];
    for (a, b) in edges {
        adj[a].push(b as u32);
        adj[b].push(a as u32);
    }
    adj
}

impl ClusterGraph {
    /// Builds the graph and checks it is connected, loop-free and simple.
    pub fn new(vertices: Vec<Point>, edges: &[(usize, usize)]) -> Result<Self> {
        let n = vertices.len();
        if n == 0 {
            return Err(Error::EmptySet);
        }
        let d = vertices[0].dim();
        for v in &vertices {
            v.check_dim(d)?;
        }
        let mut sorted = vertices.clone();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("duplicate vertex"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for &(a, b) in edges {
            if a >= n || b >= n || a == b {
                return Err(invalid(format!("bad edge ({a}, {b})")));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(invalid(format!("repeated edge ({a}, {b})")));
            }
        }
        let g = ClusterGraph {
            vertices,
            adjacency: adjacency_lists(n, edges.iter().copied()),
        };
        if !g.connected() {
            return Err(invalid("graph is not connected"));
        }
        Ok(g)
    }

    /// The explored cluster with its recorded open edges.
    pub fn from_cluster(c: &Cluster) -> Result<Self> {
        let vertices = (0..c.len()).map(|i| c.point(i)).collect();
        let edges: Vec<(usize, usize)> =
            c.open_edges().iter().map(|&(a, b)| (a as usize, b as usize)).collect();
        ClusterGraph::new(vertices, &edges)
    }

    fn from_arena(arena: &Arena) -> Self {
        ClusterGraph {
            vertices: Vec::new(),
            adjacency: adjacency_lists(
                arena.len(),
                arena.edges().iter().map(|&(a, b)| (a as usize, b as usize)),
            ),
        }
    }

    fn connected(&self) -> bool {
        let mut seen = vec![false; self.len()];
        let mut stack = vec![0u32];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &self.adjacency[u as usize] {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.len()
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.adjacency[i]
    }

    pub fn index_of(&self, x: &Point) -> Option<usize> {
        self.vertices.iter().position(|v| v == x)
    }

    fn require(&self, x: &Point) -> Result<usize> {
        self.index_of(x)
            .ok_or_else(|| Error::NotInRegion(x.coords().to_vec()))
    }

    fn marks(&self, a: &[Point]) -> Result<Vec<Option<usize>>> {
        let mut mark = vec![None; self.len()];
        let mut any = false;
        for (k, p) in a.iter().enumerate() {
            if let Some(i) = self.index_of(p) {
                if mark[i].is_none() {
                    mark[i] = Some(k);
                }
                any = true;
            }
        }
        if !any {
            return Err(invalid("target set does not meet the graph"));
        }
        Ok(mark)
    }
}

/// Where a walk entered the target set, and after how many steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HitRecord {
    /// `None` on timeout.
    pub hit_point: Option<Point>,
    pub steps: u64,
}

impl HitRecord {
    pub fn timed_out(&self) -> bool {
        self.hit_point.is_none()
    }
}

/// Walks from vertex `start` until a marked vertex; returns its mark.
fn walk<R: Rng>(
    g: &ClusterGraph,
    start: usize,
    mark: &[Option<usize>],
    max_steps: u64,
    rng: &mut R,
) -> (Option<usize>, u64) {
    let mut u = start;
    let mut steps = 0;
    loop {
        if let Some(k) = mark[u] {
            return (Some(k), steps);
        }
        if steps == max_steps {
            return (None, steps);
        }
        let nb = &g.adjacency[u];
        u = nb[rng.gen_range(0..nb.len())] as usize;
        steps += 1;
    }
}

/// Non-lazy simple random walk from `start` up to the first visit to `a`.
pub fn srw_hit<R: Rng>(
    g: &ClusterGraph,
    start: &Point,
    a: &[Point],
    max_steps: u64,
    rng: &mut R,
) -> Result<HitRecord> {
    let s = g.require(start)?;
    let mark = g.marks(a)?;
    let (k, steps) = walk(g, s, &mark, max_steps, rng);
    Ok(HitRecord {
        hit_point: k.map(|k| a[k].clone()),
        steps,
    })
}

/// Law of the first point of `A` visited from `start`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HitDistribution {
    /// Points of `A` in the graph, in the order given.
    pub points: Vec<Point>,
    pub probabilities: Vec<f64>,
    /// Max-norm residual of the harmonic equations at the solution.
    pub residual: f64,
}

impl HitDistribution {
    pub fn probability(&self, x: &Point) -> f64 {
        self.points
            .iter()
            .position(|p| p == x)
            .map_or(0.0, |i| self.probabilities[i])
    }
}

/// Solves `h(v) = mean of h over the neighbours of v` off `A`, with `h = 1_a`
/// on `A`, for every `a`. Dense LU on small graphs, Jacobi-preconditioned
/// conjugate gradients on the graph Laplacian otherwise.
pub fn exact_hit_distribution(g: &ClusterGraph, start: &Point, a: &[Point]) -> Result<HitDistribution> {
    if g.len() > EXACT_LIMIT {
        return Err(Error::SizeGuard {
            what: "exact hitting solve",
            size: g.len() as u128,
            limit: EXACT_LIMIT as u128,
        });
    }
    let s = g.require(start)?;
    let mark = g.marks(a)?;
    let targets: Vec<usize> = {
        let mut t: Vec<usize> = mark.iter().flatten().copied().collect();
        t.sort_unstable();
        t.dedup();
        t
    };
    let points: Vec<Point> = targets.iter().map(|&k| a[k].clone()).collect();
    if let Some(k) = mark[s] {
        let probabilities = targets.iter().map(|&t| f64::from(u8::from(t == k))).collect();
        return Ok(HitDistribution {
            points,
            probabilities,
            residual: 0.0,
        });
    }
    // transient vertices and their positions in the system
    let free: Vec<usize> = (0..g.len()).filter(|&v| mark[v].is_none()).collect();
    let mut pos = vec![usize::MAX; g.len()];
    for (i, &v) in free.iter().enumerate() {
        pos[v] = i;
    }
    let col = |k: usize| targets.iter().position(|&t| t == k).unwrap();
    let m = free.len();
    // L h = b with L = D − A on the free vertices
    let mut b = DMatrix::<f64>::zeros(m, targets.len());
    for (i, &v) in free.iter().enumerate() {
        for &u in &g.adjacency[v] {
            if let Some(k) = mark[u as usize] {
                b[(i, col(k))] += 1.0;
            }
        }
    }
    let h = if m <= DENSE_LIMIT {
        let mut l = DMatrix::<f64>::zeros(m, m);
        for (i, &v) in free.iter().enumerate() {
            l[(i, i)] = g.adjacency[v].len() as f64;
            for &u in &g.adjacency[v] {
                let j = pos[u as usize];
                if j != usize::MAX {
                    l[(i, j)] -= 1.0;
                }
            }
        }
        l.lu()
            .solve(&b)
            .ok_or_else(|| invalid("singular hitting system"))?
    } else {
        let mut h = DMatrix::<f64>::zeros(m, targets.len());
        for c in 0..targets.len() {
            let x = conjugate_gradient(g, &free, &pos, &b.column(c).into_owned());
            h.set_column(c, &x);
        }
        h
    };
    let residual = hit_residual(g, &free, &pos, &h, &b);
    let mut probabilities: Vec<f64> = (0..targets.len()).map(|c| h[(pos[s], c)]).collect();
    let total: f64 = probabilities.iter().sum();
    probabilities.iter_mut().for_each(|q| *q /= total);
    Ok(HitDistribution {
        points,
        probabilities,
        residual,
    })
}

fn laplacian_apply(g: &ClusterGraph, free: &[usize], pos: &[usize], x: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(
        free.len(),
        free.iter().enumerate().map(|(i, &v)| {
            let mut y = g.adjacency[v].len() as f64 * x[i];
            for &u in &g.adjacency[v] {
                let j = pos[u as usize];
                if j != usize::MAX {
                    y -= x[j];
                }
            }
            y
        }),
    )
}

fn conjugate_gradient(g: &ClusterGraph, free: &[usize], pos: &[usize], b: &DVector<f64>) -> DVector<f64> {
    let diag = DVector::from_iterator(free.len(), free.iter().map(|&v| g.adjacency[v].len() as f64));
    let mut x = DVector::<f64>::zeros(free.len());
    let mut r = b.clone();
    let mut z = r.component_div(&diag);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    for _ in 0..20 * free.len().max(100) {
        if r.amax() <= 1e-14 {
            break;
        }
        let ap = laplacian_apply(g, free, pos, &p);
        let alpha = rz / p.dot(&ap);
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        z = r.component_div(&diag);
        let next = r.dot(&z);
        p = &z + (next / rz) * &p;
        rz = next;
    }
    x
}

/// Max over free vertices and targets of `|h(v) − mean of h over neighbours|`.
fn hit_residual(g: &ClusterGraph, free: &[usize], pos: &[usize], h: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for c in 0..h.ncols() {
        let x = h.column(c).into_owned();
        let lx = laplacian_apply(g, free, pos, &x);
        for (i, &v) in free.iter().enumerate() {
            let deg = g.adjacency[v].len() as f64;
            worst = worst.max(((lx[i] - b[(i, c)]) / deg).abs());
        }
    }
    worst
}

/// Per-point equilibrium estimates with their shared denominator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumEstimate {
    pub points: Vec<Point>,
    pub estimates: Vec<RatioEstimate>,
    /// `Σ_a ê(a)`, from the pooled numerator.
    pub total: RatioEstimate,
    pub denominator: Estimate,
    pub n: u64,
    pub n_truncated: u64,
    pub n_timeouts: u64,
}

impl EquilibriumEstimate {
    /// `sqrt(Σ se²)` over the per-point estimates.
    pub fn pooled_se(&self) -> f64 {
        crate::stats::pooled_se(&self.estimates.iter().map(|e| e.std_error).collect::<Vec<_>>())
    }
}

#[derive(Clone, Debug, Default)]
struct PointCounts {
    hits: Vec<u64>,
    trunc: u64,
    timeouts: u64,
}

impl PointCounts {
    fn new(k: usize) -> Self {
        PointCounts {
            hits: vec![0; k],
            ..Default::default()
        }
    }

    fn merge(mut self, o: PointCounts) -> Self {
        self.hits.iter_mut().zip(&o.hits).for_each(|(a, b)| *a += b);
        self.trunc += o.trunc;
        self.timeouts += o.timeouts;
        self
    }
}

fn distinct(a: &[Point]) -> Result<()> {
    let mut s = a.to_vec();
    s.sort();
    if s.windows(2).any(|w| w[0] == w[1]) {
        return Err(invalid("set points must be distinct"));
    }
    Ok(())
}

fn finish(
    smp: &Sampler,
    a: &[Point],
    z: &Point,
    n: u64,
    counts: PointCounts,
) -> Result<EquilibriumEstimate> {
    let den = smp.connection(
        std::slice::from_ref(anchor(a)?),
        std::slice::from_ref(z),
        &Region::FullLattice,
        n,
        DENOMINATOR_OFFSET,
    )?;
    let estimates = counts
        .hits
        .iter()
        .map(|&h| RatioEstimate::new(Estimate::from_counts(h, 0, n), den))
        .collect::<Result<Vec<_>>>()?;
    let pooled = counts.hits.iter().sum();
    let total = RatioEstimate::new(Estimate::from_counts(pooled, counts.trunc, n), den)?;
    Ok(EquilibriumEstimate {
        points: a.to_vec(),
        estimates,
        total,
        denominator: den,
        n,
        n_truncated: counts.trunc,
        n_timeouts: counts.timeouts,
    })
}

/// `ê_A(a) = P(walk on C(z) from z first hits A at a, C(z) ∩ A ≠ ∅) / τ(z − a₀)`.
///
/// A replica meeting `A` is re-explored in full and walked on; if that
/// exploration exceeds the budget the replica counts as truncated. Timeouts
/// are counted and excluded.
pub fn estimate_equilibrium(
    smp: &Sampler,
    a: &[Point],
    z: &Point,
    n: u64,
    max_steps: u64,
) -> Result<EquilibriumEstimate> {
    check_far(a, z)?;
    distinct(a)?;
    if a.contains(z) {
        return Err(invalid("z must lie outside A"));
    }
    if n == 0 || n > DENOMINATOR_OFFSET {
        return Err(invalid(format!("n must be in 1..=2^31, got {n}")));
    }
    let d = smp.dim();
    let region = Region::FullLattice;
    let src = [z.coords()];
    let counts = smp.exec.fold(
        n,
        || (Probe::new(d, a), Arena::new(d)),
        || PointCounts::new(a.len()),
        |(probe, arena), acc, i| {
            let cfg = smp.lattice.configuration(smp.master_seed, i);
            match probe.run(&cfg, &src, &region, smp.budget) {
                ProbeVerdict::Disconnected => return,
                ProbeVerdict::Truncated => {
                    acc.trunc += 1;
                    return;
                }
                ProbeVerdict::Connected(_) => {}
            }
            let end = bfs(&cfg, &region, &src, smp.budget, true, arena, |_, _, _| Flow::Continue);
            if end.truncated {
                acc.trunc += 1;
                return;
            }
            let g = ClusterGraph::from_arena(arena);
            let mut mark = vec![None; g.len()];
            for (k, p) in a.iter().enumerate() {
                if let Some(v) = arena.index_of(p.coords()) {
                    mark[v as usize] = Some(k);
                }
            }
            let mut rng = tagged_rng(smp.master_seed, i, TAG_WALK);
            match walk(&g, 0, &mark, max_steps, &mut rng) {
                (Some(k), _) => acc.hits[k] += 1,
                (None, _) => acc.timeouts += 1,
            }
        },
        PointCounts::merge,
    );
    finish(smp, a, z, n, counts)
}

/// `ê(a_i) = P(a_i ∈ C(z), a_j ∉ C(z) for all j < i) / τ(z − a₀)`.
///
/// Explores `C(z)` until every point of `A` is found or the cluster is
/// exhausted; replicas over budget are excluded from every numerator.
pub fn ordering_equilibrium(smp: &Sampler, a: &[Point], z: &Point, n: u64) -> Result<EquilibriumEstimate> {
    check_far(a, z)?;
    distinct(a)?;
    if n == 0 || n > DENOMINATOR_OFFSET {
        return Err(invalid(format!("n must be in 1..=2^31, got {n}")));
    }
    let d = smp.dim();
    let region = Region::FullLattice;
    let src = [z.coords()];
    let ka: Vec<keys::VertexKey> = a.iter().map(|p| keys::vertex_key(p.coords())).collect();
    let counts = smp.exec.fold(
        n,
        || (Arena::new(d), vec![false; a.len()]),
        || PointCounts::new(a.len()),
        |(arena, found), acc, i| {
            let cfg = smp.lattice.configuration(smp.master_seed, i);
            found.iter_mut().for_each(|f| *f = false);
            let mut left = a.len();
            let end = bfs(&cfg, &region, &src, smp.budget, false, arena, |_, _, key| {
                if let Some(k) = ka.iter().position(|&x| x == key) {
                    found[k] = true;
                    left -= 1;
                    if left == 0 {
                        return Flow::Stop;
                    }
                }
                Flow::Continue
            });
            if end.truncated {
                acc.trunc += 1;
            } else if let Some(k) = found.iter().position(|&f| f) {
                acc.hits[k] += 1;
            }
        },
        PointCounts::merge,
    );
    finish(smp, a, z, n, counts)
}

/// An accepted rejection sample.
#[derive(Clone, Debug)]
pub struct IicSample {
    pub cluster: Cluster,
    /// Configurations drawn, the accepted one included.
    pub attempts: u64,
    pub replica: u64,
}

/// Draws configurations `(seed, first), (seed, first + 1), …` until `x ↔ w`
/// inside `region`, and returns the cluster of `x` in the accepted one.
pub fn iic_sample(
    lattice: &Lattice,
    seed: u64,
    first: u64,
    x: &Point,
    w: &Point,
    region: &Region,
    budget: usize,
    max_attempts: u64,
) -> Result<IicSample> {
    if x == w {
        return Err(invalid("w must differ from x"));
    }
    for p in [x, w] {
        p.check_dim(lattice.dim())?;
        if !region.contains_point(p) {
            return Err(Error::NotInRegion(p.coords().to_vec()));
        }
    }
    let mut probe = Probe::new(lattice.dim(), std::slice::from_ref(w));
    for t in 0..max_attempts {
        let cfg = lattice.configuration(seed, first + t);
        if let ProbeVerdict::Connected(_) = probe.run(&cfg, &[x.coords()], region, budget) {
            return Ok(IicSample {
                cluster: explore(&cfg, x, region, budget)?,
                attempts: t + 1,
                replica: first + t,
            });
        }
    }
    Err(Error::Exhausted(max_attempts))
}

/// Frequency of `C(z) ∩ A ≠ ∅` among configurations with `z ↔ w`, and its
/// `‖z‖₂^{d−4}` scaling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IicHit {
    pub z: Point,
    pub w: Point,
    pub attempts: u64,
    pub accepted: u64,
    pub hits: u64,
    /// Attempts whose exploration hit the budget before settling `z ↔ w`.
    pub n_truncated: u64,
    /// Acceptance rate, an estimate of `τ(w − z)`.
    pub acceptance: Estimate,
    pub frequency: Estimate,
    pub scaled: f64,
    pub scaled_se: f64,
}

/// Runs `n` attempts. `w = w_norm · e_axis`.
pub fn estimate_iic_hit(
    smp: &Sampler,
    a: &[Point],
    z: &Point,
    w_norm: i64,
    axis: usize,
    n: u64,
) -> Result<IicHit> {
    let d = smp.dim();
    if a.is_empty() {
        return Err(Error::EmptySet);
    }
    a.iter().try_for_each(|p| p.check_dim(d))?;
    z.check_dim(d)?;
    if axis >= d {
        return Err(invalid(format!("axis {axis} out of range")));
    }
    if n == 0 || n > DENOMINATOR_OFFSET {
        return Err(invalid(format!("n must be in 1..=2^31, got {n}")));
    }
    let diam = a
        .iter()
        .flat_map(|p| a.iter().map(move |q| p.sub(q).map(|v| v.l2())))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    if z.l2() < 2.0 * diam + 2.0 {
        return Err(invalid(format!(
            "need ‖z‖ ≥ 2·diam(A) + 2, got {:.3} < {:.3}",
            z.l2(),
            2.0 * diam + 2.0
        )));
    }
    let mut wc = vec![0i64; d];
    wc[axis] = w_norm;
    let w = Point::new(&wc)?;
    if w_norm <= z.linf() || a.contains(&w) {
        return Err(invalid("w must lie beyond z and outside A"));
    }
    let scale = z.l2().powi(d as i32 - 4);
    let wkey = keys::vertex_key(w.coords());
    let akeys: Vec<keys::VertexKey> = a.iter().map(|p| keys::vertex_key(p.coords())).collect();
    let z_in_a = a.contains(z);
    let region = Region::FullLattice;
    let src = [z.coords()];
    let (accepted, hits, trunc) = smp.exec.fold(
        n,
        || Arena::new(d),
        || (0u64, 0u64, 0u64),
        |arena, acc, i| {
            let cfg = smp.lattice.configuration(smp.master_seed, i);
            let (mut to_w, mut to_a) = (false, z_in_a);
            let end = bfs(&cfg, &region, &src, smp.budget, false, arena, |_, _, key| {
                if key == wkey {
                    to_w = true;
                }
                if !to_a && akeys.contains(&key) {
                    to_a = true;
                }
                if to_w && to_a {
                    Flow::Stop
                } else {
                    Flow::Continue
                }
            });
            if to_w {
                acc.0 += 1;
                if to_a {
                    acc.1 += 1;
                } else if end.truncated {
                    acc.2 += 1;
                }
            } else if end.truncated {
                acc.2 += 1;
            }
        },
        |x, y| (x.0 + y.0, x.1 + y.1, x.2 + y.2),
    );
    if accepted < MIN_ACCEPTED {
        return Err(Error::Underpowered {
            accepted,
            required: MIN_ACCEPTED,
        });
    }
    let frequency = Estimate::from_counts(hits, 0, accepted);
    Ok(IicHit {
        z: z.clone(),
        w,
        attempts: n,
        accepted,
        hits,
        n_truncated: trunc,
        acceptance: Estimate::from_counts(accepted, 0, n),
        scaled: frequency.value * scale,
        scaled_se: frequency.std_error * scale,
        frequency,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pt(c: &[i64]) -> Point {
        Point::new(c).unwrap()
    }

    fn path3() -> (ClusterGraph, Point, Point, Point) {
        let (a, z, b) = (pt(&[-1]), pt(&[0]), pt(&[1]));
        let g = ClusterGraph::new(vec![a.clone(), z.clone(), b.clone()], &[(0, 1), (1, 2)]).unwrap();
        (g, a, z, b)
    }

    #[test]
    fn graph_validation() {
        let v = vec![pt(&[0]), pt(&[1]), pt(&[5])];
        assert!(ClusterGraph::new(v.clone(), &[(0, 1)]).is_err());
        assert!(ClusterGraph::new(v.clone(), &[(0, 1), (1, 0), (1, 2)]).is_err());
        assert!(ClusterGraph::new(v, &[(0, 1), (1, 2)]).is_ok());
    }

    #[test]
    fn start_in_target_hits_immediately() {
        let (g, a, _, b) = path3();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = srw_hit(&g, &a, &[a.clone(), b.clone()], 10, &mut rng).unwrap();
        assert_eq!((h.hit_point, h.steps), (Some(a.clone()), 0));
        let e = exact_hit_distribution(&g, &a, &[a.clone(), b]).unwrap();
        assert_eq!(e.probabilities, vec![1.0, 0.0]);
    }

    #[test]
    fn symmetric_path() {
        let (g, a, z, b) = path3();
        let e = exact_hit_distribution(&g, &z, &[a.clone(), b.clone()]).unwrap();
        assert!((e.probabilities[0] - 0.5).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 20_000;
        let hits_a = (0..n)
            .filter(|_| srw_hit(&g, &z, &[a.clone(), b.clone()], 100, &mut rng).unwrap().hit_point == Some(a.clone()))
            .count();
        let se = (0.25 / n as f64).sqrt();
        assert!((hits_a as f64 / n as f64 - 0.5).abs() < 3.0 * se);
    }

    #[test]
    fn target_outside_graph_rejected() {
        let (g, _, z, _) = path3();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(srw_hit(&g, &z, &[pt(&[9])], 10, &mut rng).is_err());
        assert!(exact_hit_distribution(&g, &z, &[pt(&[9])]).is_err());
    }

    #[test]
    fn timeout_is_reported() {
        let v: Vec<Point> = (0..50).map(|i| pt(&[i])).collect();
        let e: Vec<(usize, usize)> = (0..49).map(|i| (i, i + 1)).collect();
        let g = ClusterGraph::new(v, &e).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = srw_hit(&g, &pt(&[0]), &[pt(&[49])], 10, &mut rng).unwrap();
        assert!(h.timed_out());
        assert_eq!(h.steps, 10);
    }

    #[test]
    fn gambler_ruin_on_long_path() {
        // first hit of {0, L} from k is L with probability k/L
        let l = 1200;
        let v: Vec<Point> = (0..=l).map(|i| pt(&[i])).collect();
        let e: Vec<(usize, usize)> = (0..l as usize).map(|i| (i, i + 1)).collect();
        let g = ClusterGraph::new(v, &e).unwrap();
        let h = exact_hit_distribution(&g, &pt(&[300]), &[pt(&[0]), pt(&[l])]).unwrap();
        assert!((h.probabilities[1] - 0.25).abs() < 1e-9, "{:?}", h.probabilities);
        assert!(h.residual <= RESIDUAL_TOL);
    }
}
