//! Exact percolation laws on tiny graphs by enumerating all `2^E` bond
//! configurations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{adjacent, box_points, Connectivity, GraphSpec, Point};

pub const MAX_EDGES: usize = 24;

/// A finite graph small enough to enumerate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TinyGraph {
    pub vertices: Vec<Point>,
    pub edges: Vec<(usize, usize)>,
}

impl TinyGraph {
    pub fn new(vertices: Vec<Point>, edges: Vec<(usize, usize)>) -> Result<Self> {
        if edges.len() > MAX_EDGES {
            return Err(Error::SizeGuard {
                what: "enumerated edges",
                size: edges.len() as u128,
                limit: MAX_EDGES as u128,
            });
        }
        let n = vertices.len();
        for &(a, b) in &edges {
            if a >= n || b >= n || a == b {
                return Err(invalid(format!("bad edge ({a}, {b}) on {n} vertices")));
            }
        }
        Ok(TinyGraph { vertices, edges })
    }

    /// The lattice graph induced on `B(center, radius)`, vertices in
    /// lexicographic order.
    pub fn from_box(spec: &GraphSpec, center: &Point, radius: i64) -> Result<Self> {
        spec.validate()?;
        center.check_dim(spec.dimension)?;
        let vertices = box_points(center, radius)?;
        let mut edges = Vec::new();
        for i in 0..vertices.len() {
            for j in i + 1..vertices.len() {
                if adjacent(vertices[i].coords(), vertices[j].coords(), spec) {
                    edges.push((i, j));
                    if edges.len() > MAX_EDGES {
                        return Err(Error::SizeGuard {
                            what: "enumerated edges",
                            size: edges.len() as u128,
                            limit: MAX_EDGES as u128,
                        });
                    }
                }
            }
        }
        TinyGraph::new(vertices, edges)
    }

    pub fn index_of(&self, x: &Point) -> Option<usize> {
        self.vertices.iter().position(|v| v == x)
    }

    fn require(&self, x: &Point) -> Result<usize> {
        self.index_of(x)
            .ok_or_else(|| Error::NotInRegion(x.coords().to_vec()))
    }
}

/// Connected components of one configuration.
pub struct Components {
    parent: Vec<u32>,
    size: Vec<u32>,
    mask: u32,
}

impl Components {
    fn find(&self, mut i: usize) -> usize {
        while self.parent[i] as usize != i {
            i = self.parent[i] as usize;
        }
        i
    }

    fn reset(&mut self, mask: u32) {
        for (i, p) in self.parent.iter_mut().enumerate() {
            *p = i as u32;
        }
        self.size.iter_mut().for_each(|s| *s = 1);
        self.mask = mask;
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
    }

    pub fn connected(&self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }

    pub fn cluster_size(&self, a: usize) -> usize {
        self.size[self.find(a)] as usize
    }

    /// Sorted vertex indices of the cluster of `a`.
    pub fn cluster(&self, a: usize) -> Vec<usize> {
        let r = self.find(a);
        (0..self.parent.len()).filter(|&i| self.find(i) == r).collect()
    }

    pub fn edge_open(&self, e: usize) -> bool {
        self.mask >> e & 1 == 1
    }
}

/// Exact law of `f(ω)` over configurations where `f` is defined, with the
/// total probability of that set.
pub fn law<K, F>(g: &TinyGraph, p: f64, mut f: F) -> (BTreeMap<K, f64>, f64)
where
    K: Ord,
    F: FnMut(&Components) -> Option<K>,
{
    let mut out = BTreeMap::new();
    let mut mass = 0.0;
    for_each_configuration(g, p, |c, w| {
        if let Some(k) = f(c) {
            *out.entry(k).or_insert(0.0) += w;
            mass += w;
        }
    });
    (out, mass)
}

/// `E[f(ω)]`.
pub fn expectation<F>(g: &TinyGraph, p: f64, mut f: F) -> f64
where
    F: FnMut(&Components) -> f64,
{
    let mut total = 0.0;
    for_each_configuration(g, p, |c, w| total += w * f(c));
    total
}

fn for_each_configuration<F>(g: &TinyGraph, p: f64, mut f: F)
where
    F: FnMut(&Components, f64),
{
    let e = g.edges.len();
    let weights: Vec<f64> = (0..=e)
        .map(|k| p.powi(k as i32) * (1.0 - p).powi((e - k) as i32))
        .collect();
    let n = g.vertices.len();
    let mut comps = Components {
        parent: vec![0; n],
        size: vec![1; n],
        mask: 0,
    };
    for mask in 0u32..(1u32 << e) {
        comps.reset(mask);
        for (i, &(a, b)) in g.edges.iter().enumerate() {
            if mask >> i & 1 == 1 {
                comps.union(a, b);
            }
        }
        f(&comps, weights[mask.count_ones() as usize]);
    }
}

pub fn connection_probability(g: &TinyGraph, p: f64, x: &Point, y: &Point) -> Result<f64> {
    let (i, j) = (g.require(x)?, g.require(y)?);
    Ok(expectation(g, p, |c| c.connected(i, j) as u8 as f64))
}

pub fn mean_cluster_size(g: &TinyGraph, p: f64, x: &Point) -> Result<f64> {
    let i = g.require(x)?;
    Ok(expectation(g, p, |c| c.cluster_size(i) as f64))
}

/// `P(|C(x)| = k)` for `k = 0..=|V|`.
pub fn cluster_size_pmf(g: &TinyGraph, p: f64, x: &Point) -> Result<Vec<f64>> {
    let i = g.require(x)?;
    let (m, _) = law(g, p, |c| Some(c.cluster_size(i)));
    Ok(dense(m, g.vertices.len()))
}

/// `P(|C(x) ∩ marked| = k)` for `k = 0..=|marked|`.
pub fn marked_count_pmf(g: &TinyGraph, p: f64, x: &Point, marked: &[Point]) -> Result<Vec<f64>> {
    let i = g.require(x)?;
    let idx: Vec<usize> = marked.iter().map(|m| g.require(m)).collect::<Result<_>>()?;
    let (m, _) = law(g, p, |c| Some(idx.iter().filter(|&&j| c.connected(i, j)).count()));
    Ok(dense(m, idx.len()))
}

/// Law of the vertex set of `C(x)` given `x ↔ w`.
pub fn conditional_cluster_law(
    g: &TinyGraph,
    p: f64,
    x: &Point,
    w: &Point,
) -> Result<BTreeMap<Vec<usize>, f64>> {
    let (i, j) = (g.require(x)?, g.require(w)?);
    let (mut m, mass) = law(g, p, |c| c.connected(i, j).then(|| c.cluster(i)));
    if mass <= 0.0 {
        return Err(invalid("conditioning event has probability zero"));
    }
    m.values_mut().for_each(|v| *v /= mass);
    Ok(m)
}

/// `P(edge open | x ↔ w)`.
pub fn conditional_edge_open(g: &TinyGraph, p: f64, x: &Point, w: &Point, edge: usize) -> Result<f64> {
    let (i, j) = (g.require(x)?, g.require(w)?);
    if edge >= g.edges.len() {
        return Err(invalid("edge index out of range"));
    }
    let (m, mass) = law(g, p, |c| c.connected(i, j).then(|| c.edge_open(edge)));
    if mass <= 0.0 {
        return Err(invalid("conditioning event has probability zero"));
    }
    Ok(m.get(&true).copied().unwrap_or(0.0) / mass)
}

fn dense(m: BTreeMap<usize, f64>, max: usize) -> Vec<f64> {
    let mut v = vec![0.0; max + 1];
    for (k, w) in m {
        v[k] += w;
    }
    v
}

/// JSON input of the `oracle enumerate` command: either an explicit graph or
/// a lattice box.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnumerationInput {
    pub p: f64,
    pub source: Point,
    #[serde(default)]
    pub vertices: Option<Vec<Point>>,
    #[serde(default)]
    pub edges: Option<Vec<(usize, usize)>>,
    #[serde(default, rename = "box")]
    pub lattice_box: Option<BoxInput>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxInput {
    pub dimension: usize,
    pub radius: i64,
    #[serde(default)]
    pub spread_out: Option<u32>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnumerationReport {
    pub p: f64,
    pub edges: usize,
    pub source: Point,
    /// `(y, P(source ↔ y))` for every vertex `y`.
    pub connection: Vec<(Point, f64)>,
    pub mean_cluster_size: f64,
    pub cluster_size_pmf: Vec<f64>,
}

impl EnumerationInput {
    pub fn graph(&self) -> Result<TinyGraph> {
        match (&self.vertices, &self.edges, &self.lattice_box) {
            (Some(v), Some(e), None) => TinyGraph::new(v.clone(), e.clone()),
            (None, None, Some(b)) => {
                let conn = match b.spread_out {
                    None => Connectivity::NearestNeighbor,
                    Some(l) => Connectivity::SpreadOut(l),
                };
                let spec = GraphSpec::new(b.dimension, conn, self.p)?;
                TinyGraph::from_box(&spec, &Point::origin(b.dimension), b.radius)
            }
            _ => Err(Error::Config(
                "give either `vertices` and `edges`, or `box`".into(),
            )),
        }
    }

    pub fn run(&self) -> Result<EnumerationReport> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::Config(format!("p = {} outside [0, 1]", self.p)));
        }
        let g = self.graph()?;
        let i = g.require(&self.source)?;
        let (m, _) = law(&g, self.p, |c| Some(c.cluster(i)));
        let mut conn = vec![0.0; g.vertices.len()];
        let mut sizes = vec![0.0; g.vertices.len() + 1];
        for (cl, w) in &m {
            sizes[cl.len()] += w;
            for &j in cl {
                conn[j] += w;
            }
        }
        Ok(EnumerationReport {
            p: self.p,
            edges: g.edges.len(),
            source: self.source.clone(),
            connection: g.vertices.iter().cloned().zip(conn).collect(),
            mean_cluster_size: sizes.iter().enumerate().map(|(k, w)| k as f64 * w).sum(),
            cluster_size_pmf: sizes,
        })
    }
}
