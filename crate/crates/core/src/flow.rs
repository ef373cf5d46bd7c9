//! Maximum flow (Dinic) and disjoint-path counts via Menger's theorem.

use std::collections::VecDeque;

const INF: u32 = u32::MAX / 2;

#[derive(Clone, Debug)]
struct Arc {
    to: usize,
    cap: u32,
}

/// Directed network with integer capacities.
#[derive(Clone, Debug, Default)]
pub struct Network {
    arcs: Vec<Arc>,
    out: Vec<Vec<usize>>,
}

impl Network {
    pub fn new(n: usize) -> Self {
        Network {
            arcs: Vec::new(),
            out: vec![Vec::new(); n],
        }
    }

    pub fn add_arc(&mut self, u: usize, v: usize, cap: u32) {
        self.out[u].push(self.arcs.len());
        self.arcs.push(Arc { to: v, cap });
        self.out[v].push(self.arcs.len());
        self.arcs.push(Arc { to: u, cap: 0 });
    }

    fn levels(&self, s: usize, t: usize) -> Option<Vec<u32>> {
        let mut level = vec![u32::MAX; self.out.len()];
        level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for &a in &self.out[u] {
                let arc = &self.arcs[a];
                if arc.cap > 0 && level[arc.to] == u32::MAX {
                    level[arc.to] = level[u] + 1;
                    q.push_back(arc.to);
                }
            }
        }
        (level[t] != u32::MAX).then_some(level)
    }

    fn augment(&mut self, u: usize, t: usize, pushed: u32, level: &[u32], next: &mut [usize]) -> u32 {
        if u == t {
            return pushed;
        }
        while next[u] < self.out[u].len() {
            let a = self.out[u][next[u]];
            let (to, cap) = (self.arcs[a].to, self.arcs[a].cap);
            if cap > 0 && level[to] == level[u] + 1 {
                let f = self.augment(to, t, pushed.min(cap), level, next);
                if f > 0 {
                    self.arcs[a].cap -= f;
                    self.arcs[a ^ 1].cap += f;
                    return f;
                }
            }
            next[u] += 1;
        }
        0
    }

    pub fn max_flow(&mut self, s: usize, t: usize) -> u64 {
        if s == t {
            return 0;
        }
        let mut total = 0u64;
        while let Some(level) = self.levels(s, t) {
            let mut next = vec![0usize; self.out.len()];
            loop {
                let f = self.augment(s, t, INF, &level, &mut next);
                if f == 0 {
                    break;
                }
                total += f as u64;
            }
        }
        total
    }
}

/// Which resource disjoint paths may not share.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Disjointness {
    #[default]
    Vertex,
    Edge,
}

/// Maximum number of disjoint paths from any vertex of `from` to any vertex of
/// `to` in the undirected graph on `0..n`. Vertex-disjoint paths share no
/// vertex, endpoints included; a vertex in both sets is a path of length 0.
pub fn disjoint_paths(
    n: usize,
    edges: &[(usize, usize)],
    from: &[usize],
    to: &[usize],
    kind: Disjointness,
) -> u64 {
    let (s, t) = (2 * n, 2 * n + 1);
    let mut net = Network::new(2 * n + 2);
    let (vin, vout) = (|v: usize| 2 * v, |v: usize| 2 * v + 1);
    let (vertex_cap, edge_cap, end_cap) = match kind {
        Disjointness::Vertex => (1, INF, 1),
        Disjointness::Edge => (INF, 1, INF),
    };
    for v in 0..n {
        net.add_arc(vin(v), vout(v), vertex_cap);
    }
    for &(a, b) in edges {
        if a != b {
            net.add_arc(vout(a), vin(b), edge_cap);
            net.add_arc(vout(b), vin(a), edge_cap);
        }
    }
    let mut seen = vec![0u8; n];
    for &v in from {
        if seen[v] & 1 == 0 {
            net.add_arc(s, vin(v), end_cap);
            seen[v] |= 1;
        }
    }
    for &v in to {
        if seen[v] & 2 == 0 {
            net.add_arc(vout(v), t, end_cap);
            seen[v] |= 2;
        }
    }
    net.max_flow(s, t)
}
