use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::error::{input, Error, Result};

/// Simple undirected graph with sorted adjacency and stable edge ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    adj_edges: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Edge ids follow the order of `edges`; each edge is stored as `(min, max)`.
    pub fn new(vertex_count: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut pairs: Vec<Vec<(usize, usize)>> = vec![Vec::new(); vertex_count];
        let mut list = Vec::new();
        for (u, v) in edges {
            if u >= vertex_count || v >= vertex_count {
                return input(format!("edge ({u}, {v}) leaves the {vertex_count} vertices"));
            }
            if u == v {
                return input(format!("loop at {u}"));
            }
            let id = list.len();
            list.push((u.min(v), u.max(v)));
            pairs[u].push((v, id));
            pairs[v].push((u, id));
        }
        let mut adj = Vec::with_capacity(vertex_count);
        let mut adj_edges = Vec::with_capacity(vertex_count);
        for (u, mut ps) in pairs.into_iter().enumerate() {
            ps.sort_unstable();
            if ps.windows(2).any(|w| w[0].0 == w[1].0) {
                return input(format!("multiple edges at {u}"));
            }
            adj.push(ps.iter().map(|p| p.0).collect());
            adj_edges.push(ps.iter().map(|p| p.1).collect());
        }
        Ok(Graph { adj, adj_edges, edges: list })
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbours(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    /// Edge ids parallel to `neighbours(v)`.
    pub fn incident_edges(&self, v: usize) -> &[usize] {
        &self.adj_edges[v]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> (usize, usize) {
        self.edges[id]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn edge_between(&self, u: usize, v: usize) -> Option<usize> {
        self.adj[u].binary_search(&v).ok().map(|i| self.adj_edges[u][i])
    }

    pub fn is_adjacent(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Graph distances from `v`, `None` for unreachable vertices.
    pub fn distances(&self, v: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.vertex_count()];
        dist[v] = Some(0);
        let mut queue = VecDeque::from([v]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].expect("queued vertices have a distance");
            for &w in &self.adj[u] {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.vertex_count() == 0 || self.distances(0).iter().all(Option::is_some)
    }

    /// Text format: `"V E"` then one `"u v"` line per edge.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Input("empty graph file".into()))?;
        let (v, e) = two_numbers(header)?;
        let mut edges = Vec::with_capacity(e);
        for line in lines {
            edges.push(two_numbers(line)?);
        }
        if edges.len() != e {
            return input(format!("header announces {e} edges, found {}", edges.len()));
        }
        Graph::new(v, edges)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.vertex_count(), self.edge_count());
        for &(u, v) in &self.edges {
            let _ = writeln!(s, "{u} {v}");
        }
        s
    }
}

fn two_numbers(line: &str) -> Result<(usize, usize)> {
    let mut it = line.split_whitespace().map(str::parse::<usize>);
    match (it.next(), it.next(), it.next()) {
        (Some(Ok(a)), Some(Ok(b)), None) => Ok((a, b)),
        _ => input(format!("expected two integers, got {line:?}")),
    }
}

/// `n` vertices in a line.
pub fn path(n: usize) -> Graph {
    Graph::new(n, (1..n).map(|i| (i - 1, i))).expect("path is simple")
}

/// A ray of `len` edges with its end at vertex 0.
pub fn ray(len: usize) -> Graph {
    path(len + 1)
}

pub fn cycle(n: usize) -> Result<Graph> {
    if n < 3 {
        return input("a simple cycle needs at least 3 vertices");
    }
    Graph::new(n, (0..n).map(|i| (i, (i + 1) % n)))
}

pub fn complete(n: usize) -> Graph {
    Graph::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)))).expect("complete graph is simple")
}

/// Star with one centre (vertex 0) and `leaves` leaves.
pub fn star(leaves: usize) -> Graph {
    Graph::new(leaves + 1, (1..=leaves).map(|i| (0, i))).expect("star is simple")
}

/// Index of a lattice point, last coordinate varying fastest.
pub fn box_index(dims: &[usize], point: &[usize]) -> usize {
    dims.iter().zip(point).fold(0, |acc, (&d, &x)| acc * d + x)
}

pub fn box_point(dims: &[usize], mut index: usize) -> Vec<usize> {
    let mut p = vec![0; dims.len()];
    for (i, &d) in dims.iter().enumerate().rev() {
        p[i] = index % d;
        index /= d;
    }
    p
}

/// Box lattice, open or periodic in every direction.
pub fn box_lattice(dims: &[usize], periodic: bool) -> Result<Graph> {
    if dims.is_empty() || dims.contains(&0) {
        return input("box sides must be positive");
    }
    if periodic && dims.iter().any(|&d| d < 3) {
        return input("periodic sides must have length at least 3");
    }
    let n: usize = dims.iter().product();
    let mut edges = Vec::new();
    for i in 0..n {
        let p = box_point(dims, i);
        for k in 0..dims.len() {
            let mut q = p.clone();
            if p[k] + 1 < dims[k] {
                q[k] += 1;
            } else if periodic {
                q[k] = 0;
            } else {
                continue;
            }
            edges.push((i, box_index(dims, &q)));
        }
    }
    Graph::new(n, edges)
}

/// Cartesian product; `(u, x)` has index `u * |H| + x`.
pub fn product(g: &Graph, h: &Graph) -> Graph {
    let m = h.vertex_count();
    let mut edges = Vec::new();
    for u in 0..g.vertex_count() {
        for &(x, y) in h.edges() {
            edges.push((u * m + x, u * m + y));
        }
    }
    for &(u, v) in g.edges() {
        for x in 0..m {
            edges.push((u * m + x, v * m + x));
        }
    }
    Graph::new(g.vertex_count() * m, edges).expect("product of simple graphs is simple")
}

/// Two-leg ladder of length `n`.
pub fn ladder(n: usize) -> Graph {
    product(&path(n), &path(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators() {
        assert_eq!(cycle(6).unwrap().edge_count(), 6);
        assert_eq!(box_lattice(&[3, 3], false).unwrap().edge_count(), 12);
        assert_eq!(box_lattice(&[3, 4], true).unwrap().edge_count(), 24);
        assert_eq!(ladder(4).edge_count(), 3 * 2 + 4);
        assert!(cycle(2).is_err());
        assert!(Graph::new(2, [(0, 1), (1, 0)]).is_err());
        assert!(Graph::new(2, [(1, 1)]).is_err());
    }

    #[test]
    fn text_round_trip() {
        let g = box_lattice(&[2, 3], false).unwrap();
        assert_eq!(Graph::parse(&g.to_text()).unwrap(), g);
        assert!(Graph::parse("3 2\n0 1\n").is_err());
    }

    #[test]
    fn lattice_coordinates() {
        let dims = [3, 4, 5];
        for i in 0..60 {
            assert_eq!(box_index(&dims, &box_point(&dims, i)), i);
        }
    }
}
