use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{input, Error, Result};
use crate::percolation::Graph;

/// `g` with a midpoint on every edge.
///
/// Original vertices keep their ids, the midpoint of edge `e` is `V + e`,
/// and the halves of `e` get ids `2e` (towards the smaller endpoint) and `2e + 1`.
#[derive(Clone, Debug)]
pub struct Subdivision {
    pub graph: Graph,
    pub base_vertices: usize,
}

impl Subdivision {
    pub fn midpoint(&self, e: usize) -> usize {
        self.base_vertices + e
    }

    pub fn is_midpoint(&self, x: usize) -> bool {
        x >= self.base_vertices
    }
}

pub fn subdivide(g: &Graph) -> Subdivision {
    let v = g.vertex_count();
    let edges = g.edges().iter().enumerate().flat_map(|(e, &(a, b))| [(a, v + e), (b, v + e)]);
    let graph = Graph::new(v + g.edge_count(), edges).expect("subdivision of a simple graph is simple");
    Subdivision { graph, base_vertices: v }
}

/// Greedy in vertex order: keep `x` when it is at distance at least `d` from every kept vertex.
pub fn maximal_separated(g: &Graph, d: usize) -> Result<Vec<usize>> {
    if d == 0 {
        return input("separation must be at least 1");
    }
    let mut near = vec![false; g.vertex_count()];
    let mut out = Vec::new();
    for x in 0..g.vertex_count() {
        if near[x] {
            continue;
        }
        out.push(x);
        for (y, dy) in g.distances(x).into_iter().enumerate() {
            if dy.is_some_and(|dy| dy < d) {
                near[y] = true;
            }
        }
    }
    Ok(out)
}

/// Cells on the subdivided graph, indexed by position in `centres`.
#[derive(Clone, Debug)]
pub struct CellDecomposition {
    pub subdivision: Subdivision,
    pub r0: usize,
    pub r: usize,
    pub big_r: usize,
    pub centres: Vec<usize>,
    /// Voronoi owner (cell index) of every base vertex.
    pub owner: Vec<usize>,
    pub cells: Vec<Vec<usize>>,
    pub interiors: Vec<Vec<usize>>,
    pub boundaries: Vec<Vec<usize>>,
    /// Subdivided edges with both endpoints in the cell.
    pub cell_edges: Vec<Vec<usize>>,
    /// Subdivided edges with both endpoints in the interior.
    pub interior_edges: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub cell: Option<usize>,
    pub item: &'static str,
}

impl CellDecomposition {
    pub fn graph(&self) -> &Graph {
        &self.subdivision.graph
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// Cells whose vertex boundary contains `x`.
    pub fn cells_with_boundary(&self, x: usize) -> Vec<usize> {
        (0..self.cell_count()).filter(|&c| self.boundaries[c].binary_search(&x).is_ok()).collect()
    }

    pub fn is_boundary_vertex(&self, x: usize) -> bool {
        self.boundaries.iter().any(|b| b.binary_search(&x).is_ok())
    }

    pub fn boundary_vertices(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.boundaries.iter().flatten().copied().collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    /// Checks the edge partition, connected interiors and both radius inclusions.
    pub fn audit(&self) -> Vec<Violation> {
        let g = self.graph();
        let mut out = Vec::new();
        let mut count = vec![0usize; g.edge_count()];
        for edges in &self.cell_edges {
            for &e in edges {
                count[e] += 1;
            }
        }
        if count.iter().any(|&c| c != 1) {
            out.push(Violation { cell: None, item: "cell edge sets do not partition the edges" });
        }
        for (c, &u) in self.centres.iter().enumerate() {
            if !connected_within(g, &self.interiors[c]) {
                out.push(Violation { cell: Some(c), item: "interior is not connected" });
            }
            let dist = g.distances(u);
            let inner_ok = (0..g.vertex_count())
                .filter(|&x| dist[x].is_some_and(|d| d <= self.r))
                .all(|x| self.interiors[c].binary_search(&x).is_ok());
            if !inner_ok {
                out.push(Violation { cell: Some(c), item: "ball of radius r is not inside the interior" });
            }
            if !self.cells[c].iter().all(|&x| dist[x].is_some_and(|d| d <= self.big_r)) {
                out.push(Violation { cell: Some(c), item: "cell leaves the ball of radius R" });
            }
        }
        out
    }

    /// Per subdivided vertex, the cells containing it.
    pub fn assignment_table(&self) -> Vec<(usize, Vec<usize>)> {
        let mut table = vec![Vec::new(); self.graph().vertex_count()];
        for (c, cell) in self.cells.iter().enumerate() {
            for &x in cell {
                table[x].push(c);
            }
        }
        table.into_iter().enumerate().collect()
    }

    pub fn to_file(&self) -> CellsFile {
        CellsFile {
            vertices: self.graph().vertex_count(),
            edges: self.graph().edges().to_vec(),
            r0: self.r0,
            r: self.r,
            big_r: self.big_r,
            centres: self.centres.clone(),
            cells: self.cells.clone(),
            interiors: self.interiors.clone(),
            boundaries: self.boundaries.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CellsFile {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
    pub r0: usize,
    pub r: usize,
    #[serde(rename = "R")]
    pub big_r: usize,
    pub centres: Vec<usize>,
    pub cells: Vec<Vec<usize>>,
    pub interiors: Vec<Vec<usize>>,
    pub boundaries: Vec<Vec<usize>>,
}

fn connected_within(g: &Graph, set: &[usize]) -> bool {
    let Some(&start) = set.first() else {
        return true;
    };
    let inside = |x: usize| set.binary_search(&x).is_ok();
    let mut seen = vec![false; g.vertex_count()];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    let mut n = 1;
    while let Some(u) = queue.pop_front() {
        for &w in g.neighbours(u) {
            if inside(w) && !seen[w] {
                seen[w] = true;
                n += 1;
                queue.push_back(w);
            }
        }
    }
    n == set.len()
}

/// Cells from a maximal `(2 r0 + 1)`-separated centre set; fails if an invariant breaks.
pub fn build_cells(g0: &Graph, r0: usize) -> Result<CellDecomposition> {
    if r0 == 0 {
        return input("r0 must be at least 1");
    }
    let centres = maximal_separated(g0, 2 * r0 + 1)?;
    let cd = build_cells_with_centres(g0, r0, centres)?;
    if let Some(v) = cd.audit().into_iter().next() {
        return Err(Error::Internal(format!("cell {:?}: {}", v.cell, v.item)));
    }
    Ok(cd)
}

/// Voronoi cells of `centres` (ties to the earlier centre), without auditing.
pub fn build_cells_with_centres(g0: &Graph, r0: usize, centres: Vec<usize>) -> Result<CellDecomposition> {
    if centres.is_empty() {
        return input("at least one centre is needed");
    }
    let n = g0.vertex_count();
    if let Some(&c) = centres.iter().find(|&&c| c >= n) {
        return input(format!("centre {c} is not a vertex"));
    }
    let mut best: Vec<Option<(usize, usize)>> = vec![None; n];
    for (i, &c) in centres.iter().enumerate() {
        for (x, d) in g0.distances(c).into_iter().enumerate() {
            if let Some(d) = d {
                if best[x].is_none_or(|(bd, _)| d < bd) {
                    best[x] = Some((d, i));
                }
            }
        }
    }
    let owner: Vec<usize> = best
        .iter()
        .enumerate()
        .map(|(x, b)| b.map(|b| b.1).ok_or_else(|| Error::Input(format!("vertex {x} reaches no centre"))))
        .collect::<Result<_>>()?;

    let sub = subdivide(g0);
    let g = &sub.graph;
    let k = centres.len();
    let mut cells = vec![Vec::new(); k];
    for x in 0..n {
        cells[owner[x]].push(x);
    }
    for (e, &(a, b)) in g0.edges().iter().enumerate() {
        let m = sub.midpoint(e);
        cells[owner[a]].push(m);
        if owner[b] != owner[a] {
            cells[owner[b]].push(m);
        }
    }
    for cell in &mut cells {
        cell.sort_unstable();
    }
    let mut interiors = Vec::with_capacity(k);
    let mut boundaries = Vec::with_capacity(k);
    let mut cell_edges = Vec::with_capacity(k);
    let mut interior_edges = Vec::with_capacity(k);
    for cell in &cells {
        let inside = |x: usize| cell.binary_search(&x).is_ok();
        let (bd, int): (Vec<usize>, Vec<usize>) =
            cell.iter().partition(|&&x| g.neighbours(x).iter().any(|&w| !inside(w)));
        let in_int = |x: usize| int.binary_search(&x).is_ok();
        let edges: Vec<usize> = (0..g.edge_count()).filter(|&e| inside(g.edge(e).0) && inside(g.edge(e).1)).collect();
        let int_edges = edges.iter().copied().filter(|&e| in_int(g.edge(e).0) && in_int(g.edge(e).1)).collect();
        interiors.push(int);
        boundaries.push(bd);
        cell_edges.push(edges);
        interior_edges.push(int_edges);
    }
    Ok(CellDecomposition {
        subdivision: sub,
        r0,
        r: 2 * r0,
        big_r: 4 * r0 + 1,
        centres,
        owner,
        cells,
        interiors,
        boundaries,
        cell_edges,
        interior_edges,
    })
}
