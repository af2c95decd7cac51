use super::graph::{box_index, box_lattice, box_point, cycle, Graph};
use crate::error::{input, Error, Result};

/// A vertex map between two graphs.
#[derive(Clone, Debug)]
pub struct VertexMap {
    pub source: Graph,
    pub target: Graph,
    map: Vec<usize>,
}

impl VertexMap {
    pub fn new(source: Graph, target: Graph, map: Vec<usize>) -> Result<Self> {
        if map.len() != source.vertex_count() {
            return input(format!("map has {} entries for {} vertices", map.len(), source.vertex_count()));
        }
        if let Some(&bad) = map.iter().find(|&&v| v >= target.vertex_count()) {
            return input(format!("map sends a vertex to {bad}, outside the target"));
        }
        Ok(VertexMap { source, target, map })
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn image(&self, x: usize) -> usize {
        self.map[x]
    }

    /// Preimage of `v`, ascending.
    pub fn fibre(&self, v: usize) -> Vec<usize> {
        (0..self.map.len()).filter(|&x| self.map[x] == v).collect()
    }

    pub fn is_surjective(&self) -> bool {
        let mut hit = vec![false; self.target.vertex_count()];
        for &v in &self.map {
            hit[v] = true;
        }
        hit.into_iter().all(|h| h)
    }
}

/// First `(x, v)` such that `v` is a neighbour of `π(x)` with no neighbour
/// of `x` above it, in ascending order of `x` then `v`.
pub fn fibration_counterexample(vm: &VertexMap) -> Option<(usize, usize)> {
    for x in 0..vm.source.vertex_count() {
        for &v in vm.target.neighbours(vm.image(x)) {
            if !vm.source.neighbours(x).iter().any(|&y| vm.image(y) == v) {
                return Some((x, v));
            }
        }
    }
    None
}

/// Surjective and every edge at `π(x)` lifts at `x`.
pub fn is_fibration(vm: &VertexMap) -> bool {
    vm.is_surjective() && fibration_counterexample(vm).is_none()
}

/// Vertices are the edges of `g`; two are adjacent when they share an endpoint.
pub fn star_graph(g: &Graph) -> Graph {
    let mut edges = Vec::new();
    for v in 0..g.vertex_count() {
        let inc = g.incident_edges(v);
        for i in 0..inc.len() {
            for j in i + 1..inc.len() {
                edges.push((inc[i], inc[j]));
            }
        }
    }
    Graph::new(g.edge_count(), edges).expect("two distinct edges of a simple graph share at most one vertex")
}

#[derive(Clone, Debug)]
pub struct StarLift {
    /// The star graph restricted to edges mapped onto edges.
    pub lifted: Graph,
    pub base: Graph,
    pub map: VertexMap,
    /// Original edge id of each vertex of `lifted`.
    pub kept_edges: Vec<usize>,
}

/// The induced map between star graphs, keeping only the source edges whose
/// endpoints land on adjacent target vertices.
pub fn star_graph_pi(vm: &VertexMap) -> Result<StarLift> {
    let base = star_graph(&vm.target);
    let mut kept = Vec::new();
    let mut index = vec![None; vm.source.edge_count()];
    let mut map = Vec::new();
    for (id, &(x, y)) in vm.source.edges().iter().enumerate() {
        if let Some(e) = vm.target.edge_between(vm.image(x), vm.image(y)) {
            index[id] = Some(kept.len());
            kept.push(id);
            map.push(e);
        }
    }
    let full = star_graph(&vm.source);
    let edges = full.edges().iter().filter_map(|&(a, b)| Some((index[a]?, index[b]?)));
    let lifted = Graph::new(kept.len(), edges)?;
    let induced = VertexMap::new(lifted.clone(), base.clone(), map)?;
    if is_fibration(vm) && !is_fibration(&induced) {
        return Err(Error::Internal("induced star map is not a fibration".into()));
    }
    Ok(StarLift { lifted, base, map: induced, kept_edges: kept })
}

/// Lifts a walk in the target, starting at the smallest vertex above its
/// first vertex and always moving to the smallest admissible neighbour.
pub fn lift_path_smallest(vm: &VertexMap, walk: &[usize]) -> Result<Vec<usize>> {
    let Some(&first) = walk.first() else {
        return Ok(Vec::new());
    };
    let start = vm.fibre(first).into_iter().next().ok_or_else(|| Error::Lift {
        step: 0,
        detail: format!("vertex {first} has an empty fibre"),
    })?;
    let mut out = vec![start];
    for (step, &v) in walk.iter().enumerate().skip(1) {
        let x = *out.last().expect("nonempty");
        if !vm.target.is_adjacent(walk[step - 1], v) {
            return input(format!("walk steps from {} to non-neighbour {v}", walk[step - 1]));
        }
        let y = vm.source.neighbours(x).iter().copied().find(|&y| vm.image(y) == v).ok_or_else(|| {
            Error::Lift { step, detail: format!("no neighbour of {x} lies above {v}") }
        })?;
        out.push(y);
    }
    Ok(out)
}

/// `C_{kn} → C_n`, reduction mod `n`.
pub fn cycle_cover(n: usize, k: usize) -> Result<VertexMap> {
    let big = cycle(n * k)?;
    VertexMap::new(big, cycle(n)?, (0..n * k).map(|i| i % n).collect())
}

/// `C6 → C3` with a two-vertex pendant path hung at every vertex above 0.
/// Target: the triangle plus path `0 – 3 – 4`.
pub fn cycle_cover_with_pendant() -> VertexMap {
    let target = Graph::new(5, [(0, 1), (1, 2), (2, 0), (0, 3), (3, 4)]).expect("simple");
    let mut edges: Vec<(usize, usize)> = (0..6).map(|i| (i, (i + 1) % 6)).collect();
    edges.extend([(0, 6), (3, 7), (6, 8), (7, 9)]);
    let source = Graph::new(10, edges).expect("simple");
    VertexMap::new(source, target, vec![0, 1, 2, 0, 1, 2, 3, 3, 4, 4]).expect("valid map")
}

/// Connected double cover of the open `n × m` box: two floors, and the
/// edges crossing from column `n/2 - 1` to `n/2` in row 0 swap floors.
pub fn two_floor_box(n: usize, m: usize) -> Result<VertexMap> {
    if n < 2 || m < 2 {
        return input("two-floor box needs sides of length at least 2");
    }
    let dims = [n, m];
    let base = box_lattice(&dims, false)?;
    let size = n * m;
    let seam = n / 2;
    let mut edges = Vec::new();
    for &(i, j) in base.edges() {
        let (pi, pj) = (box_point(&dims, i), box_point(&dims, j));
        let crosses = pi[0] != pj[0] && pi[0].max(pj[0]) == seam && pi[1] == 0;
        for f in 0..2 {
            let g = if crosses { 1 - f } else { f };
            edges.push((f * size + i, g * size + j));
        }
    }
    let source = Graph::new(2 * size, edges)?;
    VertexMap::new(source, base, (0..2 * size).map(|i| i % size).collect())
}

/// `(x, y, z) ↦ (x, y)` from the `n × m × h` box onto the `n × m` box.
pub fn box_projection(n: usize, m: usize, h: usize) -> Result<VertexMap> {
    let source = box_lattice(&[n, m, h], false)?;
    let target = box_lattice(&[n, m], false)?;
    let map = (0..n * m * h)
        .map(|i| {
            let p = box_point(&[n, m, h], i);
            box_index(&[n, m], &p[..2])
        })
        .collect();
    VertexMap::new(source, target, map)
}
