use std::collections::VecDeque;

use super::cells::CellDecomposition;
use super::relation::{boundary_relation, BoundaryRelation, Variant};
use crate::error::{input, Result};
use crate::percolation::Uniforms;

/// Edge states `x` on the subdivided graph and one bit `y` per cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AugSample {
    pub x: Vec<bool>,
    pub y: Vec<bool>,
}

/// Edge `e` uses object `e` of the draw, cell `c` uses object `E + c`, so
/// the edge states do not depend on `s`.
pub fn sample_augmented(cd: &CellDecomposition, p: f64, s: f64, seed: u64, draw: u64) -> AugSample {
    let m = cd.graph().edge_count();
    let u = Uniforms::new(seed, draw).sequence(m + cd.cell_count());
    AugSample { x: u[..m].iter().map(|&v| v < p).collect(), y: u[m..].iter().map(|&v| v < s).collect() }
}

/// Least set containing `a`, closed under open edges and under the whole-cell rule.
pub fn augmented_cluster(cd: &CellDecomposition, sample: &AugSample, a: &[usize]) -> Result<Vec<bool>> {
    let g = cd.graph();
    if a.is_empty() {
        return input("the augmented cluster needs a nonempty starting set");
    }
    if sample.x.len() != g.edge_count() || sample.y.len() != cd.cell_count() {
        return input("sample does not match the decomposition");
    }
    let open_interior: Vec<bool> =
        (0..cd.cell_count()).map(|c| sample.y[c] && cd.interior_edges[c].iter().all(|&e| sample.x[e])).collect();
    let mut inside = vec![false; g.vertex_count()];
    let mut queue = VecDeque::new();
    for &v in a {
        if !inside[v] {
            inside[v] = true;
            queue.push_back(v);
        }
    }
    let mut absorbed = vec![false; cd.cell_count()];
    while let Some(u) = queue.pop_front() {
        for (&w, &e) in g.neighbours(u).iter().zip(g.incident_edges(u)) {
            if !sample.x[e] {
                continue;
            }
            if !inside[w] {
                inside[w] = true;
                queue.push_back(w);
            }
        }
        for c in cd.cells_with_boundary(u) {
            if absorbed[c] || !open_interior[c] {
                continue;
            }
            let enters = g
                .neighbours(u)
                .iter()
                .zip(g.incident_edges(u))
                .any(|(&w, &e)| sample.x[e] && cd.interiors[c].binary_search(&w).is_ok());
            if enters {
                absorbed[c] = true;
                for &z in &cd.cells[c] {
                    if !inside[z] {
                        inside[z] = true;
                        queue.push_back(z);
                    }
                }
            }
        }
    }
    Ok(inside)
}

/// Boundary-vertex cluster of `v0` from the cell-by-cell exploration.
pub fn explore(cd: &CellDecomposition, v0: usize, sample: &AugSample, variant: Variant) -> Result<Vec<usize>> {
    explore_impl(cd, v0, sample, variant, true)
}

/// With `freeze = false`, the augmentation condition of an explored cell is
/// re-evaluated against the current cluster at every saturation round.
pub(crate) fn explore_impl(
    cd: &CellDecomposition,
    v0: usize,
    sample: &AugSample,
    variant: Variant,
    freeze: bool,
) -> Result<Vec<usize>> {
    if !cd.is_boundary_vertex(v0) {
        return input(format!("{v0} is not a boundary vertex"));
    }
    let g = cd.graph();
    let mut current = vec![false; g.vertex_count()];
    current[v0] = true;
    let mut explored: Vec<Option<BoundaryRelation>> = vec![None; cd.cell_count()];
    let states = |c: usize| -> Vec<bool> { cd.cell_edges[c].iter().map(|&e| sample.x[e]).collect() };
    let in_cluster = |current: &[bool], c: usize| -> Vec<usize> {
        cd.boundaries[c].iter().copied().filter(|&x| current[x]).collect()
    };
    loop {
        let Some(c) = (0..cd.cell_count())
            .find(|&c| explored[c].is_none() && cd.boundaries[c].iter().any(|&x| current[x]))
        else {
            break;
        };
        let a = in_cluster(&current, c);
        explored[c] = Some(boundary_relation(cd, c, &states(c), sample.y[c], &a, variant)?);
        loop {
            let mut grew = false;
            for c in 0..cd.cell_count() {
                let Some(rel) = &explored[c] else { continue };
                let rel = if freeze || variant == Variant::Plain {
                    rel.clone()
                } else {
                    boundary_relation(cd, c, &states(c), sample.y[c], &in_cluster(&current, c), variant)?
                };
                let bd = &cd.boundaries[c];
                for block in &rel.blocks {
                    if block.iter().any(|&i| current[bd[i]]) {
                        for &i in block {
                            if !current[bd[i]] {
                                current[bd[i]] = true;
                                grew = true;
                            }
                        }
                    }
                }
            }
            if !grew {
                break;
            }
        }
    }
    Ok((0..g.vertex_count()).filter(|&x| current[x]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augmented::cells::build_cells;
    use crate::percolation::graph::box_lattice;
    use crate::percolation::{cluster_of, Mode, PercSample};

    fn torus() -> CellDecomposition {
        build_cells(&box_lattice(&[6, 6], true).unwrap(), 1).unwrap()
    }

    #[test]
    fn zero_bits_give_ordinary_clusters() {
        let cd = torus();
        for draw in 0..50 {
            let s = sample_augmented(&cd, 0.6, 0.0, 3, draw);
            let k = augmented_cluster(&cd, &s, &[0]).unwrap();
            let perc = PercSample { mode: Mode::Bond, open: s.x.clone(), p: 0.6, seed: 3, draw };
            let plain = cluster_of(cd.graph(), &perc, 0);
            assert_eq!((0..k.len()).filter(|&x| k[x]).collect::<Vec<_>>(), plain);
        }
    }

    #[test]
    fn all_open_fills_the_component() {
        let cd = torus();
        let s = sample_augmented(&cd, 1.0, 0.0, 1, 0);
        assert!(augmented_cluster(&cd, &s, &[5]).unwrap().iter().all(|&b| b));
    }

    #[test]
    fn closed_sample_explores_nothing() {
        let cd = torus();
        let s = sample_augmented(&cd, 0.0, 1.0, 1, 0);
        let v0 = cd.boundary_vertices()[0];
        assert_eq!(explore(&cd, v0, &s, Variant::Augmented).unwrap(), vec![v0]);
        assert!(explore(&cd, 0, &s, Variant::Plain).is_err());
    }

    #[test]
    fn inclusion_is_one_way() {
        let cd = torus();
        let g = cd.graph();
        let c = 0;
        let (int, bd) = (&cd.interiors[c], &cd.boundaries[c]);
        let (v, entry) = bd
            .iter()
            .find_map(|&v| {
                let i = g.neighbours(v).iter().position(|w| int.binary_search(w).is_ok())?;
                Some((v, g.incident_edges(v)[i]))
            })
            .unwrap();
        let mut x = vec![false; g.edge_count()];
        for &e in &cd.interior_edges[c] {
            x[e] = true;
        }
        x[entry] = true;
        let mut y = vec![false; cd.cell_count()];
        y[c] = true;
        let sample = AugSample { x, y };
        let u = *bd.iter().find(|&&u| u != v).unwrap();
        let from_v = augmented_cluster(&cd, &sample, &[v]).unwrap();
        assert!(cd.cells[c].iter().all(|&z| from_v[z]));
        assert!(from_v[u]);
        let from_u = augmented_cluster(&cd, &sample, &[u]).unwrap();
        assert!(!from_u[v]);
    }

    #[test]
    fn freeze_rule_is_pinned() {
        let cd = torus();
        let v0 = cd.boundary_vertices()[0];
        let mut differing = None;
        for draw in 0..3000 {
            let s = sample_augmented(&cd, 0.75, 1.0, 5, draw);
            let frozen = explore(&cd, v0, &s, Variant::Augmented).unwrap();
            let k = augmented_cluster(&cd, &s, &[v0]).unwrap();
            assert!(frozen.iter().all(|&z| k[z] && cd.is_boundary_vertex(z)));
            if differing.is_none() && explore_impl(&cd, v0, &s, Variant::Augmented, false).unwrap() != frozen {
                differing = Some(draw);
            }
        }
        assert!(differing.is_some(), "no sample separates the two update rules");
    }
}
