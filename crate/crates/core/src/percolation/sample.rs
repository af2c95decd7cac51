use std::collections::VecDeque;

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::fibration::VertexMap;
use super::graph::Graph;
use crate::error::{input, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Bond,
    Site,
}

/// Uniform variables indexed by `(seed, draw, object)`.
///
/// Draw `d` is ChaCha8 stream `d`; object `i` is the `i`-th `u64` of that
/// stream, so random access and sequential reads agree.
pub struct Uniforms {
    rng: ChaCha8Rng,
}

impl Uniforms {
    pub fn new(seed: u64, draw: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(draw);
        Uniforms { rng }
    }

    pub fn at(&mut self, object: u64) -> f64 {
        self.rng.set_word_pos(2 * object as u128);
        unit(self.rng.next_u64())
    }

    /// The first `n` objects in order.
    pub fn sequence(&mut self, n: usize) -> Vec<f64> {
        self.rng.set_word_pos(0);
        (0..n).map(|_| unit(self.rng.next_u64())).collect()
    }
}

fn unit(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PercSample {
    pub mode: Mode,
    pub open: Vec<bool>,
    pub p: f64,
    pub seed: u64,
    pub draw: u64,
}

/// Each edge (bond mode) or vertex (site mode) is open when its uniform is below `p`.
pub fn sample_percolation(g: &Graph, mode: Mode, p: f64, seed: u64, draw: u64) -> Result<PercSample> {
    if !(0.0..=1.0).contains(&p) {
        return input(format!("p = {p} is not a probability"));
    }
    let n = match mode {
        Mode::Bond => g.edge_count(),
        Mode::Site => g.vertex_count(),
    };
    let open = Uniforms::new(seed, draw).sequence(n).into_iter().map(|u| u < p).collect();
    Ok(PercSample { mode, open, p, seed, draw })
}

/// Open cluster of `v`, ascending. Empty for a closed vertex in site mode.
pub fn cluster_of(g: &Graph, sample: &PercSample, v: usize) -> Vec<usize> {
    let expected = match sample.mode {
        Mode::Bond => g.edge_count(),
        Mode::Site => g.vertex_count(),
    };
    assert_eq!(sample.open.len(), expected, "sample does not match the graph");
    let open_site = |x: usize| sample.mode == Mode::Bond || sample.open[x];
    let open_edge = |e: usize| sample.mode == Mode::Site || sample.open[e];
    let mut seen = vec![false; g.vertex_count()];
    if !open_site(v) {
        return Vec::new();
    }
    seen[v] = true;
    let mut queue = VecDeque::from([v]);
    while let Some(u) = queue.pop_front() {
        for (&w, &e) in g.neighbours(u).iter().zip(g.incident_edges(u)) {
            if !seen[w] && open_edge(e) && open_site(w) {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    (0..g.vertex_count()).filter(|&x| seen[x]).collect()
}

/// Whether `v` connects to a vertex at distance at least `radius`, given
/// the distances from `v` and open predicates on vertices and edges.
pub fn reaches(
    g: &Graph,
    dist: &[Option<usize>],
    v: usize,
    radius: usize,
    mut site_open: impl FnMut(usize) -> bool,
    mut edge_open: impl FnMut(usize) -> bool,
) -> bool {
    if !site_open(v) {
        return false;
    }
    if radius == 0 {
        return true;
    }
    let mut seen = vec![false; g.vertex_count()];
    seen[v] = true;
    let mut stack = vec![v];
    while let Some(u) = stack.pop() {
        for (&w, &e) in g.neighbours(u).iter().zip(g.incident_edges(u)) {
            if !seen[w] && edge_open(e) && site_open(w) {
                if dist[w].is_some_and(|d| d >= radius) {
                    return true;
                }
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    false
}

/// Keeps one uniformly chosen vertex of every fibre; fibres must have two elements.
pub fn fibre_selection_sample(vm: &VertexMap, seed: u64, draw: u64) -> Result<PercSample> {
    let chosen = fibre_choices(vm, seed, draw)?;
    let mut open = vec![false; vm.source.vertex_count()];
    for x in chosen {
        open[x] = true;
    }
    Ok(PercSample { mode: Mode::Site, open, p: 0.5, seed, draw })
}

/// The kept vertex of each fibre, indexed by target vertex.
pub fn fibre_choices(vm: &VertexMap, seed: u64, draw: u64) -> Result<Vec<usize>> {
    let fibres = pair_fibres(vm)?;
    let u = Uniforms::new(seed, draw).sequence(fibres.len());
    Ok(fibres.iter().zip(u).map(|(f, u)| if u < 0.5 { f[0] } else { f[1] }).collect())
}

pub(crate) fn pair_fibres(vm: &VertexMap) -> Result<Vec<Vec<usize>>> {
    let mut fibres = vec![Vec::new(); vm.target.vertex_count()];
    for x in 0..vm.source.vertex_count() {
        fibres[vm.image(x)].push(x);
    }
    if let Some((v, f)) = fibres.iter().enumerate().find(|(_, f)| f.len() != 2) {
        return input(format!("fibre of {v} has {} elements, expected 2", f.len()));
    }
    Ok(fibres)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::percolation::fibration::cycle_cover;
    use crate::percolation::graph::{cycle, path};

    #[test]
    fn extreme_parameters() {
        let g = cycle(10).unwrap();
        assert!(sample_percolation(&g, Mode::Bond, 0.0, 1, 0).unwrap().open.iter().all(|o| !o));
        assert!(sample_percolation(&g, Mode::Site, 1.0, 1, 0).unwrap().open.iter().all(|&o| o));
        assert!(sample_percolation(&g, Mode::Site, 1.5, 1, 0).is_err());
    }

    #[test]
    fn open_fraction_is_binomial() {
        let g = path(100_001);
        let s = sample_percolation(&g, Mode::Bond, 0.3, 17, 3).unwrap();
        let n = s.open.len() as f64;
        let frac = s.open.iter().filter(|&&o| o).count() as f64 / n;
        let sigma = (0.3 * 0.7 / n).sqrt();
        assert!((frac - 0.3).abs() < 3.0 * sigma, "{frac}");
    }

    #[test]
    fn random_access_matches_sequence() {
        let seq = Uniforms::new(5, 9).sequence(50);
        let mut u = Uniforms::new(5, 9);
        for i in (0..50).rev() {
            assert_eq!(u.at(i as u64), seq[i]);
        }
        assert_ne!(Uniforms::new(5, 10).sequence(1), seq[..1]);
    }

    #[test]
    fn clusters() {
        let g = cycle(4).unwrap();
        let all = PercSample { mode: Mode::Bond, open: vec![true; 4], p: 1.0, seed: 0, draw: 0 };
        assert_eq!(cluster_of(&g, &all, 2), vec![0, 1, 2, 3]);
        let none = PercSample { open: vec![false; 4], ..all.clone() };
        assert_eq!(cluster_of(&g, &none, 2), vec![2]);
        // Edges 0 = {0,1} and 1 = {1,2}.
        let two = PercSample { open: vec![true, true, false, false], ..all.clone() };
        assert_eq!(cluster_of(&g, &two, 0), vec![0, 1, 2]);
        let closed_site = PercSample { mode: Mode::Site, open: vec![false, true, true, true], ..all };
        assert!(cluster_of(&g, &closed_site, 0).is_empty());
    }

    #[test]
    fn one_vertex_per_fibre() {
        let vm = cycle_cover(3, 2).unwrap();
        for draw in 0..20 {
            let s = fibre_selection_sample(&vm, 4, draw).unwrap();
            for v in 0..3 {
                assert_eq!(vm.fibre(v).iter().filter(|&&x| s.open[x]).count(), 1);
            }
        }
        let bad = cycle_cover(3, 3).unwrap();
        assert!(fibre_selection_sample(&bad, 0, 0).is_err());
    }
}
