use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use super::fibration::VertexMap;
use super::graph::Graph;
use super::sample::{pair_fibres, reaches, Mode, Uniforms};
use crate::error::{input, Error, Result};
use crate::rational::{pow, Rational};

pub const DEFAULT_EXACT_CAP: usize = 24;
pub const DEFAULT_SAW_CAP: usize = 16;

/// Completing-object count meaning the reach is already certain.
const CERTAIN: usize = usize::MAX;

/// Reach probability as a polynomial in `p`.
///
/// Every inner configuration contributes `p^k (1-p)^(m-k) (1 - (1-p)^c)`,
/// where `m` counts the inner objects, `k` the open ones and `c` the
/// number of independent last-layer objects that would complete the reach.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReachPolynomial {
    inner: usize,
    /// `(open inner objects, completing objects) → number of configurations`.
    terms: BTreeMap<(usize, usize), u64>,
}

impl ReachPolynomial {
    pub fn eval(&self, p: &Rational) -> Rational {
        let q = Rational::one() - p;
        let mut total = Rational::zero();
        for (&(k, c), &n) in &self.terms {
            let last = if c == CERTAIN { Rational::one() } else { Rational::one() - pow(&q, c) };
            let w = pow(p, k) * pow(&q, self.inner - k) * last;
            total += w * Rational::from_integer(n.into());
        }
        total
    }

    pub fn eval_f64(&self, p: f64) -> f64 {
        let q = 1.0 - p;
        self.terms
            .iter()
            .map(|(&(k, c), &n)| {
                let last = if c == CERTAIN { 1.0 } else { 1.0 - q.powi(c as i32) };
                n as f64 * p.powi(k as i32) * q.powi((self.inner - k) as i32) * last
            })
            .sum()
    }

    pub fn inner_objects(&self) -> usize {
        self.inner
    }
}

/// Exact reach polynomial for `v` to distance `radius`.
///
/// Objects strictly inside radius `radius - 1` (edges with both endpoints
/// there in bond mode, vertices in site mode) are enumerated; the last layer
/// is independent given the inner configuration and enters in closed form.
pub fn reach_polynomial(g: &Graph, mode: Mode, v: usize, radius: usize, cap: usize) -> Result<ReachPolynomial> {
    if v >= g.vertex_count() {
        return input(format!("probe {v} is not a vertex"));
    }
    let dist = g.distances(v);
    let within = |x: usize, r: usize| dist[x].is_some_and(|d| d <= r);
    let mut terms = BTreeMap::new();
    if radius == 0 {
        match mode {
            Mode::Bond => terms.insert((0, CERTAIN), 1),
            Mode::Site => terms.insert((1, CERTAIN), 1),
        };
        let inner = if mode == Mode::Site { 1 } else { 0 };
        return Ok(ReachPolynomial { inner, terms });
    }
    let r1 = radius - 1;
    let inner: Vec<usize> = match mode {
        Mode::Bond => (0..g.edge_count()).filter(|&e| {
            let (a, b) = g.edge(e);
            within(a, r1) && within(b, r1)
        })
        .collect(),
        Mode::Site => (0..g.vertex_count()).filter(|&x| within(x, r1)).collect(),
    };
    if inner.len() > cap {
        return Err(Error::Size { what: "inner ball", needed: inner.len() as u128, limit: cap as u128 });
    }
    let mut slot = vec![usize::MAX; match mode {
        Mode::Bond => g.edge_count(),
        Mode::Site => g.vertex_count(),
    }];
    for (i, &o) in inner.iter().enumerate() {
        slot[o] = i;
    }
    let on_shell = |x: usize| dist[x] == Some(radius);
    for mask in 0u64..(1u64 << inner.len()) {
        let open = |o: usize| mask >> slot[o] & 1 == 1;
        let k = mask.count_ones() as usize;
        let comp = match mode {
            Mode::Bond => inner_component(g, v, |x| within(x, r1), |e| slot[e] != usize::MAX && open(e)),
            Mode::Site => {
                if !open(v) {
                    continue;
                }
                inner_component(g, v, |x| within(x, r1) && open(x), |_| true)
            }
        };
        let mut completing = 0;
        let mut shell = vec![false; g.vertex_count()];
        for &x in comp.iter().filter(|&&x| dist[x] == Some(r1)) {
            for &w in g.neighbours(x) {
                if on_shell(w) {
                    match mode {
                        Mode::Bond => completing += 1,
                        Mode::Site if !shell[w] => {
                            shell[w] = true;
                            completing += 1;
                        }
                        Mode::Site => {}
                    }
                }
            }
        }
        if completing > 0 {
            *terms.entry((k, completing)).or_insert(0) += 1;
        }
    }
    Ok(ReachPolynomial { inner: inner.len(), terms })
}

fn inner_component(
    g: &Graph,
    v: usize,
    allowed: impl Fn(usize) -> bool,
    edge_open: impl Fn(usize) -> bool,
) -> Vec<usize> {
    let mut seen = vec![false; g.vertex_count()];
    seen[v] = true;
    let mut stack = vec![v];
    let mut out = vec![v];
    while let Some(u) = stack.pop() {
        for (&w, &e) in g.neighbours(u).iter().zip(g.incident_edges(u)) {
            if !seen[w] && allowed(w) && edge_open(e) {
                seen[w] = true;
                stack.push(w);
                out.push(w);
            }
        }
    }
    out
}

pub fn reach_exact(g: &Graph, mode: Mode, p: &Rational, v: usize, radius: usize, cap: usize) -> Result<Rational> {
    Ok(reach_polynomial(g, mode, v, radius, cap)?.eval(p))
}

/// Exact reach probability from `x` in the fibre-selection model on the source.
pub fn fibre_selection_reach_exact(vm: &VertexMap, x: usize, radius: usize, cap: usize) -> Result<Rational> {
    let fibres = pair_fibres(vm)?;
    let g = &vm.source;
    let dist = g.distances(x);
    let mut relevant: Vec<usize> = (0..g.vertex_count())
        .filter(|&y| dist[y].is_some_and(|d| d <= radius))
        .map(|y| vm.image(y))
        .collect();
    relevant.sort_unstable();
    relevant.dedup();
    if relevant.len() > cap {
        return Err(Error::Size { what: "fibres in the ball", needed: relevant.len() as u128, limit: cap as u128 });
    }
    let mut slot = vec![usize::MAX; vm.target.vertex_count()];
    for (i, &b) in relevant.iter().enumerate() {
        slot[b] = i;
    }
    let mut hits: u64 = 0;
    for mask in 0u64..(1u64 << relevant.len()) {
        let open = |y: usize| {
            let s = slot[vm.image(y)];
            s != usize::MAX && fibres[vm.image(y)][(mask >> s & 1) as usize] == y
        };
        if reaches(g, &dist, x, radius, open, |_| true) {
            hits += 1;
        }
    }
    Ok(Rational::new(hits.into(), (1u64 << relevant.len()).into()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub trials: u64,
    pub seed: u64,
    pub successes: u64,
}

impl MCEstimate {
    pub fn from_counts(successes: u64, trials: u64, seed: u64) -> Self {
        let n = trials as f64;
        let mean = if trials == 0 { 0.0 } else { successes as f64 / n };
        let var = if trials > 1 { mean * (1.0 - mean) * n / (n - 1.0) } else { 0.0 };
        MCEstimate { mean, standard_error: (var / n.max(1.0)).sqrt(), trials, seed, successes }
    }

    /// `self ≥ other` up to `k` combined standard errors.
    pub fn at_least(&self, other: &MCEstimate, k: f64) -> bool {
        self.mean - other.mean >= -k * self.combined_se(other)
    }

    pub fn combined_se(&self, other: &MCEstimate) -> f64 {
        (self.standard_error.powi(2) + other.standard_error.powi(2)).sqrt()
    }
}

/// Counts trials `t` in `0..trials` with `event(t)`, in parallel.
pub fn bernoulli_mc(trials: u64, seed: u64, event: impl Fn(u64) -> bool + Sync) -> MCEstimate {
    let successes = (0..trials).into_par_iter().filter(|&t| event(t)).count() as u64;
    MCEstimate::from_counts(successes, trials, seed)
}

/// Monte Carlo reach probability; trial `t` uses draw `t` of `seed`.
pub fn reach_mc(g: &Graph, mode: Mode, p: f64, v: usize, radius: usize, trials: u64, seed: u64) -> Result<MCEstimate> {
    if !(0.0..=1.0).contains(&p) {
        return input(format!("p = {p} is not a probability"));
    }
    if v >= g.vertex_count() {
        return input(format!("probe {v} is not a vertex"));
    }
    let dist = g.distances(v);
    Ok(bernoulli_mc(trials, seed, |t| {
        let u = std::cell::RefCell::new(Uniforms::new(seed, t));
        match mode {
            Mode::Bond => reaches(g, &dist, v, radius, |_| true, |e| u.borrow_mut().at(e as u64) < p),
            Mode::Site => reaches(g, &dist, v, radius, |x| u.borrow_mut().at(x as u64) < p, |_| true),
        }
    }))
}

/// Monte Carlo reach from `x` in the fibre-selection model.
pub fn fibre_selection_reach_mc(vm: &VertexMap, x: usize, radius: usize, trials: u64, seed: u64) -> Result<MCEstimate> {
    let fibres = pair_fibres(vm)?;
    let dist = vm.source.distances(x);
    Ok(bernoulli_mc(trials, seed, |t| {
        let u = std::cell::RefCell::new(Uniforms::new(seed, t));
        let open = |y: usize| {
            let b = vm.image(y);
            let pick = if u.borrow_mut().at(b as u64) < 0.5 { 0 } else { 1 };
            fibres[b][pick] == y
        };
        reaches(&vm.source, &dist, x, radius, open, |_| true)
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PcInterval {
    pub lo: f64,
    pub hi: f64,
    pub radius: usize,
    pub threshold: f64,
    pub evaluations: Vec<(f64, MCEstimate)>,
}

/// Bisects for the `p` at which the reach estimate crosses `threshold`.
/// This is a finite-size proxy, not a critical point.
#[allow(clippy::too_many_arguments)]
pub fn estimate_pc(
    g: &Graph,
    mode: Mode,
    v: usize,
    radius: usize,
    trials: u64,
    seed: u64,
    tolerance: f64,
    threshold: f64,
) -> Result<PcInterval> {
    if tolerance <= 0.0 {
        return input("tolerance must be positive");
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut evaluations = Vec::new();
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        let est = reach_mc(g, mode, mid, v, radius, trials, seed)?;
        if est.mean >= threshold {
            hi = mid;
        } else {
            lo = mid;
        }
        evaluations.push((mid, est));
    }
    Ok(PcInterval { lo, hi, radius, threshold, evaluations })
}

/// Number of self-avoiding paths with `length` edges starting at `v`.
pub fn saw_count(g: &Graph, v: usize, length: usize, cap: usize) -> Result<u128> {
    if length > cap {
        return Err(Error::Size { what: "walk length", needed: length as u128, limit: cap as u128 });
    }
    fn go(g: &Graph, u: usize, left: usize, seen: &mut [bool]) -> u128 {
        if left == 0 {
            return 1;
        }
        let mut n = 0;
        for &w in g.neighbours(u) {
            if !seen[w] {
                seen[w] = true;
                n += go(g, w, left - 1, seen);
                seen[w] = false;
            }
        }
        n
    }
    let mut seen = vec![false; g.vertex_count()];
    seen[v] = true;
    Ok(go(g, v, length, &mut seen))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::percolation::fibration::cycle_cover;
    use crate::percolation::graph::{box_index, box_lattice, ray};
    use crate::rational::rat;

    #[test]
    fn ray_and_square_lattice() {
        let p = rat(1, 3);
        assert_eq!(reach_exact(&ray(5), Mode::Bond, &p, 0, 2, 24).unwrap(), rat(1, 9));
        let z2 = box_lattice(&[5, 5], false).unwrap();
        let o = box_index(&[5, 5], &[2, 2]);
        let q = rat(2, 3);
        assert_eq!(reach_exact(&z2, Mode::Bond, &p, o, 1, 24).unwrap(), Rational::one() - pow(&q, 4));
        assert_eq!(reach_exact(&z2, Mode::Site, &p, o, 0, 24).unwrap(), p);
        assert_eq!(reach_exact(&z2, Mode::Bond, &p, o, 0, 24).unwrap(), Rational::one());
    }

    #[test]
    fn cap_is_enforced() {
        let z2 = box_lattice(&[9, 9], false).unwrap();
        let o = box_index(&[9, 9], &[4, 4]);
        assert!(matches!(reach_polynomial(&z2, Mode::Bond, o, 3, 10), Err(Error::Size { .. })));
    }

    #[test]
    fn saw_on_square_lattice() {
        let z2 = box_lattice(&[9, 9], false).unwrap();
        let o = box_index(&[9, 9], &[4, 4]);
        let counts: Vec<u128> = (1..=3).map(|n| saw_count(&z2, o, n, 16).unwrap()).collect();
        assert_eq!(counts, vec![4, 12, 36]);
        assert!(saw_count(&z2, o, 17, 16).is_err());
    }

    #[test]
    fn fibre_selection_marginal() {
        let vm = cycle_cover(3, 2).unwrap();
        assert_eq!(fibre_selection_reach_exact(&vm, 0, 0, 24).unwrap(), rat(1, 2));
    }

    #[test]
    fn mc_reproducible() {
        let g = ray(6);
        let a = reach_mc(&g, Mode::Bond, 0.8, 0, 3, 500, 9).unwrap();
        let b = reach_mc(&g, Mode::Bond, 0.8, 0, 3, 500, 9).unwrap();
        assert_eq!(a, b);
    }
}
