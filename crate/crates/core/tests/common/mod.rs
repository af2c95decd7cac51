#![allow(dead_code)]

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rand::Rng;
use stodom::bk::Event;
use stodom::lift::FibreMap;
use stodom::percolation::{Graph, Mode};
use stodom::{Configuration, FiniteMeasure, Rational, Space};


pub fn q(n: i64, d: i64) -> Rational {
    stodom::rational::rat(n, d)
}

/// Up-sets of a small space as bitmasks over its configurations.
pub fn upsets(space: Space) -> (Vec<Configuration>, Vec<u32>) {
    let configs = space.configurations(16).expect("at most 16 configurations");
    let k = configs.len();
    let above: Vec<u32> = (0..k)
        .map(|i| (0..k).filter(|&j| configs[i].below(&configs[j])).fold(0u32, |m, j| m | 1 << j))
        .collect();
    let sets = (0u32..(1u32 << k).max(1))
        .filter(|&m| (0..k).all(|i| m >> i & 1 == 0 || above[i] & !m == 0))
        .collect();
    (configs, sets)
}

/// Strassen by brute force: `mu(U) <= rho(U)` for every up-set `U`.
pub fn oracle_dominates(mu: &FiniteMeasure, rho: &FiniteMeasure) -> bool {
    let (configs, sets) = upsets(mu.space());
    let mass = |m: &FiniteMeasure, set: u32| -> Rational {
        configs.iter().enumerate().filter(|&(i, _)| set >> i & 1 == 1).map(|(_, c)| m.weight(c)).sum()
    };
    sets.iter().all(|&u| mass(mu, u) <= mass(rho, u))
}

pub fn random_law(rng: &mut impl Rng, n: usize) -> Vec<Rational> {
    let w: Vec<i64> = (0..n).map(|_| rng.gen_range(0..=4)).collect();
    let total: i64 = w.iter().sum();
    if total == 0 {
        let mut v = vec![Rational::zero(); n];
        v[rng.gen_range(0..n)] = Rational::one();
        return v;
    }
    w.iter().map(|&x| q(x, total)).collect()
}

fn cdf(law: &[Rational]) -> Vec<Rational> {
    let mut acc = Rational::zero();
    law.iter()
        .map(|x| {
            acc += x;
            acc.clone()
        })
        .collect()
}

fn from_cdf(f: &[Rational]) -> Vec<Rational> {
    (0..f.len()).map(|k| if k == 0 { f[0].clone() } else { &f[k] - &f[k - 1] }).collect()
}

/// A law dominating `law` in one dimension: CDF multiplied by a random CDF.
pub fn raised(rng: &mut impl Rng, law: &[Rational]) -> Vec<Rational> {
    let (f, g) = (cdf(law), cdf(&random_law(rng, law.len())));
    from_cdf(&f.iter().zip(&g).map(|(a, b)| a * b).collect::<Vec<_>>())
}

/// A law dominated by `law`: the minimum with an independent random variable.
pub fn lowered(rng: &mut impl Rng, law: &[Rational]) -> Vec<Rational> {
    let (f, g) = (cdf(law), cdf(&random_law(rng, law.len())));
    let one = Rational::one();
    from_cdf(&f.iter().zip(&g).map(|(a, b)| &one - (&one - a) * (&one - b)).collect::<Vec<_>>())
}

pub fn random_measure(rng: &mut impl Rng, space: Space, atoms: usize) -> FiniteMeasure {
    let configs = space.configurations(1 << 16).unwrap();
    let mut w: BTreeMap<Configuration, i64> = BTreeMap::new();
    for _ in 0..atoms.max(1) {
        *w.entry(configs[rng.gen_range(0..configs.len())].clone()).or_default() += rng.gen_range(1..=3);
    }
    let total: i64 = w.values().sum();
    FiniteMeasure::new(space, w.into_iter().map(|(c, x)| (c, q(x, total)))).unwrap()
}

fn product(laws: &[Vec<Rational>]) -> FiniteMeasure {
    laws.iter()
        .map(|l| FiniteMeasure::on_labels(l).unwrap())
        .reduce(|m, site| m.tensor(&site))
        .expect("at least one site")
}

/// Largest target support drawn by [`random_valid_instance`].
pub const MAX_TARGET_ATOMS: usize = 64;

/// A lift and target satisfying the column assumptions by construction.
///
/// Half the targets are products with `nu_{s(b)} <= nu_a` on each column
/// (redrawn above [`MAX_TARGET_ATOMS`] atoms, possibly mixed with a second
/// such product), half are mixtures of configurations increasing away from
/// the section; mixtures failing assumption A fall back to one of their atoms.
pub fn random_valid_instance(rng: &mut impl Rng) -> (FiniteMeasure, FiniteMeasure, FibreMap) {
    let b = rng.gen_range(1..=3);
    let sizes: Vec<usize> = (0..b).map(|_| rng.gen_range(1..=3)).collect();
    let n: u8 = rng.gen_range(1..=2);
    let pm = FibreMap::from_sizes(&sizes).unwrap();
    let s = pm.section().unwrap().0.clone();
    let labels = n as usize + 1;
    let half = q(1, 2);
    let component = |rng: &mut _| loop {
        let mut laws = vec![Vec::new(); pm.a_count()];
        for col in 0..b {
            let base = random_law(rng, labels);
            for &a in pm.fibre(col) {
                laws[a] = if a == s[col] { base.clone() } else { raised(rng, &base) };
            }
        }
        let m = product(&laws);
        if m.len() <= MAX_TARGET_ATOMS {
            break m;
        }
    };
    let rho = if rng.gen_bool(0.5) {
        let first = component(rng);
        let second = component(rng);
        let mix = FiniteMeasure::from_nonnegative(
            first.space(),
            first.atoms().map(|(c, w)| (c.clone(), w * &half)).chain(second.atoms().map(|(c, w)| (c.clone(), w * &half))),
        )
        .unwrap();
        if rng.gen_bool(0.5) && stodom::lift::check_assumption_a(&mix, &pm).unwrap().holds {
            mix
        } else {
            first
        }
    } else {
        let k = rng.gen_range(1..=8);
        let configs: Vec<Configuration> = (0..k)
            .map(|_| {
                let mut z = vec![0u8; pm.a_count()];
                for col in 0..b {
                    let low = rng.gen_range(0..=n);
                    for &a in pm.fibre(col) {
                        z[a] = if a == s[col] { low } else { rng.gen_range(low..=n) };
                    }
                }
                Configuration(z)
            })
            .collect();
        let weights: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=3)).collect();
        let total: i64 = weights.iter().sum();
        let space = Space::new(pm.a_count(), n);
        let mix = FiniteMeasure::new(space, configs.iter().cloned().zip(weights.iter().map(|&w| q(w, total)))).unwrap();
        if stodom::lift::check_assumption_a(&mix, &pm).unwrap().holds {
            mix
        } else {
            FiniteMeasure::point_mass(space, configs[0].clone()).unwrap()
        }
    };
    let sections = pm.sections(u128::MAX).unwrap();
    let mut atoms: BTreeMap<Configuration, Rational> = BTreeMap::new();
    for (z, w) in rho.atoms() {
        for _ in 0..2 {
            let sec = &sections[rng.gen_range(0..sections.len())].0;
            let mut y = vec![0u8; pm.a_count()];
            for col in 0..b {
                let top = z.0[s[col]];
                y[sec[col]] = rng.gen_range(0..=top);
            }
            *atoms.entry(Configuration(y)).or_insert_with(Rational::zero) += w / q(2, 1);
        }
    }
    let mu = FiniteMeasure::new(rho.space(), atoms).unwrap();
    (mu, rho, pm)
}

/// Literal disjoint occurrence: all disjoint pairs, all completions.
pub fn brute_disjoint(e1: &Event, e2: &Event) -> Vec<bool> {
    let n = e1.coordinates();
    let full = (1u32 << n) - 1;
    let forces = |e: &Event, w: u32, p: u32| (0..=full).filter(|&v| v & p == w & p).all(|v| e.contains(v));
    (0..=full)
        .map(|w| {
            (0..=full).any(|p1| {
                forces(e1, w, p1) && {
                    let rest = full & !p1;
                    let mut p2 = rest;
                    loop {
                        if forces(e2, w, p2) {
                            break true;
                        }
                        if p2 == 0 {
                            break false;
                        }
                        p2 = (p2 - 1) & rest;
                    }
                }
            })
        })
        .collect()
}

/// Reach probability by summing over every open/closed pattern of the objects
/// (edges or vertices) that touch the `radius - 1` ball.
pub fn brute_reach(g: &Graph, mode: Mode, p: &Rational, v: usize, radius: usize) -> Option<Rational> {
    let dist = g.distances(v);
    let near = |x: usize| dist[x].is_some_and(|d| d < radius);
    let objects: Vec<usize> = match mode {
        Mode::Bond => (0..g.edge_count()).filter(|&e| near(g.edge(e).0) || near(g.edge(e).1)).collect(),
        Mode::Site => (0..g.vertex_count()).filter(|&x| dist[x].is_some_and(|d| d <= radius)).collect(),
    };
    if objects.len() > 20 {
        return None;
    }
    let one = Rational::one();
    let mut total = Rational::zero();
    for mask in 0u32..(1u32 << objects.len()) {
        let on = |k: usize| mask >> k & 1 == 1;
        let open_edge = |e: usize| match mode {
            Mode::Bond => objects.iter().position(|&o| o == e).is_some_and(on),
            Mode::Site => true,
        };
        let open_vertex = |x: usize| match mode {
            Mode::Bond => true,
            Mode::Site => objects.iter().position(|&o| o == x).is_some_and(on),
        };
        if !open_vertex(v) {
            continue;
        }
        let mut seen = vec![false; g.vertex_count()];
        seen[v] = true;
        let mut stack = vec![v];
        let mut hit = false;
        while let Some(u) = stack.pop() {
            if dist[u].is_some_and(|d| d >= radius) {
                hit = true;
                break;
            }
            for (&w, &e) in g.neighbours(u).iter().zip(g.incident_edges(u)) {
                if !seen[w] && open_edge(e) && open_vertex(w) {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        if hit {
            let k = mask.count_ones() as usize;
            total += stodom::rational::pow(p, k) * stodom::rational::pow(&(&one - p), objects.len() - k);
        }
    }
    Some(total)
}

fn marginal_cdf(rho: &FiniteMeasure, c: usize) -> Vec<Rational> {
    let m = rho.marginal(&[c]);
    let law: Vec<Rational> =
        (0..=rho.space().label_bound).map(|k| m.weight(&Configuration(vec![k]))).collect();
    cdf(&law)
}

/// First position `c` whose marginal fails to dominate `law`, by CDF comparison.
pub fn first_undominated(law: &[Rational], rho: &FiniteMeasure) -> Option<usize> {
    let f = cdf(law);
    (0..rho.sites()).find(|&c| marginal_cdf(rho, c).iter().zip(&f).any(|(g, fx)| g > fx))
}

/// Joint law of `(X, H)` with a random position kernel, and a random `rho` on one column.
/// With `violating`, `X` is drawn until some marginal fails to dominate it.
pub fn random_one_column(rng: &mut impl Rng, violating: bool) -> (FiniteMeasure, FiniteMeasure, Option<usize>) {
    let m = rng.gen_range(1..=3usize);
    let n: u8 = rng.gen_range(1..=2);
    let labels = n as usize + 1;
    let atoms = rng.gen_range(1..=4);
    let mut rho = random_measure(rng, Space::new(m, n), atoms);
    let law = if violating {
        loop {
            let l = random_law(rng, labels);
            if first_undominated(&l, &rho).is_some() {
                break l;
            }
            rho = random_measure(rng, Space::new(m, n), atoms);
        }
    } else {
        let one = Rational::one();
        let top: Vec<Rational> = (0..labels)
            .map(|k| (0..m).map(|c| marginal_cdf(&rho, c)[k].clone()).max().unwrap_or(one.clone()))
            .collect();
        lowered(rng, &from_cdf(&top))
    };
    let bound = n.max(m as u8 - 1);
    let mut atoms = Vec::new();
    for (v, w) in law.iter().enumerate() {
        for (h, k) in random_law(rng, m).into_iter().enumerate() {
            atoms.push((Configuration(vec![v as u8, h as u8]), w * k));
        }
    }
    let joint = FiniteMeasure::from_nonnegative(Space::new(2, bound), atoms).unwrap();
    let expected = first_undominated(&law, &rho);
    (joint, rho, expected)
}
