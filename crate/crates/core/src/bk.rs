//! Events on `{0,1}^C`, disjoint occurrence and exact BK checks.
//!
//! A configuration is a mask `w: u32` with bit `i` the state of coordinate `i`.

use std::collections::VecDeque;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{input, Error, Result};
use crate::flow::FlowNetwork;
use crate::percolation::Graph;
use crate::rational::{format, is_probability, Rational};

pub const MAX_COORDINATES: usize = 20;
/// The general witness search stores a table of size `3^n`.
pub const GENERAL_CAP: usize = 12;
/// Up-set enumeration stops here (7581 events on 5 bits).
pub const ENUMERATION_CAP: usize = 5;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Event {
    n: usize,
    bits: Vec<u64>,
}

/// Disjoint coordinate sets, as masks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct WitnessPair {
    pub p1: u32,
    pub p2: u32,
}

impl WitnessPair {
    pub fn new(p1: u32, p2: u32) -> Result<Self> {
        if p1 & p2 != 0 {
            return input(format!("witnesses {p1:#x} and {p2:#x} overlap"));
        }
        Ok(WitnessPair { p1, p2 })
    }
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_COORDINATES {
        return Err(Error::Size { what: "event coordinates", needed: n as u128, limit: MAX_COORDINATES as u128 });
    }
    Ok(())
}

impl Event {
    pub fn empty(n: usize) -> Result<Self> {
        check_size(n)?;
        Ok(Event { n, bits: vec![0; (1usize << n).div_ceil(64)] })
    }

    pub fn full(n: usize) -> Result<Self> {
        Event::from_fn(n, |_| true)
    }

    pub fn from_fn(n: usize, f: impl Fn(u32) -> bool) -> Result<Self> {
        let mut e = Event::empty(n)?;
        for w in 0..e.configurations() {
            if f(w) {
                e.insert(w);
            }
        }
        Ok(e)
    }

    /// Hex string of the integer whose bit `w` marks membership of `w`.
    pub fn from_hex(n: usize, s: &str) -> Result<Self> {
        let mut e = Event::empty(n)?;
        let digits = s.trim().trim_start_matches("0x").trim_start_matches("0X");
        if digits.is_empty() {
            return input("empty hex mask");
        }
        for (k, ch) in digits.chars().rev().enumerate() {
            let d = ch.to_digit(16).ok_or_else(|| Error::Input(format!("bad hex digit {ch:?}")))?;
            for b in 0..4 {
                if d >> b & 1 == 1 {
                    let w = 4 * k + b;
                    if w >= e.configurations() as usize {
                        return input(format!("hex mask has bits beyond 2^{n}"));
                    }
                    e.insert(w as u32);
                }
            }
        }
        Ok(e)
    }

    /// Upward closure of the given terms; term `"0110"` has coordinates 1 and 2 open.
    pub fn from_min_terms<S: AsRef<str>>(n: usize, terms: &[S]) -> Result<Self> {
        let mut masks = Vec::with_capacity(terms.len());
        for t in terms {
            let t = t.as_ref().trim();
            if t.len() != n || !t.chars().all(|c| c == '0' || c == '1') {
                return input(format!("min-term {t:?} is not a 0/1 string of length {n}"));
            }
            masks.push(t.chars().enumerate().filter(|&(_, c)| c == '1').fold(0u32, |m, (i, _)| m | 1 << i));
        }
        Event::from_fn(n, |w| masks.iter().any(|&m| w & m == m))
    }

    pub fn to_hex(&self) -> String {
        let digits = (self.configurations() as usize).div_ceil(4);
        let mut out = String::from("0x");
        for k in (0..digits).rev() {
            let d = (0..4).filter(|&b| self.contains((4 * k + b) as u32)).fold(0u32, |d, b| d | 1 << b);
            out.push(char::from_digit(d, 16).expect("nibble"));
        }
        out
    }

    pub fn coordinates(&self) -> usize {
        self.n
    }

    pub fn configurations(&self) -> u32 {
        1u32 << self.n
    }

    pub fn contains(&self, w: u32) -> bool {
        self.bits[(w / 64) as usize] >> (w % 64) & 1 == 1
    }

    fn insert(&mut self, w: u32) {
        self.bits[(w / 64) as usize] |= 1 << (w % 64);
    }

    pub fn members(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.configurations()).filter(|&w| self.contains(w))
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_subset(&self, other: &Event) -> bool {
        self.n == other.n && self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    pub fn intersection(&self, other: &Event) -> Result<Event> {
        same_ground(self, other)?;
        Ok(Event { n: self.n, bits: self.bits.iter().zip(&other.bits).map(|(a, b)| a & b).collect() })
    }
}

fn same_ground(e1: &Event, e2: &Event) -> Result<()> {
    if e1.n != e2.n {
        return input(format!("events live on {} and {} coordinates", e1.n, e2.n));
    }
    Ok(())
}

pub fn is_increasing(e: &Event) -> bool {
    e.members().all(|w| (0..e.n).all(|i| e.contains(w | 1 << i)))
}

/// `t(m) = sum of 3^i over i in m`.
fn ternary_table(n: usize) -> Vec<usize> {
    let mut t = vec![0usize; 1 << n];
    for m in 1..(1usize << n) {
        let i = m.trailing_zeros() as usize;
        t[m] = t[m & (m - 1)] + 3usize.pow(i as u32);
    }
    t
}

/// `f[t]` for a ternary cylinder `t` (digit 0/1 fixed, 2 free): every completion lies in `e`.
fn cylinder_table(e: &Event) -> Vec<bool> {
    let n = e.n;
    let size = 3usize.pow(n as u32);
    let mut f = vec![false; size];
    for t in 0..size {
        let (mut rest, mut unit, mut free) = (t, 1usize, None);
        let mut w = 0u32;
        for i in 0..n {
            match rest % 3 {
                1 => w |= 1 << i,
                2 => {
                    free = Some(unit);
                    break;
                }
                _ => {}
            }
            rest /= 3;
            unit *= 3;
        }
        f[t] = match free {
            None => e.contains(w),
            Some(u) => f[t - 2 * u] && f[t - u],
        };
    }
    f
}

struct Cylinders {
    tern: Vec<usize>,
    full: u32,
}

impl Cylinders {
    fn new(n: usize) -> Self {
        Cylinders { tern: ternary_table(n), full: ((1u64 << n) - 1) as u32 }
    }

    /// Ternary index of the cylinder through `w` fixed on `p`.
    fn index(&self, w: u32, p: u32) -> usize {
        self.tern[(w & p) as usize] + 2 * self.tern[(!p & self.full) as usize]
    }

    fn witness(&self, f1: &[bool], f2: &[bool], w: u32) -> Option<WitnessPair> {
        (0..=self.full).find(|&p1| f1[self.index(w, p1)] && f2[self.index(w, !p1 & self.full)]).map(|p1| WitnessPair {
            p1,
            p2: !p1 & self.full,
        })
    }
}

/// Exhaustive witness search; valid for arbitrary events with `n <= GENERAL_CAP`.
pub fn disjoint_occurrence_general(e1: &Event, e2: &Event) -> Result<Event> {
    same_ground(e1, e2)?;
    if e1.n > GENERAL_CAP {
        return Err(Error::Size { what: "general witness search", needed: e1.n as u128, limit: GENERAL_CAP as u128 });
    }
    let cyl = Cylinders::new(e1.n);
    let (f1, f2) = (cylinder_table(e1), cylinder_table(e2));
    general_with_tables(e1.n, &cyl, &f1, &f2)
}

fn general_with_tables(n: usize, cyl: &Cylinders, f1: &[bool], f2: &[bool]) -> Result<Event> {
    Event::from_fn(n, |w| cyl.witness(f1, f2, w).is_some())
}

/// Disjoint witnesses for `w`, or `None`.
pub fn find_witnesses(e1: &Event, e2: &Event, w: u32) -> Result<Option<WitnessPair>> {
    same_ground(e1, e2)?;
    if e1.n > GENERAL_CAP {
        return Err(Error::Size { what: "general witness search", needed: e1.n as u128, limit: GENERAL_CAP as u128 });
    }
    let cyl = Cylinders::new(e1.n);
    Ok(cyl.witness(&cylinder_table(e1), &cylinder_table(e2), w))
}

/// For increasing events: split the open coordinates of `w` between the two events.
pub fn disjoint_occurrence_increasing(e1: &Event, e2: &Event) -> Result<Event> {
    same_ground(e1, e2)?;
    if !is_increasing(e1) || !is_increasing(e2) {
        return input("the fast path needs increasing events");
    }
    Ok(increasing_unchecked(e1, e2))
}

fn increasing_unchecked(e1: &Event, e2: &Event) -> Event {
    Event::from_fn(e1.n, |w| {
        if !e1.contains(w) || !e2.contains(w) {
            return false;
        }
        let mut q = w;
        loop {
            if e1.contains(q) && e2.contains(w ^ q) {
                return true;
            }
            if q == 0 {
                return false;
            }
            q = (q - 1) & w;
        }
    })
    .expect("same size as the inputs")
}

/// Fast path when both events are increasing, general search otherwise.
pub fn disjoint_occurrence(e1: &Event, e2: &Event) -> Result<Event> {
    same_ground(e1, e2)?;
    if is_increasing(e1) && is_increasing(e2) {
        Ok(increasing_unchecked(e1, e2))
    } else {
        disjoint_occurrence_general(e1, e2)
    }
}

/// Weight of every configuration under the product of `Bernoulli(p_i)`.
pub fn product_weights(p: &[Rational]) -> Result<Vec<Rational>> {
    check_size(p.len())?;
    if let Some(q) = p.iter().find(|q| !is_probability(q)) {
        return input(format!("{} is not a probability", format(q)));
    }
    let mut w = vec![Rational::one()];
    for q in p {
        let off = Rational::one() - q;
        let mut next = Vec::with_capacity(2 * w.len());
        next.extend(w.iter().map(|x| x * &off));
        next.extend(w.iter().map(|x| x * q));
        w = next;
    }
    Ok(w)
}

pub fn probability(e: &Event, weights: &[Rational]) -> Rational {
    e.members().fold(Rational::zero(), |acc, w| acc + &weights[w as usize])
}

#[derive(Clone, Debug, Serialize)]
pub struct BkReport {
    pub coordinates: usize,
    pub p: Vec<String>,
    pub p_e1: String,
    pub p_e2: String,
    pub lhs: String,
    pub rhs: String,
    pub gap: String,
    pub holds: bool,
}

fn validate_pair(e1: &Event, e2: &Event) -> Result<()> {
    same_ground(e1, e2)?;
    if !is_increasing(e1) || !is_increasing(e2) {
        return input("both events must be increasing");
    }
    Ok(())
}

/// `P(E1 o E2) <= P(E1) P(E2)` under the product of `Bernoulli(p_i)`.
pub fn check_bk(e1: &Event, e2: &Event, p: &[Rational]) -> Result<BkReport> {
    validate_pair(e1, e2)?;
    if p.len() != e1.n {
        return input(format!("{} parameters for {} coordinates", p.len(), e1.n));
    }
    let w = product_weights(p)?;
    let lhs = probability(&increasing_unchecked(e1, e2), &w);
    let (a, b) = (probability(e1, &w), probability(e2, &w));
    let rhs = &a * &b;
    Ok(BkReport {
        coordinates: e1.n,
        p: p.iter().map(format).collect(),
        p_e1: format(&a),
        p_e2: format(&b),
        gap: format(&(&rhs - &lhs)),
        holds: lhs <= rhs,
        lhs: format(&lhs),
        rhs: format(&rhs),
    })
}

/// A law on `{0,1}^2`, indexed by `a + 2b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairLaw(pub [Rational; 4]);

impl PairLaw {
    pub fn new(w: [Rational; 4]) -> Result<Self> {
        if w.iter().any(|x| !is_probability(x)) || w.iter().sum::<Rational>() != Rational::one() {
            return input("pair law weights must be nonnegative and sum to 1");
        }
        Ok(PairLaw(w))
    }

    pub fn independent(p: &Rational) -> Result<Self> {
        let q = Rational::one() - p;
        PairLaw::new([&q * &q, p * &q, &q * p, p * p])
    }

    /// Exactly one of the two copies open, each with probability 1/2.
    pub fn fibre_selection() -> Self {
        let h = crate::rational::rat(1, 2);
        PairLaw([Rational::zero(), h.clone(), h, Rational::zero()])
    }

    pub fn first_marginal(&self) -> Rational {
        &self.0[1] + &self.0[3]
    }

    pub fn second_marginal(&self) -> Rational {
        &self.0[2] + &self.0[3]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PropBkReport {
    pub coordinates: usize,
    pub p: Vec<String>,
    pub lhs: String,
    pub rhs: String,
    pub gap: String,
    pub holds: bool,
}

/// `P(E1 o E2) <= P(E1 x E2)` where the copies of coordinate `i` follow `rho[i]`.
pub fn check_prop_bk(e1: &Event, e2: &Event, p: &[Rational], rho: &[PairLaw]) -> Result<PropBkReport> {
    validate_pair(e1, e2)?;
    let n = e1.n;
    if p.len() != n || rho.len() != n {
        return input(format!("need {n} parameters and {n} pair laws"));
    }
    for (i, (q, r)) in p.iter().zip(rho).enumerate() {
        if r.first_marginal() < *q || r.second_marginal() < *q {
            return input(format!("pair law {i} has a marginal below {}", format(q)));
        }
    }
    let lhs = probability(&increasing_unchecked(e1, e2), &product_weights(p)?);
    let rhs = lifted_probability(e1, e2, rho);
    Ok(PropBkReport {
        coordinates: n,
        p: p.iter().map(format).collect(),
        gap: format(&(&rhs - &lhs)),
        holds: lhs <= rhs,
        lhs: format(&lhs),
        rhs: format(&rhs),
    })
}

/// `P(first copy in e1, second copy in e2)` under the product of the pair laws.
pub fn lifted_probability(e1: &Event, e2: &Event, rho: &[PairLaw]) -> Rational {
    let mut g: Vec<Rational> =
        (0..e2.configurations()).map(|w| if e2.contains(w) { Rational::one() } else { Rational::zero() }).collect();
    for (i, r) in rho.iter().enumerate() {
        let bit = 1u32 << i;
        for w in (0..e2.configurations()).filter(|w| w & bit == 0) {
            let (g0, g1) = (g[w as usize].clone(), g[(w | bit) as usize].clone());
            g[w as usize] = &r.0[0] * &g0 + &r.0[2] * &g1;
            g[(w | bit) as usize] = &r.0[1] * &g0 + &r.0[3] * &g1;
        }
    }
    e1.members().fold(Rational::zero(), |acc, w| acc + &g[w as usize])
}

/// All increasing events on `n` coordinates, built recursively from pairs `a ⊆ b`.
pub fn increasing_events(n: usize) -> Result<Vec<Event>> {
    if n > ENUMERATION_CAP {
        return Err(Error::Size { what: "up-set enumeration", needed: n as u128, limit: ENUMERATION_CAP as u128 });
    }
    let mut masks: Vec<u64> = vec![0, 1];
    for k in 1..=n {
        let half = 1u32 << (k - 1);
        let mut next = Vec::new();
        for &a in &masks {
            for &b in &masks {
                if a & !b == 0 {
                    next.push(a | b << half);
                }
            }
        }
        next.sort_unstable();
        masks = next;
    }
    Ok(masks.into_iter().map(|m| Event { n, bits: vec![m] }).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct ExhaustiveReport {
    pub coordinates: usize,
    pub p: String,
    pub events: usize,
    pub pairs: u64,
    pub violations: u64,
    /// Pairs where the fast path and the general search disagree.
    pub path_mismatches: u64,
    pub max_gap: String,
    pub max_gap_pair: (String, String),
    pub holds: bool,
}

/// Every ordered pair of increasing events on `n` coordinates at uniform `p`.
pub fn exhaustive_bk(n: usize, p: &Rational) -> Result<ExhaustiveReport> {
    let events = increasing_events(n)?;
    let w = product_weights(&vec![p.clone(); n])?;
    let probs: Vec<Rational> = events.iter().map(|e| probability(e, &w)).collect();
    let cyl = Cylinders::new(n);
    let tables: Vec<Vec<bool>> = events.iter().map(|e| cylinder_table(e)).collect();
    type Acc = (u64, u64, Option<(Rational, usize, usize)>);
    let better = |a: Option<(Rational, usize, usize)>, b: Option<(Rational, usize, usize)>| match (a, b) {
        (None, b) => b,
        (a, None) => a,
        (Some(a), Some(b)) => Some(if b.0 > a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) { b } else { a }),
    };
    let (violations, mismatches, best): Acc = (0..events.len())
        .into_par_iter()
        .map(|i| {
            let mut acc: Acc = (0, 0, None);
            for j in 0..events.len() {
                let fast = increasing_unchecked(&events[i], &events[j]);
                let general = general_with_tables(n, &cyl, &tables[i], &tables[j]).expect("sizes match");
                if fast != general {
                    acc.1 += 1;
                }
                let gap = &probs[i] * &probs[j] - probability(&fast, &w);
                if gap < Rational::zero() {
                    acc.0 += 1;
                }
                acc.2 = better(acc.2.take(), Some((gap, i, j)));
            }
            acc
        })
        .reduce(|| (0, 0, None), |a, b| (a.0 + b.0, a.1 + b.1, better(a.2, b.2)));
    let (gap, i, j) = best.expect("at least two events");
    Ok(ExhaustiveReport {
        coordinates: n,
        p: format(p),
        events: events.len(),
        pairs: (events.len() * events.len()) as u64,
        violations,
        path_mismatches: mismatches,
        max_gap: format(&gap),
        max_gap_pair: (events[i].to_hex(), events[j].to_hex()),
        holds: violations == 0 && mismatches == 0,
    })
}

/// Centre 0 with four paths of `arm` edges.
pub fn cross(arm: usize) -> Graph {
    let edges = (0..4).flat_map(|k| (0..arm).map(move |t| (if t == 0 { 0 } else { 1 + k * arm + t - 1 }, 1 + k * arm + t)));
    Graph::new(1 + 4 * arm, edges).expect("cross is simple")
}

#[derive(Clone, Debug, Serialize)]
pub struct TwoArmReport {
    pub radius: usize,
    pub p: String,
    pub edges: usize,
    pub a1: String,
    pub a2: String,
    pub a1_squared: String,
    /// `a2` recomputed as the probability of the arm event occurring disjointly with itself.
    pub a2_disjoint_occurrence: String,
    pub holds: bool,
}

/// One arm and two edge-disjoint arms from `v` to the sphere of radius `radius`,
/// by summing over open/closed states of the edges that can lie on a shortest-exit arm.
pub fn two_arm_check(g: &Graph, v: usize, radius: usize, p: &Rational, cap: usize) -> Result<TwoArmReport> {
    if v >= g.vertex_count() {
        return input(format!("vertex {v} out of range"));
    }
    if radius == 0 {
        return input("radius must be at least 1");
    }
    if !is_probability(p) {
        return input(format!("{} is not a probability", format(p)));
    }
    let dist = g.distances(v);
    let local: Vec<usize> = (0..g.edge_count())
        .filter(|&e| {
            let (a, b) = g.edge(e);
            matches!((dist[a], dist[b]), (Some(x), Some(y)) if x.min(y) < radius)
        })
        .collect();
    let cap = cap.min(MAX_COORDINATES);
    if local.len() > cap {
        return Err(Error::Size { what: "arm edges", needed: local.len() as u128, limit: cap as u128 });
    }
    let n = local.len();
    let on_sphere = |x: usize| dist[x] == Some(radius);
    let arms = Event::from_fn(n, |w| {
        let mut seen = vec![false; g.vertex_count()];
        seen[v] = true;
        let mut queue = VecDeque::from([v]);
        while let Some(u) = queue.pop_front() {
            if on_sphere(u) {
                return true;
            }
            for (k, &e) in local.iter().enumerate() {
                if w >> k & 1 == 1 {
                    let (a, b) = g.edge(e);
                    let other = if a == u { b } else if b == u { a } else { continue };
                    if !seen[other] {
                        seen[other] = true;
                        queue.push_back(other);
                    }
                }
            }
        }
        false
    })?;
    let sink = g.vertex_count();
    let two = Event::from_fn(n, |w| {
        let mut net = FlowNetwork::<i64>::new(sink + 1);
        for (k, &e) in local.iter().enumerate() {
            if w >> k & 1 == 1 {
                let (a, b) = g.edge(e);
                net.add_arc(a, b, 1);
                net.add_arc(b, a, 1);
            }
        }
        for x in (0..g.vertex_count()).filter(|&x| on_sphere(x)) {
            net.add_arc(x, sink, 2);
        }
        net.max_flow(v, sink) >= 2
    })?;
    let w = product_weights(&vec![p.clone(); n])?;
    let a1 = probability(&arms, &w);
    let a2 = probability(&two, &w);
    let a2_do = probability(&increasing_unchecked(&arms, &arms), &w);
    if a2 != a2_do {
        return Err(Error::Internal(format!("two-arm probability {} differs from {}", format(&a2), format(&a2_do))));
    }
    let sq = &a1 * &a1;
    Ok(TwoArmReport {
        radius,
        p: format(p),
        edges: n,
        holds: a2 <= sq,
        a1: format(&a1),
        a2: format(&a2),
        a1_squared: format(&sq),
        a2_disjoint_occurrence: format(&a2_do),
    })
}
