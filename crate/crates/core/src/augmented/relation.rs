use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::Serialize;

use super::cells::CellDecomposition;
use crate::domination::dominates;
use crate::error::{input, Error, Result};
use crate::measure::{Configuration, FiniteMeasure, Space};
use crate::rational::{self, pow, rat, Rational};

pub const DEFAULT_RELATION_CAP: u64 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Plain,
    Augmented,
}

/// Partition of a cell's boundary list, as sorted blocks of positions.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct BoundaryRelation {
    pub blocks: Vec<Vec<usize>>,
}

impl BoundaryRelation {
    pub fn discrete(k: usize) -> Self {
        BoundaryRelation { blocks: (0..k).map(|i| vec![i]).collect() }
    }

    pub fn full(k: usize) -> Self {
        BoundaryRelation { blocks: if k == 0 { Vec::new() } else { vec![(0..k).collect()] } }
    }

    /// From a block label per position.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut by: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &l) in labels.iter().enumerate() {
            by.entry(l).or_default().push(i);
        }
        let mut blocks: Vec<Vec<usize>> = by.into_values().collect();
        blocks.sort();
        BoundaryRelation { blocks }
    }

    pub fn size(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    /// One bit per pair `i < j`, set when `i` and `j` share a block; the
    /// refinement order becomes the product order on these vectors.
    pub fn to_pairs(&self) -> Configuration {
        let k = self.size();
        let mut label = vec![0; k];
        for (b, block) in self.blocks.iter().enumerate() {
            for &i in block {
                label[i] = b;
            }
        }
        let mut bits = Vec::with_capacity(k * k.saturating_sub(1) / 2);
        for i in 0..k {
            for j in i + 1..k {
                bits.push(u8::from(label[i] == label[j]));
            }
        }
        Configuration(bits)
    }

    pub fn from_pairs(k: usize, c: &Configuration) -> Result<Self> {
        let mut label: Vec<usize> = (0..k).collect();
        let mut idx = 0;
        for i in 0..k {
            for j in i + 1..k {
                if c.0[idx] == 1 {
                    let (a, b) = (label[i], label[j]);
                    for l in label.iter_mut() {
                        if *l == b {
                            *l = a;
                        }
                    }
                }
                idx += 1;
            }
        }
        let r = BoundaryRelation::from_labels(&label);
        if r.to_pairs() != *c {
            return input("pair vector is not transitive");
        }
        Ok(r)
    }

    /// `self` refines `other`.
    pub fn refines(&self, other: &BoundaryRelation) -> bool {
        self.to_pairs().below(&other.to_pairs())
    }
}

/// Exact law of a boundary relation, on pair vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct RelationDistribution {
    pub cell: usize,
    pub boundary_size: usize,
    pub measure: FiniteMeasure,
}

impl RelationDistribution {
    pub fn relations(&self) -> Vec<(BoundaryRelation, Rational)> {
        self.measure
            .atoms()
            .map(|(c, w)| (BoundaryRelation::from_pairs(self.boundary_size, c).expect("stored vectors are relations"), w.clone()))
            .collect()
    }
}

/// Counts of cell configurations, by relation and number of open edges.
///
/// `plain[rel][k]` counts configurations with `k` open edges and plain
/// relation `rel`; `bonus[rel][k]` counts those among them where the
/// augmentation event holds for the chosen `A`.
#[derive(Clone, Debug)]
pub struct CellEnumeration {
    pub cell: usize,
    pub a: Vec<usize>,
    pub boundary_size: usize,
    pub edges: usize,
    plain: BTreeMap<Configuration, Vec<u64>>,
    bonus: BTreeMap<Configuration, Vec<u64>>,
}

/// Plain relation of one configuration of the cell edges.
fn plain_relation(cd: &CellDecomposition, cell: usize, open: impl Fn(usize) -> bool) -> BoundaryRelation {
    let g = cd.graph();
    let vertices = &cd.cells[cell];
    let pos = |x: usize| vertices.binary_search(&x).expect("cell vertex");
    let mut parent: Vec<usize> = (0..vertices.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (i, &e) in cd.cell_edges[cell].iter().enumerate() {
        if open(i) {
            let (a, b) = g.edge(e);
            let (ra, rb) = (find(&mut parent, pos(a)), find(&mut parent, pos(b)));
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let labels: Vec<usize> = cd.boundaries[cell].iter().map(|&x| find(&mut parent, pos(x))).collect();
    BoundaryRelation::from_labels(&labels)
}

/// Interior all open, and an open cell edge joins `A` to the interior.
fn bonus_event(cd: &CellDecomposition, cell: usize, a: &[usize], open: impl Fn(usize) -> bool) -> bool {
    let g = cd.graph();
    let edges = &cd.cell_edges[cell];
    let interior = &cd.interiors[cell];
    let in_int = |x: usize| interior.binary_search(&x).is_ok();
    let int_open = cd.interior_edges[cell].iter().all(|e| open(edges.binary_search(e).expect("cell edge")));
    int_open
        && edges.iter().enumerate().any(|(i, &e)| {
            let (x, y) = g.edge(e);
            open(i) && ((a.contains(&x) && in_int(y)) || (a.contains(&y) && in_int(x)))
        })
}

/// The relation of one cell for given edge states (indexed like `cell_edges`) and bit `y`.
pub fn boundary_relation(
    cd: &CellDecomposition,
    cell: usize,
    open: &[bool],
    y: bool,
    a: &[usize],
    variant: Variant,
) -> Result<BoundaryRelation> {
    if open.len() != cd.cell_edges[cell].len() {
        return input("edge states do not match the cell");
    }
    if let Some(&x) = a.iter().find(|x| cd.boundaries[cell].binary_search(x).is_err()) {
        return input(format!("{x} is not on the boundary of cell {cell}"));
    }
    let plain = plain_relation(cd, cell, |i| open[i]);
    if variant == Variant::Augmented {
        if a.is_empty() {
            return input("the augmented relation needs a nonempty A");
        }
        if y && bonus_event(cd, cell, a, |i| open[i]) {
            return Ok(BoundaryRelation::full(cd.boundaries[cell].len()));
        }
    }
    Ok(plain)
}

/// Enumerates all `2^|E_C|` edge configurations of the cell.
pub fn enumerate_cell(cd: &CellDecomposition, cell: usize, a: &[usize], cap: u64) -> Result<CellEnumeration> {
    let m = cd.cell_edges[cell].len();
    if m >= 63 || (1u64 << m) > cap {
        return Err(Error::Size { what: "cell configurations", needed: 1u128 << m.min(127), limit: cap as u128 });
    }
    if let Some(&x) = a.iter().find(|x| cd.boundaries[cell].binary_search(x).is_err()) {
        return input(format!("{x} is not on the boundary of cell {cell}"));
    }
    let mut plain: BTreeMap<Configuration, Vec<u64>> = BTreeMap::new();
    let mut bonus: BTreeMap<Configuration, Vec<u64>> = BTreeMap::new();
    for mask in 0u64..(1u64 << m) {
        let open = |i: usize| mask >> i & 1 == 1;
        let k = mask.count_ones() as usize;
        let rel = plain_relation(cd, cell, open).to_pairs();
        let hit = !a.is_empty() && bonus_event(cd, cell, a, open);
        if hit {
            bonus.entry(rel.clone()).or_insert_with(|| vec![0; m + 1])[k] += 1;
        }
        plain.entry(rel).or_insert_with(|| vec![0; m + 1])[k] += 1;
    }
    Ok(CellEnumeration { cell, a: a.to_vec(), boundary_size: cd.boundaries[cell].len(), edges: m, plain, bonus })
}

impl CellEnumeration {
    fn weights(&self, p: &Rational) -> Vec<Rational> {
        let q = Rational::one() - p;
        (0..=self.edges).map(|k| pow(p, k) * pow(&q, self.edges - k)).collect()
    }

    fn eval(counts: &[u64], w: &[Rational]) -> Rational {
        counts.iter().zip(w).filter(|(&n, _)| n > 0).map(|(&n, w)| w * Rational::from_integer(n.into())).sum()
    }

    /// Law of `Z_p` for the plain variant, `Z^A_{p,s}` for the augmented one.
    pub fn distribution(&self, p: &Rational, s: &Rational, variant: Variant) -> Result<RelationDistribution> {
        if !rational::is_probability(p) || !rational::is_probability(s) {
            return input("p and s must lie in [0, 1]");
        }
        let w = self.weights(p);
        let mut law: BTreeMap<Configuration, Rational> = BTreeMap::new();
        for (rel, counts) in &self.plain {
            law.insert(rel.clone(), Self::eval(counts, &w));
        }
        if variant == Variant::Augmented {
            let full = BoundaryRelation::full(self.boundary_size).to_pairs();
            let mut moved = Rational::zero();
            for (rel, counts) in &self.bonus {
                let m = s * Self::eval(counts, &w);
                *law.get_mut(rel).expect("bonus relations are plain relations") -= &m;
                moved += m;
            }
            *law.entry(full).or_insert_with(Rational::zero) += moved;
        }
        let k = self.boundary_size;
        let measure = FiniteMeasure::from_nonnegative(Space::binary(k * k.saturating_sub(1) / 2), law)?;
        Ok(RelationDistribution { cell: self.cell, boundary_size: k, measure })
    }
}

pub fn relation_distribution(
    cd: &CellDecomposition,
    cell: usize,
    p: &Rational,
    s: &Rational,
    a: &[usize],
    variant: Variant,
    cap: u64,
) -> Result<RelationDistribution> {
    if variant == Variant::Augmented && a.is_empty() {
        return input("the augmented relation needs a nonempty A");
    }
    enumerate_cell(cd, cell, a, cap)?.distribution(p, s, variant)
}

/// Stochastic domination under the refinement order.
pub fn relation_dominates(d1: &RelationDistribution, d2: &RelationDistribution) -> Result<bool> {
    if d1.cell != d2.cell || d1.boundary_size != d2.boundary_size {
        return input("relation laws of different cells");
    }
    Ok(dominates(&d1.measure, &d2.measure)?.holds())
}

#[derive(Clone, Debug, Serialize)]
pub struct DeltaReport {
    pub cell: usize,
    pub a: Vec<usize>,
    pub p: String,
    pub s: String,
    /// Largest certified `δ` on the final grid.
    pub delta: String,
    pub resolution: String,
    pub refinements: u32,
    pub checks: u32,
    /// `s · min(p, 1 - p)^{|E_C|}`, the mass available for rearrangement.
    pub alpha: String,
}

/// Largest `δ = j · h` with `Z_{p+δ} ≼ Z^A_{p,s}`.
///
/// Starts at `h = resolution`; while `δ = h` fails and `h > min_resolution`,
/// halves `h`. Success at some `δ` implies success below it, as the plain
/// relation increases with its parameter, so the largest grid point is
/// found by bisection.
pub fn max_delta(
    en: &CellEnumeration,
    p: &Rational,
    s: &Rational,
    resolution: &Rational,
    min_resolution: &Rational,
) -> Result<DeltaReport> {
    let target = en.distribution(p, s, Variant::Augmented)?;
    let mut checks = 0;
    let mut ok = |delta: &Rational| -> Result<bool> {
        checks += 1;
        let lower = en.distribution(&(p + delta), &Rational::zero(), Variant::Plain)?;
        relation_dominates(&lower, &target)
    };
    let one = Rational::one();
    let headroom = &one - p;
    let mut h = resolution.clone();
    let mut refinements = 0;
    let mut best = Rational::zero();
    if headroom > Rational::zero() {
        loop {
            if h <= headroom && ok(&h)? {
                break;
            }
            if &h <= min_resolution {
                h = Rational::zero();
                break;
            }
            h /= rat(2, 1);
            refinements += 1;
        }
        if !h.is_zero() {
            let steps = (&headroom / &h).floor().to_integer();
            let (mut lo, mut hi) = (num_bigint::BigInt::one(), steps);
            while lo < hi {
                let mid: num_bigint::BigInt = (&lo + &hi + 1u32) / 2u32;
                if ok(&(&h * Rational::from_integer(mid.clone())))? {
                    lo = mid;
                } else {
                    hi = mid - 1u32;
                }
            }
            best = &h * Rational::from_integer(lo);
        }
    }
    let eps = if p < &(&one - p) { p.clone() } else { &one - p };
    let alpha = s * pow(&eps, en.edges);
    Ok(DeltaReport {
        cell: en.cell,
        a: en.a.clone(),
        p: rational::format(p),
        s: rational::format(s),
        delta: rational::format(&best),
        resolution: rational::format(if best.is_zero() { resolution } else { &h }),
        refinements,
        checks,
        alpha: rational::format(&alpha),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_vectors_round_trip() {
        let r = BoundaryRelation::from_labels(&[3, 1, 3, 0]);
        assert_eq!(r.blocks, vec![vec![0, 2], vec![1], vec![3]]);
        assert_eq!(BoundaryRelation::from_pairs(4, &r.to_pairs()).unwrap(), r);
        assert!(BoundaryRelation::discrete(4).refines(&r));
        assert!(r.refines(&BoundaryRelation::full(4)));
        assert!(!BoundaryRelation::full(4).refines(&r));
        assert!(BoundaryRelation::from_pairs(3, &Configuration(vec![1, 1, 0])).is_err());
    }
}
