//! Exact finite probability measures on `[N]^sites` with the product order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::rational::{self, Rational};

pub type Label = u8;

/// One label per site.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration(pub Vec<Label>);

impl Configuration {
    pub fn zeros(sites: usize) -> Self {
        Configuration(vec![0; sites])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labels(&self) -> &[Label] {
        &self.0
    }

    /// Product order: `self[i] <= other[i]` for every site.
    pub fn below(&self, other: &Configuration) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn project(&self, sites: &[usize]) -> Configuration {
        Configuration(sites.iter().map(|&s| self.0[s]).collect())
    }

    pub fn key(&self) -> String {
        self.0.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(",")
    }

    pub fn parse_key(key: &str) -> Result<Configuration> {
        let key = key.trim();
        if key.is_empty() {
            return Ok(Configuration(Vec::new()));
        }
        key.split(',')
            .map(|t| {
                t.trim()
                    .parse::<Label>()
                    .map_err(|_| Error::Input(format!("bad label {t:?} in key {key:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Configuration)
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.key())
    }
}

impl From<Vec<Label>> for Configuration {
    fn from(v: Vec<Label>) -> Self {
        Configuration(v)
    }
}

impl From<&[Label]> for Configuration {
    fn from(v: &[Label]) -> Self {
        Configuration(v.to_vec())
    }
}

/// A configuration space `[N]^sites`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Space {
    pub sites: usize,
    pub label_bound: Label,
}

impl Space {
    pub fn new(sites: usize, label_bound: Label) -> Self {
        Space { sites, label_bound }
    }

    pub fn binary(sites: usize) -> Self {
        Space::new(sites, 1)
    }

    pub fn contains(&self, x: &Configuration) -> bool {
        x.len() == self.sites && x.0.iter().all(|&l| l <= self.label_bound)
    }

    pub fn size(&self) -> u128 {
        (self.label_bound as u128 + 1).saturating_pow(self.sites as u32)
    }

    /// All configurations in lexicographic order. Errors beyond `cap` points.
    pub fn configurations(&self, cap: u128) -> Result<Vec<Configuration>> {
        let size = self.size();
        if size > cap {
            return Err(Error::Size {
                what: "configuration space",
                needed: size,
                limit: cap,
            });
        }
        let mut out = Vec::with_capacity(size as usize);
        let mut cur = vec![0 as Label; self.sites];
        loop {
            out.push(Configuration(cur.clone()));
            let mut i = self.sites;
            loop {
                if i == 0 {
                    return Ok(out);
                }
                i -= 1;
                if cur[i] < self.label_bound {
                    cur[i] += 1;
                    break;
                }
                cur[i] = 0;
            }
        }
    }
}

/// A probability measure with exact rational weights and finite support.
#[derive(Clone, PartialEq, Eq)]
pub struct FiniteMeasure {
    space: Space,
    weights: BTreeMap<Configuration, Rational>,
}

impl fmt::Debug for FiniteMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for (x, w) in &self.weights {
            m.entry(x, &rational::format(w));
        }
        m.finish()
    }
}

impl FiniteMeasure {
    /// Builds a measure, merging repeated atoms. Rejects non-positive weights,
    /// configurations outside `space`, and totals different from 1.
    pub fn new(
        space: Space,
        atoms: impl IntoIterator<Item = (Configuration, Rational)>,
    ) -> Result<Self> {
        let mut weights: BTreeMap<Configuration, Rational> = BTreeMap::new();
        for (x, w) in atoms {
            if !w.is_positive() {
                return input(format!("atom {x:?} has non-positive weight {}", rational::format(&w)));
            }
            if !space.contains(&x) {
                return input(format!("atom {x:?} lies outside [{}]^{}", space.label_bound, space.sites));
            }
            *weights.entry(x).or_insert_with(Rational::zero) += w;
        }
        Self::checked(space, weights)
    }

    /// Like [`FiniteMeasure::new`] but silently drops zero weights, which is
    /// convenient when weights come from formulas such as `p^k (1-p)^l`.
    pub fn from_nonnegative(
        space: Space,
        atoms: impl IntoIterator<Item = (Configuration, Rational)>,
    ) -> Result<Self> {
        let mut weights: BTreeMap<Configuration, Rational> = BTreeMap::new();
        for (x, w) in atoms {
            if w.is_negative() {
                return input(format!("atom {x:?} has negative weight"));
            }
            if w.is_zero() {
                continue;
            }
            if !space.contains(&x) {
                return input(format!("atom {x:?} lies outside [{}]^{}", space.label_bound, space.sites));
            }
            *weights.entry(x).or_insert_with(Rational::zero) += w;
        }
        Self::checked(space, weights)
    }

    fn checked(space: Space, weights: BTreeMap<Configuration, Rational>) -> Result<Self> {
        if weights.is_empty() {
            return input("measure has empty support");
        }
        let total: Rational = weights.values().sum();
        if !total.is_one() {
            return input(format!("weights sum to {}, not 1", rational::format(&total)));
        }
        Ok(FiniteMeasure { space, weights })
    }

    pub fn point_mass(space: Space, x: Configuration) -> Result<Self> {
        Self::new(space, [(x, Rational::one())])
    }

    /// Uniform on the given distinct configurations.
    pub fn uniform(space: Space, support: impl IntoIterator<Item = Configuration>) -> Result<Self> {
        let support: BTreeSet<Configuration> = support.into_iter().collect();
        if support.is_empty() {
            return input("uniform measure on empty set");
        }
        let w = Rational::new(1.into(), (support.len() as i64).into());
        Self::new(space, support.into_iter().map(|x| (x, w.clone())))
    }

    /// Law of a single `[0, N]`-valued label given by `probs[k] = P(value = k)`.
    pub fn on_labels(probs: &[Rational]) -> Result<Self> {
        if probs.is_empty() || probs.len() > Label::MAX as usize + 1 {
            return input("label distribution has bad length");
        }
        let space = Space::new(1, (probs.len() - 1) as Label);
        Self::from_nonnegative(
            space,
            probs
                .iter()
                .enumerate()
                .map(|(k, w)| (Configuration(vec![k as Label]), w.clone())),
        )
    }

    pub fn bernoulli(p: &Rational) -> Result<Self> {
        if !rational::is_probability(p) {
            return input("Bernoulli parameter outside [0, 1]");
        }
        Self::on_labels(&[Rational::one() - p, p.clone()])
    }

    /// `Bernoulli(p)^{⊗sites}`.
    pub fn bernoulli_product(p: &Rational, sites: usize) -> Result<Self> {
        let one = Self::bernoulli(p)?;
        let mut out = Self::point_mass(Space::binary(0), Configuration(Vec::new()))?;
        for _ in 0..sites {
            out = out.tensor(&one);
        }
        Ok(out)
    }

    /// Product of independent per-site Bernoulli laws.
    pub fn bernoulli_sites(ps: &[Rational]) -> Result<Self> {
        let mut out = Self::point_mass(Space::binary(0), Configuration(Vec::new()))?;
        for p in ps {
            out = out.tensor(&Self::bernoulli(p)?);
        }
        Ok(out)
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn sites(&self) -> usize {
        self.space.sites
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&Configuration, &Rational)> {
        self.weights.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &Configuration> {
        self.weights.keys()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, x: &Configuration) -> Rational {
        self.weights.get(x).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn mass(&self, event: impl Fn(&Configuration) -> bool) -> Rational {
        self.weights
            .iter()
            .filter(|(x, _)| event(x))
            .map(|(_, w)| w)
            .sum()
    }

    /// Image measure under `f`; `f` returning `None` on a support point is an input error.
    pub fn pushforward(
        &self,
        target: Space,
        f: impl Fn(&Configuration) -> Option<Configuration>,
    ) -> Result<FiniteMeasure> {
        let mut weights: BTreeMap<Configuration, Rational> = BTreeMap::new();
        for (x, w) in &self.weights {
            let y = f(x).ok_or_else(|| Error::Input(format!("map undefined on support point {x:?}")))?;
            if !target.contains(&y) {
                return input(format!("image {y:?} of {x:?} lies outside the target space"));
            }
            *weights.entry(y).or_insert_with(Rational::zero) += w;
        }
        Ok(FiniteMeasure { space: target, weights })
    }

    /// Pushforward by a site relabelling: output site `i` reads input site `sites[i]`.
    pub fn marginal(&self, sites: &[usize]) -> FiniteMeasure {
        let target = Space::new(sites.len(), self.space.label_bound);
        self.pushforward(target, |x| Some(x.project(sites)))
            .expect("projection is total")
    }

    pub fn conditional(&self, event: impl Fn(&Configuration) -> bool) -> Result<FiniteMeasure> {
        let total = self.mass(&event);
        if total.is_zero() {
            return Err(Error::NullConditioning);
        }
        let weights = self
            .weights
            .iter()
            .filter(|(x, _)| event(x))
            .map(|(x, w)| (x.clone(), w / &total))
            .collect();
        Ok(FiniteMeasure { space: self.space, weights })
    }

    /// Independent product with `self` on the first sites and `other` after them.
    pub fn tensor(&self, other: &FiniteMeasure) -> FiniteMeasure {
        let space = Space::new(
            self.space.sites + other.space.sites,
            self.space.label_bound.max(other.space.label_bound),
        );
        let mut weights = BTreeMap::new();
        for (x, wx) in &self.weights {
            for (y, wy) in &other.weights {
                let mut z = x.0.clone();
                z.extend_from_slice(&y.0);
                weights.insert(Configuration(z), wx * wy);
            }
        }
        FiniteMeasure { space, weights }
    }

    /// Expected value of `f`.
    pub fn expect(&self, f: impl Fn(&Configuration) -> Rational) -> Rational {
        self.weights.iter().map(|(x, w)| w * f(x)).sum()
    }

    pub fn to_file(&self) -> MeasureFile {
        MeasureFile {
            sites: self.space.sites,
            label_bound: self.space.label_bound,
            weights: self
                .weights
                .iter()
                .map(|(x, w)| (x.key(), rational::format(w)))
                .collect(),
        }
    }

    pub fn from_file(file: &MeasureFile) -> Result<Self> {
        let space = Space::new(file.sites, file.label_bound);
        let atoms = file
            .weights
            .iter()
            .map(|(k, w)| Ok((Configuration::parse_key(k)?, rational::parse(w)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(space, atoms)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("measure serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_file(&serde_json::from_str(s)?)
    }
}

/// A block of a product measure: `measure` lives on the listed global sites.
#[derive(Clone, Debug)]
pub struct Block {
    pub measure: FiniteMeasure,
    pub sites: Vec<usize>,
}

/// Independent product of measures on disjoint site blocks covering `0..total_sites`.
pub fn product_measure(blocks: &[Block]) -> Result<FiniteMeasure> {
    let total: usize = blocks.iter().map(|b| b.sites.len()).sum();
    let mut seen = vec![false; total];
    for b in blocks {
        if b.sites.len() != b.measure.sites() {
            return input("block site list does not match its measure");
        }
        for &s in &b.sites {
            if s >= total || seen[s] {
                return input(format!("site {s} is repeated or out of range; blocks must partition the sites"));
            }
            seen[s] = true;
        }
    }
    let bound = blocks.iter().map(|b| b.measure.space.label_bound).max().unwrap_or(0);
    let space = Space::new(total, bound);
    let mut weights: BTreeMap<Configuration, Rational> = BTreeMap::new();
    weights.insert(Configuration::zeros(total), Rational::one());
    for b in blocks {
        let mut next = BTreeMap::new();
        for (x, wx) in &weights {
            for (y, wy) in &b.measure.weights {
                let mut z = x.clone();
                for (i, &s) in b.sites.iter().enumerate() {
                    z.0[s] = y.0[i];
                }
                next.insert(z, wx * wy);
            }
        }
        weights = next;
    }
    Ok(FiniteMeasure { space, weights })
}

/// JSON measure file: `{"sites": n, "label_bound": N, "weights": {"0,1": "1/2"}}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MeasureFile {
    pub sites: usize,
    pub label_bound: Label,
    pub weights: BTreeMap<String, String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn c(v: &[Label]) -> Configuration {
        Configuration(v.to_vec())
    }

    #[test]
    fn pushforward_swap_moves_point_mass() {
        let mu = FiniteMeasure::point_mass(Space::binary(2), c(&[1, 0])).unwrap();
        let swapped = mu
            .pushforward(Space::binary(2), |x| Some(c(&[x.0[1], x.0[0]])))
            .unwrap();
        assert_eq!(swapped.weight(&c(&[0, 1])), Rational::one());
    }

    #[test]
    fn pushforward_max_collapse() {
        let mu = FiniteMeasure::uniform(Space::binary(2), [c(&[1, 0]), c(&[0, 1])]).unwrap();
        let m = mu
            .pushforward(Space::binary(1), |x| Some(c(&[*x.0.iter().max().unwrap()])))
            .unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.weight(&c(&[1])), Rational::one());
    }

    #[test]
    fn pushforward_sum_of_fair_coins() {
        let mu = FiniteMeasure::bernoulli_product(&rat(1, 2), 2).unwrap();
        let s = mu
            .pushforward(Space::new(1, 2), |x| Some(c(&[x.0[0] + x.0[1]])))
            .unwrap();
        assert_eq!(s.weight(&c(&[0])), rat(1, 4));
        assert_eq!(s.weight(&c(&[1])), rat(1, 2));
        assert_eq!(s.weight(&c(&[2])), rat(1, 4));
    }

    #[test]
    fn pushforward_partial_map_is_input_error() {
        let mu = FiniteMeasure::bernoulli(&rat(1, 2)).unwrap();
        let r = mu.pushforward(Space::binary(1), |x| if x.0[0] == 0 { Some(x.clone()) } else { None });
        assert!(matches!(r, Err(Error::Input(_))));
    }

    #[test]
    fn conditional_on_first_coordinate() {
        let mu = FiniteMeasure::bernoulli_product(&rat(1, 2), 2).unwrap();
        let c1 = mu.conditional(|x| x.0[0] == 1).unwrap();
        assert_eq!(c1, FiniteMeasure::uniform(Space::binary(2), [c(&[1, 0]), c(&[1, 1])]).unwrap());
        let pm = FiniteMeasure::point_mass(Space::binary(2), c(&[1, 1])).unwrap();
        assert_eq!(pm.conditional(|x| *x == c(&[1, 1])).unwrap(), pm);
        assert!(matches!(pm.conditional(|_| false), Err(Error::NullConditioning)));
    }

    #[test]
    fn product_of_two_bernoullis() {
        let p = rat(1, 3);
        let b = FiniteMeasure::bernoulli(&p).unwrap();
        let prod = product_measure(&[
            Block { measure: b.clone(), sites: vec![0] },
            Block { measure: b.clone(), sites: vec![1] },
        ])
        .unwrap();
        let q = Rational::one() - &p;
        assert_eq!(prod.weight(&c(&[0, 0])), &q * &q);
        assert_eq!(prod.weight(&c(&[1, 0])), &p * &q);
        assert_eq!(prod.weight(&c(&[0, 1])), &q * &p);
        assert_eq!(prod.weight(&c(&[1, 1])), &p * &p);
        let single = product_measure(&[Block { measure: b.clone(), sites: vec![0] }]).unwrap();
        assert_eq!(single, b);
    }

    #[test]
    fn product_fair_coin_with_third() {
        let a = FiniteMeasure::bernoulli(&rat(1, 2)).unwrap();
        let b = FiniteMeasure::on_labels(&[rat(1, 3), rat(2, 3)]).unwrap();
        let prod = product_measure(&[
            Block { measure: a, sites: vec![0] },
            Block { measure: b, sites: vec![1] },
        ])
        .unwrap();
        assert_eq!(prod.weight(&c(&[0, 0])), rat(1, 6));
        assert_eq!(prod.weight(&c(&[0, 1])), rat(1, 3));
        assert_eq!(prod.weight(&c(&[1, 0])), rat(1, 6));
        assert_eq!(prod.weight(&c(&[1, 1])), rat(1, 3));
    }

    #[test]
    fn overlapping_blocks_rejected() {
        let b = FiniteMeasure::bernoulli(&rat(1, 2)).unwrap();
        let r = product_measure(&[
            Block { measure: b.clone(), sites: vec![0] },
            Block { measure: b, sites: vec![0] },
        ]);
        assert!(r.is_err());
    }

    #[test]
    fn construction_rejects_bad_weights() {
        let s = Space::binary(1);
        assert!(FiniteMeasure::new(s, [(c(&[0]), rat(1, 2))]).is_err());
        assert!(FiniteMeasure::new(s, [(c(&[0]), rat(0, 1)), (c(&[1]), rat(1, 1))]).is_err());
        assert!(FiniteMeasure::new(s, [(c(&[2]), rat(1, 1))]).is_err());
        assert!(FiniteMeasure::new(s, std::iter::empty()).is_err());
    }

    #[test]
    fn json_round_trip() {
        let mu = FiniteMeasure::uniform(Space::new(2, 2), [c(&[2, 0]), c(&[0, 1]), c(&[1, 1])]).unwrap();
        let back = FiniteMeasure::from_json(&mu.to_json()).unwrap();
        assert_eq!(mu, back);
        let raw = r#"{"sites": 2, "label_bound": 1, "weights": {"1,0": "1/2", "0,1": "1/2"}}"#;
        let m = FiniteMeasure::from_json(raw).unwrap();
        assert_eq!(m.weight(&c(&[1, 0])), rat(1, 2));
    }

    #[test]
    fn space_enumeration_order() {
        let all = Space::new(2, 1).configurations(100).unwrap();
        assert_eq!(all, vec![c(&[0, 0]), c(&[0, 1]), c(&[1, 0]), c(&[1, 1])]);
        assert!(Space::new(30, 1).configurations(1000).is_err());
    }
}
