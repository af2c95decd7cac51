//! Couplings of two finite measures, monotonicity checks, and the two
//! surgery operations that glue couplings together.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::measure::{Configuration, FiniteMeasure, Label, Space};
use crate::rational::{self, Rational};

/// A probability measure on pairs `(x, y)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coupling {
    left: Space,
    right: Space,
    weights: BTreeMap<(Configuration, Configuration), Rational>,
}

impl Coupling {
    pub fn new(
        left: Space,
        right: Space,
        atoms: impl IntoIterator<Item = ((Configuration, Configuration), Rational)>,
    ) -> Result<Self> {
        let mut weights: BTreeMap<(Configuration, Configuration), Rational> = BTreeMap::new();
        for ((x, y), w) in atoms {
            if w.is_negative() {
                return input("coupling atom with negative weight");
            }
            if w.is_zero() {
                continue;
            }
            if !left.contains(&x) || !right.contains(&y) {
                return input(format!("coupling atom ({x:?}, {y:?}) outside its spaces"));
            }
            *weights.entry((x, y)).or_insert_with(Rational::zero) += w;
        }
        let total: Rational = weights.values().sum();
        if weights.is_empty() || !total.is_one() {
            return input(format!("coupling mass is {}, not 1", rational::format(&total)));
        }
        Ok(Coupling { left, right, weights })
    }

    /// The coupling concentrated on the diagonal.
    pub fn diagonal(mu: &FiniteMeasure) -> Coupling {
        Coupling {
            left: mu.space(),
            right: mu.space(),
            weights: mu.atoms().map(|(x, w)| ((x.clone(), x.clone()), w.clone())).collect(),
        }
    }

    /// The independent coupling.
    pub fn product(mu: &FiniteMeasure, rho: &FiniteMeasure) -> Coupling {
        let mut weights = BTreeMap::new();
        for (x, wx) in mu.atoms() {
            for (y, wy) in rho.atoms() {
                weights.insert((x.clone(), y.clone()), wx * wy);
            }
        }
        Coupling { left: mu.space(), right: rho.space(), weights }
    }

    pub fn left_space(&self) -> Space {
        self.left
    }

    pub fn right_space(&self) -> Space {
        self.right
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&(Configuration, Configuration), &Rational)> {
        self.weights.iter()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn left_marginal(&self) -> FiniteMeasure {
        let atoms = self.weights.iter().map(|((x, _), w)| (x.clone(), w.clone()));
        FiniteMeasure::new(self.left, atoms).expect("coupling marginal is a probability measure")
    }

    pub fn right_marginal(&self) -> FiniteMeasure {
        let atoms = self.weights.iter().map(|((_, y), w)| (y.clone(), w.clone()));
        FiniteMeasure::new(self.right, atoms).expect("coupling marginal is a probability measure")
    }

    /// Every support pair satisfies `x <= y`.
    pub fn is_ordered(&self) -> bool {
        self.weights.keys().all(|(x, y)| x.below(y))
    }

    /// Image under `(h1, h2)`.
    pub fn pushforward(
        &self,
        left: Space,
        right: Space,
        h1: impl Fn(&Configuration) -> Configuration,
        h2: impl Fn(&Configuration) -> Configuration,
    ) -> Result<Coupling> {
        Coupling::new(
            left,
            right,
            self.weights.iter().map(|((x, y), w)| ((h1(x), h2(y)), w.clone())),
        )
    }

    pub fn to_file(&self) -> CouplingFile {
        CouplingFile {
            sites: self.left.sites,
            label_bound: self.left.label_bound,
            right_sites: (self.right.sites != self.left.sites).then_some(self.right.sites),
            right_label_bound: (self.right.label_bound != self.left.label_bound)
                .then_some(self.right.label_bound),
            weights: self
                .weights
                .iter()
                .map(|((x, y), w)| (format!("{}|{}", x.key(), y.key()), rational::format(w)))
                .collect(),
        }
    }

    pub fn from_file(file: &CouplingFile) -> Result<Coupling> {
        let left = Space::new(file.sites, file.label_bound);
        let right = Space::new(
            file.right_sites.unwrap_or(file.sites),
            file.right_label_bound.unwrap_or(file.label_bound),
        );
        let atoms = file
            .weights
            .iter()
            .map(|(k, w)| {
                let (x, y) = k
                    .split_once('|')
                    .ok_or_else(|| Error::Input(format!("coupling key {k:?} lacks '|'")))?;
                Ok((
                    (Configuration::parse_key(x)?, Configuration::parse_key(y)?),
                    rational::parse(w)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Coupling::new(left, right, atoms)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("coupling serializes")
    }

    pub fn from_json(s: &str) -> Result<Coupling> {
        Coupling::from_file(&serde_json::from_str(s)?)
    }
}

/// JSON coupling file: keys are `"x|y"` with comma-separated labels.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CouplingFile {
    pub sites: usize,
    pub label_bound: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right_sites: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right_label_bound: Option<Label>,
    pub weights: BTreeMap<String, String>,
}

/// Marginals equal `mu` and `rho` exactly and the support lies in `{x <= y}`.
pub fn is_monotone_coupling(c: &Coupling, mu: &FiniteMeasure, rho: &FiniteMeasure) -> bool {
    c.left.sites == mu.sites()
        && c.right.sites == rho.sites()
        && c.is_ordered()
        && same_weights(&c.left_marginal(), mu)
        && same_weights(&c.right_marginal(), rho)
}

fn same_weights(a: &FiniteMeasure, b: &FiniteMeasure) -> bool {
    a.len() == b.len() && a.atoms().zip(b.atoms()).all(|(p, q)| p == q)
}

/// Lifts a coupling `eta` of `h1#nu1` and `h2#nu2` to a coupling of `nu1`
/// and `nu2` whose image under `(h1, h2)` is `eta`: each pair `(u, v)` of
/// `eta` is replaced by the product of `nu1 | h1 = u` and `nu2 | h2 = v`.
pub fn extend_coupling(
    nu1: &FiniteMeasure,
    nu2: &FiniteMeasure,
    h1: impl Fn(&Configuration) -> Configuration,
    h2: impl Fn(&Configuration) -> Configuration,
    eta: &Coupling,
) -> Result<Coupling> {
    let fibres1 = fibres_of(nu1, &h1);
    let fibres2 = fibres_of(nu2, &h2);
    check_marginal(&fibres1, &eta.left_marginal(), "first")?;
    check_marginal(&fibres2, &eta.right_marginal(), "second")?;
    let mut weights: BTreeMap<(Configuration, Configuration), Rational> = BTreeMap::new();
    for ((u, v), w) in &eta.weights {
        let (m1, atoms1) = &fibres1[u];
        let (m2, atoms2) = &fibres2[v];
        let scale = w / (m1 * m2);
        for (x, wx) in atoms1 {
            for (y, wy) in atoms2 {
                *weights.entry((x.clone(), y.clone())).or_insert_with(Rational::zero) +=
                    &scale * wx * wy;
            }
        }
    }
    Ok(Coupling { left: nu1.space(), right: nu2.space(), weights })
}

type Fibres = BTreeMap<Configuration, (Rational, Vec<(Configuration, Rational)>)>;

fn fibres_of(nu: &FiniteMeasure, h: &impl Fn(&Configuration) -> Configuration) -> Fibres {
    let mut out: Fibres = BTreeMap::new();
    for (x, w) in nu.atoms() {
        let e = out.entry(h(x)).or_insert_with(|| (Rational::zero(), Vec::new()));
        e.0 += w;
        e.1.push((x.clone(), w.clone()));
    }
    out
}

fn check_marginal(fibres: &Fibres, marginal: &FiniteMeasure, side: &str) -> Result<()> {
    let matches = fibres.len() == marginal.len()
        && marginal.atoms().all(|(u, w)| fibres.get(u).is_some_and(|(m, _)| m == w));
    if matches {
        Ok(())
    } else {
        input(format!("{side} marginal of the coupling differs from the pushforward"))
    }
}

/// Convex combination `sum_d p_d * c_d`.
pub fn integrate_couplings(parts: &[(Rational, Coupling)]) -> Result<Coupling> {
    let (_, first) = parts.first().ok_or_else(|| Error::Input("no couplings to integrate".into()))?;
    let total: Rational = parts.iter().map(|(p, _)| p).sum();
    if !total.is_one() {
        return input(format!("mixture weights sum to {}, not 1", rational::format(&total)));
    }
    let mut weights: BTreeMap<(Configuration, Configuration), Rational> = BTreeMap::new();
    for (p, c) in parts {
        if p.is_negative() {
            return input("negative mixture weight");
        }
        if c.left.sites != first.left.sites || c.right.sites != first.right.sites {
            return input("couplings live on different spaces");
        }
        for (k, w) in &c.weights {
            *weights.entry(k.clone()).or_insert_with(Rational::zero) += p * w;
        }
    }
    weights.retain(|_, w| !w.is_zero());
    let left = Space::new(
        first.left.sites,
        parts.iter().map(|(_, c)| c.left.label_bound).max().unwrap_or(0),
    );
    let right = Space::new(
        first.right.sites,
        parts.iter().map(|(_, c)| c.right.label_bound).max().unwrap_or(0),
    );
    Ok(Coupling { left, right, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn c(v: &[Label]) -> Configuration {
        Configuration(v.to_vec())
    }

    #[test]
    fn identity_extension_returns_eta() {
        let mu = FiniteMeasure::bernoulli_product(&rat(1, 3), 2).unwrap();
        let eta = Coupling::diagonal(&mu);
        let ext = extend_coupling(&mu, &mu, |x| x.clone(), |x| x.clone(), &eta).unwrap();
        assert_eq!(ext, eta);
    }

    #[test]
    fn extension_through_max() {
        let nu1 = FiniteMeasure::bernoulli_product(&rat(1, 2), 2).unwrap();
        let nu2 = FiniteMeasure::bernoulli(&rat(3, 4)).unwrap();
        let eta = Coupling::diagonal(&nu2);
        let max = |x: &Configuration| c(&[*x.0.iter().max().unwrap()]);
        let ext = extend_coupling(&nu1, &nu2, max, |y| y.clone(), &eta).unwrap();
        assert!(same_weights(&ext.left_marginal(), &nu1));
        assert!(same_weights(&ext.right_marginal(), &nu2));
        let image = ext
            .pushforward(Space::binary(1), Space::binary(1), max, |y| y.clone())
            .unwrap();
        assert_eq!(image, eta);
    }

    #[test]
    fn extension_rejects_wrong_marginal() {
        let nu = FiniteMeasure::bernoulli(&rat(1, 2)).unwrap();
        let other = FiniteMeasure::bernoulli(&rat(1, 3)).unwrap();
        let eta = Coupling::diagonal(&other);
        let r = extend_coupling(&nu, &nu, |x| x.clone(), |x| x.clone(), &eta);
        assert!(matches!(r, Err(Error::Input(_))));
    }

    #[test]
    fn mixtures() {
        let a = FiniteMeasure::bernoulli(&rat(1, 2)).unwrap();
        let b = FiniteMeasure::bernoulli(&rat(1, 4)).unwrap();
        let ca = Coupling::diagonal(&a);
        let cb = Coupling::diagonal(&b);
        assert_eq!(integrate_couplings(&[(rat(1, 1), ca.clone())]).unwrap(), ca);
        let mix = integrate_couplings(&[(rat(1, 2), ca.clone()), (rat(1, 2), cb.clone())]).unwrap();
        assert!(mix.is_ordered());
        assert_eq!(mix.weights[&(c(&[1]), c(&[1]))], rat(3, 8));
        assert!(integrate_couplings(&[(rat(1, 2), ca)]).is_err());
    }

    #[test]
    fn monotone_predicate() {
        let mu = FiniteMeasure::bernoulli(&rat(1, 2)).unwrap();
        assert!(is_monotone_coupling(&Coupling::diagonal(&mu), &mu, &mu));
        let rho = FiniteMeasure::bernoulli(&rat(3, 4)).unwrap();
        assert!(!is_monotone_coupling(&Coupling::product(&mu, &rho), &mu, &rho));
    }

    #[test]
    fn json_round_trip() {
        let mu = FiniteMeasure::bernoulli_product(&rat(2, 5), 2).unwrap();
        let cp = Coupling::diagonal(&mu);
        assert_eq!(Coupling::from_json(&cp.to_json()).unwrap(), cp);
    }
}
