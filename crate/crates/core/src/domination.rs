//! Deciding `mu ≼ rho` by max-flow, with a certificate either way.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};

use crate::coupling::Coupling;
use crate::error::{input, Result};
use crate::flow::{Capacity, FlowNetwork};
use crate::measure::{Configuration, FiniteMeasure, Space};
use crate::rational::{self, Rational};

/// The up-closure of a set of generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpSet {
    pub space: Space,
    pub generators: Vec<Configuration>,
}

impl UpSet {
    pub fn new(space: Space, generators: impl IntoIterator<Item = Configuration>) -> Self {
        let all: BTreeSet<Configuration> = generators.into_iter().collect();
        let minimal = all
            .iter()
            .filter(|g| !all.iter().any(|h| h != *g && h.below(g)))
            .cloned()
            .collect();
        UpSet { space, generators: minimal }
    }

    pub fn contains(&self, x: &Configuration) -> bool {
        self.generators.iter().any(|g| g.below(x))
    }

    pub fn measure(&self, mu: &FiniteMeasure) -> Rational {
        mu.mass(|x| self.contains(x))
    }

    /// Membership table in [`Space::configurations`] order.
    pub fn table(&self, cap: u128) -> Result<Vec<bool>> {
        Ok(self.space.configurations(cap)?.iter().map(|x| self.contains(x)).collect())
    }

    /// Parses a membership table, rejecting sets that are not upward closed.
    pub fn from_table(space: Space, table: &[bool], cap: u128) -> Result<UpSet> {
        let all = space.configurations(cap)?;
        if all.len() != table.len() {
            return input("membership table has the wrong length");
        }
        let members: Vec<&Configuration> =
            all.iter().zip(table).filter(|(_, &t)| t).map(|(x, _)| x).collect();
        for (y, &t) in all.iter().zip(table) {
            if !t && members.iter().any(|x| x.below(y)) {
                return input(format!("table is not upward closed at {y:?}"));
            }
        }
        Ok(UpSet::new(space, members.into_iter().cloned()))
    }
}

#[derive(Clone, Debug)]
pub enum Domination {
    /// A coupling supported on `{x <= y}` with the two marginals.
    Dominated(Coupling),
    /// An up-set with `mu(U) > rho(U)`.
    NotDominated(UpSet),
}

impl Domination {
    pub fn holds(&self) -> bool {
        matches!(self, Domination::Dominated(_))
    }

    pub fn coupling(self) -> Option<Coupling> {
        match self {
            Domination::Dominated(c) => Some(c),
            Domination::NotDominated(_) => None,
        }
    }

    pub fn violator(&self) -> Option<&UpSet> {
        match self {
            Domination::Dominated(_) => None,
            Domination::NotDominated(u) => Some(u),
        }
    }
}

/// Decides whether `mu` is stochastically dominated by `rho` under the
/// product order.
pub fn dominates(mu: &FiniteMeasure, rho: &FiniteMeasure) -> Result<Domination> {
    if mu.sites() != rho.sites() {
        return input(format!(
            "cannot compare measures on {} and {} sites",
            mu.sites(),
            rho.sites()
        ));
    }
    let left: Vec<(&Configuration, &Rational)> = mu.atoms().collect();
    let right: Vec<(&Configuration, &Rational)> = rho.atoms().collect();
    let lcm = left
        .iter()
        .chain(&right)
        .fold(BigInt::one(), |acc, (_, w)| acc.lcm(w.denom()));
    let scale = |w: &Rational| -> BigInt { (w * Rational::from_integer(lcm.clone())).to_integer() };
    let lcm_bits = lcm.bits();
    let small = lcm_bits < 120 && lcm.to_i128().is_some();
    let space = Space::new(mu.sites(), mu.space().label_bound.max(rho.space().label_bound));
    if small {
        let conv = |b: BigInt| b.to_i128().expect("fits");
        solve(&left, &right, conv(lcm.clone()), |w| conv(scale(w)), |f: i128| {
            Rational::new(f.into(), lcm.clone())
        }, mu, rho, space)
    } else {
        solve(&left, &right, lcm.clone(), scale, |f: BigInt| Rational::new(f, lcm.clone()), mu, rho, space)
    }
}

#[allow(clippy::too_many_arguments)]
fn solve<C: Capacity>(
    left: &[(&Configuration, &Rational)],
    right: &[(&Configuration, &Rational)],
    total: C,
    scale: impl Fn(&Rational) -> C,
    unscale: impl Fn(C) -> Rational,
    mu: &FiniteMeasure,
    rho: &FiniteMeasure,
    space: Space,
) -> Result<Domination> {
    let (n, m) = (left.len(), right.len());
    let source = n + m;
    let sink = source + 1;
    let mut net = FlowNetwork::new(n + m + 2);
    for (i, (_, w)) in left.iter().enumerate() {
        net.add_arc(source, i, scale(w));
    }
    for (j, (_, w)) in right.iter().enumerate() {
        net.add_arc(n + j, sink, scale(w));
    }
    let mut middle = Vec::new();
    for (i, (x, _)) in left.iter().enumerate() {
        for (j, (y, _)) in right.iter().enumerate() {
            if x.below(y) {
                middle.push((i, j, net.add_arc(i, n + j, total.clone())));
            }
        }
    }
    let value = net.max_flow(source, sink);
    if value == total {
        let atoms = middle.iter().filter_map(|&(i, j, id)| {
            let f = net.flow(id);
            (!f.is_zero()).then(|| ((left[i].0.clone(), right[j].0.clone()), unscale(f)))
        });
        return Ok(Domination::Dominated(Coupling::new(mu.space(), rho.space(), atoms)?));
    }
    let reach = net.residual_reachable(source);
    let generators = left
        .iter()
        .enumerate()
        .filter(|(i, _)| reach[*i])
        .map(|(_, (x, _))| (*x).clone());
    let violator = UpSet::new(space, generators);
    if violator.measure(mu) <= violator.measure(rho) {
        return Err(crate::error::Error::Internal(format!(
            "min cut gave a non-violating up-set ({} vs {})",
            rational::format(&violator.measure(mu)),
            rational::format(&violator.measure(rho))
        )));
    }
    Ok(Domination::NotDominated(violator))
}

/// `true` iff `mu ≼ rho`.
pub fn is_dominated(mu: &FiniteMeasure, rho: &FiniteMeasure) -> Result<bool> {
    Ok(dominates(mu, rho)?.holds())
}

/// One-site laws compared through their tail functions.
pub fn dominates_1d(mu: &FiniteMeasure, rho: &FiniteMeasure) -> Result<bool> {
    if mu.sites() != 1 || rho.sites() != 1 {
        return input("one-dimensional comparison needs one-site measures");
    }
    let bound = mu.space().label_bound.max(rho.space().label_bound);
    for v in 1..=bound {
        let a = mu.mass(|x| x.0[0] >= v);
        let b = rho.mass(|x| x.0[0] >= v);
        if a > b {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::is_monotone_coupling;
    use crate::rational::rat;

    fn c(v: &[u8]) -> Configuration {
        Configuration(v.to_vec())
    }

    #[test]
    fn reflexive_pair_is_dominated() {
        let mu = FiniteMeasure::bernoulli_product(&rat(1, 3), 2).unwrap();
        let d = dominates(&mu, &mu).unwrap();
        let cp = d.coupling().unwrap();
        assert!(is_monotone_coupling(&cp, &mu, &mu));
    }

    #[test]
    fn two_point_counterexample() {
        let s = Space::binary(2);
        let mu = FiniteMeasure::uniform(s, [c(&[1, 0]), c(&[0, 1])]).unwrap();
        let rho = FiniteMeasure::uniform(s, [c(&[1, 1]), c(&[0, 0])]).unwrap();
        let d = dominates(&mu, &rho).unwrap();
        let u = d.violator().unwrap();
        assert_eq!(u.measure(&mu), rat(1, 1));
        assert_eq!(u.measure(&rho), rat(1, 2));
        assert_eq!(u.generators, vec![c(&[0, 1]), c(&[1, 0])]);
    }

    #[test]
    fn mismatched_sites_rejected() {
        let a = FiniteMeasure::bernoulli(&rat(1, 2)).unwrap();
        let b = FiniteMeasure::bernoulli_product(&rat(1, 2), 2).unwrap();
        assert!(dominates(&a, &b).is_err());
    }

    #[test]
    fn table_round_trip() {
        let s = Space::binary(2);
        let u = UpSet::new(s, [c(&[1, 0])]);
        let t = u.table(16).unwrap();
        assert_eq!(t, vec![false, false, true, true]);
        assert_eq!(UpSet::from_table(s, &t, 16).unwrap(), u);
        assert!(UpSet::from_table(s, &[true, false, false, false], 16).is_err());
    }

    #[test]
    fn one_dimensional() {
        let a = FiniteMeasure::bernoulli(&rat(1, 3)).unwrap();
        let b = FiniteMeasure::bernoulli(&rat(1, 2)).unwrap();
        assert!(dominates_1d(&a, &b).unwrap());
        assert!(!dominates_1d(&b, &a).unwrap());
    }
}
