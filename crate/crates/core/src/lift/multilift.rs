use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::Serialize;

use super::{FibreMap, Section};
use crate::domination::{dominates, Domination};
use crate::error::{input, Error, Result};
use crate::measure::{product_measure, Block, Configuration, FiniteMeasure, Label, Space};
use crate::rational::{self, Rational};

/// Joint law of the strong bits `X`, weak bits `X†` and two random sections.
#[derive(Clone, Debug)]
pub struct MultiliftEnvironment {
    pub atoms: Vec<MultiliftAtom>,
}

#[derive(Clone, Debug)]
pub struct MultiliftAtom {
    pub x: Vec<Label>,
    pub x_dagger: Vec<Label>,
    pub s: Section,
    pub s_dagger: Section,
    pub weight: Rational,
}

impl MultiliftEnvironment {
    /// Independent Bernoulli(p) bits with `(S, S†) = strategy(X, X†)`.
    pub fn deterministic(
        b_count: usize,
        p: &Rational,
        strategy: impl Fn(&[Label], &[Label]) -> (Section, Section),
    ) -> Result<Self> {
        let bits = FiniteMeasure::bernoulli_product(p, 2 * b_count)?;
        let atoms = bits
            .atoms()
            .map(|(xx, w)| {
                let (x, xd) = xx.0.split_at(b_count);
                let (s, s_dagger) = strategy(x, xd);
                MultiliftAtom { x: x.to_vec(), x_dagger: xd.to_vec(), s, s_dagger, weight: w.clone() }
            })
            .collect();
        Ok(MultiliftEnvironment { atoms })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MultiliftReport {
    /// The lifted law on ordered pairs is dominated by the encoded target.
    pub dominated: bool,
    /// The three decoded implications hold on the whole coupling support.
    pub decoded_ok: bool,
    pub pair_sites: usize,
    pub coupling_atoms: usize,
    pub failures: Vec<String>,
}

/// Ordered pairs of distinct sites in a common fibre, grouped by column.
fn pair_sites(pm: &FibreMap) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for b in 0..pm.b_count() {
        for &a1 in pm.fibre(b) {
            for &a2 in pm.fibre(b) {
                if a1 != a2 {
                    out.push((a1, a2));
                }
            }
        }
    }
    out
}

/// Runs the pair construction: encodes `2X + X†` as a lift on ordered
/// pairs, checks domination by the encoded Bernoulli target, and decodes
/// the resulting coupling back to conditions on `Z`.
pub fn multilift_domination(env: &MultiliftEnvironment, pm: &FibreMap, p: &Rational) -> Result<MultiliftReport> {
    if pm.label_width() != 1 {
        return input("multilift needs width-one labels");
    }
    let k = pm.b_count();
    check_bits(env, k, p)?;
    let pairs = pair_sites(pm);
    let index: BTreeMap<(usize, usize), usize> = pairs.iter().enumerate().map(|(i, &q)| (q, i)).collect();

    let mut atoms = Vec::new();
    for atom in &env.atoms {
        let mut y = vec![0; pairs.len()];
        for b in 0..k {
            let (s, sd) = (atom.s.0[b], atom.s_dagger.0[b]);
            if s == sd {
                return Err(Error::Precondition(format!("S and S† agree at {b} with positive probability")));
            }
            if pm.pi()[s] != b || pm.pi()[sd] != b {
                return input(format!("sections leave the fibre of {b}"));
            }
            y[index[&(s, sd)]] = 2 * atom.x[b] + atom.x_dagger[b];
        }
        atoms.push((Configuration(y), atom.weight.clone()));
    }
    let space = Space::new(pairs.len(), 3);
    let lifted = FiniteMeasure::new(space, atoms)?;

    let mut blocks = Vec::new();
    for b in 0..k {
        let fibre = pm.fibre(b);
        let local: Vec<usize> = (0..pairs.len()).filter(|&i| pm.pi()[pairs[i].0] == b).collect();
        let base = FiniteMeasure::bernoulli_product(p, fibre.len())?;
        let pos = |a: usize| fibre.iter().position(|&f| f == a).expect("fibre member");
        let encoded = base.pushforward(Space::new(local.len(), 3), |z| {
            Some(Configuration(
                local.iter().map(|&i| 2 * z.0[pos(pairs[i].0)] + z.0[pos(pairs[i].1)]).collect(),
            ))
        })?;
        blocks.push(Block { measure: encoded, sites: local });
    }
    let target = product_measure(&blocks)?;

    let coupling = match dominates(&lifted, &target)? {
        Domination::Dominated(c) => c,
        Domination::NotDominated(u) => {
            return Ok(MultiliftReport {
                dominated: false,
                decoded_ok: false,
                pair_sites: pairs.len(),
                coupling_atoms: 0,
                failures: vec![format!("violating up-set generated by {:?}", u.generators)],
            })
        }
    };

    let mut failures = Vec::new();
    for ((y, w), _) in coupling.atoms() {
        let z = match decode(w, &pairs, pm.a_count()) {
            Some(z) => z,
            None => {
                failures.push(format!("target atom {w:?} does not decode to site bits"));
                continue;
            }
        };
        for (i, &v) in y.0.iter().enumerate() {
            let (a1, a2) = pairs[i];
            let ok = match v {
                0 => true,
                2 => z[a1] == 1,
                3 => z[a1] == 1 && z[a2] == 1,
                1 => z[a1] == 1 || z[a2] == 1,
                _ => false,
            };
            if !ok {
                failures.push(format!("value {v} at pair ({a1}, {a2}) with Z = {z:?}"));
            }
        }
    }
    Ok(MultiliftReport {
        dominated: true,
        decoded_ok: failures.is_empty(),
        pair_sites: pairs.len(),
        coupling_atoms: coupling.len(),
        failures,
    })
}

fn check_bits(env: &MultiliftEnvironment, k: usize, p: &Rational) -> Result<()> {
    let mut law: BTreeMap<Configuration, Rational> = BTreeMap::new();
    for a in &env.atoms {
        if a.x.len() != k || a.x_dagger.len() != k || a.s.0.len() != k || a.s_dagger.0.len() != k {
            return input("environment atom has the wrong length");
        }
        let mut bits = a.x.clone();
        bits.extend_from_slice(&a.x_dagger);
        *law.entry(Configuration(bits)).or_insert_with(Rational::zero) += &a.weight;
    }
    let expected = FiniteMeasure::bernoulli_product(p, 2 * k)?;
    let law = FiniteMeasure::new(Space::binary(2 * k), law)?;
    if law != expected {
        return Err(Error::Precondition("X and X† are not independent Bernoulli(p) families".into()));
    }
    Ok(())
}

/// Reads `Z_a = W_{(a, ·)} div 2`, checking that every pair agrees.
fn decode(w: &Configuration, pairs: &[(usize, usize)], a_count: usize) -> Option<Vec<Label>> {
    let mut z: Vec<Option<Label>> = vec![None; a_count];
    for (i, &(a1, a2)) in pairs.iter().enumerate() {
        let v = w.0[i];
        for (a, bit) in [(a1, v / 2), (a2, v % 2)] {
            match z[a] {
                None => z[a] = Some(bit),
                Some(b) if b != bit => return None,
                _ => {}
            }
        }
    }
    Some(z.into_iter().map(|b| b.unwrap_or(0)).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct StrengthenedReport {
    pub p: String,
    pub site_marginal: String,
    pub expected_marginal: String,
    pub dominated: bool,
}

/// The stronger lifting rule `Y_S = X`, `Y_{S†} = X†` with `B = {o}`,
/// `A = {0, 1}` and `(S, S†) = (0, 1)` when `X = 1`, `(1, 0)` otherwise.
pub fn strengthened_counterexample(p: &Rational) -> Result<StrengthenedReport> {
    let bits = FiniteMeasure::bernoulli_product(p, 2)?;
    let law = bits.pushforward(Space::binary(2), |xx| {
        let (x, xd) = (xx.0[0], xx.0[1]);
        let (s, sd) = if x == 1 { (0, 1) } else { (1, 0) };
        let mut y = vec![0; 2];
        y[s] = x;
        y[sd] = xd;
        Some(Configuration(y))
    })?;
    let target = FiniteMeasure::bernoulli_product(p, 2)?;
    let marginal = law.mass(|y| y.0[0] == 1);
    let q = Rational::one() - p;
    let expected = Rational::one() - &q * &q;
    Ok(StrengthenedReport {
        p: rational::format(p),
        site_marginal: rational::format(&marginal),
        expected_marginal: rational::format(&expected),
        dominated: dominates(&law, &target)?.holds(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn constant_pair_strategy_decodes() {
        let pm = FibreMap::uniform(1, 2).unwrap();
        let env = MultiliftEnvironment::deterministic(1, &rat(1, 2), |_, _| {
            (Section(vec![0]), Section(vec![1]))
        })
        .unwrap();
        let r = multilift_domination(&env, &pm, &rat(1, 2)).unwrap();
        assert!(r.dominated && r.decoded_ok, "{r:?}");
    }

    #[test]
    fn equal_sections_rejected() {
        let pm = FibreMap::uniform(1, 2).unwrap();
        let env = MultiliftEnvironment::deterministic(1, &rat(1, 2), |_, _| {
            (Section(vec![0]), Section(vec![0]))
        })
        .unwrap();
        assert!(matches!(multilift_domination(&env, &pm, &rat(1, 2)), Err(Error::Precondition(_))));
    }

    #[test]
    fn zero_parameter_is_trivial() {
        let pm = FibreMap::uniform(1, 3).unwrap();
        let env = MultiliftEnvironment::deterministic(1, &rat(0, 1), |_, _| {
            (Section(vec![2]), Section(vec![0]))
        })
        .unwrap();
        let r = multilift_domination(&env, &pm, &rat(0, 1)).unwrap();
        assert!(r.dominated && r.decoded_ok);
    }

    #[test]
    fn strengthened_rule_fails() {
        let r = strengthened_counterexample(&rat(1, 2)).unwrap();
        assert_eq!(r.site_marginal, "3/4");
        assert_eq!(r.site_marginal, r.expected_marginal);
        assert!(!r.dominated);
    }
}
