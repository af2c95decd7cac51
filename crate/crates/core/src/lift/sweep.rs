use std::collections::BTreeSet;

use serde::Serialize;

use super::multilift::{multilift_domination, MultiliftEnvironment};
use super::{is_pi_lift, lift_distribution, FibreMap, LiftEnvironment, Section};
use crate::domination::dominates;
use crate::error::{Error, Result};
use crate::measure::{Configuration, FiniteMeasure, Label};
use crate::rational::{self, Rational};

#[derive(Clone, Debug, Serialize)]
pub struct LakonReport {
    pub strategies: u64,
    pub distinct_laws: u64,
    pub all_dominated: bool,
    pub failure: Option<String>,
}

/// Every deterministic strategy `S = f(X)` on every fibre shape and every
/// `p`: the lift of `Bernoulli(p)^B` is dominated by `Bernoulli(p)^A`.
pub fn lakon_sweep(shapes: &[Vec<usize>], ps: &[Rational], strategy_cap: u64) -> Result<LakonReport> {
    let mut report = LakonReport { strategies: 0, distinct_laws: 0, all_dominated: true, failure: None };
    for sizes in shapes {
        let pm = FibreMap::from_sizes(sizes)?;
        let sections = pm.sections(u128::MAX)?;
        let inputs: Vec<Configuration> =
            crate::measure::Space::binary(pm.b_count()).configurations(1 << 20)?;
        let count = (sections.len() as u128).pow(inputs.len() as u32);
        if count > strategy_cap as u128 {
            return Err(Error::Size { what: "strategies", needed: count, limit: strategy_cap as u128 });
        }
        for p in ps {
            let x = FiniteMeasure::bernoulli_product(p, pm.b_count())?;
            let rho = FiniteMeasure::bernoulli_product(p, pm.a_count())?;
            let mut seen: BTreeSet<Vec<(Configuration, Rational)>> = BTreeSet::new();
            for_each_function(inputs.len(), sections.len(), |choice| {
                report.strategies += 1;
                let table = |x: &Configuration| {
                    let i = inputs.binary_search(x).expect("input listed");
                    sections[choice[i]].clone()
                };
                let env = LiftEnvironment::deterministic(&pm, &x, table)?;
                let law = lift_distribution(&env, &pm)?;
                let key: Vec<_> = law.atoms().map(|(c, w)| (c.clone(), w.clone())).collect();
                if !seen.insert(key) {
                    return Ok(());
                }
                report.distinct_laws += 1;
                if !is_pi_lift(&law, &pm) || !dominates(&law, &rho)?.holds() {
                    report.all_dominated = false;
                    report.failure.get_or_insert_with(|| {
                        format!("fibres {sizes:?}, p = {}, strategy {choice:?}", rational::format(p))
                    });
                }
                Ok(())
            })?;
        }
    }
    Ok(report)
}

/// Calls `f` on every map `0..inputs → 0..outputs`, as a vector of images.
fn for_each_function(inputs: usize, outputs: usize, mut f: impl FnMut(&[usize]) -> Result<()>) -> Result<()> {
    let mut choice = vec![0usize; inputs];
    loop {
        f(&choice)?;
        let mut i = inputs;
        loop {
            if i == 0 {
                return Ok(());
            }
            i -= 1;
            choice[i] += 1;
            if choice[i] < outputs {
                break;
            }
            choice[i] = 0;
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MultiliftSweepReport {
    pub constant_pairs: u64,
    pub adaptive_strategies: u64,
    pub all_ok: bool,
    pub failure: Option<String>,
}

/// Multilift checks over every constant pair of distinct sections and,
/// for one-column shapes, every pair chosen as a function of `(X, X†)`.
pub fn multilift_sweep(shapes: &[Vec<usize>], ps: &[Rational]) -> Result<MultiliftSweepReport> {
    let mut report = MultiliftSweepReport { constant_pairs: 0, adaptive_strategies: 0, all_ok: true, failure: None };
    for sizes in shapes {
        let pm = FibreMap::from_sizes(sizes)?;
        let sections = pm.sections(u128::MAX)?;
        let pairs: Vec<(Section, Section)> = sections
            .iter()
            .flat_map(|s| sections.iter().map(move |t| (s.clone(), t.clone())))
            .filter(|(s, t)| s.0.iter().zip(&t.0).all(|(a, b)| a != b))
            .collect();
        for p in ps {
            let record = |label: String, env: MultiliftEnvironment, report: &mut MultiliftSweepReport| -> Result<()> {
                let r = multilift_domination(&env, &pm, p)?;
                if !(r.dominated && r.decoded_ok) {
                    report.all_ok = false;
                    report.failure.get_or_insert_with(|| {
                        format!("fibres {sizes:?}, p = {}, {label}: {:?}", rational::format(p), r.failures)
                    });
                }
                Ok(())
            };
            for (s, t) in &pairs {
                report.constant_pairs += 1;
                let env = MultiliftEnvironment::deterministic(pm.b_count(), p, |_, _| (s.clone(), t.clone()))?;
                record(format!("pair {:?}/{:?}", s.0, t.0), env, &mut report)?;
            }
            if pm.b_count() == 1 {
                for_each_function(4, pairs.len(), |choice| {
                    report.adaptive_strategies += 1;
                    let strategy = |x: &[Label], xd: &[Label]| pairs[choice[(2 * x[0] + xd[0]) as usize]].clone();
                    let env = MultiliftEnvironment::deterministic(1, p, strategy)?;
                    record(format!("adaptive {choice:?}"), env, &mut report)
                })?;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn small_lakon_sweep() {
        let r = lakon_sweep(&[vec![2], vec![1, 2]], &[rat(1, 2)], 1 << 20).unwrap();
        assert!(r.all_dominated, "{r:?}");
        assert_eq!(r.strategies, 4 + 16);
    }

    #[test]
    fn small_multilift_sweep() {
        let r = multilift_sweep(&[vec![2]], &[rat(1, 2)]).unwrap();
        assert!(r.all_ok, "{r:?}");
        assert_eq!(r.constant_pairs, 2);
    }
}
