use std::collections::BTreeMap;

use num_traits::Zero;

use super::one_column::one_column_coupling;
use super::{check_assumption_a, check_assumption_b, flatten_column, is_pi_lift, FibreMap};
use crate::coupling::{extend_coupling, integrate_couplings, is_monotone_coupling, Coupling};
use crate::domination::dominates;
use crate::error::{input, Error, Result};
use crate::measure::{Configuration, FiniteMeasure, Space};
use crate::rational::Rational;

/// Builds a monotone coupling of the lift `mu` with `rho`, starting from the
/// fully flattened measure and restoring one column at a time.
pub fn build_main_coupling(mu: &FiniteMeasure, rho: &FiniteMeasure, pm: &FibreMap) -> Result<Coupling> {
    if pm.label_width() != 1 {
        return input("the column construction needs totally ordered labels");
    }
    if !is_pi_lift(mu, pm) {
        return Err(Error::Precondition("mu is not a pi-lift".into()));
    }
    let a = check_assumption_a(rho, pm)?;
    if !a.holds {
        return Err(Error::Assumption { name: "A", witness: a.witness.unwrap_or_default() });
    }
    let b = check_assumption_b(mu, rho, pm)?;
    if !b.holds {
        return Err(Error::Assumption { name: "B", witness: b.witness.unwrap_or_default() });
    }

    let k = pm.b_count();
    let mut mus = vec![mu.clone(); k + 1];
    for n in (0..k).rev() {
        mus[n] = flatten_column(&mus[n + 1], pm, n)?;
    }
    let mut eta = dominates(&mus[0], rho)?
        .coupling()
        .ok_or_else(|| Error::Internal("flattened measure not dominated despite assumption B".into()))?;
    for n in 0..k {
        if pm.fibre(n).len() > 1 {
            eta = unflatten_step(&mus[n + 1], rho, pm, n, &eta)?;
        }
    }
    if !is_monotone_coupling(&eta, mu, rho) {
        return Err(Error::Internal("column construction produced a non-monotone coupling".into()));
    }
    Ok(eta)
}

/// From a monotone coupling of `f_n # next` with `rho`, a monotone coupling of `next` with `rho`.
fn unflatten_step(
    next: &FiniteMeasure,
    rho: &FiniteMeasure,
    pm: &FibreMap,
    n: usize,
    eta: &Coupling,
) -> Result<Coupling> {
    let flatten = |y: &Configuration| pm.flatten_config(y, n).expect("lift configurations flatten");
    let gamma = extend_coupling(next, rho, flatten, |z| z.clone(), eta)?;

    let column = pm.column_coords(n);
    let outside = pm.outside_coords(n);
    let s_pos = pm
        .fibre(n)
        .iter()
        .position(|&a| a == pm.section().expect("checked").0[n])
        .expect("section lies in its fibre");

    let mut groups: BTreeMap<Configuration, Vec<(&Configuration, &Configuration, &Rational)>> = BTreeMap::new();
    for ((y, z), w) in gamma.atoms() {
        groups.entry(z.project(&outside)).or_default().push((y, z, w));
    }

    let bound = rho.space().label_bound.max(next.space().label_bound);
    let mut parts = Vec::with_capacity(groups.len());
    for atoms in groups.values() {
        let mass: Rational = atoms.iter().map(|(_, _, w)| *w).sum();
        if mass.is_zero() {
            continue;
        }
        let mut y_law: BTreeMap<Configuration, Rational> = BTreeMap::new();
        let mut z_law: BTreeMap<Configuration, Rational> = BTreeMap::new();
        let mut xh: BTreeMap<Configuration, Rational> = BTreeMap::new();
        for (y, z, w) in atoms {
            let w = *w / &mass;
            *y_law.entry((*y).clone()).or_insert_with(Rational::zero) += &w;
            *z_law.entry((*z).clone()).or_insert_with(Rational::zero) += &w;
            let col = y.project(&column);
            let (value, pos) = match col.0.iter().position(|&v| v != 0) {
                Some(p) => (col.0[p], p),
                None => (0, s_pos),
            };
            *xh.entry(Configuration(vec![value, pos as u8])).or_insert_with(Rational::zero) += &w;
        }
        let y_law = FiniteMeasure::new(next.space(), y_law)?;
        let z_law = FiniteMeasure::new(rho.space(), z_law)?;
        let pos_bound = (column.len() - 1) as u8;
        let xh = FiniteMeasure::new(Space::new(2, bound.max(pos_bound)), xh)?;
        let z_col = z_law.marginal(&column);
        let col_coupling = one_column_coupling(&xh, &z_col)?;
        let proj = |x: &Configuration| x.project(&column);
        let lifted = extend_coupling(&y_law, &z_law, proj, proj, &col_coupling)?;
        parts.push((mass, lifted));
    }
    integrate_couplings(&parts)
}
