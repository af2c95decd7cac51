use std::collections::BTreeMap;

use num_traits::{Signed, Zero};

use crate::coupling::{is_monotone_coupling, Coupling};
use crate::domination::dominates_1d;
use crate::error::{input, Error, Result};
use crate::measure::{Configuration, FiniteMeasure, Label, Space};
use crate::rational::Rational;

/// Greedy monotone coupling between the law of `Y = X 1{H = ·}` and `rho`.
///
/// `x_with_h` is the joint law of `(X, H)` on two sites (value, position);
/// `rho` lives on `[N]^C` with `C = 0..rho.sites()`. States are processed
/// from the highest value down, positions ascending, and the zero
/// configuration last; each state eats admissible `rho`-mass in
/// lexicographic order of the `rho` atoms.
pub fn one_column_coupling(x_with_h: &FiniteMeasure, rho: &FiniteMeasure) -> Result<Coupling> {
    if x_with_h.sites() != 2 {
        return input("expected the joint law of (value, position) on two sites");
    }
    let m = rho.sites();
    let n = rho.space().label_bound;
    if m == 0 {
        return input("rho must have at least one site");
    }
    let x_law = x_with_h.marginal(&[0]);
    for c in 0..m {
        if !dominates_1d(&x_law, &rho.marginal(&[c]))? {
            return Err(Error::Precondition(format!(
                "the law of X is not dominated by the marginal of rho at position {c}"
            )));
        }
    }
    let mut need: BTreeMap<(Label, usize), Rational> = BTreeMap::new();
    let mut zero_need = Rational::zero();
    for (a, w) in x_with_h.atoms() {
        let (v, h) = (a.0[0], a.0[1] as usize);
        if v == 0 {
            zero_need += w;
            continue;
        }
        if h >= m {
            return input(format!("position {h} outside the column"));
        }
        *need.entry((v, h)).or_insert_with(Rational::zero) += w;
    }

    let mut room: Vec<(Configuration, Rational)> = rho.atoms().map(|(b, w)| (b.clone(), w.clone())).collect();
    let mut atoms: Vec<((Configuration, Configuration), Rational)> = Vec::new();
    let mut place = |alpha: Configuration, admissible: &dyn Fn(&Configuration) -> bool, mut left: Rational| -> Result<()> {
        for (beta, r) in room.iter_mut() {
            if !left.is_positive() {
                break;
            }
            if r.is_zero() || !admissible(beta) {
                continue;
            }
            let take = if *r < left { r.clone() } else { left.clone() };
            *r -= &take;
            left -= &take;
            atoms.push(((alpha.clone(), beta.clone()), take));
        }
        if left.is_positive() {
            return Err(Error::Internal(format!("greedy step for {alpha:?} ran out of room")));
        }
        Ok(())
    };

    for i in (1..=n).rev() {
        for j in 0..m {
            if let Some(w) = need.get(&(i, j)) {
                let mut alpha = vec![0; m];
                alpha[j] = i;
                place(Configuration(alpha), &|beta: &Configuration| beta.0[j] >= i, w.clone())?;
            }
        }
    }
    if zero_need.is_positive() {
        place(Configuration::zeros(m), &|_: &Configuration| true, zero_need)?;
    }

    let y_space = Space::new(m, n);
    let coupling = Coupling::new(y_space, rho.space(), atoms)?;
    let y_law = coupling.left_marginal();
    if !is_monotone_coupling(&coupling, &y_law, rho) {
        return Err(Error::Internal("greedy coupling is not monotone".into()));
    }
    Ok(coupling)
}

/// Law of `Y = X 1{H = ·}` on `[N]^C`.
#[cfg(test)]
pub(crate) fn placed_law(x_with_h: &FiniteMeasure, m: usize, n: Label) -> Result<FiniteMeasure> {
    x_with_h.pushforward(Space::new(m, n), |a| {
        let mut y = vec![0; m];
        if a.0[0] > 0 {
            *y.get_mut(a.0[1] as usize)? = a.0[0];
        }
        Some(Configuration(y))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn c(v: &[Label]) -> Configuration {
        Configuration(v.to_vec())
    }

    #[test]
    fn single_site_is_diagonal() {
        let p = rat(2, 5);
        let xh = FiniteMeasure::new(
            Space::new(2, 1),
            [(c(&[0, 0]), rat(3, 5)), (c(&[1, 0]), p.clone())],
        )
        .unwrap();
        let rho = FiniteMeasure::bernoulli(&p).unwrap();
        let cp = one_column_coupling(&xh, &rho).unwrap();
        assert_eq!(cp, Coupling::diagonal(&rho));
    }

    #[test]
    fn two_positions_fair_coin() {
        let xh = FiniteMeasure::uniform(Space::new(2, 1), [c(&[0, 1]), c(&[1, 0])]).unwrap();
        let rho = FiniteMeasure::bernoulli_product(&rat(1, 2), 2).unwrap();
        let cp = one_column_coupling(&xh, &rho).unwrap();
        let y = placed_law(&xh, 2, 1).unwrap();
        assert!(is_monotone_coupling(&cp, &y, &rho));
    }

    #[test]
    fn rejects_failed_precondition_with_position() {
        let xh = FiniteMeasure::point_mass(Space::new(2, 1), c(&[1, 0])).unwrap();
        let rho = FiniteMeasure::point_mass(Space::binary(2), c(&[1, 0])).unwrap();
        match one_column_coupling(&xh, &rho) {
            Err(Error::Precondition(msg)) => assert!(msg.contains("position 1")),
            other => panic!("unexpected {other:?}"),
        }
    }
}
