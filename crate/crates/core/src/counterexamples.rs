//! Hard-coded counterexample fixtures with exact verifiers.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::domination::{dominates, Domination};
use crate::error::{Error, Result};
use crate::lift::{
    check_assumption_a, check_assumption_b, check_assumption_c, is_pi_lift, pushdown, section_marginal,
    FibreMap, Section,
};
use crate::measure::{Configuration, FiniteMeasure, Label, Space};
use crate::rational::{self, Rational};

/// A named instance with the verdicts it is expected to produce.
#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: &'static str,
    pub mu: FiniteMeasure,
    pub rho: FiniteMeasure,
    pub pm: FibreMap,
    pub expected: Expectations,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Expectations {
    pub assumption_a: Option<bool>,
    pub assumption_b: Option<bool>,
    pub assumption_c: Option<bool>,
    pub dominated: bool,
}

type Matrix = [[Label; 3]; 3];

const MU_MATRICES: [Matrix; 4] = [
    [[0, 0, 0], [0, 0, 0], [0, 0, 0]],
    [[1, 1, 0], [0, 0, 0], [0, 0, 0]],
    [[0, 0, 0], [1, 0, 1], [0, 0, 0]],
    [[0, 0, 0], [0, 0, 0], [0, 1, 1]],
];

/// `R1..R4`, in this order.
const RHO_MATRICES: [Matrix; 4] = [
    [[1, 1, 1], [1, 1, 1], [1, 1, 1]],
    [[1, 1, 0], [1, 0, 1], [0, 1, 1]],
    [[1, 0, 1], [0, 1, 1], [1, 1, 0]],
    [[0, 1, 1], [1, 1, 0], [1, 0, 1]],
];

/// Pushdown vectors heading the table columns.
const TABLE_VECTORS: [[Label; 3]; 4] = [[1, 1, 0], [1, 0, 1], [0, 1, 1], [0, 0, 0]];

/// Each row: the section as the chosen row in each column (1-based), then
/// the index (1-based) of the `rho` matrix paired with each table column.
const TABLE_ROWS: [([usize; 3], [usize; 4]); 9] = [
    ([1, 1, 1], [2, 3, 1, 4]),
    ([1, 1, 2], [2, 3, 1, 4]),
    ([1, 1, 3], [2, 1, 4, 3]),
    ([1, 2, 1], [3, 1, 4, 2]),
    ([1, 2, 2], [3, 2, 1, 4]),
    ([1, 2, 3], [3, 2, 1, 4]),
    ([1, 3, 1], [2, 3, 1, 4]),
    ([1, 3, 2], [2, 3, 1, 4]),
    ([1, 3, 3], [3, 1, 2, 4]),
];

fn matrix_config(m: &Matrix) -> Configuration {
    Configuration(m.iter().flatten().copied().collect())
}

/// Site of row `r`, column `c` (both 0-based).
fn site(r: usize, c: usize) -> usize {
    3 * r + c
}

fn grid_map() -> FibreMap {
    FibreMap::new(3, (0..9).map(|a| a % 3).collect(), Some(vec![site(0, 0), site(0, 1), site(0, 2)]))
        .expect("valid grid fibre map")
}

/// Nine sites in a 3×3 grid, fibres are the columns.
pub fn section32_instance() -> Fixture {
    let space = Space::binary(9);
    Fixture {
        name: "grid-counterexample",
        mu: FiniteMeasure::uniform(space, MU_MATRICES.iter().map(matrix_config)).expect("mu"),
        rho: FiniteMeasure::uniform(space, RHO_MATRICES.iter().map(matrix_config)).expect("rho"),
        pm: grid_map(),
        expected: Expectations { assumption_a: None, assumption_b: None, assumption_c: Some(true), dominated: false },
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Section32Report {
    pub mu_atoms: usize,
    pub rho_atoms: usize,
    pub sections_checked: usize,
    pub assumption_c: bool,
    pub dominated: bool,
    pub violator_generators: Vec<String>,
    pub violator_mu: String,
    pub violator_rho: String,
    pub dominating_rho_atoms: Vec<usize>,
    pub table_rows_verified: usize,
    /// Distinguished sections (as row triples) under which A or B fails.
    pub sections_failing_a_or_b: usize,
}

fn fixture_error(msg: impl Into<String>) -> Error {
    Error::Fixture(msg.into())
}

/// Checks assumption C over all sections, the failed domination with its
/// up-set certificate, the two-dominator count, and every table row.
pub fn verify_section32() -> Result<Section32Report> {
    let f = section32_instance();
    if !is_pi_lift(&f.mu, &f.pm) {
        return Err(fixture_error("mu is not a lift"));
    }
    let sections = f.pm.sections(u128::MAX)?;
    let c = check_assumption_c(&f.mu, &f.rho, &f.pm)?;
    if !c.holds {
        return Err(fixture_error(format!("assumption C fails at {:?}", c.witness)));
    }
    let violator = match dominates(&f.mu, &f.rho)? {
        Domination::Dominated(_) => return Err(fixture_error("mu is dominated by rho")),
        Domination::NotDominated(u) => u,
    };
    let (vm, vr) = (violator.measure(&f.mu), violator.measure(&f.rho));
    if vm <= vr {
        return Err(fixture_error("up-set certificate does not separate"));
    }

    let mut counts = Vec::new();
    for m in &MU_MATRICES[1..] {
        let x = matrix_config(m);
        let n = RHO_MATRICES.iter().filter(|r| x.below(&matrix_config(r))).count();
        if n != 2 {
            return Err(fixture_error(format!("{n} rho atoms dominate {x:?}, expected 2")));
        }
        counts.push(n);
    }

    for (row, (sec, assign)) in TABLE_ROWS.iter().enumerate() {
        let mut used = [false; 4];
        for (col, vector) in TABLE_VECTORS.iter().enumerate() {
            let r = &RHO_MATRICES[assign[col] - 1];
            used[assign[col] - 1] = true;
            for b in 0..3 {
                if r[sec[b] - 1][b] < vector[b] {
                    return Err(fixture_error(format!(
                        "table row {} column {}: entry in column {b} is below the vector",
                        row + 1,
                        col + 1
                    )));
                }
            }
        }
        if used.iter().any(|u| !u) {
            return Err(fixture_error(format!("table row {} is not a bijection", row + 1)));
        }
    }
    let first = f.pm.fibre(0)[0];
    let table_sections: Vec<Section> = TABLE_ROWS
        .iter()
        .map(|(sec, _)| Section((0..3).map(|b| site(sec[b] - 1, b)).collect()))
        .collect();
    let expected: Vec<&Section> = sections.iter().filter(|s| s.0[0] == first).collect();
    if expected.len() != 9 || expected.iter().any(|s| !table_sections.contains(s)) {
        return Err(fixture_error("table rows do not cover the sections with s(1) fixed"));
    }

    let mut failing = 0;
    for s in &sections {
        let pm = f.pm.with_section(s.0.clone())?;
        let a = check_assumption_a(&f.rho, &pm)?;
        let b = check_assumption_b(&f.mu, &f.rho, &pm)?;
        if !(a.holds && b.holds) {
            failing += 1;
        }
    }
    if failing == 0 {
        return Err(fixture_error("A and B hold for some section although domination fails"));
    }

    Ok(Section32Report {
        mu_atoms: f.mu.len(),
        rho_atoms: f.rho.len(),
        sections_checked: sections.len(),
        assumption_c: true,
        dominated: false,
        violator_generators: violator.generators.iter().map(|g| g.key()).collect(),
        violator_mu: rational::format(&vm),
        violator_rho: rational::format(&vr),
        dominating_rho_atoms: counts,
        table_rows_verified: TABLE_ROWS.len(),
        sections_failing_a_or_b: failing,
    })
}

/// Labels in `{0,1}^2` under the product order, two bits per site.
pub fn nontotal_label_instance() -> Fixture {
    let space = Space::binary(4);
    let c = |v: [Label; 4]| Configuration(v.to_vec());
    Fixture {
        name: "two-bit-labels",
        mu: FiniteMeasure::uniform(space, [c([1, 0, 0, 0]), c([0, 0, 0, 1])]).expect("mu"),
        rho: FiniteMeasure::uniform(space, [c([1, 0, 0, 1]), c([0, 1, 1, 0])]).expect("rho"),
        pm: FibreMap::with_width(1, vec![0, 0], Some(vec![0]), 2).expect("width-two map"),
        expected: Expectations {
            assumption_a: Some(true),
            assumption_b: Some(true),
            assumption_c: None,
            dominated: false,
        },
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NontotalReport {
    pub per_section: Vec<NontotalSection>,
    pub dominated: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct NontotalSection {
    pub section: usize,
    pub assumption_a: bool,
    pub assumption_b: bool,
}

/// Runs A and B under both choices of distinguished site and the domination check.
pub fn verify_nontotal() -> Result<NontotalReport> {
    let f = nontotal_label_instance();
    let mut per_section = Vec::new();
    for s in 0..2 {
        let pm = f.pm.with_section(vec![s])?;
        per_section.push(NontotalSection {
            section: s,
            assumption_a: check_assumption_a(&f.rho, &pm)?.holds,
            assumption_b: check_assumption_b(&f.mu, &f.rho, &pm)?.holds,
        });
    }
    let dominated = dominates(&f.mu, &f.rho)?.holds();
    if dominated {
        return Err(fixture_error("two-bit instance is dominated"));
    }
    if !per_section.iter().any(|r| r.assumption_a && r.assumption_b) {
        return Err(fixture_error("A and B fail for every distinguished site"));
    }
    Ok(NontotalReport { per_section, dominated })
}

/// Pushdown of `mu` equals the `s`-marginal of `rho` for every section `s`.
pub fn pushdown_equals_all_marginals(mu: &FiniteMeasure, rho: &FiniteMeasure, pm: &FibreMap) -> Result<bool> {
    let down = pushdown(mu, pm)?;
    for s in pm.sections(u128::MAX)? {
        if section_marginal(rho, pm, &s)? != down {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchBounds {
    pub fibres: Vec<usize>,
    pub rho_atoms: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchReport {
    pub trials: u64,
    pub seed: u64,
    pub equality_instances: u64,
    pub found: Option<FoundInstance>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FoundInstance {
    pub mu: crate::measure::MeasureFile,
    pub rho: crate::measure::MeasureFile,
}

/// Random search for a lift whose pushdown equals every section marginal
/// of `rho` and which is still not dominated by `rho`.
pub fn counterexample_search(bounds: &SearchBounds, trials: u64, seed: u64) -> Result<SearchReport> {
    let pm = FibreMap::from_sizes(&bounds.fibres)?;
    let a = pm.a_count();
    let mut report = SearchReport { trials, seed, equality_instances: 0, found: None };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let base: Vec<Configuration> = (0..bounds.rho_atoms.max(1))
            .map(|_| Configuration((0..a).map(|_| rng.gen_range(0..=1)).collect()))
            .collect();
        // Averaging over one simultaneous cyclic shift of every column keeps
        // section marginals equal only in special cases, which is the point.
        let shifts = (0..pm.b_count()).map(|b| pm.fibre(b).len()).max().unwrap_or(1);
        let mut atoms = Vec::new();
        for x in &base {
            for k in 0..shifts {
                let mut y = x.clone();
                for b in 0..pm.b_count() {
                    let f = pm.fibre(b);
                    for (i, &site) in f.iter().enumerate() {
                        y.0[f[(i + k) % f.len()]] = x.0[site];
                    }
                }
                atoms.push((y, Rational::new(1.into(), ((base.len() * shifts) as i64).into())));
            }
        }
        let rho = FiniteMeasure::new(Space::binary(a), atoms)?;
        let sections = pm.sections(u128::MAX)?;
        let nu = section_marginal(&rho, &pm, &sections[0])?;
        if sections.iter().skip(1).any(|s| section_marginal(&rho, &pm, s).map(|m| m != nu).unwrap_or(true)) {
            continue;
        }
        let mut lifted = Vec::new();
        for (x, w) in nu.atoms() {
            let s = sections.choose(&mut rng).expect("nonempty");
            let mut y = vec![0; a];
            for b in 0..pm.b_count() {
                y[s.0[b]] = x.0[b];
            }
            lifted.push((Configuration(y), w.clone()));
        }
        let mu = FiniteMeasure::new(Space::binary(a), lifted)?;
        if !pushdown_equals_all_marginals(&mu, &rho, &pm)? {
            continue;
        }
        report.equality_instances += 1;
        if !dominates(&mu, &rho)?.holds() {
            let recheck = is_pi_lift(&mu, &pm)
                && pushdown_equals_all_marginals(&mu, &rho, &pm)?
                && !dominates(&mu, &rho)?.holds();
            if recheck && report.found.is_none() {
                report.found = Some(FoundInstance { mu: mu.to_file(), rho: rho.to_file() });
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
    fn grid_fixture_shape() {
        let f = section32_instance();
        assert_eq!(f.mu.len(), 4);
        assert_eq!(f.rho.len(), 4);
        let down = pushdown(&f.mu, &f.pm).unwrap();
        let expected = FiniteMeasure::uniform(
            Space::binary(3),
            TABLE_VECTORS.iter().map(|v| Configuration(v.to_vec())),
        )
        .unwrap();
        assert_eq!(down, expected);
    }

    #[test]
    fn conditioning_on_top_row() {
        let f = section32_instance();
        let top = f.mu.conditional(|x| x.0[..3].iter().any(|&v| v != 0)).unwrap();
        assert_eq!(top.weight(&matrix_config(&MU_MATRICES[1])), rat(1, 1));
    }

    #[test]
    fn grid_verifier_passes() {
        let r = verify_section32().unwrap();
        assert_eq!(r.sections_checked, 27);
        assert_eq!(r.table_rows_verified, 9);
        assert_eq!(r.dominating_rho_atoms, vec![2, 2, 2]);
    }

    #[test]
    fn two_bit_labels() {
        let r = verify_nontotal().unwrap();
        assert!(!r.dominated);
        assert!(r.per_section.iter().all(|s| s.assumption_a && s.assumption_b));
    }

    #[test]
    fn grid_fails_equality_filter() {
        let f = section32_instance();
        assert!(!pushdown_equals_all_marginals(&f.mu, &f.rho, &f.pm).unwrap());
    }

    #[test]
    fn zero_trial_search() {
        let r = counterexample_search(&SearchBounds { fibres: vec![3, 3, 3], rho_atoms: 4 }, 0, 1).unwrap();
        assert!(r.found.is_none());
    }
}
