//! Fibre maps `π: A → B`, lifts, pushdowns and the assumptions under which
//! a lift is dominated by a given measure.

mod main_coupling;
mod multilift;
mod one_column;
mod sweep;

use std::collections::{BTreeMap, BTreeSet};

use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::domination::{dominates, dominates_1d, Domination};
use crate::error::{input, Error, Result};
use crate::measure::{Configuration, FiniteMeasure, Label, MeasureFile, Space};
use crate::rational::{self, Rational};

pub use main_coupling::build_main_coupling;
pub use multilift::{
    multilift_domination, strengthened_counterexample, MultiliftEnvironment, MultiliftReport,
    StrengthenedReport,
};
pub use one_column::one_column_coupling;
pub use sweep::{lakon_sweep, multilift_sweep, LakonReport, MultiliftSweepReport};

pub const DEFAULT_SECTION_CAP: u128 = 1_000_000;

/// A choice of one element in each fibre.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Section(pub Vec<usize>);

/// A surjection `π: A → B`. Each site of `A` carries `label_width`
/// coordinates; width 1 is the usual totally ordered label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FibreMap {
    a_count: usize,
    b_count: usize,
    pi: Vec<usize>,
    section: Option<Section>,
    label_width: usize,
    fibres: Vec<Vec<usize>>,
}

impl FibreMap {
    pub fn new(b_count: usize, pi: Vec<usize>, section: Option<Vec<usize>>) -> Result<Self> {
        Self::with_width(b_count, pi, section, 1)
    }

    pub fn with_width(
        b_count: usize,
        pi: Vec<usize>,
        section: Option<Vec<usize>>,
        label_width: usize,
    ) -> Result<Self> {
        let a_count = pi.len();
        if a_count == 0 || b_count == 0 {
            return input("A and B must be nonempty");
        }
        if label_width == 0 {
            return input("label width must be positive");
        }
        let mut fibres = vec![Vec::new(); b_count];
        for (a, &b) in pi.iter().enumerate() {
            if b >= b_count {
                return input(format!("pi({a}) = {b} is outside B"));
            }
            fibres[b].push(a);
        }
        if let Some(b) = fibres.iter().position(Vec::is_empty) {
            return input(format!("pi is not surjective: {b} has an empty fibre"));
        }
        let mut pm = FibreMap { a_count, b_count, pi, section: None, label_width, fibres };
        if let Some(s) = section {
            pm.section = Some(pm.check_section(s)?);
        }
        Ok(pm)
    }

    /// Columns of equal size: `A = B × [fibre]` with `a = b * fibre + i`.
    pub fn uniform(b_count: usize, fibre: usize) -> Result<Self> {
        Self::from_sizes(&vec![fibre; b_count])
    }

    /// Consecutive blocks of the given sizes; the section picks each block's first site.
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        let pi: Vec<usize> = sizes.iter().enumerate().flat_map(|(b, &k)| vec![b; k]).collect();
        let mut start = 0;
        let section = sizes
            .iter()
            .map(|&k| {
                let s = start;
                start += k;
                s
            })
            .collect();
        Self::new(sizes.len(), pi, Some(section))
    }

    pub fn check_section(&self, s: Vec<usize>) -> Result<Section> {
        if s.len() != self.b_count {
            return input("section length differs from |B|");
        }
        for (b, &a) in s.iter().enumerate() {
            if a >= self.a_count || self.pi[a] != b {
                return input(format!("section sends {b} to {a}, which is not in its fibre"));
            }
        }
        Ok(Section(s))
    }

    pub fn with_section(&self, s: Vec<usize>) -> Result<FibreMap> {
        let mut out = self.clone();
        out.section = Some(self.check_section(s)?);
        Ok(out)
    }

    pub fn a_count(&self) -> usize {
        self.a_count
    }

    pub fn b_count(&self) -> usize {
        self.b_count
    }

    pub fn pi(&self) -> &[usize] {
        &self.pi
    }

    pub fn label_width(&self) -> usize {
        self.label_width
    }

    pub fn section(&self) -> Option<&Section> {
        self.section.as_ref()
    }

    fn require_section(&self) -> Result<&Section> {
        self.section
            .as_ref()
            .ok_or_else(|| Error::Input("a distinguished section is required".into()))
    }

    /// Sites of the fibre above `b`, ascending.
    pub fn fibre(&self, b: usize) -> &[usize] {
        &self.fibres[b]
    }

    /// Number of coordinates of a configuration on `A`.
    pub fn sites(&self) -> usize {
        self.a_count * self.label_width
    }

    pub fn coords(&self, a: usize) -> std::ops::Range<usize> {
        a * self.label_width..(a + 1) * self.label_width
    }

    /// Coordinates of all sites in the fibre of `b`, in fibre order.
    pub fn column_coords(&self, b: usize) -> Vec<usize> {
        self.fibres[b].iter().flat_map(|&a| self.coords(a)).collect()
    }

    /// Coordinates of all sites outside the fibre of `b`.
    pub fn outside_coords(&self, b: usize) -> Vec<usize> {
        (0..self.a_count)
            .filter(|&a| self.pi[a] != b)
            .flat_map(|a| self.coords(a))
            .collect()
    }

    pub fn section_count(&self) -> u128 {
        self.fibres.iter().fold(1u128, |acc, f| acc.saturating_mul(f.len() as u128))
    }

    /// Every section, in lexicographic order of fibre positions.
    pub fn sections(&self, cap: u128) -> Result<Vec<Section>> {
        let count = self.section_count();
        if count > cap {
            return Err(Error::Size { what: "sections", needed: count, limit: cap });
        }
        let mut out = Vec::with_capacity(count as usize);
        let mut idx = vec![0usize; self.b_count];
        loop {
            out.push(Section(idx.iter().enumerate().map(|(b, &i)| self.fibres[b][i]).collect()));
            let mut b = self.b_count;
            loop {
                if b == 0 {
                    return Ok(out);
                }
                b -= 1;
                idx[b] += 1;
                if idx[b] < self.fibres[b].len() {
                    break;
                }
                idx[b] = 0;
            }
        }
    }

    fn value<'a>(&self, x: &'a Configuration, a: usize) -> &'a [Label] {
        &x.0[self.coords(a)]
    }

    fn is_zero_at(&self, x: &Configuration, a: usize) -> bool {
        self.value(x, a).iter().all(|&l| l == 0)
    }

    /// Nonzero sites of `x` inside the fibre of `b`.
    fn occupied(&self, x: &Configuration, b: usize) -> Vec<usize> {
        self.fibres[b].iter().copied().filter(|&a| !self.is_zero_at(x, a)).collect()
    }

    /// Per-fibre value: the maximum for width 1, the only nonzero value otherwise.
    fn fibre_value(&self, x: &Configuration, b: usize) -> Option<Vec<Label>> {
        if self.label_width == 1 {
            return Some(vec![self.fibres[b].iter().map(|&a| x.0[a]).max().unwrap_or(0)]);
        }
        match self.occupied(x, b).as_slice() {
            [] => Some(vec![0; self.label_width]),
            [a] => Some(self.value(x, *a).to_vec()),
            _ => None,
        }
    }

    /// The map `f_b`: the fibre value moves to the distinguished site of `b`.
    pub fn flatten_config(&self, x: &Configuration, b: usize) -> Result<Configuration> {
        let s = self.require_section()?.0[b];
        let v = self
            .fibre_value(x, b)
            .ok_or_else(|| Error::Precondition(format!("{x:?} has several nonzero sites above {b}")))?;
        let mut y = x.clone();
        for &a in &self.fibres[b] {
            for c in self.coords(a) {
                y.0[c] = 0;
            }
        }
        for (i, c) in self.coords(s).enumerate() {
            y.0[c] = v[i];
        }
        Ok(y)
    }

    pub fn pushdown_config(&self, x: &Configuration) -> Option<Configuration> {
        let mut out = Vec::with_capacity(self.b_count * self.label_width);
        for b in 0..self.b_count {
            out.extend(self.fibre_value(x, b)?);
        }
        Some(Configuration(out))
    }

    /// `(x_{s(b)})_b`.
    pub fn restrict_to_section(&self, x: &Configuration, s: &Section) -> Configuration {
        Configuration(s.0.iter().flat_map(|&a| self.value(x, a).iter().copied()).collect())
    }

    pub fn to_file(&self) -> FibreMapFile {
        FibreMapFile {
            a: self.a_count,
            b: self.b_count,
            pi: self.pi.clone(),
            section: self.section.as_ref().map(|s| s.0.clone()),
            label_width: (self.label_width != 1).then_some(self.label_width),
        }
    }

    pub fn from_file(f: &FibreMapFile) -> Result<Self> {
        if f.pi.len() != f.a {
            return input("\"A\" does not match the length of \"pi\"");
        }
        Self::with_width(f.b, f.pi.clone(), f.section.clone(), f.label_width.unwrap_or(1))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("fibre map serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_file(&serde_json::from_str(s)?)
    }
}

/// JSON fibre map: `{"A": n, "B": m, "pi": [...], "section": [...]}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FibreMapFile {
    #[serde(rename = "A")]
    pub a: usize,
    #[serde(rename = "B")]
    pub b: usize,
    pub pi: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub section: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_width: Option<usize>,
}

/// Joint law of labels `X` on `B` and a random section `S`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftEnvironment {
    atoms: BTreeMap<(Configuration, Section), Rational>,
    x_space: Space,
}

impl LiftEnvironment {
    pub fn from_joint(
        pm: &FibreMap,
        x_space: Space,
        atoms: impl IntoIterator<Item = (Configuration, Section, Rational)>,
    ) -> Result<Self> {
        if x_space.sites != pm.b_count * pm.label_width {
            return input("X must have one label per element of B");
        }
        let mut map: BTreeMap<(Configuration, Section), Rational> = BTreeMap::new();
        for (x, s, w) in atoms {
            if !x_space.contains(&x) {
                return input(format!("X value {x:?} outside its space"));
            }
            let s = pm.check_section(s.0)?;
            *map.entry((x, s)).or_insert_with(|| Rational::from_integer(0.into())) += w;
        }
        map.retain(|_, w| *w != Rational::from_integer(0.into()));
        let total: Rational = map.values().sum();
        if map.is_empty() || !total.is_one() || map.values().any(|w| *w < Rational::from_integer(0.into())) {
            return input("environment weights must be nonnegative and sum to 1");
        }
        Ok(LiftEnvironment { atoms: map, x_space })
    }

    /// `X` with law `x_law`, and `S = table(X)`.
    pub fn deterministic(
        pm: &FibreMap,
        x_law: &FiniteMeasure,
        table: impl Fn(&Configuration) -> Section,
    ) -> Result<Self> {
        Self::from_joint(pm, x_law.space(), x_law.atoms().map(|(x, w)| (x.clone(), table(x), w.clone())))
    }

    /// `X` with law `x_law` and an independent section with law `s_law`.
    pub fn independent(pm: &FibreMap, x_law: &FiniteMeasure, s_law: &[(Section, Rational)]) -> Result<Self> {
        let mut atoms = Vec::new();
        for (x, wx) in x_law.atoms() {
            for (s, ws) in s_law {
                atoms.push((x.clone(), s.clone(), wx * ws));
            }
        }
        Self::from_joint(pm, x_law.space(), atoms)
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&Configuration, &Section, &Rational)> {
        self.atoms.iter().map(|((x, s), w)| (x, s, w))
    }

    pub fn x_marginal(&self) -> FiniteMeasure {
        FiniteMeasure::new(self.x_space, self.atoms().map(|(x, _, w)| (x.clone(), w.clone())))
            .expect("environment marginal is a probability measure")
    }

    pub fn from_json(pm: &FibreMap, s: &str) -> Result<Self> {
        match serde_json::from_str::<EnvironmentFile>(s)? {
            EnvironmentFile::Joint { label_bound, joint } => {
                let space = Space::new(pm.b_count * pm.label_width, label_bound);
                let atoms = joint
                    .into_iter()
                    .map(|a| Ok((Configuration(a.x), Section(a.s), rational::parse(&a.w)?)))
                    .collect::<Result<Vec<_>>>()?;
                Self::from_joint(pm, space, atoms)
            }
            EnvironmentFile::Table { x, s_table } => {
                let law = FiniteMeasure::from_file(&x)?;
                let mut table = BTreeMap::new();
                for (k, v) in s_table {
                    table.insert(Configuration::parse_key(&k)?, Section(v));
                }
                for x in law.support() {
                    if !table.contains_key(x) {
                        return input(format!("s_table has no entry for {}", x.key()));
                    }
                }
                Self::deterministic(pm, &law, |x| table[x].clone())
            }
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum EnvironmentFile {
    Joint { label_bound: Label, joint: Vec<JointAtom> },
    Table { x: MeasureFile, s_table: BTreeMap<String, Vec<usize>> },
}

#[derive(Debug, Serialize, Deserialize)]
struct JointAtom {
    x: Vec<Label>,
    s: Vec<usize>,
    w: String,
}

/// Outcome of an assumption check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AssumptionReport {
    pub holds: bool,
    pub witness: Option<String>,
}

impl AssumptionReport {
    fn pass() -> Self {
        AssumptionReport { holds: true, witness: None }
    }

    fn fail(witness: String) -> Self {
        AssumptionReport { holds: false, witness: Some(witness) }
    }
}

fn check_sites(mu: &FiniteMeasure, pm: &FibreMap) -> Result<()> {
    if mu.sites() != pm.sites() {
        return input(format!("measure has {} sites, the fibre map needs {}", mu.sites(), pm.sites()));
    }
    Ok(())
}

/// Every support point has at most one nonzero site per fibre.
pub fn is_pi_lift(mu: &FiniteMeasure, pm: &FibreMap) -> bool {
    mu.sites() == pm.sites()
        && mu.support().all(|x| (0..pm.b_count).all(|b| pm.occupied(x, b).len() <= 1))
}

pub fn pushdown(mu: &FiniteMeasure, pm: &FibreMap) -> Result<FiniteMeasure> {
    check_sites(mu, pm)?;
    if !is_pi_lift(mu, pm) {
        return Err(Error::Precondition("pushdown needs a pi-lift".into()));
    }
    let target = Space::new(pm.b_count * pm.label_width, mu.space().label_bound);
    mu.pushforward(target, |x| pm.pushdown_config(x))
}

/// Law of `Y_a = X_{π(a)} 1{S(π(a)) = a}`.
pub fn lift_distribution(env: &LiftEnvironment, pm: &FibreMap) -> Result<FiniteMeasure> {
    let space = Space::new(pm.sites(), env.x_space.label_bound);
    let w = pm.label_width;
    let atoms = env.atoms().map(|(x, s, weight)| {
        let mut y = vec![0; pm.sites()];
        for (b, &a) in s.0.iter().enumerate() {
            for i in 0..w {
                y[a * w + i] = x.0[b * w + i];
            }
        }
        (Configuration(y), weight.clone())
    });
    FiniteMeasure::new(space, atoms)
}

/// Pushforward of `mu` by `f_b`.
pub fn flatten_column(mu: &FiniteMeasure, pm: &FibreMap, b: usize) -> Result<FiniteMeasure> {
    check_sites(mu, pm)?;
    pm.require_section()?;
    if b >= pm.b_count {
        return input(format!("column {b} does not exist"));
    }
    for x in mu.support() {
        pm.flatten_config(x, b)?;
    }
    mu.pushforward(mu.space(), |x| pm.flatten_config(x, b).ok())
}

/// Flattens every column through the distinguished section.
pub fn flatten_all(mu: &FiniteMeasure, pm: &FibreMap) -> Result<FiniteMeasure> {
    let mut out = mu.clone();
    for b in 0..pm.b_count {
        out = flatten_column(&out, pm, b)?;
    }
    Ok(out)
}

/// Given any atom of the coordinates outside a column, the law at the
/// distinguished site is dominated by the law at every other site of it.
pub fn check_assumption_a(rho: &FiniteMeasure, pm: &FibreMap) -> Result<AssumptionReport> {
    check_sites(rho, pm)?;
    let s = pm.require_section()?.clone();
    let label_space = Space::new(pm.label_width, rho.space().label_bound);
    for b in 0..pm.b_count {
        let outside = pm.outside_coords(b);
        let mut groups: BTreeMap<Configuration, Vec<(&Configuration, &Rational)>> = BTreeMap::new();
        for (z, w) in rho.atoms() {
            groups.entry(z.project(&outside)).or_default().push((z, w));
        }
        for (h, atoms) in &groups {
            let total: Rational = atoms.iter().map(|(_, w)| *w).sum();
            let law_at = |a: usize| {
                let c: Vec<usize> = pm.coords(a).collect();
                FiniteMeasure::new(label_space, atoms.iter().map(|(z, w)| (z.project(&c), *w / &total)))
                    .expect("conditional law")
            };
            let base = law_at(s.0[b]);
            for &a in pm.fibre(b) {
                if a == s.0[b] {
                    continue;
                }
                let other = law_at(a);
                let ok = if pm.label_width == 1 {
                    dominates_1d(&base, &other)?
                } else {
                    dominates(&base, &other)?.holds()
                };
                if !ok {
                    return Ok(AssumptionReport::fail(format!(
                        "column {b}: given outside atom [{}], the law at {} is not dominated by the law at {a}",
                        h.key(),
                        s.0[b]
                    )));
                }
            }
        }
    }
    Ok(AssumptionReport::pass())
}

/// The fully flattened `mu` is dominated by `rho`.
pub fn check_assumption_b(mu: &FiniteMeasure, rho: &FiniteMeasure, pm: &FibreMap) -> Result<AssumptionReport> {
    check_sites(mu, pm)?;
    check_sites(rho, pm)?;
    if !is_pi_lift(mu, pm) {
        return Err(Error::Precondition("assumption B needs a pi-lift".into()));
    }
    let flat = flatten_all(mu, pm)?;
    Ok(match dominates(&flat, rho)? {
        Domination::Dominated(_) => AssumptionReport::pass(),
        Domination::NotDominated(u) => AssumptionReport::fail(format!(
            "flattened measure exceeds rho on the up-set generated by {:?}",
            u.generators
        )),
    })
}

/// For every section `s`, the pushdown of `mu` is dominated by the law of
/// `(Z_{s(b)})_b` under `rho`.
pub fn check_assumption_c(mu: &FiniteMeasure, rho: &FiniteMeasure, pm: &FibreMap) -> Result<AssumptionReport> {
    check_assumption_c_capped(mu, rho, pm, DEFAULT_SECTION_CAP)
}

pub fn check_assumption_c_capped(
    mu: &FiniteMeasure,
    rho: &FiniteMeasure,
    pm: &FibreMap,
    cap: u128,
) -> Result<AssumptionReport> {
    check_sites(rho, pm)?;
    let down = pushdown(mu, pm)?;
    for s in pm.sections(cap)? {
        let marginal = section_marginal(rho, pm, &s)?;
        if !dominates(&down, &marginal)?.holds() {
            return Ok(AssumptionReport::fail(format!("section {:?}", s.0)));
        }
    }
    Ok(AssumptionReport::pass())
}

/// Law of `(Z_{s(b)})_b` under `rho`.
pub fn section_marginal(rho: &FiniteMeasure, pm: &FibreMap, s: &Section) -> Result<FiniteMeasure> {
    let target = Space::new(pm.b_count * pm.label_width, rho.space().label_bound);
    rho.pushforward(target, |z| Some(pm.restrict_to_section(z, s)))
}

/// Checks that, for each column, the listed permutations generate a group
/// acting transitively on the fibre and each of them preserves `rho`.
/// `generators[b]` holds permutations of the fibre of `b`, written as the
/// images of the fibre's sites in ascending order.
pub fn check_sufficiently_symmetric(
    rho: &FiniteMeasure,
    pm: &FibreMap,
    generators: &[Vec<Vec<usize>>],
) -> Result<bool> {
    check_sites(rho, pm)?;
    if generators.len() != pm.b_count {
        return input("one generator list per column is required");
    }
    let mut verdict = true;
    for (b, gens) in generators.iter().enumerate() {
        let fibre = pm.fibre(b);
        let members: BTreeSet<usize> = fibre.iter().copied().collect();
        for g in gens {
            let image: BTreeSet<usize> = g.iter().copied().collect();
            if g.len() != fibre.len() || image != members {
                return input(format!("generator {g:?} does not permute the fibre of {b}"));
            }
        }
        let mut orbit = BTreeSet::from([fibre[0]]);
        let mut frontier = vec![fibre[0]];
        while let Some(a) = frontier.pop() {
            let i = fibre.iter().position(|&f| f == a).expect("fibre member");
            for g in gens {
                if orbit.insert(g[i]) {
                    frontier.push(g[i]);
                }
            }
        }
        if orbit.len() != fibre.len() {
            verdict = false;
        }
        for g in gens {
            let mut perm: Vec<usize> = (0..pm.a_count).collect();
            for (i, &a) in fibre.iter().enumerate() {
                perm[a] = g[i];
            }
            let moved = rho.pushforward(rho.space(), |z| {
                let mut out = z.clone();
                for a in 0..pm.a_count {
                    for (i, c) in pm.coords(perm[a]).enumerate() {
                        out.0[c] = z.0[a * pm.label_width + i];
                    }
                }
                Some(out)
            })?;
            if moved != *rho {
                verdict = false;
            }
        }
    }
    Ok(verdict)
}

/// All transpositions inside each fibre, the generator set for exchangeability.
pub fn transpositions(pm: &FibreMap) -> Vec<Vec<Vec<usize>>> {
    (0..pm.b_count)
        .map(|b| {
            let f = pm.fibre(b);
            let mut gens = Vec::new();
            for i in 0..f.len() {
                for j in i + 1..f.len() {
                    let mut g = f.to_vec();
                    g.swap(i, j);
                    gens.push(g);
                }
            }
            gens
        })
        .collect()
}
