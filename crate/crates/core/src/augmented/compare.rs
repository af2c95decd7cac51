use num_bigint::BigInt;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use super::cells::{build_cells, build_cells_with_centres, subdivide, CellDecomposition, Violation};
use super::cluster::{augmented_cluster, sample_augmented};
use super::relation::{enumerate_cell, max_delta, relation_dominates, DeltaReport, Variant};
use crate::error::{input, Result};
use crate::percolation::graph::{box_index, box_lattice, box_point};
use crate::percolation::{reach_mc, Graph, MCEstimate, Mode, VertexMap};
use crate::rational::{pow, Rational};

/// A base graph with its cells, probe and double cover.
#[derive(Clone, Debug)]
pub struct AugFixture {
    pub name: &'static str,
    pub base: Graph,
    pub cells: CellDecomposition,
    /// Cells allowed to fail the radius inclusions (prescribed, non-maximal centres).
    pub whitelist: Vec<usize>,
    pub probe: usize,
    pub cover: Option<VertexMap>,
    /// Length of a floor-switching cycle in the subdivided base.
    pub switch_length: usize,
}

impl AugFixture {
    /// Audit violations outside the whitelist.
    pub fn unexpected_violations(&self) -> Vec<Violation> {
        self.cells
            .audit()
            .into_iter()
            .filter(|v| v.cell.is_none() || !self.whitelist.contains(&v.cell.expect("checked")))
            .collect()
    }
}

/// A 4 × 5 grid with one centre in each corner, `r0 = 1`.
pub fn corner_grid() -> AugFixture {
    let dims = [4, 5];
    let base = box_lattice(&dims, false).expect("grid");
    let centres = vec![0, 4, 15, 19];
    let cells = build_cells_with_centres(&base, 1, centres).expect("corner cells");
    let probe = cells.boundaries[0][0];
    AugFixture { name: "corner-grid", base, cells, whitelist: vec![0, 2], probe, cover: None, switch_length: 0 }
}

/// `C_n` with greedy centres, `r0 = 1`.
pub fn ring(n: usize) -> Result<AugFixture> {
    let base = crate::percolation::graph::cycle(n)?;
    let cells = build_cells(&base, 1)?;
    let probe = cells.boundaries[0][0];
    let cover = Some(subdivided_cover(&crate::percolation::cycle_cover(n, 2)?)?);
    Ok(AugFixture { name: "ring", base, cells, whitelist: Vec::new(), probe, cover, switch_length: 2 * n })
}

/// The 2n × n torus over the n × n torus, reducing the first coordinate mod n.
pub fn torus(n: usize) -> Result<AugFixture> {
    let base = box_lattice(&[n, n], true)?;
    let cells = build_cells(&base, 1)?;
    let big = box_lattice(&[2 * n, n], true)?;
    let map = (0..2 * n * n)
        .map(|i| {
            let p = box_point(&[2 * n, n], i);
            box_index(&[n, n], &[p[0] % n, p[1]])
        })
        .collect();
    let cover = subdivided_cover(&VertexMap::new(big, base.clone(), map)?)?;
    let probe = cells.boundaries[0][0];
    Ok(AugFixture { name: "torus", base, cells, whitelist: Vec::new(), probe, cover: Some(cover), switch_length: 2 * n })
}

/// The map induced on subdivisions; every source edge must land on an edge.
pub fn subdivided_cover(vm: &VertexMap) -> Result<VertexMap> {
    let (ls, ss) = (subdivide(&vm.source), subdivide(&vm.target));
    let mut map: Vec<usize> = vm.map().to_vec();
    for &(x, y) in vm.source.edges() {
        match vm.target.edge_between(vm.image(x), vm.image(y)) {
            Some(e) => map.push(ss.midpoint(e)),
            None => return input(format!("edge ({x}, {y}) does not map to an edge")),
        }
    }
    VertexMap::new(ls.graph, ss.graph, map)
}

/// `s_p = p^(M + c)`.
pub fn s_p(p: &Rational, m: u64, c: u64) -> Rational {
    pow(p, (m + c) as usize)
}

#[derive(Clone, Debug, Serialize)]
pub struct AugRow {
    pub p: f64,
    pub plain: MCEstimate,
    pub augmented: MCEstimate,
    pub lifted: Option<MCEstimate>,
    /// Samples where the ordinary cluster is not inside the augmented one.
    pub monotonicity_failures: u64,
    /// `log2 s_p`.
    pub log2_s_p: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AugCompareReport {
    pub fixture: &'static str,
    pub s: f64,
    pub radius: usize,
    pub trials: u64,
    pub seed: u64,
    #[serde(rename = "M")]
    pub m: String,
    pub c: usize,
    pub rows: Vec<AugRow>,
    pub coupled_monotone: bool,
}

/// Reach curves for the plain and augmented models on shared samples,
/// plus plain percolation on the cover.
pub fn compare_pc_aug(
    fx: &AugFixture,
    p_grid: &[f64],
    s: f64,
    radius: usize,
    trials: u64,
    seed: u64,
) -> Result<AugCompareReport> {
    if !(0.0..=1.0).contains(&s) || p_grid.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return input("p and s must lie in [0, 1]");
    }
    let cd = &fx.cells;
    let g = cd.graph();
    let dist = g.distances(fx.probe);
    let far = |set: &[bool]| (0..set.len()).any(|x| set[x] && dist[x].is_some_and(|d| d >= radius));
    let m_exp = BigInt::from(g.max_degree()).pow(cd.big_r as u32);
    let mut rows = Vec::new();
    for &p in p_grid {
        let (plain, aug, bad) = (0..trials)
            .into_par_iter()
            .map(|t| {
                let sample = sample_augmented(cd, p, s, seed, t);
                let k = augmented_cluster(cd, &sample, &[fx.probe]).expect("valid sample");
                let zero = super::cluster::AugSample { x: sample.x.clone(), y: vec![false; sample.y.len()] };
                let c = augmented_cluster(cd, &zero, &[fx.probe]).expect("valid sample");
                let inside = (0..c.len()).all(|x| !c[x] || k[x]);
                (u64::from(far(&c)), u64::from(far(&k)), u64::from(!inside))
            })
            .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
        let lifted = match &fx.cover {
            Some(vm) => {
                let x0 = vm.fibre(fx.probe)[0];
                Some(reach_mc(&vm.source, Mode::Bond, p, x0, radius, trials, seed)?)
            }
            None => None,
        };
        let exponent: f64 = m_exp.to_string().parse::<f64>().unwrap_or(f64::INFINITY) + fx.switch_length as f64;
        rows.push(AugRow {
            p,
            plain: MCEstimate::from_counts(plain, trials, seed),
            augmented: MCEstimate::from_counts(aug, trials, seed),
            lifted,
            monotonicity_failures: bad,
            log2_s_p: exponent * p.log2(),
        });
    }
    let coupled_monotone = rows.iter().all(|r| r.monotonicity_failures == 0 && r.augmented.successes >= r.plain.successes);
    Ok(AugCompareReport {
        fixture: fx.name,
        s,
        radius,
        trials,
        seed,
        m: m_exp.to_string(),
        c: fx.switch_length,
        rows,
        coupled_monotone,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CertRow {
    pub delta: DeltaReport,
    /// `Z_p ≼ Z^A_{p,s}`.
    pub zero_delta_dominated: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertifyReport {
    pub fixture: &'static str,
    pub min_resolution: String,
    pub rows: Vec<CertRow>,
    pub all_positive: bool,
    pub all_zero_delta_dominated: bool,
}

/// `max_delta` for every cell, every singleton `A` on its boundary and every `(p, s)`.
pub fn certify_cells(
    fx: &AugFixture,
    cells: Option<&[usize]>,
    p_grid: &[Rational],
    s_grid: &[Rational],
    min_resolution: &Rational,
    cap: u64,
) -> Result<CertifyReport> {
    let cd = &fx.cells;
    let chosen: Vec<usize> = match cells {
        Some(c) => c.to_vec(),
        None => (0..cd.cell_count()).collect(),
    };
    if let Some(&c) = chosen.iter().find(|&&c| c >= cd.cell_count()) {
        return input(format!("cell {c} does not exist"));
    }
    let jobs: Vec<(usize, usize)> =
        chosen.iter().flat_map(|&c| cd.boundaries[c].iter().map(move |&x| (c, x))).collect();
    let per_job: Vec<Vec<CertRow>> = jobs
        .par_iter()
        .map(|&(c, x)| {
            let en = enumerate_cell(cd, c, &[x], cap)?;
            let mut rows = Vec::new();
            for p in p_grid {
                for s in s_grid {
                    let lower = en.distribution(p, &Rational::zero(), Variant::Plain)?;
                    let upper = en.distribution(p, s, Variant::Augmented)?;
                    let zero_delta_dominated = relation_dominates(&lower, &upper)?;
                    let half = Rational::new(1.into(), 2.into());
                    let delta = max_delta(&en, p, s, &half, min_resolution)?;
                    rows.push(CertRow { delta, zero_delta_dominated });
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let rows: Vec<CertRow> = per_job.into_iter().flatten().collect();
    let all_positive = rows.iter().all(|r| r.delta.delta != "0/1");
    let all_zero_delta_dominated = rows.iter().all(|r| r.zero_delta_dominated);
    Ok(CertifyReport {
        fixture: fx.name,
        min_resolution: crate::rational::format(min_resolution),
        rows,
        all_positive,
        all_zero_delta_dominated,
    })
}
