use serde::Serialize;

use super::fibration::{box_projection, cycle_cover, cycle_cover_with_pendant, two_floor_box, VertexMap};
use super::graph::box_index;
use super::reach::{fibre_selection_reach_exact, fibre_selection_reach_mc, reach_exact, reach_mc, MCEstimate};
use super::sample::Mode;
use crate::error::{input, Result};
use crate::rational::{format, rat, Rational};

/// A fibration with a probe vertex upstairs.
#[derive(Clone, Debug)]
pub struct PercFixture {
    pub name: &'static str,
    pub map: VertexMap,
    pub probe: usize,
}

impl PercFixture {
    pub fn base_probe(&self) -> usize {
        self.map.image(self.probe)
    }

    pub fn has_pair_fibres(&self) -> bool {
        (0..self.map.target.vertex_count()).all(|v| self.map.fibre(v).len() == 2)
    }
}

/// Small pairs for exact comparisons at radius at most 2.
pub fn exact_fixtures() -> Result<Vec<PercFixture>> {
    Ok(vec![
        PercFixture { name: "cycle-pendant", map: cycle_cover_with_pendant(), probe: 0 },
        PercFixture { name: "two-floor-box", map: two_floor_box(5, 5)?, probe: box_index(&[5, 5], &[2, 2]) },
        PercFixture { name: "box-projection", map: box_projection(5, 5, 3)?, probe: box_index(&[5, 5, 3], &[2, 2, 1]) },
    ])
}

/// The same three families, sized so the probe sits at distance `radius` from the far boundary.
pub fn mc_fixtures(radius: usize) -> Result<Vec<PercFixture>> {
    let side = 2 * radius + 1;
    let c = radius;
    Ok(vec![
        PercFixture { name: "cycle-cover", map: cycle_cover(side, 2)?, probe: 0 },
        PercFixture { name: "two-floor-box", map: two_floor_box(side, side)?, probe: box_index(&[side, side], &[c, c]) },
        PercFixture {
            name: "box-projection",
            map: box_projection(side, side, 3)?,
            probe: box_index(&[side, side, 3], &[c, c, 1]),
        },
    ])
}

pub fn exact_p_grid() -> Vec<Rational> {
    (1..=9).map(|k| rat(k, 10)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ExactRow {
    pub fixture: &'static str,
    /// `bond`, `site` or `fibre-selection`.
    pub model: &'static str,
    pub radius: usize,
    pub p: String,
    pub lifted: String,
    pub base: String,
    pub holds: bool,
}

/// Exact reach from the probe upstairs and from its image, for every radius and `p`.
/// Fibre-selection rows (site `1/2` downstairs) are added when every fibre has two points.
pub fn compare_exact(fx: &PercFixture, radii: &[usize], p_grid: &[Rational], cap: usize) -> Result<Vec<ExactRow>> {
    let (l, s) = (&fx.map.source, &fx.map.target);
    let (x, v) = (fx.probe, fx.base_probe());
    let mut rows = Vec::new();
    for &r in radii {
        for (mode, model) in [(Mode::Bond, "bond"), (Mode::Site, "site")] {
            let pl = super::reach::reach_polynomial(l, mode, x, r, cap)?;
            let ps = super::reach::reach_polynomial(s, mode, v, r, cap)?;
            for p in p_grid {
                let (a, b) = (pl.eval(p), ps.eval(p));
                rows.push(ExactRow { fixture: fx.name, model, radius: r, p: format(p), holds: a >= b, lifted: format(&a), base: format(&b) });
            }
        }
        if fx.has_pair_fibres() {
            let half = rat(1, 2);
            let a = fibre_selection_reach_exact(&fx.map, x, r, cap)?;
            let b = reach_exact(s, Mode::Site, &half, v, r, cap)?;
            rows.push(ExactRow {
                fixture: fx.name,
                model: "fibre-selection",
                radius: r,
                p: format(&half),
                holds: a >= b,
                lifted: format(&a),
                base: format(&b),
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, Serialize)]
pub struct McRow {
    pub fixture: &'static str,
    pub model: &'static str,
    pub radius: usize,
    pub p: f64,
    pub lifted: MCEstimate,
    pub base: MCEstimate,
    /// `lifted` is at least `base` up to `k` combined standard errors.
    pub holds: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn compare_mc(
    fx: &PercFixture,
    mode: Mode,
    radius: usize,
    p_grid: &[f64],
    trials: u64,
    seed: u64,
    k: f64,
) -> Result<Vec<McRow>> {
    if trials == 0 {
        return input("at least one trial is needed");
    }
    let (x, v) = (fx.probe, fx.base_probe());
    let model = match mode {
        Mode::Bond => "bond",
        Mode::Site => "site",
    };
    let mut rows = Vec::new();
    for &p in p_grid {
        let lifted = reach_mc(&fx.map.source, mode, p, x, radius, trials, seed)?;
        let base = reach_mc(&fx.map.target, mode, p, v, radius, trials, seed)?;
        rows.push(McRow { fixture: fx.name, model, radius, p, holds: lifted.at_least(&base, k), lifted, base });
    }
    if fx.has_pair_fibres() {
        let lifted = fibre_selection_reach_mc(&fx.map, x, radius, trials, seed)?;
        let base = reach_mc(&fx.map.target, Mode::Site, 0.5, v, radius, trials, seed)?;
        rows.push(McRow {
            fixture: fx.name,
            model: "fibre-selection",
            radius,
            p: 0.5,
            holds: lifted.at_least(&base, k),
            lifted,
            base,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::percolation::is_fibration;

    #[test]
    fn fixtures_are_fibrations() {
        for fx in exact_fixtures().unwrap().into_iter().chain(mc_fixtures(8).unwrap()) {
            assert!(is_fibration(&fx.map), "{}", fx.name);
        }
    }

    #[test]
    fn exact_rows_hold() {
        let fx = &exact_fixtures().unwrap()[0];
        let rows = compare_exact(fx, &[1, 2], &exact_p_grid(), 24).unwrap();
        assert!(rows.iter().all(|r| r.holds));
    }
}
