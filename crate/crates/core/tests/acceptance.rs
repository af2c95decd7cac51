mod common;

use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use stodom::augmented::{self, certify_cells, compare_pc_aug, corner_grid, explore, ring, sample_augmented, torus, Variant};
use stodom::bk::{self, Event};
use stodom::counterexamples::{self, verify_nontotal, verify_section32};
use stodom::lift::{build_main_coupling, lakon_sweep, multilift_sweep, one_column_coupling, strengthened_counterexample};
use stodom::percolation::{self, graph, Mode};
use stodom::rational::{format, pow};
use stodom::{dominates, is_monotone_coupling, Error, Rational, Space};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib<T>(r: stodom::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn within(t: Instant, limit: Duration) -> Result<(), String> {
    ensure(t.elapsed() <= limit, || format!("took {:.1?}, limit {limit:?}", t.elapsed()))
}

fn section_counterexample() -> Outcome {
    let t = Instant::now();
    let r = lib(verify_section32())?;
    within(t, Duration::from_secs(1))?;
    ensure(r.sections_checked == 27 && r.assumption_c, || format!("C checked on {} sections", r.sections_checked))?;
    ensure(!r.dominated, || "dominated".into())?;
    ensure(r.table_rows_verified == 9, || format!("{} table rows", r.table_rows_verified))?;
    // Re-check the certificate directly.
    let f = counterexamples::section32_instance();
    let d = lib(dominates(&f.mu, &f.rho))?;
    let u = d.violator().ok_or("no violator")?;
    let (m, r2) = (u.measure(&f.mu), u.measure(&f.rho));
    ensure(m > r2, || "certificate does not separate".into())?;
    ensure(format(&m) == r.violator_mu && format(&r2) == r.violator_rho, || "certificate masses differ".into())?;
    let table = lib(u.table(1 << 20))?;
    let configs = lib(f.mu.space().configurations(1 << 20))?;
    let upward = (0..configs.len()).all(|i| {
        !table[i] || (0..configs.len()).all(|j| !configs[i].below(&configs[j]) || table[j])
    });
    ensure(upward, || "certificate is not an up-set".into())?;
    Ok(format!("27 sections, certificate mu(U) = {m} > rho(U) = {r2}, 9 rows"))
}

fn nontotal() -> Outcome {
    let t = Instant::now();
    let r = lib(verify_nontotal())?;
    within(t, Duration::from_secs(1))?;
    let good = r.per_section.iter().filter(|s| s.assumption_a && s.assumption_b).count();
    ensure(good > 0 && !r.dominated, || format!("{r:?}"))?;
    let f = counterexamples::nontotal_label_instance();
    ensure(!oracle_dominates(&f.mu, &f.rho), || "up-set oracle finds domination".into())?;
    Ok(format!("A and B hold for {good} of 2 distinguished sites, not dominated"))
}

fn all_shapes() -> Vec<Vec<usize>> {
    let mut v: Vec<Vec<usize>> = (1..=3).map(|a| vec![a]).collect();
    for a in 1..=3 {
        for b in 1..=3 {
            v.push(vec![a, b]);
        }
    }
    v
}

fn lakon() -> Outcome {
    let t = Instant::now();
    let ps = [q(1, 4), q(1, 2), q(3, 4)];
    let shapes = all_shapes();
    let r = lib(lakon_sweep(&shapes, &ps, 1 << 20))?;
    within(t, Duration::from_secs(60))?;
    let expected: u64 = shapes
        .iter()
        .map(|s| (s.iter().product::<usize>() as u64).pow(1 << s.len()) * ps.len() as u64)
        .sum();
    ensure(r.strategies == expected, || format!("{} strategies, expected {expected}", r.strategies))?;
    ensure(r.all_dominated, || format!("{:?}", r.failure))?;
    Ok(format!("{} strategies on 12 shapes, {} distinct laws, all dominated", r.strategies, r.distinct_laws))
}

fn main_theorem() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut oracle_checks = 0;
    for i in 0..1000 {
        let (mu, rho, pm) = random_valid_instance(&mut rng);
        let c = lib(build_main_coupling(&mu, &rho, &pm)).map_err(|e| format!("instance {i}: {e}"))?;
        ensure(is_monotone_coupling(&c, &mu, &rho), || format!("instance {i}: coupling is not monotone"))?;
        ensure(c.left_marginal() == mu && c.right_marginal() == rho, || format!("instance {i}: marginals"))?;
        ensure(lib(dominates(&mu, &rho))?.holds(), || format!("instance {i}: dominates says NO"))?;
        if mu.space().size() <= 16 {
            ensure(oracle_dominates(&mu, &rho), || format!("instance {i}: oracle says NO"))?;
            oracle_checks += 1;
        }
    }
    let spaces = [(1, 1), (2, 1), (3, 1), (4, 1), (1, 2), (2, 2), (1, 3), (2, 3)].map(|(s, n)| Space::new(s, n));
    let (mut yes, mut no) = (0, 0);
    for k in 0..2000 {
        let space = spaces[k % spaces.len()];
        let atoms = rng.gen_range(1..=5);
        let (mu, rho) = (random_measure(&mut rng, space, atoms), random_measure(&mut rng, space, atoms));
        let d = lib(dominates(&mu, &rho))?;
        let o = oracle_dominates(&mu, &rho);
        ensure(d.holds() == o, || format!("disagreement on {mu:?} vs {rho:?}"))?;
        if let Some(u) = d.violator() {
            ensure(u.measure(&mu) > u.measure(&rho), || "violator does not separate".into())?;
        }
        if o {
            yes += 1
        } else {
            no += 1
        }
        oracle_checks += 1;
    }
    within(t, Duration::from_secs(300))?;
    ensure(yes > 0 && no > 0, || "oracle sweep saw one verdict only".into())?;
    Ok(format!("1000 constructive couplings, {oracle_checks} oracle agreements ({yes} YES, {no} NO)"))
}

fn one_column() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..10_000 {
        let (joint, rho, bad) = random_one_column(&mut rng, false);
        ensure(bad.is_none(), || format!("instance {i}: generator produced a violator"))?;
        let c = lib(one_column_coupling(&joint, &rho)).map_err(|e| format!("instance {i}: {e}"))?;
        let y_law = lib(joint.pushforward(Space::new(rho.sites(), rho.space().label_bound), |xh| {
            let mut y = vec![0; rho.sites()];
            y[xh.0[1] as usize] = xh.0[0];
            Some(stodom::Configuration(y))
        }))?;
        ensure(is_monotone_coupling(&c, &y_law, &rho), || format!("instance {i}: not a monotone coupling"))?;
    }
    let mut rejected = 0;
    for i in 0..1000 {
        let (joint, rho, bad) = random_one_column(&mut rng, true);
        let c = bad.expect("violating generator");
        match one_column_coupling(&joint, &rho) {
            Err(Error::Precondition(msg)) if msg.ends_with(&format!("position {c}")) => rejected += 1,
            other => return Err(format!("violator {i} at position {c}: {other:?}")),
        }
    }
    Ok(format!("10000 monotone couplings, {rejected} violators rejected at the right position"))
}

fn multilift() -> Outcome {
    let shapes = vec![vec![2], vec![3], vec![2, 2], vec![2, 3], vec![3, 2], vec![3, 3]];
    let r = lib(multilift_sweep(&shapes, &[q(1, 4), q(1, 2)]))?;
    ensure(r.all_ok, || format!("{:?}", r.failure))?;
    for p in [q(1, 4), q(1, 2), q(3, 4)] {
        let s = lib(strengthened_counterexample(&p))?;
        let one = Rational::one();
        let expected = &one - pow(&(&one - &p), 2);
        ensure(!s.dominated, || format!("dominated at p = {p}"))?;
        ensure(s.site_marginal == format(&expected), || format!("marginal {} at p = {p}", s.site_marginal))?;
    }
    let half = lib(strengthened_counterexample(&q(1, 2)))?;
    ensure(half.site_marginal == "3/4", || half.site_marginal.clone())?;
    Ok(format!(
        "{} constant pairs, {} adaptive strategies; strengthened rule NO with marginal 3/4",
        r.constant_pairs, r.adaptive_strategies
    ))
}

fn bk_exhaustive() -> Outcome {
    let t = Instant::now();
    // Up-sets of {0,1}^4 by direct filtering of all 2^16 subsets.
    let brute: Vec<Event> = (0u32..=u16::MAX as u32)
        .map(|m| lib(Event::from_fn(4, |w| m >> w & 1 == 1)).unwrap())
        .filter(bk::is_increasing)
        .collect();
    let events = lib(bk::increasing_events(4))?;
    ensure(events.len() == brute.len(), || format!("{} events, filter finds {}", events.len(), brute.len()))?;
    let mut details = Vec::new();
    for p in [q(1, 2), q(1, 3)] {
        let r = lib(bk::exhaustive_bk(4, &p))?;
        let pairs = (events.len() * events.len()) as u64;
        ensure(r.pairs == pairs, || format!("{} pairs", r.pairs))?;
        ensure(r.violations == 0 && r.path_mismatches == 0 && r.holds, || format!("{r:?}"))?;
        details.push(format!("p = {p}: {} pairs, max gap {}", r.pairs, r.max_gap));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let weights = lib(bk::product_weights(&vec![q(1, 2); 4]))?;
    for _ in 0..1000 {
        let (a, b) = (&events[rng.gen_range(0..events.len())], &events[rng.gen_range(0..events.len())]);
        let lit = brute_disjoint(a, b);
        let fast = lib(bk::disjoint_occurrence(a, b))?;
        ensure((0..16).all(|w| fast.contains(w) == lit[w as usize]), || format!("{} {} differ from literal", a.to_hex(), b.to_hex()))?;
        let mass: Rational = (0..16).filter(|&w| lit[w]).map(|w| weights[w].clone()).sum();
        ensure(mass <= bk::probability(a, &weights) * bk::probability(b, &weights), || "literal BK fails".into())?;
    }
    within(t, Duration::from_secs(600))?;
    Ok(format!("{} increasing events; {}; 1000 pairs match the literal definition", events.len(), details.join("; ")))
}

fn percolation_monotone() -> Outcome {
    let cap = percolation::DEFAULT_EXACT_CAP;
    let mut rows = 0;
    let mut brute_rows = 0;
    for fx in lib(percolation::exact_fixtures())? {
        for r in lib(percolation::compare_exact(&fx, &[1, 2], &percolation::exact_p_grid(), cap))? {
            ensure(r.holds, || format!("{r:?}"))?;
            rows += 1;
        }
        for radius in [1, 2] {
            for mode in [Mode::Bond, Mode::Site] {
                for p in percolation::exact_p_grid() {
                    let up = brute_reach(&fx.map.source, mode, &p, fx.probe, radius);
                    let down = brute_reach(&fx.map.target, mode, &p, fx.base_probe(), radius);
                    let lp = lib(percolation::reach_exact(&fx.map.source, mode, &p, fx.probe, radius, cap))?;
                    let sp = lib(percolation::reach_exact(&fx.map.target, mode, &p, fx.base_probe(), radius, cap))?;
                    for (oracle, value) in [(up, &lp), (down, &sp)] {
                        if let Some(o) = oracle {
                            ensure(&o == value, || format!("{} r={radius} {mode:?} p={p}: oracle {o}, library {value}", fx.name))?;
                            brute_rows += 1;
                        }
                    }
                }
            }
        }
    }
    let mut mc_rows = 0;
    let mut worst = f64::INFINITY;
    for radius in [8, 16] {
        for fx in lib(percolation::mc_fixtures(radius))? {
            for r in lib(percolation::compare_mc(&fx, Mode::Bond, radius, &[0.3, 0.5, 0.7], 10_000, 8, 3.0))? {
                ensure(r.holds, || format!("{} {} r={radius} p={}: {:?} vs {:?}", r.fixture, r.model, r.p, r.lifted, r.base))?;
                let se = r.lifted.combined_se(&r.base);
                if se > 0.0 {
                    worst = worst.min((r.lifted.mean - r.base.mean) / se);
                }
                mc_rows += 1;
            }
        }
    }
    Ok(format!("{rows} exact rows ({brute_rows} matched by enumeration), {mc_rows} MC rows, worst z = {worst:.2}"))
}

fn cells() -> Outcome {
    let fixtures = vec![corner_grid(), lib(ring(9))?, lib(torus(5))?, lib(torus(6))?];
    for fx in &fixtures {
        let bad = fx.unexpected_violations();
        ensure(bad.is_empty(), || format!("{}: {bad:?}", fx.name))?;
    }
    for fx in &fixtures {
        let cd = &fx.cells;
        let boundary = cd.boundary_vertices();
        for draw in 0..1000u64 {
            let p = [0.3, 0.5, 0.7][draw as usize % 3];
            let sample = sample_augmented(cd, p, 0.5, 9, draw);
            let v0 = boundary[draw as usize % boundary.len()];
            let perc = percolation::PercSample { mode: Mode::Bond, open: sample.x.clone(), p, seed: 9, draw };
            let mut want: Vec<usize> =
                percolation::cluster_of(cd.graph(), &perc, v0).into_iter().filter(|&x| cd.is_boundary_vertex(x)).collect();
            want.sort_unstable();
            let mut got = lib(explore(cd, v0, &sample, Variant::Plain))?;
            got.sort_unstable();
            ensure(got == want, || format!("{} draw {draw}: plain exploration differs", fx.name))?;
            let k = lib(augmented::augmented_cluster(cd, &sample, &[v0]))?;
            let aug = lib(explore(cd, v0, &sample, Variant::Augmented))?;
            ensure(aug.iter().all(|&x| k[x] && cd.is_boundary_vertex(x)), || {
                format!("{} draw {draw}: augmented exploration leaves the cluster", fx.name)
            })?;
        }
    }
    let min = Rational::new(BigInt::one(), BigInt::from(2).pow(64));
    let grid = [q(1, 4), q(1, 2), q(3, 4)];
    let s_grid = [q(1, 4), q(1, 2), q(1, 1)];
    let mut certified = 0;
    let mut smallest: Option<Rational> = None;
    for fx in [corner_grid(), lib(ring(9))?] {
        let r = lib(certify_cells(&fx, None, &grid, &s_grid, &min, augmented::DEFAULT_RELATION_CAP))?;
        ensure(r.all_zero_delta_dominated, || format!("{}: delta 0 fails", fx.name))?;
        ensure(r.all_positive, || format!("{}: some delta is 0", fx.name))?;
        for row in &r.rows {
            let d = lib(stodom::rational::parse(&row.delta.delta))?;
            ensure(d > Rational::zero(), || "nonpositive delta".into())?;
            if smallest.as_ref().is_none_or(|s| &d < s) {
                smallest = Some(d);
            }
        }
        certified += r.rows.len();
    }
    Ok(format!(
        "4 fixtures audited, 4000 explorations matched, {certified} cell/boundary/(p,s) deltas positive (min {})",
        format(&smallest.unwrap_or_default())
    ))
}

fn augmented_gap() -> Outcome {
    let fx = lib(torus(5))?;
    let grid = [0.6, 0.7, 0.75, 0.8, 0.85];
    for s in [0.25, 0.5] {
        let r = lib(compare_pc_aug(&fx, &grid, s, 10, 2000, 1))?;
        ensure(r.coupled_monotone, || format!("s = {s}: coupling not monotone"))?;
    }
    let r = lib(compare_pc_aug(&fx, &grid, 1.0, 10, 10_000, 1))?;
    ensure(r.coupled_monotone, || "s = 1: coupling not monotone".into())?;
    let row = r.rows.iter().find(|x| x.p == 0.8).ok_or("missing p = 0.8")?;
    let se = row.augmented.combined_se(&row.plain);
    let z = (row.augmented.mean - row.plain.mean) / se;
    ensure(z > 3.0, || format!("gap {:.4} is {z:.2} SE", row.augmented.mean - row.plain.mean))?;
    Ok(format!(
        "monotone on every sample; at p = 0.8, s = 1: augmented {:.4} vs plain {:.4}, {z:.2} SE",
        row.augmented.mean, row.plain.mean
    ))
}

fn subdivision() -> Outcome {
    let cap = percolation::DEFAULT_EXACT_CAP;
    let mut checks = 0;
    for n in 1..=8 {
        let g = graph::ray(n + 3);
        let sub = augmented::subdivide(&g).graph;
        for k in 1..10 {
            let p = q(k, 10);
            let p2 = &p * &p;
            let lhs = lib(percolation::reach_exact(&sub, Mode::Bond, &p, 0, 2 * n, cap))?;
            let rhs = lib(percolation::reach_exact(&g, Mode::Bond, &p2, 0, n, cap))?;
            ensure(lhs == rhs, || format!("n = {n}, p = {p}: {lhs} vs {rhs}"))?;
            ensure(lhs == pow(&p, 2 * n), || format!("n = {n}: not p^(2n)"))?;
            checks += 1;
        }
    }
    Ok(format!("{checks} ray identities exact"))
}

fn determinism() -> Outcome {
    let runs: [&[&str]; 7] = [
        &["perco-compare", "--mc-radius", "8", "--trials", "2000", "--seed", "7"],
        &["aug-compare", "--trials", "2000", "--seed", "7"],
        &["verify", "search", "--trials", "100", "--seed", "7"],
        &["cycles", "--trials", "500", "--seed", "7"],
        &["reach", "--graph", "box:9x9", "--probe", "40", "--radius", "4", "--method", "mc", "--p", "0.5,0.6", "--seed", "7"],
        &["bk", "--exhaustive", "4", "--p", "1/3"],
        &["delta", "--fixture", "ring", "--size", "9"],
    ];
    let exe = env!("CARGO_BIN_EXE_stodom");
    for args in runs {
        let out = |jobs: &str| {
            Command::new(exe).args(args).args(["--jobs", jobs]).output().map_err(|e| e.to_string())
        };
        let (a, b) = (out("1")?, out("3")?);
        ensure(a.status.success(), || format!("{args:?}: {}", String::from_utf8_lossy(&a.stderr)))?;
        ensure(a.stdout == b.stdout && a.status.code() == b.status.code(), || format!("{args:?} differs across --jobs"))?;
    }
    Ok(format!("{} randomized or parallel commands byte-identical under --jobs 1 and 3", runs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("counterexample with 27 sections", section_counterexample),
        ("non-total labels", nontotal),
        ("deterministic strategy sweep", lakon),
        ("main coupling suite", main_theorem),
        ("one-column greedy", one_column),
        ("multilift", multilift),
        ("BK exhaustive", bk_exhaustive),
        ("percolation monotonicity", percolation_monotone),
        ("cell machinery", cells),
        ("augmented vs plain reach", augmented_gap),
        ("subdivision identity", subdivision),
        ("determinism across --jobs", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let r = f();
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(detail) => println!("criterion {:>2} PASS [{secs:.1}s] {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL [{secs:.1}s] {name}: {why}", i + 1)
            }
        }
    }
    println!("{} of 12 criteria passed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
