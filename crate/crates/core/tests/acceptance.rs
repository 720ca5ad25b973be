//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use ndarray::{array, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use topotrack::eval::similarity;
use topotrack::field::{gaussian_mixture, GaussianSpec, ScalarField};
use topotrack::fixtures::{appearance_sequence, removal_pair, removed_peak, rotating_cycle};
use topotrack::mergetree::{build_merge_tree, grid_neighbors, Connectivity, Direction, NodeKind};
use topotrack::network::{encode, MeasureNetwork, StrategyConfig};
use topotrack::stability::{run_stability_experiment, tightness_example, StabilityConfig, VertexHeights};
use topotrack::tracking::{
    adaptive_m, bijective_matches, detect, match_features, run_pipeline, Trajectory, TrajectoryPoint,
    TrackingConfig,
};
use topotrack::transport::{gw_loss, gw_loss_fast, interpolation_check, solve_gw, solve_pfgw, SolverParams};

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_net(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> MeasureNetwork<f64> {
    let mut w = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..i {
            let x = rng.gen_range(0.0..2.0);
            w[[i, j]] = x;
            w[[j, i]] = x;
        }
    }
    let raw: Array1<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let p = &raw / raw.sum();
    let attrs = Array2::from_shape_fn((n, dim), |_| rng.gen_range(0.0..1.0));
    MeasureNetwork::new(p, w, Some(attrs), vec![]).unwrap()
}

fn coupling_feasibility() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for k in 0..500 {
        let (n1, n2) = (rng.gen_range(1..=20), rng.gen_range(1..=20));
        let a = random_net(&mut rng, n1, 2);
        let b = random_net(&mut rng, n2, 2);
        let m = 0.5 + 0.1 * rng.gen_range(0..=5) as f64;
        let alpha = rng.gen_range(0.0..=1.0);
        let r = solve_pfgw(&a, &b, &SolverParams::new(alpha, m)).map_err(|e| format!("solve {k}: {e}"))?;
        let c = r.coupling.matrix();
        ensure(c.iter().all(|&x| x >= 0.0), || format!("solve {k}: negative entry"))?;
        for (i, row) in c.rows().into_iter().enumerate() {
            worst = worst.max(row.sum() - a.p()[i]);
        }
        for (j, col) in c.columns().into_iter().enumerate() {
            worst = worst.max(col.sum() - b.p()[j]);
        }
        ensure(worst <= 1e-9, || format!("solve {k}: marginal exceeded by {worst:e}"))?;
        let total = c.sum();
        ensure((total - m).abs() <= 1e-9, || format!("solve {k}: mass {total} for m = {m}"))?;
        ensure(r.objective_trace.windows(2).all(|w| w[1] <= w[0]), || {
            format!("solve {k}: objective trace increases")
        })?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("500 solves in {elapsed:.2?}, worst marginal excess {worst:.1e}"))
}

/// Full quadruple sum for `[[t, 1/2 - t], [1/2 - t, t]]`.
fn two_by_two_objective(w1: &Array2<f64>, w2: &Array2<f64>, t: f64) -> f64 {
    let c = array![[t, 0.5 - t], [0.5 - t, t]];
    let mut s = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    s += (w1[[i, k]] - w2[[j, l]]).powi(2) * c[[i, j]] * c[[k, l]];
                }
            }
        }
    }
    s
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_loss = 0.0f64;
    for _ in 0..100 {
        let (n1, n2) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
        let a = random_net(&mut rng, n1, 1);
        let b = random_net(&mut rng, n2, 1);
        let c = Array2::from_shape_fn((n1, n2), |(i, j)| a.p()[i] * b.p()[j] * rng.gen_range(0.0..1.0));
        let slow = gw_loss(c.view(), a.w().view(), b.w().view(), 2.0).map_err(|e| e.to_string())?;
        let fast = gw_loss_fast(c.view(), a.w().view(), b.w().view()).map_err(|e| e.to_string())?;
        worst_loss = worst_loss.max((slow - fast).abs());
    }
    ensure(worst_loss <= 1e-10, || format!("fast loss off by {worst_loss:e}"))?;
    let mut worst_grid = 0.0f64;
    for _ in 0..50 {
        let (x, y) = (rng.gen_range(0.0..3.0), rng.gen_range(0.0..3.0));
        let w1 = array![[0.0, x], [x, 0.0]];
        let w2 = array![[0.0, y], [y, 0.0]];
        let p = Array1::from(vec![0.5, 0.5]);
        let a = MeasureNetwork::new(p.clone(), w1.clone(), None, vec![]).unwrap();
        let b = MeasureNetwork::new(p, w2.clone(), None, vec![]).unwrap();
        let r = solve_gw(&a, &b, &SolverParams::default()).map_err(|e| e.to_string())?;
        let oracle = (0..=10_000)
            .map(|k| two_by_two_objective(&w1, &w2, 0.5 * k as f64 / 10_000.0))
            .fold(f64::INFINITY, f64::min);
        worst_grid = worst_grid.max((r.objective - oracle).abs());
    }
    ensure(worst_grid <= 1e-6, || format!("2x2 solver differs from grid search by {worst_grid:e}"))?;
    Ok(format!("loss gap {worst_loss:.1e}, 2x2 grid gap {worst_grid:.1e}"))
}

fn interpolation_endpoints() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for k in 0..50 {
        let a = random_net(&mut rng, 5, 2);
        let b = random_net(&mut rng, 5, 2);
        let rep = interpolation_check(&a, &b, 2.0).map_err(|e| format!("pair {k}: {e}"))?;
        worst = worst.max(rep.max_error());
    }
    ensure(worst <= 1e-6, || format!("endpoint error {worst:e}"))?;
    Ok(format!("50 pairs, max endpoint error {worst:.1e}"))
}

fn removal_reproduction() -> Outcome {
    let (f, g) = removal_pair().map_err(|e| e.to_string())?;
    let conn = Connectivity::default();
    let ta = build_merge_tree(&f, Direction::Split, conn).map_err(|e| e.to_string())?;
    let tb = build_merge_tree(&g, Direction::Split, conn).map_err(|e| e.to_string())?;
    ensure(ta.len() == 10 && tb.len() == 8, || format!("tree sizes {} and {}", ta.len(), tb.len()))?;
    let cfg = StrategyConfig::default();
    let a = encode(&ta, &cfg).map_err(|e| e.to_string())?;
    let b = encode(&tb, &cfg).map_err(|e| e.to_string())?;
    let r = solve_pfgw(&a, &b, &SolverParams::new(0.5, 0.8)).map_err(|e| e.to_string())?;
    let c = r.coupling.matrix();
    let zero: Vec<usize> = (0..c.nrows()).filter(|&i| c.row(i).iter().all(|&x| x == 0.0)).collect();
    ensure(zero.len() == 2, || format!("zero rows {zero:?}"))?;

    // the removed bump's maximum and the saddle joining it to the rest
    let peak = removed_peak();
    let leaf = a
        .meta()
        .iter()
        .position(|m| m.kind == NodeKind::Leaf && m.coords == peak.center)
        .ok_or("removed peak is not a leaf of the first tree")?;
    let saddle = ta.parent(a.meta()[leaf].node_id).ok_or("removed peak has no parent")?;
    let saddle_row = a.meta().iter().position(|m| m.node_id == saddle).ok_or("saddle missing")?;
    let mut expected = vec![leaf, saddle_row];
    expected.sort_unstable();
    ensure(zero == expected, || format!("zero rows {zero:?}, removed pair at rows {expected:?}"))?;
    let (pairs, _, _) = bijective_matches(c);
    ensure(pairs.len() == 8, || format!("{} bijective pairs", pairs.len()))?;
    Ok(format!("zero rows {zero:?} = removed pair, {} bijective pairs", pairs.len()))
}

fn stability_suite() -> Outcome {
    let start = Instant::now();
    let config = StabilityConfig::default();
    let rep = run_stability_experiment(&config).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(rep.records.len() == 200, || format!("{} records", rep.records.len()))?;
    let mut count = 0;
    for r in &rep.records {
        let v = r.violations(1e-9);
        if !v.is_empty() {
            count += 1;
            eprintln!("  instance {} at iota {}: {v:?}", r.instance_id, r.iota);
        }
        // re-derived here from the recorded norm
        let v2 = 256.0f64;
        let tight = 0.5 * v2.sqrt() * r.norm;
        let loose = 0.5 * v2 * r.norm;
        let sp = (v2 + 2.0) * r.norm;
        if (tight - r.tight_bound).abs() > 1e-12 * tight.max(1.0)
            || (loose - r.loose_bound).abs() > 1e-12 * loose.max(1.0)
            || (sp - r.sp_bound).abs() > 1e-12 * sp.max(1.0)
        {
            return Err(format!("instance {}: bound values disagree with the formulas", r.instance_id));
        }
    }
    ensure(count == 0, || format!("{count} records violate a bound"))?;
    ensure(elapsed < Duration::from_secs(300), || format!("took {elapsed:?}"))?;
    Ok(format!("200 records, 0 violations, {elapsed:.1?}"))
}

fn tightness() -> Outcome {
    let mut parts = Vec::new();
    for (n, tol) in [(100usize, 0.02), (1000, 0.002)] {
        let r = tightness_example(n, 2.0).map_err(|e| e.to_string())?;
        ensure(r.constraint_residual.abs() <= 1e-12, || format!("n = {n}: residual {:e}", r.constraint_residual))?;
        ensure(r.balanced, || format!("n = {n}: not balanced"))?;
        ensure((r.distance - r.predicted_distance).abs() <= 1e-9 * r.predicted_distance, || {
            format!("n = {n}: measured {} vs closed form {}", r.distance, r.predicted_distance)
        })?;
        let rel = (r.ratio_over_v2 - 0.25).abs() / 0.25;
        ensure(rel <= tol, || format!("n = {n}: ratio {} is {:.3}% from 1/4", r.ratio_over_v2, 100.0 * rel))?;
        parts.push(format!("n={n}: ratio {:.6} ({:.3}% off)", r.ratio_over_v2, 100.0 * rel));
    }
    Ok(parts.join(", "))
}

/// Bottleneck shortest paths from `src`: the least possible maximum of `f`
/// along a grid path to each vertex.
fn minimax_from(f: &ScalarField<f64>, conn: Connectivity, src: usize) -> Vec<f64> {
    let vals = f.values();
    let mut best = vec![f64::INFINITY; vals.len()];
    let mut heap = BinaryHeap::new();
    best[src] = vals[src];
    heap.push(Reverse((ordered(vals[src]), src)));
    let mut nbrs = Vec::new();
    while let Some(Reverse((key, v))) = heap.pop() {
        if key > ordered(best[v]) {
            continue;
        }
        nbrs.clear();
        grid_neighbors(f.dims(), conn, v, &mut nbrs);
        for &w in &nbrs {
            let cand = best[v].max(vals[w]);
            if cand < best[w] {
                best[w] = cand;
                heap.push(Reverse((ordered(cand), w)));
            }
        }
    }
    best
}

/// Order-preserving integer key for finite floats.
fn ordered(x: f64) -> i64 {
    let b = x.to_bits() as i64;
    if b < 0 {
        b ^ i64::MAX
    } else {
        b
    }
}

fn lemma_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let conn = Connectivity::default();
    let mut pairs = 0usize;
    for k in 0..20 {
        // every other field is quantized to create plateaus
        let values: Vec<f64> = (0..144)
            .map(|_| {
                let x: f64 = rng.gen_range(-1.0..1.0);
                if k % 2 == 1 {
                    (x * 5.0).round() / 5.0
                } else {
                    x
                }
            })
            .collect();
        let f = ScalarField::from_values(vec![12, 12], values).unwrap();
        let tree = build_merge_tree(&f, Direction::Join, conn).map_err(|e| e.to_string())?;
        let h = VertexHeights::new(&tree, f.values()).map_err(|e| e.to_string())?;
        for v in 0..144 {
            let oracle = minimax_from(&f, conn, v);
            for (w, &o) in oracle.iter().enumerate() {
                let got = h.get(v, w);
                ensure(got == o, || format!("field {k}: ({v}, {w}) gives {got}, oracle {o}"))?;
                pairs += 1;
            }
        }
    }
    Ok(format!("20 fields, {pairs} vertex pairs equal"))
}

fn point(t: i64, v: usize) -> TrajectoryPoint {
    TrajectoryPoint {
        t,
        node: 0,
        vertex: v,
        coords: vec![0.0, 0.0],
        f: 0.0,
    }
}

fn traj(id: usize, elems: &[(i64, usize)]) -> Trajectory {
    Trajectory {
        id,
        kind: NodeKind::Leaf,
        points: elems.iter().map(|&(t, v)| point(t, v)).collect(),
    }
}

fn tracking_fixtures() -> Outcome {
    let fields = appearance_sequence().map_err(|e| e.to_string())?;
    let out = run_pipeline(&fields, &TrackingConfig::default()).map_err(|e| e.to_string())?;
    let mut lengths: Vec<(Vec<f64>, usize)> = out
        .trajectories
        .iter()
        .map(|t| (t.points[0].coords.clone(), t.len()))
        .collect();
    lengths.sort_by(|a, b| a.0[0].total_cmp(&b.0[0]));
    let expected = vec![(vec![16.0, 16.0], 3), (vec![30.0, 48.0], 2), (vec![48.0, 18.0], 2)];
    ensure(lengths == expected, || format!("trajectories {lengths:?}"))?;

    let merge_step = 2;
    let fields = rotating_cycle(5, merge_step).map_err(|e| e.to_string())?;
    let out = run_pipeline(&fields, &TrackingConfig::default()).map_err(|e| e.to_string())?;
    let set = &out.matches[merge_step - 1];
    let target = &out.frames[merge_step];
    let mut merges = 0;
    let mut gap = 0.0f64;
    for (j, node) in target.nodes.iter().enumerate() {
        if node.kind != NodeKind::Leaf {
            continue;
        }
        let incoming: Vec<f64> = set.coupling.column(j).iter().copied().filter(|&x| x > 0.0).collect();
        if let [x, y] = incoming[..] {
            merges += 1;
            gap = gap.max((x - y).abs());
        }
    }
    ensure(merges > 0, || "no merge node with two incoming entries".into())?;
    ensure(gap <= 1e-6, || format!("incoming entries differ by {gap:e}"))?;

    let a = vec![traj(0, &[(0, 1), (1, 1), (2, 1), (3, 1)]), traj(1, &[(0, 5), (1, 7)])];
    let b = vec![traj(0, &[(0, 1), (1, 1), (2, 1), (3, 1)]), traj(1, &[(1, 7), (2, 9)])];
    let s = similarity(&a, &b);
    ensure(s.s == 2.0 / 3.0 && s.s_w == 7.0 / 9.0, || format!("S = {}, S_W = {}", s.s, s.s_w))?;
    Ok(format!(
        "lengths 3/2/2, {merges} merge nodes with equal inflow (gap {gap:.1e}), S = 2/3, S_W = 7/9"
    ))
}

/// Lattice of bumps with jittered amplitudes; about 30 maxima.
fn lattice(seed: u64) -> ScalarField<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut specs = Vec::new();
    for i in 0..6 {
        for j in 0..5 {
            let c = vec![
                6.0 + 10.4 * i as f64 + rng.gen_range(-1.5..1.5),
                7.0 + 12.5 * j as f64 + rng.gen_range(-1.5..1.5),
            ];
            specs.push(GaussianSpec::isotropic(c, rng.gen_range(0.4..1.0), 2.5));
        }
    }
    gaussian_mixture(&specs, &[64, 64], &[0.0, 0.0], &[1.0, 1.0]).unwrap()
}

fn desk_runtime() -> Outcome {
    let config = TrackingConfig {
        epsilon: 0.0,
        ..TrackingConfig::default()
    };
    let opts = config.options(64.0f64.hypot(64.0));
    let mut slowest = Duration::ZERO;
    let mut slowest_adaptive = Duration::ZERO;
    let mut largest = 0;
    for seed in 0..5 {
        let a = detect(&lattice(seed), &config).map_err(|e| e.to_string())?;
        let b = detect(&lattice(seed + 50), &config).map_err(|e| e.to_string())?;
        ensure(a.len() <= 60 && b.len() <= 60, || format!("trees of {} and {} nodes", a.len(), b.len()))?;
        largest = largest.max(a.len()).max(b.len());
        let start = Instant::now();
        match_features(&a, &b, &opts.params(config.alpha, 0.9)).map_err(|e| e.to_string())?;
        slowest = slowest.max(start.elapsed());
        let start = Instant::now();
        // a zero bound forces the full grid
        adaptive_m(&a, &b, config.alpha, 0.0, &config.m_grid, &opts).map_err(|e| e.to_string())?;
        slowest_adaptive = slowest_adaptive.max(start.elapsed());
    }
    ensure(slowest <= Duration::from_millis(50), || format!("slowest match {slowest:?}"))?;
    ensure(slowest_adaptive <= Duration::from_secs(3), || format!("slowest adaptive scan {slowest_adaptive:?}"))?;
    Ok(format!(
        "trees up to {largest} nodes: match {slowest:.2?}, adaptive 51-point scan {slowest_adaptive:.2?}"
    ))
}

fn main() {
    let checks: [Check; 9] = [
        ("coupling feasibility", coupling_feasibility),
        ("oracle equivalence", oracle_equivalence),
        ("interpolation endpoints", interpolation_endpoints),
        ("removed extremum-saddle pair", removal_reproduction),
        ("stability bounds", stability_suite),
        ("tightness construction", tightness),
        ("merge height oracle", lemma_oracle),
        ("tracking fixtures", tracking_fixtures),
        ("desk-scale runtime", desk_runtime),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
