//! Acceptance criteria 1-10, one PASS/FAIL line each.
//!
//! Run with `cargo test -p lamapf-bench --test acceptance -- --nocapture` to see
//! the lines on success; they are printed with the failure report otherwise.
//! Criterion 8 runs a full 120-run benchmark and takes roughly 20 minutes.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use fixedbitset::FixedBitSet;
use lamapf_bench::generate::{gen_instance, random_shape, GenError};
use lamapf_bench::record::aggregate;
use lamapf_bench::run::{run_bench, run_one, BenchConfig, Method};
use lamapf_core::cbs::{la_cbs, LaCbs, SolveContext, SolveError, SolverKind};
use lamapf_core::decompose::{decompose, DecomposeConfig};
use lamapf_core::geometry::{Motion, Orientation, Pose, Shape, ShapeModel, SweepConfig};
use lamapf_core::instance::{AgentSpec, Instance};
use lamapf_core::layered::{layered_solve, solve_raw};
use lamapf_core::map::{distance_field, load_map, GridMap};
use lamapf_core::problem::Problem;
use lamapf_core::scc::{strongly_connected, Csr};
use lamapf_core::solution::{Solution, TimedPath};
use lamapf_core::validate::validate_solution;
use lamapf_testkit::graphs::{bfs_reaches, brute_graph, brute_tags, cluster_is_independent, levels_are_ordered};
use lamapf_testkit::joint::joint_optimal_soc;
use lamapf_testkit::mutual_reachability_classes;
use lamapf_testkit::random::{random_instance, random_map, RandomSpec};
use lamapf_testkit::raster::{fine_agents_collide, fine_hits_map};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LEGALITY_INSTANCES: usize = 200;
const LEGALITY_LIMIT: Duration = Duration::from_secs(300);
const EQUIVALENCE_INSTANCES: usize = 50;
const AVOID_SETS: usize = 100;
const GEOMETRY_SAMPLES: usize = 10_000;
const SCC_MAX_NODES: usize = 300;
const MICRO_BUDGET: Duration = Duration::from_secs(10);
const TREND_REPS: usize = 20;
const TREND_BUDGET_S: f64 = 10.0;
const TREND_LIMIT: Duration = Duration::from_secs(2 * 3600);
const DECOMPOSITION_LIMIT: Duration = Duration::from_secs(1);
const NEUTRALITY_TOLERANCE: f64 = 0.10;
const NEUTRALITY_TIMINGS: usize = 5;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

/// Every solution any criterion produced, with its validation outcome.
#[derive(Default)]
struct Soundness {
    solutions: usize,
    invalid: usize,
}

impl Soundness {
    fn check(&mut self, map: &GridMap, agents: &[AgentSpec], sol: &Solution) -> bool {
        let ok = validate_solution(map, agents, sol, &SweepConfig::default()).is_valid();
        self.solutions += 1;
        self.invalid += usize::from(!ok);
        ok
    }
}

fn maps_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../maps")
}

fn p(x: i32, y: i32, o: Orientation) -> Pose {
    Pose::new(x, y, o)
}

fn circle(id: usize, start: Pose, target: Pose) -> AgentSpec {
    AgentSpec { id, shape: Shape::Circle { radius: 0.4 }, start, target }
}

fn random_problems(seed: u64, count: usize, spec: &RandomSpec) -> Vec<Problem> {
    let sweep = SweepConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let (map, agents) = random_instance(&mut rng, spec, &sweep);
        if !agents.is_empty() {
            out.push(Problem::prepare(map, agents, &sweep).expect("generator keeps agents solvable"));
        }
    }
    out
}

fn legality() -> Verdict {
    let sweep = SweepConfig::default();
    let spec = RandomSpec { max_agents: 6, min_side: 4, max_side: 16, density: 0.15, rectangles: true, max_radius: 1.2 };
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut clusters = 0;
    for (i, pr) in random_problems(101, LEGALITY_INSTANCES, &spec).into_iter().enumerate() {
        let d = match decompose(&pr, &DecomposeConfig::default()) {
            Ok(d) => d,
            Err(e) => {
                failures.push(format!("#{i}: {e}"));
                continue;
            }
        };
        for (ci, cluster) in d.clusters.iter().enumerate() {
            clusters += 1;
            let levels: Vec<Vec<usize>> = d.levels.iter().filter(|l| l.cluster == ci).map(|l| l.agents.clone()).collect();
            if let Err(e) = cluster_is_independent(&pr.map, &pr.agents, cluster, &sweep).and_then(|()| levels_are_ordered(&pr.map, &pr.agents, cluster, &levels, &sweep)) {
                failures.push(format!("#{i}: {e}"));
            }
        }
    }
    let took = started.elapsed();
    verdict(
        failures.is_empty() && took < LEGALITY_LIMIT,
        format!("{LEGALITY_INSTANCES} instances, {clusters} clusters, {} failures, {took:.1?} (limit {LEGALITY_LIMIT:?}) {:?}", failures.len(), failures.first()),
    )
}

fn path_equivalence() -> Verdict {
    let sweep = SweepConfig::default();
    let spec = RandomSpec { max_agents: 4, min_side: 4, max_side: 12, density: 0.15, rectangles: true, max_radius: 1.2 };
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut compared, mut feasible, mut disagreements) = (0usize, 0usize, Vec::new());
    for pr in random_problems(201, EQUIVALENCE_INSTANCES, &spec) {
        let k = pr.agent_count();
        for a in &pr.agents {
            let g = &pr.graphs[a.id];
            let brute = brute_graph(&pr.map, a, &sweep);
            let tags = brute_tags(&brute, a, &pr.agents, &sweep);
            let own = [2 * a.id, 2 * a.id + 1];
            for _ in 0..AVOID_SETS {
                let avoid: BTreeSet<usize> = (0..2 * k).filter(|t| !own.contains(t) && rng.gen_bool(0.3)).collect();
                let mut bits = FixedBitSet::with_capacity(2 * k);
                bits.extend(avoid.iter().copied());
                let want = bfs_reaches(&brute, a.start, a.target, |q| tags[&q].is_disjoint(&avoid));
                let got = g.simplified.search_path_sat(&FixedBitSet::with_capacity(2 * k), &bits).is_some();
                compared += 1;
                feasible += usize::from(want);
                if got != want {
                    disagreements.push(format!("{} agent {} avoid {avoid:?}", pr.map.name(), a.id));
                }
            }
        }
    }
    verdict(disagreements.is_empty(), format!("{compared} searches ({feasible} feasible), {} disagreements {:?}", disagreements.len(), disagreements.first()))
}

fn random_motion(rng: &mut impl Rng, map: &GridMap) -> Motion {
    let at = p(rng.gen_range(0..map.width() as i32), rng.gen_range(0..map.height() as i32), Orientation::ALL[rng.gen_range(0..4)]);
    match rng.gen_range(0..4) {
        0 => Motion::At(at),
        1 => Motion::Transfer(at, at.forward()),
        2 => Motion::Transfer(at, at.turned(true)),
        _ => Motion::Transfer(at, at.turned(false)),
    }
}

#[derive(Default)]
struct FastPathTally {
    map_decided: usize,
    pair_decided: usize,
    disagreements: Vec<String>,
}

fn fast_path_kind(seed: u64, shape_parity: usize) -> FastPathTally {
    let sweep = SweepConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = FastPathTally::default();
    while tally.map_decided < GEOMETRY_SAMPLES || tally.pair_decided < GEOMETRY_SAMPLES {
        let (w, h) = (rng.gen_range(6..=16), rng.gen_range(6..=16));
        let map = random_map(&mut rng, w, h, 0.15);
        let df = distance_field(&map);
        let shape = random_shape(&mut rng, shape_parity);
        let model = ShapeModel::new(shape, sweep).unwrap();
        let other_parity = rng.gen_range(0..2);
        let other_shape = random_shape(&mut rng, other_parity);
        let other = ShapeModel::new(other_shape, sweep).unwrap();
        for _ in 0..20 {
            let m = random_motion(&mut rng, &map);
            if let Some(fast) = model.map_fast_verdict(m, &df) {
                tally.map_decided += 1;
                if fast != fine_hits_map(&shape, m, &map) {
                    tally.disagreements.push(format!("map {shape:?} {m:?} fast={fast}"));
                }
            }
            let o = m.origin();
            let near = p(o.x + rng.gen_range(-9..=9), o.y + rng.gen_range(-9..=9), Orientation::ALL[rng.gen_range(0..4)]);
            let om = match rng.gen_range(0..3) {
                0 => Motion::At(near),
                1 => Motion::Transfer(near, near.forward()),
                _ => Motion::Transfer(near, near.turned(rng.gen_bool(0.5))),
            };
            if let Some(fast) = model.pair_fast_verdict(m, &other, om) {
                tally.pair_decided += 1;
                if fast != fine_agents_collide(&shape, m, &other_shape, om) {
                    tally.disagreements.push(format!("pair {shape:?} {m:?} vs {other_shape:?} {om:?} fast={fast}"));
                }
            }
        }
    }
    tally
}

fn geometry_fast_paths() -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, parity) in [("circle", 0), ("rectangle", 1)] {
        let t = fast_path_kind(301 + parity as u64, parity);
        pass &= t.disagreements.is_empty();
        parts.push(format!("{name}: {} map + {} pair decisive, {} disagreements {:?}", t.map_decided, t.pair_decided, t.disagreements.len(), t.disagreements.first()));
    }
    verdict(pass, parts.join("; "))
}

fn scc_partition() -> Verdict {
    let spec = RandomSpec { max_agents: 4, min_side: 3, max_side: 9, density: 0.2, rectangles: true, max_radius: 1.2 };
    let (mut graphs, mut disagreements) = (0usize, 0usize);
    for pr in random_problems(401, 120, &spec) {
        for g in &pr.graphs {
            let sg = &g.subgraph;
            if sg.node_count() > SCC_MAX_NODES {
                continue;
            }
            graphs += 1;
            let dense: BTreeMap<u32, usize> = sg.nodes().iter().enumerate().map(|(i, &n)| (n, i)).collect();
            let all: Vec<(usize, usize)> = sg.edges().map(|(u, v)| (dense[&u], dense[&v])).collect();
            // plain condensation of the subgraph
            let (comp, count) = strongly_connected(&Csr::from_edges(dense.len(), &all));
            let classes = mutual_reachability_classes(dense.len(), &all);
            let got: BTreeSet<BTreeSet<usize>> = (0..count).map(|c| (0..dense.len()).filter(|&v| comp[v] == c).collect()).collect();
            disagreements += usize::from(got != classes.into_iter().collect());
            // components of the connectivity graph: equal-tag mutual reachability
            let same: Vec<(usize, usize)> = sg
                .edges()
                .filter(|&(u, v)| g.relations.tags(u) == g.relations.tags(v))
                .map(|(u, v)| (dense[&u], dense[&v]))
                .collect();
            let want: BTreeSet<BTreeSet<usize>> = mutual_reachability_classes(dense.len(), &same).into_iter().collect();
            let have: BTreeSet<BTreeSet<usize>> = g.full.components().iter().map(|c| c.members.iter().map(|n| dense[n]).collect()).collect();
            disagreements += usize::from(have != want);
        }
    }
    verdict(disagreements == 0 && graphs > 0, format!("{graphs} subgraphs (<= {SCC_MAX_NODES} nodes), {disagreements} disagreements"))
}

fn micro_maps() -> Vec<GridMap> {
    vec![
        GridMap::open("2x2", 2, 2),
        GridMap::open("2x3", 2, 3),
        GridMap::open("3x3", 3, 3),
        GridMap::from_rows("ring", &["...", ".@.", "..."]).unwrap(),
        GridMap::from_rows("bend", &["..@", "...", "@.."]).unwrap(),
        GridMap::from_rows("plus", &["@.@", "...", "@.@"]).unwrap(),
        GridMap::open("1x4", 4, 1),
        GridMap::from_rows("rooms", &["..@.", "....", ".@..", "@..."]).unwrap(),
    ]
}

fn micro_optimality(sound: &mut Soundness) -> Verdict {
    let sweep = SweepConfig::default();
    let (mut compared, mut unsolvable, mut mismatches, mut timeouts) = (0usize, 0usize, Vec::new(), Vec::new());
    for map in micro_maps() {
        let cells: Vec<(i32, i32)> = (0..map.height() as i32)
            .flat_map(|y| (0..map.width() as i32).map(move |x| (x, y)))
            .filter(|&(x, y)| map.is_passable(x, y))
            .collect();
        // every orientation on the tiny maps, a fixed heading on the larger ones
        let headings: Vec<Orientation> = if cells.len() <= 4 { Orientation::ALL.to_vec() } else { vec![Orientation::PosX] };
        let poses: Vec<Pose> = cells.iter().flat_map(|&(x, y)| headings.iter().map(move |&o| p(x, y, o))).collect();
        for &s0 in &poses {
            for &s1 in &poses {
                for &t0 in &poses {
                    for &t1 in &poses {
                        if s0.cell() == s1.cell() || t0.cell() == t1.cell() {
                            continue;
                        }
                        let agents = vec![circle(0, s0, t0), circle(1, s1, t1)];
                        let Some(best) = joint_optimal_soc(&map, &agents[0], &agents[1], &sweep) else {
                            unsolvable += 1;
                            continue;
                        };
                        let pr = Problem::prepare(map.clone(), agents.clone(), &sweep).unwrap();
                        let ctx = SolveContext { deadline: Some(Instant::now() + MICRO_BUDGET), ..Default::default() };
                        compared += 1;
                        match la_cbs(&pr.subgraphs(), &ctx) {
                            Ok(out) => {
                                sound.check(&map, &agents, &out.solution);
                                if out.solution.soc() != best {
                                    mismatches.push(format!("{} {agents:?}: cbs {} joint {best}", map.name(), out.solution.soc()));
                                }
                            }
                            Err(SolveError::Timeout(_)) => timeouts.push(format!("{} {s0}->{t0} {s1}->{t1} optimum {best}", map.name())),
                            Err(e) => mismatches.push(format!("{} {agents:?}: {e}", map.name())),
                        }
                    }
                }
            }
        }
    }
    verdict(
        mismatches.is_empty() && timeouts.is_empty(),
        format!(
            "{compared} solvable instances ({unsolvable} unsolvable skipped), {} wrong {:?}, {} over {MICRO_BUDGET:?} {:?}",
            mismatches.len(),
            mismatches.first(),
            timeouts.len(),
            timeouts.first()
        ),
    )
}

fn end_to_end(sound: &mut Soundness) -> Verdict {
    let spec = RandomSpec { max_agents: 6, min_side: 5, max_side: 12, density: 0.12, rectangles: true, max_radius: 1.0 };
    for pr in random_problems(601, 60, &spec) {
        let d = decompose(&pr, &DecomposeConfig::default()).unwrap();
        for kind in [SolverKind::Serial, SolverKind::Parallel] {
            let solver = LaCbs { kind };
            let deadline = || Some(Instant::now() + Duration::from_secs(2));
            if let Ok(out) = layered_solve(&pr, &d, &solver, deadline()) {
                sound.check(&pr.map, &pr.agents, &out.solution);
            }
            if let Ok(out) = solve_raw(&pr, &solver, deadline()) {
                sound.check(&pr.map, &pr.agents, &out.solution);
            }
        }
    }
    verdict(sound.invalid == 0 && sound.solutions > 0, format!("{} solutions validated across all suites, {} with findings", sound.solutions, sound.invalid))
}

fn figure_one() -> Verdict {
    let sweep = SweepConfig::default();
    let plus = GridMap::from_rows("plus", &["@.@", "...", "@.@"]).unwrap();
    let (s, e) = (Orientation::NegY, Orientation::PosX);
    let crossing = vec![circle(0, p(1, 2, s), p(1, 0, s)), circle(1, p(0, 1, e), p(2, 1, e))];
    let parking = vec![circle(0, p(1, 2, s), p(1, 1, s)), circle(1, p(0, 1, e), p(2, 1, e))];

    let a = Problem::prepare(plus.clone(), crossing.clone(), &sweep).unwrap();
    let da = decompose(&a, &DecomposeConfig::default()).unwrap();
    let b = Problem::prepare(plus.clone(), parking.clone(), &sweep).unwrap();
    let db = decompose(&b, &DecomposeConfig::default()).unwrap();
    let levels_b: Vec<Vec<usize>> = db.levels.iter().map(|l| l.agents.clone()).collect();
    let partitions = da.clusters == vec![vec![0], vec![1]] && levels_b == vec![vec![1], vec![0]];

    let stated = [
        ("A, a1 first", &crossing, vec![vec![p(1, 2, s), p(1, 1, s), p(1, 0, s)], vec![p(0, 1, e), p(0, 1, e), p(1, 1, e), p(2, 1, e)]]),
        ("A, a2 first", &crossing, vec![vec![p(1, 2, s), p(1, 2, s), p(1, 1, s), p(1, 0, s)], vec![p(0, 1, e), p(1, 1, e), p(2, 1, e)]]),
        ("B, a2 first", &parking, vec![vec![p(1, 2, s), p(1, 2, s), p(1, 1, s)], vec![p(0, 1, e), p(1, 1, e), p(2, 1, e)]]),
    ];
    let mut solutions = Vec::new();
    let mut all_valid = true;
    for (name, agents, paths) in stated {
        let sol = Solution::new(paths.into_iter().enumerate().map(|(i, poses)| TimedPath::new(i, poses)).collect());
        let report = validate_solution(&plus, agents, &sol, &sweep);
        all_valid &= report.is_valid();
        solutions.push(format!("{name}: {}", if report.is_valid() { "valid".to_string() } else { format!("{} findings", report.findings.len()) }));
    }
    verdict(
        partitions && all_valid,
        format!("clusters(A)={:?} levels(B)={levels_b:?} partitions {}; stated solutions: {}", da.clusters, if partitions { "match" } else { "differ" }, solutions.join(", ")),
    )
}

fn desk_trend(sound: &mut Soundness) -> Verdict {
    let cfg = BenchConfig {
        maps: vec![maps_dir().join("empty-16-16.map")],
        agents: vec![4, 8, 12],
        repetitions: TREND_REPS,
        methods: vec![Method::RawCbs, Method::LayeredCbs],
        budget_s: TREND_BUDGET_S,
        seed_base: 0,
        workers: 1,
    };
    let started = Instant::now();
    let records = match run_bench(&cfg, &SweepConfig::default()) {
        Ok(r) => r,
        Err(e) => return verdict(false, e.to_string()),
    };
    let took = started.elapsed();
    for r in records.iter().filter(|r| r.success || !r.valid) {
        sound.solutions += 1;
        sound.invalid += usize::from(!r.valid);
    }
    let stats = aggregate(&records);
    let find = |n: usize, m: Method| stats.iter().find(|a| a.agents == n && a.method == m.name()).expect("every cell ran");
    let mut pass = took < TREND_LIMIT;
    let mut parts = Vec::new();
    for n in [4, 8, 12] {
        let (raw, lay) = (find(n, Method::RawCbs), find(n, Method::LayeredCbs));
        pass &= lay.success_rate >= raw.success_rate;
        if n == 12 {
            pass &= lay.mean_time_s <= raw.mean_time_s;
        }
        parts.push(format!(
            "n={n} success {:.2}/{:.2} time {:.2}/{:.2}s",
            lay.success_rate, raw.success_rate, lay.mean_time_s, raw.mean_time_s
        ));
    }
    verdict(pass, format!("layered/raw: {}; {took:.0?} total", parts.join(", ")))
}

fn decomposition_speed() -> Verdict {
    let sweep = SweepConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(901);
    let mut maps = vec![load_map(&maps_dir().join("empty-16-16.map")).unwrap(), load_map(&maps_dir().join("empty-48-48.map")).unwrap()];
    maps.extend((0..3).map(|_| random_map(&mut rng, 48, 48, 0.1)));
    maps.push(random_map(&mut rng, 32, 32, 0.15));
    let (mut runs, mut skipped, mut worst, mut over) = (0usize, 0usize, Duration::ZERO, 0usize);
    for map in &maps {
        for n in [4, 8, 12, 16, 20] {
            for rep in 0..3 {
                let inst = match gen_instance(map, map.name(), n, 900 + n as u64 * 10 + rep, &sweep) {
                    Ok(i) => i,
                    Err(GenError::MapTooDense { .. }) => {
                        skipped += 1;
                        continue;
                    }
                    Err(e) => return verdict(false, e.to_string()),
                };
                let started = Instant::now();
                let Ok(pr) = Problem::prepare(map.clone(), inst.agents, &sweep) else {
                    skipped += 1;
                    continue;
                };
                if decompose(&pr, &DecomposeConfig::default()).is_err() {
                    return verdict(false, format!("decomposition failed on {} n={n}", map.name()));
                }
                let took = started.elapsed();
                runs += 1;
                worst = worst.max(took);
                over += usize::from(took >= DECOMPOSITION_LIMIT);
            }
        }
    }
    verdict(over == 0 && runs > 0, format!("{runs} instances ({skipped} not generable), slowest {worst:.1?} incl. graph building, {over} over {DECOMPOSITION_LIMIT:?}"))
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

fn corridor_swap(sound: &mut Soundness) -> Verdict {
    let sweep = SweepConfig::default();
    let map = GridMap::from_rows("corridor", &["@@.@@@.@@", "........."]).unwrap();
    let agents = vec![circle(0, p(0, 1, Orientation::PosX), p(8, 1, Orientation::PosX)), circle(1, p(8, 1, Orientation::NegX), p(0, 1, Orientation::NegX))];
    let pr = Problem::prepare(map.clone(), agents.clone(), &sweep).unwrap();
    let d = decompose(&pr, &DecomposeConfig::default()).unwrap();
    let one_level = d.levels.len() == 1 && d.levels[0].agents == vec![0, 1];
    let inst = Instance { map_ref: "corridor".into(), seed: 0, agents };
    let mut times: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut solved = true;
    for _ in 0..NEUTRALITY_TIMINGS {
        for m in [Method::RawCbs, Method::LayeredCbs] {
            let r = run_one(&map, &inst, m, Duration::from_secs(60), &sweep);
            solved &= r.record.success;
            if let Some(sol) = &r.solution {
                sound.check(&map, &inst.agents, sol);
            }
            times.entry(m.name()).or_default().push(r.record.time_s);
        }
    }
    let raw = median(times["raw-cbs"].clone());
    let lay = median(times["layered-cbs"].clone());
    let ratio = lay / raw;
    verdict(
        one_level && solved && ratio <= 1.0 + NEUTRALITY_TOLERANCE,
        format!("levels {:?}; median of {NEUTRALITY_TIMINGS}: layered {lay:.3}s raw {raw:.3}s ratio {ratio:.3} (limit {:.2})", d.level_sizes(), 1.0 + NEUTRALITY_TOLERANCE),
    )
}

#[test]
fn acceptance() {
    let mut sound = Soundness::default();
    let mut lines = Vec::new();
    let mut failed = Vec::new();
    let mut run = |n: usize, name: &str, f: &mut dyn FnMut(&mut Soundness) -> Verdict, sound: &mut Soundness| {
        let started = Instant::now();
        let v = panic::catch_unwind(AssertUnwindSafe(|| f(sound))).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        let line = format!("criterion {n:>2} {} {name}: {} [{:.1?}]", if v.pass { "PASS" } else { "FAIL" }, v.detail, started.elapsed());
        println!("{line}");
        lines.push(line);
        if !v.pass {
            failed.push(n);
        }
    };
    run(1, "legality oracles", &mut |_| legality(), &mut sound);
    run(2, "path equivalence", &mut |_| path_equivalence(), &mut sound);
    run(3, "geometry fast paths", &mut |_| geometry_fast_paths(), &mut sound);
    run(4, "scc partition", &mut |_| scc_partition(), &mut sound);
    run(5, "micro-scale optimality", &mut micro_optimality, &mut sound);
    run(7, "figure one golden", &mut |_| figure_one(), &mut sound);
    run(8, "desk-scale trend", &mut desk_trend, &mut sound);
    run(9, "decomposition speed", &mut |_| decomposition_speed(), &mut sound);
    run(10, "corridor swap neutrality", &mut corridor_swap, &mut sound);
    // soundness last, so it covers every solution produced above
    run(6, "end-to-end soundness", &mut end_to_end, &mut sound);
    println!("summary:\n{}", lines.join("\n"));
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
