//! Raw vs layered experiment runner.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use lamapf_core::cbs::{la_cbs, CbsStats, LaCbs, SolveContext, SolverKind};
use lamapf_core::decompose::{decompose, DecomposeConfig};
use lamapf_core::geometry::SweepConfig;
use lamapf_core::instance::Instance;
use lamapf_core::layered::layered_solve;
use lamapf_core::map::{distance_field, load_map, GridMap, MapError};
use lamapf_core::problem::{build_subgraphs, Problem};
use lamapf_core::solution::Solution;
use lamapf_core::subgraph::Subgraph;
use lamapf_core::validate::validate_solution;
use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::generate::{gen_instance, GenError};
use crate::record::BenchRecord;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Deserialize)]
#[serde(try_from = "String")]
pub enum Method {
    RawCbs,
    LayeredCbs,
    LayeredParallel,
}

impl Method {
    pub const ALL: [Method; 3] = [Self::RawCbs, Self::LayeredCbs, Self::LayeredParallel];

    pub fn name(self) -> &'static str {
        match self {
            Self::RawCbs => "raw-cbs",
            Self::LayeredCbs => "layered-cbs",
            Self::LayeredParallel => "layered-parallel",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| format!("unknown method `{s}` (raw-cbs, layered-cbs, layered-parallel)"))
    }
}

impl TryFrom<String> for Method {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

fn default_reps() -> usize {
    20
}

fn default_budget() -> f64 {
    60.0
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn default_workers() -> usize {
    1
}

/// Experiment grid, usually read from TOML.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    /// Map files; relative paths resolve against the config file's directory.
    pub maps: Vec<PathBuf>,
    pub agents: Vec<usize>,
    #[serde(default = "default_reps")]
    pub repetitions: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_budget")]
    pub budget_s: f64,
    #[serde(default)]
    pub seed_base: u64,
    /// Concurrent runs. Timings are only comparable with one worker per core.
    #[serde(default = "default_workers")]
    pub workers: usize,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("reading config: {0}")]
    Io(#[from] std::io::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("map {path}: {source}")]
    Map { path: PathBuf, source: MapError },
    #[error("map {map}, {agents} agents, seed {seed}: {source}")]
    Generate { map: String, agents: usize, seed: u64, source: GenError },
}

impl BenchConfig {
    pub fn from_toml(text: &str) -> Result<Self, BenchError> {
        let cfg: Self = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let mut cfg = Self::from_toml(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for m in &mut cfg.maps {
            if m.is_relative() {
                *m = base.join(&*m);
            }
        }
        Ok(cfg)
    }

    pub fn check(&self) -> Result<(), BenchError> {
        if !(self.budget_s.is_finite() && self.budget_s > 0.0) {
            return Err(BenchError::Config("budget_s must be positive".into()));
        }
        if self.agents.contains(&0) {
            return Err(BenchError::Config("agent counts must be positive".into()));
        }
        if self.workers == 0 {
            return Err(BenchError::Config("workers must be positive".into()));
        }
        Ok(())
    }
}

/// Seed of repetition `rep` for `agents` agents.
pub fn run_seed(seed_base: u64, agents: usize, rep: usize) -> u64 {
    seed_base.wrapping_add(agents as u64 * 1_000_003).wrapping_add(rep as u64)
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn blank(map: &GridMap, inst: &Instance, method: Method, budget: Duration) -> BenchRecord {
    BenchRecord {
        map: map.name().to_string(),
        agents: inst.agents.len(),
        method: method.name().to_string(),
        seed: inst.seed,
        success: false,
        valid: true,
        time_s: 0.0,
        budget_s: budget.as_secs_f64(),
        decomposition_rate: 1.0,
        subproblems: 1,
        prep_ms: 0.0,
        step1_ms: 0.0,
        step2_ms: 0.0,
        step3_ms: 0.0,
        step4_ms: 0.0,
        decomposition_ms: 0.0,
        high_expansions: 0,
        low_expansions: 0,
        makespan: None,
        soc: None,
        error: String::new(),
    }
}

/// Outcome of one run, with the solution kept for callers that want it.
pub struct RunResult {
    pub record: BenchRecord,
    pub solution: Option<Solution>,
}

/// Runs one method on one instance within `budget`, validating any solution.
pub fn run_one(map: &GridMap, inst: &Instance, method: Method, budget: Duration, sweep: &SweepConfig) -> RunResult {
    let started = Instant::now();
    let deadline = started + budget;
    let mut rec = blank(map, inst, method, budget);
    let mut stats = CbsStats::default();
    let result: Result<Solution, String> = match method {
        Method::RawCbs => {
            let df = distance_field(map);
            match build_subgraphs(map, &df, &inst.agents, sweep) {
                Err(e) => Err(e.to_string()),
                Ok(graphs) => {
                    rec.prep_ms = ms(started.elapsed());
                    let refs: Vec<&Subgraph> = graphs.iter().collect();
                    la_cbs(&refs, &SolveContext { deadline: Some(deadline), ..Default::default() })
                        .map(|o| {
                            stats = o.stats;
                            o.solution
                        })
                        .map_err(|e| {
                            stats = *e.stats();
                            e.to_string()
                        })
                }
            }
        }
        Method::LayeredCbs | Method::LayeredParallel => (|| {
            let p = Problem::prepare(map.clone(), inst.agents.clone(), sweep).map_err(|e| e.to_string())?;
            let left = deadline.saturating_duration_since(Instant::now());
            let d = decompose(&p, &DecomposeConfig { budget: left.min(DecomposeConfig::default().budget) }).map_err(|e| e.to_string())?;
            let t = &d.timings;
            rec.prep_ms = ms(t.prep);
            (rec.step1_ms, rec.step2_ms, rec.step3_ms, rec.step4_ms) = (ms(t.step1), ms(t.step2), ms(t.step3), ms(t.step4));
            rec.decomposition_ms = ms(started.elapsed());
            rec.decomposition_rate = d.rate();
            rec.subproblems = d.levels.len();
            let kind = if method == Method::LayeredCbs { SolverKind::Serial } else { SolverKind::Parallel };
            let out = layered_solve(&p, &d, &LaCbs { kind }, Some(deadline)).map_err(|e| {
                if let lamapf_core::layered::LayeredError::Timeout { stats: s, .. } = &e {
                    stats = *s;
                }
                e.to_string()
            })?;
            stats = out.stats;
            Ok(out.solution)
        })(),
    };
    let elapsed = started.elapsed();
    rec.time_s = elapsed.as_secs_f64();
    rec.high_expansions = stats.high_expansions;
    rec.low_expansions = stats.low_expansions;
    let solution = match result {
        Ok(sol) => {
            let report = validate_solution(map, &inst.agents, &sol, sweep);
            rec.valid = report.is_valid();
            if !rec.valid {
                rec.error = format!("invalid solution: {}", report.findings.len());
            }
            rec.success = rec.valid && elapsed <= budget;
            if rec.success {
                rec.makespan = Some(sol.makespan());
                rec.soc = Some(sol.soc());
            } else if rec.valid {
                rec.error = "over budget".into();
            }
            Some(sol)
        }
        Err(e) => {
            rec.error = e;
            None
        }
    };
    RunResult { record: rec, solution }
}

/// Generates every instance of the grid and runs each method on it.
/// Records come back in grid order regardless of worker count.
pub fn run_bench(cfg: &BenchConfig, sweep: &SweepConfig) -> Result<Vec<BenchRecord>, BenchError> {
    cfg.check()?;
    let budget = Duration::from_secs_f64(cfg.budget_s);
    let mut jobs = Vec::new();
    for path in &cfg.maps {
        let map = load_map(path).map_err(|source| BenchError::Map { path: path.clone(), source })?;
        let map_ref = path.file_name().map_or_else(|| path.display().to_string(), |f| f.to_string_lossy().into_owned());
        for &n in &cfg.agents {
            for rep in 0..cfg.repetitions {
                let seed = run_seed(cfg.seed_base, n, rep);
                let inst = gen_instance(&map, &map_ref, n, seed, sweep)
                    .map_err(|source| BenchError::Generate { map: map.name().to_string(), agents: n, seed, source })?;
                for &m in &cfg.methods {
                    jobs.push((map.clone(), inst.clone(), m));
                }
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build().map_err(|e| BenchError::Config(e.to_string()))?;
    Ok(pool.install(|| jobs.par_iter().map(|(map, inst, m)| run_one(map, inst, *m, budget, sweep).record).collect()))
}
