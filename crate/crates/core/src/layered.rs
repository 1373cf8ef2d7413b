//! Solving a decomposition one level at a time.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use thiserror::Error;

use crate::cbs::{CbsStats, ExternalPath, LevelSolver, SolveContext, SolveError, SolveOutcome, SolverKind};
use crate::decompose::{Decomposition, Level};
use crate::problem::Problem;
use crate::relation::SatTag;
use crate::solution::{first_pair_conflict, Solution, TimedPath};
use crate::subgraph::Subgraph;

#[derive(Debug, Error)]
pub enum LayeredError {
    #[error("level {level} {agents:?} could not be solved: {source}\n{certificates}")]
    LevelUnsolvable {
        level: usize,
        agents: Vec<usize>,
        source: SolveError,
        /// Human-readable avoid sets and witness lengths of the level's agents.
        certificates: String,
    },
    #[error("time budget exhausted at level {level}")]
    Timeout { level: usize, stats: CbsStats },
    #[error("no delay of level {level} avoids the earlier levels")]
    Merge { level: usize },
}

#[derive(Clone, Debug)]
pub struct LevelReport {
    pub agents: Vec<usize>,
    pub stats: CbsStats,
    /// Uniform start delay applied when merging; zero for serial solving.
    pub delay: usize,
}

#[derive(Clone, Debug)]
pub struct LayeredOutcome {
    pub solution: Solution,
    pub stats: CbsStats,
    pub levels: Vec<LevelReport>,
    pub wall: Duration,
}

/// Row-major cells covered by the start (or target) poses of `agents`.
fn endpoint_cells(p: &Problem, agents: impl Iterator<Item = usize>, targets: bool) -> FixedBitSet {
    let mut set = FixedBitSet::with_capacity(p.map.cell_count());
    for a in agents {
        let sg = p.subgraph(a);
        let node = if targets { sg.target() } else { sg.start() };
        set.extend(sg.node_cells(node).map(|c| p.map.cell_index(c.x, c.y)));
    }
    set
}

fn later_starts(p: &Problem, levels: &[Level], k: usize) -> FixedBitSet {
    endpoint_cells(p, levels[k + 1..].iter().flat_map(|l| l.agents.iter().copied()), false)
}

fn certificate_dump(d: &Decomposition, level: usize) -> String {
    let mut out = String::new();
    for c in d.certificates.iter().filter(|c| c.level == level) {
        let tags: Vec<String> = c.avoid_tags.ones().map(|i| SatTag::from_index(i).to_string()).collect();
        let _ = writeln!(out, "  agent {}: avoids {{{}}}, witness of {} steps", c.agent, tags.join(","), c.witness.0.len().saturating_sub(1));
    }
    out
}

fn level_error(d: &Decomposition, level: usize, source: SolveError) -> LayeredError {
    match source {
        SolveError::Timeout(stats) => LayeredError::Timeout { level, stats },
        source => LayeredError::LevelUnsolvable {
            level,
            agents: d.levels[level].agents.clone(),
            source,
            certificates: certificate_dump(d, level),
        },
    }
}

/// Solves the levels of `d` in order and combines them into one solution.
///
/// Serial solvers see earlier levels' paths as moving obstacles and keep off
/// later levels' starts. Parallel solvers solve every level in isolation,
/// keeping off earlier targets and later starts; the results are then
/// merged by delaying each level just enough.
pub fn layered_solve(p: &Problem, d: &Decomposition, solver: &dyn LevelSolver, deadline: Option<Instant>) -> Result<LayeredOutcome, LayeredError> {
    let started = Instant::now();
    let graphs = |level: &Level| -> Vec<&Subgraph> { level.agents.iter().map(|&a| p.subgraph(a)).collect() };
    let mut stats = CbsStats::default();
    let mut reports = Vec::with_capacity(d.levels.len());
    let solution = match solver.kind() {
        SolverKind::Serial => {
            let mut solution = Solution::default();
            for (k, level) in d.levels.iter().enumerate() {
                let external = solution
                    .paths()
                    .iter()
                    .map(|path| ExternalPath { model: p.subgraph(path.agent).model().clone(), path: path.clone() })
                    .collect();
                let ctx = SolveContext { blocked: later_starts(p, &d.levels, k), external, deadline };
                let out = solver.solve(&graphs(level), &ctx).map_err(|e| level_error(d, k, e))?;
                stats.absorb(&out.stats);
                reports.push(LevelReport { agents: level.agents.clone(), stats: out.stats, delay: 0 });
                solution.extend(out.solution);
            }
            solution
        }
        SolverKind::Parallel => {
            let outcomes: Vec<Result<SolveOutcome, SolveError>> = d
                .levels
                .par_iter()
                .enumerate()
                .map(|(k, level)| {
                    let mut blocked = later_starts(p, &d.levels, k);
                    blocked.union_with(&endpoint_cells(p, d.levels[..k].iter().flat_map(|l| l.agents.iter().copied()), true));
                    solver.solve(&graphs(level), &SolveContext { blocked, external: Vec::new(), deadline })
                })
                .collect();
            let mut parts = Vec::with_capacity(outcomes.len());
            for (k, out) in outcomes.into_iter().enumerate() {
                let out = out.map_err(|e| level_error(d, k, e))?;
                stats.absorb(&out.stats);
                parts.push(out);
            }
            let (solution, delays) = merge_results(p, parts.iter().map(|o| &o.solution))?;
            for ((level, out), delay) in d.levels.iter().zip(&parts).zip(delays) {
                reports.push(LevelReport { agents: level.agents.clone(), stats: out.stats, delay });
            }
            solution
        }
    };
    Ok(LayeredOutcome { solution, stats, levels: reports, wall: started.elapsed() })
}

/// Concatenates per-level solutions in order, giving each level the smallest
/// uniform start delay that keeps it clear of everything merged before it.
pub fn merge_results<'a>(p: &Problem, parts: impl Iterator<Item = &'a Solution>) -> Result<(Solution, Vec<usize>), LayeredError> {
    let mut merged: Vec<TimedPath> = Vec::new();
    let mut delays = Vec::new();
    for (k, part) in parts.enumerate() {
        // once every merged agent has stopped, further delay changes nothing
        let bound = merged.iter().map(|t| t.poses.len()).max().unwrap_or(0);
        let delay = (0..=bound)
            .find(|&d| {
                part.paths().iter().all(|path| {
                    let shifted = path.delayed(d);
                    let m = p.subgraph(path.agent).model();
                    merged.iter().all(|other| first_pair_conflict(m, &shifted, p.subgraph(other.agent).model(), other).is_none())
                })
            })
            .ok_or(LayeredError::Merge { level: k })?;
        merged.extend(part.paths().iter().map(|path| path.delayed(delay)));
        delays.push(delay);
    }
    Ok((Solution::new(merged), delays))
}

/// The undecomposed baseline: every agent in one solver call.
pub fn solve_raw(p: &Problem, solver: &dyn LevelSolver, deadline: Option<Instant>) -> Result<SolveOutcome, SolveError> {
    solver.solve(&p.subgraphs(), &SolveContext { deadline, ..Default::default() })
}
