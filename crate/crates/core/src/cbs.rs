//! Conflict-based search for shaped agents with vertex and transfer constraints.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::sync::Arc;
use std::time::{Duration, Instant};

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::geometry::{Cell, ShapeModel};
use crate::solution::{detect_first_conflict, first_pair_conflict, Conflict, Solution, TimedPath};
use crate::subgraph::{NodeId, Subgraph, UNREACHABLE};

/// A path fixed by an earlier solve that the current agents must keep clear of.
#[derive(Clone, Debug)]
pub struct ExternalPath {
    pub model: Arc<ShapeModel>,
    pub path: TimedPath,
}

/// Environment of one solver call.
#[derive(Clone, Debug, Default)]
pub struct SolveContext {
    /// Map cells (row-major index) no footprint may touch. Empty means none.
    pub blocked: FixedBitSet,
    pub external: Vec<ExternalPath>,
    pub deadline: Option<Instant>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CbsStats {
    pub high_expansions: u64,
    pub low_expansions: u64,
    pub wall: Duration,
}

impl CbsStats {
    pub fn absorb(&mut self, other: &CbsStats) {
        self.high_expansions += other.high_expansions;
        self.low_expansions += other.low_expansions;
        self.wall += other.wall;
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum SolveError {
    #[error("time budget exhausted")]
    Timeout(CbsStats),
    #[error("constraint tree exhausted without a solution")]
    Exhausted(CbsStats),
    #[error("agent {agent} has no path in this context")]
    Infeasible { agent: usize, stats: CbsStats },
}

impl SolveError {
    pub fn stats(&self) -> &CbsStats {
        match self {
            Self::Timeout(s) | Self::Exhausted(s) | Self::Infeasible { stats: s, .. } => s,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub solution: Solution,
    pub stats: CbsStats,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Constraint {
    /// Agent may not be at `node` at time `t`.
    Vertex { agent: usize, node: NodeId, t: usize },
    /// Agent may not move `from -> to` between `t` and `t + 1`.
    Transfer { agent: usize, from: NodeId, to: NodeId, t: usize },
}

impl Constraint {
    pub fn agent(&self) -> usize {
        match *self {
            Self::Vertex { agent, .. } | Self::Transfer { agent, .. } => agent,
        }
    }
}

/// Cells occupied by external paths, per step.
struct Reservations {
    width: usize,
    at_start: FixedBitSet,
    steps: Vec<FixedBitSet>,
    rest: FixedBitSet,
}

impl Reservations {
    fn build(width: usize, height: usize, external: &[ExternalPath]) -> Self {
        let cells = width * height;
        let end = external.iter().map(|e| e.path.poses.len() - 1).max().unwrap_or(0);
        let idx = |c: Cell| c.y as usize * width + c.x as usize;
        let inside = |c: &Cell| c.x >= 0 && c.y >= 0 && (c.x as usize) < width && (c.y as usize) < height;
        let mut at_start = FixedBitSet::with_capacity(cells);
        let mut steps = vec![FixedBitSet::with_capacity(cells); end];
        let mut rest = FixedBitSet::with_capacity(cells);
        for e in external {
            at_start.extend(e.model.pose_cells(e.path.pose_at(0)).filter(inside).map(idx));
            for (t, step) in steps.iter_mut().enumerate() {
                let cells = e.model.motion_cells(e.path.motion_at(t)).expect("external paths use legal actions");
                step.extend(cells.filter(inside).map(idx));
            }
            rest.extend(e.model.pose_cells(e.path.last()).filter(inside).map(idx));
        }
        Self { width, at_start, steps, rest }
    }

    fn end(&self) -> usize {
        self.steps.len()
    }

    fn during(&self, t: usize) -> &FixedBitSet {
        self.steps.get(t).unwrap_or(&self.rest)
    }

    fn index(&self, c: Cell) -> usize {
        c.y as usize * self.width + c.x as usize
    }

    fn hits(&self, set: &FixedBitSet, cells: impl Iterator<Item = Cell>) -> bool {
        if set.is_clear() {
            return false;
        }
        cells.into_iter().any(|c| set.contains(self.index(c)))
    }
}

#[derive(Default)]
struct AgentConstraints {
    vertex: HashSet<(NodeId, usize)>,
    transfer: HashSet<(NodeId, NodeId, usize)>,
    /// First step from which no constraint applies.
    clear_from: usize,
}

impl AgentConstraints {
    fn collect<'a>(agent: usize, all: impl Iterator<Item = &'a Constraint>) -> Self {
        let mut out = Self::default();
        for c in all {
            match *c {
                Constraint::Vertex { agent: a, node, t } if a == agent => {
                    out.vertex.insert((node, t));
                    out.clear_from = out.clear_from.max(t + 1);
                }
                Constraint::Transfer { agent: a, from, to, t } if a == agent => {
                    out.transfer.insert((from, to, t));
                    out.clear_from = out.clear_from.max(t + 1);
                }
                _ => {}
            }
        }
        out
    }
}

struct LowLevel<'a> {
    res: &'a Reservations,
    blocked: &'a FixedBitSet,
    deadline: Option<Instant>,
    expansions: u64,
}

enum LowResult {
    Found(TimedPath),
    NoPath,
    Timeout,
}

impl LowLevel<'_> {
    fn blocked_hit(&self, cells: impl Iterator<Item = Cell>) -> bool {
        self.res.hits(self.blocked, cells)
    }

    fn move_ok(&self, sg: &Subgraph, cons: &AgentConstraints, u: NodeId, v: NodeId, t: usize) -> bool {
        if cons.vertex.contains(&(v, t + 1)) || cons.transfer.contains(&(u, v, t)) {
            return false;
        }
        let cells = sg.transfer_cells(u, v);
        !self.blocked_hit(cells.clone()) && !self.res.hits(self.res.during(t), cells)
    }

    /// Space-time A* from start to a target it can stay at forever.
    fn search(&mut self, sg: &Subgraph, cons: &AgentConstraints) -> LowResult {
        let (start, target) = (sg.start(), sg.target());
        if cons.vertex.contains(&(start, 0))
            || self.blocked_hit(sg.node_cells(start))
            || self.res.hits(&self.res.at_start, sg.node_cells(start))
        {
            return LowResult::NoPath;
        }
        if self.blocked_hit(sg.node_cells(target)) || self.res.hits(&self.res.rest, sg.node_cells(target)) {
            return LowResult::NoPath;
        }
        let mut rest_from = 0;
        for &(n, t) in &cons.vertex {
            if n == target {
                rest_from = rest_from.max(t + 1);
            }
        }
        for &(a, b, t) in &cons.transfer {
            if a == target && b == target {
                rest_from = rest_from.max(t + 1);
            }
        }
        for t in (0..self.res.end()).rev() {
            if self.res.hits(&self.res.steps[t], sg.node_cells(target)) {
                rest_from = rest_from.max(t + 1);
                break;
            }
        }
        let settled = rest_from.max(self.res.end()).max(cons.clear_from);
        let horizon = settled + 4 * sg.node_count();
        let h = |n: NodeId, t: usize| -> usize {
            let d = sg.distance_to_target(n);
            (d as usize).max(rest_from.saturating_sub(t))
        };
        if sg.distance_to_target(start) == UNREACHABLE {
            return LowResult::NoPath;
        }
        // arena of (node, t, parent)
        let mut arena: Vec<(NodeId, usize, usize)> = vec![(start, 0, usize::MAX)];
        let mut heap = BinaryHeap::new();
        // best arrival time per state; states past `settled` are time-independent
        let mut best: HashMap<(NodeId, usize), usize> = HashMap::new();
        best.insert((start, 0), 0);
        heap.push(Reverse((h(start, 0), h(start, 0), 0usize)));
        while let Some(Reverse((_, _, idx))) = heap.pop() {
            self.expansions += 1;
            if self.expansions.is_multiple_of(1024) && self.deadline.is_some_and(|d| Instant::now() >= d) {
                return LowResult::Timeout;
            }
            let (u, t, _) = arena[idx];
            if best.get(&(u, t.min(settled))).is_some_and(|&b| b < t) {
                continue;
            }
            if u == target && t >= rest_from {
                let mut poses = Vec::with_capacity(t + 1);
                let mut cur = idx;
                while cur != usize::MAX {
                    poses.push(sg.pose_of(arena[cur].0));
                    cur = arena[cur].2;
                }
                poses.reverse();
                return LowResult::Found(TimedPath::new(sg.agent(), poses));
            }
            if t >= horizon {
                continue;
            }
            for &v in std::iter::once(&u).chain(sg.successors(u)) {
                if sg.distance_to_target(v) == UNREACHABLE || !self.move_ok(sg, cons, u, v, t) {
                    continue;
                }
                let key = (v, (t + 1).min(settled));
                if best.get(&key).is_some_and(|&b| b <= t + 1) {
                    continue;
                }
                best.insert(key, t + 1);
                arena.push((v, t + 1, idx));
                let hv = h(v, t + 1);
                heap.push(Reverse((t + 1 + hv, hv, arena.len() - 1)));
            }
        }
        LowResult::NoPath
    }
}

struct HighNode {
    constraints: Vec<Constraint>,
    paths: Vec<Arc<TimedPath>>,
}

/// Optimal (sum of costs) joint paths for `agents` under `ctx`.
pub fn la_cbs(agents: &[&Subgraph], ctx: &SolveContext) -> Result<SolveOutcome, SolveError> {
    let started = Instant::now();
    let mut stats = CbsStats::default();
    let finish = |mut s: CbsStats| {
        s.wall = started.elapsed();
        s
    };
    if agents.is_empty() {
        return Ok(SolveOutcome { solution: Solution::default(), stats: finish(stats) });
    }
    let (w, h) = (agents[0].width(), agents[0].height());
    let res = Reservations::build(w, h, &ctx.external);
    let empty = FixedBitSet::with_capacity(w * h);
    let blocked = if ctx.blocked.is_clear() { &empty } else { &ctx.blocked };
    let mut low = LowLevel { res: &res, blocked, deadline: ctx.deadline, expansions: 0 };
    let models: Vec<&ShapeModel> = agents.iter().map(|s| s.model().as_ref()).collect();
    let local: HashMap<usize, usize> = agents.iter().enumerate().map(|(i, s)| (s.agent(), i)).collect();

    let mut root_paths = Vec::with_capacity(agents.len());
    for sg in agents {
        match low.search(sg, &AgentConstraints::default()) {
            LowResult::Found(p) => root_paths.push(Arc::new(p)),
            LowResult::NoPath => {
                stats.low_expansions = low.expansions;
                return Err(SolveError::Infeasible { agent: sg.agent(), stats: finish(stats) });
            }
            LowResult::Timeout => {
                stats.low_expansions = low.expansions;
                return Err(SolveError::Timeout(finish(stats)));
            }
        }
    }
    let conflicts_of = |paths: &[Arc<TimedPath>]| -> (usize, Option<Conflict>) {
        let mut count = 0;
        for i in 0..paths.len() {
            for j in i + 1..paths.len() {
                if first_pair_conflict(models[i], &paths[i], models[j], &paths[j]).is_some() {
                    count += 1;
                }
            }
        }
        if count == 0 {
            return (0, None);
        }
        let pairs: Vec<(&ShapeModel, &TimedPath)> = paths.iter().enumerate().map(|(i, p)| (models[i], p.as_ref())).collect();
        (count, detect_first_conflict(&pairs))
    };

    let mut nodes: Vec<HighNode> = Vec::new();
    let mut open = BinaryHeap::new();
    let soc: usize = root_paths.iter().map(|p| p.cost()).sum();
    let (count, _) = conflicts_of(&root_paths);
    nodes.push(HighNode { constraints: Vec::new(), paths: root_paths });
    open.push(Reverse((soc, count, 0usize)));

    while let Some(Reverse((_, _, id))) = open.pop() {
        stats.high_expansions += 1;
        if ctx.deadline.is_some_and(|d| Instant::now() >= d) {
            stats.low_expansions = low.expansions;
            return Err(SolveError::Timeout(finish(stats)));
        }
        let (_, conflict) = conflicts_of(&nodes[id].paths);
        let Some(conflict) = conflict else {
            stats.low_expansions = low.expansions;
            let solution = Solution::new(nodes[id].paths.iter().map(|p| p.as_ref().clone()).collect());
            return Ok(SolveOutcome { solution, stats: finish(stats) });
        };
        let branches = match conflict {
            Conflict::Vertex { a, b, pose_a, pose_b, t } => [
                (a, Constraint::Vertex { agent: a, node: agents[local[&a]].node_of(pose_a).expect("pose in graph"), t }),
                (b, Constraint::Vertex { agent: b, node: agents[local[&b]].node_of(pose_b).expect("pose in graph"), t }),
            ],
            Conflict::Transfer { a, b, from_a, to_a, from_b, to_b, t } => {
                let ga = agents[local[&a]];
                let gb = agents[local[&b]];
                [
                    (a, Constraint::Transfer { agent: a, from: ga.node_of(from_a).expect("pose"), to: ga.node_of(to_a).expect("pose"), t }),
                    (b, Constraint::Transfer { agent: b, from: gb.node_of(from_b).expect("pose"), to: gb.node_of(to_b).expect("pose"), t }),
                ]
            }
        };
        for (agent, constraint) in branches {
            let li = local[&agent];
            let mut constraints = nodes[id].constraints.clone();
            constraints.push(constraint);
            let cons = AgentConstraints::collect(agent, constraints.iter());
            match low.search(agents[li], &cons) {
                LowResult::Found(p) => {
                    let mut paths = nodes[id].paths.clone();
                    paths[li] = Arc::new(p);
                    let soc = paths.iter().map(|p| p.cost()).sum();
                    let (count, _) = conflicts_of(&paths);
                    nodes.push(HighNode { constraints, paths });
                    open.push(Reverse((soc, count, nodes.len() - 1)));
                }
                LowResult::NoPath => {}
                LowResult::Timeout => {
                    stats.low_expansions = low.expansions;
                    return Err(SolveError::Timeout(finish(stats)));
                }
            }
        }
        // free memory of expanded nodes' paths
        nodes[id].paths = Vec::new();
        nodes[id].constraints = Vec::new();
    }
    stats.low_expansions = low.expansions;
    Err(SolveError::Exhausted(finish(stats)))
}

/// Whether a solver accepts paths of earlier levels as moving obstacles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    /// Solves with earlier levels' paths as external constraints.
    Serial,
    /// Solves each level in isolation; results are merged afterwards.
    Parallel,
}

/// A multi-agent solver usable inside the layered framework.
pub trait LevelSolver: Sync {
    fn name(&self) -> &str;
    fn kind(&self) -> SolverKind;
    fn solve(&self, agents: &[&Subgraph], ctx: &SolveContext) -> Result<SolveOutcome, SolveError>;
}

/// [`la_cbs`] as a layered-framework solver of either kind.
#[derive(Clone, Copy, Debug)]
pub struct LaCbs {
    pub kind: SolverKind,
}

impl LevelSolver for LaCbs {
    fn name(&self) -> &str {
        match self.kind {
            SolverKind::Serial => "cbs-serial",
            SolverKind::Parallel => "cbs-parallel",
        }
    }

    fn kind(&self) -> SolverKind {
        self.kind
    }

    fn solve(&self, agents: &[&Subgraph], ctx: &SolveContext) -> Result<SolveOutcome, SolveError> {
        if self.kind == SolverKind::Parallel && !ctx.external.is_empty() {
            let ctx = SolveContext { external: Vec::new(), ..ctx.clone() };
            return la_cbs(agents, &ctx);
        }
        la_cbs(agents, ctx)
    }
}
