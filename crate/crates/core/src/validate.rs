//! Independent solution checker. Footprints are rasterized afresh for every
//! step, without the distance shortcuts the planners use.

use std::fmt;

use fixedbitset::FixedBitSet;

use crate::geometry::{motion_footprint, Action, Cell, Footprint, Motion, Pose, SweepConfig};
use crate::instance::AgentSpec;
use crate::map::GridMap;
use crate::solution::{Conflict, Solution};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Finding {
    MissingAgent { agent: usize },
    UnknownAgent { agent: usize },
    WrongStart { agent: usize, expected: Pose, found: Pose },
    WrongTarget { agent: usize, expected: Pose, found: Pose },
    IllegalAction { agent: usize, t: usize, from: Pose, to: Pose },
    MapCollision { agent: usize, t: usize, motion: Motion },
    BlockedCell { agent: usize, t: usize, cell: Cell },
    AgentConflict(Conflict),
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MissingAgent { agent } => write!(f, "agent {agent} has no path"),
            Self::UnknownAgent { agent } => write!(f, "path for unknown agent {agent}"),
            Self::WrongStart { agent, expected, found } => write!(f, "agent {agent} starts at {found}, expected {expected}"),
            Self::WrongTarget { agent, expected, found } => write!(f, "agent {agent} ends at {found}, expected {expected}"),
            Self::IllegalAction { agent, t, from, to } => write!(f, "agent {agent} t={t}: illegal move {from}->{to}"),
            Self::MapCollision { agent, t, motion } => write!(f, "agent {agent} t={t}: map collision during {motion:?}"),
            Self::BlockedCell { agent, t, cell } => write!(f, "agent {agent} t={t}: touches blocked cell ({}, {})", cell.x, cell.y),
            Self::AgentConflict(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.findings.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.findings.is_empty() {
            return writeln!(f, "valid");
        }
        for finding in &self.findings {
            writeln!(f, "{finding}")?;
        }
        Ok(())
    }
}

pub fn validate_solution(map: &GridMap, agents: &[AgentSpec], solution: &Solution, sweep: &SweepConfig) -> ValidationReport {
    validate_with_blocked(map, agents, solution, sweep, &FixedBitSet::new())
}

struct Track {
    agent: usize,
    poses: Vec<Pose>,
    /// Pose footprint per step, then transfer footprint per step.
    at: Vec<Footprint>,
    during: Vec<Footprint>,
}

fn bounds(f: &Footprint) -> Option<(i32, i32, i32, i32)> {
    let cells = f.cells();
    if cells.is_empty() {
        return None;
    }
    let (mut x0, mut y0, mut x1, mut y1) = (i32::MAX, i32::MAX, i32::MIN, i32::MIN);
    for c in cells {
        x0 = x0.min(c.x);
        x1 = x1.max(c.x);
        y0 = y0.min(c.y);
        y1 = y1.max(c.y);
    }
    Some((x0, y0, x1, y1))
}

fn overlap(a: &Footprint, b: &Footprint) -> bool {
    match (bounds(a), bounds(b)) {
        (Some(p), Some(q)) if p.0 <= q.2 && q.0 <= p.2 && p.1 <= q.3 && q.1 <= p.3 => a.intersects(b),
        _ => false,
    }
}

/// Checks endpoints, action legality, map and blocked-cell collisions and
/// every pairwise overlap. `blocked` holds row-major cell indices.
pub fn validate_with_blocked(
    map: &GridMap,
    agents: &[AgentSpec],
    solution: &Solution,
    sweep: &SweepConfig,
    blocked: &FixedBitSet,
) -> ValidationReport {
    let mut findings = Vec::new();
    for a in agents {
        if solution.get(a.id).is_none() {
            findings.push(Finding::MissingAgent { agent: a.id });
        }
    }
    let horizon = solution.horizon();
    let mut tracks = Vec::new();
    for path in solution.paths() {
        let Some(spec) = agents.iter().find(|a| a.id == path.agent) else {
            findings.push(Finding::UnknownAgent { agent: path.agent });
            continue;
        };
        let agent = spec.id;
        if path.poses[0] != spec.start {
            findings.push(Finding::WrongStart { agent, expected: spec.start, found: path.poses[0] });
        }
        if path.last() != spec.target {
            findings.push(Finding::WrongTarget { agent, expected: spec.target, found: path.last() });
        }
        let mut legal = true;
        for t in 0..path.poses.len() - 1 {
            let (from, to) = (path.poses[t], path.poses[t + 1]);
            if Action::classify(from, to).is_none() {
                findings.push(Finding::IllegalAction { agent, t, from, to });
                legal = false;
            }
        }
        if !legal {
            continue;
        }
        let mut check = |t: usize, motion: Motion, fp: &Footprint| {
            if fp.cells().iter().any(|c| !map.is_passable(c.x, c.y)) {
                findings.push(Finding::MapCollision { agent, t, motion });
            }
            if let Some(&cell) = fp.cells().iter().find(|c| {
                map.in_bounds(c.x, c.y) && blocked.contains(map.cell_index(c.x, c.y))
            }) {
                findings.push(Finding::BlockedCell { agent, t, cell });
            }
        };
        let mut at = Vec::with_capacity(horizon + 1);
        let mut during = Vec::with_capacity(horizon);
        for t in 0..=horizon {
            let pose = path.pose_at(t);
            let fp = motion_footprint(&spec.shape, Motion::At(pose), sweep).expect("waits are legal");
            if t < path.poses.len() {
                check(t, Motion::At(pose), &fp);
            }
            at.push(fp);
            if t < horizon {
                let motion = path.motion_at(t);
                let fp = motion_footprint(&spec.shape, motion, sweep).expect("checked above");
                if t + 1 < path.poses.len() {
                    check(t, motion, &fp);
                }
                during.push(fp);
            }
        }
        tracks.push(Track { agent, poses: path.poses.clone(), at, during });
    }
    let pose = |tr: &Track, t: usize| tr.poses[t.min(tr.poses.len() - 1)];
    for i in 0..tracks.len() {
        for j in i + 1..tracks.len() {
            let (p, q) = (&tracks[i], &tracks[j]);
            for t in 0..=horizon {
                if overlap(&p.at[t], &q.at[t]) {
                    findings.push(Finding::AgentConflict(Conflict::Vertex {
                        a: p.agent,
                        b: q.agent,
                        pose_a: pose(p, t),
                        pose_b: pose(q, t),
                        t,
                    }));
                }
                if t < horizon && overlap(&p.during[t], &q.during[t]) {
                    findings.push(Finding::AgentConflict(Conflict::Transfer {
                        a: p.agent,
                        b: q.agent,
                        from_a: pose(p, t),
                        to_a: pose(p, t + 1),
                        from_b: pose(q, t),
                        to_b: pose(q, t + 1),
                        t,
                    }));
                }
            }
        }
    }
    ValidationReport { findings }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Orientation, Shape};
    use crate::solution::TimedPath;

    fn p(x: i32, y: i32, o: u8) -> Pose {
        Pose::new(x, y, Orientation::from_code(o).unwrap())
    }

    fn spec(id: usize, start: Pose, target: Pose) -> AgentSpec {
        AgentSpec { id, shape: Shape::Circle { radius: 0.4 }, start, target }
    }

    #[test]
    fn reports_every_kind_of_problem() {
        let mut map = GridMap::open("m", 4, 2);
        map.set_passable(3, 1, false);
        let agents = [spec(0, p(0, 0, 0), p(2, 0, 0)), spec(1, p(3, 0, 2), p(3, 1, 2)), spec(2, p(0, 1, 0), p(0, 1, 0))];
        let sol = Solution::new(vec![
            TimedPath::new(0, vec![p(0, 0, 0), p(1, 0, 0), p(2, 0, 0), p(3, 0, 0)]),
            TimedPath::new(1, vec![p(3, 0, 2), p(3, 0, 2), p(3, 0, 2), p(3, 0, 2), p(3, 1, 2)]),
            TimedPath::new(5, vec![p(0, 1, 0)]),
        ]);
        let report = validate_solution(&map, &agents, &sol, &SweepConfig::default());
        let has = |f: &dyn Fn(&Finding) -> bool| report.findings.iter().any(f);
        assert!(has(&|f| matches!(f, Finding::MissingAgent { agent: 2 })));
        assert!(has(&|f| matches!(f, Finding::UnknownAgent { agent: 5 })));
        assert!(has(&|f| matches!(f, Finding::WrongTarget { agent: 0, .. })));
        assert!(has(&|f| matches!(f, Finding::MapCollision { agent: 1, t: 3, .. })));
        assert!(has(&|f| matches!(f, Finding::AgentConflict(Conflict::Vertex { a: 0, b: 1, t: 3, .. }))));
    }

    #[test]
    fn clean_solution_and_blocked_cells() {
        let map = GridMap::open("m", 3, 1);
        let agents = [spec(0, p(0, 0, 0), p(1, 0, 0))];
        let sol = Solution::new(vec![TimedPath::new(0, vec![p(0, 0, 0), p(1, 0, 0)])]);
        assert!(validate_solution(&map, &agents, &sol, &SweepConfig::default()).is_valid());
        let mut blocked = FixedBitSet::with_capacity(3);
        blocked.insert(1);
        let r = validate_with_blocked(&map, &agents, &sol, &SweepConfig::default(), &blocked);
        assert!(matches!(r.findings[..], [Finding::BlockedCell { t: 0, .. }, Finding::BlockedCell { t: 1, .. }]));
    }
}
