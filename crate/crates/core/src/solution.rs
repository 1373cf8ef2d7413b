//! Timed paths, joint solutions and inter-agent conflicts.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::{Motion, Orientation, Pose, ShapeModel};

/// One pose per time step, starting at `t = 0`. The agent stays at its last pose afterwards.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimedPath {
    pub agent: usize,
    pub poses: Vec<Pose>,
}

impl TimedPath {
    pub fn new(agent: usize, poses: Vec<Pose>) -> Self {
        Self { agent, poses }
    }

    pub fn pose_at(&self, t: usize) -> Pose {
        self.poses[t.min(self.poses.len() - 1)]
    }

    /// Motion from `t` to `t + 1`; a wait once the path has ended.
    pub fn motion_at(&self, t: usize) -> Motion {
        Motion::Transfer(self.pose_at(t), self.pose_at(t + 1))
    }

    pub fn last(&self) -> Pose {
        *self.poses.last().expect("non-empty path")
    }

    /// Arrival time at the final pose; trailing waits there are free.
    pub fn cost(&self) -> usize {
        let last = self.last();
        self.poses.iter().rposition(|&p| p != last).map_or(0, |i| i + 1)
    }

    /// The same path preceded by `delay` waits at its first pose.
    pub fn delayed(&self, delay: usize) -> TimedPath {
        let mut poses = vec![self.poses[0]; delay];
        poses.extend_from_slice(&self.poses);
        Self { agent: self.agent, poses }
    }
}

/// Paths for a set of agents, kept sorted by agent id.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Solution {
    paths: Vec<TimedPath>,
}

impl Solution {
    pub fn new(mut paths: Vec<TimedPath>) -> Self {
        paths.sort_by_key(|p| p.agent);
        Self { paths }
    }

    pub fn paths(&self) -> &[TimedPath] {
        &self.paths
    }

    pub fn get(&self, agent: usize) -> Option<&TimedPath> {
        self.paths.binary_search_by_key(&agent, |p| p.agent).ok().map(|i| &self.paths[i])
    }

    pub fn extend(&mut self, other: Solution) {
        self.paths.extend(other.paths);
        self.paths.sort_by_key(|p| p.agent);
    }

    /// Sum of individual arrival times.
    pub fn soc(&self) -> usize {
        self.paths.iter().map(TimedPath::cost).sum()
    }

    /// Latest arrival time.
    pub fn makespan(&self) -> usize {
        self.paths.iter().map(TimedPath::cost).max().unwrap_or(0)
    }

    /// Time steps until every path has ended.
    pub fn horizon(&self) -> usize {
        self.paths.iter().map(|p| p.poses.len() - 1).max().unwrap_or(0)
    }
}

impl fmt::Display for Solution {
    /// One line per agent: `id: (x,y,o)@0 (x,y,o)@1 ...`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.paths {
            write!(f, "{}:", p.agent)?;
            for (t, pose) in p.poses.iter().enumerate() {
                write!(f, " {pose}@{t}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct SolutionParseError {
    pub line: usize,
    pub message: String,
}

fn parse_pose(tok: &str) -> Option<Pose> {
    let inner = tok.strip_prefix('(')?.strip_suffix(')')?;
    let mut it = inner.split(',');
    let x = it.next()?.trim().parse().ok()?;
    let y = it.next()?.trim().parse().ok()?;
    let o = Orientation::from_code(it.next()?.trim().parse().ok()?)?;
    it.next().is_none().then_some(Pose::new(x, y, o))
}

impl FromStr for Solution {
    type Err = SolutionParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut paths = Vec::new();
        for (n, line) in s.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: &str| SolutionParseError { line: n + 1, message: message.to_string() };
            let (id, rest) = line.split_once(':').ok_or_else(|| err("expected `id: poses`"))?;
            let agent = id.trim().parse().map_err(|_| err("bad agent id"))?;
            let mut poses = Vec::new();
            for (t, tok) in rest.split_whitespace().enumerate() {
                // the time stamp is optional but must match the position when given
                let (pose, stamp) = tok.split_once('@').map_or((tok, None), |(p, s)| (p, Some(s)));
                if stamp.is_some_and(|s| s.parse::<usize>().ok() != Some(t)) {
                    return Err(err("time stamps must count up from 0"));
                }
                poses.push(parse_pose(pose).ok_or_else(|| err("bad pose"))?);
            }
            if poses.is_empty() {
                return Err(err("empty path"));
            }
            paths.push(TimedPath::new(agent, poses));
        }
        Ok(Solution::new(paths))
    }
}

/// Two agents overlapping at a time step (`Vertex`) or while moving from `t` to `t + 1` (`Transfer`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Conflict {
    Vertex { a: usize, b: usize, pose_a: Pose, pose_b: Pose, t: usize },
    Transfer { a: usize, b: usize, from_a: Pose, to_a: Pose, from_b: Pose, to_b: Pose, t: usize },
}

impl Conflict {
    pub fn time(&self) -> usize {
        match *self {
            Self::Vertex { t, .. } | Self::Transfer { t, .. } => t,
        }
    }

    pub fn agents(&self) -> (usize, usize) {
        match *self {
            Self::Vertex { a, b, .. } | Self::Transfer { a, b, .. } => (a, b),
        }
    }

    fn rank(&self) -> (usize, u8) {
        match *self {
            Self::Vertex { t, .. } => (t, 0),
            Self::Transfer { t, .. } => (t, 1),
        }
    }
}

impl fmt::Display for Conflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Vertex { a, b, pose_a, pose_b, t } => write!(f, "vertex conflict t={t}: agent {a} at {pose_a}, agent {b} at {pose_b}"),
            Self::Transfer { a, b, from_a, to_a, from_b, to_b, t } => {
                write!(f, "transfer conflict t={t}: agent {a} {from_a}->{to_a}, agent {b} {from_b}->{to_b}")
            }
        }
    }
}

/// Earliest conflict between two agents; vertex before transfer at equal times.
pub fn first_pair_conflict(ma: &ShapeModel, pa: &TimedPath, mb: &ShapeModel, pb: &TimedPath) -> Option<Conflict> {
    let horizon = (pa.poses.len()).max(pb.poses.len()) - 1;
    let (a, b) = (pa.agent, pb.agent);
    for t in 0..=horizon {
        let (xa, xb) = (pa.pose_at(t), pb.pose_at(t));
        if ma.collides_with(Motion::At(xa), mb, Motion::At(xb)) {
            return Some(Conflict::Vertex { a, b, pose_a: xa, pose_b: xb, t });
        }
        if t < horizon {
            let (ya, yb) = (pa.pose_at(t + 1), pb.pose_at(t + 1));
            if ma.collides_with(Motion::Transfer(xa, ya), mb, Motion::Transfer(xb, yb)) {
                return Some(Conflict::Transfer { a, b, from_a: xa, to_a: ya, from_b: xb, to_b: yb, t });
            }
        }
    }
    None
}

/// Earliest conflict over all pairs, ordered by time, then vertex before
/// transfer, then by agent pair.
pub fn detect_first_conflict(paths: &[(&ShapeModel, &TimedPath)]) -> Option<Conflict> {
    let mut best: Option<Conflict> = None;
    for i in 0..paths.len() {
        for j in i + 1..paths.len() {
            if let Some(c) = first_pair_conflict(paths[i].0, paths[i].1, paths[j].0, paths[j].1) {
                if best.is_none_or(|b| (c.rank(), c.agents()) < (b.rank(), b.agents())) {
                    best = Some(c);
                }
            }
        }
    }
    best
}
