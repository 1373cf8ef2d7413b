//! Agent specifications and the line-oriented instance file.
//!
//! ```text
//! lamapf-instance
//! version 1
//! map empty-16-16.map
//! seed 7
//! agents 2
//! 0 circle 0.4 1 1 0 5 5 2
//! 1 rect -0.45 -0.45 1.45 0.45 3 3 0 8 8 1
//! ```
//! Agent lines are `id kind params sx sy sr tx ty tr`; orientations use codes
//! 0..=3 for +x, -x, +y, -y. The map path is relative to the instance file.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::geometry::{GeometryError, Motion, Orientation, Pose, Shape, SweepConfig};
use crate::geometry;
use crate::map::{distance_field, load_map, DistanceField, GridMap, MapError};

const MAGIC: &str = "lamapf-instance";
const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgentSpec {
    pub id: usize,
    pub shape: Shape,
    pub start: Pose,
    pub target: Pose,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub map_ref: String,
    pub seed: u64,
    pub agents: Vec<AgentSpec>,
}

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("cannot read or write `{path}`: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown shape kind `{kind}`")]
    UnknownShape { line: usize, kind: String },
    #[error("agent ids must be 0..n in order; found {found} at position {position}")]
    BadId { position: usize, found: usize },
    #[error("agent {agent}: {source}")]
    BadShape { agent: usize, source: GeometryError },
    #[error("agent {agent}: {which} pose {pose} is outside the map")]
    OutOfBounds { agent: usize, which: &'static str, pose: Pose },
    #[error("agent {agent}: {which} footprint at {pose} collides with obstacles")]
    Collides { agent: usize, which: &'static str, pose: Pose },
    #[error(transparent)]
    Map(#[from] MapError),
}

fn parse_err(line: usize, message: impl Into<String>) -> InstanceError {
    InstanceError::Parse { line, message: message.into() }
}

fn fmt_pose(out: &mut String, p: Pose) {
    let _ = write!(out, "{} {} {}", p.x, p.y, p.orient.code());
}

pub fn format_instance(inst: &Instance) -> String {
    let mut out = format!("{MAGIC}\nversion {VERSION}\nmap {}\nseed {}\nagents {}\n", inst.map_ref, inst.seed, inst.agents.len());
    for a in &inst.agents {
        let _ = write!(out, "{} ", a.id);
        match a.shape {
            Shape::Circle { radius } => {
                let _ = write!(out, "circle {radius} ");
            }
            Shape::Rectangle { min, max } => {
                let _ = write!(out, "rect {} {} {} {} ", min[0], min[1], max[0], max[1]);
            }
        }
        fmt_pose(&mut out, a.start);
        out.push(' ');
        fmt_pose(&mut out, a.target);
        out.push('\n');
    }
    out
}

fn header_value<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, key: &str) -> Result<(usize, &'a str), InstanceError> {
    let (n, line) = lines.next().ok_or_else(|| parse_err(0, format!("missing `{key}` line")))?;
    let rest = line
        .strip_prefix(key)
        .filter(|r| r.starts_with(' '))
        .ok_or_else(|| parse_err(n, format!("expected `{key} <value>`")))?;
    Ok((n, rest.trim()))
}

fn parse_num<T: std::str::FromStr>(line: usize, tok: Option<&str>, what: &str) -> Result<T, InstanceError> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| parse_err(line, format!("bad {what} `{tok}`")))
}

fn parse_pose<'a>(line: usize, toks: &mut impl Iterator<Item = &'a str>) -> Result<Pose, InstanceError> {
    let x = parse_num(line, toks.next(), "x")?;
    let y = parse_num(line, toks.next(), "y")?;
    let code: u8 = parse_num(line, toks.next(), "orientation")?;
    let orient = Orientation::from_code(code).ok_or_else(|| parse_err(line, format!("orientation {code} not in 0..=3")))?;
    Ok(Pose::new(x, y, orient))
}

/// Parses instance text without touching the map.
pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    match lines.next() {
        Some((_, MAGIC)) => {}
        Some((n, _)) => return Err(parse_err(n, format!("expected `{MAGIC}` header"))),
        None => return Err(parse_err(0, "empty instance file")),
    }
    let (n, version) = header_value(&mut lines, "version")?;
    if version != VERSION.to_string() {
        return Err(parse_err(n, format!("unsupported version {version}")));
    }
    let (_, map_ref) = header_value(&mut lines, "map")?;
    let (n, seed) = header_value(&mut lines, "seed")?;
    let seed = parse_num(n, Some(seed), "seed")?;
    let (n, count) = header_value(&mut lines, "agents")?;
    let count: usize = parse_num(n, Some(count), "agent count")?;
    let mut agents = Vec::with_capacity(count);
    for (n, line) in lines {
        let mut toks = line.split_whitespace();
        let id: usize = parse_num(n, toks.next(), "agent id")?;
        if id != agents.len() {
            return Err(InstanceError::BadId { position: agents.len(), found: id });
        }
        let kind = toks.next().ok_or_else(|| parse_err(n, "missing shape kind"))?;
        let shape = match kind {
            "circle" => Shape::Circle { radius: parse_num(n, toks.next(), "radius")? },
            "rect" => {
                let mut v = [0.0; 4];
                for (k, slot) in v.iter_mut().enumerate() {
                    *slot = parse_num(n, toks.next(), ["min x", "min y", "max x", "max y"][k])?;
                }
                Shape::Rectangle { min: [v[0], v[1]], max: [v[2], v[3]] }
            }
            other => return Err(InstanceError::UnknownShape { line: n, kind: other.to_string() }),
        };
        shape.validate().map_err(|source| InstanceError::BadShape { agent: id, source })?;
        let start = parse_pose(n, &mut toks)?;
        let target = parse_pose(n, &mut toks)?;
        if toks.next().is_some() {
            return Err(parse_err(n, "trailing tokens"));
        }
        agents.push(AgentSpec { id, shape, start, target });
    }
    if agents.len() != count {
        return Err(parse_err(0, format!("header declares {count} agents, found {}", agents.len())));
    }
    Ok(Instance { map_ref: map_ref.to_string(), seed, agents })
}

/// Checks that every start and target is inside the map and obstacle-free.
pub fn check_on_map(agents: &[AgentSpec], map: &GridMap, dfield: &DistanceField) -> Result<(), InstanceError> {
    let sweep = SweepConfig::default();
    for a in agents {
        for (which, pose) in [("start", a.start), ("target", a.target)] {
            if !map.in_bounds(pose.x, pose.y) {
                return Err(InstanceError::OutOfBounds { agent: a.id, which, pose });
            }
            let hit = geometry::collides_with_map_with(&a.shape, Motion::At(pose), map, dfield, &sweep)
                .map_err(|source| InstanceError::BadShape { agent: a.id, source })?;
            if hit {
                return Err(InstanceError::Collides { agent: a.id, which, pose });
            }
        }
    }
    Ok(())
}

fn resolve_map(instance_path: &Path, map_ref: &str) -> PathBuf {
    let p = Path::new(map_ref);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        instance_path.parent().unwrap_or(Path::new(".")).join(p)
    }
}

/// Reads an instance and its map, then validates the endpoints against the map.
pub fn load_instance(path: &Path) -> Result<(GridMap, Instance), InstanceError> {
    let text = fs::read_to_string(path)
        .map_err(|e| InstanceError::Io { path: path.display().to_string(), message: e.to_string() })?;
    let inst = parse_instance(&text)?;
    let map = load_map(&resolve_map(path, &inst.map_ref))?;
    check_on_map(&inst.agents, &map, &distance_field(&map))?;
    Ok((map, inst))
}

pub fn save_instance(path: &Path, inst: &Instance) -> Result<(), InstanceError> {
    fs::write(path, format_instance(inst))
        .map_err(|e| InstanceError::Io { path: path.display().to_string(), message: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Instance {
        Instance {
            map_ref: "open.map".into(),
            seed: 7,
            agents: vec![
                AgentSpec {
                    id: 0,
                    shape: Shape::Circle { radius: 0.1 + 0.2 },
                    start: Pose::new(1, 1, Orientation::PosX),
                    target: Pose::new(5, 5, Orientation::PosY),
                },
                AgentSpec {
                    id: 1,
                    shape: Shape::Rectangle { min: [-0.45, -1.0 / 3.0], max: [1.45, 0.45] },
                    start: Pose::new(3, 3, Orientation::NegX),
                    target: Pose::new(8, 8, Orientation::NegY),
                },
            ],
        }
    }

    #[test]
    fn text_round_trip_is_exact() {
        let inst = sample();
        assert_eq!(parse_instance(&format_instance(&inst)).unwrap(), inst);
    }

    #[test]
    fn rejects_unknown_kind() {
        let text = format_instance(&sample()).replace("circle", "hexagon");
        assert!(matches!(parse_instance(&text), Err(InstanceError::UnknownShape { .. })));
    }

    #[test]
    fn start_on_obstacle_names_agent() {
        let mut map = GridMap::open("m", 10, 10);
        map.set_passable(3, 3, false);
        let err = check_on_map(&sample().agents, &map, &distance_field(&map)).unwrap_err();
        assert!(matches!(err, InstanceError::Collides { agent: 1, which: "start", .. }));
        assert!(err.to_string().contains("agent 1"));
    }

    #[test]
    fn pose_outside_map() {
        let map = GridMap::open("m", 6, 6);
        let err = check_on_map(&sample().agents, &map, &distance_field(&map)).unwrap_err();
        assert!(matches!(err, InstanceError::OutOfBounds { agent: 1, which: "target", .. }));
    }
}
