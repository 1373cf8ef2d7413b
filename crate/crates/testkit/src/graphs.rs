//! Brute-force graph oracles: per-agent pose graphs, relation tags and the
//! independence checks for clusters and levels.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use lamapf_core::geometry::{motion_footprint, Footprint, Motion, Orientation, Pose, SweepConfig};
use lamapf_core::instance::AgentSpec;
use lamapf_core::map::GridMap;

/// Pose graph built by testing every pose and action from scratch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BruteGraph {
    pub nodes: BTreeSet<Pose>,
    pub edges: BTreeSet<(Pose, Pose)>,
}

fn fits(map: &GridMap, fp: &Footprint) -> bool {
    fp.cells().iter().all(|c| map.is_passable(c.x, c.y))
}

pub fn all_poses(map: &GridMap) -> impl Iterator<Item = Pose> + '_ {
    (0..map.height() as i32)
        .flat_map(move |y| (0..map.width() as i32).flat_map(move |x| Orientation::ALL.map(|o| Pose::new(x, y, o))))
}

pub fn brute_graph(map: &GridMap, agent: &AgentSpec, sweep: &SweepConfig) -> BruteGraph {
    let nodes: BTreeSet<Pose> = all_poses(map)
        .filter(|&p| fits(map, &motion_footprint(&agent.shape, Motion::At(p), sweep).unwrap()))
        .collect();
    let mut edges = BTreeSet::new();
    for &p in &nodes {
        for q in [p.forward(), p.turned(true), p.turned(false)] {
            if nodes.contains(&q) && fits(map, &motion_footprint(&agent.shape, Motion::Transfer(p, q), sweep).unwrap()) {
                edges.insert((p, q));
            }
        }
    }
    BruteGraph { nodes, edges }
}

/// Tag index of a start (`2a`) or target (`2a + 1`).
pub fn start_tag(agent: usize) -> usize {
    2 * agent
}

pub fn target_tag(agent: usize) -> usize {
    2 * agent + 1
}

/// Footprint of every other agent's start and target, keyed by tag index.
pub fn endpoint_footprints(agents: &[AgentSpec], me: usize, sweep: &SweepConfig) -> BTreeMap<usize, Footprint> {
    let mut out = BTreeMap::new();
    for a in agents.iter().filter(|a| a.id != me) {
        out.insert(start_tag(a.id), motion_footprint(&a.shape, Motion::At(a.start), sweep).unwrap());
        out.insert(target_tag(a.id), motion_footprint(&a.shape, Motion::At(a.target), sweep).unwrap());
    }
    out
}

/// Tags of each node: endpoints overlapping its pose or any incident transfer.
pub fn brute_tags(g: &BruteGraph, me: &AgentSpec, agents: &[AgentSpec], sweep: &SweepConfig) -> BTreeMap<Pose, BTreeSet<usize>> {
    let ends = endpoint_footprints(agents, me.id, sweep);
    let hit = |fp: &Footprint| ends.iter().filter(|(_, e)| e.intersects(fp)).map(|(&t, _)| t).collect::<BTreeSet<_>>();
    let mut tags: BTreeMap<Pose, BTreeSet<usize>> = g.nodes.iter().map(|&p| (p, BTreeSet::new())).collect();
    for &p in &g.nodes {
        let t = hit(&motion_footprint(&me.shape, Motion::At(p), sweep).unwrap());
        tags.get_mut(&p).unwrap().extend(t);
    }
    for &(p, q) in &g.edges {
        let t = hit(&motion_footprint(&me.shape, Motion::Transfer(p, q), sweep).unwrap());
        tags.get_mut(&p).unwrap().extend(t.iter().copied());
        tags.get_mut(&q).unwrap().extend(t);
    }
    tags
}

/// BFS from start to target over nodes accepted by `allowed`.
pub fn bfs_reaches(g: &BruteGraph, start: Pose, target: Pose, allowed: impl Fn(Pose) -> bool) -> bool {
    if !g.nodes.contains(&start) || !allowed(start) || !allowed(target) {
        return false;
    }
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(p) = queue.pop_front() {
        if p == target {
            return true;
        }
        for q in [p.forward(), p.turned(true), p.turned(false)] {
            if g.edges.contains(&(p, q)) && allowed(q) && seen.insert(q) {
                queue.push_back(q);
            }
        }
    }
    false
}

/// Path exists whose poses and transfers all keep clear of the given endpoint footprints.
pub fn raw_path_avoiding(map: &GridMap, me: &AgentSpec, avoid: &[Footprint], sweep: &SweepConfig) -> bool {
    let g = brute_graph(map, me, sweep);
    let clear = |m: Motion| {
        let fp = motion_footprint(&me.shape, m, sweep).unwrap();
        avoid.iter().all(|a| !a.intersects(&fp))
    };
    if !clear(Motion::At(me.start)) || !clear(Motion::At(me.target)) {
        return false;
    }
    let mut seen = BTreeSet::from([me.start]);
    let mut queue = VecDeque::from([me.start]);
    while let Some(p) = queue.pop_front() {
        if p == me.target {
            return true;
        }
        for q in [p.forward(), p.turned(true), p.turned(false)] {
            if g.edges.contains(&(p, q)) && !seen.contains(&q) && clear(Motion::At(q)) && clear(Motion::Transfer(p, q)) {
                seen.insert(q);
                queue.push_back(q);
            }
        }
    }
    false
}

fn endpoint(a: &AgentSpec, target: bool, sweep: &SweepConfig) -> Footprint {
    motion_footprint(&a.shape, Motion::At(if target { a.target } else { a.start }), sweep).unwrap()
}

/// Every agent of `cluster` reaches its target clear of all endpoints outside the cluster.
pub fn cluster_is_independent(map: &GridMap, agents: &[AgentSpec], cluster: &[usize], sweep: &SweepConfig) -> Result<(), String> {
    let outside: Vec<Footprint> = agents
        .iter()
        .filter(|a| !cluster.contains(&a.id))
        .flat_map(|a| [endpoint(a, false, sweep), endpoint(a, true, sweep)])
        .collect();
    for &i in cluster {
        if !raw_path_avoiding(map, &agents[i], &outside, sweep) {
            return Err(format!("agent {i} of cluster {cluster:?} cannot avoid the other clusters"));
        }
    }
    Ok(())
}

/// Every agent of level `x` reaches its target clear of earlier levels' targets,
/// later levels' starts and every endpoint outside the cluster.
pub fn levels_are_ordered(map: &GridMap, agents: &[AgentSpec], cluster: &[usize], levels: &[Vec<usize>], sweep: &SweepConfig) -> Result<(), String> {
    let covered: BTreeSet<usize> = levels.iter().flatten().copied().collect();
    if covered != cluster.iter().copied().collect() || levels.iter().map(Vec::len).sum::<usize>() != cluster.len() {
        return Err(format!("levels {levels:?} do not partition cluster {cluster:?}"));
    }
    for (x, level) in levels.iter().enumerate() {
        let mut avoid: Vec<Footprint> = agents
            .iter()
            .filter(|a| !cluster.contains(&a.id))
            .flat_map(|a| [endpoint(a, false, sweep), endpoint(a, true, sweep)])
            .collect();
        avoid.extend(levels[..x].iter().flatten().map(|&j| endpoint(&agents[j], true, sweep)));
        avoid.extend(levels[x + 1..].iter().flatten().map(|&j| endpoint(&agents[j], false, sweep)));
        for &i in level {
            if !raw_path_avoiding(map, &agents[i], &avoid, sweep) {
                return Err(format!("agent {i} in level {x} of {levels:?} is blocked"));
            }
        }
    }
    Ok(())
}
