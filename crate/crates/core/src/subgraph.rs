//! Per-agent traversability graph over collision-free poses.

use std::collections::VecDeque;
use std::io::{self, Write};
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::geometry::{GeometryError, Motion, Orientation, Placed, Pose, ShapeModel, SweepConfig};
use crate::instance::AgentSpec;
use crate::map::{DistanceField, GridMap};

/// Dense pose index: `(y * width + x) * 4 + orient`.
pub type NodeId = u32;

pub const UNREACHABLE: u32 = u32::MAX;

#[derive(Debug, Error)]
pub enum SubgraphError {
    #[error("agent {agent}: start pose {pose} is not collision-free")]
    StartBlocked { agent: usize, pose: Pose },
    #[error("agent {agent}: target pose {pose} is not collision-free")]
    TargetBlocked { agent: usize, pose: Pose },
    #[error("agent {agent}: {source}")]
    Geometry { agent: usize, source: GeometryError },
}

pub fn node_index(width: usize, pose: Pose) -> NodeId {
    ((pose.y as usize * width + pose.x as usize) * 4 + pose.orient.code() as usize) as NodeId
}

#[derive(Clone, Debug)]
pub struct Subgraph {
    agent: usize,
    model: Arc<ShapeModel>,
    width: usize,
    height: usize,
    valid: FixedBitSet,
    nodes: Vec<NodeId>,
    offsets: Vec<u32>,
    targets: Vec<NodeId>,
    start: NodeId,
    target: NodeId,
    to_target: Vec<u32>,
}

/// Untimed node sequence from start to target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodePath(pub Vec<NodeId>);

impl Subgraph {
    pub fn agent(&self) -> usize {
        self.agent
    }

    pub fn model(&self) -> &Arc<ShapeModel> {
        &self.model
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of pose slots, valid or not. Node ids are below this.
    pub fn capacity(&self) -> usize {
        self.width * self.height * 4
    }

    pub fn start(&self) -> NodeId {
        self.start
    }

    pub fn target(&self) -> NodeId {
        self.target
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    /// Valid nodes in ascending order.
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.valid.contains(node as usize)
    }

    pub fn node_of(&self, pose: Pose) -> Option<NodeId> {
        if pose.x < 0 || pose.y < 0 || pose.x as usize >= self.width || pose.y as usize >= self.height {
            return None;
        }
        let n = node_index(self.width, pose);
        self.contains(n).then_some(n)
    }

    pub fn pose_of(&self, node: NodeId) -> Pose {
        let n = node as usize;
        let cell = n / 4;
        Pose::new(
            (cell % self.width) as i32,
            (cell / self.width) as i32,
            Orientation::from_code((n % 4) as u8).expect("orientation code"),
        )
    }

    /// Out-neighbours in ascending order. Waiting is implicit.
    pub fn successors(&self, node: NodeId) -> &[NodeId] {
        let n = node as usize;
        &self.targets[self.offsets[n] as usize..self.offsets[n + 1] as usize]
    }

    pub fn has_edge(&self, from: NodeId, to: NodeId) -> bool {
        self.successors(from).binary_search(&to).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes.iter().flat_map(move |&u| self.successors(u).iter().map(move |&v| (u, v)))
    }

    pub fn node_cells(&self, node: NodeId) -> Placed<'_> {
        self.model.pose_cells(self.pose_of(node))
    }

    /// Cells swept along an edge or a wait (`from == to`).
    pub fn transfer_cells(&self, from: NodeId, to: NodeId) -> Placed<'_> {
        self.model
            .transfer_cells(self.pose_of(from), self.pose_of(to))
            .expect("subgraph edges are legal actions")
    }

    /// Edge count of a shortest path to the target, ignoring everything else.
    pub fn distance_to_target(&self, node: NodeId) -> u32 {
        self.to_target[node as usize]
    }

    /// Plain-text dump: a `node id x y orient` line per node, then `edge from to` lines.
    pub fn write_edge_list(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "# agent {} nodes {} edges {}", self.agent, self.node_count(), self.edge_count())?;
        for &n in &self.nodes {
            let p = self.pose_of(n);
            writeln!(w, "node {n} {} {} {}", p.x, p.y, p.orient.code())?;
        }
        for (u, v) in self.edges() {
            writeln!(w, "edge {u} {v}")?;
        }
        Ok(())
    }

    /// An empty avoid set sized for this graph.
    pub fn empty_node_set(&self) -> FixedBitSet {
        FixedBitSet::with_capacity(self.capacity())
    }
}

/// Builds the graph of every collision-free pose and legal transfer for one agent.
pub fn build_subgraph(agent: &AgentSpec, map: &GridMap, dfield: &DistanceField, sweep: &SweepConfig) -> Result<Subgraph, SubgraphError> {
    let model = ShapeModel::new(agent.shape, *sweep).map_err(|source| SubgraphError::Geometry { agent: agent.id, source })?;
    build_with_model(agent, Arc::new(model), map, dfield)
}

pub fn build_with_model(agent: &AgentSpec, model: Arc<ShapeModel>, map: &GridMap, dfield: &DistanceField) -> Result<Subgraph, SubgraphError> {
    let (width, height) = (map.width(), map.height());
    let capacity = width * height * 4;
    let mut valid = FixedBitSet::with_capacity(capacity);
    let mut nodes = Vec::new();
    for y in 0..height as i32 {
        for x in 0..width as i32 {
            for o in [0u8, 1, 2, 3] {
                let pose = Pose::new(x, y, Orientation::from_code(o).expect("code"));
                if !model.collides_with_map(Motion::At(pose), map, dfield) {
                    let n = node_index(width, pose);
                    valid.insert(n as usize);
                    nodes.push(n);
                }
            }
        }
    }
    let in_graph = |p: Pose| map.in_bounds(p.x, p.y) && valid.contains(node_index(width, p) as usize);
    for (which, pose) in [("start", agent.start), ("target", agent.target)] {
        if !in_graph(pose) {
            return Err(if which == "start" {
                SubgraphError::StartBlocked { agent: agent.id, pose }
            } else {
                SubgraphError::TargetBlocked { agent: agent.id, pose }
            });
        }
    }
    let mut offsets = vec![0u32; capacity + 1];
    let mut targets = Vec::new();
    let mut next = nodes.iter().peekable();
    for slot in 0..capacity {
        if next.peek().is_some_and(|&&n| n as usize == slot) {
            next.next();
            let from = Pose::new(((slot / 4) % width) as i32, ((slot / 4) / width) as i32, Orientation::from_code((slot % 4) as u8).expect("code"));
            let mut succ: Vec<NodeId> = [from.forward(), from.turned(true), from.turned(false)]
                .into_iter()
                .filter(|&to| in_graph(to) && !model.collides_with_map(Motion::Transfer(from, to), map, dfield))
                .map(|to| node_index(width, to))
                .collect();
            succ.sort_unstable();
            targets.extend(succ);
        }
        offsets[slot + 1] = targets.len() as u32;
    }
    let mut sg = Subgraph {
        agent: agent.id,
        model,
        width,
        height,
        valid,
        nodes,
        offsets,
        targets,
        start: node_index(width, agent.start),
        target: node_index(width, agent.target),
        to_target: Vec::new(),
    };
    sg.to_target = reverse_distances(&sg);
    Ok(sg)
}

fn reverse_distances(sg: &Subgraph) -> Vec<u32> {
    let cap = sg.capacity();
    let mut pred_offsets = vec![0u32; cap + 1];
    for &v in &sg.targets {
        pred_offsets[v as usize + 1] += 1;
    }
    for i in 0..cap {
        pred_offsets[i + 1] += pred_offsets[i];
    }
    let mut fill = pred_offsets.clone();
    let mut preds = vec![0 as NodeId; sg.targets.len()];
    for (u, v) in sg.edges() {
        preds[fill[v as usize] as usize] = u;
        fill[v as usize] += 1;
    }
    let mut dist = vec![UNREACHABLE; cap];
    let mut queue = VecDeque::from([sg.target]);
    dist[sg.target as usize] = 0;
    while let Some(v) = queue.pop_front() {
        let d = dist[v as usize];
        for &u in &preds[pred_offsets[v as usize] as usize..pred_offsets[v as usize + 1] as usize] {
            if dist[u as usize] == UNREACHABLE {
                dist[u as usize] = d + 1;
                queue.push_back(u);
            }
        }
    }
    dist
}

/// Breadth-first shortest path from start to target that never enters `avoid`.
pub fn search_path(sg: &Subgraph, avoid: &FixedBitSet) -> Option<NodePath> {
    let blocked = |n: NodeId| avoid.contains(n as usize);
    if blocked(sg.start) || blocked(sg.target) {
        return None;
    }
    let mut parent = vec![NodeId::MAX; sg.capacity()];
    parent[sg.start as usize] = sg.start;
    let mut queue = VecDeque::from([sg.start]);
    while let Some(u) = queue.pop_front() {
        if u == sg.target {
            let mut path = vec![u];
            let mut cur = u;
            while cur != sg.start {
                cur = parent[cur as usize];
                path.push(cur);
            }
            path.reverse();
            return Some(NodePath(path));
        }
        for &v in sg.successors(u) {
            if parent[v as usize] == NodeId::MAX && !blocked(v) {
                parent[v as usize] = u;
                queue.push_back(v);
            }
        }
    }
    None
}
