//! Which poses of an agent touch other agents' starts and targets, the
//! component graph built from those relations, and relation-aware searches.

use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::cmp::Reverse;
use std::fmt;
use std::io::{self, Write};

use fixedbitset::FixedBitSet;

use crate::geometry::{Cell, ShapeModel};
use crate::instance::AgentSpec;
use crate::scc::{strongly_connected, Csr};
use crate::subgraph::{NodeId, Subgraph};

/// An agent's start or target state. Indexed densely as `2 * agent + flavor`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SatTag {
    Start(usize),
    Target(usize),
}

impl SatTag {
    pub fn index(self) -> usize {
        match self {
            Self::Start(a) => 2 * a,
            Self::Target(a) => 2 * a + 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i.is_multiple_of(2) {
            Self::Start(i / 2)
        } else {
            Self::Target(i / 2)
        }
    }

    pub fn agent(self) -> usize {
        match self {
            Self::Start(a) | Self::Target(a) => a,
        }
    }
}

impl fmt::Display for SatTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Start(a) => write!(f, "S{a}"),
            Self::Target(a) => write!(f, "T{a}"),
        }
    }
}

/// Set of agents, sized to the instance.
pub type AgentSet = FixedBitSet;
/// Set of start/target tags, sized to twice the instance.
pub type SatSet = FixedBitSet;

pub fn agent_set(agent_count: usize, members: impl IntoIterator<Item = usize>) -> AgentSet {
    let mut s = FixedBitSet::with_capacity(agent_count);
    s.extend(members);
    s
}

/// Start and target tags of every agent in `agents`.
pub fn sat_of(agent_count: usize, agents: &AgentSet) -> SatSet {
    let mut s = FixedBitSet::with_capacity(2 * agent_count);
    for a in agents.ones() {
        s.insert(2 * a);
        s.insert(2 * a + 1);
    }
    s
}

pub fn starts_of(agent_count: usize, agents: &AgentSet) -> SatSet {
    let mut s = FixedBitSet::with_capacity(2 * agent_count);
    s.extend(agents.ones().map(|a| 2 * a));
    s
}

pub fn targets_of(agent_count: usize, agents: &AgentSet) -> SatSet {
    let mut s = FixedBitSet::with_capacity(2 * agent_count);
    s.extend(agents.ones().map(|a| 2 * a + 1));
    s
}

/// Agents owning at least one tag of `tags`.
pub fn agents_of(agent_count: usize, tags: &SatSet) -> AgentSet {
    agent_set(agent_count, tags.ones().map(|t| t / 2))
}

/// Relation set of every node of one agent's subgraph, interned.
#[derive(Clone, Debug)]
pub struct RelationTable {
    agent: usize,
    agent_count: usize,
    sets: Vec<SatSet>,
    node_set: Vec<u32>,
}

impl RelationTable {
    pub fn agent(&self) -> usize {
        self.agent
    }

    pub fn agent_count(&self) -> usize {
        self.agent_count
    }

    /// Tags related to `node`. Never contains the owner's own tags.
    pub fn tags(&self, node: NodeId) -> &SatSet {
        &self.sets[self.node_set[node as usize] as usize]
    }

    /// Interned id of the node's relation set; equal ids mean equal sets.
    pub fn set_id(&self, node: NodeId) -> u32 {
        self.node_set[node as usize]
    }

    /// Nodes of `sg` whose relation set meets `tags`.
    pub fn nodes_touching(&self, sg: &Subgraph, tags: &SatSet) -> FixedBitSet {
        let hits: Vec<bool> = self.sets.iter().map(|s| !s.is_disjoint(tags)).collect();
        let mut out = sg.empty_node_set();
        for &n in sg.nodes() {
            if hits[self.node_set[n as usize] as usize] {
                out.insert(n as usize);
            }
        }
        out
    }
}

/// Tags every node of `sg` whose pose, or any transfer into or out of it,
/// overlaps another agent's start or target footprint.
pub fn compute_relations(sg: &Subgraph, agents: &[AgentSpec], models: &[&ShapeModel]) -> RelationTable {
    let k = agents.len();
    let (w, h) = (sg.width(), sg.height());
    let mut cell_tags: Vec<Vec<u32>> = vec![Vec::new(); w * h];
    let mut bbox = [i32::MAX, i32::MAX, i32::MIN, i32::MIN];
    for (j, a) in agents.iter().enumerate() {
        if j == sg.agent() {
            continue;
        }
        for (tag, pose) in [(SatTag::Start(j), a.start), (SatTag::Target(j), a.target)] {
            for c in models[j].pose_cells(pose) {
                if c.x >= 0 && c.y >= 0 && (c.x as usize) < w && (c.y as usize) < h {
                    cell_tags[c.y as usize * w + c.x as usize].push(tag.index() as u32);
                    bbox = [bbox[0].min(c.x), bbox[1].min(c.y), bbox[2].max(c.x), bbox[3].max(c.y)];
                }
            }
        }
    }
    let collect = |cells: &mut dyn Iterator<Item = Cell>, acc: &mut Vec<u32>| {
        for c in cells {
            if c.x >= bbox[0] && c.x <= bbox[2] && c.y >= bbox[1] && c.y <= bbox[3] {
                acc.extend_from_slice(&cell_tags[c.y as usize * w + c.x as usize]);
            }
        }
    };
    let mut per_node: HashMap<NodeId, Vec<u32>> = HashMap::new();
    if bbox[0] <= bbox[2] {
        for &u in sg.nodes() {
            let mut acc = Vec::new();
            collect(&mut sg.node_cells(u), &mut acc);
            if !acc.is_empty() {
                per_node.entry(u).or_default().extend(acc);
            }
        }
        for (u, v) in sg.edges() {
            let mut acc = Vec::new();
            collect(&mut sg.transfer_cells(u, v), &mut acc);
            if !acc.is_empty() {
                per_node.entry(u).or_default().extend_from_slice(&acc);
                per_node.entry(v).or_default().extend(acc);
            }
        }
    }
    let mut sets = vec![FixedBitSet::with_capacity(2 * k)];
    let mut interned: HashMap<Vec<u32>, u32> = HashMap::new();
    let mut node_set = vec![0u32; sg.capacity()];
    let mut keys: Vec<NodeId> = per_node.keys().copied().collect();
    keys.sort_unstable();
    for u in keys {
        let mut tags = per_node.remove(&u).expect("key");
        tags.sort_unstable();
        tags.dedup();
        let id = *interned.entry(tags).or_insert_with_key(|t| {
            let mut s = FixedBitSet::with_capacity(2 * k);
            s.extend(t.iter().map(|&x| x as usize));
            sets.push(s);
            (sets.len() - 1) as u32
        });
        node_set[u as usize] = id;
    }
    RelationTable { agent: sg.agent(), agent_count: k, sets, node_set }
}

#[derive(Clone, Debug)]
pub struct Component {
    /// Subgraph nodes, ascending.
    pub members: Vec<NodeId>,
    pub tags: SatSet,
    /// Agents owning some tag in `tags`.
    pub agents: AgentSet,
}

/// Condensed graph of one agent's subgraph.
#[derive(Clone, Debug)]
pub struct ConnectivityGraph {
    agent: usize,
    agent_count: usize,
    components: Vec<Component>,
    edges: Vec<Vec<usize>>,
    start: usize,
    target: usize,
    simplified: bool,
}

/// Strongly connected components over edges joining equally related nodes,
/// with an edge between components wherever an original edge crosses them.
pub fn condense(sg: &Subgraph, rel: &RelationTable) -> ConnectivityGraph {
    let nodes = sg.nodes();
    let mut dense = vec![u32::MAX; sg.capacity()];
    for (i, &n) in nodes.iter().enumerate() {
        dense[n as usize] = i as u32;
    }
    let same: Vec<(usize, usize)> = sg
        .edges()
        .filter(|&(u, v)| rel.set_id(u) == rel.set_id(v))
        .map(|(u, v)| (dense[u as usize] as usize, dense[v as usize] as usize))
        .collect();
    let (comp, count) = strongly_connected(&Csr::from_edges(nodes.len(), &same));
    let k = rel.agent_count();
    let mut components: Vec<Component> = (0..count)
        .map(|_| Component { members: Vec::new(), tags: FixedBitSet::new(), agents: FixedBitSet::new() })
        .collect();
    for (i, &n) in nodes.iter().enumerate() {
        let c = &mut components[comp[i]];
        if c.members.is_empty() {
            c.tags = rel.tags(n).clone();
            c.agents = agents_of(k, &c.tags);
        }
        c.members.push(n);
    }
    let mut edges = vec![Vec::new(); count];
    for (u, v) in sg.edges() {
        let (cu, cv) = (comp[dense[u as usize] as usize], comp[dense[v as usize] as usize]);
        if cu != cv {
            edges[cu].push(cv);
        }
    }
    for e in &mut edges {
        e.sort_unstable();
        e.dedup();
    }
    ConnectivityGraph {
        agent: sg.agent(),
        agent_count: k,
        components,
        edges,
        start: comp[dense[sg.start() as usize] as usize],
        target: comp[dense[sg.target() as usize] as usize],
        simplified: false,
    }
}

/// Drops relation-free components other than start and target, joining the
/// kept ones whenever a path through dropped components connects them.
pub fn simplify(cg: &ConnectivityGraph) -> ConnectivityGraph {
    let n = cg.components.len();
    let keep: Vec<bool> = (0..n)
        .map(|c| !cg.components[c].tags.is_clear() || c == cg.start || c == cg.target)
        .collect();
    let mut new_id = vec![usize::MAX; n];
    let mut components = Vec::new();
    for c in 0..n {
        if keep[c] {
            new_id[c] = components.len();
            components.push(cg.components[c].clone());
        }
    }
    let mut edges = vec![Vec::new(); components.len()];
    let mut seen = vec![usize::MAX; n];
    let mut stack = Vec::new();
    for a in 0..n {
        if !keep[a] {
            continue;
        }
        stack.clear();
        stack.extend_from_slice(&cg.edges[a]);
        for &s in &cg.edges[a] {
            seen[s] = a;
        }
        while let Some(c) = stack.pop() {
            if keep[c] {
                if c != a {
                    edges[new_id[a]].push(new_id[c]);
                }
                continue;
            }
            for &d in &cg.edges[c] {
                if seen[d] != a {
                    seen[d] = a;
                    stack.push(d);
                }
            }
        }
        edges[new_id[a]].sort_unstable();
        edges[new_id[a]].dedup();
    }
    ConnectivityGraph {
        agent: cg.agent,
        agent_count: cg.agent_count,
        components,
        edges,
        start: new_id[cg.start],
        target: new_id[cg.target],
        simplified: true,
    }
}

/// Cap on stored labels per component before falling back to plain reachability.
pub const LABEL_CAP: usize = 64;

impl ConnectivityGraph {
    pub fn agent(&self) -> usize {
        self.agent
    }

    pub fn agent_count(&self) -> usize {
        self.agent_count
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn successors(&self, c: usize) -> &[usize] {
        &self.edges[c]
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn is_simplified(&self) -> bool {
        self.simplified
    }

    /// Component of a subgraph node, if it survived simplification.
    pub fn component_of(&self, node: NodeId) -> Option<usize> {
        self.components.iter().position(|c| c.members.binary_search(&node).is_ok())
    }

    /// Agents that a start-to-target path must relate to, using only
    /// components whose agents lie in `avail` (any, if `avail` is empty) and
    /// miss `avoid`. Always contains the owner; `None` if no path exists.
    pub fn search_path_agent(&self, avail: &AgentSet, avoid: &AgentSet) -> Option<AgentSet> {
        let allowed: Vec<bool> = self
            .components
            .iter()
            .map(|c| (avail.is_clear() || c.agents.is_subset(avail)) && c.agents.is_disjoint(avoid))
            .collect();
        let labels: Vec<&FixedBitSet> = self.components.iter().map(|c| &c.agents).collect();
        let mut out = self.label_search(&labels, &allowed)?;
        out.grow(self.agent_count);
        out.insert(self.agent);
        Some(out)
    }

    /// Tag-level variant of [`search_path_agent`](Self::search_path_agent).
    /// Always contains the owner's start and target tags.
    pub fn search_path_sat(&self, avail: &SatSet, avoid: &SatSet) -> Option<SatSet> {
        let allowed: Vec<bool> = self
            .components
            .iter()
            .map(|c| (avail.is_clear() || c.tags.is_subset(avail)) && c.tags.is_disjoint(avoid))
            .collect();
        let labels: Vec<&FixedBitSet> = self.components.iter().map(|c| &c.tags).collect();
        let mut out = self.label_search(&labels, &allowed)?;
        out.grow(2 * self.agent_count);
        out.insert(2 * self.agent);
        out.insert(2 * self.agent + 1);
        Some(out)
    }

    /// Best-first over accumulated label sets, smallest set first, with subset dominance.
    fn label_search(&self, labels: &[&FixedBitSet], allowed: &[bool]) -> Option<FixedBitSet> {
        if !allowed[self.start] || !allowed[self.target] {
            return None;
        }
        let mut stored: Vec<Vec<(FixedBitSet, bool)>> = vec![Vec::new(); self.components.len()];
        let mut heap = BinaryHeap::new();
        let mut capped = false;
        stored[self.start].push((labels[self.start].clone(), true));
        heap.push(Reverse((labels[self.start].count_ones(..), 0usize, self.start, 0usize)));
        let mut seq = 1;
        while let Some(Reverse((_, _, comp, idx))) = heap.pop() {
            if !stored[comp][idx].1 {
                continue;
            }
            let set = stored[comp][idx].0.clone();
            if comp == self.target {
                return Some(set);
            }
            for &next in &self.edges[comp] {
                if !allowed[next] {
                    continue;
                }
                let mut cand = set.clone();
                cand.union_with(labels[next]);
                let here = &mut stored[next];
                if here.iter().any(|(s, alive)| *alive && s.is_subset(&cand)) {
                    continue;
                }
                if here.iter().filter(|(_, alive)| *alive).count() >= LABEL_CAP {
                    capped = true;
                    continue;
                }
                for (s, alive) in here.iter_mut() {
                    if *alive && cand.is_subset(s) {
                        *alive = false;
                    }
                }
                let card = cand.count_ones(..);
                here.push((cand, true));
                heap.push(Reverse((card, seq, next, here.len() - 1)));
                seq += 1;
            }
        }
        if capped {
            self.any_path_labels(labels, allowed)
        } else {
            None
        }
    }

    /// Union of labels along a breadth-first path; used when labels were capped.
    fn any_path_labels(&self, labels: &[&FixedBitSet], allowed: &[bool]) -> Option<FixedBitSet> {
        let mut parent = vec![usize::MAX; self.components.len()];
        parent[self.start] = self.start;
        let mut queue = VecDeque::from([self.start]);
        while let Some(c) = queue.pop_front() {
            if c == self.target {
                let mut out = labels[c].clone();
                let mut cur = c;
                while cur != self.start {
                    cur = parent[cur];
                    out.union_with(labels[cur]);
                }
                return Some(out);
            }
            for &d in &self.edges[c] {
                if allowed[d] && parent[d] == usize::MAX {
                    parent[d] = c;
                    queue.push_back(d);
                }
            }
        }
        None
    }

    /// Text dump: one line per component with its size, tags and successors.
    pub fn write_dump(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(
            w,
            "# agent {} components {} start {} target {} simplified {}",
            self.agent,
            self.components.len(),
            self.start,
            self.target,
            self.simplified
        )?;
        for (i, c) in self.components.iter().enumerate() {
            let tags: Vec<String> = c.tags.ones().map(|t| SatTag::from_index(t).to_string()).collect();
            writeln!(w, "{i} size={} tags=[{}] next={:?}", c.members.len(), tags.join(","), self.edges[i])?;
        }
        Ok(())
    }
}
