//! Splitting an instance into clusters that can be solved in any order, and
//! clusters into levels that must be solved in sequence.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::problem::Problem;
use crate::relation::{agent_set, sat_of, starts_of, targets_of, AgentSet, SatSet, SatTag};
use crate::scc::{strongly_connected, Csr};
use crate::subgraph::{search_path, NodePath};

#[derive(Debug, Error)]
pub enum DecomposeError {
    #[error("agent {agent} cannot reach its target even when alone")]
    Unsolvable { agent: usize },
    #[error("agent {agent} in level {level} has no path avoiding its certificate set")]
    CertificateFailed { agent: usize, level: usize },
}

#[derive(Clone, Copy, Debug)]
pub struct DecomposeConfig {
    /// Once exceeded, pending pieces are emitted without further splitting.
    pub budget: Duration,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        Self { budget: Duration::from_secs(5) }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct StepTimings {
    pub prep: Duration,
    /// Relevance search and initial clusters.
    pub step1: Duration,
    /// Cluster bipartitions.
    pub step2: Duration,
    /// Solving-order graph and initial levels.
    pub step3: Duration,
    /// Level bipartitions.
    pub step4: Duration,
    pub certify: Duration,
}

impl StepTimings {
    /// Everything except preparation and certificate checking.
    pub fn decomposition(&self) -> Duration {
        self.step1 + self.step2 + self.step3 + self.step4
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Level {
    /// Agent ids, ascending.
    pub agents: Vec<usize>,
    /// Index into [`Decomposition::clusters`].
    pub cluster: usize,
}

/// Evidence that one agent can reach its target around the states it must not touch.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub agent: usize,
    pub level: usize,
    /// Targets of earlier levels and starts of later levels.
    pub avoid_tags: SatSet,
    /// Subgraph nodes related to `avoid_tags`.
    pub avoid_nodes: FixedBitSet,
    pub witness: NodePath,
}

/// One bipartition call and the unavoidance graph it built.
#[derive(Clone, Debug)]
pub struct SplitRecord {
    pub input: Vec<usize>,
    pub unavoidance: Vec<(usize, usize)>,
    pub major: Vec<usize>,
    pub remain: Vec<usize>,
}

#[derive(Clone, Debug, Default)]
pub struct ClusterGraphs {
    pub cluster: Vec<usize>,
    /// Edge `a -> b`: `a` is solved no later than `b`.
    pub solving_order: Vec<(usize, usize)>,
    /// Initial levels (agent lists) in solve order.
    pub initial_levels: Vec<Vec<usize>>,
    /// Edges between indices of `initial_levels`.
    pub level_ordering: Vec<(usize, usize)>,
    pub level_splits: Vec<SplitRecord>,
}

#[derive(Clone, Debug, Default)]
pub struct RelationGraphs {
    /// Undirected relevance edges `(a, b)` with `a < b`.
    pub relevance: Vec<(usize, usize)>,
    pub cluster_splits: Vec<SplitRecord>,
    pub clusters: Vec<ClusterGraphs>,
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    pub agent_count: usize,
    /// Final clusters, ordered by smallest agent id.
    pub clusters: Vec<Vec<usize>>,
    /// Final levels in solve order.
    pub levels: Vec<Level>,
    pub timings: StepTimings,
    /// One per agent, in level order.
    pub certificates: Vec<Certificate>,
    pub graphs: RelationGraphs,
    /// Sorted (descending) subproblem sizes after every bipartition round.
    pub size_history: Vec<Vec<usize>>,
    /// Whether the budget ran out and some pieces were left unsplit.
    pub budget_exhausted: bool,
}

impl Decomposition {
    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.agents.len()).collect()
    }

    pub fn rate(&self) -> f64 {
        decomposition_rate(&self.level_sizes(), self.agent_count)
    }

    /// Text block: timings, sizes, rate and one line per certificate.
    pub fn report(&self) -> String {
        let t = &self.timings;
        let ms = |d: Duration| d.as_secs_f64() * 1e3;
        let mut out = String::new();
        let _ = writeln!(out, "agents,{}", self.agent_count);
        let _ = writeln!(out, "prep_ms,{:.3}", ms(t.prep));
        let _ = writeln!(out, "step1_ms,{:.3}", ms(t.step1));
        let _ = writeln!(out, "step2_ms,{:.3}", ms(t.step2));
        let _ = writeln!(out, "step3_ms,{:.3}", ms(t.step3));
        let _ = writeln!(out, "step4_ms,{:.3}", ms(t.step4));
        let _ = writeln!(out, "certify_ms,{:.3}", ms(t.certify));
        let sizes: Vec<String> = self.level_sizes().iter().map(usize::to_string).collect();
        let _ = writeln!(out, "sizes,{}", sizes.join(" "));
        let _ = writeln!(out, "rate,{:.4}", self.rate());
        let _ = writeln!(out, "budget_exhausted,{}", self.budget_exhausted);
        for (i, l) in self.levels.iter().enumerate() {
            let ids: Vec<String> = l.agents.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "level,{i},cluster,{},agents,{}", l.cluster, ids.join(" "));
        }
        for c in &self.certificates {
            let _ = writeln!(
                out,
                "certificate,agent,{},level,{},avoid_tags,{},avoid_nodes,{},witness_len,{}",
                c.agent,
                c.level,
                c.avoid_tags.count_ones(..),
                c.avoid_nodes.count_ones(..),
                c.witness.0.len()
            );
        }
        out
    }
}

/// Largest subproblem size over the agent count.
pub fn decomposition_rate(sizes: &[usize], total_agents: usize) -> f64 {
    sizes.iter().copied().max().unwrap_or(0) as f64 / total_agents.max(1) as f64
}

/// Compares size lists sorted in decreasing order; `Less` means `a` is the better decomposition.
pub fn compare_decompositions(a: &[usize], b: &[usize]) -> Ordering {
    let sorted = |s: &[usize]| {
        let mut v = s.to_vec();
        v.sort_unstable_by(|x, y| y.cmp(x));
        v
    };
    sorted(a).cmp(&sorted(b))
}

fn ids(set: &FixedBitSet) -> Vec<usize> {
    set.ones().collect()
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut c = x;
        while self.0[c] != r {
            let next = self.0[c];
            self.0[c] = r;
            c = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Groups of `members` connected by `edges` (directions ignored), each ascending,
/// ordered by smallest member.
fn weak_components(k: usize, members: &[usize], edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::new(k);
    for &(a, b) in edges {
        uf.union(a, b);
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_group = vec![usize::MAX; k];
    for &m in members {
        let r = uf.find(m);
        if root_group[r] == usize::MAX {
            root_group[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_group[r]].push(m);
    }
    groups
}

/// Outcome of one bipartition.
#[derive(Clone, Debug)]
pub struct Split {
    pub major: AgentSet,
    pub remain: AgentSet,
    pub unavoidance: Vec<(usize, usize)>,
}

fn agent_search(p: &Problem, i: usize, avail: &AgentSet, avoid: &AgentSet) -> Option<AgentSet> {
    p.graphs[i].simplified.search_path_agent(avail, avoid)
}

fn sat_search(p: &Problem, i: usize, avail: &SatSet, avoid: &SatSet) -> Option<SatSet> {
    p.graphs[i].simplified.search_path_sat(avail, avoid)
}

fn union(a: &FixedBitSet, b: &FixedBitSet) -> FixedBitSet {
    let mut out = a.clone();
    out.union_with(b);
    out
}

/// Splits a cluster into a major part and a remainder so that every agent of
/// each part has a path avoiding the other part's starts and targets.
pub fn bipartition_cluster(p: &Problem, cluster: &AgentSet) -> Split {
    let k = p.agent_count();
    let members = ids(cluster);
    let empty = FixedBitSet::with_capacity(k);
    if members.len() <= 1 {
        return Split { major: cluster.clone(), remain: empty, unavoidance: Vec::new() };
    }
    let mut unavoidance = Vec::new();
    for &i in &members {
        for &j in &members {
            if i != j && agent_search(p, i, cluster, &agent_set(k, [j])).is_none() {
                unavoidance.push((i, j));
            }
        }
    }
    let groups = weak_components(k, &members, &unavoidance);
    let largest = groups
        .iter()
        .max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0])))
        .expect("non-empty cluster");
    let mut major = agent_set(k, largest.iter().copied());
    let mut remain = cluster.clone();
    remain.difference_with(&major);

    while !remain.is_clear() {
        // pull remaining agents that cannot keep clear of the major part
        loop {
            let mut moved = false;
            for i in ids(&remain) {
                if agent_search(p, i, &remain, &major).is_none() {
                    remain.set(i, false);
                    major.insert(i);
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }
        // major agents that must cross the remainder drag those agents in
        loop {
            let mut moved = false;
            for i in ids(&major) {
                if agent_search(p, i, &major, &remain).is_some() {
                    continue;
                }
                match agent_search(p, i, cluster, &empty) {
                    Some(path) => {
                        let mut hit = path;
                        hit.intersect_with(&remain);
                        if !hit.is_clear() {
                            remain.difference_with(&hit);
                            major.union_with(&hit);
                            moved = true;
                        }
                    }
                    None => {
                        major = cluster.clone();
                        remain.clear();
                        break;
                    }
                }
            }
            if !moved {
                break;
            }
        }
        let major_ok = major.ones().all(|i| agent_search(p, i, &major, &empty).is_some());
        let remain_ok = remain.ones().all(|i| agent_search(p, i, &remain, &empty).is_some());
        if major_ok && remain_ok {
            break;
        }
    }
    Split { major, remain, unavoidance }
}

/// Splits one level into a part solvable first and a remainder solvable after it.
/// `base_avoid` holds tags already forbidden (earlier targets, later starts);
/// `avail` restricts searches to this cluster's tags.
pub fn bipartition_level(p: &Problem, level: &AgentSet, base_avoid: &SatSet, avail: &SatSet) -> Split {
    let k = p.agent_count();
    let members = ids(level);
    if members.len() <= 1 {
        return Split { major: level.clone(), remain: FixedBitSet::with_capacity(k), unavoidance: Vec::new() };
    }
    let mut unavoidance = Vec::new();
    for &i in &members {
        for &j in &members {
            if i == j {
                continue;
            }
            let mut avoid = base_avoid.clone();
            avoid.insert(SatTag::Target(j).index());
            if sat_search(p, i, avail, &avoid).is_none() {
                unavoidance.push((i, j));
            }
            let mut avoid = base_avoid.clone();
            avoid.insert(SatTag::Start(j).index());
            if sat_search(p, i, avail, &avoid).is_none() {
                unavoidance.push((j, i));
            }
        }
    }
    unavoidance.sort_unstable();
    unavoidance.dedup();
    let mut out_degree = vec![0usize; k];
    for &(a, _) in &unavoidance {
        out_degree[a] += 1;
    }
    let hub = *members
        .iter()
        .max_by(|&&a, &&b| out_degree[a].cmp(&out_degree[b]).then(b.cmp(&a)))
        .expect("non-empty level");
    let groups = weak_components(k, &members, &unavoidance);
    let group = groups.iter().find(|g| g.contains(&hub)).expect("hub has a group");
    let mut major = agent_set(k, group.iter().copied());
    let mut remain = level.clone();
    remain.difference_with(&major);

    let major_clear = |remain: &AgentSet, i: usize| {
        sat_search(p, i, avail, &union(base_avoid, &starts_of(k, remain))).is_some()
    };
    let remain_clear = |major: &AgentSet, i: usize| sat_search(p, i, avail, &union(base_avoid, &targets_of(k, major))).is_some();

    while !remain.is_clear() {
        loop {
            let mut moved = false;
            for i in ids(&remain) {
                if !remain_clear(&major, i) {
                    remain.set(i, false);
                    major.insert(i);
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }
        loop {
            let mut moved = false;
            for i in ids(&major) {
                if major_clear(&remain, i) {
                    continue;
                }
                match sat_search(p, i, avail, base_avoid) {
                    Some(path) => {
                        let dragged: Vec<usize> = remain.ones().filter(|&j| path.contains(SatTag::Start(j).index())).collect();
                        for j in dragged {
                            remain.set(j, false);
                            major.insert(j);
                            moved = true;
                        }
                    }
                    None => {
                        major = level.clone();
                        remain.clear();
                        break;
                    }
                }
            }
            if !moved {
                break;
            }
        }
        let major_ok = major.ones().all(|i| major_clear(&remain, i));
        let remain_ok = remain.ones().all(|i| remain_clear(&major, i));
        if major_ok && remain_ok {
            break;
        }
    }
    Split { major, remain, unavoidance }
}

fn sorted_sizes(pieces: &[usize]) -> Vec<usize> {
    let mut v = pieces.to_vec();
    v.sort_unstable_by(|a, b| b.cmp(a));
    v
}

/// Clusters of the instance: connected groups of mutually relevant agents, bipartitioned until independent.
pub fn decompose_to_clusters(
    p: &Problem,
    deadline: Instant,
    graphs: &mut RelationGraphs,
    timings: &mut StepTimings,
    history: &mut Vec<Vec<usize>>,
) -> Result<(Vec<AgentSet>, bool), DecomposeError> {
    let k = p.agent_count();
    let started = Instant::now();
    let empty = FixedBitSet::with_capacity(k);
    let mut relevance = BTreeSet::new();
    for i in 0..k {
        let related = agent_search(p, i, &empty, &empty).ok_or(DecomposeError::Unsolvable { agent: i })?;
        for j in related.ones().filter(|&j| j != i) {
            relevance.insert((i.min(j), i.max(j)));
        }
    }
    graphs.relevance = relevance.into_iter().collect();
    let all: Vec<usize> = (0..k).collect();
    let initial = weak_components(k, &all, &graphs.relevance);
    timings.step1 = started.elapsed();

    let started = Instant::now();
    let mut exhausted = false;
    let mut done: Vec<AgentSet> = Vec::new();
    let mut pending: Vec<usize> = initial.iter().map(Vec::len).collect();
    history.push(sorted_sizes(&pending));
    for (ci, c) in initial.iter().enumerate() {
        let mut temp = agent_set(k, c.iter().copied());
        while !temp.is_clear() {
            if Instant::now() >= deadline {
                exhausted = true;
                done.push(temp);
                break;
            }
            let split = bipartition_cluster(p, &temp);
            graphs.cluster_splits.push(SplitRecord {
                input: ids(&temp),
                unavoidance: split.unavoidance,
                major: ids(&split.major),
                remain: ids(&split.remain),
            });
            let major_len = split.major.count_ones(..);
            done.push(split.major);
            temp = split.remain;
            // sizes: finished pieces, this cluster's remainder, untouched clusters
            pending = done.iter().map(|s| s.count_ones(..)).collect();
            if !temp.is_clear() {
                pending.push(temp.count_ones(..));
            }
            pending.extend(initial[ci + 1..].iter().map(Vec::len));
            if major_len > 0 {
                history.push(sorted_sizes(&pending));
            }
        }
    }
    done.sort_by_key(|s| s.minimum());
    timings.step2 = started.elapsed();
    Ok((done, exhausted))
}

/// Levels of one independent cluster, in solve order.
pub fn decompose_cluster_to_levels(
    p: &Problem,
    cluster: &AgentSet,
    deadline: Instant,
    record: &mut ClusterGraphs,
    timings: &mut StepTimings,
) -> (Vec<AgentSet>, bool) {
    let k = p.agent_count();
    let started = Instant::now();
    let members = ids(cluster);
    let avail = sat_of(k, cluster);
    let none = FixedBitSet::with_capacity(2 * k);
    let mut local = vec![usize::MAX; k];
    for (li, &a) in members.iter().enumerate() {
        local[a] = li;
    }
    let mut order_edges = BTreeSet::new();
    for &i in &members {
        // independent clusters always have such a path; fall back to no constraints otherwise
        let related = sat_search(p, i, &avail, &none).unwrap_or_else(|| FixedBitSet::with_capacity(2 * k));
        for t in related.ones() {
            let tag = SatTag::from_index(t);
            let j = tag.agent();
            if j == i || !cluster.contains(j) {
                continue;
            }
            match tag {
                SatTag::Start(_) => order_edges.insert((j, i)),
                SatTag::Target(_) => order_edges.insert((i, j)),
            };
        }
    }
    record.cluster = members.clone();
    record.solving_order = order_edges.iter().copied().collect();
    let local_edges: Vec<(usize, usize)> = order_edges.iter().map(|&(a, b)| (local[a], local[b])).collect();
    let (comp, count) = strongly_connected(&Csr::from_edges(members.len(), &local_edges));
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); count];
    for (li, &c) in comp.iter().enumerate() {
        groups[c].push(members[li]);
    }
    let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); count];
    let mut indegree = vec![0usize; count];
    for &(a, b) in &local_edges {
        let (ca, cb) = (comp[a], comp[b]);
        if ca != cb && succ[ca].insert(cb) {
            indegree[cb] += 1;
        }
    }
    // Kahn's order, smallest agent id first among ready groups
    let mut ready: BTreeSet<(usize, usize)> = (0..count).filter(|&g| indegree[g] == 0).map(|g| (groups[g][0], g)).collect();
    let mut topo = Vec::with_capacity(count);
    while let Some((_, g)) = ready.pop_first() {
        topo.push(g);
        for &h in &succ[g] {
            indegree[h] -= 1;
            if indegree[h] == 0 {
                ready.insert((groups[h][0], h));
            }
        }
    }
    let mut position = vec![0; count];
    for (pos, &g) in topo.iter().enumerate() {
        position[g] = pos;
    }
    record.initial_levels = topo.iter().map(|&g| groups[g].clone()).collect();
    record.level_ordering = (0..count).flat_map(|g| succ[g].iter().map(move |&h| (g, h))).map(|(g, h)| (position[g], position[h])).collect();
    record.level_ordering.sort_unstable();
    timings.step3 += started.elapsed();

    let started = Instant::now();
    let mut exhausted = false;
    let mut avoid_sat = FixedBitSet::with_capacity(2 * k);
    let mut levels = Vec::new();
    for (pos, level) in record.initial_levels.clone().iter().enumerate() {
        let later = agent_set(k, record.initial_levels[pos + 1..].iter().flatten().copied());
        let later_starts = starts_of(k, &later);
        let mut temp = agent_set(k, level.iter().copied());
        while !temp.is_clear() {
            if Instant::now() >= deadline {
                exhausted = true;
                avoid_sat.union_with(&targets_of(k, &temp));
                levels.push(temp);
                break;
            }
            let base = union(&avoid_sat, &later_starts);
            let split = bipartition_level(p, &temp, &base, &avail);
            record.level_splits.push(SplitRecord {
                input: ids(&temp),
                unavoidance: split.unavoidance,
                major: ids(&split.major),
                remain: ids(&split.remain),
            });
            avoid_sat.union_with(&targets_of(k, &split.major));
            levels.push(split.major);
            temp = split.remain;
        }
    }
    timings.step4 += started.elapsed();
    (levels, exhausted)
}

/// Checks every agent against the final level sequence and records a witness path.
pub fn certify(p: &Problem, levels: &[Level]) -> Result<Vec<Certificate>, DecomposeError> {
    let k = p.agent_count();
    let mut certificates = Vec::with_capacity(k);
    for (x, level) in levels.iter().enumerate() {
        let earlier = agent_set(k, levels[..x].iter().flat_map(|l| l.agents.iter().copied()));
        let later = agent_set(k, levels[x + 1..].iter().flat_map(|l| l.agents.iter().copied()));
        let avoid_tags = union(&targets_of(k, &earlier), &starts_of(k, &later));
        for &i in &level.agents {
            let g = &p.graphs[i];
            let avoid_nodes = g.relations.nodes_touching(&g.subgraph, &avoid_tags);
            let witness = search_path(&g.subgraph, &avoid_nodes).ok_or(DecomposeError::CertificateFailed { agent: i, level: x })?;
            certificates.push(Certificate { agent: i, level: x, avoid_tags: avoid_tags.clone(), avoid_nodes, witness });
        }
    }
    Ok(certificates)
}

/// Full pipeline: clusters, levels per cluster, certificates.
pub fn decompose(p: &Problem, config: &DecomposeConfig) -> Result<Decomposition, DecomposeError> {
    let deadline = Instant::now() + config.budget;
    let mut timings = StepTimings { prep: p.prep_time, ..Default::default() };
    let mut graphs = RelationGraphs::default();
    let mut history = Vec::new();
    let (clusters, mut exhausted) = decompose_to_clusters(p, deadline, &mut graphs, &mut timings, &mut history)?;
    let mut levels = Vec::new();
    for (ci, c) in clusters.iter().enumerate() {
        let mut record = ClusterGraphs::default();
        let (cl, ex) = decompose_cluster_to_levels(p, c, deadline, &mut record, &mut timings);
        exhausted |= ex;
        graphs.clusters.push(record);
        levels.extend(cl.into_iter().map(|agents| Level { agents: ids(&agents), cluster: ci }));
        let mut sizes: Vec<usize> = levels.iter().map(|l| l.agents.len()).collect();
        sizes.extend(clusters[ci + 1..].iter().map(|c| c.count_ones(..)));
        history.push(sorted_sizes(&sizes));
    }
    let started = Instant::now();
    let certificates = certify(p, &levels)?;
    timings.certify = started.elapsed();
    Ok(Decomposition {
        agent_count: p.agent_count(),
        clusters: clusters.iter().map(ids).collect(),
        levels,
        timings,
        certificates,
        graphs,
        size_history: history,
        budget_exhausted: exhausted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparator_prefers_smaller_prefix() {
        assert_eq!(compare_decompositions(&[40, 20, 15, 14, 11], &[40, 20, 19, 13, 8]), Ordering::Less);
        assert_eq!(compare_decompositions(&[11, 14, 40, 15, 20], &[8, 13, 40, 19, 20]), Ordering::Less);
        assert_eq!(compare_decompositions(&[3, 2, 1], &[1, 2, 3]), Ordering::Equal);
    }

    #[test]
    fn rate_of_undecomposed() {
        assert_eq!(decomposition_rate(&[10], 10), 1.0);
        assert_eq!(decomposition_rate(&[2, 1, 1], 4), 0.5);
    }

    #[test]
    fn weak_components_ignore_direction() {
        let g = weak_components(5, &[0, 1, 2, 3, 4], &[(3, 1), (4, 2)]);
        assert_eq!(g, vec![vec![0], vec![1, 3], vec![2, 4]]);
    }
}
