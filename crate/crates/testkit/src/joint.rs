//! Joint-state optimum for two agents, used to check the solver's sum of costs.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use lamapf_core::geometry::{motion_footprint, Footprint, Motion, Pose, SweepConfig};
use lamapf_core::instance::AgentSpec;
use lamapf_core::map::GridMap;

use crate::graphs::{brute_graph, BruteGraph};

struct Agent<'a> {
    spec: &'a AgentSpec,
    graph: BruteGraph,
    cache: HashMap<Motion, Footprint>,
    sweep: SweepConfig,
}

impl Agent<'_> {
    fn fp(&mut self, m: Motion) -> &Footprint {
        let (shape, sweep) = (self.spec.shape, self.sweep);
        self.cache.entry(m).or_insert_with(|| motion_footprint(&shape, m, &sweep).unwrap())
    }

    fn moves(&self, p: Pose) -> Vec<Pose> {
        let mut out = vec![p];
        out.extend([p.forward(), p.turned(true), p.turned(false)].into_iter().filter(|&q| self.graph.edges.contains(&(p, q))));
        out
    }
}

/// Optimal sum of arrival times, where an agent that has arrived may commit to
/// staying put for good and stops paying. `None` if no joint plan exists.
pub fn joint_optimal_soc(map: &GridMap, a: &AgentSpec, b: &AgentSpec, sweep: &SweepConfig) -> Option<usize> {
    let mut ag = [a, b].map(|spec| Agent { spec, graph: brute_graph(map, spec, sweep), cache: HashMap::new(), sweep: *sweep });
    if ag.iter().any(|x| !x.graph.nodes.contains(&x.spec.start) || !x.graph.nodes.contains(&x.spec.target)) {
        return None;
    }
    type State = (Pose, Pose, bool, bool);
    let mut dist: HashMap<State, usize> = HashMap::new();
    let mut heap = BinaryHeap::new();
    fn push(dist: &mut HashMap<State, usize>, heap: &mut BinaryHeap<Reverse<(usize, State)>>, cost: usize, s: State) {
        if dist.get(&s).is_none_or(|&d| cost < d) {
            dist.insert(s, cost);
            heap.push(Reverse((cost, s)));
        }
    }
    {
        let (p0, p1) = (a.start, b.start);
        let f0 = ag[0].fp(Motion::At(p0)).clone();
        if f0.intersects(ag[1].fp(Motion::At(p1))) {
            return None;
        }
        for (d0, d1) in [(false, false), (true, false), (false, true), (true, true)] {
            if (!d0 || p0 == a.target) && (!d1 || p1 == b.target) {
                push(&mut dist, &mut heap, 0, (p0, p1, d0, d1));
            }
        }
    }
    while let Some(Reverse((cost, s @ (p0, p1, d0, d1)))) = heap.pop() {
        if dist.get(&s).is_some_and(|&d| d < cost) {
            continue;
        }
        if d0 && d1 {
            return Some(cost);
        }
        let m0 = if d0 { vec![p0] } else { ag[0].moves(p0) };
        let m1 = if d1 { vec![p1] } else { ag[1].moves(p1) };
        let step = usize::from(!d0) + usize::from(!d1);
        for &q0 in &m0 {
            for &q1 in &m1 {
                let f0 = ag[0].fp(Motion::Transfer(p0, q0)).clone();
                if f0.intersects(ag[1].fp(Motion::Transfer(p1, q1))) {
                    continue;
                }
                let g0 = ag[0].fp(Motion::At(q0)).clone();
                if g0.intersects(ag[1].fp(Motion::At(q1))) {
                    continue;
                }
                for e0 in [d0, true] {
                    for e1 in [d1, true] {
                        if (e0 && !d0 && q0 != a.target) || (e1 && !d1 && q1 != b.target) {
                            continue;
                        }
                        push(&mut dist, &mut heap, cost + step, (q0, q1, e0, e1));
                    }
                }
            }
        }
    }
    None
}
