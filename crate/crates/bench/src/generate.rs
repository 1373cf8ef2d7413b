//! Random benchmark instances: half circles, half rectangles.

use std::collections::VecDeque;
use std::sync::Arc;

use lamapf_core::geometry::{Motion, Orientation, Pose, Shape, ShapeModel, SweepConfig};
use lamapf_core::instance::{AgentSpec, Instance};
use lamapf_core::map::{distance_field, GridMap};
use lamapf_core::subgraph::{build_with_model, node_index, Subgraph};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub const CIRCLE_RADIUS: (f64, f64) = (0.4, 2.0);
pub const RECT_SIDE: (f64, f64) = (0.4, 4.0);
/// Start/target draws allowed per agent before giving up.
pub const DRAW_CAP: usize = 10_000;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("need at least one agent")]
    NoAgents,
    #[error("agent {agent}: no valid start/target pair after {DRAW_CAP} draws; map too dense")]
    MapTooDense { agent: usize },
}

/// Circle for even ids, rectangle for odd ids, with the reference point drawn
/// uniformly inside the rectangle.
pub fn random_shape(rng: &mut impl Rng, id: usize) -> Shape {
    if id.is_multiple_of(2) {
        Shape::Circle { radius: rng.gen_range(CIRCLE_RADIUS.0..=CIRCLE_RADIUS.1) }
    } else {
        let len = rng.gen_range(RECT_SIDE.0..=RECT_SIDE.1);
        let wid = rng.gen_range(RECT_SIDE.0..=RECT_SIDE.1);
        // keep the reference point strictly inside
        let fx = rng.gen_range(0.02..0.98);
        let fy = rng.gen_range(0.02..0.98);
        Shape::Rectangle { min: [-fx * len, -fy * wid], max: [(1.0 - fx) * len, (1.0 - fy) * wid] }
    }
}

fn reachable(sg: &Subgraph, from: Pose, to: Pose) -> bool {
    let w = sg.width();
    let (from, to) = (node_index(w, from), node_index(w, to));
    let mut seen = vec![false; sg.capacity()];
    seen[from as usize] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        if u == to {
            return true;
        }
        for &v in sg.successors(u) {
            if !seen[v as usize] {
                seen[v as usize] = true;
                queue.push_back(v);
            }
        }
    }
    false
}

/// Deterministic instance for `seed`. Starts are pairwise disjoint, targets
/// pairwise disjoint, and every agent can reach its target when alone.
pub fn gen_instance(map: &GridMap, map_ref: &str, n_agents: usize, seed: u64, sweep: &SweepConfig) -> Result<Instance, GenError> {
    if n_agents == 0 {
        return Err(GenError::NoAgents);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let df = distance_field(map);
    let mut agents: Vec<AgentSpec> = Vec::with_capacity(n_agents);
    let mut models: Vec<Arc<ShapeModel>> = Vec::with_capacity(n_agents);
    for id in 0..n_agents {
        let mut placed = false;
        let mut draws = 0;
        'shape: while draws < DRAW_CAP {
            let shape = random_shape(&mut rng, id);
            let model = Arc::new(ShapeModel::new(shape, *sweep).expect("generated shapes are valid"));
            let poses: Vec<Pose> = (0..map.height() as i32)
                .flat_map(|y| (0..map.width() as i32).flat_map(move |x| Orientation::ALL.map(|o| Pose::new(x, y, o))))
                .filter(|&p| !model.collides_with_map(Motion::At(p), map, &df))
                .collect();
            if poses.is_empty() {
                draws += 1;
                continue;
            }
            let probe = AgentSpec { id, shape, start: poses[0], target: poses[0] };
            let sg = build_with_model(&probe, model.clone(), map, &df).expect("probe pose is free");
            // a fresh shape is drawn every so often so one bad size cannot eat the budget
            for _ in 0..100 {
                draws += 1;
                let start = *poses.choose(&mut rng).expect("non-empty");
                let target = *poses.choose(&mut rng).expect("non-empty");
                let clash = |p: Pose, pick: fn(&AgentSpec) -> Pose| {
                    agents.iter().zip(&models).any(|(a, m)| model.collides_with(Motion::At(p), m, Motion::At(pick(a))))
                };
                if clash(start, |a| a.start) || clash(target, |a| a.target) || !reachable(&sg, start, target) {
                    if draws >= DRAW_CAP {
                        break 'shape;
                    }
                    continue;
                }
                agents.push(AgentSpec { id, shape, start, target });
                models.push(model);
                placed = true;
                break 'shape;
            }
        }
        if !placed {
            return Err(GenError::MapTooDense { agent: id });
        }
    }
    Ok(Instance { map_ref: map_ref.to_string(), seed, agents })
}
