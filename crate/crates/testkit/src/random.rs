//! Small random maps and agent sets for property tests.

use std::sync::Arc;

use lamapf_core::geometry::{Motion, Orientation, Pose, Shape, ShapeModel, SweepConfig};
use lamapf_core::instance::AgentSpec;
use lamapf_core::map::{distance_field, GridMap};
use lamapf_core::subgraph::{build_with_model, search_path};
use rand::Rng;

#[derive(Clone, Copy, Debug)]
pub struct RandomSpec {
    pub max_agents: usize,
    pub min_side: usize,
    pub max_side: usize,
    /// Probability of a cell being an obstacle.
    pub density: f64,
    /// Allow rectangles (off-centre reference point) as well as circles.
    pub rectangles: bool,
    pub max_radius: f64,
}

impl Default for RandomSpec {
    fn default() -> Self {
        Self { max_agents: 4, min_side: 4, max_side: 12, density: 0.15, rectangles: true, max_radius: 1.0 }
    }
}

pub fn random_map(rng: &mut impl Rng, w: usize, h: usize, density: f64) -> GridMap {
    let mut map = GridMap::open(format!("random-{w}x{h}"), w, h);
    for y in 0..h {
        for x in 0..w {
            if rng.gen_bool(density) {
                map.set_passable(x, y, false);
            }
        }
    }
    map
}

pub fn random_shape(rng: &mut impl Rng, rectangles: bool, max_radius: f64) -> Shape {
    if rectangles && rng.gen_bool(0.5) {
        let len = rng.gen_range(0.4..=2.0 * max_radius);
        let wid = rng.gen_range(0.4..=(2.0 * max_radius).min(len.max(0.4)));
        let fx = rng.gen_range(0.2..0.8);
        let fy = rng.gen_range(0.2..0.8);
        Shape::Rectangle { min: [-fx * len, -fy * wid], max: [(1.0 - fx) * len, (1.0 - fy) * wid] }
    } else {
        Shape::Circle { radius: rng.gen_range(0.3..=max_radius) }
    }
}

fn random_pose(rng: &mut impl Rng, map: &GridMap) -> Pose {
    let o = Orientation::ALL[rng.gen_range(0..4)];
    Pose::new(rng.gen_range(0..map.width() as i32), rng.gen_range(0..map.height() as i32), o)
}

/// Map plus agents whose starts are pairwise disjoint, targets pairwise
/// disjoint, and each of which can reach its target alone. Gives up after a
/// bounded number of draws and returns fewer agents.
pub fn random_instance(rng: &mut impl Rng, spec: &RandomSpec, sweep: &SweepConfig) -> (GridMap, Vec<AgentSpec>) {
    let w = rng.gen_range(spec.min_side..=spec.max_side);
    let h = rng.gen_range(spec.min_side..=spec.max_side);
    let map = random_map(rng, w, h, spec.density);
    let df = distance_field(&map);
    let n = rng.gen_range(1..=spec.max_agents);
    let mut agents: Vec<AgentSpec> = Vec::new();
    let mut models: Vec<Arc<ShapeModel>> = Vec::new();
    for _ in 0..200 {
        if agents.len() == n {
            break;
        }
        let shape = random_shape(rng, spec.rectangles, spec.max_radius);
        let model = Arc::new(ShapeModel::new(shape, *sweep).expect("valid shape"));
        let start = random_pose(rng, &map);
        let target = random_pose(rng, &map);
        let clash = |p: Pose, pick: fn(&AgentSpec) -> Pose| {
            agents.iter().zip(&models).any(|(a, m)| model.collides_with(Motion::At(p), m, Motion::At(pick(a))))
        };
        if model.collides_with_map(Motion::At(start), &map, &df)
            || model.collides_with_map(Motion::At(target), &map, &df)
            || clash(start, |a| a.start)
            || clash(target, |a| a.target)
        {
            continue;
        }
        let a = AgentSpec { id: agents.len(), shape, start, target };
        let sg = build_with_model(&a, model.clone(), &map, &df).expect("endpoints fit");
        if search_path(&sg, &sg.empty_node_set()).is_none() {
            continue;
        }
        agents.push(a);
        models.push(model);
    }
    (map, agents)
}
