use std::cmp::Ordering;

use lamapf_core::decompose::{compare_decompositions, decompose, DecomposeConfig};
use lamapf_core::geometry::{Orientation, Pose, Shape, SweepConfig};
use lamapf_core::instance::AgentSpec;
use lamapf_core::map::GridMap;
use lamapf_core::problem::Problem;
use lamapf_testkit::graphs::{cluster_is_independent, levels_are_ordered};
use lamapf_testkit::random::{random_instance, RandomSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn circle(id: usize, start: Pose, target: Pose) -> AgentSpec {
    AgentSpec { id, shape: Shape::Circle { radius: 0.4 }, start, target }
}

fn plus_map() -> GridMap {
    GridMap::from_rows("plus", &["@.@", "...", "@.@"]).unwrap()
}

/// Two agents crossing the middle of a plus-shaped map.
fn crossing_instance() -> Vec<AgentSpec> {
    vec![
        circle(0, Pose::new(1, 2, Orientation::NegY), Pose::new(1, 0, Orientation::NegY)),
        circle(1, Pose::new(0, 1, Orientation::PosX), Pose::new(2, 1, Orientation::PosX)),
    ]
}

/// Same map, but the first agent parks in the middle.
fn parking_instance() -> Vec<AgentSpec> {
    vec![
        circle(0, Pose::new(1, 2, Orientation::NegY), Pose::new(1, 1, Orientation::NegY)),
        circle(1, Pose::new(0, 1, Orientation::PosX), Pose::new(2, 1, Orientation::PosX)),
    ]
}

#[test]
fn crossing_agents_form_two_clusters() {
    let p = Problem::prepare(plus_map(), crossing_instance(), &SweepConfig::default()).unwrap();
    let d = decompose(&p, &DecomposeConfig::default()).unwrap();
    assert_eq!(d.clusters, vec![vec![0], vec![1]]);
    assert_eq!(d.levels.len(), 2);
}

#[test]
fn parking_agent_goes_second() {
    let p = Problem::prepare(plus_map(), parking_instance(), &SweepConfig::default()).unwrap();
    let d = decompose(&p, &DecomposeConfig::default()).unwrap();
    assert_eq!(d.clusters, vec![vec![0, 1]]);
    let levels: Vec<Vec<usize>> = d.levels.iter().map(|l| l.agents.clone()).collect();
    assert_eq!(levels, vec![vec![1], vec![0]]);
}

#[test]
fn single_agent_is_one_cluster_and_level() {
    let p = Problem::prepare(GridMap::open("m", 4, 4), vec![circle(0, Pose::new(0, 0, Orientation::PosX), Pose::new(3, 3, Orientation::PosY))], &SweepConfig::default()).unwrap();
    let d = decompose(&p, &DecomposeConfig::default()).unwrap();
    assert_eq!(d.clusters, vec![vec![0]]);
    assert_eq!(d.level_sizes(), vec![1]);
}

#[test]
fn decompositions_satisfy_both_independence_conditions() {
    let sweep = SweepConfig::default();
    let spec = RandomSpec { max_agents: 5, min_side: 5, max_side: 10, density: 0.12, rectangles: true, max_radius: 1.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut checked = 0;
    while checked < 40 {
        let (map, agents) = random_instance(&mut rng, &spec, &sweep);
        if agents.is_empty() {
            continue;
        }
        let p = Problem::prepare(map, agents, &sweep).unwrap();
        let d = decompose(&p, &DecomposeConfig::default()).unwrap();
        // clusters partition the agents and levels follow cluster order
        let mut all: Vec<usize> = d.clusters.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..p.agent_count()).collect::<Vec<_>>());
        for (ci, cluster) in d.clusters.iter().enumerate() {
            cluster_is_independent(&p.map, &p.agents, cluster, &sweep).unwrap();
            let levels: Vec<Vec<usize>> = d.levels.iter().filter(|l| l.cluster == ci).map(|l| l.agents.clone()).collect();
            levels_are_ordered(&p.map, &p.agents, cluster, &levels, &sweep).unwrap();
        }
        // each refinement step never makes the size profile worse
        for w in d.size_history.windows(2) {
            assert_ne!(compare_decompositions(&w[1], &w[0]), Ordering::Greater, "{:?}", d.size_history);
        }
        assert_eq!(d.certificates.len(), p.agent_count());
        checked += 1;
    }
}
