use lamapf_core::geometry::{motion_footprint, Motion, Orientation, Pose, Shape, ShapeModel, SweepConfig};
use lamapf_core::map::distance_field;
use lamapf_testkit::random::{random_map, random_shape};
use lamapf_testkit::raster::fine_footprint;
use lamapf_testkit::brute_distance_field;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pose(x: i32, y: i32, o: usize) -> Pose {
    Pose::new(x, y, Orientation::ALL[o])
}

fn motions(p: Pose) -> [Motion; 4] {
    [Motion::At(p), Motion::Transfer(p, p.forward()), Motion::Transfer(p, p.turned(true)), Motion::Transfer(p, p.turned(false))]
}

fn any_shape() -> impl Strategy<Value = Shape> {
    prop_oneof![
        (0.2f64..2.0).prop_map(|r| Shape::Circle { radius: r }),
        (0.1f64..2.0, 0.1f64..2.0, 0.1f64..2.0, 0.1f64..2.0)
            .prop_map(|(a, b, c, d)| Shape::Rectangle { min: [-a, -b], max: [c, d] }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn footprints_cover_the_fine_sweep(shape in any_shape(), o in 0usize..4, x in -3i32..3, y in -3i32..3) {
        let p = pose(x, y, o);
        for m in motions(p) {
            let fp = motion_footprint(&shape, m, &SweepConfig::default()).unwrap();
            for c in fine_footprint(&shape, m) {
                prop_assert!(fp.contains(c), "{m:?} misses {c:?}");
            }
        }
    }

    #[test]
    fn pose_footprint_is_exact(shape in any_shape(), o in 0usize..4) {
        let p = pose(0, 0, o);
        let fp = motion_footprint(&shape, Motion::At(p), &SweepConfig::default()).unwrap();
        let fine: Vec<_> = fine_footprint(&shape, Motion::At(p)).into_iter().collect();
        prop_assert_eq!(fp.cells(), &fine[..]);
    }

    #[test]
    fn motions_contain_their_endpoint_poses(shape in any_shape(), o in 0usize..4) {
        let p = pose(0, 0, o);
        let sweep = SweepConfig::default();
        for m in motions(p).into_iter().skip(1) {
            let Motion::Transfer(a, b) = m else { unreachable!() };
            let fp = motion_footprint(&shape, m, &sweep).unwrap();
            prop_assert!(motion_footprint(&shape, Motion::At(a), &sweep).unwrap().is_subset(&fp));
            prop_assert!(motion_footprint(&shape, Motion::At(b), &sweep).unwrap().is_subset(&fp));
        }
    }

    #[test]
    fn pair_test_is_symmetric_and_matches_footprints(
        a in any_shape(), b in any_shape(), oa in 0usize..4, ob in 0usize..4,
        dx in -5i32..5, dy in -5i32..5, ka in 0usize..4, kb in 0usize..4,
    ) {
        let sweep = SweepConfig::default();
        let (ma, mb) = (ShapeModel::new(a, sweep).unwrap(), ShapeModel::new(b, sweep).unwrap());
        let (x, y) = (motions(pose(0, 0, oa))[ka], motions(pose(dx, dy, ob))[kb]);
        let direct = motion_footprint(&a, x, &sweep).unwrap().intersects(&motion_footprint(&b, y, &sweep).unwrap());
        prop_assert_eq!(ma.collides_with(x, &mb, y), direct);
        prop_assert_eq!(mb.collides_with(y, &ma, x), direct);
    }
}

#[test]
fn distance_field_matches_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let (w, h) = (rng.gen_range(1..24), rng.gen_range(1..24));
        let map = random_map(&mut rng, w, h, 0.2);
        let df = distance_field(&map);
        let brute = brute_distance_field(&map);
        for y in 0..map.height() {
            for x in 0..map.width() {
                let got = df.at(x as i32, y as i32);
                let want = brute[y * map.width() + x];
                assert!((got - want).abs() < 1e-9, "({x},{y}) {got} vs {want}");
            }
        }
    }
}

#[test]
fn model_map_test_matches_footprint() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sweep = SweepConfig::default();
    for _ in 0..30 {
        let map = random_map(&mut rng, 10, 10, 0.2);
        let df = distance_field(&map);
        let shape = random_shape(&mut rng, true, 1.5);
        let model = ShapeModel::new(shape, sweep).unwrap();
        for y in 0..10 {
            for x in 0..10 {
                for o in 0..4 {
                    for m in motions(pose(x, y, o)) {
                        let fp = motion_footprint(&shape, m, &sweep).unwrap();
                        let direct = fp.cells().iter().any(|c| !map.is_passable(c.x, c.y));
                        assert_eq!(model.collides_with_map(m, &map, &df), direct, "{shape:?} {m:?}");
                    }
                }
            }
        }
    }
}
