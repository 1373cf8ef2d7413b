//! Fine reference rasterizer. Shares nothing with the production geometry
//! beyond the pose types: boxes and circles are tested cell by cell, turns are
//! sampled every degree, forward moves every hundredth of a cell.

use lamapf_core::geometry::{Action, Cell, Motion, Pose, Shape};
use lamapf_core::map::GridMap;
use std::collections::BTreeSet;

const EPS: f64 = 1e-9;

type Pt = [f64; 2];

fn rect_corners(min: Pt, max: Pt, center: Pt, theta: f64) -> [Pt; 4] {
    let (s, c) = theta.sin_cos();
    [min, [max[0], min[1]], max, [min[0], max[1]]].map(|p| [center[0] + c * p[0] - s * p[1], center[1] + s * p[0] + c * p[1]])
}

/// Positive-area overlap of a convex quad with the unit cell at (cx, cy).
fn quad_overlaps_cell(q: &[Pt; 4], cx: i32, cy: i32) -> bool {
    let sq = [
        [cx as f64 - 0.5, cy as f64 - 0.5],
        [cx as f64 + 0.5, cy as f64 - 0.5],
        [cx as f64 + 0.5, cy as f64 + 0.5],
        [cx as f64 - 0.5, cy as f64 + 0.5],
    ];
    let separated = |poly: &[Pt; 4]| {
        (0..4).any(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % 4]);
            let n = [b[1] - a[1], a[0] - b[0]];
            let len = n[0].hypot(n[1]);
            let proj = |p: &Pt| (n[0] * p[0] + n[1] * p[1]) / len;
            let (l1, h1) = q.iter().map(proj).fold((f64::MAX, f64::MIN), |(l, h), v| (l.min(v), h.max(v)));
            let (l2, h2) = sq.iter().map(proj).fold((f64::MAX, f64::MIN), |(l, h), v| (l.min(v), h.max(v)));
            h1.min(h2) - l1.max(l2) <= EPS
        })
    };
    !separated(q) && !separated(&sq)
}

fn disc_overlaps_cell(c: Pt, r: f64, cx: i32, cy: i32) -> bool {
    let dx = (c[0] - cx as f64).abs() - 0.5;
    let dy = (c[1] - cy as f64).abs() - 0.5;
    let (gx, gy) = (dx.max(0.0), dy.max(0.0));
    gx * gx + gy * gy + EPS < r * r
}

/// Body samples along a motion: (centre, heading angle) pairs.
fn samples(motion: Motion) -> Vec<(Pt, f64)> {
    let from = motion.origin();
    let c0 = [from.x as f64, from.y as f64];
    let theta0 = from.orient.quarter_turns() as f64 * std::f64::consts::FRAC_PI_2;
    let to = match motion {
        Motion::At(p) => p,
        Motion::Transfer(_, to) => to,
    };
    match Action::classify(from, to).expect("legal motion") {
        Action::Wait => vec![(c0, theta0)],
        Action::Forward => {
            let (ux, uy) = from.orient.unit();
            (0..=100).map(|k| ([c0[0] + ux as f64 * k as f64 / 100.0, c0[1] + uy as f64 * k as f64 / 100.0], theta0)).collect()
        }
        a @ (Action::TurnCcw | Action::TurnCw) => {
            let sign = if a == Action::TurnCcw { 1.0 } else { -1.0 };
            (0..=90).map(|k| (c0, theta0 + sign * (k as f64).to_radians())).collect()
        }
    }
}

/// Cells overlapped by the body anywhere along `motion`, at reference resolution.
pub fn fine_footprint(shape: &Shape, motion: Motion) -> BTreeSet<Cell> {
    let mut out = BTreeSet::new();
    let reach = shape.circumradius() + 1.5;
    let o = motion.origin();
    let span = reach.ceil() as i32 + 1;
    for (c, theta) in samples(motion) {
        match *shape {
            Shape::Circle { radius } => {
                for x in o.x - span..=o.x + span {
                    for y in o.y - span..=o.y + span {
                        if disc_overlaps_cell(c, radius, x, y) {
                            out.insert(Cell::new(x, y));
                        }
                    }
                }
            }
            Shape::Rectangle { min, max } => {
                let q = rect_corners(min, max, c, theta);
                for x in o.x - span..=o.x + span {
                    for y in o.y - span..=o.y + span {
                        if quad_overlaps_cell(&q, x, y) {
                            out.insert(Cell::new(x, y));
                        }
                    }
                }
            }
        }
    }
    out
}

pub fn fine_pose_footprint(shape: &Shape, pose: Pose) -> BTreeSet<Cell> {
    fine_footprint(shape, Motion::At(pose))
}

pub fn fine_hits_map(shape: &Shape, motion: Motion, map: &GridMap) -> bool {
    fine_footprint(shape, motion).iter().any(|c| !map.is_passable(c.x, c.y))
}

pub fn fine_agents_collide(a: &Shape, ma: Motion, b: &Shape, mb: Motion) -> bool {
    let fa = fine_footprint(a, ma);
    fine_footprint(b, mb).iter().any(|c| fa.contains(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use lamapf_core::geometry::Orientation;

    #[test]
    fn unit_square_body_is_one_cell() {
        let s = Shape::Rectangle { min: [-0.5, -0.5], max: [0.5, 0.5] };
        let p = Pose::new(2, 2, Orientation::PosX);
        assert_eq!(fine_pose_footprint(&s, p).len(), 1);
        // corners poke into the four edge neighbours, never the diagonal ones
        let turn = fine_footprint(&s, Motion::Transfer(p, p.turned(true)));
        assert_eq!(turn.len(), 5);
    }
}
