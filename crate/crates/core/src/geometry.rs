//! Agent shapes, poses, footprint rasterization and collision tests.
//!
//! Coordinates are cell-centred: cell `(x, y)` is the closed square
//! `[x - 0.5, x + 0.5] × [y - 0.5, y + 0.5]` and a pose places the shape's
//! reference point at the centre of its cell.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};
use std::fmt;

use thiserror::Error;

use crate::map::{DistanceField, GridMap};

/// Overlaps thinner than this are treated as touching, not occupying.
pub const OVERLAP_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("circle radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("rectangle must contain its reference point strictly inside: min {min:?}, max {max:?}")]
    BadRectangle { min: [f64; 2], max: [f64; 2] },
    #[error("{from} -> {to} is not a legal action")]
    IllegalAction { from: Pose, to: Pose },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }
}

/// Facing direction. The discriminant is the on-disk orientation code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Orientation {
    PosX = 0,
    NegX = 1,
    PosY = 2,
    NegY = 3,
}

impl Orientation {
    pub const ALL: [Orientation; 4] = [Self::PosX, Self::NegX, Self::PosY, Self::NegY];

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn unit(self) -> (i32, i32) {
        match self {
            Self::PosX => (1, 0),
            Self::NegX => (-1, 0),
            Self::PosY => (0, 1),
            Self::NegY => (0, -1),
        }
    }

    /// Counter-clockwise quarter turns away from +x.
    pub fn quarter_turns(self) -> i32 {
        match self {
            Self::PosX => 0,
            Self::PosY => 1,
            Self::NegX => 2,
            Self::NegY => 3,
        }
    }

    pub fn from_quarter_turns(q: i32) -> Self {
        match q.rem_euclid(4) {
            0 => Self::PosX,
            1 => Self::PosY,
            2 => Self::NegX,
            _ => Self::NegY,
        }
    }

    pub fn turned(self, ccw: bool) -> Self {
        Self::from_quarter_turns(self.quarter_turns() + if ccw { 1 } else { -1 })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pose {
    pub x: i32,
    pub y: i32,
    pub orient: Orientation,
}

impl Pose {
    pub const fn new(x: i32, y: i32, orient: Orientation) -> Self {
        Self { x, y, orient }
    }

    pub fn cell(self) -> Cell {
        Cell::new(self.x, self.y)
    }

    pub fn forward(self) -> Self {
        let (dx, dy) = self.orient.unit();
        Self { x: self.x + dx, y: self.y + dy, ..self }
    }

    pub fn turned(self, ccw: bool) -> Self {
        Self { orient: self.orient.turned(ccw), ..self }
    }
}

impl fmt::Display for Pose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.x, self.y, self.orient.code())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Action {
    Wait,
    Forward,
    TurnCcw,
    TurnCw,
}

impl Action {
    /// Recognises `from -> to` as one of the legal actions.
    pub fn classify(from: Pose, to: Pose) -> Option<Self> {
        if from == to {
            Some(Self::Wait)
        } else if to == from.forward() {
            Some(Self::Forward)
        } else if to == from.turned(true) {
            Some(Self::TurnCcw)
        } else if to == from.turned(false) {
            Some(Self::TurnCw)
        } else {
            None
        }
    }
}

/// Agent body in its own frame, facing +x.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape {
    Circle { radius: f64 },
    Rectangle { min: [f64; 2], max: [f64; 2] },
}

impl Shape {
    pub fn circle(radius: f64) -> Result<Self, GeometryError> {
        let s = Self::Circle { radius };
        s.validate()?;
        Ok(s)
    }

    pub fn rectangle(min: [f64; 2], max: [f64; 2]) -> Result<Self, GeometryError> {
        let s = Self::Rectangle { min, max };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        match *self {
            Self::Circle { radius } if radius > 0.0 && radius.is_finite() => Ok(()),
            Self::Circle { radius } => Err(GeometryError::BadRadius(radius)),
            Self::Rectangle { min, max } => {
                let ok = (0..2).all(|k| min[k] < 0.0 && max[k] > 0.0 && min[k].is_finite() && max[k].is_finite());
                if ok {
                    Ok(())
                } else {
                    Err(GeometryError::BadRectangle { min, max })
                }
            }
        }
    }

    /// Largest distance from the reference point to the body.
    pub fn circumradius(&self) -> f64 {
        match *self {
            Self::Circle { radius } => radius,
            Self::Rectangle { min, max } => {
                let dx = min[0].abs().max(max[0].abs());
                let dy = min[1].abs().max(max[1].abs());
                dx.hypot(dy)
            }
        }
    }

    /// Radius of the largest disc around the reference point inside the body.
    pub fn inradius(&self) -> f64 {
        match *self {
            Self::Circle { radius } => radius,
            Self::Rectangle { min, max } => (-min[0]).min(-min[1]).min(max[0]).min(max[1]),
        }
    }
}

/// Sampling parameters for swept regions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepConfig {
    /// Angular spacing of rotation samples, degrees.
    pub rotation_step_deg: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { rotation_step_deg: 15.0 }
    }
}

impl SweepConfig {
    fn rotation_samples(&self) -> usize {
        let step = self.rotation_step_deg.clamp(0.01, 90.0);
        (90.0 / step - 1e-9).ceil().max(1.0) as usize
    }

    /// Sagitta of the arc a body point at `circumradius` travels between samples.
    /// Hulls of consecutive samples grown by this much cover the continuous sweep.
    pub fn rotation_margin(&self, circumradius: f64) -> f64 {
        let delta = FRAC_PI_2 / self.rotation_samples() as f64;
        circumradius * (1.0 - (delta / 2.0).cos())
    }
}

/// Sorted set of occupied cells.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Footprint {
    cells: Vec<Cell>,
}

impl Footprint {
    pub fn from_cells(mut cells: Vec<Cell>) -> Self {
        cells.sort_unstable();
        cells.dedup();
        Self { cells }
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, cell: Cell) -> bool {
        self.cells.binary_search(&cell).is_ok()
    }

    pub fn intersects(&self, other: &Footprint) -> bool {
        sorted_intersect(self.cells.iter().copied(), other.cells.iter().copied())
    }

    pub fn is_subset(&self, other: &Footprint) -> bool {
        self.cells.iter().all(|&c| other.contains(c))
    }

    pub fn union(&self, other: &Footprint) -> Footprint {
        let mut cells = self.cells.clone();
        cells.extend_from_slice(&other.cells);
        Self::from_cells(cells)
    }

    pub fn shifted(&self, dx: i32, dy: i32) -> Footprint {
        Self { cells: self.cells.iter().map(|c| Cell::new(c.x + dx, c.y + dy)).collect() }
    }
}

/// True if two ascending cell sequences share an element.
pub fn sorted_intersect(a: impl IntoIterator<Item = Cell>, b: impl IntoIterator<Item = Cell>) -> bool {
    let mut a = a.into_iter();
    let mut b = b.into_iter();
    let (mut x, mut y) = match (a.next(), b.next()) {
        (Some(x), Some(y)) => (x, y),
        _ => return false,
    };
    loop {
        match x.cmp(&y) {
            std::cmp::Ordering::Equal => return true,
            std::cmp::Ordering::Less => match a.next() {
                Some(n) => x = n,
                None => return false,
            },
            std::cmp::Ordering::Greater => match b.next() {
                Some(n) => y = n,
                None => return false,
            },
        }
    }
}

/// A pose held still, or a transfer between two poses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Motion {
    At(Pose),
    Transfer(Pose, Pose),
}

impl Motion {
    pub fn origin(self) -> Pose {
        match self {
            Self::At(p) | Self::Transfer(p, _) => p,
        }
    }

    fn action(self) -> Result<Action, GeometryError> {
        match self {
            Self::At(_) => Ok(Action::Wait),
            Self::Transfer(from, to) => Action::classify(from, to).ok_or(GeometryError::IllegalAction { from, to }),
        }
    }
}

#[derive(Clone, Debug)]
enum Region {
    /// Points within `r` of the box `[lo, hi]`.
    RoundedBox { lo: [f64; 2], hi: [f64; 2], r: f64 },
    /// Points within `margin` of a convex polygon (counter-clockwise).
    Poly { pts: Vec<[f64; 2]>, margin: f64 },
}

impl Region {
    fn bbox(&self) -> ([f64; 2], [f64; 2]) {
        match *self {
            Self::RoundedBox { lo, hi, r } => ([lo[0] - r, lo[1] - r], [hi[0] + r, hi[1] + r]),
            Self::Poly { ref pts, margin } => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for p in pts.iter() {
                    for k in 0..2 {
                        lo[k] = lo[k].min(p[k] - margin);
                        hi[k] = hi[k].max(p[k] + margin);
                    }
                }
                (lo, hi)
            }
        }
    }

    fn overlaps_cell(&self, cx: i32, cy: i32) -> bool {
        let sq_lo = [cx as f64 - 0.5, cy as f64 - 0.5];
        let sq_hi = [cx as f64 + 0.5, cy as f64 + 0.5];
        match *self {
            Self::RoundedBox { lo, hi, r } => {
                if r == 0.0 {
                    (0..2).all(|k| hi[k].min(sq_hi[k]) - lo[k].max(sq_lo[k]) > OVERLAP_EPS)
                } else {
                    let gap = |k: usize| (lo[k] - sq_hi[k]).max(sq_lo[k] - hi[k]).max(0.0);
                    let (gx, gy) = (gap(0), gap(1));
                    gx * gx + gy * gy + OVERLAP_EPS < r * r
                }
            }
            Self::Poly { ref pts, margin } => {
                let square = [sq_lo, [sq_hi[0], sq_lo[1]], sq_hi, [sq_lo[0], sq_hi[1]]];
                convex_distance(pts, &square) < margin
            }
        }
    }

    fn rasterize(&self, out: &mut Vec<Cell>) {
        let (lo, hi) = self.bbox();
        let x0 = lo[0].floor() as i32 - 1;
        let x1 = hi[0].ceil() as i32 + 1;
        let y0 = lo[1].floor() as i32 - 1;
        let y1 = hi[1].ceil() as i32 + 1;
        for x in x0..=x1 {
            for y in y0..=y1 {
                if self.overlaps_cell(x, y) {
                    out.push(Cell::new(x, y));
                }
            }
        }
    }
}

fn rotate_quarter(v: [f64; 2], q: i32) -> [f64; 2] {
    match q.rem_euclid(4) {
        0 => v,
        1 => [-v[1], v[0]],
        2 => [-v[0], -v[1]],
        _ => [v[1], -v[0]],
    }
}

fn pose_region(shape: &Shape, center: [f64; 2], orient: Orientation) -> Region {
    match *shape {
        Shape::Circle { radius } => Region::RoundedBox { lo: center, hi: center, r: radius },
        Shape::Rectangle { min, max } => {
            let q = orient.quarter_turns();
            let a = rotate_quarter(min, q);
            let b = rotate_quarter(max, q);
            Region::RoundedBox {
                lo: [center[0] + a[0].min(b[0]), center[1] + a[1].min(b[1])],
                hi: [center[0] + a[0].max(b[0]), center[1] + a[1].max(b[1])],
                r: 0.0,
            }
        }
    }
}

fn translation_region(shape: &Shape, center: [f64; 2], orient: Orientation) -> Region {
    let (ux, uy) = orient.unit();
    let Region::RoundedBox { lo, hi, r } = pose_region(shape, center, orient) else {
        unreachable!("pose regions are boxes")
    };
    Region::RoundedBox {
        lo: [lo[0].min(lo[0] + ux as f64), lo[1].min(lo[1] + uy as f64)],
        hi: [hi[0].max(hi[0] + ux as f64), hi[1].max(hi[1] + uy as f64)],
        r,
    }
}

/// Hulls of consecutive angular samples of a quarter turn starting at `orient`.
fn rotation_regions(shape: &Shape, center: [f64; 2], orient: Orientation, ccw: bool, sweep: &SweepConfig) -> Vec<Region> {
    let Shape::Rectangle { min, max } = *shape else {
        return Vec::new();
    };
    let n = sweep.rotation_samples();
    let delta = FRAC_PI_2 / n as f64;
    let margin = sweep.rotation_margin(shape.circumradius());
    let sign = if ccw { 1.0 } else { -1.0 };
    let base = orient.quarter_turns() as f64 * FRAC_PI_2;
    let corners = [min, [max[0], min[1]], max, [min[0], max[1]]];
    let sample = |k: usize| {
        let theta = base + sign * k as f64 * delta;
        let (s, c) = theta.sin_cos();
        corners.map(|p| [center[0] + c * p[0] - s * p[1], center[1] + s * p[0] + c * p[1]])
    };
    (0..n)
        .map(|k| {
            let mut pts: Vec<[f64; 2]> = sample(k).to_vec();
            pts.extend_from_slice(&sample(k + 1));
            Region::Poly { pts: convex_hull(pts), margin }
        })
        .collect()
}

fn motion_regions(shape: &Shape, motion: Motion, sweep: &SweepConfig) -> Result<Vec<Region>, GeometryError> {
    let from = motion.origin();
    let center = [from.x as f64, from.y as f64];
    Ok(match motion.action()? {
        Action::Wait => vec![pose_region(shape, center, from.orient)],
        Action::Forward => vec![translation_region(shape, center, from.orient)],
        a @ (Action::TurnCcw | Action::TurnCw) => {
            let ccw = a == Action::TurnCcw;
            let mut regions = vec![
                pose_region(shape, center, from.orient),
                pose_region(shape, center, from.orient.turned(ccw)),
            ];
            regions.extend(rotation_regions(shape, center, from.orient, ccw, sweep));
            regions
        }
    })
}

fn rasterize_regions(regions: &[Region]) -> Footprint {
    let mut cells = Vec::new();
    for r in regions {
        r.rasterize(&mut cells);
    }
    Footprint::from_cells(cells)
}

/// Counter-clockwise hull by monotone chain.
fn convex_hull(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let base = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= base + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

fn separated_on_axes(a: &[[f64; 2]], b: &[[f64; 2]]) -> bool {
    let range = |poly: &[[f64; 2]], n: [f64; 2]| {
        poly.iter()
            .map(|v| n[0] * v[0] + n[1] * v[1])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)))
    };
    (0..a.len()).any(|i| {
        let (p, q) = (a[i], a[(i + 1) % a.len()]);
        let n = [q[1] - p[1], p[0] - q[0]];
        let (amin, amax) = range(a, n);
        let (bmin, bmax) = range(b, n);
        amax < bmin || bmax < amin
    })
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 { ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (ap[0] - t * ab[0]).hypot(ap[1] - t * ab[1])
}

/// Euclidean distance between two convex polygons; 0 when they touch.
fn convex_distance(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    if !separated_on_axes(a, b) && !separated_on_axes(b, a) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for (x, y) in [(a, b), (b, a)] {
        for &p in x {
            for i in 0..y.len() {
                best = best.min(point_segment_distance(p, y[i], y[(i + 1) % y.len()]));
            }
        }
    }
    best
}

/// Cells occupied by `shape` at `pose`.
pub fn footprint_of(shape: &Shape, pose: Pose) -> Footprint {
    rasterize_regions(&[pose_region(shape, [pose.x as f64, pose.y as f64], pose.orient)])
}

/// Cells swept during the action `from -> to`, with the default sweep sampling.
pub fn transfer_footprint(shape: &Shape, from: Pose, to: Pose) -> Result<Footprint, GeometryError> {
    transfer_footprint_with(shape, from, to, &SweepConfig::default())
}

pub fn transfer_footprint_with(shape: &Shape, from: Pose, to: Pose, sweep: &SweepConfig) -> Result<Footprint, GeometryError> {
    motion_footprint(shape, Motion::Transfer(from, to), sweep)
}

pub fn motion_footprint(shape: &Shape, motion: Motion, sweep: &SweepConfig) -> Result<Footprint, GeometryError> {
    Ok(rasterize_regions(&motion_regions(shape, motion, sweep)?))
}

/// How far beyond the circumradius a motion can reach from its origin centre.
fn motion_reach(shape: &Shape, action: Action, sweep: &SweepConfig) -> f64 {
    match action {
        Action::Wait => 0.0,
        Action::Forward => 1.0,
        Action::TurnCcw | Action::TurnCw => match shape {
            Shape::Circle { .. } => 0.0,
            Shape::Rectangle { .. } => sweep.rotation_margin(shape.circumradius()),
        },
    }
}

/// Fast verdict from the obstacle distance alone, if it is decisive.
fn map_fast_path(dist: f64, outer: f64, inner: f64) -> Option<bool> {
    if dist > outer + FRAC_1_SQRT_2 {
        Some(false)
    } else if dist < inner {
        Some(true)
    } else {
        None
    }
}

fn pair_fast_path(dist: f64, outer_sum: f64, inner_sum: f64) -> Option<bool> {
    if dist > outer_sum + 2.0 * FRAC_1_SQRT_2 {
        Some(false)
    } else if dist < inner_sum {
        Some(true)
    } else {
        None
    }
}

fn footprint_hits_map<I: IntoIterator<Item = Cell>>(cells: I, map: &GridMap) -> bool {
    cells.into_iter().any(|c| !map.is_passable(c.x, c.y))
}

/// True if the pose or transfer footprint touches an obstacle or leaves the map.
pub fn collides_with_map(shape: &Shape, motion: Motion, map: &GridMap, dfield: &DistanceField) -> Result<bool, GeometryError> {
    collides_with_map_with(shape, motion, map, dfield, &SweepConfig::default())
}

pub fn collides_with_map_with(
    shape: &Shape,
    motion: Motion,
    map: &GridMap,
    dfield: &DistanceField,
    sweep: &SweepConfig,
) -> Result<bool, GeometryError> {
    let action = motion.action()?;
    let o = motion.origin();
    if !map.in_bounds(o.x, o.y) {
        return Ok(true);
    }
    let outer = shape.circumradius() + motion_reach(shape, action, sweep);
    if let Some(v) = map_fast_path(dfield.at(o.x, o.y), outer, shape.inradius()) {
        return Ok(v);
    }
    Ok(footprint_hits_map(motion_footprint(shape, motion, sweep)?.cells().iter().copied(), map))
}

/// True if the two footprints share a cell.
pub fn agents_collide(shape_i: &Shape, motion_i: Motion, shape_j: &Shape, motion_j: Motion) -> Result<bool, GeometryError> {
    agents_collide_with(shape_i, motion_i, shape_j, motion_j, &SweepConfig::default())
}

pub fn agents_collide_with(
    shape_i: &Shape,
    motion_i: Motion,
    shape_j: &Shape,
    motion_j: Motion,
    sweep: &SweepConfig,
) -> Result<bool, GeometryError> {
    let (ai, aj) = (motion_i.action()?, motion_j.action()?);
    let (pi, pj) = (motion_i.origin(), motion_j.origin());
    let dist = ((pi.x - pj.x) as f64).hypot((pj.y - pi.y) as f64);
    let outer = shape_i.circumradius() + motion_reach(shape_i, ai, sweep) + shape_j.circumradius() + motion_reach(shape_j, aj, sweep);
    if let Some(v) = pair_fast_path(dist, outer, shape_i.inradius() + shape_j.inradius()) {
        return Ok(v);
    }
    let fi = motion_footprint(shape_i, motion_i, sweep)?;
    let fj = motion_footprint(shape_j, motion_j, sweep)?;
    Ok(fi.intersects(&fj))
}

/// Footprints of one shape precomputed at the origin for every pose and action.
#[derive(Clone, Debug)]
pub struct ShapeModel {
    shape: Shape,
    sweep: SweepConfig,
    pose: [Footprint; 4],
    forward: [Footprint; 4],
    turn: [[Footprint; 2]; 4],
    circumradius: f64,
    inradius: f64,
    turn_reach: f64,
}

/// Relative footprint translated to a pose.
#[derive(Clone)]
pub struct Placed<'a> {
    cells: std::slice::Iter<'a, Cell>,
    dx: i32,
    dy: i32,
}

impl Iterator for Placed<'_> {
    type Item = Cell;

    fn next(&mut self) -> Option<Cell> {
        self.cells.next().map(|c| Cell::new(c.x + self.dx, c.y + self.dy))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        self.cells.size_hint()
    }
}

impl ExactSizeIterator for Placed<'_> {}

impl ShapeModel {
    pub fn new(shape: Shape, sweep: SweepConfig) -> Result<Self, GeometryError> {
        shape.validate()?;
        let origin = |o: Orientation| Pose::new(0, 0, o);
        let fp = |m: Motion| motion_footprint(&shape, m, &sweep).expect("legal motion");
        let pose = Orientation::ALL.map(|o| fp(Motion::At(origin(o))));
        let forward = Orientation::ALL.map(|o| fp(Motion::Transfer(origin(o), origin(o).forward())));
        let turn = Orientation::ALL.map(|o| {
            [true, false].map(|ccw| fp(Motion::Transfer(origin(o), origin(o).turned(ccw))))
        });
        Ok(Self {
            shape,
            sweep,
            pose,
            forward,
            turn,
            circumradius: shape.circumradius(),
            inradius: shape.inradius(),
            turn_reach: motion_reach(&shape, Action::TurnCcw, &sweep),
        })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn sweep(&self) -> &SweepConfig {
        &self.sweep
    }

    pub fn circumradius(&self) -> f64 {
        self.circumradius
    }

    pub fn inradius(&self) -> f64 {
        self.inradius
    }

    fn reach(&self, action: Action) -> f64 {
        match action {
            Action::Wait => 0.0,
            Action::Forward => 1.0,
            Action::TurnCcw | Action::TurnCw => self.turn_reach,
        }
    }

    fn relative(&self, origin: Pose, action: Action) -> &Footprint {
        let o = origin.orient as usize;
        match action {
            Action::Wait => &self.pose[o],
            Action::Forward => &self.forward[o],
            Action::TurnCcw => &self.turn[o][0],
            Action::TurnCw => &self.turn[o][1],
        }
    }

    pub fn pose_cells(&self, pose: Pose) -> Placed<'_> {
        Placed { cells: self.pose[pose.orient as usize].cells.iter(), dx: pose.x, dy: pose.y }
    }

    /// Cells of a motion, or `None` for an illegal action.
    pub fn motion_cells(&self, motion: Motion) -> Option<Placed<'_>> {
        let action = motion.action().ok()?;
        let o = motion.origin();
        Some(Placed { cells: self.relative(o, action).cells.iter(), dx: o.x, dy: o.y })
    }

    pub fn transfer_cells(&self, from: Pose, to: Pose) -> Option<Placed<'_>> {
        self.motion_cells(Motion::Transfer(from, to))
    }

    /// Decisive verdict from the obstacle distance alone, if there is one.
    /// `None` for illegal motions and for the undecided band.
    pub fn map_fast_verdict(&self, motion: Motion, dfield: &DistanceField) -> Option<bool> {
        let action = motion.action().ok()?;
        let o = motion.origin();
        map_fast_path(dfield.at(o.x, o.y), self.circumradius + self.reach(action), self.inradius)
    }

    /// Decisive verdict from the centre distance alone, if there is one.
    pub fn pair_fast_verdict(&self, motion: Motion, other: &ShapeModel, other_motion: Motion) -> Option<bool> {
        let (a, b) = (motion.action().ok()?, other_motion.action().ok()?);
        let (p, q) = (motion.origin(), other_motion.origin());
        let dist = ((p.x - q.x) as f64).hypot((p.y - q.y) as f64);
        let outer = self.circumradius + self.reach(a) + other.circumradius + other.reach(b);
        pair_fast_path(dist, outer, self.inradius + other.inradius)
    }

    pub fn collides_with_map(&self, motion: Motion, map: &GridMap, dfield: &DistanceField) -> bool {
        let Some(cells) = self.motion_cells(motion) else {
            return true;
        };
        let o = motion.origin();
        if !map.in_bounds(o.x, o.y) {
            return true;
        }
        if let Some(v) = self.map_fast_verdict(motion, dfield) {
            return v;
        }
        footprint_hits_map(cells, map)
    }

    /// Collision test between two legal motions, with distance pruning.
    pub fn collides_with(&self, motion: Motion, other: &ShapeModel, other_motion: Motion) -> bool {
        let (Some(a), Some(b)) = (self.motion_cells(motion), other.motion_cells(other_motion)) else {
            return true;
        };
        if let Some(v) = self.pair_fast_verdict(motion, other, other_motion) {
            return v;
        }
        sorted_intersect(a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pose(x: i32, y: i32, o: u8) -> Pose {
        Pose::new(x, y, Orientation::from_code(o).unwrap())
    }

    #[test]
    fn small_circle_is_one_cell() {
        let s = Shape::circle(0.4).unwrap();
        for o in 0..4 {
            let f = footprint_of(&s, pose(3, -2, o));
            assert_eq!(f.cells(), &[Cell::new(3, -2)]);
        }
    }

    #[test]
    fn circle_covering_three_by_three() {
        let s = Shape::circle(1.2).unwrap();
        assert_eq!(footprint_of(&s, pose(5, 5, 0)).len(), 9);
        // tangent to the neighbouring cell edge does not occupy it
        assert_eq!(footprint_of(&Shape::circle(0.5).unwrap(), pose(0, 0, 0)).len(), 1);
    }

    #[test]
    fn block_agent_two_cells_and_rotation() {
        let s = Shape::rectangle([-0.45, -0.45], [1.45, 0.45]).unwrap();
        assert_eq!(footprint_of(&s, pose(0, 0, 0)).cells(), &[Cell::new(0, 0), Cell::new(1, 0)]);
        assert_eq!(footprint_of(&s, pose(0, 0, 2)).cells(), &[Cell::new(0, 0), Cell::new(0, 1)]);
        assert_eq!(footprint_of(&s, pose(0, 0, 1)).cells(), &[Cell::new(-1, 0), Cell::new(0, 0)]);
        assert_eq!(footprint_of(&s, pose(0, 0, 3)).cells(), &[Cell::new(0, -1), Cell::new(0, 0)]);
        let sweep = transfer_footprint(&s, pose(0, 0, 0), pose(0, 0, 2)).unwrap();
        assert!(sweep.contains(Cell::new(1, 1)));
        assert!(!sweep.contains(Cell::new(-1, -1)));
        assert!(!sweep.contains(Cell::new(2, -1)));
        assert!(sweep.contains(Cell::new(-1, 0)));
    }

    #[test]
    fn wait_transfer_equals_pose() {
        let s = Shape::rectangle([-0.3, -0.7], [1.1, 0.2]).unwrap();
        let p = pose(2, 2, 3);
        assert_eq!(transfer_footprint(&s, p, p).unwrap(), footprint_of(&s, p));
    }

    #[test]
    fn illegal_action_rejected() {
        let s = Shape::circle(0.4).unwrap();
        assert!(matches!(
            transfer_footprint(&s, pose(0, 0, 0), pose(0, 1, 0)),
            Err(GeometryError::IllegalAction { .. })
        ));
        assert!(transfer_footprint(&s, pose(0, 0, 0), pose(0, 0, 1)).is_err());
    }

    #[test]
    fn forward_sweep_of_circle() {
        let s = Shape::circle(0.4).unwrap();
        let f = transfer_footprint(&s, pose(0, 0, 0), pose(1, 0, 0)).unwrap();
        assert_eq!(f.cells(), &[Cell::new(0, 0), Cell::new(1, 0)]);
    }

    #[test]
    fn two_rotating_blocks_conflict() {
        // side by side, both turning towards each other's half-plane
        let s = Shape::rectangle([-0.45, -0.45], [1.45, 0.45]).unwrap();
        let a = transfer_footprint(&s, pose(0, 0, 2), pose(0, 0, 0)).unwrap();
        let b = transfer_footprint(&s, pose(2, 1, 3), pose(2, 1, 1)).unwrap();
        assert!(a.intersects(&b));
        assert!(!footprint_of(&s, pose(0, 0, 2)).intersects(&footprint_of(&s, pose(2, 1, 3))));
        assert!(!footprint_of(&s, pose(0, 0, 0)).intersects(&footprint_of(&s, pose(2, 1, 1))));
    }

    #[test]
    fn rectangle_on_obstacle_collides() {
        let map = GridMap::from_rows("m", &["....", ".@..", "...."]).unwrap();
        let df = crate::map::distance_field(&map);
        let s = Shape::rectangle([-0.45, -0.45], [1.45, 0.45]).unwrap();
        assert!(collides_with_map(&s, Motion::At(pose(0, 1, 0)), &map, &df).unwrap());
        assert!(!collides_with_map(&s, Motion::At(pose(2, 1, 0)), &map, &df).unwrap());
        assert!(collides_with_map(&s, Motion::At(pose(3, 1, 0)), &map, &df).unwrap());
    }

    #[test]
    fn circle_far_from_obstacles_is_free() {
        let map = GridMap::open("m", 10, 10);
        let df = crate::map::distance_field(&map);
        let s = Shape::circle(0.4).unwrap();
        assert!(!collides_with_map(&s, Motion::At(pose(5, 5, 0)), &map, &df).unwrap());
    }

    #[test]
    fn circle_and_block_collide() {
        let c = Shape::circle(0.8).unwrap();
        let b = Shape::rectangle([-0.45, -0.45], [1.45, 0.45]).unwrap();
        assert!(agents_collide(&c, Motion::At(pose(0, 0, 0)), &b, Motion::At(pose(1, 1, 3))).unwrap());
        let small = Shape::circle(0.4).unwrap();
        assert!(!agents_collide(&small, Motion::At(pose(0, 0, 0)), &small, Motion::At(pose(2, 0, 0))).unwrap());
    }

    #[test]
    fn model_matches_free_functions() {
        let s = Shape::rectangle([-0.6, -0.45], [1.7, 0.9]).unwrap();
        let m = ShapeModel::new(s, SweepConfig::default()).unwrap();
        for o in 0..4 {
            let p = pose(4, -3, o);
            let placed: Vec<Cell> = m.pose_cells(p).collect();
            assert_eq!(placed, footprint_of(&s, p).cells());
            for to in [p.forward(), p.turned(true), p.turned(false)] {
                let placed: Vec<Cell> = m.transfer_cells(p, to).unwrap().collect();
                assert_eq!(placed, transfer_footprint(&s, p, to).unwrap().cells());
            }
        }
    }

    #[test]
    fn radii() {
        let s = Shape::rectangle([-0.5, -1.0], [2.0, 0.5]).unwrap();
        assert_eq!(s.inradius(), 0.5);
        assert!((s.circumradius() - 2.0f64.hypot(1.0)).abs() < 1e-12);
        assert!(Shape::rectangle([0.1, -1.0], [2.0, 0.5]).is_err());
        assert!(Shape::circle(0.0).is_err());
    }
}
