//! Grid maps in the MovingAI `.map` layout and their obstacle distance field.

use std::fmt;
use std::fs;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MapError {
    #[error("missing header key `{0}`")]
    MissingHeader(&'static str),
    #[error("invalid header line `{0}`")]
    InvalidHeader(String),
    #[error("header says {expected} rows but the body has {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("row {row} has width {found}, expected {expected}")]
    RowWidthMismatch { row: usize, expected: usize, found: usize },
    #[error("map has no cells")]
    EmptyGrid,
    #[error("cannot read map `{path}`: {message}")]
    Io { path: String, message: String },
}

/// Rectangular occupancy grid. Row `y = 0` is the first body row of the file.
#[derive(Clone, PartialEq, Eq)]
pub struct GridMap {
    width: usize,
    height: usize,
    passable: Vec<bool>,
    name: String,
}

impl fmt::Debug for GridMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridMap")
            .field("name", &self.name)
            .field("width", &self.width)
            .field("height", &self.height)
            .field("passable", &self.passable_count())
            .finish()
    }
}

impl GridMap {
    /// Builds a map from row strings using the same character rules as [`parse_map`].
    pub fn from_rows(name: impl Into<String>, rows: &[&str]) -> Result<Self, MapError> {
        let height = rows.len();
        let width = rows.first().map(|r| r.chars().count()).unwrap_or(0);
        if height == 0 || width == 0 {
            return Err(MapError::EmptyGrid);
        }
        let mut passable = Vec::with_capacity(width * height);
        for (row, line) in rows.iter().enumerate() {
            let found = line.chars().count();
            if found != width {
                return Err(MapError::RowWidthMismatch { row, expected: width, found });
            }
            passable.extend(line.chars().map(is_passable_char));
        }
        Ok(Self { width, height, passable, name: name.into() })
    }

    /// A map with no obstacles.
    pub fn open(name: impl Into<String>, width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "open map needs positive dimensions");
        Self { width, height, passable: vec![true; width * height], name: name.into() }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn in_bounds(&self, x: i32, y: i32) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    /// False for obstacles and for anything outside the map.
    pub fn is_passable(&self, x: i32, y: i32) -> bool {
        self.in_bounds(x, y) && self.passable[y as usize * self.width + x as usize]
    }

    pub fn set_passable(&mut self, x: usize, y: usize, passable: bool) {
        assert!(x < self.width && y < self.height);
        self.passable[y * self.width + x] = passable;
    }

    pub fn passable_count(&self) -> usize {
        self.passable.iter().filter(|&&p| p).count()
    }

    /// Index of a cell in row-major order.
    pub fn cell_index(&self, x: i32, y: i32) -> usize {
        debug_assert!(self.in_bounds(x, y));
        y as usize * self.width + x as usize
    }

    pub fn cell_count(&self) -> usize {
        self.width * self.height
    }

    /// Writes the map back in MovingAI layout.
    pub fn to_movingai(&self) -> String {
        let mut out = format!("type octile\nheight {}\nwidth {}\nmap\n", self.height, self.width);
        for y in 0..self.height {
            for x in 0..self.width {
                out.push(if self.passable[y * self.width + x] { '.' } else { '@' });
            }
            out.push('\n');
        }
        out
    }
}

fn is_passable_char(c: char) -> bool {
    matches!(c, '.' | 'G')
}

/// Parses a MovingAI map. `name` is only kept for reporting.
pub fn parse_map(name: &str, text: &str) -> Result<GridMap, MapError> {
    let mut lines = text.lines();
    let mut height = None;
    let mut width = None;
    let mut saw_type = false;
    loop {
        let Some(line) = lines.next() else {
            if !saw_type {
                return Err(MapError::MissingHeader("type"));
            }
            if height.is_none() {
                return Err(MapError::MissingHeader("height"));
            }
            if width.is_none() {
                return Err(MapError::MissingHeader("width"));
            }
            return Err(MapError::MissingHeader("map"));
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap_or_default();
        match key {
            "type" => saw_type = true,
            "height" | "width" => {
                let value: usize = parts
                    .next()
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| MapError::InvalidHeader(line.to_string()))?;
                if key == "height" {
                    height = Some(value);
                } else {
                    width = Some(value);
                }
            }
            "map" => break,
            _ => return Err(MapError::InvalidHeader(line.to_string())),
        }
    }
    if !saw_type {
        return Err(MapError::MissingHeader("type"));
    }
    let height = height.ok_or(MapError::MissingHeader("height"))?;
    let width = width.ok_or(MapError::MissingHeader("width"))?;
    if height == 0 || width == 0 {
        return Err(MapError::EmptyGrid);
    }
    let rows: Vec<&str> = lines.map(|l| l.trim_end_matches('\r')).filter(|l| !l.is_empty()).collect();
    if rows.len() != height {
        return Err(MapError::DimensionMismatch { expected: height, found: rows.len() });
    }
    for (row, line) in rows.iter().enumerate() {
        let found = line.chars().count();
        if found != width {
            return Err(MapError::RowWidthMismatch { row, expected: width, found });
        }
    }
    GridMap::from_rows(name, &rows)
}

pub fn load_map(path: &Path) -> Result<GridMap, MapError> {
    let text = fs::read_to_string(path)
        .map_err(|e| MapError::Io { path: path.display().to_string(), message: e.to_string() })?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("map");
    parse_map(name, &text)
}

/// Euclidean distance from each cell center to the nearest obstacle center.
/// Cells outside the map count as obstacles, so border cells sit at distance 1.
#[derive(Clone, Debug)]
pub struct DistanceField {
    width: usize,
    height: usize,
    dist: Vec<f64>,
}

impl DistanceField {
    /// Distance for an in-bounds cell; 0 outside the map.
    pub fn at(&self, x: i32, y: i32) -> f64 {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            return 0.0;
        }
        self.dist[y as usize * self.width + x as usize]
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }
}

/// Exact EDT by two separable passes of the lower-envelope-of-parabolas transform.
pub fn distance_field(map: &GridMap) -> DistanceField {
    let pw = map.width + 2;
    let ph = map.height + 2;
    let inf = f64::INFINITY;
    let mut grid = vec![0.0f64; pw * ph];
    for y in 0..map.height {
        for x in 0..map.width {
            if map.passable[y * map.width + x] {
                grid[(y + 1) * pw + x + 1] = inf;
            }
        }
    }
    let mut f = Vec::new();
    let mut d = Vec::new();
    for x in 0..pw {
        f.clear();
        f.extend((0..ph).map(|y| grid[y * pw + x]));
        d.resize(ph, 0.0);
        edt_1d(&f, &mut d);
        for y in 0..ph {
            grid[y * pw + x] = d[y];
        }
    }
    for y in 0..ph {
        f.clear();
        f.extend_from_slice(&grid[y * pw..(y + 1) * pw]);
        d.resize(pw, 0.0);
        edt_1d(&f, &mut d);
        grid[y * pw..(y + 1) * pw].copy_from_slice(&d);
    }
    let mut dist = Vec::with_capacity(map.width * map.height);
    for y in 0..map.height {
        for x in 0..map.width {
            dist.push(grid[(y + 1) * pw + x + 1].sqrt());
        }
    }
    DistanceField { width: map.width, height: map.height, dist }
}

/// Squared distance transform of a 1-D sampled function (0 at sites, inf elsewhere).
fn edt_1d(f: &[f64], d: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    let first = match f.iter().position(|x| x.is_finite()) {
        Some(i) => i,
        None => {
            d.iter_mut().for_each(|x| *x = f64::INFINITY);
            return;
        }
    };
    v[0] = first;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in first + 1..n {
        if !f[q].is_finite() {
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * q as f64 - 2.0 * p as f64);
            if s <= z[k] && k > 0 {
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    k = 0;
    for (q, out) in d.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let dq = q as f64 - p as f64;
        *out = dq * dq + f[p];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(map: &GridMap) -> Vec<f64> {
        let mut obstacles = Vec::new();
        for y in -1..=map.height as i32 {
            for x in -1..=map.width as i32 {
                if !map.is_passable(x, y) {
                    obstacles.push((x, y));
                }
            }
        }
        let mut out = Vec::new();
        for y in 0..map.height as i32 {
            for x in 0..map.width as i32 {
                let best = obstacles
                    .iter()
                    .map(|&(ox, oy)| (((ox - x).pow(2) + (oy - y).pow(2)) as f64).sqrt())
                    .fold(f64::INFINITY, f64::min);
                out.push(best);
            }
        }
        out
    }

    #[test]
    fn parses_open_map() {
        let m = parse_map("t", "type octile\nheight 3\nwidth 3\nmap\n...\n...\n...\n").unwrap();
        assert_eq!(m.passable_count(), 9);
        assert_eq!((m.width(), m.height()), (3, 3));
    }

    #[test]
    fn single_obstacle_row() {
        let m = parse_map("t", "type octile\nheight 1\nwidth 3\nmap\n.@.\n").unwrap();
        assert!(m.is_passable(0, 0));
        assert!(!m.is_passable(1, 0));
        assert!(m.is_passable(2, 0));
    }

    #[test]
    fn character_classes() {
        let m = parse_map("t", "type octile\nheight 1\nwidth 7\nmap\n.G@OTWS\n").unwrap();
        let flags: Vec<bool> = (0..7).map(|x| m.is_passable(x, 0)).collect();
        assert_eq!(flags, vec![true, true, false, false, false, false, false]);
    }

    #[test]
    fn header_errors() {
        assert_eq!(
            parse_map("t", "type octile\nwidth 3\nmap\n...\n"),
            Err(MapError::MissingHeader("height"))
        );
        assert_eq!(
            parse_map("t", "type octile\nheight 2\nwidth 3\nmap\n...\n"),
            Err(MapError::DimensionMismatch { expected: 2, found: 1 })
        );
        assert_eq!(
            parse_map("t", "type octile\nheight 1\nwidth 3\nmap\n....\n"),
            Err(MapError::RowWidthMismatch { row: 0, expected: 3, found: 4 })
        );
        assert_eq!(parse_map("t", "type octile\nheight 0\nwidth 0\nmap\n"), Err(MapError::EmptyGrid));
        assert!(matches!(parse_map("t", "height x\n"), Err(MapError::InvalidHeader(_))));
    }

    #[test]
    fn movingai_round_trip() {
        let m = GridMap::from_rows("r", &["..@", "@..", "..."]).unwrap();
        assert_eq!(parse_map("r", &m.to_movingai()).unwrap(), m);
    }

    #[test]
    fn boundary_only_distances() {
        let d = distance_field(&GridMap::open("e", 5, 5));
        assert_eq!(d.at(2, 2), 3.0);
        assert_eq!(d.at(0, 0), 1.0);
    }

    #[test]
    fn single_obstacle_distances() {
        let mut m = GridMap::open("e", 20, 20);
        m.set_passable(1, 1, false);
        let d = distance_field(&m);
        assert_eq!(d.at(1, 1), 0.0);
        assert_eq!(d.at(1, 2), 1.0);
        assert!((d.at(2, 2) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn matches_brute_force_on_random_maps() {
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) as u32
        };
        for _ in 0..20 {
            let w = 1 + next() as usize % 32;
            let h = 1 + next() as usize % 32;
            let mut m = GridMap::open("r", w, h);
            for y in 0..h {
                for x in 0..w {
                    if next() % 5 == 0 {
                        m.set_passable(x, y, false);
                    }
                }
            }
            let field = distance_field(&m);
            let expected = brute(&m);
            for y in 0..h {
                for x in 0..w {
                    assert_eq!(field.at(x as i32, y as i32), expected[y * w + x]);
                }
            }
        }
    }
}
