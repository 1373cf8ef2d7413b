//! Reference oracles for testing the planner. Everything here favours
//! obviousness over speed.

pub mod graphs;
pub mod joint;
pub mod random;
pub mod raster;

use std::collections::BTreeSet;

use lamapf_core::map::GridMap;

/// Distance from every cell centre to the nearest obstacle centre, by
/// scanning all obstacles. Cells outside the map count as obstacles.
pub fn brute_distance_field(map: &GridMap) -> Vec<f64> {
    let (w, h) = (map.width() as i32, map.height() as i32);
    let mut obstacles = Vec::new();
    for y in -1..=h {
        for x in -1..=w {
            if !map.is_passable(x, y) {
                obstacles.push((x, y));
            }
        }
    }
    let mut out = Vec::with_capacity((w * h) as usize);
    for y in 0..h {
        for x in 0..w {
            let d = obstacles
                .iter()
                .map(|&(ox, oy)| ((ox - x) as f64).hypot((oy - y) as f64))
                .fold(f64::INFINITY, f64::min);
            out.push(d);
        }
    }
    out
}

/// Partition of `0..n` into mutually reachable classes, via transitive closure.
pub fn mutual_reachability_classes(n: usize, edges: &[(usize, usize)]) -> Vec<BTreeSet<usize>> {
    let mut reach = vec![vec![false; n]; n];
    for (i, row) in reach.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(u, v) in edges {
        reach[u][v] = true;
    }
    // Warshall's closure
    for k in 0..n {
        let via = reach[k].clone();
        for row in reach.iter_mut().filter(|row| row[k]) {
            for (cell, &hop) in row.iter_mut().zip(&via) {
                *cell |= hop;
            }
        }
    }
    let mut classes: Vec<BTreeSet<usize>> = Vec::new();
    let mut assigned = vec![false; n];
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let class: BTreeSet<usize> = (0..n).filter(|&j| reach[i][j] && reach[j][i]).collect();
        for &j in &class {
            assigned[j] = true;
        }
        classes.push(class);
    }
    classes
}
