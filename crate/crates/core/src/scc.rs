//! Strongly connected components (iterative Tarjan) over a compact adjacency list.

/// Directed graph on `0..n` in compressed sparse row form.
#[derive(Clone, Debug, Default)]
pub struct Csr {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl Csr {
    /// Builds from an edge list; duplicate edges are kept.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut offsets = vec![0usize; n + 1];
        for &(u, _) in edges {
            offsets[u + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0usize; edges.len()];
        for &(u, v) in edges {
            targets[fill[u]] = v;
            fill[u] += 1;
        }
        for u in 0..n {
            targets[offsets[u]..offsets[u + 1]].sort_unstable();
        }
        Self { offsets, targets }
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn successors(&self, u: usize) -> &[usize] {
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }
}

/// Component id per node. Ids are assigned in order of each component's
/// smallest node, so numbering does not depend on traversal order.
pub fn strongly_connected(g: &Csr) -> (Vec<usize>, usize) {
    const NONE: usize = usize::MAX;
    let n = g.node_count();
    let mut index = vec![NONE; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut raw = vec![NONE; n];
    let mut raw_count = 0;
    let mut counter = 0;
    let mut calls: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != NONE {
            continue;
        }
        calls.push((root, 0));
        while let Some(&mut (u, ref mut next)) = calls.last_mut() {
            if *next == 0 && index[u] == NONE {
                index[u] = counter;
                low[u] = counter;
                counter += 1;
                stack.push(u);
                on_stack[u] = true;
            }
            let succ = g.successors(u);
            if *next < succ.len() {
                let v = succ[*next];
                *next += 1;
                if index[v] == NONE {
                    calls.push((v, 0));
                } else if on_stack[v] {
                    low[u] = low[u].min(index[v]);
                }
                continue;
            }
            calls.pop();
            if let Some(&(parent, _)) = calls.last() {
                low[parent] = low[parent].min(low[u]);
            }
            if low[u] == index[u] {
                loop {
                    let w = stack.pop().expect("tarjan stack");
                    on_stack[w] = false;
                    raw[w] = raw_count;
                    if w == u {
                        break;
                    }
                }
                raw_count += 1;
            }
        }
    }
    let mut renumber = vec![NONE; raw_count];
    let mut next_id = 0;
    let comp = raw
        .iter()
        .map(|&r| {
            if renumber[r] == NONE {
                renumber[r] = next_id;
                next_id += 1;
            }
            renumber[r]
        })
        .collect();
    (comp, raw_count)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_and_tail() {
        let g = Csr::from_edges(5, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4)]);
        let (comp, count) = strongly_connected(&g);
        assert_eq!(count, 3);
        assert_eq!(comp, vec![0, 0, 0, 1, 2]);
    }

    #[test]
    fn deep_chain_does_not_overflow() {
        let n = 200_000;
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).chain([(n - 1, 0)]).collect();
        let (comp, count) = strongly_connected(&Csr::from_edges(n, &edges));
        assert_eq!(count, 1);
        assert!(comp.iter().all(|&c| c == 0));
    }

    #[test]
    fn isolated_nodes() {
        let (comp, count) = strongly_connected(&Csr::from_edges(3, &[]));
        assert_eq!((comp, count), (vec![0, 1, 2], 3));
    }
}
