//! Simple-cycle enumeration on the weighted compressed graph.
//!
//! Enumeration is rooted: for each start node `s` in ascending order, a DFS
//! over nodes `> s` collects every simple cycle whose smallest node is `s`,
//! so each cycle is produced exactly once, already in canonical rotation.
//! A length cap keeps the exponential blowup explicit.

use std::collections::BTreeSet;
use std::ops::ControlFlow;

use crate::graph::{UserCycle, WeightedCompressedGraph};

/// All simple directed cycles of length `2..=max_len`, sorted by
/// (length, node sequence).
pub fn enumerate_cycles(wcg: &WeightedCompressedGraph, max_len: usize) -> Vec<UserCycle> {
    let mut cycles: Vec<UserCycle> = Vec::new();
    let _ = visit_cycles(wcg, max_len, |nodes| {
        cycles.push(UserCycle::new(nodes.to_vec()));
        ControlFlow::Continue(())
    });
    cycles.sort_by(|a, b| {
        a.len()
            .cmp(&b.len())
            .then_with(|| a.nodes().cmp(b.nodes()))
    });
    cycles
}

/// True, with the full cycle list, iff no link lies on two simple cycles.
///
/// Aborts enumeration on the first shared link, so dense graphs terminate
/// quickly with a `false` verdict (the cycle list is then partial).
pub fn has_disjoint_cycles(wcg: &WeightedCompressedGraph) -> (bool, Vec<UserCycle>) {
    let mut cycles: Vec<UserCycle> = Vec::new();
    let mut seen: BTreeSet<(u32, u32)> = BTreeSet::new();
    let max_len = (wcg.num_users() as usize).max(2);
    let outcome = visit_cycles(wcg, max_len, |nodes| {
        let cycle = UserCycle::new(nodes.to_vec());
        for leg in cycle.legs() {
            if !seen.insert(leg) {
                return ControlFlow::Break(());
            }
        }
        cycles.push(cycle);
        ControlFlow::Continue(())
    });
    (outcome.is_continue(), cycles)
}

/// DFS driver; `f` sees each simple cycle (as a canonical-rotation node
/// slice) exactly once and may stop the walk.
fn visit_cycles<F>(wcg: &WeightedCompressedGraph, max_len: usize, mut f: F) -> ControlFlow<()>
where
    F: FnMut(&[u32]) -> ControlFlow<()>,
{
    assert!(max_len >= 2, "cycle length cap must be at least 2");
    let n = wcg.num_users();
    for start in 1..=n {
        let mut path = vec![start];
        let mut on_path: BTreeSet<u32> = BTreeSet::new();
        on_path.insert(start);
        dfs(wcg, start, max_len, &mut path, &mut on_path, &mut f)?;
    }
    ControlFlow::Continue(())
}

fn dfs<F>(
    wcg: &WeightedCompressedGraph,
    start: u32,
    max_len: usize,
    path: &mut Vec<u32>,
    on_path: &mut BTreeSet<u32>,
    f: &mut F,
) -> ControlFlow<()>
where
    F: FnMut(&[u32]) -> ControlFlow<()>,
{
    let current = *path.last().unwrap();
    for next in wcg.successors(current) {
        if next == start {
            if path.len() >= 2 {
                f(path)?;
            }
            continue;
        }
        // restricting to nodes above the root makes the root the minimum
        if next < start || on_path.contains(&next) || path.len() == max_len {
            continue;
        }
        path.push(next);
        on_path.insert(next);
        let flow = dfs(wcg, start, max_len, path, on_path, f);
        path.pop();
        on_path.remove(&next);
        flow?;
    }
    ControlFlow::Continue(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedCompressedGraph;

    fn wcg(weights: Vec<Vec<u32>>) -> WeightedCompressedGraph {
        WeightedCompressedGraph::from_weights(weights).unwrap()
    }

    #[test]
    fn swap_graph_has_one_cycle() {
        let g = wcg(vec![vec![0, 1], vec![1, 0]]);
        let cycles = enumerate_cycles(&g, 2);
        assert_eq!(cycles.len(), 1);
        assert_eq!(cycles[0].nodes(), &[1, 2]);
        let (disjoint, found) = has_disjoint_cycles(&g);
        assert!(disjoint);
        assert_eq!(found.len(), 1);
    }

    #[test]
    fn acyclic_graph_has_no_cycles() {
        let g = wcg(vec![vec![0, 3, 1], vec![0, 0, 2], vec![0, 0, 0]]);
        assert!(enumerate_cycles(&g, 3).is_empty());
        let (disjoint, cycles) = has_disjoint_cycles(&g);
        assert!(disjoint);
        assert!(cycles.is_empty());
    }

    #[test]
    fn length_cap_is_respected() {
        // one 2-cycle [1,2] and one 3-cycle [1,2,3]
        let g = wcg(vec![vec![0, 1, 0], vec![1, 0, 1], vec![1, 0, 0]]);
        let short = enumerate_cycles(&g, 2);
        assert_eq!(short.len(), 1);
        assert_eq!(short[0].nodes(), &[1, 2]);
        let all = enumerate_cycles(&g, 3);
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].nodes(), &[1, 2]);
        assert_eq!(all[1].nodes(), &[1, 2, 3]);
    }

    #[test]
    fn three_user_full_matrix_is_not_disjoint() {
        let g = wcg(vec![vec![0, 5, 1], vec![2, 0, 4], vec![3, 2, 0]]);
        let cycles = enumerate_cycles(&g, 3);
        // three 2-cycles plus both 3-cycle orientations
        assert_eq!(cycles.len(), 5);
        let (disjoint, _) = has_disjoint_cycles(&g);
        assert!(!disjoint);
    }

    #[test]
    fn dense_graph_disjoint_check_terminates_fast() {
        let n = 12usize;
        let mut w = vec![vec![1u32; n]; n];
        for (i, row) in w.iter_mut().enumerate() {
            row[i] = 0;
        }
        let g = wcg(w);
        let (disjoint, _) = has_disjoint_cycles(&g);
        assert!(!disjoint);
    }

    #[test]
    fn canonical_cycles_are_unique_and_link_backed() {
        let g = wcg(vec![
            vec![0, 2, 0, 1],
            vec![1, 0, 1, 0],
            vec![1, 0, 0, 0],
            vec![0, 0, 1, 0],
        ]);
        let cycles = enumerate_cycles(&g, 4);
        let mut seen = std::collections::HashSet::new();
        for c in &cycles {
            assert!(seen.insert(c.clone()), "duplicate cycle {c}");
            assert_eq!(*c.nodes().iter().min().unwrap(), c.nodes()[0]);
            for (i, j) in c.legs() {
                assert!(g.has_link(i, j), "cycle {c} uses missing link ({i},{j})");
            }
        }
    }
}
