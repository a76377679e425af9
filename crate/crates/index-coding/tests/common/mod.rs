//! Seeded instance generators shared by the integration suites.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use index_coding::graph::DemandGraph;

fn set(ids: &[u32]) -> BTreeSet<u32> {
    ids.iter().copied().collect()
}

/// Arbitrary valid demand graph: every packet wanted somewhere, side
/// information sprinkled in without touching each user's own want set.
pub fn random_graph(rng: &mut ChaCha8Rng, max_users: u32, max_packets: u32) -> DemandGraph {
    loop {
        let users = rng.gen_range(1..=max_users);
        let packets = rng.gen_range(1..=max_packets);
        let mut have = vec![BTreeSet::new(); users as usize];
        let mut want = vec![BTreeSet::new(); users as usize];
        for p in 1..=packets {
            let wanter = rng.gen_range(1..=users);
            want[wanter as usize - 1].insert(p);
            for u in 1..=users {
                if u != wanter && rng.gen_bool(0.15) {
                    want[u as usize - 1].insert(p);
                }
            }
            for u in 1..=users {
                if !want[u as usize - 1].contains(&p) && rng.gen_bool(0.35) {
                    have[u as usize - 1].insert(p);
                }
            }
        }
        if let Ok(g) = DemandGraph::build(users, have, want) {
            return g;
        }
    }
}

/// Two-user instance: coded pairs plus multicast and no-side-info filler.
pub fn random_two_user_graph(rng: &mut ChaCha8Rng) -> DemandGraph {
    loop {
        let forward = rng.gen_range(0..=4u32); // held by 1, wanted by 2
        let backward = rng.gen_range(0..=4u32); // held by 2, wanted by 1
        let shared = rng.gen_range(0..=2u32); // wanted by both, held by none
        let plain = rng.gen_range(0..=2u32); // wanted by one, held by none
        let total = forward + backward + shared + plain;
        if total == 0 || total > 10 {
            continue;
        }
        let mut have = vec![BTreeSet::new(); 2];
        let mut want = vec![BTreeSet::new(); 2];
        let mut next = 0u32;
        for _ in 0..forward {
            next += 1;
            have[0].insert(next);
            want[1].insert(next);
        }
        for _ in 0..backward {
            next += 1;
            have[1].insert(next);
            want[0].insert(next);
        }
        for _ in 0..shared {
            next += 1;
            want[0].insert(next);
            want[1].insert(next);
        }
        for _ in 0..plain {
            next += 1;
            want[rng.gen_range(0..2usize)].insert(next);
        }
        return DemandGraph::build(2, have, want).expect("construction is valid");
    }
}

/// Non-negative 3x3 relay weight matrix with zero diagonal and a bounded
/// packet total.
pub fn random_relay3_weights(rng: &mut ChaCha8Rng) -> Vec<Vec<u32>> {
    loop {
        let mut w = vec![vec![0u32; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    w[i][j] = rng.gen_range(0..=3);
                }
            }
        }
        let total: u32 = w.iter().flatten().sum();
        if (1..=12).contains(&total) {
            return w;
        }
    }
}

/// Relay-style graph whose compressed form is a set of node-disjoint user
/// cycles (so link-disjoint), plus holderless filler packets. Satisfies
/// the distinct-unicast-cycle-packets hypothesis by construction.
pub fn random_disjoint_cycle_graph(rng: &mut ChaCha8Rng) -> DemandGraph {
    loop {
        let users = rng.gen_range(4..=6u32);
        let mut pool: Vec<u32> = (1..=users).collect();
        // up to two node-disjoint cycles of length 2..=3
        let mut cycles: Vec<Vec<u32>> = Vec::new();
        for _ in 0..rng.gen_range(1..=2) {
            let len = rng.gen_range(2..=3usize);
            if pool.len() < len {
                break;
            }
            let mut nodes = Vec::with_capacity(len);
            for _ in 0..len {
                let i = rng.gen_range(0..pool.len());
                nodes.push(pool.swap_remove(i));
            }
            cycles.push(nodes);
        }
        if cycles.is_empty() {
            continue;
        }
        let mut have = vec![BTreeSet::new(); users as usize];
        let mut want = vec![BTreeSet::new(); users as usize];
        let mut next = 0u32;
        for nodes in &cycles {
            for leg in 0..nodes.len() {
                let from = nodes[leg];
                let to = nodes[(leg + 1) % nodes.len()];
                for _ in 0..rng.gen_range(1..=2u32) {
                    next += 1;
                    have[from as usize - 1].insert(next);
                    want[to as usize - 1].insert(next);
                }
            }
        }
        for _ in 0..rng.gen_range(0..=2u32) {
            next += 1;
            let wanters = rng.gen_range(1..=2u32);
            let mut chosen: BTreeSet<u32> = BTreeSet::new();
            while (chosen.len() as u32) < wanters {
                chosen.insert(rng.gen_range(1..=users));
            }
            for u in chosen {
                want[u as usize - 1].insert(next);
            }
        }
        if next > 12 {
            continue;
        }
        return DemandGraph::build(users, have, want).expect("construction is valid");
    }
}

#[allow(dead_code)]
pub fn dummy() -> BTreeSet<u32> {
    set(&[])
}
