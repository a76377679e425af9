//! Bundled demo instances addressable by preset name from the CLI.

use std::collections::BTreeSet;

use crate::actions::{TrafficSpec, TrafficType};
use crate::graph::{relay_demand_graph, DemandGraph, WeightedCompressedGraph};

/// Names accepted wherever a graph file is expected.
pub const GRAPH_PRESETS: [&str; 4] = ["fig1", "fig4a", "fig5a", "fig5b"];
/// Names accepted wherever a traffic-spec file is expected.
pub const SPEC_PRESETS: [&str; 1] = ["paper-3user"];

fn set(ids: &[u32]) -> BTreeSet<u32> {
    ids.iter().copied().collect()
}

/// 3 users, 5 packets, acyclic:
/// H1={5} R1={1,2}; H2={} R2={1,2,4}; H3={4} R3={3,5}.
pub fn fig1() -> DemandGraph {
    DemandGraph::build(
        3,
        vec![set(&[5]), set(&[]), set(&[4])],
        vec![set(&[1, 2]), set(&[1, 2, 4]), set(&[3, 5])],
    )
    .expect("fixture is valid")
}

/// Relay weight matrix with three disjoint cycles: two 2-cycles and one
/// 3-cycle, 48 packets total, per-cycle minimum weights 4, 4 and 1.
pub fn fig4a_weights() -> WeightedCompressedGraph {
    let mut w = vec![vec![0u32; 7]; 7];
    w[0][1] = 15; // (1,2)
    w[1][0] = 4; // (2,1)
    w[2][3] = 18; // (3,4)
    w[3][2] = 4; // (4,3)
    w[4][5] = 2; // (5,6)
    w[5][6] = 1; // (6,7)
    w[6][4] = 4; // (7,5)
    WeightedCompressedGraph::from_weights(w).expect("fixture is valid")
}

/// The 48-packet relay batch induced by [`fig4a_weights`].
pub fn fig4a() -> DemandGraph {
    relay_demand_graph(&fig4a_weights())
}

/// 5-user, 7-packet relay batch with three overlapping user cycles:
/// 1->2->3->1 (packets A,B,C), 3->4->5->3 (D,F,G) and the middle cycle
/// 2->3->4->2 (B,D,E). Packet ids follow letters A..G.
pub fn fig5a() -> DemandGraph {
    // (source, destination) per packet A..G
    let links = [(1, 2), (2, 3), (3, 1), (3, 4), (4, 2), (4, 5), (5, 3)];
    relay_from_links(5, &links)
}

/// 6-user, 9-packet relay batch on which a free-form linear code beats
/// every cyclic plan by one slot. Packet ids follow letters A..I.
pub fn fig5b() -> DemandGraph {
    let links = [
        (5, 1), // A
        (5, 4), // B
        (4, 6), // C
        (6, 3), // D
        (2, 3), // E
        (1, 2), // F
        (2, 4), // G
        (3, 5), // H
        (6, 1), // I
    ];
    relay_from_links(6, &links)
}

/// The 7-slot linear plan for [`fig5b`], one packet-id set per message:
/// E+G+F, H+E, H+D, A+B+H, C+B, C+G, C+I+D.
pub fn fig5b_messages() -> Vec<BTreeSet<u32>> {
    vec![
        set(&[5, 7, 6]),
        set(&[8, 5]),
        set(&[8, 4]),
        set(&[1, 2, 8]),
        set(&[3, 2]),
        set(&[3, 7]),
        set(&[3, 9, 4]),
    ]
}

fn relay_from_links(num_users: u32, links: &[(u32, u32)]) -> DemandGraph {
    let mut have = vec![BTreeSet::new(); num_users as usize];
    let mut want = vec![BTreeSet::new(); num_users as usize];
    for (i, &(src, dst)) in links.iter().enumerate() {
        let p = i as u32 + 1;
        have[src as usize - 1].insert(p);
        want[dst as usize - 1].insert(p);
    }
    DemandGraph::build_with_packet_count(num_users, links.len() as u32, have, want)
        .expect("fixture is valid")
}

/// 3-user broadcast workload with 12 unicast traffic types: per
/// destination, side information at none, one, the other, or both of the
/// remaining users. Rate weights put a quarter of each user's traffic on
/// each of its four types, so a scale of x means x packets/slot per user.
pub fn three_user_broadcast() -> TrafficSpec {
    let mut types = Vec::new();
    for n in 1..=3u32 {
        let others: Vec<u32> = (1..=3).filter(|&u| u != n).collect();
        for side in [
            vec![],
            vec![others[0]],
            vec![others[1]],
            vec![others[0], others[1]],
        ] {
            types.push(TrafficType {
                dest: set(&[n]),
                side: side.into_iter().collect(),
            });
        }
    }
    TrafficSpec::new(3, types, Some(vec![0.25; 12])).expect("fixture is valid")
}

pub fn preset_graph(name: &str) -> Option<DemandGraph> {
    match name {
        "fig1" => Some(fig1()),
        "fig4a" => Some(fig4a()),
        "fig5a" => Some(fig5a()),
        "fig5b" => Some(fig5b()),
        _ => None,
    }
}

pub fn preset_spec(name: &str) -> Option<TrafficSpec> {
    match name {
        "paper-3user" => Some(three_user_broadcast()),
        _ => None,
    }
}
