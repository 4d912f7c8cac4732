#![allow(dead_code)]

use rig_core::BipartiteGraph;

/// The ten-individual, seven-community example drawn in the figure of the
/// exploration, relabelled from 1-based to 0-based. `u_7` has no members.
pub fn figure_graph() -> BipartiteGraph {
    let communities: [&[u32]; 7] = [&[0, 1, 4], &[0, 5, 4], &[1, 2, 3, 4], &[6, 7], &[7, 8], &[7, 9, 8], &[]];
    let mut edges = Vec::new();
    for (u, members) in communities.iter().enumerate() {
        for &v in *members {
            edges.push((v, u as u32));
        }
    }
    BipartiteGraph::from_edges(10, 7, &edges).unwrap()
}

pub const FIGURE_N: [u32; 10] = [3, 2, 0, 0, 0, 0, 1, 2, 0, 0];
pub const FIGURE_M: [u32; 10] = [2, 1, 0, 0, 0, 0, 1, 2, 0, 0];
pub const FIGURE_A: [u32; 10] = [2, 3, 2, 1, 0, 0, 0, 1, 0, 0];
