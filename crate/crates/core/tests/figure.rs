//! The hand-built ten-individual example and its exploration, checked entry by entry.

mod common;

use common::{figure_graph, FIGURE_A, FIGURE_M, FIGURE_N};
use rig_core::exploration::{audit_trace, components, forest_heights};
use rig_core::surplus_triangles::{classify_surplus, component_table, triangle_process, SurplusCase};
use rig_core::{explore, induce_intersection, RootRule};

#[test]
fn caption_sequences() {
    let t = explore(&figure_graph(), RootRule::SmallestLabel);
    assert_eq!(t.len(), 10);
    assert_eq!(t.order, (0..10).collect::<Vec<u32>>());
    let n: Vec<u32> = (1..=10).map(|k| t.discovered(k)).collect();
    assert_eq!(n, FIGURE_N);
    assert_eq!(t.x[1..], FIGURE_M);
    assert_eq!(t.active_after[1..], FIGURE_A);
    assert_eq!(t.s, [0, 2, 3, 2, 1, 0, -1, -1, 0, -1, -2]);
    assert_eq!(t.r, [0, 2, 3, 3, 3, 3, 3, 4, 6, 6, 6]);
    assert_eq!(t.unreached_communities(), 1);
    assert!(audit_trace(&t).is_clean());
}

#[test]
fn heights_and_components() {
    let t = explore(&figure_graph(), RootRule::SmallestLabel);
    assert_eq!(t.h[1..], [1, 2, 3, 3, 2, 2, 1, 2, 3, 3]);
    let depth = forest_heights(&t);
    for k in 1..=10 {
        assert_eq!(2 * t.h[k] - 2, depth[k], "step {k}");
    }
    let sizes: Vec<(usize, usize)> = components(&t).iter().map(|c| (c.v_size, c.u_size)).collect();
    assert_eq!(sizes, [(6, 3), (4, 3)]);
}

#[test]
fn surplus_records() {
    let g = figure_graph();
    let t = explore(&g, RootRule::SmallestLabel);
    let records = classify_surplus(&g, &t).unwrap();
    let got: Vec<(u32, u32, usize, SurplusCase, u32)> = records.iter().map(|r| (r.u, r.w, r.k, r.case, r.l)).collect();
    assert_eq!(
        got,
        [
            (1, 4, 1, SurplusCase::SiblingOverlap, 0),
            (2, 4, 2, SurplusCase::ActiveHit, 1),
            (5, 8, 8, SurplusCase::SiblingOverlap, 0),
        ]
    );
    assert_eq!(g.edge_count(), 17);
    assert_eq!(t.forest_edges.len() + records.len(), 17);
}

#[test]
fn triangles_per_component() {
    let g = figure_graph();
    let t = explore(&g, RootRule::SmallestLabel);
    let records = classify_surplus(&g, &t).unwrap();
    let table = component_table(&t, &records, &induce_intersection(&g));
    // {0,1,4,5}: cliques from u_1, u_2, u_3 give 1 + 1 + 4 triangles sharing none
    // {6,7,8,9}: u_6 = {7,8,9} is the only triangle
    let rows: Vec<(usize, usize, u64)> = table.iter().map(|r| (r.v_size, r.surplus, r.triangles)).collect();
    assert_eq!(rows, [(6, 2, 6), (4, 1, 1)]);
    // the process only sees (1 + #N_{k,i}) choose 3 per block: {1,4} at step 1,
    // {2,3} at step 2; the blocks {8} and {9} of step 8 are too small
    let tp = triangle_process(&t);
    assert_eq!(tp[1], 1);
    assert_eq!(tp[2], 2);
    assert_eq!(tp[10], 2);
}

#[test]
fn trace_csv_columns() {
    let t = explore(&figure_graph(), RootRule::SmallestLabel);
    let mut buf = Vec::new();
    t.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,X,dS,S,H,comp");
    assert_eq!(lines.len(), 11);
    assert_eq!(lines[1], "1,2,2,2,1,1");
    assert_eq!(lines[10], "10,0,-1,-2,3,2");
}
