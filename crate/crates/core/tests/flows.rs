use nodalflow::edge_flow::{nodal_count_direct, run_edge_flow, EdgeFlowOptions};
use nodalflow::families::{generate_connected_er, FamilySpec};
use nodalflow::nodal::{nodal_decomposition, select_eigenpair, EigenSelection};
use nodalflow::spectra::eigendecompose;
use nodalflow::vertex_flow::{limit_check, run_vertex_flow, subdivide, VertexFlowOptions};
use nodalflow::WeightedGraph;

fn simple_pairs(g: &WeightedGraph) -> Vec<EigenSelection> {
    let spec = eigendecompose(&g.laplacian()).unwrap();
    (1..=g.n())
        .map(|k| select_eigenpair(&spec, k).unwrap())
        .filter(|s| s.simple && s.nowhere_zero)
        .collect()
}

#[test]
fn edge_flow_counts_close_on_random_graphs() {
    for seed in 0..6 {
        let (g, _, _) = generate_connected_er(12, 0.4, 77 + 50 * seed, 200).unwrap();
        for sel in simple_pairs(&g) {
            let run = run_edge_flow(&g, &sel, &EdgeFlowOptions::default()).unwrap();
            let nu = nodal_decomposition(&g, &sel).unwrap().nu;
            assert!(run.identity_holds, "seed {seed} k {}", sel.k);
            assert_eq!(run.flow.converged_count, nu);
            assert_eq!(run.flow.crossings_below(), sel.k - nu);
            assert!(!run.flow.refinement_exhausted);
            assert!(run.flow.sigmas.windows(2).all(|w| w[1] > w[0]));
        }
    }
}

#[test]
fn vertex_limit_agrees_with_edge_endpoint() {
    for seed in 0..4 {
        let (g, _, _) = generate_connected_er(10, 0.5, 900 + 13 * seed, 200).unwrap();
        for sel in simple_pairs(&g) {
            let sg = subdivide(&g, &sel).unwrap();
            let lc = limit_check(&sg, sel.lambda_k, 1e4).unwrap();
            let direct = nodal_count_direct(&g, &sel).unwrap();
            assert_eq!(lc.multiplicity, direct.nu);
            assert_eq!(lc.d_components, direct.nu);
        }
    }
}

#[test]
fn vertex_flow_on_grid_counts_three() {
    let g = FamilySpec::Grid { n: 7, m: 5 }.generate().unwrap();
    let spec = eigendecompose(&g.laplacian()).unwrap();
    let sel = select_eigenpair(&spec, 5).unwrap();
    let run = run_vertex_flow(&g, &sel, &VertexFlowOptions::default()).unwrap();
    assert_eq!(run.limit.multiplicity, 3);
    assert_eq!(run.flow.converged_count, 3);
    assert!(run.flow.max_decrease() <= 1e-8);
    let psi = run.flow.branch_values(run.psi_branch);
    assert!(psi.iter().all(|v| (v - sel.lambda_k).abs() < 1e-8));
}

#[test]
fn petersen_flows_agree() {
    let g = FamilySpec::Petersen { n: 7, m: 3 }.generate().unwrap();
    let spec = eigendecompose(&g.laplacian()).unwrap();
    let sel = select_eigenpair(&spec, 7).unwrap();
    let edge = run_edge_flow(&g, &sel, &EdgeFlowOptions::default()).unwrap();
    let vertex = run_vertex_flow(&g, &sel, &VertexFlowOptions::default()).unwrap();
    assert_eq!(edge.flow.converged_count, 3);
    assert_eq!(vertex.limit.multiplicity, 3);
    assert_eq!(vertex.flow.converged_count, 3);
    // the last crossing of each flow is the late one
    let e = edge.flow.crossings.last().unwrap().midpoint();
    let v = vertex.flow.crossings.last().unwrap().midpoint();
    assert!((0.98..1.0).contains(&e), "{e}");
    assert!((400.0..800.0).contains(&v), "{v}");
}
