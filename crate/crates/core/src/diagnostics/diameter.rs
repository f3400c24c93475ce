//! Intrinsic diameter of a radial graph by shortest paths on the grid graph.

use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};

use crate::surface::RadialGraph;

/// Grid graph with one node per interior vertex plus one node per pole; the
/// 8-neighbour stencil is weighted by chord length.
fn grid_graph(g: &RadialGraph) -> UnGraph<(), f64> {
    let (nt, np) = (g.n_theta, g.n_phi);
    let interior = (nt - 2) * np;
    let mut graph = UnGraph::with_capacity(interior + 2, 4 * interior + 2 * np);
    for _ in 0..interior + 2 {
        graph.add_node(());
    }
    let node = |i: usize, j: usize| -> NodeIndex {
        if i == 0 {
            NodeIndex::new(interior)
        } else if i == nt - 1 {
            NodeIndex::new(interior + 1)
        } else {
            NodeIndex::new((i - 1) * np + j % np)
        }
    };
    let link = |graph: &mut UnGraph<(), f64>, a: (usize, usize), b: (usize, usize)| {
        let w = (g.position(a.0, a.1 % np) - g.position(b.0, b.1 % np)).norm();
        graph.add_edge(node(a.0, a.1), node(b.0, b.1), w);
    };
    for j in 0..np {
        link(&mut graph, (0, 0), (1, j));
        link(&mut graph, (nt - 1, 0), (nt - 2, j));
    }
    for i in 1..nt - 1 {
        for j in 0..np {
            link(&mut graph, (i, j), (i, j + 1));
            if i + 2 < nt {
                link(&mut graph, (i, j), (i + 1, j));
                link(&mut graph, (i, j), (i + 1, j + 1));
                link(&mut graph, (i, j + 1), (i + 1, j));
            }
        }
    }
    graph
}

fn farthest(graph: &UnGraph<(), f64>, from: NodeIndex) -> (NodeIndex, f64) {
    let dist = dijkstra(graph, from, None, |e| *e.weight());
    // ties broken by node index for determinism
    dist.into_iter()
        .fold((from, 0.0), |best, (n, d)| {
            if d > best.1 || (d == best.1 && n.index() < best.0.index()) {
                (n, d)
            } else {
                best
            }
        })
}

/// Largest shortest-path distance found from the two poles and a double sweep
/// started at the farthest vertex from the north pole.
pub fn grid_diameter(g: &RadialGraph) -> f64 {
    let graph = grid_graph(g);
    let interior = (g.n_theta - 2) * g.n_phi;
    let north = NodeIndex::new(interior);
    let south = NodeIndex::new(interior + 1);
    let (a, d_north) = farthest(&graph, north);
    let (_, d_south) = farthest(&graph, south);
    let (b, d_a) = farthest(&graph, a);
    let (_, d_b) = farthest(&graph, b);
    d_north.max(d_south).max(d_a).max(d_b)
}
