//! The labeled Rauzy diagram: combinatorics joined by split arrows.

use std::collections::HashMap;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::iet::{Combinatorics, Side};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    /// Side of the winning critical band.
    pub letter: Side,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RauzyGraph {
    pub nodes: Vec<Combinatorics>,
    pub edges: Vec<Edge>,
    /// Exploration stopped at the node limit; some arrows may be missing.
    pub truncated: bool,
}

impl RauzyGraph {
    pub fn node_index(&self, c: &Combinatorics) -> Option<usize> {
        self.nodes.iter().position(|n| n == c)
    }

    pub fn out_edges(&self, node: usize) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.from == node)
    }

    /// Number of classes after forgetting labels.
    pub fn unlabeled_count(&self) -> usize {
        let mut sigs: Vec<_> = self.nodes.iter().map(Combinatorics::unlabeled_signature).collect();
        sigs.sort();
        sigs.dedup();
        sigs.len()
    }
}

/// Breadth-first closure of the split moves from `start`, stopping once
/// `node_limit` nodes are known. Frontier levels are expanded in parallel and
/// merged in order, so the result does not depend on scheduling.
pub fn explore(start: &Combinatorics, node_limit: usize) -> RauzyGraph {
    let mut index: HashMap<Combinatorics, usize> = HashMap::new();
    let mut nodes = vec![start.clone()];
    index.insert(start.clone(), 0);
    let mut edges = Vec::new();
    let mut truncated = node_limit <= 1;
    let mut frontier = vec![0usize];
    if truncated {
        return RauzyGraph {
            nodes,
            edges,
            truncated,
        };
    }
    'outer: while !frontier.is_empty() {
        let succ: Vec<Vec<(Side, Combinatorics)>> = frontier
            .par_iter()
            .map(|&u| {
                [Side::Top, Side::Bottom]
                    .into_iter()
                    .filter_map(|s| nodes[u].successor(s).map(|c| (s, c)))
                    .collect()
            })
            .collect();
        let mut next = Vec::new();
        for (&u, list) in frontier.iter().zip(succ) {
            for (letter, c) in list {
                let v = match index.get(&c) {
                    Some(&v) => v,
                    None => {
                        if nodes.len() >= node_limit {
                            truncated = true;
                            break 'outer;
                        }
                        let v = nodes.len();
                        index.insert(c.clone(), v);
                        nodes.push(c);
                        next.push(v);
                        v
                    }
                };
                edges.push(Edge { from: u, to: v, letter });
            }
        }
        frontier = next;
    }
    RauzyGraph {
        nodes,
        edges,
        truncated,
    }
}

/// Strongly connected components closed under out-arrows. A single node
/// counts only if it has a self-loop.
pub fn attractors(graph: &RauzyGraph) -> Result<Vec<Vec<usize>>> {
    if graph.truncated {
        return Err(Error::Unavailable("attractors need a fully explored graph".into()));
    }
    let mut g: DiGraph<(), ()> = DiGraph::with_capacity(graph.nodes.len(), graph.edges.len());
    let ids: Vec<_> = (0..graph.nodes.len()).map(|_| g.add_node(())).collect();
    for e in &graph.edges {
        g.add_edge(ids[e.from], ids[e.to], ());
    }
    let mut comp = vec![usize::MAX; graph.nodes.len()];
    let sccs: Vec<Vec<usize>> = tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|n| n.index()).collect();
            v.sort_unstable();
            v
        })
        .collect();
    for (i, c) in sccs.iter().enumerate() {
        for &n in c {
            comp[n] = i;
        }
    }
    let mut out: Vec<Vec<usize>> = sccs
        .iter()
        .enumerate()
        .filter(|(i, c)| {
            let closed = graph.edges.iter().all(|e| comp[e.from] != *i || comp[e.to] == *i);
            let recurrent = c.len() > 1 || graph.edges.iter().any(|e| e.from == c[0] && e.to == c[0]);
            closed && recurrent
        })
        .map(|(_, c)| c.clone())
        .collect();
    out.sort();
    Ok(out)
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// GraphViz text. Node names are canonical serializations.
pub fn export_dot(graph: &RauzyGraph) -> String {
    let mut s = String::from("digraph rauzy {\n");
    for n in &graph.nodes {
        s.push_str(&format!("  {};\n", quote(&n.canonical_string())));
    }
    for e in &graph.edges {
        s.push_str(&format!(
            "  {} -> {} [label={}];\n",
            quote(&graph.nodes[e.from].canonical_string()),
            quote(&graph.nodes[e.to].canonical_string()),
            e.letter
        ));
    }
    s.push_str("}\n");
    s
}

#[derive(Serialize)]
struct JsonGraph<'a> {
    nodes: Vec<String>,
    edges: &'a [Edge],
    truncated: bool,
}

/// `{nodes, edges:[{from,to,letter}], truncated}`.
pub fn export_json(graph: &RauzyGraph) -> serde_json::Value {
    serde_json::to_value(JsonGraph {
        nodes: graph.nodes.iter().map(Combinatorics::canonical_string).collect(),
        edges: &graph.edges,
        truncated: graph.truncated,
    })
    .expect("graph serializes")
}
