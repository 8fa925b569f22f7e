//! Reduction of an ordered action to a partial order over its features.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interaction::InteractionMatrix;

/// DAG over the perturbed features; edges are `(from, to)` feature indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialOrderDag {
    pub nodes: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
}

impl PartialOrderDag {
    fn local(&self, f: usize) -> usize {
        self.nodes.iter().position(|&n| n == f).expect("edge endpoint is a node")
    }

    fn adjacency(&self) -> Vec<Vec<bool>> {
        let n = self.nodes.len();
        let mut adj = vec![vec![false; n]; n];
        for &(u, v) in &self.edges {
            adj[self.local(u)][self.local(v)] = true;
        }
        adj
    }

    /// Features that must be changed before `f`.
    pub fn ancestors(&self, f: usize) -> Vec<usize> {
        let reach = reachability(&self.adjacency());
        let j = self.local(f);
        let mut out: Vec<usize> = (0..self.nodes.len())
            .filter(|&i| reach[i][j])
            .map(|i| self.nodes[i])
            .collect();
        out.sort_unstable();
        out
    }

    /// Graphviz rendering with feature names as labels.
    pub fn to_dot(&self, names: &[String]) -> String {
        let mut s = String::from("digraph partial_order {\n");
        for &n in &self.nodes {
            writeln!(s, "  n{n} [label=\"{}\"];", names[n].replace('"', "\\\"")).unwrap();
        }
        for &(u, v) in &self.edges {
            writeln!(s, "  n{u} -> n{v};").unwrap();
        }
        s.push_str("}\n");
        s
    }
}

/// `reach[i][j]`: a path of length at least one leads from `i` to `j`.
fn reachability(adj: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = adj.len();
    let mut reach = vec![vec![false; n]; n];
    for s in 0..n {
        let mut stack: Vec<usize> = (0..n).filter(|&t| adj[s][t]).collect();
        while let Some(u) = stack.pop() {
            if reach[s][u] {
                continue;
            }
            reach[s][u] = true;
            stack.extend((0..n).filter(|&t| adj[u][t] && !reach[s][t]));
        }
    }
    reach
}

fn transitive_reduction(adj: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = adj.len();
    let reach = reachability(adj);
    let mut out = adj.to_vec();
    for u in 0..n {
        for v in 0..n {
            if adj[u][v] && (0..n).any(|w| w != v && adj[u][w] && reach[w][v]) {
                out[u][v] = false;
            }
        }
    }
    out
}

/// Path over `order`, transitive closure, removal of pairs without
/// interaction in either direction (`|M| <= threshold`), transitive
/// reduction.
pub fn reduce_to_partial_order(order: &[usize], m: &InteractionMatrix, threshold: f64) -> PartialOrderDag {
    let n = order.len();
    // closure of a path: every earlier node precedes every later one
    let mut adj = vec![vec![false; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (order[i], order[j]);
            adj[i][j] = m.get(a, b).abs() > threshold || m.get(b, a).abs() > threshold;
        }
    }
    let red = transitive_reduction(&adj);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if red[i][j] {
                edges.push((order[i], order[j]));
            }
        }
    }
    edges.sort_unstable();
    PartialOrderDag {
        nodes: order.to_vec(),
        edges,
    }
}

/// All topological orders of `dag`, in lexicographic order of feature
/// indices. Fails once more than `limit` orders exist.
pub fn linear_extensions(dag: &PartialOrderDag, limit: usize) -> Result<Vec<Vec<usize>>> {
    let mut nodes = dag.nodes.clone();
    nodes.sort_unstable();
    let n = nodes.len();
    let idx = |f: usize| nodes.iter().position(|&x| x == f).expect("edge endpoint is a node");
    let mut preds = vec![0usize; n];
    let mut succ = vec![Vec::new(); n];
    for &(u, v) in &dag.edges {
        preds[idx(v)] += 1;
        succ[idx(u)].push(idx(v));
    }
    fn rec(
        nodes: &[usize],
        preds: &mut [usize],
        succ: &[Vec<usize>],
        used: &mut [bool],
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        limit: usize,
    ) -> bool {
        if cur.len() == nodes.len() {
            if out.len() == limit {
                return false;
            }
            out.push(cur.iter().map(|&i| nodes[i]).collect());
            return true;
        }
        for i in 0..nodes.len() {
            if used[i] || preds[i] > 0 {
                continue;
            }
            used[i] = true;
            cur.push(i);
            for &s in &succ[i] {
                preds[s] -= 1;
            }
            let ok = rec(nodes, preds, succ, used, cur, out, limit);
            for &s in &succ[i] {
                preds[s] += 1;
            }
            cur.pop();
            used[i] = false;
            if !ok {
                return false;
            }
        }
        true
    }
    let mut out = Vec::new();
    let ok = rec(&nodes, &mut preds, &succ, &mut vec![false; n], &mut Vec::new(), &mut out, limit);
    if !ok {
        return Err(Error::BudgetExceeded {
            needed: limit as u128 + 1,
            limit: limit as u128,
        });
    }
    Ok(out)
}
