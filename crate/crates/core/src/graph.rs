//! Digraph structure of nonnegative matrices: strong components, sinks,
//! reachability, and the sink criterion for Schur stability of principal
//! submatrices of a stochastic matrix.

use std::collections::VecDeque;

use serde::Serialize;

use crate::dense::Matrix;
use crate::error::GraphError;
use crate::model::RelativeLiabilityMatrix;

/// Digraph `G[M]` with an arc `i → j` whenever `M_ij > 0`.
#[derive(Clone, Debug)]
pub struct WeightedDigraph {
    weights: Matrix,
    successors: Vec<Vec<usize>>,
}

impl WeightedDigraph {
    pub fn from_matrix(m: &Matrix) -> Result<Self, GraphError> {
        if !m.is_square() {
            return Err(GraphError::NotSquare {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        let successors = (0..m.rows())
            .map(|i| (0..m.cols()).filter(|&j| m[(i, j)] > 0.0).collect())
            .collect();
        Ok(WeightedDigraph {
            weights: m.clone(),
            successors,
        })
    }

    pub fn n(&self) -> usize {
        self.successors.len()
    }

    pub fn successors(&self, i: usize) -> &[usize] {
        &self.successors[i]
    }

    pub fn has_arc(&self, i: usize, j: usize) -> bool {
        self.weights[(i, j)] > 0.0
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.successors
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.iter().map(move |&j| (i, j)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StrongComponent {
    /// Sorted node indices.
    pub nodes: Vec<usize>,
    pub is_sink: bool,
    pub is_source: bool,
    pub is_isolated: bool,
    /// A single node (with or without a self-loop).
    pub is_trivial: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CondensationInfo {
    /// Components ordered by their smallest node.
    pub components: Vec<StrongComponent>,
    /// Component index of every node.
    pub component_of: Vec<usize>,
}

impl CondensationInfo {
    pub fn sinks(&self) -> impl Iterator<Item = &StrongComponent> {
        self.components.iter().filter(|c| c.is_sink)
    }

    pub fn sources(&self) -> impl Iterator<Item = &StrongComponent> {
        self.components.iter().filter(|c| c.is_source)
    }

    /// True when every component is a single node without a self-loop.
    pub fn is_acyclic(&self, graph: &WeightedDigraph) -> bool {
        self.components
            .iter()
            .all(|c| c.is_trivial && !graph.has_arc(c.nodes[0], c.nodes[0]))
    }

    /// The sink node when the graph has exactly one sink component and it
    /// is a single node. Such a sink is reachable from every node.
    pub fn unique_sink_node(&self) -> Option<usize> {
        let mut sinks = self.sinks();
        match (sinks.next(), sinks.next()) {
            (Some(c), None) if c.is_trivial => Some(c.nodes[0]),
            _ => None,
        }
    }
}

/// Tarjan's algorithm, iterative.
pub fn strong_components(graph: &WeightedDigraph) -> CondensationInfo {
    let n = graph.n();
    const UNVISITED: usize = usize::MAX;
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut raw: Vec<Vec<usize>> = Vec::new();
    let mut next_index = 0;

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        // (node, position in its successor list)
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            let succ = graph.successors(v);
            if *pos < succ.len() {
                let w = succ[*pos];
                *pos += 1;
                if index[w] == UNVISITED {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                raw.push(comp);
            }
        }
    }

    raw.sort_by_key(|c| c[0]);
    let mut component_of = vec![0; n];
    for (k, comp) in raw.iter().enumerate() {
        for &v in comp {
            component_of[v] = k;
        }
    }
    let mut has_out = vec![false; raw.len()];
    let mut has_in = vec![false; raw.len()];
    for (i, j) in graph.arcs() {
        let (ci, cj) = (component_of[i], component_of[j]);
        if ci != cj {
            has_out[ci] = true;
            has_in[cj] = true;
        }
    }
    let components = raw
        .into_iter()
        .enumerate()
        .map(|(k, nodes)| StrongComponent {
            is_trivial: nodes.len() == 1,
            is_sink: !has_out[k],
            is_source: !has_in[k],
            is_isolated: !has_out[k] && !has_in[k],
            nodes,
        })
        .collect();
    CondensationInfo {
        components,
        component_of,
    }
}

/// Whether `target` is reachable from `from` (trivially so if `from ∈ target`).
pub fn reachable(graph: &WeightedDigraph, from: usize, target: &[usize]) -> Result<bool, GraphError> {
    let n = graph.n();
    if from >= n {
        return Err(GraphError::NodeOutOfRange { node: from, n });
    }
    let mut is_target = vec![false; n];
    for &t in target {
        if t >= n {
            return Err(GraphError::NodeOutOfRange { node: t, n });
        }
        is_target[t] = true;
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(v) = queue.pop_front() {
        if is_target[v] {
            return Ok(true);
        }
        for &w in graph.successors(v) {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    Ok(false)
}

/// Whether `target` is reachable from every node.
pub fn globally_reachable(graph: &WeightedDigraph, target: &[usize]) -> Result<bool, GraphError> {
    for i in 0..graph.n() {
        if !reachable(graph, i, target)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityVerdict {
    pub stable: bool,
    /// A sink component contained in the subset, when unstable.
    pub witness: Option<Vec<usize>>,
    /// Power-iteration estimate of the submatrix spectral radius (diagnostic).
    pub spectral_radius_estimate: f64,
}

pub const SPECTRAL_ITERATIONS: usize = 10_000;
pub const SPECTRAL_MARGIN: f64 = 1e-8;

/// Schur stability of the principal submatrix of a stochastic `A` on a
/// proper node subset: unstable exactly when the subset contains every node
/// of some sink component of `G[A]`.
pub fn submatrix_schur_stable(
    a: &RelativeLiabilityMatrix,
    subset: &[usize],
) -> Result<StabilityVerdict, GraphError> {
    let m = a.matrix();
    let n = m.rows();
    let mut inside = vec![false; n];
    for &v in subset {
        if v >= n {
            return Err(GraphError::NodeOutOfRange { node: v, n });
        }
        inside[v] = true;
    }
    let mut idx: Vec<usize> = (0..n).filter(|&v| inside[v]).collect();
    idx.dedup();
    if idx.len() == n {
        return Err(GraphError::ImproperSubset);
    }
    let graph = WeightedDigraph::from_matrix(m)?;
    let cond = strong_components(&graph);
    let witness = cond
        .sinks()
        .find(|c| c.nodes.iter().all(|&v| inside[v]))
        .map(|c| c.nodes.clone());
    let rho = spectral_radius_estimate(&m.principal_submatrix(&idx), SPECTRAL_ITERATIONS);
    Ok(StabilityVerdict {
        stable: witness.is_none(),
        witness,
        spectral_radius_estimate: rho,
    })
}

/// Spectral radius of a nonnegative matrix by normalized power iteration
/// from the all-ones vector; the growth factor is averaged geometrically
/// over the second half of the run so periodic blocks do not oscillate it.
pub fn spectral_radius_estimate(m: &Matrix, iterations: usize) -> f64 {
    let k = m.rows();
    if k == 0 {
        return 0.0;
    }
    let mut x = vec![1.0; k];
    let mut log_sum = 0.0;
    let mut counted = 0usize;
    let start = iterations / 2;
    for it in 0..iterations.max(1) {
        let y: Vec<f64> = (0..k)
            .map(|i| m.row(i).iter().zip(&x).map(|(a, v)| a * v).sum())
            .collect();
        let norm = y.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
        if norm == 0.0 {
            return 0.0;
        }
        if it >= start {
            log_sum += norm.ln();
            counted += 1;
        }
        x = y.into_iter().map(|v| v / norm).collect();
    }
    (log_sum / counted as f64).exp()
}
