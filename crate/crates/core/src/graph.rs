//! Directed acyclic graphs over treatment nodes and the graph algorithms the
//! discovery machinery is built on.
//!
//! The outcome `Y` is never stored: every treatment is implicitly its parent.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds;

/// A set of treatment indices, always iterated in ascending order.
pub type NodeSet = BTreeSet<usize>;

/// Fixed-width bit row used for reachability matrices.
#[derive(Clone, Debug, PartialEq, Eq)]
struct BitRow(Vec<u64>);

impl BitRow {
    fn new(n: usize) -> Self {
        BitRow(vec![0; n.div_ceil(64)])
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    fn union_with(&mut self, other: &BitRow) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= *b;
        }
    }
}

/// A directed acyclic graph on `n` nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DagRepr", into = "DagRepr")]
pub struct Dag {
    n: usize,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

/// On-disk form: `{"n": int, "edges": [[i, j], ...]}`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DagRepr {
    n: usize,
    edges: Vec<[usize; 2]>,
}

impl TryFrom<DagRepr> for Dag {
    type Error = Error;

    fn try_from(r: DagRepr) -> Result<Self> {
        Dag::new(r.n, r.edges.into_iter().map(|[i, j]| (i, j)))
    }
}

impl From<Dag> for DagRepr {
    fn from(g: Dag) -> Self {
        DagRepr {
            n: g.n,
            edges: g.edges().into_iter().map(|(i, j)| [i, j]).collect(),
        }
    }
}

impl Dag {
    /// Builds a graph, rejecting out-of-range nodes, self-loops, duplicate
    /// edges and cycles.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        let mut seen = BTreeSet::new();
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::graph(format!("edge ({i}, {j}) out of range for n = {n}")));
            }
            if i == j {
                return Err(Error::graph(format!("self-loop on node {i}")));
            }
            if !seen.insert((i, j)) {
                return Err(Error::graph(format!("duplicate edge ({i}, {j})")));
            }
            parents[j].push(i);
            children[i].push(j);
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
        }
        let g = Dag {
            n,
            parents,
            children,
        };
        if g.kahn_order().is_none() {
            return Err(Error::graph("graph contains a directed cycle"));
        }
        Ok(g)
    }

    pub fn empty(n: usize) -> Self {
        Dag {
            n,
            parents: vec![Vec::new(); n],
            children: vec![Vec::new(); n],
        }
    }

    /// Builds the acyclic part of an arbitrary directed relation by dropping
    /// every edge that lies inside a strongly connected component.
    ///
    /// Statistical tests can report contradictory orientations; the edges
    /// whose direction is ambiguous are the ones discarded.
    pub fn from_relation_dropping_cycles(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Self {
        let edges: BTreeSet<(usize, usize)> = edges.into_iter().filter(|(i, j)| i != j).collect();
        let reach = relation_reachability(n, &edges);
        let kept = edges
            .into_iter()
            .filter(|&(i, j)| !reach[j].get(i))
            .collect::<Vec<_>>();
        Dag::new(n, kept).expect("edges outside strongly connected components are acyclic")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// All edges, sorted lexicographically.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (i, ch) in self.children.iter().enumerate() {
            out.extend(ch.iter().map(|&j| (i, j)));
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.children.iter().map(Vec::len).sum()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.n && self.children[i].binary_search(&j).is_ok()
    }

    /// Sorted parents of `i`.
    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn parent_set(&self, i: usize) -> NodeSet {
        self.parents[i].iter().copied().collect()
    }

    /// Sorted children of `i`.
    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    /// In-degree plus out-degree.
    pub fn degree(&self, i: usize) -> usize {
        self.parents[i].len() + self.children[i].len()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|i| self.degree(i)).max().unwrap_or(0)
    }

    /// Topological order with ties broken by ascending node index.
    pub fn topological_order(&self) -> Vec<usize> {
        self.kahn_order()
            .expect("Dag invariant guarantees acyclicity")
    }

    fn kahn_order(&self) -> Option<Vec<usize>> {
        let mut indeg: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: BinaryHeap<Reverse<usize>> = indeg
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 0)
            .map(|(i, _)| Reverse(i))
            .collect();
        let mut order = Vec::with_capacity(self.n);
        while let Some(Reverse(i)) = ready.pop() {
            order.push(i);
            for &j in &self.children[i] {
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    ready.push(Reverse(j));
                }
            }
        }
        (order.len() == self.n).then_some(order)
    }

    /// `reach[i]` holds every node reachable from `i` by a non-empty path.
    fn reachability(&self) -> Vec<BitRow> {
        let mut reach = vec![BitRow::new(self.n); self.n];
        for &i in self.topological_order().iter().rev() {
            let mut row = BitRow::new(self.n);
            for &c in &self.children[i] {
                row.set(c);
                row.union_with(&reach[c]);
            }
            reach[i] = row;
        }
        reach
    }

    /// Edge `(i, j)` for every directed path `i ⇝ j`.
    pub fn transitive_closure(&self) -> Dag {
        let reach = self.reachability();
        let edges = (0..self.n)
            .flat_map(|i| (0..self.n).filter(move |&j| i != j).map(move |j| (i, j)))
            .filter(|&(i, j)| reach[i].get(j));
        Dag::new(self.n, edges.collect::<Vec<_>>()).expect("closure of a DAG is acyclic")
    }

    /// The unique minimum-edge graph with the same transitive closure.
    ///
    /// An edge `(i, j)` survives iff no other child of `i` reaches `j`.
    pub fn transitive_reduction(&self) -> Dag {
        let reach = self.reachability();
        let mut edges = Vec::new();
        for i in 0..self.n {
            for &j in &self.children[i] {
                let redundant = self.children[i]
                    .iter()
                    .any(|&k| k != j && reach[k].get(j));
                if !redundant {
                    edges.push((i, j));
                }
            }
        }
        Dag::new(self.n, edges).expect("subgraph of a DAG is acyclic")
    }

    /// The post-interventional graph: every edge into `targets` removed.
    pub fn without_incoming(&self, targets: &NodeSet) -> Dag {
        let edges = self
            .edges()
            .into_iter()
            .filter(|(_, j)| !targets.contains(j));
        Dag::new(self.n, edges.collect::<Vec<_>>()).expect("subgraph of a DAG is acyclic")
    }

    /// Whether a directed path `from ⇝ to` of length at least one exists.
    pub fn has_path(&self, from: usize, to: usize) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([from]);
        while let Some(v) = queue.pop_front() {
            for &c in &self.children[v] {
                if c == to {
                    return true;
                }
                if !seen[c] {
                    seen[c] = true;
                    queue.push_back(c);
                }
            }
        }
        false
    }

    /// Ancestors of `set`, including the members of `set`.
    pub fn ancestors_of(&self, set: &NodeSet) -> NodeSet {
        let mut out = set.clone();
        let mut stack: Vec<usize> = set.iter().copied().collect();
        while let Some(v) = stack.pop() {
            for &p in &self.parents[v] {
                if out.insert(p) {
                    stack.push(p);
                }
            }
        }
        out
    }
}

fn relation_reachability(n: usize, edges: &BTreeSet<(usize, usize)>) -> Vec<BitRow> {
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in edges {
        adj[i].push(j);
    }
    (0..n)
        .map(|s| {
            let mut row = BitRow::new(n);
            let mut stack = vec![s];
            while let Some(v) = stack.pop() {
                for &c in &adj[v] {
                    if !row.get(c) {
                        row.set(c);
                        stack.push(c);
                    }
                }
            }
            row
        })
        .collect()
}

/// Transitive closure of an arbitrary directed relation, keeping only the
/// strictly ordered pairs (`i ⇝ j` but not `j ⇝ i`).
pub fn closure_of_relation(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Dag {
    let edges: BTreeSet<(usize, usize)> = edges.into_iter().filter(|(i, j)| i != j).collect();
    let reach = relation_reachability(n, &edges);
    let pairs = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && reach[i].get(j) && !reach[j].get(i));
    Dag::new(n, pairs.collect::<Vec<_>>()).expect("strict part of a preorder is acyclic")
}

/// Structural Hamming distance: the number of ordered pairs whose edge
/// presence differs, so a reversed edge costs two.
pub fn shd(a: &Dag, b: &Dag) -> Result<usize> {
    if a.n != b.n {
        return Err(Error::usage(format!(
            "shd of graphs with different node counts ({} vs {})",
            a.n, b.n
        )));
    }
    let ea: BTreeSet<_> = a.edges().into_iter().collect();
    let eb: BTreeSet<_> = b.edges().into_iter().collect();
    Ok(ea.symmetric_difference(&eb).count())
}

/// Random DAG whose every node has in-degree plus out-degree at most `d_max`.
///
/// Nodes get a random topological order; all forward pairs are visited in a
/// random order and each is accepted with probability `edge_prob` unless it
/// would push an endpoint over the degree budget.
pub fn random_dag(n: usize, d_max: usize, edge_prob: f64, seed: u64) -> Dag {
    let mut rng = seeds::rng(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut candidates: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .map(|(a, b)| (order[a], order[b]))
        .collect();
    candidates.shuffle(&mut rng);

    let mut degree = vec![0usize; n];
    let mut edges = Vec::new();
    for (u, v) in candidates {
        let accept = rng.random::<f64>() < edge_prob;
        if accept && degree[u] < d_max && degree[v] < d_max {
            degree[u] += 1;
            degree[v] += 1;
            edges.push((u, v));
        }
    }
    Dag::new(n, edges).expect("edges follow a topological order")
}

/// A DAG plus bidirected edges marking latent common causes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Admg {
    pub dag: Dag,
    bidirected: BTreeSet<(usize, usize)>,
}

impl Admg {
    pub fn new(dag: Dag, bidirected: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let n = dag.n();
        let mut set = BTreeSet::new();
        for (i, j) in bidirected {
            if i == j {
                return Err(Error::graph(format!("bidirected self-edge on node {i}")));
            }
            if i >= n || j >= n {
                return Err(Error::graph(format!("bidirected edge ({i}, {j}) out of range")));
            }
            set.insert((i.min(j), i.max(j)));
        }
        Ok(Admg {
            dag,
            bidirected: set,
        })
    }

    /// Confounding read off a noise covariance: `i ↔ j` wherever
    /// `cov[i][j] != 0` among the treatment block.
    pub fn from_covariance(dag: Dag, cov: &nalgebra::DMatrix<f64>) -> Self {
        let n = dag.n();
        let pairs = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| cov[(i, j)] != 0.0);
        Admg::new(dag, pairs.collect::<Vec<_>>()).expect("pairs are in range")
    }

    pub fn bidirected(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.bidirected.iter().copied()
    }

    pub fn has_bidirected(&self, i: usize, j: usize) -> bool {
        self.bidirected.contains(&(i.min(j), i.max(j)))
    }
}

/// m-separation of `a` and `b` given `cond`.
///
/// Each bidirected edge becomes an explicit latent parent of both endpoints;
/// the question is then answered by Bayes-ball reachability on that DAG.
pub fn d_separated(g: &Admg, a: usize, b: usize, cond: &NodeSet) -> Result<bool> {
    let n = g.dag.n();
    if a == b || a >= n || b >= n {
        return Err(Error::usage(format!("invalid d-separation query ({a}, {b})")));
    }
    if cond.contains(&a) || cond.contains(&b) {
        return Err(Error::usage("query endpoints must not be conditioned on"));
    }

    // Augmented node ids: 0..n observed, n.. latent.
    let latents: Vec<(usize, usize)> = g.bidirected().collect();
    let total = n + latents.len();
    let mut parents: Vec<Vec<usize>> = (0..n).map(|i| g.dag.parents(i).to_vec()).collect();
    let mut children: Vec<Vec<usize>> = (0..n).map(|i| g.dag.children(i).to_vec()).collect();
    parents.resize(total, Vec::new());
    children.resize(total, Vec::new());
    for (k, &(i, j)) in latents.iter().enumerate() {
        let l = n + k;
        children[l] = vec![i, j];
        parents[i].push(l);
        parents[j].push(l);
    }

    // Ancestors of the conditioning set (latents are never conditioned on,
    // and are never ancestors of observed nodes except via their children).
    let mut anc = vec![false; total];
    let mut stack: Vec<usize> = cond.iter().copied().collect();
    for &c in cond {
        anc[c] = true;
    }
    while let Some(v) = stack.pop() {
        for &p in &parents[v] {
            if !anc[p] {
                anc[p] = true;
                stack.push(p);
            }
        }
    }

    #[derive(Clone, Copy, PartialEq, Eq)]
    enum Dir {
        Up,
        Down,
    }
    let idx = |v: usize, d: Dir| 2 * v + usize::from(d == Dir::Down);
    let mut visited = vec![false; 2 * total];
    let mut queue = VecDeque::from([(a, Dir::Up)]);
    while let Some((v, dir)) = queue.pop_front() {
        if visited[idx(v, dir)] {
            continue;
        }
        visited[idx(v, dir)] = true;
        let observed_cond = v < n && cond.contains(&v);
        if v == b && !observed_cond {
            return Ok(false);
        }
        match dir {
            Dir::Up if !observed_cond => {
                queue.extend(parents[v].iter().map(|&p| (p, Dir::Up)));
                queue.extend(children[v].iter().map(|&c| (c, Dir::Down)));
            }
            Dir::Up => {}
            Dir::Down => {
                if !observed_cond {
                    queue.extend(children[v].iter().map(|&c| (c, Dir::Down)));
                }
                if anc[v] {
                    queue.extend(parents[v].iter().map(|&p| (p, Dir::Up)));
                }
            }
        }
    }
    Ok(true)
}
