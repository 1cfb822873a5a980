//! Undirected simple graphs and the two random models used for experiments:
//! Erdős–Rényi and the D-dimensional lattice stochastic block model.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

/// An undirected simple graph stored as sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adjacency: Vec<Vec<usize>>,
    degrees: Vec<usize>,
}

impl Graph {
    /// Build a graph from unordered pairs. Self-loops, duplicate pairs and
    /// out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::invalid(format!("edge ({u}, {v}) out of range for n = {n}")));
            }
            if u == v {
                return Err(Error::invalid(format!("self-loop at node {u}")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for (u, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::invalid(format!("duplicate edge at node {u}")));
            }
        }
        Ok(Self::from_sorted_adjacency(adjacency))
    }

    fn from_sorted_adjacency(adjacency: Vec<Vec<usize>>) -> Self {
        let degrees = adjacency.iter().map(Vec::len).collect();
        Graph {
            n: adjacency.len(),
            adjacency,
            degrees,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.degrees.iter().sum::<usize>() / 2
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn min_degree(&self) -> usize {
        self.degrees.iter().copied().min().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn adjacency_matrix(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for (u, v) in self.edges() {
            a[(u, v)] = 1.0;
            a[(v, u)] = 1.0;
        }
        a
    }

    /// Unnormalized Laplacian `L = D - A`.
    pub fn laplacian_matrix(&self) -> DMatrix<f64> {
        let mut l = -self.adjacency_matrix();
        for (i, &d) in self.degrees.iter().enumerate() {
            l[(i, i)] = d as f64;
        }
        l
    }

    /// Serialize as the `n <count>` header followed by one `u v` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("n {}\n", self.n);
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Self> {
        let bad = |line: usize, message: String| Error::Format {
            path: "<edge list>".into(),
            line,
            message,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines.next().ok_or_else(|| bad(1, "missing header".into()))?;
        let n = header
            .strip_prefix("n ")
            .and_then(|s| s.trim().parse::<usize>().ok())
            .ok_or_else(|| bad(hline, format!("expected `n <count>`, got `{header}`")))?;
        let mut edges = Vec::new();
        for (lineno, line) in lines {
            let mut parts = line.split_whitespace();
            let parse = |s: Option<&str>| s.and_then(|s| s.parse::<usize>().ok());
            match (parse(parts.next()), parse(parts.next()), parts.next()) {
                (Some(u), Some(v), None) => edges.push((u, v)),
                _ => return Err(bad(lineno, format!("expected `u v`, got `{line}`"))),
            }
        }
        Graph::from_edges(n, edges)
    }

    pub fn write_edge_list(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_edge_list())?;
        Ok(())
    }

    pub fn read_edge_list(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Graph::from_edge_list(&text).map_err(|e| match e {
            Error::Format { line, message, .. } => Error::Format {
                path: path.to_owned(),
                line,
                message,
            },
            other => other,
        })
    }
}

/// True iff a breadth-first traversal from node 0 reaches every node.
pub fn is_connected(g: &Graph) -> bool {
    if g.n == 0 {
        return true;
    }
    let mut seen = vec![false; g.n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut reached = 1;
    while let Some(u) = queue.pop_front() {
        for &v in g.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                reached += 1;
                queue.push_back(v);
            }
        }
    }
    reached == g.n
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} = {p} is not a probability")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawErdosRenyi")]
pub struct ErdosRenyiParams {
    n: usize,
    theta: f64,
}

#[derive(Deserialize)]
struct RawErdosRenyi {
    n: usize,
    theta: f64,
}

impl TryFrom<RawErdosRenyi> for ErdosRenyiParams {
    type Error = Error;
    fn try_from(raw: RawErdosRenyi) -> Result<Self> {
        ErdosRenyiParams::new(raw.n, raw.theta)
    }
}

impl ErdosRenyiParams {
    pub fn new(n: usize, theta: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("Erdős–Rényi needs n ≥ 2, got {n}")));
        }
        check_probability("theta", theta)?;
        Ok(ErdosRenyiParams { n, theta })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// Each of the `n(n-1)/2` pairs is an edge independently with probability `theta`.
pub fn generate_erdos_renyi(params: &ErdosRenyiParams, seed: u64) -> Graph {
    let mut rng = rng_from_seed(seed);
    let n = params.n;
    let mut adjacency = vec![Vec::new(); n];
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random::<f64>() < params.theta {
                adjacency[u].push(v);
                adjacency[v].push(u);
            }
        }
    }
    // Pairs are visited in lexicographic order, so every list is already sorted.
    Graph::from_sorted_adjacency(adjacency)
}

/// Parameters of the lattice stochastic block model: populations indexed by
/// tuples in `dims[0] × … × dims[D-1]`, `m` nodes each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLatticeSbm")]
pub struct LatticeSbmParams {
    dims: Vec<usize>,
    m: usize,
    theta0: f64,
    thetas: Vec<f64>,
}

#[derive(Deserialize)]
struct RawLatticeSbm {
    dims: Vec<usize>,
    m: usize,
    theta0: f64,
    #[serde(default)]
    thetas: Vec<f64>,
}

impl TryFrom<RawLatticeSbm> for LatticeSbmParams {
    type Error = Error;
    fn try_from(raw: RawLatticeSbm) -> Result<Self> {
        LatticeSbmParams::new(raw.dims, raw.m, raw.theta0, raw.thetas)
    }
}

impl LatticeSbmParams {
    pub fn new(dims: Vec<usize>, m: usize, theta0: f64, thetas: Vec<f64>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::invalid("lattice SBM needs at least one dimension"));
        }
        if dims.iter().any(|&k| k == 0) {
            return Err(Error::invalid("every lattice extent must be ≥ 1"));
        }
        if m == 0 {
            return Err(Error::invalid("nodes per population must be ≥ 1"));
        }
        if thetas.len() != dims.len() {
            return Err(Error::invalid(format!(
                "expected {} per-dimension probabilities, got {}",
                dims.len(),
                thetas.len()
            )));
        }
        check_probability("theta0", theta0)?;
        for (k, &t) in thetas.iter().enumerate() {
            check_probability(&format!("thetas[{k}]"), t)?;
        }
        let params = LatticeSbmParams { dims, m, theta0, thetas };
        if params.node_count() < 2 {
            return Err(Error::invalid("lattice SBM must have at least 2 nodes"));
        }
        Ok(params)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn nodes_per_population(&self) -> usize {
        self.m
    }

    pub fn population_count(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn node_count(&self) -> usize {
        self.population_count() * self.m
    }

    /// Lattice coordinates of population `p` (last coordinate varies fastest).
    pub fn population_tuple(&self, mut p: usize) -> Vec<usize> {
        let mut tuple = vec![0; self.dims.len()];
        for (slot, &extent) in tuple.iter_mut().zip(&self.dims).rev() {
            *slot = p % extent;
            p /= extent;
        }
        tuple
    }

    /// Link probability between populations `a` and `b`: θ₀ when equal, θ_k
    /// when the tuples differ by one step in coordinate k only, else 0.
    pub fn link_probability(&self, a: usize, b: usize) -> f64 {
        let (ta, tb) = (self.population_tuple(a), self.population_tuple(b));
        let mut differing = ta.iter().zip(&tb).enumerate().filter(|(_, (x, y))| x != y);
        match (differing.next(), differing.next()) {
            (None, _) => self.theta0,
            (Some((k, (&x, &y))), None) if x.abs_diff(y) == 1 => self.thetas[k],
            _ => 0.0,
        }
    }

    fn probability_table(&self) -> Vec<Vec<f64>> {
        let pops = self.population_count();
        (0..pops)
            .map(|a| (0..pops).map(|b| self.link_probability(a, b)).collect())
            .collect()
    }
}

pub fn generate_lattice_sbm(params: &LatticeSbmParams, seed: u64) -> Graph {
    let table = params.probability_table();
    let mut rng = rng_from_seed(seed);
    let n = params.node_count();
    let m = params.m;
    let mut adjacency = vec![Vec::new(); n];
    for u in 0..n {
        let row = &table[u / m];
        for v in (u + 1)..n {
            let p = row[v / m];
            // Draw for every pair so the stream layout does not depend on θ.
            if rng.random::<f64>() < p {
                adjacency[u].push(v);
                adjacency[v].push(u);
            }
        }
    }
    Graph::from_sorted_adjacency(adjacency)
}

/// A random graph model, tagged for configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GraphModel {
    ErdosRenyi(ErdosRenyiParams),
    LatticeSbm(LatticeSbmParams),
}

impl GraphModel {
    pub fn node_count(&self) -> usize {
        match self {
            GraphModel::ErdosRenyi(p) => p.n(),
            GraphModel::LatticeSbm(p) => p.node_count(),
        }
    }

    pub fn sample(&self, seed: u64) -> Graph {
        match self {
            GraphModel::ErdosRenyi(p) => generate_erdos_renyi(p, seed),
            GraphModel::LatticeSbm(p) => generate_lattice_sbm(p, seed),
        }
    }

    /// The expected adjacency matrix `E[A]` (zero diagonal).
    pub fn mean_adjacency(&self) -> DMatrix<f64> {
        let n = self.node_count();
        match self {
            GraphModel::ErdosRenyi(p) => {
                DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { p.theta() })
            }
            GraphModel::LatticeSbm(p) => {
                let table = p.probability_table();
                let m = p.m;
                DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { table[i / m][j / m] })
            }
        }
    }
}
