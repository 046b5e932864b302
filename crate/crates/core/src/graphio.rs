//! Undirected simple graphs: random generation, DIMACS/JSON I/O, adjacency
//! matrices and an exact stability-number oracle for small instances.
//!
//! Vertices are 0-based inside this crate. The DIMACS and JSON forms are
//! 1-based; the conversion happens only in this module.

use std::collections::BTreeSet;
use std::fmt::Write;

use rand_xoshiro::rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symmat::SymMatrix;

/// Largest graph accepted by [`stability_number`].
pub const MAX_ORACLE_VERTICES: usize = 40;

/// Simple undirected graph with sorted, deduplicated edges `(i, j)`, `i < j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphRepr", into = "GraphRepr")]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

/// 1-based JSON form `{ "n": .., "edges": [[i, j], ..] }`.
#[derive(Serialize, Deserialize)]
struct GraphRepr {
    n: usize,
    edges: Vec<[usize; 2]>,
}

impl TryFrom<GraphRepr> for Graph {
    type Error = Error;

    fn try_from(repr: GraphRepr) -> Result<Self> {
        let mut edges = Vec::with_capacity(repr.edges.len());
        for [i, j] in repr.edges {
            if i == 0 || j == 0 {
                return Err(Error::InvalidArgument("vertex indices are 1-based".into()));
            }
            edges.push((i - 1, j - 1));
        }
        Graph::new(repr.n, edges)
    }
}

impl From<Graph> for GraphRepr {
    fn from(g: Graph) -> Self {
        GraphRepr {
            n: g.n,
            edges: g.edges.iter().map(|&(i, j)| [i + 1, j + 1]).collect(),
        }
    }
}

impl Graph {
    /// Builds a graph from 0-based edges in any orientation; duplicates are
    /// merged, self-loops and out-of-range indices are rejected.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i == j {
                return Err(Error::InvalidArgument(format!("self-loop at vertex {}", i + 1)));
            }
            if i >= n || j >= n {
                return Err(Error::InvalidArgument(format!(
                    "edge ({}, {}) out of range for n = {n}",
                    i + 1,
                    j + 1
                )));
            }
            set.insert((i.min(j), i.max(j)));
        }
        Ok(Graph {
            n,
            edges: set.into_iter().collect(),
        })
    }

    pub fn empty(n: usize) -> Self {
        Graph { n, edges: Vec::new() }
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        Graph { n, edges }
    }

    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument(format!("a cycle needs n >= 3, got {n}")));
        }
        Graph::new(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// 0-based edges, `i < j`, lexicographically sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    pub fn min_degree(&self) -> usize {
        self.degrees().into_iter().min().unwrap_or(0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Uniform draw in `[0, 1)` from the top 53 bits of the generator output.
fn unit_draw(rng: &mut Xoshiro256StarStar) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Erdős–Rényi graph `G(n, p)`.
///
/// The generator is xoshiro256** seeded through SplitMix64 from `seed`; pairs
/// `(i, j)`, `i < j`, are visited lexicographically and each keeps its edge iff
/// the next draw `(next_u64 >> 11) · 2⁻⁵³` is below `p`.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(Error::InvalidArgument("graph needs at least one vertex".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "edge probability {p} outside [0, 1]"
        )));
    }
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if unit_draw(&mut rng) < p {
                edges.push((i, j));
            }
        }
    }
    Ok(Graph { n, edges })
}

/// Parses the DIMACS edge format (`c` comments, one `p edge n m` line, `e i j`
/// lines). The declared edge count is not enforced.
pub fn parse_dimacs(text: &str) -> Result<Graph> {
    let mut n: Option<usize> = None;
    let mut edges = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |message: String| Error::Parse { line, message };
        let mut tokens = raw.split_whitespace();
        let Some(tag) = tokens.next() else { continue };
        match tag {
            "c" => {}
            "p" => {
                if n.is_some() {
                    return Err(err("duplicate problem line".into()));
                }
                if tokens.next() != Some("edge") {
                    return Err(err("expected `p edge <n> <m>`".into()));
                }
                let count = parse_count(tokens.next(), "vertex count").map_err(err)?;
                parse_count(tokens.next(), "edge count").map_err(err)?;
                if tokens.next().is_some() {
                    return Err(err("trailing tokens on problem line".into()));
                }
                n = Some(count);
            }
            "e" => {
                let Some(n) = n else {
                    return Err(err("edge before problem line".into()));
                };
                let i = parse_count(tokens.next(), "edge endpoint").map_err(err)?;
                let j = parse_count(tokens.next(), "edge endpoint").map_err(err)?;
                if tokens.next().is_some() {
                    return Err(err("trailing tokens on edge line".into()));
                }
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(err(format!("edge ({i}, {j}) out of range 1..={n}")));
                }
                if i == j {
                    return Err(err(format!("self-loop at vertex {i}")));
                }
                edges.insert((i.min(j) - 1, i.max(j) - 1));
            }
            other => return Err(err(format!("unknown line type `{other}`"))),
        }
    }
    let n = n.ok_or(Error::Parse {
        line: text.lines().count().max(1),
        message: "missing `p edge` line".into(),
    })?;
    Ok(Graph {
        n,
        edges: edges.into_iter().collect(),
    })
}

fn parse_count(token: Option<&str>, what: &str) -> std::result::Result<usize, String> {
    let token = token.ok_or_else(|| format!("missing {what}"))?;
    token.parse().map_err(|_| format!("malformed {what} `{token}`"))
}

/// Canonical DIMACS rendering; [`parse_dimacs`] inverts it.
pub fn render_dimacs(g: &Graph) -> String {
    let mut out = String::new();
    writeln!(out, "p edge {} {}", g.n, g.edges.len()).expect("string write");
    for &(i, j) in &g.edges {
        writeln!(out, "e {} {}", i + 1, j + 1).expect("string write");
    }
    out
}

/// 0/1 adjacency matrix with zero diagonal.
pub fn adjacency(g: &Graph) -> SymMatrix {
    let mut a = SymMatrix::zeros(g.n);
    for &(i, j) in &g.edges {
        a.set(i, j, 1.0);
    }
    a
}

/// Exact stability number α(G) by branch and bound (n ≤ 40).
pub fn stability_number(g: &Graph) -> Result<usize> {
    if g.n > MAX_ORACLE_VERTICES {
        return Err(Error::TooLarge {
            n: g.n,
            max: MAX_ORACLE_VERTICES,
        });
    }
    let mut adj = vec![0u64; g.n];
    for &(i, j) in &g.edges {
        adj[i] |= 1 << j;
        adj[j] |= 1 << i;
    }
    let all = (1u64 << g.n) - 1;
    let mut best = 0;
    branch(&adj, all, 0, &mut best);
    Ok(best)
}

fn branch(adj: &[u64], candidates: u64, size: usize, best: &mut usize) {
    if candidates == 0 {
        *best = (*best).max(size);
        return;
    }
    if size + candidates.count_ones() as usize <= *best {
        return;
    }
    // branch on the candidate with most neighbours among the candidates
    let mut v = 0;
    let mut v_deg = -1i64;
    let mut rest = candidates;
    while rest != 0 {
        let u = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let d = (adj[u] & candidates).count_ones() as i64;
        if d > v_deg {
            v = u;
            v_deg = d;
        }
    }
    let bit = 1u64 << v;
    if v_deg == 0 {
        // every remaining candidate is isolated: take them all
        *best = (*best).max(size + candidates.count_ones() as usize);
        return;
    }
    branch(adj, candidates & !bit & !adj[v], size + 1, best);
    branch(adj, candidates & !bit, size, best);
}
