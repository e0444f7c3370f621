//! Vertex-cover instances as robustness ground truth.
//!
//! A graph on n vertices maps to a robustness instance in n + 1 dimensions:
//! one negative point per vertex (the unit vector `e_i`), one positive point
//! per edge (ones at both endpoints and in the extra coordinate), the target
//! `e_{n+1}` asking for the negative label, and n anchor points (the zero
//! vector, labeled positive) that pin the intercept.
//!
//! The anchors are load-bearing. Without them the instance is trivial: rows
//! differ only in their coordinate sums (vertices and target sum to 1, edges
//! to 3), so `w = (c, ..., c)`, `b = -2c` classifies every clean row
//! correctly while granting the target's wish, and robustness would be 0 for
//! every graph. With any anchor left unflipped the intercept must be
//! positive, so an unflipped vertex row forces its weight negative, an
//! unflipped edge row plus the target force some endpoint weight positive,
//! and the flipped rows must therefore contain a vertex cover. Flipping all
//! n anchors instead always costs more than the minimum cover (which has at
//! most n - 1 vertices). Net: robustness equals the minimum vertex cover
//! size exactly, flipping precisely a cover's vertex rows realizes it, and
//! the instance doubles as a hardness witness for the general problem.

use rand::Rng;

use crate::dataset::{Dataset, TestTarget};
use crate::error::{Error, Result};
use crate::exact::{bnb, brute, encode, SolveStatus};
use crate::linsep::LinearClassifier;
use crate::lower::MilpParams;
use crate::seeds;

/// Undirected simple graph with 1-based vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Validate and normalize: endpoints in `[1, n]`, no self-loops, no
    /// duplicate edges; each edge stored `(min, max)`, the list sorted.
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("graph needs at least one vertex"));
        }
        let mut normalized: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for (u, v) in edges {
            if u == v {
                return Err(Error::invalid(format!("self-loop at vertex {u}")));
            }
            if u < 1 || u > n || v < 1 || v > n {
                return Err(Error::invalid(format!("edge ({u}, {v}) out of range for n = {n}")));
            }
            normalized.push((u.min(v), u.max(v)));
        }
        normalized.sort_unstable();
        let before = normalized.len();
        normalized.dedup();
        if normalized.len() != before {
            return Err(Error::invalid("duplicate edge"));
        }
        Ok(Graph { n, edges: normalized })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    fn is_cover(&self, marked: &[bool]) -> bool {
        self.edges.iter().all(|&(u, v)| marked[u - 1] || marked[v - 1])
    }
}

/// Parse "n on the first line, one `u v` pair per following line". Blank
/// lines and `#` comments are skipped.
pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let n: usize = lines
        .next()
        .ok_or_else(|| Error::invalid("empty edge list"))?
        .parse()
        .map_err(|_| Error::invalid("first line must be the vertex count"))?;
    let mut edges = Vec::new();
    for line in lines {
        let mut parts = line.split_whitespace();
        let (u, v) = (parts.next(), parts.next());
        let (Some(u), Some(v), None) = (u, v, parts.next()) else {
            return Err(Error::invalid(format!("expected 'u v', got '{line}'")));
        };
        let u = u.parse().map_err(|_| Error::invalid(format!("bad vertex '{u}'")))?;
        let v = v.parse().map_err(|_| Error::invalid(format!("bad vertex '{v}'")))?;
        edges.push((u, v));
    }
    Graph::new(n, edges)
}

/// Inverse of [`parse_edge_list`].
pub fn to_edge_list(g: &Graph) -> String {
    let mut out = format!("{}\n", g.n);
    for (u, v) in &g.edges {
        out.push_str(&format!("{u} {v}\n"));
    }
    out
}

/// Every unordered pair becomes an edge independently with probability `p`.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("edge probability must be in [0, 1]"));
    }
    let mut rng = seeds::rng(seed);
    let mut edges = Vec::new();
    for u in 1..=n {
        for v in u + 1..=n {
            if rng.gen::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, edges)
}

/// Build the robustness instance for a graph. The dataset has
/// `n + |E| + n` rows in `n + 1` dimensions: vertex rows first (in vertex
/// order), then edge rows (in sorted edge order), then the n anchor rows.
/// A cover's flip set is its vertex rows, i.e. indices `v - 1`.
pub fn reduce(g: &Graph) -> Result<(Dataset, TestTarget)> {
    let d = g.n + 1;
    let m = 2 * g.n + g.edges.len();
    let mut features = Vec::with_capacity(m * d);
    let mut labels = Vec::with_capacity(m);
    for i in 1..=g.n {
        let mut row = vec![0.0; d];
        row[i - 1] = 1.0;
        features.extend_from_slice(&row);
        labels.push(-1.0);
    }
    for &(u, v) in &g.edges {
        let mut row = vec![0.0; d];
        row[u - 1] = 1.0;
        row[v - 1] = 1.0;
        row[d - 1] = 1.0;
        features.extend_from_slice(&row);
        labels.push(1.0);
    }
    for _ in 0..g.n {
        features.extend_from_slice(&vec![0.0; d]);
        labels.push(1.0);
    }
    let data = Dataset::new(features, labels, d, None)?;
    let mut tx = vec![0.0; d];
    tx[d - 1] = 1.0;
    Ok((data, TestTarget::new(tx, -1.0)?))
}

/// Classifier consistent with the clean instance that classifies the target
/// positively (the side the adversary does not want). All margins are >= 1.
pub fn clean_witness(g: &Graph) -> LinearClassifier {
    let mut w = vec![-2.0; g.n + 1];
    w[g.n] = 4.0;
    LinearClassifier { w, b: 1.0 }
}

/// Classifier consistent with the instance after flipping the cover's
/// vertex rows, classifying the target negatively. All margins are >= 1.
pub fn cover_witness(g: &Graph, cover: &[usize]) -> LinearClassifier {
    let mut w = vec![-2.0; g.n + 1];
    for &v in cover {
        w[v - 1] = 4.0;
    }
    w[g.n] = -2.0;
    LinearClassifier { w, b: 1.0 }
}

/// Vertices the reduction is allowed to enumerate over.
pub const MAX_VERTICES: usize = 20;

/// Minimum vertex cover by subset enumeration: increasing size,
/// lexicographically smallest within a size. Returns `(size, cover)` with
/// 1-based sorted vertices.
pub fn min_vertex_cover(g: &Graph) -> Result<(usize, Vec<usize>)> {
    if g.n > MAX_VERTICES {
        return Err(Error::TooLarge(format!(
            "vertex-cover enumeration handles at most {MAX_VERTICES} vertices, got {}",
            g.n
        )));
    }
    use itertools::Itertools;
    for size in 0..=g.n {
        for subset in (1..=g.n).combinations(size) {
            let mut marked = vec![false; g.n];
            for &v in &subset {
                marked[v - 1] = true;
            }
            if g.is_cover(&marked) {
                return Ok((size, subset));
            }
        }
    }
    unreachable!("the full vertex set always covers");
}

/// Which robustness solver to check the reduction against.
#[derive(Debug, Clone)]
pub enum SolverChoice {
    BranchAndBound(MilpParams),
    BruteForce { eps: f64, cap: f64 },
}

/// Does the chosen solver's robustness equal the graph's minimum cover?
pub fn verify_reduction(g: &Graph, solver: &SolverChoice) -> Result<bool> {
    let (cover_size, _) = min_vertex_cover(g)?;
    let (data, target) = reduce(g)?;
    let (robustness, proven) = match solver {
        SolverChoice::BranchAndBound(params) => {
            let inst = encode(&data, &target, params.big_m, params.eps)?;
            let r = bnb::solve_bnb(&inst, params.node_budget, params.incumbent_hint)?;
            (r.robustness, r.status == SolveStatus::Proven)
        }
        SolverChoice::BruteForce { eps, cap } => {
            let r = brute::brute_force(&data, &target, *eps, *cap)?;
            (r.robustness, true)
        }
    };
    Ok(proven && robustness == cover_size)
}
