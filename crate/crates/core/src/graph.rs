//! Graph instances and Ising couplings.
//!
//! Graph weights map to couplings as `J_ij = -w_ij`, so low Ising energy
//! corresponds to a large cut. The coupling matrix is stored in compressed
//! sparse rows; G-set instances go up to 7000 nodes, where a dense `n x n`
//! matrix would dominate memory for no benefit.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One undirected weighted edge, 0-based endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// Summary of the weight values present in a graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightType {
    PlusOne,
    PmOne,
    MinusOne,
    Mixed,
}

impl WeightType {
    /// Infers the weight type from a set of weights. An empty edge list is
    /// reported as `PlusOne`.
    pub fn infer<I: IntoIterator<Item = f64>>(weights: I) -> Self {
        let (mut plus, mut minus, mut other) = (false, false, false);
        for w in weights {
            if w == 1.0 {
                plus = true;
            } else if w == -1.0 {
                minus = true;
            } else {
                other = true;
            }
        }
        match (plus, minus, other) {
            (_, _, true) => WeightType::Mixed,
            (true, true, false) => WeightType::PmOne,
            (false, true, false) => WeightType::MinusOne,
            _ => WeightType::PlusOne,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            WeightType::PlusOne => "plus_one",
            WeightType::PmOne => "pm_one",
            WeightType::MinusOne => "minus_one",
            WeightType::Mixed => "mixed",
        }
    }
}

impl fmt::Display for WeightType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An undirected weighted graph without self-loops or parallel edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n_nodes: usize,
    edges: Vec<Edge>,
    name: String,
    weight_type: WeightType,
}

impl Graph {
    pub fn new(name: impl Into<String>, n_nodes: usize, edges: Vec<Edge>) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::InvalidGraph("graph must have at least one node".into()));
        }
        let mut seen = HashSet::with_capacity(edges.len());
        for e in &edges {
            check_edge(n_nodes, e, &mut seen).map_err(Error::InvalidGraph)?;
        }
        let weight_type = WeightType::infer(edges.iter().map(|e| e.w));
        Ok(Graph {
            n_nodes,
            edges,
            name: name.into(),
            weight_type,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn weight_type(&self) -> WeightType {
        self.weight_type
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Multiplies every weight by `gamma`.
    pub fn scaled(&self, gamma: f64) -> Graph {
        let edges: Vec<Edge> = self
            .edges
            .iter()
            .map(|e| Edge { w: e.w * gamma, ..*e })
            .collect();
        Graph {
            n_nodes: self.n_nodes,
            weight_type: WeightType::infer(edges.iter().map(|e| e.w)),
            edges,
            name: self.name.clone(),
        }
    }

    /// Serializes in G-set text format (header `N M`, 1-based edge lines).
    pub fn to_gset_string(&self) -> String {
        let mut out = format!("{} {}\n", self.n_nodes, self.edges.len());
        for e in &self.edges {
            out.push_str(&format!("{} {} {}\n", e.i + 1, e.j + 1, format_weight(e.w)));
        }
        out
    }
}

fn format_weight(w: f64) -> String {
    if w.fract() == 0.0 && w.abs() < 1e15 {
        format!("{}", w as i64)
    } else {
        format!("{w}")
    }
}

fn check_edge(
    n: usize,
    e: &Edge,
    seen: &mut HashSet<(usize, usize)>,
) -> std::result::Result<(), String> {
    if e.i >= n || e.j >= n {
        return Err(format!(
            "edge ({}, {}) references a node outside 0..{}",
            e.i, e.j, n
        ));
    }
    if e.i == e.j {
        return Err(format!("self-loop on node {}", e.i));
    }
    if !e.w.is_finite() {
        return Err(format!("non-finite weight on edge ({}, {})", e.i, e.j));
    }
    if !seen.insert((e.i.min(e.j), e.i.max(e.j))) {
        return Err(format!("duplicate edge ({}, {})", e.i, e.j));
    }
    Ok(())
}

/// Parses a G-set instance: a header line `N M` followed by `M` lines
/// `i j w` with 1-based node indices. Blank lines are ignored.
pub fn parse_gset(text: &str) -> Result<Graph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (header_line, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "missing header line \"N M\"".into(),
    })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let malformed_header = || Error::Parse {
        line: header_line,
        message: format!("malformed header {header:?}, expected \"N M\""),
    };
    if fields.len() != 2 {
        return Err(malformed_header());
    }
    let n: usize = fields[0].parse().map_err(|_| malformed_header())?;
    let m: usize = fields[1].parse().map_err(|_| malformed_header())?;
    if n == 0 {
        return Err(Error::Parse {
            line: header_line,
            message: "node count must be positive".into(),
        });
    }

    let mut edges = Vec::with_capacity(m);
    let mut seen = HashSet::with_capacity(m);
    for (line, body) in lines {
        if edges.len() == m {
            return Err(Error::Parse {
                line,
                message: format!("edge-count mismatch: header declares {m} edges, found more"),
            });
        }
        let parts: Vec<&str> = body.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected \"i j w\", got {body:?}"),
            });
        }
        let index = |s: &str| -> Result<usize> {
            let v: usize = s.parse().map_err(|_| Error::Parse {
                line,
                message: format!("bad node index {s:?}"),
            })?;
            if v == 0 || v > n {
                return Err(Error::Parse {
                    line,
                    message: format!("node index {v} out of range [1, {n}]"),
                });
            }
            Ok(v - 1)
        };
        let i = index(parts[0])?;
        let j = index(parts[1])?;
        let w: f64 = parts[2].parse().map_err(|_| Error::Parse {
            line,
            message: format!("bad weight {:?}", parts[2]),
        })?;
        let edge = Edge { i, j, w };
        check_edge(n, &edge, &mut seen).map_err(|message| Error::Parse { line, message })?;
        edges.push(edge);
    }
    if edges.len() != m {
        return Err(Error::Parse {
            line: text.lines().count().max(1),
            message: format!(
                "edge-count mismatch: header declares {m} edges, found {}",
                edges.len()
            ),
        });
    }
    Graph::new("unnamed", n, edges)
}

/// Reads a G-set file; the graph is named after the file stem.
pub fn load_gset(path: &Path) -> Result<Graph> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "unnamed".into());
    Ok(parse_gset(&text)?.with_name(name))
}

/// The illustrative instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ToyKind {
    /// Antiferromagnetic ring C4, w = +1.
    Toy1,
    /// Ferromagnetic complete graph K4, w = -1.
    Toy2,
    /// Two antiferromagnetic triangles joined by a bridge, w = +1.
    Toy3,
    /// Antiferromagnetic ring C8, w = +1.
    Toy4,
    /// Ferromagnetic open 4x4 lattice, w = -1.
    Toy5,
    /// Erdos-Renyi, 32 nodes, mean degree about 6, w = +-1.
    Toy6,
    /// Erdos-Renyi, 64 nodes, mean degree about 6, w = +-1.
    Toy7,
}

impl ToyKind {
    pub const ALL: [ToyKind; 7] = [
        ToyKind::Toy1,
        ToyKind::Toy2,
        ToyKind::Toy3,
        ToyKind::Toy4,
        ToyKind::Toy5,
        ToyKind::Toy6,
        ToyKind::Toy7,
    ];

    pub fn index(self) -> usize {
        self as usize + 1
    }

    pub fn name(self) -> String {
        format!("Toy-{}", self.index())
    }

    pub fn is_random(self) -> bool {
        matches!(self, ToyKind::Toy6 | ToyKind::Toy7)
    }
}

impl FromStr for ToyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        let digits = lower
            .trim_start_matches("toy")
            .trim_start_matches(['-', '_']);
        match digits {
            "1" => Ok(ToyKind::Toy1),
            "2" => Ok(ToyKind::Toy2),
            "3" => Ok(ToyKind::Toy3),
            "4" => Ok(ToyKind::Toy4),
            "5" => Ok(ToyKind::Toy5),
            "6" => Ok(ToyKind::Toy6),
            "7" => Ok(ToyKind::Toy7),
            _ => Err(Error::InvalidParameter(format!(
                "unknown toy graph {s:?} (expected toy1..toy7)"
            ))),
        }
    }
}

const ER_MEAN_DEGREE: f64 = 6.0;
const ER_COUNT_TOLERANCE: f64 = 0.15;

/// Builds one of the illustrative graphs. Only the Erdos-Renyi kinds use
/// `seed`; they are deterministic given it.
pub fn generate_toy(kind: ToyKind, seed: u64) -> Graph {
    let e = |i: usize, j: usize, w: f64| Edge { i, j, w };
    let (n, edges) = match kind {
        ToyKind::Toy1 => (4, ring(4, 1.0)),
        ToyKind::Toy2 => {
            let mut edges = Vec::new();
            for i in 0..4 {
                for j in i + 1..4 {
                    edges.push(e(i, j, -1.0));
                }
            }
            (4, edges)
        }
        ToyKind::Toy3 => (
            6,
            vec![
                e(0, 1, 1.0),
                e(1, 2, 1.0),
                e(0, 2, 1.0),
                e(3, 4, 1.0),
                e(4, 5, 1.0),
                e(3, 5, 1.0),
                e(2, 3, 1.0),
            ],
        ),
        ToyKind::Toy4 => (8, ring(8, 1.0)),
        ToyKind::Toy5 => {
            let side = 4;
            let mut edges = Vec::new();
            for r in 0..side {
                for c in 0..side {
                    let k = r * side + c;
                    if c + 1 < side {
                        edges.push(e(k, k + 1, -1.0));
                    }
                    if r + 1 < side {
                        edges.push(e(k, k + side, -1.0));
                    }
                }
            }
            (16, edges)
        }
        ToyKind::Toy6 => (32, erdos_renyi(32, 100, seed)),
        ToyKind::Toy7 => (64, erdos_renyi(64, 200, seed)),
    };
    Graph::new(kind.name(), n, edges).expect("toy graphs are valid by construction")
}

fn ring(n: usize, w: f64) -> Vec<Edge> {
    (0..n)
        .map(|i| {
            let j = (i + 1) % n;
            Edge {
                i: i.min(j),
                j: i.max(j),
                w,
            }
        })
        .collect()
}

/// G(n, k/(n-1)) with equiprobable +-1 weights, redrawn until the edge count
/// lies within 15% of `target_edges`.
fn erdos_renyi(n: usize, target_edges: usize, seed: u64) -> Vec<Edge> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = ER_MEAN_DEGREE / (n - 1) as f64;
    let slack = ER_COUNT_TOLERANCE * target_edges as f64;
    loop {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < p {
                    let w = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    edges.push(Edge { i, j, w });
                }
            }
        }
        if (edges.len() as f64 - target_edges as f64).abs() <= slack {
            return edges;
        }
    }
}

/// Symmetric, zero-diagonal Ising couplings with the graph-derived scalars
/// used by both the simulator and the theory.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    s_j: f64,
    sigma_h_sq: f64,
}

impl CouplingMatrix {
    fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; n + 1];
        for &(i, _, _) in &triplets {
            row_ptr[i + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let cols = triplets.iter().map(|t| t.1).collect();
        let vals = triplets.iter().map(|t| t.2).collect();
        let mut m = CouplingMatrix {
            n,
            row_ptr,
            cols,
            vals,
            s_j: 0.0,
            sigma_h_sq: 0.0,
        };
        m.s_j = field_scale(&m).unwrap_or(0.0);
        m.sigma_h_sq = local_field_variance(&m);
        m
    }

    /// Builds couplings from a dense matrix, which must be square, symmetric
    /// and zero on the diagonal. Exact zeros are not stored.
    pub fn from_dense(j: &DMatrix<f64>) -> Result<Self> {
        let n = j.nrows();
        if j.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: j.ncols(),
            });
        }
        if n == 0 {
            return Err(Error::InvalidGraph("empty coupling matrix".into()));
        }
        let mut triplets = Vec::new();
        for r in 0..n {
            if j[(r, r)] != 0.0 {
                return Err(Error::InvalidGraph(format!("nonzero diagonal at {r}")));
            }
            for c in 0..n {
                if j[(r, c)] != j[(c, r)] {
                    return Err(Error::InvalidGraph(format!("asymmetric entry ({r}, {c})")));
                }
                if j[(r, c)] != 0.0 {
                    triplets.push((r, c, j[(r, c)]));
                }
            }
        }
        Ok(Self::from_triplets(n, triplets))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored (nonzero) entries, counting both triangles.
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Nonzero entries of row `i` as `(column, value)`, columns ascending.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[span.clone()].binary_search(&j) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => 0.0,
        }
    }

    /// `out = J x`.
    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            *o = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    /// `sum_j J_ij s_j` for a spin configuration.
    pub fn local_field(&self, i: usize, spins: &[i8]) -> f64 {
        self.row(i).map(|(j, v)| v * f64::from(spins[j])).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                d[(i, j)] = v;
            }
        }
        d
    }

    /// Maximum absolute row sum; an upper bound on the spectral norm.
    pub fn norm_bound(&self) -> f64 {
        (0..self.n)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Field-scale normalizer `s_J` (0 for degenerate instances).
    pub fn s_j(&self) -> f64 {
        self.s_j
    }

    /// Local-field variance `(1/n) sum_ij J_ij^2`.
    pub fn sigma_h_sq(&self) -> f64 {
        self.sigma_h_sq
    }

    /// Inverse-temperature endpoints `(0.1 / s_J, 10 / s_J)`.
    pub fn i0_range(&self) -> Result<(f64, f64)> {
        if self.s_j > 0.0 {
            Ok((0.1 / self.s_j, 10.0 / self.s_j))
        } else {
            Err(Error::Degenerate(
                "field scale s_J is zero; inverse-temperature range undefined".into(),
            ))
        }
    }

    pub fn i0_min(&self) -> Result<f64> {
        self.i0_range().map(|r| r.0)
    }

    pub fn i0_max(&self) -> Result<f64> {
        self.i0_range().map(|r| r.1)
    }
}

/// Couplings `J_ij = -w_ij` for every edge, zero elsewhere.
pub fn build_couplings(g: &Graph) -> CouplingMatrix {
    let mut triplets = Vec::with_capacity(2 * g.edges.len());
    for e in &g.edges {
        triplets.push((e.i, e.j, -e.w));
        triplets.push((e.j, e.i, -e.w));
    }
    CouplingMatrix::from_triplets(g.n_nodes, triplets)
}

/// `s_J = (1/N) sum_i sqrt((N-1) Var_j(J_ij))`, where the population variance
/// of row `i` runs over all `N` entries including the zero diagonal.
pub fn field_scale(j: &CouplingMatrix) -> Result<f64> {
    let n = j.n();
    if n < 2 {
        return Err(Error::Degenerate(format!(
            "field scale needs at least 2 nodes, got {n}"
        )));
    }
    let nf = n as f64;
    let total: f64 = (0..n)
        .map(|i| {
            let (sum, sum_sq) = j
                .row(i)
                .fold((0.0, 0.0), |(s, q), (_, v)| (s + v, q + v * v));
            let mean = sum / nf;
            let var = (sum_sq / nf - mean * mean).max(0.0);
            ((nf - 1.0) * var).sqrt()
        })
        .sum();
    Ok(total / nf)
}

/// `sigma_h^2 = (1/N) sum_i sum_j J_ij^2`.
pub fn local_field_variance(j: &CouplingMatrix) -> f64 {
    j.vals.iter().map(|v| v * v).sum::<f64>() / j.n() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn couplings(kind: ToyKind) -> CouplingMatrix {
        build_couplings(&generate_toy(kind, 7))
    }

    #[test]
    fn parses_minimal_instance() {
        let g = parse_gset("2 1\n1 2 1\n").unwrap();
        assert_eq!(g.n_nodes(), 2);
        assert_eq!(g.edges(), &[Edge { i: 0, j: 1, w: 1.0 }]);
    }

    #[test]
    fn parses_c4_ring() {
        let g = parse_gset("4 4\n1 2 1\n2 3 1\n3 4 1\n4 1 1").unwrap();
        assert_eq!(g.edges().len(), 4);
        assert_eq!(g.weight_type(), WeightType::PlusOne);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("4\n1 2 1", 1, "malformed header"),
            ("2 1\n1 3 1", 2, "out of range"),
            ("2 1\n0 2 1", 2, "out of range"),
            ("3 2\n1 2 1\n2 2 1", 3, "self-loop"),
            ("3 2\n1 2 1\n2 1 -1", 3, "duplicate"),
            ("3 2\n1 2 1", 2, "mismatch"),
            ("3 1\n1 2 1\n2 3 1", 3, "mismatch"),
            ("3 1\n1 2 x", 2, "bad weight"),
        ];
        for (text, want_line, want_msg) in cases {
            match parse_gset(text) {
                Err(Error::Parse { line, message }) => {
                    assert_eq!(line, want_line, "{text:?}: {message}");
                    assert!(message.contains(want_msg), "{text:?}: {message}");
                }
                other => panic!("{text:?}: expected parse error, got {other:?}"),
            }
        }
    }

    #[test]
    fn weight_type_inference() {
        assert_eq!(WeightType::infer([1.0, 1.0]), WeightType::PlusOne);
        assert_eq!(WeightType::infer([1.0, -1.0]), WeightType::PmOne);
        assert_eq!(WeightType::infer([-1.0]), WeightType::MinusOne);
        assert_eq!(WeightType::infer([1.0, 2.5]), WeightType::Mixed);
    }

    #[test]
    fn toy_graph_sizes() {
        let expect = [
            (ToyKind::Toy1, 4, 4, WeightType::PlusOne),
            (ToyKind::Toy2, 4, 6, WeightType::MinusOne),
            (ToyKind::Toy3, 6, 7, WeightType::PlusOne),
            (ToyKind::Toy4, 8, 8, WeightType::PlusOne),
            (ToyKind::Toy5, 16, 24, WeightType::MinusOne),
        ];
        for (kind, n, m, wt) in expect {
            let g = generate_toy(kind, 0);
            assert_eq!((g.n_nodes(), g.edges().len(), g.weight_type()), (n, m, wt));
        }
    }

    #[test]
    fn er_toys_are_seeded_and_within_band() {
        for (kind, n, target) in [(ToyKind::Toy6, 32, 100.0), (ToyKind::Toy7, 64, 200.0)] {
            let a = generate_toy(kind, 11);
            let b = generate_toy(kind, 11);
            assert_eq!(a, b);
            assert_eq!(a.n_nodes(), n);
            let m = a.edges().len() as f64;
            assert!((m - target).abs() <= 0.15 * target, "{kind:?}: {m} edges");
            assert!(a.edges().iter().all(|e| e.w == 1.0 || e.w == -1.0));
        }
        assert_ne!(generate_toy(ToyKind::Toy7, 1), generate_toy(ToyKind::Toy7, 2));
    }

    #[test]
    fn coupling_sign_convention() {
        let g = Graph::new("t", 3, vec![Edge { i: 0, j: 1, w: 1.0 }, Edge { i: 1, j: 2, w: -1.0 }])
            .unwrap();
        let j = build_couplings(&g);
        assert_eq!(j.get(0, 1), -1.0);
        assert_eq!(j.get(1, 0), -1.0);
        assert_eq!(j.get(1, 2), 1.0);
        assert_eq!(j.get(0, 2), 0.0);
    }

    #[test]
    fn empty_graph_has_zero_couplings() {
        let g = Graph::new("empty", 5, vec![]).unwrap();
        let j = build_couplings(&g);
        assert_eq!(j.nnz(), 0);
        assert_eq!(j.sigma_h_sq(), 0.0);
        assert_eq!(field_scale(&j).unwrap(), 0.0);
        assert!(matches!(j.i0_range(), Err(Error::Degenerate(_))));
    }

    #[test]
    fn field_scale_toy1_toy2() {
        let s1 = field_scale(&couplings(ToyKind::Toy1)).unwrap();
        assert!((s1 - 3f64.sqrt() / 2.0).abs() < 1e-15);
        let s2 = field_scale(&couplings(ToyKind::Toy2)).unwrap();
        assert!((s2 - 0.75).abs() < 1e-15);
        assert!((couplings(ToyKind::Toy1).i0_max().unwrap() - 11.547005383792516).abs() < 1e-12);
        assert!((couplings(ToyKind::Toy2).i0_max().unwrap() - 13.333333333333334).abs() < 1e-12);
    }

    #[test]
    fn field_scale_rejects_single_node() {
        let g = Graph::new("one", 1, vec![]).unwrap();
        assert!(matches!(field_scale(&build_couplings(&g)), Err(Error::Degenerate(_))));
    }

    #[test]
    fn local_field_variance_by_direct_summation() {
        for kind in [ToyKind::Toy1, ToyKind::Toy2, ToyKind::Toy5] {
            let j = couplings(kind);
            let d = j.to_dense();
            let direct: f64 = d.iter().map(|v| v * v).sum::<f64>() / j.n() as f64;
            assert_eq!(local_field_variance(&j), direct);
        }
        assert_eq!(local_field_variance(&couplings(ToyKind::Toy1)), 2.0);
        assert_eq!(local_field_variance(&couplings(ToyKind::Toy2)), 3.0);
    }

    #[test]
    fn dense_round_trip_and_validation() {
        let j = couplings(ToyKind::Toy3);
        let back = CouplingMatrix::from_dense(&j.to_dense()).unwrap();
        assert_eq!(back, j);
        let mut bad = j.to_dense();
        bad[(0, 1)] = 5.0;
        assert!(CouplingMatrix::from_dense(&bad).is_err());
        let mut diag = j.to_dense();
        diag[(2, 2)] = 1.0;
        assert!(CouplingMatrix::from_dense(&diag).is_err());
    }

    #[test]
    fn toy_kind_parsing() {
        assert_eq!("toy3".parse::<ToyKind>().unwrap(), ToyKind::Toy3);
        assert_eq!("Toy-7".parse::<ToyKind>().unwrap(), ToyKind::Toy7);
        assert!("toy9".parse::<ToyKind>().is_err());
    }
}
