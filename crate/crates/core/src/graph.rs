//! Max-Cut problem instances.
//!
//! The cost of a bit string `s` on a weighted graph is
//! `C(s) = sum_{(i,j) in E} w_ij (-1)^(s_i + s_j)`, i.e. the eigenvalue of
//! `sum w_ij Z_i Z_j` on the computational basis state `|s>`. Minimizing it is
//! Max-Cut. Throughout the crate vertex `v` is bit `v` of a basis-state index
//! (vertex 0 is the least significant bit).

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::seed::rng_from_seed;

/// Retry budget of the pairing model, per instance.
pub const PAIRING_RETRY_BUDGET: usize = 10_000;

/// Default cap on exhaustive enumeration of bit strings.
pub const DEFAULT_ENUMERATION_CAP: usize = 24;

/// Largest vertex count accepted by [`enumerate_cubic_graphs`].
pub const CUBIC_ENUMERATION_CAP: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GraphFamily {
    /// Unit-weight 3-regular graphs.
    #[serde(rename = "regular3")]
    Regular3Unit,
    /// Complete graphs with i.i.d. uniform weights on (0, 1].
    #[serde(rename = "complete")]
    CompleteUniform,
    #[serde(rename = "explicit")]
    Explicit,
}

impl GraphFamily {
    pub fn tag(self) -> &'static str {
        match self {
            GraphFamily::Regular3Unit => "regular3",
            GraphFamily::CompleteUniform => "complete",
            GraphFamily::Explicit => "explicit",
        }
    }
}

impl fmt::Display for GraphFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for GraphFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regular3" => Ok(GraphFamily::Regular3Unit),
            "complete" => Ok(GraphFamily::CompleteUniform),
            "explicit" => Ok(GraphFamily::Explicit),
            other => Err(invalid(format!("unknown graph family '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// A weighted undirected simple graph.
///
/// Edges are stored with `i < j`, sorted, without duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    family: GraphFamily,
}

impl Graph {
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>, family: GraphFamily) -> Result<Self> {
        if n == 0 {
            return Err(invalid("graph needs at least one vertex"));
        }
        let mut norm = Vec::with_capacity(edges.len());
        for (a, b, w) in edges {
            if a >= n || b >= n {
                return Err(invalid(format!("edge ({a},{b}) out of range for n={n}")));
            }
            if a == b {
                return Err(invalid(format!("self-loop at vertex {a}")));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(invalid(format!("edge ({a},{b}) has non-positive weight {w}")));
            }
            norm.push(Edge { i: a.min(b), j: a.max(b), w });
        }
        norm.sort_by_key(|e| (e.i, e.j));
        if norm.windows(2).any(|p| (p[0].i, p[0].j) == (p[1].i, p[1].j)) {
            return Err(invalid("duplicate edge"));
        }
        let g = Graph { n, edges: norm, family };
        g.check_family()?;
        Ok(g)
    }

    fn check_family(&self) -> Result<()> {
        match self.family {
            GraphFamily::Regular3Unit => {
                if self.edges.iter().any(|e| e.w != 1.0) {
                    return Err(invalid("regular3 graphs must have unit weights"));
                }
                if (0..self.n).any(|v| self.degree(v) != 3) {
                    return Err(invalid("regular3 graphs must have every degree equal to 3"));
                }
            }
            GraphFamily::CompleteUniform => {
                if self.edges.len() != self.n * (self.n - 1) / 2 {
                    return Err(invalid("complete graphs must contain every edge"));
                }
            }
            GraphFamily::Explicit => {}
        }
        Ok(())
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn family(&self) -> GraphFamily {
        self.family
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.i == v || e.j == v).count()
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    pub fn has_unit_weights(&self) -> bool {
        self.edges.iter().all(|e| e.w == 1.0)
    }

    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|e| {
                if e.i == v {
                    Some(e.j)
                } else if e.j == v {
                    Some(e.i)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        let adj = self.adjacency();
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub(crate) fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.i].push(e.j);
            adj[e.j].push(e.i);
        }
        adj
    }

    /// Cost of the basis state with index `idx` (vertex `v` is bit `v`).
    pub fn cost_of_index(&self, idx: usize) -> f64 {
        self.edges
            .iter()
            .map(|e| {
                if ((idx >> e.i) ^ (idx >> e.j)) & 1 == 0 {
                    e.w
                } else {
                    -e.w
                }
            })
            .sum()
    }

    /// Costs of all `2^N` basis states, indexed like a state vector.
    pub fn cost_table(&self) -> Vec<f64> {
        (0..1usize << self.n).map(|k| self.cost_of_index(k)).collect()
    }
}

/// Computational basis state, one bit per vertex.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString(Vec<u8>);

impl BitString {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(invalid("bits must be 0 or 1"));
        }
        Ok(BitString(bits))
    }

    pub fn zeros(n: usize) -> Self {
        BitString(vec![0; n])
    }

    pub fn from_index(idx: usize, n: usize) -> Self {
        BitString((0..n).map(|v| ((idx >> v) & 1) as u8).collect())
    }

    pub fn to_index(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .fold(0, |acc, (v, &b)| acc | (usize::from(b) << v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bit(&self, v: usize) -> u8 {
        self.0[v]
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn complement(&self) -> Self {
        BitString(self.0.iter().map(|b| 1 - b).collect())
    }
}

/// Character `k` is the bit of vertex `k`.
impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            f.write_str(if *b == 0 { "0" } else { "1" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::Parse(format!("invalid bit character '{other}'"))),
            })
            .collect::<Result<Vec<u8>>>()
            .map(BitString)
    }
}

pub fn bitstring_cost(g: &Graph, s: &BitString) -> Result<f64> {
    if s.len() != g.n_vertices() {
        return Err(invalid(format!(
            "bit string of length {} for a graph with {} vertices",
            s.len(),
            g.n_vertices()
        )));
    }
    Ok(g
        .edges()
        .iter()
        .map(|e| if s.bit(e.i) == s.bit(e.j) { e.w } else { -e.w })
        .sum())
}

#[derive(Debug, Clone)]
pub struct BruteForceResult {
    pub c_min: f64,
    pub c_max: f64,
    pub minimizers: Vec<BitString>,
}

impl BruteForceResult {
    pub fn n_s(&self) -> usize {
        self.minimizers.len()
    }
}

pub fn brute_force_solve(g: &Graph) -> Result<BruteForceResult> {
    brute_force_solve_capped(g, DEFAULT_ENUMERATION_CAP)
}

pub fn brute_force_solve_capped(g: &Graph, cap: usize) -> Result<BruteForceResult> {
    let n = g.n_vertices();
    if n > cap {
        return Err(Error::ResourceLimit(format!(
            "brute force over 2^{n} bit strings exceeds the cap 2^{cap}"
        )));
    }
    let costs = g.cost_table();
    let c_min = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let c_max = costs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // Sums of the same terms in the same order; ties are exact for a string and
    // its complement, the slack only guards accidental degeneracies.
    let tol = 1e-12 * (1.0 + g.total_weight());
    let minimizers = costs
        .iter()
        .enumerate()
        .filter(|(_, &c)| c <= c_min + tol)
        .map(|(k, _)| BitString::from_index(k, n))
        .collect();
    Ok(BruteForceResult { c_min, c_max, minimizers })
}

/// Random simple `d`-regular graph on `n` vertices from the pairing model.
///
/// Stubs are shuffled and paired consecutively; any self-loop or multi-edge
/// rejects the whole pairing. Connectivity is not required.
pub fn gen_random_regular(n: usize, d: usize, seed: u64) -> Result<Graph> {
    if n == 0 || d == 0 {
        return Err(invalid("n and d must be positive"));
    }
    if (n * d) % 2 == 1 {
        return Err(invalid(format!("n*d must be even (n={n}, d={d})")));
    }
    if d >= n {
        return Err(invalid(format!("degree {d} must be below n={n}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    'attempt: for _ in 0..PAIRING_RETRY_BUDGET {
        stubs.shuffle(&mut rng);
        let mut seen = BTreeSet::new();
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if a == b || !seen.insert((a, b)) {
                continue 'attempt;
            }
        }
        let family = if d == 3 { GraphFamily::Regular3Unit } else { GraphFamily::Explicit };
        let edges = seen.into_iter().map(|(a, b)| (a, b, 1.0)).collect();
        return Graph::new(n, edges, family);
    }
    Err(Error::GenerationFailure { seed, attempts: PAIRING_RETRY_BUDGET })
}

/// Complete graph with i.i.d. weights uniform on (0, 1].
pub fn gen_random_complete(n: usize, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(invalid("complete graphs need n >= 2"));
    }
    let mut rng = rng_from_seed(seed);
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let u: f64 = rng.random();
            edges.push((i, j, 1.0 - u));
        }
    }
    Graph::new(n, edges, GraphFamily::CompleteUniform)
}

/// One representative per isomorphism class of connected simple 3-regular
/// graphs on `n` vertices, sorted by canonical code.
pub fn enumerate_cubic_graphs(n: usize) -> Result<Vec<Graph>> {
    if n % 2 == 1 {
        return Err(invalid(format!("cubic graphs need an even vertex count, got {n}")));
    }
    if n > CUBIC_ENUMERATION_CAP {
        return Err(Error::ResourceLimit(format!(
            "cubic graph enumeration is capped at n={CUBIC_ENUMERATION_CAP}"
        )));
    }
    if n < 4 {
        return Ok(Vec::new());
    }
    let mut search = BfsSearch { n, adj: vec![Vec::new(); n], codes: BTreeSet::new() };
    search.extend(0, 1);
    search
        .codes
        .into_iter()
        .map(|code| {
            let edges = code.into_iter().map(|(a, b)| (a as usize, b as usize, 1.0)).collect();
            Graph::new(n, edges, GraphFamily::Regular3Unit)
        })
        .collect()
}

type Code = Vec<(u8, u8)>;

/// Enumerates cubic graphs labeled in breadth-first order from vertex 0.
///
/// Every connected cubic graph has such a labeling, so collecting canonical
/// codes over the search yields every isomorphism class exactly once.
struct BfsSearch {
    n: usize,
    adj: Vec<Vec<usize>>,
    codes: BTreeSet<Code>,
}

impl BfsSearch {
    /// Processes vertex `v`; labels `0..next` are discovered.
    fn extend(&mut self, v: usize, next: usize) {
        if v == self.n {
            if next == self.n && self.adj.iter().all(|a| a.len() == 3) {
                let code = canonical_code_adj(&self.adj);
                self.codes.insert(code);
            }
            return;
        }
        if v >= next {
            return;
        }
        let need = 3 - self.adj[v].len();
        let candidates: Vec<usize> = (v + 1..next)
            .filter(|&u| self.adj[u].len() < 3 && !self.adj[v].contains(&u))
            .collect();
        if need > candidates.len() + (self.n - next) {
            return;
        }
        // j edges into already discovered vertices, the rest to fresh labels.
        for j in 0..=need.min(candidates.len()) {
            let fresh = need - j;
            if next + fresh > self.n {
                continue;
            }
            for subset in subsets(&candidates, j) {
                for &u in &subset {
                    self.adj[v].push(u);
                    self.adj[u].push(v);
                }
                for u in next..next + fresh {
                    self.adj[v].push(u);
                    self.adj[u].push(v);
                }
                self.extend(v + 1, next + fresh);
                for u in next..next + fresh {
                    self.adj[v].pop();
                    self.adj[u].pop();
                }
                for &u in subset.iter().rev() {
                    self.adj[v].pop();
                    self.adj[u].pop();
                }
            }
        }
    }
}

fn subsets(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    fn rec(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for idx in start..items.len() {
            cur.push(items[idx]);
            rec(items, k, idx + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(items, k, 0, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Canonical code of a connected graph: the lexicographically smallest sorted
/// edge list over all breadth-first labelings (every root, every order of
/// newly discovered neighbours). The set of such labelings depends only on the
/// graph's structure, so isomorphic graphs share the code.
pub fn canonical_code(g: &Graph) -> Result<Vec<(usize, usize)>> {
    if !g.is_connected() {
        return Err(invalid("canonical code requires a connected graph"));
    }
    if g.n_vertices() > u8::MAX as usize {
        return Err(Error::ResourceLimit("canonical code supports at most 255 vertices".into()));
    }
    Ok(canonical_code_adj(&g.adjacency())
        .into_iter()
        .map(|(a, b)| (a as usize, b as usize))
        .collect())
}

fn canonical_code_adj(adj: &[Vec<usize>]) -> Code {
    let n = adj.len();
    let mut best: Option<Code> = None;
    for root in 0..n {
        let mut labels = vec![usize::MAX; n];
        let mut order = Vec::with_capacity(n);
        labels[root] = 0;
        order.push(root);
        bfs_labelings(adj, &mut labels, &mut order, 0, &mut best);
    }
    best.unwrap_or_default()
}

fn bfs_labelings(
    adj: &[Vec<usize>],
    labels: &mut [usize],
    order: &mut Vec<usize>,
    head: usize,
    best: &mut Option<Code>,
) {
    if head == order.len() {
        let mut code: Code = Vec::new();
        for (v, nbrs) in adj.iter().enumerate() {
            for &u in nbrs {
                let (a, b) = (labels[v], labels[u]);
                if a < b {
                    code.push((a as u8, b as u8));
                }
            }
        }
        code.sort_unstable();
        if best.as_ref().is_none_or(|b| code < *b) {
            *best = Some(code);
        }
        return;
    }
    let v = order[head];
    let fresh: Vec<usize> = adj[v].iter().copied().filter(|&u| labels[u] == usize::MAX).collect();
    for perm in permutations(&fresh) {
        for &u in &perm {
            labels[u] = order.len();
            order.push(u);
        }
        bfs_labelings(adj, labels, order, head + 1, best);
        for &u in &perm {
            labels[u] = usize::MAX;
            order.pop();
        }
    }
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for k in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(k);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// Serialized graph, one per line in `.jsonl` ensemble files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphRecord {
    pub id: String,
    pub n: usize,
    pub family: GraphFamily,
    pub seed: u64,
    pub edges: Vec<(usize, usize, f64)>,
}

impl GraphRecord {
    pub fn from_graph(id: impl Into<String>, seed: u64, g: &Graph) -> Self {
        GraphRecord {
            id: id.into(),
            n: g.n_vertices(),
            family: g.family(),
            seed,
            edges: g.edges().iter().map(|e| (e.i, e.j, e.w)).collect(),
        }
    }

    pub fn to_graph(&self) -> Result<Graph> {
        Graph::new(self.n, self.edges.clone(), self.family)
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("graph records always serialize")
    }
}

/// Parses a graph ensemble. Blank lines and `{"meta": ...}` header lines are
/// skipped; every record is validated as a graph.
pub fn parse_graph_jsonl(text: &str) -> Result<Vec<GraphRecord>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || crate::is_meta_line(line) {
            continue;
        }
        let rec: GraphRecord = serde_json::from_str(line)
            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        rec.to_graph()
            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Graph {
        Graph::new(3, vec![(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)], GraphFamily::Explicit).unwrap()
    }

    fn four_cycle() -> Graph {
        Graph::new(4, vec![(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 3, 1.0)], GraphFamily::Explicit)
            .unwrap()
    }

    #[test]
    fn rejects_malformed_edges() {
        assert!(Graph::new(3, vec![(0, 0, 1.0)], GraphFamily::Explicit).is_err());
        assert!(Graph::new(3, vec![(0, 3, 1.0)], GraphFamily::Explicit).is_err());
        assert!(Graph::new(3, vec![(0, 1, 0.0)], GraphFamily::Explicit).is_err());
        assert!(Graph::new(3, vec![(0, 1, 1.0), (1, 0, 2.0)], GraphFamily::Explicit).is_err());
        assert!(Graph::new(4, vec![(0, 1, 1.0)], GraphFamily::Regular3Unit).is_err());
    }

    #[test]
    fn regular_generation() {
        let g = gen_random_regular(8, 3, 7).unwrap();
        assert_eq!(g.n_edges(), 12);
        assert!((0..8).all(|v| g.degree(v) == 3));
        assert_eq!(g, gen_random_regular(8, 3, 7).unwrap());
        assert!(matches!(gen_random_regular(5, 3, 1), Err(Error::InvalidArgument(_))));
        assert!(matches!(gen_random_regular(4, 4, 1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn complete_generation() {
        let g = gen_random_complete(4, 3).unwrap();
        assert_eq!(g.n_edges(), 6);
        assert!(g.edges().iter().all(|e| e.w > 0.0 && e.w <= 1.0));
        assert_eq!(gen_random_complete(2, 0).unwrap().n_edges(), 1);
        assert_eq!(g, gen_random_complete(4, 3).unwrap());
        assert!(gen_random_complete(1, 0).is_err());
    }

    #[test]
    fn triangle_costs() {
        let g = triangle();
        assert_eq!(bitstring_cost(&g, &"000".parse().unwrap()).unwrap(), 3.0);
        assert_eq!(bitstring_cost(&g, &"001".parse().unwrap()).unwrap(), -1.0);
        assert!(bitstring_cost(&g, &"01".parse().unwrap()).is_err());
    }

    #[test]
    fn index_and_bitstring_costs_agree() {
        let g = four_cycle();
        for k in 0..16 {
            let s = BitString::from_index(k, 4);
            assert_eq!(s.to_index(), k);
            assert_eq!(g.cost_of_index(k), bitstring_cost(&g, &s).unwrap());
        }
    }

    #[test]
    fn brute_force_examples() {
        let r = brute_force_solve(&four_cycle()).unwrap();
        assert_eq!(r.c_min, -4.0);
        let mut names: Vec<String> = r.minimizers.iter().map(|s| s.to_string()).collect();
        names.sort();
        assert_eq!(names, vec!["0101", "1010"]);

        let edge = Graph::new(2, vec![(0, 1, 1.0)], GraphFamily::Explicit).unwrap();
        let r = brute_force_solve(&edge).unwrap();
        assert_eq!((r.c_min, r.n_s()), (-1.0, 2));

        let r = brute_force_solve(&triangle()).unwrap();
        assert_eq!((r.c_min, r.n_s()), (-1.0, 6));

        let big = gen_random_regular(26, 3, 1).unwrap();
        assert!(matches!(brute_force_solve(&big), Err(Error::ResourceLimit(_))));
    }

    #[test]
    fn cubic_counts() {
        assert!(enumerate_cubic_graphs(2).unwrap().is_empty());
        assert_eq!(enumerate_cubic_graphs(4).unwrap().len(), 1);
        assert_eq!(enumerate_cubic_graphs(6).unwrap().len(), 2);
        assert_eq!(enumerate_cubic_graphs(8).unwrap().len(), 5);
        assert!(enumerate_cubic_graphs(7).is_err());
        assert!(matches!(enumerate_cubic_graphs(12), Err(Error::ResourceLimit(_))));
    }

    /// Brute-force canonical form over all vertex permutations.
    fn permutation_code(g: &Graph) -> Vec<(usize, usize)> {
        let n = g.n_vertices();
        let perms = permutations(&(0..n).collect::<Vec<_>>());
        perms
            .iter()
            .map(|p| {
                let mut code: Vec<(usize, usize)> = g
                    .edges()
                    .iter()
                    .map(|e| (p[e.i].min(p[e.j]), p[e.i].max(p[e.j])))
                    .collect();
                code.sort_unstable();
                code
            })
            .min()
            .unwrap()
    }

    #[test]
    fn enumerated_classes_are_pairwise_non_isomorphic() {
        for n in [6, 8] {
            let graphs = enumerate_cubic_graphs(n).unwrap();
            let codes: BTreeSet<_> = graphs.iter().map(permutation_code).collect();
            assert_eq!(codes.len(), graphs.len());
            assert!(graphs.iter().all(|g| g.is_connected()));
        }
    }

    #[test]
    fn canonical_code_is_relabeling_invariant() {
        let g = gen_random_regular(10, 3, 11).unwrap();
        if !g.is_connected() {
            return;
        }
        let perm = [3, 7, 1, 0, 9, 2, 8, 5, 4, 6];
        let relabeled = Graph::new(
            10,
            g.edges().iter().map(|e| (perm[e.i], perm[e.j], e.w)).collect(),
            GraphFamily::Regular3Unit,
        )
        .unwrap();
        assert_eq!(canonical_code(&g).unwrap(), canonical_code(&relabeled).unwrap());
    }

    #[test]
    fn record_roundtrip_and_validation() {
        let g = gen_random_complete(5, 9).unwrap();
        let rec = GraphRecord::from_graph("c5", 9, &g);
        let parsed = parse_graph_jsonl(&format!("{}\n\n{}\n", rec.to_json_line(), rec.to_json_line()))
            .unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0].to_graph().unwrap(), g);

        let bad = r#"{"id":"x","n":3,"family":"regular3","seed":0,"edges":[[0,1,1.0]]}"#;
        assert!(matches!(parse_graph_jsonl(bad), Err(Error::Parse(_))));
        assert!(parse_graph_jsonl("{not json").is_err());
    }
}
