//! Weighted interaction graphs: the canonical edge store, text/JSON
//! ingestion, and seeded instance generators.
//!
//! Edges are stored once with `i < j`. Every graph carries a neighbor index
//! built at construction, so lookups of `N(i)` and of the edge id for a pair
//! are constant-time after that.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// One entry of a vertex's adjacency list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub vertex: usize,
    pub weight: f64,
    /// Position of the connecting edge in [`Graph::edges`].
    pub edge: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<Neighbor>>,
    lookup: HashMap<(usize, usize), usize>,
}

impl Graph {
    /// Builds a graph from edges in any orientation. Edges are re-oriented so
    /// that `i < j` and kept in the order given.
    pub fn new<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut stored = Vec::new();
        let mut lookup = HashMap::new();
        for (a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a},{b}) references a vertex outside 0..{n}"
                )));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop on vertex {a}")));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a},{b}) has weight {w}; weights must be finite and nonnegative"
                )));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if lookup.insert((i, j), stored.len()).is_some() {
                return Err(Error::InvalidGraph(format!("duplicate edge ({i},{j})")));
            }
            stored.push(Edge { i, j, w });
        }

        let mut adjacency = vec![Vec::new(); n];
        for (id, e) in stored.iter().enumerate() {
            adjacency[e.i].push(Neighbor { vertex: e.j, weight: e.w, edge: id });
            adjacency[e.j].push(Neighbor { vertex: e.i, weight: e.w, edge: id });
        }
        for list in &mut adjacency {
            list.sort_by_key(|nb| nb.vertex);
        }

        Ok(Self { n, edges: stored, adjacency, lookup })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Sorted adjacency list of `v`.
    pub fn neighbors(&self, v: usize) -> &[Neighbor] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    /// Edge id for the unordered pair `{a, b}`.
    pub fn edge_id(&self, a: usize, b: usize) -> Option<usize> {
        let key = if a < b { (a, b) } else { (b, a) };
        self.lookup.get(&key).copied()
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    /// Same graph with vertex `v` renamed to `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "permutation has length {}, graph has {} vertices",
                perm.len(),
                self.n
            )));
        }
        Self::new(self.n, self.edges.iter().map(|e| (perm[e.i], perm[e.j], e.w)))
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for e in &self.edges {
            out.push_str(&format!("{} {} {}\n", e.i, e.j, e.w));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let doc = GraphDoc {
            n: Some(self.n),
            edges: self.edges.iter().map(|e| (e.i, e.j, e.w)).collect(),
        };
        serde_json::to_string(&doc).expect("graph serialization is infallible")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    EdgeList,
    Json,
}

impl FromStr for GraphFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edge-list" | "edgelist" | "txt" => Ok(Self::EdgeList),
            "json" => Ok(Self::Json),
            other => Err(Error::InvalidArgument(format!("unknown graph format {other:?}"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct GraphDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    edges: Vec<(usize, usize, f64)>,
}

pub fn parse_graph(text: &str, format: GraphFormat) -> Result<Graph> {
    match format {
        GraphFormat::EdgeList => parse_edge_list(text),
        GraphFormat::Json => parse_json(text),
    }
}

fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut declared: Option<usize> = None;
    let mut seen_data = false;
    let mut edges = Vec::new();
    let mut lines_of = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        let bad = |msg: String| Error::Parse { line: line_no, msg };
        if !seen_data && fields.len() == 1 {
            seen_data = true;
            declared = Some(
                fields[0]
                    .parse()
                    .map_err(|_| bad(format!("expected vertex count, found {:?}", fields[0])))?,
            );
            continue;
        }
        seen_data = true;
        if fields.len() != 3 {
            return Err(bad(format!("expected \"i j w\", found {body:?}")));
        }
        let i: usize = fields[0]
            .parse()
            .map_err(|_| bad(format!("bad vertex id {:?}", fields[0])))?;
        let j: usize = fields[1]
            .parse()
            .map_err(|_| bad(format!("bad vertex id {:?}", fields[1])))?;
        let w: f64 = fields[2]
            .parse()
            .map_err(|_| bad(format!("bad weight {:?}", fields[2])))?;
        edges.push((i, j, w));
        lines_of.push(line_no);
    }

    let n = resolve_vertex_count(declared, &edges)?;
    // Re-run the edge checks here so that errors carry the offending line.
    let mut seen = std::collections::HashSet::new();
    for (&(i, j, w), &line) in edges.iter().zip(&lines_of) {
        let msg = if i == j {
            Some(format!("self-loop on vertex {i}"))
        } else if !w.is_finite() || w < 0.0 {
            Some(format!("weight {w} must be finite and nonnegative"))
        } else if i >= n || j >= n {
            Some(format!("vertex outside 0..{n}"))
        } else if !seen.insert((i.min(j), i.max(j))) {
            Some(format!("duplicate edge ({},{})", i.min(j), i.max(j)))
        } else {
            None
        };
        if let Some(msg) = msg {
            return Err(Error::Parse { line, msg });
        }
    }
    Graph::new(n, edges)
}

fn parse_json(text: &str) -> Result<Graph> {
    let doc: GraphDoc = serde_json::from_str(text)?;
    let n = resolve_vertex_count(doc.n, &doc.edges)?;
    Graph::new(n, doc.edges)
}

fn resolve_vertex_count(declared: Option<usize>, edges: &[(usize, usize, f64)]) -> Result<usize> {
    let implied = edges.iter().map(|&(i, j, _)| i.max(j) + 1).max().unwrap_or(0);
    match declared {
        Some(n) if implied > n => Err(Error::InvalidGraph(format!(
            "declared {n} vertices but an edge references vertex {}",
            implied - 1
        ))),
        Some(n) => Ok(n),
        None => Ok(implied),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    Complete,
    Cycle,
    Star,
    Path,
    ErdosRenyi,
}

/// A seeded instance family. `size` is the vertex count, except for
/// [`GraphKind::Star`] where it is the number of leaves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GraphKind,
    pub size: usize,
    pub p: Option<f64>,
    pub weights: Option<(f64, f64)>,
}

impl GeneratorSpec {
    pub fn new(kind: GraphKind, size: usize) -> Self {
        Self { kind, size, p: None, weights: None }
    }

    pub fn erdos_renyi(n: usize, p: f64) -> Self {
        Self { kind: GraphKind::ErdosRenyi, size: n, p: Some(p), weights: None }
    }
}

/// Parses `kind:size[,p][,w=lo..hi]`, e.g. `complete:3`, `star:4`,
/// `erdos_renyi:8,0.4`, `cycle:5,w=0.5..2`.
impl FromStr for GeneratorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidGenerator(format!("{s:?}: {msg}"));
        let (kind, params) = s.split_once(':').ok_or_else(|| bad("expected kind:params"))?;
        let kind = match kind.trim() {
            "complete" | "K" => GraphKind::Complete,
            "cycle" | "C" => GraphKind::Cycle,
            "star" => GraphKind::Star,
            "path" | "P" => GraphKind::Path,
            "erdos_renyi" | "er" | "gnp" => GraphKind::ErdosRenyi,
            _ => return Err(bad("unknown kind")),
        };
        let mut parts = params.split(',').map(str::trim);
        let size = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad("missing size"))?;
        let mut spec = GeneratorSpec::new(kind, size);
        for part in parts {
            if let Some(range) = part.strip_prefix("w=") {
                let (lo, hi) = range.split_once("..").ok_or_else(|| bad("weights as w=lo..hi"))?;
                let lo = lo.parse().map_err(|_| bad("bad weight bound"))?;
                let hi = hi.parse().map_err(|_| bad("bad weight bound"))?;
                spec.weights = Some((lo, hi));
            } else {
                spec.p = Some(part.parse().map_err(|_| bad("bad edge probability"))?);
            }
        }
        Ok(spec)
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            GraphKind::Complete => "complete",
            GraphKind::Cycle => "cycle",
            GraphKind::Star => "star",
            GraphKind::Path => "path",
            GraphKind::ErdosRenyi => "erdos_renyi",
        };
        write!(f, "{kind}:{}", self.size)?;
        if let Some(p) = self.p {
            write!(f, ",{p}")?;
        }
        if let Some((lo, hi)) = self.weights {
            write!(f, ",w={lo}..{hi}")?;
        }
        Ok(())
    }
}

pub fn generate(spec: &GeneratorSpec, seed: u64) -> Result<Graph> {
    let bad = |msg: String| Error::InvalidGenerator(msg);
    if let Some((lo, hi)) = spec.weights {
        if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
            return Err(bad(format!("weight range {lo}..{hi} must satisfy 0 <= lo <= hi")));
        }
    }
    let size = spec.size;
    let (n, pairs): (usize, Vec<(usize, usize)>) = match spec.kind {
        GraphKind::Complete => {
            if size == 0 {
                return Err(bad("complete graph needs n >= 1".into()));
            }
            (size, (0..size).flat_map(|i| (i + 1..size).map(move |j| (i, j))).collect())
        }
        GraphKind::Path => {
            if size == 0 {
                return Err(bad("path needs n >= 1".into()));
            }
            (size, (1..size).map(|j| (j - 1, j)).collect())
        }
        GraphKind::Cycle => {
            if size < 3 {
                return Err(bad("cycle needs n >= 3".into()));
            }
            let mut pairs: Vec<_> = (1..size).map(|j| (j - 1, j)).collect();
            pairs.push((0, size - 1));
            (size, pairs)
        }
        GraphKind::Star => (size + 1, (1..=size).map(|leaf| (0, leaf)).collect()),
        GraphKind::ErdosRenyi => {
            let p = spec.p.ok_or_else(|| bad("erdos_renyi needs an edge probability".into()))?;
            if size == 0 || !(0.0..=1.0).contains(&p) {
                return Err(bad(format!("erdos_renyi needs n >= 1 and 0 <= p <= 1, got n={size}, p={p}")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut pairs = Vec::new();
            for i in 0..size {
                for j in i + 1..size {
                    if rng.random::<f64>() < p {
                        pairs.push((i, j));
                    }
                }
            }
            (size, pairs)
        }
    };

    // Weights draw from their own stream so the edge set does not depend on them.
    let mut weight_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5745_4947_4854_5321);
    let edges = pairs.into_iter().map(|(i, j)| {
        let w = match spec.weights {
            Some((lo, hi)) if hi > lo => weight_rng.random_range(lo..hi),
            Some((lo, _)) => lo,
            None => 1.0,
        };
        (i, j, w)
    });
    Graph::new(n, edges.collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_single_edge() {
        let g = parse_graph("2\n0 1 1.0", GraphFormat::EdgeList).unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.edges(), &[Edge { i: 0, j: 1, w: 1.0 }]);
    }

    #[test]
    fn parses_triangle_and_reorients() {
        let g = parse_graph("3\n0 1 1\n2 1 1\n0 2 1", GraphFormat::EdgeList).unwrap();
        assert_eq!(g.edge_count(), 3);
        assert!(g.edges().iter().all(|e| e.i < e.j && e.w == 1.0));
        assert_eq!(g.edge_id(1, 2), Some(1));
    }

    #[test]
    fn rejects_self_loop_with_line_number() {
        let err = parse_graph("2\n0 0 1.0", GraphFormat::EdgeList).unwrap_err();
        match err {
            Error::Parse { line, msg } => {
                assert_eq!(line, 2);
                assert!(msg.contains("self-loop"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_negative_duplicate_and_malformed() {
        assert!(parse_graph("2\n0 1 -1", GraphFormat::EdgeList).is_err());
        let dup = parse_graph("3\n0 1 1\n# comment\n1 0 2", GraphFormat::EdgeList).unwrap_err();
        assert!(matches!(dup, Error::Parse { line: 4, .. }), "{dup:?}");
        let junk = parse_graph("3\n0 1\n", GraphFormat::EdgeList).unwrap_err();
        assert!(matches!(junk, Error::Parse { line: 2, .. }), "{junk:?}");
        assert!(parse_graph("2\n0 5 1", GraphFormat::EdgeList).is_err());
    }

    #[test]
    fn comments_and_implied_vertex_count() {
        let g = parse_graph("# header\n0 3 2.5 # trailing\n\n", GraphFormat::EdgeList).unwrap();
        assert_eq!(g.n(), 4);
        assert_eq!(g.degree(0), 1);
        assert_eq!(g.degree(1), 0);
    }

    #[test]
    fn json_format() {
        let g = parse_graph(r#"{"n": 3, "edges": [[1, 0, 1.5], [1, 2, 0.0]]}"#, GraphFormat::Json)
            .unwrap();
        assert_eq!(g.edges()[0], Edge { i: 0, j: 1, w: 1.5 });
        // zero-weight edges stay in the neighbor structure
        assert_eq!(g.degree(2), 1);
        let back = parse_graph(&g.to_json(), GraphFormat::Json).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn generators() {
        let k3 = generate(&"complete:3".parse().unwrap(), 0).unwrap();
        assert_eq!(k3.edge_count(), 3);
        let star = generate(&GeneratorSpec::new(GraphKind::Star, 4), 0).unwrap();
        assert_eq!(star.n(), 5);
        assert_eq!(star.edge_count(), 4);
        assert!(star.edges().iter().all(|e| e.i == 0));
        let c5 = generate(&"cycle:5".parse().unwrap(), 0).unwrap();
        assert!(c5.edges().iter().all(|e| c5.degree(e.i) == 2));
        let p3 = generate(&"path:3".parse().unwrap(), 0).unwrap();
        assert_eq!(p3.edge_count(), 2);
    }

    #[test]
    fn erdos_renyi_is_deterministic() {
        let spec = GeneratorSpec::erdos_renyi(8, 0.5);
        let a = generate(&spec, 7).unwrap();
        let b = generate(&spec, 7).unwrap();
        assert_eq!(a, b);
        let c = generate(&spec, 8).unwrap();
        assert_ne!(a.edges(), c.edges());
    }

    #[test]
    fn generator_rejects_bad_params() {
        assert!(generate(&GeneratorSpec::erdos_renyi(4, 1.5), 0).is_err());
        assert!(generate(&GeneratorSpec::new(GraphKind::Complete, 0), 0).is_err());
        assert!(generate(&GeneratorSpec::new(GraphKind::ErdosRenyi, 4), 0).is_err());
        assert!("hypercube:3".parse::<GeneratorSpec>().is_err());
    }

    #[test]
    fn generator_spec_roundtrips_through_display() {
        for s in ["complete:3", "erdos_renyi:8,0.4", "cycle:5,w=0.5..2"] {
            let spec: GeneratorSpec = s.parse().unwrap();
            assert_eq!(spec.to_string().parse::<GeneratorSpec>().unwrap(), spec);
        }
    }

    #[test]
    fn weighted_generation_stays_in_range() {
        let g = generate(&"complete:6,w=0.5..2".parse().unwrap(), 3).unwrap();
        assert!(g.edges().iter().all(|e| (0.5..2.0).contains(&e.w)));
    }
}
