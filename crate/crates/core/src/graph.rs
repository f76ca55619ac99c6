//! Immutable weighted undirected graphs with dense vertex ids.
//!
//! Input edge lists are symmetrized, deduplicated, and remapped to a dense
//! id space so that modulo partitioning and array adjacency work directly.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};

use crate::error::GraphError;

/// Dense vertex index in `[0, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub u64);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Immutable undirected weighted graph in adjacency-list form.
///
/// Neighbor lists are sorted ascending by id (canonical order), contain no
/// duplicates or self-loops, and every edge appears in both directions with
/// the same weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: Vec<Vec<(VertexId, f64)>>,
}

impl Graph {
    /// Build a graph from a raw undirected edge set over dense ids.
    ///
    /// Symmetrizes, drops self-loops, keeps the first weight seen per pair.
    /// `n` may exceed the largest endpoint to allow isolated vertices.
    pub fn from_edges(n: u64, edges: impl IntoIterator<Item = (u64, u64, f64)>) -> Graph {
        let mut seen: HashMap<(u64, u64), f64> = HashMap::new();
        for (u, v, w) in edges {
            if u == v {
                continue;
            }
            let key = (u.min(v), u.max(v));
            seen.entry(key).or_insert(w);
        }
        let mut adjacency: Vec<Vec<(VertexId, f64)>> = vec![Vec::new(); n as usize];
        for (&(u, v), &w) in &seen {
            adjacency[u as usize].push((VertexId(v), w));
            adjacency[v as usize].push((VertexId(u), w));
        }
        for list in &mut adjacency {
            list.sort_unstable_by_key(|(x, _)| *x);
        }
        Graph { adjacency }
    }

    #[inline]
    pub fn vertex_count(&self) -> u64 {
        self.adjacency.len() as u64
    }

    /// Undirected edge count.
    pub fn edge_count(&self) -> u64 {
        self.adjacency.iter().map(|l| l.len() as u64).sum::<u64>() / 2
    }

    #[inline]
    pub fn degree(&self, v: VertexId) -> usize {
        self.adjacency[v.index()].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(|l| l.len()).max().unwrap_or(0)
    }

    /// Canonical (ascending) neighbor list of `v`.
    pub fn neighbors(&self, v: VertexId) -> Result<&[(VertexId, f64)], GraphError> {
        self.adjacency
            .get(v.index())
            .map(|l| l.as_slice())
            .ok_or(GraphError::VertexOutOfRange(v.0, self.vertex_count()))
    }

    /// Like [`Graph::neighbors`] but panics on out-of-range ids.
    #[inline]
    pub fn neighbors_unchecked(&self, v: VertexId) -> &[(VertexId, f64)] {
        &self.adjacency[v.index()]
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.vertex_count()).map(VertexId)
    }

    /// Bytes needed to precompute every second-order transition probability:
    /// 8 bytes per probability, `d_i^2` probabilities per vertex.
    pub fn estimate_transprob_memory(&self) -> u128 {
        self.adjacency
            .iter()
            .map(|l| 8u128 * (l.len() as u128) * (l.len() as u128))
            .sum()
    }
}

/// Same 8-byte-per-probability estimate for a hypothetical graph with `n`
/// vertices of uniform degree `d`, without materializing it.
pub fn transprob_memory_uniform(n: u128, d: u128) -> u128 {
    8 * n * d * d
}

/// A graph plus a modulo assignment of vertices to logical workers.
#[derive(Debug, Clone)]
pub struct PartitionedGraph {
    pub graph: Graph,
    num_workers: usize,
}

impl PartitionedGraph {
    pub fn new(graph: Graph, num_workers: usize) -> Result<PartitionedGraph, GraphError> {
        if num_workers == 0 {
            return Err(GraphError::ZeroWorkers);
        }
        Ok(PartitionedGraph { graph, num_workers })
    }

    #[inline]
    pub fn num_workers(&self) -> usize {
        self.num_workers
    }

    /// Worker owning `v` (modulo placement).
    #[inline]
    pub fn owner(&self, v: VertexId) -> usize {
        (v.0 as usize) % self.num_workers
    }

    /// Vertices owned by `worker`, ascending.
    pub fn owned_vertices(&self, worker: usize) -> impl Iterator<Item = VertexId> + '_ {
        let n = self.graph.vertex_count();
        (worker as u64..n).step_by(self.num_workers).map(VertexId)
    }
}

/// Result of ingesting an edge-list stream: the graph plus the mapping from
/// original labels to dense ids, in first-appearance order.
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: Graph,
    pub label_map: Vec<(i64, u64)>,
}

/// Parse a whitespace-separated `src dst [weight]` edge list.
///
/// Lines starting with `#` are comments. Vertex labels are arbitrary
/// integers, remapped to dense ids in order of first appearance. Edges are
/// symmetrized with the first weight seen per pair; self-loops are dropped;
/// a missing weight defaults to 1.0.
pub fn load_edge_list<R: Read>(source: R, weighted: bool) -> Result<LoadedGraph, GraphError> {
    let reader = BufReader::new(source);
    let mut ids: HashMap<i64, u64> = HashMap::new();
    let mut label_map: Vec<(i64, u64)> = Vec::new();
    let mut edges: Vec<(u64, u64, f64)> = Vec::new();

    let mut intern = |label: i64, label_map: &mut Vec<(i64, u64)>| -> u64 {
        let next = ids.len() as u64;
        *ids.entry(label).or_insert_with(|| {
            label_map.push((label, next));
            next
        })
    };

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let src: i64 = fields
            .next()
            .unwrap()
            .parse()
            .map_err(|e| GraphError::Parse {
                line: lineno,
                reason: format!("bad source vertex: {e}"),
            })?;
        let dst: i64 = fields
            .next()
            .ok_or_else(|| GraphError::Parse {
                line: lineno,
                reason: "missing destination vertex".into(),
            })?
            .parse()
            .map_err(|e| GraphError::Parse {
                line: lineno,
                reason: format!("bad destination vertex: {e}"),
            })?;
        let weight = match (weighted, fields.next()) {
            (true, Some(tok)) => tok.parse::<f64>().map_err(|e| GraphError::Parse {
                line: lineno,
                reason: format!("bad weight: {e}"),
            })?,
            _ => 1.0,
        };
        if !weight.is_finite() || weight <= 0.0 {
            return Err(GraphError::NonPositiveWeight {
                line: lineno,
                weight,
            });
        }
        let s = intern(src, &mut label_map);
        let d = intern(dst, &mut label_map);
        edges.push((s, d, weight));
    }

    let n = ids.len() as u64;
    Ok(LoadedGraph {
        graph: Graph::from_edges(n, edges),
        label_map,
    })
}

/// Write the `original_id dense_id` label map, one pair per line.
pub fn write_label_map<W: Write>(mut out: W, label_map: &[(i64, u64)]) -> std::io::Result<()> {
    for (orig, dense) in label_map {
        writeln!(out, "{orig} {dense}")?;
    }
    Ok(())
}

const CACHE_MAGIC: &[u8; 8] = b"FN2VADJ\x01";

/// Serialize the adjacency structure to a versioned binary cache.
pub fn write_adjacency_cache<W: Write>(mut out: W, graph: &Graph) -> Result<(), GraphError> {
    out.write_all(CACHE_MAGIC)?;
    out.write_all(&graph.vertex_count().to_le_bytes())?;
    for v in graph.vertices() {
        let list = graph.neighbors_unchecked(v);
        out.write_all(&(list.len() as u64).to_le_bytes())?;
        for &(nbr, w) in list {
            out.write_all(&nbr.0.to_le_bytes())?;
            out.write_all(&w.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reload a graph written by [`write_adjacency_cache`].
pub fn read_adjacency_cache<R: Read>(mut input: R) -> Result<Graph, GraphError> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != CACHE_MAGIC {
        return Err(GraphError::Cache("bad magic or unsupported version".into()));
    }
    let mut buf8 = [0u8; 8];
    input.read_exact(&mut buf8)?;
    let n = u64::from_le_bytes(buf8);
    let mut adjacency = Vec::with_capacity(n as usize);
    for _ in 0..n {
        input.read_exact(&mut buf8)?;
        let deg = u64::from_le_bytes(buf8) as usize;
        let mut list = Vec::with_capacity(deg);
        for _ in 0..deg {
            input.read_exact(&mut buf8)?;
            let nbr = u64::from_le_bytes(buf8);
            if nbr >= n {
                return Err(GraphError::Cache(format!("neighbor id {nbr} out of range")));
            }
            input.read_exact(&mut buf8)?;
            let w = f64::from_le_bytes(buf8);
            list.push((VertexId(nbr), w));
        }
        adjacency.push(list);
    }
    Ok(Graph { adjacency })
}
