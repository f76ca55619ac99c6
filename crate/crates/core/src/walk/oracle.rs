//! Exact single-machine reference: precomputes alias tables for every
//! (previous, current) edge context, then simulates walks with the same
//! keyed RNG streams as the distributed variants. Only viable at small
//! scale; refuses when the precomputation estimate exceeds the cap.

use std::collections::{HashMap, HashSet};

use crate::error::WalkError;
use crate::graph::{Graph, VertexId};
use crate::walk::rng::step_rng;
use crate::walk::{transition_weights, AliasTable, Walk, WalkConfig};

pub const DEFAULT_MEMORY_CAP: u128 = 1 << 30;

pub struct Oracle<'g> {
    graph: &'g Graph,
    p: f64,
    q: f64,
    /// Static-weight table per vertex, for first steps.
    first_step: Vec<Option<AliasTable>>,
    /// Second-order table per (previous, current) directed edge context.
    contexts: HashMap<(u64, u64), AliasTable>,
}

impl<'g> Oracle<'g> {
    pub fn build(graph: &'g Graph, config: &WalkConfig, cap: u128) -> Result<Oracle<'g>, WalkError> {
        config.validate(graph.vertex_count())?;
        let needed = graph.estimate_transprob_memory();
        if needed > cap {
            return Err(WalkError::OracleCapExceeded { needed, cap });
        }
        let mut first_step = Vec::with_capacity(graph.vertex_count() as usize);
        for v in graph.vertices() {
            let weights: Vec<f64> = graph
                .neighbors_unchecked(v)
                .iter()
                .map(|&(_, w)| w)
                .collect();
            first_step.push(if weights.is_empty() {
                None
            } else {
                Some(AliasTable::new(&weights)?)
            });
        }
        let mut contexts = HashMap::new();
        for v in graph.vertices() {
            let v_neighbors = graph.neighbors_unchecked(v);
            for &(u, _) in v_neighbors {
                let u_set: HashSet<VertexId> = graph
                    .neighbors_unchecked(u)
                    .iter()
                    .map(|&(x, _)| x)
                    .collect();
                let weights = transition_weights(v_neighbors, u, &u_set, config.p, config.q)?;
                contexts.insert((u.0, v.0), AliasTable::new(&weights)?);
            }
        }
        Ok(Oracle {
            graph,
            p: config.p,
            q: config.q,
            first_step,
            contexts,
        })
    }

    /// Exact normalized next-step distribution at `v` coming from `u`.
    pub fn step_distribution(&self, u: VertexId, v: VertexId) -> Vec<(VertexId, f64)> {
        let u_set: HashSet<VertexId> = self
            .graph
            .neighbors_unchecked(u)
            .iter()
            .map(|&(x, _)| x)
            .collect();
        let v_neighbors = self.graph.neighbors_unchecked(v);
        let weights = transition_weights(v_neighbors, u, &u_set, self.p, self.q).unwrap();
        let total: f64 = weights.iter().sum();
        v_neighbors
            .iter()
            .zip(weights)
            .map(|(&(x, _), w)| (x, w / total))
            .collect()
    }

    /// Simulate the walk (start, pass) with RNG keyed by (start, pass, step).
    pub fn walk(&self, config: &WalkConfig, start: VertexId, pass: u64) -> Walk {
        let mut steps = Vec::with_capacity(config.walk_length);
        if let Some(table) = &self.first_step[start.index()] {
            let mut rng = step_rng(config.seed, start.0, pass, 0);
            let first = self.graph.neighbors_unchecked(start)[table.sample(&mut rng)].0;
            steps.push(first);
            let mut prev = start;
            let mut curr = first;
            for step in 1..config.walk_length {
                let table = &self.contexts[&(prev.0, curr.0)];
                let mut rng = step_rng(config.seed, start.0, pass, step as u64);
                let next = self.graph.neighbors_unchecked(curr)[table.sample(&mut rng)].0;
                steps.push(next);
                prev = curr;
                curr = next;
            }
        }
        Walk {
            start,
            pass,
            steps,
        }
    }
}

/// All walks for every start vertex and pass, ordered by (start, pass).
pub fn oracle_walks(
    graph: &Graph,
    config: &WalkConfig,
    cap: u128,
) -> Result<Vec<Walk>, WalkError> {
    let oracle = Oracle::build(graph, config, cap)?;
    let mut walks = Vec::new();
    for start in graph.vertices() {
        for pass in 0..config.walks_per_vertex as u64 {
            walks.push(oracle.walk(config, start, pass));
        }
    }
    Ok(walks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(p: f64, q: f64, l: usize, r: usize, seed: u64) -> WalkConfig {
        WalkConfig {
            p,
            q,
            walk_length: l,
            walks_per_vertex: r,
            ..WalkConfig::default()
        }
        .with_seed(seed)
    }

    impl WalkConfig {
        fn with_seed(mut self, seed: u64) -> Self {
            self.seed = seed;
            self
        }
    }

    #[test]
    fn path_graph_second_step_equiprobable() {
        // 0 - 1 - 2, p = q = 1, l = 2, start 0: walk is [0, 1, x], x in {0, 2}
        let g = Graph::from_edges(3, vec![(0, 1, 1.0), (1, 2, 1.0)]);
        let mut seen = [0usize; 3];
        for seed in 0..4000 {
            let walks = oracle_walks(&g, &config(1.0, 1.0, 2, 1, seed), DEFAULT_MEMORY_CAP).unwrap();
            let w = &walks[0];
            assert_eq!(w.start, VertexId(0));
            assert_eq!(w.steps[0], VertexId(1));
            seen[w.steps[1].index()] += 1;
        }
        assert_eq!(seen[1], 0);
        let frac = seen[0] as f64 / 4000.0;
        assert!((frac - 0.5).abs() < 0.05, "frac = {frac}");
    }

    #[test]
    fn single_step_walks_follow_static_weights() {
        let g = Graph::from_edges(3, vec![(0, 1, 1.0), (0, 2, 3.0)]);
        let mut hits = 0usize;
        let n = 20_000;
        for seed in 0..n {
            let walks = oracle_walks(&g, &config(5.0, 0.1, 1, 1, seed as u64), DEFAULT_MEMORY_CAP)
                .unwrap();
            if walks[0].steps == [VertexId(2)] {
                hits += 1;
            }
        }
        let frac = hits as f64 / n as f64;
        assert!((frac - 0.75).abs() < 0.01, "frac = {frac}");
    }

    #[test]
    fn huge_p_never_backtracks_immediately() {
        // star: center 0 with 3 leaves; start at a leaf with p -> inf
        let g = Graph::from_edges(4, vec![(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)]);
        for seed in 0..200 {
            let walks =
                oracle_walks(&g, &config(1e12, 1.0, 6, 1, seed), DEFAULT_MEMORY_CAP).unwrap();
            let w = walks.iter().find(|w| w.start == VertexId(1)).unwrap();
            let mut prev = w.start;
            let mut curr = w.steps[0];
            for &next in &w.steps[1..] {
                // alternatives always exist at the center
                if curr == VertexId(0) {
                    assert_ne!(next, prev, "immediate return at seed {seed}");
                }
                prev = curr;
                curr = next;
            }
        }
    }

    #[test]
    fn degree_zero_start_emits_empty_walk() {
        let g = Graph::from_edges(3, vec![(0, 1, 1.0)]);
        let walks = oracle_walks(&g, &config(1.0, 1.0, 4, 1, 0), DEFAULT_MEMORY_CAP).unwrap();
        let w = walks.iter().find(|w| w.start == VertexId(2)).unwrap();
        assert!(w.steps.is_empty());
    }

    #[test]
    fn cap_refusal_mentions_estimate() {
        let g = Graph::from_edges(3, vec![(0, 1, 1.0), (1, 2, 1.0)]);
        let err = oracle_walks(&g, &config(1.0, 1.0, 2, 1, 0), 10).unwrap_err();
        match err {
            WalkError::OracleCapExceeded { needed, cap } => {
                assert_eq!(needed, g.estimate_transprob_memory());
                assert_eq!(cap, 10);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
