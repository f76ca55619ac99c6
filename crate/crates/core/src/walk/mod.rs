//! Second-order walk mathematics: search-bias evaluation, unnormalized
//! transition weights, alias sampling, approximation bounds, and the exact
//! single-machine oracle.

mod alias;
pub mod oracle;
pub mod rng;
pub mod stats;

pub use alias::AliasTable;

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::WalkError;
use crate::graph::VertexId;

/// Walk parameters shared by every algorithm variant.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WalkConfig {
    /// Return parameter.
    pub p: f64,
    /// In-out parameter.
    pub q: f64,
    /// Steps per walk.
    pub walk_length: usize,
    /// Walks per start vertex.
    pub walks_per_vertex: usize,
    /// Round count: each round simulates n/k walks to bound peak memory.
    pub rounds: usize,
    /// Degree at or above which a vertex counts as popular.
    pub popular_threshold: usize,
    /// Bound-gap threshold below which the approximate variant samples
    /// first-order.
    pub epsilon: f64,
    /// Optional per-worker budget for cached popular neighbor lists; the
    /// largest degrees are admitted first. `None` caches every popular
    /// vertex.
    #[serde(default)]
    pub cache_cap_bytes: Option<u64>,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            p: 1.0,
            q: 1.0,
            walk_length: 80,
            walks_per_vertex: 10,
            rounds: 1,
            popular_threshold: 1000,
            epsilon: 1e-3,
            cache_cap_bytes: None,
            seed: 42,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self, n: u64) -> Result<(), WalkError> {
        if !(self.p > 0.0) || !(self.q > 0.0) {
            return Err(WalkError::BadConfig("p and q must be positive".into()));
        }
        if self.walk_length == 0 {
            return Err(WalkError::BadConfig("walk length must be >= 1".into()));
        }
        if self.walks_per_vertex == 0 {
            return Err(WalkError::BadConfig("walks per vertex must be >= 1".into()));
        }
        if self.rounds == 0 || (n > 0 && self.rounds as u64 > n) {
            return Err(WalkError::BadConfig(format!(
                "rounds must be in [1, n], got {}",
                self.rounds
            )));
        }
        if self.epsilon < 0.0 {
            return Err(WalkError::BadConfig("epsilon must be >= 0".into()));
        }
        Ok(())
    }
}

/// Distance class of a candidate next step relative to the previous vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistCase {
    /// Candidate is the previous vertex itself.
    IsPrev,
    /// Candidate is a common neighbor of the previous and current vertices.
    CommonNeighbor,
    /// Every other case.
    Other,
}

/// Search-bias multiplier: 1/p, 1, or 1/q by distance class.
#[inline]
pub fn alpha(p: f64, q: f64, case: DistCase) -> f64 {
    match case {
        DistCase::IsPrev => 1.0 / p,
        DistCase::CommonNeighbor => 1.0,
        DistCase::Other => 1.0 / q,
    }
}

/// Unnormalized second-order transition weights over `v_neighbors`, in
/// canonical order, for a walk that arrived at `v` from `u`.
///
/// `u_neighbor_set` must contain exactly `u`'s neighbors.
pub fn transition_weights(
    v_neighbors: &[(VertexId, f64)],
    u: VertexId,
    u_neighbor_set: &HashSet<VertexId>,
    p: f64,
    q: f64,
) -> Result<Vec<f64>, WalkError> {
    if v_neighbors.is_empty() {
        return Err(WalkError::EmptyNeighborhood);
    }
    Ok(v_neighbors
        .iter()
        .map(|&(x, w)| {
            let case = if x == u {
                DistCase::IsPrev
            } else if u_neighbor_set.contains(&x) {
                DistCase::CommonNeighbor
            } else {
                DistCase::Other
            };
            w * alpha(p, q, case)
        })
        .collect())
}

/// Sample the first step of a walk from `start`'s static edge weights.
pub fn first_step_sample<R: Rng + ?Sized>(
    start_neighbors: &[(VertexId, f64)],
    rng: &mut R,
) -> Result<VertexId, WalkError> {
    if start_neighbors.is_empty() {
        return Err(WalkError::EmptyNeighborhood);
    }
    let weights: Vec<f64> = start_neighbors.iter().map(|&(_, w)| w).collect();
    let table = AliasTable::new(&weights)?;
    Ok(start_neighbors[table.sample(rng)].0)
}

/// Sample the next step at `v` given the previous vertex `u`, building a
/// transient alias table over the just-computed transition weights.
pub fn second_order_sample<R: Rng + ?Sized>(
    v_neighbors: &[(VertexId, f64)],
    u: VertexId,
    u_neighbor_set: &HashSet<VertexId>,
    p: f64,
    q: f64,
    rng: &mut R,
) -> Result<VertexId, WalkError> {
    let weights = transition_weights(v_neighbors, u, u_neighbor_set, p, q)?;
    let table = AliasTable::new(&weights)?;
    Ok(v_neighbors[table.sample(rng)].0)
}

/// Bracket on the normalized transition probability toward any non-return
/// neighbor, computed from degrees and weight extremes alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxBounds {
    pub lower: f64,
    pub upper: f64,
}

impl ApproxBounds {
    #[inline]
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Probability bounds for a move into a high-degree vertex `v` of degree
/// `d_v` from a vertex `u` of degree `d_u`, with edge weights confined to
/// `[w_min, w_max]`.
///
/// The non-return numerator lies in `[min(1, 1/q) w_min, max(1, 1/q) w_max]`.
/// The normalizing sum has one `1/p` term for `u` and, among the remaining
/// `d_v - 1` candidates, between zero and `d_u` common-neighbor terms; the
/// sum is linear in that count, so its extremes sit at the endpoints.
pub fn approx_bounds(
    d_u: usize,
    d_v: usize,
    p: f64,
    q: f64,
    w_min: f64,
    w_max: f64,
) -> Result<ApproxBounds, WalkError> {
    if d_u < 1 || d_v <= d_u {
        return Err(WalkError::BadBoundsInput(format!(
            "need 1 <= d_u < d_v, got d_u = {d_u}, d_v = {d_v}"
        )));
    }
    if !(w_min > 0.0) || w_max < w_min {
        return Err(WalkError::BadBoundsInput(format!(
            "need 0 < w_min <= w_max, got [{w_min}, {w_max}]"
        )));
    }
    if !(p > 0.0) || !(q > 0.0) {
        return Err(WalkError::BadBoundsInput("p and q must be positive".into()));
    }
    let inv_p = 1.0 / p;
    let inv_q = 1.0 / q;
    let num_min = inv_q.min(1.0) * w_min;
    let num_max = inv_q.max(1.0) * w_max;
    let denom_coeff = |common: f64| inv_p + common + (d_v as f64 - 1.0 - common) * inv_q;
    let c0 = denom_coeff(0.0);
    let cd = denom_coeff(d_u as f64);
    let den_min = c0.min(cd) * w_min;
    let den_max = c0.max(cd) * w_max;
    Ok(ApproxBounds {
        lower: (num_min / den_max).clamp(0.0, 1.0),
        upper: (num_max / den_min).clamp(0.0, 1.0),
    })
}

/// One recorded walk: the start vertex followed by up to `walk_length`
/// sampled steps (empty for degree-0 starts).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Walk {
    pub start: VertexId,
    pub pass: u64,
    pub steps: Vec<VertexId>,
}

/// Write walks one per line: space-separated dense ids, start vertex first.
pub fn write_walks<W: Write>(mut out: W, walks: &[Walk]) -> std::io::Result<()> {
    let mut line = String::new();
    for walk in walks {
        line.clear();
        line.push_str(&walk.start.0.to_string());
        for step in &walk.steps {
            line.push(' ');
            line.push_str(&step.0.to_string());
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// Read a walks file back into id sequences (start vertex first).
pub fn read_walks<R: Read>(input: R) -> std::io::Result<Vec<Vec<u64>>> {
    let reader = BufReader::new(input);
    let mut walks = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let ids = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<u64>()
                    .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
            })
            .collect::<Result<Vec<u64>, _>>()?;
        walks.push(ids);
    }
    Ok(walks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    #[test]
    fn alpha_cases() {
        assert_eq!(alpha(2.0, 1.0, DistCase::IsPrev), 0.5);
        assert_eq!(alpha(3.0, 7.0, DistCase::CommonNeighbor), 1.0);
        assert_eq!(alpha(1.0, 0.5, DistCase::Other), 2.0);
    }

    fn nbr_set(g: &Graph, v: VertexId) -> HashSet<VertexId> {
        g.neighbors_unchecked(v).iter().map(|&(x, _)| x).collect()
    }

    #[test]
    fn unit_pq_reduces_to_first_order() {
        let g = Graph::from_edges(4, vec![(0, 1, 2.0), (1, 2, 3.0), (1, 3, 0.5), (0, 2, 1.0)]);
        let v = VertexId(1);
        let u = VertexId(0);
        let pi = transition_weights(
            g.neighbors_unchecked(v),
            u,
            &nbr_set(&g, u),
            1.0,
            1.0,
        )
        .unwrap();
        let weights: Vec<f64> = g.neighbors_unchecked(v).iter().map(|&(_, w)| w).collect();
        assert_eq!(pi, weights);
    }

    #[test]
    fn path_two_case_weights() {
        // u - v - x with unit weights, p = 4, q = 0.25
        let g = Graph::from_edges(3, vec![(0, 1, 1.0), (1, 2, 1.0)]);
        let pi = transition_weights(
            g.neighbors_unchecked(VertexId(1)),
            VertexId(0),
            &nbr_set(&g, VertexId(0)),
            4.0,
            0.25,
        )
        .unwrap();
        assert_eq!(pi, vec![0.25, 4.0]);
    }

    #[test]
    fn triangle_plus_pendant_three_cases() {
        // triangle u(0), v(1), x(2) plus pendant y(3) on v; p = 1, q = 2
        let g = Graph::from_edges(
            4,
            vec![(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (1, 3, 1.0)],
        );
        let pi = transition_weights(
            g.neighbors_unchecked(VertexId(1)),
            VertexId(0),
            &nbr_set(&g, VertexId(0)),
            1.0,
            2.0,
        )
        .unwrap();
        // canonical order at v = [u(0), x(2), y(3)]
        assert_eq!(pi, vec![1.0, 1.0, 0.5]);
    }

    #[test]
    fn empty_neighborhood_rejected() {
        let err = transition_weights(&[], VertexId(0), &HashSet::new(), 1.0, 1.0).unwrap_err();
        assert!(matches!(err, WalkError::EmptyNeighborhood));
    }

    #[test]
    fn bounds_worked_example() {
        let b = approx_bounds(2, 100, 2.0, 0.5, 1.0, 1.0).unwrap();
        assert!((b.lower - 1.0 / 198.5).abs() < 1e-12);
        assert!((b.upper - 2.0 / 196.5).abs() < 1e-12);
        assert!((b.lower - 0.005038).abs() < 1e-6);
        assert!((b.upper - 0.010178).abs() < 1e-6);
    }

    #[test]
    fn bounds_collapse_for_unit_pq() {
        let b = approx_bounds(3, 50, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!((b.lower - 0.02).abs() < 1e-15);
        assert!((b.upper - 0.02).abs() < 1e-15);
    }

    #[test]
    fn bounds_preconditions() {
        assert!(approx_bounds(0, 10, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(approx_bounds(10, 10, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(approx_bounds(2, 10, 1.0, 1.0, 0.0, 1.0).is_err());
        assert!(approx_bounds(2, 10, 1.0, 1.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn bounds_trigger_example() {
        // large-degree target with near-collapsed bounds
        let b = approx_bounds(5, 10_000, 2.0, 0.5, 1.0, 1.0).unwrap();
        assert!(b.gap() < 1e-3, "gap = {}", b.gap());
        assert!(b.gap() > 0.0);
    }

    #[test]
    fn walks_file_round_trip() {
        let walks = vec![
            Walk {
                start: VertexId(3),
                pass: 0,
                steps: vec![VertexId(1), VertexId(2)],
            },
            Walk {
                start: VertexId(9),
                pass: 0,
                steps: vec![],
            },
        ];
        let mut buf = Vec::new();
        write_walks(&mut buf, &walks).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "3 1 2\n9\n");
        let back = read_walks(&buf[..]).unwrap();
        assert_eq!(back, vec![vec![3, 1, 2], vec![9]]);
    }

    #[test]
    fn config_validation() {
        let mut c = WalkConfig::default();
        c.validate(10).unwrap();
        c.p = 0.0;
        assert!(c.validate(10).is_err());
        c.p = 1.0;
        c.rounds = 11;
        assert!(c.validate(10).is_err());
    }
}
