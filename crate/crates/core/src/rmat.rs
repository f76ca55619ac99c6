//! Recursive-matrix (RMAT) synthetic graph generation.
//!
//! Each edge placement descends K levels of the 2^K x 2^K adjacency matrix,
//! picking a quadrant per level with probabilities (a, b, c, d). Self-loops
//! and duplicate pairs are dropped after symmetrization, so the achieved
//! edge count can fall below the requested number of placements.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::RmatError;
use crate::graph::Graph;

pub const MAX_SCALE: u32 = 34;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmatParams {
    /// log2 of the vertex count.
    pub scale: u32,
    /// Number of edge placements to draw.
    pub target_edges: u64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub seed: u64,
}

impl RmatParams {
    pub fn validate(&self) -> Result<(), RmatError> {
        if self.scale > MAX_SCALE {
            return Err(RmatError::ScaleTooLarge(self.scale));
        }
        let quads = [self.a, self.b, self.c, self.d];
        let sum: f64 = quads.iter().sum();
        if quads.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > 1e-9 {
            return Err(RmatError::BadQuadrants {
                a: self.a,
                b: self.b,
                c: self.c,
                d: self.d,
            });
        }
        Ok(())
    }
}

/// The workload families used throughout: uniform Erdos-Renyi-like graphs
/// with average degree 10, a WeChat-like skewed profile with average degree
/// 100, and a tunable-skew family where the bottom-right quadrant receives
/// `S` times the mass of the top-left one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    Er { scale: u32 },
    Wec { scale: u32 },
    Skew { s: f64, scale: u32 },
}

impl Preset {
    pub fn parse(name: &str, size_param: f64, scale: Option<u32>) -> Result<Preset, RmatError> {
        match name.to_ascii_lowercase().as_str() {
            "er" => Ok(Preset::Er {
                scale: scale.unwrap_or(size_param as u32),
            }),
            "wec" => Ok(Preset::Wec {
                scale: scale.unwrap_or(size_param as u32),
            }),
            "skew" => Ok(Preset::Skew {
                s: size_param,
                // the reference skew family is defined at scale 22
                scale: scale.unwrap_or(22),
            }),
            other => Err(RmatError::UnknownPreset(other.to_string())),
        }
    }

    pub fn params(&self, seed: u64) -> Result<RmatParams, RmatError> {
        let params = match *self {
            // average degree 10: 10 * 2^K endpoints = 5 * 2^K placements
            Preset::Er { scale } => RmatParams {
                scale,
                target_edges: 5u64.checked_shl(scale).unwrap_or(u64::MAX),
                a: 0.25,
                b: 0.25,
                c: 0.25,
                d: 0.25,
                seed,
            },
            // average degree 100
            Preset::Wec { scale } => RmatParams {
                scale,
                target_edges: 50u64.checked_shl(scale).unwrap_or(u64::MAX),
                a: 0.18,
                b: 0.25,
                c: 0.25,
                d: 0.32,
                seed,
            },
            Preset::Skew { s, scale } => {
                if s < 1.0 {
                    return Err(RmatError::BadSkew(s));
                }
                let a = 0.5 / (1.0 + s);
                RmatParams {
                    scale,
                    target_edges: 50u64.checked_shl(scale).unwrap_or(u64::MAX),
                    a,
                    b: 0.25,
                    c: 0.25,
                    d: s * a,
                    seed,
                }
            }
        };
        params.validate()?;
        Ok(params)
    }
}

/// Summary of an achieved generation, written alongside emitted edge lists.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenMetadata {
    pub vertices: u64,
    pub edges: u64,
    pub max_degree: usize,
    pub requested_placements: u64,
}

pub fn generate(params: &RmatParams) -> Result<(Graph, GenMetadata), RmatError> {
    params.validate()?;
    let n = 1u64 << params.scale;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let unit = Uniform::new(0.0f64, 1.0);
    let ab = params.a + params.b;
    let abc = ab + params.c;

    let mut edges = Vec::with_capacity(params.target_edges as usize);
    for _ in 0..params.target_edges {
        let mut row = 0u64;
        let mut col = 0u64;
        for _ in 0..params.scale {
            let r = unit.sample(&mut rng);
            let (rbit, cbit) = if r < params.a {
                (0, 0)
            } else if r < ab {
                (0, 1)
            } else if r < abc {
                (1, 0)
            } else {
                (1, 1)
            };
            row = (row << 1) | rbit;
            col = (col << 1) | cbit;
        }
        edges.push((row, col, 1.0));
    }

    let graph = Graph::from_edges(n, edges);
    let meta = GenMetadata {
        vertices: graph.vertex_count(),
        edges: graph.edge_count(),
        max_degree: graph.max_degree(),
        requested_placements: params.target_edges,
    };
    Ok((graph, meta))
}
