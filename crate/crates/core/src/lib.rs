//! Distributed-style second-order random walk simulation: graph storage and
//! partitioning, synthetic workload generation, a superstep message-passing
//! engine, walk sampling mathematics, and the communication-reducing
//! algorithm variants built on top.

pub mod algo;
pub mod engine;
pub mod error;
pub mod graph;
pub mod rmat;
pub mod walk;

pub use algo::{run_walks, RunOutput, RunSummary, TriggerRecord, Variant};
pub use engine::{Message, MessageKind, SuperstepMetrics, VertexContext, VertexProgram};
pub use graph::{Graph, PartitionedGraph, VertexId};
pub use walk::{Walk, WalkConfig};
