//! Vertex programs for the walk algorithm variants, plus the multi-round
//! driver.
//!
//! All exact variants (base, local, switch, cache) draw every sample from
//! the RNG stream keyed by (seed, start, pass, step), so they produce
//! bit-identical walks under a fixed seed no matter which vertex or worker
//! executes a step, and no matter how many rounds the starts are split into.

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::engine::{
    self, Delivery, Message, MessageKind, SuperstepMetrics, VertexContext, VertexProgram,
};
use crate::error::{EngineError, WalkError};
use crate::graph::{PartitionedGraph, VertexId};
use crate::walk::rng::step_rng;
use crate::walk::{transition_weights, AliasTable, Walk, WalkConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// On-demand transition probabilities, neighbor lists always messaged.
    Base,
    /// Same-worker neighbor lists read directly, no payload transferred.
    Local,
    /// Popular-to-unpopular moves request the small side's neighbor list
    /// and compute the step on its behalf, costing an extra superstep.
    Switch,
    /// Remote workers cache popular vertices' neighbor lists; repeat sends
    /// shrink to a sentinel.
    Cache,
    /// Cache plus first-order sampling at popular vertices when the
    /// transition-probability bounds collapse below epsilon.
    Approx,
}

impl Variant {
    pub fn parse(name: &str) -> Option<Variant> {
        match name.to_ascii_lowercase().as_str() {
            "base" => Some(Variant::Base),
            "local" => Some(Variant::Local),
            "switch" => Some(Variant::Switch),
            "cache" => Some(Variant::Cache),
            "approx" => Some(Variant::Approx),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Base => "base",
            Variant::Local => "local",
            Variant::Switch => "switch",
            Variant::Cache => "cache",
            Variant::Approx => "approx",
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("walk for start {start} left step {step} unwritten")]
    IncompleteWalk { start: u64, step: usize },
}

/// One approximate sampling decision.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TriggerRecord {
    pub superstep: usize,
    pub vertex: u64,
    pub start: u64,
    pub step: usize,
    pub gap: f64,
}

/// Emit the trigger log as `superstep,vertex,gap` CSV.
pub fn write_trigger_csv<W: Write>(mut out: W, triggers: &[TriggerRecord]) -> std::io::Result<()> {
    writeln!(out, "superstep,vertex,gap")?;
    for t in triggers {
        writeln!(out, "{},{},{}", t.superstep, t.vertex, t.gap)?;
    }
    Ok(())
}

const UNWRITTEN: u64 = u64::MAX;

#[derive(Debug, Clone, Default)]
pub struct WalkValue {
    /// Recorded steps for the walk starting here; empty unless this vertex
    /// starts a walk in the current round (or has degree 0).
    steps: Vec<u64>,
    /// Walk starts with a switch reply outstanding at this vertex.
    pending_switch: HashSet<u64>,
}

#[derive(Debug, Default)]
pub struct WalkWorkerState {
    /// Popular vertex id -> its neighbor ids, cached at this worker.
    cache: HashMap<u64, HashSet<VertexId>>,
    /// Popular sender -> remote workers already holding its neighbor list.
    worker_sent: HashMap<u64, HashSet<usize>>,
    triggers: Vec<TriggerRecord>,
}

struct WalkProgram {
    config: WalkConfig,
    variant: Variant,
    pass: u64,
    /// Start vertices of the current round: [start_lo, start_hi).
    start_lo: u64,
    start_hi: u64,
    /// Vertices eligible for remote caching (degree and byte-cap admitted).
    cache_eligible: HashSet<u64>,
}

impl WalkProgram {
    fn popular(&self, degree: usize) -> bool {
        degree >= self.config.popular_threshold
    }

    /// Hand the walk context for sampling step `next_step` to `to`, after
    /// the move `from -> to`. `from_ids`/`from_weights` describe `from`'s
    /// out-edges; weights ride along only when a switch reply needs them.
    #[allow(clippy::too_many_arguments)]
    fn send_move(
        &self,
        ctx: &mut VertexContext<'_, WalkValue, WalkWorkerState>,
        start: VertexId,
        next_step: usize,
        from: VertexId,
        from_ids: &[VertexId],
        to: VertexId,
        to_degree: usize,
    ) -> Result<(), EngineError> {
        let from_degree = from_ids.len();
        let msg = |kind| Message::new(kind, start, from, next_step as u32);
        match self.variant {
            Variant::Local if ctx.worker_of(to)? == ctx.worker_of(from)? => {
                let mut m = msg(MessageKind::Neig);
                m.local_handoff = true;
                ctx.send(to, m)
            }
            Variant::Switch
                if next_step < self.config.walk_length
                    && self.popular(from_degree)
                    && !self.popular(to_degree)
                    && ctx.vid == from =>
            {
                // ask the small side for its list; remember the walk so the
                // reply is recognized as ours to compute
                ctx.value.pending_switch.insert(start.0);
                ctx.send(to, msg(MessageKind::Req).with_payload(vec![from]))
            }
            Variant::Cache | Variant::Approx
                if self.cache_eligible.contains(&from.0)
                    && ctx.worker_of(to)? != ctx.worker_of(from)? =>
            {
                let dest_worker = ctx.worker_of(to)?;
                let first_send = ctx
                    .worker_state
                    .worker_sent
                    .entry(from.0)
                    .or_default()
                    .insert(dest_worker);
                if first_send {
                    ctx.send(to, msg(MessageKind::Neig).with_payload(from_ids.to_vec()))
                } else {
                    ctx.send(to, msg(MessageKind::NeigCached))
                }
            }
            _ => ctx.send(to, msg(MessageKind::Neig).with_payload(from_ids.to_vec())),
        }
    }

    /// Sample step `step` of walk `start` at `curr` (previous vertex
    /// `prev`), report it, and forward the context. `curr_neighbors` are
    /// `curr`'s out-edges; the executing vertex may be acting on `curr`'s
    /// behalf.
    #[allow(clippy::too_many_arguments)]
    fn advance(
        &self,
        ctx: &mut VertexContext<'_, WalkValue, WalkWorkerState>,
        start: VertexId,
        step: usize,
        prev: VertexId,
        prev_set: &HashSet<VertexId>,
        curr: VertexId,
        curr_neighbors: &[(VertexId, f64)],
    ) -> Result<(), EngineError> {
        let cfg = &self.config;
        let mut rng = step_rng(cfg.seed, start.0, self.pass, step as u64);
        let next = if let Some(gap) = self.approx_gap(prev_set.len(), curr_neighbors) {
            ctx.worker_state.triggers.push(TriggerRecord {
                superstep: ctx.superstep,
                vertex: curr.0,
                start: start.0,
                step,
                gap,
            });
            let weights: Vec<f64> = curr_neighbors.iter().map(|&(_, w)| w).collect();
            let table = AliasTable::new(&weights).map_err(|e| {
                ctx.protocol_violation(format!("static sampling failed: {e}"))
            })?;
            curr_neighbors[table.sample(&mut rng)].0
        } else {
            let weights = transition_weights(curr_neighbors, prev, prev_set, cfg.p, cfg.q)
                .map_err(|e| ctx.protocol_violation(format!("transition weights: {e}")))?;
            let table = AliasTable::new(&weights)
                .map_err(|e| ctx.protocol_violation(format!("alias build: {e}")))?;
            curr_neighbors[table.sample(&mut rng)].0
        };

        ctx.send(
            start,
            Message::new(MessageKind::Step, start, curr, step as u32)
                .with_payload(vec![next]),
        )?;
        if step + 1 < cfg.walk_length {
            let from_ids: Vec<VertexId> = curr_neighbors.iter().map(|&(x, _)| x).collect();
            let to_degree = ctx.graph().degree(next);
            self.send_move(ctx, start, step + 1, curr, &from_ids, next, to_degree)?;
        }
        Ok(())
    }

    /// Bound gap when the approximate variant may sample first-order at
    /// `curr`: popular current vertex reached from an unpopular one.
    fn approx_gap(&self, prev_degree: usize, curr_neighbors: &[(VertexId, f64)]) -> Option<f64> {
        if self.variant != Variant::Approx {
            return None;
        }
        let d_v = curr_neighbors.len();
        if !self.popular(d_v) || self.popular(prev_degree) || prev_degree == 0 {
            return None;
        }
        let (mut w_min, mut w_max) = (f64::INFINITY, 0.0f64);
        for &(_, w) in curr_neighbors {
            w_min = w_min.min(w);
            w_max = w_max.max(w);
        }
        let bounds =
            crate::walk::approx_bounds(prev_degree, d_v, self.config.p, self.config.q, w_min, w_max)
                .ok()?;
        (bounds.gap() < self.config.epsilon).then(|| bounds.gap())
    }

    /// Resolve the previous vertex's neighbor-id set for an incoming
    /// context message.
    fn resolve_prev_set(
        &self,
        ctx: &VertexContext<'_, WalkValue, WalkWorkerState>,
        d: &Delivery,
    ) -> Result<HashSet<VertexId>, EngineError> {
        let sender = d.msg.sender;
        if d.msg.local_handoff {
            return ctx
                .read_local_neighbors(sender)
                .map(|l| l.iter().map(|&(x, _)| x).collect())
                .ok_or_else(|| {
                    ctx.protocol_violation(format!("local handoff from non-local {sender}"))
                });
        }
        match d.msg.kind {
            MessageKind::Neig => Ok(d.msg.payload.iter().copied().collect()),
            MessageKind::NeigCached => ctx
                .worker_state
                .cache
                .get(&sender.0)
                .cloned()
                .ok_or_else(|| {
                    ctx.protocol_violation(format!("no cache entry for popular vertex {sender}"))
                }),
            _ => Err(ctx.protocol_violation("not a neighbor-context message")),
        }
    }
}

impl VertexProgram for WalkProgram {
    type Value = WalkValue;
    type WorkerState = WalkWorkerState;

    fn init_value(&self, _vid: VertexId) -> WalkValue {
        WalkValue::default()
    }

    fn init_worker(&self, _worker: usize) -> WalkWorkerState {
        WalkWorkerState::default()
    }

    fn before_superstep(
        &self,
        worker: usize,
        _superstep: usize,
        state: &mut WalkWorkerState,
        delivered: &[Delivery],
        pg: &PartitionedGraph,
    ) -> Result<(), EngineError> {
        if !matches!(self.variant, Variant::Cache | Variant::Approx) {
            return Ok(());
        }
        // admit arriving popular neighbor lists before any compute runs, so
        // sentinels delivered in the same superstep always resolve
        for d in delivered {
            if d.msg.kind == MessageKind::Neig
                && !d.msg.local_handoff
                && self.cache_eligible.contains(&d.msg.sender.0)
                && pg.owner(d.msg.sender) != worker
            {
                state
                    .cache
                    .entry(d.msg.sender.0)
                    .or_insert_with(|| d.msg.payload.iter().copied().collect());
            }
        }
        Ok(())
    }

    fn compute(
        &self,
        ctx: &mut VertexContext<'_, WalkValue, WalkWorkerState>,
        messages: &[Delivery],
    ) -> Result<(), EngineError> {
        let l = self.config.walk_length;
        if ctx.superstep == 0 {
            let start = ctx.vid;
            if (self.start_lo..self.start_hi).contains(&start.0) {
                let neighbors = ctx.neighbors();
                if !neighbors.is_empty() {
                    let mut rng = step_rng(self.config.seed, start.0, self.pass, 0);
                    let weights: Vec<f64> = neighbors.iter().map(|&(_, w)| w).collect();
                    let table = AliasTable::new(&weights)
                        .map_err(|e| ctx.protocol_violation(format!("alias build: {e}")))?;
                    let first = neighbors[table.sample(&mut rng)].0;
                    ctx.value.steps = vec![UNWRITTEN; l];
                    ctx.value.steps[0] = first.0;
                    let from_ids: Vec<VertexId> = neighbors.iter().map(|&(x, _)| x).collect();
                    let to_degree = ctx.graph().degree(first);
                    self.send_move(ctx, start, 1, start, &from_ids, first, to_degree)?;
                }
            }
            ctx.vote_to_halt();
            return Ok(());
        }

        for i in 0..messages.len() {
            let d = &messages[i];
            match d.msg.kind {
                MessageKind::Step => {
                    let step = d.msg.step as usize;
                    let superstep = ctx.superstep;
                    let slot = ctx.value.steps.get_mut(step).ok_or_else(|| {
                        EngineError::Protocol {
                            vertex: d.dest.0,
                            superstep,
                            reason: format!(
                                "step report for unknown walk start {}",
                                d.msg.start
                            ),
                        }
                    })?;
                    *slot = d.msg.payload[0].0;
                }
                MessageKind::Req => {
                    // reply with our neighbor list (ids and weights) so the
                    // requester can compute the next step on our behalf
                    let requester = d.msg.payload[0];
                    let neighbors = ctx.neighbors();
                    let mut reply = Message::new(
                        MessageKind::Neig,
                        d.msg.start,
                        ctx.vid,
                        d.msg.step,
                    )
                    .with_payload(neighbors.iter().map(|&(x, _)| x).collect());
                    reply.payload_weights = neighbors.iter().map(|&(_, w)| w).collect();
                    ctx.send(requester, reply)?;
                }
                MessageKind::Neig | MessageKind::NeigCached => {
                    let step = d.msg.step as usize;
                    if step >= l {
                        continue;
                    }
                    if ctx.value.pending_switch.remove(&d.msg.start.0) {
                        // switch reply: compute at the sender's context with
                        // ourselves as the previous vertex
                        let curr = d.msg.sender;
                        let curr_neighbors: Vec<(VertexId, f64)> = d
                            .msg
                            .payload
                            .iter()
                            .zip(&d.msg.payload_weights)
                            .map(|(&x, &w)| (x, w))
                            .collect();
                        let prev_set: HashSet<VertexId> =
                            ctx.neighbors().iter().map(|&(x, _)| x).collect();
                        let prev = ctx.vid;
                        self.advance(ctx, d.msg.start, step, prev, &prev_set, curr, &curr_neighbors)?;
                    } else {
                        let prev_set = self.resolve_prev_set(ctx, d)?;
                        let curr = ctx.vid;
                        let curr_neighbors = ctx.neighbors();
                        let start = d.msg.start;
                        let prev = d.msg.sender;
                        self.advance(ctx, start, step, prev, &prev_set, curr, curr_neighbors)?;
                    }
                }
            }
        }
        ctx.vote_to_halt();
        Ok(())
    }
}

/// Summary of a full multi-pass, multi-round walk computation.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub variant: String,
    pub workers: usize,
    pub rounds: usize,
    pub passes: usize,
    pub engine_runs: usize,
    pub supersteps_per_run: Vec<usize>,
    pub peak_message_bytes: u64,
    pub wall_time_secs: f64,
}

pub struct RunOutput {
    /// All walks, ordered by (start, pass).
    pub walks: Vec<Walk>,
    /// Superstep metrics per engine run (one run per pass per round).
    pub runs: Vec<Vec<SuperstepMetrics>>,
    pub triggers: Vec<TriggerRecord>,
    pub summary: RunSummary,
}

/// Byte-cap-limited admission of popular vertices, largest degrees first.
fn cache_eligible_set(pg: &PartitionedGraph, config: &WalkConfig) -> HashSet<u64> {
    let mut popular: Vec<(usize, u64)> = pg
        .graph
        .vertices()
        .filter_map(|v| {
            let d = pg.graph.degree(v);
            (d >= config.popular_threshold).then_some((d, v.0))
        })
        .collect();
    popular.sort_unstable_by(|a, b| b.cmp(a));
    let mut bytes = 0u64;
    let mut eligible = HashSet::new();
    for (d, v) in popular {
        bytes += 8 * d as u64;
        if let Some(cap) = config.cache_cap_bytes {
            if bytes > cap {
                break;
            }
        }
        eligible.insert(v);
    }
    eligible
}

/// Run `variant` for every start vertex, `walks_per_vertex` passes, with the
/// starts split into `rounds` contiguous round sets. The concatenated output
/// is invariant in the round count because sampling is keyed by start vertex.
pub fn run_walks(
    pg: &PartitionedGraph,
    config: &WalkConfig,
    variant: Variant,
) -> Result<RunOutput, RunError> {
    let n = pg.graph.vertex_count();
    config.validate(n)?;
    let clock = Instant::now();
    let cache_eligible = cache_eligible_set(pg, config);
    let l = config.walk_length;
    let max_supersteps = 2 * l + 8;
    let adjacency_bytes: u64 = pg
        .graph
        .vertices()
        .map(|v| 16 * pg.graph.degree(v) as u64)
        .sum();

    let mut walks = Vec::new();
    let mut runs = Vec::new();
    let mut triggers = Vec::new();
    let mut supersteps_per_run = Vec::new();
    let mut peak_message_bytes = 0u64;

    for pass in 0..config.walks_per_vertex as u64 {
        for round in 0..config.rounds as u64 {
            let start_lo = round * n / config.rounds as u64;
            let start_hi = (round + 1) * n / config.rounds as u64;
            let program = WalkProgram {
                config: *config,
                variant,
                pass,
                start_lo,
                start_hi,
                cache_eligible: cache_eligible.clone(),
            };
            let base_bytes = adjacency_bytes + 8 * l as u64 * (start_hi - start_lo);
            let result = engine::run(&program, pg, max_supersteps, base_bytes)?;
            for m in &result.metrics {
                peak_message_bytes = peak_message_bytes.max(m.total_message_bytes());
            }
            supersteps_per_run.push(result.metrics.len());
            runs.push(result.metrics);
            for state in result.worker_states {
                triggers.extend(state.triggers);
            }
            for start in start_lo..start_hi {
                let value = &result.values[start as usize];
                let mut steps = Vec::with_capacity(value.steps.len());
                for (i, &s) in value.steps.iter().enumerate() {
                    if s == UNWRITTEN {
                        return Err(RunError::IncompleteWalk { start, step: i });
                    }
                    steps.push(VertexId(s));
                }
                walks.push(Walk {
                    start: VertexId(start),
                    pass,
                    steps,
                });
            }
        }
    }

    walks.sort_by_key(|w| (w.start, w.pass));
    triggers.sort_by_key(|t| (t.superstep, t.vertex, t.start));
    let summary = RunSummary {
        variant: variant.name().to_string(),
        workers: pg.num_workers(),
        rounds: config.rounds,
        passes: config.walks_per_vertex,
        engine_runs: runs.len(),
        supersteps_per_run,
        peak_message_bytes,
        wall_time_secs: clock.elapsed().as_secs_f64(),
    };
    Ok(RunOutput {
        walks,
        runs,
        triggers,
        summary,
    })
}
