//! Two-stage schedule construction and hazard analysis.
//!
//! The decoder's per-sweep work is a sequence of (layer, block) steps on
//! two units: the global stage (GNPU) reads a-posteriori values and
//! produces Q values; the local stage (LNPU) produces new messages and
//! writes a-posteriori values back. Each unit executes at most one block
//! step per time step.
//!
//! *Baseline* runs each layer's global pass and then its local pass before
//! touching the next layer. *Pipelined* starts layer u+1's global pass
//! while layer u's local pass drains, inserting STALL steps into the
//! global stream where a read would otherwise land on a block column whose
//! updated value has not yet been written. Hazard timing is strict: a read
//! scheduled at the same step as the write sees the *old* value, so reads
//! must be placed strictly later than the writes they depend on.
//!
//! Executed schedules cover one sweep and are replayed every iteration
//! (the sweep boundary acts as a flush, which keeps early-termination
//! checks aligned between schedules). [`max_pipeline_depth`] additionally
//! analyzes the steady-state regime where the layer sequence wraps around
//! across sweeps and up to `w` layers are in flight at once.
//!
//! Layers of degree < 2 carry no extrinsic information and appear in no
//! schedule.

use crate::code::BlockTables;
use crate::decoder::{AppTrace, Decoder, DecoderConfig, LlrFrame, Schedule};
use crate::Result;

/// Processing unit of a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Gnpu,
    Lnpu,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Stage::Gnpu => f.write_str("GNPU"),
            Stage::Lnpu => f.write_str("LNPU"),
        }
    }
}

/// Work item of a slot: a block step, or a pipeline bubble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotOp {
    /// Process block `block` (position in the layer's valid-block table)
    /// of layer `layer`.
    Work { layer: usize, block: usize },
    Stall,
}

/// One stage's activity at one time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduleSlot {
    pub time: usize,
    pub stage: Stage,
    pub op: SlotOp,
}

/// Sequential schedule: per layer, all global steps then all local steps,
/// with nothing overlapped. `2·Σ d_u` slots over layers of degree ≥ 2, no
/// stalls.
pub fn baseline_schedule(tables: &BlockTables) -> Vec<ScheduleSlot> {
    let mut slots = Vec::with_capacity(2 * tables.total_blocks());
    let mut t = 0;
    for u in 0..tables.layer_count() {
        let d = tables.degree(u);
        if d < 2 {
            continue;
        }
        for b in 0..d {
            slots.push(ScheduleSlot { time: t + b, stage: Stage::Gnpu, op: SlotOp::Work { layer: u, block: b } });
        }
        for b in 0..d {
            slots.push(ScheduleSlot { time: t + d + b, stage: Stage::Lnpu, op: SlotOp::Work { layer: u, block: b } });
        }
        t += 2 * d;
    }
    slots
}

/// Overlapped schedule: the global stream runs the layers back to back,
/// each global step delayed past the last scheduled local write to its
/// block column (strictly), with STALL slots filling the gaps; each
/// layer's local pass starts once its global pass is complete and the
/// local stream is free.
pub fn pipelined_schedule(tables: &BlockTables) -> Vec<ScheduleSlot> {
    let mut slots = Vec::new();
    // Last scheduled local write time per block column.
    let mut last_write = vec![i64::MIN; tables.block_col_count()];
    let mut g_next: i64 = 0;
    let mut l_next: i64 = 0;
    for u in 0..tables.layer_count() {
        let d = tables.degree(u);
        if d < 2 {
            continue;
        }
        let cols = tables.block_cols(u);
        let mut g_last = 0;
        for b in 0..d {
            let need = last_write[cols[b]].saturating_add(1);
            let t = g_next.max(need);
            for stall_t in g_next..t {
                slots.push(ScheduleSlot {
                    time: stall_t as usize,
                    stage: Stage::Gnpu,
                    op: SlotOp::Stall,
                });
            }
            slots.push(ScheduleSlot {
                time: t as usize,
                stage: Stage::Gnpu,
                op: SlotOp::Work { layer: u, block: b },
            });
            g_last = t;
            g_next = t + 1;
        }
        let l_start = (g_last + 1).max(l_next);
        for b in 0..d {
            let t = l_start + b as i64;
            slots.push(ScheduleSlot {
                time: t as usize,
                stage: Stage::Lnpu,
                op: SlotOp::Work { layer: u, block: b },
            });
            last_write[cols[b]] = t;
        }
        l_next = l_start + d as i64;
    }
    slots
}

/// Number of time steps a schedule spans.
pub fn schedule_length(slots: &[ScheduleSlot]) -> usize {
    slots.iter().map(|s| s.time + 1).max().unwrap_or(0)
}

/// Number of STALL slots.
pub fn stall_count(slots: &[ScheduleSlot]) -> usize {
    slots.iter().filter(|s| s.op == SlotOp::Stall).count()
}

/// Renders a schedule as CSV with columns `time,stage,layer,block`; STALL
/// slots carry `STALL,-` in the last two columns. Rows are sorted by time
/// with the global stage first within a step (execution order: the read
/// sees values as of the step's start).
pub fn schedule_to_csv(slots: &[ScheduleSlot]) -> String {
    let mut sorted: Vec<&ScheduleSlot> = slots.iter().collect();
    sorted.sort_by_key(|s| (s.time, s.stage == Stage::Lnpu));
    let mut out = String::from("time,stage,layer,block\n");
    for s in sorted {
        match s.op {
            SlotOp::Work { layer, block } => {
                out.push_str(&format!("{},{},{layer},{block}\n", s.time, s.stage));
            }
            SlotOp::Stall => {
                out.push_str(&format!("{},{},STALL,-\n", s.time, s.stage));
            }
        }
    }
    out
}

/// A read-after-write hazard: `reader_layer`, entering the pipeline
/// `distance` layers after `writer_layer`, would read `block_col` at or
/// before the writer's local stage writes it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HazardConflict {
    pub writer_layer: usize,
    pub reader_layer: usize,
    pub block_col: usize,
    pub distance: usize,
}

/// Result of [`max_pipeline_depth`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HazardReport {
    /// Largest number of layers that can be in flight with no stalls.
    pub max_depth: usize,
    /// The blocking pairs for window size `max_depth + 1`; empty when the
    /// depth already spans every schedulable layer.
    pub conflicts: Vec<HazardConflict>,
}

/// Steady-state in-flight window model over the schedulable (degree ≥ 2)
/// layers, treated cyclically across sweep boundaries: with `w` layers in
/// flight, the global stream runs the layers back to back while the local
/// stream trails `w − 1` layers behind. Window size `w` is hazard-free iff
/// every read of a shared block column lands strictly after the trailing
/// write. Brute-forces `w = 1..` upward; feasibility is monotone because
/// growing the window only moves reads earlier relative to writes.
pub fn max_pipeline_depth(tables: &BlockTables) -> HazardReport {
    let seq: Vec<usize> =
        (0..tables.layer_count()).filter(|&u| tables.degree(u) >= 2).collect();
    if seq.is_empty() {
        return HazardReport { max_depth: tables.layer_count(), conflicts: Vec::new() };
    }
    let count = seq.len();

    // conflicts_for(w): all (writer u, reader u+δ, column, δ) pairs whose
    // read would not land strictly after the write with w layers in
    // flight.
    let conflicts_for = |w: usize| -> Vec<HazardConflict> {
        let mut out = Vec::new();
        for start in 0..count {
            // Cumulative global-stream offsets S of the layers following
            // `start`, unrolled across the wrap.
            let mut offsets = vec![0i64; w];
            for t in 1..w {
                offsets[t] = offsets[t - 1] + tables.degree(seq[(start + t - 1) % count]) as i64;
            }
            let writer = seq[start];
            let w_cols = tables.block_cols(writer);
            // The writer's local step for position p runs at offsets[w-1] + p.
            for delta in 1..w {
                let reader = seq[(start + delta) % count];
                let r_cols = tables.block_cols(reader);
                for (wp, &col) in w_cols.iter().enumerate() {
                    if let Ok(rp) = r_cols.binary_search(&col) {
                        let read_t = offsets[delta] + rp as i64;
                        let write_t = offsets[w - 1] + wp as i64;
                        if read_t <= write_t {
                            out.push(HazardConflict {
                                writer_layer: writer,
                                reader_layer: reader,
                                block_col: col,
                                distance: delta,
                            });
                        }
                    }
                }
            }
        }
        out
    };

    let mut max_depth = 1;
    while max_depth < count && conflicts_for(max_depth + 1).is_empty() {
        max_depth += 1;
    }
    let conflicts = if max_depth < count { conflicts_for(max_depth + 1) } else { Vec::new() };
    HazardReport { max_depth, conflicts }
}

/// Where two schedule executions first disagree.
#[derive(Debug, Clone, PartialEq)]
pub enum EquivalenceOutcome {
    Equal,
    /// The executions retired a different number of layer snapshots.
    TraceLengthMismatch { baseline: usize, pipelined: usize },
    /// First differing a-posteriori value.
    Diverged {
        snapshot: usize,
        iteration: usize,
        layer: usize,
        column: usize,
        baseline: f64,
        pipelined: f64,
    },
}

/// Decodes `frame` under both schedules with identical configuration and
/// compares the per-layer a-posteriori traces and hard decisions exactly.
pub fn check_schedule_equivalence(
    frame: &LlrFrame,
    tables: &BlockTables,
    cfg: &DecoderConfig,
) -> Result<EquivalenceOutcome> {
    let mut base_trace = AppTrace::default();
    let mut pipe_trace = AppTrace::default();
    let base_cfg = DecoderConfig { schedule: Schedule::Baseline, ..cfg.clone() };
    let pipe_cfg = DecoderConfig { schedule: Schedule::Pipelined, ..cfg.clone() };
    let base_res = Decoder::new(tables, base_cfg)?.decode_traced(frame, &mut base_trace)?;
    let pipe_res = Decoder::new(tables, pipe_cfg)?.decode_traced(frame, &mut pipe_trace)?;

    if base_trace.snapshots.len() != pipe_trace.snapshots.len() {
        return Ok(EquivalenceOutcome::TraceLengthMismatch {
            baseline: base_trace.snapshots.len(),
            pipelined: pipe_trace.snapshots.len(),
        });
    }
    for (idx, ((b_it, b_layer, b_app), (p_it, p_layer, p_app))) in
        base_trace.snapshots.iter().zip(&pipe_trace.snapshots).enumerate()
    {
        if (b_it, b_layer) != (p_it, p_layer) {
            return Ok(EquivalenceOutcome::TraceLengthMismatch {
                baseline: base_trace.snapshots.len(),
                pipelined: pipe_trace.snapshots.len(),
            });
        }
        for (j, (vb, vp)) in b_app.iter().zip(p_app).enumerate() {
            if vb.to_bits() != vp.to_bits() {
                return Ok(EquivalenceOutcome::Diverged {
                    snapshot: idx,
                    iteration: *b_it,
                    layer: *b_layer,
                    column: j,
                    baseline: *vb,
                    pipelined: *vp,
                });
            }
        }
    }
    debug_assert_eq!(base_res.hard_bits, pipe_res.hard_bits);
    debug_assert_eq!(base_res.iterations_used, pipe_res.iterations_used);
    Ok(EquivalenceOutcome::Equal)
}

/// True iff baseline and pipelined execution of `frame` agree exactly at
/// every layer boundary.
pub fn verify_schedule_equivalence(
    frame: &LlrFrame,
    tables: &BlockTables,
    cfg: &DecoderConfig,
) -> Result<bool> {
    Ok(matches!(check_schedule_equivalence(frame, tables, cfg)?, EquivalenceOutcome::Equal))
}
