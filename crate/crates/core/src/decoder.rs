//! Row-layered normalized min-sum decoding.
//!
//! One iteration sweeps the layers in order. For each valid block `b` of
//! layer `u` (block column `j`, shift `s`) and each of the layer's z check
//! rows, the *global* node-processing step computes the variable-to-check
//! value `Q = γ_j − R_old`, and the *local* step computes the new
//! check-to-variable message `R_new = α · Π_{b′≠b} sign(Q_{b′}) ·
//! min_{b′≠b} |Q_{b′}|`, after which the a-posteriori value is updated as
//! `γ_j ← Q + R_new`. The min/sign reduction is accumulated in one pass
//! over the row as (min1, min2, argmin, sign-product) running state.
//!
//! The decoder does not hard-code the sweep order: it executes a list of
//! [`ScheduleSlot`](crate::pipeline::ScheduleSlot)s produced by
//! [`crate::pipeline`]. The baseline schedule runs each layer's global pass
//! and then its local pass back to back; the pipelined schedule overlaps
//! the next layer's global pass with the current layer's local pass,
//! stalling where a read-after-write hazard requires it. Both must produce
//! bit-identical results; `verify_schedule_equivalence` checks exactly
//! that.
//!
//! Conventions, pinned for reproducible fixtures: positive LLR means bit 0
//! is more likely; the hard decision is 1 iff γ < 0 (a tie γ = 0 decides
//! 0); sign(0) = +1 in the reduction; equal magnitudes keep the first
//! occurrence as argmin; stored γ and R values are saturated to
//! ±`llr_clamp` after every update; R messages start at 0, so the first
//! global pass passes channel values through.

use crate::code::{BlockTables, ParityCheckMatrix};
use crate::pipeline::{self, ScheduleSlot, SlotOp, Stage};
use crate::{Error, Result};
use std::io::Write;

/// One frame of channel LLRs tagged with its stream position.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrFrame {
    pub sequence_id: u64,
    pub values: Vec<f64>,
}

impl LlrFrame {
    pub fn new(sequence_id: u64, values: Vec<f64>) -> Self {
        LlrFrame { sequence_id, values }
    }
}

/// Which slot list drives the decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Schedule {
    #[default]
    Baseline,
    Pipelined,
}

impl std::fmt::Display for Schedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Schedule::Baseline => f.write_str("baseline"),
            Schedule::Pipelined => f.write_str("pipelined"),
        }
    }
}

/// Decoder parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderConfig {
    /// Maximum decoding sweeps over all layers.
    pub max_iterations: usize,
    /// Min-sum normalization factor in (0, 1].
    pub alpha: f64,
    /// Stop at an iteration boundary once the syndrome is satisfied.
    pub early_termination: bool,
    /// Execution order of the per-block steps.
    pub schedule: Schedule,
    /// Saturation bound for stored γ and R values.
    pub llr_clamp: f64,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            max_iterations: 10,
            alpha: 0.75,
            early_termination: true,
            schedule: Schedule::Baseline,
            llr_clamp: 63.75,
        }
    }
}

impl DecoderConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidInput("max_iterations must be ≥ 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "alpha must be in (0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.llr_clamp > 0.0 && self.llr_clamp.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "llr_clamp must be positive and finite, got {}",
                self.llr_clamp
            )));
        }
        Ok(())
    }
}

/// Decoding outcome for one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeResult {
    pub sequence_id: u64,
    /// Hard decisions, one byte per code bit (0 or 1).
    pub hard_bits: Vec<u8>,
    /// Sweeps actually executed (≤ max_iterations).
    pub iterations_used: usize,
    /// True iff the hard decisions satisfy every parity check.
    pub syndrome_ok: bool,
}

/// Working values of a decode in progress: the accumulated a-posteriori
/// LLRs and the stored check-to-variable messages, laid out per layer and
/// valid block.
#[derive(Debug, Clone)]
pub struct DecoderState {
    app: Vec<f64>,
    messages: Vec<f64>,
    iteration: usize,
}

impl DecoderState {
    /// A-posteriori LLRs γ, one per code bit.
    pub fn app(&self) -> &[f64] {
        &self.app
    }

    /// All stored R messages (z per valid block, layers concatenated).
    pub fn messages(&self) -> &[f64] {
        &self.messages
    }

    /// Sweeps completed so far.
    pub fn iteration(&self) -> usize {
        self.iteration
    }
}

/// Observer of decoding progress, for golden traces and state dumps. All
/// methods have empty defaults.
pub trait TraceSink {
    /// Called after the last local-step update of `layer` in `iteration`
    /// (0-based), when the layer's writes for this sweep have retired.
    fn layer_retired(&mut self, _iteration: usize, _layer: usize, _app: &[f64]) {}

    /// Called once per check row of a retiring layer with the completed
    /// min/sign reduction state. `row` is the check-row slot in `0..z`.
    fn reduction_state(
        &mut self,
        _iteration: usize,
        _layer: usize,
        _row: usize,
        _min1: f64,
        _min2: f64,
        _sign_product: f64,
    ) {
    }
}

/// Sink that discards everything.
pub struct NullSink;
impl TraceSink for NullSink {}

/// Sink that records the full per-layer APP trace for exact comparison.
#[derive(Debug, Default, Clone)]
pub struct AppTrace {
    /// One entry per retired layer: (iteration, layer, app snapshot).
    pub snapshots: Vec<(usize, usize, Vec<f64>)>,
}

impl TraceSink for AppTrace {
    fn layer_retired(&mut self, iteration: usize, layer: usize, app: &[f64]) {
        self.snapshots.push((iteration, layer, app.to_vec()));
    }
}

/// Sink that writes the debug state-dump CSV. Columns are
/// `iteration,layer,block,min1,min2,sign_product`, one row per check row
/// of each retiring layer (the `block` column holds the check-row slot,
/// the index the reduction state is keyed by).
pub struct StateDumpWriter<W: Write> {
    out: W,
    error: Option<std::io::Error>,
}

impl<W: Write> StateDumpWriter<W> {
    pub fn new(mut out: W) -> Self {
        let error = writeln!(out, "iteration,layer,block,min1,min2,sign_product").err();
        StateDumpWriter { out, error }
    }

    /// First I/O error hit while writing, if any.
    pub fn finish(self) -> std::io::Result<()> {
        match self.error {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

impl<W: Write> TraceSink for StateDumpWriter<W> {
    fn reduction_state(
        &mut self,
        iteration: usize,
        layer: usize,
        row: usize,
        min1: f64,
        min2: f64,
        sign_product: f64,
    ) {
        if self.error.is_none() {
            if let Err(e) = writeln!(
                self.out,
                "{iteration},{layer},{row},{min1},{min2},{}",
                if sign_product < 0.0 { -1 } else { 1 }
            ) {
                self.error = Some(e);
            }
        }
    }
}

/// Running min/sign reduction over one check row: smallest and
/// second-smallest |Q|, the block index of the smallest (first occurrence
/// on ties), and the product of signs with sign(0) = +1.
#[derive(Debug, Clone, Copy)]
struct Reduction {
    min1: f64,
    min2: f64,
    argmin: usize,
    sign: f64,
}

impl Reduction {
    const NEW: Reduction = Reduction { min1: f64::INFINITY, min2: f64::INFINITY, argmin: 0, sign: 1.0 };

    #[inline]
    fn fold(&mut self, block: usize, q: f64) {
        let mag = q.abs();
        if mag < self.min1 {
            self.min2 = self.min1;
            self.min1 = mag;
            self.argmin = block;
        } else if mag < self.min2 {
            self.min2 = mag;
        }
        if q < 0.0 {
            self.sign = -self.sign;
        }
    }

    /// Normalized min-sum output for `block`, excluding its own
    /// contribution.
    #[inline]
    fn exclude(&self, block: usize, q: f64, alpha: f64) -> f64 {
        let mag = if self.argmin == block { self.min2 } else { self.min1 };
        let sign = if q < 0.0 { -self.sign } else { self.sign };
        let val = alpha * mag;
        if sign < 0.0 {
            -val
        } else {
            val
        }
    }
}

/// Global node-processing step for one block: `q[r] = app[(s + r) mod z] −
/// r_old[r]`. `app_block` is the z-wide slice of the block's column range.
pub fn gnpu_step(app_block: &[f64], r_old: &[f64], shift: u32) -> Vec<f64> {
    let z = app_block.len();
    debug_assert_eq!(r_old.len(), z);
    (0..z)
        .map(|r| {
            let mut idx = shift as usize + r;
            if idx >= z {
                idx -= z;
            }
            app_block[idx] - r_old[r]
        })
        .collect()
}

/// Local node-processing step for one check row: for each position, the
/// normalized min-sum of the *other* positions. Requires at least two
/// inputs; a shorter row carries no extrinsic information.
pub fn lnpu_step(q_row: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if q_row.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "check row degree {} below 2: no extrinsic information",
            q_row.len()
        )));
    }
    let mut red = Reduction::NEW;
    for (b, &q) in q_row.iter().enumerate() {
        red.fold(b, q);
    }
    Ok(q_row.iter().enumerate().map(|(b, &q)| red.exclude(b, q, alpha)).collect())
}

/// True iff `hard_bits` satisfies every parity check of `h`.
pub fn syndrome_check(hard_bits: &[u8], h: &ParityCheckMatrix) -> bool {
    h.parity_ok(hard_bits)
}

/// Hard decisions from a-posteriori LLRs: 1 iff the value is negative
/// (ties decide 0).
pub fn hard_bits_from_app(app: &[f64]) -> Vec<u8> {
    app.iter().map(|&g| u8::from(g < 0.0)).collect()
}

/// Flattened executable step.
#[derive(Debug, Clone, Copy)]
struct Op {
    stage: Stage,
    layer: u32,
    block: u32,
    col_base: u32,
    shift: u32,
    /// Offset of this block's z messages (and q values).
    msg_off: u32,
    /// Last local step of its layer in the sweep: fire trace callbacks.
    retire: bool,
}

/// A reusable decoder for one code and configuration. Owns its working
/// state; independent instances may run on different threads.
pub struct Decoder<'a> {
    tables: &'a BlockTables,
    cfg: DecoderConfig,
    ops: Vec<Op>,
    state: DecoderState,
    /// q values of in-flight blocks, indexed like `state.messages`.
    q: Vec<f64>,
    /// Per-layer, per-row reduction states.
    red: Vec<Reduction>,
}

impl<'a> Decoder<'a> {
    /// Builds a decoder using the schedule selected by `cfg.schedule`.
    /// Layers of degree < 2 are left out of the schedule (they contribute
    /// no extrinsic information) with a warning.
    pub fn new(tables: &'a BlockTables, cfg: DecoderConfig) -> Result<Self> {
        let slots = match cfg.schedule {
            Schedule::Baseline => pipeline::baseline_schedule(tables),
            Schedule::Pipelined => pipeline::pipelined_schedule(tables),
        };
        Self::with_slots(tables, cfg, &slots)
    }

    /// Builds a decoder driven by an explicit slot list. The list must
    /// schedule each valid block of every layer of degree ≥ 2 exactly once
    /// per stage, in ascending block order per (layer, stage), with every
    /// global step of a layer preceding all of its local steps. Cross-layer
    /// interleaving is unrestricted — that is what schedules differ in.
    pub fn with_slots(
        tables: &'a BlockTables,
        cfg: DecoderConfig,
        slots: &[ScheduleSlot],
    ) -> Result<Self> {
        cfg.validate()?;
        for u in tables.degenerate_layers() {
            log::warn!(
                "layer {u} has degree {} and is skipped: no extrinsic information",
                tables.degree(u)
            );
        }
        let z = tables.z();
        let layer_count = tables.layer_count();
        let mut layer_off = Vec::with_capacity(layer_count);
        let mut total = 0usize;
        for u in 0..layer_count {
            layer_off.push(total * z);
            total += tables.degree(u);
        }

        let ops = Self::flatten(tables, &layer_off, slots)?;
        Ok(Decoder {
            tables,
            cfg,
            ops,
            state: DecoderState {
                app: vec![0.0; tables.n()],
                messages: vec![0.0; total * z],
                iteration: 0,
            },
            q: vec![0.0; total * z],
            red: vec![Reduction::NEW; layer_count * z],
        })
    }

    fn flatten(
        tables: &BlockTables,
        layer_off: &[usize],
        slots: &[ScheduleSlot],
    ) -> Result<Vec<Op>> {
        let z = tables.z();
        let mut work: Vec<&ScheduleSlot> = slots
            .iter()
            .filter(|s| matches!(s.op, SlotOp::Work { .. }))
            .collect();
        // Same-step semantics: a global read co-scheduled with a local
        // write sees the value from the step's start, so global steps
        // execute first within a time step. Valid schedules place reads
        // strictly after the writes they depend on, making the tie-break
        // observable only for deliberately broken schedules.
        work.sort_by_key(|s| (s.time, matches!(s.stage, Stage::Lnpu)));

        let mut ops = Vec::with_capacity(work.len());
        for slot in work {
            let SlotOp::Work { layer, block } = slot.op else { unreachable!() };
            if layer >= tables.layer_count() || block >= tables.degree(layer) {
                return Err(Error::InvalidInput(format!(
                    "slot references layer {layer} block {block} outside the code's tables"
                )));
            }
            ops.push(Op {
                stage: slot.stage,
                layer: layer as u32,
                block: block as u32,
                col_base: (tables.block_cols(layer)[block] * z) as u32,
                shift: tables.shifts(layer)[block],
                msg_off: (layer_off[layer] + block * z) as u32,
                retire: false,
            });
        }

        // Validate coverage and ordering, and mark each layer's last local
        // step as the retire point.
        let mut last_lnpu: Vec<Option<usize>> = vec![None; tables.layer_count()];
        let mut next_block: Vec<[usize; 2]> = vec![[0, 0]; tables.layer_count()];
        let mut gnpu_done: Vec<bool> = vec![false; tables.layer_count()];
        for (idx, op) in ops.iter().enumerate() {
            let (u, b) = (op.layer as usize, op.block as usize);
            let d = tables.degree(u);
            if d < 2 {
                return Err(Error::InvalidInput(format!(
                    "schedule includes degenerate layer {u} (degree {d})"
                )));
            }
            let stage_idx = match op.stage {
                Stage::Gnpu => 0,
                Stage::Lnpu => 1,
            };
            if next_block[u][stage_idx] != b {
                return Err(Error::InvalidInput(format!(
                    "layer {u}: {:?} steps out of ascending block order",
                    op.stage
                )));
            }
            next_block[u][stage_idx] += 1;
            match op.stage {
                Stage::Gnpu => {
                    if next_block[u][0] == d {
                        gnpu_done[u] = true;
                    }
                }
                Stage::Lnpu => {
                    if !gnpu_done[u] {
                        return Err(Error::InvalidInput(format!(
                            "layer {u}: local step of block {b} before the layer's \
                             global pass completed"
                        )));
                    }
                    last_lnpu[u] = Some(idx);
                }
            }
        }
        for (u, counts) in next_block.iter().enumerate() {
            let d = tables.degree(u);
            let expected = if d < 2 { 0 } else { d };
            if counts[0] != expected || counts[1] != expected {
                return Err(Error::InvalidInput(format!(
                    "layer {u}: schedule covers {}/{} global and {}/{} local steps",
                    counts[0], expected, counts[1], expected
                )));
            }
        }
        for idx in last_lnpu.into_iter().flatten() {
            ops[idx].retire = true;
        }
        Ok(ops)
    }

    /// The code tables this decoder runs on.
    pub fn tables(&self) -> &BlockTables {
        self.tables
    }

    /// The active configuration.
    pub fn config(&self) -> &DecoderConfig {
        &self.cfg
    }

    /// Working state of the most recent decode.
    pub fn state(&self) -> &DecoderState {
        &self.state
    }

    /// Decodes one frame.
    pub fn decode(&mut self, frame: &LlrFrame) -> Result<DecodeResult> {
        self.decode_traced(frame, &mut NullSink)
    }

    /// Decodes one frame, reporting layer retirements and reduction states
    /// to `sink`.
    pub fn decode_traced(
        &mut self,
        frame: &LlrFrame,
        sink: &mut dyn TraceSink,
    ) -> Result<DecodeResult> {
        let n = self.tables.n();
        if frame.values.len() != n {
            return Err(Error::InvalidInput(format!(
                "frame {} has length {}, code expects n = {n}",
                frame.sequence_id,
                frame.values.len()
            )));
        }
        if let Some(v) = frame.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "frame {} contains non-finite LLR {v}",
                frame.sequence_id
            )));
        }

        self.state.app.copy_from_slice(&frame.values);
        self.state.messages.fill(0.0);
        self.state.iteration = 0;

        let mut converged = false;
        for it in 0..self.cfg.max_iterations {
            self.sweep(it, sink);
            self.state.iteration = it + 1;
            if self.cfg.early_termination && self.syndrome_ok_from_app() {
                converged = true;
                break;
            }
        }

        let hard_bits = hard_bits_from_app(&self.state.app);
        let syndrome_ok = if converged { true } else { self.syndrome_ok_from_app() };
        Ok(DecodeResult {
            sequence_id: frame.sequence_id,
            hard_bits,
            iterations_used: self.state.iteration,
            syndrome_ok,
        })
    }

    /// Executes one full sweep in the flattened schedule order.
    fn sweep(&mut self, iteration: usize, sink: &mut dyn TraceSink) {
        let z = self.tables.z();
        let alpha = self.cfg.alpha;
        let clamp = self.cfg.llr_clamp;
        for op in &self.ops {
            let off = op.msg_off as usize;
            let col_base = op.col_base as usize;
            let shift = op.shift as usize;
            let block = op.block as usize;
            let red = &mut self.red[op.layer as usize * z..][..z];
            match op.stage {
                Stage::Gnpu => {
                    if block == 0 {
                        red.fill(Reduction::NEW);
                    }
                    let msgs = &self.state.messages[off..off + z];
                    let q = &mut self.q[off..off + z];
                    for r in 0..z {
                        let mut idx = shift + r;
                        if idx >= z {
                            idx -= z;
                        }
                        let val = self.state.app[col_base + idx] - msgs[r];
                        q[r] = val;
                        red[r].fold(block, val);
                    }
                }
                Stage::Lnpu => {
                    let msgs = &mut self.state.messages[off..off + z];
                    let q = &self.q[off..off + z];
                    for r in 0..z {
                        let r_new = red[r].exclude(block, q[r], alpha).clamp(-clamp, clamp);
                        msgs[r] = r_new;
                        let mut idx = shift + r;
                        if idx >= z {
                            idx -= z;
                        }
                        self.state.app[col_base + idx] =
                            (q[r] + r_new).clamp(-clamp, clamp);
                    }
                    if op.retire {
                        let layer = op.layer as usize;
                        for r in 0..z {
                            let red = &self.red[layer * z + r];
                            sink.reduction_state(
                                iteration, layer, r, red.min1, red.min2, red.sign,
                            );
                        }
                        sink.layer_retired(iteration, layer, &self.state.app);
                    }
                }
            }
        }
    }

    /// Syndrome of the current hard decisions, computed from the block
    /// tables. Every layer with at least one valid block constrains the
    /// result, including degree-1 layers the schedule skips.
    fn syndrome_ok_from_app(&self) -> bool {
        let z = self.tables.z();
        for u in 0..self.tables.layer_count() {
            if self.tables.degree(u) == 0 {
                continue;
            }
            let cols = self.tables.block_cols(u);
            let shifts = self.tables.shifts(u);
            for r in 0..z {
                let mut parity = false;
                for (&j, &s) in cols.iter().zip(shifts) {
                    let mut idx = s as usize + r;
                    if idx >= z {
                        idx -= z;
                    }
                    parity ^= self.state.app[j * z + idx] < 0.0;
                }
                if parity {
                    return false;
                }
            }
        }
        true
    }
}

/// Convenience wrapper: builds a decoder and decodes one frame.
pub fn decode(
    frame: &LlrFrame,
    tables: &BlockTables,
    cfg: DecoderConfig,
) -> Result<DecodeResult> {
    Decoder::new(tables, cfg)?.decode(frame)
}
