//! Multi-worker decode runtime.
//!
//! Frames flow through bounded queues: a dispatcher sends frame q to
//! worker q mod N (round-robin), each worker owns a private decoder and a
//! FIFO result queue, and the collector pops result queues in the same
//! round-robin order, which yields results in exact sequence order without
//! sorting. Queue bounds give backpressure, so memory stays flat for
//! arbitrarily long streams.
//!
//! Decoding is deterministic per frame and workers share nothing mutable,
//! so the ordered output is identical for every worker count — parallelism
//! must be unobservable in the results.

use crate::code::BlockTables;
use crate::decoder::{DecodeResult, Decoder, DecoderConfig, LlrFrame};
use crate::{Error, Result};
use std::sync::mpsc;
use std::time::{Duration, Instant};

/// Queue capacity per worker, in frames (each direction).
const QUEUE_CAP: usize = 16;

/// A sequence of frames with dense sequence ids starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameStream {
    frames: Vec<LlrFrame>,
}

impl FrameStream {
    /// Wraps pre-tagged frames, checking the ids are 0, 1, 2, …
    pub fn new(frames: Vec<LlrFrame>) -> Result<Self> {
        for (i, f) in frames.iter().enumerate() {
            if f.sequence_id != i as u64 {
                return Err(Error::InvalidInput(format!(
                    "frame at position {i} has sequence_id {}, expected {i}",
                    f.sequence_id
                )));
            }
        }
        Ok(FrameStream { frames })
    }

    /// Tags raw LLR vectors with sequence ids 0, 1, 2, …
    pub fn from_values(values: Vec<Vec<f64>>) -> Self {
        FrameStream {
            frames: values
                .into_iter()
                .enumerate()
                .map(|(i, v)| LlrFrame::new(i as u64, v))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frames(&self) -> &[LlrFrame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<LlrFrame> {
        self.frames
    }
}

/// A validated worker-pool configuration.
#[derive(Debug, Clone)]
pub struct CorePool {
    pub n_cores: usize,
    pub cfg: DecoderConfig,
}

impl CorePool {
    /// Validates the worker count and warns when it exceeds the machine's
    /// hardware parallelism (the pool still runs the requested count —
    /// oversubscription costs speed, not correctness).
    pub fn new(n_cores: usize, cfg: DecoderConfig) -> Result<Self> {
        if n_cores == 0 {
            return Err(Error::InvalidInput("worker count must be ≥ 1".into()));
        }
        if let Ok(avail) = std::thread::available_parallelism() {
            if n_cores > avail.get() {
                log::warn!(
                    "{n_cores} workers requested but only {} hardware threads available; \
                     expect no speedup beyond {}",
                    avail.get(),
                    avail.get()
                );
            }
        }
        Ok(CorePool { n_cores, cfg })
    }

    /// Decodes a stream, returning ordered results and throughput numbers.
    pub fn decode(
        &self,
        stream: FrameStream,
        tables: &BlockTables,
    ) -> Result<(Vec<DecodeResult>, ThroughputStats)> {
        decode_parallel(stream, tables, &self.cfg, self.n_cores)
    }
}

/// Round-robin frame assignment: frame q goes to queue q mod n_cores,
/// each queue preserving stream order.
pub fn dispatch_round_robin(stream: &FrameStream, pool: &CorePool) -> Vec<Vec<LlrFrame>> {
    let n_cores = pool.n_cores;
    let mut queues = vec![Vec::new(); n_cores];
    for frame in &stream.frames {
        queues[(frame.sequence_id % n_cores as u64) as usize].push(frame.clone());
    }
    queues
}

/// Wall-clock measurement of a decode run.
#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputStats {
    pub frames_decoded: usize,
    pub wall_seconds: f64,
    /// Decoded coded bits (n per frame) per second.
    pub coded_bits_per_second: f64,
    /// Decoded information bits (k = n − m per frame) per second.
    pub info_bits_per_second: f64,
    pub n_cores: usize,
    /// Per worker, decode busy time divided by wall time.
    pub per_core_utilization: Vec<f64>,
    /// Per worker, frames decoded (round-robin keeps these within 1).
    pub per_core_frames: Vec<usize>,
}

/// Per-worker raw measurements of one run.
#[derive(Debug, Clone, Copy, Default)]
struct WorkerTally {
    busy: Duration,
    frames: usize,
}

/// Computes throughput figures from raw measurements. Wall time must be
/// positive.
pub fn measure_throughput(
    frames_decoded: usize,
    n: usize,
    k: usize,
    wall: Duration,
    busy: &[Duration],
    per_core_frames: &[usize],
) -> Result<ThroughputStats> {
    let wall_seconds = wall.as_secs_f64();
    if wall_seconds <= 0.0 {
        return Err(Error::Runtime("throughput undefined for zero wall time".into()));
    }
    Ok(ThroughputStats {
        frames_decoded,
        wall_seconds,
        coded_bits_per_second: (frames_decoded * n) as f64 / wall_seconds,
        info_bits_per_second: (frames_decoded * k) as f64 / wall_seconds,
        n_cores: busy.len(),
        per_core_utilization: busy.iter().map(|b| b.as_secs_f64() / wall_seconds).collect(),
        per_core_frames: per_core_frames.to_vec(),
    })
}

/// Decodes every frame of `stream` on `n_cores` workers and returns the
/// results in sequence order. A frame the decoder rejects (wrong length,
/// non-finite input) is marked failed — empty hard bits, `syndrome_ok =
/// false` — without disturbing the order of the rest.
pub fn decode_parallel(
    stream: FrameStream,
    tables: &BlockTables,
    cfg: &DecoderConfig,
    n_cores: usize,
) -> Result<(Vec<DecodeResult>, ThroughputStats)> {
    let pool_check = CorePool::new(n_cores, cfg.clone())?;
    // Validate code/config once up front so workers cannot fail to build.
    Decoder::new(tables, cfg.clone())?;
    let n_cores = pool_check.n_cores;

    let n = tables.n();
    let k = n.saturating_sub(tables.layer_count() * tables.z());
    let total = stream.len();
    let frames = stream.into_frames();

    let start = Instant::now();
    let mut results = Vec::with_capacity(total);
    let tallies: Vec<WorkerTally> = std::thread::scope(|scope| -> Result<Vec<WorkerTally>> {
        let mut frame_txs = Vec::with_capacity(n_cores);
        let mut result_rxs = Vec::with_capacity(n_cores);
        let mut handles = Vec::with_capacity(n_cores);
        for _ in 0..n_cores {
            let (ftx, frx) = mpsc::sync_channel::<LlrFrame>(QUEUE_CAP);
            let (rtx, rrx) = mpsc::sync_channel::<DecodeResult>(QUEUE_CAP);
            frame_txs.push(ftx);
            result_rxs.push(rrx);
            let cfg = cfg.clone();
            handles.push(scope.spawn(move || {
                let mut decoder = Decoder::new(tables, cfg).expect("validated above");
                let mut tally = WorkerTally::default();
                while let Ok(frame) = frx.recv() {
                    let t0 = Instant::now();
                    let result = decoder.decode(&frame).unwrap_or(DecodeResult {
                        sequence_id: frame.sequence_id,
                        hard_bits: Vec::new(),
                        iterations_used: 0,
                        syndrome_ok: false,
                    });
                    tally.busy += t0.elapsed();
                    tally.frames += 1;
                    if rtx.send(result).is_err() {
                        break;
                    }
                }
                tally
            }));
        }

        scope.spawn(move || {
            for frame in frames {
                let q = (frame.sequence_id % n_cores as u64) as usize;
                if frame_txs[q].send(frame).is_err() {
                    break;
                }
            }
        });

        for q in 0..total {
            let result = result_rxs[q % n_cores]
                .recv()
                .map_err(|_| Error::Runtime("decode worker exited early".into()))?;
            debug_assert_eq!(result.sequence_id, q as u64);
            results.push(result);
        }
        drop(result_rxs);
        Ok(handles
            .into_iter()
            .map(|h| h.join().unwrap_or_default())
            .collect())
    })?;

    let busy: Vec<Duration> = tallies.iter().map(|t| t.busy).collect();
    let per_core_frames: Vec<usize> = tallies.iter().map(|t| t.frames).collect();
    let stats = measure_throughput(total, n, k, start.elapsed(), &busy, &per_core_frames)?;
    Ok((results, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::load_base_matrix;
    use crate::wifi;
    use rand::{Rng, SeedableRng};

    fn random_stream(n: usize, count: usize, seed: u64) -> FrameStream {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        FrameStream::from_values(
            (0..count).map(|_| (0..n).map(|_| rng.random_range(-6.0..6.0)).collect()).collect(),
        )
    }

    #[test]
    fn stream_requires_dense_ids() {
        assert!(FrameStream::new(vec![
            LlrFrame::new(0, vec![1.0]),
            LlrFrame::new(2, vec![1.0]),
        ])
        .is_err());
        assert!(FrameStream::new(vec![
            LlrFrame::new(0, vec![1.0]),
            LlrFrame::new(1, vec![1.0]),
        ])
        .is_ok());
    }

    fn pool(n_cores: usize) -> CorePool {
        CorePool::new(n_cores, DecoderConfig::default()).unwrap()
    }

    #[test]
    fn round_robin_assignment() {
        let stream = FrameStream::from_values(vec![vec![0.0]; 6]);
        let queues = dispatch_round_robin(&stream, &pool(3));
        let ids: Vec<Vec<u64>> = queues
            .iter()
            .map(|q| q.iter().map(|f| f.sequence_id).collect())
            .collect();
        assert_eq!(ids, vec![vec![0, 3], vec![1, 4], vec![2, 5]]);

        let identity = dispatch_round_robin(&stream, &pool(1));
        assert_eq!(identity[0].len(), 6);
    }

    #[test]
    fn dispatch_fairness() {
        let stream = FrameStream::from_values(vec![vec![0.0]; 100]);
        let queues = dispatch_round_robin(&stream, &pool(6));
        let lens: Vec<usize> = queues.iter().map(Vec::len).collect();
        assert_eq!(lens.iter().sum::<usize>(), 100);
        assert!(lens.iter().max().unwrap() - lens.iter().min().unwrap() <= 1);
    }

    #[test]
    fn zero_workers_rejected() {
        assert!(CorePool::new(0, DecoderConfig::default()).is_err());
    }

    #[test]
    fn parallel_output_is_order_invariant() {
        let tables = load_base_matrix(wifi::WIFI_648).unwrap().block_tables();
        let cfg = DecoderConfig::default();
        let stream = random_stream(tables.n(), 30, 42);

        let mut sequential = Vec::new();
        for frame in stream.frames() {
            let mut dec = Decoder::new(&tables, cfg.clone()).unwrap();
            sequential.push(dec.decode(frame).unwrap());
        }
        for cores in [1, 2, 5] {
            let (results, stats) =
                decode_parallel(stream.clone(), &tables, &cfg, cores).unwrap();
            assert_eq!(results, sequential, "cores = {cores}");
            assert_eq!(stats.frames_decoded, 30);
            assert_eq!(stats.per_core_utilization.len(), cores);
        }
    }

    #[test]
    fn bad_frame_is_marked_failed_in_place() {
        let tables = load_base_matrix(wifi::WIFI_648).unwrap().block_tables();
        let mut values: Vec<Vec<f64>> = vec![vec![20.0; tables.n()]; 5];
        values[2] = vec![20.0; 10];
        let stream = FrameStream::from_values(values);
        let (results, _) =
            decode_parallel(stream, &tables, &DecoderConfig::default(), 2).unwrap();
        assert_eq!(results.len(), 5);
        for (i, r) in results.iter().enumerate() {
            assert_eq!(r.sequence_id, i as u64);
            if i == 2 {
                assert!(r.hard_bits.is_empty());
                assert!(!r.syndrome_ok);
            } else {
                assert!(r.syndrome_ok);
            }
        }
    }

    #[test]
    fn empty_stream_decodes_to_nothing() {
        let tables = load_base_matrix(wifi::WIFI_648).unwrap().block_tables();
        let (results, stats) = decode_parallel(
            FrameStream::from_values(vec![]),
            &tables,
            &DecoderConfig::default(),
            3,
        )
        .unwrap();
        assert!(results.is_empty());
        assert_eq!(stats.frames_decoded, 0);
    }

    #[test]
    fn equal_worker_frame_counts_at_fixed_latency() {
        let tables = load_base_matrix(wifi::WIFI_648).unwrap().block_tables();
        let cfg = DecoderConfig {
            early_termination: false,
            max_iterations: 2,
            ..DecoderConfig::default()
        };
        let stream = random_stream(tables.n(), 600, 8);
        let (_, stats) = decode_parallel(stream, &tables, &cfg, 6).unwrap();
        assert_eq!(stats.per_core_frames, vec![100; 6]);
    }

    #[test]
    fn throughput_arithmetic() {
        let stats = measure_throughput(
            1000,
            648,
            324,
            Duration::from_secs(1),
            &[Duration::from_millis(500)],
            &[1000],
        )
        .unwrap();
        assert_eq!(stats.coded_bits_per_second, 648_000.0);
        assert_eq!(stats.info_bits_per_second, 324_000.0);
        assert!((stats.per_core_utilization[0] - 0.5).abs() < 1e-9);
        assert!(measure_throughput(1, 648, 324, Duration::ZERO, &[], &[]).is_err());
    }
}
