//! Channel simulation harness: systematic encoding, BPSK over AWGN,
//! LLR demodulation, and Monte-Carlo BER/FER measurement.

use crate::code::{expand, BlockTables, ParityCheckMatrix};
use crate::decoder::DecoderConfig;
use crate::runtime::{decode_parallel, FrameStream};
use crate::{Error, Result};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Frames generated per Monte-Carlo batch; stopping rules are evaluated at
/// batch boundaries only, so every point is a whole number of batches.
pub const BATCH_FRAMES: usize = 2048;

/// A codeword together with the message it encodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codeword {
    /// Full n-bit codeword, message first (systematic).
    pub bits: Vec<u8>,
    /// The k information bits.
    pub message: Vec<u8>,
}

/// Noise parameters for a BPSK/AWGN channel at a given Eb/N0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSpec {
    pub eb_n0_db: f64,
    pub rate: f64,
    /// Noise standard deviation: sigma^2 = 1 / (2 * rate * 10^(Eb/N0 / 10)).
    pub sigma: f64,
    /// Master seed for reproducible noise.
    pub seed: u64,
}

impl ChannelSpec {
    pub fn new(eb_n0_db: f64, rate: f64, seed: u64) -> Result<Self> {
        if !(rate > 0.0 && rate < 1.0) {
            return Err(Error::InvalidInput(format!(
                "code rate must be in (0, 1), got {rate}"
            )));
        }
        if !eb_n0_db.is_finite() {
            return Err(Error::InvalidInput(format!(
                "Eb/N0 must be finite, got {eb_n0_db}"
            )));
        }
        let sigma = (1.0 / (2.0 * rate * 10f64.powf(eb_n0_db / 10.0))).sqrt();
        Ok(ChannelSpec { eb_n0_db, rate, sigma, seed })
    }
}

/// Systematic encoder for a full-rank parity part.
///
/// Splitting H = [A | P] with A over the k = n − m information columns,
/// a codeword [msg | p] satisfies H·c = 0 iff p = P⁻¹·(A·msg) over GF(2).
/// P⁻¹ is computed once by Gauss–Jordan elimination on 64-bit packed rows.
#[derive(Debug, Clone)]
pub struct Encoder {
    k: usize,
    m: usize,
    /// For each check row, its information-column indices (< k).
    info_cols: Vec<Vec<usize>>,
    /// Rows of P⁻¹, packed 64 bits per word.
    p_inv: Vec<Vec<u64>>,
    words: usize,
    h: ParityCheckMatrix,
}

impl Encoder {
    pub fn new(h: &ParityCheckMatrix) -> Result<Self> {
        let (m, n) = (h.m(), h.n());
        if m >= n {
            return Err(Error::InvalidInput(format!(
                "cannot encode: {m} checks leave no information bits in length {n}"
            )));
        }
        let k = n - m;
        let words = m.div_ceil(64);

        // Augmented [P | I], one row per check, bit j of the left half set
        // when parity column k + j participates in the check.
        let mut aug: Vec<Vec<u64>> = (0..m)
            .map(|i| {
                let mut row = vec![0u64; 2 * words];
                for &col in h.row(i) {
                    if col >= k {
                        let j = col - k;
                        row[j / 64] |= 1 << (j % 64);
                    }
                }
                row[words + i / 64] |= 1 << (i % 64);
                row
            })
            .collect();

        for col in 0..m {
            let (word, bit) = (col / 64, 1u64 << (col % 64));
            let pivot = (col..m)
                .find(|&r| aug[r][word] & bit != 0)
                .ok_or_else(|| {
                    Error::Singular(format!("parity part is singular at column {col}"))
                })?;
            aug.swap(col, pivot);
            let pivot_row = aug[col].clone();
            for (r, row) in aug.iter_mut().enumerate() {
                if r != col && row[word] & bit != 0 {
                    for (dst, src) in row.iter_mut().zip(&pivot_row) {
                        *dst ^= src;
                    }
                }
            }
        }

        let p_inv = aug.into_iter().map(|row| row[words..].to_vec()).collect();
        let info_cols = (0..m)
            .map(|i| h.row(i).iter().copied().filter(|&c| c < k).collect())
            .collect();
        Ok(Encoder { k, m, info_cols, p_inv, words, h: h.clone() })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.k + self.m
    }

    /// Encodes k message bits into an n-bit systematic codeword.
    pub fn encode(&self, message: &[u8]) -> Result<Codeword> {
        if message.len() != self.k {
            return Err(Error::InvalidInput(format!(
                "message length {} does not match k = {}",
                message.len(),
                self.k
            )));
        }
        // Syndrome of the message part: s = A·msg.
        let mut s = vec![0u64; self.words];
        for (i, cols) in self.info_cols.iter().enumerate() {
            let parity = cols.iter().fold(0u8, |acc, &c| acc ^ (message[c] & 1));
            if parity != 0 {
                s[i / 64] |= 1 << (i % 64);
            }
        }
        let mut bits = Vec::with_capacity(self.n());
        bits.extend(message.iter().map(|&b| b & 1));
        for row in &self.p_inv {
            let ones: u32 = row.iter().zip(&s).map(|(a, b)| (a & b).count_ones()).sum();
            bits.push((ones & 1) as u8);
        }
        debug_assert!(self.h.parity_ok(&bits));
        Ok(Codeword { bits, message: message.iter().map(|&b| b & 1).collect() })
    }
}

/// BPSK mapping: bit 0 → +1.0, bit 1 → −1.0.
pub fn modulate_bpsk(bits: &[u8]) -> Vec<f64> {
    bits.iter().map(|&b| if b & 1 == 0 { 1.0 } else { -1.0 }).collect()
}

/// Adds white Gaussian noise of standard deviation `spec.sigma`.
pub fn awgn_with_rng<R: Rng>(symbols: &[f64], spec: &ChannelSpec, rng: &mut R) -> Vec<f64> {
    let normal = Normal::new(0.0, spec.sigma).expect("sigma is finite and positive");
    symbols.iter().map(|&x| x + normal.sample(rng)).collect()
}

/// Adds white Gaussian noise drawn from a generator seeded with `spec.seed`.
///
/// Repeated calls with the same spec produce identical noise; callers that
/// need a fresh draw per frame should use [`awgn_with_rng`] with a
/// [`frame_rng`] stream instead.
pub fn awgn(symbols: &[f64], spec: &ChannelSpec) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    awgn_with_rng(symbols, spec, &mut rng)
}

/// Per-symbol channel LLR for BPSK over AWGN: llr = 2·y / sigma².
pub fn channel_llr(received: &[f64], sigma: f64) -> Result<Vec<f64>> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::InvalidInput(format!("sigma must be positive, got {sigma}")));
    }
    let scale = 2.0 / (sigma * sigma);
    Ok(received.iter().map(|&y| scale * y).collect())
}

/// Bit error probability of uncoded BPSK at the same Eb/N0:
/// Q(sqrt(2·Eb/N0)) = erfc(sqrt(Eb/N0)) / 2.
pub fn uncoded_reference(eb_n0_db: f64) -> f64 {
    0.5 * libm::erfc(10f64.powf(eb_n0_db / 10.0).sqrt())
}

/// Deterministic per-frame generator: one master seed, one independent
/// stream per frame, so any frame can be regenerated in isolation and the
/// realization never depends on worker count or batch boundaries.
pub fn frame_rng(seed: u64, sequence_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sequence_id);
    rng
}

/// Draws k uniform message bits from the generator.
pub fn random_message<R: RngCore>(k: usize, rng: &mut R) -> Vec<u8> {
    (0..k).map(|_| (rng.next_u32() & 1) as u8).collect()
}

/// Measurement at one Eb/N0 point.
#[derive(Debug, Clone, PartialEq)]
pub struct BerPoint {
    pub eb_n0_db: f64,
    pub bits_sent: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    pub frames: u64,
    pub ber: f64,
    pub fer: f64,
    pub uncoded_ref: f64,
}

impl BerPoint {
    /// 95% confidence interval on the error rate, treating the error count
    /// as Poisson: lower = max(0, k − 1.96·√k)/n, upper = (k + 1.96·√k + 3)/n.
    pub fn poisson_bounds(errors: u64, bits: u64) -> (f64, f64) {
        let k = errors as f64;
        let n = (bits.max(1)) as f64;
        let half_width = 1.96 * k.sqrt();
        (((k - half_width).max(0.0)) / n, (k + half_width + 3.0) / n)
    }

    pub fn ber_bounds(&self) -> (f64, f64) {
        Self::poisson_bounds(self.bit_errors, self.bits_sent)
    }
}

/// A BER sweep over several Eb/N0 points.
#[derive(Debug, Clone, PartialEq)]
pub struct BerStats {
    pub points: Vec<BerPoint>,
}

impl BerStats {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eb_n0_db,bits,bit_errors,frame_errors,ber,fer,uncoded_ref\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{:.6e},{:.6e},{:.6e}\n",
                p.eb_n0_db, p.bits_sent, p.bit_errors, p.frame_errors, p.ber, p.fer, p.uncoded_ref
            ));
        }
        out
    }
}

/// Stopping rule for one measurement point, checked after each batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopRule {
    /// Stop once at least this many information-bit errors are seen.
    pub min_bit_errors: u64,
    /// Stop once at least this many information bits have been sent.
    pub max_bits: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule { min_bit_errors: 100, max_bits: 10_000_000 }
    }
}

/// Runs a Monte-Carlo BER measurement over the given Eb/N0 points.
///
/// Frame generation is sequential and seeded per frame, so results are
/// bit-identical for any `n_cores`. Errors and the stopping rule count
/// information bits only (the first k of each decoded frame); a frame
/// error is any information-bit error in the frame.
pub fn run_ber(
    eb_n0_db_points: &[f64],
    tables: &BlockTables,
    cfg: &DecoderConfig,
    stop: StopRule,
    seed: u64,
    n_cores: usize,
) -> Result<BerStats> {
    if eb_n0_db_points.is_empty() {
        return Err(Error::InvalidInput("no Eb/N0 points given".into()));
    }
    if stop.max_bits == 0 {
        return Err(Error::InvalidInput("max_bits must be positive".into()));
    }
    let h = expand(&tables.rebuild_base());
    let encoder = Encoder::new(&h)?;
    let (k, n) = (encoder.k(), encoder.n());
    let rate = k as f64 / n as f64;

    let mut points = Vec::with_capacity(eb_n0_db_points.len());
    for (point_idx, &eb_n0_db) in eb_n0_db_points.iter().enumerate() {
        // Distinct master seed per point so points draw independent noise.
        let point_seed = seed ^ (point_idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let spec = ChannelSpec::new(eb_n0_db, rate, point_seed)?;

        let (mut bits_sent, mut bit_errors, mut frame_errors, mut frames) = (0u64, 0u64, 0u64, 0u64);
        let mut next_seq = 0u64;
        loop {
            let mut messages = Vec::with_capacity(BATCH_FRAMES);
            let mut values = Vec::with_capacity(BATCH_FRAMES);
            for _ in 0..BATCH_FRAMES {
                let mut rng = frame_rng(point_seed, next_seq);
                next_seq += 1;
                let message = random_message(k, &mut rng);
                let codeword = encoder.encode(&message)?;
                let symbols = modulate_bpsk(&codeword.bits);
                let received = awgn_with_rng(&symbols, &spec, &mut rng);
                values.push(channel_llr(&received, spec.sigma)?);
                messages.push(message);
            }
            let stream = FrameStream::from_values(values);
            let (results, _) = decode_parallel(stream, tables, cfg, n_cores)?;
            for (result, message) in results.iter().zip(&messages) {
                let errs = if result.hard_bits.len() >= k {
                    message
                        .iter()
                        .zip(&result.hard_bits[..k])
                        .filter(|(a, b)| a != b)
                        .count() as u64
                } else {
                    k as u64
                };
                bit_errors += errs;
                frame_errors += (errs > 0) as u64;
                bits_sent += k as u64;
                frames += 1;
            }
            if bit_errors >= stop.min_bit_errors || bits_sent >= stop.max_bits {
                break;
            }
        }
        let point = BerPoint {
            eb_n0_db,
            bits_sent,
            bit_errors,
            frame_errors,
            frames,
            ber: bit_errors as f64 / bits_sent as f64,
            fer: frame_errors as f64 / frames as f64,
            uncoded_ref: uncoded_reference(eb_n0_db),
        };
        log::info!(
            "Eb/N0 {:.2} dB: {} bits, {} bit errors, BER {:.3e}",
            point.eb_n0_db,
            point.bits_sent,
            point.bit_errors,
            point.ber
        );
        points.push(point);
    }
    Ok(BerStats { points })
}
