//! Frame and result file formats.
//!
//! LLR frames are stored either as raw binary — each frame n little-endian
//! 32-bit floats, frames concatenated — or as text with one frame per
//! line of space-separated reals. Paths ending in `.txt` or `.text` are
//! treated as text, everything else as binary.
//!
//! Decode results are text: one line per frame,
//! `seq_id iterations syndrome_ok hexbits`, with `syndrome_ok` as 0/1 and
//! the hard bits packed four per hex digit (first bit is the high bit of
//! the first digit; the last digit is zero-padded). A frame that failed to
//! produce decisions carries `-` in place of the bits.
//!
//! Output files are written to a temporary sibling and renamed into place,
//! so a failed run leaves no partial file.

use crate::decoder::{DecodeResult, LlrFrame};
use crate::{Error, Result};
use std::path::Path;

/// Parses concatenated binary frames of length `n`.
pub fn frames_from_binary(bytes: &[u8], n: usize) -> Result<Vec<LlrFrame>> {
    let frame_bytes = 4 * n;
    if frame_bytes == 0 {
        return Err(Error::InvalidInput("frame length n must be positive".into()));
    }
    if !bytes.len().is_multiple_of(frame_bytes) {
        return Err(Error::InvalidInput(format!(
            "binary frame data is {} bytes, not a multiple of {frame_bytes} (n = {n} f32 values)",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(frame_bytes)
        .enumerate()
        .map(|(seq, chunk)| {
            let values = chunk
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
                .collect();
            LlrFrame::new(seq as u64, values)
        })
        .collect())
}

/// Serializes frames as concatenated little-endian f32 values.
pub fn frames_to_binary(frames: &[LlrFrame]) -> Vec<u8> {
    let mut out = Vec::with_capacity(frames.iter().map(|f| 4 * f.values.len()).sum());
    for frame in frames {
        for &v in &frame.values {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

/// Parses text frames: one frame per non-empty line, space-separated
/// reals, `#` lines ignored.
pub fn frames_from_text(text: &str, n: usize) -> Result<Vec<LlrFrame>> {
    let mut frames = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let values: Vec<f64> = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| Error::Parse {
                    line: idx + 1,
                    msg: format!("invalid LLR value \"{tok}\""),
                })
            })
            .collect::<Result<_>>()?;
        if values.len() != n {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("frame has {} values, expected n = {n}", values.len()),
            });
        }
        frames.push(LlrFrame::new(frames.len() as u64, values));
    }
    Ok(frames)
}

/// Serializes frames as text, one line each.
pub fn frames_to_text(frames: &[LlrFrame]) -> String {
    let mut out = String::new();
    for frame in frames {
        let line: Vec<String> = frame.values.iter().map(|v| format!("{v}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

fn is_text_path(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("txt") | Some("text")
    )
}

/// Reads a frame file, choosing text or binary by extension.
pub fn read_frames(path: &Path, n: usize) -> Result<Vec<LlrFrame>> {
    let read_err = |source| Error::ReadIo { path: path.display().to_string(), source };
    if is_text_path(path) {
        frames_from_text(&std::fs::read_to_string(path).map_err(read_err)?, n)
    } else {
        frames_from_binary(&std::fs::read(path).map_err(read_err)?, n)
    }
}

/// Writes a frame file, choosing text or binary by extension.
pub fn write_frames(path: &Path, frames: &[LlrFrame]) -> Result<()> {
    if is_text_path(path) {
        write_atomic(path, frames_to_text(frames).as_bytes())
    } else {
        write_atomic(path, &frames_to_binary(frames))
    }
}

/// Packs bits (one per byte, 0/1) into hex digits, four bits per digit,
/// first bit highest; the final digit is padded with low zeros.
pub fn bits_to_hex(bits: &[u8]) -> String {
    let mut out = String::with_capacity(bits.len().div_ceil(4));
    for chunk in bits.chunks(4) {
        let mut digit = 0u8;
        for (i, &b) in chunk.iter().enumerate() {
            digit |= (b & 1) << (3 - i);
        }
        out.push(char::from_digit(digit as u32, 16).unwrap());
    }
    out
}

/// One result line: `seq_id iterations syndrome_ok hexbits`.
pub fn result_line(result: &DecodeResult) -> String {
    let bits = if result.hard_bits.is_empty() {
        "-".to_string()
    } else {
        bits_to_hex(&result.hard_bits)
    };
    format!(
        "{} {} {} {}",
        result.sequence_id,
        result.iterations_used,
        u8::from(result.syndrome_ok),
        bits
    )
}

/// Renders a full results file.
pub fn results_to_text(results: &[DecodeResult]) -> String {
    let mut out = String::new();
    for r in results {
        out.push_str(&result_line(r));
        out.push('\n');
    }
    out
}

/// Writes the ordered results file.
pub fn write_results(path: &Path, results: &[DecodeResult]) -> Result<()> {
    write_atomic(path, results_to_text(results).as_bytes())
}

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let write_err = |source| Error::WriteIo { path: path.display().to_string(), source };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(write_err)?;
    std::fs::rename(&tmp, path).map_err(write_err)
}
