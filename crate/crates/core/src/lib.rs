//! QC-LDPC codec workbench.
//!
//! A quasi-cyclic LDPC code is described by a small base matrix of cyclic
//! shift values; expanding each entry into a z×z circulant (or zero) block
//! yields the full parity-check matrix. This crate provides:
//!
//! - [`code`]: base-matrix loading, expansion, block tables, and row-layer
//!   structure, plus the IEEE 802.11n rate-1/2 matrices as built-ins
//!   ([`wifi`]).
//! - [`decoder`]: row-layered normalized min-sum decoding with the
//!   global/local node-processing split, runnable under a baseline or a
//!   software-pipelined schedule that are bit-exact to each other.
//! - [`pipeline`]: construction of the two schedules, read-after-write
//!   hazard analysis, maximum pipeline depth, and equivalence checking.
//! - [`runtime`]: a multi-worker decode pool with round-robin dispatch and
//!   order-preserving collection.
//! - [`channel`]: systematic encoding, BPSK/AWGN simulation, and BER
//!   measurement against the uncoded reference.
//! - [`frameio`]: frame and result file formats shared by the CLI.

pub mod alist;
pub mod channel;
pub mod code;
pub mod decoder;
pub mod frameio;
pub mod pipeline;
pub mod runtime;
pub mod wifi;

pub use code::{BaseMatrix, BlockTables, LayerPartition, ParityCheckMatrix};
pub use decoder::{DecodeResult, Decoder, DecoderConfig, LlrFrame, Schedule};

/// Crate-wide error type.
///
/// Errors are classified for the CLI exit-code contract: problems with user
/// input (unreadable or malformed files, out-of-range parameters) exit 1,
/// runtime failures (output I/O, internal errors) exit 2.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An input file could not be opened or read.
    #[error("cannot read {path}: {source}")]
    ReadIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// An output file could not be written.
    #[error("cannot write {path}: {source}")]
    WriteIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// Malformed text input; `line` is 1-based within the offending file.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    /// Structurally invalid data or parameters (dimension mismatch,
    /// out-of-range value, inconsistent configuration).
    #[error("{0}")]
    InvalidInput(String),
    /// The parity part of an expanded matrix is singular over GF(2), so no
    /// systematic encoder exists for the chosen column order.
    #[error("singular parity submatrix: {0}")]
    Singular(String),
    /// Internal runtime failure.
    #[error("{0}")]
    Runtime(String),
}

impl Error {
    /// Process exit code mandated for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ReadIo { .. }
            | Error::Parse { .. }
            | Error::InvalidInput(_)
            | Error::Singular(_) => 1,
            Error::WriteIo { .. } | Error::Runtime(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
