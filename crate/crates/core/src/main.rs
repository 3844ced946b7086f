//! Command-line workbench for the QC-LDPC codec library.

use clap::{Parser, Subcommand, ValueEnum};
use qcldpc::channel::{
    awgn_with_rng, channel_llr, frame_rng, modulate_bpsk, random_message, run_ber, ChannelSpec,
    Encoder, StopRule,
};
use qcldpc::code::{expand, BaseMatrix};
use qcldpc::decoder::Schedule;
use qcldpc::pipeline::{
    baseline_schedule, max_pipeline_depth, pipelined_schedule, schedule_length, stall_count,
};
use qcldpc::runtime::{decode_parallel, FrameStream, ThroughputStats};
use qcldpc::{alist, frameio, wifi, DecoderConfig, Error};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "qcldpc",
    version,
    about = "Quasi-cyclic LDPC codec workbench: expand, analyze, decode, measure"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ScheduleArg {
    Baseline,
    Pipelined,
}

impl From<ScheduleArg> for Schedule {
    fn from(s: ScheduleArg) -> Schedule {
        match s {
            ScheduleArg::Baseline => Schedule::Baseline,
            ScheduleArg::Pipelined => Schedule::Pipelined,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ExpandFormat {
    Alist,
}

#[derive(Subcommand)]
enum Command {
    /// Expand a base matrix into its full parity-check matrix
    Expand {
        /// Base matrix: builtin name (wifi-648/wifi-1296/wifi-1944) or file path
        #[arg(long)]
        base: String,
        /// Output file for the expanded matrix
        #[arg(long)]
        out: PathBuf,
        /// Output format
        #[arg(long, value_enum, default_value = "alist")]
        format: ExpandFormat,
    },
    /// Report layers, degrees, schedules, and pipeline hazard analysis
    Analyze {
        #[arg(long)]
        base: String,
    },
    /// Decode a file of LLR frames and write ordered results
    Decode {
        #[arg(long)]
        base: String,
        /// Input frames: .txt/.text for text lines, anything else is binary f32
        #[arg(long = "in")]
        input: PathBuf,
        /// Output results file
        #[arg(long)]
        out: PathBuf,
        /// Maximum decoding iterations
        #[arg(long, default_value_t = 10)]
        iters: usize,
        #[arg(long, value_enum, default_value = "baseline")]
        schedule: ScheduleArg,
        /// Number of decode workers
        #[arg(long, default_value_t = 1)]
        cores: usize,
        /// Always run the full iteration count (skip syndrome early exit)
        #[arg(long, default_value_t = false)]
        no_early_term: bool,
    },
    /// Monte-Carlo BER/FER measurement over an Eb/N0 sweep
    Ber {
        #[arg(long)]
        base: String,
        /// Eb/N0 points in dB: a single value or start:step:stop (inclusive)
        #[arg(long)]
        snr: String,
        #[arg(long, default_value_t = 10)]
        iters: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Per point, stop after this many information-bit errors
        #[arg(long, default_value_t = 100)]
        min_errors: u64,
        /// Per point, stop after this many information bits
        #[arg(long, default_value_t = 10_000_000)]
        max_bits: u64,
        /// Output CSV file
        #[arg(long)]
        out: PathBuf,
    },
    /// Benchmark decode throughput across worker counts
    Bench {
        #[arg(long)]
        base: String,
        /// Number of random 2 dB frames to decode per worker count
        #[arg(long, default_value_t = 256)]
        frames: usize,
        /// Comma-separated worker counts, e.g. 1,2,4
        #[arg(long, default_value = "1")]
        cores: String,
        #[arg(long, default_value_t = 10)]
        iters: usize,
    },
}

fn main() {
    // Behave like a normal unix filter when a downstream consumer (pager,
    // `head`) closes the pipe early: die on SIGPIPE instead of panicking.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e}");
        let mut source = std::error::Error::source(&e);
        while let Some(s) = source {
            eprintln!("  caused by: {s}");
            source = s.source();
        }
        std::process::exit(e.exit_code());
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Expand { base, out, format } => cmd_expand(&base, &out, format),
        Command::Analyze { base } => cmd_analyze(&base),
        Command::Decode { base, input, out, iters, schedule, cores, no_early_term } => {
            cmd_decode(&base, &input, &out, iters, schedule, cores, no_early_term)
        }
        Command::Ber { base, snr, iters, seed, min_errors, max_bits, out } => {
            cmd_ber(&base, &snr, iters, seed, min_errors, max_bits, &out)
        }
        Command::Bench { base, frames, cores, iters } => cmd_bench(&base, frames, &cores, iters),
    }
}

fn cmd_expand(base: &str, out: &std::path::Path, format: ExpandFormat) -> Result<(), Error> {
    println!(
        "config: command=expand base={base} out={} format={format:?}",
        out.display()
    );
    let bm = wifi::load_code(base)?;
    let h = expand(&bm);
    let ones: usize = (0..h.m()).map(|i| h.row(i).len()).sum();
    println!("base matrix: {} x {}, z = {}", bm.m_b(), bm.n_b(), bm.z());
    println!("expanded: {} {}", h.m(), h.n());
    println!("ones: {ones}");
    match format {
        ExpandFormat::Alist => frameio::write_atomic(out, alist::export_alist(&h).as_bytes())?,
    }
    println!("wrote {}", out.display());
    Ok(())
}

/// True when the loaded base matrix is one of the shipped 802.11n codes,
/// for which a reference FPGA architecture value is known.
fn is_case_study(bm: &BaseMatrix) -> bool {
    wifi::BUILTIN_NAMES
        .iter()
        .filter_map(|name| wifi::builtin(name))
        .any(|text| qcldpc::code::load_base_matrix(text).is_ok_and(|b| &b == bm))
}

fn cmd_analyze(base: &str) -> Result<(), Error> {
    println!("config: command=analyze base={base}");
    let bm = wifi::load_code(base)?;
    let tables = bm.block_tables();
    println!(
        "code: n={} m={} z={} rate={:.3}",
        bm.n_b() * bm.z() as usize,
        bm.m_b() * bm.z() as usize,
        bm.z(),
        1.0 - bm.m_b() as f64 / bm.n_b() as f64
    );
    println!("layers: {}", tables.layer_count());
    let degrees = tables.degrees();
    println!(
        "layer degrees: {}",
        degrees.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
    );
    println!(
        "block tables: {} valid blocks, max degree {}",
        tables.total_blocks(),
        tables.max_degree()
    );
    let degenerate = tables.degenerate_layers();
    if !degenerate.is_empty() {
        println!("degenerate layers (degree < 2, excluded from schedules): {degenerate:?}");
    }

    let baseline = baseline_schedule(&tables);
    let pipelined = pipelined_schedule(&tables);
    println!(
        "baseline schedule: length {}, stalls {}",
        schedule_length(&baseline),
        stall_count(&baseline)
    );
    println!(
        "pipelined schedule: length {}, stalls {}",
        schedule_length(&pipelined),
        stall_count(&pipelined)
    );

    let report = max_pipeline_depth(&tables);
    println!("max_depth: {}", report.max_depth);
    if !report.conflicts.is_empty() {
        println!("conflicts blocking depth {}:", report.max_depth + 1);
        for c in &report.conflicts {
            println!(
                "  writer layer {} -> reader layer {}, block column {}, distance {}",
                c.writer_layer, c.reader_layer, c.block_col, c.distance
            );
        }
    }
    if is_case_study(&bm) {
        println!("reference FPGA architecture depth: 6");
        if report.max_depth != 6 {
            println!(
                "note: computed depth {} differs from the reference architecture value \
                 under this block-serial hazard model; see README",
                report.max_depth
            );
        }
    }
    Ok(())
}

fn print_stats(stats: &ThroughputStats) {
    println!(
        "decoded {} frames in {:.3} s on {} worker(s)",
        stats.frames_decoded, stats.wall_seconds, stats.n_cores
    );
    println!(
        "throughput: {:.0} coded bits/s, {:.0} info bits/s",
        stats.coded_bits_per_second, stats.info_bits_per_second
    );
    println!(
        "per-core utilization: {}",
        stats
            .per_core_utilization
            .iter()
            .map(|u| format!("{u:.2}"))
            .collect::<Vec<_>>()
            .join(" ")
    );
    println!(
        "per-core frames: {}",
        stats
            .per_core_frames
            .iter()
            .map(|f| f.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    );
}

fn cmd_decode(
    base: &str,
    input: &std::path::Path,
    out: &std::path::Path,
    iters: usize,
    schedule: ScheduleArg,
    cores: usize,
    no_early_term: bool,
) -> Result<(), Error> {
    println!(
        "config: command=decode base={base} in={} out={} iters={iters} schedule={schedule:?} \
         cores={cores} early_term={}",
        input.display(),
        out.display(),
        !no_early_term
    );
    let bm = wifi::load_code(base)?;
    let tables = bm.block_tables();
    let frames = frameio::read_frames(input, tables.n())?;
    let stream = FrameStream::new(frames)?;
    println!("read {} frames of length {}", stream.len(), tables.n());

    let cfg = DecoderConfig {
        max_iterations: iters,
        early_termination: !no_early_term,
        schedule: schedule.into(),
        ..DecoderConfig::default()
    };
    let (results, stats) = decode_parallel(stream, &tables, &cfg, cores)?;
    let converged = results.iter().filter(|r| r.syndrome_ok).count();
    frameio::write_results(out, &results)?;
    print_stats(&stats);
    println!("converged: {converged}/{}", results.len());
    println!("wrote {}", out.display());
    Ok(())
}

/// Parses `--snr`: either one value or start:step:stop, endpoints inclusive.
fn parse_snr_list(spec: &str) -> Result<Vec<f64>, Error> {
    let bad = |msg: String| Error::InvalidInput(format!("bad --snr '{spec}': {msg}"));
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| bad(format!("'{s}' is not a number")))
            .and_then(|v| if v.is_finite() { Ok(v) } else { Err(bad(format!("'{s}' is not finite"))) })
    };
    match parts.as_slice() {
        [single] => Ok(vec![num(single)?]),
        [start, step, stop] => {
            let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
            if step <= 0.0 {
                return Err(bad("step must be positive".into()));
            }
            if stop < start {
                return Err(bad("stop must be >= start".into()));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| start + i as f64 * step).collect())
        }
        _ => Err(bad("expected VALUE or START:STEP:STOP".into())),
    }
}

fn cmd_ber(
    base: &str,
    snr: &str,
    iters: usize,
    seed: u64,
    min_errors: u64,
    max_bits: u64,
    out: &std::path::Path,
) -> Result<(), Error> {
    println!(
        "config: command=ber base={base} snr={snr} iters={iters} seed={seed} \
         min_errors={min_errors} max_bits={max_bits} out={}",
        out.display()
    );
    let points = parse_snr_list(snr)?;
    let bm = wifi::load_code(base)?;
    let tables = bm.block_tables();
    let cfg = DecoderConfig { max_iterations: iters, ..DecoderConfig::default() };
    let stop = StopRule { min_bit_errors: min_errors, max_bits };
    let stats = run_ber(&points, &tables, &cfg, stop, seed, 1)?;
    for p in &stats.points {
        println!(
            "Eb/N0 {:>5.2} dB: ber {:.3e} (uncoded {:.3e}), fer {:.3e}, \
             {} bit errors in {} bits",
            p.eb_n0_db, p.ber, p.uncoded_ref, p.fer, p.bit_errors, p.bits_sent
        );
    }
    frameio::write_atomic(out, stats.to_csv().as_bytes())?;
    println!("wrote {}", out.display());
    Ok(())
}

fn parse_cores_list(spec: &str) -> Result<Vec<usize>, Error> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidInput(format!("bad --cores '{spec}': '{s}' is not a count")))
        })
        .collect()
}

fn cmd_bench(base: &str, frames: usize, cores: &str, iters: usize) -> Result<(), Error> {
    println!("config: command=bench base={base} frames={frames} cores={cores} iters={iters}");
    if frames == 0 {
        return Err(Error::InvalidInput("--frames must be >= 1".into()));
    }
    let core_counts = parse_cores_list(cores)?;
    if core_counts.is_empty() || core_counts.contains(&0) {
        return Err(Error::InvalidInput("--cores entries must be >= 1".into()));
    }
    let bm = wifi::load_code(base)?;
    let tables = bm.block_tables();
    let encoder = Encoder::new(&expand(&bm))?;
    let spec = ChannelSpec::new(2.0, encoder.k() as f64 / encoder.n() as f64, 0xBE_EF)?;

    let mut values = Vec::with_capacity(frames);
    for seq in 0..frames {
        let mut rng = frame_rng(0xBE_EF, seq as u64);
        let msg = random_message(encoder.k(), &mut rng);
        let cw = encoder.encode(&msg)?;
        let symbols = modulate_bpsk(&cw.bits);
        let received = awgn_with_rng(&symbols, &spec, &mut rng);
        values.push(channel_llr(&received, spec.sigma)?);
    }
    println!("generated {frames} frames at 2 dB");

    // Fixed iteration count: early termination off so every run does the
    // same work regardless of noise realization.
    let cfg = DecoderConfig {
        max_iterations: iters,
        early_termination: false,
        ..DecoderConfig::default()
    };
    println!(
        "{:>5} {:>8} {:>12} {:>14} {:>13} {:>8} {:>10}",
        "cores", "frames", "wall_s", "coded_bits/s", "info_bits/s", "speedup", "efficiency"
    );
    let mut base_rate: Option<f64> = None;
    for &n_cores in &core_counts {
        let stream = FrameStream::from_values(values.clone());
        let (_, stats) = decode_parallel(stream, &tables, &cfg, n_cores)?;
        let rate = stats.coded_bits_per_second;
        let speedup = rate / *base_rate.get_or_insert(rate);
        println!(
            "{:>5} {:>8} {:>12.3} {:>14.0} {:>13.0} {:>8.2} {:>10.2}",
            n_cores,
            stats.frames_decoded,
            stats.wall_seconds,
            stats.coded_bits_per_second,
            stats.info_bits_per_second,
            speedup,
            speedup / n_cores as f64
        );
    }
    println!("reference FPGA architecture scaling: 1.00/1.98/3.93/4.90/5.90 for 1/2/4/5/6 cores");
    Ok(())
}
