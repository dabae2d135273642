use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cbt_core::array_model::{AngleGrid, ArrayGeometry};
use cbt_core::block_code::{min_distance, BitString, BlockCode, DecodeMode};
use cbt_core::codebook::{build_codebooks, GsConfig, RisSynthesis};
use cbt_core::experiments::{
    codebook_document, export_codebooks, export_results, export_trials, run_sweep_logged, ExperimentConfig,
    OutputFormat, ResultSet,
};
use cbt_core::training_sim::{default_codes, training_overhead, ProtocolKind};
use cbt_core::{Error, Result};

#[derive(Parser)]
#[command(name = "cbt", version, about = "Coded beam training for RIS-assisted links")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the BS and RIS codes, their minimum distance and correction coverage.
    ValidateCode(Dims),
    /// Design both coded-training codebooks and write them as JSON.
    DesignCodebook(DesignArgs),
    /// Success rate and rate versus training SNR.
    SweepSnr(SweepArgs),
    /// Success rate and rate versus pilot budget.
    SweepPilots(SweepArgs),
    /// Pilot overhead of each protocol.
    Overhead(Dims),
}

#[derive(Args)]
struct Dims {
    /// BS antennas.
    #[arg(long, default_value_t = 16)]
    nt: usize,
    /// RIS size as ROWSxCOLS.
    #[arg(long, default_value = "8x8", value_parser = parse_ris)]
    ris: (usize, usize),
}

#[derive(Args)]
struct DesignArgs {
    #[command(flatten)]
    dims: Dims,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.3)]
    delta: f64,
    #[arg(long, default_value_t = 100)]
    k_iter: usize,
    #[arg(long, value_enum, default_value_t = Synthesis::Kronecker)]
    synthesis: Synthesis,
    #[arg(long, default_value = "codebook.json")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Synthesis {
    Kronecker,
    Planar,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Desk,
    Full,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON experiment configuration; a preset is used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Preset::Desk)]
    preset: Preset,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    noiseless: bool,
    /// Result file; a table is printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Per-trial CSV log.
    #[arg(long)]
    log_trials: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn parse_ris(s: &str) -> std::result::Result<(usize, usize), String> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected ROWSxCOLS, got '{s}'"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("'{v}': {e}"));
    Ok((parse(r)?, parse(c)?))
}

fn geometry(d: &Dims) -> Result<ArrayGeometry> {
    ArrayGeometry::new(d.nt, d.ris.0, d.ris.1)
}

fn print_code(name: &str, code: &BlockCode) -> Result<()> {
    println!("{name}: k = {}, n = {}", code.k, code.n);
    if let Some(s) = code.split {
        println!("  split: k1 = {}, m1 = {}, k2 = {}, m2 = {}", s.k1, s.m1, s.k2, s.m2);
    }
    println!("  Q =");
    for line in code.q.to_string().lines() {
        println!("    {line}");
    }
    println!("  d_min = {}", min_distance(code)?);
    let mut single = 0;
    let mut total = 0;
    for c in code.codewords() {
        for p in 0..code.n {
            total += 1;
            let report = code.decode(&c.flipped(&[p]), DecodeMode::OneBit)?;
            single += usize::from(report.info == c.slice(0..code.k));
        }
    }
    println!("  single errors corrected: {single}/{total}");
    if let Some(s) = code.split {
        let mut ok = 0;
        let mut ok_one = 0;
        let mut total = 0;
        for c in code.codewords() {
            for &p in &s.type_one_positions() {
                for &q in &s.type_two_positions() {
                    total += 1;
                    let x: BitString = c.flipped(&[p, q]);
                    let info = c.slice(0..code.k);
                    ok += usize::from(code.decode(&x, DecodeMode::DecoupledTwoBit)?.info == info);
                    ok_one += usize::from(code.decode(&x, DecodeMode::OneBit)?.info == info);
                }
            }
        }
        println!("  cross-dimension double errors corrected: {ok}/{total} (decoupled), {ok_one}/{total} (one-bit)");
    }
    Ok(())
}

fn validate_code(d: &Dims) -> Result<()> {
    let (code_t, code_r) = default_codes(&geometry(d)?)?;
    print_code("BS code", &code_t)?;
    print_code("RIS code", &code_r)
}

fn overhead(d: &Dims) -> Result<()> {
    let g = geometry(d)?;
    for (name, kind) in [
        ("exhaustive", ProtocolKind::Exhaustive),
        ("hierarchical", ProtocolKind::Hierarchical),
        ("coded", ProtocolKind::Coded),
    ] {
        println!("{name}: {}", training_overhead(kind, &g, None)?);
    }
    Ok(())
}

fn design(a: &DesignArgs) -> Result<()> {
    let g = geometry(&a.dims)?;
    let grid = AngleGrid::new(&g)?;
    let (code_t, code_r) = default_codes(&g)?;
    let cfg = GsConfig {
        delta: a.delta,
        k_iter: a.k_iter,
        target_amplitude: None,
        seed: a.seed,
    };
    let synthesis = match a.synthesis {
        Synthesis::Kronecker => RisSynthesis::Kronecker,
        Synthesis::Planar => RisSynthesis::Planar,
    };
    let (bs, ris) = build_codebooks(&code_t, &code_r, &grid, &g, &cfg, synthesis)?;
    export_codebooks(&codebook_document(&g, &cfg, synthesis, &bs, &ris), &a.out)?;
    println!("layer polarity final_trace min_in max_out");
    for r in &ris.design_report {
        println!(
            "{:>5} {:>8} {:.3e} {:.4} {:.4}",
            r.layer,
            format!("{:?}", r.polarity).to_lowercase(),
            r.trace.last().copied().unwrap_or(0.0),
            r.min_in,
            r.max_out
        );
    }
    println!("wrote {}", a.out.display());
    Ok(())
}

fn print_table(rs: &ResultSet) {
    println!(
        "{:<26} {:>10} {:>7} {:>7} {:>9} {:>9} {:>10} {:>9}",
        "protocol", "value", "trials", "pilots", "success", "ci95", "rate", "ci95"
    );
    for r in &rs.rows {
        println!(
            "{:<26} {:>10} {:>7} {:>7} {:>9.4} {:>9.4} {:>10.4} {:>9.4}",
            r.protocol, r.sweep_value, r.trials, r.pilots, r.success_rate, r.success_ci95, r.mean_rate, r.rate_ci95
        );
    }
}

fn sweep(a: &SweepArgs, pilots: bool) -> Result<()> {
    let mut cfg = match (&a.config, a.preset, pilots) {
        (Some(path), _, _) => ExperimentConfig::from_json_file(path)?,
        (None, Preset::Desk, false) => ExperimentConfig::desk_snr(),
        (None, Preset::Desk, true) => ExperimentConfig::desk_pilots(),
        (None, Preset::Full, false) => ExperimentConfig::full_snr(),
        (None, Preset::Full, true) => ExperimentConfig::full_pilots(),
    };
    let expected = if pilots { "pilots" } else { "snr_db" };
    if cfg.sweep.label() != expected {
        return Err(Error::Config(format!(
            "configuration sweeps {}, this subcommand sweeps {expected}",
            cfg.sweep.label()
        )));
    }
    if let Some(s) = a.seed {
        cfg.master_seed = s;
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    cfg.noiseless |= a.noiseless;
    let (rs, log) = run_sweep_logged(&cfg)?;
    match &a.out {
        Some(path) => {
            let format = match a.format {
                Format::Csv => OutputFormat::Csv,
                Format::Json => OutputFormat::Json,
            };
            export_results(&rs, path, format)?;
            println!("wrote {}", path.display());
        }
        None => print_table(&rs),
    }
    if let Some(path) = &a.log_trials {
        export_trials(&log, path)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::ValidateCode(d) => validate_code(d),
        Command::DesignCodebook(a) => design(a),
        Command::SweepSnr(a) => sweep(a, false),
        Command::SweepPilots(a) => sweep(a, true),
        Command::Overhead(d) => overhead(d),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
