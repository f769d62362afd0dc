//! Batch front-end for LLR quantizer design, compression statistics,
//! link simulation, SNR-gap evaluation and memory accounting.
//!
//! Every command writes its outputs plus a `manifest.json` (command,
//! config and config hash) into the output directory, so a run is
//! reproducible from its manifest alone.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use llrq_core::artifact::{self, Artifact, Payload};
use llrq_core::compress::{build_huffman, SubstitutionLossTable};
use llrq_core::constellation::build_qam;
use llrq_core::design::{
    allocate_bits, allocate_bits_exhaustive, allocation_metric, bank_from_alloc, build_mi_table,
    unopt_bank, unquantized_gmi, MiTable, StepObjective,
};
use llrq_core::memory;
use llrq_core::sim::{bank_gmi_fast, run_sim, snr_gap, JointPoint, SimConfig, SimSystem};
use llrq_core::stats::ChannelModel;
use llrq_core::Error;

/// Fading quadrature order used for C/N sweep curves.
const SWEEP_FADING_ORDER: usize = 48;

#[derive(Parser)]
#[command(name = "llrq", about = "GMI-optimal LLR quantization and compression toolbox")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum ChannelArg {
    Awgn,
    Rayleigh,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum ObjectiveArg {
    /// Uniform-reconstruction GMI with optimized metric scale.
    Urgmi,
    /// Plain mutual information I(B;V).
    Mi,
}

impl ObjectiveArg {
    fn into_core(self) -> StepObjective {
        match self {
            ObjectiveArg::Urgmi => StepObjective::UniformReconGmi,
            ObjectiveArg::Mi => StepObjective::MutualInformation,
        }
    }
}

#[derive(Args, Serialize)]
struct CommonArgs {
    /// Constellation size.
    #[arg(long, default_value_t = 4096)]
    m: usize,
    /// Channel family.
    #[arg(long, value_enum, default_value_t = ChannelArg::Awgn)]
    channel: ChannelArg,
    /// Carrier-to-noise ratio in dB (defaults to the working point of the
    /// chosen channel: 32.2 for AWGN, 34 for Rayleigh).
    #[arg(long)]
    cn: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Cache directory (falls back to $LLRQ_CACHE_DIR, then <out>/cache).
    #[arg(long)]
    cache: Option<PathBuf>,
}

impl CommonArgs {
    fn channel_model(&self) -> ChannelModel {
        let cn = self.cn.unwrap_or(match self.channel {
            ChannelArg::Awgn => 32.2,
            ChannelArg::Rayleigh => 34.0,
        });
        match self.channel {
            ChannelArg::Awgn => ChannelModel::awgn(cn),
            ChannelArg::Rayleigh => ChannelModel::rayleigh(cn),
        }
    }

    fn cache_dir(&self) -> PathBuf {
        self.cache
            .clone()
            .or_else(|| std::env::var_os("LLRQ_CACHE_DIR").map(PathBuf::from))
            .unwrap_or_else(|| self.out.join("cache"))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Design per-bit quantizers: optimal steps, MI table, bit allocations.
    Design(DesignArgs),
    /// Huffman word-length CCDF and substitution loss tables.
    CompressStats(CompressStatsArgs),
    /// End-to-end Monte Carlo of the receiver chain.
    Simulate(SimulateArgs),
    /// SNR gaps of quantized / compressed designs against the unquantized
    /// reference.
    Gap(GapArgs),
    /// De-interleaver memory accounting.
    Memory(MemoryArgs),
}

#[derive(Args, Serialize)]
struct DesignArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Width range for the step table, e.g. 2..6 (inclusive).
    #[arg(long = "w-range", default_value = "1..8")]
    w_range: String,
    /// Also emit greedy allocations for these total budgets, e.g. 12..50
    /// (inclusive, step 2).
    #[arg(long)]
    alloc: bool,
    /// Budget range for --alloc.
    #[arg(long = "W", default_value = "12..50")]
    budgets: String,
    /// Cross-check greedy allocations against exhaustive search (small
    /// constellations only).
    #[arg(long)]
    verify_exhaustive: bool,
    /// Step-selection objective.
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Urgmi)]
    objective: ObjectiveArg,
}

#[derive(Args, Serialize)]
struct CompressStatsArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Total quantizer bits per symbol.
    #[arg(long = "W", default_value_t = 60)]
    total_bits: usize,
    /// Optional fixed word budget; enables substitution statistics.
    #[arg(long)]
    nbar: Option<usize>,
    #[arg(long, default_value_t = 1_000_000)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Urgmi)]
    objective: ObjectiveArg,
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long = "W", default_value_t = 36)]
    total_bits: usize,
    #[arg(long)]
    nbar: Option<usize>,
    #[arg(long, default_value_t = 100_000)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    /// Row-column interleaver rows (requires --cols).
    #[arg(long, requires = "cols")]
    rows: Option<usize>,
    /// Row-column interleaver columns.
    #[arg(long, requires = "rows")]
    cols: Option<usize>,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Urgmi)]
    objective: ObjectiveArg,
}

#[derive(Args, Serialize)]
struct GapArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Word budgets to evaluate, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "24,36")]
    nbar: Vec<usize>,
    /// Evaluate the per-bit-optimized quantizer (W = budget).
    #[arg(long)]
    quant: bool,
    /// Evaluate the shared-quantizer baseline.
    #[arg(long)]
    unopt: bool,
    /// Evaluate compressed designs (best W per budget).
    #[arg(long)]
    comp: bool,
    /// Candidate W offsets above the budget for --comp, e.g. 0..14.
    #[arg(long, default_value = "0..14")]
    comp_w_extra: String,
    #[arg(long, default_value_t = 200_000)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Highest C/N scanned before declaring the target unreachable.
    #[arg(long)]
    cn_max: Option<f64>,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Urgmi)]
    objective: ObjectiveArg,
}

#[derive(Args, Serialize)]
struct MemoryArgs {
    /// Use the bundled worst-case preset rows.
    #[arg(long, default_value = "table6")]
    preset: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Design(args) => cmd_design(args),
        Command::CompressStats(args) => cmd_compress_stats(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Gap(args) => cmd_gap(args),
        Command::Memory(args) => cmd_memory(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                CliError::Config(_) => 2,
                CliError::Core(Error::InfeasibleBudget { .. }) | CliError::Core(Error::TooLarge(_)) => 3,
                CliError::Core(Error::QuadratureNotConverged { .. }) => 4,
                CliError::Core(_) => 2,
                CliError::Io(_) => 2,
            })
        }
    }
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Core(Error),
    Io(std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(s) => write!(f, "invalid configuration: {s}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "io: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

type CliResult = Result<(), CliError>;

/// Parse "a..b" as an inclusive range.
fn parse_range(s: &str) -> Result<(usize, usize), CliError> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| CliError::Config(format!("expected a..b range, got {s}")))?;
    let lo: usize = a
        .parse()
        .map_err(|_| CliError::Config(format!("bad range start {a}")))?;
    let hi: usize = b
        .parse()
        .map_err(|_| CliError::Config(format!("bad range end {b}")))?;
    if lo > hi {
        return Err(CliError::Config(format!("empty range {s}")));
    }
    Ok((lo, hi))
}

fn write_output(dir: &Path, name: &str, contents: &str) -> CliResult {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_manifest<C: Serialize>(dir: &Path, command: &str, config: &C) -> CliResult {
    let config_json = serde_json::to_string_pretty(config)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let hash = hex_digest(config_json.as_bytes());
    let manifest = serde_json::json!({
        "command": command,
        "config": serde_json::from_str::<serde_json::Value>(&config_json).unwrap(),
        "config_sha256": hash,
        "artifact_version": artifact::ARTIFACT_VERSION,
        "grid_version": llrq_core::design::GRID_VERSION,
    });
    write_output(dir, "manifest.json", &serde_json::to_string_pretty(&manifest).unwrap())
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn cached_table(
    common: &CommonArgs,
    w_max: u32,
    objective: StepObjective,
) -> Result<MiTable, CliError> {
    let c = build_qam(common.m)?;
    let channel = common.channel_model();
    let cache = common.cache_dir();
    Ok(artifact::design_cached(
        Some(&cache),
        common.m,
        &channel,
        w_max,
        objective,
        || build_mi_table(&c, &channel, w_max, objective),
    )?)
}

fn cmd_design(args: DesignArgs) -> CliResult {
    let (w_lo, w_hi) = parse_range(&args.w_range)?;
    if w_lo < 1 || w_hi > 16 {
        return Err(CliError::Config(format!(
            "width range {}..{} out of bounds",
            w_lo, w_hi
        )));
    }
    let objective = args.objective.into_core();
    let c = build_qam(args.common.m)?;
    let channel = args.common.channel_model();
    let table = cached_table(&args.common, w_hi as u32, objective)?;
    let out = &args.common.out;

    // Step table: one row per width, one column per axis pair.
    let pairs = table.pairs();
    let mut steps = String::from("w");
    for p in 0..pairs {
        steps.push_str(&format!(",k{}_{}", 2 * p + 1, 2 * p + 2));
    }
    steps.push('\n');
    for w in w_lo..=w_hi {
        steps.push_str(&w.to_string());
        for p in 0..pairs {
            match table.step[p][w] {
                Some(q) => steps.push_str(&format!(",{q:.4}")),
                None => steps.push(','),
            }
        }
        steps.push('\n');
    }
    write_output(out, "steps.csv", &steps)?;

    let mut mi = String::from("w");
    for p in 0..pairs {
        mi.push_str(&format!(",k{}_{}", 2 * p + 1, 2 * p + 2));
    }
    mi.push('\n');
    for w in w_lo..=w_hi {
        mi.push_str(&w.to_string());
        for p in 0..pairs {
            mi.push_str(&format!(",{:.6}", table.mi[p][w]));
        }
        mi.push('\n');
    }
    write_output(out, "mi.csv", &mi)?;

    if args.alloc {
        let (b_lo, b_hi) = parse_range(&args.budgets)?;
        let mut csv = String::from("W");
        for p in 0..pairs {
            csv.push_str(&format!(",w{}_{}", 2 * p + 1, 2 * p + 2));
        }
        csv.push_str(",gmi\n");
        let m_bits = c.bits_per_symbol();
        for total in (b_lo..=b_hi).step_by(2) {
            let alloc = allocate_bits(&table, total, m_bits)?;
            csv.push_str(&total.to_string());
            for p in 0..pairs {
                csv.push_str(&format!(",{}", alloc[2 * p]));
            }
            csv.push_str(&format!(",{:.6}\n", llrq_core::design::allocation_mi(&table, &alloc)));
        }
        write_output(out, "alloc.csv", &csv)?;
    }

    if args.verify_exhaustive {
        let m_bits = c.bits_per_symbol();
        let mut csv = String::from("W,greedy_metric,exhaustive_metric,tie\n");
        let cap = (m_bits * table.w_max as usize).min(24);
        for total in 0..=cap {
            let g = allocate_bits(&table, total, m_bits)?;
            let e = allocate_bits_exhaustive(&table, total, m_bits)?;
            let gv = allocation_metric(&table, &g);
            let ev = allocation_metric(&table, &e);
            csv.push_str(&format!(
                "{total},{gv:.9},{ev:.9},{}\n",
                ((gv - ev).abs() < 1e-9)
            ));
        }
        csv.push_str(&format!(
            "upper_convex,{},,\n",
            table.is_upper_convex(1e-9)
        ));
        write_output(out, "exhaustive_check.csv", &csv)?;
    }

    artifact::save(
        &out.join("design.json"),
        &Artifact::new(Payload::Design {
            m: args.common.m,
            channel,
            objective,
            table,
        }),
    )?;
    println!("wrote {}", out.join("design.json").display());
    write_manifest(out, "design", &args)
}

fn cmd_compress_stats(args: CompressStatsArgs) -> CliResult {
    let objective = args.objective.into_core();
    let c = build_qam(args.common.m)?;
    let channel = args.common.channel_model();
    let w_max = 8.max(args.total_bits.div_ceil(c.bits_per_symbol()) as u32);
    let table = cached_table(&args.common, w_max, objective)?;
    let alloc = allocate_bits(&table, args.total_bits, c.bits_per_symbol())?;
    let (bank, pmfs) = bank_from_alloc(&c, &channel, &table, &alloc)?;
    let codebook = build_huffman(&pmfs);
    let losses = SubstitutionLossTable::build(&pmfs, &codebook);
    let out = &args.common.out;

    let system = SimSystem {
        constellation: &c,
        bank: &bank,
        codebook: Some(&codebook),
        losses: Some(&losses),
    };
    let config = SimConfig {
        channel,
        budget: args.nbar,
        trials: args.trials,
        seed: args.seed,
        interleaver: None,
    };
    let report = run_sim(&system, &config)?;
    write_output(out, "ccdf.csv", &report.ccdf_csv())?;
    write_output(out, "report.csv", &report.to_csv())?;

    let mut delta = String::from("bit,a,c,delta,len_a,len_c\n");
    for (k, dk) in losses.delta.iter().enumerate() {
        let lens = &codebook.positions[k].lengths;
        for a in 0..dk.len() {
            for cidx in 0..dk.len() {
                delta.push_str(&format!(
                    "{k},{a},{cidx},{:.6e},{},{}\n",
                    dk[a][cidx], lens[a], lens[cidx]
                ));
            }
        }
    }
    write_output(out, "delta.csv", &delta)?;

    artifact::save(
        &out.join("bank.json"),
        &Artifact::new(Payload::Bank {
            m: args.common.m,
            channel,
            total_bits: args.total_bits,
            bank,
            pmfs,
            codebook: Some(codebook),
        }),
    )?;
    println!("wrote {}", out.join("bank.json").display());
    write_manifest(out, "compress-stats", &args)
}

fn cmd_simulate(args: SimulateArgs) -> CliResult {
    let objective = args.objective.into_core();
    let c = build_qam(args.common.m)?;
    let channel = args.common.channel_model();
    let w_max = 8.max(args.total_bits.div_ceil(c.bits_per_symbol()) as u32);
    let table = cached_table(&args.common, w_max, objective)?;
    let alloc = allocate_bits(&table, args.total_bits, c.bits_per_symbol())?;
    let (bank, pmfs) = bank_from_alloc(&c, &channel, &table, &alloc)?;
    let codebook = build_huffman(&pmfs);
    let losses = SubstitutionLossTable::build(&pmfs, &codebook);
    let out = &args.common.out;

    let system = SimSystem {
        constellation: &c,
        bank: &bank,
        codebook: Some(&codebook),
        losses: Some(&losses),
    };
    let config = SimConfig {
        channel,
        budget: args.nbar,
        trials: args.trials,
        seed: args.seed,
        interleaver: args.rows.zip(args.cols),
    };
    let report = run_sim(&system, &config)?;
    write_output(out, "report.csv", &report.to_csv())?;
    write_output(out, "ccdf.csv", &report.ccdf_csv())?;
    write_manifest(out, "simulate", &args)
}

fn cmd_gap(args: GapArgs) -> CliResult {
    let objective = args.objective.into_core();
    let c = build_qam(args.common.m)?;
    let channel = args.common.channel_model();
    let cn_work = channel.cn_db;
    let cn_max = args.cn_max.unwrap_or(cn_work + 6.0);
    let reference = unquantized_gmi(&c, &channel)?;
    let out = &args.common.out;
    let m_bits = c.bits_per_symbol();

    let mut csv = String::from("scheme,nbar,total_bits,gap_db\n");
    let channel_at = |cn: f64| ChannelModel {
        kind: channel.kind,
        cn_db: cn,
    };

    for &nbar in &args.nbar {
        if args.quant {
            let w_max = 8.max(nbar.div_ceil(m_bits) as u32);
            let table = cached_table(&args.common, w_max, objective)?;
            let alloc = allocate_bits(&table, nbar, m_bits)?;
            let (bank, _) = bank_from_alloc(&c, &channel, &table, &alloc)?;
            let gap = snr_gap(
                |cn| Ok(bank_gmi_fast(&c, &bank, &channel_at(cn), SWEEP_FADING_ORDER)),
                reference,
                cn_work,
                cn_max,
            )?;
            csv.push_str(&format!("quant,{nbar},{nbar},{gap:.4}\n"));
        }
        if args.unopt {
            if nbar % m_bits != 0 {
                return Err(CliError::Config(format!(
                    "unopt budget {nbar} must be a multiple of log2(M) = {m_bits}"
                )));
            }
            let w = (nbar / m_bits) as u32;
            let (bank, _) = unopt_bank(&c, &channel, w, objective)?;
            let gap = snr_gap(
                |cn| Ok(bank_gmi_fast(&c, &bank, &channel_at(cn), SWEEP_FADING_ORDER)),
                reference,
                cn_work,
                cn_max,
            )?;
            csv.push_str(&format!("unopt,{nbar},{nbar},{gap:.4}\n"));
        }
        if args.comp {
            let (x_lo, x_hi) = parse_range(&args.comp_w_extra)?;
            let mut best: Option<JointPoint> = None;
            for extra in (x_lo..=x_hi).step_by(2) {
                let total = nbar + extra;
                if total > m_bits * 8 {
                    break;
                }
                let w_max = 8.max(total.div_ceil(m_bits) as u32);
                let table = cached_table(&args.common, w_max, objective)?;
                let alloc = allocate_bits(&table, total, m_bits)?;
                let (bank, pmfs) = bank_from_alloc(&c, &channel, &table, &alloc)?;
                let codebook = build_huffman(&pmfs);
                let losses = SubstitutionLossTable::build(&pmfs, &codebook);
                let gap = snr_gap(
                    |cn| {
                        llrq_core::compress::expected_compressed_gmi(
                            &c,
                            &bank,
                            &codebook,
                            &losses,
                            nbar,
                            &channel_at(cn),
                            args.trials,
                            args.seed,
                        )
                    },
                    reference,
                    cn_work,
                    cn_max,
                )?;
                csv.push_str(&format!("comp,{nbar},{total},{gap:.4}\n"));
                if best.as_ref().map_or(true, |b| gap < b.gap_db) {
                    best = Some(JointPoint {
                        budget: nbar,
                        total_bits: total,
                        gap_db: gap,
                    });
                }
            }
            if let Some(b) = best {
                csv.push_str(&format!("comp_best,{nbar},{},{:.4}\n", b.total_bits, b.gap_db));
            }
        }
    }
    write_output(out, "gaps.csv", &csv)?;
    write_manifest(out, "gap", &args)
}

fn cmd_memory(args: MemoryArgs) -> CliResult {
    if args.preset != "table6" {
        return Err(CliError::Config(format!(
            "unknown preset {} (available: table6)",
            args.preset
        )));
    }
    let csv = memory::preset_csv();
    print!("{csv}");
    write_output(&args.out, "memory.csv", &csv)?;
    write_manifest(&args.out, "memory", &args)
}
