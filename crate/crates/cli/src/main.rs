use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use evmclone::cluster::DEFAULT_PAIR_FLOOR;
use evmclone::evm::InputKind;
use evmclone::similarity::DEFAULT_THRESHOLD;

mod commands;
mod workdir;

/// Bytecode-level clone detection for Ethereum contracts.
#[derive(Parser, Debug)]
#[command(name = "evmclone", version, propagate_version = true)]
struct Cli {
    /// More log output on stderr (-v debug, -vv trace).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    /// Only log errors.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    quiet: bool,

    /// Omit the generation-time line from text reports.
    #[arg(long, global = true)]
    no_timestamp: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the instruction listing of a bytecode.
    Disasm(DisasmArgs),
    /// Group a corpus by token hash and report duplicates.
    Dedup(CorpusArgs),
    /// Dedup a corpus and write the fingerprint database.
    Fingerprint(CorpusArgs),
    /// Score all fingerprint pairs and write the similar ones.
    Compare(CompareArgs),
    /// Cluster similar contracts and report cluster concentration.
    Cluster(ClusterArgs),
    /// Detect cloned DApps and their market volume.
    Dapp(DappArgs),
    /// Tabulate scanner findings across similar pairs.
    Vuln(VulnArgs),
    /// Fetch deployed runtime code over JSON-RPC into a corpus file.
    Fetch(FetchArgs),
}

fn percent(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..=100.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 100]"))
    }
}

#[derive(Args, Debug)]
struct DisasmArgs {
    /// Hex string (optionally 0x-prefixed) or a file holding hex or raw bytes.
    #[arg(long)]
    input: String,

    /// Reduce to runtime code first (creation and Swarm code removed).
    #[arg(long)]
    runtime: bool,

    #[arg(long, default_value_t = InputKind::Auto)]
    input_kind: InputKind,
}

#[derive(Args, Debug)]
struct CorpusArgs {
    /// Corpus file, one JSON record per line.
    #[arg(long)]
    input: PathBuf,

    /// Output directory.
    #[arg(long)]
    out: PathBuf,

    /// What the bytecode field holds: auto, runtime or creation.
    #[arg(long, default_value_t = InputKind::Auto)]
    input_kind: InputKind,

    /// Number of largest duplicate groups listed in the report.
    #[arg(long, default_value_t = 10)]
    top: usize,
}

#[derive(Args, Debug, Clone, Copy)]
struct Threshold {
    /// Similarity score (0-100) at which two contracts count as clones.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD, value_parser = percent)]
    threshold: f64,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Work directory written by `fingerprint`.
    #[arg(long)]
    input: PathBuf,

    /// Output directory; defaults to the input directory.
    #[arg(long)]
    out: Option<PathBuf>,

    #[command(flatten)]
    threshold: Threshold,

    /// Lowest score stored in the pair file; must not exceed the threshold.
    #[arg(long, default_value_t = DEFAULT_PAIR_FLOOR, value_parser = percent)]
    prune_floor: f64,

    /// Comparison threads.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
}

#[derive(Args, Debug)]
struct ClusterArgs {
    /// Work directory holding the fingerprint database and pair file.
    #[arg(long)]
    input: PathBuf,

    #[arg(long)]
    out: Option<PathBuf>,

    #[command(flatten)]
    threshold: Threshold,

    /// Template list (`token_hash,name`) used to label clusters.
    #[arg(long)]
    templates: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DappArgs {
    /// Work directory holding the fingerprint database and groups.
    #[arg(long)]
    input: PathBuf,

    #[arg(long)]
    out: Option<PathBuf>,

    /// DApp manifests, one JSON object per line.
    #[arg(long)]
    dapps: PathBuf,

    /// Template list; template contracts are left out of DApp comparison.
    #[arg(long)]
    templates: Option<PathBuf>,

    #[command(flatten)]
    threshold: Threshold,
}

#[derive(Args, Debug)]
struct VulnArgs {
    /// Work directory holding the pair file and groups.
    #[arg(long)]
    input: PathBuf,

    #[arg(long)]
    out: Option<PathBuf>,

    /// Scanner findings, `contract_id,vuln_type,count` rows.
    #[arg(long)]
    vulns: PathBuf,

    #[command(flatten)]
    threshold: Threshold,
}

#[derive(Args, Debug)]
struct FetchArgs {
    /// Addresses, one per line, optionally followed by `,deployer`.
    #[arg(long)]
    input: PathBuf,

    /// Corpus file to write.
    #[arg(long)]
    out: PathBuf,

    /// Node endpoint. Overrides EVMCLONE_RPC_URL.
    #[arg(long)]
    rpc_url: Option<String>,

    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 10)]
    timeout: u64,

    /// Retries after a transport failure.
    #[arg(long, default_value_t = 3)]
    retries: u32,
}

fn init_logging(cli: &Cli) {
    let level = if cli.quiet {
        log::LevelFilter::Error
    } else {
        match cli.verbose {
            0 => log::LevelFilter::Info,
            1 => log::LevelFilter::Debug,
            _ => log::LevelFilter::Trace,
        }
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(&cli);
    let timestamp = !cli.no_timestamp;
    let result = match cli.command {
        Command::Disasm(a) => commands::disasm(&a.input, a.runtime.then_some(a.input_kind)),
        Command::Dedup(a) => commands::dedup(&a.input, &a.out, a.input_kind, a.top, timestamp),
        Command::Fingerprint(a) => commands::fingerprint(&a.input, &a.out, a.input_kind, a.top, timestamp),
        Command::Compare(a) => {
            if a.prune_floor > a.threshold.threshold {
                return usage_error(&format!(
                    "--prune-floor {} exceeds --threshold {}",
                    a.prune_floor, a.threshold.threshold
                ));
            }
            let workers = a.workers.map_or_else(
                || std::thread::available_parallelism().map_or(1, |n| n.get()),
                |w| w as usize,
            );
            let out = a.out.unwrap_or_else(|| a.input.clone());
            commands::compare(&a.input, &out, a.threshold.threshold, a.prune_floor, workers)
        }
        Command::Cluster(a) => {
            let out = a.out.unwrap_or_else(|| a.input.clone());
            commands::cluster(&a.input, &out, a.threshold.threshold, a.templates.as_deref(), timestamp)
        }
        Command::Dapp(a) => {
            let out = a.out.unwrap_or_else(|| a.input.clone());
            commands::dapp(
                &a.input,
                &out,
                &a.dapps,
                a.templates.as_deref(),
                a.threshold.threshold,
                timestamp,
            )
        }
        Command::Vuln(a) => {
            let out = a.out.unwrap_or_else(|| a.input.clone());
            commands::vuln(&a.input, &out, &a.vulns, a.threshold.threshold, timestamp)
        }
        Command::Fetch(a) => commands::fetch(&a.input, &a.out, a.rpc_url, a.timeout, a.retries),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::FAILURE
        }
    }
}

fn usage_error(msg: &str) -> ExitCode {
    log::error!("{msg}");
    ExitCode::from(2)
}
