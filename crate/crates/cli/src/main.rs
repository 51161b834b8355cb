mod config;
mod report;
mod rows;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};

use recon_core::pcm::{generate_raptor_family_with_degree, write_alist, BASE_COL_DEGREE};
use recon_core::protocol::run_campaign;
use recon_core::DefaultScalar;

use config::ExperimentConfig;
use rows::{ResultRow, ARTIFACT_VERSION, CSV_HEADER};

#[derive(Parser)]
#[command(name = "recon", version, about = "Syndrome-reconciliation campaign runner")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a raptor-like code family and write it in alist format.
    GenerateCode(GenerateArgs),
    /// Run the campaign grid described by a config file.
    Run(RunArgs),
    /// Same as `run`; the natural name when the config holds a grid.
    Sweep(RunArgs),
    /// Summarize a results CSV against a baseline row.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 4000)]
    base_n: usize,
    #[arg(long, default_value_t = 3000)]
    base_m: usize,
    /// Maximum window-extension depth beyond the base block.
    #[arg(long, default_value_t = 600)]
    max_ext: usize,
    /// Extra columns per extension row.
    #[arg(long, default_value_t = 3)]
    ext_degree: usize,
    /// Column degree of the base block.
    #[arg(long, default_value_t = BASE_COL_DEGREE)]
    base_col_degree: usize,
    /// Output alist path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Directory for relative output paths; defaults to the config's
    /// directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace the config's seed.
    #[arg(long)]
    seed_override: Option<u64>,
    /// Worker threads (default: RECON_WORKERS or all cores). Results do
    /// not depend on this.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    /// Results CSV produced by `run`.
    results: PathBuf,
    /// 1-based data row to use as the gain baseline; default is the best
    /// single-attempt row.
    #[arg(long)]
    baseline_row: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.cmd {
        Cmd::GenerateCode(args) => cmd_generate(args),
        Cmd::Run(args) | Cmd::Sweep(args) => cmd_run(args),
        Cmd::Report(args) => report::run(&args.results, args.baseline_row),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn cmd_generate(args: &GenerateArgs) -> Result<ExitCode> {
    let pcm = generate_raptor_family_with_degree(
        args.seed,
        args.base_n,
        args.base_m,
        args.max_ext,
        args.ext_degree,
        args.base_col_degree,
    )?;
    let text = write_alist(&pcm);
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(&args.out, &text)
        .with_context(|| format!("writing {}", args.out.display()))?;
    let info = (args.base_n - args.base_m) as f64;
    println!(
        "wrote {} ({} rows x {} cols, hash {})",
        args.out.display(),
        pcm.base_m() + pcm.max_depth(),
        pcm.base_n() + pcm.max_depth(),
        rows::sha16(text.as_bytes()),
    );
    println!(
        "base rate {} at depth 0; reachable rates [{}, {}]",
        info / args.base_n as f64,
        info / (args.base_n + args.max_ext) as f64,
        info / args.base_n as f64,
    );
    Ok(ExitCode::SUCCESS)
}

fn workers_from_env() -> Option<usize> {
    std::env::var("RECON_WORKERS").ok()?.parse().ok()
}

fn cmd_run(args: &RunArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let mut cfg: ExperimentConfig = toml::from_str(&text)
        .map_err(|e| anyhow!("{}: {e}", args.config.display()))?;
    if let Some(seed) = args.seed_override {
        cfg.seed = seed;
    }
    cfg.validate().map_err(|m| anyhow!("{}: {m}", args.config.display()))?;

    let config_dir = args.config.parent().unwrap_or(Path::new(".")).to_path_buf();
    let config_hash = rows::config_hash(&cfg);
    let pcm = config::load_code(&cfg.code, &config_dir).map_err(|m| anyhow!(m))?;
    let code_hash = rows::sha16(write_alist(&pcm).as_bytes());
    let workers = args.workers.or_else(workers_from_env);
    eprintln!(
        "code {}x{}+{} (hash {code_hash}); config hash {config_hash}; seed {}; \
         recon {ARTIFACT_VERSION}",
        pcm.base_m(),
        pcm.base_n(),
        pcm.max_depth(),
        cfg.seed,
    );

    let grid = cfg.grid();
    let mut results: Vec<ResultRow> = Vec::with_capacity(grid.len());
    let mut failed = 0usize;
    for pt in &grid {
        let campaign = cfg.campaign(pt);
        match run_campaign::<DefaultScalar>(&pcm, &campaign, workers) {
            Ok(summary) => {
                results.push(ResultRow::new(&cfg, pt, campaign.seed, summary, &config_hash, &code_hash));
            }
            Err(e) => {
                failed += 1;
                eprintln!(
                    "campaign {} (noise[{}], protocol[{}], beta1 {}, dbeta_rel {}) failed: {e}",
                    pt.grid_index, pt.noise_index, pt.protocol_index, pt.beta1, pt.dbeta_rel
                );
            }
        }
    }

    let (csv_path, jsonl_path) = cfg.output.resolved(args.out.as_deref(), &config_dir);
    for path in [&csv_path, &jsonl_path] {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut csv = String::with_capacity(256 * (results.len() + 1));
    csv.push_str(CSV_HEADER);
    csv.push('\n');
    let mut jsonl = String::new();
    for row in &results {
        csv.push_str(&row.csv_line());
        csv.push('\n');
        jsonl.push_str(&row.json_line());
        jsonl.push('\n');
    }
    std::fs::write(&csv_path, csv).with_context(|| format!("writing {}", csv_path.display()))?;
    std::fs::write(&jsonl_path, jsonl)
        .with_context(|| format!("writing {}", jsonl_path.display()))?;
    println!(
        "{} of {} campaigns done; wrote {} and {}",
        results.len(),
        grid.len(),
        csv_path.display(),
        jsonl_path.display()
    );
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
