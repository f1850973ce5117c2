//! `retest`: command-line entry point for the reliability pipeline.
//!
//! Exit codes: 0 ok, 1 other failure (including a failed gate), 2 contract
//! violation, 3 hash mismatch, 4 schema failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use retest_core::estimators::SearchMethod;
use retest_core::ingest::write_long_csv;
use retest_core::pipeline::{cmd_multiverse, cmd_run, cmd_verify, PipelineError, RunConfig, EXIT_OTHER, SMOKE_FIXTURE};
use retest_core::provenance::{output_schemas, to_canonical_json, CheckStatus, RunMode};
use retest_core::synthetic::{generate, smoke_design};

#[derive(Debug, Parser)]
#[command(
    name = "retest",
    version,
    about = "Test-retest reliability pipeline: NLR, ICC, BCa bootstrap, multiverse"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Primary analysis under the default specification.
    Run(RunArgs),
    /// All 24 specifications for every primary measure.
    Multiverse(RunArgs),
    /// Run the promotion gate and write gate_report.json.
    Verify(VerifyArgs),
    /// Regenerate the bundled synthetic smoke fixture.
    Synth(SynthArgs),
    /// Print the pinned output schemas (the content of schemas/outputs.json).
    Schemas,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, default_value = "smoke")]
    mode: RunMode,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Bootstrap replicates [default: 200 in smoke mode, 5000 in final mode]
    #[arg(long)]
    bootstrap: Option<usize>,
    /// Relative paths resolve against --root.
    #[arg(long)]
    contract: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    root: PathBuf,
    /// Smoke-mode long-format CSV override.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value = "kdtree")]
    knn: SearchMethod,
    /// Archive adapter for final-mode ingestion.
    #[arg(long, default_value = "long_csv")]
    adapter: String,
    /// RFC 3339 time, unix seconds, or `now` [default: SOURCE_DATE_EPOCH or the epoch]
    #[arg(long)]
    timestamp: Option<String>,
}

impl RunArgs {
    fn config(self) -> RunConfig {
        let mut cfg = RunConfig::new(self.mode, self.root);
        cfg.base_seed = self.seed;
        if let Some(b) = self.bootstrap {
            cfg.bootstrap_b = b;
        }
        if let Some(c) = self.contract {
            cfg.contract_path = c;
        }
        if let Some(o) = self.out {
            cfg.output_dir = o;
        }
        cfg.data_path = self.data;
        cfg.threads = self.threads;
        cfg.search = self.knn;
        cfg.adapter = self.adapter;
        cfg.timestamp = self.timestamp;
        cfg
    }
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, default_value = "smoke")]
    mode: RunMode,
    #[arg(long, default_value = ".")]
    root: PathBuf,
    /// Where to write the report [default: the mode's results directory]
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value = ".")]
    root: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.4}"))
}

fn execute(command: Command) -> Result<ExitCode, PipelineError> {
    match command {
        Command::Run(args) => {
            let out = cmd_run(&args.config())?;
            let s = &out.summary.inference;
            println!(
                "run ({}): {} measures, {} estimable, {} headline passes; median NLR_delta {}; median ICC(2,1) {}; min q {}",
                out.summary.run_mode,
                s.n_measures,
                s.n_estimable,
                s.pass_count,
                fmt_opt(s.median_nlr_delta),
                fmt_opt(s.median_icc_2_1),
                fmt_opt(s.min_q)
            );
        }
        Command::Multiverse(args) => {
            let out = cmd_multiverse(&args.config())?;
            let s = &out.report.summary;
            println!(
                "multiverse ({}): {} cells, {} estimable, {} insufficient_n, {} degenerate, {} passes; grand median NLR_delta {}",
                out.report.run_mode,
                s.total_cells,
                s.estimable,
                s.insufficient_n,
                s.degenerate,
                s.pass_count,
                fmt_opt(s.grand_median_nlr_delta)
            );
        }
        Command::Verify(args) => {
            let report = cmd_verify(&args.root, args.mode, args.report.as_deref())?;
            for c in &report.checks {
                let tag = match c.status {
                    CheckStatus::Passed => "PASS",
                    CheckStatus::Failed => "FAIL",
                    CheckStatus::Skipped => "SKIP",
                };
                println!("{tag} {:<4} {:<28} {}", c.id, c.name, c.detail);
            }
            println!(
                "gate ({}): {} executed, {} passed, {} skipped, overall {}",
                report.mode,
                report.executed,
                report.passed,
                report.skipped,
                if report.overall { "PASS" } else { "FAIL" }
            );
            if !report.overall {
                return Ok(ExitCode::from(EXIT_OTHER as u8));
            }
        }
        Command::Synth(args) => {
            let path = args.out.unwrap_or_else(|| PathBuf::from(SMOKE_FIXTURE));
            let path = if path.is_absolute() { path } else { args.root.join(path) };
            let rows = generate(&smoke_design());
            let file = std::fs::File::create(&path).map_err(|source| PipelineError::Io {
                path: path.display().to_string(),
                source,
            })?;
            write_long_csv(&rows, std::io::BufWriter::new(file))?;
            println!("wrote {} trial rows to {}", rows.len(), path.display());
        }
        Command::Schemas => {
            print!("{}", String::from_utf8_lossy(&to_canonical_json(&output_schemas())));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
