use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use viscoptt::config::PipelineConfig;
use viscoptt::eval::ModelScope;
use viscoptt::pipeline::{run_pipeline, PipelineError};
use viscoptt::record::{save_record, RecordFile};
use viscoptt::regress::Target;
use viscoptt::synth::{synth_cohort, CohortSpec};

const EXIT_USAGE: u8 = 1;
const EXIT_ALL_FAILED: u8 = 2;

/// Cuffless blood-pressure estimation from synchronised ECG and PPG records.
#[derive(Parser)]
#[command(name = "viscoptt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline over a set of records and write reports and models.
    Run(RunArgs),
    /// Write a synthetic cohort in the record format.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Glob pattern for record files; may be repeated.
    #[arg(long = "records", value_name = "GLOB", required = true)]
    records: Vec<String>,
    /// `key = value` configuration file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Also run the elastic-only baseline and report the RMSE delta.
    #[arg(long)]
    ablation: bool,
    /// Seed for the EEMD noise and the forests.
    #[arg(long, value_name = "INT")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Train one forest on all subjects instead of one per subject.
    #[arg(long)]
    pooled: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    #[arg(long, default_value_t = 50)]
    subjects: usize,
    #[arg(long, default_value_t = 200)]
    beats: usize,
    #[arg(long, default_value_t = 125.0)]
    fs: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Failure carrying its process exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn usage(error: anyhow::Error) -> Failure {
    Failure { code: EXIT_USAGE, error }
}

fn expand(patterns: &[String]) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for pattern in patterns {
        let before = paths.len();
        for entry in glob::glob(pattern).with_context(|| format!("invalid glob {pattern:?}"))? {
            let path = entry?;
            if path.is_file() {
                paths.push(path);
            }
        }
        if paths.len() == before {
            bail!("no record files match {pattern:?}");
        }
    }
    paths.sort();
    paths.dedup();
    Ok(paths)
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let mut cfg = match &args.config {
        Some(path) => PipelineConfig::load(path)
            .with_context(|| format!("config {}", path.display()))
            .map_err(usage)?,
        None => PipelineConfig::default(),
    };
    if let Some(out) = args.out {
        cfg.output_dir = out;
    }
    if let Some(seed) = args.seed {
        cfg.set_seed(seed);
    }
    cfg.ablation |= args.ablation;
    if args.pooled {
        cfg.model_scope = ModelScope::Pooled;
    }
    let paths = expand(&args.records).map_err(usage)?;
    info!("{} record files", paths.len());

    let out = run_pipeline(&cfg, &paths).map_err(|e| match e {
        PipelineError::AllRecordsFailed(_) => Failure { code: EXIT_ALL_FAILED, error: e.into() },
        PipelineError::NoRecords | PipelineError::Config(_) => usage(e.into()),
        e => Failure { code: EXIT_USAGE, error: e.into() },
    })?;

    println!(
        "records: {} in, {} processed, {} skipped",
        out.records_in,
        out.processed.len(),
        out.skipped.len()
    );
    for target in [Target::Sbp, Target::Dbp] {
        let r = &out.target(target).pooled;
        println!(
            "{}: RMSE {:.2} mmHg, bias {:+.2}, SD {:.2}, AAMI {}",
            target.name().to_uppercase(),
            r.rmse,
            r.bias,
            r.sd,
            if r.aami_pass { "pass" } else { "fail" }
        );
    }
    if let Some(a) = &out.ablation {
        println!(
            "ablation: SBP RMSE {:.2} -> {:.2} mmHg ({:.1}% reduction)",
            a.baseline.sbp.rmse,
            a.proposed.sbp.rmse,
            100.0 * a.rmse_reduction(Target::Sbp)
        );
    }
    println!("artifacts in {}", cfg.output_dir.display());
    Ok(())
}

fn synth(args: SynthArgs) -> Result<(), Failure> {
    let spec = CohortSpec { n_subjects: args.subjects, n_beats: args.beats, fs: args.fs, seed: args.seed, ..Default::default() };
    let cohort = synth_cohort(&spec).context("cannot generate cohort").map_err(usage)?;
    let write = || -> Result<()> {
        std::fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
        for subject in &cohort {
            let path = args.out.join(format!("{}.csv", subject.id));
            save_record(&RecordFile::from_synth(subject), &path).with_context(|| format!("cannot write {}", path.display()))?;
        }
        Ok(())
    };
    write().map_err(usage)?;
    println!("wrote {} records to {}", cohort.len(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Synth(args) => synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
