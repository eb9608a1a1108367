mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

use config::RunConfig;

#[derive(Parser)]
#[command(name = "locepi", version, about = "Locally epistatic genomic prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Simulate a population with known QTL.
    Simulate,
    /// Fit a model per genomic region.
    Fit,
    /// Local heritability along the genome.
    Scan,
    /// Hierarchical test of the region tree.
    Test,
    /// Lasso combination of region EBLUPs.
    Combine,
    /// Predict new lines with the combined model.
    Predict,
    /// Selection indices.
    Select,
    /// Progeny value distributions of crosses.
    Cross,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Fit => "fit",
            Command::Scan => "scan",
            Command::Test => "test",
            Command::Combine => "combine",
            Command::Predict => "predict",
            Command::Select => "select",
            Command::Cross => "cross",
        }
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_manifest(out: &Path, command: Command, cfg: &RunConfig, outcome: &commands::Outcome) -> Result<()> {
    let text = toml::to_string(cfg).context("serializing the configuration")?;
    let hash: String = Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
    std::fs::write(out.join("config.toml"), &text).context("writing config.toml")?;
    let mut table = toml::Table::new();
    table.insert("command".into(), command.name().into());
    table.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    table.insert("seed".into(), toml::Value::Integer(cfg.seed as i64));
    table.insert("threads".into(), toml::Value::Integer(cfg.threads as i64));
    table.insert("config_sha256".into(), hash.into());
    let list = |v: &[String]| toml::Value::Array(v.iter().map(|s| s.as_str().into()).collect());
    table.insert("outputs".into(), list(&outcome.outputs));
    table.insert("notes".into(), list(&outcome.notes));
    std::fs::write(out.join("manifest.toml"), toml::to_string(&table)?).context("writing manifest.toml")
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = resolve(cli)?;
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()
            .context("starting the worker pool")?;
    }
    let out = cfg.out.clone();
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let outcome = match cli.command {
        Command::Simulate => commands::simulate(&cfg, &out),
        Command::Fit => commands::fit(&cfg, &out),
        Command::Scan => commands::scan(&cfg, &out),
        Command::Test => commands::test(&cfg, &out),
        Command::Combine => commands::combine(&cfg, &out),
        Command::Predict => commands::predict(&cfg, &out),
        Command::Select => commands::select(&cfg, &out),
        Command::Cross => commands::cross(&cfg, &out),
    }?;
    write_manifest(&out, cli.command, &cfg, &outcome)
}

/// 2 for numerical failures inside the library, 1 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical = err
        .chain()
        .filter_map(|e| e.downcast_ref::<locepi::Error>())
        .any(|e| e.is_numerical());
    if numerical {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
