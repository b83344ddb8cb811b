use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use modcool::{parse_config_for, run, CliError, RunMode};

/// Frequency-modulated optomechanical cooling: runs, sweeps and table reproduction.
#[derive(Debug, Parser)]
#[command(name = "modcool", version)]
struct Cli {
    mode: RunMode,
    /// Flat key=value configuration file (optional for table1 and async).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads for sweeps and the table.
    #[arg(long, env = "MODCOOL_JOBS")]
    jobs: Option<usize>,
    /// Omit the timestamp comment so identical inputs give identical bytes.
    #[arg(long)]
    reproducible: bool,
    /// Output CSV path (overrides `output` in the config; default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn execute(cli: &Cli) -> Result<Option<String>, CliError> {
    let text = match &cli.config {
        Some(path) => fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?,
        None if cli.mode.is_fixed() => String::new(),
        None => return Err(CliError::Config(format!("mode {} needs --config", cli.mode))),
    };
    let cfg = parse_config_for(&text, Some(cli.mode))?;
    let output = run(&cfg, cli.jobs)?;
    if let Some(s) = &output.summary {
        eprintln!("{s}");
    }
    let comment = format!("modcool {}", cli.mode);
    let target = cli.out.clone().or_else(|| cfg.output_path.as_ref().map(PathBuf::from));
    match target {
        Some(path) => {
            let mut w = BufWriter::new(File::create(&path)?);
            output.table.write_to(&mut w, &comment, cli.reproducible)?;
            w.flush()?;
        }
        None => output.table.write_to(io::stdout().lock(), &comment, cli.reproducible)?,
    }
    Ok(output.divergence)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(why)) => {
            eprintln!("modcool: {}", CliError::Divergence(why));
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("modcool: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
