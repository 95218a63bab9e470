use std::fs::OpenOptions;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mopuc::harness::{
    cmd_gems, cmd_gen, cmd_sumrule, cmd_verify, gems_csv, load_input, reports_csv, thread_cap, ErrorReport,
    OutputFormat, RunConfig,
};
use mopuc::Error;

#[derive(Parser)]
#[command(name = "mopuc", version, about = "Matrix OPUC sum-rule toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random coefficient file.
    Gen,
    /// Compare both sides of the sum rule for a coefficient or measure file.
    Sumrule {
        /// Coefficient file, measure file, or builtin measure (lambda0, lambda_g:<g>).
        input: String,
    },
    /// Run the property suite.
    Verify,
    /// Emit gem partial sums for a coefficient file or a generator
    /// (geom:r, power:c:s, const:c, zero).
    Gems { source: String },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct Opts {
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    dim: Option<usize>,
    #[arg(long, global = true)]
    trunc: Option<usize>,
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Reference weight parameter; repeat for several values.
    #[arg(long = "g", global = true, allow_negative_numbers = true)]
    g: Vec<f64>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    norm_cap: Option<f64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

impl Opts {
    fn config(&self) -> RunConfig {
        let d = RunConfig::default();
        RunConfig {
            grid_size: self.grid.unwrap_or(d.grid_size),
            trunc: self.trunc.unwrap_or(d.trunc),
            tolerance: self.tol.unwrap_or(d.tolerance),
            seed: self.seed.unwrap_or(d.seed),
            g_list: if self.g.is_empty() { d.g_list } else { self.g.clone() },
            dim: self.dim.unwrap_or(d.dim),
            norm_cap: self.norm_cap.unwrap_or(d.norm_cap),
            trials: self.trials.unwrap_or(d.trials),
        }
    }

    fn format(&self, default: OutputFormat) -> OutputFormat {
        match self.format {
            Some(Format::Json) => OutputFormat::Json,
            Some(Format::Csv) => OutputFormat::Csv,
            None => default,
        }
    }
}

fn emit(out: Option<&PathBuf>, text: &str, append: bool) -> mopuc::Result<()> {
    match out {
        Some(path) => {
            let mut f = OpenOptions::new().create(true).write(true).append(append).truncate(!append).open(path)?;
            f.write_all(text.as_bytes())?;
        }
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn to_json<T: serde::Serialize>(v: &T) -> mopuc::Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn run(cli: &Cli) -> mopuc::Result<bool> {
    let config = cli.opts.config();
    let out = cli.opts.out.as_ref();
    match &cli.command {
        Command::Gen => {
            emit(out, &to_json(&cmd_gen(&config)?)?, false)?;
            Ok(true)
        }
        Command::Sumrule { input } => {
            let input = load_input(input, &config)?;
            let reports = cmd_sumrule(&input, &config)?;
            match cli.opts.format(OutputFormat::Json) {
                OutputFormat::Json => emit(out, &to_json(&reports)?, false)?,
                OutputFormat::Csv => {
                    let fresh = out.is_none_or(|p| std::fs::metadata(p).map_or(true, |m| m.len() == 0));
                    emit(out, &reports_csv(&reports, fresh), true)?;
                }
            }
            Ok(reports.iter().all(|r| r.residual < config.tolerance))
        }
        Command::Verify => {
            let summary = cmd_verify(&config)?;
            match cli.opts.format(OutputFormat::Json) {
                OutputFormat::Json => emit(out, &to_json(&summary)?, false)?,
                OutputFormat::Csv => {
                    let mut text = String::from("# verify v1: name,trials,max_residual,tolerance,passed\n");
                    for c in &summary.checks {
                        text.push_str(&format!(
                            "{},{},{:e},{:e},{}\n",
                            c.name, c.trials, c.max_residual, c.tolerance, c.passed
                        ));
                    }
                    emit(out, &text, false)?;
                }
            }
            Ok(summary.passed)
        }
        Command::Gems { source } => {
            let series = cmd_gems(source, &config)?;
            match cli.opts.format(OutputFormat::Csv) {
                OutputFormat::Json => emit(out, &to_json(&series)?, false)?,
                OutputFormat::Csv => {
                    let first = series.first().ok_or_else(|| Error::BadConfig("empty g list".into()))?;
                    emit(out, &gems_csv(first), false)?;
                }
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = thread_cap() {
        // fails only if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let body = serde_json::to_string(&ErrorReport::from(&e)).unwrap_or_else(|_| e.to_string());
            println!("{body}");
            ExitCode::from(2)
        }
    }
}
