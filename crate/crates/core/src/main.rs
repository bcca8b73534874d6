use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sideband_qrng::pipeline::analyze::is_run_dir;
use sideband_qrng::pipeline::{
    analyze, cmd_bench, cmd_plan, cmd_run, load_inputs, AnalyzeOptions, OutputFormat, RunConfig, RunOptions,
    Scale, Seed64, SeedOrigin, SAMPLE_CONFIG,
};
use sideband_qrng::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_ACCEPTANCE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "sideband-qrng",
    version,
    about = "Three-sideband vacuum-noise QRNG pipeline"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; the built-in reference config when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Comma-separated channel ids to include.
    #[arg(long, global = true, value_name = "LIST", value_delimiter = ',')]
    channels: Option<Vec<u32>>,
    /// Use the desk-scale data volumes (default).
    #[arg(long, global = true, conflicts_with = "paper_scale")]
    desk_scale: bool,
    /// Use the paper-scale data volumes.
    #[arg(long, global = true)]
    paper_scale: bool,
    /// Simulation master seed in hex, or "entropy" to draw one from the OS.
    #[arg(long, global = true, value_name = "HEX")]
    seed: Option<String>,
    /// Bit file format.
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Subcommand)]
enum Command {
    /// Print extractor sizes and rates per channel.
    Plan,
    /// Simulate, extract and write every channel plus the cumulative stream.
    Run {
        /// Run channels one after another.
        #[arg(long)]
        sequential: bool,
    },
    /// Test bit files, raw sample files or run directories.
    Analyze {
        #[arg(required = true, value_name = "PATH")]
        inputs: Vec<PathBuf>,
    },
    /// Measure extractor and end-to-end throughput.
    Bench,
    /// Print the annotated reference configuration.
    SampleConfig,
}

struct Failure(u8, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(e.exit_code(), e.to_string())
    }
}

fn parse_seed(text: &str) -> Result<(Seed64, SeedOrigin), Failure> {
    if text.eq_ignore_ascii_case("entropy") {
        return Ok((Seed64(rand::random()), SeedOrigin::Entropy));
    }
    let hex = text
        .strip_prefix("0x")
        .or_else(|| text.strip_prefix("0X"))
        .unwrap_or(text);
    u64::from_str_radix(&hex.replace('_', ""), 16)
        .map(|v| (Seed64(v), SeedOrigin::CommandLine))
        .map_err(|e| Failure(EXIT_CONFIG, format!("--seed {text:?}: {e}")))
}

fn load_config(c: &Common) -> Result<(RunConfig, SeedOrigin), Failure> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::from_toml(SAMPLE_CONFIG)?,
    };
    if let Some(ids) = &c.channels {
        cfg.select_channels(ids)?;
    }
    if let Some(f) = c.format {
        cfg.global.format = f;
    }
    let mut origin = SeedOrigin::Config;
    if let Some(s) = &c.seed {
        let (seed, o) = parse_seed(s)?;
        cfg.global.seed = seed;
        origin = o;
    }
    cfg.validate()?;
    Ok((cfg, origin))
}

fn scale(c: &Common) -> Scale {
    if c.paper_scale {
        Scale::Paper
    } else {
        Scale::Desk
    }
}

fn write_report<T: serde::Serialize>(dir: &Option<PathBuf>, name: &str, value: &T) -> Result<(), Failure> {
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir).map_err(Error::from)?;
        let text = serde_json::to_string_pretty(value).expect("report serializes");
        std::fs::write(dir.join(name), text + "\n").map_err(Error::from)?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let c = &cli.common;
    match cli.command {
        Command::SampleConfig => {
            print!("{SAMPLE_CONFIG}");
        }
        Command::Plan => {
            let (cfg, _) = load_config(c)?;
            let report = cmd_plan(&cfg)?;
            print!("{}", report.table());
            write_report(&c.out, "plan.json", &report)?;
        }
        Command::Run { sequential } => {
            let (cfg, origin) = load_config(c)?;
            let opts = RunOptions {
                out_dir: c.out.clone().unwrap_or_else(|| PathBuf::from("out")),
                scale: scale(c),
                format: c.format,
                sequential,
                seed_origin: origin,
            };
            let outcome = cmd_run(&cfg, &opts)?;
            print!("{}", sideband_qrng::pipeline::run::summary_table(&outcome));
            println!("wrote {}", opts.out_dir.display());
            if !outcome.off_scale_ok() {
                return Err(Failure(
                    EXIT_ACCEPTANCE,
                    "off-scale count above the tolerance".into(),
                ));
            }
        }
        Command::Analyze { inputs } => {
            let (cfg, _) = load_config(c)?;
            let mut loaded = Vec::new();
            for p in &inputs {
                loaded.extend(load_inputs(p)?);
            }
            // reports land next to a single run directory unless --out says otherwise
            let out_dir = c.out.clone().or_else(|| match inputs.as_slice() {
                [one] if is_run_dir(one) => Some(one.clone()),
                _ => None,
            });
            let opts = AnalyzeOptions {
                scale: cfg.scale(scale(c)).clone(),
                alpha: cfg.global.alpha,
                out_dir,
            };
            let report = analyze(loaded, &opts)?;
            print!("{}", report.table());
            if !report.passed {
                return Err(Failure(EXIT_ACCEPTANCE, "statistical acceptance failed".into()));
            }
        }
        Command::Bench => {
            let (cfg, _) = load_config(c)?;
            let report = cmd_bench(&cfg, scale(c))?;
            print!("{}", report.table());
            write_report(&c.out, "bench.json", &report)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
