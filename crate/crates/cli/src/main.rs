use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use dynpeak::io::write_series;
use dynpeak::model::{generate, integrate_plasma, scenario, ScenarioFile};
use dynpeak::plot::render_plots;
use dynpeak_cli::{run_detection, service, ParamOverrides};

#[derive(Parser)]
#[command(
    name = "dynpeak",
    version,
    about = "Pulsatile LH series generation and pulse detection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a sampled series from a reference scenario or a TOML config.
    Generate(GenerateArgs),
    /// Detect pulses in a CSV series and write the JSON result document.
    Detect(DetectArgs),
    /// Serve the HTTP API on 127.0.0.1.
    Serve {
        /// Overridden by DYNPEAK_PORT.
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

#[derive(Args)]
struct GenerateArgs {
    /// Reference scenario, A to F.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    scenario: Option<String>,
    /// TOML file with `[generator]` and `[sampling]` tables.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the dense plasma solution to this CSV.
    #[arg(long)]
    dense: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Output JSON; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory receiving series.svg and ipi.svg.
    #[arg(long)]
    plots: Option<PathBuf>,
    /// Shortest expected interpulse interval, minutes.
    #[arg(long)]
    tp: Option<f64>,
    #[arg(long)]
    lambda_r: Option<f64>,
    /// Assay detection threshold, ng/ml.
    #[arg(long)]
    lambda_a: Option<f64>,
    #[arg(long = "lambda-3p")]
    lambda_3p: Option<f64>,
    /// Lower tunnel ratio.
    #[arg(long)]
    alpha: Option<f64>,
    /// Upper tunnel ratio.
    #[arg(long)]
    beta: Option<f64>,
}

enum Failure {
    /// Bad arguments or unusable input: exit 1.
    Input(String),
    /// Anything else: exit 2.
    Internal(String),
}

impl From<dynpeak::Error> for Failure {
    fn from(e: dynpeak::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

fn read_input(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    let result = match path {
        Some(p) => fs::write(p, bytes).map_err(|e| format!("{}: {e}", p.display())),
        None => io::stdout().write_all(bytes).map_err(|e| e.to_string()),
    };
    result.map_err(Failure::Internal)
}

fn run_generate(args: GenerateArgs) -> Result<(), Failure> {
    let (generator, mut sampling) = match (&args.scenario, &args.config) {
        (Some(name), _) => scenario(name)?,
        (None, Some(path)) => {
            let text = String::from_utf8(read_input(path)?)
                .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            let file: ScenarioFile = toml::from_str(&text)
                .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            (file.generator, file.sampling)
        }
        (None, None) => unreachable!("clap requires one of --scenario and --config"),
    };
    if let Some(seed) = args.seed {
        sampling.seed = seed;
    }
    generator.validate()?;
    sampling.validate()?;
    if let Some(path) = &args.dense {
        let mut buf = Vec::new();
        integrate_plasma(&generator)?.write_csv(&mut buf, 1)?;
        write_output(Some(path), &buf)?;
    }
    let series = generate(&generator, &sampling)?;
    let mut buf = Vec::new();
    write_series(&series, &mut buf).map_err(|e| Failure::Internal(e.to_string()))?;
    write_output(args.out.as_deref(), &buf)
}

fn run_detect(args: DetectArgs) -> Result<(), Failure> {
    let overrides = ParamOverrides {
        tp: args.tp,
        lambda_r: args.lambda_r,
        lambda_a: args.lambda_a,
        lambda_3p: args.lambda_3p,
        alpha: args.alpha,
        beta: args.beta,
    };
    let csv = read_input(&args.input)?;
    let run = run_detection(&csv, &overrides, None)?;
    write_output(
        args.out.as_deref(),
        run.document.to_canonical_json().as_bytes(),
    )?;
    if let Some(dir) = &args.plots {
        let plots = render_plots(&run.series, &run.result);
        fs::create_dir_all(dir)
            .map_err(|e| Failure::Internal(format!("{}: {e}", dir.display())))?;
        write_output(Some(&dir.join("series.svg")), plots.series_svg.as_bytes())?;
        write_output(Some(&dir.join("ipi.svg")), plots.ipi_svg.as_bytes())?;
    }
    Ok(())
}

fn run_serve(port: u16) -> Result<(), Failure> {
    let port = match std::env::var("DYNPEAK_PORT") {
        Ok(v) => v
            .parse()
            .map_err(|_| Failure::Input(format!("DYNPEAK_PORT: not a port number: {v}")))?,
        Err(_) => port,
    };
    let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::Internal(e.to_string()))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(("127.0.0.1", port))
            .await
            .map_err(|e| Failure::Input(format!("cannot bind port {port}: {e}")))?;
        eprintln!("listening on http://127.0.0.1:{port}");
        axum::serve(listener, service::router())
            .await
            .map_err(|e| Failure::Internal(e.to_string()))
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let outcome = match cli.command {
        Command::Generate(args) => run_generate(args),
        Command::Detect(args) => run_detect(args),
        Command::Serve { port } => run_serve(port),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(2)
        }
    }
}
