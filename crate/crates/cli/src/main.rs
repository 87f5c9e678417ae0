use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use clmlab::experiments::{run, Experiment, RunConfig};
use clmlab::ClmError;

/// Correlations in local collective-spin measurements: figure and example
/// reproductions.
#[derive(Parser, Debug)]
#[command(name = "clmlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Haar random states: optimized CLM and linear entropy vs N.
    Fig1(Common),
    /// Squeezed states: Δ_D(z,z), entropies and the information bound vs μ.
    Fig2(Common),
    /// XXZ ground state sweep over Jz/J.
    Fig3(Common),
    /// XXZ scaling of Δ_D(z,z) with N and power-law fits.
    Fig4(Common),
    /// Closed-form checks of the worked examples (JSON).
    Examples(Common),
    /// Coarse-graining bound chain over a state corpus.
    Bounds(Common),
    /// CHSH with dichotomized coarse measurements.
    Bell(Common),
    /// Macroscopicity of product, GHZ, W-like and Haar states.
    Macro(Common),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// System sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Parameter grid: comma-separated values or `start:stop:step`.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Resolutions σ, comma separated.
    #[arg(long, value_delimiter = ',')]
    sigma: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sample count (Haar states, or restarts for bell).
    #[arg(long)]
    samples: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Larger default sizes matching the published figures.
    #[arg(long)]
    paper_scale: bool,
    /// Record elapsed seconds in the output header.
    #[arg(long)]
    wall_time: bool,
    /// JSON file with RunConfig fields; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Run(#[from] ClmError),
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Run(ClmError::InvalidInput(_) | ClmError::DimensionMismatch(..)) => 2,
            Self::Run(ClmError::Capacity { .. }) => 3,
            Self::Run(ClmError::NonConvergence { .. }) => 4,
            Self::Run(_) | Self::Io { .. } => 1,
        }
    }
}

fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = |s: &str| CliError::Config(format!("bad grid value `{s}`"));
    if text.contains(':') {
        let parts: Vec<f64> = text
            .split(':')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad(p)))
            .collect::<Result<_, _>>()?;
        let [start, stop, step] = parts[..] else {
            return Err(CliError::Config("grid range must be start:stop:step".into()));
        };
        if !(step > 0.0) || stop < start {
            return Err(CliError::Config("grid range needs step > 0 and stop >= start".into()));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        // Rounded to 12 digits so 0.1-style steps print cleanly.
        return Ok((0..count)
            .map(|k| ((start + step * k as f64) * 1e12).round() / 1e12)
            .collect());
    }
    text.split(',').map(|p| p.trim().parse::<f64>().map_err(|_| bad(p))).collect()
}

fn build_config(experiment: Experiment, args: &Common) -> Result<RunConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?;
            serde_json::from_str::<RunConfig>(&text)
                .map_err(|e| CliError::Config(format!("parsing {}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(file_exp) = config.experiment {
        if file_exp != experiment {
            return Err(CliError::Config(format!(
                "config file is for {}, command is {}",
                file_exp.name(),
                experiment.name()
            )));
        }
    }
    config.experiment = Some(experiment);
    if let Some(n) = &args.n {
        config.n = Some(n.clone());
    }
    if let Some(g) = &args.grid {
        config.grid = Some(parse_grid(g)?);
    }
    if let Some(s) = &args.sigma {
        config.sigma = Some(s.clone());
    }
    if args.seed.is_some() {
        config.seed = args.seed;
    }
    if args.samples.is_some() {
        config.samples = args.samples;
    }
    if let Some(out) = &args.out {
        config.out = Some(out.display().to_string());
    }
    if let Some(t) = args.threads {
        config.threads = t;
    }
    config.paper_scale |= args.paper_scale;
    config.wall_time |= args.wall_time;
    Ok(config)
}

fn execute(experiment: Experiment, args: &Common) -> Result<(), CliError> {
    let config = build_config(experiment, args)?;
    let start = Instant::now();
    let report = run(&config)?;
    let text = report.render(Some(start.elapsed()));
    match &config.out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match &cli.command {
        Command::Fig1(a) => (Experiment::Fig1, a),
        Command::Fig2(a) => (Experiment::Fig2, a),
        Command::Fig3(a) => (Experiment::Fig3, a),
        Command::Fig4(a) => (Experiment::Fig4, a),
        Command::Examples(a) => (Experiment::Examples, a),
        Command::Bounds(a) => (Experiment::Bounds, a),
        Command::Bell(a) => (Experiment::Bell, a),
        Command::Macro(a) => (Experiment::Macro, a),
    };
    match execute(experiment, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("clmlab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_forms() {
        assert_eq!(parse_grid("0:0.02:0.005").unwrap(), vec![0.0, 0.005, 0.01, 0.015, 0.02]);
        assert_eq!(parse_grid("-1.5,0,2").unwrap(), vec![-1.5, 0.0, 2.0]);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("a,b").is_err());
        assert_eq!(parse_grid("0:0.3:0.1").unwrap(), vec![0.0, 0.1, 0.2, 0.3]);
    }
}
