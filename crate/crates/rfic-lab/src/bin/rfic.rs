//! Command-line front end for the random-field Ising chain laboratory.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rfic_lab::config::{self, Command, ConfigError, FileConfig};
use rfic_lab::parallel::thread_pool;
use rfic_lab::run::execute;
use rfic_core::disorder::DisorderLaw;

#[derive(Parser)]
#[command(
    name = "rfic",
    about = "Random-field Ising chain laboratory: free energy, flip densities, \
             continuum closed form, Wasserstein curves and inequality checks",
    after_help = "Parallelism is capped by the RFIC_THREADS environment variable \
                  (default: logical cores). Outputs are byte-identical across \
                  worker counts for a fixed config and seed."
)]
struct Cli {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Default)]
struct LawArgs {
    /// Disorder law kind: gaussian | rademacher | uniform |
    /// centered_exponential_diff | centered_pareto.
    #[arg(long)]
    law: Option<String>,
    /// Variance of the law (default 1).
    #[arg(long)]
    variance: Option<f64>,
    /// Moment order for centered_pareto.
    #[arg(long)]
    p: Option<f64>,
}

#[derive(Args, Default)]
struct OutArgs {
    /// CSV destination (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON artifact destination.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Optional SVG line chart destination.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args, Default)]
struct McArgs {
    /// Chain length N (accepts scientific notation, e.g. 1e7).
    #[arg(long, short = 'N', alias = "N")]
    n: Option<String>,
    /// Number of independent replicas.
    #[arg(long)]
    replicas: Option<usize>,
    /// Run seed; required for stochastic commands.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Free energy density estimate at one coupling.
    Fe {
        #[command(flatten)]
        law: LawArgs,
        /// Coupling J.
        #[arg(long, short = 'J', alias = "J")]
        j: Option<f64>,
        /// Boundary spins, e.g. ++ or +-.
        #[arg(long)]
        boundary: Option<String>,
        #[command(flatten)]
        mc: McArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Spin-flip density via derivative propagation.
    Flips {
        #[command(flatten)]
        law: LawArgs,
        #[arg(long, short = 'J', alias = "J")]
        j: Option<f64>,
        #[arg(long)]
        boundary: Option<String>,
        #[command(flatten)]
        mc: McArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Continuum closed-form free energy and its asymptote.
    Continuum {
        #[arg(long, short = 'J', alias = "J")]
        j: Option<f64>,
        /// Comma-separated coupling grid.
        #[arg(long, value_delimiter = ',')]
        j_grid: Option<Vec<f64>>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Wasserstein-1 distance of block convolutions to the Gaussian.
    W1 {
        #[command(flatten)]
        law: LawArgs,
        /// Comma-separated block lengths (default 4,16,64,256).
        #[arg(long, value_delimiter = ',')]
        l_grid: Option<Vec<usize>>,
        /// Samples per estimate.
        #[arg(long, short = 'N', alias = "N")]
        n: Option<String>,
        /// Independent replicates per block length.
        #[arg(long)]
        w1_replicates: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Deterministic block inequalities on random realizations.
    VerifyBounds {
        #[command(flatten)]
        law: LawArgs,
        /// Block length L.
        #[arg(long, short = 'L', alias = "L")]
        l: Option<usize>,
        #[arg(long, short = 'J', alias = "J")]
        j: Option<f64>,
        /// Threshold M.
        #[arg(long, short = 'M', alias = "M")]
        m: Option<f64>,
        /// Number of field realizations.
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Free-energy and flip-density sweep over a coupling grid.
    Sweep {
        #[command(flatten)]
        law: LawArgs,
        #[arg(long, value_delimiter = ',')]
        j_grid: Option<Vec<f64>>,
        #[command(flatten)]
        mc: McArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Continuum sandwich check for the unit Gaussian chain.
    Sandwich {
        /// Comma-separated coupling grid (default 4,6).
        #[arg(long, value_delimiter = ',')]
        j_grid: Option<Vec<f64>>,
        #[command(flatten)]
        mc: McArgs,
        /// Brownian Monte Carlo blocks.
        #[arg(long)]
        blocks: Option<usize>,
        /// Brownian grid cells per block.
        #[arg(long)]
        grid_cells: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
}

fn law_from_args(args: &LawArgs) -> Result<Option<DisorderLaw>, ConfigError> {
    let Some(kind) = &args.law else {
        if args.variance.is_some() || args.p.is_some() {
            return Err(ConfigError::new("law", "required when variance or p is set"));
        }
        return Ok(None);
    };
    let variance = args.variance.unwrap_or(1.0);
    let law = match kind.as_str() {
        "gaussian" => DisorderLaw::gaussian(variance),
        "rademacher" => DisorderLaw::rademacher(variance),
        "uniform" => DisorderLaw::uniform(variance),
        "centered_exponential_diff" => DisorderLaw::exponential_diff(variance),
        "centered_pareto" => {
            let p = args
                .p
                .ok_or_else(|| ConfigError::new("p", "required for centered_pareto"))?;
            DisorderLaw::pareto(variance, p)
        }
        other => {
            return Err(ConfigError::new(
                "law",
                format!(
                    "unknown kind `{other}`; expected gaussian, rademacher, uniform, \
                     centered_exponential_diff or centered_pareto"
                ),
            ))
        }
    };
    law.map(Some).map_err(|e| match e {
        rfic_core::Error::InvalidParameter { field, message } => ConfigError::new(field, message),
        other => ConfigError::new("law", other.to_string()),
    })
}

fn parse_n(n: &Option<String>) -> Result<Option<f64>, ConfigError> {
    match n {
        None => Ok(None),
        Some(text) => text
            .parse::<f64>()
            .map(Some)
            .map_err(|_| ConfigError::new("n", format!("`{text}` is not a number"))),
    }
}

fn to_file_config(cmd: &Cmd) -> Result<(Command, FileConfig), ConfigError> {
    let mut cfg = FileConfig::default();
    let command = match cmd {
        Cmd::Fe {
            law,
            j,
            boundary,
            mc,
            out,
        }
        | Cmd::Flips {
            law,
            j,
            boundary,
            mc,
            out,
        } => {
            cfg.law = law_from_args(law)?;
            cfg.j = *j;
            cfg.boundary = boundary.clone();
            cfg.n = parse_n(&mc.n)?;
            cfg.replicas = mc.replicas;
            cfg.seed = mc.seed;
            cfg.out = out.out.clone();
            cfg.json = out.json.clone();
            cfg.svg = out.svg.clone();
            if matches!(cmd, Cmd::Fe { .. }) {
                Command::Fe
            } else {
                Command::Flips
            }
        }
        Cmd::Continuum { j, j_grid, out } => {
            cfg.j = *j;
            cfg.j_grid = j_grid.clone();
            cfg.out = out.out.clone();
            cfg.json = out.json.clone();
            cfg.svg = out.svg.clone();
            Command::Continuum
        }
        Cmd::W1 {
            law,
            l_grid,
            n,
            w1_replicates,
            seed,
            out,
        } => {
            cfg.law = law_from_args(law)?;
            cfg.l_grid = l_grid.clone();
            cfg.n = parse_n(n)?;
            cfg.w1_replicates = *w1_replicates;
            cfg.seed = *seed;
            cfg.out = out.out.clone();
            cfg.json = out.json.clone();
            cfg.svg = out.svg.clone();
            Command::W1
        }
        Cmd::VerifyBounds {
            law,
            l,
            j,
            m,
            trials,
            seed,
            out,
        } => {
            cfg.law = law_from_args(law)?;
            cfg.block_len = *l;
            cfg.j = *j;
            cfg.m = *m;
            cfg.trials = *trials;
            cfg.seed = *seed;
            cfg.out = out.out.clone();
            cfg.json = out.json.clone();
            Command::VerifyBounds
        }
        Cmd::Sweep {
            law,
            j_grid,
            mc,
            out,
        } => {
            cfg.law = law_from_args(law)?;
            cfg.j_grid = j_grid.clone();
            cfg.n = parse_n(&mc.n)?;
            cfg.replicas = mc.replicas;
            cfg.seed = mc.seed;
            cfg.out = out.out.clone();
            cfg.json = out.json.clone();
            cfg.svg = out.svg.clone();
            Command::Sweep
        }
        Cmd::Sandwich {
            j_grid,
            mc,
            blocks,
            grid_cells,
            out,
        } => {
            cfg.j_grid = j_grid.clone();
            cfg.n = parse_n(&mc.n)?;
            cfg.replicas = mc.replicas;
            cfg.seed = mc.seed;
            cfg.blocks = *blocks;
            cfg.grid_cells = *grid_cells;
            cfg.out = out.out.clone();
            cfg.json = out.json.clone();
            Command::Sandwich
        }
    };
    Ok((command, cfg))
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let prepared = (|| -> Result<_, ConfigError> {
        let (command, flags) = to_file_config(&cli.command)?;
        let merged = match &cli.config {
            Some(path) => flags.or(config::load_file(path)?),
            None => flags,
        };
        config::resolve(command, merged)
    })();

    let (resolved, outputs) = match prepared {
        Ok(pair) => pair,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(2);
        }
    };

    let pool = thread_pool(None);
    match execute(&resolved, &outputs, &pool) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}
