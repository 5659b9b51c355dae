use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lgap_cli::config::{parse_document, ExperimentConfig};
use lgap_cli::run::run_experiment;
use lgap_cli::{CliError, Mode};

#[derive(Parser)]
#[command(name = "lgap", version, about = "Variational Liouvillian-gap solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize an RBM trial state and estimate the gap.
    Rbm(Common),
    /// Exact diagonalization of the Liouvillian.
    Ed(Common),
    /// Bethe-ansatz magnon energies for an isotropic ring.
    Bethe(Common),
    /// Mean-field steady state.
    Meanfield(Common),
    /// RBM run compared against the applicable exact oracle.
    Compare(Common),
    /// Run the mode named in the configuration file.
    Run(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Chain length.
    #[arg(long)]
    sites: Option<usize>,
    #[arg(long)]
    jx: Option<f64>,
    #[arg(long)]
    jy: Option<f64>,
    #[arg(long)]
    jz: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    hidden_ratio: Option<f64>,
    /// Samples per chain.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    /// Replace Monte Carlo sampling by exact summation over all configurations.
    #[arg(long)]
    exact_summation: bool,
}

impl Common {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        macro_rules! set {
            ($flag:ident => $($field:tt)+) => {
                if let Some(v) = self.$flag.clone() {
                    cfg.$($field)+ = v;
                }
            };
        }
        set!(output => output.dir);
        set!(jx => model.jx);
        set!(jy => model.jy);
        set!(jz => model.jz);
        set!(gamma => model.gamma);
        set!(hidden_ratio => rbm.hidden_ratio);
        set!(samples => sampler.samples);
        set!(chains => sampler.chains);
        set!(max_iters => optimizer.max_iters);
        set!(beta => optimizer.beta);
        if let Some(seed) = self.seed {
            cfg.sampler.seed = Some(seed);
        }
        if let Some(n) = self.sites {
            cfg.model.sites = Some(n);
        }
        if self.hidden_ratio.is_some() {
            cfg.rbm.hidden = None;
        }
        if self.exact_summation {
            cfg.sampler.exact_summation = true;
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (common, mode) = match &cli.command {
        Command::Rbm(c) => (c, Some(Mode::Rbm)),
        Command::Ed(c) => (c, Some(Mode::Ed)),
        Command::Bethe(c) => (c, Some(Mode::Bethe)),
        Command::Meanfield(c) => (c, Some(Mode::Meanfield)),
        Command::Compare(c) => (c, Some(Mode::Compare)),
        Command::Run(c) => (c, None),
    };
    let text = std::fs::read_to_string(&common.config).map_err(|e| {
        CliError::Config(format!("cannot read {}: {e}", common.config.display()))
    })?;
    let mut cfg = parse_document(&text)?;
    common.apply(&mut cfg);
    let mode = mode
        .or(cfg.mode)
        .ok_or_else(|| CliError::Config("no mode given in the configuration".into()))?;
    run_experiment(&cfg, mode)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { lgap_cli::EXIT_CONFIG as u8 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lgap: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
