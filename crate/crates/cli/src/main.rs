use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ssf_lab::config::Config;
use ssf_lab::error::CliError;
use ssf_lab::output::{create_run_dir, write_artifacts, RunManifest, RunOutputs};
use ssf_lab::{commands, selftest};

#[derive(Parser, Debug)]
#[command(
    name = "ssf-lab",
    version,
    about = "Spectral shift function experiments on Dirichlet boxes"
)]
struct Cli {
    /// TOML configuration file (optional for `selftest`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Parent directory for run output.
    #[arg(long, global = true, default_value = "runs")]
    out: PathBuf,
    /// Overrides `mc.master_seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread cap (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Also write SVG line plots of scan curves.
    #[arg(long, global = true)]
    emit_svg: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// ξ_L(E) on an energy grid.
    SsfScan,
    /// Feynman–Kac Monte Carlo for the Laplace transform of ξ.
    LaplaceMc,
    /// Both sides of the Birman–Solomyak formula.
    BsCheck,
    /// Vague convergence of ξ_L dE along a length sequence.
    Vague,
    /// Cesàro means of ξ_L against the smoothed reference.
    Cesaro,
    /// Kirsch divergence scan in d = 2.
    Kirsch,
    /// Scaled perturbation L^{-k} V.
    Scaled,
    /// Closed-form identities and finite-matrix property suites.
    Selftest,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::SsfScan => "ssf-scan",
            Command::LaplaceMc => "laplace-mc",
            Command::BsCheck => "bs-check",
            Command::Vague => "vague",
            Command::Cesaro => "cesaro",
            Command::Kirsch => "kirsch",
            Command::Scaled => "scaled",
            Command::Selftest => "selftest",
        }
    }
}

fn stamp() -> String {
    chrono::Utc::now().format("%Y-%m-%dT%H:%M:%S%.3fZ").to_string()
}

fn load_config(cli: &Cli) -> Result<(Option<Config>, String), CliError> {
    let Some(path) = &cli.config else {
        if cli.command == Command::Selftest {
            return Ok((None, String::new()));
        }
        return Err(CliError::Config(format!("{} needs --config", cli.command.name())));
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = Config::parse(&text)?;
    if let Some(seed) = cli.seed {
        cfg.mc.master_seed = seed;
    }
    Ok((Some(cfg), text))
}

fn dispatch(command: Command, cfg: Option<&Config>, seed: u64) -> Result<RunOutputs, CliError> {
    let cfg = match (command, cfg) {
        (Command::Selftest, _) => return Ok(selftest::run(seed)),
        (_, Some(c)) => c,
        (_, None) => unreachable!("config presence is checked in load_config"),
    };
    match command {
        Command::SsfScan => commands::ssf_scan(cfg),
        Command::LaplaceMc => commands::laplace_mc(cfg),
        Command::BsCheck => commands::bs_check(cfg),
        Command::Vague => commands::vague(cfg),
        Command::Cesaro => commands::cesaro(cfg),
        Command::Kirsch => commands::kirsch(cfg),
        Command::Scaled => commands::scaled(cfg),
        Command::Selftest => unreachable!(),
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let (cfg, snapshot) = load_config(cli)?;
    let seed = cfg.as_ref().map_or(cli.seed.unwrap_or(0), |c| c.mc.master_seed);
    let started = stamp();
    log::info!("running {} with {} thread cap", cli.command.name(), cli.threads);
    let outputs = ssf_core::par::with_threads(cli.threads, || dispatch(cli.command, cfg.as_ref(), seed))?;
    let finished = stamp();

    let dir = create_run_dir(&cli.out, cli.command.name(), &started.replace(':', "-"))?;
    let mut files = write_artifacts(&dir, &outputs, cli.emit_svg)?;
    files.push("manifest.toml".into());
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        subcommand: cli.command.name().into(),
        master_seed: seed,
        threads: cli.threads,
        grid_spacings: outputs.grid_spacings.clone(),
        started,
        finished,
        outputs: files,
        notes: outputs.notes.clone(),
        tolerances: cfg.map(|c| c.tolerances).unwrap_or_default(),
        config_snapshot: snapshot,
    };
    std::fs::write(dir.join("manifest.toml"), manifest.to_toml())?;
    println!("{}", dir.display());
    if outputs.failures > 0 {
        return Err(CliError::SelftestFailed(outputs.failures));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
