//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage or configuration errors, 2 when
//! the nonlinear iteration fails to converge.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use reynolds_fem::commands::{cmd_converge, cmd_extract_line, cmd_presets, cmd_solve, RunOutcome};
use reynolds_fem::config::{MeshSpec, RunConfig};
use reynolds_fem::{Error, Result};

#[derive(Parser)]
#[command(
    name = "reynolds",
    version,
    about = "Finite-element solver for a regularized thin-film lubrication problem"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration; writes field, trace, and summary artifacts.
    Solve(RunArgs),
    /// Run a mesh-refinement study; writes the convergence table.
    Converge(RunArgs),
    /// Sample a stored field along the mesh line nearest to a given y.
    ExtractLine {
        /// Field CSV produced by `solve`.
        field: PathBuf,
        /// Line position; must lie inside the mesh.
        #[arg(long)]
        y: f64,
        /// Write the line CSV here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// List the built-in cases.
    Presets,
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file (strict `key = value` sections).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in case name; see `presets` for the list.
    #[arg(long)]
    preset: Option<String>,
    /// Mesh as NXxNY, for example 96x32.
    #[arg(long)]
    mesh: Option<String>,
    /// Refinement-series base mesh as NXxNY (converge).
    #[arg(long)]
    base: Option<String>,
    /// Number of refinement levels (converge).
    #[arg(long)]
    levels: Option<usize>,
    /// Stabilization method: none | osgs | artificial_diffusion.
    #[arg(long)]
    stabilization: Option<String>,
    /// Enable or disable shock capturing.
    #[arg(long)]
    shock_capturing: Option<bool>,
    /// Linearization scheme: picard_only | hybrid.
    #[arg(long)]
    linearization: Option<String>,
    /// Nonlinear iteration budget.
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Output directory for artifacts.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write a legacy-ASCII VTK grid.
    #[arg(long)]
    vtk: bool,
}

fn parse_mesh(text: &str) -> Result<(usize, usize)> {
    let (nx, ny) = text
        .split_once(['x', 'X'])
        .ok_or_else(|| Error::Config(format!("mesh '{text}' is not of the form NXxNY")))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("mesh '{text}' is not of the form NXxNY")))
    };
    Ok((parse(nx)?, parse(ny)?))
}

fn resolve(args: &RunArgs, for_converge: bool) -> Result<RunConfig> {
    let mut config = match (&args.config, &args.preset) {
        (Some(path), None) => RunConfig::from_file(path)?,
        (None, Some(name)) => RunConfig::preset(name)?,
        (None, None) => {
            return Err(Error::Config("give either --config FILE or --preset NAME".to_string()))
        }
        (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
    };

    if let Some(mesh) = &args.mesh {
        let (nx, ny) = parse_mesh(mesh)?;
        config.mesh = MeshSpec::Single { nx, ny };
    }
    if for_converge {
        let base = args.base.as_deref().map(parse_mesh).transpose()?;
        if base.is_some() || args.levels.is_some() || matches!(config.mesh, MeshSpec::Single { .. })
        {
            let (base_nx, base_ny) = base.unwrap_or((3, 1));
            config.mesh = MeshSpec::Series {
                base_nx,
                base_ny,
                levels: args.levels.unwrap_or(6),
            };
        }
    }
    if let Some(s) = &args.stabilization {
        config.model.stabilization = s.parse()?;
    }
    if let Some(sc) = args.shock_capturing {
        config.model.shock_capturing = sc;
    }
    if let Some(l) = &args.linearization {
        config.solver.linearization = l.parse()?;
    }
    if let Some(n) = args.max_iterations {
        config.solver.max_iterations = n;
        config.solver.picard_warmup = config.solver.picard_warmup.min(n);
    }
    if let Some(dir) = &args.output {
        config.output_dir = dir.clone();
    }
    if args.vtk {
        config.vtk = true;
    }
    config.model.validate()?;
    config.solver.validate()?;
    Ok(config)
}

fn outcome_code(outcome: RunOutcome) -> u8 {
    match outcome {
        RunOutcome::Converged => 0,
        RunOutcome::NotConverged => 2,
    }
}

fn dispatch(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Solve(args) => {
            let config = resolve(&args, false)?;
            let (outcome, summary) = cmd_solve(&config)?;
            print!("{summary}");
            if outcome == RunOutcome::NotConverged {
                eprintln!("warning: iteration did not converge; artifacts were still written");
            }
            Ok(outcome_code(outcome))
        }
        Command::Converge(args) => {
            let config = resolve(&args, true)?;
            let (outcome, table) = cmd_converge(&config)?;
            print!("{table}");
            if outcome == RunOutcome::NotConverged {
                eprintln!("warning: at least one level did not converge");
            }
            Ok(outcome_code(outcome))
        }
        Command::ExtractLine { field, y, output } => {
            let text = cmd_extract_line(&field, y, output.as_deref())?;
            if output.is_none() {
                print!("{text}");
            }
            Ok(0)
        }
        Command::Presets => {
            print!("{}", cmd_presets());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            // A singular linear system is a failure of the nonlinear
            // iteration, not of the invocation.
            let code = match e {
                Error::SingularSystem { .. } | Error::LinearSolve(_) => 2,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}
