//! Implementations of the command-line subcommands, kept separate from the
//! binary so they can be exercised as ordinary functions.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use crate::config::{format_float, MeshSpec, RunConfig};
use crate::error::{Error, Result};
use crate::export::{
    extract_line, read_field_csv, write_convergence_csv, write_field_csv, write_trace_csv,
    write_vtk, ConvergenceRow,
};
use crate::solver::{estimate_rate_vs_h, solve_nonlinear};
use crate::verification::{case_mesh, error_l2, ManufacturedCase};

/// Whether the nonlinear iteration reached its tolerance. Artifacts are
/// written either way; the distinction only drives the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    Converged,
    NotConverged,
}

/// Solves on a single mesh and writes `field.csv`, `trace.csv`,
/// `summary.txt`, and optionally `field.vtk` into the output directory.
/// Returns the outcome and a human-readable summary.
pub fn cmd_solve(config: &RunConfig) -> Result<(RunOutcome, String)> {
    let (nx, ny) = match config.mesh {
        MeshSpec::Single { nx, ny } => (nx, ny),
        MeshSpec::Series { .. } => {
            return Err(Error::Config(
                "solve needs a single mesh (nx/ny); refinement series are for converge"
                    .to_string(),
            ))
        }
    };
    let mesh = case_mesh(nx, ny)?;
    let forcing = config.forcing();
    let started = Instant::now();
    let result = solve_nonlinear(&mesh, &config.model, &config.solver, &*forcing)?;
    let wall = started.elapsed().as_secs_f64();

    let provenance = config.provenance();
    let dir = &config.output_dir;
    write_field_csv(&dir.join("field.csv"), &mesh, &result.u, result.xi.as_deref(), &provenance)?;
    write_trace_csv(&dir.join("trace.csv"), &result.trace, &provenance)?;
    if config.vtk {
        write_vtk(&dir.join("field.vtk"), &mesh, &result.u, result.xi.as_deref(), &provenance)?;
    }

    let mut summary = String::new();
    let _ = writeln!(summary, "case: {}", config.case.name());
    let _ = writeln!(summary, "mesh: {nx}x{ny} ({} nodes)", mesh.num_nodes());
    let _ = writeln!(summary, "converged: {}", result.trace.converged);
    let _ = writeln!(summary, "iterations: {}", result.trace.iterations);
    if let Some(record) = result.trace.records.last() {
        let _ = writeln!(summary, "final residual: {}", format_float(record.residual));
    }
    let _ = writeln!(summary, "tolerance: {}", format_float(result.trace.tolerance));
    let (mut min_u, mut max_u) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in &result.u {
        min_u = min_u.min(v);
        max_u = max_u.max(v);
    }
    let _ = writeln!(summary, "u range: [{}, {}]", format_float(min_u), format_float(max_u));
    if let Some(case) = config.manufactured_case() {
        let eps = error_l2(case, &mesh, &result.u)?;
        let _ = writeln!(summary, "relative l2 error: {}", format_float(eps));
    }
    let _ = writeln!(summary, "wall time s: {}", format_float(wall));

    let mut file_text = String::from("# reynolds artifact: summary\n");
    for (key, value) in &provenance {
        let _ = writeln!(file_text, "# {key} = {value}");
    }
    file_text.push_str(&summary);
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("summary.txt"), file_text)?;

    let outcome = if result.trace.converged {
        RunOutcome::Converged
    } else {
        RunOutcome::NotConverged
    };
    Ok((outcome, summary))
}

/// Runs a mesh-refinement study and writes `convergence.csv`. Requires a
/// series mesh spec and a case with a closed-form solution. Returns the
/// outcome (non-converged if any level failed) and the table as text.
pub fn cmd_converge(config: &RunConfig) -> Result<(RunOutcome, String)> {
    let (base_nx, base_ny, levels) = match config.mesh {
        MeshSpec::Series { base_nx, base_ny, levels } => (base_nx, base_ny, levels),
        MeshSpec::Single { .. } => {
            return Err(Error::Config(
                "converge needs a refinement series (base_nx/base_ny/levels)".to_string(),
            ))
        }
    };
    let case: &ManufacturedCase = config.manufactured_case().ok_or_else(|| {
        Error::Config(format!(
            "case '{}' has no closed-form solution to measure errors against",
            config.case.name()
        ))
    })?;

    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels);
    let mut all_converged = true;
    for level in 0..levels {
        let nx = base_nx << level;
        let ny = base_ny << level;
        let mesh = case_mesh(nx, ny)?;
        let forcing = config.forcing();
        let started = Instant::now();
        let result = solve_nonlinear(&mesh, &config.model, &config.solver, &*forcing)?;
        let wall = started.elapsed().as_secs_f64();
        all_converged &= result.trace.converged;
        let eps = error_l2(case, &mesh, &result.u)?;
        let order = rows.last().and_then(|prev: &ConvergenceRow| {
            estimate_rate_vs_h(&[prev.eps_l2, eps], &[prev.h, mesh.element_size()]).ok()
        });
        rows.push(ConvergenceRow {
            level,
            nx,
            ny,
            h: mesh.element_size(),
            eps_l2: eps,
            order,
            iterations: result.trace.iterations,
            wall_time_s: wall,
        });
    }

    let provenance = config.provenance();
    write_convergence_csv(&config.output_dir.join("convergence.csv"), &rows, &provenance)?;

    let mut table = String::from(
        "level  nx    ny    h             eps_l2        order   iters  wall_s\n",
    );
    for row in &rows {
        let order = row.order.map(|o| format!("{o:.3}")).unwrap_or_else(|| "-".to_string());
        let _ = writeln!(
            table,
            "{:<6} {:<5} {:<5} {:<13.6e} {:<13.6e} {:<7} {:<6} {:.3e}",
            row.level, row.nx, row.ny, row.h, row.eps_l2, order, row.iterations, row.wall_time_s
        );
    }
    let outcome = if all_converged { RunOutcome::Converged } else { RunOutcome::NotConverged };
    Ok((outcome, table))
}

/// Samples a stored field along the horizontal mesh line nearest `y` and
/// renders the result as CSV. Writes to `output` when given; the text is
/// returned either way.
pub fn cmd_extract_line(field_path: &Path, y: f64, output: Option<&Path>) -> Result<String> {
    let field = read_field_csv(field_path)?;
    let line = extract_line(&field, y)?;
    let mut out = String::from("# reynolds artifact: line\n");
    for (key, value) in &field.header {
        let _ = writeln!(out, "# {key} = {value}");
    }
    let _ = writeln!(out, "# line_y = {}", format_float(y));
    out.push_str("x,u\n");
    for (x, u) in &line {
        let _ = writeln!(out, "{},{}", format_float(*x), format_float(*u));
    }
    if let Some(path) = output {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        std::fs::write(path, &out)?;
    }
    Ok(out)
}

/// Lists the built-in cases.
pub fn cmd_presets() -> String {
    let mut out = String::from("built-in cases:\n");
    for (name, alias) in [
        ("smooth", "case1"),
        ("boundary_layer", "case2"),
        ("bearing", "case3"),
    ] {
        let case = ManufacturedCase::from_name(name).expect("built-in case");
        let config = RunConfig::preset(name).expect("built-in preset");
        let (nx, ny) = match config.mesh {
            MeshSpec::Single { nx, ny } => (nx, ny),
            MeshSpec::Series { .. } => unreachable!("presets use a single mesh"),
        };
        let exact = if case.has_exact_solution() { "yes" } else { "no" };
        let _ = writeln!(
            out,
            "  {name:<16} ({alias})  zeta={} x_a={} u_bar={} exact_solution={exact} \
             default_mesh={nx}x{ny}",
            case.config.zeta, case.config.x_a, case.config.u_bar
        );
    }
    out
}
