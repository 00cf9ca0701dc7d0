//! Artifact writers and readers.
//!
//! Every artifact starts with a provenance header: `# key = value` comment
//! lines holding the fully resolved run configuration, so a result can be
//! reproduced from the file alone. All floats are serialized with 17
//! significant digits and therefore survive a write/read cycle bitwise.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::config::format_float;
use crate::error::{Error, Result};
use crate::mesh::StructuredMesh;
use crate::solver::IterationTrace;

/// One solved field as stored on disk.
#[derive(Debug, Clone)]
pub struct FieldData {
    /// Provenance header, in file order.
    pub header: Vec<(String, String)>,
    pub nx: usize,
    pub ny: usize,
    pub nodes: Vec<(f64, f64)>,
    pub u: Vec<f64>,
    pub xi: Option<Vec<f64>>,
}

fn header_block(kind: &str, provenance: &[(String, String)]) -> String {
    let mut out = format!("# reynolds artifact: {kind}\n");
    for (key, value) in provenance {
        let _ = writeln!(out, "# {key} = {value}");
    }
    out
}

/// Field CSV: one row per node, `node,x,y,u,xi`. The `xi` column is left
/// empty when the run produced no projection (stabilization other than
/// orthogonal subscales).
pub fn write_field_csv(
    path: &Path,
    mesh: &StructuredMesh,
    u: &[f64],
    xi: Option<&[f64]>,
    provenance: &[(String, String)],
) -> Result<()> {
    if u.len() != mesh.num_nodes() {
        return Err(Error::InvalidArgument(format!(
            "field length {} does not match mesh with {} nodes",
            u.len(),
            mesh.num_nodes()
        )));
    }
    if let Some(xi) = xi {
        if xi.len() != mesh.num_nodes() {
            return Err(Error::InvalidArgument(
                "projection length does not match mesh".to_string(),
            ));
        }
    }
    let mut out = header_block("field", provenance);
    out.push_str("node,x,y,u,xi\n");
    for (n, &(x, y)) in mesh.nodes.iter().enumerate() {
        let xi_cell = match xi {
            Some(xi) => format_float(xi[n]),
            None => String::new(),
        };
        let _ = writeln!(
            out,
            "{n},{},{},{},{xi_cell}",
            format_float(x),
            format_float(y),
            format_float(u[n])
        );
    }
    write_atomic(path, &out)
}

/// Reads a field CSV back. Nodal values reproduce the written doubles
/// bitwise.
pub fn read_field_csv(path: &Path) -> Result<FieldData> {
    let text = std::fs::read_to_string(path)?;
    let mut header = Vec::new();
    let mut rows = Vec::new();
    let mut saw_columns = false;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                header.push((key.trim().to_string(), value.trim().to_string()));
            }
            continue;
        }
        if !saw_columns {
            if line != "node,x,y,u,xi" {
                return Err(Error::InvalidArgument(format!(
                    "line {}: expected field column header, got '{line}'",
                    lineno + 1
                )));
            }
            saw_columns = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::InvalidArgument(format!(
                "line {}: expected 5 columns, got {}",
                lineno + 1,
                fields.len()
            )));
        }
        let parse = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| {
                Error::InvalidArgument(format!("line {}: bad {what} '{s}'", lineno + 1))
            })
        };
        let node: usize = fields[0].parse().map_err(|_| {
            Error::InvalidArgument(format!("line {}: bad node id '{}'", lineno + 1, fields[0]))
        })?;
        if node != rows.len() {
            return Err(Error::InvalidArgument(format!(
                "line {}: node ids must be consecutive from zero",
                lineno + 1
            )));
        }
        let x = parse(fields[1], "x")?;
        let y = parse(fields[2], "y")?;
        let u = parse(fields[3], "u")?;
        let xi = if fields[4].is_empty() { None } else { Some(parse(fields[4], "xi")?) };
        rows.push((x, y, u, xi));
    }
    if rows.is_empty() {
        return Err(Error::InvalidArgument("field file has no data rows".to_string()));
    }

    let lookup = |key: &str| -> Result<usize> {
        header
            .iter()
            .find(|(k, _)| k == key)
            .ok_or_else(|| Error::InvalidArgument(format!("field header lacks '{key}'")))?
            .1
            .parse::<usize>()
            .map_err(|_| Error::InvalidArgument(format!("field header '{key}' is not a count")))
    };
    let nx = lookup("nx")?;
    let ny = lookup("ny")?;
    if rows.len() != (nx + 1) * (ny + 1) {
        return Err(Error::InvalidArgument(format!(
            "field has {} rows but header promises a {nx}x{ny} mesh",
            rows.len()
        )));
    }

    let nodes: Vec<(f64, f64)> = rows.iter().map(|r| (r.0, r.1)).collect();
    let u: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let xi_count = rows.iter().filter(|r| r.3.is_some()).count();
    let xi = match xi_count {
        0 => None,
        n if n == rows.len() => Some(rows.iter().map(|r| r.3.unwrap()).collect()),
        _ => {
            return Err(Error::InvalidArgument(
                "xi column must be entirely present or entirely empty".to_string(),
            ))
        }
    };
    Ok(FieldData { header, nx, ny, nodes, u, xi })
}

/// Iteration trace CSV: convergence status in the header, one row per
/// nonlinear step.
pub fn write_trace_csv(
    path: &Path,
    trace: &IterationTrace,
    provenance: &[(String, String)],
) -> Result<()> {
    let mut out = header_block("trace", provenance);
    let _ = writeln!(out, "# converged = {}", trace.converged);
    let _ = writeln!(out, "# iterations = {}", trace.iterations);
    let _ = writeln!(out, "# tolerance = {}", format_float(trace.tolerance));
    out.push_str("iteration,method,residual,update_norm\n");
    for record in &trace.records {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            record.index,
            record.method,
            format_float(record.residual),
            format_float(record.update_norm)
        );
    }
    write_atomic(path, &out)
}

/// One line of a mesh-refinement study.
#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub level: usize,
    pub nx: usize,
    pub ny: usize,
    /// Element size of this level.
    pub h: f64,
    /// Relative L2 error against the exact solution.
    pub eps_l2: f64,
    /// Observed order against the previous level; absent on the first row.
    pub order: Option<f64>,
    pub iterations: usize,
    pub wall_time_s: f64,
}

/// Convergence-study table: `level,nx,ny,h,eps_l2,order,iterations,wall_time_s`.
pub fn write_convergence_csv(
    path: &Path,
    rows: &[ConvergenceRow],
    provenance: &[(String, String)],
) -> Result<()> {
    let mut out = header_block("convergence", provenance);
    out.push_str("level,nx,ny,h,eps_l2,order,iterations,wall_time_s\n");
    for row in rows {
        let order = row.order.map(format_float).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{order},{},{}",
            row.level,
            row.nx,
            row.ny,
            format_float(row.h),
            format_float(row.eps_l2),
            row.iterations,
            format_float(row.wall_time_s)
        );
    }
    write_atomic(path, &out)
}

/// Legacy-ASCII VTK structured grid, for visualization tools. The title
/// line carries the resolved configuration; the CSV remains the canonical
/// artifact.
pub fn write_vtk(
    path: &Path,
    mesh: &StructuredMesh,
    u: &[f64],
    xi: Option<&[f64]>,
    provenance: &[(String, String)],
) -> Result<()> {
    let title: Vec<String> =
        provenance.iter().map(|(k, v)| format!("{k}={v}")).collect();
    let mut out = String::from("# vtk DataFile Version 3.0\n");
    let _ = writeln!(out, "{}", title.join("; "));
    out.push_str("ASCII\nDATASET STRUCTURED_GRID\n");
    let _ = writeln!(out, "DIMENSIONS {} {} 1", mesh.nx + 1, mesh.ny + 1);
    let _ = writeln!(out, "POINTS {} double", mesh.num_nodes());
    for &(x, y) in &mesh.nodes {
        let _ = writeln!(out, "{} {} 0", format_float(x), format_float(y));
    }
    let _ = writeln!(out, "POINT_DATA {}", mesh.num_nodes());
    out.push_str("SCALARS u double 1\nLOOKUP_TABLE default\n");
    for &v in u {
        let _ = writeln!(out, "{}", format_float(v));
    }
    if let Some(xi) = xi {
        out.push_str("SCALARS xi double 1\nLOOKUP_TABLE default\n");
        for &v in xi {
            let _ = writeln!(out, "{}", format_float(v));
        }
    }
    write_atomic(path, &out)
}

/// Values along the horizontal mesh line nearest to `y`: pairs `(x, u)`
/// taken verbatim from the stored nodal values.
pub fn extract_line(field: &FieldData, y: f64) -> Result<Vec<(f64, f64)>> {
    let stride = field.nx + 1;
    let y_lines: Vec<f64> = (0..=field.ny).map(|j| field.nodes[j * stride].1).collect();
    let y_min = y_lines.first().copied().unwrap();
    let y_max = y_lines.last().copied().unwrap();
    if y < y_min || y > y_max {
        return Err(Error::InvalidArgument(format!(
            "y = {y} lies outside the mesh range [{y_min}, {y_max}]"
        )));
    }
    let j = y_lines
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - y).abs().total_cmp(&(b.1 - y).abs()))
        .map(|(j, _)| j)
        .unwrap();
    Ok((0..stride)
        .map(|i| {
            let n = j * stride + i;
            (field.nodes[n].0, field.u[n])
        })
        .collect())
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(contents.as_bytes())?;
    Ok(())
}
