//! Nonlinear solution driver: direct banded linear solves, the hybrid
//! fixed-point/Newton iteration with residual tracking, and observed
//! convergence-rate estimation.

use crate::assembly::{
    apply_dirichlet, assemble_newton, assemble_picard, assemble_shock_capturing, condense,
    recover_projection,
};
use crate::error::{Error, Result};
use crate::mesh::StructuredMesh;
use crate::model::{ModelConfig, Stabilization};
use crate::sparse::CsrMatrix;
use std::fmt;
use std::str::FromStr;

/// Which linearizations the nonlinear loop may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearizationScheme {
    /// Fixed-point steps only.
    PicardOnly,
    /// Fixed-point warmup, then Newton steps.
    Hybrid,
}

impl FromStr for LinearizationScheme {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        match text {
            "picard_only" => Ok(LinearizationScheme::PicardOnly),
            "hybrid" => Ok(LinearizationScheme::Hybrid),
            other => Err(Error::Config(format!(
                "unknown linearization '{other}' (expected picard_only or hybrid)"
            ))),
        }
    }
}

impl fmt::Display for LinearizationScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinearizationScheme::PicardOnly => "picard_only",
            LinearizationScheme::Hybrid => "hybrid",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Fixed-point iterations before Newton is allowed to take over.
    pub picard_warmup: usize,
    pub max_iterations: usize,
    /// Convergence when the residual drops below this times the initial
    /// load norm ...
    pub rel_tolerance: f64,
    /// ... or below this absolute floor.
    pub abs_tolerance: f64,
    /// Initial iterate value at interior nodes (boundary nodes start at 0).
    pub initial_guess_value: f64,
    pub linearization: LinearizationScheme,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            picard_warmup: 4,
            max_iterations: 50,
            rel_tolerance: 1e-10,
            abs_tolerance: 1e-12,
            initial_guess_value: 1.0,
            linearization: LinearizationScheme::Hybrid,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tolerance > 0.0 && self.abs_tolerance > 0.0) {
            return Err(Error::Config(format!(
                "tolerances must be positive, got rel {} abs {}",
                self.rel_tolerance, self.abs_tolerance
            )));
        }
        if self.picard_warmup > self.max_iterations {
            return Err(Error::Config(format!(
                "picard_warmup ({}) exceeds max_iterations ({})",
                self.picard_warmup, self.max_iterations
            )));
        }
        Ok(())
    }
}

/// Linearization actually used by one nonlinear step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMethod {
    Picard,
    Newton,
}

impl fmt::Display for StepMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepMethod::Picard => "picard",
            StepMethod::Newton => "newton",
        })
    }
}

#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub index: usize,
    pub method: StepMethod,
    /// Algebraic residual 2-norm of the fixed-point-form system after the
    /// step.
    pub residual: f64,
    /// 2-norm of the solution update taken by the step.
    pub update_norm: f64,
}

#[derive(Debug, Clone)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
    pub converged: bool,
    pub iterations: usize,
    /// Residual threshold the run converged against,
    /// max(rel_tolerance * ||b0||, abs_tolerance).
    pub tolerance: f64,
}

/// Outcome of a nonlinear solve.
#[derive(Debug, Clone)]
pub struct SolveResult {
    /// Nodal solution, exactly zero on the boundary.
    pub u: Vec<f64>,
    /// Recovered projection unknowns (OSGS only).
    pub xi: Option<Vec<f64>>,
    pub trace: IterationTrace,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Assemble, condense, add lagged shock capturing, and impose boundary
/// conditions: one ready-to-solve linear system for the given iterate.
fn build_system(
    mesh: &StructuredMesh,
    u: &[f64],
    config: &ModelConfig,
    forcing: &dyn Fn(f64, f64) -> f64,
    newton: bool,
) -> Result<(CsrMatrix, Vec<f64>)> {
    let blocks = if newton {
        assemble_newton(mesh, u, config, forcing)?
    } else {
        assemble_picard(mesh, u, config, forcing)?
    };
    let (mut a, mut b) = condense(&blocks)?;
    if config.shock_capturing {
        let (_, contribution) = assemble_shock_capturing(mesh, u, config, forcing)?;
        for i in 0..contribution.n() {
            let (cols, vals) = contribution.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if v != 0.0 {
                    a.add_to(i, j, v);
                }
            }
        }
    }
    apply_dirichlet(&mut a, &mut b, &mesh.boundary_nodes);
    Ok((a, b))
}

/// How much a Newton step may worsen the residual before it is rejected
/// and replaced by a fixed-point step.
const NEWTON_REJECT_FACTOR: f64 = 1e3;

/// Run the nonlinear iteration. Non-convergence within the iteration
/// budget is reported through the trace, not as an error; errors are
/// reserved for invalid input and linear-solver breakdown.
pub fn solve_nonlinear(
    mesh: &StructuredMesh,
    config: &ModelConfig,
    solver_config: &SolverConfig,
    forcing: &dyn Fn(f64, f64) -> f64,
) -> Result<SolveResult> {
    config.validate()?;
    solver_config.validate()?;

    let n = mesh.num_nodes();
    let mut u: Vec<f64> = (0..n)
        .map(|i| {
            if mesh.is_boundary[i] {
                0.0
            } else {
                solver_config.initial_guess_value
            }
        })
        .collect();

    // Fixed-point-form system at the current iterate; the load vector is
    // iterate-independent, so its norm anchors the relative tolerance.
    let (mut a, mut b) = build_system(mesh, &u, config, forcing, false)?;
    let tolerance = (solver_config.rel_tolerance * norm2(&b)).max(solver_config.abs_tolerance);
    let mut res_prev = {
        let au = a.mul_vec(&u);
        norm2(&b.iter().zip(&au).map(|(b, au)| b - au).collect::<Vec<_>>())
    };

    let mut records = Vec::new();
    let mut converged = false;

    for it in 1..=solver_config.max_iterations {
        let want_newton = solver_config.linearization == LinearizationScheme::Hybrid
            && it > solver_config.picard_warmup;

        let mut method = if want_newton {
            StepMethod::Newton
        } else {
            StepMethod::Picard
        };
        let mut u_next = if want_newton {
            let (an, bn) = build_system(mesh, &u, config, forcing, true)?;
            linear_solve(&an, &bn).map_err(|e| Error::SingularSystem {
                iteration: it,
                detail: e.to_string(),
            })?
        } else {
            linear_solve(&a, &b).map_err(|e| Error::SingularSystem {
                iteration: it,
                detail: e.to_string(),
            })?
        };

        let (mut a_next, mut b_next) = build_system(mesh, &u_next, config, forcing, false)?;
        let mut residual = {
            let au = a_next.mul_vec(&u_next);
            norm2(&b_next.iter().zip(&au).map(|(b, au)| b - au).collect::<Vec<_>>())
        };

        if method == StepMethod::Newton && residual > NEWTON_REJECT_FACTOR * res_prev {
            // Newton overshot badly; fall back to the fixed-point step
            // from the same iterate.
            method = StepMethod::Picard;
            u_next = linear_solve(&a, &b).map_err(|e| Error::SingularSystem {
                iteration: it,
                detail: e.to_string(),
            })?;
            let rebuilt = build_system(mesh, &u_next, config, forcing, false)?;
            a_next = rebuilt.0;
            b_next = rebuilt.1;
            let au = a_next.mul_vec(&u_next);
            residual = norm2(&b_next.iter().zip(&au).map(|(b, au)| b - au).collect::<Vec<_>>());
        }

        let update_norm = norm2(
            &u_next
                .iter()
                .zip(&u)
                .map(|(a, b)| a - b)
                .collect::<Vec<_>>(),
        );
        records.push(IterationRecord {
            index: it,
            method,
            residual,
            update_norm,
        });

        u = u_next;
        a = a_next;
        b = b_next;
        res_prev = residual;

        if residual <= tolerance {
            converged = true;
            break;
        }
    }

    let xi = if config.stabilization == Stabilization::Osgs {
        let blocks = assemble_picard(mesh, &u, config, forcing)?;
        Some(recover_projection(&blocks, &u)?)
    } else {
        None
    };

    let iterations = records.len();
    Ok(SolveResult {
        u,
        xi,
        trace: IterationTrace {
            records,
            converged,
            iterations,
            tolerance,
        },
    })
}

/// Direct solve of a sparse system by banded LU with partial pivoting.
/// The band is extracted from the sparsity pattern; structured-mesh
/// matrices keep it narrow.
pub fn linear_solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.n();
    if b.len() != n {
        return Err(Error::InvalidArgument(format!(
            "right-hand side has {} entries for an {n}x{n} matrix",
            b.len()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }

    let (kl, ku) = a.bandwidth();
    // Row interchanges can push fill up to kl columns beyond the
    // original upper band.
    let ku_ext = ku + kl;
    let w = kl + ku_ext + 1;

    // Row-major band storage: entry (i, j) lives at i * w + (j - i + kl).
    let mut band = vec![0.0; n * w];
    for i in 0..n {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            band[i * w + (j + kl - i)] = v;
        }
    }

    let mut rhs = b.to_vec();
    let mut pivot_tail = Vec::with_capacity(ku_ext);

    for col in 0..n {
        let rmax = (col + kl).min(n - 1);
        let mut prow = col;
        let mut pmax = band[col * w + kl].abs();
        for r in col + 1..=rmax {
            let v = band[r * w + (col + kl - r)].abs();
            if v > pmax {
                pmax = v;
                prow = r;
            }
        }
        if pmax == 0.0 || !pmax.is_finite() {
            return Err(Error::LinearSolve(format!(
                "singular matrix: no usable pivot in column {col}"
            )));
        }

        let jmax = (col + ku_ext).min(n - 1);
        if prow != col {
            for j in col..=jmax {
                band.swap(col * w + (j + kl - col), prow * w + (j + kl - prow));
            }
            rhs.swap(col, prow);
        }

        let piv = band[col * w + kl];
        pivot_tail.clear();
        pivot_tail.extend_from_slice(&band[col * w + kl + 1..col * w + kl + 1 + (jmax - col)]);

        for r in col + 1..=rmax {
            let off = col + kl - r;
            let factor = band[r * w + off] / piv;
            if factor == 0.0 {
                continue;
            }
            band[r * w + off] = 0.0;
            let base = r * w + off + 1;
            let row = &mut band[base..base + pivot_tail.len()];
            for (dst, &src) in row.iter_mut().zip(&pivot_tail) {
                *dst -= factor * src;
            }
            rhs[r] -= factor * rhs[col];
        }
    }

    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let jmax = (i + ku_ext).min(n - 1);
        let mut acc = rhs[i];
        for j in i + 1..=jmax {
            acc -= band[i * w + (j + kl - i)] * x[j];
        }
        x[i] = acc / band[i * w + kl];
    }

    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::LinearSolve(
            "solution contains non-finite values".into(),
        ));
    }
    Ok(x)
}

/// Observed convergence order of a positive residual or error sequence,
/// without mesh-size information: consecutive log-ratio quotients,
/// averaged over the last three usable intervals.
pub fn estimate_rate(series: &[f64]) -> Result<f64> {
    if series.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "rate estimation needs at least 4 entries, got {}",
            series.len()
        )));
    }
    if series.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidArgument(
            "rate estimation needs strictly positive entries".into(),
        ));
    }
    let mut quotients = Vec::new();
    for i in 1..series.len() - 1 {
        let num = (series[i + 1] / series[i]).ln();
        let den = (series[i] / series[i - 1]).ln();
        if den != 0.0 {
            quotients.push(num / den);
        }
    }
    if quotients.is_empty() {
        return Err(Error::InvalidArgument(
            "rate estimation found no usable intervals (series is flat)".into(),
        ));
    }
    let tail = &quotients[quotients.len().saturating_sub(3)..];
    Ok(tail.iter().sum::<f64>() / tail.len() as f64)
}

/// Observed order of an error series against mesh sizes: slope of
/// log(error) versus log(h), averaged over the last three intervals.
pub fn estimate_rate_vs_h(errors: &[f64], h: &[f64]) -> Result<f64> {
    if errors.len() != h.len() {
        return Err(Error::InvalidArgument(format!(
            "{} errors against {} mesh sizes",
            errors.len(),
            h.len()
        )));
    }
    if errors.len() < 2 {
        return Err(Error::InvalidArgument(
            "order estimation needs at least 2 levels".into(),
        ));
    }
    if errors.iter().chain(h).any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument(
            "order estimation needs strictly positive entries".into(),
        ));
    }
    let mut slopes = Vec::new();
    for i in 0..errors.len() - 1 {
        slopes.push((errors[i] / errors[i + 1]).ln() / (h[i] / h[i + 1]).ln());
    }
    let tail = &slopes[slopes.len().saturating_sub(3)..];
    Ok(tail.iter().sum::<f64>() / tail.len() as f64)
}
