//! Verification scenarios: manufactured solutions with analytically
//! derived forcing, discretization error norms, and the journal-bearing
//! configuration used for the realistic run.
//!
//! All cases live on the rectangle [0, 2*pi] x [-1, 1] with homogeneous
//! Dirichlet data.

use crate::error::{Error, Result};
use crate::mesh::{build_mesh, element_geometry, QuadratureRule, StructuredMesh};
use crate::model::{gap, switch, ModelConfig};
use std::f64::consts::PI;

/// Domain bounds shared by every case.
pub const X_RANGE: (f64, f64) = (0.0, 2.0 * PI);
pub const Y_RANGE: (f64, f64) = (-1.0, 1.0);

/// Mesh on the standard domain.
pub fn case_mesh(nx: usize, ny: usize) -> Result<StructuredMesh> {
    build_mesh(nx, ny, X_RANGE, Y_RANGE)
}

/// The uniform refinement ladder used by the convergence studies,
/// starting from the coarsest 3x1 mesh and quartering elements per level.
pub fn refinement_series(levels: usize) -> Vec<(usize, usize)> {
    (0..levels).map(|l| (3 << l, 1 << l)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseId {
    /// Smooth manufactured solution spanning both zones.
    Smooth,
    /// Manufactured solution with a sharp layer at the outflow boundary.
    BoundaryLayer,
    /// Journal bearing scenario; no closed-form solution.
    Bearing,
}

#[derive(Debug, Clone)]
pub struct ManufacturedCase {
    pub id: CaseId,
    pub config: ModelConfig,
}

/// Frozen journal-bearing scenario: deep eccentricity, gap minimum at
/// 140 degrees, sharp switch regularization, no external forcing.
pub fn bearing_case_config() -> ModelConfig {
    ModelConfig::new(0.6, 7.0 * PI / 9.0, 0.98)
}

/// Mesh resolution of the reference bearing run.
pub fn bearing_reference_mesh() -> (usize, usize) {
    (100, 32)
}

impl ManufacturedCase {
    pub fn smooth() -> Self {
        ManufacturedCase {
            id: CaseId::Smooth,
            config: ModelConfig::new(0.5, PI, 0.98),
        }
    }

    pub fn boundary_layer() -> Self {
        ManufacturedCase {
            id: CaseId::BoundaryLayer,
            config: ModelConfig::new(0.5, PI, 0.98),
        }
    }

    pub fn bearing() -> Self {
        ManufacturedCase {
            id: CaseId::Bearing,
            config: bearing_case_config(),
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "smooth" | "case1" => Ok(Self::smooth()),
            "boundary_layer" | "case2" => Ok(Self::boundary_layer()),
            "bearing" | "case3" => Ok(Self::bearing()),
            other => Err(Error::Config(format!(
                "unknown case '{other}' (expected smooth, boundary_layer, or bearing)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.id {
            CaseId::Smooth => "smooth",
            CaseId::BoundaryLayer => "boundary_layer",
            CaseId::Bearing => "bearing",
        }
    }

    pub fn has_exact_solution(&self) -> bool {
        self.id != CaseId::Bearing
    }

    fn no_exact(&self) -> Error {
        Error::InvalidArgument(format!(
            "case '{}' has no closed-form solution",
            self.name()
        ))
    }

    /// x-profile and its first two derivatives.
    fn profile_x(&self, x: f64) -> Result<(f64, f64, f64)> {
        match self.id {
            CaseId::Smooth => {
                // (1 - cos 2x) sin x / 6
                let v = (1.0 - (2.0 * x).cos()) * x.sin() / 6.0;
                let d1 = (2.0 * (2.0 * x).sin() * x.sin() + (1.0 - (2.0 * x).cos()) * x.cos()) / 6.0;
                let d2 = (4.0 * (2.0 * x).cos() * x.sin() + 4.0 * (2.0 * x).sin() * x.cos()
                    - (1.0 - (2.0 * x).cos()) * x.sin())
                    / 6.0;
                Ok((v, d1, d2))
            }
            CaseId::BoundaryLayer => {
                // (E(x) - 1 + (cos(x/2) + 1)/2) / 4 with the exponential
                // ratio E in overflow-safe shifted form.
                let scale = 100.0_f64;
                let denom = 1.0 - (-scale).exp();
                let t = (scale * (x / (2.0 * PI) - 1.0)).exp() / denom;
                let e = t - (-scale).exp() / denom;
                let c = scale / (2.0 * PI);
                let v = 0.25 * (e - 1.0 + ((x / 2.0).cos() + 1.0) / 2.0);
                let d1 = 0.25 * (c * t - (x / 2.0).sin() / 4.0);
                let d2 = 0.25 * (c * c * t - (x / 2.0).cos() / 8.0);
                Ok((v, d1, d2))
            }
            CaseId::Bearing => Err(self.no_exact()),
        }
    }

    /// y-profile 1 + cos(pi y) and derivatives, shared by both cases.
    fn profile_y(&self, y: f64) -> (f64, f64, f64) {
        (
            1.0 + (PI * y).cos(),
            -PI * (PI * y).sin(),
            -PI * PI * (PI * y).cos(),
        )
    }

    pub fn exact_u(&self, x: f64, y: f64) -> Result<f64> {
        let (xv, _, _) = self.profile_x(x)?;
        let (yv, _, _) = self.profile_y(y);
        Ok(xv * yv)
    }

    pub fn exact_grad_u(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let (xv, xd, _) = self.profile_x(x)?;
        let (yv, yd, _) = self.profile_y(y);
        Ok((xd * yv, xv * yd))
    }

    /// Pure second derivatives (d2u/dx2, d2u/dy2).
    pub fn exact_second_derivatives(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let (xv, _, xdd) = self.profile_x(x)?;
        let (yv, _, ydd) = self.profile_y(y);
        Ok((xdd * yv, xv * ydd))
    }

    /// Forcing that makes the exact solution solve the boundary-value
    /// problem: the strong operator applied to it, plus the gap slope.
    pub fn manufactured_forcing(&self, x: f64, y: f64) -> Result<f64> {
        let u = self.exact_u(x, y)?;
        let (ux, uy) = self.exact_grad_u(x, y)?;
        let (uxx, uyy) = self.exact_second_derivatives(x, y)?;

        let (g, dg, d2g) = switch(u, &self.config);
        let phi_prime = g + u * dg;
        let phi_second = 2.0 * dg + u * d2g;
        let psi = (g - 1.0) * u;
        let dpsi_du = dg * u + g - 1.0;
        let (h, hx) = gap(x, &self.config);

        let h3 = h * h * h;
        let div_flux = 3.0 * h * h * hx * phi_prime * ux
            + h3 * phi_second * (ux * ux + uy * uy)
            + h3 * phi_prime * (uxx + uyy);
        let operator = -div_flux / 12.0 - psi * hx - h * dpsi_du * ux;
        Ok(operator + hx)
    }

    /// Forcing closure for the solver: the manufactured forcing for the
    /// analytic cases, zero for the bearing.
    pub fn forcing(&self) -> Box<dyn Fn(f64, f64) -> f64 + '_> {
        if self.has_exact_solution() {
            Box::new(move |x, y| {
                self.manufactured_forcing(x, y)
                    .expect("analytic case evaluates everywhere")
            })
        } else {
            Box::new(|_, _| 0.0)
        }
    }
}

/// Nodal interpolant of the exact solution.
pub fn interpolate_exact(case: &ManufacturedCase, mesh: &StructuredMesh) -> Result<Vec<f64>> {
    mesh.nodes
        .iter()
        .map(|&(x, y)| case.exact_u(x, y))
        .collect()
}

/// Relative L2 error of a nodal field against the exact solution,
/// normalized by the exact solution's L2 norm.
pub fn error_l2(case: &ManufacturedCase, mesh: &StructuredMesh, u_h: &[f64]) -> Result<f64> {
    let (err_sq, exact_sq, _) = error_integrals(case, mesh, u_h)?;
    Ok((err_sq / exact_sq).sqrt())
}

/// L2 norm of a bilinear nodal field, integrated with the 3x3 rule.
pub fn field_l2_norm(mesh: &StructuredMesh, u_h: &[f64]) -> Result<f64> {
    if u_h.len() != mesh.num_nodes() {
        return Err(Error::InvalidArgument(format!(
            "field has {} values for a mesh with {} nodes",
            u_h.len(),
            mesh.num_nodes()
        )));
    }
    let rule = QuadratureRule::gauss_3x3();
    let mut total = 0.0;
    for e in 0..mesh.num_elements() {
        let nodes = mesh.elements[e];
        for (xi, eta, w) in rule.iter() {
            let geo = element_geometry(mesh, e, xi, eta)?;
            let mut value = 0.0;
            for a in 0..4 {
                value += geo.values[a] * u_h[nodes[a]];
            }
            total += w * geo.det_jacobian * value * value;
        }
    }
    Ok(total.sqrt())
}

/// L2 norm of the exact solution over the mesh, the normalization used by
/// the relative error.
pub fn exact_l2_norm(case: &ManufacturedCase, mesh: &StructuredMesh) -> Result<f64> {
    let zero = vec![0.0; mesh.num_nodes()];
    let (_, exact_sq, _) = error_integrals(case, mesh, &zero)?;
    Ok(exact_sq.sqrt())
}

/// Absolute H1 seminorm error of a nodal field.
pub fn error_h1_semi(case: &ManufacturedCase, mesh: &StructuredMesh, u_h: &[f64]) -> Result<f64> {
    let (_, _, grad_err_sq) = error_integrals(case, mesh, u_h)?;
    Ok(grad_err_sq.sqrt())
}

fn error_integrals(
    case: &ManufacturedCase,
    mesh: &StructuredMesh,
    u_h: &[f64],
) -> Result<(f64, f64, f64)> {
    if u_h.len() != mesh.num_nodes() {
        return Err(Error::InvalidArgument(format!(
            "field has {} values for a mesh with {} nodes",
            u_h.len(),
            mesh.num_nodes()
        )));
    }
    if !case.has_exact_solution() {
        return Err(case.no_exact());
    }
    let rule = QuadratureRule::gauss_3x3();
    let mut err_sq = 0.0;
    let mut exact_sq = 0.0;
    let mut grad_err_sq = 0.0;
    for e in 0..mesh.num_elements() {
        let conn = mesh.elements[e];
        for (xi, eta, w) in rule.iter() {
            let geo = element_geometry(mesh, e, xi, eta)?;
            let wq = w * geo.det_jacobian;
            let mut uh = 0.0;
            let mut duh = [0.0; 2];
            for a in 0..4 {
                let ua = u_h[conn[a]];
                uh += geo.values[a] * ua;
                duh[0] += geo.gradients[a][0] * ua;
                duh[1] += geo.gradients[a][1] * ua;
            }
            let (x, y) = geo.point;
            let exact = case.exact_u(x, y)?;
            let (gx, gy) = case.exact_grad_u(x, y)?;
            err_sq += wq * (exact - uh) * (exact - uh);
            exact_sq += wq * exact * exact;
            grad_err_sq += wq * ((gx - duh[0]).powi(2) + (gy - duh[1]).powi(2));
        }
    }
    Ok((err_sq, exact_sq, grad_err_sq))
}
