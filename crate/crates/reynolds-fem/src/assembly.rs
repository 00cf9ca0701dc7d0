//! Element-loop assembly of the discrete systems: the Galerkin bilinear
//! form in its Picard and Newton linearizations, the subgrid-scale
//! stabilization blocks with their lumped projection, the upwind
//! artificial-diffusion comparator, residual-driven shock capturing,
//! Dirichlet elimination, and static condensation of the projection
//! unknowns.

use crate::error::{Error, Result};
use crate::mesh::{element_geometry, QuadratureRule, StructuredMesh};
use crate::model::{coefficients, forcing_rhs, ModelConfig, Stabilization};
use crate::sparse::{stencil_pattern, CsrMatrix};

/// Assembled blocks of the two-field (solution, projection) system.
///
/// The projection blocks are only populated under OSGS stabilization;
/// the other modes fold everything into `k`.
#[derive(Debug, Clone)]
pub struct SystemBlocks {
    pub stabilization: Stabilization,
    /// Galerkin matrix plus the first stabilization term.
    pub k: CsrMatrix,
    /// Coupling of the test convection against the projection unknown.
    pub p_tau: Option<CsrMatrix>,
    /// Projection rows: convection of the solution tested against the
    /// projection space.
    pub p: Option<CsrMatrix>,
    /// Row-sum lumped Gram matrix of the projection space (diagonal).
    pub m: Option<Vec<f64>>,
    /// Load vector.
    pub f: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Linearization {
    Picard,
    Newton,
}

/// Assemble with coefficients frozen at `u_prev` (fixed-point
/// linearization).
pub fn assemble_picard(
    mesh: &StructuredMesh,
    u_prev: &[f64],
    config: &ModelConfig,
    forcing: &dyn Fn(f64, f64) -> f64,
) -> Result<SystemBlocks> {
    assemble(mesh, u_prev, config, forcing, Linearization::Picard)
}

/// Assemble the Newton linearization around `u_prev`. The Galerkin part
/// is the exact Jacobian of the nonlinear form; the stabilization terms
/// stay Picard-frozen.
pub fn assemble_newton(
    mesh: &StructuredMesh,
    u_prev: &[f64],
    config: &ModelConfig,
    forcing: &dyn Fn(f64, f64) -> f64,
) -> Result<SystemBlocks> {
    assemble(mesh, u_prev, config, forcing, Linearization::Newton)
}

fn assemble(
    mesh: &StructuredMesh,
    u_prev: &[f64],
    config: &ModelConfig,
    forcing: &dyn Fn(f64, f64) -> f64,
    linearization: Linearization,
) -> Result<SystemBlocks> {
    if u_prev.len() != mesh.num_nodes() {
        return Err(Error::InvalidArgument(format!(
            "field has {} values for a mesh with {} nodes",
            u_prev.len(),
            mesh.num_nodes()
        )));
    }

    let n = mesh.num_nodes();
    let pattern = stencil_pattern(mesh, 1);
    let mut k = CsrMatrix::from_adjacency(&pattern);
    let osgs = config.stabilization == Stabilization::Osgs;
    let mut p_tau = osgs.then(|| CsrMatrix::from_adjacency(&pattern));
    let mut p = osgs.then(|| CsrMatrix::from_adjacency(&pattern));
    let mut m = osgs.then(|| vec![0.0; n]);
    let mut f = vec![0.0; n];

    let rule = QuadratureRule::gauss_2x2();
    let h = mesh.element_size();

    for e in 0..mesh.num_elements() {
        let conn = mesh.elements[e];
        let mut local_k = [[0.0; 4]; 4];
        let mut local_pt = [[0.0; 4]; 4];
        let mut local_p = [[0.0; 4]; 4];
        let mut local_m = [0.0; 4];
        let mut local_f = [0.0; 4];

        for (xi, eta, w) in rule.iter() {
            let geo = element_geometry(mesh, e, xi, eta)?;
            let (x, y) = geo.point;
            let nv = &geo.values;
            let ng = &geo.gradients;

            let mut u_q = 0.0;
            let mut du = [0.0; 2];
            for a in 0..4 {
                let ua = u_prev[conn[a]];
                u_q += nv[a] * ua;
                du[0] += ng[a][0] * ua;
                du[1] += ng[a][1] * ua;
            }

            let c = coefficients(u_q, du[0], x, h, config);
            let fhat = forcing_rhs(x, forcing(x, y), config);
            let wq = w * geo.det_jacobian;

            match linearization {
                Linearization::Picard => {
                    for i in 0..4 {
                        for j in 0..4 {
                            let diffusion = c.k * (ng[i][0] * ng[j][0] + ng[i][1] * ng[j][1]);
                            let convection = nv[i] * c.a_x * ng[j][0];
                            let reaction = nv[i] * c.s * nv[j];
                            local_k[i][j] += wq * (diffusion - convection - reaction);
                        }
                        local_f[i] += wq * nv[i] * fhat;
                    }
                }
                Linearization::Newton => {
                    for i in 0..4 {
                        let grad_i_dot_du = ng[i][0] * du[0] + ng[i][1] * du[1];
                        for j in 0..4 {
                            let diffusion = c.k * (ng[i][0] * ng[j][0] + ng[i][1] * ng[j][1]);
                            let diffusion_lin = grad_i_dot_du * c.dk_du * nv[j];
                            let convection = nv[i] * c.gap * c.dpsi_du * ng[j][0];
                            let reaction = nv[i] * c.chi * nv[j];
                            local_k[i][j] += wq * (diffusion + diffusion_lin - convection - reaction);
                        }
                        // Load plus the linearization remainders, so that
                        // F - K u_prev reproduces the Picard residual.
                        local_f[i] += wq
                            * (nv[i] * fhat + grad_i_dot_du * c.dk_du * u_q - nv[i] * c.chi * u_q
                                + nv[i] * c.psi * c.dgap_dx);
                    }
                }
            }

            match config.stabilization {
                Stabilization::None => {}
                Stabilization::Osgs => {
                    for i in 0..4 {
                        let adv_i = c.a_x * ng[i][0];
                        for j in 0..4 {
                            let adv_j = c.a_x * ng[j][0];
                            local_k[i][j] += wq * c.tau * adv_i * adv_j;
                            local_pt[i][j] += wq * adv_i * c.tau * nv[j];
                            local_p[i][j] += wq * nv[i] * adv_j;
                        }
                        local_m[i] += wq * nv[i];
                    }
                }
                Stabilization::ArtificialDiffusion => {
                    // Upwind direction; the integrand vanishes where the
                    // convection does, so sign(0) is taken as 0.
                    let upwind = if c.a_x == 0.0 { 0.0 } else { c.a_x.signum() };
                    for i in 0..4 {
                        let test = upwind * ng[i][0] * 0.5 * h;
                        for j in 0..4 {
                            local_k[i][j] += wq * test * (c.a_x * ng[j][0] + c.s * nv[j]);
                        }
                    }
                }
            }
        }

        for i in 0..4 {
            let gi = conn[i];
            f[gi] += local_f[i];
            for j in 0..4 {
                k.add_to(gi, conn[j], local_k[i][j]);
            }
            if let (Some(pt), Some(pm), Some(mm)) = (p_tau.as_mut(), p.as_mut(), m.as_mut()) {
                for j in 0..4 {
                    pt.add_to(gi, conn[j], local_pt[i][j]);
                    pm.add_to(gi, conn[j], local_p[i][j]);
                }
                mm[gi] += local_m[i];
            }
        }
    }

    Ok(SystemBlocks {
        stabilization: config.stabilization,
        k,
        p_tau,
        p,
        m,
        f,
    })
}

/// Eliminate the projection unknowns: A = K - P_tau M^{-1} P, b = F.
/// Without OSGS the system is already condensed and A = K.
pub fn condense(blocks: &SystemBlocks) -> Result<(CsrMatrix, Vec<f64>)> {
    if blocks.stabilization != Stabilization::Osgs {
        return Ok((blocks.k.clone(), blocks.f.clone()));
    }
    let p_tau = blocks.p_tau.as_ref().expect("osgs blocks carry p_tau");
    let p = blocks.p.as_ref().expect("osgs blocks carry p");
    let m = blocks.m.as_ref().expect("osgs blocks carry m");
    let n = blocks.k.n();

    if let Some(l) = m.iter().position(|&v| v <= 0.0) {
        return Err(Error::Assembly(format!(
            "lumped mass entry {l} is nonpositive ({}); degenerate element",
            m[l]
        )));
    }

    // Symbolic pattern of K - P_tau M^{-1} P: the K stencil widened by
    // one more layer through the matrix product.
    let mut rows: Vec<Vec<usize>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut cols: Vec<usize> = blocks.k.row(i).0.to_vec();
        for &l in p_tau.row(i).0 {
            cols.extend_from_slice(p.row(l).0);
        }
        cols.sort_unstable();
        cols.dedup();
        rows.push(cols);
    }
    let mut a = CsrMatrix::from_adjacency(&rows);

    let mut workspace = vec![0.0; n];
    for i in 0..n {
        let (k_cols, k_vals) = blocks.k.row(i);
        for (&j, &v) in k_cols.iter().zip(k_vals) {
            workspace[j] += v;
        }
        let (pt_cols, pt_vals) = p_tau.row(i);
        for (&l, &ptv) in pt_cols.iter().zip(pt_vals) {
            if ptv == 0.0 {
                continue;
            }
            let scale = ptv / m[l];
            let (p_cols, p_vals) = p.row(l);
            for (&j, &pv) in p_cols.iter().zip(p_vals) {
                workspace[j] -= scale * pv;
            }
        }
        let vals = a.row_values_mut(i);
        for (slot, &j) in vals.iter_mut().zip(&rows[i]) {
            *slot = workspace[j];
            workspace[j] = 0.0;
        }
    }

    Ok((a, blocks.f.clone()))
}

/// Recover the projection unknowns from a solved field: xi = M^{-1} P u.
pub fn recover_projection(blocks: &SystemBlocks, u: &[f64]) -> Result<Vec<f64>> {
    let (p, m) = match (&blocks.p, &blocks.m) {
        (Some(p), Some(m)) => (p, m),
        _ => {
            return Err(Error::InvalidArgument(
                "projection unknowns exist only under osgs stabilization".into(),
            ))
        }
    };
    let pu = p.mul_vec(u);
    Ok(pu.iter().zip(m).map(|(&num, &den)| num / den).collect())
}

/// Impose homogeneous Dirichlet values on the listed nodes by symmetric
/// elimination: their rows and columns are zeroed, the diagonal set to
/// one, and the right-hand side entries set to zero.
pub fn apply_dirichlet(a: &mut CsrMatrix, b: &mut [f64], boundary_nodes: &[usize]) {
    let n = a.n();
    let mut constrained = vec![false; n];
    for &d in boundary_nodes {
        constrained[d] = true;
    }
    for i in 0..n {
        let (cols, vals) = a.row_mut(i);
        if constrained[i] {
            vals.fill(0.0);
            for (p, &j) in cols.iter().enumerate() {
                if j == i {
                    vals[p] = 1.0;
                }
            }
            b[i] = 0.0;
        } else {
            for (p, &j) in cols.iter().enumerate() {
                if constrained[j] {
                    vals[p] = 0.0;
                }
            }
        }
    }
}

/// Pointwise residual of the nonlinear strong form at one quadrature
/// point of one element, with all product and chain rules expanded
/// through the gap and switch functions. Second derivatives of the
/// bilinear field vanish on axis-aligned rectangles except the mixed
/// one, which the divergence does not see.
pub fn strong_residual(
    mesh: &StructuredMesh,
    u_field: &[f64],
    element: usize,
    xi: f64,
    eta: f64,
    config: &ModelConfig,
    forcing: &dyn Fn(f64, f64) -> f64,
) -> Result<f64> {
    if u_field.len() != mesh.num_nodes() {
        return Err(Error::InvalidArgument(format!(
            "field has {} values for a mesh with {} nodes",
            u_field.len(),
            mesh.num_nodes()
        )));
    }
    let geo = element_geometry(mesh, element, xi, eta)?;
    let conn = mesh.elements[element];

    let mut u = 0.0;
    let mut ux = 0.0;
    let mut uy = 0.0;
    let mut uxx = 0.0;
    let mut uyy = 0.0;
    for a in 0..4 {
        let ua = u_field[conn[a]];
        u += geo.values[a] * ua;
        ux += geo.gradients[a][0] * ua;
        uy += geo.gradients[a][1] * ua;
        uxx += geo.second_derivatives[a][0] * ua;
        uyy += geo.second_derivatives[a][1] * ua;
    }

    let (x, y) = geo.point;
    let c = coefficients(u, ux, x, mesh.element_size(), config);
    let fhat = forcing_rhs(x, forcing(x, y), config);

    let gap = c.gap;
    let h3 = gap * gap * gap;
    let div_flux = 3.0 * gap * gap * c.dgap_dx * c.phi_prime * ux
        + h3 * c.phi_second * (ux * ux + uy * uy)
        + h3 * c.phi_prime * (uxx + uyy);

    Ok(-div_flux / 12.0 - c.psi * c.dgap_dx - gap * c.dpsi_du * ux - fhat)
}

/// Per-element shock-capturing quantities of one nonlinear iterate.
#[derive(Debug, Clone)]
pub struct ShockCaptureState {
    /// Normalized strong-residual norm R* per element.
    pub residual_norm: Vec<f64>,
    /// Element Peclet-like number built from R*.
    pub peclet: Vec<f64>,
    /// Limiter value, zero where the local diffusion already dominates.
    pub sigma: Vec<f64>,
    /// Added isotropic diffusivity per element.
    pub tau_s: Vec<f64>,
    /// Global scaling factor balancing the dimensions of the residual
    /// normalization.
    pub alpha: f64,
}

/// Residual-driven isotropic diffusion, lagged to `u_prev`. Returns the
/// per-element state and the matrix contribution to add to the system
/// matrix.
pub fn assemble_shock_capturing(
    mesh: &StructuredMesh,
    u_prev: &[f64],
    config: &ModelConfig,
    forcing: &dyn Fn(f64, f64) -> f64,
) -> Result<(ShockCaptureState, CsrMatrix)> {
    if u_prev.len() != mesh.num_nodes() {
        return Err(Error::InvalidArgument(format!(
            "field has {} values for a mesh with {} nodes",
            u_prev.len(),
            mesh.num_nodes()
        )));
    }

    let ne = mesh.num_elements();
    let h = mesh.element_size();
    let norm_rule = QuadratureRule::gauss_3x3();

    // Element norms of the strong residual, the forcing, and the iterate.
    let mut res_norm = vec![0.0; ne];
    let mut fhat_norm = vec![0.0; ne];
    let mut u_h1_norm = vec![0.0; ne];
    for e in 0..ne {
        let conn = mesh.elements[e];
        for (xi, eta, w) in norm_rule.iter() {
            let geo = element_geometry(mesh, e, xi, eta)?;
            let wq = w * geo.det_jacobian;
            let mut u = 0.0;
            let mut du = [0.0; 2];
            for a in 0..4 {
                let ua = u_prev[conn[a]];
                u += geo.values[a] * ua;
                du[0] += geo.gradients[a][0] * ua;
                du[1] += geo.gradients[a][1] * ua;
            }
            let res = strong_residual(mesh, u_prev, e, xi, eta, config, forcing)?;
            let fhat = forcing_rhs(geo.point.0, forcing(geo.point.0, geo.point.1), config);
            res_norm[e] += wq * res * res;
            fhat_norm[e] += wq * fhat * fhat;
            u_h1_norm[e] += wq * (u * u + du[0] * du[0] + du[1] * du[1]);
        }
    }
    for e in 0..ne {
        res_norm[e] = res_norm[e].sqrt();
        fhat_norm[e] = fhat_norm[e].sqrt();
        u_h1_norm[e] = u_h1_norm[e].sqrt();
    }

    let total_u: f64 = u_h1_norm.iter().sum();
    let total_f: f64 = fhat_norm.iter().sum();
    let alpha = if total_f > 0.0 { total_u / total_f } else { 0.0 };

    let mut residual_norm = vec![0.0; ne];
    let mut peclet = vec![0.0; ne];
    let mut sigma = vec![0.0; ne];
    let mut tau_s = vec![0.0; ne];
    for e in 0..ne {
        let denom = alpha * fhat_norm[e] + u_h1_norm[e];
        let rstar = if denom > 0.0 { res_norm[e] / denom } else { 0.0 };
        residual_norm[e] = rstar;
        if rstar <= 0.0 {
            continue;
        }
        // Diffusivity at the element centroid from the previous iterate.
        let geo = element_geometry(mesh, e, 0.0, 0.0)?;
        let conn = mesh.elements[e];
        let mut u = 0.0;
        let mut dux = 0.0;
        for a in 0..4 {
            u += geo.values[a] * u_prev[conn[a]];
            dux += geo.gradients[a][0] * u_prev[conn[a]];
        }
        let k_c = coefficients(u, dux, geo.point.0, h, config).k;
        peclet[e] = h * rstar / (2.0 * k_c);
        sigma[e] = 0.5 * h * (config.beta - 2.0 * k_c / (h * rstar)).max(0.0);
        tau_s[e] = rstar * sigma[e];
    }

    let mut contribution = CsrMatrix::from_adjacency(&stencil_pattern(mesh, 1));
    let rule = QuadratureRule::gauss_2x2();
    for e in 0..ne {
        if tau_s[e] <= 0.0 {
            continue;
        }
        let conn = mesh.elements[e];
        let mut local = [[0.0; 4]; 4];
        for (xi, eta, w) in rule.iter() {
            let geo = element_geometry(mesh, e, xi, eta)?;
            let wq = w * geo.det_jacobian * tau_s[e];
            for i in 0..4 {
                for j in 0..4 {
                    local[i][j] += wq
                        * (geo.gradients[i][0] * geo.gradients[j][0]
                            + geo.gradients[i][1] * geo.gradients[j][1]);
                }
            }
        }
        for i in 0..4 {
            for j in 0..4 {
                contribution.add_to(conn[i], conn[j], local[i][j]);
            }
        }
    }

    Ok((
        ShockCaptureState {
            residual_norm,
            peclet,
            sigma,
            tau_s,
            alpha,
        },
        contribution,
    ))
}
