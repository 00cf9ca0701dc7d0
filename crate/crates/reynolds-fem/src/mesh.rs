//! Structured bilinear-quadrilateral meshes on an axis-aligned rectangle,
//! reference shape functions, and tensor-product Gauss quadrature.
//!
//! Node numbering is row-major with x running fastest: node (i, j) has
//! index `j * (nx + 1) + i`. Element (ex, ey) collects its four corner
//! nodes counterclockwise starting at the bottom-left.

use crate::error::{Error, Result};

/// Uniform structured mesh of 4-node quadrilaterals.
#[derive(Debug, Clone)]
pub struct StructuredMesh {
    pub nx: usize,
    pub ny: usize,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    /// Node coordinates, `(nx + 1) * (ny + 1)` entries.
    pub nodes: Vec<(f64, f64)>,
    /// Counterclockwise corner nodes per element, `nx * ny` entries.
    pub elements: Vec<[usize; 4]>,
    /// Sorted indices of all nodes on the boundary of the rectangle.
    pub boundary_nodes: Vec<usize>,
    /// Per-node boundary flag, same length as `nodes`.
    pub is_boundary: Vec<bool>,
    /// Grid spacing in x (uniform).
    pub dx: f64,
    /// Grid spacing in y (uniform).
    pub dy: f64,
}

impl StructuredMesh {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    /// Global node index of grid position (i, j).
    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    /// Element diameter used by the stabilization parameter: the maximum
    /// edge length. Uniform over this mesh, so one value per mesh.
    pub fn element_size(&self) -> f64 {
        self.dx.max(self.dy)
    }

    pub fn domain_area(&self) -> f64 {
        (self.x_range.1 - self.x_range.0) * (self.y_range.1 - self.y_range.0)
    }
}

/// Build a uniform `nx x ny` mesh on `[x_min, x_max] x [y_min, y_max]`.
pub fn build_mesh(
    nx: usize,
    ny: usize,
    x_range: (f64, f64),
    y_range: (f64, f64),
) -> Result<StructuredMesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument(format!(
            "element counts must be positive, got {nx} x {ny}"
        )));
    }
    if !(x_range.0 < x_range.1) || !(y_range.0 < y_range.1) {
        return Err(Error::InvalidArgument(format!(
            "inverted or degenerate ranges: x {:?}, y {:?}",
            x_range, y_range
        )));
    }

    let lx = x_range.1 - x_range.0;
    let ly = y_range.1 - y_range.0;
    let n_nodes = (nx + 1) * (ny + 1);
    let mut nodes = Vec::with_capacity(n_nodes);
    let mut is_boundary = vec![false; n_nodes];
    let mut boundary_nodes = Vec::new();

    // Coordinates via i/nx so a refined mesh reproduces parent nodes exactly:
    // (2i)/(2nx) == i/nx in IEEE arithmetic.
    for j in 0..=ny {
        for i in 0..=nx {
            let x = x_range.0 + lx * (i as f64 / nx as f64);
            let y = y_range.0 + ly * (j as f64 / ny as f64);
            nodes.push((x, y));
            if i == 0 || i == nx || j == 0 || j == ny {
                let idx = j * (nx + 1) + i;
                is_boundary[idx] = true;
                boundary_nodes.push(idx);
            }
        }
    }

    let mut elements = Vec::with_capacity(nx * ny);
    for ey in 0..ny {
        for ex in 0..nx {
            let n0 = ey * (nx + 1) + ex;
            let n1 = n0 + 1;
            let n2 = n1 + (nx + 1);
            let n3 = n0 + (nx + 1);
            elements.push([n0, n1, n2, n3]);
        }
    }

    Ok(StructuredMesh {
        nx,
        ny,
        x_range,
        y_range,
        nodes,
        elements,
        boundary_nodes,
        is_boundary,
        dx: lx / nx as f64,
        dy: ly / ny as f64,
    })
}

/// Split every element into four congruent children.
pub fn refine(mesh: &StructuredMesh) -> StructuredMesh {
    build_mesh(2 * mesh.nx, 2 * mesh.ny, mesh.x_range, mesh.y_range)
        .expect("refinement of a valid mesh cannot fail")
}

/// Bilinear shape function values and reference-coordinate gradients at
/// `(xi, eta)` on `[-1, 1]^2`. Corner order matches the element
/// connectivity: (-1,-1), (1,-1), (1,1), (-1,1).
pub fn shape_functions(xi: f64, eta: f64) -> ([f64; 4], [[f64; 2]; 4]) {
    let xm = 1.0 - xi;
    let xp = 1.0 + xi;
    let em = 1.0 - eta;
    let ep = 1.0 + eta;
    let values = [
        0.25 * xm * em,
        0.25 * xp * em,
        0.25 * xp * ep,
        0.25 * xm * ep,
    ];
    let gradients = [
        [-0.25 * em, -0.25 * xm],
        [0.25 * em, -0.25 * xp],
        [0.25 * ep, 0.25 * xp],
        [-0.25 * ep, 0.25 * xm],
    ];
    (values, gradients)
}

/// Geometry data of one element at a reference point.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    /// Physical coordinates of the mapped reference point.
    pub point: (f64, f64),
    /// Shape function values.
    pub values: [f64; 4],
    /// Physical gradients (d/dx, d/dy) of the four shape functions.
    pub gradients: [[f64; 2]; 4],
    /// Physical second derivatives (d2/dx2, d2/dy2, d2/dxdy). The first two
    /// vanish identically for bilinear shapes on axis-aligned rectangles.
    pub second_derivatives: [[f64; 3]; 4],
    /// Jacobian determinant of the reference-to-physical map.
    pub det_jacobian: f64,
}

/// Evaluate the isoparametric map and shape derivatives of `element_id`
/// at reference point `(xi, eta)`.
pub fn element_geometry(
    mesh: &StructuredMesh,
    element_id: usize,
    xi: f64,
    eta: f64,
) -> Result<ElementGeometry> {
    let conn = *mesh
        .elements
        .get(element_id)
        .ok_or_else(|| Error::InvalidArgument(format!("element id {element_id} out of range")))?;

    let (values, ref_grads) = shape_functions(xi, eta);

    let mut x = 0.0;
    let mut y = 0.0;
    for (a, &n) in conn.iter().enumerate() {
        let (xn, yn) = mesh.nodes[n];
        x += values[a] * xn;
        y += values[a] * yn;
    }

    // Axis-aligned rectangles: the map is affine per axis.
    let jx = 0.5 * mesh.dx;
    let jy = 0.5 * mesh.dy;
    let det_jacobian = jx * jy;

    let mut gradients = [[0.0; 2]; 4];
    let mut second_derivatives = [[0.0; 3]; 4];
    // d2N/dxi deta is constant +-1/4 with sign alternating around the corners.
    let mixed_ref = [0.25, -0.25, 0.25, -0.25];
    for a in 0..4 {
        gradients[a] = [ref_grads[a][0] / jx, ref_grads[a][1] / jy];
        second_derivatives[a] = [0.0, 0.0, mixed_ref[a] / (jx * jy)];
    }

    Ok(ElementGeometry {
        point: (x, y),
        values,
        gradients,
        second_derivatives,
        det_jacobian,
    })
}

/// Tensor-product Gauss rule on the reference square.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// 2x2 rule, exact for bivariate polynomials of degree 3 per axis.
    pub fn gauss_2x2() -> Self {
        let c = 1.0 / 3.0_f64.sqrt();
        Self::tensor(&[-c, c], &[1.0, 1.0])
    }

    /// 3x3 rule, exact for degree 5 per axis. Used for error norms and the
    /// shock-capturing residual norms.
    pub fn gauss_3x3() -> Self {
        let c = (3.0 / 5.0_f64).sqrt();
        Self::tensor(&[-c, 0.0, c], &[5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
    }

    fn tensor(abscissae: &[f64], weights_1d: &[f64]) -> Self {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (j, &eta) in abscissae.iter().enumerate() {
            for (i, &xi) in abscissae.iter().enumerate() {
                points.push((xi, eta));
                weights.push(weights_1d[i] * weights_1d[j]);
            }
        }
        QuadratureRule { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&(xi, eta), &w)| (xi, eta, w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn build_coarsest_study_mesh() {
        let mesh = build_mesh(3, 1, (0.0, 2.0 * PI), (-1.0, 1.0)).unwrap();
        assert_eq!(mesh.num_nodes(), 8);
        assert_eq!(mesh.num_elements(), 3);
        assert!((mesh.dx - 2.0 * PI / 3.0).abs() < 1e-15);
        assert!((mesh.dy - 2.0).abs() < 1e-15);
        // 3x1: every node touches the boundary.
        assert_eq!(mesh.boundary_nodes.len(), 8);
    }

    #[test]
    fn build_unit_square() {
        let mesh = build_mesh(1, 1, (0.0, 1.0), (0.0, 1.0)).unwrap();
        assert_eq!(mesh.num_nodes(), 4);
        assert_eq!(mesh.num_elements(), 1);
        assert_eq!(mesh.elements[0], [0, 1, 3, 2]);
    }

    #[test]
    fn build_finest_study_mesh() {
        let mesh = build_mesh(96, 32, (0.0, 2.0 * PI), (-1.0, 1.0)).unwrap();
        assert_eq!(mesh.num_nodes(), 97 * 33);
        assert_eq!(mesh.num_nodes(), 3201);
    }

    #[test]
    fn build_rejects_bad_arguments() {
        assert!(build_mesh(0, 1, (0.0, 1.0), (0.0, 1.0)).is_err());
        assert!(build_mesh(1, 0, (0.0, 1.0), (0.0, 1.0)).is_err());
        assert!(build_mesh(1, 1, (1.0, 0.0), (0.0, 1.0)).is_err());
        assert!(build_mesh(1, 1, (0.0, 1.0), (1.0, 1.0)).is_err());
    }

    #[test]
    fn boundary_set_is_exactly_the_rim() {
        let mesh = build_mesh(4, 3, (0.0, 2.0), (-1.0, 1.0)).unwrap();
        for (n, &(x, y)) in mesh.nodes.iter().enumerate() {
            let on_rim = x == mesh.x_range.0
                || x == mesh.x_range.1
                || y == mesh.y_range.0
                || y == mesh.y_range.1;
            assert_eq!(mesh.is_boundary[n], on_rim, "node {n} at ({x}, {y})");
        }
        let expected = 2 * (4 + 1) + 2 * (3 + 1) - 4;
        assert_eq!(mesh.boundary_nodes.len(), expected);
    }

    #[test]
    fn refine_doubles_counts_and_halves_h_exactly() {
        let coarse = build_mesh(3, 1, (0.0, 2.0 * PI), (-1.0, 1.0)).unwrap();
        let fine = refine(&coarse);
        assert_eq!((fine.nx, fine.ny), (6, 2));
        assert_eq!(coarse.element_size() / fine.element_size(), 2.0);

        let mut mesh = coarse;
        for _ in 0..5 {
            mesh = refine(&mesh);
        }
        assert_eq!((mesh.nx, mesh.ny), (96, 32));
    }

    #[test]
    fn refined_nodes_contain_parent_nodes_exactly() {
        let coarse = build_mesh(3, 2, (0.0, 2.0 * PI), (-1.0, 1.0)).unwrap();
        let fine = refine(&coarse);
        for j in 0..=coarse.ny {
            for i in 0..=coarse.nx {
                let p = coarse.nodes[coarse.node_index(i, j)];
                let c = fine.nodes[fine.node_index(2 * i, 2 * j)];
                assert_eq!(p, c, "node ({i}, {j}) moved under refinement");
            }
        }
    }

    #[test]
    fn shapes_at_center_and_corners() {
        let (values, _) = shape_functions(0.0, 0.0);
        for v in values {
            assert!((v - 0.25).abs() < 1e-15);
        }
        let (values, _) = shape_functions(-1.0, -1.0);
        assert_eq!(values, [1.0, 0.0, 0.0, 0.0]);
        // Each shape is 1 at its own corner, 0 at the others.
        let corners = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
        for (a, &(xi, eta)) in corners.iter().enumerate() {
            let (values, _) = shape_functions(xi, eta);
            for (b, &v) in values.iter().enumerate() {
                let expect = if a == b { 1.0 } else { 0.0 };
                assert_eq!(v, expect);
            }
        }
    }

    #[test]
    fn partition_of_unity_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let xi = rng.gen_range(-1.0..1.0);
            let eta = rng.gen_range(-1.0..1.0);
            let (values, grads) = shape_functions(xi, eta);
            let sum: f64 = values.iter().sum();
            assert!((sum - 1.0).abs() < 1e-14);
            let gx: f64 = grads.iter().map(|g| g[0]).sum();
            let gy: f64 = grads.iter().map(|g| g[1]).sum();
            assert!(gx.abs() < 1e-14 && gy.abs() < 1e-14);
        }
    }

    #[test]
    fn shape_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let eps = 1e-6;
        for _ in 0..100 {
            let xi = rng.gen_range(-0.99..0.99);
            let eta = rng.gen_range(-0.99..0.99);
            let (_, grads) = shape_functions(xi, eta);
            let (vxp, _) = shape_functions(xi + eps, eta);
            let (vxm, _) = shape_functions(xi - eps, eta);
            let (vyp, _) = shape_functions(xi, eta + eps);
            let (vym, _) = shape_functions(xi, eta - eps);
            for a in 0..4 {
                let fd_x = (vxp[a] - vxm[a]) / (2.0 * eps);
                let fd_y = (vyp[a] - vym[a]) / (2.0 * eps);
                assert!((grads[a][0] - fd_x).abs() < 1e-8);
                assert!((grads[a][1] - fd_y).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn geometry_on_unit_square_element() {
        let mesh = build_mesh(1, 1, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let geo = element_geometry(&mesh, 0, 0.0, 0.0).unwrap();
        assert!((geo.det_jacobian - 0.25).abs() < 1e-15);
        assert_eq!(geo.point, (0.5, 0.5));
        // Center gradients are (+-1/2, +-1/2) on the unit square.
        let expected = [[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]];
        for a in 0..4 {
            assert!((geo.gradients[a][0] - expected[a][0]).abs() < 1e-15);
            assert!((geo.gradients[a][1] - expected[a][1]).abs() < 1e-15);
        }
        for a in 0..4 {
            assert_eq!(geo.second_derivatives[a][0], 0.0);
            assert_eq!(geo.second_derivatives[a][1], 0.0);
        }
    }

    #[test]
    fn geometry_jacobian_of_coarse_element() {
        let mesh = build_mesh(3, 1, (0.0, 2.0 * PI), (-1.0, 1.0)).unwrap();
        let geo = element_geometry(&mesh, 1, 0.3, -0.4).unwrap();
        // (dx/2)(dy/2) = (pi/3) * 1
        assert!((geo.det_jacobian - PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn geometry_rejects_bad_element_id() {
        let mesh = build_mesh(2, 2, (0.0, 1.0), (0.0, 1.0)).unwrap();
        assert!(element_geometry(&mesh, 4, 0.0, 0.0).is_err());
    }

    #[test]
    fn quadrature_weights_sum_to_reference_area() {
        for rule in [QuadratureRule::gauss_2x2(), QuadratureRule::gauss_3x3()] {
            let total: f64 = rule.weights.iter().sum();
            assert!((total - 4.0).abs() < 1e-14);
            assert!(rule.weights.iter().all(|&w| w > 0.0));
        }
    }

    /// Integrate xi^a eta^b exactly on the reference square.
    fn monomial_integral(rule: &QuadratureRule, a: u32, b: u32) -> f64 {
        rule.iter()
            .map(|(xi, eta, w)| w * xi.powi(a as i32) * eta.powi(b as i32))
            .sum()
    }

    fn exact_monomial(a: u32, b: u32) -> f64 {
        let axis = |p: u32| {
            if p % 2 == 1 {
                0.0
            } else {
                2.0 / (p as f64 + 1.0)
            }
        };
        axis(a) * axis(b)
    }

    #[test]
    fn gauss_2x2_exact_to_degree_three() {
        let rule = QuadratureRule::gauss_2x2();
        for a in 0..=3 {
            for b in 0..=3 {
                let got = monomial_integral(&rule, a, b);
                assert!(
                    (got - exact_monomial(a, b)).abs() < 1e-12,
                    "xi^{a} eta^{b}: {got}"
                );
            }
        }
    }

    #[test]
    fn gauss_3x3_exact_to_degree_five() {
        let rule = QuadratureRule::gauss_3x3();
        for a in 0..=5 {
            for b in 0..=5 {
                let got = monomial_integral(&rule, a, b);
                assert!(
                    (got - exact_monomial(a, b)).abs() < 1e-12,
                    "xi^{a} eta^{b}: {got}"
                );
            }
        }
    }

    #[test]
    fn area_conservation_across_refinement_levels() {
        let mut mesh = build_mesh(3, 1, (0.0, 2.0 * PI), (-1.0, 1.0)).unwrap();
        let rule = QuadratureRule::gauss_2x2();
        for _ in 0..4 {
            let mut area = 0.0;
            for e in 0..mesh.num_elements() {
                for (xi, eta, w) in rule.iter() {
                    area += w * element_geometry(&mesh, e, xi, eta).unwrap().det_jacobian;
                }
            }
            assert!((area - mesh.domain_area()).abs() < 1e-10);
            mesh = refine(&mesh);
        }
    }
}
