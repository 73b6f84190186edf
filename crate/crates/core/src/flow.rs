//! Bilinear finite elements for Biot flow: storage, conductance and the
//! volumetric coupling matrix, integrated with 2x2 Gauss quadrature.
//!
//! Corners are ordered counter-clockwise from the lower left, so corner `a`
//! sits at reference coordinates `(XI[a], ETA[a])`.

use nalgebra::{Matrix2, Matrix4, SMatrix, Vector4};
use serde::{Deserialize, Serialize};

use crate::discretization::{FluidMesh, Vec2};
use crate::error::{Error, Result};
use crate::linalg::{csr_from_triplets, Constraints, Csr};

const XI: [f64; 4] = [-1.0, 1.0, 1.0, -1.0];
const ETA: [f64; 4] = [-1.0, -1.0, 1.0, 1.0];

/// 2x2 Gauss points; all weights are one.
pub fn gauss_points() -> [(f64, f64); 4] {
    let g = 1.0 / 3f64.sqrt();
    [(-g, -g), (g, -g), (g, g), (-g, g)]
}

pub fn shape_functions(xi: f64, eta: f64) -> [f64; 4] {
    std::array::from_fn(|a| 0.25 * (1.0 + XI[a] * xi) * (1.0 + ETA[a] * eta))
}

/// Derivatives with respect to `(xi, eta)`.
pub fn shape_gradients_ref(xi: f64, eta: f64) -> [[f64; 2]; 4] {
    std::array::from_fn(|a| [0.25 * XI[a] * (1.0 + ETA[a] * eta), 0.25 * ETA[a] * (1.0 + XI[a] * xi)])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowMaterial {
    pub biot_alpha: f64,
    pub porosity: f64,
    pub permeability: f64,
    pub viscosity: f64,
    pub fluid_bulk: f64,
    /// Grain bulk modulus; omitted means incompressible grains.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solid_bulk: Option<f64>,
    /// Storage coefficient given directly instead of derived.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub storage: Option<f64>,
    #[serde(default = "default_fluid_density")]
    pub fluid_density: f64,
}

fn default_fluid_density() -> f64 {
    1000.0
}

impl FlowMaterial {
    /// `(alpha - n)(1 - alpha)/K_s + n/K_w` unless overridden.
    pub fn storage(&self) -> f64 {
        if let Some(s) = self.storage {
            return s;
        }
        let grain = match self.solid_bulk {
            Some(ks) => (self.biot_alpha - self.porosity) * (1.0 - self.biot_alpha) / ks,
            None => 0.0,
        };
        grain + self.porosity / self.fluid_bulk
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.biot_alpha >= 0.0
            && self.biot_alpha <= 1.0
            && (0.0..=1.0).contains(&self.porosity)
            && self.permeability >= 0.0
            && self.viscosity > 0.0
            && self.fluid_bulk > 0.0
            && self.solid_bulk.is_none_or(|k| k > 0.0)
            && self.storage.is_none_or(|s| s >= 0.0);
        if !ok {
            return Err(Error::Config(format!("invalid flow material {self:?}")));
        }
        Ok(())
    }
}

/// Properties used to integrate one element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementProps {
    pub storage: f64,
    /// Permeability over viscosity.
    pub mobility: f64,
    /// Biot coefficient in the volumetric coupling term.
    pub coupling_alpha: f64,
    pub fluid_density: f64,
}

impl ElementProps {
    pub fn uniform(m: &FlowMaterial) -> Self {
        Self {
            storage: m.storage(),
            mobility: m.permeability / m.viscosity,
            coupling_alpha: m.biot_alpha,
            fluid_density: m.fluid_density,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ElementMatrices {
    pub storage: Matrix4<f64>,
    pub conductance: Matrix4<f64>,
    /// Rows are `(corner, axis)` displacement unknowns, columns are corner
    /// pressures.
    pub coupling: SMatrix<f64, 8, 4>,
    pub gravity: Vector4<f64>,
}

pub fn element_matrices(
    corners: &[Vec2; 4],
    props: &ElementProps,
    thickness: f64,
    gravity: Vec2,
) -> Result<ElementMatrices> {
    let mut storage = Matrix4::zeros();
    let mut conductance = Matrix4::zeros();
    let mut coupling = SMatrix::<f64, 8, 4>::zeros();
    let mut grav = Vector4::zeros();
    for (xi, eta) in gauss_points() {
        let n = Vector4::from(shape_functions(xi, eta));
        let dref = shape_gradients_ref(xi, eta);
        let mut jac = Matrix2::zeros();
        for a in 0..4 {
            for r in 0..2 {
                jac[(0, r)] += dref[a][0] * corners[a][r];
                jac[(1, r)] += dref[a][1] * corners[a][r];
            }
        }
        let det = jac.determinant();
        if !(det > 0.0) {
            return Err(Error::Config(format!("element has non-positive Jacobian {det:e}")));
        }
        let jinv = jac.try_inverse().expect("non-zero determinant");
        // Physical gradients: column `a` holds (dN_a/dx, dN_a/dy).
        let mut grad = SMatrix::<f64, 2, 4>::zeros();
        for a in 0..4 {
            let g = jinv * nalgebra::Vector2::new(dref[a][0], dref[a][1]);
            grad[(0, a)] = g.x;
            grad[(1, a)] = g.y;
        }
        let dv = det * thickness;
        storage += props.storage * dv * (n * n.transpose());
        conductance += props.mobility * dv * (grad.transpose() * grad);
        for a in 0..4 {
            for b in 0..4 {
                coupling[(2 * a, b)] += props.coupling_alpha * grad[(0, a)] * n[b] * dv;
                coupling[(2 * a + 1, b)] += props.coupling_alpha * grad[(1, a)] * n[b] * dv;
            }
        }
        let flux = props.mobility * props.fluid_density * gravity;
        for a in 0..4 {
            grav[a] += (grad[(0, a)] * flux.x + grad[(1, a)] * flux.y) * dv;
        }
    }
    Ok(ElementMatrices { storage, conductance, coupling, gravity: grav })
}

/// Global flow operators.
#[derive(Debug, Clone)]
pub struct FlowMatrices {
    /// Storage, `n x n`.
    pub s: Csr,
    /// Conductance, `n x n`.
    pub h: Csr,
    /// Volumetric coupling, `2n x n`; `Q^T u` is the integrated
    /// `alpha div u` seen by each pressure node.
    pub q: Csr,
    /// Gravity-driven flux contribution to the right-hand side.
    pub gravity: Vec<f64>,
}

pub fn assemble(
    mesh: &FluidMesh,
    positions: &[Vec2],
    props: &[ElementProps],
    gravity: Vec2,
) -> Result<FlowMatrices> {
    if props.len() != mesh.element_count() {
        return Err(Error::Dimension(format!(
            "{} element property sets for {} elements",
            props.len(),
            mesh.element_count()
        )));
    }
    let n = mesh.node_count;
    let mut ts = Vec::with_capacity(16 * mesh.element_count());
    let mut th = Vec::with_capacity(16 * mesh.element_count());
    let mut tq = Vec::with_capacity(32 * mesh.element_count());
    let mut g = vec![0.0; n];
    for (conn, p) in mesh.elements.iter().zip(props) {
        let corners = conn.map(|a| positions[a]);
        let em = element_matrices(&corners, p, mesh.thickness, gravity)?;
        for a in 0..4 {
            for b in 0..4 {
                ts.push((conn[a], conn[b], em.storage[(a, b)]));
                th.push((conn[a], conn[b], em.conductance[(a, b)]));
                tq.push((2 * conn[a], conn[b], em.coupling[(2 * a, b)]));
                tq.push((2 * conn[a] + 1, conn[b], em.coupling[(2 * a + 1, b)]));
            }
            g[conn[a]] += em.gravity[a];
        }
    }
    Ok(FlowMatrices {
        s: csr_from_triplets(n, n, &ts),
        h: csr_from_triplets(n, n, &th),
        q: csr_from_triplets(2 * n, n, &tq),
        gravity: g,
    })
}

/// Prescribed pressures and point sources.
#[derive(Debug, Clone, Default)]
pub struct FlowBcs {
    pub dirichlet: Constraints,
    /// `(node, volumetric rate)` pairs; repeated nodes accumulate.
    pub sources: Vec<(usize, f64)>,
}

impl FlowBcs {
    /// Source vector for the right-hand side. Rates are per unit thickness
    /// and are scaled to the model thickness to match the assembled
    /// operators.
    pub fn source_vector(&self, n: usize, thickness: f64) -> Result<Vec<f64>> {
        let mut q = vec![0.0; n];
        for &(node, rate) in &self.sources {
            if node >= n {
                return Err(Error::Config(format!("source node {node} outside mesh of {n} nodes")));
            }
            q[node] += rate * thickness;
        }
        Ok(q)
    }
}
