//! Links damage in the solid to flow properties: domain indicators, property
//! blending, crack apertures from broken bonds, and the peridynamic
//! pore-pressure operator.

use serde::{Deserialize, Serialize};

use crate::discretization::{BondTable, FluidMesh, Vec2};
use crate::error::{Error, Result};
use crate::flow::{ElementProps, FlowMaterial};
use crate::linalg::{csr_from_triplets, Csr};
use crate::solid::{bond_deformation, Kinematics, PlaneMode};

/// Damage thresholds separating reservoir, transition and fracture nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainThresholds {
    pub c1: f64,
    pub c2: f64,
}

impl Default for DomainThresholds {
    fn default() -> Self {
        Self { c1: 0.2, c2: 0.35 }
    }
}

impl DomainThresholds {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.c1 && self.c1 < self.c2 && self.c2 <= 1.0) {
            return Err(Error::Config(format!("need 0 <= c1 < c2 <= 1, got c1={} c2={}", self.c1, self.c2)));
        }
        Ok(())
    }
}

/// Reservoir and fracture indicators `(chi_r, chi_f)`; they sum to one.
pub fn classify(damage: f64, t: &DomainThresholds) -> (f64, f64) {
    let chi_r = ((t.c2 - damage) / (t.c2 - t.c1)).clamp(0.0, 1.0);
    (chi_r, 1.0 - chi_r)
}

/// Cubic-law permeability of a parallel-plate fracture.
pub fn fracture_permeability(aperture: f64) -> f64 {
    aperture * aperture / 12.0
}

/// Flow properties at one node after blending reservoir and fracture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodalProps {
    pub chi_f: f64,
    pub permeability: f64,
    pub storage: f64,
    pub porosity: f64,
    /// Biot coefficient seen by the solid: fracture fluid carries `alpha = 1`.
    pub solid_alpha: f64,
    /// Biot coefficient of the volumetric term in the mass balance. The
    /// fracture contributes nothing, so the term vanishes in the fracture.
    pub flow_alpha: f64,
    pub density: f64,
}

/// Blends reservoir and fracture properties node by node. The fracture
/// domain has unit Biot coefficient and porosity, storage `1/K_w` and
/// cubic-law permeability from the nodal aperture.
pub fn nodal_properties(
    damage: &[f64],
    aperture: &[f64],
    reservoir: &FlowMaterial,
    solid_density: f64,
    thresholds: &DomainThresholds,
) -> Result<Vec<NodalProps>> {
    if damage.len() != aperture.len() {
        return Err(Error::Dimension(format!("{} damage values, {} apertures", damage.len(), aperture.len())));
    }
    let s_r = reservoir.storage();
    let s_f = 1.0 / reservoir.fluid_bulk;
    let rho_r = (1.0 - reservoir.porosity) * solid_density + reservoir.porosity * reservoir.fluid_density;
    Ok(damage
        .iter()
        .zip(aperture)
        .map(|(&phi, &a)| {
            let (chi_r, chi_f) = classify(phi, thresholds);
            NodalProps {
                chi_f,
                permeability: chi_r * reservoir.permeability + chi_f * fracture_permeability(a),
                storage: chi_r * s_r + chi_f * s_f,
                porosity: chi_r * reservoir.porosity + chi_f,
                solid_alpha: chi_r * reservoir.biot_alpha + chi_f,
                flow_alpha: chi_r * reservoir.biot_alpha,
                density: chi_r * rho_r + chi_f * reservoir.fluid_density,
            }
        })
        .collect())
}

/// Element properties as the mean of the four corner values.
pub fn element_properties(mesh: &FluidMesh, nodal: &[NodalProps], viscosity: f64, fluid_density: f64) -> Vec<ElementProps> {
    mesh.elements
        .iter()
        .map(|conn| {
            let mean = |f: fn(&NodalProps) -> f64| conn.iter().map(|&a| f(&nodal[a])).sum::<f64>() / 4.0;
            ElementProps {
                storage: mean(|p| p.storage),
                mobility: mean(|p| p.permeability) / viscosity,
                coupling_alpha: mean(|p| p.flow_alpha),
                fluid_density,
            }
        })
        .collect()
}

/// Nodal crack aperture. For each bond within `radius` of node `i` whose
/// stretch has reached `critical` and whose far end moved away along the
/// original bond direction, the opening `|y| cos(beta) - |xi|` is counted;
/// the aperture is the mean over counted bonds, zero if there are none.
/// `|y| cos(beta)` is the projection of the deformed bond on the original
/// one, so the opening reduces to `eta . xi / |xi|`.
pub fn apertures(
    bonds: &BondTable,
    u: &[Vec2],
    critical: f64,
    radius: f64,
    kinematics: Kinematics,
) -> Result<Vec<f64>> {
    if u.len() != bonds.node_count() {
        return Err(Error::Dimension(format!("{} displacements for {} nodes", u.len(), bonds.node_count())));
    }
    let reach = radius * (1.0 + crate::discretization::FAMILY_RADIUS_TOL);
    let mut out = vec![0.0; bonds.node_count()];
    for (i, slot) in out.iter_mut().enumerate() {
        let (mut sum, mut count) = (0.0, 0usize);
        for b in &bonds.bonds[bonds.range(i)] {
            if b.length > reach {
                continue;
            }
            let Some((e, _)) = bond_deformation(b, u[i], u[b.j], kinematics, bonds.horizon) else {
                return Err(Error::DegenerateBond { i, j: b.j, length: 0.0 });
            };
            let opening = (u[b.j] - u[i]).dot(&b.xi) / b.length;
            if e / b.length >= critical && opening >= 0.0 {
                sum += opening;
                count += 1;
            }
        }
        *slot = if count > 0 { sum / count as f64 } else { 0.0 };
    }
    Ok(out)
}

/// Peridynamic pore-pressure operator, `2n x n`. Multiplying a pressure
/// vector gives the pore-pressure force on every node (density times
/// volume), so `K u - Q p = f` is the discrete equilibrium. Like the force
/// kernel it spans broken bonds too.
pub fn assemble_qpd(
    bonds: &BondTable,
    u: &[Vec2],
    alpha: &[f64],
    mode: PlaneMode,
    kinematics: Kinematics,
) -> Result<Csr> {
    let n = bonds.node_count();
    if u.len() != n || alpha.len() != n {
        return Err(Error::Dimension("assemble_qpd inputs do not match node count".into()));
    }
    let c = mode.coupling_factor();
    let mut trip = Vec::with_capacity(8 * bonds.bonds.len());
    for i in 0..n {
        for b in &bonds.bonds[bonds.range(i)] {
            let j = b.j;
            if j < i {
                continue;
            }
            let (_, m) = bond_deformation(b, u[i], u[j], kinematics, bonds.horizon)
                .ok_or(Error::DegenerateBond { i, j, length: 0.0 })?;
            let base = c * b.length * bonds.volumes[i] * bonds.volumes[j];
            let ci = base * alpha[i] / bonds.unit_weighted_volume[i];
            let cj = base * alpha[j] / bonds.unit_weighted_volume[j];
            for d in 0..2 {
                trip.push((2 * i + d, i, -ci * m[d]));
                trip.push((2 * i + d, j, -cj * m[d]));
                trip.push((2 * j + d, i, ci * m[d]));
                trip.push((2 * j + d, j, cj * m[d]));
            }
        }
    }
    Ok(csr_from_triplets(2 * n, n, &trip))
}
