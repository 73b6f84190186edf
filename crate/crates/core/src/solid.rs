//! Ordinary state-based peridynamic solid with pore-pressure coupling and
//! critical-stretch bond failure.
//!
//! Forces are returned as densities (N/m^3 times thickness-free volume); the
//! per-node force is the density times the nodal volume.

use serde::{Deserialize, Serialize};

use crate::discretization::{Bond, BondTable, Vec2};
use crate::error::{Error, Result};

/// Deformed bonds shorter than this fraction of the horizon are rejected.
pub const MIN_DEFORMED_LENGTH: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlaneMode {
    #[default]
    PlaneStrain,
    /// Full 3D state formulas. Only reachable from unit tests; the grid is
    /// always two-dimensional.
    ThreeD,
}

impl PlaneMode {
    /// Numerator of the dilatation prefactor `k / m`.
    pub fn dilatation_factor(self) -> f64 {
        match self {
            PlaneMode::PlaneStrain => 2.0,
            PlaneMode::ThreeD => 3.0,
        }
    }

    /// Prefactor of the pore-pressure bond force.
    pub fn coupling_factor(self) -> f64 {
        self.dilatation_factor()
    }
}

/// How bond extension and direction are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kinematics {
    /// Extension `|xi + eta| - |xi|` along the deformed direction.
    #[default]
    Geometric,
    /// Small-displacement form: extension `eta . xi/|xi|` along the reference
    /// direction. The force is then exactly linear in `(u, p)`.
    Linearized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolidMaterial {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub density: f64,
    pub fracture_energy: f64,
}

impl SolidMaterial {
    pub fn bulk_modulus(&self) -> f64 {
        self.youngs_modulus / (3.0 * (1.0 - 2.0 * self.poisson_ratio))
    }

    pub fn shear_modulus(&self) -> f64 {
        self.youngs_modulus / (2.0 * (1.0 + self.poisson_ratio))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.youngs_modulus > 0.0) {
            return Err(Error::Config(format!("youngs_modulus must be positive, got {}", self.youngs_modulus)));
        }
        if !(self.poisson_ratio > -1.0 && self.poisson_ratio < 0.5) {
            return Err(Error::Config(format!("poisson_ratio must lie in (-1, 0.5), got {}", self.poisson_ratio)));
        }
        if !(self.density >= 0.0) || !(self.fracture_energy > 0.0) {
            return Err(Error::Config("density must be non-negative and fracture_energy positive".into()));
        }
        Ok(())
    }
}

/// Bond stretch at which a bond breaks.
pub fn critical_stretch(material: &SolidMaterial, horizon: f64, mode: PlaneMode) -> Result<f64> {
    material.validate()?;
    if !(horizon > 0.0) {
        return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
    }
    let denom = match mode {
        PlaneMode::PlaneStrain => 12.0,
        PlaneMode::ThreeD => 6.0,
    };
    Ok((5.0 * material.fracture_energy / (denom * material.youngs_modulus * horizon)).sqrt())
}

/// Scalar force state for one bond.
pub fn force_scalar(
    mode: PlaneMode,
    material: &SolidMaterial,
    dilatation: f64,
    extension: f64,
    length: f64,
    weight: f64,
    weighted_volume: f64,
) -> f64 {
    let kappa = material.bulk_modulus();
    let mu = material.shear_modulus();
    let deviatoric = extension - dilatation * length / 3.0;
    match mode {
        PlaneMode::PlaneStrain => {
            2.0 * (kappa - mu / 3.0) * dilatation * weight * length / weighted_volume
                + 8.0 * mu * deviatoric * weight / weighted_volume
        }
        PlaneMode::ThreeD => {
            3.0 * kappa * dilatation * weight * length / weighted_volume
                + 15.0 * mu * deviatoric * weight / weighted_volume
        }
    }
}

/// Extension and unit direction of a single bond.
pub fn bond_deformation(bond: &Bond, u_i: Vec2, u_j: Vec2, kinematics: Kinematics, horizon: f64) -> Option<(f64, Vec2)> {
    let eta = u_j - u_i;
    match kinematics {
        Kinematics::Geometric => {
            let y = bond.xi + eta;
            let len = y.norm();
            if len < MIN_DEFORMED_LENGTH * horizon {
                return None;
            }
            Some((len - bond.length, y / len))
        }
        Kinematics::Linearized => {
            let n = bond.xi / bond.length;
            Some((eta.dot(&n), n))
        }
    }
}

/// Peridynamic constitutive model. Holds scratch buffers so repeated force
/// evaluations inside dynamic relaxation do not allocate.
#[derive(Debug, Clone)]
pub struct SolidModel {
    pub material: SolidMaterial,
    pub mode: PlaneMode,
    pub kinematics: Kinematics,
    extension: Vec<f64>,
    direction: Vec<Vec2>,
    dilatation: Vec<f64>,
}

impl SolidModel {
    pub fn new(material: SolidMaterial, mode: PlaneMode, kinematics: Kinematics) -> Self {
        Self { material, mode, kinematics, extension: Vec::new(), direction: Vec::new(), dilatation: Vec::new() }
    }

    /// Fills per-bond extension and direction. Each undirected bond is
    /// evaluated once and mirrored onto its partner entry.
    fn kinematics_pass(&mut self, bonds: &BondTable, u: &[Vec2]) -> Result<()> {
        let nb = bonds.bonds.len();
        self.extension.resize(nb, 0.0);
        self.direction.resize(nb, Vec2::zeros());
        for i in 0..bonds.node_count() {
            for k in bonds.range(i) {
                let b = &bonds.bonds[k];
                if b.j < i {
                    continue;
                }
                let (e, m) = bond_deformation(b, u[i], u[b.j], self.kinematics, bonds.horizon)
                    .ok_or_else(|| Error::DegenerateBond { i, j: b.j, length: (b.xi + u[b.j] - u[i]).norm() })?;
                self.extension[k] = e;
                self.direction[k] = m;
                self.extension[b.reverse] = e;
                self.direction[b.reverse] = -m;
            }
        }
        Ok(())
    }

    fn dilatation_pass(&mut self, bonds: &BondTable) {
        let n = bonds.node_count();
        self.dilatation.resize(n, 0.0);
        let factor = self.mode.dilatation_factor();
        for i in 0..n {
            let mut sum = 0.0;
            for k in bonds.range(i) {
                if bonds.intact[k] {
                    let b = &bonds.bonds[k];
                    sum += b.weight * b.length * self.extension[k] * bonds.volumes[b.j];
                }
            }
            self.dilatation[i] = factor * sum / bonds.weighted_volume[i];
        }
    }

    pub fn dilatation(&mut self, bonds: &BondTable, u: &[Vec2]) -> Result<Vec<f64>> {
        check_len(bonds, u.len(), "displacement")?;
        self.kinematics_pass(bonds, u)?;
        self.dilatation_pass(bonds);
        Ok(self.dilatation.clone())
    }

    /// Force density from the deformation of intact bonds plus the
    /// pore-pressure contribution. `alpha` is the per-node Biot coefficient
    /// used by the coupling term.
    pub fn internal_force(&mut self, bonds: &BondTable, u: &[Vec2], p: &[f64], alpha: &[f64]) -> Result<Vec<Vec2>> {
        let mut out = vec![Vec2::zeros(); bonds.node_count()];
        self.internal_force_into(bonds, u, Some((p, alpha)), &mut out)?;
        Ok(out)
    }

    /// Elastic part only.
    pub fn effective_force(&mut self, bonds: &BondTable, u: &[Vec2]) -> Result<Vec<Vec2>> {
        let mut out = vec![Vec2::zeros(); bonds.node_count()];
        self.internal_force_into(bonds, u, None, &mut out)?;
        Ok(out)
    }

    /// Pore-pressure part only.
    pub fn pore_pressure_force(&mut self, bonds: &BondTable, u: &[Vec2], p: &[f64], alpha: &[f64]) -> Result<Vec<Vec2>> {
        check_len(bonds, u.len(), "displacement")?;
        check_len(bonds, p.len(), "pressure")?;
        check_len(bonds, alpha.len(), "alpha")?;
        self.kinematics_pass(bonds, u)?;
        let mut out = vec![Vec2::zeros(); bonds.node_count()];
        self.add_pressure(bonds, p, alpha, &mut out);
        Ok(out)
    }

    #[allow(clippy::needless_range_loop)]
    pub fn internal_force_into(
        &mut self,
        bonds: &BondTable,
        u: &[Vec2],
        pressure: Option<(&[f64], &[f64])>,
        out: &mut [Vec2],
    ) -> Result<()> {
        check_len(bonds, u.len(), "displacement")?;
        check_len(bonds, out.len(), "output")?;
        if let Some((p, alpha)) = pressure {
            check_len(bonds, p.len(), "pressure")?;
            check_len(bonds, alpha.len(), "alpha")?;
        }
        self.kinematics_pass(bonds, u)?;
        self.dilatation_pass(bonds);
        for i in 0..bonds.node_count() {
            let theta_i = self.dilatation[i];
            let m_i = bonds.weighted_volume[i];
            let mut f = Vec2::zeros();
            for k in bonds.range(i) {
                if !bonds.intact[k] {
                    continue;
                }
                let b = &bonds.bonds[k];
                let e = self.extension[k];
                let t_ij = force_scalar(self.mode, &self.material, theta_i, e, b.length, b.weight, m_i);
                let t_ji = force_scalar(
                    self.mode,
                    &self.material,
                    self.dilatation[b.j],
                    e,
                    b.length,
                    b.weight,
                    bonds.weighted_volume[b.j],
                );
                f += (t_ij + t_ji) * bonds.volumes[b.j] * self.direction[k];
            }
            out[i] = f;
        }
        if let Some((p, alpha)) = pressure {
            self.add_pressure(bonds, p, alpha, out);
        }
        Ok(())
    }

    /// Pore pressure acts over every bond of the original family, broken or
    /// not: inside an open crack the fluid keeps transmitting pressure
    /// between the faces, which is what drives the crack open.
    fn add_pressure(&self, bonds: &BondTable, p: &[f64], alpha: &[f64], out: &mut [Vec2]) {
        let c = self.mode.coupling_factor();
        for i in 0..bonds.node_count() {
            let a_i = alpha[i] * p[i] / bonds.unit_weighted_volume[i];
            let mut f = Vec2::zeros();
            for k in bonds.range(i) {
                let b = &bonds.bonds[k];
                let a_j = alpha[b.j] * p[b.j] / bonds.unit_weighted_volume[b.j];
                f -= c * (a_i + a_j) * b.length * bonds.volumes[b.j] * self.direction[k];
            }
            out[i] += f;
        }
    }

    /// Bond stretch `e / |xi|` for every directed bond at displacement `u`.
    pub fn stretches(&mut self, bonds: &BondTable, u: &[Vec2]) -> Result<Vec<f64>> {
        check_len(bonds, u.len(), "displacement")?;
        self.kinematics_pass(bonds, u)?;
        Ok(bonds.bonds.iter().zip(&self.extension).map(|(b, e)| e / b.length).collect())
    }

    /// Breaks every intact bond whose stretch reached `critical`. Both
    /// directed entries are flipped together. Returns the number of bonds
    /// broken by this call.
    pub fn update_failure(&mut self, bonds: &mut BondTable, u: &[Vec2], critical: f64) -> Result<usize> {
        check_len(bonds, u.len(), "displacement")?;
        self.kinematics_pass(bonds, u)?;
        let mut doomed = Vec::new();
        for i in 0..bonds.node_count() {
            for k in bonds.range(i) {
                let b = &bonds.bonds[k];
                if b.j > i && bonds.intact[k] && self.extension[k] / b.length >= critical {
                    doomed.push(k);
                }
            }
        }
        for &k in &doomed {
            bonds.break_bond(k);
        }
        Ok(doomed.len())
    }
}

/// Damage per node: one minus the weighted fraction of surviving bonds.
pub fn damage(bonds: &BondTable) -> Vec<f64> {
    (0..bonds.node_count())
        .map(|i| {
            let mut alive = 0.0;
            for k in bonds.range(i) {
                if bonds.intact[k] {
                    let b = &bonds.bonds[k];
                    alive += b.weight * bonds.volumes[b.j];
                }
            }
            let total = bonds.influence_volume[i];
            if total > 0.0 { 1.0 - alive / total } else { 0.0 }
        })
        .collect()
}

fn check_len(bonds: &BondTable, len: usize, what: &str) -> Result<()> {
    if len != bonds.node_count() {
        return Err(Error::Dimension(format!("{what} has {len} entries, expected {}", bonds.node_count())));
    }
    Ok(())
}
