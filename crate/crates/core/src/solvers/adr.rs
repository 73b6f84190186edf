use crate::discretization::{BondTable, Vec2};
use crate::error::{Error, Result};
use crate::linalg::{Constraints, Csr};
use crate::solid::SolidModel;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdrOptions {
    /// Converged once the out-of-balance force norm falls below this
    /// fraction of the applied load norm.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Multiplier on the Gershgorin bound for the fictitious mass.
    pub mass_safety: f64,
    /// Keep the residual norm of every iteration in the report.
    #[serde(skip)]
    pub record_history: bool,
}

impl Default for AdrOptions {
    fn default() -> Self {
        Self { tolerance: 1e-6, max_iterations: 20_000, mass_safety: 1.5, record_history: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdrReport {
    /// Force evaluations performed, the initial one included.
    pub iterations: usize,
    pub residual: f64,
    pub history: Vec<f64>,
}

/// Loads on the solid for one relaxation.
#[derive(Debug, Clone, Copy)]
pub struct MechanicalLoad<'a> {
    pub pressure: &'a [f64],
    /// Per-node Biot coefficient of the pore-pressure term.
    pub alpha: &'a [f64],
    /// Applied nodal forces (N), e.g. from tractions.
    pub external: &'a [Vec2],
    /// Prescribed displacement components, indexed `2 * node + axis`.
    pub fixed: &'a Constraints,
}

/// Diagonal fictitious mass from the Gershgorin row-sum bound of the
/// stiffness, for a unit pseudo time step.
pub fn fictitious_mass(k: &Csr, safety: f64) -> Vec<f64> {
    k.row_iter()
        .map(|row| {
            let s: f64 = row.values().iter().map(|v| v.abs()).sum();
            safety * 0.25 * s
        })
        .collect()
}

/// Quasi-static equilibrium by adaptive dynamic relaxation (central
/// differences with a fictitious mass and a damping coefficient re-estimated
/// every iteration from a Rayleigh quotient of the local diagonal
/// stiffness). `u` is the starting guess and receives the solution.
pub fn adr_solve(
    model: &mut SolidModel,
    bonds: &BondTable,
    load: MechanicalLoad<'_>,
    mass: &[f64],
    u: &mut [Vec2],
    opts: &AdrOptions,
) -> Result<AdrReport> {
    let n = bonds.node_count();
    if mass.len() != 2 * n || u.len() != n || load.external.len() != n {
        return Err(Error::Dimension("adr_solve inputs do not match node count".into()));
    }
    let dt = 1.0;
    let free: Vec<bool> = (0..2 * n).map(|d| !load.fixed.contains(d)).collect();
    for (d, value) in load.fixed.iter() {
        u[d / 2][d % 2] = value;
    }

    let mut force = vec![Vec2::zeros(); n];
    let residual = |model: &mut SolidModel, u: &[Vec2], force: &mut [Vec2]| -> Result<Vec<f64>> {
        model.internal_force_into(bonds, u, Some((load.pressure, load.alpha)), force)?;
        let mut r = vec![0.0; 2 * n];
        for i in 0..n {
            for d in 0..2 {
                if free[2 * i + d] {
                    r[2 * i + d] = force[i][d] * bonds.volumes[i] + load.external[i][d];
                }
            }
        }
        Ok(r)
    };
    let masked_norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();

    // Reference: the applied load, pore pressure included.
    let p_force = model.pore_pressure_force(bonds, u, load.pressure, load.alpha)?;
    let mut load_vec = vec![0.0; 2 * n];
    for i in 0..n {
        for d in 0..2 {
            if free[2 * i + d] {
                load_vec[2 * i + d] = p_force[i][d] * bonds.volumes[i] + load.external[i][d];
            }
        }
    }
    let mut r = residual(model, u, &mut force)?;
    let r0 = masked_norm(&r);
    let reference = {
        let l = masked_norm(&load_vec);
        if l > 0.0 { l } else { r0 }
    };
    let mut history = Vec::new();
    if reference == 0.0 || r0 <= opts.tolerance * reference {
        let res = if reference == 0.0 { 0.0 } else { r0 / reference };
        return Ok(AdrReport { iterations: 1, residual: res, history: if opts.record_history { vec![res] } else { history } });
    }
    if opts.record_history {
        history.push(r0 / reference);
    }

    let start: Vec<f64> = u.iter().flat_map(|v| [v.x, v.y]).collect();
    let mut v = vec![0.0; 2 * n];
    for d in 0..2 * n {
        if free[d] {
            v[d] = dt * r[d] / (2.0 * mass[d]);
            u[d / 2][d % 2] += dt * v[d];
        }
    }
    let mut r_prev = r;
    for it in 2..=opts.max_iterations {
        r = residual(model, u, &mut force)?;
        let res = masked_norm(&r) / reference;
        if opts.record_history {
            history.push(res);
        }
        if !res.is_finite() || res > 1e12 {
            return Err(Error::AdrDiverged { iteration: it });
        }
        if res <= opts.tolerance {
            return Ok(AdrReport { iterations: it, residual: res, history });
        }
        let (mut num, mut den) = (0.0, 0.0);
        for d in 0..2 * n {
            if !free[d] {
                continue;
            }
            let du = u[d / 2][d % 2] - start[d];
            den += du * du;
            if v[d] != 0.0 {
                let k_local = -(r[d] - r_prev[d]) / (mass[d] * dt * v[d]);
                num += du * k_local * du;
            }
        }
        let c = if num > 0.0 && den > 0.0 { (2.0 * (num / den).sqrt()).min(1.9) } else { 0.0 };
        for d in 0..2 * n {
            if free[d] {
                v[d] = ((2.0 - c * dt) * v[d] + 2.0 * dt * r[d] / mass[d]) / (2.0 + c * dt);
                u[d / 2][d % 2] += dt * v[d];
            }
        }
        r_prev = r;
    }
    let res = masked_norm(&r_prev) / reference;
    Err(Error::AdrNotConverged { iterations: opts.max_iterations, residual: res })
}
