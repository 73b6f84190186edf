use crate::discretization::{BondTable, NodeGrid, Vec2};
use crate::error::Result;
use crate::linalg::{csr_from_triplets, Csr};
use crate::solid::{Kinematics, SolidModel};

/// Flattened index of displacement component `d` at node `a`.
pub fn node_dofs(a: usize, d: usize) -> usize {
    2 * a + d
}

/// Small-displacement stiffness of the solid, `2n x 2n`, such that the
/// elastic force on every node (density times volume) is `-K u`.
///
/// Columns come from probing the linearized force kernel with unit
/// displacements. A unit displacement only reaches nodes within two
/// horizons, so probes spaced more than four horizons apart on the lattice
/// share one force evaluation without their columns overlapping.
pub fn assemble_kpd(grid: &NodeGrid, bonds: &BondTable, model: &SolidModel) -> Result<Csr> {
    let n = grid.node_count();
    let mut probe = SolidModel::new(model.material, model.mode, Kinematics::Linearized);
    let reach = (bonds.horizon * (1.0 + crate::discretization::FAMILY_RADIUS_TOL) / grid.spacing).floor() as usize;
    let span = 2 * reach;
    let stride = 2 * span + 1;
    let mut u = vec![Vec2::zeros(); n];
    let mut f = vec![Vec2::zeros(); n];
    let mut trip = Vec::new();
    let owner = |i: usize, c: usize, len: usize| -> Option<usize> {
        // Lattice coordinate of the probe in this colour closest to `i`.
        let k = if i >= c { c + stride * ((i - c + span) / stride) } else { c };
        (k <= len && k.abs_diff(i) <= span).then_some(k)
    };
    for d in 0..2 {
        for cy in 0..stride.min(grid.ny + 1) {
            for cx in 0..stride.min(grid.nx + 1) {
                u.iter_mut().for_each(|v| *v = Vec2::zeros());
                for iy in (cy..=grid.ny).step_by(stride) {
                    for ix in (cx..=grid.nx).step_by(stride) {
                        u[grid.id(ix, iy)][d] = 1.0;
                    }
                }
                probe.internal_force_into(bonds, &u, None, &mut f)?;
                for (i, fi) in f.iter().enumerate() {
                    if fi.x == 0.0 && fi.y == 0.0 {
                        continue;
                    }
                    let (ix, iy) = grid.ij(i);
                    let (Some(kx), Some(ky)) = (owner(ix, cx, grid.nx), owner(iy, cy, grid.ny)) else {
                        continue;
                    };
                    let col = node_dofs(grid.id(kx, ky), d);
                    let vol = bonds.volumes[i];
                    for e in 0..2 {
                        if fi[e] != 0.0 {
                            trip.push((node_dofs(i, e), col, -fi[e] * vol));
                        }
                    }
                }
            }
        }
    }
    Ok(csr_from_triplets(2 * n, 2 * n, &trip))
}
