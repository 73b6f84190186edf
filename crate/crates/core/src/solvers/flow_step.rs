use crate::error::{Error, Result};
use crate::flow::{FlowBcs, FlowMatrices};
use crate::linalg::{matvec, matvec_transpose, Constraints, Csr, Factorized};

/// One theta-scheme step of the flow equation with the displacement increment
/// from the previous mechanical solve:
///
/// `(S + theta dt H) p' = (S - (1 - theta) dt H) p + dt (q + g) - Q^T du`
///
/// Expansion (`Q^T du > 0`) draws pressure down; injection raises it.
/// The left-hand side is factorized once and reused while the operators
/// and step size stay fixed.
#[derive(Debug, Clone)]
pub struct FlowStepper {
    theta: f64,
    dt: f64,
    lhs: Factorized,
    lhs_full: Csr,
    explicit: Csr,
    q: Csr,
    forcing: Vec<f64>,
    constraints: Constraints,
}

impl FlowStepper {
    pub fn new(mats: &FlowMatrices, bcs: &FlowBcs, theta: f64, dt: f64, thickness: f64) -> Result<Self> {
        if !(0.5..=1.0).contains(&theta) {
            return Err(Error::Config(format!("theta must lie in [0.5, 1] for stability, got {theta}")));
        }
        if !(dt > 0.0) {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        let n = mats.s.nrows();
        let lhs_full = &mats.s + &(&mats.h * (theta * dt));
        let explicit = &mats.s - &(&mats.h * ((1.0 - theta) * dt));
        let lhs = Factorized::spd(bcs.dirichlet.reduce_matrix(&lhs_full))?;
        let q = bcs.source_vector(n, thickness)?;
        let forcing = q.iter().zip(&mats.gravity).map(|(qi, gi)| dt * (qi + gi)).collect();
        Ok(Self { theta, dt, lhs, lhs_full, explicit, q: mats.q.clone(), forcing, constraints: bcs.dirichlet.clone() })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `du` is the flattened displacement increment `(u_x, u_y)` per node,
    /// or empty when the solid is frozen.
    pub fn step(&self, p: &[f64], du: &[f64]) -> Result<Vec<f64>> {
        let n = self.explicit.nrows();
        if p.len() != n || (!du.is_empty() && du.len() != 2 * n) {
            return Err(Error::Dimension(format!("flow step got {} pressures and {} increments for {n} nodes", p.len(), du.len())));
        }
        let mut rhs = matvec(&self.explicit, p);
        for (r, f) in rhs.iter_mut().zip(&self.forcing) {
            *r += f;
        }
        if !du.is_empty() {
            let qt = matvec_transpose(&self.q, du);
            for (r, v) in rhs.iter_mut().zip(&qt) {
                *r -= v;
            }
        }
        let reduced = self.constraints.reduce_rhs(&self.lhs_full, &rhs);
        let x = self.lhs.solve(&reduced)?;
        Ok(self.constraints.expand(n, &x))
    }
}

/// Single flow step without keeping the factorization.
pub fn flow_step(
    mats: &FlowMatrices,
    bcs: &FlowBcs,
    p: &[f64],
    du: &[f64],
    theta: f64,
    dt: f64,
    thickness: f64,
) -> Result<Vec<f64>> {
    FlowStepper::new(mats, bcs, theta, dt, thickness)?.step(p, du)
}
