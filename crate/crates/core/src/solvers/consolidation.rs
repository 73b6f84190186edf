use crate::error::{Error, Result};
use crate::linalg::{csr_from_triplets, matvec, Constraints, Csr, Factorized};

/// Unknowns interleaved per node as `(u_x, u_y, p)`, which keeps the block
/// system banded.
fn udof(k: usize) -> usize {
    3 * (k / 2) + k % 2
}

fn pdof(a: usize) -> usize {
    3 * a + 2
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsolidationState {
    /// Flattened displacements, `2 * node + axis`.
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub t: f64,
}

/// Monolithic theta-scheme for the coupled solid and flow equations with a
/// linear solid:
///
/// ```text
/// [ theta K     -theta C       ] [u]'   [ (theta-1) K   (1-theta) C            ] [u]   [ f         ]
/// [ Q^T          S + theta dt H ] [p]  = [ Q^T           S - (1-theta) dt H     ] [p] + [ dt (q + g) ]
/// ```
///
/// `K` is the probed solid stiffness, `C` the peridynamic pore-pressure
/// operator and `Q`, `S`, `H` the flow operators.
#[derive(Debug)]
pub struct ConsolidationScheme {
    n: usize,
    dt: f64,
    lhs_full: Csr,
    lhs: Factorized,
    explicit: Csr,
    constraints: Constraints,
}

impl ConsolidationScheme {
    /// `fixed_u` holds prescribed displacement components (`2 * node + axis`)
    /// and `fixed_p` prescribed pressures.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        k: &Csr,
        c: &Csr,
        q: &Csr,
        s: &Csr,
        h: &Csr,
        theta: f64,
        dt: f64,
        fixed_u: &Constraints,
        fixed_p: &Constraints,
    ) -> Result<Self> {
        if !(0.5..=1.0).contains(&theta) {
            return Err(Error::Config(format!("theta must lie in [0.5, 1], got {theta}")));
        }
        if !(dt > 0.0) {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        let n = s.nrows();
        if k.nrows() != 2 * n || c.nrows() != 2 * n || q.nrows() != 2 * n || c.ncols() != n || q.ncols() != n {
            return Err(Error::Dimension("consolidation blocks do not match".into()));
        }
        let mut left = Vec::new();
        let mut right = Vec::new();
        for (i, row) in k.row_iter().enumerate() {
            for (&j, &v) in row.col_indices().iter().zip(row.values()) {
                left.push((udof(i), udof(j), theta * v));
                right.push((udof(i), udof(j), (theta - 1.0) * v));
            }
        }
        for (i, row) in c.row_iter().enumerate() {
            for (&a, &v) in row.col_indices().iter().zip(row.values()) {
                left.push((udof(i), pdof(a), -theta * v));
                right.push((udof(i), pdof(a), (1.0 - theta) * v));
            }
        }
        for (i, row) in q.row_iter().enumerate() {
            for (&a, &v) in row.col_indices().iter().zip(row.values()) {
                left.push((pdof(a), udof(i), v));
                right.push((pdof(a), udof(i), v));
            }
        }
        for (m, wl, wr) in [(s, 1.0, 1.0), (h, theta * dt, -(1.0 - theta) * dt)] {
            for (a, row) in m.row_iter().enumerate() {
                for (&b, &v) in row.col_indices().iter().zip(row.values()) {
                    left.push((pdof(a), pdof(b), wl * v));
                    right.push((pdof(a), pdof(b), wr * v));
                }
            }
        }
        let mut constraints = Constraints::new();
        for (d, v) in fixed_u.iter() {
            constraints.insert(udof(d), v)?;
        }
        for (a, v) in fixed_p.iter() {
            constraints.insert(pdof(a), v)?;
        }
        let lhs_full = csr_from_triplets(3 * n, 3 * n, &left);
        let lhs = Factorized::general(constraints.reduce_matrix(&lhs_full))?;
        Ok(Self { n, dt, lhs_full, lhs, explicit: csr_from_triplets(3 * n, 3 * n, &right), constraints })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances one step. `force` is the applied nodal force (`2n`) and
    /// `source` the nodal fluid source (`n`, already including gravity).
    pub fn step(&self, state: &ConsolidationState, force: &[f64], source: &[f64]) -> Result<ConsolidationState> {
        let n = self.n;
        if state.u.len() != 2 * n || state.p.len() != n || force.len() != 2 * n || source.len() != n {
            return Err(Error::Dimension("consolidation step inputs do not match".into()));
        }
        let mut x = vec![0.0; 3 * n];
        for (k, &v) in state.u.iter().enumerate() {
            x[udof(k)] = v;
        }
        for (a, &v) in state.p.iter().enumerate() {
            x[pdof(a)] = v;
        }
        let mut rhs = matvec(&self.explicit, &x);
        for (k, &f) in force.iter().enumerate() {
            rhs[udof(k)] += f;
        }
        for (a, &q) in source.iter().enumerate() {
            rhs[pdof(a)] += self.dt * q;
        }
        let reduced = self.constraints.reduce_rhs(&self.lhs_full, &rhs);
        let sol = self.constraints.expand(3 * n, &self.lhs.solve(&reduced)?);
        Ok(ConsolidationState {
            u: (0..2 * n).map(|k| sol[udof(k)]).collect(),
            p: (0..n).map(|a| sol[pdof(a)]).collect(),
            t: state.t + self.dt,
        })
    }
}
