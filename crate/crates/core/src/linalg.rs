//! Sparse storage and direct banded solvers.
//!
//! Node-major numbering on a structured grid keeps every operator in this
//! crate banded, with half-bandwidth proportional to the shorter grid side
//! times the stencil reach. A dense band factorization is then both simple
//! and deterministic. Symmetric positive definite systems use Cholesky; the
//! coupled consolidation system uses LU without pivoting, which is safe
//! because its symmetric part is positive definite.

use std::collections::BTreeMap;

use nalgebra_sparse::{CooMatrix, CsrMatrix};

use crate::error::{Error, Result};

/// Backward error every solve must reach: `|b - A x| <= tol (|A| |x| + |b|)`
/// with the row-sum norm for `A`. A residual relative to `|b|` alone is out of
/// reach when the right-hand side is the small difference of large terms, as
/// in a Crank-Nicolson step with a long time step.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

/// Largest absolute row sum.
pub fn norm_inf(a: &Csr) -> f64 {
    a.row_iter().map(|r| r.values().iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Pivots below this fraction of the original diagonal are treated as zero.
const PIVOT_TOL: f64 = 1e-14;

const MAX_REFINEMENT: usize = 4;

pub type Csr = CsrMatrix<f64>;

/// Builds a CSR matrix from triplets. Duplicate entries are summed in
/// insertion order, so the result is reproducible bit for bit.
pub fn csr_from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Csr {
    let mut coo = CooMatrix::new(nrows, ncols);
    for &(r, c, v) in triplets {
        coo.push(r, c, v);
    }
    CsrMatrix::from(&coo)
}

pub fn matvec(a: &Csr, x: &[f64]) -> Vec<f64> {
    assert_eq!(a.ncols(), x.len(), "matvec dimension mismatch");
    let mut y = vec![0.0; a.nrows()];
    for (i, row) in a.row_iter().enumerate() {
        let mut s = 0.0;
        for (&j, &v) in row.col_indices().iter().zip(row.values()) {
            s += v * x[j];
        }
        y[i] = s;
    }
    y
}

/// `a^T x` without forming the transpose.
pub fn matvec_transpose(a: &Csr, x: &[f64]) -> Vec<f64> {
    assert_eq!(a.nrows(), x.len(), "transpose matvec dimension mismatch");
    let mut y = vec![0.0; a.ncols()];
    for (i, row) in a.row_iter().enumerate() {
        let xi = x[i];
        for (&j, &v) in row.col_indices().iter().zip(row.values()) {
            y[j] += v * xi;
        }
    }
    y
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn entry(a: &Csr, i: usize, j: usize) -> f64 {
    a.get_entry(i, j).map(|e| e.into_value()).unwrap_or(0.0)
}

/// Largest `|a_ij - a_ji|` relative to the largest `|a_ij|`.
pub fn asymmetry(a: &Csr) -> f64 {
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (i, row) in a.row_iter().enumerate() {
        for (&j, &v) in row.col_indices().iter().zip(row.values()) {
            scale = scale.max(v.abs());
            worst = worst.max((v - entry(a, j, i)).abs());
        }
    }
    if scale == 0.0 { 0.0 } else { worst / scale }
}

fn bandwidths(a: &Csr) -> (usize, usize) {
    let (mut lower, mut upper) = (0, 0);
    for (i, row) in a.row_iter().enumerate() {
        for &j in row.col_indices() {
            if j < i {
                lower = lower.max(i - j);
            } else {
                upper = upper.max(j - i);
            }
        }
    }
    (lower, upper)
}

/// Banded Cholesky factor `A = L L^T`; row `i` stores columns `i - bw ..= i`.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(a: &Csr) -> Result<Self> {
        let n = square(a)?;
        let (lower, upper) = bandwidths(a);
        let bw = lower.max(upper);
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        for (i, row) in a.row_iter().enumerate() {
            for (&j, &v) in row.col_indices().iter().zip(row.values()) {
                if j <= i {
                    l[i * w + (j + bw - i)] = v;
                }
            }
        }
        for i in 0..n {
            let i0 = i.saturating_sub(bw);
            for j in i0..=i {
                let k0 = i0.max(j.saturating_sub(bw));
                let mut s = l[i * w + (j + bw - i)];
                let ri = i * w + bw - i;
                let rj = j * w + bw - j;
                for k in k0..j {
                    s -= l[ri + k] * l[rj + k];
                }
                if j == i {
                    let diag = entry(a, i, i).abs();
                    if !(s > PIVOT_TOL * diag) || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite { row: i, pivot: s });
                    }
                    l[i * w + bw] = s.sqrt();
                } else {
                    l[i * w + (j + bw - i)] = s / l[j * w + bw];
                }
            }
        }
        Ok(Self { n, bw, l })
    }

    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.l[i * w + (k + bw - i)] * y[k];
            }
            y[i] = s / self.l[i * w + bw];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= self.l[k * w + (i + bw - k)] * y[k];
            }
            y[i] = s / self.l[i * w + bw];
        }
        y
    }
}

/// Banded LU without pivoting; row `i` stores columns `i - kl ..= i + ku`.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    lu: Vec<f64>,
}

impl BandedLu {
    pub fn factor(a: &Csr) -> Result<Self> {
        let n = square(a)?;
        let (kl, ku) = bandwidths(a);
        let w = kl + ku + 1;
        let mut lu = vec![0.0; n * w];
        let mut diag = vec![0.0; n];
        for (i, row) in a.row_iter().enumerate() {
            for (&j, &v) in row.col_indices().iter().zip(row.values()) {
                lu[i * w + (j + kl - i)] = v;
                if i == j {
                    diag[i] = v.abs();
                }
            }
        }
        for k in 0..n {
            let pivot = lu[k * w + kl];
            if !(pivot.abs() > PIVOT_TOL * diag[k]) || !pivot.is_finite() {
                return Err(Error::ZeroPivot { row: k });
            }
            let jmax = (k + ku).min(n - 1);
            let rk = k * w + kl - k;
            for i in k + 1..=(k + kl).min(n - 1) {
                let ri = i * w + kl - i;
                let lik = lu[ri + k] / pivot;
                if lik == 0.0 {
                    continue;
                }
                lu[ri + k] = lik;
                for j in k + 1..=jmax {
                    lu[ri + j] -= lik * lu[rk + j];
                }
            }
        }
        Ok(Self { n, kl, ku, lu })
    }

    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let w = kl + ku + 1;
        let mut y = b.to_vec();
        for i in 0..n {
            let ri = i * w + kl - i;
            let mut s = y[i];
            for k in i.saturating_sub(kl)..i {
                s -= self.lu[ri + k] * y[k];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let ri = i * w + kl - i;
            let mut s = y[i];
            for k in i + 1..(i + ku + 1).min(n) {
                s -= self.lu[ri + k] * y[k];
            }
            y[i] = s / self.lu[ri + i];
        }
        y
    }
}

#[derive(Debug, Clone)]
enum Factor {
    Cholesky(BandedCholesky),
    Lu(BandedLu),
}

/// A factorized matrix that checks every solution against the original
/// operator and applies iterative refinement until the residual meets
/// [`SOLVE_TOLERANCE`].
///
/// The factorization is of `D A D` with `D = diag(|a_ii|)^(-1/2)`. Flow
/// systems mix fracture and matrix conductances many orders of magnitude
/// apart, and the symmetric scaling keeps them factorable to full accuracy.
#[derive(Debug, Clone)]
pub struct Factorized {
    a: Csr,
    a_norm: f64,
    scale: Vec<f64>,
    factor: Factor,
}

fn diagonal_scaling(a: &Csr) -> Result<(Vec<f64>, Csr)> {
    let mut scale = vec![1.0; a.nrows()];
    for (i, s) in scale.iter_mut().enumerate() {
        let d = entry(a, i, i).abs();
        if d == 0.0 || !d.is_finite() {
            return Err(Error::ZeroPivot { row: i });
        }
        *s = 1.0 / d.sqrt();
    }
    let mut scaled = a.clone();
    let (offsets, cols, vals) = scaled.csr_data_mut();
    for r in 0..offsets.len() - 1 {
        for k in offsets[r]..offsets[r + 1] {
            vals[k] *= scale[r] * scale[cols[k]];
        }
    }
    Ok((scale, scaled))
}

impl Factorized {
    pub fn spd(a: Csr) -> Result<Self> {
        let (scale, scaled) = diagonal_scaling(&a)?;
        let factor = Factor::Cholesky(BandedCholesky::factor(&scaled)?);
        Ok(Self { a_norm: norm_inf(&a), a, scale, factor })
    }

    pub fn general(a: Csr) -> Result<Self> {
        let (scale, scaled) = diagonal_scaling(&a)?;
        let factor = Factor::Lu(BandedLu::factor(&scaled)?);
        Ok(Self { a_norm: norm_inf(&a), a, scale, factor })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn matrix(&self) -> &Csr {
        &self.a
    }

    fn raw_solve(&self, b: &[f64]) -> Vec<f64> {
        let sb: Vec<f64> = b.iter().zip(&self.scale).map(|(v, s)| v * s).collect();
        let mut y = match &self.factor {
            Factor::Cholesky(f) => f.solve(&sb),
            Factor::Lu(f) => f.solve(&sb),
        };
        y.iter_mut().zip(&self.scale).for_each(|(v, s)| *v *= s);
        y
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.dim() {
            return Err(Error::Dimension(format!("rhs has {} entries, matrix has {} rows", b.len(), self.dim())));
        }
        let bnorm = norm(b);
        if bnorm == 0.0 {
            return Ok(vec![0.0; b.len()]);
        }
        let mut x = self.raw_solve(b);
        let mut rel = f64::INFINITY;
        for _ in 0..=MAX_REFINEMENT {
            let ax = matvec(&self.a, &x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            rel = norm(&r) / (self.a_norm * norm(&x) + bnorm);
            if rel <= SOLVE_TOLERANCE {
                return Ok(x);
            }
            let dx = self.raw_solve(&r);
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
        }
        Err(Error::Residual { residual: rel, tolerance: SOLVE_TOLERANCE })
    }
}

/// Solves a symmetric positive definite system.
pub fn solve_spd(a: &Csr, b: &[f64]) -> Result<Vec<f64>> {
    Factorized::spd(a.clone())?.solve(b)
}

/// Prescribed values on a subset of unknowns, eliminated symmetrically:
/// known columns move to the right-hand side and the matching rows and
/// columns are dropped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Constraints {
    values: BTreeMap<usize, f64>,
}

impl Constraints {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a prescribed value. Re-prescribing the same value is allowed; a
    /// different value for an already constrained unknown is an error.
    pub fn insert(&mut self, dof: usize, value: f64) -> Result<()> {
        if let Some(&old) = self.values.get(&dof) {
            if old != value {
                return Err(Error::Config(format!("conflicting prescribed values {old} and {value} on unknown {dof}")));
            }
        }
        self.values.insert(dof, value);
        Ok(())
    }

    pub fn get(&self, dof: usize) -> Option<f64> {
        self.values.get(&dof).copied()
    }

    pub fn contains(&self, dof: usize) -> bool {
        self.values.contains_key(&dof)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().map(|(&k, &v)| (k, v))
    }

    /// Maps every unknown to its position in the reduced system, if free.
    pub fn free_map(&self, n: usize) -> (Vec<Option<usize>>, Vec<usize>) {
        let mut map = vec![None; n];
        let mut free = Vec::with_capacity(n - self.len().min(n));
        for (i, slot) in map.iter_mut().enumerate() {
            if !self.contains(i) {
                *slot = Some(free.len());
                free.push(i);
            }
        }
        (map, free)
    }

    /// Reduced matrix over the free unknowns.
    pub fn reduce_matrix(&self, a: &Csr) -> Csr {
        let (map, free) = self.free_map(a.nrows());
        let mut trip = Vec::with_capacity(a.nnz());
        for (i, row) in a.row_iter().enumerate() {
            let Some(ri) = map[i] else { continue };
            for (&j, &v) in row.col_indices().iter().zip(row.values()) {
                if let Some(cj) = map[j] {
                    trip.push((ri, cj, v));
                }
            }
        }
        csr_from_triplets(free.len(), free.len(), &trip)
    }

    /// Reduced right-hand side `b_f - A_fc x_c`.
    pub fn reduce_rhs(&self, a: &Csr, b: &[f64]) -> Vec<f64> {
        let (map, free) = self.free_map(a.nrows());
        let mut out: Vec<f64> = free.iter().map(|&i| b[i]).collect();
        if self.is_empty() {
            return out;
        }
        for (i, row) in a.row_iter().enumerate() {
            let Some(ri) = map[i] else { continue };
            for (&j, &v) in row.col_indices().iter().zip(row.values()) {
                if let Some(x) = self.get(j) {
                    out[ri] -= v * x;
                }
            }
        }
        out
    }

    /// Scatters a reduced solution back to full length.
    pub fn expand(&self, n: usize, reduced: &[f64]) -> Vec<f64> {
        let (map, _) = self.free_map(n);
        (0..n)
            .map(|i| match map[i] {
                Some(r) => reduced[r],
                None => self.values[&i],
            })
            .collect()
    }
}

fn square(a: &Csr) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!("matrix is {}x{}, expected square", a.nrows(), a.ncols())));
    }
    Ok(a.nrows())
}
