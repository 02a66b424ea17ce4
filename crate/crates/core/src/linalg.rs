//! Dense complex matrices and the handful of kernels the rest of the crate
//! is built on: a cyclic Jacobi eigensolver for Hermitian matrices, Kronecker
//! products, partial traces and Gram-Schmidt orthonormalization.
//!
//! Everything here targets small matrices (Hilbert dimensions up to a few
//! dozen). Matrices are stored row-major and are immutable values once built.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Numerical tolerances shared by the validators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Max-entry bound on `M - M^dagger`.
    pub hermiticity: f64,
    /// Relative off-diagonal Frobenius norm at which Jacobi sweeps stop.
    pub convergence: f64,
    /// Max-entry bound on `V^dagger V - I`.
    pub orthonormality: f64,
    /// Eigenvalues closer than this are treated as one degenerate group.
    pub degeneracy: f64,
    /// Eigenvalues in `[-eigclip, 0)` are clipped to zero.
    pub eigclip: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermiticity: 1e-10,
            convergence: 1e-13,
            orthonormality: 1e-10,
            degeneracy: 1e-10,
            eigclip: 1e-12,
        }
    }
}

/// Row-major dense complex matrix with finite entries.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

/// Wire form: `{"rows":n,"cols":m,"data":[[re,im],...]}`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<[f64; 2]>,
}

impl From<ComplexMatrix> for MatrixRepr {
    fn from(m: ComplexMatrix) -> Self {
        Self {
            rows: m.rows,
            cols: m.cols,
            data: m.data.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl TryFrom<MatrixRepr> for ComplexMatrix {
    type Error = Error;

    fn try_from(r: MatrixRepr) -> Result<Self> {
        let data = r.data.iter().map(|&[re, im]| C64::new(re, im)).collect();
        ComplexMatrix::from_vec(r.rows, r.cols, data)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, rejecting bad lengths and
    /// non-finite values.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::ShapeMismatch(format!(
                "non-finite entry at ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Real matrix from nested rows. Panics on ragged input.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == m), "ragged rows");
        Self::from_fn(n, m, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { C64::new(values[i], 0.0) } else { ZERO })
    }

    /// `|v><v|` for a column vector `v`.
    pub fn outer(v: &[C64]) -> Self {
        Self::outer2(v, v)
    }

    /// `|u><v|`.
    pub fn outer2(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<C64>]) -> Self {
        let rows = columns.first().map_or(0, |c| c.len());
        Self::from_fn(rows, columns.len(), |i, j| columns[j][i])
    }

    /// Standard basis vector `e_k` of length `n`.
    pub fn basis_vector(n: usize, k: usize) -> Vec<C64> {
        let mut v = vec![ZERO; n];
        v[k] = ONE;
        v
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matmul shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// `A v` for a column vector.
    pub fn apply_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// `<u| M |v>`.
    pub fn sandwich(&self, u: &[C64], v: &[C64]) -> C64 {
        inner(u, &self.apply_vec(v))
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// `Tr[self * other]` without forming the product.
    pub fn trace_product(&self, other: &Self) -> C64 {
        assert!(self.cols == other.rows && self.rows == other.cols);
        let mut acc = ZERO;
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max-entry distance to another matrix of the same shape.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |M - M^dagger|`; infinite for non-square input.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// `(M + M^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    /// `A B - B A`.
    pub fn commutator(&self, other: &Self) -> Self {
        &self.matmul(other) - &other.matmul(self)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

/// `<u|v>`, conjugate-linear in the first argument.
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Complete eigensystem of a Hermitian matrix.
///
/// Eigenvalues ascend; column `i` of `eigenvectors` belongs to `eigenvalues[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianEigensystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigensystem {
    pub fn dimension(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, i: usize) -> Vec<C64> {
        self.eigenvectors.column(i)
    }

    /// `sum_i lambda_i v_i v_i^dagger`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.dimension();
        let v = &self.eigenvectors;
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n).map(|k| v[(i, k)] * v[(j, k)].conj() * self.eigenvalues[k]).sum()
        })
    }

    /// Index ranges of eigenvalues that agree to within `tol`.
    pub fn degeneracy_groups(&self, tol: f64) -> Vec<Vec<usize>> {
        group_close(&self.eigenvalues, tol)
    }
}

/// Partitions consecutive indices of a sorted list into runs whose neighbours
/// differ by at most `tol`.
pub(crate) fn group_close(sorted: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, &x) in sorted.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if (x - sorted[*g.last().unwrap()]).abs() <= tol => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

const MAX_SWEEPS: usize = 64;

/// Eigendecomposition of a Hermitian matrix with default tolerances, using
/// `tol` as the hermiticity bound.
pub fn eig_hermitian(m: &ComplexMatrix, tol: f64) -> Result<HermitianEigensystem> {
    eig_hermitian_with(
        m,
        &Tolerances {
            hermiticity: tol,
            ..Tolerances::default()
        },
    )
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
///
/// Sweeps visit pairs `(p, q)` in row order. After convergence the
/// eigenpairs are sorted ascending (stable on the diagonal index), vectors
/// inside each degenerate group are re-orthonormalized in index order, and
/// every vector is rotated so its first largest-magnitude component is real
/// and positive. The result is a deterministic function of the input.
pub fn eig_hermitian_with(m: &ComplexMatrix, tols: &Tolerances) -> Result<HermitianEigensystem> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition of a {}x{} matrix",
            m.rows, m.cols
        )));
    }
    let deviation = m.hermitian_deviation();
    if deviation > tols.hermiticity {
        return Err(Error::NotHermitian {
            deviation,
            tol: tols.hermiticity,
        });
    }
    let n = m.rows;
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();
    let threshold = tols.convergence * scale.max(f64::MIN_POSITIVE);

    let off_norm = |a: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    let mut off = off_norm(&a);
    while off > threshold {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, off_norm: off });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                jacobi_rotate(&mut a, &mut v, p, q);
            }
        }
        sweeps += 1;
        off = off_norm(&a);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re).then(i.cmp(&j)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut columns: Vec<Vec<C64>> = order.iter().map(|&i| v.column(i)).collect();

    for group in group_close(&eigenvalues, tols.degeneracy) {
        if group.len() > 1 {
            let block: Vec<Vec<C64>> = group.iter().map(|&i| columns[i].clone()).collect();
            let ortho = gram_schmidt(&block, 0.0)?;
            for (slot, vec) in group.iter().zip(ortho) {
                columns[*slot] = vec;
            }
        }
    }
    for col in &mut columns {
        fix_phase(col);
    }

    Ok(HermitianEigensystem {
        eigenvalues,
        eigenvectors: ComplexMatrix::from_columns(&columns),
    })
}

/// One two-sided rotation zeroing `a[p][q]`, accumulated into `v`.
fn jacobi_rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let phase = apq / mag;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta >= 0.0 {
        1.0 / (theta + (theta * theta + 1.0).sqrt())
    } else {
        -1.0 / (-theta + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    // Block of the unitary: [[c, s e^{i phi}], [-s e^{-i phi}, c]].
    let vpp = C64::new(c, 0.0);
    let vpq = phase * s;
    let vqp = -phase.conj() * s;
    let vqq = C64::new(c, 0.0);
    let n = a.rows;

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * vpp + akq * vqp;
        a[(k, q)] = akp * vpq + akq * vqq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = vpp.conj() * apk + vqp.conj() * aqk;
        a[(q, k)] = vpq.conj() * apk + vqq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = C64::new(app - t * mag, 0.0);
    a[(q, q)] = C64::new(aqq + t * mag, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * vpp + vkq * vqp;
        v[(k, q)] = vkp * vpq + vkq * vqq;
    }
}

fn fix_phase(v: &mut [C64]) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v.iter().position(|z| z.norm() >= max * (1.0 - 1e-9)).unwrap();
    let rot = v[pivot].conj() / v[pivot].norm();
    for z in v.iter_mut() {
        *z *= rot;
    }
}

/// Modified Gram-Schmidt with one re-orthogonalization pass. A column whose
/// residual norm falls to `rank_tol` times its original norm (or below) is
/// rank deficient.
fn gram_schmidt(columns: &[Vec<C64>], rank_tol: f64) -> Result<Vec<Vec<C64>>> {
    let mut out: Vec<Vec<C64>> = Vec::with_capacity(columns.len());
    for (j, col) in columns.iter().enumerate() {
        let original = norm(col);
        let mut w = col.clone();
        for _ in 0..2 {
            for q in &out {
                let c = inner(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let nw = norm(&w);
        if nw == 0.0 || nw <= rank_tol * original {
            return Err(Error::RankDeficient { column: j, norm: nw });
        }
        for wi in w.iter_mut() {
            *wi /= nw;
        }
        out.push(w);
    }
    Ok(out)
}

/// Orthonormalizes the columns of `m` (thin QR, returning `Q`).
///
/// Column `j` of the result spans the same flag as the first `j + 1` input
/// columns, and the implied `R` has a positive real diagonal. Applied to a
/// complex Gaussian matrix this yields a Haar-distributed isometry.
pub fn qr_orthonormalize(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if m.cols > m.rows {
        return Err(Error::RankDeficient {
            column: m.rows,
            norm: 0.0,
        });
    }
    let cols: Vec<Vec<C64>> = (0..m.cols).map(|j| m.column(j)).collect();
    let q = gram_schmidt(&cols, 1e-10)?;
    Ok(ComplexMatrix::from_columns(&q))
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (rb, cb) = (b.rows, b.cols);
    ComplexMatrix::from_fn(a.rows * rb, a.cols * cb, |r, c| {
        a[(r / rb, c / cb)] * b[(r % rb, c % cb)]
    })
}

/// Which tensor factor of a bipartite space an operation acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subsystem {
    A,
    B,
}

impl Subsystem {
    pub fn other(self) -> Self {
        match self {
            Subsystem::A => Subsystem::B,
            Subsystem::B => Subsystem::A,
        }
    }
}

/// Traces out subsystem `traced` of an operator on `C^{d_a} ⊗ C^{d_b}`.
pub fn partial_trace(m: &ComplexMatrix, traced: Subsystem, d_a: usize, d_b: usize) -> Result<ComplexMatrix> {
    let n = d_a * d_b;
    if m.rows != n || m.cols != n {
        return Err(Error::DimensionMismatch(format!(
            "partial trace of a {}x{} matrix over {d_a}x{d_b}",
            m.rows, m.cols
        )));
    }
    Ok(match traced {
        Subsystem::B => ComplexMatrix::from_fn(d_a, d_a, |i, j| (0..d_b).map(|k| m[(i * d_b + k, j * d_b + k)]).sum()),
        Subsystem::A => ComplexMatrix::from_fn(d_b, d_b, |i, j| (0..d_a).map(|k| m[(k * d_b + i, k * d_b + j)]).sum()),
    })
}

/// Swaps the tensor factors: maps an operator on `A ⊗ B` to one on `B ⊗ A`.
pub fn swap_factors(m: &ComplexMatrix, d_a: usize, d_b: usize) -> Result<ComplexMatrix> {
    let n = d_a * d_b;
    if m.rows != n || m.cols != n {
        return Err(Error::DimensionMismatch(format!(
            "factor swap of a {}x{} matrix over {d_a}x{d_b}",
            m.rows, m.cols
        )));
    }
    // |b a> index in the swapped space corresponds to |a b> in the original.
    let src = |idx: usize| {
        let (b, a) = (idx / d_a, idx % d_a);
        a * d_b + b
    };
    Ok(ComplexMatrix::from_fn(n, n, |i, j| m[(src(i), src(j))]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{gaussian_matrix, rng_from_seed};

    fn random_hermitian(n: usize, seed: u64) -> ComplexMatrix {
        let g = gaussian_matrix(&mut rng_from_seed(seed), n, n);
        g.hermitian_part()
    }

    #[test]
    fn identity_eigensystem() {
        let e = eig_hermitian(&ComplexMatrix::identity(3), 1e-10).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 1.0, 1.0]);
        assert_eq!(e.reconstruct(), ComplexMatrix::identity(3));
    }

    #[test]
    fn diagonal_input_is_sorted() {
        let e = eig_hermitian(&ComplexMatrix::diag(&[0.75, 0.25]), 1e-10).unwrap();
        assert_eq!(e.eigenvalues, vec![0.25, 0.75]);
        assert_eq!(e.vector(0), ComplexMatrix::basis_vector(2, 1));
        assert_eq!(e.vector(1), ComplexMatrix::basis_vector(2, 0));
    }

    #[test]
    fn pauli_x_eigenpairs_satisfy_substitution() {
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let e = eig_hermitian(&x, 1e-10).unwrap();
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-14);
        for i in 0..2 {
            let v = e.vector(i);
            let mv = x.apply_vec(&v);
            for k in 0..2 {
                assert!((mv[k] - v[k] * e.eigenvalues[i]).norm() < 1e-14);
            }
        }
        // (1, -1)/sqrt(2) up to phase for lambda = -1
        let v0 = e.vector(0);
        assert!((v0[0].norm() - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((v0[0] + v0[1]).norm() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(eig_hermitian(&m, 1e-10), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn random_reconstruction_and_orthonormality() {
        let tols = Tolerances::default();
        for seed in 0..50 {
            let n = 2 + (seed as usize % 7);
            let m = random_hermitian(n, seed);
            let e = eig_hermitian(&m, tols.hermiticity).unwrap();
            let bound = 10.0 * tols.hermiticity * m.max_abs();
            assert!(e.reconstruct().max_abs_diff(&m) <= bound);
            let v = &e.eigenvectors;
            let gram = v.adjoint().matmul(v);
            assert!(gram.max_abs_diff(&ComplexMatrix::identity(n)) < 1e-12);
            assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn eigensolver_is_deterministic() {
        let m = random_hermitian(5, 11);
        assert_eq!(eig_hermitian(&m, 1e-10).unwrap(), eig_hermitian(&m, 1e-10).unwrap());
    }

    #[test]
    fn degenerate_group_is_orthonormal() {
        // diag(1, 1, 2) rotated by a random unitary.
        let u = qr_orthonormalize(&gaussian_matrix(&mut rng_from_seed(3), 3, 3)).unwrap();
        let m = u.matmul(&ComplexMatrix::diag(&[1.0, 1.0, 2.0])).matmul(&u.adjoint());
        let e = eig_hermitian(&m, 1e-10).unwrap();
        assert_eq!(e.degeneracy_groups(1e-10), vec![vec![0, 1], vec![2]]);
        let gram = e.eigenvectors.adjoint().matmul(&e.eigenvectors);
        assert!(gram.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-12);
        assert!(e.reconstruct().max_abs_diff(&m) < 1e-12);
    }

    #[test]
    fn kron_examples() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));
        let a = ComplexMatrix::diag(&[1.0, 0.0]);
        let b = ComplexMatrix::diag(&[0.0, 1.0]);
        assert_eq!(kron(&a, &b), ComplexMatrix::diag(&[0.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn kron_matches_quadruple_loop() {
        let mut rng = rng_from_seed(5);
        let a = gaussian_matrix(&mut rng, 2, 3);
        let b = gaussian_matrix(&mut rng, 3, 2);
        let k = kron(&a, &b);
        for i in 0..2 {
            for j in 0..3 {
                for p in 0..3 {
                    for q in 0..2 {
                        assert_eq!(k[(i * 3 + p, j * 2 + q)], a[(i, j)] * b[(p, q)]);
                    }
                }
            }
        }
        let (ta, tb) = (a.matmul(&a.adjoint()), b.matmul(&b.adjoint()));
        let tk = kron(&ta, &tb).trace();
        assert!((tk - ta.trace() * tb.trace()).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_of_product_and_bell() {
        let ra = ComplexMatrix::diag(&[0.3, 0.7]);
        let rb = ComplexMatrix::diag(&[0.1, 0.2, 0.7]);
        let ab = kron(&ra, &rb);
        assert!(partial_trace(&ab, Subsystem::B, 2, 3).unwrap().max_abs_diff(&ra) < 1e-15);
        assert!(partial_trace(&ab, Subsystem::A, 2, 3).unwrap().max_abs_diff(&rb) < 1e-15);

        let h = 0.5f64.sqrt();
        let bell = vec![C64::new(h, 0.0), ZERO, ZERO, C64::new(h, 0.0)];
        let p = ComplexMatrix::outer(&bell);
        let half = ComplexMatrix::identity(2).scale_real(0.5);
        assert!(partial_trace(&p, Subsystem::A, 2, 2).unwrap().max_abs_diff(&half) < 1e-15);
    }

    #[test]
    fn partial_trace_preserves_trace_and_is_linear() {
        let mut rng = rng_from_seed(9);
        for _ in 0..20 {
            let m = gaussian_matrix(&mut rng, 6, 6);
            let n = gaussian_matrix(&mut rng, 6, 6);
            for which in [Subsystem::A, Subsystem::B] {
                let t = partial_trace(&m, which, 2, 3).unwrap();
                assert!((t.trace() - m.trace()).norm() < 1e-12);
                let (alpha, beta) = (C64::new(0.3, -1.2), C64::new(2.0, 0.5));
                let lhs = partial_trace(&(&m.scale(alpha) + &n.scale(beta)), which, 2, 3).unwrap();
                let rhs = &t.scale(alpha) + &partial_trace(&n, which, 2, 3).unwrap().scale(beta);
                assert!(lhs.max_abs_diff(&rhs) < 1e-12);
            }
        }
        assert!(matches!(
            partial_trace(&ComplexMatrix::identity(5), Subsystem::A, 2, 3),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn swap_factors_exchanges_marginals() {
        let ra = ComplexMatrix::diag(&[0.3, 0.7]);
        let rb = ComplexMatrix::diag(&[0.1, 0.2, 0.7]);
        let swapped = swap_factors(&kron(&ra, &rb), 2, 3).unwrap();
        assert!(swapped.max_abs_diff(&kron(&rb, &ra)) < 1e-15);
    }

    #[test]
    fn qr_examples() {
        let i3 = ComplexMatrix::identity(3);
        assert_eq!(qr_orthonormalize(&i3).unwrap(), i3);

        let v = ComplexMatrix::from_columns(&[vec![C64::new(3.0, 0.0), C64::new(0.0, 4.0)]]);
        let q = qr_orthonormalize(&v).unwrap();
        assert!((q[(0, 0)] - C64::new(0.6, 0.0)).norm() < 1e-15);
        assert!((q[(1, 0)] - C64::new(0.0, 0.8)).norm() < 1e-15);

        let mut rng = rng_from_seed(21);
        for k in 0..20 {
            let m = gaussian_matrix(&mut rng, 5, 1 + k % 5);
            let q = qr_orthonormalize(&m).unwrap();
            let gram = q.adjoint().matmul(&q);
            assert!(gram.max_abs_diff(&ComplexMatrix::identity(q.cols())) < 1e-12);
        }

        let dup = ComplexMatrix::from_columns(&[vec![ONE, ZERO], vec![C64::new(2.0, 0.0), ZERO]]);
        assert!(matches!(
            qr_orthonormalize(&dup),
            Err(Error::RankDeficient { column: 1, .. })
        ));
    }

    #[test]
    fn json_shape_is_validated() {
        let m: ComplexMatrix = serde_json::from_str(r#"{"rows":1,"cols":2,"data":[[1,0],[0,-1]]}"#).unwrap();
        assert_eq!(m[(0, 1)], C64::new(0.0, -1.0));
        assert!(serde_json::from_str::<ComplexMatrix>(r#"{"rows":2,"cols":2,"data":[[1,0]]}"#).is_err());
    }
}
