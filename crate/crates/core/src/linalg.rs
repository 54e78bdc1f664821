//! Dense complex linear algebra at desk scale.
//!
//! Everything here works on a single row-major [`CMatrix`] type that covers
//! both the square (Hermitian) operators and the rectangular isometries of a
//! dilation. Spectral questions go through a cyclic Jacobi eigensolver.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Numerical thresholds used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Frobenius-distance threshold for operator equality.
    pub eq: f64,
    /// How far below zero an eigenvalue may sit and still count as nonnegative.
    pub psd: f64,
    /// Eigenvalue (or squared singular value) cutoff for numerical rank.
    pub rank: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            eq: 1e-8,
            psd: 1e-9,
            rank: 1e-9,
        }
    }
}

impl Tolerance {
    /// Builds a tolerance from an equality threshold, scaling `psd` and `rank`
    /// in the same proportion as the defaults.
    pub fn from_eq(eq: f64) -> Self {
        let d = Tolerance::default();
        Tolerance {
            eq,
            psd: eq * d.psd / d.eq,
            rank: eq * d.rank / d.eq,
        }
    }

    pub fn uniform(value: f64) -> Self {
        Tolerance {
            eq: value,
            psd: value,
            rank: value,
        }
    }

    pub fn is_valid(&self) -> bool {
        [self.eq, self.psd, self.rank]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0)
    }
}

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    /// Wraps a row-major entry vector. Fails unless `data.len() == rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: format!("{} entries", rows * cols),
                found: format!("{} entries", data.len()),
            });
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        CMatrix::from_fn(n, m, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(values[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// `weight · |v⟩⟨v|`.
    pub fn outer(v: &[C64], weight: f64) -> Self {
        let n = v.len();
        CMatrix::from_fn(n, n, |i, j| v[i] * v[j].conj() * weight)
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

    /// Side length of a square matrix (row count otherwise).
    pub fn dim(&self) -> usize {
        self.rows
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: f64) -> Self {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self, tol: &Tolerance) -> bool {
        self.frob_norm() <= tol.eq
    }

    /// Largest entry of `|A - A*|`.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `(A + A*) / 2`.
    pub fn hermitian_part(&self) -> Self {
        CMatrix::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * 0.5
        })
    }

    /// True when every off-diagonal entry is exactly zero.
    pub fn is_exactly_diagonal(&self) -> bool {
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j && self[(i, j)] != C64::new(0.0, 0.0) {
                    return false;
                }
            }
        }
        true
    }

    pub fn add_assign(&mut self, other: &CMatrix) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn sub_assign(&mut self, other: &CMatrix) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
    }

    fn shape(&self) -> String {
        format!("{}x{}", self.rows, self.cols)
    }

    fn check_same_shape(&self, other: &CMatrix) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.shape(),
                found: other.shape(),
            });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        let mut out = self.clone();
        out.add_assign(rhs);
        out
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        let mut out = self.clone();
        out.sub_assign(rhs);
        out
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let rrow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, b) in orow.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:>10.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Spectral decomposition `A = U · diag(values) · U*` with ascending values.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Eigenvectors as columns.
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn reconstruct(&self) -> CMatrix {
        self.map_spectrum(|x| x)
    }

    /// `U · diag(f(values)) · U*`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let u = &self.vectors;
        let fv: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        CMatrix::from_fn(n, n, |i, j| {
            (0..n).map(|k| u[(i, k)] * u[(j, k)].conj() * fv[k]).sum()
        })
    }
}

const JACOBI_SWEEPS: usize = 100;
const JACOBI_OFF_TOL: f64 = 1e-12;

fn off_diagonal_norm(a: &CMatrix) -> f64 {
    let n = a.rows;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn check_hermitian(a: &CMatrix, tol: &Tolerance) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: "square matrix".into(),
            found: a.shape(),
        });
    }
    let defect = a.hermitian_defect();
    if defect > tol.eq {
        return Err(Error::NonHermitianInput { defect });
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// The off-diagonal target is `1e-12` relative to `max(1, ‖A‖_F)`.
pub fn herm_eig(a: &CMatrix, tol: &Tolerance) -> Result<HermitianEigen> {
    check_hermitian(a, tol)?;
    let n = a.rows;
    let mut m = a.hermitian_part();
    let mut u = CMatrix::identity(n);
    let target = JACOBI_OFF_TOL * a.frob_norm().max(1.0);

    let mut sweeps = 0;
    let mut off = off_diagonal_norm(&m);
    while off > target {
        if sweeps == JACOBI_SWEEPS {
            return Err(Error::ConvergenceFailure {
                sweeps,
                off_norm: off,
            });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut m, &mut u, p, q);
            }
        }
        sweeps += 1;
        off = off_diagonal_norm(&m);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let values = order.iter().map(|&k| m[(k, k)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| u[(i, order[j])]);
    Ok(HermitianEigen { values, vectors })
}

/// Annihilates `m[p][q]` with `G = D·R`, where `D` removes the phase of the
/// pivot and `R` is the real symmetric Jacobi rotation; applies `m ← G*·m·G`
/// and `u ← u·G`.
fn rotate(m: &mut CMatrix, u: &mut CMatrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let phase = apq / mag;

    let theta = (aqq - app) / (2.0 * mag);
    let t = if theta.is_infinite() {
        0.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // G restricted to (p, q):
    //   [ c              s             ]
    //   [ -s·conj(phase) c·conj(phase) ]
    let g_pp = C64::new(c, 0.0);
    let g_pq = C64::new(s, 0.0);
    let g_qp = -phase.conj() * s;
    let g_qq = phase.conj() * c;

    let n = m.rows;
    for k in 0..n {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = mkp * g_pp + mkq * g_qp;
        m[(k, q)] = mkp * g_pq + mkq * g_qq;
    }
    for k in 0..n {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = g_pp.conj() * mpk + g_qp.conj() * mqk;
        m[(q, k)] = g_pq.conj() * mpk + g_qq.conj() * mqk;
    }
    m[(p, q)] = C64::new(0.0, 0.0);
    m[(q, p)] = C64::new(0.0, 0.0);
    m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
    m[(q, q)] = C64::new(m[(q, q)].re, 0.0);

    for k in 0..n {
        let ukp = u[(k, p)];
        let ukq = u[(k, q)];
        u[(k, p)] = ukp * g_pp + ukq * g_qp;
        u[(k, q)] = ukp * g_pq + ukq * g_qq;
    }
}

/// Smallest eigenvalue; exactly diagonal inputs are read off directly.
pub fn min_eigenvalue(a: &CMatrix, tol: &Tolerance) -> Result<f64> {
    check_hermitian(a, tol)?;
    if a.rows == 0 {
        return Ok(0.0);
    }
    if a.is_exactly_diagonal() {
        return Ok((0..a.rows)
            .map(|i| a[(i, i)].re)
            .fold(f64::INFINITY, f64::min));
    }
    Ok(herm_eig(a, tol)?.values[0])
}

pub fn is_psd(a: &CMatrix, tol: &Tolerance) -> Result<bool> {
    Ok(min_eigenvalue(a, tol)? >= -tol.psd)
}

/// Loewner order: `A ≤ B` iff `B − A` is positive semidefinite.
pub fn loewner_leq(a: &CMatrix, b: &CMatrix, tol: &Tolerance) -> Result<bool> {
    a.check_same_shape(b)?;
    is_psd(&(b - a), tol)
}

/// Positive square root; eigenvalues in `[-tol.psd, 0)` are clamped to zero.
pub fn psd_sqrt(a: &CMatrix, tol: &Tolerance) -> Result<CMatrix> {
    let eig = herm_eig(a, tol)?;
    if let Some(&min) = eig.values.first() {
        if min < -tol.psd {
            return Err(Error::NotPositive {
                min_eigenvalue: min,
            });
        }
    }
    Ok(eig.map_spectrum(|x| x.max(0.0).sqrt()))
}

/// Numerical rank. Hermitian inputs count eigenvalues with `|λ| > tol.rank`;
/// anything else counts eigenvalues of `A*A` above `tol.rank`.
pub fn rank_eps(a: &CMatrix, tol: &Tolerance) -> usize {
    let count = |m: &CMatrix, abs: bool| -> usize {
        match herm_eig(m, tol) {
            Ok(eig) => eig
                .values
                .iter()
                .filter(|&&v| if abs { v.abs() } else { v } > tol.rank)
                .count(),
            // A Gram matrix is Hermitian by construction; Jacobi only fails on
            // pathological input (NaN), which has no meaningful rank.
            Err(_) => 0,
        }
    };
    if a.is_square() && a.hermitian_defect() <= tol.eq {
        count(a, true)
    } else {
        let gram = &a.adjoint() * a;
        count(&gram.hermitian_part(), false)
    }
}

pub fn frob_dist(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    a.check_same_shape(b)?;
    Ok(a.data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

/// Operator equality at `tol.eq`; shape mismatch counts as unequal.
pub fn approx_eq(a: &CMatrix, b: &CMatrix, tol: &Tolerance) -> bool {
    frob_dist(a, b).is_ok_and(|d| d <= tol.eq)
}
