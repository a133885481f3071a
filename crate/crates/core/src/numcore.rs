//! Dense numerics for the small real matrices that appear in two-mode
//! Gaussian state analysis.
//!
//! Everything here works on fixed-size stack matrices (`N` is 2, 4, or 8 for
//! the real embedding of a 4×4 Hermitian matrix). The symmetric eigensolver
//! is cyclic Jacobi: slow asymptotically, but unconditionally robust at these
//! sizes and accurate to a few ulps on the eigenvalues.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Square real matrix stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix<const N: usize>(pub [[f64; N]; N]);

pub type Mat2 = Matrix<2>;
pub type Mat4 = Matrix<4>;

impl<const N: usize> Default for Matrix<N> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<const N: usize> Matrix<N> {
    pub const fn zeros() -> Self {
        Matrix([[0.0; N]; N])
    }

    pub fn identity() -> Self {
        Self::from_diag([1.0; N])
    }

    pub fn from_diag(d: [f64; N]) -> Self {
        let mut m = Self::zeros();
        for (i, v) in d.into_iter().enumerate() {
            m.0[i][i] = v;
        }
        m
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> &[[f64; N]; N] {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(|i, j| self.0[j][i])
    }

    pub fn trace(&self) -> f64 {
        (0..N).map(|i| self.0[i][i]).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_fn(|i, j| s * self.0[i][j])
    }

    pub fn diag(&self) -> [f64; N] {
        std::array::from_fn(|i| self.0[i][i])
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }

    /// `(m + mᵀ) / 2`.
    pub fn symmetrized(&self) -> Self {
        Self::from_fn(|i, j| 0.5 * (self.0[i][j] + self.0[j][i]))
    }

    /// Largest `|m_ij - m_ji|` and where it occurs.
    pub fn asymmetry(&self) -> (f64, usize, usize) {
        let mut worst = (0.0, 0, 0);
        for i in 0..N {
            for j in (i + 1)..N {
                let d = (self.0[i][j] - self.0[j][i]).abs();
                if d > worst.0 {
                    worst = (d, i, j);
                }
            }
        }
        worst
    }

    pub fn mul_vec(&self, v: &[f64; N]) -> [f64; N] {
        std::array::from_fn(|i| (0..N).map(|k| self.0[i][k] * v[k]).sum())
    }

    /// `vᵀ m v`.
    pub fn quad_form(&self, v: &[f64; N]) -> f64 {
        let mv = self.mul_vec(v);
        v.iter().zip(mv.iter()).map(|(a, b)| a * b).sum()
    }

    /// Determinant by LU decomposition with partial pivoting.
    pub fn det(&self) -> f64 {
        let mut a = self.0;
        let mut det = 1.0;
        for col in 0..N {
            let pivot = (col..N)
                .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
                .unwrap_or(col);
            if a[pivot][col] == 0.0 {
                return 0.0;
            }
            if pivot != col {
                a.swap(pivot, col);
                det = -det;
            }
            det *= a[col][col];
            for row in (col + 1)..N {
                let f = a[row][col] / a[col][col];
                for k in col..N {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
        det
    }

    /// Solves `m x = b`; `None` when the matrix is numerically singular.
    pub fn solve(&self, b: &[f64; N]) -> Option<[f64; N]> {
        let mut a = self.0;
        let mut x = *b;
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for col in 0..N {
            let pivot = (col..N).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))?;
            if a[pivot][col].abs() <= 1e-300 * scale {
                return None;
            }
            a.swap(pivot, col);
            x.swap(pivot, col);
            for row in (col + 1)..N {
                let f = a[row][col] / a[col][col];
                if f != 0.0 {
                    for k in col..N {
                        a[row][k] -= f * a[col][k];
                    }
                    x[row] -= f * x[col];
                }
            }
        }
        for col in (0..N).rev() {
            let s: f64 = ((col + 1)..N).map(|k| a[col][k] * x[k]).sum();
            x[col] = (x[col] - s) / a[col][col];
        }
        x.iter().all(|v| v.is_finite()).then_some(x)
    }

    /// Matrix inverse via column-wise solves.
    pub fn inverse(&self) -> Option<Self> {
        let mut inv = Self::zeros();
        for j in 0..N {
            let mut e = [0.0; N];
            e[j] = 1.0;
            let col = self.solve(&e)?;
            for i in 0..N {
                inv.0[i][j] = col[i];
            }
        }
        Some(inv)
    }
}

impl<const N: usize> Index<(usize, usize)> for Matrix<N> {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[i][j]
    }
}

impl<const N: usize> IndexMut<(usize, usize)> for Matrix<N> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.0[i][j]
    }
}

impl<const N: usize> Add for Matrix<N> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] + rhs.0[i][j])
    }
}

impl<const N: usize> AddAssign for Matrix<N> {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<const N: usize> Sub for Matrix<N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] - rhs.0[i][j])
    }
}

impl<const N: usize> Neg for Matrix<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl<const N: usize> Mul for Matrix<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| (0..N).map(|k| self.0[i][k] * rhs.0[k][j]).sum())
    }
}

impl<const N: usize> Mul<f64> for Matrix<N> {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.scale(rhs)
    }
}

/// Double-double number `hi + lo` for compensated sums and products.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    /// Exact product of two doubles.
    pub fn prod(a: f64, b: f64) -> Self {
        let p = a * b;
        Dd { hi: p, lo: a.mul_add(b, -p) }
    }

    fn renorm(s: f64, e: f64) -> Self {
        let hi = s + e;
        Dd { hi, lo: e - (hi - s) }
    }

    pub fn value(self) -> f64 {
        self.hi + self.lo
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let s = self.hi + o.hi;
        let bb = s - self.hi;
        let e = (self.hi - (s - bb)) + (o.hi - bb);
        Dd::renorm(s, e + self.lo + o.lo)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + -o
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let p = Dd::prod(self.hi, o.hi);
        Dd::renorm(p.hi, p.lo + self.hi * o.lo + self.lo * o.hi)
    }
}

impl Mul<f64> for Dd {
    type Output = Dd;
    fn mul(self, s: f64) -> Dd {
        self * Dd::new(s)
    }
}

/// `m[r][c] m[r+1][d] - m[r][d] m[r+1][c]` in double-double.
fn minor2_dd<const N: usize>(m: &Matrix<N>, r: usize, c: usize, d: usize) -> Dd {
    Dd::prod(m.0[r][c], m.0[r + 1][d]) - Dd::prod(m.0[r][d], m.0[r + 1][c])
}

/// Determinant of a 2×2 block starting at `(r, c)`, in double-double.
pub fn block_det_dd(m: &Mat4, r: usize, c: usize) -> Dd {
    minor2_dd(m, r, c, c + 1)
}

/// 4×4 determinant by Laplace expansion over 2×2 minors, in double-double.
pub fn det4_dd(m: &Mat4) -> Dd {
    const PAIRS: [(usize, usize, usize, usize); 6] =
        [(0, 1, 2, 3), (0, 2, 1, 3), (0, 3, 1, 2), (1, 2, 0, 3), (1, 3, 0, 2), (2, 3, 0, 1)];
    PAIRS.iter().fold(Dd::new(0.0), |acc, &(i, j, k, l)| {
        let term = minor2_dd(m, 0, i, j) * minor2_dd(m, 2, k, l);
        if (i + j) % 2 == 1 {
            acc + term
        } else {
            acc - term
        }
    })
}

/// Block-diagonal `a ⊕ b`.
pub fn direct_sum(a: &Mat2, b: &Mat2) -> Mat4 {
    from_blocks(a, &Mat2::zeros(), &Mat2::zeros(), b)
}

/// Assembles `[[a, c], [d, b]]` from 2×2 blocks.
pub fn from_blocks(a: &Mat2, c: &Mat2, d: &Mat2, b: &Mat2) -> Mat4 {
    Mat4::from_fn(|i, j| match (i < 2, j < 2) {
        (true, true) => a.0[i][j],
        (true, false) => c.0[i][j - 2],
        (false, true) => d.0[i - 2][j],
        (false, false) => b.0[i - 2][j - 2],
    })
}

/// 2×2 block `(bi, bj)` of a 4×4 matrix.
pub fn block(m: &Mat4, bi: usize, bj: usize) -> Mat2 {
    Mat2::from_fn(|i, j| m.0[2 * bi + i][2 * bj + j])
}

/// Real symmetric matrix with finite entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMatrix<const N: usize>(Matrix<N>);

impl<const N: usize> SymMatrix<N> {
    /// Rejects non-finite entries and symmetrizes.
    pub fn new(m: Matrix<N>) -> Result<Self> {
        for i in 0..N {
            for j in 0..N {
                if !m.0[i][j].is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(SymMatrix(m.symmetrized()))
    }

    /// Like [`SymMatrix::new`] but fails if any pair `m_ij`, `m_ji` differs by
    /// more than `tol`.
    pub fn new_checked(m: Matrix<N>, tol: f64) -> Result<Self> {
        let s = Self::new(m)?;
        let (dev, row, col) = m.asymmetry();
        if dev > tol {
            return Err(Error::NotSymmetric { row, col, deviation: dev });
        }
        Ok(s)
    }

    pub fn from_rows(rows: [[f64; N]; N]) -> Result<Self> {
        Self::new(Matrix(rows))
    }

    pub fn identity() -> Self {
        SymMatrix(Matrix::identity())
    }

    pub fn from_diag(d: [f64; N]) -> Result<Self> {
        Self::new(Matrix::from_diag(d))
    }

    pub fn matrix(&self) -> &Matrix<N> {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix<N> {
        self.0
    }

    pub fn det(&self) -> f64 {
        self.0.det()
    }

    pub fn eig(&self) -> Eigen<N> {
        eig_sym(self)
    }
}

impl<const N: usize> Index<(usize, usize)> for SymMatrix<N> {
    type Output = f64;
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// Eigen-decomposition of a symmetric matrix: ascending eigenvalues, with
/// the matching orthonormal eigenvectors stored as columns.
#[derive(Debug, Clone, Copy)]
pub struct Eigen<const N: usize> {
    pub values: [f64; N],
    pub vectors: Matrix<N>,
}

impl<const N: usize> Eigen<N> {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[N - 1]
    }

    pub fn vector(&self, k: usize) -> [f64; N] {
        std::array::from_fn(|i| self.vectors.0[i][k])
    }

    /// `V f(D) Vᵀ`.
    pub fn reassemble(&self, f: impl Fn(f64) -> f64) -> Matrix<N> {
        let d: [f64; N] = std::array::from_fn(|k| f(self.values[k]));
        Matrix::from_fn(|i, j| {
            (0..N)
                .map(|k| self.vectors.0[i][k] * d[k] * self.vectors.0[j][k])
                .sum()
        })
    }
}

const JACOBI_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Symmetric eigensolver (cyclic Jacobi).
pub fn eig_sym<const N: usize>(m: &SymMatrix<N>) -> Eigen<N> {
    jacobi(m.0)
}

fn jacobi<const N: usize>(m: Matrix<N>) -> Eigen<N> {
    let mut a = m.0;
    let mut v = Matrix::<N>::identity().0;
    let norm = m.frobenius();

    if norm > 0.0 {
        for _ in 0..JACOBI_MAX_SWEEPS {
            let off: f64 = (0..N)
                .flat_map(|i| (0..N).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i][j] * a[i][j])
                .sum::<f64>()
                .sqrt();
            if off < JACOBI_TOL * norm {
                break;
            }
            for p in 0..N {
                for q in (p + 1)..N {
                    let apq = a[p][q];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for row in a.iter_mut() {
                        let (akp, akq) = (row[p], row[q]);
                        row[p] = c * akp - s * akq;
                        row[q] = s * akp + c * akq;
                    }
                    for k in 0..N {
                        let (apk, aqk) = (a[p][k], a[q][k]);
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                    a[p][q] = 0.0;
                    a[q][p] = 0.0;
                    for row in v.iter_mut() {
                        let (vkp, vkq) = (row[p], row[q]);
                        row[p] = c * vkp - s * vkq;
                        row[q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }

    let mut order: [usize; N] = std::array::from_fn(|i| i);
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    Eigen {
        values: std::array::from_fn(|k| a[order[k]][order[k]]),
        vectors: Matrix::from_fn(|i, k| v[i][order[k]]),
    }
}

/// Hermitian matrix `S + iK` held as a symmetric real part and an
/// antisymmetric imaginary part of equal size.
#[derive(Debug, Clone, Copy)]
pub struct HermitianPair<const N: usize> {
    real: SymMatrix<N>,
    imag: Matrix<N>,
}

impl<const N: usize> HermitianPair<N> {
    /// Fails if `imag` deviates from antisymmetry by more than 1e-12
    /// (relative to its largest entry).
    pub fn new(real: SymMatrix<N>, imag: Matrix<N>) -> Result<Self> {
        if !imag.is_finite() {
            return Err(Error::NonFinite { row: 0, col: 0 });
        }
        let dev = Matrix::<N>::from_fn(|i, j| imag.0[i][j] + imag.0[j][i]).max_abs();
        if dev > 1e-12 * imag.max_abs().max(1.0) {
            return Err(Error::NotAntisymmetric(dev));
        }
        let imag = Matrix::<N>::from_fn(|i, j| 0.5 * (imag.0[i][j] - imag.0[j][i]));
        Ok(HermitianPair { real, imag })
    }

    pub fn real(&self) -> &SymMatrix<N> {
        &self.real
    }

    pub fn imag(&self) -> &Matrix<N> {
        &self.imag
    }
}

/// Spectrum of a Hermitian matrix computed through its real symmetric
/// embedding `[[S, -K], [K, S]]`.
pub trait HermitianSpectrum {
    /// Every eigenvalue of the 2n×2n embedding, ascending; each eigenvalue of
    /// the Hermitian matrix appears twice.
    fn embedded_spectrum(&self) -> Vec<f64>;

    /// Eigenvalues of the Hermitian matrix, ascending.
    fn spectrum(&self) -> Vec<f64> {
        self.embedded_spectrum().into_iter().step_by(2).collect()
    }

    fn min_eig(&self) -> f64 {
        self.embedded_spectrum()[0]
    }
}

fn embed<const N: usize, const M: usize>(h: &HermitianPair<N>) -> Matrix<M> {
    debug_assert_eq!(M, 2 * N);
    let s = h.real.matrix();
    let k = &h.imag;
    Matrix::from_fn(|i, j| match (i < N, j < N) {
        (true, true) => s.0[i][j],
        (true, false) => -k.0[i][j - N],
        (false, true) => k.0[i - N][j],
        (false, false) => s.0[i - N][j - N],
    })
}

macro_rules! hermitian_spectrum_impl {
    ($n:literal, $m:literal) => {
        impl HermitianSpectrum for HermitianPair<$n> {
            fn embedded_spectrum(&self) -> Vec<f64> {
                jacobi(embed::<$n, $m>(self)).values.to_vec()
            }
        }
    };
}

hermitian_spectrum_impl!(2, 4);
hermitian_spectrum_impl!(4, 8);

/// Minimum eigenvalue of `S + iK`.
pub fn min_eig_hermitian<H: HermitianSpectrum>(h: &H) -> f64 {
    h.min_eig()
}

/// Lower-triangular `L` with `L Lᵀ = m`.
pub fn cholesky<const N: usize>(m: &SymMatrix<N>) -> Result<Matrix<N>> {
    let a = m.matrix();
    let mut l = Matrix::<N>::zeros();
    for j in 0..N {
        let d = a.0[j][j] - (0..j).map(|k| l.0[j][k] * l.0[j][k]).sum::<f64>();
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j });
        }
        let djj = d.sqrt();
        l.0[j][j] = djj;
        for i in (j + 1)..N {
            let s = a.0[i][j] - (0..j).map(|k| l.0[i][k] * l.0[j][k]).sum::<f64>();
            l.0[i][j] = s / djj;
        }
    }
    Ok(l)
}

/// Determinant of a symmetric matrix.
pub fn det<const N: usize>(m: &SymMatrix<N>) -> f64 {
    m.det()
}

const PINV_RTOL: f64 = 1e-10;

/// Moore–Penrose pseudo-inverse of a symmetric matrix. Eigenvalues below
/// `1e-10 · max|λ|` are treated as zero.
pub fn pinv<const N: usize>(m: &SymMatrix<N>) -> SymMatrix<N> {
    let e = eig_sym(m);
    let largest = e.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let cut = PINV_RTOL * largest;
    let inv = e.reassemble(|v| if v.abs() > cut && v != 0.0 { 1.0 / v } else { 0.0 });
    SymMatrix(inv.symmetrized())
}

/// Projection onto the positive semidefinite cone (Frobenius norm).
pub fn psd_part<const N: usize>(m: &SymMatrix<N>) -> SymMatrix<N> {
    SymMatrix(eig_sym(m).reassemble(|v| v.max(0.0)).symmetrized())
}

/// Principal square root of a positive semidefinite matrix.
pub fn sqrt_psd<const N: usize>(m: &SymMatrix<N>) -> SymMatrix<N> {
    SymMatrix(eig_sym(m).reassemble(|v| v.max(0.0).sqrt()).symmetrized())
}
