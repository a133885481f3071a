//! Two-mode Gaussian states described by their 4×4 covariance matrix.
//!
//! Mode order is `(x_A, p_A, x_B, p_B)` and the vacuum has the identity as
//! covariance matrix. Entropies are in bits.

mod witness;

pub use witness::{optimal_witness, optimal_witness_with, WitnessOptions, WitnessResult};

use crate::error::{Error, Result};
use crate::numcore::{
    block, block_det_dd, cholesky, det4_dd, direct_sum, from_blocks, min_eig_hermitian, sqrt_psd, HermitianPair,
    HermitianSpectrum, Mat2, Mat4, Matrix, SymMatrix,
};

/// Tolerance below which `λ` still counts as physical.
pub const PHYSICAL_TOL: f64 = 1e-9;

/// Input symmetry tolerance: larger deviations are rejected.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Symplectic eigenvalues below `1 - NU_REJECT` are unphysical.
pub const NU_REJECT: f64 = 1e-6;

/// Symplectic eigenvalues in `[1, 1 + NU_CLAMP)` are treated as exactly 1.
pub const NU_CLAMP: f64 = 1e-6;

/// Route disagreement above this raises [`Error::Inconsistent`].
pub const SPECTRUM_ROUTE_TOL: f64 = 1e-6;

/// Single-mode symplectic form.
pub fn sigma() -> Mat2 {
    Matrix([[0.0, 1.0], [-1.0, 0.0]])
}

/// Two-mode symplectic form `σ ⊕ σ`.
pub fn omega() -> Mat4 {
    let s = sigma();
    from_blocks(&s, &Mat2::zeros(), &Mat2::zeros(), &s)
}

/// Local time reversal on Alice's momentum.
pub fn lambda_pt() -> Mat4 {
    Matrix::from_diag([1.0, -1.0, 1.0, 1.0])
}

/// A 4×4 covariance matrix in vacuum units.
///
/// Physicality is not enforced: a measured matrix may violate the
/// uncertainty principle and is still representable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix(SymMatrix<4>);

impl CovarianceMatrix {
    /// Builds a CM from a 4×4 matrix, rejecting non-finite entries and
    /// asymmetry above 1e-9; smaller deviations are symmetrized away.
    pub fn new(m: Mat4) -> Result<Self> {
        Ok(CovarianceMatrix(SymMatrix::new_checked(m, SYMMETRY_TOL)?))
    }

    pub fn from_rows(rows: [[f64; 4]; 4]) -> Result<Self> {
        Self::new(Matrix(rows))
    }

    /// Assembles `[[A, C], [Cᵀ, B]]`.
    pub fn from_blocks(a: &Mat2, b: &Mat2, c: &Mat2) -> Result<Self> {
        Self::new(from_blocks(a, c, &c.transpose(), b))
    }

    /// Symmetrizes without the asymmetry check. Used for results of internal
    /// arithmetic whose asymmetry is pure rounding.
    pub(crate) fn from_computed(m: Mat4) -> Self {
        CovarianceMatrix(SymMatrix::new(m).expect("finite matrix from internal arithmetic"))
    }

    pub fn vacuum() -> Self {
        CovarianceMatrix(SymMatrix::identity())
    }

    /// Two uncorrelated modes with every quadrature variance equal to `v`.
    pub fn thermal(v: f64) -> Result<Self> {
        Self::new(Mat4::from_diag([v; 4]))
    }

    /// Two-mode squeezed vacuum with `cosh 2r = c`.
    pub fn tmsv_cosh(c: f64) -> Result<Self> {
        if !(c >= 1.0) {
            return Err(Error::InvalidParameter(format!("cosh 2r must be >= 1, got {c}")));
        }
        let s = (c * c - 1.0).sqrt();
        Self::from_blocks(
            &Mat2::from_diag([c; 2]),
            &Mat2::from_diag([c; 2]),
            &Mat2::from_diag([s, -s]),
        )
    }

    /// Two-mode squeezed vacuum with squeezing parameter `r`.
    pub fn tmsv(r: f64) -> Result<Self> {
        let (c, s) = ((2.0 * r).cosh(), (2.0 * r).sinh());
        Self::from_blocks(
            &Mat2::from_diag([c; 2]),
            &Mat2::from_diag([c; 2]),
            &Mat2::from_diag([s, -s]),
        )
    }

    pub fn matrix(&self) -> &Mat4 {
        self.0.matrix()
    }

    pub fn sym(&self) -> &SymMatrix<4> {
        &self.0
    }

    pub fn rows(&self) -> [[f64; 4]; 4] {
        self.0.matrix().0
    }

    /// Alice's block.
    pub fn a(&self) -> Mat2 {
        block(self.matrix(), 0, 0)
    }

    /// Bob's block.
    pub fn b(&self) -> Mat2 {
        block(self.matrix(), 1, 1)
    }

    /// Correlation block (Alice rows, Bob columns).
    pub fn c(&self) -> Mat2 {
        block(self.matrix(), 0, 1)
    }

    pub fn alice(&self) -> SymMatrix<2> {
        SymMatrix::new(self.a()).expect("finite block")
    }

    pub fn bob(&self) -> SymMatrix<2> {
        SymMatrix::new(self.b()).expect("finite block")
    }

    pub fn det(&self) -> f64 {
        self.0.det()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_computed(self.matrix().scale(c))
    }

    pub fn shifted(&self, delta: f64) -> Self {
        Self::from_computed(*self.matrix() + Mat4::identity().scale(delta))
    }

    /// `S γ Sᵀ`.
    pub fn transformed(&self, s: &Mat4) -> Self {
        Self::from_computed(*s * *self.matrix() * s.transpose())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (*self.matrix() - *other.matrix()).max_abs()
    }
}

/// Symplectic eigenvalues `ν₁ ≤ ν₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymplecticSpectrum {
    pub nu: [f64; 2],
}

impl SymplecticSpectrum {
    pub fn min(&self) -> f64 {
        self.nu[0]
    }

    pub fn max(&self) -> f64 {
        self.nu[1]
    }
}

/// `λ = λ_min(γ + iΩ)`.
pub fn state_condition(g: &CovarianceMatrix) -> f64 {
    let h = HermitianPair::new(*g.sym(), omega()).expect("Ω is antisymmetric");
    min_eig_hermitian(&h)
}

pub fn is_physical(g: &CovarianceMatrix) -> bool {
    state_condition(g) >= -PHYSICAL_TOL
}

/// `Λ γ Λ` with `Λ = diag(1, -1, 1, 1)`.
pub fn partial_transpose(g: &CovarianceMatrix) -> CovarianceMatrix {
    g.transformed(&lambda_pt())
}

/// Simon criterion: `λ_min(γ^{T_A} + iΩ)`. Negative means entangled.
pub fn simon_lambda(g: &CovarianceMatrix) -> f64 {
    state_condition(&partial_transpose(g))
}

/// Closed-form symplectic spectrum from the local invariants.
///
/// The discriminant cancels when the two eigenvalues are close, so the
/// invariants are accumulated in double-double.
pub fn symplectic_spectrum_closed_form(g: &CovarianceMatrix) -> SymplecticSpectrum {
    let m = g.matrix();
    let det_g = det4_dd(m);
    let delta = block_det_dd(m, 0, 0) + block_det_dd(m, 2, 2) + block_det_dd(m, 0, 2) * 2.0;
    let disc = (delta * delta - det_g * 4.0).value().max(0.0);
    let plus_sq = 0.5 * (delta.value() + disc.sqrt());
    let minus_sq = if plus_sq > 0.0 { det_g.value() / plus_sq } else { 0.0 };
    SymplecticSpectrum { nu: [minus_sq.max(0.0).sqrt(), plus_sq.max(0.0).sqrt()] }
}

/// Symplectic spectrum as the positive eigenvalues of the Hermitian matrix
/// `i γ^{1/2} Ω γ^{1/2}`, which are the moduli of the eigenvalues of `Ωγ`.
pub fn symplectic_spectrum_embedded(g: &CovarianceMatrix) -> SymplecticSpectrum {
    let root = *sqrt_psd(g.sym()).matrix();
    let k = root * omega() * root;
    let zero = SymMatrix::new(Mat4::zeros()).expect("zero matrix");
    let h = HermitianPair::new(zero, k).expect("congruence of Ω is antisymmetric");
    let spec = h.spectrum();
    let mut nu = [spec[2].abs(), spec[3].abs()];
    nu.sort_by(f64::total_cmp);
    SymplecticSpectrum { nu }
}

/// Both routes, in the order (closed form, embedding).
pub fn symplectic_spectrum_routes(
    g: &CovarianceMatrix,
) -> Result<(SymplecticSpectrum, SymplecticSpectrum)> {
    cholesky(g.sym())?;
    Ok((symplectic_spectrum_closed_form(g), symplectic_spectrum_embedded(g)))
}

/// Symplectic spectrum, cross-checked between two independent routes.
pub fn symplectic_spectrum(g: &CovarianceMatrix) -> Result<SymplecticSpectrum> {
    let (a, b) = symplectic_spectrum_routes(g)?;
    let diff = (a.nu[0] - b.nu[0]).abs().max((a.nu[1] - b.nu[1]).abs());
    if diff > SPECTRUM_ROUTE_TOL * (1.0 + a.nu[1]) {
        return Err(Error::Inconsistent(format!(
            "symplectic spectrum routes disagree by {diff:.3e} ({:?} vs {:?})",
            a.nu, b.nu
        )));
    }
    Ok(a)
}

/// Entropy of a single thermal component with symplectic eigenvalue `ν`.
pub fn g_entropy(nu: f64) -> Result<f64> {
    if !nu.is_finite() || nu < 1.0 - NU_REJECT {
        return Err(Error::Unphysical(format!("symplectic eigenvalue {nu} below 1")));
    }
    if nu < 1.0 + NU_CLAMP {
        return Ok(0.0);
    }
    let p = 0.5 * (nu + 1.0);
    let m = 0.5 * (nu - 1.0);
    Ok(p * p.log2() - m * m.log2())
}

/// Von Neumann entropy of a two-mode state.
pub fn entropy(g: &CovarianceMatrix) -> Result<f64> {
    let s = symplectic_spectrum(g)?;
    Ok(g_entropy(s.nu[0])? + g_entropy(s.nu[1])?)
}

/// Von Neumann entropy of a single-mode state.
pub fn entropy_single_mode(g: &SymMatrix<2>) -> Result<f64> {
    let d = g.det();
    if !(d > 0.0) || g[(0, 0)] <= 0.0 {
        return Err(Error::Unphysical(format!("single-mode CM with determinant {d}")));
    }
    g_entropy(d.sqrt())
}

/// `μ = 1/√det γ`.
pub fn purity(g: &CovarianceMatrix) -> Result<f64> {
    let d = g.det();
    if !(d > 0.0) {
        return Err(Error::Unphysical(format!("non-positive determinant {d}")));
    }
    Ok(1.0 / d.sqrt())
}

/// Logarithmic negativity in bits, from the partially transposed spectrum.
pub fn log_negativity(g: &CovarianceMatrix) -> Result<f64> {
    let s = symplectic_spectrum(&partial_transpose(g))?;
    Ok(s.nu.iter().map(|&nu| (-nu.log2()).max(0.0)).sum())
}

/// `S(B|A) = S(γ) - S(γ_A)`.
pub fn conditional_entropy(g: &CovarianceMatrix) -> Result<f64> {
    Ok(entropy(g)? - entropy_single_mode(&g.alice())?)
}

/// Outcome of [`repair`].
#[derive(Debug, Clone, Copy)]
pub struct Repair {
    pub repaired: CovarianceMatrix,
    pub delta: f64,
}

/// Adds the smallest multiple of the identity that makes `γ` physical.
///
/// The shift carries a few ulps of padding so the repaired `λ` never comes
/// out at `-1e-16` from eigensolver rounding.
pub fn repair(g: &CovarianceMatrix) -> Repair {
    let lambda = state_condition(g);
    if lambda >= 0.0 {
        return Repair { repaired: *g, delta: 0.0 };
    }
    let pad = 16.0 * f64::EPSILON * (1.0 + g.matrix().max_abs());
    let delta = -lambda + pad;
    Repair { repaired: g.shifted(delta), delta }
}

/// `a ⊕ b` as a covariance matrix.
pub fn product_state(a: &SymMatrix<2>, b: &SymMatrix<2>) -> CovarianceMatrix {
    CovarianceMatrix::from_computed(direct_sum(a.matrix(), b.matrix()))
}
