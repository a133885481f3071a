//! Gaussian channels acting on covariance matrices as `γ ↦ XᵀγX + Y`, and
//! the figures of merit of the teleportation channel set up by a shared
//! two-mode state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::{min_eig_hermitian, pinv, HermitianPair, Mat2, Mat4, Matrix, SymMatrix};
use crate::state::{
    entropy, entropy_single_mode, omega, CovarianceMatrix, PHYSICAL_TOL,
};

/// One of the two optical modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Alice,
    Bob,
}

impl Mode {
    fn offset(self) -> usize {
        match self {
            Mode::Alice => 0,
            Mode::Bob => 2,
        }
    }
}

/// Homodyne quadrature label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    X,
    P,
}

impl Quadrature {
    pub fn index(self) -> usize {
        match self {
            Quadrature::X => 0,
            Quadrature::P => 1,
        }
    }

    pub fn angle_deg(self) -> f64 {
        match self {
            Quadrature::X => 0.0,
            Quadrature::P => 90.0,
        }
    }
}

impl std::fmt::Display for Quadrature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Quadrature::X => "x",
            Quadrature::P => "p",
        })
    }
}

/// Gaussian channel `(X, Y)`. `Y` is symmetric but not required to be
/// positive: complete positivity is tested, not assumed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianChannel {
    x: Mat4,
    y: SymMatrix<4>,
}

/// Complete-positivity verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CpCheck {
    pub completely_positive: bool,
    pub margin: f64,
}

impl GaussianChannel {
    pub fn new(x: Mat4, y: Mat4) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::Parse("channel X has non-finite entries".into()));
        }
        Ok(GaussianChannel { x, y: SymMatrix::new_checked(y, 1e-9)? })
    }

    pub fn identity() -> Self {
        GaussianChannel { x: Mat4::identity(), y: SymMatrix::new(Mat4::zeros()).expect("zeros") }
    }

    pub fn x(&self) -> &Mat4 {
        &self.x
    }

    pub fn y(&self) -> &Mat4 {
        self.y.matrix()
    }

    /// `XᵀγX + Y`.
    pub fn apply(&self, g: &CovarianceMatrix) -> CovarianceMatrix {
        let m = self.x.transpose() * *g.matrix() * self.x + *self.y.matrix();
        CovarianceMatrix::from_computed(m)
    }

    /// Channel equivalent to applying `self` and then `next`.
    pub fn then(&self, next: &GaussianChannel) -> GaussianChannel {
        let x = self.x * next.x;
        let y = next.x.transpose() * *self.y.matrix() * next.x + *next.y.matrix();
        GaussianChannel { x, y: SymMatrix::new(y.symmetrized()).expect("finite") }
    }

    /// Minimum eigenvalue of `Y + iΩ - i XᵀΩX`; non-negative (to 1e-9) iff
    /// the channel is completely positive.
    pub fn cp_margin(&self) -> f64 {
        let k = omega() - self.x.transpose() * omega() * self.x;
        let h = HermitianPair::new(self.y, k).expect("difference of antisymmetric forms");
        min_eig_hermitian(&h)
    }

    pub fn is_completely_positive(&self) -> CpCheck {
        let margin = self.cp_margin();
        CpCheck { completely_positive: margin >= -PHYSICAL_TOL, margin }
    }
}

fn single_mode(mode: Mode, x_scale: f64, y_add: f64) -> GaussianChannel {
    let mut x = Mat4::identity();
    let mut y = Mat4::zeros();
    let o = mode.offset();
    for i in o..o + 2 {
        x[(i, i)] = x_scale;
        y[(i, i)] = y_add;
    }
    GaussianChannel { x, y: SymMatrix::new(y).expect("finite") }
}

/// Pure loss with transmissivity `η` on one mode.
pub fn loss_channel(mode: Mode, eta: f64) -> Result<GaussianChannel> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidParameter(format!("transmissivity {eta} outside [0, 1]")));
    }
    Ok(single_mode(mode, eta.sqrt(), 1.0 - eta))
}

/// Phase-insensitive amplifier with gain `G` at the quantum limit.
pub fn amplifier_channel(mode: Mode, gain: f64) -> Result<GaussianChannel> {
    if !(gain >= 1.0) || !gain.is_finite() {
        return Err(Error::InvalidParameter(format!("gain {gain} below 1")));
    }
    Ok(single_mode(mode, gain.sqrt(), gain - 1.0))
}

/// Additive classical Gaussian noise of variance `n` on one mode.
pub fn classical_noise_channel(mode: Mode, n: f64) -> Result<GaussianChannel> {
    if !(n >= 0.0) || !n.is_finite() {
        return Err(Error::InvalidParameter(format!("noise {n} is negative")));
    }
    Ok(single_mode(mode, 1.0, n))
}

/// Lower bound on the quantum capacity: `S(γ_A) - S(γ)`.
pub fn q_lower_bound(g: &CovarianceMatrix) -> Result<f64> {
    Ok(entropy_single_mode(&g.alice())? - entropy(g)?)
}

/// Reflection applied to Alice's block in the fidelity formula.
pub fn fidelity_reflection() -> Mat2 {
    Mat2::from_diag([-1.0, 1.0])
}

/// Coherent-state teleportation fidelity `F = 2/√det E`.
pub fn teleport_fidelity(g: &CovarianceMatrix) -> Result<f64> {
    let r = fidelity_reflection();
    let (a, b, c) = (g.a(), g.b(), g.c());
    let e = Mat2::identity().scale(2.0) + r * a * r.transpose() + r * c + c.transpose() * r.transpose() + b;
    let d = e.det();
    if !(d > 0.0) {
        return Err(Error::Unphysical(format!("fidelity matrix has determinant {d}")));
    }
    Ok(2.0 / d.sqrt())
}

/// CM of the unmeasured mode after homodyning `measured` at `angle_deg`.
/// The result does not depend on the measurement outcome.
pub fn condition_on_homodyne(
    g: &CovarianceMatrix,
    measured: Mode,
    angle_deg: f64,
) -> SymMatrix<2> {
    let (m, other, c) = match measured {
        Mode::Alice => (g.a(), g.b(), g.c()),
        Mode::Bob => (g.b(), g.a(), g.c().transpose()),
    };
    let th = angle_deg.to_radians();
    let u = [th.cos(), th.sin()];
    let proj = Mat2::from_fn(|i, j| u[i] * u[j]);
    let pmp = SymMatrix::new((proj * m * proj).symmetrized()).expect("finite block");
    let cond = other - c.transpose() * *pinv(&pmp).matrix() * c;
    SymMatrix::new(cond.symmetrized()).expect("finite block")
}

/// Shannon mutual information when both parties homodyne quadrature `q`.
pub fn homodyne_mutual_information(g: &CovarianceMatrix, q: Quadrature) -> Result<f64> {
    let i = q.index();
    let m = g.matrix();
    let (va, vb, c) = (m[(i, i)], m[(2 + i, 2 + i)], m[(i, 2 + i)]);
    let d = va * vb - c * c;
    if !(va > 0.0 && vb > 0.0 && d > 0.0) {
        return Err(Error::Unphysical(format!(
            "degenerate {q} statistics: V_A = {va}, V_B = {vb}, cov = {c}"
        )));
    }
    Ok(0.5 * (va * vb / d).log2())
}

/// Key rate with Alice's homodyne data as reference.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KeyRateBreakdown {
    pub quadrature: Quadrature,
    pub mutual_information: f64,
    pub holevo: f64,
    pub key_rate: f64,
    #[serde(serialize_with = "serialize_sym2")]
    pub conditional_cm: SymMatrix<2>,
}

fn serialize_sym2<S: serde::Serializer>(m: &SymMatrix<2>, s: S) -> std::result::Result<S::Ok, S::Error> {
    m.matrix().0.serialize(s)
}

/// Key rate for one quadrature choice.
pub fn key_rate_for(g: &CovarianceMatrix, q: Quadrature) -> Result<KeyRateBreakdown> {
    let info = homodyne_mutual_information(g, q)?;
    let cond = condition_on_homodyne(g, Mode::Alice, q.angle_deg());
    let holevo = entropy(g)? - entropy_single_mode(&cond)?;
    Ok(KeyRateBreakdown {
        quadrature: q,
        mutual_information: info,
        holevo,
        key_rate: info - holevo,
        conditional_cm: cond,
    })
}

/// `K = I_AB - χ(A:E)`, the better of the x and p choices. Negative rates
/// are returned as computed.
pub fn secret_key_rate(g: &CovarianceMatrix) -> Result<KeyRateBreakdown> {
    let kx = key_rate_for(g, Quadrature::X)?;
    let kp = key_rate_for(g, Quadrature::P)?;
    Ok(if kp.key_rate > kx.key_rate { kp } else { kx })
}

/// Rows of a matrix as nested arrays, for serialization.
pub(crate) fn rows4(m: &Mat4) -> [[f64; 4]; 4] {
    m.0
}

impl Serialize for GaussianChannel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        #[allow(non_snake_case)]
        struct Repr {
            X: [[f64; 4]; 4],
            Y: [[f64; 4]; 4],
        }
        Repr { X: rows4(&self.x), Y: rows4(self.y.matrix()) }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for GaussianChannel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[allow(non_snake_case)]
        struct Repr {
            X: [[f64; 4]; 4],
            Y: [[f64; 4]; 4],
        }
        let r = Repr::deserialize(d)?;
        GaussianChannel::new(Matrix(r.X), Matrix(r.Y)).map_err(serde::de::Error::custom)
    }
}
