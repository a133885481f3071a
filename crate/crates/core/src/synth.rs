//! Synthetic states and simulated measurements.
//!
//! Entangled states are made by mixing two single-mode squeezed beams on a
//! balanced beamsplitter. One beam and vacuum gives the V class, two unequal
//! opposite squeezers the M class, two equal opposite squeezers the S class.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::{loss_channel, q_lower_bound, teleport_fidelity, Mode};
use crate::error::{Error, Result};
use crate::numcore::{cholesky, direct_sum, Mat2, Mat4, Matrix, SymMatrix};
use crate::state::{log_negativity, purity, CovarianceMatrix};
use crate::tomography::{exact_statistics, marginal, reconstruct, MeasurementSetting, SettingRecord, SettingStats, PTP_SETTINGS};

/// Which quadrature is squeezed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    X,
    P,
}

/// Single-mode squeezed state described in decibels relative to shot noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezedInput {
    pub squeezing_db: f64,
    pub antisqueezing_db: f64,
    pub orientation: Orientation,
    /// Extra rotation of the squeezing ellipse, degrees.
    #[serde(default)]
    pub tilt_deg: f64,
}

/// Decibels of squeezing for squeezing parameter `r` (pure state).
pub fn r_to_db(r: f64) -> f64 {
    20.0 * r / std::f64::consts::LN_10
}

impl SqueezedInput {
    pub fn new(squeezing_db: f64, antisqueezing_db: f64, orientation: Orientation) -> Result<Self> {
        let s = SqueezedInput { squeezing_db, antisqueezing_db, orientation, tilt_deg: 0.0 };
        s.validate()?;
        Ok(s)
    }

    pub fn vacuum() -> Self {
        SqueezedInput { squeezing_db: 0.0, antisqueezing_db: 0.0, orientation: Orientation::X, tilt_deg: 0.0 }
    }

    /// Pure squeezer with parameter `r`.
    pub fn pure(r: f64, orientation: Orientation) -> Result<Self> {
        let db = r_to_db(r);
        Self::new(db, db, orientation)
    }

    pub fn with_tilt(mut self, deg: f64) -> Self {
        self.tilt_deg = deg;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (s, a) = (self.squeezing_db, self.antisqueezing_db);
        if !(s.is_finite() && a.is_finite() && self.tilt_deg.is_finite()) || s < 0.0 || a < s {
            return Err(Error::InvalidParameter(format!(
                "squeezing {s} dB / antisqueezing {a} dB: need 0 <= squeezing <= antisqueezing"
            )));
        }
        Ok(())
    }

    pub fn is_vacuum(&self) -> bool {
        self.squeezing_db == 0.0 && self.antisqueezing_db == 0.0
    }

    pub fn cm(&self) -> Mat2 {
        let lo = 10f64.powf(-self.squeezing_db / 10.0);
        let hi = 10f64.powf(self.antisqueezing_db / 10.0);
        let d = match self.orientation {
            Orientation::X => Mat2::from_diag([lo, hi]),
            Orientation::P => Mat2::from_diag([hi, lo]),
        };
        if self.tilt_deg == 0.0 {
            return d;
        }
        let r = rotation2(self.tilt_deg);
        r * d * r.transpose()
    }
}

fn rotation2(deg: f64) -> Mat2 {
    let (s, c) = deg.to_radians().sin_cos();
    Matrix([[c, -s], [s, c]])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, PartialOrd, Ord)]
pub enum EntanglementClass {
    V,
    M,
    S,
}

impl std::fmt::Display for EntanglementClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EntanglementClass::V => "V",
            EntanglementClass::M => "M",
            EntanglementClass::S => "S",
        })
    }
}

impl std::str::FromStr for EntanglementClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "v" => Ok(EntanglementClass::V),
            "m" => Ok(EntanglementClass::M),
            "s" => Ok(EntanglementClass::S),
            other => Err(Error::Parse(format!("unknown class '{other}' (expected v, m or s)"))),
        }
    }
}

/// Default ratio of the weaker to the stronger squeezing parameter in the
/// M class.
pub const M_CLASS_RATIO: f64 = 0.5;

/// Recipe for a class state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub class: EntanglementClass,
    pub input1: SqueezedInput,
    pub input2: SqueezedInput,
    pub detection_efficiency: f64,
    /// `1` leaves the state as produced; smaller values add noise.
    pub target_purity: f64,
}

impl ClassSpec {
    /// Standard recipe: the first beam is x-squeezed, the second (if any)
    /// p-squeezed; the M-class second beam uses `m_ratio` of the decibels.
    pub fn new(
        class: EntanglementClass,
        squeezing_db: f64,
        antisqueezing_db: f64,
        eta: f64,
        mu: f64,
        m_ratio: f64,
    ) -> Result<Self> {
        let input1 = SqueezedInput::new(squeezing_db, antisqueezing_db, Orientation::X)?;
        let input2 = match class {
            EntanglementClass::V => SqueezedInput::vacuum(),
            EntanglementClass::S => SqueezedInput::new(squeezing_db, antisqueezing_db, Orientation::P)?,
            EntanglementClass::M => {
                if !(m_ratio > 0.0 && m_ratio < 1.0) {
                    return Err(Error::InvalidParameter(format!("M-class ratio {m_ratio} outside (0, 1)")));
                }
                SqueezedInput::new(m_ratio * squeezing_db, m_ratio * antisqueezing_db, Orientation::P)?
            }
        };
        let spec = ClassSpec { class, input1, input2, detection_efficiency: eta, target_purity: mu };
        spec.validate()?;
        Ok(spec)
    }

    /// Pure-input recipe parameterized by the squeezing parameter `r`.
    pub fn from_r(class: EntanglementClass, r: f64, eta: f64, mu: f64, m_ratio: f64) -> Result<Self> {
        let db = r_to_db(r);
        Self::new(class, db, db, eta, mu, m_ratio)
    }

    pub fn validate(&self) -> Result<()> {
        self.input1.validate()?;
        self.input2.validate()?;
        let eta = self.detection_efficiency;
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::InvalidParameter(format!("detection efficiency {eta} outside (0, 1]")));
        }
        let mu = self.target_purity;
        if !(mu > 0.0 && mu <= 1.0) {
            return Err(Error::InvalidParameter(format!("target purity {mu} outside (0, 1]")));
        }
        let (a, b) = (&self.input1, &self.input2);
        let opposite = a.orientation != b.orientation;
        let ok = match self.class {
            EntanglementClass::V => b.is_vacuum(),
            EntanglementClass::S => {
                opposite && a.squeezing_db == b.squeezing_db && a.antisqueezing_db == b.antisqueezing_db
            }
            EntanglementClass::M => {
                opposite
                    && !b.is_vacuum()
                    && (a.squeezing_db != b.squeezing_db || a.antisqueezing_db != b.antisqueezing_db)
            }
        };
        if !ok {
            return Err(Error::InvalidParameter(format!("inputs do not form a {}-class pair", self.class)));
        }
        Ok(())
    }
}

/// 50:50 mixing, `[[I, I], [-I, I]]/√2`.
pub fn beamsplitter_matrix() -> Mat4 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Matrix([
        [h, 0.0, h, 0.0],
        [0.0, h, 0.0, h],
        [-h, 0.0, h, 0.0],
        [0.0, -h, 0.0, h],
    ])
}

/// Mixes two single-mode states on a balanced beamsplitter.
pub fn balanced_beamsplitter(g1: &Mat2, g2: &Mat2) -> CovarianceMatrix {
    CovarianceMatrix::from_computed(direct_sum(g1, g2)).transformed(&beamsplitter_matrix())
}

/// Scales `γ` so its purity becomes `mu`. Purity can only be lowered.
pub fn set_purity(g: &CovarianceMatrix, mu: f64) -> Result<CovarianceMatrix> {
    let current = purity(g)?;
    if !(mu > 0.0) {
        return Err(Error::InvalidParameter(format!("target purity {mu} must be positive")));
    }
    if mu > current * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "target purity {mu} exceeds current purity {current}; scaling cannot purify"
        )));
    }
    Ok(g.scaled((current / mu).sqrt()))
}

/// Mix on the beamsplitter, apply detection loss to both modes, then lower
/// the purity if requested.
pub fn make_class_state(spec: &ClassSpec) -> Result<CovarianceMatrix> {
    spec.validate()?;
    let mut g = balanced_beamsplitter(&spec.input1.cm(), &spec.input2.cm());
    let eta = spec.detection_efficiency;
    if eta < 1.0 {
        let loss = loss_channel(Mode::Alice, eta)?.then(&loss_channel(Mode::Bob, eta)?);
        g = loss.apply(&g);
    }
    if spec.target_purity < 1.0 {
        g = set_purity(&g, spec.target_purity)?;
    }
    Ok(g)
}

/// Pure S-class state whose second squeezer is rotated by `tilt_deg` away
/// from the optimal orientation.
pub fn misaligned_s_class(db: f64, tilt_deg: f64) -> Result<CovarianceMatrix> {
    let a = SqueezedInput::new(db, db, Orientation::X)?;
    let b = SqueezedInput::new(db, db, Orientation::P)?.with_tilt(tilt_deg);
    Ok(balanced_beamsplitter(&a.cm(), &b.cm()))
}

/// Generator for the stream of one setting.
pub fn setting_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws `n` sample pairs for `setting` from the given generator.
pub fn sample_setting_with<R: Rng>(
    g: &CovarianceMatrix,
    setting: MeasurementSetting,
    n: usize,
    rng: &mut R,
) -> Result<SettingRecord> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 samples, got {n}")));
    }
    let m = marginal(g, setting.alice_deg, setting.bob_deg);
    let l = cholesky(&SymMatrix::new(m)?)?;
    let (l00, l10, l11) = (l[(0, 0)], l[(1, 0)], l[(1, 1)]);
    let mut alice = Vec::with_capacity(n);
    let mut bob = Vec::with_capacity(n);
    for _ in 0..n {
        let z0: f64 = rng.sample(StandardNormal);
        let z1: f64 = rng.sample(StandardNormal);
        alice.push(l00 * z0);
        bob.push(l10 * z0 + l11 * z1);
    }
    SettingRecord::new(setting, alice, bob)
}

/// Deterministic samples for one setting; the stream is the setting's
/// index in the protocol schedule.
pub fn sample_setting(g: &CovarianceMatrix, setting: MeasurementSetting, n: usize, seed: u64) -> Result<SettingRecord> {
    let stream = PTP_SETTINGS
        .iter()
        .position(|p| p.alice_deg == setting.alice_deg && p.bob_deg == setting.bob_deg)
        .unwrap_or(PTP_SETTINGS.len() + 1) as u64;
    sample_setting_with(g, setting, n, &mut setting_rng(seed, stream))
}

/// Stream used for the vacuum reference.
pub const VACUUM_STREAM: u64 = PTP_SETTINGS.len() as u64;

/// One simulated data run: five raw setting records and a raw vacuum
/// reference, all scaled by the detector gains.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub records: Vec<SettingRecord>,
    pub vacuum: SettingRecord,
}

/// Simulates the full schedule. Detector outputs are multiplied by
/// `gains = (alice, bob)` so calibration has something to undo.
pub fn simulate(g: &CovarianceMatrix, n: usize, seed: u64, gains: (f64, f64)) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 samples per setting, got {n}")));
    }
    if !(gains.0 > 0.0 && gains.1 > 0.0) {
        return Err(Error::InvalidParameter("detector gains must be positive".into()));
    }
    let scale = |r: SettingRecord| {
        SettingRecord::new(
            r.setting(),
            r.alice().iter().map(|x| x * gains.0).collect(),
            r.bob().iter().map(|x| x * gains.1).collect(),
        )
    };
    let records = PTP_SETTINGS
        .iter()
        .enumerate()
        .map(|(k, s)| scale(sample_setting_with(g, *s, n, &mut setting_rng(seed, k as u64))?))
        .collect::<Result<Vec<_>>>()?;
    let vac = sample_setting_with(
        &CovarianceMatrix::vacuum(),
        MeasurementSetting::new(0.0, 0.0),
        n,
        &mut setting_rng(seed, VACUUM_STREAM),
    )?;
    Ok(Dataset { records, vacuum: scale(vac)? })
}

/// Values along one offset axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Axis {
    pub fn fixed(v: f64) -> Self {
        Axis { min: v, max: v, step: 1.0 }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.min.is_finite() && self.max.is_finite()) || self.max < self.min || !(self.step > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "bad axis {}:{}:{}",
                self.min, self.max, self.step
            )));
        }
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize;
        if n > 100_000 {
            return Err(Error::InvalidParameter("axis has too many points".into()));
        }
        Ok((0..=n).map(|k| self.min + k as f64 * self.step).collect())
    }
}

/// Offsets, in degrees: `phi`/`theta` rotate every quadrature setting of
/// Alice/Bob, `xi`/`alpha` shift their 45° setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OffsetGrid {
    pub phi: Axis,
    pub theta: Axis,
    pub xi: Axis,
    pub alpha: Axis,
}

impl Default for OffsetGrid {
    fn default() -> Self {
        let span = Axis { min: -10.0, max: 10.0, step: 0.5 };
        OffsetGrid { phi: span.clone(), theta: span, xi: Axis::fixed(0.0), alpha: Axis::fixed(0.0) }
    }
}

impl OffsetGrid {
    pub fn zero() -> Self {
        OffsetGrid { phi: Axis::fixed(0.0), theta: Axis::fixed(0.0), xi: Axis::fixed(0.0), alpha: Axis::fixed(0.0) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfacePoint {
    pub phi: f64,
    pub theta: f64,
    pub xi: f64,
    pub alpha: f64,
    pub percent_error: f64,
}

/// CM inferred when the true angles carry the given offsets but
/// reconstruction assumes the nominal ones.
pub fn offset_reconstruction(g: &CovarianceMatrix, phi: f64, theta: f64, xi: f64, alpha: f64) -> Result<CovarianceMatrix> {
    let stats: Vec<SettingStats> = PTP_SETTINGS
        .iter()
        .map(|nominal| {
            let actual = if nominal.alice_deg == 45.0 {
                MeasurementSetting::new(45.0 + xi, 45.0 + alpha)
            } else {
                MeasurementSetting::new(nominal.alice_deg + phi, nominal.bob_deg + theta)
            };
            SettingStats { setting: *nominal, ..exact_statistics(g, actual) }
        })
        .collect();
    Ok(reconstruct(&stats)?.cm)
}

/// Percent error of the reconstructed log-negativity over the grid,
/// ordered with `phi` slowest and `alpha` fastest.
pub fn phase_error_surface(g: &CovarianceMatrix, grid: &OffsetGrid) -> Result<Vec<SurfacePoint>> {
    let e0 = log_negativity(g)?;
    if !(e0 > 0.0) {
        return Err(Error::InvalidParameter("reference state is not entangled".into()));
    }
    let (ps, ts, xs, al) = (grid.phi.values()?, grid.theta.values()?, grid.xi.values()?, grid.alpha.values()?);
    let mut out = Vec::with_capacity(ps.len() * ts.len() * xs.len() * al.len());
    for &phi in &ps {
        for &theta in &ts {
            for &xi in &xs {
                for &alpha in &al {
                    let h = offset_reconstruction(g, phi, theta, xi, alpha)?;
                    let e = log_negativity(&h)?;
                    out.push(SurfacePoint { phi, theta, xi, alpha, percent_error: 100.0 * (e - e0) / e0 });
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub class: EntanglementClass,
    pub mu: f64,
    pub r: f64,
    pub log_negativity: f64,
    pub q_lower_bound: f64,
    pub fidelity: f64,
}

/// Where `Q_L` stops being negative along a `(class, μ)` series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub class: EntanglementClass,
    pub mu: f64,
    pub r: Option<f64>,
    pub log_negativity: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    pub eta: f64,
    pub m_ratio: f64,
    pub r_max: f64,
    pub steps: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { eta: 1.0, m_ratio: M_CLASS_RATIO, r_max: 1.5, steps: 60 }
    }
}

/// Class state at squeezing parameter `r` and purity `mu`; `r = 0` is
/// vacuum (scaled to `mu`).
pub fn sweep_state(class: EntanglementClass, r: f64, mu: f64, opts: &SweepOptions) -> Result<CovarianceMatrix> {
    let g = if r == 0.0 {
        CovarianceMatrix::vacuum()
    } else {
        make_class_state(&ClassSpec::from_r(class, r, opts.eta, 1.0, opts.m_ratio)?)?
    };
    if mu < 1.0 {
        set_purity(&g, mu)
    } else {
        Ok(g)
    }
}

/// Grid rows plus one zero crossing per `(class, μ)`.
pub fn sweep(classes: &[EntanglementClass], purities: &[f64], opts: &SweepOptions) -> Result<(Vec<SweepRow>, Vec<Crossing>)> {
    if !(opts.r_max > 0.0) || opts.steps < 1 {
        return Err(Error::InvalidParameter("sweep needs r_max > 0 and at least one step".into()));
    }
    let mut rows = Vec::new();
    let mut crossings = Vec::new();
    for &class in classes {
        for &mu in purities {
            if !(mu > 0.0 && mu <= 1.0) {
                return Err(Error::InvalidParameter(format!("purity {mu} outside (0, 1]")));
            }
            for k in 1..=opts.steps {
                let r = opts.r_max * k as f64 / opts.steps as f64;
                let g = sweep_state(class, r, mu, opts)?;
                rows.push(SweepRow {
                    class,
                    mu,
                    r,
                    log_negativity: log_negativity(&g)?,
                    q_lower_bound: q_lower_bound(&g)?,
                    fidelity: teleport_fidelity(&g)?,
                });
            }
            crossings.push(zero_crossing(class, mu, opts)?);
        }
    }
    Ok((rows, crossings))
}

/// Bisection for the smallest `r` with `Q_L ≥ 0`. Entropies of nearly pure
/// modes are clamped to zero, so a strict test would stall at tiny `r`.
pub fn zero_crossing(class: EntanglementClass, mu: f64, opts: &SweepOptions) -> Result<Crossing> {
    let ql = |r: f64| -> Result<f64> { q_lower_bound(&sweep_state(class, r, mu, opts)?) };
    if ql(opts.r_max)? < 0.0 {
        return Ok(Crossing { class, mu, r: None, log_negativity: None });
    }
    let (mut lo, mut hi) = (0.0, opts.r_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ql(mid)? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    let en = log_negativity(&sweep_state(class, r, mu, opts)?)?;
    Ok(Crossing { class, mu, r: Some(r), log_negativity: Some(en) })
}

/// Symplectic phase rotation of one mode by `deg`.
pub fn local_rotation(mode: Mode, deg: f64) -> Mat4 {
    embed_local(mode, rotation2(deg))
}

/// Single-mode squeezer `diag(e^{-r}, e^{r})` on one mode.
pub fn local_squeezer(mode: Mode, r: f64) -> Mat4 {
    embed_local(mode, Mat2::from_diag([(-r).exp(), r.exp()]))
}

fn embed_local(mode: Mode, s: Mat2) -> Mat4 {
    match mode {
        Mode::Alice => direct_sum(&s, &Mat2::identity()),
        Mode::Bob => direct_sum(&Mat2::identity(), &s),
    }
}

/// Beamsplitter with mixing angle `theta` (radians).
pub fn beamsplitter(theta: f64) -> Mat4 {
    let (s, c) = theta.sin_cos();
    Matrix([
        [c, 0.0, s, 0.0],
        [0.0, c, 0.0, s],
        [-s, 0.0, c, 0.0],
        [0.0, -s, 0.0, c],
    ])
}

/// Two-mode squeezer with parameter `r`.
pub fn two_mode_squeezer(r: f64) -> Mat4 {
    let (c, s) = (r.cosh(), r.sinh());
    Matrix([
        [c, 0.0, s, 0.0],
        [0.0, c, 0.0, -s],
        [s, 0.0, c, 0.0],
        [0.0, -s, 0.0, c],
    ])
}

/// Random physical CM: a thermal product state conjugated by random local
/// rotations and squeezers, a beamsplitter, and a two-mode squeezer.
pub fn random_physical<R: Rng>(rng: &mut R) -> CovarianceMatrix {
    let nu = |rng: &mut R| if rng.random_bool(0.2) { 1.0 } else { 1.0 + 3.0 * rng.random::<f64>() };
    let (n1, n2) = (nu(rng), nu(rng));
    let mut s = Mat4::identity();
    let mut push = |m: Mat4| s = m * s;
    for mode in [Mode::Alice, Mode::Bob] {
        push(local_rotation(mode, 360.0 * rng.random::<f64>()));
        push(local_squeezer(mode, rng.random_range(-0.8..0.8)));
    }
    push(beamsplitter(std::f64::consts::PI * rng.random::<f64>()));
    push(two_mode_squeezer(rng.random_range(0.0..1.2)));
    for mode in [Mode::Alice, Mode::Bob] {
        push(local_rotation(mode, 360.0 * rng.random::<f64>()));
        push(local_squeezer(mode, rng.random_range(-0.6..0.6)));
        push(local_rotation(mode, 360.0 * rng.random::<f64>()));
    }
    CovarianceMatrix::from_computed(Mat4::from_diag([n1, n1, n2, n2])).transformed(&s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{omega, state_condition};
    use approx::assert_abs_diff_eq;

    #[test]
    fn vacuum_mixing_is_vacuum() {
        let g = balanced_beamsplitter(&Mat2::identity(), &Mat2::identity());
        assert!(g.max_abs_diff(&CovarianceMatrix::vacuum()) < 1e-15);
    }

    #[test]
    fn opposite_squeezers_make_tmsv() {
        let r = 0.5 * 3f64.acosh();
        let g = balanced_beamsplitter(
            &Mat2::from_diag([(-2.0 * r).exp(), (2.0 * r).exp()]),
            &Mat2::from_diag([(2.0 * r).exp(), (-2.0 * r).exp()]),
        );
        assert!(g.max_abs_diff(&CovarianceMatrix::tmsv_cosh(3.0).unwrap()) < 1e-12);
    }

    #[test]
    fn generators_are_symplectic() {
        let om = omega();
        for s in [
            beamsplitter_matrix(),
            beamsplitter(0.3),
            two_mode_squeezer(0.7),
            local_rotation(Mode::Bob, 33.0),
            local_squeezer(Mode::Alice, -0.4),
        ] {
            assert!((s * om * s.transpose() - om).max_abs() < 1e-12);
        }
    }

    #[test]
    fn class_state_examples() {
        let v = make_class_state(&ClassSpec::new(EntanglementClass::V, 0.0, 0.0, 1.0, 1.0, M_CLASS_RATIO).unwrap()).unwrap();
        assert!(v.max_abs_diff(&CovarianceMatrix::vacuum()) < 1e-15);

        let r = 0.5 * 3f64.acosh();
        let s = make_class_state(&ClassSpec::from_r(EntanglementClass::S, r, 1.0, 1.0, M_CLASS_RATIO).unwrap()).unwrap();
        assert!(s.max_abs_diff(&CovarianceMatrix::tmsv_cosh(3.0).unwrap()) < 1e-12);
    }

    #[test]
    fn class_invariants_enforced() {
        let x = SqueezedInput::new(4.0, 8.0, Orientation::X).unwrap();
        let bad = ClassSpec { class: EntanglementClass::S, input1: x, input2: x, detection_efficiency: 1.0, target_purity: 1.0 };
        assert!(bad.validate().is_err());
        assert!(SqueezedInput::new(4.0, 2.0, Orientation::X).is_err());
        assert!(ClassSpec::new(EntanglementClass::S, 4.0, 8.0, 0.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn set_purity_examples() {
        let v = CovarianceMatrix::vacuum();
        assert_eq!(set_purity(&v, 1.0).unwrap(), v);
        let g = set_purity(&v, 0.25).unwrap();
        assert!(g.max_abs_diff(&CovarianceMatrix::thermal(2.0).unwrap()) < 1e-15);
        assert!(set_purity(&CovarianceMatrix::thermal(2.0).unwrap(), 0.5).is_err());
    }

    #[test]
    fn lossy_class_state_is_physical_and_entangled() {
        let spec = ClassSpec::new(EntanglementClass::S, 4.0, 8.0, 0.87, 1.0, M_CLASS_RATIO).unwrap();
        let g = make_class_state(&spec).unwrap();
        assert!(state_condition(&g) >= -1e-9);
        assert!(crate::state::simon_lambda(&g) < 0.0);
    }

    #[test]
    fn sampling_is_deterministic() {
        let g = CovarianceMatrix::tmsv_cosh(3.0).unwrap();
        let a = sample_setting(&g, PTP_SETTINGS[2], 100, 7).unwrap();
        let b = sample_setting(&g, PTP_SETTINGS[2], 100, 7).unwrap();
        let c = sample_setting(&g, PTP_SETTINGS[2], 100, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(sample_setting(&g, PTP_SETTINGS[2], 0, 7).is_err());
    }

    #[test]
    fn zero_offsets_give_zero_error() {
        let g = misaligned_s_class(4.0, 30.0).unwrap();
        let pts = phase_error_surface(&g, &OffsetGrid::zero()).unwrap();
        assert_eq!(pts.len(), 1);
        assert!(pts[0].percent_error.abs() < 1e-9);
    }

    #[test]
    fn axis_values() {
        assert_eq!(Axis { min: -1.0, max: 1.0, step: 0.5 }.values().unwrap(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(Axis::fixed(3.0).values().unwrap(), vec![3.0]);
        assert!(Axis { min: 1.0, max: 0.0, step: 0.5 }.values().is_err());
    }

    #[test]
    fn pure_crossing_is_at_zero() {
        let c = zero_crossing(EntanglementClass::S, 1.0, &SweepOptions::default()).unwrap();
        assert!(c.log_negativity.unwrap() < 1e-9);
        let c = zero_crossing(EntanglementClass::S, 0.5, &SweepOptions::default()).unwrap();
        assert_abs_diff_eq!(c.log_negativity.unwrap(), 1.04103, epsilon = 1e-4);
    }
}
