//! Five-setting homodyne tomography of a two-mode covariance matrix.
//!
//! Each setting fixes one local-oscillator angle per party (0° = x,
//! 90° = p). Four settings pair pure quadratures and give every variance and
//! every correlation; the fifth measures both parties at 45°, which yields
//! the local x–p covariances and a redundant check on the correlations.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::numcore::{Mat2, Mat4};
use crate::report::{evaluate, Interval, Quantities};
use crate::state::CovarianceMatrix;

/// Local-oscillator angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSetting {
    pub alice_deg: f64,
    pub bob_deg: f64,
}

impl MeasurementSetting {
    pub const fn new(alice_deg: f64, bob_deg: f64) -> Self {
        MeasurementSetting { alice_deg, bob_deg }
    }

    fn matches(&self, other: &MeasurementSetting) -> bool {
        (self.alice_deg - other.alice_deg).abs() < 1e-9 && (self.bob_deg - other.bob_deg).abs() < 1e-9
    }
}

/// The canonical schedule, in protocol order.
pub const PTP_SETTINGS: [MeasurementSetting; 5] = [
    MeasurementSetting::new(0.0, 90.0),
    MeasurementSetting::new(90.0, 0.0),
    MeasurementSetting::new(0.0, 0.0),
    MeasurementSetting::new(90.0, 90.0),
    MeasurementSetting::new(45.0, 45.0),
];

/// Paired quadrature samples from one setting.
#[derive(Debug, Clone, PartialEq)]
pub struct SettingRecord {
    setting: MeasurementSetting,
    alice: Vec<f64>,
    bob: Vec<f64>,
}

impl SettingRecord {
    pub fn new(setting: MeasurementSetting, alice: Vec<f64>, bob: Vec<f64>) -> Result<Self> {
        if alice.len() != bob.len() {
            return Err(Error::Parse(format!(
                "unequal sample counts: {} for Alice, {} for Bob",
                alice.len(),
                bob.len()
            )));
        }
        if alice.len() < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 samples, got {}", alice.len())));
        }
        if let Some(i) = alice.iter().chain(bob.iter()).position(|v| !v.is_finite()) {
            return Err(Error::Parse(format!("non-finite sample at position {}", i % alice.len())));
        }
        Ok(SettingRecord { setting, alice, bob })
    }

    pub fn setting(&self) -> MeasurementSetting {
        self.setting
    }

    pub fn alice(&self) -> &[f64] {
        &self.alice
    }

    pub fn bob(&self) -> &[f64] {
        &self.bob
    }

    pub fn len(&self) -> usize {
        self.alice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alice.is_empty()
    }

    /// Contiguous sub-record `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> Result<SettingRecord> {
        SettingRecord::new(
            self.setting,
            self.alice[start..start + len].to_vec(),
            self.bob[start..start + len].to_vec(),
        )
    }
}

/// Second moments of one setting. `count == 0` marks exact (noise-free)
/// moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SettingStats {
    pub setting: MeasurementSetting,
    pub var_a: f64,
    pub var_b: f64,
    pub cov_ab: f64,
    pub count: usize,
}

impl SettingStats {
    fn weight(&self) -> f64 {
        self.count.max(1) as f64
    }

    /// Sampling variance of the covariance estimate (zero when exact).
    fn cov_variance(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.var_a * self.var_b + self.cov_ab * self.cov_ab) / self.count as f64
        }
    }

    fn var_variance(v: f64, count: usize) -> f64 {
        if count < 2 {
            0.0
        } else {
            2.0 * v * v / (count - 1) as f64
        }
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variances and covariance.
pub fn setting_statistics(rec: &SettingRecord) -> SettingStats {
    let n = rec.len();
    let (ma, mb) = (mean(&rec.alice), mean(&rec.bob));
    let (mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0);
    for (a, b) in rec.alice.iter().zip(&rec.bob) {
        let (da, db) = (a - ma, b - mb);
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    let d = (n - 1) as f64;
    SettingStats { setting: rec.setting, var_a: saa / d, var_b: sbb / d, cov_ab: sab / d, count: n }
}

/// Unit quadrature direction for an angle in degrees.
fn direction(deg: f64) -> [f64; 2] {
    let t = deg.to_radians();
    [t.cos(), t.sin()]
}

/// 2×2 CM of the pair of quadratures measured at the given angles.
pub fn marginal(g: &CovarianceMatrix, alice_deg: f64, bob_deg: f64) -> Mat2 {
    let (u, v) = (direction(alice_deg), direction(bob_deg));
    let a = [u[0], u[1], 0.0, 0.0];
    let b = [0.0, 0.0, v[0], v[1]];
    let m: &Mat4 = g.matrix();
    let mb = m.mul_vec(&b);
    let cross: f64 = (0..4).map(|i| a[i] * mb[i]).sum();
    crate::numcore::Matrix([[m.quad_form(&a), cross], [cross, m.quad_form(&b)]])
}

/// Noise-free moments of one setting.
pub fn exact_statistics(g: &CovarianceMatrix, setting: MeasurementSetting) -> SettingStats {
    let m = marginal(g, setting.alice_deg, setting.bob_deg);
    SettingStats { setting, var_a: m[(0, 0)], var_b: m[(1, 1)], cov_ab: m[(0, 1)], count: 0 }
}

/// Normalizes each detector by the vacuum reference so the shot noise has
/// unit variance.
pub fn calibrate(raw: &SettingRecord, vacuum: &SettingRecord) -> Result<SettingRecord> {
    let st = setting_statistics(vacuum);
    for (who, v) in [("Alice", st.var_a), ("Bob", st.var_b)] {
        if !(v > 0.0) {
            return Err(Error::InvalidParameter(format!("vacuum reference variance for {who} is {v}")));
        }
    }
    let (sa, sb) = (st.var_a.sqrt(), st.var_b.sqrt());
    SettingRecord::new(
        raw.setting,
        raw.alice.iter().map(|x| x / sa).collect(),
        raw.bob.iter().map(|x| x / sb).collect(),
    )
}

/// Reconstructed CM with its consistency diagnostics.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Reconstruction {
    #[serde(serialize_with = "serialize_cm")]
    pub cm: CovarianceMatrix,
    /// Per-entry sampling standard errors (zero for exact moments).
    pub standard_errors: [[f64; 4]; 4],
    /// `|cov(45,45) - (C_xx + C_xp + C_px + C_pp)/2|`.
    pub residual: f64,
    pub residual_se: f64,
    /// Residual exceeds five standard errors.
    pub basis_inconsistent: bool,
}

fn serialize_cm<S: serde::Serializer>(g: &CovarianceMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    g.rows().serialize(s)
}

/// Residuals larger than this many standard errors are flagged.
pub const RESIDUAL_SIGMAS: f64 = 5.0;

/// Combines duplicates of one setting, weighted by sample count.
fn pooled(stats: &[SettingStats], setting: MeasurementSetting) -> Result<SettingStats> {
    let same: Vec<&SettingStats> = stats.iter().filter(|s| s.setting.matches(&setting)).collect();
    if same.is_empty() {
        return Err(Error::MissingSetting { alice: setting.alice_deg, bob: setting.bob_deg });
    }
    if same.len() == 1 {
        return Ok(*same[0]);
    }
    let w: f64 = same.iter().map(|s| s.weight()).sum();
    let avg = |f: fn(&SettingStats) -> f64| same.iter().map(|s| s.weight() * f(s)).sum::<f64>() / w;
    let exact = same.iter().any(|s| s.count == 0);
    Ok(SettingStats {
        setting,
        var_a: avg(|s| s.var_a),
        var_b: avg(|s| s.var_b),
        cov_ab: avg(|s| s.cov_ab),
        count: if exact { 0 } else { same.iter().map(|s| s.count).sum() },
    })
}

/// Count-weighted mean of two variance estimates and its sampling variance.
fn combine_variances(p: (f64, usize), q: (f64, usize)) -> (f64, f64) {
    let (wp, wq) = (p.1.max(1) as f64, q.1.max(1) as f64);
    let w = wp + wq;
    let v = (wp * p.0 + wq * q.0) / w;
    let var = (wp * wp * SettingStats::var_variance(p.0, p.1) + wq * wq * SettingStats::var_variance(q.0, q.1)) / (w * w);
    (v, var)
}

/// Inverts the five-setting moment map.
pub fn reconstruct(stats: &[SettingStats]) -> Result<Reconstruction> {
    for s in stats {
        if !PTP_SETTINGS.iter().any(|p| p.matches(&s.setting)) {
            return Err(Error::InvalidParameter(format!(
                "setting ({}, {}) is not part of the protocol",
                s.setting.alice_deg, s.setting.bob_deg
            )));
        }
    }
    let [s1, s2, s3, s4, s5] = {
        let mut out = [None; 5];
        for (k, p) in PTP_SETTINGS.iter().enumerate() {
            out[k] = Some(pooled(stats, *p)?);
        }
        out.map(|s| s.expect("filled above"))
    };

    // Alice x: settings 1 and 3; Alice p: 2 and 4; Bob x: 2 and 3; Bob p: 1 and 4.
    let (vxa, vxa_v) = combine_variances((s1.var_a, s1.count), (s3.var_a, s3.count));
    let (vpa, vpa_v) = combine_variances((s2.var_a, s2.count), (s4.var_a, s4.count));
    let (vxb, vxb_v) = combine_variances((s2.var_b, s2.count), (s3.var_b, s3.count));
    let (vpb, vpb_v) = combine_variances((s1.var_b, s1.count), (s4.var_b, s4.count));

    let (cxx, cxp, cpx, cpp) = (s3.cov_ab, s1.cov_ab, s2.cov_ab, s4.cov_ab);
    let la = s5.var_a - 0.5 * (vxa + vpa);
    let lb = s5.var_b - 0.5 * (vxb + vpb);
    let la_v = SettingStats::var_variance(s5.var_a, s5.count) + 0.25 * (vxa_v + vpa_v);
    let lb_v = SettingStats::var_variance(s5.var_b, s5.count) + 0.25 * (vxb_v + vpb_v);

    let rows = [
        [vxa, la, cxx, cxp],
        [la, vpa, cpx, cpp],
        [cxx, cpx, vxb, lb],
        [cxp, cpp, lb, vpb],
    ];
    let (ecxx, ecxp, ecpx, ecpp) =
        (s3.cov_variance(), s1.cov_variance(), s2.cov_variance(), s4.cov_variance());
    let var_rows = [
        [vxa_v, la_v, ecxx, ecxp],
        [la_v, vpa_v, ecpx, ecpp],
        [ecxx, ecpx, vxb_v, lb_v],
        [ecxp, ecpp, lb_v, vpb_v],
    ];
    let cm = CovarianceMatrix::from_rows(rows)?;

    let residual = (s5.cov_ab - 0.5 * (cxx + cxp + cpx + cpp)).abs();
    let residual_se = (s5.cov_variance() + 0.25 * (ecxx + ecxp + ecpx + ecpp)).sqrt();
    let floor = 1e-12 * (1.0 + cm.matrix().max_abs());
    Ok(Reconstruction {
        cm,
        standard_errors: var_rows.map(|r| r.map(f64::sqrt)),
        residual,
        residual_se,
        basis_inconsistent: residual > RESIDUAL_SIGMAS * residual_se + floor,
    })
}

/// Calibrates (when a vacuum reference is given), then reconstructs.
///
/// With a vacuum reference the standard errors also carry the first-order
/// uncertainty of the two shot-noise variances.
pub fn reconstruct_records(records: &[SettingRecord], vacuum: Option<&SettingRecord>) -> Result<Reconstruction> {
    let stats = records
        .iter()
        .map(|r| match vacuum {
            Some(v) => calibrate(r, v).map(|c| setting_statistics(&c)),
            None => Ok(setting_statistics(r)),
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rec = reconstruct(&stats)?;
    if let Some(v) = vacuum {
        // Relative variance of each shot-noise variance estimate.
        let rv = 2.0 / (v.len() - 1) as f64;
        let m = *rec.cm.matrix();
        for i in 0..4 {
            for j in 0..4 {
                let rel = if i / 2 == j / 2 { rv } else { 0.5 * rv };
                let se = rec.standard_errors[i][j];
                rec.standard_errors[i][j] = (se * se + m[(i, j)] * m[(i, j)] * rel).sqrt();
            }
        }
    }
    Ok(rec)
}

#[derive(Debug, Clone, Copy)]
pub struct BootstrapOptions {
    pub blocks: usize,
    pub confidence: f64,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        BootstrapOptions { blocks: 10, confidence: 0.95 }
    }
}

/// Block-bootstrap summary.
#[derive(Debug, Clone, Serialize)]
pub struct BootstrapReport {
    #[serde(serialize_with = "serialize_cm")]
    pub mean_cm: CovarianceMatrix,
    /// Standard error of each block-mean CM entry.
    pub entry_standard_errors: [[f64; 4]; 4],
    /// Confidence half-width of each CM entry.
    pub entry_half_widths: [[f64; 4]; 4],
    pub quantities: Quantities<Option<Interval>>,
    pub blocks: usize,
    pub block_size: usize,
    pub confidence: f64,
    pub z: f64,
    pub warnings: Vec<String>,
}

/// Running mean and spread, exact for constant input.
#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn sample_sd(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2.max(0.0) / (self.n - 1) as f64).sqrt()
        }
    }
}

/// Two-sided normal quantile for the given confidence level.
pub fn normal_quantile(confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidParameter(format!("confidence {confidence} outside (0, 1)")));
    }
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(n.inverse_cdf(0.5 + 0.5 * confidence))
}

/// Splits every record (and the vacuum reference) into contiguous blocks,
/// reconstructs and evaluates each block, and reports normal-approximation
/// confidence intervals of the block means.
pub fn bootstrap(
    records: &[SettingRecord],
    vacuum: Option<&SettingRecord>,
    opts: &BootstrapOptions,
) -> Result<BootstrapReport> {
    if opts.blocks < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 blocks, got {}", opts.blocks)));
    }
    let z = normal_quantile(opts.confidence)?;
    let shortest = records
        .iter()
        .map(SettingRecord::len)
        .min()
        .ok_or_else(|| Error::InvalidParameter("no records".into()))?;
    let block_size = shortest / opts.blocks;
    if block_size < 2 {
        return Err(Error::InvalidParameter(format!(
            "{shortest} samples cannot fill {} blocks of at least 2",
            opts.blocks
        )));
    }
    let vac_block = match vacuum {
        Some(v) if v.len() / opts.blocks < 2 => {
            return Err(Error::InvalidParameter("vacuum reference too short for blocking".into()))
        }
        Some(v) => v.len() / opts.blocks,
        None => 0,
    };

    let mut entries = [[Welford::default(); 4]; 4];
    let mut quantities = [Welford::default(); 8];
    let mut missing = [false; 8];
    let mut warnings = Vec::new();
    for k in 0..opts.blocks {
        let vac = vacuum.map(|v| v.slice(k * vac_block, vac_block)).transpose()?;
        let block: Vec<SettingRecord> = records
            .iter()
            .map(|r| r.slice(k * block_size, block_size))
            .collect::<Result<_>>()?;
        let rec = reconstruct_records(&block, vac.as_ref())?;
        for (i, row) in rec.cm.rows().iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                entries[i][j].push(*v);
            }
        }
        let ev = evaluate(&rec.cm)?;
        for w in ev.warnings {
            warnings.push(format!("block {k}: {w}"));
        }
        for (q, v) in ev.values.into_array().into_iter().enumerate() {
            match v {
                Some(v) => quantities[q].push(v),
                None => missing[q] = true,
            }
        }
    }

    let sqrt_b = (opts.blocks as f64).sqrt();
    let mean_rows = entries.map(|r| r.map(|w| w.mean));
    let se_rows = entries.map(|r| r.map(|w| w.sample_sd() / sqrt_b));
    let intervals: [Option<Interval>; 8] = std::array::from_fn(|q| {
        (!missing[q]).then(|| {
            let se = quantities[q].sample_sd() / sqrt_b;
            Interval { mean: quantities[q].mean, half_width: z * se, standard_error: se }
        })
    });

    Ok(BootstrapReport {
        mean_cm: CovarianceMatrix::from_rows(mean_rows)?,
        entry_standard_errors: se_rows,
        entry_half_widths: se_rows.map(|r| r.map(|s| z * s)),
        quantities: Quantities::from_array(intervals),
        blocks: opts.blocks,
        block_size,
        confidence: opts.confidence,
        z,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn exact_all(g: &CovarianceMatrix) -> Vec<SettingStats> {
        PTP_SETTINGS.iter().map(|s| exact_statistics(g, *s)).collect()
    }

    #[test]
    fn constant_sequences_have_zero_variance() {
        let rec = SettingRecord::new(PTP_SETTINGS[0], vec![1.5; 10], vec![-2.0; 10]).unwrap();
        let st = setting_statistics(&rec);
        assert_eq!((st.var_a, st.var_b, st.cov_ab), (0.0, 0.0, 0.0));
    }

    #[test]
    fn identical_channels_have_cov_equal_var() {
        let xs: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let st = setting_statistics(&SettingRecord::new(PTP_SETTINGS[2], xs.clone(), xs).unwrap());
        assert_eq!(st.cov_ab, st.var_a);
        assert_eq!(st.var_a, st.var_b);
    }

    #[test]
    fn record_validation() {
        assert!(SettingRecord::new(PTP_SETTINGS[0], vec![1.0, 2.0], vec![1.0]).is_err());
        assert!(SettingRecord::new(PTP_SETTINGS[0], vec![1.0], vec![1.0]).is_err());
        assert!(SettingRecord::new(PTP_SETTINGS[0], vec![1.0, f64::NAN], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn calibration_scales_to_reference() {
        let vac = SettingRecord::new(PTP_SETTINGS[0], vec![1.0, -1.0, 1.0, -1.0], vec![2.0, -2.0, 2.0, -2.0]).unwrap();
        let c = calibrate(&vac, &vac).unwrap();
        let st = setting_statistics(&c);
        assert_abs_diff_eq!(st.var_a, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(st.var_b, 1.0, epsilon = 1e-15);

        let raw = SettingRecord::new(PTP_SETTINGS[0], vec![2.0, -2.0, 2.0, -2.0], vec![4.0, -4.0, 4.0, -4.0]).unwrap();
        let st = setting_statistics(&calibrate(&raw, &vac).unwrap());
        assert_abs_diff_eq!(st.var_a, 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(st.var_b, 4.0, epsilon = 1e-14);

        let dead = SettingRecord::new(PTP_SETTINGS[0], vec![0.0; 4], vec![1.0, -1.0, 1.0, -1.0]).unwrap();
        assert!(calibrate(&raw, &dead).is_err());
    }

    #[test]
    fn exact_round_trip() {
        let g = CovarianceMatrix::from_rows([
            [2.0, 0.3, 1.1, -0.2],
            [0.3, 1.7, 0.4, -0.9],
            [1.1, 0.4, 2.2, 0.15],
            [-0.2, -0.9, 0.15, 1.9],
        ])
        .unwrap();
        let r = reconstruct(&exact_all(&g)).unwrap();
        assert!(r.cm.max_abs_diff(&g) < 1e-12);
        assert!(r.residual < 1e-12);
        assert!(!r.basis_inconsistent);
    }

    #[test]
    fn missing_setting_is_reported() {
        let g = CovarianceMatrix::vacuum();
        let mut st = exact_all(&g);
        st.remove(4);
        assert!(matches!(reconstruct(&st), Err(Error::MissingSetting { alice, bob }) if alice == 45.0 && bob == 45.0));
    }

    #[test]
    fn duplicates_are_pooled_by_count() {
        let g = CovarianceMatrix::vacuum();
        let mut st: Vec<SettingStats> = exact_all(&g).into_iter().map(|s| SettingStats { count: 100, ..s }).collect();
        st.push(SettingStats { var_a: 4.0, count: 300, ..st[2] });
        let r = reconstruct(&st).unwrap();
        // (0,0) pooled var_a = (100·1 + 300·4)/400 = 3.25; x_A combines with (0,90).
        assert_abs_diff_eq!(r.cm.matrix()[(0, 0)], (100.0 * 1.0 + 400.0 * 3.25) / 500.0, epsilon = 1e-12);
    }

    #[test]
    fn normal_quantile_at_95() {
        assert_abs_diff_eq!(normal_quantile(0.95).unwrap(), 1.959964, epsilon = 1e-6);
        assert!(normal_quantile(1.0).is_err());
    }

    #[test]
    fn identical_blocks_give_zero_width() {
        let base: Vec<(f64, f64)> = (0..20).map(|i| ((i as f64 * 0.7).sin() * 1.3, (i as f64 * 1.1).cos())).collect();
        let records: Vec<SettingRecord> = PTP_SETTINGS
            .iter()
            .map(|s| {
                let rep: Vec<(f64, f64)> = (0..10).flat_map(|_| base.iter().copied()).collect();
                SettingRecord::new(*s, rep.iter().map(|p| p.0).collect(), rep.iter().map(|p| p.1).collect()).unwrap()
            })
            .collect();
        let rep = bootstrap(&records, None, &BootstrapOptions::default()).unwrap();
        assert_eq!(rep.block_size, 20);
        assert!(rep.entry_half_widths.iter().flatten().all(|&w| w == 0.0));
        for iv in rep.quantities.into_array().into_iter().flatten() {
            assert_eq!(iv.half_width, 0.0);
        }
    }

    #[test]
    fn bootstrap_rejects_single_block() {
        let rec = SettingRecord::new(PTP_SETTINGS[0], vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]).unwrap();
        let opts = BootstrapOptions { blocks: 1, ..Default::default() };
        assert!(bootstrap(&[rec], None, &opts).is_err());
    }
}
