//! Table-style summaries of a covariance matrix.

use serde::Serialize;

use crate::channel::{q_lower_bound, secret_key_rate, teleport_fidelity, KeyRateBreakdown};
use crate::error::{Error, Result};
use crate::state::{
    is_physical, log_negativity, optimal_witness, purity, simon_lambda, state_condition,
    CovarianceMatrix, WitnessResult,
};

/// One value per reported channel quantity, in table row order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Quantities<T> {
    pub lambda: T,
    #[serde(rename = "lambda_TA")]
    pub lambda_ta: T,
    pub witness: T,
    pub log_negativity: T,
    pub q_lower_bound: T,
    pub fidelity: T,
    pub purity: T,
    pub key_rate: T,
}

pub const QUANTITY_NAMES: [&str; 8] = [
    "lambda",
    "lambda_TA",
    "witness",
    "log_negativity",
    "q_lower_bound",
    "fidelity",
    "purity",
    "key_rate",
];

impl<T> Quantities<T> {
    pub fn from_array([lambda, lambda_ta, witness, log_negativity, q_lower_bound, fidelity, purity, key_rate]: [T; 8]) -> Self {
        Quantities { lambda, lambda_ta, witness, log_negativity, q_lower_bound, fidelity, purity, key_rate }
    }

    pub fn into_array(self) -> [T; 8] {
        [
            self.lambda,
            self.lambda_ta,
            self.witness,
            self.log_negativity,
            self.q_lower_bound,
            self.fidelity,
            self.purity,
            self.key_rate,
        ]
    }

    pub fn map<U>(self, f: impl FnMut(T) -> U) -> Quantities<U> {
        Quantities::from_array(self.into_array().map(f))
    }
}

/// Every quantity of a single CM, plus the intermediate results.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub values: Quantities<Option<f64>>,
    pub physical: bool,
    pub witness: WitnessResult,
    pub key: Option<KeyRateBreakdown>,
    pub warnings: Vec<String>,
}

/// Evaluates every quantity. Entropic quantities of an unphysical CM are
/// left empty with a warning; internal inconsistencies abort.
pub fn evaluate(g: &CovarianceMatrix) -> Result<Evaluation> {
    let mut warnings = Vec::new();
    let lambda = state_condition(g);
    let physical = is_physical(g);
    if !physical {
        warnings.push(format!("unphysical covariance matrix: lambda = {lambda:.6e} < 0"));
    }
    let witness = optimal_witness(g);
    if !witness.converged {
        warnings.push(format!(
            "witness did not converge: bracket [{:.3e}, {:.3e}]",
            witness.bracket.0, witness.bracket.1
        ));
    }

    let mut soft = |name: &str, r: Result<f64>| -> Result<Option<f64>> {
        match r {
            Ok(v) if v.is_finite() => Ok(Some(v)),
            Ok(v) => {
                warnings.push(format!("{name} is not finite ({v})"));
                Ok(None)
            }
            Err(e) if e.is_internal() => Err(e),
            Err(e) => {
                warnings.push(format!("{name} unavailable: {e}"));
                Ok(None)
            }
        }
    };

    let log_neg = soft("log_negativity", log_negativity(g))?;
    let ql = soft("q_lower_bound", q_lower_bound(g))?;
    let fid = soft("fidelity", teleport_fidelity(g))?;
    let mu = soft("purity", purity(g))?;
    let key = match secret_key_rate(g) {
        Ok(k) => Some(k),
        Err(e) if e.is_internal() => return Err(e),
        Err(e) => {
            warnings.push(format!("key_rate unavailable: {e}"));
            None
        }
    };

    let values = Quantities {
        lambda: Some(lambda),
        lambda_ta: Some(simon_lambda(g)),
        witness: Some(witness.value),
        log_negativity: log_neg,
        q_lower_bound: ql,
        fidelity: fid,
        purity: mu,
        key_rate: key.map(|k| k.key_rate),
    };
    Ok(Evaluation { values, physical, witness, key, warnings })
}

/// Mean and symmetric confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub mean: f64,
    pub half_width: f64,
    pub standard_error: f64,
}

/// One table column: every quantity with the key-rate breakdown.
#[derive(Debug, Clone, Serialize)]
pub struct ChannelReport {
    #[serde(flatten)]
    pub values: Quantities<Option<f64>>,
    pub key_rate_quadrature: Option<String>,
    pub mutual_information: Option<f64>,
    pub holevo: Option<f64>,
    pub key_rate_kbit_s: Option<f64>,
    pub intervals: Option<Quantities<Option<Interval>>>,
}

impl ChannelReport {
    pub fn from_evaluation(ev: &Evaluation, bandwidth_khz: f64) -> Self {
        ChannelReport {
            values: ev.values,
            key_rate_quadrature: ev.key.map(|k| k.quadrature.to_string()),
            mutual_information: ev.key.map(|k| k.mutual_information),
            holevo: ev.key.map(|k| k.holevo),
            key_rate_kbit_s: ev.key.map(|k| k.key_rate * bandwidth_khz),
            intervals: None,
        }
    }
}

/// Top-level JSON document written by the command-line tool.
#[derive(Debug, Clone, Serialize)]
pub struct ReportDocument {
    pub tool: String,
    pub version: String,
    pub seed: Option<u64>,
    pub input: String,
    pub physical: bool,
    pub repaired_delta: Option<f64>,
    pub covariance_matrix: [[f64; 4]; 4],
    pub report: ChannelReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tomography: Option<serde_json::Value>,
    pub warnings: Vec<String>,
}

impl ReportDocument {
    pub fn new(input: impl Into<String>, g: &CovarianceMatrix, report: ChannelReport, physical: bool) -> Self {
        ReportDocument {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: None,
            input: input.into(),
            physical,
            repaired_delta: None,
            covariance_matrix: g.rows(),
            report,
            tomography: None,
            warnings: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(Error::from)
    }

    /// Aligned plain-text table in the usual row order.
    pub fn to_table(&self) -> String {
        let labels = ["lambda", "lambda^TA", "W", "E_N", "Q_L", "F", "mu", "K"];
        let values = self.report.values.into_array();
        let intervals = self.report.intervals.map(|q| q.into_array());
        let mut out = String::new();
        for (i, label) in labels.iter().enumerate() {
            let v = values[i].map_or_else(|| "n/a".to_string(), |v| format!("{v:>9.4}"));
            let ci = intervals
                .and_then(|iv| iv[i])
                .map(|iv| format!("  ± {:.4}", iv.half_width))
                .unwrap_or_default();
            out.push_str(&format!("{label:<10} {v}{ci}\n"));
        }
        if let (Some(q), Some(kbit)) = (&self.report.key_rate_quadrature, self.report.key_rate_kbit_s) {
            out.push_str(&format!("{:<10} {kbit:>9.2} kbit/s ({q} quadrature)\n", ""));
        }
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out
    }
}
