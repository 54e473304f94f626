//! JSON result document with canonical formatting.
//!
//! Every float is rounded to six significant digits when the document is
//! built, so serialising, parsing and serialising again is byte-stable.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::DetectionResult;
use crate::detect::DetectionParams;
use crate::series::TimeSeries;
use crate::tunnel::{OutlierReport, TunnelPoint};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Rounds to six significant digits.
pub fn round_sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.5e}").parse().expect("formatted float parses")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseEntry {
    /// Zero-based sample index.
    pub index: usize,
    pub time_min: f64,
    pub lh_ng_ml: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IpiEntry {
    pub anchor_time_min: f64,
    pub ipi_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunnelDocument {
    /// Cubic coefficients over the centred interval index.
    pub coeffs: [f64; 4],
    pub lower_ratio: f64,
    pub upper_ratio: f64,
    pub edges: Vec<TunnelPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub input_sha256: String,
    pub tool_version: String,
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn for_input(input: &[u8], seed: Option<u64>) -> Self {
        Self {
            input_sha256: hex::encode(Sha256::digest(input)),
            tool_version: TOOL_VERSION.to_string(),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResultDocument {
    pub params: DetectionParams,
    pub pulses: Vec<PulseEntry>,
    pub ipi: Vec<IpiEntry>,
    pub tunnel: Option<TunnelDocument>,
    pub outliers: OutlierReport,
    pub provenance: Provenance,
}

impl DetectionResultDocument {
    pub fn new(series: &TimeSeries, result: &DetectionResult, provenance: Provenance) -> Self {
        let r = round_sig6;
        let p = &result.params;
        let params = DetectionParams {
            sampling_period: r(p.sampling_period),
            nominal_period: r(p.nominal_period),
            lambda_r: r(p.lambda_r),
            lambda_a: r(p.lambda_a),
            lambda_3p: r(p.lambda_3p),
            tunnel_lower_ratio: r(p.tunnel_lower_ratio),
            tunnel_upper_ratio: r(p.tunnel_upper_ratio),
        };
        let pulses = result
            .pulses
            .indexes()
            .iter()
            .map(|&i| PulseEntry {
                index: i,
                time_min: r(series.times()[i]),
                lh_ng_ml: r(series.values()[i]),
            })
            .collect();
        let ipi = result
            .ipi
            .as_ref()
            .map(|ipi| {
                ipi.anchor_times()
                    .iter()
                    .zip(ipi.values())
                    .map(|(&t, &v)| IpiEntry {
                        anchor_time_min: r(t),
                        ipi_min: r(v),
                    })
                    .collect()
            })
            .unwrap_or_default();
        let tunnel = result.tunnel.as_ref().map(|fit| TunnelDocument {
            coeffs: fit.coeffs.map(r),
            lower_ratio: r(fit.lower_ratio),
            upper_ratio: r(fit.upper_ratio),
            edges: result
                .edges
                .iter()
                .map(|e| TunnelPoint {
                    time: r(e.time),
                    fit: r(e.fit),
                    lower: r(e.lower),
                    upper: r(e.upper),
                })
                .collect(),
        });
        Self {
            params,
            pulses,
            ipi,
            tunnel,
            outliers: result.outliers.clone(),
            provenance,
        }
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}
