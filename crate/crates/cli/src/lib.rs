//! Shared plumbing behind the `dynpeak` binary: the detection pipeline used
//! by both the command line and the local HTTP service.

pub mod service;

use serde::{Deserialize, Serialize};

use dynpeak::io::read_series;
use dynpeak::{analyze, DetectionParams, DetectionResult, DetectionResultDocument, Provenance};
use dynpeak::{Result, TimeSeries};

/// Optional overrides of the default detection parameters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamOverrides {
    pub tp: Option<f64>,
    pub lambda_r: Option<f64>,
    pub lambda_a: Option<f64>,
    pub lambda_3p: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
}

impl ParamOverrides {
    /// Defaults for the series' sampling period with the overrides applied.
    pub fn resolve(&self, series: &TimeSeries) -> Result<DetectionParams> {
        let d = DetectionParams::for_series(series);
        let params = DetectionParams {
            nominal_period: self.tp.unwrap_or(d.nominal_period),
            lambda_r: self.lambda_r.unwrap_or(d.lambda_r),
            lambda_a: self.lambda_a.unwrap_or(d.lambda_a),
            lambda_3p: self.lambda_3p.unwrap_or(d.lambda_3p),
            tunnel_lower_ratio: self.alpha.unwrap_or(d.tunnel_lower_ratio),
            tunnel_upper_ratio: self.beta.unwrap_or(d.tunnel_upper_ratio),
            ..d
        };
        params.validate()?;
        Ok(params)
    }
}

/// A finished detection run on one CSV input.
pub struct Run {
    pub series: TimeSeries,
    pub result: DetectionResult,
    pub document: DetectionResultDocument,
}

/// Parses `csv`, detects with the given overrides and builds the result
/// document. `seed` is recorded when the series is synthetic.
pub fn run_detection(csv: &[u8], overrides: &ParamOverrides, seed: Option<u64>) -> Result<Run> {
    let series = read_series(csv)?;
    run_on_series(series, csv, overrides, seed)
}

pub fn run_on_series(
    series: TimeSeries,
    csv: &[u8],
    overrides: &ParamOverrides,
    seed: Option<u64>,
) -> Result<Run> {
    let params = overrides.resolve(&series)?;
    let result = analyze(&series, &params)?;
    let document = DetectionResultDocument::new(&series, &result, Provenance::for_input(csv, seed));
    Ok(Run {
        series,
        result,
        document,
    })
}
