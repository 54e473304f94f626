use crate::detect::{detect, DetectionParams, PulseVector};
use crate::error::Result;
use crate::series::TimeSeries;
use crate::tunnel::{
    build_ipi, classify_outliers, fit_cubic, tunnel_edges, IpiSeries, OutlierReport, TunnelFit,
    TunnelPoint,
};

/// Everything the detector reports for one series.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub params: DetectionParams,
    pub pulses: PulseVector,
    /// `None` with fewer than two pulses.
    pub ipi: Option<IpiSeries>,
    pub tunnel: Option<TunnelFit>,
    pub edges: Vec<TunnelPoint>,
    pub outliers: OutlierReport,
}

/// Detection followed by the IPI tunnel and outlier classification.
pub fn analyze(series: &TimeSeries, params: &DetectionParams) -> Result<DetectionResult> {
    let pulses = detect(series, params)?;
    let mut result = DetectionResult {
        params: *params,
        pulses,
        ipi: None,
        tunnel: None,
        edges: Vec::new(),
        outliers: OutlierReport::default(),
    };
    if result.pulses.len() >= 2 {
        let ipi = build_ipi(series, &result.pulses)?;
        let fit = fit_cubic(&ipi, params.tunnel_lower_ratio, params.tunnel_upper_ratio)?;
        result.edges = tunnel_edges(&fit, &ipi);
        result.outliers = classify_outliers(&ipi, &fit);
        result.tunnel = Some(fit);
        result.ipi = Some(ipi);
    }
    Ok(result)
}
