//! Interpulse intervals, the cubic IPI trend and the confidence tunnel
//! around it.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::detect::PulseVector;
use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Interpulse intervals `theta_i = t(p_{i+1}) - t(p_i)` in minutes, each
/// anchored at the time of the later pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct IpiSeries {
    values: Vec<f64>,
    anchor_times: Vec<f64>,
    sampling_period: f64,
}

impl IpiSeries {
    pub fn new(values: Vec<f64>, anchor_times: Vec<f64>, sampling_period: f64) -> Result<Self> {
        if values.len() != anchor_times.len() {
            return Err(Error::InvalidConfig(format!(
                "{} intervals but {} anchors",
                values.len(),
                anchor_times.len()
            )));
        }
        if values.is_empty() {
            return Err(Error::TooFewPulses {
                found: 1,
                required: 2,
            });
        }
        Ok(Self {
            values,
            anchor_times,
            sampling_period,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn anchor_times(&self) -> &[f64] {
        &self.anchor_times
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Intervals in sample units (`theta_i / T_s`).
    pub fn in_samples(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|v| v / self.sampling_period)
            .collect()
    }

    /// Same anchors, every interval multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * factor).collect(),
            anchor_times: self.anchor_times.clone(),
            sampling_period: self.sampling_period,
        }
    }
}

pub fn build_ipi(series: &TimeSeries, pulses: &PulseVector) -> Result<IpiSeries> {
    let idx = pulses.indexes();
    if idx.len() < 2 {
        return Err(Error::TooFewPulses {
            found: idx.len(),
            required: 2,
        });
    }
    let times = series.times();
    if let Some(&bad) = idx.iter().find(|&&p| p >= times.len()) {
        return Err(Error::SeriesTooShort {
            len: times.len(),
            required: bad + 1,
        });
    }
    let values = idx.windows(2).map(|w| times[w[1]] - times[w[0]]).collect();
    let anchors = idx[1..].iter().map(|&p| times[p]).collect();
    IpiSeries::new(values, anchors, series.period())
}

/// Least-squares cubic `phi(x) = c0 + c1 x + c2 x^2 + c3 x^3` over the
/// centred index `x_i = i - n/2` (`i = 1..n`, `n` intervals), with the tunnel
/// ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TunnelFit {
    pub coeffs: [f64; 4],
    pub lower_ratio: f64,
    pub upper_ratio: f64,
    /// Number of fitted intervals.
    pub count: usize,
}

impl TunnelFit {
    /// Centred abscissa of the zero-based interval `j`.
    pub fn x(&self, j: usize) -> f64 {
        centred(j, self.count)
    }

    pub fn phi(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// Trend value at interval `j`.
    pub fn fitted(&self, j: usize) -> f64 {
        self.phi(self.x(j))
    }

    pub fn lower(&self, j: usize) -> f64 {
        (1.0 - self.lower_ratio) * self.fitted(j)
    }

    pub fn upper(&self, j: usize) -> f64 {
        (1.0 + self.upper_ratio) * self.fitted(j)
    }
}

fn centred(j: usize, count: usize) -> f64 {
    (j + 1) as f64 - count as f64 / 2.0
}

/// Fits the IPI trend. With fewer than four intervals the polynomial degree
/// drops to `n - 1`, so the fit interpolates and unused coefficients are zero.
pub fn fit_cubic(ipi: &IpiSeries, lower_ratio: f64, upper_ratio: f64) -> Result<TunnelFit> {
    let n = ipi.len();
    if n == 0 {
        return Err(Error::TooFewPulses {
            found: 1,
            required: 2,
        });
    }
    let terms = n.min(4);
    let xs: Vec<f64> = (0..n).map(|j| centred(j, n)).collect();
    // Scale the abscissa to [-1, 1] so the design matrix stays well conditioned.
    let scale = xs.iter().fold(0.0_f64, |m, x| m.max(x.abs())).max(0.5);
    let design = DMatrix::from_fn(n, terms, |r, c| (xs[r] / scale).powi(c as i32));
    let rhs = DVector::from_column_slice(ipi.values());
    let solution = design
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::InvalidConfig(format!("least squares failed: {e}")))?;
    let mut coeffs = [0.0; 4];
    for (k, c) in solution.iter().enumerate() {
        coeffs[k] = c / scale.powi(k as i32);
    }
    Ok(TunnelFit {
        coeffs,
        lower_ratio,
        upper_ratio,
        count: n,
    })
}

/// Tunnel vertex at one pulse time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TunnelPoint {
    pub time: f64,
    pub fit: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Vertices of the piecewise-linear tunnel edges, one per pulse from the
/// second to the last.
pub fn tunnel_edges(fit: &TunnelFit, ipi: &IpiSeries) -> Vec<TunnelPoint> {
    ipi.anchor_times()
        .iter()
        .enumerate()
        .map(|(j, &time)| TunnelPoint {
            time,
            fit: fit.fitted(j),
            lower: fit.lower(j),
            upper: fit.upper(j),
        })
        .collect()
}

/// Linear interpolation of the tunnel at time `t`; `None` outside the span
/// of its vertices.
pub fn tunnel_at(points: &[TunnelPoint], t: f64) -> Option<(f64, f64)> {
    let first = points.first()?;
    let last = points.last()?;
    if t < first.time || t > last.time {
        return None;
    }
    let k = points.partition_point(|p| p.time < t);
    if k == 0 {
        return Some((first.lower, first.upper));
    }
    let (a, b) = (points[k - 1], points[k]);
    let w = (t - a.time) / (b.time - a.time);
    Some((
        a.lower + w * (b.lower - a.lower),
        a.upper + w * (b.upper - a.upper),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutlierSide {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutlierTag {
    PossibleMissedPulse,
    PossibleOverDetection,
    PossibleRhythmBreak,
}

impl OutlierTag {
    pub fn as_str(self) -> &'static str {
        match self {
            OutlierTag::PossibleMissedPulse => "possible-missed-pulse",
            OutlierTag::PossibleOverDetection => "possible-over-detection",
            OutlierTag::PossibleRhythmBreak => "possible-rhythm-break",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    /// Zero-based interval index.
    pub ipi_index: usize,
    pub side: OutlierSide,
    pub tag: OutlierTag,
}

/// Intervals outside the tunnel, by zero-based interval index.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OutlierReport {
    pub upper: Vec<usize>,
    pub lower: Vec<usize>,
    pub diagnostics: Vec<Diagnostic>,
}

impl OutlierReport {
    pub fn is_empty(&self) -> bool {
        self.upper.is_empty() && self.lower.is_empty()
    }

    pub fn tag_of(&self, ipi_index: usize) -> Option<OutlierTag> {
        self.diagnostics
            .iter()
            .find(|d| d.ipi_index == ipi_index)
            .map(|d| d.tag)
    }
}

/// Ratio to the trend above which a long interval reads as one skipped pulse.
pub const MISSED_PULSE_RATIO: f64 = 1.7;
/// Ratio to the trend below which a short interval may be half of a split one.
pub const OVER_DETECTION_RATIO: f64 = 0.5;
/// Tolerance on `theta_i + theta_adjacent ~ phi` for a split interval.
pub const SPLIT_SUM_TOLERANCE: f64 = 0.25;

pub fn classify_outliers(ipi: &IpiSeries, fit: &TunnelFit) -> OutlierReport {
    let values = ipi.values();
    let mut report = OutlierReport::default();
    for (j, &theta) in values.iter().enumerate() {
        let trend = fit.fitted(j);
        if theta > fit.upper(j) {
            report.upper.push(j);
            let tag = if theta >= MISSED_PULSE_RATIO * trend {
                OutlierTag::PossibleMissedPulse
            } else {
                OutlierTag::PossibleRhythmBreak
            };
            report.diagnostics.push(Diagnostic {
                ipi_index: j,
                side: OutlierSide::Upper,
                tag,
            });
        } else if theta < fit.lower(j) {
            report.lower.push(j);
            let split = [j.checked_sub(1), Some(j + 1)]
                .into_iter()
                .flatten()
                .filter_map(|k| values.get(k))
                .any(|adj| (theta + adj - trend).abs() <= SPLIT_SUM_TOLERANCE * trend.abs());
            let tag = if theta <= OVER_DETECTION_RATIO * trend && split {
                OutlierTag::PossibleOverDetection
            } else {
                OutlierTag::PossibleRhythmBreak
            };
            report.diagnostics.push(Diagnostic {
                ipi_index: j,
                side: OutlierSide::Lower,
                tag,
            });
        }
    }
    report
}
