//! Uniformly sampled hormone series.

use crate::error::{Error, Result};

/// Samples `(t_i, A_i)` taken every `period` minutes starting at `start`.
///
/// Times are stored explicitly so that a series read from disk keeps the
/// exact values of its file. Synthetic series additionally carry the
/// effective (jittered) sampling times.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    times: Vec<f64>,
    values: Vec<f64>,
    period: f64,
    effective_times: Option<Vec<f64>>,
}

impl TimeSeries {
    /// Builds a series on the grid `start + period * i`.
    pub fn from_grid(start: f64, period: f64, values: Vec<f64>) -> Result<Self> {
        let times = (0..values.len())
            .map(|i| start + period * i as f64)
            .collect();
        Self::new(times, values, period)
    }

    pub fn new(times: Vec<f64>, values: Vec<f64>, period: f64) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "period",
                message: format!("sampling period must be positive, got {period}"),
            });
        }
        if times.len() != values.len() {
            return Err(Error::InvalidConfig(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if values.is_empty() {
            return Err(Error::SeriesTooShort {
                len: 0,
                required: 1,
            });
        }
        if let Some(w) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::NonMonotoneTime {
                line: w as u64 + 2,
                time: times[w + 1],
            });
        }
        if let Some((i, &v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= 0.0) || !v.is_finite())
        {
            return Err(Error::NegativeValue {
                line: i as u64 + 1,
                value: v,
            });
        }
        Ok(Self {
            times,
            values,
            period,
            effective_times: None,
        })
    }

    pub(crate) fn with_effective_times(mut self, effective: Vec<f64>) -> Self {
        debug_assert_eq!(effective.len(), self.values.len());
        self.effective_times = Some(effective);
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Nominal sampling period `T_s` in minutes.
    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn effective_times(&self) -> Option<&[f64]> {
        self.effective_times.as_deref()
    }

    /// Returns a copy with every amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let values = self.values.iter().map(|v| v * factor).collect();
        let mut out = Self::new(self.times.clone(), values, self.period)?;
        out.effective_times = self.effective_times.clone();
        Ok(out)
    }
}
