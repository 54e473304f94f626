//! Multi-scale pulse detection.
//!
//! The detector builds a candidate set with an alternating min/max scan
//! (steps 1 and 2), prunes it with height and magnitude thresholds
//! (steps 3.1 to 3.3), recovers pulses the scan skipped (step 4) and finally
//! drops peaks supported by only three samples (step 5).
//!
//! Sample indexes are zero-based throughout. Ties in every argmin/argmax
//! resolve to the smallest index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Detection thresholds and tunnel ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionParams {
    /// `T_s`, minutes.
    pub sampling_period: f64,
    /// `T_p`, the shortest expected interpulse interval, minutes.
    pub nominal_period: f64,
    pub lambda_r: f64,
    /// Assay detection threshold, ng/ml. Zero disables step 3.3.
    pub lambda_a: f64,
    pub lambda_3p: f64,
    pub tunnel_lower_ratio: f64,
    pub tunnel_upper_ratio: f64,
}

impl DetectionParams {
    pub const DEFAULT_NOMINAL_PERIOD: f64 = 40.0;
    pub const DEFAULT_LAMBDA_R: f64 = 0.2;
    pub const DEFAULT_LAMBDA_A: f64 = 0.0;
    pub const DEFAULT_LAMBDA_3P: f64 = 0.1;
    pub const DEFAULT_TUNNEL_RATIO: f64 = 0.6;

    /// Default set for LH series sampled every `sampling_period` minutes.
    pub fn with_sampling_period(sampling_period: f64) -> Self {
        Self {
            sampling_period,
            nominal_period: Self::DEFAULT_NOMINAL_PERIOD,
            lambda_r: Self::DEFAULT_LAMBDA_R,
            lambda_a: Self::DEFAULT_LAMBDA_A,
            lambda_3p: Self::DEFAULT_LAMBDA_3P,
            tunnel_lower_ratio: Self::DEFAULT_TUNNEL_RATIO,
            tunnel_upper_ratio: Self::DEFAULT_TUNNEL_RATIO,
        }
    }

    pub fn for_series(series: &TimeSeries) -> Self {
        Self::with_sampling_period(series.period())
    }

    /// Scan window length `k_p = floor(T_p / T_s)`.
    pub fn k_p(&self) -> usize {
        // the epsilon absorbs ratios such as 40 / (40/3) landing just below an integer
        (self.nominal_period / self.sampling_period + 1e-9).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, name: &'static str, message: String) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter { name, message })
            }
        }
        let p = self;
        check(
            p.sampling_period > 0.0 && p.sampling_period.is_finite(),
            "sampling_period",
            format!("must be positive, got {}", p.sampling_period),
        )?;
        check(
            p.nominal_period.is_finite() && p.nominal_period >= p.sampling_period,
            "nominal_period",
            format!(
                "must be at least the sampling period {}, got {}",
                p.sampling_period, p.nominal_period
            ),
        )?;
        check(
            p.lambda_r > 0.0 && p.lambda_r < 1.0,
            "lambda_r",
            format!("must lie in (0, 1), got {}", p.lambda_r),
        )?;
        check(
            p.lambda_a >= 0.0 && p.lambda_a.is_finite(),
            "lambda_a",
            format!("must be non-negative, got {}", p.lambda_a),
        )?;
        check(
            p.lambda_3p > 0.0 && p.lambda_3p.is_finite(),
            "lambda_3p",
            format!("must be positive, got {}", p.lambda_3p),
        )?;
        check(
            (0.0..1.0).contains(&p.tunnel_lower_ratio),
            "tunnel_lower_ratio",
            format!("must lie in [0, 1), got {}", p.tunnel_lower_ratio),
        )?;
        check(
            p.tunnel_upper_ratio >= 0.0 && p.tunnel_upper_ratio.is_finite(),
            "tunnel_upper_ratio",
            format!("must be non-negative, got {}", p.tunnel_upper_ratio),
        )?;
        check(
            p.k_p() >= 1,
            "nominal_period",
            "k_p must be at least 1".into(),
        )
    }
}

/// Strictly increasing sample indexes of detected pulses.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PulseVector(Vec<usize>);

impl PulseVector {
    /// Sorts and deduplicates `indexes`.
    pub fn new(mut indexes: Vec<usize>) -> Self {
        indexes.sort_unstable();
        indexes.dedup();
        Self(indexes)
    }

    pub fn indexes(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.0.windows(2).all(|w| w[0] < w[1])
    }

    pub fn contains(&self, index: usize) -> bool {
        self.0.binary_search(&index).is_ok()
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

fn argmin(values: &[f64], lo: usize, hi: usize) -> usize {
    (lo..=hi).fold(
        lo,
        |best, k| if values[k] < values[best] { k } else { best },
    )
}

fn argmax(values: &[f64], lo: usize, hi: usize) -> usize {
    (lo..=hi).fold(
        lo,
        |best, k| if values[k] > values[best] { k } else { best },
    )
}

/// Minimum over the open index interval `(left, right)`.
fn open_min(values: &[f64], left: usize, right: usize) -> Option<f64> {
    if right <= left + 1 {
        return None;
    }
    values[left + 1..right].iter().copied().reduce(f64::min)
}

fn elevation(peak: f64, base: f64) -> f64 {
    (peak - base).max(0.0)
}

/// Height above the global minimum of the series.
pub fn height(series: &TimeSeries, i: usize) -> Result<f64> {
    let values = series.values();
    let a = *values.get(i).ok_or(Error::SeriesTooShort {
        len: values.len(),
        required: i + 1,
    })?;
    let floor = values.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(a - floor)
}

/// Geometric mean of the elevations of sample `i` above the minima that
/// separate it from its closest neighbours in `pulses`.
pub fn magnitude(series: &TimeSeries, pulses: &PulseVector, i: usize) -> Result<f64> {
    let values = series.values();
    let idx = pulses.indexes();
    let left = idx.iter().rev().find(|&&p| p < i).copied();
    let right = idx.iter().find(|&&p| p > i).copied();
    let (Some(left), Some(right)) = (left, right) else {
        return Err(Error::TooFewPulses {
            found: idx.len(),
            required: 2,
        });
    };
    if i >= values.len() || right >= values.len() {
        return Err(Error::SeriesTooShort {
            len: values.len(),
            required: right.max(i) + 1,
        });
    }
    let b1 = open_min(values, left, i).ok_or(Error::EmptyWindow { left, right: i })?;
    let b2 = open_min(values, i, right).ok_or(Error::EmptyWindow { left: i, right })?;
    let a = values[i];
    if a < b1 || a < b2 {
        return Err(Error::NotAPeak { index: i });
    }
    Ok(((a - b1) * (a - b2)).sqrt())
}

/// Step 1: largest sample among the first `2 k_p`.
pub fn step1_first_pulse(series: &TimeSeries, params: &DetectionParams) -> Result<usize> {
    let window = 2 * params.k_p();
    if series.len() < window || window == 0 {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            required: window.max(1),
        });
    }
    Ok(argmax(series.values(), 0, window - 1))
}

/// Step 2: alternate a minimum search over the `k_p` samples following the
/// last pulse and a maximum search over the `k_p` samples following that
/// minimum, until a window no longer fits in the series.
pub fn step2_forward_scan(
    series: &TimeSeries,
    params: &DetectionParams,
    first: usize,
) -> PulseVector {
    let values = series.values();
    let n = values.len();
    let kp = params.k_p();
    let mut pulses = vec![first];
    let mut p = first;
    while p + kp < n {
        let m = argmin(values, p + 1, p + kp);
        if m + kp >= n {
            break;
        }
        p = argmax(values, m + 1, m + kp);
        pulses.push(p);
    }
    PulseVector(pulses)
}

/// Step 3.1: keeps pulses whose height exceeds `lambda_r` times the median
/// pulse height.
pub fn step3_1_median_height(
    series: &TimeSeries,
    pulses: &PulseVector,
    params: &DetectionParams,
) -> PulseVector {
    if pulses.is_empty() {
        return PulseVector::default();
    }
    let values = series.values();
    let floor = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut amplitudes: Vec<f64> = pulses.0.iter().map(|&p| values[p]).collect();
    amplitudes.sort_by(f64::total_cmp);
    let mid = amplitudes.len() / 2;
    let median = if amplitudes.len().is_multiple_of(2) {
        0.5 * (amplitudes[mid - 1] + amplitudes[mid])
    } else {
        amplitudes[mid]
    };
    let threshold = params.lambda_r * (median - floor);
    PulseVector(
        pulses
            .0
            .iter()
            .copied()
            .filter(|&p| values[p] - floor > threshold)
            .collect(),
    )
}

/// Elevations of `pulses[i]` above the minima toward both neighbours,
/// clamped at zero. An empty window contributes a zero elevation.
fn local_elevations(values: &[f64], pulses: &[usize], i: usize) -> (f64, f64, f64) {
    let (prev, cur, next) = (pulses[i - 1], pulses[i], pulses[i + 1]);
    let a = values[cur];
    let b1 = open_min(values, prev, cur).unwrap_or(a);
    let b2 = open_min(values, cur, next).unwrap_or(a);
    (elevation(a, b1), elevation(a, b2), b1.min(b2))
}

/// Removes interior pulses for which `remove(values, pulses, i)` holds,
/// re-resolving neighbours against the survivors after every removal.
fn prune_interior<F>(values: &[f64], pulses: &mut Vec<usize>, mut remove: F)
where
    F: FnMut(&[f64], &[usize], usize) -> bool,
{
    let mut i = 1;
    while i + 1 < pulses.len() {
        if remove(values, pulses, i) {
            pulses.remove(i);
        } else {
            i += 1;
        }
    }
}

/// Step 3.2: compares each interior pulse magnitude with the relative
/// magnitude of its two neighbours.
///
/// End pulses have a single neighbour; they are dropped when they do not
/// rise above the trough separating them from it.
pub fn step3_2_relative_magnitude(
    series: &TimeSeries,
    pulses: &PulseVector,
    params: &DetectionParams,
) -> PulseVector {
    let values = series.values();
    let lambda_sq = params.lambda_r * params.lambda_r;
    let mut out = pulses.0.clone();
    if out.len() >= 3 {
        prune_interior(values, &mut out, |values, p, i| {
            let (u, v, b0) = local_elevations(values, p, i);
            let reference = elevation(values[p[i - 1]], b0) * elevation(values[p[i + 1]], b0);
            u * v < lambda_sq * reference
        });
    }
    trim_flat_ends(values, &mut out);
    PulseVector(out)
}

fn trim_flat_ends(values: &[f64], pulses: &mut Vec<usize>) {
    let sunk = |pulse: usize, neighbour: usize| {
        let (lo, hi) = (pulse.min(neighbour), pulse.max(neighbour));
        let trough = open_min(values, lo, hi).unwrap_or(values[pulse]);
        elevation(values[pulse], trough) == 0.0 && elevation(values[neighbour], trough) > 0.0
    };
    while pulses.len() >= 2 && sunk(pulses[pulses.len() - 1], pulses[pulses.len() - 2]) {
        pulses.pop();
    }
    while pulses.len() >= 2 && sunk(pulses[0], pulses[1]) {
        pulses.remove(0);
    }
}

/// Step 3.3: drops interior pulses whose magnitude is below the assay
/// detection threshold `lambda_a`.
pub fn step3_3_absolute_magnitude(
    series: &TimeSeries,
    pulses: &PulseVector,
    params: &DetectionParams,
) -> PulseVector {
    let mut out = pulses.0.clone();
    if out.len() < 3 || params.lambda_a == 0.0 {
        return PulseVector(out);
    }
    let threshold = params.lambda_a * params.lambda_a;
    prune_interior(series.values(), &mut out, |values, p, i| {
        let (u, v, _) = local_elevations(values, p, i);
        u * v < threshold
    });
    PulseVector(out)
}

/// Best candidate strictly inside the gap `(left, right)`: the sample with
/// the largest product of elevations above the running minima on each
/// side, together with its score and the gap minimum.
fn best_in_gap(values: &[f64], left: usize, right: usize) -> (usize, f64, f64) {
    let lo = left + 2;
    let hi = right - 2;
    // forward[j - (left+1)] = min over left+1..=j
    let forward: Vec<f64> = values[left + 1..right]
        .iter()
        .scan(f64::INFINITY, |m, &v| {
            *m = m.min(v);
            Some(*m)
        })
        .collect();
    let mut backward: Vec<f64> = values[left + 1..right]
        .iter()
        .rev()
        .scan(f64::INFINITY, |m, &v| {
            *m = m.min(v);
            Some(*m)
        })
        .collect();
    backward.reverse();
    let mut best = (lo, f64::NEG_INFINITY, f64::INFINITY);
    for j in lo..=hi {
        let b1 = forward[j - left - 1];
        let b2 = backward[j - left - 1];
        let score = (values[j] - b1) * (values[j] - b2);
        if score > best.1 {
            best = (j, score, b1.min(b2));
        }
    }
    best
}

/// Step 4: three passes over the gaps between consecutive pulses, inserting
/// the strongest in-gap candidate when its score beats the neighbours'
/// relative magnitude. Insertions of a pass only become visible to the next.
pub fn step4_retrieve_missed(
    series: &TimeSeries,
    pulses: &PulseVector,
    params: &DetectionParams,
) -> PulseVector {
    const PASSES: usize = 3;
    let values = series.values();
    let lambda_sq = params.lambda_r * params.lambda_r;
    let mut current = pulses.0.clone();
    for _ in 0..PASSES {
        let found: Vec<usize> = current
            .windows(2)
            .filter(|w| w[0] + 3 < w[1])
            .filter_map(|w| {
                let (j, score, b0) = best_in_gap(values, w[0], w[1]);
                let reference = elevation(values[w[0]], b0) * elevation(values[w[1]], b0);
                (score > lambda_sq * reference).then_some(j)
            })
            .collect();
        if found.is_empty() {
            break;
        }
        current.extend(found);
        current.sort_unstable();
    }
    PulseVector(current)
}

/// Sharpness of a peak at `p` supported by three samples, or `None` when
/// the two flanking samples are not both local minima.
pub fn three_point_sharpness(values: &[f64], p: usize) -> Option<f64> {
    if p < 2 || p + 2 >= values.len() {
        return None;
    }
    let (a2, a1, a, b1, b2) = (
        values[p - 2],
        values[p - 1],
        values[p],
        values[p + 1],
        values[p + 2],
    );
    if !(a2 > a1 && a > a1 && a > b1 && b2 > b1) {
        return None;
    }
    let outer = 0.5 * ((a2 - a1) + (b2 - b1));
    Some(outer / ((a - a1) * (a - b1)).sqrt())
}

/// Step 5: removes 3-point peaks with sharpness at least `lambda_3p`.
pub fn step5_remove_3point(
    series: &TimeSeries,
    pulses: &PulseVector,
    params: &DetectionParams,
) -> PulseVector {
    let values = series.values();
    PulseVector(
        pulses
            .0
            .iter()
            .copied()
            .filter(|&p| three_point_sharpness(values, p).is_none_or(|r| r < params.lambda_3p))
            .collect(),
    )
}

/// Pulse set after every detection step.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionTrace {
    pub first: usize,
    pub scan: PulseVector,
    pub median_height: PulseVector,
    pub relative_magnitude: PulseVector,
    pub absolute_magnitude: PulseVector,
    pub retrieved: PulseVector,
    pub final_pulses: PulseVector,
}

impl DetectionTrace {
    /// Outputs of steps 2 through 5 in order.
    pub fn stages(&self) -> [&PulseVector; 6] {
        [
            &self.scan,
            &self.median_height,
            &self.relative_magnitude,
            &self.absolute_magnitude,
            &self.retrieved,
            &self.final_pulses,
        ]
    }
}

pub fn detect_traced(series: &TimeSeries, params: &DetectionParams) -> Result<DetectionTrace> {
    params.validate()?;
    let first = step1_first_pulse(series, params)?;
    let scan = step2_forward_scan(series, params, first);
    let median_height = step3_1_median_height(series, &scan, params);
    let relative_magnitude = step3_2_relative_magnitude(series, &median_height, params);
    let absolute_magnitude = step3_3_absolute_magnitude(series, &relative_magnitude, params);
    let retrieved = step4_retrieve_missed(series, &absolute_magnitude, params);
    let final_pulses = step5_remove_3point(series, &retrieved, params);
    Ok(DetectionTrace {
        first,
        scan,
        median_height,
        relative_magnitude,
        absolute_magnitude,
        retrieved,
        final_pulses,
    })
}

/// Runs steps 1 through 5.
pub fn detect(series: &TimeSeries, params: &DetectionParams) -> Result<PulseVector> {
    Ok(detect_traced(series, params)?.final_pulses)
}
