//! Synthetic plasma LH generator.
//!
//! Pituitary release is a train of spikes: at each spike onset the release
//! rate jumps to `M(t)` and then decays with the spike half-life. Plasma
//! level follows first-order clearance
//!
//! ```text
//! dL/dt = release(t) - clearance_rate * L(t)
//! ```
//!
//! which is integrated on a fine grid and then sampled with jittered times
//! and multiplicative assay noise.

use std::f64::consts::LN_2;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// A time-dependent scalar parameter (amplitude or interspike interval).
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    /// `intercept + slope * t`.
    Linear { intercept: f64, slope: f64 },
    /// `base(t)` multiplied by `factor` inside each half-open window.
    Scaled {
        base: Box<Profile>,
        windows: Vec<ScaleWindow>,
    },
    #[serde(skip)]
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleWindow {
    pub start: f64,
    pub end: f64,
    pub factor: f64,
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Profile::Linear {
            intercept: value,
            slope: 0.0,
        }
    }

    pub fn linear(intercept: f64, slope: f64) -> Self {
        Profile::Linear { intercept, slope }
    }

    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Profile::Custom(Arc::new(f))
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Profile::Linear { intercept, slope } => intercept + slope * t,
            Profile::Scaled { base, windows } => {
                let factor = windows
                    .iter()
                    .filter(|w| w.start <= t && t < w.end)
                    .map(|w| w.factor)
                    .product::<f64>();
                base.eval(t) * factor
            }
            Profile::Custom(f) => f(t),
        }
    }

    /// `Some(value)` when the profile does not depend on time.
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Profile::Linear { intercept, slope } if *slope == 0.0 => Some(*intercept),
            Profile::Scaled { base, windows } if windows.is_empty() => base.as_constant(),
            _ => None,
        }
    }
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Linear { intercept, slope } => f
                .debug_struct("Linear")
                .field("intercept", intercept)
                .field("slope", slope)
                .finish(),
            Profile::Scaled { base, windows } => f
                .debug_struct("Scaled")
                .field("base", base)
                .field("windows", windows)
                .finish(),
            Profile::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Spike release and clearance parameters. Times in minutes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// Spike release amplitude, ng/(ml.min).
    pub m_spike: Profile,
    /// Interspike interval, minutes.
    pub p_spike: Profile,
    /// Spike half-life, minutes.
    pub tau_hl: f64,
    /// Plasma clearance constant, 1/min.
    pub clearance_rate: f64,
    pub duration: f64,
    pub dt: f64,
    /// Simulated time before t = 0, discarded from sampling. Defaults to
    /// one interspike interval `p_spike(0)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup: Option<f64>,
}

pub const DEFAULT_TAU_HL: f64 = 20.0;
pub const DEFAULT_CLEARANCE_RATE: f64 = 6.0;
pub const DEFAULT_DT: f64 = 0.01;

impl GeneratorConfig {
    /// Constant amplitude and period with the default half-life, clearance
    /// and integration step.
    pub fn constant(m: f64, p: f64, duration: f64) -> Self {
        Self {
            m_spike: Profile::constant(m),
            p_spike: Profile::constant(p),
            tau_hl: DEFAULT_TAU_HL,
            clearance_rate: DEFAULT_CLEARANCE_RATE,
            duration,
            dt: DEFAULT_DT,
            warmup: None,
        }
    }

    /// Spike decay rate `ln 2 / tau_hl`.
    pub fn k_hl(&self) -> f64 {
        LN_2 / self.tau_hl
    }

    pub fn warmup(&self) -> f64 {
        self.warmup.unwrap_or_else(|| self.p_spike.eval(0.0))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    message: format!("must be positive and finite, got {v}"),
                })
            }
        };
        positive("tau_hl", self.tau_hl)?;
        positive("clearance_rate", self.clearance_rate)?;
        positive("duration", self.duration)?;
        positive("dt", self.dt)?;
        if self.dt > self.tau_hl / 100.0 {
            return Err(Error::InvalidParameter {
                name: "dt",
                message: format!(
                    "integration step {} exceeds tau_hl / 100 = {}",
                    self.dt,
                    self.tau_hl / 100.0
                ),
            });
        }
        let warmup = self.warmup();
        if !(warmup >= 0.0 && warmup.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "warmup",
                message: format!("must be non-negative, got {warmup}"),
            });
        }
        // Coarse scan of the profiles; the integrator re-checks every step.
        let start = -warmup;
        let steps = (self.duration + warmup).ceil() as usize;
        for i in 0..=steps {
            let t = (start + i as f64).min(self.duration);
            let p = self.p_spike.eval(t);
            if !(p > 0.0) {
                return Err(Error::Domain {
                    t,
                    message: format!("interspike interval must be positive, got {p}"),
                });
            }
            let m = self.m_spike.eval(t);
            if !(m >= 0.0) {
                return Err(Error::Domain {
                    t,
                    message: format!("spike amplitude must be non-negative, got {m}"),
                });
            }
        }
        Ok(())
    }
}

/// Instantaneous pituitary release rate at `t` (ng/(ml.min)).
///
/// The spike phase is `t - floor(t / P(t)) * P(t)`, evaluated with the
/// current interspike interval even when it varies in time.
pub fn lh_release(t: f64, cfg: &GeneratorConfig) -> Result<f64> {
    let period = cfg.p_spike.eval(t);
    if !(period > 0.0) {
        return Err(Error::Domain {
            t,
            message: format!("interspike interval must be positive, got {period}"),
        });
    }
    let phase = t - (t / period).floor() * period;
    Ok(cfg.m_spike.eval(t) * (-cfg.k_hl() * phase).exp())
}

/// Plasma level on a uniform fine grid starting at `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSolution {
    start: f64,
    dt: f64,
    values: Vec<f64>,
}

impl DenseSolution {
    pub fn new(start: f64, dt: f64, values: Vec<f64>) -> Self {
        Self { start, dt, values }
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.time(self.values.len().saturating_sub(1))
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self, i: usize) -> f64 {
        self.start + self.dt * i as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(|i| self.time(i))
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Linear interpolation between grid points.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let (start, end) = (self.start, self.end());
        // Tolerate rounding in the last grid time.
        let slack = self.dt * 1e-9;
        if !(t >= start - slack && t <= end + slack) {
            return Err(Error::OutOfRange { t, start, end });
        }
        let x = ((t - start) / self.dt).max(0.0);
        let i = (x.floor() as usize).min(self.values.len() - 1);
        if i + 1 >= self.values.len() {
            return Ok(self.values[i]);
        }
        let w = x - i as f64;
        Ok(self.values[i] * (1.0 - w) + self.values[i + 1] * w)
    }

    /// Writes `time_min,lh_ng_ml` rows for the part of the grid in `[from, to]`,
    /// keeping every `stride`-th point.
    pub fn write_csv<W: Write>(&self, out: W, stride: usize) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time_min", "lh_ng_ml"])
            .map_err(|e| Error::Io(e.to_string()))?;
        for (t, v) in self.times().zip(&self.values).step_by(stride.max(1)) {
            w.write_record([t.to_string(), v.to_string()])
                .map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Integrates `dL/dt = release(t) - clearance_rate * L` from `L(start) = 0`.
///
/// Each step is solved exactly with the release frozen at the step midpoint.
pub fn integrate_release<F>(
    release: F,
    clearance_rate: f64,
    start: f64,
    end: f64,
    dt: f64,
) -> Result<DenseSolution>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(end > start) || !(dt > 0.0) || !(clearance_rate > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "cannot integrate on [{start}, {end}] with dt = {dt}, rate = {clearance_rate}"
        )));
    }
    let steps = ((end - start) / dt - 1e-9).ceil() as usize;
    let decay = (-clearance_rate * dt).exp();
    let gain = (1.0 - decay) / clearance_rate;
    let mut values = Vec::with_capacity(steps + 1);
    let mut level = 0.0_f64;
    values.push(level);
    for n in 0..steps {
        let mid = start + dt * (n as f64 + 0.5);
        let rate = release(mid)?;
        level = level * decay + rate * gain;
        values.push(level.max(0.0));
    }
    Ok(DenseSolution::new(start, dt, values))
}

/// Fine-step plasma level on `[-warmup, duration]`.
pub fn integrate_plasma(cfg: &GeneratorConfig) -> Result<DenseSolution> {
    cfg.validate()?;
    integrate_release(
        |t| lh_release(t, cfg),
        cfg.clearance_rate,
        -cfg.warmup(),
        cfg.duration,
        cfg.dt,
    )
}

/// Exact periodic steady state for constant amplitude `m` and period `p`.
///
/// Within a period, `L(s) = C e^{-k s} + (L0 - C) e^{-alpha s}` with
/// `C = m / (alpha - k)` and `L0` chosen so that `L(p) = L0`.
pub fn closed_form_plasma(t: f64, m: f64, p: f64, tau_hl: f64, alpha: f64) -> Result<f64> {
    if !(p > 0.0 && tau_hl > 0.0 && alpha > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "closed form needs positive period, half-life and clearance (p={p}, tau={tau_hl}, alpha={alpha})"
        )));
    }
    let k = LN_2 / tau_hl;
    if ((alpha - k) / alpha).abs() < 1e-12 {
        return Err(Error::Resonant);
    }
    let s = t - (t / p).floor() * p;
    let c = m / (alpha - k);
    let base = c * ((-k * p).exp() - (-alpha * p).exp()) / (1.0 - (-alpha * p).exp());
    Ok(c * (-k * s).exp() + (base - c) * (-alpha * s).exp())
}

/// Sampling protocol: period, start shift, time jitter and assay noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    /// `T_s`, minutes.
    pub period: f64,
    /// First sampling time `r`, minutes.
    pub start_shift: f64,
    /// Maximal sampling-time error `f`, minutes.
    pub time_jitter: f64,
    /// Maximal relative assay error `b`.
    pub assay_noise: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SamplingConfig {
    pub fn new(period: f64, start_shift: f64, time_jitter: f64, assay_noise: f64) -> Self {
        Self {
            period,
            start_shift,
            time_jitter,
            assay_noise,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, message: String| Err(Error::InvalidParameter { name, message });
        if !(self.period > 0.0 && self.period.is_finite()) {
            return bad("period", format!("must be positive, got {}", self.period));
        }
        if !(0.0..=self.period).contains(&self.start_shift) {
            return bad(
                "start_shift",
                format!("must lie in [0, {}], got {}", self.period, self.start_shift),
            );
        }
        if !(self.time_jitter >= 0.0 && self.time_jitter < self.period / 2.0) {
            return bad(
                "time_jitter",
                format!(
                    "must lie in [0, {}), got {}",
                    self.period / 2.0,
                    self.time_jitter
                ),
            );
        }
        if !(0.0..1.0).contains(&self.assay_noise) {
            return bad(
                "assay_noise",
                format!("must lie in [0, 1), got {}", self.assay_noise),
            );
        }
        Ok(())
    }
}

/// Samples the dense solution at `t_i = r + T_s (i - 1)` for every `i` whose
/// jitter window still fits inside the solution.
pub fn sample_series(sol: &DenseSolution, s: &SamplingConfig) -> Result<TimeSeries> {
    s.validate()?;
    let first = s.start_shift - s.time_jitter;
    if first < sol.start() {
        return Err(Error::OutOfRange {
            t: first,
            start: sol.start(),
            end: sol.end(),
        });
    }
    let span = sol.end() - s.time_jitter - s.start_shift;
    if span < 0.0 {
        return Err(Error::OutOfRange {
            t: s.start_shift + s.time_jitter,
            start: sol.start(),
            end: sol.end(),
        });
    }
    let count = (span / s.period + 1e-9).floor() as usize + 1;

    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut times = Vec::with_capacity(count);
    let mut effective = Vec::with_capacity(count);
    let mut values = Vec::with_capacity(count);
    for i in 0..count {
        let t = s.start_shift + s.period * i as f64;
        let jitter = if s.time_jitter > 0.0 {
            rng.random_range(-s.time_jitter..=s.time_jitter)
        } else {
            0.0
        };
        let noise = if s.assay_noise > 0.0 {
            rng.random_range(-s.assay_noise..=s.assay_noise)
        } else {
            0.0
        };
        let tau = t + jitter;
        times.push(t);
        effective.push(tau);
        values.push(sol.eval(tau)? * (1.0 + noise));
    }
    Ok(TimeSeries::new(times, values, s.period)?.with_effective_times(effective))
}

/// Integrates and samples in one go.
pub fn generate(cfg: &GeneratorConfig, sampling: &SamplingConfig) -> Result<TimeSeries> {
    sample_series(&integrate_plasma(cfg)?, sampling)
}

/// The six reference scenarios (constant and accelerating rhythms).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    A,
    B,
    C,
    D,
    E,
    F,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::A,
        Scenario::B,
        Scenario::C,
        Scenario::D,
        Scenario::E,
        Scenario::F,
    ];

    pub fn configs(self) -> (GeneratorConfig, SamplingConfig) {
        const CONSTANT_DURATION: f64 = 1000.0;
        // P_spike reaches 50 min at the end of the accelerating runs.
        const ACCELERATING_DURATION: f64 = 1500.0;
        let accelerating_period = Profile::linear(100.0, -1.0 / 30.0);
        match self {
            Scenario::A => (
                GeneratorConfig::constant(15.0, 100.0, CONSTANT_DURATION),
                SamplingConfig::new(10.0, 1.0, 0.0, 0.0),
            ),
            Scenario::B => (
                GeneratorConfig::constant(15.0, 100.0, CONSTANT_DURATION),
                SamplingConfig::new(10.0, 4.0, 0.0, 0.0),
            ),
            Scenario::C => (
                GeneratorConfig::constant(15.0, 100.0, CONSTANT_DURATION),
                SamplingConfig::new(10.0, 4.0, 1.5, 0.0),
            ),
            Scenario::D => (
                GeneratorConfig::constant(15.0, 100.0, CONSTANT_DURATION),
                SamplingConfig::new(10.0, 4.0, 1.5, 0.10),
            ),
            Scenario::E => (
                GeneratorConfig {
                    p_spike: accelerating_period,
                    ..GeneratorConfig::constant(15.0, 100.0, ACCELERATING_DURATION)
                },
                SamplingConfig::new(10.0, 1.0, 0.0, 0.0),
            ),
            Scenario::F => (
                GeneratorConfig {
                    m_spike: Profile::linear(15.0, -8.7e-3),
                    p_spike: accelerating_period,
                    ..GeneratorConfig::constant(15.0, 100.0, ACCELERATING_DURATION)
                },
                SamplingConfig::new(10.0, 4.0, 2.0, 0.05),
            ),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::A => "A",
            Scenario::B => "B",
            Scenario::C => "C",
            Scenario::D => "D",
            Scenario::E => "E",
            Scenario::F => "F",
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Scenario::A),
            "B" | "b" => Ok(Scenario::B),
            "C" | "c" => Ok(Scenario::C),
            "D" | "d" => Ok(Scenario::D),
            "E" | "e" => Ok(Scenario::E),
            "F" | "f" => Ok(Scenario::F),
            other => Err(Error::UnknownScenario(other.to_string())),
        }
    }
}

/// Looks a scenario up by name.
pub fn scenario(name: &str) -> Result<(GeneratorConfig, SamplingConfig)> {
    Ok(name.parse::<Scenario>()?.configs())
}

/// Generator and sampling settings as read from a configuration file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub generator: GeneratorConfig,
    pub sampling: SamplingConfig,
}
