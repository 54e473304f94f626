#![allow(dead_code)]

use dynpeak::detect::{
    detect_traced, step1_first_pulse, step2_forward_scan, DetectionParams, DetectionTrace,
};
use dynpeak::model::{
    generate, integrate_plasma, integrate_release, lh_release, sample_series, GeneratorConfig,
    Profile, SamplingConfig, ScaleWindow,
};
use dynpeak::tunnel::{fit_cubic, IpiSeries, TunnelFit};
use dynpeak::TimeSeries;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError};

pub const GRID_PERIOD: f64 = 100.0;
pub const GRID_DURATION: f64 = 3000.0;
/// Start of the period whose spike is attenuated in the missed-pulse fixture.
pub const WEAK_SPIKE_AT: f64 = 1500.0;
pub const WEAK_SPIKE_FACTOR: f64 = 0.18;

fn grid_sampling() -> SamplingConfig {
    SamplingConfig::new(10.0, 1.0, 0.0, 0.0)
}

/// Regular 100-min train with one spike scaled down by `factor`.
pub fn missed_pulse_series(factor: f64) -> TimeSeries {
    let cfg = GeneratorConfig {
        m_spike: Profile::Scaled {
            base: Box::new(Profile::constant(15.0)),
            windows: vec![ScaleWindow {
                start: WEAK_SPIKE_AT,
                end: WEAK_SPIKE_AT + GRID_PERIOD,
                factor,
            }],
        },
        ..GeneratorConfig::constant(15.0, GRID_PERIOD, GRID_DURATION)
    };
    generate(&cfg, &grid_sampling()).unwrap()
}

/// Regular 100-min train plus one extra full-size spike `offset` minutes
/// after the spike at minute 1500.
pub fn injected_spike_series(offset: f64) -> TimeSeries {
    let cfg = GeneratorConfig::constant(15.0, GRID_PERIOD, GRID_DURATION);
    let k = cfg.k_hl();
    let at = WEAK_SPIKE_AT + offset;
    let sol = integrate_release(
        |t| {
            let extra = if t >= at {
                15.0 * (-k * (t - at)).exp()
            } else {
                0.0
            };
            Ok(lh_release(t, &cfg)? + extra)
        },
        cfg.clearance_rate,
        -cfg.warmup(),
        cfg.duration,
        cfg.dt,
    )
    .unwrap();
    sample_series(&sol, &grid_sampling()).unwrap()
}

/// Least-squares cubic over the same centred abscissa, solved from the
/// normal equations in exact rational arithmetic.
pub fn exact_cubic(values: &[f64]) -> [f64; 4] {
    let n = values.len();
    let terms = n.min(4);
    let half = BigRational::new(n.into(), 2.into());
    let xs: Vec<BigRational> = (0..n)
        .map(|j| BigRational::from_integer((j + 1).into()) - &half)
        .collect();
    let ys: Vec<BigRational> = values
        .iter()
        .map(|&v| BigRational::from_float(v).unwrap())
        .collect();
    let mut m = vec![vec![BigRational::zero(); terms + 1]; terms];
    for (x, y) in xs.iter().zip(&ys) {
        let mut powers = vec![BigRational::from_integer(1.into())];
        for k in 1..2 * terms {
            let next = &powers[k - 1] * x;
            powers.push(next);
        }
        for r in 0..terms {
            for c in 0..terms {
                m[r][c] += &powers[r + c];
            }
            m[r][terms] += &powers[r] * y;
        }
    }
    for col in 0..terms {
        let pivot = (col..terms).find(|&r| !m[r][col].is_zero()).unwrap();
        m.swap(col, pivot);
        for r in 0..terms {
            if r != col && !m[r][col].is_zero() {
                let f = &m[r][col] / &m[col][col];
                let pivot_row = m[col].clone();
                for (cell, p) in m[r].iter_mut().zip(&pivot_row).skip(col) {
                    *cell -= &f * p;
                }
            }
        }
    }
    let mut out = [0.0; 4];
    for k in 0..terms {
        out[k] = (&m[k][terms] / &m[k][k]).to_f64().unwrap();
    }
    out
}

/// Largest coefficient deviation, each coefficient weighted by the power
/// of the largest |x| it multiplies, relative to the largest weighted
/// oracle coefficient.
pub fn cubic_relative_error(fit: &TunnelFit, oracle: &[f64; 4]) -> f64 {
    let span = (fit.count as f64 / 2.0).max(1.0);
    let weight = |k: usize| span.powi(k as i32);
    let scale = (0..4)
        .map(|k| (oracle[k] * weight(k)).abs())
        .fold(0.0, f64::max);
    (0..4)
        .map(|k| ((fit.coeffs[k] - oracle[k]) * weight(k)).abs())
        .fold(0.0, f64::max)
        / scale
}

pub fn ipi_from(values: Vec<f64>) -> IpiSeries {
    let mut t = 0.0;
    let anchors = values
        .iter()
        .map(|v| {
            t += v;
            t
        })
        .collect();
    IpiSeries::new(values, anchors, 10.0).unwrap()
}

pub fn stages_as_vecs(trace: &DetectionTrace) -> Vec<Vec<usize>> {
    trace
        .stages()
        .iter()
        .map(|p| p.indexes().to_vec())
        .collect()
}

pub fn is_subset(small: &[usize], big: &[usize]) -> bool {
    small.iter().all(|i| big.binary_search(i).is_ok())
}

/// Arbitrary nonnegative series on a 10-min grid.
pub fn arb_series() -> impl Strategy<Value = TimeSeries> {
    prop::collection::vec(0.0..10.0f64, 16..240)
        .prop_map(|v| TimeSeries::from_grid(0.0, 10.0, v).unwrap())
}

/// Small-integer series, rich in ties.
pub fn arb_tied_series() -> impl Strategy<Value = TimeSeries> {
    prop::collection::vec(0u8..4, 16..160).prop_map(|v| {
        TimeSeries::from_grid(0.0, 10.0, v.into_iter().map(f64::from).collect()).unwrap()
    })
}

/// Noisy pulsatile series from the generator.
pub fn arb_pulsatile() -> impl Strategy<Value = TimeSeries> {
    (60.0..140.0f64, 3.0..20.0f64, 0.0..0.15f64, any::<u64>()).prop_map(|(p, m, b, seed)| {
        let cfg = GeneratorConfig::constant(m, p, 800.0);
        generate(
            &cfg,
            &SamplingConfig::new(10.0, 1.0, 1.5, b).with_seed(seed),
        )
        .unwrap()
    })
}

pub fn config(cases: u32) -> Config {
    Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    }
}

pub fn arb_intervals(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(10.0..200.0f64, len)
}

fn first_max(values: &[f64], lo: usize, hi: usize) -> usize {
    let mut best = lo;
    for i in lo..=hi {
        if values[i] > values[best] {
            best = i;
        }
    }
    best
}

fn first_min(values: &[f64], lo: usize, hi: usize) -> usize {
    let mut best = lo;
    for i in lo..=hi {
        if values[i] < values[best] {
            best = i;
        }
    }
    best
}

/// Steps 3.x and 5 only remove, step 4 only adds, every stage is strictly
/// increasing and in range.
pub fn check_stage_monotonicity(series: &TimeSeries, lambda_a: f64) -> Result<(), TestCaseError> {
    let params = DetectionParams {
        lambda_a,
        ..DetectionParams::for_series(series)
    };
    let s = stages_as_vecs(&detect_traced(series, &params).unwrap());
    for (i, stage) in s.iter().enumerate() {
        prop_assert!(
            stage.windows(2).all(|w| w[0] < w[1]),
            "stage {} unordered",
            i
        );
        prop_assert!(stage.iter().all(|&p| p < series.len()));
    }
    prop_assert!(is_subset(&s[1], &s[0]));
    prop_assert!(is_subset(&s[2], &s[1]));
    prop_assert!(is_subset(&s[3], &s[2]));
    prop_assert!(is_subset(&s[3], &s[4]));
    prop_assert!(is_subset(&s[5], &s[4]));
    Ok(())
}

/// With the assay threshold off, every stage is unchanged by scaling.
pub fn check_scale_invariance(series: &TimeSeries, c: f64) -> Result<(), TestCaseError> {
    let params = DetectionParams::for_series(series);
    let a = stages_as_vecs(&detect_traced(series, &params).unwrap());
    let b = stages_as_vecs(&detect_traced(&series.scaled(c).unwrap(), &params).unwrap());
    prop_assert_eq!(a, b);
    Ok(())
}

/// Steps 1 and 2 agree with a naive first-extremum scan, and repeated runs
/// agree.
pub fn check_tie_break(series: &TimeSeries) -> Result<(), TestCaseError> {
    let params = DetectionParams::for_series(series);
    let kp = params.k_p();
    let v = series.values();
    let first = step1_first_pulse(series, &params).unwrap();
    prop_assert_eq!(first, first_max(v, 0, 2 * kp - 1));

    let mut expected = vec![first];
    let mut p = first;
    while p + kp < v.len() {
        let m = first_min(v, p + 1, p + kp);
        if m + kp >= v.len() {
            break;
        }
        p = first_max(v, m + 1, m + kp);
        expected.push(p);
    }
    prop_assert_eq!(
        step2_forward_scan(series, &params, first).into_inner(),
        expected
    );
    let once = detect_traced(series, &params).unwrap();
    prop_assert_eq!(detect_traced(series, &params).unwrap(), once);
    Ok(())
}

pub fn check_seed_determinism(seed: u64, f: f64, b: f64) -> Result<(), TestCaseError> {
    let cfg = GeneratorConfig::constant(15.0, 100.0, 400.0);
    let sol = integrate_plasma(&cfg).unwrap();
    let s = SamplingConfig::new(10.0, 4.0, f, b);
    let x = sample_series(&sol, &s.with_seed(seed)).unwrap();
    let y = sample_series(&sol, &s.with_seed(seed)).unwrap();
    prop_assert_eq!(x.values(), y.values());
    prop_assert_eq!(x.effective_times(), y.effective_times());
    let z = sample_series(&sol, &s.with_seed(seed.wrapping_add(1))).unwrap();
    prop_assert_ne!(x.values(), z.values());
    Ok(())
}

pub fn check_cubic_oracle(values: Vec<f64>) -> Result<(), TestCaseError> {
    let oracle = exact_cubic(&values);
    let fit = fit_cubic(&ipi_from(values), 0.6, 0.6).unwrap();
    let err = cubic_relative_error(&fit, &oracle);
    prop_assert!(err < 1e-8, "relative error {}", err);
    Ok(())
}
