//! Gyroscope traces and per-device preprocessing up to synchronization.

use std::fmt::Write as _;

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One gyroscope reading. Angular velocity in rad/s, time in ms since capture start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GyroSample {
    pub t_ms: u64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl GyroSample {
    pub fn new(t_ms: u64, x: f64, y: f64, z: f64) -> Self {
        Self { t_ms, x, y, z }
    }

    fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// Timestamped samples captured by one device.
#[derive(Debug, Clone, PartialEq)]
pub struct GyroTrace {
    samples: Vec<GyroSample>,
    pub device_label: String,
}

impl GyroTrace {
    /// Checks length, timestamp order and finiteness.
    pub fn new(samples: Vec<GyroSample>, device_label: impl Into<String>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::TraceTooShort(samples.len()));
        }
        for (i, pair) in samples.windows(2).enumerate() {
            if pair[1].t_ms < pair[0].t_ms {
                // header is line 1, sample i is line i + 2
                return Err(Error::Ordering { line: i + 3 });
            }
        }
        if let Some(i) = samples
            .iter()
            .position(|s| !(s.x.is_finite() && s.y.is_finite() && s.z.is_finite()))
        {
            return Err(Error::Parse {
                line: i + 2,
                message: "non-finite angular velocity".into(),
            });
        }
        Ok(Self {
            samples,
            device_label: device_label.into(),
        })
    }

    pub fn samples(&self) -> &[GyroSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn timestamps(&self) -> Vec<u64> {
        self.samples.iter().map(|s| s.t_ms).collect()
    }

    /// Serializes in the `t_ms,x,y,z` CSV layout accepted by [`parse_trace`].
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_ms,x,y,z\n");
        for s in &self.samples {
            let _ = writeln!(out, "{},{},{},{}", s.t_ms, s.x, s.y, s.z);
        }
        out
    }
}

/// Parses CSV with header `t_ms,x,y,z`. Line numbers in errors are 1-based file lines.
pub fn parse_trace(text: &str) -> Result<GyroTrace> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let header_err = |message: String| Error::Parse { line: 1, message };
    let headers = reader
        .headers()
        .map_err(|e| header_err(e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["t_ms", "x", "y", "z"] {
        return Err(header_err(format!(
            "expected header `t_ms,x,y,z`, got `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut samples = Vec::new();
    let mut last_t = None;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 4 {
            return Err(Error::Parse {
                line,
                message: format!("expected 4 fields, got {}", record.len()),
            });
        }
        let bad = |what: &str| Error::Parse {
            line,
            message: format!("invalid {what}"),
        };
        let t_ms: u64 = record[0].parse().map_err(|_| bad("t_ms"))?;
        let mut axis = [0.0f64; 3];
        for (k, name) in ["x", "y", "z"].iter().enumerate() {
            let v: f64 = record[k + 1].parse().map_err(|_| bad(name))?;
            if !v.is_finite() {
                return Err(bad(name));
            }
            axis[k] = v;
        }
        if last_t.is_some_and(|prev| t_ms < prev) {
            return Err(Error::Ordering { line });
        }
        last_t = Some(t_ms);
        samples.push(GyroSample::new(t_ms, axis[0], axis[1], axis[2]));
    }
    GyroTrace::new(samples, "trace")
}

/// Projects one sample onto the x axis: `x * sin(theta / 2)` with
/// `theta = |omega| * dt`, the rotation accumulated over one sampling interval.
pub fn project_axis<T: Scalar>(sample: &GyroSample, dt_s: T) -> T {
    let theta = T::of(sample.norm()) * dt_s;
    T::of(sample.x) * (theta / T::of(2.0)).sin()
}

/// Projects a whole trace. The first sample reuses the first inter-sample gap.
pub fn project_trace<T: Scalar>(trace: &GyroTrace) -> Vec<T> {
    let samples = trace.samples();
    let gap = |i: usize| T::of((samples[i].t_ms - samples[i - 1].t_ms) as f64 / 1000.0);
    samples
        .iter()
        .enumerate()
        .map(|(i, s)| project_axis(s, gap(i.max(1))))
        .collect()
}

/// Scaled and smoothed sensor series with slot timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedSeries<T> {
    values: Vec<T>,
    timestamps: Vec<T>,
}

impl<T: Scalar> PreparedSeries<T> {
    pub fn new(values: Vec<T>, timestamps: Vec<T>) -> Result<Self> {
        if values.len() != timestamps.len() {
            return Err(Error::InvalidConfig(format!(
                "{} values but {} timestamps",
                values.len(),
                timestamps.len()
            )));
        }
        if let Some(i) = timestamps.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::Ordering { line: i + 3 });
        }
        Ok(Self { values, timestamps })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn timestamps(&self) -> &[T] {
        &self.timestamps
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Population variance (divides by n).
pub fn population_variance<T: Scalar>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::zero();
    }
    let n = T::of_usize(xs.len());
    let mean = xs.iter().fold(T::zero(), |acc, &x| acc + x) / n;
    xs.iter()
        .fold(T::zero(), |acc, &x| acc + (x - mean) * (x - mean))
        / n
}

/// `y[0] = x[0]`, `y[k] = alpha * x[k] + (1 - alpha) * y[k-1]`.
pub fn ewma<T: Scalar>(xs: &[T], alpha: T) -> Vec<T> {
    let mut out = Vec::with_capacity(xs.len());
    let mut prev = None;
    for &x in xs {
        let y = match prev {
            None => x,
            Some(p) => alpha * x + (T::one() - alpha) * p,
        };
        out.push(y);
        prev = Some(y);
    }
    out
}

/// Maps a millisecond timestamp to its slot index `floor(t_ms * t_scale)`.
///
/// The small guard keeps products like `3000 * 0.001` from landing just below
/// an integer.
pub fn timestamp_slot(t_ms: u64, t_scale: f64) -> f64 {
    let scaled = t_ms as f64 * t_scale;
    (scaled + 1e-9 * scaled.abs().max(1.0)).floor()
}

/// Scales timestamps into slots, scales sensor values by `Var * C`, then smooths.
pub fn scale_and_smooth<T: Scalar>(
    projected: &[T],
    t_ms: &[u64],
    config: &PipelineConfig,
) -> Result<PreparedSeries<T>> {
    if projected.len() != t_ms.len() {
        return Err(Error::InvalidConfig(format!(
            "{} sensor values but {} timestamps",
            projected.len(),
            t_ms.len()
        )));
    }
    if projected.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: projected.len(),
        });
    }
    let gain = population_variance(projected) * T::of(config.sensor_scale_c);
    let scaled: Vec<T> = projected.iter().map(|&v| v * gain).collect();
    let values = ewma(&scaled, T::of(config.ewma_alpha));
    let timestamps = t_ms
        .iter()
        .map(|&t| T::of(timestamp_slot(t, config.t_scale)))
        .collect();
    PreparedSeries::new(values, timestamps)
}

/// Projection followed by scaling and smoothing.
pub fn prepare<T: Scalar>(trace: &GyroTrace, config: &PipelineConfig) -> Result<PreparedSeries<T>> {
    scale_and_smooth(&project_trace::<T>(trace), &trace.timestamps(), config)
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn parses_two_samples() {
        let trace = parse_trace("t_ms,x,y,z\n0,0.1,0,0\n10,0.2,0,0").unwrap();
        assert_eq!(trace.len(), 2);
        assert_eq!(trace.samples()[1], GyroSample::new(10, 0.2, 0.0, 0.0));
    }

    #[test]
    fn malformed_row_reports_line() {
        let err = parse_trace("t_ms,x,y,z\n0,a,0,0").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
        let err = parse_trace("t_ms,x,y,z\n0,0,0,0\n5,0,0").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn decreasing_timestamp_rejected() {
        let err = parse_trace("t_ms,x,y,z\n0,0,0,0\n10,0,0,0\n5,0,0,0").unwrap_err();
        assert_eq!(err, Error::Ordering { line: 4 });
    }

    #[test]
    fn header_and_length_checked() {
        assert!(matches!(
            parse_trace("time,x,y,z\n0,0,0,0\n1,0,0,0"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert_eq!(
            parse_trace("t_ms,x,y,z\n0,0,0,0").unwrap_err(),
            Error::TraceTooShort(1)
        );
    }

    #[test]
    fn csv_round_trip() {
        let trace = GyroTrace::new(
            vec![
                GyroSample::new(0, 0.125, -1.5, 3.0),
                GyroSample::new(400, 1e-7, 0.0, -0.25),
            ],
            "a",
        )
        .unwrap();
        assert_eq!(
            parse_trace(&trace.to_csv()).unwrap().samples(),
            trace.samples()
        );
    }

    #[test]
    fn projection_examples() {
        let zero = GyroSample::new(0, 0.0, 0.0, 0.0);
        assert_eq!(project_axis(&zero, 0.01f64), 0.0);
        let unit = GyroSample::new(0, 1.0, 0.0, 0.0);
        assert_relative_eq!(project_axis(&unit, 1.0f64), 0.5f64.sin(), epsilon = 1e-15);
        assert_relative_eq!(project_axis(&unit, 1.0f64), 0.479426, epsilon = 1e-6);
        let y_only = GyroSample::new(0, 0.0, 2.0, 0.0);
        assert_eq!(project_axis(&y_only, 0.5f64), 0.0);
    }

    #[test]
    fn first_sample_reuses_first_gap() {
        let trace = GyroTrace::new(
            vec![
                GyroSample::new(0, 1.0, 0.0, 0.0),
                GyroSample::new(1000, 1.0, 0.0, 0.0),
                GyroSample::new(1500, 1.0, 0.0, 0.0),
            ],
            "t",
        )
        .unwrap();
        let p = project_trace::<f64>(&trace);
        assert_relative_eq!(p[0], 0.5f64.sin());
        assert_relative_eq!(p[1], 0.5f64.sin());
        assert_relative_eq!(p[2], 0.25f64.sin());
    }

    #[test]
    fn constant_series_scales_to_zero() {
        let config = PipelineConfig::default();
        let s = scale_and_smooth(&[0.3f64; 5], &[0, 1, 2, 3, 4], &config).unwrap();
        assert!(s.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn variance_scaling_hand_example() {
        let config = PipelineConfig {
            ewma_alpha: 1.0,
            ..PipelineConfig::default()
        };
        let s = scale_and_smooth(&[1.0f64, -1.0], &[0, 400], &config).unwrap();
        assert_eq!(s.values(), &[10_000.0, -10_000.0]);
    }

    #[test]
    fn timestamps_become_slots() {
        let config = PipelineConfig::default();
        let s = scale_and_smooth(&[0.0f64, 1.0, 2.0], &[0, 1000, 2000], &config).unwrap();
        assert_eq!(s.timestamps(), &[0.0, 1.0, 2.0]);
        let s = scale_and_smooth(&[0.0f64, 1.0, 2.0], &[999, 1001, 2999], &config).unwrap();
        assert_eq!(s.timestamps(), &[0.0, 1.0, 2.0]);
        for t in (0..100_000u64).step_by(1000) {
            assert_eq!(timestamp_slot(t, 0.001), (t / 1000) as f64);
        }
    }

    #[test]
    fn ewma_seed_and_recurrence() {
        assert_eq!(ewma(&[4.0f64, 0.0, 0.0], 0.5), vec![4.0, 2.0, 1.0]);
        assert_eq!(ewma::<f64>(&[], 0.5), Vec::<f64>::new());
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let config = PipelineConfig::default();
        assert!(scale_and_smooth(&[1.0f64, 2.0], &[0], &config).is_err());
        assert!(scale_and_smooth(&[1.0f64], &[0], &config).is_err());
    }

    proptest! {
        #[test]
        fn projection_is_odd_in_x(x in -10.0f64..10.0, y in -10.0f64..10.0, z in -10.0f64..10.0, dt in 0.001f64..1.0) {
            let a = project_axis(&GyroSample::new(0, x, y, z), dt);
            let b = project_axis(&GyroSample::new(0, -x, y, z), dt);
            prop_assert_eq!(a, -b);
        }

        #[test]
        fn alpha_one_is_plain_scaling(xs in prop::collection::vec(-2.0f64..2.0, 2..40)) {
            let config = PipelineConfig { ewma_alpha: 1.0, ..PipelineConfig::default() };
            let t: Vec<u64> = (0..xs.len() as u64).map(|i| i * 400).collect();
            let s = scale_and_smooth(&xs, &t, &config).unwrap();
            let gain = population_variance(&xs) * 10_000.0;
            for (v, x) in s.values().iter().zip(&xs) {
                prop_assert_eq!(*v, x * gain);
            }
        }

        #[test]
        fn ewma_stays_within_input_range(xs in prop::collection::vec(-5.0f64..5.0, 1..40), alpha in 0.01f64..=1.0) {
            let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for y in ewma(&xs, alpha) {
                prop_assert!(y >= lo - 1e-12 && y <= hi + 1e-12);
            }
        }

        #[test]
        fn slot_scaling_preserves_order(mut t in prop::collection::vec(0u64..200_000, 2..50), scale in 1e-4f64..1e-1) {
            t.sort_unstable();
            let config = PipelineConfig { t_scale: scale, ..PipelineConfig::default() };
            let s = scale_and_smooth(&vec![0.5f64; t.len()], &t, &config).unwrap();
            prop_assert!(s.timestamps().windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
