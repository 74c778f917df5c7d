//! Independent, per-device detection of the synchronization point.
//!
//! Each device derives a detection band from its own step distribution and
//! picks the first step that falls strictly inside it. Nothing is exchanged
//! between devices.

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::trace::PreparedSeries;

/// Detection band `(lower, upper)` on absolute steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds<T> {
    pub lower: T,
    pub upper: T,
}

/// The `fft_size` points starting at the sync point.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedWindow<T> {
    values: Vec<T>,
    timestamps: Vec<T>,
    sync_index: usize,
}

impl<T: Scalar> AlignedWindow<T> {
    /// Builds a window directly, e.g. for feeding the extractor synthetic data.
    pub fn new(values: Vec<T>, timestamps: Vec<T>, sync_index: usize) -> Result<Self> {
        if values.len() != timestamps.len() || values.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "window needs matching non-empty sequences, got {} values and {} timestamps",
                values.len(),
                timestamps.len()
            )));
        }
        Ok(Self {
            values,
            timestamps,
            sync_index,
        })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn timestamps(&self) -> &[T] {
        &self.timestamps
    }

    pub fn sync_index(&self) -> usize {
        self.sync_index
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `|values[n] - values[n-1]|` for `n = 1..len`; element `n-1` holds step `n`.
pub fn absolute_steps<T: Scalar>(values: &[T]) -> Vec<T> {
    values.windows(2).map(|w| (w[1] - w[0]).abs()).collect()
}

/// Nearest-rank percentile: the `ceil(p/100 * n)`-th smallest element.
pub fn nearest_rank<T: Scalar>(xs: &[T], percentile: f64) -> Option<T> {
    if xs.is_empty() {
        return None;
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("steps are finite"));
    let n = sorted.len();
    let rank = ((percentile * n as f64) / 100.0).ceil() as usize;
    Some(sorted[rank.clamp(1, n) - 1])
}

/// Lower threshold is the configured percentile of the absolute steps, the
/// upper one inflates it by `threshold_K` percent.
pub fn compute_thresholds<T: Scalar>(
    series: &PreparedSeries<T>,
    config: &PipelineConfig,
) -> Result<Thresholds<T>> {
    let steps = absolute_steps(series.values());
    let lower = nearest_rank(&steps, config.percentile).ok_or(Error::InsufficientData {
        needed: 2,
        got: series.len(),
    })?;
    let upper = lower * (T::one() + T::of(config.threshold_k) / T::of(100.0));
    Ok(Thresholds { lower, upper })
}

/// Smallest `n >= 1` with `lower < |Δx_n| < upper`.
pub fn find_sync_point<T: Scalar>(series: &PreparedSeries<T>, th: &Thresholds<T>) -> Result<usize> {
    absolute_steps(series.values())
        .iter()
        .position(|&step| th.lower < step && step < th.upper)
        .map(|i| i + 1)
        .ok_or(Error::NoSyncPoint)
}

/// Discards everything before `sync_index` and keeps the next `fft_size` points.
pub fn align<T: Scalar>(
    series: &PreparedSeries<T>,
    sync_index: usize,
    config: &PipelineConfig,
) -> Result<AlignedWindow<T>> {
    let needed = config.fft_size;
    let available = series.len().saturating_sub(sync_index);
    if available < needed {
        return Err(Error::InsufficientTail {
            sync_index,
            needed,
            available,
        });
    }
    let range = sync_index..sync_index + needed;
    Ok(AlignedWindow {
        values: series.values()[range.clone()].to_vec(),
        timestamps: series.timestamps()[range].to_vec(),
        sync_index,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;

    fn series_from_steps(steps: &[f64]) -> PreparedSeries<f64> {
        let mut values = vec![0.0];
        for s in steps {
            values.push(values.last().unwrap() + s);
        }
        let timestamps = (0..values.len()).map(|i| i as f64).collect();
        PreparedSeries::new(values, timestamps).unwrap()
    }

    /// Independent percentile oracle: count how many elements are <= each
    /// candidate and take the first candidate covering the required rank.
    fn percentile_by_counting(xs: &[f64], p: f64) -> f64 {
        let need = (p * xs.len() as f64 / 100.0).ceil().max(1.0) as usize;
        let mut candidates = xs.to_vec();
        candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
        *candidates
            .iter()
            .find(|&&c| xs.iter().filter(|&&x| x <= c).count() >= need)
            .unwrap()
    }

    #[test]
    fn permutation_of_one_to_hundred() {
        // steps alternate sign so |Δ| is a permutation of 1..=100
        let mut order: Vec<f64> = (1..=100).map(f64::from).collect();
        order.reverse();
        order.swap(3, 70);
        let signed: Vec<f64> = order
            .iter()
            .enumerate()
            .map(|(i, &s)| if i % 2 == 0 { s } else { -s })
            .collect();
        let series = series_from_steps(&signed);
        let th = compute_thresholds(&series, &PipelineConfig::default()).unwrap();
        assert_eq!(th.lower, percentile_by_counting(&order, 75.0));
        assert_eq!(th.lower, 75.0);
        assert_relative_eq!(th.upper, 82.5, epsilon = 1e-12);
    }

    #[test]
    fn constant_steps() {
        let series = series_from_steps(&[0.25; 20]);
        let th = compute_thresholds(&series, &PipelineConfig::default()).unwrap();
        assert_eq!(th.lower, 0.25);
        assert_relative_eq!(th.upper, 0.275, epsilon = 1e-15);
        assert_eq!(find_sync_point(&series, &th), Err(Error::NoSyncPoint));
    }

    #[test]
    fn single_point_is_insufficient() {
        let series = PreparedSeries::new(vec![1.0f64], vec![0.0]).unwrap();
        assert!(matches!(
            compute_thresholds(&series, &PipelineConfig::default()),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn first_step_inside_band_wins() {
        let th = Thresholds {
            lower: 1.0,
            upper: 3.0,
        };
        assert_eq!(
            find_sync_point(&series_from_steps(&[0.5, 2.0, 5.0]), &th),
            Ok(2)
        );
        assert_eq!(find_sync_point(&series_from_steps(&[2.0, 2.5]), &th), Ok(1));
        // boundaries are excluded
        assert_eq!(
            find_sync_point(&series_from_steps(&[1.0, 3.0, -1.0]), &th),
            Err(Error::NoSyncPoint)
        );
    }

    #[test]
    fn alignment_slices() {
        let values: Vec<f64> = (0..150).map(f64::from).collect();
        let series = PreparedSeries::new(values.clone(), values).unwrap();
        let config = PipelineConfig::default();
        let w = align(&series, 10, &config).unwrap();
        assert_eq!(w.len(), 64);
        assert_eq!(w.values()[0], 10.0);
        assert_eq!(*w.values().last().unwrap(), 73.0);
        assert_eq!(w.sync_index(), 10);
        assert_eq!(
            align(&series, 100, &config),
            Err(Error::InsufficientTail {
                sync_index: 100,
                needed: 64,
                available: 50
            })
        );
        let single = PipelineConfig {
            fft_size: 1,
            ..config
        };
        let w = align(&series, 42, &single).unwrap();
        assert_eq!(w.values(), &[42.0]);
        assert_eq!(
            align(&series, 150, &single).unwrap_err(),
            Error::InsufficientTail {
                sync_index: 150,
                needed: 1,
                available: 0
            }
        );
    }

    proptest! {
        #[test]
        fn scaling_preserves_sync_index(
            steps in prop::collection::vec(-10.0f64..10.0, 8..120),
            exp in -6i32..6,
        ) {
            let c = 2f64.powi(exp);
            let config = PipelineConfig::default();
            let a = series_from_steps(&steps);
            let scaled: Vec<f64> = steps.iter().map(|s| s * c).collect();
            let b = series_from_steps(&scaled);
            let ta = compute_thresholds(&a, &config).unwrap();
            let tb = compute_thresholds(&b, &config).unwrap();
            prop_assert_eq!(ta.lower * c, tb.lower);
            prop_assert_eq!(ta.upper * c, tb.upper);
            prop_assert_eq!(find_sync_point(&a, &ta), find_sync_point(&b, &tb));
        }

        #[test]
        fn sync_index_is_minimal(steps in prop::collection::vec(-10.0f64..10.0, 8..120)) {
            let series = series_from_steps(&steps);
            let th = compute_thresholds(&series, &PipelineConfig::default()).unwrap();
            if let Ok(n) = find_sync_point(&series, &th) {
                let abs = absolute_steps(series.values());
                prop_assert!(th.lower < abs[n - 1] && abs[n - 1] < th.upper);
                for earlier in &abs[..n - 1] {
                    prop_assert!(!(th.lower < *earlier && *earlier < th.upper));
                }
            }
        }

        #[test]
        fn percentile_matches_counting_oracle(xs in prop::collection::vec(0.0f64..100.0, 1..200), p in 1.0f64..=100.0) {
            prop_assert_eq!(nearest_rank(&xs, p).unwrap(), percentile_by_counting(&xs, p));
        }
    }
}
