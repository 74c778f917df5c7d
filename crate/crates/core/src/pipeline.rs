//! One device's full path from raw trace to secret.

use crate::config::PipelineConfig;
use crate::error::Result;
use crate::extract::{extract_shared_entropy, SharedSecret};
use crate::scalar::Scalar;
use crate::sync::{align, compute_thresholds, find_sync_point};
use crate::trace::{prepare, GyroTrace};

/// Project, scale, smooth, synchronize, align and extract.
pub fn derive_secret<T: Scalar>(
    trace: &GyroTrace,
    config: &PipelineConfig,
) -> Result<SharedSecret> {
    config.validate()?;
    let series = prepare::<T>(trace, config)?;
    let thresholds = compute_thresholds(&series, config)?;
    let sync_index = find_sync_point(&series, &thresholds)?;
    let window = align(&series, sync_index, config)?;
    extract_shared_entropy(&window, config)
}
