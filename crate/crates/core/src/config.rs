//! Pipeline calibration constants and their flat `key = value` file format.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Every calibration constant of the extraction pipeline.
///
/// The multiplier functions applied per input variant and per frequency bin
/// are fixed by the extraction module and are deliberately not configurable.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Transform size N, and the number of points taken after the sync point.
    pub fft_size: usize,
    /// Number of input variants concatenated into one secret.
    pub num_factors: usize,
    /// Constant C in the sensor scaling `s * Var(s) * C`.
    pub sensor_scale_c: f64,
    /// Millisecond timestamps are multiplied by this and floored to slots.
    pub t_scale: f64,
    /// EWMA weight of the newest sample.
    pub ewma_alpha: f64,
    /// Width of the detection band above the lower threshold, in percent.
    pub threshold_k: f64,
    /// Nominal number of samples per capture. Informational.
    pub sample_count: usize,
    /// Percentile of the absolute step distribution used as lower threshold.
    pub percentile: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            fft_size: 64,
            num_factors: 5,
            sensor_scale_c: 10_000.0,
            t_scale: 0.001,
            ewma_alpha: 0.5,
            threshold_k: 10.0,
            sample_count: 150,
            percentile: 75.0,
        }
    }
}

const KEYS: [&str; 8] = [
    "fft_size",
    "num_factors",
    "sensor_scale_C",
    "t_scale",
    "ewma_alpha",
    "threshold_K",
    "sample_count",
    "percentile",
];

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !self.fft_size.is_power_of_two() {
            return bad(format!("fft_size {} is not a power of two", self.fft_size));
        }
        if self.num_factors == 0 {
            return bad("num_factors must be at least 1".into());
        }
        if !(self.ewma_alpha > 0.0 && self.ewma_alpha <= 1.0) {
            return bad(format!("ewma_alpha {} outside (0, 1]", self.ewma_alpha));
        }
        if !(self.t_scale.is_finite() && self.t_scale > 0.0) {
            return bad(format!("t_scale {} must be positive", self.t_scale));
        }
        if !self.sensor_scale_c.is_finite() {
            return bad("sensor_scale_C must be finite".into());
        }
        if !(self.threshold_k.is_finite() && self.threshold_k >= 0.0) {
            return bad(format!(
                "threshold_K {} must be non-negative",
                self.threshold_k
            ));
        }
        if !(self.percentile > 0.0 && self.percentile <= 100.0) {
            return bad(format!("percentile {} outside (0, 100]", self.percentile));
        }
        Ok(())
    }

    /// Sets one field from its textual key and value. Keys match the file format.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad value `{value}` for {key}")))
        }
        match key.trim() {
            "fft_size" => self.fft_size = num(key, value)?,
            "num_factors" => self.num_factors = num(key, value)?,
            "sensor_scale_C" => self.sensor_scale_c = num(key, value)?,
            "t_scale" => self.t_scale = num(key, value)?,
            "ewma_alpha" => self.ewma_alpha = num(key, value)?,
            "threshold_K" => self.threshold_k = num(key, value)?,
            "sample_count" => self.sample_count = num(key, value)?,
            "percentile" => self.percentile = num(key, value)?,
            other => return Err(Error::InvalidConfig(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Parses a flat `key = value` file layered over the defaults.
    ///
    /// Blank lines and lines starting with `#` are ignored.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut config = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                message: format!("expected key = value, got `{line}`"),
            })?;
            config.set(key, value).map_err(|e| Error::Parse {
                line: idx + 1,
                message: e.to_string(),
            })?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn to_kv_string(&self) -> String {
        let values = [
            self.fft_size.to_string(),
            self.num_factors.to_string(),
            self.sensor_scale_c.to_string(),
            self.t_scale.to_string(),
            self.ewma_alpha.to_string(),
            self.threshold_k.to_string(),
            self.sample_count.to_string(),
            self.percentile.to_string(),
        ];
        let mut out = String::new();
        for (key, value) in KEYS.iter().zip(values) {
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }

    /// First 8 bytes of SHA-256 over the canonical key-value form, hex encoded.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_kv_string().as_bytes());
        hex::encode(&digest[..8])
    }

    /// Width of one timestamp slot in milliseconds.
    pub fn slot_ms(&self) -> f64 {
        1.0 / self.t_scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let config = PipelineConfig::default();
        config.validate().unwrap();
        assert_eq!(config.fft_size, 64);
        assert_eq!(config.num_factors, 5);
        assert_eq!(config.sensor_scale_c, 10_000.0);
    }

    #[test]
    fn kv_round_trip() {
        let config = PipelineConfig {
            fft_size: 16,
            t_scale: 0.0005,
            ..PipelineConfig::default()
        };
        let parsed = PipelineConfig::from_kv_str(&config.to_kv_string()).unwrap();
        assert_eq!(parsed, config);
        assert_eq!(parsed.fingerprint(), config.fingerprint());
    }

    #[test]
    fn partial_file_layers_over_defaults() {
        let parsed = PipelineConfig::from_kv_str("# calibration\nfft_size=16\n\n").unwrap();
        assert_eq!(parsed.fft_size, 16);
        assert_eq!(parsed.num_factors, 5);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(PipelineConfig::from_kv_str("fft_size = 48").is_err());
        assert!(PipelineConfig::from_kv_str("ewma_alpha = 0").is_err());
        assert!(PipelineConfig::from_kv_str("t_scale = -1").is_err());
        assert!(PipelineConfig::from_kv_str("num_factors = 0").is_err());
        assert!(matches!(
            PipelineConfig::from_kv_str("bogus = 1"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            PipelineConfig::from_kv_str("fft_size 64"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn fingerprint_tracks_changes() {
        let a = PipelineConfig::default();
        let mut b = a.clone();
        b.num_factors = 6;
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint().len(), 16);
    }
}
