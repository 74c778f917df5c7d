use std::str::FromStr;

use crate::error::{Error, Result};

/// Shared latent motion: random-phase tones plus a low-passed random walk,
/// preceded by a quiet lead-in while the devices are being brought together.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionModel {
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    /// Tone frequencies are drawn uniformly from this range.
    pub band_hz: (f64, f64),
    /// Inclusive range for the number of tones per axis.
    pub tones: (usize, usize),
    /// RMS scale of the tone component, rad/s.
    pub amplitude: f64,
    /// Random-walk scale relative to `amplitude`.
    pub walk_fraction: f64,
    /// Correlation time of the random walk, seconds.
    pub walk_tau_s: f64,
    pub lead_in_s: f64,
    /// Linear ramp from the lead-in level to full motion, seconds.
    pub ramp_s: f64,
    /// Motion scale during the lead-in, relative to full motion.
    pub lead_in_level: f64,
}

impl MotionModel {
    pub fn sample_count(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round() as usize
    }

    pub fn period_ms(&self) -> f64 {
        1000.0 / self.sample_rate_hz
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidModel(m.to_string()));
        let finite = [
            self.duration_s,
            self.sample_rate_hz,
            self.band_hz.0,
            self.band_hz.1,
            self.amplitude,
            self.walk_fraction,
            self.walk_tau_s,
            self.lead_in_s,
            self.ramp_s,
            self.lead_in_level,
        ];
        if finite.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return bad("motion parameters must be finite and non-negative");
        }
        if self.sample_rate_hz <= 0.0 || self.sample_count() < 2 {
            return bad("duration * sample rate must give at least 2 samples");
        }
        if self.band_hz.0 > self.band_hz.1 {
            return bad("band lower edge above upper edge");
        }
        if self.tones.0 == 0 || self.tones.0 > self.tones.1 {
            return bad("tone count range must be non-empty and start at 1 or more");
        }
        if self.walk_tau_s <= 0.0 {
            return bad("random-walk correlation time must be positive");
        }
        Ok(())
    }
}

/// Per-device observation error.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    /// Standard deviation, in percent, of the relative reading difference
    /// between two devices caused by their gain errors.
    pub gain_error_pct: f64,
    /// Additive white noise per axis, rad/s.
    pub additive_sigma: f64,
    /// Standard deviation of per-sample timing jitter, ms.
    pub jitter_ms: f64,
    /// Trigger offsets are drawn uniformly from `[0, start_offset_ms]`.
    pub start_offset_ms: f64,
    /// Rotation applied to every device frame except the first, degrees.
    pub axis_misalignment_deg: f64,
}

impl NoiseModel {
    pub fn zero() -> Self {
        Self {
            gain_error_pct: 0.0,
            additive_sigma: 0.0,
            jitter_ms: 0.0,
            start_offset_ms: 0.0,
            axis_misalignment_deg: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let values = [
            self.gain_error_pct,
            self.additive_sigma,
            self.jitter_ms,
            self.start_offset_ms,
            self.axis_misalignment_deg,
        ];
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidModel(
                "noise parameters must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Frozen scenario presets.
///
/// Synchronization reacts to relative step changes near 0.1%, so timing and
/// additive noise sit far below typical datasheet figures; the 10% gain
/// error is what mostly separates the devices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    InHand,
    InPocket,
    /// Identical observations on every device.
    Noiseless,
}

impl Preset {
    pub fn motion(self) -> MotionModel {
        let base = MotionModel {
            duration_s: 60.0,
            sample_rate_hz: 2.5,
            band_hz: (0.5, 4.0),
            tones: (3, 6),
            amplitude: 0.14,
            walk_fraction: 0.4,
            walk_tau_s: 2.0,
            lead_in_s: 2.0,
            ramp_s: 1.0,
            lead_in_level: 0.05,
        };
        match self {
            Preset::InHand => MotionModel {
                amplitude: 0.13,
                ..base
            },
            Preset::InPocket | Preset::Noiseless => base,
        }
    }

    pub fn noise(self) -> NoiseModel {
        match self {
            Preset::InHand => NoiseModel {
                gain_error_pct: 10.0,
                additive_sigma: 0.00001,
                jitter_ms: 0.01,
                start_offset_ms: 0.02,
                axis_misalignment_deg: 0.005,
            },
            Preset::InPocket => NoiseModel {
                gain_error_pct: 10.0,
                additive_sigma: 0.00002,
                jitter_ms: 0.02,
                start_offset_ms: 0.05,
                axis_misalignment_deg: 0.01,
            },
            Preset::Noiseless => NoiseModel::zero(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::InHand => "in-hand",
            Preset::InPocket => "in-pocket",
            Preset::Noiseless => "noiseless",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "in-hand" => Ok(Preset::InHand),
            "in-pocket" => Ok(Preset::InPocket),
            "noiseless" => Ok(Preset::Noiseless),
            other => Err(Error::InvalidModel(format!("unknown preset `{other}`"))),
        }
    }
}
