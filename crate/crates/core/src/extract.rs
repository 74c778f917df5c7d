//! Shared-entropy extraction from an aligned window.
//!
//! For each input variant `m = 1..=num_factors` the window is combined into
//! `x[i] = (1 + m/10) * s[i] + j * ts[i]`, transformed, reshaped so that bin
//! `k` becomes `k * E` with `E` the sum of all bins, transformed back, and the
//! least-significant bit of each rounded magnitude is harvested. Variants are
//! concatenated in ascending `m`.
//!
//! Because the bin sum of a forward transform equals `N * x[0]`, the reshaped
//! spectrum, and therefore every harvested bit, depends only on the first
//! point of the window. Devices agree exactly when their first aligned
//! samples agree closely enough to round identically.

use std::fmt::Write as _;

use num_complex::Complex;

use crate::bits;
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::fft::{dft, idft, ComplexVector};
use crate::scalar::Scalar;
use crate::sync::AlignedWindow;

/// Variant multiplier applied to sensor values.
pub fn variant_factor<T: Scalar>(m: usize) -> T {
    T::one() + T::of_usize(m) / T::of(10.0)
}

/// Per-bin multiplier of the reshaped spectrum.
pub fn bin_factor<T: Scalar>(k: usize) -> T {
    T::of_usize(k)
}

/// `x[i] = f(m) * values[i] + j * timestamps[i]`.
pub fn combine_complex<T: Scalar>(window: &AlignedWindow<T>, m: usize) -> ComplexVector<T> {
    let f = variant_factor::<T>(m);
    window
        .values()
        .iter()
        .zip(window.timestamps())
        .map(|(&s, &ts)| Complex::new(f * s, ts))
        .collect::<Vec<_>>()
        .into()
}

/// Replaces bin `k` with `k * E`, where `E` is the sum of all input bins.
pub fn reshape_spectrum<T: Scalar>(spectrum: &ComplexVector<T>) -> ComplexVector<T> {
    let total = spectrum
        .as_slice()
        .iter()
        .fold(Complex::new(T::zero(), T::zero()), |acc, &v| acc + v);
    (0..spectrum.len())
        .map(|k| total.scale(bin_factor(k)))
        .collect::<Vec<_>>()
        .into()
}

/// LSB of each magnitude rounded half away from zero.
pub fn extract_bits<T: Scalar>(time_domain: &ComplexVector<T>) -> Result<Vec<bool>> {
    time_domain
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let magnitude = v.re.hypot(v.im);
            if !magnitude.is_finite() {
                return Err(Error::NonFinite(i));
            }
            let rounded = magnitude.round();
            Ok(rounded % T::of(2.0) == T::one())
        })
        .collect()
}

/// Bits harvested from one variant.
pub fn extract_variant<T: Scalar>(window: &AlignedWindow<T>, m: usize) -> Result<Vec<bool>> {
    let spectrum = dft(&combine_complex(window, m))?;
    let time_domain = idft(&reshape_spectrum(&spectrum))?;
    extract_bits(&time_domain)
}

/// Runs every variant over a window of exactly `fft_size` points.
pub fn extract_shared_entropy<T: Scalar>(
    window: &AlignedWindow<T>,
    config: &PipelineConfig,
) -> Result<SharedSecret> {
    config.validate()?;
    if window.len() != config.fft_size {
        return Err(Error::InvalidConfig(format!(
            "window has {} points, fft_size is {}",
            window.len(),
            config.fft_size
        )));
    }
    let mut bits = Vec::with_capacity(config.fft_size * config.num_factors);
    for m in 1..=config.num_factors {
        bits.extend(extract_variant(window, m)?);
    }
    Ok(SharedSecret {
        bits,
        config_fingerprint: config.fingerprint(),
        sync_index: window.sync_index(),
        fft_size: config.fft_size,
        num_factors: config.num_factors,
    })
}

/// Extracted secret plus where and how it was produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SharedSecret {
    pub bits: Vec<bool>,
    pub config_fingerprint: String,
    pub sync_index: usize,
    pub fft_size: usize,
    pub num_factors: usize,
}

impl SharedSecret {
    pub fn bit_string(&self) -> String {
        bits::to_bit_string(&self.bits)
    }

    /// MSB-first packing of the full bit string.
    pub fn to_bytes(&self) -> Vec<u8> {
        bits::pack_msb_first(&self.bits)
    }

    /// Length once leading zero bits are dropped.
    pub fn stripped_len(&self) -> usize {
        bits::stripped_len(&self.bits)
    }

    /// Three-line file: bit string, hex packing, metadata.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.bit_string());
        let _ = writeln!(out, "{}", hex::encode(self.to_bytes()));
        let _ = writeln!(
            out,
            "sync_index={} fft_size={} num_factors={} stripped_len={} config={}",
            self.sync_index,
            self.fft_size,
            self.num_factors,
            self.stripped_len(),
            self.config_fingerprint
        );
        out
    }

    /// Parses the format written by [`SharedSecret::to_file_string`].
    ///
    /// The hex line must agree with the bit line; metadata keys other than the
    /// ones written are ignored.
    pub fn from_file_str(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let bad = |line: usize, message: &str| Error::Parse {
            line,
            message: message.to_string(),
        };
        let bits = bits::parse_bit_string(lines.next().ok_or_else(|| bad(1, "missing bit line"))?)
            .map_err(|e| bad(1, &e.to_string()))?;
        if bits.is_empty() {
            return Err(Error::EmptySecret);
        }
        let hex_line = lines
            .next()
            .ok_or_else(|| bad(2, "missing hex line"))?
            .trim();
        let packed = hex::decode(hex_line).map_err(|e| bad(2, &e.to_string()))?;
        if packed != bits::pack_msb_first(&bits) {
            return Err(bad(2, "hex packing does not match bit line"));
        }
        let meta = lines
            .next()
            .ok_or_else(|| bad(3, "missing metadata line"))?;
        let mut secret = SharedSecret {
            bits,
            config_fingerprint: String::new(),
            sync_index: 0,
            fft_size: 0,
            num_factors: 0,
        };
        for field in meta.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| bad(3, "expected key=value fields"))?;
            let int = || value.parse::<usize>().map_err(|_| bad(3, "bad integer"));
            match key {
                "sync_index" => secret.sync_index = int()?,
                "fft_size" => secret.fft_size = int()?,
                "num_factors" => secret.num_factors = int()?,
                "config" => secret.config_fingerprint = value.to_string(),
                _ => {}
            }
        }
        Ok(secret)
    }
}
