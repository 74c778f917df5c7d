//! Communication-free shared secrets from gyroscopes moved together.
//!
//! Two or more devices record their own gyroscope while being shaken in the
//! same hand or pocket. Each one independently prepares its trace, finds a
//! synchronization point from its own step statistics, and extracts bits
//! from the aligned window. Devices that saw the same motion arrive at the
//! same bit string without exchanging a single message.
//!
//! Around that core the crate provides key conditioning and message
//! encryption ([`keymsg`]), a NIST SP 800-22 subset and byte-entropy
//! estimator ([`randeval`]), and a correlated-trace simulator for batch
//! experiments ([`simulator`]).
//!
//! The signal path is generic over [`Scalar`]; the aliases below fix it to
//! `f64`, which is what cross-device agreement is calibrated for.
//!
//! ```
//! use gyrosecret_core::simulator::{generate_group, Preset};
//! use gyrosecret_core::{derive_secret, PipelineConfig};
//!
//! let p = Preset::Noiseless;
//! let traces = generate_group(2, &p.motion(), &p.noise(), 12).unwrap();
//! let config = PipelineConfig::default();
//! let a = derive_secret(&traces[0], &config).unwrap();
//! let b = derive_secret(&traces[1], &config).unwrap();
//! assert_eq!(a.bits, b.bits);
//! assert_eq!(a.bits.len(), 320);
//! ```

pub mod bits;
pub mod config;
pub mod error;
pub mod extract;
pub mod fft;
pub mod keymsg;
pub mod pipeline;
pub mod randeval;
pub mod scalar;
pub mod simulator;
pub mod sync;
pub mod trace;

pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use extract::SharedSecret;
pub use scalar::Scalar;
pub use trace::{parse_trace, GyroSample, GyroTrace};

pub type PreparedSeries64 = trace::PreparedSeries<f64>;
pub type Thresholds64 = sync::Thresholds<f64>;
pub type AlignedWindow64 = sync::AlignedWindow<f64>;
pub type ComplexVector64 = fft::ComplexVector<f64>;

pub type PreparedSeries32 = trace::PreparedSeries<f32>;
pub type Thresholds32 = sync::Thresholds<f32>;
pub type AlignedWindow32 = sync::AlignedWindow<f32>;
pub type ComplexVector32 = fft::ComplexVector<f32>;

/// Full per-device pipeline in double precision.
pub fn derive_secret(trace: &GyroTrace, config: &PipelineConfig) -> Result<SharedSecret> {
    pipeline::derive_secret::<f64>(trace, config)
}
