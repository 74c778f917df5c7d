//! Correlated gyroscope traces for desk-scale experiments.
//!
//! One latent angular-velocity signal is drawn per trial and every device
//! observes it through its own gain, frame rotation, additive noise, clock
//! jitter and trigger offset. Randomness comes from ChaCha streams keyed by
//! the trial seed: stream 0 drives the scene and stream `d + 1` drives device
//! `d`, so a group of `n` devices is a prefix of a group of `n + 1`.

mod experiment;
mod model;

pub use experiment::{
    mimicry_experiment, run_experiment, sweep_parameter, AdversaryModel, MimicryReport,
    SecretReport, SweepParameter,
};
pub use model::{MotionModel, NoiseModel, Preset};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::trace::{GyroSample, GyroTrace};

const GRID_S: f64 = 0.01;
const ADVERSARY_STREAM: u64 = 1 << 32;

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer, used to derive per-trial seeds.
pub(crate) fn mix(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
struct Tone {
    freq_hz: f64,
    phase: f64,
    amp: f64,
}

/// The shared motion of one trial.
#[derive(Debug, Clone)]
pub struct LatentMotion {
    tones: [Vec<Tone>; 3],
    walk: [Vec<f64>; 3],
    lead_in_s: f64,
    ramp_s: f64,
    lead_in_level: f64,
    /// Sampling phase common to all devices, ms.
    phase_ms: f64,
}

impl LatentMotion {
    pub fn draw(motion: &MotionModel, horizon_s: f64, rng: &mut impl Rng) -> Self {
        let axis_tones = |rng: &mut dyn rand::RngCore| {
            let count = rng.gen_range(motion.tones.0..=motion.tones.1);
            let amp = motion.amplitude * (2.0 / count as f64).sqrt();
            (0..count)
                .map(|_| Tone {
                    freq_hz: if motion.band_hz.1 > motion.band_hz.0 {
                        rng.gen_range(motion.band_hz.0..motion.band_hz.1)
                    } else {
                        motion.band_hz.0
                    },
                    phase: rng.gen_range(0.0..std::f64::consts::TAU),
                    amp: amp * rng.gen_range(0.5..1.5),
                })
                .collect::<Vec<_>>()
        };
        let tones = [axis_tones(rng), axis_tones(rng), axis_tones(rng)];

        let steps = (horizon_s / GRID_S).ceil() as usize + 2;
        let rho = (-GRID_S / motion.walk_tau_s).exp();
        let sd = motion.amplitude * motion.walk_fraction;
        let innov = sd * (1.0 - rho * rho).sqrt();
        let axis_walk = |rng: &mut dyn rand::RngCore| {
            let mut v: f64 = sd * rng.sample::<f64, _>(StandardNormal);
            (0..steps)
                .map(|_| {
                    let out = v;
                    v = rho * v + innov * rng.sample::<f64, _>(StandardNormal);
                    out
                })
                .collect::<Vec<_>>()
        };
        let walk = [axis_walk(rng), axis_walk(rng), axis_walk(rng)];

        let phase_ms = rng.gen_range(0.0..motion.period_ms());
        Self {
            tones,
            walk,
            lead_in_s: motion.lead_in_s,
            ramp_s: motion.ramp_s,
            lead_in_level: motion.lead_in_level,
            phase_ms,
        }
    }

    fn envelope(&self, t_s: f64) -> f64 {
        if t_s < self.lead_in_s {
            self.lead_in_level
        } else if t_s < self.lead_in_s + self.ramp_s {
            let f = (t_s - self.lead_in_s) / self.ramp_s;
            self.lead_in_level + (1.0 - self.lead_in_level) * f
        } else {
            1.0
        }
    }

    /// Angular velocity at physical time `t_s`, rad/s.
    pub fn at(&self, t_s: f64) -> [f64; 3] {
        let t = t_s.max(0.0);
        let pos = t / GRID_S;
        let i = (pos.floor() as usize).min(self.walk[0].len() - 2);
        let frac = (pos - i as f64).min(1.0);
        let env = self.envelope(t);
        let mut out = [0.0; 3];
        for (axis, o) in out.iter_mut().enumerate() {
            let tone: f64 = self.tones[axis]
                .iter()
                .map(|tn| tn.amp * (std::f64::consts::TAU * tn.freq_hz * t + tn.phase).sin())
                .sum();
            let w = &self.walk[axis];
            let walk = w[i] + (w[i + 1] - w[i]) * frac;
            *o = env * (tone + walk);
        }
        out
    }
}

/// One device's fixed observation errors for a trial.
#[derive(Debug, Clone)]
struct DeviceDraw {
    gain: f64,
    rotation: [[f64; 3]; 3],
    start_ms: f64,
}

fn rotation_matrix(axis: [f64; 3], angle: f64) -> [[f64; 3]; 3] {
    let [x, y, z] = axis;
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
}

const IDENTITY: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

fn draw_device(noise: &NoiseModel, rotated: bool, rng: &mut impl Rng) -> DeviceDraw {
    // Each gain deviates by pct/sqrt(2) so the difference of two devices has std pct.
    let gain_sd = noise.gain_error_pct / 100.0 / std::f64::consts::SQRT_2;
    let gain = 1.0 + gain_sd * rng.sample::<f64, _>(StandardNormal);
    let rotation = if rotated && noise.axis_misalignment_deg > 0.0 {
        let v: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
            .sqrt()
            .max(f64::MIN_POSITIVE);
        rotation_matrix(
            [v[0] / norm, v[1] / norm, v[2] / norm],
            noise.axis_misalignment_deg.to_radians(),
        )
    } else {
        IDENTITY
    };
    let start_ms = if noise.start_offset_ms > 0.0 {
        rng.gen_range(0.0..=noise.start_offset_ms)
    } else {
        0.0
    };
    DeviceDraw {
        gain,
        rotation,
        start_ms,
    }
}

fn observe(
    latent: &LatentMotion,
    motion: &MotionModel,
    noise: &NoiseModel,
    device: &DeviceDraw,
    shift_ms: f64,
    label: String,
    rng: &mut impl Rng,
) -> Result<GyroTrace> {
    let period = motion.period_ms();
    let mut samples = Vec::with_capacity(motion.sample_count());
    let mut last: Option<u64> = None;
    for k in 0..motion.sample_count() {
        let mut t_rel = latent.phase_ms + k as f64 * period;
        if noise.jitter_ms > 0.0 {
            t_rel += noise.jitter_ms * rng.sample::<f64, _>(StandardNormal);
        }
        let t_phys_s = (shift_ms + device.start_ms + t_rel) / 1000.0;
        let w = latent.at(t_phys_s);
        let r = &device.rotation;
        let mut v = [0.0; 3];
        for a in 0..3 {
            v[a] = device.gain * (r[a][0] * w[0] + r[a][1] * w[1] + r[a][2] * w[2]);
            if noise.additive_sigma > 0.0 {
                v[a] += noise.additive_sigma * rng.sample::<f64, _>(StandardNormal);
            }
        }
        let mut t_ms = t_rel.max(0.0).round() as u64;
        if let Some(prev) = last {
            t_ms = t_ms.max(prev + 1);
        }
        last = Some(t_ms);
        samples.push(GyroSample::new(t_ms, v[0], v[1], v[2]));
    }
    GyroTrace::new(samples, label)
}

/// Latent plus per-device traces for one seed.
pub(crate) struct Scene {
    latent: LatentMotion,
}

impl Scene {
    pub(crate) fn new(motion: &MotionModel, horizon_s: f64, seed: u64) -> Self {
        let mut rng = rng_for(seed, 0);
        Self {
            latent: LatentMotion::draw(motion, horizon_s, &mut rng),
        }
    }

    pub(crate) fn device(
        &self,
        motion: &MotionModel,
        noise: &NoiseModel,
        seed: u64,
        index: usize,
    ) -> Result<GyroTrace> {
        let mut rng = rng_for(seed, index as u64 + 1);
        let draw = draw_device(noise, index > 0, &mut rng);
        observe(
            &self.latent,
            motion,
            noise,
            &draw,
            0.0,
            format!("device{index}"),
            &mut rng,
        )
    }

    pub(crate) fn adversary(
        &self,
        motion: &MotionModel,
        noise: &NoiseModel,
        seed: u64,
        shift_ms: f64,
    ) -> Result<GyroTrace> {
        let mut rng = rng_for(seed, ADVERSARY_STREAM);
        let draw = draw_device(noise, true, &mut rng);
        observe(
            &self.latent,
            motion,
            noise,
            &draw,
            shift_ms,
            "adversary".into(),
            &mut rng,
        )
    }
}

pub(crate) fn horizon_s(motion: &MotionModel, noise: &NoiseModel, extra_ms: f64) -> f64 {
    motion.duration_s + (motion.period_ms() + noise.start_offset_ms + extra_ms) / 1000.0 + 1.0
}

/// `n_devices` traces of one shared motion, deterministic in `seed`.
pub fn generate_group(
    n_devices: usize,
    motion: &MotionModel,
    noise: &NoiseModel,
    seed: u64,
) -> Result<Vec<GyroTrace>> {
    if n_devices < 2 {
        return Err(Error::InvalidModel(format!(
            "a group needs at least 2 devices, got {n_devices}"
        )));
    }
    motion.validate()?;
    noise.validate()?;
    let scene = Scene::new(motion, horizon_s(motion, noise, 0.0), seed);
    (0..n_devices)
        .map(|d| scene.device(motion, noise, seed, d))
        .collect()
}
