use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;

use super::{horizon_s, mix, MotionModel, NoiseModel, Scene};
use crate::bits::hamming_prefix;
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::extract::SharedSecret;

/// Histogram bucket width for stripped secret lengths, bits.
pub const LENGTH_BUCKET: usize = 8;
/// Histogram bucket width for failure bit-error percentages.
pub const ERROR_BUCKET_PCT: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SecretReport {
    pub trials: usize,
    pub devices: usize,
    pub successes: usize,
    /// Failed trials in which at least one device hit a pipeline error.
    pub pipeline_errors: usize,
    pub success_rate: f64,
    /// Raw secret length of device 0 for every trial without pipeline error.
    pub raw_lengths: Vec<usize>,
    /// Stripped length of the agreed secret for each successful trial.
    pub stripped_lengths: Vec<usize>,
    /// Worst percentage of differing bits against device 0, per failed
    /// trial without pipeline error, over the shorter secret.
    pub bit_error_pcts: Vec<f64>,
    /// Agreed secrets of successful trials, in trial order.
    pub secrets: Vec<SharedSecret>,
}

enum Trial {
    Agreed(SharedSecret),
    Differ { raw_len: usize, error_pct: f64 },
    PipelineError,
}

impl SecretReport {
    fn from_trials(devices: usize, outcomes: Vec<Trial>) -> Self {
        let trials = outcomes.len();
        let mut r = SecretReport {
            trials,
            devices,
            successes: 0,
            pipeline_errors: 0,
            success_rate: 0.0,
            raw_lengths: Vec::new(),
            stripped_lengths: Vec::new(),
            bit_error_pcts: Vec::new(),
            secrets: Vec::new(),
        };
        for o in outcomes {
            match o {
                Trial::Agreed(s) => {
                    r.successes += 1;
                    r.raw_lengths.push(s.bits.len());
                    r.stripped_lengths.push(s.stripped_len());
                    r.secrets.push(s);
                }
                Trial::Differ { raw_len, error_pct } => {
                    r.raw_lengths.push(raw_len);
                    r.bit_error_pcts.push(error_pct);
                }
                Trial::PipelineError => r.pipeline_errors += 1,
            }
        }
        r.success_rate = r.successes as f64 / trials as f64;
        r
    }

    /// `(bucket_start, count)` over stripped lengths.
    pub fn length_histogram(&self) -> Vec<(usize, usize)> {
        let Some(&max) = self.stripped_lengths.iter().max() else {
            return Vec::new();
        };
        let mut counts = vec![0usize; max / LENGTH_BUCKET + 1];
        for &l in &self.stripped_lengths {
            counts[l / LENGTH_BUCKET] += 1;
        }
        counts
            .into_iter()
            .enumerate()
            .map(|(i, c)| (i * LENGTH_BUCKET, c))
            .collect()
    }

    /// `(bucket_start_pct, count)` over failure bit-error percentages, 0..100.
    pub fn bit_error_histogram(&self) -> Vec<(f64, usize)> {
        let buckets = (100.0 / ERROR_BUCKET_PCT) as usize;
        let mut counts = vec![0usize; buckets];
        for &p in &self.bit_error_pcts {
            let i = ((p / ERROR_BUCKET_PCT) as usize).min(buckets - 1);
            counts[i] += 1;
        }
        counts
            .into_iter()
            .enumerate()
            .map(|(i, c)| (i as f64 * ERROR_BUCKET_PCT, c))
            .collect()
    }

    pub fn length_histogram_csv(&self) -> String {
        let mut s = String::from("stripped_len_from,count\n");
        for (b, c) in self.length_histogram() {
            let _ = writeln!(s, "{b},{c}");
        }
        s
    }

    pub fn bit_error_histogram_csv(&self) -> String {
        let mut s = String::from("bit_error_pct_from,count\n");
        for (b, c) in self.bit_error_histogram() {
            let _ = writeln!(s, "{b},{c}");
        }
        s
    }

    /// Fraction of failures (with comparable secrets) below `pct` differing bits.
    pub fn failures_below(&self, pct: f64) -> Option<f64> {
        if self.bit_error_pcts.is_empty() {
            return None;
        }
        let below = self.bit_error_pcts.iter().filter(|&&p| p < pct).count();
        Some(below as f64 / self.bit_error_pcts.len() as f64)
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "trials={}", self.trials);
        let _ = writeln!(s, "devices={}", self.devices);
        let _ = writeln!(s, "successes={}", self.successes);
        let _ = writeln!(s, "pipeline_errors={}", self.pipeline_errors);
        let _ = writeln!(s, "success_rate={:.6}", self.success_rate);
        if !self.stripped_lengths.is_empty() {
            let n = self.stripped_lengths.len() as f64;
            let mean = self.stripped_lengths.iter().sum::<usize>() as f64 / n;
            let _ = writeln!(s, "mean_stripped_len={mean:.3}");
        }
        if let Some(f) = self.failures_below(20.0) {
            let _ = writeln!(s, "failures_below_20pct={f:.6}");
        }
        s
    }
}

fn run_trial(
    n_devices: usize,
    motion: &MotionModel,
    noise: &NoiseModel,
    config: &PipelineConfig,
    seed: u64,
) -> Trial {
    let scene = Scene::new(motion, horizon_s(motion, noise, 0.0), seed);
    let mut secrets = Vec::with_capacity(n_devices);
    for d in 0..n_devices {
        let secret = scene
            .device(motion, noise, seed, d)
            .and_then(|t| crate::derive_secret(&t, config));
        match secret {
            Ok(s) => secrets.push(s),
            Err(_) => return Trial::PipelineError,
        }
    }
    let reference = &secrets[0];
    if secrets[1..].iter().all(|s| s.bits == reference.bits) {
        return Trial::Agreed(secrets.swap_remove(0));
    }
    let error_pct = secrets[1..]
        .iter()
        .map(|s| {
            let len = s.bits.len().min(reference.bits.len()).max(1);
            100.0 * hamming_prefix(&s.bits, &reference.bits) as f64 / len as f64
        })
        .fold(0.0, f64::max);
    Trial::Differ {
        raw_len: reference.bits.len(),
        error_pct,
    }
}

fn check_inputs(
    trials: usize,
    motion: &MotionModel,
    noise: &NoiseModel,
    config: &PipelineConfig,
) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidModel("trials must be at least 1".into()));
    }
    motion.validate()?;
    noise.validate()?;
    config.validate()
}

/// Runs `trials` independent groups in parallel; the report is independent
/// of scheduling.
pub fn run_experiment(
    trials: usize,
    n_devices: usize,
    motion: &MotionModel,
    noise: &NoiseModel,
    config: &PipelineConfig,
    seed: u64,
) -> Result<SecretReport> {
    check_inputs(trials, motion, noise, config)?;
    if n_devices < 2 {
        return Err(Error::InvalidModel(format!(
            "a group needs at least 2 devices, got {n_devices}"
        )));
    }
    let outcomes: Vec<Trial> = (0..trials as u64)
        .into_par_iter()
        .map(|i| run_trial(n_devices, motion, noise, config, mix(seed, i)))
        .collect();
    Ok(SecretReport::from_trials(n_devices, outcomes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    FftSize,
    TScale,
    NumFactors,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::FftSize => "fft_size",
            SweepParameter::TScale => "t_scale",
            SweepParameter::NumFactors => "num_factors",
        }
    }

    /// Copy of `base` with this parameter set to `value`.
    pub fn apply(self, base: &PipelineConfig, value: f64) -> Result<PipelineConfig> {
        let mut c = base.clone();
        let as_count = |v: f64| {
            if v.fract() == 0.0 && v >= 1.0 {
                Ok(v as usize)
            } else {
                Err(Error::InvalidConfig(format!(
                    "{} must be a positive integer, got {v}",
                    self.name()
                )))
            }
        };
        match self {
            SweepParameter::FftSize => c.fft_size = as_count(value)?,
            SweepParameter::NumFactors => c.num_factors = as_count(value)?,
            SweepParameter::TScale => c.t_scale = value,
        }
        c.validate()?;
        Ok(c)
    }
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fft_size" => Ok(SweepParameter::FftSize),
            "t_scale" => Ok(SweepParameter::TScale),
            "num_factors" => Ok(SweepParameter::NumFactors),
            other => Err(Error::UnknownParameter(other.to_string())),
        }
    }
}

/// One report per value, all using the same per-trial seeds.
#[allow(clippy::too_many_arguments)]
pub fn sweep_parameter(
    parameter: SweepParameter,
    values: &[f64],
    base: &PipelineConfig,
    trials: usize,
    n_devices: usize,
    motion: &MotionModel,
    noise: &NoiseModel,
    seed: u64,
) -> Result<Vec<SecretReport>> {
    values
        .iter()
        .map(|&v| {
            let config = parameter.apply(base, v)?;
            run_experiment(trials, n_devices, motion, noise, &config, seed)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryModel {
    /// Reproduces the victims' motion, starting `slot_offset` timestamp slots late.
    Mimic { slot_offset: u32 },
    /// Unrelated motion of the same statistical kind.
    Independent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MimicryReport {
    pub trials: usize,
    pub adversary_successes: usize,
    /// Trials where both victims agreed, for reference.
    pub victim_successes: usize,
    pub adversary_success_rate: f64,
}

impl MimicryReport {
    pub fn to_kv(&self) -> String {
        format!(
            "trials={}\nadversary_successes={}\nvictim_successes={}\nadversary_success_rate={:.6}\n",
            self.trials, self.adversary_successes, self.victim_successes, self.adversary_success_rate
        )
    }
}

/// Two victims plus one adversary per trial. The adversary succeeds when its
/// secret equals the first victim's.
pub fn mimicry_experiment(
    adversary: AdversaryModel,
    trials: usize,
    motion: &MotionModel,
    noise: &NoiseModel,
    config: &PipelineConfig,
    seed: u64,
) -> Result<MimicryReport> {
    check_inputs(trials, motion, noise, config)?;
    let shift_ms = match adversary {
        AdversaryModel::Mimic { slot_offset } => slot_offset as f64 * config.slot_ms(),
        AdversaryModel::Independent => 0.0,
    };
    let outcomes: Vec<(bool, bool)> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let trial_seed = mix(seed, i);
            let scene = Scene::new(motion, horizon_s(motion, noise, shift_ms), trial_seed);
            let derive =
                |t: Result<crate::GyroTrace>| t.and_then(|t| crate::derive_secret(&t, config));
            let v0 = derive(scene.device(motion, noise, trial_seed, 0));
            let v1 = derive(scene.device(motion, noise, trial_seed, 1));
            let adv = match adversary {
                AdversaryModel::Mimic { .. } => {
                    derive(scene.adversary(motion, noise, trial_seed, shift_ms))
                }
                AdversaryModel::Independent => {
                    let other_seed = mix(trial_seed, u64::MAX);
                    let other = Scene::new(motion, horizon_s(motion, noise, 0.0), other_seed);
                    derive(other.adversary(motion, noise, other_seed, 0.0))
                }
            };
            match (v0, v1, adv) {
                (Ok(a), Ok(b), Ok(e)) => (a.bits == b.bits, a.bits == e.bits),
                (Ok(a), Ok(b), Err(_)) => (a.bits == b.bits, false),
                _ => (false, false),
            }
        })
        .collect();
    let victim_successes = outcomes.iter().filter(|o| o.0).count();
    let adversary_successes = outcomes.iter().filter(|o| o.1).count();
    Ok(MimicryReport {
        trials,
        adversary_successes,
        victim_successes,
        adversary_success_rate: adversary_successes as f64 / trials as f64,
    })
}
