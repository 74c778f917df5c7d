use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use gyrosecret_core::bits::parse_bit_string;
use gyrosecret_core::keymsg::{self, ConditionedKey, EncryptedMessage};
use gyrosecret_core::randeval::{evaluate_batch, SuiteParams};
use gyrosecret_core::simulator::{
    generate_group, mimicry_experiment, run_experiment, sweep_parameter, AdversaryModel, Preset,
    SweepParameter,
};
use gyrosecret_core::{parse_trace, PipelineConfig, SharedSecret};

use crate::failure::{Failure, Outcome};

#[derive(Debug, Parser)]
#[command(
    name = "gyrosecret",
    version,
    about = "Shared secrets from co-moved gyroscopes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derive a secret from one trace.
    Extract {
        #[arg(long)]
        trace: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a group of simulated traces as CSV files.
    Simulate {
        #[arg(long, default_value_t = 2)]
        devices: usize,
        #[arg(long, value_enum)]
        preset: PresetArg,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Batch success-rate experiment, optionally sweeping one parameter.
    Experiment {
        #[arg(long, default_value_t = 300)]
        trials: usize,
        #[arg(long, value_enum)]
        preset: PresetArg,
        #[arg(long, default_value_t = 2)]
        devices: usize,
        #[arg(long)]
        seed: u64,
        /// PARAM=V1,V2,... with PARAM one of fft_size, t_scale, num_factors.
        #[arg(long)]
        sweep: Option<String>,
        /// Run the mimicry experiment with this slot offset instead.
        #[arg(long, conflicts_with = "sweep")]
        mimicry: Option<u32>,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        report: PathBuf,
        /// Also write the agreed secrets, one bit string per line.
        #[arg(long)]
        secrets_out: Option<PathBuf>,
    },
    /// Run the randomness suite over a file of secrets.
    Evaluate {
        #[arg(long)]
        secrets: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = 0.001)]
        alpha: f64,
    },
    /// Condition a secret file into a 256-bit key file.
    DeriveKey {
        #[arg(long)]
        secret: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = keymsg::DEFAULT_KDF_ITERATIONS)]
        iterations: u32,
    },
    Encrypt(CryptArgs),
    Decrypt(CryptArgs),
    /// Hide a file in a PNG carrier.
    StegoEmbed {
        #[arg(long)]
        image: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recover a file hidden in a PNG carrier.
    StegoExtract {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct CryptArgs {
    #[arg(long)]
    key: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// Config file plus per-field overrides; flags win over the file.
#[derive(Debug, Args)]
pub struct ConfigArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    fft_size: Option<usize>,
    #[arg(long)]
    num_factors: Option<usize>,
    #[arg(long)]
    t_scale: Option<f64>,
    #[arg(long)]
    ewma_alpha: Option<f64>,
    #[arg(long)]
    threshold_k: Option<f64>,
}

impl ConfigArgs {
    fn resolve(&self) -> Outcome<PipelineConfig> {
        let mut c = match &self.config {
            Some(path) => PipelineConfig::from_kv_str(&read_text(path)?)
                .map_err(|e| Failure::in_file(path, e))?,
            None => PipelineConfig::default(),
        };
        if let Some(v) = self.fft_size {
            c.fft_size = v;
        }
        if let Some(v) = self.num_factors {
            c.num_factors = v;
        }
        if let Some(v) = self.t_scale {
            c.t_scale = v;
        }
        if let Some(v) = self.ewma_alpha {
            c.ewma_alpha = v;
        }
        if let Some(v) = self.threshold_k {
            c.threshold_k = v;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PresetArg {
    InHand,
    InPocket,
    Noiseless,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::InHand => Preset::InHand,
            PresetArg::InPocket => Preset::InPocket,
            PresetArg::Noiseless => Preset::Noiseless,
        }
    }
}

fn read_text(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn read_bytes(path: &Path) -> Outcome<Vec<u8>> {
    fs::read(path).map_err(|e| Failure::io(path, e))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Outcome {
    fs::write(path, contents).map_err(|e| Failure::io(path, e))
}

fn read_key(path: &Path) -> Outcome<ConditionedKey> {
    ConditionedKey::from_text(&read_text(path)?).map_err(|e| Failure::in_file(path, e))
}

fn read_png(path: &Path) -> Outcome<image::RgbImage> {
    let img = image::open(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Failure::io(path, io),
        other => Failure::format(format!("{}: {other}", path.display())),
    })?;
    Ok(img.to_rgb8())
}

fn parse_sweep(spec: &str) -> Outcome<(SweepParameter, Vec<f64>)> {
    let (name, values) = spec
        .split_once('=')
        .ok_or_else(|| Failure::usage(format!("--sweep expects PARAM=V1,V2,..., got `{spec}`")))?;
    let parameter: SweepParameter = name.trim().parse()?;
    let values = values
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Failure::usage(format!("bad sweep value `{v}`")))
        })
        .collect::<Outcome<Vec<_>>>()?;
    if values.is_empty() {
        return Err(Failure::usage("--sweep needs at least one value"));
    }
    Ok((parameter, values))
}

/// A secret file written by `extract`, or one bit string per line.
fn read_secret_bits(path: &Path) -> Outcome<Vec<Vec<bool>>> {
    let text = read_text(path)?;
    if text
        .lines()
        .nth(2)
        .is_some_and(|l| l.contains("sync_index="))
    {
        let secret = SharedSecret::from_file_str(&text).map_err(|e| Failure::in_file(path, e))?;
        return Ok(vec![secret.bits]);
    }
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| parse_bit_string(l).map_err(|e| Failure::in_file(path, e)))
        .collect()
}

pub fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Extract { trace, config, out } => {
            let config = config.resolve()?;
            let trace_data =
                parse_trace(&read_text(&trace)?).map_err(|e| Failure::in_file(&trace, e))?;
            let secret = gyrosecret_core::derive_secret(&trace_data, &config)?;
            write(&out, secret.to_file_string())
        }
        Command::Simulate {
            devices,
            preset,
            seed,
            out_dir,
        } => {
            let preset = Preset::from(preset);
            let group = generate_group(devices, &preset.motion(), &preset.noise(), seed)?;
            fs::create_dir_all(&out_dir).map_err(|e| Failure::io(&out_dir, e))?;
            for (i, trace) in group.iter().enumerate() {
                write(&out_dir.join(format!("device{i}.csv")), trace.to_csv())?;
            }
            Ok(())
        }
        Command::Experiment {
            trials,
            preset,
            devices,
            seed,
            sweep,
            mimicry,
            config,
            report,
            secrets_out,
        } => {
            let config = config.resolve()?;
            let preset = Preset::from(preset);
            let (motion, noise) = (preset.motion(), preset.noise());
            let mut text = format!("preset={}\nseed={seed}\n", preset.name());
            if let Some(offset) = mimicry {
                let r = mimicry_experiment(
                    AdversaryModel::Mimic {
                        slot_offset: offset,
                    },
                    trials,
                    &motion,
                    &noise,
                    &config,
                    seed,
                )?;
                let _ = writeln!(text, "slot_offset={offset}");
                text.push_str(&r.to_kv());
                return write(&report, text);
            }
            let (label, reports) = match sweep {
                Some(spec) => {
                    let (parameter, values) = parse_sweep(&spec)?;
                    let reports = sweep_parameter(
                        parameter, &values, &config, trials, devices, &motion, &noise, seed,
                    )?;
                    let labels = values
                        .iter()
                        .map(|v| format!("{}={v}", parameter.name()))
                        .collect::<Vec<_>>();
                    (Some(labels), reports)
                }
                None => (
                    None,
                    vec![run_experiment(
                        trials, devices, &motion, &noise, &config, seed,
                    )?],
                ),
            };
            for (i, r) in reports.iter().enumerate() {
                if let Some(labels) = &label {
                    let _ = writeln!(text, "\n[{}]", labels[i]);
                }
                text.push_str(&r.to_kv());
            }
            write(&report, &text)?;
            let first = &reports[0];
            let stem = report.with_extension("");
            write(
                &PathBuf::from(format!("{}.lengths.csv", stem.display())),
                first.length_histogram_csv(),
            )?;
            write(
                &PathBuf::from(format!("{}.bit_errors.csv", stem.display())),
                first.bit_error_histogram_csv(),
            )?;
            if let Some(path) = secrets_out {
                let lines: String = first
                    .secrets
                    .iter()
                    .map(|s| s.bit_string() + "\n")
                    .collect();
                write(&path, lines)?;
            }
            print!("{text}");
            Ok(())
        }
        Command::Evaluate {
            secrets,
            report,
            alpha,
        } => {
            let sequences = read_secret_bits(&secrets)?;
            if sequences.is_empty() {
                return Err(Failure::format(format!(
                    "{}: no secrets found",
                    secrets.display()
                )));
            }
            let params = SuiteParams {
                alpha,
                ..SuiteParams::default()
            };
            let summary = evaluate_batch(&sequences, &params)?;
            print!("{}", summary.to_table());
            write(&report, summary.to_kv())
        }
        Command::DeriveKey {
            secret,
            out,
            iterations,
        } => {
            let s = SharedSecret::from_file_str(&read_text(&secret)?)
                .map_err(|e| Failure::in_file(&secret, e))?;
            let key = keymsg::condition_secret_with(&s, iterations)?;
            write(&out, key.to_text())
        }
        Command::Encrypt(args) => {
            let key = read_key(&args.key)?;
            let plaintext = read_bytes(&args.input)?;
            let msg = keymsg::encrypt_message(&key, &plaintext)?;
            write(&args.out, msg.to_bytes())
        }
        Command::Decrypt(args) => {
            let key = read_key(&args.key)?;
            let blob = read_bytes(&args.input)?;
            let msg = EncryptedMessage::from_bytes(&blob)
                .map_err(|e| Failure::in_file(&args.input, e))?;
            let plaintext = keymsg::decrypt_message(&key, &msg)?;
            write(&args.out, plaintext)
        }
        Command::StegoEmbed { image, input, out } => {
            let carrier = read_png(&image)?;
            let payload = read_bytes(&input)?;
            let stego = keymsg::embed_in_image(&carrier, &payload)?;
            stego
                .save_with_format(&out, image::ImageFormat::Png)
                .map_err(|e| Failure::io(&out, e))
        }
        Command::StegoExtract { image, out } => {
            let stego = read_png(&image)?;
            let payload = keymsg::extract_from_image(&stego)?;
            write(&out, payload)
        }
    }
}
