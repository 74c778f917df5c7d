use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gyrosecret_core::keymsg::{self, ConditionedKey};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gyrosecret"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn simulate(dir: &Path, preset: &str, devices: usize, seed: u64) -> Vec<PathBuf> {
    let out = run(&[
        "simulate",
        "--devices",
        &devices.to_string(),
        "--preset",
        preset,
        "--seed",
        &seed.to_string(),
        "--out-dir",
        p(dir),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    (0..devices)
        .map(|i| dir.join(format!("device{i}.csv")))
        .collect()
}

fn extract(trace: &Path, out: &Path) -> Output {
    run(&["extract", "--trace", p(trace), "--out", p(out)])
}

#[test]
fn noiseless_pair_gives_identical_secret_files() {
    let tmp = TempDir::new().unwrap();
    let traces = simulate(tmp.path(), "noiseless", 2, 12);
    let (a, b) = (tmp.path().join("a.secret"), tmp.path().join("b.secret"));
    assert_eq!(code(&extract(&traces[0], &a)), 0);
    assert_eq!(code(&extract(&traces[1], &b)), 0);
    let sa = fs::read_to_string(&a).unwrap();
    assert_eq!(sa, fs::read_to_string(&b).unwrap());
    assert_eq!(sa.lines().next().unwrap().len(), 320);
}

#[test]
fn simulate_is_reproducible() {
    let (t1, t2) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let a = simulate(t1.path(), "in-pocket", 3, 5);
    let b = simulate(t2.path(), "in-pocket", 3, 5);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
    }
    assert!(fs::read_to_string(&a[0])
        .unwrap()
        .starts_with("t_ms,x,y,z\n"));
}

#[test]
fn config_file_and_flag_precedence() {
    let tmp = TempDir::new().unwrap();
    let traces = simulate(tmp.path(), "noiseless", 2, 3);
    let cfg = tmp.path().join("pipeline.cfg");
    fs::write(&cfg, "# smaller window\nfft_size=16\nnum_factors=2\n").unwrap();
    let out_file = tmp.path().join("s");
    let out = run(&[
        "extract",
        "--trace",
        p(&traces[0]),
        "--config",
        p(&cfg),
        "--out",
        p(&out_file),
    ]);
    assert_eq!(code(&out), 0);
    let bits = fs::read_to_string(&out_file).unwrap();
    assert_eq!(bits.lines().next().unwrap().len(), 32);

    let out = run(&[
        "extract",
        "--trace",
        p(&traces[0]),
        "--config",
        p(&cfg),
        "--num-factors",
        "3",
        "--out",
        p(&out_file),
    ]);
    assert_eq!(code(&out), 0);
    let bits = fs::read_to_string(&out_file).unwrap();
    assert_eq!(bits.lines().next().unwrap().len(), 48);
}

#[test]
fn experiment_report_has_success_rate() {
    let tmp = TempDir::new().unwrap();
    let report = tmp.path().join("report.txt");
    let secrets = tmp.path().join("secrets.txt");
    let out = run(&[
        "experiment",
        "--trials",
        "40",
        "--preset",
        "in-pocket",
        "--seed",
        "1",
        "--report",
        p(&report),
        "--secrets-out",
        p(&secrets),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&report).unwrap();
    assert!(text.contains("success_rate="));
    assert!(text.contains("trials=40"));
    assert!(tmp.path().join("report.lengths.csv").exists());
    assert!(tmp.path().join("report.bit_errors.csv").exists());

    let again = tmp.path().join("again.txt");
    run(&[
        "experiment",
        "--trials",
        "40",
        "--preset",
        "in-pocket",
        "--seed",
        "1",
        "--report",
        p(&again),
    ]);
    assert_eq!(text, fs::read_to_string(&again).unwrap());

    let eval = tmp.path().join("eval.txt");
    let out = run(&["evaluate", "--secrets", p(&secrets), "--report", p(&eval)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("Frequency"));
    assert!(fs::read_to_string(&eval)
        .unwrap()
        .contains("frequency.percent_passing="));
}

#[test]
fn experiment_sweep_and_mimicry() {
    let tmp = TempDir::new().unwrap();
    let report = tmp.path().join("sweep.txt");
    let out = run(&[
        "experiment",
        "--trials",
        "10",
        "--preset",
        "in-hand",
        "--seed",
        "2",
        "--sweep",
        "fft_size=16,64",
        "--report",
        p(&report),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&report).unwrap();
    assert!(text.contains("[fft_size=16]") && text.contains("[fft_size=64]"));

    let out = run(&[
        "experiment",
        "--trials",
        "10",
        "--preset",
        "in-hand",
        "--seed",
        "2",
        "--sweep",
        "window=1,2",
        "--report",
        p(&report),
    ]);
    assert_eq!(code(&out), 2);

    let mim = tmp.path().join("mim.txt");
    let out = run(&[
        "experiment",
        "--trials",
        "10",
        "--preset",
        "in-pocket",
        "--seed",
        "2",
        "--mimicry",
        "3",
        "--report",
        p(&mim),
    ]);
    assert_eq!(code(&out), 0);
    assert!(fs::read_to_string(&mim)
        .unwrap()
        .contains("adversary_success_rate="));
}

fn key_for(tmp: &Path, seed: u64, name: &str) -> PathBuf {
    let dir = tmp.join(format!("sim{seed}"));
    let traces = simulate(&dir, "noiseless", 2, seed);
    let secret = tmp.join(format!("{name}.secret"));
    assert_eq!(code(&extract(&traces[0], &secret)), 0);
    let key = tmp.join(format!("{name}.key"));
    let out = run(&[
        "derive-key",
        "--secret",
        p(&secret),
        "--out",
        p(&key),
        "--iterations",
        "1000",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    key
}

#[test]
fn encrypt_stego_decrypt_round_trip() {
    let tmp = TempDir::new().unwrap();
    let key = key_for(tmp.path(), 21, "k");
    let msg = tmp.path().join("msg.txt");
    fs::write(&msg, b"meet at the usual place").unwrap();
    let ct = tmp.path().join("msg.bin");
    assert_eq!(
        code(&run(&[
            "encrypt",
            "--key",
            p(&key),
            "--in",
            p(&msg),
            "--out",
            p(&ct)
        ])),
        0
    );

    let carrier = tmp.path().join("carrier.png");
    image::RgbImage::from_fn(64, 64, |x, y| image::Rgb([x as u8 * 3, y as u8 * 2, 7]))
        .save(&carrier)
        .unwrap();
    let stego = tmp.path().join("stego.png");
    let out = run(&[
        "stego-embed",
        "--image",
        p(&carrier),
        "--in",
        p(&ct),
        "--out",
        p(&stego),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let recovered = tmp.path().join("recovered.bin");
    assert_eq!(
        code(&run(&[
            "stego-extract",
            "--image",
            p(&stego),
            "--out",
            p(&recovered)
        ])),
        0
    );
    assert_eq!(fs::read(&ct).unwrap(), fs::read(&recovered).unwrap());

    let plain = tmp.path().join("plain.txt");
    assert_eq!(
        code(&run(&[
            "decrypt",
            "--key",
            p(&key),
            "--in",
            p(&recovered),
            "--out",
            p(&plain)
        ])),
        0
    );
    assert_eq!(fs::read(&plain).unwrap(), fs::read(&msg).unwrap());
}

#[test]
fn wrong_key_decrypt_fails_without_output() {
    let tmp = TempDir::new().unwrap();
    let good = key_for(tmp.path(), 31, "good");
    let bad = key_for(tmp.path(), 32, "bad");
    let good_key = ConditionedKey::from_text(&fs::read_to_string(&good).unwrap()).unwrap();
    let bad_key = ConditionedKey::from_text(&fs::read_to_string(&bad).unwrap()).unwrap();
    assert_ne!(good_key, bad_key);

    // A wrong key yields valid padding about 1 time in 256; pick a fixed IV
    // for which it does not, so the test is deterministic.
    let plaintext = b"the quick brown fox";
    let msg = (0u64..)
        .map(|s| {
            let mut rng = ChaCha20Rng::seed_from_u64(s);
            keymsg::encrypt_message_with_rng(&good_key, plaintext, &mut rng).unwrap()
        })
        .find(|m| keymsg::decrypt_message(&bad_key, m).is_err())
        .unwrap();
    let ct = tmp.path().join("ct.bin");
    fs::write(&ct, msg.to_bytes()).unwrap();

    let out_file = tmp.path().join("out.txt");
    let out = run(&[
        "decrypt",
        "--key",
        p(&bad),
        "--in",
        p(&ct),
        "--out",
        p(&out_file),
    ]);
    assert_eq!(code(&out), 6);
    assert!(!out_file.exists());
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn exit_codes_are_distinct() {
    let tmp = TempDir::new().unwrap();
    let out_file = tmp.path().join("o");

    assert_eq!(code(&run(&["extract", "--bogus"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);

    let missing = tmp.path().join("missing.csv");
    assert_eq!(code(&extract(&missing, &out_file)), 3);

    let garbage = tmp.path().join("garbage.csv");
    fs::write(&garbage, "t_ms,x,y,z\n0,1,2\n").unwrap();
    let out = extract(&garbage, &out_file);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let flat = tmp.path().join("flat.csv");
    let rows: String = (0..150)
        .map(|i| format!("{},0.1,0.1,0.1\n", i * 400))
        .collect();
    fs::write(&flat, format!("t_ms,x,y,z\n{rows}")).unwrap();
    assert_eq!(code(&extract(&flat, &out_file)), 5);
    assert!(!out_file.exists());
}
