use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_umac-bench");

fn bench(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env("UMAC_BENCH_THREADS", "1").output().expect("binary runs")
}

fn one_point_config(dir: &Path, target: f64, hi: f64) -> String {
    let path = dir.join("one.toml");
    std::fs::write(
        &path,
        format!(
            r#"
scenario = "two_step"
channel = "awgn"
seed = 5
target_pupe = {target}
ka_list = [2]
n_preambles = 8
preamble_len = 31
preamble_reps = 1
preamble_kind = "zadoff_chu"
n_occasions = 8
occasion_len = 64
pilot_len = 0
mapping = "one_to_one"
payload_bits = 8
codeword_bits = 128
codec_model = "ml_random_gaussian"
receiver_mode = "tin_sic"
snr_lo_db = -10.0
snr_hi_db = {hi}
tol_db = 0.5
trials_coarse = 40
trials_fine = 100
"#
        ),
    )
    .unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn one_point_config_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = one_point_config(dir.path(), 0.2, 20.0);
    let out = dir.path().join("res.csv");
    let run = bench(&["--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "scenario,channel,ka,min_snr_db,pupe,ci_low,ci_high,trials,seed,notes");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("two_step,awgn,2,"));
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.contains("Eb/N0"), "{stdout}");
    assert!(!umac::runner::checkpoint_dir(&out).exists());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = one_point_config(dir.path(), 0.2, 20.0);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        assert!(bench(&["--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "99"]).status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn strict_fails_on_unreachable_target() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = one_point_config(dir.path(), 1e-6, -8.0);
    let out = dir.path().join("res.csv");
    let lenient = bench(&["--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(lenient.status.success());
    assert!(std::fs::read_to_string(&out).unwrap().contains(",NA,"));
    let strict = bench(&["--config", &cfg, "--out", out.to_str().unwrap(), "--strict"]);
    assert_eq!(strict.status.code(), Some(2));
}

#[test]
fn invalid_config_reports_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "scenario = \"two_step\"\nwibble = 1\n").unwrap();
    let run = bench(&["--config", path.to_str().unwrap(), "--out", dir.path().join("x.csv").to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&run.stderr).contains("wibble"));
}

#[test]
fn unwritable_output_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = one_point_config(dir.path(), 0.2, 20.0);
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let out = blocker.join("res.csv");
    let run = bench(&["--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(!run.status.success());
}

/// Accepts nothing, so the runner aborts right after its first checkpoint.
struct Interrupt;

impl std::io::Write for Interrupt {
    fn write(&mut self, _: &[u8]) -> std::io::Result<usize> {
        Err(std::io::Error::other("interrupted"))
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

#[test]
fn interrupted_run_resumes_from_checkpoints() {
    use umac::config::parse_config;
    use umac::runner::{checkpoint_dir, run_experiment, RunOptions};

    let dir = tempfile::tempdir().unwrap();
    let mut cfg = parse_config(&std::fs::read_to_string(one_point_config(dir.path(), 0.2, 20.0)).unwrap()).unwrap();
    cfg.ka_list = vec![1, 2];
    let opts = RunOptions { threads: Some(1), ..Default::default() };
    let fresh = dir.path().join("fresh.csv");
    run_experiment(&cfg, &fresh, &opts, &mut std::io::sink()).unwrap();

    let out = dir.path().join("resumed.csv");
    assert!(run_experiment(&cfg, &out, &opts, &mut Interrupt).is_err());
    assert!(checkpoint_dir(&out).join("ka_1.json").exists());
    assert!(!out.exists());

    let mut log = Vec::new();
    let report = run_experiment(&cfg, &out, &opts, &mut log).unwrap();
    assert_eq!(report.resumed, 1);
    assert!(String::from_utf8(log).unwrap().contains("K_a = 1: restored from checkpoint"));
    assert_eq!(std::fs::read(&fresh).unwrap(), std::fs::read(&out).unwrap());
    assert!(!checkpoint_dir(&out).exists());

    // a checkpoint from a different seed is ignored
    let other = RunOptions { seed: Some(6), ..opts.clone() };
    assert!(run_experiment(&cfg, &out, &other, &mut Interrupt).is_err());
    let report = run_experiment(&cfg, &out, &opts, &mut std::io::sink()).unwrap();
    assert_eq!(report.resumed, 0);
}

#[test]
fn presets_and_listing() {
    let run = bench(&["--list-presets"]);
    assert!(run.status.success());
    let names = String::from_utf8_lossy(&run.stdout);
    for name in umac::config::preset_names() {
        assert!(names.lines().any(|l| l == name));
    }
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mini.csv");
    let run = bench(&["--preset", "twostep_awgn_mini", "--out", out.to_str().unwrap(), "--trials-scale", "0.02"]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 5);
}
