//! Sweep driver behind `umac-bench`: runs the minimum-SNR search for every
//! K_a of a config, checkpoints finished points and writes CSV results.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bounds::load_reference_curve;
use crate::channel::linear_to_db;
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::montecarlo::{min_snr_for_pupe, point_seed, PupeCurvePoint};
use crate::protocols::AccessSystem;

/// Header of the results file.
pub const CSV_HEADER: [&str; 10] =
    ["scenario", "channel", "ka", "min_snr_db", "pupe", "ci_low", "ci_high", "trials", "seed", "notes"];

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "UMAC_BENCH_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Overrides the config seed.
    pub seed: Option<u64>,
    pub trials_scale: f64,
    /// Worker threads; `None` reads [`THREADS_ENV`], then uses all cores.
    pub threads: Option<usize>,
    /// Resolves a relative `reference_curve_path`.
    pub base_dir: Option<PathBuf>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { seed: None, trials_scale: 1.0, threads: None, base_dir: None }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub label: String,
    pub seed: u64,
    pub points: Vec<PupeCurvePoint>,
    /// Reference minimum SNR per K_a, if a reference curve was given.
    pub reference: BTreeMap<usize, f64>,
    /// Points restored from a checkpoint instead of recomputed.
    pub resumed: usize,
}

impl RunReport {
    pub fn all_found(&self) -> bool {
        self.points.iter().all(PupeCurvePoint::found)
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    fingerprint: String,
    point: PupeCurvePoint,
}

pub fn checkpoint_dir(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".ckpt");
    PathBuf::from(s)
}

fn fingerprint(cfg: &ExperimentConfig, seed: u64, trials_scale: f64) -> Result<String> {
    let mut h = Sha256::new();
    h.update(cfg.to_toml()?.as_bytes());
    h.update(seed.to_le_bytes());
    h.update(trials_scale.to_bits().to_le_bytes());
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn thread_count(opt: Option<usize>) -> Result<Option<usize>> {
    if opt.is_some() {
        return Ok(opt);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .map(Some)
            .ok_or_else(|| Error::InvalidConfig(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        Err(_) => Ok(None),
    }
}

/// Runs every K_a of `cfg`, writing results to `out` as CSV.
///
/// Finished points are stored under `<out>.ckpt/` and reused by a rerun
/// with the same config, seed and trial scale; the directory is removed once
/// the CSV is written. Progress lines go to `log`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path, opts: &RunOptions, log: &mut dyn Write) -> Result<RunReport> {
    if !(opts.trials_scale > 0.0 && opts.trials_scale.is_finite()) {
        return Err(Error::InvalidConfig(format!("trials scale must be positive, got {}", opts.trials_scale)));
    }
    let seed = opts.seed.unwrap_or(cfg.seed);
    let reference = match &cfg.reference_curve_path {
        Some(p) => {
            let p = match (&opts.base_dir, p.is_relative()) {
                (Some(dir), true) => dir.join(p),
                _ => p.clone(),
            };
            load_reference_curve(&p)?.points.into_iter().map(|(k, s)| (k as usize, s)).collect()
        }
        None => BTreeMap::new(),
    };
    let system = cfg.build_system(seed)?;
    let params = cfg.search_params(opts.trials_scale);
    let label = cfg.label();
    let print = fingerprint(cfg, seed, opts.trials_scale)?;
    let ckpt = checkpoint_dir(out);
    std::fs::create_dir_all(&ckpt)?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count(opts.threads)? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;

    let mut points = Vec::with_capacity(cfg.ka_list.len());
    let mut resumed = 0;
    for &ka in &cfg.ka_list {
        let file = ckpt.join(format!("ka_{ka}.json"));
        let cached = std::fs::read(&file)
            .ok()
            .and_then(|b| serde_json::from_slice::<Checkpoint>(&b).ok())
            .filter(|c| c.fingerprint == print && c.point.ka == ka);
        let point = match cached {
            Some(c) => {
                resumed += 1;
                writeln!(log, "K_a = {ka}: restored from checkpoint")?;
                c.point
            }
            None => {
                let p = pool.install(|| min_snr_for_pupe(&system, &label, ka, &params, point_seed(seed, ka)))?;
                let tmp = file.with_extension("json.tmp");
                std::fs::write(&tmp, serde_json::to_vec(&Checkpoint { fingerprint: print.clone(), point: p.clone() })?)?;
                std::fs::rename(&tmp, &file)?;
                writeln!(log, "K_a = {ka}: {}", describe(&p))?;
                p
            }
        };
        points.push(point);
    }
    let report = RunReport { label, seed, points, reference, resumed };
    write_csv(out, cfg, &report)?;
    std::fs::remove_dir_all(&ckpt)?;
    Ok(report)
}

fn describe(p: &PupeCurvePoint) -> String {
    match (p.min_snr_db, p.estimate) {
        (Some(s), Some(e)) => format!("{s:.2} dB (PUPE {:.4}, {} trials)", e.pupe, e.trials),
        (Some(s), None) => format!("{s:.2} dB (target met trivially)"),
        (None, _) => format!("not found up to {:.1} dB", p.snr_hi_db),
    }
}

fn notes(p: &PupeCurvePoint) -> String {
    let mut n = Vec::new();
    if !p.found() {
        n.push(format!("target not met at {:.1} dB", p.snr_hi_db));
    }
    if let Some(e) = p.estimate {
        if e.counts.clashes > 0 {
            n.push(format!("message clash rate {:.2e}", e.clash_rate()));
        }
    }
    n.extend(p.warnings.iter().cloned());
    n.join("; ")
}

/// Writes the results file.
pub fn write_csv(out: &Path, cfg: &ExperimentConfig, report: &RunReport) -> Result<()> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(out)?;
    w.write_record(CSV_HEADER)?;
    for p in &report.points {
        let f = |x: Option<f64>, digits: usize| x.map_or("NA".to_owned(), |v| format!("{v:.digits$}"));
        let e = p.estimate;
        w.write_record([
            report.label.clone(),
            cfg.channel.name().to_owned(),
            p.ka.to_string(),
            f(p.min_snr_db, 2),
            f(e.map(|e| e.pupe), 6),
            f(e.map(|e| e.ci_low), 6),
            f(e.map(|e| e.ci_high), 6),
            e.map_or("0".to_owned(), |e| e.trials.to_string()),
            p.seed.to_string(),
            notes(p),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Eb/N0 in dB of a user sending `energy` at unit power for `bits` payload
/// bits, at SNR P/σ² = `snr_db`.
pub fn ebn0_db_at(snr_db: f64, energy: f64, bits: u32) -> f64 {
    snr_db + linear_to_db(energy / bits as f64)
}

/// Human-readable results table.
pub fn summary_table(cfg: &ExperimentConfig, system: &AccessSystem, report: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{} | {} | {} | {} | target PUPE {} | seed {}",
        report.label,
        cfg.scenario.name(),
        cfg.channel.name(),
        cfg.receiver.receiver_mode.label(),
        cfg.target_pupe,
        report.seed
    );
    let _ = writeln!(
        s,
        "SNR = P/sigma^2 per complex channel use (equal to the SNR per real dimension); Eb/N0 = E/(k sigma^2), \
         E = {:.1} at unit power, k = {}",
        system.user_energy(),
        system.payload_bits()
    );
    let has_ref = !report.reference.is_empty();
    let _ = write!(s, "{:>5} {:>10} {:>11} {:>9} {:>21} {:>7}", "K_a", "SNR [dB]", "Eb/N0 [dB]", "PUPE", "95% CI", "trials");
    if has_ref {
        let _ = write!(s, " {:>9} {:>9}", "ref [dB]", "gap [dB]");
    }
    s.push('\n');
    for p in &report.points {
        let snr = p.min_snr_db.map_or("NA".to_owned(), |v| format!("{v:.2}"));
        let eb = p
            .min_snr_db
            .map_or("NA".to_owned(), |v| format!("{:.2}", ebn0_db_at(v, system.user_energy(), system.payload_bits())));
        let (pupe, ci, trials) = match p.estimate {
            Some(e) => (format!("{:.4}", e.pupe), format!("[{:.4}, {:.4}]", e.ci_low, e.ci_high), e.trials.to_string()),
            None => ("-".into(), "-".into(), "0".into()),
        };
        let _ = write!(s, "{:>5} {snr:>10} {eb:>11} {pupe:>9} {ci:>21} {trials:>7}", p.ka);
        if has_ref {
            let r = report.reference.get(&p.ka);
            let gap = match (p.min_snr_db, r) {
                (Some(a), Some(b)) => format!("{:+.2}", a - b),
                _ => "NA".into(),
            };
            let _ = write!(s, " {:>9} {gap:>9}", r.map_or("NA".into(), |v| format!("{v:.2}")));
        }
        s.push('\n');
    }
    s
}
