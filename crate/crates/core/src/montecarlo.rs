//! PUPE estimation and minimum-SNR search.
//!
//! Trials run in parallel on the rayon pool. Each trial draws its streams
//! from `derive_seed(seed, [trial])`, and counts are summed as integers, so
//! results do not depend on thread count or scheduling. Every SNR probe of
//! one search reuses the same trial seeds (common random numbers), which
//! keeps the estimated PUPE curve close to monotone.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};
use crate::seeding::derive_seed;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Per-trial tallies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialCounts {
    pub active: u64,
    pub missed: u64,
    /// Users whose message equals another user's message in the same trial.
    pub clashes: u64,
}

impl std::ops::Add for TrialCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self { active: self.active + o.active, missed: self.missed + o.missed, clashes: self.clashes + o.clashes }
    }
}

/// Anything that can run one seeded trial with `ka` active users.
pub trait PupeScenario: Sync {
    fn run_trial(&self, ka: usize, snr_db: f64, trial_seed: u64) -> Result<TrialCounts>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PupeEstimate {
    pub pupe: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
    pub seed: u64,
    pub counts: TrialCounts,
}

impl PupeEstimate {
    /// Binomial standard error over the user population.
    pub fn std_error(&self) -> f64 {
        let n = self.counts.active.max(1) as f64;
        (self.pupe * (1.0 - self.pupe) / n).sqrt()
    }

    pub fn clash_rate(&self) -> f64 {
        self.counts.clashes as f64 / self.counts.active.max(1) as f64
    }
}

/// Wilson score interval for `k` events out of `n`.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    ((centre - half).max(0.0).min(p), (centre + half).min(1.0).max(p))
}

/// Mean fraction of messages missing from the decoder output over `trials`
/// trials. A message drawn by two users counts as decoded for both when it
/// is in the output.
pub fn estimate_pupe<S: PupeScenario + ?Sized>(
    scenario: &S,
    ka: usize,
    snr_db: f64,
    trials: u64,
    seed: u64,
) -> Result<PupeEstimate> {
    if trials == 0 {
        return Err(config_err("at least one trial is required"));
    }
    if ka == 0 {
        return Err(config_err("at least one active user is required"));
    }
    let counts = (0..trials)
        .into_par_iter()
        .map(|t| scenario.run_trial(ka, snr_db, derive_seed(seed, &[t])))
        .try_reduce(TrialCounts::default, |a, b| Ok(a + b))?;
    let pupe = counts.missed as f64 / counts.active as f64;
    let (ci_low, ci_high) = wilson_interval(counts.missed, counts.active, Z95);
    Ok(PupeEstimate { pupe, ci_low, ci_high, trials, seed, counts })
}

/// Trial counts per probe: `coarse` while the bracket is wider than
/// `fine_below_db`, `fine` afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialsSchedule {
    pub coarse: u64,
    pub fine: u64,
    pub fine_below_db: f64,
}

impl TrialsSchedule {
    pub fn fixed(trials: u64) -> Self {
        Self { coarse: trials, fine: trials, fine_below_db: 0.0 }
    }

    /// Multiplies both counts by `factor`, keeping at least one trial.
    pub fn scaled(&self, factor: f64) -> Self {
        let s = |t: u64| ((t as f64 * factor).round() as u64).max(1);
        Self { coarse: s(self.coarse), fine: s(self.fine), ..*self }
    }

    pub fn trials_for_width(&self, width_db: f64) -> u64 {
        if width_db > self.fine_below_db {
            self.coarse
        } else {
            self.fine
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    pub target_pupe: f64,
    pub snr_lo_db: f64,
    pub snr_hi_db: f64,
    pub tol_db: f64,
    pub schedule: TrialsSchedule,
}

impl SearchParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.snr_lo_db < self.snr_hi_db) {
            return Err(config_err(format!(
                "snr_lo_db ({}) must be below snr_hi_db ({})",
                self.snr_lo_db, self.snr_hi_db
            )));
        }
        if !(self.tol_db > 0.0) {
            return Err(config_err("tol_db must be positive"));
        }
        if !(self.target_pupe > 0.0) {
            return Err(config_err("target PUPE must be positive"));
        }
        if self.schedule.coarse == 0 || self.schedule.fine == 0 {
            return Err(config_err("trial counts must be positive"));
        }
        Ok(())
    }
}

/// One row of a minimum-SNR curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PupeCurvePoint {
    pub label: String,
    pub ka: usize,
    /// `None` when the target is not met at `snr_hi_db`.
    pub min_snr_db: Option<f64>,
    pub snr_hi_db: f64,
    /// Estimate at the reported SNR (at `snr_hi_db` when not found).
    /// Absent when the target is trivially met.
    pub estimate: Option<PupeEstimate>,
    pub seed: u64,
    pub probes: Vec<(f64, f64)>,
    pub warnings: Vec<String>,
}

impl PupeCurvePoint {
    pub fn found(&self) -> bool {
        self.min_snr_db.is_some()
    }
}

/// Bisection in dB for the smallest SNR with PUPE ≤ target.
pub fn min_snr_for_pupe<S: PupeScenario + ?Sized>(
    scenario: &S,
    label: &str,
    ka: usize,
    params: &SearchParams,
    seed: u64,
) -> Result<PupeCurvePoint> {
    params.validate()?;
    let mut point = PupeCurvePoint {
        label: label.to_owned(),
        ka,
        min_snr_db: Some(params.snr_lo_db),
        snr_hi_db: params.snr_hi_db,
        estimate: None,
        seed,
        probes: Vec::new(),
        warnings: Vec::new(),
    };
    if params.target_pupe >= 1.0 {
        return Ok(point);
    }
    let mut probes: Vec<(f64, PupeEstimate)> = Vec::new();
    let mut probe = |snr: f64, width: f64| -> Result<PupeEstimate> {
        let est = estimate_pupe(scenario, ka, snr, params.schedule.trials_for_width(width), seed)?;
        probes.push((snr, est));
        Ok(est)
    };
    let (mut lo, mut hi) = (params.snr_lo_db, params.snr_hi_db);
    let at_hi = probe(hi, hi - lo)?;
    if at_hi.pupe > params.target_pupe {
        point.min_snr_db = None;
        point.estimate = Some(at_hi);
    } else {
        let at_lo = probe(lo, hi - lo)?;
        if at_lo.pupe <= params.target_pupe {
            point.estimate = Some(at_lo);
        } else {
            let mut best = at_hi;
            while hi - lo > params.tol_db {
                let mid = 0.5 * (lo + hi);
                let est = probe(mid, hi - lo)?;
                if est.pupe <= params.target_pupe {
                    hi = mid;
                    best = est;
                } else {
                    lo = mid;
                }
            }
            point.min_snr_db = Some(hi);
            point.estimate = Some(best);
        }
    }
    point.warnings = monotonicity_warnings(&probes);
    point.probes = probes.iter().map(|(s, e)| (*s, e.pupe)).collect();
    Ok(point)
}

/// Flags probe pairs where a higher SNR shows a PUPE more than 5σ above a lower SNR.
fn monotonicity_warnings(probes: &[(f64, PupeEstimate)]) -> Vec<String> {
    let mut sorted: Vec<&(f64, PupeEstimate)> = probes.iter().collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Vec::new();
    for (i, (s1, e1)) in sorted.iter().enumerate() {
        for (s2, e2) in sorted.iter().skip(i + 1) {
            let sd = (e1.std_error().powi(2) + e2.std_error().powi(2)).sqrt();
            if e2.pupe > e1.pupe + 5.0 * sd && sd > 0.0 {
                out.push(format!(
                    "non-monotone PUPE: {:.4} at {s2:.2} dB exceeds {:.4} at {s1:.2} dB",
                    e2.pupe, e1.pupe
                ));
            }
        }
    }
    out
}

/// Runs [`min_snr_for_pupe`] for every K_a; point seeds are
/// `derive_seed(root_seed, [K_a])`.
pub fn run_sweep<S: PupeScenario + ?Sized>(
    scenario: &S,
    label: &str,
    ka_list: &[usize],
    params: &SearchParams,
    root_seed: u64,
) -> Result<Vec<PupeCurvePoint>> {
    ka_list
        .iter()
        .map(|&ka| min_snr_for_pupe(scenario, label, ka, params, point_seed(root_seed, ka)))
        .collect()
}

pub fn point_seed(root_seed: u64, ka: usize) -> u64 {
    derive_seed(root_seed, &[ka as u64])
}
