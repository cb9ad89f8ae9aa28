// Minimum SNR meeting a PUPE target, found by bisection with common random
// numbers across probes, then a full preset sweep written to CSV.
//
// Run with `cargo run --release --example min_snr_search`.

use umac::config::preset;
use umac::montecarlo::{min_snr_for_pupe, SearchParams, TrialsSchedule};
use umac::runner::{run_experiment, summary_table, RunOptions};

pub fn run() -> umac::Result<()> {
    let cfg = preset("twostep_awgn_baseline")?;
    let system = cfg.build_system(cfg.seed)?;
    let params = SearchParams {
        target_pupe: 0.05,
        snr_lo_db: -6.0,
        snr_hi_db: 10.0,
        tol_db: 0.25,
        schedule: TrialsSchedule { coarse: 30, fine: 100, fine_below_db: 1.0 },
    };
    let point = min_snr_for_pupe(&system, "baseline", 2, &params, 11)?;
    println!("K_a = 2: {:?} dB after probes", point.min_snr_db);
    for (snr, pupe) in &point.probes {
        println!("  {snr:>7.3} dB  PUPE {pupe:.4}");
    }

    let mini = preset("twostep_awgn_mini")?;
    let dir = std::env::temp_dir().join("umac-min-snr-example");
    let out = dir.join("mini.csv");
    let report = run_experiment(&mini, &out, &RunOptions { trials_scale: 0.1, ..Default::default() }, &mut std::io::sink())?;
    print!("{}", summary_table(&mini, &mini.build_system(report.seed)?, &report));
    println!("{}", std::fs::read_to_string(&out)?);
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> umac::Result<()> {
    run()
}
