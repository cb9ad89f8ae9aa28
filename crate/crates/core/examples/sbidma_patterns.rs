// SB-IDMA access patterns: preamble j selects the ρ-subset of occasions
// with colex rank j mod C(N, ρ) and the pilot j div N. The example then
// compares PUPE of two-step access and SB-IDMA on the same fading channel.
//
// Run with `cargo run --release --example sbidma_patterns`.

use umac::config::preset;
use umac::montecarlo::estimate_pupe;
use umac::protocols::{binomial, pattern_from_index, pattern_rank, EnergyPolicy};

pub fn run() -> umac::Result<()> {
    println!("C(64, 2) = {}, C(59, 2) = {}", binomial(64, 2), binomial(59, 2));
    for j in [0u64, 1, 2, 3, 2015] {
        let p = pattern_from_index(j, 64, 2)?;
        assert_eq!(pattern_rank(&p), j);
        println!("pattern {j:>4} -> occasions {p:?}");
    }

    let two_step = preset("twostep_rayleigh_1024")?;
    let mut split = preset("sbidma_rayleigh_1024")?;
    let full = split.clone();
    split.protocol.energy_policy = Some(EnergyPolicy::SplitAcrossCopies);
    println!("{:>8} {:>12} {:>14} {:>16}", "SNR", "two-step", "SB-IDMA split", "SB-IDMA full");
    let systems =
        [two_step.build_system(1)?, split.build_system(1)?, full.build_system(1)?];
    for snr in [5.0, 10.0, 15.0] {
        let p: Vec<f64> = systems
            .iter()
            .map(|s| estimate_pupe(s, 20, snr, 40, 9).map(|e| e.pupe))
            .collect::<umac::Result<_>>()?;
        println!("{snr:>8.1} {:>12.4} {:>14.4} {:>16.4}", p[0], p[1], p[2]);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> umac::Result<()> {
    run()
}
