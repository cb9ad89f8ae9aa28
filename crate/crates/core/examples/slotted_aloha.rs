// Slotted Aloha: at high SNR the per-user error is the collision floor
// 1 - (1 - 1/L)^(K_a - 1).
//
// Run with `cargo run --release --example slotted_aloha`.

use umac::bounds::aloha_collision_probability;
use umac::config::preset;
use umac::montecarlo::estimate_pupe;

pub fn run() -> umac::Result<()> {
    let cfg = preset("slotted_aloha_mini")?;
    let system = cfg.build_system(cfg.seed)?;
    println!("{} slots, oracle threshold {:.2} dB", cfg.protocol.slots.unwrap_or(0), system.codec().threshold_db());
    println!("{:>4} {:>10} {:>10} {:>10}", "K_a", "PUPE", "floor", "PUPE@3dB");
    for ka in [2, 5, 10, 20] {
        let high = estimate_pupe(&system, ka, 40.0, 1000, 7)?;
        let low = estimate_pupe(&system, ka, 3.0, 1000, 7)?;
        let floor = aloha_collision_probability(ka as u64, 64);
        println!("{ka:>4} {:>10.4} {floor:>10.4} {:>10.4}", high.pupe, low.pupe);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> umac::Result<()> {
    run()
}
