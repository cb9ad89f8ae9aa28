// Normal-approximation rates and single-user SNR requirements.
//
// Run with `cargo run --example finite_blocklength`.

use umac::bounds::{aloha_collision_probability, awgn_capacity, min_snr_single_user, normal_approx_log_m, BoundQuery};
use umac::channel::{db_to_linear, linear_to_db};

pub fn run() -> umac::Result<()> {
    println!("{:>8} {:>12} {:>14}", "n", "C [bits]", "log2 M / n");
    for n in [100.0, 250.0, 1000.0, 10_000.0] {
        let q = BoundQuery { n, k: 1.0, snr: 1.0, epsilon: 0.05 };
        println!("{n:>8} {:>12.4} {:>14.4}", awgn_capacity(1.0), normal_approx_log_m(&q)? / n);
    }

    for eps in [0.1, 0.05, 0.01] {
        let snr = min_snr_single_user(250.0, 100.0, eps)?;
        println!("100 bits in 250 channel uses at error {eps}: {:.2} dB", linear_to_db(snr));
    }
    let snr = min_snr_single_user(250.0, 100.0, 0.05)?;
    assert!(snr < db_to_linear(0.0));

    for ka in [2, 10, 50] {
        println!("slotted Aloha, 64 slots, {ka} users: collision probability {:.4}", aloha_collision_probability(ka, 64));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> umac::Result<()> {
    run()
}
