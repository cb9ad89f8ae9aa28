// One frame of two-step random access through the receiver, round by
// round, with and without successive interference cancellation.
//
// Run with `cargo run --release --example two_step_receiver`.

use umac::channel::ChannelConfig;
use umac::config::preset;
use umac::protocols::ReceiverMode;

pub fn run() -> umac::Result<()> {
    let cfg = preset("twostep_awgn_baseline")?;
    let system = cfg.build_system(cfg.seed)?;
    let channel = ChannelConfig::from_snr_db(10.0, cfg.channel)?;
    let (records, y) = system.transmit(20, &channel, 5)?;

    let mut by_preamble = std::collections::BTreeMap::<usize, usize>::new();
    for r in &records {
        *by_preamble.entry(r.preamble).or_default() += 1;
    }
    let shared = by_preamble.values().filter(|&&n| n > 1).count();
    println!("20 users, {} distinct preambles, {shared} shared", by_preamble.len());

    for mode in [ReceiverMode::Tin, ReceiverMode::TinSic] {
        let out = system.with_mode(mode).receive(y.samples(), &channel, &records)?;
        println!("{}: {} of 20 decoded in {} round(s)", mode.label(), out.decoded_messages.len(), out.sic_rounds);
        for (i, r) in out.rounds.iter().enumerate() {
            println!(
                "  round {i}: detected {}, false alarms {}, collisions {}, new {}, cancelled {}",
                r.detected, r.false_alarms, r.collisions, r.decoded_new, r.cancelled
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> umac::Result<()> {
    run()
}
