// Gaussian and quasi-static Rayleigh multiple-access channels.
//
// Run with `cargo run --example mac_channel`.

use num_complex::Complex64;
use umac::channel::{
    awgn_mac_transmit, check_power, ebn0_db, fading_mac_transmit, ChannelConfig, ChannelModel, ComplexSignal,
};
use umac::seeding::rng_from_seed;

pub fn run() -> umac::Result<()> {
    let n = 1000;
    let awgn = ChannelConfig::from_snr_db(3.0, ChannelModel::Awgn)?;
    let mut rng = rng_from_seed(1);

    let users: Vec<ComplexSignal> = (0..3)
        .map(|k| ComplexSignal::new(vec![Complex64::from_polar(1.0, k as f64); n]))
        .collect();
    for u in &users {
        assert!(check_power(u, &awgn));
    }
    let y = awgn_mac_transmit(&users, n, &awgn, &mut rng)?;
    println!("AWGN MAC, 3 users at {:.1} dB: mean received energy {:.3}", 3.0, y.energy() / n as f64);

    let fading = ChannelConfig::from_snr_db(10.0, ChannelModel::Rayleigh)?;
    let (y, gains) = fading_mac_transmit(&users, n, &fading, &mut rng)?;
    for (k, g) in gains.gains.iter().enumerate() {
        println!("user {k}: |h|^2 = {:.3}", g.norm_sqr());
    }
    println!("Rayleigh MAC output energy {:.1}", y.energy());

    // a (500, 100) code spans 1000 real degrees of freedom
    println!("Eb/N0 of k = 100 bits over n = 1000 real dims at 3 dB: {:.2} dB", ebn0_db(1000, &awgn, 100.0)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> umac::Result<()> {
    run()
}
