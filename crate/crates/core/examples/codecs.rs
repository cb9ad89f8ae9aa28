// The two inner-code models: a threshold oracle calibrated on the normal
// approximation, and an exhaustive ML decoder over a random Gaussian
// codebook for short payloads.
//
// Run with `cargo run --example codecs`.

use num_complex::Complex64;
use umac::channel::{complex_normal, ComplexSignal};
use umac::codec::{Codec, CodecModel, CodecSpec, DecodeInput, Message, Observation, LDPC_LIKE_OFFSET_DB};
use umac::seeding::rng_from_seed;

pub fn run() -> umac::Result<()> {
    let oracle = Codec::new(
        CodecSpec {
            codeword_bits: 500,
            payload_bits: 100,
            model: CodecModel::OracleThreshold,
            offset_db: LDPC_LIKE_OFFSET_DB,
            target_eps: 0.05,
        },
        1,
    )?;
    println!("(500, 100) oracle threshold: {:.3} dB", oracle.threshold_db());

    let ml = Codec::new(
        CodecSpec { codeword_bits: 32, payload_bits: 8, model: CodecModel::MlRandomGaussian, offset_db: 0.0, target_eps: 0.05 },
        2,
    )?;
    let mut rng = rng_from_seed(3);
    let one = Complex64::new(1.0, 0.0);
    for snr_db in [-9.0, -6.0, -3.0, 0.0] {
        let sigma2 = 10f64.powf(-snr_db / 10.0);
        let trials = 2000;
        let mut errors = 0;
        for _ in 0..trials {
            let m = Message::random(8, &mut rng)?;
            let y: ComplexSignal = ml.encode(&m)?.iter().map(|x| x + complex_normal(&mut rng, sigma2)).collect();
            let obs = [Observation { samples: y.samples(), gain: one }];
            let out = ml.decode(&DecodeInput { observations: &obs, genie_sinr: 0.0, genie_message: None });
            errors += usize::from(out.message != Some(m));
        }
        println!("ML, 8 bits in 16 channel uses, {snr_db:>5.1} dB: BLER {:.4}", errors as f64 / trials as f64);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> umac::Result<()> {
    run()
}
