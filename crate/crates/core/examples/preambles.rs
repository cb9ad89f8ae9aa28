// Zadoff-Chu and Gaussian preamble dictionaries and their correlations.
//
// Run with `cargo run --example preambles`.

use umac::sequences::{build_preamble_dictionary, inner, DictionaryKind, PreambleSpec};
use umac::seeding::rng_from_seed;

fn max_cross_correlation(spec: &PreambleSpec) -> umac::Result<(f64, f64)> {
    let dict = build_preamble_dictionary(spec, &mut rng_from_seed(3))?;
    let e = dict.per_column_energy();
    let mut worst: f64 = 0.0;
    for a in 0..dict.len().min(64) {
        for b in a + 1..dict.len().min(64) {
            worst = worst.max(inner(dict.column(a), dict.column(b)).norm() / e);
        }
    }
    Ok((e, worst))
}

pub fn run() -> umac::Result<()> {
    let zc = PreambleSpec {
        size: 64,
        base_length: 139,
        repetitions: 2,
        power_scale: 1.0,
        kind: DictionaryKind::ZadoffChu,
        zc_cyclic_shift: 0,
    };
    let gauss = PreambleSpec { size: 1024, base_length: 278, repetitions: 1, kind: DictionaryKind::GaussianNormalized, ..zc };
    for (name, spec) in [("Zadoff-Chu 64 x 278", zc), ("Gaussian 1024 x 278", gauss)] {
        let (energy, worst) = max_cross_correlation(&spec)?;
        println!("{name}: column energy {energy:.1}, worst normalised cross-correlation {worst:.4}");
    }
    // distinct ZC roots of prime length have correlation 1/sqrt(N)
    println!("1/sqrt(139) = {:.4}", 1.0 / 139f64.sqrt());
    Ok(())
}

#[allow(dead_code)]
fn main() -> umac::Result<()> {
    run()
}
