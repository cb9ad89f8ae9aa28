// Which preambles are active? Orthogonal matching pursuit on a noisy
// superposition of a few dictionary columns.
//
// Run with `cargo run --example omp_activity_detection`.

use std::collections::BTreeSet;

use num_complex::Complex64;
use rand::seq::index::sample;
use umac::channel::{complex_normal, energy};
use umac::detection::{omp_detect, OmpStop};
use umac::sequences::{build_preamble_dictionary, DictionaryKind, PreambleSpec};
use umac::seeding::rng_from_seed;

pub fn run() -> umac::Result<()> {
    let spec = PreambleSpec {
        size: 1024,
        base_length: 278,
        repetitions: 1,
        power_scale: 1.0,
        kind: DictionaryKind::GaussianNormalized,
        zc_cyclic_shift: 0,
    };
    let mut rng = rng_from_seed(42);
    let dict = build_preamble_dictionary(&spec, &mut rng)?;
    let sigma2 = 0.5;
    let (mut hits, mut total) = (0, 0);
    for trial in 0..20 {
        let active: BTreeSet<usize> = sample(&mut rng, dict.len(), 10).into_iter().collect();
        let mut y: Vec<Complex64> = (0..dict.column_len()).map(|_| complex_normal(&mut rng, sigma2)).collect();
        for &j in &active {
            let h = complex_normal(&mut rng, 1.0);
            for (s, c) in y.iter_mut().zip(dict.column(j)) {
                *s += h * c;
            }
        }
        let stop = OmpStop::for_hypothesis(20.0, dict.column_len(), sigma2, energy(&y));
        let found: BTreeSet<usize> = omp_detect(&y, &dict, stop)?.indices.into_iter().collect();
        hits += active.intersection(&found).count();
        total += active.len();
        if trial == 0 {
            println!("active {active:?}\nfound  {found:?}");
        }
    }
    println!("Rayleigh users detected: {hits}/{total}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> umac::Result<()> {
    run()
}
