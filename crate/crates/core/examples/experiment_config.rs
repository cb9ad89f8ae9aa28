// Experiment configs: presets, flat or sectioned TOML, validation errors.
//
// Run with `cargo run --example experiment_config`.

use umac::config::{parse_config, preset, preset_names};

pub fn run() -> umac::Result<()> {
    for name in preset_names() {
        let cfg = preset(name)?;
        println!("{name:<24} {:<14} {:<9} K_a {:?}", cfg.scenario.name(), cfg.channel.name(), cfg.ka_list);
    }
    println!("\n{}", preset("sbidma_rayleigh_1024")?.to_toml()?);

    match parse_config("scenario = \"two_step\"\nchannel = \"awgn\"\nwidth = 3\n") {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!("unknown keys are rejected"),
    }
    match parse_config("scenario = \"sbidma\"\n") {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!("required keys are checked"),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> umac::Result<()> {
    run()
}
