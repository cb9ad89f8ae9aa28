//! Minimum-SNR sweeps from a TOML config or a shipped preset.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use umac::config::{load_config, preset, preset_names};
use umac::runner::{run_experiment, summary_table, RunOptions};

#[derive(Parser, Debug)]
#[command(name = "umac-bench", version, about = "Minimum SNR for a target PUPE, per number of active users")]
struct Args {
    /// Experiment config (TOML).
    #[arg(long, conflicts_with = "preset", required_unless_present_any = ["preset", "list_presets"])]
    config: Option<PathBuf>,

    /// Run a shipped preset instead of a config file.
    #[arg(long)]
    preset: Option<String>,

    /// Results CSV; finished points are checkpointed next to it.
    #[arg(long, required_unless_present = "list_presets")]
    out: Option<PathBuf>,

    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Multiplies every trial count.
    #[arg(long, default_value_t = 1.0)]
    trials_scale: f64,

    /// Exit with status 2 if any K_a misses the target within the search range.
    #[arg(long)]
    strict: bool,

    /// Print the preset names and exit.
    #[arg(long)]
    list_presets: bool,
}

fn run(args: Args) -> umac::Result<bool> {
    if args.list_presets {
        for name in preset_names() {
            println!("{name}");
        }
        return Ok(true);
    }
    let (cfg, base_dir) = match (&args.config, &args.preset) {
        (Some(path), _) => (load_config(path)?, path.parent().map(PathBuf::from)),
        (None, Some(name)) => (preset(name)?, None),
        (None, None) => unreachable!("clap requires --config or --preset"),
    };
    let out = args.out.expect("clap requires --out");
    let opts = RunOptions { seed: args.seed, trials_scale: args.trials_scale, threads: None, base_dir };
    let report = run_experiment(&cfg, &out, &opts, &mut std::io::stderr())?;
    let system = cfg.build_system(report.seed)?;
    print!("{}", summary_table(&cfg, &system, &report));
    println!("results written to {}", out.display());
    Ok(report.all_found() || !args.strict)
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: target PUPE not reached for every K_a (--strict)");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
