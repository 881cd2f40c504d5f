//! Command-line front end: resolve a configuration, run the sweep, emit
//! `results.csv` and `manifest.toml` into the output directory.

use massive_noma_cli::{config, output};

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Parser;

use massive_noma::simulator::{estimate, SystemModel};

#[derive(Debug, Parser)]
#[command(
    name = "massive-noma",
    about = "Link-level outage simulation and closed-form analysis for a massive-MIMO NOMA downlink"
)]
struct Args {
    /// Path to a TOML run configuration (or a previously emitted manifest).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Built-in experiment preset.
    #[arg(long, value_parser = ["fig1", "fig2", "fig3"])]
    preset: Option<String>,

    /// Override the configured trial count.
    #[arg(long)]
    trials: Option<u64>,

    /// Override the configured master seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads for the Monte Carlo loop (default: all cores).
    #[arg(long)]
    workers: Option<usize>,

    /// Skip the Monte Carlo run and emit closed-form values only.
    #[arg(long)]
    analytical_only: bool,

    /// Output directory for results.csv and manifest.toml.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn main() {
    if let Err(err) = run(Args::parse()) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(args: Args) -> Result<()> {
    let mut file = match (&args.config, &args.preset) {
        (Some(path), None) => config::load_config(path)?,
        (None, Some(name)) => config::preset(name)?,
        (None, None) => bail!("either --config or --preset is required"),
        (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
    };
    if let Some(trials) = args.trials {
        file.sweep.trials = trials;
    }
    if let Some(seed) = args.seed {
        file.sweep.seed = seed;
    }

    let run_config = file.resolve()?;
    let model = SystemModel::build(run_config).context("configuration rejected")?;
    for (k, cl) in model.clusters.iter().enumerate() {
        if cl.precoder.rank_deficient() {
            eprintln!(
                "warning: cluster {}: stacked eigenvectors are rank deficient, using M̃ = {} (expected {})",
                k + 1,
                cl.precoder.dim,
                cl.precoder.expected_dim
            );
        }
    }

    let (csv, rejected) = if args.analytical_only {
        (output::render_csv_analytical(&model), None)
    } else {
        let results = run_with_workers(&model, args.workers)?;
        (output::render_csv(&results), Some(results.rejected_draws))
    };

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create output directory {}", args.out.display()))?;
    let csv_path = args.out.join("results.csv");
    std::fs::write(&csv_path, csv)
        .with_context(|| format!("cannot write {}", csv_path.display()))?;
    let manifest_path = args.out.join("manifest.toml");
    std::fs::write(&manifest_path, config::render_manifest(&file, &model, rejected)?)
        .with_context(|| format!("cannot write {}", manifest_path.display()))?;

    eprintln!("wrote {} and {}", csv_path.display(), manifest_path.display());
    Ok(())
}

fn run_with_workers(
    model: &SystemModel,
    workers: Option<usize>,
) -> Result<massive_noma::simulator::RunResults> {
    let results = match workers {
        Some(w) if w > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .context("cannot build worker pool")?
            .install(|| estimate(model)),
        _ => estimate(model),
    }?;
    Ok(results)
}
