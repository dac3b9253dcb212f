use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use clap::{Parser, Subcommand};
use serde::Deserialize;

use shapelab::harness::{
    cached_kernel, emit_results, presets, read_csv, run_config, run_transmission, summarize, Context,
    ExperimentConfig,
};
use shapelab::{LinkSpec, WdmGrid};

#[derive(Parser)]
#[command(name = "shapelab", version, about = "PAS over nonlinear WDM links: sweeps, kernels and reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Override the config's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[arg(long, global = true, default_value = "results")]
    out_dir: PathBuf,

    /// Directory for cached kernel coefficients.
    #[arg(long, global = true, default_value = ".shapelab-cache")]
    cache_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run one transmission: first DM, block length and power of the config.
    Run { config: String },
    /// Run the full sweep with launch-power optimization.
    Sweep { config: String },
    /// Precompute the kernel coefficients of a link into the cache.
    Kernel { link_config: String },
    /// Summarize a results CSV.
    Report { results: PathBuf },
    /// List the bundled presets.
    Presets,
}

/// A link-only config: grid, link and optional kernel settings.
#[derive(Deserialize)]
struct LinkConfig {
    grid: WdmGrid,
    link: LinkSpec,
    #[serde(default)]
    kernel_memory: Option<usize>,
    #[serde(default = "default_tol")]
    kernel_rel_tol: f64,
}

fn default_tol() -> f64 {
    1e-6
}

/// A config file path, or the name of a bundled preset.
fn load_config(arg: &str, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = if Path::new(arg).exists() {
        let text = fs::read_to_string(arg).with_context(|| format!("reading {arg}"))?;
        ExperimentConfig::from_toml(&text).with_context(|| format!("parsing {arg}"))?
    } else if let Some(text) = presets::text(arg) {
        ExperimentConfig::from_toml(text)?
    } else {
        bail!("{arg} is neither a file nor a preset ({})", presets::NAMES.join(", "));
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn load_link(arg: &str) -> Result<LinkConfig> {
    if let Ok(cfg) = load_config(arg, None) {
        return Ok(LinkConfig {
            grid: cfg.grid,
            link: cfg.link,
            kernel_memory: cfg.metrics.kernel_memory,
            kernel_rel_tol: cfg.metrics.kernel_rel_tol,
        });
    }
    let text = fs::read_to_string(arg).with_context(|| format!("reading {arg}"))?;
    let lc: LinkConfig = toml::from_str(&text).with_context(|| format!("parsing {arg}"))?;
    lc.grid.validate()?;
    lc.link.validate()?;
    Ok(lc)
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        b = b.num_threads(w.max(1));
    }
    Ok(b.build()?)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match &cli.command {
        Command::Run { config } => {
            let mut cfg = load_config(config, cli.seed)?;
            cfg.shaping.families.truncate(1);
            cfg.shaping.block_lengths.truncate(1);
            let axis = cfg.power_axis()[0];
            cfg.power.launch_power_dbm.truncate(1);
            cfg.power.es_n0_db.truncate(1);
            cfg.power.optimize = false;
            let points = pool(cli.workers)?.install(|| -> Result<_> {
                let ctx = Context::new(cfg.clone(), Some(&cli.cache_dir))?;
                let mut pts = run_transmission(&ctx, cfg.shaping.families[0], cfg.shaping.block_lengths[0], axis);
                for p in &mut pts {
                    p.optimal = true;
                }
                Ok(pts)
            })?;
            let path = emit_results(&cfg, &points, &cli.out_dir)?;
            print!("{}", summarize(&points));
            println!("wrote {}", path.display());
        }
        Command::Sweep { config } => {
            let cfg = load_config(config, cli.seed)?;
            let points = run_config(cfg.clone(), Some(&cli.cache_dir), cli.workers)?;
            let path = emit_results(&cfg, &points, &cli.out_dir)?;
            print!("{}", summarize(&points));
            println!("wrote {}", path.display());
        }
        Command::Kernel { link_config } => {
            let lc = load_link(link_config)?;
            let (k, hit) = pool(cli.workers)?.install(|| {
                cached_kernel(&lc.link, &lc.grid, lc.kernel_memory, lc.kernel_rel_tol, Some(&cli.cache_dir))
            })?;
            println!(
                "{} kernel: N_c = {}, {} rows, peak {:.4e}, imaginary residual {:.3e} of peak",
                if hit { "cached" } else { "computed" },
                k.n_c,
                k.rows.len(),
                k.peak(),
                k.imaginary_residual()
            );
            if k.residual_flagged() {
                log::warn!("imaginary residual exceeds 1e-6 of peak and was discarded");
            }
        }
        Command::Report { results } => {
            let f = fs::File::open(results).with_context(|| format!("opening {}", results.display()))?;
            let points = read_csv(f)?;
            print!("{}", summarize(&points));
        }
        Command::Presets => {
            for n in presets::NAMES {
                println!("{n}");
            }
        }
    }
    Ok(())
}
