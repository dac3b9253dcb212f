use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use super::config::{cpr_label, DmFamily, ExperimentConfig};
use super::run::{run_transmission, Context, ExperimentPoint};
use crate::{Error, Result};

/// Runs the Cartesian sweep of `ctx.config` and, when enabled, refines the
/// launch power around the coarse optimum of every (DM, N, CPR) triple.
/// Points are sorted by coordinates and the optimum of each triple is
/// flagged.
pub fn run_sweep(ctx: &Context) -> Vec<ExperimentPoint> {
    let cfg = &ctx.config;
    let mut jobs = Vec::new();
    for &f in &cfg.shaping.families {
        for &n in &cfg.shaping.block_lengths {
            for &p in cfg.power_axis() {
                jobs.push((f, n, p));
            }
        }
    }
    let mut points = run_jobs(ctx, &jobs);
    if cfg.power.optimize {
        let step = cfg.power.refine_step_db;
        let mut extra = Vec::new();
        for ((f, n, _), p) in best_powers(&points) {
            for q in [p - step, p + step] {
                let job = (f, n, q);
                let done = jobs.iter().chain(&extra).any(|&(a, b, c)| (a, b) == (f, n) && (c - q).abs() < 1e-9);
                if !done {
                    extra.push(job);
                }
            }
        }
        points.extend(run_jobs(ctx, &extra));
    }
    let best = best_powers(&points);
    for p in &mut points {
        let key = (p.family, p.n, p.cpr.clone());
        p.optimal = best.get(&key).is_some_and(|&b| (b - p.power_db).abs() < 1e-9);
    }
    let order: Vec<String> = cfg.cpr.variants().iter().map(cpr_label).collect();
    let rank = |c: &str| order.iter().position(|o| o == c).unwrap_or(usize::MAX);
    points.sort_by(|a, b| {
        let ka = a.key();
        let kb = b.key();
        (ka.0, ka.1, rank(&ka.2), ka.3).cmp(&(kb.0, kb.1, rank(&kb.2), kb.3))
    });
    points
}

/// Builds the context and runs the sweep on a pool of `workers` threads
/// (all cores when `None`).
pub fn run_config(config: ExperimentConfig, cache_dir: Option<&Path>, workers: Option<usize>) -> Result<Vec<ExperimentPoint>> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        b = b.num_threads(w.max(1));
    }
    let pool = b.build().map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| {
        let ctx = Context::new(config, cache_dir)?;
        for w in &ctx.warnings {
            log::warn!("{w}");
        }
        Ok(run_sweep(&ctx))
    })
}

fn run_jobs(ctx: &Context, jobs: &[(DmFamily, usize, f64)]) -> Vec<ExperimentPoint> {
    jobs.par_iter()
        .flat_map_iter(|&(f, n, p)| {
            log::info!("{} N={n} power={p}", f.label());
            run_transmission(ctx, f, n, p)
        })
        .collect()
}

/// The figure of merit used to select launch powers: AIR, or SNR when AIR
/// was not requested.
fn merit(p: &ExperimentPoint) -> Option<f64> {
    p.air.value().or(p.snr_db.value())
}

/// Best power per (DM, N, CPR); ties go to the lower power.
pub fn best_powers(points: &[ExperimentPoint]) -> BTreeMap<(DmFamily, usize, String), f64> {
    let mut best: BTreeMap<(DmFamily, usize, String), (f64, f64)> = BTreeMap::new();
    for p in points {
        let Some(m) = merit(p) else { continue };
        let e = best.entry((p.family, p.n, p.cpr.clone())).or_insert((f64::NEG_INFINITY, p.power_db));
        if m > e.0 || (m == e.0 && p.power_db < e.1) {
            *e = (m, p.power_db);
        }
    }
    best.into_iter().map(|(k, (_, p))| (k, p)).collect()
}
